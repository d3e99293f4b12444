//! C ABI over `magic_flatness`.
//!
//! Every fallible entry point returns an [`MfStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can be
//! fetched with [`mf_last_error_message`]. States are opaque [`MfState`]
//! handles created by the `mf_state_*` constructors and released with
//! [`mf_state_free`]. Panics never cross the boundary; they map to
//! `MF_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use magic_flatness::clifford::{apply_clifford, random_clifford};
use magic_flatness::measures::{ipr, multifractal_flatness, participation_entropy, stabilizer_entropy};
use magic_flatness::oracles::{haar_flatness_std, haar_mean_flatness, sample_haar_state, theorem_rhs};
use magic_flatness::orbit::{estimate_m2, orbit_average_mc, substream, McConfig, Protocol};
use magic_flatness::readout::{device_experiment, DeviceConfig, NegativityPolicy, ReadoutModel};
use magic_flatness::{Error, Statevector};
use num_complex::Complex64;

#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum MfStatus {
    Ok = 0,
    InvalidInput = 1,
    DimensionMismatch = 2,
    NotUnitary = 3,
    Unsupported = 4,
    SingularModel = 5,
    NullPointer = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum MfProtocol {
    Global = 0,
    LocalWalk = 1,
    LayerWalk = 2,
    Exact = 3,
}

impl From<MfProtocol> for Protocol {
    fn from(p: MfProtocol) -> Self {
        match p {
            MfProtocol::Global => Protocol::Global,
            MfProtocol::LocalWalk => Protocol::LocalWalk,
            MfProtocol::LayerWalk => Protocol::LayerWalk,
            MfProtocol::Exact => Protocol::Exact,
        }
    }
}

/// Opaque pure state.
pub struct MfState {
    inner: Statevector,
}

#[repr(C)]
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct MfOrbitEstimate {
    pub mean_flatness: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub m2_estimate: f64,
    pub m2_std_error: f64,
    pub out_of_range: bool,
}

#[repr(C)]
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct MfM2Estimate {
    pub m2: f64,
    pub std_error: f64,
    pub out_of_range: bool,
}

#[repr(C)]
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct MfDeviceRecord {
    pub theta: f64,
    pub f_dig: f64,
    pub f_corr: f64,
    pub f_ex: f64,
    pub sigma_stat: f64,
    pub sigma_dig: f64,
    pub clipped_realizations: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

struct Failure(MfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidInput(_) => MfStatus::InvalidInput,
            Error::DimensionMismatch { .. } => MfStatus::DimensionMismatch,
            Error::NotUnitary { .. } => MfStatus::NotUnitary,
            Error::Unsupported(_) => MfStatus::Unsupported,
            Error::SingularModel(_) => MfStatus::SingularModel,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MfStatus::NullPointer, format!("{what} is null"))
}

fn call<F>(f: F) -> MfStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".to_owned());
        Err(Failure(MfStatus::Panic, msg))
    });
    match result {
        Ok(()) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MfStatus::Ok
        }
        Err(Failure(status, msg)) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
            status
        }
    }
}

unsafe fn state_ref<'a>(state: *const MfState) -> Result<&'a Statevector, Failure> {
    state.as_ref().map(|s| &s.inner).ok_or_else(|| null("state"))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_state(out: *mut *mut MfState, s: Statevector) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(Box::into_raw(Box::new(MfState { inner: s })));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL if the last call
/// succeeded. Free with [`mf_string_free`].
#[no_mangle]
pub extern "C" fn mf_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .and_then(|m| CString::new(m.replace('\0', " ")).ok())
            .map_or(ptr::null_mut(), CString::into_raw)
    })
}

/// # Safety
/// `s` must come from [`mf_last_error_message`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `|0…0⟩` on `n_qubits` qubits.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn mf_state_zero(n_qubits: usize, out: *mut *mut MfState) -> MfStatus {
    call(|| write_state(out, Statevector::zero(n_qubits)?))
}

/// Basis state from a bit string whose character `k` is qubit `k`.
///
/// # Safety
/// `bits` must be a NUL-terminated string; `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn mf_state_basis(n_qubits: usize, bits: *const c_char, out: *mut *mut MfState) -> MfStatus {
    call(|| {
        if bits.is_null() {
            return Err(null("bits"));
        }
        let bits = CStr::from_ptr(bits)
            .to_str()
            .map_err(|_| Failure(MfStatus::InvalidInput, "bits are not UTF-8".into()))?;
        write_state(out, Statevector::basis(n_qubits, bits)?)
    })
}

/// `(cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩)^{⊗n}`.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn mf_state_bloch_product(
    theta: f64,
    phi: f64,
    n_qubits: usize,
    out: *mut *mut MfState,
) -> MfStatus {
    call(|| write_state(out, Statevector::bloch(theta, phi).tensor_power(n_qubits)?))
}

/// Haar-random state drawn from `seed`.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn mf_state_haar(n_qubits: usize, seed: u64, out: *mut *mut MfState) -> MfStatus {
    call(|| write_state(out, sample_haar_state(n_qubits, &mut substream(seed, 0))?))
}

/// State from `len` complex amplitudes split into real and imaginary arrays.
/// `len` must be a power of two and the vector normalized within 1e-10.
///
/// # Safety
/// `re` and `im` must each point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn mf_state_from_amplitudes(
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut MfState,
) -> MfStatus {
    call(|| {
        if re.is_null() || im.is_null() {
            return Err(null("amplitude array"));
        }
        let re = std::slice::from_raw_parts(re, len);
        let im = std::slice::from_raw_parts(im, len);
        let amps = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        write_state(out, Statevector::from_amplitudes(amps)?)
    })
}

/// # Safety
/// `state` must be a live handle; `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn mf_state_clone(state: *const MfState, out: *mut *mut MfState) -> MfStatus {
    call(|| write_state(out, state_ref(state)?.clone()))
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `state` must be NULL or a live handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mf_state_free(state: *mut MfState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Qubit count, or 0 for NULL.
///
/// # Safety
/// `state` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_state_n_qubits(state: *const MfState) -> usize {
    state.as_ref().map_or(0, |s| s.inner.n_qubits())
}

/// Writes the `2^N` basis probabilities; `len` must equal `2^N`.
///
/// # Safety
/// `state` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mf_state_probabilities(state: *const MfState, out: *mut f64, len: usize) -> MfStatus {
    call(|| {
        let s = state_ref(state)?;
        if out.is_null() {
            return Err(null("output array"));
        }
        if len != s.dim() {
            return Err(Error::DimensionMismatch { expected: s.dim(), found: len }.into());
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&s.probabilities());
        Ok(())
    })
}

/// Applies `exp(−iθ/2 X_i X_j)` in place.
///
/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_state_apply_rxx(state: *mut MfState, theta: f64, i: usize, j: usize) -> MfStatus {
    call(|| {
        let s = state.as_mut().ok_or_else(|| null("state"))?;
        s.inner.apply_rxx(theta, i, j)?;
        Ok(())
    })
}

/// Applies a uniformly random Clifford drawn from `seed` in place.
///
/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_state_apply_random_clifford(state: *mut MfState, seed: u64) -> MfStatus {
    call(|| {
        let s = state.as_mut().ok_or_else(|| null("state"))?;
        let c = random_clifford(s.inner.n_qubits(), &mut substream(seed, 0))?;
        s.inner = apply_clifford(&s.inner, &c)?;
        Ok(())
    })
}

/// `I_q = Σ p^q`.
///
/// # Safety
/// `state` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mf_ipr(state: *const MfState, q: f64, out: *mut f64) -> MfStatus {
    call(|| write(out, ipr(state_ref(state)?, q)?))
}

/// Participation entropy `S_q` in bits.
///
/// # Safety
/// `state` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mf_participation_entropy(state: *const MfState, q: f64, out: *mut f64) -> MfStatus {
    call(|| write(out, participation_entropy(state_ref(state)?, q)?))
}

/// Stabilizer entropy `M_q` in bits.
///
/// # Safety
/// `state` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mf_stabilizer_entropy(state: *const MfState, q: f64, out: *mut f64) -> MfStatus {
    call(|| write(out, stabilizer_entropy(state_ref(state)?, q)?))
}

/// Multifractal flatness `I_3 − I_2²`.
///
/// # Safety
/// `state` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mf_flatness(state: *const MfState, out: *mut f64) -> MfStatus {
    call(|| write(out, multifractal_flatness(state_ref(state)?)))
}

/// Clifford-orbit average of the flatness. `MF_PROTOCOL_EXACT` ignores
/// `n_samples` and `seed` and needs at most two qubits.
///
/// # Safety
/// `state` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mf_orbit_average(
    state: *const MfState,
    protocol: MfProtocol,
    n_samples: u64,
    seed: u64,
    out: *mut MfOrbitEstimate,
) -> MfStatus {
    call(|| {
        let s = state_ref(state)?;
        let e = orbit_average_mc(s, &McConfig::new(protocol.into(), n_samples as usize, seed))?;
        write(
            out,
            MfOrbitEstimate {
                mean_flatness: e.mean_flatness,
                std_error: e.std_error,
                n_samples: e.n_samples as u64,
                m2_estimate: e.m2_estimate,
                m2_std_error: e.m2_std_error,
                out_of_range: e.out_of_range,
            },
        )
    })
}

/// Recovers `M₂` from a mean flatness and its standard error.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mf_estimate_m2(mean_flatness: f64, std_error: f64, d: usize, out: *mut MfM2Estimate) -> MfStatus {
    call(|| {
        let e = estimate_m2(mean_flatness, std_error, d)?;
        write(out, MfM2Estimate { m2: e.m2, std_error: e.std_error, out_of_range: e.out_of_range })
    })
}

/// `2(1 − 2^{−M₂})/((d+1)(d+2))`.
#[no_mangle]
pub extern "C" fn mf_theorem_rhs(m2: f64, d: usize) -> f64 {
    theorem_rhs(m2, d)
}

/// Haar average of the flatness.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mf_haar_mean_flatness(d: u64, out: *mut f64) -> MfStatus {
    call(|| write(out, haar_mean_flatness(d)?))
}

/// Haar standard deviation of the flatness of a single random state.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mf_haar_flatness_std(d: u64, out: *mut f64) -> MfStatus {
    call(|| write(out, haar_flatness_std(d)?))
}

/// Simulated two-qubit readout experiment on `R_XX(θ)|00⟩`, one record per
/// angle. `n_shots == 0` uses exact probabilities. With `clip` negative
/// mitigated entries are zeroed and the vector renormalized before the flatness.
///
/// # Safety
/// `thetas` must point to `n_thetas` readable doubles and `out` to
/// `n_thetas` writable records.
#[no_mangle]
pub unsafe extern "C" fn mf_device_experiment(
    thetas: *const f64,
    n_thetas: usize,
    n_realizations: usize,
    n_shots: u64,
    p: f64,
    q: f64,
    seed: u64,
    clip: bool,
    out: *mut MfDeviceRecord,
) -> MfStatus {
    call(|| {
        if thetas.is_null() || out.is_null() {
            return Err(null("angle or record array"));
        }
        let cfg = DeviceConfig {
            thetas: std::slice::from_raw_parts(thetas, n_thetas).to_vec(),
            n_realizations,
            n_shots: (n_shots > 0).then_some(n_shots),
            model: ReadoutModel::new(p, q)?,
            seed,
            negativity: if clip { NegativityPolicy::Clip } else { NegativityPolicy::Keep },
        };
        let rows = device_experiment(&cfg)?;
        let out = std::slice::from_raw_parts_mut(out, n_thetas);
        for (slot, r) in out.iter_mut().zip(rows) {
            *slot = MfDeviceRecord {
                theta: r.theta,
                f_dig: r.f_dig,
                f_corr: r.f_corr,
                f_ex: r.f_ex,
                sigma_stat: r.sigma_stat,
                sigma_dig: r.sigma_dig,
                clipped_realizations: r.clipped_realizations as u64,
            };
        }
        Ok(())
    })
}
