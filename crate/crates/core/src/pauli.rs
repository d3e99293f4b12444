//! Pauli strings as `(x_mask, z_mask)` bit pairs and their expectation values.
//!
//! Site `k` decodes as `(0,0) → I`, `(1,0) → X`, `(1,1) → Y`, `(0,1) → Z`.
//! The operator is `i^{#Y} X^x Z^z`, which is Hermitian.

use std::fmt;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::state::Statevector;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    pub n_qubits: usize,
    pub x_mask: u64,
    pub z_mask: u64,
}

impl PauliString {
    pub fn new(n_qubits: usize, x_mask: u64, z_mask: u64) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 63 {
            return Err(invalid(format!("Pauli strings support 1..=63 qubits, got {n_qubits}")));
        }
        let full = (1u64 << n_qubits) - 1;
        if x_mask & !full != 0 || z_mask & !full != 0 {
            return Err(invalid("Pauli masks have bits beyond the register"));
        }
        Ok(Self { n_qubits, x_mask, z_mask })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { n_qubits, x_mask: 0, z_mask: 0 }
    }

    /// Parses `"IXYZ"`-style labels, character `k` acting on qubit `k`.
    pub fn parse(label: &str) -> Result<Self> {
        let (mut x, mut z) = (0u64, 0u64);
        let mut n = 0;
        for (k, ch) in label.chars().enumerate() {
            match ch {
                'I' => {}
                'X' => x |= 1 << k,
                'Y' => {
                    x |= 1 << k;
                    z |= 1 << k;
                }
                'Z' => z |= 1 << k,
                other => return Err(invalid(format!("invalid Pauli letter {other:?}"))),
            }
            n = k + 1;
        }
        Self::new(n, x, z)
    }

    pub fn y_count(&self) -> u32 {
        (self.x_mask & self.z_mask).count_ones()
    }

    pub fn weight(&self) -> u32 {
        (self.x_mask | self.z_mask).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// Whether `self` and `other` commute.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        symplectic_product(self.x_mask, self.z_mask, other.x_mask, other.z_mask) == 0
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.n_qubits {
            let c = match (self.x_mask >> k & 1, self.z_mask >> k & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (1, 1) => 'Y',
                _ => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Binary symplectic form `x₁·z₂ + z₁·x₂ mod 2`.
pub(crate) fn symplectic_product(x1: u64, z1: u64, x2: u64, z2: u64) -> u32 {
    ((x1 & z2).count_ones() + (z1 & x2).count_ones()) & 1
}

/// `i^k` for `k mod 4`.
pub(crate) fn i_pow(k: u32) -> C64 {
    match k & 3 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Complex value of `⟨Ψ|P|Ψ⟩` before discarding the (vanishing) imaginary part.
pub fn pauli_expectation_complex(state: &Statevector, p: &PauliString) -> Result<C64> {
    state.check_same(p.n_qubits)?;
    let amps = state.amplitudes();
    let x = p.x_mask as usize;
    let z = p.z_mask as usize;
    let mut acc = C64::new(0.0, 0.0);
    for (sigma, a) in amps.iter().enumerate() {
        let term = amps[sigma ^ x].conj() * a;
        if (z & sigma).count_ones() & 1 == 1 {
            acc -= term;
        } else {
            acc += term;
        }
    }
    Ok(acc * i_pow(p.y_count()))
}

/// `⟨Ψ|P|Ψ⟩`, an `O(d)` pass pairing `σ` with `σ ⊕ x_mask`.
pub fn pauli_expectation(state: &Statevector, p: &PauliString) -> Result<f64> {
    Ok(pauli_expectation_complex(state, p)?.re)
}

/// All `4^N` strings, identity first, ordered lexicographically by `(x_mask, z_mask)`.
pub fn enumerate_paulis(n_qubits: usize) -> impl Iterator<Item = PauliString> {
    let d = 1u64 << n_qubits;
    (0..d).flat_map(move |x| (0..d).map(move |z| PauliString { n_qubits, x_mask: x, z_mask: z }))
}

/// In-place unnormalized Walsh–Hadamard transform over `f64` pairs.
fn walsh_hadamard(buf: &mut [f64]) {
    let n = buf.len();
    let mut h = 1;
    while h < n {
        for base in (0..n).step_by(h << 1) {
            for i in base..base + h {
                let (a, b) = (buf[i], buf[i + h]);
                buf[i] = a + b;
                buf[i + h] = a - b;
            }
        }
        h <<= 1;
    }
}

/// Expectations of every Pauli string, indexed `x_mask · d + z_mask`.
///
/// For each `x_mask` the values over all `z_mask` are a Walsh–Hadamard
/// transform of the coherence row `conj(ψ[σ⊕x])·ψ[σ]`, so the full table
/// costs `O(N·4^N)` instead of `O(8^N)`.
pub fn all_expectations(state: &Statevector) -> Vec<f64> {
    let amps = state.amplitudes();
    let d = amps.len();
    let mut out = vec![0.0; d * d];
    out.par_chunks_mut(d).enumerate().for_each_init(
        || (vec![0.0; d], vec![0.0; d]),
        |(re, im), (x, row)| {
            for sigma in 0..d {
                let t = amps[sigma ^ x].conj() * amps[sigma];
                re[sigma] = t.re;
                im[sigma] = t.im;
            }
            walsh_hadamard(re);
            walsh_hadamard(im);
            for (z, slot) in row.iter_mut().enumerate() {
                // real part of i^{#Y}·(re + i·im)
                *slot = match ((x & z) as u64).count_ones() & 3 {
                    0 => re[z],
                    1 => -im[z],
                    2 => -re[z],
                    _ => im[z],
                };
            }
        },
    );
    out
}

/// `Σ_P ⟨P⟩^{2k}`, streamed over the expectation table. Used for `Σ⟨P⟩²`
/// (purity, equal to `d`) and `Σ⟨P⟩⁴`.
pub fn expectation_power_sum(state: &Statevector, power: f64) -> f64 {
    all_expectations(state).iter().map(|e| e.abs().powf(power)).sum()
}

/// `‖Ξ‖² = Σ_P ⟨P⟩⁴ / d²`.
pub fn xi_norm(state: &Statevector) -> f64 {
    let d = state.dim() as f64;
    let sum: f64 = all_expectations(state).iter().map(|e| (e * e) * (e * e)).sum();
    sum / (d * d)
}

/// Direct-kernel reference for [`all_expectations`]; `O(8^N)`.
pub fn all_expectations_direct(state: &Statevector) -> Result<Vec<f64>> {
    if state.n_qubits() > 12 {
        return Err(Error::Unsupported(format!(
            "direct Pauli enumeration on {} qubits",
            state.n_qubits()
        )));
    }
    enumerate_paulis(state.n_qubits()).map(|p| pauli_expectation(state, &p)).collect()
}
