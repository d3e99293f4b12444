//! Averages of the multifractal flatness over the Clifford orbit of a state,
//! and their inversion into a stabilizer-entropy estimate.
//!
//! Randomness comes from a single master seed. Sample `i` of the global
//! protocol and chain `c` of a walk protocol each own the ChaCha stream
//! `(seed, i)` / `(seed, c)`, so results do not depend on thread count.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::{
    apply_clifford, enumerate_cliffords, random_clifford, random_two_qubit_clifford, run_circuit,
};
use crate::error::{invalid, Error, Result};
use crate::measures::{multifractal_flatness, stabilizer_entropy};
use crate::oracles::theorem_rhs;
use crate::state::Statevector;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Fresh uniform N-qubit Clifford per sample.
    Global,
    /// Random two-qubit Clifford on a random bond `(i, i+1 mod N)` per step.
    LocalWalk,
    /// Full brickwork layer of two-qubit Cliffords per step, offset alternating.
    LayerWalk,
    /// Exhaustive enumeration (N ≤ 2).
    Exact,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Global => "global",
            Protocol::LocalWalk => "local_walk",
            Protocol::LayerWalk => "layer_walk",
            Protocol::Exact => "exact",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "global" => Ok(Protocol::Global),
            "local_walk" => Ok(Protocol::LocalWalk),
            "layer_walk" => Ok(Protocol::LayerWalk),
            "exact" => Ok(Protocol::Exact),
            _ => Err(invalid(format!("unknown protocol {s:?}"))),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitEstimate {
    pub mean_flatness: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub m2_estimate: f64,
    pub m2_std_error: f64,
    /// Set when the mean flatness is at or beyond the maximal-magic bound and
    /// the inversion has no real solution.
    pub out_of_range: bool,
    pub protocol: Protocol,
}

/// Stabilizer entropy recovered from a flatness estimate.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct M2Estimate {
    pub m2: f64,
    pub std_error: f64,
    pub out_of_range: bool,
}

/// Inverts the orbit-average relation: `M₂ = −log₂[1 − (d+1)(d+2)F̂/2]`, with
/// the delta-method error `((d+1)(d+2)/2)·σ / (ln2·(1 − (d+1)(d+2)F̂/2))`.
///
/// A non-positive log argument yields `out_of_range` with `m2 = +∞`.
pub fn estimate_m2(mean_flatness: f64, std_error: f64, d: usize) -> Result<M2Estimate> {
    if d < 2 {
        return Err(invalid(format!("dimension must be >= 2, got {d}")));
    }
    if std_error < 0.0 || !std_error.is_finite() || !mean_flatness.is_finite() {
        return Err(invalid("flatness estimate must be finite with std_error >= 0"));
    }
    let scale = (d as f64 + 1.0) * (d as f64 + 2.0) / 2.0;
    let arg = 1.0 - scale * mean_flatness;
    if arg <= 0.0 {
        return Ok(M2Estimate { m2: f64::INFINITY, std_error: f64::INFINITY, out_of_range: true });
    }
    let m2 = -arg.log2();
    Ok(M2Estimate {
        m2: if m2 == 0.0 { 0.0 } else { m2 },
        std_error: scale * std_error / (std::f64::consts::LN_2 * arg),
        out_of_range: false,
    })
}

/// Leave-one-out jackknife of the `M₂` map over flatness samples.
pub fn jackknife_m2(samples: &[f64], d: usize) -> Result<M2Estimate> {
    let n = samples.len();
    if n < 2 {
        return Err(invalid("jackknife needs at least two samples"));
    }
    let total: f64 = samples.iter().sum();
    let full = estimate_m2(total / n as f64, 0.0, d)?;
    if full.out_of_range {
        return Ok(full);
    }
    let mut loo = Vec::with_capacity(n);
    for &s in samples {
        let e = estimate_m2((total - s) / (n - 1) as f64, 0.0, d)?;
        if e.out_of_range {
            return Ok(M2Estimate { m2: full.m2, std_error: f64::INFINITY, out_of_range: true });
        }
        loo.push(e.m2);
    }
    let mean_loo = loo.iter().sum::<f64>() / n as f64;
    let var = loo.iter().map(|v| (v - mean_loo).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    Ok(M2Estimate {
        m2: n as f64 * full.m2 - (n - 1) as f64 * mean_loo,
        std_error: var.sqrt(),
        out_of_range: false,
    })
}

/// Sample mean and standard error (sample sd / √n).
pub fn mean_and_std_error(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Independent RNG stream `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn finish(samples: &[f64], d: usize, protocol: Protocol) -> Result<OrbitEstimate> {
    let (mean, se) = mean_and_std_error(samples);
    let m2 = estimate_m2(mean, se, d)?;
    Ok(OrbitEstimate {
        mean_flatness: mean,
        std_error: se,
        n_samples: samples.len(),
        m2_estimate: m2.m2,
        m2_std_error: m2.std_error,
        out_of_range: m2.out_of_range,
        protocol,
    })
}

/// Exact `(1/|C_N|) Σ_C F(C|Ψ⟩)` by enumerating the group (N ≤ 2).
pub fn orbit_average_exact(state: &Statevector) -> Result<OrbitEstimate> {
    let values = orbit_values_exact(state, multifractal_flatness)?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let m2 = estimate_m2(mean, 0.0, state.dim())?;
    Ok(OrbitEstimate {
        mean_flatness: mean,
        std_error: 0.0,
        n_samples: values.len(),
        m2_estimate: m2.m2,
        m2_std_error: 0.0,
        out_of_range: m2.out_of_range,
        protocol: Protocol::Exact,
    })
}

/// `f(C|Ψ⟩)` for every Clifford `C` (N ≤ 2), in enumeration order.
pub fn orbit_values_exact<F>(state: &Statevector, f: F) -> Result<Vec<f64>>
where
    F: Fn(&Statevector) -> f64 + Sync,
{
    let n = state.n_qubits();
    if n > 2 {
        return Err(Error::Unsupported(format!(
            "exact orbit average needs N <= 2 (got {n}); use a Monte Carlo protocol"
        )));
    }
    let group = enumerate_cliffords(n)?;
    group
        .par_iter()
        .map(|c| apply_clifford(state, c).map(|s| f(&s)))
        .collect()
}

/// Monte Carlo settings for [`orbit_average_mc`].
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct McConfig {
    pub protocol: Protocol,
    pub n_samples: usize,
    pub seed: u64,
    /// Independent walk chains whose records are pooled (walk protocols only).
    pub chains: usize,
    /// Walk steps discarded before recording starts.
    pub burn_in: usize,
}

impl McConfig {
    pub fn new(protocol: Protocol, n_samples: usize, seed: u64) -> Self {
        Self { protocol, n_samples, seed, chains: 1, burn_in: 0 }
    }
}

/// Clifford-orbit Monte Carlo estimate of the mean flatness.
pub fn orbit_average_mc(state: &Statevector, config: &McConfig) -> Result<OrbitEstimate> {
    if config.protocol == Protocol::Exact {
        return orbit_average_exact(state);
    }
    let samples = orbit_samples(state, config, multifractal_flatness)?;
    finish(&samples, state.dim(), config.protocol)
}

/// Raw per-sample values of `f` along the chosen protocol.
pub fn orbit_samples<F>(state: &Statevector, config: &McConfig, f: F) -> Result<Vec<f64>>
where
    F: Fn(&Statevector) -> f64 + Sync,
{
    if config.n_samples < 2 {
        return Err(invalid(format!("need at least 2 samples, got {}", config.n_samples)));
    }
    match config.protocol {
        Protocol::Exact => orbit_values_exact(state, f),
        Protocol::Global => global_samples(state, config.seed, 0, config.n_samples, &f),
        Protocol::LocalWalk | Protocol::LayerWalk => {
            if state.n_qubits() < 2 {
                return Err(invalid("walk protocols need at least 2 qubits"));
            }
            let chains = config.chains.max(1);
            let per_chain: Vec<usize> = (0..chains)
                .map(|c| config.n_samples / chains + usize::from(c < config.n_samples % chains))
                .collect();
            let pooled: Vec<Vec<f64>> = per_chain
                .par_iter()
                .enumerate()
                .map(|(c, &len)| {
                    let mut walk = Walk::new(state.clone(), config.protocol, substream(config.seed, c as u64));
                    for _ in 0..config.burn_in {
                        walk.step();
                    }
                    (0..len)
                        .map(|_| {
                            walk.step();
                            f(&walk.state)
                        })
                        .collect()
                })
                .collect();
            Ok(pooled.concat())
        }
    }
}

fn global_samples<F>(state: &Statevector, seed: u64, start: usize, len: usize, f: &F) -> Result<Vec<f64>>
where
    F: Fn(&Statevector) -> f64 + Sync,
{
    let n = state.n_qubits();
    (start..start + len)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let c = random_clifford(n, &mut rng)?;
            let mut s = state.clone();
            run_circuit(&mut s, &c.circuit());
            Ok(f(&s))
        })
        .collect()
}

/// A random walk on the orbit driven by two-qubit Cliffords on a periodic chain.
struct Walk {
    state: Statevector,
    protocol: Protocol,
    rng: ChaCha8Rng,
    layer: usize,
}

impl Walk {
    fn new(state: Statevector, protocol: Protocol, rng: ChaCha8Rng) -> Self {
        Self { state, protocol, rng, layer: 0 }
    }

    fn apply_random_gate(&mut self, a: usize, b: usize) {
        let (u, _) = random_two_qubit_clifford(&mut self.rng);
        self.state.apply_two_qubit_unchecked(a, b, &u);
    }

    fn step(&mut self) {
        let n = self.state.n_qubits();
        match self.protocol {
            Protocol::LocalWalk => {
                let i = self.rng.gen_range(0..n);
                self.apply_random_gate(i, (i + 1) % n);
            }
            Protocol::LayerWalk => {
                let offset = self.layer % 2;
                for j in 0..n / 2 {
                    let a = (offset + 2 * j) % n;
                    self.apply_random_gate(a, (a + 1) % n);
                }
                self.layer += 1;
            }
            Protocol::Global | Protocol::Exact => unreachable!("not a walk protocol"),
        }
    }
}

/// Result of a samples-to-accuracy run.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCount {
    /// First sample count at which `σ(M₂) < target` (or the cap).
    pub n_samples: usize,
    pub saturated: bool,
    pub m2_estimate: f64,
    pub m2_std_error: f64,
}

/// Settings for [`samples_to_accuracy`].
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct AccuracyConfig {
    pub protocol: Protocol,
    pub target_sigma: f64,
    pub seed: u64,
    pub max_samples: usize,
    /// The stopping rule is not evaluated before this many samples.
    pub min_samples: usize,
}

impl AccuracyConfig {
    pub fn new(protocol: Protocol, target_sigma: f64, seed: u64) -> Self {
        Self { protocol, target_sigma, seed, max_samples: 1 << 22, min_samples: 16 }
    }
}

/// Streams flatness samples until the propagated `σ(M₂)` first drops below
/// the target.
pub fn samples_to_accuracy(state: &Statevector, config: &AccuracyConfig) -> Result<SampleCount> {
    if !(config.target_sigma > 0.0) {
        return Err(invalid("target sigma must be positive"));
    }
    if config.protocol == Protocol::Exact {
        return Err(invalid("samples-to-accuracy needs a sampling protocol"));
    }
    let min = config.min_samples.max(2);
    if config.max_samples < min {
        return Err(invalid("max_samples is below the minimum sample count"));
    }
    let d = state.dim();
    let mut acc = Running::default();
    let check = |acc: &Running| -> Result<Option<SampleCount>> {
        if acc.n < min {
            return Ok(None);
        }
        let (mean, se) = acc.mean_se();
        let e = estimate_m2(mean, se, d)?;
        if !e.out_of_range && e.std_error < config.target_sigma {
            return Ok(Some(SampleCount {
                n_samples: acc.n,
                saturated: false,
                m2_estimate: e.m2,
                m2_std_error: e.std_error,
            }));
        }
        Ok(None)
    };
    match config.protocol {
        Protocol::Global => {
            let mut start = 0;
            let mut chunk = 256;
            while start < config.max_samples {
                let len = chunk.min(config.max_samples - start);
                let batch = global_samples(state, config.seed, start, len, &multifractal_flatness)?;
                for v in batch {
                    acc.push(v);
                    if let Some(hit) = check(&acc)? {
                        return Ok(hit);
                    }
                }
                start += len;
                chunk = (chunk * 2).min(1 << 16);
            }
        }
        Protocol::LocalWalk | Protocol::LayerWalk => {
            if state.n_qubits() < 2 {
                return Err(invalid("walk protocols need at least 2 qubits"));
            }
            let mut walk = Walk::new(state.clone(), config.protocol, substream(config.seed, 0));
            while acc.n < config.max_samples {
                walk.step();
                acc.push(multifractal_flatness(&walk.state));
                if let Some(hit) = check(&acc)? {
                    return Ok(hit);
                }
            }
        }
        Protocol::Exact => unreachable!(),
    }
    let (mean, se) = acc.mean_se();
    let e = estimate_m2(mean, se, d)?;
    Ok(SampleCount { n_samples: acc.n, saturated: true, m2_estimate: e.m2, m2_std_error: e.std_error })
}

/// Welford accumulator.
#[derive(Default)]
struct Running {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn mean_se(&self) -> (f64, f64) {
        if self.n < 2 {
            return (self.mean, 0.0);
        }
        let var = (self.m2 / (self.n - 1) as f64).max(0.0);
        (self.mean, (var / self.n as f64).sqrt())
    }
}

/// Exact `M₂` and the theorem prediction for direct comparison.
pub fn theorem_reference(state: &Statevector) -> Result<(f64, f64)> {
    let m2 = stabilizer_entropy(state, 2.0)?;
    Ok((m2, theorem_rhs(m2, state.dim())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::CliffordTableau;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn t_state() -> Statevector {
        Statevector::bloch(FRAC_PI_2, FRAC_PI_4)
    }

    #[test]
    fn estimate_m2_examples() {
        let e = estimate_m2(0.0, 0.0, 8).unwrap();
        assert_eq!((e.m2, e.out_of_range), (0.0, false));
        let e = estimate_m2(1.0 / 24.0, 0.0, 2).unwrap();
        assert!((e.m2 - (4.0f64 / 3.0).log2()).abs() < 1e-14);
        let e = estimate_m2(1.0 / 12.0, 0.0, 2).unwrap();
        assert!(!e.out_of_range && (e.m2 - 1.0).abs() < 1e-14);
        // 1 − 12·(1/6)/2 = 0
        assert!(estimate_m2(1.0 / 6.0, 0.0, 2).unwrap().out_of_range);
        assert!(estimate_m2(0.5, 0.0, 2).unwrap().out_of_range);
        assert!(estimate_m2(0.0, 0.0, 1).is_err());
    }

    #[test]
    fn delta_method_matches_finite_difference() {
        let (f, d) = (0.01, 4);
        let h = 1e-7;
        let slope = (estimate_m2(f + h, 0.0, d).unwrap().m2 - estimate_m2(f - h, 0.0, d).unwrap().m2)
            / (2.0 * h);
        let e = estimate_m2(f, 1e-3, d).unwrap();
        assert!((e.std_error - slope * 1e-3).abs() < 1e-6);
    }

    #[test]
    fn exact_orbit_examples() {
        let z = orbit_average_exact(&Statevector::zero(1).unwrap()).unwrap();
        assert!(z.mean_flatness.abs() < 1e-15);
        let t = orbit_average_exact(&t_state()).unwrap();
        assert_eq!(t.n_samples, 24);
        assert!((t.mean_flatness - 1.0 / 24.0).abs() < 1e-14);
        assert!((t.m2_estimate - (4.0f64 / 3.0).log2()).abs() < 1e-12);
        assert!(orbit_average_exact(&Statevector::zero(3).unwrap()).is_err());
    }

    #[test]
    fn stabilizer_samples_are_zero() {
        let mut rng = substream(3, 0);
        let c = random_clifford(3, &mut rng).unwrap();
        let s = apply_clifford(&Statevector::zero(3).unwrap(), &c).unwrap();
        for protocol in [Protocol::Global, Protocol::LocalWalk, Protocol::LayerWalk] {
            let v = orbit_samples(&s, &McConfig::new(protocol, 50, 1), multifractal_flatness).unwrap();
            assert!(v.iter().all(|x| x.abs() < 1e-12), "{protocol}");
        }
    }

    #[test]
    fn mc_is_reproducible_and_validated() {
        let s = t_state().tensor_power(3).unwrap();
        let cfg = McConfig::new(Protocol::Global, 64, 99);
        assert_eq!(orbit_average_mc(&s, &cfg).unwrap(), orbit_average_mc(&s, &cfg).unwrap());
        let walk = McConfig { chains: 3, ..McConfig::new(Protocol::LayerWalk, 64, 99) };
        assert_eq!(orbit_average_mc(&s, &walk).unwrap(), orbit_average_mc(&s, &walk).unwrap());
        assert_eq!(orbit_average_mc(&s, &walk).unwrap().n_samples, 64);
        assert!(orbit_average_mc(&s, &McConfig::new(Protocol::Global, 1, 0)).is_err());
        assert!(orbit_average_mc(&t_state(), &McConfig::new(Protocol::LocalWalk, 10, 0)).is_err());
    }

    #[test]
    fn jackknife_agrees_with_delta_method() {
        let s = t_state().tensor_power(2).unwrap();
        let v = orbit_samples(&s, &McConfig::new(Protocol::Global, 4000, 5), multifractal_flatness)
            .unwrap();
        let (mean, se) = mean_and_std_error(&v);
        let delta = estimate_m2(mean, se, 4).unwrap();
        let jack = jackknife_m2(&v, 4).unwrap();
        assert!((jack.m2 - delta.m2).abs() < 0.2 * delta.std_error + 1e-9);
        assert!((jack.std_error / delta.std_error - 1.0).abs() < 0.1);
    }

    #[test]
    fn accuracy_on_stabilizer_is_minimum() {
        let cfg = AccuracyConfig::new(Protocol::Global, 0.1, 1);
        let r = samples_to_accuracy(&Statevector::zero(3).unwrap(), &cfg).unwrap();
        assert_eq!(r.n_samples, cfg.min_samples);
        assert!(!r.saturated);
        let walk = AccuracyConfig::new(Protocol::LocalWalk, 0.1, 1);
        assert_eq!(samples_to_accuracy(&Statevector::zero(3).unwrap(), &walk).unwrap().n_samples, 16);
    }

    #[test]
    fn accuracy_cap_saturates() {
        let s = t_state().tensor_power(4).unwrap();
        let cfg = AccuracyConfig { max_samples: 40, ..AccuracyConfig::new(Protocol::Global, 1e-6, 2) };
        let r = samples_to_accuracy(&s, &cfg).unwrap();
        assert!(r.saturated);
        assert_eq!(r.n_samples, 40);
        assert!(samples_to_accuracy(&s, &AccuracyConfig::new(Protocol::Global, 0.0, 1)).is_err());
    }

    #[test]
    fn protocol_parsing() {
        assert_eq!("local-walk".parse::<Protocol>().unwrap(), Protocol::LocalWalk);
        assert_eq!("layer_walk".parse::<Protocol>().unwrap(), Protocol::LayerWalk);
        assert!("nope".parse::<Protocol>().is_err());
        let _ = CliffordTableau::identity(1).unwrap();
    }
}
