//! Simulated two-qubit device: shot sampling, a symmetric readout confusion
//! channel, passive mitigation by inverting it, and the orbit-flatness
//! experiment built on top.
//!
//! The confusion matrix is written in the basis order `|01⟩, |00⟩, |10⟩, |11⟩`
//! (labels read as qubit 0 then qubit 1). Probability vectors crossing the
//! module boundary are always in basis-index order; conversion happens here.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::{apply_clifford, random_clifford};
use crate::error::{invalid, Error, Result};
use crate::measures::{flatness_of, stabilizer_entropy};
use crate::oracles::theorem_rhs;
use crate::orbit::{mean_and_std_error, substream};
use crate::state::{parse_bits, Statevector};

/// Basis labels in the order the confusion matrix is written.
pub const DEVICE_BASIS_ORDER: [&str; 4] = ["01", "00", "10", "11"];

/// Device-calibrated confusion weights.
pub const DEFAULT_P: f64 = 0.045;
pub const DEFAULT_Q: f64 = 0.02;

/// Realizations per angle.
pub const DEFAULT_REALIZATIONS: usize = 60;
/// Shots per realization.
pub const DEFAULT_SHOTS: u64 = 4096;

const SUM_TOL: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct ReadoutModel {
    pub p: f64,
    pub q: f64,
    pub basis_order: [&'static str; 4],
}

impl Default for ReadoutModel {
    fn default() -> Self {
        Self { p: DEFAULT_P, q: DEFAULT_Q, basis_order: DEVICE_BASIS_ORDER }
    }
}

impl ReadoutModel {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p >= 0.0 && q >= 0.0) || 1.0 - 2.0 * p - q < 0.0 || !(p + q).is_finite() {
            return Err(invalid(format!("readout weights need p, q >= 0 and 1 − 2p − q >= 0 (p={p}, q={q})")));
        }
        Ok(Self { p, q, basis_order: DEVICE_BASIS_ORDER })
    }

    pub fn ideal() -> Self {
        Self { p: 0.0, q: 0.0, basis_order: DEVICE_BASIS_ORDER }
    }

    /// The matrix exactly as written, rows and columns in `basis_order`.
    pub fn matrix_in_basis_order(&self) -> [[f64; 4]; 4] {
        let (p, q) = (self.p, self.q);
        let s = 1.0 - 2.0 * p - q;
        [[s, p, p, q], [p, s, q, p], [p, q, s, p], [q, p, p, s]]
    }

    /// Basis index of each position of `basis_order`.
    pub fn order_indices(&self) -> [usize; 4] {
        self.basis_order.map(|l| parse_bits(l).expect("static labels"))
    }

    /// The same matrix with rows and columns in basis-index order.
    pub fn matrix(&self) -> [[f64; 4]; 4] {
        let a = self.matrix_in_basis_order();
        let idx = self.order_indices();
        let mut m = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                m[idx[r]][idx[c]] = a[r][c];
            }
        }
        m
    }
}

/// Counts per basis index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotHistogram {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl ShotHistogram {
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.total as f64).collect()
    }
}

/// Multinomial draw of `n_shots` outcomes from `probs`.
pub fn sample_from_probs<R: Rng + ?Sized>(probs: &[f64], n_shots: u64, rng: &mut R) -> Result<ShotHistogram> {
    if n_shots == 0 {
        return Err(invalid("need at least one shot"));
    }
    if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(invalid("probabilities must be finite and nonnegative"));
    }
    let total_p: f64 = probs.iter().sum();
    let mut counts = vec![0u64; probs.len()];
    let mut left = n_shots;
    let mut mass = total_p;
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() {
            counts[k] = left;
            break;
        }
        let frac = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(left, frac).map_err(|e| invalid(e.to_string()))?.sample(rng);
        counts[k] = draw;
        left -= draw;
        mass -= p;
    }
    Ok(ShotHistogram { counts, total: n_shots })
}

/// Computational-basis measurement record of `state`.
pub fn sample_shots<R: Rng + ?Sized>(state: &Statevector, n_shots: u64, rng: &mut R) -> Result<ShotHistogram> {
    sample_from_probs(&state.probabilities(), n_shots, rng)
}

fn check_prob_vector(v: &[f64]) -> Result<()> {
    if v.len() != 4 {
        return Err(invalid(format!("readout vectors have length 4, got {}", v.len())));
    }
    if v.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(invalid("probability vector has negative or non-finite entries"));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > SUM_TOL {
        return Err(invalid(format!("probability vector sums to {s}")));
    }
    Ok(())
}

fn mat_vec(m: &[[f64; 4]; 4], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// `p_noisy = A·p_ideal` (basis-index order in and out).
pub fn apply_readout_noise(probs: &[f64], model: &ReadoutModel) -> Result<Vec<f64>> {
    check_prob_vector(probs)?;
    Ok(mat_vec(&model.matrix(), probs))
}

/// Output of [`mitigate_readout`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MitigatedProbs {
    /// `A⁻¹·p_noisy`, possibly with negative entries.
    pub quasi: Vec<f64>,
    /// `quasi` with negatives clipped to zero and renormalized.
    pub projected: Vec<f64>,
    /// Whether any entry had to be clipped.
    pub clipped: bool,
}

/// Inverts a 4×4 matrix by Gauss–Jordan elimination with partial pivoting.
fn invert4(m: &[[f64; 4]; 4]) -> Result<[[f64; 4]; 4]> {
    let mut a = *m;
    let mut inv = [[0.0; 4]; 4];
    for (k, row) in inv.iter_mut().enumerate() {
        row[k] = 1.0;
    }
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::SingularModel(format!("pivot {col} vanishes")));
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..4 {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..4 {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for j in 0..4 {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Ok(inv)
}

/// Passive mitigation `A⁻¹·p_noisy`, followed by a simplex projection.
pub fn mitigate_readout(noisy: &[f64], model: &ReadoutModel) -> Result<MitigatedProbs> {
    if noisy.len() != 4 || noisy.iter().any(|x| !x.is_finite()) {
        return Err(invalid("noisy readout vector must have 4 finite entries"));
    }
    let inv = invert4(&model.matrix())?;
    let quasi = mat_vec(&inv, noisy);
    let clipped = quasi.iter().any(|&x| x < 0.0);
    let positive: Vec<f64> = quasi.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = positive.iter().sum();
    if total <= 0.0 {
        return Err(invalid("mitigated vector has no positive mass"));
    }
    let projected = positive.iter().map(|x| x / total).collect();
    Ok(MitigatedProbs { quasi, projected, clipped })
}

/// Which mitigated vector feeds the corrected flatness.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativityPolicy {
    /// Use `A⁻¹·p_noisy` as is; `I₃ − I₂²` is a polynomial and is defined on
    /// quasiprobabilities.
    Keep,
    /// Clip negatives and renormalize first.
    Clip,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviceConfig {
    pub thetas: Vec<f64>,
    pub n_realizations: usize,
    /// `None` uses exact probabilities (infinite-shot limit).
    pub n_shots: Option<u64>,
    pub model: ReadoutModel,
    pub seed: u64,
    pub negativity: NegativityPolicy,
}

impl DeviceConfig {
    pub fn new(thetas: Vec<f64>, seed: u64) -> Self {
        Self {
            thetas,
            n_realizations: DEFAULT_REALIZATIONS,
            n_shots: Some(DEFAULT_SHOTS),
            model: ReadoutModel::default(),
            seed,
            negativity: NegativityPolicy::Keep,
        }
    }
}

/// One angle of the device experiment.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub theta: f64,
    /// Orbit flatness from the bare noisy frequencies.
    pub f_dig: f64,
    /// Orbit flatness after mitigation.
    pub f_corr: f64,
    /// Prediction from the exact `M₂` of the prepared state.
    pub f_ex: f64,
    /// Standard error of `f_corr` over realizations.
    pub sigma_stat: f64,
    /// Standard error of `f_dig` over realizations.
    pub sigma_dig: f64,
    /// Realizations in which mitigation produced negative entries.
    pub clipped_realizations: usize,
}

/// `R_XX(θ)|00⟩`.
pub fn device_state(theta: f64) -> Statevector {
    let mut s = Statevector::zero(2).expect("two qubits");
    s.apply_rxx(theta, 0, 1).expect("distinct sites");
    s
}

/// Evenly spaced angles `k·2π/(points−1)`, `k = 0..points`.
pub fn theta_grid(points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![0.0; points];
    }
    (0..points).map(|k| 2.0 * std::f64::consts::PI * k as f64 / (points - 1) as f64).collect()
}

/// Runs the simulated device experiment over an angle grid.
pub fn device_experiment(config: &DeviceConfig) -> Result<Vec<DeviceRecord>> {
    if config.n_realizations < 2 {
        return Err(invalid("need at least 2 realizations per angle"));
    }
    if config.n_shots == Some(0) {
        return Err(invalid("need at least one shot"));
    }
    let inv_ok = invert4(&config.model.matrix()).map(|_| ());
    inv_ok?;
    config
        .thetas
        .iter()
        .enumerate()
        .map(|(t_idx, &theta)| {
            let state = device_state(theta);
            let f_ex = theorem_rhs(stabilizer_entropy(&state, 2.0)?, 4);
            let per: Vec<(f64, f64, bool)> = (0..config.n_realizations)
                .into_par_iter()
                .map(|r| {
                    let mut rng = substream(config.seed, ((t_idx as u64) << 32) | r as u64);
                    let c = random_clifford(2, &mut rng)?;
                    let ideal = apply_clifford(&state, &c)?.probabilities();
                    let noisy = apply_readout_noise(&normalize(&ideal), &config.model)?;
                    let observed = match config.n_shots {
                        Some(shots) => sample_from_probs(&noisy, shots, &mut rng)?.frequencies(),
                        None => noisy,
                    };
                    let mitigated = mitigate_readout(&observed, &config.model)?;
                    let corrected = match config.negativity {
                        NegativityPolicy::Keep => &mitigated.quasi,
                        NegativityPolicy::Clip => &mitigated.projected,
                    };
                    Ok((flatness_of(&observed), flatness_of(corrected), mitigated.clipped))
                })
                .collect::<Result<_>>()?;
            let dig: Vec<f64> = per.iter().map(|x| x.0).collect();
            let corr: Vec<f64> = per.iter().map(|x| x.1).collect();
            let (f_dig, sigma_dig) = mean_and_std_error(&dig);
            let (f_corr, sigma_stat) = mean_and_std_error(&corr);
            Ok(DeviceRecord {
                theta,
                f_dig,
                f_corr,
                f_ex,
                sigma_stat,
                sigma_dig,
                clipped_realizations: per.iter().filter(|x| x.2).count(),
            })
        })
        .collect()
}

/// Clears rounding residue so exact probabilities pass the sum check.
fn normalize(p: &[f64]) -> Vec<f64> {
    let s: f64 = p.iter().sum();
    p.iter().map(|x| (x / s).max(0.0)).collect()
}

/// Least-squares `(p, q)` from an empirical confusion matrix written in
/// `DEVICE_BASIS_ORDER` (column `j` = outcome frequencies when preparing label `j`).
pub fn fit_readout_model(empirical: &[[f64; 4]; 4]) -> Result<ReadoutModel> {
    // entry = 1 − 2p − q (diagonal), p, or q; solve the 2×2 normal equations
    let template = ReadoutModel { p: 1.0, q: 2.0, basis_order: DEVICE_BASIS_ORDER }.matrix_in_basis_order();
    let (mut sxx, mut sxy, mut syy, mut bx, mut by) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in 0..4 {
        for c in 0..4 {
            let e = empirical[r][c];
            let (ap, aq, offset) = if r == c {
                (-2.0, -1.0, 1.0)
            } else if template[r][c] == 1.0 {
                (1.0, 0.0, 0.0)
            } else {
                (0.0, 1.0, 0.0)
            };
            let y = e - offset;
            sxx += ap * ap;
            sxy += ap * aq;
            syy += aq * aq;
            bx += ap * y;
            by += aq * y;
        }
    }
    let det = sxx * syy - sxy * sxy;
    let p = (bx * syy - by * sxy) / det;
    let q = (sxx * by - sxy * bx) / det;
    ReadoutModel::new(p.max(0.0), q.max(0.0))
}

/// Simulates the calibration run: each of the four basis states is prepared
/// (identity Clifford) and read out `n_shots` times through `truth`, then the
/// two weights are fitted.
pub fn calibrate_readout(truth: &ReadoutModel, n_shots: u64, seed: u64) -> Result<ReadoutModel> {
    let idx = truth.order_indices();
    let mut empirical = [[0.0; 4]; 4];
    for (col, &prepared) in idx.iter().enumerate() {
        let mut ideal = vec![0.0; 4];
        ideal[prepared] = 1.0;
        let noisy = apply_readout_noise(&ideal, truth)?;
        let mut rng = substream(seed, col as u64);
        let freq = sample_from_probs(&noisy, n_shots, &mut rng)?.frequencies();
        for (row, &outcome) in idx.iter().enumerate() {
            empirical[row][col] = freq[outcome];
        }
    }
    fit_readout_model(&empirical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::multifractal_flatness;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn matrix_is_stochastic_and_symmetric() {
        let m = ReadoutModel::default();
        for a in [m.matrix_in_basis_order(), m.matrix()] {
            for c in 0..4 {
                let s: f64 = (0..4).map(|r| a[r][c]).sum();
                assert!((s - 1.0).abs() < 1e-12);
                for r in 0..4 {
                    assert_eq!(a[r][c], a[c][r]);
                }
            }
        }
        assert!(ReadoutModel::new(0.4, 0.3).is_err());
        assert!(ReadoutModel::new(-0.1, 0.0).is_err());
    }

    #[test]
    fn noise_examples() {
        let id = ReadoutModel::ideal();
        let x = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(apply_readout_noise(&x, &id).unwrap(), x.to_vec());
        let m = ReadoutModel::default();
        let u = apply_readout_noise(&[0.25; 4], &m).unwrap();
        assert!(u.iter().all(|v| (v - 0.25).abs() < 1e-15));

        // point mass on |01⟩, read back in the printed order
        let first = parse_bits("01").unwrap();
        let mut e = vec![0.0; 4];
        e[first] = 1.0;
        let out = apply_readout_noise(&e, &m).unwrap();
        let in_order: Vec<f64> = m.order_indices().iter().map(|&i| out[i]).collect();
        for (got, want) in in_order.iter().zip([0.89, 0.045, 0.045, 0.02]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!(apply_readout_noise(&[1.2, -0.2, 0.0, 0.0], &m).is_err());
        assert!(apply_readout_noise(&[0.5, 0.5], &m).is_err());
    }

    #[test]
    fn mitigation_round_trip() {
        let m = ReadoutModel::default();
        let x = [0.1, 0.2, 0.3, 0.4];
        let back = mitigate_readout(&apply_readout_noise(&x, &m).unwrap(), &m).unwrap();
        assert!(!back.clipped);
        for (a, b) in back.projected.iter().zip(x) {
            assert!((a - b).abs() < 1e-10);
        }
        let id = mitigate_readout(&x, &ReadoutModel::ideal()).unwrap();
        assert_eq!(id.quasi, x.to_vec());
    }

    #[test]
    fn mitigation_clips_outside_noise_cone() {
        // the image of a vertex has ≥ 0.02 everywhere; a bare vertex lies outside it
        let m = ReadoutModel::default();
        let r = mitigate_readout(&[1.0, 0.0, 0.0, 0.0], &m).unwrap();
        assert!(r.clipped);
        assert!(r.quasi.iter().any(|&x| x < 0.0));
        assert!(r.projected.iter().all(|&x| x >= 0.0));
        assert!((r.projected.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_model_is_reported() {
        // p = 1/4, q = 1/4 makes every entry 1/4
        let m = ReadoutModel::new(0.25, 0.25).unwrap();
        assert!(matches!(mitigate_readout(&[0.25; 4], &m), Err(Error::SingularModel(_))));
    }

    #[test]
    fn shot_sampling() {
        let mut rng = substream(1, 0);
        let h = sample_shots(&Statevector::zero(2).unwrap(), 1000, &mut rng).unwrap();
        assert_eq!(h.counts, vec![1000, 0, 0, 0]);

        let bell = Statevector::from_unnormalized(vec![
            num_complex::Complex64::new(1.0, 0.0),
            0.0.into(),
            0.0.into(),
            num_complex::Complex64::new(1.0, 0.0),
        ])
        .unwrap();
        let n = 100_000u64;
        let h = sample_shots(&bell, n, &mut rng).unwrap();
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((h.counts[0] as f64 - n as f64 / 2.0).abs() < 5.0 * sigma);
        assert_eq!(h.counts[0] + h.counts[3], n);
        assert_eq!(h.counts.iter().sum::<u64>(), h.total);

        let a = sample_shots(&bell, 500, &mut substream(7, 3)).unwrap();
        let b = sample_shots(&bell, 500, &mut substream(7, 3)).unwrap();
        assert_eq!(a, b);
        assert!(sample_shots(&bell, 0, &mut rng).is_err());
    }

    #[test]
    fn device_exact_values() {
        let cfg = DeviceConfig {
            n_realizations: 4,
            ..DeviceConfig::new(vec![0.0, FRAC_PI_4, FRAC_PI_2], 3)
        };
        let rows = device_experiment(&cfg).unwrap();
        assert!(rows[0].f_ex.abs() < 1e-15);
        assert!((rows[1].f_ex - 1.0 / 60.0).abs() < 1e-14);
        assert!(rows[2].f_ex.abs() < 1e-12);
        assert!(device_experiment(&DeviceConfig { n_realizations: 1, ..cfg }).is_err());
    }

    #[test]
    fn noiseless_limit_is_exact() {
        let cfg = DeviceConfig {
            n_shots: None,
            model: ReadoutModel::ideal(),
            n_realizations: 10,
            ..DeviceConfig::new(vec![0.7], 11)
        };
        let row = device_experiment(&cfg).unwrap()[0];
        // recompute the per-Clifford values with the same substreams
        let state = device_state(0.7);
        let exact: Vec<f64> = (0..10)
            .map(|r| {
                let c = random_clifford(2, &mut substream(11, r)).unwrap();
                multifractal_flatness(&apply_clifford(&state, &c).unwrap())
            })
            .collect();
        let mean = exact.iter().sum::<f64>() / 10.0;
        assert!((row.f_dig - mean).abs() < 1e-12);
        assert!((row.f_corr - mean).abs() < 1e-12);
    }

    #[test]
    fn calibration_recovers_weights() {
        let truth = ReadoutModel::default();
        let exact = fit_readout_model(&truth.matrix_in_basis_order()).unwrap();
        assert!((exact.p - truth.p).abs() < 1e-12 && (exact.q - truth.q).abs() < 1e-12);
        let fitted = calibrate_readout(&truth, 200_000, 4).unwrap();
        assert!((fitted.p - truth.p).abs() < 2e-3);
        assert!((fitted.q - truth.q).abs() < 2e-3);
    }

    #[test]
    fn grid_spacing() {
        let g = theta_grid(17);
        assert_eq!(g.len(), 17);
        assert!((g[2] - FRAC_PI_4).abs() < 1e-15);
        assert!((g[16] - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }
}
