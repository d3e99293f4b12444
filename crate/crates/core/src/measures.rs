//! Scalar measures of a pure state: inverse participation ratio, participation
//! entropy, stabilizer Rényi entropy, multifractal flatness and the linear
//! scaling fit `S_q = D_q·N + c_q`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pauli::all_expectations;
use crate::state::Statevector;

/// Probabilities below this are treated as exact zeros.
pub const PROB_FLOOR: f64 = 1e-15;

/// Window around `q = 1` inside which the Shannon limit is used.
const SHANNON_WINDOW: f64 = 1e-12;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Ipr,
    ParticipationEntropy,
    StabilizerEntropy,
    Flatness,
}

impl MeasureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MeasureKind::Ipr => "ipr",
            MeasureKind::ParticipationEntropy => "participation_entropy",
            MeasureKind::StabilizerEntropy => "stabilizer_entropy",
            MeasureKind::Flatness => "flatness",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub n_qubits: usize,
    pub q: f64,
    pub value: f64,
    pub kind: MeasureKind,
}

/// Least-squares line through `(N, S_q)` points.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub q: f64,
    /// Slope, the multifractal dimension.
    pub d_q: f64,
    /// Intercept, the sub-leading term.
    pub c_q: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(invalid(format!("Rényi index must be a finite q > 0, got {q}")));
    }
    Ok(())
}

fn floored(p: f64) -> f64 {
    if p < PROB_FLOOR {
        0.0
    } else {
        p
    }
}

/// `Σ p^q` over a distribution (or quasiprobability vector for integer `q`).
pub fn ipr_of(probs: &[f64], q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(probs.iter().map(|&p| floored(p)).filter(|&p| p > 0.0).map(|p| p.powf(q)).sum())
}

/// `I_q = Σ_σ p(σ)^q`.
pub fn ipr(state: &Statevector, q: f64) -> Result<f64> {
    ipr_of(&state.probabilities(), q)
}

/// Rényi-`q` entropy (base 2) of a probability vector; Shannon at `q = 1`.
pub fn renyi_entropy(probs: &[f64], q: f64) -> Result<f64> {
    check_q(q)?;
    let s = if (q - 1.0).abs() < SHANNON_WINDOW {
        -probs
            .iter()
            .map(|&p| floored(p))
            .filter(|&p| p > 0.0)
            .map(|p| p * p.log2())
            .sum::<f64>()
    } else {
        ipr_of(probs, q)?.log2() / (1.0 - q)
    };
    // adding +0 maps a −0 result to +0
    Ok(s + 0.0)
}

/// `S_q = log₂(I_q)/(1−q)`, with the Shannon limit at `q = 1`.
pub fn participation_entropy(state: &Statevector, q: f64) -> Result<f64> {
    renyi_entropy(&state.probabilities(), q)
}

/// `M_q = log₂(Σ_P ⟨P⟩^{2q}/d)/(1−q)`, by full Pauli enumeration.
///
/// At `q = 1` the limit `−Σ_P (⟨P⟩²/d) log₂(⟨P⟩²/d) − N` is used.
pub fn stabilizer_entropy(state: &Statevector, q: f64) -> Result<f64> {
    check_q(q)?;
    stabilizer_entropy_from_table(&all_expectations(state), state.dim(), q)
}

/// Stabilizer entropy for several Rényi indices sharing one expectation table.
pub fn stabilizer_entropies(state: &Statevector, qs: &[f64]) -> Result<Vec<f64>> {
    for &q in qs {
        check_q(q)?;
    }
    let table = all_expectations(state);
    qs.iter().map(|&q| stabilizer_entropy_from_table(&table, state.dim(), q)).collect()
}

pub(crate) fn stabilizer_entropy_from_table(table: &[f64], d: usize, q: f64) -> Result<f64> {
    let d = d as f64;
    let value = if (q - 1.0).abs() < SHANNON_WINDOW {
        let shannon: f64 = table
            .iter()
            .map(|e| e * e / d)
            .filter(|&w| w > PROB_FLOOR)
            .map(|w| -w * w.log2())
            .sum();
        shannon - d.log2()
    } else {
        let sum: f64 = table.iter().map(|e| (e * e).powf(q)).sum();
        (sum / d).log2() / (1.0 - q)
    };
    // rounding can leave values like -1e-16 for stabilizer states
    Ok(if value.abs() < 1e-13 { 0.0 } else { value })
}

/// `F = I₃ − I₂²` of a probability or quasiprobability vector. Entries are
/// used as given (no flooring), so quasiprobabilities keep their first-order
/// cancellations.
pub fn flatness_of(probs: &[f64]) -> f64 {
    let (i2, i3) = probs.iter().fold((0.0, 0.0), |(i2, i3), &p| {
        let p2 = p * p;
        (i2 + p2, i3 + p2 * p)
    });
    i3 - i2 * i2
}

/// Multifractal flatness `I₃ − I₂²` of the participation distribution.
pub fn multifractal_flatness(state: &Statevector) -> f64 {
    let probs: Vec<f64> = state.probabilities().into_iter().map(floored).collect();
    flatness_of(&probs)
}

/// How the unbound index in `I_q − I_{(k−1+q)/m}^m` is resolved.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum IndexResolution {
    /// Read `k` as `m`: `I_q − I_{(m−1+q)/m}^m`.
    KEqualsM,
    /// Supply `k` explicitly.
    Explicit(u32),
}

/// Generalized flatness `I_q − I_{(k−1+q)/m}^m`.
///
/// The index `k` has no fixed value, so the caller picks a reading. A reading
/// is refused at `(q, m) = (3, 2)` unless it reproduces
/// [`multifractal_flatness`] there (inner index 2, i.e. `k = 2`), and any
/// non-positive inner index is refused.
pub fn generalized_flatness(
    state: &Statevector,
    q: f64,
    m: u32,
    resolution: IndexResolution,
) -> Result<f64> {
    check_q(q)?;
    if m == 0 {
        return Err(invalid("m must be a positive integer"));
    }
    let k = match resolution {
        IndexResolution::KEqualsM => m as f64,
        IndexResolution::Explicit(k) => k as f64,
    };
    let inner = (k - 1.0 + q) / m as f64;
    if !(inner > 0.0) {
        return Err(Error::Unsupported(format!(
            "inner Rényi index (k−1+q)/m = {inner} is not positive"
        )));
    }
    let is_standard_point = q == 3.0 && m == 2;
    if is_standard_point && inner != 2.0 {
        return Err(Error::Unsupported(format!(
            "resolution {resolution:?} gives I_3 − I_{inner}^2 at (q, m) = (3, 2), \
             which is not the multifractal flatness"
        )));
    }
    let probs = state.probabilities();
    Ok(ipr_of(&probs, q)? - ipr_of(&probs, inner)?.powi(m as i32))
}

/// Ordinary least squares of `S_q` against `N`.
pub fn fit_scaling(q: f64, points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(invalid("scaling fit needs at least two points"));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("scaling fit needs at least two distinct N values"));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss: f64 = points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    Ok(FitResult { q, d_q: slope, c_q: intercept, residual: (ss / n).sqrt() })
}

/// Report rows `{ipr, participation_entropy, stabilizer_entropy}` for every
/// requested `q`, plus one flatness row.
pub fn measure_all(state: &Statevector, qs: &[f64]) -> Result<Vec<MeasureReport>> {
    let n = state.n_qubits();
    let stab = stabilizer_entropies(state, qs)?;
    let mut rows = Vec::with_capacity(3 * qs.len() + 1);
    for (&q, &m) in qs.iter().zip(&stab) {
        rows.push(MeasureReport { n_qubits: n, q, value: ipr(state, q)?, kind: MeasureKind::Ipr });
        rows.push(MeasureReport {
            n_qubits: n,
            q,
            value: participation_entropy(state, q)?,
            kind: MeasureKind::ParticipationEntropy,
        });
        rows.push(MeasureReport { n_qubits: n, q, value: m, kind: MeasureKind::StabilizerEntropy });
    }
    rows.push(MeasureReport {
        n_qubits: n,
        q: 3.0,
        value: multifractal_flatness(state),
        kind: MeasureKind::Flatness,
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::gates::hadamard;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn plus_state(n: usize) -> Statevector {
        let mut s = Statevector::zero(n).unwrap();
        for k in 0..n {
            s.apply_one_qubit(k, &hadamard()).unwrap();
        }
        s
    }

    fn t_state() -> Statevector {
        Statevector::bloch(FRAC_PI_2, FRAC_PI_4)
    }

    fn h_t_state() -> Statevector {
        let mut s = t_state();
        s.apply_one_qubit(0, &hadamard()).unwrap();
        s
    }

    #[test]
    fn ipr_examples() {
        for q in [0.5, 1.0, 2.0, 3.7] {
            assert_eq!(ipr(&Statevector::zero(3).unwrap(), q).unwrap(), 1.0);
        }
        for n in 1..=4 {
            for q in [0.5, 2.0, 3.0] {
                let want = 2f64.powf(n as f64 * (1.0 - q));
                assert!((ipr(&plus_state(n), q).unwrap() - want).abs() < 1e-12);
            }
        }
        assert!((ipr(&t_state(), 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(ipr(&t_state(), 0.0).is_err());
        assert!(ipr(&t_state(), -1.0).is_err());
    }

    #[test]
    fn participation_entropy_examples() {
        for q in [0.3, 1.0, 2.0, 5.0] {
            assert!((participation_entropy(&plus_state(3), q).unwrap() - 3.0).abs() < 1e-12);
            let s = Statevector::bloch(FRAC_PI_2, 0.77);
            assert!((participation_entropy(&s, q).unwrap() - 1.0).abs() < 1e-12);
        }
        let v = participation_entropy(&h_t_state(), 2.0).unwrap();
        assert!((v - (4.0f64 / 3.0).log2()).abs() < 1e-12);
        assert!(participation_entropy(&h_t_state(), 0.0).is_err());
    }

    #[test]
    fn shannon_limit_is_continuous() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let s = crate::oracles::sample_haar_state(4, &mut rng).unwrap();
        let s1 = participation_entropy(&s, 1.0).unwrap();
        for q in [1.0 - 1e-4, 1.0 + 1e-4] {
            assert!((participation_entropy(&s, q).unwrap() - s1).abs() < 1e-3);
        }
        let m1 = stabilizer_entropy(&s, 1.0).unwrap();
        assert!((stabilizer_entropy(&s, 1.0 + 1e-4).unwrap() - m1).abs() < 1e-3);
    }

    #[test]
    fn stabilizer_entropy_examples() {
        assert_eq!(stabilizer_entropy(&Statevector::zero(3).unwrap(), 2.0).unwrap(), 0.0);
        assert_eq!(stabilizer_entropy(&plus_state(2), 3.0).unwrap(), 0.0);
        let m = stabilizer_entropy(&t_state(), 2.0).unwrap();
        assert!((m - (4.0f64 / 3.0).log2()).abs() < 1e-12);
        for n in 1..=4 {
            let s = t_state().tensor_power(n).unwrap();
            let m = stabilizer_entropy(&s, 2.0).unwrap();
            assert!((m - n as f64 * (4.0f64 / 3.0).log2()).abs() < 1e-10);
        }
        assert!(stabilizer_entropy(&t_state(), 0.0).is_err());
    }

    #[test]
    fn flatness_examples() {
        assert_eq!(multifractal_flatness(&Statevector::zero(2).unwrap()), 0.0);
        assert!(multifractal_flatness(&plus_state(3)).abs() < 1e-15);
        assert!(multifractal_flatness(&t_state()).abs() < 1e-15);
        assert!((multifractal_flatness(&h_t_state()) - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn generalized_flatness_consistency() {
        let s = h_t_state();
        let f = multifractal_flatness(&s);
        let g = generalized_flatness(&s, 3.0, 2, IndexResolution::KEqualsM).unwrap();
        assert!((g - f).abs() < 1e-15);
        assert!((g - 1.0 / 16.0).abs() < 1e-15);
        let e = generalized_flatness(&s, 3.0, 2, IndexResolution::Explicit(2)).unwrap();
        assert_eq!(e, g);
        let z = Statevector::zero(2).unwrap();
        assert_eq!(generalized_flatness(&z, 3.0, 2, IndexResolution::KEqualsM).unwrap(), 0.0);
        // k = 1 would give I_3 − I_{3/2}^2
        assert!(matches!(
            generalized_flatness(&s, 3.0, 2, IndexResolution::Explicit(1)),
            Err(Error::Unsupported(_))
        ));
        assert!(generalized_flatness(&s, 2.0, 0, IndexResolution::KEqualsM).is_err());
        assert!(generalized_flatness(&s, 4.0, 3, IndexResolution::KEqualsM).is_ok());
    }

    #[test]
    fn fit_examples() {
        let s1 = participation_entropy(&Statevector::bloch(1.1, 0.2), 2.0).unwrap();
        let pts: Vec<_> = (1..=6).map(|n| (n as f64, n as f64 * s1)).collect();
        let fit = fit_scaling(2.0, &pts).unwrap();
        assert!((fit.d_q - s1).abs() < 1e-12);
        assert!(fit.c_q.abs() < 1e-12);
        assert!(fit.residual < 1e-12);

        let flat: Vec<_> = (2..6).map(|n| (n as f64, 1.0)).collect();
        let fit = fit_scaling(2.0, &flat).unwrap();
        assert!(fit.d_q.abs() < 1e-15 && (fit.c_q - 1.0).abs() < 1e-12);

        assert!(fit_scaling(2.0, &[(1.0, 1.0)]).is_err());
        assert!(fit_scaling(2.0, &[(3.0, 1.0), (3.0, 2.0)]).is_err());
    }

    #[test]
    fn measure_rows() {
        let rows = measure_all(&Statevector::basis(3, "000").unwrap(), &[2.0]).unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows {
            let want = if r.kind == MeasureKind::Ipr { 1.0 } else { 0.0 };
            assert_eq!(r.value, want);
        }
    }
}
