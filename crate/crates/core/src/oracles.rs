//! Closed-form reference values and Haar-random states.
//!
//! Everything that is rational in `d` is evaluated in exact big-rational
//! arithmetic and converted to `f64` only on return.

use num_bigint::BigInt;
use num_complex::Complex64 as C64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::state::Statevector;

/// Order of a Haar moment `E[I_q^r]`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct HaarMomentSpec {
    pub d: u64,
    pub q: u32,
    pub r: u32,
}

impl HaarMomentSpec {
    pub fn new(d: u64, q: u32, r: u32) -> Result<Self> {
        if d < 2 || !d.is_power_of_two() {
            return Err(invalid(format!("d = {d} is not 2^N with N >= 1")));
        }
        if q == 0 || r == 0 {
            return Err(invalid("moment indices q, r must be >= 1"));
        }
        Ok(Self { d, q, r })
    }
}

fn check_single_q(q: f64) -> Result<()> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(invalid(format!("Rényi index must be a finite q > 0, got {q}")));
    }
    if q == 1.0 {
        return Err(Error::Unsupported("no closed form at q = 1".into()));
    }
    Ok(())
}

/// `M_q` of `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
pub fn single_qubit_m_q(theta: f64, phi: f64, q: f64) -> Result<f64> {
    check_single_q(q)?;
    let st = theta.sin();
    let omega = (st * phi.sin()).powi(2).powf(q) + (st * phi.cos()).powi(2).powf(q);
    let inner = (1.0 + theta.cos().powi(2).powf(q) + omega) / 2.0;
    let m = inner.log2() / (1.0 - q);
    Ok(if m.abs() < 1e-14 { 0.0 } else { m })
}

/// `S_q` of the same single-qubit state.
pub fn single_qubit_s_q(theta: f64, q: f64) -> Result<f64> {
    check_single_q(q)?;
    let c = (theta / 2.0).cos().powi(2);
    let s = (theta / 2.0).sin().powi(2);
    Ok((c.powf(q) + s.powf(q)).log2() / (1.0 - q))
}

/// Flatness of `H·(cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩)`.
pub fn hadamard_state_flatness(theta: f64, phi: f64) -> f64 {
    let a = (theta.sin() * phi.cos()).powi(2);
    (a - a * a) / 4.0
}

/// Clifford-orbit average of the flatness of a single-qubit state.
pub fn single_qubit_orbit_flatness(theta: f64, phi: f64) -> f64 {
    let s2 = theta.sin().powi(2);
    s2 * (-2.0 * s2 * (4.0 * phi).cos() + 7.0 * (2.0 * theta).cos() + 9.0) / 96.0
}

/// `2(1 − 2^{−M₂}) / ((d+1)(d+2))`, the orbit average predicted from `M₂`.
pub fn theorem_rhs(m2: f64, d: usize) -> f64 {
    let d = d as f64;
    2.0 * (1.0 - (-m2).exp2()) / ((d + 1.0) * (d + 2.0))
}

/// Product-state references `(N·M_q, N·S_q)`.
pub fn product_state_reference(theta: f64, phi: f64, n_qubits: usize, q: f64) -> Result<(f64, f64)> {
    let n = n_qubits as f64;
    Ok((n * single_qubit_m_q(theta, phi, q)?, n * single_qubit_s_q(theta, q)?))
}

/// Integer partition as `(part, multiplicity)` pairs, parts decreasing.
pub type Partition = Vec<(u32, u32)>;

/// Partitions of `r` in canonical decreasing order.
pub fn partitions(r: u32) -> Vec<Partition> {
    fn rec(rest: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=rest.min(max)).rev() {
            cur.push(part);
            rec(rest - part, part, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    rec(r, r, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|parts| {
            let mut grouped: Partition = Vec::new();
            for p in parts {
                match grouped.last_mut() {
                    Some((last, n)) if *last == p => *n += 1,
                    _ => grouped.push((p, 1)),
                }
            }
            grouped
        })
        .collect()
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `x(x+1)…(x+k−1)` (`rising = true`) or `x(x−1)…(x−k+1)`.
fn pochhammer(x: u64, k: u32, rising: bool) -> BigInt {
    (0..k as i64).fold(BigInt::one(), |acc, j| {
        let factor = if rising { x as i64 + j } else { x as i64 - j };
        acc * BigInt::from(factor)
    })
}

/// Exact `E_{U Haar}[I_q^r(U|0⟩)]` as a rational.
///
/// Each partition `λ ⊢ r` assigns its parts to distinct basis strings, which
/// contributes the falling factorial of `d` over the number of parts, times
/// `Π_k ((λ_k q)!)^{n_k}` and the multinomial weight
/// `a_λ = r! / (Π_k (λ_k!)^{n_k} Π_k n_k!)`.
pub fn haar_ipr_moment_exact(spec: HaarMomentSpec) -> BigRational {
    let HaarMomentSpec { d, q, r } = spec;
    let mut numer = BigInt::zero();
    for lambda in partitions(r) {
        let parts: u32 = lambda.iter().map(|&(_, n)| n).sum();
        let mut term = pochhammer(d, parts, false) * factorial(r);
        let mut denom = BigInt::one();
        for &(part, mult) in &lambda {
            term *= factorial(part * q).pow(mult);
            denom *= factorial(part).pow(mult) * factorial(mult);
        }
        numer += term / denom;
    }
    BigRational::new(numer, pochhammer(d, r * q, true))
}

pub fn haar_ipr_moment(spec: HaarMomentSpec) -> f64 {
    to_f64(&haar_ipr_moment_exact(spec))
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("finite rational")
}

fn check_dim(d: u64) -> Result<()> {
    if d < 2 {
        return Err(invalid(format!("dimension must be >= 2, got {d}")));
    }
    Ok(())
}

/// Exact `2(d−1)/((d+1)(d+2)(d+3))`.
pub fn haar_mean_flatness_exact(d: u64) -> Result<BigRational> {
    check_dim(d)?;
    let d = BigInt::from(d);
    let one = BigInt::one();
    let num = BigInt::from(2) * (&d - &one);
    let den = (&d + 1) * (&d + 2) * (&d + 3);
    Ok(BigRational::new(num, den))
}

pub fn haar_mean_flatness(d: u64) -> Result<f64> {
    Ok(to_f64(&haar_mean_flatness_exact(d)?))
}

/// Exact variance of the flatness `F(U|0⟩)` of a Haar-random state.
///
/// This is the spread of the un-averaged flatness; the orbit average `F̄`
/// concentrates much more tightly (about `d^{-3}` at d = 32).
pub fn haar_flatness_variance_exact(d: u64) -> Result<BigRational> {
    check_dim(d)?;
    let x = BigInt::from(d);
    let p = |c: i64| &x + BigInt::from(c);
    let poly = BigInt::from(17) * x.pow(5) + BigInt::from(42) * x.pow(4)
        - BigInt::from(106) * x.pow(3)
        - BigInt::from(72) * x.pow(2)
        + BigInt::from(449) * &x
        - BigInt::from(330);
    let den = p(1).pow(2u32) * p(2).pow(2u32) * p(3).pow(2u32) * p(4) * p(5) * p(6) * p(7);
    Ok(BigRational::new(BigInt::from(8) * poly, den))
}

/// Standard deviation of `F(U|0⟩)` over Haar `U`.
pub fn haar_flatness_std(d: u64) -> Result<f64> {
    Ok(to_f64(&haar_flatness_variance_exact(d)?).sqrt())
}

/// Leading-order `2√34 / d^{5/2}`.
pub fn haar_flatness_std_asymptotic(d: u64) -> f64 {
    2.0 * 34f64.sqrt() / (d as f64).powf(2.5)
}

/// Exact `E[2^{−M₂}] = 4/(d+3)` over Haar states.
pub fn haar_mean_stabilizer_purity(d: u64) -> Result<f64> {
    check_dim(d)?;
    Ok(4.0 / (d as f64 + 3.0))
}

/// `U|0…0⟩` for Haar `U`: a normalized vector of i.i.d. complex Gaussians.
pub fn sample_haar_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Statevector> {
    if n_qubits == 0 || n_qubits > crate::state::MAX_QUBITS {
        return Err(invalid(format!("qubit count {n_qubits} out of range")));
    }
    let amps: Vec<C64> = (0..1usize << n_qubits)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    Statevector::from_unnormalized(amps)
}
