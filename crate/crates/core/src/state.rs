//! Dense pure states of `N` qubits and in-place gate kernels.
//!
//! Qubit `k` is bit `k` of the basis index (qubit 0 least significant).
//! Bit strings are read left to right as qubit 0, qubit 1, ...

use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};

/// Largest register the dense representation accepts.
pub const MAX_QUBITS: usize = 30;

/// Tolerance used when validating unitarity of user-supplied gates.
pub const UNITARY_TOL: f64 = 1e-10;

pub type Matrix2 = [[C64; 2]; 2];
pub type Matrix4 = [[C64; 4]; 4];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl Statevector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Ok(Self { n_qubits, amplitudes })
    }

    /// Basis state from a bit string, character `k` giving the value of qubit `k`.
    pub fn basis(n_qubits: usize, bits: &str) -> Result<Self> {
        check_qubits(n_qubits)?;
        if bits.chars().count() != n_qubits {
            return Err(invalid(format!(
                "bit string {bits:?} has length {} but the register has {n_qubits} qubits",
                bits.chars().count()
            )));
        }
        let index = parse_bits(bits)?;
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[index] = ONE;
        Ok(Self { n_qubits, amplitudes })
    }

    /// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
    pub fn bloch(theta: f64, phi: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self {
            n_qubits: 1,
            amplitudes: vec![C64::new(c, 0.0), C64::from_polar(s, phi)],
        }
    }

    /// Wraps raw amplitudes. The vector is checked for a power-of-two length
    /// and unit norm (within `1e-10`), but not renormalized.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(invalid(format!("amplitude vector length {len} is not 2^N with N >= 1")));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        let state = Self { n_qubits, amplitudes };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("state is not normalized (norm² = {norm})")));
        }
        Ok(state)
    }

    /// Normalizes an arbitrary nonzero vector of length `2^N`.
    pub fn from_unnormalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(invalid("cannot normalize a zero or non-finite vector"));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::from_amplitudes(amplitudes)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Participation distribution `p(σ) = |⟨σ|Ψ⟩|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `|self⟩ ⊗ |other⟩`, with `self` occupying the low qubits.
    pub fn tensor(&self, other: &Statevector) -> Result<Statevector> {
        let n_qubits = self.n_qubits + other.n_qubits;
        check_qubits(n_qubits)?;
        let low = self.dim();
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        for (hi, b) in other.amplitudes.iter().enumerate() {
            for (lo, a) in self.amplitudes.iter().enumerate() {
                amplitudes[hi * low + lo] = a * b;
            }
        }
        Ok(Statevector { n_qubits, amplitudes })
    }

    /// `|self⟩^{⊗count}`.
    pub fn tensor_power(&self, count: usize) -> Result<Statevector> {
        if count == 0 {
            return Err(invalid("tensor power needs at least one factor"));
        }
        let mut out = self.clone();
        for _ in 1..count {
            out = out.tensor(self)?;
        }
        Ok(out)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Statevector) -> Result<f64> {
        self.check_same(other.n_qubits)?;
        let overlap: C64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(overlap.norm_sqr())
    }

    pub(crate) fn check_same(&self, n_qubits: usize) -> Result<()> {
        if self.n_qubits != n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: n_qubits });
        }
        Ok(())
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_qubits {
            return Err(invalid(format!("site {site} out of range for {} qubits", self.n_qubits)));
        }
        Ok(())
    }

    /// Applies a 2×2 unitary on `site`.
    pub fn apply_one_qubit(&mut self, site: usize, u: &Matrix2) -> Result<()> {
        self.check_site(site)?;
        check_unitary(&u.map(|r| r.to_vec()))?;
        self.apply_one_qubit_unchecked(site, u);
        Ok(())
    }

    /// Applies a 4×4 unitary on `(site_i, site_j)`. Row/column index of `u`
    /// is `b_i + 2·b_j`, so `site_i` is the low bit of the two-qubit block.
    pub fn apply_two_qubit(&mut self, site_i: usize, site_j: usize, u: &Matrix4) -> Result<()> {
        self.check_site(site_i)?;
        self.check_site(site_j)?;
        if site_i == site_j {
            return Err(invalid(format!("two-qubit gate on repeated site {site_i}")));
        }
        check_unitary(&u.map(|r| r.to_vec()))?;
        self.apply_two_qubit_unchecked(site_i, site_j, u);
        Ok(())
    }

    /// `exp(−iθ/2 X⊗X)` on `(site_i, site_j)`.
    pub fn apply_rxx(&mut self, theta: f64, site_i: usize, site_j: usize) -> Result<()> {
        self.check_site(site_i)?;
        self.check_site(site_j)?;
        if site_i == site_j {
            return Err(invalid(format!("R_XX on repeated site {site_i}")));
        }
        let (s, c) = (theta / 2.0).sin_cos();
        let c = C64::new(c, 0.0);
        let mis = C64::new(0.0, -s);
        let flip = (1usize << site_i) | (1usize << site_j);
        for idx in 0..self.dim() {
            let partner = idx ^ flip;
            if idx < partner {
                let a = self.amplitudes[idx];
                let b = self.amplitudes[partner];
                self.amplitudes[idx] = c * a + mis * b;
                self.amplitudes[partner] = mis * a + c * b;
            }
        }
        Ok(())
    }

    pub(crate) fn apply_one_qubit_unchecked(&mut self, site: usize, u: &Matrix2) {
        let stride = 1usize << site;
        for base in (0..self.dim()).step_by(stride << 1) {
            for idx in base..base + stride {
                let a0 = self.amplitudes[idx];
                let a1 = self.amplitudes[idx + stride];
                self.amplitudes[idx] = u[0][0] * a0 + u[0][1] * a1;
                self.amplitudes[idx + stride] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
    }

    pub(crate) fn apply_two_qubit_unchecked(&mut self, site_i: usize, site_j: usize, u: &Matrix4) {
        let bi = 1usize << site_i;
        let bj = 1usize << site_j;
        for idx in 0..self.dim() {
            if idx & (bi | bj) != 0 {
                continue;
            }
            let slots = [idx, idx | bi, idx | bj, idx | bi | bj];
            let v = slots.map(|s| self.amplitudes[s]);
            for (row, &slot) in slots.iter().enumerate() {
                self.amplitudes[slot] = (0..4).map(|col| u[row][col] * v[col]).sum();
            }
        }
    }

    pub(crate) fn apply_h(&mut self, site: usize) {
        let stride = 1usize << site;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for base in (0..self.dim()).step_by(stride << 1) {
            for idx in base..base + stride {
                let a0 = self.amplitudes[idx];
                let a1 = self.amplitudes[idx + stride];
                self.amplitudes[idx] = (a0 + a1) * r;
                self.amplitudes[idx + stride] = (a0 - a1) * r;
            }
        }
    }

    /// Multiplies amplitudes with qubit `site` set by `phase`.
    pub(crate) fn apply_phase(&mut self, site: usize, phase: C64) {
        let bit = 1usize << site;
        for (idx, a) in self.amplitudes.iter_mut().enumerate() {
            if idx & bit != 0 {
                *a *= phase;
            }
        }
    }

    pub(crate) fn apply_x(&mut self, site: usize) {
        let bit = 1usize << site;
        for idx in 0..self.dim() {
            if idx & bit == 0 {
                self.amplitudes.swap(idx, idx | bit);
            }
        }
    }

    pub(crate) fn apply_cnot(&mut self, control: usize, target: usize) {
        let cb = 1usize << control;
        let tb = 1usize << target;
        for idx in 0..self.dim() {
            if idx & cb != 0 && idx & tb == 0 {
                self.amplitudes.swap(idx, idx | tb);
            }
        }
    }

    pub(crate) fn apply_swap(&mut self, a: usize, b: usize) {
        let ab = 1usize << a;
        let bb = 1usize << b;
        for idx in 0..self.dim() {
            if idx & ab != 0 && idx & bb == 0 {
                self.amplitudes.swap(idx, idx ^ ab ^ bb);
            }
        }
    }
}

fn check_qubits(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(invalid(format!("qubit count {n_qubits} outside 1..={MAX_QUBITS}")));
    }
    Ok(())
}

/// Parses a bit string (character `k` is qubit `k`) into a basis index.
pub fn parse_bits(bits: &str) -> Result<usize> {
    let mut index = 0usize;
    for (k, ch) in bits.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => index |= 1 << k,
            other => return Err(invalid(format!("invalid bit {other:?} in {bits:?}"))),
        }
    }
    Ok(index)
}

/// Inverse of [`parse_bits`].
pub fn format_bits(index: usize, n_qubits: usize) -> String {
    (0..n_qubits).map(|k| if index >> k & 1 == 1 { '1' } else { '0' }).collect()
}

fn check_unitary(u: &[Vec<C64>]) -> Result<()> {
    let n = u.len();
    let mut deviation = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let dot: C64 = (0..n).map(|k| u[k][i].conj() * u[k][j]).sum();
            let target = if i == j { ONE } else { ZERO };
            deviation = deviation.max((dot - target).norm());
        }
    }
    if deviation > UNITARY_TOL || !deviation.is_finite() {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

/// Standard single- and two-qubit matrices.
pub mod gates {
    use super::{Matrix2, Matrix4, C64, ONE, ZERO};
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn identity2() -> Matrix2 {
        [[ONE, ZERO], [ZERO, ONE]]
    }

    pub fn hadamard() -> Matrix2 {
        let r = C64::new(FRAC_1_SQRT_2, 0.0);
        [[r, r], [r, -r]]
    }

    pub fn phase_s() -> Matrix2 {
        [[ONE, ZERO], [ZERO, C64::i()]]
    }

    pub fn pauli_x() -> Matrix2 {
        [[ZERO, ONE], [ONE, ZERO]]
    }

    pub fn identity4() -> Matrix4 {
        let mut m = [[ZERO; 4]; 4];
        for (k, row) in m.iter_mut().enumerate() {
            row[k] = ONE;
        }
        m
    }

    /// CNOT with the first site (low bit of the block) as control.
    pub fn cnot() -> Matrix4 {
        permutation([0, 3, 2, 1])
    }

    pub fn swap() -> Matrix4 {
        permutation([0, 2, 1, 3])
    }

    /// Dense `exp(−iθ/2 X⊗X)`.
    pub fn rxx(theta: f64) -> Matrix4 {
        let (s, c) = (theta / 2.0).sin_cos();
        let mut m = [[ZERO; 4]; 4];
        for k in 0..4 {
            m[k][k] = C64::new(c, 0.0);
            m[k][3 - k] = C64::new(0.0, -s);
        }
        m
    }

    fn permutation(image: [usize; 4]) -> Matrix4 {
        let mut m = [[ZERO; 4]; 4];
        for (col, &row) in image.iter().enumerate() {
            m[row][col] = ONE;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::gates::*;
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn random_state(n: usize, seed: u64) -> Statevector {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        crate::oracles::sample_haar_state(n, &mut rng).unwrap()
    }

    #[test]
    fn basis_states() {
        let s = Statevector::basis(1, "0").unwrap();
        assert_eq!(s.amplitudes(), &[ONE, ZERO]);
        let s = Statevector::basis(2, "00").unwrap();
        assert_eq!(s.amplitudes(), &[ONE, ZERO, ZERO, ZERO]);
        let s = Statevector::basis(3, "101").unwrap();
        assert_eq!(s.amplitudes()[0b101], ONE);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        // qubit 0 is the first character
        let s = Statevector::basis(3, "100").unwrap();
        assert_eq!(s.amplitudes()[1], ONE);
    }

    #[test]
    fn basis_length_mismatch() {
        assert!(matches!(Statevector::basis(2, "0"), Err(Error::InvalidInput(_))));
        assert!(matches!(Statevector::basis(2, "0a"), Err(Error::InvalidInput(_))));
        assert!(Statevector::zero(0).is_err());
    }

    #[test]
    fn bloch_states() {
        let s = Statevector::bloch(0.0, 1.234);
        assert!(close(s.amplitudes()[0], ONE, 1e-15));
        assert!(close(s.amplitudes()[1], ZERO, 1e-15));

        let t = Statevector::bloch(FRAC_PI_2, FRAC_PI_4);
        assert!(close(t.amplitudes()[0], C64::new(FRAC_1_SQRT_2, 0.0), 1e-15));
        assert!(close(t.amplitudes()[1], C64::from_polar(FRAC_1_SQRT_2, FRAC_PI_4), 1e-15));

        let s = Statevector::bloch(PI, 0.0);
        assert!(close(s.amplitudes()[0], ZERO, 1e-15));
        assert!(close(s.amplitudes()[1], ONE, 1e-15));
    }

    #[test]
    fn hadamard_examples() {
        let mut s = Statevector::zero(1).unwrap();
        s.apply_one_qubit(0, &hadamard()).unwrap();
        let r = C64::new(FRAC_1_SQRT_2, 0.0);
        assert!(close(s.amplitudes()[0], r, 1e-15) && close(s.amplitudes()[1], r, 1e-15));

        let mut t = Statevector::bloch(FRAC_PI_2, FRAC_PI_4);
        t.apply_one_qubit(0, &hadamard()).unwrap();
        let p = t.probabilities();
        assert!((p[0] - (1.0 + FRAC_1_SQRT_2) / 2.0).abs() < 1e-12);
        assert!((p[1] - (1.0 - FRAC_1_SQRT_2) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn identity_gates_leave_state() {
        let s = random_state(3, 1);
        let mut t = s.clone();
        t.apply_one_qubit(1, &identity2()).unwrap();
        t.apply_two_qubit(0, 2, &identity4()).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn cnot_and_swap_truth_tables() {
        let mut s = Statevector::basis(2, "10").unwrap();
        s.apply_two_qubit(0, 1, &cnot()).unwrap();
        assert_eq!(s, Statevector::basis(2, "11").unwrap());

        let mut s = Statevector::basis(2, "01").unwrap();
        s.apply_two_qubit(0, 1, &swap()).unwrap();
        assert_eq!(s, Statevector::basis(2, "10").unwrap());
    }

    #[test]
    fn rxx_examples() {
        let base = Statevector::zero(2).unwrap();
        let mut s = base.clone();
        s.apply_rxx(0.0, 0, 1).unwrap();
        assert_eq!(s, base);

        let mut s = base.clone();
        s.apply_rxx(FRAC_PI_2, 0, 1).unwrap();
        assert!(close(s.amplitudes()[0], C64::new(FRAC_1_SQRT_2, 0.0), 1e-15));
        assert!(close(s.amplitudes()[3], C64::new(0.0, -FRAC_1_SQRT_2), 1e-15));

        let mut s = base;
        s.apply_rxx(PI, 0, 1).unwrap();
        assert!(close(s.amplitudes()[0], ZERO, 1e-15));
        assert!(close(s.amplitudes()[3], C64::new(0.0, -1.0), 1e-15));
    }

    #[test]
    fn rxx_matches_dense_matrix() {
        let s = random_state(3, 7);
        for k in 0..40 {
            let theta = -PI + k as f64 * 0.17;
            let mut a = s.clone();
            a.apply_rxx(theta, 2, 0).unwrap();
            let mut b = s.clone();
            b.apply_two_qubit(2, 0, &rxx(theta)).unwrap();
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
                assert!(close(*x, *y, 1e-12));
            }
        }
    }

    #[test]
    fn rejects_bad_gates() {
        let mut s = Statevector::zero(2).unwrap();
        let mut m = hadamard();
        m[0][0] = C64::new(2.0, 0.0);
        assert!(matches!(s.apply_one_qubit(0, &m), Err(Error::NotUnitary { .. })));
        assert!(s.apply_two_qubit(1, 1, &cnot()).is_err());
        assert!(s.apply_one_qubit(2, &hadamard()).is_err());
        assert!(s.apply_rxx(0.3, 0, 0).is_err());
    }

    #[test]
    fn fast_kernels_match_matrices() {
        let s = random_state(3, 11);
        let mut a = s.clone();
        a.apply_h(1);
        a.apply_phase(2, C64::i());
        a.apply_x(0);
        a.apply_cnot(2, 0);
        a.apply_swap(0, 1);
        let mut b = s;
        b.apply_one_qubit(1, &hadamard()).unwrap();
        b.apply_one_qubit(2, &phase_s()).unwrap();
        b.apply_one_qubit(0, &pauli_x()).unwrap();
        b.apply_two_qubit(2, 0, &cnot()).unwrap();
        b.apply_two_qubit(0, 1, &swap()).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!(close(*x, *y, 1e-12));
        }
    }

    #[test]
    fn tensor_orders_low_qubits_first() {
        let a = Statevector::basis(1, "1").unwrap();
        let b = Statevector::basis(2, "01").unwrap();
        assert_eq!(a.tensor(&b).unwrap(), Statevector::basis(3, "101").unwrap());
        assert_eq!(format_bits(0b101, 3), "101");
        assert_eq!(parse_bits("011").unwrap(), 0b110);
    }
}
