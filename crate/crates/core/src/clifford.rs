//! Clifford unitaries as signed binary symplectic tableaus.
//!
//! Row `2k` holds the image `C X_k C†` and row `2k+1` the image `C Z_k C†`,
//! each as a sign bit and `(x, z)` masks in the convention of
//! [`PauliString`]. Global phase is never tracked.

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::pauli::{i_pow, symplectic_product, PauliString};
use crate::state::{Matrix4, Statevector};

/// Largest register a tableau can describe (row masks are `u64`).
pub const MAX_TABLEAU_QUBITS: usize = 63;

/// `|C₁/U(1)|`.
pub const SINGLE_QUBIT_GROUP_ORDER: usize = 24;
/// `|C₂/U(1)|`.
pub const TWO_QUBIT_GROUP_ORDER: usize = 11_520;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Z(usize),
    Cnot(usize, usize),
    Swap(usize, usize),
}

impl Gate {
    pub fn inverse(self) -> Gate {
        match self {
            Gate::S(q) => Gate::Sdg(q),
            Gate::Sdg(q) => Gate::S(q),
            other => other,
        }
    }

    fn apply_to_state(self, state: &mut Statevector) {
        match self {
            Gate::H(q) => state.apply_h(q),
            Gate::S(q) => state.apply_phase(q, C64::i()),
            Gate::Sdg(q) => state.apply_phase(q, -C64::i()),
            Gate::X(q) => state.apply_x(q),
            Gate::Z(q) => state.apply_phase(q, C64::new(-1.0, 0.0)),
            Gate::Cnot(c, t) => state.apply_cnot(c, t),
            Gate::Swap(a, b) => state.apply_swap(a, b),
        }
    }

    fn max_qubit(self) -> usize {
        match self {
            Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::X(q) | Gate::Z(q) => q,
            Gate::Cnot(a, b) | Gate::Swap(a, b) => a.max(b),
        }
    }
}

/// One signed Pauli row: `(−1)^sign · P(x, z)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
struct Row {
    x: u64,
    z: u64,
    sign: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CliffordTableau {
    n_qubits: usize,
    rows: Vec<Row>,
}

/// `i`-exponent `g` with `P(x1,z1)·P(x2,z2) = i^g · P(x1⊕x2, z1⊕z2)`.
fn product_phase(x1: u64, z1: u64, x2: u64, z2: u64) -> u32 {
    let mut g: i32 = 0;
    let mut bits = (x1 | z1) & (x2 | z2);
    while bits != 0 {
        let j = bits.trailing_zeros();
        bits &= bits - 1;
        let (a, b) = ((x1 >> j & 1) as i32, (z1 >> j & 1) as i32);
        let (c, d) = ((x2 >> j & 1) as i32, (z2 >> j & 1) as i32);
        g += match (a, b) {
            (1, 1) => d - c,
            (1, 0) => d * (2 * c - 1),
            (0, 1) => c * (1 - 2 * d),
            _ => 0,
        };
    }
    g.rem_euclid(4) as u32
}

impl CliffordTableau {
    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_n(n_qubits)?;
        let rows = (0..n_qubits)
            .flat_map(|k| {
                [Row { x: 1 << k, z: 0, sign: false }, Row { x: 0, z: 1 << k, sign: false }]
            })
            .collect();
        Ok(Self { n_qubits, rows })
    }

    /// Tableau of the circuit applying `gates` in order.
    pub fn from_gates(n_qubits: usize, gates: &[Gate]) -> Result<Self> {
        let mut t = Self::identity(n_qubits)?;
        check_gates(n_qubits, gates)?;
        for &g in gates {
            t.left_multiply(g);
        }
        Ok(t)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// `C X_k C†` as `(negative, string)`.
    pub fn x_image(&self, k: usize) -> (bool, PauliString) {
        self.row_pauli(2 * k)
    }

    /// `C Z_k C†` as `(negative, string)`.
    pub fn z_image(&self, k: usize) -> (bool, PauliString) {
        self.row_pauli(2 * k + 1)
    }

    fn row_pauli(&self, r: usize) -> (bool, PauliString) {
        let row = self.rows[r];
        (row.sign, PauliString { n_qubits: self.n_qubits, x_mask: row.x, z_mask: row.z })
    }

    /// The `2N × 2N` binary matrix whose row `r` is `(x bits, z bits)` of image `r`.
    pub fn symplectic_matrix(&self) -> Vec<Vec<u8>> {
        let n = self.n_qubits;
        self.rows
            .iter()
            .map(|row| {
                (0..n)
                    .map(|j| (row.x >> j & 1) as u8)
                    .chain((0..n).map(|j| (row.z >> j & 1) as u8))
                    .collect()
            })
            .collect()
    }

    /// Sign bits of the `2N` images.
    pub fn phases(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.sign).collect()
    }

    /// `M Ω Mᵀ = Ω` over GF(2).
    pub fn is_symplectic(&self) -> bool {
        let m = self.rows.len();
        for a in 0..m {
            for b in 0..m {
                let (ra, rb) = (self.rows[a], self.rows[b]);
                let want = u32::from(a / 2 == b / 2 && a != b);
                if symplectic_product(ra.x, ra.z, rb.x, rb.z) != want {
                    return false;
                }
            }
        }
        true
    }

    /// `C P C†` as `(negative, string)`.
    pub fn conjugate(&self, p: &PauliString) -> Result<(bool, PauliString)> {
        if p.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: p.n_qubits });
        }
        // P = i^{#Y} Π X_k^{x_k} Π Z_k^{z_k}
        let mut phase = p.y_count() & 3;
        let (mut x, mut z) = (0u64, 0u64);
        let generators = (0..self.n_qubits)
            .filter(|k| p.x_mask >> k & 1 == 1)
            .map(|k| self.rows[2 * k])
            .chain((0..self.n_qubits).filter(|k| p.z_mask >> k & 1 == 1).map(|k| self.rows[2 * k + 1]));
        for g in generators {
            phase += 2 * u32::from(g.sign) + product_phase(x, z, g.x, g.z);
            x ^= g.x;
            z ^= g.z;
        }
        debug_assert!(phase % 2 == 0, "conjugate of a Hermitian Pauli must be Hermitian");
        Ok(((phase & 3) == 2, PauliString { n_qubits: self.n_qubits, x_mask: x, z_mask: z }))
    }

    /// Tableau of `self · other` (`other` acts first).
    pub fn compose(&self, other: &CliffordTableau) -> Result<CliffordTableau> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        let rows = other
            .rows
            .iter()
            .map(|r| {
                let p = PauliString { n_qubits: self.n_qubits, x_mask: r.x, z_mask: r.z };
                let (neg, img) = self.conjugate(&p)?;
                Ok(Row { x: img.x_mask, z: img.z_mask, sign: neg ^ r.sign })
            })
            .collect::<Result<_>>()?;
        Ok(CliffordTableau { n_qubits: self.n_qubits, rows })
    }

    /// Replaces `C` by `g·C`: every image is conjugated by `g`.
    pub(crate) fn left_multiply(&mut self, gate: Gate) {
        for row in &mut self.rows {
            conjugate_row(row, gate);
        }
    }

    /// Gate sequence `G` (in application order) such that `G·C` is the
    /// identity up to global phase. `C` itself is the reversed inverse.
    fn reduction_sequence(&self) -> Vec<Gate> {
        let n = self.n_qubits;
        let mut t = self.clone();
        let mut gates = Vec::new();
        let mut push = |t: &mut CliffordTableau, g: Gate| {
            t.left_multiply(g);
            gates.push(g);
        };
        for i in 0..n {
            let rx = 2 * i;
            let rz = 2 * i + 1;
            // Image of X_i → ±X_i.
            clear_z_part(&mut t, rx, i, &mut push);
            let xs: Vec<usize> = (i..n).filter(|&j| t.rows[rx].x >> j & 1 == 1).collect();
            let pivot = if xs.contains(&i) { i } else { xs[0] };
            for &j in xs.iter().filter(|&&j| j != pivot) {
                push(&mut t, Gate::Cnot(pivot, j));
            }
            if pivot != i {
                push(&mut t, Gate::Swap(i, pivot));
            }
            // Image of Z_i → ±Z_i, leaving ±X_i fixed.
            push(&mut t, Gate::H(i));
            clear_z_part(&mut t, rz, i, &mut push);
            let xs: Vec<usize> = (i + 1..n).filter(|&j| t.rows[rz].x >> j & 1 == 1).collect();
            for j in xs {
                push(&mut t, Gate::Cnot(i, j));
            }
            push(&mut t, Gate::H(i));
        }
        for i in 0..n {
            if t.rows[2 * i].sign {
                push(&mut t, Gate::Z(i));
            }
            if t.rows[2 * i + 1].sign {
                push(&mut t, Gate::X(i));
            }
        }
        debug_assert_eq!(t, CliffordTableau::identity(n).unwrap());
        gates
    }

    /// A circuit over `{H, S, S†, X, Z, CNOT, SWAP}` implementing this Clifford
    /// up to global phase, in application order.
    pub fn circuit(&self) -> Vec<Gate> {
        self.reduction_sequence().into_iter().rev().map(Gate::inverse).collect()
    }

    /// Dense unitary (global phase arbitrary), column `c` = `C|c⟩`.
    pub fn to_unitary(&self) -> Result<Vec<Vec<C64>>> {
        if self.n_qubits > 10 {
            return Err(Error::Unsupported(format!("dense unitary on {} qubits", self.n_qubits)));
        }
        let circuit = self.circuit();
        let d = 1usize << self.n_qubits;
        let mut m = vec![vec![C64::new(0.0, 0.0); d]; d];
        for col in 0..d {
            let mut amps = vec![C64::new(0.0, 0.0); d];
            amps[col] = C64::new(1.0, 0.0);
            let mut s = Statevector::from_amplitudes(amps)?;
            run_circuit(&mut s, &circuit);
            for (row, a) in s.amplitudes().iter().enumerate() {
                m[row][col] = *a;
            }
        }
        Ok(m)
    }
}

fn check_n(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_TABLEAU_QUBITS {
        return Err(invalid(format!("tableau qubit count {n_qubits} outside 1..=63")));
    }
    Ok(())
}

/// Removes the Z component of row `r` on qubits `≥ from` with `H` / `S`.
fn clear_z_part(
    t: &mut CliffordTableau,
    r: usize,
    from: usize,
    push: &mut impl FnMut(&mut CliffordTableau, Gate),
) {
    for j in from..t.n_qubits {
        let row = t.rows[r];
        if row.z >> j & 1 == 1 {
            if row.x >> j & 1 == 1 {
                push(t, Gate::S(j));
            } else {
                push(t, Gate::H(j));
            }
        }
    }
}

/// Conjugates a signed row by a gate.
fn conjugate_row(row: &mut Row, gate: Gate) {
    let bit = |m: u64, q: usize| m >> q & 1 == 1;
    match gate {
        Gate::H(q) => {
            let (x, z) = (bit(row.x, q), bit(row.z, q));
            row.sign ^= x && z;
            if x != z {
                row.x ^= 1 << q;
                row.z ^= 1 << q;
            }
        }
        Gate::S(q) => {
            let (x, z) = (bit(row.x, q), bit(row.z, q));
            row.sign ^= x && z;
            if x {
                row.z ^= 1 << q;
            }
        }
        Gate::Sdg(q) => {
            let (x, z) = (bit(row.x, q), bit(row.z, q));
            row.sign ^= x && !z;
            if x {
                row.z ^= 1 << q;
            }
        }
        Gate::X(q) => row.sign ^= bit(row.z, q),
        Gate::Z(q) => row.sign ^= bit(row.x, q),
        Gate::Cnot(a, b) => {
            let (xa, za, xb, zb) = (bit(row.x, a), bit(row.z, a), bit(row.x, b), bit(row.z, b));
            row.sign ^= xa && zb && (xb == za);
            if xa {
                row.x ^= 1 << b;
            }
            if zb {
                row.z ^= 1 << a;
            }
        }
        Gate::Swap(a, b) => {
            for m in [&mut row.x, &mut row.z] {
                if bit(*m, a) != bit(*m, b) {
                    *m ^= (1 << a) | (1 << b);
                }
            }
        }
    }
}

fn check_gates(n_qubits: usize, gates: &[Gate]) -> Result<()> {
    for &g in gates {
        if g.max_qubit() >= n_qubits {
            return Err(invalid(format!("gate {g:?} outside {n_qubits} qubits")));
        }
        if let Gate::Cnot(a, b) | Gate::Swap(a, b) = g {
            if a == b {
                return Err(invalid(format!("gate {g:?} on repeated qubit")));
            }
        }
    }
    Ok(())
}

/// Runs a gate list on a copy of `state`, first gate first.
pub fn apply_gates(state: &Statevector, gates: &[Gate]) -> Result<Statevector> {
    check_gates(state.n_qubits(), gates)?;
    let mut out = state.clone();
    run_circuit(&mut out, gates);
    Ok(out)
}

pub(crate) fn run_circuit(state: &mut Statevector, circuit: &[Gate]) {
    for &g in circuit {
        g.apply_to_state(state);
    }
}

/// `C|Ψ⟩` up to global phase.
pub fn apply_clifford(state: &Statevector, c: &CliffordTableau) -> Result<Statevector> {
    state.check_same(c.n_qubits)?;
    let mut out = state.clone();
    run_circuit(&mut out, &c.circuit());
    Ok(out)
}

/// Symplectic vector `(x, z)`.
type SymVec = (u64, u64);

fn omega(a: SymVec, b: SymVec) -> u32 {
    symplectic_product(a.0, a.1, b.0, b.1)
}

/// Projects `u` onto the symplectic complement of the hyperbolic pairs
/// `(v_j, w_j)` (each with `ω(v_j, w_j) = 1`). Linear, onto, with equal-size
/// fibres, so a uniform `u` gives a uniform element of the complement.
fn project_out(mut u: SymVec, pairs: &[(SymVec, SymVec)]) -> SymVec {
    for &(v, w) in pairs {
        let cv = omega(u, w) == 1;
        let cw = omega(u, v) == 1;
        if cv {
            u = (u.0 ^ v.0, u.1 ^ v.1);
        }
        if cw {
            u = (u.0 ^ w.0, u.1 ^ w.1);
        }
    }
    u
}

/// Uniformly random Clifford (modulo global phase) on `n_qubits` qubits.
///
/// The images of `X_k`, `Z_k` are drawn as a uniformly random symplectic basis
/// built one hyperbolic pair at a time inside the complement of the previous
/// pairs; the sign bits are uniform and independent.
pub fn random_clifford<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<CliffordTableau> {
    check_n(n_qubits)?;
    let full = if n_qubits == 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
    let draw = |rng: &mut R| -> SymVec { (rng.gen::<u64>() & full, rng.gen::<u64>() & full) };
    let mut pairs: Vec<(SymVec, SymVec)> = Vec::with_capacity(n_qubits);
    let mut rows = Vec::with_capacity(2 * n_qubits);
    for _ in 0..n_qubits {
        let v = loop {
            let u = project_out(draw(rng), &pairs);
            if u != (0, 0) {
                break u;
            }
        };
        let w = loop {
            let u = project_out(draw(rng), &pairs);
            if omega(v, u) == 1 {
                break u;
            }
        };
        pairs.push((v, w));
        rows.push(Row { x: v.0, z: v.1, sign: rng.gen() });
        rows.push(Row { x: w.0, z: w.1, sign: rng.gen() });
    }
    Ok(CliffordTableau { n_qubits, rows })
}

/// Every Clifford on 1 or 2 qubits (24 or 11 520 elements), in a fixed order.
pub fn enumerate_cliffords(n_qubits: usize) -> Result<Vec<CliffordTableau>> {
    if !(1..=2).contains(&n_qubits) {
        return Err(Error::Unsupported(format!(
            "exhaustive Clifford enumeration is limited to 1 or 2 qubits, got {n_qubits}"
        )));
    }
    let space: Vec<SymVec> = {
        let d = 1u64 << n_qubits;
        (0..d).flat_map(|x| (0..d).map(move |z| (x, z))).collect()
    };
    let mut bases: Vec<Vec<(SymVec, SymVec)>> = vec![Vec::new()];
    for _ in 0..n_qubits {
        let mut next = Vec::new();
        for pairs in &bases {
            let complement: Vec<SymVec> = space
                .iter()
                .copied()
                .filter(|&u| pairs.iter().all(|&(v, w)| omega(u, v) == 0 && omega(u, w) == 0))
                .collect();
            for &v in complement.iter().filter(|&&v| v != (0, 0)) {
                for &w in complement.iter().filter(|&&w| omega(v, w) == 1) {
                    let mut extended = pairs.clone();
                    extended.push((v, w));
                    next.push(extended);
                }
            }
        }
        bases = next;
    }
    let n_signs = 1u32 << (2 * n_qubits);
    let mut out = Vec::with_capacity(bases.len() * n_signs as usize);
    for pairs in &bases {
        for signs in 0..n_signs {
            let rows = pairs
                .iter()
                .enumerate()
                .flat_map(|(k, &(v, w))| {
                    [
                        Row { x: v.0, z: v.1, sign: signs >> (2 * k) & 1 == 1 },
                        Row { x: w.0, z: w.1, sign: signs >> (2 * k + 1) & 1 == 1 },
                    ]
                })
                .collect();
            out.push(CliffordTableau { n_qubits, rows });
        }
    }
    Ok(out)
}

/// Uniform two-qubit Clifford together with its 4×4 matrix, indexed
/// `b₀ + 2·b₁` so it can be fed to [`Statevector::apply_two_qubit`].
pub fn random_two_qubit_clifford<R: Rng + ?Sized>(rng: &mut R) -> (Matrix4, CliffordTableau) {
    let t = random_clifford(2, rng).expect("two qubits is a valid size");
    (two_qubit_matrix(&t), t)
}

pub(crate) fn two_qubit_matrix(t: &CliffordTableau) -> Matrix4 {
    let dense = t.to_unitary().expect("two-qubit unitary");
    let mut m = [[C64::new(0.0, 0.0); 4]; 4];
    for (r, row) in dense.iter().enumerate() {
        m[r].copy_from_slice(row);
    }
    m
}

/// Participation entropy (every Rényi index) of `C|0…0⟩`: the GF(2) rank of
/// the X block of the stabilizer generators `C Z_k C†`.
pub fn stabilizer_participation_entropy(c: &CliffordTableau) -> u32 {
    let rows: Vec<u64> = (0..c.n_qubits).map(|k| c.rows[2 * k + 1].x).collect();
    gf2_rank(rows)
}

/// Rank over GF(2) of bit-packed rows.
pub fn gf2_rank(mut rows: Vec<u64>) -> u32 {
    let mut rank = 0;
    for bit in 0..64 {
        let mask = 1u64 << bit;
        let Some(p) = (rank..rows.len()).find(|&r| rows[r] & mask != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank];
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && *row & mask != 0 {
                *row ^= pivot;
            }
        }
        rank += 1;
    }
    rank as u32
}

/// Phase of `P(x1,z1)·P(x2,z2)` relative to `P(x1⊕x2, z1⊕z2)`.
pub fn pauli_product_phase(a: &PauliString, b: &PauliString) -> C64 {
    i_pow(product_phase(a.x_mask, a.z_mask, b.x_mask, b.z_mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::multifractal_flatness;
    use crate::pauli::{enumerate_paulis, pauli_expectation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::{HashMap, HashSet};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn haar(n: usize, seed: u64) -> Statevector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        crate::oracles::sample_haar_state(n, &mut rng).unwrap()
    }

    #[test]
    fn product_phase_matches_single_qubit_table() {
        // XY = iZ, YZ = iX, ZX = iY and the reverses
        let p = |s: &str| PauliString::parse(s).unwrap();
        assert_eq!(pauli_product_phase(&p("X"), &p("Y")), C64::i());
        assert_eq!(pauli_product_phase(&p("Y"), &p("Z")), C64::i());
        assert_eq!(pauli_product_phase(&p("Z"), &p("X")), C64::i());
        assert_eq!(pauli_product_phase(&p("Y"), &p("X")), -C64::i());
        assert_eq!(pauli_product_phase(&p("X"), &p("X")), C64::new(1.0, 0.0));
    }

    #[test]
    fn enumeration_sizes_and_distinctness() {
        let one = enumerate_cliffords(1).unwrap();
        assert_eq!(one.len(), SINGLE_QUBIT_GROUP_ORDER);
        assert_eq!(one.iter().collect::<HashSet<_>>().len(), 24);
        let two = enumerate_cliffords(2).unwrap();
        assert_eq!(two.len(), TWO_QUBIT_GROUP_ORDER);
        assert_eq!(two.iter().collect::<HashSet<_>>().len(), 11_520);
        assert!(one.iter().chain(&two).all(CliffordTableau::is_symplectic));
        assert!(matches!(enumerate_cliffords(3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn single_qubit_frequencies() {
        let group: HashMap<CliffordTableau, usize> =
            enumerate_cliffords(1).unwrap().into_iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 24_000;
        let mut counts = [0usize; 24];
        for _ in 0..draws {
            let c = random_clifford(1, &mut rng).unwrap();
            assert!(c.is_symplectic());
            counts[group[&c]] += 1;
        }
        let p = 1.0 / 24.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts {
            assert!((c as f64 - draws as f64 * p).abs() < 5.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn identity_and_hadamard_tableaus() {
        let id = CliffordTableau::identity(3).unwrap();
        let s = haar(3, 9);
        let out = apply_clifford(&s, &id).unwrap();
        assert!((out.fidelity(&s).unwrap() - 1.0).abs() < 1e-12);

        let h = CliffordTableau::from_gates(1, &[Gate::H(0)]).unwrap();
        let plus = apply_clifford(&Statevector::zero(1).unwrap(), &h).unwrap();
        let want = Statevector::from_amplitudes(vec![C64::new(FRAC_1_SQRT_2, 0.0); 2]).unwrap();
        assert!((plus.fidelity(&want).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synthesized_circuit_reproduces_tableau() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for n in 1..=5 {
            for _ in 0..20 {
                let c = random_clifford(n, &mut rng).unwrap();
                let rebuilt = CliffordTableau::from_gates(n, &c.circuit()).unwrap();
                assert_eq!(rebuilt, c);
            }
        }
    }

    #[test]
    fn expectations_follow_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=4 {
            let s = haar(n, 30 + n as u64);
            for _ in 0..5 {
                let c = random_clifford(n, &mut rng).unwrap();
                let out = apply_clifford(&s, &c).unwrap();
                for p in enumerate_paulis(n) {
                    let (neg, img) = c.conjugate(&p).unwrap();
                    let sign = if neg { -1.0 } else { 1.0 };
                    let lhs = pauli_expectation(&out, &img).unwrap() * sign;
                    let rhs = pauli_expectation(&s, &p).unwrap();
                    assert!((lhs - rhs).abs() < 1e-10, "n={n} P={p}");
                }
            }
        }
    }

    #[test]
    fn composition_matches_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 1..=4 {
            let a = random_clifford(n, &mut rng).unwrap();
            let b = random_clifford(n, &mut rng).unwrap();
            let ab = a.compose(&b).unwrap();
            assert!(ab.is_symplectic());
            let s = haar(n, 4);
            let seq = apply_clifford(&apply_clifford(&s, &b).unwrap(), &a).unwrap();
            let direct = apply_clifford(&s, &ab).unwrap();
            assert!((seq.fidelity(&direct).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn two_qubit_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, a) = random_two_qubit_clifford(&mut rng);
        let (m, b) = random_two_qubit_clifford(&mut rng);
        assert!(a.compose(&b).unwrap().is_symplectic());
        let (neg, img) = a.conjugate(&PauliString::parse("XI").unwrap()).unwrap();
        let _ = neg;
        assert!(!img.is_identity());
        // matrix agrees with the circuit
        let s = haar(2, 12);
        let mut via_matrix = s.clone();
        via_matrix.apply_two_qubit(0, 1, &m).unwrap();
        let via_circuit = apply_clifford(&s, &b).unwrap();
        assert!((via_matrix.fidelity(&via_circuit).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tableau_participation_entropy() {
        assert_eq!(stabilizer_participation_entropy(&CliffordTableau::identity(4).unwrap()), 0);
        let hs: Vec<Gate> = (0..4).map(Gate::H).collect();
        assert_eq!(stabilizer_participation_entropy(&CliffordTableau::from_gates(4, &hs).unwrap()), 4);
        let mut ghz = vec![Gate::H(0)];
        ghz.extend((0..4).map(|k| Gate::Cnot(k, k + 1)));
        let t = CliffordTableau::from_gates(5, &ghz).unwrap();
        assert_eq!(stabilizer_participation_entropy(&t), 1);
        let s = apply_clifford(&Statevector::zero(5).unwrap(), &t).unwrap();
        let p = s.probabilities();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[31] - 0.5).abs() < 1e-12);
        assert!(multifractal_flatness(&s).abs() < 1e-12);
    }

    #[test]
    fn gf2_rank_small_cases() {
        assert_eq!(gf2_rank(vec![]), 0);
        assert_eq!(gf2_rank(vec![0b11, 0b11, 0b01]), 2);
        assert_eq!(gf2_rank(vec![0b100, 0b010, 0b001, 0b111]), 3);
    }

    #[test]
    fn rejects_bad_circuits() {
        assert!(CliffordTableau::from_gates(2, &[Gate::H(2)]).is_err());
        assert!(CliffordTableau::from_gates(2, &[Gate::Cnot(1, 1)]).is_err());
        let c = CliffordTableau::identity(2).unwrap();
        assert!(apply_clifford(&Statevector::zero(3).unwrap(), &c).is_err());
    }
}
