//! Symbolic Pauli-string algebra and its dense counterpart.
//!
//! Words are stored as `X^x Z^z` with site `j` on bit `j` of both masks, so
//! `Y_j = i X_j Z_j`. Basis state `|b>` has site `j` in `|1>` (spin down) when
//! bit `j` of `b` is set.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_SYMBOLIC_QUBITS: usize = 64;
pub const DENSE_QUBIT_LIMIT: usize = 12;
pub const STATE_QUBIT_LIMIT: usize = 15;
pub const PRUNE_TOL: f64 = 1e-14;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// The bare word `X^x Z^z`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliWord {
    pub x: u64,
    pub z: u64,
}

impl PauliWord {
    pub const IDENTITY: PauliWord = PauliWord { x: 0, z: 0 };

    pub fn new(x: u64, z: u64) -> Self {
        Self { x, z }
    }

    /// `(X^x1 Z^z1)(X^x2 Z^z2) = sign * X^(x1^x2) Z^(z1^z2)`.
    pub fn mul(self, other: PauliWord) -> (PauliWord, f64) {
        let sign = if (self.z & other.x).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        (PauliWord::new(self.x ^ other.x, self.z ^ other.z), sign)
    }

    pub fn commutes_with(self, other: PauliWord) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    pub fn y_count(self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Sign `s` in `W^2 = s * 1` (and in `W^dagger = s * W`).
    pub fn square_sign(self) -> f64 {
        if self.y_count() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn is_diagonal(self) -> bool {
        self.x == 0
    }

    fn max_site(self) -> Option<usize> {
        let m = self.x | self.z;
        (m != 0).then(|| 63 - m.leading_zeros() as usize)
    }
}

/// A single Pauli string with a phase `i^phase`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PauliString {
    pub n_qubits: usize,
    pub word: PauliWord,
    pub phase: u8,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_symbolic(n_qubits)?;
        Ok(Self {
            n_qubits,
            word: PauliWord::IDENTITY,
            phase: 0,
        })
    }

    /// Product of single-site factors, e.g. `[(0, Pauli::X), (2, Pauli::Y)]`.
    pub fn from_factors(n_qubits: usize, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity(n_qubits)?;
        for &(site, p) in factors {
            if site >= n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: n_qubits,
                    found: site + 1,
                });
            }
            let bit = 1u64 << site;
            let single = match p {
                Pauli::I => continue,
                Pauli::X => Self::raw(n_qubits, bit, 0, 0),
                Pauli::Z => Self::raw(n_qubits, 0, bit, 0),
                Pauli::Y => Self::raw(n_qubits, bit, bit, 1),
            };
            s = pauli_mul(&s, &single)?;
        }
        Ok(s)
    }

    /// Parses a label such as `"XIZY"`; character `j` acts on site `j`.
    pub fn from_label(label: &str) -> Result<Self> {
        let factors = label
            .chars()
            .enumerate()
            .map(|(j, c)| match c {
                'I' => Ok((j, Pauli::I)),
                'X' => Ok((j, Pauli::X)),
                'Y' => Ok((j, Pauli::Y)),
                'Z' => Ok((j, Pauli::Z)),
                other => Err(Error::Domain(format!("bad Pauli label character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_factors(label.len(), &factors)
    }

    fn raw(n_qubits: usize, x: u64, z: u64, phase: u8) -> Self {
        Self {
            n_qubits,
            word: PauliWord::new(x, z),
            phase,
        }
    }

    pub fn coefficient(&self) -> Complex64 {
        I.powu(u32::from(self.phase))
    }
}

pub fn pauli_mul(a: &PauliString, b: &PauliString) -> Result<PauliString> {
    same_size(a.n_qubits, b.n_qubits)?;
    let (word, sign) = a.word.mul(b.word);
    let flip = if sign < 0.0 { 2 } else { 0 };
    Ok(PauliString {
        n_qubits: a.n_qubits,
        word,
        phase: (a.phase + b.phase + flip) % 4,
    })
}

fn check_symbolic(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("operator needs at least one qubit".into()));
    }
    if n > MAX_SYMBOLIC_QUBITS {
        return Err(Error::Capacity {
            what: "symbolic operator",
            qubits: n,
            limit: MAX_SYMBOLIC_QUBITS,
        });
    }
    Ok(())
}

fn same_size(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        })
    }
}

/// Which half of the diagonal decomposition `D = D^[j] Z_j + D^[-j]` to return.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagPart {
    KeepJ,
    DropJ,
}

/// A weighted sum of Pauli words.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinOperator {
    n_qubits: usize,
    terms: BTreeMap<PauliWord, Complex64>,
}

impl SpinOperator {
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_symbolic(n_qubits)?;
        Ok(Self {
            n_qubits,
            terms: BTreeMap::new(),
        })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        let mut op = Self::zero(n_qubits)?;
        op.add_word(PauliWord::IDENTITY, Complex64::new(1.0, 0.0));
        Ok(op)
    }

    pub fn from_string(s: &PauliString, weight: Complex64) -> Result<Self> {
        let mut op = Self::zero(s.n_qubits)?;
        op.add_word(s.word, weight * s.coefficient());
        Ok(op)
    }

    pub fn from_factors(n_qubits: usize, factors: &[(usize, Pauli)], weight: f64) -> Result<Self> {
        let s = PauliString::from_factors(n_qubits, factors)?;
        Self::from_string(&s, Complex64::new(weight, 0.0))
    }

    pub fn single(n_qubits: usize, site: usize, p: Pauli) -> Result<Self> {
        Self::from_factors(n_qubits, &[(site, p)], 1.0)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (PauliWord, Complex64)> + '_ {
        self.terms.iter().map(|(w, c)| (*w, *c))
    }

    pub fn weight(&self, word: PauliWord) -> Complex64 {
        self.terms.get(&word).copied().unwrap_or_default()
    }

    /// Adds `weight * word`, dropping the entry if it cancels.
    pub fn add_word(&mut self, word: PauliWord, weight: Complex64) {
        debug_assert!(word.max_site().map_or(true, |s| s < self.n_qubits));
        let entry = self.terms.entry(word).or_default();
        *entry += weight;
        if entry.norm() < PRUNE_TOL {
            self.terms.remove(&word);
        }
    }

    pub fn add(&self, other: &SpinOperator) -> Result<SpinOperator> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &SpinOperator) -> Result<SpinOperator> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: Complex64, other: &SpinOperator) -> Result<SpinOperator> {
        same_size(self.n_qubits, other.n_qubits)?;
        let mut out = self.clone();
        for (w, c) in other.terms() {
            out.add_word(w, a * c);
        }
        Ok(out)
    }

    pub fn scale(&self, a: Complex64) -> SpinOperator {
        let mut out = Self {
            n_qubits: self.n_qubits,
            terms: BTreeMap::new(),
        };
        for (w, c) in self.terms() {
            out.add_word(w, a * c);
        }
        out
    }

    pub fn scale_real(&self, a: f64) -> SpinOperator {
        self.scale(Complex64::new(a, 0.0))
    }

    /// Linear combination `sum_i a_i * ops_i`.
    pub fn linear_combination(n_qubits: usize, coeffs: &[f64], ops: &[SpinOperator]) -> Result<SpinOperator> {
        if coeffs.len() != ops.len() {
            return Err(Error::Arity {
                expected: ops.len(),
                found: coeffs.len(),
            });
        }
        let mut out = Self::zero(n_qubits)?;
        for (a, op) in coeffs.iter().zip(ops) {
            out = out.axpy(Complex64::new(*a, 0.0), op)?;
        }
        Ok(out)
    }

    pub fn mul(&self, other: &SpinOperator) -> Result<SpinOperator> {
        same_size(self.n_qubits, other.n_qubits)?;
        let mut out = Self::zero(self.n_qubits)?;
        for (wa, ca) in self.terms() {
            for (wb, cb) in other.terms() {
                let (w, s) = wa.mul(wb);
                out.add_word(w, ca * cb * s);
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> SpinOperator {
        let mut out = Self {
            n_qubits: self.n_qubits,
            terms: BTreeMap::new(),
        };
        for (w, c) in self.terms() {
            out.add_word(w, c.conj() * w.square_sign());
        }
        out
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms()
            .all(|(w, c)| (c - c.conj() * w.square_sign()).norm() <= tol)
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.keys().all(|w| w.is_diagonal())
    }

    /// `Tr(A)`.
    pub fn trace(&self) -> Complex64 {
        self.weight(PauliWord::IDENTITY) * dim_f64(self.n_qubits)
    }

    pub fn diag_component(&self, site: usize, part: DiagPart) -> Result<SpinOperator> {
        if site >= self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: site + 1,
            });
        }
        if !self.is_diagonal() {
            return Err(Error::Domain("diagonal decomposition needs a diagonal operator".into()));
        }
        let bit = 1u64 << site;
        let mut out = Self::zero(self.n_qubits)?;
        for (w, c) in self.terms() {
            let has = w.z & bit != 0;
            match (part, has) {
                (DiagPart::KeepJ, true) => out.add_word(PauliWord::new(0, w.z & !bit), c),
                (DiagPart::DropJ, false) => out.add_word(w, c),
                _ => {}
            }
        }
        Ok(out)
    }

    /// Values on the computational basis of a diagonal operator.
    pub fn diagonal_values(&self) -> Result<Vec<Complex64>> {
        if !self.is_diagonal() {
            return Err(Error::Domain("operator is not diagonal".into()));
        }
        check_state(self.n_qubits)?;
        let dim = 1usize << self.n_qubits;
        let mut out = vec![Complex64::default(); dim];
        for (w, c) in self.terms() {
            for (b, v) in out.iter_mut().enumerate() {
                *v += c * parity_sign(w.z & b as u64);
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        self.to_dense_with_limit(DENSE_QUBIT_LIMIT)
    }

    pub fn to_dense_with_limit(&self, limit: usize) -> Result<DenseOperator> {
        if self.n_qubits > limit {
            return Err(Error::Capacity {
                what: "dense operator",
                qubits: self.n_qubits,
                limit,
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (w, c) in self.terms() {
            for b in 0..dim {
                let row = b ^ w.x as usize;
                m[(row, b)] += c * parity_sign(w.z & b as u64);
            }
        }
        Ok(DenseOperator::from_matrix(m)?)
    }
}

pub fn commutator(a: &SpinOperator, b: &SpinOperator) -> Result<SpinOperator> {
    same_size(a.n_qubits, b.n_qubits)?;
    let mut out = SpinOperator::zero(a.n_qubits)?;
    for (wa, ca) in a.terms() {
        for (wb, cb) in b.terms() {
            if !wa.commutes_with(wb) {
                let (w, s) = wa.mul(wb);
                out.add_word(w, ca * cb * (2.0 * s));
            }
        }
    }
    Ok(out)
}

/// `Tr(AB)`; only words present in both operands contribute.
pub fn trace_product(a: &SpinOperator, b: &SpinOperator) -> Result<Complex64> {
    Ok(normalized_trace_product(a, b)? * dim_f64(a.n_qubits))
}

/// `Tr(AB) / 2^N`.
pub fn normalized_trace_product(a: &SpinOperator, b: &SpinOperator) -> Result<Complex64> {
    same_size(a.n_qubits, b.n_qubits)?;
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    Ok(small
        .terms()
        .filter_map(|(w, c)| large.terms.get(&w).map(|d| c * d * w.square_sign()))
        .sum())
}

pub(crate) fn parity_sign(bits: u64) -> f64 {
    if bits.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn dim_f64(n: usize) -> f64 {
    2f64.powi(n as i32)
}

pub(crate) fn check_state(n: usize) -> Result<()> {
    if n > STATE_QUBIT_LIMIT {
        Err(Error::Capacity {
            what: "state vector",
            qubits: n,
            limit: STATE_QUBIT_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Dense `2^N x 2^N` complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.ncols(),
            });
        }
        if !dim.is_power_of_two() {
            return Err(Error::Domain(format!("dimension {dim} is not a power of two")));
        }
        Ok(Self { matrix })
    }

    pub fn zeros(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self {
            matrix: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let err = self.hermiticity_error();
        if err <= tol {
            Ok(())
        } else {
            Err(Error::NonHermitian(err))
        }
    }

    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|c| c.im == 0.0)
    }

    fn check_same(&self, other: &DenseOperator) -> Result<()> {
        same_size(self.dim(), other.dim())
    }

    pub fn add(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.check_same(other)?;
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.check_same(other)?;
        Ok(Self {
            matrix: &self.matrix - &other.matrix,
        })
    }

    pub fn scale(&self, a: Complex64) -> DenseOperator {
        Self {
            matrix: &self.matrix * a,
        }
    }

    pub fn mul(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.check_same(other)?;
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn commutator(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.check_same(other)?;
        Ok(Self {
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        })
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `Tr(AB)` without forming the product.
    pub fn trace_product(&self, other: &DenseOperator) -> Result<Complex64> {
        self.check_same(other)?;
        let n = self.dim();
        let mut acc = Complex64::default();
        for i in 0..n {
            for k in 0..n {
                acc += self.matrix[(i, k)] * other.matrix[(k, i)];
            }
        }
        Ok(acc)
    }

    pub fn apply(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        same_size(self.dim(), psi.len())?;
        let n = self.dim();
        let mut out = vec![Complex64::default(); n];
        for (k, &p) in psi.iter().enumerate() {
            if p == Complex64::default() {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.matrix[(i, k)] * p;
            }
        }
        Ok(out)
    }

    /// Eigenvalues in ascending order with matching eigenvector columns.
    pub fn eigh(&self, tol: f64) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
        self.ensure_hermitian(tol)?;
        let n = self.dim();
        let (values, vectors): (Vec<f64>, DMatrix<Complex64>) = if self.is_real() {
            let re = self.matrix.map(|c| c.re);
            let eig = nalgebra::SymmetricEigen::new(re);
            (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.map(|v| Complex64::new(v, 0.0)))
        } else {
            let eig = nalgebra::SymmetricEigen::new(self.matrix.clone());
            (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let sorted_values = order.iter().map(|&i| values[i]).collect();
        let sorted_vectors = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
        Ok((sorted_values, sorted_vectors))
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_matrix(p: Pauli) -> DMatrix<Complex64> {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        match p {
            Pauli::I => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
            Pauli::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            Pauli::Y => DMatrix::from_row_slice(2, 2, &[z, -I, I, z]),
            Pauli::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    }

    /// Kronecker construction with site 0 as the least significant bit.
    fn kron_string(factors: &[Pauli]) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
        for &p in factors {
            m = single_matrix(p).kronecker(&m);
        }
        m
    }

    const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    #[test]
    fn pauli_product_table_is_phase_exact() {
        for &a in &ALL {
            for &b in &ALL {
                let pa = PauliString::from_factors(1, &[(0, a)]).unwrap();
                let pb = PauliString::from_factors(1, &[(0, b)]).unwrap();
                let prod = pauli_mul(&pa, &pb).unwrap();
                let got = SpinOperator::from_string(&prod, c(1.0, 0.0)).unwrap().to_dense().unwrap();
                let want = single_matrix(a) * single_matrix(b);
                assert!((got.matrix() - want).norm() < 1e-15, "{a:?}*{b:?}");
            }
        }
    }

    #[test]
    fn pauli_mul_examples() {
        let x = PauliString::from_label("X").unwrap();
        let y = PauliString::from_label("Y").unwrap();
        let z = PauliString::from_label("Z").unwrap();
        let xy = pauli_mul(&x, &y).unwrap();
        assert_eq!(xy.word, z.word);
        assert_eq!(xy.coefficient(), I * z.coefficient());

        let xx = pauli_mul(&x, &x).unwrap();
        assert_eq!(xx.word, PauliWord::IDENTITY);
        assert_eq!(xx.coefficient(), c(1.0, 0.0));

        let a = PauliString::from_label("XZ").unwrap();
        let b = PauliString::from_label("YZ").unwrap();
        let ab = SpinOperator::from_string(&pauli_mul(&a, &b).unwrap(), c(1.0, 0.0)).unwrap();
        let want = SpinOperator::from_factors(2, &[(0, Pauli::Z)], 1.0).unwrap().scale(I);
        assert_eq!(ab, want);
    }

    #[test]
    fn pauli_mul_size_mismatch() {
        let a = PauliString::from_label("X").unwrap();
        let b = PauliString::from_label("XX").unwrap();
        assert!(matches!(pauli_mul(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn commutator_examples() {
        let z = SpinOperator::single(1, 0, Pauli::Z).unwrap();
        let x = SpinOperator::single(1, 0, Pauli::X).unwrap();
        let y = SpinOperator::single(1, 0, Pauli::Y).unwrap();
        assert_eq!(commutator(&z, &x).unwrap(), y.scale(c(0.0, 2.0)));
        assert!(commutator(&x, &x).unwrap().is_zero());
    }

    #[test]
    fn two_spin_commutator_matches_dense() {
        let ha = SpinOperator::single(2, 0, Pauli::Z)
            .unwrap()
            .add(&SpinOperator::single(2, 1, Pauli::Z).unwrap())
            .unwrap()
            .scale_real(-1.0);
        let hb = SpinOperator::from_factors(2, &[(0, Pauli::X), (1, Pauli::X)], 1.0)
            .unwrap()
            .add(&SpinOperator::from_factors(2, &[(0, Pauli::Z), (1, Pauli::Z)], 1.0).unwrap())
            .unwrap();
        let sym = commutator(&ha, &hb).unwrap().to_dense().unwrap();
        let dense = ha.to_dense().unwrap().commutator(&hb.to_dense().unwrap()).unwrap();
        assert!(sym.max_abs_diff(&dense).unwrap() < 1e-14);
        assert!(!sym.is_hermitian(1e-12));
    }

    #[test]
    fn trace_examples() {
        let x = SpinOperator::single(1, 0, Pauli::X).unwrap();
        let z = SpinOperator::single(1, 0, Pauli::Z).unwrap();
        assert_eq!(trace_product(&x, &x).unwrap(), c(2.0, 0.0));
        assert_eq!(trace_product(&x, &z).unwrap(), c(0.0, 0.0));
        let y = SpinOperator::single(1, 0, Pauli::Y).unwrap();
        assert_eq!(trace_product(&y, &y).unwrap(), c(2.0, 0.0));
    }

    #[test]
    fn to_dense_examples() {
        let z = SpinOperator::single(1, 0, Pauli::Z).unwrap().to_dense().unwrap();
        assert_eq!(z.matrix(), &single_matrix(Pauli::Z));
        let x = SpinOperator::single(1, 0, Pauli::X).unwrap().to_dense().unwrap();
        assert_eq!(x.matrix(), &single_matrix(Pauli::X));
    }

    #[test]
    fn kron_ordering_matches_construction() {
        let op = SpinOperator::from_factors(3, &[(0, Pauli::X), (2, Pauli::Y)], 1.0).unwrap();
        let want = kron_string(&[Pauli::X, Pauli::I, Pauli::Y]);
        assert!((op.to_dense().unwrap().matrix() - want).norm() < 1e-15);
    }

    #[test]
    fn dense_capacity() {
        let op = SpinOperator::single(13, 0, Pauli::Z).unwrap();
        assert!(matches!(op.to_dense(), Err(Error::Capacity { .. })));
        assert!(SpinOperator::zero(65).is_err());
    }

    #[test]
    fn diag_component_examples() {
        let zz = SpinOperator::from_factors(2, &[(0, Pauli::Z), (1, Pauli::Z)], 1.0).unwrap();
        assert_eq!(
            zz.diag_component(0, DiagPart::KeepJ).unwrap(),
            SpinOperator::single(2, 1, Pauli::Z).unwrap()
        );
        assert!(zz.diag_component(0, DiagPart::DropJ).unwrap().is_zero());

        let z0 = SpinOperator::single(2, 0, Pauli::Z).unwrap();
        assert!(z0.diag_component(1, DiagPart::KeepJ).unwrap().is_zero());
        assert_eq!(z0.diag_component(1, DiagPart::DropJ).unwrap(), z0);

        let x = SpinOperator::single(2, 0, Pauli::X).unwrap();
        assert!(matches!(x.diag_component(0, DiagPart::KeepJ), Err(Error::Domain(_))));
    }

    #[test]
    fn adjoint_matches_dense() {
        let op = SpinOperator::from_factors(2, &[(0, Pauli::Y), (1, Pauli::X)], 1.0)
            .unwrap()
            .scale(c(0.3, 0.7));
        let a = op.adjoint().to_dense().unwrap();
        let d = op.to_dense().unwrap().matrix().adjoint();
        assert!((a.matrix() - d).norm() < 1e-15);
    }

    fn word_strategy(n: usize) -> impl Strategy<Value = (u64, u64, f64, f64)> {
        let mask = (1u64 << n) - 1;
        (0..=mask, 0..=mask, -1.0..1.0f64, -1.0..1.0f64)
    }

    fn random_op(n: usize, words: &[(u64, u64, f64, f64)]) -> SpinOperator {
        let mut op = SpinOperator::zero(n).unwrap();
        for &(x, z, re, im) in words {
            op.add_word(PauliWord::new(x, z), c(re, im));
        }
        op
    }

    fn hermitian_op(n: usize, words: &[(u64, u64, f64, f64)]) -> SpinOperator {
        let op = random_op(n, words);
        op.add(&op.adjoint()).unwrap()
    }

    proptest! {
        #[test]
        fn trace_product_matches_dense(
            n in 1usize..=4,
            wa in prop::collection::vec(word_strategy(4), 1..10),
            wb in prop::collection::vec(word_strategy(4), 1..10),
        ) {
            let mask = (1u64 << n) - 1;
            let trim = |v: &[(u64, u64, f64, f64)]| v.iter().map(|&(x, z, a, b)| (x & mask, z & mask, a, b)).collect::<Vec<_>>();
            let a = random_op(n, &trim(&wa));
            let b = random_op(n, &trim(&wb));
            let sym = trace_product(&a, &b).unwrap();
            let dense = a.to_dense().unwrap().trace_product(&b.to_dense().unwrap()).unwrap();
            prop_assert!((sym - dense).norm() <= 1e-12);

            let prod = a.mul(&b).unwrap().to_dense().unwrap();
            let dprod = a.to_dense().unwrap().mul(&b.to_dense().unwrap()).unwrap();
            prop_assert!(prod.max_abs_diff(&dprod).unwrap() <= 1e-12);
        }

        #[test]
        fn pauli_mul_is_associative(
            a in word_strategy(3), b in word_strategy(3), d in word_strategy(3),
        ) {
            let s = |w: (u64, u64, f64, f64)| PauliString { n_qubits: 3, word: PauliWord::new(w.0 & 7, w.1 & 7), phase: 0 };
            let (pa, pb, pd) = (s(a), s(b), s(d));
            let left = pauli_mul(&pauli_mul(&pa, &pb).unwrap(), &pd).unwrap();
            let right = pauli_mul(&pa, &pauli_mul(&pb, &pd).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn hermiticity_is_preserved(
            wa in prop::collection::vec(word_strategy(3), 1..8),
            wb in prop::collection::vec(word_strategy(3), 1..8),
            s in -3.0..3.0f64,
        ) {
            let a = hermitian_op(3, &wa);
            let b = hermitian_op(3, &wb);
            prop_assert!(a.is_hermitian(1e-12));
            prop_assert!(a.add(&b).unwrap().is_hermitian(1e-12));
            prop_assert!(a.scale_real(s).is_hermitian(1e-12));
            let comm = commutator(&a, &b).unwrap();
            prop_assert!(comm.scale(I).is_hermitian(1e-12));
            let anti = commutator(&b, &a).unwrap();
            prop_assert!(comm.add(&anti).unwrap().is_zero());
            prop_assert!(a.to_dense().unwrap().is_hermitian(1e-12));
        }
    }
}
