//! Exact state-vector propagation, ground spaces and fidelities.

use std::cell::RefCell;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::agp::{exact_agp, DEFAULT_GAP_TOL};
use crate::error::{Error, Result};
use crate::fmt_num;
use crate::operators::{check_state, parity_sign, DenseOperator, Pauli, SpinOperator};
use crate::optimizer::{Protocol, ProtocolKind};

pub const DEFAULT_STEPS: usize = 2000;
pub const DEFAULT_SAMPLES: usize = 100;
pub const MIN_STEPS: usize = 100;
pub const NORM_DRIFT_TOL: f64 = 1e-6;
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Largest register for the exact counterdiabatic baseline.
pub const EXACT_CD_QUBIT_LIMIT: usize = 8;
/// Above this size non-diagonal ground states come from Lanczos iteration.
pub const DENSE_GROUND_QUBIT_LIMIT: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Normalized amplitudes over the little-endian computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if !dim.is_power_of_two() {
            return Err(Error::Domain(format!("state dimension {dim} is not a power of two")));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_state(n_qubits)?;
        let s = Self { n_qubits, amps };
        if (s.norm() - 1.0).abs() > NORM_DRIFT_TOL {
            return Err(Error::Domain("state is not normalized".into()));
        }
        Ok(s)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_state(n_qubits)?;
        let mut amps = vec![ZERO; 1 << n_qubits];
        *amps
            .get_mut(index)
            .ok_or_else(|| Error::Domain(format!("basis index {index} out of range")))? = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// Multiplies each amplitude by `exp(i * phases[b])`.
    pub fn with_phases(&self, phases: &[f64]) -> Result<StateVector> {
        if phases.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: phases.len(),
            });
        }
        let amps = self
            .amps
            .iter()
            .zip(phases)
            .map(|(a, q)| a * Complex64::from_polar(1.0, *q))
            .collect();
        Ok(StateVector {
            n_qubits: self.n_qubits,
            amps,
        })
    }
}

/// A Pauli-sum operator stored as one diagonal per X-mask, so that
/// `(H psi)[b ^ x] += d_x[b] psi[b]`.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    n_qubits: usize,
    groups: Vec<(usize, Vec<Complex64>)>,
}

impl SparseOperator {
    pub fn new(op: &SpinOperator) -> Result<Self> {
        let n = op.n_qubits();
        check_state(n)?;
        let dim = 1usize << n;
        let mut groups: Vec<(usize, Vec<Complex64>)> = Vec::new();
        for (word, w) in op.terms() {
            let x = word.x as usize;
            let idx = match groups.iter().position(|(gx, _)| *gx == x) {
                Some(i) => i,
                None => {
                    groups.push((x, vec![ZERO; dim]));
                    groups.len() - 1
                }
            };
            let diag = &mut groups[idx].1;
            for (b, d) in diag.iter_mut().enumerate() {
                *d += w * parity_sign(word.z & b as u64);
            }
        }
        groups.sort_by_key(|(x, _)| *x);
        Ok(Self { n_qubits: n, groups })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// `out += scale * (self psi)`.
    pub fn apply_add(&self, scale: Complex64, psi: &[Complex64], out: &mut [Complex64]) {
        if scale == ZERO {
            return;
        }
        for (x, diag) in &self.groups {
            for (b, (d, p)) in diag.iter().zip(psi).enumerate() {
                out[b ^ x] += scale * d * p;
            }
        }
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; psi.len()];
        self.apply_add(Complex64::new(1.0, 0.0), psi, &mut out);
        out
    }
}

/// A time-dependent Hamiltonian acting on state vectors.
pub trait Evolution {
    fn n_qubits(&self) -> usize;
    /// Writes `H(t) psi` into `out`.
    fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) -> Result<()>;
}

enum Generator {
    Fields {
        terms: Vec<SparseOperator>,
        local: Vec<SparseOperator>,
    },
    ExactCd {
        cache: RefCell<Vec<(u64, DenseOperator)>>,
    },
}

/// Evolution generator of a protocol, rebuilt from its fields at every substep.
pub struct Propagator<'a> {
    protocol: &'a Protocol,
    generator: Generator,
}

impl<'a> Propagator<'a> {
    pub fn new(protocol: &'a Protocol) -> Result<Self> {
        let model = protocol.model();
        let n = model.n_qubits();
        check_state(n)?;
        let generator = if protocol.kind() == ProtocolKind::ExactCd {
            if n > EXACT_CD_QUBIT_LIMIT {
                return Err(Error::Capacity {
                    what: "exact counterdiabatic driving",
                    qubits: n,
                    limit: EXACT_CD_QUBIT_LIMIT,
                });
            }
            Generator::ExactCd {
                cache: RefCell::new(Vec::new()),
            }
        } else {
            let terms = model.terms().iter().map(SparseOperator::new).collect::<Result<_>>()?;
            let local = if protocol.kind() == ProtocolKind::LocalCd {
                (0..n)
                    .map(|j| SparseOperator::new(&SpinOperator::single(n, j, Pauli::Y)?))
                    .collect::<Result<_>>()?
            } else {
                Vec::new()
            };
            Generator::Fields { terms, local }
        };
        Ok(Self { protocol, generator })
    }

    fn exact_cd_matrix(&self, t: f64) -> Result<DenseOperator> {
        let fd = self.protocol.ua_fields(t)?;
        let model = self.protocol.model();
        let h0 = model.hamiltonian(&fd.values)?.to_dense()?;
        let dh0 = model.hamiltonian(&fd.rates)?.to_dense()?;
        let agp = exact_agp(&h0, &dh0, DEFAULT_GAP_TOL)?;
        h0.add(&agp)
    }
}

impl Evolution for Propagator<'_> {
    fn n_qubits(&self) -> usize {
        self.protocol.model().n_qubits()
    }

    fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = ZERO);
        match &self.generator {
            Generator::Fields { terms, local } => {
                let f = self.protocol.fields(t)?;
                for (op, c) in terms.iter().zip(&f.terms) {
                    op.apply_add(Complex64::new(*c, 0.0), psi, out);
                }
                for (op, c) in local.iter().zip(&f.local) {
                    op.apply_add(Complex64::new(*c, 0.0), psi, out);
                }
            }
            Generator::ExactCd { cache } => {
                let key = t.to_bits();
                let mut cache = cache.borrow_mut();
                if !cache.iter().any(|(k, _)| *k == key) {
                    let m = self.exact_cd_matrix(t)?;
                    if cache.len() == 2 {
                        cache.remove(0);
                    }
                    cache.push((key, m));
                }
                let m = &cache.iter().find(|(k, _)| *k == key).unwrap().1;
                let v = m.matrix() * DVector::from_column_slice(psi);
                out.copy_from_slice(v.as_slice());
            }
        }
        Ok(())
    }
}

/// Fixed-step fourth-order Runge-Kutta for `i d/dt psi = H(t) psi` on `[t0, t1]`.
///
/// `observe` sees the state after `k` steps for `k = 0..=steps`. No
/// renormalization is applied; a norm drift above [`NORM_DRIFT_TOL`] is an error.
pub fn evolve_with<H, F>(h: &H, psi0: &StateVector, t0: f64, t1: f64, steps: usize, mut observe: F) -> Result<StateVector>
where
    H: Evolution + ?Sized,
    F: FnMut(usize, f64, &StateVector) -> Result<()>,
{
    if steps < MIN_STEPS {
        return Err(Error::Domain(format!("at least {MIN_STEPS} integration steps are required")));
    }
    if psi0.n_qubits() != h.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: 1 << h.n_qubits(),
            found: psi0.dim(),
        });
    }
    let dim = psi0.dim();
    let dt = (t1 - t0) / steps as f64;
    let mut psi = psi0.clone();
    let mut ks = [vec![ZERO; dim], vec![ZERO; dim], vec![ZERO; dim], vec![ZERO; dim]];
    let mut tmp = vec![ZERO; dim];
    let step_rhs = |t: f64, v: &[Complex64], out: &mut [Complex64]| -> Result<()> {
        h.apply(t, v, out)?;
        out.iter_mut().for_each(|o| *o *= -I);
        Ok(())
    };
    observe(0, t0, &psi)?;
    for k in 0..steps {
        let t = t0 + dt * k as f64;
        let tn = t0 + dt * (k + 1) as f64;
        let tm = 0.5 * (t + tn);
        let [k1, k2, k3, k4] = &mut ks;
        step_rhs(t, &psi.amps, k1)?;
        for ((o, p), d) in tmp.iter_mut().zip(&psi.amps).zip(k1.iter()) {
            *o = p + d * (0.5 * dt);
        }
        step_rhs(tm, &tmp, k2)?;
        for ((o, p), d) in tmp.iter_mut().zip(&psi.amps).zip(k2.iter()) {
            *o = p + d * (0.5 * dt);
        }
        step_rhs(tm, &tmp, k3)?;
        for ((o, p), d) in tmp.iter_mut().zip(&psi.amps).zip(k3.iter()) {
            *o = p + d * dt;
        }
        step_rhs(tn, &tmp, k4)?;
        for (i, a) in psi.amps.iter_mut().enumerate() {
            *a += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
        let drift = (psi.norm() - 1.0).abs();
        if !(drift <= NORM_DRIFT_TOL) {
            return Err(Error::NormDrift { drift });
        }
        observe(k + 1, tn, &psi)?;
    }
    Ok(psi)
}

pub fn evolve<H: Evolution + ?Sized>(h: &H, psi0: &StateVector, t0: f64, t1: f64, steps: usize) -> Result<StateVector> {
    evolve_with(h, psi0, t0, t1, steps, |_, _, _| Ok(()))
}

/// Lowest-energy subspace of a Hamiltonian.
#[derive(Clone, Debug)]
pub struct GroundSpace {
    pub energy: f64,
    pub basis: Vec<StateVector>,
}

impl GroundSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Squared norm of the projection of `psi` onto the subspace.
    pub fn fidelity(&self, psi: &StateVector) -> Result<f64> {
        let mut f = 0.0;
        for v in &self.basis {
            f += v.inner(psi)?.norm_sqr();
        }
        Ok(f)
    }

    /// Projector onto the subspace as a dense matrix.
    pub fn projector(&self) -> DMatrix<Complex64> {
        let dim = self.basis[0].dim();
        let mut p = DMatrix::zeros(dim, dim);
        for v in &self.basis {
            let col = DVector::from_column_slice(v.amplitudes());
            p += &col * col.adjoint();
        }
        p
    }
}

/// Dense eigendecomposition; keeps every eigenvector within `degeneracy_tol` of the minimum.
pub fn ground_space(h: &DenseOperator, degeneracy_tol: f64) -> Result<GroundSpace> {
    let (energies, vecs) = h.eigh(1e-10)?;
    let e0 = energies[0];
    let basis = energies
        .iter()
        .enumerate()
        .take_while(|(_, e)| **e <= e0 + degeneracy_tol)
        .map(|(k, _)| StateVector {
            n_qubits: h.n_qubits(),
            amps: vecs.column(k).iter().copied().collect(),
        })
        .collect();
    Ok(GroundSpace { energy: e0, basis })
}

/// Ground space of a Pauli-sum Hamiltonian: exact enumeration when diagonal,
/// dense diagonalization on small registers, Lanczos iteration otherwise (the
/// last path returns a single vector and does not resolve degeneracies).
pub fn ground_space_of(h: &SpinOperator, degeneracy_tol: f64) -> Result<GroundSpace> {
    let n = h.n_qubits();
    if !h.is_hermitian(1e-10) {
        return Err(Error::NonHermitian(f64::NAN));
    }
    if h.is_diagonal() {
        let diag = h.diagonal_values()?;
        let e0 = diag.iter().map(|d| d.re).fold(f64::INFINITY, f64::min);
        let basis = diag
            .iter()
            .enumerate()
            .filter(|(_, d)| d.re <= e0 + degeneracy_tol)
            .map(|(b, _)| StateVector::basis(n, b))
            .collect::<Result<_>>()?;
        return Ok(GroundSpace { energy: e0, basis });
    }
    if n <= DENSE_GROUND_QUBIT_LIMIT {
        return ground_space(&h.to_dense()?, degeneracy_tol);
    }
    lanczos_ground_state(&SparseOperator::new(h)?)
}

fn lanczos_ground_state(op: &SparseOperator) -> Result<GroundSpace> {
    let dim = 1usize << op.n_qubits();
    let max_krylov = dim.min(200);
    // deterministic start with support on every basis state
    let mut v: Vec<Complex64> = (0..dim)
        .map(|b| Complex64::new(1.0 + 0.1 * ((b * 7919) % 101) as f64 / 101.0, 0.0))
        .collect();
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for _restart in 0..20 {
        let nv = norm(&v);
        v.iter_mut().for_each(|a| *a /= nv);
        let mut basis = vec![v.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for k in 0..max_krylov {
            let mut w = op.apply(&basis[k]);
            let a = dot(&basis[k], &w).re;
            alpha.push(a);
            // full reorthogonalization
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
                }
            }
            let b = norm(&w);
            if b < 1e-12 || k + 1 == max_krylov {
                break;
            }
            beta.push(b);
            w.iter_mut().for_each(|a| *a /= b);
            basis.push(w);
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let (k0, e0) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, e)| if e < acc.1 { (k, e) } else { acc });
        let mut ground = vec![ZERO; dim];
        for (i, q) in basis.iter().enumerate().take(m) {
            let c = eig.eigenvectors[(i, k0)];
            ground.iter_mut().zip(q).for_each(|(g, qi)| *g += qi * c);
        }
        let ng = norm(&ground);
        ground.iter_mut().for_each(|g| *g /= ng);
        let hv = op.apply(&ground);
        let resid = hv.iter().zip(&ground).map(|(a, g)| (a - g * e0).norm_sqr()).sum::<f64>().sqrt();
        best = Some((e0, ground.clone()));
        if resid < 1e-10 * e0.abs().max(1.0) {
            break;
        }
        v = ground;
    }
    let (energy, amps) = best.unwrap();
    Ok(GroundSpace {
        energy,
        basis: vec![StateVector {
            n_qubits: op.n_qubits(),
            amps,
        }],
    })
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn fidelity(psi: &StateVector, ground: &GroundSpace) -> Result<f64> {
    ground.fidelity(psi)
}

/// Fidelity with the rotated ground space: `e^{+iQ}` is applied to `psi` as
/// elementwise phases before projecting.
pub fn rotated_fidelity(psi: &StateVector, ground: &GroundSpace, q: &SpinOperator) -> Result<f64> {
    if !q.is_diagonal() {
        return Err(Error::UnsupportedAnsatz("rotation generator must be diagonal".into()));
    }
    let phases: Vec<f64> = q.diagonal_values()?.iter().map(|c| c.re).collect();
    ground.fidelity(&psi.with_phases(&phases)?)
}

/// Sampled `F(t)` and `F~(t)` along one run.
#[derive(Clone, Debug, PartialEq)]
pub struct FidelityTrace {
    pub times: Vec<f64>,
    pub lambda: Vec<f64>,
    pub f: Vec<f64>,
    pub f_tilde: Vec<f64>,
}

impl FidelityTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_f(&self) -> f64 {
        *self.f.last().unwrap_or(&f64::NAN)
    }

    pub fn final_f_tilde(&self) -> f64 {
        *self.f_tilde.last().unwrap_or(&f64::NAN)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,lambda,F,F_tilde\n");
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_num(self.times[i]),
                fmt_num(self.lambda[i]),
                fmt_num(self.f[i]),
                fmt_num(self.f_tilde[i])
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Ground state of `H0` at `t = 0`, the common starting point of every run.
pub fn initial_state(protocol: &Protocol) -> Result<StateVector> {
    let gs = ground_space_of(&protocol.bare_hamiltonian(0.0)?, DEGENERACY_TOL)?;
    Ok(gs.basis[0].clone())
}

fn sample_fidelities(protocol: &Protocol, t: f64, psi: &StateVector) -> Result<(f64, f64, f64)> {
    let (lambda, _) = protocol.ramp().eval(t)?;
    let gs = ground_space_of(&protocol.bare_hamiltonian(t)?, DEGENERACY_TOL)?;
    let f = gs.fidelity(psi)?;
    let f_tilde = match protocol.rotation_phases(t)? {
        Some(q) => gs.fidelity(&psi.with_phases(&q)?)?,
        None => f,
    };
    Ok((lambda, f, f_tilde))
}

/// Evolves from the initial ground state over `[0, tau]`, sampling `F` and `F~`
/// at `samples + 1` equally spaced step indices.
pub fn simulate(protocol: &Protocol, steps: usize, samples: usize) -> Result<FidelityTrace> {
    if samples == 0 || samples > steps {
        return Err(Error::Domain("samples must lie in 1..=steps".into()));
    }
    let prop = Propagator::new(protocol)?;
    let psi0 = initial_state(protocol)?;
    let marks: Vec<usize> = (0..=samples).map(|k| (k * steps + samples / 2) / samples).collect();
    let mut trace = FidelityTrace {
        times: Vec::new(),
        lambda: Vec::new(),
        f: Vec::new(),
        f_tilde: Vec::new(),
    };
    let tau = protocol.tau();
    evolve_with(&prop, &psi0, 0.0, tau, steps, |k, t, psi| {
        if marks.binary_search(&k).is_ok() {
            let (l, f, ft) = sample_fidelities(protocol, t, psi)?;
            trace.times.push(t);
            trace.lambda.push(l);
            trace.f.push(f);
            trace.f_tilde.push(ft);
        }
        Ok(())
    })?;
    Ok(trace)
}

/// Final `(F, F~)` without intermediate ground-state solves.
pub fn final_fidelity(protocol: &Protocol, steps: usize) -> Result<(f64, f64)> {
    let prop = Propagator::new(protocol)?;
    let psi0 = initial_state(protocol)?;
    let tau = protocol.tau();
    let psi = evolve(&prop, &psi0, 0.0, tau, steps)?;
    let (_, f, ft) = sample_fidelities(protocol, tau, &psi)?;
    Ok((f, ft))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Model, ModelSpec, Ramp};
    use crate::optimizer::assemble_protocol;

    struct Static(SparseOperator);

    impl Evolution for Static {
        fn n_qubits(&self) -> usize {
            self.0.n_qubits()
        }
        fn apply(&self, _t: f64, psi: &[Complex64], out: &mut [Complex64]) -> Result<()> {
            out.iter_mut().for_each(|o| *o = ZERO);
            self.0.apply_add(Complex64::new(1.0, 0.0), psi, out);
            Ok(())
        }
    }

    fn plus() -> StateVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::new(vec![Complex64::new(s, 0.0); 2]).unwrap()
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let h = Static(SparseOperator::new(&SpinOperator::zero(1).unwrap()).unwrap());
        let psi = evolve(&h, &plus(), 0.0, 3.0, 200).unwrap();
        assert_eq!(psi, plus());
    }

    #[test]
    fn sigma_z_phases() {
        let tau = 2.0;
        let h = Static(SparseOperator::new(&SpinOperator::single(1, 0, Pauli::Z).unwrap()).unwrap());
        let psi = evolve(&h, &plus(), 0.0, tau, 2000).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let exact = StateVector {
            n_qubits: 1,
            amps: vec![Complex64::from_polar(s, -tau), Complex64::from_polar(s, tau)],
        };
        assert!(exact.inner(&psi).unwrap().norm_sqr() >= 1.0 - 1e-8);
    }

    #[test]
    fn sparse_matches_dense() {
        let m = Model::new(ModelSpec::Chain { sites: 4 }).unwrap();
        let h = m.hamiltonian(&[0.7, 0.2, 0.4]).unwrap();
        let y = SpinOperator::single(4, 2, Pauli::Y).unwrap();
        let op = h.add(&y).unwrap();
        let psi: Vec<Complex64> = (0..16).map(|b| Complex64::new(b as f64 * 0.1, 1.0 - b as f64 * 0.05)).collect();
        let sparse = SparseOperator::new(&op).unwrap().apply(&psi);
        let dense = op.to_dense().unwrap().apply(&psi).unwrap();
        for (a, b) in sparse.iter().zip(&dense) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn ground_space_of_minus_sigma_z() {
        let h = SpinOperator::single(1, 0, Pauli::Z).unwrap().scale_real(-1.0);
        let gs = ground_space(&h.to_dense().unwrap(), DEGENERACY_TOL).unwrap();
        assert!((gs.energy + 1.0).abs() < 1e-12);
        assert_eq!(gs.dim(), 1);
        assert!((gs.basis[0].amplitudes()[0].norm() - 1.0).abs() < 1e-12);
        let exact = ground_space_of(&h, DEGENERACY_TOL).unwrap();
        assert_eq!(exact.basis[0], StateVector::basis(1, 0).unwrap());
    }

    #[test]
    fn chain_starts_in_plus_state() {
        let n = 5;
        let m = Model::new(ModelSpec::Chain { sites: n }).unwrap();
        let fd = m.spec().ua_fields(0.0, 0.0);
        let gs = ground_space_of(&m.hamiltonian(&fd.values).unwrap(), DEGENERACY_TOL).unwrap();
        assert_eq!(gs.dim(), 1);
        let amp = (1.0 / (1 << n) as f64).sqrt();
        let plus = StateVector::new(vec![Complex64::new(amp, 0.0); 1 << n]).unwrap();
        assert!((gs.fidelity(&plus).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_projector_is_idempotent() {
        let spec = crate::models::random_instance(crate::models::ModelKind::Lhz, 4, 3).unwrap();
        let m = Model::new(spec).unwrap();
        let fd = m.spec().ua_fields(0.6, 0.0);
        let gs = ground_space_of(&m.hamiltonian(&fd.values).unwrap(), DEGENERACY_TOL).unwrap();
        assert!(gs.dim() >= 1);
        let p = gs.projector();
        assert!((&p * &p - &p).camax() < 1e-12);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let m = Model::new(ModelSpec::Chain { sites: 9 }).unwrap();
        let h = m.hamiltonian(&[0.6, 0.12, 0.7]).unwrap();
        let lz = lanczos_ground_state(&SparseOperator::new(&h).unwrap()).unwrap();
        let dense = ground_space(&h.to_dense().unwrap(), DEGENERACY_TOL).unwrap();
        assert!((lz.energy - dense.energy).abs() < 1e-9);
        assert!((dense.fidelity(&lz.basis[0]).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fidelity_extremes_and_zero_rotation() {
        let h = SpinOperator::single(1, 0, Pauli::Z).unwrap().scale_real(-1.0);
        let gs = ground_space_of(&h, DEGENERACY_TOL).unwrap();
        assert_eq!(fidelity(&StateVector::basis(1, 0).unwrap(), &gs).unwrap(), 1.0);
        assert_eq!(fidelity(&StateVector::basis(1, 1).unwrap(), &gs).unwrap(), 0.0);
        let q = SpinOperator::zero(1).unwrap();
        assert_eq!(rotated_fidelity(&plus(), &gs, &q).unwrap(), fidelity(&plus(), &gs).unwrap());
        let x = SpinOperator::single(1, 0, Pauli::X).unwrap();
        assert!(rotated_fidelity(&plus(), &gs, &x).is_err());
    }

    #[test]
    fn two_spin_exact_cd_is_perfect() {
        let m = Model::new(ModelSpec::TwoSpin).unwrap();
        let p = assemble_protocol(&m, Ramp::new(1.0).unwrap(), None, ProtocolKind::ExactCd).unwrap();
        let tr = simulate(&p, DEFAULT_STEPS, 20).unwrap();
        assert!((tr.f[0] - 1.0).abs() < 1e-9);
        assert!(tr.f.iter().all(|f| *f >= 1.0 - 1e-6), "{:?}", tr.f);
    }

    #[test]
    fn time_reversal_returns_initial_state() {
        let m = Model::new(ModelSpec::TwoSpin).unwrap();
        let p = assemble_protocol(&m, Ramp::new(1.0).unwrap(), None, ProtocolKind::Ua).unwrap();
        let fwd = Propagator::new(&p).unwrap();
        struct Reversed<'a>(Propagator<'a>, f64);
        impl Evolution for Reversed<'_> {
            fn n_qubits(&self) -> usize {
                self.0.n_qubits()
            }
            fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) -> Result<()> {
                self.0.apply(self.1 - t, psi, out)?;
                out.iter_mut().for_each(|o| *o = -*o);
                Ok(())
            }
        }
        let psi0 = initial_state(&p).unwrap();
        let psi1 = evolve(&fwd, &psi0, 0.0, 1.0, DEFAULT_STEPS).unwrap();
        let back = Reversed(fwd, 1.0);
        let psi2 = evolve(&back, &psi1, 0.0, 1.0, DEFAULT_STEPS).unwrap();
        assert!(psi0.inner(&psi2).unwrap().norm_sqr() >= 1.0 - 1e-5);
    }

    #[test]
    fn halving_the_step_barely_moves_the_final_state() {
        let m = Model::new(ModelSpec::Chain { sites: 4 }).unwrap();
        let p = assemble_protocol(&m, Ramp::new(1.0).unwrap(), None, ProtocolKind::Ua).unwrap();
        let prop = Propagator::new(&p).unwrap();
        let psi0 = initial_state(&p).unwrap();
        let a = evolve(&prop, &psi0, 0.0, 1.0, DEFAULT_STEPS).unwrap();
        let b = evolve(&prop, &psi0, 0.0, 1.0, 2 * DEFAULT_STEPS).unwrap();
        let diff = a.amps.iter().zip(&b.amps).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff <= 1e-6, "{diff}");
    }

    #[test]
    fn rejects_too_few_steps_and_exact_cd_on_large_registers() {
        let m = Model::new(ModelSpec::TwoSpin).unwrap();
        let p = assemble_protocol(&m, Ramp::new(1.0).unwrap(), None, ProtocolKind::Ua).unwrap();
        assert!(final_fidelity(&p, 50).is_err());
        let big = Model::new(ModelSpec::Chain { sites: 9 }).unwrap();
        let p = assemble_protocol(&big, Ramp::new(1.0).unwrap(), None, ProtocolKind::ExactCd).unwrap();
        assert!(matches!(Propagator::new(&p), Err(Error::Capacity { .. })));
    }

    #[test]
    fn csv_header_and_rows() {
        let m = Model::new(ModelSpec::TwoSpin).unwrap();
        let p = assemble_protocol(&m, Ramp::new(1.0).unwrap(), None, ProtocolKind::Ua).unwrap();
        let tr = simulate(&p, 200, 10).unwrap();
        let csv = tr.to_csv();
        assert!(csv.starts_with("t,lambda,F,F_tilde\n"));
        assert_eq!(csv.lines().count(), 12);
        assert_eq!(tr.f, tr.f_tilde);
        assert_eq!(*tr.times.last().unwrap(), 1.0);
    }
}
