//! Adiabatic gauge potentials, the `G` operator and the dense action oracle.
//!
//! Everything here works with time-scaled quantities: the potential enters as
//! `lambda_dot * A` and the action is `Tr(G_t^2)` with
//! `G_t = dH0/dt - i [H0, lambda_dot * A]`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::closed_form::{FieldDerivs, RaParams};
use crate::error::{Error, Result};
use crate::models::{build_hamiltonian, AnsatzLayout, Model};
use crate::operators::{commutator, normalized_trace_product, DenseOperator, Pauli, SpinOperator};

pub const DEFAULT_GAP_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;
const I: Complex64 = Complex64::new(0.0, 1.0);

struct DenseCache {
    h0: DenseOperator,
    dh0: DenseOperator,
    terms: Vec<DenseOperator>,
}

/// `H0`, `dH0/dt` and the term operators at one instant.
pub struct GaugeContext {
    terms: Vec<SpinOperator>,
    layout: Option<AnsatzLayout>,
    fields: FieldDerivs<f64>,
    h0: SpinOperator,
    dh0_dt: SpinOperator,
    dense: OnceLock<DenseCache>,
}

impl GaugeContext {
    pub fn new(model: &Model, fields: FieldDerivs<f64>) -> Result<Self> {
        Self::from_terms(model.terms().to_vec(), Some(model.spec().ansatz_layout()), fields)
    }

    pub fn from_terms(terms: Vec<SpinOperator>, layout: Option<AnsatzLayout>, fields: FieldDerivs<f64>) -> Result<Self> {
        if fields.len() != terms.len() || fields.rates.len() != terms.len() {
            return Err(Error::Arity {
                expected: terms.len(),
                found: fields.len(),
            });
        }
        let h0 = build_hamiltonian(&terms, &fields.values)?;
        let dh0_dt = build_hamiltonian(&terms, &fields.rates)?;
        for op in [&h0, &dh0_dt] {
            if !op.is_hermitian(HERMITIAN_TOL) {
                return Err(Error::NonHermitian(f64::NAN));
            }
        }
        Ok(Self {
            terms,
            layout,
            fields,
            h0,
            dh0_dt,
            dense: OnceLock::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.h0.n_qubits()
    }

    pub fn h0(&self) -> &SpinOperator {
        &self.h0
    }

    pub fn dh0_dt(&self) -> &SpinOperator {
        &self.dh0_dt
    }

    pub fn terms(&self) -> &[SpinOperator] {
        &self.terms
    }

    pub fn fields(&self) -> &FieldDerivs<f64> {
        &self.fields
    }

    fn dense(&self) -> Result<&DenseCache> {
        if let Some(cache) = self.dense.get() {
            return Ok(cache);
        }
        let cache = DenseCache {
            h0: self.h0.to_dense()?,
            dh0: self.dh0_dt.to_dense()?,
            terms: self.terms.iter().map(SpinOperator::to_dense).collect::<Result<_>>()?,
        };
        Ok(self.dense.get_or_init(|| cache))
    }

    pub fn dense_h0(&self) -> Result<&DenseOperator> {
        Ok(&self.dense()?.h0)
    }

    pub fn dense_dh0_dt(&self) -> Result<&DenseOperator> {
        Ok(&self.dense()?.dh0)
    }
}

/// `i sum_{m != l} <m|dH|l> / (e_l - e_m) |m><l|`, skipping pairs closer than `gap_tol`.
pub fn exact_agp(h0: &DenseOperator, dh0: &DenseOperator, gap_tol: f64) -> Result<DenseOperator> {
    if !(gap_tol > 0.0) {
        return Err(Error::Domain("gap tolerance must be positive".into()));
    }
    dh0.ensure_hermitian(HERMITIAN_TOL)?;
    if h0.dim() != dh0.dim() {
        return Err(Error::DimensionMismatch {
            expected: h0.dim(),
            found: dh0.dim(),
        });
    }
    let (energies, v) = h0.eigh(HERMITIAN_TOL)?;
    let vd = v.adjoint();
    let mut a = &vd * dh0.matrix() * &v;
    let n = energies.len();
    for m in 0..n {
        for l in 0..n {
            let gap = energies[l] - energies[m];
            a[(m, l)] = if m == l || gap.abs() < gap_tol {
                Complex64::default()
            } else {
                I * a[(m, l)] / gap
            };
        }
    }
    DenseOperator::from_matrix(&v * a * vd)
}

fn check_params(layout: &AnsatzLayout, p: &RaParams<f64>) -> Result<()> {
    if layout.phi_term.is_some() != p.phi.is_some() {
        return Err(Error::Arity {
            expected: layout.arity(),
            found: if p.phi.is_some() { 3 } else { 2 },
        });
    }
    Ok(())
}

/// Diagonal of `Q = gamma H_gamma + phi H_phi` on the computational basis.
pub fn rotation_phases(terms: &[SpinOperator], layout: &AnsatzLayout, p: &RaParams<f64>) -> Result<Vec<f64>> {
    check_params(layout, p)?;
    let mut q = terms[layout.gamma_term].scale_real(p.gamma);
    if let (Some(idx), Some(phi)) = (layout.phi_term, p.phi) {
        q = q.axpy(Complex64::new(phi, 0.0), &terms[idx])?;
    }
    if !q.is_diagonal() {
        return Err(Error::UnsupportedAnsatz("rotation generator must be diagonal".into()));
    }
    Ok(q.diagonal_values()?.into_iter().map(|c| c.re).collect())
}

/// `lambda_dot * A = e^{iQ} (H0 + K) e^{-iQ} - H0`.
pub fn ra_agp(ctx: &GaugeContext, p: &RaParams<f64>) -> Result<DenseOperator> {
    let layout = ctx
        .layout
        .ok_or_else(|| Error::UnsupportedAnsatz("context has no ansatz layout".into()))?;
    let q = rotation_phases(&ctx.terms, &layout, p)?;
    let cache = ctx.dense()?;
    let h0 = cache.h0.matrix();
    let k = cache.terms[layout.k_term].matrix();
    let n = h0.nrows();
    let phases: Vec<Complex64> = q.iter().map(|&x| Complex64::from_polar(1.0, x)).collect();
    let m = DMatrix::from_fn(n, n, |r, c| {
        let base = h0[(r, c)] + k[(r, c)] * p.beta;
        phases[r] * base * phases[c].conj() - h0[(r, c)]
    });
    DenseOperator::from_matrix(m)
}

/// `G_t = dH0/dt - i [H0, X]` for a time-scaled potential `X`.
pub fn g_operator(ctx: &GaugeContext, scaled_agp: &DenseOperator) -> Result<DenseOperator> {
    let cache = ctx.dense()?;
    let comm = cache.h0.commutator(scaled_agp)?;
    cache.dh0.sub(&comm.scale(I))
}

/// `Tr(G_t^2)` for an arbitrary time-scaled potential.
pub fn action_from_agp(ctx: &GaugeContext, scaled_agp: &DenseOperator) -> Result<f64> {
    let g = g_operator(ctx, scaled_agp)?;
    Ok(g.trace_product(&g)?.re)
}

/// Dense `Tr(G_t^2)` of the rotated ansatz (raw trace, no normalization).
pub fn action_oracle(ctx: &GaugeContext, p: &RaParams<f64>) -> Result<f64> {
    action_from_agp(ctx, &ra_agp(ctx, p)?)
}

/// Dense `sum_j a_j Y_j`.
pub fn local_cd_operator(n_qubits: usize, coeffs: &[f64]) -> Result<SpinOperator> {
    if coeffs.len() != n_qubits {
        return Err(Error::Arity {
            expected: n_qubits,
            found: coeffs.len(),
        });
    }
    let mut op = SpinOperator::zero(n_qubits)?;
    for (j, &a) in coeffs.iter().enumerate() {
        op = op.axpy(Complex64::new(a, 0.0), &SpinOperator::single(n_qubits, j, Pauli::Y)?)?;
    }
    Ok(op)
}

/// Normal equations of the local ansatz `lambda_dot A = sum_j a_j Y_j`, with the
/// trace tensors precomputed per pair of model terms so that each instant only
/// costs an `N x N` solve.
#[derive(Clone, Debug)]
pub struct LocalCdSolver {
    n_qubits: usize,
    n_terms: usize,
    /// `[a][b]` -> `Tr(C^a_j C^b_k) / 2^N` with `C^a_j = i [H_a, Y_j]`.
    gram: Vec<DMatrix<f64>>,
    /// `[a][b]` -> `Tr(H_a C^b_j) / 2^N`.
    drive: Vec<DVector<f64>>,
}

impl LocalCdSolver {
    pub fn new(terms: &[SpinOperator]) -> Result<Self> {
        let n = terms
            .first()
            .map(SpinOperator::n_qubits)
            .ok_or_else(|| Error::InvalidModel("no terms".into()))?;
        for t in terms {
            if t.terms().any(|(_, c)| c.im.abs() > 1e-14) {
                return Err(Error::UnsupportedAnsatz(
                    "local CD needs real-symmetric Hamiltonian terms".into(),
                ));
            }
        }
        let ys = (0..n)
            .map(|j| SpinOperator::single(n, j, Pauli::Y))
            .collect::<Result<Vec<_>>>()?;
        let comms: Vec<Vec<SpinOperator>> = terms
            .iter()
            .map(|h| {
                ys.iter()
                    .map(|y| Ok(commutator(h, y)?.scale(I)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let nt = terms.len();
        let mut gram = Vec::with_capacity(nt * nt);
        let mut drive = Vec::with_capacity(nt * nt);
        for a in 0..nt {
            for b in 0..nt {
                let mut g = DMatrix::zeros(n, n);
                for j in 0..n {
                    for k in 0..n {
                        g[(j, k)] = normalized_trace_product(&comms[a][j], &comms[b][k])?.re;
                    }
                }
                gram.push(g);
                let d = (0..n)
                    .map(|j| Ok(normalized_trace_product(&terms[a], &comms[b][j])?.re))
                    .collect::<Result<Vec<_>>>()?;
                drive.push(DVector::from_vec(d));
            }
        }
        Ok(Self {
            n_qubits: n,
            n_terms: nt,
            gram,
            drive,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Least-norm minimizer `a` (time-scaled, `a_j = lambda_dot * alpha_j`).
    pub fn solve(&self, fields: &FieldDerivs<f64>) -> Result<Vec<f64>> {
        if fields.len() != self.n_terms {
            return Err(Error::Arity {
                expected: self.n_terms,
                found: fields.len(),
            });
        }
        let n = self.n_qubits;
        let mut m = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for a in 0..self.n_terms {
            for b in 0..self.n_terms {
                let idx = a * self.n_terms + b;
                m += &self.gram[idx] * (fields.values[a] * fields.values[b]);
                rhs += &self.drive[idx] * (fields.rates[a] * fields.values[b]);
            }
        }
        least_norm_solve(m, rhs)
    }
}

fn least_norm_solve(m: DMatrix<f64>, rhs: DVector<f64>) -> Result<Vec<f64>> {
    let svd = m.svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(vec![0.0; rhs.len()]);
    }
    let x = svd
        .solve(&rhs, smax * 1e-12)
        .map_err(|e| Error::Domain(format!("local CD normal system: {e}")))?;
    Ok(x.iter().copied().collect())
}

/// Time-scaled local CD coefficients `lambda_dot * alpha_j` at one instant.
pub fn local_cd_coeffs(ctx: &GaugeContext) -> Result<Vec<f64>> {
    LocalCdSolver::new(&ctx.terms)?.solve(&ctx.fields)
}
