use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agp::{action_oracle, GaugeContext};
use crate::closed_form::{action_chain, action_lhz, action_qubo, action_two_level, lhz_counts, FieldDerivs, LhzCounts, RaParams};
use crate::error::{Error, Result};
use crate::models::{Model, ModelSpec, Ramp};

use super::bfgs::{bfgs_minimize, BfgsOptions, BfgsStatus};
use super::spline::SplineBoundary;
use super::trajectory::{uniform_grid, ParamTrajectory};

pub const DEFAULT_M_POINTS: usize = 100;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionBackend {
    #[default]
    ClosedForm,
    Oracle,
}

impl fmt::Display for ActionBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActionBackend::ClosedForm => "closed-form",
            ActionBackend::Oracle => "oracle",
        })
    }
}

impl FromStr for ActionBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed-form" => Ok(ActionBackend::ClosedForm),
            "oracle" => Ok(ActionBackend::Oracle),
            other => Err(Error::InvalidConfig(format!("unknown action backend {other:?}"))),
        }
    }
}

/// Normalized time-scaled action of a model, by closed form or dense oracle.
pub struct ActionEvaluator<'a> {
    model: &'a Model,
    backend: ActionBackend,
    counts: Option<LhzCounts>,
}

impl<'a> ActionEvaluator<'a> {
    pub fn new(model: &'a Model, backend: ActionBackend) -> Result<Self> {
        let counts = match model.spec() {
            ModelSpec::Lhz { constraints, .. } => Some(lhz_counts(constraints, model.n_qubits())?),
            _ => None,
        };
        Ok(Self { model, backend, counts })
    }

    pub fn backend(&self) -> ActionBackend {
        self.backend
    }

    pub fn closed_form(&self, fd: &FieldDerivs<f64>, p: &RaParams<f64>) -> Result<f64> {
        let phi = || p.phi.ok_or(Error::Arity { expected: 3, found: 2 });
        match self.model.spec() {
            ModelSpec::TwoSpin => action_two_level(fd, p.beta, p.gamma),
            ModelSpec::Chain { .. } => action_chain(fd, p.beta, p.gamma, phi()?),
            ModelSpec::Qubo { couplings, .. } => action_qubo(couplings, fd, p.beta, p.gamma),
            ModelSpec::Lhz { couplings, .. } => {
                action_lhz(self.counts.as_ref().unwrap(), couplings, fd, p.beta, p.gamma, phi()?)
            }
        }
    }

    /// Objective over the flat parameter vector `[beta, gamma, (phi)]` at one instant.
    pub fn objective(&self, fd: FieldDerivs<f64>) -> Result<Box<dyn Fn(&[f64]) -> f64 + '_>> {
        let with_phi = self.model.spec().ansatz_layout().phi_term.is_some();
        match self.backend {
            ActionBackend::ClosedForm => Ok(Box::new(move |x: &[f64]| {
                RaParams::from_slice(x, with_phi)
                    .and_then(|p| self.closed_form(&fd, &p))
                    .unwrap_or(f64::NAN)
            })),
            ActionBackend::Oracle => {
                let ctx = GaugeContext::new(self.model, fd)?;
                let norm = self.model.spec().action_normalization();
                Ok(Box::new(move |x: &[f64]| {
                    RaParams::from_slice(x, with_phi)
                        .and_then(|p| action_oracle(&ctx, &p))
                        .map_or(f64::NAN, |s| s / norm)
                }))
            }
        }
    }
}

/// Default weight of the ridge that pins the parameters to zero where the action vanishes.
pub const DEFAULT_BOUNDARY_WEIGHT: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequentialOptions {
    pub backend: ActionBackend,
    pub bfgs: BfgsOptions<f64>,
    /// Ridge weight relative to the largest unassisted action on the grid.
    pub boundary_weight: f64,
}

impl Default for SequentialOptions {
    fn default() -> Self {
        Self {
            backend: ActionBackend::ClosedForm,
            bfgs: BfgsOptions::default(),
            boundary_weight: DEFAULT_BOUNDARY_WEIGHT,
        }
    }
}

/// Warm-started minimization of the action on `m + 1` equally spaced instants.
///
/// Each instant minimizes the action plus `w * max_t S(0) * |p|^2`. The ridge
/// term is negligible while the ramp moves and drives the parameters smoothly
/// to zero as `lambda_dot` vanishes, which enforces the boundary condition
/// where the action itself becomes flat. The interpolant has
/// zero end slopes.
pub fn sequential_optimize(model: &Model, ramp: &Ramp<f64>, m: usize, opts: &SequentialOptions) -> Result<ParamTrajectory> {
    if m < 10 {
        return Err(Error::Domain("sequential optimization needs at least 10 grid intervals".into()));
    }
    if !(opts.boundary_weight >= 0.0) || !opts.boundary_weight.is_finite() {
        return Err(Error::Domain("boundary weight must be finite and non-negative".into()));
    }
    let eval = ActionEvaluator::new(model, opts.backend)?;
    let with_phi = model.spec().ansatz_layout().phi_term.is_some();
    let zero = RaParams::<f64>::zero(with_phi).to_vec();
    let times = uniform_grid(ramp.tau(), m);
    let mut unassisted = Vec::with_capacity(times.len());
    for &t in &times {
        let (lambda, lambda_dot) = ramp.eval(t)?;
        unassisted.push(eval.objective(model.spec().ua_fields(lambda, lambda_dot))?(&zero));
    }
    let ridge = opts.boundary_weight * unassisted.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let mut x = zero.clone();
    let mut values = Vec::with_capacity(times.len());
    for (index, &t) in times.iter().enumerate() {
        let (lambda, lambda_dot) = ramp.eval(t)?;
        let raw = eval.objective(model.spec().ua_fields(lambda, lambda_dot))?;
        // rescale so the gradient tolerance is relative
        let s0 = unassisted[index] + ridge;
        let scale = if s0 > 0.0 && s0.is_finite() { s0.recip() } else { 1.0 };
        let objective = move |p: &[f64]| (raw(p) + ridge * p.iter().map(|v| v * v).sum::<f64>()) * scale;
        let fail = |reason: String| Error::Optimizer { index, t, reason };
        let res = bfgs_minimize(|p: &[f64]| objective(p), &x, &opts.bfgs).map_err(|e| fail(e.to_string()))?;
        if res.status == BfgsStatus::NonFinite {
            return Err(fail("objective became non-finite".into()));
        }
        x = nearest_equivalent(&objective, &x, res.x, res.f, &opts.bfgs);
        values.push(RaParams::from_slice(&x, with_phi)?);
    }
    ParamTrajectory::new(times, values, SplineBoundary::Clamped { start: 0.0, end: 0.0 })
}

/// Picks among equally good minima: the trivial ansatz whenever it ties,
/// otherwise the quarter-turn shift of the rotation angles closest to the
/// previous grid point, so the interpolant stays smooth.
fn nearest_equivalent(objective: &dyn Fn(&[f64]) -> f64, prev: &[f64], x: Vec<f64>, f: f64, bfgs: &BfgsOptions<f64>) -> Vec<f64> {
    let tol = 1e-10 * f.abs().max(1.0);
    let dist = |y: &[f64]| y.iter().zip(prev).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let zero = vec![0.0; x.len()];
    if objective(&zero) <= f + tol {
        return zero;
    }
    let quarter = std::f64::consts::FRAC_PI_2;
    let shifts: Vec<f64> = (1..x.len()).map(|i| ((prev[i] - x[i]) / quarter).round() * quarter).collect();
    if shifts.iter().all(|s| *s == 0.0) {
        return x;
    }
    let mut best = x.clone();
    for mask in 1u32..(1 << shifts.len()) {
        let mut y = x.clone();
        for (k, s) in shifts.iter().enumerate() {
            if mask & (1 << k) != 0 {
                y[k + 1] += s;
            }
        }
        if let Ok(r) = bfgs_minimize(objective, &y, bfgs) {
            if r.status != BfgsStatus::NonFinite && r.f <= f + tol && dist(&r.x) < dist(&best) {
                best = r.x;
            }
        }
    }
    best
}
