//! Self-checks behind the `validate` command: closed forms against the dense
//! oracle, diagonal-decomposition identities, the two-level optimum, the
//! triviality of unrotated two-operator CD, and boundary conditions.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::agp::{action_oracle, GaugeContext};
use crate::closed_form::{two_level_optimum_branch, CdTwoParam, FieldDerivs, RaParams, TwoLevelBranch};
use crate::error::Result;
use crate::models::{random_instance, Model, ModelKind, ModelSpec, Ramp};
use crate::operators::{DiagPart, Pauli, PauliWord, SpinOperator};
use crate::optimizer::{
    assemble_protocol, bfgs_minimize, sequential_optimize, ActionBackend, ActionEvaluator, BfgsOptions, ProtocolKind,
    SequentialOptions,
};

pub const ORACLE_REL_TOL: f64 = 1e-8;
pub const N_INDEPENDENCE_TOL: f64 = 1e-10;
pub const DECOMPOSITION_TOL: f64 = 1e-12;
pub const TWO_LEVEL_TOL: f64 = 1e-3;
pub const CD_MIN_TOL: f64 = 1e-6;
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Outcome of one suite: the worst deviation seen against its tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub checks: usize,
}

impl SuiteReport {
    fn new(name: &str, max_deviation: f64, tolerance: f64, checks: usize) -> Self {
        Self {
            name: name.to_string(),
            max_deviation,
            tolerance,
            passed: max_deviation <= tolerance,
            checks,
        }
    }
}

/// Closed-form action evaluator under test, `(spec, fields, params) -> normalized action`.
pub type Evaluator<'a> = dyn Fn(&Model, &FieldDerivs<f64>, &RaParams<f64>) -> Result<f64> + Sync + 'a;

/// The library's own closed forms.
pub fn library_evaluator(model: &Model, fd: &FieldDerivs<f64>, p: &RaParams<f64>) -> Result<f64> {
    ActionEvaluator::new(model, ActionBackend::ClosedForm)?.closed_form(fd, p)
}

/// Instances at each model's smallest validated size.
pub fn oracle_models() -> Result<Vec<Model>> {
    [
        ModelSpec::TwoSpin,
        ModelSpec::Chain { sites: 4 },
        ModelSpec::Chain { sites: 5 },
        random_instance(ModelKind::Qubo, 4, 101)?,
        random_instance(ModelKind::Qubo, 5, 102)?,
        random_instance(ModelKind::Lhz, 4, 103)?,
    ]
    .into_iter()
    .map(Model::new)
    .collect()
}

fn random_fields(rng: &mut ChaCha8Rng, n_terms: usize) -> FieldDerivs<f64> {
    let values = (0..n_terms).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let rates = (0..n_terms).map(|_| rng.gen_range(-2.0..2.0)).collect();
    FieldDerivs { values, rates }
}

fn random_params(rng: &mut ChaCha8Rng, with_phi: bool) -> RaParams<f64> {
    let pi = std::f64::consts::PI;
    RaParams {
        beta: rng.gen_range(-2.0..2.0),
        gamma: rng.gen_range(-pi..pi),
        phi: with_phi.then(|| rng.gen_range(-pi..pi)),
    }
}

/// Relative deviation of `eval` from the normalized dense oracle over `draws`
/// random field/parameter points per model.
pub fn closed_form_vs_oracle_with(eval: &Evaluator<'_>, draws: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut checks = 0;
    for model in oracle_models()? {
        let spec = model.spec();
        let with_phi = spec.ansatz_layout().phi_term.is_some();
        let norm = spec.action_normalization();
        for _ in 0..draws {
            let fd = random_fields(&mut rng, spec.n_terms());
            let p = random_params(&mut rng, with_phi);
            let oracle = action_oracle(&GaugeContext::new(&model, fd.clone())?, &p)? / norm;
            let closed = eval(&model, &fd, &p)?;
            worst = worst.max((closed - oracle).abs() / oracle.abs().max(1e-300));
            checks += 1;
        }
    }
    Ok(SuiteReport::new("closed-form vs oracle", worst, ORACLE_REL_TOL, checks))
}

pub fn closed_form_vs_oracle(draws: usize, seed: u64) -> Result<SuiteReport> {
    closed_form_vs_oracle_with(&library_evaluator, draws, seed)
}

/// Per-site oracle action of the chain at `N = 4` and `N = 5` for the same inputs.
pub fn chain_n_independence(points: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m4 = Model::new(ModelSpec::Chain { sites: 4 })?;
    let m5 = Model::new(ModelSpec::Chain { sites: 5 })?;
    let mut worst = 0.0f64;
    for _ in 0..points {
        let fd = random_fields(&mut rng, 3);
        let p = random_params(&mut rng, true);
        let s4 = action_oracle(&GaugeContext::new(&m4, fd.clone())?, &p)? / m4.spec().action_normalization();
        let s5 = action_oracle(&GaugeContext::new(&m5, fd)?, &p)? / m5.spec().action_normalization();
        worst = worst.max((s4 - s5).abs());
    }
    Ok(SuiteReport::new("chain N-independence", worst, N_INDEPENDENCE_TOL, points))
}

fn random_diagonal(rng: &mut ChaCha8Rng, n: usize) -> Result<SpinOperator> {
    let mut op = SpinOperator::zero(n)?;
    for z in 0..(1u64 << n) {
        if rng.gen_bool(0.6) {
            op.add_word(PauliWord::new(0, z), Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
        }
    }
    Ok(op)
}

fn site(n: usize, j: usize, p: Pauli) -> Result<DMatrix<Complex64>> {
    Ok(SpinOperator::single(n, j, p)?.to_dense()?.into_matrix())
}

/// Dense components by their defining conjugations:
/// `D^[j] = Z D / 2 + i (X D Y - Y D X) / 4`, `D^[-j] = (D + X D X) / 2`.
fn dense_components(d: &DMatrix<Complex64>, n: usize, j: usize) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let (x, y, z) = (site(n, j, Pauli::X)?, site(n, j, Pauli::Y)?, site(n, j, Pauli::Z)?);
    let i = Complex64::new(0.0, 1.0);
    let keep = (&z * d) * Complex64::new(0.5, 0.0) + (&x * d * &y - &y * d * &x) * (i * 0.25);
    let drop = (d + &x * d * &x) * Complex64::new(0.5, 0.0);
    Ok((keep, drop))
}

fn diag_map(d: &DMatrix<Complex64>, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(d.nrows(), d.ncols());
    for k in 0..d.nrows() {
        out[(k, k)] = Complex64::new(f(d[(k, k)].re), 0.0);
    }
    out
}

fn dist(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn comm(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a * b - b * a
}

/// Properties (i)-(vi) of the diagonal decomposition `D = D^[j] Z_j + D^[-j]`,
/// symbolic components checked against dense definitions.
pub fn decomposition_properties(samples: usize, max_qubits: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let i2 = Complex64::new(0.0, 2.0);
    let mut worst = 0.0f64;
    let mut checks = 0;
    for s in 0..samples {
        let n = 1 + s % max_qubits;
        let d_op = random_diagonal(&mut rng, n)?;
        let d = d_op.to_dense()?.into_matrix();
        for j in 0..n {
            let keep_op = d_op.diag_component(j, DiagPart::KeepJ)?;
            let drop_op = d_op.diag_component(j, DiagPart::DropJ)?;
            let keep = keep_op.to_dense()?.into_matrix();
            let drop = drop_op.to_dense()?.into_matrix();
            let (keep_ref, drop_ref) = dense_components(&d, n, j)?;
            let (xj, yj, zj) = (site(n, j, Pauli::X)?, site(n, j, Pauli::Y)?, site(n, j, Pauli::Z)?);
            let mut devs = vec![
                dist(&keep, &keep_ref),
                dist(&drop, &drop_ref),
                // (i)
                dist(&d, &(&keep * &zj + &drop)),
                // (iv)
                dist(&comm(&d, &xj), &(&keep * &yj * i2)),
                dist(&comm(&d, &yj), &(&keep * &xj * (-i2))),
                // (v)
                dist(
                    &dense_components(&diag_map(&d, f64::cos), n, j)?.0,
                    &(diag_map(&keep, f64::sin) * diag_map(&drop, f64::sin) * Complex64::new(-1.0, 0.0)),
                ),
                dist(
                    &dense_components(&diag_map(&d, f64::sin), n, j)?.0,
                    &(diag_map(&keep, f64::sin) * diag_map(&drop, f64::cos)),
                ),
                // (vi) with k = j
                keep_op.diag_component(j, DiagPart::KeepJ)?.to_dense()?.matrix().iter().map(|v| v.norm()).fold(0.0, f64::max),
            ];
            for part in [&keep, &drop] {
                // (ii) and (iii)
                for k in 0..n {
                    devs.push(comm(part, &site(n, k, Pauli::Z)?).iter().map(|v| v.norm()).fold(0.0, f64::max));
                }
                devs.push(comm(part, &xj).iter().map(|v| v.norm()).fold(0.0, f64::max));
                devs.push(comm(part, &yj).iter().map(|v| v.norm()).fold(0.0, f64::max));
            }
            for k in 0..n {
                // (vi)
                let jk = keep_op.diag_component(k, DiagPart::KeepJ)?;
                let kj = d_op.diag_component(k, DiagPart::KeepJ)?.diag_component(j, DiagPart::KeepJ)?;
                devs.push(dist(&jk.to_dense()?.into_matrix(), &kj.to_dense()?.into_matrix()));
            }
            checks += devs.len();
            worst = devs.into_iter().fold(worst, f64::max);
        }
    }
    Ok(SuiteReport::new("decomposition properties (i)-(vi)", worst, DECOMPOSITION_TOL, checks))
}

/// Sequential optimizer on the two-spin model against the analytic optimum.
pub fn two_level_sequential(tau: f64, m: usize) -> Result<SuiteReport> {
    let model = Model::new(ModelSpec::TwoSpin)?;
    let ramp = Ramp::new(tau)?;
    let tr = sequential_optimize(&model, &ramp, m, &SequentialOptions::default())?;
    let mut worst = 0.0f64;
    for (t, p) in tr.times().iter().zip(tr.values()) {
        let (l, ld) = ramp.eval(*t)?;
        let (b, g) = two_level_optimum_branch(&model.spec().ua_fields(l, ld), TwoLevelBranch::Continuous)?;
        worst = worst.max((p.beta - b).abs()).max((p.gamma - g).abs());
    }
    Ok(SuiteReport::new("two-level analytic vs sequential", worst, TWO_LEVEL_TOL, tr.times().len()))
}

/// Unrotated CD with the two model operators on the two-spin model: the zero
/// ansatz is a global minimum and the minimizer only moves along the null line.
pub fn cd_limitations(seed: u64) -> Result<SuiteReport> {
    let model = Model::new(ModelSpec::TwoSpin)?;
    let (ha, hb) = (&model.terms()[0], &model.terms()[1]);
    let cd = CdTwoParam::new(ha, hb)?;
    let (dha, dhb) = (ha.to_dense()?.into_matrix(), hb.to_dense()?.into_matrix());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut checks = 0;
    for lambda in [0.2, 0.5, 0.8] {
        // d/dlambda of the two-spin schedule: J = -1, h = 5 (1 - lambda)
        let fd = model.spec().ua_fields(lambda, 1.0);
        let (a0, b0) = (fd.values[0], fd.values[1]);
        let (da, db) = (fd.rates[0], fd.rates[1]);
        let s = |aa: f64, ab: f64| cd.action(a0, b0, da, db, aa, ab);
        let h0 = &dha * Complex64::new(a0, 0.0) + &dhb * Complex64::new(b0, 0.0);
        let dh = &dha * Complex64::new(da, 0.0) + &dhb * Complex64::new(db, 0.0);
        let oracle = |aa: f64, ab: f64| -> f64 {
            let a = &dha * Complex64::new(aa, 0.0) + &dhb * Complex64::new(ab, 0.0);
            let g = &dh - comm(&h0, &a) * Complex64::new(0.0, 1.0);
            (&g * &g).trace().re
        };
        let s0 = s(0.0, 0.0);
        for _ in 0..10 {
            let (aa, ab) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let o = oracle(aa, ab);
            worst = worst.max((s(aa, ab) - o).abs() / o.abs().max(1.0));
            checks += 1;
        }
        for i in 0..=100 {
            for j in 0..=100 {
                let (aa, ab) = (-1.0 + 0.02 * i as f64, -1.0 + 0.02 * j as f64);
                worst = worst.max(s0 - s(aa, ab));
                checks += 1;
            }
        }
        let opts = BfgsOptions::default();
        let from_zero = bfgs_minimize(|x: &[f64]| s(x[0], x[1]), &[0.0, 0.0], &opts)?;
        worst = worst.max(from_zero.x[0].hypot(from_zero.x[1]));
        let start = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let from_random = bfgs_minimize(|x: &[f64]| s(x[0], x[1]), &start, &opts)?;
        worst = worst.max((a0 * from_random.x[1] - b0 * from_random.x[0]).abs());
        worst = worst.max(from_random.f - s0);
        checks += 2;
    }
    Ok(SuiteReport::new("CD limitations", worst, CD_MIN_TOL, checks))
}

/// Benchmark instances whose boundary behavior is checked.
pub fn boundary_cases() -> Result<Vec<ModelSpec>> {
    let mut specs = vec![ModelSpec::TwoSpin, ModelSpec::Chain { sites: 8 }];
    for n in 3..=8 {
        specs.push(random_instance(ModelKind::Qubo, n, n as u64)?);
    }
    for seed in 0..3 {
        specs.push(random_instance(ModelKind::Lhz, 4, seed)?);
    }
    Ok(specs)
}

/// `lambda_dot` at both ends, and RA parameters and RA-UA field differences at
/// `t = 0, tau`.
pub fn boundary_conditions(specs: &[ModelSpec], tau: f64, m: usize) -> Result<SuiteReport> {
    let ramp = Ramp::new(tau)?;
    let mut worst = ramp.eval(0.0)?.1.abs().max(ramp.eval(tau)?.1.abs());
    let mut checks = 2;
    for spec in specs {
        let model = Model::new(spec.clone())?;
        let tr = sequential_optimize(&model, &ramp, m, &SequentialOptions::default())?;
        let ra = assemble_protocol(&model, ramp, Some(&tr), ProtocolKind::Ra)?;
        let ua = assemble_protocol(&model, ramp, None, ProtocolKind::Ua)?;
        for t in [0.0, tau] {
            let p = tr.params_at(t);
            worst = p.to_vec().into_iter().fold(worst, |w, v| w.max(v.abs()));
            let (fr, fu) = (ra.fields(t)?, ua.fields(t)?);
            worst = fr.terms.iter().zip(&fu.terms).fold(worst, |w, (a, b)| w.max((a - b).abs()));
            checks += 2;
        }
    }
    Ok(SuiteReport::new("boundary conditions", worst, BOUNDARY_TOL, checks))
}

/// Every suite with its default settings.
pub fn run_all() -> Result<Vec<SuiteReport>> {
    Ok(vec![
        closed_form_vs_oracle(100, 1)?,
        chain_n_independence(20, 2)?,
        decomposition_properties(40, 5, 3)?,
        two_level_sequential(1.0, 100)?,
        cd_limitations(4)?,
        boundary_conditions(&boundary_cases()?, 1.0, 100)?,
    ])
}
