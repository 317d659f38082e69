//! End-to-end runs and disorder-averaged scaling studies.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, FidelityTrace, DEFAULT_SAMPLES, DEFAULT_STEPS, DEGENERACY_TOL, EXACT_CD_QUBIT_LIMIT, NORM_DRIFT_TOL};
use crate::error::{Error, Result};
use crate::fmt_num;
use crate::models::{random_instance, Model, ModelKind, ModelSpec, Ramp};
use crate::optimizer::{
    assemble_protocol, sequential_optimize, ActionBackend, BfgsOptions, ParamTrajectory, Protocol, ProtocolKind,
    SequentialOptions, DEFAULT_M_POINTS,
};

/// Settings shared by `run` and `scaling`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    /// `N` for the chain and QUBO models.
    pub n: Option<usize>,
    /// Logical size `n` of an LHZ instance.
    pub n_logical: Option<usize>,
    pub tau: f64,
    pub m_points: usize,
    pub steps: usize,
    pub protocols: Vec<ProtocolKind>,
    pub seed: u64,
    pub instances: usize,
    pub backend: ActionBackend,
    pub full: bool,
    /// Problem sizes for scaling studies; defaults depend on the model.
    pub sizes: Option<Vec<usize>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::TwoSpin,
            n: None,
            n_logical: None,
            tau: 1.0,
            m_points: DEFAULT_M_POINTS,
            steps: DEFAULT_STEPS,
            protocols: vec![ProtocolKind::Ua, ProtocolKind::LocalCd, ProtocolKind::Ra],
            seed: 0,
            instances: 20,
            backend: ActionBackend::ClosedForm,
            full: false,
            sizes: None,
        }
    }
}

impl RunConfig {
    /// Size of the single instance used by `run`.
    pub fn size(&self) -> Result<usize> {
        match self.model {
            ModelKind::TwoSpin => Ok(2),
            ModelKind::Chain | ModelKind::Qubo => self
                .n
                .ok_or_else(|| Error::InvalidConfig(format!("{} model needs --n", self.model))),
            ModelKind::Lhz => self
                .n_logical
                .or(self.n)
                .ok_or_else(|| Error::InvalidConfig("lhz model needs --n-logical".into())),
        }
    }

    /// Sizes visited by a scaling study.
    pub fn scaling_sizes(&self) -> Result<Vec<usize>> {
        if let Some(s) = &self.sizes {
            return Ok(s.clone());
        }
        if self.n.is_some() || self.n_logical.is_some() {
            return Ok(vec![self.size()?]);
        }
        Ok(match (self.model, self.full) {
            (ModelKind::TwoSpin, _) => vec![2],
            (ModelKind::Chain, false) => vec![4, 6, 8],
            (ModelKind::Chain, true) => vec![4, 6, 8, 10, 12],
            (ModelKind::Qubo, false) => (3..=8).collect(),
            (ModelKind::Qubo, true) => (3..=15).collect(),
            (ModelKind::Lhz, false) => vec![4, 5],
            (ModelKind::Lhz, true) => vec![4, 5, 6],
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidConfig("tau must be positive".into()));
        }
        if self.m_points < 10 {
            return Err(Error::InvalidConfig("m-points must be at least 10".into()));
        }
        if self.steps < dynamics::MIN_STEPS {
            return Err(Error::InvalidConfig(format!("steps must be at least {}", dynamics::MIN_STEPS)));
        }
        if self.instances == 0 {
            return Err(Error::InvalidConfig("instances must be at least 1".into()));
        }
        if self.protocols.is_empty() {
            return Err(Error::InvalidConfig("no protocols selected".into()));
        }
        Ok(())
    }

    pub fn spec_for(&self, size: usize, seed: u64) -> Result<ModelSpec> {
        random_instance(self.model, size, seed)
    }

    fn sequential_options(&self) -> SequentialOptions {
        SequentialOptions {
            backend: self.backend,
            ..SequentialOptions::default()
        }
    }

    fn check_exact_cd(&self, spec: &ModelSpec) -> Result<()> {
        if self.protocols.contains(&ProtocolKind::ExactCd) && spec.n_qubits() > EXACT_CD_QUBIT_LIMIT {
            return Err(Error::Capacity {
                what: "exact counterdiabatic driving",
                qubits: spec.n_qubits(),
                limit: EXACT_CD_QUBIT_LIMIT,
            });
        }
        Ok(())
    }
}

/// Control fields sampled on the output grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldTable {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

impl FieldTable {
    pub fn sample(protocol: &Protocol, times: &[f64]) -> Result<Self> {
        let rows = times
            .iter()
            .map(|&t| {
                let f = protocol.fields(t)?;
                Ok(f.terms.into_iter().chain(f.local).collect())
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            names: protocol.field_names(),
            times: times.to_vec(),
            rows,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.rows) {
            out.push_str(&fmt_num(*t));
            for v in row {
                out.push(',');
                out.push_str(&fmt_num(*v));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub kind: ProtocolKind,
    pub fields: FieldTable,
    pub fidelity: FidelityTrace,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config: RunConfig,
    pub spec: ModelSpec,
    pub trajectory: Option<ParamTrajectory>,
    pub runs: Vec<ProtocolRun>,
}

impl RunOutput {
    pub fn run(&self, kind: ProtocolKind) -> Option<&ProtocolRun> {
        self.runs.iter().find(|r| r.kind == kind)
    }

    /// Metadata document: config echo, instance, seeds, tolerances and final fidelities.
    pub fn metadata(&self) -> serde_json::Value {
        let finals: BTreeMap<String, serde_json::Value> = self
            .runs
            .iter()
            .map(|r| {
                (
                    r.kind.to_string(),
                    serde_json::json!({ "F": r.fidelity.final_f(), "F_tilde": r.fidelity.final_f_tilde() }),
                )
            })
            .collect();
        serde_json::json!({
            "command": "run",
            "config": self.config,
            "model": self.spec,
            "seeds": { "instance": self.config.seed },
            "backend": self.config.backend,
            "tolerances": tolerances(),
            "final_fidelity": finals,
        })
    }

    /// Writes the per-protocol CSVs, the trajectory and `run.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for r in &self.runs {
            std::fs::write(dir.join(format!("fields_{}.csv", r.kind)), r.fields.to_csv())?;
            r.fidelity.write_csv(dir.join(format!("fidelity_{}.csv", r.kind)))?;
        }
        if let Some(tr) = &self.trajectory {
            tr.write_csv(dir.join("params_ra.csv"))?;
        }
        write_json(&dir.join("run.json"), &self.metadata())
    }
}

fn tolerances() -> serde_json::Value {
    let b = BfgsOptions::<f64>::default();
    serde_json::json!({
        "bfgs_gtol": b.gtol,
        "bfgs_max_iter": b.max_iter,
        "fd_step": b.fd_step,
        "boundary_weight": crate::optimizer::DEFAULT_BOUNDARY_WEIGHT,
        "norm_drift": NORM_DRIFT_TOL,
        "degeneracy": DEGENERACY_TOL,
        "agp_gap": crate::agp::DEFAULT_GAP_TOL,
    })
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

/// Builds every requested protocol for one instance, optimizing the rotated
/// trajectory only when needed.
pub fn build_protocols(cfg: &RunConfig, spec: &ModelSpec) -> Result<(Option<ParamTrajectory>, Vec<Protocol>)> {
    let model = Model::new(spec.clone())?;
    let ramp = Ramp::new(cfg.tau)?;
    let trajectory = if cfg.protocols.contains(&ProtocolKind::Ra) {
        Some(sequential_optimize(&model, &ramp, cfg.m_points, &cfg.sequential_options())?)
    } else {
        None
    };
    let protocols = cfg
        .protocols
        .iter()
        .map(|&k| assemble_protocol(&model, ramp, trajectory.as_ref(), k))
        .collect::<Result<_>>()?;
    Ok((trajectory, protocols))
}

/// Single-instance run: optimization, propagation and sampling of every protocol.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let spec = cfg.spec_for(cfg.size()?, cfg.seed)?;
    cfg.check_exact_cd(&spec)?;
    let (trajectory, protocols) = build_protocols(cfg, &spec)?;
    let runs = protocols
        .par_iter()
        .map(|p| {
            let fidelity = dynamics::simulate(p, cfg.steps, DEFAULT_SAMPLES.min(cfg.steps))?;
            let fields = FieldTable::sample(p, &fidelity.times)?;
            Ok(ProtocolRun {
                kind: p.kind(),
                fields,
                fidelity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunOutput {
        config: cfg.clone(),
        spec,
        trajectory,
        runs,
    })
}

/// Final fidelities of one instance, keyed by protocol.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceResult {
    pub size: usize,
    pub seed: u64,
    pub final_f: BTreeMap<ProtocolKind, f64>,
}

pub fn run_instance(cfg: &RunConfig, size: usize, seed: u64) -> Result<InstanceResult> {
    let spec = cfg.spec_for(size, seed)?;
    cfg.check_exact_cd(&spec)?;
    let (_, protocols) = build_protocols(cfg, &spec)?;
    let final_f = protocols
        .iter()
        .map(|p| Ok((p.kind(), dynamics::final_fidelity(p, cfg.steps)?.0)))
        .collect::<Result<_>>()?;
    Ok(InstanceResult { size, seed, final_f })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub size: usize,
    pub protocol: ProtocolKind,
    pub mean_f: f64,
    pub p25_f: f64,
    pub p75_f: f64,
    pub mean_rel_improvement: f64,
}

#[derive(Clone, Debug)]
pub struct ScalingOutput {
    pub config: RunConfig,
    pub instances: Vec<InstanceResult>,
    pub rows: Vec<ScalingRow>,
}

impl ScalingOutput {
    pub fn row(&self, size: usize, protocol: ProtocolKind) -> Option<&ScalingRow> {
        self.rows.iter().find(|r| r.size == size && r.protocol == protocol)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,protocol,mean_F,p25_F,p75_F,mean_rel_improvement\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.size,
                r.protocol,
                fmt_num(r.mean_f),
                fmt_num(r.p25_f),
                fmt_num(r.p75_f),
                fmt_num(r.mean_rel_improvement)
            );
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("scaling.csv"), self.to_csv())?;
        let meta = serde_json::json!({
            "command": "scaling",
            "config": self.config,
            "sizes": self.config.scaling_sizes()?,
            "seeds": self.instances.iter().map(|i| serde_json::json!({"size": i.size, "seed": i.seed})).collect::<Vec<_>>(),
            "backend": self.config.backend,
            "tolerances": tolerances(),
            "instances": self.instances,
        });
        write_json(&dir.join("run.json"), &meta)
    }
}

/// Random-instance sweep; instance `i` of every size uses seed `seed + i`.
///
/// The unassisted protocol is always simulated because relative improvements
/// are measured against it.
pub fn scaling(cfg: &RunConfig) -> Result<ScalingOutput> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    if !cfg.protocols.contains(&ProtocolKind::Ua) {
        cfg.protocols.insert(0, ProtocolKind::Ua);
    }
    let sizes = cfg.scaling_sizes()?;
    let jobs: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&s| (0..cfg.instances as u64).map(move |i| (s, i)))
        .collect();
    let instances = jobs
        .par_iter()
        .map(|&(size, i)| run_instance(&cfg, size, cfg.seed.wrapping_add(i)))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &size in &sizes {
        let group: Vec<&InstanceResult> = instances.iter().filter(|r| r.size == size).collect();
        for &kind in &cfg.protocols {
            let fs: Vec<f64> = group.iter().map(|r| r.final_f[&kind]).collect();
            let rel: Vec<f64> = group.iter().map(|r| r.final_f[&kind] / r.final_f[&ProtocolKind::Ua]).collect();
            rows.push(ScalingRow {
                size,
                protocol: kind,
                mean_f: mean(&fs),
                p25_f: quantile(&fs, 0.25),
                p75_f: quantile(&fs, 0.75),
                mean_rel_improvement: mean(&rel),
            });
        }
    }
    Ok(ScalingOutput { config: cfg, instances, rows })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Linearly interpolated sample quantile.
fn quantile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q * (s.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}
