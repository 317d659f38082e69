//! Benchmark Hamiltonian families, their unassisted schedules and the smooth ramp.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_traits::{Float, FloatConst};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::closed_form::FieldDerivs;
use crate::error::{Error, Result};
use crate::operators::{Pauli, PauliWord, SpinOperator};

pub const LHZ_CONSTRAINT_STRENGTH: f64 = 3.0;

/// `lambda(t) = sin^2[(pi/2) sin^2(pi t / 2 tau)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ramp<T> {
    tau: T,
}

impl<T: Float + FloatConst> Ramp<T> {
    pub fn new(tau: T) -> Result<Self> {
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(Error::Domain("ramp duration must be positive and finite".into()));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    /// Returns `(lambda, dlambda/dt)`. Times within a few ulps of the interval are clamped.
    pub fn eval(&self, t: T) -> Result<(T, T)> {
        let slack = self.tau * T::epsilon() * T::from(16.0).unwrap();
        if t < -slack || t > self.tau + slack || t.is_nan() {
            return Err(Error::Range {
                t: t.to_f64().unwrap_or(f64::NAN),
                tau: self.tau.to_f64().unwrap_or(f64::NAN),
            });
        }
        let t = t.max(T::zero()).min(self.tau);
        let two = T::one() + T::one();
        let pi = T::PI();
        // lambda(tau - t) = 1 - lambda(t); evaluating the nearer end keeps both endpoints exact
        let mirrored = t > self.tau / two;
        let t = if mirrored { self.tau - t } else { t };
        let (s, c) = (pi * t / (two * self.tau)).sin_cos();
        let u = s * s;
        let arg = pi / two * u;
        let lambda = arg.sin().powi(2);
        let du = two * s * c * pi / (two * self.tau);
        let dlambda = (pi * u).sin() * pi / two * du;
        Ok((if mirrored { T::one() - lambda } else { lambda }, dlambda))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    TwoSpin,
    Chain,
    Qubo,
    Lhz,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::TwoSpin => "two-spin",
            ModelKind::Chain => "chain",
            ModelKind::Qubo => "qubo",
            ModelKind::Lhz => "lhz",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-spin" => Ok(ModelKind::TwoSpin),
            "chain" => Ok(ModelKind::Chain),
            "qubo" => Ok(ModelKind::Qubo),
            "lhz" => Ok(ModelKind::Lhz),
            other => Err(Error::InvalidConfig(format!("unknown model kind {other:?}"))),
        }
    }
}

/// A concrete problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecDocument", into = "SpecDocument")]
pub enum ModelSpec {
    TwoSpin,
    Chain {
        sites: usize,
    },
    /// `couplings` is `(N+1) x (N+1)`, symmetric, zero diagonal; row 0 holds local fields.
    Qubo {
        couplings: Vec<Vec<f64>>,
        seed: Option<u64>,
    },
    Lhz {
        logical: usize,
        couplings: Vec<f64>,
        constraints: Vec<Vec<usize>>,
        seed: Option<u64>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CouplingDoc {
    Matrix(Vec<Vec<f64>>),
    Vector(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
struct SpecDocument {
    kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    big_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    couplings: Option<CouplingDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    constraints: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl From<ModelSpec> for SpecDocument {
    fn from(spec: ModelSpec) -> Self {
        let mut doc = SpecDocument {
            kind: spec.kind(),
            n: None,
            big_n: Some(spec.n_qubits()),
            couplings: None,
            constraints: None,
            seed: None,
        };
        match spec {
            ModelSpec::TwoSpin | ModelSpec::Chain { .. } => {}
            ModelSpec::Qubo { couplings, seed } => {
                doc.couplings = Some(CouplingDoc::Matrix(couplings));
                doc.seed = seed;
            }
            ModelSpec::Lhz {
                logical,
                couplings,
                constraints,
                seed,
            } => {
                doc.n = Some(logical);
                doc.big_n = None;
                doc.couplings = Some(CouplingDoc::Vector(couplings));
                doc.constraints = Some(constraints);
                doc.seed = seed;
            }
        }
        doc
    }
}

impl TryFrom<SpecDocument> for ModelSpec {
    type Error = Error;

    fn try_from(doc: SpecDocument) -> Result<Self> {
        let missing = |what: &str| Error::InvalidModel(format!("{} model needs {what}", doc.kind));
        let spec = match doc.kind {
            ModelKind::TwoSpin => ModelSpec::TwoSpin,
            ModelKind::Chain => ModelSpec::Chain {
                sites: doc.big_n.ok_or_else(|| missing("\"N\""))?,
            },
            ModelKind::Qubo => match doc.couplings {
                Some(CouplingDoc::Matrix(couplings)) => ModelSpec::Qubo {
                    couplings,
                    seed: doc.seed,
                },
                _ => return Err(missing("a coupling matrix")),
            },
            ModelKind::Lhz => {
                let logical = doc.n.ok_or_else(|| missing("\"n\""))?;
                let couplings = match doc.couplings {
                    Some(CouplingDoc::Vector(v)) => v,
                    _ => return Err(missing("a coupling vector")),
                };
                let constraints = match doc.constraints {
                    Some(c) => c,
                    None => lhz_default_constraints(logical)?,
                };
                ModelSpec::Lhz {
                    logical,
                    couplings,
                    constraints,
                    seed: doc.seed,
                }
            }
        };
        spec.validate()?;
        if let Some(n) = doc.big_n {
            if n != spec.n_qubits() {
                return Err(Error::DimensionMismatch {
                    expected: spec.n_qubits(),
                    found: n,
                });
            }
        }
        Ok(spec)
    }
}

/// Which terms the rotated ansatz acts on: `K = beta * H[k_term]`,
/// `Q = gamma * H[gamma_term] + phi * H[phi_term]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnsatzLayout {
    pub k_term: usize,
    pub gamma_term: usize,
    pub phi_term: Option<usize>,
}

impl AnsatzLayout {
    pub fn arity(&self) -> usize {
        if self.phi_term.is_some() {
            3
        } else {
            2
        }
    }
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::TwoSpin => ModelKind::TwoSpin,
            ModelSpec::Chain { .. } => ModelKind::Chain,
            ModelSpec::Qubo { .. } => ModelKind::Qubo,
            ModelSpec::Lhz { .. } => ModelKind::Lhz,
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            ModelSpec::TwoSpin => 2,
            ModelSpec::Chain { sites } => *sites,
            ModelSpec::Qubo { couplings, .. } => couplings.len().saturating_sub(1),
            ModelSpec::Lhz { couplings, .. } => couplings.len(),
        }
    }

    /// The size reported in summaries: logical spins for LHZ, qubits otherwise.
    pub fn size(&self) -> usize {
        match self {
            ModelSpec::Lhz { logical, .. } => *logical,
            _ => self.n_qubits(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ModelSpec::Qubo { seed, .. } | ModelSpec::Lhz { seed, .. } => *seed,
            _ => None,
        }
    }

    pub fn term_names(&self) -> &'static [&'static str] {
        match self {
            ModelSpec::TwoSpin => &["J", "h"],
            ModelSpec::Chain { .. } => &["J", "b", "h"],
            ModelSpec::Qubo { .. } => &["A", "B"],
            ModelSpec::Lhz { .. } => &["A", "B", "C"],
        }
    }

    pub fn n_terms(&self) -> usize {
        self.term_names().len()
    }

    pub fn ansatz_layout(&self) -> AnsatzLayout {
        match self {
            ModelSpec::TwoSpin => AnsatzLayout {
                k_term: 0,
                gamma_term: 1,
                phi_term: None,
            },
            ModelSpec::Chain { .. } => AnsatzLayout {
                k_term: 2,
                gamma_term: 0,
                phi_term: Some(1),
            },
            ModelSpec::Qubo { .. } => AnsatzLayout {
                k_term: 1,
                gamma_term: 0,
                phi_term: None,
            },
            ModelSpec::Lhz { .. } => AnsatzLayout {
                k_term: 1,
                gamma_term: 0,
                phi_term: Some(2),
            },
        }
    }

    /// Factor dividing the raw trace in this model's closed-form action.
    pub fn action_normalization(&self) -> f64 {
        let n = self.n_qubits();
        let dim = 2f64.powi(n as i32);
        match self {
            ModelSpec::TwoSpin => 1.0,
            ModelSpec::Chain { .. } => n as f64 * dim,
            ModelSpec::Qubo { .. } | ModelSpec::Lhz { .. } => dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::TwoSpin => Ok(()),
            ModelSpec::Chain { sites } => {
                if *sites < 3 {
                    Err(Error::InvalidModel("periodic chain needs at least 3 sites".into()))
                } else {
                    Ok(())
                }
            }
            ModelSpec::Qubo { couplings, .. } => validate_qubo_couplings(couplings),
            ModelSpec::Lhz {
                logical,
                couplings,
                constraints,
                ..
            } => {
                if *logical < 3 {
                    return Err(Error::InvalidModel("LHZ needs at least 3 logical spins".into()));
                }
                let n = logical * (logical - 1) / 2;
                if couplings.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: couplings.len(),
                    });
                }
                for c in constraints {
                    if c.is_empty() || c.iter().any(|&q| q >= n) {
                        return Err(Error::InvalidModel(format!("constraint {c:?} out of range")));
                    }
                }
                Ok(())
            }
        }
    }

    /// Term operators in field order (see [`ModelSpec::term_names`]).
    pub fn terms(&self) -> Result<Vec<SpinOperator>> {
        self.validate()?;
        let n = self.n_qubits();
        let neg_sum = |p: Pauli| -> Result<SpinOperator> {
            let mut op = SpinOperator::zero(n)?;
            for j in 0..n {
                op = op.axpy(Complex64::new(-1.0, 0.0), &SpinOperator::single(n, j, p)?)?;
            }
            Ok(op)
        };
        let zword = |sites: &[usize]| PauliWord::new(0, sites.iter().fold(0u64, |m, &s| m | 1 << s));
        match self {
            ModelSpec::TwoSpin => {
                let xx = SpinOperator::from_factors(2, &[(0, Pauli::X), (1, Pauli::X)], 1.0)?;
                let zz = SpinOperator::from_factors(2, &[(0, Pauli::Z), (1, Pauli::Z)], 1.0)?;
                Ok(vec![xx.add(&zz)?, neg_sum(Pauli::Z)?])
            }
            ModelSpec::Chain { sites } => {
                let mut zz = SpinOperator::zero(n)?;
                for j in 0..*sites {
                    zz.add_word(zword(&[j, (j + 1) % sites]), Complex64::new(-1.0, 0.0));
                }
                Ok(vec![zz, neg_sum(Pauli::Z)?, neg_sum(Pauli::X)?])
            }
            ModelSpec::Qubo { couplings, .. } => {
                let mut hp = SpinOperator::zero(n)?;
                for j in 1..=n {
                    hp.add_word(zword(&[j - 1]), Complex64::new(-couplings[j][0], 0.0));
                    for k in (j + 1)..=n {
                        hp.add_word(zword(&[j - 1, k - 1]), Complex64::new(-couplings[j][k], 0.0));
                    }
                }
                Ok(vec![hp, neg_sum(Pauli::X)?])
            }
            ModelSpec::Lhz {
                couplings,
                constraints,
                ..
            } => {
                let mut hp = SpinOperator::zero(n)?;
                for (k, &jk) in couplings.iter().enumerate() {
                    hp.add_word(zword(&[k]), Complex64::new(-jk, 0.0));
                }
                let mut hc = SpinOperator::zero(n)?;
                for c in constraints {
                    hc.add_word(zword(c), Complex64::new(-1.0, 0.0));
                }
                Ok(vec![hp, neg_sum(Pauli::X)?, hc])
            }
        }
    }

    /// Unassisted fields and their time derivatives at `(lambda, lambda_dot)`.
    pub fn ua_fields<T: Float>(&self, lambda: T, lambda_dot: T) -> FieldDerivs<T> {
        let k = |x: f64| T::from(x).unwrap();
        let one = T::one();
        match self {
            ModelSpec::TwoSpin => FieldDerivs {
                values: vec![-one, k(5.0) * (one - lambda)],
                rates: vec![T::zero(), -k(5.0) * lambda_dot],
            },
            ModelSpec::Chain { .. } => FieldDerivs {
                values: vec![lambda, lambda / k(5.0), one - lambda / k(2.0)],
                rates: vec![lambda_dot, lambda_dot / k(5.0), -lambda_dot / k(2.0)],
            },
            ModelSpec::Qubo { .. } => FieldDerivs {
                values: vec![lambda, one - lambda],
                rates: vec![lambda_dot, -lambda_dot],
            },
            ModelSpec::Lhz { .. } => {
                let cf = k(LHZ_CONSTRAINT_STRENGTH);
                FieldDerivs {
                    values: vec![lambda, one - lambda, cf * lambda],
                    rates: vec![lambda_dot, -lambda_dot, cf * lambda_dot],
                }
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn validate_qubo_couplings(j: &[Vec<f64>]) -> Result<()> {
    let dim = j.len();
    if dim < 2 {
        return Err(Error::InvalidModel("QUBO needs at least one spin".into()));
    }
    for (r, row) in j.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: row.len(),
            });
        }
        if row[r] != 0.0 {
            return Err(Error::InvalidModel("QUBO couplings need a zero diagonal".into()));
        }
        for (c, &v) in row.iter().enumerate() {
            if v != j[c][r] || !v.is_finite() {
                return Err(Error::InvalidModel(format!("asymmetric or non-finite coupling at ({r}, {c})")));
            }
        }
    }
    Ok(())
}

/// `sum_i fields_i * H_i`.
pub fn build_hamiltonian(terms: &[SpinOperator], fields: &[f64]) -> Result<SpinOperator> {
    let n = terms
        .first()
        .map(SpinOperator::n_qubits)
        .ok_or_else(|| Error::InvalidModel("model has no terms".into()))?;
    SpinOperator::linear_combination(n, fields, terms)
}

/// A spec together with its cached term operators.
#[derive(Clone, Debug)]
pub struct Model {
    spec: ModelSpec,
    terms: Vec<SpinOperator>,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let terms = spec.terms()?;
        Ok(Self { spec, terms })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn terms(&self) -> &[SpinOperator] {
        &self.terms
    }

    pub fn n_qubits(&self) -> usize {
        self.spec.n_qubits()
    }

    pub fn hamiltonian(&self, fields: &[f64]) -> Result<SpinOperator> {
        build_hamiltonian(&self.terms, fields)
    }
}

/// Uniform sample in `[-1, 1)` built from the top 53 bits of one `u64` draw.
fn uniform_coupling(rng: &mut ChaCha8Rng) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * u - 1.0
}

/// Deterministic instance from a ChaCha8 stream seeded via `seed_from_u64`.
///
/// QUBO couplings are drawn row-major over the upper triangle `0 <= j < k <= N`;
/// LHZ couplings in qubit order. `size` is `N` for QUBO/chain and `n` for LHZ.
pub fn random_instance(kind: ModelKind, size: usize, seed: u64) -> Result<ModelSpec> {
    if size < 2 {
        return Err(Error::InvalidModel("instance size must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = match kind {
        ModelKind::TwoSpin => ModelSpec::TwoSpin,
        ModelKind::Chain => ModelSpec::Chain { sites: size },
        ModelKind::Qubo => {
            let mut j = vec![vec![0.0; size + 1]; size + 1];
            for r in 0..=size {
                for c in (r + 1)..=size {
                    let v = uniform_coupling(&mut rng);
                    j[r][c] = v;
                    j[c][r] = v;
                }
            }
            ModelSpec::Qubo {
                couplings: j,
                seed: Some(seed),
            }
        }
        ModelKind::Lhz => {
            let constraints = lhz_default_constraints(size)?;
            let n = size * (size - 1) / 2;
            ModelSpec::Lhz {
                logical: size,
                couplings: (0..n).map(|_| uniform_coupling(&mut rng)).collect(),
                constraints,
                seed: Some(seed),
            }
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// Physical qubit of the logical pair `(i, j)`, `i < j`, numbered row-major.
pub fn lhz_qubit(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Triangular parity layout: one 3-body triangle per row boundary and 4-body
/// plaquettes in the bulk, `(n-1)(n-2)/2` constraints in total.
pub fn lhz_default_constraints(n: usize) -> Result<Vec<Vec<usize>>> {
    if n < 3 {
        return Err(Error::InvalidModel("LHZ layout needs n >= 3".into()));
    }
    let q = |i, j| lhz_qubit(n, i, j);
    let mut out = Vec::with_capacity((n - 1) * (n - 2) / 2);
    for i in 0..n - 2 {
        out.push(vec![q(i, i + 1), q(i, i + 2), q(i + 1, i + 2)]);
        for j in (i + 2)..(n - 1) {
            out.push(vec![q(i, j), q(i, j + 1), q(i + 1, j), q(i + 1, j + 1)]);
        }
    }
    Ok(out)
}
