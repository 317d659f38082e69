use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agp::{rotation_phases, LocalCdSolver};
use crate::closed_form::{FieldDerivs, RaParams};
use crate::error::{Error, Result};
use crate::models::{Model, Ramp};
use crate::operators::SpinOperator;

use super::trajectory::{ParamName, ParamTrajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    Ua,
    LocalCd,
    Ra,
    ExactCd,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 4] = [ProtocolKind::Ua, ProtocolKind::LocalCd, ProtocolKind::Ra, ProtocolKind::ExactCd];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Ua => "ua",
            ProtocolKind::LocalCd => "local-cd",
            ProtocolKind::Ra => "ra",
            ProtocolKind::ExactCd => "exact-cd",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown protocol {s:?}")))
    }
}

/// Control fields at one instant: one value per model term, plus the local
/// `Y_j` amplitudes for local CD driving.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlFields {
    pub terms: Vec<f64>,
    pub local: Vec<f64>,
}

#[derive(Clone, Debug)]
enum Driver {
    Bare,
    Rotated(ParamTrajectory),
    Local(LocalCdSolver),
}

/// A time-dependent driving protocol over one ramp.
#[derive(Clone, Debug)]
pub struct Protocol {
    model: Model,
    ramp: Ramp<f64>,
    kind: ProtocolKind,
    driver: Driver,
}

impl Protocol {
    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn ramp(&self) -> &Ramp<f64> {
        &self.ramp
    }

    pub fn tau(&self) -> f64 {
        self.ramp.tau()
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn trajectory(&self) -> Option<&ParamTrajectory> {
        match &self.driver {
            Driver::Rotated(tr) => Some(tr),
            _ => None,
        }
    }

    /// Unassisted fields and rates at time `t`.
    pub fn ua_fields(&self, t: f64) -> Result<FieldDerivs<f64>> {
        let (l, ld) = self.ramp.eval(t)?;
        Ok(self.model.spec().ua_fields(l, ld))
    }

    /// Bare Hamiltonian `H0(lambda(t))` whose ground state defines the fidelity.
    pub fn bare_hamiltonian(&self, t: f64) -> Result<SpinOperator> {
        self.model.hamiltonian(&self.ua_fields(t)?.values)
    }

    pub fn field_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.model.spec().term_names().iter().map(|s| s.to_string()).collect();
        if matches!(self.driver, Driver::Local(_)) {
            names.extend((0..self.model.n_qubits()).map(|j| format!("y{j}")));
        }
        names
    }

    pub fn fields(&self, t: f64) -> Result<ControlFields> {
        let fd = self.ua_fields(t)?;
        match &self.driver {
            Driver::Bare => Ok(ControlFields {
                terms: fd.values,
                local: Vec::new(),
            }),
            Driver::Local(solver) => {
                let local = solver.solve(&fd)?;
                Ok(ControlFields {
                    terms: fd.values,
                    local,
                })
            }
            Driver::Rotated(tr) => {
                let layout = self.model.spec().ansatz_layout();
                let mut terms = fd.values;
                terms[layout.k_term] += tr.value(ParamName::Beta, t)?;
                terms[layout.gamma_term] += tr.rate(ParamName::Gamma, t)?;
                if let Some(idx) = layout.phi_term {
                    terms[idx] += tr.rate(ParamName::Phi, t)?;
                }
                Ok(ControlFields {
                    terms,
                    local: Vec::new(),
                })
            }
        }
    }

    /// Ansatz parameters at `t` (rotated protocols only).
    pub fn rotation(&self, t: f64) -> Option<RaParams<f64>> {
        self.trajectory().map(|tr| tr.params_at(t))
    }

    /// Diagonal of the rotation generator `Q(t)`; `None` when the protocol does not rotate.
    pub fn rotation_phases(&self, t: f64) -> Result<Option<Vec<f64>>> {
        match self.rotation(t) {
            Some(p) => Ok(Some(rotation_phases(
                self.model.terms(),
                &self.model.spec().ansatz_layout(),
                &p,
            )?)),
            None => Ok(None),
        }
    }
}

/// Builds a protocol of the requested kind; `traj` is required for rotated driving.
pub fn assemble_protocol(model: &Model, ramp: Ramp<f64>, traj: Option<&ParamTrajectory>, kind: ProtocolKind) -> Result<Protocol> {
    let driver = match kind {
        ProtocolKind::Ua | ProtocolKind::ExactCd => Driver::Bare,
        ProtocolKind::LocalCd => Driver::Local(LocalCdSolver::new(model.terms())?),
        ProtocolKind::Ra => {
            let tr = traj.ok_or_else(|| Error::InvalidConfig("rotated protocol needs a trajectory".into()))?;
            let has_phi = model.spec().ansatz_layout().phi_term.is_some();
            if tr.has_phi() != has_phi {
                return Err(Error::InvalidConfig("trajectory parameters do not match the model ansatz".into()));
            }
            if (tr.tau() - ramp.tau()).abs() > 1e-12 * ramp.tau() || tr.times()[0] != 0.0 {
                return Err(Error::InvalidConfig("trajectory does not span the ramp".into()));
            }
            Driver::Rotated(tr.clone())
        }
    };
    Ok(Protocol {
        model: model.clone(),
        ramp,
        kind,
        driver,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;

    #[test]
    fn zero_trajectory_reproduces_ua() {
        let model = Model::new(ModelSpec::Chain { sites: 4 }).unwrap();
        let ramp = Ramp::new(1.0).unwrap();
        let tr = ParamTrajectory::zero(1.0, 20, true).unwrap();
        let ra = assemble_protocol(&model, ramp, Some(&tr), ProtocolKind::Ra).unwrap();
        let ua = assemble_protocol(&model, ramp, None, ProtocolKind::Ua).unwrap();
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            assert_eq!(ra.fields(t).unwrap(), ua.fields(t).unwrap());
        }
    }

    #[test]
    fn mismatched_trajectory_is_rejected() {
        let model = Model::new(ModelSpec::Chain { sites: 4 }).unwrap();
        let ramp = Ramp::new(1.0).unwrap();
        let two = ParamTrajectory::zero(1.0, 20, false).unwrap();
        assert!(assemble_protocol(&model, ramp, Some(&two), ProtocolKind::Ra).is_err());
        let long = ParamTrajectory::zero(2.0, 20, true).unwrap();
        assert!(assemble_protocol(&model, ramp, Some(&long), ProtocolKind::Ra).is_err());
        assert!(assemble_protocol(&model, ramp, None, ProtocolKind::Ra).is_err());
    }

    #[test]
    fn local_cd_adds_site_fields() {
        let model = Model::new(ModelSpec::TwoSpin).unwrap();
        let p = assemble_protocol(&model, Ramp::new(1.0).unwrap(), None, ProtocolKind::LocalCd).unwrap();
        assert_eq!(p.field_names(), vec!["J", "h", "y0", "y1"]);
        let f = p.fields(0.5).unwrap();
        assert_eq!(f.local.len(), 2);
        assert!(p.fields(0.0).unwrap().local.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn protocol_names_round_trip() {
        for k in ProtocolKind::ALL {
            assert_eq!(k.as_str().parse::<ProtocolKind>().unwrap(), k);
        }
    }
}
