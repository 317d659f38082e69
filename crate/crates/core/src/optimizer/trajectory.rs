use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::closed_form::RaParams;
use crate::error::{Error, Result};
use crate::fmt_num;

use super::spline::{CubicSpline, SplineBoundary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamName {
    Beta,
    Gamma,
    Phi,
}

impl ParamName {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::Beta => "beta",
            ParamName::Gamma => "gamma",
            ParamName::Phi => "phi",
        }
    }
}

impl FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(ParamName::Beta),
            "gamma" => Ok(ParamName::Gamma),
            "phi" => Ok(ParamName::Phi),
            other => Err(Error::Domain(format!("unknown parameter {other:?}"))),
        }
    }
}

/// Gridded ansatz parameters with spline interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamTrajectory {
    times: Vec<f64>,
    values: Vec<RaParams<f64>>,
    splines: Vec<CubicSpline<f64>>,
}

impl ParamTrajectory {
    pub fn new(times: Vec<f64>, values: Vec<RaParams<f64>>, boundary: SplineBoundary<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        if times.len() < 3 {
            return Err(Error::Domain("trajectory needs at least two grid intervals".into()));
        }
        let has_phi = values[0].phi.is_some();
        if values.iter().any(|v| v.phi.is_some() != has_phi) {
            return Err(Error::Domain("every grid point must carry the same parameters".into()));
        }
        let width = if has_phi { 3 } else { 2 };
        let splines = (0..width)
            .map(|k| {
                let ys = values.iter().map(|v| v.to_vec()[k]).collect();
                CubicSpline::new(times.clone(), ys, boundary)
            })
            .collect::<Result<_>>()?;
        Ok(Self { times, values, splines })
    }

    /// All-zero trajectory on `m + 1` equally spaced points of `[0, tau]`.
    pub fn zero(tau: f64, m: usize, with_phi: bool) -> Result<Self> {
        let times = uniform_grid(tau, m);
        let values = vec![RaParams::zero(with_phi); times.len()];
        Self::new(times, values, SplineBoundary::Natural)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[RaParams<f64>] {
        &self.values
    }

    pub fn has_phi(&self) -> bool {
        self.splines.len() == 3
    }

    pub fn tau(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn m_points(&self) -> usize {
        self.times.len() - 1
    }

    fn spline(&self, name: ParamName) -> Result<&CubicSpline<f64>> {
        let idx = match name {
            ParamName::Beta => 0,
            ParamName::Gamma => 1,
            ParamName::Phi if self.has_phi() => 2,
            ParamName::Phi => return Err(Error::Domain("trajectory has no phi parameter".into())),
        };
        Ok(&self.splines[idx])
    }

    pub fn value(&self, name: ParamName, t: f64) -> Result<f64> {
        Ok(self.spline(name)?.eval(t))
    }

    pub fn rate(&self, name: ParamName, t: f64) -> Result<f64> {
        Ok(self.spline(name)?.derivative(t))
    }

    pub fn params_at(&self, t: f64) -> RaParams<f64> {
        RaParams {
            beta: self.splines[0].eval(t),
            gamma: self.splines[1].eval(t),
            phi: self.splines.get(2).map(|s| s.eval(t)),
        }
    }

    /// Analytic time derivative of one parameter's interpolant.
    pub fn differentiate(&self, name: ParamName) -> Result<impl Fn(f64) -> f64 + '_> {
        let s = self.spline(name)?;
        Ok(move |t| s.derivative(t))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(if self.has_phi() { "t,beta,gamma,phi\n" } else { "t,beta,gamma\n" });
        for (t, v) in self.times.iter().zip(&self.values) {
            let _ = write!(out, "{},{},{}", fmt_num(*t), fmt_num(v.beta), fmt_num(v.gamma));
            if let Some(phi) = v.phi {
                let _ = write!(out, ",{}", fmt_num(phi));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

pub fn uniform_grid(tau: f64, m: usize) -> Vec<f64> {
    (0..=m).map(|i| tau * i as f64 / m as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiate_known_shapes() {
        let times = uniform_grid(2.0, 40);
        let values = times
            .iter()
            .map(|&t| RaParams { beta: 1.5, gamma: -0.3 * t + 0.1, phi: None })
            .collect();
        let tr = ParamTrajectory::new(times, values, SplineBoundary::Natural).unwrap();
        let db = tr.differentiate(ParamName::Beta).unwrap();
        let dg = tr.differentiate(ParamName::Gamma).unwrap();
        for k in 0..=50 {
            let t = 2.0 * k as f64 / 50.0;
            assert!(db(t).abs() < 1e-13);
            assert!((dg(t) + 0.3).abs() < 1e-12);
        }
        assert!(tr.differentiate(ParamName::Phi).is_err());
        assert!("delta".parse::<ParamName>().is_err());
    }

    #[test]
    fn csv_layout() {
        let tr = ParamTrajectory::zero(1.0, 4, true).unwrap();
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,beta,gamma,phi"));
        assert_eq!(csv.lines().count(), 6);
        let row: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
        assert_eq!(row.len(), 4);
        assert_eq!(row[0].parse::<f64>().unwrap(), 0.25);
        let two = ParamTrajectory::zero(1.0, 4, false).unwrap();
        assert!(two.to_csv().starts_with("t,beta,gamma\n"));
    }
}
