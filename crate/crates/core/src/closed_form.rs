//! Polynomial-cost evaluators of the time-scaled action `Tr(G_t^2)` for each model.
//!
//! Each function uses the term order and ansatz layout of the corresponding
//! [`ModelSpec`](crate::models::ModelSpec) and the normalization reported by
//! [`ModelSpec::action_normalization`](crate::models::ModelSpec::action_normalization).

use std::collections::BTreeMap;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::operators::{commutator, trace_product, SpinOperator};

/// Field values and their time derivatives, one entry per model term.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldDerivs<T> {
    pub values: Vec<T>,
    pub rates: Vec<T>,
}

impl<T: Float> FieldDerivs<T> {
    pub fn new(values: Vec<T>, rates: Vec<T>) -> Result<Self> {
        if values.len() != rates.len() {
            return Err(Error::Arity {
                expected: values.len(),
                found: rates.len(),
            });
        }
        Ok(Self { values, rates })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn expect(&self, n: usize) -> Result<()> {
        if self.values.len() == n && self.rates.len() == n {
            Ok(())
        } else {
            Err(Error::Arity {
                expected: n,
                found: self.values.len().min(self.rates.len()),
            })
        }
    }
}

/// Rotated-ansatz parameters: `K = beta H_K`, `Q = gamma H_gamma + phi H_phi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaParams<T> {
    pub beta: T,
    pub gamma: T,
    pub phi: Option<T>,
}

impl<T: Float> RaParams<T> {
    pub fn zero(with_phi: bool) -> Self {
        Self {
            beta: T::zero(),
            gamma: T::zero(),
            phi: with_phi.then(T::zero),
        }
    }

    pub fn to_vec(&self) -> Vec<T> {
        let mut v = vec![self.beta, self.gamma];
        v.extend(self.phi);
        v
    }

    pub fn from_slice(x: &[T], with_phi: bool) -> Result<Self> {
        let expected = if with_phi { 3 } else { 2 };
        if x.len() != expected {
            return Err(Error::Arity {
                expected,
                found: x.len(),
            });
        }
        Ok(Self {
            beta: x[0],
            gamma: x[1],
            phi: with_phi.then(|| x[2]),
        })
    }
}

#[inline]
fn k<T: Float>(x: f64) -> T {
    T::from(x).unwrap()
}

/// Two-spin action (raw trace). Fields are `[J, h]`; `beta` on the `J` term, `gamma` on `h`.
pub fn action_two_level<T: Float>(fd: &FieldDerivs<T>, beta: T, gamma: T) -> Result<T> {
    fd.expect(2)?;
    let (j, h) = (fd.values[0], fd.values[1]);
    let (jd, hd) = (fd.rates[0], fd.rates[1]);
    let (s4, c4) = (k::<T>(4.0) * gamma).sin_cos();
    let amp = beta + j;
    let axx = (amp * c4 - j) / k(2.0);
    let axy = amp / k(2.0) * s4;
    let t1 = jd + k::<T>(8.0) * h * axy;
    let t2 = k::<T>(2.0) * j * axy - hd;
    Ok(k::<T>(6.0) * jd * jd + k::<T>(2.0) * t1 * t1 + k::<T>(128.0) * h * h * axx * axx + k::<T>(8.0) * t2 * t2)
}

/// `phi_0 = (J' h - J h') / (4 h^2 + J^2)`, the exact two-spin gauge amplitude.
pub fn two_level_phi0<T: Float>(fd: &FieldDerivs<T>) -> Result<T> {
    fd.expect(2)?;
    let (j, h) = (fd.values[0], fd.values[1]);
    let den = k::<T>(4.0) * h * h + j * j;
    if den == T::zero() {
        return Err(Error::UndefinedAngle);
    }
    Ok((fd.rates[0] * h - j * fd.rates[1]) / den)
}

/// Branch of the two-spin optimum; both give the same action.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoLevelBranch {
    /// `J + beta = +sqrt(J^2 + phi0^2)`, `4 gamma = atan2(-phi0, J)`.
    PositiveAmplitude,
    /// `J + beta = sgn(J) sqrt(J^2 + phi0^2)`, `4 gamma = atan(-phi0 / J)`; vanishes with `phi0`.
    Continuous,
}

/// Analytic minimizer `(beta, gamma)` on the positive-amplitude branch.
pub fn two_level_optimum<T: Float>(fd: &FieldDerivs<T>) -> Result<(T, T)> {
    two_level_optimum_branch(fd, TwoLevelBranch::PositiveAmplitude)
}

pub fn two_level_optimum_branch<T: Float>(fd: &FieldDerivs<T>, branch: TwoLevelBranch) -> Result<(T, T)> {
    let phi0 = two_level_phi0(fd)?;
    let j = fd.values[0];
    let r = j.hypot(phi0);
    let quarter = k::<T>(0.25);
    match branch {
        TwoLevelBranch::PositiveAmplitude => {
            if r == T::zero() {
                return Err(Error::UndefinedAngle);
            }
            // adding +0 maps -0 to +0 so that phi0 = 0, J < 0 lands on +pi
            Ok((r - j, (-phi0 + T::zero()).atan2(j) * quarter))
        }
        TwoLevelBranch::Continuous => {
            if j == T::zero() {
                return Err(Error::UndefinedAngle);
            }
            Ok((j.signum() * r - j, (-phi0 / j).atan() * quarter))
        }
    }
}

/// Six gauge amplitudes of the rotated chain ansatz (per-site, translation invariant):
/// `[x, y, xz, yz, zxz, zyz]`.
pub fn chain_amplitudes<T: Float>(h: T, beta: T, gamma: T, phi: T) -> [T; 6] {
    let c = (h + beta) / k(2.0);
    let (s2, c2) = (k::<T>(2.0) * phi).sin_cos();
    let (s4, c4) = (k::<T>(4.0) * gamma).sin_cos();
    let one = T::one();
    [
        h - c * c2 * (c4 + one),
        -c * s2 * (c4 + one),
        c * s2 * s4,
        -c * c2 * s4,
        -c * c2 * (c4 - one),
        -c * s2 * (c4 - one),
    ]
}

/// Periodic-chain action per site, `Tr(G_t^2) / (N 2^N)`, valid for `N >= 4`.
/// Fields are `[J, b, h]`; `beta` on `h`, `gamma` on `J`, `phi` on `b`.
pub fn action_chain<T: Float>(fd: &FieldDerivs<T>, beta: T, gamma: T, phi: T) -> Result<T> {
    fd.expect(3)?;
    let (j, b, h) = (fd.values[0], fd.values[1], fd.values[2]);
    let (jd, bd, hd) = (fd.rates[0], fd.rates[1], fd.rates[2]);
    let [ax, ay, axz, ayz, azxz, azyz] = chain_amplitudes(h, beta, gamma, phi);
    let (j2, b2, h2) = (j * j, b * b, h * h);
    let c = k::<T>;
    let s = jd * jd
        + bd * bd
        + hd * hd
        + (c(8.0) * j2 + c(4.0) * b2) * ax * ax
        + (c(8.0) * j2 + c(4.0) * b2 + c(4.0) * h2) * ay * ay
        + (c(32.0) * j2 + c(8.0) * b2 + c(8.0) * h2) * axz * axz
        + (c(32.0) * j2 + c(8.0) * b2 + c(32.0) * h2) * ayz * ayz
        + (c(8.0) * j2 + c(4.0) * b2 + c(8.0) * h2) * azxz * azxz
        + (c(8.0) * j2 + c(4.0) * b2 + c(12.0) * h2) * azyz * azyz
        + ax * (c(16.0) * j2 * azxz + c(32.0) * j * b * axz)
        + c(32.0) * j * b * axz * azxz
        + ay * (c(16.0) * j2 * azyz + c(32.0) * j * b * ayz + c(4.0) * (bd * h - b * hd))
        + c(32.0) * j * b * ayz * azyz
        + c(8.0) * (jd * h - j * hd) * ayz;
    Ok(s)
}

fn check_qubo<T: Float>(j: &[Vec<T>]) -> Result<usize> {
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
        if row[r] != T::zero() || (0..r).any(|c| row[c] != j[c][r]) {
            return Err(Error::InvalidModel("coupling matrix must be symmetric with zero diagonal".into()));
        }
    }
    Ok(dim - 1)
}

/// QUBO action `Tr(G_t^2) / 2^N` in `O(N^3)`. Fields are `[A, B]`; `beta` on `B`, `gamma` on `A`.
pub fn action_qubo<T: Float>(j: &[Vec<T>], fd: &FieldDerivs<T>, beta: T, gamma: T) -> Result<T> {
    let n = check_qubo(j)?;
    fd.expect(2)?;
    let c = k::<T>;
    let (a, h) = (fd.values[0], fd.values[1]);
    let (ad, hd) = (fd.rates[0], fd.rates[1]);
    let bt = beta + h;
    let theta: Vec<Vec<T>> = j
        .iter()
        .map(|row| row.iter().map(|&v| c(2.0) * gamma * v).collect())
        .collect();

    let total_sq: T = j.iter().flatten().fold(T::zero(), |s, &v| s + v * v);
    let mut s = c(0.5) * ad * ad * total_sq + c(n as f64) * hd * hd;
    let a2 = a * a;
    let hb = h * bt;
    let hb2 = hb * hb;
    let lin = c(4.0) * bt * (h * ad - hd * a);

    for jj in 1..=n {
        let row = &j[jj];
        let th = &theta[jj];
        let row_sq = row.iter().fold(T::zero(), |s, &v| s + v * v);
        // coefficients of prod_m (cos th_m + t * J_m sin th_m) up to t^2
        let (mut e0, mut e1, mut e2) = (T::one(), T::zero(), T::zero());
        let mut prod_cos2 = T::one();
        for (m, &t) in th.iter().enumerate() {
            let (sn, cs) = t.sin_cos();
            let am = row[m] * sn;
            e2 = e2 * cs + e1 * am;
            e1 = e1 * cs + e0 * am;
            e0 = e0 * cs;
            prod_cos2 = prod_cos2 * (c(2.0) * t).cos();
        }
        s = s + c(4.0) * a2 * (h * h + bt * bt) * row_sq - c(8.0) * a2 * hb * e0 * row_sq
            + c(16.0) * a2 * hb * e2
            - lin * e1
            + c(2.0) * hb2 * (T::one() - prod_cos2);

        for kk in 1..jj {
            let sjk = th[kk].sin();
            if sjk == T::zero() {
                continue;
            }
            let (mut gp, mut gm) = (T::one(), T::one());
            for m in 0..=n {
                if m == jj || m == kk {
                    continue;
                }
                gp = gp * (th[m] + theta[kk][m]).cos();
                gm = gm * (th[m] - theta[kk][m]).cos();
            }
            s = s + c(8.0) * hb2 * sjk * sjk * (T::one() + gp + gm);
        }
    }
    Ok(s)
}

/// A pair of qubits sharing at least one constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NeighborPair {
    pub mu: usize,
    pub nu: usize,
    pub shared: usize,
}

/// Constraint-incidence counts of a parity layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LhzCounts {
    pub total: usize,
    pub per_site: Vec<usize>,
    /// Sorted by `(mu, nu)` with `mu < nu`.
    pub pairs: Vec<NeighborPair>,
}

impl LhzCounts {
    pub fn n_qubits(&self) -> usize {
        self.per_site.len()
    }

    /// `L^[mu][nu]`.
    pub fn shared(&self, mu: usize, nu: usize) -> usize {
        if mu == nu {
            return self.per_site[mu];
        }
        let key = (mu.min(nu), mu.max(nu));
        self.pairs
            .binary_search_by(|p| (p.mu, p.nu).cmp(&key))
            .map_or(0, |i| self.pairs[i].shared)
    }

    /// `L^[mu][-nu] = L^[mu] - L^[mu][nu]`.
    pub fn not_shared(&self, mu: usize, nu: usize) -> usize {
        self.per_site[mu] - self.shared(mu, nu)
    }

    pub fn check(&self) -> Result<()> {
        let n = self.per_site.len();
        if self.per_site.iter().any(|&l| l > self.total) {
            return Err(Error::InconsistentCounts("a site count exceeds the total".into()));
        }
        for w in self.pairs.windows(2) {
            if (w[0].mu, w[0].nu) >= (w[1].mu, w[1].nu) {
                return Err(Error::InconsistentCounts("pair list must be sorted and unique".into()));
            }
        }
        for p in &self.pairs {
            if p.mu >= p.nu || p.nu >= n {
                return Err(Error::InconsistentCounts(format!("bad pair ({}, {})", p.mu, p.nu)));
            }
            if p.shared == 0 || p.shared > self.per_site[p.mu].min(self.per_site[p.nu]) {
                return Err(Error::InconsistentCounts(format!("bad shared count for ({}, {})", p.mu, p.nu)));
            }
        }
        Ok(())
    }
}

pub fn lhz_counts(constraints: &[Vec<usize>], n_qubits: usize) -> Result<LhzCounts> {
    let mut per_site = vec![0usize; n_qubits];
    let mut shared: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for c in constraints {
        let mut members = c.clone();
        members.sort_unstable();
        members.dedup();
        if members.len() != c.len() {
            return Err(Error::InvalidModel(format!("constraint {c:?} repeats a qubit")));
        }
        if let Some(&q) = members.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::DimensionMismatch {
                expected: n_qubits,
                found: q + 1,
            });
        }
        for (i, &mu) in members.iter().enumerate() {
            per_site[mu] += 1;
            for &nu in &members[i + 1..] {
                *shared.entry((mu, nu)).or_default() += 1;
            }
        }
    }
    Ok(LhzCounts {
        total: constraints.len(),
        per_site,
        pairs: shared
            .into_iter()
            .map(|((mu, nu), shared)| NeighborPair { mu, nu, shared })
            .collect(),
    })
}

fn pow_or_zero<T: Float>(x: T, e: i64) -> T {
    if e < 0 {
        T::zero()
    } else {
        x.powi(e as i32)
    }
}

/// Parity-architecture action `Tr(G_t^2) / 2^N` in `O(N + pairs)`.
///
/// Fields are `[A, B, C]`; `beta` on `B`, `gamma` on `A`, `phi` on `C`. Exact when,
/// for every qubit, the constraint words are independent after removing that qubit
/// (true for [`lhz_default_constraints`](crate::models::lhz_default_constraints)).
pub fn action_lhz<T: Float>(
    counts: &LhzCounts,
    j: &[T],
    fd: &FieldDerivs<T>,
    beta: T,
    gamma: T,
    phi: T,
) -> Result<T> {
    fd.expect(3)?;
    counts.check()?;
    if j.len() != counts.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: counts.n_qubits(),
            found: j.len(),
        });
    }
    let c = k::<T>;
    let (a, h, cc) = (fd.values[0], fd.values[1], fd.values[2]);
    let (ad, hd, cd) = (fd.rates[0], fd.rates[1], fd.rates[2]);
    let bt = beta + h;
    let hb = h * bt;
    let hb2 = hb * hb;
    let (s2, c2) = (c(2.0) * phi).sin_cos();
    let c4 = (c(4.0) * phi).cos();
    let n = j.len();

    let sum_j2 = j.iter().fold(T::zero(), |s, &v| s + v * v);
    let mut s = ad * ad * sum_j2 + c(n as f64) * hd * hd + c(counts.total as f64) * cd * cd;
    let g: Vec<T> = j.iter().map(|&v| c(2.0) * gamma * v).collect();
    let lin_a = h * ad - hd * a;
    let lin_c = h * cd - hd * cc;

    for mu in 0..n {
        let jm = j[mu];
        let lm = counts.per_site[mu] as i64;
        let l = c(lm as f64);
        let (sg, cg) = g[mu].sin_cos();
        let cn = pow_or_zero(c2, lm);
        let cn1 = pow_or_zero(c2, lm - 1);
        let cn2 = pow_or_zero(c2, lm - 2);
        s = s + c(4.0) * (h * h + bt * bt) * (a * a * jm * jm + l * cc * cc);
        let quad = cg * (a * a * jm * jm * cn + cc * cc * l * cn - cc * cc * l * (l - T::one()) * s2 * s2 * cn2)
            - c(2.0) * a * jm * cc * l * sg * s2 * cn1;
        s = s - c(8.0) * hb * quad;
        s = s - c(4.0) * bt * (lin_a * jm * sg * cn + lin_c * l * cg * s2 * cn1);
        s = s + c(2.0) * hb2 * (T::one() - (c(2.0) * g[mu]).cos() * pow_or_zero(c4, lm));
    }
    for p in &counts.pairs {
        let kk = p.shared as i64;
        let e = (counts.per_site[p.mu] + counts.per_site[p.nu]) as i64 - 2 * kk;
        let weight = T::one() - pow_or_zero(c4, kk);
        s = s + hb2 * weight * (c(4.0) + c(8.0) * g[p.mu].cos() * g[p.nu].cos() * pow_or_zero(c2, e));
    }
    Ok(s)
}

/// Action of the two-operator ansatz `A = alpha_a H_a + alpha_b H_b` for
/// `H_0 = A_0 H_a + B_0 H_b` (raw traces, lambda derivatives).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CdTwoParam {
    tr_aa: f64,
    tr_ab: f64,
    tr_bb: f64,
    /// `Tr((i[H_a, H_b])^2)`, nonnegative for Hermitian `H_a`, `H_b`.
    pub commutator_weight: f64,
}

impl CdTwoParam {
    pub fn new(ha: &SpinOperator, hb: &SpinOperator) -> Result<Self> {
        let comm = commutator(ha, hb)?.scale(num_complex::Complex64::new(0.0, 1.0));
        Ok(Self {
            tr_aa: trace_product(ha, ha)?.re,
            tr_ab: trace_product(ha, hb)?.re,
            tr_bb: trace_product(hb, hb)?.re,
            commutator_weight: trace_product(&comm, &comm)?.re,
        })
    }

    pub fn action(&self, a0: f64, b0: f64, da0: f64, db0: f64, alpha_a: f64, alpha_b: f64) -> f64 {
        let base = da0 * da0 * self.tr_aa + 2.0 * da0 * db0 * self.tr_ab + db0 * db0 * self.tr_bb;
        let null = a0 * alpha_b - b0 * alpha_a;
        base + self.commutator_weight * null * null
    }
}
