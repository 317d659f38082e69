use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BfgsOptions<T> {
    pub gtol: T,
    pub max_iter: usize,
    /// Central-difference step is `fd_step * max(1, |x_i|)`.
    pub fd_step: T,
    pub c1: T,
    pub c2: T,
}

impl<T: Float> Default for BfgsOptions<T> {
    fn default() -> Self {
        let k = |x: f64| T::from(x).unwrap();
        Self {
            gtol: k(1e-10),
            max_iter: 500,
            fd_step: k(1e-6),
            c1: k(1e-4),
            c2: k(0.9),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BfgsStatus {
    GradientTolerance,
    MaxIterations,
    /// No step along the search direction lowers the objective (finite-difference noise floor).
    Stalled,
    /// The objective turned non-finite; the result holds the best finite point seen.
    NonFinite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BfgsResult<T> {
    pub x: Vec<T>,
    pub f: T,
    pub grad_norm: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: BfgsStatus,
}

struct Counted<T, F> {
    f: F,
    _scalar: std::marker::PhantomData<T>,
    evals: usize,
    nonfinite: bool,
}

impl<T: Float, F: FnMut(&[T]) -> T> Counted<T, F> {
    fn value(&mut self, x: &[T]) -> T {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            v
        } else {
            self.nonfinite = true;
            T::infinity()
        }
    }

    fn gradient(&mut self, x: &[T], step: T) -> Vec<T> {
        let mut xp = x.to_vec();
        (0..x.len())
            .map(|i| {
                let h = step * T::one().max(x[i].abs());
                xp[i] = x[i] + h;
                let fp = self.value(&xp);
                xp[i] = x[i] - h;
                let fm = self.value(&xp);
                xp[i] = x[i];
                (fp - fm) / (h + h)
            })
            .collect()
    }
}

fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

fn norm<T: Float>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn axpy<T: Float>(x: &[T], a: T, p: &[T]) -> Vec<T> {
    x.iter().zip(p).map(|(&xi, &pi)| xi + a * pi).collect()
}

struct LinePoint<T> {
    x: Vec<T>,
    f: T,
    g: Vec<T>,
}

/// Quasi-Newton minimization with central-difference gradients and a strong-Wolfe line search.
pub fn bfgs_minimize<T, F>(f: F, x0: &[T], opts: &BfgsOptions<T>) -> Result<BfgsResult<T>>
where
    T: Float,
    F: FnMut(&[T]) -> T,
{
    let mut obj = Counted {
        f,
        evals: 0,
        _scalar: std::marker::PhantomData,
        nonfinite: false,
    };
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = obj.value(&x);
    if !fx.is_finite() {
        return Err(Error::Domain("objective is not finite at the starting point".into()));
    }
    let mut g = obj.gradient(&x, opts.fd_step);
    let mut hinv = identity::<T>(n);
    let mut first = true;
    let mut iterations = 0;
    let status = loop {
        if norm(&g) <= opts.gtol {
            break BfgsStatus::GradientTolerance;
        }
        if iterations >= opts.max_iter {
            break BfgsStatus::MaxIterations;
        }
        let mut p: Vec<T> = (0..n).map(|i| -dot(&hinv[i], &g)).collect();
        if dot(&p, &g) >= T::zero() {
            hinv = identity(n);
            first = true;
        }
        if first {
            // unit-length steepest-descent step until curvature is known
            let scale = T::one().min(T::one() / norm(&g));
            p = g.iter().map(|&v| -v * scale).collect();
        }
        let Some(next) = line_search(&mut obj, &x, fx, &g, &p, opts) else {
            if first {
                break BfgsStatus::Stalled;
            }
            // retry once along steepest descent before giving up
            hinv = identity(n);
            first = true;
            continue;
        };
        iterations += 1;
        let s: Vec<T> = next.x.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = next.g.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > T::epsilon() * norm(&s) * norm(&y) {
            if first {
                let scale = sy / dot(&y, &y);
                hinv = identity(n);
                for (i, row) in hinv.iter_mut().enumerate() {
                    row[i] = scale;
                }
            }
            bfgs_update(&mut hinv, &s, &y, sy);
            first = false;
        }
        x = next.x;
        fx = next.f;
        g = next.g;
    };
    Ok(BfgsResult {
        grad_norm: norm(&g),
        x,
        f: fx,
        iterations,
        evaluations: obj.evals,
        status: if obj.nonfinite && status != BfgsStatus::GradientTolerance {
            BfgsStatus::NonFinite
        } else {
            status
        },
    })
}

fn identity<T: Float>(n: usize) -> Vec<Vec<T>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect()
}

fn bfgs_update<T: Float>(h: &mut [Vec<T>], s: &[T], y: &[T], sy: T) {
    let n = s.len();
    let rho = T::one() / sy;
    let hy: Vec<T> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] = h[i][j] - rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

fn line_search<T, F>(
    obj: &mut Counted<T, F>,
    x: &[T],
    f0: T,
    g0: &[T],
    p: &[T],
    opts: &BfgsOptions<T>,
) -> Option<LinePoint<T>>
where
    T: Float,
    F: FnMut(&[T]) -> T,
{
    let d0 = dot(g0, p);
    let eval = |obj: &mut Counted<T, F>, alpha: T| {
        let xa = axpy(x, alpha, p);
        let fa = obj.value(&xa);
        (xa, fa)
    };
    let mut prev = (T::zero(), f0, d0);
    let mut alpha = T::one();
    for i in 0..40 {
        let (xa, fa) = eval(obj, alpha);
        if fa > f0 + opts.c1 * alpha * d0 || (i > 0 && fa >= prev.1) {
            return zoom(obj, x, f0, d0, p, prev, (alpha, fa), opts);
        }
        let ga = obj.gradient(&xa, opts.fd_step);
        let da = dot(&ga, p);
        if da.abs() <= -opts.c2 * d0 {
            return Some(LinePoint { x: xa, f: fa, g: ga });
        }
        if da >= T::zero() {
            return zoom(obj, x, f0, d0, p, (alpha, fa, da), (prev.0, prev.1), opts);
        }
        prev = (alpha, fa, da);
        alpha = alpha + alpha;
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn zoom<T, F>(
    obj: &mut Counted<T, F>,
    x: &[T],
    f0: T,
    d0: T,
    p: &[T],
    lo: (T, T, T),
    hi: (T, T),
    opts: &BfgsOptions<T>,
) -> Option<LinePoint<T>>
where
    T: Float,
    F: FnMut(&[T]) -> T,
{
    let (mut a_lo, mut f_lo, mut d_lo) = lo;
    let (mut a_hi, mut f_hi) = hi;
    let two = T::one() + T::one();
    let tenth = T::from(0.1).unwrap();
    let mut best: Option<LinePoint<T>> = None;
    for _ in 0..60 {
        let width = a_hi - a_lo;
        if width.abs() <= T::epsilon() * a_lo.abs().max(T::one()) {
            break;
        }
        // safeguarded quadratic interpolation through (lo, f_lo, d_lo) and (hi, f_hi)
        let denom = two * (f_hi - f_lo - d_lo * width);
        let mut a = if f_hi.is_finite() && denom > T::zero() {
            a_lo - d_lo * width * width / denom
        } else {
            a_lo + width / two
        };
        let (lo_b, hi_b) = if a_lo < a_hi { (a_lo, a_hi) } else { (a_hi, a_lo) };
        let margin = tenth * width.abs();
        if !(a > lo_b + margin && a < hi_b - margin) {
            a = a_lo + width / two;
        }
        let xa = axpy(x, a, p);
        let fa = obj.value(&xa);
        if fa > f0 + opts.c1 * a * d0 || fa >= f_lo {
            a_hi = a;
            f_hi = fa;
            continue;
        }
        let ga = obj.gradient(&xa, opts.fd_step);
        let da = dot(&ga, p);
        if da.abs() <= -opts.c2 * d0 {
            return Some(LinePoint { x: xa, f: fa, g: ga });
        }
        if da * (a_hi - a_lo) >= T::zero() {
            a_hi = a_lo;
            f_hi = f_lo;
        }
        a_lo = a;
        f_lo = fa;
        d_lo = da;
        best = Some(LinePoint { x: xa, f: fa, g: ga });
    }
    // accept the best sufficient-decrease point even if curvature was not met
    best.filter(|b| b.f < f0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{action_two_level, two_level_optimum_branch, FieldDerivs, TwoLevelBranch};

    #[test]
    fn quadratic_bowl() {
        let a = [1.5, -2.0, 0.25];
        let r = bfgs_minimize(
            |x: &[f64]| x.iter().zip(&a).map(|(xi, ai)| (xi - ai).powi(2)).sum(),
            &[0.0; 3],
            &BfgsOptions::default(),
        )
        .unwrap();
        for (xi, ai) in r.x.iter().zip(&a) {
            assert!((xi - ai).abs() < 1e-7);
        }
    }

    #[test]
    fn rosenbrock() {
        let r = bfgs_minimize(
            |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
            &BfgsOptions::default(),
        )
        .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{r:?}");
        assert!(r.f <= 24.2);
    }

    #[test]
    fn rosenbrock_in_f32() {
        let r = bfgs_minimize(
            |x: &[f32]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2f32, 1.0],
            &BfgsOptions { fd_step: 1e-3, gtol: 1e-4, ..Default::default() },
        )
        .unwrap();
        assert!((r.x[0] - 1.0).abs() < 2e-2, "{r:?}");
    }

    #[test]
    fn two_level_action_from_origin() {
        let fd = FieldDerivs::new(vec![-1.0, 2.0], vec![0.0, -3.5]).unwrap();
        let r = bfgs_minimize(
            |x: &[f64]| action_two_level(&fd, x[0], x[1]).unwrap(),
            &[0.0, 0.0],
            &BfgsOptions::default(),
        )
        .unwrap();
        let (b, g) = two_level_optimum_branch(&fd, TwoLevelBranch::Continuous).unwrap();
        assert!((r.x[0] - b).abs() < 1e-6 && (r.x[1] - g).abs() < 1e-6, "{r:?} vs {b} {g}");
    }

    #[test]
    fn nonfinite_start_is_an_error() {
        assert!(bfgs_minimize(|_: &[f64]| f64::NAN, &[0.0], &BfgsOptions::default()).is_err());
    }

    #[test]
    fn nonfinite_region_is_flagged() {
        let r = bfgs_minimize(
            |x: &[f64]| if x[0] > 0.5 { f64::INFINITY } else { (x[0] - 2.0).powi(2) },
            &[0.0],
            &BfgsOptions::default(),
        )
        .unwrap();
        assert!(r.f.is_finite() && r.x[0] <= 0.5);
        assert_eq!(r.status, BfgsStatus::NonFinite);
    }
}
