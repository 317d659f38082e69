use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplineBoundary<T> {
    /// Zero second derivative at both ends.
    Natural,
    /// Prescribed first derivative at both ends.
    Clamped { start: T, end: T },
}

/// Interpolating cubic spline with analytic first derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicSpline<T> {
    x: Vec<T>,
    y: Vec<T>,
    /// Second derivatives at the knots.
    m: Vec<T>,
}

impl<T: Float> CubicSpline<T> {
    pub fn new(x: Vec<T>, y: Vec<T>, boundary: SplineBoundary<T>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        if x.len() < 2 {
            return Err(Error::Domain("spline needs at least two knots".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("knots must be strictly increasing with finite values".into()));
        }
        let n = x.len();
        let two = T::one() + T::one();
        let six = T::from(6.0).unwrap();
        let h: Vec<T> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<T> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

        // tridiagonal system a_i m_{i-1} + b_i m_i + c_i m_{i+1} = d_i
        let mut a = vec![T::zero(); n];
        let mut b = vec![T::one(); n];
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        for i in 1..n - 1 {
            a[i] = h[i - 1];
            b[i] = two * (h[i - 1] + h[i]);
            c[i] = h[i];
            d[i] = six * (slope[i] - slope[i - 1]);
        }
        if let SplineBoundary::Clamped { start, end } = boundary {
            b[0] = two * h[0];
            c[0] = h[0];
            d[0] = six * (slope[0] - start);
            a[n - 1] = h[n - 2];
            b[n - 1] = two * h[n - 2];
            d[n - 1] = six * (end - slope[n - 2]);
        }
        for i in 1..n {
            let w = a[i] / b[i - 1];
            b[i] = b[i] - w * c[i - 1];
            d[i] = d[i] - w * d[i - 1];
        }
        let mut m = vec![T::zero(); n];
        m[n - 1] = d[n - 1] / b[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (d[i] - c[i] * m[i + 1]) / b[i];
        }
        Ok(Self { x, y, m })
    }

    pub fn knots(&self) -> &[T] {
        &self.x
    }

    pub fn values(&self) -> &[T] {
        &self.y
    }

    fn interval(&self, t: T) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    pub fn eval(&self, t: T) -> T {
        let i = self.interval(t);
        let six = T::from(6.0).unwrap();
        let h = self.x[i + 1] - self.x[i];
        let (l, r) = (self.x[i + 1] - t, t - self.x[i]);
        self.m[i] * l * l * l / (six * h)
            + self.m[i + 1] * r * r * r / (six * h)
            + (self.y[i] / h - self.m[i] * h / six) * l
            + (self.y[i + 1] / h - self.m[i + 1] * h / six) * r
    }

    pub fn derivative(&self, t: T) -> T {
        let i = self.interval(t);
        let two = T::one() + T::one();
        let six = T::from(6.0).unwrap();
        let h = self.x[i + 1] - self.x[i];
        let (l, r) = (self.x[i + 1] - t, t - self.x[i]);
        -self.m[i] * l * l / (two * h) + self.m[i + 1] * r * r / (two * h) + (self.y[i + 1] - self.y[i]) / h
            - (self.m[i + 1] - self.m[i]) * h / six
    }
}
