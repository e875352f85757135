//! Natural cubic spline used to resample tabulated spectra.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline<T> {
    x: Vec<T>,
    y: Vec<T>,
    /// Second derivatives at the knots.
    m: Vec<T>,
}

impl<T: Real> CubicSpline<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::domain("spline needs at least two knots and matching values"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("spline knots must be strictly increasing"));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::domain("spline knots and values must be finite"));
        }
        let mut m = vec![T::zero(); n];
        if n > 2 {
            // Thomas algorithm on the interior equations, natural end conditions.
            let two: T = lit(2.0);
            let six: T = lit(6.0);
            let mut diag = vec![T::zero(); n];
            let mut rhs = vec![T::zero(); n];
            let mut upper = vec![T::zero(); n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let lower = h0;
                diag[i] = two * (h0 + h1);
                upper[i] = h1;
                rhs[i] = six * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
                if i > 1 {
                    let w = lower / diag[i - 1];
                    diag[i] = diag[i] - w * upper[i - 1];
                    rhs[i] = rhs[i] - w * rhs[i - 1];
                }
            }
            m[n - 2] = rhs[n - 2] / diag[n - 2];
            for i in (1..n - 2).rev() {
                m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
            }
        }
        Ok(Self { x, y, m })
    }

    pub fn knots(&self) -> &[T] {
        &self.x
    }

    pub fn values(&self) -> &[T] {
        &self.y
    }

    pub fn lower(&self) -> T {
        self.x[0]
    }

    pub fn upper(&self) -> T {
        self.x[self.x.len() - 1]
    }

    /// Interpolated value; `None` outside the knot range.
    pub fn eval(&self, t: T) -> Option<T> {
        if !(t >= self.lower() && t <= self.upper()) {
            return None;
        }
        let i = match self.x.partition_point(|&k| k <= t) {
            0 => 0,
            p => (p - 1).min(self.x.len() - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let six: T = lit(6.0);
        let cubic = ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / six;
        Some(a * self.y[i] + b * self.y[i + 1] + cubic)
    }

    /// Spline of `t ↦ value_scale · s(t / knot_scale)`.
    ///
    /// Natural splines commute with this affine map, so no refit is needed.
    pub fn rescaled(&self, knot_scale: T, value_scale: T) -> Self {
        let k2 = knot_scale * knot_scale;
        Self {
            x: self.x.iter().map(|&v| v * knot_scale).collect(),
            y: self.y.iter().map(|&v| v * value_scale).collect(),
            m: self.m.iter().map(|&v| v * value_scale / k2).collect(),
        }
    }
}
