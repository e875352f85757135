//! Composite Gauss-Legendre quadrature with panel doubling.
//!
//! Every integral in the crate is a smooth (possibly oscillatory) function over
//! a finite window, so a fixed-order Gauss-Legendre rule applied on uniformly
//! refined panels converges geometrically. Refinement stops once two
//! successive estimates agree to the requested relative tolerance.

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Builds the rule by Newton iteration on `P_n`, carried out in `T`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let tol = T::epsilon() * lit(4.0);
        for i in 0..n.div_ceil(2) {
            let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut x: T = lit(guess);
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x = x - dx;
                if dx.abs() <= tol {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = lit::<T>(2.0) / ((T::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Single-panel estimate of `∫_a^b f`.
    pub fn panel<F: Fn(T) -> T>(&self, f: &F, a: T, b: T) -> T {
        let half = (b - a) * lit(0.5);
        let mid = (a + b) * lit(0.5);
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + *w * f(mid + half * *x);
        }
        acc * half
    }
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf: T = lit(k as f64);
        let p2 = ((lit::<T>(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    let nf: T = lit(n as f64);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Composite rule: every interval between consecutive breakpoints is split
/// into `initial_panels · 2^level` equal panels, with `level` raised until
/// the estimate settles.
#[derive(Debug, Clone)]
pub struct CompositeGaussLegendre<T> {
    rule: GaussLegendre<T>,
    pub rel_tol: T,
    /// Changes at or below this absolute size also count as converged.
    pub abs_tol: T,
    pub initial_panels: usize,
    pub max_doublings: u32,
}

impl<T: Real> Default for CompositeGaussLegendre<T> {
    fn default() -> Self {
        Self::new(16, lit(1e-10))
    }
}

impl<T: Real> CompositeGaussLegendre<T> {
    pub fn new(order: usize, rel_tol: T) -> Self {
        Self {
            rule: GaussLegendre::new(order),
            rel_tol,
            abs_tol: T::zero(),
            initial_panels: 4,
            max_doublings: 14,
        }
    }

    pub fn with_initial_panels(mut self, panels: usize) -> Self {
        self.initial_panels = panels.max(1);
        self
    }

    pub fn rule(&self) -> &GaussLegendre<T> {
        &self.rule
    }

    fn estimate<F: Fn(T) -> T>(&self, f: &F, breakpoints: &[T], per_interval: usize) -> T {
        let count: T = lit(per_interval as f64);
        let mut total = T::zero();
        for pair in breakpoints.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let h = (b - a) / count;
            for k in 0..per_interval {
                let lo = a + h * lit(k as f64);
                let hi = if k + 1 == per_interval {
                    b
                } else {
                    a + h * lit((k + 1) as f64)
                };
                total = total + self.rule.panel(f, lo, hi);
            }
        }
        total
    }

    /// Integrates `f` over `[breakpoints[0], breakpoints[last]]`.
    ///
    /// Breakpoints must be strictly increasing; an empty or single-point list
    /// integrates to zero.
    pub fn integrate<F: Fn(T) -> T>(&self, f: F, breakpoints: &[T]) -> Result<T> {
        if breakpoints.len() < 2 {
            return Ok(T::zero());
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("quadrature breakpoints must be strictly increasing"));
        }
        let mut panels = self.initial_panels.max(1);
        let mut previous = self.estimate(&f, breakpoints, panels);
        let mut last_change = T::infinity();
        for _ in 0..self.max_doublings {
            panels *= 2;
            let current = self.estimate(&f, breakpoints, panels);
            if !current.is_finite() {
                break;
            }
            let change = (current - previous).abs();
            if change <= (self.rel_tol * current.abs()).max(self.abs_tol) {
                return Ok(current);
            }
            last_change = change / current.abs();
            previous = current;
        }
        Err(Error::Quadrature {
            tolerance: to_f64(self.rel_tol),
            panels: panels * (breakpoints.len() - 1),
            last_change: to_f64(last_change),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::<f64>::new(5);
        let wsum: f64 = rule.weights().iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
        // degree 9 = 2n - 1 is exact
        let v = rule.panel(&|x: f64| x.powi(9) + x.powi(8), -1.0, 1.0);
        assert!((v - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        for n in [1, 2, 7, 16, 24] {
            let rule = GaussLegendre::<f64>::new(n);
            for w in rule.nodes().windows(2) {
                assert!(w[0] < w[1]);
            }
            for (a, b) in rule.nodes().iter().zip(rule.nodes().iter().rev()) {
                assert!((a + b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn composite_handles_oscillatory_gaussian() {
        // ∫ e^{-x²/2} cos(ax) dx = √(2π) e^{-a²/2}
        let q = CompositeGaussLegendre::<f64>::default();
        for (a, tol) in [(3.0, 1e-13), (5.0, 1e-9)] {
            let v = q
                .integrate(|x| (-x * x / 2.0).exp() * (a * x).cos(), &[-12.0, 12.0])
                .unwrap();
            let exact = (2.0 * std::f64::consts::PI).sqrt() * (-a * a / 2.0).exp();
            assert!((v - exact).abs() < tol * exact, "{v} vs {exact}");
        }
    }

    #[test]
    fn rejects_unsorted_breakpoints() {
        let q = CompositeGaussLegendre::<f64>::default();
        assert!(q.integrate(|x| x, &[1.0, 0.0]).is_err());
        assert_eq!(q.integrate(|x| x, &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn reports_failure_when_budget_exhausted() {
        let mut q = CompositeGaussLegendre::<f64>::new(2, 1e-14);
        q.max_doublings = 1;
        q.initial_panels = 1;
        let err = q.integrate(|x| (50.0 * x).sin().abs(), &[0.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }
}
