//! Weighted least-squares fit of `A·[1 - exp(-2σ²(δl-μ)²/c²)] + B`.

use serde::{Deserialize, Serialize};

use super::CoincidenceScan;
use crate::error::{Error, Result};
use crate::scalar::{lit, speed_of_light, to_f64, Real};

/// Fewest usable scan points the fit accepts.
pub const MIN_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitOptions {
    /// Also fit the source width (robustness studies).
    pub fit_sigma: bool,
    pub max_iter: usize,
    /// Stop once every parameter moves by less than this fraction.
    pub rel_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            fit_sigma: false,
            max_iter: 200,
            rel_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult<T> {
    pub dip_center_m: T,
    pub dtau_hat_s: T,
    pub dtau_stderr_s: T,
    /// Weighted χ² per degree of freedom.
    pub fit_residual: T,
    pub converged: bool,
    pub amplitude: T,
    pub offset: T,
    pub sigma_hz: T,
    pub iterations: usize,
}

impl<T: Real> EstimateResult<T> {
    pub fn to_f64(&self) -> EstimateResult<f64> {
        EstimateResult {
            dip_center_m: to_f64(self.dip_center_m),
            dtau_hat_s: to_f64(self.dtau_hat_s),
            dtau_stderr_s: to_f64(self.dtau_stderr_s),
            fit_residual: to_f64(self.fit_residual),
            converged: self.converged,
            amplitude: to_f64(self.amplitude),
            offset: to_f64(self.offset),
            sigma_hz: to_f64(self.sigma_hz),
            iterations: self.iterations,
        }
    }
}

struct Data<T> {
    x: Vec<T>,
    y: Vec<T>,
    w: Vec<T>,
}

/// Parameters in order `(A, μ, B, σ)`; `σ` only varies with `fit_sigma`.
#[derive(Clone, Copy)]
struct Model<T> {
    p: [T; 4],
    n_free: usize,
}

impl<T: Real> Model<T> {
    /// Value and gradient at delay `x`.
    fn eval(&self, x: T) -> (T, [T; 4]) {
        let [a, mu, b, sigma] = self.p;
        let c = speed_of_light::<T>();
        let d = x - mu;
        let k = lit::<T>(2.0) * sigma * sigma / (c * c);
        let arg = -k * d * d;
        let e = arg.exp();
        let dip = -arg.exp_m1();
        let grad = [
            dip,
            -lit::<T>(2.0) * a * k * d * e,
            T::one(),
            lit::<T>(4.0) * a * sigma * d * d * e / (c * c),
        ];
        (a * dip + b, grad)
    }

    fn chi2(&self, data: &Data<T>) -> T {
        data.x
            .iter()
            .zip(&data.y)
            .zip(&data.w)
            .fold(T::zero(), |acc, ((&x, &y), &w)| {
                let r = y - self.eval(x).0;
                acc + w * r * r
            })
    }

    /// Normal equations `JᵀWJ` and `JᵀWr` over the free parameters.
    fn normal(&self, data: &Data<T>) -> ([[T; 4]; 4], [T; 4]) {
        let n = self.n_free;
        let mut h = [[T::zero(); 4]; 4];
        let mut g = [T::zero(); 4];
        for ((&x, &y), &w) in data.x.iter().zip(&data.y).zip(&data.w) {
            let (m, j) = self.eval(x);
            let r = y - m;
            for i in 0..n {
                g[i] = g[i] + w * j[i] * r;
                for k in 0..=i {
                    h[i][k] = h[i][k] + w * j[i] * j[k];
                }
            }
        }
        for i in 0..n {
            for k in 0..i {
                h[k][i] = h[i][k];
            }
        }
        (h, g)
    }
}

/// Solves the leading `n×n` block by Gaussian elimination with partial
/// pivoting.
fn solve<T: Real>(mut a: [[T; 4]; 4], mut b: [T; 4], n: usize) -> Option<[T; 4]> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if !(a[piv][col].abs() > T::zero()) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] = a[row][k] - f * a[col][k];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [T::zero(); 4];
    for i in (0..n).rev() {
        let s = (i + 1..n).fold(b[i], |s, k| s - a[i][k] * x[k]);
        x[i] = s / a[i][i];
    }
    x.iter().take(n).all(|v| v.is_finite()).then_some(x)
}

fn invert<T: Real>(a: [[T; 4]; 4], n: usize) -> Option<[[T; 4]; 4]> {
    let mut inv = [[T::zero(); 4]; 4];
    for col in 0..n {
        let mut e = [T::zero(); 4];
        e[col] = T::one();
        let x = solve(a, e, n)?;
        for row in 0..n {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

/// Fits the dip and inverts its centre into `Δτ̂ = (1+β)μ/(4v)`.
///
/// `sigma_hz` is the source width (the starting value when it is fitted).
/// Point weights are the inverse binomial variances
/// `trials² / max(counts·(1 - counts/trials), 1)`.
pub fn fit_dip<T: Real>(
    scan: &CoincidenceScan<T>,
    sigma_hz: T,
    v_mps: T,
    beta: T,
    opts: &FitOptions,
) -> Result<EstimateResult<T>> {
    if !(sigma_hz > T::zero()) || !(v_mps > T::zero()) {
        return Err(Error::domain("source width and mirror speed must be positive"));
    }
    let usable: Vec<_> = scan.points.iter().filter(|p| p.observation.trials() > 0).collect();
    if usable.len() < MIN_POINTS {
        return Err(Error::Underdetermined(format!(
            "{} usable points, need at least {MIN_POINTS}",
            usable.len()
        )));
    }
    if usable.iter().all(|p| p.observation.counts() == T::zero()) {
        return Err(Error::Underdetermined("every point has zero counts".into()));
    }
    let min = scan.min_index().expect("usable points exist");
    if min == 0 || min + 1 == scan.len() {
        return Err(Error::EdgeDip {
            index: min,
            len: scan.len(),
        });
    }

    let one = T::one();
    let data = Data {
        x: usable.iter().map(|p| p.delta_l_m).collect(),
        y: usable.iter().map(|p| p.observation.rate()).collect(),
        w: usable
            .iter()
            .map(|p| {
                let n: T = lit(p.observation.trials() as f64);
                let k = p.observation.counts();
                n * n / (k * (one - k / n)).max(one)
            })
            .collect(),
    };
    let a0 = data.y.iter().copied().fold(T::zero(), T::max);
    let mut model = Model {
        p: [a0, scan.points[min].delta_l_m, T::zero(), sigma_hz],
        n_free: if opts.fit_sigma { 4 } else { 3 },
    };
    let n_free = model.n_free;
    if usable.len() <= n_free {
        return Err(Error::Underdetermined(format!(
            "{} points for {n_free} parameters",
            usable.len()
        )));
    }

    // Natural scale of each parameter, used where a value may sit at zero.
    let width = speed_of_light::<T>() / sigma_hz;
    let scales = [a0.max(lit(1e-300)), width, a0.max(lit(1e-300)), sigma_hz];
    let floor = T::epsilon() * lit(16.0);
    let tol: T = lit(opts.rel_tol);
    let small = |step: &[T; 4], p: &[T; 4]| {
        (0..n_free).all(|i| step[i].abs() <= tol * p[i].abs() + floor * scales[i])
    };

    let mut chi2 = model.chi2(&data);
    let mut lambda: T = lit(1e-3);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let (h, g) = model.normal(&data);
        let mut damped = h;
        for i in 0..n_free {
            damped[i][i] = h[i][i] * (one + lambda);
        }
        let Some(step) = solve(damped, g, n_free) else {
            return Err(Error::NoConvergence(format!(
                "singular normal equations at iteration {iterations}"
            )));
        };
        if small(&step, &model.p) {
            converged = true;
            break;
        }
        let mut trial = model;
        for i in 0..n_free {
            trial.p[i] = trial.p[i] + step[i];
        }
        let trial_chi2 = trial.chi2(&data);
        if trial_chi2.is_finite() && trial_chi2 <= chi2 {
            model = trial;
            chi2 = trial_chi2;
            lambda = (lambda / lit(10.0)).max(lit(1e-15));
        } else {
            lambda = lambda * lit(10.0);
            if lambda > lit(1e20) {
                // No descent left at this damping: the minimum is resolved
                // to the available precision.
                converged = true;
                break;
            }
        }
    }

    let (h, _) = model.normal(&data);
    let cov = invert(h, n_free).ok_or_else(|| Error::NoConvergence("singular covariance".into()))?;
    let var_mu = cov[1][1];
    if !(var_mu > T::zero()) || !model.p.iter().all(|v| v.is_finite()) {
        return Err(Error::NoConvergence(format!(
            "non-finite or non-positive variance after {iterations} iterations"
        )));
    }
    let mu = model.p[1];
    let (lo, hi) = data
        .x
        .iter()
        .fold((data.x[0], data.x[0]), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    // A dip outside the scanned range, or one too shallow to tell from the
    // plateau, means the scan missed it.
    if !(mu > lo && mu < hi) || !(model.p[0] > lit::<T>(3.0) * cov[0][0].max(T::zero()).sqrt()) {
        return Err(Error::EdgeDip {
            index: min,
            len: scan.len(),
        });
    }
    let four_v = lit::<T>(4.0) * v_mps;
    let dof: T = lit((data.x.len() - n_free) as f64);
    Ok(EstimateResult {
        dip_center_m: mu,
        dtau_hat_s: (one + beta) * mu / four_v,
        dtau_stderr_s: (one + beta) * var_mu.sqrt() / four_v,
        fit_residual: chi2 / dof,
        converged,
        amplitude: model.p[0],
        offset: model.p[2],
        sigma_hz: model.p[3],
        iterations,
    })
}
