//! Repeated-experiment studies built on the simulator and the fit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_dip, sample_counts, CoincidenceScan, CountingConfig, FitOptions};
use crate::error::{Error, Result};
use crate::protocol::{run_scenario, spectral_moments, Scenario};
use crate::scalar::{lit, speed_of_light, to_f64, Real};

/// Fewest repetitions accepted by [`precision_curve`].
pub const MIN_REPEATS: usize = 10;

/// Doublings of the pair count covered by [`precision_curve`].
const CURVE_STEPS: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPoint {
    pub pairs_per_point: u64,
    pub mean_dtau_hat_s: f64,
    /// Sample standard deviation of `Δτ̂` over the repeats.
    pub std_dtau_hat_s: f64,
    /// Mean of the per-fit standard errors.
    pub mean_stderr_s: f64,
}

/// Seed for repeat `k`; SplitMix64 keeps neighbouring seeds unrelated.
fn repeat_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Empirical spread of `Δτ̂` at `N, 2N, 4N, 8N, 16N` pairs per point.
pub fn precision_curve(s: &Scenario<f64>, cc: &CountingConfig, n_repeats: usize) -> Result<Vec<PrecisionPoint>> {
    if n_repeats < MIN_REPEATS {
        return Err(Error::config(format!(
            "precision curve needs at least {MIN_REPEATS} repeats, got {n_repeats}"
        )));
    }
    cc.validate()?;
    let (_, rates) = run_scenario(s)?;
    let (_, sigma) = spectral_moments(&s.source)?;
    let v = s.protocol.mirror_speed_mps;
    let beta = s.protocol.beta();
    let opts = FitOptions::default();

    (0..CURVE_STEPS)
        .map(|step| {
            let n = cc
                .pairs_per_point
                .checked_mul(1 << step)
                .ok_or_else(|| Error::config("pair count overflows"))?;
            let fits = (0..n_repeats as u64)
                .into_par_iter()
                .map(|k| {
                    let c = CountingConfig {
                        pairs_per_point: n,
                        seed: repeat_seed(cc.seed, k),
                        ..*cc
                    };
                    fit_dip(&sample_counts(&rates, &c)?, sigma, v, beta, &opts)
                })
                .collect::<Result<Vec<_>>>()?;
            let m = fits.len() as f64;
            let mean = fits.iter().map(|f| f.dtau_hat_s).sum::<f64>() / m;
            let var = fits.iter().map(|f| (f.dtau_hat_s - mean).powi(2)).sum::<f64>() / (m - 1.0);
            Ok(PrecisionPoint {
                pairs_per_point: n,
                mean_dtau_hat_s: mean,
                std_dtau_hat_s: var.sqrt(),
                mean_stderr_s: fits.iter().map(|f| f.dtau_stderr_s).sum::<f64>() / m,
            })
        })
        .collect()
}

/// Least-squares slope of `ln std` against `ln N`.
pub fn log_log_slope(curve: &[PrecisionPoint]) -> Option<f64> {
    if curve.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .map(|p| ((p.pairs_per_point as f64).ln(), p.std_dtau_hat_s.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    slope.is_finite().then_some(slope)
}

/// Where the dip sits, so the plateau can be told apart from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauWindow<T> {
    pub center_m: T,
    pub sigma_hz: T,
}

impl<T: Real> PlateauWindow<T> {
    /// Plateau points lie more than this many `c/σ` from the centre.
    pub const HALF_WIDTH_UNITS: f64 = 4.0;

    pub fn contains(&self, delta_l_m: T) -> bool {
        let w = lit::<T>(Self::HALF_WIDTH_UNITS) * speed_of_light::<T>() / self.sigma_hz;
        (delta_l_m - self.center_m).abs() > w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureDetection {
    /// `1 - plateau_curved/plateau_flat`.
    pub delta_p_hat: f64,
    pub stderr: f64,
    pub z_score: f64,
    pub plateau_flat: f64,
    pub plateau_curved: f64,
    pub trials_flat: f64,
    pub trials_curved: f64,
}

fn plateau<T: Real>(scan: &CoincidenceScan<T>, window: &PlateauWindow<T>, which: &str) -> Result<(f64, f64)> {
    let (mut k, mut n) = (0.0, 0.0);
    for p in scan.points.iter().filter(|p| window.contains(p.delta_l_m)) {
        k += to_f64(p.observation.counts());
        n += p.observation.trials() as f64;
    }
    if !(n > 0.0) {
        return Err(Error::InsufficientPlateau(format!(
            "{which} scan has no points beyond {}c/σ of the dip",
            PlateauWindow::<T>::HALF_WIDTH_UNITS
        )));
    }
    if !(k > 0.0) {
        return Err(Error::InsufficientPlateau(format!("{which} plateau has zero counts")));
    }
    Ok((k / n, n))
}

/// Compares the pooled plateau levels of a flat-spacetime and a curved
/// scan. The z-score uses the binomial variance of both pooled rates.
pub fn detect_curvature<T: Real>(
    flat: &CoincidenceScan<T>,
    curved: &CoincidenceScan<T>,
    window: &PlateauWindow<T>,
) -> Result<CurvatureDetection> {
    let (pf, nf) = plateau(flat, window, "flat")?;
    let (pc, nc) = plateau(curved, window, "curved")?;
    let ratio = pc / pf;
    let rel_var = (1.0 - pc) / (pc * nc) + (1.0 - pf) / (pf * nf);
    let stderr = ratio * rel_var.max(0.0).sqrt();
    let delta_p_hat = 1.0 - ratio;
    let z_score = if stderr > 0.0 { delta_p_hat / stderr } else { 0.0 };
    Ok(CurvatureDetection {
        delta_p_hat,
        stderr,
        z_score,
        plateau_flat: pf,
        plateau_curved: pc,
        trials_flat: nf,
        trials_curved: nc,
    })
}

/// Plateau trials per scan needed to see `delta_p` at `z` standard errors,
/// for a plateau detection probability `p`: `N ≈ 2z²(1-p)/(p·Δp²)`.
pub fn pairs_for_detection(delta_p: f64, p: f64, z: f64) -> f64 {
    2.0 * z * z * (1.0 - p) / (p * delta_p * delta_p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::{DispersionModel, ProtocolConfig};
    use crate::montecarlo::{analytic_scan, simulate_scan};
    use crate::spacetime::{SpacetimeConfig, EARTH_RADIUS_M, GEO_RADIUS_M, LEO_RADIUS_M};
    use crate::wavepacket::PhotonPairState;

    const C: f64 = 299_792_458.0;

    fn scenario(r_b: f64) -> Scenario<f64> {
        let (v, dtau, sigma) = (0.1, 1e-9, 1e8);
        let center = crate::interferometer::dip_center_m(v, dtau);
        Scenario::new(
            SpacetimeConfig::earth(r_b).unwrap(),
            PhotonPairState::gaussian(812e12, sigma).unwrap(),
            ProtocolConfig {
                mirror_speed_mps: v,
                tau0_a_s: 0.0,
                tau0_b_s: dtau,
                x0_m: 0.0,
                link_distance_m: r_b - EARTH_RADIUS_M,
                bs_distance_m: r_b - EARTH_RADIUS_M,
                scan: ProtocolConfig::centered_scan(center, 5.0 * C / sigma, 201),
            },
            DispersionModel::none(),
            "t",
        )
        .unwrap()
    }

    fn window(s: &Scenario<f64>) -> PlateauWindow<f64> {
        PlateauWindow {
            center_m: s.protocol.dip_center_m(),
            sigma_hz: 1e8,
        }
    }

    #[test]
    fn shot_noise_scaling() {
        let s = scenario(LEO_RADIUS_M);
        let cc = CountingConfig {
            pairs_per_point: 10_000,
            seed: 11,
            ..Default::default()
        };
        let curve = precision_curve(&s, &cc, 100).unwrap();
        assert_eq!(curve.len(), 5);
        assert_eq!(curve[4].pairs_per_point, 160_000);
        let slope = log_log_slope(&curve).unwrap();
        assert!((-0.6..=-0.4).contains(&slope), "{slope}");
        for w in curve.windows(2) {
            let r = w[1].mean_stderr_s / w[0].mean_stderr_s;
            assert!((0.6..=0.8).contains(&r), "{r}");
        }
        assert!(precision_curve(&s, &cc, 1).is_err());
    }

    #[test]
    fn leo_and_flat_fisher_errors_agree() {
        let cc = CountingConfig::default();
        let fit = |s: &Scenario<f64>| {
            let scan = analytic_scan(s, &cc).unwrap();
            fit_dip(&scan, 1e8, 0.1, s.protocol.beta(), &FitOptions::default()).unwrap()
        };
        let flat = fit(&scenario(EARTH_RADIUS_M));
        let leo = fit(&scenario(LEO_RADIUS_M));
        // Binomial weights see (1-p), which moves by more than the plateau
        // factor near the shoulders; the change stays a few Δp.
        let dp = scenario(LEO_RADIUS_M).report().unwrap().delta_p;
        let rel = (leo.dtau_stderr_s - flat.dtau_stderr_s).abs() / flat.dtau_stderr_s;
        assert!(rel < 10.0 * dp, "{rel}");
        assert!((leo.dtau_hat_s - flat.dtau_hat_s).abs() < 1e-9 * flat.dtau_stderr_s);
    }

    #[test]
    fn identical_scans_detect_nothing() {
        let s = scenario(LEO_RADIUS_M);
        let scan = simulate_scan(
            &s,
            &CountingConfig {
                seed: 5,
                ..Default::default()
            },
        )
        .unwrap();
        let d = detect_curvature(&scan, &scan, &window(&s)).unwrap();
        assert_eq!(d.delta_p_hat, 0.0);
        assert!(d.z_score.abs() < 3.0);
    }

    #[test]
    fn geo_plateau_shift_in_analytic_limit() {
        let cc = CountingConfig {
            pairs_per_point: 25_000_000_000,
            ..Default::default()
        };
        let flat = scenario(EARTH_RADIUS_M);
        let geo = scenario(GEO_RADIUS_M);
        let fs = analytic_scan(&flat, &cc).unwrap();
        let gs = analytic_scan(&geo, &cc).unwrap();
        let d = detect_curvature(&fs, &gs, &window(&geo)).unwrap();
        assert!(d.trials_curved >= 1e12);
        let truth = geo.report().unwrap().delta_p;
        assert!(((d.delta_p_hat - truth) / truth).abs() < 0.1);
        assert!(d.z_score > 5.0);
    }

    #[test]
    fn leo_undetectable_at_small_n() {
        let cc = CountingConfig {
            pairs_per_point: 1_000_000,
            efficiency: 0.5,
            seed: 99,
            ..Default::default()
        };
        let flat = simulate_scan(&scenario(EARTH_RADIUS_M), &cc).unwrap();
        let leo_s = scenario(LEO_RADIUS_M);
        let leo = simulate_scan(&leo_s, &CountingConfig { seed: 100, ..cc }).unwrap();
        let d = detect_curvature(&flat, &leo, &window(&leo_s)).unwrap();
        assert!(d.z_score.abs() < 3.0, "{}", d.z_score);
        assert!(pairs_for_detection(5.74e-8, 0.5, 3.0) > 1e15);
    }

    #[test]
    fn missing_plateau_is_reported() {
        let mut s = scenario(LEO_RADIUS_M);
        let c0 = s.protocol.dip_center_m();
        s.protocol.scan = ProtocolConfig::centered_scan(c0, 2.0 * C / 1e8, 21);
        let scan = analytic_scan(&s, &CountingConfig::default()).unwrap();
        assert!(matches!(
            detect_curvature(&scan, &scan, &window(&s)),
            Err(Error::InsufficientPlateau(_))
        ));
    }
}
