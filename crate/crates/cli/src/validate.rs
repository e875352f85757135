//! Oracle cross-checks. Reference values were computed independently at
//! 50 significant digits.

use gravsync_core::interferometer::{coincidence_rate_gaussian, CoincidenceEngine, DispersionModel};
use gravsync_core::io::ScenarioDocument;
use gravsync_core::montecarlo::{analytic_scan, fit_dip, simulate_scan, CountingConfig, FitOptions};
use gravsync_core::protocol::{delta_p, mirror_velocity_sensitivity, run_scenario, DeltaPMode, Scenario};
use gravsync_core::spacetime::{SpacetimeConfig, GEO_RADIUS_M, LEO_RADIUS_M};
use gravsync_core::wavepacket::{distort, overlap_gaussian, overlap_numeric, SpectralAmplitude};
use gravsync_core::{Direction, Real};

use crate::Failure;

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn golden() -> Vec<Check> {
    let leo = delta_p(4.17e-11, 812e12, 1e8, DeltaPMode::Approx).unwrap_or(f64::NAN);
    let geo = delta_p(6e-10, 812e12, 1e8, DeltaPMode::Approx).unwrap_or(f64::NAN);
    let raw = |r| {
        SpacetimeConfig::earth(r)
            .and_then(|s| s.theta())
            .and_then(|t| delta_p(t, 812e12, 1e8, DeltaPMode::Approx))
            .unwrap_or(f64::NAN)
    };
    let (leo_raw, geo_raw) = (raw(LEO_RADIUS_M), raw(GEO_RADIUS_M));
    vec![
        Check {
            name: "LEO delta_p",
            passed: rel(leo, 5.73993e-8) < 1e-2 && rel(leo_raw, 5.73993e-8) < 1.5e-2 && rel(leo_raw, 5.739925123e-8) < 1e-9,
            detail: format!("{leo:.6e} (rounded theta), {leo_raw:.6e} (radii)"),
        },
        Check {
            name: "GEO delta_p",
            passed: rel(geo, 1.18729e-5) < 5e-3 && rel(geo_raw, 1.18729e-5) < 1e-2 && rel(geo_raw, 1.187291943e-5) < 1e-9,
            detail: format!("{geo:.6e} (rounded delta), {geo_raw:.6e} (radii)"),
        },
    ]
}

fn leo() -> Result<Scenario<f64>, Failure> {
    Ok(ScenarioDocument::preset("leo")?.build::<f64>()?)
}

fn closed_vs_quadrature() -> Result<Check, Failure> {
    let s = leo()?;
    let rep = s.report()?;
    let p = &s.protocol;
    let sigma = 1e8;
    let engine = CoincidenceEngine::new(&s.source, rep.overlap1, rep.overlap2, p, &s.dispersion)?;
    let mut worst = 0.0f64;
    for &dl in &p.scan {
        let q = engine.rate(dl)?;
        let c = coincidence_rate_gaussian(rep.overlap1, rep.overlap2, sigma, dl, p.mirror_speed_mps, p.dtau_s())?;
        if c != q {
            worst = worst.max(((q - c) / c).abs());
        }
    }
    Ok(Check {
        name: "closed form vs quadrature (201 points)",
        passed: worst < 1e-9,
        detail: format!("max relative error {worst:.2e}"),
    })
}

/// Point `k` of the 3-d Halton sequence.
fn halton(k: usize) -> [f64; 3] {
    let radical = |mut i: usize, b: usize| {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= b as f64;
            r += f * (i % b) as f64;
            i /= b;
        }
        r
    };
    [radical(k, 2), radical(k, 3), radical(k, 5)]
}

fn overlap_oracle() -> Result<Check, Failure> {
    let mut worst = 0.0f64;
    for k in 1..=20 {
        let [a, b, c] = halton(k);
        let r_b = 6.5e6 + a * 4e7;
        let w0 = 3e14 + b * 1.2e15;
        let sigma = 5e7 + c * 9.5e8;
        let st = SpacetimeConfig::earth(r_b)?;
        let th = st.theta()?;
        let g = SpectralAmplitude::gaussian(w0, sigma)?;
        for leg in [Direction::Up, Direction::Down] {
            let num = overlap_numeric(&distort(&g, &st, leg)?, &g)?;
            let closed = overlap_gaussian(th, w0, sigma, leg)?;
            worst = worst.max((num - closed).abs());
        }
    }
    Ok(Check {
        name: "Gaussian overlap vs numeric (20 sets)",
        passed: worst < 1e-12,
        detail: format!("max absolute error {worst:.2e}"),
    })
}

fn dispersion() -> Result<Check, Failure> {
    let s = leo()?;
    let model = DispersionModel::matched(vec![0.0, 0.0, 3e-18, 0.0, 1e-35], vec![0.0, 0.0, -5e-18, 0.0, 2e-35])?;
    let w0 = 812e12;
    let mut worst_dk = 0.0f64;
    for k in 0..1001 {
        let x = -1e9 + 2e9 * k as f64 / 1000.0;
        worst_dk = worst_dk.max(model.delta_kappa_at_detuning(x, w0, 0.0).abs());
    }
    let rep = s.report()?;
    let plain = DispersionModel::none();
    let a = CoincidenceEngine::new(&s.source, rep.overlap1, rep.overlap2, &s.protocol, &plain)?
        .with_chi_minus_one(0.0)
        .scan(&s.protocol.scan)?;
    let b = CoincidenceEngine::new(&s.source, rep.overlap1, rep.overlap2, &s.protocol, &model)?
        .with_chi_minus_one(0.0)
        .scan(&s.protocol.scan)?;
    let worst = a
        .points
        .iter()
        .zip(&b.points)
        .filter(|(x, y)| x.p_c != y.p_c)
        .map(|(x, y)| ((y.p_c - x.p_c) / x.p_c).abs())
        .fold(0.0, f64::max);
    Ok(Check {
        name: "matched even dispersion cancels at chi = 1",
        passed: worst_dk == 0.0 && worst < 1e-9,
        detail: format!("max |dk| {worst_dk:.1e} rad, max scan deviation {worst:.1e}"),
    })
}

fn inversion<T: Real>() -> Result<Check, Failure> {
    let s = ScenarioDocument::preset("leo")?.build::<T>()?;
    let scan = analytic_scan(&s, &CountingConfig::default())?;
    let est = fit_dip(&scan, T::from_f64(1e8).unwrap(), s.protocol.mirror_speed_mps, s.protocol.beta(), &FitOptions::default())?;
    let dtau = s.protocol.dtau_s();
    let err = ((est.dtau_hat_s - dtau) / dtau).abs().to_f64().unwrap_or(f64::NAN);
    Ok(Check {
        name: "noise-free dip inversion",
        passed: est.converged && err < 1e-9,
        detail: format!("relative error {err:.2e}"),
    })
}

fn velocity() -> Result<Check, Failure> {
    let r = mirror_velocity_sensitivity(&leo()?, 1e-3)?;
    let err = r.dtau_relative_error;
    Ok(Check {
        name: "1% mirror-speed error",
        passed: (err - 1e-2).abs() <= 1e-4 && (err - r.dtau_relative_error_first_order).abs() <= 1e-4,
        detail: format!("relative dtau error {err:.8e}, first order {:.1e}", r.dtau_relative_error_first_order),
    })
}

fn monotonic() -> Result<Check, Failure> {
    let w0 = 812e12;
    let s0 = 1e8;
    let th = |r: f64| SpacetimeConfig::earth(r).and_then(|s| s.theta());
    let mut ok = true;
    for k in 0..10 {
        let r = 6.5e6 + 4e6 * k as f64;
        ok &= delta_p(th(r + 1e3)?, w0, s0, DeltaPMode::Exact)? > delta_p(th(r)?, w0, s0, DeltaPMode::Exact)?;
        let t = th(LEO_RADIUS_M)?;
        let w = 5e14 + 5e13 * k as f64;
        ok &= delta_p(t, w * 1.001, s0, DeltaPMode::Exact)? > delta_p(t, w, s0, DeltaPMode::Exact)?;
        let s = 5e7 + 5e7 * k as f64;
        ok &= delta_p(t, w0, s * 1.001, DeltaPMode::Exact)? < delta_p(t, w0, s, DeltaPMode::Exact)?;
    }
    Ok(Check {
        name: "delta_p monotone in r_B, omega0, sigma",
        passed: ok,
        detail: "10 points each".into(),
    })
}

fn calibration() -> Result<Check, Failure> {
    let s = leo()?;
    let dtau = s.protocol.dtau_s();
    let mut hits = 0;
    for seed in 0..100 {
        let cc = CountingConfig {
            seed,
            ..CountingConfig::default()
        };
        let est = fit_dip(&simulate_scan(&s, &cc)?, 1e8, 0.1, s.protocol.beta(), &FitOptions::default())?;
        if (est.dtau_hat_s - dtau).abs() < 3.0 * est.dtau_stderr_s {
            hits += 1;
        }
    }
    Ok(Check {
        name: "Monte Carlo 3-sigma coverage (100 seeds)",
        passed: hits >= 99,
        detail: format!("{hits}/100 within 3 stderr"),
    })
}

pub fn run(full: bool) -> Result<(), Failure> {
    let mut checks = golden();
    checks.push(closed_vs_quadrature()?);
    checks.push(overlap_oracle()?);
    checks.push(dispersion()?);
    #[cfg(feature = "quad")]
    checks.push(inversion::<gravsync_core::Quad>()?);
    #[cfg(not(feature = "quad"))]
    checks.push(inversion::<f64>()?);
    checks.push(velocity()?);
    checks.push(monotonic()?);
    if full {
        checks.push(calibration()?);
    }
    let flat = run_scenario(&ScenarioDocument::preset("flat")?.build::<f64>()?)?.0;
    checks.push(Check {
        name: "flat spacetime has no disturbance",
        passed: flat.delta_p == 0.0,
        detail: format!("delta_p {}", flat.delta_p),
    });

    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        println!("{} {:<44} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if failed > 0 {
        return Err(Failure {
            code: 1,
            message: format!("{failed} of {} checks failed", checks.len()),
        });
    }
    Ok(())
}
