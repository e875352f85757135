//! Acceptance suite. Each test prints one `PASS`/`FAIL` line before
//! asserting, so `cargo test --test acceptance -- --nocapture` gives a
//! compact report.

use std::time::Instant;

use gravsync_core::interferometer::{coincidence_rate_gaussian, coincidence_rate_quadrature, CoincidenceEngine, DispersionModel};
use gravsync_core::io::ScenarioDocument;
use gravsync_core::montecarlo::{analytic_scan, fit_dip, simulate_scan, CountingConfig, FitOptions};
use gravsync_core::protocol::{delta_p, mirror_velocity_sensitivity, DeltaPMode, Scenario};
use gravsync_core::spacetime::{SpacetimeConfig, GEO_RADIUS_M, LEO_RADIUS_M};
use gravsync_core::wavepacket::{distort, overlap_gaussian, overlap_numeric, regime_ok, SpectralAmplitude};
use gravsync_core::Direction;
use rand::{Rng, SeedableRng};

const OMEGA0: f64 = 812e12;
const SIGMA: f64 = 1e8;

fn verdict(name: &str, ok: bool, detail: String) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn raw(r_b: f64) -> f64 {
    let th = SpacetimeConfig::new(9e-3, 6.371e6, r_b).unwrap().theta().unwrap();
    delta_p(th, OMEGA0, SIGMA, DeltaPMode::Approx).unwrap()
}

fn leo() -> Scenario<f64> {
    ScenarioDocument::preset("leo").unwrap().build().unwrap()
}

#[test]
fn golden_leo() {
    let rounded = delta_p(4.17e-11, OMEGA0, SIGMA, DeltaPMode::Approx).unwrap();
    let radii = raw(LEO_RADIUS_M);
    let (e1, e2) = (rel(rounded, 5.73993e-8), rel(radii, 5.73993e-8));
    verdict(
        "golden LEO delta_p",
        e1 < 1e-2 && e2 < 1.5e-2,
        format!("{rounded:.6e} (err {e1:.2e} < 1e-2), radii {radii:.6e} (err {e2:.2e} < 1.5e-2)"),
    );
}

#[test]
fn golden_geo() {
    let rounded = delta_p(6e-10, OMEGA0, SIGMA, DeltaPMode::Approx).unwrap();
    let radii = raw(GEO_RADIUS_M);
    let (e1, e2) = (rel(rounded, 1.18729e-5), rel(radii, 1.18729e-5));
    verdict(
        "golden GEO delta_p",
        e1 < 5e-3 && e2 < 1e-2,
        format!("{rounded:.6e} (err {e1:.2e} < 5e-3), radii {radii:.6e} (err {e2:.2e} < 1e-2)"),
    );
}

#[test]
fn closed_form_matches_quadrature() {
    let s = leo();
    let rep = s.report().unwrap();
    let p = &s.protocol;
    let start = Instant::now();
    let mut worst = 0.0f64;
    assert_eq!(p.scan.len(), 201);
    for &dl in &p.scan {
        let q = coincidence_rate_quadrature(&s.source, rep.overlap1, rep.overlap2, p, dl, &s.dispersion).unwrap();
        let c = coincidence_rate_gaussian(rep.overlap1, rep.overlap2, SIGMA, dl, p.mirror_speed_mps, p.dtau_s()).unwrap();
        worst = worst.max(((q - c) / c).abs());
    }
    let t = start.elapsed().as_secs_f64();
    verdict(
        "closed form vs quadrature",
        worst < 1e-9 && t < 1.0,
        format!("201 points, max rel err {worst:.2e} < 1e-9, {t:.3} s"),
    );
}

#[test]
fn overlap_oracle() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut sets = 0;
    while sets < 20 {
        let r_b = rng.gen_range(6.5e6..5e7);
        let w0 = rng.gen_range(3e14..1.5e15);
        let sigma = rng.gen_range(5e7..1e9);
        let st = SpacetimeConfig::earth(r_b).unwrap();
        let th = st.theta().unwrap();
        if !regime_ok(th, w0, sigma) {
            continue;
        }
        sets += 1;
        let g = SpectralAmplitude::gaussian(w0, sigma).unwrap();
        for leg in [Direction::Up, Direction::Down] {
            let num: f64 = overlap_numeric(&distort(&g, &st, leg).unwrap(), &g).unwrap();
            let closed = overlap_gaussian(th, w0, sigma, leg).unwrap();
            worst = worst.max((num - closed).abs());
        }
    }
    let t = start.elapsed().as_secs_f64();
    verdict(
        "Gaussian overlap oracle",
        worst < 1e-12 && t < 1.0,
        format!("20 sets, both legs, max abs err {worst:.2e} < 1e-12, {t:.3} s"),
    );
}

#[test]
fn matched_even_dispersion_cancels() {
    let model = DispersionModel::matched(vec![0.0, 0.0, 3e-18, 0.0, 1e-35], vec![0.0, 0.0, -5e-18, 0.0, 2e-35]).unwrap();
    let mut worst_dk = 0.0f64;
    for k in 0..1001 {
        let w: f64 = OMEGA0 - 1e9 + 2e9 * k as f64 / 1000.0;
        worst_dk = worst_dk.max(model.delta_kappa(w, OMEGA0, 1.0).abs());
    }
    let s = leo();
    let rep = s.report().unwrap();
    let scan = |m: &DispersionModel<f64>| {
        CoincidenceEngine::new(&s.source, rep.overlap1, rep.overlap2, &s.protocol, m)
            .unwrap()
            .with_chi_minus_one(0.0)
            .scan(&s.protocol.scan)
            .unwrap()
    };
    let (plain, dispersive) = (scan(&DispersionModel::none()), scan(&model));
    let worst = plain
        .points
        .iter()
        .zip(&dispersive.points)
        .map(|(a, b)| ((b.p_c - a.p_c) / a.p_c).abs())
        .fold(0.0, f64::max);
    verdict(
        "matched even dispersion at chi = 1",
        worst_dk <= f64::EPSILON && worst < 1e-9,
        format!("1001-point grid max |dk| {worst_dk:.1e}, scan max rel dev {worst:.1e} < 1e-9"),
    );
}

#[cfg(feature = "quad")]
#[test]
fn analytic_inversion() {
    use gravsync_core::scalar::{lit, to_f64};
    use gravsync_core::Quad;
    let s: Scenario<Quad> = ScenarioDocument::preset("leo").unwrap().build().unwrap();
    let scan = analytic_scan(&s, &CountingConfig::default()).unwrap();
    let est = fit_dip(&scan, lit(SIGMA), s.protocol.mirror_speed_mps, s.protocol.beta(), &FitOptions::default()).unwrap();
    let dtau = s.protocol.dtau_s();
    let err = (to_f64(est.dtau_hat_s - dtau) / to_f64(dtau)).abs();
    verdict(
        "analytic dip inversion",
        est.converged && err < 1e-9,
        format!("dtau = 1 ns recovered to rel {err:.2e} < 1e-9 (quad precision)"),
    );
}

#[cfg(not(feature = "quad"))]
#[test]
fn analytic_inversion() {
    let s = leo();
    let scan = analytic_scan(&s, &CountingConfig::default()).unwrap();
    let est = fit_dip(&scan, SIGMA, s.protocol.mirror_speed_mps, s.protocol.beta(), &FitOptions::default()).unwrap();
    let err = rel(est.dtau_hat_s, s.protocol.dtau_s());
    verdict(
        "analytic dip inversion",
        est.converged && err < 1e-9,
        format!("dtau = 1 ns recovered to rel {err:.2e} < 1e-9 (double precision)"),
    );
}

#[test]
fn stochastic_coverage() {
    let s = leo();
    let dtau = s.protocol.dtau_s();
    assert_eq!(s.protocol.scan.len(), 201);
    let start = Instant::now();
    let mut hits = 0;
    for seed in 0..100 {
        let cc = CountingConfig {
            pairs_per_point: 100_000,
            seed,
            ..CountingConfig::default()
        };
        let est = fit_dip(&simulate_scan(&s, &cc).unwrap(), SIGMA, s.protocol.mirror_speed_mps, s.protocol.beta(), &FitOptions::default()).unwrap();
        if (est.dtau_hat_s - dtau).abs() < 3.0 * est.dtau_stderr_s {
            hits += 1;
        }
    }
    let t = start.elapsed().as_secs_f64();
    verdict(
        "stochastic estimator coverage",
        hits >= 99 && t < 60.0,
        format!("{hits}/100 seeds within 3 stderr (need 99), {t:.2} s"),
    );
}

#[test]
fn mirror_velocity_error() {
    let s = leo();
    assert_eq!(s.protocol.mirror_speed_mps, 0.1);
    let r = mirror_velocity_sensitivity(&s, 1e-3).unwrap();
    let exact = r.dtau_relative_error;
    let first = r.dtau_relative_error_first_order;
    verdict(
        "1% mirror velocity error",
        (exact - 1e-2).abs() <= 1e-4 && (first - 1e-2).abs() <= 1e-4,
        format!("exact bias {exact:.6e}, first order {first:.6e}, target 1e-2 +/- 1e-4"),
    );
}

#[test]
fn monotonicity() {
    let dp = |th: f64, w: f64, s: f64| delta_p(th, w, s, DeltaPMode::Exact).unwrap();
    let th = |r: f64| SpacetimeConfig::earth(r).unwrap().theta().unwrap();
    let t_leo = th(LEO_RADIUS_M);
    let (mut r_ok, mut w_ok, mut s_ok) = (0, 0, 0);
    for k in 0..10 {
        let r = 6.5e6 + 4e6 * k as f64;
        r_ok += (dp(th(r + 1e3), OMEGA0, SIGMA) > dp(th(r), OMEGA0, SIGMA)) as usize;
        let w = 5e14 + 5e13 * k as f64;
        w_ok += (dp(t_leo, w * 1.001, SIGMA) > dp(t_leo, w, SIGMA)) as usize;
        let s = 5e7 + 5e7 * k as f64;
        s_ok += (dp(t_leo, OMEGA0, s * 1.001) < dp(t_leo, OMEGA0, s)) as usize;
    }
    verdict(
        "delta_p monotonicity",
        r_ok == 10 && w_ok == 10 && s_ok == 10,
        format!("increasing in r_B {r_ok}/10, increasing in omega0 {w_ok}/10, decreasing in sigma {s_ok}/10"),
    );
}
