use std::path::Path;

use gravsync_core::io::ScenarioDocument;
use gravsync_core::montecarlo::{analytic_scan, fit_dip, simulate_scan, CountingConfig, EstimateResult, FitOptions};
use gravsync_core::protocol::{
    figure2_sweep, figure3_sweep, mirror_velocity_sensitivity, run_scenario, spectral_moments, Figure2Params,
};
use gravsync_core::spacetime::SpacetimeConfig;
use gravsync_core::{Error, Real};
use serde::Serialize;
use serde_json::json;

use crate::output::Context;
use crate::{CountingArgs, Failure, Figure2Args, Figure3Args, Overrides};

/// Loads a preset or file and applies command-line overrides.
fn load(name_or_path: &str, o: &Overrides) -> Result<ScenarioDocument, Failure> {
    let mut doc = ScenarioDocument::load(name_or_path).map_err(|e| match e {
        Error::Io(io) => Failure::config(format!("{name_or_path}: {io}")),
        other => other.into(),
    })?;
    if let Some(x) = o.rs_m {
        doc.schwarzschild_radius_m = x;
    }
    if let Some(x) = o.ra_m {
        doc.r_a_m = x;
    }
    if let Some(x) = o.rb_m {
        doc.r_b_m = x;
    }
    if o.ra_m.is_some() || o.rb_m.is_some() {
        // Link lengths follow the new geometry.
        doc.link_distance_m = None;
        doc.bs_distance_m = None;
    }
    if let Some(x) = o.omega0_hz {
        doc.omega0_hz = x;
    }
    if let Some(x) = o.sigma_hz {
        doc.sigma_hz = Some(x);
        doc.spectrum_csv = None;
    }
    if let Some(p) = &o.spectrum_csv {
        doc.spectrum_csv = Some(p.clone());
        doc.sigma_hz = None;
    }
    if let Some(x) = o.v_mps {
        doc.mirror_speed_mps = x;
    }
    if let Some(x) = o.dtau_s {
        doc.tau0_b_s = doc.tau0_a_s + x;
    }
    if let Some(x) = o.scan_points {
        doc.scan_points = x;
    }
    if let Some(x) = o.scan_center_m {
        doc.scan_center_m = Some(x);
    }
    if let Some(x) = o.scan_half_width_m {
        doc.scan_half_width_m = Some(x);
    }
    doc.validate().map_err(|e| Failure::config(format!("{name_or_path} with overrides: {e}")))?;
    Ok(doc)
}

/// Short name for output files: the preset name or the file stem.
fn stem(name_or_path: &str) -> String {
    Path::new(name_or_path)
        .file_stem()
        .map_or_else(|| name_or_path.to_string(), |s| s.to_string_lossy().into_owned())
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>, Failure> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| Failure::config(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn print_json<T: Serialize>(v: &T) -> Result<(), Failure> {
    println!("{}", String::from_utf8_lossy(&to_json(v)?).trim_end());
    Ok(())
}

pub fn scenario(ctx: &Context, name: &str, o: &Overrides) -> Result<(), Failure> {
    let doc = load(name, o)?;
    let s = doc.build::<f64>()?;
    let (report, scan) = run_scenario(&s)?;
    let mut csv = Vec::new();
    scan.write_csv(&mut csv)?;
    let base = ctx.base(&format!("scenario-{}", stem(name)));
    let out = json!({ "label": s.label, "report": report });
    ctx.emit(
        &base,
        &json!({ "command": "scenario", "scenario": doc }),
        None,
        &[(format!("{base}.csv"), csv), (format!("{base}.json"), to_json(&out)?)],
    )?;
    print_json(&out)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                if k + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

fn check_range(name: &str, lo: f64, hi: f64, n: usize) -> Result<(), Failure> {
    if n == 0 {
        return Err(Failure::config(format!("{name}: empty grid")));
    }
    if !(lo.is_finite() && hi.is_finite()) || (n > 1 && hi <= lo) {
        return Err(Failure::config(format!("{name}: need finite bounds with max > min")));
    }
    Ok(())
}

pub fn figure2(ctx: &Context, a: &Figure2Args) -> Result<(), Failure> {
    let radii = if a.rb_m.is_empty() {
        check_range("r_b", a.rb_min_m, a.rb_max_m, a.points)?;
        linspace(a.rb_min_m, a.rb_max_m, a.points)
    } else {
        a.rb_m.clone()
    };
    let params = Figure2Params {
        schwarzschild_radius_m: a.rs_m,
        r_a_m: a.ra_m,
        omega0_hz: a.omega0_hz,
        sigma_hz: a.sigma_hz,
        mode: a.mode.into(),
    };
    let rows = figure2_sweep(&radii, &params)?;
    let mut csv = String::from("r_b_m,delta_p\n");
    for (r, dp) in &rows {
        csv.push_str(&format!("{r:e},{dp:e}\n"));
    }
    let base = ctx.base("figure2");
    let path = ctx.emit(
        &base,
        &json!({ "command": "figure2", "r_b_m": radii, "params": params }),
        None,
        &[(format!("{base}.csv"), csv.into_bytes())],
    )?;
    eprintln!("{} rows; manifest {}", rows.len(), path.display());
    Ok(())
}

pub fn figure3(ctx: &Context, a: &Figure3Args) -> Result<(), Failure> {
    check_range("omega0", a.omega0_min_hz, a.omega0_max_hz, a.omega0_points)?;
    check_range("sigma", a.sigma_min_hz, a.sigma_max_hz, a.sigma_points)?;
    let omegas = linspace(a.omega0_min_hz, a.omega0_max_hz, a.omega0_points);
    let sigmas = linspace(a.sigma_min_hz, a.sigma_max_hz, a.sigma_points);
    let st = SpacetimeConfig::new(a.rs_m, a.ra_m, a.rb_m)?;
    let grid = figure3_sweep(&omegas, &sigmas, &st, a.mode.into())?;
    let mut csv = String::from("omega0_hz,sigma_hz,delta_p\n");
    for (s, row) in grid.sigma_hz.iter().zip(&grid.delta_p) {
        for (w, dp) in grid.omega0_hz.iter().zip(row) {
            csv.push_str(&format!("{w:e},{s:e},{dp:e}\n"));
        }
    }
    let base = ctx.base("figure3");
    let path = ctx.emit(
        &base,
        &json!({
            "command": "figure3",
            "omega0_hz": omegas,
            "sigma_hz": sigmas,
            "spacetime": st,
            "mode": gravsync_core::DeltaPMode::from(a.mode),
        }),
        None,
        &[(format!("{base}.csv"), csv.into_bytes())],
    )?;
    eprintln!("{}x{} grid; manifest {}", sigmas.len(), omegas.len(), path.display());
    Ok(())
}

/// Noise-free fit at scalar `T`.
fn analytic_fit<T: Real>(
    doc: &ScenarioDocument,
    cc: &CountingConfig,
    opts: &FitOptions,
) -> Result<(gravsync_core::CoincidenceScan, EstimateResult<f64>), Failure> {
    let s = doc.build::<T>()?;
    let scan = analytic_scan(&s, cc)?;
    let (_, sigma) = spectral_moments(&s.source)?;
    let est = fit_dip(&scan, sigma, s.protocol.mirror_speed_mps, s.protocol.beta(), opts)?;
    Ok((scan.to_f64(), est.to_f64()))
}

pub fn sync(
    ctx: &Context,
    name: &str,
    o: &Overrides,
    c: &CountingArgs,
    analytic: bool,
    fit_sigma: bool,
) -> Result<(), Failure> {
    let doc = load(name, o)?;
    let cc = CountingConfig {
        pairs_per_point: c.pairs,
        efficiency: c.efficiency,
        background: c.background,
        seed: c.seed,
    };
    cc.validate()?;
    let opts = FitOptions {
        fit_sigma,
        ..FitOptions::default()
    };

    let (scan, est, precision) = if analytic {
        #[cfg(feature = "quad")]
        let (scan, est) = analytic_fit::<gravsync_core::Quad>(&doc, &cc, &opts)?;
        #[cfg(not(feature = "quad"))]
        let (scan, est) = analytic_fit::<f64>(&doc, &cc, &opts)?;
        let precision = if cfg!(feature = "quad") { "quad" } else { "double" };
        (scan, est, precision)
    } else {
        let s = doc.build::<f64>()?;
        let scan = simulate_scan(&s, &cc)?;
        let (_, sigma) = spectral_moments(&s.source)?;
        let est = fit_dip(&scan, sigma, s.protocol.mirror_speed_mps, s.protocol.beta(), &opts)?;
        (scan, est, "double")
    };

    let dtau = doc.tau0_b_s - doc.tau0_a_s;
    let out = json!({
        "label": doc.label,
        "mode": if analytic { "analytic" } else { "simulated" },
        "precision": precision,
        "dtau_true_s": dtau,
        "estimate": est,
    });
    let mut csv = Vec::new();
    scan.write_csv(&mut csv)?;
    let base = ctx.base(&format!("sync-{}", stem(name)));
    ctx.emit(
        &base,
        &json!({
            "command": "sync",
            "scenario": doc,
            "counting": cc,
            "analytic": analytic,
            "fit": opts,
        }),
        (!analytic).then_some(cc.seed),
        &[(format!("{base}.csv"), csv), (format!("{base}.json"), to_json(&out)?)],
    )?;
    print_json(&out)?;
    eprintln!(
        "dtau = {:.12e} ± {:.3e} s (true {:.6e} s)",
        est.dtau_hat_s, est.dtau_stderr_s, dtau
    );
    if !est.converged {
        return Err(Failure::estimation(format!(
            "NoConvergence: fit stopped after {} iterations",
            est.iterations
        )));
    }
    Ok(())
}

pub fn sensitivity(ctx: &Context, name: &str, o: &Overrides, dv_mps: f64) -> Result<(), Failure> {
    let doc = load(name, o)?;
    let s = doc.build::<f64>()?;
    let report = mirror_velocity_sensitivity(&s, dv_mps)?;
    let out = json!({ "label": s.label, "sensitivity": report });
    let base = ctx.base(&format!("sensitivity-{}", stem(name)));
    ctx.emit(
        &base,
        &json!({ "command": "sensitivity", "scenario": doc, "dv_mps": dv_mps }),
        None,
        &[(format!("{base}.json"), to_json(&out)?)],
    )?;
    print_json(&out)
}
