//! Scenario assembly: spacetime → overlaps → coincidence scan → Δp, the
//! figure sweeps, and the mirror-velocity error study.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interferometer::{
    coincidence_rate_gaussian, dip_center_m, CoincidenceEngine, DispersionModel, ProtocolConfig, RatePoint,
    RateScan,
};
use crate::quadrature::CompositeGaussLegendre;
use crate::scalar::{lit, speed_of_light, Real};
use crate::spacetime::{Direction, SpacetimeConfig, EARTH_RADIUS_M, EARTH_SCHWARZSCHILD_RADIUS_M, LEO_RADIUS_M};
use crate::wavepacket::{
    distort, ln_overlap_gaussian, overlap_approx_deficit, overlap_numeric, regime_ok, PhotonPairState,
    SpectralAmplitude,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaPMode {
    /// `1 - (1 - ϑ²ω₀²/8σ²)⁴`.
    Approx,
    /// `1 - (Θ₁Θ₂)²` with the closed-form Gaussian overlaps.
    #[default]
    Exact,
}

/// Relative drop of the coincidence plateau caused by the redshift.
pub fn delta_p<T: Real>(theta: T, peak_hz: T, sigma_hz: T, mode: DeltaPMode) -> Result<T> {
    match mode {
        DeltaPMode::Approx => {
            if !(peak_hz > T::zero()) || !(sigma_hz > T::zero()) {
                return Err(Error::domain("peak and width must be positive"));
            }
            delta_p_from_deficit(overlap_approx_deficit(theta, peak_hz, sigma_hz))
        }
        DeltaPMode::Exact => {
            let l1 = ln_overlap_gaussian(theta, peak_hz, sigma_hz, Direction::Up)?;
            let l2 = ln_overlap_gaussian(theta, peak_hz, sigma_hz, Direction::Down)?;
            Ok(delta_p_from_ln(l1 + l2))
        }
    }
}

/// `1 - (1-x)⁴`.
fn delta_p_from_deficit<T: Real>(x: T) -> Result<T> {
    if !(x >= T::zero() && x < T::one()) {
        return Err(Error::domain(format!(
            "leading-order overlap deficit {x} is outside [0, 1); use exact mode"
        )));
    }
    Ok(-(lit::<T>(4.0) * (-x).ln_1p()).exp_m1())
}

/// `1 - exp(2 ln(Θ₁Θ₂))`.
fn delta_p_from_ln<T: Real>(ln_product: T) -> T {
    -(lit::<T>(2.0) * ln_product).exp_m1()
}

/// Mean and standard deviation of `|F|²` over detuning.
///
/// For a Gaussian amplitude these are `(0, σ)` exactly.
pub fn spectral_moments<T: Real>(pair: &PhotonPairState<T>) -> Result<(T, T)> {
    if let Some(s) = pair.sigma_hz() {
        return Ok((T::zero(), s));
    }
    let breaks = pair.detuning_breakpoints();
    let span = breaks[breaks.len() - 1] - breaks[0];
    let mut q = CompositeGaussLegendre::new(16, lit(1e-10));
    let norm = q.integrate(|u| pair.density_at_detuning(u), &breaks)?;
    if !(norm > T::zero()) {
        return Err(Error::domain("pair spectrum has zero norm"));
    }
    // The first moment is near zero for centred spectra; bound it absolutely.
    q.abs_tol = norm * span * lit(1e-12);
    let mean = q.integrate(|u| u * pair.density_at_detuning(u), &breaks)? / norm;
    let var = q.integrate(
        |u| {
            let d = u - mean;
            d * d * pair.density_at_detuning(u)
        },
        &breaks,
    )? / norm;
    Ok((mean, var.sqrt()))
}

/// A complete synchronization run: where the stations are, what the source
/// emits, how the mirrors move and what the atmosphere does.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub spacetime: SpacetimeConfig<T>,
    pub source: PhotonPairState<T>,
    pub protocol: ProtocolConfig<T>,
    pub dispersion: DispersionModel<T>,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceReport<T> {
    pub theta: T,
    /// Uplink overlap `Θ₁`.
    pub overlap1: T,
    /// Downlink overlap `Θ₂`.
    pub overlap2: T,
    /// `1 - (Θ₁Θ₂)²`.
    pub delta_p: T,
    /// Leading-order `1 - (1 - ϑ²ω₀²/8σ²)⁴`, with the spectral rms width as
    /// `σ` for tabulated sources.
    pub delta_p_approx: T,
    /// Plateau height `(Θ₁Θ₂)²`.
    pub plateau: T,
    pub dip_center_m: T,
    pub regime_ok: bool,
}

impl<T: Real> Scenario<T> {
    pub fn new(
        spacetime: SpacetimeConfig<T>,
        source: PhotonPairState<T>,
        protocol: ProtocolConfig<T>,
        dispersion: DispersionModel<T>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let s = Self {
            spacetime,
            source,
            protocol,
            dispersion,
            label: label.into(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.spacetime.validate()?;
        self.protocol.validate()?;
        self.dispersion.validate()
    }

    pub fn theta(&self) -> Result<T> {
        self.spacetime.theta()
    }

    /// `(ln Θ₁, ln Θ₂)`; closed form for Gaussian sources, quadrature on the
    /// distorted spectrum otherwise.
    pub fn ln_overlaps(&self) -> Result<(T, T)> {
        let amp = self.source.detuning_amplitude();
        match amp {
            SpectralAmplitude::Gaussian(g) => {
                let theta = self.theta()?;
                Ok((
                    ln_overlap_gaussian(theta, g.peak_hz(), g.sigma_hz(), Direction::Up)?,
                    ln_overlap_gaussian(theta, g.peak_hz(), g.sigma_hz(), Direction::Down)?,
                ))
            }
            SpectralAmplitude::Tabulated(_) => {
                let up = overlap_numeric(&distort(amp, &self.spacetime, Direction::Up)?, amp)?;
                let down = overlap_numeric(&distort(amp, &self.spacetime, Direction::Down)?, amp)?;
                // Quadrature noise can push a perfect overlap a hair above one.
                Ok((up.min(T::one()).ln(), down.min(T::one()).ln()))
            }
        }
    }

    pub fn report(&self) -> Result<DisturbanceReport<T>> {
        let theta = self.theta()?;
        let (l1, l2) = self.ln_overlaps()?;
        let (mean, sigma) = spectral_moments(&self.source)?;
        let peak = self.source.pump_half_frequency_hz() + mean;
        let delta_p = delta_p_from_ln(l1 + l2);
        Ok(DisturbanceReport {
            theta,
            overlap1: l1.exp(),
            overlap2: l2.exp(),
            delta_p,
            delta_p_approx: delta_p_from_deficit(overlap_approx_deficit(theta, peak, sigma))?,
            plateau: T::one() - delta_p,
            dip_center_m: self.protocol.dip_center_m(),
            regime_ok: regime_ok(theta, peak, sigma),
        })
    }

    /// Coincidence probabilities over the configured scan for given overlaps.
    ///
    /// A Gaussian source with no dispersion uses the closed form; anything
    /// else is integrated over the spectrum.
    pub fn rate_scan(&self, overlap1: T, overlap2: T) -> Result<RateScan<T>> {
        let p = &self.protocol;
        match self.source.sigma_hz() {
            Some(sigma) if self.dispersion.is_zero() => {
                let points = p
                    .scan
                    .par_iter()
                    .map(|&dl| {
                        let p_c = coincidence_rate_gaussian(
                            overlap1,
                            overlap2,
                            sigma,
                            dl,
                            p.mirror_speed_mps,
                            p.dtau_s(),
                        )?;
                        Ok(RatePoint { delta_l_m: dl, p_c })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(RateScan { points })
            }
            _ => CoincidenceEngine::new(&self.source, overlap1, overlap2, p, &self.dispersion)?.scan(&p.scan),
        }
    }

    /// Copy with the clock discrepancy `τ₀ᵇ - τ₀ᵃ` set to `dtau_s`.
    pub fn with_dtau(&self, dtau_s: T) -> Self {
        let mut s = self.clone();
        s.protocol.tau0_b_s = s.protocol.tau0_a_s + dtau_s;
        s
    }
}

/// Overlaps, Δp and the noise-free scan of a scenario.
pub fn run_scenario<T: Real>(s: &Scenario<T>) -> Result<(DisturbanceReport<T>, RateScan<T>)> {
    s.validate()?;
    let report = s.report()?;
    let scan = s.rate_scan(report.overlap1, report.overlap2)?;
    Ok((report, scan))
}

/// Fixed source and ground station for the altitude sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figure2Params<T> {
    pub schwarzschild_radius_m: T,
    pub r_a_m: T,
    pub omega0_hz: T,
    pub sigma_hz: T,
    pub mode: DeltaPMode,
}

impl<T: Real> Default for Figure2Params<T> {
    fn default() -> Self {
        Self {
            schwarzschild_radius_m: lit(EARTH_SCHWARZSCHILD_RADIUS_M),
            r_a_m: lit(EARTH_RADIUS_M),
            omega0_hz: lit(700e12),
            sigma_hz: lit(100e6),
            mode: DeltaPMode::Exact,
        }
    }
}

/// `(r_B, Δp)` for each satellite radius.
pub fn figure2_sweep<T: Real>(r_b_values: &[T], params: &Figure2Params<T>) -> Result<Vec<(T, T)>> {
    if r_b_values.is_empty() {
        return Err(Error::config("empty radius grid"));
    }
    r_b_values
        .par_iter()
        .map(|&r_b| {
            if !(r_b >= params.r_a_m) {
                return Err(Error::config(format!(
                    "satellite radius {r_b} m is below the ground station at {} m",
                    params.r_a_m
                )));
            }
            let st = SpacetimeConfig::new(params.schwarzschild_radius_m, params.r_a_m, r_b)?;
            Ok((r_b, delta_p(st.theta()?, params.omega0_hz, params.sigma_hz, params.mode)?))
        })
        .collect()
}

/// Δp over a source-parameter grid; `delta_p[i][j]` belongs to
/// `sigma_hz[i]` and `omega0_hz[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure3Grid<T> {
    pub omega0_hz: Vec<T>,
    pub sigma_hz: Vec<T>,
    pub delta_p: Vec<Vec<T>>,
}

pub fn figure3_sweep<T: Real>(
    omega0_grid: &[T],
    sigma_grid: &[T],
    spacetime: &SpacetimeConfig<T>,
    mode: DeltaPMode,
) -> Result<Figure3Grid<T>> {
    if omega0_grid.is_empty() || sigma_grid.is_empty() {
        return Err(Error::config("empty source-parameter grid"));
    }
    let theta = spacetime.theta()?;
    let delta_p = sigma_grid
        .par_iter()
        .map(|&s| omega0_grid.iter().map(|&w| delta_p(theta, w, s, mode)).collect())
        .collect::<Result<Vec<Vec<T>>>>()?;
    Ok(Figure3Grid {
        omega0_hz: omega0_grid.to_vec(),
        sigma_hz: sigma_grid.to_vec(),
        delta_p,
    })
}

/// Spacetime of the default Fig. 3 sweep: ground to low Earth orbit.
pub fn figure3_default_spacetime<T: Real>() -> Result<SpacetimeConfig<T>> {
    SpacetimeConfig::new(lit(EARTH_SCHWARZSCHILD_RADIUS_M), lit(EARTH_RADIUS_M), lit(LEO_RADIUS_M))
}

/// What a mirror-speed error does to the measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport<T> {
    pub dv_mps: T,
    /// True dip position minus the nominal one.
    pub dip_shift_m: T,
    /// `|Δτ̂ - Δτ|/Δτ` when the dip is inverted with the nominal speed.
    pub dtau_relative_error: T,
    /// `|dv|/v`.
    pub dtau_relative_error_first_order: T,
    /// Change of the plateau `(Θ₁Θ₂)²`; the overlaps do not depend on `v`.
    pub plateau_shift: T,
    /// Largest change of `P_c` anywhere on the delay axis, to first order in
    /// the shift: `(Θ₁Θ₂)² · 2σ e^{-1/2}/c · |shift|`.
    pub max_rate_perturbation: T,
    pub delta_p: T,
    /// `delta_p / max_rate_perturbation`.
    pub scale_ratio: T,
}

pub fn mirror_velocity_sensitivity<T: Real>(s: &Scenario<T>, dv_mps: T) -> Result<SensitivityReport<T>> {
    let v = s.protocol.mirror_speed_mps;
    if !(dv_mps.abs() < v) {
        return Err(Error::domain(format!("|dv| must be below v = {v} m/s, got {dv_mps}")));
    }
    let dtau = s.protocol.dtau_s();
    if dtau == T::zero() {
        return Err(Error::domain("relative error needs a nonzero clock discrepancy"));
    }
    let nominal = dip_center_m(v, dtau);
    let actual = dip_center_m(v + dv_mps, dtau);
    let beta = v / speed_of_light();
    let dtau_hat = (T::one() + beta) * actual / (lit::<T>(4.0) * v);

    let report = s.report()?;
    let (_, sigma) = spectral_moments(&s.source)?;
    let slope = lit::<T>(2.0) * sigma * lit::<T>(-0.5).exp() / speed_of_light();
    let shift = actual - nominal;
    let max_rate_perturbation = report.plateau * slope * shift.abs();
    Ok(SensitivityReport {
        dv_mps,
        dip_shift_m: shift,
        dtau_relative_error: ((dtau_hat - dtau) / dtau).abs(),
        dtau_relative_error_first_order: (dv_mps / v).abs(),
        plateau_shift: T::zero(),
        max_rate_perturbation,
        delta_p: report.delta_p,
        scale_ratio: if max_rate_perturbation > T::zero() {
            report.delta_p / max_rate_perturbation
        } else {
            T::infinity()
        },
    })
}
