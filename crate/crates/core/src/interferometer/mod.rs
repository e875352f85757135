//! Hong-Ou-Mandel coincidence engine for the moving-mirror synchronization
//! protocol.
//!
//! Conventions: all Υ delays are in seconds; `β = v/c`, `χ = (1+β)/(1-β)`;
//! the integration variable is the detuning `u = ω - ω₀`. The coincidence
//! probability is normalized so the flat-spacetime plateau equals one; the
//! Mandel-formula prefactors (field normalization, detector integration time)
//! are absorbed into that normalization.

mod dispersion;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dispersion::{DispersionModel, Segment, MAX_DISPERSION_ORDER};

use crate::error::{Error, Result};
use crate::quadrature::CompositeGaussLegendre;
use crate::scalar::{lit, speed_of_light, to_f64, Real};
use crate::wavepacket::PhotonPairState;

/// Mirror speeds are kept below this fraction of `c`.
pub const MAX_BETA: f64 = 1e-3;

/// Mirror motion, clock start times, link geometry and the delay scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig<T> {
    pub mirror_speed_mps: T,
    /// Start time of Alice's mirror on her own clock.
    pub tau0_a_s: T,
    /// Start time of Bob's mirror on his own clock.
    pub tau0_b_s: T,
    /// Beam delay distance `x₀`.
    pub x0_m: T,
    /// Ground–satellite distance `L`.
    pub link_distance_m: T,
    /// Distance `L'` from Bob to the beam splitter.
    pub bs_distance_m: T,
    /// Interferometer delays `δl` to scan, strictly increasing.
    pub scan: Vec<T>,
}

impl<T: Real> ProtocolConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let v = self.mirror_speed_mps;
        if !(v > T::zero()) || !(v < speed_of_light::<T>() * lit(MAX_BETA)) {
            return Err(Error::config(format!(
                "mirror speed must satisfy 0 < v < {MAX_BETA:e} c, got {v} m/s"
            )));
        }
        for (name, x) in [
            ("tau0_a_s", self.tau0_a_s),
            ("tau0_b_s", self.tau0_b_s),
            ("x0_m", self.x0_m),
            ("link_distance_m", self.link_distance_m),
            ("bs_distance_m", self.bs_distance_m),
        ] {
            if !x.is_finite() {
                return Err(Error::config(format!("{name} must be finite")));
            }
        }
        if self.link_distance_m < T::zero() || self.bs_distance_m < T::zero() || self.x0_m < T::zero() {
            return Err(Error::config("distances must be non-negative"));
        }
        if self.scan.is_empty() {
            return Err(Error::config("delay scan is empty"));
        }
        if self.scan.iter().any(|x| !x.is_finite()) || self.scan.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("delay scan must be finite and strictly increasing"));
        }
        Ok(())
    }

    pub fn beta(&self) -> T {
        self.mirror_speed_mps / speed_of_light()
    }

    /// Doppler factor `(1+β)/(1-β)`.
    pub fn chi(&self) -> T {
        T::one() + self.chi_minus_one()
    }

    /// `χ - 1 = 2β/(1-β)`.
    pub fn chi_minus_one(&self) -> T {
        let b = self.beta();
        lit::<T>(2.0) * b / (T::one() - b)
    }

    /// Clock discrepancy `Δτ = τ₀ᵇ - τ₀ᵃ`.
    pub fn dtau_s(&self) -> T {
        self.tau0_b_s - self.tau0_a_s
    }

    /// Delay at which coincidences vanish, `4vΔτ/(1+β)`.
    pub fn dip_center_m(&self) -> T {
        dip_center_m(self.mirror_speed_mps, self.dtau_s())
    }

    /// `n` delays evenly spread over `center ± half_width`.
    pub fn centered_scan(center: T, half_width: T, n: usize) -> Vec<T> {
        match n {
            0 => Vec::new(),
            1 => vec![center],
            _ => {
                let mid: T = lit((n - 1) as f64 / 2.0);
                let h = half_width / mid;
                (0..n).map(|k| center + (lit::<T>(k as f64) - mid) * h).collect()
            }
        }
    }
}

/// `4vΔτ/(1+β)`.
pub fn dip_center_m<T: Real>(v_mps: T, dtau_s: T) -> T {
    let beta = v_mps / speed_of_light();
    lit::<T>(4.0) * v_mps * dtau_s / (T::one() + beta)
}

/// Which beam a mirror acts on, and where.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MirrorRole {
    IdlerAlice,
    IdlerBob,
    SignalAlice,
    SignalBob,
}

/// Path difference added by a mirror started at `tau0` and observed at `t`:
/// `+v(t-τ₀)` for Alice's idler and Bob's signal, `-v(t-τ₀)` otherwise.
pub fn opd<T: Real>(t: T, tau0: T, v: T, role: MirrorRole) -> T {
    let dl = v * (t - tau0);
    match role {
        MirrorRole::IdlerAlice | MirrorRole::SignalBob => dl,
        MirrorRole::IdlerBob | MirrorRole::SignalAlice => -dl,
    }
}

/// Composite delays picked up along the protocol, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBundle<T> {
    /// Signal beam, ground → satellite.
    pub upsilon1_s: T,
    /// Signal beam on arrival at the beam splitter.
    pub upsilon2_s: T,
    /// Idler beam on arrival at the beam splitter.
    pub upsilon3_s: T,
    /// Net delay in the interference term, `4βΔτ/(1+β) - δl/c`.
    pub upsilon4_s: T,
}

pub fn phase_bundle<T: Real>(cfg: &ProtocolConfig<T>, delta_l_m: T) -> PhaseBundle<T> {
    let c = speed_of_light::<T>();
    let b = cfg.beta();
    let two: T = lit(2.0);
    let fwd = two * b / (T::one() - b);
    let back = two * b / (T::one() + b);
    let x0c = cfg.x0_m / c;
    let legs = (cfg.link_distance_m / cfg.chi() + cfg.bs_distance_m) / c;
    let upsilon1_s = fwd * (cfg.tau0_b_s - x0c) - cfg.link_distance_m / c;
    let upsilon2_s = back * (cfg.tau0_a_s - cfg.tau0_b_s + x0c) + legs;
    let upsilon3_s = back * (cfg.tau0_a_s - cfg.tau0_b_s - x0c) - legs;
    let upsilon4_s = two * back * cfg.dtau_s() - delta_l_m / c;
    PhaseBundle {
        upsilon1_s,
        upsilon2_s,
        upsilon3_s,
        upsilon4_s,
    }
}

/// Flat-spacetime dip `1 - exp(-2σ²(δl - δl*)²/c²)` at `offset = δl - δl*`.
pub fn flat_dip<T: Real>(sigma_hz: T, offset_m: T) -> T {
    let s = sigma_hz * offset_m / speed_of_light();
    -(-(lit::<T>(2.0) * s * s)).exp_m1()
}

fn check_overlap<T: Real>(o: T) -> Result<()> {
    if !(o > T::zero() && o <= T::one()) {
        return Err(Error::domain(format!("overlap must lie in (0, 1], got {o}")));
    }
    Ok(())
}

/// Gaussian-source coincidence probability
/// `(Θ₁Θ₂)² · [1 - exp(-2σ²(δl - 4vΔτ/(1+β))²/c²)]`.
pub fn coincidence_rate_gaussian<T: Real>(
    overlap1: T,
    overlap2: T,
    sigma_hz: T,
    delta_l_m: T,
    v_mps: T,
    dtau_s: T,
) -> Result<T> {
    check_overlap(overlap1)?;
    check_overlap(overlap2)?;
    if !(sigma_hz > T::zero()) {
        return Err(Error::domain("source width must be positive"));
    }
    let o = overlap1 * overlap2;
    Ok(o * o * flat_dip(sigma_hz, delta_l_m - dip_center_m(v_mps, dtau_s)))
}

/// `½(Θ₁Θ₂)²|F|² · |1 - e^{iφ}|²` written as `2 sin²(φ/2)` to stay accurate
/// near the dip floor.
fn interference_density<T: Real>(density: T, overlap_sq: T, phase: T) -> T {
    let s = (phase * lit(0.5)).sin();
    lit::<T>(2.0) * overlap_sq * density * s * s
}

/// Squared two-photon amplitude at detuning `u` after collapsing the
/// `δ(ω₁ + ω₂ - 2ω₀)`:
/// `½(Θ₁Θ₂)² |F(ω₀+u)|² |1 - exp(i(2uΥ₄ - Δκ))|²`.
///
/// Normalized so that integrating over `u` gives the coincidence probability.
pub fn matrix_element_sq<T: Real>(
    omega_detuning_hz: T,
    pair: &PhotonPairState<T>,
    overlap1: T,
    overlap2: T,
    upsilon4_s: T,
    delta_kappa_rad: T,
) -> T {
    let o = overlap1 * overlap2;
    let phase = lit::<T>(2.0) * omega_detuning_hz * upsilon4_s - delta_kappa_rad;
    interference_density(pair.density_at_detuning(omega_detuning_hz), o * o, phase)
}

/// Coincidence probability by quadrature over the pair spectrum, with
/// arbitrary spectra and dispersion.
#[derive(Debug, Clone)]
pub struct CoincidenceEngine<'a, T> {
    pair: &'a PhotonPairState<T>,
    dispersion: &'a DispersionModel<T>,
    overlap_sq: T,
    dip_center_m: T,
    chi_minus_one: T,
    quadrature: CompositeGaussLegendre<T>,
}

impl<'a, T: Real> CoincidenceEngine<'a, T> {
    pub fn new(
        pair: &'a PhotonPairState<T>,
        overlap1: T,
        overlap2: T,
        cfg: &ProtocolConfig<T>,
        dispersion: &'a DispersionModel<T>,
    ) -> Result<Self> {
        check_overlap(overlap1)?;
        check_overlap(overlap2)?;
        dispersion.validate()?;
        let o = overlap1 * overlap2;
        Ok(Self {
            pair,
            dispersion,
            overlap_sq: o * o,
            dip_center_m: cfg.dip_center_m(),
            chi_minus_one: cfg.chi_minus_one(),
            quadrature: CompositeGaussLegendre::default(),
        })
    }

    /// Overrides the Doppler factor seen by the dispersion terms; `0` gives
    /// the idealized `χ = 1` limit.
    pub fn with_chi_minus_one(mut self, chi_minus_one: T) -> Self {
        self.chi_minus_one = chi_minus_one;
        self
    }

    pub fn with_quadrature(mut self, quadrature: CompositeGaussLegendre<T>) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn dip_center_m(&self) -> T {
        self.dip_center_m
    }

    /// `(Θ₁Θ₂)² ∫du |F(ω₀+u)|² (1 - cos[(2u/c)(δl* - δl) - Δκ(ω₀+u)])`.
    pub fn rate(&self, delta_l_m: T) -> Result<T> {
        let c = speed_of_light::<T>();
        let two: T = lit(2.0);
        let w0 = self.pair.pump_half_frequency_hz();
        let offset = self.dip_center_m - delta_l_m;
        let breaks = self.pair.detuning_breakpoints();
        self.quadrature.integrate(
            |u| {
                let dk = self
                    .dispersion
                    .delta_kappa_at_detuning(u, w0, self.chi_minus_one);
                let phase = two * u * offset / c - dk;
                interference_density(self.pair.density_at_detuning(u), self.overlap_sq, phase)
            },
            &breaks,
        )
    }

    /// Evaluates [`CoincidenceEngine::rate`] over the delays in parallel;
    /// output order follows the input.
    pub fn scan(&self, delays: &[T]) -> Result<RateScan<T>> {
        let points = delays
            .par_iter()
            .map(|&dl| {
                Ok(RatePoint {
                    delta_l_m: dl,
                    p_c: self.rate(dl)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RateScan { points })
    }
}

/// Convenience wrapper around [`CoincidenceEngine`] for a single delay.
pub fn coincidence_rate_quadrature<T: Real>(
    pair: &PhotonPairState<T>,
    overlap1: T,
    overlap2: T,
    cfg: &ProtocolConfig<T>,
    delta_l_m: T,
    dispersion: &DispersionModel<T>,
) -> Result<T> {
    CoincidenceEngine::new(pair, overlap1, overlap2, cfg, dispersion)?.rate(delta_l_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint<T> {
    pub delta_l_m: T,
    pub p_c: T,
}

/// Noise-free coincidence probabilities over a delay scan.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RateScan<T> {
    pub points: Vec<RatePoint<T>>,
}

impl<T: Real> RateScan<T> {
    pub fn min_by_rate(&self) -> Option<&RatePoint<T>> {
        self.points
            .iter()
            .min_by(|a, b| a.p_c.partial_cmp(&b.p_c).expect("finite rates"))
    }

    /// CSV with header `delta_l_m,p_c`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["delta_l_m", "p_c"])?;
        for p in &self.points {
            w.write_record([to_f64(p.delta_l_m).to_string(), to_f64(p.p_c).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl RateScan<f64> {
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let points = r
            .deserialize()
            .collect::<std::result::Result<Vec<RatePoint<f64>>, _>>()?;
        Ok(Self { points })
    }
}
