//! Atmospheric phase model for the four one-way traversals and the net
//! dispersion phase `Δκ` that survives the two-photon interference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Highest polynomial order kept in a segment phase `κ(ω)`.
pub const MAX_DISPERSION_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    SignalTo,
    SignalFrom,
    IdlerTo,
    IdlerFrom,
}

impl Segment {
    pub const ALL: [Segment; 4] = [
        Segment::SignalTo,
        Segment::SignalFrom,
        Segment::IdlerTo,
        Segment::IdlerFrom,
    ];
}

/// Per-segment phases `κ_s(ω) = Σ kₙ (ω - ω₀)ⁿ`, coefficients in rad/Hzⁿ.
///
/// "To" legs run ground → satellite, "from" legs satellite → ground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionModel<T> {
    #[serde(default)]
    pub signal_to: Vec<T>,
    #[serde(default)]
    pub signal_from: Vec<T>,
    #[serde(default)]
    pub idler_to: Vec<T>,
    #[serde(default)]
    pub idler_from: Vec<T>,
}

impl<T> Default for DispersionModel<T> {
    fn default() -> Self {
        Self {
            signal_to: Vec::new(),
            signal_from: Vec::new(),
            idler_to: Vec::new(),
            idler_from: Vec::new(),
        }
    }
}

impl<T: Real> DispersionModel<T> {
    pub fn new(signal_to: Vec<T>, signal_from: Vec<T>, idler_to: Vec<T>, idler_from: Vec<T>) -> Result<Self> {
        let model = Self {
            signal_to,
            signal_from,
            idler_to,
            idler_from,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn none() -> Self {
        Self::default()
    }

    /// Paths paired so that `κ_t^S = κ_f^I = outbound` and
    /// `κ_f^S = κ_t^I = inbound`.
    pub fn matched(outbound: Vec<T>, inbound: Vec<T>) -> Result<Self> {
        Self::new(outbound.clone(), inbound.clone(), inbound, outbound)
    }

    pub fn validate(&self) -> Result<()> {
        for seg in Segment::ALL {
            let c = self.coefficients(seg);
            if c.len() > MAX_DISPERSION_ORDER + 1 {
                return Err(Error::config(format!(
                    "{seg:?} dispersion has order {}, maximum is {MAX_DISPERSION_ORDER}",
                    c.len() - 1
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(format!("{seg:?} dispersion coefficients must be finite")));
            }
        }
        Ok(())
    }

    pub fn coefficients(&self, seg: Segment) -> &[T] {
        match seg {
            Segment::SignalTo => &self.signal_to,
            Segment::SignalFrom => &self.signal_from,
            Segment::IdlerTo => &self.idler_to,
            Segment::IdlerFrom => &self.idler_from,
        }
    }

    /// `κ_s` evaluated at detuning `offset = ω - ω₀`.
    pub fn kappa(&self, seg: Segment, offset: T) -> T {
        self.coefficients(seg)
            .iter()
            .rev()
            .fold(T::zero(), |acc, &k| acc * offset + k)
    }

    pub fn is_zero(&self) -> bool {
        Segment::ALL
            .iter()
            .all(|&s| self.coefficients(s).iter().all(|c| *c == T::zero()))
    }

    pub fn is_matched(&self) -> bool {
        trimmed(&self.signal_to) == trimmed(&self.idler_from)
            && trimmed(&self.signal_from) == trimmed(&self.idler_to)
    }

    /// True when every odd-order coefficient vanishes.
    pub fn is_even(&self) -> bool {
        Segment::ALL.iter().all(|&s| {
            self.coefficients(s)
                .iter()
                .skip(1)
                .step_by(2)
                .all(|c| *c == T::zero())
        })
    }

    /// Net phase `Δκ(ω)` for absolute idler-side frequency `omega_hz`:
    ///
    /// `Δκ = κ_t^S(ω) - κ_f^I(ω) + κ_f^I(ω') - κ_t^S(ω') + κ_t^I(ω')
    ///       - κ_f^S(ω/χ) + κ_f^S(ω/χ) - κ_t^I(ω/χ)`, with `ω' = 2ω₀ - ω`.
    pub fn delta_kappa(&self, omega_hz: T, omega0_hz: T, chi: T) -> T {
        self.delta_kappa_at_detuning(omega_hz - omega0_hz, omega0_hz, chi - T::one())
    }

    /// [`DispersionModel::delta_kappa`] at detuning `x = ω - ω₀`, with the
    /// Doppler factor passed as `χ - 1` to keep it exact near one.
    pub fn delta_kappa_at_detuning(&self, x: T, omega0_hz: T, chi_minus_one: T) -> T {
        let chi = T::one() + chi_minus_one;
        // offsets from ω₀ of ω, ω' = 2ω₀ - ω, and ω/χ
        let direct = x;
        let mirrored = -x;
        let doppler = (x - chi_minus_one * omega0_hz) / chi;
        use Segment::*;
        self.kappa(SignalTo, direct) - self.kappa(IdlerFrom, direct) + self.kappa(IdlerFrom, mirrored)
            - self.kappa(SignalTo, mirrored)
            + self.kappa(IdlerTo, mirrored)
            - self.kappa(SignalFrom, doppler)
            + self.kappa(SignalFrom, doppler)
            - self.kappa(IdlerTo, doppler)
    }
}

fn trimmed<T: Real>(c: &[T]) -> &[T] {
    let end = c.iter().rposition(|v| *v != T::zero()).map_or(0, |i| i + 1);
    &c[..end]
}
