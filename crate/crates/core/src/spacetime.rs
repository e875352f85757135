//! Schwarzschild scalar factors for two static observers.
//!
//! Only the lapse `f(r) = 1 - r_s/r` and quantities derived from it are
//! needed. Small differences are formed from `r_s/r` directly ("compute the
//! deficit, not the value near one"), so Earth-scale shifts of order 1e-11
//! keep full relative precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, one_minus_sqrt1m, sqrt1p_m1, Real};

/// Schwarzschild radius of the Earth used for every preset, metres.
pub const EARTH_SCHWARZSCHILD_RADIUS_M: f64 = 9e-3;
/// Ground station radius (mean Earth radius), metres.
pub const EARTH_RADIUS_M: f64 = 6.371e6;
/// Low Earth orbit, about 400 km altitude.
pub const LEO_RADIUS_M: f64 = 6.771e6;
/// Geostationary orbit.
pub const GEO_RADIUS_M: f64 = 42.371e6;
/// Typical GPS orbit radius.
pub const GPS_RADIUS_M: f64 = 2.7e7;

/// Direction of travel between the two stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// From station A to station B.
    Up,
    /// From station B back to station A.
    Down,
}

impl Direction {
    pub fn reversed(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

/// Static observers A (ground) and B (satellite) outside a Schwarzschild mass.
///
/// `r_b < r_a` is allowed; signs then flip through [`SpacetimeConfig::theta`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeConfig<T> {
    pub schwarzschild_radius_m: T,
    pub r_a: T,
    pub r_b: T,
}

impl<T: Real> SpacetimeConfig<T> {
    pub fn new(schwarzschild_radius_m: T, r_a: T, r_b: T) -> Result<Self> {
        let cfg = Self {
            schwarzschild_radius_m,
            r_a,
            r_b,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Earth with `r_s = 9 mm`, ground station at the mean radius.
    pub fn earth(r_b: T) -> Result<Self> {
        Self::new(lit(EARTH_SCHWARZSCHILD_RADIUS_M), lit(EARTH_RADIUS_M), r_b)
    }

    /// Both observers at the same radius: no net redshift.
    pub fn flat() -> Self {
        Self {
            schwarzschild_radius_m: lit(EARTH_SCHWARZSCHILD_RADIUS_M),
            r_a: lit(EARTH_RADIUS_M),
            r_b: lit(EARTH_RADIUS_M),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rs = self.schwarzschild_radius_m;
        if !(rs > T::zero()) || !rs.is_finite() {
            return Err(Error::domain(format!(
                "Schwarzschild radius must be positive and finite, got {rs}"
            )));
        }
        self.deficit(self.r_a)?;
        self.deficit(self.r_b)?;
        Ok(())
    }

    /// The same geometry seen with the roles of A and B exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            schwarzschild_radius_m: self.schwarzschild_radius_m,
            r_a: self.r_b,
            r_b: self.r_a,
        }
    }

    /// `r_s / r`, the amount by which `f(r)` falls short of one.
    pub fn deficit(&self, r: T) -> Result<T> {
        if !(r > self.schwarzschild_radius_m) || !r.is_finite() {
            return Err(Error::domain(format!(
                "radius {r} m is not outside the horizon r_s = {} m",
                self.schwarzschild_radius_m
            )));
        }
        Ok(self.schwarzschild_radius_m / r)
    }

    /// Metric function `f(r) = 1 - r_s/r`, in `(0, 1)`.
    pub fn metric_f(&self, r: T) -> Result<T> {
        Ok(T::one() - self.deficit(r)?)
    }

    /// `f(r_a)/f(r_b) - 1`, formed as `(r_s/r_b - r_s/r_a) / (1 - r_s/r_b)`.
    fn lapse_ratio_m1(&self) -> Result<T> {
        self.deficit(self.r_a)?;
        let db = self.deficit(self.r_b)?;
        // r_s (r_a - r_b) / (r_a r_b) keeps the difference exact for nearby radii
        let diff = self.schwarzschild_radius_m * (self.r_a - self.r_b) / (self.r_a * self.r_b);
        Ok(diff / (T::one() - db))
    }

    /// `√(f(r_a)/f(r_b))`: frequency ratio received at B for a mode sent from A.
    ///
    /// Below one for `r_a < r_b` (uplink redshift).
    pub fn redshift_ratio(&self) -> Result<T> {
        Ok(T::one() + self.theta()?)
    }

    /// `ϑ = √(f(r_a)/f(r_b)) - 1`; negative for `r_a < r_b`.
    pub fn theta(&self) -> Result<T> {
        Ok(sqrt1p_m1(self.lapse_ratio_m1()?))
    }

    /// First-order expansion `-(r_s/r_b - r_s/r_a)/2`, with the sign of
    /// [`SpacetimeConfig::theta`].
    pub fn theta_first_order(&self) -> Result<T> {
        let da = self.deficit(self.r_a)?;
        let db = self.deficit(self.r_b)?;
        Ok((db - da) * lit(0.5))
    }

    /// Frequency ratio applied to a packet travelling in `direction`.
    pub fn frequency_ratio(&self, direction: Direction) -> Result<T> {
        let up = self.redshift_ratio()?;
        Ok(match direction {
            Direction::Up => up,
            Direction::Down => up.recip(),
        })
    }

    /// `frequency_ratio(direction) - 1`, computed without cancellation.
    pub fn frequency_shift(&self, direction: Direction) -> Result<T> {
        let theta = self.theta()?;
        Ok(match direction {
            Direction::Up => theta,
            Direction::Down => -theta / (T::one() + theta),
        })
    }

    /// Proper time `√f(r) · t` elapsed on a static clock at `r`.
    pub fn proper_time_dilation(&self, t_coord: T, r: T) -> Result<T> {
        Ok(self.metric_f(r)?.sqrt() * t_coord)
    }

    /// `(1 - √f(r)) · t`: how far a clock at `r` falls behind coordinate time.
    pub fn proper_time_deficit(&self, t_coord: T, r: T) -> Result<T> {
        Ok(one_minus_sqrt1m(self.deficit(r)?) * t_coord)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn leo() -> SpacetimeConfig<f64> {
        SpacetimeConfig::earth(LEO_RADIUS_M).unwrap()
    }

    fn geo() -> SpacetimeConfig<f64> {
        SpacetimeConfig::earth(GEO_RADIUS_M).unwrap()
    }

    #[test]
    fn metric_f_examples() {
        let cfg = SpacetimeConfig::new(1.0, 2.0, 3.0).unwrap();
        assert_eq!(cfg.metric_f(2.0).unwrap(), 0.5);
        let earth = SpacetimeConfig::flat();
        assert!(earth.metric_f(1e20).unwrap() >= 1.0 - 1e-22);
        assert!(earth.deficit(1e20).unwrap() < 1e-22);
        // mpmath: 9e-3 / 6.371e6 = 1.41265107518443e-9
        let d: f64 = earth.deficit(6.371e6).unwrap();
        assert!((d - 1.412_651_075_184_43e-9).abs() < 1e-23);
    }

    #[test]
    fn horizon_and_nonpositive_radii_rejected() {
        let cfg = SpacetimeConfig::<f64>::flat();
        assert!(matches!(cfg.metric_f(9e-3), Err(Error::Domain(_))));
        assert!(cfg.metric_f(1e-3).is_err());
        assert!(cfg.metric_f(-5.0).is_err());
        assert!(cfg.metric_f(f64::NAN).is_err());
        assert!(SpacetimeConfig::new(9e-3, 1e-3, 7e6).is_err());
        assert!(SpacetimeConfig::new(0.0, 6e6, 7e6).is_err());
    }

    #[test]
    fn redshift_ratio_golden_values() {
        assert_eq!(SpacetimeConfig::<f64>::flat().redshift_ratio().unwrap(), 1.0);
        // mpmath (50 digits): 1 - ratio = 4.172651239e-11 (LEO), 6.001208224e-10 (GEO)
        let leo_def = 1.0 - leo().redshift_ratio().unwrap();
        assert!((leo_def / 4.172_651_239e-11 - 1.0).abs() < 1e-5, "{leo_def}");
        let th = leo().theta().unwrap();
        assert!((th + 4.172_651_239_38e-11).abs() < 1e-21, "{th:e}");
        assert!((th.abs() / 4.17e-11 - 1.0).abs() < 5e-3);
        let geo_th = geo().theta().unwrap();
        assert!((geo_th + 6.001_208_224_1e-10).abs() < 1e-20, "{geo_th:e}");
        assert!((geo_th.abs() / 6.0e-10 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn first_order_agrees_with_exact_theta() {
        for rb in [LEO_RADIUS_M, GEO_RADIUS_M, GPS_RADIUS_M, 6.5e6] {
            let cfg = SpacetimeConfig::earth(rb).unwrap();
            let exact = cfg.theta().unwrap();
            let approx = cfg.theta_first_order().unwrap();
            assert!((exact - approx).abs() < 1e-3 * exact.abs());
        }
    }

    #[test]
    fn proper_time_examples() {
        let flatish = SpacetimeConfig::new(1.0, 2.0, 2.0).unwrap();
        let tau = flatish.proper_time_dilation(1.0, 2.0).unwrap();
        assert!((tau - 0.5_f64.sqrt()).abs() < 1e-15);
        let earth = SpacetimeConfig::<f64>::flat();
        // mpmath: (1 - sqrt(f(r_A))) * 86400 = 6.102652647e-5 s
        let lag = earth.proper_time_deficit(86_400.0, EARTH_RADIUS_M).unwrap();
        assert!((lag - 6.102_652_647e-5).abs() < 1e-14);
        let tau = earth.proper_time_dilation(86_400.0, EARTH_RADIUS_M).unwrap();
        assert!((86_400.0 - tau - lag).abs() < 1e-10);
    }

    #[test]
    fn frequency_ratio_directions_are_reciprocal() {
        let cfg = leo();
        let up = cfg.frequency_ratio(Direction::Up).unwrap();
        let down = cfg.frequency_ratio(Direction::Down).unwrap();
        assert!((up * down - 1.0).abs() < 1e-15);
        assert!(up < 1.0);
    }

    proptest! {
        #[test]
        fn metric_f_increasing(r1 in 1.0e6..1.0e8f64, dr in 1.0..1.0e7f64) {
            let cfg = SpacetimeConfig::<f64>::flat();
            prop_assert!(cfg.metric_f(r1 + dr).unwrap() > cfg.metric_f(r1).unwrap());
        }

        #[test]
        fn swapping_inverts_ratio_and_flips_theta(ra in 6.0e6..5.0e7f64, rb in 6.0e6..5.0e7f64) {
            let cfg = SpacetimeConfig::earth(rb).map(|c| SpacetimeConfig { r_a: ra, ..c }).unwrap();
            let sw = cfg.swapped();
            let prod = cfg.redshift_ratio().unwrap() * sw.redshift_ratio().unwrap();
            prop_assert!((prod - 1.0).abs() <= 1e-15);
            let (t, ts) = (cfg.theta().unwrap(), sw.theta().unwrap());
            if ra == rb {
                prop_assert_eq!(t, 0.0);
            } else {
                prop_assert!(t != 0.0);
                prop_assert!(t.signum() == -ts.signum());
                prop_assert_eq!(t < 0.0, ra < rb);
            }
        }
    }
}
