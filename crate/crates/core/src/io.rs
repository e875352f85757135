//! Scenario documents: flat JSON records in SI units, and the bundled
//! presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interferometer::{dip_center_m, DispersionModel, ProtocolConfig};
use crate::protocol::Scenario;
use crate::scalar::{lit, Real, SPEED_OF_LIGHT_MPS};
use crate::spacetime::{SpacetimeConfig, EARTH_RADIUS_M, EARTH_SCHWARZSCHILD_RADIUS_M};
use crate::wavepacket::{PhotonPairState, SpectralAmplitude, TabulatedPacket};

/// Scan half-width in units of `c/σ` when none is given.
pub const DEFAULT_SCAN_HALF_WIDTHS: f64 = 5.0;
pub const DEFAULT_SCAN_POINTS: usize = 201;

fn default_rs() -> f64 {
    EARTH_SCHWARZSCHILD_RADIUS_M
}

fn default_ra() -> f64 {
    EARTH_RADIUS_M
}

fn default_points() -> usize {
    DEFAULT_SCAN_POINTS
}

/// On-disk form of a [`Scenario`]. Lengths in metres, frequencies in hertz,
/// times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub label: String,
    #[serde(default = "default_rs")]
    pub schwarzschild_radius_m: f64,
    #[serde(default = "default_ra")]
    pub r_a_m: f64,
    pub r_b_m: f64,
    /// Pump half-frequency `ω₀`.
    pub omega0_hz: f64,
    /// Gaussian source width; exclusive with `spectrum_csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_hz: Option<f64>,
    /// Tabulated idler spectrum (`omega_hz,re[,im]`), relative to the
    /// document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum_csv: Option<PathBuf>,
    pub mirror_speed_mps: f64,
    #[serde(default)]
    pub tau0_a_s: f64,
    pub tau0_b_s: f64,
    #[serde(default)]
    pub x0_m: f64,
    /// Defaults to `r_b_m - r_a_m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_distance_m: Option<f64>,
    /// Defaults to the link distance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs_distance_m: Option<f64>,
    #[serde(default = "default_points")]
    pub scan_points: usize,
    /// Defaults to the dip centre.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_center_m: Option<f64>,
    /// Defaults to `5c/σ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_half_width_m: Option<f64>,
    #[serde(default, skip_serializing_if = "no_dispersion")]
    pub dispersion: DispersionModel<f64>,
}

fn no_dispersion(d: &DispersionModel<f64>) -> bool {
    *d == DispersionModel::default()
}

/// Bundled scenario documents by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("leo", include_str!("../presets/leo.json")),
    ("leo-100ns", include_str!("../presets/leo-100ns.json")),
    ("geo", include_str!("../presets/geo.json")),
    ("geo-100ns", include_str!("../presets/geo-100ns.json")),
    ("gps", include_str!("../presets/gps.json")),
    ("flat", include_str!("../presets/flat.json")),
    ("leo-wideband", include_str!("../presets/leo-wideband.json")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

impl ScenarioDocument {
    /// Parses and validates a document; every error reports `origin:line`.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        Self::parse_in(text, origin, None)
    }

    /// As [`ScenarioDocument::parse`], resolving a relative `spectrum_csv`
    /// against `base`.
    pub fn parse_in(text: &str, origin: &str, base: Option<&Path>) -> Result<Self> {
        let mut doc: Self = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
        })?;
        if let (Some(csv), Some(dir)) = (&doc.spectrum_csv, base) {
            if csv.is_relative() {
                doc.spectrum_csv = Some(dir.join(csv));
            }
        }
        let anchored = |key: &str, msg: String| {
            let line = line_of_key(text, key).unwrap_or(1);
            Error::Parse(format!("{origin}:{line}: {key}: {msg}"))
        };
        doc.check().map_err(|(key, msg)| anchored(key, msg))?;
        match doc.build_inner::<f64>() {
            Ok(_) => Ok(doc),
            Err(Error::Domain(m) | Error::InvalidConfig(m)) => Err(anchored(Self::blame(&m), m)),
            Err(e) => Err(e),
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse_in(&text, &path.display().to_string(), path.parent())
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown preset {name:?}; available: {}",
                    preset_names().collect::<Vec<_>>().join(", ")
                ))
            })?;
        Self::parse(text, &format!("preset:{name}"))
    }

    /// A preset name, or a path to a document.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if PRESETS.iter().any(|(n, _)| *n == name_or_path) {
            Self::preset(name_or_path)
        } else {
            Self::from_path(name_or_path)
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Field-level checks that do not need the built types; returns the key
    /// at fault.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let finite = [
            ("schwarzschild_radius_m", self.schwarzschild_radius_m),
            ("r_a_m", self.r_a_m),
            ("r_b_m", self.r_b_m),
            ("omega0_hz", self.omega0_hz),
            ("mirror_speed_mps", self.mirror_speed_mps),
            ("tau0_a_s", self.tau0_a_s),
            ("tau0_b_s", self.tau0_b_s),
            ("x0_m", self.x0_m),
        ];
        for (k, v) in finite {
            if !v.is_finite() {
                return Err((k, "must be finite".into()));
            }
        }
        match (self.sigma_hz, &self.spectrum_csv) {
            (Some(_), Some(_)) => return Err(("spectrum_csv", "give either sigma_hz or spectrum_csv, not both".into())),
            (None, None) => return Err(("sigma_hz", "missing; a source needs sigma_hz or spectrum_csv".into())),
            (Some(s), None) if !(s > 0.0 && s.is_finite()) => {
                return Err(("sigma_hz", format!("must be positive, got {s}")))
            }
            _ => {}
        }
        if self.scan_points < 5 {
            return Err(("scan_points", format!("need at least 5, got {}", self.scan_points)));
        }
        if let Some(w) = self.scan_half_width_m {
            if !(w > 0.0 && w.is_finite()) {
                return Err(("scan_half_width_m", format!("must be positive, got {w}")));
            }
        }
        if let Some(c) = self.scan_center_m {
            if !c.is_finite() {
                return Err(("scan_center_m", "must be finite".into()));
            }
        }
        Ok(())
    }

    /// Re-runs the document checks, e.g. after editing fields in place.
    pub fn validate(&self) -> Result<()> {
        self.check()
            .map_err(|(key, msg)| Error::InvalidConfig(format!("{key}: {msg}")))?;
        self.build::<f64>().map(|_| ())
    }

    /// Key of the document that a build error most likely refers to.
    fn blame(msg: &str) -> &'static str {
        const KEYS: [(&str, &str); 6] = [
            ("mirror speed", "mirror_speed_mps"),
            ("radius", "r_b_m"),
            ("horizon", "r_b_m"),
            ("peak", "omega0_hz"),
            ("dispersion", "dispersion"),
            ("distance", "link_distance_m"),
        ];
        KEYS.iter()
            .find(|(needle, _)| msg.contains(needle))
            .map_or("label", |(_, k)| k)
    }

    /// Builds the scenario at scalar `T`.
    pub fn build<T: Real>(&self) -> Result<Scenario<T>> {
        self.build_inner().map_err(|e| match e {
            Error::Domain(m) | Error::InvalidConfig(m) => {
                Error::InvalidConfig(format!("{} ({}): {m}", self.label, Self::blame(&m)))
            }
            other => other,
        })
    }

    fn build_inner<T: Real>(&self) -> Result<Scenario<T>> {
        let spacetime = SpacetimeConfig::new(lit(self.schwarzschild_radius_m), lit(self.r_a_m), lit(self.r_b_m))?;
        let w0: T = lit(self.omega0_hz);
        let source = match (&self.sigma_hz, &self.spectrum_csv) {
            (Some(s), _) => PhotonPairState::gaussian(w0, lit(*s))?,
            (None, Some(path)) => PhotonPairState::new(
                w0,
                SpectralAmplitude::Tabulated(TabulatedPacket::from_csv_path(path, true)?),
            )?,
            (None, None) => return Err(Error::config("no source given")),
        };
        let (_, sigma) = crate::protocol::spectral_moments(&source)?;

        let v: T = lit(self.mirror_speed_mps);
        let dtau: T = lit::<T>(self.tau0_b_s) - lit(self.tau0_a_s);
        let center = self.scan_center_m.map_or_else(|| dip_center_m(v, dtau), lit);
        let half = self.scan_half_width_m.map_or_else(
            || lit::<T>(DEFAULT_SCAN_HALF_WIDTHS * SPEED_OF_LIGHT_MPS) / sigma,
            lit,
        );
        let link = self.link_distance_m.unwrap_or(self.r_b_m - self.r_a_m).abs();
        let protocol = ProtocolConfig {
            mirror_speed_mps: v,
            tau0_a_s: lit(self.tau0_a_s),
            tau0_b_s: lit(self.tau0_b_s),
            x0_m: lit(self.x0_m),
            link_distance_m: lit(link),
            bs_distance_m: lit(self.bs_distance_m.unwrap_or(link)),
            scan: ProtocolConfig::centered_scan(center, half, self.scan_points),
        };
        let dispersion = DispersionModel::new(
            self.dispersion.signal_to.iter().map(|&x| lit(x)).collect(),
            self.dispersion.signal_from.iter().map(|&x| lit(x)).collect(),
            self.dispersion.idler_to.iter().map(|&x| lit(x)).collect(),
            self.dispersion.idler_from.iter().map(|&x| lit(x)).collect(),
        )?;
        Scenario::new(spacetime, source, protocol, dispersion, self.label.clone())
    }
}
