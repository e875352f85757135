//! Shot-noise model of coincidence counting and the dip estimator that turns
//! a scan back into a clock discrepancy.

mod fit;
mod study;

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fit::{fit_dip, EstimateResult, FitOptions};
pub use study::{
    detect_curvature, log_log_slope, pairs_for_detection, precision_curve, CurvatureDetection, PlateauWindow,
    PrecisionPoint, MIN_REPEATS,
};

use crate::error::{Error, Result};
use crate::interferometer::RateScan;
use crate::protocol::{run_scenario, Scenario};
use crate::scalar::{lit, to_f64, Real};

/// Detector statistics applied on top of the ideal coincidence probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountingConfig {
    /// Pairs sent per delay setting.
    pub pairs_per_point: u64,
    /// Scale `p_max` on the coincidence probability.
    pub efficiency: f64,
    /// Accidental coincidence probability per pair.
    pub background: f64,
    pub seed: u64,
}

impl Default for CountingConfig {
    fn default() -> Self {
        Self {
            pairs_per_point: 100_000,
            efficiency: 1.0,
            background: 0.0,
            seed: 0,
        }
    }
}

impl CountingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pairs_per_point == 0 {
            return Err(Error::config("pairs_per_point must be at least 1"));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::config(format!(
                "efficiency must lie in (0, 1], got {}",
                self.efficiency
            )));
        }
        if !(self.background >= 0.0) || !(self.efficiency + self.background <= 1.0) {
            return Err(Error::config(format!(
                "background must be non-negative with efficiency + background <= 1, got {}",
                self.background
            )));
        }
        Ok(())
    }

    /// Per-pair detection probability `p_max·P_c + b`.
    pub fn detection_probability<T: Real>(&self, p_c: T) -> T {
        let p = lit::<T>(self.efficiency) * p_c + lit(self.background);
        p.max(T::zero()).min(T::one())
    }
}

/// What was recorded at one delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation<T> {
    /// Sampled coincidences out of `trials` pairs.
    Counts { counts: u64, trials: u64 },
    /// Infinite-statistics limit: the exact detection probability.
    Expected { rate: T, trials: u64 },
}

impl<T: Real> Observation<T> {
    pub fn trials(&self) -> u64 {
        match *self {
            Observation::Counts { trials, .. } | Observation::Expected { trials, .. } => trials,
        }
    }

    /// Coincidence count, fractional in the expected-value case.
    pub fn counts(&self) -> T {
        match *self {
            Observation::Counts { counts, .. } => lit(counts as f64),
            Observation::Expected { rate, trials } => rate * lit(trials as f64),
        }
    }

    /// Observed coincidence fraction.
    pub fn rate(&self) -> T {
        match *self {
            Observation::Counts { counts, trials } => {
                if trials == 0 {
                    T::zero()
                } else {
                    lit::<T>(counts as f64) / lit(trials as f64)
                }
            }
            Observation::Expected { rate, .. } => rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint<T> {
    pub delta_l_m: T,
    pub observation: Observation<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Simulated { seed: u64 },
    Analytic,
    Imported,
}

/// A measured (or simulated) coincidence record over a delay scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceScan<T> {
    pub points: Vec<ScanPoint<T>>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    delta_l_m: f64,
    counts: f64,
    trials: u64,
}

impl<T: Real> CoincidenceScan<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the lowest observed rate among points with trials; the first
    /// one wins ties.
    pub fn min_index(&self) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for (i, p) in self.points.iter().enumerate() {
            if p.observation.trials() == 0 {
                continue;
            }
            let r = p.observation.rate();
            if best.is_none_or(|(_, b)| r < b) {
                best = Some((i, r));
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn to_f64(&self) -> CoincidenceScan<f64> {
        CoincidenceScan {
            points: self
                .points
                .iter()
                .map(|p| ScanPoint {
                    delta_l_m: to_f64(p.delta_l_m),
                    observation: match p.observation {
                        Observation::Counts { counts, trials } => Observation::Counts { counts, trials },
                        Observation::Expected { rate, trials } => Observation::Expected {
                            rate: to_f64(rate),
                            trials,
                        },
                    },
                })
                .collect(),
            provenance: self.provenance,
        }
    }

    /// Same record with every delay shifted by `offset_m`.
    pub fn translated(&self, offset_m: T) -> Self {
        let mut out = self.clone();
        for p in &mut out.points {
            p.delta_l_m = p.delta_l_m + offset_m;
        }
        out
    }

    /// CSV with columns `delta_l_m,counts,trials`; expected-value scans
    /// write fractional counts.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(CsvRow {
                delta_l_m: to_f64(p.delta_l_m),
                counts: to_f64(p.observation.counts()),
                trials: p.observation.trials(),
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format of [`CoincidenceScan::write_csv`]. Whole counts
    /// become sampled observations, fractional ones expected values.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut points = Vec::new();
        for (i, row) in csv::Reader::from_reader(input).deserialize::<CsvRow>().enumerate() {
            let row = row?;
            let line = i + 2;
            if !(row.counts >= 0.0) || row.counts > row.trials as f64 || !row.delta_l_m.is_finite() {
                return Err(Error::Parse(format!(
                    "line {line}: counts must lie in [0, trials] with a finite delay"
                )));
            }
            let observation = if row.counts.fract() == 0.0 {
                Observation::Counts {
                    counts: row.counts as u64,
                    trials: row.trials,
                }
            } else {
                Observation::Expected {
                    rate: lit(row.counts / row.trials as f64),
                    trials: row.trials,
                }
            };
            points.push(ScanPoint {
                delta_l_m: lit(row.delta_l_m),
                observation,
            });
        }
        Ok(Self {
            points,
            provenance: Provenance::Imported,
        })
    }
}

/// Random stream for scan point `index`; independent of thread scheduling.
fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Binomial counts drawn around a noise-free rate scan.
pub fn sample_counts<T: Real>(rates: &RateScan<T>, cc: &CountingConfig) -> Result<CoincidenceScan<T>> {
    cc.validate()?;
    let points = rates
        .points
        .par_iter()
        .enumerate()
        .map(|(i, rp)| {
            let p = to_f64(cc.detection_probability(rp.p_c));
            let dist = Binomial::new(cc.pairs_per_point, p)
                .map_err(|e| Error::domain(format!("detection probability {p}: {e}")))?;
            let counts = dist.sample(&mut point_rng(cc.seed, i));
            Ok(ScanPoint {
                delta_l_m: rp.delta_l_m,
                observation: Observation::Counts {
                    counts,
                    trials: cc.pairs_per_point,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoincidenceScan {
        points,
        provenance: Provenance::Simulated { seed: cc.seed },
    })
}

/// Expected-value record of a rate scan (no sampling noise).
pub fn expected_counts<T: Real>(rates: &RateScan<T>, cc: &CountingConfig) -> Result<CoincidenceScan<T>> {
    cc.validate()?;
    Ok(CoincidenceScan {
        points: rates
            .points
            .iter()
            .map(|rp| ScanPoint {
                delta_l_m: rp.delta_l_m,
                observation: Observation::Expected {
                    rate: cc.detection_probability(rp.p_c),
                    trials: cc.pairs_per_point,
                },
            })
            .collect(),
        provenance: Provenance::Analytic,
    })
}

/// Seeded coincidence counts over the scenario's delay scan.
pub fn simulate_scan<T: Real>(s: &Scenario<T>, cc: &CountingConfig) -> Result<CoincidenceScan<T>> {
    let (_, rates) = run_scenario(s)?;
    sample_counts(&rates, cc)
}

/// Infinite-statistics counterpart of [`simulate_scan`].
pub fn analytic_scan<T: Real>(s: &Scenario<T>, cc: &CountingConfig) -> Result<CoincidenceScan<T>> {
    let (_, rates) = run_scenario(s)?;
    expected_counts(&rates, cc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::RatePoint;

    fn flat_rates(n: usize, p_c: f64) -> RateScan<f64> {
        RateScan {
            points: (0..n)
                .map(|i| RatePoint {
                    delta_l_m: i as f64,
                    p_c,
                })
                .collect(),
        }
    }

    #[test]
    fn config_validation() {
        assert!(CountingConfig::default().validate().is_ok());
        let bad = [
            CountingConfig {
                pairs_per_point: 0,
                ..Default::default()
            },
            CountingConfig {
                efficiency: 0.0,
                ..Default::default()
            },
            CountingConfig {
                efficiency: 0.9,
                background: 0.2,
                ..Default::default()
            },
            CountingConfig {
                background: -1e-3,
                efficiency: 0.5,
                ..Default::default()
            },
        ];
        for cc in bad {
            assert!(cc.validate().is_err(), "{cc:?}");
        }
    }

    #[test]
    fn zero_probability_gives_zero_counts() {
        let scan = sample_counts(&flat_rates(50, 0.0), &CountingConfig::default()).unwrap();
        assert!(scan
            .points
            .iter()
            .all(|p| p.observation == Observation::Counts { counts: 0, trials: 100_000 }));
    }

    #[test]
    fn plateau_rate_within_binomial_spread() {
        let cc = CountingConfig {
            pairs_per_point: 1_000_000,
            efficiency: 0.5,
            seed: 7,
            ..Default::default()
        };
        let scan = sample_counts(&flat_rates(20, 1.0 - 5.7e-8), &cc).unwrap();
        let sd = (0.25f64 / 1e6).sqrt();
        for p in &scan.points {
            assert!((p.observation.rate() - 0.5).abs() < 5.0 * sd);
        }
    }

    #[test]
    fn seeded_scans_are_reproducible() {
        let cc = CountingConfig {
            seed: 42,
            ..Default::default()
        };
        let rates = flat_rates(101, 0.3);
        let a = sample_counts(&rates, &cc).unwrap();
        let b = sample_counts(&rates, &cc).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_csv(&mut x).unwrap();
        b.write_csv(&mut y).unwrap();
        assert_eq!(x, y);
        let c = sample_counts(&rates, &CountingConfig { seed: 43, ..cc }).unwrap();
        assert_ne!(a, c);
        // Streams are per point, so a prefix scan sees the same draws.
        let short = sample_counts(&flat_rates(10, 0.3), &cc).unwrap();
        assert_eq!(short.points[..], a.points[..10]);
    }

    #[test]
    fn csv_round_trip() {
        let cc = CountingConfig {
            pairs_per_point: 1000,
            seed: 3,
            ..Default::default()
        };
        let rates = flat_rates(5, 0.25);
        let sampled = sample_counts(&rates, &cc).unwrap();
        let mut buf = Vec::new();
        sampled.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("delta_l_m,counts,trials\n"));
        let back = CoincidenceScan::<f64>::read_csv(&buf[..]).unwrap();
        assert_eq!(back.points, sampled.points);
        assert_eq!(back.provenance, Provenance::Imported);

        let expected = expected_counts(&flat_rates(3, 0.3333), &cc).unwrap();
        let mut buf = Vec::new();
        expected.write_csv(&mut buf).unwrap();
        let back = CoincidenceScan::<f64>::read_csv(&buf[..]).unwrap();
        assert!((back.points[0].observation.rate() - 0.3333).abs() < 1e-15);

        let bad = "delta_l_m,counts,trials\n0.0,11,10\n";
        let err = CoincidenceScan::<f64>::read_csv(bad.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn min_index_skips_empty_points() {
        let scan = CoincidenceScan::<f64> {
            points: vec![
                ScanPoint {
                    delta_l_m: 0.0,
                    observation: Observation::Counts { counts: 0, trials: 0 },
                },
                ScanPoint {
                    delta_l_m: 1.0,
                    observation: Observation::Counts { counts: 3, trials: 10 },
                },
                ScanPoint {
                    delta_l_m: 2.0,
                    observation: Observation::Counts { counts: 3, trials: 10 },
                },
            ],
            provenance: Provenance::Analytic,
        };
        assert_eq!(scan.min_index(), Some(1));
    }
}
