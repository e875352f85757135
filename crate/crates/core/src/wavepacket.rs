//! Photon spectral amplitudes, their gravitational distortion, and the
//! channel overlap between sent and received packets.
//!
//! Gaussian packets use the amplitude
//! `F(ω) = (2πσ²)^{-1/4} exp(-(ω-ω₀)²/(4σ²))`, so `|F|²` is a normalized
//! Gaussian of variance `σ²`. Only with this convention does the general
//! coincidence integral reduce to the closed-form dip `1 - exp(-2σ²δ²/c²)`.
//!
//! Evaluation is always done in offsets from a caller-chosen origin: at
//! optical frequencies (~1e15 Hz) the absolute value has an ulp of ~0.1 Hz,
//! which would otherwise swamp the ~1e4 Hz gravitational peak shift.

use std::io::Read;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::CompositeGaussLegendre;
use crate::scalar::{lit, Real};
use crate::spacetime::{Direction, SpacetimeConfig};
use crate::spline::CubicSpline;

/// Half-width, in units of σ, of the window over which Gaussians are integrated.
pub const GAUSSIAN_WINDOW_SIGMAS: f64 = 10.0;
/// Minimum `peak/σ` so the negative-frequency tail is negligible.
pub const MIN_PEAK_OVER_SIGMA: f64 = 8.0;
/// Allowed departure of a tabulated packet from unit norm.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket<T> {
    peak_hz: T,
    sigma_hz: T,
    /// Peak shift kept apart from `peak_hz`, so it is not rounded to the
    /// spacing of optical frequencies.
    #[serde(default)]
    detuning_hz: T,
}

impl<T: Real> GaussianPacket<T> {
    pub fn new(peak_hz: T, sigma_hz: T) -> Result<Self> {
        if !(sigma_hz > T::zero()) || !sigma_hz.is_finite() {
            return Err(Error::domain(format!("Gaussian width must be positive, got {sigma_hz}")));
        }
        if !(peak_hz >= sigma_hz * lit(MIN_PEAK_OVER_SIGMA)) || !peak_hz.is_finite() {
            return Err(Error::domain(format!(
                "Gaussian peak {peak_hz} Hz must be at least {MIN_PEAK_OVER_SIGMA} widths ({sigma_hz} Hz) above zero"
            )));
        }
        Ok(Self {
            peak_hz,
            sigma_hz,
            detuning_hz: T::zero(),
        })
    }

    pub fn peak_hz(&self) -> T {
        self.peak_hz + self.detuning_hz
    }

    pub fn sigma_hz(&self) -> T {
        self.sigma_hz
    }

    fn prefactor(&self) -> T {
        (T::TAU() * self.sigma_hz * self.sigma_hz).powf(lit(-0.25))
    }

    /// Amplitude at `origin + u`.
    pub fn amplitude_offset(&self, origin: T, u: T) -> T {
        let d = u - ((self.peak_hz - origin) + self.detuning_hz);
        self.prefactor() * (-(d * d) / (lit::<T>(4.0) * self.sigma_hz * self.sigma_hz)).exp()
    }

    /// Integration window `[peak - 10σ, peak + 10σ]`, clipped at zero frequency.
    pub fn window(&self) -> (T, T) {
        let w = self.sigma_hz * lit(GAUSSIAN_WINDOW_SIGMAS);
        let peak = self.peak_hz();
        ((peak - w).max(T::zero()), peak + w)
    }

    /// Peak and width both scaled by `1 + shift`.
    pub fn rescaled(&self, shift: T) -> Self {
        Self {
            peak_hz: self.peak_hz,
            sigma_hz: self.sigma_hz + self.sigma_hz * shift,
            detuning_hz: self.detuning_hz + self.peak_hz() * shift,
        }
    }
}

/// Complex amplitude sampled on a strictly increasing frequency grid and
/// interpolated by natural cubic splines; zero outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPacket<T> {
    re: CubicSpline<T>,
    im: CubicSpline<T>,
}

impl<T: Real> TabulatedPacket<T> {
    /// Rejects packets whose norm is off by more than [`NORM_TOLERANCE`].
    pub fn new(grid: Vec<T>, amplitude: Vec<Complex<T>>) -> Result<Self> {
        let packet = Self::unnormalized(grid, amplitude)?;
        let norm = packet.norm_squared()?;
        if (norm - T::one()).abs() > lit(NORM_TOLERANCE) {
            return Err(Error::domain(format!(
                "tabulated packet has squared norm {norm}, expected 1 within {NORM_TOLERANCE:e}"
            )));
        }
        Ok(packet)
    }

    /// Rescales the samples to unit norm.
    pub fn normalized(grid: Vec<T>, amplitude: Vec<Complex<T>>) -> Result<Self> {
        let packet = Self::unnormalized(grid, amplitude)?;
        let norm = packet.norm_squared()?;
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::domain("tabulated packet has zero or non-finite norm"));
        }
        let g = norm.sqrt().recip();
        Ok(Self {
            re: packet.re.rescaled(T::one(), g),
            im: packet.im.rescaled(T::one(), g),
        })
    }

    fn unnormalized(grid: Vec<T>, amplitude: Vec<Complex<T>>) -> Result<Self> {
        if grid.len() != amplitude.len() {
            return Err(Error::domain("grid and amplitude lengths differ"));
        }
        if grid.first().is_some_and(|&g| !(g > T::zero())) {
            return Err(Error::domain("tabulated frequencies must be positive"));
        }
        let re = CubicSpline::new(grid.clone(), amplitude.iter().map(|a| a.re).collect())?;
        let im = CubicSpline::new(grid, amplitude.iter().map(|a| a.im).collect())?;
        Ok(Self { re, im })
    }

    /// Reads `frequency_hz, amplitude` or `frequency_hz, re, im` rows.
    /// A non-numeric first row is taken as a header.
    pub fn from_csv_reader<R: Read>(reader: R, normalize: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(false)
            .from_reader(reader);
        let mut grid = Vec::new();
        let mut amp = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(str::parse::<f64>).collect();
            let values = match parsed {
                Ok(v) => v,
                Err(_) if row == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", row + 1))),
            };
            let (f, a) = match values.as_slice() {
                [f, a] => (*f, Complex::new(lit(*a), T::zero())),
                [f, re, im] => (*f, Complex::new(lit(*re), lit(*im))),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected 2 or 3 columns, found {}",
                        row + 1,
                        values.len()
                    )))
                }
            };
            grid.push(lit(f));
            amp.push(a);
        }
        if normalize {
            Self::normalized(grid, amp)
        } else {
            Self::new(grid, amp)
        }
    }

    pub fn from_csv_path(path: impl AsRef<Path>, normalize: bool) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?, normalize)
    }

    pub fn grid(&self) -> &[T] {
        self.re.knots()
    }

    pub fn support(&self) -> (T, T) {
        (self.re.lower(), self.re.upper())
    }

    pub fn amplitude(&self, omega: T) -> Complex<T> {
        match (self.re.eval(omega), self.im.eval(omega)) {
            (Some(re), Some(im)) => Complex::new(re, im),
            _ => Complex::new(T::zero(), T::zero()),
        }
    }

    /// `∫|F|²`, exact for the interpolant (degree-6 pieces, 4-point rule).
    pub fn norm_squared(&self) -> Result<T> {
        let q = CompositeGaussLegendre::new(4, lit(1e-12)).with_initial_panels(1);
        q.integrate(|w| self.amplitude(w).norm_sqr(), self.grid())
    }

    /// `F'(ω) = √s · F(s ω)` with `s = 1/ratio`.
    fn frequency_scaled(&self, ratio: T) -> Self {
        let value_scale = ratio.sqrt().recip();
        Self {
            re: self.re.rescaled(ratio, value_scale),
            im: self.im.rescaled(ratio, value_scale),
        }
    }
}

/// A single-photon wave packet in the frequency domain.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralAmplitude<T> {
    Gaussian(GaussianPacket<T>),
    Tabulated(TabulatedPacket<T>),
}

impl<T: Real> SpectralAmplitude<T> {
    pub fn gaussian(peak_hz: T, sigma_hz: T) -> Result<Self> {
        Ok(Self::Gaussian(GaussianPacket::new(peak_hz, sigma_hz)?))
    }

    pub fn as_gaussian(&self) -> Option<&GaussianPacket<T>> {
        match self {
            Self::Gaussian(g) => Some(g),
            Self::Tabulated(_) => None,
        }
    }

    /// Amplitude at `origin + u`.
    pub fn amplitude_offset(&self, origin: T, u: T) -> Complex<T> {
        match self {
            Self::Gaussian(g) => Complex::new(g.amplitude_offset(origin, u), T::zero()),
            Self::Tabulated(t) => t.amplitude(origin + u),
        }
    }

    pub fn amplitude(&self, omega: T) -> Complex<T> {
        self.amplitude_offset(T::zero(), omega)
    }

    /// Frequency range carrying the packet.
    pub fn support(&self) -> (T, T) {
        match self {
            Self::Gaussian(g) => g.window(),
            Self::Tabulated(t) => t.support(),
        }
    }

    /// A representative frequency used as the origin for offset evaluation.
    pub fn anchor(&self) -> T {
        match self {
            Self::Gaussian(g) => g.peak_hz(),
            Self::Tabulated(t) => t.support().0,
        }
    }

    fn knots(&self) -> &[T] {
        match self {
            Self::Gaussian(_) => &[],
            Self::Tabulated(t) => t.grid(),
        }
    }

    pub fn norm_squared(&self) -> Result<T> {
        match self {
            Self::Gaussian(_) => Ok(T::one()),
            Self::Tabulated(t) => t.norm_squared(),
        }
    }
}

/// The packet received after travelling between the stations:
/// `F_recv(ω) = ⁴√s · F_sent(√s ω)` with `√s` the inverse of the frequency ratio
/// for `direction`. Gaussians keep their shape with peak and width scaled by
/// the ratio; the squared norm is preserved.
pub fn distort<T: Real>(
    packet: &SpectralAmplitude<T>,
    cfg: &SpacetimeConfig<T>,
    direction: Direction,
) -> Result<SpectralAmplitude<T>> {
    let shift = cfg.frequency_shift(direction)?;
    Ok(match packet {
        SpectralAmplitude::Gaussian(g) => SpectralAmplitude::Gaussian(g.rescaled(shift)),
        SpectralAmplitude::Tabulated(t) => {
            SpectralAmplitude::Tabulated(t.frequency_scaled(T::one() + shift))
        }
    })
}

fn overlap_domain<T: Real>(a: &SpectralAmplitude<T>, b: &SpectralAmplitude<T>) -> Option<(T, T)> {
    use SpectralAmplitude::*;
    let (a_lo, a_hi) = a.support();
    let (b_lo, b_hi) = b.support();
    let (lo, hi) = match (a, b) {
        (Gaussian(_), Gaussian(_)) => (a_lo.min(b_lo), a_hi.max(b_hi)),
        _ => (a_lo.max(b_lo), a_hi.min(b_hi)),
    };
    (hi > lo).then_some((lo, hi))
}

/// `∫ conj(F_ref(ω)) F_recv(ω) dω` by composite Gauss-Legendre quadrature.
///
/// Tabulated knots of both packets become panel breakpoints, so the
/// piecewise-polynomial interpolants are integrated on a merged grid.
pub fn overlap_complex<T: Real>(
    received: &SpectralAmplitude<T>,
    reference: &SpectralAmplitude<T>,
) -> Result<Complex<T>> {
    let Some((lo, hi)) = overlap_domain(received, reference) else {
        return Ok(Complex::new(T::zero(), T::zero()));
    };
    let origin = match (reference, received) {
        (SpectralAmplitude::Gaussian(g), _) | (_, SpectralAmplitude::Gaussian(g)) => g.peak_hz(),
        _ => lo,
    };
    let mut breaks: Vec<T> = received
        .knots()
        .iter()
        .chain(reference.knots())
        .copied()
        .filter(|&k| k > lo && k < hi)
        .map(|k| k - origin)
        .collect();
    breaks.push(lo - origin);
    breaks.push(hi - origin);
    breaks.sort_by(|x, y| x.partial_cmp(y).expect("finite knots"));
    breaks.dedup();

    let mut q = CompositeGaussLegendre::new(16, lit(1e-12));
    q.abs_tol = lit(1e-16);
    let product = |u: T| reference.amplitude_offset(origin, u).conj() * received.amplitude_offset(origin, u);
    let re = q.integrate(|u| product(u).re, &breaks)?;
    let im = q.integrate(|u| product(u).im, &breaks)?;
    Ok(Complex::new(re, im))
}

/// Magnitude of [`overlap_complex`]; the phase of the complex overlap is
/// dropped (it is zero for real amplitudes).
pub fn overlap_numeric<T: Real>(
    received: &SpectralAmplitude<T>,
    reference: &SpectralAmplitude<T>,
) -> Result<T> {
    Ok(overlap_complex(received, reference)?.norm())
}

fn check_overlap_args<T: Real>(theta: T, peak_hz: T, sigma_hz: T) -> Result<()> {
    if !(theta.abs() < T::one()) {
        return Err(Error::domain(format!("|theta| must be below one, got {theta}")));
    }
    if !(peak_hz > T::zero()) || !(sigma_hz > T::zero()) {
        return Err(Error::domain("peak and width must be positive"));
    }
    Ok(())
}

/// `ln Θ` for Gaussian packets, with `Δ = 1 + ϑ` on the uplink and `1 - ϑ`
/// on the downlink:
/// `ln Θ = ½ ln(1 - ϑ²/(1+Δ²)) - ϑ²ω₀²/(4σ²(1+Δ²))`.
pub fn ln_overlap_gaussian<T: Real>(theta: T, peak_hz: T, sigma_hz: T, leg: Direction) -> Result<T> {
    check_overlap_args(theta, peak_hz, sigma_hz)?;
    let delta = match leg {
        Direction::Up => T::one() + theta,
        Direction::Down => T::one() - theta,
    };
    let denom = T::one() + delta * delta;
    let th2 = theta * theta;
    let x = theta * peak_hz / sigma_hz;
    Ok(lit::<T>(0.5) * (-th2 / denom).ln_1p() - x * x / (lit::<T>(4.0) * denom))
}

/// Closed-form overlap `Θ = √(2Δ/(1+Δ²)) · exp(-ϑ²ω₀²/(4σ²(1+Δ²)))`.
pub fn overlap_gaussian<T: Real>(theta: T, peak_hz: T, sigma_hz: T, leg: Direction) -> Result<T> {
    Ok(ln_overlap_gaussian(theta, peak_hz, sigma_hz, leg)?.exp())
}

/// `(ϑω₀/σ)²`, the small parameter of the Gaussian overlap.
pub fn distortion_parameter<T: Real>(theta: T, peak_hz: T, sigma_hz: T) -> T {
    let x = theta * peak_hz / sigma_hz;
    x * x
}

/// `ϑ ≪ (ϑω₀/σ)² ≪ 1`, with "≪" taken as one order of magnitude.
/// Trivially satisfied when `ϑ = 0`.
pub fn regime_ok<T: Real>(theta: T, peak_hz: T, sigma_hz: T) -> bool {
    if theta == T::zero() {
        return true;
    }
    let q = distortion_parameter(theta, peak_hz, sigma_hz);
    let ten: T = lit(10.0);
    theta.abs() * ten <= q && q * ten <= T::one()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxOverlap<T> {
    pub value: T,
    /// False when the small-parameter ordering behind the approximation fails.
    pub regime_ok: bool,
}

/// Leading-order overlap `1 - ϑ²ω₀²/(8σ²)`.
pub fn overlap_approx<T: Real>(theta: T, peak_hz: T, sigma_hz: T) -> ApproxOverlap<T> {
    ApproxOverlap {
        value: T::one() - overlap_approx_deficit(theta, peak_hz, sigma_hz),
        regime_ok: regime_ok(theta, peak_hz, sigma_hz),
    }
}

/// `ϑ²ω₀²/(8σ²)`, the deficit of [`overlap_approx`] below one.
pub fn overlap_approx_deficit<T: Real>(theta: T, peak_hz: T, sigma_hz: T) -> T {
    distortion_parameter(theta, peak_hz, sigma_hz) / lit(8.0)
}

/// Frequency-entangled pair `∫dω F(ω₀+ω) |ω₀+ω⟩_I |ω₀-ω⟩_S` from a
/// monochromatic pump at `2ω₀`.
///
/// The amplitude is held over the idler frequency `ω₀ + ω`; the signal
/// partner sits at `2ω₀ - (ω₀ + ω)`, so the two always sum to `2ω₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonPairState<T> {
    pump_half_frequency_hz: T,
    detuning_amplitude: SpectralAmplitude<T>,
}

impl<T: Real> PhotonPairState<T> {
    pub fn new(pump_half_frequency_hz: T, detuning_amplitude: SpectralAmplitude<T>) -> Result<Self> {
        if !(pump_half_frequency_hz > T::zero()) || !pump_half_frequency_hz.is_finite() {
            return Err(Error::domain("pump half-frequency must be positive"));
        }
        match &detuning_amplitude {
            SpectralAmplitude::Gaussian(g) => {
                let off = (g.peak_hz() - pump_half_frequency_hz).abs();
                if off > pump_half_frequency_hz * lit(1e-12) {
                    return Err(Error::domain(format!(
                        "Gaussian pair spectrum must peak at the pump half-frequency {pump_half_frequency_hz} Hz, got {}",
                        g.peak_hz()
                    )));
                }
            }
            SpectralAmplitude::Tabulated(t) => {
                let (_, hi) = t.support();
                if !(hi < pump_half_frequency_hz * lit(2.0)) {
                    return Err(Error::domain(
                        "tabulated idler spectrum must stay below twice the pump half-frequency",
                    ));
                }
            }
        }
        Ok(Self {
            pump_half_frequency_hz,
            detuning_amplitude,
        })
    }

    pub fn gaussian(omega0_hz: T, sigma_hz: T) -> Result<Self> {
        Self::new(omega0_hz, SpectralAmplitude::gaussian(omega0_hz, sigma_hz)?)
    }

    pub fn pump_half_frequency_hz(&self) -> T {
        self.pump_half_frequency_hz
    }

    pub fn detuning_amplitude(&self) -> &SpectralAmplitude<T> {
        &self.detuning_amplitude
    }

    /// Width of a Gaussian pair spectrum.
    pub fn sigma_hz(&self) -> Option<T> {
        self.detuning_amplitude.as_gaussian().map(|g| g.sigma_hz())
    }

    /// `|F(ω₀ + u)|²`.
    pub fn density_at_detuning(&self, u: T) -> T {
        self.detuning_amplitude
            .amplitude_offset(self.pump_half_frequency_hz, u)
            .norm_sqr()
    }

    /// Detuning breakpoints covering the spectrum (knots for tabulated data).
    pub fn detuning_breakpoints(&self) -> Vec<T> {
        let w0 = self.pump_half_frequency_hz;
        match &self.detuning_amplitude {
            SpectralAmplitude::Gaussian(g) => {
                let w = g.sigma_hz() * lit(GAUSSIAN_WINDOW_SIGMAS);
                vec![(-w).max(-w0), w]
            }
            SpectralAmplitude::Tabulated(t) => t.grid().iter().map(|&k| k - w0).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::{GEO_RADIUS_M, LEO_RADIUS_M};

    fn gauss(peak: f64, sigma: f64) -> SpectralAmplitude<f64> {
        SpectralAmplitude::gaussian(peak, sigma).unwrap()
    }

    fn tabulated_gaussian(peak: f64, sigma: f64, n: usize) -> SpectralAmplitude<f64> {
        let lo = peak - 10.0 * sigma;
        let h = 20.0 * sigma / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
        let g = GaussianPacket::new(peak, sigma).unwrap();
        let amp = grid
            .iter()
            .map(|&w| Complex::new(g.amplitude_offset(0.0, w), 0.0))
            .collect();
        SpectralAmplitude::Tabulated(TabulatedPacket::normalized(grid, amp).unwrap())
    }

    #[test]
    fn gaussian_validation() {
        assert!(GaussianPacket::new(1.0, 0.0).is_err());
        assert!(GaussianPacket::new(7.9, 1.0).is_err());
        assert!(GaussianPacket::new(8.0, 1.0).is_ok());
        assert!(GaussianPacket::new(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn self_overlap_is_one() {
        let f = gauss(812e12, 1e8);
        assert!((overlap_numeric(&f, &f).unwrap() - 1.0).abs() < 1e-10);
        let t = tabulated_gaussian(50.0, 2.0, 201);
        assert!((overlap_numeric(&t, &t).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn separated_gaussians_overlap() {
        // closed form e^{-(6σ)²/(8σ²)} = e^{-4.5} = 0.01110899654
        let a = gauss(100.0, 1.0);
        let b = gauss(106.0, 1.0);
        let v = overlap_numeric(&a, &b).unwrap();
        assert!((v - 0.011_108_996_538_242_3).abs() < 1e-12, "{v}");
        assert!((overlap_numeric(&b, &a).unwrap() - v).abs() < 1e-15);
    }

    #[test]
    fn tabulated_norm_is_checked() {
        let grid = vec![1.0, 2.0, 3.0];
        let amp = vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)];
        assert!(TabulatedPacket::new(grid.clone(), amp.clone()).is_err());
        let t = TabulatedPacket::<f64>::normalized(grid, amp).unwrap();
        assert!((t.norm_squared().unwrap() - 1.0).abs() < 1e-14);
        assert!(TabulatedPacket::<f64>::normalized(vec![1.0, 2.0], vec![Complex::new(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn flat_distortion_is_identity() {
        let cfg = SpacetimeConfig::<f64>::flat();
        let f = gauss(700e12, 1e8);
        assert_eq!(distort(&f, &cfg, Direction::Up).unwrap(), f);
        let t = tabulated_gaussian(50.0, 2.0, 41);
        assert_eq!(distort(&t, &cfg, Direction::Down).unwrap(), t);
    }

    #[test]
    fn gaussian_distortion_scales_peak_and_width() {
        let cfg = SpacetimeConfig::earth(LEO_RADIUS_M).unwrap();
        let ratio = cfg.redshift_ratio().unwrap();
        let f = gauss(812e12, 1e8);
        let SpectralAmplitude::Gaussian(g) = distort(&f, &cfg, Direction::Up).unwrap() else {
            panic!("Gaussian stays Gaussian");
        };
        assert!((g.peak_hz() / (812e12 * ratio) - 1.0).abs() < 1e-15);
        assert!((g.sigma_hz() / (1e8 * ratio) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tabulated_distortion_preserves_norm_and_inverts() {
        // exaggerated geometry so the rescaling is visible
        let cfg = SpacetimeConfig::new(1.0e6, 6.0e6, 4.0e7).unwrap();
        let grid: Vec<f64> = (0..60).map(|i| 20.0 + i as f64 * 0.5).collect();
        let amp: Vec<Complex<f64>> = grid
            .iter()
            .map(|&w| Complex::new((-(w - 35.0).powi(2) / 20.0).exp(), 0.3 * (w / 7.0).sin() * (-(w - 35.0).powi(2) / 30.0).exp()))
            .collect();
        let t = SpectralAmplitude::Tabulated(TabulatedPacket::normalized(grid, amp).unwrap());
        let up = distort(&t, &cfg, Direction::Up).unwrap();
        assert!((up.norm_squared().unwrap() - 1.0).abs() < 1e-9);
        assert!(up.support().0 < t.support().0);
        let back = distort(&up, &cfg, Direction::Down).unwrap();
        for w in [22.0, 30.3, 35.0, 41.7, 49.0] {
            assert!((back.amplitude(w) - t.amplitude(w)).norm() < 1e-12);
        }
    }

    #[test]
    fn overlap_closed_form_examples() {
        assert_eq!(overlap_gaussian(0.0, 812e12, 1e8, Direction::Up).unwrap(), 1.0);
        // mpmath: 1 - Θ = 1.43315835e-8 at ϑ = 4.17e-11
        let th: f64 = overlap_gaussian(4.17e-11, 812e12, 1e8, Direction::Up).unwrap();
        assert!(((1.0 - th) / 1.433_158_35e-8 - 1.0).abs() < 1e-6, "{}", 1.0 - th);
        let approx = overlap_approx(4.17e-11_f64, 812e12, 1e8);
        assert!(approx.regime_ok);
        assert!(((1.0 - approx.value) / 1.433_13e-8 - 1.0).abs() < 1e-4);
        assert_eq!(overlap_approx(0.0, 812e12, 1e8).value, 1.0);
        assert!(overlap_gaussian(1.0, 1.0, 1.0, Direction::Up).is_err());
        assert!(overlap_gaussian(0.1, 1.0, 0.0, Direction::Up).is_err());
    }

    #[test]
    fn approx_tracks_closed_form_for_earth_orbits() {
        for rb in [LEO_RADIUS_M, GEO_RADIUS_M] {
            let theta = SpacetimeConfig::earth(rb).unwrap().theta().unwrap();
            let exact = overlap_gaussian(theta, 812e12, 1e8, Direction::Up).unwrap();
            let approx = overlap_approx(theta, 812e12, 1e8).value;
            assert!((approx - exact).abs() < 1e-3 * (1.0 - exact));
        }
    }

    #[test]
    fn regime_flag() {
        assert!(regime_ok(4.17e-11, 812e12, 1e8));
        assert!(!regime_ok(1e-3, 812e12, 1e8));
        assert!(!regime_ok(1e-14, 812e12, 1e8));
        assert!(!overlap_approx(1e-3, 812e12, 1e8).regime_ok);
    }

    #[test]
    fn legs_nearly_symmetric() {
        for theta in [-4e-10_f64, -4.17e-11, 1e-12, 6e-10] {
            let up = overlap_gaussian(theta, 812e12, 1e8, Direction::Up).unwrap();
            let down = overlap_gaussian(theta, 812e12, 1e8, Direction::Down).unwrap();
            assert!(((up - down) / up).abs() < 1e-6);
        }
    }

    #[test]
    fn overlap_decreases_with_distortion() {
        let mut last = 1.0;
        for k in 1..20 {
            let theta = -1e-11 * k as f64;
            let v = overlap_gaussian(theta, 812e12, 1e8, Direction::Up).unwrap();
            assert!(v < last && v > 0.0);
            last = v;
        }
    }

    #[test]
    fn pair_state_validation() {
        assert!(PhotonPairState::gaussian(812e12, 1e8).is_ok());
        let off = SpectralAmplitude::gaussian(812e12 + 1e6, 1e8).unwrap();
        assert!(PhotonPairState::new(812e12, off).is_err());
        let pair = PhotonPairState::gaussian(812e12, 1e8).unwrap();
        let peak = pair.density_at_detuning(0.0);
        assert!((peak - 1.0 / (2.0 * std::f64::consts::PI * 1e16).sqrt()).abs() < 1e-22);
        assert_eq!(pair.sigma_hz(), Some(1e8));
    }

    #[test]
    fn csv_loading_two_and_three_columns() {
        let two = "frequency_hz,amplitude\n1.0,0.0\n2.0,1.0\n3.0,0.0\n";
        let t = TabulatedPacket::<f64>::from_csv_reader(two.as_bytes(), true).unwrap();
        assert_eq!(t.grid(), &[1.0, 2.0, 3.0]);
        let three = "1.0,0.0,0.0\n2.0,0.5,0.5\n3.0,0.0,0.0\n";
        let t = TabulatedPacket::<f64>::from_csv_reader(three.as_bytes(), true).unwrap();
        assert!(t.amplitude(2.0).im > 0.0);
        let bad = "1.0,0.0\n2.0,abc\n";
        assert!(matches!(
            TabulatedPacket::<f64>::from_csv_reader(bad.as_bytes(), true),
            Err(Error::Parse(_))
        ));
    }
}
