//! Environment spectra and decoherence functions.
//!
//! The environment starts in a frequency distribution `|χ(ω)|²` built from two
//! Gaussians of common width `σ`, centred at `μ₁` and `μ₂ = μ₁ + δω`, with
//! weights `1/(1+A)` and `A/(1+A)`. Coupling a qubit to it for a time `τ`
//! multiplies the `⟨L|ρ|R⟩` coherence by the decoherence function
//!
//! ```text
//! κ(τ) = ∫ dω e^{iΔn ω τ} |χ(ω)|²
//!      = e^{-σ²(Δn τ)²/2} (e^{iμ₁Δnτ} + A e^{iμ₂Δnτ}) / (1 + A).
//! ```
//!
//! The frequency integral runs over the whole real line. For the parameter
//! regimes of interest (`μ₁ ≫ σ`) the mass at negative frequency is below
//! `1e-30`, so the closed form is used as exact.
//!
//! The Gaussian exponent is the normalizable `-(ω-μ)²/(2σ²)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::PanelRule;

/// Terms of the theta series are dropped once they fall below this value.
pub const THETA_TRUNCATION: f64 = 1e-15;

/// Target accuracy of the direct quadrature of the decoherence integral.
pub const QUADRATURE_TOLERANCE: f64 = 1e-9;

const THETA_MAX_TERMS: usize = 1_000_000;

/// Anything that can be averaged against `e^{iωs}`.
///
/// `characteristic(s)` returns `∫ dω |χ(ω)|² e^{iωs}`; decoherence
/// functions evaluate it at `s = Δn·τ`.
pub trait Spectrum {
    fn characteristic(&self, s: f64) -> Complex64;
}

impl<T: Spectrum + ?Sized> Spectrum for &T {
    fn characteristic(&self, s: f64) -> Complex64 {
        (**self).characteristic(s)
    }
}

/// Two-Gaussian environment population distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumParams {
    /// Relative weight `A ∈ [0, 1]` of the second peak.
    pub amplitude_ratio: f64,
    /// Common width `σ > 0`.
    pub width: f64,
    /// Centre `μ₁` of the first peak.
    pub center: f64,
    /// Peak separation `δω ≥ 0`, so `μ₂ = μ₁ + δω`.
    pub peak_separation: f64,
}

impl SpectrumParams {
    pub fn new(amplitude_ratio: f64, width: f64, center: f64, peak_separation: f64) -> Result<Self> {
        ensure_finite("A", amplitude_ratio)?;
        ensure_finite("sigma", width)?;
        ensure_finite("mu1", center)?;
        ensure_finite("delta_omega", peak_separation)?;
        if !(0.0..=1.0).contains(&amplitude_ratio) {
            return Err(Error::Domain(format!("A must lie in [0, 1], got {amplitude_ratio}")));
        }
        if width <= 0.0 {
            return Err(Error::Domain(format!("sigma must be positive, got {width}")));
        }
        if peak_separation < 0.0 {
            return Err(Error::Domain(format!(
                "delta_omega must be non-negative, got {peak_separation}"
            )));
        }
        Ok(Self { amplitude_ratio, width, center, peak_separation })
    }

    /// A single Gaussian (`A = 0`).
    pub fn single(width: f64, center: f64) -> Result<Self> {
        Self::new(0.0, width, center, 0.0)
    }

    pub fn second_center(&self) -> f64 {
        self.center + self.peak_separation
    }

    /// `Ω = δω / 2π`.
    pub fn omega(&self) -> f64 {
        self.peak_separation / TAU
    }

    /// Weights `(1/(1+A), A/(1+A))` of the two peaks.
    pub fn peak_weights(&self) -> (f64, f64) {
        let norm = 1.0 + self.amplitude_ratio;
        (1.0 / norm, self.amplitude_ratio / norm)
    }

    /// `[μ₁ - nσ, μ₂ + nσ]`.
    pub fn support(&self, n_sigma: f64) -> (f64, f64) {
        (self.center - n_sigma * self.width, self.second_center() + n_sigma * self.width)
    }

    fn density_unchecked(&self, omega: f64) -> f64 {
        let (w1, w2) = self.peak_weights();
        let norm = 1.0 / (self.width * TAU.sqrt());
        let g = |mu: f64| {
            let z = (omega - mu) / self.width;
            norm * (-0.5 * z * z).exp()
        };
        w1 * g(self.center) + w2 * g(self.second_center())
    }
}

impl Spectrum for SpectrumParams {
    fn characteristic(&self, s: f64) -> Complex64 {
        let (w1, w2) = self.peak_weights();
        let envelope = (-0.5 * (self.width * s).powi(2)).exp();
        let phase = |mu: f64| Complex64::from_polar(1.0, mu * s);
        (phase(self.center) * w1 + phase(self.second_center()) * w2) * envelope
    }
}

/// A finite set of environment frequencies with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpectrum {
    nodes: Vec<(f64, f64)>,
}

impl DiscreteSpectrum {
    pub fn new(nodes: Vec<(f64, f64)>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Domain("discrete spectrum needs at least one node".into()));
        }
        for &(omega, weight) in &nodes {
            ensure_finite("frequency", omega)?;
            if !(weight >= 0.0 && weight.is_finite()) {
                return Err(Error::Domain(format!("invalid weight {weight}")));
            }
        }
        let total: f64 = nodes.iter().map(|n| n.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { nodes })
    }

    /// Inverse-CDF stratification of a two-Gaussian spectrum.
    ///
    /// `total` frequencies are split evenly over the peaks that carry weight
    /// (one peak when `A = 0`); within a peak node `i` of `k` sits at the
    /// `(i + ½)/k` quantile and carries an equal share of that peak's weight.
    pub fn stratified(params: &SpectrumParams, total: usize) -> Result<Self> {
        let (w1, w2) = params.peak_weights();
        let peaks: Vec<(f64, f64)> = [(params.center, w1), (params.second_center(), w2)]
            .into_iter()
            .filter(|p| p.1 > 0.0)
            .collect();
        if total == 0 || total % peaks.len() != 0 {
            return Err(Error::Domain(format!(
                "{total} frequencies cannot be split evenly over {} peak(s)",
                peaks.len()
            )));
        }
        let per_peak = total / peaks.len();
        let mut nodes = Vec::with_capacity(total);
        for (mu, weight) in peaks {
            let normal = Normal::new(mu, params.width)
                .map_err(|e| Error::Domain(format!("invalid Gaussian: {e}")))?;
            for i in 0..per_peak {
                let p = (i as f64 + 0.5) / per_peak as f64;
                nodes.push((normal.inverse_cdf(p), weight / per_peak as f64));
            }
        }
        // the weights are exact shares; renormalise away summation rounding
        let sum: f64 = nodes.iter().map(|n| n.1).sum();
        for node in &mut nodes {
            node.1 /= sum;
        }
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

impl Spectrum for DiscreteSpectrum {
    fn characteristic(&self, s: f64) -> Complex64 {
        self.nodes
            .iter()
            .map(|&(omega, weight)| Complex64::from_polar(weight, omega * s))
            .sum()
    }
}

/// Coupling strength `Δn` and step duration `δt` of one dephasing unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingConfig {
    pub index_contrast: f64,
    pub step_duration: f64,
}

impl DephasingConfig {
    pub fn new(index_contrast: f64, step_duration: f64) -> Result<Self> {
        ensure_finite("delta_n", index_contrast)?;
        ensure_finite("delta_t", step_duration)?;
        if step_duration <= 0.0 {
            return Err(Error::Domain(format!("delta_t must be positive, got {step_duration}")));
        }
        Ok(Self { index_contrast, step_duration })
    }

    /// Builds the config whose step satisfies `δt·Ω·Δn = x`, i.e.
    /// `δt = x · 2π / (δω Δn)`.
    pub fn from_revival_units(index_contrast: f64, peak_separation: f64, x: f64) -> Result<Self> {
        let unit = TAU / (peak_separation * index_contrast);
        if !unit.is_finite() || unit <= 0.0 {
            return Err(Error::Domain(
                "revival units need positive delta_omega and delta_n".into(),
            ));
        }
        Self::new(index_contrast, x * unit)
    }

    /// `Ω̃ = 2π / (δt |Δn|)`; infinite without coupling.
    pub fn period(&self) -> f64 {
        TAU / (self.step_duration * self.index_contrast.abs())
    }

    /// Phase `θ(ω) = Δn δt ω` acquired by the `L`–`R` coherence in one step.
    pub fn phase(&self, omega: f64) -> f64 {
        self.index_contrast * self.step_duration * omega
    }

    /// `δt · Ω · Δn` for a given spectrum.
    pub fn revival_units(&self, params: &SpectrumParams) -> f64 {
        self.step_duration * params.omega() * self.index_contrast
    }
}

/// `|χ(ω)|²`.
pub fn spectral_density(params: &SpectrumParams, omega: f64) -> Result<f64> {
    ensure_finite("omega", omega)?;
    Ok(params.density_unchecked(omega))
}

/// `κ(τ) = ∫ dω e^{iΔn ω τ} |χ(ω)|²`.
pub fn decoherence_function<S: Spectrum + ?Sized>(
    spectrum: &S,
    index_contrast: f64,
    tau: f64,
) -> Result<Complex64> {
    ensure_finite("delta_n", index_contrast)?;
    ensure_finite("tau", tau)?;
    Ok(spectrum.characteristic(index_contrast * tau))
}

/// Direct composite Gauss–Legendre evaluation of the decoherence integral.
///
/// Independent of the closed form; used to check it.
pub fn decoherence_function_by_quadrature(
    params: &SpectrumParams,
    index_contrast: f64,
    tau: f64,
) -> Result<Complex64> {
    ensure_finite("delta_n", index_contrast)?;
    ensure_finite("tau", tau)?;
    let s = index_contrast * tau;
    let (lo, hi) = params.support(12.0);
    // panels no longer than σ/2 or a quarter wavelength of e^{iωs}
    let mut h = 0.5 * params.width;
    if s != 0.0 {
        h = h.min(0.25 * TAU / s.abs());
    }
    let panels = ((hi - lo) / h).ceil().max(1.0) as usize;
    let rule = PanelRule::new(24)?;
    Ok(crate::quadrature::composite_complex(&rule, lo, hi, panels, |omega| {
        Complex64::from_polar(params.density_unchecked(omega), omega * s)
    }))
}

/// Jacobi theta function `ϑ₃(u, q) = 1 + 2 Σ_{n≥1} q^{n²} cos(2nu)`.
pub fn theta3(u: f64, q: f64) -> Result<f64> {
    ensure_finite("u", u)?;
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Domain(format!("theta3 nome must lie in [0, 1), got {q}")));
    }
    let mut sum = 1.0;
    if q == 0.0 {
        return Ok(sum);
    }
    let ln_q = q.ln();
    for n in 1..=THETA_MAX_TERMS {
        let nf = n as f64;
        let term = 2.0 * (nf * nf * ln_q).exp();
        if term < THETA_TRUNCATION {
            return Ok(sum);
        }
        sum += term * (2.0 * nf * u).cos();
    }
    Err(Error::Numeric(format!("theta3 series did not converge for q = {q}")))
}

/// Flatness of a single Gaussian over one dephasing period:
/// `ϑ₃(π(½ − μ₁/Ω̃), e^{−2π²σ²/Ω̃²})`. Tends to 1 as `σ/Ω̃` grows.
pub fn flatness_factor(params: &SpectrumParams, config: &DephasingConfig) -> Result<f64> {
    if params.amplitude_ratio != 0.0 {
        return Err(Error::Unsupported(
            "flatness factor is only defined for a single Gaussian (A = 0)".into(),
        ));
    }
    let period = config.period();
    let q = (-2.0 * PI * PI * (params.width / period).powi(2)).exp();
    theta3(PI * (0.5 - params.center / period), q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_peak(a: f64) -> SpectrumParams {
        SpectrumParams::new(a, 1.0, 100.0, 9.0).unwrap()
    }

    #[test]
    fn single_peak_height() {
        let p = SpectrumParams::single(0.7, 3.0).unwrap();
        let peak = spectral_density(&p, 3.0).unwrap();
        assert_abs_diff_eq!(peak, 1.0 / (0.7 * TAU.sqrt()), epsilon = 1e-15);
    }

    #[test]
    fn symmetric_peaks_for_equal_weights() {
        let p = two_peak(1.0);
        let d1 = spectral_density(&p, p.center).unwrap();
        let d2 = spectral_density(&p, p.second_center()).unwrap();
        assert_abs_diff_eq!(d1, d2, epsilon = 1e-15);
    }

    #[test]
    fn standard_normal_at_one() {
        let p = SpectrumParams::single(1.0, 0.0).unwrap();
        let direct = (-0.5f64).exp() / TAU.sqrt();
        assert_abs_diff_eq!(spectral_density(&p, 1.0).unwrap(), direct, epsilon = 1e-16);
        assert_abs_diff_eq!(direct, 0.24197, epsilon = 1e-5);
    }

    #[test]
    fn density_rejects_non_finite_frequency() {
        assert!(spectral_density(&two_peak(0.5), f64::NAN).is_err());
    }

    #[test]
    fn normalization_by_quadrature() {
        for a in [0.0, 0.3, 1.0] {
            let p = two_peak(a);
            let rule = PanelRule::new(32).unwrap();
            let (lo, hi) = p.support(12.0);
            let total = crate::quadrature::composite_complex(&rule, lo.max(0.0), hi, 80, |w| {
                Complex64::new(spectral_density(&p, w).unwrap(), 0.0)
            });
            assert_abs_diff_eq!(total.re, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn kappa_at_zero_is_one() {
        let k = decoherence_function(&two_peak(0.4), 0.009, 0.0).unwrap();
        assert_abs_diff_eq!(k.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn single_gaussian_kappa_modulus() {
        let p = SpectrumParams::single(1.3, 50.0).unwrap();
        let mut previous = 1.0;
        for i in 1..50 {
            let tau = 10.0 * i as f64;
            let k = decoherence_function(&p, 0.009, tau).unwrap();
            let expected = (-0.5 * (1.3 * 0.009 * tau).powi(2)).exp();
            assert_abs_diff_eq!(k.norm(), expected, epsilon = 1e-14);
            assert!(k.norm() < previous);
            previous = k.norm();
            let quad = decoherence_function_by_quadrature(&p, 0.009, tau).unwrap();
            assert!((quad - k).norm() < QUADRATURE_TOLERANCE);
        }
    }

    #[test]
    fn first_revival_height() {
        let p = two_peak(1.0);
        let dn = 0.009;
        let t1 = TAU / (p.peak_separation * dn);
        let k = decoherence_function(&p, dn, t1).unwrap();
        let expected = (-0.5 * (TAU / 9.0).powi(2)).exp();
        assert_abs_diff_eq!(k.norm(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 0.7837, epsilon = 1e-4);
        let quad = decoherence_function_by_quadrature(&p, dn, t1).unwrap();
        assert!((quad.norm() - expected).abs() < 1e-9);
    }

    #[test]
    fn closed_form_matches_quadrature_on_grid() {
        for a in [0.0, 0.5, 1.0] {
            let p = two_peak(a);
            let dn = 0.009;
            let span = 4.0 * TAU / (p.peak_separation * dn);
            for i in 0..100 {
                let tau = span * i as f64 / 99.0;
                let closed = decoherence_function(&p, dn, tau).unwrap();
                let quad = decoherence_function_by_quadrature(&p, dn, tau).unwrap();
                assert!((closed - quad).norm() < 1e-9, "A={a} tau={tau}");
            }
        }
    }

    #[test]
    fn theta3_values() {
        assert_eq!(theta3(0.3, 0.0).unwrap(), 1.0);
        let q: f64 = 0.2;
        let series = 1.0 + 2.0 * q + 2.0 * q.powi(4) + 2.0 * q.powi(9) + 2.0 * q.powi(16);
        assert_abs_diff_eq!(theta3(0.0, q).unwrap(), series, epsilon = 1e-12);
        // 1 - 2(0.1) + 2(0.1)^4 - 2(0.1)^9 + ...
        let direct = 1.0 - 0.2 + 2e-4 - 2e-9 + 2e-16;
        assert_abs_diff_eq!(theta3(PI / 2.0, 0.1).unwrap(), direct, epsilon = 1e-15);
        assert_abs_diff_eq!(direct, 0.8002, epsilon = 1e-4);
        assert!(theta3(0.0, 1.0).is_err());
        assert!(theta3(0.0, -0.1).is_err());
    }

    #[test]
    fn flatness_near_one_when_period_matches_width() {
        let p = SpectrumParams::single(1.0, 37.3).unwrap();
        // period Ω̃ = 2π/(δt Δn) = σ
        let cfg = DephasingConfig::new(0.01, TAU / 0.01).unwrap();
        assert_abs_diff_eq!(cfg.period(), 1.0, epsilon = 1e-12);
        let f = flatness_factor(&p, &cfg).unwrap();
        assert!((f - 1.0).abs() < 1e-8);
    }

    #[test]
    fn flatness_breaks_down_for_narrow_spectra() {
        let cfg = DephasingConfig::new(0.01, TAU / 0.01).unwrap();
        let mut previous = 1.0;
        for width in [0.5, 0.3, 0.2, 0.1] {
            // μ₁/Ω̃ = ½ puts the theta argument at u = 0
            let p = SpectrumParams::single(width, 0.5).unwrap();
            let f = flatness_factor(&p, &cfg).unwrap();
            assert!(f > previous);
            previous = f;
        }
        assert!(previous > 2.0);
    }

    #[test]
    fn flatness_rejects_two_peaks() {
        let cfg = DephasingConfig::new(0.01, 1.0).unwrap();
        assert!(matches!(flatness_factor(&two_peak(0.5), &cfg), Err(Error::Unsupported(_))));
    }

    #[test]
    fn dephasing_period_shifts_phase_by_two_pi() {
        let cfg = DephasingConfig::new(0.009, 3.7).unwrap();
        let w = 12.34;
        assert_abs_diff_eq!(cfg.phase(w + cfg.period()), cfg.phase(w) + TAU, epsilon = 1e-12);
    }

    #[test]
    fn stratified_nodes_are_normalized() {
        let d = DiscreteSpectrum::stratified(&two_peak(0.5), 16).unwrap();
        assert_eq!(d.len(), 16);
        let total: f64 = d.nodes().iter().map(|n| n.1).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
        assert!(DiscreteSpectrum::stratified(&two_peak(0.5), 7).is_err());
        assert_eq!(DiscreteSpectrum::stratified(&two_peak(0.0), 7).unwrap().len(), 7);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(SpectrumParams::new(1.5, 1.0, 0.0, 1.0).is_err());
        assert!(SpectrumParams::new(0.5, 0.0, 0.0, 1.0).is_err());
        assert!(SpectrumParams::new(0.5, 1.0, 0.0, -1.0).is_err());
        assert!(DephasingConfig::new(0.01, 0.0).is_err());
    }
}
