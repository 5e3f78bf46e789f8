//! Spectrum-averaged powers of the Bloch transfer matrix.
//!
//! Every entry of `M(θ)` is a trigonometric polynomial of degree one, so
//! `M(θ)^m = Σ_{|l|≤m} c_l e^{ilθ}` exactly. Averaging over the spectrum
//! replaces `e^{ilθ(ω)}` by `κ(lδt)`:
//!
//! ```text
//! ∫ dω |χ(ω)|² M(θ(ω))^m = Σ_l c_l κ(lδt).
//! ```
//!
//! The [`Engine::Series`] route is this identity. [`Engine::Quadrature`]
//! integrates `M^m` directly over frequency, one dephasing period at a time,
//! and shares no code with the series. [`Engine::StrongLimit`] keeps only
//! `c_0`, the average over a single period, which is what remains when the
//! spectrum is flat on the scale of `Ω̃`.
//!
//! For the Hadamard control the strong-limit maps have a closed form in
//! partial sums of Catalan numbers,
//!
//! ```text
//! a_k = ½ Σ_{i≤k} (2i+1) C(i) / (−4)^i,     b_k = ½ Σ_{i≤k} C(i) / (−4)^i,
//! ```
//!
//! converging to `1 − 1/√2` and `√2 − 1`.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::quadrature::PanelRule;
use crate::qubit::{bloch_transfer_matrix, ControlParams, TransferMatrix3};
use crate::spectra::{DephasingConfig, Spectrum, SpectrumParams};

/// Largest series degree [`series_power`] will build.
pub const DEFAULT_DEGREE_CAP: usize = 4096;

/// Largest number of frequency nodes [`quadrature_map`] will evaluate.
pub const DEFAULT_NODE_BUDGET: usize = 20_000_000;

/// Averaged maps must come out real to this accuracy.
pub const REALITY_TOLERANCE: f64 = 1e-10;

/// Half-width of the quadrature support in units of `σ`.
pub const SUPPORT_SIGMAS: f64 = 8.0;

pub type CMat3 = [[Complex64; 3]; 3];

const CZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ZERO3: CMat3 = [[CZERO; 3]; 3];

fn cmat_mul(a: &CMat3, b: &CMat3) -> CMat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

fn cmat_add_assign(acc: &mut CMat3, x: &CMat3) {
    for i in 0..3 {
        for j in 0..3 {
            acc[i][j] += x[i][j];
        }
    }
}

/// How to evaluate `∫ dω |χ(ω)|² M(ω)^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Series,
    Quadrature,
    StrongLimit,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Series, Engine::Quadrature, Engine::StrongLimit];

    pub fn name(&self) -> &'static str {
        match self {
            Engine::Series => "series",
            Engine::Quadrature => "quadrature",
            Engine::StrongLimit => "strong-limit",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown engine `{s}` (series, quadrature, strong-limit)")))
    }
}

/// `Σ_{|l|≤d} c_l e^{ilθ}` with 3×3 complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigMatrixSeries {
    degree: usize,
    coeffs: Vec<CMat3>,
}

impl TrigMatrixSeries {
    pub fn identity() -> Self {
        let mut c = ZERO3;
        for (i, row) in c.iter_mut().enumerate() {
            row[i] = Complex64::new(1.0, 0.0);
        }
        Self { degree: 0, coeffs: vec![c] }
    }

    /// Builds a series from `2d + 1` coefficients ordered `c_{−d} … c_d`.
    pub fn from_coefficients(coeffs: Vec<CMat3>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::Domain("a series needs an odd number of coefficients".into()));
        }
        Ok(Self { degree: coeffs.len() / 2, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `c_l`, zero outside `[−d, d]`.
    pub fn coefficient(&self, l: i64) -> CMat3 {
        let idx = l + self.degree as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            ZERO3
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn evaluate(&self, theta: f64) -> CMat3 {
        let mut acc = ZERO3;
        for (idx, c) in self.coeffs.iter().enumerate() {
            let l = idx as f64 - self.degree as f64;
            let phase = Complex64::from_polar(1.0, l * theta);
            for i in 0..3 {
                for j in 0..3 {
                    acc[i][j] += c[i][j] * phase;
                }
            }
        }
        acc
    }

    /// Largest `|c_{−l} − conj(c_l)|`.
    pub fn reality_defect(&self) -> f64 {
        let d = self.degree as i64;
        let mut worst: f64 = 0.0;
        for l in -d..=d {
            let (a, b) = (self.coefficient(l), self.coefficient(-l));
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst.max((b[i][j] - a[i][j].conj()).norm());
                }
            }
        }
        worst
    }

    /// Product series: a matrix-valued polynomial convolution.
    pub fn mul(&self, other: &TrigMatrixSeries) -> TrigMatrixSeries {
        let degree = self.degree + other.degree;
        let mut coeffs = vec![ZERO3; 2 * degree + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                cmat_add_assign(&mut coeffs[i + j], &cmat_mul(a, b));
            }
        }
        TrigMatrixSeries { degree, coeffs }
    }

    fn real_part(c: &CMat3) -> Result<TransferMatrix3> {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                if c[i][j].im.abs() >= REALITY_TOLERANCE {
                    return Err(Error::Numeric(format!(
                        "averaged map entry ({i},{j}) has imaginary part {:e}",
                        c[i][j].im
                    )));
                }
                out[i][j] = c[i][j].re;
            }
        }
        Ok(TransferMatrix3(out))
    }
}

/// Degree-one series of `M(θ)`.
pub fn series_from_transfer(control: &ControlParams) -> TrigMatrixSeries {
    let ControlParams { alpha, beta, .. } = *control;
    let re = |x: f64| Complex64::new(x, 0.0);
    let im = |x: f64| Complex64::new(0.0, x);
    // cos θ → ½(e^{iθ} + e^{−iθ}),  sin θ → (e^{iθ} − e^{−iθ}) / 2i
    let plus: CMat3 = [
        [re(-0.5 * beta), im(0.5), re(0.5 * alpha)],
        [im(-0.5 * beta), re(-0.5), im(0.5 * alpha)],
        [CZERO; 3],
    ];
    let minus: CMat3 = plus.map(|row| row.map(|z| z.conj()));
    let zeroth: CMat3 = [[CZERO; 3], [CZERO; 3], [re(alpha), CZERO, re(beta)]];
    TrigMatrixSeries { degree: 1, coeffs: vec![minus, zeroth, plus] }
}

/// `s^m` by repeated convolution.
pub fn series_power(s: &TrigMatrixSeries, m: usize) -> Result<TrigMatrixSeries> {
    series_power_capped(s, m, DEFAULT_DEGREE_CAP)
}

pub fn series_power_capped(s: &TrigMatrixSeries, m: usize, cap: usize) -> Result<TrigMatrixSeries> {
    let degree = s.degree.checked_mul(m).filter(|&d| d <= cap).ok_or_else(|| {
        Error::Resource(format!("series degree {} x {m} exceeds cap {cap}", s.degree))
    })?;
    let mut acc = TrigMatrixSeries::identity();
    for _ in 0..m {
        acc = acc.mul(s);
    }
    debug_assert_eq!(acc.degree, degree);
    Ok(acc)
}

/// `Σ_l c_l κ(lδt)`, summed from `l = −d` upwards.
pub fn integrate_series_against_spectrum<S: Spectrum + ?Sized>(
    series: &TrigMatrixSeries,
    spectrum: &S,
    config: &DephasingConfig,
) -> Result<TransferMatrix3> {
    let mut acc = ZERO3;
    for (idx, c) in series.coeffs.iter().enumerate() {
        let l = idx as f64 - series.degree as f64;
        let kappa = spectrum.characteristic(config.index_contrast * l * config.step_duration);
        for i in 0..3 {
            for j in 0..3 {
                acc[i][j] += c[i][j] * kappa;
            }
        }
    }
    TrigMatrixSeries::real_part(&acc)
}

/// Series-engine maps for `0..=steps`, for any spectrum.
pub fn series_maps<S: Spectrum + ?Sized>(
    control: &ControlParams,
    steps: usize,
    spectrum: &S,
    config: &DephasingConfig,
) -> Result<Vec<TransferMatrix3>> {
    if steps > DEFAULT_DEGREE_CAP {
        return Err(Error::Resource(format!(
            "{steps} steps exceed the series degree cap {DEFAULT_DEGREE_CAP}"
        )));
    }
    let one = series_from_transfer(control);
    let mut power = TrigMatrixSeries::identity();
    let mut maps = Vec::with_capacity(steps + 1);
    for n in 0..=steps {
        maps.push(integrate_series_against_spectrum(&power, spectrum, config)?);
        if n < steps {
            power = power.mul(&one);
        }
    }
    Ok(maps)
}

/// Breakpoints of the quadrature: the support ends plus every multiple of
/// `Ω̃` inside it.
fn period_cuts(lo: f64, hi: f64, period: f64, budget: usize) -> Result<Vec<f64>> {
    let mut cuts = vec![lo];
    if period.is_finite() {
        let first = (lo / period).floor() + 1.0;
        let last = (hi / period).ceil() - 1.0;
        let count = (last - first + 1.0).max(0.0);
        if count > budget as f64 {
            return Err(Error::Resource(format!(
                "{count} dephasing periods in the support exceed the node budget {budget}"
            )));
        }
        for k in 0..count as usize {
            let cut = (first + k as f64) * period;
            if cut > lo && cut < hi {
                cuts.push(cut);
            }
        }
    }
    cuts.push(hi);
    Ok(cuts)
}

/// Quadrature maps for `0..=max_m` with a common node set.
///
/// The support `[μ₁ − 8σ, μ₂ + 8σ]` is cut at the multiples of `Ω̃`; each
/// piece is split into `max(⌈len/σ⌉, ⌈max_m·len/Ω̃⌉)` sub-panels carrying a
/// Gauss–Legendre rule of order `max(16, 2·max_m + 8)`.
pub fn quadrature_maps(
    control: &ControlParams,
    max_m: usize,
    params: &SpectrumParams,
    config: &DephasingConfig,
    budget: usize,
) -> Result<Vec<TransferMatrix3>> {
    let order = (2 * max_m + 8).max(16);
    let (lo, hi) = params.support(SUPPORT_SIGMAS);
    let period = config.period();
    let cuts = period_cuts(lo, hi, period, budget / order)?;
    let mut pieces = Vec::with_capacity(cuts.len());
    let mut nodes = 0usize;
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        let mut sub = (len / params.width).ceil().max(1.0);
        if period.is_finite() {
            sub = sub.max((max_m as f64 * len / period).ceil());
        }
        let sub = sub as usize;
        nodes = nodes.saturating_add(sub.saturating_mul(order));
        if nodes > budget {
            return Err(Error::Resource(format!(
                "quadrature needs more than {budget} frequency nodes"
            )));
        }
        pieces.push((w[0], w[1], sub));
    }
    let rule = PanelRule::new(order)?;
    let mut sums = vec![[[0.0; 3]; 3]; max_m + 1];
    for &(a, b, sub) in &pieces {
        let h = (b - a) / sub as f64;
        for p in 0..sub {
            let pa = a + h * p as f64;
            let pb = if p + 1 == sub { b } else { pa + h };
            for (omega, weight) in rule.mapped(pa, pb) {
                let w = weight * crate::spectra::spectral_density(params, omega)?;
                let step = bloch_transfer_matrix(control, config.phase(omega));
                let mut power = TransferMatrix3::IDENTITY;
                for (n, sum) in sums.iter_mut().enumerate() {
                    if n > 0 {
                        power = power * step;
                    }
                    for i in 0..3 {
                        for j in 0..3 {
                            sum[i][j] += w * power.0[i][j];
                        }
                    }
                }
            }
        }
    }
    Ok(sums.into_iter().map(TransferMatrix3).collect())
}

/// `∫ dω |χ(ω)|² M(ω)^m` by per-period Gauss–Legendre quadrature.
pub fn quadrature_map(
    control: &ControlParams,
    m: usize,
    params: &SpectrumParams,
    config: &DephasingConfig,
) -> Result<TransferMatrix3> {
    let maps = quadrature_maps(control, m, params, config, DEFAULT_NODE_BUDGET)?;
    Ok(maps[m])
}

/// Average of `M(θ)^m` over one period: the zeroth series coefficient.
pub fn strong_limit_map(control: &ControlParams, m: usize) -> Result<TransferMatrix3> {
    let power = series_power(&series_from_transfer(control), m)?;
    TrigMatrixSeries::real_part(&power.coefficient(0))
}

/// Strong-limit maps for `0..=steps`.
pub fn strong_limit_maps(control: &ControlParams, steps: usize) -> Result<Vec<TransferMatrix3>> {
    if steps > DEFAULT_DEGREE_CAP {
        return Err(Error::Resource(format!(
            "{steps} steps exceed the series degree cap {DEFAULT_DEGREE_CAP}"
        )));
    }
    let one = series_from_transfer(control);
    let mut power = TrigMatrixSeries::identity();
    let mut maps = Vec::with_capacity(steps + 1);
    for n in 0..=steps {
        maps.push(TrigMatrixSeries::real_part(&power.coefficient(0))?);
        if n < steps {
            power = power.mul(&one);
        }
    }
    Ok(maps)
}

/// Averaged maps for `0..=steps` with the chosen engine.
pub fn dynamical_maps(
    control: &ControlParams,
    steps: usize,
    params: &SpectrumParams,
    config: &DephasingConfig,
    engine: Engine,
) -> Result<Vec<TransferMatrix3>> {
    match engine {
        Engine::Series => series_maps(control, steps, params, config),
        Engine::Quadrature => quadrature_maps(control, steps, params, config, DEFAULT_NODE_BUDGET),
        Engine::StrongLimit => strong_limit_maps(control, steps),
    }
}

/// Catalan number `C(k) = binom(2k, k) / (k + 1)` in exact integer arithmetic.
pub fn catalan(k: i64) -> Result<u64> {
    if k < 0 {
        return Err(Error::Domain(format!("Catalan index must be non-negative, got {k}")));
    }
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        // C(i+1) = C(i) · 2(2i+1) / (i+2), always an exact division
        c = c * 2 * (2 * i + 1) / (i + 2);
        if c > u64::MAX as u128 {
            return Err(Error::Resource(format!("C({k}) does not fit in 64 bits")));
        }
    }
    Ok(c as u64)
}

/// Partial sums `a_k`, `b_k` of the strong-limit closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalanCoeffs {
    pub k: usize,
    pub a: f64,
    pub b: f64,
}

/// `a_i, b_i` for `i = 0..=k`.
pub fn catalan_coeff_table(k: usize) -> Vec<CatalanCoeffs> {
    let mut out = Vec::with_capacity(k + 1);
    // t_i = C(i) / (−4)^i
    let mut t = 1.0;
    let (mut sa, mut sb) = (0.0, 0.0);
    for i in 0..=k {
        sa += (2 * i + 1) as f64 * t;
        sb += t;
        out.push(CatalanCoeffs { k: i, a: 0.5 * sa, b: 0.5 * sb });
        t *= -((2 * i + 1) as f64) / (2 * (i + 2)) as f64;
    }
    out
}

pub fn catalan_coeffs(k: usize) -> CatalanCoeffs {
    catalan_coeff_table(k)[k]
}

/// `Λ_m` for the Hadamard control, assembled from Catalan partial sums.
pub fn strong_limit_closed_form(m: usize) -> TransferMatrix3 {
    match m {
        0 => return TransferMatrix3::IDENTITY,
        1 => return TransferMatrix3([[0.0; 3], [0.0; 3], [1.0, 0.0, 0.0]]),
        _ => {}
    }
    let half = m.div_ceil(2);
    let table = catalan_coeff_table(half);
    let coeff = |k: i64| -> (f64, f64) {
        if k < 0 {
            (0.0, 0.0)
        } else {
            let c = table[k as usize];
            (c.a, c.b)
        }
    };
    let j = half as i64;
    if m % 2 == 0 {
        let (a2, _) = coeff(j - 2);
        let (a1, b1) = coeff(j - 1);
        TransferMatrix3([[a2, 0.0, a1], [0.0, b1, 0.0], [a2, 0.0, a2]])
    } else {
        let (a2, b2) = coeff(j - 2);
        let (a3, _) = coeff(j - 3);
        TransferMatrix3([[a2, 0.0, a2], [0.0, b2, 0.0], [a3, 0.0, a2]])
    }
}

/// `lim_{m→∞} Λ_m`.
pub fn strong_limit_asymptote() -> TransferMatrix3 {
    let a = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
    let b = std::f64::consts::SQRT_2 - 1.0;
    TransferMatrix3([[a, 0.0, a], [0.0, b, 0.0], [a, 0.0, a]])
}

/// Half the trace norm of the difference of the normalized Choi matrices.
pub fn choi_distance(a: &TransferMatrix3, b: &TransferMatrix3) -> Result<f64> {
    let diff: Array2<Complex64> = a.choi_matrix() - b.choi_matrix();
    Ok(0.5 * linalg::trace_norm(&diff)?)
}

/// Distance between the exact averaged map and the strong-limit map after
/// `m` steps.
pub fn approximation_error(
    control: &ControlParams,
    m: usize,
    params: &SpectrumParams,
    config: &DephasingConfig,
) -> Result<f64> {
    Ok(approximation_errors(control, m, params, config)?[m])
}

/// [`approximation_error`] for `0..=steps`.
pub fn approximation_errors(
    control: &ControlParams,
    steps: usize,
    params: &SpectrumParams,
    config: &DephasingConfig,
) -> Result<Vec<f64>> {
    let exact = series_maps(control, steps, params, config)?;
    let limit = strong_limit_maps(control, steps)?;
    exact.iter().zip(&limit).map(|(e, l)| choi_distance(e, l)).collect()
}
