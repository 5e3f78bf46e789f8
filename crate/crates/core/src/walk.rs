//! The unitary Hadamard walk on the line.
//!
//! One step applies the Hadamard coin at every site and then moves the `L`
//! component one site left and the `R` component one site right:
//! `W = (|L⟩⟨L| ⊗ S + |R⟩⟨R| ⊗ S†)(C_H ⊗ I)` with `S|x⟩ = |x − 1⟩`.
//!
//! In quasi-momentum space `S|k⟩ = e^{ik}|k⟩`, so a step acts as
//! `M_k = diag(e^{ik}, e^{−ik}) C_H` with eigenvalues `e^{iν_k}` and
//! `−e^{−iν_k}`, where `sin k = √2 sin ν_k`. Starting from the origin with
//! coin `(c_L, c_R)` the amplitudes after `m` steps are
//!
//! ```text
//! c_L(x) = A_L c_L + A_R c_R,   c_R(x) = B_L c_L + B_R c_R,
//! A_L = α + β,   A_R = β + iγ,   B_L = β − iγ,   B_R = α − β,
//! ```
//!
//! each multiplied by the parity factor `(1 + (−1)^{m+x})/2`, with
//!
//! ```text
//! α = ∫ dk/2π e^{i(kx + mν_k)},
//! β = ∫ dk/2π e^{i(kx + mν_k)} cos k / √(1 + cos²k),
//! γ = ∫ dk/2π e^{i(kx + mν_k)} sin k / √(1 + cos²k).
//! ```

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::PanelRule;
use crate::qubit::{BlochVector, STATE_TOLERANCE};

/// Panel order of the quasi-momentum quadrature.
pub const AMPLITUDE_RULE_ORDER: usize = 16;

/// Largest change allowed when the quasi-momentum grid is doubled.
pub const AMPLITUDE_CONVERGENCE: f64 = 1e-9;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Normalized initial coin state `c_L|L⟩ + c_R|R⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinPair {
    pub left: Complex64,
    pub right: Complex64,
}

impl CoinPair {
    pub const LEFT: CoinPair = CoinPair { left: Complex64 { re: 1.0, im: 0.0 }, right: ZERO };
    pub const RIGHT: CoinPair = CoinPair { left: ZERO, right: Complex64 { re: 1.0, im: 0.0 } };

    pub fn new(left: Complex64, right: Complex64) -> Result<Self> {
        for z in [left, right] {
            ensure_finite("coin amplitude", z.re)?;
            ensure_finite("coin amplitude", z.im)?;
        }
        let norm = left.norm_sqr() + right.norm_sqr();
        if (norm - 1.0).abs() > STATE_TOLERANCE {
            return Err(Error::Domain(format!("coin state has squared norm {norm}, expected 1")));
        }
        Ok(Self { left, right })
    }

    /// `(|L⟩ + i|R⟩)/√2`, whose walk is left–right symmetric.
    pub fn symmetric() -> Self {
        Self { left: Complex64::new(FRAC_1_SQRT_2, 0.0), right: Complex64::new(0.0, FRAC_1_SQRT_2) }
    }

    /// Pure coin state with the given Bloch direction (normalized first).
    pub fn from_bloch(r: BlochVector) -> Result<Self> {
        let n = r.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain("Bloch direction must be a non-zero vector".into()));
        }
        let [x, y, z] = r.0.map(|c| c / n);
        let theta = z.clamp(-1.0, 1.0).acos();
        let phi = y.atan2(x);
        Ok(Self {
            left: Complex64::new((0.5 * theta).cos(), 0.0),
            right: Complex64::from_polar((0.5 * theta).sin(), phi),
        })
    }

    /// The orthogonal coin state `−c̄_R|L⟩ + c̄_L|R⟩`.
    pub fn orthogonal(&self) -> Self {
        Self { left: -self.right.conj(), right: self.left.conj() }
    }
}

/// Walk amplitudes on `[−m, m]` after `m` steps from the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    steps: usize,
    amplitudes: Vec<[Complex64; 2]>,
}

impl WalkState {
    pub fn origin(coin: CoinPair) -> Self {
        Self { steps: 0, amplitudes: vec![[coin.left, coin.right]] }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `(c_L(x), c_R(x))`, zero outside the support.
    pub fn amplitude(&self, x: i64) -> [Complex64; 2] {
        let idx = x + self.steps as i64;
        if idx < 0 || idx as usize >= self.amplitudes.len() {
            [ZERO; 2]
        } else {
            self.amplitudes[idx as usize]
        }
    }

    /// Dense amplitudes, site `x` at index `x + m`.
    pub fn amplitudes(&self) -> &[[Complex64; 2]] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|[l, r]| l.norm_sqr() + r.norm_sqr()).sum()
    }

    /// Flattened vector with coin index fastest: `2(x + m) + σ`.
    pub fn as_vector(&self) -> Vec<Complex64> {
        self.amplitudes.iter().flatten().copied().collect()
    }
}

/// One step of the Hadamard walk.
pub fn walk_step(state: &WalkState) -> WalkState {
    let m = state.steps;
    let mut next = vec![[ZERO; 2]; 2 * m + 3];
    let h = FRAC_1_SQRT_2;
    for (idx, &[l, r]) in state.amplitudes.iter().enumerate() {
        // old site x = idx − m sits at new index idx + 1
        next[idx][0] = (l + r) * h;
        next[idx + 2][1] = (l - r) * h;
    }
    WalkState { steps: m + 1, amplitudes: next }
}

pub fn walk_evolve(coin: CoinPair, m: usize) -> WalkState {
    (0..m).fold(WalkState::origin(coin), |s, _| walk_step(&s))
}

/// States after `0..=m` steps.
pub fn walk_trajectory(coin: CoinPair, m: usize) -> Vec<WalkState> {
    let mut out = Vec::with_capacity(m + 1);
    out.push(WalkState::origin(coin));
    for n in 0..m {
        let next = walk_step(&out[n]);
        out.push(next);
    }
    out
}

/// `ν_k = arcsin(sin k / √2)`.
pub fn dispersion_nu(k: f64) -> f64 {
    (k.sin() * FRAC_1_SQRT_2).asin()
}

/// `p(x) = |c_L(x)|² + |c_R(x)|²` over the sites allowed by parity.
pub fn position_distribution(state: &WalkState) -> Vec<(i64, f64)> {
    let m = state.steps as i64;
    (-m..=m)
        .step_by(2)
        .map(|x| {
            let [l, r] = state.amplitude(x);
            (x, l.norm_sqr() + r.norm_sqr())
        })
        .collect()
}

/// Propagator entries from the origin to `x` after `m` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkAmplitudes {
    pub a_l: Complex64,
    pub a_r: Complex64,
    pub b_l: Complex64,
    pub b_r: Complex64,
}

impl WalkAmplitudes {
    /// `(c_L(x), c_R(x))` for the given initial coin.
    pub fn apply(&self, coin: &CoinPair) -> [Complex64; 2] {
        [
            self.a_l * coin.left + self.a_r * coin.right,
            self.b_l * coin.left + self.b_r * coin.right,
        ]
    }
}

fn kspace_integrals(m: usize, x: i64, panels: usize, rule: &PanelRule) -> [Complex64; 3] {
    let h = 2.0 * PI / panels as f64;
    let mut acc = [ZERO; 3];
    for p in 0..panels {
        let a = -PI + h * p as f64;
        let b = if p + 1 == panels { PI } else { a + h };
        for (k, w) in rule.mapped(a, b) {
            let phase = Complex64::from_polar(w / (2.0 * PI), k * x as f64 + m as f64 * dispersion_nu(k));
            let (s, c) = k.sin_cos();
            let root = (1.0 + c * c).sqrt();
            acc[0] += phase;
            acc[1] += phase * (c / root);
            acc[2] += phase * (s / root);
        }
    }
    acc
}

/// Amplitudes from the quasi-momentum integrals.
///
/// Uses `4(m + 1)` panels of a 16-point rule and repeats with twice as many;
/// a change above [`AMPLITUDE_CONVERGENCE`] is reported as a numeric error.
pub fn walk_amplitudes_integral(m: usize, x: i64) -> Result<WalkAmplitudes> {
    if (m as i64 + x).rem_euclid(2) == 1 {
        return Ok(WalkAmplitudes { a_l: ZERO, a_r: ZERO, b_l: ZERO, b_r: ZERO });
    }
    let rule = PanelRule::new(AMPLITUDE_RULE_ORDER)?;
    let panels = 4 * (m + 1);
    let coarse = kspace_integrals(m, x, panels, &rule);
    let fine = kspace_integrals(m, x, 2 * panels, &rule);
    let change = coarse.iter().zip(&fine).map(|(c, f)| (c - f).norm()).fold(0.0, f64::max);
    if change > AMPLITUDE_CONVERGENCE {
        return Err(Error::Numeric(format!(
            "k-space integrals for m = {m}, x = {x} changed by {change:e} when the grid was doubled \
             ({panels} -> {} panels)",
            2 * panels
        )));
    }
    let [alpha, beta, gamma] = fine;
    let i = Complex64::new(0.0, 1.0);
    Ok(WalkAmplitudes {
        a_l: alpha + beta,
        a_r: beta + i * gamma,
        b_l: beta - i * gamma,
        b_r: alpha - beta,
    })
}
