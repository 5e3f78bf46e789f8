//! The Hadamard walk with a dephasing coin.
//!
//! After every step the coin picks up `e^{i n_σ ω δt}` from an environment
//! frequency `ω` drawn from `|χ(ω)|²`. A path reaching `x` after `n` steps
//! has made `(n − x)/2` left moves, so once the environment is traced out the
//! coherence between sites `x` and `y` is multiplied by
//!
//! ```text
//! f(y − x) = κ((y − x) δt / 2),
//! ```
//!
//! independently of the path. The walk populations are never touched. The
//! filter is checked against an explicit system–environment dilation in
//! [`dilation_oracle`].
//!
//! Densities are dense matrices indexed by `2(x + n) + σ`, `σ = 0` for `L`.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::qubit::{Mat2, STATE_TOLERANCE};
use crate::spectra::{DephasingConfig, DiscreteSpectrum, Spectrum};
use crate::walk::{walk_evolve, CoinPair, WalkState};

/// Smallest eigenvalue tolerated in a walk density.
pub const POSITIVITY_TOLERANCE: f64 = 1e-10;

/// Step limit of the dilation oracle.
pub const MAX_ORACLE_STEPS: usize = 6;

/// Frequency limit of the dilation oracle.
pub const MAX_ORACLE_FREQUENCIES: usize = 64;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Density matrix of the walk after `n` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkDensity {
    steps: usize,
    matrix: Array2<Complex64>,
}

impl WalkDensity {
    pub fn new(steps: usize, matrix: Array2<Complex64>) -> Result<Self> {
        let dim = 2 * (2 * steps + 1);
        if matrix.dim() != (dim, dim) {
            return Err(Error::Domain(format!(
                "walk density after {steps} steps must be {dim}x{dim}, got {:?}",
                matrix.dim()
            )));
        }
        Ok(Self { steps, matrix })
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_state(state: &WalkState) -> Self {
        let v = state.as_vector();
        let n = v.len();
        let matrix = Array2::from_shape_fn((n, n), |(a, b)| v[a] * v[b].conj());
        Self { steps: state.steps(), matrix }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    fn index(&self, x: i64) -> Option<usize> {
        let idx = x + self.steps as i64;
        (0..=2 * self.steps as i64).contains(&idx).then_some(idx as usize)
    }

    /// Coin block `ρ(x, y)`, zero outside the support.
    pub fn block(&self, x: i64, y: i64) -> Mat2 {
        match (self.index(x), self.index(y)) {
            (Some(i), Some(j)) => std::array::from_fn(|a| {
                std::array::from_fn(|b| self.matrix[[2 * i + a, 2 * j + b]])
            }),
            _ => [[ZERO; 2]; 2],
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.diag().sum()
    }

    /// `p(x) = tr ρ(x, x)` over the sites allowed by parity.
    pub fn position_distribution(&self) -> Vec<(i64, f64)> {
        let n = self.steps as i64;
        (-n..=n)
            .step_by(2)
            .map(|x| {
                let b = self.block(x, x);
                (x, (b[0][0] + b[1][1]).re)
            })
            .collect()
    }

    /// True when every block with `x ≠ y` is exactly zero.
    pub fn is_block_diagonal(&self) -> bool {
        self.matrix
            .indexed_iter()
            .all(|((a, b), z)| a / 2 == b / 2 || *z == ZERO)
    }

    /// The same state on the support of `steps ≥ self.steps()`.
    pub fn padded(&self, steps: usize) -> Result<Self> {
        if steps < self.steps {
            return Err(Error::Domain(format!("cannot shrink a {}-step density to {steps}", self.steps)));
        }
        let off = 2 * (steps - self.steps);
        let dim = 2 * (2 * steps + 1);
        let mut matrix = Array2::zeros((dim, dim));
        let inner = self.matrix.dim().0;
        matrix
            .slice_mut(ndarray::s![off..off + inner, off..off + inner])
            .assign(&self.matrix);
        Ok(Self { steps, matrix })
    }

    pub fn max_abs_diff(&self, other: &WalkDensity) -> Result<f64> {
        let (a, b) = common_support(self, other)?;
        Ok(a.matrix
            .iter()
            .zip(b.matrix.iter())
            .map(|(p, q)| (p - q).norm())
            .fold(0.0, f64::max))
    }

    /// Hermiticity and trace to `1e-12`, eigenvalues above `−1e-10`.
    pub fn validate(&self) -> Result<()> {
        linalg::check_hermitian(&self.matrix, STATE_TOLERANCE)?;
        let tr = self.trace();
        if (tr - 1.0).norm() > STATE_TOLERANCE {
            return Err(Error::Domain(format!("walk density has trace {tr}")));
        }
        let low = linalg::hermitian_eigenvalues(&self.matrix)?[0];
        if low < -POSITIVITY_TOLERANCE {
            return Err(Error::Domain(format!("walk density has eigenvalue {low:e}")));
        }
        Ok(())
    }
}

fn common_support(a: &WalkDensity, b: &WalkDensity) -> Result<(WalkDensity, WalkDensity)> {
    let n = a.steps.max(b.steps);
    Ok((a.padded(n)?, b.padded(n)?))
}

/// The diagonal blocks `ρ̃(x) = ρ(x, x)` of a block-diagonal walk density.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDensity {
    steps: usize,
    blocks: Vec<Mat2>,
}

impl BlockDensity {
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `ρ̃(x)`, zero outside the support.
    pub fn block(&self, x: i64) -> Mat2 {
        let idx = x + self.steps as i64;
        if idx < 0 || idx as usize >= self.blocks.len() {
            [[ZERO; 2]; 2]
        } else {
            self.blocks[idx as usize]
        }
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| (b[0][0] + b[1][1]).re).sum()
    }

    pub fn to_walk_density(&self) -> WalkDensity {
        let dim = 2 * self.blocks.len();
        let mut matrix = Array2::zeros((dim, dim));
        for (i, b) in self.blocks.iter().enumerate() {
            for a in 0..2 {
                for c in 0..2 {
                    matrix[[2 * i + a, 2 * i + c]] = b[a][c];
                }
            }
        }
        WalkDensity { steps: self.steps, matrix }
    }
}

/// Multiplier `f(d)` applied to coherences between sites `d` apart.
#[derive(Debug, Clone)]
pub struct DephasingFilter<S> {
    spectrum: S,
    config: DephasingConfig,
}

impl<S: Spectrum> DephasingFilter<S> {
    pub fn new(spectrum: S, config: DephasingConfig) -> Self {
        Self { spectrum, config }
    }

    /// `f(d) = κ(d δt / 2)`.
    pub fn value(&self, d: i64) -> Complex64 {
        let tau = 0.5 * d as f64 * self.config.step_duration;
        self.spectrum.characteristic(self.config.index_contrast * tau)
    }

    /// `ρ(x, y) ↦ f(y − x) ρ(x, y)` on the pure state `|ψ⟩⟨ψ|`.
    pub fn apply(&self, state: &WalkState) -> WalkDensity {
        let mut rho = WalkDensity::from_state(state);
        let sites = 2 * state.steps() + 1;
        let f: Vec<Complex64> = (0..sites as i64).map(|d| self.value(d)).collect();
        for ((a, b), z) in rho.matrix.indexed_iter_mut() {
            let d = (b / 2) as i64 - (a / 2) as i64;
            *z *= if d >= 0 { f[d as usize] } else { f[(-d) as usize].conj() };
        }
        rho
    }
}

/// Unitary walk followed by the dephasing filter.
pub fn open_walk_evolve<S: Spectrum + ?Sized>(
    coin: CoinPair,
    n: usize,
    spectrum: &S,
    config: &DephasingConfig,
) -> WalkDensity {
    DephasingFilter::new(spectrum, *config).apply(&walk_evolve(coin, n))
}

/// Explicit dilation: walker ⊗ environment evolved jointly, then the
/// environment traced out.
///
/// Each frequency `ω_j` carries amplitude `√w_j`; after the coin and shift
/// the `L` and `R` components pick up `e^{i n_L ω_j δt}` and
/// `e^{i n_R ω_j δt}` with `n_R = base_index`, `n_L = n_R + Δn`.
pub fn dilation_oracle(
    coin: CoinPair,
    n: usize,
    environment: &DiscreteSpectrum,
    config: &DephasingConfig,
    base_index: f64,
) -> Result<WalkDensity> {
    if n > MAX_ORACLE_STEPS {
        return Err(Error::Resource(format!("dilation oracle is limited to {MAX_ORACLE_STEPS} steps, got {n}")));
    }
    if environment.len() > MAX_ORACLE_FREQUENCIES {
        return Err(Error::Resource(format!(
            "dilation oracle is limited to {MAX_ORACLE_FREQUENCIES} frequencies, got {}",
            environment.len()
        )));
    }
    let sites = 2 * n + 1;
    let dim = 2 * sites;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let n_right = base_index;
    let n_left = base_index + config.index_contrast;
    let mut rho = Array2::<Complex64>::zeros((dim, dim));
    for &(omega, weight) in environment.nodes() {
        let phase_l = Complex64::from_polar(1.0, n_left * omega * config.step_duration);
        let phase_r = Complex64::from_polar(1.0, n_right * omega * config.step_duration);
        let mut psi = vec![ZERO; dim];
        psi[2 * n] = coin.left * weight.sqrt();
        psi[2 * n + 1] = coin.right * weight.sqrt();
        for _ in 0..n {
            let mut next = vec![ZERO; dim];
            for site in 0..sites {
                let (l, r) = (psi[2 * site], psi[2 * site + 1]);
                if l == ZERO && r == ZERO {
                    continue;
                }
                next[2 * (site - 1)] += (l + r) * h * phase_l;
                next[2 * (site + 1) + 1] += (l - r) * h * phase_r;
            }
            psi = next;
        }
        for a in 0..dim {
            for b in 0..dim {
                rho[[a, b]] += psi[a] * psi[b].conj();
            }
        }
    }
    Ok(WalkDensity { steps: n, matrix: rho })
}

/// Diagonal blocks of the unitary walk density: the limit `f(d) = δ_{d,0}`.
pub fn strong_dephasing_blocks(coin: CoinPair, m: usize) -> BlockDensity {
    let state = walk_evolve(coin, m);
    let blocks = state
        .amplitudes()
        .iter()
        .map(|&[l, r]| [[l * l.conj(), l * r.conj()], [r * l.conj(), r * r.conj()]])
        .collect();
    BlockDensity { steps: m, blocks }
}

/// `½ Σ_x tr|ρ̃₁(x) − ρ̃₂(x)|` using the 2×2 eigenvalue formula.
pub fn trace_distance_blocks(a: &BlockDensity, b: &BlockDensity) -> f64 {
    let n = a.steps.max(b.steps) as i64;
    let mut sum = 0.0;
    for x in -n..=n {
        let (p, q) = (a.block(x), b.block(x));
        let (lo, hi) = linalg::eigenvalues_2x2(
            (p[0][0] - q[0][0]).re,
            p[0][1] - q[0][1],
            (p[1][1] - q[1][1]).re,
        );
        sum += lo.abs() + hi.abs();
    }
    0.5 * sum
}

/// `½ tr|ρ₁ − ρ₂|`, zero-padding to a common support. Block-diagonal
/// inputs use the 2×2 formula, everything else the Jacobi solver.
pub fn trace_distance_walk(a: &WalkDensity, b: &WalkDensity) -> Result<f64> {
    if a.is_block_diagonal() && b.is_block_diagonal() {
        return Ok(trace_distance_blocks(&diagonal_blocks(a), &diagonal_blocks(b)));
    }
    trace_distance_walk_full(a, b)
}

/// `½ tr|ρ₁ − ρ₂|` through the full eigenvalue decomposition.
pub fn trace_distance_walk_full(a: &WalkDensity, b: &WalkDensity) -> Result<f64> {
    let (a, b) = common_support(a, b)?;
    let diff = &a.matrix - &b.matrix;
    Ok(0.5 * linalg::trace_norm(&diff)?)
}

fn diagonal_blocks(rho: &WalkDensity) -> BlockDensity {
    let sites = 2 * rho.steps + 1;
    let blocks = (0..sites)
        .map(|i| std::array::from_fn(|a| std::array::from_fn(|c| rho.matrix[[2 * i + a, 2 * i + c]])))
        .collect();
    BlockDensity { steps: rho.steps, blocks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::SpectrumParams;
    use crate::walk::position_distribution;
    use approx::assert_abs_diff_eq;

    fn two_peak() -> SpectrumParams {
        SpectrumParams::new(0.5, 1.0, 100.0, 9.0).unwrap()
    }

    fn config(x: f64) -> DephasingConfig {
        DephasingConfig::from_revival_units(0.009, 9.0, x).unwrap()
    }

    #[test]
    fn step_zero_is_the_initial_state() {
        let rho = open_walk_evolve(CoinPair::LEFT, 0, &two_peak(), &config(0.7));
        assert_eq!(rho.block(0, 0)[0][0], Complex64::new(1.0, 0.0));
        assert_eq!(rho.trace(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn filter_keeps_populations() {
        let coin = CoinPair::symmetric();
        for n in 0..=8 {
            let rho = open_walk_evolve(coin, n, &two_peak(), &config(0.3));
            let unitary = position_distribution(&walk_evolve(coin, n));
            for ((x, p), (y, q)) in rho.position_distribution().iter().zip(&unitary) {
                assert_eq!(x, y);
                assert_abs_diff_eq!(p, q, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn no_coupling_is_unitary() {
        let cfg = DephasingConfig::new(0.0, 3.0).unwrap();
        let state = walk_evolve(CoinPair::LEFT, 5);
        let rho = open_walk_evolve(CoinPair::LEFT, 5, &two_peak(), &cfg);
        assert_eq!(rho, WalkDensity::from_state(&state));
    }

    #[test]
    fn filter_values() {
        let f = DephasingFilter::new(two_peak(), config(0.4));
        assert_eq!(f.value(0), Complex64::new(1.0, 0.0));
        for d in 1..6 {
            assert!((f.value(-d) - f.value(d).conj()).norm() < 1e-15);
            assert!(f.value(d).norm() <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn single_frequency_cannot_decohere() {
        let env = DiscreteSpectrum::new(vec![(100.0, 1.0)]).unwrap();
        let f = DephasingFilter::new(&env, config(0.4));
        for d in 0..5 {
            assert_abs_diff_eq!(f.value(d).norm(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn dilation_matches_filter() {
        let env = DiscreteSpectrum::stratified(&two_peak(), 16).unwrap();
        let cfg = config(0.37);
        for n in 0..=3 {
            let oracle = dilation_oracle(CoinPair::LEFT, n, &env, &cfg, 1.5).unwrap();
            let filter = open_walk_evolve(CoinPair::LEFT, n, &env, &cfg);
            assert!(oracle.max_abs_diff(&filter).unwrap() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn dilation_limits() {
        let env = DiscreteSpectrum::stratified(&two_peak(), 80).unwrap();
        let err = dilation_oracle(CoinPair::LEFT, 2, &env, &config(1.0), 1.5).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
        let small = DiscreteSpectrum::stratified(&two_peak(), 8).unwrap();
        let err = dilation_oracle(CoinPair::LEFT, 7, &small, &config(1.0), 1.5).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn first_step_blocks() {
        let blocks = strong_dephasing_blocks(CoinPair::LEFT, 1);
        assert_abs_diff_eq!(blocks.block(-1)[0][0].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(blocks.block(1)[1][1].re, 0.5, epsilon = 1e-15);
        assert_eq!(blocks.block(0), [[ZERO; 2]; 2]);
        assert_abs_diff_eq!(blocks.trace(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn strong_filter_reaches_block_limit() {
        let cfg = config(12.0);
        let wide = SpectrumParams::new(0.0, 1.0, 100.0, 9.0).unwrap();
        let rho = open_walk_evolve(CoinPair::LEFT, 6, &wide, &cfg);
        let blocks = strong_dephasing_blocks(CoinPair::LEFT, 6).to_walk_density();
        assert!(rho.max_abs_diff(&blocks).unwrap() < 1e-8);
    }

    #[test]
    fn orthogonal_initial_states_are_distinguishable() {
        let a = open_walk_evolve(CoinPair::LEFT, 0, &two_peak(), &config(1.0));
        let b = open_walk_evolve(CoinPair::RIGHT, 0, &two_peak(), &config(1.0));
        assert_abs_diff_eq!(trace_distance_walk(&a, &b).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(trace_distance_walk(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn block_and_full_paths_agree() {
        for m in 1..=6 {
            let a = strong_dephasing_blocks(CoinPair::LEFT, m).to_walk_density();
            let b = strong_dephasing_blocks(CoinPair::RIGHT, m - 1).to_walk_density();
            let fast = trace_distance_walk(&a, &b).unwrap();
            let full = trace_distance_walk_full(&a, &b).unwrap();
            assert_abs_diff_eq!(fast, full, epsilon = 1e-10);
        }
    }

    #[test]
    fn padding_preserves_the_state() {
        let rho = open_walk_evolve(CoinPair::LEFT, 2, &two_peak(), &config(0.5));
        let big = rho.padded(4).unwrap();
        assert_eq!(big.block(-2, 2), rho.block(-2, 2));
        assert_eq!(big.block(4, 4), [[ZERO; 2]; 2]);
        assert!(rho.padded(1).is_err());
    }
}
