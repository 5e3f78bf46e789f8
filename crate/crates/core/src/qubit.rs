//! Qubit states, the beam-splitter control and the Bloch transfer matrix.
//!
//! One step of the controlled model applies `C_η` and then lets the qubit
//! interact with the environment, which multiplies `⟨L|ρ|R⟩` by
//! `e^{iθ(ω)}` with `θ(ω) = Δn δt ω`. On Bloch vectors a single frequency
//! acts by the orthogonal matrix
//!
//! ```text
//!        ⎡ -β cosθ   -sinθ    α cosθ ⎤
//! M(θ) = ⎢  β sinθ   -cosθ   -α sinθ ⎥ ,   α = 2√((1-η)η),  β = 2η - 1,
//!        ⎣    α        0        β    ⎦
//! ```
//!
//! and `m` steps average `M(θ(ω))^m` over the spectrum.

use std::ops::{Mul, Neg, Sub};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::harmonic::{self, Engine};
use crate::linalg;
use crate::spectra::{DephasingConfig, Spectrum, SpectrumParams};

/// Absolute tolerance for state validity checks.
pub const STATE_TOLERANCE: f64 = 1e-12;

pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Bloch vector `(r1, r2, r3)` of `ρ = ½(I + r·σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector(pub [f64; 3]);

impl BlochVector {
    pub const ORIGIN: BlochVector = BlochVector([0.0; 3]);

    pub fn new(r1: f64, r2: f64, r3: f64) -> Self {
        Self([r1, r2, r3])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|r| r * r).sum::<f64>().sqrt()
    }

    pub fn is_physical(&self) -> bool {
        self.0.iter().all(|r| r.is_finite()) && self.norm().powi(2) <= 1.0 + STATE_TOLERANCE
    }

    /// Unit vector with polar angle `theta` and azimuth `phi`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()])
    }
}

impl Neg for BlochVector {
    type Output = BlochVector;
    fn neg(self) -> BlochVector {
        BlochVector(self.0.map(|r| -r))
    }
}

impl Sub for BlochVector {
    type Output = BlochVector;
    fn sub(self, rhs: BlochVector) -> BlochVector {
        BlochVector([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

/// 2×2 density matrix in the `(L, R)` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitDensity(pub Mat2);

impl QubitDensity {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: Mat2) -> Result<Self> {
        let rho = Self(m);
        rho.validate()?;
        Ok(rho)
    }

    pub fn from_bloch(r: BlochVector) -> Self {
        let [x, y, z] = r.0;
        Self([
            [Complex64::new(0.5 * (1.0 + z), 0.0), Complex64::new(0.5 * x, -0.5 * y)],
            [Complex64::new(0.5 * x, 0.5 * y), Complex64::new(0.5 * (1.0 - z), 0.0)],
        ])
    }

    /// Projector onto `c_L|L⟩ + c_R|R⟩`.
    pub fn pure(left: Complex64, right: Complex64) -> Self {
        let v = [left, right];
        Self([[v[0] * v[0].conj(), v[0] * v[1].conj()], [v[1] * v[0].conj(), v[1] * v[1].conj()]])
    }

    pub fn bloch(&self) -> BlochVector {
        let m = &self.0;
        let coherence = m[0][1] + m[1][0].conj();
        BlochVector([coherence.re, -coherence.im, (m[0][0] - m[1][1]).re])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.0;
        if m.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("density matrix has non-finite entries".into()));
        }
        let herm = (m[0][1] - m[1][0].conj())
            .norm()
            .max(m[0][0].im.abs())
            .max(m[1][1].im.abs());
        if herm > STATE_TOLERANCE {
            return Err(Error::Domain(format!("density matrix not Hermitian ({herm:e})")));
        }
        if (self.trace() - ONE).norm() > STATE_TOLERANCE {
            return Err(Error::Domain(format!("density matrix trace {} != 1", self.trace())));
        }
        let (low, _) = linalg::eigenvalues_2x2(m[0][0].re, m[0][1], m[1][1].re);
        if low < -STATE_TOLERANCE {
            return Err(Error::Domain(format!("density matrix has eigenvalue {low:e}")));
        }
        Ok(())
    }
}

/// 3×3 real matrix acting on Bloch vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix3(pub [[f64; 3]; 3]);

impl TransferMatrix3 {
    pub const IDENTITY: TransferMatrix3 =
        TransferMatrix3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    pub const ZERO: TransferMatrix3 = TransferMatrix3([[0.0; 3]; 3]);

    pub fn apply(&self, r: &BlochVector) -> BlochVector {
        let m = &self.0;
        BlochVector(std::array::from_fn(|i| (0..3).map(|j| m[i][j] * r.0[j]).sum()))
    }

    pub fn transpose(&self) -> TransferMatrix3 {
        TransferMatrix3(std::array::from_fn(|i| std::array::from_fn(|j| self.0[j][i])))
    }

    pub fn max_abs_diff(&self, other: &TransferMatrix3) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                dev = dev.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        dev
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> Result<f64> {
        let gram = *self * self.transpose();
        let h = Array2::from_shape_fn((3, 3), |(i, j)| Complex64::new(gram.0[i][j], 0.0));
        let eig = linalg::hermitian_eigenvalues(&h)?;
        Ok(eig[2].max(0.0).sqrt())
    }

    /// Action on an arbitrary 2×2 operator `X = x₀I + Σ x_k σ_k`; the
    /// identity component is left alone (unital map).
    pub fn apply_operator(&self, x: &Mat2) -> Mat2 {
        let x0 = (x[0][0] + x[1][1]) * 0.5;
        let xs = [
            (x[0][1] + x[1][0]) * 0.5,
            (x[0][1] - x[1][0]) * I * 0.5,
            (x[0][0] - x[1][1]) * 0.5,
        ];
        let ys: [Complex64; 3] =
            std::array::from_fn(|l| (0..3).map(|k| xs[k] * self.0[l][k]).sum());
        [[x0 + ys[2], ys[0] - I * ys[1]], [ys[0] + I * ys[1], x0 - ys[2]]]
    }

    pub fn apply_density(&self, rho: &QubitDensity) -> QubitDensity {
        QubitDensity(self.apply_operator(&rho.0))
    }

    /// Normalized Choi matrix `½ Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`, trace one.
    pub fn choi_matrix(&self) -> Array2<Complex64> {
        let mut choi = Array2::zeros((4, 4));
        for i in 0..2 {
            for j in 0..2 {
                let mut unit = [[ZERO; 2]; 2];
                unit[i][j] = ONE;
                let image = self.apply_operator(&unit);
                for a in 0..2 {
                    for b in 0..2 {
                        choi[[2 * i + a, 2 * j + b]] = image[a][b] * 0.5;
                    }
                }
            }
        }
        choi
    }
}

impl Mul for TransferMatrix3 {
    type Output = TransferMatrix3;
    fn mul(self, rhs: TransferMatrix3) -> TransferMatrix3 {
        TransferMatrix3(std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum())
        }))
    }
}

/// Beam-splitter bias `η ∈ [0, 1]` with `α = 2√((1−η)η)` and `β = 2η − 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlParams {
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ControlParams {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::Domain(format!("eta must lie in [0, 1], got {eta}")));
        }
        Ok(Self { eta, alpha: 2.0 * ((1.0 - eta) * eta).sqrt(), beta: 2.0 * eta - 1.0 })
    }
}

/// `C_η = √η (|L⟩⟨L| − |R⟩⟨R|) + √(1−η) (|L⟩⟨R| + |R⟩⟨L|)`.
pub fn coin_operator(eta: f64) -> Result<Mat2> {
    ControlParams::new(eta)?;
    let d = Complex64::new(eta.sqrt(), 0.0);
    let o = Complex64::new((1.0 - eta).sqrt(), 0.0);
    Ok([[d, o], [o, -d]])
}

/// Pure dephasing: populations fixed, `⟨L|ρ|R⟩ ↦ κ⟨L|ρ|R⟩`.
pub fn pure_dephasing_map(kappa: Complex64, rho: &QubitDensity) -> Result<QubitDensity> {
    if kappa.norm() > 1.0 + STATE_TOLERANCE {
        return Err(Error::Domain(format!("|kappa| = {} exceeds 1", kappa.norm())));
    }
    let m = rho.0;
    Ok(QubitDensity([[m[0][0], kappa * m[0][1]], [kappa.conj() * m[1][0], m[1][1]]]))
}

/// `M(θ)` for the given control.
pub fn bloch_transfer_matrix(control: &ControlParams, theta: f64) -> TransferMatrix3 {
    let (s, c) = theta.sin_cos();
    let ControlParams { alpha, beta, .. } = *control;
    TransferMatrix3([
        [-beta * c, -s, alpha * c],
        [beta * s, -c, -alpha * s],
        [alpha, 0.0, beta],
    ])
}

/// Bloch vectors after `0..=steps` steps; element 0 is `r0`.
pub fn evolve_qubit(
    params: &SpectrumParams,
    config: &DephasingConfig,
    control: &ControlParams,
    r0: BlochVector,
    steps: usize,
    engine: Engine,
) -> Result<Vec<BlochVector>> {
    let maps = harmonic::dynamical_maps(control, steps, params, config, engine)?;
    Ok(maps.iter().map(|m| m.apply(&r0)).collect())
}

/// Exact `m`-step map for `η = 1` (`C₁ = σ_z`): coherences pick up
/// `(−1)^m κ(mδt)`.
pub fn special_map_eta1<S: Spectrum + ?Sized>(
    m: usize,
    spectrum: &S,
    config: &DephasingConfig,
    rho: &QubitDensity,
) -> QubitDensity {
    let tau = m as f64 * config.step_duration;
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let kappa = spectrum.characteristic(config.index_contrast * tau) * sign;
    let r = rho.0;
    QubitDensity([[r[0][0], kappa * r[0][1]], [kappa.conj() * r[1][0], r[1][1]]])
}

/// Exact `m`-step map for `η = 0` (`C₀ = σ_x`): identity after an even
/// number of steps; after an odd number populations swap and
/// `⟨L|ρ'|R⟩ = κ(δt)⟨R|ρ|L⟩`.
pub fn special_map_eta0<S: Spectrum + ?Sized>(
    m: usize,
    spectrum: &S,
    config: &DephasingConfig,
    rho: &QubitDensity,
) -> QubitDensity {
    if m % 2 == 0 {
        return *rho;
    }
    let kappa = spectrum.characteristic(config.index_contrast * config.step_duration);
    let r = rho.0;
    QubitDensity([[r[1][1], kappa * r[1][0]], [kappa.conj() * r[0][1], r[0][0]]])
}

/// `½ tr|ρ₁ − ρ₂|`, which for qubits is half the Bloch distance.
pub fn trace_distance_qubit(rho1: &QubitDensity, rho2: &QubitDensity) -> Result<f64> {
    rho1.validate()?;
    rho2.validate()?;
    Ok(0.5 * (rho1.bloch() - rho2.bloch()).norm())
}
