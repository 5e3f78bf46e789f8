//! Discrete open quantum dynamics.
//!
//! Two stepwise models are implemented: a qubit that alternates a local
//! beam-splitter control with pure dephasing against a two-Gaussian frequency
//! environment, and a Hadamard quantum walk on the line whose coin dephases
//! at every step. Both are analysed with the trace-distance measure of
//! non-Markovianity, which accumulates the steps where two evolving states
//! become more distinguishable.
//!
//! Every analytic shortcut has a brute-force counterpart that can be run at
//! small scale:
//!
//! | shortcut | independent route |
//! |---|---|
//! | Fourier-series engine for spectrum-averaged transfer matrices | per-period Gauss-Legendre quadrature of `M(ω)^m` |
//! | Catalan closed form of the strong-dephasing maps | zeroth Fourier coefficient of `M(θ)^m` |
//! | quasi-momentum amplitude integrals | position-space walk recursion |
//! | dephasing filter on the walk density | explicit system–environment dilation traced over the environment |
//! | 2×2 eigenvalue formula | cyclic Jacobi Hermitian solver |
//!
//! Basis convention: `|L⟩ = (1, 0)`, `|R⟩ = (0, 1)`, `σ_z|L⟩ = +|L⟩`.

pub mod error;
pub mod harmonic;
pub mod linalg;
pub mod measure;
pub mod open_walk;
pub mod quadrature;
pub mod qubit;
pub mod spectra;
pub mod walk;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use harmonic::{Engine, TrigMatrixSeries};
pub use measure::{NmReport, TraceDistanceSeries};
pub use open_walk::{BlockDensity, DephasingFilter, WalkDensity};
pub use qubit::{BlochVector, ControlParams, QubitDensity, TransferMatrix3};
pub use spectra::{DephasingConfig, DiscreteSpectrum, Spectrum, SpectrumParams};
pub use walk::{CoinPair, WalkAmplitudes, WalkState};
