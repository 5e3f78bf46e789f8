//! Trace-distance non-Markovianity.
//!
//! For a pair of initial states the distinguishability `D(n) = ½ tr|ρ₁(n) − ρ₂(n)|`
//! can only shrink under a divisible evolution. Its increments
//! `Δ(n) = D(n) − D(n − 1)` are therefore a witness of memory, and the
//! measure is the total of the positive ones:
//!
//! ```text
//! N = Σ_{n : Δ(n) > ε} Δ(n).
//! ```
//!
//! The measure is computed for a fixed pair. [`orthogonal_pair_scan`]
//! maximizes over a finite family, which gives a lower bound on the
//! supremum over all pairs.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::harmonic::{self, Engine};
use crate::open_walk::{self, DephasingFilter};
use crate::qubit::{BlochVector, ControlParams, QubitDensity};
use crate::spectra::{DephasingConfig, Spectrum, SpectrumParams};
use crate::walk::{walk_trajectory, CoinPair};

/// Increments at or below this value are treated as rounding noise.
pub const DEFAULT_THRESHOLD: f64 = 1e-12;

const DISTANCE_SLACK: f64 = 1e-12;

/// `D(n)` for `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceDistanceSeries {
    values: Vec<f64>,
    label: String,
}

impl TraceDistanceSeries {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if let Some((n, d)) = values
            .iter()
            .enumerate()
            .find(|(_, d)| !(-DISTANCE_SLACK..=1.0 + DISTANCE_SLACK).contains(*d))
        {
            return Err(Error::Domain(format!("trace distance D({n}) = {d} is outside [0, 1]")));
        }
        Ok(Self { values, label: label.into() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// How the initial pair was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSelection {
    Fixed,
    Scan,
}

impl PairSelection {
    pub fn name(&self) -> &'static str {
        match self {
            PairSelection::Fixed => "fixed-pair",
            PairSelection::Scan => "orthogonal-scan",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmReport {
    /// `Δ(n)` for `n = 0..=N`, with `Δ(0) = 0`.
    pub increments: Vec<f64>,
    /// Steps with `Δ(n) > threshold`.
    pub positive_steps: Vec<usize>,
    pub measure: f64,
    pub threshold: f64,
    pub selection: PairSelection,
}

/// First differences with `Δ(0) = 0`.
pub fn increments(series: &[f64]) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::Domain("increments need at least one trace distance".into()));
    }
    let mut out = Vec::with_capacity(series.len());
    out.push(0.0);
    out.extend(series.windows(2).map(|w| w[1] - w[0]));
    Ok(out)
}

/// Sum of the increments above `threshold`, added left to right.
pub fn nm_measure(series: &TraceDistanceSeries, threshold: f64) -> Result<NmReport> {
    let increments = increments(&series.values)?;
    let positive_steps: Vec<usize> = increments
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > threshold)
        .map(|(n, _)| n)
        .collect();
    let measure = positive_steps.iter().fold(0.0, |acc, &n| acc + increments[n]);
    Ok(NmReport { increments, positive_steps, measure, threshold, selection: PairSelection::Fixed })
}

/// `r₁ = (1, 0, 1)/√2` and `r₂ = −r₁`.
pub fn default_qubit_pair() -> (BlochVector, BlochVector) {
    let r = BlochVector::new(FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2);
    (r, -r)
}

/// Trace distances of a qubit pair under the controlled dephasing model.
pub fn qubit_distance_series(
    control: &ControlParams,
    params: &SpectrumParams,
    config: &DephasingConfig,
    pair: (BlochVector, BlochVector),
    steps: usize,
    engine: Engine,
) -> Result<TraceDistanceSeries> {
    for r in [pair.0, pair.1] {
        QubitDensity::from_bloch(r).validate()?;
    }
    let maps = harmonic::dynamical_maps(control, steps, params, config, engine)?;
    // D = ½|M (r₁ − r₂)| by linearity
    let diff = pair.0 - pair.1;
    let values = maps.iter().map(|m| 0.5 * m.apply(&diff).norm()).collect();
    TraceDistanceSeries::new(values, format!("qubit eta={} engine={engine}", control.eta))
}

pub fn nm_qubit(
    control: &ControlParams,
    params: &SpectrumParams,
    config: &DephasingConfig,
    pair: (BlochVector, BlochVector),
    steps: usize,
    engine: Engine,
) -> Result<(TraceDistanceSeries, NmReport)> {
    let series = qubit_distance_series(control, params, config, pair, steps, engine)?;
    let report = nm_measure(&series, DEFAULT_THRESHOLD)?;
    Ok((series, report))
}

/// Open-walk evaluation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkMode {
    /// Dephasing filter with the given spectrum.
    Filter,
    /// Block-diagonal limit; ignores the spectrum.
    StrongLimit,
}

impl WalkMode {
    pub fn name(&self) -> &'static str {
        match self {
            WalkMode::Filter => "filter",
            WalkMode::StrongLimit => "strong_limit",
        }
    }
}

/// Trace distances of two open walks started at the origin.
pub fn walk_distance_series<S: Spectrum + ?Sized>(
    spectrum: &S,
    config: &DephasingConfig,
    pair: (CoinPair, CoinPair),
    steps: usize,
    mode: WalkMode,
) -> Result<TraceDistanceSeries> {
    let first = walk_trajectory(pair.0, steps);
    let second = walk_trajectory(pair.1, steps);
    let mut values = Vec::with_capacity(steps + 1);
    for (a, b) in first.iter().zip(&second) {
        let d = match mode {
            WalkMode::Filter => {
                let filter = DephasingFilter::new(spectrum, *config);
                open_walk::trace_distance_walk(&filter.apply(a), &filter.apply(b))?
            }
            WalkMode::StrongLimit => open_walk::trace_distance_blocks(
                &open_walk::strong_dephasing_blocks(pair.0, a.steps()),
                &open_walk::strong_dephasing_blocks(pair.1, b.steps()),
            ),
        };
        values.push(d);
    }
    TraceDistanceSeries::new(values, format!("walk mode={}", mode.name()))
}

/// The walk measure for `|L, 0⟩` against `|R, 0⟩`.
pub fn nm_walk<S: Spectrum + ?Sized>(
    spectrum: &S,
    config: &DephasingConfig,
    steps: usize,
    mode: WalkMode,
) -> Result<(TraceDistanceSeries, NmReport)> {
    let series = walk_distance_series(spectrum, config, (CoinPair::LEFT, CoinPair::RIGHT), steps, mode)?;
    let report = nm_measure(&series, DEFAULT_THRESHOLD)?;
    Ok((series, report))
}

/// Directions `(θ_i, φ_j)` with `θ_i = πi/r`, `i = 0..=r`, and
/// `φ_j = πj/r`, `j = 0..2r`; poles appear once. Doubling `r` gives a
/// superset.
pub fn bloch_grid(resolution: usize) -> Vec<BlochVector> {
    let r = resolution.max(1);
    let mut out = Vec::new();
    for i in 0..=r {
        let theta = PI * i as f64 / r as f64;
        if i == 0 || i == r {
            out.push(BlochVector::new(0.0, 0.0, if i == 0 { 1.0 } else { -1.0 }));
            continue;
        }
        for j in 0..2 * r {
            out.push(BlochVector::from_angles(theta, PI * j as f64 / r as f64));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// `r` of the best pair `(r, −r)`.
    pub direction: BlochVector,
    pub series: TraceDistanceSeries,
    pub report: NmReport,
    pub evaluated: usize,
}

/// Maximizes the measure over the antipodal pairs `(r, −r)`.
///
/// The first direction attaining the maximum wins.
pub fn orthogonal_pair_scan<F>(directions: &[BlochVector], mut runner: F) -> Result<ScanResult>
where
    F: FnMut(BlochVector, BlochVector) -> Result<TraceDistanceSeries>,
{
    let mut best: Option<ScanResult> = None;
    for &r in directions {
        let series = runner(r, -r)?;
        let mut report = nm_measure(&series, DEFAULT_THRESHOLD)?;
        report.selection = PairSelection::Scan;
        if best.as_ref().is_none_or(|b| report.measure > b.report.measure) {
            best = Some(ScanResult { direction: r, series, report, evaluated: 0 });
        }
    }
    let mut best = best.ok_or_else(|| Error::Domain("pair scan needs at least one direction".into()))?;
    best.evaluated = directions.len();
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn series(values: &[f64]) -> TraceDistanceSeries {
        TraceDistanceSeries::new(values.to_vec(), "test").unwrap()
    }

    #[test]
    fn increments_examples() {
        assert_eq!(increments(&[0.4; 4]).unwrap(), vec![0.0; 4]);
        let d = increments(&[1.0, 0.5, 0.8]).unwrap();
        assert_eq!(d[0], 0.0);
        assert_abs_diff_eq!(d[1], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d[2], 0.3, epsilon = 1e-15);
        assert!(increments(&[]).is_err());
    }

    #[test]
    fn measure_examples() {
        let r = nm_measure(&series(&[1.0, 0.5, 0.8, 0.3]), DEFAULT_THRESHOLD).unwrap();
        assert_abs_diff_eq!(r.measure, 0.3, epsilon = 1e-15);
        assert_eq!(r.positive_steps, vec![2]);
        let r = nm_measure(&series(&[1.0, 0.9, 0.5, 0.1]), DEFAULT_THRESHOLD).unwrap();
        assert_eq!(r.measure, 0.0);
        assert!(r.positive_steps.is_empty());
    }

    #[test]
    fn rejects_out_of_range_distances() {
        assert!(TraceDistanceSeries::new(vec![1.5], "bad").is_err());
        assert!(TraceDistanceSeries::new(vec![-0.1], "bad").is_err());
    }

    #[test]
    fn grid_nests_under_refinement() {
        let coarse = bloch_grid(2);
        let fine = bloch_grid(4);
        for r in &coarse {
            assert!(fine.iter().any(|f| (*f - *r).norm() < 1e-12), "{r:?} missing");
        }
        assert!(bloch_grid(3).iter().all(|r| (r.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn scan_of_markovian_model_is_zero() {
        let directions = bloch_grid(3);
        let best = orthogonal_pair_scan(&directions, |a, b| {
            let d = 0.5 * (a - b).norm();
            TraceDistanceSeries::new(vec![d, 0.8 * d, 0.5 * d], "decay")
        })
        .unwrap();
        assert_eq!(best.report.measure, 0.0);
        assert_eq!(best.evaluated, directions.len());
        assert_eq!(best.report.selection, PairSelection::Scan);
        assert!(orthogonal_pair_scan(&[], |_, _| unreachable!()).is_err());
    }
}
