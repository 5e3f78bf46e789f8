//! Run configuration: presets, JSON files and flag overrides.
//!
//! Precedence, lowest first: built-in defaults, `--preset`, the `--config`
//! file, explicit flags. Every layer is a partial [`RunConfig`]; the merged
//! result is checked once in [`RunConfig::resolve`].

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use memoryflow::{CoinPair, Complex64, DephasingConfig, Engine, SpectrumParams};

use crate::error::{CliError, CliResult};

/// A number or a list of numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    One(f64),
    Many(Vec<f64>),
}

impl Values {
    fn into_vec(self) -> Vec<f64> {
        match self {
            Values::One(x) => vec![x],
            Values::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// One of `dt_omega_dn`, `delta_t`, `A`, `eta`.
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Sweep {
    fn grid(&self) -> CliResult<Vec<f64>> {
        if self.count == 0 {
            return Err(CliError::Usage("sweep.count must be at least 1".into()));
        }
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(CliError::Usage("sweep.min and sweep.max must be finite".into()));
        }
        if self.count == 1 {
            return Ok(vec![self.min]);
        }
        let h = (self.max - self.min) / (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| if i + 1 == self.count { self.max } else { self.min + h * i as f64 })
            .collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Environment sizes `K` for the dilation check.
    pub frequencies: Option<Vec<usize>>,
    /// Largest step count of the dilation check.
    pub steps: Option<usize>,
    /// Refractive index `n_R` of the `R` arm in the dilation.
    pub base_index: Option<f64>,
    /// Adds this amount to one coherence of the filter-side density.
    pub perturb_filter: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub resolution: Option<usize>,
    /// Extra uniformly random directions drawn from `seed`.
    pub random_directions: Option<usize>,
}

/// Partial run configuration; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "A")]
    pub a: Option<Values>,
    pub sigma: Option<f64>,
    pub mu1: Option<f64>,
    pub delta_omega: Option<f64>,
    pub delta_n: Option<f64>,
    pub delta_t: Option<Values>,
    pub dt_omega_dn: Option<Values>,
    pub sweep: Option<Sweep>,
    pub eta: Option<Values>,
    pub steps: Option<usize>,
    /// Two Bloch vectors `[[x, y, z], [x, y, z]]`.
    pub bloch_pair: Option<[[f64; 3]; 2]>,
    /// Walk coin `[[re, im], [re, im]]` for `(c_L, c_R)`.
    pub coin: Option<[[f64; 2]; 2]>,
    pub engine: Option<String>,
    pub oracle: Option<OracleConfig>,
    pub threshold: Option<f64>,
    pub seed: Option<u64>,
    pub scan: Option<ScanConfig>,
    /// Length of the `|κ(t)|` trajectory in revival periods.
    pub t_max_periods: Option<f64>,
    pub t_points: Option<usize>,
    pub omega_points: Option<usize>,
    /// Emit coin amplitudes in the walk table.
    pub amplitudes: Option<bool>,
    /// Compare walk amplitudes with the quasi-momentum integrals.
    pub cross_check: Option<bool>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        RunConfig { $($field: $top.$field.or($base.$field),)* oracle: None, scan: None }
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    /// Fields set in `top` win.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let oracle = match (self.oracle, top.oracle) {
            (Some(b), Some(t)) => Some(OracleConfig {
                frequencies: t.frequencies.or(b.frequencies),
                steps: t.steps.or(b.steps),
                base_index: t.base_index.or(b.base_index),
                perturb_filter: t.perturb_filter.or(b.perturb_filter),
            }),
            (b, t) => t.or(b),
        };
        let scan = match (self.scan, top.scan) {
            (Some(b), Some(t)) => Some(ScanConfig {
                resolution: t.resolution.or(b.resolution),
                random_directions: t.random_directions.or(b.random_directions),
            }),
            (b, t) => t.or(b),
        };
        let merged = overlay!(
            self, top, a, sigma, mu1, delta_omega, delta_n, delta_t, dt_omega_dn, sweep, eta, steps,
            bloch_pair, coin, engine, threshold, seed, t_max_periods, t_points, omega_points, amplitudes,
            cross_check
        );
        RunConfig { oracle, scan, ..merged }
    }

    pub fn resolve(self, preset: Option<Preset>) -> CliResult<Resolved> {
        let mut amplitude_ratios = self.a.map(Values::into_vec).unwrap_or_else(|| vec![0.0]);
        let mut etas = self.eta.map(Values::into_vec).unwrap_or_else(|| vec![0.5]);
        let sigma = self.sigma.unwrap_or(1.0);
        let mu1 = self.mu1.unwrap_or(100.0);
        let delta_omega = self.delta_omega.unwrap_or(9.0);
        let delta_n = self.delta_n.unwrap_or(0.009);

        let mut revival = self.dt_omega_dn.map(Values::into_vec);
        let mut raw_dt = self.delta_t.map(Values::into_vec);
        if let Some(sweep) = &self.sweep {
            let grid = sweep.grid()?;
            match sweep.param.as_str() {
                "dt_omega_dn" => {
                    revival = Some(grid);
                    raw_dt = None;
                }
                "delta_t" => {
                    raw_dt = Some(grid);
                    revival = None;
                }
                "A" => amplitude_ratios = grid,
                "eta" => etas = grid,
                other => {
                    return Err(CliError::Usage(format!(
                        "sweep.param `{other}` is not one of dt_omega_dn, delta_t, A, eta"
                    )))
                }
            }
        }
        for &a in &amplitude_ratios {
            SpectrumParams::new(a, sigma, mu1, delta_omega).map_err(|e| field_error("A/sigma/mu1/delta_omega", e))?;
        }
        for &eta in &etas {
            memoryflow::ControlParams::new(eta).map_err(|e| field_error("eta", e))?;
        }
        if !delta_n.is_finite() {
            return Err(CliError::Usage("delta_n must be finite".into()));
        }
        let unit = TAU / (delta_omega * delta_n);
        let time_steps: Vec<TimeStep> = match (revival, raw_dt) {
            (Some(xs), _) => {
                if !unit.is_finite() || unit <= 0.0 {
                    return Err(CliError::Usage(
                        "dt_omega_dn needs positive delta_omega and delta_n; give delta_t instead".into(),
                    ));
                }
                xs.into_iter().map(|x| TimeStep { delta_t: x * unit, dt_omega_dn: x }).collect()
            }
            (None, Some(dts)) => dts
                .into_iter()
                .map(|dt| TimeStep { delta_t: dt, dt_omega_dn: dt * delta_omega / TAU * delta_n })
                .collect(),
            (None, None) if unit.is_finite() && unit > 0.0 => vec![TimeStep { delta_t: unit, dt_omega_dn: 1.0 }],
            (None, None) => {
                return Err(CliError::Usage("delta_t is required when delta_omega or delta_n is zero".into()))
            }
        };
        if time_steps.is_empty() || amplitude_ratios.is_empty() || etas.is_empty() {
            return Err(CliError::Usage("A, eta and the time-step list must not be empty".into()));
        }
        for ts in &time_steps {
            DephasingConfig::new(delta_n, ts.delta_t).map_err(|e| field_error("delta_t", e))?;
        }
        let engine = self.engine.unwrap_or_else(|| "series".into());
        engine.parse::<Engine>().map_err(|e| field_error("engine", e))?;
        let bloch_pair = self.bloch_pair.unwrap_or({
            let h = std::f64::consts::FRAC_1_SQRT_2;
            [[h, 0.0, h], [-h, 0.0, -h]]
        });
        for r in bloch_pair {
            if r.iter().map(|c| c * c).sum::<f64>() > 1.0 + 1e-12 || r.iter().any(|c| !c.is_finite()) {
                return Err(CliError::Usage(format!("bloch_pair entry {r:?} is not a physical Bloch vector")));
            }
        }
        let coin = self.coin.unwrap_or([[1.0, 0.0], [0.0, 0.0]]);
        coin_pair(&coin).map_err(|e| field_error("coin", e))?;
        let oracle = self.oracle.unwrap_or_default();
        let scan = self.scan.unwrap_or_default();
        let threshold = self.threshold.unwrap_or(memoryflow::measure::DEFAULT_THRESHOLD);
        if !(threshold >= 0.0) || !threshold.is_finite() {
            return Err(CliError::Usage("threshold must be a finite non-negative number".into()));
        }
        let resolved = Resolved {
            preset: preset.map(|p| p.to_string()),
            amplitude_ratios,
            sigma,
            mu1,
            delta_omega,
            delta_n,
            time_steps,
            eta: etas,
            steps: self.steps.unwrap_or(10),
            bloch_pair,
            coin,
            engine,
            oracle_frequencies: oracle.frequencies.unwrap_or_else(|| vec![8, 16, 32]),
            oracle_steps: oracle.steps.unwrap_or(4),
            oracle_base_index: oracle.base_index.unwrap_or(1.54),
            perturb_filter: oracle.perturb_filter,
            threshold,
            seed: self.seed.unwrap_or(0),
            scan_resolution: scan.resolution.unwrap_or(4),
            scan_random_directions: scan.random_directions.unwrap_or(0),
            t_max_periods: self.t_max_periods.unwrap_or(4.0),
            t_points: self.t_points.unwrap_or(401),
            omega_points: self.omega_points.unwrap_or(401),
            amplitudes: self.amplitudes.unwrap_or(false),
            cross_check: self.cross_check.unwrap_or(false),
        };
        if resolved.t_points < 2 || resolved.omega_points < 2 {
            return Err(CliError::Usage("t_points and omega_points must be at least 2".into()));
        }
        if !(resolved.t_max_periods > 0.0) || !resolved.t_max_periods.is_finite() {
            return Err(CliError::Usage("t_max_periods must be positive".into()));
        }
        Ok(resolved)
    }
}

fn field_error(field: &str, e: memoryflow::Error) -> CliError {
    CliError::Usage(format!("{field}: {e}"))
}

pub(crate) fn coin_pair(c: &[[f64; 2]; 2]) -> memoryflow::Result<CoinPair> {
    CoinPair::new(Complex64::new(c[0][0], c[0][1]), Complex64::new(c[1][0], c[1][1]))
}

/// One step duration in both units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeStep {
    pub delta_t: f64,
    pub dt_omega_dn: f64,
}

/// Fully specified run configuration, recorded in every manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub preset: Option<String>,
    #[serde(rename = "A")]
    pub amplitude_ratios: Vec<f64>,
    pub sigma: f64,
    pub mu1: f64,
    pub delta_omega: f64,
    pub delta_n: f64,
    pub time_steps: Vec<TimeStep>,
    pub eta: Vec<f64>,
    pub steps: usize,
    pub bloch_pair: [[f64; 3]; 2],
    pub coin: [[f64; 2]; 2],
    pub engine: String,
    pub oracle_frequencies: Vec<usize>,
    pub oracle_steps: usize,
    pub oracle_base_index: f64,
    pub perturb_filter: Option<f64>,
    pub threshold: f64,
    pub seed: u64,
    pub scan_resolution: usize,
    pub scan_random_directions: usize,
    pub t_max_periods: f64,
    pub t_points: usize,
    pub omega_points: usize,
    pub amplitudes: bool,
    pub cross_check: bool,
}

impl Resolved {
    pub fn spectrum(&self, a: f64) -> memoryflow::Result<SpectrumParams> {
        SpectrumParams::new(a, self.sigma, self.mu1, self.delta_omega)
    }

    pub fn dephasing(&self, ts: &TimeStep) -> memoryflow::Result<DephasingConfig> {
        DephasingConfig::new(self.delta_n, ts.delta_t)
    }

    pub fn engine(&self) -> Engine {
        self.engine.parse().expect("validated in resolve")
    }

    pub fn coin_pair(&self) -> CoinPair {
        coin_pair(&self.coin).expect("validated in resolve")
    }

    /// `2π / (δω Δn)`, the revival period of the two-peak spectrum.
    pub fn revival_period(&self) -> f64 {
        TAU / (self.delta_omega * self.delta_n)
    }
}

/// Built-in parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Fig1, Preset::Fig2, Preset::Fig3, Preset::Fig4, Preset::Fig5];

    pub fn config(&self) -> RunConfig {
        let base = RunConfig {
            sigma: Some(1.0),
            mu1: Some(100.0),
            delta_omega: Some(9.0),
            delta_n: Some(0.009),
            ..RunConfig::default()
        };
        let eta_grid = Values::Many(vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        match self {
            Preset::Fig1 => RunConfig {
                a: Some(Values::Many(vec![0.0, 1.0])),
                t_max_periods: Some(4.0),
                t_points: Some(401),
                omega_points: Some(401),
                ..base
            },
            Preset::Fig2 => RunConfig {
                a: Some(Values::One(0.0)),
                dt_omega_dn: Some(Values::One(0.014)),
                eta: Some(Values::Many(vec![0.0, 0.5, 1.0])),
                steps: Some(30),
                ..base
            },
            Preset::Fig3 => RunConfig {
                a: Some(Values::One(0.0)),
                dt_omega_dn: Some(Values::One(2.0)),
                eta: Some(Values::Many(vec![0.0, 0.5, 1.0])),
                steps: Some(30),
                ..base
            },
            Preset::Fig4 => RunConfig {
                a: Some(Values::Many(vec![0.0, 0.5, 1.0])),
                sweep: Some(Sweep { param: "dt_omega_dn".into(), min: 0.025, max: 4.0, count: 161 }),
                steps: Some(10),
                ..base
            },
            Preset::Fig5 => RunConfig {
                a: Some(Values::One(0.0)),
                dt_omega_dn: Some(Values::Many(vec![0.02, 1.03])),
                eta: Some(eta_grid),
                steps: Some(15),
                ..base
            },
        }
    }

    /// Subcommand that reproduces the figure.
    pub fn command(&self) -> Command {
        match self {
            Preset::Fig1 => Command::Dephasing,
            Preset::Fig2 | Preset::Fig3 => Command::ControlledQubit,
            Preset::Fig4 => Command::OpenWalkNm,
            Preset::Fig5 => Command::StrongLimitError,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = Preset::ALL.iter().position(|p| p == self).unwrap() + 1;
        write!(f, "fig{n}")
    }
}

impl FromStr for Preset {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown preset `{s}` (fig1 .. fig5)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Dephasing,
    ControlledQubit,
    StrongLimitError,
    Walk,
    OpenWalkNm,
    Oracle,
    Scan,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Dephasing,
        Command::ControlledQubit,
        Command::StrongLimitError,
        Command::Walk,
        Command::OpenWalkNm,
        Command::Oracle,
        Command::Scan,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Dephasing => "dephasing",
            Command::ControlledQubit => "controlled-qubit",
            Command::StrongLimitError => "strong-limit-error",
            Command::Walk => "walk",
            Command::OpenWalkNm => "open-walk-nm",
            Command::Oracle => "oracle",
            Command::Scan => "scan",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for p in Preset::ALL {
            let r = p.config().resolve(Some(p)).unwrap();
            assert_eq!(r.preset.as_deref(), Some(p.to_string().as_str()));
            assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
        }
        let fig4 = Preset::Fig4.config().resolve(None).unwrap();
        assert_eq!(fig4.time_steps.len(), 161);
        assert_eq!(fig4.time_steps[0].dt_omega_dn, 0.025);
        assert_eq!(fig4.time_steps[160].dt_omega_dn, 4.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = RunConfig::from_json(r#"{"sigmaa": 1.0}"#).unwrap_err();
        assert!(err.to_string().contains("sigmaa"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn file_overrides_preset_and_flags_override_file() {
        let file = RunConfig::from_json(r#"{"A": [0.25], "steps": 7}"#).unwrap();
        let flags = RunConfig { steps: Some(3), ..RunConfig::default() };
        let r = Preset::Fig4.config().overlay(file).overlay(flags).resolve(None).unwrap();
        assert_eq!(r.amplitude_ratios, vec![0.25]);
        assert_eq!(r.steps, 3);
        assert_eq!(r.time_steps.len(), 161);
    }

    #[test]
    fn invalid_values_name_the_field() {
        let err = RunConfig::from_json(r#"{"A": 2.0}"#).unwrap().resolve(None).unwrap_err();
        assert!(err.to_string().contains("A"), "{err}");
        let err = RunConfig::from_json(r#"{"eta": -1}"#).unwrap().resolve(None).unwrap_err();
        assert!(err.to_string().contains("eta"), "{err}");
        let err = RunConfig::from_json(r#"{"engine": "fft"}"#).unwrap().resolve(None).unwrap_err();
        assert!(err.to_string().contains("engine"), "{err}");
        let err = RunConfig::from_json(r#"{"sweep": {"param": "A", "min": 0, "max": 1, "count": 0}}"#)
            .unwrap()
            .resolve(None)
            .unwrap_err();
        assert!(err.to_string().contains("count"), "{err}");
    }

    #[test]
    fn delta_t_and_revival_units_agree() {
        let r = RunConfig::from_json(r#"{"dt_omega_dn": 2}"#).unwrap().resolve(None).unwrap();
        let back = RunConfig::from_json(&format!(r#"{{"delta_t": {}}}"#, r.time_steps[0].delta_t))
            .unwrap()
            .resolve(None)
            .unwrap();
        assert!((back.time_steps[0].dt_omega_dn - 2.0).abs() < 1e-12);
    }
}
