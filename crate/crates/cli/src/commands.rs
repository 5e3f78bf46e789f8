//! Subcommand bodies. Each returns its files as bytes so that callers can
//! compare runs without touching the filesystem.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use memoryflow::harmonic::{
    approximation_errors, dynamical_maps, quadrature_maps, series_maps,
    strong_limit_closed_form, strong_limit_map, DEFAULT_NODE_BUDGET,
};
use memoryflow::measure::{bloch_grid, nm_measure, nm_walk, orthogonal_pair_scan, qubit_distance_series, WalkMode};
use memoryflow::open_walk::{dilation_oracle, open_walk_evolve, WalkDensity, MAX_ORACLE_FREQUENCIES, MAX_ORACLE_STEPS};
use memoryflow::spectra::{
    decoherence_function, decoherence_function_by_quadrature, flatness_factor, spectral_density, Spectrum,
};
use memoryflow::walk::{position_distribution, walk_amplitudes_integral, walk_trajectory};
use memoryflow::{BlochVector, ControlParams, DiscreteSpectrum, TraceDistanceSeries};
use rand::{Rng, SeedableRng};

use crate::config::{Command, Resolved, TimeStep};
use crate::error::{CliError, CliResult};
use crate::format::{num, Table};

/// Files produced by a run plus command-specific manifest content.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Value,
    /// Set when a check failed; files are still written.
    pub failure: Option<String>,
}

impl RunOutput {
    fn ok(files: Vec<(String, Vec<u8>)>, summary: Value) -> Self {
        Self { files, summary, failure: None }
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

pub fn execute(command: Command, cfg: &Resolved) -> CliResult<RunOutput> {
    match command {
        Command::Dephasing => dephasing(cfg),
        Command::ControlledQubit => controlled_qubit(cfg),
        Command::StrongLimitError => strong_limit_error(cfg),
        Command::Walk => walk(cfg),
        Command::OpenWalkNm => open_walk_nm(cfg),
        Command::Oracle => oracle(cfg),
        Command::Scan => scan(cfg),
    }
}

#[derive(Serialize)]
struct Derived {
    delta_t: f64,
    dt_omega_dn: f64,
    period_over_sigma: f64,
}

/// Sidecar manifest: resolved config, derived scales, version and outputs.
pub fn manifest(command: Command, cfg: &Resolved, out: &RunOutput) -> CliResult<Vec<u8>> {
    let derived: Vec<Derived> = cfg
        .time_steps
        .iter()
        .map(|ts| Derived {
            delta_t: ts.delta_t,
            dt_omega_dn: ts.dt_omega_dn,
            period_over_sigma: std::f64::consts::TAU / (ts.delta_t * cfg.delta_n.abs()) / cfg.sigma,
        })
        .collect();
    let value = json!({
        "tool": "memoryflow",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command.name(),
        "config": cfg,
        "derived": derived,
        "outputs": out.files.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(),
        "summary": out.summary,
        "failure": out.failure,
    });
    let mut bytes = serde_json::to_vec_pretty(&value).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Local maxima of a sampled curve, as indices.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1])
        .collect()
}

fn dephasing(cfg: &Resolved) -> CliResult<RunOutput> {
    let period = if cfg.delta_omega > 0.0 && cfg.delta_n != 0.0 {
        cfg.revival_period()
    } else {
        std::f64::consts::TAU / (cfg.sigma * cfg.delta_n.abs())
    };
    if !period.is_finite() {
        return Err(CliError::Usage("dephasing needs a non-zero delta_n".into()));
    }
    let t_max = period * cfg.t_max_periods;
    let mut files = Vec::new();
    let mut summary = Vec::new();
    for &a in &cfg.amplitude_ratios {
        let spectrum = cfg.spectrum(a)?;
        let mut traj = Table::new(&["t", "abs_kappa"]);
        let mut values = Vec::with_capacity(cfg.t_points);
        for k in 0..cfg.t_points {
            let t = t_max * k as f64 / (cfg.t_points - 1) as f64;
            let v = decoherence_function(&spectrum, cfg.delta_n, t)?.norm();
            values.push(v);
            traj.push(vec![num(t), num(v)]);
        }
        let (lo, hi) = spectrum.support(5.0);
        let mut dens = Table::new(&["omega", "density"]);
        for k in 0..cfg.omega_points {
            let w = lo + (hi - lo) * k as f64 / (cfg.omega_points - 1) as f64;
            dens.push(vec![num(w), num(spectral_density(&spectrum, w)?)]);
        }
        let step = t_max / (cfg.t_points - 1) as f64;
        let maxima: Vec<f64> = local_maxima(&values).into_iter().map(|i| i as f64 * step).collect();
        let closed = decoherence_function(&spectrum, cfg.delta_n, period)?;
        let quad = decoherence_function_by_quadrature(&spectrum, cfg.delta_n, period)?;
        summary.push(json!({
            "A": a,
            "grid_step": step,
            "local_maxima_t": maxima,
            "abs_kappa_at_first_revival": closed.norm(),
            "quadrature_deviation_at_first_revival": (closed - quad).norm(),
        }));
        files.push((format!("dephasing_A{}.csv", num(a)), traj.to_bytes()?));
        files.push((format!("spectrum_A{}.csv", num(a)), dens.to_bytes()?));
    }
    Ok(RunOutput::ok(files, json!({ "revival_period": period, "runs": summary })))
}

/// All `(A, time step, η)` combinations in sorted order.
fn qubit_points(cfg: &Resolved) -> Vec<(f64, TimeStep, f64)> {
    let mut points = Vec::new();
    for &a in &cfg.amplitude_ratios {
        for &ts in &cfg.time_steps {
            for &eta in &cfg.eta {
                points.push((a, ts, eta));
            }
        }
    }
    points.sort_by(|p, q| {
        p.0.total_cmp(&q.0).then(p.1.dt_omega_dn.total_cmp(&q.1.dt_omega_dn)).then(p.2.total_cmp(&q.2))
    });
    points
}

fn pair(cfg: &Resolved) -> (BlochVector, BlochVector) {
    (BlochVector(cfg.bloch_pair[0]), BlochVector(cfg.bloch_pair[1]))
}

fn controlled_qubit(cfg: &Resolved) -> CliResult<RunOutput> {
    let points = qubit_points(cfg);
    let (r1, r2) = pair(cfg);
    let results: Vec<CliResult<(Vec<Vec<String>>, Value)>> = points
        .par_iter()
        .map(|&(a, ts, eta)| {
            let spectrum = cfg.spectrum(a)?;
            let config = cfg.dephasing(&ts)?;
            let control = ControlParams::new(eta)?;
            let maps = dynamical_maps(&control, cfg.steps, &spectrum, &config, cfg.engine())?;
            let d: Vec<f64> = maps.iter().map(|m| 0.5 * m.apply(&(r1 - r2)).norm()).collect();
            let report = nm_measure(&TraceDistanceSeries::new(d.clone(), "qubit")?, cfg.threshold)?;
            let mut rows = Vec::new();
            let mut cumulative = 0.0;
            for (n, m) in maps.iter().enumerate() {
                let (p, q) = (m.apply(&r1), m.apply(&r2));
                let delta = report.increments[n];
                if report.positive_steps.contains(&n) {
                    cumulative += delta;
                }
                let mut row = vec![num(a), num(ts.dt_omega_dn), num(eta), n.to_string()];
                row.extend(p.0.iter().chain(q.0.iter()).map(|&c| num(c)));
                row.extend([num(d[n]), num(delta), num(cumulative)]);
                rows.push(row);
            }
            let point = json!({
                "A": a,
                "dt_omega_dn": ts.dt_omega_dn,
                "eta": eta,
                "period_over_sigma": config.period() / cfg.sigma,
                "N": report.measure,
                "selection": report.selection.name(),
            });
            Ok((rows, point))
        })
        .collect();
    let mut table = Table::new(&[
        "A", "dt_omega_dn", "eta", "step", "r1_x", "r1_y", "r1_z", "r2_x", "r2_y", "r2_z", "D", "delta", "N",
    ]);
    let mut summary = Vec::new();
    for r in results {
        let (rows, point) = r?;
        rows.into_iter().for_each(|row| table.push(row));
        summary.push(point);
    }
    Ok(RunOutput::ok(
        vec![("controlled_qubit.csv".into(), table.to_bytes()?)],
        json!({ "engine": cfg.engine, "points": summary }),
    ))
}

fn strong_limit_error(cfg: &Resolved) -> CliResult<RunOutput> {
    let points = qubit_points(cfg);
    let results: Vec<CliResult<(Vec<Vec<String>>, Value)>> = points
        .par_iter()
        .map(|&(a, ts, eta)| {
            let spectrum = cfg.spectrum(a)?;
            let config = cfg.dephasing(&ts)?;
            let errors = approximation_errors(&ControlParams::new(eta)?, cfg.steps, &spectrum, &config)?;
            let rows = errors
                .iter()
                .enumerate()
                .map(|(n, e)| vec![num(a), num(ts.dt_omega_dn), num(eta), n.to_string(), num(*e)])
                .collect();
            let flatness = flatness_factor(&spectrum, &config).ok();
            Ok((
                rows,
                json!({
                    "A": a,
                    "dt_omega_dn": ts.dt_omega_dn,
                    "eta": eta,
                    "period_over_sigma": config.period() / cfg.sigma,
                    "flatness_factor": flatness,
                }),
            ))
        })
        .collect();
    let mut table = Table::new(&["A", "dt_omega_dn", "eta", "step", "error"]);
    let mut summary = Vec::new();
    for r in results {
        let (rows, point) = r?;
        rows.into_iter().for_each(|row| table.push(row));
        summary.push(point);
    }
    Ok(RunOutput::ok(
        vec![("strong_limit_error.csv".into(), table.to_bytes()?)],
        json!({ "metric": "half trace norm of the normalized Choi matrix difference", "points": summary }),
    ))
}

/// Largest deviation between integral and recursion amplitudes.
pub fn walk_cross_check(coin: memoryflow::CoinPair, steps: usize) -> CliResult<f64> {
    let states = walk_trajectory(coin, steps);
    let devs: Vec<CliResult<f64>> = states
        .par_iter()
        .enumerate()
        .map(|(m, state)| {
            let mut worst: f64 = 0.0;
            for x in -(m as i64)..=m as i64 {
                let via = walk_amplitudes_integral(m, x)?.apply(&coin);
                let direct = state.amplitude(x);
                worst = worst.max((via[0] - direct[0]).norm()).max((via[1] - direct[1]).norm());
            }
            Ok(worst)
        })
        .collect();
    devs.into_iter().try_fold(0.0, |acc, d| Ok(f64::max(acc, d?)))
}

pub const WALK_CROSS_CHECK_TOLERANCE: f64 = 1e-6;

fn walk(cfg: &Resolved) -> CliResult<RunOutput> {
    let coin = cfg.coin_pair();
    let states = walk_trajectory(coin, cfg.steps);
    let mut header = vec!["step", "x", "probability"];
    if cfg.amplitudes {
        header.extend(["cl_re", "cl_im", "cr_re", "cr_im"]);
    }
    let mut table = Table::new(&header);
    let mut norms = Vec::new();
    for (n, state) in states.iter().enumerate() {
        let mut total = 0.0;
        for (x, p) in position_distribution(state) {
            total += p;
            let mut row = vec![n.to_string(), x.to_string(), num(p)];
            if cfg.amplitudes {
                let [l, r] = state.amplitude(x);
                row.extend([num(l.re), num(l.im), num(r.re), num(r.im)]);
            }
            table.push(row);
        }
        norms.push(total);
    }
    let worst_norm = norms.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
    let mut out = RunOutput::ok(
        vec![("walk.csv".into(), table.to_bytes()?)],
        json!({ "max_normalization_error": worst_norm }),
    );
    if cfg.cross_check {
        let dev = walk_cross_check(coin, cfg.steps)?;
        out.summary["integral_cross_check"] =
            json!({ "max_dev": dev, "tol": WALK_CROSS_CHECK_TOLERANCE, "pass": dev < WALK_CROSS_CHECK_TOLERANCE });
        if dev >= WALK_CROSS_CHECK_TOLERANCE {
            out.failure = Some(format!("integral amplitudes deviate from the recursion by {dev:e}"));
        }
    }
    Ok(out)
}

fn open_walk_nm(cfg: &Resolved) -> CliResult<RunOutput> {
    let mut points = Vec::new();
    for &a in &cfg.amplitude_ratios {
        for &ts in &cfg.time_steps {
            points.push((a, ts));
        }
    }
    points.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.dt_omega_dn.total_cmp(&q.1.dt_omega_dn)));
    let filter: Vec<CliResult<f64>> = points
        .par_iter()
        .map(|&(a, ts)| {
            let (_, report) = nm_walk(&cfg.spectrum(a)?, &cfg.dephasing(&ts)?, cfg.steps, WalkMode::Filter)?;
            Ok(report.measure)
        })
        .collect();
    // the block limit never looks at the spectrum
    let first = points.first().map(|p| p.1).unwrap_or(cfg.time_steps[0]);
    let (_, strong) = nm_walk(&NoSpectrum, &cfg.dephasing(&first)?, cfg.steps, WalkMode::StrongLimit)?;
    let mut table = Table::new(&["A", "dt_omega_dn", "N10", "mode"]);
    for (&(a, ts), n) in points.iter().zip(filter) {
        let n = n?;
        table.push(vec![num(a), num(ts.dt_omega_dn), num(n), WalkMode::Filter.name().into()]);
        table.push(vec![num(a), num(ts.dt_omega_dn), num(strong.measure), WalkMode::StrongLimit.name().into()]);
    }
    Ok(RunOutput::ok(
        vec![("open_walk_nm.csv".into(), table.to_bytes()?)],
        json!({ "steps": cfg.steps, "pair": ["|L,0>", "|R,0>"], "strong_limit_N": strong.measure }),
    ))
}

/// A spectrum that must never be evaluated.
struct NoSpectrum;

impl Spectrum for NoSpectrum {
    fn characteristic(&self, _s: f64) -> memoryflow::Complex64 {
        unreachable!("the strong-dephasing limit does not use the spectrum")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub max_dev: f64,
    pub tol: f64,
    /// `None` when skipped.
    pub pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Check {
    fn new(name: String, max_dev: f64, tol: f64) -> Self {
        Self { name, max_dev, tol, pass: Some(max_dev < tol), location: None, reason: None }
    }

    fn skipped(name: String, tol: f64, reason: String) -> Self {
        Self { name, max_dev: 0.0, tol, pass: None, location: None, reason: Some(reason) }
    }
}

fn site_label(index: usize, steps: usize) -> String {
    let x = (index / 2) as i64 - steps as i64;
    format!("(x={x},{})", if index % 2 == 0 { "L" } else { "R" })
}

fn densities_deviation(a: &WalkDensity, b: &WalkDensity) -> (f64, String) {
    let mut worst = (0.0, (0, 0));
    for ((i, j), p) in a.matrix().indexed_iter() {
        let d = (p - b.matrix()[[i, j]]).norm();
        if d > worst.0 {
            worst = (d, (i, j));
        }
    }
    let (i, j) = worst.1;
    (worst.0, format!("rho[{}, {}]", site_label(i, a.steps()), site_label(j, a.steps())))
}

pub const DILATION_TOLERANCE: f64 = 1e-10;
pub const ENGINE_TOLERANCE: f64 = 1e-8;
pub const CATALAN_TOLERANCE: f64 = 1e-12;
pub const KAPPA_TOLERANCE: f64 = 1e-9;

fn oracle(cfg: &Resolved) -> CliResult<RunOutput> {
    let coin = cfg.coin_pair();
    let mut checks = Vec::new();

    for &a in &cfg.amplitude_ratios {
        let spectrum = cfg.spectrum(a)?;
        for &k in &cfg.oracle_frequencies {
            for ts in &cfg.time_steps {
                let name = format!("dilation_vs_filter A={} K={k} dt_omega_dn={}", num(a), num(ts.dt_omega_dn));
                if k > MAX_ORACLE_FREQUENCIES || cfg.oracle_steps > MAX_ORACLE_STEPS {
                    checks.push(Check::skipped(
                        name,
                        DILATION_TOLERANCE,
                        format!(
                            "resource bound: K <= {MAX_ORACLE_FREQUENCIES} and steps <= {MAX_ORACLE_STEPS}, got K = {k}, steps = {}",
                            cfg.oracle_steps
                        ),
                    ));
                    continue;
                }
                let env = DiscreteSpectrum::stratified(&spectrum, k)?;
                let config = cfg.dephasing(ts)?;
                let mut worst = (0.0, String::new());
                for n in 0..=cfg.oracle_steps {
                    let traced = dilation_oracle(coin, n, &env, &config, cfg.oracle_base_index)?;
                    let mut filtered = open_walk_evolve(coin, n, &env, &config);
                    if let Some(eps) = cfg.perturb_filter {
                        let mut m = filtered.matrix().clone();
                        m[[0, 1]] += eps;
                        m[[1, 0]] += eps;
                        filtered = WalkDensity::new(n, m)?;
                    }
                    let (dev, loc) = densities_deviation(&traced, &filtered);
                    if dev > worst.0 || worst.1.is_empty() {
                        worst = (dev, format!("steps={n} {loc}"));
                    }
                }
                let mut check = Check::new(name, worst.0, DILATION_TOLERANCE);
                if check.pass == Some(false) {
                    check.location = Some(worst.1);
                }
                checks.push(check);
            }
        }
    }

    let engine_steps = cfg.steps.min(20);
    let mut engine_points = Vec::new();
    for &a in &cfg.amplitude_ratios {
        for &ts in &cfg.time_steps {
            for &eta in &cfg.eta {
                engine_points.push((a, ts, eta));
            }
        }
    }
    let engine_checks: Vec<CliResult<Check>> = engine_points
        .par_iter()
        .map(|&(a, ts, eta)| {
            let spectrum = cfg.spectrum(a)?;
            let config = cfg.dephasing(&ts)?;
            let control = ControlParams::new(eta)?;
            let s = series_maps(&control, engine_steps, &spectrum, &config)?;
            let q = quadrature_maps(&control, engine_steps, &spectrum, &config, DEFAULT_NODE_BUDGET)?;
            let (mut dev, mut at) = (0.0, 0);
            for (m, (x, y)) in s.iter().zip(&q).enumerate() {
                let d = x.max_abs_diff(y);
                if d > dev {
                    (dev, at) = (d, m);
                }
            }
            let mut check = Check::new(
                format!("series_vs_quadrature A={} dt_omega_dn={} eta={}", num(a), num(ts.dt_omega_dn), num(eta)),
                dev,
                ENGINE_TOLERANCE,
            );
            if check.pass == Some(false) {
                check.location = Some(format!("step {at}"));
            }
            Ok(check)
        })
        .collect();
    for c in engine_checks {
        checks.push(c?);
    }

    let hadamard = ControlParams::new(0.5)?;
    let mut dev: f64 = 0.0;
    for m in 0..=40 {
        dev = dev.max(strong_limit_closed_form(m).max_abs_diff(&strong_limit_map(&hadamard, m)?));
    }
    checks.push(Check::new("catalan_closed_form_vs_zeroth_coefficient m<=40".into(), dev, CATALAN_TOLERANCE));
    let walk_dev = walk_cross_check(coin, 12)?;
    checks.push(Check::new("walk_integral_vs_recursion m<=12".into(), walk_dev, WALK_CROSS_CHECK_TOLERANCE));

    for &a in &cfg.amplitude_ratios {
        let spectrum = cfg.spectrum(a)?;
        let span = 4.0 * cfg.revival_period();
        let mut dev: f64 = 0.0;
        for i in 0..100 {
            let tau = span * i as f64 / 99.0;
            let c = decoherence_function(&spectrum, cfg.delta_n, tau)?;
            let q = decoherence_function_by_quadrature(&spectrum, cfg.delta_n, tau)?;
            dev = dev.max((c - q).norm());
        }
        checks.push(Check::new(format!("kappa_closed_form_vs_quadrature A={}", num(a)), dev, KAPPA_TOLERANCE));
    }

    let failed: Vec<&str> = checks.iter().filter(|c| c.pass == Some(false)).map(|c| c.name.as_str()).collect();
    let report = json!({ "checks": checks, "all_pass": failed.is_empty() });
    let mut bytes = serde_json::to_vec_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    let failure = (!failed.is_empty()).then(|| format!("{} oracle check(s) failed: {}", failed.len(), failed.join("; ")));
    Ok(RunOutput {
        files: vec![("oracle.json".into(), bytes)],
        summary: json!({ "checks": checks.len(), "failed": failed.len() }),
        failure,
    })
}

fn scan(cfg: &Resolved) -> CliResult<RunOutput> {
    let mut directions = bloch_grid(cfg.scan_resolution);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.scan_random_directions {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let rho = (1.0 - z * z).max(0.0).sqrt();
        directions.push(BlochVector::new(rho * phi.cos(), rho * phi.sin(), z));
    }
    let points = qubit_points(cfg);
    let engine = cfg.engine();
    let results: Vec<CliResult<Vec<String>>> = points
        .par_iter()
        .map(|&(a, ts, eta)| {
            let spectrum = cfg.spectrum(a)?;
            let config = cfg.dephasing(&ts)?;
            let control = ControlParams::new(eta)?;
            let best = orthogonal_pair_scan(&directions, |p, q| {
                qubit_distance_series(&control, &spectrum, &config, (p, q), cfg.steps, engine)
            })?;
            let fixed = qubit_distance_series(&control, &spectrum, &config, pair(cfg), cfg.steps, engine)?;
            let fixed = nm_measure(&fixed, cfg.threshold)?;
            let r = best.direction.0;
            Ok(vec![
                num(a),
                num(ts.dt_omega_dn),
                num(eta),
                num(r[0]),
                num(r[1]),
                num(r[2]),
                num(best.report.measure),
                num(fixed.measure),
                best.evaluated.to_string(),
            ])
        })
        .collect();
    let mut table = Table::new(&["A", "dt_omega_dn", "eta", "r_x", "r_y", "r_z", "N_scan", "N_fixed_pair", "directions"]);
    for r in results {
        table.push(r?);
    }
    Ok(RunOutput::ok(
        vec![("scan.csv".into(), table.to_bytes()?)],
        json!({ "selection": "orthogonal-scan", "note": "maximum over a finite family; a lower bound on the supremum" }),
    ))
}
