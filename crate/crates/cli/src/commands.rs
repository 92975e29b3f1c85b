use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use plq_smoother::analysis::{check_coercivity, check_finite, ConeCheckReport};
use plq_smoother::ip::dense_reference_solve_with;
use plq_smoother::model::{build_problem, objective, stack};
use plq_smoother::oracle::rts_smooth;
use plq_smoother::sim::{random_model, simulate, NoiseSpec, RNG_ALGORITHM};
use plq_smoother::{ip_solve, PlqPenalty, SolverOptions, StateSpaceModel};
use serde::Serialize;

use crate::config::{parse_penalty_flag, ModelConfig};
use crate::csvio::{format_value, read_rows, write_rows};
use crate::report::{Phases, RunReport};
use crate::{CliError, NoiseArgs, Oracle, EXIT_CHECK_FAILED, EXIT_MAX_ITER, EXIT_OK};

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Result of `fit`: the exit code, the report and the states that were written.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub exit_code: i32,
    pub report: RunReport,
    pub states: Vec<DVector<f64>>,
}

/// Smooths the measurements in `measurements` and writes the states to `output` plus a
/// report to `<output>.report.json`. Non-convergence still writes both (exit code 2).
pub fn cmd_fit(
    config: &Path,
    measurements: &Path,
    output: &Path,
    opts: &SolverOptions,
    oracle: Oracle,
    command: Vec<String>,
) -> Result<FitOutcome, CliError> {
    let start = Instant::now();
    opts.validate()?;
    let cfg = ModelConfig::load(config)?;
    let model = cfg.model()?;
    let z = read_rows(measurements, model.meas_dim())?;
    if z.len() != model.horizon() {
        return Err(CliError::Input(format!(
            "{}: {} measurement rows, config has N = {}",
            measurements.display(),
            z.len(),
            model.horizon()
        )));
    }
    let process = cfg.process_penalties()?;
    let measurement = cfg.measurement_penalties()?;
    let mut phases = Phases { parse_ms: ms_since(start), ..Default::default() };

    let t = Instant::now();
    let problem = build_problem(&model, &process, &measurement, &z)?;
    phases.build_ms = ms_since(t);

    let t = Instant::now();
    let (states, converged, iterations, objective_value, final_residual, final_mu) = match oracle {
        Oracle::Rts => {
            if !cfg.is_quadratic() {
                return Err(CliError::Input("--oracle rts requires l2 process and measurement penalties".into()));
            }
            let states = rts_smooth(&model, &z)?;
            let value = objective(&problem, &stack(&states))?;
            (states, true, 0, value, 0.0, 0.0)
        }
        Oracle::Dense | Oracle::None => {
            let res = if oracle == Oracle::Dense {
                dense_reference_solve_with(&problem, opts)?
            } else {
                ip_solve(&problem, opts)?
            };
            (res.states, res.converged, res.iterations, res.objective_value, res.final_residual, res.final_mu)
        }
    };
    phases.solve_ms = ms_since(t);

    let t = Instant::now();
    write_rows(output, "x", &states)?;
    phases.write_ms = ms_since(t);

    let report = RunReport {
        command,
        options: *opts,
        oracle,
        converged,
        iterations,
        objective: objective_value,
        final_residual,
        final_mu,
        total_ms: ms_since(start),
        phases,
    };
    report.write(output)?;
    if !converged {
        eprintln!("warning: solver stopped after {iterations} iterations without converging");
    }
    Ok(FitOutcome { exit_code: if converged { EXIT_OK } else { EXIT_MAX_ITER }, report, states })
}

#[derive(Debug, Serialize)]
struct SimulationMeta<'a> {
    seed: u64,
    rng: &'a str,
    horizon: usize,
    process_noise: NoiseSpec,
    measurement_noise: NoiseSpec,
    x_true: String,
    z: String,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `<prefix>_x.csv`, `<prefix>_z.csv` and `<prefix>_meta.json`.
pub fn cmd_simulate(config: &Path, noise: &NoiseArgs, seed: u64, prefix: &Path) -> Result<i32, CliError> {
    let cfg = ModelConfig::load(config)?;
    let model = cfg.model()?;
    let w = NoiseSpec {
        base: noise.w_noise.into(),
        outlier_prob: noise.w_outlier_prob,
        outlier_scale: noise.w_outlier_scale,
        seed,
    };
    let v = NoiseSpec {
        base: noise.v_noise.into(),
        outlier_prob: noise.v_outlier_prob,
        outlier_scale: noise.v_outlier_scale,
        seed,
    };
    let sim = simulate(&model, &w, &v)?;
    let x_path = with_suffix(prefix, "_x.csv");
    let z_path = with_suffix(prefix, "_z.csv");
    write_rows(&x_path, "x", &sim.x_true)?;
    write_rows(&z_path, "z", &sim.z)?;
    let meta = SimulationMeta {
        seed,
        rng: RNG_ALGORITHM,
        horizon: model.horizon(),
        process_noise: w,
        measurement_noise: v,
        x_true: x_path.display().to_string(),
        z: z_path.display().to_string(),
    };
    let meta_path = with_suffix(prefix, "_meta.json");
    let text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(&meta_path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", meta_path.display())))?;
    Ok(EXIT_OK)
}

fn describe(report: &ConeCheckReport) -> String {
    match &report.witness {
        None => "yes".into(),
        Some(w) => format!("NO, witness [{}]", w.iter().map(|&v| format_value(v)).collect::<Vec<_>>().join(", ")),
    }
}

/// Checks coercivity and finiteness of every configured penalty. Returns the exit code
/// (0 when everything holds, 3 otherwise) and a human-readable summary.
pub fn cmd_check(config: &Path) -> Result<(i32, String), CliError> {
    let cfg = ModelConfig::load(config)?;
    let mut all_ok = true;
    let mut text = String::new();
    let families: [(&str, Vec<PlqPenalty>); 2] =
        [("process_penalty", cfg.process_penalties()?), ("measurement_penalty", cfg.measurement_penalties()?)];
    for (name, penalties) in families {
        for (k, p) in penalties.iter().enumerate() {
            let coercive = check_coercivity(p)?;
            let finite = check_finite(p)?;
            all_ok &= coercive.satisfied && finite.satisfied;
            text.push_str(&format!(
                "{name}[{}]: coercive: {}; finite: {}\n",
                k + 1,
                describe(&coercive),
                describe(&finite)
            ));
        }
    }
    text.push_str(if all_ok { "all checks passed\n" } else { "check FAILED\n" });
    Ok((if all_ok { EXIT_OK } else { EXIT_CHECK_FAILED }, text))
}

/// One timing row of `bench`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub horizon: usize,
    pub iterations: usize,
    pub wall_ms: f64,
    pub converged: bool,
}

impl BenchRow {
    pub fn header() -> &'static str {
        "N,iterations,wall_ms,ms_per_iteration,converged"
    }

    pub fn line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.horizon,
            self.iterations,
            format_value(self.wall_ms),
            format_value(self.wall_ms / self.iterations.max(1) as f64),
            self.converged
        )
    }
}

/// Times [`ip_solve`] on simulated data from one random time-invariant model, for each
/// horizon in `sizes`. Sizes are solved in turn, `repeats` rounds; `wall_ms` is the fastest
/// solve of each size.
#[allow(clippy::too_many_arguments)]
pub fn cmd_bench(
    n: usize,
    m: usize,
    sizes: &[usize],
    process: &str,
    measurement: &str,
    seed: u64,
    repeats: usize,
    opts: &SolverOptions,
) -> Result<Vec<BenchRow>, CliError> {
    if n == 0 || m == 0 || repeats == 0 || sizes.is_empty() || sizes.contains(&0) {
        return Err(CliError::Input("bench needs positive n, m, repeats and horizons".into()));
    }
    opts.validate()?;
    let pw = parse_penalty_flag(process)?.resolve(n)?;
    let pv = parse_penalty_flag(measurement)?.resolve(m)?;
    let base = random_model(seed, n, m, 2)?;
    let mut problems = Vec::with_capacity(sizes.len());
    for &horizon in sizes {
        let model = StateSpaceModel::time_invariant(
            base.transitions()[1].clone(),
            base.observations()[0].clone(),
            base.process_cov()[0].clone(),
            base.measurement_cov()[0].clone(),
            base.x0().clone(),
            horizon,
        )?;
        let sim = simulate(&model, &NoiseSpec::gaussian(seed), &NoiseSpec::gaussian(seed))?;
        problems.push(build_problem(&model, std::slice::from_ref(&pw), std::slice::from_ref(&pv), &sim.z)?);
    }
    let mut rows: Vec<BenchRow> = sizes
        .iter()
        .map(|&horizon| BenchRow { horizon, iterations: 0, wall_ms: f64::INFINITY, converged: false })
        .collect();
    for _ in 0..repeats {
        for (row, problem) in rows.iter_mut().zip(&problems) {
            let t = Instant::now();
            let res = ip_solve(problem, opts)?;
            row.wall_ms = row.wall_ms.min(ms_since(t));
            row.iterations = res.iterations;
            row.converged = res.converged;
        }
    }
    Ok(rows)
}
