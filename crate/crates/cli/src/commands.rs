//! `simulate`, `match` and `uq`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use metamorph::algebra::{PointMomenta, TemplateVector};
use metamorph::dynamics::{Flow, ImageModel, ImageState, LandmarkModel, LandmarkState};
use metamorph::matching::{match_endpoints, MatchProblem, Shot};
use metamorph::stochastics::{integrate_with, BrownianDriver, Scheme, Trajectory};
use metamorph::uq::{ensemble_statistics, run_ensemble, EnsembleConfig, EnsembleResult};

use crate::config::{Form, Loaded, RunConfig, Structure};
use crate::error::CliError;
use crate::io::{self, Stamp};

/// Everything a command needs besides the config itself.
pub struct Context {
    pub loaded: Loaded,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub stamp: Stamp,
}

impl Context {
    fn config(&self) -> &RunConfig {
        &self.loaded.config
    }

    fn prepare_out(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out)
            .map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", self.out.display())))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn manifest(&self, outputs: Vec<String>, summary: serde_json::Value) -> Result<(), CliError> {
        io::write_json(
            &self.path("manifest.json"),
            &Manifest {
                tool: "metamorph",
                command: self.stamp.command,
                format_version: 1,
                cli_version: env!("CARGO_PKG_VERSION"),
                engine_version: metamorph::VERSION,
                config_sha256: &self.stamp.config_sha256,
                seed: self.stamp.seed,
                config: self.loaded.echo(),
                outputs,
                summary,
            },
        )
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    command: &'static str,
    format_version: u32,
    cli_version: &'static str,
    engine_version: &'static str,
    config_sha256: &'a str,
    seed: u64,
    config: RunConfig,
    outputs: Vec<String>,
    summary: serde_json::Value,
}

pub fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::DeterministicRk4 => "rk4",
        Scheme::StratonovichHeun => "heun",
        Scheme::ItoEulerMaruyama => "euler_maruyama",
    }
}

fn summary_columns(cfg: &RunConfig, model_probes: usize) -> Vec<String> {
    match cfg.structure {
        Structure::Landmarks => (0..cfg.landmarks.initial.len())
            .flat_map(|a| {
                ["x", "y"][..cfg.dim]
                    .iter()
                    .map(move |c| format!("q{a}_{c}"))
            })
            .collect(),
        Structure::Images => (0..model_probes).map(|i| format!("probe{i}")).collect(),
    }
}

fn trajectory_columns(cfg: &RunConfig, probes: usize) -> Vec<String> {
    let mut c = vec!["t".to_string()];
    c.extend(summary_columns(cfg, probes));
    c.push("h".into());
    c.push("momentum_residual".into());
    c
}

fn row<F: Flow>(flow: &F, t: f64, z: &F::State) -> Vec<f64> {
    let mut r = vec![t];
    r.extend(flow.summary(z));
    r.push(flow.hamiltonian(z));
    r.push(flow.momentum_map_residual(z));
    r
}

struct Run<S> {
    rows: Vec<Vec<f64>>,
    terminal: S,
}

fn run_flow<F: Flow>(flow: &F, z0: &F::State, cfg: &RunConfig, seed: u64) -> Result<Run<F::State>, CliError> {
    let steps = cfg.steps()?;
    let scheme = cfg.scheme();
    let path = if scheme.is_stochastic() && flow.noise_modes() > 0 {
        Some(BrownianDriver::new(seed, 0).path(flow.noise_modes(), steps, cfg.dt)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    let terminal = integrate_with(flow, z0, scheme, cfg.dt, steps, path.as_ref(), |k, z| {
        if k % cfg.record_every == 0 || k == steps {
            rows.push(row(flow, k as f64 * cfg.dt, z));
        }
    })?;
    check_finite(&rows)?;
    Ok(Run { rows, terminal })
}

/// A finite state can still overflow `h` or the residual.
fn check_finite(rows: &[Vec<f64>]) -> Result<(), CliError> {
    match rows.iter().find(|r| r.iter().any(|v| !v.is_finite())) {
        Some(r) => Err(CliError::Numerical(format!("non-finite diagnostics at t = {}", r[0]))),
        None => Ok(()),
    }
}

fn trajectory_rows<F: Flow>(flow: &F, traj: &Trajectory<F::State>, every: usize) -> Vec<Vec<f64>> {
    let last = traj.states.len() - 1;
    traj.states
        .iter()
        .enumerate()
        .filter(|(k, _)| k % every == 0 || *k == last)
        .map(|(k, z)| row(flow, k as f64 * traj.dt, z))
        .collect()
}

fn drift_summary(rows: &[Vec<f64>]) -> serde_json::Value {
    let width = rows[0].len();
    let h0 = rows[0][width - 2];
    let h1 = rows[rows.len() - 1][width - 2];
    let max_res = rows.iter().map(|r| r[width - 1]).fold(0.0, f64::max);
    serde_json::json!({
        "hamiltonian_initial": h0,
        "hamiltonian_final": h1,
        "hamiltonian_change": h1 - h0,
        "max_momentum_residual": max_res,
    })
}

pub fn landmark_state(cfg: &RunConfig) -> LandmarkState {
    let (q, sigma) = (cfg.landmark_initial(), cfg.landmark_sigma());
    match cfg.landmark_momentum() {
        Some((pos, w)) => LandmarkState::from_momentum(PointMomenta::new(pos, w), sigma, q),
        None => LandmarkState::zero_level(sigma, q),
    }
}

pub fn image_state(loaded: &Loaded, model: &ImageModel) -> Result<ImageState, CliError> {
    let img = &loaded.config.image;
    let n0 = loaded.image("image.initial", &img.initial, model.grid())?;
    let sigma = loaded.image("image.sigma", &img.sigma, model.grid())?;
    Ok(ImageState::zero_level(sigma, n0)?)
}

fn landmark_run(cfg: &RunConfig, model: &LandmarkModel, seed: u64) -> Result<Vec<Vec<f64>>, CliError> {
    let z0 = landmark_state(cfg);
    Ok(match cfg.form {
        Form::Tangled => run_flow(model, &z0, cfg, seed)?.rows,
        Form::Untangled => run_flow(&model.untangled(), &z0.untangle(), cfg, seed)?.rows,
    })
}

pub fn simulate(ctx: &Context) -> Result<(), CliError> {
    let cfg = ctx.config();
    ctx.prepare_out()?;
    let seed = ctx.stamp.seed;
    let mut outputs = vec!["trajectory.csv".to_string()];
    let (rows, columns, modes) = match cfg.structure {
        Structure::Landmarks => {
            let model = cfg.landmark_model()?;
            (landmark_run(cfg, &model, seed)?, trajectory_columns(cfg, 0), model.noise_modes())
        }
        Structure::Images => {
            let model = cfg.image_model()?;
            let z0 = image_state(&ctx.loaded, &model)?;
            let (rows, n) = match cfg.form {
                Form::Tangled => {
                    let r = run_flow(&model, &z0, cfg, seed)?;
                    (r.rows, r.terminal.n)
                }
                Form::Untangled => {
                    let r = run_flow(&model.untangled(), &z0.untangle(), cfg, seed)?;
                    (r.rows, r.terminal.n)
                }
            };
            let grid = model.grid();
            io::write_grid(&ctx.path("terminal_image.f64"), &ctx.stamp, n.values(), grid.dim(), grid.length())?;
            outputs.push("terminal_image.f64".into());
            outputs.push("terminal_image.f64.json".into());
            (rows, trajectory_columns(cfg, model.probes().len()), model.noise_modes())
        }
    };
    io::write_csv(&ctx.path("trajectory.csv"), &ctx.stamp, &columns, &rows)?;
    let mut summary = drift_summary(&rows);
    summary["steps"] = cfg.steps()?.into();
    summary["scheme"] = scheme_name(cfg.scheme()).into();
    summary["noise_modes"] = modes.into();
    outputs.push("manifest.json".into());
    ctx.manifest(outputs, summary)
}

#[derive(Serialize)]
struct MatchDoc<'a> {
    command: &'static str,
    config_sha256: &'a str,
    seed: u64,
    structure: Structure,
    mode: crate::config::MatchModeName,
    converged: bool,
    iterations: usize,
    epsilon: f64,
    objective: f64,
    action: f64,
    misfit: f64,
    endpoint_residual: f64,
    max_zero_level_residual: f64,
    hamiltonian_drift: f64,
    params: &'a [f64],
    /// Landmark covectors, or the name of the raw grid file for images.
    sigma0: serde_json::Value,
    history: &'a [Vec<f64>],
}

pub fn match_cmd(ctx: &Context) -> Result<(), CliError> {
    let cfg = ctx.config();
    ctx.prepare_out()?;
    let problem = match cfg.structure {
        Structure::Landmarks => MatchProblem::landmarks(
            cfg.landmark_model()?,
            cfg.landmark_initial(),
            cfg.landmark_target()?,
            cfg.dt,
        )?,
        Structure::Images => {
            let model = cfg.image_model()?;
            let img = &cfg.image;
            let Some(target) = &img.target else {
                return Err(CliError::Config {
                    key: "image.target".into(),
                    reason: "required for matching".into(),
                });
            };
            let n0 = ctx.loaded.image("image.initial", &img.initial, model.grid())?;
            let n1 = ctx.loaded.image("image.target", target, model.grid())?;
            MatchProblem::images(model, n0, n1, cfg.matching.modes, cfg.dt)?
        }
    };
    let result = match_endpoints(&problem, &cfg.match_options(ctx.threads))?;
    let mut outputs = vec!["match.json".to_string(), "trajectory.csv".to_string()];
    let (rows, columns) = match &result.trajectory {
        Shot::Landmarks(traj) => {
            let model = cfg.landmark_model()?;
            (trajectory_rows(&model, traj, cfg.record_every), trajectory_columns(cfg, 0))
        }
        Shot::Images(traj) => {
            let model = cfg.image_model()?;
            (trajectory_rows(&model, traj, cfg.record_every), trajectory_columns(cfg, model.probes().len()))
        }
    };
    io::write_csv(&ctx.path("trajectory.csv"), &ctx.stamp, &columns, &rows)?;
    let sigma0 = match &result.sigma0 {
        TemplateVector::Landmarks(s) => {
            serde_json::json!(s.iter().map(|p| p[..cfg.dim].to_vec()).collect::<Vec<_>>())
        }
        TemplateVector::Image(s) => {
            let g = s.grid();
            io::write_grid(&ctx.path("sigma0.f64"), &ctx.stamp, s.values(), g.dim(), g.length())?;
            outputs.push("sigma0.f64".into());
            outputs.push("sigma0.f64.json".into());
            serde_json::json!("sigma0.f64")
        }
    };
    let r = &result.report;
    io::write_json(
        &ctx.path("match.json"),
        &MatchDoc {
            command: "match",
            config_sha256: &ctx.stamp.config_sha256,
            seed: ctx.stamp.seed,
            structure: cfg.structure,
            mode: cfg.matching.mode,
            converged: result.converged,
            iterations: result.iterations,
            epsilon: result.epsilon,
            objective: result.objective,
            action: r.action,
            misfit: r.misfit,
            endpoint_residual: r.endpoint_residual,
            max_zero_level_residual: r.max_zero_level_residual,
            hamiltonian_drift: r.hamiltonian_drift,
            params: &result.params,
            sigma0,
            history: &result.history,
        },
    )?;
    outputs.push("manifest.json".into());
    ctx.manifest(
        outputs,
        serde_json::json!({
            "converged": result.converged,
            "iterations": result.iterations,
            "endpoint_residual": r.endpoint_residual,
        }),
    )?;
    if result.converged {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "matching did not converge after {} iterations (endpoint residual {:e}); results written to {}",
            result.iterations,
            r.endpoint_residual,
            ctx.out.display()
        )))
    }
}

#[derive(Serialize)]
struct Quantiles {
    min: f64,
    q25: f64,
    median: f64,
    q75: f64,
    max: f64,
}

impl From<[f64; 5]> for Quantiles {
    fn from(q: [f64; 5]) -> Self {
        Self {
            min: q[0],
            q25: q[1],
            median: q[2],
            q75: q[3],
            max: q[4],
        }
    }
}

#[derive(Serialize)]
struct Failure {
    index: usize,
    error: String,
}

#[derive(Serialize)]
struct StatisticsDoc<'a> {
    command: &'static str,
    config_sha256: &'a str,
    seed: u64,
    structure: Structure,
    scheme: &'static str,
    noise_modes: usize,
    horizon: f64,
    samples_requested: usize,
    samples: usize,
    failures: Vec<Failure>,
    components: Vec<String>,
    mean: Vec<f64>,
    /// Absent with fewer than two samples.
    standard_error: Option<Vec<f64>>,
    covariance_available: bool,
    covariance: Option<Vec<Vec<f64>>>,
    hamiltonian_drift_quantiles: Quantiles,
    residual_quantiles: Quantiles,
}

fn ensemble_for<F: Flow>(flow: &F, z0: &F::State, ec: &EnsembleConfig) -> Result<(EnsembleResult, usize), CliError> {
    Ok((run_ensemble(flow, z0, ec)?, flow.noise_modes()))
}

pub fn uq(ctx: &Context) -> Result<(), CliError> {
    let cfg = ctx.config();
    ctx.prepare_out()?;
    let ec = EnsembleConfig {
        scheme: cfg.scheme(),
        dt: cfg.dt,
        steps: cfg.steps()?,
        n_samples: cfg.ensemble.samples,
        master_seed: ctx.stamp.seed,
        record_every: cfg.record_every,
        threads: ctx.threads,
    };
    let (result, modes, components) = match cfg.structure {
        Structure::Landmarks => {
            let model = cfg.landmark_model()?;
            let z0 = landmark_state(cfg);
            let (r, j) = match cfg.form {
                Form::Tangled => ensemble_for(&model, &z0, &ec)?,
                Form::Untangled => ensemble_for(&model.untangled(), &z0.untangle(), &ec)?,
            };
            (r, j, summary_columns(cfg, 0))
        }
        Structure::Images => {
            let model = cfg.image_model()?;
            let z0 = image_state(&ctx.loaded, &model)?;
            let (r, j) = match cfg.form {
                Form::Tangled => ensemble_for(&model, &z0, &ec)?,
                Form::Untangled => ensemble_for(&model.untangled(), &z0.untangle(), &ec)?,
            };
            (r, j, summary_columns(cfg, model.probes().len()))
        }
    };
    if result.samples.is_empty() {
        return Err(CliError::Numerical(format!(
            "all {} samples failed; first: {}",
            result.failures.len(),
            result.failures[0].1
        )));
    }
    let stats = ensemble_statistics(&result)?;

    let mut columns = vec!["index".to_string()];
    columns.extend(components.iter().cloned());
    columns.push("hamiltonian_drift".into());
    columns.push("max_momentum_residual".into());
    let rows: Vec<Vec<f64>> = result
        .samples
        .iter()
        .map(|s| {
            let mut r = vec![s.index as f64];
            r.extend_from_slice(s.terminal());
            r.push(s.hamiltonian_drift());
            r.push(s.max_residual());
            r
        })
        .collect();
    io::write_csv(&ctx.path("samples.csv"), &ctx.stamp, &columns, &rows)?;

    let d = components.len();
    let mut columns = vec!["t".to_string()];
    columns.extend(components.iter().map(|c| format!("mean_{c}")));
    if stats.variance_series.is_some() {
        columns.extend(components.iter().map(|c| format!("var_{c}")));
    }
    let n = result.samples.len() as f64;
    let rows: Vec<Vec<f64>> = result
        .record_times
        .iter()
        .enumerate()
        .map(|(r, t)| {
            let mut row = vec![*t];
            for i in 0..d {
                row.push(result.samples.iter().map(|s| s.series[r][i]).sum::<f64>() / n);
            }
            if let Some(v) = &stats.variance_series {
                row.extend_from_slice(&v[r]);
            }
            row
        })
        .collect();
    io::write_csv(&ctx.path("moments.csv"), &ctx.stamp, &columns, &rows)?;

    let available = stats.covariance.is_some();
    io::write_json(
        &ctx.path("statistics.json"),
        &StatisticsDoc {
            command: "uq",
            config_sha256: &ctx.stamp.config_sha256,
            seed: ctx.stamp.seed,
            structure: cfg.structure,
            scheme: scheme_name(cfg.scheme()),
            noise_modes: modes,
            horizon: cfg.horizon,
            samples_requested: cfg.ensemble.samples,
            samples: stats.samples,
            failures: result
                .failures
                .iter()
                .map(|(i, e)| Failure {
                    index: *i,
                    error: e.to_string(),
                })
                .collect(),
            components,
            mean: stats.mean.clone(),
            standard_error: available.then(|| stats.standard_error.clone()),
            covariance_available: available,
            covariance: stats.covariance.clone(),
            hamiltonian_drift_quantiles: stats.hamiltonian_drift_quantiles.into(),
            residual_quantiles: stats.residual_quantiles.into(),
        },
    )?;
    ctx.manifest(
        vec![
            "samples.csv".into(),
            "moments.csv".into(),
            "statistics.json".into(),
            "manifest.json".into(),
        ],
        serde_json::json!({
            "samples": stats.samples,
            "failures": stats.failures,
            "scheme": scheme_name(cfg.scheme()),
            "noise_modes": modes,
        }),
    )
}

pub fn default_out(command: &str) -> PathBuf {
    Path::new("metamorph-out").join(command)
}
