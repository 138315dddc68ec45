//! Monte Carlo ensembles, statistics and convergence studies.

use rayon::prelude::*;

use crate::algebra::fields::GridVectorField;
use crate::algebra::kernel::PlaneField;
use crate::algebra::VectorField;
use crate::dynamics::images::{ImageUntangled, UntangledImages};
use crate::dynamics::landmarks::{LandmarkUntangled, UntangledLandmarks};
use crate::dynamics::Flow;
use crate::error::{invalid, Error, Result};
use crate::linear::{dot2, Linear};
use crate::stochastics::noise::{transport_velocity_increment, NoiseBasis};
use crate::stochastics::schemes::{integrate_with, Scheme};
use crate::stochastics::tracers::{advance_tracers, pushed_forward, GridVelocity, TracerCloud, VelocitySource};
use crate::stochastics::BrownianDriver;

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(invalid("threads", "must be ≥ 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| invalid("threads", e.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: usize,
    pub n_samples: usize,
    pub master_seed: u64,
    /// Summaries are recorded every `record_every` steps and at the end.
    pub record_every: usize,
    pub threads: Option<usize>,
}

impl EnsembleConfig {
    pub fn new(scheme: Scheme, dt: f64, steps: usize, n_samples: usize, master_seed: u64) -> Self {
        Self {
            scheme,
            dt,
            steps,
            n_samples,
            master_seed,
            record_every: steps.max(1),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if self.n_samples == 0 {
            return Err(invalid("n_samples", "must be ≥ 1"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be ≥ 1"));
        }
        Ok(())
    }

    fn record_steps(&self) -> Vec<usize> {
        let mut steps: Vec<usize> = (0..=self.steps).step_by(self.record_every).collect();
        if steps.last() != Some(&self.steps) {
            steps.push(self.steps);
        }
        steps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub index: usize,
    /// Summary at each record time; the last entry is terminal.
    pub series: Vec<Vec<f64>>,
    pub hamiltonian: Vec<f64>,
    pub residual: Vec<f64>,
}

impl SampleRecord {
    pub fn terminal(&self) -> &[f64] {
        self.series.last().expect("at least one record")
    }

    /// `|h(T) - h(0)| / |h(0)|`, or the absolute change when `h(0) = 0`.
    pub fn hamiltonian_drift(&self) -> f64 {
        let h0 = self.hamiltonian[0];
        let d = (self.hamiltonian.last().unwrap() - h0).abs();
        if h0 != 0.0 {
            d / h0.abs()
        } else {
            d
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub master_seed: u64,
    pub record_times: Vec<f64>,
    /// Successful samples in index order.
    pub samples: Vec<SampleRecord>,
    /// Indices of samples that produced a non-finite state.
    pub failures: Vec<(usize, Error)>,
}

/// Sample `i` is driven by `BrownianDriver::new(master_seed, i)`.
pub fn run_ensemble<F: Flow>(flow: &F, z0: &F::State, config: &EnsembleConfig) -> Result<EnsembleResult> {
    config.validate()?;
    let record = config.record_steps();
    let run = |index: usize| -> std::result::Result<SampleRecord, Error> {
        let path = BrownianDriver::new(config.master_seed, index as u64).path(
            flow.noise_modes(),
            config.steps,
            config.dt,
        )?;
        let mut rec = SampleRecord {
            index,
            series: Vec::with_capacity(record.len()),
            hamiltonian: Vec::with_capacity(record.len()),
            residual: Vec::with_capacity(record.len()),
        };
        let mut next = 0;
        integrate_with(flow, z0, config.scheme, config.dt, config.steps, Some(&path), |k, z| {
            if next < record.len() && record[next] == k {
                rec.series.push(flow.summary(z));
                rec.hamiltonian.push(flow.hamiltonian(z));
                rec.residual.push(flow.momentum_map_residual(z));
                next += 1;
            }
        })?;
        Ok(rec)
    };
    let outcomes: Vec<_> =
        with_threads(config.threads, || (0..config.n_samples).into_par_iter().map(run).collect())?;
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => samples.push(r),
            Err(e) => failures.push((i, e)),
        }
    }
    Ok(EnsembleResult {
        master_seed: config.master_seed,
        record_times: record.iter().map(|k| *k as f64 * config.dt).collect(),
        samples,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStatistics {
    pub samples: usize,
    pub failures: usize,
    pub mean: Vec<f64>,
    pub standard_error: Vec<f64>,
    /// Unbiased covariance of the terminal summary; `None` with one sample.
    pub covariance: Option<Vec<Vec<f64>>>,
    /// Per-component unbiased variance at each record time.
    pub variance_series: Option<Vec<Vec<f64>>>,
    /// Minimum, quartiles and maximum of the relative Hamiltonian drift.
    pub hamiltonian_drift_quantiles: [f64; 5],
    pub residual_quantiles: [f64; 5],
}

fn quantiles(mut v: Vec<f64>) -> [f64; 5] {
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    };
    [q(0.0), q(0.25), q(0.5), q(0.75), q(1.0)]
}

/// Mean accumulated as offsets from the first row, so identical rows give
/// that row back exactly.
fn mean_of(rows: &[&[f64]]) -> Vec<f64> {
    let n = rows.len() as f64;
    let base = rows[0];
    let mut d = vec![0.0; base.len()];
    for r in rows {
        for ((a, b), c) in d.iter_mut().zip(r.iter()).zip(base) {
            *a += b - c;
        }
    }
    base.iter().zip(&d).map(|(c, a)| c + a / n).collect()
}

fn covariance_of(rows: &[&[f64]], mean: &[f64]) -> Vec<Vec<f64>> {
    let d = mean.len();
    let denom = (rows.len() - 1) as f64;
    let mut c = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let s: f64 = rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum();
            c[i][j] = s / denom;
            c[j][i] = c[i][j];
        }
    }
    c
}

pub fn ensemble_statistics(result: &EnsembleResult) -> Result<EnsembleStatistics> {
    let n = result.samples.len();
    if n == 0 {
        return Err(Error::InsufficientSamples { needed: 1, have: 0 });
    }
    let terminal: Vec<&[f64]> = result.samples.iter().map(|s| s.terminal()).collect();
    let mean = mean_of(&terminal);
    let (covariance, standard_error, variance_series) = if n >= 2 {
        let cov = covariance_of(&terminal, &mean);
        let se = (0..mean.len()).map(|i| (cov[i][i] / n as f64).sqrt()).collect();
        let series = (0..result.record_times.len())
            .map(|r| {
                let rows: Vec<&[f64]> = result.samples.iter().map(|s| &s.series[r][..]).collect();
                let m = mean_of(&rows);
                (0..m.len())
                    .map(|i| rows.iter().map(|x| (x[i] - m[i]).powi(2)).sum::<f64>() / (n - 1) as f64)
                    .collect()
            })
            .collect();
        (Some(cov), se, Some(series))
    } else {
        (None, vec![f64::NAN; mean.len()], None)
    };
    Ok(EnsembleStatistics {
        samples: n,
        failures: result.failures.len(),
        mean,
        standard_error,
        covariance,
        variance_series,
        hamiltonian_drift_quantiles: quantiles(result.samples.iter().map(|s| s.hamiltonian_drift()).collect()),
        residual_quantiles: quantiles(result.samples.iter().map(|s| s.max_residual()).collect()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongOrderConfig {
    pub scheme: Scheme,
    pub dt_levels: Vec<f64>,
    pub horizon: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    /// The reference path runs at `min(dt_levels) / refinement`.
    pub refinement: usize,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongOrder {
    pub slope: f64,
    pub dts: Vec<f64>,
    /// Mean terminal coordinate error against the reference at each level.
    pub errors: Vec<f64>,
}

fn steps_for(horizon: f64, dt: f64) -> Result<usize> {
    let n = (horizon / dt).round();
    if n < 1.0 || (n * dt - horizon).abs() > 1e-9 * horizon {
        return Err(Error::Refinement(format!("dt {dt} does not divide the horizon {horizon}")));
    }
    Ok(n as usize)
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Pathwise error against a fine reference, with every coarse path built by
/// summing the reference increments.
pub fn strong_order_estimate<F: Flow>(flow: &F, z0: &F::State, config: &StrongOrderConfig) -> Result<StrongOrder> {
    if config.dt_levels.len() < 3 {
        return Err(Error::Refinement(format!(
            "need at least 3 dt levels, got {}",
            config.dt_levels.len()
        )));
    }
    if config.n_paths == 0 || config.refinement == 0 {
        return Err(invalid("n_paths", "paths and refinement must be ≥ 1"));
    }
    let dt_min = config.dt_levels.iter().copied().fold(f64::INFINITY, f64::min);
    let dt_ref = dt_min / config.refinement as f64;
    let ref_steps = steps_for(config.horizon, dt_ref)?;
    let mut factors = Vec::new();
    for dt in &config.dt_levels {
        let f = (dt / dt_ref).round() as usize;
        if f == 0 || ((f as f64) * dt_ref - dt).abs() > 1e-9 * dt || ref_steps % f != 0 {
            return Err(Error::Refinement(format!("dt {dt} is not a multiple of the reference step")));
        }
        factors.push(f);
    }
    let per_path = |index: usize| -> Result<Vec<f64>> {
        let fine = BrownianDriver::new(config.master_seed, index as u64).path(flow.noise_modes(), ref_steps, dt_ref)?;
        let reference = integrate_with(flow, z0, config.scheme, dt_ref, ref_steps, Some(&fine), |_, _| {})?;
        factors
            .iter()
            .map(|&f| {
                let coarse = fine.coarsen(f)?;
                let mut z = integrate_with(flow, z0, config.scheme, coarse.dt(), ref_steps / f, Some(&coarse), |_, _| {})?;
                z.axpy(-1.0, &reference);
                Ok(z.coord_norm())
            })
            .collect()
    };
    let per: Vec<Result<Vec<f64>>> =
        with_threads(config.threads, || (0..config.n_paths).into_par_iter().map(per_path).collect())?;
    let mut errors = vec![0.0; factors.len()];
    for p in per {
        for (e, v) in errors.iter_mut().zip(p?) {
            *e += v;
        }
    }
    errors.iter_mut().for_each(|e| *e /= config.n_paths as f64);
    if errors.iter().any(|e| e.is_nan() || *e <= 0.0) {
        return Err(Error::Refinement("a dt level reproduces the reference exactly".into()));
    }
    Ok(StrongOrder {
        slope: log_log_slope(&config.dt_levels, &errors),
        dts: config.dt_levels.clone(),
        errors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl InvariantSeries {
    /// `max_t |c(t) - c(0)| / |c(0)|`, or the absolute drift when `c(0) = 0`.
    pub fn relative_drift(&self) -> f64 {
        let c0 = self.values[0];
        let d = self.values.iter().map(|c| (c - c0).abs()).fold(0.0, f64::max);
        if c0 != 0.0 {
            d / c0.abs()
        } else {
            d
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn invariant_series<F: Flow>(
    flow: &F,
    z0: &F::State,
    scheme: Scheme,
    dt: f64,
    steps: usize,
    path: Option<&crate::stochastics::BrownianPath>,
    mut cloud: TracerCloud,
    increment: impl Fn(&F::State, &[f64]) -> Result<Box<dyn VelocitySource>>,
    pairing: impl Fn(&F::State, &TracerCloud) -> f64,
) -> Result<InvariantSeries> {
    let zeros = vec![0.0; flow.noise_modes()];
    let mut values = Vec::with_capacity(steps + 1);
    let mut prev: Option<F::State> = None;
    let mut failure: Option<Error> = None;
    integrate_with(flow, z0, scheme, dt, steps, path, |k, z| {
        if failure.is_some() {
            return;
        }
        if let Some(p) = prev.take() {
            let dw = match path {
                Some(path) if scheme.is_stochastic() => path.increment(k - 1),
                _ => &zeros[..],
            };
            let moved = increment(&p, dw)
                .and_then(|now| increment(z, dw).and_then(|next| advance_tracers(&cloud, &*now, &*next)));
            match moved {
                Ok(c) => cloud = c,
                Err(e) => {
                    failure = Some(e);
                    return;
                }
            }
        }
        values.push(pairing(z, &cloud));
        prev = Some(z.clone());
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(InvariantSeries {
        times: (0..=steps).map(|k| k as f64 * dt).collect(),
        values,
    })
}

/// `⟨g_t* M_t, w⟩ = Σ_b P_b · F_b w(X_b)` for the transported cloud `M`,
/// with tracers seeded at the initial cloud positions.
pub fn advection_invariant_landmarks(
    flow: &UntangledLandmarks<'_>,
    z0: &LandmarkUntangled,
    scheme: Scheme,
    dt: f64,
    steps: usize,
    path: Option<&crate::stochastics::BrownianPath>,
    w: &PlaneField,
) -> Result<InvariantSeries> {
    if z0.m.is_empty() {
        return Ok(InvariantSeries {
            times: (0..=steps).map(|k| k as f64 * dt).collect(),
            values: vec![0.0; steps + 1],
        });
    }
    let noise = NoiseBasis::Plane(flow.model().noise().to_vec());
    let cloud = TracerCloud::new(z0.m.positions.clone())?;
    invariant_series(
        flow,
        z0,
        scheme,
        dt,
        steps,
        path,
        cloud,
        |z, dw| {
            let u = VectorField::Plane(PlaneField::Kernel(flow.velocity(z)));
            match transport_velocity_increment(&u, &noise, dt, dw)? {
                VectorField::Plane(f) => Ok(Box::new(f) as Box<dyn VelocitySource>),
                VectorField::Grid(_) => unreachable!("plane inputs give a plane field"),
            }
        },
        |z, cloud| {
            pushed_forward(cloud, w)
                .iter()
                .zip(&z.m.weights)
                .map(|(fw, p)| dot2(*fw, *p))
                .sum()
        },
    )
}

/// `⟨g_t* M_t, w⟩ = Σ_j M_t(x_j) · F_j w(X_j) det F_j ΔV`, with a tracer on
/// every grid node and `M_t` interpolated spectrally.
pub fn advection_invariant_images(
    flow: &UntangledImages<'_>,
    z0: &ImageUntangled,
    scheme: Scheme,
    dt: f64,
    steps: usize,
    path: Option<&crate::stochastics::BrownianPath>,
    w: &GridVectorField,
) -> Result<InvariantSeries> {
    let model = flow.model();
    let grid = model.grid().clone();
    w.same_grid(&grid, "test field")?;
    let noise = NoiseBasis::Grid(model.noise().to_vec());
    let cloud = TracerCloud::periodic(grid.nodes().collect(), grid.length())?;
    let volume = grid.cell_volume();
    invariant_series(
        flow,
        z0,
        scheme,
        dt,
        steps,
        path,
        cloud,
        |z, dw| {
            let u = VectorField::Grid(model.velocity(&z.momentum()));
            match transport_velocity_increment(&u, &noise, dt, dw)? {
                VectorField::Grid(f) => Ok(Box::new(GridVelocity::new(&f)) as Box<dyn VelocitySource>),
                VectorField::Plane(_) => unreachable!("grid inputs give a grid field"),
            }
        },
        |z, cloud| {
            let m = GridVelocity::new(&z.m);
            cloud
                .positions()
                .iter()
                .zip(cloud.gradients())
                .enumerate()
                .map(|(j, (x, f))| {
                    let det = f[0][0] * f[1][1] - f[0][1] * f[1][0];
                    let fw = crate::linear::matvec(f, w.at(j));
                    dot2(m.value(*x), fw) * det
                })
                .sum::<f64>()
                * volume
        },
    )
}

/// Convenience: terminal summary mean and its standard error for a single
/// component across an ensemble.
pub fn component_mean(result: &EnsembleResult, component: usize) -> Result<(f64, f64)> {
    let stats = ensemble_statistics(result)?;
    let m = *stats
        .mean
        .get(component)
        .ok_or_else(|| invalid("component", format!("summary has {} entries", stats.mean.len())))?;
    Ok((m, stats.standard_error[component]))
}

