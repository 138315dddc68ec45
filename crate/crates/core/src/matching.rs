//! Boundary-value matching by shooting on the zero level of the momentum
//! map.
//!
//! The unknown is `σ₀`; the initial momentum is slaved to `μ₀ = -σ₀ ⋄ n₀`.
//! The objective is `J(σ₀) = S + misfit(n(1), n₁) / ε²`, minimized by
//! gradient descent with central finite-difference gradients, Barzilai–Borwein
//! trial steps and Armijo backtracking.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::algebra::fields::ScalarField;
use crate::algebra::TemplateVector;
use crate::dynamics::images::{ImageModel, ImageState};
use crate::dynamics::landmarks::{LandmarkModel, LandmarkState};
use crate::dynamics::Flow;
use crate::error::{invalid, Error, Result};
use crate::linear::{dot2, scale2, sub2, Linear, Point};
use crate::stochastics::schemes::{integrate, Scheme, Trajectory};
use crate::uq::with_threads;

#[derive(Debug, Clone, PartialEq)]
enum Endpoints {
    Landmarks {
        model: LandmarkModel,
        q0: Vec<Point>,
        q1: Vec<Point>,
    },
    Images {
        model: ImageModel,
        n0: ScalarField,
        n1: ScalarField,
        modes: usize,
    },
}

/// Endpoint templates, Lagrangian and integrator settings on `t ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchProblem {
    endpoints: Endpoints,
    dt: f64,
    steps: usize,
}

/// A forward shot from `(μ₀ = -σ₀ ⋄ n₀, σ₀, n₀)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Shot {
    Landmarks(Trajectory<LandmarkState>),
    Images(Trajectory<ImageState>),
}

/// Diagnostics of a shot against the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotReport {
    pub action: f64,
    pub misfit: f64,
    pub endpoint_residual: f64,
    pub max_zero_level_residual: f64,
    pub hamiltonian_drift: f64,
}

fn check_dt(dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(invalid("dt", format!("must lie in (0, 0.1], got {dt}")));
    }
    let steps = (1.0 / dt).round();
    if (steps * dt - 1.0).abs() > 1e-9 {
        return Err(invalid("dt", format!("1/dt must be an integer, got dt = {dt}")));
    }
    Ok(steps as usize)
}

/// Real Fourier basis `1, cos(2πkx/L), sin(2πkx/L)` for `k = 1..=modes`.
fn fourier_1d(modes: usize, x: f64, length: f64) -> Vec<f64> {
    let mut out = vec![1.0];
    for k in 1..=modes {
        let phase = 2.0 * PI * k as f64 * x / length;
        out.push(phase.cos());
        out.push(phase.sin());
    }
    out
}

impl MatchProblem {
    pub fn landmarks(model: LandmarkModel, q0: Vec<Point>, q1: Vec<Point>, dt: f64) -> Result<Self> {
        if q0.len() != q1.len() {
            return Err(Error::DomainMismatch(format!(
                "{} initial and {} target landmarks",
                q0.len(),
                q1.len()
            )));
        }
        if q0.is_empty() {
            return Err(invalid("landmarks", "need at least one landmark"));
        }
        Ok(Self {
            endpoints: Endpoints::Landmarks { model, q0, q1 },
            dt,
            steps: check_dt(dt)?,
        })
    }

    /// Image matching with `σ₀` restricted to Fourier modes up to `modes` per
    /// axis.
    pub fn images(model: ImageModel, n0: ScalarField, n1: ScalarField, modes: usize, dt: f64) -> Result<Self> {
        n0.same_grid(model.grid(), "n0")?;
        n1.same_grid(model.grid(), "n1")?;
        let n = model.grid().points_per_axis();
        if 2 * modes >= n {
            return Err(invalid("modes", format!("{modes} modes do not fit a {n}-point grid")));
        }
        Ok(Self {
            endpoints: Endpoints::Images { model, n0, n1, modes },
            dt,
            steps: check_dt(dt)?,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of optimization parameters.
    pub fn dimension(&self) -> usize {
        match &self.endpoints {
            Endpoints::Landmarks { model, q0, .. } => model.dim() * q0.len(),
            Endpoints::Images { model, modes, .. } => (2 * modes + 1).pow(model.grid().dim() as u32),
        }
    }

    /// Maps parameters to `σ₀`.
    pub fn sigma0(&self, params: &[f64]) -> Result<TemplateVector> {
        if params.len() != self.dimension() {
            return Err(invalid(
                "sigma0",
                format!("expected {} parameters, got {}", self.dimension(), params.len()),
            ));
        }
        Ok(match &self.endpoints {
            Endpoints::Landmarks { model, .. } => {
                let d = model.dim();
                TemplateVector::Landmarks(
                    params
                        .chunks(d)
                        .map(|c| if d == 1 { [c[0], 0.0] } else { [c[0], c[1]] })
                        .collect(),
                )
            }
            Endpoints::Images { model, modes, .. } => {
                let grid = model.grid();
                let l = grid.length();
                TemplateVector::Image(ScalarField::from_fn(grid, |x| {
                    let bx = fourier_1d(*modes, x[0], l);
                    if grid.dim() == 1 {
                        bx.iter().zip(params).map(|(b, c)| b * c).sum()
                    } else {
                        let by = fourier_1d(*modes, x[1], l);
                        let mut s = 0.0;
                        for (i, a) in bx.iter().enumerate() {
                            for (j, b) in by.iter().enumerate() {
                                s += params[i * by.len() + j] * a * b;
                            }
                        }
                        s
                    }
                }))
            }
        })
    }

    /// RK4 trajectory from the zero level.
    pub fn shoot(&self, params: &[f64]) -> Result<Shot> {
        let sigma0 = self.sigma0(params)?;
        match (&self.endpoints, sigma0) {
            (Endpoints::Landmarks { model, q0, .. }, TemplateVector::Landmarks(s)) => {
                let z0 = LandmarkState::zero_level(s, q0.clone());
                integrate(model, &z0, Scheme::DeterministicRk4, self.dt, self.steps, None).map(Shot::Landmarks)
            }
            (Endpoints::Images { model, n0, .. }, TemplateVector::Image(s)) => {
                let z0 = ImageState::zero_level(s, n0.clone())?;
                integrate(model, &z0, Scheme::DeterministicRk4, self.dt, self.steps, None).map(Shot::Images)
            }
            _ => unreachable!("parameterization follows the endpoints"),
        }
    }

    /// Action, misfit and residual diagnostics of a shot.
    pub fn report(&self, shot: &Shot) -> Result<ShotReport> {
        match (&self.endpoints, shot) {
            (Endpoints::Landmarks { model, q1, .. }, Shot::Landmarks(traj)) => {
                let end = traj.terminal();
                Ok(ShotReport {
                    action: action_value_landmarks(model, traj),
                    misfit: end.q.iter().zip(q1).map(|(a, b)| dot2(sub2(*a, *b), sub2(*a, *b))).sum(),
                    endpoint_residual: model.endpoint_residual(end, q1)?,
                    max_zero_level_residual: max_over(traj, |z| model.euler_lagrange_residual(z)),
                    hamiltonian_drift: hamiltonian_drift(model, traj),
                })
            }
            (Endpoints::Images { model, n1, .. }, Shot::Images(traj)) => {
                let end = traj.terminal();
                let mut diff = end.n.clone();
                diff.axpy(-1.0, n1);
                Ok(ShotReport {
                    action: action_value_images(model, traj),
                    misfit: diff.integrate_product(&diff),
                    endpoint_residual: model.endpoint_residual(end, n1)?,
                    max_zero_level_residual: max_over(traj, |z| model.euler_lagrange_residual(z)),
                    hamiltonian_drift: hamiltonian_drift(model, traj),
                })
            }
            _ => Err(Error::Representation("shot does not belong to this problem".into())),
        }
    }

    /// `J = S + misfit / ε²`.
    pub fn objective(&self, params: &[f64], epsilon: f64) -> Result<f64> {
        let r = self.report(&self.shoot(params)?)?;
        Ok(r.action + r.misfit / (epsilon * epsilon))
    }
}

fn max_over<S>(traj: &Trajectory<S>, f: impl Fn(&S) -> f64) -> f64 {
    traj.states.iter().map(f).fold(0.0, f64::max)
}

fn hamiltonian_drift<F: Flow>(flow: &F, traj: &Trajectory<F::State>) -> f64 {
    let h0 = flow.hamiltonian(&traj.states[0]);
    let d = traj
        .states
        .iter()
        .map(|z| (flow.hamiltonian(z) - h0).abs())
        .fold(0.0, f64::max);
    if h0 != 0.0 {
        d / h0.abs()
    } else {
        d
    }
}

fn trapezoid(values: impl Iterator<Item = f64>, dt: f64) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.len() < 2 {
        return 0.0;
    }
    let inner: f64 = v[1..v.len() - 1].iter().sum();
    dt * (inner + 0.5 * (v[0] + v[v.len() - 1]))
}

/// Trapezoidal `∫₀¹ ℓ(u, q, ν) dt` along a landmark trajectory.
pub fn action_value_landmarks(model: &LandmarkModel, traj: &Trajectory<LandmarkState>) -> f64 {
    trapezoid(
        traj.states.iter().map(|z| {
            let nu: Vec<Point> = z.sigma.iter().map(|s| scale2(model.sigma_m_sq(), *s)).collect();
            model.lagrangian(&model.velocity(z), &nu, &z.q)
        }),
        traj.dt,
    )
}

/// Trapezoidal `∫₀¹ ℓ(u, n, ν) dt` along an image trajectory.
pub fn action_value_images(model: &ImageModel, traj: &Trajectory<ImageState>) -> f64 {
    trapezoid(
        traj.states.iter().map(|z| {
            let mut nu = z.sigma.clone();
            nu.scale(model.sigma_m_sq());
            model.lagrangian(&model.velocity(&z.mu), &nu, &z.n)
        }),
        traj.dt,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    /// Minimize with the configured `ε`.
    Penalty,
    /// Drive `ε` down to `exact_epsilon` by continuation and require the
    /// endpoint condition to hold.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchOptions {
    pub mode: MatchMode,
    pub epsilon: f64,
    pub exact_epsilon: f64,
    pub max_iters: usize,
    /// Endpoint residual required for convergence in exact mode.
    pub tolerance: f64,
    /// Stop when `|∇J| ≤ grad_tolerance · (1 + |J|)`.
    pub grad_tolerance: f64,
    /// Finite-difference step relative to `max(1, |σ₀|∞)`.
    pub fd_step: f64,
    pub threads: Option<usize>,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            mode: MatchMode::Penalty,
            epsilon: 1e-2,
            exact_epsilon: 1e-4,
            max_iters: 200,
            tolerance: 1e-6,
            grad_tolerance: 1e-9,
            fd_step: 1e-5,
            threads: None,
        }
    }
}

impl MatchOptions {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("exact_epsilon", self.exact_epsilon),
            ("tolerance", self.tolerance),
            ("fd_step", self.fd_step),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters", "must be ≥ 1"));
        }
        Ok(())
    }

    fn schedule(&self) -> Vec<f64> {
        match self.mode {
            MatchMode::Penalty => vec![self.epsilon],
            MatchMode::Exact => {
                let mut eps = Vec::new();
                let mut e = self.epsilon.max(self.exact_epsilon);
                while e > self.exact_epsilon * 1.000_001 {
                    eps.push(e);
                    e /= 10.0;
                }
                eps.push(self.exact_epsilon);
                eps
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub params: Vec<f64>,
    pub sigma0: TemplateVector,
    pub trajectory: Shot,
    pub report: ShotReport,
    /// Final `ε` and objective value at the returned iterate.
    pub epsilon: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every accepted step, per continuation stage.
    pub history: Vec<Vec<f64>>,
}

fn fd_gradient(problem: &MatchProblem, x: &[f64], eps: f64, h: f64) -> Result<Vec<f64>> {
    let evals: Vec<Result<f64>> = (0..2 * x.len())
        .into_par_iter()
        .map(|k| {
            let mut y = x.to_vec();
            y[k / 2] += if k % 2 == 0 { h } else { -h };
            problem.objective(&y, eps)
        })
        .collect();
    let mut g = Vec::with_capacity(x.len());
    for pair in evals.chunks(2) {
        let (a, b) = (pair[0].clone()?, pair[1].clone()?);
        g.push((a - b) / (2.0 * h));
    }
    Ok(g)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Solves the matching problem. A non-converged result is still returned,
/// with `converged = false`.
pub fn match_endpoints(problem: &MatchProblem, options: &MatchOptions) -> Result<MatchResult> {
    options.validate()?;
    with_threads(options.threads, || run_match(problem, options))?
}

fn run_match(problem: &MatchProblem, options: &MatchOptions) -> Result<MatchResult> {
    let mut x = vec![0.0; problem.dimension()];
    let mut iterations = 0;
    let mut history = Vec::new();
    let schedule = options.schedule();
    let mut hit_limit = false;
    for &eps in &schedule {
        let mut f = problem.objective(&x, eps)?;
        let mut stage = vec![f];
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        hit_limit = true;
        for _ in 0..options.max_iters {
            let h = options.fd_step * x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let g = fd_gradient(problem, &x, eps, h)?;
            let gn = norm(&g);
            if gn <= options.grad_tolerance * (1.0 + f.abs()) {
                hit_limit = false;
                break;
            }
            let mut alpha = match &prev {
                Some((xp, gp)) => {
                    let s: Vec<f64> = x.iter().zip(xp).map(|(a, b)| a - b).collect();
                    let y: Vec<f64> = g.iter().zip(gp).map(|(a, b)| a - b).collect();
                    let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
                    let ss: f64 = s.iter().map(|a| a * a).sum();
                    if sy > 0.0 {
                        ss / sy
                    } else {
                        1.0 / gn
                    }
                }
                None => 1.0f64.min(1.0 / gn),
            };
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
                match problem.objective(&trial, eps) {
                    Ok(ft) if ft <= f - 1e-4 * alpha * gn * gn => {
                        accepted = Some((trial, ft));
                        break;
                    }
                    _ => alpha *= 0.5,
                }
            }
            let Some((trial, ft)) = accepted else {
                hit_limit = false;
                break;
            };
            iterations += 1;
            let step = norm(&trial.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
            prev = Some((std::mem::replace(&mut x, trial), g));
            let decrease = f - ft;
            f = ft;
            stage.push(f);
            if step <= 1e-14 * (1.0 + norm(&x)) || decrease <= 1e-16 * (1.0 + f.abs()) {
                hit_limit = false;
                break;
            }
        }
        history.push(stage);
    }
    let epsilon = *schedule.last().expect("non-empty schedule");
    let trajectory = problem.shoot(&x)?;
    let report = problem.report(&trajectory)?;
    let objective = report.action + report.misfit / (epsilon * epsilon);
    let converged = match options.mode {
        MatchMode::Exact => report.endpoint_residual <= options.tolerance,
        MatchMode::Penalty => !hit_limit,
    };
    Ok(MatchResult {
        sigma0: problem.sigma0(&x)?,
        params: x,
        trajectory,
        report,
        epsilon,
        objective,
        iterations,
        converged,
        history,
    })
}
