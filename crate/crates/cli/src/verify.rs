//! `verify`: structural and numerical self-checks on both data structures.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use metamorph::algebra::{
    self, grid_ops, point_ops, Grid, GridVectorField, Kernel, KernelField, OneFormDensity, PlaneField, PointMomenta,
    ScalarField, Template, TemplateVector, VectorField,
};
use metamorph::dynamics::{Flow, ImageModel, ImageState, LandmarkModel, LandmarkState};
use metamorph::linear::{Linear, Point};
use metamorph::stochastics::{integrate, integrate_with, BrownianDriver, Scheme};
use metamorph::uq::advection_invariant_landmarks;

use crate::commands::{image_state, landmark_state};
use crate::config::{
    BumpConfig, FourierTerm, ImageData, ImageSource, Loaded, NoiseConfig, NoiseKind, RunConfig, Structure,
};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub check: &'static str,
    pub structure: &'static str,
    pub status: Status,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    /// `"max"` when `value` must not exceed `tolerance`, `"min"` when it must
    /// reach it.
    pub bound: &'static str,
    pub detail: String,
}

impl Check {
    fn measured(check: &'static str, structure: &'static str, value: f64, tolerance: f64, detail: String) -> Self {
        let status = if value.is_finite() && value <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            check,
            structure,
            status,
            value: Some(value),
            tolerance: Some(tolerance),
            bound: "max",
            detail,
        }
    }

    fn ratio(check: &'static str, structure: &'static str, ratio: f64, need: f64, detail: String) -> Self {
        Self {
            status: if ratio >= need { Status::Pass } else { Status::Fail },
            bound: "min",
            ..Self::measured(check, structure, ratio, need, detail)
        }
    }

    fn skipped(check: &'static str, structure: &'static str, why: &str) -> Self {
        Self {
            check,
            structure,
            status: Status::Skipped,
            value: None,
            tolerance: None,
            bound: "max",
            detail: why.into(),
        }
    }

    fn failed(check: &'static str, structure: &'static str, err: CliError) -> Self {
        Self {
            check,
            structure,
            status: Status::Fail,
            value: None,
            tolerance: None,
            bound: "max",
            detail: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn builtin_landmarks(base: &RunConfig) -> RunConfig {
    let mut c = RunConfig {
        structure: Structure::Landmarks,
        dim: 2,
        dt: base.dt,
        horizon: base.horizon,
        ..RunConfig::default()
    };
    c.landmarks.initial = vec![vec![0.0, 0.0], vec![1.0, 0.3], vec![-0.2, 1.1]];
    c.landmarks.sigma = Some(vec![vec![1.0, 0.2], vec![-0.4, 0.8], vec![0.3, -0.9]]);
    c.noise = NoiseConfig {
        kind: NoiseKind::Bumps,
        bumps: vec![BumpConfig {
            center: vec![0.0, 0.0],
            direction: vec![1.0, 0.0],
            amplitude: 0.5,
            scale: 1.0,
        }],
        ..NoiseConfig::default()
    };
    c
}

fn builtin_images(base: &RunConfig) -> RunConfig {
    let term = |k: i32, cos: f64, sin: f64| FourierTerm {
        wavenumber: vec![k],
        cos,
        sin,
    };
    RunConfig {
        structure: Structure::Images,
        dim: 1,
        dt: base.dt,
        horizon: base.horizon,
        image: ImageData {
            initial: ImageSource::Fourier {
                constant: 0.0,
                terms: vec![term(1, 0.0, 1.0), term(2, 0.3, 0.0)],
            },
            sigma: ImageSource::Fourier {
                constant: 0.0,
                terms: vec![term(1, 0.5, 0.0)],
            },
            target: None,
            probes: None,
        },
        noise: NoiseConfig {
            kind: NoiseKind::Fourier,
            count: 2,
            amplitudes: vec![0.3],
            ..NoiseConfig::default()
        },
        ..RunConfig::default()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn random_scalar(grid: &Grid, rng: &mut ChaCha8Rng) -> ScalarField {
    let kmax = 4;
    let ky_max = if grid.dim() == 2 { kmax } else { 0 };
    let base = 2.0 * PI / grid.length();
    let mut terms = Vec::new();
    for kx in 0..=kmax {
        for ky in -ky_max..=ky_max {
            terms.push((kx as f64, ky as f64, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        }
    }
    ScalarField::from_fn(grid, |x| {
        terms
            .iter()
            .map(|(a, b, c, s)| {
                let p = base * (a * x[0] + b * x[1]);
                (c * p.cos() + s * p.sin()) / (1.0 + a * a + b * b)
            })
            .sum()
    })
}

fn random_vector(grid: &Grid, rng: &mut ChaCha8Rng) -> GridVectorField {
    let comps = (0..grid.dim()).map(|_| random_scalar(grid, rng).into_values()).collect();
    GridVectorField::new(grid.clone(), comps).expect("matching grid")
}

fn random_points(rng: &mut ChaCha8Rng, k: usize, r: f64) -> Vec<Point> {
    (0..k)
        .map(|_| [rng.random_range(-r..r), rng.random_range(-r..r)])
        .collect()
}

fn random_plane_field(rng: &mut ChaCha8Rng) -> PlaneField {
    let k = rng.random_range(1..=3);
    PlaneField::Sum(vec![
        PlaneField::Kernel(KernelField::new(
            Kernel::gaussian(rng.random_range(0.6..1.5), 1.0).expect("positive scale"),
            random_points(rng, k, 1.5),
            random_points(rng, k, 1.0),
        )),
        PlaneField::Constant(random_points(rng, 1, 0.5)[0]),
    ])
}

fn adjoint_identities(rng: &mut ChaCha8Rng, grid: &Grid) -> Result<f64, CliError> {
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let n = Template::Image(random_scalar(grid, rng));
        let s = TemplateVector::Image(random_scalar(grid, rng));
        let w = TemplateVector::Image(random_scalar(grid, rng));
        let u = VectorField::Grid(random_vector(grid, rng));
        let v = VectorField::Grid(random_vector(grid, rng));
        let m = OneFormDensity::Grid(random_vector(grid, rng));
        worst = worst.max(rel(
            algebra::pair(&algebra::diamond(&s, &n)?, &u)?,
            -algebra::pair_template(&s, &algebra::act(&u, &n)?)?,
        ));
        worst = worst.max(rel(
            algebra::pair_template(&algebra::star(&u, &s, &n)?, &w)?,
            algebra::pair_template(&s, &algebra::act_tangent(&u, &n, &w)?)?,
        ));
        worst = worst.max(rel(
            algebra::pair(&algebra::ad_star(&u, &m)?, &v)?,
            algebra::pair(&m, &algebra::ad(&u, &v)?)?,
        ));
    }
    for _ in 0..10 {
        let k = rng.random_range(1..=4);
        let q = Template::Landmarks(random_points(rng, k, 1.5));
        let p = TemplateVector::Landmarks(random_points(rng, k, 1.0));
        let w = TemplateVector::Landmarks(random_points(rng, k, 1.0));
        let u = VectorField::Plane(random_plane_field(rng));
        worst = worst.max(rel(
            algebra::pair(&algebra::diamond(&p, &q)?, &u)?,
            -algebra::pair_template(&p, &algebra::act(&u, &q)?)?,
        ));
        worst = worst.max(rel(
            algebra::pair_template(&algebra::star(&u, &p, &q)?, &w)?,
            algebra::pair_template(&p, &algebra::act_tangent(&u, &q, &w)?)?,
        ));
    }
    Ok(worst)
}

fn image_coadjoint(rng: &mut ChaCha8Rng, model: &ImageModel) -> Result<f64, CliError> {
    let grid = model.grid();
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let state = ImageState::new(random_vector(grid, rng), random_scalar(grid, rng), random_scalar(grid, rng))?;
        let rate = model.rhs_tangled(&state)?;
        let mut lhs = rate.mu.clone();
        lhs.axpy(1.0, &grid_ops::diamond(&rate.sigma, &state.n));
        lhs.axpy(1.0, &grid_ops::diamond(&state.sigma, &rate.n));
        let mut rhs = grid_ops::ad_star(&model.velocity(&state.mu), &state.total_momentum());
        rhs.scale(-1.0);
        lhs.axpy(-1.0, &rhs);
        worst = worst.max(lhs.coord_norm() / rhs.coord_norm());
    }
    Ok(worst)
}

/// Rate of `⟨μ + σ ⋄ q, v⟩` from the point representation against
/// `-⟨μ + σ ⋄ q, ad_u v⟩`.
fn landmark_coadjoint(rng: &mut ChaCha8Rng, model: &LandmarkModel) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let k = rng.random_range(1..=4);
        let cloud = PointMomenta::new(random_points(rng, 2, 1.5), random_points(rng, 2, 1.0));
        let mut sigma = random_points(rng, k, 1.0);
        let mut q = random_points(rng, k, 1.5);
        if model.dim() == 1 {
            sigma.iter_mut().chain(q.iter_mut()).for_each(|p| p[1] = 0.0);
        }
        let state = LandmarkState::from_momentum(cloud, sigma, q);
        let rate = model.rhs_tangled(&state);
        let u = PlaneField::Kernel(model.velocity(&state));
        let m = model.total_momentum(&state);
        let v = random_plane_field(rng);
        let moving = |x: Point, p: Point, dx: Point, dp: Point| -> f64 {
            let jv = v.jacobian(x);
            let vx = v.value(x);
            dp[0] * vx[0]
                + dp[1] * vx[1]
                + p[0] * (jv[0][0] * dx[0] + jv[0][1] * dx[1])
                + p[1] * (jv[1][0] * dx[0] + jv[1][1] * dx[1])
        };
        let mut lhs = 0.0;
        for b in 0..state.free.len() {
            lhs += moving(
                state.free.positions[b],
                state.free.weights[b],
                rate.free.positions[b],
                rate.free.weights[b],
            );
        }
        for a in 0..state.q.len() {
            lhs += moving(state.q[a], state.anchored[a], rate.q[a], rate.anchored[a]);
            lhs -= moving(state.q[a], state.sigma[a], rate.q[a], rate.sigma[a]);
        }
        worst = worst.max(rel(lhs, -point_ops::pair_ad(&m, &u, &v)));
    }
    worst
}

/// `max |K*a - K*b| / max |K*b|` over the points of both clouds. Comparing
/// velocities avoids the square-root loss of a dual norm of a difference.
fn velocity_gap(a: &PointMomenta, b: &PointMomenta, kernel: Kernel) -> f64 {
    let (va, vb) = (a.velocity(kernel), b.velocity(kernel));
    let (mut gap, mut scale): (f64, f64) = (0.0, 0.0);
    for x in a.positions.iter().chain(&b.positions) {
        let (p, q) = (va.value(*x), vb.value(*x));
        gap = gap.max((p[0] - q[0]).hypot(p[1] - q[1]));
        scale = scale.max(q[0].hypot(q[1]));
    }
    if scale > 0.0 {
        gap / scale
    } else {
        gap
    }
}

struct Conservation {
    drift: f64,
    relative: bool,
    residual: f64,
}

fn conservation<F: Flow>(flow: &F, z0: &F::State, cfg: &RunConfig) -> Result<Conservation, CliError> {
    let h0 = flow.hamiltonian(z0);
    let scale = if h0 != 0.0 { h0.abs() } else { 1.0 };
    let (mut drift, mut residual): (f64, f64) = (0.0, 0.0);
    integrate_with(flow, z0, Scheme::DeterministicRk4, cfg.dt, cfg.steps()?, None, |_, z| {
        drift = drift.max((flow.hamiltonian(z) - h0).abs() / scale);
        residual = residual.max(flow.momentum_map_residual(z));
    })?;
    Ok(Conservation {
        drift,
        relative: h0 != 0.0,
        residual: residual / scale.sqrt(),
    })
}

fn ito_consistency<F: Flow>(flow: &F, z: &F::State) -> f64 {
    let exact = flow.ito_correction(z);
    let mut fd = exact.zeros_like();
    for i in 0..flow.noise_modes() {
        let b = flow.diffusion(i, z);
        let h = 1e-5 / b.coord_norm().max(1e-300).sqrt().max(1.0);
        let (mut zp, mut zm) = (z.clone(), z.clone());
        zp.axpy(h, &b);
        zm.axpy(-h, &b);
        let mut d = flow.diffusion(i, &zp);
        d.axpy(-1.0, &flow.diffusion(i, &zm));
        fd.axpy(0.25 / h, &d);
    }
    let scale = exact.coord_norm();
    fd.axpy(-1.0, &exact);
    if scale == 0.0 {
        fd.coord_norm()
    } else {
        fd.coord_norm() / scale
    }
}

const PATHS: u64 = 8;

fn pathwise_gap_ratio(seed: u64) -> Result<(f64, [f64; 3]), CliError> {
    let mut cfg = RunConfig {
        potential: 1.0,
        ..RunConfig::default()
    };
    cfg.noise = NoiseConfig {
        kind: NoiseKind::Constant,
        vectors: vec![vec![0.4, 0.2]],
        ..NoiseConfig::default()
    };
    let model = cfg.landmark_model()?;
    let z0 = LandmarkState::zero_level(vec![[0.5, -0.3]], vec![[0.2, 0.1]]);
    let mut gaps = [0.0; 3];
    for index in 0..PATHS {
        let fine = BrownianDriver::new(seed, index).path(1, 1000, 1e-3)?;
        for (g, factor) in gaps.iter_mut().zip([4usize, 2, 1]) {
            let path = fine.coarsen(factor)?;
            let dt = 1e-3 * factor as f64;
            let steps = 1000 / factor;
            let h = integrate_with(&model, &z0, Scheme::StratonovichHeun, dt, steps, Some(&path), |_, _| {})?;
            let mut e = integrate_with(&model, &z0, Scheme::ItoEulerMaruyama, dt, steps, Some(&path), |_, _| {})?;
            e.axpy(-1.0, &h);
            *g += e.coord_norm() / PATHS as f64;
        }
    }
    Ok(((gaps[0] / gaps[1]).min(gaps[1] / gaps[2]), gaps))
}

fn advection_ratio(seed: u64) -> Result<(f64, [f64; 3]), CliError> {
    let model = builtin_landmarks(&RunConfig::default()).landmark_model()?;
    let z0 = metamorph::dynamics::LandmarkUntangled {
        m: PointMomenta::new(vec![[0.5, 0.0], [-0.5, 0.5]], vec![[0.4, 0.1], [-0.2, 0.3]]),
        sigma: vec![[0.5, 0.2]],
        q: vec![[0.0, -0.5]],
    };
    let w = PlaneField::Kernel(KernelField::new(Kernel::default(), vec![[0.2, 0.1]], vec![[1.0, 0.5]]));
    let flow = model.untangled();
    let mut drifts = [0.0; 3];
    for index in 0..PATHS {
        let fine = BrownianDriver::new(seed, index).path(1, 1000, 1e-3)?;
        for (d, factor) in drifts.iter_mut().zip([4usize, 2, 1]) {
            let path = fine.coarsen(factor)?;
            let s = advection_invariant_landmarks(
                &flow,
                &z0,
                Scheme::StratonovichHeun,
                1e-3 * factor as f64,
                1000 / factor,
                Some(&path),
                &w,
            )?;
            *d += s.relative_drift() / PATHS as f64;
        }
    }
    Ok(((drifts[0] / drifts[1]).min(drifts[1] / drifts[2]), drifts))
}

fn conservation_rows(out: &mut Vec<Check>, structure: &'static str, r: Result<Conservation, CliError>) {
    match r {
        Ok(c) => {
            let kind = if c.relative { "relative" } else { "absolute (h(0) = 0)" };
            out.push(Check::measured(
                "hamiltonian conservation",
                structure,
                c.drift,
                1e-8,
                format!("max {kind} |h(t) - h(0)| = {:.3e} under RK4", c.drift),
            ));
            out.push(Check::measured(
                "zero-level residual",
                structure,
                c.residual,
                1e-6,
                format!("max |μ + σ ⋄ n| / sqrt(h(0)) = {:.3e}", c.residual),
            ));
        }
        Err(e) => {
            out.push(Check::failed("hamiltonian conservation", structure, e));
        }
    }
}

/// Runs every check. `loaded` is `None` when no config was given.
pub fn run(loaded: Option<&Loaded>, seed: u64, config_sha256: String) -> Report {
    let defaults = Loaded::defaults();
    let base = loaded.map(|l| l.config.clone()).unwrap_or_default();
    let (lm, im) = match loaded {
        Some(l) if l.config.structure == Structure::Landmarks => {
            (l.clone(), Loaded { config: builtin_images(&base), ..defaults.clone() })
        }
        Some(l) => (Loaded { config: builtin_landmarks(&base), ..defaults.clone() }, l.clone()),
        None => (
            Loaded { config: builtin_landmarks(&base), ..defaults.clone() },
            Loaded { config: builtin_images(&base), ..defaults },
        ),
    };
    let stochastic = loaded.is_none_or(|l| l.config.noise_modes() > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let grids = [Grid::new(1, 32, 2.0 * PI), Grid::new(2, 32, 2.0 * PI)];
    let adj = grids
        .into_iter()
        .map(|g| g.map_err(CliError::from).and_then(|g| adjoint_identities(&mut rng, &g)))
        .try_fold(0.0_f64, |w, r| r.map(|v| w.max(v)));
    checks.push(match adj {
        Ok(v) => Check::measured(
            "adjoint identities",
            "both",
            v,
            1e-10,
            format!("worst relative residual {v:.3e} over diamond/act, star/act_tangent, ad*/ad"),
        ),
        Err(e) => Check::failed("adjoint identities", "both", e),
    });

    let lmodel = lm.config.landmark_model();
    let imodel = im.config.image_model();
    match &lmodel {
        Ok(model) => {
            let v = landmark_coadjoint(&mut rng, model);
            checks.push(Check::measured(
                "coadjoint identity",
                "landmarks",
                v,
                1e-8,
                format!("worst relative residual {v:.3e} on random states"),
            ));
        }
        Err(e) => checks.push(Check::failed("coadjoint identity", "landmarks", CliError::Io(e.to_string()))),
    }
    match &imodel {
        Ok(model) => checks.push(match image_coadjoint(&mut rng, model) {
            Ok(v) => Check::measured(
                "coadjoint identity",
                "images",
                v,
                1e-8,
                format!("worst relative residual {v:.3e} on random states"),
            ),
            Err(e) => Check::failed("coadjoint identity", "images", e),
        }),
        Err(e) => checks.push(Check::failed("coadjoint identity", "images", CliError::Io(e.to_string()))),
    }

    if let Ok(model) = &lmodel {
        let z0 = landmark_state(&lm.config);
        if z0.free.is_empty() {
            conservation_rows(&mut checks, "landmarks", conservation(model, &z0, &lm.config));
        } else {
            match conservation(model, &z0, &lm.config) {
                Ok(c) => checks.push(Check::measured(
                    "hamiltonian conservation",
                    "landmarks",
                    c.drift,
                    1e-8,
                    format!("max relative |h(t) - h(0)| = {:.3e} under RK4", c.drift),
                )),
                Err(e) => checks.push(Check::failed("hamiltonian conservation", "landmarks", e)),
            }
            checks.push(Check::skipped("zero-level residual", "landmarks", "initial state is off the zero level"));
        }
        let form = (|| -> Result<f64, CliError> {
            let steps = lm.config.steps()?;
            // On the zero level both forms carry M = 0; add free momentum so
            // the comparison is not vacuous.
            let z0 = if z0.free.is_empty() {
                let cloud = PointMomenta::new(vec![[0.5, 0.5], [-1.0, 0.0]], vec![[0.3, -0.2], [0.0, 0.4]]);
                LandmarkState::from_momentum(cloud, z0.sigma.clone(), z0.q.clone())
            } else {
                z0.clone()
            };
            let t = integrate(model, &z0, Scheme::DeterministicRk4, lm.config.dt, steps, None)?;
            let u = integrate(&model.untangled(), &z0.untangle(), Scheme::DeterministicRk4, lm.config.dt, steps, None)?;
            Ok(velocity_gap(&t.terminal().untangle().m, &u.terminal().m, model.kernel()))
        })();
        checks.push(match form {
            Ok(v) => Check::measured(
                "form equivalence",
                "landmarks",
                v,
                1e-6,
                format!("terminal max |K*ΔM| / max |K*M| = {v:.3e}, tangled vs untangled"),
            ),
            Err(e) => Check::failed("form equivalence", "landmarks", e),
        });
    }
    if let Ok(model) = &imodel {
        let z0 = image_state(&im, model);
        match z0 {
            Ok(z0) => {
                conservation_rows(&mut checks, "images", conservation(model, &z0, &im.config));
                let form = (|| -> Result<f64, CliError> {
                    let steps = im.config.steps()?;
                    let t = integrate(model, &z0, Scheme::DeterministicRk4, im.config.dt, steps, None)?;
                    let u =
                        integrate(&model.untangled(), &z0.untangle(), Scheme::DeterministicRk4, im.config.dt, steps, None)?;
                    let mut d = t.terminal().total_momentum();
                    d.axpy(-1.0, &u.terminal().m);
                    let scale = grid_ops::dual_norm(&model.inertia(), &u.terminal().m);
                    let dn = grid_ops::dual_norm(&model.inertia(), &d);
                    Ok(if scale > 0.0 { dn / scale } else { dn })
                })();
                checks.push(match form {
                    Ok(v) => Check::measured(
                        "form equivalence",
                        "images",
                        v,
                        1e-6,
                        format!("terminal |ΔM| / |M| = {v:.3e}, tangled vs untangled"),
                    ),
                    Err(e) => Check::failed("form equivalence", "images", e),
                });
            }
            Err(e) => checks.push(Check::failed("hamiltonian conservation", "images", e)),
        }
    }

    const SKIP: &str = "no noise modes configured (J = 0)";
    if !stochastic {
        for (c, s) in [
            ("ito correction", "landmarks"),
            ("ito correction", "images"),
            ("pathwise ito/stratonovich", "landmarks"),
            ("advection invariant", "landmarks"),
        ] {
            checks.push(Check::skipped(c, s, SKIP));
        }
    } else {
        if let Ok(model) = &lmodel {
            if model.noise_modes() == 0 {
                checks.push(Check::skipped("ito correction", "landmarks", SKIP));
            } else {
                let z0 = landmark_state(&lm.config);
                let v = ito_consistency(model, &z0);
                checks.push(Check::measured(
                    "ito correction",
                    "landmarks",
                    v,
                    1e-6,
                    format!("½ Σ (Db_i) b_i vs central differences: relative gap {v:.3e}"),
                ));
            }
        }
        if let Ok(model) = &imodel {
            if model.noise_modes() == 0 {
                checks.push(Check::skipped("ito correction", "images", SKIP));
            } else if let Ok(z0) = image_state(&im, model) {
                let v = ito_consistency(model, &z0);
                checks.push(Check::measured(
                    "ito correction",
                    "images",
                    v,
                    1e-6,
                    format!("½ Σ (Db_i) b_i vs central differences: relative gap {v:.3e}"),
                ));
            }
        }
        checks.push(match pathwise_gap_ratio(seed) {
            Ok((r, g)) => Check::ratio(
                "pathwise ito/stratonovich",
                "landmarks",
                r,
                1.8,
                format!(
                    "mean Heun-EM gap {:.2e} / {:.2e} / {:.2e} at dt = 4e-3, 2e-3, 1e-3; worst ratio {r:.2}",
                    g[0], g[1], g[2]
                ),
            ),
            Err(e) => Check::failed("pathwise ito/stratonovich", "landmarks", e),
        });
        checks.push(match advection_ratio(seed) {
            Ok((r, d)) => Check::ratio(
                "advection invariant",
                "landmarks",
                r,
                1.8,
                format!(
                    "mean relative drift {:.2e} / {:.2e} / {:.2e} at dt = 4e-3, 2e-3, 1e-3; worst ratio {r:.2}",
                    d[0], d[1], d[2]
                ),
            ),
            Err(e) => Check::failed("advection invariant", "landmarks", e),
        });
    }

    let passed = checks.iter().all(|c| c.status != Status::Fail);
    Report {
        command: "verify",
        config_sha256,
        seed,
        passed,
        checks,
    }
}

pub fn render(report: &Report) -> String {
    let mut s = format!(
        "{:<28} {:<10} {:>11} {:>9}  {:<7} {}\n",
        "check", "structure", "value", "tol", "status", "detail"
    );
    for c in &report.checks {
        let status = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
        };
        let value = c.value.map_or("-".into(), |v| format!("{v:.3e}"));
        let sign = if c.bound == "min" { "≥" } else { "≤" };
        let tol = c.tolerance.map_or("-".into(), |v| format!("{sign}{v:.1e}"));
        s.push_str(&format!(
            "{:<28} {:<10} {:>11} {:>9}  {:<7} {}\n",
            c.check, c.structure, value, tol, status, c.detail
        ));
    }
    let failed = report.checks.iter().filter(|c| c.status == Status::Fail).count();
    s.push_str(&if failed == 0 {
        "all checks passed\n".to_string()
    } else {
        format!("{failed} check(s) failed\n")
    });
    s
}
