//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p metamorph-cli --test acceptance`.

use std::f64::consts::PI;
use std::time::Instant;

use metamorph::algebra::{
    self, grid_ops, point_ops, Grid, GridVectorField, Inertia, InertiaOperator, Kernel, KernelField,
    OneFormDensity, PlaneField, PointMomenta, ScalarField, Template, TemplateVector, VectorField,
};
use metamorph::dynamics::landmarks::canonical_bracket;
use metamorph::dynamics::{
    Flow, ImageGradient, ImageModel, ImageState, LagrangianSpec, LandmarkGradient, LandmarkModel, LandmarkState,
    LandmarkUntangled, Potential,
};
use metamorph::linear::{Linear, Point};
use metamorph::matching::{match_endpoints, MatchMode, MatchOptions, MatchProblem};
use metamorph::stochastics::{integrate, integrate_with, BrownianDriver, Scheme};
use metamorph::uq::{
    advection_invariant_landmarks, ensemble_statistics, run_ensemble, strong_order_estimate, EnsembleConfig,
    StrongOrderConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
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

fn grid1() -> Grid {
    Grid::new(1, 64, 2.0 * PI).unwrap()
}

fn grid2() -> Grid {
    Grid::new(2, 64, 2.0 * PI).unwrap()
}

/// Random trigonometric polynomial with wavenumbers `|k_i| ≤ kmax`.
fn random_scalar(grid: &Grid, rng: &mut ChaCha8Rng, kmax: i32) -> ScalarField {
    let ky_max = if grid.dim() == 2 { kmax } else { 0 };
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
                let p = a * x[0] + b * x[1];
                (c * p.cos() + s * p.sin()) / (1.0 + a * a + b * b)
            })
            .sum()
    })
}

fn random_vector(grid: &Grid, rng: &mut ChaCha8Rng, kmax: i32) -> GridVectorField {
    let comps = (0..grid.dim())
        .map(|_| random_scalar(grid, rng, kmax).into_values())
        .collect();
    GridVectorField::new(grid.clone(), comps).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, r: f64) -> Point {
    let x = rng.random_range(-r..r);
    let y = if dim == 2 { rng.random_range(-r..r) } else { 0.0 };
    [x, y]
}

fn random_points(rng: &mut ChaCha8Rng, k: usize, dim: usize, r: f64) -> Vec<Point> {
    (0..k).map(|_| random_point(rng, dim, r)).collect()
}

fn random_plane_field(rng: &mut ChaCha8Rng) -> PlaneField {
    let k = rng.random_range(1..=4);
    PlaneField::Sum(vec![
        PlaneField::Kernel(KernelField::new(
            Kernel::gaussian(rng.random_range(0.6..1.5), 1.0).unwrap(),
            random_points(rng, k, 2, 1.5),
            random_points(rng, k, 2, 1.0),
        )),
        PlaneField::Constant(random_point(rng, 2, 0.5)),
    ])
}

fn kernel_spec(sigma_m_sq: f64, kappa: f64) -> LagrangianSpec {
    LagrangianSpec::new(Inertia::Kernel(Kernel::default()), sigma_m_sq)
        .unwrap()
        .with_potential(Potential::Quadratic { stiffness: kappa })
}

fn helmholtz_spec(sigma_m_sq: f64, kappa: f64) -> LagrangianSpec {
    LagrangianSpec::new(Inertia::Helmholtz(InertiaOperator::default()), sigma_m_sq)
        .unwrap()
        .with_potential(Potential::Quadratic { stiffness: kappa })
}

fn landmark_model(kappa: f64, noise: Vec<PlaneField>) -> LandmarkModel {
    LandmarkModel::new(&kernel_spec(0.5, kappa), 2).unwrap().with_noise(noise)
}

/// Three landmarks on the zero level.
fn three_landmarks() -> LandmarkState {
    LandmarkState::zero_level(
        vec![[1.0, 0.2], [-0.4, 0.8], [0.3, -0.9]],
        vec![[0.0, 0.0], [1.0, 0.3], [-0.2, 1.1]],
    )
}

// 1 ------------------------------------------------------------------------

fn duality_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for grid in [grid1(), grid2()] {
        for _ in 0..20 {
            let n = random_scalar(&grid, &mut rng, 5);
            let sigma = random_scalar(&grid, &mut rng, 5);
            let omega = random_scalar(&grid, &mut rng, 5);
            let u = random_vector(&grid, &mut rng, 5);
            let v = random_vector(&grid, &mut rng, 5);
            let m = random_vector(&grid, &mut rng, 5);
            let (vu, vv) = (VectorField::Grid(u.clone()), VectorField::Grid(v.clone()));
            let (tn, ts, tw) = (
                Template::Image(n.clone()),
                TemplateVector::Image(sigma.clone()),
                TemplateVector::Image(omega.clone()),
            );
            // ⟨σ ⋄ n, u⟩ = -⟨σ, u n⟩
            let lhs = algebra::pair(&algebra::diamond(&ts, &tn).unwrap(), &vu).unwrap();
            let rhs = -algebra::pair_template(&ts, &algebra::act(&vu, &tn).unwrap()).unwrap();
            worst = worst.max(rel(lhs, rhs));
            // ⟨u ⋆ σ, ω⟩ = ⟨σ, u ω⟩
            let lhs = algebra::pair_template(&algebra::star(&vu, &ts, &tn).unwrap(), &tw).unwrap();
            let rhs = algebra::pair_template(&ts, &algebra::act_tangent(&vu, &tn, &tw).unwrap()).unwrap();
            worst = worst.max(rel(lhs, rhs));
            // ⟨ad*_u m, v⟩ = ⟨m, ad_u v⟩
            let om = OneFormDensity::Grid(m.clone());
            let lhs = algebra::pair(&algebra::ad_star(&vu, &om).unwrap(), &vv).unwrap();
            let rhs = algebra::pair(&om, &algebra::ad(&vu, &vv).unwrap()).unwrap();
            worst = worst.max(rel(lhs, rhs));
        }
    }
    for _ in 0..20 {
        let k = rng.random_range(1..=5);
        let q = random_points(&mut rng, k, 2, 1.5);
        let p = random_points(&mut rng, k, 2, 1.0);
        let w = random_points(&mut rng, k, 2, 1.0);
        let u = random_plane_field(&mut rng);
        let v = random_plane_field(&mut rng);
        let (vu, tq, tp, tw) = (
            VectorField::Plane(u.clone()),
            Template::Landmarks(q.clone()),
            TemplateVector::Landmarks(p.clone()),
            TemplateVector::Landmarks(w.clone()),
        );
        let lhs = algebra::pair(&algebra::diamond(&tp, &tq).unwrap(), &vu).unwrap();
        let rhs = -algebra::pair_template(&tp, &algebra::act(&vu, &tq).unwrap()).unwrap();
        worst = worst.max(rel(lhs, rhs));
        let lhs = algebra::pair_template(&algebra::star(&vu, &tp, &tq).unwrap(), &tw).unwrap();
        let rhs = algebra::pair_template(&tp, &algebra::act_tangent(&vu, &tq, &tw).unwrap()).unwrap();
        worst = worst.max(rel(lhs, rhs));
        // ad*: rate of ⟨m, v⟩ under transport of the cloud by u is -⟨m, ad_u v⟩
        let m = PointMomenta::new(q.clone(), p.clone());
        let model = landmark_model(0.0, vec![u.clone()]);
        let state = LandmarkState::from_momentum(m.clone(), vec![], vec![]);
        let rate = model.diffusion(0, &state);
        let transported: f64 = (0..m.len())
            .map(|b| {
                let (x, pb) = (m.positions[b], m.weights[b]);
                let jv = v.jacobian(x);
                let dv = [
                    jv[0][0] * rate.free.positions[b][0] + jv[0][1] * rate.free.positions[b][1],
                    jv[1][0] * rate.free.positions[b][0] + jv[1][1] * rate.free.positions[b][1],
                ];
                let vx = v.value(x);
                rate.free.weights[b][0] * vx[0] + rate.free.weights[b][1] * vx[1] + pb[0] * dv[0] + pb[1] * dv[1]
            })
            .sum();
        worst = worst.max(rel(-transported, point_ops::pair_ad(&m, &u, &v)));
    }
    outcome(
        worst <= 1e-10,
        format!("worst relative residual {worst:.2e} (tol 1e-10) over 2×20 grid + 20 landmark inputs"),
    )
}

// 2 ------------------------------------------------------------------------

fn coadjoint_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for grid in [grid1(), grid2()] {
        let model = ImageModel::new(&helmholtz_spec(0.5, 0.3), &grid).unwrap();
        for _ in 0..20 {
            let state = ImageState::new(
                random_vector(&grid, &mut rng, 5),
                random_scalar(&grid, &mut rng, 5),
                random_scalar(&grid, &mut rng, 5),
            )
            .unwrap();
            let rate = model.rhs_tangled(&state).unwrap();
            let mut lhs = rate.mu.clone();
            lhs.axpy(1.0, &grid_ops::diamond(&rate.sigma, &state.n));
            lhs.axpy(1.0, &grid_ops::diamond(&state.sigma, &rate.n));
            let u = model.velocity(&state.mu);
            let mut rhs = grid_ops::ad_star(&u, &state.total_momentum());
            rhs.scale(-1.0);
            let mut diff = lhs.clone();
            diff.axpy(-1.0, &rhs);
            worst = worst.max(diff.coord_norm() / rhs.coord_norm());
        }
    }
    let model = landmark_model(0.3, vec![]);
    for _ in 0..20 {
        let k = rng.random_range(1..=5);
        let cloud = PointMomenta::new(random_points(&mut rng, 3, 2, 1.5), random_points(&mut rng, 3, 2, 1.0));
        let state = LandmarkState::from_momentum(cloud, random_points(&mut rng, k, 2, 1.0), random_points(&mut rng, k, 2, 1.5));
        let rate = model.rhs_tangled(&state);
        let u = PlaneField::Kernel(model.velocity(&state));
        let m = model.total_momentum(&state);
        for _ in 0..3 {
            let v = random_plane_field(&mut rng);
            // d/dt ⟨μ + σ ⋄ q, v⟩ by the chain rule on the point representation
            let moving = |x: Point, p: Point, dx: Point, dp: Point| -> f64 {
                let jv = v.jacobian(x);
                let vx = v.value(x);
                dp[0] * vx[0] + dp[1] * vx[1]
                    + p[0] * (jv[0][0] * dx[0] + jv[0][1] * dx[1])
                    + p[1] * (jv[1][0] * dx[0] + jv[1][1] * dx[1])
            };
            let mut lhs = 0.0;
            for b in 0..state.free.len() {
                lhs += moving(state.free.positions[b], state.free.weights[b], rate.free.positions[b], rate.free.weights[b]);
            }
            for a in 0..state.q.len() {
                lhs += moving(state.q[a], state.anchored[a], rate.q[a], rate.anchored[a]);
                lhs -= moving(state.q[a], state.sigma[a], rate.q[a], rate.sigma[a]);
            }
            let rhs = -point_ops::pair_ad(&m, &u, &v);
            worst = worst.max(rel(lhs, rhs));
        }
    }
    outcome(
        worst <= 1e-8,
        format!("worst relative residual {worst:.2e} (tol 1e-8) over 2×20 image + 20 landmark states"),
    )
}

// 3 ------------------------------------------------------------------------

fn hamiltonian_conservation() -> Outcome {
    let model = landmark_model(0.0, vec![]);
    let z0 = three_landmarks();
    let h0 = model.hamiltonian(&z0);
    let mut worst: f64 = 0.0;
    integrate_with(&model, &z0, Scheme::DeterministicRk4, 1e-3, 1000, None, |_, z| {
        worst = worst.max((model.hamiltonian(z) - h0).abs() / h0.abs());
    })
    .unwrap();
    outcome(worst <= 1e-8, format!("max |h(t)-h(0)|/|h(0)| = {worst:.2e} (tol 1e-8), h(0) = {h0:.4}"))
}

// 4 ------------------------------------------------------------------------

fn noether_zero_level() -> Outcome {
    let model = landmark_model(0.0, vec![]);
    let z0 = three_landmarks();
    let scale_l = model.hamiltonian(&z0).sqrt();
    let mut worst_l: f64 = 0.0;
    integrate_with(&model, &z0, Scheme::DeterministicRk4, 1e-3, 1000, None, |_, z| {
        worst_l = worst_l.max(model.euler_lagrange_residual(z));
    })
    .unwrap();
    let grid = grid1();
    let image = ImageModel::new(&helmholtz_spec(0.5, 0.0), &grid).unwrap();
    let z0 = ImageState::zero_level(
        ScalarField::from_fn(&grid, |x| 0.5 * x[0].cos()),
        ScalarField::from_fn(&grid, |x| (x[0]).sin() + 0.3 * (2.0 * x[0]).cos()),
    )
    .unwrap();
    let scale_i = image.hamiltonian(&z0).sqrt();
    let mut worst_i: f64 = 0.0;
    integrate_with(&image, &z0, Scheme::DeterministicRk4, 1e-3, 1000, None, |_, z| {
        worst_i = worst_i.max(image.euler_lagrange_residual(z));
    })
    .unwrap();
    let (rl, ri) = (worst_l / scale_l, worst_i / scale_i);
    outcome(
        rl <= 1e-6 && ri <= 1e-6,
        format!("max residual/scale: landmarks {rl:.2e}, 1D image {ri:.2e} (tol 1e-6)"),
    )
}

// 5 ------------------------------------------------------------------------

fn form_equivalence() -> Outcome {
    let model = landmark_model(0.0, vec![]);
    let cloud = PointMomenta::new(vec![[0.5, 0.5], [-1.0, 0.0]], vec![[0.3, -0.2], [0.0, 0.4]]);
    let tangled0 = LandmarkState::from_momentum(
        cloud,
        vec![[1.0, 0.2], [-0.4, 0.8], [0.3, -0.9]],
        vec![[0.0, 0.0], [1.0, 0.3], [-0.2, 1.1]],
    );
    let untangled0 = tangled0.untangle();
    let t = integrate(&model, &tangled0, Scheme::DeterministicRk4, 1e-3, 1000, None).unwrap();
    let u = integrate(&model.untangled(), &untangled0, Scheme::DeterministicRk4, 1e-3, 1000, None).unwrap();
    // Compare the velocities K*M at the cloud points; a dual norm of the
    // difference would bottom out at sqrt(machine epsilon).
    let (vt, vu) = (t.terminal().untangle().m.velocity(Kernel::default()), u.terminal().m.velocity(Kernel::default()));
    let (mut gap, mut scale): (f64, f64) = (0.0, 0.0);
    for x in &u.terminal().m.positions {
        let (a, b) = (vt.value(*x), vu.value(*x));
        gap = gap.max((a[0] - b[0]).hypot(a[1] - b[1]));
        scale = scale.max(b[0].hypot(b[1]));
    }
    let dl = gap / scale;

    let grid = grid1();
    let image = ImageModel::new(&helmholtz_spec(0.5, 0.0), &grid).unwrap();
    let z0 = ImageState::new(
        GridVectorField::from_fn(&grid, |x| [0.3 * (2.0 * x[0]).sin(), 0.0]),
        ScalarField::from_fn(&grid, |x| 0.5 * x[0].cos()),
        ScalarField::from_fn(&grid, |x| x[0].sin()),
    )
    .unwrap();
    let t = integrate(&image, &z0, Scheme::DeterministicRk4, 1e-3, 1000, None).unwrap();
    let u = integrate(&image.untangled(), &z0.untangle(), Scheme::DeterministicRk4, 1e-3, 1000, None).unwrap();
    let mut d = t.terminal().total_momentum();
    d.axpy(-1.0, &u.terminal().m);
    let di = grid_ops::dual_norm(&image.inertia(), &d) / grid_ops::dual_norm(&image.inertia(), &u.terminal().m);
    outcome(
        dl <= 1e-6 && di <= 1e-6,
        format!("terminal relative M gap: 3 landmarks {dl:.2e} (velocity sup norm), 1D image {di:.2e} (dual norm) (tol 1e-6)"),
    )
}

// 6 ------------------------------------------------------------------------

fn matching_oracle() -> Outcome {
    let model = LandmarkModel::new(&kernel_spec(0.5, 0.0), 1).unwrap();
    let problem = MatchProblem::landmarks(model, vec![[0.0, 0.0]], vec![[1.0, 0.0]], 1e-2).unwrap();
    let options = MatchOptions {
        mode: MatchMode::Exact,
        ..MatchOptions::default()
    };
    let r = match_endpoints(&problem, &options).unwrap();
    let err = (r.params[0] - 2.0 / 3.0).abs();
    let res = r.report.endpoint_residual;
    outcome(
        err <= 1e-6 && res <= 1e-6,
        format!("σ₀ = {:.9} (|σ₀-2/3| = {err:.1e}, tol 1e-6), endpoint residual {res:.1e} (tol 1e-6)", r.params[0]),
    )
}

// 7 ------------------------------------------------------------------------

fn ito_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for (grid, xi) in [(grid1(), [1.0, 0.0]), (grid2(), [0.6, -0.8])] {
        let model = ImageModel::new(&helmholtz_spec(0.5, 0.0), &grid)
            .unwrap()
            .with_noise(vec![GridVectorField::constant(&grid, xi)])
            .unwrap();
        for _ in 0..5 {
            let state = ImageState::new(
                random_vector(&grid, &mut rng, 5),
                random_scalar(&grid, &mut rng, 5),
                random_scalar(&grid, &mut rng, 5),
            )
            .unwrap();
            let c = model.ito_correction(&state);
            // ½ (ξ·∇)² as the Fourier symbol -½ (ξ·k)²
            let heat = |f: &[f64]| grid.apply_symbol(f, |k| -0.5 * (xi[0] * k[0] + xi[1] * k[1]).powi(2));
            let mut check = |got: &[f64], want: Vec<f64>| {
                let num: f64 = got.iter().zip(&want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let den: f64 = want.iter().map(|b| b * b).sum::<f64>().sqrt();
                worst = worst.max(num / den);
            };
            check(c.n.values(), heat(state.n.values()));
            check(c.sigma.values(), heat(state.sigma.values()));
            for a in 0..grid.dim() {
                check(c.mu.component(a), heat(state.mu.component(a)));
            }
        }
    }
    outcome(
        worst <= 1e-10,
        format!("relative spectral residual of ½(ξ·∇)² drift {worst:.2e} (tol 1e-10), 1D and 2D"),
    )
}

// 8 ------------------------------------------------------------------------

/// Single landmark in a quadratic potential with one constant noise mode.
fn oscillator() -> (LandmarkModel, LandmarkState) {
    (
        landmark_model(1.0, vec![PlaneField::Constant([0.4, 0.2])]),
        LandmarkState::zero_level(vec![[0.5, -0.3]], vec![[0.2, 0.1]]),
    )
}

fn pathwise_consistency() -> Outcome {
    let (model, z0) = oscillator();
    let dts = [4e-3, 2e-3, 1e-3];
    let paths = 16;
    let mut gaps = [0.0; 3];
    for index in 0..paths {
        let fine = BrownianDriver::new(8, index).path(1, 1000, 1e-3).unwrap();
        for (g, (dt, factor)) in gaps.iter_mut().zip(dts.iter().zip([4, 2, 1])) {
            let path = fine.coarsen(factor).unwrap();
            let steps = 1000 / factor;
            let h = integrate_with(&model, &z0, Scheme::StratonovichHeun, *dt, steps, Some(&path), |_, _| {}).unwrap();
            let mut e = integrate_with(&model, &z0, Scheme::ItoEulerMaruyama, *dt, steps, Some(&path), |_, _| {}).unwrap();
            e.axpy(-1.0, &h);
            *g += e.coord_norm() / paths as f64;
        }
    }
    let (r1, r2) = (gaps[0] / gaps[1], gaps[1] / gaps[2]);
    outcome(
        r1 >= 1.8 && r2 >= 1.8,
        format!(
            "mean gap {:.2e} / {:.2e} / {:.2e}, ratios {r1:.2} and {r2:.2} (need ≥ 1.8; 16 paths)",
            gaps[0], gaps[1], gaps[2]
        ),
    )
}

// 9 ------------------------------------------------------------------------

fn strong_order() -> Outcome {
    let model = landmark_model(
        1.0,
        vec![PlaneField::Bump {
            center: [0.0, 0.0],
            amplitude: 0.5,
            scale: 1.0,
            direction: [1.0, 0.0],
        }],
    );
    let z0 = LandmarkState::zero_level(vec![[1.0, 0.5], [-0.5, 1.0]], vec![[0.3, 0.0], [-0.6, 0.4]]);
    let mut cfg = StrongOrderConfig {
        scheme: Scheme::StratonovichHeun,
        dt_levels: vec![8e-3, 4e-3, 2e-3, 1e-3],
        horizon: 1.0,
        n_paths: 256,
        master_seed: 9,
        refinement: 8,
        threads: None,
    };
    let heun = strong_order_estimate(&model, &z0, &cfg).unwrap();
    cfg.scheme = Scheme::DeterministicRk4;
    cfg.n_paths = 1;
    let rk4 = strong_order_estimate(&model, &z0, &cfg).unwrap();
    outcome(
        heun.slope >= 0.4 && (rk4.slope - 4.0).abs() <= 0.5,
        format!(
            "Heun slope {:.2} (need ≥ 0.4), RK4 slope {:.2} (need 4 ± 0.5); RK4 errors {:?}",
            heun.slope,
            rk4.slope,
            rk4.errors.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>()
        ),
    )
}

// 10 -----------------------------------------------------------------------

fn stochastic_advection() -> Outcome {
    let model = landmark_model(
        0.0,
        vec![PlaneField::Bump {
            center: [0.0, 0.0],
            amplitude: 0.5,
            scale: 1.0,
            direction: [1.0, 0.0],
        }],
    );
    let z0 = LandmarkUntangled {
        m: PointMomenta::new(vec![[0.5, 0.0], [-0.5, 0.5]], vec![[0.4, 0.1], [-0.2, 0.3]]),
        sigma: vec![[0.5, 0.2]],
        q: vec![[0.0, -0.5]],
    };
    let w = PlaneField::Kernel(KernelField::new(Kernel::default(), vec![[0.2, 0.1]], vec![[1.0, 0.5]]));
    let flow = model.untangled();
    let dts = [4e-3, 2e-3, 1e-3];
    let mut drifts = [0.0; 3];
    for index in 0..16 {
        let fine = BrownianDriver::new(10, index).path(1, 1000, 1e-3).unwrap();
        for (d, (dt, factor)) in drifts.iter_mut().zip(dts.iter().zip([4, 2, 1])) {
            let path = fine.coarsen(factor).unwrap();
            let s = advection_invariant_landmarks(&flow, &z0, Scheme::StratonovichHeun, *dt, 1000 / factor, Some(&path), &w)
                .unwrap();
            *d += s.relative_drift() / 16.0;
        }
    }
    let (r1, r2) = (drifts[0] / drifts[1], drifts[1] / drifts[2]);
    outcome(
        r1 >= 1.8 && r2 >= 1.8,
        format!(
            "mean relative drift {:.2e} / {:.2e} / {:.2e}, ratios {r1:.2} and {r2:.2} (need ≥ 1.8)",
            drifts[0], drifts[1], drifts[2]
        ),
    )
}

// 11 -----------------------------------------------------------------------

fn brownian_translation() -> Outcome {
    let xi = [0.6, 0.0];
    let model = landmark_model(0.0, vec![PlaneField::Constant(xi)]);
    let z0 = LandmarkState::zero_level(vec![[0.0, 0.0]], vec![[0.3, -0.2]]);
    let cfg = EnsembleConfig::new(Scheme::StratonovichHeun, 1e-2, 100, 10_000, 11);
    let stats = ensemble_statistics(&run_ensemble(&model, &z0, &cfg).unwrap()).unwrap();
    let var = stats.covariance.as_ref().unwrap()[0][0];
    let expected = xi[0] * xi[0] * 1.0;
    let se = expected * (2.0 / (stats.samples as f64 - 1.0)).sqrt();
    let z = (var - expected).abs() / se;
    outcome(
        z <= 3.0,
        format!("variance {var:.5} vs |ξ₁|²T = {expected:.5}, {z:.2} standard errors (need ≤ 3; 10⁴ samples)"),
    )
}

// 12 -----------------------------------------------------------------------

fn bracket_structure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut skew: f64 = 0.0;
    let grid = grid1();
    let image = ImageModel::new(&helmholtz_spec(0.5, 0.3), &grid).unwrap();
    let triple = |rng: &mut ChaCha8Rng| ImageGradient {
        mu: random_vector(&grid, rng, 5),
        sigma: random_scalar(&grid, rng, 5),
        n: random_scalar(&grid, rng, 5),
    };
    for _ in 0..20 {
        let state = ImageState::new(
            random_vector(&grid, &mut rng, 5),
            random_scalar(&grid, &mut rng, 5),
            random_scalar(&grid, &mut rng, 5),
        )
        .unwrap();
        let (f, h) = (triple(&mut rng), triple(&mut rng));
        let a = image.lie_poisson_apply(&state, &f, &h).unwrap();
        let b = image.lie_poisson_apply(&state, &h, &f).unwrap();
        let ff = image.lie_poisson_apply(&state, &f, &f).unwrap();
        skew = skew.max((a + b).abs() / a.abs().max(1e-300)).max(ff.abs() / a.abs());
    }
    let model = landmark_model(0.3, vec![]);
    for _ in 0..20 {
        let k = rng.random_range(1..=5);
        let cloud = PointMomenta::new(random_points(&mut rng, 2, 2, 1.5), random_points(&mut rng, 2, 2, 1.0));
        let state = LandmarkState::from_momentum(cloud, random_points(&mut rng, k, 2, 1.0), random_points(&mut rng, k, 2, 1.5));
        let mut triple = || LandmarkGradient {
            mu: random_plane_field(&mut rng),
            sigma: random_points(&mut rng, k, 2, 1.0),
            n: random_points(&mut rng, k, 2, 1.0),
        };
        let (f, h) = (triple(), triple());
        let a = model.lie_poisson_apply(&state, &f, &h).unwrap();
        let b = model.lie_poisson_apply(&state, &h, &f).unwrap();
        skew = skew.max((a + b).abs() / a.abs().max(1e-300));
    }

    // the landmark reduction in (Q, P, q, σ): the Lie–Poisson vector field of
    // h matches the canonical vector field of h(Q, P, q, σ)
    let z = LandmarkUntangled {
        m: PointMomenta::new(vec![[0.4, -0.3]], vec![[0.2, 0.5]]),
        sigma: vec![[0.6, 0.1], [-0.3, 0.4]],
        q: vec![[0.0, 0.2], [0.9, -0.4]],
    };
    let (nf, nk) = (1, 2);
    let flow = model.untangled();
    let coords = z.to_coords();
    let h_of = |c: &[f64]| flow.hamiltonian(&LandmarkUntangled::from_coords(c, nf, nk));
    let grad = |f: &dyn Fn(&[f64]) -> f64, c: &[f64], step: f64| -> Vec<f64> {
        (0..c.len())
            .map(|i| {
                let (mut a, mut b) = (c.to_vec(), c.to_vec());
                a[i] += step;
                b[i] -= step;
                (f(&a) - f(&b)) / (2.0 * step)
            })
            .collect()
    };
    let gh = grad(&h_of, &coords, 1e-6);
    let rate = flow.drift(&z).to_coords();
    let dim = coords.len();
    let mut vf_err: f64 = 0.0;
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        vf_err = vf_err.max((canonical_bracket(&e, &gh, nf, nk) - rate[i]).abs());
    }
    let rate_scale = rate.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let vf_rel = vf_err / rate_scale;

    // Jacobi identity for three polynomial functionals
    let f1 = |c: &[f64]| c[0] * c[2] + c[4] * c[4] * c[9] - c[11];
    let f2 = |c: &[f64]| c[1] * c[1] * c[3] + c[6] * c[10] + c[8] * c[5];
    let f3 = |c: &[f64]| c[0] * c[0] * c[0] + c[5] * c[11] * c[7] + c[2] * c[8];
    let step = 1e-4;
    let bracket = |f: &dyn Fn(&[f64]) -> f64, g: &dyn Fn(&[f64]) -> f64, c: &[f64]| {
        canonical_bracket(&grad(f, c, step), &grad(g, c, step), nf, nk)
    };
    let b23 = |c: &[f64]| bracket(&f2, &f3, c);
    let b31 = |c: &[f64]| bracket(&f3, &f1, c);
    let b12 = |c: &[f64]| bracket(&f1, &f2, c);
    let terms = [bracket(&f1, &b23, &coords), bracket(&f2, &b31, &coords), bracket(&f3, &b12, &coords)];
    let jacobi = terms.iter().sum::<f64>().abs();
    let jscale = terms.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let jrel = jacobi / jscale;
    outcome(
        skew <= 1e-12 && vf_rel <= 1e-6 && jrel <= 1e-4,
        format!(
            "skew {skew:.1e} (tol 1e-12); canonical vector field match {vf_rel:.1e}; Jacobi {jrel:.1e} (tol 1e-4)"
        ),
    )
}

// 13 -----------------------------------------------------------------------

fn files_under(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

/// Runs every command twice per thread count and compares all output bytes.
fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        (
            "simulate",
            r#"{"landmarks": {"initial": [[0, 0], [1, 0.5]], "sigma": [[0.3, 0], [0, -0.2]]},
                "noise": {"kind": "bumps", "count": 2, "amplitudes": [0.4]}, "seed": 21}"#,
        ),
        (
            "uq",
            r#"{"landmarks": {"initial": [[0, 0], [1, 0.5]], "sigma": [[0.3, 0], [0, -0.2]]},
                "noise": {"kind": "bumps", "count": 2, "amplitudes": [0.4]}, "ensemble": {"samples": 64}, "seed": 22}"#,
        ),
        (
            "uq",
            r#"{"structure": "images", "dim": 2, "grid": {"points": 16},
                "noise": {"kind": "fourier", "count": 4, "amplitudes": [0.2]},
                "image": {"sigma": {"kind": "fourier", "terms": [{"wavenumber": [1, 0], "cos": 0.3}]}},
                "ensemble": {"samples": 12}, "dt": 0.05, "seed": 23}"#,
        ),
        ("match", r#"{"landmarks": {"initial": [[0, 0], [1, 0]], "target": [[0.3, 0.2], [1.2, -0.1]]}}"#),
        ("verify", r#"{"noise": {"kind": "bumps", "count": 1}, "seed": 24}"#),
    ];
    let mut compared = 0;
    for (k, (cmd, json)) in configs.iter().enumerate() {
        let cfg = dir.path().join(format!("c{k}.json"));
        std::fs::write(&cfg, json).unwrap();
        let mut outputs = Vec::new();
        for (run, threads) in ["1", "4", "4"].iter().enumerate() {
            let out = dir.path().join(format!("o{k}_{run}"));
            let status = std::process::Command::new(env!("CARGO_BIN_EXE_metamorph"))
                .args([cmd, "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(&out)
                .args(["--threads", threads])
                .output()
                .unwrap();
            if !status.status.success() {
                return outcome(false, format!("`{cmd}` exited with {:?}", status.status.code()));
            }
            outputs.push(files_under(&out));
        }
        for other in &outputs[1..] {
            if other != &outputs[0] {
                return outcome(false, format!("`{cmd}` outputs differ between runs"));
            }
        }
        let seed = serde_json::from_str::<serde_json::Value>(json).unwrap()["seed"].as_u64().unwrap_or(0);
        for (name, bytes) in &outputs[0] {
            let text = String::from_utf8_lossy(bytes);
            let stamped = name.ends_with(".f64")
                || (text.contains("config_sha256") && text.contains(&format!("seed{}{seed}", if name.ends_with(".csv") { "=" } else { "\": " })));
            if !stamped {
                return outcome(false, format!("{name} from `{cmd}` lacks the config hash or seed"));
            }
            compared += 1;
        }
    }
    outcome(
        true,
        format!("{compared} output files identical across 3 runs each (threads 1, 4, 4), all stamped with hash and seed"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("duality suite", duality_suite),
        ("coadjoint identity", coadjoint_identity),
        ("Hamiltonian conservation", hamiltonian_conservation),
        ("Noether zero level", noether_zero_level),
        ("tangled/untangled equivalence", form_equivalence),
        ("matching oracle", matching_oracle),
        ("Itô correction oracle", ito_oracle),
        ("pathwise scheme consistency", pathwise_consistency),
        ("strong order", strong_order),
        ("stochastic advection", stochastic_advection),
        ("Brownian-translation law", brownian_translation),
        ("bracket structure", bracket_structure),
        ("reproducibility", reproducibility),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| f == &id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] {:>2}. {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
