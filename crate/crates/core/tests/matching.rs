use std::f64::consts::PI;

use metamorph::algebra::{Grid, Inertia, InertiaOperator, Kernel, ScalarField};
use metamorph::dynamics::{Flow, ImageModel, LagrangianSpec, LandmarkModel, LandmarkState};
use metamorph::matching::{
    action_value_landmarks, match_endpoints, MatchMode, MatchOptions, MatchProblem, Shot,
};
use metamorph::stochastics::{integrate, Scheme};

fn landmark_model(dim: usize) -> LandmarkModel {
    let spec = LagrangianSpec::new(Inertia::Kernel(Kernel::default()), 0.5).unwrap();
    LandmarkModel::new(&spec, dim).unwrap()
}

fn landmark_shot(shot: Shot) -> Vec<LandmarkState> {
    match shot {
        Shot::Landmarks(t) => t.states,
        Shot::Images(_) => panic!("expected a landmark shot"),
    }
}

#[test]
fn identical_endpoints_need_no_momentum() {
    let q = vec![[0.0, 0.0], [0.7, -0.2]];
    let problem = MatchProblem::landmarks(landmark_model(2), q.clone(), q, 1e-2).unwrap();
    let r = match_endpoints(&problem, &MatchOptions::default()).unwrap();
    assert!(r.converged);
    assert!(r.params.iter().all(|p| *p == 0.0));
    assert_eq!(r.objective, 0.0);
}

#[test]
fn zero_covector_leaves_the_image_fixed() {
    let g = Grid::new(1, 32, 2.0 * PI).unwrap();
    let spec = LagrangianSpec::new(Inertia::Helmholtz(InertiaOperator::default()), 0.5).unwrap();
    let model = ImageModel::new(&spec, &g).unwrap();
    let n0 = ScalarField::from_fn(&g, |x| x[0].sin());
    let n1 = ScalarField::from_fn(&g, |x| (x[0] - 0.3).sin());
    let problem = MatchProblem::images(model, n0.clone(), n1, 2, 5e-2).unwrap();
    assert_eq!(problem.dimension(), 5);
    match problem.shoot(&[0.0; 5]).unwrap() {
        Shot::Images(t) => {
            for z in &t.states {
                assert_eq!(z.n, n0);
            }
        }
        Shot::Landmarks(_) => panic!("expected an image shot"),
    }
}

#[test]
fn single_landmark_shot_is_a_straight_line() {
    let p = 0.8;
    let q0 = [0.2, 0.0];
    let problem = MatchProblem::landmarks(landmark_model(1), vec![q0], vec![[1.0, 0.0]], 1e-2).unwrap();
    let states = landmark_shot(problem.shoot(&[p]).unwrap());
    let end = states.last().unwrap();
    assert!((end.q[0][0] - (q0[0] + 1.5 * p)).abs() < 1e-12);
    assert!((end.sigma[0][0] - p).abs() < 1e-12);

    let report = problem.report(&problem.shoot(&[p]).unwrap()).unwrap();
    assert!(report.hamiltonian_drift <= 1e-8);
    assert!((report.action - 0.75 * p * p).abs() < 1e-12);
    let gap = end.q[0][0] - 1.0;
    assert!((report.misfit - gap * gap).abs() < 1e-12);
}

#[test]
fn action_equals_integrated_energy() {
    let model = landmark_model(2);
    let z0 = LandmarkState::zero_level(vec![[0.6, 0.1], [-0.2, 0.4]], vec![[0.0, 0.0], [0.5, 0.5]]);
    let traj = integrate(&model, &z0, Scheme::DeterministicRk4, 1e-2, 100, None).unwrap();
    let s = action_value_landmarks(&model, &traj);
    let h: Vec<f64> = traj.states.iter().map(|z| model.hamiltonian(z)).collect();
    let integral = 1e-2 * (h.iter().sum::<f64>() - 0.5 * (h[0] + h[100]));
    assert!((s - integral).abs() < 1e-10 * integral);

    let rest = LandmarkState::zero_level(vec![[0.0, 0.0]], vec![[0.0, 0.0]]);
    let traj = integrate(&model, &rest, Scheme::DeterministicRk4, 1e-2, 100, None).unwrap();
    assert_eq!(action_value_landmarks(&model, &traj), 0.0);
}

#[test]
fn exact_match_of_a_unit_translation() {
    let problem = MatchProblem::landmarks(landmark_model(1), vec![[0.0, 0.0]], vec![[1.0, 0.0]], 1e-2).unwrap();
    let options = MatchOptions {
        mode: MatchMode::Exact,
        ..MatchOptions::default()
    };
    let r = match_endpoints(&problem, &options).unwrap();
    assert!(r.converged);
    assert!((r.params[0] - 2.0 / 3.0).abs() < 1e-6, "σ₀ = {}", r.params[0]);
    assert!(r.report.endpoint_residual <= 1e-6);
}

#[test]
fn mirrored_targets_give_mirrored_momenta() {
    // Reflection x ↦ -x together with swapping the labels maps the problem
    // to itself.
    let q0 = vec![[-0.5, 0.0], [0.5, 0.0]];
    let q1 = vec![[-0.8, 0.6], [0.8, 0.6]];
    let problem = MatchProblem::landmarks(landmark_model(2), q0, q1, 1e-2).unwrap();
    let r = match_endpoints(&problem, &MatchOptions::default()).unwrap();
    assert!(r.converged);
    let p = &r.params;
    assert!((p[0] + p[2]).abs() < 1e-6, "{p:?}");
    assert!((p[1] - p[3]).abs() < 1e-6, "{p:?}");
    assert!(p[0] < 0.0 && p[1] > 0.0);
}

#[test]
fn malformed_problems_are_rejected() {
    let model = landmark_model(2);
    assert!(MatchProblem::landmarks(model.clone(), vec![[0.0, 0.0]], vec![], 1e-2).is_err());
    assert!(MatchProblem::landmarks(model.clone(), vec![[0.0, 0.0]], vec![[1.0, 0.0]], 0.3).is_err());
    let problem = MatchProblem::landmarks(model, vec![[0.0, 0.0]], vec![[1.0, 0.0]], 1e-2).unwrap();
    assert!(problem.shoot(&[1.0]).is_err());
    let bad = MatchOptions {
        epsilon: 0.0,
        ..MatchOptions::default()
    };
    assert!(match_endpoints(&problem, &bad).is_err());
}
