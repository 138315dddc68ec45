//! Time steppers for `dz = a(z) dt + Σ_i b_i(z) ∘ dW^i`.

use crate::dynamics::Flow;
use crate::error::{invalid, Error, Result};
use crate::linear::Linear;
use crate::stochastics::brownian::BrownianPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    DeterministicRk4,
    StratonovichHeun,
    ItoEulerMaruyama,
}

impl Scheme {
    pub fn is_stochastic(&self) -> bool {
        !matches!(self, Scheme::DeterministicRk4)
    }
}

/// Classical fourth-order Runge–Kutta step of the drift.
pub fn rk4_step<F: Flow>(flow: &F, z: &F::State, dt: f64) -> F::State {
    let k1 = flow.drift(z);
    let mut y = z.clone();
    y.axpy(0.5 * dt, &k1);
    let k2 = flow.drift(&y);
    let mut y = z.clone();
    y.axpy(0.5 * dt, &k2);
    let k3 = flow.drift(&y);
    let mut y = z.clone();
    y.axpy(dt, &k3);
    let k4 = flow.drift(&y);
    let mut out = z.clone();
    out.axpy(dt / 6.0, &k1);
    out.axpy(dt / 3.0, &k2);
    out.axpy(dt / 3.0, &k3);
    out.axpy(dt / 6.0, &k4);
    out
}

/// `a(z) dt + Σ_i b_i(z) ΔW^i`. Modes with a zero increment are skipped,
/// which leaves the result bit-identical to the noise-free sum.
fn increment<F: Flow>(flow: &F, z: &F::State, dt: f64, dw: &[f64]) -> F::State {
    let mut inc = flow.drift(z);
    inc.scale(dt);
    for (i, w) in dw.iter().enumerate() {
        if *w != 0.0 {
            inc.axpy(*w, &flow.diffusion(i, z));
        }
    }
    inc
}

/// Stratonovich Heun predictor-corrector step. With `dw` empty or zero it is
/// the deterministic Heun (explicit trapezoid) step.
pub fn heun_step<F: Flow>(flow: &F, z: &F::State, dt: f64, dw: &[f64]) -> F::State {
    let k1 = increment(flow, z, dt, dw);
    let mut pred = z.clone();
    pred.axpy(1.0, &k1);
    let k2 = increment(flow, &pred, dt, dw);
    let mut out = z.clone();
    out.axpy(0.5, &k1);
    out.axpy(0.5, &k2);
    out
}

/// `½ Σ_i (D b_i) b_i`.
pub fn ito_drift_correction<F: Flow>(flow: &F, z: &F::State) -> F::State {
    flow.ito_correction(z)
}

/// Itô Euler–Maruyama step with drift `a + ½ Σ_i (D b_i) b_i`.
pub fn euler_maruyama_step<F: Flow>(flow: &F, z: &F::State, dt: f64, dw: &[f64]) -> F::State {
    let mut drift = flow.drift(z);
    if flow.noise_modes() > 0 {
        drift.axpy(1.0, &flow.ito_correction(z));
    }
    let mut out = z.clone();
    out.axpy(dt, &drift);
    for (i, w) in dw.iter().enumerate() {
        if *w != 0.0 {
            out.axpy(*w, &flow.diffusion(i, z));
        }
    }
    out
}

pub fn step<F: Flow>(flow: &F, scheme: Scheme, z: &F::State, dt: f64, dw: &[f64]) -> F::State {
    match scheme {
        Scheme::DeterministicRk4 => rk4_step(flow, z, dt),
        Scheme::StratonovichHeun => heun_step(flow, z, dt, dw),
        Scheme::ItoEulerMaruyama => euler_maruyama_step(flow, z, dt, dw),
    }
}

/// States at `t_k = k dt`, `k = 0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub dt: f64,
    pub states: Vec<S>,
}

impl<S> Trajectory<S> {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(|k| k as f64 * self.dt)
    }

    pub fn terminal(&self) -> &S {
        self.states.last().expect("trajectory holds the initial state")
    }
}

fn check_path<F: Flow>(flow: &F, scheme: Scheme, dt: f64, steps: usize, path: Option<&BrownianPath>) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid("dt", format!("must be > 0, got {dt}")));
    }
    let Some(path) = path else { return Ok(()) };
    if !scheme.is_stochastic() {
        return Ok(());
    }
    if path.modes() != flow.noise_modes() {
        return Err(Error::NoiseCount {
            expected: flow.noise_modes(),
            got: path.modes(),
        });
    }
    if path.steps() < steps {
        return Err(Error::Refinement(format!(
            "path has {} steps, integration needs {steps}",
            path.steps()
        )));
    }
    if (path.dt() - dt).abs() > 1e-12 * dt {
        return Err(Error::Refinement(format!(
            "path step {} differs from integration step {dt}",
            path.dt()
        )));
    }
    Ok(())
}

/// Integrates `steps` steps and calls `observer(k, z_k)` for every state,
/// including the initial one. Without a path, stochastic schemes see zero
/// increments.
pub fn integrate_with<F: Flow>(
    flow: &F,
    z0: &F::State,
    scheme: Scheme,
    dt: f64,
    steps: usize,
    path: Option<&BrownianPath>,
    mut observer: impl FnMut(usize, &F::State),
) -> Result<F::State> {
    check_path(flow, scheme, dt, steps, path)?;
    let zeros = vec![0.0; flow.noise_modes()];
    let mut z = z0.clone();
    observer(0, &z);
    for k in 0..steps {
        let dw = match path {
            Some(p) if scheme.is_stochastic() => p.increment(k),
            _ => &zeros[..],
        };
        z = step(flow, scheme, &z, dt, dw);
        if !z.is_finite() {
            return Err(Error::NonFinite {
                step: k + 1,
                time: (k + 1) as f64 * dt,
            });
        }
        observer(k + 1, &z);
    }
    Ok(z)
}

/// Integrates and stores every state.
pub fn integrate<F: Flow>(
    flow: &F,
    z0: &F::State,
    scheme: Scheme,
    dt: f64,
    steps: usize,
    path: Option<&BrownianPath>,
) -> Result<Trajectory<F::State>> {
    let mut states = Vec::with_capacity(steps + 1);
    integrate_with(flow, z0, scheme, dt, steps, path, |_, z| states.push(z.clone()))?;
    Ok(Trajectory { dt, states })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `dz = -z dt + s z ∘ dW` on a scalar, for which the Itô correction is
    /// `½ s² z`.
    struct Gbm {
        s: f64,
    }

    impl Flow for Gbm {
        type State = Vec<f64>;
        fn drift(&self, z: &Vec<f64>) -> Vec<f64> {
            vec![-z[0]]
        }
        fn noise_modes(&self) -> usize {
            1
        }
        fn diffusion(&self, _: usize, z: &Vec<f64>) -> Vec<f64> {
            vec![self.s * z[0]]
        }
        fn ito_correction(&self, z: &Vec<f64>) -> Vec<f64> {
            vec![0.5 * self.s * self.s * z[0]]
        }
        fn hamiltonian(&self, _: &Vec<f64>) -> f64 {
            0.0
        }
        fn momentum_map_residual(&self, _: &Vec<f64>) -> f64 {
            0.0
        }
        fn summary(&self, z: &Vec<f64>) -> Vec<f64> {
            z.clone()
        }
    }

    #[test]
    fn rk4_is_fourth_order_on_decay() {
        let f = Gbm { s: 0.0 };
        let err = |n: usize| {
            let z = integrate_with(&f, &vec![1.0], Scheme::DeterministicRk4, 1.0 / n as f64, n, None, |_, _| {})
                .unwrap();
            (z[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(10) / err(20);
        assert!((ratio.log2() - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn zero_increments_give_deterministic_heun() {
        let f = Gbm { s: 0.7 };
        let a = heun_step(&f, &vec![1.3], 0.01, &[0.0]);
        let b = heun_step(&f, &vec![1.3], 0.01, &[]);
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }

    #[test]
    fn heun_matches_exact_stratonovich_solution() {
        // z_T = z_0 exp(-T + s W_T)
        let f = Gbm { s: 0.5 };
        let n = 4000;
        let path = crate::stochastics::BrownianDriver::new(3, 0)
            .path(1, n, 1.0 / n as f64)
            .unwrap();
        let z = integrate_with(&f, &vec![1.0], Scheme::StratonovichHeun, 1.0 / n as f64, n, Some(&path), |_, _| {})
            .unwrap();
        let exact = (-1.0 + 0.5 * path.value_at(n)[0]).exp();
        assert!((z[0] - exact).abs() < 1e-3 * exact);
        let y = integrate_with(&f, &vec![1.0], Scheme::ItoEulerMaruyama, 1.0 / n as f64, n, Some(&path), |_, _| {})
            .unwrap();
        assert!((y[0] - exact).abs() < 2e-2 * exact);
    }

    #[test]
    fn non_finite_state_is_reported_with_step() {
        struct Blow;
        impl Flow for Blow {
            type State = Vec<f64>;
            fn drift(&self, z: &Vec<f64>) -> Vec<f64> {
                vec![z[0] * z[0] * 1e200]
            }
            fn noise_modes(&self) -> usize {
                0
            }
            fn diffusion(&self, _: usize, z: &Vec<f64>) -> Vec<f64> {
                z.clone()
            }
            fn ito_correction(&self, z: &Vec<f64>) -> Vec<f64> {
                z.zeros_like()
            }
            fn hamiltonian(&self, _: &Vec<f64>) -> f64 {
                0.0
            }
            fn momentum_map_residual(&self, _: &Vec<f64>) -> f64 {
                0.0
            }
            fn summary(&self, z: &Vec<f64>) -> Vec<f64> {
                z.clone()
            }
        }
        let e = integrate(&Blow, &vec![1e100], Scheme::DeterministicRk4, 0.1, 10, None).unwrap_err();
        assert!(matches!(e, Error::NonFinite { step: 1, .. }));
    }
}
