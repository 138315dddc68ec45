//! Landmark metamorphosis on the plane.
//!
//! Landmark momenta are point clouds. Off the zero level of the momentum map
//! the tangled momentum `μ` splits into a free part, transported by the flow,
//! and a part anchored at the landmarks whose weights obey the same equation
//! as `σ`. Any cloud `μ` can be written that way (see
//! [`LandmarkState::from_momentum`]), and the split is preserved by the flow,
//! which keeps `-σ ⋄ ν` expressible without dipole terms.

use crate::algebra::kernel::{Kernel, KernelField, PlaneField, PointMomenta};
use crate::algebra::point_ops;
use crate::algebra::Inertia;
use crate::dynamics::{Flow, LagrangianSpec, Potential};
use crate::error::{invalid, Error, Result};
use crate::linear::{add2, dot2, matvec, matvec_t, scale2, sub2, Linear, Point};

/// Tangled landmark state `(μ, σ, q)` with `μ = free + Σ_a anchored_a δ_{q_a}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkState {
    pub free: PointMomenta,
    pub anchored: Vec<Point>,
    pub sigma: Vec<Point>,
    pub q: Vec<Point>,
}

impl LandmarkState {
    /// State on the zero level of the momentum map, `μ = -σ ⋄ q`.
    pub fn zero_level(sigma: Vec<Point>, q: Vec<Point>) -> Self {
        assert_eq!(sigma.len(), q.len(), "one covector per landmark");
        Self {
            free: PointMomenta::empty(),
            anchored: sigma.clone(),
            sigma,
            q,
        }
    }

    /// Builds the state for an arbitrary momentum cloud `μ`: the cloud is
    /// kept as free momentum and `σ_a δ_{q_a} - σ_a δ_{q_a}` is inserted so
    /// that the anchored weights equal `σ`.
    pub fn from_momentum(mu: PointMomenta, sigma: Vec<Point>, q: Vec<Point>) -> Self {
        assert_eq!(sigma.len(), q.len(), "one covector per landmark");
        let mut free = mu;
        for (qa, sa) in q.iter().zip(&sigma) {
            free.push(*qa, [-sa[0], -sa[1]]);
        }
        Self {
            free,
            anchored: sigma.clone(),
            sigma,
            q,
        }
    }

    /// The full momentum cloud `μ`.
    pub fn momentum(&self) -> PointMomenta {
        self.free
            .concat(&PointMomenta::new(self.q.clone(), self.anchored.clone()))
    }

    pub fn landmarks(&self) -> usize {
        self.q.len()
    }

    /// Untangled variables `(M, σ, q)` with `M = μ + σ ⋄ q`.
    pub fn untangle(&self) -> LandmarkUntangled {
        let mut m = self.free.clone();
        for ((qa, pa), sa) in self.q.iter().zip(&self.anchored).zip(&self.sigma) {
            let d = sub2(*pa, *sa);
            if d != [0.0, 0.0] {
                m.push(*qa, d);
            }
        }
        LandmarkUntangled {
            m,
            sigma: self.sigma.clone(),
            q: self.q.clone(),
        }
    }
}

impl Linear for LandmarkState {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.free.axpy(a, &x.free);
        self.anchored.axpy(a, &x.anchored);
        self.sigma.axpy(a, &x.sigma);
        self.q.axpy(a, &x.q);
    }

    fn scale(&mut self, a: f64) {
        self.free.scale(a);
        self.anchored.scale(a);
        self.sigma.scale(a);
        self.q.scale(a);
    }

    fn coord_dot(&self, other: &Self) -> f64 {
        self.free.coord_dot(&other.free)
            + self.anchored.coord_dot(&other.anchored)
            + self.sigma.coord_dot(&other.sigma)
            + self.q.coord_dot(&other.q)
    }

    fn is_finite(&self) -> bool {
        self.free.is_finite()
            && self.anchored.is_finite()
            && self.sigma.is_finite()
            && self.q.is_finite()
    }
}

/// Untangled landmark state `(M, σ, q)`; `M` is a transported point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkUntangled {
    pub m: PointMomenta,
    pub sigma: Vec<Point>,
    pub q: Vec<Point>,
}

impl LandmarkUntangled {
    /// `μ = M - σ ⋄ q = M + Σ_a σ_a δ_{q_a}`.
    pub fn momentum(&self) -> PointMomenta {
        self.m.concat(&PointMomenta::new(self.q.clone(), self.sigma.clone()))
    }

    pub fn tangle(&self) -> LandmarkState {
        LandmarkState {
            free: self.m.clone(),
            anchored: self.sigma.clone(),
            sigma: self.sigma.clone(),
            q: self.q.clone(),
        }
    }

    /// Flat canonical coordinates `(Q, P, q, σ)`.
    pub fn to_coords(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for block in [&self.m.positions, &self.m.weights, &self.q, &self.sigma] {
            for p in block.iter() {
                out.extend_from_slice(p);
            }
        }
        out
    }

    pub fn from_coords(coords: &[f64], free: usize, landmarks: usize) -> Self {
        assert_eq!(coords.len(), 4 * free + 4 * landmarks);
        let block = |start: usize, len: usize| -> Vec<Point> {
            (0..len)
                .map(|i| [coords[start + 2 * i], coords[start + 2 * i + 1]])
                .collect()
        };
        let positions = block(0, free);
        let weights = block(2 * free, free);
        let q = block(4 * free, landmarks);
        let sigma = block(4 * free + 2 * landmarks, landmarks);
        Self {
            m: PointMomenta::new(positions, weights),
            sigma,
            q,
        }
    }
}

impl Linear for LandmarkUntangled {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.m.axpy(a, &x.m);
        self.sigma.axpy(a, &x.sigma);
        self.q.axpy(a, &x.q);
    }

    fn scale(&mut self, a: f64) {
        self.m.scale(a);
        self.sigma.scale(a);
        self.q.scale(a);
    }

    fn coord_dot(&self, other: &Self) -> f64 {
        self.m.coord_dot(&other.m) + self.sigma.coord_dot(&other.sigma) + self.q.coord_dot(&other.q)
    }

    fn is_finite(&self) -> bool {
        self.m.is_finite() && self.sigma.is_finite() && self.q.is_finite()
    }
}

/// A gradient triple `(δf/δμ, δf/δσ, δf/δn)` for landmark functionals: a
/// vector field, one tangent vector and one covector per landmark.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkGradient {
    pub mu: PlaneField,
    pub sigma: Vec<Point>,
    pub n: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkModel {
    kernel: Kernel,
    dim: usize,
    sigma_m_sq: f64,
    potential: Potential,
    noise: Vec<PlaneField>,
}

/// Transport of a point `(x, P)` by `v`: `(v(x), -∇v(x)ᵀ P)`.
fn transport(v: &PlaneField, x: Point, p: Point) -> (Point, Point) {
    let jac = v.jacobian(x);
    (v.value(x), scale2(-1.0, matvec_t(&jac, p)))
}

/// `(D b) b` for `b(x, P) = (ξ(x), -∇ξ(x)ᵀ P)`.
fn transport_second_order(xi: &PlaneField, x: Point, p: Point) -> (Point, Point) {
    let v = xi.value(x);
    let jac = xi.jacobian(x);
    let hess = xi.hessian(x);
    // (H[v])_{ij} = Σ_l ∂_j ∂_l ξ_i v_l
    let mut hv = [[0.0; 2]; 2];
    for (i, row) in hv.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = hess[i][j][0] * v[0] + hess[i][j][1] * v[1];
        }
    }
    let dx = matvec(&jac, v);
    let jtp = matvec_t(&jac, p);
    let dp = sub2(matvec_t(&jac, jtp), matvec_t(&hv, p));
    (dx, dp)
}

impl LandmarkModel {
    pub fn new(spec: &LagrangianSpec, dim: usize) -> Result<Self> {
        let kernel = match spec.inertia {
            Inertia::Kernel(k) => k,
            Inertia::Helmholtz(_) => {
                return Err(Error::Representation(
                    "landmark dynamics need a kernel inertia".into(),
                ))
            }
        };
        if dim != 1 && dim != 2 {
            return Err(invalid("dim", format!("landmarks support d = 1 or 2, got {dim}")));
        }
        Ok(Self {
            kernel,
            dim,
            sigma_m_sq: spec.sigma_m_sq(),
            potential: spec.potential,
            noise: Vec::new(),
        })
    }

    pub fn with_noise(mut self, noise: Vec<PlaneField>) -> Self {
        self.noise = noise;
        self
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma_m_sq(&self) -> f64 {
        self.sigma_m_sq
    }

    pub fn noise(&self) -> &[PlaneField] {
        &self.noise
    }

    pub fn untangled(&self) -> UntangledLandmarks<'_> {
        UntangledLandmarks { model: self }
    }

    fn potential_gradient(&self, q: &[Point]) -> Vec<Point> {
        let k = self.potential.stiffness();
        q.iter().map(|x| scale2(k, *x)).collect()
    }

    fn potential_value(&self, q: &[Point]) -> f64 {
        0.5 * self.potential.stiffness() * q.iter().map(|x| dot2(*x, *x)).sum::<f64>()
    }

    /// `u = K μ`.
    pub fn velocity(&self, state: &LandmarkState) -> KernelField {
        state.momentum().velocity(self.kernel)
    }

    /// `ℓ(u, q, ν)` for a kernel velocity `u`.
    pub fn lagrangian(&self, u: &KernelField, nu: &[Point], q: &[Point]) -> f64 {
        let mu = PointMomenta::new(u.centers.clone(), u.weights.clone());
        let kinetic = 0.5 * mu.kernel_energy(u.kernel);
        let template = nu.iter().map(|v| dot2(*v, *v)).sum::<f64>() / (2.0 * self.sigma_m_sq);
        kinetic + template - self.potential_value(q)
    }

    /// Legendre transform: `μ` (the kernel weights of `u`), `σ = ν/σ_m²`, and
    /// `h = ⟨μ, u⟩ + ⟨σ, ν⟩ - ℓ`.
    pub fn legendre(&self, u: &KernelField, nu: &[Point], q: &[Point]) -> (PointMomenta, Vec<Point>, f64) {
        let mu = PointMomenta::new(u.centers.clone(), u.weights.clone());
        let sigma: Vec<Point> = nu.iter().map(|v| scale2(1.0 / self.sigma_m_sq, *v)).collect();
        let h = mu.pair_with(|x| u.value(x)) + point_ops::pair_vectors(&sigma, nu)
            - self.lagrangian(u, nu, q);
        (mu, sigma, h)
    }

    /// `h = ½⟨μ, Kμ⟩ + σ_m²/2 Σ|σ_a|² + V(q)`.
    pub fn hamiltonian_of(&self, mu: &PointMomenta, sigma: &[Point], q: &[Point]) -> f64 {
        0.5 * mu.kernel_energy(self.kernel)
            + 0.5 * self.sigma_m_sq * sigma.iter().map(|s| dot2(*s, *s)).sum::<f64>()
            + self.potential_value(q)
    }

    /// `M = μ + σ ⋄ q` as a cloud.
    pub fn total_momentum(&self, state: &LandmarkState) -> PointMomenta {
        state
            .momentum()
            .concat(&point_ops::diamond(&state.sigma, &state.q))
    }

    /// Dual norm of `μ + σ ⋄ q`; zero exactly on the Noether zero level.
    /// Evaluated on the merged cloud so coincident weights cancel before the
    /// kernel sum.
    pub fn euler_lagrange_residual(&self, state: &LandmarkState) -> f64 {
        state.untangle().m.dual_norm(self.kernel)
    }

    /// Dual norm of `μ(1) + σ(1) ⋄ q₁`.
    pub fn endpoint_residual(&self, state: &LandmarkState, q1: &[Point]) -> Result<f64> {
        if q1.len() != state.q.len() {
            return Err(Error::DomainMismatch(format!(
                "{} target landmarks for {} landmarks",
                q1.len(),
                state.q.len()
            )));
        }
        Ok(state
            .momentum()
            .concat(&point_ops::diamond(&state.sigma, q1))
            .dual_norm(self.kernel))
    }

    /// The three rows of the Lie–Poisson operator applied to
    /// `(v, ν, δh/δn)`:
    /// `μ̇ = -ad*_v μ - σ ⋄ ν + (δh/δn) ⋄ q`, `σ̇ = -v ⋆ σ - δh/δn`,
    /// `q̇ = ν + v q`.
    fn apply_structure(
        &self,
        state: &LandmarkState,
        v: &PlaneField,
        nu: Option<&[Point]>,
        hn: Option<&[Point]>,
    ) -> LandmarkState {
        let mut free = PointMomenta::empty();
        for (x, p) in state.free.positions.iter().zip(&state.free.weights) {
            let (dx, dp) = transport(v, *x, *p);
            free.push(dx, dp);
        }
        let k = state.landmarks();
        let mut anchored = Vec::with_capacity(k);
        let mut sigma = Vec::with_capacity(k);
        let mut q = Vec::with_capacity(k);
        for a in 0..k {
            let x = state.q[a];
            let jac = v.jacobian(x);
            let force = hn.map_or([0.0; 2], |h| h[a]);
            anchored.push(sub2(scale2(-1.0, matvec_t(&jac, state.anchored[a])), force));
            sigma.push(sub2(scale2(-1.0, matvec_t(&jac, state.sigma[a])), force));
            let drift = nu.map_or([0.0; 2], |n| n[a]);
            q.push(add2(v.value(x), drift));
        }
        LandmarkState {
            free,
            anchored,
            sigma,
            q,
        }
    }

    /// Deterministic tangled right-hand side.
    pub fn rhs_tangled(&self, state: &LandmarkState) -> LandmarkState {
        let u = PlaneField::Kernel(self.velocity(state));
        let nu: Vec<Point> = state.sigma.iter().map(|s| scale2(self.sigma_m_sq, *s)).collect();
        let hn = self.potential_gradient(&state.q);
        self.apply_structure(state, &u, Some(&nu), Some(&hn))
    }

    /// Deterministic untangled right-hand side:
    /// `Ṁ = -ad*_u M`, `σ̇ = -u ⋆ σ + δℓ/δn`, `q̇ = ν + u q`, with
    /// `u = K(M - σ ⋄ q)`.
    pub fn rhs_untangled(&self, state: &LandmarkUntangled) -> LandmarkUntangled {
        self.untangled().drift(state)
    }

    /// Closed-form zero-level reduction:
    /// `q̇_a = Σ_b K(q_a - q_b) σ_b + σ_m² σ_a`,
    /// `σ̇_a = -Σ_b ∇K(q_a - q_b)(σ_a · σ_b) - δh/δq_a`.
    pub fn reduced_rhs(&self, sigma: &[Point], q: &[Point]) -> (Vec<Point>, Vec<Point>) {
        let hn = self.potential_gradient(q);
        let mut qdot = Vec::with_capacity(q.len());
        let mut sdot = Vec::with_capacity(q.len());
        for a in 0..q.len() {
            let mut v = scale2(self.sigma_m_sq, sigma[a]);
            let mut f = scale2(-1.0, hn[a]);
            for b in 0..q.len() {
                let r = sub2(q[a], q[b]);
                v = add2(v, scale2(self.kernel.value(r), sigma[b]));
                f = sub2(f, scale2(dot2(sigma[a], sigma[b]), self.kernel.gradient(r)));
            }
            qdot.push(v);
            sdot.push(f);
        }
        (qdot, sdot)
    }

    /// `{f, h}` for gradient triples at `state`:
    /// `⟨δf/δμ, -ad*_{δh/δμ} μ - σ ⋄ δh/δσ + δh/δn ⋄ q⟩
    ///  + ⟨-δh/δμ ⋆ σ - δh/δn, δf/δσ⟩ + ⟨δf/δn, δh/δμ q + δh/δσ⟩`.
    pub fn lie_poisson_apply(
        &self,
        state: &LandmarkState,
        df: &LandmarkGradient,
        dh: &LandmarkGradient,
    ) -> Result<f64> {
        let k = state.landmarks();
        for g in [df, dh] {
            if g.sigma.len() != k || g.n.len() != k {
                return Err(Error::DomainMismatch(format!(
                    "gradient triple shaped for {} / {} landmarks, state has {k}",
                    g.sigma.len(),
                    g.n.len()
                )));
            }
        }
        let mu = state.momentum();
        let q = &state.q;
        let mut total = -point_ops::pair_ad(&mu, &dh.mu, &df.mu);
        total += point_ops::pair_vectors(&state.sigma, &point_ops::act_tangent(&df.mu, q, &dh.sigma));
        total -= point_ops::pair_vectors(&dh.n, &point_ops::act(&df.mu, q));
        let star = point_ops::star(&dh.mu, q, &state.sigma);
        total -= point_ops::pair_vectors(&star, &df.sigma);
        total -= point_ops::pair_vectors(&dh.n, &df.sigma);
        let moved = point_ops::act(&dh.mu, q);
        total += point_ops::pair_vectors(&df.n, &moved);
        total += point_ops::pair_vectors(&df.n, &dh.sigma);
        Ok(total)
    }

    /// Gradient triple of the Hamiltonian at `state`: `(u, ν, δh/δq)`.
    pub fn hamiltonian_gradient(&self, state: &LandmarkState) -> LandmarkGradient {
        LandmarkGradient {
            mu: PlaneField::Kernel(self.velocity(state)),
            sigma: state.sigma.iter().map(|s| scale2(self.sigma_m_sq, *s)).collect(),
            n: self.potential_gradient(&state.q),
        }
    }

    /// `h̃ = h dt + Σ_i ⟨μ, ξ_i⟩ ΔW^i`.
    pub fn stochastic_hamiltonian_increment(
        &self,
        state: &LandmarkState,
        dt: f64,
        dw: &[f64],
    ) -> Result<f64> {
        if dw.len() != self.noise.len() {
            return Err(Error::NoiseCount {
                expected: self.noise.len(),
                got: dw.len(),
            });
        }
        let mu = state.momentum();
        let noise: f64 = self
            .noise
            .iter()
            .zip(dw)
            .map(|(xi, w)| mu.pair_with(|x| xi.value(x)) * w)
            .sum();
        Ok(self.hamiltonian(state) * dt + noise)
    }

    /// Lie–Poisson operator applied to `(δh̃/δμ, δh̃/δσ, δh̃/δn)` with
    /// `δh̃/δμ = u dt + Σ_i ξ_i ΔW^i`.
    pub fn lie_poisson_increment(&self, state: &LandmarkState, dt: f64, dw: &[f64]) -> Result<LandmarkState> {
        if dw.len() != self.noise.len() {
            return Err(Error::NoiseCount {
                expected: self.noise.len(),
                got: dw.len(),
            });
        }
        let mut parts = vec![PlaneField::Kernel(self.velocity(state)).scaled_by(dt)];
        for (xi, w) in self.noise.iter().zip(dw) {
            parts.push(xi.scaled_by(*w));
        }
        let nu: Vec<Point> = state
            .sigma
            .iter()
            .map(|s| scale2(self.sigma_m_sq * dt, *s))
            .collect();
        let hn: Vec<Point> = self
            .potential_gradient(&state.q)
            .into_iter()
            .map(|h| scale2(dt, h))
            .collect();
        Ok(self.apply_structure(state, &PlaneField::Sum(parts), Some(&nu), Some(&hn)))
    }

    fn ito_for(&self, positions: &[Point], weights: &[Point], mode: &PlaneField) -> (Vec<Point>, Vec<Point>) {
        positions
            .iter()
            .zip(weights)
            .map(|(x, p)| transport_second_order(mode, *x, *p))
            .unzip()
    }
}

impl Flow for LandmarkModel {
    type State = LandmarkState;

    fn drift(&self, state: &LandmarkState) -> LandmarkState {
        self.rhs_tangled(state)
    }

    fn noise_modes(&self) -> usize {
        self.noise.len()
    }

    fn diffusion(&self, mode: usize, state: &LandmarkState) -> LandmarkState {
        self.apply_structure(state, &self.noise[mode], None, None)
    }

    fn ito_correction(&self, state: &LandmarkState) -> LandmarkState {
        let mut out = state.zeros_like();
        for xi in &self.noise {
            let (dx, dp) = self.ito_for(&state.free.positions, &state.free.weights, xi);
            out.free.positions.axpy(0.5, &dx);
            out.free.weights.axpy(0.5, &dp);
            let (dq, da) = self.ito_for(&state.q, &state.anchored, xi);
            let (_, ds) = self.ito_for(&state.q, &state.sigma, xi);
            out.q.axpy(0.5, &dq);
            out.anchored.axpy(0.5, &da);
            out.sigma.axpy(0.5, &ds);
        }
        out
    }

    fn hamiltonian(&self, state: &LandmarkState) -> f64 {
        self.hamiltonian_of(&state.momentum(), &state.sigma, &state.q)
    }

    fn momentum_map_residual(&self, state: &LandmarkState) -> f64 {
        self.euler_lagrange_residual(state)
    }

    fn summary(&self, state: &LandmarkState) -> Vec<f64> {
        landmark_summary(&state.q, self.dim)
    }
}

pub(crate) fn landmark_summary(q: &[Point], dim: usize) -> Vec<f64> {
    q.iter().flat_map(|x| x[..dim].to_vec()).collect()
}

/// The landmark model in untangled variables `(M, σ, q)`.
#[derive(Debug, Clone, Copy)]
pub struct UntangledLandmarks<'a> {
    model: &'a LandmarkModel,
}

impl UntangledLandmarks<'_> {
    pub fn model(&self) -> &LandmarkModel {
        self.model
    }

    fn apply_structure(
        &self,
        state: &LandmarkUntangled,
        v: &PlaneField,
        nu: Option<&[Point]>,
        hn: Option<&[Point]>,
    ) -> LandmarkUntangled {
        let mut m = PointMomenta::empty();
        for (x, p) in state.m.positions.iter().zip(&state.m.weights) {
            let (dx, dp) = transport(v, *x, *p);
            m.push(dx, dp);
        }
        let mut sigma = Vec::with_capacity(state.q.len());
        let mut q = Vec::with_capacity(state.q.len());
        for (a, x) in state.q.iter().enumerate() {
            let jac = v.jacobian(*x);
            let force = hn.map_or([0.0; 2], |h| h[a]);
            sigma.push(sub2(scale2(-1.0, matvec_t(&jac, state.sigma[a])), force));
            q.push(add2(v.value(*x), nu.map_or([0.0; 2], |n| n[a])));
        }
        LandmarkUntangled { m, sigma, q }
    }

    pub fn velocity(&self, state: &LandmarkUntangled) -> KernelField {
        state.momentum().velocity(self.model.kernel)
    }
}

impl Flow for UntangledLandmarks<'_> {
    type State = LandmarkUntangled;

    fn drift(&self, state: &LandmarkUntangled) -> LandmarkUntangled {
        let u = PlaneField::Kernel(self.velocity(state));
        let nu: Vec<Point> = state
            .sigma
            .iter()
            .map(|s| scale2(self.model.sigma_m_sq, *s))
            .collect();
        let hn = self.model.potential_gradient(&state.q);
        self.apply_structure(state, &u, Some(&nu), Some(&hn))
    }

    fn noise_modes(&self) -> usize {
        self.model.noise.len()
    }

    fn diffusion(&self, mode: usize, state: &LandmarkUntangled) -> LandmarkUntangled {
        self.apply_structure(state, &self.model.noise[mode], None, None)
    }

    fn ito_correction(&self, state: &LandmarkUntangled) -> LandmarkUntangled {
        let mut out = state.zeros_like();
        for xi in &self.model.noise {
            let (dx, dp) = self.model.ito_for(&state.m.positions, &state.m.weights, xi);
            out.m.positions.axpy(0.5, &dx);
            out.m.weights.axpy(0.5, &dp);
            let (dq, ds) = self.model.ito_for(&state.q, &state.sigma, xi);
            out.q.axpy(0.5, &dq);
            out.sigma.axpy(0.5, &ds);
        }
        out
    }

    fn hamiltonian(&self, state: &LandmarkUntangled) -> f64 {
        self.model
            .hamiltonian_of(&state.momentum(), &state.sigma, &state.q)
    }

    fn momentum_map_residual(&self, state: &LandmarkUntangled) -> f64 {
        state.m.dual_norm(self.model.kernel)
    }

    fn summary(&self, state: &LandmarkUntangled) -> Vec<f64> {
        landmark_summary(&state.q, self.model.dim)
    }
}

/// Canonical bracket on flat `(Q, P, q, σ)` gradients:
/// `Σ ∂f/∂Q·∂h/∂P - ∂f/∂P·∂h/∂Q + ∂f/∂q·∂h/∂σ - ∂f/∂σ·∂h/∂q`.
pub fn canonical_bracket(df: &[f64], dh: &[f64], free: usize, landmarks: usize) -> f64 {
    assert_eq!(df.len(), 4 * (free + landmarks));
    assert_eq!(dh.len(), df.len());
    let pair = |x0: usize, p0: usize, len: usize| -> f64 {
        (0..len)
            .map(|i| df[x0 + i] * dh[p0 + i] - df[p0 + i] * dh[x0 + i])
            .sum::<f64>()
    };
    let (nf, nk) = (2 * free, 2 * landmarks);
    pair(0, nf, nf) + pair(2 * nf, 2 * nf + nk, nk)
}
