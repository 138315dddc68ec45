//! Image metamorphosis on a periodic grid.

use crate::algebra::fields::{GridVectorField, ScalarField};
use crate::algebra::grid::Grid;
use crate::algebra::grid_ops;
use crate::algebra::kernel::InertiaOperator;
use crate::algebra::Inertia;
use crate::dynamics::{Flow, LagrangianSpec, Potential};
use crate::error::{Error, Result};
use crate::linear::{Linear, Point};

/// Tangled image state `(μ, σ, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageState {
    pub mu: GridVectorField,
    pub sigma: ScalarField,
    pub n: ScalarField,
}

impl ImageState {
    pub fn new(mu: GridVectorField, sigma: ScalarField, n: ScalarField) -> Result<Self> {
        let grid = n.grid().clone();
        mu.same_grid(&grid, "μ")?;
        sigma.same_grid(&grid, "σ")?;
        Ok(Self { mu, sigma, n })
    }

    /// State on the zero level, `μ = -σ ⋄ n`.
    pub fn zero_level(sigma: ScalarField, n: ScalarField) -> Result<Self> {
        sigma.same_grid(n.grid(), "σ")?;
        let mut mu = grid_ops::diamond(&sigma, &n);
        mu.scale(-1.0);
        Ok(Self { mu, sigma, n })
    }

    pub fn grid(&self) -> &Grid {
        self.n.grid()
    }

    /// `M = μ + σ ⋄ n`.
    pub fn total_momentum(&self) -> GridVectorField {
        let mut m = self.mu.clone();
        m.axpy(1.0, &grid_ops::diamond(&self.sigma, &self.n));
        m
    }

    pub fn untangle(&self) -> ImageUntangled {
        ImageUntangled {
            m: self.total_momentum(),
            sigma: self.sigma.clone(),
            n: self.n.clone(),
        }
    }
}

impl Linear for ImageState {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.mu.axpy(a, &x.mu);
        self.sigma.axpy(a, &x.sigma);
        self.n.axpy(a, &x.n);
    }

    fn scale(&mut self, a: f64) {
        self.mu.scale(a);
        self.sigma.scale(a);
        self.n.scale(a);
    }

    fn coord_dot(&self, other: &Self) -> f64 {
        self.mu.coord_dot(&other.mu) + self.sigma.coord_dot(&other.sigma) + self.n.coord_dot(&other.n)
    }

    fn is_finite(&self) -> bool {
        self.mu.is_finite() && self.sigma.is_finite() && self.n.is_finite()
    }
}

/// Untangled image state `(M, σ, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageUntangled {
    pub m: GridVectorField,
    pub sigma: ScalarField,
    pub n: ScalarField,
}

impl ImageUntangled {
    /// `μ = M - σ ⋄ n`.
    pub fn momentum(&self) -> GridVectorField {
        let mut mu = self.m.clone();
        mu.axpy(-1.0, &grid_ops::diamond(&self.sigma, &self.n));
        mu
    }

    pub fn tangle(&self) -> ImageState {
        ImageState {
            mu: self.momentum(),
            sigma: self.sigma.clone(),
            n: self.n.clone(),
        }
    }
}

impl Linear for ImageUntangled {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.m.axpy(a, &x.m);
        self.sigma.axpy(a, &x.sigma);
        self.n.axpy(a, &x.n);
    }

    fn scale(&mut self, a: f64) {
        self.m.scale(a);
        self.sigma.scale(a);
        self.n.scale(a);
    }

    fn coord_dot(&self, other: &Self) -> f64 {
        self.m.coord_dot(&other.m) + self.sigma.coord_dot(&other.sigma) + self.n.coord_dot(&other.n)
    }

    fn is_finite(&self) -> bool {
        self.m.is_finite() && self.sigma.is_finite() && self.n.is_finite()
    }
}

/// Gradient triple `(δf/δμ, δf/δσ, δf/δn)` for image functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGradient {
    pub mu: GridVectorField,
    pub sigma: ScalarField,
    pub n: ScalarField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageModel {
    grid: Grid,
    inertia: InertiaOperator,
    sigma_m_sq: f64,
    potential: Potential,
    noise: Vec<GridVectorField>,
    probes: Vec<Point>,
}

impl ImageModel {
    pub fn new(spec: &LagrangianSpec, grid: &Grid) -> Result<Self> {
        let inertia = match spec.inertia {
            Inertia::Helmholtz(op) => op,
            Inertia::Kernel(_) => {
                return Err(Error::Representation(
                    "image dynamics need a Helmholtz inertia".into(),
                ))
            }
        };
        Ok(Self {
            grid: grid.clone(),
            inertia,
            sigma_m_sq: spec.sigma_m_sq(),
            potential: spec.potential,
            noise: Vec::new(),
            probes: default_probes(grid),
        })
    }

    pub fn with_noise(mut self, noise: Vec<GridVectorField>) -> Result<Self> {
        for xi in &noise {
            xi.same_grid(&self.grid, "noise field")?;
        }
        self.noise = noise;
        Ok(self)
    }

    /// Points at which [`Flow::summary`] samples the image.
    pub fn with_probes(mut self, probes: Vec<Point>) -> Self {
        self.probes = probes;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn inertia(&self) -> InertiaOperator {
        self.inertia
    }

    pub fn sigma_m_sq(&self) -> f64 {
        self.sigma_m_sq
    }

    pub fn noise(&self) -> &[GridVectorField] {
        &self.noise
    }

    pub fn probes(&self) -> &[Point] {
        &self.probes
    }

    pub fn untangled(&self) -> UntangledImages<'_> {
        UntangledImages { model: self }
    }

    fn check(&self, state: &ImageState) -> Result<()> {
        state.n.same_grid(&self.grid, "state")
    }

    pub fn velocity(&self, mu: &GridVectorField) -> GridVectorField {
        grid_ops::invert_inertia(&self.inertia, mu)
    }

    fn template_velocity(&self, sigma: &ScalarField) -> ScalarField {
        let mut nu = sigma.clone();
        nu.scale(self.sigma_m_sq);
        nu
    }

    fn potential_gradient(&self, n: &ScalarField) -> ScalarField {
        let mut g = n.clone();
        g.scale(self.potential.stiffness());
        g
    }

    pub fn lagrangian(&self, u: &GridVectorField, nu: &ScalarField, n: &ScalarField) -> f64 {
        let lu = grid_ops::apply_inertia(&self.inertia, u);
        0.5 * lu.integrate_dot(u) + nu.integrate_product(nu) / (2.0 * self.sigma_m_sq)
            - 0.5 * self.potential.stiffness() * n.integrate_product(n)
    }

    /// `μ = Lu`, `σ = ν/σ_m²`, `h = ⟨μ, u⟩ + ⟨σ, ν⟩ - ℓ`.
    pub fn legendre(
        &self,
        u: &GridVectorField,
        nu: &ScalarField,
        n: &ScalarField,
    ) -> Result<(GridVectorField, ScalarField, f64)> {
        u.same_grid(&self.grid, "u")?;
        nu.same_grid(&self.grid, "ν")?;
        n.same_grid(&self.grid, "n")?;
        let mu = grid_ops::apply_inertia(&self.inertia, u);
        let mut sigma = nu.clone();
        sigma.scale(1.0 / self.sigma_m_sq);
        let h = mu.integrate_dot(u) + sigma.integrate_product(nu) - self.lagrangian(u, nu, n);
        Ok((mu, sigma, h))
    }

    pub fn hamiltonian_of(&self, mu: &GridVectorField, sigma: &ScalarField, n: &ScalarField) -> f64 {
        0.5 * mu.integrate_dot(&self.velocity(mu))
            + 0.5 * self.sigma_m_sq * sigma.integrate_product(sigma)
            + 0.5 * self.potential.stiffness() * n.integrate_product(n)
    }

    pub fn euler_lagrange_residual(&self, state: &ImageState) -> f64 {
        grid_ops::dual_norm(&self.inertia, &state.total_momentum())
    }

    pub fn endpoint_residual(&self, state: &ImageState, n1: &ScalarField) -> Result<f64> {
        n1.same_grid(&self.grid, "target")?;
        let mut m = state.mu.clone();
        m.axpy(1.0, &grid_ops::diamond(&state.sigma, n1));
        Ok(grid_ops::dual_norm(&self.inertia, &m))
    }

    /// Lie–Poisson operator applied to `(v, ν, δh/δn)`.
    fn apply_structure(
        &self,
        state: &ImageState,
        v: &GridVectorField,
        nu: Option<&ScalarField>,
        hn: Option<&ScalarField>,
    ) -> ImageState {
        let mut mu = grid_ops::ad_star(v, &state.mu);
        mu.scale(-1.0);
        let mut sigma = grid_ops::star(v, &state.sigma);
        sigma.scale(-1.0);
        let mut n = grid_ops::act(v, &state.n);
        if let Some(nu) = nu {
            mu.axpy(-1.0, &grid_ops::diamond(&state.sigma, nu));
            n.axpy(1.0, nu);
        }
        if let Some(hn) = hn {
            mu.axpy(1.0, &grid_ops::diamond(hn, &state.n));
            sigma.axpy(-1.0, hn);
        }
        ImageState { mu, sigma, n }
    }

    pub fn rhs_tangled(&self, state: &ImageState) -> Result<ImageState> {
        self.check(state)?;
        Ok(self.drift(state))
    }

    pub fn rhs_untangled(&self, state: &ImageUntangled) -> Result<ImageUntangled> {
        state.n.same_grid(&self.grid, "state")?;
        Ok(self.untangled().drift(state))
    }

    pub fn hamiltonian_gradient(&self, state: &ImageState) -> ImageGradient {
        ImageGradient {
            mu: self.velocity(&state.mu),
            sigma: self.template_velocity(&state.sigma),
            n: self.potential_gradient(&state.n),
        }
    }

    /// `{f, h}` for image gradient triples.
    pub fn lie_poisson_apply(&self, state: &ImageState, df: &ImageGradient, dh: &ImageGradient) -> Result<f64> {
        self.check(state)?;
        for g in [df, dh] {
            g.mu.same_grid(&self.grid, "δ/δμ")?;
            g.sigma.same_grid(&self.grid, "δ/δσ")?;
            g.n.same_grid(&self.grid, "δ/δn")?;
        }
        let rate = self.apply_structure(state, &dh.mu, Some(&dh.sigma), Some(&dh.n));
        Ok(df.mu.integrate_dot(&rate.mu)
            + df.sigma.integrate_product(&rate.sigma)
            + df.n.integrate_product(&rate.n))
    }

    pub fn stochastic_hamiltonian_increment(&self, state: &ImageState, dt: f64, dw: &[f64]) -> Result<f64> {
        if dw.len() != self.noise.len() {
            return Err(Error::NoiseCount {
                expected: self.noise.len(),
                got: dw.len(),
            });
        }
        let noise: f64 = self
            .noise
            .iter()
            .zip(dw)
            .map(|(xi, w)| state.mu.integrate_dot(xi) * w)
            .sum();
        Ok(self.hamiltonian(state) * dt + noise)
    }

    /// Image values at the probe points.
    pub fn probe(&self, n: &ScalarField) -> Vec<f64> {
        let interp = self.grid.interpolant(n.values());
        self.probes.iter().map(|x| interp.value(*x)).collect()
    }
}

fn default_probes(grid: &Grid) -> Vec<Point> {
    let l = grid.length();
    let fractions = [0.125, 0.375, 0.625, 0.875];
    match grid.dim() {
        1 => fractions.iter().map(|f| [f * l, 0.0]).collect(),
        _ => fractions
            .iter()
            .flat_map(|a| fractions.iter().map(move |b| [a * l, b * l]))
            .collect(),
    }
}

impl Flow for ImageModel {
    type State = ImageState;

    fn drift(&self, state: &ImageState) -> ImageState {
        let u = self.velocity(&state.mu);
        let nu = self.template_velocity(&state.sigma);
        let hn = self.potential_gradient(&state.n);
        let hn = (self.potential.stiffness() != 0.0).then_some(&hn);
        self.apply_structure(state, &u, Some(&nu), hn)
    }

    fn noise_modes(&self) -> usize {
        self.noise.len()
    }

    fn diffusion(&self, mode: usize, state: &ImageState) -> ImageState {
        self.apply_structure(state, &self.noise[mode], None, None)
    }

    fn ito_correction(&self, state: &ImageState) -> ImageState {
        let mut out = state.zeros_like();
        for xi in &self.noise {
            let first = self.apply_structure(state, xi, None, None);
            out.axpy(0.5, &self.apply_structure(&first, xi, None, None));
        }
        out
    }

    fn hamiltonian(&self, state: &ImageState) -> f64 {
        self.hamiltonian_of(&state.mu, &state.sigma, &state.n)
    }

    fn momentum_map_residual(&self, state: &ImageState) -> f64 {
        self.euler_lagrange_residual(state)
    }

    fn summary(&self, state: &ImageState) -> Vec<f64> {
        self.probe(&state.n)
    }
}

/// The image model in untangled variables `(M, σ, n)`.
#[derive(Debug, Clone, Copy)]
pub struct UntangledImages<'a> {
    model: &'a ImageModel,
}

impl UntangledImages<'_> {
    pub fn model(&self) -> &ImageModel {
        self.model
    }

    fn apply_structure(
        &self,
        state: &ImageUntangled,
        v: &GridVectorField,
        nu: Option<&ScalarField>,
        hn: Option<&ScalarField>,
    ) -> ImageUntangled {
        let mut m = grid_ops::ad_star(v, &state.m);
        m.scale(-1.0);
        let mut sigma = grid_ops::star(v, &state.sigma);
        sigma.scale(-1.0);
        let mut n = grid_ops::act(v, &state.n);
        if let Some(nu) = nu {
            n.axpy(1.0, nu);
        }
        if let Some(hn) = hn {
            sigma.axpy(-1.0, hn);
        }
        ImageUntangled { m, sigma, n }
    }
}

impl Flow for UntangledImages<'_> {
    type State = ImageUntangled;

    fn drift(&self, state: &ImageUntangled) -> ImageUntangled {
        let u = self.model.velocity(&state.momentum());
        let nu = self.model.template_velocity(&state.sigma);
        let hn = self.model.potential_gradient(&state.n);
        let hn = (self.model.potential.stiffness() != 0.0).then_some(&hn);
        self.apply_structure(state, &u, Some(&nu), hn)
    }

    fn noise_modes(&self) -> usize {
        self.model.noise.len()
    }

    fn diffusion(&self, mode: usize, state: &ImageUntangled) -> ImageUntangled {
        self.apply_structure(state, &self.model.noise[mode], None, None)
    }

    fn ito_correction(&self, state: &ImageUntangled) -> ImageUntangled {
        let mut out = state.zeros_like();
        for xi in &self.model.noise {
            let first = self.apply_structure(state, xi, None, None);
            out.axpy(0.5, &self.apply_structure(&first, xi, None, None));
        }
        out
    }

    fn hamiltonian(&self, state: &ImageUntangled) -> f64 {
        self.model
            .hamiltonian_of(&state.momentum(), &state.sigma, &state.n)
    }

    fn momentum_map_residual(&self, state: &ImageUntangled) -> f64 {
        grid_ops::dual_norm(&self.model.inertia, &state.m)
    }

    fn summary(&self, state: &ImageUntangled) -> Vec<f64> {
        self.model.probe(&state.n)
    }
}
