//! Metamorphosis dynamics: Legendre transform, Hamiltonian, right-hand sides
//! in the tangled `(μ, σ, n)` and untangled `(M, σ, n)` Lie–Poisson forms,
//! structural residuals and the Poisson bracket.
//!
//! Every flow is written as a Stratonovich system
//! `dz = a(z) dt + Σ_i b_i(z) ∘ dW^i`, where `a` is the Hamiltonian vector
//! field of `h` and `b_i` is the same Lie–Poisson operator applied to the
//! gradient of `⟨μ, ξ_i⟩`. With no noise modes it is the deterministic flow.

pub mod images;
pub mod landmarks;

pub use images::{ImageGradient, ImageModel, ImageState, ImageUntangled, UntangledImages};
pub use landmarks::{
    LandmarkGradient, LandmarkModel, LandmarkState, LandmarkUntangled, UntangledLandmarks,
};

use crate::algebra::Inertia;
use crate::error::{invalid, Result};
use crate::linear::Linear;

/// Optional template potential `V(n) = κ/2 ⟨n, n⟩`. It enters the Lagrangian
/// as `-V`, so `δh/δn = κ n`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Potential {
    #[default]
    None,
    Quadratic { stiffness: f64 },
}

impl Potential {
    pub fn stiffness(&self) -> f64 {
        match self {
            Potential::None => 0.0,
            Potential::Quadratic { stiffness } => *stiffness,
        }
    }
}

/// `ℓ(u, n, ν) = ½⟨Lu, u⟩ + 1/(2σ_m²) ‖ν‖² - V(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangianSpec {
    pub inertia: Inertia,
    sigma_m_sq: f64,
    pub potential: Potential,
}

impl LagrangianSpec {
    pub fn new(inertia: Inertia, sigma_m_sq: f64) -> Result<Self> {
        if !(sigma_m_sq.is_finite() && sigma_m_sq > 0.0) {
            return Err(invalid(
                "sigma_m_sq",
                format!("must be > 0 (σ = ν/σ_m² degenerates at 0), got {sigma_m_sq}"),
            ));
        }
        Ok(Self {
            inertia,
            sigma_m_sq,
            potential: Potential::None,
        })
    }

    pub fn with_potential(mut self, potential: Potential) -> Self {
        self.potential = potential;
        self
    }

    pub fn sigma_m_sq(&self) -> f64 {
        self.sigma_m_sq
    }
}

/// A Stratonovich system `dz = a(z) dt + Σ_i b_i(z) ∘ dW^i`.
pub trait Flow: Sync {
    type State: Linear + Send + Sync;

    /// Deterministic right-hand side `a(z)`.
    fn drift(&self, state: &Self::State) -> Self::State;

    fn noise_modes(&self) -> usize;

    /// Diffusion coefficient `b_i(z)`.
    fn diffusion(&self, mode: usize, state: &Self::State) -> Self::State;

    /// Itô drift correction `½ Σ_i (D b_i) b_i`.
    fn ito_correction(&self, state: &Self::State) -> Self::State;

    fn hamiltonian(&self, state: &Self::State) -> f64;

    /// Norm of the total momentum `μ + σ ⋄ n`.
    fn momentum_map_residual(&self, state: &Self::State) -> f64;

    /// Low-dimensional summary recorded by ensembles: landmark coordinates, or
    /// image values at probe points.
    fn summary(&self, state: &Self::State) -> Vec<f64>;
}
