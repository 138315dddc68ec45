//! Spectral Lie-algebra operators on grid fields.
//!
//! Every dual operator here is the exact transpose of its primal partner under
//! the quadrature pairing: products are formed pointwise first and then
//! differentiated, so `D^T = -D` carries the duality through to round-off.

use crate::algebra::fields::{GridVectorField, ScalarField};
use crate::algebra::kernel::InertiaOperator;

/// `(u·∇) f`.
pub fn directional_derivative(u: &GridVectorField, f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let grad = f.gradient();
    let mut out = vec![0.0; grid.len()];
    for (uj, gj) in u.components().iter().zip(&grad) {
        for ((o, a), b) in out.iter_mut().zip(uj).zip(gj) {
            *o += a * b;
        }
    }
    f.with_values(out)
}

/// Action of a vector field on an image, `u n = -u·∇n`.
pub fn act(u: &GridVectorField, n: &ScalarField) -> ScalarField {
    let mut out = directional_derivative(u, n);
    out.values_mut().iter_mut().for_each(|v| *v = -*v);
    out
}

/// Transpose of [`act`]: `u ⋆ σ = div(σ u)` for a scalar density `σ`.
pub fn star(u: &GridVectorField, sigma: &ScalarField) -> ScalarField {
    let grid = sigma.grid();
    let mut out = vec![0.0; grid.len()];
    for (axis, uj) in u.components().iter().enumerate() {
        let flux: Vec<f64> = sigma.values().iter().zip(uj).map(|(s, v)| s * v).collect();
        for (o, d) in out.iter_mut().zip(grid.derivative(&flux, axis)) {
            *o += d;
        }
    }
    sigma.with_values(out)
}

/// `a ⋄ n = a ∇n` for a scalar density `a`.
pub fn diamond(a: &ScalarField, n: &ScalarField) -> GridVectorField {
    let grad = n.gradient();
    let comps = grad
        .into_iter()
        .map(|g| g.iter().zip(a.values()).map(|(x, y)| x * y).collect())
        .collect();
    GridVectorField::from_components(n.grid(), comps)
}

/// `ad_u v = (∇u) v - (∇v) u`.
pub fn ad(u: &GridVectorField, v: &GridVectorField) -> GridVectorField {
    let grid = u.grid();
    let ju = u.jacobian();
    let jv = v.jacobian();
    let d = grid.dim();
    let mut comps = vec![vec![0.0; grid.len()]; d];
    for (i, ci) in comps.iter_mut().enumerate() {
        for j in 0..d {
            let (uj, vj) = (u.component(j), v.component(j));
            for (idx, o) in ci.iter_mut().enumerate() {
                *o += ju[i][j][idx] * vj[idx] - jv[i][j][idx] * uj[idx];
            }
        }
    }
    GridVectorField::from_components(grid, comps)
}

/// Lie derivative of a 1-form density,
/// `£_ξ M = (ξ·∇)M + (∇ξ)ᵀM + M div ξ`, in the conservative arrangement
/// `(∇ξ)ᵀM + ∂_j(ξ_j M)` that makes it the exact transpose of [`ad`].
pub fn lie_oneform_density(xi: &GridVectorField, m: &GridVectorField) -> GridVectorField {
    let grid = xi.grid();
    let d = grid.dim();
    let jxi = xi.jacobian();
    let mut comps = vec![vec![0.0; grid.len()]; d];
    for (i, ci) in comps.iter_mut().enumerate() {
        for (j, jj) in jxi.iter().enumerate() {
            // (∇ξ)ᵀ M: Σ_j ∂_i ξ_j M_j
            let mj = m.component(j);
            for (idx, o) in ci.iter_mut().enumerate() {
                *o += jj[i][idx] * mj[idx];
            }
            let flux: Vec<f64> = m
                .component(i)
                .iter()
                .zip(xi.component(j))
                .map(|(a, b)| a * b)
                .collect();
            for (o, v) in ci.iter_mut().zip(grid.derivative(&flux, j)) {
                *o += v;
            }
        }
    }
    GridVectorField::from_components(grid, comps)
}

/// `ad*_u m`, identical to [`lie_oneform_density`] for 1-form densities.
pub fn ad_star(u: &GridVectorField, m: &GridVectorField) -> GridVectorField {
    lie_oneform_density(u, m)
}

pub fn apply_inertia(op: &InertiaOperator, u: &GridVectorField) -> GridVectorField {
    let grid = u.grid();
    let comps = u
        .components()
        .iter()
        .map(|c| grid.apply_symbol(c, |k| op.symbol(k)))
        .collect();
    GridVectorField::from_components(grid, comps)
}

pub fn invert_inertia(op: &InertiaOperator, m: &GridVectorField) -> GridVectorField {
    let grid = m.grid();
    let comps = m
        .components()
        .iter()
        .map(|c| grid.apply_symbol(c, |k| 1.0 / op.symbol(k)))
        .collect();
    GridVectorField::from_components(grid, comps)
}

/// Dual norm `sqrt(⟨m, L⁻¹ m⟩)` of a grid momentum.
pub fn dual_norm(op: &InertiaOperator, m: &GridVectorField) -> f64 {
    m.integrate_dot(&invert_inertia(op, m)).max(0.0).sqrt()
}
