//! Discretized Lie-algebraic operator kit: pairings, Lie derivatives,
//! `ad`/`ad*`, diamond, star, and the inertia operator or kernel that maps
//! momenta to velocities.
//!
//! Two data structures are supported. Images live on a periodic grid and use
//! Fourier-spectral derivatives ([`grid_ops`]); landmarks live on the plane,
//! where velocities are closed-form fields and momenta are point clouds
//! ([`point_ops`]). The enums below give one entry point for both and reject
//! mixed inputs.

pub mod fields;
pub mod grid;
pub mod grid_ops;
pub mod kernel;
pub mod point_ops;

pub use fields::{GridVectorField, ScalarField};
pub use grid::{Grid, TrigInterpolant};
pub use kernel::{kernel_matrix, InertiaOperator, Kernel, KernelField, PlaneField, PointMomenta};

use crate::error::{Error, Result};
use crate::linear::Point;

/// Where fields live: a periodic grid, or the unbounded plane for
/// landmark-only runs (`dim ≤ 2`, no grid).
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Periodic(Grid),
    Plane { dim: usize },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Periodic(g) => g.dim(),
            Domain::Plane { dim } => *dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VectorField {
    Grid(GridVectorField),
    Plane(PlaneField),
}

impl VectorField {
    pub fn value(&self, x: Point) -> Result<Point> {
        match self {
            VectorField::Plane(f) => Ok(f.value(x)),
            VectorField::Grid(_) => Err(Error::Representation(
                "point evaluation of a grid field needs an interpolant".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OneFormDensity {
    Grid(GridVectorField),
    Points(PointMomenta),
}

/// A point `n` of the data manifold.
#[derive(Debug, Clone, PartialEq)]
pub enum Template {
    Image(ScalarField),
    Landmarks(Vec<Point>),
}

/// A tangent vector `ν` or cotangent vector `σ` at a template. Images use a
/// scalar grid function (densities for cotangents); landmarks use one vector
/// per landmark.
#[derive(Debug, Clone, PartialEq)]
pub enum TemplateVector {
    Image(ScalarField),
    Landmarks(Vec<Point>),
}

/// The map between velocities and momenta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Inertia {
    Helmholtz(InertiaOperator),
    Kernel(Kernel),
}

fn mismatch(op: &str) -> Error {
    Error::Representation(format!("{op}: incompatible representations"))
}

/// `⟨m, u⟩`.
pub fn pair(m: &OneFormDensity, u: &VectorField) -> Result<f64> {
    match (m, u) {
        (OneFormDensity::Grid(m), VectorField::Grid(u)) => {
            u.same_grid(m.grid(), "velocity")?;
            Ok(m.integrate_dot(u))
        }
        (OneFormDensity::Points(m), VectorField::Plane(u)) => Ok(m.pair_with(|x| u.value(x))),
        _ => Err(mismatch("pair")),
    }
}

/// `⟨σ, ω⟩` between a cotangent and a tangent vector at the same template.
pub fn pair_template(sigma: &TemplateVector, omega: &TemplateVector) -> Result<f64> {
    match (sigma, omega) {
        (TemplateVector::Image(s), TemplateVector::Image(w)) => {
            w.same_grid(s.grid(), "tangent")?;
            Ok(s.integrate_product(w))
        }
        (TemplateVector::Landmarks(s), TemplateVector::Landmarks(w)) => {
            if s.len() != w.len() {
                return Err(Error::DomainMismatch(format!(
                    "{} vs {} landmarks",
                    s.len(),
                    w.len()
                )));
            }
            Ok(point_ops::pair_vectors(s, w))
        }
        _ => Err(mismatch("pair_template")),
    }
}

/// Lie-algebra action on a scalar image, `u f = -u·∇f`.
pub fn lie_derivative_scalar(u: &VectorField, f: &ScalarField) -> Result<ScalarField> {
    match u {
        VectorField::Grid(u) => {
            u.same_grid(f.grid(), "velocity")?;
            Ok(grid_ops::act(u, f))
        }
        VectorField::Plane(_) => Err(mismatch("lie_derivative_scalar")),
    }
}

/// `£_ξ M = (ξ·∇)M + (∇ξ)ᵀM + M div ξ` on grid momenta.
pub fn lie_derivative_oneform_density(
    xi: &VectorField,
    m: &OneFormDensity,
) -> Result<OneFormDensity> {
    match (xi, m) {
        (VectorField::Grid(xi), OneFormDensity::Grid(m)) => {
            xi.same_grid(m.grid(), "vector field")?;
            Ok(OneFormDensity::Grid(grid_ops::lie_oneform_density(xi, m)))
        }
        (_, OneFormDensity::Points(_)) => Err(Error::Representation(
            "Lie derivative of distributional momenta is evolved by the landmark dynamics".into(),
        )),
        _ => Err(mismatch("lie_derivative_oneform_density")),
    }
}

/// `ad_u v = (∇u) v - (∇v) u` on grids.
pub fn ad(u: &VectorField, v: &VectorField) -> Result<VectorField> {
    match (u, v) {
        (VectorField::Grid(u), VectorField::Grid(v)) => {
            u.same_grid(v.grid(), "vector field")?;
            Ok(VectorField::Grid(grid_ops::ad(u, v)))
        }
        _ => Err(Error::Representation(
            "ad is only materialized on grids; pair landmark momenta with `point_ops::pair_ad`"
                .into(),
        )),
    }
}

/// `ad*_u m`, the transpose of [`ad`] under [`pair`].
pub fn ad_star(u: &VectorField, m: &OneFormDensity) -> Result<OneFormDensity> {
    lie_derivative_oneform_density(u, m)
}

/// `n* ⋄ n`, defined by `⟨n* ⋄ n, u⟩ = -⟨n*, u n⟩`.
pub fn diamond(n_star: &TemplateVector, n: &Template) -> Result<OneFormDensity> {
    match (n_star, n) {
        (TemplateVector::Image(a), Template::Image(n)) => {
            a.same_grid(n.grid(), "cotangent")?;
            Ok(OneFormDensity::Grid(grid_ops::diamond(a, n)))
        }
        (TemplateVector::Landmarks(p), Template::Landmarks(q)) => {
            if p.len() != q.len() {
                return Err(Error::DomainMismatch(format!(
                    "{} covectors for {} landmarks",
                    p.len(),
                    q.len()
                )));
            }
            Ok(OneFormDensity::Points(point_ops::diamond(p, q)))
        }
        _ => Err(mismatch("diamond")),
    }
}

/// Action `u n` of a velocity on a template.
pub fn act(u: &VectorField, n: &Template) -> Result<TemplateVector> {
    match (u, n) {
        (VectorField::Grid(u), Template::Image(n)) => {
            u.same_grid(n.grid(), "velocity")?;
            Ok(TemplateVector::Image(grid_ops::act(u, n)))
        }
        (VectorField::Plane(u), Template::Landmarks(q)) => {
            Ok(TemplateVector::Landmarks(point_ops::act(u, q)))
        }
        _ => Err(mismatch("act")),
    }
}

/// Action `u ω` on a tangent vector `ω` at `n`.
pub fn act_tangent(u: &VectorField, n: &Template, omega: &TemplateVector) -> Result<TemplateVector> {
    match (u, n, omega) {
        (VectorField::Grid(u), Template::Image(_), TemplateVector::Image(w)) => {
            u.same_grid(w.grid(), "velocity")?;
            Ok(TemplateVector::Image(grid_ops::act(u, w)))
        }
        (VectorField::Plane(u), Template::Landmarks(q), TemplateVector::Landmarks(w)) => {
            Ok(TemplateVector::Landmarks(point_ops::act_tangent(u, q, w)))
        }
        _ => Err(mismatch("act_tangent")),
    }
}

/// `u ⋆ σ`, defined by `⟨σ, u ω⟩ = ⟨u ⋆ σ, ω⟩`. Landmarks need the base
/// point `n` because the tangent lift is evaluated there.
pub fn star(u: &VectorField, sigma: &TemplateVector, n: &Template) -> Result<TemplateVector> {
    match (u, sigma, n) {
        (VectorField::Grid(u), TemplateVector::Image(s), Template::Image(_)) => {
            u.same_grid(s.grid(), "velocity")?;
            Ok(TemplateVector::Image(grid_ops::star(u, s)))
        }
        (VectorField::Plane(u), TemplateVector::Landmarks(s), Template::Landmarks(q)) => {
            Ok(TemplateVector::Landmarks(point_ops::star(u, q, s)))
        }
        _ => Err(mismatch("star")),
    }
}

/// `δh/δμ = u`: the inverse inertia operator on grids, the kernel sum
/// `Σ_a K(x - q_a) p_a` for point momenta.
pub fn velocity_from_momentum(m: &OneFormDensity, inertia: &Inertia) -> Result<VectorField> {
    match (m, inertia) {
        (OneFormDensity::Grid(m), Inertia::Helmholtz(op)) => {
            Ok(VectorField::Grid(grid_ops::invert_inertia(op, m)))
        }
        (OneFormDensity::Points(m), Inertia::Kernel(k)) => {
            Ok(VectorField::Plane(PlaneField::Kernel(m.velocity(*k))))
        }
        _ => Err(mismatch("velocity_from_momentum")),
    }
}

/// `μ = δℓ/δu = L u` on grids. Landmark momenta are primal and have no
/// inverse map here.
pub fn momentum_from_velocity(u: &VectorField, inertia: &Inertia) -> Result<OneFormDensity> {
    match (u, inertia) {
        (VectorField::Grid(u), Inertia::Helmholtz(op)) => {
            Ok(OneFormDensity::Grid(grid_ops::apply_inertia(op, u)))
        }
        _ => Err(Error::Representation(
            "momentum_from_velocity is defined for grid fields only".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pair_examples() {
        let g = Grid::new(1, 16, 2.0 * PI).unwrap();
        let m = OneFormDensity::Grid(GridVectorField::constant(&g, [1.0, 0.0]));
        let u = VectorField::Grid(GridVectorField::constant(&g, [1.0, 0.0]));
        assert!((pair(&m, &u).unwrap() - 2.0 * PI).abs() < 1e-12);
        let zero = OneFormDensity::Grid(GridVectorField::zeros(&g));
        assert_eq!(pair(&zero, &u).unwrap(), 0.0);

        let lm = OneFormDensity::Points(PointMomenta::new(vec![[0.0, 0.0]], vec![[1.0, 0.0]]));
        let e1 = VectorField::Plane(PlaneField::Constant([1.0, 0.0]));
        assert_eq!(pair(&lm, &e1).unwrap(), 1.0);
        assert!(pair(&lm, &u).is_err());
    }

    #[test]
    fn domain_mismatch_is_reported() {
        let g1 = Grid::new(1, 16, 2.0 * PI).unwrap();
        let g2 = Grid::new(1, 32, 2.0 * PI).unwrap();
        let m = OneFormDensity::Grid(GridVectorField::zeros(&g1));
        let u = VectorField::Grid(GridVectorField::zeros(&g2));
        assert!(matches!(pair(&m, &u), Err(Error::DomainMismatch(_))));
        assert!(ad(&u, &VectorField::Grid(GridVectorField::zeros(&g1))).is_err());
    }

    #[test]
    fn landmark_diamond_pairs_to_minus_one() {
        let p = TemplateVector::Landmarks(vec![[1.0, 0.0]]);
        let q = Template::Landmarks(vec![[0.0, 0.0]]);
        let d = diamond(&p, &q).unwrap();
        let e1 = VectorField::Plane(PlaneField::Constant([1.0, 0.0]));
        assert_eq!(pair(&d, &e1).unwrap(), -1.0);
    }

    #[test]
    fn image_diamond_of_flat_image_vanishes() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let n = Template::Image(ScalarField::from_fn(&g, |_| 3.0));
        let pi = TemplateVector::Image(ScalarField::from_fn(&g, |x| x[0].sin()));
        match diamond(&pi, &n).unwrap() {
            OneFormDensity::Grid(m) => assert!(m.max_abs() < 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn star_of_divergence_free_field_on_constant_density_vanishes() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let u = VectorField::Grid(GridVectorField::from_fn(&g, |x| [x[1].sin(), x[0].cos()]));
        let s = TemplateVector::Image(ScalarField::from_fn(&g, |_| 2.0));
        let n = Template::Image(ScalarField::zeros(&g));
        match star(&u, &s, &n).unwrap() {
            TemplateVector::Image(out) => assert!(out.max_abs() < 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn landmark_star_of_constant_field_vanishes() {
        let u = VectorField::Plane(PlaneField::Constant([0.3, -2.0]));
        let s = TemplateVector::Landmarks(vec![[1.0, 2.0], [3.0, 4.0]]);
        let q = Template::Landmarks(vec![[0.0, 0.0], [1.0, 1.0]]);
        assert_eq!(
            star(&u, &s, &q).unwrap(),
            TemplateVector::Landmarks(vec![[0.0, 0.0]; 2])
        );
    }

    #[test]
    fn single_landmark_velocity_at_center() {
        let m = OneFormDensity::Points(PointMomenta::new(vec![[0.0, 0.0]], vec![[1.0, 0.0]]));
        let u = velocity_from_momentum(&m, &Inertia::Kernel(Kernel::default())).unwrap();
        assert_eq!(u.value([0.0, 0.0]).unwrap(), [1.0, 0.0]);
        let zero = OneFormDensity::Points(PointMomenta::empty());
        let u0 = velocity_from_momentum(&zero, &Inertia::Kernel(Kernel::default())).unwrap();
        assert_eq!(u0.value([0.4, 0.1]).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn momentum_from_velocity_rejects_landmarks() {
        let u = VectorField::Plane(PlaneField::Constant([1.0, 0.0]));
        assert!(momentum_from_velocity(&u, &Inertia::Kernel(Kernel::default())).is_err());
        let ld = OneFormDensity::Points(PointMomenta::empty());
        let xi = VectorField::Plane(PlaneField::Constant([1.0, 0.0]));
        assert!(lie_derivative_oneform_density(&xi, &ld).is_err());
    }
}
