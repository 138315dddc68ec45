//! Material tracers `x = g_t X` carrying the deformation gradient
//! `F = ∂x/∂X`.

use crate::algebra::fields::GridVectorField;
use crate::algebra::grid::TrigInterpolant;
use crate::algebra::kernel::PlaneField;
use crate::error::{invalid, Result};
use crate::linear::{add2, matmul, matvec, scale2, Point};

type Mat2 = [[f64; 2]; 2];

/// A velocity (or velocity increment) that can be evaluated anywhere.
pub trait VelocitySource {
    fn value(&self, x: Point) -> Point;
    /// `jac[i][j] = ∂_j v_i`.
    fn jacobian(&self, x: Point) -> Mat2;
}

impl VelocitySource for PlaneField {
    fn value(&self, x: Point) -> Point {
        PlaneField::value(self, x)
    }

    fn jacobian(&self, x: Point) -> Mat2 {
        PlaneField::jacobian(self, x)
    }
}

/// Trigonometric interpolation of a grid vector field.
#[derive(Debug, Clone)]
pub struct GridVelocity {
    components: Vec<TrigInterpolant>,
}

impl GridVelocity {
    pub fn new(field: &GridVectorField) -> Self {
        let grid = field.grid();
        Self {
            components: field
                .components()
                .iter()
                .map(|c| grid.interpolant(c))
                .collect(),
        }
    }
}

impl VelocitySource for GridVelocity {
    fn value(&self, x: Point) -> Point {
        let mut v = [0.0; 2];
        for (vi, c) in v.iter_mut().zip(&self.components) {
            *vi = c.value(x);
        }
        v
    }

    fn jacobian(&self, x: Point) -> Mat2 {
        let mut jac = [[0.0; 2]; 2];
        for (row, c) in jac.iter_mut().zip(&self.components) {
            *row = c.gradient(x);
        }
        jac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracerCloud {
    labels: Vec<Point>,
    positions: Vec<Point>,
    gradients: Vec<Mat2>,
    period: Option<f64>,
}

const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

impl TracerCloud {
    /// Tracers on the plane, starting at their labels with `F = I`.
    pub fn new(labels: Vec<Point>) -> Result<Self> {
        if labels.is_empty() {
            return Err(invalid("tracers", "need at least one tracer"));
        }
        if labels.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(invalid("tracers", "non-finite label"));
        }
        Ok(Self {
            positions: labels.clone(),
            gradients: vec![IDENTITY; labels.len()],
            labels,
            period: None,
        })
    }

    /// Tracers on a periodic box of side `length`. Positions are integrated
    /// unwrapped; [`TracerCloud::wrapped_positions`] folds them back.
    pub fn periodic(labels: Vec<Point>, length: f64) -> Result<Self> {
        let mut cloud = Self::new(labels)?;
        cloud.period = Some(length);
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Point] {
        &self.labels
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn gradients(&self) -> &[Mat2] {
        &self.gradients
    }

    pub fn wrapped_positions(&self) -> Vec<Point> {
        match self.period {
            None => self.positions.clone(),
            Some(l) => self
                .positions
                .iter()
                .map(|p| [p[0].rem_euclid(l), p[1].rem_euclid(l)])
                .collect(),
        }
    }
}

fn mat_add_scaled(a: &Mat2, s: f64, b: &Mat2) -> Mat2 {
    let mut out = *a;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] += s * b[i][j];
        }
    }
    out
}

/// One Heun step of `dx = ũ(x)`, `dF = ∇ũ(x) F` where `now` and `next` are
/// the transport increments `u dt + Σ_i ξ_i ΔW^i` built from the velocities
/// at the start and end of the step, with the same `ΔW`.
pub fn advance_tracers(
    cloud: &TracerCloud,
    now: &dyn VelocitySource,
    next: &dyn VelocitySource,
) -> Result<TracerCloud> {
    let mut out = cloud.clone();
    for ((x, f), (xo, fo)) in cloud
        .positions
        .iter()
        .zip(&cloud.gradients)
        .zip(out.positions.iter_mut().zip(out.gradients.iter_mut()))
    {
        let v1 = now.value(*x);
        let g1 = matmul(&now.jacobian(*x), f);
        let xp = add2(*x, v1);
        let fp = mat_add_scaled(f, 1.0, &g1);
        let v2 = next.value(xp);
        let g2 = matmul(&next.jacobian(xp), &fp);
        *xo = add2(*x, scale2(0.5, add2(v1, v2)));
        *fo = mat_add_scaled(&mat_add_scaled(f, 0.5, &g1), 0.5, &g2);
        if !(xo[0].is_finite() && xo[1].is_finite()) {
            return Err(invalid("tracers", format!("tracer left the domain at {x:?}")));
        }
    }
    Ok(out)
}

/// `F w(X)` at each tracer, i.e. the push-forward of `w` to the current
/// positions.
pub(crate) fn pushed_forward(cloud: &TracerCloud, w: &dyn VelocitySource) -> Vec<Point> {
    cloud
        .labels
        .iter()
        .zip(&cloud.gradients)
        .map(|(x0, f)| matvec(f, w.value(*x0)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_velocity_is_identity() {
        let c = TracerCloud::new(vec![[0.5, 1.0], [2.0, -1.0]]).unwrap();
        let z = PlaneField::Constant([0.0, 0.0]);
        let d = advance_tracers(&c, &z, &z).unwrap();
        assert_eq!(d, c);
    }

    #[test]
    fn constant_increment_translates() {
        let c = TracerCloud::new(vec![[0.5, 1.0], [2.0, -1.0]]).unwrap();
        let v = PlaneField::Constant([0.3, -0.1]);
        let d = advance_tracers(&c, &v, &v).unwrap();
        for (a, b) in d.positions().iter().zip(c.positions()) {
            assert!((a[0] - b[0] - 0.3).abs() < 1e-15 && (a[1] - b[1] + 0.1).abs() < 1e-15);
        }
        assert_eq!(d.gradients()[0], IDENTITY);
    }

    #[test]
    fn linear_shear_gradient() {
        // v = (s y, 0): F = [[1, s t], [0, 1]] exactly under Heun
        let s = 0.2;
        struct Shear(f64);
        impl VelocitySource for Shear {
            fn value(&self, x: Point) -> Point {
                [self.0 * x[1], 0.0]
            }
            fn jacobian(&self, _: Point) -> Mat2 {
                [[0.0, self.0], [0.0, 0.0]]
            }
        }
        let mut c = TracerCloud::new(vec![[0.0, 1.0]]).unwrap();
        for _ in 0..10 {
            c = advance_tracers(&c, &Shear(s * 0.1), &Shear(s * 0.1)).unwrap();
        }
        assert!((c.gradients()[0][0][1] - s).abs() < 1e-14);
        assert!((c.positions()[0][0] - s).abs() < 1e-14);
    }
}
