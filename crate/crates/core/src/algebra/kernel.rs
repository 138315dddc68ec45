//! Reproducing kernels, closed-form plane vector fields and distributional
//! point momenta for landmark data, plus the Helmholtz-type inertia operator
//! used on grids.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::linear::{add2, dot2, scale2, sub2, Linear, Point};

/// Gaussian kernel `K(r) = c exp(-|r|² / (2λ²))`, acting as `K · Id`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    length_scale: f64,
    amplitude: f64,
}

impl Default for Kernel {
    fn default() -> Self {
        Self {
            length_scale: 1.0,
            amplitude: 1.0,
        }
    }
}

impl Kernel {
    pub fn gaussian(length_scale: f64, amplitude: f64) -> Result<Self> {
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(invalid("length_scale", format!("must be > 0, got {length_scale}")));
        }
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(invalid("amplitude", format!("must be > 0, got {amplitude}")));
        }
        Ok(Self {
            length_scale,
            amplitude,
        })
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn value(&self, r: Point) -> f64 {
        let l2 = self.length_scale * self.length_scale;
        self.amplitude * (-dot2(r, r) / (2.0 * l2)).exp()
    }

    /// `∇K(r)`.
    pub fn gradient(&self, r: Point) -> Point {
        let k = self.value(r);
        let l2 = self.length_scale * self.length_scale;
        [-r[0] / l2 * k, -r[1] / l2 * k]
    }

    /// `∂_j ∂_l K(r)` as `h[j][l]`.
    pub fn hessian(&self, r: Point) -> [[f64; 2]; 2] {
        let k = self.value(r);
        let l2 = self.length_scale * self.length_scale;
        let mut h = [[0.0; 2]; 2];
        for j in 0..2 {
            for l in 0..2 {
                let delta = if j == l { 1.0 } else { 0.0 };
                h[j][l] = (r[j] * r[l] / (l2 * l2) - delta / l2) * k;
            }
        }
        h
    }
}

/// `u(x) = Σ_a K(x - c_a) w_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelField {
    pub kernel: Kernel,
    pub centers: Vec<Point>,
    pub weights: Vec<Point>,
}

impl KernelField {
    pub fn new(kernel: Kernel, centers: Vec<Point>, weights: Vec<Point>) -> Self {
        assert_eq!(centers.len(), weights.len(), "one weight per center");
        Self {
            kernel,
            centers,
            weights,
        }
    }

    pub fn value(&self, x: Point) -> Point {
        let mut u = [0.0; 2];
        for (c, w) in self.centers.iter().zip(&self.weights) {
            let k = self.kernel.value(sub2(x, *c));
            u[0] += k * w[0];
            u[1] += k * w[1];
        }
        u
    }

    pub fn jacobian(&self, x: Point) -> [[f64; 2]; 2] {
        let mut jac = [[0.0; 2]; 2];
        for (c, w) in self.centers.iter().zip(&self.weights) {
            let g = self.kernel.gradient(sub2(x, *c));
            for i in 0..2 {
                for j in 0..2 {
                    jac[i][j] += w[i] * g[j];
                }
            }
        }
        jac
    }

    pub fn hessian(&self, x: Point) -> [[[f64; 2]; 2]; 2] {
        let mut out = [[[0.0; 2]; 2]; 2];
        for (c, w) in self.centers.iter().zip(&self.weights) {
            let h = self.kernel.hessian(sub2(x, *c));
            for (i, oi) in out.iter_mut().enumerate() {
                for j in 0..2 {
                    for l in 0..2 {
                        oi[j][l] += w[i] * h[j][l];
                    }
                }
            }
        }
        out
    }
}

/// Smooth vector fields on the plane with closed-form first and second
/// derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum PlaneField {
    Constant(Point),
    /// `amplitude · exp(-|x - center|² / (2 scale²)) · direction`.
    Bump {
        center: Point,
        amplitude: f64,
        scale: f64,
        direction: Point,
    },
    Kernel(KernelField),
    Sum(Vec<PlaneField>),
}

impl PlaneField {
    fn bump_kernel(amplitude: f64, scale: f64) -> Kernel {
        // Not validated: a zero amplitude is a legitimate (silent) mode.
        Kernel {
            length_scale: scale,
            amplitude,
        }
    }

    pub fn value(&self, x: Point) -> Point {
        match self {
            PlaneField::Constant(v) => *v,
            PlaneField::Bump {
                center,
                amplitude,
                scale,
                direction,
            } => scale2(
                Self::bump_kernel(*amplitude, *scale).value(sub2(x, *center)),
                *direction,
            ),
            PlaneField::Kernel(k) => k.value(x),
            PlaneField::Sum(parts) => parts.iter().fold([0.0; 2], |acc, p| add2(acc, p.value(x))),
        }
    }

    /// `jac[i][j] = ∂_j v_i`.
    pub fn jacobian(&self, x: Point) -> [[f64; 2]; 2] {
        match self {
            PlaneField::Constant(_) => [[0.0; 2]; 2],
            PlaneField::Bump {
                center,
                amplitude,
                scale,
                direction,
            } => {
                let g = Self::bump_kernel(*amplitude, *scale).gradient(sub2(x, *center));
                let mut jac = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        jac[i][j] = direction[i] * g[j];
                    }
                }
                jac
            }
            PlaneField::Kernel(k) => k.jacobian(x),
            PlaneField::Sum(parts) => {
                let mut jac = [[0.0; 2]; 2];
                for p in parts {
                    let pj = p.jacobian(x);
                    for i in 0..2 {
                        for j in 0..2 {
                            jac[i][j] += pj[i][j];
                        }
                    }
                }
                jac
            }
        }
    }

    /// `hess[i][j][l] = ∂_j ∂_l v_i`.
    pub fn hessian(&self, x: Point) -> [[[f64; 2]; 2]; 2] {
        match self {
            PlaneField::Constant(_) => [[[0.0; 2]; 2]; 2],
            PlaneField::Bump {
                center,
                amplitude,
                scale,
                direction,
            } => {
                let h = Self::bump_kernel(*amplitude, *scale).hessian(sub2(x, *center));
                let mut out = [[[0.0; 2]; 2]; 2];
                for (i, oi) in out.iter_mut().enumerate() {
                    for j in 0..2 {
                        for l in 0..2 {
                            oi[j][l] = direction[i] * h[j][l];
                        }
                    }
                }
                out
            }
            PlaneField::Kernel(k) => k.hessian(x),
            PlaneField::Sum(parts) => {
                let mut out = [[[0.0; 2]; 2]; 2];
                for p in parts {
                    let ph = p.hessian(x);
                    for i in 0..2 {
                        for j in 0..2 {
                            for l in 0..2 {
                                out[i][j][l] += ph[i][j][l];
                            }
                        }
                    }
                }
                out
            }
        }
    }
}

impl PlaneField {
    /// `s · self`, kept in closed form.
    pub fn scaled_by(&self, s: f64) -> PlaneField {
        match self {
            PlaneField::Constant(v) => PlaneField::Constant([s * v[0], s * v[1]]),
            PlaneField::Bump {
                center,
                amplitude,
                scale,
                direction,
            } => PlaneField::Bump {
                center: *center,
                amplitude: s * amplitude,
                scale: *scale,
                direction: *direction,
            },
            PlaneField::Kernel(k) => {
                let mut k = k.clone();
                k.weights.iter_mut().for_each(|w| *w = [s * w[0], s * w[1]]);
                PlaneField::Kernel(k)
            }
            PlaneField::Sum(parts) => PlaneField::Sum(parts.iter().map(|p| p.scaled_by(s)).collect()),
        }
    }
}

/// Distributional 1-form density `Σ_a p_a δ(x - q_a)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointMomenta {
    pub positions: Vec<Point>,
    pub weights: Vec<Point>,
}

impl PointMomenta {
    pub fn new(positions: Vec<Point>, weights: Vec<Point>) -> Self {
        assert_eq!(positions.len(), weights.len(), "one weight per position");
        Self { positions, weights }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn push(&mut self, position: Point, weight: Point) {
        self.positions.push(position);
        self.weights.push(weight);
    }

    /// `Σ_a p_a · u(q_a)`.
    pub fn pair_with(&self, u: impl Fn(Point) -> Point) -> f64 {
        self.positions
            .iter()
            .zip(&self.weights)
            .map(|(q, p)| dot2(*p, u(*q)))
            .sum()
    }

    /// Disjoint union of two clouds (as distributions, their sum).
    pub fn concat(&self, other: &PointMomenta) -> PointMomenta {
        let mut out = self.clone();
        out.positions.extend_from_slice(&other.positions);
        out.weights.extend_from_slice(&other.weights);
        out
    }

    /// The velocity `K * m`.
    pub fn velocity(&self, kernel: Kernel) -> KernelField {
        KernelField::new(kernel, self.positions.clone(), self.weights.clone())
    }

    /// Squared dual norm `⟨m, K m⟩ = Σ_ab p_a · K(q_a - q_b) p_b`.
    pub fn kernel_energy(&self, kernel: Kernel) -> f64 {
        let mut total = 0.0;
        for (qa, pa) in self.positions.iter().zip(&self.weights) {
            for (qb, pb) in self.positions.iter().zip(&self.weights) {
                total += kernel.value(sub2(*qa, *qb)) * dot2(*pa, *pb);
            }
        }
        total
    }

    pub fn dual_norm(&self, kernel: Kernel) -> f64 {
        self.kernel_energy(kernel).max(0.0).sqrt()
    }
}

impl Linear for PointMomenta {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.positions.axpy(a, &x.positions);
        self.weights.axpy(a, &x.weights);
    }

    fn scale(&mut self, a: f64) {
        self.positions.scale(a);
        self.weights.scale(a);
    }

    fn coord_dot(&self, other: &Self) -> f64 {
        self.positions.coord_dot(&other.positions) + self.weights.coord_dot(&other.weights)
    }

    fn is_finite(&self) -> bool {
        self.positions.is_finite() && self.weights.is_finite()
    }
}

/// Block kernel matrix with `K(q_a - q_b) · I_d` in block `(a, b)`.
pub fn kernel_matrix(q: &[Point], kernel: Kernel, dim: usize) -> DMatrix<f64> {
    let k = q.len();
    DMatrix::from_fn(k * dim, k * dim, |r, c| {
        let (a, i) = (r / dim, r % dim);
        let (b, j) = (c / dim, c % dim);
        if i == j {
            kernel.value(sub2(q[a], q[b]))
        } else {
            0.0
        }
    })
}

/// `L = (1 + α²|k|²)^s`, applied per Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaOperator {
    alpha: f64,
    power: u32,
}

impl Default for InertiaOperator {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            power: 1,
        }
    }
}

impl InertiaOperator {
    pub fn helmholtz_power(alpha: f64, power: u32) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(invalid("alpha", format!("must be >= 0, got {alpha}")));
        }
        if !(power == 1 || power == 2) {
            return Err(invalid("power", format!("must be 1 or 2, got {power}")));
        }
        Ok(Self { alpha, power })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn symbol(&self, k: Point) -> f64 {
        (1.0 + self.alpha * self.alpha * dot2(k, k)).powi(self.power as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_basics() {
        let k = Kernel::gaussian(0.7, 2.0).unwrap();
        assert_eq!(k.value([0.0, 0.0]), 2.0);
        assert_eq!(k.gradient([0.0, 0.0]), [0.0, 0.0]);
        assert_eq!(k.value([0.3, -0.2]), k.value([-0.3, 0.2]));
        assert!(Kernel::gaussian(0.0, 1.0).is_err());
        assert!(Kernel::gaussian(1.0, -1.0).is_err());
    }

    #[test]
    fn kernel_derivatives_match_finite_differences() {
        let k = Kernel::gaussian(0.8, 1.3).unwrap();
        let r = [0.4, -0.7];
        let h = 1e-6;
        let g = k.gradient(r);
        let hess = k.hessian(r);
        for j in 0..2 {
            let mut rp = r;
            let mut rm = r;
            rp[j] += h;
            rm[j] -= h;
            let fd = (k.value(rp) - k.value(rm)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-8);
            let gp = k.gradient(rp);
            let gm = k.gradient(rm);
            for l in 0..2 {
                let fd2 = (gp[l] - gm[l]) / (2.0 * h);
                assert!((fd2 - hess[l][j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn plane_field_derivatives_match_finite_differences() {
        let field = PlaneField::Sum(vec![
            PlaneField::Constant([0.2, -0.1]),
            PlaneField::Bump {
                center: [0.3, 0.1],
                amplitude: 0.8,
                scale: 0.6,
                direction: [0.6, 0.8],
            },
            PlaneField::Kernel(KernelField::new(
                Kernel::default(),
                vec![[0.0, 0.0], [1.0, -0.5]],
                vec![[1.0, 0.5], [-0.3, 0.2]],
            )),
        ]);
        let x = [0.25, -0.4];
        let h = 1e-6;
        let jac = field.jacobian(x);
        let hess = field.hessian(x);
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let vp = field.value(xp);
            let vm = field.value(xm);
            let jp = field.jacobian(xp);
            let jm = field.jacobian(xm);
            for i in 0..2 {
                assert!(((vp[i] - vm[i]) / (2.0 * h) - jac[i][j]).abs() < 1e-8);
                for l in 0..2 {
                    let fd = (jp[i][l] - jm[i][l]) / (2.0 * h);
                    assert!((fd - hess[i][l][j]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn kernel_matrix_single_landmark() {
        let k = Kernel::gaussian(1.0, 3.0).unwrap();
        let m = kernel_matrix(&[[0.5, 0.5]], k, 2);
        assert_eq!(m.nrows(), 2);
        assert_eq!(m[(0, 0)], 3.0);
        assert_eq!(m[(1, 1)], 3.0);
        assert_eq!(m[(0, 1)], 0.0);
    }

    #[test]
    fn kernel_matrix_coincident_landmarks() {
        let k = Kernel::default();
        let m = kernel_matrix(&[[0.2, 0.1], [0.2, 0.1]], k, 2);
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(m[(2 * a, 2 * b)], 1.0);
                assert_eq!(m[(2 * a + 1, 2 * b + 1)], 1.0);
                assert_eq!(m[(2 * a, 2 * b + 1)], 0.0);
            }
        }
    }

    #[test]
    fn inertia_validation_and_symbol() {
        assert!(InertiaOperator::helmholtz_power(-1.0, 1).is_err());
        assert!(InertiaOperator::helmholtz_power(1.0, 3).is_err());
        let l = InertiaOperator::helmholtz_power(0.5, 2).unwrap();
        assert!((l.symbol([2.0, 0.0]) - 4.0).abs() < 1e-15);
    }
}
