//! Coordinate-level vector-space operations shared by every state type.
//!
//! Time steppers only ever need `x += a * y`, scaling, and a Euclidean
//! coordinate norm, so states expose exactly that and nothing more.

/// A point in the plane. One-dimensional landmark runs use the first
/// component and keep the second at zero.
pub type Point = [f64; 2];

/// Vector-space operations on the raw coordinates of a state.
pub trait Linear: Clone {
    /// `self += a * x`.
    fn axpy(&mut self, a: f64, x: &Self);

    fn scale(&mut self, a: f64);

    /// Euclidean inner product of the raw coordinates.
    fn coord_dot(&self, other: &Self) -> f64;

    fn is_finite(&self) -> bool;

    /// A zero element with the same shape as `self`.
    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.scale(0.0);
        z
    }

    fn coord_norm(&self) -> f64 {
        self.coord_dot(self).sqrt()
    }
}

impl Linear for Vec<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.len(), x.len());
        for (s, v) in self.iter_mut().zip(x) {
            *s += a * v;
        }
    }

    fn scale(&mut self, a: f64) {
        self.iter_mut().for_each(|s| *s *= a);
    }

    fn coord_dot(&self, other: &Self) -> f64 {
        self.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    fn zeros_like(&self) -> Self {
        vec![0.0; self.len()]
    }
}

impl Linear for Vec<Point> {
    fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.len(), x.len());
        for (s, v) in self.iter_mut().zip(x) {
            s[0] += a * v[0];
            s[1] += a * v[1];
        }
    }

    fn scale(&mut self, a: f64) {
        for s in self.iter_mut() {
            s[0] *= a;
            s[1] *= a;
        }
    }

    fn coord_dot(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other)
            .map(|(a, b)| a[0] * b[0] + a[1] * b[1])
            .sum()
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|p| p[0].is_finite() && p[1].is_finite())
    }

    fn zeros_like(&self) -> Self {
        vec![[0.0; 2]; self.len()]
    }
}

pub(crate) fn dot2(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn add2(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

pub(crate) fn sub2(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn scale2(a: f64, p: Point) -> Point {
    [a * p[0], a * p[1]]
}

/// `m · v` for a 2×2 matrix stored row-major (`m[i][j]`).
pub(crate) fn matvec(m: &[[f64; 2]; 2], v: Point) -> Point {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// `mᵀ · v`.
pub(crate) fn matvec_t(m: &[[f64; 2]; 2], v: Point) -> Point {
    [
        m[0][0] * v[0] + m[1][0] * v[1],
        m[0][1] * v[0] + m[1][1] * v[1],
    ]
}

pub(crate) fn matmul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}
