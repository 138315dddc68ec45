//! Uniform periodic grids and their Fourier-spectral calculus.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::linear::Point;

struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Angular wavenumber of each FFT bin; the Nyquist bin carries `-n/2`.
    wavenumbers: Vec<f64>,
    /// Wavenumbers used for first derivatives: the Nyquist bin is zeroed so the
    /// discrete derivative stays real and exactly antisymmetric.
    derivative_wavenumbers: Vec<f64>,
}

/// A periodic box `[0, L)^d` sampled on `n` points per axis, `d ∈ {1, 2}`.
///
/// Samples are stored row-major: node `(i, j)` lives at `i * n + j` and sits at
/// `x = (i Δx, j Δx)`.
#[derive(Clone)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
    spectral: Arc<Spectral>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.length == other.length
    }
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidDomain(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n < 8 {
            return Err(Error::InvalidDomain(format!(
                "points per axis must be at least 8, got {n}"
            )));
        }
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidDomain(format!(
                "points per axis must be even, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(invalid("length", format!("must be positive and finite, got {length}")));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let base = 2.0 * PI / length;
        let wavenumbers: Vec<f64> = (0..n)
            .map(|m| {
                let signed = if m < n / 2 { m as i64 } else { m as i64 - n as i64 };
                base * signed as f64
            })
            .collect();
        let mut derivative_wavenumbers = wavenumbers.clone();
        derivative_wavenumbers[n / 2] = 0.0;
        Ok(Self {
            dim,
            n,
            length,
            spectral: Arc::new(Spectral {
                forward,
                inverse,
                wavenumbers,
                derivative_wavenumbers,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight `Δx^d` of one node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of nodes, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, idx: usize) -> Point {
        let h = self.spacing();
        if self.dim == 1 {
            [idx as f64 * h, 0.0]
        } else {
            [(idx / self.n) as f64 * h, (idx % self.n) as f64 * h]
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.nodes().map(f).collect()
    }

    /// Wraps a position into the fundamental cell along the grid axes.
    pub fn wrap(&self, x: Point) -> Point {
        let mut out = x;
        for c in out.iter_mut().take(self.dim) {
            *c = c.rem_euclid(self.length);
        }
        out
    }

    fn wavevector_with(&self, idx: usize, table: &[f64]) -> Point {
        if self.dim == 1 {
            [table[idx], 0.0]
        } else {
            [table[idx / self.n], table[idx % self.n]]
        }
    }

    /// Angular wavevector of spectral bin `idx` (Nyquist bins carry `-n/2`).
    pub fn wavevector(&self, idx: usize) -> Point {
        self.wavevector_with(idx, &self.spectral.wavenumbers)
    }

    fn derivative_wavevector(&self, idx: usize) -> Point {
        self.wavevector_with(idx, &self.spectral.derivative_wavenumbers)
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        if self.dim == 1 {
            fft.process(data);
            return;
        }
        for row in data.chunks_exact_mut(n) {
            fft.process(row);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                column[i] = data[i * n + j];
            }
            fft.process(&mut column);
            for i in 0..n {
                data[i * n + j] = column[i];
            }
        }
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.len());
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.spectral.forward);
        buf
    }

    /// Inverse DFT (normalized), keeping the real part.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, &self.spectral.inverse);
        let scale = 1.0 / self.len() as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// Spectral derivative along `axis`.
    pub fn derivative(&self, values: &[f64], axis: usize) -> Vec<f64> {
        assert!(axis < self.dim, "axis {axis} out of range for a {}D grid", self.dim);
        let mut spec = self.forward(values);
        for (idx, c) in spec.iter_mut().enumerate() {
            let k = self.derivative_wavevector(idx)[axis];
            *c *= Complex64::new(0.0, k);
        }
        self.inverse(spec)
    }

    pub fn gradient(&self, values: &[f64]) -> Vec<Vec<f64>> {
        (0..self.dim).map(|a| self.derivative(values, a)).collect()
    }

    /// Multiplies every Fourier bin by a real symbol of the wavevector.
    pub fn apply_symbol(&self, values: &[f64], symbol: impl Fn(Point) -> f64) -> Vec<f64> {
        let mut spec = self.forward(values);
        for (idx, c) in spec.iter_mut().enumerate() {
            *c *= symbol(self.wavevector(idx));
        }
        self.inverse(spec)
    }

    /// Band-limited trigonometric interpolant of grid samples.
    pub fn interpolant(&self, values: &[f64]) -> TrigInterpolant {
        let scale = 1.0 / self.len() as f64;
        let modes = self
            .forward(values)
            .into_iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(idx, c)| (self.wavevector(idx), self.derivative_wavevector(idx), c * scale))
            .collect();
        TrigInterpolant { modes }
    }

    pub(crate) fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::DomainMismatch(format!(
                "{what} has {len} samples, grid has {}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Evaluates a grid function and its gradient at arbitrary points through its
/// Fourier series.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    modes: Vec<(Point, Point, Complex64)>,
}

impl TrigInterpolant {
    pub fn value(&self, x: Point) -> f64 {
        self.modes
            .iter()
            .map(|(k, _, c)| {
                let phase = k[0] * x[0] + k[1] * x[1];
                (c * Complex64::new(phase.cos(), phase.sin())).re
            })
            .sum()
    }

    pub fn gradient(&self, x: Point) -> Point {
        let mut g = [0.0; 2];
        for (k, kd, c) in &self.modes {
            let phase = k[0] * x[0] + k[1] * x[1];
            let e = c * Complex64::new(phase.cos(), phase.sin());
            // d/dx Re(c e^{ikx}) = Re(i k c e^{ikx}) = -k Im(c e^{ikx})
            g[0] -= kd[0] * e.im;
            g[1] -= kd[1] * e.im;
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(3, 16, 1.0).is_err());
        assert!(Grid::new(1, 4, 1.0).is_err());
        assert!(Grid::new(1, 15, 1.0).is_err());
        assert!(Grid::new(1, 16, 0.0).is_err());
    }

    #[test]
    fn derivative_of_sine_is_cosine() {
        let g = Grid::new(1, 32, 2.0 * PI).unwrap();
        let f = g.sample(|x| (3.0 * x[0]).sin());
        let df = g.derivative(&f, 0);
        let exact = g.sample(|x| 3.0 * (3.0 * x[0]).cos());
        assert!(max_abs_diff(&df, &exact) < 1e-12);
    }

    #[test]
    fn two_d_partials() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let f = g.sample(|x| (x[0]).sin() * (2.0 * x[1]).cos());
        let fx = g.derivative(&f, 0);
        let fy = g.derivative(&f, 1);
        let ex = g.sample(|x| x[0].cos() * (2.0 * x[1]).cos());
        let ey = g.sample(|x| -2.0 * x[0].sin() * (2.0 * x[1]).sin());
        assert!(max_abs_diff(&fx, &ex) < 1e-12);
        assert!(max_abs_diff(&fy, &ey) < 1e-12);
    }

    #[test]
    fn derivative_is_antisymmetric_under_the_sum_pairing() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        // Rough data with Nyquist content.
        let a: Vec<f64> = (0..16).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
        let b: Vec<f64> = (0..16).map(|i| ((i * 3 % 7) as f64) * 0.5).collect();
        let da = g.derivative(&a, 0);
        let db = g.derivative(&b, 0);
        let lhs: f64 = a.iter().zip(&db).map(|(x, y)| x * y).sum();
        let rhs: f64 = da.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((lhs + rhs).abs() < 1e-12);
    }

    #[test]
    fn interpolant_reproduces_band_limited_function() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let f = |x: Point| (x[0] + 0.3).sin() + 0.5 * (2.0 * x[1]).cos() * x[0].cos();
        let interp = g.interpolant(&g.sample(f));
        let x = [1.234, 5.678];
        assert!((interp.value(x) - f(x)).abs() < 1e-12);
        let grad = interp.gradient(x);
        let ex = (x[0] + 0.3).cos() - 0.5 * (2.0 * x[1]).cos() * x[0].sin();
        let ey = -(2.0 * x[1]).sin() * x[0].cos();
        assert!((grad[0] - ex).abs() < 1e-12);
        assert!((grad[1] - ey).abs() < 1e-12);
    }

    #[test]
    fn wrap_maps_into_cell() {
        let g = Grid::new(1, 8, 2.0).unwrap();
        let w = g.wrap([-0.5, 7.0]);
        assert!((w[0] - 1.5).abs() < 1e-15);
        assert_eq!(w[1], 7.0);
    }
}
