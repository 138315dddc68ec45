//! Grid-sampled scalar and vector-valued fields.

use crate::algebra::grid::Grid;
use crate::error::{Error, Result};
use crate::linear::{Linear, Point};

/// Scalar samples on a grid: images `n`, their tangents `ν`, and scalar
/// densities `σ` all use this type.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        grid.check_len("scalar field", values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(Point) -> f64) -> Self {
        Self {
            values: grid.sample(f),
            grid: grid.clone(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Quadrature pairing `Σ a b Δx^d`.
    pub fn integrate_product(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn gradient(&self) -> Vec<Vec<f64>> {
        self.grid.gradient(&self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn same_grid(&self, other: &Grid, what: &str) -> Result<()> {
        if &self.grid != other {
            return Err(Error::DomainMismatch(format!("{what} lives on a different grid")));
        }
        Ok(())
    }
}

impl Linear for ScalarField {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.values.axpy(a, &x.values);
    }

    fn scale(&mut self, a: f64) {
        self.values.scale(a);
    }

    fn coord_dot(&self, other: &Self) -> f64 {
        self.values.coord_dot(&other.values)
    }

    fn is_finite(&self) -> bool {
        self.values.is_finite()
    }
}

/// `d` component arrays on a grid. Used for velocity fields and for
/// covector-density momenta (`m · dx ⊗ dV`) alike; the algebra-level enums say
/// which one a value is.
#[derive(Debug, Clone, PartialEq)]
pub struct GridVectorField {
    grid: Grid,
    components: Vec<Vec<f64>>,
}

impl GridVectorField {
    pub fn new(grid: Grid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(Error::DomainMismatch(format!(
                "{} components for a {}D grid",
                components.len(),
                grid.dim()
            )));
        }
        for c in &components {
            grid.check_len("vector component", c.len())?;
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            components: vec![vec![0.0; grid.len()]; grid.dim()],
            grid: grid.clone(),
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(Point) -> Point) -> Self {
        let mut components = vec![vec![0.0; grid.len()]; grid.dim()];
        for (idx, x) in grid.nodes().enumerate() {
            let v = f(x);
            for (a, c) in components.iter_mut().enumerate() {
                c[idx] = v[a];
            }
        }
        Self {
            grid: grid.clone(),
            components,
        }
    }

    /// Constant field; only the first `dim` entries of `v` are used.
    pub fn constant(grid: &Grid, v: Point) -> Self {
        Self::from_fn(grid, |_| v)
    }

    pub(crate) fn from_components(grid: &Grid, components: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(components.len(), grid.dim());
        Self {
            grid: grid.clone(),
            components,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn at(&self, idx: usize) -> Point {
        let mut p = [0.0; 2];
        for (a, c) in self.components.iter().enumerate() {
            p[a] = c[idx];
        }
        p
    }

    /// Quadrature pairing `Σ_x a(x)·b(x) Δx^d`.
    pub fn integrate_dot(&self, other: &GridVectorField) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Jacobian entries `∂_j v_i` as `jac[i][j]`.
    pub fn jacobian(&self) -> Vec<Vec<Vec<f64>>> {
        self.components
            .iter()
            .map(|c| self.grid.gradient(c))
            .collect()
    }

    pub(crate) fn same_grid(&self, other: &Grid, what: &str) -> Result<()> {
        if &self.grid != other {
            return Err(Error::DomainMismatch(format!("{what} lives on a different grid")));
        }
        Ok(())
    }
}

impl Linear for GridVectorField {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.components.iter_mut().zip(&x.components) {
            s.axpy(a, v);
        }
    }

    fn scale(&mut self, a: f64) {
        self.components.iter_mut().for_each(|c| c.scale(a));
    }

    fn coord_dot(&self, other: &Self) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.coord_dot(b))
            .sum()
    }

    fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }
}
