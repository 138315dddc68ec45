//! Noise bases `ξ_i` and the stochastic transport velocity.

use std::f64::consts::PI;

use crate::algebra::fields::GridVectorField;
use crate::algebra::grid::Grid;
use crate::algebra::kernel::PlaneField;
use crate::algebra::VectorField;
use crate::error::{invalid, Error, Result};
use crate::linear::{Linear, Point};

/// One Gaussian-bump mode `a exp(-|x - z|²/(2λ²)) e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpMode {
    pub center: Point,
    pub direction: Point,
    pub amplitude: f64,
    pub scale: f64,
}

impl BumpMode {
    pub fn field(&self) -> PlaneField {
        PlaneField::Bump {
            center: self.center,
            amplitude: self.amplitude,
            scale: self.scale,
            direction: self.direction,
        }
    }
}

/// Time-independent fields `ξ_1, …, ξ_J`, amplitudes included.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseBasis {
    Grid(Vec<GridVectorField>),
    Plane(Vec<PlaneField>),
}

impl NoiseBasis {
    pub fn len(&self) -> usize {
        match self {
            NoiseBasis::Grid(v) => v.len(),
            NoiseBasis::Plane(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lowest Fourier vector modes. In 1D mode `i` is `cos` (even `i`) or
    /// `sin` (odd `i`) of wavenumber `i/2 + 1` along `e₁`. In 2D modes cycle
    /// through the shear fields `cos(k y) e₁`, `sin(k y) e₁`, `cos(k x) e₂`,
    /// `sin(k x) e₂` with `k = i/4 + 1`, all divergence free.
    ///
    /// `amplitudes` has one entry per mode, or a single entry used for all.
    pub fn fourier(grid: &Grid, count: usize, amplitudes: &[f64]) -> Result<Self> {
        let amp = broadcast(count, amplitudes)?;
        let base = 2.0 * PI / grid.length();
        let modes = (0..count)
            .map(|i| {
                let a = amp[i];
                if grid.dim() == 1 {
                    let k = (i / 2 + 1) as f64 * base;
                    let odd = i % 2 == 1;
                    GridVectorField::from_fn(grid, |x| {
                        let phase = k * x[0];
                        [a * if odd { phase.sin() } else { phase.cos() }, 0.0]
                    })
                } else {
                    let k = (i / 4 + 1) as f64 * base;
                    let r = i % 4;
                    GridVectorField::from_fn(grid, |x| {
                        let phase = if r < 2 { k * x[1] } else { k * x[0] };
                        let s = a * if r % 2 == 1 { phase.sin() } else { phase.cos() };
                        if r < 2 {
                            [s, 0.0]
                        } else {
                            [0.0, s]
                        }
                    })
                }
            })
            .collect();
        Ok(NoiseBasis::Grid(modes))
    }

    pub fn bumps(modes: &[BumpMode]) -> Result<Self> {
        for m in modes {
            if !(m.scale.is_finite() && m.scale > 0.0) {
                return Err(invalid("noise.scale", format!("must be > 0, got {}", m.scale)));
            }
            if !(m.amplitude.is_finite() && m.center.iter().chain(&m.direction).all(|v| v.is_finite())) {
                return Err(invalid("noise", "non-finite bump parameters"));
            }
        }
        Ok(NoiseBasis::Plane(modes.iter().map(BumpMode::field).collect()))
    }

    /// Spatially constant modes `ξ_i = v_i`.
    pub fn constant(vectors: &[Point]) -> Self {
        NoiseBasis::Plane(vectors.iter().map(|v| PlaneField::Constant(*v)).collect())
    }

    /// Default landmark basis: `count` unit-scale bumps at the origin with
    /// amplitude `amplitude`, alternating between `e₁` and `e₂`.
    pub fn default_bumps(count: usize, amplitude: f64, dim: usize) -> Result<Self> {
        let modes: Vec<BumpMode> = (0..count)
            .map(|i| BumpMode {
                center: [0.0, 0.0],
                direction: if dim == 2 && i % 2 == 1 { [0.0, 1.0] } else { [1.0, 0.0] },
                amplitude,
                scale: 1.0,
            })
            .collect();
        Self::bumps(&modes)
    }

    pub fn grid_fields(&self) -> Result<&[GridVectorField]> {
        match self {
            NoiseBasis::Grid(v) => Ok(v),
            NoiseBasis::Plane(_) => Err(Error::Representation("grid noise expected".into())),
        }
    }

    pub fn plane_fields(&self) -> Result<&[PlaneField]> {
        match self {
            NoiseBasis::Plane(v) => Ok(v),
            NoiseBasis::Grid(_) => Err(Error::Representation("plane noise expected".into())),
        }
    }
}

fn broadcast(count: usize, amplitudes: &[f64]) -> Result<Vec<f64>> {
    let amp = match amplitudes.len() {
        1 => vec![amplitudes[0]; count],
        n if n == count => amplitudes.to_vec(),
        n => {
            return Err(invalid(
                "noise.amplitudes",
                format!("expected 1 or {count} amplitudes, got {n}"),
            ))
        }
    };
    if amp.iter().any(|a| !a.is_finite()) {
        return Err(invalid("noise.amplitudes", "non-finite amplitude"));
    }
    Ok(amp)
}

/// `ũ = u dt + Σ_i ξ_i ΔW^i`.
pub fn transport_velocity_increment(
    u: &VectorField,
    noise: &NoiseBasis,
    dt: f64,
    dw: &[f64],
) -> Result<VectorField> {
    if dw.len() != noise.len() {
        return Err(Error::NoiseCount {
            expected: noise.len(),
            got: dw.len(),
        });
    }
    match (u, noise) {
        (VectorField::Grid(u), NoiseBasis::Grid(xi)) => {
            let mut out = u.clone();
            out.scale(dt);
            for (x, w) in xi.iter().zip(dw) {
                x.same_grid(u.grid(), "noise field")?;
                out.axpy(*w, x);
            }
            Ok(VectorField::Grid(out))
        }
        (VectorField::Plane(u), NoiseBasis::Plane(xi)) => {
            let mut parts = vec![u.scaled_by(dt)];
            parts.extend(xi.iter().zip(dw).map(|(x, w)| x.scaled_by(*w)));
            Ok(VectorField::Plane(PlaneField::Sum(parts)))
        }
        _ => Err(Error::Representation(
            "velocity and noise basis live on different domains".into(),
        )),
    }
}
