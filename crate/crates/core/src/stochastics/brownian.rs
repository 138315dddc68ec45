//! Reproducible Brownian increments.
//!
//! Each trajectory owns a ChaCha8 stream selected by `(master_seed, index)`,
//! so a path never depends on how many other paths were drawn before it or on
//! which thread drew it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BrownianDriver {
    master_seed: u64,
    index: u64,
}

impl BrownianDriver {
    pub fn new(master_seed: u64, index: u64) -> Self {
        Self { master_seed, index }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Draws `steps` increments for each of `modes` independent Brownian
    /// motions, `ΔW ~ N(0, dt)`.
    pub fn path(&self, modes: usize, steps: usize, dt: f64) -> Result<BrownianPath> {
        check_dt(dt)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.index);
        let sd = dt.sqrt();
        let increments = (0..modes * steps)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * sd
            })
            .collect();
        Ok(BrownianPath {
            dt,
            modes,
            increments,
        })
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid("dt", format!("must be > 0, got {dt}")));
    }
    Ok(())
}

/// Increments `ΔW^i_k`, stored step-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    dt: f64,
    modes: usize,
    increments: Vec<f64>,
}

impl BrownianPath {
    pub fn zeros(modes: usize, steps: usize, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        Ok(Self {
            dt,
            modes,
            increments: vec![0.0; modes * steps],
        })
    }

    pub fn from_increments(modes: usize, dt: f64, increments: Vec<f64>) -> Result<Self> {
        check_dt(dt)?;
        if modes == 0 && !increments.is_empty() || modes > 0 && !increments.len().is_multiple_of(modes) {
            return Err(invalid("increments", "length is not a multiple of the mode count"));
        }
        Ok(Self {
            dt,
            modes,
            increments,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Number of steps; a path with no modes carries no step count and
    /// reports `usize::MAX`.
    pub fn steps(&self) -> usize {
        self.increments.len().checked_div(self.modes).unwrap_or(usize::MAX)
    }

    pub fn increment(&self, step: usize) -> &[f64] {
        &self.increments[step * self.modes..(step + 1) * self.modes]
    }

    /// `W(t_k)` for every mode.
    pub fn value_at(&self, step: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.modes];
        for k in 0..step {
            for (wi, d) in w.iter_mut().zip(self.increment(k)) {
                *wi += d;
            }
        }
        w
    }

    /// Path on the grid `factor · dt`, with each coarse increment the exact
    /// sum of the `factor` fine increments it covers.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Refinement("factor must be ≥ 1".into()));
        }
        let steps = if self.modes == 0 { 0 } else { self.steps() };
        if steps % factor != 0 {
            return Err(Error::Refinement(format!(
                "{steps} fine steps are not divisible by {factor}"
            )));
        }
        let mut increments = vec![0.0; self.increments.len() / factor];
        for (k, chunk) in increments.chunks_mut(self.modes.max(1)).enumerate() {
            for j in 0..factor {
                for (c, d) in chunk.iter_mut().zip(self.increment(k * factor + j)) {
                    *c += d;
                }
            }
        }
        Ok(Self {
            dt: self.dt * factor as f64,
            modes: self.modes,
            increments,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_index_reproduce() {
        let a = BrownianDriver::new(7, 3).path(2, 100, 0.01).unwrap();
        let b = BrownianDriver::new(7, 3).path(2, 100, 0.01).unwrap();
        let c = BrownianDriver::new(7, 4).path(2, 100, 0.01).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn coarsening_sums_increments() {
        let p = BrownianDriver::new(1, 0).path(2, 8, 0.125).unwrap();
        let c = p.coarsen(4).unwrap();
        assert_eq!(c.steps(), 2);
        assert_eq!(c.dt(), 0.5);
        let w_fine = p.value_at(8);
        let w_coarse = c.value_at(2);
        for (a, b) in w_fine.iter().zip(&w_coarse) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(p.coarsen(3).is_err());
    }

    #[test]
    fn increment_variance_matches_dt() {
        let p = BrownianDriver::new(11, 0).path(1, 40_000, 0.01).unwrap();
        let var = (0..p.steps()).map(|k| p.increment(k)[0].powi(2)).sum::<f64>() / 40_000.0;
        // standard error of the variance estimate is dt·sqrt(2/N) ≈ 7e-5
        assert!((var - 0.01).abs() < 4e-4);
    }
}
