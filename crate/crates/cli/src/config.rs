//! Run configuration: JSON with documented defaults for every key.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use metamorph::algebra::{Grid, GridVectorField, Inertia, InertiaOperator, Kernel, PlaneField, ScalarField};
use metamorph::dynamics::{ImageModel, LagrangianSpec, LandmarkModel, Potential};
use metamorph::linear::Point;
use metamorph::matching::{MatchMode, MatchOptions};
use metamorph::stochastics::{BumpMode, NoiseBasis, Scheme};

use crate::error::CliError;
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    #[default]
    Landmarks,
    Images,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Rk4,
    Heun,
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    #[default]
    Tangled,
    Untangled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub length_scale: f64,
    pub amplitude: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            length_scale: 1.0,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InertiaConfig {
    pub alpha: f64,
    pub power: u32,
}

impl Default for InertiaConfig {
    fn default() -> Self {
        Self { alpha: 1.0, power: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub points: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points: 64,
            length: 2.0 * PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    Fourier,
    Bumps,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: Vec<f64>,
    pub direction: Vec<f64>,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    /// Number of Fourier modes, or of default bumps when `bumps` is empty.
    pub count: usize,
    pub amplitudes: Vec<f64>,
    pub bumps: Vec<BumpConfig>,
    pub vectors: Vec<Vec<f64>>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            kind: NoiseKind::None,
            count: 0,
            amplitudes: vec![0.1],
            bumps: Vec::new(),
            vectors: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeMomentum {
    pub positions: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandmarkData {
    pub initial: Vec<Vec<f64>>,
    /// Initial covectors, zero when absent.
    pub sigma: Option<Vec<Vec<f64>>>,
    /// Momentum off the zero level, kept as a free point cloud.
    pub momentum: Option<FreeMomentum>,
    pub target: Option<Vec<Vec<f64>>>,
}

impl Default for LandmarkData {
    fn default() -> Self {
        Self {
            initial: vec![vec![0.0, 0.0]],
            sigma: None,
            momentum: None,
            target: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub wavenumber: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Image data, either analytic or a raw grid file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ImageSource {
    Zero,
    Constant {
        value: f64,
    },
    /// Periodized Gaussian `a exp(-d²/(2w²))` with minimum-image distance.
    Gaussian {
        center: Vec<f64>,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `c + Σ cos·cos(2πk·x/L) + sin·sin(2πk·x/L)`.
    Fourier {
        #[serde(default)]
        constant: f64,
        terms: Vec<FourierTerm>,
    },
    /// Raw little-endian float64 grid with a `<path>.json` shape sidecar.
    /// Relative paths resolve against the config file directory.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImageData {
    pub initial: ImageSource,
    pub sigma: ImageSource,
    pub target: Option<ImageSource>,
    pub probes: Option<Vec<Vec<f64>>>,
}

impl Default for ImageData {
    fn default() -> Self {
        Self {
            initial: ImageSource::Gaussian {
                center: vec![PI, PI],
                width: 0.5,
                amplitude: 1.0,
            },
            sigma: ImageSource::Zero,
            target: None,
            probes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub samples: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { samples: 256 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MatchModeName {
    #[default]
    Penalty,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchingSection {
    pub mode: MatchModeName,
    pub epsilon: f64,
    pub exact_epsilon: f64,
    pub max_iters: usize,
    pub tolerance: f64,
    /// Fourier modes per axis parameterizing the image `σ₀`.
    pub modes: usize,
}

impl Default for MatchingSection {
    fn default() -> Self {
        let o = MatchOptions::default();
        Self {
            mode: MatchModeName::Penalty,
            epsilon: o.epsilon,
            exact_epsilon: o.exact_epsilon,
            max_iters: o.max_iters,
            tolerance: o.tolerance,
            modes: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub structure: Structure,
    pub dim: usize,
    pub kernel: KernelConfig,
    pub inertia: InertiaConfig,
    pub grid: GridConfig,
    pub sigma_m_sq: f64,
    /// Stiffness `κ` of the template potential `κ/2 ⟨n, n⟩`.
    pub potential: f64,
    pub noise: NoiseConfig,
    /// Defaults to `rk4` without noise and `heun` with noise.
    pub scheme: Option<SchemeName>,
    pub form: Form,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub record_every: usize,
    pub landmarks: LandmarkData,
    pub image: ImageData,
    pub ensemble: EnsembleSection,
    pub matching: MatchingSection,
    /// Output directory, overridden by `--out`.
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            structure: Structure::Landmarks,
            dim: 2,
            kernel: KernelConfig::default(),
            inertia: InertiaConfig::default(),
            grid: GridConfig::default(),
            sigma_m_sq: 0.5,
            potential: 0.0,
            noise: NoiseConfig::default(),
            scheme: None,
            form: Form::Tangled,
            dt: 1e-2,
            horizon: 1.0,
            seed: 0,
            record_every: 10,
            landmarks: LandmarkData::default(),
            image: ImageData::default(),
            ensemble: EnsembleSection::default(),
            matching: MatchingSection::default(),
            output: None,
        }
    }
}

fn bad(key: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(key, format!("must be a finite number > 0, got {v}")))
    }
}

/// A loaded configuration together with the directory it came from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl Loaded {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let config = parse(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base })
    }

    pub fn defaults() -> Self {
        Self {
            config: RunConfig::default(),
            base: PathBuf::new(),
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// SHA-256 over the canonical config (without `output`) and the bytes of
    /// any image files it references.
    pub fn hash(&self) -> Result<String, CliError> {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&self.echo()).expect("config serializes"));
        let image = &self.config.image;
        let sources = [Some(&image.initial), Some(&image.sigma), image.target.as_ref()];
        for src in sources.into_iter().flatten() {
            if let ImageSource::File { path } = src {
                let p = self.resolve(path);
                hasher.update(fs::read(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?);
            }
        }
        Ok(hex::encode(hasher.finalize()))
    }

    /// The effective configuration as echoed into manifests.
    pub fn echo(&self) -> RunConfig {
        RunConfig {
            output: None,
            ..self.config.clone()
        }
    }
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        bad(if key == "." { "<root>".to_string() } else { key }, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

fn point(key: &str, v: &[f64], dim: usize) -> Result<Point, CliError> {
    if v.len() != dim {
        return Err(bad(key, format!("expected {dim} coordinates, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(bad(key, "coordinates must be finite"));
    }
    Ok([v[0], if dim == 2 { v[1] } else { 0.0 }])
}

fn points(key: &str, v: &[Vec<f64>], dim: usize) -> Result<Vec<Point>, CliError> {
    v.iter()
        .enumerate()
        .map(|(i, p)| point(&format!("{key}[{i}]"), p, dim))
        .collect()
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        match self.structure {
            Structure::Landmarks if !(1..=2).contains(&self.dim) => {
                return Err(bad("dim", format!("landmarks need dim 1 or 2, got {}", self.dim)))
            }
            Structure::Images if !(1..=2).contains(&self.dim) => {
                return Err(bad("dim", format!("images need dim 1 or 2, got {}", self.dim)))
            }
            _ => {}
        }
        positive("kernel.length_scale", self.kernel.length_scale)?;
        positive("kernel.amplitude", self.kernel.amplitude)?;
        if !(self.inertia.alpha.is_finite() && self.inertia.alpha >= 0.0) {
            return Err(bad("inertia.alpha", format!("must be ≥ 0, got {}", self.inertia.alpha)));
        }
        if self.inertia.power == 0 {
            return Err(bad("inertia.power", "must be ≥ 1"));
        }
        positive("grid.length", self.grid.length)?;
        if self.grid.points < 4 || !self.grid.points.is_multiple_of(2) {
            return Err(bad("grid.points", format!("must be even and ≥ 4, got {}", self.grid.points)));
        }
        positive("sigma_m_sq", self.sigma_m_sq)?;
        if !(self.potential.is_finite() && self.potential >= 0.0) {
            return Err(bad("potential", format!("must be ≥ 0, got {}", self.potential)));
        }
        positive("dt", self.dt)?;
        positive("horizon", self.horizon)?;
        self.steps()?;
        if self.record_every == 0 {
            return Err(bad("record_every", "must be ≥ 1"));
        }
        if self.ensemble.samples == 0 {
            return Err(bad("ensemble.samples", "must be ≥ 1"));
        }
        positive("matching.epsilon", self.matching.epsilon)?;
        positive("matching.exact_epsilon", self.matching.exact_epsilon)?;
        positive("matching.tolerance", self.matching.tolerance)?;
        if self.matching.max_iters == 0 {
            return Err(bad("matching.max_iters", "must be ≥ 1"));
        }
        for (i, a) in self.noise.amplitudes.iter().enumerate() {
            if !a.is_finite() {
                return Err(bad(format!("noise.amplitudes[{i}]"), "must be finite"));
            }
        }
        match (self.structure, self.noise.kind) {
            (Structure::Images, NoiseKind::Bumps) => {
                return Err(bad("noise.kind", "bump noise applies to landmarks; use fourier or constant"))
            }
            (Structure::Landmarks, NoiseKind::Fourier) => {
                return Err(bad("noise.kind", "Fourier noise needs a grid; use bumps or constant"))
            }
            _ => {}
        }
        if self.noise.kind == NoiseKind::Fourier
            && !(self.noise.amplitudes.len() == 1 || self.noise.amplitudes.len() == self.noise.count)
        {
            return Err(bad(
                "noise.amplitudes",
                format!("need 1 or {} entries, got {}", self.noise.count, self.noise.amplitudes.len()),
            ));
        }
        if self.noise.kind == NoiseKind::Bumps && self.noise.bumps.is_empty() && self.noise.amplitudes.len() != 1 {
            return Err(bad("noise.amplitudes", "default bumps take a single amplitude"));
        }
        if self.structure == Structure::Landmarks {
            let d = self.dim;
            let q = points("landmarks.initial", &self.landmarks.initial, d)?;
            if q.is_empty() {
                return Err(bad("landmarks.initial", "need at least one landmark"));
            }
            if let Some(s) = &self.landmarks.sigma {
                if points("landmarks.sigma", s, d)?.len() != q.len() {
                    return Err(bad("landmarks.sigma", "need one covector per landmark"));
                }
            }
            if let Some(t) = &self.landmarks.target {
                if points("landmarks.target", t, d)?.len() != q.len() {
                    return Err(bad("landmarks.target", "need one target per landmark"));
                }
            }
            if let Some(m) = &self.landmarks.momentum {
                let p = points("landmarks.momentum.positions", &m.positions, d)?;
                if points("landmarks.momentum.weights", &m.weights, d)?.len() != p.len() {
                    return Err(bad("landmarks.momentum.weights", "need one weight per position"));
                }
            }
        }
        Ok(())
    }

    /// Number of steps `horizon / dt`, which must be an integer.
    pub fn steps(&self) -> Result<usize, CliError> {
        let s = self.horizon / self.dt;
        let n = s.round();
        if (s - n).abs() > 1e-9 * s.max(1.0) || n < 1.0 {
            return Err(bad(
                "dt",
                format!("horizon {} is not an integer multiple of dt {}", self.horizon, self.dt),
            ));
        }
        Ok(n as usize)
    }

    pub fn scheme(&self) -> Scheme {
        match self.scheme {
            Some(SchemeName::Rk4) => Scheme::DeterministicRk4,
            Some(SchemeName::Heun) => Scheme::StratonovichHeun,
            Some(SchemeName::EulerMaruyama) => Scheme::ItoEulerMaruyama,
            None if self.noise_modes() == 0 => Scheme::DeterministicRk4,
            None => Scheme::StratonovichHeun,
        }
    }

    pub fn noise_modes(&self) -> usize {
        match self.noise.kind {
            NoiseKind::None => 0,
            NoiseKind::Fourier => self.noise.count,
            NoiseKind::Bumps if self.noise.bumps.is_empty() => self.noise.count,
            NoiseKind::Bumps => self.noise.bumps.len(),
            NoiseKind::Constant => self.noise.vectors.len(),
        }
    }

    pub fn match_options(&self, threads: Option<usize>) -> MatchOptions {
        MatchOptions {
            mode: match self.matching.mode {
                MatchModeName::Penalty => MatchMode::Penalty,
                MatchModeName::Exact => MatchMode::Exact,
            },
            epsilon: self.matching.epsilon,
            exact_epsilon: self.matching.exact_epsilon,
            max_iters: self.matching.max_iters,
            tolerance: self.matching.tolerance,
            threads,
            ..MatchOptions::default()
        }
    }

    fn spec(&self, inertia: Inertia) -> Result<LagrangianSpec, CliError> {
        Ok(LagrangianSpec::new(inertia, self.sigma_m_sq)?.with_potential(Potential::Quadratic {
            stiffness: self.potential,
        }))
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.dim, self.grid.points, self.grid.length)?)
    }

    pub fn noise_vectors(&self) -> Result<Vec<Point>, CliError> {
        points("noise.vectors", &self.noise.vectors, self.dim)
    }

    pub fn landmark_model(&self) -> Result<LandmarkModel, CliError> {
        let kernel = Kernel::gaussian(self.kernel.length_scale, self.kernel.amplitude)?;
        let model = LandmarkModel::new(&self.spec(Inertia::Kernel(kernel))?, self.dim)?;
        let basis = match self.noise.kind {
            NoiseKind::None => NoiseBasis::Plane(Vec::new()),
            NoiseKind::Constant => NoiseBasis::constant(&self.noise_vectors()?),
            NoiseKind::Bumps if self.noise.bumps.is_empty() => {
                NoiseBasis::default_bumps(self.noise.count, self.noise.amplitudes[0], self.dim)?
            }
            NoiseKind::Bumps => {
                let modes = self
                    .noise
                    .bumps
                    .iter()
                    .enumerate()
                    .map(|(i, b)| {
                        Ok(BumpMode {
                            center: point(&format!("noise.bumps[{i}].center"), &b.center, self.dim)?,
                            direction: point(&format!("noise.bumps[{i}].direction"), &b.direction, self.dim)?,
                            amplitude: b.amplitude,
                            scale: b.scale,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                NoiseBasis::bumps(&modes)?
            }
            NoiseKind::Fourier => unreachable!("rejected by validate"),
        };
        let fields: Vec<PlaneField> = basis.plane_fields()?.to_vec();
        Ok(model.with_noise(fields))
    }

    pub fn image_model(&self) -> Result<ImageModel, CliError> {
        let grid = self.grid()?;
        let op = InertiaOperator::helmholtz_power(self.inertia.alpha, self.inertia.power)?;
        let mut model = ImageModel::new(&self.spec(Inertia::Helmholtz(op))?, &grid)?;
        let noise = match self.noise.kind {
            NoiseKind::None => Vec::new(),
            NoiseKind::Fourier => NoiseBasis::fourier(&grid, self.noise.count, &self.noise.amplitudes)?
                .grid_fields()?
                .to_vec(),
            NoiseKind::Constant => self
                .noise_vectors()?
                .into_iter()
                .map(|v| GridVectorField::constant(&grid, v))
                .collect(),
            NoiseKind::Bumps => unreachable!("rejected by validate"),
        };
        model = model.with_noise(noise)?;
        if let Some(p) = &self.image.probes {
            model = model.with_probes(points("image.probes", p, self.dim)?);
        }
        Ok(model)
    }

    pub fn landmark_initial(&self) -> Vec<Point> {
        points("landmarks.initial", &self.landmarks.initial, self.dim).expect("validated")
    }

    pub fn landmark_sigma(&self) -> Vec<Point> {
        match &self.landmarks.sigma {
            Some(s) => points("landmarks.sigma", s, self.dim).expect("validated"),
            None => vec![[0.0, 0.0]; self.landmarks.initial.len()],
        }
    }

    pub fn landmark_target(&self) -> Result<Vec<Point>, CliError> {
        match &self.landmarks.target {
            Some(t) => points("landmarks.target", t, self.dim),
            None => Err(bad("landmarks.target", "required for matching")),
        }
    }

    pub fn landmark_momentum(&self) -> Option<(Vec<Point>, Vec<Point>)> {
        self.landmarks.momentum.as_ref().map(|m| {
            (
                points("landmarks.momentum.positions", &m.positions, self.dim).expect("validated"),
                points("landmarks.momentum.weights", &m.weights, self.dim).expect("validated"),
            )
        })
    }
}

impl Loaded {
    pub fn image(&self, key: &str, src: &ImageSource, grid: &Grid) -> Result<ScalarField, CliError> {
        let dim = grid.dim();
        let l = grid.length();
        match src {
            ImageSource::Zero => Ok(ScalarField::zeros(grid)),
            ImageSource::Constant { value } => Ok(ScalarField::from_fn(grid, |_| *value)),
            ImageSource::Gaussian {
                center,
                width,
                amplitude,
            } => {
                positive(&format!("{key}.width"), *width)?;
                let c = if center.len() >= dim {
                    point(&format!("{key}.center"), &center[..dim], dim)?
                } else {
                    return Err(bad(format!("{key}.center"), format!("expected {dim} coordinates")));
                };
                let wrap = |d: f64| d - l * (d / l).round();
                Ok(ScalarField::from_fn(grid, |x| {
                    let r2: f64 = (0..dim).map(|a| wrap(x[a] - c[a]).powi(2)).sum();
                    amplitude * (-r2 / (2.0 * width * width)).exp()
                }))
            }
            ImageSource::Fourier { constant, terms } => {
                for (i, t) in terms.iter().enumerate() {
                    if t.wavenumber.len() != dim {
                        return Err(bad(
                            format!("{key}.terms[{i}].wavenumber"),
                            format!("expected {dim} entries"),
                        ));
                    }
                }
                let base = 2.0 * PI / l;
                Ok(ScalarField::from_fn(grid, |x| {
                    constant
                        + terms
                            .iter()
                            .map(|t| {
                                let phase: f64 = (0..dim).map(|a| t.wavenumber[a] as f64 * x[a]).sum::<f64>() * base;
                                t.cos * phase.cos() + t.sin * phase.sin()
                            })
                            .sum::<f64>()
                }))
            }
            ImageSource::File { path } => {
                let p = self.resolve(path);
                let values = io::read_grid(&p, dim, grid.points_per_axis())
                    .map_err(|e| bad(format!("{key}.path"), e.to_string()))?;
                Ok(ScalarField::new(grid.clone(), values)?)
            }
        }
    }
}
