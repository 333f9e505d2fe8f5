//! Fitted classifier: coefficients, stored training curves (required by the
//! representer form of the slope function), and persistence.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curves::{Grid, LabeledDataset, SampledCurve};
use crate::error::{Error, Result};
use crate::sobolev::{self, KernelSystem};
use crate::solver::{Problem, SolverConfig, SolverState};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Center/scale transform fitted on training scalar covariates. Columns with
/// (near) zero spread keep scale 1 so the transform stays invertible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(z: &DMatrix<f64>) -> Self {
        let n = z.nrows() as f64;
        let mut mean = vec![0.0; z.ncols()];
        let mut scale = vec![1.0; z.ncols()];
        for j in 0..z.ncols() {
            let m = z.column(j).sum() / n;
            mean[j] = m;
            if z.nrows() > 1 {
                let var = z.column(j).iter().map(|v| (v - m) * (v - m)).sum::<f64>()
                    / (n - 1.0);
                if var.sqrt() > 1e-12 {
                    scale[j] = var.sqrt();
                }
            }
        }
        Self { mean, scale }
    }

    pub fn transform(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| {
            (z[(i, j)] - self.mean[j]) / self.scale[j]
        })
    }

    pub fn transform_row(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(j, v)| (v - self.mean[j]) / self.scale[j])
            .collect()
    }
}

/// Mapping between raw labels and the internal `{-1, +1}` coding. The
/// lexicographically larger raw label plays the role of `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    pub negative: i64,
    pub positive: i64,
}

impl Default for LabelMap {
    fn default() -> Self {
        Self {
            negative: -1,
            positive: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub objective: f64,
    pub converged: bool,
}

/// A fitted functional DWD model; with scalar covariates attached it is the
/// partial-linear variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwdModel {
    pub format_version: u32,
    pub q: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub d: [f64; 2],
    pub gamma: Vec<f64>,
    pub standardizer: Option<Standardizer>,
    pub c: Vec<f64>,
    pub grid_points: Vec<f64>,
    /// Training curves, one row per subject, sampled on `grid_points`.
    pub curve_values: Vec<Vec<f64>>,
    pub label_map: LabelMap,
    pub diagnostics: FitDiagnostics,
    #[serde(skip)]
    cache: std::cell::OnceCell<ModelCache>,
}

#[derive(Debug, Clone)]
struct ModelCache {
    grid: Arc<Grid>,
    curves: Vec<SampledCurve>,
    kernel_grid: DMatrix<f64>,
}

// The cache is derived data; equality and serialization ignore it.
impl PartialEq for ModelCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl DwdModel {
    /// Fits with the given hyperparameters and default stopping rules.
    pub fn fit(data: &LabeledDataset, q: f64, lambda: f64) -> Result<Self> {
        Self::fit_with_config(data, &SolverConfig::new(q, lambda)?)
    }

    /// Fits with full control over the solver configuration.
    pub fn fit_with_config(data: &LabeledDataset, cfg: &SolverConfig) -> Result<Self> {
        if data.len() < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 subjects, got {}",
                data.len()
            )));
        }
        let has_pos = data.labels().iter().any(|&y| y == 1);
        let has_neg = data.labels().iter().any(|&y| y == -1);
        if !(has_pos && has_neg) {
            return Err(Error::DegenerateLabels);
        }
        let standardizer = data.scalars().map(Standardizer::fit);
        let z = match (&standardizer, data.scalars()) {
            (Some(s), Some(z)) => Some(s.transform(z)),
            _ => None,
        };
        let sys = KernelSystem::build(data)?;
        let prob = Problem::new(&sys, data.labels(), z.as_ref())?;
        let state = prob.solve(cfg, None, None)?;
        Ok(Self::from_state(data, cfg, &state, standardizer))
    }

    /// Packages a solved state; used by both the direct fit path and the
    /// tuning pipeline.
    pub fn from_state(
        data: &LabeledDataset,
        cfg: &SolverConfig,
        state: &SolverState,
        standardizer: Option<Standardizer>,
    ) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            q: cfg.loss.q(),
            lambda: cfg.lambda,
            alpha: state.alpha,
            d: [state.d[0], state.d[1]],
            gamma: state.gamma.iter().copied().collect(),
            standardizer,
            c: state.c.iter().copied().collect(),
            grid_points: data.grid().points().to_vec(),
            curve_values: data
                .curves()
                .iter()
                .map(|c| c.values().to_vec())
                .collect(),
            label_map: LabelMap::default(),
            diagnostics: FitDiagnostics {
                iterations: state.iterations,
                objective: state.objective,
                converged: state.converged,
            },
            cache: std::cell::OnceCell::new(),
        }
    }

    fn cache(&self) -> &ModelCache {
        self.cache.get_or_init(|| {
            let grid = Arc::new(Grid::new(self.grid_points.clone()).expect("stored grid valid"));
            let curves = self
                .curve_values
                .iter()
                .map(|v| {
                    SampledCurve::new(Arc::clone(&grid), v.clone()).expect("stored curves valid")
                })
                .collect();
            let kernel_grid = sobolev::kernel_matrix(&grid);
            ModelCache {
                grid,
                curves,
                kernel_grid,
            }
        })
    }

    pub fn n_train(&self) -> usize {
        self.curve_values.len()
    }

    pub fn n_scalars(&self) -> usize {
        self.gamma.len()
    }

    /// `α̂ + s̃ᵀd̂ + r̃ᵀĉ (+ z̃ᵀγ̂)` for a new observation.
    pub fn decision_score(&self, curve: &SampledCurve, scalars: Option<&[f64]>) -> Result<f64> {
        let got = scalars.map_or(0, <[f64]>::len);
        if got != self.n_scalars() {
            return Err(Error::CovariateMismatch {
                expected: self.n_scalars(),
                got,
            });
        }
        let cache = self.cache();
        let s = sobolev::s_row(&cache.grid, curve)?;
        let r = sobolev::cross_gram(&cache.curves, &cache.kernel_grid, curve)?;
        let mut score = self.alpha + s[0] * self.d[0] + s[1] * self.d[1];
        for (ci, ri) in self.c.iter().zip(r.iter()) {
            score += ci * ri;
        }
        if let (Some(z), Some(std)) = (scalars, &self.standardizer) {
            for (g, zs) in self.gamma.iter().zip(std.transform_row(z)) {
                score += g * zs;
            }
        }
        Ok(score)
    }

    /// Sign rule on the decision score; a score of exactly zero maps to the
    /// positive label.
    pub fn predict(&self, curve: &SampledCurve, scalars: Option<&[f64]>) -> Result<i64> {
        let score = self.decision_score(curve, scalars)?;
        Ok(if score >= 0.0 {
            self.label_map.positive
        } else {
            self.label_map.negative
        })
    }

    /// Slope function `β̂(t) = d̂₁ + d̂₂(t - 0.5) + Σ ĉ_i (K x_i)(t)`.
    pub fn beta_eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfDomain {
                point: t,
                lo: 0.0,
                hi: 1.0,
            });
        }
        let cache = self.cache();
        let mut value = self.d[0] + self.d[1] * sobolev::psi2(t);
        let w = cache.grid.weights();
        let pts = cache.grid.points();
        for (ci, x) in self.c.iter().zip(&cache.curves) {
            if *ci == 0.0 {
                continue;
            }
            let mut kx = 0.0;
            for ((&wb, &tb), &xb) in w.iter().zip(pts).zip(x.values()) {
                kx += wb * xb * sobolev::kernel(t, tb);
            }
            value += ci * kx;
        }
        Ok(value)
    }

    /// Margins on the training sample, in stored order.
    pub fn training_scores(&self) -> Result<DVector<f64>> {
        let cache = self.cache();
        let mut out = DVector::zeros(self.n_train());
        for (i, curve) in cache.curves.iter().enumerate() {
            // scalar covariates were already standardized into gamma's scale;
            // scoring training rows requires them, so this path only serves
            // models without scalars
            if self.n_scalars() > 0 {
                return Err(Error::InvalidData(
                    "training_scores unavailable for models with scalar covariates".into(),
                ));
            }
            out[i] = self.decision_score(curve, None)?;
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
        crate::io::atomic_write(path, json.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: DwdModel = serde_json::from_str(&text)
            .map_err(|e| Error::ModelFormat(format!("{e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format_version {}, expected {}",
                self.format_version, MODEL_FORMAT_VERSION
            )));
        }
        if self.c.len() != self.curve_values.len() {
            return Err(Error::ModelFormat(format!(
                "field c has length {} but {} training curves are stored",
                self.c.len(),
                self.curve_values.len()
            )));
        }
        if self
            .curve_values
            .iter()
            .any(|v| v.len() != self.grid_points.len())
        {
            return Err(Error::ModelFormat(
                "stored curves do not match the stored grid length".into(),
            ));
        }
        if let Some(std) = &self.standardizer {
            if std.mean.len() != self.gamma.len() || std.scale.len() != self.gamma.len() {
                return Err(Error::ModelFormat(
                    "standardizer dimensions do not match gamma".into(),
                ));
            }
        }
        Grid::new(self.grid_points.clone())
            .map_err(|e| Error::ModelFormat(format!("stored grid invalid: {e}")))?;
        Ok(())
    }
}
