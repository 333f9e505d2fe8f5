//! Sampled functional covariates on a shared grid.
//!
//! A curve is a function observed at a fixed set of time points in `[0, 1]`.
//! All integrals against a curve are evaluated with the trapezoidal rule on
//! its grid, so every `∫ x(t) g(t) dt` in the method reduces to a weighted
//! inner product.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Ordered observation times in `[0, 1]` together with trapezoidal
/// quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Builds a grid from strictly increasing points in `[0, 1]` and attaches
    /// trapezoidal weights: `w_1 = (t_2 - t_1)/2`, `w_n = (t_n - t_{n-1})/2`,
    /// `w_i = (t_{i+1} - t_{i-1})/2` otherwise.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid point".into()));
        }
        if points[0] < 0.0 || *points.last().unwrap() > 1.0 {
            return Err(Error::InvalidGrid(format!(
                "points must lie in [0, 1], got span [{}, {}]",
                points[0],
                points.last().unwrap()
            )));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        let n = points.len();
        let mut weights = vec![0.0; n];
        weights[0] = (points[1] - points[0]) / 2.0;
        weights[n - 1] = (points[n - 1] - points[n - 2]) / 2.0;
        for i in 1..n - 1 {
            weights[i] = (points[i + 1] - points[i - 1]) / 2.0;
        }
        Ok(Self { points, weights })
    }

    /// Uniform grid of `n` points spanning `[0, 1]`.
    pub fn uniform(n: usize) -> Arc<Self> {
        let points = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        Arc::new(Self::new(points).expect("uniform grid is valid"))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// A function observed at every point of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl SampledCurve {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "curve has {} values but grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("curve contains a non-finite value".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Quadrature of `∫ x(t) g(t) dt`: `Σ_i w_i x(t_i) g(t_i)`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for ((&w, &t), &v) in self
            .grid
            .weights()
            .iter()
            .zip(self.grid.points())
            .zip(&self.values)
        {
            acc += w * v * g(t);
        }
        acc
    }

    /// Linear interpolation onto a target grid. Target points must lie within
    /// the span of the source grid.
    pub fn resample(&self, target: &Arc<Grid>) -> Result<SampledCurve> {
        if Arc::ptr_eq(&self.grid, target) || self.grid.points() == target.points() {
            return Ok(SampledCurve {
                grid: Arc::clone(target),
                values: self.values.clone(),
            });
        }
        let src = self.grid.points();
        let (lo, hi) = (src[0], *src.last().unwrap());
        let mut values = Vec::with_capacity(target.len());
        for &t in target.points() {
            if t < lo || t > hi {
                return Err(Error::OutOfDomain { point: t, lo, hi });
            }
            // partition_point gives the first index with src[idx] > t
            let idx = src.partition_point(|&p| p <= t);
            if idx == 0 {
                values.push(self.values[0]);
            } else if idx == src.len() {
                values.push(self.values[src.len() - 1]);
            } else {
                let (t0, t1) = (src[idx - 1], src[idx]);
                let w = (t - t0) / (t1 - t0);
                values.push(self.values[idx - 1] * (1.0 - w) + self.values[idx] * w);
            }
        }
        SampledCurve::new(Arc::clone(target), values)
    }
}

/// Training or test sample: curves on a common grid, labels in `{-1, +1}`,
/// and optional scalar covariates (one row per subject).
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    curves: Vec<SampledCurve>,
    labels: Vec<i8>,
    scalars: Option<nalgebra::DMatrix<f64>>,
}

impl LabeledDataset {
    /// Assembles a dataset. Curves on grids other than the first curve's are
    /// resampled onto it so a single quadrature operator applies everywhere.
    pub fn new(
        curves: Vec<SampledCurve>,
        labels: Vec<i8>,
        scalars: Option<nalgebra::DMatrix<f64>>,
    ) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::InvalidData("dataset has no curves".into()));
        }
        if curves.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} curves but {} labels",
                curves.len(),
                labels.len()
            )));
        }
        if labels.iter().any(|&y| y != 1 && y != -1) {
            return Err(Error::InvalidData("labels must be +1 or -1".into()));
        }
        if let Some(z) = &scalars {
            if z.nrows() != curves.len() {
                return Err(Error::Shape(format!(
                    "scalar covariate matrix has {} rows but dataset has {} subjects",
                    z.nrows(),
                    curves.len()
                )));
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(
                    "scalar covariates contain a non-finite value".into(),
                ));
            }
        }
        let grid = Arc::clone(curves[0].grid());
        let curves = curves
            .into_iter()
            .map(|c| c.resample(&grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            curves,
            labels,
            scalars,
        })
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.curves[0].grid()
    }

    pub fn curves(&self) -> &[SampledCurve] {
        &self.curves
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn scalars(&self) -> Option<&nalgebra::DMatrix<f64>> {
        self.scalars.as_ref()
    }

    /// Number of scalar covariates (0 when none are attached).
    pub fn n_scalars(&self) -> usize {
        self.scalars.as_ref().map_or(0, |z| z.ncols())
    }

    /// Row subset sharing the underlying grid.
    pub fn subset(&self, indices: &[usize]) -> Result<LabeledDataset> {
        let curves = indices.iter().map(|&i| self.curves[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let scalars = self
            .scalars
            .as_ref()
            .map(|z| nalgebra::DMatrix::from_fn(indices.len(), z.ncols(), |r, c| z[(indices[r], c)]));
        LabeledDataset::new(curves, labels, scalars)
    }
}
