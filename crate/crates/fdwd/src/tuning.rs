//! Cross-validated selection of `(q, λ)`.
//!
//! The block matrix `A_{q,λ}` shares every block except its lower-right
//! corner across the hyperparameter grid, so one set of factors — the
//! `(3+p)×(3+p)` Gram block `B`, the coupling block `C = R(1, S, Z)`, and
//! the eigendecomposition `R = QΛQᵀ` — serves every `(q, λ)` cell. Each cell
//! then needs only a fresh diagonal `Π_{q,λ} = Λ² + (2nqλ/(q+1)²)Λ`, a
//! Woodbury correction of size `(3+p)`, and no new eigendecomposition.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::curves::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::Standardizer;
use crate::sobolev::{cross_gram, s_row, KernelSystem};
use crate::solver::{DenseStepSolver, Problem, SolverConfig, SolverState, StepSolver};

/// Hyperparameter grid and fold count for cross validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuningGrid {
    pub q_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub folds: usize,
}

impl Default for TuningGrid {
    /// `q ∈ {0.5, 1, 2, 4, 8}`, eight log-spaced `λ` from 1e-8 to 1e-1,
    /// five folds.
    fn default() -> Self {
        let lambda_values = (0..8)
            .map(|i| 10f64.powf(-8.0 + i as f64))
            .collect();
        Self {
            q_values: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            lambda_values,
            folds: 5,
        }
    }
}

impl TuningGrid {
    pub fn new(q_values: Vec<f64>, lambda_values: Vec<f64>, folds: usize) -> Result<Self> {
        let grid = Self {
            q_values,
            lambda_values,
            folds,
        };
        grid.validate(usize::MAX)?;
        Ok(grid)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.q_values.is_empty() || self.lambda_values.is_empty() {
            return Err(Error::InvalidData("tuning grid is empty".into()));
        }
        if self.q_values.iter().chain(&self.lambda_values).any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidData(
                "tuning grid values must be positive".into(),
            ));
        }
        if self.folds < 2 || self.folds > n {
            return Err(Error::InvalidData(format!(
                "folds must be in [2, n]; got {} with n = {n}",
                self.folds
            )));
        }
        Ok(())
    }
}

/// Per-training-sample factors reused across the whole `(q, λ)` grid.
pub struct FastFactors {
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    eigvecs: DMatrix<f64>,
    eigvals: DVector<f64>,
    rank_threshold: f64,
    n: usize,
}

/// Builds `B`, `C`, and reuses the eigendecomposition already stored in the
/// kernel system.
pub fn build_factors(sys: &KernelSystem, z: Option<&DMatrix<f64>>) -> Result<FastFactors> {
    let labels = vec![1i8; sys.n()];
    let prob = Problem::new(sys, &labels, z)?;
    let g = prob.design_block();
    let b = g.transpose() * &g;
    let c = sys.r() * &g;
    Ok(FastFactors {
        b,
        c,
        eigvecs: sys.eigvecs().clone(),
        eigvals: sys.eigvals().clone(),
        rank_threshold: sys.rank_threshold(),
        n: sys.n(),
    })
}

impl FastFactors {
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn eigvals(&self) -> &DVector<f64> {
        &self.eigvals
    }

    /// `Π_{q,λ}` entries `λ_i² + (2nqλ/(q+1)²) λ_i`.
    pub fn pi_diagonal(&self, cfg: &SolverConfig) -> DVector<f64> {
        let kappa = cfg.kappa(self.n);
        DVector::from_fn(self.eigvals.len(), |i, _| {
            let l = self.eigvals[i];
            l * l + kappa * l
        })
    }
}

/// `v ↦ A_{q,λ}⁻¹ v` through the block-inverse formula with the
/// eigendecomposition shortcut for `D⁻¹` and a Woodbury correction; zero
/// eigenvalues of `R` are handled as a pseudo-inverse on range(R).
pub struct FastStepSolver<'a> {
    factors: &'a FastFactors,
    /// LU of the ridged `B` for the current `(q, λ)`.
    b_lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// `D⁻¹ C` for the current `(q, λ)`.
    dinv_c: DMatrix<f64>,
    /// LU of `B - Cᵀ D⁻¹ C`.
    e_lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    pi_inv: DVector<f64>,
}

impl<'a> FastStepSolver<'a> {
    pub fn new(factors: &'a FastFactors, cfg: &SolverConfig) -> Result<Self> {
        let kappa = cfg.kappa(factors.n);
        // reproduce the dense path's diagonal ridge from the factors:
        // trace(A) = trace(B) + Σ(λ_i² + κλ_i); the ridge stays diagonal in
        // the eigenbasis of R, so both paths invert the same matrix
        let small = factors.b.nrows();
        let trace = factors.b.trace()
            + factors
                .eigvals
                .iter()
                .map(|&l| l * l + kappa * l)
                .sum::<f64>();
        let ridge = cfg.ridge_scale * trace / (small + factors.n) as f64;
        let pi_inv = DVector::from_fn(factors.eigvals.len(), |i, _| {
            let l = factors.eigvals[i];
            if l <= factors.rank_threshold {
                // numerically null direction of R: pseudo-inverse, which the
                // surrounding iteration never excites
                0.0
            } else {
                1.0 / (l * l + kappa * l + ridge)
            }
        });
        let mut b_ridged = factors.b.clone();
        for i in 0..small {
            b_ridged[(i, i)] += ridge;
        }
        let dinv_c = apply_dinv_mat(factors, &pi_inv, &factors.c);
        let e = &b_ridged - factors.c.transpose() * &dinv_c;
        let b_lu = b_ridged.lu();
        if !b_lu.is_invertible() {
            return Err(Error::SolverSingular);
        }
        let e_lu = e.lu();
        if !e_lu.is_invertible() {
            return Err(Error::SolverSingular);
        }
        Ok(Self {
            factors,
            b_lu,
            dinv_c,
            e_lu,
            pi_inv,
        })
    }

    fn apply_p(&self, x: &DVector<f64>) -> DVector<f64> {
        // P x = D⁻¹x + D⁻¹C (B - CᵀD⁻¹C)⁻¹ CᵀD⁻¹ x
        let dx = apply_dinv_vec(self.factors, &self.pi_inv, x);
        let small = self.dinv_c.transpose() * x;
        let corr = self.e_lu.solve(&small).expect("E factorized");
        dx + &self.dinv_c * corr
    }
}

fn apply_dinv_vec(f: &FastFactors, pi_inv: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    let mut y = f.eigvecs.transpose() * x;
    y.component_mul_assign(pi_inv);
    &f.eigvecs * y
}

fn apply_dinv_mat(f: &FastFactors, pi_inv: &DVector<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = f.eigvecs.transpose() * m;
    for mut col in y.column_iter_mut() {
        col.component_mul_assign(pi_inv);
    }
    &f.eigvecs * y
}

impl StepSolver for FastStepSolver<'_> {
    fn apply_inverse(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let small = self.factors.b.nrows();
        let n = self.factors.n;
        if v.len() != small + n {
            return Err(Error::Shape(format!(
                "vector length {} but system dimension {}",
                v.len(),
                small + n
            )));
        }
        let v1 = v.rows(0, small).into_owned();
        let v2 = v.rows(small, n).into_owned();
        let w = self.b_lu.solve(&v1).ok_or(Error::SolverSingular)?;
        // u = P(C w - v2); top = w + B⁻¹Cᵀu, bottom = -u
        let u = self.apply_p(&(&self.factors.c * &w - &v2));
        let top_corr = self
            .b_lu
            .solve(&(self.factors.c.transpose() * &u))
            .ok_or(Error::SolverSingular)?;
        let mut out = DVector::zeros(small + n);
        out.rows_mut(0, small).copy_from(&(w + top_corr));
        out.rows_mut(small, n).copy_from(&(-u));
        Ok(out)
    }
}

/// Misclassification surface over the grid plus the selected pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub q_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    /// Mean validation misclassification rate, indexed `[q][lambda]`.
    pub error_surface: Vec<Vec<f64>>,
    /// Per-fold rates, indexed `[fold][q][lambda]`.
    pub fold_errors: Vec<Vec<Vec<f64>>>,
    pub best_q: f64,
    pub best_lambda: f64,
}

impl CvResult {
    /// Mean validation error at the selected `(q, λ)` cell.
    pub fn best_error(&self) -> f64 {
        let qi = self
            .q_values
            .iter()
            .position(|&q| q == self.best_q)
            .expect("selected q comes from the grid");
        let li = self
            .lambda_values
            .iter()
            .position(|&l| l == self.best_lambda)
            .expect("selected lambda comes from the grid");
        self.error_surface[qi][li]
    }
}

/// Deterministic stratified fold assignment; returns per-fold index lists.
pub fn stratified_folds(labels: &[i8], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == -1).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut assignment = vec![Vec::new(); folds];
    for (k, &i) in pos.iter().chain(neg.iter()).enumerate() {
        assignment[k % folds].push(i);
    }
    for fold in 0..folds {
        for class in [1i8, -1] {
            let train_has = (0..folds)
                .filter(|&f| f != fold)
                .flat_map(|f| assignment[f].iter())
                .any(|&i| labels[i] == class);
            if !train_has {
                return Err(Error::Stratification { fold, class });
            }
        }
    }
    Ok(assignment)
}

/// K-fold cross validation over the grid using the fast inverse path, with
/// tie-break toward the smallest `λ`, then the smallest `q`.
pub fn cross_validate(
    data: &LabeledDataset,
    grid: &TuningGrid,
    cfg_template: &SolverConfig,
    seed: u64,
) -> Result<CvResult> {
    grid.validate(data.len())?;
    let folds = stratified_folds(data.labels(), grid.folds, seed)?;
    let nq = grid.q_values.len();
    let nl = grid.lambda_values.len();
    let mut fold_errors = Vec::with_capacity(grid.folds);

    for fold in folds.iter() {
        let val_idx = fold.clone();
        let train_idx: Vec<usize> = (0..data.len()).filter(|i| !fold.contains(i)).collect();
        let train = data.subset(&train_idx)?;
        let std = train.scalars().map(Standardizer::fit);
        let z_train = match (&std, train.scalars()) {
            (Some(s), Some(z)) => Some(s.transform(z)),
            _ => None,
        };
        let sys = KernelSystem::build(&train)?;
        let prob = Problem::new(&sys, train.labels(), z_train.as_ref())?;
        let factors = build_factors(&sys, z_train.as_ref())?;

        // validation design rows are (q, λ)-independent
        let n_val = val_idx.len();
        let mut s_val = DMatrix::zeros(n_val, 2);
        let mut r_val = DMatrix::zeros(n_val, train.len());
        for (row, &i) in val_idx.iter().enumerate() {
            let sr = s_row(train.grid(), &data.curves()[i])?;
            s_val[(row, 0)] = sr[0];
            s_val[(row, 1)] = sr[1];
            let rg = cross_gram(train.curves(), sys.kernel_grid(), &data.curves()[i])?;
            r_val.row_mut(row).copy_from(&rg.transpose());
        }
        let z_val = match (&std, data.scalars()) {
            (Some(s), Some(z)) => {
                let rows = DMatrix::from_fn(n_val, z.ncols(), |r, c| z[(val_idx[r], c)]);
                Some(s.transform(&rows))
            }
            _ => None,
        };

        let mut errs = vec![vec![0.0; nl]; nq];
        for (qi, &q) in grid.q_values.iter().enumerate() {
            for (li, &lambda) in grid.lambda_values.iter().enumerate() {
                let mut cfg = SolverConfig::new(q, lambda)?;
                cfg.tol = cfg_template.tol;
                cfg.max_iter = cfg_template.max_iter;
                cfg.ridge_scale = cfg_template.ridge_scale;
                let state = match FastStepSolver::new(&factors, &cfg) {
                    Ok(fast) => prob.solve(&cfg, None, Some(&fast))?,
                    Err(Error::SolverSingular) => {
                        log::warn!(
                            "fast inverse unavailable (singular B); falling back to dense solve"
                        );
                        let dense = DenseStepSolver::new(&prob, &cfg)?;
                        prob.solve(&cfg, None, Some(&dense))?
                    }
                    Err(e) => return Err(e),
                };
                errs[qi][li] = validation_error(&state, &s_val, &r_val, z_val.as_ref(), data, &val_idx);
            }
        }
        fold_errors.push(errs);
    }

    let mut surface = vec![vec![0.0; nl]; nq];
    for errs in &fold_errors {
        for qi in 0..nq {
            for li in 0..nl {
                surface[qi][li] += errs[qi][li] / grid.folds as f64;
            }
        }
    }

    // tie-break: smallest λ, then smallest q
    let mut best = (0usize, 0usize);
    let mut best_err = f64::INFINITY;
    for li in 0..nl {
        for qi in 0..nq {
            if surface[qi][li] < best_err - 1e-15 {
                best_err = surface[qi][li];
                best = (qi, li);
            }
        }
    }

    Ok(CvResult {
        q_values: grid.q_values.clone(),
        lambda_values: grid.lambda_values.clone(),
        error_surface: surface,
        fold_errors,
        best_q: grid.q_values[best.0],
        best_lambda: grid.lambda_values[best.1],
    })
}

fn validation_error(
    state: &SolverState,
    s_val: &DMatrix<f64>,
    r_val: &DMatrix<f64>,
    z_val: Option<&DMatrix<f64>>,
    data: &LabeledDataset,
    val_idx: &[usize],
) -> f64 {
    let mut f = s_val * &state.d + r_val * &state.c;
    if let Some(z) = z_val {
        f += z * &state.gamma;
    }
    f.add_scalar_mut(state.alpha);
    let mut wrong = 0usize;
    for (row, &i) in val_idx.iter().enumerate() {
        let pred: i8 = if f[row] >= 0.0 { 1 } else { -1 };
        if pred != data.labels()[i] {
            wrong += 1;
        }
    }
    wrong as f64 / val_idx.len() as f64
}
