//! The second-order Sobolev space on `[0, 1]` split as a two-dimensional
//! null space (spanned by `1` and `t - 0.5`) plus an RKHS of functions with
//! square-integrable curvature.
//!
//! The reproducing kernel of the penalized part is the scaled-Bernoulli form
//! `K(s, t) = k2(s) k2(t) - k4(|s - t|)` and the data enter the optimization
//! only through the `n×2` matrix `S` (integrals against the null-space basis)
//! and the `n×n` Gram matrix `R` (double kernel integrals between curves).

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::curves::{Grid, LabeledDataset, SampledCurve};
use crate::error::{Error, Result};

/// Eigenvalues below `RANK_TOL * λ_max` are treated as exact zeros when the
/// tuning path inverts the spectrum.
pub const RANK_TOL: f64 = 1e-12;

/// First null-space basis function, `ψ1(t) = 1`.
pub fn psi1(_t: f64) -> f64 {
    1.0
}

/// Second null-space basis function, `ψ2(t) = t - 0.5`.
pub fn psi2(t: f64) -> f64 {
    t - 0.5
}

/// `k2(s) = (ψ2²(s) - 1/12) / 2`, the scaled second Bernoulli polynomial.
pub fn k2(s: f64) -> f64 {
    let p = psi2(s);
    0.5 * (p * p - 1.0 / 12.0)
}

/// `k4(s) = (ψ2⁴(s) - ψ2²(s)/2 + 7/240) / 24`, the scaled fourth Bernoulli
/// polynomial.
pub fn k4(s: f64) -> f64 {
    let p = psi2(s);
    let p2 = p * p;
    (p2 * p2 - 0.5 * p2 + 7.0 / 240.0) / 24.0
}

/// Reproducing kernel `K(s, t) = k2(s) k2(t) - k4(|s - t|)` of the penalized
/// subspace.
pub fn kernel(s: f64, t: f64) -> f64 {
    k2(s) * k2(t) - k4((s - t).abs())
}

static EIGEN_CALLS: AtomicUsize = AtomicUsize::new(0);

/// Number of symmetric eigendecompositions performed so far. Exists so tests
/// can observe that the tuning path reuses one decomposition across the
/// whole hyperparameter grid.
pub fn eigendecomposition_count() -> usize {
    EIGEN_CALLS.load(Ordering::Relaxed)
}

/// Symmetric eigendecomposition with eigenvalues sorted descending and small
/// negatives (quadrature noise on a PSD Gram matrix) clamped to zero.
pub fn eigendecompose(r: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let asym = (r - r.transpose()).abs().max();
    let scale = r.abs().max().max(1.0);
    if asym > 1e-10 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    EIGEN_CALLS.fetch_add(1, Ordering::Relaxed);
    let eig = nalgebra::SymmetricEigen::new(r.clone());
    let n = r.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut q = DMatrix::zeros(n, n);
    let mut lam = DVector::zeros(n);
    let max_ev = order
        .first()
        .map_or(0.0, |&i| eig.eigenvalues[i].abs());
    for (j, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvalues[i];
        // negatives at round-off scale on a PSD Gram matrix become exact zeros
        if v < 0.0 && v > -1e-8 * max_ev.max(1.0) {
            v = 0.0;
        }
        lam[j] = v;
        q.set_column(j, &eig.eigenvectors.column(i));
    }
    Ok((q, lam))
}

/// Precomputed data matrices and spectral factors shared by the solver and
/// the tuning path.
#[derive(Debug, Clone)]
pub struct KernelSystem {
    grid: Arc<Grid>,
    kernel_grid: DMatrix<f64>,
    s: DMatrix<f64>,
    r: DMatrix<f64>,
    eigvecs: DMatrix<f64>,
    eigvals: DVector<f64>,
}

impl KernelSystem {
    /// Assembles `S`, `R` (symmetrized), and the eigendecomposition of `R`
    /// for a training sample.
    pub fn build(data: &LabeledDataset) -> Result<Self> {
        let grid = Arc::clone(data.grid());
        let kernel_grid = kernel_matrix(&grid);
        let s = compute_s(data);
        let r = compute_r_with(data, &kernel_grid);
        let (eigvecs, eigvals) = eigendecompose(&r)?;
        Ok(Self {
            grid,
            kernel_grid,
            s,
            r,
            eigvecs,
            eigvals,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.r.nrows()
    }

    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn eigvecs(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    pub fn eigvals(&self) -> &DVector<f64> {
        &self.eigvals
    }

    pub fn kernel_grid(&self) -> &DMatrix<f64> {
        &self.kernel_grid
    }

    /// Threshold below which eigenvalues of `R` count as zero.
    pub fn rank_threshold(&self) -> f64 {
        RANK_TOL * self.eigvals.max().max(0.0)
    }
}

/// Kernel evaluated on all grid point pairs.
pub fn kernel_matrix(grid: &Grid) -> DMatrix<f64> {
    let pts = grid.points();
    DMatrix::from_fn(pts.len(), pts.len(), |a, b| kernel(pts[a], pts[b]))
}

/// `S`: row i is `(∫ x_i, ∫ x_i(t)(t - 0.5) dt)`.
pub fn compute_s(data: &LabeledDataset) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(data.len(), 2);
    for (i, x) in data.curves().iter().enumerate() {
        s[(i, 0)] = x.integrate(psi1);
        s[(i, 1)] = x.integrate(psi2);
    }
    s
}

/// `R`: `r_ij = ∬ x_i(t) K(t, s) x_j(s) ds dt` by double quadrature,
/// symmetrized after assembly.
pub fn compute_r(data: &LabeledDataset) -> DMatrix<f64> {
    compute_r_with(data, &kernel_matrix(data.grid()))
}

fn weighted_values(data: &LabeledDataset) -> DMatrix<f64> {
    let w = data.grid().weights();
    DMatrix::from_fn(data.len(), w.len(), |i, a| {
        w[a] * data.curves()[i].values()[a]
    })
}

fn compute_r_with(data: &LabeledDataset, kernel_grid: &DMatrix<f64>) -> DMatrix<f64> {
    let xw = weighted_values(data);
    let r = &xw * kernel_grid * xw.transpose();
    (&r + r.transpose()) * 0.5
}

/// Kernel inner products of a new curve against each training curve:
/// `r̃_j = ∬ x̃(t) K(t, s) x_j(s) ds dt`. The new curve is resampled onto the
/// training grid first.
pub fn cross_gram(
    train: &[SampledCurve],
    kernel_grid: &DMatrix<f64>,
    new_curve: &SampledCurve,
) -> Result<DVector<f64>> {
    let grid = train
        .first()
        .ok_or_else(|| Error::InvalidData("no training curves".into()))?
        .grid();
    let x = new_curve.resample(grid)?;
    let w = grid.weights();
    // v_b = Σ_a w_a x̃(t_a) K(t_a, t_b)
    let m = grid.len();
    let mut v = vec![0.0; m];
    for a in 0..m {
        let wa = w[a] * x.values()[a];
        if wa == 0.0 {
            continue;
        }
        for b in 0..m {
            v[b] += wa * kernel_grid[(a, b)];
        }
    }
    let mut out = DVector::zeros(train.len());
    for (j, xj) in train.iter().enumerate() {
        let mut acc = 0.0;
        for b in 0..m {
            acc += v[b] * w[b] * xj.values()[b];
        }
        out[j] = acc;
    }
    Ok(out)
}

/// `(∫ x, ∫ x(t)(t-0.5) dt)` for a single curve, resampled onto `grid`.
pub fn s_row(grid: &Arc<Grid>, curve: &SampledCurve) -> Result<[f64; 2]> {
    let x = curve.resample(grid)?;
    Ok([x.integrate(psi1), x.integrate(psi2)])
}

/// The operator `(Kf)(t) = ∫ K(t, s) f(s) ds` under quadrature on f's grid.
/// Returns a callable usable at any `t` in `[0, 1]`.
pub fn apply_kernel_operator(f: &SampledCurve) -> impl Fn(f64) -> f64 {
    let coeffs: Vec<(f64, f64)> = f
        .grid()
        .points()
        .iter()
        .zip(f.grid().weights())
        .zip(f.values())
        .map(|((&t, &w), &v)| (t, w * v))
        .collect();
    move |t: f64| coeffs.iter().map(|&(s, wv)| wv * kernel(t, s)).sum()
}
