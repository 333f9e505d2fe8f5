//! Synthetic two-scenario generator with ground truth.
//!
//! Curves are `X_i(t) = Σ_{j=1}^{50} ξ_ij ζ_j φ_j(t)` with uniform scores
//! `ξ_ij ~ U(-√3, √3)` (unit variance), decaying loadings
//! `ζ_j = (-1)^{j+1} j⁻¹`, and the cosine basis `φ_1 = 1`,
//! `φ_j(t) = √2 cos((j-1)πt)`. Labels follow a logistic model on the
//! discriminant `f(X, z) = α₀ + ∫Xβ + zᵀγ` with `α₀ = 0.1`; scenario 1 uses
//! `β(t) = e^{-t}` and `γ = (-0.5, 1)`, scenario 2 uses
//! `β = Σ 4(-1)^{j+1} j⁻² φ_j` and `γ = (-2, 3)`. Retaining the per-subject
//! `f` values makes Bayes-error oracles available to tests.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::curves::{Grid, LabeledDataset, SampledCurve};
use crate::error::{Error, Result};

pub const N_BASIS: usize = 50;
pub const ALPHA0: f64 = 0.1;

/// Which synthetic scenario to draw and at what size.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScenarioSpec {
    pub scenario: u8,
    pub n: usize,
    pub with_scalars: bool,
    /// Observation grid resolution; 50 uniform points by default.
    pub grid_size: usize,
    pub seed: u64,
    /// "Truncated normal with mean 0 and variance 1" is ambiguous: by
    /// default the parent normal is standard (so the truncated variable has
    /// variance ≈ 0.774); with this flag the parent is widened so the
    /// truncated variable itself has unit variance.
    #[serde(default)]
    pub unit_truncated_variance: bool,
}

impl ScenarioSpec {
    pub fn new(scenario: u8, n: usize, with_scalars: bool, seed: u64) -> Result<Self> {
        if !(scenario == 1 || scenario == 2) {
            return Err(Error::InvalidData(format!(
                "scenario must be 1 or 2, got {scenario}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidData("sample size must be at least 1".into()));
        }
        Ok(Self {
            scenario,
            n,
            with_scalars,
            grid_size: 50,
            seed,
            unit_truncated_variance: false,
        })
    }

    /// Switches to the reading where the truncated variable has variance 1.
    pub fn with_unit_truncated_variance(mut self) -> Self {
        self.unit_truncated_variance = true;
        self
    }

    fn z_parent_sigma(&self) -> f64 {
        if self.unit_truncated_variance {
            unit_variance_parent_sigma()
        } else {
            1.0
        }
    }
}

/// Parent standard deviation σ such that N(0, σ²) truncated to (-2, 2) has
/// variance exactly 1, found by bisection on a Simpson-rule moment integral.
pub fn unit_variance_parent_sigma() -> f64 {
    static SIGMA: OnceLock<f64> = OnceLock::new();
    *SIGMA.get_or_init(|| {
        let truncated_var = |sigma: f64| {
            // Simpson integration of x^k φ_σ(x) over (-2, 2)
            let m = 4000;
            let h = 4.0 / m as f64;
            let (mut mass, mut second) = (0.0, 0.0);
            for i in 0..=m {
                let x = -2.0 + i as f64 * h;
                let w = if i == 0 || i == m {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let dens = (-x * x / (2.0 * sigma * sigma)).exp();
                mass += w * dens;
                second += w * x * x * dens;
            }
            second / mass
        };
        let (mut lo, mut hi) = (1.0, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if truncated_var(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    })
}

/// `ζ_j = (-1)^{j+1} j⁻¹` for 1-based j.
pub fn zeta(j: usize) -> f64 {
    let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
    sign / j as f64
}

/// Cosine basis `φ_1 = 1`, `φ_j(t) = √2 cos((j-1)πt)` for 1-based j.
pub fn phi(j: usize, t: f64) -> f64 {
    if j == 1 {
        1.0
    } else {
        std::f64::consts::SQRT_2 * ((j - 1) as f64 * std::f64::consts::PI * t).cos()
    }
}

/// Coefficients of the true discriminant: `f = α₀ + Σ_j ξ_j b_coef_j + zᵀγ`
/// where `b_coef_j = ζ_j × (β's coefficient on φ_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminantCoeffs {
    pub alpha0: f64,
    /// Per-score coefficients `ζ_j b_j`, length [`N_BASIS`].
    pub score_coeffs: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl DiscriminantCoeffs {
    pub fn for_spec(spec: &ScenarioSpec) -> Self {
        let b = beta_basis_coeffs(spec.scenario);
        let score_coeffs = (0..N_BASIS).map(|i| zeta(i + 1) * b[i]).collect();
        let gamma = if spec.with_scalars {
            match spec.scenario {
                1 => vec![-0.5, 1.0],
                _ => vec![-2.0, 3.0],
            }
        } else {
            Vec::new()
        };
        Self {
            alpha0: ALPHA0,
            score_coeffs,
            gamma,
        }
    }

    /// All-zero discriminant (η ≡ 0.5 everywhere); useful as a degenerate
    /// oracle.
    pub fn null() -> Self {
        Self {
            alpha0: 0.0,
            score_coeffs: vec![0.0; N_BASIS],
            gamma: Vec::new(),
        }
    }

    pub fn evaluate(&self, xi: &[f64], z: &[f64]) -> f64 {
        let mut f = self.alpha0;
        for (x, c) in xi.iter().zip(&self.score_coeffs) {
            f += x * c;
        }
        for (zv, g) in z.iter().zip(&self.gamma) {
            f += zv * g;
        }
        f
    }
}

/// Projection coefficients `b_j = ∫ β(t) φ_j(t) dt` of the scenario's slope
/// function onto the cosine basis.
pub fn beta_basis_coeffs(scenario: u8) -> &'static [f64; N_BASIS] {
    static SCEN1: OnceLock<[f64; N_BASIS]> = OnceLock::new();
    static SCEN2: OnceLock<[f64; N_BASIS]> = OnceLock::new();
    match scenario {
        1 => SCEN1.get_or_init(|| {
            // project e^{-t} once at high resolution
            let m = 10_000;
            let h = 1.0 / m as f64;
            let mut out = [0.0; N_BASIS];
            for (idx, slot) in out.iter_mut().enumerate() {
                let j = idx + 1;
                let mut acc = 0.0;
                for i in 0..=m {
                    let t = i as f64 * h;
                    let w = if i == 0 || i == m { h / 2.0 } else { h };
                    acc += w * (-t).exp() * phi(j, t);
                }
                *slot = acc;
            }
            out
        }),
        _ => SCEN2.get_or_init(|| {
            let mut out = [0.0; N_BASIS];
            for (idx, slot) in out.iter_mut().enumerate() {
                let j = (idx + 1) as f64;
                let sign = if (idx + 1) % 2 == 1 { 1.0 } else { -1.0 };
                *slot = 4.0 * sign / (j * j);
            }
            out
        }),
    }
}

/// True discriminant value for given basis scores and scalar covariates.
pub fn true_discriminant(spec: &ScenarioSpec, xi: &[f64], z: &[f64]) -> f64 {
    DiscriminantCoeffs::for_spec(spec).evaluate(xi, z)
}

/// A generated sample together with its hidden truth.
#[derive(Debug, Clone)]
pub struct GeneratedSample {
    pub data: LabeledDataset,
    /// Per-subject true discriminant values `f(X_i, z_i)`.
    pub discriminant: Vec<f64>,
}

fn subject_rng(master: u64, subject: u64) -> ChaCha12Rng {
    // splitmix64 over (master, subject) gives independent per-subject streams
    let mut s = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(subject.wrapping_add(1)));
    s ^= s >> 30;
    s = s.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    s ^= s >> 27;
    s = s.wrapping_mul(0x94D0_49BB_1331_11EB);
    s ^= s >> 31;
    ChaCha12Rng::seed_from_u64(s)
}

fn draw_truncated_normal(rng: &mut ChaCha12Rng, parent_sigma: f64) -> f64 {
    // rejection from N(0, σ²) restricted to (-2, 2)
    loop {
        let v: f64 = StandardNormal.sample(rng);
        let v = v * parent_sigma;
        if v > -2.0 && v < 2.0 {
            return v;
        }
    }
}

/// Draws the dataset and retains the true discriminant per subject.
pub fn generate(spec: &ScenarioSpec) -> Result<GeneratedSample> {
    let coeffs = DiscriminantCoeffs::for_spec(spec);
    let grid = Grid::uniform(spec.grid_size);
    let p = if spec.with_scalars { 2 } else { 0 };
    let mut curves = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    let mut discriminant = Vec::with_capacity(spec.n);
    let mut scalars = (p > 0).then(|| DMatrix::zeros(spec.n, p));

    let z_sigma = spec.z_parent_sigma();
    for i in 0..spec.n {
        let mut rng = subject_rng(spec.seed, i as u64);
        let s3 = 3f64.sqrt();
        let xi: Vec<f64> = (0..N_BASIS).map(|_| rng.random_range(-s3..s3)).collect();
        let z: Vec<f64> = (0..p)
            .map(|_| draw_truncated_normal(&mut rng, z_sigma))
            .collect();

        let mut values = vec![0.0; spec.grid_size];
        for (j0, &x) in xi.iter().enumerate() {
            let lj = x * zeta(j0 + 1);
            for (v, &t) in values.iter_mut().zip(grid.points()) {
                *v += lj * phi(j0 + 1, t);
            }
        }
        let f = coeffs.evaluate(&xi, &z);
        let eta = logistic(f);
        let label = if rng.random_range(0.0..1.0) < eta { 1i8 } else { -1 };

        curves.push(SampledCurve::new(Arc::clone(&grid), values)?);
        labels.push(label);
        discriminant.push(f);
        if let Some(zm) = scalars.as_mut() {
            for (jz, &zv) in z.iter().enumerate() {
                zm[(i, jz)] = zv;
            }
        }
    }
    Ok(GeneratedSample {
        data: LabeledDataset::new(curves, labels, scalars)?,
        discriminant,
    })
}

pub fn logistic(f: f64) -> f64 {
    1.0 / (1.0 + (-f).exp())
}

/// Monte Carlo estimate of the Bayes error `E[min(η, 1-η)]` and the
/// standard error of the estimate.
pub fn bayes_error(spec: &ScenarioSpec, mc_samples: usize) -> (f64, f64) {
    bayes_error_from(
        &DiscriminantCoeffs::for_spec(spec),
        spec.z_parent_sigma(),
        spec.seed,
        mc_samples,
    )
}

/// Same oracle with explicit discriminant coefficients, allowing degenerate
/// overrides.
pub fn bayes_error_from(
    coeffs: &DiscriminantCoeffs,
    z_parent_sigma: f64,
    seed: u64,
    mc_samples: usize,
) -> (f64, f64) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xBAE5_ECC0);
    let s3 = 3f64.sqrt();
    let p = coeffs.gamma.len();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut xi = vec![0.0; N_BASIS];
    let mut z = vec![0.0; p];
    for _ in 0..mc_samples {
        for x in xi.iter_mut() {
            *x = rng.random_range(-s3..s3);
        }
        for zv in z.iter_mut() {
            *zv = draw_truncated_normal(&mut rng, z_parent_sigma);
        }
        let eta = logistic(coeffs.evaluate(&xi, &z));
        let v = eta.min(1.0 - eta);
        sum += v;
        sum_sq += v * v;
    }
    let n = mc_samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_unit_variance() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let s3 = 3f64.sqrt();
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let x: f64 = rng.random_range(-s3..s3);
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn mean_curve_near_zero() {
        let spec = ScenarioSpec::new(1, 10_000, false, 42).unwrap();
        let sample = generate(&spec).unwrap();
        let m = spec.grid_size;
        let mut mean = vec![0.0; m];
        for c in sample.data.curves() {
            for (acc, v) in mean.iter_mut().zip(c.values()) {
                *acc += v / spec.n as f64;
            }
        }
        let worst = mean.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        assert!(worst < 0.05, "worst mean {worst}");
    }

    #[test]
    fn scenario1_slope_at_zero() {
        // β(t) = e^{-t} reconstructed from its basis projection at t = 0
        let b = beta_basis_coeffs(1);
        let recon: f64 = (0..N_BASIS).map(|i| b[i] * phi(i + 1, 0.0)).sum();
        assert!((recon - 1.0).abs() < 1e-2, "β(0) ≈ {recon}");
        // first coefficient is ∫ e^{-t} dt = 1 - e^{-1}
        assert!((b[0] - (1.0 - (-1.0f64).exp())).abs() < 1e-8);
    }

    #[test]
    fn discriminant_point_values() {
        let spec1 = ScenarioSpec::new(1, 10, true, 0).unwrap();
        let zero_xi = [0.0; N_BASIS];
        assert!((true_discriminant(&spec1, &zero_xi, &[0.0, 0.0]) - 0.1).abs() < 1e-12);
        assert!((true_discriminant(&spec1, &zero_xi, &[1.0, 1.0]) - 0.6).abs() < 1e-12);

        let spec2 = ScenarioSpec::new(2, 10, false, 0).unwrap();
        let mut e1 = [0.0; N_BASIS];
        e1[0] = 1.0;
        assert!((true_discriminant(&spec2, &e1, &[]) - 4.1).abs() < 1e-12);
    }

    #[test]
    fn basis_orthonormality() {
        let m = 2000;
        let h = 1.0 / m as f64;
        for j in 1..=10 {
            for k in 1..=10 {
                let mut acc = 0.0;
                for i in 0..=m {
                    let t = i as f64 * h;
                    let w = if i == 0 || i == m { h / 2.0 } else { h };
                    acc += w * phi(j, t) * phi(k, t);
                }
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((acc - expect).abs() < 1e-6, "j={j} k={k} got {acc}");
            }
        }
    }

    #[test]
    fn label_frequency_matches_eta() {
        // regenerate one subject's label many times via fresh seeds at a
        // pinned (X, z): equivalent check through the full generator with
        // n = 1 and varying master seed would re-draw X, so verify the
        // logistic rule directly instead.
        let spec = ScenarioSpec::new(1, 2000, true, 7).unwrap();
        let sample = generate(&spec).unwrap();
        // aggregate check: empirical P(Y=1 | f in bucket) tracks logistic(f)
        let mut buckets = vec![(0usize, 0usize); 8];
        for (i, &f) in sample.discriminant.iter().enumerate() {
            let eta = logistic(f);
            let b = ((eta * 8.0) as usize).min(7);
            buckets[b].1 += 1;
            if sample.data.labels()[i] == 1 {
                buckets[b].0 += 1;
            }
        }
        for (b, &(pos, tot)) in buckets.iter().enumerate() {
            if tot < 50 {
                continue;
            }
            let center = (b as f64 + 0.5) / 8.0;
            let rate = pos as f64 / tot as f64;
            let se = (center * (1.0 - center) / tot as f64).sqrt();
            assert!(
                (rate - center).abs() < 4.0 * se + 0.0625,
                "bucket {b}: rate {rate} vs {center}"
            );
        }
    }

    #[test]
    fn seed_determinism_and_truth_sidecar() {
        let spec = ScenarioSpec::new(2, 30, true, 123).unwrap();
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.data.labels(), b.data.labels());
        assert_eq!(a.discriminant, b.discriminant);
        for (ca, cb) in a.data.curves().iter().zip(b.data.curves()) {
            assert_eq!(ca.values(), cb.values());
        }
        assert_eq!(a.data.scalars(), b.data.scalars());
    }

    #[test]
    fn null_discriminant_bayes_half() {
        let (err, se) = bayes_error_from(&DiscriminantCoeffs::null(), 1.0, 0, 10_000);
        assert_eq!(err, 0.5);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn truncated_normal_within_bounds() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let v = draw_truncated_normal(&mut rng, 1.0);
            assert!(v > -2.0 && v < 2.0);
        }
    }

    #[test]
    fn unit_truncated_variance_calibration() {
        let sigma = unit_variance_parent_sigma();
        assert!((sigma - 1.3779).abs() < 1e-3, "sigma {sigma}");
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let n = 500_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let v = draw_truncated_normal(&mut rng, sigma);
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01 && (var - 1.0).abs() < 0.01, "mean {mean} var {var}");
    }
}
