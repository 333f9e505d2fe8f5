//! Replicated simulation benchmark: draw a training set, tune by
//! cross-validation, fit at the selected `(q, λ)`, and score a large fresh
//! test set. Repeats over independent replications and reports the mean
//! test error with spread, next to the Monte Carlo Bayes error for the same
//! scenario.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datagen::{bayes_error, generate, ScenarioSpec};
use crate::error::{Error, Result};
use crate::model::DwdModel;
use crate::solver::SolverConfig;
use crate::tuning::{cross_validate, TuningGrid};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub scenario: u8,
    pub with_scalars: bool,
    pub n_train: usize,
    pub n_test: usize,
    pub replications: usize,
    pub grid: TuningGrid,
    pub seed: u64,
    pub jobs: usize,
    /// Bayes-error Monte Carlo sample count; 0 skips the reference column.
    pub bayes_mc_samples: usize,
}

impl BenchmarkConfig {
    pub fn new(scenario: u8, with_scalars: bool, n_train: usize, seed: u64) -> Result<Self> {
        if !(scenario == 1 || scenario == 2) {
            return Err(Error::InvalidData(format!(
                "scenario must be 1 or 2, got {scenario}"
            )));
        }
        Ok(Self {
            scenario,
            with_scalars,
            n_train,
            n_test: 500,
            replications: 50,
            grid: TuningGrid::default(),
            seed,
            jobs: 1,
            bayes_mc_samples: 200_000,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    pub seed: u64,
    pub test_error: f64,
    pub selected_q: f64,
    pub selected_lambda: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub replications: Vec<ReplicationOutcome>,
    pub mean_error: f64,
    /// Standard deviation of the per-replication test errors.
    pub sd_across_replications: f64,
    /// Standard error of the mean: `sd_across_replications / sqrt(B)`.
    pub se_of_mean: f64,
    /// Monte Carlo Bayes error and its standard error, when requested.
    pub bayes_error: Option<(f64, f64)>,
    pub wall_clock_secs: f64,
}

fn run_replication(cfg: &BenchmarkConfig, rep: usize) -> Result<ReplicationOutcome> {
    // distinct, reproducible seed per replication and role
    let rep_seed = cfg
        .seed
        .wrapping_mul(0x100_0000_01B3)
        .wrapping_add(rep as u64);
    let train_spec = ScenarioSpec::new(
        cfg.scenario,
        cfg.n_train,
        cfg.with_scalars,
        rep_seed.wrapping_mul(2),
    )?;
    let test_spec = ScenarioSpec::new(
        cfg.scenario,
        cfg.n_test,
        cfg.with_scalars,
        rep_seed.wrapping_mul(2).wrapping_add(1),
    )?;
    let train = generate(&train_spec)?.data;
    let test = generate(&test_spec)?.data;

    // looser stopping inside the tuning sweep; full precision for the final fit
    let cv_cfg = SolverConfig::new(1.0, 1e-4)?.with_stopping(1e-6, 500);
    let cv = cross_validate(&train, &cfg.grid, &cv_cfg, rep_seed)?;
    let model = DwdModel::fit(&train, cv.best_q, cv.best_lambda)?;

    let mut wrong = 0usize;
    for i in 0..test.len() {
        let z = test
            .scalars()
            .map(|m| m.row(i).iter().copied().collect::<Vec<f64>>());
        let pred = model.predict(&test.curves()[i], z.as_deref())?;
        if pred != test.labels()[i] as i64 {
            wrong += 1;
        }
    }
    Ok(ReplicationOutcome {
        seed: rep_seed,
        test_error: wrong as f64 / test.len() as f64,
        selected_q: cv.best_q,
        selected_lambda: cv.best_lambda,
        converged: model.diagnostics.converged,
    })
}

pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if cfg.replications == 0 {
        return Err(Error::InvalidData("replications must be at least 1".into()));
    }
    cfg.grid.validate(cfg.n_train)?;
    let start = Instant::now();
    let jobs = cfg.jobs.max(1).min(cfg.replications);

    let outcomes: Vec<ReplicationOutcome> = if jobs == 1 {
        let mut out = Vec::with_capacity(cfg.replications);
        for rep in 0..cfg.replications {
            out.push(run_replication(cfg, rep)?);
        }
        out
    } else {
        let mut slots: Vec<Option<Result<ReplicationOutcome>>> =
            (0..cfg.replications).map(|_| None).collect();
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for worker in 0..jobs {
                let cfg_ref = &cfg;
                handles.push(scope.spawn(move || {
                    let mut local = Vec::new();
                    let mut rep = worker;
                    while rep < cfg_ref.replications {
                        local.push((rep, run_replication(cfg_ref, rep)));
                        rep += jobs;
                    }
                    local
                }));
            }
            for h in handles {
                for (rep, res) in h.join().expect("benchmark worker panicked") {
                    slots[rep] = Some(res);
                }
            }
        });
        slots
            .into_iter()
            .map(|s| s.expect("replication slot unfilled"))
            .collect::<Result<Vec<_>>>()?
    };

    let b = outcomes.len() as f64;
    let mean = outcomes.iter().map(|o| o.test_error).sum::<f64>() / b;
    let var = if outcomes.len() > 1 {
        outcomes
            .iter()
            .map(|o| (o.test_error - mean).powi(2))
            .sum::<f64>()
            / (b - 1.0)
    } else {
        0.0
    };
    let sd = var.sqrt();

    let bayes = (cfg.bayes_mc_samples > 0).then(|| {
        let spec = ScenarioSpec::new(cfg.scenario, 1, cfg.with_scalars, cfg.seed)
            .expect("validated above");
        bayes_error(&spec, cfg.bayes_mc_samples)
    });

    Ok(BenchmarkReport {
        config: cfg.clone(),
        replications: outcomes,
        mean_error: mean,
        sd_across_replications: sd,
        se_of_mean: sd / b.sqrt(),
        bayes_error: bayes,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_grid() -> TuningGrid {
        TuningGrid::new(vec![1.0], vec![1e-5, 1e-3], 3).unwrap()
    }

    #[test]
    fn report_statistics_consistent() {
        let mut cfg = BenchmarkConfig::new(2, false, 40, 11).unwrap();
        cfg.n_test = 100;
        cfg.replications = 3;
        cfg.grid = tiny_grid();
        cfg.bayes_mc_samples = 5_000;
        let report = run_benchmark(&cfg).unwrap();
        assert_eq!(report.replications.len(), 3);
        let mean = report
            .replications
            .iter()
            .map(|o| o.test_error)
            .sum::<f64>()
            / 3.0;
        assert!((report.mean_error - mean).abs() < 1e-12);
        assert!(
            (report.se_of_mean - report.sd_across_replications / 3f64.sqrt()).abs() < 1e-12
        );
        let (bayes, se) = report.bayes_error.unwrap();
        assert!(bayes > 0.0 && bayes < 0.5 && se > 0.0);
        for o in &report.replications {
            assert!((0.0..=1.0).contains(&o.test_error));
            assert!(o.converged);
        }
    }

    #[test]
    fn deterministic_across_runs_and_jobs() {
        let mut cfg = BenchmarkConfig::new(2, true, 30, 5).unwrap();
        cfg.n_test = 60;
        cfg.replications = 2;
        cfg.grid = tiny_grid();
        cfg.bayes_mc_samples = 0;
        let a = run_benchmark(&cfg).unwrap();
        let b = run_benchmark(&cfg).unwrap();
        assert_eq!(
            a.replications.iter().map(|o| o.test_error).collect::<Vec<_>>(),
            b.replications.iter().map(|o| o.test_error).collect::<Vec<_>>()
        );
        cfg.jobs = 2;
        let c = run_benchmark(&cfg).unwrap();
        assert_eq!(
            a.replications.iter().map(|o| o.test_error).collect::<Vec<_>>(),
            c.replications.iter().map(|o| o.test_error).collect::<Vec<_>>()
        );
    }

    #[test]
    fn zero_replications_rejected() {
        let mut cfg = BenchmarkConfig::new(1, false, 30, 1).unwrap();
        cfg.replications = 0;
        assert!(run_benchmark(&cfg).is_err());
    }
}
