//! Sample statistics, the z-score gate and the deterministic trial runner.

use rayon::prelude::*;
use serde::Serialize;

use crate::rng::SeedPath;

/// Statistical checks fail when |z| exceeds this.
pub const Z_GATE: f64 = 4.0;

/// A Monte-Carlo estimate with its standard error and analytic target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub label: String,
    pub estimate: f64,
    pub se: f64,
    pub trials: usize,
    pub seed: String,
    pub target: Option<f64>,
}

impl McEstimate {
    pub fn new(label: &str, estimate: f64, se: f64, trials: usize, seed: &SeedPath) -> Self {
        Self {
            label: label.to_owned(),
            estimate,
            se,
            trials,
            seed: seed.to_string(),
            target: None,
        }
    }

    /// Mean and standard error of i.i.d. samples.
    pub fn from_samples(label: &str, samples: &[f64], seed: &SeedPath) -> Self {
        let (mean, se) = mean_se(samples);
        Self::new(label, mean, se, samples.len(), seed)
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self
    }

    /// (estimate - target)/se. Zero when estimate equals target exactly.
    pub fn z(&self) -> Option<f64> {
        let target = self.target?;
        let diff = self.estimate - target;
        if diff == 0.0 {
            Some(0.0)
        } else {
            Some(diff / self.se)
        }
    }

    pub fn relative_error(&self) -> Option<f64> {
        self.target.map(|t| (self.estimate - t).abs() / t.abs())
    }

    pub fn within_sigmas(&self, k: f64) -> bool {
        self.z().is_some_and(|z| z.abs() <= k)
    }

    pub fn within_relative(&self, tol: f64) -> bool {
        self.relative_error().is_some_and(|e| e <= tol)
    }
}

/// Sample mean and standard error (sample std / √n).
pub fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

/// Standard error of a statistic from contiguous batch estimates.
pub fn batch_se<T>(items: &[T], batches: usize, stat: impl Fn(&[T]) -> f64) -> f64 {
    let nb = batches.min(items.len()).max(1);
    if nb < 2 {
        return f64::INFINITY;
    }
    let size = items.len() / nb;
    let values: Vec<f64> = (0..nb)
        .map(|b| {
            let end = if b + 1 == nb { items.len() } else { (b + 1) * size };
            stat(&items[b * size..end])
        })
        .collect();
    mean_se(&values).1
}

/// Settings shared by all experiments.
#[derive(Debug, Clone)]
pub struct McRun {
    pub seed: SeedPath,
    pub trials: usize,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
}

impl McRun {
    pub fn new(master: u64, trials: usize) -> Self {
        Self {
            seed: SeedPath::new(master),
            trials,
            workers: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_trials(&self, trials: usize) -> Self {
        Self {
            trials,
            ..self.clone()
        }
    }

    /// Runs `trial(i, path)` for i in 0..trials with path = seed/label/i.
    /// Output order is the trial order regardless of scheduling.
    pub fn map<T, F>(&self, label: &str, trial: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64, &SeedPath) -> T + Sync + Send,
    {
        let base = self.seed.child(label);
        let work = || {
            (0..self.trials as u64)
                .into_par_iter()
                .map(|i| trial(i, &base.index(i)))
                .collect::<Vec<T>>()
        };
        if self.workers == 0 {
            work()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .expect("thread pool")
                .install(work)
        }
    }

    pub fn label_path(&self, label: &str) -> SeedPath {
        self.seed.child(label)
    }
}
