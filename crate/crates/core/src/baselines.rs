//! Comparison predictors that ignore machine benchmarks: a mean-ratio
//! estimator and two nearest-point estimators with different fallbacks for
//! uncorrelated tasks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::predictor::{pearson, CORRELATION_THRESHOLD};
use crate::trace::TaskRun;

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveModel {
    pub task: String,
    /// Mean of runtime / input size over the training runs (s per byte).
    pub mean_ratio: f64,
}

impl NaiveModel {
    /// Runs with zero input size carry no ratio and are skipped.
    pub fn fit(runs: &[TaskRun]) -> Result<Self> {
        let first = runs.first().ok_or(Error::EmptyInput)?;
        let ratios: Vec<f64> = runs
            .iter()
            .filter(|r| r.input_size_uncompressed > 0)
            .map(|r| r.runtime_secs() / r.input_size_uncompressed as f64)
            .collect();
        let mean_ratio = if ratios.is_empty() {
            0.0
        } else {
            ratios.iter().sum::<f64>() / ratios.len() as f64
        };
        Ok(NaiveModel {
            task: first.task.clone(),
            mean_ratio,
        })
    }
}

pub fn naive_predict(m: &NaiveModel, input_size: f64) -> f64 {
    m.mean_ratio * input_size
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnlineVariant {
    /// Mean runtime for uncorrelated tasks.
    M,
    /// One draw from the better of a Normal and a Gamma fit.
    P,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingTuple {
    pub input_size: f64,
    pub io_read: f64,
    pub io_write: f64,
    pub runtime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineModel {
    pub task: String,
    pub training: Vec<TrainingTuple>,
    pub variant: OnlineVariant,
    pub correlation: f64,
}

impl OnlineModel {
    pub fn fit(runs: &[TaskRun], variant: OnlineVariant) -> Result<Self> {
        let first = runs.first().ok_or(Error::EmptyInput)?;
        let training: Vec<TrainingTuple> = runs
            .iter()
            .map(|r| TrainingTuple {
                input_size: r.input_size_uncompressed as f64,
                io_read: r.io_read as f64,
                io_write: r.io_write as f64,
                runtime: r.runtime_secs(),
            })
            .collect();
        let correlation = if training.len() >= 2 {
            let xs: Vec<f64> = training.iter().map(|t| t.input_size).collect();
            let ys: Vec<f64> = training.iter().map(|t| t.runtime).collect();
            pearson(&xs, &ys)?
        } else {
            0.0
        };
        Ok(OnlineModel {
            task: first.task.clone(),
            training,
            variant,
            correlation,
        })
    }

    fn runtimes(&self) -> Vec<f64> {
        self.training.iter().map(|t| t.runtime).collect()
    }
}

pub fn online_predict(m: &OnlineModel, input_size: f64, seed: u64) -> f64 {
    if m.correlation > CORRELATION_THRESHOLD {
        let nearest = m
            .training
            .iter()
            .min_by(|a, b| {
                let da = (a.input_size - input_size).abs();
                let db = (b.input_size - input_size).abs();
                da.total_cmp(&db).then(a.input_size.total_cmp(&b.input_size))
            })
            .expect("at least one training tuple");
        if nearest.input_size == 0.0 {
            return nearest.runtime;
        }
        return nearest.runtime * (input_size / nearest.input_size);
    }
    let runtimes = m.runtimes();
    let mean = runtimes.iter().sum::<f64>() / runtimes.len() as f64;
    match m.variant {
        OnlineVariant::M => mean,
        OnlineVariant::P => sample_fitted(&runtimes, seed),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FittedDistribution {
    Normal { mean: f64, std_dev: f64 },
    Gamma { shape: f64, scale: f64 },
    /// Zero-variance sample; the distribution is a point mass.
    Degenerate { value: f64 },
}

pub fn normal_mle(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn normal_log_likelihood(xs: &[f64], mean: f64, std_dev: f64) -> f64 {
    let var = std_dev * std_dev;
    xs.iter()
        .map(|x| -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - mean).powi(2) / (2.0 * var))
        .sum()
}

pub fn gamma_log_likelihood(xs: &[f64], shape: f64, scale: f64) -> f64 {
    xs.iter()
        .map(|x| (shape - 1.0) * x.ln() - x / scale - shape * scale.ln() - ln_gamma(shape))
        .sum()
}

fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x
        + x2 / 2.0
        + (1.0 / x) * x2 * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)))
}

/// Gamma maximum-likelihood fit via Newton iteration on the shape.
/// Returns `None` for samples with zero variance or nonpositive entries.
pub fn gamma_mle(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.iter().any(|&x| x <= 0.0) {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let mean_log = xs.iter().map(|x| x.ln()).sum::<f64>() / n;
    let s = mean.ln() - mean_log;
    if !(s > 0.0) {
        return None;
    }
    let mut k = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    for _ in 0..200 {
        let f = k.ln() - digamma(k) - s;
        let df = 1.0 / k - trigamma(k);
        let step = f / df;
        let next = if k - step > 0.0 { k - step } else { k / 2.0 };
        let done = (next - k).abs() <= 1e-10 * k.max(1.0);
        k = next;
        if done {
            break;
        }
    }
    Some((k, mean / k))
}

/// Picks the Normal or Gamma fit with the higher log-likelihood.
pub fn select_distribution(xs: &[f64]) -> FittedDistribution {
    let (mean, std_dev) = normal_mle(xs);
    if std_dev == 0.0 {
        return FittedDistribution::Degenerate { value: mean };
    }
    let normal_ll = normal_log_likelihood(xs, mean, std_dev);
    match gamma_mle(xs) {
        Some((shape, scale)) if gamma_log_likelihood(xs, shape, scale) > normal_ll => {
            FittedDistribution::Gamma { shape, scale }
        }
        _ => FittedDistribution::Normal { mean, std_dev },
    }
}

fn sample_fitted(runtimes: &[f64], seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floor = runtimes.iter().copied().fold(f64::INFINITY, f64::min);
    let draw = match select_distribution(runtimes) {
        FittedDistribution::Degenerate { value } => return value,
        FittedDistribution::Normal { mean, std_dev } => rand_distr::Normal::new(mean, std_dev)
            .expect("finite normal")
            .sample(&mut rng),
        FittedDistribution::Gamma { shape, scale } => rand_distr::Gamma::new(shape, scale)
            .expect("positive gamma parameters")
            .sample(&mut rng),
    };
    if draw > 0.0 {
        draw
    } else {
        floor
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::{Continuous, Gamma, Normal};

    const GB: f64 = 1e9;

    fn runs(pairs: &[(f64, f64)]) -> Vec<TaskRun> {
        pairs
            .iter()
            .enumerate()
            .map(|(i, &(d, rt))| TaskRun {
                workflow: "w".into(),
                task: "t".into(),
                instance_id: i.to_string(),
                machine: "Local".into(),
                input_size_uncompressed: d as u64,
                input_size_compressed: None,
                runtime_ms: (rt * 1000.0).round() as u64,
                io_read: d as u64,
                io_write: 0,
                cpu_utilization: None,
                peak_memory: None,
            })
            .collect()
    }

    #[test]
    fn naive_examples() {
        let m = NaiveModel::fit(&runs(&[(10.0 * GB, 100.0), (20.0 * GB, 200.0)])).unwrap();
        assert!((naive_predict(&m, 30.0 * GB) - 300.0).abs() < 1e-9);
        assert_eq!(naive_predict(&m, 0.0), 0.0);

        let m = NaiveModel::fit(&runs(&[(GB, 10.0), (2.0 * GB, 30.0)])).unwrap();
        // (10 + 15) / 2 = 12.5 s per GB
        assert!((m.mean_ratio * GB - 12.5).abs() < 1e-9);
        assert!((naive_predict(&m, 4.0 * GB) - 50.0).abs() < 1e-9);
        assert!(NaiveModel::fit(&[]).is_err());
    }

    #[test]
    fn online_correlated_scales_nearest() {
        let m = OnlineModel::fit(&runs(&[(1.0, 5.0), (2.0, 10.0), (4.0, 20.0)]), OnlineVariant::M).unwrap();
        assert!(m.correlation > 0.99);
        assert!((online_predict(&m, 3.0, 0) - 15.0).abs() < 1e-12);
        assert_eq!(online_predict(&m, 4.0, 0), 20.0);
    }

    #[test]
    fn online_m_uses_mean() {
        let m = OnlineModel::fit(&runs(&[(1.0, 10.0), (2.0, 30.0), (3.0, 20.0), (4.0, 20.0)]), OnlineVariant::M)
            .unwrap();
        assert!(m.correlation <= CORRELATION_THRESHOLD);
        let m3 = OnlineModel::fit(&runs(&[(5.0, 10.0), (5.0, 20.0), (5.0, 30.0)]), OnlineVariant::M).unwrap();
        assert_eq!(online_predict(&m3, 123.0, 9), 20.0);
        assert_eq!(online_predict(&m, 1e6, 1), 20.0);
    }

    #[test]
    fn online_p_is_seed_deterministic() {
        let m = OnlineModel::fit(&runs(&[(5.0, 10.0), (5.0, 14.0), (5.0, 30.0), (5.0, 11.0)]), OnlineVariant::P)
            .unwrap();
        let a = online_predict(&m, 50.0, 42);
        assert_eq!(a, online_predict(&m, 50.0, 42));
        assert!(a > 0.0);
        let draws: Vec<f64> = (0..50).map(|s| online_predict(&m, 50.0, s)).collect();
        assert!(draws.iter().any(|d| *d != a));
    }

    #[test]
    fn degenerate_sample_uses_mean() {
        let m = OnlineModel::fit(&runs(&[(1.0, 7.0), (1.0, 7.0), (1.0, 7.0)]), OnlineVariant::P).unwrap();
        assert_eq!(online_predict(&m, 10.0, 3), 7.0);
        assert_eq!(gamma_mle(&[7.0, 7.0]), None);
    }

    #[test]
    fn selection_matches_independent_likelihoods() {
        let samples: [&[f64]; 4] = [
            &[10.0, 14.0, 30.0, 11.0],
            &[100.0, 101.0, 99.0, 100.5, 99.5],
            &[1.0, 1.5, 2.0, 9.0, 30.0],
            &[50.0, 60.0, 55.0],
        ];
        for xs in samples {
            let (mu, sd) = normal_mle(xs);
            let normal_ll: f64 = xs.iter().map(|x| Normal::new(mu, sd).unwrap().ln_pdf(*x)).sum();
            let (k, theta) = gamma_mle(xs).unwrap();
            let gamma = Gamma::new(k, 1.0 / theta).unwrap();
            let gamma_ll: f64 = xs.iter().map(|x| gamma.ln_pdf(*x)).sum();
            assert!((normal_ll - normal_log_likelihood(xs, mu, sd)).abs() < 1e-9);
            assert!((gamma_ll - gamma_log_likelihood(xs, k, theta)).abs() < 1e-9);

            // the Newton shape is a likelihood maximum along the shape axis
            // with the scale profiled out
            let profile = |k: f64| {
                let th = mu / k;
                xs.iter().map(|x| Gamma::new(k, 1.0 / th).unwrap().ln_pdf(*x)).sum::<f64>()
            };
            for dk in [0.99, 1.01] {
                assert!(profile(k * dk) <= gamma_ll + 1e-12);
            }

            let picked = select_distribution(xs);
            if gamma_ll > normal_ll {
                assert!(matches!(picked, FittedDistribution::Gamma { .. }), "{xs:?}");
            } else {
                assert!(matches!(picked, FittedDistribution::Normal { .. }), "{xs:?}");
            }
        }
    }

    #[test]
    fn trigamma_reference_values() {
        // psi'(1) = pi^2 / 6, psi'(1/2) = pi^2 / 2
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((trigamma(1.0) - pi2 / 6.0).abs() < 1e-10);
        assert!((trigamma(0.5) - pi2 / 2.0).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn naive_scale_equivariant(rt in proptest::collection::vec((1.0f64..1e3, 1.0f64..1e4), 1..6), q in 0.0f64..1e6) {
            let pairs: Vec<(f64, f64)> = rt.iter().map(|&(d, r)| (d.round().max(1.0), r)).collect();
            let m = NaiveModel::fit(&runs(&pairs)).unwrap();
            let a = naive_predict(&m, q);
            let b = naive_predict(&m, 2.0 * q);
            prop_assert!((b - 2.0 * a).abs() <= 1e-9 * b.abs().max(1.0));
        }

        #[test]
        fn correlated_query_at_training_point(slope in 0.5f64..50.0, sizes in proptest::collection::btree_set(1u32..10_000, 3..8), pick in any::<prop::sample::Index>()) {
            let pairs: Vec<(f64, f64)> = sizes.iter().map(|&d| (f64::from(d), slope * f64::from(d))).collect();
            let rs = runs(&pairs);
            let m = OnlineModel::fit(&rs, OnlineVariant::P).unwrap();
            prop_assume!(m.correlation > CORRELATION_THRESHOLD);
            let t = m.training[pick.index(m.training.len())];
            prop_assert_eq!(online_predict(&m, t.input_size, 7), t.runtime);
        }
    }
}
