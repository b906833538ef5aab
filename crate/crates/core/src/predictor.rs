//! Per-task runtime models fitted on local profiling runs.
//!
//! Each task gets a correlation gate on (uncompressed input size, runtime).
//! Strongly correlated tasks get a conjugate Bayesian linear regression with
//! a zero-mean isotropic Gaussian prior; the rest predict their median runtime.
//!
//! The regression works in standardized coordinates: the feature and the
//! target are both shifted to zero mean and scaled to unit variance, so the
//! prior variance is scale-free and the intercept is not dragged towards 0 s.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;
use crate::trace::{MachineId, TaskRun};

pub const CORRELATION_THRESHOLD: f64 = 0.75;
pub const DEFAULT_PRIOR_VARIANCE: f64 = 1.0;
pub const MIN_TRAINING_RUNS: usize = 3;
/// Relative floor on the noise standard deviation, as a fraction of mean runtime.
pub const NOISE_FLOOR_FRACTION: f64 = 0.01;

/// Sample Pearson correlation. Zero-variance inputs yield 0.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(Error::TooFewPoints(xs.len()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateDecision {
    Regression,
    MedianFallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationGate {
    pub coefficient: f64,
    pub threshold: f64,
    pub decision: GateDecision,
}

impl CorrelationGate {
    pub fn evaluate(xs: &[f64], ys: &[f64], threshold: f64) -> Result<Self> {
        let coefficient = pearson(xs, ys)?;
        let decision = if coefficient > threshold {
            GateDecision::Regression
        } else {
            GateDecision::MedianFallback
        };
        Ok(CorrelationGate {
            coefficient,
            threshold,
            decision,
        })
    }
}

/// Posterior of a one-feature Bayesian linear regression.
///
/// `mean` and `covariance` live in standardized space (`z` for the feature,
/// `t` for the runtime); `noise_variance` is in seconds squared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlrPosterior {
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    pub noise_variance: f64,
    pub prior_variance: f64,
    pub feature_mean: f64,
    pub feature_scale: f64,
    pub target_mean: f64,
    pub target_scale: f64,
}

fn mean_and_scale(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Maximum-likelihood residual variance of an ordinary least-squares line.
fn ols_residual_variance(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (my + slope * (x - mx));
            r * r
        })
        .sum();
    rss / n
}

/// Noise variance estimate used for fitting: OLS residual variance, floored
/// at `(NOISE_FLOOR_FRACTION * mean runtime)^2`.
pub fn estimate_noise_variance(xs: &[f64], ys: &[f64]) -> f64 {
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let floor = (NOISE_FLOOR_FRACTION * my).powi(2);
    ols_residual_variance(xs, ys).max(floor).max(f64::MIN_POSITIVE)
}

fn inverse_2x2(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ]
}

/// Conjugate posterior for runtimes `ys` (seconds) over input sizes `xs`.
/// Both sequences need nonzero variance.
pub fn fit_blr(xs: &[f64], ys: &[f64], prior_variance: f64) -> Result<BlrPosterior> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(Error::TooFewPoints(xs.len()));
    }
    let (feature_mean, feature_scale) = mean_and_scale(xs);
    let (target_mean, target_scale) = mean_and_scale(ys);
    if feature_scale == 0.0 || target_scale == 0.0 {
        return Err(Error::MixedTasks(
            "regression needs varying input sizes and runtimes".into(),
        ));
    }
    let noise_variance = estimate_noise_variance(xs, ys);
    let noise_t = noise_variance / (target_scale * target_scale);

    // Gram matrix and moment vector of the [1, z] design in standardized space.
    let mut gram = [[0.0; 2]; 2];
    let mut moment = [0.0; 2];
    for (x, y) in xs.iter().zip(ys) {
        let z = (x - feature_mean) / feature_scale;
        let t = (y - target_mean) / target_scale;
        let phi = [1.0, z];
        for i in 0..2 {
            moment[i] += phi[i] * t;
            for j in 0..2 {
                gram[i][j] += phi[i] * phi[j];
            }
        }
    }
    let mut precision = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            precision[i][j] = gram[i][j] / noise_t;
        }
        precision[i][i] += 1.0 / prior_variance;
    }
    let covariance = inverse_2x2(precision);
    let mut mean = [0.0; 2];
    for (i, m) in mean.iter_mut().enumerate() {
        *m = (covariance[i][0] * moment[0] + covariance[i][1] * moment[1]) / noise_t;
    }
    // Symmetrize away rounding asymmetry.
    let off = 0.5 * (covariance[0][1] + covariance[1][0]);
    let covariance = [[covariance[0][0], off], [off, covariance[1][1]]];

    Ok(BlrPosterior {
        mean,
        covariance,
        noise_variance,
        prior_variance,
        feature_mean,
        feature_scale,
        target_mean,
        target_scale,
    })
}

impl BlrPosterior {
    /// Posterior mean mapped back to `runtime = intercept + slope * size`.
    pub fn original_coefficients(&self) -> (f64, f64) {
        let slope = self.target_scale * self.mean[1] / self.feature_scale;
        let intercept =
            self.target_mean + self.target_scale * self.mean[0] - slope * self.feature_mean;
        (intercept, slope)
    }

    /// Predictive mean and variance (seconds, seconds squared) at `size`.
    pub fn predictive(&self, size: f64) -> (f64, f64) {
        let z = (size - self.feature_mean) / self.feature_scale;
        let phi = [1.0, z];
        let mean_t = phi[0] * self.mean[0] + phi[1] * self.mean[1];
        let mut quad = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                quad += phi[i] * self.covariance[i][j] * phi[j];
            }
        }
        let point = self.target_mean + self.target_scale * mean_t;
        let variance = self.noise_variance + self.target_scale * self.target_scale * quad;
        (point, variance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelVariant {
    Blr(BlrPosterior),
    Median { runtime_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskModel {
    pub workflow: String,
    pub task: String,
    pub machine: MachineId,
    pub variant: ModelVariant,
    pub training_count: usize,
    pub correlation: f64,
    pub min_runtime_s: f64,
}

impl TaskModel {
    pub fn is_regression(&self) -> bool {
        matches!(self.variant, ModelVariant::Blr(_))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub prior_variance: f64,
    pub threshold: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            prior_variance: DEFAULT_PRIOR_VARIANCE,
            threshold: CORRELATION_THRESHOLD,
        }
    }
}

pub fn fit_task_model(runs: &[TaskRun]) -> Result<TaskModel> {
    fit_task_model_with(runs, FitOptions::default())
}

pub fn fit_task_model_with(runs: &[TaskRun], opts: FitOptions) -> Result<TaskModel> {
    let first = runs.first().ok_or_else(|| Error::TooFewRuns {
        task: String::new(),
        got: 0,
    })?;
    if let Some(other) = runs.iter().find(|r| {
        r.task != first.task || r.workflow != first.workflow || r.machine != first.machine
    }) {
        return Err(Error::MixedTasks(format!(
            "{}/{}@{} vs {}/{}@{}",
            first.workflow, first.task, first.machine, other.workflow, other.task, other.machine
        )));
    }
    if runs.len() < MIN_TRAINING_RUNS {
        return Err(Error::TooFewRuns {
            task: first.task.clone(),
            got: runs.len(),
        });
    }

    let xs: Vec<f64> = runs.iter().map(|r| r.input_size_uncompressed as f64).collect();
    let ys: Vec<f64> = runs.iter().map(TaskRun::runtime_secs).collect();
    let gate = CorrelationGate::evaluate(&xs, &ys, opts.threshold)?;
    let variant = match gate.decision {
        GateDecision::Regression => ModelVariant::Blr(fit_blr(&xs, &ys, opts.prior_variance)?),
        GateDecision::MedianFallback => ModelVariant::Median {
            runtime_s: stats::median(&ys).expect("nonempty"),
        },
    };
    Ok(TaskModel {
        workflow: first.workflow.clone(),
        task: first.task.clone(),
        machine: first.machine.clone(),
        variant,
        training_count: runs.len(),
        correlation: gate.coefficient,
        min_runtime_s: ys.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub confidence: f64,
    pub machine: MachineId,
}

/// Predicts the runtime of `model`'s task on the machine it was trained on.
///
/// Panics if `confidence` is outside (0, 1).
pub fn predict_local(model: &TaskModel, input_size: f64, confidence: f64) -> Prediction {
    let z = stats::two_sided_z(confidence);
    let (point, lower, upper) = match &model.variant {
        ModelVariant::Median { runtime_s } => (*runtime_s, *runtime_s, *runtime_s),
        ModelVariant::Blr(post) => {
            let (mut point, variance) = post.predictive(input_size);
            let half = z * variance.sqrt();
            let (mut lower, mut upper) = (point - half, point + half);
            if point <= 0.0 {
                point = model.min_runtime_s;
            }
            lower = lower.clamp(0.0, point);
            upper = upper.max(point);
            (point, lower, upper)
        }
    };
    Prediction {
        point,
        lower,
        upper,
        confidence,
        machine: model.machine.clone(),
    }
}
