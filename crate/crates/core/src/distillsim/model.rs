//! Random-feature ridge models with a rationale head and an answer head.
//!
//! With rationale supervision the answer head reads `[s * phi(x), r_hat(x)]`,
//! where `r_hat` is the fitted rationale head and `s = sqrt(beta / (1 - beta))`.
//! Shrinking `s` raises the effective penalty on the direct feature path, so
//! small `beta` forces answers through the rationale subspace. `beta = 1`
//! drops the rationale head and gives the answer-only fit.
//!
//! Training the answer head on the rationale *targets* instead of `r_hat`
//! would be pointless here: since `r_hat` is a ridge fit on the same features,
//! the composite predictor collapses algebraically onto the answer-only one.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::task::argmax_rows;
use crate::error::{Error, Result};
use crate::rng;

/// Rationale losses are clipped at this value.
pub const RATIONALE_LOSS_BOUND: f64 = 1.0;

/// Model capacity, regularisation and objective weighting, plus its frozen feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct SimModelClass {
    pub capacity: usize,
    pub ridge: f64,
    pub beta: f64,
    /// `capacity x input_dim` frequencies.
    omega: DMatrix<f64>,
    phase: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub capacity: usize,
    pub ridge: f64,
    pub beta: f64,
}

impl ClassSpec {
    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::invalid("capacity must be at least 1"));
        }
        if !(self.ridge > 0.0 && self.ridge.is_finite()) {
            return Err(Error::invalid("ridge penalty must be positive"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        Ok(())
    }
}

impl SimModelClass {
    /// Random Fourier features `sqrt(2/P) cos(omega x + b)` with unit-bandwidth-per-dimension frequencies.
    ///
    /// Feature `j` depends only on `feature_seed` and `j`, so classes built from one seed are nested:
    /// a smaller capacity uses a prefix of a larger one's features.
    pub fn new(spec: ClassSpec, input_dim: usize, feature_seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng::stream(feature_seed, 0x7266_6561);
        let bandwidth = (input_dim as f64).sqrt();
        let uniform = Uniform::new(0.0, std::f64::consts::TAU).expect("valid range");
        let mut omega = DMatrix::zeros(spec.capacity, input_dim);
        let mut phase = DVector::zeros(spec.capacity);
        for j in 0..spec.capacity {
            for k in 0..input_dim {
                let z: f64 = StandardNormal.sample(&mut rng);
                omega[(j, k)] = z / bandwidth;
            }
            phase[j] = uniform.sample(&mut rng);
        }
        Ok(Self { capacity: spec.capacity, ridge: spec.ridge, beta: spec.beta, omega, phase })
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::invalid(format!("beta must lie in (0, 1], got {beta}")));
        }
        Ok(Self { beta, ..self.clone() })
    }

    pub fn features(&self, inputs: &DMatrix<f64>) -> DMatrix<f64> {
        let scale = (2.0 / self.capacity as f64).sqrt();
        let mut z = inputs * self.omega.transpose();
        for mut row in z.row_iter_mut() {
            for (v, b) in row.iter_mut().zip(self.phase.iter()) {
                *v = scale * (*v + b).cos();
            }
        }
        z
    }

    /// Scale `s` of the feature block in the answer head; infinite at `beta = 1`.
    pub fn feature_scale(&self) -> f64 {
        (self.beta / (1.0 - self.beta)).sqrt()
    }
}

/// Centered multi-output ridge regression.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeHead {
    coef: DMatrix<f64>,
    x_mean: DVector<f64>,
    y_mean: DVector<f64>,
}

impl RidgeHead {
    /// Minimises `mean ||y - a - B x||^2 + ridge ||B||^2`, solving whichever of the
    /// primal or dual normal equations is smaller.
    pub fn fit(x: &DMatrix<f64>, y: &DMatrix<f64>, ridge: f64) -> Result<Self> {
        let n = x.nrows();
        if n == 0 || y.nrows() != n {
            return Err(Error::invalid("ridge fit needs matching, non-empty design and targets"));
        }
        let x_mean = x.row_mean().transpose();
        let y_mean = y.row_mean().transpose();
        let xc = center(x, &x_mean);
        let yc = center(y, &y_mean);
        let shift = n as f64 * ridge;
        let singular = || Error::Numerical("ridge system is not positive definite".into());
        let coef = if x.ncols() <= n {
            let mut gram = xc.transpose() * &xc;
            gram.iter_mut().step_by(x.ncols() + 1).for_each(|v| *v += shift);
            let rhs = xc.transpose() * &yc;
            gram.cholesky().ok_or_else(singular)?.solve(&rhs)
        } else {
            let mut gram = &xc * xc.transpose();
            gram.iter_mut().step_by(n + 1).for_each(|v| *v += shift);
            let alpha = gram.cholesky().ok_or_else(singular)?.solve(&yc);
            xc.transpose() * alpha
        };
        Ok(Self { coef, x_mean, y_mean })
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = center(x, &self.x_mean) * &self.coef;
        for mut row in out.row_iter_mut() {
            row += self.y_mean.transpose();
        }
        out
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coef
    }
}

fn center(m: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        row -= mean.transpose();
    }
    out
}

fn one_hot(labels: &[usize], classes: usize) -> DMatrix<f64> {
    DMatrix::from_fn(labels.len(), classes, |i, j| f64::from(u8::from(labels[i] == j)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    class: SimModelClass,
    rationale_head: Option<RidgeHead>,
    answer_head: RidgeHead,
    classes: usize,
}

/// Closed-form fit of both heads.
///
/// Without rationale targets (or at `beta = 1`) only the answer head is trained,
/// on the random features alone.
pub fn train_model(
    class: &SimModelClass,
    inputs: &DMatrix<f64>,
    rationale_targets: Option<&DMatrix<f64>>,
    answer_targets: &[usize],
    classes: usize,
) -> Result<FittedModel> {
    let all: Vec<usize> = (0..inputs.nrows()).collect();
    train_model_partial(class, inputs, rationale_targets.map(|r| (all.as_slice(), r)), answer_targets, classes)
}

/// Like [`train_model`], but only the listed `rows` of `inputs` carry rationale targets.
/// The answer head still sees every row.
pub fn train_model_partial(
    class: &SimModelClass,
    inputs: &DMatrix<f64>,
    rationale_targets: Option<(&[usize], &DMatrix<f64>)>,
    answer_targets: &[usize],
    classes: usize,
) -> Result<FittedModel> {
    if answer_targets.len() != inputs.nrows() {
        return Err(Error::invalid("answer targets do not match inputs"));
    }
    if answer_targets.iter().any(|&a| a >= classes) {
        return Err(Error::invalid("answer target outside the class range"));
    }
    fit_heads(class, inputs, rationale_targets, &one_hot(answer_targets, classes))
}

/// Like [`train_model_partial`], but the answer head regresses per-class scores
/// (for instance another model's answer scores) instead of one-hot labels.
pub fn train_model_on_scores(
    class: &SimModelClass,
    inputs: &DMatrix<f64>,
    rationale_targets: Option<(&[usize], &DMatrix<f64>)>,
    answer_scores: &DMatrix<f64>,
) -> Result<FittedModel> {
    if answer_scores.nrows() != inputs.nrows() || answer_scores.ncols() < 2 {
        return Err(Error::invalid("answer scores must have one row per input and at least two classes"));
    }
    fit_heads(class, inputs, rationale_targets, answer_scores)
}

fn fit_heads(
    class: &SimModelClass,
    inputs: &DMatrix<f64>,
    rationale_targets: Option<(&[usize], &DMatrix<f64>)>,
    answer_targets: &DMatrix<f64>,
) -> Result<FittedModel> {
    if inputs.nrows() == 0 {
        return Err(Error::invalid("need at least one training example"));
    }
    let phi = class.features(inputs);
    let scale = class.feature_scale();
    let rationale = rationale_targets.filter(|(rows, _)| scale.is_finite() && !rows.is_empty());
    let (rationale_head, design) = match rationale {
        Some((rows, r)) => {
            if r.nrows() != rows.len() || rows.iter().any(|&i| i >= inputs.nrows()) {
                return Err(Error::invalid("rationale targets do not match inputs"));
            }
            let head = RidgeHead::fit(&phi.select_rows(rows), r, class.ridge)?;
            let fitted = head.predict(&phi);
            (Some(head), augment(&phi, &fitted, scale))
        }
        None => (None, phi),
    };
    let answer_head = RidgeHead::fit(&design, answer_targets, class.ridge)?;
    Ok(FittedModel { class: class.clone(), rationale_head, answer_head, classes: answer_targets.ncols() })
}

fn augment(phi: &DMatrix<f64>, rationale: &DMatrix<f64>, scale: f64) -> DMatrix<f64> {
    let (n, p, k) = (phi.nrows(), phi.ncols(), rationale.ncols());
    DMatrix::from_fn(n, p + k, |i, j| if j < p { scale * phi[(i, j)] } else { rationale[(i, j - p)] })
}

/// Predicted rationales, answer scores and answers for a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub rationales: Option<DMatrix<f64>>,
    pub scores: DMatrix<f64>,
    pub answers: Vec<usize>,
}

impl FittedModel {
    pub fn predict(&self, inputs: &DMatrix<f64>) -> Prediction {
        let phi = self.class.features(inputs);
        let rationales = self.rationale_head.as_ref().map(|h| h.predict(&phi));
        let design = match &rationales {
            Some(r) => augment(&phi, r, self.class.feature_scale()),
            None => phi,
        };
        let scores = self.answer_head.predict(&design);
        let answers = argmax_rows(&scores);
        Prediction { rationales, scores, answers }
    }

    pub fn has_rationale_head(&self) -> bool {
        self.rationale_head.is_some()
    }

    pub fn answer_head(&self) -> &RidgeHead {
        &self.answer_head
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Softmax over answer scores at temperature `temperature`, one distribution per row.
    pub fn answer_distribution(&self, inputs: &DMatrix<f64>, temperature: f64) -> Vec<Vec<f64>> {
        let scores = self.predict(inputs).scores;
        scores
            .row_iter()
            .map(|row| {
                let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = row.iter().map(|s| ((s - m) / temperature).exp()).collect();
                let z: f64 = e.iter().sum();
                e.into_iter().map(|v| v / z).collect()
            })
            .collect()
    }
}

/// Mean 0-1 loss.
pub fn answer_risk(predicted: &[usize], target: &[usize]) -> f64 {
    debug_assert_eq!(predicted.len(), target.len());
    if predicted.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(target).filter(|(a, b)| a != b).count() as f64 / predicted.len() as f64
}

/// Mean per-dimension squared error per row, clipped at [`RATIONALE_LOSS_BOUND`], averaged.
pub fn rationale_risk(predicted: &DMatrix<f64>, target: &DMatrix<f64>) -> f64 {
    let k = target.ncols().max(1) as f64;
    let n = target.nrows();
    if n == 0 {
        return 0.0;
    }
    (0..n).map(|i| ((predicted.row(i) - target.row(i)).norm_squared() / k).min(RATIONALE_LOSS_BOUND)).sum::<f64>()
        / n as f64
}

/// `(1 - beta) * rationale risk + beta * answer risk` against a labeller's outputs.
/// Falls back to the answer risk when either side has no rationales.
pub fn multi_task_risk(
    prediction: &Prediction,
    rationale_targets: Option<&DMatrix<f64>>,
    answer_targets: &[usize],
    beta: f64,
) -> f64 {
    let answer = answer_risk(&prediction.answers, answer_targets);
    match (&prediction.rationales, rationale_targets) {
        (Some(p), Some(t)) => (1.0 - beta) * rationale_risk(p, t) + beta * answer,
        _ => answer,
    }
}
