use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Parameters of a synthetic rationale-mediated classification task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    /// Training examples (warm-up split plus selection pool).
    pub n_total: usize,
    pub n_heldout: usize,
    pub input_dim: usize,
    pub rationale_dim: usize,
    pub classes: usize,
    /// Probability that the teacher replaces the answer by a uniformly random label.
    pub teacher_noise: f64,
    /// Standard deviation of the noise on teacher rationales.
    pub rationale_noise: f64,
    /// Pre-activation scale of the hidden rationale map.
    pub rationale_gain: f64,
    pub seed: u64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            n_total: 2000,
            n_heldout: 2000,
            input_dim: 8,
            rationale_dim: 6,
            classes: 4,
            teacher_noise: 0.05,
            rationale_noise: 0.05,
            rationale_gain: 1.5,
            seed: 0,
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_total < 2 || self.n_heldout == 0 {
            return Err(Error::invalid("need at least 2 training and 1 held-out example"));
        }
        if self.input_dim == 0 || self.rationale_dim == 0 {
            return Err(Error::invalid("input and rationale dimensions must be positive"));
        }
        if self.classes < 2 {
            return Err(Error::invalid("need at least 2 classes"));
        }
        if !(0.0..0.5).contains(&self.teacher_noise) {
            return Err(Error::invalid("teacher noise must lie in [0, 0.5)"));
        }
        if !(self.rationale_noise >= 0.0 && self.rationale_gain > 0.0) {
            return Err(Error::invalid("rationale noise must be >= 0 and gain > 0"));
        }
        Ok(())
    }
}

/// Inputs with ground truth and the teacher's (noisy) responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub inputs: DMatrix<f64>,
    pub rationales: DMatrix<f64>,
    pub answers: Vec<usize>,
    pub teacher_rationales: DMatrix<f64>,
    pub teacher_answers: Vec<usize>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn input_rows(&self, rows: &[usize]) -> DMatrix<f64> {
        self.inputs.select_rows(rows)
    }
}

/// Hidden maps `r*(x) = tanh(W x)`, `y*(x) = argmax V r*(x)` and data drawn from them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTask {
    pub config: TaskConfig,
    /// `rationale_dim x input_dim`.
    pub rationale_map: DMatrix<f64>,
    /// `classes x rationale_dim`.
    pub answer_map: DMatrix<f64>,
    pub train: Split,
    pub heldout: Split,
}

impl SimTask {
    pub fn rationale_of(&self, inputs: &DMatrix<f64>) -> DMatrix<f64> {
        (inputs * self.rationale_map.transpose()).map(f64::tanh)
    }

    pub fn answer_of(&self, rationales: &DMatrix<f64>) -> Vec<usize> {
        argmax_rows(&(rationales * self.answer_map.transpose()))
    }

    pub fn classes(&self) -> usize {
        self.config.classes
    }
}

/// Row-wise argmax, ties to the lower column.
pub fn argmax_rows(scores: &DMatrix<f64>) -> Vec<usize> {
    (0..scores.nrows())
        .map(|i| {
            let row = scores.row(i);
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

fn gaussian(rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn gen_task(config: &TaskConfig) -> Result<SimTask> {
    config.validate()?;
    let (d, k, classes) = (config.input_dim, config.rationale_dim, config.classes);
    let mut maps = rng::stream(config.seed, 0x7461_736b);
    let rationale_map = gaussian(k, d, config.rationale_gain / (d as f64).sqrt(), &mut maps);
    let answer_map = gaussian(classes, k, 1.0, &mut maps);
    let mut task = SimTask {
        config: config.clone(),
        rationale_map,
        answer_map,
        train: empty_split(d, k),
        heldout: empty_split(d, k),
    };
    task.train = draw_split(&task, config.n_total, &mut rng::stream(config.seed, 0x0074_726e));
    task.heldout = draw_split(&task, config.n_heldout, &mut rng::stream(config.seed, 0x0068_6c64));
    Ok(task)
}

fn empty_split(d: usize, k: usize) -> Split {
    Split {
        inputs: DMatrix::zeros(0, d),
        rationales: DMatrix::zeros(0, k),
        answers: Vec::new(),
        teacher_rationales: DMatrix::zeros(0, k),
        teacher_answers: Vec::new(),
    }
}

fn draw_split(task: &SimTask, n: usize, rng: &mut impl Rng) -> Split {
    let cfg = &task.config;
    let inputs = gaussian(n, cfg.input_dim, 1.0, rng);
    let rationales = task.rationale_of(&inputs);
    let answers = task.answer_of(&rationales);
    let noise = gaussian(n, cfg.rationale_dim, cfg.rationale_noise, rng);
    let teacher_rationales = &rationales + noise;
    let teacher_answers = answers
        .iter()
        .map(|&y| if rng.random::<f64>() < cfg.teacher_noise { rng.random_range(0..cfg.classes) } else { y })
        .collect();
    Split { inputs, rationales, answers, teacher_rationales, teacher_answers }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answers_follow_rationales() {
        let task = gen_task(&TaskConfig { n_total: 300, n_heldout: 50, ..Default::default() }).unwrap();
        let again = task.answer_of(&task.rationale_of(&task.train.inputs));
        assert_eq!(again, task.train.answers);
    }

    #[test]
    fn noiseless_teacher_is_exact() {
        let cfg = TaskConfig { teacher_noise: 0.0, n_heldout: 500, ..Default::default() };
        let task = gen_task(&cfg).unwrap();
        assert_eq!(task.heldout.teacher_answers, task.heldout.answers);
    }

    #[test]
    fn flip_noise_matches_binomial_expectation() {
        // accuracy = (1 - eps) + eps / K = 0.925 for eps = 0.1, K = 4
        let cfg = TaskConfig { teacher_noise: 0.1, classes: 4, n_heldout: 5000, seed: 17, ..Default::default() };
        let task = gen_task(&cfg).unwrap();
        let h = &task.heldout;
        let acc = h.answers.iter().zip(&h.teacher_answers).filter(|(a, b)| a == b).count() as f64 / h.len() as f64;
        assert!((acc - 0.925).abs() <= 0.02, "{acc}");
    }

    #[test]
    fn same_seed_same_data() {
        let cfg = TaskConfig { n_total: 100, n_heldout: 20, seed: 4, ..Default::default() };
        assert_eq!(gen_task(&cfg).unwrap(), gen_task(&cfg).unwrap());
        let other = TaskConfig { seed: 5, ..cfg.clone() };
        assert_ne!(gen_task(&cfg).unwrap().train.inputs, gen_task(&other).unwrap().train.inputs);
    }

    #[test]
    fn invalid_configs() {
        assert!(gen_task(&TaskConfig { classes: 1, ..Default::default() }).is_err());
        assert!(gen_task(&TaskConfig { teacher_noise: 0.5, ..Default::default() }).is_err());
        assert!(gen_task(&TaskConfig { input_dim: 0, ..Default::default() }).is_err());
    }
}
