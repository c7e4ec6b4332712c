//! Two-stage (teacher -> assistant -> student) and direct distillation runs.
//!
//! The teacher only ever hands out a rationale and a discrete answer. The assistant is
//! ours, so the student regresses its rationales and its full answer-score vector; that
//! is the least-squares counterpart of matching the assistant's output distribution.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::model::{self, ClassSpec, FittedModel, SimModelClass};
use super::task::SimTask;
use crate::cluster::{self, ClusterBackend};
use crate::dataset::{self, BudgetLedger, EmbeddingSet};
use crate::error::{Error, Result};
use crate::rng;
use crate::select::{self, SelectionConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionStrategy {
    /// Region quotas plus difficulty/diversity scores from the selection module.
    Coverage,
    Random,
}

impl SelectionStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Coverage => "coverage",
            Self::Random => "random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineKind {
    Bridge,
    Direct,
}

/// Everything a single run needs besides the task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Teacher queries `B`.
    pub budget: usize,
    /// Unlabelled pool size `n`.
    pub pool_size: usize,
    pub assistant_capacity: usize,
    pub student_capacity: usize,
    pub ridge: f64,
    pub beta: f64,
    pub selection: SelectionStrategy,
    pub alpha: f64,
    pub clusters: usize,
    pub m0: usize,
    pub warmup_fraction: f64,
    /// Softmax temperature turning warm-up answer scores into probabilities.
    pub temperature: f64,
    /// Drives selection, clustering and random feature maps. Arms that share it are paired.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            budget: 50,
            pool_size: 1000,
            assistant_capacity: 400,
            student_capacity: 40,
            ridge: 1e-2,
            beta: 0.5,
            selection: SelectionStrategy::Coverage,
            alpha: 0.5,
            clusters: 8,
            m0: 3,
            warmup_fraction: 0.1,
            temperature: 0.1,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::invalid("budget must be at least 1"));
        }
        if self.budget > self.pool_size {
            return Err(Error::invalid(format!("budget {} exceeds the pool size {}", self.budget, self.pool_size)));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::invalid("temperature must be positive"));
        }
        self.assistant_spec().validate()?;
        self.student_spec().validate()
    }

    pub fn assistant_spec(&self) -> ClassSpec {
        ClassSpec { capacity: self.assistant_capacity, ridge: self.ridge, beta: self.beta }
    }

    pub fn student_spec(&self) -> ClassSpec {
        ClassSpec { capacity: self.student_capacity, ridge: self.ridge, beta: self.beta }
    }
}

/// Held-out evaluation of one model against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Mean 0-1 loss, so the bound `M` is 1.
    pub risk: f64,
    pub accuracy: f64,
    /// Multi-task loss against the teacher's held-out responses.
    pub multi_task_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRunResult {
    pub pipeline: PipelineKind,
    pub budget: usize,
    pub pool_size: usize,
    pub task_seed: u64,
    pub seed: u64,
    pub selection: SelectionStrategy,
    pub beta: f64,
    pub student: Evaluation,
    pub assistant: Option<Evaluation>,
    /// Held-out disagreement between assistant and teacher answers.
    pub delta_a_proxy: Option<f64>,
    /// Held-out disagreement between assistant and student answers.
    pub assistant_student_disagreement: Option<f64>,
    pub teacher_queries: usize,
    pub assistant_annotations: usize,
}

/// Output of the apprenticeship phase shared by both pipelines.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase1 {
    /// Rows of `task.train` forming the unlabelled pool.
    pub pool_rows: Vec<usize>,
    pub warmup_rows: Vec<usize>,
    /// Rows of `task.train` sent to the teacher, in selection order.
    pub selected_rows: Vec<usize>,
    pub ledger: BudgetLedger,
}

/// Splits off the warm-up set, takes the first `n` remaining rows as the pool and
/// picks `B` of them for teacher annotation.
pub fn phase1(task: &SimTask, config: &PipelineConfig) -> Result<Phase1> {
    config.validate()?;
    let train = &task.train;
    let ids = dataset::sequential_ids(train.len());
    let partition = dataset::split_warmup(&ids, config.warmup_fraction, rng::mix(config.seed, 1))?;
    let warmup_rows: Vec<usize> = (0..ids.len()).filter(|&i| partition.warmup_ids.contains(&ids[i])).collect();
    let available: Vec<usize> = (0..ids.len()).filter(|&i| partition.pool_ids.contains(&ids[i])).collect();
    if config.pool_size > available.len() {
        return Err(Error::invalid(format!(
            "pool size {} exceeds the {} examples left after warm-up",
            config.pool_size,
            available.len()
        )));
    }
    let pool_rows = available[..config.pool_size].to_vec();
    let selected_rows = match config.selection {
        SelectionStrategy::Random => {
            let mut stream = rng::stream(config.seed, 0x0052_4e44);
            index::sample(&mut stream, pool_rows.len(), config.budget).into_iter().map(|i| pool_rows[i]).collect()
        }
        SelectionStrategy::Coverage => coverage_selection(task, config, &ids, &warmup_rows, &pool_rows)?,
    };
    let mut ledger = BudgetLedger::new(config.budget);
    ledger.consume(selected_rows.len())?;
    Ok(Phase1 { pool_rows, warmup_rows, selected_rows, ledger })
}

fn coverage_selection(
    task: &SimTask,
    config: &PipelineConfig,
    ids: &[String],
    warmup_rows: &[usize],
    pool_rows: &[usize],
) -> Result<Vec<usize>> {
    let train = &task.train;
    // warm-up assistant: same class as the real assistant, fit on ground-truth answers of the warm-up split
    let class = SimModelClass::new(config.assistant_spec(), task.config.input_dim, feature_seed(config))?;
    let warm = model::train_model(
        &class,
        &train.input_rows(warmup_rows),
        None,
        &pick(&train.answers, warmup_rows),
        task.classes(),
    )?;
    let probs = warm.answer_distribution(&train.input_rows(pool_rows), config.temperature);
    let raw = pool_rows
        .iter()
        .zip(&probs)
        .map(|(&row, p)| dataset::difficulty_from_distribution(p, train.answers[row]))
        .collect::<Result<Vec<f64>>>()?;
    let rows: Vec<Vec<f64>> = pool_rows.iter().map(|&r| train.inputs.row(r).iter().copied().collect()).collect();
    let pool_ids: Vec<String> = pool_rows.iter().map(|&r| ids[r].clone()).collect();
    let pool = EmbeddingSet::from_rows(pool_ids, &rows)?;
    let select_config = SelectionConfig {
        alpha: config.alpha,
        clusters: config.clusters.min(pool.len()),
        m0: config.m0,
        seed: config.seed,
        backend: ClusterBackend::Gmm,
        ..SelectionConfig::new(config.budget)
    };
    let assignment = cluster::partition(&pool, select_config.clusters, select_config.backend, config.seed)?;
    let result = select::select_budget(&pool, &raw, &assignment, &select_config)?;
    let chosen = pool.indices_of(result.selected_ids.iter().map(String::as_str))?;
    Ok(chosen.into_iter().map(|i| pool_rows[i]).collect())
}

fn pick(values: &[usize], rows: &[usize]) -> Vec<usize> {
    rows.iter().map(|&r| values[r]).collect()
}

/// Assistant outputs on the pool, each example annotated at most once.
#[derive(Debug, Clone)]
pub struct AnnotationCache {
    rationales: Vec<Option<Vec<f64>>>,
    scores: Vec<Option<Vec<f64>>>,
    answers: Vec<Option<usize>>,
    calls: usize,
}

impl AnnotationCache {
    pub fn new(rows: usize) -> Self {
        Self { rationales: vec![None; rows], scores: vec![None; rows], answers: vec![None; rows], calls: 0 }
    }

    /// Annotates every row of `rows` that has no cached label yet.
    pub fn annotate(&mut self, assistant: &FittedModel, inputs: &DMatrix<f64>, rows: &[usize]) {
        let fresh: Vec<usize> =
            rows.iter().copied().filter(|&r| self.answers[r].is_none()).collect::<BTreeSet<_>>().into_iter().collect();
        if fresh.is_empty() {
            return;
        }
        let pred = assistant.predict(&inputs.select_rows(&fresh));
        for (i, &r) in fresh.iter().enumerate() {
            self.answers[r] = Some(pred.answers[i]);
            self.scores[r] = Some(pred.scores.row(i).iter().copied().collect());
            self.rationales[r] = pred.rationales.as_ref().map(|m| m.row(i).iter().copied().collect());
            self.calls += 1;
        }
    }

    pub fn annotations(&self) -> usize {
        self.calls
    }

    /// Cached labels for `rows`; rationales are `None` when the assistant has no rationale head.
    pub fn labels(&self, rows: &[usize]) -> Result<(Option<DMatrix<f64>>, Vec<usize>)> {
        let answers = rows
            .iter()
            .map(|&r| self.answers[r].ok_or_else(|| Error::invalid(format!("row {r} was never annotated"))))
            .collect::<Result<Vec<usize>>>()?;
        Ok((stack(&self.rationales, rows), answers))
    }

    /// Cached answer scores for `rows`, one row per example.
    pub fn scores(&self, rows: &[usize]) -> Result<DMatrix<f64>> {
        if let Some(&r) = rows.iter().find(|&&r| self.scores[r].is_none()) {
            return Err(Error::invalid(format!("row {r} was never annotated")));
        }
        stack(&self.scores, rows).ok_or_else(|| Error::invalid("no rows requested"))
    }
}

fn stack(cached: &[Option<Vec<f64>>], rows: &[usize]) -> Option<DMatrix<f64>> {
    let k = cached[*rows.first()?].as_ref()?.len();
    let flat: Vec<f64> = rows.iter().flat_map(|&r| cached[r].clone().unwrap_or_default()).collect();
    Some(DMatrix::from_row_slice(rows.len(), k, &flat))
}

fn evaluate(task: &SimTask, model: &FittedModel, beta: f64) -> (Evaluation, Vec<usize>) {
    let h = &task.heldout;
    let pred = model.predict(&h.inputs);
    let risk = model::answer_risk(&pred.answers, &h.answers);
    let multi = model::multi_task_risk(&pred, Some(&h.teacher_rationales), &h.teacher_answers, beta);
    let eval = Evaluation { risk, accuracy: 1.0 - risk, multi_task_risk: multi };
    (eval, pred.answers)
}

fn teacher_fit(task: &SimTask, class: &SimModelClass, rows: &[usize]) -> Result<FittedModel> {
    let t = &task.train;
    model::train_model(
        class,
        &t.input_rows(rows),
        Some(&t.teacher_rationales.select_rows(rows)),
        &pick(&t.teacher_answers, rows),
        task.classes(),
    )
}

/// Warm-up rows contribute ground-truth answers only; selected rows bring the teacher's rationale and answer.
fn assistant_fit(task: &SimTask, class: &SimModelClass, p1: &Phase1) -> Result<FittedModel> {
    let t = &task.train;
    let rows: Vec<usize> = p1.warmup_rows.iter().chain(&p1.selected_rows).copied().collect();
    let mut answers = pick(&t.answers, &p1.warmup_rows);
    answers.extend(pick(&t.teacher_answers, &p1.selected_rows));
    let labelled: Vec<usize> = (p1.warmup_rows.len()..rows.len()).collect();
    model::train_model_partial(
        class,
        &t.input_rows(&rows),
        Some((&labelled, &t.teacher_rationales.select_rows(&p1.selected_rows))),
        &answers,
        task.classes(),
    )
}

/// One feature stream per seed, so the student class sits inside the assistant class
/// whenever its capacity is smaller. Never depends on the arm.
fn feature_seed(config: &PipelineConfig) -> u64 {
    rng::mix(config.seed, 3)
}

fn classes(task: &SimTask, config: &PipelineConfig) -> Result<(SimModelClass, SimModelClass)> {
    let d = task.config.input_dim;
    Ok((
        SimModelClass::new(config.assistant_spec(), d, feature_seed(config))?,
        SimModelClass::new(config.student_spec(), d, feature_seed(config))?,
    ))
}

/// Teacher labels `B` selected pool examples and the warmed-up assistant learns from them, then
/// labels the whole pool once; the student learns from the assistant's rationales and answer scores.
pub fn run_bridge(task: &SimTask, config: &PipelineConfig) -> Result<SimRunResult> {
    let p1 = phase1(task, config)?;
    run_bridge_from(task, config, &p1)
}

pub fn run_bridge_from(task: &SimTask, config: &PipelineConfig, p1: &Phase1) -> Result<SimRunResult> {
    let (assistant_class, student_class) = classes(task, config)?;
    let assistant = assistant_fit(task, &assistant_class, p1)?;

    let train = &task.train;
    let mut cache = AnnotationCache::new(train.len());
    cache.annotate(&assistant, &train.inputs, &p1.pool_rows);
    let (rationales, _) = cache.labels(&p1.pool_rows)?;
    let all: Vec<usize> = (0..p1.pool_rows.len()).collect();
    let student = model::train_model_on_scores(
        &student_class,
        &train.input_rows(&p1.pool_rows),
        rationales.as_ref().map(|r| (all.as_slice(), r)),
        &cache.scores(&p1.pool_rows)?,
    )?;

    let (assistant_eval, assistant_answers) = evaluate(task, &assistant, config.beta);
    let (student_eval, student_answers) = evaluate(task, &student, config.beta);
    Ok(SimRunResult {
        pipeline: PipelineKind::Bridge,
        budget: config.budget,
        pool_size: config.pool_size,
        task_seed: task.config.seed,
        seed: config.seed,
        selection: config.selection,
        beta: config.beta,
        student: student_eval,
        assistant: Some(assistant_eval),
        delta_a_proxy: Some(model::answer_risk(&assistant_answers, &task.heldout.teacher_answers)),
        assistant_student_disagreement: Some(model::answer_risk(&student_answers, &assistant_answers)),
        teacher_queries: p1.ledger.consumed(),
        assistant_annotations: cache.annotations(),
    })
}

/// The student is fit directly on the teacher's answers for the same `B` examples.
pub fn run_direct(task: &SimTask, config: &PipelineConfig) -> Result<SimRunResult> {
    let p1 = phase1(task, config)?;
    run_direct_from(task, config, &p1)
}

pub fn run_direct_from(task: &SimTask, config: &PipelineConfig, p1: &Phase1) -> Result<SimRunResult> {
    let (_, student_class) = classes(task, config)?;
    let student = teacher_fit(task, &student_class, &p1.selected_rows)?;
    let (student_eval, _) = evaluate(task, &student, config.beta);
    Ok(SimRunResult {
        pipeline: PipelineKind::Direct,
        budget: config.budget,
        pool_size: config.pool_size,
        task_seed: task.config.seed,
        seed: config.seed,
        selection: config.selection,
        beta: config.beta,
        student: student_eval,
        assistant: None,
        delta_a_proxy: None,
        assistant_student_disagreement: None,
        teacher_queries: p1.ledger.consumed(),
        assistant_annotations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distillsim::task::{gen_task, TaskConfig};

    fn small_task(seed: u64) -> SimTask {
        gen_task(&TaskConfig { n_total: 600, n_heldout: 400, seed, ..Default::default() }).unwrap()
    }

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            budget: 40,
            pool_size: 400,
            assistant_capacity: 120,
            student_capacity: 20,
            ..Default::default()
        }
    }

    #[test]
    fn selection_respects_budget_and_pool() {
        let task = small_task(1);
        for selection in [SelectionStrategy::Coverage, SelectionStrategy::Random] {
            let cfg = PipelineConfig { selection, ..small_config() };
            let p1 = phase1(&task, &cfg).unwrap();
            assert_eq!(p1.selected_rows.len(), 40);
            let pool: BTreeSet<usize> = p1.pool_rows.iter().copied().collect();
            let chosen: BTreeSet<usize> = p1.selected_rows.iter().copied().collect();
            assert_eq!(chosen.len(), 40);
            assert!(chosen.is_subset(&pool));
            assert!(p1.warmup_rows.iter().all(|r| !pool.contains(r)));
            assert_eq!(p1.ledger.remaining(), 0);
        }
    }

    #[test]
    fn every_pool_example_annotated_once() {
        let task = small_task(2);
        let r = run_bridge(&task, &small_config()).unwrap();
        assert_eq!(r.assistant_annotations, 400);
        assert_eq!(r.teacher_queries, 40);
        assert!((0.0..=1.0).contains(&r.student.risk));
        assert!((0.0..=1.0).contains(&r.delta_a_proxy.unwrap()));
    }

    #[test]
    fn cache_never_relabels() {
        let task = small_task(3);
        let class = SimModelClass::new(ClassSpec { capacity: 10, ridge: 1e-2, beta: 0.5 }, 8, 0).unwrap();
        let m = teacher_fit(&task, &class, &[0, 1, 2, 3, 4]).unwrap();
        let mut cache = AnnotationCache::new(task.train.len());
        cache.annotate(&m, &task.train.inputs, &[0, 1, 2, 2]);
        cache.annotate(&m, &task.train.inputs, &[1, 2, 3]);
        assert_eq!(cache.annotations(), 4);
        assert!(cache.labels(&[5]).is_err());
    }

    #[test]
    fn runs_are_deterministic() {
        let task = small_task(4);
        let cfg = small_config();
        assert_eq!(run_bridge(&task, &cfg).unwrap(), run_bridge(&task, &cfg).unwrap());
        assert_eq!(run_direct(&task, &cfg).unwrap(), run_direct(&task, &cfg).unwrap());
    }

    #[test]
    fn rejects_budget_above_pool() {
        let task = small_task(5);
        let cfg = PipelineConfig { budget: 500, pool_size: 400, ..small_config() };
        let err = run_bridge(&task, &cfg).unwrap_err();
        assert!(err.to_string().contains("budget"));
        let big = PipelineConfig { pool_size: 590, ..small_config() };
        assert!(run_direct(&task, &big).is_err());
    }

    #[test]
    fn single_query_is_near_chance() {
        let mut accs = Vec::new();
        for seed in 0..10 {
            let task = small_task(100 + seed);
            let cfg = PipelineConfig { budget: 1, selection: SelectionStrategy::Random, seed, ..small_config() };
            accs.push(run_direct(&task, &cfg).unwrap().student.accuracy);
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        assert!(mean <= 0.25 + 0.15, "{mean}");
    }
}
