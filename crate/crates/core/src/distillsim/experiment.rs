//! Paired-seed sweeps producing curve tables and summary statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::pipeline::{self, PipelineConfig, SelectionStrategy, SimRunResult};
use super::task::{gen_task, TaskConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    DataScaling,
    CapacityGap,
    SelectionQuality,
    RationaleSupervision,
}

impl ExperimentName {
    pub const ALL: [Self; 4] =
        [Self::DataScaling, Self::CapacityGap, Self::SelectionQuality, Self::RationaleSupervision];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::DataScaling => "data_scaling",
            Self::CapacityGap => "capacity_gap",
            Self::SelectionQuality => "selection_quality",
            Self::RationaleSupervision => "rationale_supervision",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown experiment {s:?}")))
    }
}

/// Sweep definition. Axes left empty fall back to per-experiment defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentGrid {
    pub task: TaskConfig,
    pub pipeline: PipelineConfig,
    /// Pool sizes `n` for `data_scaling`; defaults to `B * {1, 2, 5, 10, 20}`.
    pub pool_sizes: Vec<usize>,
    /// Assistant capacities for `capacity_gap`.
    pub assistant_capacities: Vec<usize>,
    /// Budgets for `capacity_gap`, used for the convergence slopes; defaults to `B * {1/2, 1, 2}`.
    pub budgets: Vec<usize>,
    /// `B / n` for `selection_quality`.
    pub budget_fraction: f64,
    /// Arms of `rationale_supervision`.
    pub betas: Vec<f64>,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            task: TaskConfig { n_total: 1200, ..TaskConfig::default() },
            pipeline: PipelineConfig::default(),
            pool_sizes: Vec::new(),
            assistant_capacities: Vec::new(),
            budgets: Vec::new(),
            budget_fraction: 0.05,
            betas: Vec::new(),
        }
    }
}

/// One swept configuration, run for every seed and arm.
#[derive(Debug, Clone, PartialEq)]
struct Cell {
    config: PipelineConfig,
    arms: Vec<Arm>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Arm {
    Bridge,
    Direct,
    Selection(SelectionStrategy),
    Beta(f64),
}

impl Arm {
    fn label(self) -> String {
        match self {
            Self::Bridge => "bridge".into(),
            Self::Direct => "direct".into(),
            Self::Selection(s) => s.as_str().into(),
            Self::Beta(b) => format!("beta={b}"),
        }
    }
}

impl ExperimentGrid {
    fn cells(&self, name: ExperimentName) -> Result<Vec<Cell>> {
        let base = &self.pipeline;
        let cells: Vec<Cell> = match name {
            ExperimentName::DataScaling => {
                let sizes = if self.pool_sizes.is_empty() {
                    [1, 2, 5, 10, 20].iter().map(|m| m * base.budget).collect()
                } else {
                    self.pool_sizes.clone()
                };
                sizes
                    .into_iter()
                    .map(|n| Cell {
                        config: PipelineConfig { pool_size: n, ..base.clone() },
                        arms: vec![Arm::Bridge, Arm::Direct],
                    })
                    .collect()
            }
            ExperimentName::CapacityGap => {
                let caps = or_default(&self.assistant_capacities, &[40, 80, 160, 320, 640]);
                let budgets = or_default(&self.budgets, &[(base.budget / 2).max(1), base.budget, base.budget * 2]);
                caps.iter()
                    .flat_map(|&p| {
                        budgets.iter().map(move |&b| Cell {
                            config: PipelineConfig { assistant_capacity: p, budget: b, ..base.clone() },
                            arms: vec![Arm::Bridge, Arm::Direct],
                        })
                    })
                    .collect()
            }
            ExperimentName::SelectionQuality => {
                if !(self.budget_fraction > 0.0 && self.budget_fraction <= 1.0) {
                    return Err(Error::invalid("budget_fraction must lie in (0, 1]"));
                }
                let sizes = or_default(&self.pool_sizes, &[base.pool_size]);
                sizes
                    .iter()
                    .map(|&n| Cell {
                        config: PipelineConfig {
                            pool_size: n,
                            budget: ((self.budget_fraction * n as f64).round() as usize).max(1),
                            ..base.clone()
                        },
                        arms: vec![
                            Arm::Selection(SelectionStrategy::Coverage),
                            Arm::Selection(SelectionStrategy::Random),
                        ],
                    })
                    .collect()
            }
            ExperimentName::RationaleSupervision => {
                let betas = if self.betas.is_empty() { vec![1.0, 0.5] } else { self.betas.clone() };
                vec![Cell { config: base.clone(), arms: betas.into_iter().map(Arm::Beta).collect() }]
            }
        };
        if cells.is_empty() {
            return Err(Error::invalid("experiment grid has no cells"));
        }
        for cell in &cells {
            for &arm in &cell.arms {
                arm_config(&cell.config, arm).validate()?;
            }
        }
        Ok(cells)
    }
}

fn or_default(values: &[usize], fallback: &[usize]) -> Vec<usize> {
    if values.is_empty() {
        fallback.to_vec()
    } else {
        values.to_vec()
    }
}

fn arm_config(config: &PipelineConfig, arm: Arm) -> PipelineConfig {
    match arm {
        Arm::Selection(selection) => PipelineConfig { selection, ..config.clone() },
        Arm::Beta(beta) => PipelineConfig { beta, ..config.clone() },
        Arm::Bridge | Arm::Direct => config.clone(),
    }
}

/// One CSV line: a (cell, seed, arm) student evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub experiment: ExperimentName,
    pub cell: usize,
    pub budget: usize,
    pub pool_size: usize,
    pub assistant_capacity: usize,
    pub student_capacity: usize,
    pub beta: f64,
    pub selection: SelectionStrategy,
    pub seed: u64,
    pub arm: String,
    pub risk: f64,
    pub accuracy: f64,
    pub multi_task_risk: f64,
    pub assistant_accuracy: Option<f64>,
    #[serde(rename = "delta_A_proxy")]
    pub delta_a_proxy: Option<f64>,
    pub assistant_student_disagreement: Option<f64>,
}

impl CurveRow {
    fn from_run(experiment: ExperimentName, cell: usize, config: &PipelineConfig, arm: Arm, r: &SimRunResult) -> Self {
        Self {
            experiment,
            cell,
            budget: r.budget,
            pool_size: r.pool_size,
            assistant_capacity: config.assistant_capacity,
            student_capacity: config.student_capacity,
            beta: r.beta,
            selection: r.selection,
            seed: r.seed,
            arm: arm.label(),
            risk: r.student.risk,
            accuracy: r.student.accuracy,
            multi_task_risk: r.student.multi_task_risk,
            assistant_accuracy: r.assistant.map(|a| a.accuracy),
            delta_a_proxy: r.delta_a_proxy,
            assistant_student_disagreement: r.assistant_student_disagreement,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (zero for a single value).
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub arm: String,
    pub budget: usize,
    pub pool_size: usize,
    pub assistant_capacity: usize,
    pub accuracy: MeanStd,
    pub risk: MeanStd,
    pub assistant_accuracy: Option<MeanStd>,
    pub delta_a_proxy: Option<MeanStd>,
    pub assistant_student_disagreement: Option<MeanStd>,
}

/// Paired one-sided comparison `treatment - control` over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub mean_difference: f64,
    pub t_statistic: f64,
    /// P-value of the one-sided alternative "mean difference > 0".
    pub p_value: f64,
    pub pairs: usize,
}

/// Paired t-test on `a[i] - b[i]`. A zero-variance difference gives `t = +-inf` (or 0).
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid("paired test needs two equally long samples of size >= 2"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let MeanStd { mean, std } = MeanStd::of(&diffs);
    let n = diffs.len() as f64;
    let se = std / n.sqrt();
    let t = if se > 0.0 {
        mean / se
    } else if mean == 0.0 {
        0.0
    } else {
        mean.signum() * f64::INFINITY
    };
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).map_err(|e| Error::Numerical(e.to_string()))?;
    let p_value = if t.is_infinite() {
        if t > 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        1.0 - dist.cdf(t)
    };
    Ok(PairedTest { mean_difference: mean, t_statistic: t, p_value, pairs: diffs.len() })
}

/// Average ranks (1-based), ties sharing their mean rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (MeanStd::of(x).mean, MeanStd::of(y).mean);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return f64::NAN;
    }
    cov / (vx * vy).sqrt()
}

/// Spearman rank correlation; NaN when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    pearson(&ranks(x), &ranks(y))
}

/// Least-squares slope of `ln y` against `ln x` over the positive pairs; `None` with fewer than two.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).unzip();
    if lx.len() < 2 {
        return None;
    }
    let (mx, my) = (MeanStd::of(&lx).mean, MeanStd::of(&ly).mean);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / sxx)
}

/// Experiment-level statistics; which fields are set depends on the experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub cells: Vec<CellSummary>,
    /// Spearman correlation between `n` and the per-seed bridge-minus-direct accuracy gap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_trend_spearman: Option<f64>,
    /// Coverage minus random bridge accuracy, per cell.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub selection_tests: Vec<PairedTest>,
    /// Last beta arm minus first beta arm, on assistant-student disagreement.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disagreement_test: Option<PairedTest>,
    /// Per assistant capacity: `-d ln(risk) / d ln(B)` for the assistant and the direct student.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub convergence_exponents: BTreeMap<usize, ConvergenceExponents>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceExponents {
    pub assistant_from_teacher: Option<f64>,
    pub student_from_teacher: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub experiment: ExperimentName,
    pub seeds: Vec<u64>,
    pub rows: Vec<CurveRow>,
    pub summary: ExperimentSummary,
}

/// Runs every (cell, seed) in parallel; rows come back in (cell, seed, arm) order regardless of scheduling.
///
/// Seed `s` fixes both the task draw and the pipeline randomness, so arms at the same seed are paired.
pub fn run_experiment(name: ExperimentName, grid: &ExperimentGrid, seeds: &[u64]) -> Result<CurveTable> {
    if seeds.is_empty() {
        return Err(Error::invalid("need at least one seed"));
    }
    let cells = grid.cells(name)?;
    let jobs: Vec<(usize, u64)> = (0..cells.len()).flat_map(|c| seeds.iter().map(move |&s| (c, s))).collect();
    let rows: Vec<Vec<CurveRow>> = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let task = gen_task(&TaskConfig { seed, ..grid.task.clone() })?;
            let cell = &cells[c];
            let mut out = Vec::with_capacity(cell.arms.len());
            let shared = pipeline::phase1(&task, &PipelineConfig { seed, ..cell.config.clone() })?;
            for &arm in &cell.arms {
                let config = PipelineConfig { seed, ..arm_config(&cell.config, arm) };
                let run = match arm {
                    Arm::Direct => pipeline::run_direct_from(&task, &config, &shared)?,
                    Arm::Bridge => pipeline::run_bridge_from(&task, &config, &shared)?,
                    Arm::Beta(_) => pipeline::run_bridge_from(&task, &config, &shared)?,
                    Arm::Selection(_) => pipeline::run_bridge(&task, &config)?,
                };
                out.push(CurveRow::from_run(name, c, &config, arm, &run));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<CurveRow> = rows.into_iter().flatten().collect();
    let summary = summarize(name, &cells, seeds, &rows)?;
    Ok(CurveTable { experiment: name, seeds: seeds.to_vec(), rows, summary })
}

fn column(rows: &[&CurveRow], f: impl Fn(&CurveRow) -> Option<f64>) -> Option<Vec<f64>> {
    rows.iter().map(|r| f(r)).collect()
}

fn summarize(name: ExperimentName, cells: &[Cell], seeds: &[u64], rows: &[CurveRow]) -> Result<ExperimentSummary> {
    let pick =
        |cell: usize, arm: &str| -> Vec<&CurveRow> { rows.iter().filter(|r| r.cell == cell && r.arm == arm).collect() };
    let mut summary = ExperimentSummary::default();
    for (c, cell) in cells.iter().enumerate() {
        for &arm in &cell.arms {
            let label = arm.label();
            let rs = pick(c, &label);
            summary.cells.push(CellSummary {
                cell: c,
                arm: label,
                budget: rs[0].budget,
                pool_size: rs[0].pool_size,
                assistant_capacity: rs[0].assistant_capacity,
                accuracy: MeanStd::of(&column(&rs, |r| Some(r.accuracy)).unwrap_or_default()),
                risk: MeanStd::of(&column(&rs, |r| Some(r.risk)).unwrap_or_default()),
                assistant_accuracy: column(&rs, |r| r.assistant_accuracy).map(|v| MeanStd::of(&v)),
                delta_a_proxy: column(&rs, |r| r.delta_a_proxy).map(|v| MeanStd::of(&v)),
                assistant_student_disagreement: column(&rs, |r| r.assistant_student_disagreement)
                    .map(|v| MeanStd::of(&v)),
            });
        }
    }
    let accuracies = |cell: usize, arm: &str| -> Vec<f64> { pick(cell, arm).iter().map(|r| r.accuracy).collect() };
    match name {
        ExperimentName::DataScaling => {
            let mut ns = Vec::new();
            let mut gaps = Vec::new();
            for (c, cell) in cells.iter().enumerate() {
                for (b, d) in accuracies(c, "bridge").iter().zip(accuracies(c, "direct")) {
                    ns.push(cell.config.pool_size as f64);
                    gaps.push(b - d);
                }
            }
            summary.gap_trend_spearman = Some(spearman(&ns, &gaps));
        }
        ExperimentName::SelectionQuality if seeds.len() >= 2 => {
            for c in 0..cells.len() {
                summary.selection_tests.push(paired_t_test(&accuracies(c, "coverage"), &accuracies(c, "random"))?);
            }
        }
        ExperimentName::RationaleSupervision if seeds.len() >= 2 => {
            let arms = &cells[0].arms;
            if arms.len() >= 2 {
                let series = |arm: Arm| -> Vec<f64> {
                    pick(0, &arm.label()).iter().map(|r| r.assistant_student_disagreement.unwrap_or(f64::NAN)).collect()
                };
                let last = series(arms[arms.len() - 1]);
                let first = series(arms[0]);
                summary.disagreement_test = Some(paired_t_test(&last, &first)?);
            }
        }
        ExperimentName::CapacityGap => {
            let mut by_capacity: BTreeMap<usize, Vec<&CellSummary>> = BTreeMap::new();
            for s in &summary.cells {
                by_capacity.entry(s.assistant_capacity).or_default().push(s);
            }
            let mut exps = BTreeMap::new();
            for (cap, group) in by_capacity {
                let slope = |arm: &str, f: &dyn Fn(&CellSummary) -> Option<f64>| -> Option<f64> {
                    let (b, r): (Vec<f64>, Vec<f64>) = group
                        .iter()
                        .filter(|s| s.arm == arm)
                        .filter_map(|s| f(s).map(|v| (s.budget as f64, v)))
                        .unzip();
                    log_log_slope(&b, &r).map(|s| -s)
                };
                exps.insert(
                    cap,
                    ConvergenceExponents {
                        assistant_from_teacher: slope("bridge", &|s| s.assistant_accuracy.map(|a| 1.0 - a.mean)),
                        student_from_teacher: slope("direct", &|s| Some(s.risk.mean)),
                    },
                );
            }
            summary.convergence_exponents = exps;
        }
        _ => {}
    }
    Ok(summary)
}

impl CurveTable {
    /// Writes one header plus one line per row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Report(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Report(e.to_string()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Report(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_grid() -> ExperimentGrid {
        ExperimentGrid {
            task: TaskConfig { n_total: 400, n_heldout: 200, ..Default::default() },
            pipeline: PipelineConfig {
                budget: 20,
                pool_size: 200,
                assistant_capacity: 60,
                student_capacity: 10,
                clusters: 4,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn names_round_trip() {
        for e in ExperimentName::ALL {
            assert_eq!(e.as_str().parse::<ExperimentName>().unwrap(), e);
        }
        assert!("scaling".parse::<ExperimentName>().is_err());
    }

    #[test]
    fn spearman_and_ranks() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 35.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert!(spearman(&[1.0, 2.0], &[5.0, 5.0]).is_nan());
    }

    #[test]
    fn paired_test_matches_hand_computation() {
        // diffs 1, 2, 3: mean 2, sd 1, t = 2 * sqrt(3)
        let t = paired_t_test(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((t.t_statistic - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        // two degrees of freedom: sf(t) = 1/2 - t / (2 sqrt(t^2 + 2))
        let tt = t.t_statistic;
        let expected = 0.5 - tt / (2.0 * (tt * tt + 2.0).sqrt());
        assert!((t.p_value - expected).abs() < 1e-9, "{}", t.p_value);
        assert_eq!(paired_t_test(&[1.0, 1.0], &[1.0, 1.0]).unwrap().t_statistic, 0.0);
    }

    #[test]
    fn log_log_slope_recovers_power() {
        let x = [10.0, 20.0, 40.0, 80.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((log_log_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&[1.0], &[1.0]), None);
    }

    #[test]
    fn single_cell_grid_gives_one_row_per_arm_and_seed() {
        let grid = ExperimentGrid { pool_sizes: vec![100], ..tiny_grid() };
        let t = run_experiment(ExperimentName::DataScaling, &grid, &[7]).unwrap();
        assert_eq!(t.rows.len(), 2);
        let csv = t.to_csv_string().unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("experiment,cell,budget,pool_size"));
    }

    #[test]
    fn parallel_run_is_reproducible() {
        let grid = ExperimentGrid { pool_sizes: vec![20, 100], ..tiny_grid() };
        let a = run_experiment(ExperimentName::DataScaling, &grid, &[1, 2]).unwrap();
        let b = run_experiment(ExperimentName::DataScaling, &grid, &[1, 2]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 8);
        assert!(a.summary.gap_trend_spearman.is_some());
    }

    #[test]
    fn invalid_grids_are_rejected() {
        let grid = ExperimentGrid { pool_sizes: vec![10], ..tiny_grid() };
        assert!(run_experiment(ExperimentName::DataScaling, &grid, &[0]).is_err());
        assert!(run_experiment(ExperimentName::DataScaling, &tiny_grid(), &[]).is_err());
        let bad_beta = ExperimentGrid { betas: vec![0.0], ..tiny_grid() };
        assert!(run_experiment(ExperimentName::RationaleSupervision, &bad_beta, &[0]).is_err());
    }
}
