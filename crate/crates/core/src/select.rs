//! Coverage-guided budgeted selection.
//!
//! Pipeline: normalise difficulty, seed each region by farthest-point
//! sampling, score every pool point by its distance to the global seed set,
//! blend the two scores, allocate per-region quotas and take the top scores
//! of every region.

use serde::{Deserialize, Serialize};

use crate::cluster::{self, ClusterBackend, RegionAssignment};
use crate::coverage::{self, HybridCertificate};
use crate::dataset::{self, BudgetLedger, Dataset, EmbeddingSet, PoolPartition};
use crate::error::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    pub budget: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_clusters")]
    pub clusters: usize,
    #[serde(default = "default_m0")]
    pub m0: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_warmup")]
    pub warmup_fraction: f64,
    #[serde(default)]
    pub backend: ClusterBackend,
    /// Optional bound on the coverage loss from favouring difficult points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_diff: Option<f64>,
}

fn default_alpha() -> f64 {
    0.5
}
fn default_clusters() -> usize {
    16
}
fn default_m0() -> usize {
    3
}
fn default_eps() -> f64 {
    DEFAULT_EPS
}
fn default_warmup() -> f64 {
    0.1
}

impl SelectionConfig {
    /// `alpha = 0.5`, 16 regions, 3 seeds per region, 10% warm-up.
    pub fn new(budget: usize) -> Self {
        Self {
            budget,
            alpha: default_alpha(),
            clusters: default_clusters(),
            m0: default_m0(),
            eps: DEFAULT_EPS,
            seed: 0,
            warmup_fraction: default_warmup(),
            backend: ClusterBackend::Gmm,
            delta_diff: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::invalid("budget must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.clusters == 0 {
            return Err(Error::invalid("clusters must be at least 1"));
        }
        if self.m0 == 0 {
            return Err(Error::invalid("m0 must be at least 1"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid("eps must be positive"));
        }
        if !(self.warmup_fraction > 0.0 && self.warmup_fraction < 1.0) {
            return Err(Error::invalid("warmup_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// `D(x) / (max D + eps)`, kept strictly below 1.
pub fn normalize_difficulty(raw: &[f64], eps: f64) -> Result<Vec<f64>> {
    if let Some(bad) = raw.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::invalid(format!("raw difficulty must be finite and non-negative, got {bad}")));
    }
    let max = raw.iter().copied().fold(0.0, f64::max);
    let denom = max + eps;
    let below_one = 1.0 - f64::EPSILON / 2.0;
    Ok(raw.iter().map(|&d| (d / denom).min(below_one)).collect())
}

/// Farthest-point seeds of one region: the region medoid first, then greedy max-min.
pub fn fps_seeds(points: &EmbeddingSet, region: &[usize], m0: usize) -> Result<Vec<usize>> {
    let first = coverage::medoid(points, region).ok_or_else(|| Error::invalid("cannot seed an empty region"))?;
    Ok(coverage::farthest_first_from(points, region, vec![first], m0.max(1)))
}

/// Min-max normalised distance of every row to its nearest seed.
pub fn diversity_scores(points: &EmbeddingSet, seeds: &[usize], eps: f64) -> Result<Vec<f64>> {
    if seeds.is_empty() {
        return Err(Error::invalid("diversity scores need a non-empty seed set"));
    }
    let dist = coverage::nearest_seed_distances(points, seeds);
    let lo = dist.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = dist.iter().copied().fold(0.0, f64::max);
    let span = hi - lo + eps;
    Ok(dist.iter().map(|d| ((d - lo) / span).clamp(0.0, 1.0)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotaPlan {
    pub quotas: Vec<usize>,
    pub q_min: usize,
    /// False when the per-region floors alone exceeded the budget and some were relaxed.
    pub feasible: bool,
}

impl QuotaPlan {
    pub fn total(&self) -> usize {
        self.quotas.iter().sum()
    }
}

/// `q_min = max(1, floor(B / 10C))`.
pub fn quota_floor(budget: usize, regions: usize) -> usize {
    (budget / (10 * regions)).max(1)
}

/// Proportional quotas with a protective floor, repaired to sum exactly to `budget`.
///
/// Provisional quotas are `max(q_min, floor(w_c B))` capped at the region size.
/// A deficit is filled one unit at a time to the uncapped region furthest
/// below its ideal share `w_c B` (ties: lower index); a surplus is removed
/// from the region furthest above it (ties: higher index) without crossing
/// its floor. When the floors alone exceed the budget they are dropped on
/// the lightest regions first and the plan is flagged infeasible.
pub fn allocate_quotas(weights: &[f64], budget: usize, region_sizes: &[usize]) -> Result<QuotaPlan> {
    let c = weights.len();
    if c == 0 || region_sizes.len() != c {
        return Err(Error::invalid("weights and region sizes must be non-empty and aligned"));
    }
    if budget == 0 {
        return Err(Error::invalid("budget must be at least 1"));
    }
    if weights.iter().any(|w| !(0.0..=1.0).contains(w)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("region weights must sum to 1"));
    }
    let capacity: usize = region_sizes.iter().sum();
    if budget > capacity {
        return Err(Error::invalid(format!("budget {budget} exceeds the pool size {capacity}")));
    }

    let q_min = quota_floor(budget, c);
    let mut floors: Vec<usize> = region_sizes.iter().map(|&s| s.min(q_min)).collect();
    let mut feasible = true;
    if floors.iter().sum::<usize>() > budget {
        feasible = false;
        let mut order: Vec<usize> = (0..c).collect();
        order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(b.cmp(&a)));
        for r in order {
            if floors.iter().sum::<usize>() <= budget {
                break;
            }
            floors[r] = 0;
        }
    }

    let ideal: Vec<f64> = weights.iter().map(|w| w * budget as f64).collect();
    let mut quotas: Vec<usize> = (0..c)
        .map(|r| {
            let proportional = (ideal[r] + 1e-9).floor() as usize;
            proportional.max(floors[r]).min(region_sizes[r])
        })
        .collect();
    let mut total: usize = quotas.iter().sum();
    while total < budget {
        let pick = (0..c)
            .filter(|&r| quotas[r] < region_sizes[r])
            .max_by(|&a, &b| (ideal[a] - quotas[a] as f64).total_cmp(&(ideal[b] - quotas[b] as f64)).then(b.cmp(&a)))
            .expect("budget within capacity");
        quotas[pick] += 1;
        total += 1;
    }
    while total > budget {
        let pick = (0..c)
            .filter(|&r| quotas[r] > floors[r])
            .max_by(|&a, &b| (quotas[a] as f64 - ideal[a]).total_cmp(&(quotas[b] as f64 - ideal[b])).then(a.cmp(&b)))
            .expect("floors fit within budget");
        quotas[pick] -= 1;
        total -= 1;
    }
    Ok(QuotaPlan { quotas, q_min, feasible })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub id: String,
    pub region: usize,
    pub d_bar: f64,
    pub n_bar: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub alpha: f64,
    /// One entry per pool point, in pool order.
    pub entries: Vec<ScoreEntry>,
}

/// Coverage evidence attached to a selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCertificate {
    /// Mean nearest-selected distance over the pool.
    pub mean_radius: f64,
    pub maxmin_radius: f64,
    pub hybrid: HybridCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Grouped by region, best score first within a region.
    pub selected_ids: Vec<String>,
    pub seed_ids: Vec<String>,
    pub quota_plan: QuotaPlan,
    pub score_table: ScoreTable,
    pub coverage_certificate: CoverageCertificate,
    pub ledger: BudgetLedger,
    pub config: SelectionConfig,
}

/// Runs scoring, quota allocation and region-wise top-q selection over `pool`.
///
/// `raw_difficulty` and `assignment` are aligned with the rows of `pool`.
pub fn select_budget(
    pool: &EmbeddingSet,
    raw_difficulty: &[f64],
    assignment: &RegionAssignment,
    config: &SelectionConfig,
) -> Result<SelectionResult> {
    config.validate()?;
    if raw_difficulty.len() != pool.len() {
        return Err(Error::invalid("difficulty vector does not match the pool"));
    }
    if assignment.ids.as_slice() != pool.ids() {
        return Err(Error::invalid("region assignment does not match the pool"));
    }
    if config.budget > pool.len() {
        return Err(Error::invalid(format!("budget {} exceeds the pool size {}", config.budget, pool.len())));
    }

    let d_bar = normalize_difficulty(raw_difficulty, config.eps)?;
    let groups = assignment.groups();
    let mut seeds = Vec::new();
    for rows in groups.iter().filter(|g| !g.is_empty()) {
        seeds.extend(fps_seeds(pool, rows, config.m0)?);
    }
    let n_bar = diversity_scores(pool, &seeds, config.eps)?;
    let alpha = config.alpha;
    let entries: Vec<ScoreEntry> = (0..pool.len())
        .map(|i| ScoreEntry {
            id: pool.id(i).to_string(),
            region: assignment.labels[i],
            d_bar: d_bar[i],
            n_bar: n_bar[i],
            s: alpha * d_bar[i] + (1.0 - alpha) * n_bar[i],
        })
        .collect();

    let plan = allocate_quotas(&assignment.weights, config.budget, &assignment.region_sizes)?;
    let mut ledger = BudgetLedger::new(config.budget);
    let mut chosen_rows = Vec::with_capacity(config.budget);
    for (c, rows) in groups.iter().enumerate() {
        let mut ranked = rows.clone();
        ranked.sort_by(|&a, &b| entries[b].s.total_cmp(&entries[a].s).then_with(|| pool.id(a).cmp(pool.id(b))));
        let take = plan.quotas[c];
        ledger.consume(take)?;
        chosen_rows.extend_from_slice(&ranked[..take]);
    }

    let radius = coverage::coverage_radius(pool, &chosen_rows)?;
    let hybrid = coverage::hybrid_certificate(pool, assignment, &plan.quotas, alpha, config.delta_diff)?;
    Ok(SelectionResult {
        selected_ids: chosen_rows.iter().map(|&i| pool.id(i).to_string()).collect(),
        seed_ids: seeds.iter().map(|&i| pool.id(i).to_string()).collect(),
        quota_plan: plan,
        score_table: ScoreTable { alpha, entries },
        coverage_certificate: CoverageCertificate {
            mean_radius: radius.mean_radius,
            maxmin_radius: radius.maxmin_radius,
            hybrid,
        },
        ledger,
        config: config.clone(),
    })
}

/// Everything produced by [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub partition: PoolPartition,
    pub assignment: RegionAssignment,
    pub result: SelectionResult,
}

/// Warm-up split, clustering of the remaining pool and budgeted selection.
///
/// Examples without a difficulty score are rejected unless `alpha = 0`,
/// in which case difficulty does not enter the score.
pub fn run_pipeline(data: &Dataset, config: &SelectionConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    let set = &data.embeddings;
    let partition = dataset::split_warmup(set.ids(), config.warmup_fraction, config.seed)?;
    let pool_rows = partition.pool_rows(set);
    if config.budget > pool_rows.len() {
        return Err(Error::invalid(format!(
            "budget {} exceeds the pool size {} left after warm-up",
            config.budget,
            pool_rows.len()
        )));
    }
    let pool = set.subset(&pool_rows);
    let raw = pool_rows
        .iter()
        .map(|&i| match data.records[i].raw_difficulty {
            Some(d) => Ok(d),
            None if config.alpha == 0.0 => Ok(0.0),
            None => {
                Err(Error::invalid(format!("example {:?} has no difficulty score and alpha > 0", data.records[i].id)))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let assignment = cluster::partition(&pool, config.clusters, config.backend, config.seed)?;
    let result = select_budget(&pool, &raw, &assignment, config)?;
    Ok(PipelineOutcome { partition, assignment, result })
}
