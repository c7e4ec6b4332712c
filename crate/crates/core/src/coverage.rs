//! Coverage radii, farthest-first traversal, exhaustive k-center and the
//! certificate attached to every selection.
//!
//! All routines work on row indices of an [`EmbeddingSet`] under the
//! Euclidean metric. Ties between equally distant candidates are broken by
//! ascending id.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::RegionAssignment;
use crate::dataset::EmbeddingSet;
use crate::error::{Error, Result};

/// Combinatorial guard for [`optimal_kcenter_bruteforce`].
pub const BRUTE_FORCE_MAX_N: usize = 15;
pub const BRUTE_FORCE_MAX_K: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Mean over all points of the distance to the nearest seed.
    pub mean_radius: f64,
    /// Largest nearest-seed distance (the k-center objective).
    pub maxmin_radius: f64,
    pub nearest_distances: Vec<f64>,
    pub seed_count: usize,
}

/// Distance from every row to its nearest seed row.
pub fn nearest_seed_distances(points: &EmbeddingSet, seeds: &[usize]) -> Vec<f64> {
    (0..points.len())
        .into_par_iter()
        .map(|i| seeds.iter().map(|&s| points.distance(i, s)).fold(f64::INFINITY, f64::min))
        .collect()
}

pub fn coverage_radius(points: &EmbeddingSet, seeds: &[usize]) -> Result<CoverageReport> {
    if seeds.is_empty() {
        return Err(Error::invalid("coverage radius needs a non-empty seed set"));
    }
    if let Some(&bad) = seeds.iter().find(|&&s| s >= points.len()) {
        return Err(Error::invalid(format!("seed row {bad} outside the point set")));
    }
    let nearest = nearest_seed_distances(points, seeds);
    let mean_radius = nearest.iter().sum::<f64>() / nearest.len() as f64;
    let maxmin_radius = nearest.iter().copied().fold(0.0, f64::max);
    Ok(CoverageReport {
        mean_radius,
        maxmin_radius,
        nearest_distances: nearest,
        seed_count: seeds.iter().unique().count(),
    })
}

pub fn coverage_radius_ids<'a>(
    points: &EmbeddingSet,
    seeds: impl IntoIterator<Item = &'a str>,
) -> Result<CoverageReport> {
    coverage_radius(points, &points.indices_of(seeds)?)
}

/// `rows` sorted by ascending id.
pub(crate) fn id_order(points: &EmbeddingSet, rows: &[usize]) -> Vec<usize> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|&a, &b| points.id(a).cmp(points.id(b)));
    sorted
}

/// Greedy farthest-first continuation from `chosen` over `candidates`, until `k` points are held.
pub(crate) fn farthest_first_from(
    points: &EmbeddingSet,
    candidates: &[usize],
    mut chosen: Vec<usize>,
    k: usize,
) -> Vec<usize> {
    let order = id_order(points, candidates);
    let mut nearest: Vec<f64> =
        order.iter().map(|&i| chosen.iter().map(|&s| points.distance(i, s)).fold(f64::INFINITY, f64::min)).collect();
    let mut taken: Vec<bool> = order.iter().map(|i| chosen.contains(i)).collect();
    while chosen.len() < k.min(candidates.len()) {
        let mut best: Option<usize> = None;
        for (pos, &d) in nearest.iter().enumerate() {
            if taken[pos] {
                continue;
            }
            if best.is_none_or(|b| d > nearest[b]) {
                best = Some(pos);
            }
        }
        let Some(pos) = best else { break };
        let next = order[pos];
        taken[pos] = true;
        chosen.push(next);
        for (p, &i) in order.iter().enumerate() {
            let d = points.distance(i, next);
            if d < nearest[p] {
                nearest[p] = d;
            }
        }
    }
    chosen
}

/// Farthest-first (Gonzalez) traversal of the whole set starting at row `start`.
pub fn gonzalez(points: &EmbeddingSet, k: usize, start: usize) -> Result<Vec<usize>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k must lie in [1, {n}], got {k}")));
    }
    if start >= n {
        return Err(Error::invalid(format!("start row {start} outside the point set")));
    }
    let all: Vec<usize> = (0..n).collect();
    Ok(farthest_first_from(points, &all, vec![start], k))
}

pub fn gonzalez_from_id(points: &EmbeddingSet, k: usize, start: &str) -> Result<Vec<usize>> {
    let row = points.index_of(start).ok_or_else(|| Error::invalid(format!("unknown start id {start:?}")))?;
    gonzalez(points, k, row)
}

/// Max-min radius of a center set over an arbitrary subset of rows.
pub(crate) fn maxmin_over(points: &EmbeddingSet, rows: &[usize], centers: &[usize]) -> f64 {
    rows.iter()
        .map(|&i| centers.iter().map(|&c| points.distance(i, c)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KCenterSolution {
    pub radius: f64,
    pub centers: Vec<usize>,
}

/// Exact discrete k-center by enumerating every `C(n, k)` center subset.
pub fn optimal_kcenter_bruteforce(points: &EmbeddingSet, k: usize) -> Result<KCenterSolution> {
    let n = points.len();
    if n > BRUTE_FORCE_MAX_N || k > BRUTE_FORCE_MAX_K {
        return Err(Error::TooLarge { n, k, max_n: BRUTE_FORCE_MAX_N, max_k: BRUTE_FORCE_MAX_K });
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k must lie in [1, {n}], got {k}")));
    }
    let all: Vec<usize> = (0..n).collect();
    let mut best = KCenterSolution { radius: f64::INFINITY, centers: Vec::new() };
    for centers in (0..n).combinations(k) {
        let r = maxmin_over(points, &all, &centers);
        if r < best.radius {
            best = KCenterSolution { radius: r, centers };
        }
    }
    Ok(best)
}

/// Largest pairwise distance among `rows` (0 for fewer than two rows).
pub fn diameter(points: &EmbeddingSet, rows: &[usize]) -> f64 {
    rows.par_iter()
        .enumerate()
        .map(|(a, &i)| rows[a + 1..].iter().map(|&j| points.distance(i, j)).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

/// Row nearest the centroid of `rows`, ties by id.
pub fn medoid(points: &EmbeddingSet, rows: &[usize]) -> Option<usize> {
    if rows.is_empty() {
        return None;
    }
    let d = points.dim();
    let mut centroid = vec![0.0; d];
    for &i in rows {
        for (c, v) in centroid.iter_mut().zip(points.row(i)) {
            *c += v;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= rows.len() as f64);
    id_order(points, rows).into_iter().min_by(|&a, &b| {
        let da = crate::dataset::squared_euclidean(points.row(a), &centroid);
        let db = crate::dataset::squared_euclidean(points.row(b), &centroid);
        da.total_cmp(&db)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionTermKind {
    /// Farthest-first max-min radius at the region's quota; within 2x of the optimum.
    GreedyRadius,
    /// Quota zero: the region's own diameter.
    Diameter,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTerm {
    pub region: usize,
    pub size: usize,
    pub quota: usize,
    pub term: f64,
    pub kind: RegionTermKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum DiffTerm {
    /// `alpha = 0`: pure coverage, no difficulty penalty.
    Omitted,
    /// `alpha > 0` with no user-supplied `delta_diff`.
    Unquantified,
    /// `alpha * delta_diff`.
    Quantified(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridCertificate {
    pub region_terms: Vec<RegionTerm>,
    pub max_region_term: f64,
    /// Largest intra-region diameter.
    pub delta_cluster: f64,
    pub alpha: f64,
    pub delta_diff: Option<f64>,
    pub diff_term: DiffTerm,
    /// `max_region_term + delta_cluster` plus the difficulty term when quantified.
    pub bound_value: f64,
    /// Factor by which greedy region terms may exceed the optimal per-region radius.
    pub greedy_approximation_factor: f64,
}

/// Coverage bound for a region-wise selection with per-region quotas.
pub fn hybrid_certificate(
    points: &EmbeddingSet,
    assignment: &RegionAssignment,
    quotas: &[usize],
    alpha: f64,
    delta_diff: Option<f64>,
) -> Result<HybridCertificate> {
    if assignment.len() != points.len() {
        return Err(Error::invalid("assignment does not cover the point set"));
    }
    if quotas.len() != assignment.regions() {
        return Err(Error::invalid(format!("{} quotas for {} regions", quotas.len(), assignment.regions())));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if let Some(dd) = delta_diff {
        if !(dd.is_finite() && dd >= 0.0) {
            return Err(Error::invalid("delta_diff must be finite and non-negative"));
        }
    }
    let mut region_terms = Vec::with_capacity(quotas.len());
    let mut delta_cluster: f64 = 0.0;
    for (c, rows) in assignment.groups().into_iter().enumerate() {
        let q = quotas[c];
        if q > rows.len() {
            return Err(Error::invalid(format!("quota {q} exceeds size {} of region {c}", rows.len())));
        }
        let diam = diameter(points, &rows);
        delta_cluster = delta_cluster.max(diam);
        let (term, kind) = if rows.is_empty() {
            (0.0, RegionTermKind::Empty)
        } else if q == 0 {
            (diam, RegionTermKind::Diameter)
        } else {
            let start = medoid(points, &rows).expect("non-empty region");
            let centers = farthest_first_from(points, &rows, vec![start], q);
            (maxmin_over(points, &rows, &centers), RegionTermKind::GreedyRadius)
        };
        region_terms.push(RegionTerm { region: c, size: rows.len(), quota: q, term, kind });
    }
    let max_region_term = region_terms.iter().map(|t| t.term).fold(0.0, f64::max);
    let diff_term = match delta_diff {
        _ if alpha == 0.0 => DiffTerm::Omitted,
        None => DiffTerm::Unquantified,
        Some(dd) => DiffTerm::Quantified(alpha * dd),
    };
    let extra = match diff_term {
        DiffTerm::Quantified(v) => v,
        _ => 0.0,
    };
    Ok(HybridCertificate {
        region_terms,
        max_region_term,
        delta_cluster,
        alpha,
        delta_diff,
        diff_term,
        bound_value: max_region_term + delta_cluster + extra,
        greedy_approximation_factor: 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> EmbeddingSet {
        EmbeddingSet::with_sequential_ids(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn radius_examples() {
        let x = line(&[0.0, 1.0, 2.0]);
        let r = coverage_radius(&x, &[1]).unwrap();
        assert_eq!(r.nearest_distances, vec![1.0, 0.0, 1.0]);
        assert!((r.mean_radius - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.maxmin_radius, 1.0);
        let full = coverage_radius(&x, &[0, 1, 2]).unwrap();
        assert_eq!((full.mean_radius, full.maxmin_radius), (0.0, 0.0));
        assert!(coverage_radius(&x, &[]).is_err());
        assert!(coverage_radius(&x, &[3]).is_err());
    }

    #[test]
    fn gonzalez_hand_trace() {
        let x = line(&[0.0, 1.0, 2.0, 3.0, 10.0]);
        let s = gonzalez(&x, 2, 0).unwrap();
        assert_eq!(s, vec![0, 4]);
        let all: Vec<usize> = (0..5).collect();
        assert_eq!(maxmin_over(&x, &all, &s), 3.0);
        let full = gonzalez(&x, 5, 2).unwrap();
        assert_eq!(full.iter().copied().sorted().collect::<Vec<_>>(), all);
        assert_eq!(maxmin_over(&x, &all, &full), 0.0);
        assert!(gonzalez(&x, 6, 0).is_err());
    }

    #[test]
    fn gonzalez_ties_by_id() {
        // rows 0 and 2 are both at distance 1 from the start
        let x = line(&[-1.0, 0.0, 1.0]);
        assert_eq!(gonzalez(&x, 2, 1).unwrap(), vec![1, 0]);
    }

    #[test]
    fn bruteforce_examples() {
        let x = line(&[0.0, 1.0, 2.0, 3.0, 10.0]);
        let opt = optimal_kcenter_bruteforce(&x, 2).unwrap();
        assert_eq!(opt.radius, 2.0);
        assert!(3.0 <= 2.0 * opt.radius);
        let four = line(&[0.0, 1.0, 5.0, 7.0]);
        assert_eq!(optimal_kcenter_bruteforce(&four, 4).unwrap().radius, 0.0);
        assert_eq!(optimal_kcenter_bruteforce(&line(&[0.0, 10.0]), 1).unwrap().radius, 10.0);
        let big = line(&(0..16).map(f64::from).collect::<Vec<_>>());
        assert!(matches!(optimal_kcenter_bruteforce(&big, 2), Err(Error::TooLarge { .. })));
        assert!(matches!(optimal_kcenter_bruteforce(&x, 5), Err(Error::TooLarge { .. })));
        assert!(optimal_kcenter_bruteforce(&four, 0).is_err());
    }

    #[test]
    fn certificate_single_region_collapses_to_greedy() {
        let x = line(&[0.0, 1.0, 2.0, 3.0, 10.0]);
        let a = RegionAssignment::from_labels(x.ids().to_vec(), vec![0; 5], 1).unwrap();
        let cert = hybrid_certificate(&x, &a, &[2], 0.5, None).unwrap();
        // medoid of mean 3.2 is the point 3; farthest from it is 10
        let greedy = farthest_first_from(&x, &[0, 1, 2, 3, 4], vec![3], 2);
        assert_eq!(greedy, vec![3, 4]);
        assert_eq!(cert.max_region_term, 3.0);
        assert_eq!(cert.delta_cluster, 10.0);
        assert_eq!(cert.diff_term, DiffTerm::Unquantified);
        assert_eq!(cert.bound_value, 13.0);
    }

    #[test]
    fn certificate_two_far_regions() {
        let x = line(&[0.0, 0.5, 1.0, 100.0, 100.25, 101.0]);
        let a = RegionAssignment::from_labels(x.ids().to_vec(), vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let cert = hybrid_certificate(&x, &a, &[1, 2], 0.0, Some(5.0)).unwrap();
        assert_eq!(cert.delta_cluster, 1.0);
        assert_eq!(cert.diff_term, DiffTerm::Omitted);
        assert!((cert.bound_value - (cert.max_region_term + 1.0)).abs() < 1e-12);
        assert!(cert.bound_value >= cert.max_region_term);
    }

    #[test]
    fn certificate_zero_quota_uses_diameter() {
        let x = line(&[0.0, 2.0, 50.0]);
        let a = RegionAssignment::from_labels(x.ids().to_vec(), vec![0, 0, 1], 3).unwrap();
        let cert = hybrid_certificate(&x, &a, &[0, 1, 0], 1.0, Some(0.5)).unwrap();
        assert_eq!(cert.region_terms[0].kind, RegionTermKind::Diameter);
        assert_eq!(cert.region_terms[0].term, 2.0);
        assert_eq!(cert.region_terms[2].kind, RegionTermKind::Empty);
        assert_eq!(cert.diff_term, DiffTerm::Quantified(0.5));
        assert_eq!(cert.bound_value, 2.0 + 2.0 + 0.5);
        assert!(hybrid_certificate(&x, &a, &[3, 0, 0], 1.0, None).is_err());
    }
}
