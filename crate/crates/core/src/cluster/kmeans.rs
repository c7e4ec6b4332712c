use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{distinct_rows, RegionAssignment};
use crate::dataset::{squared_euclidean, EmbeddingSet};
use crate::error::{Error, Result};
use crate::rng;

/// k-means++ seeding: first center uniform, then D²-weighted draws.
/// Returns the chosen row indices in draw order.
pub fn kmeanspp_init(points: &EmbeddingSet, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::invalid("need at least one center"));
    }
    let distinct = distinct_rows(points);
    if k > distinct {
        return Err(Error::invalid(format!("{k} centers requested but only {distinct} distinct points")));
    }
    let n = points.len();
    let mut rng = rng::stream(seed, 0x4b4d_5050);
    let mut centers = Vec::with_capacity(k);
    centers.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = (0..n).map(|i| squared_euclidean(points.row(i), points.row(centers[0]))).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        // fall back to the last positive-weight row if rounding runs past the end
        let mut pick = d2.iter().rposition(|&w| w > 0.0).unwrap();
        for (i, &w) in d2.iter().enumerate() {
            acc += w;
            if w > 0.0 && acc > target {
                pick = i;
                break;
            }
        }
        centers.push(pick);
        for (i, d) in d2.iter_mut().enumerate() {
            let nd = squared_euclidean(points.row(i), points.row(pick));
            if nd < *d {
                *d = nd;
            }
        }
    }
    Ok(centers)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub centers: Vec<Vec<f64>>,
    pub iterations_run: usize,
    pub inertia: f64,
}

impl KMeansModel {
    fn nearest(&self, x: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (c, center) in self.centers.iter().enumerate() {
            let d = squared_euclidean(x, center);
            if d < best.1 {
                best = (c, d);
            }
        }
        best.0
    }

    /// Nearest-center assignment, ties to the lower index.
    pub fn assign(&self, points: &EmbeddingSet) -> Result<RegionAssignment> {
        if self.centers.first().map(Vec::len) != Some(points.dim()) {
            return Err(Error::invalid("dimension mismatch between model and points"));
        }
        let labels = points.rows().map(|x| self.nearest(x)).collect();
        RegionAssignment::from_labels(points.ids().to_vec(), labels, self.centers.len())
    }
}

/// Lloyd iterations from k-means++ centers. An emptied cluster keeps its previous center.
pub fn kmeans(points: &EmbeddingSet, k: usize, max_iter: usize, seed: u64) -> Result<KMeansModel> {
    let init = kmeanspp_init(points, k, seed)?;
    let d = points.dim();
    let mut model = KMeansModel {
        centers: init.iter().map(|&i| points.row(i).to_vec()).collect(),
        iterations_run: 0,
        inertia: 0.0,
    };
    let mut labels = vec![usize::MAX; points.len()];
    for it in 0..max_iter {
        let next: Vec<usize> = points.rows().map(|x| model.nearest(x)).collect();
        if next == labels {
            break;
        }
        labels = next;
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (x, &l) in points.rows().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(x) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                model.centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        model.iterations_run = it + 1;
    }
    model.inertia = points.rows().map(|x| squared_euclidean(x, &model.centers[model.nearest(x)])).sum();
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(centers: &[[f64; 2]], per: usize, spread: f64, seed: u64) -> EmbeddingSet {
        let mut rng = rng::stream(seed, 1);
        let noise = Normal::new(0.0, spread).unwrap();
        let mut rows = Vec::new();
        for c in centers {
            for _ in 0..per {
                rows.push(vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]);
            }
        }
        EmbeddingSet::with_sequential_ids(&rows).unwrap()
    }

    #[test]
    fn two_points_two_centers() {
        let x = EmbeddingSet::with_sequential_ids(&[vec![0.0, 0.0], vec![10.0, 10.0]]).unwrap();
        for seed in 0..10 {
            let mut c = kmeanspp_init(&x, 2, seed).unwrap();
            c.sort();
            assert_eq!(c, vec![0, 1]);
        }
    }

    #[test]
    fn single_center_covers_every_row_over_seeds() {
        let x = EmbeddingSet::with_sequential_ids(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let mut seen = [false; 3];
        for seed in 0..64 {
            let c = kmeanspp_init(&x, 1, seed).unwrap();
            assert_eq!(c.len(), 1);
            seen[c[0]] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn too_many_centers_for_distinct_points() {
        let x = EmbeddingSet::with_sequential_ids(&[vec![1.0], vec![1.0], vec![2.0]]).unwrap();
        assert!(kmeanspp_init(&x, 3, 0).is_err());
        assert!(kmeanspp_init(&x, 2, 0).is_ok());
    }

    #[test]
    fn separated_clusters_get_one_center_each() {
        // Monte-Carlo check: cluster membership of the drawn centers decides success.
        let x = blobs(&[[0.0, 0.0], [100.0, 0.0], [0.0, 100.0]], 10, 0.5, 9);
        let cluster_of = |row: usize| row / 10;
        let hits = (0..100)
            .filter(|&seed| {
                let c = kmeanspp_init(&x, 3, seed).unwrap();
                let mut cl: Vec<usize> = c.iter().map(|&r| cluster_of(r)).collect();
                cl.sort();
                cl == vec![0, 1, 2]
            })
            .count();
        assert!(hits >= 90, "only {hits}/100 seeds covered all clusters");
    }

    #[test]
    fn lloyd_recovers_blobs() {
        let x = blobs(&[[0.0, 0.0], [20.0, 20.0]], 30, 1.0, 4);
        let m = kmeans(&x, 2, 100, 1).unwrap();
        let a = m.assign(&x).unwrap();
        assert_eq!(a.region_sizes.iter().sum::<usize>(), 60);
        assert!(a.region_sizes.iter().all(|&s| s == 30));
    }
}
