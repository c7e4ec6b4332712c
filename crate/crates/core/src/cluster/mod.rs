//! Semantic regions over the selection pool.
//!
//! The default backend is a diagonal-covariance Gaussian mixture fitted by EM
//! from k-means++ starts; plain k-means is available behind the same
//! [`RegionAssignment`] contract.

mod gmm;
mod kmeans;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataset::EmbeddingSet;
use crate::error::{Error, Result};

pub use gmm::{assign_regions, fit_gmm, fit_gmm_traced, GmmFit, GmmModel, GmmOptions, VAR_FLOOR};
pub use kmeans::{kmeans, kmeanspp_init, KMeansModel};

/// Hard partition of a point set into `C` regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionAssignment {
    pub ids: Vec<String>,
    /// Region index per row, aligned with `ids`.
    pub labels: Vec<usize>,
    pub region_sizes: Vec<usize>,
    /// `w_c = |R_c| / n`.
    pub weights: Vec<f64>,
}

impl RegionAssignment {
    pub fn from_labels(ids: Vec<String>, labels: Vec<usize>, regions: usize) -> Result<Self> {
        if ids.len() != labels.len() {
            return Err(Error::invalid("ids and labels differ in length"));
        }
        if ids.is_empty() || regions == 0 {
            return Err(Error::invalid("assignment needs at least one point and one region"));
        }
        let mut region_sizes = vec![0usize; regions];
        for &l in &labels {
            if l >= regions {
                return Err(Error::invalid(format!("region {l} outside [0, {regions})")));
            }
            region_sizes[l] += 1;
        }
        let n = ids.len() as f64;
        let weights = region_sizes.iter().map(|&s| s as f64 / n).collect();
        Ok(Self { ids, labels, region_sizes, weights })
    }

    pub fn regions(&self) -> usize {
        self.region_sizes.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn region_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id).map(|i| self.labels[i])
    }

    /// Row indices of region `c`, ascending.
    pub fn members(&self, c: usize) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, &l)| l == c).map(|(i, _)| i).collect()
    }

    /// Row indices grouped per region.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.regions()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ClusterBackend {
    #[default]
    Gmm,
    KMeans,
}

/// Fits the chosen backend on `points` and returns the hard assignment.
pub fn partition(
    points: &EmbeddingSet,
    regions: usize,
    backend: ClusterBackend,
    seed: u64,
) -> Result<RegionAssignment> {
    match backend {
        ClusterBackend::Gmm => {
            let model = fit_gmm(points, &GmmOptions::new(regions, seed))?;
            assign_regions(&model, points)
        }
        ClusterBackend::KMeans => kmeans(points, regions, 300, seed)?.assign(points),
    }
}

pub(crate) fn distinct_rows(points: &EmbeddingSet) -> usize {
    let canon = |v: f64| if v == 0.0 { 0u64 } else { v.to_bits() };
    points.rows().map(|r| r.iter().map(|&v| canon(v)).collect::<Vec<_>>()).collect::<HashSet<_>>().len()
}
