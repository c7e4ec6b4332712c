//! Fit a diagonal Gaussian mixture to three blobs and compare it with k-means.
//!
//! cargo run --example gmm_regions

use corebudget::cluster::{self, GmmOptions};
use corebudget::dataset::EmbeddingSet;
use corebudget::rng;
use rand_distr::{Distribution, Normal};

fn blobs(centers: &[[f64; 2]], per: usize, spread: f64, seed: u64) -> EmbeddingSet {
    let mut stream = rng::stream(seed, 0);
    let noise = Normal::new(0.0, spread).unwrap();
    let rows: Vec<Vec<f64>> = centers
        .iter()
        .flat_map(|c| (0..per).map(|_| c.to_vec()).collect::<Vec<_>>())
        .map(|c| c.iter().map(|v| v + noise.sample(&mut stream)).collect())
        .collect();
    EmbeddingSet::with_sequential_ids(&rows).unwrap()
}

fn main() -> corebudget::Result<()> {
    let points = blobs(&[[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]], 100, 0.8, 3);

    let fit = cluster::fit_gmm_traced(&points, &GmmOptions::new(3, 11))?;
    let model = &fit.model;
    println!("best restart {} of {}", fit.best_restart, fit.traces.len());
    for (r, trace) in fit.traces.iter().enumerate() {
        println!(
            "  restart {r}: {} iterations, mean log-likelihood {:.4}",
            trace.len(),
            trace.last().copied().unwrap_or(f64::NAN)
        );
    }
    for c in 0..3 {
        println!(
            "component {c}: weight {:.3}, mean {:?}, variance {:?}",
            model.weights()[c],
            model.mean(c).iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>(),
            model.variance(c).iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
        );
    }

    let regions = cluster::assign_regions(model, &points)?;
    println!("GMM region sizes:     {:?}", regions.region_sizes);
    let km = cluster::partition(&points, 3, cluster::ClusterBackend::KMeans, 11)?;
    println!("k-means region sizes: {:?}", km.region_sizes);

    println!("\nmodel as JSON:\n{}", model.to_json()?);
    Ok(())
}
