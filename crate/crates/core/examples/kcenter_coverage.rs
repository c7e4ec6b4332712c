//! Farthest-first traversal against the exact k-center optimum, and a hybrid
//! coverage certificate for a region-wise selection.
//!
//! cargo run --example kcenter_coverage

use corebudget::cluster::{self, ClusterBackend};
use corebudget::coverage;
use corebudget::dataset::EmbeddingSet;
use corebudget::rng;
use rand::Rng;

fn main() -> corebudget::Result<()> {
    let mut stream = rng::stream(5, 0);
    let mut worst: f64 = 0.0;
    for trial in 0..5 {
        let rows: Vec<Vec<f64>> = (0..12).map(|_| (0..2).map(|_| stream.random_range(0.0..10.0)).collect()).collect();
        let points = EmbeddingSet::with_sequential_ids(&rows)?;
        let k = 3;
        let greedy = coverage::gonzalez(&points, k, 0)?;
        let greedy_radius = coverage::coverage_radius(&points, &greedy)?.maxmin_radius;
        let opt = coverage::optimal_kcenter_bruteforce(&points, k)?;
        let ratio = greedy_radius / opt.radius;
        worst = worst.max(ratio);
        println!("trial {trial}: greedy {greedy_radius:.3}  optimal {:.3}  ratio {ratio:.3}", opt.radius);
    }
    println!("worst ratio {worst:.3} (never above 2)\n");

    let rows: Vec<Vec<f64>> = (0..300)
        .map(|i| {
            let c = (i % 3) as f64 * 5.0;
            vec![c + stream.random_range(-1.0..1.0), stream.random_range(-1.0..1.0)]
        })
        .collect();
    let points = EmbeddingSet::with_sequential_ids(&rows)?;
    let assignment = cluster::partition(&points, 3, ClusterBackend::Gmm, 1)?;
    for (label, alpha, delta) in
        [("pure coverage", 0.0, None), ("hybrid, no bound", 0.5, None), ("hybrid", 0.5, Some(0.4))]
    {
        let cert = coverage::hybrid_certificate(&points, &assignment, &[4, 4, 4], alpha, delta)?;
        println!(
            "{label:<17} bound {:.3} = region {:.3} + cluster diameter {:.3}, difficulty term {:?}",
            cert.bound_value, cert.max_region_term, cert.delta_cluster, cert.diff_term
        );
    }
    Ok(())
}
