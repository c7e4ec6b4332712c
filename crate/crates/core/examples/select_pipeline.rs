//! End-to-end selection: warm-up split, regions, difficulty and diversity scores, quotas.
//!
//! cargo run --example select_pipeline

use corebudget::dataset::{Dataset, EmbeddingSet, ExampleRecord};
use corebudget::rng;
use corebudget::select::{self, SelectionConfig};
use rand_distr::{Distribution, Exp, Normal};

fn main() -> corebudget::Result<()> {
    let mut stream = rng::stream(42, 0);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let hardness = Exp::new(1.0).unwrap();
    let centers = [[0.0, 0.0, 0.0], [8.0, 0.0, 0.0], [0.0, 8.0, 0.0], [0.0, 0.0, 8.0]];
    let rows: Vec<Vec<f64>> =
        (0..400).map(|i| centers[i % 4].iter().map(|c| c + noise.sample(&mut stream)).collect()).collect();
    let embeddings = EmbeddingSet::with_sequential_ids(&rows)?;
    let records = embeddings
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| ExampleRecord {
            id: id.clone(),
            label: i % 4,
            raw_difficulty: Some(hardness.sample(&mut stream)),
        })
        .collect();
    let data = Dataset { embeddings, records };

    let config = SelectionConfig { clusters: 4, seed: 3, ..SelectionConfig::new(24) };
    let outcome = select::run_pipeline(&data, &config)?;
    let result = &outcome.result;
    println!(
        "warm-up {} / pool {} / budget {}",
        outcome.partition.warmup_ids.len(),
        outcome.partition.pool_ids.len(),
        config.budget
    );
    println!("region sizes {:?}", outcome.assignment.region_sizes);
    println!("quotas {:?} (q_min {})", result.quota_plan.quotas, result.quota_plan.q_min);
    println!("seeds    {:?}", result.seed_ids);
    println!("selected {:?}", result.selected_ids);
    let cert = &result.coverage_certificate;
    println!(
        "coverage: mean radius {:.3}, max-min radius {:.3}, certificate bound {:.3}",
        cert.mean_radius, cert.maxmin_radius, cert.hybrid.bound_value
    );

    let top: Vec<_> =
        result.score_table.entries.iter().filter(|e| result.selected_ids.contains(&e.id)).take(5).collect();
    for e in top {
        println!("  {} region {} D={:.3} n={:.3} s={:.3}", e.id, e.region, e.d_bar, e.n_bar, e.s);
    }
    Ok(())
}
