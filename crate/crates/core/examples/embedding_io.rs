//! Write an embedding file plus metadata, read it back and split off a warm-up set.
//!
//! cargo run --example embedding_io

use corebudget::dataset::{self, EmbeddingSet, ExampleRecord};
use corebudget::rng;
use rand::Rng;

fn main() -> corebudget::Result<()> {
    let mut stream = rng::stream(7, 0);
    let rows: Vec<Vec<f64>> = (0..12).map(|_| (0..3).map(|_| stream.random_range(-1.0..1.0)).collect()).collect();
    let set = EmbeddingSet::with_sequential_ids(&rows)?;
    let records: Vec<ExampleRecord> = set
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| ExampleRecord {
            id: id.clone(),
            label: i % 3,
            raw_difficulty: Some(dataset::difficulty_from_distribution(&[0.2, 0.5, 0.3], i % 3).unwrap()),
        })
        .collect();

    let dir = std::env::temp_dir().join(format!("corebudget-embedding-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| corebudget::Error::Invalid(e.to_string()))?;
    let (emb, meta) = (dir.join("points.cbed"), dir.join("points.jsonl"));
    dataset::save_embeddings(&set, &records, &emb, &meta)?;

    let loaded = dataset::load_embeddings(&emb, &meta)?;
    println!("read {} rows of dimension {}", loaded.embeddings.len(), loaded.embeddings.dim());
    // stored as f32, so compare loosely
    let worst = set.as_slice().iter().zip(loaded.embeddings.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("max round-trip error: {worst:.2e}");

    let split = dataset::split_warmup(loaded.embeddings.ids(), 0.25, 1)?;
    println!("warm-up: {:?}", split.warmup_ids);
    println!("pool:    {} examples", split.pool_ids.len());

    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
