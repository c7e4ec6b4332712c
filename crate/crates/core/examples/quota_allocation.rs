//! Per-region quotas: proportional shares with a protective floor.
//!
//! cargo run --example quota_allocation

use corebudget::select;

fn show(weights: &[f64], budget: usize, sizes: &[usize]) {
    match select::allocate_quotas(weights, budget, sizes) {
        Ok(plan) => println!(
            "B={budget:<4} sizes={sizes:?}\n       q_min={} quotas={:?} total={} feasible={}",
            plan.q_min,
            plan.quotas,
            plan.total(),
            plan.feasible
        ),
        Err(e) => println!("B={budget:<4} sizes={sizes:?}\n       error: {e}"),
    }
}

fn main() {
    let sixteen = vec![1.0 / 16.0; 16];
    let big = vec![1000; 16];
    show(&sixteen, 100, &big);
    // fewer queries than regions: floors are relaxed, smallest regions first
    show(&sixteen, 5, &big);

    // a dominant region keeps its proportional share
    show(&[0.98, 0.01, 0.01], 30, &[980, 10, 10]);

    // a region smaller than its share is capped and the remainder flows elsewhere
    let w = [0.5, 0.3, 0.2];
    show(&w, 60, &[500, 5, 200]);

    // more queries than points
    show(&w, 60, &[20, 20, 10]);
}
