//! The four simulator experiments at a reduced scale.
//!
//! cargo run --release --example distill_predictions [seeds]

use corebudget::distillsim::{run_experiment, ExperimentGrid, ExperimentName};

fn main() -> corebudget::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let seeds: Vec<u64> = (0..seeds).collect();
    let grid = ExperimentGrid::default();

    for name in ExperimentName::ALL {
        let started = std::time::Instant::now();
        let table = run_experiment(name, &grid, &seeds)?;
        println!("== {name} ({} rows, {:.1?})", table.rows.len(), started.elapsed());
        for c in &table.summary.cells {
            print!(
                "  B={:<4} n={:<5} P_A={:<4} {:<10} accuracy {:.3} +- {:.3}",
                c.budget, c.pool_size, c.assistant_capacity, c.arm, c.accuracy.mean, c.accuracy.std
            );
            if let Some(d) = c.assistant_student_disagreement {
                print!("  assistant/student disagreement {:.3}", d.mean);
            }
            println!();
        }
        let s = &table.summary;
        if let Some(rho) = s.gap_trend_spearman {
            println!("  Spearman(n, bridge - direct) = {rho:.3}");
        }
        for t in &s.selection_tests {
            println!(
                "  coverage - random: {:+.4} (t = {:.2}, one-sided p = {:.4})",
                t.mean_difference, t.t_statistic, t.p_value
            );
        }
        if let Some(t) = s.disagreement_test {
            println!("  multi-task - answer-only disagreement: {:+.4} (t = {:.2})", t.mean_difference, t.t_statistic);
        }
        for (cap, e) in &s.convergence_exponents {
            println!(
                "  P_A={cap}: exponents assistant {:?}, direct student {:?}",
                e.assistant_from_teacher, e.student_from_teacher
            );
        }
    }
    Ok(())
}
