//! Risk decomposition of two-stage versus direct distillation, and where the
//! two-stage route starts to win.
//!
//! cargo run --example theory_advantage

use corebudget::theory::{self, TheoryParams};

fn main() -> corebudget::Result<()> {
    let params: TheoryParams = serde_json::from_str(
        r#"{
            "eps_approx_TS": 0.5, "eps_approx_TA": 0.1, "eps_approx_AS": 0.2,
            "C_ST": 1.0, "C_AT": 1.0, "C_SA": 1.0,
            "exp_ST": 0.25, "exp_AT": 0.5, "exp_SA": 0.5,
            "L": 1.0, "L_ell": 1.0, "Delta_T": 0.0, "Delta_A": 0.05,
            "M": 1.0, "d_VC": 10.0, "delta": 0.05, "beta": 0.5,
            "rho_B": 0.0, "rho_n": 0.0
        }"#,
    )?;
    params.validate()?;
    for w in params.warnings() {
        println!("warning: {w}");
    }

    let budget = 100;
    println!("{:>12} {:>10} {:>10} {:>10} {:>10}", "n", "struct", "sample", "overhead", "advantage");
    for n in [100, 1_000, 10_000, 100_000, 1_000_000] {
        let b = theory::advantage(&params, budget, n)?;
        println!(
            "{n:>12} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            b.delta_struct, b.delta_sample, b.delta_overhead, b.delta_adv
        );
    }

    println!("preconditions hold: {}", theory::corollary_preconditions(&params, budget));
    match theory::crossover_n0(&params, budget, 1 << 40)? {
        Some(n0) => println!("two-stage bound is tighter from n = {n0}"),
        None => println!("no crossover below 2^40"),
    }

    let gamma = theory::complexity_term(0.0, 1000, 1.0, 1.0, 1.0, 10.0, 0.05)?;
    println!("capacity term at m=1000: {gamma:.6}");
    Ok(())
}
