//! Risk bounds for two-stage (teacher -> assistant -> student) versus direct
//! distillation, the advantage decomposition, and the abundant-data crossover.
//!
//! Logarithms are natural. `risk_teacher` anchors both bounds; only their
//! difference matters for the advantage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryParams {
    /// Approximation error of the student class w.r.t. the teacher.
    #[serde(alias = "eps_approx_TS")]
    pub eps_approx_ts: f64,
    /// Approximation error of the assistant class w.r.t. the teacher.
    #[serde(alias = "eps_approx_TA")]
    pub eps_approx_ta: f64,
    /// Approximation error of the student class w.r.t. the assistant.
    #[serde(alias = "eps_approx_AS")]
    pub eps_approx_as: f64,
    #[serde(alias = "C_ST")]
    pub c_st: f64,
    #[serde(alias = "C_AT")]
    pub c_at: f64,
    #[serde(alias = "C_SA")]
    pub c_sa: f64,
    #[serde(alias = "exp_ST")]
    pub exp_st: f64,
    #[serde(alias = "exp_AT")]
    pub exp_at: f64,
    #[serde(alias = "exp_SA")]
    pub exp_sa: f64,
    /// Input-Lipschitz constant of the losses.
    #[serde(alias = "L")]
    pub lipschitz: f64,
    /// `(1 - beta) L_r + beta L_a`; see [`label_lipschitz`].
    #[serde(alias = "L_ell")]
    pub label_lipschitz: f64,
    #[serde(alias = "Delta_T")]
    pub delta_teacher: f64,
    #[serde(alias = "Delta_A")]
    pub delta_assistant: f64,
    /// Loss bound.
    #[serde(alias = "M")]
    pub loss_bound: f64,
    #[serde(alias = "d_VC")]
    pub d_vc: f64,
    /// Confidence parameter of the uniform-convergence term.
    pub delta: f64,
    #[serde(default)]
    pub eps_opt: f64,
    #[serde(default, alias = "eps_T")]
    pub eps_teacher: f64,
    pub beta: f64,
    /// Coverage radius of the budgeted subset.
    #[serde(alias = "rho_B")]
    pub rho_budget: f64,
    /// Coverage radius of the full dataset.
    #[serde(alias = "rho_n")]
    pub rho_full: f64,
    /// Absolute constant of the uniform-convergence term.
    #[serde(default = "one", alias = "C_UC")]
    pub c_uc: f64,
    /// `R(M_T)`, shared by both bounds.
    #[serde(default)]
    pub risk_teacher: f64,
}

fn one() -> f64 {
    1.0
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("eps_approx_ts", self.eps_approx_ts),
            ("eps_approx_ta", self.eps_approx_ta),
            ("eps_approx_as", self.eps_approx_as),
            ("lipschitz", self.lipschitz),
            ("label_lipschitz", self.label_lipschitz),
            ("delta_teacher", self.delta_teacher),
            ("delta_assistant", self.delta_assistant),
            ("loss_bound", self.loss_bound),
            ("eps_opt", self.eps_opt),
            ("eps_teacher", self.eps_teacher),
            ("rho_budget", self.rho_budget),
            ("rho_full", self.rho_full),
            ("c_uc", self.c_uc),
            ("c_st", self.c_st),
            ("c_at", self.c_at),
            ("c_sa", self.c_sa),
            ("d_vc", self.d_vc),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        for (name, v) in [("exp_st", self.exp_st), ("exp_at", self.exp_at), ("exp_sa", self.exp_sa)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        if !self.risk_teacher.is_finite() {
            return Err(Error::invalid("risk_teacher must be finite"));
        }
        Ok(())
    }

    /// Non-fatal sanity warnings about the parameter set.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.exp_st < self.exp_at && self.exp_at < self.exp_sa) {
            out.push(format!(
                "rate exponents usually satisfy exp_st < exp_at < exp_sa (got {}, {}, {})",
                self.exp_st, self.exp_at, self.exp_sa
            ));
        }
        if delta_struct(self) < 0.0 {
            out.push("structural gap is negative: two-stage approximation is not easier".into());
        }
        out
    }
}

/// `(1 - beta) * l_rationale + beta * l_answer`.
pub fn label_lipschitz(beta: f64, l_rationale: f64, l_answer: f64) -> f64 {
    (1.0 - beta) * l_rationale + beta * l_answer
}

/// Coverage-plus-capacity term `L rho + C M sqrt(d_VC ln(2m/delta) / m)`.
pub fn complexity_term(
    rho: f64,
    m: u64,
    lipschitz: f64,
    c_uc: f64,
    loss_bound: f64,
    d_vc: f64,
    delta: f64,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let m = m as f64;
    Ok(lipschitz * rho + c_uc * loss_bound * (d_vc * (2.0 * m / delta).ln() / m).sqrt())
}

fn gamma(p: &TheoryParams, rho: f64, m: u64) -> Result<f64> {
    complexity_term(rho, m, p.lipschitz, p.c_uc, p.loss_bound, p.d_vc, p.delta)
}

/// `eps(T, S) - eps(T, A) - eps(A, S)`; negative values are returned as-is.
pub fn delta_struct(p: &TheoryParams) -> f64 {
    p.eps_approx_ts - p.eps_approx_ta - p.eps_approx_as
}

fn rate(c: f64, m: u64, exponent: f64) -> f64 {
    c * (m as f64).powf(-exponent)
}

/// `C_ST B^-a_ST - C_AT B^-a_AT - C_SA n^-a_SA`.
pub fn delta_sample(p: &TheoryParams, budget: u64, n: u64) -> f64 {
    rate(p.c_st, budget, p.exp_st) - rate(p.c_at, budget, p.exp_at) - rate(p.c_sa, n, p.exp_sa)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageBreakdown {
    pub budget: u64,
    pub n: u64,
    pub gamma_budget: f64,
    pub gamma_full: f64,
    pub delta_struct: f64,
    pub delta_sample: f64,
    pub delta_overhead: f64,
    pub delta_adv: f64,
    /// Right-hand side of the two-stage student bound.
    pub bridge_bound_rhs: f64,
    /// Right-hand side of the direct student bound.
    pub direct_bound_rhs: f64,
}

/// Both bounds and the advantage decomposition at `(B, n)`.
pub fn advantage(p: &TheoryParams, budget: u64, n: u64) -> Result<AdvantageBreakdown> {
    p.validate()?;
    if budget == 0 || n == 0 {
        return Err(Error::invalid("budget and n must be at least 1"));
    }
    let gamma_budget = gamma(p, p.rho_budget, budget)?;
    let gamma_full = gamma(p, p.rho_full, n)?;
    let teacher_noise = p.label_lipschitz * p.delta_teacher;
    let assistant_noise = p.label_lipschitz * p.delta_assistant;

    let bridge_terms = [
        p.risk_teacher,
        p.eps_approx_ta,
        rate(p.c_at, budget, p.exp_at),
        gamma_budget,
        teacher_noise,
        p.eps_approx_as,
        rate(p.c_sa, n, p.exp_sa),
        gamma_full,
        assistant_noise,
    ];
    let direct_terms = [p.risk_teacher, p.eps_approx_ts, rate(p.c_st, budget, p.exp_st), gamma_budget, teacher_noise];
    let ds = delta_struct(p);
    let dsa = delta_sample(p, budget, n);
    let overhead = gamma_full + assistant_noise;
    Ok(AdvantageBreakdown {
        budget,
        n,
        gamma_budget,
        gamma_full,
        delta_struct: ds,
        delta_sample: dsa,
        delta_overhead: overhead,
        delta_adv: ds + dsa - overhead,
        bridge_bound_rhs: bridge_terms.iter().sum(),
        direct_bound_rhs: direct_terms.iter().sum(),
    })
}

/// Whether the abundant-data crossover is guaranteed to exist.
pub fn corollary_preconditions(p: &TheoryParams, budget: u64) -> bool {
    delta_struct(p) > p.label_lipschitz * p.delta_assistant
        && rate(p.c_at, budget, p.exp_at) <= rate(p.c_st, budget, p.exp_st)
}

/// Smallest `n <= n_max` with positive advantage, by doubling then bisection.
/// Relies on the advantage being non-decreasing in `n`.
pub fn crossover_n0(p: &TheoryParams, budget: u64, n_max: u64) -> Result<Option<u64>> {
    if n_max == 0 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    let positive = |n: u64| advantage(p, budget, n).map(|a| a.delta_adv > 0.0);
    if positive(1)? {
        return Ok(Some(1));
    }
    let mut lo = 1u64;
    let mut hi = 1u64;
    loop {
        if hi >= n_max {
            hi = n_max;
            if !positive(hi)? {
                return Ok(None);
            }
            break;
        }
        hi = hi.saturating_mul(2).min(n_max);
        if positive(hi)? {
            break;
        }
        lo = hi;
    }
    // invariant: advantage(lo) <= 0 < advantage(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if positive(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Roughly log-spaced integer grid on `[lo, hi]`, `per_decade` points per factor of ten.
pub fn log_grid(lo: u64, hi: u64, per_decade: usize) -> Vec<u64> {
    if lo == 0 || hi < lo {
        return Vec::new();
    }
    let (a, b) = ((lo as f64).log10(), (hi as f64).log10());
    let steps = (((b - a) * per_decade as f64).ceil() as usize).max(1);
    let mut out: Vec<u64> = (0..=steps)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / steps as f64).round() as u64)
        .map(|v| v.clamp(lo, hi))
        .collect();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(flatten)]
    pub breakdown: AdvantageBreakdown,
    pub is_crossover: bool,
}

/// Advantage over a log grid of `n`, with the crossover point inserted and marked.
pub fn sweep_n(p: &TheoryParams, budget: u64, lo: u64, hi: u64) -> Result<Vec<SweepRow>> {
    if lo == 0 || hi < lo {
        return Err(Error::invalid(format!("invalid sweep range {lo}:{hi}")));
    }
    let mut grid = log_grid(lo, hi, 10);
    let n0 = crossover_n0(p, budget, hi)?.filter(|&n| n >= lo);
    if let Some(n) = n0 {
        if let Err(pos) = grid.binary_search(&n) {
            grid.insert(pos, n);
        }
    }
    grid.into_iter()
        .map(|n| Ok(SweepRow { breakdown: advantage(p, budget, n)?, is_crossover: Some(n) == n0 }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn base() -> TheoryParams {
        TheoryParams {
            eps_approx_ts: 0.5,
            eps_approx_ta: 0.1,
            eps_approx_as: 0.2,
            c_st: 1.0,
            c_at: 1.0,
            c_sa: 1.0,
            exp_st: 0.25,
            exp_at: 0.5,
            exp_sa: 0.5,
            lipschitz: 1.0,
            label_lipschitz: 1.0,
            delta_teacher: 0.0,
            delta_assistant: 0.05,
            loss_bound: 1.0,
            d_vc: 10.0,
            delta: 0.05,
            eps_opt: 0.0,
            eps_teacher: 0.0,
            beta: 0.5,
            rho_budget: 0.0,
            rho_full: 0.0,
            c_uc: 1.0,
            risk_teacher: 0.0,
        }
    }

    #[test]
    fn complexity_examples() {
        let g = complexity_term(0.0, 1000, 1.0, 1.0, 1.0, 10.0, 0.05).unwrap();
        // sqrt(10 ln(40000) / 1000), evaluated at 40 digits
        assert!((g - 0.325_524_726_143_745_85).abs() < 1e-12, "{g}");
        let g2 = complexity_term(0.1, 1000, 1.0, 1.0, 1.0, 10.0, 0.05).unwrap();
        assert!((g2 - g - 0.1).abs() < 1e-15);
        assert!(complexity_term(0.0, 0, 1.0, 1.0, 1.0, 10.0, 0.05).is_err());
        assert!(complexity_term(0.0, 10, 1.0, 1.0, 1.0, 10.0, 1.0).is_err());
    }

    #[test]
    fn struct_examples() {
        let mut p = base();
        assert!((delta_struct(&p) - 0.2).abs() < 1e-15);
        (p.eps_approx_ts, p.eps_approx_ta, p.eps_approx_as) = (0.3, 0.3, 0.0);
        assert_eq!(delta_struct(&p), 0.0);
        (p.eps_approx_ts, p.eps_approx_ta, p.eps_approx_as) = (0.2, 0.2, 0.2);
        assert!((delta_struct(&p) + 0.2).abs() < 1e-15);
        assert!(!p.warnings().is_empty());
    }

    #[test]
    fn sample_examples() {
        let p = base();
        let v = delta_sample(&p, 100, 10_000);
        let expected = 100f64.powf(-0.25) - 0.1 - 0.01;
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 0.206_227_766_016_837_93).abs() < 1e-12);
        let two_term = 100f64.powf(-0.25) - 0.1;
        assert!((delta_sample(&p, 100, 1_000_000_000) - two_term).abs() < 1e-4);
        let mut q = base();
        q.exp_st = 0.5;
        assert!(delta_sample(&q, 100, 1_000_000_000_000).abs() < 1e-5);
    }

    #[test]
    fn aliases_parse() {
        let text = r#"{"eps_approx_TS":0.5,"eps_approx_TA":0.1,"eps_approx_AS":0.2,"C_ST":1,"C_AT":1,"C_SA":1,
            "exp_ST":0.25,"exp_AT":0.5,"exp_SA":0.5,"L":1,"L_ell":1,"Delta_T":0,"Delta_A":0.05,"M":1,
            "d_VC":10,"delta":0.05,"beta":0.5,"rho_B":0,"rho_n":0,"C_UC":1}"#;
        let p: TheoryParams = serde_json::from_str(text).unwrap();
        assert_eq!(p, base());
    }

    #[test]
    fn label_lipschitz_blend() {
        assert_eq!(label_lipschitz(0.25, 2.0, 4.0), 2.5);
    }

    #[test]
    fn crossover_immediate() {
        let mut p = base();
        p.c_uc = 0.0;
        p.c_sa = 0.0;
        p.delta_assistant = 0.0;
        assert_eq!(crossover_n0(&p, 100, 1000).unwrap(), Some(1));
    }

    #[test]
    fn grid_is_sorted_and_bounded() {
        let g = log_grid(10, 1_000_000_000, 10);
        assert_eq!(*g.first().unwrap(), 10);
        assert_eq!(*g.last().unwrap(), 1_000_000_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
