use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{distinct_rows, kmeanspp_init, RegionAssignment};
use crate::dataset::EmbeddingSet;
use crate::error::{Error, Result};

/// Lower bound applied to every fitted variance.
pub const VAR_FLOOR: f64 = 1e-6;

/// Responsibility mass below which a component counts as empty.
const EMPTY_MASS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmOptions {
    pub components: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl GmmOptions {
    /// Three restarts, at most 1000 iterations, tolerance 1e-6.
    pub fn new(components: usize, seed: u64) -> Self {
        Self { components, restarts: 3, max_iter: 1000, tol: 1e-6, seed }
    }
}

/// Diagonal-covariance Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    means: Vec<f64>,
    variances: Vec<f64>,
    weights: Vec<f64>,
    components: usize,
    dim: usize,
    /// Mean per-point log-likelihood of the fitted data.
    pub final_log_likelihood: f64,
    pub iterations_run: usize,
    pub converged: bool,
    /// Set when every input point was identical and only one component carries mass.
    pub degenerate: bool,
    /// Number of times an empty component was re-seeded during the winning fit.
    pub reseeds: usize,
}

#[derive(Serialize, Deserialize)]
struct GmmJson {
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
    weights: Vec<f64>,
    loglik: Option<f64>,
    #[serde(rename = "C")]
    components: usize,
    d: usize,
}

impl GmmModel {
    pub fn from_parts(means: Vec<Vec<f64>>, variances: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let components = means.len();
        let dim = means.first().map_or(0, Vec::len);
        if components == 0 || dim == 0 {
            return Err(Error::invalid("mixture needs at least one component and dimension"));
        }
        if variances.len() != components
            || weights.len() != components
            || means.iter().chain(&variances).any(|r| r.len() != dim)
        {
            return Err(Error::invalid("dimension mismatch in mixture parameters"));
        }
        if variances.iter().flatten().any(|&v| !(v >= VAR_FLOOR) || !v.is_finite()) {
            return Err(Error::invalid(format!("variances must be finite and >= {VAR_FLOOR}")));
        }
        if weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("mixture weights must form a distribution"));
        }
        if means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("means must be finite"));
        }
        Ok(Self {
            means: means.concat(),
            variances: variances.concat(),
            weights,
            components,
            dim,
            final_log_likelihood: f64::NAN,
            iterations_run: 0,
            converged: false,
            degenerate: false,
            reseeds: 0,
        })
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self, c: usize) -> &[f64] {
        &self.means[c * self.dim..(c + 1) * self.dim]
    }

    pub fn variance(&self, c: usize) -> &[f64] {
        &self.variances[c * self.dim..(c + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn to_json(&self) -> Result<String> {
        let dto = GmmJson {
            means: (0..self.components).map(|c| self.mean(c).to_vec()).collect(),
            variances: (0..self.components).map(|c| self.variance(c).to_vec()).collect(),
            weights: self.weights.clone(),
            loglik: Some(self.final_log_likelihood).filter(|v| v.is_finite()),
            components: self.components,
            d: self.dim,
        };
        Ok(serde_json::to_string_pretty(&dto)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dto: GmmJson = serde_json::from_str(text)?;
        if dto.means.len() != dto.components || dto.means.iter().any(|m| m.len() != dto.d) {
            return Err(Error::invalid("model JSON disagrees with its C/d fields"));
        }
        let mut model = Self::from_parts(dto.means, dto.variances, dto.weights)?;
        model.final_log_likelihood = dto.loglik.unwrap_or(f64::NAN);
        Ok(model)
    }

    /// `log w_c + log N(x | mu_c, diag(var_c))` for every component.
    fn log_joint(&self, x: &[f64], norms: &[f64], out: &mut [f64]) {
        for (c, slot) in out.iter_mut().enumerate() {
            let mu = self.mean(c);
            let var = self.variance(c);
            let mut q = 0.0;
            for j in 0..self.dim {
                let diff = x[j] - mu[j];
                q += diff * diff / var[j];
            }
            *slot = norms[c] - 0.5 * q;
        }
    }

    fn log_norms(&self) -> Vec<f64> {
        (0..self.components)
            .map(|c| {
                let logdet: f64 = self.variance(c).iter().map(|v| (2.0 * PI * v).ln()).sum();
                self.weights[c].ln() - 0.5 * logdet
            })
            .collect()
    }

    /// Per-point log-likelihood and responsibilities (row-major n x C).
    fn e_step(&self, points: &EmbeddingSet) -> (Vec<f64>, Vec<f64>) {
        let norms = self.log_norms();
        let c = self.components;
        let per_point: Vec<(f64, Vec<f64>)> = (0..points.len())
            .into_par_iter()
            .map(|i| {
                let mut lj = vec![0.0; c];
                self.log_joint(points.row(i), &norms, &mut lj);
                let lse = log_sum_exp(&lj);
                for v in lj.iter_mut() {
                    *v = (*v - lse).exp();
                }
                (lse, lj)
            })
            .collect();
        let mut ll = Vec::with_capacity(points.len());
        let mut resp = Vec::with_capacity(points.len() * c);
        for (l, r) in per_point {
            ll.push(l);
            resp.extend(r);
        }
        (ll, resp)
    }

    /// Mean per-point log-likelihood of `points` under the model.
    pub fn mean_log_likelihood(&self, points: &EmbeddingSet) -> f64 {
        let (ll, _) = self.e_step(points);
        ll.iter().sum::<f64>() / ll.len() as f64
    }

    /// Soft responsibilities of one point.
    pub fn responsibilities(&self, x: &[f64]) -> Vec<f64> {
        let mut lj = vec![0.0; self.components];
        self.log_joint(x, &self.log_norms(), &mut lj);
        let lse = log_sum_exp(&lj);
        lj.iter().map(|v| (v - lse).exp()).collect()
    }

    fn m_step(&mut self, points: &EmbeddingSet, resp: &[f64], ll: &[f64]) -> usize {
        let (n, c, d) = (points.len(), self.components, self.dim);
        let mut mass = vec![0.0; c];
        let mut sums = vec![0.0; c * d];
        for (i, x) in points.rows().enumerate() {
            for k in 0..c {
                let r = resp[i * c + k];
                mass[k] += r;
                for j in 0..d {
                    sums[k * d + j] += r * x[j];
                }
            }
        }
        for k in 0..c {
            if mass[k] > EMPTY_MASS {
                for j in 0..d {
                    self.means[k * d + j] = sums[k * d + j] / mass[k];
                }
            }
        }
        let mut sq = vec![0.0; c * d];
        for (i, x) in points.rows().enumerate() {
            for k in 0..c {
                let r = resp[i * c + k];
                for j in 0..d {
                    let diff = x[j] - self.means[k * d + j];
                    sq[k * d + j] += r * diff * diff;
                }
            }
        }
        let mut reseeds = 0;
        let global_var = column_variances(points);
        for k in 0..c {
            if mass[k] > EMPTY_MASS {
                for j in 0..d {
                    self.variances[k * d + j] = (sq[k * d + j] / mass[k]).max(VAR_FLOOR);
                }
                self.weights[k] = mass[k] / n as f64;
            } else {
                // empty component: restart it on the worst-explained point
                let worst = ll.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i);
                self.means[k * d..(k + 1) * d].copy_from_slice(points.row(worst));
                self.variances[k * d..(k + 1) * d].copy_from_slice(&global_var);
                self.weights[k] = 1.0 / n as f64;
                reseeds += 1;
            }
        }
        let total: f64 = self.weights.iter().sum();
        for w in self.weights.iter_mut() {
            *w /= total;
        }
        reseeds
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Population variance per column, floored.
fn column_variances(points: &EmbeddingSet) -> Vec<f64> {
    let (n, d) = (points.len() as f64, points.dim());
    let mut mean = vec![0.0; d];
    for x in points.rows() {
        for j in 0..d {
            mean[j] += x[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for x in points.rows() {
        for j in 0..d {
            var[j] += (x[j] - mean[j]).powi(2);
        }
    }
    var.iter().map(|v| (v / n).max(VAR_FLOOR)).collect()
}

/// A fitted model together with the per-restart log-likelihood traces.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub model: GmmModel,
    /// Mean log-likelihood after each E-step, one trace per restart.
    pub traces: Vec<Vec<f64>>,
    pub best_restart: usize,
}

pub fn fit_gmm(points: &EmbeddingSet, opts: &GmmOptions) -> Result<GmmModel> {
    fit_gmm_traced(points, opts).map(|f| f.model)
}

/// Best-of-restarts EM fit. Restart `r` is seeded with `seed + r`.
pub fn fit_gmm_traced(points: &EmbeddingSet, opts: &GmmOptions) -> Result<GmmFit> {
    let (n, c) = (points.len(), opts.components);
    if c == 0 {
        return Err(Error::invalid("need at least one mixture component"));
    }
    if n < c {
        return Err(Error::invalid(format!("{n} points cannot support {c} components")));
    }
    if opts.restarts == 0 {
        return Err(Error::invalid("need at least one EM restart"));
    }
    if c > 1 && distinct_rows(points) == 1 {
        log::warn!("all {n} points identical; returning a single-component mixture");
        return Ok(degenerate_fit(points, c));
    }

    let mut best: Option<GmmFit> = None;
    let mut traces = Vec::with_capacity(opts.restarts);
    for r in 0..opts.restarts {
        let (model, trace) = run_em(points, opts, opts.seed.wrapping_add(r as u64))?;
        traces.push(trace);
        let better = best.as_ref().is_none_or(|b| model.final_log_likelihood > b.model.final_log_likelihood);
        if better {
            best = Some(GmmFit { model, traces: Vec::new(), best_restart: r });
        }
    }
    let mut fit = best.expect("at least one restart");
    fit.traces = traces;
    Ok(fit)
}

fn run_em(points: &EmbeddingSet, opts: &GmmOptions, seed: u64) -> Result<(GmmModel, Vec<f64>)> {
    let c = opts.components;
    let init = kmeanspp_init(points, c, seed)?;
    let var = column_variances(points);
    let mut model = GmmModel::from_parts(
        init.iter().map(|&i| points.row(i).to_vec()).collect(),
        vec![var; c],
        vec![1.0 / c as f64; c],
    )?;
    let n = points.len() as f64;
    let mut trace = Vec::new();
    loop {
        let (ll, resp) = model.e_step(points);
        let mean_ll = ll.iter().sum::<f64>() / n;
        if !mean_ll.is_finite() {
            return Err(Error::Numerical("EM log-likelihood became non-finite".into()));
        }
        let improved = trace.last().map(|prev| mean_ll - prev);
        trace.push(mean_ll);
        model.final_log_likelihood = mean_ll;
        if let Some(gain) = improved {
            if gain < opts.tol {
                model.converged = true;
                break;
            }
        }
        if model.iterations_run >= opts.max_iter {
            break;
        }
        model.reseeds += model.m_step(points, &resp, &ll);
        model.iterations_run += 1;
    }
    Ok((model, trace))
}

fn degenerate_fit(points: &EmbeddingSet, c: usize) -> GmmFit {
    let d = points.dim();
    let x = points.row(0).to_vec();
    let mut weights = vec![0.0; c];
    weights[0] = 1.0;
    let mut model = GmmModel::from_parts(vec![x; c], vec![vec![VAR_FLOOR; d]; c], weights)
        .expect("well-formed degenerate parameters");
    model.final_log_likelihood = model.mean_log_likelihood(points);
    model.converged = true;
    model.degenerate = true;
    GmmFit { traces: vec![vec![model.final_log_likelihood]], model, best_restart: 0 }
}

/// Hard assignment by maximum responsibility; ties go to the lower component index.
pub fn assign_regions(model: &GmmModel, points: &EmbeddingSet) -> Result<RegionAssignment> {
    if model.dim != points.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: model has d={}, points have d={}",
            model.dim,
            points.dim()
        )));
    }
    let norms = model.log_norms();
    let labels: Vec<usize> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut lj = vec![0.0; model.components];
            model.log_joint(points.row(i), &norms, &mut lj);
            let mut best = 0;
            for k in 1..lj.len() {
                if lj[k] > lj[best] {
                    best = k;
                }
            }
            best
        })
        .collect();
    RegionAssignment::from_labels(points.ids().to_vec(), labels, model.components)
}
