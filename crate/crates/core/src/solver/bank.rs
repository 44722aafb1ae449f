//! Observation quadrature, stored as per-state log-likelihood vectors.
//!
//! For every action and every hidden state `x` the bank holds weighted
//! observation nodes drawn (or placed) under `x`. The expectation of any
//! function of the posterior is then
//! `E_b[f(p')] = Σ_x q(x) Σ_k w_k f(post(q, L_{x,k}))` with `q = predict(b)`.
//! The nodes do not depend on the belief or on λ, so one bank serves every
//! grid point, every candidate action and every sweep.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::error::{Error, Result};
use crate::filter::{posterior_from_log_likelihood, slot_log_likelihood, LikelihoodMask};
use crate::reward::Action;
use crate::stochastics::{log_gaussian_unchecked, sample_model_observation, ObservationModel, Rng};

use super::quadrature::gauss_hermite;
use super::Quadrature;

/// Upper limit on tensor-product nodes per (action, state).
const MAX_SIGMA_NODES: usize = 500_000;

#[derive(Debug, Clone)]
pub(crate) struct StateNodes {
    pub weights: Vec<f64>,
    /// Row-major `weights.len() × n` log-likelihoods.
    pub log_lik: Vec<f64>,
}

impl StateNodes {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn row(&self, k: usize, n: usize) -> &[f64] {
        &self.log_lik[k * n..(k + 1) * n]
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LikelihoodBank {
    n: usize,
    /// Whether the nodes are random draws (standard errors are meaningful).
    stochastic: bool,
    /// `nodes[a][x]`.
    nodes: Vec<Vec<StateNodes>>,
}

/// Running sums used to estimate an expectation and its standard error.
#[derive(Debug, Clone, Copy, Default)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of `mean` under the sampling design (0 for deterministic rules).
    pub se: f64,
    /// Nodes whose posterior fell back to the prediction.
    pub degenerate: usize,
}

impl LikelihoodBank {
    pub fn build(
        model: &ObservationModel,
        actions: &[Action],
        quadrature: &Quadrature,
        mask: LikelihoodMask,
    ) -> Result<Self> {
        let n = model.n_states();
        let nodes = match *quadrature {
            Quadrature::MonteCarlo { samples, seed } => {
                if samples == 0 {
                    return Err(Error::Domain(
                        "Monte Carlo quadrature needs samples > 0".into(),
                    ));
                }
                let per_state = samples.div_ceil(n);
                let root = Rng::new(seed);
                actions
                    .par_iter()
                    .map(|a| {
                        (0..n)
                            .map(|x| mc_nodes(model, a, x, per_state, &root, mask))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            Quadrature::SigmaPoint { nodes: q } => {
                if q == 0 {
                    return Err(Error::Domain(
                        "sigma-point quadrature needs nodes > 0".into(),
                    ));
                }
                actions
                    .par_iter()
                    .map(|a| {
                        (0..n)
                            .map(|x| sigma_nodes(model, a, x, q, mask))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(Self {
            n,
            stochastic: matches!(quadrature, Quadrature::MonteCarlo { .. }),
            nodes,
        })
    }

    /// Calls `visit(weight, posterior)` for every node of `action`, where the
    /// prior is the predicted belief `q`. Returns the number of fallbacks.
    pub fn for_each_posterior(
        &self,
        q: &[f64],
        action: usize,
        mut visit: impl FnMut(usize, f64, &[f64]),
    ) -> usize {
        let mut degenerate = 0;
        for (x, &qx) in q.iter().enumerate() {
            if qx <= 0.0 {
                continue;
            }
            let nodes = &self.nodes[action][x];
            for k in 0..nodes.len() {
                let w = qx * nodes.weights[k];
                match posterior_from_log_likelihood(q, nodes.row(k, self.n)) {
                    Some(p) => visit(x, w, &p),
                    None => {
                        degenerate += 1;
                        visit(x, w, q)
                    }
                }
            }
        }
        degenerate
    }

    /// `E[f(p')]` for prior `q` and `action`, with a stratified standard error.
    pub fn expectation(
        &self,
        q: &[f64],
        action: usize,
        mut f: impl FnMut(&[f64]) -> f64,
    ) -> Estimate {
        let n = self.n;
        // Welford accumulators per stratum.
        let mut count = vec![0usize; n];
        let mut stratum_mean = vec![0.0; n];
        let mut m2 = vec![0.0; n];
        let mut mean = 0.0;
        let degenerate = self.for_each_posterior(q, action, |x, w, p| {
            let v = f(p);
            mean += w * v;
            count[x] += 1;
            let delta = v - stratum_mean[x];
            stratum_mean[x] += delta / count[x] as f64;
            m2[x] += delta * (v - stratum_mean[x]);
        });
        let mut var = 0.0;
        if self.stochastic {
            for x in 0..n {
                let k = count[x] as f64;
                if count[x] > 1 {
                    var += q[x] * q[x] * (m2[x] / (k - 1.0)).max(0.0) / k;
                }
            }
        }
        Estimate {
            mean,
            se: var.sqrt(),
            degenerate,
        }
    }
}

fn mc_nodes(
    model: &ObservationModel,
    action: &Action,
    state: usize,
    count: usize,
    root: &Rng,
    mask: LikelihoodMask,
) -> Result<StateNodes> {
    let n = model.n_states();
    let mut log_lik = vec![0.0; count * n];
    for k in 0..count {
        let base = root.substream(&[state as u64, k as u64]);
        let obs = sample_model_observation(&base, model, state, action)?;
        slot_log_likelihood(&obs, model, mask, &mut log_lik[k * n..(k + 1) * n]);
    }
    Ok(StateNodes {
        weights: vec![1.0 / count as f64; count],
        log_lik,
    })
}

/// Weighted one-dimensional factor of the tensor rule: each entry is a
/// weight and the log-likelihood contribution over states.
type Factor = Vec<(f64, Vec<f64>)>;

fn sigma_nodes(
    model: &ObservationModel,
    action: &Action,
    state: usize,
    q: usize,
    mask: LikelihoodMask,
) -> Result<StateNodes> {
    let n = model.n_states();
    let config = model.config();
    let (gh_x, gh_w) = gauss_hermite(q);
    let mut factors: Vec<Factor> = Vec::new();
    for (s, (spec, &count)) in config.sensors.iter().zip(action.counts()).enumerate() {
        let m = spec.measurement[state];
        for _ in 0..count {
            let mut factor = Factor::new();
            match &spec.channel {
                None => {
                    for (t, w) in gh_x.iter().zip(&gh_w) {
                        let z = m.mean + m.var.sqrt() * t;
                        let mut ll = vec![0.0; n];
                        model.add_sample_log_likelihood(s, z, 1.0, mask, &mut ll);
                        factor.push((*w, ll));
                    }
                }
                Some(per_state) => {
                    let g = per_state[state];
                    let gamma = Gamma::new(g.shape, 1.0 / g.scale)
                        .map_err(|e| Error::Domain(e.to_string()))?;
                    for j in 0..q {
                        let h = gamma.inverse_cdf((j as f64 + 0.5) / q as f64);
                        for (tw, ww) in gh_x.iter().zip(&gh_w) {
                            let h_hat = h - config.sigma_ch * tw;
                            let sd = model.received_variance(s, state, h_hat).max(0.0).sqrt();
                            for (tz, wz) in gh_x.iter().zip(&gh_w) {
                                let z = h_hat * m.mean + sd * tz;
                                let mut ll = vec![0.0; n];
                                model.add_sample_log_likelihood(s, z, h_hat, mask, &mut ll);
                                factor.push((ww * wz / q as f64, ll));
                            }
                        }
                    }
                }
            }
            factors.push(factor);
        }
        if count > 0 {
            for f in &spec.features {
                let p = f.per_state[state];
                let sd = f.variance_law.variance(p.var, count).sqrt();
                let mut factor = Factor::new();
                for (t, w) in gh_x.iter().zip(&gh_w) {
                    let c = p.mean + sd * t;
                    let mut ll = vec![0.0; n];
                    if mask != LikelihoodMask::MeasurementsOnly {
                        for (i, acc) in ll.iter_mut().enumerate() {
                            let ps = f.per_state[i];
                            *acc += log_gaussian_unchecked(
                                c,
                                ps.mean,
                                f.variance_law.variance(ps.var, count),
                            );
                        }
                    }
                    factor.push((*w, ll));
                }
                factors.push(factor);
            }
        }
    }
    let total: usize = factors.iter().map(Vec::len).product();
    if total > MAX_SIGMA_NODES {
        return Err(Error::Domain(format!(
            "sigma-point rule for action {action} needs {total} nodes; use Monte Carlo"
        )));
    }
    let mut weights = vec![1.0];
    let mut log_lik = vec![0.0; n];
    for factor in &factors {
        let mut nw = Vec::with_capacity(weights.len() * factor.len());
        let mut nl = Vec::with_capacity(nw.capacity() * n);
        for (k, w) in weights.iter().enumerate() {
            for (fw, fl) in factor {
                nw.push(w * fw);
                nl.extend(
                    log_lik[k * n..(k + 1) * n]
                        .iter()
                        .zip(fl)
                        .map(|(a, b)| a + b),
                );
            }
        }
        weights = nw;
        log_lik = nl;
    }
    Ok(StateNodes { weights, log_lik })
}
