//! Tangent planes of `G = J − (1−λ)Δ` at the grid points.
//!
//! At grid point `b` the pivot `j*` is its largest coordinate. For every other
//! coordinate `k` the one-sided difference along `e_k − e_{j*}` with step
//! `1/(2R)` stays inside the simplex and gives the slope component `s_k`;
//! `s_{j*} = 0`. The plane passes through `(b, G(b))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::Belief;
use crate::grid::BeliefGrid;
use crate::reward::estimation_error_slice;

use super::ValueTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tangent {
    pub slope: Vec<f64>,
    pub intercept: f64,
}

impl Tangent {
    /// Value of the plane at `p`.
    pub fn eval(&self, base: &[f64], p: &[f64]) -> f64 {
        self.intercept
            + self
                .slope
                .iter()
                .zip(p.iter().zip(base))
                .map(|(s, (x, b))| s * (x - b))
                .sum::<f64>()
    }
}

/// Tangents for every grid point given `G` at the grid points and an
/// evaluator for `G` anywhere in the simplex.
pub fn compute_tangents_with(
    grid: &BeliefGrid,
    g_grid: &[f64],
    g: impl Fn(&[f64]) -> f64 + Sync,
) -> Vec<Tangent> {
    let step = 0.5 / f64::from(grid.resolution());
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let b = grid.point(i).probs();
            let pivot = b
                .iter()
                .enumerate()
                .fold(0, |best, (k, &x)| if x > b[best] { k } else { best });
            let mut slope = vec![0.0; b.len()];
            for k in 0..b.len() {
                if k == pivot {
                    continue;
                }
                let mut p = b.to_vec();
                p[k] += step;
                p[pivot] -= step;
                slope[k] = (g(&p) - g_grid[i]) / step;
            }
            Tangent {
                slope,
                intercept: g_grid[i],
            }
        })
        .collect()
}

/// `(1−λ)Δ(p) + min_i [G(b_i) + s_i·(p − b_i)]`.
pub fn upper_bound_value(p: &Belief, table: &ValueTable, lambda: f64) -> Result<f64> {
    let tangents = table.tangents.as_ref().ok_or(Error::MissingTangents)?;
    let best = tangents
        .iter()
        .enumerate()
        .map(|(i, t)| t.eval(table.grid.point(i).probs(), p.probs()))
        .fold(f64::INFINITY, f64::min);
    Ok((1.0 - lambda) * estimation_error_slice(p.probs()) + best)
}
