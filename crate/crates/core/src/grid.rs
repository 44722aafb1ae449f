//! Regular grid on the belief simplex and Freudenthal barycentric coordinates.
//!
//! Grid points are the beliefs whose entries are multiples of `1/R`, stored as
//! integer compositions of `R` in ascending lexicographic order. Interpolation
//! weights come from the Freudenthal triangulation: in cumulative coordinates
//! `x_k = R Σ_{j≥k} p_j` the containing simplex is the floor corner plus unit
//! steps taken in order of decreasing fractional part.

use serde::{Deserialize, Serialize};

use crate::filter::Belief;

/// Cumulative coordinates closer than this to an integer are snapped.
const SNAP: f64 = 1e-10;
/// Slack allowed when deciding that a belief is a grid point.
pub const GRID_POINT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "GridSpec", from = "GridSpec")]
pub struct BeliefGrid {
    n: usize,
    resolution: u32,
    coords: Vec<Vec<u32>>,
    beliefs: Vec<Belief>,
    /// `compositions[s][m]`: number of ways to write `s` as `m` ordered parts.
    compositions: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    n: usize,
    resolution: u32,
}

impl From<BeliefGrid> for GridSpec {
    fn from(g: BeliefGrid) -> Self {
        GridSpec {
            n: g.n,
            resolution: g.resolution,
        }
    }
}

impl From<GridSpec> for BeliefGrid {
    fn from(s: GridSpec) -> Self {
        build_grid(s.n, s.resolution)
    }
}

fn compositions_table(r: usize, n: usize) -> Vec<Vec<usize>> {
    let mut t = vec![vec![0usize; n + 1]; r + 1];
    t[0][0] = 1;
    for m in 1..=n {
        for s in 0..=r {
            // Last part takes 0..=s.
            t[s][m] = (0..=s).map(|v| t[s - v][m - 1]).sum();
        }
    }
    t
}

fn enumerate(n: usize, r: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    let used: u32 = prefix.iter().sum();
    if prefix.len() == n - 1 {
        prefix.push(r - used);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for v in 0..=(r - used) {
        prefix.push(v);
        enumerate(n, r, prefix, out);
        prefix.pop();
    }
}

/// All beliefs over `n` states with entries in `{0, 1/R, …, 1}`.
pub fn build_grid(n: usize, resolution: u32) -> BeliefGrid {
    assert!(n >= 2 && resolution >= 1, "grid needs n >= 2 and R >= 1");
    let mut coords = Vec::new();
    enumerate(n, resolution, &mut Vec::with_capacity(n), &mut coords);
    let r = f64::from(resolution);
    let beliefs = coords
        .iter()
        .map(|k| Belief::from_raw(k.iter().map(|&v| f64::from(v) / r).collect()))
        .collect();
    BeliefGrid {
        n,
        resolution,
        compositions: compositions_table(resolution as usize, n),
        coords,
        beliefs,
    }
}

impl BeliefGrid {
    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn points(&self) -> &[Belief] {
        &self.beliefs
    }

    pub fn point(&self, i: usize) -> &Belief {
        &self.beliefs[i]
    }

    pub fn coords(&self, i: usize) -> &[u32] {
        &self.coords[i]
    }

    /// Position of an integer composition in the canonical order.
    pub fn rank(&self, k: &[u32]) -> usize {
        let mut rank = 0;
        let mut remaining = self.resolution as usize;
        for (i, &v) in k.iter().enumerate().take(self.n - 1) {
            let parts = self.n - i - 1;
            for smaller in 0..v as usize {
                rank += self.compositions[remaining - smaller][parts];
            }
            remaining -= v as usize;
        }
        rank
    }

    /// Index of `p` if it lies on the grid (entries within 1e-12 of multiples of 1/R).
    pub fn grid_index(&self, p: &[f64]) -> Option<usize> {
        let r = f64::from(self.resolution);
        let mut k = Vec::with_capacity(self.n);
        for &x in p {
            let y = x * r;
            let v = y.round();
            if (y - v).abs() > GRID_POINT_TOLERANCE * r.max(1.0) || v < 0.0 {
                return None;
            }
            k.push(v as u32);
        }
        (k.iter().sum::<u32>() == self.resolution).then(|| self.rank(&k))
    }

    /// Freudenthal vertices and weights of `p`; at most `n` pairs, zero
    /// weights dropped.
    pub fn barycentric(&self, p: &[f64]) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(self.n);
        self.barycentric_into(p, &mut out);
        out
    }

    pub fn barycentric_into(&self, p: &[f64], out: &mut Vec<(usize, f64)>) {
        out.clear();
        let n = self.n;
        let r = f64::from(self.resolution);
        // Cumulative coordinates x_k = R Σ_{j≥k} p_j for k = 1..n-1 (x_0 = R).
        let mut base = vec![0i64; n + 1];
        let mut frac = vec![0.0; n];
        base[0] = i64::from(self.resolution);
        let mut tail = 0.0;
        for k in (1..n).rev() {
            tail += p[k];
            let mut x = (tail * r).clamp(0.0, r);
            let rounded = x.round();
            if (x - rounded).abs() < SNAP {
                x = rounded;
            }
            let fl = x.floor();
            base[k] = fl as i64;
            frac[k] = x - fl;
        }
        // Stable sort of coordinates 1..n-1 by decreasing fractional part.
        let mut order: Vec<usize> = (1..n).collect();
        order.sort_by(|&a, &b| frac[b].partial_cmp(&frac[a]).unwrap());

        let mut vertex = base.clone();
        let push = |v: &[i64], w: f64, out: &mut Vec<(usize, f64)>| {
            if w > 0.0 {
                let k: Vec<u32> = (0..n).map(|i| (v[i] - v[i + 1]) as u32).collect();
                out.push((self.rank(&k), w));
            }
        };
        let first = order.first().map_or(0.0, |&j| frac[j]);
        push(&vertex, 1.0 - first, out);
        for m in 0..order.len() {
            vertex[order[m]] += 1;
            let next = order.get(m + 1).map_or(0.0, |&j| frac[j]);
            push(&vertex, frac[order[m]] - next, out);
        }
    }
}

/// Barycentric weights of `p` with respect to `grid`.
pub fn barycentric_weights(p: &Belief, grid: &BeliefGrid) -> Vec<(usize, f64)> {
    grid.barycentric(p.probs())
}
