//! Two-dimensional neighbour embedding: a fuzzy k-nearest-neighbour graph
//! under cosine distance, laid out by stochastic gradient descent on
//! attractive and repulsive cross-entropy forces.

use super::pca::Pca;
use crate::error::{Error, Result};
use crate::numerics::gemm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedParams {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub epochs: usize,
    pub negative_samples: usize,
    /// Initial learning rate for warm-started steps in [`aligned_embed`].
    pub warm_learning_rate: f64,
    pub seed: u64,
}

impl Default for EmbedParams {
    fn default() -> Self {
        Self {
            n_neighbors: 50,
            min_dist: 0.8,
            epochs: 2000,
            negative_samples: 5,
            warm_learning_rate: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    pub step: usize,
    pub agent_ids: Vec<u64>,
    pub points: Vec<[f64; 2]>,
}

impl EmbeddingResult {
    /// Diagonal of the bounding box.
    pub fn scale(&self) -> f64 {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &self.points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
    }
}

/// Cosine k-nearest neighbours (self excluded): `(indices, distances)` per point.
fn knn(points: &[Vec<f64>], k: usize) -> (Vec<Vec<usize>>, Vec<Vec<f64>>) {
    let n = points.len();
    let h = points[0].len();
    let mut unit = Vec::with_capacity(n * h);
    for p in points {
        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        unit.extend(p.iter().map(|v| if norm > 0.0 { v / norm } else { 0.0 }));
    }
    let mut idx = Vec::with_capacity(n);
    let mut dist = Vec::with_capacity(n);
    const BLOCK: usize = 256;
    let mut sims = vec![0.0; BLOCK * n];
    for start in (0..n).step_by(BLOCK) {
        let m = BLOCK.min(n - start);
        let block = &mut sims[..m * n];
        gemm(m, h, n, 1.0, &unit[start * h..(start + m) * h], false, &unit, true, 0.0, block);
        for r in 0..m {
            let i = start + r;
            let row = &block[r * n..(r + 1) * n];
            let mut cand: Vec<(f64, usize)> =
                (0..n).filter(|&j| j != i).map(|j| ((1.0 - row[j]).max(0.0), j)).collect();
            cand.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(k);
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            idx.push(cand.iter().map(|c| c.1).collect());
            dist.push(cand.iter().map(|c| c.0).collect());
        }
    }
    (idx, dist)
}

/// Per-point bandwidths so each neighbourhood's membership mass is `log2 k`.
fn smooth_knn(dist: &[Vec<f64>], k: usize) -> (Vec<f64>, Vec<f64>) {
    let target = (k as f64).log2();
    let mut sigmas = Vec::with_capacity(dist.len());
    let mut rhos = Vec::with_capacity(dist.len());
    for d in dist {
        let rho = d.iter().copied().find(|&v| v > 0.0).unwrap_or(0.0);
        let (mut lo, mut hi, mut mid) = (0.0, f64::INFINITY, 1.0);
        for _ in 0..64 {
            let s: f64 = d.iter().map(|&v| (-((v - rho).max(0.0)) / mid).exp()).sum();
            if (s - target).abs() < 1e-5 {
                break;
            }
            if s > target {
                hi = mid;
                mid = (lo + hi) / 2.0;
            } else {
                lo = mid;
                mid = if hi.is_finite() { (lo + hi) / 2.0 } else { mid * 2.0 };
            }
        }
        let mean_d = d.iter().sum::<f64>() / d.len().max(1) as f64;
        sigmas.push(mid.max(1e-3 * mean_d).max(1e-12));
        rhos.push(rho);
    }
    (sigmas, rhos)
}

/// Symmetrised fuzzy graph as `(i, j, weight)` edges with `i < j`.
fn fuzzy_graph(points: &[Vec<f64>], k: usize) -> Vec<(usize, usize, f64)> {
    let (idx, dist) = knn(points, k);
    let (sigma, rho) = smooth_knn(&dist, k);
    let mut directed: HashMap<(usize, usize), f64> = HashMap::new();
    for i in 0..points.len() {
        for (&j, &d) in idx[i].iter().zip(&dist[i]) {
            let w = (-((d - rho[i]).max(0.0)) / sigma[i]).exp();
            directed.insert((i, j), w);
        }
    }
    let mut edges: HashMap<(usize, usize), f64> = HashMap::new();
    for (&(i, j), &w) in &directed {
        let back = directed.get(&(j, i)).copied().unwrap_or(0.0);
        let key = (i.min(j), i.max(j));
        edges.insert(key, w + back - w * back);
    }
    let mut out: Vec<(usize, usize, f64)> = edges.into_iter().map(|((i, j), w)| (i, j, w)).collect();
    out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    out
}

/// Fit `1 / (1 + a·d^(2b))` to the offset-exponential target curve shaped by `min_dist`.
pub fn fit_ab(min_dist: f64) -> (f64, f64) {
    let spread = 1.0;
    let xs: Vec<f64> = (1..=300).map(|i| i as f64 * 3.0 * spread / 300.0).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| if x < min_dist { 1.0 } else { (-(x - min_dist) / spread).exp() })
        .collect();
    let sse = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| {
                let f = 1.0 / (1.0 + a * x.powf(2.0 * b));
                (f - y) * (f - y)
            })
            .sum()
    };
    // Coarse log-grid, then coordinate refinement.
    let mut best = (f64::INFINITY, 1.0, 1.0);
    for i in 0..60 {
        for j in 0..60 {
            let a = 10f64.powf(-2.0 + 4.0 * i as f64 / 59.0);
            let b = 0.2 + 2.3 * j as f64 / 59.0;
            let e = sse(a, b);
            if e < best.0 {
                best = (e, a, b);
            }
        }
    }
    let (mut a, mut b) = (best.1, best.2);
    let mut step = (a * 0.1, 0.02);
    for _ in 0..200 {
        let mut moved = false;
        for (da, db) in [(step.0, 0.0), (-step.0, 0.0), (0.0, step.1), (0.0, -step.1)] {
            let (na, nb) = (a + da, b + db);
            if na > 0.0 && nb > 0.0 && sse(na, nb) < sse(a, b) {
                a = na;
                b = nb;
                moved = true;
            }
        }
        if !moved {
            step = (step.0 / 2.0, step.1 / 2.0);
        }
    }
    (a, b)
}

fn clip(v: f64) -> f64 {
    v.clamp(-4.0, 4.0)
}

#[allow(clippy::too_many_arguments)]
fn optimize(
    coords: &mut [[f64; 2]],
    edges: &[(usize, usize, f64)],
    a: f64,
    b: f64,
    epochs: usize,
    negatives: usize,
    lr0: f64,
    rng: &mut ChaCha8Rng,
) {
    let n = coords.len();
    if edges.is_empty() || epochs == 0 {
        return;
    }
    let w_max = edges.iter().map(|e| e.2).fold(0.0, f64::max);
    let per_sample: Vec<f64> = edges
        .iter()
        .map(|e| if e.2 > 0.0 && e.2 >= w_max / epochs as f64 { w_max / e.2 } else { f64::INFINITY })
        .collect();
    let per_negative: Vec<f64> = per_sample.iter().map(|p| p / negatives.max(1) as f64).collect();
    let mut next_sample = per_sample.clone();
    let mut next_negative = per_negative.clone();
    for epoch in 0..epochs {
        let lr = lr0 * (1.0 - epoch as f64 / epochs as f64);
        let e_f = epoch as f64;
        for (ei, &(i, j, _)) in edges.iter().enumerate() {
            if next_sample[ei] > e_f {
                continue;
            }
            // Both directions of the symmetric edge.
            for (head, tail) in [(i, j), (j, i)] {
                let d2 = (coords[head][0] - coords[tail][0]).powi(2) + (coords[head][1] - coords[tail][1]).powi(2);
                if d2 > 0.0 {
                    let coeff = -2.0 * a * b * d2.powf(b - 1.0) / (1.0 + a * d2.powf(b));
                    for d in 0..2 {
                        let g = clip(coeff * (coords[head][d] - coords[tail][d])) * lr;
                        coords[head][d] += g;
                        coords[tail][d] -= g;
                    }
                }
                let n_neg = ((e_f - next_negative[ei]) / per_negative[ei]).floor().max(0.0) as usize + 1;
                for _ in 0..n_neg.min(4 * negatives.max(1)) {
                    let other = rng.gen_range(0..n);
                    if other == head {
                        continue;
                    }
                    let d2 = (coords[head][0] - coords[other][0]).powi(2) + (coords[head][1] - coords[other][1]).powi(2);
                    if d2 <= 0.0 {
                        continue;
                    }
                    let coeff = 2.0 * b / ((0.001 + d2) * (1.0 + a * d2.powf(b)));
                    for d in 0..2 {
                        coords[head][d] += clip(coeff * (coords[head][d] - coords[other][d])) * lr;
                    }
                }
            }
            next_sample[ei] += per_sample[ei];
            next_negative[ei] = e_f + per_negative[ei];
        }
    }
}

fn check(points: &[Vec<f64>], params: &EmbedParams) -> Result<()> {
    if points.is_empty() || params.n_neighbors == 0 || params.n_neighbors >= points.len() {
        return Err(Error::InvalidInput(format!(
            "n_neighbors = {} needs more than that many points (got {})",
            params.n_neighbors,
            points.len()
        )));
    }
    let h = points[0].len();
    if h == 0 || points.iter().any(|p| p.len() != h || p.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidInput("points must share one positive dimension and be finite".into()));
    }
    if !(params.min_dist >= 0.0) {
        return Err(Error::Config("min_dist must be non-negative".into()));
    }
    Ok(())
}

/// Principal-axis start scaled to `[-10, 10]`.
fn initial_layout(points: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let unit: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let n = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            p.iter().map(|v| if n > 0.0 { v / n } else { 0.0 }).collect()
        })
        .collect();
    let dims = unit[0].len().min(2);
    let proj = match Pca::fit(&unit, dims) {
        Ok(p) => p.project(&unit),
        Err(_) => vec![vec![0.0; dims]; unit.len()],
    };
    let mut coords: Vec<[f64; 2]> = proj.iter().map(|p| [p[0], p.get(1).copied().unwrap_or(0.0)]).collect();
    let m = coords.iter().flat_map(|c| c.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    let s = if m > 0.0 { 10.0 / m } else { 1.0 };
    coords.iter_mut().for_each(|c| {
        c[0] *= s;
        c[1] *= s;
    });
    coords
}

/// Embed `points` into two dimensions. Deterministic for a given seed.
pub fn neighbor_embed(points: &[Vec<f64>], params: &EmbedParams) -> Result<Vec<[f64; 2]>> {
    check(points, params)?;
    let edges = fuzzy_graph(points, params.n_neighbors);
    let (a, b) = fit_ab(params.min_dist);
    let mut coords = initial_layout(points);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    optimize(&mut coords, &edges, a, b, params.epochs, params.negative_samples, 1.0, &mut rng);
    Ok(coords)
}

/// Embed a representation per step, warm-starting each step from the
/// previous one's coordinates for agents present in both.
pub fn aligned_embed(steps: &[(Vec<u64>, Vec<Vec<f64>>)], params: &EmbedParams) -> Result<Vec<EmbeddingResult>> {
    let (a, b) = fit_ab(params.min_dist);
    let mut out: Vec<EmbeddingResult> = Vec::with_capacity(steps.len());
    for (t, (ids, points)) in steps.iter().enumerate() {
        check(points, params)?;
        if ids.len() != points.len() {
            return Err(Error::Shape("agent ids and points differ in length".into()));
        }
        let edges = fuzzy_graph(points, params.n_neighbors);
        let mut rng = ChaCha8Rng::seed_from_u64(crate::training::derive_seed(params.seed, t as u64));
        let (mut coords, lr0) = match out.last() {
            None => (initial_layout(points), 1.0),
            Some(prev) => {
                let pos: HashMap<u64, [f64; 2]> = prev.agent_ids.iter().copied().zip(prev.points.iter().copied()).collect();
                let shared = ids.iter().filter(|i| pos.contains_key(i)).count();
                if shared == 0 {
                    return Err(Error::InvalidInput(format!("steps {t} and {} share no agents", t - 1)));
                }
                // New agents start at the mean position of their known neighbours.
                let mut coords: Vec<Option<[f64; 2]>> = ids.iter().map(|i| pos.get(i).copied()).collect();
                let centre = {
                    let known: Vec<[f64; 2]> = coords.iter().flatten().copied().collect();
                    let n = known.len() as f64;
                    [known.iter().map(|c| c[0]).sum::<f64>() / n, known.iter().map(|c| c[1]).sum::<f64>() / n]
                };
                let mut nb: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
                for &(i, j, _) in &edges {
                    nb[i].push(j);
                    nb[j].push(i);
                }
                let fixed = coords.clone();
                for (i, c) in coords.iter_mut().enumerate() {
                    if c.is_none() {
                        let known: Vec<[f64; 2]> = nb[i].iter().filter_map(|&j| fixed[j]).collect();
                        *c = Some(if known.is_empty() {
                            centre
                        } else {
                            let n = known.len() as f64;
                            [known.iter().map(|c| c[0]).sum::<f64>() / n, known.iter().map(|c| c[1]).sum::<f64>() / n]
                        });
                    }
                }
                (coords.into_iter().map(|c| c.unwrap()).collect(), params.warm_learning_rate)
            }
        };
        optimize(&mut coords, &edges, a, b, params.epochs, params.negative_samples, lr0, &mut rng);
        out.push(EmbeddingResult { step: t + 1, agent_ids: ids.clone(), points: coords });
    }
    Ok(out)
}

/// Mean silhouette coefficient under euclidean distance.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if i != j {
                let d: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                sums[labels[j]] += d;
            }
        }
        let own = labels[i];
        if sizes[own] <= 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            total += (b - a) / a.max(b);
        }
    }
    total / n.max(1) as f64
}
