use crate::error::{Error, Result};
use crate::training::derive_seed;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansParams {
    pub batch_size: usize,
    pub n_init: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self { batch_size: 512, n_init: 50, max_epochs: 300, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, m) in centroids.iter().enumerate() {
        let d = sq_dist(p, m);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Full-data assignments and sum of squared distances to the nearest centroid.
pub fn inertia(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut total = 0.0;
    let a = points
        .iter()
        .map(|p| {
            let (c, d) = nearest(p, centroids);
            total += d;
            c
        })
        .collect();
    (a, total)
}

/// Columns rescaled to zero mean and unit variance (constant columns become 0).
pub fn standardize(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points.len().max(1) as f64;
    let h = points.first().map_or(0, |p| p.len());
    let mut mean = vec![0.0; h];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v / n;
        }
    }
    let mut sd = vec![0.0; h];
    for p in points {
        for j in 0..h {
            sd[j] += (p[j] - mean[j]).powi(2) / n;
        }
    }
    let sd: Vec<f64> = sd.into_iter().map(f64::sqrt).collect();
    points
        .iter()
        .map(|p| (0..h).map(|j| if sd[j] > 0.0 { (p[j] - mean[j]) / sd[j] } else { 0.0 }).collect())
        .collect()
}

fn validate(points: &[Vec<f64>], k: usize, params: &KMeansParams) -> Result<()> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidInput(format!("k = {k} with {} points", points.len())));
    }
    if params.batch_size == 0 || params.n_init == 0 {
        return Err(Error::Config("batch_size and n_init must be at least 1".into()));
    }
    let h = points[0].len();
    if points.iter().any(|p| p.len() != h || p.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidInput("points must share one dimension and be finite".into()));
    }
    Ok(())
}

/// Mini-batch updates from `centroids`, each centroid moving towards its
/// batch members with learning rate `1 / count`.
fn refine(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, params: &KMeansParams, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut counts = vec![0usize; centroids.len()];
    let b = params.batch_size.min(n);
    for _ in 0..params.max_epochs {
        let batch: Vec<usize> = (0..b).map(|_| rng.gen_range(0..n)).collect();
        let owners: Vec<usize> = batch.iter().map(|&i| nearest(&points[i], &centroids).0).collect();
        let mut shift = 0.0f64;
        for (&i, &c) in batch.iter().zip(&owners) {
            counts[c] += 1;
            let lr = 1.0 / counts[c] as f64;
            for (m, x) in centroids[c].iter_mut().zip(&points[i]) {
                let step = lr * (x - *m);
                *m += step;
                shift = shift.max(step.abs());
            }
        }
        if shift < 1e-9 {
            break;
        }
    }
    centroids
}

fn run_restart(points: &[Vec<f64>], init: Vec<Vec<f64>>, params: &KMeansParams, rng: &mut ChaCha8Rng) -> KMeansResult {
    let (_, init_inertia) = inertia(points, &init);
    let refined = refine(points, init.clone(), params, rng);
    let (a, i) = inertia(points, &refined);
    // Keep the starting layout when refinement made things worse.
    if init_inertia < i {
        let (a0, i0) = inertia(points, &init);
        KMeansResult { centroids: init, assignments: a0, inertia: i0 }
    } else {
        KMeansResult { centroids: refined, assignments: a, inertia: i }
    }
}

fn best_of(results: Vec<KMeansResult>) -> KMeansResult {
    results
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("at least one restart")
}

/// Best of `n_init` random-start mini-batch k-means runs by full-data inertia.
pub fn minibatch_kmeans(points: &[Vec<f64>], k: usize, params: &KMeansParams) -> Result<KMeansResult> {
    validate(points, k, params)?;
    let runs: Vec<KMeansResult> = (0..params.n_init)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, r as u64));
            let init = sample(&mut rng, points.len(), k).into_iter().map(|i| points[i].clone()).collect();
            run_restart(points, init, params, &mut rng)
        })
        .collect();
    Ok(best_of(runs))
}

/// Solutions for each `k` in `ks` (ascending). Besides the random restarts,
/// each `k` also tries the previous solution plus its worst-fit point, which
/// keeps inertia non-increasing in `k`.
pub fn inertia_curve(points: &[Vec<f64>], ks: &[usize], params: &KMeansParams) -> Result<Vec<(usize, KMeansResult)>> {
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("k values must be strictly increasing".into()));
    }
    let mut out: Vec<(usize, KMeansResult)> = Vec::with_capacity(ks.len());
    for &k in ks {
        let p = KMeansParams { seed: derive_seed(params.seed, 1000 + k as u64), ..params.clone() };
        let mut best = minibatch_kmeans(points, k, &p)?;
        if let Some((pk, prev)) = out.last() {
            let mut init = prev.centroids.clone();
            let mut far: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, x)| (nearest(x, &init).1, i)).collect();
            far.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, i) in far.iter().take(k - pk) {
                init.push(points[i].clone());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(p.seed, u64::MAX));
            let grown = run_restart(points, init, &p, &mut rng);
            best = best_of(vec![best, grown]);
        }
        out.push((k, best));
    }
    Ok(out)
}

/// Fraction of points whose cluster's majority label matches their own.
pub fn purity(assignments: &[usize], labels: &[usize]) -> f64 {
    use std::collections::HashMap;
    let mut table: HashMap<usize, HashMap<usize, usize>> = HashMap::new();
    for (&a, &l) in assignments.iter().zip(labels) {
        *table.entry(a).or_default().entry(l).or_default() += 1;
    }
    let hits: usize = table.values().map(|m| m.values().copied().max().unwrap_or(0)).sum();
    hits as f64 / assignments.len().max(1) as f64
}
