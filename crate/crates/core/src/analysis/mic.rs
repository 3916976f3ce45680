//! Maximal information coefficient by approximate grid search: the y-axis
//! is equipartitioned, the x-axis optimised by dynamic programming over
//! clumps of consecutive points, for both orientations.

use crate::error::{Error, Result};

/// Grid resolution exponent: grids satisfy `x · y ≤ n^0.6`.
const ALPHA: f64 = 0.6;
/// Superclump factor: at most `c · x_max` clumps enter the DP.
const CLUMP_FACTOR: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicResult {
    pub mic: f64,
    /// One input has a single distinct value; `mic` is then 0.
    pub constant_input: bool,
}

/// Assign consecutive groups of the given sizes to at most `rows` rows of
/// roughly equal point counts. Returns the row per group and the row count.
fn equipartition_groups(sizes: &[usize], rows: usize) -> (Vec<usize>, usize) {
    let n: usize = sizes.iter().sum();
    let mut out = Vec::with_capacity(sizes.len());
    let (mut row, mut in_row, mut assigned) = (0usize, 0usize, 0usize);
    let mut desired = n as f64 / rows as f64;
    for &g in sizes {
        if in_row > 0 && row + 1 < rows {
            let with = ((in_row + g) as f64 - desired).abs();
            let without = (in_row as f64 - desired).abs();
            if with > without {
                row += 1;
                assigned += in_row;
                in_row = 0;
                desired = (n - assigned) as f64 / (rows - row) as f64;
            }
        }
        out.push(row);
        in_row += g;
    }
    (out, row + 1)
}

/// Row id per point, equipartitioning `values` (visited in `order`) into at
/// most `rows` rows without splitting ties.
fn equipartition(values: &[f64], order: &[usize], rows: usize) -> (Vec<usize>, usize) {
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        sizes.push(j - i + 1);
        i = j + 1;
    }
    let (group_row, used) = equipartition_groups(&sizes, rows);
    let mut out = vec![0; values.len()];
    let mut pos = 0;
    for (g, &size) in sizes.iter().enumerate() {
        for &k in &order[pos..pos + size] {
            out[k] = group_row[g];
        }
        pos += size;
    }
    (out, used)
}

fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / t;
            -p * p.ln()
        })
        .sum()
}

/// Best mutual information for every column count `2..=x_max` given fixed rows `q`.
fn optimize_x_axis(x: &[f64], x_order: &[usize], q: &[usize], rows: usize, x_max: usize) -> Vec<f64> {
    let n = x.len();
    // Clumps: runs of consecutive points sharing a row, never splitting tied x.
    let mut clump_rows: Vec<Vec<usize>> = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[x_order[j + 1]] == x[x_order[i]] {
            j += 1;
        }
        let mut counts = vec![0usize; rows];
        for &k in &x_order[i..=j] {
            counts[q[k]] += 1;
        }
        let single = counts.iter().filter(|&&c| c > 0).count() == 1;
        let merge = single
            && clump_rows.last().is_some_and(|prev| {
                let pr = prev.iter().filter(|&&c| c > 0).count() == 1;
                pr && prev.iter().zip(&counts).all(|(a, b)| (*a > 0) == (*b > 0))
            });
        if merge {
            let last = clump_rows.last_mut().unwrap();
            for (a, b) in last.iter_mut().zip(&counts) {
                *a += b;
            }
        } else {
            clump_rows.push(counts);
        }
        i = j + 1;
    }
    // Superclumps: equipartition clumps by size when there are too many.
    let limit = CLUMP_FACTOR * x_max;
    if clump_rows.len() > limit {
        let sizes: Vec<usize> = clump_rows.iter().map(|c| c.iter().sum()).collect();
        let (group_row, used) = equipartition_groups(&sizes, limit);
        let mut merged = vec![vec![0usize; rows]; used];
        for (c, counts) in clump_rows.iter().enumerate() {
            for (a, b) in merged[group_row[c]].iter_mut().zip(counts) {
                *a += b;
            }
        }
        clump_rows = merged;
    }
    let k = clump_rows.len();
    // prefix[t][r]: points of row r among the first t clumps.
    let mut prefix = vec![vec![0usize; rows]; k + 1];
    for t in 0..k {
        for r in 0..rows {
            prefix[t + 1][r] = prefix[t][r] + clump_rows[t][r];
        }
    }
    let total_rows: Vec<usize> = prefix[k].clone();
    let h_q = entropy(&total_rows, n);
    // cost(s, t) = n_col · H(Q | col) for a column made of clumps s+1..=t.
    let cost = |s: usize, t: usize| -> f64 {
        let counts: Vec<usize> = (0..rows).map(|r| prefix[t][r] - prefix[s][r]).collect();
        let m: usize = counts.iter().sum();
        m as f64 * entropy(&counts, m)
    };
    let mut costs = vec![vec![0.0; k + 1]; k + 1];
    for s in 0..k {
        for t in s + 1..=k {
            costs[s][t] = cost(s, t);
        }
    }
    let cols = x_max.min(k).max(1);
    let mut g = vec![f64::INFINITY; k + 1];
    for t in 1..=k {
        g[t] = costs[0][t];
    }
    let mut best = vec![0.0; x_max + 1];
    best[1] = 0.0;
    for l in 2..=x_max {
        if l <= cols {
            let mut next = vec![f64::INFINITY; k + 1];
            for t in l..=k {
                for s in l - 1..t {
                    let v = g[s] + costs[s][t];
                    if v < next[t] {
                        next[t] = v;
                    }
                }
            }
            g = next;
            best[l] = (h_q - g[k] / n as f64).max(0.0);
        } else {
            best[l] = best[l - 1];
        }
    }
    best
}

/// Characteristic scores `I / ln min(x, y)` for one orientation, keyed by `(cols, rows)`.
fn one_orientation(x: &[f64], y: &[f64], b: f64, out: &mut Vec<((usize, usize), f64)>) {
    let n = x.len();
    let mut x_order: Vec<usize> = (0..n).collect();
    x_order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut y_order: Vec<usize> = (0..n).collect();
    y_order.sort_by(|&i, &j| y[i].total_cmp(&y[j]));
    let y_max = (b / 2.0).floor() as usize;
    for rows_req in 2..=y_max {
        let x_max = (b / rows_req as f64).floor() as usize;
        if x_max < 2 {
            continue;
        }
        let (q, rows) = equipartition(y, &y_order, rows_req);
        if rows < 2 {
            continue;
        }
        let mi = optimize_x_axis(x, &x_order, &q, rows, x_max);
        for (cols, &v) in mi.iter().enumerate().skip(2) {
            let norm = (cols.min(rows) as f64).ln();
            out.push(((cols, rows), v / norm));
        }
    }
}

/// Maximal information coefficient of `(x, y)`, in `[0, 1]`.
pub fn mic(x: &[f64], y: &[f64]) -> Result<MicResult> {
    if x.len() != y.len() {
        return Err(Error::Shape("mic inputs differ in length".into()));
    }
    if x.len() < 20 {
        return Err(Error::InvalidInput(format!("mic needs at least 20 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("mic inputs must be finite".into()));
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Ok(MicResult { mic: 0.0, constant_input: true });
    }
    let b = (x.len() as f64).powf(ALPHA).max(4.0);
    let mut scores = Vec::new();
    one_orientation(x, y, b, &mut scores);
    let mut swapped = Vec::new();
    one_orientation(y, x, b, &mut swapped);
    let best = scores
        .iter()
        .chain(swapped.iter())
        .map(|(_, v)| *v)
        .fold(0.0f64, f64::max)
        .min(1.0);
    Ok(MicResult { mic: best, constant_input: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equipartition_keeps_ties_together() {
        let v = [1.0, 1.0, 1.0, 2.0, 3.0, 4.0];
        let order: Vec<usize> = (0..6).collect();
        let (q, rows) = equipartition(&v, &order, 3);
        assert_eq!(q[0], q[1]);
        assert_eq!(q[1], q[2]);
        assert!(rows <= 3);
        let (q, rows) = equipartition(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &order, 3);
        assert_eq!((q, rows), (vec![0, 0, 1, 1, 2, 2], 3));
    }

    #[test]
    fn identity_is_perfect() {
        let x: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let r = mic(&x, &x).unwrap();
        assert!(r.mic >= 0.99, "{}", r.mic);
    }

    #[test]
    fn independent_noise_is_low() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..1000).map(|_| rng.gen()).collect();
        let y: Vec<f64> = (0..1000).map(|_| rng.gen()).collect();
        let r = mic(&x, &y).unwrap();
        assert!(r.mic < 0.2, "{}", r.mic);
    }

    #[test]
    fn sine_is_detected() {
        let x: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        let y: Vec<f64> = x.iter().map(|v| (4.0 * std::f64::consts::PI * v).sin()).collect();
        let r = mic(&x, &y).unwrap();
        assert!(r.mic >= 0.8, "{}", r.mic);
    }

    #[test]
    fn constant_and_bad_inputs() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let r = mic(&x, &[2.0; 30]).unwrap();
        assert_eq!(r, MicResult { mic: 0.0, constant_input: true });
        assert!(mic(&x[..10], &x[..10]).is_err());
        assert!(mic(&x, &x[..29]).is_err());
    }
}
