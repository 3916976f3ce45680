use super::{Dataset, NUM_METRICS};

/// Nearest-rank percentile of an ascending-sorted slice (`0 < p <= 100`).
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Drop sequences with any session metric above its per-object `p`-th
/// percentile (nearest rank over all sessions of that object).
pub fn percentile_filter(data: &Dataset, p: f64) -> Dataset {
    assert!(p > 0.0 && p <= 100.0, "percentile must lie in (0, 100]");
    let by_object = data.indices_by_object();
    let mut thresholds = vec![[f64::INFINITY; NUM_METRICS]; data.objects.len()];
    for (obj, idx) in by_object.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        for (m, threshold) in thresholds[obj].iter_mut().enumerate() {
            let mut vals: Vec<f64> = idx
                .iter()
                .flat_map(|&i| data.sequences[i].sessions.iter().map(move |s| s.metrics()[m]))
                .collect();
            vals.sort_by(f64::total_cmp);
            *threshold = nearest_rank(&vals, p);
        }
    }
    let keep: Vec<usize> = data
        .sequences
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            let th = &thresholds[s.object_id];
            s.sessions
                .iter()
                .all(|sess| sess.metrics().iter().zip(th).all(|(v, t)| v <= t))
        })
        .map(|(i, _)| i)
        .collect();
    data.subset(&keep)
}
