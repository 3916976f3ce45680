use super::elbow::elbow;
use super::kmeans::{inertia_curve, standardize, KMeansParams};
use crate::data::{Dataset, METRIC_NAMES, NUM_METRICS};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Mean z-score of one metric at one timestep within one partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionProfile {
    pub partition: usize,
    pub metric: String,
    /// 1-based session index.
    pub timestep: usize,
    pub n: usize,
    pub mean_z: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionReport {
    pub k: usize,
    pub agent_ids: Vec<u64>,
    pub assignments: Vec<usize>,
    pub inertia_curve: Vec<(usize, f64)>,
    pub elbow_k: usize,
    pub no_knee: bool,
    pub profiles: Vec<PartitionProfile>,
}

/// Per object and metric: mean and sample sd over every session of the population.
fn object_moments(data: &Dataset) -> Vec<[(f64, f64); NUM_METRICS]> {
    let n_obj = data.objects.len();
    let mut sum = vec![[0.0; NUM_METRICS]; n_obj];
    let mut sq = vec![[0.0; NUM_METRICS]; n_obj];
    let mut cnt = vec![0usize; n_obj];
    for s in &data.sequences {
        for sess in &s.sessions {
            for (m, v) in sess.metrics().iter().enumerate() {
                sum[s.object_id][m] += v;
            }
            cnt[s.object_id] += 1;
        }
    }
    let means: Vec<[f64; NUM_METRICS]> =
        (0..n_obj).map(|o| std::array::from_fn(|m| sum[o][m] / cnt[o].max(1) as f64)).collect();
    for s in &data.sequences {
        for sess in &s.sessions {
            for (m, v) in sess.metrics().iter().enumerate() {
                sq[s.object_id][m] += (v - means[s.object_id][m]).powi(2);
            }
        }
    }
    (0..n_obj)
        .map(|o| {
            std::array::from_fn(|m| {
                let sd = if cnt[o] > 1 { (sq[o][m] / (cnt[o] - 1) as f64).sqrt() } else { 0.0 };
                (means[o][m], sd)
            })
        })
        .collect()
}

/// Behavioural profiles of a partition of `members` (indices into `data`).
/// Metrics are z-scored against their object's population moments, then
/// averaged within partition per timestep. Partitions without members are
/// dropped with a warning.
pub fn partition_profiles(data: &Dataset, members: &[usize], assignments: &[usize]) -> Result<Vec<PartitionProfile>> {
    if members.len() != assignments.len() {
        return Err(Error::Shape(format!("{} members but {} assignments", members.len(), assignments.len())));
    }
    if let Some(&bad) = members.iter().find(|&&i| i >= data.len()) {
        return Err(Error::InvalidInput(format!("member index {bad} out of range")));
    }
    let moments = object_moments(data);
    let k = assignments.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = Vec::new();
    for p in 0..k {
        let group: Vec<usize> = members.iter().zip(assignments).filter(|(_, &a)| a == p).map(|(&i, _)| i).collect();
        if group.is_empty() {
            log::warn!("partition {p} has no members; dropped from profiles");
            continue;
        }
        let t_max = group.iter().map(|&i| data.sequences[i].len()).max().unwrap_or(0);
        for (m, name) in METRIC_NAMES.iter().enumerate() {
            for t in 0..t_max {
                let z: Vec<f64> = group
                    .iter()
                    .filter_map(|&i| {
                        let s = &data.sequences[i];
                        let (mu, sd) = moments[s.object_id][m];
                        s.sessions.get(t).map(|sess| if sd > 0.0 { (sess.metrics()[m] - mu) / sd } else { 0.0 })
                    })
                    .collect();
                let n = z.len();
                let mean = z.iter().sum::<f64>() / n as f64;
                let sd = if n > 1 { (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
                out.push(PartitionProfile {
                    partition: p,
                    metric: name.to_string(),
                    timestep: t + 1,
                    n,
                    mean_z: mean,
                    half_width: 1.96 * sd / (n as f64).sqrt(),
                });
            }
        }
    }
    Ok(out)
}

/// Standardise representations, sweep k, pick the elbow and profile its partitions.
pub fn partition(
    data: &Dataset,
    members: &[usize],
    representations: &[Vec<f64>],
    ks: &[usize],
    params: &KMeansParams,
) -> Result<PartitionReport> {
    if members.len() != representations.len() {
        return Err(Error::Shape("one representation per member is required".into()));
    }
    let points = standardize(representations);
    let curve = inertia_curve(&points, ks, params)?;
    let inertias: Vec<(usize, f64)> = curve.iter().map(|(k, r)| (*k, r.inertia)).collect();
    let knee = elbow(&inertias)?;
    if knee.no_knee {
        log::warn!("inertia curve has no knee; using k = {}", knee.k);
    }
    let chosen = &curve.iter().find(|(k, _)| *k == knee.k).expect("elbow k is on the curve").1;
    let profiles = partition_profiles(data, members, &chosen.assignments)?;
    Ok(PartitionReport {
        k: knee.k,
        agent_ids: members.iter().map(|&i| data.sequences[i].agent_id).collect(),
        assignments: chosen.assignments.clone(),
        inertia_curve: inertias,
        elbow_k: knee.k,
        no_knee: knee.no_knee,
        profiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{InteractionSequence, TelemetrySession};

    fn seq(id: u64, obj: usize, rows: &[[f64; 4]]) -> InteractionSequence {
        let sessions = rows
            .iter()
            .map(|r| TelemetrySession::new(r[0], r[1], r[2], r[3] as u32, obj).unwrap())
            .collect();
        InteractionSequence::new(id, obj, sessions, None).unwrap()
    }

    #[test]
    fn members_at_population_mean_profile_to_zero() {
        let data = Dataset::new(
            vec!["a".into()],
            vec![
                seq(0, 0, &[[1.0, 10.0, 5.0, 2.0], [1.0, 10.0, 5.0, 2.0]]),
                seq(1, 0, &[[3.0, 30.0, 15.0, 6.0], [3.0, 30.0, 15.0, 6.0]]),
                seq(2, 0, &[[2.0, 20.0, 10.0, 4.0], [2.0, 20.0, 10.0, 4.0]]),
            ],
        )
        .unwrap();
        let prof = partition_profiles(&data, &[0, 1, 2], &[0, 0, 1]).unwrap();
        for p in prof.iter().filter(|p| p.partition == 1) {
            assert!(p.mean_z.abs() < 1e-12 && p.half_width == 0.0);
        }
        // Partition 0 is symmetric about the mean.
        for p in prof.iter().filter(|p| p.partition == 0) {
            assert!(p.mean_z.abs() < 1e-12);
        }
    }

    #[test]
    fn empty_partition_dropped() {
        let data = Dataset::new(
            vec!["a".into()],
            vec![seq(0, 0, &[[1.0, 1.0, 1.0, 1.0], [2.0, 2.0, 2.0, 2.0]]), seq(1, 0, &[[3.0, 3.0, 3.0, 3.0], [2.0, 2.0, 2.0, 2.0]])],
        )
        .unwrap();
        let prof = partition_profiles(&data, &[0, 1], &[0, 2]).unwrap();
        assert!(prof.iter().all(|p| p.partition != 1));
        assert_eq!(prof.len(), 2 * 4 * 2);
        assert!(partition_profiles(&data, &[0], &[0, 1]).is_err());
    }
}
