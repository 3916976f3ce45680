use crate::data::{build_targets, Dataset, InteractionSequence, NUM_TARGETS};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Persistence forecast: each metric repeats its current value and one more
/// session is always expected.
pub fn lag1_predict(seq: &InteractionSequence) -> Result<Vec<[f64; NUM_TARGETS]>> {
    if seq.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "agent {}: lag-1 needs at least 2 sessions",
            seq.agent_id
        )));
    }
    Ok(seq.sessions[..seq.len() - 1]
        .iter()
        .map(|s| {
            let m = s.metrics();
            [m[0], m[1], m[2], m[3], 1.0]
        })
        .collect())
}

/// Exponentially weighted average of `values`, the last value weighted 1 and
/// each earlier one by a further factor `0.5^(1/halflife)`. An infinite
/// halflife gives the arithmetic mean.
pub fn ewa(values: &[f64], halflife: f64) -> f64 {
    let n = values.len();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in values.iter().enumerate() {
        let w = 0.5f64.powf((n - 1 - i) as f64 / halflife);
        num += w * v;
        den += w;
    }
    num / den
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-object constant forecast: the median over agents of each agent's
/// exponentially weighted target history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianModel {
    pub halflife: f64,
    pub per_object: Vec<Option<[f64; NUM_TARGETS]>>,
}

impl MedianModel {
    pub fn fit(train: &Dataset, halflife: f64) -> Result<Self> {
        if !(halflife > 0.0) {
            return Err(Error::Config("median halflife must be positive".into()));
        }
        if train.is_empty() {
            return Err(Error::Data("median model needs a non-empty training set".into()));
        }
        let mut per_object = Vec::with_capacity(train.objects.len());
        for idx in train.indices_by_object() {
            if idx.is_empty() {
                per_object.push(None);
                continue;
            }
            let mut agent_values: Vec<Vec<f64>> = vec![Vec::with_capacity(idx.len()); NUM_TARGETS];
            for &i in &idx {
                let targets: Vec<[f64; NUM_TARGETS]> =
                    build_targets(&train.sequences[i])?.iter().map(|t| t.to_array()).collect();
                for (k, vals) in agent_values.iter_mut().enumerate() {
                    let series: Vec<f64> = targets.iter().map(|t| t[k]).collect();
                    vals.push(ewa(&series, halflife));
                }
            }
            let mut row = [0.0; NUM_TARGETS];
            for (k, vals) in agent_values.into_iter().enumerate() {
                row[k] = median(vals);
            }
            per_object.push(Some(row));
        }
        Ok(Self { halflife, per_object })
    }

    pub fn predict(&self, seq: &InteractionSequence) -> Result<Vec<[f64; NUM_TARGETS]>> {
        let row = self
            .per_object
            .get(seq.object_id)
            .copied()
            .flatten()
            .ok_or_else(|| Error::Data(format!("median model has no fit for object {}", seq.object_id)))?;
        Ok(vec![row; seq.len().saturating_sub(1)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TelemetrySession;

    fn seq(id: u64, object: usize, times: &[f64]) -> InteractionSequence {
        let s = times
            .iter()
            .map(|&t| TelemetrySession::new(1.0, t, 50.0, 3, object).unwrap())
            .collect();
        InteractionSequence::new(id, object, s, None).unwrap()
    }

    #[test]
    fn lag1_repeats_current_values() {
        let p = lag1_predict(&seq(1, 0, &[5.0, 7.0, 9.0])).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!((p[0][1], p[1][1]), (5.0, 7.0));
        assert!(p.iter().all(|r| r[4] == 1.0));
    }

    #[test]
    fn ewa_weights_and_limits() {
        let w = [0.25, 0.5, 1.0];
        let expect = (0.25 * 2.0 + 0.5 * 4.0 + 8.0) / w.iter().sum::<f64>();
        assert!((ewa(&[2.0, 4.0, 8.0], 1.0) - expect).abs() < 1e-15);
        assert!((ewa(&[2.0, 4.0, 9.0], f64::INFINITY) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn median_of_two_agents() {
        let d = Dataset::new(vec!["g".into()], vec![seq(1, 0, &[0.0, 4.0]), seq(2, 0, &[0.0, 8.0])]).unwrap();
        let m = MedianModel::fit(&d, 1.0).unwrap();
        let p = m.predict(&seq(3, 0, &[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0][1], 6.0);
        assert_eq!(p[1], p[0]);
    }

    #[test]
    fn unknown_object_and_empty_train_rejected() {
        let d = Dataset::new(vec!["a".into(), "b".into()], vec![seq(1, 0, &[1.0, 2.0])]).unwrap();
        let m = MedianModel::fit(&d, 1.0).unwrap();
        assert!(m.predict(&seq(2, 1, &[1.0, 2.0])).is_err());
        assert!(MedianModel::fit(&Dataset::default(), 1.0).is_err());
        assert!(MedianModel::fit(&d, 0.0).is_err());
    }
}
