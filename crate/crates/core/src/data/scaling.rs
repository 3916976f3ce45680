use super::{Dataset, NUM_TARGETS, TARGET_NAMES};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Per-feature min/max learned on a training split.
///
/// Features follow [`TARGET_NAMES`]: the four session metrics (which are
/// both inputs and lead-1 targets) and the future session count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStats {
    pub min: [f64; NUM_TARGETS],
    pub max: [f64; NUM_TARGETS],
}

impl ScalingStats {
    pub fn new(min: [f64; NUM_TARGETS], max: [f64; NUM_TARGETS]) -> Result<Self> {
        for i in 0..NUM_TARGETS {
            if !(min[i].is_finite() && max[i].is_finite()) || min[i] > max[i] {
                return Err(Error::Data(format!(
                    "bad scaling range for {}: [{}, {}]",
                    TARGET_NAMES[i], min[i], max[i]
                )));
            }
        }
        Ok(Self { min, max })
    }

    /// Fit on every session of `data`; the future session count ranges over `1..=T-1`.
    pub fn fit(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Data("cannot fit scaling stats on an empty dataset".into()));
        }
        let mut min = [f64::INFINITY; NUM_TARGETS];
        let mut max = [f64::NEG_INFINITY; NUM_TARGETS];
        for seq in &data.sequences {
            for s in &seq.sessions {
                for (j, v) in s.metrics().into_iter().enumerate() {
                    min[j] = min[j].min(v);
                    max[j] = max[j].max(v);
                }
            }
            let longest = (seq.len() - 1) as f64;
            min[4] = min[4].min(1.0);
            max[4] = max[4].max(longest);
        }
        Self::new(min, max)
    }

    /// Serialize as one `feature,min,max` row per feature (with header).
    pub fn to_text(&self) -> String {
        let mut out = String::from("feature,min,max\n");
        for i in 0..NUM_TARGETS {
            let _ = writeln!(out, "{},{},{}", TARGET_NAMES[i], self.min[i], self.max[i]);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut min = [f64::NAN; NUM_TARGETS];
        let mut max = [f64::NAN; NUM_TARGETS];
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "feature,min,max" => {}
            _ => return Err(Error::Data("scaling stats: missing header".into())),
        }
        for line in lines {
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::Data(format!("scaling stats: bad row '{line}'")));
            }
            let idx = TARGET_NAMES
                .iter()
                .position(|n| *n == parts[0])
                .ok_or_else(|| Error::Data(format!("scaling stats: unknown feature '{}'", parts[0])))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Data(format!("scaling stats: bad number '{s}'")))
            };
            min[idx] = parse(parts[1])?;
            max[idx] = parse(parts[2])?;
        }
        if min.iter().chain(&max).any(|v| v.is_nan()) {
            return Err(Error::Data("scaling stats: missing feature rows".into()));
        }
        Self::new(min, max)
    }

    #[inline]
    pub fn scale_one(&self, feature: usize, x: f64) -> f64 {
        let range = self.max[feature] - self.min[feature];
        if range == 0.0 {
            0.0
        } else {
            (x - self.min[feature]) / range
        }
    }

    #[inline]
    pub fn unscale_one(&self, feature: usize, z: f64) -> f64 {
        self.min[feature] + z * (self.max[feature] - self.min[feature])
    }

    #[inline]
    pub fn range(&self, feature: usize) -> f64 {
        self.max[feature] - self.min[feature]
    }
}

/// Min-max scale the leading features of `values` (`values.len() <= 5`).
/// A degenerate feature (`max == min`) maps to 0.
pub fn min_max_scale(values: &[f64], stats: &ScalingStats) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(i, &x)| stats.scale_one(i, x))
        .collect()
}

/// Inverse of [`min_max_scale`] for non-degenerate features.
pub fn min_max_unscale(values: &[f64], stats: &ScalingStats) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(i, &z)| stats.unscale_one(i, z))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stats() -> ScalingStats {
        ScalingStats::new([0.0, 1.0, 0.0, 0.0, 1.0], [10.0, 301.0, 100.0, 50.0, 20.0]).unwrap()
    }

    #[test]
    fn endpoints_and_midpoint() {
        let s = stats();
        assert_eq!(min_max_scale(&[0.0], &s), vec![0.0]);
        assert_eq!(min_max_scale(&[10.0], &s), vec![1.0]);
        assert_eq!(min_max_scale(&[5.0], &s), vec![0.5]);
    }

    #[test]
    fn degenerate_feature_maps_to_zero() {
        let s = ScalingStats::new([3.0; 5], [3.0; 5]).unwrap();
        assert_eq!(min_max_scale(&[3.0, 7.0], &s), vec![0.0, 0.0]);
    }

    #[test]
    fn round_trip_random_vectors() {
        use rand::{Rng, SeedableRng};
        let s = stats();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let v: Vec<f64> = (0..5)
                .map(|i| rng.gen_range(s.min[i]..=s.max[i]))
                .collect();
            let back = min_max_unscale(&min_max_scale(&v, &s), &s);
            for (a, b) in v.iter().zip(&back) {
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst < 1e-9, "worst round-trip error {worst}");
    }

    #[test]
    fn text_round_trip() {
        let s = stats();
        assert_eq!(ScalingStats::from_text(&s.to_text()).unwrap(), s);
        assert!(ScalingStats::from_text("nope\n").is_err());
    }

    proptest! {
        #[test]
        fn scaling_is_monotone(a in -50.0f64..400.0, b in -50.0f64..400.0) {
            let s = stats();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            for f in 0..5 {
                prop_assert!(s.scale_one(f, lo) <= s.scale_one(f, hi));
            }
        }

        #[test]
        fn in_range_values_map_into_unit_interval(u in 0.0f64..=1.0) {
            let s = stats();
            for f in 0..5 {
                let x = s.min[f] + u * s.range(f);
                let z = s.scale_one(f, x);
                prop_assert!((0.0..=1.0).contains(&z));
            }
        }
    }
}
