//! Minimal SVG renderings for quick inspection.

use super::EmbeddingResult;
use std::collections::BTreeMap;
use std::fmt::Write;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;
const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

fn frame<'a>(points: impl Iterator<Item = &'a [f64; 2]>) -> impl Fn([f64; 2]) -> (f64, f64) {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let span = [(hi[0] - lo[0]).max(1e-12), (hi[1] - lo[1]).max(1e-12)];
    move |p| {
        let w = SIZE - 2.0 * MARGIN;
        (MARGIN + (p[0] - lo[0]) / span[0] * w, SIZE - MARGIN - (p[1] - lo[1]) / span[1] * w)
    }
}

fn open() -> String {
    format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n")
}

/// Scatter plot coloured by label.
pub fn scatter(points: &[[f64; 2]], labels: &[usize]) -> String {
    let map = frame(points.iter());
    let mut s = open();
    for (i, p) in points.iter().enumerate() {
        let (x, y) = map(*p);
        let c = PALETTE[labels.get(i).copied().unwrap_or(0) % PALETTE.len()];
        let _ = writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2\" fill=\"{c}\" fill-opacity=\"0.6\"/>");
    }
    s.push_str("</svg>\n");
    s
}

/// Polyline per agent through its aligned positions, for at most `max_agents` agents.
pub fn trajectories(steps: &[EmbeddingResult], max_agents: usize) -> String {
    let mut paths: BTreeMap<u64, Vec<[f64; 2]>> = BTreeMap::new();
    for r in steps {
        for (id, p) in r.agent_ids.iter().zip(&r.points) {
            paths.entry(*id).or_default().push(*p);
        }
    }
    let map = frame(steps.iter().flat_map(|r| r.points.iter()));
    let mut s = open();
    for (n, pts) in paths.values().filter(|p| p.len() > 1).take(max_agents).enumerate() {
        let coords: Vec<String> = pts
            .iter()
            .map(|p| {
                let (x, y) = map(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let c = PALETTE[n % PALETTE.len()];
        let _ = writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"{c}\" stroke-opacity=\"0.5\"/>", coords.join(" "));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_has_one_circle_per_point() {
        let s = scatter(&[[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]], &[0, 1, 1]);
        assert_eq!(s.matches("<circle").count(), 3);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn trajectory_per_agent() {
        let steps = vec![
            EmbeddingResult { step: 1, agent_ids: vec![1, 2], points: vec![[0.0, 0.0], [1.0, 1.0]] },
            EmbeddingResult { step: 2, agent_ids: vec![1, 2], points: vec![[0.5, 0.0], [1.0, 2.0]] },
        ];
        assert_eq!(trajectories(&steps, 10).matches("<polyline").count(), 2);
    }
}
