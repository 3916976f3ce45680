use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use salience::analysis::*;
use salience::data::{Dataset, InteractionSequence, TelemetrySession};

fn blobs(centres: &[Vec<f64>], per: usize, sd: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sd).unwrap();
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    for (c, centre) in centres.iter().enumerate() {
        for _ in 0..per {
            pts.push(centre.iter().map(|m| m + noise.sample(&mut rng)).collect());
            labels.push(c);
        }
    }
    (pts, labels)
}

fn axis(dim: usize, h: usize, scale: f64) -> Vec<f64> {
    let mut v = vec![0.0; h];
    v[dim] = scale;
    v
}

fn as_vecs(p: &[[f64; 2]]) -> Vec<Vec<f64>> {
    p.iter().map(|c| c.to_vec()).collect()
}

fn fast() -> EmbedParams {
    EmbedParams { epochs: 200, seed: 5, ..Default::default() }
}

#[test]
fn separated_clusters_embed_apart() {
    let (pts, labels) = blobs(&[axis(0, 10, 3.0), axis(1, 10, 3.0)], 1000, 0.5, 1);
    let emb = neighbor_embed(&pts, &fast()).unwrap();
    assert!(emb.iter().all(|p| p[0].is_finite() && p[1].is_finite()));
    let s = silhouette(&as_vecs(&emb), &labels);
    assert!(s > 0.5, "silhouette {s}");
}

#[test]
fn duplicates_land_together_and_runs_repeat() {
    let (mut pts, _) = blobs(&[axis(0, 6, 3.0), axis(1, 6, 3.0)], 150, 0.5, 2);
    pts.push(pts[7].clone());
    let params = EmbedParams { n_neighbors: 15, min_dist: 0.1, ..fast() };
    let emb = neighbor_embed(&pts, &params).unwrap();
    let res = EmbeddingResult { step: 1, agent_ids: (0..pts.len() as u64).collect(), points: emb.clone() };
    let last = emb.len() - 1;
    let d = ((emb[7][0] - emb[last][0]).powi(2) + (emb[7][1] - emb[last][1]).powi(2)).sqrt();
    assert!(d < res.scale() * 1e-2, "{d} vs {}", res.scale());
    assert_eq!(emb, neighbor_embed(&pts, &params).unwrap());
}

#[test]
fn neighbourhoods_are_preserved() {
    let centres: Vec<Vec<f64>> = (0..5).map(|c| axis(c, 12, 3.0)).collect();
    let (pts, _) = blobs(&centres, 100, 0.6, 3);
    let emb = neighbor_embed(&pts, &EmbedParams { n_neighbors: 15, ..fast() }).unwrap();
    let k = 15;
    let cos = |a: &[f64], b: &[f64]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        1.0 - dot / (na * nb)
    };
    let top = |dist: &dyn Fn(usize) -> f64, i: usize| -> Vec<usize> {
        let mut o: Vec<usize> = (0..pts.len()).filter(|&j| j != i).collect();
        o.sort_by(|&a, &b| dist(a).total_cmp(&dist(b)));
        o.truncate(k);
        o
    };
    let mut overlap = 0.0;
    for i in 0..pts.len() {
        let hi = top(&|j| cos(&pts[i], &pts[j]), i);
        let lo = top(&|j| (emb[i][0] - emb[j][0]).powi(2) + (emb[i][1] - emb[j][1]).powi(2), i);
        overlap += hi.iter().filter(|j| lo.contains(j)).count() as f64 / k as f64;
    }
    overlap /= pts.len() as f64;
    assert!(overlap > 0.3, "overlap {overlap}");
}

#[test]
fn static_representations_stay_put() {
    let (pts, _) = blobs(&[axis(0, 6, 3.0), axis(1, 6, 3.0)], 150, 0.5, 4);
    let ids: Vec<u64> = (0..pts.len() as u64).collect();
    let steps = vec![(ids.clone(), pts.clone()), (ids.clone(), pts.clone()), (ids, pts)];
    let out = aligned_embed(&steps, &EmbedParams { n_neighbors: 15, ..fast() }).unwrap();
    assert_eq!(out.len(), 3);
    let scale = out[0].scale();
    for t in 1..3 {
        let mean_disp: f64 = out[t]
            .points
            .iter()
            .zip(&out[t - 1].points)
            .map(|(a, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
            .sum::<f64>()
            / out[t].points.len() as f64;
        assert!(mean_disp < 0.05 * scale, "step {t}: {mean_disp} vs scale {scale}");
    }
}

#[test]
fn jumping_agents_cross_regions() {
    let (pts, labels) = blobs(&[axis(0, 6, 3.0), axis(1, 6, 3.0)], 150, 0.5, 5);
    let ids: Vec<u64> = (0..pts.len() as u64).collect();
    // The first 20 agents of cluster 0 move to cluster 1 at the second step.
    let mut moved = pts.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for p in moved.iter_mut().take(20) {
        *p = axis(1, 6, 3.0).iter().map(|m| m + rng.gen_range(-0.5..0.5)).collect();
    }
    let out = aligned_embed(&[(ids.clone(), pts), (ids, moved)], &EmbedParams { n_neighbors: 15, ..fast() }).unwrap();
    let centroid = |step: &EmbeddingResult, label: usize| {
        let sel: Vec<&[f64; 2]> = step.points.iter().enumerate().filter(|(i, _)| *i >= 20 && labels[*i] == label).map(|(_, p)| p).collect();
        let n = sel.len() as f64;
        [sel.iter().map(|p| p[0]).sum::<f64>() / n, sel.iter().map(|p| p[1]).sum::<f64>() / n]
    };
    let d = |a: [f64; 2], b: &[f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    for (t, expect) in [(0, 0), (1, 1)] {
        let c0 = centroid(&out[t], 0);
        let c1 = centroid(&out[t], 1);
        let near = out[t].points[..20].iter().filter(|p| (d(c1, p) < d(c0, p)) == (expect == 1)).count();
        assert!(near >= 18, "step {t}: {near}/20 in expected region");
    }
}

#[test]
fn disjoint_steps_rejected() {
    let (pts, _) = blobs(&[axis(0, 4, 1.0)], 40, 0.5, 6);
    let a: Vec<u64> = (0..40).collect();
    let b: Vec<u64> = (100..140).collect();
    assert!(aligned_embed(&[(a, pts.clone()), (b, pts)], &EmbedParams { n_neighbors: 5, ..fast() }).is_err());
}

#[test]
fn mic_invariant_under_monotone_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x: Vec<f64> = (0..1000).map(|_| rng.gen_range(0.0..1.0)).collect();
    let y: Vec<f64> = x.iter().map(|v| v * v + rng.gen_range(-0.05..0.05)).collect();
    let base = mic(&x, &y).unwrap().mic;
    let ex: Vec<f64> = x.iter().map(|v| (3.0 * v).exp()).collect();
    let ly: Vec<f64> = y.iter().map(|v| (v + 1.0).ln()).collect();
    for (a, b) in [(&ex, &y), (&x, &ly), (&ex, &ly)] {
        let m = mic(a, b).unwrap().mic;
        assert!((m - base).abs() <= 0.05, "{m} vs {base}");
    }
}

#[test]
fn planted_four_clusters_partition() {
    let centres: Vec<Vec<f64>> = (0..4).map(|c| axis(c, 8, 4.0)).collect();
    let (pts, labels) = blobs(&centres, 150, 0.4, 8);
    let params = KMeansParams { n_init: 10, max_epochs: 50, seed: 3, ..Default::default() };
    let ks: Vec<usize> = (2..=10).collect();
    let curve = inertia_curve(&standardize(&pts), &ks, &params).unwrap();
    let inert: Vec<(usize, f64)> = curve.iter().map(|(k, r)| (*k, r.inertia)).collect();
    assert!(inert.windows(2).all(|w| w[1].1 <= w[0].1));
    let e = elbow(&inert).unwrap();
    assert_eq!(e.k, 4);
    let chosen = &curve.iter().find(|(k, _)| *k == 4).unwrap().1;
    assert!(purity(&chosen.assignments, &labels) > 0.95);
}

fn session(st: f64, obj: usize) -> TelemetrySession {
    TelemetrySession::new(st / 10.0, st, 50.0, 3, obj).unwrap()
}

fn profile_data(seed: u64) -> (Dataset, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(20.0f64, 5.0).unwrap();
    let mut seqs = Vec::new();
    let mut groups = Vec::new();
    for i in 0..4000u64 {
        let obj = (i % 2) as usize;
        let planted = i < 40;
        let sessions: Vec<TelemetrySession> = (0..3)
            .map(|_| {
                let st = if planted { 30.0 } else { normal.sample(&mut rng).max(0.1) };
                session(if obj == 1 { st * 3.0 } else { st }, obj)
            })
            .collect();
        seqs.push(InteractionSequence::new(i, obj, sessions, None).unwrap());
        groups.push(usize::from(!planted));
    }
    (Dataset::new(vec!["a".into(), "b".into()], seqs).unwrap(), groups)
}

#[test]
fn planted_high_intensity_partition_sits_two_sd_up() {
    let (data, groups) = profile_data(1);
    let members: Vec<usize> = (0..data.len()).collect();
    let prof = partition_profiles(&data, &members, &groups).unwrap();
    for p in prof.iter().filter(|p| p.partition == 0 && p.metric == "session_time") {
        assert!((p.mean_z - 2.0).abs() < 0.15, "{p:?}");
    }
    for p in prof.iter().filter(|p| p.partition == 1 && p.metric == "session_time") {
        assert!(p.mean_z.abs() < 0.1, "{p:?}");
    }
}

#[test]
fn profiles_match_direct_recomputation() {
    let (data, groups) = profile_data(2);
    let members: Vec<usize> = (0..data.len()).step_by(3).collect();
    let assign: Vec<usize> = members.iter().map(|&i| groups[i] + 2 * (i % 2)).collect();
    let prof = partition_profiles(&data, &members, &assign).unwrap();
    // Independent two-pass moments per object over every session of every agent.
    let z_of = |obj: usize| {
        let vals: Vec<f64> = data
            .sequences
            .iter()
            .filter(|s| s.object_id == obj)
            .flat_map(|s| s.sessions.iter().map(|x| x.session_time))
            .collect();
        let mu = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd = (vals.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (vals.len() - 1) as f64).sqrt();
        move |v: f64| (v - mu) / sd
    };
    let (z0, z1) = (z_of(0), z_of(1));
    for p in prof.iter().filter(|p| p.metric == "session_time") {
        let zs: Vec<f64> = members
            .iter()
            .zip(&assign)
            .filter(|(_, &a)| a == p.partition)
            .map(|(&i, _)| {
                let s = &data.sequences[i];
                let v = s.sessions[p.timestep - 1].session_time;
                if s.object_id == 0 { z0(v) } else { z1(v) }
            })
            .collect();
        let n = zs.len() as f64;
        let m = zs.iter().sum::<f64>() / n;
        let hw = 1.96 * (zs.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt();
        assert_eq!(p.n, zs.len());
        assert!((p.mean_z - m).abs() < 1e-9 && (p.half_width - hw).abs() < 1e-9, "{p:?} vs {m} {hw}");
    }
}
