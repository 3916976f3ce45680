use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use salience::data::{InteractionSequence, ScalingStats, TelemetrySession};
use salience::models::{
    load_bundle, load_encoder, save_bundle, save_encoder, ModelKind, ModelSpec, Network, SeqBatch,
};
use salience::numerics::{gradient_check, Differentiable, Param};
use salience::Result;

fn stats() -> ScalingStats {
    ScalingStats::new([0.0, 1.0, 0.0, 0.0, 1.0], [200.0, 300.0, 100.0, 80.0, 19.0]).unwrap()
}

fn random_seq(rng: &mut ChaCha8Rng, id: u64, object: usize, t: usize) -> InteractionSequence {
    let sessions = (0..t)
        .map(|_| {
            TelemetrySession::new(
                rng.gen_range(0.0..200.0),
                rng.gen_range(1.0..300.0),
                rng.gen_range(0.0..100.0),
                rng.gen_range(0..80),
                object,
            )
            .unwrap()
        })
        .collect();
    InteractionSequence::new(id, object, sessions, None).unwrap()
}

fn batch(seed: u64, b: usize, t: usize) -> (Vec<InteractionSequence>, SeqBatch) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seqs: Vec<_> = (0..b).map(|i| random_seq(&mut rng, i as u64, i % 3, t)).collect();
    let batch = SeqBatch::new(&seqs, &stats()).unwrap();
    (seqs, batch)
}

fn spec(kind: ModelKind, layers: usize, units: usize) -> ModelSpec {
    ModelSpec {
        layers,
        units,
        emb_dim: 3,
        l1: 0.01,
        l2: 0.02,
        seed: 9,
        ..ModelSpec::new(kind)
    }
}

struct Case {
    net: Network,
    batch: SeqBatch,
}

impl Differentiable for Case {
    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.net.params_mut()
    }
    fn loss(&mut self) -> Result<f64> {
        self.net.loss(&self.batch)
    }
    fn loss_and_grad(&mut self) -> Result<f64> {
        self.net.loss_and_grad(&self.batch)
    }
}

#[test]
fn full_stack_gradients_match_finite_differences() {
    for kind in [ModelKind::ElasticNet, ModelKind::Mlp, ModelKind::Rnn] {
        let (_, b) = batch(1, 3, 5);
        let mut case = Case {
            net: Network::new(&spec(kind, 2, 4), 3, stats()).unwrap(),
            batch: b,
        };
        let rep = gradient_check(&mut case, 1e-5).unwrap();
        assert!(rep.max_rel_error < 1e-4, "{kind}: {rep:?}");
    }
}

#[test]
fn parameter_counts_match_closed_form() {
    for kind in [ModelKind::ElasticNet, ModelKind::Mlp, ModelKind::Rnn] {
        for (l, u) in [(1, 8), (3, 5)] {
            let s = spec(kind, l, u);
            let net = Network::new(&s, 6, stats()).unwrap();
            assert_eq!(net.num_params(), Network::param_count(&s, 6), "{kind} {l} {u}");
        }
    }
}

#[test]
fn output_shapes() {
    let (_, b) = batch(2, 4, 6);
    for kind in [ModelKind::Mlp, ModelKind::Rnn] {
        let net = Network::new(&spec(kind, 2, 7), 3, stats()).unwrap();
        let out = net.infer(&b).unwrap();
        assert_eq!(out.pred.shape(), &[4, 5, 5]);
        assert_eq!(out.repr.unwrap().shape(), &[4, 5, 7]);
        assert!(out.pred.data().chunks(5).all(|r| r[4] >= 0.0));
    }
    let enet = Network::new(&spec(ModelKind::ElasticNet, 1, 1), 3, stats()).unwrap();
    assert!(enet.infer(&b).unwrap().repr.is_none());
    assert!(enet.encoder().is_err());
}

#[test]
fn rnn_representation_is_causal() {
    let net = Network::new(&spec(ModelKind::Rnn, 2, 6), 3, stats()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (orig, b) = batch(3, 2, 7);
    let base = net.infer(&b).unwrap().repr.unwrap();
    for t_change in 1..6 {
        let mut seqs = orig.clone();
        for s in &mut seqs {
            s.sessions[t_change].session_time = rng.gen_range(1.0..300.0);
            s.sessions[t_change].absence = rng.gen_range(0.0..200.0);
        }
        let r = net.infer(&SeqBatch::new(&seqs, &stats()).unwrap()).unwrap().repr.unwrap();
        for bi in 0..2 {
            for t in 0..t_change {
                let i = (bi * 6 + t) * 6;
                assert_eq!(&r.data()[i..i + 6], &base.data()[i..i + 6], "t={t} changed by {t_change}");
            }
        }
    }
}

#[test]
fn mlp_is_temporally_local() {
    let net = Network::new(&spec(ModelKind::Mlp, 2, 6), 3, stats()).unwrap();
    let (seqs, b) = batch(4, 1, 6);
    let out = net.infer(&b).unwrap().pred;
    let mut rev = seqs[0].clone();
    rev.sessions[..5].reverse();
    let out_rev = net.infer(&SeqBatch::new([&rev], &stats()).unwrap()).unwrap().pred;
    for t in 0..5 {
        assert_eq!(out.row(t), out_rev.row(4 - t));
    }
    let mut same = seqs[0].clone();
    same.sessions[3] = same.sessions[1].clone();
    let o = net.infer(&SeqBatch::new([&same], &stats()).unwrap()).unwrap().pred;
    assert_eq!(o.row(1), o.row(3));
}

#[test]
fn duplicating_the_batch_duplicates_outputs() {
    let net = Network::new(&spec(ModelKind::Rnn, 1, 5), 3, stats()).unwrap();
    let (seqs, b) = batch(5, 3, 4);
    let once = net.infer(&b).unwrap().pred;
    let twice = seqs.iter().chain(&seqs);
    let out = net.infer(&SeqBatch::new(twice, &stats()).unwrap()).unwrap().pred;
    let n = once.len();
    assert_eq!(&out.data()[..n], once.data());
    assert_eq!(&out.data()[n..], once.data());
}

#[test]
fn unknown_object_rejected() {
    let net = Network::new(&spec(ModelKind::Rnn, 1, 5), 2, stats()).unwrap();
    let (_, b) = batch(6, 3, 4);
    assert!(net.infer(&b).is_err());
}

#[test]
fn encoder_matches_full_forward_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let objects: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    for kind in [ModelKind::Mlp, ModelKind::Rnn] {
        let net = Network::new(&spec(kind, 2, 6), 3, stats()).unwrap();
        let enc = net.encoder().unwrap();
        assert!(enc.num_params() < net.num_params());
        let edir = dir.path().join(format!("{kind}-enc"));
        save_encoder(&edir, &enc, &objects).unwrap();
        let (back, objs) = load_encoder(&edir).unwrap();
        assert_eq!(objs, objects);
        let mdir = dir.path().join(kind.name());
        save_bundle(&mdir, &net, &objects).unwrap();
        let (net2, _) = load_bundle(&mdir).unwrap();
        assert!(load_bundle(&edir).is_err());
        for seed in 0..100 {
            let (_, b) = batch(100 + seed, 1 + (seed as usize % 4), 2 + (seed as usize % 5));
            let full = net.infer(&b).unwrap();
            let r = full.repr.unwrap();
            assert_eq!(enc.infer(&b).unwrap(), r);
            let rb = back.infer(&b).unwrap();
            assert!(rb.data().iter().zip(r.data()).all(|(x, y)| (x - y).abs() <= 1e-12));
            assert_eq!(net2.infer(&b).unwrap().pred, full.pred);
        }
    }
}

#[test]
fn elastic_net_penalty_definition() {
    let mut s = spec(ModelKind::ElasticNet, 1, 1);
    s.l1 = 0.0;
    s.l2 = 0.0;
    let net = Network::new(&s, 3, stats()).unwrap();
    assert_eq!(net.penalty(), 0.0);
    let (_, b) = batch(7, 2, 3);
    let pure = net.loss(&b).unwrap();
    s.l1 = 1.0;
    let mut net1 = Network::new(&s, 3, stats()).unwrap();
    for p in net1.params_mut() {
        if p.name == "head.w" {
            p.value.fill(0.0);
            p.value.data_mut()[0] = 1.0;
            p.value.data_mut()[1] = -2.0;
        }
    }
    assert_eq!(net1.penalty(), 3.0);
    assert!(pure.is_finite());
}
