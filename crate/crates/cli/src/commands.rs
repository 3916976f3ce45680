use crate::config::Config;
use crate::reps::{load_reps, save_reps, step_representations, StepReps};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use salience::analysis::{self, aligned_embed, partition, svg, unit_transducer, Pca};
use salience::data::io::{load_sequences, save_sequences};
use salience::data::{percentile_filter, Dataset};
use salience::models::{load_bundle, save_bundle, Model, ModelKind, ModelSpec};
use salience::training::{
    compare_models, cross_validate_models, derive_seed, fit, read_cells, split, tune, write_cells, TrainConfig,
    TuneResult,
};
use salience::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

pub const DATASET: &str = "dataset.csv";
pub const TUNING: &str = "tuning.csv";
pub const EVALUATION: &str = "evaluation.csv";
pub const TUNED: &str = "tuned.json";
pub const CELLS: &str = "cells.csv";
pub const RANKING: &str = "ranking.json";

/// Stream tags for [`derive_seed`], one per stage.
mod tag {
    pub const SIMULATE: u64 = 1;
    pub const PREPARE: u64 = 2;
    pub const TUNE: u64 = 3;
    pub const TRAIN: u64 = 4;
    pub const CROSSVAL: u64 = 5;
    pub const EMBED: u64 = 6;
    pub const PARTITION: u64 = 7;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Simulate,
    Prepare,
    Tune,
    Train { model: ModelKind },
    Crossval,
    Report,
    Encode { model: ModelKind },
    Embed { model: ModelKind },
    Partition { model: ModelKind },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Prepare => "prepare",
            Command::Tune => "tune",
            Command::Train { .. } => "train",
            Command::Crossval => "crossval",
            Command::Report => "report",
            Command::Encode { .. } => "encode",
            Command::Embed { .. } => "embed",
            Command::Partition { .. } => "partition",
        }
    }
}

pub struct Context {
    pub cfg: Config,
    pub workdir: PathBuf,
}

/// Files read and written by one run.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.workdir.join(name)
    }

    fn seed(&self, tag: u64) -> u64 {
        derive_seed(self.cfg.seed, tag)
    }

    fn train_cfg(&self, tag: u64) -> TrainConfig {
        TrainConfig { seed: self.seed(tag), ..self.cfg.train.clone() }
    }

    fn read_data(&self, name: &str, art: &mut Artifacts) -> Result<Dataset> {
        let p = self.path(name);
        if !p.exists() {
            return Err(Error::Data(format!("{} not found; run the preceding stage first", p.display())));
        }
        art.inputs.push(p.clone());
        load_sequences(&p)
    }

    /// Tuned spec when available, otherwise the default one.
    fn spec_for(&self, kind: ModelKind, art: &mut Artifacts) -> Result<ModelSpec> {
        let p = self.path(TUNED);
        if p.exists() {
            let tuned: BTreeMap<String, TuneResult> = serde_json::from_str(&std::fs::read_to_string(&p)?)?;
            if let Some(t) = tuned.get(kind.name()) {
                if !art.inputs.contains(&p) {
                    art.inputs.push(p);
                }
                return Ok(t.spec.clone());
            }
        }
        if kind.is_neural() {
            log::warn!("no tuned spec for {kind}; using defaults");
        }
        Ok(ModelSpec::new(kind))
    }
}

fn model_dir(kind: ModelKind) -> String {
    format!("models/{}", kind.name())
}

fn require_encoder(kind: ModelKind) -> Result<()> {
    if kind.has_encoder() {
        Ok(())
    } else {
        Err(Error::Config(format!("{kind} has no representation layer")))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn run(cmd: &Command, ctx: &Context) -> Result<Artifacts> {
    std::fs::create_dir_all(&ctx.workdir)?;
    match cmd {
        Command::Simulate => simulate(ctx),
        Command::Prepare => prepare(ctx),
        Command::Tune => tune_models(ctx),
        Command::Train { model } => train(ctx, *model),
        Command::Crossval => crossval(ctx),
        Command::Report => report(ctx),
        Command::Encode { model } => encode(ctx, *model),
        Command::Embed { model } => embed(ctx, *model),
        Command::Partition { model } => partition_cmd(ctx, *model),
    }
}

fn simulate(ctx: &Context) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    let sim = salience::simulator::SimulationConfig { seed: ctx.seed(tag::SIMULATE), ..ctx.cfg.simulate.clone() };
    let data = sim.simulate()?;
    let out = ctx.path(DATASET);
    save_sequences(&data, &out)?;
    log::info!("simulated {} sequences over {} objects", data.len(), data.objects.len());
    art.outputs.push(out);
    Ok(art)
}

fn prepare(ctx: &Context) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    let data = ctx.read_data(DATASET, &mut art)?;
    let kept = percentile_filter(&data, ctx.cfg.prepare.filter_percentile);
    log::info!("filter kept {} of {} sequences", kept.len(), data.len());
    let (tuning, evaluation) = split(&kept, ctx.cfg.prepare.tuning_fraction, ctx.seed(tag::PREPARE))?;
    for (name, d) in [(TUNING, &tuning), (EVALUATION, &evaluation)] {
        let p = ctx.path(name);
        save_sequences(d, &p)?;
        art.outputs.push(p);
    }
    Ok(art)
}

fn tune_models(ctx: &Context) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    let data = ctx.read_data(TUNING, &mut art)?;
    let t = &ctx.cfg.tune;
    let cfg = ctx.train_cfg(tag::TUNE);
    let mut out: BTreeMap<String, TuneResult> = BTreeMap::new();
    for &kind in &t.models {
        if !kind.is_neural() {
            log::info!("{kind} has no hyperparameters; skipped");
            continue;
        }
        let r = tune(kind, &data, &t.space, t.budget, t.eta, &cfg)?;
        log::info!("{kind}: holdout {:.4} with {:?}", r.holdout_loss, r.spec);
        out.insert(kind.name().to_string(), r);
    }
    let p = ctx.path(TUNED);
    std::fs::write(&p, serde_json::to_string_pretty(&out)?)?;
    art.outputs.push(p);
    Ok(art)
}

fn train(ctx: &Context, kind: ModelKind) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    if !kind.is_neural() {
        return Err(Error::Config(format!("{kind} is fitted inside crossval; nothing to train")));
    }
    let data = ctx.read_data(EVALUATION, &mut art)?;
    let spec = ctx.spec_for(kind, &mut art)?;
    let outcome = fit(&spec, &data, &ctx.train_cfg(tag::TRAIN))?;
    let Model::Net(net) = &outcome.model else {
        return Err(Error::Config(format!("{kind} did not produce a network")));
    };
    let dir = ctx.path(&model_dir(kind));
    save_bundle(&dir, net, &data.objects)?;
    let hist = dir.join("history.csv");
    let mut w = csv::Writer::from_writer(create(&hist)?);
    for e in &outcome.history {
        w.serialize(e)?;
    }
    w.flush()?;
    log::info!("{kind}: best holdout {:.4} at epoch {}", outcome.best_holdout, outcome.best_epoch);
    art.outputs.extend([dir, hist]);
    Ok(art)
}

fn crossval(ctx: &Context) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    let data = ctx.read_data(EVALUATION, &mut art)?;
    let specs = ctx.cfg.crossval.models.iter().map(|&k| ctx.spec_for(k, &mut art)).collect::<Result<Vec<_>>>()?;
    let cells = cross_validate_models(&specs, &data, ctx.cfg.crossval.folds, &ctx.train_cfg(tag::CROSSVAL))?;
    let p = ctx.path(CELLS);
    write_cells(&cells, create(&p)?)?;
    art.outputs.push(p);
    Ok(art)
}

/// Models in the order the recurrent hypothesis predicts.
pub const EXPECTED_ORDER: [ModelKind; 5] =
    [ModelKind::Rnn, ModelKind::Mlp, ModelKind::ElasticNet, ModelKind::Median, ModelKind::Lag1];

fn report(ctx: &Context) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    let p = ctx.path(CELLS);
    if !p.exists() {
        return Err(Error::Data(format!("{} not found; run crossval first", p.display())));
    }
    let cells = read_cells(File::open(&p)?)?;
    art.inputs.push(p);
    let present: Vec<ModelKind> = EXPECTED_ORDER.iter().copied().filter(|k| cells.iter().any(|c| c.model == *k)).collect();
    let rep = compare_models(&cells, Some(&present))?;
    println!("{:<12} {:>12}  per-fold", "model", "global");
    for s in &rep.ranking {
        let folds: Vec<String> = s.per_fold.iter().map(|v| format!("{v:.2}")).collect();
        println!("{:<12} {:>12.4}  {}", s.model.name(), s.mean_global, folds.join(" "));
    }
    let out = ctx.path(RANKING);
    std::fs::write(&out, serde_json::to_string_pretty(&rep)?)?;
    art.outputs.push(out);
    Ok(art)
}

#[derive(Debug, Serialize, Deserialize)]
struct RepsMeta {
    model: ModelKind,
    objects: Vec<String>,
    target: String,
    gamma: f64,
}

fn reps_paths(ctx: &Context, kind: ModelKind) -> (PathBuf, PathBuf) {
    (ctx.path(&format!("representations_{}.bin", kind.name())), ctx.path(&format!("representations_{}.json", kind.name())))
}

fn encode(ctx: &Context, kind: ModelKind) -> Result<Artifacts> {
    require_encoder(kind)?;
    let mut art = Artifacts::default();
    let dir = ctx.path(&model_dir(kind));
    if !dir.exists() {
        return Err(Error::Data(format!("{} not found; run `train --model {kind}` first", dir.display())));
    }
    let (net, objects) = load_bundle(&dir)?;
    art.inputs.push(dir);
    let data = ctx.read_data(EVALUATION, &mut art)?.with_vocabulary(&objects)?;
    let enc = net.encoder()?;
    let steps = step_representations(&net, &enc, &data, &ctx.cfg.encode.target, ctx.cfg.encode.gamma)?;
    let (bin, meta) = reps_paths(ctx, kind);
    save_reps(&bin, &steps)?;
    let m = RepsMeta { model: kind, objects, target: ctx.cfg.encode.target.clone(), gamma: ctx.cfg.encode.gamma };
    std::fs::write(&meta, serde_json::to_string_pretty(&m)?)?;
    art.outputs.extend([bin, meta]);
    Ok(art)
}

fn read_reps(ctx: &Context, kind: ModelKind, art: &mut Artifacts) -> Result<(Vec<StepReps>, RepsMeta)> {
    require_encoder(kind)?;
    let (bin, meta) = reps_paths(ctx, kind);
    if !bin.exists() {
        return Err(Error::Data(format!("{} not found; run `encode --model {kind}` first", bin.display())));
    }
    let steps = load_reps(&bin)?;
    let m: RepsMeta = serde_json::from_str(&std::fs::read_to_string(&meta)?)?;
    art.inputs.extend([bin, meta]);
    Ok((steps, m))
}

fn embed(ctx: &Context, kind: ModelKind) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    let (steps, _) = read_reps(ctx, kind, &mut art)?;
    let e = &ctx.cfg.embed;
    let steps = &steps[..e.steps.min(steps.len())];
    let h = steps[0].reps[0].len();
    let name = kind.name();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed(tag::EMBED));

    let pca_rows: Vec<(usize, Vec<f64>)> = steps
        .iter()
        .map(|s| {
            let c = e.pca_components.min(h).min(s.reps.len());
            Ok((s.step, Pca::fit(&s.reps, c)?.cumulative_explained()))
        })
        .collect::<Result<_>>()?;
    let p = ctx.path(&format!("pca_{name}.csv"));
    analysis::io::write_pca(&pca_rows, create(&p)?)?;
    art.outputs.push(p);

    let mut units = sample(&mut rng, h, e.transducer_units.min(h)).into_vec();
    units.sort_unstable();
    let jobs: Vec<(usize, usize)> = steps.iter().enumerate().flat_map(|(si, _)| units.iter().map(move |&u| (si, u))).collect();
    let curves = jobs
        .par_iter()
        .map(|&(si, u)| {
            let s = &steps[si];
            let act: Vec<f64> = s.reps.iter().map(|r| r[u]).collect();
            Ok((s.step, u, unit_transducer(&act, &s.discounted, e.n_bins)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let p = ctx.path(&format!("transducers_{name}.csv"));
    analysis::io::write_transducers(&curves, create(&p)?)?;
    art.outputs.push(p);

    // One agent sample shared by every step, keyed by dataset index.
    let first = &steps[0];
    let chosen: std::collections::BTreeSet<usize> = sample(&mut rng, first.indices.len(), e.max_points.min(first.indices.len()))
        .into_iter()
        .map(|i| first.indices[i])
        .collect();
    let mut inputs = Vec::new();
    let mut lookups = Vec::new();
    for s in steps {
        let rows: Vec<usize> = (0..s.indices.len()).filter(|&i| chosen.contains(&s.indices[i])).collect();
        inputs.push((rows.iter().map(|&i| s.indices[i] as u64).collect::<Vec<_>>(), rows.iter().map(|&i| s.reps[i].clone()).collect::<Vec<_>>()));
        lookups.push(rows);
    }
    let mut results = aligned_embed(&inputs, &e.params(ctx.seed(tag::EMBED + 100)))?;
    for ((r, s), rows) in results.iter_mut().zip(steps).zip(&lookups) {
        r.step = s.step;
        let labels: Vec<usize> = rows.iter().map(|&i| s.objects[i]).collect();
        let p = ctx.path(&format!("embedding_{name}_t{}.svg", s.step));
        std::fs::write(&p, svg::scatter(&r.points, &labels))?;
        art.outputs.push(p);
    }
    let p = ctx.path(&format!("trajectories_{name}.svg"));
    std::fs::write(&p, svg::trajectories(&results, e.trajectories))?;
    art.outputs.push(p);
    for (r, (s, rows)) in results.iter_mut().zip(steps.iter().zip(&lookups)) {
        r.agent_ids = rows.iter().map(|&i| s.agent_ids[i]).collect();
    }
    let p = ctx.path(&format!("embedding_{name}.csv"));
    analysis::io::write_embeddings(&results, create(&p)?)?;
    art.outputs.push(p);
    Ok(art)
}

fn partition_cmd(ctx: &Context, kind: ModelKind) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    let (steps, meta) = read_reps(ctx, kind, &mut art)?;
    let pc = &ctx.cfg.partition;
    let s = steps
        .get(pc.step - 1)
        .ok_or_else(|| Error::Config(format!("partition.step {} exceeds the {} encoded steps", pc.step, steps.len())))?;
    let data = ctx.read_data(EVALUATION, &mut art)?.with_vocabulary(&meta.objects)?;
    let object = match &pc.object {
        None => None,
        Some(o) => Some(meta.objects.iter().position(|x| x == o).ok_or_else(|| Error::Config(format!("unknown object {o:?}")))?),
    };
    let rows: Vec<usize> = (0..s.indices.len()).filter(|&i| object.map_or(true, |o| s.objects[i] == o)).collect();
    let members: Vec<usize> = rows.iter().map(|&i| s.indices[i]).collect();
    let points: Vec<Vec<f64>> = if pc.pooled {
        let mut sums: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for st in &steps[..pc.step] {
            for (i, r) in st.indices.iter().zip(&st.reps) {
                if let Some(acc) = sums.get_mut(i) {
                    acc.iter_mut().zip(r).for_each(|(a, b)| *a += b);
                } else {
                    sums.insert(*i, r.clone());
                }
            }
        }
        members.iter().map(|i| sums[i].iter().map(|v| v / pc.step as f64).collect()).collect()
    } else {
        rows.iter().map(|&i| s.reps[i].clone()).collect()
    };
    let ks: Vec<usize> = (pc.k_min..=pc.k_max).filter(|&k| k <= points.len()).collect();
    let report = partition(&data, &members, &points, &ks, &pc.params(ctx.seed(tag::PARTITION)))?;
    log::info!("elbow at k = {}{}", report.elbow_k, if report.no_knee { " (no knee)" } else { "" });
    let name = kind.name();
    let p = ctx.path(&format!("inertia_{name}.csv"));
    analysis::io::write_inertia_curve(&report.inertia_curve, create(&p)?)?;
    art.outputs.push(p);
    let p = ctx.path(&format!("partitions_{name}.csv"));
    analysis::io::write_assignments(&report, create(&p)?)?;
    art.outputs.push(p);
    let p = ctx.path(&format!("profiles_{name}.csv"));
    analysis::io::write_profiles(&report, create(&p)?)?;
    art.outputs.push(p);
    Ok(art)
}
