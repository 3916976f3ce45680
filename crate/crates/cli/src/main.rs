use clap::{Parser, Subcommand};
use salience::models::ModelKind;
use salience_cli::{error_kind, exit_code, run, Command, Config, Context, RunManifest};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "salience", version, about = "Simulate, model and analyse attributed incentive salience")]
struct Cli {
    /// TOML config with one section per stage.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory holding every artifact of the run.
    #[arg(long, global = true, default_value = "run")]
    workdir: PathBuf,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Simulate a population into dataset.csv.
    Simulate,
    /// Outlier filter and tuning/evaluation split.
    Prepare,
    /// Hyperband search for each network kind.
    Tune,
    /// Fit one network on the evaluation set.
    Train {
        #[arg(long, default_value = "rnn")]
        model: ModelKind,
    },
    /// K-fold evaluation of every configured model.
    Crossval,
    /// Rank models from the evaluation cells.
    Report,
    /// Per-step representations of a trained network.
    Encode {
        #[arg(long, default_value = "rnn")]
        model: ModelKind,
    },
    /// PCA, neighbour embedding and unit transducers.
    Embed {
        #[arg(long, default_value = "rnn")]
        model: ModelKind,
    },
    /// K-means partitions with elbow selection and behavioural profiles.
    Partition {
        #[arg(long, default_value = "rnn")]
        model: ModelKind,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cmd = match cli.command {
        Sub::Simulate => Command::Simulate,
        Sub::Prepare => Command::Prepare,
        Sub::Tune => Command::Tune,
        Sub::Train { model } => Command::Train { model },
        Sub::Crossval => Command::Crossval,
        Sub::Report => Command::Report,
        Sub::Encode { model } => Command::Encode { model },
        Sub::Embed { model } => Command::Embed { model },
        Sub::Partition { model } => Command::Partition { model },
    };
    let fail = |e: &salience::Error| {
        let msg = e.to_string().replace('\n', " ");
        eprintln!("error code={} kind={} message={msg:?}", exit_code(e), error_kind(e));
        ExitCode::from(exit_code(e) as u8)
    };
    let mut cfg = match Config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            return fail(&salience::Error::Config(e.to_string()));
        }
    }
    let seed = cfg.seed;
    let ctx = Context { cfg, workdir: cli.workdir };
    let start = Instant::now();
    match run(&cmd, &ctx) {
        Ok(art) => {
            let m = RunManifest {
                subcommand: cmd.name().into(),
                config_path: cli.config,
                seed,
                inputs: art.inputs,
                outputs: art.outputs,
                version: env!("CARGO_PKG_VERSION").into(),
                duration_secs: start.elapsed().as_secs_f64(),
            };
            if let Err(e) = m.append(&ctx.workdir) {
                return fail(&e.into());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
