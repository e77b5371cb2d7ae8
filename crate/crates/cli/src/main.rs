//! Command-line pipeline for entity-mention diffusion analysis.
//!
//! Every subcommand is a pipeline stage; `run` executes one stage or the
//! whole chain from a config file. Flags override config fields. Exit
//! codes: 0 success, 2 config error, 3 missing prerequisite, 4 data error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use entidiff::pipeline::{self, PipelineConfig, PipelineError, Stage};

#[derive(Parser)]
#[command(
    name = "entidiff",
    version,
    about = "Entity-mention diffusion analysis over threaded discussion corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Pipeline config file (TOML). Flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Store directory override.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Output directory override.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Seed override for all stochastic stages.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = automatic; env ENTIDIFF_PARALLELISM also applies).
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest newline-delimited post records into an indexed store.
    Ingest {
        #[command(flatten)]
        common: Common,
        /// Input record dump.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Subreddit filter list (one name per line).
        #[arg(long)]
        subreddits: Option<PathBuf>,
        /// Store directory to create.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sentence-split and tokenize every stored post.
    Tokenize {
        #[command(flatten)]
        common: Common,
        /// Store directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Induce word clusters from the tokens file.
    Clusters {
        #[command(flatten)]
        common: Common,
        /// Active set size.
        #[arg(long)]
        a: Option<usize>,
        /// Terminal cluster count.
        #[arg(long)]
        c: Option<usize>,
    },
    /// Train the entity chunker on a column-format corpus.
    TrainNer {
        #[command(flatten)]
        common: Common,
        /// Training corpus (token + BIO tag columns).
        #[arg(long)]
        train: Option<PathBuf>,
        /// Training-mixture manifest (path<TAB>token_budget lines).
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// L2 penalty strength.
        #[arg(long)]
        c2: Option<f64>,
    },
    /// Extract entity mentions from every stored post.
    Annotate {
        #[command(flatten)]
        common: Common,
    },
    /// Derive entity cascades and their shape distribution.
    Cascades {
        #[command(flatten)]
        common: Common,
        /// Shapes to render in the figure file.
        #[arg(long)]
        top: Option<usize>,
    },
    /// Exposure-adoption distributions for the top entities.
    Exposure {
        #[command(flatten)]
        common: Common,
    },
    /// Split entities and estimate influence statistics on the train half.
    DiffusionTrain {
        #[command(flatten)]
        common: Common,
        /// Top-N entities to rank and split.
        #[arg(long)]
        top_n: Option<usize>,
        /// Train fraction of the split.
        #[arg(long)]
        train_fraction: Option<f64>,
    },
    /// Replay test entities under the configured constructs and variants.
    DiffusionEval {
        #[command(flatten)]
        common: Common,
        /// Restrict to one construct: E, I, or C.
        #[arg(long)]
        construct: Option<String>,
        /// Restrict to one variant: static or discrete.
        #[arg(long)]
        variant: Option<String>,
    },
    /// Score every tuple file into the report grid.
    Report {
        #[command(flatten)]
        common: Common,
        /// Glob over tuple files; defaults to the configured pairs.
        #[arg(long)]
        tuples: Option<String>,
    },
    /// Generate a synthetic corpus with planted ground truth.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        entities: Option<usize>,
    },
    /// Run one stage or the whole pipeline from a config file.
    Run {
        #[command(flatten)]
        common: Common,
        /// Stage name or "all".
        #[arg(long, default_value = "all")]
        stage: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(common: &Common) -> Result<PipelineConfig, PipelineError> {
    let mut config = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => {
            let mut c = PipelineConfig::default();
            let cwd = std::env::current_dir().map_err(PipelineError::from_io)?;
            c.resolve_paths(&cwd);
            c
        }
    };
    if let Some(store) = &common.store {
        config.paths.store_dir = store.clone();
    }
    if let Some(out) = &common.out_dir {
        config.paths.out_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        config.run.seed = seed;
        config.diffusion.seed = seed;
        if let Some(synth) = config.synth.as_mut() {
            synth.seed = seed;
        }
    }
    if let Some(par) = common.parallelism {
        config.run.parallelism = par;
    } else if config.run.parallelism == 0 {
        if let Ok(env_par) = std::env::var("ENTIDIFF_PARALLELISM") {
            if let Ok(n) = env_par.parse::<usize>() {
                config.run.parallelism = n;
            }
        }
    }
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Ingest { common, input, subreddits, out } => {
            let mut config = load_config(&common)?;
            if let Some(input) = input {
                config.paths.input = Some(input);
                config.synth = None;
            }
            if let Some(subs) = subreddits {
                config.paths.subreddits = Some(subs);
            }
            if let Some(out) = out {
                config.paths.store_dir = out;
            }
            pipeline::run(&config, Some(Stage::Ingest)).map(drop)
        }
        Command::Tokenize { common, input } => {
            let mut config = load_config(&common)?;
            if let Some(store) = input {
                config.paths.store_dir = store;
            }
            pipeline::run(&config, Some(Stage::Tokenize)).map(drop)
        }
        Command::Clusters { common, a, c } => {
            let mut config = load_config(&common)?;
            if let Some(a) = a {
                config.cluster.active_set = a;
            }
            if let Some(c) = c {
                config.cluster.classes = c;
            }
            pipeline::run(&config, Some(Stage::Clusters)).map(drop)
        }
        Command::TrainNer { common, train, manifest, c2 } => {
            let mut config = load_config(&common)?;
            if let Some(train) = train {
                config.paths.train_conll = Some(train);
            }
            if let Some(manifest) = manifest {
                config.ner.manifest = Some(manifest);
            }
            if let Some(c2) = c2 {
                config.ner.c2 = c2;
            }
            pipeline::run(&config, Some(Stage::TrainNer)).map(drop)
        }
        Command::Annotate { common } => {
            let config = load_config(&common)?;
            pipeline::run(&config, Some(Stage::Annotate)).map(drop)
        }
        Command::Cascades { common, top } => {
            let mut config = load_config(&common)?;
            if let Some(top) = top {
                config.cascades.top_shapes = top;
            }
            pipeline::run(&config, Some(Stage::Cascades)).map(drop)
        }
        Command::Exposure { common } => {
            let config = load_config(&common)?;
            pipeline::run(&config, Some(Stage::Exposure)).map(drop)
        }
        Command::DiffusionTrain { common, top_n, train_fraction } => {
            let mut config = load_config(&common)?;
            if let Some(n) = top_n {
                config.diffusion.top_n = n;
            }
            if let Some(f) = train_fraction {
                config.diffusion.train_fraction = f;
            }
            pipeline::run(&config, Some(Stage::DiffusionTrain)).map(drop)
        }
        Command::DiffusionEval { common, construct, variant } => {
            let mut config = load_config(&common)?;
            if let Some(c) = construct {
                config.diffusion.constructs = vec![c];
            }
            if let Some(v) = variant {
                config.diffusion.variants = vec![v];
            }
            pipeline::run(&config, Some(Stage::DiffusionEval)).map(drop)
        }
        Command::Report { common, tuples } => {
            let config = load_config(&common)?;
            match tuples {
                None => pipeline::run(&config, Some(Stage::Report)).map(drop),
                Some(pattern) => {
                    let files: Vec<PathBuf> = glob::glob(&pattern)
                        .map_err(|e| PipelineError::Config(format!("bad glob {pattern:?}: {e}")))?
                        .filter_map(Result::ok)
                        .collect();
                    pipeline::report_from_files(&config, &files).map(drop)
                }
            }
        }
        Command::Synth { common, users, entities } => {
            let mut config = load_config(&common)?;
            let mut synth = config.synth.clone().unwrap_or_default();
            if let Some(u) = users {
                synth.users = u;
            }
            if let Some(e) = entities {
                synth.entities = e;
            }
            config.synth = Some(synth);
            config.paths.input = None;
            pipeline::run(&config, Some(Stage::Synth)).map(drop)
        }
        Command::Run { common, stage } => {
            let config = load_config(&common)?;
            let stage = Stage::parse(&stage)?;
            pipeline::run(&config, stage).map(drop)
        }
    }
}
