use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use publicself_core::belief::KnowledgeBelief;
use publicself_core::{
    build, canonical_suite, read_episode, run_trace_with, write_episode, Archetype, FilterKind, FruitCounts,
    GridSpec, Intention, ModelConfig, Planner,
};
use publicself_service::{CorrelationMode, CorrelationQuery, StudyState};

#[derive(Parser)]
#[command(name = "publicself", version, about = "Attributed-intention simulator, filters and study server")]
struct Cli {
    /// Model config (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the canonical suite seed.
    #[arg(long, global = true)]
    suite_seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the canonical six-episode suite as JSONL files.
    Suite {
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate one episode.
    Simulate {
        #[arg(long)]
        archetype: String,
        #[arg(long, value_enum)]
        intention: IntentionArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a filter over an episode file and print or write the trace.
    Trace {
        episode: PathBuf,
        #[arg(long, value_enum, default_value_t = FilterArg::Publicself)]
        filter: FilterArg,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate an episode file against the dynamics and summarize it.
    Replay { episode: PathBuf },
    /// Count fruit placements consistent with an empty belief.
    CountWorlds {
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long)]
        apples: Option<usize>,
        #[arg(long)]
        pears: Option<usize>,
    },
    /// Correlate collected human judgments with the model, offline.
    Analyze {
        #[arg(long)]
        data_dir: PathBuf,
        /// simple, blind, misleading, or all
        #[arg(long)]
        archetype: Option<String>,
    },
    /// Run the study HTTP service.
    Serve {
        #[arg(long)]
        data_dir: PathBuf,
        /// 0 picks a free port; the bound address is printed on stdout.
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum IntentionArg {
    Apple,
    Pear,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    Publicself,
    Btom,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn load_config(cli: &Cli) -> Result<ModelConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ModelConfig::load(p)?,
        None => ModelConfig::default(),
    };
    if let Some(seed) = cli.suite_seed {
        cfg.scenario.suite_seed = seed;
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Suite { out } => {
            fs::create_dir_all(&out)?;
            for rec in canonical_suite(&cfg)? {
                let path = out.join(format!("{}.jsonl", rec.meta.episode_id));
                write_episode(&rec, &path)?;
                println!("{} {} frames", path.display(), rec.frame_count());
            }
        }
        Command::Simulate {
            archetype,
            intention,
            seed,
            out,
        } => {
            let Some(arch) = Archetype::parse(&archetype) else {
                bail!("unknown archetype {archetype}");
            };
            let intention = match intention {
                IntentionArg::Apple => Intention::GetApple,
                IntentionArg::Pear => Intention::GetPear,
            };
            let rec = build(arch, intention, seed, &cfg)?;
            write_episode(&rec, &out)?;
            println!("{} {} frames", out.display(), rec.frame_count());
        }
        Command::Trace {
            episode,
            filter,
            format,
            out,
        } => {
            let rec = read_episode(&episode)?;
            let kind = match filter {
                FilterArg::Publicself => FilterKind::PublicSelf,
                FilterArg::Btom => FilterKind::Btom,
            };
            let planner = Planner::new(cfg.grid, cfg.policy);
            let trace = run_trace_with(&rec, &cfg, &planner, kind)?;
            let text = match format {
                Format::Csv => trace.to_csv(),
                Format::Json => trace.to_json(),
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Replay { episode } => {
            let rec = read_episode(&episode)?;
            let visible = rec.frames.iter().filter(|f| f.visible).count();
            println!(
                "{}: {} frames, {} visible, outcome {:?}",
                rec.meta.episode_id,
                rec.frame_count(),
                visible,
                rec.meta.outcome
            );
        }
        Command::CountWorlds {
            rows,
            cols,
            apples,
            pears,
        } => {
            let grid = GridSpec::new(rows.unwrap_or(cfg.grid.rows), cols.unwrap_or(cfg.grid.cols))?;
            let counts = FruitCounts {
                apples: apples.unwrap_or(cfg.fruits.apples),
                pears: pears.unwrap_or(cfg.fruits.pears),
            };
            println!("{}", KnowledgeBelief::with_totals(grid, counts)?.count_worlds());
        }
        Command::Analyze { data_dir, archetype } => {
            let state = StudyState::open(&data_dir, cfg)?;
            let report = state.correlation(CorrelationQuery {
                archetype,
                mode: Some(CorrelationMode::Both),
            })?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Serve { data_dir, port, host } => {
            let state = StudyState::open(&data_dir, cfg)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(publicself_service::serve(state, SocketAddr::new(host, port), |addr| {
                println!("listening on http://{addr}");
                let _ = std::io::stdout().flush();
            }))?;
        }
    }
    Ok(())
}
