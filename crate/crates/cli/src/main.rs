use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use transimpact::embed::EmbedMode;
use transimpact::pipeline::{self, ExperimentProfile, Overrides, PipelineError, RunContext};
use transimpact::{LabelKind, Tier};

#[derive(Parser)]
#[command(name = "transimpact", version, about = "Predict patent and clinical-trial citations of publications")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment profile (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    profile: Option<PathBuf>,
    /// Overrides the profile seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    tier: Option<TierArg>,
    #[arg(long, global = true, value_enum)]
    label: Option<LabelArg>,
    /// Run directory [default: runs/<profile name>].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    embed_mode: Option<EmbedModeArg>,
    /// Abort on the first malformed corpus line instead of skipping it.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate the planted-signal corpus.
    Synth,
    /// Load, filter, label, downsample and split the corpus.
    Ingest,
    /// Build per-tier feature matrices.
    Featurize,
    /// Train one model per tier.
    Train,
    /// Score the test partition.
    Eval,
    /// Per-year audit of one trained tier.
    Temporal,
    /// Render curve overlays and print metric tables.
    Report,
    /// All stages in order.
    Run,
}

#[derive(ValueEnum, Clone, Copy)]
enum TierArg {
    M1,
    M2,
    M3,
    All,
}

#[derive(ValueEnum, Clone, Copy)]
enum LabelArg {
    Patents,
    Trials,
}

#[derive(ValueEnum, Clone, Copy)]
enum EmbedModeArg {
    Local,
    Remote,
}

fn overrides(cli: &Cli) -> Overrides {
    Overrides {
        seed: cli.seed,
        tiers: cli.tier.map(|t| match t {
            TierArg::M1 => vec![Tier::M1],
            TierArg::M2 => vec![Tier::M2],
            TierArg::M3 => vec![Tier::M3],
            TierArg::All => Tier::ALL.to_vec(),
        }),
        label: cli.label.map(|l| match l {
            LabelArg::Patents => LabelKind::Patents,
            LabelArg::Trials => LabelKind::Trials,
        }),
        embed_mode: cli.embed_mode.map(|m| match m {
            EmbedModeArg::Local => EmbedMode::Local,
            EmbedModeArg::Remote => EmbedMode::Remote,
        }),
        strict: cli.strict.then_some(true),
    }
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let path = cli.profile.as_ref().ok_or_else(|| PipelineError::Config("--profile is required".into()))?;
    let profile = ExperimentProfile::load(path)?.apply(&overrides(cli));
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(&profile.name));
    let ctx = RunContext::new(profile, out)?;
    match cli.command {
        Command::Synth => {
            let p = pipeline::run_synth(&ctx)?;
            println!("wrote {}", p.display());
        }
        Command::Ingest => {
            let s = pipeline::run_ingest(&ctx)?;
            println!(
                "kept {} of {} records ({} positive); train {}, test {}",
                s.filter.kept, s.loaded, s.positives, s.train, s.test
            );
        }
        Command::Featurize => {
            for t in pipeline::run_featurize(&ctx)? {
                println!("featurized {t}");
            }
        }
        Command::Train => {
            for t in pipeline::run_train(&ctx)? {
                println!("trained {}: {} rows, {} features, {} trees", t.tier, t.rows, t.features, t.best_iteration);
            }
        }
        Command::Eval => {
            for r in pipeline::run_eval(&ctx)? {
                println!("{}: AUC {:.4}, accuracy {:.4}", r.tier, r.report.auc_roc, r.report.metrics.accuracy);
            }
        }
        Command::Temporal => {
            let t = pipeline::run_temporal(&ctx)?;
            println!("audited {} points on {}", t.points, t.tier);
            for d in &t.report.decades {
                let acc = d.accuracy.map_or("n/a".to_string(), |a| format!("{:.2}%", 100.0 * a));
                println!("  {}-{}: {} points, accuracy {acc}", d.start, d.end, d.cm.total());
            }
        }
        Command::Report => print!("{}", pipeline::run_report(&ctx)?),
        Command::Run => print!("{}", pipeline::run_pipeline(&ctx)?.tables),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
