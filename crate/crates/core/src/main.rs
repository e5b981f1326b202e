use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hrfseg::pipeline::{run_oracle, run_segment, Granularity, Mode, PipelineConfig, PipelineError};
use hrfseg::Error;

/// Hierarchical segmentation with prior-driven marker density.
#[derive(Parser)]
#[command(name = "hrfseg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the hierarchy and write a UCM and/or a partition.
    Segment(Common),
    /// Check the closed-form edge probabilities against Monte-Carlo trials.
    Oracle(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Uniform,
    Volume,
    Hrf,
    HrfTransition,
}

#[derive(Args)]
struct Common {
    /// Grayscale PGM image.
    #[arg(long)]
    input: PathBuf,
    /// Prior map in [0, 1] (PGM); give twice to average two priors.
    #[arg(long)]
    prior: Vec<PathBuf>,
    #[arg(long)]
    prior2: Option<PathBuf>,
    /// Fine partition to use instead of the watershed (LBL).
    #[arg(long)]
    labels_in: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "volume")]
    mode: ModeArg,
    /// Expected number of markers [default: number of fine regions].
    #[arg(long)]
    markers: Option<f64>,
    /// Number of extra valuation passes stacked on the first.
    #[arg(long, default_value_t = 0)]
    chain: usize,
    #[arg(long)]
    out_ucm: Option<PathBuf>,
    #[arg(long)]
    out_labels: Option<PathBuf>,
    /// Number of output regions.
    #[arg(long, conflicts_with = "threshold")]
    k: Option<usize>,
    /// Cut every edge whose probability exceeds this level.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Write the region adjacency graph as CSV.
    #[arg(long)]
    dump_edges: Option<PathBuf>,
}

impl Common {
    fn into_config(self) -> PipelineConfig {
        let mut priors = self.prior;
        priors.extend(self.prior2);
        PipelineConfig {
            input: self.input,
            priors,
            labels_in: self.labels_in,
            mode: match self.mode {
                ModeArg::Uniform => Mode::Uniform,
                ModeArg::Volume => Mode::Volume,
                ModeArg::Hrf => Mode::Hrf,
                ModeArg::HrfTransition => Mode::HrfTransition,
            },
            markers: self.markers,
            chain: self.chain,
            out_ucm: self.out_ucm,
            out_labels: self.out_labels,
            granularity: self
                .k
                .map(Granularity::Regions)
                .or(self.threshold.map(Granularity::Threshold)),
            seed: self.seed,
            trials: self.trials,
            dump_edges: self.dump_edges,
        }
    }
}

fn exit_code(e: &PipelineError) -> u8 {
    match e {
        PipelineError::Config(_) => 2,
        PipelineError::Stage { source, .. } => match source {
            Error::Io { .. } => 1,
            Error::InvalidArgument(_) => 2,
            Error::Format { .. } => 3,
            _ => 4,
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Segment(args) => run_segment(&args.into_config()).map(|summary| {
            for (stage, t) in &summary.timings.stages {
                eprintln!("{stage:>15}: {:.3}s", t.as_secs_f64());
            }
            eprintln!(
                "{:>15}: {:.3}s",
                "total",
                summary.timings.wall.as_secs_f64()
            );
            eprintln!("fine regions: {}", summary.fine_regions);
            if let Some(n) = summary.output_regions {
                eprintln!("output regions: {n}");
            }
            ExitCode::SUCCESS
        }),
        Command::Oracle(args) => run_oracle(&args.into_config()).map(|outcome| {
            print!("{}", outcome.report);
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
