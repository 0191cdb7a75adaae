//! `hlv`: command-line front end for the disagreement-aware evaluation
//! protocol.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hlv_core::ReportFormat;

#[derive(Parser)]
#[command(
    name = "hlv",
    version,
    about = "Evaluate classifiers against non-aggregated human labels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print Krippendorff's alpha per question.
    Reliability {
        annotations: PathBuf,
        /// Also print Fleiss' kappa (complete tables only).
        #[arg(long)]
        fleiss: bool,
        #[arg(long, default_value_t = 2)]
        precision: usize,
    },
    /// Split questions into agreement and disagreement subsets.
    Partition {
        annotations: PathBuf,
        #[arg(long, default_value_t = hlv_core::reliability::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = 2)]
        precision: usize,
    },
    /// Run the full protocol on annotations and one predictions file per model.
    Evaluate {
        annotations: PathBuf,
        #[arg(required = true)]
        predictions: Vec<PathBuf>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "table")]
        format: ReportFormat,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the sampled frame indices of a video, one per line.
    Frames {
        #[arg(long)]
        total: u64,
        #[arg(long)]
        fps: f64,
        #[arg(long = "max")]
        budget: u64,
    },
    /// Re-render a machine-readable report.
    Report {
        input: PathBuf,
        #[arg(long, default_value = "table")]
        format: ReportFormat,
    },
    /// Write a synthetic annotations/predictions/config bundle.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// `id=sharpness`, repeatable; sharpness 1 gives unanimous items, 0 coin flips.
        #[arg(long = "question", value_parser = commands::parse_question)]
        questions: Vec<(String, f64)>,
        #[arg(long, default_value_t = 300)]
        items: usize,
        #[arg(long, default_value_t = 5)]
        annotators: usize,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 0.0)]
        missing: f64,
        #[arg(long, default_value_t = 0.8)]
        fidelity: f64,
        #[arg(long, default_value = "synthetic")]
        model: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Reliability {
            annotations,
            fleiss,
            precision,
        } => commands::reliability(&annotations, fleiss, precision),
        Command::Partition {
            annotations,
            threshold,
            precision,
        } => commands::partition(&annotations, threshold, precision),
        Command::Evaluate {
            annotations,
            predictions,
            config,
            format,
            out,
        } => commands::evaluate(&annotations, &predictions, &config, format, out.as_deref()),
        Command::Frames { total, fps, budget } => commands::frames(total, fps, budget),
        Command::Report { input, format } => commands::report(&input, format),
        Command::Synth {
            out,
            questions,
            items,
            annotators,
            runs,
            missing,
            fidelity,
            model,
            seed,
        } => commands::synth(
            &out,
            hlv_core::synth::BundleSpec {
                questions,
                n_items: items,
                n_annotators: annotators,
                missing_rate: missing,
                fidelity,
                n_runs: runs,
                model,
                seed,
            },
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure:#}");
            ExitCode::from(failure.exit_code())
        }
    }
}
