use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sizecover_core::cover::CandidateMode;
use sizecover_core::stats::FeatureMode;
use sizecover_pipeline::io::write_json;
use sizecover_pipeline::pipeline::{
    run_cover, run_evaluate, run_extrapolate, CoverConfig, CoverInput, CoverMode, ExtrapolateConfig, ModelConfig,
    Sampling,
};
use sizecover_pipeline::synth::{synth_split, SynthKind};
use sizecover_pipeline::{PipelineError, Result};

/// Representative design models from a corpus of corresponded shapes.
#[derive(Parser)]
#[command(name = "sizecover", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cover every subject with as few tolerance boxes as possible.
    CoverAll(CoverArgs),
    /// Cover as many subjects as possible with at most k boxes.
    CoverK {
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        args: CoverArgs,
    },
    /// Cover every subject with the shifting strategy (d = 2).
    Shift {
        #[arg(long)]
        l: usize,
        #[command(flatten)]
        args: CoverArgs,
    },
    /// Held-out coverage of a saved report.
    Evaluate {
        #[arg(long)]
        report: PathBuf,
        /// Points CSV, or a corpus manifest (.json) measured with --measurements.
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        measurements: Option<PathBuf>,
        /// Also write evaluation.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize new subjects from fitted shape and measurement models.
    Extrapolate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        measurements: PathBuf,
        /// Number of subjects drawn from the measurement distribution.
        #[arg(long, conflicts_with = "level", required_unless_present = "level")]
        count: Option<usize>,
        /// Mahalanobis level of the ellipsoid to sample on.
        #[arg(long)]
        level: Option<f64>,
        /// Points on the ellipsoid in --level mode.
        #[arg(long, default_value_t = 20)]
        level_count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Write a synthetic head-proxy corpus.
    Synth {
        #[arg(long)]
        n: usize,
        /// Additional test subjects drawn from the same distribution.
        #[arg(long, default_value_t = 0)]
        holdout: usize,
        #[arg(long, value_enum, default_value_t = SynthKind::Head)]
        kind: SynthKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Candidates {
    Centered,
    Combinatorial,
}

#[derive(Args)]
struct ModelArgs {
    /// Fraction of shape variance kept by PCA.
    #[arg(long, default_value_t = 0.99)]
    variance_fraction: f64,
    /// Fit a linear rather than affine measurement-to-shape map.
    #[arg(long)]
    linear_map: bool,
}

impl ModelArgs {
    fn config(&self) -> ModelConfig {
        ModelConfig {
            variance_fraction: self.variance_fraction,
            feature_mode: if self.linear_map { FeatureMode::Linear } else { FeatureMode::Affine },
        }
    }
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long, conflicts_with = "points", required_unless_present = "points")]
    corpus: Option<PathBuf>,
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long)]
    measurements: Option<PathBuf>,
    /// Comma-separated box side lengths in meters; overrides the spec.
    #[arg(long, value_delimiter = ',')]
    tolerances: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    candidates: Option<Candidates>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Held-out points CSV or corpus manifest.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Also compute the exact optimum (small instances only).
    #[arg(long)]
    with_oracle: bool,
    /// Skip writing design-model meshes.
    #[arg(long)]
    no_design_models: bool,
    /// Fill sparse or off-center boxes with synthesized subjects.
    #[arg(long)]
    extrapolate_sparse: bool,
    #[arg(long, default_value_t = 3)]
    min_members: usize,
    /// Allowed offset of the members' mean from the box center, as a
    /// fraction of the half side length.
    #[arg(long, default_value_t = 0.5)]
    center_tolerance: f64,
    #[arg(long, default_value_t = 20)]
    sparse_samples: usize,
    /// Refuse combinatorial candidate sets larger than this.
    #[arg(long, default_value_t = sizecover_core::cover::DEFAULT_COMBINATORIAL_CAP)]
    combinatorial_cap: u64,
    /// Record per-stage wall-clock times in the report.
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    comment: Option<String>,
    #[command(flatten)]
    model: ModelArgs,
}

impl CoverArgs {
    fn config(self, mode: CoverMode) -> CoverConfig {
        let input = match (self.corpus, self.points) {
            (Some(c), _) => CoverInput::Corpus(c),
            (None, Some(p)) => CoverInput::Points(p),
            (None, None) => unreachable!("clap requires one input"),
        };
        let mut cfg = CoverConfig::new(input, mode, self.out);
        cfg.spec = self.measurements;
        cfg.tolerances = self.tolerances;
        cfg.candidates = self.candidates.map(|c| match c {
            Candidates::Centered => CandidateMode::Centered,
            Candidates::Combinatorial => CandidateMode::Combinatorial,
        });
        cfg.combinatorial_cap = self.combinatorial_cap;
        cfg.seed = self.seed;
        cfg.test = self.test;
        cfg.with_oracle = self.with_oracle;
        cfg.design_models = !self.no_design_models;
        cfg.extrapolate_sparse = self.extrapolate_sparse;
        cfg.min_members = self.min_members;
        cfg.center_tolerance = self.center_tolerance;
        cfg.sparse_samples = self.sparse_samples;
        cfg.model = self.model.config();
        cfg.timings = self.timings;
        cfg.comment = self.comment;
        cfg
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Data(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::CoverAll(args) => summarize(&run_cover(&args.config(CoverMode::All))?),
        Command::CoverK { k, args } => summarize(&run_cover(&args.config(CoverMode::K(k)))?),
        Command::Shift { l, args } => summarize(&run_cover(&args.config(CoverMode::Shift(l)))?),
        Command::Evaluate { report, test, measurements, out } => {
            let result = run_evaluate(&report, &test, measurements.as_deref())?;
            if let Some(dir) = out {
                sizecover_pipeline::io::create_dir(&dir)?;
                write_json(&dir.join("evaluation.json"), &result)?;
            }
            print_json(&result)
        }
        Command::Extrapolate { corpus, measurements, count, level, level_count, out, seed, model } => {
            let sampling = match (count, level) {
                (Some(count), _) => Sampling::Density { count },
                (None, Some(c)) => Sampling::Level { c, count: level_count },
                (None, None) => unreachable!("clap requires --count or --level"),
            };
            let cfg = ExtrapolateConfig { corpus, spec: measurements, sampling, seed, out_dir: out, model: model.config() };
            let output = run_extrapolate(&cfg)?;
            println!("{} subjects written to {}", output.meshes.len(), cfg.out_dir.display());
            Ok(())
        }
        Command::Synth { n, holdout, kind, out, seed } => {
            let written = synth_split(kind, n, holdout, seed, &out)?;
            println!("train manifest: {}", written.train_manifest.display());
            if let Some(test) = written.test_manifest {
                println!("test manifest: {}", test.display());
            }
            println!("measurements: {}", written.spec.display());
            Ok(())
        }
    }
}

fn summarize(report: &sizecover_pipeline::report::RunReport) -> Result<()> {
    println!(
        "{} boxes, train coverage {:.4}{}",
        report.boxes.len(),
        report.train_coverage,
        report.holdout.as_ref().map_or(String::new(), |h| format!(", held-out coverage {:.4}", h.coverage))
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
