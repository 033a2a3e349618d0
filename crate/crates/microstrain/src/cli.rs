//! Command-line interface.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgMatches, Args, Command, FromArgMatches, Parser, Subcommand};
use microstrain_core::eval::EvalReport;

use crate::config::{protocol_name, PipelineConfig, KEYS};
use crate::error::Result;
use crate::formats::read_report;
use crate::manifest::DatasetManifest;
use crate::pipeline::{extract_stage, run_pipeline, Stage, REPORT_FILE};
use crate::synth::{write_dataset, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "microstrain", version, about = "Optical strain features for subtle facial motion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Commands,
}

#[derive(Debug, Subcommand)]
pub enum Commands {
    /// Generate a synthetic micro-motion dataset with a manifest.
    Synth(SynthArgs),
    /// Run one extraction stage and write its artifacts.
    Extract {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "all")]
        stage: Stage,
    },
    /// Extract features (or reuse the cache) and cross-validate.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// Ignore cached features in the output directory.
        #[arg(long)]
        no_cache: bool,
    },
    /// Print a summary of an evaluation report.
    Report {
        /// A report file or a directory containing report.json.
        path: PathBuf,
    },
    /// Print the effective configuration.
    Config {
        #[command(flatten)]
        run: ConfigArgs,
    },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory for frames and manifest.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 8)]
    pub subjects: usize,
    #[arg(long, default_value_t = 5)]
    pub videos_per_class: usize,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = 10)]
    pub frames: usize,
    #[arg(long, default_value_t = 0.5)]
    pub amplitude_min: f64,
    #[arg(long, default_value_t = 1.5)]
    pub amplitude_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Zero motion amplitude for every class.
    #[arg(long = "static")]
    pub static_motion: bool,
}

impl SynthArgs {
    pub fn spec(&self) -> SynthSpec {
        let spec = SynthSpec {
            classes: self.classes,
            subjects: self.subjects,
            videos_per_class: self.videos_per_class,
            width: self.width,
            height: self.height,
            frames: self.frames,
            amplitude_min: self.amplitude_min,
            amplitude_max: self.amplitude_max,
            noise_sigma: self.noise_sigma,
            seed: self.seed,
        };
        if self.static_motion {
            spec.static_motion()
        } else {
            spec
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Dataset manifest (.json or .csv).
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Configuration file of key = value lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

impl ConfigArgs {
    /// File values first, then command-line overrides.
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        cfg.apply_overrides(self.overrides.0.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
        Ok(cfg)
    }
}

/// One optional `--<key> <value>` flag per configuration key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigOverrides(pub Vec<(String, String)>);

impl FromArgMatches for ConfigOverrides {
    fn from_arg_matches(matches: &ArgMatches) -> std::result::Result<Self, clap::Error> {
        let pairs = KEYS
            .iter()
            .filter_map(|(key, _)| matches.get_one::<String>(key).map(|v| (key.to_string(), v.clone())))
            .collect();
        Ok(Self(pairs))
    }

    fn update_from_arg_matches(&mut self, matches: &ArgMatches) -> std::result::Result<(), clap::Error> {
        *self = Self::from_arg_matches(matches)?;
        Ok(())
    }
}

impl Args for ConfigOverrides {
    fn augment_args(cmd: Command) -> Command {
        KEYS.iter().fold(cmd, |cmd, (key, help)| {
            cmd.arg(
                Arg::new(*key)
                    .long(*key)
                    .value_name("VALUE")
                    .help(*help)
                    .help_heading("Configuration overrides"),
            )
        })
    }

    fn augment_args_for_update(cmd: Command) -> Command {
        Self::augment_args(cmd)
    }
}

/// Human-readable report summary.
pub fn summarize(report: &EvalReport) -> String {
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "protocol        {}", protocol_name(report.protocol)).unwrap();
    writeln!(w, "samples         {}", report.samples).unwrap();
    writeln!(w, "folds           {}", report.folds.len()).unwrap();
    writeln!(w, "micro accuracy  {:.4}", report.micro_accuracy).unwrap();
    writeln!(w, "macro accuracy  {:.4}", report.macro_accuracy).unwrap();
    writeln!(
        w,
        "subject macro   P {:.4}  R {:.4}  F1 {:.4}",
        report.subject_macro.precision, report.subject_macro.recall, report.subject_macro.f1
    )
    .unwrap();
    writeln!(
        w,
        "class macro     P {:.4}  R {:.4}  F1 {:.4}",
        report.class_macro.precision, report.class_macro.recall, report.class_macro.f1
    )
    .unwrap();
    writeln!(
        w,
        "\n{:<16} {:>7} {:>9} {:>7} {:>7}",
        "class", "support", "precision", "recall", "f1"
    )
    .unwrap();
    for c in &report.per_class {
        writeln!(
            w,
            "{:<16} {:>7} {:>9.4} {:>7.4} {:>7.4}",
            c.label, c.support, c.precision, c.recall, c.f1
        )
        .unwrap();
    }
    writeln!(w, "\nconfusion (rows actual, columns predicted)").unwrap();
    for (class, row) in report.confusion.classes.iter().zip(&report.confusion.counts) {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>5}")).collect();
        writeln!(w, "{class:<16}{}", cells.join("")).unwrap();
    }
    out
}

fn report_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(REPORT_FILE)
    } else {
        path.to_path_buf()
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Commands::Synth(args) => {
            let manifest = write_dataset(&args.spec(), &args.out)?;
            println!("wrote {} videos to {}", manifest.len(), args.out.display());
        }
        Commands::Extract { run, stage } => {
            let cfg = run.config.resolve()?;
            let manifest = DatasetManifest::load(&run.manifest)?;
            let out = extract_stage(&manifest, &cfg, stage)?;
            println!("wrote {} files to {}", out.written.len(), cfg.output_dir.display());
            for f in &out.failures {
                eprintln!("skipped {}: {}", f.video_id, f.error);
            }
        }
        Commands::Evaluate { run, no_cache } => {
            let cfg = run.config.resolve()?;
            let manifest = DatasetManifest::load(&run.manifest)?;
            let out = run_pipeline(&manifest, &cfg, !no_cache)?;
            for f in &out.metadata.failures {
                eprintln!("skipped {}: {}", f.video_id, f.error);
            }
            print!("{}", summarize(&out.report));
            println!("\noutputs in {}", out.output_dir.display());
        }
        Commands::Report { path } => {
            print!("{}", summarize(&read_report(&report_path(&path))?));
        }
        Commands::Config { run } => print!("{}", run.resolve()?.to_text()),
    }
    Ok(())
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
