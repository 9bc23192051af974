use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spectral_curriculum::augment::{magnitude_at, randaug, AugPolicy};
use spectral_curriculum::curriculum::{efficienttrain_schedule, relative_cost, Schedule, DEFAULT_M0};
use spectral_curriculum::resample::{downsample, leakage_report, rational_leakage_report, KernelName, KernelSpec};
use spectral_curriculum::search::{greedy_search, SearchConfig};
use spectral_curriculum::spectral::{high_pass_filter, low_pass_filter};
use spectral_curriculum_cli::imageio::{load_image, save_image};
use spectral_curriculum_cli::{run_transform, JobManifest};

#[derive(Parser)]
#[command(name = "specur", version, about = "Frequency-domain curriculum tools")]
struct Cli {
    /// Seed for randomized augmentation
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for batch commands
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
    /// Output file or directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterMode {
    Low,
    High,
}

#[derive(Subcommand)]
enum Command {
    /// Apply the schedule's transform at one epoch to a batch of images
    Transform {
        /// JSON job manifest; flags given alongside it take precedence
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, required_unless_present = "manifest")]
        schedule: Option<PathBuf>,
        #[arg(long, required_unless_present = "manifest")]
        epoch: Option<u32>,
        /// Skip RandAug
        #[arg(long)]
        no_augment: bool,
        /// Also write re-quantized PNGs
        #[arg(long)]
        emit_png: bool,
        inputs: Vec<PathBuf>,
    },
    /// Circular low- or high-pass filter
    Filter {
        #[arg(long, value_enum)]
        mode: FilterMode,
        #[arg(long)]
        radius: f64,
        input: PathBuf,
    },
    /// Spatial down-sampling by an integer factor
    Downsample {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        #[arg(long, default_value = "mean")]
        kernel: KernelName,
        input: PathBuf,
    },
    /// Emit the default cropping curriculum
    Schedule {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        epochs: u32,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Relative training cost of a schedule
    #[command(group(ArgGroup::new("source").required(true).args(["schedule", "epochs"])))]
    Cost {
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Use the default curriculum for this many epochs
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        epochs: Option<u32>,
    },
    /// Spectral leakage of a resampling kernel
    Leakage {
        #[arg(long)]
        kernel: KernelName,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        /// Up-sampling factor applied before down-sampling
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        up: u32,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Greedy per-stage bandwidth search
    Search {
        #[arg(long)]
        config: PathBuf,
        /// Evaluate a step's candidates concurrently
        #[arg(long)]
        speculative: bool,
    },
    /// RandAug one image
    #[command(group(ArgGroup::new("strength").required(true).args(["magnitude", "epoch"])))]
    Augment {
        #[arg(long)]
        magnitude: Option<f64>,
        /// Epoch on the linear magnitude ramp (needs --epochs)
        #[arg(long, requires = "epochs")]
        epoch: Option<u32>,
        #[arg(long)]
        epochs: Option<u32>,
        #[arg(long, default_value_t = 0)]
        index: u64,
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn require_out(out: Option<&Path>) -> Result<&Path> {
    out.context("--out is required for this command")
}

fn load_schedule(path: &Path) -> Result<Schedule> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing schedule {}", path.display()))
}

fn round_to(x: f64, places: i32) -> f64 {
    let scale = 10f64.powi(places);
    (x * scale).round() / scale
}

fn run(cli: Cli) -> Result<ExitCode> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Transform {
            manifest,
            schedule,
            epoch,
            no_augment,
            emit_png,
            inputs,
        } => {
            let mut job = match manifest {
                Some(path) => JobManifest::from_path(&path).with_context(|| format!("reading {}", path.display()))?,
                None => JobManifest {
                    inputs: Vec::new(),
                    schedule: PathBuf::new(),
                    epoch: 0,
                    out_dir: require_out(out)?.to_path_buf(),
                    workers: 1,
                    seed: 0,
                    augment: true,
                    emit_png: false,
                },
            };
            if let Some(s) = schedule {
                job.schedule = s;
            }
            if let Some(t) = epoch {
                job.epoch = t;
            }
            if !inputs.is_empty() {
                job.inputs = inputs;
            }
            if let Some(dir) = out {
                job.out_dir = dir.to_path_buf();
            }
            if let Some(w) = cli.workers {
                job.workers = w as usize;
            }
            if let Some(s) = cli.seed {
                job.seed = s;
            }
            job.augment &= !no_augment;
            job.emit_png |= emit_png;

            let summary = run_transform(&job)?;
            emit(&summary, None)?;
            if !summary.errors.is_empty() {
                eprintln!(
                    "warning: {} of {} inputs failed",
                    summary.errors.len(),
                    job.inputs.len()
                );
                for e in &summary.errors {
                    eprintln!("  {}: {}", e.input.display(), e.error);
                }
            }
        }
        Command::Filter { mode, radius, input } => {
            let image = load_image(&input).with_context(|| format!("loading {}", input.display()))?;
            let filtered = match mode {
                FilterMode::Low => low_pass_filter(&image, radius)?,
                FilterMode::High => high_pass_filter(&image, radius)?,
            };
            save_image(&filtered, require_out(out)?)?;
        }
        Command::Downsample { k, kernel, input } => {
            let image = load_image(&input).with_context(|| format!("loading {}", input.display()))?;
            let small = downsample(&image, &KernelSpec::new(kernel, k as usize)?)?;
            save_image(&small, require_out(out)?)?;
        }
        Command::Schedule { epochs, format } => {
            let schedule = efficienttrain_schedule(epochs)?;
            match format {
                Format::Json => emit(&schedule, out)?,
                Format::Table => print!("{}", schedule_table(&schedule)),
            }
        }
        Command::Cost { schedule, epochs } => {
            let schedule = match (schedule, epochs) {
                (Some(path), _) => load_schedule(&path)?,
                (None, Some(t)) => efficienttrain_schedule(t)?,
                (None, None) => unreachable!("clap enforces one source"),
            };
            #[derive(Serialize)]
            struct Report {
                cost: f64,
                speedup: f64,
            }
            let est = relative_cost(&schedule);
            let report = Report {
                cost: round_to(est.cost, 3),
                speedup: round_to(est.speedup, 2),
            };
            let text = serde_json::to_string(&report)? + "\n";
            match out {
                Some(path) => fs::write(path, text)?,
                None => print!("{text}"),
            }
        }
        Command::Leakage {
            kernel,
            k,
            up,
            height,
            width,
            format,
        } => {
            let spec = KernelSpec::new(kernel, k as usize)?;
            let width = width.unwrap_or(height);
            let report = if up == 1 {
                leakage_report(&spec, height, width)?
            } else {
                rational_leakage_report(up as usize, &spec, height, width)?
            };
            match format {
                Format::Json => emit(&report, out)?,
                Format::Table => print!("{report}"),
            }
        }
        Command::Search { config, speculative } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg: SearchConfig = serde_json::from_str(&text).context("parsing search config")?;
            cfg.speculative |= speculative;
            match greedy_search(&cfg) {
                Ok(outcome) => {
                    emit(&outcome, out)?;
                    if outcome.infeasible_at_every_stage() {
                        eprintln!("warning: no candidate was feasible at any stage");
                    }
                }
                Err(aborted) => {
                    eprintln!("partial trace:\n{}", serde_json::to_string_pretty(&aborted.trace)?);
                    return Err(aborted.into());
                }
            }
        }
        Command::Augment {
            magnitude,
            epoch,
            epochs,
            index,
            input,
        } => {
            let m = match (magnitude, epoch, epochs) {
                (Some(m), _, _) => m,
                (None, Some(t), Some(total)) => magnitude_at(t, total, DEFAULT_M0)?,
                _ => bail!("give --magnitude or --epoch with --epochs"),
            };
            let image = load_image(&input).with_context(|| format!("loading {}", input.display()))?;
            let policy = AugPolicy::baseline(cli.seed.unwrap_or(0)).with_magnitude(m);
            save_image(&randaug(&image, &policy, index)?, require_out(out)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn schedule_table(schedule: &Schedule) -> String {
    let mut s = format!("{:<12} {:<28} {}\n", "epochs", "transform", "magnitude");
    for stage in schedule.stages() {
        let m0 = schedule
            .magnitude_rule()
            .at(stage.start, schedule.total_epochs())
            .unwrap_or(f64::NAN);
        let m1 = schedule
            .magnitude_rule()
            .at(stage.end, schedule.total_epochs())
            .unwrap_or(f64::NAN);
        let transform = serde_json::to_string(&stage.transform).unwrap_or_default();
        s += &format!(
            "{:<12} {:<28} {m0:.2} -> {m1:.2}\n",
            format!("{}-{}", stage.start, stage.end),
            transform
        );
    }
    s
}
