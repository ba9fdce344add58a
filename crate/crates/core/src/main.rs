use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use groupform::app::{self, AppError};
use groupform::config::{RunConfig, Settings};
use groupform::synth::SynthSpec;

#[derive(Parser)]
#[command(
    name = "groupform",
    version,
    about = "Form student groups with simulated annealing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean records, select a cohort and optimize its grouping.
    Run(RunArgs),
    /// Compare annealing against exhaustive search on a small cohort.
    Verify {
        #[command(flatten)]
        args: RunArgs,
        /// Number of consecutive master seeds to try.
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        /// Required fraction of seeds reaching the optimum.
        #[arg(long, default_value_t = 0.95)]
        threshold: f64,
    },
    /// Generate synthetic record and prerequisite files.
    Synth {
        #[arg(long, default_value_t = 120)]
        students: usize,
        #[arg(long, default_value_t = 12)]
        courses: usize,
        #[arg(long, default_value_t = 0.2)]
        prereq_density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Row, student and course counts before and after cleaning.
    Stats {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        delimiter: Option<char>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Key-value config file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long)]
    prereqs: Option<PathBuf>,
    #[arg(long)]
    course: Option<String>,
    #[arg(long)]
    semester: Option<String>,
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tmin: Option<f64>,
    #[arg(long)]
    max_iters: Option<u64>,
    /// Seconds.
    #[arg(long)]
    max_runtime: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// separability or balance
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long)]
    delimiter: Option<char>,
    /// Run restarts one after another instead of in parallel.
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn base_settings(config: Option<&PathBuf>) -> Result<Settings, AppError> {
    match config {
        Some(path) => Ok(Settings::from_file(path)?),
        None => Ok(Settings::default()),
    }
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig, AppError> {
        let flags = Settings {
            records: self.records,
            prereqs: self.prereqs,
            course: self.course,
            semester: self.semester,
            limit: self.limit,
            group_size: self.group_size,
            t0: self.t0,
            alpha: self.alpha,
            tmin: self.tmin,
            max_iters: self.max_iters,
            max_runtime: self.max_runtime,
            restarts: self.restarts,
            seed: self.seed,
            objective: self.objective,
            test_fraction: self.test_fraction,
            split_seed: self.split_seed,
            out: self.out,
            delimiter: self.delimiter,
            serial: self.serial.then_some(true),
            ..Default::default()
        };
        let settings = base_settings(self.config.as_ref())?.overlay(&flags);
        Ok(RunConfig::resolve(&settings)?)
    }
}

fn execute(cli: Cli) -> Result<ExitCode, AppError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let out = app::run(&cfg)?;
            for e in &out.loaded.row_errors {
                eprintln!("warning: {}: {e}", cfg.records.display());
            }
            print!(
                "{}",
                std::fs::read_to_string(&out.summary).unwrap_or_default()
            );
            println!("assignments: {}", out.assignments.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            args,
            seeds,
            threshold,
        } => {
            let cfg = args.resolve()?;
            let report = app::verify(&cfg, seeds, threshold)?;
            print!("{}", report.render());
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Synth {
            students,
            courses,
            prereq_density,
            seed,
            out,
        } => {
            let spec = SynthSpec {
                n_students: students,
                n_courses: courses,
                prereq_density,
                seed,
            };
            let (records, prereqs) = app::synth(&spec, &out)?;
            println!("records: {}", records.display());
            println!("prereqs: {}", prereqs.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats {
            config,
            records,
            delimiter,
        } => {
            let flags = Settings {
                records,
                delimiter,
                ..Default::default()
            };
            let settings = base_settings(config.as_ref())?.overlay(&flags);
            let path = settings
                .records
                .clone()
                .ok_or_else(|| AppError::Config("records is required".into()))?;
            let report = app::stats(&path, &settings.record_format()?)?;
            print!("{}", report.render());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(2)
        }
    }
}
