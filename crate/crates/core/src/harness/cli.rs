use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::invariants::{run_suite, InvariantSetup, CHECKS};
use super::run::{replica_seed, run_experiment, RunOptions};
use super::spec::{format_intervals, parse_sweep, RawSpec};
use super::table::{check_predictions, emit_csv, read_csv, ResultTable};
use crate::error::{Error, Result};
use crate::kernel_profile::{burgers_profile, integrated_profile, JumpKernel, StepProfileParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "exclusion-lab", version, about = "Hydrodynamics of exclusion processes from step initial data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the closed-form profile or its integral.
    Profile(ProfileArgs),
    /// Run one experiment and write a CSV result table.
    Simulate(SimulateArgs),
    /// Run the exact pathwise checks, or re-check a result table.
    Verify(VerifyArgs),
    /// Run every experiment of a sweep file.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[arg(long, allow_hyphen_values = true)]
    kernel: String,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    rho: f64,
    /// Print the integral over [U, V].
    #[arg(long, num_args = 2, value_names = ["U", "V"], allow_negative_numbers = true, action = clap::ArgAction::Append)]
    interval: Vec<f64>,
    /// Print f(u) at N evenly spaced speeds from START to STOP.
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "N"], allow_negative_numbers = true)]
    grid: Option<Vec<f64>>,
}

#[derive(Args, Debug, Default)]
struct ExperimentArgs {
    /// Experiment file with `key = value` lines; flags override its values.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    kernel: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<String>,
    /// Final time.
    #[arg(long, allow_negative_numbers = true)]
    time: Option<String>,
    #[arg(long, num_args = 2, value_names = ["U", "V"], allow_negative_numbers = true, action = clap::ArgAction::Append)]
    interval: Vec<String>,
    #[arg(long)]
    replicas: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    buffer: Option<String>,
    #[arg(long = "t-burn")]
    t_burn: Option<String>,
}

impl ExperimentArgs {
    fn raw_spec(&self) -> Result<RawSpec> {
        let mut raw = match &self.spec {
            Some(path) => RawSpec::parse(&read_spec_file(path)?)?,
            None => RawSpec::default(),
        };
        let pairs = [
            ("kind", &self.kind),
            ("kernel", &self.kernel),
            ("lambda", &self.lambda),
            ("rho", &self.rho),
            ("t_final", &self.time),
            ("replicas", &self.replicas),
            ("seed", &self.seed),
            ("buffer", &self.buffer),
            ("t_burn", &self.t_burn),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                raw.set(key, v.clone())?;
            }
        }
        if !self.interval.is_empty() {
            let text = self
                .interval
                .chunks(2)
                .map(|c| c.join(" "))
                .collect::<Vec<_>>()
                .join(", ");
            raw.set("intervals", text)?;
        }
        Ok(raw)
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock milliseconds per replica.
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Re-check closed-form predictions of an existing result table.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Check a single experiment's kernel and densities instead of the
    /// built-in scenarios.
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Write the per-check summary as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Sweep file: experiments separated by `---` lines.
    #[arg(long)]
    spec: PathBuf,
    /// Directory receiving `experiment_<i>.csv`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    timings: bool,
}

fn read_spec_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::InvalidArgument(format!("cannot read spec file {}: {e}", path.display()))
    })
}

/// Entry point of the binary; returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Profile(args) => profile(args),
        Command::Simulate(args) => simulate(args),
        Command::Verify(args) => verify(args),
        Command::Sweep(args) => sweep(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => EXIT_FAILED,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn profile(args: ProfileArgs) -> Result<i32> {
    let kernel: JumpKernel = args.kernel.parse()?;
    let params = StepProfileParams::new(args.lambda, args.rho)?;
    if args.interval.is_empty() && args.grid.is_none() {
        return Err(Error::InvalidArgument("give --interval U V or --grid START STOP N".into()));
    }
    for pair in args.interval.chunks(2) {
        println!("{:?}", integrated_profile(pair[0], pair[1], &kernel, &params)?);
    }
    if let Some(grid) = args.grid {
        let (start, stop, n) = (grid[0], grid[1], grid[2]);
        if !(n >= 1.0 && n.fract() == 0.0) {
            return Err(Error::InvalidArgument(format!("grid size must be a positive integer, got {n}")));
        }
        let n = n as usize;
        println!("u,f");
        for i in 0..n {
            let u = if n == 1 {
                start
            } else {
                start + (stop - start) * i as f64 / (n - 1) as f64
            };
            println!("{u:?},{:?}", burgers_profile(u, &kernel, &params));
        }
    }
    Ok(EXIT_OK)
}

fn write_table(table: &ResultTable, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => emit_csv(table, path),
        None => {
            print!("{}", table.to_csv_string());
            Ok(())
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<i32> {
    let spec = args.experiment.raw_spec()?.build()?;
    let options = RunOptions {
        timings: args.timings,
        ..RunOptions::from_env()?
    };
    let table = run_experiment(&spec, options)?;
    write_table(&table, args.out.as_deref())?;
    if let Some(path) = &args.out {
        // read-back guards against a lossy write
        let back = read_csv(path)?;
        if back.to_csv_string() != table.to_csv_string() {
            eprintln!("error: {} does not read back identically", path.display());
            return Ok(EXIT_FAILED);
        }
        if let Err(e) = check_predictions(&back) {
            eprintln!("error: {e}");
            return Ok(EXIT_FAILED);
        }
    }
    Ok(EXIT_OK)
}

/// Kernels and densities exercised by `verify` without arguments.
pub fn default_scenarios() -> Vec<(JumpKernel, StepProfileParams)> {
    let k = |s: &str| s.parse::<JumpKernel>().expect("valid literal");
    let p = |l, r| StepProfileParams::new(l, r).expect("valid densities");
    vec![
        (k("1:1"), p(1.0, 0.0)),
        (k("1:0.7,-1:0.3"), p(0.8, 0.3)),
        (k("2:0.5,-1:0.5"), p(0.6, 0.2)),
        (k("-1:1"), p(0.9, 0.4)),
    ]
}

fn verify(args: VerifyArgs) -> Result<i32> {
    if let Some(path) = &args.table {
        let table = read_csv(path)?;
        return Ok(match check_predictions(&table) {
            Ok(n) => {
                println!("{}: {n} predictions match the closed form", path.display());
                EXIT_OK
            }
            Err(e) => {
                eprintln!("FAIL {}: {e}", path.display());
                EXIT_FAILED
            }
        });
    }
    let exp = &args.experiment;
    let custom = exp.spec.is_some() || exp.kernel.is_some();
    let (scenarios, seeds): (Vec<_>, Vec<u64>) = if custom {
        let mut raw = exp.raw_spec()?;
        if exp.kind.is_none() {
            raw.set("kind", "invariants")?;
        }
        if exp.time.is_none() && exp.spec.is_none() {
            raw.set("t_final", "20")?;
        }
        let spec = raw.build()?;
        let seeds = (0..spec.replicas).map(|r| replica_seed(spec.seed, r)).collect();
        let mut setup = InvariantSetup::new(spec.kernel.clone(), spec.params);
        setup.horizon = spec.t_final;
        (vec![setup], seeds)
    } else {
        let master: u64 = parse_flag(&exp.seed, "seed", 0)?;
        let replicas: usize = parse_flag(&exp.replicas, "replicas", 20)?;
        let seeds = (0..replicas).map(|r| replica_seed(master, r)).collect();
        let setups = default_scenarios()
            .into_iter()
            .map(|(k, p)| InvariantSetup::new(k, p))
            .collect();
        (setups, seeds)
    };

    let mut csv = String::from("kernel,lambda,rho,check,runs,passed\n");
    let mut all_ok = true;
    for setup in &scenarios {
        for summary in run_suite(setup, &seeds) {
            let status = if summary.all_passed() { "PASS" } else { "FAIL" };
            all_ok &= summary.all_passed();
            println!(
                "{status} {:<22} kernel={} lambda={} rho={} {}/{}",
                summary.name,
                setup.kernel,
                setup.params.lambda(),
                setup.params.rho(),
                summary.passed,
                summary.runs
            );
            if let Some((seed, msg)) = &summary.first_failure {
                println!("     first failure: seed {seed}: {msg}");
            }
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                setup.kernel.to_string().replace(',', ";"),
                setup.params.lambda(),
                setup.params.rho(),
                summary.name,
                summary.runs,
                summary.passed
            ));
        }
    }
    debug_assert_eq!(CHECKS.len() * scenarios.len() + 1, csv.lines().count());
    if let Some(path) = &args.out {
        fs::write(path, csv)?;
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_FAILED })
}

fn parse_flag<T: std::str::FromStr>(value: &Option<String>, name: &str, default: T) -> Result<T> {
    match value {
        None => Ok(default),
        Some(s) => s
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("--{name}: invalid value `{s}`"))),
    }
}

fn sweep(args: SweepArgs) -> Result<i32> {
    let specs = parse_sweep(&read_spec_file(&args.spec)?)?;
    fs::create_dir_all(&args.out)?;
    let options = RunOptions {
        timings: args.timings,
        ..RunOptions::from_env()?
    };
    for (i, spec) in specs.iter().enumerate() {
        let table = run_experiment(spec, options)?;
        let path = args.out.join(format!("experiment_{i}.csv"));
        emit_csv(&table, &path)?;
        println!(
            "{} {} intervals [{}] -> {}",
            spec.kind,
            spec.kernel,
            format_intervals(&spec.intervals),
            path.display()
        );
    }
    Ok(EXIT_OK)
}
