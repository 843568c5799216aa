//! Command-line front end. Every run writes its resolved configuration next
//! to its output so that `--config <file>` reproduces it bit-exactly.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use specgap::config::{execute, parse_b, parse_phi, Command, Operator, RunConfig, RunOutput};
use specgap::error::Error;
use specgap::kernels::KineticKernel;

#[derive(Parser)]
#[command(name = "specgap", version, about = "Spectral-gap laboratory for kinetic collision operators")]
struct Cli {
    /// Re-run from a previously emitted config file; other flags are ignored.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Cap the worker count (also SPECGAP_THREADS); does not change results.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Args)]
struct KernelArgs {
    /// Power-law exponent of the kinetic kernel (shorthand for --phi power:<g>).
    #[arg(long)]
    gamma: Option<f64>,

    /// Kinetic kernel: power:<g> or constant:<v>.
    #[arg(long)]
    phi: Option<String>,

    /// Angular kernel: constant:<v>, linear or grazing:<eps>.
    #[arg(long)]
    b: Option<String>,

    /// Velocity-space dimension.
    #[arg(long, default_value_t = 3)]
    dim: usize,

    /// Output file; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Explicit constants and gap lower bounds.
    Bounds {
        #[command(flatten)]
        kernels: KernelArgs,
        /// Threshold R of the kinetic lower bound; optimized when absent.
        #[arg(long)]
        r: Option<f64>,
    },
    /// Galerkin spectral gap with a truncation convergence table.
    Gap {
        #[command(flatten)]
        kernels: KernelArgs,
        #[arg(long, value_parser = ["boltzmann", "landau"], default_value = "boltzmann")]
        operator: String,
        #[arg(long, default_value_t = 8)]
        truncation: usize,
        #[arg(long, value_parser = ["unit-mass", "paper-raw"], default_value = "unit-mass")]
        normalization: String,
    },
    /// Randomized inequality suites; exits 3 on any fail verdict.
    Verify {
        #[command(flatten)]
        kernels: KernelArgs,
        /// cmcv, theorem1, theorem2, lemma1, lemma2 or lemma3; all by default.
        #[arg(long)]
        suite: Option<String>,
        /// Functions per suite.
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Degree of the random-expansion space.
        #[arg(long, default_value_t = 6)]
        degree: usize,
        /// Added to every quadrature order.
        #[arg(long, default_value_t = 0)]
        order_boost: usize,
    },
    /// Grazing-collision sweep toward the Landau dissipation.
    Grazing {
        #[command(flatten)]
        kernels: KernelArgs,
        /// Comma-separated decreasing eps values.
        #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.2, 0.1, 0.05])]
        eps: Vec<f64>,
        /// Sweep |lambda_0(b_eps)| instead of a dissipation functional.
        #[arg(long)]
        lambda0: bool,
        /// Test function: v1v2, speed2, coordinate:<k> or constant.
        #[arg(long, default_value = "v1v2")]
        h: String,
        #[arg(long, default_value_t = 8)]
        velocity_order: usize,
        #[arg(long, default_value_t = 32)]
        theta_order: usize,
    },
}

fn kernel_overrides(config: &mut RunConfig, args: &KernelArgs) -> Result<(), Error> {
    config.dim = args.dim;
    if let Some(gamma) = args.gamma {
        config.phi = KineticKernel::power(gamma);
    }
    if let Some(spec) = &args.phi {
        config.phi = parse_phi(spec)?;
    }
    if let Some(spec) = &args.b {
        config.b = parse_b(spec)?;
    }
    config.output = args
        .output
        .as_ref()
        .map(|p| p.to_string_lossy().into_owned());
    Ok(())
}

fn build_config(cmd: &Cmd) -> Result<RunConfig, Error> {
    match cmd {
        Cmd::Bounds { kernels, r } => {
            let mut config = RunConfig::new(Command::Bounds);
            kernel_overrides(&mut config, kernels)?;
            config.r = *r;
            Ok(config)
        }
        Cmd::Gap {
            kernels,
            operator,
            truncation,
            normalization,
        } => {
            let mut config = RunConfig::new(Command::Gap);
            kernel_overrides(&mut config, kernels)?;
            config.operator = match operator.as_str() {
                "landau" => Operator::Landau,
                _ => Operator::Boltzmann,
            };
            config.truncation = *truncation;
            config.normalization = serde_json::from_value(serde_json::Value::String(
                normalization.clone(),
            ))
            .map_err(|e| Error::Config(e.to_string()))?;
            Ok(config)
        }
        Cmd::Verify {
            kernels,
            suite,
            n,
            seed,
            degree,
            order_boost,
        } => {
            let mut config = RunConfig::new(Command::Verify);
            kernel_overrides(&mut config, kernels)?;
            config.suite = suite.as_deref().map(str::parse).transpose()?;
            config.count = *n;
            config.seed = *seed;
            config.degree = *degree;
            config.order_boost = *order_boost;
            Ok(config)
        }
        Cmd::Grazing {
            kernels,
            eps,
            lambda0,
            h,
            velocity_order,
            theta_order,
        } => {
            let mut config = RunConfig::new(Command::Grazing);
            kernel_overrides(&mut config, kernels)?;
            config.eps_list = eps.clone();
            config.lambda0 = *lambda0;
            config.test_function = h.clone();
            config.velocity_order = *velocity_order;
            config.theta_order = *theta_order;
            Ok(config)
        }
    }
}

fn config_sibling(output: Option<&str>) -> PathBuf {
    match output {
        Some(path) => {
            let p = Path::new(path);
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            p.with_file_name(format!("{stem}.config.json"))
        }
        None => PathBuf::from("specgap.config.json"),
    }
}

fn emit(config: &RunConfig, out: &RunOutput) -> Result<(), Error> {
    match &config.output {
        Some(path) => std::fs::write(path, &out.payload)?,
        None => print!("{}", out.payload),
    }
    std::fs::write(config_sibling(config.output.as_deref()), config.to_json()?)?;
    Ok(())
}

fn exit_code_of(err: &Error) -> u8 {
    match err {
        Error::Hypothesis(_) => 2,
        _ => 1,
    }
}

fn run() -> Result<u8, Error> {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("SPECGAP_THREADS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);
    if threads > 0 {
        // ignore the error if a pool already exists; results do not depend
        // on the worker count
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let config = match (&cli.config, &cli.command) {
        (Some(path), _) => RunConfig::from_json(&std::fs::read_to_string(path)?)?,
        (None, Some(cmd)) => build_config(cmd)?,
        (None, None) => {
            return Err(Error::Config(
                "a subcommand or --config <file> is required".into(),
            ))
        }
    };
    let out = execute(&config)?;
    emit(&config, &out)?;
    Ok(if out.failures > 0 { 3 } else { 0 })
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_of(&err))
        }
    }
}
