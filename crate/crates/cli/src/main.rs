use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quadclt::experiments::{self, LEMMA_IDS};
use quadclt::{CliError, ExperimentConfig, Report};

#[derive(Parser)]
#[command(name = "quadclt", version, about = "Exact-law, kernel and Whittle experiments for Toeplitz quadratic forms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Overrides the config's master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's out_dir, else results/<experiment>).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check one kernel lemma over a list of sizes.
    Lemma {
        /// One of fejer-mass, convolution, envelope, bessel, delta, one-denom, schur.
        id: String,
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512,1024")]
        n: Vec<usize>,
        /// Take model and weight from this config instead of the flags below.
        #[arg(long)]
        config: Option<PathBuf>,
        /// FARIMA memory parameter of the density.
        #[arg(long, default_value_t = 0.2)]
        d_frac: f64,
        /// Power-law exponent of the weight.
        #[arg(long, default_value_t = 0.3)]
        beta: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo study of the Whittle estimator on FARIMA paths.
    Whittle {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 500)]
        reps: usize,
        #[arg(long, default_value_t = 0.2)]
        d_frac: f64,
        /// Also write every replicate's estimate.
        #[arg(long)]
        dump: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn list(ns: &[usize]) -> String {
    ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ")
}

fn lemma_config(n: &[usize], d_frac: f64, beta: f64) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::from_toml(&format!(
        "experiment = \"kernels\"\nn_list = [{}]\n\n[model]\nkind = \"farima\"\nd_frac = {d_frac:?}\n\n[weight]\nkind = \"power-law\"\nbeta = {beta:?}\n",
        list(n)
    ))
}

fn whittle_config(n: &[usize], reps: usize, d_frac: f64, dump: bool) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::from_toml(&format!(
        "experiment = \"whittle-mc\"\nn_list = [{}]\nreplicates = {reps}\n\n[model]\nkind = \"farima\"\nd_frac = {d_frac:?}\n\n[whittle]\ndump_estimates = {dump}\n",
        list(n)
    ))
}

fn setup_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Config("--threads: must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    Ok(())
}

fn finish(cfg: &ExperimentConfig, report: &Report, out_dir: &Path) -> Result<bool, CliError> {
    let files = report.write(out_dir, &cfg.fingerprint(), cfg.master_seed)?;
    for c in &report.checks {
        println!("{}", c.line());
    }
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(report.passed())
}

fn apply(cfg: &mut ExperimentConfig, common: &Common) -> PathBuf {
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    common
        .out_dir
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results").join(cfg.experiment.as_str()))
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    match cli.cmd {
        Cmd::Run { config, common } => {
            setup_threads(common.threads)?;
            let mut cfg = ExperimentConfig::from_file(&config)?;
            let out = apply(&mut cfg, &common);
            let report = experiments::run(&cfg)?;
            finish(&cfg, &report, &out)
        }
        Cmd::Lemma {
            id,
            n,
            config,
            d_frac,
            beta,
            common,
        } => {
            setup_threads(common.threads)?;
            if !LEMMA_IDS.contains(&id.as_str()) {
                return Err(CliError::Config(format!(
                    "lemma: unknown id {id:?} (expected one of {})",
                    LEMMA_IDS.join(", ")
                )));
            }
            let mut cfg = match config {
                Some(p) => {
                    let mut c = ExperimentConfig::from_file(&p)?;
                    c.n_list = n;
                    c.validate()?;
                    c
                }
                None => lemma_config(&n, d_frac, beta)?,
            };
            let out = apply(&mut cfg, &common);
            let report = experiments::lemmas(&cfg, &[id.as_str()])?;
            finish(&cfg, &report, &out)
        }
        Cmd::Whittle {
            n,
            reps,
            d_frac,
            dump,
            common,
        } => {
            setup_threads(common.threads)?;
            let mut cfg = whittle_config(&n, reps, d_frac, dump)?;
            let out = apply(&mut cfg, &common);
            let report = experiments::whittle_mc(&cfg)?;
            finish(&cfg, &report, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
