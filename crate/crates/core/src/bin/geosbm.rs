use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geosbm::experiment::{self, Estimator, ExperimentConfig};

/// Perturbed stochastic block model laboratory.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One trial at `gamma`.
    Single(Overrides),
    /// Every (gamma, trial) cell of the grid, plus an aggregate table.
    Sweep(Overrides),
    /// Histograms of the perturbed, unperturbed and mean spectra.
    Spectra(Overrides),
    /// Exact and Monte Carlo trace moments of the kernel matrix.
    Moments(Overrides),
    /// Finite-size checks of the asymptotic assumptions.
    Regimes(Overrides),
    /// Expected and simulated isolated vertices of the pure kernel graph.
    Isolated(Overrides),
}

#[derive(Args, Clone)]
struct Overrides {
    /// Flat JSON config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "GEOSBM_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated gamma values.
    #[arg(long, value_delimiter = ',')]
    gamma_grid: Option<Vec<f64>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    p2: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// naive or davis_kahan.
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    known_mean: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    l_max: Option<usize>,
    #[arg(long)]
    dump_matrices: bool,
}

impl Overrides {
    fn resolve(&self) -> geosbm::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    c.$field = v;
                }
            )*};
        }
        set!(seed, trials, n, p1, p2, kappa, gamma, epsilon, bins, l_max);
        if let Some(g) = &self.gamma_grid {
            c.gamma_grid = Some(g.clone());
        }
        if let Some(e) = &self.estimator {
            c.estimator = e.parse::<Estimator>()?;
        }
        if self.known_mean.is_some() {
            c.known_mean = self.known_mean;
        }
        if self.dump_matrices {
            c.dump_matrices = true;
        }
        if let Some(d) = &self.out_dir {
            c.out_dir = Some(d.display().to_string());
        }
        Ok(c)
    }
}

fn run(command: Command) -> geosbm::Result<Vec<PathBuf>> {
    match command {
        Command::Single(o) => {
            let c = o.resolve()?;
            let record = experiment::run_single(&c)?;
            experiment::write_single(&experiment::output_dir(None, &c), &c, &record)
        }
        Command::Sweep(o) => {
            let c = o.resolve()?;
            let sweep = experiment::run_sweep(&c)?;
            for f in &sweep.failures {
                eprintln!(
                    "cell gamma={} stream={} failed: {}",
                    f.gamma, f.seed.stream, f.reason
                );
            }
            experiment::write_sweep(&experiment::output_dir(None, &c), &c, &sweep)
        }
        Command::Spectra(o) => {
            let c = o.resolve()?;
            let (report, matrices) = experiment::dump_spectra(&c)?;
            experiment::write_spectra(&experiment::output_dir(None, &c), &c, &report, &matrices)
        }
        Command::Moments(o) => {
            let c = o.resolve()?;
            let report = experiment::run_moments(c.n, c.gamma, c.l_max, c.trials, c.seed)?;
            experiment::write_moments(&experiment::output_dir(None, &c), &c, &report)
        }
        Command::Regimes(o) => {
            let c = o.resolve()?;
            let entries = experiment::run_regimes(&c)?;
            let dir = experiment::output_dir(None, &c);
            Ok(vec![experiment::write_report(
                &dir,
                "regimes.json",
                &c,
                &entries,
            )?])
        }
        Command::Isolated(o) => {
            let c = o.resolve()?;
            let report = experiment::run_isolated(c.n, c.gamma, c.trials, c.seed)?;
            let dir = experiment::output_dir(None, &c);
            Ok(vec![experiment::write_report(
                &dir,
                "isolated.json",
                &c,
                &report,
            )?])
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}
