use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bayes_ldp::accounting::FilterMode;
use bayes_ldp_cli::config::{ConfigError, ExperimentConfig, Scenario};
use bayes_ldp_cli::experiments::{self, ExperimentError, Format};
use clap::{Args, Parser, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "bayes-ldp", version, about = "Realized privacy loss experiments")]
struct Cli {
    #[arg(value_enum)]
    scenario: Scenario,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Bayesian,
    Simplified,
}

#[derive(Args, Debug)]
struct Flags {
    #[arg(long)]
    budget_eps: Option<f64>,
    #[arg(long)]
    query_eps: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(long)]
    bnb_delta: Option<f64>,
    /// Universe size for randomized-response scenarios
    #[arg(long)]
    m: Option<usize>,
    /// Largest repetition count for walk-expected and estimator-compare
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, value_enum)]
    filter_mode: Option<Mode>,
    #[arg(long)]
    max_queries: Option<usize>,
    /// Emit p10/p50/p90 accepted-query counts per loss level instead of the raw trace
    #[arg(long)]
    curve: bool,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn build_config(scenario: Scenario, f: &Flags) -> Result<ExperimentConfig, ConfigError> {
    let mut c = match &f.config {
        Some(p) => {
            let mut c = ExperimentConfig::load(p)?;
            if c.scenario != scenario {
                return Err(ConfigError::Invalid(format!(
                    "config is for {:?}, command is {:?}",
                    c.scenario, scenario
                )));
            }
            c.scenario = scenario;
            c
        }
        None => ExperimentConfig::new(scenario),
    };
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => {
            $(if let Some(v) = f.$flag { c.$field = v; })*
        };
    }
    set!(budget_eps => budget_eps, query_eps => per_query_eps, trials => trials, seed => seed,
        group_size => group_size, bnb_delta => bnb_delta, m => m, k => k, max_queries => max_queries);
    if let Some(m) = f.filter_mode {
        c.filter_mode = match m {
            Mode::Bayesian => FilterMode::Bayesian,
            Mode::Simplified => FilterMode::Simplified,
        };
    }
    c.validate()?;
    Ok(c)
}

/// Loss levels 0.1, 0.2, ... up to the budget.
fn eps_grid(budget: f64) -> Vec<f64> {
    (1..).map(|i| i as f64 * 0.1).take_while(|e| *e <= budget + 1e-9).collect()
}

/// Returns whether every bound computation converged.
fn run(cfg: &ExperimentConfig, curve: bool, format: Format, out: &mut dyn Write) -> Result<bool, ExperimentError> {
    match cfg.scenario {
        Scenario::RrCompose | Scenario::LinregCompose | Scenario::LogregCompose => {
            let r = experiments::run_composition_experiment(cfg)?;
            if curve {
                let c = experiments::percentile_curve(&r.rows, &eps_grid(cfg.budget_eps))?;
                experiments::write_rows(&c, format, out)?;
            } else {
                experiments::write_rows(&r.rows, format, out)?;
            }
            Ok(r.nonconverged == 0)
        }
        Scenario::Healthcare => {
            let rows = experiments::healthcare_scenario(cfg)?;
            experiments::write_rows(&rows, format, out)?;
            Ok(rows.iter().all(|r| r.converged))
        }
        Scenario::Meanvar => {
            experiments::write_rows(&experiments::meanvar_scenario(cfg.per_query_eps)?, format, out)?;
            Ok(true)
        }
        Scenario::WalkExpected => {
            experiments::write_rows(&experiments::walk_expected(cfg)?, format, out)?;
            Ok(true)
        }
        Scenario::EstimatorCompare => {
            experiments::write_rows(&experiments::estimator_rows(cfg)?, format, out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(cli.scenario, &cli.flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut out: Box<dyn Write> = match &cli.flags.output {
        Some(p) => match File::create(p) {
            Ok(f) => Box::new(BufWriter::new(f)),
            Err(e) => {
                eprintln!("error: cannot create {}: {e}", p.display());
                return ExitCode::from(1);
            }
        },
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let res = run(&cfg, cli.flags.curve, cli.flags.format, &mut out);
    if let Err(e) = out.flush() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: branch-and-bound did not converge for some bounds");
            ExitCode::from(3)
        }
        Err(ExperimentError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
