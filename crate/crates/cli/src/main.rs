//! `hbadc`: Monte-Carlo experiments for joint ADC bit allocation and hybrid
//! combining. Writes one CSV row per scheme (and sweep point).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hbadc_core::harness::{self, parse_key_values, ExperimentConfig, SweepSpec, SweepVar};
use hbadc_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Energy-efficiency experiments for hybrid combiners with low-resolution ADCs.
///
/// Settings are read from the config file first, then from flags; the SEED
/// environment variable overrides both for the seed.
#[derive(Debug, Parser)]
#[command(name = "hbadc", version)]
struct Cli {
    /// Flat key=value file using the flag names as keys.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Transmit antennas.
    #[arg(long)]
    ntx: Option<String>,
    /// Receive antennas.
    #[arg(long)]
    nrx: Option<String>,
    /// RF chains.
    #[arg(long)]
    lr: Option<String>,
    /// Data streams.
    #[arg(long)]
    ns: Option<String>,
    /// Channel clusters.
    #[arg(long)]
    ncl: Option<String>,
    /// Rays per cluster.
    #[arg(long)]
    nray: Option<String>,
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Rate/power trade-off weight.
    #[arg(long)]
    gamma: Option<String>,
    /// ADMM penalty parameter.
    #[arg(long)]
    alpha: Option<String>,
    /// ADMM iterations.
    #[arg(long)]
    nmax: Option<String>,
    #[arg(long)]
    bmin: Option<String>,
    #[arg(long)]
    bmax: Option<String>,
    /// Monte-Carlo trials per point.
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Comma list of admm, hybrid1, hybrid8, digital, bf.
    #[arg(long)]
    schemes: Option<String>,
    /// Swept variable: snr_db, n_rx, n_tx or gamma.
    #[arg(long)]
    sweep: Option<String>,
    /// Comma list of values for --sweep.
    #[arg(long = "sweep-values", allow_hyphen_values = true)]
    sweep_values: Option<String>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pick γ per trial from a log grid over [0.001, 0.1] by best EE.
    #[arg(long = "gamma-search")]
    gamma_search: bool,
    /// EE aggregation: ratio-mean (mean of per-trial EE) or mean-ratio.
    #[arg(long = "ee-agg")]
    ee_agg: Option<String>,
}

/// Everything a run needs, after merging file, flags and environment.
#[derive(Debug)]
struct Plan {
    cfg: ExperimentConfig,
    sweep: Option<SweepSpec>,
    out: Option<PathBuf>,
}

#[derive(Debug, Default)]
struct Extras {
    sweep: Option<String>,
    sweep_values: Option<String>,
    out: Option<PathBuf>,
}

fn apply(cfg: &mut ExperimentConfig, extras: &mut Extras, key: &str, value: &str) -> Result<(), Error> {
    if cfg.set(key, value)? {
        return Ok(());
    }
    match key {
        "sweep" => extras.sweep = Some(value.to_string()),
        "sweep-values" => extras.sweep_values = Some(value.to_string()),
        "out" => extras.out = Some(PathBuf::from(value)),
        _ => return Err(Error::Config(format!("unknown setting '{key}'"))),
    }
    Ok(())
}

fn plan(cli: Cli, seed_env: Option<String>) -> Result<Plan, Error> {
    let mut cfg = ExperimentConfig::default();
    let mut extras = Extras::default();

    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
        for (k, v) in parse_key_values(&text)? {
            apply(&mut cfg, &mut extras, &k, &v)?;
        }
    }

    let flags = [
        ("ntx", cli.ntx),
        ("nrx", cli.nrx),
        ("lr", cli.lr),
        ("ns", cli.ns),
        ("ncl", cli.ncl),
        ("nray", cli.nray),
        ("snr-db", cli.snr_db),
        ("gamma", cli.gamma),
        ("alpha", cli.alpha),
        ("nmax", cli.nmax),
        ("bmin", cli.bmin),
        ("bmax", cli.bmax),
        ("trials", cli.trials),
        ("seed", cli.seed),
        ("schemes", cli.schemes),
        ("ee-agg", cli.ee_agg),
        ("sweep", cli.sweep),
        ("sweep-values", cli.sweep_values),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            apply(&mut cfg, &mut extras, k, &v)?;
        }
    }
    if cli.gamma_search {
        cfg.gamma_search = true;
    }
    if let Some(out) = cli.out {
        extras.out = Some(out);
    }
    if let Some(seed) = seed_env {
        cfg.set("seed", &seed).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("SEED environment variable: {m}")),
            other => other,
        })?;
    }

    let sweep = match (extras.sweep, extras.sweep_values) {
        (None, None) => None,
        (Some(var), Some(values)) => {
            let variable: SweepVar = var.parse()?;
            let values = values
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::Config(format!("sweep-values: cannot parse '{s}'")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(SweepSpec::new(variable, values)?)
        }
        (Some(_), None) => return Err(Error::Config("--sweep needs --sweep-values".into())),
        (None, Some(_)) => return Err(Error::Config("--sweep-values needs --sweep".into())),
    };

    cfg.validate()?;
    Ok(Plan {
        cfg,
        sweep,
        out: extras.out,
    })
}

fn execute(plan: &Plan) -> Result<usize, Error> {
    let rows = match &plan.sweep {
        Some(spec) => harness::sweep(&plan.cfg, spec)?,
        None => harness::run_trials(&plan.cfg)?,
    };
    match &plan.out {
        Some(path) => harness::emit_csv(&rows, path)?,
        None => harness::write_csv(&rows, std::io::stdout().lock()).map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })?,
    }
    Ok(rows.len())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed_env = std::env::var("SEED").ok().filter(|s| !s.trim().is_empty());
    let plan = match plan(cli, seed_env) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("hbadc: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match execute(&plan) {
        Ok(n) => {
            if let Some(path) = &plan.out {
                eprintln!("hbadc: wrote {n} rows to {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hbadc: {e}");
            if e.is_config() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_RUNTIME)
            }
        }
    }
}
