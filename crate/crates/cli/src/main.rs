//! Command-line front end: each calibration step as a standalone subcommand,
//! plus `simulate`, `risk` and the full `run` pipeline. All settings come
//! from a key-value config file; flags override it where that makes sense.
//! Parameter artifacts are key-value files, numeric artifacts CSV.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// `println!` that ignores a closed stdout (e.g. piping into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

use clap::{Args, Parser, Subcommand};
use sparkspot::config::{
    corr_to_kv, read_model_spec, seasonal_to_kv, theta_to_kv, write_kv, PipelineConfig,
};
use sparkspot::marketdata::Commodity;
use sparkspot::mle::{self, LikelihoodConfig};
use sparkspot::pipeline::{
    self, calibrate_correlation, calibrate_seasonal, correlation_diag_csv, paths_to_csv,
    risk_table_csv, seasonal_diag_csv,
};
use sparkspot::risk::{run_risk, PortfolioSpec, RiskReport};
use sparkspot::simulate::simulate_paths;
use sparkspot::{Error, Result};

#[derive(Parser)]
#[command(name = "sparkspot", version, about = "Joint gas/electricity spot-price model: calibration, simulation, risk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration file (key = value lines)
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Fit and persist the log-seasonal trend of one or both commodities
    FitSeasonality {
        #[command(flatten)]
        common: Common,
        /// gas, electricity or both
        #[arg(long, default_value = "both")]
        commodity: String,
    },
    /// Fit the residual ACF/CCF mixture and derive the equilibrium volatility
    FitCorrelation {
        #[command(flatten)]
        common: Common,
    },
    /// Maximum-likelihood fit of one commodity's spike-factor parameters
    FitMle {
        #[command(flatten)]
        common: Common,
        /// Commodity the parameters belong to
        #[arg(long, default_value = "gas")]
        commodity: String,
        /// Spot CSV to fit (defaults to the commodity's configured input)
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        /// Likelihood order: 0 = stationary marginal, 1 = one-step transition
        #[arg(long)]
        order: Option<u8>,
        /// Spike mean-reversion rate λ_j (per year)
        #[arg(long, value_name = "RATE")]
        lambda_spike: Option<f64>,
        /// Equilibrium mean-reversion rate λ_z (per year)
        #[arg(long, value_name = "RATE")]
        lambda_z: Option<f64>,
        /// Equilibrium volatility σ_z
        #[arg(long, value_name = "VOL")]
        sigma_z: Option<f64>,
        /// Gauss–Hermite node count
        #[arg(long)]
        nodes: Option<usize>,
        /// Output parameter file (defaults to <output_dir>/theta_<j>.conf)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Simulate price paths from a calibrated model file
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Monte Carlo seed
        #[arg(long)]
        seed: u64,
        /// Calibrated model file (defaults to <output_dir>/model.conf)
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        /// Override the model case: full, independent or gaussian
        #[arg(long)]
        case: Option<String>,
        /// Override the scheme: euler or milstein
        #[arg(long)]
        scheme: Option<String>,
        /// Output CSV (defaults to <output_dir>/paths_<case>.csv)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Price the spark-spread portfolio and report VaR per case × horizon
    Risk {
        #[command(flatten)]
        common: Common,
        /// Monte Carlo seed
        #[arg(long)]
        seed: u64,
        /// Calibrated model file (defaults to <output_dir>/model.conf)
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        /// Output CSV (defaults to <output_dir>/risk.csv)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Full pipeline: calibrate, simulate every case, build the risk table
    Run {
        #[command(flatten)]
        common: Common,
        /// Monte Carlo seed (overrides the config's seed)
        #[arg(long)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::FitSeasonality { common, commodity } => fit_seasonality(&common, &commodity),
        Command::FitCorrelation { common } => fit_correlation(&common),
        Command::FitMle {
            common,
            commodity,
            input,
            order,
            lambda_spike,
            lambda_z,
            sigma_z,
            nodes,
            out,
        } => fit_mle_cmd(
            &common,
            &commodity,
            input,
            order,
            (lambda_spike, lambda_z, sigma_z),
            nodes,
            out,
        ),
        Command::Simulate {
            common,
            seed,
            model,
            case,
            scheme,
            out,
        } => simulate_cmd(&common, seed, model, case, scheme, out),
        Command::Risk {
            common,
            seed,
            model,
            out,
        } => risk_cmd(&common, seed, model, out),
        Command::Run { common, seed } => run_cmd(&common, seed),
    }
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let cfg = PipelineConfig::from_file(&common.config)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|source| Error::Io {
        path: cfg.output_dir.clone(),
        source,
    })?;
    Ok(cfg)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// (input path, kv prefix, artifact stem) for one commodity.
fn commodity_slots(cfg: &PipelineConfig, c: Commodity) -> (PathBuf, &'static str, &'static str) {
    match c {
        Commodity::Gas => (cfg.gas_csv.clone(), "seasonal_g", "seasonal_gas"),
        Commodity::Electricity => (cfg.elec_csv.clone(), "seasonal_e", "seasonal_elec"),
    }
}

fn fit_seasonality(common: &Common, commodity: &str) -> Result<()> {
    let cfg = load_config(common)?;
    let selected: Vec<Commodity> = match commodity.trim().to_ascii_lowercase().as_str() {
        "both" => vec![Commodity::Gas, Commodity::Electricity],
        other => vec![other.parse()?],
    };
    for c in selected {
        let (input, prefix, stem) = commodity_slots(&cfg, c);
        let d = calibrate_seasonal(&cfg, &input, c)?;
        let conf = cfg.output_dir.join(format!("{stem}.conf"));
        write_kv(
            &conf,
            &format!("log-seasonal fit for {c}\ninput: {}", input.display()),
            &seasonal_to_kv(prefix, &d.seasonal),
        )?;
        write_text(
            &cfg.output_dir.join(format!("{stem}.csv")),
            &seasonal_diag_csv(&d.series, &d.seasonal),
        )?;
        say!(
            "{c}: a={:.4} b={:.3e}, {} harmonic(s) kept, residual var {:.4} -> {}",
            d.seasonal.a,
            d.seasonal.b,
            d.seasonal.harmonics.len(),
            sparkspot::stats::variance_pop(&d.residuals),
            conf.display()
        );
    }
    Ok(())
}

fn deseasonalize_both(cfg: &PipelineConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = calibrate_seasonal(cfg, &cfg.gas_csv, Commodity::Gas)?;
    let e = calibrate_seasonal(cfg, &cfg.elec_csv, Commodity::Electricity)?;
    if g.residuals.len() != e.residuals.len() {
        return Err(Error::invalid(format!(
            "series must be aligned: {} gas vs {} electricity observations",
            g.residuals.len(),
            e.residuals.len()
        )));
    }
    Ok((g.residuals, e.residuals))
}

fn fit_correlation(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let (yg, ye) = deseasonalize_both(&cfg)?;
    let corr = calibrate_correlation(&cfg, &yg, &ye)?;
    let conf = cfg.output_dir.join("correlation.conf");
    write_kv(
        &conf,
        &format!(
            "ACF/CCF mixture fit, {} lags\ninputs: {} | {}",
            cfg.max_lag,
            cfg.gas_csv.display(),
            cfg.elec_csv.display()
        ),
        &corr_to_kv("corr", &corr),
    )?;
    write_text(
        &cfg.output_dir.join("correlation.csv"),
        &correlation_diag_csv(&cfg, &yg, &ye, &corr)?,
    )?;
    say!(
        "rates: lambda_g={:.3} lambda_e={:.3} lambda_z={:.3}",
        corr.lambda_g, corr.lambda_e, corr.lambda_z
    );
    say!(
        "weights: phi_g={:.3} phi_e={:.3} phi_ge={:.3}, sigma_z={:.4} -> {}",
        corr.phi_g,
        corr.phi_e,
        corr.phi_ge,
        corr.sigma_z,
        conf.display()
    );
    Ok(())
}

fn fit_mle_cmd(
    common: &Common,
    commodity: &str,
    input: Option<PathBuf>,
    order: Option<u8>,
    rates: (Option<f64>, Option<f64>, Option<f64>),
    nodes: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    let cfg = load_config(common)?;
    let c: Commodity = commodity.parse()?;
    let (default_input, _, _) = commodity_slots(&cfg, c);
    let input = input.unwrap_or(default_input);
    let order = order.unwrap_or(cfg.mle_order);
    let nodes = nodes.unwrap_or(cfg.quad_nodes);

    let (lambda_spike, lambda_z, sigma_z) = match rates {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        (None, None, None) => {
            // no rates supplied: take them from a fresh correlation fit
            let (yg, ye) = deseasonalize_both(&cfg)?;
            let corr = calibrate_correlation(&cfg, &yg, &ye)?;
            let lambda_j = match c {
                Commodity::Gas => corr.lambda_g,
                Commodity::Electricity => corr.lambda_e,
            };
            (lambda_j, corr.lambda_z, corr.sigma_z)
        }
        _ => {
            return Err(Error::invalid(
                "supply --lambda-spike, --lambda-z and --sigma-z together, \
                 or none of them to take the rates from a correlation fit",
            ))
        }
    };

    let d = calibrate_seasonal(&cfg, &input, c)?;
    let mut like = LikelihoodConfig::with_sigma_z(
        order,
        sigma_z,
        lambda_z,
        lambda_spike,
        1.0 / cfg.days_per_year as f64,
    )?;
    like.quad_nodes = nodes;
    let fit = mle::fit_mle(&d.residuals, &like)?;

    let prefix = match c {
        Commodity::Gas => "theta_g",
        Commodity::Electricity => "theta_e",
    };
    let out = out.unwrap_or_else(|| cfg.output_dir.join(format!("{prefix}.conf")));
    let mut pairs = theta_to_kv(prefix, &fit.theta);
    pairs.push(("log_likelihood".into(), fit.log_likelihood.to_string()));
    pairs.push(("converged".into(), fit.converged.to_string()));
    write_kv(
        &out,
        &format!(
            "spike-factor mle for {c} (order {order}, {nodes} nodes)\n\
             input: {}\nlambda_spike = {lambda_spike}, lambda_z = {lambda_z}, sigma_z = {sigma_z}",
            input.display()
        ),
        &pairs,
    )?;
    say!(
        "theta_{c}: alpha={:.4} beta={:.4} delta={:.4} mu={:.4}",
        fit.theta.alpha, fit.theta.beta, fit.theta.delta, fit.theta.loc
    );
    say!(
        "log-likelihood {:.4} ({} evaluations{}) -> {}",
        fit.log_likelihood,
        fit.evaluations,
        if fit.converged { "" } else { ", NOT converged" },
        out.display()
    );
    Ok(())
}

fn model_path(cfg: &PipelineConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| cfg.output_dir.join("model.conf"))
}

fn simulate_cmd(
    common: &Common,
    seed: u64,
    model: Option<PathBuf>,
    case: Option<String>,
    scheme: Option<String>,
    out: Option<PathBuf>,
) -> Result<()> {
    let cfg = load_config(common)?;
    let mut spec = read_model_spec(&model_path(&cfg, model))?;
    if let Some(case) = case {
        spec.case = case.parse()?;
    }
    let scheme = match scheme {
        Some(s) => s.parse()?,
        None => cfg.scheme,
    };
    let paths = simulate_paths(&spec, cfg.n_paths, cfg.n_steps, cfg.dt, seed, scheme)?;
    let out = out.unwrap_or_else(|| cfg.output_dir.join(format!("paths_{}.csv", spec.case)));
    write_text(&out, &paths_to_csv(&paths))?;
    say!(
        "{} {} paths x {} steps (dt {:.5}, {scheme}, seed {seed}) -> {}",
        spec.case,
        cfg.n_paths,
        cfg.n_steps,
        cfg.dt,
        out.display()
    );
    Ok(())
}

fn print_risk_rows(rows: &[(f64, RiskReport)]) {
    say!(
        "{:<12} {:>8} {:>12} {:>12} {:>12}",
        "case", "horizon", "price", "ci_half", "var"
    );
    for (horizon, r) in rows {
        say!(
            "{:<12} {:>8.3} {:>12.4} {:>12.4} {:>12.4}",
            r.case.to_string(),
            horizon,
            r.price,
            r.ci_halfwidth,
            r.var_alpha
        );
    }
}

fn risk_cmd(
    common: &Common,
    seed: u64,
    model: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<()> {
    let cfg = load_config(common)?;
    let model = read_model_spec(&model_path(&cfg, model))?;
    let mut rows = Vec::new();
    for &case in &cfg.cases {
        let mut spec = model.clone();
        spec.case = case;
        for &horizon in &cfg.horizons {
            let portfolio = PortfolioSpec {
                heat_rate: cfg.heat_rate,
                gen_cost: cfg.gen_cost,
                rate: cfg.rate,
                horizon,
            };
            rows.push((horizon, run_risk(&spec, &portfolio, cfg.n_sims, seed, cfg.alpha)?));
        }
    }
    let out = out.unwrap_or_else(|| cfg.output_dir.join("risk.csv"));
    write_text(&out, &risk_table_csv(&rows, seed))?;
    print_risk_rows(&rows);
    say!("alpha {:.3}, {} sims/row -> {}", cfg.alpha, cfg.n_sims, out.display());
    Ok(())
}

fn run_cmd(common: &Common, seed: u64) -> Result<()> {
    let mut cfg = load_config(common)?;
    cfg.seed = seed;
    let rows = pipeline::run_pipeline(&cfg)?;
    print_risk_rows(&rows);
    say!("artifacts in {}", cfg.output_dir.display());
    Ok(())
}
