//! Command-line front end: run the benchmark studies, calibrate noise,
//! dump tangent-noise samples, and render plots. All logic lives in the
//! library; this binary only parses arguments and wires files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use dp_riemopt::accounting::{calibrate_iterative, MomentsLedger, PrivacyBudget};
use dp_riemopt::experiments::{
    parse_aggregates_csv, parse_rows_csv, plot_excess_risk_svg, run_experiment,
    write_aggregates_csv, write_rows_csv, AggregateRow, ExperimentConfig, ExperimentKind, Method,
};
use dp_riemopt::manifold::Geometry;
use dp_riemopt::sampling::{
    mh_tangent_chain, sample_tangent_gaussian, MhParams, RngStream, StreamId,
};
use dp_riemopt::spd::Spd;
use dp_riemopt::sphere::Sphere;

const OUT_DIR_ENV: &str = "DP_RIEMOPT_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "dp-riemopt",
    about = "Differentially private Riemannian optimization benchmarks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the leading-eigenvector study on the sphere.
    RunPca(RunArgs),
    /// Run the Fréchet-mean study on the SPD manifold.
    RunFrechet(RunArgs),
    /// Print the iterative noise calibration and the audited epsilon.
    Calibrate(CalibrateArgs),
    /// Dump tangent-space Gaussian draws as CSV coordinates.
    SampleNoise(SampleNoiseArgs),
    /// Render an excess-risk SVG from a results or summary CSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file (keys follow the ExperimentConfig schema).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for results.csv / summary.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Planted eigengap (pca only).
    #[arg(long)]
    nu: Option<f64>,
    /// Ambient dimension d+1 (pca only).
    #[arg(long)]
    dim: Option<usize>,
    /// Matrix size r (frechet only).
    #[arg(long)]
    r: Option<usize>,
    /// Domain diameter (frechet only).
    #[arg(long)]
    diameter: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated list among dp-rgd, dp-pgd, dp-fm, non-private.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Use the published formulas verbatim (looser Lipschitz estimate,
    /// half-scale mean gradient, MH noise sampling).
    #[arg(long)]
    paper_faithful: bool,
    /// Also render an SVG at this path.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Worker threads for the harness (default: rayon's choice).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long = "T", visible_alias = "t")]
    t: usize,
    #[arg(long = "L0", visible_alias = "l0")]
    l0: f64,
    /// Batch size; defaults to n (full gradient).
    #[arg(long)]
    b: Option<usize>,
    /// Calibration constant multiplying the noise formula.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
}

#[derive(Args)]
struct SampleNoiseArgs {
    /// Geometry: "sphere" or "spd".
    #[arg(long)]
    geometry: String,
    /// Ambient dimension d+1 (sphere).
    #[arg(long)]
    dim: Option<usize>,
    /// Matrix size r (spd).
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Draw through the Metropolis-Hastings sampler instead of the exact one.
    #[arg(long)]
    mh: bool,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// results.csv or summary.csv produced by a run.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "expected empirical excess risk")]
    title: String,
}

fn fail(message: impl std::fmt::Display, code: u8) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn load_run_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, (String, u8)> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| (format!("cannot read config {}: {e}", path.display()), 2))?;
            let parsed: ExperimentConfig = serde_json::from_str(&text)
                .map_err(|e| (format!("malformed config {}: {e}", path.display()), 2))?;
            if parsed.experiment != kind {
                return Err((
                    format!(
                        "config is for the '{}' experiment but the subcommand runs '{kind}'",
                        parsed.experiment
                    ),
                    2,
                ));
            }
            parsed
        }
        None => match kind {
            ExperimentKind::Pca => ExperimentConfig::pca_defaults(),
            ExperimentKind::Frechet => ExperimentConfig::frechet_defaults(),
        },
    };
    if let Some(grid) = &args.n_grid {
        config.n_grid = grid.clone();
    }
    if let Some(runs) = args.runs {
        config.runs = runs;
    }
    let eps = args.eps.unwrap_or(config.budget.epsilon);
    let delta = args.delta.unwrap_or(config.budget.delta);
    config.budget = PrivacyBudget::with_constant(eps, delta, config.budget.c)
        .map_err(|e| (e.to_string(), 2))?;
    if args.nu.is_some() {
        config.nu = args.nu;
    }
    if args.dim.is_some() {
        config.d_plus_1 = args.dim;
    }
    if args.r.is_some() {
        config.r = args.r;
    }
    if args.diameter.is_some() {
        config.d_w = args.diameter;
    }
    if args.eta.is_some() {
        config.eta = args.eta;
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if args.paper_faithful {
        config.paper_faithful = true;
    }
    if let Some(methods) = &args.methods {
        config.methods = methods
            .iter()
            .map(|m| Method::parse(m))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| (e.to_string(), 2))?;
    }
    if let Some(out) = &args.out {
        config.out_dir = Some(out.clone());
    }
    Ok(config)
}

fn out_dir(config: &ExperimentConfig) -> PathBuf {
    config
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn run_study(kind: ExperimentKind, args: &RunArgs) -> ExitCode {
    let config = match load_run_config(kind, args) {
        Ok(c) => c,
        Err((msg, code)) => return fail(msg, code),
    };
    let dir = out_dir(&config);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        return fail(
            format!("cannot create output directory {}: {e}", dir.display()),
            2,
        );
    }
    let execute = || run_experiment(&config);
    let result = match args.threads {
        Some(k) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
                Ok(p) => p,
                Err(e) => return fail(e, 1),
            };
            pool.install(execute)
        }
        None => execute(),
    };
    let result = match result {
        Ok(r) => r,
        Err(e) => return fail(e, 1),
    };
    let rows_path = dir.join("results.csv");
    let summary_path = dir.join("summary.csv");
    if let Err(e) = write_rows_csv(&result.rows, &rows_path) {
        return fail(e, 1);
    }
    if let Err(e) = write_aggregates_csv(&result.aggregates, &summary_path) {
        return fail(e, 1);
    }
    println!(
        "{} rows -> {} ; {} aggregates -> {}",
        result.rows.len(),
        rows_path.display(),
        result.aggregates.len(),
        summary_path.display()
    );
    for agg in &result.aggregates {
        println!(
            "  {:<12} n={:<7} mean={:<12.6e} std={:.6e}",
            agg.method.to_string(),
            agg.n,
            agg.mean,
            agg.std
        );
    }
    if let Some(plot_path) = &args.plot {
        let title = format!("{kind}: excess risk vs sample size");
        if let Err(e) = plot_excess_risk_svg(&result.aggregates, &title, plot_path) {
            return fail(e, 1);
        }
        println!("plot -> {}", plot_path.display());
    }
    ExitCode::SUCCESS
}

fn run_calibrate(args: &CalibrateArgs) -> ExitCode {
    let budget = match PrivacyBudget::with_constant(args.eps, args.delta, args.c) {
        Ok(b) => b,
        Err(e) => return fail(e, 2),
    };
    let b = args.b.unwrap_or(args.n);
    let calibration = match calibrate_iterative(args.t, args.l0, args.n, b, &budget) {
        Ok(c) => c,
        Err(e) => return fail(e, 2),
    };
    let mut ledger = MomentsLedger::new();
    for _ in 0..args.t {
        if b == args.n {
            ledger.record_full_batch(args.l0, args.n, calibration.sigma2);
        } else {
            ledger.record_subsampled(args.l0, args.n, b, calibration.sigma2);
        }
    }
    println!("noise calibration");
    println!("  T               {}", calibration.t);
    println!("  sigma^2         {:.6e}", calibration.sigma2);
    println!(
        "  floor 4L0^2/b^2 {:.6e} ({})",
        4.0 * args.l0 * args.l0 / (b as f64 * b as f64),
        if calibration.floor_active() {
            "active"
        } else {
            "inactive"
        }
    );
    match ledger.audit(args.delta) {
        Ok(report) => {
            println!(
                "  audited eps     {:.6} (best moment order {}, {} orders skipped)",
                report.epsilon, report.best_lambda, report.skipped_orders
            );
            if report.epsilon > args.eps {
                println!(
                    "  note: audited epsilon exceeds the requested {:.6}; increase c for a certified bound",
                    args.eps
                );
            }
        }
        Err(e) => println!("  audited eps     unavailable: {e}"),
    }
    ExitCode::SUCCESS
}

fn write_noise_csv(coords: Vec<DVector<f64>>, out: &Option<PathBuf>) -> Result<(), std::io::Error> {
    let d = coords.first().map_or(0, |c| c.len());
    let mut text = String::new();
    let header: Vec<String> = (0..d).map(|i| format!("c{i}")).collect();
    text.push_str(&header.join(","));
    text.push('\n');
    for c in &coords {
        let row: Vec<String> = c.iter().map(|x| format!("{x}")).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_sample_noise(args: &SampleNoiseArgs) -> ExitCode {
    if args.sigma.is_nan() || args.sigma <= 0.0 {
        return fail("sigma must be positive", 2);
    }
    let mut rng = RngStream::new(args.seed, StreamId::Noise);
    let params = match MhParams::defaults_for(args.sigma) {
        Ok(p) => p,
        Err(e) => return fail(e, 2),
    };
    let coords = match args.geometry.as_str() {
        "sphere" => {
            let ambient = args.dim.unwrap_or(5);
            let sphere = match Sphere::new(ambient) {
                Ok(s) => s,
                Err(e) => return fail(e, 2),
            };
            let base = {
                let mut v = DVector::zeros(ambient);
                v[0] = 1.0;
                v
            };
            let mut all = Vec::with_capacity(args.count);
            for _ in 0..args.count {
                let tangent = if args.mh {
                    match mh_tangent_chain(&sphere, &base, args.sigma, &mut rng, &params, 1) {
                        Ok(mut chain) => chain.samples.remove(0),
                        Err(e) => return fail(e, 1),
                    }
                } else {
                    match sample_tangent_gaussian(&sphere, &base, args.sigma, &mut rng) {
                        Ok(t) => t,
                        Err(e) => return fail(e, 1),
                    }
                };
                all.push(sphere.vectorize(&base, &tangent));
            }
            all
        }
        "spd" => {
            let r = args.r.unwrap_or(2);
            let spd = match Spd::new(r) {
                Ok(s) => s,
                Err(e) => return fail(e, 2),
            };
            let base = spd.identity();
            let mut all = Vec::with_capacity(args.count);
            for _ in 0..args.count {
                let tangent = if args.mh {
                    match mh_tangent_chain(&spd, &base, args.sigma, &mut rng, &params, 1) {
                        Ok(mut chain) => chain.samples.remove(0),
                        Err(e) => return fail(e, 1),
                    }
                } else {
                    match sample_tangent_gaussian(&spd, &base, args.sigma, &mut rng) {
                        Ok(t) => t,
                        Err(e) => return fail(e, 1),
                    }
                };
                all.push(spd.vectorize(&base, &tangent));
            }
            all
        }
        other => return fail(format!("unknown geometry '{other}' (use sphere or spd)"), 2),
    };
    match write_noise_csv(coords, &args.out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e, 1),
    }
}

fn aggregate_parsed_rows(rows: &[dp_riemopt::experiments::ResultRow]) -> Vec<AggregateRow> {
    let mut groups: Vec<(Method, usize, ExperimentKind, Vec<f64>)> = Vec::new();
    for row in rows.iter().filter(|r| !r.excess_risk.is_nan()) {
        match groups
            .iter_mut()
            .find(|(m, n, _, _)| *m == row.method && *n == row.n)
        {
            Some((_, _, _, vals)) => vals.push(row.excess_risk),
            None => groups.push((row.method, row.n, row.experiment, vec![row.excess_risk])),
        }
    }
    groups
        .into_iter()
        .map(|(method, n, experiment, vals)| {
            let count = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / count;
            let std = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1.0)).sqrt()
            } else {
                0.0
            };
            AggregateRow {
                experiment,
                method,
                n,
                mean,
                std,
            }
        })
        .collect()
}

fn run_plot(args: &PlotArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.input) {
        Ok(t) => t,
        Err(e) => return fail(format!("cannot read {}: {e}", args.input.display()), 2),
    };
    // Accept either the raw rows file or the summary file.
    let aggregates = if text.starts_with("experiment,method,n,run") {
        match parse_rows_csv(&text) {
            Ok(rows) => aggregate_parsed_rows(&rows),
            Err(e) => return fail(e, 1),
        }
    } else {
        match parse_aggregates_csv(&text) {
            Ok(a) => a,
            Err(e) => return fail(e, 1),
        }
    };
    match plot_excess_risk_svg(&aggregates, &args.title, &args.out) {
        Ok(()) => {
            println!("plot -> {}", args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(e, 1),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::RunPca(args) => run_study(ExperimentKind::Pca, args),
        Command::RunFrechet(args) => run_study(ExperimentKind::Frechet, args),
        Command::Calibrate(args) => run_calibrate(args),
        Command::SampleNoise(args) => run_sample_noise(args),
        Command::Plot(args) => run_plot(args),
    }
}
