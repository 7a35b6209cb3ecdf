//! The multi-run experiment driver.
//!
//! Cells are `(n, run)` pairs; each cell generates its dataset once and
//! evaluates every configured method on it, so methods are compared on the
//! same data and the same initialization. All randomness is derived from the
//! master seed per cell, which makes the row set independent of the rayon
//! schedule; rows are sorted before emission.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    derive_seed, excess_risk, solve_reference_pca, AggregateRow, ExperimentConfig, ExperimentError,
    ExperimentKind, Method, ResultRow,
};
use crate::accounting::NoiseCalibration;
use crate::manifold::{DomainProfile, Geometry};
use crate::objective::{Convention, Objective};
use crate::optimizer::{
    baseline_dp_frechet_output, baseline_dp_pgd_sphere, frechet_reference_mean, run,
    OptimizerConfig, OutputStrategy, StepsizeSchedule, StreamSeeds,
};
use crate::sampling::{mh_tangent_chain, MhParams, RngStream, StreamId};
use crate::spd::{frechet_lipschitz, FrechetObjective};
use crate::sphere::PcaObjective;

/// Raw rows plus per-(method, n) aggregates.
#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
}

/// Iteration rule of the leading-eigenvector study:
/// `T = ln(n^2 eps^2 / ((d+1) L0^2 ln(1/delta)))`, rounded and clamped.
pub(crate) fn pca_iteration_count(
    n: usize,
    d_plus_1: usize,
    l0: f64,
    epsilon: f64,
    delta: f64,
) -> usize {
    let nf = n as f64;
    let arg = nf * nf * epsilon * epsilon / (d_plus_1 as f64 * l0 * l0 * (1.0 / delta).ln());
    (arg.ln().round().max(1.0)) as usize
}

/// Per-step noise of both studies: `sigma^2 = T ln(1/delta) L0^2 / (n^2 eps^2)`.
pub(crate) fn study_sigma2(t: usize, l0: f64, n: usize, epsilon: f64, delta: f64) -> f64 {
    let nf = n as f64;
    t as f64 * (1.0 / delta).ln() * l0 * l0 / (nf * nf * epsilon * epsilon)
}

fn convention(config: &ExperimentConfig) -> Convention {
    if config.paper_faithful {
        Convention::Literal
    } else {
        Convention::Exact
    }
}

struct CellSeeds {
    data: u64,
    init: u64,
}

fn cell_seeds(config: &ExperimentConfig, n: usize, run: usize) -> CellSeeds {
    let kind = config.experiment.to_string();
    CellSeeds {
        data: derive_seed(
            config.master_seed,
            &["data", &kind],
            &[n as u64, run as u64],
        ),
        init: derive_seed(
            config.master_seed,
            &["init", &kind],
            &[n as u64, run as u64],
        ),
    }
}

fn method_seed(config: &ExperimentConfig, method: Method, n: usize, run: usize) -> u64 {
    let kind = config.experiment.to_string();
    derive_seed(
        config.master_seed,
        &["method", &kind, method.as_str()],
        &[n as u64, run as u64],
    )
}

fn timed<F: FnOnce() -> Result<f64, ExperimentError>>(f: F) -> (f64, u64) {
    let started = Instant::now();
    let outcome = f();
    let elapsed = started.elapsed().as_millis() as u64;
    match outcome {
        Ok(excess) => (excess, elapsed),
        Err(err) => {
            log::warn!("cell failed, recording an error row: {err}");
            (f64::NAN, elapsed)
        }
    }
}

fn pca_cell(
    config: &ExperimentConfig,
    n: usize,
    run_idx: usize,
) -> Result<Vec<ResultRow>, ExperimentError> {
    let d_plus_1 = config.d_plus_1.unwrap_or(50);
    let nu = config.nu.unwrap_or(1e-3);
    let eta = config.eta_or_default();
    let conv = convention(config);
    let seeds = cell_seeds(config, n, run_idx);

    let mut data_rng = ChaCha8Rng::seed_from_u64(seeds.data);
    let samples = super::generate_pca_data(n, d_plus_1, nu, &mut data_rng)?;
    let objective = PcaObjective::new(samples)?;
    let sphere = *objective.geometry();
    let l0 = objective.lipschitz_estimate(conv);
    if !(l0 > 0.0) {
        return Err(ExperimentError::Config(
            "degenerate dataset: zero Lipschitz estimate".into(),
        ));
    }
    let t = pca_iteration_count(n, d_plus_1, l0, config.budget.epsilon, config.budget.delta);
    let sigma2 = study_sigma2(t, l0, n, config.budget.epsilon, config.budget.delta);
    let w_star = solve_reference_pca(&objective);
    let w0 = sphere.random_point(&mut RngStream::new(seeds.init, StreamId::Init));

    let mut rows = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let seed = method_seed(config, method, n, run_idx);
        let (excess, wallclock_ms) = timed(|| match method {
            Method::DpRgd => {
                let optimizer_config = OptimizerConfig {
                    iterations: t,
                    batch_size: n,
                    schedule: StepsizeSchedule::Constant(eta),
                    output: OutputStrategy::LastIterate,
                    profile: DomainProfile::new(l0, 1.0)?,
                    calibration: NoiseCalibration {
                        sigma2,
                        t,
                        l0,
                        n,
                        b: n,
                    },
                    seeds: StreamSeeds::from_master(seed),
                    monitor_radius: None,
                };
                let outcome = run(&objective, &optimizer_config, w0.clone())?;
                let audit = outcome.ledger.audit(config.budget.delta)?;
                if audit.epsilon > config.budget.epsilon * 1.01 {
                    log::warn!(
                        "pca n={n} run={run_idx}: audited epsilon {:.4} exceeds the configured {:.4} (c = {} is optimistic)",
                        audit.epsilon,
                        config.budget.epsilon,
                        config.budget.c
                    );
                }
                Ok(excess_risk(&objective, &outcome.private_output, &w_star))
            }
            Method::DpPgd => {
                // Same noise variance and iteration budget as DP-RGD, noise
                // in the ambient space.
                let outcome = baseline_dp_pgd_sphere(&objective, t, eta, sigma2, seed, w0.clone())?;
                Ok(excess_risk(&objective, &outcome.final_point, &w_star))
            }
            Method::NonPrivate => Ok(excess_risk(&objective, &w_star, &w_star)),
            Method::DpFm => Err(ExperimentError::Config(
                "dp-fm applies only to the frechet experiment".into(),
            )),
        });
        rows.push(ResultRow {
            experiment: config.experiment,
            method,
            n,
            run: run_idx,
            seed,
            excess_risk: excess,
            wallclock_ms,
        });
    }
    Ok(rows)
}

fn frechet_cell(
    config: &ExperimentConfig,
    n: usize,
    run_idx: usize,
) -> Result<Vec<ResultRow>, ExperimentError> {
    let r = config.r.unwrap_or(2);
    let diameter = config.d_w.unwrap_or(1.0);
    let eta = config.eta_or_default();
    let conv = convention(config);
    let seeds = cell_seeds(config, n, run_idx);

    let mut data_rng = ChaCha8Rng::seed_from_u64(seeds.data);
    let samples = super::generate_wishart_spd(n, r, diameter, &mut data_rng)?;
    // Metric lower bound on the radius-D/2 ball around the identity:
    // eigenvalues of W stay within exp(+-D/2), so G_W >= exp(-D) I.
    let c_l = (-diameter).exp();
    let profile_for = |l0: f64| -> Result<DomainProfile, ExperimentError> {
        Ok(DomainProfile::new(l0, c_l)?.with_diameter(diameter))
    };
    let l0 = frechet_lipschitz(&profile_for(1.0)?, conv)?;
    let objective = FrechetObjective::new(samples, profile_for(l0)?, conv)?;
    let spd = *objective.geometry();
    let t = n; // the study sets T = n
    let sigma2 = study_sigma2(t, l0, n, config.budget.epsilon, config.budget.delta);
    let w_star = frechet_reference_mean(&objective)?;
    let w0 = if config.spd_init_first_sample {
        objective.samples()[0].clone()
    } else {
        spd.identity()
    };

    let mut rows = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let seed = method_seed(config, method, n, run_idx);
        let (excess, wallclock_ms) = timed(|| match method {
            Method::DpRgd => {
                if config.paper_faithful {
                    // Reproduction mode: tangent noise drawn by random-walk
                    // MH instead of the exact sampler.
                    let mut w = w0.clone();
                    let mut noise_rng = RngStream::new(seed, StreamId::Noise);
                    let sigma = sigma2.sqrt();
                    let params = MhParams::defaults_for(sigma)?;
                    for _ in 0..t {
                        let grad = objective.full_rgrad(&w);
                        let chain = mh_tangent_chain(&spd, &w, sigma, &mut noise_rng, &params, 1)?;
                        let zeta = spd.lincomb(1.0, &grad, 1.0, &chain.samples[0]);
                        let zero = spd.zero_tangent(&w);
                        let step = spd.lincomb(-eta, &zeta, 0.0, &zero);
                        w = spd.exp(&w, &step);
                    }
                    Ok(excess_risk(&objective, &w, &w_star))
                } else {
                    let optimizer_config = OptimizerConfig {
                        iterations: t,
                        batch_size: n,
                        schedule: StepsizeSchedule::Constant(eta),
                        output: OutputStrategy::LastIterate,
                        profile: objective.profile().clone(),
                        calibration: NoiseCalibration {
                            sigma2,
                            t,
                            l0,
                            n,
                            b: n,
                        },
                        seeds: StreamSeeds::from_master(seed),
                        monitor_radius: None,
                    };
                    let outcome = run(&objective, &optimizer_config, w0.clone())?;
                    Ok(excess_risk(&objective, &outcome.private_output, &w_star))
                }
            }
            Method::DpFm => {
                let mut rng = RngStream::new(seed, StreamId::Noise);
                let outcome =
                    baseline_dp_frechet_output(&objective, &config.budget, &mut rng, None)?;
                Ok(excess_risk(&objective, &outcome.private_mean, &w_star))
            }
            Method::NonPrivate => Ok(excess_risk(&objective, &w_star, &w_star)),
            Method::DpPgd => Err(ExperimentError::Config(
                "dp-pgd applies only to the pca experiment".into(),
            )),
        });
        rows.push(ResultRow {
            experiment: config.experiment,
            method,
            n,
            run: run_idx,
            seed,
            excess_risk: excess,
            wallclock_ms,
        });
    }
    Ok(rows)
}

/// Aggregates over the non-error rows of each `(method, n)` cell: mean and
/// sample standard deviation (0 for a single run).
fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut groups: Vec<((Method, usize), Vec<f64>, ExperimentKind)> = Vec::new();
    for row in rows {
        if row.excess_risk.is_nan() {
            continue;
        }
        match groups
            .iter_mut()
            .find(|(k, _, _)| *k == (row.method, row.n))
        {
            Some((_, vals, _)) => vals.push(row.excess_risk),
            None => groups.push(((row.method, row.n), vec![row.excess_risk], row.experiment)),
        }
    }
    let mut aggregates: Vec<AggregateRow> = groups
        .into_iter()
        .map(|((method, n), vals, experiment)| {
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
        .collect();
    aggregates.sort_by_key(|a| (a.method, a.n));
    aggregates
}

/// Runs every `(method, n, run)` cell and aggregates the outcome. Cells run
/// in parallel; the result is independent of the worker count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    config.validate()?;
    let cells: Vec<(usize, usize)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.runs).map(move |run| (n, run)))
        .collect();
    let mut rows: Vec<ResultRow> = cells
        .par_iter()
        .map(|&(n, run_idx)| match config.experiment {
            ExperimentKind::Pca => pca_cell(config, n, run_idx),
            ExperimentKind::Frechet => frechet_cell(config, n, run_idx),
        })
        .collect::<Result<Vec<Vec<ResultRow>>, ExperimentError>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by_key(|r| (r.method, r.n, r.run));
    let aggregates = aggregate(&rows);
    Ok(ExperimentResult { rows, aggregates })
}
