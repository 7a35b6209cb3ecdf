//! Differentially private Riemannian (stochastic) gradient descent.
//!
//! Each step draws a uniform without-replacement batch, perturbs the batch
//! gradient with a tangent-space Gaussian at the current iterate, and moves
//! through the exponential map. The run records one ledger entry per step so
//! the realized privacy can be audited, and the private output is chosen by
//! one of three strategies: the last iterate, a uniformly selected iterate,
//! or a geodesic running average.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accounting::{AccountingError, MomentsLedger, NoiseCalibration, PrivacyBudget};
use crate::manifold::{curvature_constant, DomainProfile, Geometry, GeometryError, Tolerances};
use crate::objective::Objective;
use crate::sampling::{
    sample_intrinsic_laplace_spd, sample_tangent_gaussian, MhParams, RngStream, SamplingError,
    StreamId,
};
use crate::spd::FrechetObjective;
use crate::sphere::PcaObjective;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Accounting(#[from] AccountingError),
    #[error("solver failed to converge: {0}")]
    NonConvergence(String),
    #[error("degenerate update: {0}")]
    DegenerateUpdate(String),
}

/// Stepsize rule, one per utility theorem plus a tuned constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepsizeSchedule {
    /// `D / sqrt((L0^2 + d sigma^2 / c_l) * varsigma * T)`, constant in t.
    GeodesicConvex,
    /// `1 / (beta (t + 1))`.
    StronglyConvex,
    /// `0.99 * min(1/L1, 1/tau)`; the strict inequality of the theorem is
    /// realized by the fixed 0.99 factor.
    PolyakLojasiewicz,
    /// `1 / L1`.
    Nonconvex,
    /// Externally tuned constant.
    Constant(f64),
}

/// Weight rule of the geodesic running average.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageWeight {
    /// `1/(t+1)`: uniform average of the iterates.
    Uniform,
    /// `2/(t+1)`: the strongly convex weighting.
    StronglyConvex,
}

/// How the private output is chosen from the trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputStrategy {
    /// `w_T`.
    LastIterate,
    /// Uniform over `{w_0, ..., w_{T-1}}`, drawn from the output-select
    /// stream so the choice never perturbs the trajectory.
    UniformIterate,
    /// Geodesic running average of `w_1, ..., w_T`.
    GeodesicAverage(AverageWeight),
}

/// Seeds for the four independent substreams of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSeeds {
    pub noise: u64,
    pub subsample: u64,
    pub init: u64,
    pub output_select: u64,
}

impl StreamSeeds {
    /// All four streams keyed off one master seed; the stream ids keep them
    /// independent.
    pub fn from_master(seed: u64) -> Self {
        Self {
            noise: seed,
            subsample: seed,
            init: seed,
            output_select: seed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizerConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub schedule: StepsizeSchedule,
    pub output: OutputStrategy,
    pub profile: DomainProfile,
    pub calibration: NoiseCalibration,
    pub seeds: StreamSeeds,
    /// When set, iterates farther than this from the start are warned about
    /// (monitored, never projected).
    pub monitor_radius: Option<f64>,
}

/// Full record of a run: every iterate, per-step diagnostics, and the running
/// average when enabled.
#[derive(Clone, Debug)]
pub struct Trajectory<G: Geometry> {
    pub iterates: Vec<G::Point>,
    pub noise_norms: Vec<f64>,
    pub batches: Vec<Vec<usize>>,
    pub running_average: Option<Vec<G::Point>>,
    pub bound_warnings: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome<G: Geometry> {
    pub trajectory: Trajectory<G>,
    pub private_output: G::Point,
    pub ledger: MomentsLedger,
}

/// Uniform without-replacement batch of `b` indices out of `n`, returned in
/// ascending order so gradient accumulation is order-deterministic.
pub fn subsample<R: Rng + ?Sized>(
    n: usize,
    b: usize,
    rng: &mut R,
) -> Result<Vec<usize>, OptimError> {
    if b == 0 || b > n {
        return Err(OptimError::Config(format!(
            "batch size must satisfy 1 <= b <= n, got b={b}, n={n}"
        )));
    }
    if b == n {
        return Ok((0..n).collect());
    }
    let mut indices = rand::seq::index::sample(rng, n, b).into_vec();
    indices.sort_unstable();
    Ok(indices)
}

/// Stepsize at iteration `t` (0-based) for the given schedule.
pub fn schedule_stepsize(
    schedule: &StepsizeSchedule,
    t: usize,
    profile: &DomainProfile,
    calibration: &NoiseCalibration,
    intrinsic_dim: usize,
) -> Result<f64, OptimError> {
    let missing = |field: &str| OptimError::Config(format!("schedule requires profile.{field}"));
    match schedule {
        StepsizeSchedule::GeodesicConvex => {
            let diameter = profile.diameter.ok_or_else(|| missing("diameter"))?;
            let kappa = profile.kappa_min.ok_or_else(|| missing("kappa_min"))?;
            let varsigma = curvature_constant(kappa, diameter)?;
            let second_moment =
                profile.l0 * profile.l0 + intrinsic_dim as f64 * calibration.sigma2 / profile.c_l;
            Ok(diameter / (second_moment * varsigma * calibration.t as f64).sqrt())
        }
        StepsizeSchedule::StronglyConvex => {
            let beta = profile.beta.ok_or_else(|| missing("beta"))?;
            Ok(1.0 / (beta * (t + 1) as f64))
        }
        StepsizeSchedule::PolyakLojasiewicz => {
            let l1 = profile.l1.ok_or_else(|| missing("l1"))?;
            let tau = profile.tau.ok_or_else(|| missing("tau"))?;
            Ok(0.99 * (1.0 / l1).min(1.0 / tau))
        }
        StepsizeSchedule::Nonconvex => {
            let l1 = profile.l1.ok_or_else(|| missing("l1"))?;
            Ok(1.0 / l1)
        }
        StepsizeSchedule::Constant(eta) => {
            if !(*eta > 0.0) {
                return Err(OptimError::Config(format!(
                    "constant stepsize must be positive, got {eta}"
                )));
            }
            Ok(*eta)
        }
    }
}

/// Iteration count prescribed by the schedule's theorem, rounded to the
/// nearest integer and clamped to at least 1.
pub fn schedule_iterations(
    schedule: &StepsizeSchedule,
    profile: &DomainProfile,
    budget: &PrivacyBudget,
    n: usize,
    intrinsic_dim: usize,
) -> Result<usize, OptimError> {
    let missing = |field: &str| OptimError::Config(format!("schedule requires profile.{field}"));
    let nf = n as f64;
    let d = intrinsic_dim as f64;
    let log_inv_delta = (1.0 / budget.delta).ln();
    let value = match schedule {
        StepsizeSchedule::GeodesicConvex | StepsizeSchedule::StronglyConvex => nf * nf,
        StepsizeSchedule::PolyakLojasiewicz => {
            let arg = nf * nf * budget.epsilon * budget.epsilon * profile.c_l
                / (d * profile.l0 * profile.l0 * log_inv_delta);
            arg.ln()
        }
        StepsizeSchedule::Nonconvex => {
            let l1 = profile.l1.ok_or_else(|| missing("l1"))?;
            l1.sqrt() * nf * budget.epsilon
                / ((d * log_inv_delta / profile.c_l).sqrt() * profile.l0)
        }
        StepsizeSchedule::Constant(_) => {
            return Err(OptimError::Config(
                "a tuned constant stepsize has no theorem-driven iteration count".into(),
            ))
        }
    };
    Ok((value.round().max(1.0)) as usize)
}

/// One DP step from `point`: batch gradient plus tangent Gaussian noise,
/// then the exponential map with stepsize `eta`. Returns the new point and
/// the Riemannian norm of the injected noise.
pub fn dp_step<G, O>(
    objective: &O,
    point: &G::Point,
    eta: f64,
    sigma2: f64,
    batch: &[usize],
    noise_rng: &mut RngStream,
) -> Result<(G::Point, f64), OptimError>
where
    G: Geometry,
    O: Objective<G>,
{
    let geo = objective.geometry();
    let grad = if batch.len() == objective.num_samples() {
        objective.full_rgrad(point)
    } else {
        objective.batch_rgrad(point, batch)
    };
    let zero = geo.zero_tangent(point);
    let (direction, noise_norm) = if sigma2 > 0.0 {
        let noise = sample_tangent_gaussian(geo, point, sigma2.sqrt(), noise_rng)?;
        let norm = geo.norm(point, &noise);
        (geo.lincomb(1.0, &grad, 1.0, &noise), norm)
    } else {
        // Zero noise reduces bitwise to the deterministic method: the noise
        // path is skipped entirely, not added as a zero vector.
        (grad, 0.0)
    };
    let step = geo.lincomb(-eta, &direction, 0.0, &zero);
    let next = geo.exp(point, &step);
    geo.check_point(&next, &Tolerances::default())?;
    Ok((next, noise_norm))
}

/// Runs DP-R(S)GD from `start` and returns the trajectory, the private
/// output under the configured strategy, and the per-step privacy ledger.
pub fn run<G, O>(
    objective: &O,
    config: &OptimizerConfig,
    start: G::Point,
) -> Result<RunOutcome<G>, OptimError>
where
    G: Geometry,
    O: Objective<G>,
{
    let geo = objective.geometry();
    let n = objective.num_samples();
    let t_total = config.iterations;
    if t_total == 0 {
        return Err(OptimError::Config(
            "iteration count must be at least 1".into(),
        ));
    }
    if config.batch_size == 0 || config.batch_size > n {
        return Err(OptimError::Config(format!(
            "batch size must satisfy 1 <= b <= n, got b={}, n={n}",
            config.batch_size
        )));
    }
    if config.calibration.t != t_total
        || config.calibration.b != config.batch_size
        || config.calibration.n != n
    {
        return Err(OptimError::Config(format!(
            "calibration (T={}, b={}, n={}) does not match the run (T={}, b={}, n={})",
            config.calibration.t,
            config.calibration.b,
            config.calibration.n,
            t_total,
            config.batch_size,
            n
        )));
    }
    // Surface schedule/profile mismatches before the first step.
    schedule_stepsize(
        &config.schedule,
        0,
        &config.profile,
        &config.calibration,
        geo.intrinsic_dim(),
    )?;
    geo.check_point(&start, &Tolerances::default())?;

    let mut noise_rng = RngStream::new(config.seeds.noise, StreamId::Noise);
    let mut subsample_rng = RngStream::new(config.seeds.subsample, StreamId::Subsample);
    let mut output_rng = RngStream::new(config.seeds.output_select, StreamId::OutputSelect);

    let averaging = match config.output {
        OutputStrategy::GeodesicAverage(rule) => Some(rule),
        _ => None,
    };

    let sigma2 = config.calibration.sigma2;
    let l0 = config.calibration.l0;
    let mut ledger = MomentsLedger::new();
    let mut iterates = Vec::with_capacity(t_total + 1);
    let mut noise_norms = Vec::with_capacity(t_total);
    let mut batches = Vec::with_capacity(t_total);
    let mut averages: Vec<G::Point> = Vec::new();
    let mut bound_warnings = Vec::new();
    iterates.push(start.clone());

    let mut current = start.clone();
    let mut bar: Option<G::Point> = None;
    for t in 0..t_total {
        let eta = schedule_stepsize(
            &config.schedule,
            t,
            &config.profile,
            &config.calibration,
            geo.intrinsic_dim(),
        )?;
        let batch = subsample(n, config.batch_size, &mut subsample_rng)?;
        let (next, noise_norm) = dp_step(objective, &current, eta, sigma2, &batch, &mut noise_rng)?;
        if config.batch_size == n {
            ledger.record_full_batch(l0, n, sigma2);
        } else {
            ledger.record_subsampled(l0, n, config.batch_size, sigma2);
        }
        if let Some(radius) = config.monitor_radius {
            let excursion = geo.dist(&next, &start);
            if excursion > radius {
                log::warn!(
                    "iterate {} wandered to distance {excursion:.4} > monitor radius {radius}",
                    t + 1
                );
                bound_warnings.push(t + 1);
            }
        }
        if let Some(rule) = averaging {
            let updated = match &bar {
                None => next.clone(),
                Some(prev) => {
                    let weight = match rule {
                        AverageWeight::Uniform => 1.0 / (t + 1) as f64,
                        AverageWeight::StronglyConvex => 2.0 / (t + 1) as f64,
                    };
                    let log = geo.log(prev, &next)?;
                    let zero = geo.zero_tangent(prev);
                    let step = geo.lincomb(weight, &log, 0.0, &zero);
                    geo.exp(prev, &step)
                }
            };
            averages.push(updated.clone());
            bar = Some(updated);
        }
        noise_norms.push(noise_norm);
        batches.push(batch);
        iterates.push(next.clone());
        current = next;
    }

    let private_output = match config.output {
        OutputStrategy::LastIterate => iterates[t_total].clone(),
        OutputStrategy::UniformIterate => {
            let pick = output_rng.random_range(0..t_total);
            iterates[pick].clone()
        }
        OutputStrategy::GeodesicAverage(_) => bar.expect("averaging ran for every step"),
    };

    Ok(RunOutcome {
        trajectory: Trajectory {
            iterates,
            noise_norms,
            batches,
            running_average: averaging.map(|_| averages),
            bound_warnings,
        },
        private_output,
        ledger,
    })
}

/// Non-private Riemannian gradient descent until the gradient norm falls
/// below `grad_tol`; errors after `max_iterations`.
pub fn descend_to_stationarity<G, O>(
    objective: &O,
    start: G::Point,
    eta: f64,
    grad_tol: f64,
    max_iterations: usize,
) -> Result<G::Point, OptimError>
where
    G: Geometry,
    O: Objective<G>,
{
    let geo = objective.geometry();
    let mut w = start;
    for _ in 0..max_iterations {
        let grad = objective.full_rgrad(&w);
        if geo.norm(&w, &grad) <= grad_tol {
            return Ok(w);
        }
        let zero = geo.zero_tangent(&w);
        let step = geo.lincomb(-eta, &grad, 0.0, &zero);
        w = geo.exp(&w, &step);
    }
    Err(OptimError::NonConvergence(format!(
        "gradient norm still above {grad_tol:.1e} after {max_iterations} iterations"
    )))
}

/// Projected-gradient baseline on the sphere. The update perturbs the
/// *ambient Euclidean* gradient with isotropic `N(0, sigma^2 I_{d+1})` noise
/// and renormalizes: `w <- (w - eta zeta) / |w - eta zeta|`.
#[derive(Clone, Debug)]
pub struct PgdOutcome {
    pub iterates: Vec<DVector<f64>>,
    pub final_point: DVector<f64>,
}

pub fn baseline_dp_pgd_sphere(
    objective: &PcaObjective,
    iterations: usize,
    eta: f64,
    sigma2: f64,
    noise_seed: u64,
    start: DVector<f64>,
) -> Result<PgdOutcome, OptimError> {
    use rand_distr::StandardNormal;
    if iterations == 0 {
        return Err(OptimError::Config(
            "iteration count must be at least 1".into(),
        ));
    }
    let ambient = start.len();
    let mut rng = RngStream::new(noise_seed, StreamId::Noise);
    let sigma = sigma2.sqrt();
    let mut iterates = Vec::with_capacity(iterations + 1);
    iterates.push(start.clone());
    let mut w = start;
    for _ in 0..iterations {
        let mut attempt = 0;
        loop {
            let zeta = if sigma2 > 0.0 {
                let noise =
                    DVector::from_fn(ambient, |_, _| rng.sample::<f64, _>(StandardNormal)) * sigma;
                objective.euclidean_full_grad(&w) + noise
            } else {
                objective.euclidean_full_grad(&w)
            };
            let candidate = &w - zeta * eta;
            let norm = candidate.norm();
            if norm >= 1e-14 {
                w = candidate / norm;
                break;
            }
            // Resample the noise once, then give up.
            attempt += 1;
            if attempt > 1 || sigma2 == 0.0 {
                return Err(OptimError::DegenerateUpdate(
                    "renormalization hit the origin twice in one step".into(),
                ));
            }
        }
        iterates.push(w.clone());
    }
    Ok(PgdOutcome {
        final_point: w.clone(),
        iterates,
    })
}

/// Output-perturbation baseline for the private Fréchet mean: solve the
/// non-private mean to gradient norm 1e-14, then draw from an intrinsic
/// Laplace distribution footprinted there with scale
/// `sigma = Delta_FM / epsilon`, `Delta_FM = 2 D / n`.
#[derive(Clone, Debug)]
pub struct FrechetOutputPerturbation {
    pub private_mean: DMatrix<f64>,
    pub reference_mean: DMatrix<f64>,
    pub sigma: f64,
}

pub const FRECHET_REFERENCE_GRAD_TOL: f64 = 1e-14;
pub const FRECHET_REFERENCE_MAX_ITERS: usize = 100_000;

/// Reference (non-private) Fréchet mean by RGD run until the gradient norm
/// falls below 1e-14, starting from the identity.
pub fn frechet_reference_mean(objective: &FrechetObjective) -> Result<DMatrix<f64>, OptimError> {
    let spd = *objective.geometry();
    let eta = match objective.convention() {
        crate::objective::Convention::Exact => 0.5,
        // The literal gradient is -1/2 of the exact one; a negative stepsize
        // of matching scale realizes the same descent map.
        crate::objective::Convention::Literal => -1.0,
    };
    let start = spd.identity();
    descend_to_stationarity(
        objective,
        start,
        eta,
        FRECHET_REFERENCE_GRAD_TOL,
        FRECHET_REFERENCE_MAX_ITERS,
    )
}

pub fn baseline_dp_frechet_output(
    objective: &FrechetObjective,
    budget: &PrivacyBudget,
    rng: &mut RngStream,
    mh: Option<MhParams>,
) -> Result<FrechetOutputPerturbation, OptimError> {
    let diameter = objective.profile().diameter.ok_or_else(|| {
        OptimError::Config("output perturbation requires a declared diameter".into())
    })?;
    let n = objective.num_samples();
    let reference_mean = frechet_reference_mean(objective)?;
    let sensitivity = 2.0 * diameter / n as f64;
    let sigma = sensitivity / budget.epsilon;
    let params = match mh {
        Some(p) => p,
        None => MhParams::defaults_for(sigma)?,
    };
    // At small epsilon the Laplace scale is large and the draw can carry
    // eigenvalues far beyond the representation tolerances; the output is
    // still a positive definite matrix and is returned as-is.
    let private_mean = sample_intrinsic_laplace_spd(&reference_mean, sigma, rng, &params)?;
    Ok(FrechetOutputPerturbation {
        private_mean,
        reference_mean,
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::DomainProfile;
    use crate::objective::Convention;
    use crate::spd::Spd;
    use crate::sphere::Sphere;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn small_pca(n: usize, ambient: usize, seed: u64) -> PcaObjective {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<DVector<f64>> = (0..n)
            .map(|_| DVector::from_fn(ambient, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        PcaObjective::new(samples).unwrap()
    }

    fn small_frechet(n: usize, seed: u64) -> FrechetObjective {
        let spd = Spd::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<DMatrix<f64>> = (0..n)
            .map(|_| {
                let coords = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
                let coords = &coords * (0.4 / coords.norm());
                let tangent = spd.unvectorize(&spd.identity(), &coords).unwrap();
                spd.exp(&spd.identity(), &tangent)
            })
            .collect();
        FrechetObjective::new(
            samples,
            DomainProfile::new(2.0, 1.0).unwrap().with_diameter(1.0),
            Convention::Exact,
        )
        .unwrap()
    }

    #[test]
    fn subsample_full_batch_is_identity_range() {
        let mut rng = RngStream::new(1, StreamId::Subsample);
        assert_eq!(subsample(5, 5, &mut rng).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn subsample_rejects_oversized_batch() {
        let mut rng = RngStream::new(1, StreamId::Subsample);
        assert!(subsample(3, 4, &mut rng).is_err());
        assert!(subsample(3, 0, &mut rng).is_err());
    }

    #[test]
    fn subsample_is_uniform_for_singletons() {
        let mut rng = RngStream::new(2, StreamId::Subsample);
        let draws = 10_000;
        let mut count0 = 0usize;
        for _ in 0..draws {
            if subsample(2, 1, &mut rng).unwrap()[0] == 0 {
                count0 += 1;
            }
        }
        let frac = count0 as f64 / draws as f64;
        assert!((frac - 0.5).abs() <= 0.02, "index 0 frequency {frac}");
    }

    proptest::proptest! {
        #[test]
        fn subsample_never_duplicates(n in 1usize..200, pick in 1usize..200, seed in 0u64..1000) {
            let b = pick.min(n);
            let mut rng = RngStream::new(seed, StreamId::Subsample);
            let ix = subsample(n, b, &mut rng).unwrap();
            proptest::prop_assert_eq!(ix.len(), b);
            let mut dedup = ix.clone();
            dedup.dedup();
            proptest::prop_assert_eq!(dedup.len(), b);
            proptest::prop_assert!(ix.iter().all(|&i| i < n));
        }
    }

    #[test]
    fn stepsize_examples() {
        let cal = NoiseCalibration::noiseless(1, 1.0, 10, 10);
        let profile = DomainProfile::new(1.0, 1.0)
            .unwrap()
            .with_diameter(1.0)
            .with_kappa_min(0.0)
            .with_strong_convexity(2.0)
            .with_smoothness(4.0)
            .with_pl_constant(2.0);
        let eta =
            schedule_stepsize(&StepsizeSchedule::GeodesicConvex, 0, &profile, &cal, 3).unwrap();
        assert_relative_eq!(eta, 1.0, epsilon = 1e-15);
        let eta =
            schedule_stepsize(&StepsizeSchedule::StronglyConvex, 0, &profile, &cal, 3).unwrap();
        assert_relative_eq!(eta, 0.5, epsilon = 1e-15);
        let eta = schedule_stepsize(&StepsizeSchedule::Nonconvex, 7, &profile, &cal, 3).unwrap();
        assert_relative_eq!(eta, 0.25, epsilon = 1e-15);
        let eta =
            schedule_stepsize(&StepsizeSchedule::PolyakLojasiewicz, 0, &profile, &cal, 3).unwrap();
        assert_relative_eq!(eta, 0.99 * 0.25, epsilon = 1e-15);
    }

    #[test]
    fn stepsize_missing_fields_is_config_error() {
        let cal = NoiseCalibration::noiseless(1, 1.0, 10, 10);
        let bare = DomainProfile::new(1.0, 1.0).unwrap();
        for schedule in [
            StepsizeSchedule::GeodesicConvex,
            StepsizeSchedule::StronglyConvex,
            StepsizeSchedule::PolyakLojasiewicz,
            StepsizeSchedule::Nonconvex,
        ] {
            assert!(matches!(
                schedule_stepsize(&schedule, 0, &bare, &cal, 3),
                Err(OptimError::Config(_))
            ));
        }
    }

    #[test]
    fn iteration_count_examples() {
        let profile = DomainProfile::new(1.0, 1.0)
            .unwrap()
            .with_diameter(1.0)
            .with_kappa_min(0.0)
            .with_smoothness(1.0);
        let budget = PrivacyBudget::new(1.0, (-1.0f64).exp()).unwrap();
        assert_eq!(
            schedule_iterations(&StepsizeSchedule::GeodesicConvex, &profile, &budget, 50, 3)
                .unwrap(),
            2500
        );
        assert_eq!(
            schedule_iterations(&StepsizeSchedule::Nonconvex, &profile, &budget, 100, 4).unwrap(),
            50
        );
        // PL with argument <= 1 clamps to a single iteration.
        let tiny = PrivacyBudget::new(1e-6, 1e-3).unwrap();
        assert_eq!(
            schedule_iterations(&StepsizeSchedule::PolyakLojasiewicz, &profile, &tiny, 10, 3)
                .unwrap(),
            1
        );
        assert!(
            schedule_iterations(&StepsizeSchedule::Constant(0.1), &profile, &budget, 10, 3)
                .is_err()
        );
    }

    #[test]
    fn zero_noise_full_batch_matches_reference_bitwise() {
        let objective = small_pca(40, 6, 3);
        let sphere = *objective.geometry();
        let t = 25;
        let config = OptimizerConfig {
            iterations: t,
            batch_size: 40,
            schedule: StepsizeSchedule::Constant(0.2),
            output: OutputStrategy::LastIterate,
            profile: DomainProfile::new(1.0, 1.0).unwrap(),
            calibration: NoiseCalibration::noiseless(t, 1.0, 40, 40),
            seeds: StreamSeeds::from_master(11),
            monitor_radius: None,
        };
        let mut init_rng = RngStream::new(11, StreamId::Init);
        let w0 = sphere.random_point(&mut init_rng);
        let outcome = run(&objective, &config, w0.clone()).unwrap();

        // Independent reference: plain deterministic RGD with the same maps.
        let mut w = w0;
        for step in 0..t {
            let grad = objective.full_rgrad(&w);
            let zero = sphere.zero_tangent(&w);
            let tangent = sphere.lincomb(-0.2, &grad, 0.0, &zero);
            w = sphere.exp(&w, &tangent);
            assert_eq!(
                outcome.trajectory.iterates[step + 1],
                w,
                "zero-noise trajectory diverged from reference at step {step}"
            );
        }
        assert_eq!(outcome.private_output, w);
    }

    #[test]
    fn frechet_single_sample_one_step_lands_exactly() {
        let spd = Spd::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coords = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let tangent = spd.unvectorize(&spd.identity(), &(&coords * 0.3)).unwrap();
        let x = spd.exp(&spd.identity(), &tangent);
        let objective = FrechetObjective::new(
            vec![x.clone()],
            DomainProfile::new(2.0, 1.0).unwrap().with_diameter(1.0),
            Convention::Exact,
        )
        .unwrap();
        let mut noise_rng = RngStream::new(1, StreamId::Noise);
        let (next, noise_norm) =
            dp_step(&objective, &spd.identity(), 0.5, 0.0, &[0], &mut noise_rng).unwrap();
        assert_eq!(noise_norm, 0.0);
        assert!(spd.dist(&next, &x) <= 1e-8);
    }

    #[test]
    fn noisy_direction_is_unbiased() {
        let objective = small_pca(30, 4, 7);
        let sphere = *objective.geometry();
        let mut init_rng = RngStream::new(21, StreamId::Init);
        let w = sphere.random_point(&mut init_rng);
        let full = sphere.vectorize(&w, &objective.full_rgrad(&w));
        let sigma2: f64 = 0.25;
        let b = 10;
        let repeats = 10_000;
        let mut noise_rng = RngStream::new(22, StreamId::Noise);
        let mut batch_rng = RngStream::new(23, StreamId::Subsample);
        let d = sphere.intrinsic_dim();
        let mut mean = DVector::zeros(d);
        let mut sq = DVector::zeros(d);
        for _ in 0..repeats {
            let batch = subsample(30, b, &mut batch_rng).unwrap();
            let grad = objective.batch_rgrad(&w, &batch);
            let noise =
                sample_tangent_gaussian(&sphere, &w, sigma2.sqrt(), &mut noise_rng).unwrap();
            let zeta = sphere.vectorize(&w, &sphere.lincomb(1.0, &grad, 1.0, &noise));
            mean += &zeta;
            sq += zeta.component_mul(&zeta);
        }
        mean /= repeats as f64;
        sq /= repeats as f64;
        for i in 0..d {
            let var = (sq[i] - mean[i] * mean[i]).max(0.0);
            let stderr = (var / repeats as f64).sqrt();
            assert!(
                (mean[i] - full[i]).abs() <= 4.0 * stderr + 1e-12,
                "coordinate {i}: mean {} vs full gradient {} (stderr {stderr})",
                mean[i],
                full[i]
            );
        }
    }

    #[test]
    fn noisy_gradient_second_moment_bound() {
        // E |zeta|^2 <= L0^2 + d sigma^2 / c_l on both geometries.
        let repeats = 10_000;
        let sigma2: f64 = 0.5;

        let pca = small_pca(50, 5, 9);
        let sphere = *pca.geometry();
        let mut init_rng = RngStream::new(31, StreamId::Init);
        let w = sphere.random_point(&mut init_rng);
        let l0 = pca.lipschitz_estimate(Convention::Exact);
        let mut acc = 0.0;
        let mut noise_rng = RngStream::new(32, StreamId::Noise);
        let mut batch_rng = RngStream::new(33, StreamId::Subsample);
        for _ in 0..repeats {
            let batch = subsample(50, 10, &mut batch_rng).unwrap();
            let grad = pca.batch_rgrad(&w, &batch);
            let noise =
                sample_tangent_gaussian(&sphere, &w, sigma2.sqrt(), &mut noise_rng).unwrap();
            let zeta = sphere.lincomb(1.0, &grad, 1.0, &noise);
            let norm = sphere.norm(&w, &zeta);
            acc += norm * norm;
        }
        let estimate = acc / repeats as f64;
        let bound = l0 * l0 + sphere.intrinsic_dim() as f64 * sigma2 / 1.0;
        assert!(
            estimate <= bound * 1.05,
            "sphere second moment {estimate} exceeds bound {bound} * 1.05"
        );

        let frechet = small_frechet(40, 10);
        let spd = *frechet.geometry();
        let w = spd.identity();
        let l0 = frechet.lipschitz().unwrap();
        let c_l = (-1.0f64).exp(); // metric lower bound on the unit-diameter ball
        let mut acc = 0.0;
        let mut noise_rng = RngStream::new(34, StreamId::Noise);
        let mut batch_rng = RngStream::new(35, StreamId::Subsample);
        for _ in 0..repeats {
            let batch = subsample(40, 8, &mut batch_rng).unwrap();
            let grad = frechet.batch_rgrad(&w, &batch);
            let noise = sample_tangent_gaussian(&spd, &w, sigma2.sqrt(), &mut noise_rng).unwrap();
            let zeta = spd.lincomb(1.0, &grad, 1.0, &noise);
            let norm = spd.norm(&w, &zeta);
            acc += norm * norm;
        }
        let estimate = acc / repeats as f64;
        let bound = l0 * l0 + spd.intrinsic_dim() as f64 * sigma2 / c_l;
        assert!(
            estimate <= bound * 1.05,
            "SPD second moment {estimate} exceeds bound {bound} * 1.05"
        );
    }

    fn noisy_config(objective: &PcaObjective, t: usize, output: OutputStrategy) -> OptimizerConfig {
        let n = objective.num_samples();
        let budget = PrivacyBudget::new(1.0, 1e-3).unwrap();
        let l0 = objective.lipschitz_estimate(Convention::Exact);
        let calibration = crate::accounting::calibrate_iterative(t, l0, n, n, &budget).unwrap();
        OptimizerConfig {
            iterations: t,
            batch_size: n,
            schedule: StepsizeSchedule::Constant(0.1),
            output,
            profile: DomainProfile::new(l0, 1.0).unwrap(),
            calibration,
            seeds: StreamSeeds::from_master(77),
            monitor_radius: None,
        }
    }

    #[test]
    fn run_single_step_last_iterate() {
        let objective = small_pca(20, 4, 13);
        let sphere = *objective.geometry();
        let mut config = noisy_config(&objective, 1, OutputStrategy::LastIterate);
        config.calibration = NoiseCalibration::noiseless(1, config.calibration.l0, 20, 20);
        let w0 = sphere.random_point(&mut RngStream::new(1, StreamId::Init));
        let outcome = run(&objective, &config, w0).unwrap();
        assert_eq!(outcome.trajectory.iterates.len(), 2);
        assert_eq!(outcome.private_output, outcome.trajectory.iterates[1]);
    }

    #[test]
    fn run_is_deterministic_per_seed() {
        let objective = small_pca(25, 5, 14);
        let sphere = *objective.geometry();
        let config = noisy_config(&objective, 12, OutputStrategy::LastIterate);
        let w0 = sphere.random_point(&mut RngStream::new(5, StreamId::Init));
        let a = run(&objective, &config, w0.clone()).unwrap();
        let b = run(&objective, &config, w0).unwrap();
        assert_eq!(a.trajectory.iterates, b.trajectory.iterates);
        assert_eq!(a.private_output, b.private_output);
    }

    #[test]
    fn output_strategy_does_not_change_trajectory() {
        let objective = small_pca(25, 5, 15);
        let sphere = *objective.geometry();
        let w0 = sphere.random_point(&mut RngStream::new(6, StreamId::Init));
        let strategies = [
            OutputStrategy::LastIterate,
            OutputStrategy::UniformIterate,
            OutputStrategy::GeodesicAverage(AverageWeight::Uniform),
            OutputStrategy::GeodesicAverage(AverageWeight::StronglyConvex),
        ];
        let runs: Vec<_> = strategies
            .iter()
            .map(|s| run(&objective, &noisy_config(&objective, 10, *s), w0.clone()).unwrap())
            .collect();
        for pair in runs.windows(2) {
            assert_eq!(pair[0].trajectory.iterates, pair[1].trajectory.iterates);
        }
        // Uniform selection picks an iterate among w_0..w_{T-1}.
        let uniform = &runs[1];
        assert!(uniform.trajectory.iterates[..10].contains(&uniform.private_output));
    }

    #[test]
    fn geodesic_average_of_constant_trajectory_is_constant() {
        // A single repeated sample with zero noise and a stationary start:
        // iterates and their running average stay put.
        let spd = Spd::new(2).unwrap();
        let x = spd.identity();
        let objective = FrechetObjective::new(
            vec![x.clone()],
            DomainProfile::new(2.0, 1.0).unwrap().with_diameter(1.0),
            Convention::Exact,
        )
        .unwrap();
        let t = 6;
        let config = OptimizerConfig {
            iterations: t,
            batch_size: 1,
            schedule: StepsizeSchedule::Constant(0.5),
            output: OutputStrategy::GeodesicAverage(AverageWeight::Uniform),
            profile: DomainProfile::new(2.0, 1.0).unwrap().with_diameter(1.0),
            calibration: NoiseCalibration::noiseless(t, 2.0, 1, 1),
            seeds: StreamSeeds::from_master(8),
            monitor_radius: None,
        };
        let outcome = run(&objective, &config, x.clone()).unwrap();
        assert!(spd.dist(&outcome.private_output, &x) <= 1e-12);
    }

    #[test]
    fn run_registers_one_ledger_entry_per_step_and_audits() {
        // n >> b so the subsampled moment bound's order condition has room.
        let objective = small_pca(3000, 5, 16);
        let sphere = *objective.geometry();
        let t = 9;
        let mut config = noisy_config(&objective, t, OutputStrategy::LastIterate);
        config.batch_size = 10;
        config.calibration = crate::accounting::calibrate_iterative(
            t,
            config.calibration.l0,
            3000,
            10,
            &PrivacyBudget::new(1.0, 1e-3).unwrap(),
        )
        .unwrap();
        let w0 = sphere.random_point(&mut RngStream::new(7, StreamId::Init));
        let outcome = run(&objective, &config, w0).unwrap();
        assert_eq!(outcome.ledger.len(), t);
        let report = outcome.ledger.audit(1e-3).unwrap();
        assert!(report.epsilon.is_finite() && report.epsilon > 0.0);
        assert!(
            report.skipped_orders < outcome.ledger.lambda_grid().len(),
            "at least one moment order must be admissible"
        );
    }

    #[test]
    fn run_rejects_mismatched_calibration() {
        let objective = small_pca(30, 5, 17);
        let sphere = *objective.geometry();
        let mut config = noisy_config(&objective, 5, OutputStrategy::LastIterate);
        config.calibration = NoiseCalibration::noiseless(4, 1.0, 30, 30);
        let w0 = sphere.random_point(&mut RngStream::new(8, StreamId::Init));
        assert!(matches!(
            run(&objective, &config, w0),
            Err(OptimError::Config(_))
        ));
    }

    #[test]
    fn monitor_radius_flags_excursions() {
        let objective = small_pca(30, 5, 18);
        let sphere = *objective.geometry();
        let mut config = noisy_config(&objective, 15, OutputStrategy::LastIterate);
        config.monitor_radius = Some(1e-9);
        let w0 = sphere.random_point(&mut RngStream::new(9, StreamId::Init));
        let outcome = run(&objective, &config, w0).unwrap();
        assert!(!outcome.trajectory.bound_warnings.is_empty());
    }

    #[test]
    fn pgd_stationary_without_noise_or_gradient() {
        // Zero covariance data: the euclidean gradient vanishes and sigma =
        // 0, so the baseline leaves w unchanged.
        let objective = PcaObjective::new(vec![DVector::zeros(4), DVector::zeros(4)]).unwrap();
        let w0 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let out = baseline_dp_pgd_sphere(&objective, 3, 0.2, 0.0, 1, w0.clone()).unwrap();
        assert_eq!(out.final_point, w0);
    }

    #[test]
    fn pgd_noiseless_descends_on_pca() {
        let objective = small_pca(40, 6, 19);
        let sphere = *objective.geometry();
        let w0 = sphere.random_point(&mut RngStream::new(10, StreamId::Init));
        let out = baseline_dp_pgd_sphere(&objective, 60, 0.05, 0.0, 1, w0).unwrap();
        let losses: Vec<f64> = out.iterates.iter().map(|w| objective.loss(w)).collect();
        for pair in losses.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "PGD loss increased: {pair:?}");
        }
    }

    #[test]
    fn pgd_noise_is_full_ambient() {
        // E|eps|^2 = (d+1) sigma^2 for the ambient baseline versus d sigma^2
        // for the tangent sampler.
        let ambient = 5usize;
        let sigma2: f64 = 0.8;
        let draws = 20_000;
        let mut rng = RngStream::new(40, StreamId::Noise);
        let mut acc = 0.0;
        for _ in 0..draws {
            let noise = DVector::from_fn(ambient, |_, _| rng.sample::<f64, _>(StandardNormal))
                * sigma2.sqrt();
            acc += noise.norm_squared();
        }
        let ambient_mean = acc / draws as f64;
        assert!((ambient_mean - ambient as f64 * sigma2).abs() <= 0.05 * ambient as f64 * sigma2);

        let sphere = Sphere::new(ambient).unwrap();
        let w = sphere.random_point(&mut RngStream::new(41, StreamId::Init));
        let mut acc = 0.0;
        for _ in 0..draws {
            let eps = sample_tangent_gaussian(&sphere, &w, sigma2.sqrt(), &mut rng).unwrap();
            acc += eps.norm_squared();
        }
        let tangent_mean = acc / draws as f64;
        let d = (ambient - 1) as f64;
        assert!((tangent_mean - d * sigma2).abs() <= 0.05 * d * sigma2);
        assert!(tangent_mean < ambient_mean);
    }

    #[test]
    fn frechet_output_perturbation_scales() {
        let objective = small_frechet(2, 20);
        let budget = PrivacyBudget::new(0.1, 1e-3).unwrap();
        let mut rng = RngStream::new(50, StreamId::Noise);
        let out = baseline_dp_frechet_output(&objective, &budget, &mut rng, None).unwrap();
        // Delta_FM / eps = (2 * 1 / 2) / 0.1 = 10.
        assert_relative_eq!(out.sigma, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn frechet_output_perturbation_concentrates_with_large_epsilon() {
        let spd = Spd::new(2).unwrap();
        let objective = small_frechet(1, 21);
        let x = objective.samples()[0].clone();
        let budget = PrivacyBudget::new(1e9, 1e-3).unwrap();
        let mut rng = RngStream::new(51, StreamId::Noise);
        let out = baseline_dp_frechet_output(&objective, &budget, &mut rng, None).unwrap();
        // Single sample: the reference mean is X1; huge epsilon keeps the
        // perturbed output glued to it.
        assert!(spd.dist(&out.reference_mean, &x) <= 1e-10);
        assert!(spd.dist(&out.private_mean, &x) <= 1e-3);
    }
}
