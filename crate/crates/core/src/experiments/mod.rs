//! Benchmark harness: synthetic data, reference solvers, excess-risk
//! evaluation, and a deterministic multi-run experiment driver with CSV and
//! SVG emission.
//!
//! Every `(n, run)` cell derives its own seeds from the master seed, so the
//! harness is reproducible byte-for-byte (timing column aside) regardless of
//! how many worker threads execute the cells.

mod csvio;
mod data;
mod harness;
mod plot;

pub use csvio::{
    aggregates_csv_string, parse_aggregates_csv, parse_rows_csv, rows_csv_string,
    write_aggregates_csv, write_rows_csv, AGGREGATE_HEADER, ROW_HEADER,
};
pub use data::{generate_pca_data, generate_wishart_spd, pca_planted_eigengap};
pub use harness::{run_experiment, ExperimentResult};
pub use plot::plot_excess_risk_svg;

use std::path::PathBuf;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accounting::{AccountingError, PrivacyBudget};
use crate::manifold::{Geometry, GeometryError};
use crate::objective::Objective;
use crate::optimizer::OptimError;
use crate::sampling::SamplingError;
use crate::spd::FrechetObjective;
use crate::sphere::PcaObjective;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("experiment configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Optimizer(#[from] OptimError),
    #[error(transparent)]
    Accounting(#[from] AccountingError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Which study to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Pca,
    Frechet,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExperimentKind::Pca => write!(f, "pca"),
            ExperimentKind::Frechet => write!(f, "frechet"),
        }
    }
}

/// Optimization methods the harness can benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DpRgd,
    DpPgd,
    DpFm,
    NonPrivate,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::DpRgd => "dp-rgd",
            Method::DpPgd => "dp-pgd",
            Method::DpFm => "dp-fm",
            Method::NonPrivate => "non-private",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ExperimentError> {
        match s {
            "dp-rgd" => Ok(Method::DpRgd),
            "dp-pgd" => Ok(Method::DpPgd),
            "dp-fm" => Ok(Method::DpFm),
            "non-private" => Ok(Method::NonPrivate),
            other => Err(ExperimentError::Parse(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

fn default_runs() -> usize {
    20
}

fn default_true_seed() -> u64 {
    2024
}

/// Harness configuration. The JSON schema of a config file uses exactly
/// these keys; unset optional fields fall back to the study defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    pub budget: PrivacyBudget,
    /// Ambient dimension d+1 (leading-eigenvector study).
    #[serde(default)]
    pub d_plus_1: Option<usize>,
    /// Matrix size r (Fréchet study).
    #[serde(default)]
    pub r: Option<usize>,
    /// Planted eigengap nu (leading-eigenvector study).
    #[serde(default)]
    pub nu: Option<f64>,
    /// Domain diameter D (Fréchet study).
    #[serde(default)]
    pub d_w: Option<f64>,
    pub methods: Vec<Method>,
    /// Constant stepsize; defaults to 0.2 (pca) / 0.01 (frechet).
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_true_seed")]
    pub master_seed: u64,
    /// Use the published formulas verbatim (looser Lipschitz estimate,
    /// half-scale Fréchet gradient, MH noise sampling).
    #[serde(default)]
    pub paper_faithful: bool,
    /// Start the Fréchet study at the first sample instead of the identity.
    #[serde(default)]
    pub spd_init_first_sample: bool,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Leading-eigenvector study at the reference settings: eps = 0.1,
    /// delta = 1e-3, nu = 1e-3, d+1 = 50, eta = 0.2, 20 runs.
    pub fn pca_defaults() -> Self {
        Self {
            experiment: ExperimentKind::Pca,
            n_grid: vec![1000, 2000, 5000, 10000, 20000],
            runs: 20,
            budget: PrivacyBudget::new(0.1, 1e-3).expect("valid default budget"),
            d_plus_1: Some(50),
            r: None,
            nu: Some(1e-3),
            d_w: None,
            methods: vec![Method::DpRgd, Method::DpPgd],
            eta: Some(0.2),
            master_seed: default_true_seed(),
            paper_faithful: false,
            spd_init_first_sample: false,
            out_dir: None,
        }
    }

    /// Fréchet-mean study at the reference settings: r = 2, eps = 0.1,
    /// delta = 1e-3, D = 1, eta = 0.01, T = n, 20 runs.
    pub fn frechet_defaults() -> Self {
        Self {
            experiment: ExperimentKind::Frechet,
            n_grid: vec![10, 20, 50, 100, 200],
            runs: 20,
            budget: PrivacyBudget::new(0.1, 1e-3).expect("valid default budget"),
            d_plus_1: None,
            r: Some(2),
            nu: None,
            d_w: Some(1.0),
            methods: vec![Method::DpRgd, Method::DpFm],
            eta: Some(0.01),
            master_seed: default_true_seed(),
            paper_faithful: false,
            spd_init_first_sample: false,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n_grid.is_empty() {
            return Err(ExperimentError::Config("n_grid must be nonempty".into()));
        }
        if !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(ExperimentError::Config(
                "n_grid must be strictly increasing".into(),
            ));
        }
        if self.runs == 0 {
            return Err(ExperimentError::Config("runs must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(ExperimentError::Config("methods must be nonempty".into()));
        }
        match self.experiment {
            ExperimentKind::Pca => {
                if self.methods.contains(&Method::DpFm) {
                    return Err(ExperimentError::Config(
                        "dp-fm applies only to the frechet experiment".into(),
                    ));
                }
                let d_plus_1 = self.d_plus_1.unwrap_or(50);
                if d_plus_1 < 6 {
                    return Err(ExperimentError::Config(
                        "d_plus_1 must be at least 6".into(),
                    ));
                }
                if let Some(&n_min) = self.n_grid.first() {
                    if n_min < d_plus_1 {
                        return Err(ExperimentError::Config(format!(
                            "smallest n ({n_min}) must be at least d+1 ({d_plus_1})"
                        )));
                    }
                }
            }
            ExperimentKind::Frechet => {
                if self.methods.contains(&Method::DpPgd) {
                    return Err(ExperimentError::Config(
                        "dp-pgd applies only to the pca experiment".into(),
                    ));
                }
                if self.r.unwrap_or(2) < 2 {
                    return Err(ExperimentError::Config("r must be at least 2".into()));
                }
                if !(self.d_w.unwrap_or(1.0) > 0.0) {
                    return Err(ExperimentError::Config("d_w must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eta_or_default(&self) -> f64 {
        self.eta.unwrap_or(match self.experiment {
            ExperimentKind::Pca => 0.2,
            ExperimentKind::Frechet => 0.01,
        })
    }
}

/// One raw result cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: ExperimentKind,
    pub method: Method,
    pub n: usize,
    pub run: usize,
    pub seed: u64,
    /// NaN marks a cell whose method errored; the harness continues.
    pub excess_risk: f64,
    pub wallclock_ms: u64,
}

/// Mean/std aggregate over the runs of one `(method, n)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub experiment: ExperimentKind,
    pub method: Method,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

/// Deterministic seed derivation: FNV-1a over the tag/values tuple with a
/// SplitMix64 finalizer. Stable across platforms and releases.
pub fn derive_seed(master: u64, tags: &[&str], values: &[u64]) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf29ce484222325;
    const FNV_PRIME: u64 = 0x100000001b3;
    let mut h = FNV_OFFSET ^ master;
    let mut eat = |byte: u8| {
        h ^= byte as u64;
        h = h.wrapping_mul(FNV_PRIME);
    };
    for tag in tags {
        for b in tag.as_bytes() {
            eat(*b);
        }
        eat(0xff);
    }
    for v in values {
        for b in v.to_le_bytes() {
            eat(b);
        }
    }
    // SplitMix64 finalization.
    let mut z = h.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Reference solution of the leading-eigenvector problem: the top
/// eigenvector of the sample covariance, sign-fixed so the first nonzero
/// coordinate is positive.
pub fn solve_reference_pca(objective: &PcaObjective) -> DVector<f64> {
    let eig = objective.covariance().clone().symmetric_eigen();
    let mut top = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[top] {
            top = i;
        }
    }
    let mut v = eig.eigenvectors.column(top).into_owned();
    v /= v.norm();
    if let Some(first) = v.iter().find(|&&x| x != 0.0) {
        if *first < 0.0 {
            v = -v;
        }
    }
    v
}

/// Reference Fréchet mean: non-private RGD until the gradient norm falls
/// below 1e-14.
pub fn solve_reference_frechet(
    objective: &FrechetObjective,
) -> Result<nalgebra::DMatrix<f64>, ExperimentError> {
    Ok(crate::optimizer::frechet_reference_mean(objective)?)
}

/// Empirical excess risk `F(w_priv) - F(w_star)`.
pub fn excess_risk<G, O>(objective: &O, w_priv: &G::Point, w_star: &G::Point) -> f64
where
    G: Geometry,
    O: Objective<G>,
{
    objective.loss(w_priv) - objective.loss(w_star)
}
