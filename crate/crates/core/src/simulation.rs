//! Seeded generation of Gaussian curves in an orthonormal polynomial basis
//! and the shape-outlier ranking experiment built on it.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::depth_ranks;
use crate::directions::{fmt17, seeded_rng, DEFAULT_DIRECTIONS};
use crate::error::{Error, Result};
use crate::functional::{dot, FunctionalSample, Grid};
use crate::notion::{NotionRegistry, NotionRequest};

/// Number of basis functions in the experiment's data model.
pub const MODEL_DIMENSION: usize = 6;
/// Off-diagonal correlation of the clean coefficient covariance.
pub const CLEAN_CORRELATION: f64 = 0.95;
/// Outlier covariance is the inverse clean covariance divided by this.
pub const OUTLIER_COVARIANCE_DIVISOR: f64 = 100.0;

/// Orthonormal polynomials on a grid; column `j` has exact degree `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix {
    grid: Arc<Grid>,
    columns: Vec<Vec<f64>>,
}

impl BasisMatrix {
    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// `sum_j coefficients[j] * column_j` evaluated on the grid.
    pub fn combine(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.count()];
        for (c, col) in coefficients.iter().zip(&self.columns) {
            for (o, p) in out.iter_mut().zip(col) {
                *o += c * p;
            }
        }
        out
    }
}

/// Gram–Schmidt orthonormalization of `1, t, ..., t^(j-1)` under the grid
/// dot product. Each monomial is orthogonalized twice against the earlier
/// columns.
pub fn build_basis(grid: Arc<Grid>, j: usize) -> Result<BasisMatrix> {
    if j == 0 || j > grid.count() {
        return Err(Error::domain(format!("basis size {j} must be in 1..={}", grid.count())));
    }
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(j);
    for degree in 0..j {
        let mut v: Vec<f64> = grid.points().iter().map(|t| t.powi(degree as i32)).collect();
        for _ in 0..2 {
            for q in &columns {
                let proj = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= proj * b);
            }
        }
        let len = dot(&v, &v).sqrt();
        if len.is_nan() || len <= 1e-300 {
            return Err(Error::domain("monomials are linearly dependent on this grid"));
        }
        v.iter_mut().for_each(|a| *a /= len);
        columns.push(v);
    }
    Ok(BasisMatrix { grid, columns })
}

/// Gaussian law of basis coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientModel {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl CoefficientModel {
    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    /// Lower-triangular factor `L` with `L L^T = covariance`. The zero matrix
    /// is accepted with `L = 0`.
    pub fn factor(&self) -> Result<DMatrix<f64>> {
        let n = self.dimension();
        if self.covariance.iter().all(|&v| v == 0.0) {
            return Ok(DMatrix::zeros(n, n));
        }
        self.covariance
            .clone()
            .cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::domain("covariance is not positive definite"))
    }
}

fn equicorrelation(dim: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| if i == j { 1.0 } else { rho })
}

/// Centered coefficients with unit variances and correlation 0.95.
pub fn clean_model() -> CoefficientModel {
    CoefficientModel {
        mean: DVector::zeros(MODEL_DIMENSION),
        covariance: equicorrelation(MODEL_DIMENSION, CLEAN_CORRELATION),
    }
}

/// Coefficients centered at `(1, ..., 1)` with covariance `inverse(clean) / 100`.
pub fn outlier_model() -> CoefficientModel {
    let sigma = equicorrelation(MODEL_DIMENSION, CLEAN_CORRELATION);
    let chol = sigma
        .cholesky()
        .expect("equicorrelation with rho < 1 is positive definite");
    let inv = chol.solve(&DMatrix::identity(MODEL_DIMENSION, MODEL_DIMENSION));
    let sym = (&inv + inv.transpose()) * 0.5;
    CoefficientModel {
        mean: DVector::from_element(MODEL_DIMENSION, 1.0),
        covariance: sym / OUTLIER_COVARIANCE_DIVISOR,
    }
}

/// Draws `count` coefficient vectors `mean + L z` and maps them through the basis.
pub fn generate_curves<R: Rng + ?Sized>(
    model: &CoefficientModel,
    basis: &BasisMatrix,
    count: usize,
    rng: &mut R,
) -> Result<FunctionalSample> {
    if model.dimension() != basis.len() {
        return Err(Error::Dimension {
            expected: basis.len(),
            found: model.dimension(),
        });
    }
    if count == 0 {
        return Err(Error::Empty("curve count"));
    }
    let l = model.factor()?;
    let mut values = Vec::with_capacity(count * basis.grid.count());
    for _ in 0..count {
        let z = DVector::<f64>::from_iterator(
            model.dimension(),
            (0..model.dimension()).map(|_| rng.sample(StandardNormal)),
        );
        let c = &model.mean + &l * z;
        values.extend(basis.combine(c.as_slice()));
    }
    FunctionalSample::from_rows(basis.grid.clone(), values)
}

/// Coefficient vectors only, for checks in coefficient space.
pub fn generate_coefficients<R: Rng + ?Sized>(
    model: &CoefficientModel,
    count: usize,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    let l = model.factor()?;
    Ok((0..count)
        .map(|_| {
            let z = DVector::<f64>::from_iterator(
                model.dimension(),
                (0..model.dimension()).map(|_| rng.sample(StandardNormal)),
            );
            &model.mean + &l * z
        })
        .collect())
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent seed for run `run` of an experiment seeded with `master`.
pub fn child_seed(master: u64, run: u64) -> u64 {
    splitmix64(master ^ splitmix64(run))
}

fn one_or_many<'de, D>(d: D) -> std::result::Result<Vec<f64>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(u) => vec![u],
        OneOrMany::Many(v) => v,
    })
}

fn default_n_clean() -> usize {
    500
}
fn default_n_outliers() -> usize {
    50
}
fn default_grid_points() -> usize {
    101
}
fn default_directions() -> usize {
    DEFAULT_DIRECTIONS
}
fn default_u() -> Vec<f64> {
    vec![0.01, 0.05, 0.1]
}
fn default_runs() -> usize {
    50
}
fn default_depths() -> Vec<String> {
    vec!["rpd".into(), "fd".into(), "id".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_n_clean")]
    pub n_clean: usize,
    #[serde(default = "default_n_outliers")]
    pub n_outliers: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_directions", rename = "M")]
    pub directions: usize,
    /// Quantile levels; a single number is accepted as well.
    #[serde(default = "default_u", deserialize_with = "one_or_many")]
    pub u: Vec<f64>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_depths")]
    pub depths: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_clean: default_n_clean(),
            n_outliers: default_n_outliers(),
            grid_points: default_grid_points(),
            directions: default_directions(),
            u: default_u(),
            runs: default_runs(),
            seed: 0,
            depths: default_depths(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_clean == 0 || self.grid_points < 2 || self.directions == 0 || self.runs == 0 {
            return Err(Error::domain(
                "n_clean, M and runs must be positive and grid_points at least 2",
            ));
        }
        if self.u.is_empty() || self.u.iter().any(|u| !(0.0..1.0).contains(u)) {
            return Err(Error::domain("every quantile level u must lie in [0, 1)"));
        }
        if self.depths.is_empty() {
            return Err(Error::domain("at least one depth notion is required"));
        }
        Ok(())
    }
}

/// Per-curve output of one notion at one level within a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunColumn {
    pub depth: String,
    pub level: Option<f64>,
    pub beta: Option<f64>,
    pub depths: Vec<f64>,
    pub ranks: Vec<f64>,
}

/// Everything computed in one Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub run: usize,
    pub n_clean: usize,
    pub n_outliers: usize,
    pub columns: Vec<RunColumn>,
}

impl RunOutcome {
    pub fn mean_outlier_rank(&self, column: &RunColumn) -> Option<f64> {
        let outliers = self.n_clean..self.n_clean + self.n_outliers;
        let (sum, count) = outliers.fold((0.0, 0usize), |(s, c), i| (s + column.ranks[i], c + 1));
        (count > 0).then(|| sum / count as f64)
    }
}

/// Generates the pooled sample of run `run` (clean curves first).
pub fn run_sample(cfg: &ExperimentConfig, run: usize) -> Result<FunctionalSample> {
    let grid = Arc::new(Grid::uniform(cfg.grid_points)?);
    let basis = build_basis(grid, MODEL_DIMENSION)?;
    let mut rng = seeded_rng(child_seed(cfg.seed, run as u64));
    let clean = generate_curves(&clean_model(), &basis, cfg.n_clean, &mut rng)?;
    if cfg.n_outliers == 0 {
        return Ok(clean);
    }
    let outliers = generate_curves(&outlier_model(), &basis, cfg.n_outliers, &mut rng)?;
    clean.concat(&outliers)
}

/// Seed of the direction pool in run `run`.
pub fn run_pool_seed(cfg: &ExperimentConfig, run: usize) -> u64 {
    splitmix64(child_seed(cfg.seed, run as u64) ^ 0xD1B5_4A32_D192_ED03)
}

/// One run: generate, depth every pooled curve with every requested notion,
/// rank.
pub fn execute_run(cfg: &ExperimentConfig, registry: &NotionRegistry, run: usize) -> Result<RunOutcome> {
    let pooled = run_sample(cfg, run)?;
    let mut columns = Vec::new();
    for name in &cfg.depths {
        let notion = registry.get(name)?;
        let outputs = notion.evaluate(&NotionRequest {
            reference: &pooled,
            queries: &pooled,
            levels: &cfg.u,
            directions: cfg.directions,
            seed: run_pool_seed(cfg, run),
            beta_override: None,
        })?;
        for out in outputs {
            let ranks = depth_ranks(&out.depths)?.ranks;
            columns.push(RunColumn {
                depth: notion.name().to_string(),
                level: out.level,
                beta: out.beta,
                depths: out.depths,
                ranks,
            });
        }
    }
    Ok(RunOutcome {
        run,
        n_clean: cfg.n_clean,
        n_outliers: cfg.n_outliers,
        columns,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthSummary {
    pub depth: String,
    /// Quantile level for regularized notions.
    pub u: Option<f64>,
    /// Mean over runs of the mean outlier rank; `None` when undefined.
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub per_run: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// False when there are no outliers to rank.
    pub metric_defined: bool,
    pub runs_completed: usize,
    pub runs_failed: usize,
    pub single_run: bool,
    pub failures: Vec<RunFailure>,
    pub results: Vec<DepthSummary>,
    /// Registered notions that have no implementation (reported, not computed).
    pub unimplemented: Vec<String>,
}

/// Two-pass mean and sample standard deviation (0 for a single value).
pub fn mean_sd(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Some((mean, (ss / (n - 1.0)).sqrt()))
}

fn is_run_failure(e: &Error) -> bool {
    matches!(e, Error::EmptyDirectionSet { .. } | Error::DegenerateSample)
}

/// Runs every Monte Carlo repetition (in parallel) and aggregates the mean
/// outlier ranks. Runs whose regularized pool is empty are excluded and
/// counted; more than 5% of such failures is an error.
pub fn run_experiment(cfg: &ExperimentConfig, registry: &NotionRegistry) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut requested = Vec::new();
    let mut unimplemented = Vec::new();
    for name in &cfg.depths {
        let notion = registry.get(name)?;
        if notion.implemented() {
            requested.push(notion);
        } else {
            unimplemented.push(notion.name().to_string());
        }
    }
    let cfg_run = ExperimentConfig {
        depths: requested.iter().map(|n| n.name().to_string()).collect(),
        ..cfg.clone()
    };

    let outcomes: Vec<Result<RunOutcome>> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| execute_run(&cfg_run, registry, r))
        .collect();

    let mut completed = Vec::new();
    let mut failures = Vec::new();
    for (run, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(o) => completed.push(o),
            Err(e) if is_run_failure(&e) => failures.push(RunFailure {
                run,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    if failures.len() * 20 > cfg.runs {
        return Err(Error::ExperimentFailed {
            failed: failures.len(),
            runs: cfg.runs,
        });
    }

    let metric_defined = cfg.n_outliers > 0;
    let mut results = Vec::new();
    for notion in &requested {
        let levels: Vec<Option<f64>> = if notion.regularized() {
            cfg.u.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for level in levels {
            let per_run: Vec<f64> = completed
                .iter()
                .filter_map(|o| {
                    let col = o
                        .columns
                        .iter()
                        .find(|c| c.depth == notion.name() && c.level == level)?;
                    o.mean_outlier_rank(col)
                })
                .collect();
            let stats = if metric_defined { mean_sd(&per_run) } else { None };
            results.push(DepthSummary {
                depth: notion.name().to_string(),
                u: level,
                mean: stats.map(|s| s.0),
                sd: stats.map(|s| s.1),
                per_run,
            });
        }
    }

    Ok(ExperimentReport {
        config: cfg.clone(),
        metric_defined,
        runs_completed: completed.len(),
        runs_failed: failures.len(),
        single_run: completed.len() == 1,
        failures,
        results,
        unimplemented,
    })
}

impl ExperimentReport {
    pub fn summary(&self, depth: &str, u: Option<f64>) -> Option<&DepthSummary> {
        self.results
            .iter()
            .find(|s| s.depth == depth && (s.u.is_none() || s.u == u))
    }

    /// CSV laid out like the outlier-ranking table: one row per quantile
    /// level, mean and standard deviation columns per notion. Level-free
    /// notions repeat on every row.
    pub fn table_csv(&self) -> String {
        const COLUMNS: [(&str, &str); 5] = [
            ("rpd", "RPD"),
            ("rhd", "RHD"),
            ("rhd6", "RHD6"),
            ("fd", "FD"),
            ("id", "ID"),
        ];
        let mut out = String::from("u");
        for (_, label) in COLUMNS {
            out.push_str(&format!(",{label}_mean,{label}_sd"));
        }
        out.push('\n');
        for &u in &self.config.u {
            out.push_str(&fmt17(u));
            for (name, _) in COLUMNS {
                let cells = if self.unimplemented.iter().any(|n| n == name) {
                    ["unimplemented".to_string(), "unimplemented".to_string()]
                } else {
                    match self.summary(name, Some(u)) {
                        None => ["NA".to_string(), "NA".to_string()],
                        Some(s) => match (s.mean, s.sd) {
                            (Some(m), Some(sd)) => [fmt17(m), fmt17(sd)],
                            _ => ["undefined".to_string(), "undefined".to_string()],
                        },
                    }
                };
                out.push_str(&format!(",{},{}", cells[0], cells[1]));
            }
            out.push('\n');
        }
        out
    }
}
