//! Empirical checks of the theory: degeneracy without regularization, the
//! elliptical MAD identity, consistency across sample sizes and breakdown of
//! the depth median.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::depth::{depth_lower_bound, rpd_batch, rpd_median, zero_mad_outlyingness};
use crate::directions::{filter_pool, sample_unit_direction, seeded_rng, tune_beta, DirectionPool};
use crate::error::{Error, Result};
use crate::functional::{dot, FunctionalSample, Grid};
use crate::robust::sample_mad;
use crate::simulation::{build_basis, clean_model, generate_curves, splitmix64, CoefficientModel, MODEL_DIMENSION};

/// Third quartile of the standard normal distribution.
pub const NORMAL_Q3: f64 = 0.674_489_750_196_081_7;

#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyConfig {
    pub dim: usize,
    pub n: usize,
    /// Increasing direction counts; each is a prefix of one seeded stream.
    pub schedule: Vec<usize>,
    pub seed: u64,
    pub u: f64,
    /// Coordinate `j` (1-based) has standard deviation `j^-decay`.
    pub decay: f64,
}

impl Default for DegeneracyConfig {
    fn default() -> Self {
        DegeneracyConfig {
            dim: 101,
            n: 500,
            schedule: vec![1_000, 10_000, 100_000, 200_000],
            seed: 0,
            u: 0.05,
            decay: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyRow {
    pub directions: usize,
    /// Smallest depth over the sample using every direction (no regularization).
    pub unregularized_min_depth: f64,
    pub beta: f64,
    pub regularized_min_depth: f64,
    /// Smallest `depth - lower_bound` over the sample.
    pub min_bound_slack: f64,
}

/// Gaussian sample with independent coordinates of standard deviation `j^-decay`.
pub fn decaying_gaussian_sample(dim: usize, n: usize, decay: f64, seed: u64) -> Result<FunctionalSample> {
    let grid = Arc::new(Grid::uniform(dim)?);
    let mut rng = seeded_rng(seed);
    let sd: Vec<f64> = (1..=dim).map(|j| (j as f64).powf(-decay)).collect();
    let mut values = Vec::with_capacity(dim * n);
    for _ in 0..n {
        values.extend(sd.iter().map(|s| s * rng.sample::<f64, _>(StandardNormal)));
    }
    FunctionalSample::from_rows(grid, values)
}

/// Minimum sample depth with and without regularization as the number of
/// random directions grows.
pub fn degeneracy_demo(cfg: &DegeneracyConfig) -> Result<Vec<DegeneracyRow>> {
    if cfg.schedule.is_empty() || cfg.schedule.windows(2).any(|w| w[1] <= w[0]) || cfg.schedule[0] == 0 {
        return Err(Error::domain(
            "direction schedule must be positive and strictly increasing",
        ));
    }
    let sample = decaying_gaussian_sample(cfg.dim, cfg.n, cfg.decay, cfg.seed)?;
    let m_max = *cfg.schedule.last().expect("non-empty schedule");
    let pool = DirectionPool::build(&sample, m_max, splitmix64(cfg.seed ^ 0x5EED))?;

    // Per direction, the largest unregularized outlyingness over the sample.
    let worst: Vec<f64> = pool
        .directions()
        .enumerate()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(sample.len()),
            |buf, (k, v)| {
                buf.clear();
                buf.extend(sample.rows().map(|x| dot(x, v)));
                let (med, mad) = (pool.proj_median()[k], pool.proj_mad()[k]);
                buf.iter()
                    .map(|&p| zero_mad_outlyingness(p, med, mad))
                    .fold(0.0, f64::max)
            },
        )
        .collect();

    let mut betas = Vec::with_capacity(cfg.schedule.len());
    for &m in &cfg.schedule {
        betas.push(tune_beta(&pool.prefix(m)?, cfg.u)?);
    }
    let bounds: Vec<Vec<f64>> = sample
        .rows()
        .map(|x| {
            betas
                .iter()
                .map(|&b| depth_lower_bound(x, &sample, b))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    // Regularized depth of each point at every prefix, projecting once.
    let (med, mad) = (pool.proj_median(), pool.proj_mad());
    let per_point: Vec<Vec<f64>> = sample
        .values()
        .par_chunks_exact(sample.dim())
        .map_init(
            || vec![0.0; m_max],
            |scores, x| {
                for (k, (s, v)) in scores.iter_mut().zip(pool.directions()).enumerate() {
                    *s = zero_mad_outlyingness(dot(x, v), med[k], mad[k]);
                }
                cfg.schedule
                    .iter()
                    .zip(&betas)
                    .map(|(&m, &beta)| {
                        let o = (0..m)
                            .filter(|&k| mad[k] >= beta)
                            .map(|k| scores[k])
                            .fold(f64::NEG_INFINITY, f64::max);
                        1.0 / (1.0 + o)
                    })
                    .collect()
            },
        )
        .collect();

    let mut rows = Vec::with_capacity(cfg.schedule.len());
    let mut running: f64 = 0.0;
    let mut start = 0;
    for (j, (&m, &beta)) in cfg.schedule.iter().zip(&betas).enumerate() {
        running = worst[start..m].iter().copied().fold(running, f64::max);
        start = m;
        let unregularized = if running.is_infinite() {
            0.0
        } else {
            1.0 / (1.0 + running)
        };
        let regularized_min_depth = per_point.iter().map(|d| d[j]).fold(f64::INFINITY, f64::min);
        let min_bound_slack = per_point
            .iter()
            .zip(&bounds)
            .map(|(d, b)| d[j] - b[j])
            .fold(f64::INFINITY, f64::min);
        rows.push(DegeneracyRow {
            directions: m,
            unregularized_min_depth: unregularized,
            beta,
            regularized_min_depth,
            min_bound_slack,
        });
    }
    Ok(rows)
}

/// Random symmetric positive-definite matrix `A A^T + 0.1 I`.
pub fn random_spd<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    &a * a.transpose() + DMatrix::identity(dim, dim) * 0.1
}

/// Fraction of random directions `v` for which the sample MAD of a Gaussian
/// sample projected on `v` is within `rel_tol` of `NORMAL_Q3 * |Sigma^1/2 v|`.
pub fn elliptical_mad_fraction(n: usize, dim: usize, directions: usize, rel_tol: f64, seed: u64) -> Result<f64> {
    let mut rng = seeded_rng(seed);
    let cov = random_spd(dim, &mut rng);
    let model = CoefficientModel {
        mean: DVector::zeros(dim),
        covariance: cov.clone(),
    };
    let draws = crate::simulation::generate_coefficients(&model, n, &mut rng)?;
    let mut hits = 0usize;
    for _ in 0..directions {
        let v = sample_unit_direction(dim, &mut rng)?;
        let v = DVector::from_column_slice(v.coords());
        let proj: Vec<f64> = draws.iter().map(|x| x.dot(&v)).collect();
        let scale = (v.transpose() * &cov * &v)[(0, 0)].sqrt();
        let mad = sample_mad(&proj)?;
        if (mad - NORMAL_Q3 * scale).abs() <= rel_tol * scale {
            hits += 1;
        }
    }
    Ok(hits as f64 / directions as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyOutcome {
    pub beta: f64,
    pub small: Vec<f64>,
    pub large: Vec<f64>,
    pub mean_abs_diff: f64,
}

/// Depth of five fixed query curves relative to a small and a large sample
/// from the clean model, with shared directions and `beta` tuned on the
/// large sample.
pub fn consistency_probe(
    small_n: usize,
    large_n: usize,
    directions: usize,
    u: f64,
    seed: u64,
) -> Result<ConsistencyOutcome> {
    let grid = Arc::new(Grid::uniform(101)?);
    let basis = build_basis(grid, MODEL_DIMENSION)?;
    let model = clean_model();
    let queries = generate_curves(&model, &basis, 5, &mut seeded_rng(splitmix64(seed ^ 0x0051)))?;
    let small = generate_curves(&model, &basis, small_n, &mut seeded_rng(splitmix64(seed ^ 0x0052)))?;
    let large = generate_curves(&model, &basis, large_n, &mut seeded_rng(splitmix64(seed ^ 0x0053)))?;
    let dir_seed = splitmix64(seed ^ 0x0054);
    let large_pool = DirectionPool::build(&large, directions, dir_seed)?;
    let small_pool = DirectionPool::build(&small, directions, dir_seed)?;
    let beta = tune_beta(&large_pool, u)?;
    let dl: Vec<f64> = rpd_batch(&queries, &filter_pool(&large_pool, beta)?)?
        .iter()
        .map(|d| d.value)
        .collect();
    let ds: Vec<f64> = rpd_batch(&queries, &filter_pool(&small_pool, beta)?)?
        .iter()
        .map(|d| d.value)
        .collect();
    let mean_abs_diff = dl.iter().zip(&ds).map(|(a, b)| (a - b).abs()).sum::<f64>() / dl.len() as f64;
    Ok(ConsistencyOutcome {
        beta,
        small: ds,
        large: dl,
        mean_abs_diff,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreakdownConfig {
    pub n: usize,
    pub epsilon: f64,
    pub radii: Vec<f64>,
    pub directions: usize,
    pub u: f64,
    /// Outliers are `R * w` plus this multiple of a clean-model curve.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for BreakdownConfig {
    fn default() -> Self {
        BreakdownConfig {
            n: 200,
            epsilon: 0.4,
            radii: vec![1e1, 1e2, 1e3, 1e4],
            directions: 2_000,
            u: 0.05,
            jitter: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreakdownPoint {
    pub radius: f64,
    pub median_index: usize,
    /// Whether the contaminated median is one of the retained clean curves.
    pub median_is_clean: bool,
    /// Largest `|<median(contaminated) - median(clean), v>|` over the kept
    /// directions of the clean regularized pool.
    pub displacement: f64,
}

/// Replaces the first `floor(epsilon * n)` curves of `clean` with
/// near-point-mass outliers `radius * w + jitter * noise_i`.
pub fn contaminate(
    clean: &FunctionalSample,
    noise: &FunctionalSample,
    w: &[f64],
    epsilon: f64,
    radius: f64,
    jitter: f64,
) -> Result<(FunctionalSample, usize)> {
    let count = (epsilon * clean.len() as f64).floor() as usize;
    let mut values = clean.values().to_vec();
    let d = clean.dim();
    for i in 0..count {
        let row = &mut values[i * d..(i + 1) * d];
        for ((r, wj), z) in row.iter_mut().zip(w).zip(noise.row(i % noise.len())) {
            *r = radius * wj + jitter * z;
        }
    }
    Ok((FunctionalSample::from_rows(clean.grid().clone(), values)?, count))
}

pub fn breakdown_probe(cfg: &BreakdownConfig) -> Result<Vec<BreakdownPoint>> {
    let grid = Arc::new(Grid::uniform(101)?);
    let basis = build_basis(grid.clone(), MODEL_DIMENSION)?;
    let model = clean_model();
    let clean = generate_curves(&model, &basis, cfg.n, &mut seeded_rng(splitmix64(cfg.seed ^ 0x00B1)))?;
    let noise = generate_curves(&model, &basis, cfg.n, &mut seeded_rng(splitmix64(cfg.seed ^ 0x00B2)))?;
    let w = sample_unit_direction(grid.count(), &mut seeded_rng(splitmix64(cfg.seed ^ 0x00B3)))?;
    let dir_seed = splitmix64(cfg.seed ^ 0x00B4);

    let clean_pool = DirectionPool::build(&clean, cfg.directions, dir_seed)?;
    let clean_reg = filter_pool(&clean_pool, tune_beta(&clean_pool, cfg.u)?)?;
    let clean_median = rpd_median(&clean, &clean_reg)?;

    cfg.radii
        .iter()
        .map(|&radius| {
            let (sample, count) = contaminate(&clean, &noise, w.coords(), cfg.epsilon, radius, cfg.jitter)?;
            let pool = DirectionPool::build(&sample, cfg.directions, dir_seed)?;
            let reg = filter_pool(&pool, tune_beta(&pool, cfg.u)?)?;
            let median = rpd_median(&sample, &reg)?;
            let delta: Vec<f64> = median
                .curve
                .values()
                .iter()
                .zip(clean_median.curve.values())
                .map(|(a, b)| a - b)
                .collect();
            let displacement = clean_reg
                .kept()
                .iter()
                .map(|&k| dot(&delta, clean_pool.direction(k)).abs())
                .fold(0.0, f64::max);
            Ok(BreakdownPoint {
                radius,
                median_index: median.index,
                median_is_clean: median.index >= count,
                displacement,
            })
        })
        .collect()
}
