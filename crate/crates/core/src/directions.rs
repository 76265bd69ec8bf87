//! Seeded direction pools, projection statistics, beta tuning and the
//! regularization filter.
//!
//! A [`DirectionPool`] holds `M` unit directions drawn uniformly on the
//! sphere together with the median and MAD of the reference sample projected
//! onto each one. Depth queries then cost `O(M * d)` instead of
//! `O(M * n * d)`. A [`RegularizedPool`] is the subset of directions whose
//! projected MAD is at least `beta`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::functional::{dot, Direction, FunctionalSample, Grid, UNIT_NORM_TOL};
use crate::robust::{empirical_quantile, median_and_mad_in_place};

/// Default number of sampled directions.
pub const DEFAULT_DIRECTIONS: usize = 10_000;

/// Seeded generator used for every random stream in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws a direction uniformly on the unit sphere of dimension `dim` by
/// normalizing a standard Gaussian vector.
pub fn sample_unit_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Direction> {
    if dim == 0 {
        return Err(Error::domain("direction dimension must be positive"));
    }
    loop {
        let coords: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if coords.iter().any(|&c| c != 0.0) {
            return Direction::new(coords);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionPool {
    grid: Arc<Grid>,
    directions: Vec<f64>,
    proj_median: Vec<f64>,
    proj_mad: Vec<f64>,
    source_checksum: String,
    seed: u64,
}

impl DirectionPool {
    /// Draws `m` directions sequentially from `seed` and computes the
    /// projection statistics of `sample` on each.
    pub fn build(sample: &FunctionalSample, m: usize, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("a direction pool needs at least one direction"));
        }
        let dim = sample.dim();
        let mut rng = seeded_rng(seed);
        let mut directions = Vec::with_capacity(m * dim);
        for _ in 0..m {
            directions.extend(sample_unit_direction(dim, &mut rng)?.into_coords());
        }
        Ok(Self::from_flat(sample, directions, seed))
    }

    /// Pool over caller-supplied directions.
    pub fn from_directions(sample: &FunctionalSample, directions: &[Direction], seed: u64) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::domain("a direction pool needs at least one direction"));
        }
        let mut flat = Vec::with_capacity(directions.len() * sample.dim());
        for d in directions {
            if d.dim() != sample.dim() {
                return Err(Error::Dimension {
                    expected: sample.dim(),
                    found: d.dim(),
                });
            }
            flat.extend_from_slice(d.coords());
        }
        Ok(Self::from_flat(sample, flat, seed))
    }

    /// Same directions, statistics recomputed for another sample on the same grid.
    pub fn restat(&self, sample: &FunctionalSample) -> Result<Self> {
        sample.check_grid(&self.grid)?;
        Ok(Self::from_flat(sample, self.directions.clone(), self.seed))
    }

    fn from_flat(sample: &FunctionalSample, directions: Vec<f64>, seed: u64) -> Self {
        let dim = sample.dim();
        let (proj_median, proj_mad): (Vec<f64>, Vec<f64>) = directions
            .par_chunks_exact(dim)
            .map_init(
                || Vec::with_capacity(sample.len()),
                |buf, v| {
                    buf.clear();
                    buf.extend(sample.rows().map(|x| dot(x, v)));
                    median_and_mad_in_place(buf)
                },
            )
            .unzip();
        DirectionPool {
            grid: sample.grid().clone(),
            directions,
            proj_median,
            proj_mad,
            source_checksum: sample_checksum(sample),
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.proj_mad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proj_mad.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.grid.count()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn direction(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.directions[k * d..(k + 1) * d]
    }

    pub fn directions(&self) -> std::slice::ChunksExact<'_, f64> {
        self.directions.chunks_exact(self.dim())
    }

    pub fn proj_median(&self) -> &[f64] {
        &self.proj_median
    }

    pub fn proj_mad(&self) -> &[f64] {
        &self.proj_mad
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// SHA-256 of the reference sample this pool was computed from.
    pub fn source_checksum(&self) -> &str {
        &self.source_checksum
    }

    pub fn max_mad(&self) -> f64 {
        self.proj_mad.iter().copied().fold(0.0, f64::max)
    }

    /// Recomputes the statistics from `sample` and checks they match bit for bit.
    pub fn verify(&self, sample: &FunctionalSample) -> Result<()> {
        let fresh = self.restat(sample)?;
        if fresh.proj_median != self.proj_median || fresh.proj_mad != self.proj_mad {
            return Err(Error::domain("pool statistics do not match the supplied sample"));
        }
        Ok(())
    }

    /// Sub-pool of the first `m` directions.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.len() {
            return Err(Error::domain(format!("prefix length {m} outside 1..={}", self.len())));
        }
        Ok(DirectionPool {
            grid: self.grid.clone(),
            directions: self.directions[..m * self.dim()].to_vec(),
            proj_median: self.proj_median[..m].to_vec(),
            proj_mad: self.proj_mad[..m].to_vec(),
            source_checksum: self.source_checksum.clone(),
            seed: self.seed,
        })
    }
}

pub fn build_pool(sample: &FunctionalSample, m: usize, seed: u64) -> Result<DirectionPool> {
    DirectionPool::build(sample, m, seed)
}

/// `beta` as the lower `u`-quantile of the pool's projected MADs.
///
/// If that quantile is zero (only possible when some directions have zero
/// MAD) the smallest positive MAD is returned instead, so `beta > 0`.
pub fn tune_beta(pool: &DirectionPool, u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::domain(format!("quantile level u = {u} is outside [0, 1)")));
    }
    let smallest_positive = pool
        .proj_mad
        .iter()
        .copied()
        .filter(|&m| m > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !smallest_positive.is_finite() {
        return Err(Error::DegenerateSample);
    }
    let q = empirical_quantile(&pool.proj_mad, u)?;
    Ok(q.max(smallest_positive))
}

/// Directions of a pool whose projected MAD is at least `beta`.
#[derive(Debug, Clone)]
pub struct RegularizedPool<'a> {
    parent: &'a DirectionPool,
    beta: f64,
    kept: Vec<usize>,
}

impl<'a> RegularizedPool<'a> {
    pub fn parent(&self) -> &'a DirectionPool {
        self.parent
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.parent.grid
    }
}

pub fn filter_pool(pool: &DirectionPool, beta: f64) -> Result<RegularizedPool<'_>> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::domain(format!("beta must be positive and finite, got {beta}")));
    }
    let kept: Vec<usize> = pool
        .proj_mad
        .iter()
        .enumerate()
        .filter(|(_, &m)| m >= beta)
        .map(|(k, _)| k)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyDirectionSet {
            beta,
            max_mad: pool.max_mad(),
        });
    }
    Ok(RegularizedPool {
        parent: pool,
        beta,
        kept,
    })
}

/// SHA-256 over the grid and sample values (little-endian bit patterns).
pub fn sample_checksum(sample: &FunctionalSample) -> String {
    let mut h = Sha256::new();
    h.update((sample.len() as u64).to_le_bytes());
    h.update((sample.dim() as u64).to_le_bytes());
    for p in sample.grid().points() {
        h.update(p.to_bits().to_le_bytes());
    }
    for v in sample.values() {
        h.update(v.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Formats a float with 17 significant digits; parses back bit-exactly.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub const POOL_FORMAT: &str = "rpd-direction-pool/1";

/// On-disk JSON layout of a [`DirectionPool`]. Every number is a decimal
/// string with 17 significant digits.
#[derive(Debug, Serialize, Deserialize)]
struct PoolFile {
    format: String,
    dim: usize,
    m: usize,
    seed: u64,
    source_checksum: String,
    grid: Vec<String>,
    directions: Vec<Vec<String>>,
    proj_median: Vec<String>,
    proj_mad: Vec<String>,
}

impl DirectionPool {
    pub fn to_json(&self) -> Result<String> {
        let file = PoolFile {
            format: POOL_FORMAT.to_string(),
            dim: self.dim(),
            m: self.len(),
            seed: self.seed,
            source_checksum: self.source_checksum.clone(),
            grid: self.grid.points().iter().copied().map(fmt17).collect(),
            directions: self
                .directions()
                .map(|v| v.iter().copied().map(fmt17).collect())
                .collect(),
            proj_median: self.proj_median.iter().copied().map(fmt17).collect(),
            proj_mad: self.proj_mad.iter().copied().map(fmt17).collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PoolFile = serde_json::from_str(text)?;
        if file.format != POOL_FORMAT {
            return Err(Error::domain(format!("unsupported pool format `{}`", file.format)));
        }
        let parse = |s: &String| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::domain(format!("invalid number `{s}` in pool file")))
        };
        let parse_all = |v: &[String]| v.iter().map(parse).collect::<Result<Vec<f64>>>();
        let grid = Arc::new(Grid::new(parse_all(&file.grid)?)?);
        if grid.count() != file.dim {
            return Err(Error::Dimension {
                expected: file.dim,
                found: grid.count(),
            });
        }
        let m = file.m;
        if m == 0 || file.directions.len() != m || file.proj_median.len() != m || file.proj_mad.len() != m {
            return Err(Error::domain("pool file lists disagree in length"));
        }
        let mut directions = Vec::with_capacity(m * file.dim);
        for row in &file.directions {
            if row.len() != file.dim {
                return Err(Error::Dimension {
                    expected: file.dim,
                    found: row.len(),
                });
            }
            let coords = parse_all(row)?;
            let len = dot(&coords, &coords).sqrt();
            if (len - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::domain("pool direction is not unit length"));
            }
            directions.extend(coords);
        }
        let proj_median = parse_all(&file.proj_median)?;
        let proj_mad = parse_all(&file.proj_mad)?;
        if proj_mad.iter().any(|&v| v < 0.0) {
            return Err(Error::domain("negative MAD in pool file"));
        }
        Ok(DirectionPool {
            grid,
            directions,
            proj_median,
            proj_mad,
            source_checksum: file.source_checksum,
            seed: file.seed,
        })
    }
}
