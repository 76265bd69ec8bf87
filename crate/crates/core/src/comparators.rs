//! Univariate halfspace depth and the integrated (FD) and infimal (ID)
//! functional depths built from it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functional::{Curve, FunctionalSample};

/// `min(#{z <= u}, #{z >= u}) / n`.
pub fn hd_univariate(u: f64, sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Empty("real sample"));
    }
    let (mut below, mut above) = (0usize, 0usize);
    for &z in sample {
        below += usize::from(z <= u);
        above += usize::from(z >= u);
    }
    Ok(below.min(above) as f64 / sample.len() as f64)
}

/// Univariate halfspace depth per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseDepthProfile {
    pub per_grid_point: Vec<f64>,
}

impl PointwiseDepthProfile {
    pub fn integrated(&self) -> f64 {
        self.per_grid_point.iter().sum::<f64>() / self.per_grid_point.len() as f64
    }

    pub fn infimal(&self) -> f64 {
        self.per_grid_point.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Sorted marginals of a sample, one column per grid point, for fast
/// repeated profile evaluation.
#[derive(Debug, Clone)]
pub struct Marginals {
    sorted: Vec<Vec<f64>>,
    n: usize,
}

impl Marginals {
    pub fn new(sample: &FunctionalSample) -> Self {
        let sorted = (0..sample.dim())
            .into_par_iter()
            .map(|j| {
                let mut col: Vec<f64> = sample.rows().map(|r| r[j]).collect();
                col.sort_by(f64::total_cmp);
                col
            })
            .collect();
        Marginals {
            sorted,
            n: sample.len(),
        }
    }

    pub fn profile(&self, x: &[f64]) -> PointwiseDepthProfile {
        debug_assert_eq!(x.len(), self.sorted.len());
        let per_grid_point = x
            .iter()
            .zip(&self.sorted)
            .map(|(&u, col)| {
                let below = col.partition_point(|&z| z <= u);
                let above = self.n - col.partition_point(|&z| z < u);
                below.min(above) as f64 / self.n as f64
            })
            .collect();
        PointwiseDepthProfile { per_grid_point }
    }
}

pub fn pointwise_profile(x: &Curve, sample: &FunctionalSample) -> Result<PointwiseDepthProfile> {
    sample.check_grid(x.grid())?;
    let per_grid_point = (0..sample.dim())
        .map(|j| {
            let col: Vec<f64> = sample.rows().map(|r| r[j]).collect();
            hd_univariate(x.values()[j], &col)
        })
        .collect::<Result<_>>()?;
    Ok(PointwiseDepthProfile { per_grid_point })
}

/// Integrated halfspace depth: grid mean of the pointwise profile.
pub fn fd(x: &Curve, sample: &FunctionalSample) -> Result<f64> {
    Ok(pointwise_profile(x, sample)?.integrated())
}

/// Infimal halfspace depth: grid minimum of the pointwise profile.
pub fn id(x: &Curve, sample: &FunctionalSample) -> Result<f64> {
    Ok(pointwise_profile(x, sample)?.infimal())
}

/// Profiles of every query curve against `reference`.
pub fn profiles_batch(queries: &FunctionalSample, reference: &FunctionalSample) -> Result<Vec<PointwiseDepthProfile>> {
    reference.check_grid(queries.grid())?;
    let marginals = Marginals::new(reference);
    Ok(queries
        .values()
        .par_chunks_exact(queries.dim())
        .map(|x| marginals.profile(x))
        .collect())
}
