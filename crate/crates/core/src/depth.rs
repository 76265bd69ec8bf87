//! Outlyingness, regularized projection depth and quantities derived from it.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::directions::{DirectionPool, RegularizedPool};
use crate::error::{Error, Result};
use crate::functional::{dot, norm, Curve, Direction, FunctionalSample};
use crate::robust::sample_median;

/// Depth of one query together with the direction that attains it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthValue {
    pub value: f64,
    /// Index into the parent [`DirectionPool`] of the most outlying kept
    /// direction (smallest index on ties).
    pub worst_direction: usize,
}

/// `|<x, v> - med| / mad`.
pub fn outlyingness(x: &Curve, v: &Direction, med: f64, mad: f64) -> Result<f64> {
    if mad.is_nan() || mad <= 0.0 {
        return Err(Error::domain(format!("MAD must be positive, got {mad}")));
    }
    if x.values().len() != v.dim() {
        return Err(Error::Dimension {
            expected: x.values().len(),
            found: v.dim(),
        });
    }
    Ok(standardized(dot(x.values(), v.coords()), med, mad))
}

#[inline]
fn standardized(projection: f64, med: f64, mad: f64) -> f64 {
    (projection - med).abs() / mad
}

/// Largest outlyingness over the kept directions, first index on ties.
fn worst_over(x: &[f64], pool: &RegularizedPool<'_>) -> (f64, usize) {
    let parent = pool.parent();
    let (med, mad) = (parent.proj_median(), parent.proj_mad());
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for &k in pool.kept() {
        let o = standardized(dot(x, parent.direction(k)), med[k], mad[k]);
        if o > best.0 {
            best = (o, k);
        }
    }
    best
}

/// Regularized projection depth of `x` over the kept directions of `pool`.
pub fn rpd(x: &Curve, pool: &RegularizedPool<'_>) -> Result<DepthValue> {
    if **x.grid() != **pool.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(rpd_values(x.values(), pool))
}

pub(crate) fn rpd_values(x: &[f64], pool: &RegularizedPool<'_>) -> DepthValue {
    let (o, k) = worst_over(x, pool);
    DepthValue {
        value: 1.0 / (1.0 + o),
        worst_direction: k,
    }
}

/// [`rpd`] for every curve of `queries`, in order.
pub fn rpd_batch(queries: &FunctionalSample, pool: &RegularizedPool<'_>) -> Result<Vec<DepthValue>> {
    queries.check_grid(pool.grid())?;
    Ok(queries
        .values()
        .par_chunks_exact(queries.dim())
        .map(|x| rpd_values(x, pool))
        .collect())
}

/// Evaluates several regularizations of the same parent pool at once,
/// projecting each query only once. `result[j][i]` equals
/// `rpd(queries[i], pools[j])` exactly.
pub fn rpd_batch_multi(queries: &FunctionalSample, pools: &[RegularizedPool<'_>]) -> Result<Vec<Vec<DepthValue>>> {
    let Some(first) = pools.first() else {
        return Ok(Vec::new());
    };
    let parent = first.parent();
    if pools.iter().any(|p| !std::ptr::eq(p.parent(), parent)) {
        return Err(Error::domain("regularized pools must share one parent pool"));
    }
    queries.check_grid(parent.grid())?;
    let (med, mad) = (parent.proj_median(), parent.proj_mad());
    let per_query: Vec<Vec<DepthValue>> = queries
        .values()
        .par_chunks_exact(queries.dim())
        .map_init(
            || vec![0.0; parent.len()],
            |scores, x| {
                for (k, (s, v)) in scores.iter_mut().zip(parent.directions()).enumerate() {
                    *s = standardized(dot(x, v), med[k], mad[k]);
                }
                pools
                    .iter()
                    .map(|pool| {
                        let mut best = (f64::NEG_INFINITY, usize::MAX);
                        for &k in pool.kept() {
                            if scores[k] > best.0 {
                                best = (scores[k], k);
                            }
                        }
                        DepthValue {
                            value: 1.0 / (1.0 + best.0),
                            worst_direction: best.1,
                        }
                    })
                    .collect()
            },
        )
        .collect();
    Ok((0..pools.len())
        .map(|j| per_query.iter().map(|row| row[j]).collect())
        .collect())
}

/// Supremum of outlyingness over the directions whose projected MAD is at
/// least `t`.
pub fn max_outlyingness(x: &Curve, pool: &DirectionPool, t: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::domain(format!("threshold t must be positive, got {t}")));
    }
    if **x.grid() != **pool.grid() {
        return Err(Error::GridMismatch);
    }
    let (med, mad) = (pool.proj_median(), pool.proj_mad());
    let mut sup = None::<f64>;
    for (k, v) in pool.directions().enumerate() {
        if mad[k] >= t {
            let o = standardized(dot(x.values(), v), med[k], mad[k]);
            sup = Some(sup.map_or(o, |s| s.max(o)));
        }
    }
    sup.ok_or(Error::EmptyDirectionSet {
        beta: t,
        max_mad: pool.max_mad(),
    })
}

/// Largest outlyingness over every direction of `pool`, without
/// regularization. A direction with zero MAD contributes infinity when the
/// query projects off the median and zero when it projects onto it.
pub fn unregularized_outlyingness(x: &[f64], pool: &DirectionPool) -> f64 {
    let (med, mad) = (pool.proj_median(), pool.proj_mad());
    let mut sup: f64 = 0.0;
    for (k, v) in pool.directions().enumerate() {
        let o = zero_mad_outlyingness(dot(x, v), med[k], mad[k]);
        sup = sup.max(o);
    }
    sup
}

pub(crate) fn zero_mad_outlyingness(projection: f64, med: f64, mad: f64) -> f64 {
    let gap = (projection - med).abs();
    if mad > 0.0 {
        gap / mad
    } else if gap > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Projection depth over all pool directions (the `beta -> 0` limit).
pub fn unregularized_depth(x: &Curve, pool: &DirectionPool) -> Result<f64> {
    if **x.grid() != **pool.grid() {
        return Err(Error::GridMismatch);
    }
    let o = unregularized_outlyingness(x.values(), pool);
    Ok(if o.is_infinite() { 0.0 } else { 1.0 / (1.0 + o) })
}

/// Positive lower bound on the depth of `x`:
/// `(1 + (|x| + med_i |X_i|) / beta)^-1`.
pub fn depth_lower_bound(x: &[f64], reference: &FunctionalSample, beta: f64) -> Result<f64> {
    let norms: Vec<f64> = reference.rows().map(norm).collect();
    let med_norm = sample_median(&norms)?;
    Ok(1.0 / (1.0 + (norm(x) + med_norm) / beta))
}

/// Normalized midranks: the least deep curve gets the smallest rank, ties
/// share the average of their positions, and everything is divided by `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector {
    pub ranks: Vec<f64>,
}

impl RankVector {
    pub fn mean_over(&self, indices: impl IntoIterator<Item = usize>) -> Option<f64> {
        let (sum, count) = indices
            .into_iter()
            .fold((0.0, 0usize), |(s, c), i| (s + self.ranks[i], c + 1));
        (count > 0).then(|| sum / count as f64)
    }
}

pub fn depth_ranks(depths: &[f64]) -> Result<RankVector> {
    if depths.is_empty() {
        return Err(Error::Empty("depth list"));
    }
    let n = depths.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| depths[a].total_cmp(&depths[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && depths[order[end]].total_cmp(&depths[order[start]]) == Ordering::Equal {
            end += 1;
        }
        // Positions start+1..=end share their average.
        let midrank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = midrank / n as f64;
        }
        start = end;
    }
    Ok(RankVector { ranks })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpdMedian {
    pub index: usize,
    pub curve: Curve,
    pub depth: DepthValue,
}

/// Deepest observed curve; smallest index wins ties.
pub fn rpd_median(sample: &FunctionalSample, pool: &RegularizedPool<'_>) -> Result<RpdMedian> {
    let depths = rpd_batch(sample, pool)?;
    let (index, depth) = depths
        .iter()
        .enumerate()
        .fold(None::<(usize, DepthValue)>, |best, (i, d)| match best {
            Some((_, b)) if b.value >= d.value => best,
            _ => Some((i, *d)),
        })
        .ok_or(Error::Empty("functional sample"))?;
    Ok(RpdMedian {
        index,
        curve: sample.curve(index),
        depth,
    })
}
