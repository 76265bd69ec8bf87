//! Grid geometry, curves, samples and the shared inner product.
//!
//! Curves are plain value vectors on a common grid. The inner product is the
//! unweighted Euclidean dot product of the grid values; no quadrature weights
//! are applied, even on non-uniform grids.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Tolerance on the Euclidean norm of a [`Direction`].
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Ordered abscissae in `[0, 1]` shared by every curve of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::domain(format!(
                "a grid needs at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("grid points must be finite"));
        }
        if points[0] < 0.0 || points[points.len() - 1] > 1.0 {
            return Err(Error::domain("grid points must lie in [0, 1]"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("grid points must be strictly increasing"));
        }
        Ok(Grid { points })
    }

    /// `count` equi-spaced points from 0 to 1 inclusive.
    pub fn uniform(count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::domain(format!("a grid needs at least 2 points, got {count}")));
        }
        let last = (count - 1) as f64;
        Grid::new((0..count).map(|i| i as f64 / last).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn count(&self) -> usize {
        self.points.len()
    }
}

/// One functional observation evaluated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    values: Vec<f64>,
    grid: Arc<Grid>,
}

impl Curve {
    pub fn new(values: Vec<f64>, grid: Arc<Grid>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::Dimension {
                expected: grid.count(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("curve values must be finite"));
        }
        Ok(Curve { values, grid })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for Curve {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// A reference collection of curves on one grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    grid: Arc<Grid>,
    values: Vec<f64>,
    len: usize,
}

impl FunctionalSample {
    /// Builds a sample from row-major values (`n * grid.count()` entries).
    pub fn from_rows(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        let dim = grid.count();
        if values.is_empty() {
            return Err(Error::Empty("functional sample"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::Dimension {
                expected: dim,
                found: values.len() % dim,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("curve values must be finite"));
        }
        let len = values.len() / dim;
        Ok(FunctionalSample { grid, values, len })
    }

    pub fn from_curves(curves: &[Curve]) -> Result<Self> {
        let first = curves.first().ok_or(Error::Empty("functional sample"))?;
        let grid = first.grid.clone();
        let mut values = Vec::with_capacity(curves.len() * grid.count());
        for c in curves {
            if *c.grid != *grid {
                return Err(Error::GridMismatch);
            }
            values.extend_from_slice(&c.values);
        }
        Ok(FunctionalSample {
            grid,
            values,
            len: curves.len(),
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.grid.count()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim())
    }

    pub fn curve(&self, i: usize) -> Curve {
        Curve {
            values: self.row(i).to_vec(),
            grid: self.grid.clone(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Concatenates two samples on the same grid, `self` first.
    pub fn concat(&self, other: &FunctionalSample) -> Result<Self> {
        if *self.grid != *other.grid {
            return Err(Error::GridMismatch);
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(FunctionalSample {
            grid: self.grid.clone(),
            values,
            len: self.len + other.len,
        })
    }

    /// Applies `f` to every curve, keeping the grid.
    pub fn map_rows(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(self.values.len());
        for row in self.rows() {
            let mapped = f(row);
            if mapped.len() != self.dim() {
                return Err(Error::Dimension {
                    expected: self.dim(),
                    found: mapped.len(),
                });
            }
            values.extend(mapped);
        }
        FunctionalSample::from_rows(self.grid.clone(), values)
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if *self.grid == *grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// A unit vector in grid space.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    coords: Vec<f64>,
}

impl Direction {
    /// Normalizes `coords` to unit Euclidean length. Rejects zero and
    /// non-finite input.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("direction"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("direction coordinates must be finite"));
        }
        let len = dot(&coords, &coords).sqrt();
        if len == 0.0 || !len.is_finite() {
            return Err(Error::domain("cannot normalize the zero vector"));
        }
        let mut coords: Vec<f64> = coords.into_iter().map(|c| c / len).collect();
        // A second pass absorbs the rounding of the first division.
        let len = dot(&coords, &coords).sqrt();
        if (len - 1.0).abs() > UNIT_NORM_TOL {
            coords.iter_mut().for_each(|c| *c /= len);
        }
        Ok(Direction { coords })
    }

    /// Wraps coordinates that are already unit length within [`UNIT_NORM_TOL`].
    pub fn from_unit(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("direction"));
        }
        let len = dot(&coords, &coords).sqrt();
        if !len.is_finite() || (len - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::domain(format!(
                "direction norm {len} is not 1 within {UNIT_NORM_TOL:e}"
            )));
        }
        Ok(Direction { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl AsRef<[f64]> for Direction {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

/// Euclidean dot product of two equally sized value vectors.
pub fn inner_product<A, B>(a: &A, b: &B) -> Result<f64>
where
    A: AsRef<[f64]> + ?Sized,
    B: AsRef<[f64]> + ?Sized,
{
    let (a, b) = (a.as_ref(), b.as_ref());
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(dot(a, b))
}

pub fn norm<A: AsRef<[f64]> + ?Sized>(a: &A) -> f64 {
    let a = a.as_ref();
    dot(a, a).sqrt()
}

/// Unchecked dot product: the correctly rounded sum of the rounded
/// products, so the result does not depend on coordinate order.
///
/// A compensated (double-double) sum is tried first; its error is bounded by
/// `gamma(n-1)^2 * sum |p_i|`, and when that bound cannot move the exact sum
/// across a rounding midpoint the compensated result is already correctly
/// rounded. Otherwise the exact partials accumulator decides.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut hi = 0.0f64;
    let mut lo = 0.0f64;
    let mut abs = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let p = x * y;
        let (s, e) = two_sum(hi, p);
        hi = s;
        lo += e;
        abs += p.abs();
    }
    let (r, delta) = two_sum(hi, lo);
    let n = a.len() as f64;
    let g = n * f64::EPSILON * 0.5;
    // Doubled to absorb the rounding in `abs` and in the bound itself.
    let bound = 2.0 * g * g * abs;
    if r != 0.0 && r.is_finite() && delta.abs() + bound < half_gap(r) {
        return r;
    }
    let mut acc = ExactSum::new();
    for (x, y) in a.iter().zip(b) {
        acc.add(x * y);
    }
    acc.value()
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Half the distance from `r` to its nearest representable neighbour.
#[inline]
fn half_gap(r: f64) -> f64 {
    let up = r.next_up() - r;
    let down = r - r.next_down();
    up.min(down) * 0.5
}

/// Shewchuk-style accumulator of non-overlapping partials. Finite inputs only.
pub(crate) struct ExactSum {
    partials: [f64; 64],
    len: usize,
}

impl ExactSum {
    pub(crate) fn new() -> Self {
        ExactSum {
            partials: [0.0; 64],
            len: 0,
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.len {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials[i] = x;
        self.len = i + 1;
    }

    pub(crate) fn value(&self) -> f64 {
        let p = &self.partials[..self.len];
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // Round-half-even correction when the remaining partials push the
        // discarded tail past the halfway point.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}
