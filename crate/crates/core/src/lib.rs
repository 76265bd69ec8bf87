//! Regularized projection depth (RPD) for functional data observed on a
//! common grid.
//!
//! The depth of a curve `x` is `(1 + sup_v |<x, v> - med_v| / MAD_v)^-1`,
//! where the supremum runs over unit directions `v` whose projected MAD is at
//! least `beta`. Directions are sampled at random ([`DirectionPool`]),
//! `beta` is tuned as a quantile of the projected MADs ([`tune_beta`]) and
//! the surviving directions form a [`RegularizedPool`].
//!
//! ```
//! use std::sync::Arc;
//! use rpd::{build_pool, filter_pool, rpd_batch, tune_beta, FunctionalSample, Grid};
//!
//! let grid = Arc::new(Grid::uniform(3).unwrap());
//! let sample = FunctionalSample::from_rows(
//!     grid,
//!     vec![0.0, 1.0, 2.0, 2.0, 0.5, 1.0, 1.0, 1.0, -1.0, 0.3, 0.2, 0.1],
//! )
//! .unwrap();
//! let pool = build_pool(&sample, 1000, 7).unwrap();
//! let reg = filter_pool(&pool, tune_beta(&pool, 0.01).unwrap()).unwrap();
//! let depths = rpd_batch(&sample, &reg).unwrap();
//! assert!(depths.iter().all(|d| d.value > 0.0 && d.value <= 1.0));
//! ```

pub mod comparators;
pub mod depth;
pub mod directions;
pub mod error;
pub mod functional;
pub mod io;
pub mod notion;
pub mod probes;
pub mod robust;
pub mod simulation;

pub use comparators::{fd, hd_univariate, id, PointwiseDepthProfile};
pub use depth::{
    depth_lower_bound, depth_ranks, max_outlyingness, outlyingness, rpd, rpd_batch, rpd_batch_multi, rpd_median,
    unregularized_depth, DepthValue, RankVector, RpdMedian,
};
pub use directions::{
    build_pool, filter_pool, sample_unit_direction, seeded_rng, tune_beta, DirectionPool, RegularizedPool,
};
pub use error::{Error, Result};
pub use functional::{inner_product, norm, Curve, Direction, FunctionalSample, Grid};
pub use notion::{DepthNotion, NotionRegistry, NotionRequest};
pub use robust::{empirical_quantile, sample_mad, sample_median};
pub use simulation::{run_experiment, ExperimentConfig, ExperimentReport};
