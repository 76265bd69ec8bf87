//! Randomized fixed-pool property checks shared by the property tests and
//! the acceptance suite. Each check builds one random instance from a seed
//! and returns a description of the first violation.

#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rpd::depth::DepthValue;
use rpd::robust::quantile_rank;
use rpd::{
    build_pool, depth_lower_bound, filter_pool, inner_product, norm, outlyingness, rpd, rpd_batch, tune_beta, Curve,
    Direction, DirectionPool, FunctionalSample, Grid,
};

pub type Check = Result<(), String>;

pub struct Instance {
    pub sample: FunctionalSample,
    pub pool: DirectionPool,
    pub rng: ChaCha8Rng,
    pub u: f64,
}

fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<f64> {
    let scales: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..3.0)).collect();
    let shift: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    (0..n)
        .flat_map(|_| {
            (0..d)
                .map(|j| shift[j] + scales[j] * rng.sample::<f64, _>(StandardNormal))
                .collect::<Vec<_>>()
        })
        .collect()
}

pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..=8);
    let n = rng.random_range(5..=30);
    let m = rng.random_range(10..=60);
    let grid = Arc::new(Grid::uniform(d).unwrap());
    let sample = FunctionalSample::from_rows(grid, gaussian_rows(&mut rng, n, d)).unwrap();
    let pool = build_pool(&sample, m, rng.random()).unwrap();
    let u = [0.0, 0.1, 0.3][rng.random_range(0..3)];
    Instance { sample, pool, rng, u }
}

/// Sample of exact pairs `mu +- z_i`, optionally with `mu` itself appended.
pub fn paired_instance(seed: u64, with_center: bool) -> (Instance, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..=8);
    let pairs = rng.random_range(3..=15);
    let m = rng.random_range(10..=60);
    let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let z = gaussian_rows(&mut rng, pairs, d);
    let mut rows = Vec::new();
    for zi in z.chunks(d) {
        rows.extend(mu.iter().zip(zi).map(|(a, b)| a + b));
        rows.extend(mu.iter().zip(zi).map(|(a, b)| a - b));
    }
    if with_center {
        rows.extend_from_slice(&mu);
    }
    let grid = Arc::new(Grid::uniform(d).unwrap());
    let sample = FunctionalSample::from_rows(grid, rows).unwrap();
    let pool = build_pool(&sample, m, rng.random()).unwrap();
    let u = [0.0, 0.1, 0.3][rng.random_range(0..3)];
    (Instance { sample, pool, rng, u }, mu)
}

pub fn random_query(sample: &FunctionalSample, rng: &mut ChaCha8Rng, spread: f64) -> Curve {
    let base = sample.row(rng.random_range(0..sample.len()));
    let values = base
        .iter()
        .map(|b| b + spread * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Curve::new(values, sample.grid().clone()).unwrap()
}

/// A threshold strictly between two consecutive distinct MADs that keeps
/// the same directions as the tuned quantile, so tiny rounding changes in
/// the MADs cannot move a direction across it.
pub fn interior_beta(pool: &DirectionPool, u: f64) -> f64 {
    let mut mads = pool.proj_mad().to_vec();
    mads.sort_by(f64::total_cmp);
    let k = quantile_rank(mads.len(), u).unwrap();
    let target = mads[k - 1];
    match mads[..k - 1].iter().rev().find(|&&m| m < target) {
        Some(&below) => 0.5 * (below + target),
        None => 0.5 * target,
    }
}

fn depths_of(queries: &[Curve], pool: &rpd::RegularizedPool<'_>) -> Vec<DepthValue> {
    queries.iter().map(|q| rpd(q, pool).unwrap()).collect()
}

pub fn check_range(seed: u64) -> Check {
    let mut inst = instance(seed);
    let beta = tune_beta(&inst.pool, inst.u).unwrap();
    let reg = filter_pool(&inst.pool, beta).unwrap();
    for d in rpd_batch(&inst.sample, &reg).unwrap() {
        if !(d.value > 0.0 && d.value <= 1.0) {
            return Err(format!("sample depth {} outside (0, 1]", d.value));
        }
    }
    for _ in 0..5 {
        let q = random_query(&inst.sample, &mut inst.rng, 100.0);
        let v = rpd(&q, &reg).unwrap().value;
        if !(v > 0.0 && v <= 1.0) {
            return Err(format!("query depth {v} outside (0, 1]"));
        }
    }
    Ok(())
}

pub fn check_lower_bound(seed: u64) -> Check {
    let mut inst = instance(seed);
    let beta = tune_beta(&inst.pool, inst.u).unwrap();
    let reg = filter_pool(&inst.pool, beta).unwrap();
    for spread in [0.0, 1.0, 10.0, 1000.0] {
        let q = random_query(&inst.sample, &mut inst.rng, spread);
        let v = rpd(&q, &reg).unwrap().value;
        let bound = depth_lower_bound(q.values(), &inst.sample, beta).unwrap();
        if v < bound - 1e-10 {
            return Err(format!("depth {v} below bound {bound}"));
        }
    }
    Ok(())
}

pub fn check_lipschitz(seed: u64) -> Check {
    let mut inst = instance(seed);
    let beta = tune_beta(&inst.pool, inst.u).unwrap();
    let reg = filter_pool(&inst.pool, beta).unwrap();
    for spread in [0.01, 0.5, 3.0] {
        let x = random_query(&inst.sample, &mut inst.rng, 1.0);
        let y_vals: Vec<f64> = x
            .values()
            .iter()
            .map(|v| v + spread * inst.rng.sample::<f64, _>(StandardNormal))
            .collect();
        let y = Curve::new(y_vals, x.grid().clone()).unwrap();
        let diff: Vec<f64> = x.values().iter().zip(y.values()).map(|(a, b)| a - b).collect();
        let gap = (rpd(&x, &reg).unwrap().value - rpd(&y, &reg).unwrap().value).abs();
        if gap > norm(&diff) / beta + 1e-10 {
            return Err(format!(
                "depth gap {gap} exceeds |x - y| / beta = {}",
                norm(&diff) / beta
            ));
        }
    }
    Ok(())
}

pub fn check_quasi_concavity(seed: u64) -> Check {
    let mut inst = instance(seed);
    let beta = tune_beta(&inst.pool, inst.u).unwrap();
    let reg = filter_pool(&inst.pool, beta).unwrap();
    let x = random_query(&inst.sample, &mut inst.rng, 2.0);
    let y = random_query(&inst.sample, &mut inst.rng, 2.0);
    let floor = rpd(&x, &reg).unwrap().value.min(rpd(&y, &reg).unwrap().value);
    for step in 1..=9 {
        let lambda = step as f64 / 10.0;
        let vals = x
            .values()
            .iter()
            .zip(y.values())
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        let z = Curve::new(vals, x.grid().clone()).unwrap();
        let v = rpd(&z, &reg).unwrap().value;
        if v < floor - 1e-10 {
            return Err(format!("depth {v} at lambda {lambda} below endpoint minimum {floor}"));
        }
    }
    Ok(())
}

/// The sample holds exact pairs around `mu` plus `mu` itself, so the deepest
/// sample point is the global maximizer of the fixed-pool depth.
pub fn check_ray_monotonicity(seed: u64) -> Check {
    let (mut inst, _) = paired_instance(seed, true);
    let beta = tune_beta(&inst.pool, inst.u).unwrap();
    let reg = filter_pool(&inst.pool, beta).unwrap();
    let depths = rpd_batch(&inst.sample, &reg).unwrap();
    let deepest = (0..depths.len()).fold(0, |best, i| if depths[i].value > depths[best].value { i } else { best });
    let z = inst.sample.row(deepest).to_vec();
    let x = random_query(&inst.sample, &mut inst.rng, 3.0);
    let mut last = f64::INFINITY;
    for step in 0..=20 {
        let delta = step as f64 / 20.0;
        let vals = z.iter().zip(x.values()).map(|(a, b)| a + delta * (b - a)).collect();
        let v = rpd(&Curve::new(vals, x.grid().clone()).unwrap(), &reg).unwrap().value;
        if v > last + 1e-10 {
            return Err(format!("depth rose from {last} to {v} at delta {delta}"));
        }
        last = v;
    }
    Ok(())
}

pub fn check_shift_invariance(seed: u64) -> Check {
    let mut inst = instance(seed);
    let d = inst.sample.dim();
    let e: Vec<f64> = (0..d).map(|_| inst.rng.random_range(-5.0..5.0)).collect();
    let shifted = inst
        .sample
        .map_rows(|r| r.iter().zip(&e).map(|(a, b)| a + b).collect())
        .unwrap();
    let shifted_pool = inst.pool.restat(&shifted).unwrap();
    let beta = interior_beta(&inst.pool, inst.u);
    let reg = filter_pool(&inst.pool, beta).unwrap();
    let reg_shifted = filter_pool(&shifted_pool, beta).unwrap();
    if reg.kept() != reg_shifted.kept() {
        return Err("kept direction sets differ after shifting".into());
    }
    for _ in 0..5 {
        let x = random_query(&inst.sample, &mut inst.rng, 1.0);
        let xs = Curve::new(
            x.values().iter().zip(&e).map(|(a, b)| a + b).collect(),
            x.grid().clone(),
        )
        .unwrap();
        let (a, b) = (rpd(&x, &reg).unwrap().value, rpd(&xs, &reg_shifted).unwrap().value);
        if (a - b).abs() > 1e-10 {
            return Err(format!("shifted depth {b} differs from {a}"));
        }
    }
    Ok(())
}

pub fn check_permutation_invariance(seed: u64) -> Check {
    use rand::seq::SliceRandom;
    let mut inst = instance(seed);
    let d = inst.sample.dim();
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(&mut inst.rng);
    let apply = |r: &[f64]| perm.iter().map(|&j| r[j]).collect::<Vec<f64>>();
    let permuted = inst.sample.map_rows(apply).unwrap();
    let dirs: Vec<Direction> = inst
        .pool
        .directions()
        .map(|v| Direction::from_unit(apply(v)).unwrap())
        .collect();
    let permuted_pool = DirectionPool::from_directions(&permuted, &dirs, 0).unwrap();
    if permuted_pool.proj_median() != inst.pool.proj_median() || permuted_pool.proj_mad() != inst.pool.proj_mad() {
        return Err("projection statistics changed under a coordinate permutation".into());
    }
    let x = random_query(&inst.sample, &mut inst.rng, 1.0);
    let px = Curve::new(apply(x.values()), permuted.grid().clone()).unwrap();
    for (k, v) in inst.pool.directions().enumerate() {
        let (med, mad) = (inst.pool.proj_median()[k], inst.pool.proj_mad()[k]);
        if mad == 0.0 {
            continue;
        }
        let a = outlyingness(&x, &Direction::from_unit(v.to_vec()).unwrap(), med, mad).unwrap();
        let b = outlyingness(&px, &dirs[k], med, mad).unwrap();
        if a.to_bits() != b.to_bits() {
            return Err(format!("outlyingness {a} became {b} on direction {k}"));
        }
    }
    Ok(())
}

pub fn check_central_symmetry(seed: u64) -> Check {
    let (mut inst, mu) = paired_instance(seed, false);
    let beta = tune_beta(&inst.pool, inst.u).unwrap();
    let reg = filter_pool(&inst.pool, beta).unwrap();
    for _ in 0..5 {
        let x = random_query(&inst.sample, &mut inst.rng, 1.0);
        let mirrored = mu.iter().zip(x.values()).map(|(m, v)| 2.0 * m - v).collect();
        let xm = Curve::new(mirrored, x.grid().clone()).unwrap();
        let (a, b) = (rpd(&x, &reg).unwrap().value, rpd(&xm, &reg).unwrap().value);
        if (a - b).abs() > 1e-10 {
            return Err(format!("mirrored depth {b} differs from {a}"));
        }
    }
    Ok(())
}

pub fn check_antipodal(seed: u64) -> Check {
    let mut inst = instance(seed);
    let x = random_query(&inst.sample, &mut inst.rng, 1.0);
    let negated: Vec<Direction> = inst
        .pool
        .directions()
        .map(|v| Direction::from_unit(v.iter().map(|c| -c).collect()).unwrap())
        .collect();
    let anti = DirectionPool::from_directions(&inst.sample, &negated, 0).unwrap();
    for (k, neg) in negated.iter().enumerate() {
        let (med, mad) = (inst.pool.proj_median()[k], inst.pool.proj_mad()[k]);
        if anti.proj_median()[k] != -med || anti.proj_mad()[k] != mad {
            return Err(format!("direction {k}: antipode statistics are not (-med, mad)"));
        }
        if mad > 0.0 {
            let v = Direction::from_unit(inst.pool.direction(k).to_vec()).unwrap();
            let a = outlyingness(&x, &v, med, mad).unwrap();
            let b = outlyingness(&x, neg, -med, mad).unwrap();
            if a != b {
                return Err(format!("direction {k}: outlyingness {a} vs antipode {b}"));
            }
        }
    }
    Ok(())
}

pub fn check_scale_equivariance(seed: u64) -> Check {
    let mut inst = instance(seed);
    let c: f64 = inst.rng.random_range(0.05..20.0);
    let scaled = inst.sample.map_rows(|r| r.iter().map(|v| c * v).collect()).unwrap();
    let scaled_pool = inst.pool.restat(&scaled).unwrap();
    let beta = interior_beta(&inst.pool, inst.u);
    let reg = filter_pool(&inst.pool, beta).unwrap();
    let reg_scaled = filter_pool(&scaled_pool, c * beta).unwrap();
    if reg.kept() != reg_scaled.kept() {
        return Err("kept direction sets differ after scaling".into());
    }
    let queries: Vec<Curve> = (0..5).map(|_| random_query(&inst.sample, &mut inst.rng, 1.0)).collect();
    let scaled_queries: Vec<Curve> = queries
        .iter()
        .map(|q| Curve::new(q.values().iter().map(|v| c * v).collect(), q.grid().clone()).unwrap())
        .collect();
    for (a, b) in depths_of(&queries, &reg)
        .iter()
        .zip(depths_of(&scaled_queries, &reg_scaled))
    {
        if (a.value - b.value).abs() > 1e-12 {
            return Err(format!("scaled depth {} differs from {} (c = {c})", b.value, a.value));
        }
    }
    Ok(())
}

/// `|filter_pool(tune_beta(u))| >= ceil((1 - u) M)` for the listed levels,
/// with levels given in per-mille so the ceiling is exact.
pub fn check_quantile_filter(seed: u64) -> Check {
    let inst = instance(seed);
    let m = inst.pool.len();
    for per_mille in [0usize, 10, 50, 100, 500] {
        let u = per_mille as f64 / 1000.0;
        let beta = tune_beta(&inst.pool, u).unwrap();
        let kept = filter_pool(&inst.pool, beta).unwrap().kept().len();
        let need = ((1000 - per_mille) * m).div_ceil(1000);
        if kept < need {
            return Err(format!("u = {u}: kept {kept} of {m}, need {need}"));
        }
    }
    Ok(())
}

pub fn check_monotone_filter(seed: u64) -> Check {
    let mut inst = instance(seed);
    let mut mads = inst.pool.proj_mad().to_vec();
    mads.sort_by(f64::total_cmp);
    let i = inst.rng.random_range(0..mads.len());
    let j = inst.rng.random_range(i..mads.len());
    let (b1, b2) = (mads[i].max(1e-300), mads[j].max(1e-300));
    let small = filter_pool(&inst.pool, b1).unwrap();
    let large = filter_pool(&inst.pool, b2).unwrap();
    if large.kept().iter().any(|k| !small.kept().contains(k)) {
        return Err(format!("kept({b2}) is not a subset of kept({b1})"));
    }
    Ok(())
}

/// Projection consistency of the pool with a direct recomputation.
pub fn check_pool_statistics(seed: u64) -> Check {
    let inst = instance(seed);
    for (k, v) in inst.pool.directions().enumerate() {
        let proj: Vec<f64> = inst.sample.rows().map(|x| inner_product(x, v).unwrap()).collect();
        let mut sorted = proj.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let med = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        if med != inst.pool.proj_median()[k] {
            return Err(format!("direction {k}: median mismatch"));
        }
    }
    Ok(())
}

/// Runs `check` on seeds `0..count` and returns the failures.
pub fn run_many(count: u64, offset: u64, check: fn(u64) -> Check) -> Vec<(u64, String)> {
    (offset..offset + count)
        .filter_map(|s| check(s).err().map(|e| (s, e)))
        .collect()
}

pub type Property = (&'static str, fn(u64) -> Check);

pub const PROPERTIES: [Property; 13] = [
    ("range (0, 1]", check_range),
    ("explicit lower bound", check_lower_bound),
    ("1/beta-Lipschitz", check_lipschitz),
    ("quasi-concavity on segments", check_quasi_concavity),
    ("monotone on rays from the deepest point", check_ray_monotonicity),
    ("shift invariance", check_shift_invariance),
    ("permutation invariance of outlyingness", check_permutation_invariance),
    ("central symmetry on paired samples", check_central_symmetry),
    ("antipodal outlyingness", check_antipodal),
    ("scale equivariance with beta rescaling", check_scale_equivariance),
    ("quantile filter keeps ceil((1-u)M)", check_quantile_filter),
    ("monotone filter", check_monotone_filter),
    ("pool statistics recompute", check_pool_statistics),
];
