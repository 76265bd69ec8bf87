use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rpd::robust::quantile_rank;
use rpd::{empirical_quantile, hd_univariate, sample_mad, sample_median};

fn small_values(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.random_range(1..=15);
    // Values from a coarse lattice so ties are common.
    (0..n).map(|_| rng.random_range(-8i32..=8) as f64 * 0.25).collect()
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn oracle_median(v: &[f64]) -> f64 {
    let s = sorted(v);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn oracle_hd(u: f64, v: &[f64]) -> f64 {
    let below = v.iter().filter(|&&x| x <= u).count();
    let above = v.iter().filter(|&&x| x >= u).count();
    below.min(above) as f64 / v.len() as f64
}

#[test]
fn robust_statistics_match_sorting_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let v = small_values(&mut rng);
        let med = oracle_median(&v);
        assert_eq!(sample_median(&v).unwrap(), med);
        let dev: Vec<f64> = v.iter().map(|x| (x - med).abs()).collect();
        assert_eq!(sample_mad(&v).unwrap(), oracle_median(&dev));
        let per_mille = rng.random_range(0..=1000usize);
        let k = (per_mille * v.len()).div_ceil(1000).max(1);
        assert_eq!(quantile_rank(v.len(), per_mille as f64 / 1000.0).unwrap(), k);
        assert_eq!(
            empirical_quantile(&v, per_mille as f64 / 1000.0).unwrap(),
            sorted(&v)[k - 1]
        );
        let u = rng.random_range(-10i32..=10) as f64 * 0.25;
        assert_eq!(hd_univariate(u, &v).unwrap(), oracle_hd(u, &v));
    }
}
