//! Distribution functions and goodness-of-fit helpers.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use statrs::function::erf::erf;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// `1 - exp(-x²/2)`, the Brownian meander endpoint law.
pub fn rayleigh_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x * x / 2.0).exp_m1()
    }
}

/// CDF of the density `√(2/π) x² e^{-x²/2}` on `x > 0` (Bessel-3 at time 1).
pub fn bessel3_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        erf(x / std::f64::consts::SQRT_2) - SQRT_2_OVER_PI * x * (-x * x / 2.0).exp()
    }
}

/// `erf(x/√2)`, the law of `|N(0,1)|`.
pub fn half_normal_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        erf(x / std::f64::consts::SQRT_2)
    }
}

/// Two-sided Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// `x / 2^shift` as a float without overflowing on large `x`.
pub fn biguint_ratio(x: &BigUint, shift: usize) -> f64 {
    let bits = x.bits() as i64;
    let drop = (bits - 60).max(0);
    let mantissa = (x >> drop as usize).to_f64().unwrap_or(f64::NAN);
    mantissa * 2f64.powi((drop - shift as i64) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdfs_are_monotone_and_normalised() {
        for cdf in [rayleigh_cdf, bessel3_cdf, half_normal_cdf] {
            let mut prev = 0.0;
            for i in 0..=200 {
                let v = cdf(i as f64 * 0.05);
                assert!(v >= prev - 1e-15);
                prev = v;
            }
            assert!((cdf(12.0) - 1.0).abs() < 1e-12);
            assert_eq!(cdf(-1.0), 0.0);
        }
    }

    #[test]
    fn bessel3_density_matches_derivative() {
        let h = 1e-5;
        for x in [0.3, 1.0, 1.7, 2.5] {
            let num = (bessel3_cdf(x + h) - bessel3_cdf(x - h)) / (2.0 * h);
            let dens = SQRT_2_OVER_PI * x * x * (-x * x / 2.0).exp();
            assert!((num - dens).abs() < 1e-7);
        }
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        // x_i = F^{-1}((i + 1/2)/n) for the Rayleigh law
        let n = 1000;
        let xs: Vec<f64> =
            (0..n).map(|i| (-2.0 * (1.0 - (i as f64 + 0.5) / n as f64).ln()).sqrt()).collect();
        let d = ks_statistic(&xs, rayleigh_cdf);
        assert!((d - 0.5 / n as f64).abs() < 1e-9);
        assert!(ks_statistic(&xs, half_normal_cdf) > 0.1);
    }

    #[test]
    fn big_ratio() {
        assert_eq!(biguint_ratio(&BigUint::from(3u32), 2), 0.75);
        let big = BigUint::from(1u32) << 2000;
        assert_eq!(biguint_ratio(&big, 2001), 0.5);
    }
}
