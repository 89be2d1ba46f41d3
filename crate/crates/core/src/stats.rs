//! Density helpers shared by priors, proposal kernels, and summaries:
//! normal CDF machinery, truncated-normal draws and densities, Gamma/Beta
//! log densities, negative binomial sampling, and quantile interpolation.

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;
pub use statrs::function::gamma::ln_gamma;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Standard normal CDF computed through `erfc`, accurate in both tails.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal survival function P(Z > x).
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile function.
pub fn std_normal_inv_cdf(p: f64) -> f64 {
    // Unit normal construction cannot fail.
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

/// ln of the standard normal density at z.
pub fn std_normal_ln_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// P(lo <= X <= hi) for X ~ Normal(mu, sigma^2), evaluated in whichever tail
/// is smaller so that masses far from the mean do not cancel to zero.
pub fn normal_interval_mass(mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    let za = (lo - mu) / sigma;
    let zb = (hi - mu) / sigma;
    let mass = if za > 0.0 {
        std_normal_sf(za) - std_normal_sf(zb)
    } else {
        std_normal_cdf(zb) - std_normal_cdf(za)
    };
    // Guard against small negative values from cancellation.
    mass.max(0.0)
}

/// ln P(lo <= X <= hi) for X ~ Normal(mu, sigma^2); -inf when the interval
/// carries no mass at double precision.
pub fn ln_normal_interval_mass(mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    normal_interval_mass(mu, sigma, lo, hi).ln()
}

/// Draw from Normal(mu, sigma^2) truncated to [lo, hi] by inverse-CDF
/// sampling; consumes exactly one uniform from `rng`. Infinite bounds are
/// allowed. With sigma = 0 the draw degenerates to mu (clamped to the
/// interval), so a zero step size proposes the current value.
pub fn trunc_normal_draw<R: Rng + ?Sized>(
    rng: &mut R,
    mu: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    if sigma == 0.0 {
        return mu.clamp(lo, hi);
    }
    let a = std_normal_cdf((lo - mu) / sigma);
    let b = std_normal_cdf((hi - mu) / sigma);
    let u: f64 = rng.gen();
    // Keep the probability strictly inside (0, 1); the quantile function
    // overflows to +-inf at the endpoints when a or b round to 0 or 1.
    let p = (a + u * (b - a)).clamp(1e-300, 1.0 - 1e-16);
    (mu + sigma * std_normal_inv_cdf(p)).clamp(lo, hi)
}

/// ln density at x of Normal(mu, sigma^2) truncated to [lo, hi]; -inf outside
/// the interval.
pub fn trunc_normal_ln_pdf(x: f64, mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    if x < lo || x > hi {
        return f64::NEG_INFINITY;
    }
    let z = (x - mu) / sigma;
    std_normal_ln_pdf(z) - sigma.ln() - ln_normal_interval_mass(mu, sigma, lo, hi)
}

/// ln density of Gamma(shape, rate) at x; -inf for x <= 0.
pub fn gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// ln density of Beta(a, b) at x; -inf outside [0, 1]. The boundary terms are
/// skipped when their exponent is zero so that Beta(1, 1) is exactly flat.
pub fn beta_ln_pdf(x: f64, a: f64, b: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return f64::NEG_INFINITY;
    }
    let mut v = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    if a != 1.0 {
        v += (a - 1.0) * x.ln();
    }
    if b != 1.0 {
        v += (b - 1.0) * (1.0 - x).ln();
    }
    v
}

/// ln(n!) through the log-gamma function.
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// log(sum(exp(vals))) without overflow; -inf for an empty or all -inf input.
pub fn log_sum_exp(vals: &[f64]) -> f64 {
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// One negative binomial draw with the given mean and dispersion, via the
/// gamma-Poisson mixture: rate ~ Gamma(shape = dispersion, scale =
/// mean/dispersion), then Poisson(rate). A nonpositive or vanishing rate
/// draw yields 0.
pub fn nb_draw<R: Rng + ?Sized>(rng: &mut R, mean: f64, dispersion: f64) -> u64 {
    let gamma = rand_distr::Gamma::new(dispersion, mean / dispersion)
        .expect("positive dispersion and mean");
    let rate: f64 = rng.sample(gamma);
    if rate <= 0.0 || !rate.is_finite() {
        return 0;
    }
    let poisson = rand_distr::Poisson::new(rate).expect("finite positive rate");
    rng.sample(poisson) as u64
}

/// Empirical quantile with linear interpolation between order statistics
/// (the convention where the k-th of n sorted points sits at probability
/// (k−1)/(n−1)). `sorted` must be ascending and nonempty.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = (h.floor() as usize).min(n - 2);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normal_cdf_matches_known_points() {
        assert!((std_normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((std_normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-9);
        // Phi(-37) ~ 6e-300 still fits in a double; by -40 the true value
        // drops below the smallest subnormal and zero is the only answer.
        assert!(std_normal_cdf(-37.0) > 0.0);
        assert!(std_normal_cdf(-37.0) < 1e-290);
    }

    #[test]
    fn interval_mass_is_stable_in_far_tails() {
        // Direct CDF subtraction loses all precision out here.
        let m = normal_interval_mass(0.0, 1.0, 10.0, 11.0);
        assert!(m > 0.0 && m < 1e-20);
        let sym = normal_interval_mass(0.0, 1.0, -11.0, -10.0);
        assert!(((m - sym) / m).abs() < 1e-10);
    }

    #[test]
    fn trunc_normal_draws_stay_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20_000 {
            let x = trunc_normal_draw(&mut rng, 0.3, 1.0, -1.0, 2.0);
            assert!((-1.0..=2.0).contains(&x));
        }
    }

    #[test]
    fn trunc_normal_mean_matches_closed_form() {
        // E[X] = mu + sigma * (pdf(alpha) - pdf(beta)) / Z for X ~ TN(mu, sigma, lo, hi).
        let (mu, sigma, lo, hi) = (0.3, 1.0, -1.0, 2.0);
        let alpha = (lo - mu) / sigma;
        let beta = (hi - mu) / sigma;
        let z = normal_interval_mass(mu, sigma, lo, hi);
        let expect =
            mu + sigma * (std_normal_ln_pdf(alpha).exp() - std_normal_ln_pdf(beta).exp()) / z;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mean: f64 =
            (0..n).map(|_| trunc_normal_draw(&mut rng, mu, sigma, lo, hi)).sum::<f64>() / n as f64;
        assert!((mean - expect).abs() < 5e-3, "mean {mean} vs {expect}");
    }

    #[test]
    fn trunc_normal_pdf_integrates_to_one() {
        let (mu, sigma, lo, hi) = (0.5, 0.7, -0.2, 1.4);
        let n = 40_000;
        let h = (hi - lo) / n as f64;
        let total: f64 = (0..n)
            .map(|i| trunc_normal_ln_pdf(lo + (i as f64 + 0.5) * h, mu, sigma, lo, hi).exp() * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-6, "integral {total}");
    }

    #[test]
    fn zero_step_size_degenerates_to_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(trunc_normal_draw(&mut rng, 1.25, 0.0, 0.0, 2.0), 1.25);
    }

    #[test]
    fn gamma_and_beta_log_densities() {
        // Gamma(2, 3) at 0.5: 2 ln 3 + ln x - 3x - ln Gamma(2).
        let expect = 2.0 * 3.0_f64.ln() + 0.5_f64.ln() - 1.5;
        assert!((gamma_ln_pdf(0.5, 2.0, 3.0) - expect).abs() < 1e-12);
        assert_eq!(gamma_ln_pdf(0.0, 2.0, 3.0), f64::NEG_INFINITY);
        // Beta(1, 1) is flat, including at the endpoints.
        assert!(beta_ln_pdf(0.0, 1.0, 1.0).abs() < 1e-12);
        assert!(beta_ln_pdf(1.0, 1.0, 1.0).abs() < 1e-12);
        // Beta(2, 2) at 1/2: ln 6 + ln(1/4).
        let expect = 6.0_f64.ln() + 0.25_f64.ln();
        assert!((beta_ln_pdf(0.5, 2.0, 2.0) - expect).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[-1000.0, -1000.0]);
        assert!((v - (-1000.0 + 2.0_f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn quantiles_interpolate_between_order_statistics() {
        let grid: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!((quantile_type7(&grid, 0.25) - 25.75).abs() < 1e-12);
        assert!((quantile_type7(&grid, 0.5) - 50.5).abs() < 1e-12);
        assert!((quantile_type7(&grid, 0.75) - 75.25).abs() < 1e-12);
        assert_eq!(quantile_type7(&grid, 0.0), 1.0);
        assert_eq!(quantile_type7(&grid, 1.0), 100.0);
        assert_eq!(quantile_type7(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn negative_binomial_draws_match_mean_and_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 20_000;
        let (mean, dispersion) = (10.0, 5.0);
        let draws: Vec<f64> = (0..n).map(|_| nb_draw(&mut rng, mean, dispersion) as f64).collect();
        let avg = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - avg).powi(2)).sum::<f64>() / (n - 1) as f64;
        // Var = mean + mean^2 / dispersion = 30.
        assert!((avg - 10.0).abs() < 0.2, "sample mean {avg}");
        assert!((var - 30.0).abs() < 2.0, "sample variance {var}");
        // A floored mean yields (essentially) certain zeros.
        assert_eq!(nb_draw(&mut rng, 1e-10, 5.0), 0);
    }
}
