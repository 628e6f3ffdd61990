//! Distribution analysis over integer balance vectors.
//!
//! The numeric routines are generic over `num_traits::Float`, so they work
//! in `f32` or `f64`; the engine records results in [`crate::Real`]. Money
//! itself stays integer throughout; only the derived statistics are
//! floating point.

use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::{Money, Result};

fn to_float<F: Float + FromPrimitive>(x: Money) -> F {
    F::from_i64(x).expect("money converts to float")
}

/// Population mean and population variance (divide by N; the agent set is
/// the whole population, not a sample).
pub fn summarize<F: Float + FromPrimitive>(balances: &[Money]) -> Result<(F, F)> {
    if balances.is_empty() {
        return Err(Error::config("summarize requires a nonempty population"));
    }
    let n = F::from_usize(balances.len()).unwrap();
    let total: i128 = balances.iter().map(|&b| b as i128).sum();
    let mean = F::from_i128(total).expect("total converts to float") / n;
    let variance = balances
        .iter()
        .map(|&b| {
            let d = to_float::<F>(b) - mean;
            d * d
        })
        .fold(F::zero(), |acc, d| acc + d)
        / n;
    Ok((mean, variance))
}

/// Per-decile money totals. Decile 1 is the poorest tenth, decile 10 the
/// richest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecileTotals {
    pub per_decile: [Money; 10],
    pub top10_total: Money,
    pub bottom50_total: Money,
}

impl DecileTotals {
    /// bottom-50% total minus top-10% total; positive means the bottom half
    /// holds more.
    pub fn gap(&self) -> Money {
        self.bottom50_total - self.top10_total
    }
}

/// Sort ascending, split into ten equal groups, and sum each.
pub fn decile_totals(balances: &[Money]) -> Result<DecileTotals> {
    if balances.is_empty() || !balances.len().is_multiple_of(10) {
        return Err(Error::config(format!(
            "decile totals require a population divisible by 10 (got {})",
            balances.len()
        )));
    }
    let mut sorted = balances.to_vec();
    sorted.sort_unstable();
    let size = sorted.len() / 10;
    let mut per_decile = [0; 10];
    for (i, chunk) in sorted.chunks_exact(size).enumerate() {
        per_decile[i] = chunk.iter().sum();
    }
    Ok(DecileTotals {
        per_decile,
        top10_total: per_decile[9],
        bottom50_total: per_decile[..5].iter().sum(),
    })
}

/// Equal-width counts over half-open bins `[k*w, (k+1)*w)` starting at zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: Money,
    /// `(lower edge, count)` for every bin from zero through the bin holding
    /// the maximum value; interior empty bins are kept.
    pub bins: Vec<(Money, u64)>,
    pub total_count: u64,
}

pub fn histogram(balances: &[Money], bin_width: Money) -> Result<Histogram> {
    if bin_width < 1 {
        return Err(Error::config(format!(
            "histogram bin width must be at least 1 (got {bin_width})"
        )));
    }
    let max = balances.iter().copied().max().unwrap_or(0);
    let n_bins = (max / bin_width + 1) as usize;
    let mut counts = vec![0u64; n_bins];
    for &b in balances {
        counts[(b / bin_width) as usize] += 1;
    }
    Ok(Histogram {
        bin_width,
        bins: counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| (i as Money * bin_width, c))
            .collect(),
        total_count: balances.len() as u64,
    })
}

/// Exponential (Boltzmann–Gibbs) fit `p(m) = C·exp(-m/T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit<F> {
    /// Effective temperature: the average money per agent.
    pub temperature: F,
    /// Normalizing constant of the continuous density on `[0, ∞)`: `1/T`.
    pub norm_constant: F,
    /// Kolmogorov–Smirnov distance between the empirical CDF and the fit.
    pub ks_distance: F,
}

pub fn fit_boltzmann_gibbs<F: Float + FromPrimitive>(
    balances: &[Money],
) -> Result<ExponentialFit<F>> {
    let (mean, _) = summarize::<F>(balances)?;
    if mean <= F::zero() {
        return Err(Error::Degenerate(
            "exponential fit needs a positive mean balance".into(),
        ));
    }
    let t = mean;
    let cdf = |x: F| F::one() - (-x / t).exp();
    Ok(ExponentialFit {
        temperature: t,
        norm_constant: F::one() / t,
        ks_distance: ks_distance(balances, cdf),
    })
}

/// Normal fit with moment estimators, used as the comparison distribution
/// for the exponential fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFit<F> {
    pub mean: F,
    pub std_dev: F,
    pub ks_distance: F,
}

pub fn fit_normal<F: Float + FromPrimitive>(balances: &[Money]) -> Result<NormalFit<F>> {
    let (mean, variance) = summarize::<F>(balances)?;
    if variance <= F::zero() {
        return Err(Error::Degenerate(
            "normal fit needs a positive variance".into(),
        ));
    }
    let std_dev = variance.sqrt();
    let half = F::from_f64(0.5).unwrap();
    let sqrt2 = F::from_f64(std::f64::consts::SQRT_2).unwrap();
    let cdf = move |x: F| half * (F::one() + erf((x - mean) / (std_dev * sqrt2)));
    Ok(NormalFit {
        mean,
        std_dev,
        ks_distance: ks_distance(balances, cdf),
    })
}

/// Sup-norm distance between the empirical CDF of `balances` and a
/// continuous reference CDF, evaluated with the standard one-sample
/// two-sided statistic `max_i max(i/n - F(x_i), F(x_i) - (i-1)/n)`.
pub fn ks_distance<F: Float + FromPrimitive, C: Fn(F) -> F>(balances: &[Money], cdf: C) -> F {
    let mut sorted = balances.to_vec();
    sorted.sort_unstable();
    let n = F::from_usize(sorted.len()).unwrap();
    let mut sup = F::zero();
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(to_float::<F>(x));
        let lo = F::from_usize(i).unwrap() / n;
        let hi = F::from_usize(i + 1).unwrap() / n;
        sup = sup.max(hi - f).max(f - lo);
    }
    sup
}

/// Error function via the Abramowitz–Stegun 7.1.26 rational approximation
/// (absolute error below 1.5e-7, plenty for goodness-of-fit comparisons).
pub fn erf<F: Float>(x: F) -> F {
    let sign = if x < F::zero() { -F::one() } else { F::one() };
    let x = x.abs();
    let c = |v: f64| F::from(v).unwrap();
    let t = F::one() / (F::one() + c(0.327_591_1) * x);
    let poly = t
        * (c(0.254_829_592)
            + t * (c(-0.284_496_736)
                + t * (c(1.421_413_741) + t * (c(-1.453_152_027) + t * c(1.061_405_429)))));
    sign * (F::one() - poly * (-x * x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn summarize_uniform_population() {
        let (mean, var) = summarize::<f64>(&vec![100; 500]).unwrap();
        assert_eq!(mean, 100.0);
        assert_eq!(var, 0.0);
    }

    #[test]
    fn summarize_two_point() {
        let (mean, var) = summarize::<f64>(&[0, 200]).unwrap();
        assert_eq!(mean, 100.0);
        assert_eq!(var, 10000.0);
    }

    #[test]
    fn summarize_rejects_empty() {
        assert!(summarize::<f64>(&[]).is_err());
    }

    #[test]
    fn summarize_works_in_f32_too() {
        let (mean, var) = summarize::<f32>(&[0, 200]).unwrap();
        assert_eq!(mean, 100.0f32);
        assert_eq!(var, 10000.0f32);
    }

    #[test]
    fn deciles_equal_start() {
        let t = decile_totals(&vec![100; 500]).unwrap();
        assert_eq!(t.top10_total, 5000);
        assert_eq!(t.bottom50_total, 25000);
        assert_eq!(t.gap(), 20000);
    }

    #[test]
    fn deciles_singleton_groups() {
        let t = decile_totals(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]).unwrap();
        assert_eq!(t.top10_total, 10);
        assert_eq!(t.bottom50_total, 15);
        assert_eq!(t.per_decile, [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
    }

    #[test]
    fn deciles_reject_indivisible_counts() {
        assert!(decile_totals(&[1; 55]).is_err());
        assert!(decile_totals(&[]).is_err());
    }

    #[test]
    fn exponential_fit_of_point_mass() {
        let fit = fit_boltzmann_gibbs::<f64>(&vec![100; 500]).unwrap();
        assert_eq!(fit.temperature, 100.0);
        assert_eq!(fit.norm_constant, 0.01);
        // Single step at m = 100: the sup sits just below the step,
        // where the fitted CDF has already risen to 1 - e^{-1}.
        assert_relative_eq!(fit.ks_distance, 1.0 - (-1.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn exponential_fit_rejects_all_zero() {
        assert!(matches!(
            fit_boltzmann_gibbs::<f64>(&[0; 10]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn normal_fit_rejects_zero_variance() {
        assert!(matches!(
            fit_normal::<f64>(&[7; 10]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn exponential_sample_fits_well() {
        // Inverse-CDF sampling from exponential(mean 100), rounded to the
        // integer grid the model lives on.
        use rand::Rng;
        let mut rng = crate::rng::run_rng(2024);
        let balances: Vec<Money> = (0..10_000)
            .map(|_| {
                let u: f64 = rng.gen_range(0.0..1.0);
                (-100.0 * (1.0 - u).ln()).round() as Money
            })
            .collect();
        let fit = fit_boltzmann_gibbs::<f64>(&balances).unwrap();
        assert!(
            fit.ks_distance < 0.02,
            "ks = {} for an actual exponential sample",
            fit.ks_distance
        );
    }

    #[test]
    fn normal_sample_prefers_normal_fit() {
        use rand::Rng;
        let mut rng = crate::rng::run_rng(77);
        // Sum of uniforms is close enough to normal for this comparison.
        let balances: Vec<Money> = (0..5_000)
            .map(|_| {
                let s: f64 = (0..12).map(|_| rng.gen_range(0.0..1.0)).sum();
                (100.0 + 10.0 * (s - 6.0)).round() as Money
            })
            .collect();
        let normal = fit_normal::<f64>(&balances).unwrap();
        let expo = fit_boltzmann_gibbs::<f64>(&balances).unwrap();
        assert!(normal.ks_distance < expo.ks_distance);
        // Rounding to the integer grid leaves a KS floor of roughly half
        // the modal mass, ~0.02 at sigma = 10.
        assert!(normal.ks_distance < 0.05, "ks = {}", normal.ks_distance);
    }

    #[test]
    fn erf_matches_reference_values() {
        // Reference values from standard tables.
        for (x, want) in [
            (0.0, 0.0),
            (0.5, 0.5204998778),
            (1.0, 0.8427007929),
            (2.0, 0.9953222650),
            (-1.0, -0.8427007929),
        ] {
            assert_relative_eq!(erf::<f64>(x), want, epsilon = 2e-7);
        }
    }

    #[test]
    fn histogram_basic_binning() {
        let h = histogram(&[0, 0, 5, 10], 10).unwrap();
        assert_eq!(h.bins, vec![(0, 3), (10, 1)]);
        assert_eq!(h.total_count, 4);
    }

    #[test]
    fn histogram_single_bin_population() {
        let h = histogram(&vec![100; 500], 50).unwrap();
        assert_eq!(h.bins.last(), Some(&(100, 500)));
        assert_eq!(h.bins.iter().map(|b| b.1).sum::<u64>(), 500);
        assert_eq!(h.bins.iter().filter(|b| b.1 > 0).count(), 1);
    }

    #[test]
    fn histogram_rejects_zero_width() {
        assert!(histogram(&[1, 2], 0).is_err());
    }

    /// Balance vectors whose length is a multiple of ten.
    fn decile_sized_balances() -> impl Strategy<Value = Vec<Money>> {
        (1usize..=10).prop_flat_map(|d| proptest::collection::vec(0i64..500, d * 10))
    }

    proptest! {
        #[test]
        fn decile_totals_are_permutation_invariant(
            mut balances in decile_sized_balances(),
            seed in 0u64..100,
        ) {
            let base = decile_totals(&balances)?;
            // Cheap deterministic shuffle.
            use rand::seq::SliceRandom;
            balances.shuffle(&mut crate::rng::run_rng(seed));
            prop_assert_eq!(decile_totals(&balances)?, base);
        }

        #[test]
        fn decile_totals_sum_to_total(
            balances in decile_sized_balances(),
        ) {
            let t = decile_totals(&balances)?;
            prop_assert_eq!(t.per_decile.iter().sum::<Money>(), balances.iter().sum::<Money>());
        }

        #[test]
        fn fit_temperature_equals_mean(
            balances in proptest::collection::vec(0i64..1000, 1..200),
        ) {
            prop_assume!(balances.iter().sum::<Money>() > 0);
            let (mean, _) = summarize::<f64>(&balances)?;
            let fit = fit_boltzmann_gibbs::<f64>(&balances)?;
            prop_assert!((fit.temperature - mean).abs() <= f64::EPSILON * mean.abs());
        }

        #[test]
        fn unit_width_histogram_merges_to_any_width(
            balances in proptest::collection::vec(0i64..200, 1..100),
            width in 1i64..20,
        ) {
            let fine = histogram(&balances, 1)?;
            let coarse = histogram(&balances, width)?;
            // Re-aggregate the unit histogram into `width`-sized bins.
            let mut merged = vec![0u64; coarse.bins.len()];
            for (lower, count) in fine.bins {
                merged[(lower / width) as usize] += count;
            }
            let coarse_counts: Vec<u64> = coarse.bins.iter().map(|b| b.1).collect();
            prop_assert_eq!(merged, coarse_counts);
        }
    }
}
