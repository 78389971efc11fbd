//! Statistical comparison helpers: Wilson intervals, one-sample
//! Kolmogorov-Smirnov distances against exact laws, and a chi-squared
//! goodness-of-fit test.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Binomial proportion interval.
#[derive(Debug, Clone, Copy)]
pub struct WilsonInterval {
    pub lo: f64,
    pub hi: f64,
}

impl WilsonInterval {
    pub fn contains(&self, p: f64) -> bool {
        p >= self.lo && p <= self.hi
    }
    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// Wilson score interval for `hits` successes out of `n` at `z` sigmas.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> WilsonInterval {
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    WilsonInterval {
        lo: (center - half).max(0.0),
        hi: (center + half).min(1.0),
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// One-sample KS distance of integer-valued samples against a reference CDF
/// given at the sample atoms: `sup_x |F_emp(x) - F(x)|`, checked from both
/// sides of every jump.
pub fn ks_distance_discrete(sorted_samples: &[i64], cdf: &dyn Fn(i64) -> f64) -> f64 {
    let n = sorted_samples.len();
    assert!(n > 0);
    let mut d = 0.0f64;
    let mut i = 0;
    while i < n {
        let x = sorted_samples[i];
        let mut j = i;
        while j < n && sorted_samples[j] == x {
            j += 1;
        }
        let f_lo = i as f64 / n as f64; // F_emp(x^-)
        let f_hi = j as f64 / n as f64; // F_emp(x)
        let f = cdf(x);
        d = d.max((f - f_lo).abs()).max((f - f_hi).abs());
        i = j;
    }
    d
}

/// Median of the Kolmogorov statistic under the null, `~0.8276/sqrt(n)`;
/// used as the Monte Carlo noise floor in the sweep tolerances.
pub fn ks_noise_floor(n: usize) -> f64 {
    0.8276 / (n as f64).sqrt()
}

/// Chi-squared goodness-of-fit p-value for observed counts against expected
/// probabilities.  Bins with an expected count below `min_expected` are
/// merged forward before forming the statistic.
pub fn chi_squared_pvalue(observed: &[u64], expected_probs: &[f64], min_expected: f64) -> f64 {
    assert_eq!(observed.len(), expected_probs.len());
    let total: u64 = observed.iter().sum();
    let total_f = total as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    for (&o, &p) in observed.iter().zip(expected_probs.iter()) {
        acc_o += o as f64;
        acc_e += p * total_f;
        if acc_e >= min_expected {
            bins.push((acc_o, acc_e));
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        if let Some(last) = bins.last_mut() {
            last.0 += acc_o;
            last.1 += acc_e;
        } else {
            bins.push((acc_o, acc_e));
        }
    }
    if bins.len() < 2 {
        return 1.0;
    }
    let stat: f64 = bins.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let df = (bins.len() - 1) as f64;
    let chi = ChiSquared::new(df).unwrap();
    1.0 - chi.cdf(stat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_basics() {
        let w = wilson_interval(50, 100, 1.96);
        assert!(w.lo < 0.5 && w.hi > 0.5);
        assert!(w.lo < w.hi);
        let w = wilson_interval(0, 100, 1.96);
        assert_eq!(w.lo, 0.0);
        assert!(w.hi > 0.0);
        let w = wilson_interval(100, 100, 1.96);
        assert!(w.hi > 0.999);
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-12);
        assert!((normal_cdf(-1.0) - 0.158655253931457).abs() < 1e-10);
        assert!((normal_cdf(2.0) - 0.977249868051821).abs() < 1e-10);
    }

    #[test]
    fn ks_distance_of_exact_uniform() {
        // samples 1..=100 once each against the exact discrete uniform CDF:
        // the distance is the within-jump half gap, 1/n at most.
        let samples: Vec<i64> = (1..=100).collect();
        let cdf = |x: i64| (x.clamp(0, 100) as f64) / 100.0;
        let d = ks_distance_discrete(&samples, &cdf);
        assert!(d <= 0.01 + 1e-12, "d = {d}");
        // a shifted CDF must register
        let bad = |x: i64| ((x.clamp(0, 100) as f64) / 100.0).powi(2);
        assert!(ks_distance_discrete(&samples, &bad) > 0.2);
    }

    #[test]
    fn chi_squared_detects_and_accepts() {
        // geometric counts placed exactly at expectation pass with p ~ 1
        let probs: Vec<f64> = (0..20).map(|k| 0.5f64.powi(k + 1)).collect();
        let obs: Vec<u64> = probs.iter().map(|p| (p * 100000.0).round() as u64).collect();
        assert!(chi_squared_pvalue(&obs, &probs, 5.0) > 0.5);
        // grossly wrong law fails
        let obs_bad: Vec<u64> = probs.iter().rev().map(|p| (p * 100000.0) as u64).collect();
        assert!(chi_squared_pvalue(&obs_bad, &probs, 5.0) < 1e-6);
    }
}
