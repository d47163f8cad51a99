//! Small statistical toolkit: sample moments, effective sample size,
//! quantiles, Kolmogorov-Smirnov statistics with asymptotic critical
//! values, and variance z-scores.  Distribution functions come from
//! `statrs`; the Kolmogorov distribution itself is evaluated by its
//! classical series (it is not in the common crates).

use statrs::distribution::{ContinuousCDF, Normal};

/// Sample mean and unbiased variance (zero variance for fewer than two
/// points).
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n as f64 - 1.0))
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    let (_, var) = mean_and_variance(xs);
    (var / xs.len() as f64).sqrt()
}

/// `(sum w)^2 / sum w^2`: the equivalent number of equally-weighted
/// samples.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 == 0.0 {
        0.0
    } else {
        s * s / s2
    }
}

/// Empirical quantile of an ascending-sorted slice: the smallest order
/// statistic whose rank fraction reaches `q` (`ceil(q n)`-th value).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// One-sample Kolmogorov-Smirnov statistic of `xs` against a continuous
/// CDF.
pub fn one_sample_ks<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        let upper = (i as f64 + 1.0) / n - f;
        let lower = f - i as f64 / n;
        d = d.max(upper).max(lower);
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn two_sample_ks(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    // Advance both samples past each distinct value before measuring, so
    // ties across the samples do not register a spurious gap.
    while i < a.len() && j < b.len() {
        let v = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// CDF of the Kolmogorov distribution `K(x) = P(sup |B(t)| <= x)`.
///
/// Uses the theta-function form for small `x` and the alternating series
/// otherwise; both converge to machine precision in a handful of terms.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 1.0 {
        // sqrt(2 pi)/x * sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2))
        let mut sum = 0.0;
        for k in 1..=20 {
            let odd = (2 * k - 1) as f64;
            sum += (-odd * odd * std::f64::consts::PI.powi(2) / (8.0 * x * x)).exp();
        }
        (std::f64::consts::TAU).sqrt() / x * sum
    } else {
        // 1 - 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)
        let mut sum = 0.0;
        for k in 1..=20 {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let kf = k as f64;
            sum += sign * (-2.0 * kf * kf * x * x).exp();
        }
        1.0 - 2.0 * sum
    }
}

/// Inverse Kolmogorov CDF by bisection.
fn kolmogorov_inverse(p: f64) -> f64 {
    assert!((0.0..1.0).contains(&p), "probability out of range: {p}");
    let (mut lo, mut hi) = (1e-3, 5.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Asymptotic one-sample critical value at significance `alpha`:
/// reject when the statistic exceeds `K^{-1}(1 - alpha) / sqrt(n)`.
pub fn ks_critical_one_sample(alpha: f64, n: usize) -> f64 {
    kolmogorov_inverse(1.0 - alpha) / (n as f64).sqrt()
}

/// Asymptotic two-sample critical value at significance `alpha`.
pub fn ks_critical_two_sample(alpha: f64, n: usize, m: usize) -> f64 {
    kolmogorov_inverse(1.0 - alpha) * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Gaussian CDF with the given mean and standard deviation.
pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).expect("valid normal parameters").cdf(x)
}

/// Normal-theory z-score of a sample variance against a theoretical one:
/// `(s^2 - v) / (v sqrt(2 / (n - 1)))`.
pub fn variance_z_score(sample_var: f64, theory_var: f64, n: usize) -> f64 {
    (sample_var - theory_var) / (theory_var * (2.0 / (n as f64 - 1.0)).sqrt())
}
