//! Small statistics toolbox: moments with standard errors, distribution-free
//! bands, least squares on transformed scales and a percentile bootstrap.

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (1/(n-1) normalizer); 0 for fewer than 2 points.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Mean and standard error in one pass over the data.
pub fn mean_with_se(xs: &[f64]) -> (f64, f64) {
    (mean(xs), standard_error(xs))
}

/// Dvoretzky–Kiefer–Wolfowitz half-width `sqrt(ln(2/delta) / (2 R))`: with
/// probability at least `1 - delta` the empirical CDF of `R` i.i.d. samples
/// stays within this band of the truth, uniformly in `x`.
pub fn dkw_half_width(r: usize, delta: f64) -> f64 {
    assert!(r > 0 && delta > 0.0 && delta < 1.0);
    ((2.0 / delta).ln() / (2.0 * r as f64)).sqrt()
}

/// Binomial standard error of an empirical frequency `p_hat` from `r` trials.
pub fn binomial_se(p_hat: f64, r: usize) -> f64 {
    (p_hat * (1.0 - p_hat) / r as f64).sqrt()
}

/// Sort a copy of the slice ascending (NaN-free data expected).
pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_unstable_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
    v
}

/// Pearson correlation of two equal-length samples.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let xa = sorted(a);
    let xb = sorted(b);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let mut ia = 0usize;
    let mut ib = 0usize;
    let mut sup: f64 = 0.0;
    while ia < xa.len() && ib < xb.len() {
        let (va, vb) = (xa[ia], xb[ib]);
        if va <= vb {
            ia += 1;
        }
        if vb <= va {
            ib += 1;
        }
        sup = sup.max((ia as f64 / na - ib as f64 / nb).abs());
    }
    sup.max(1.0 - (ia.min(xa.len()) as f64 / na).min(ib as f64 / nb))
}

/// Result of a straight-line fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual sum of squares under the fit weights.
    pub rss: f64,
}

/// Weighted least squares for a line; `weights` multiply squared residuals.
pub fn weighted_line_fit(xs: &[f64], ys: &[f64], weights: &[f64]) -> LineFit {
    assert!(xs.len() == ys.len() && xs.len() == weights.len());
    assert!(xs.len() >= 2, "line fit needs at least two points");
    let wsum: f64 = weights.iter().sum();
    let mx = xs.iter().zip(weights).map(|(x, w)| w * x).sum::<f64>() / wsum;
    let my = ys.iter().zip(weights).map(|(y, w)| w * y).sum::<f64>() / wsum;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((x, y), w) in xs.iter().zip(ys).zip(weights) {
        sxx += w * (x - mx) * (x - mx);
        sxy += w * (x - mx) * (y - my);
    }
    assert!(sxx > 0.0, "degenerate abscissae in line fit");
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = xs
        .iter()
        .zip(ys)
        .zip(weights)
        .map(|((x, y), w)| {
            let r = y - intercept - slope * x;
            w * r * r
        })
        .sum();
    LineFit { slope, intercept, rss }
}

/// Unweighted least squares for a line.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let w = vec![1.0; xs.len()];
    weighted_line_fit(xs, ys, &w)
}

/// Percentile bootstrap interval for a statistic of index resamples.
///
/// `stat` receives a with-replacement index sample of `0..n`; resamples that
/// make the statistic undefined may return `None` and are redrawn up to a
/// bounded number of times.
pub fn bootstrap_percentile<F>(
    n: usize,
    resamples: usize,
    level: f64,
    seed: u64,
    stat: F,
) -> Option<(f64, f64)>
where
    F: Fn(&[usize]) -> Option<f64>,
{
    assert!(n > 0 && resamples > 1 && level > 0.0 && level < 1.0);
    let mut values = Vec::with_capacity(resamples);
    let mut counter = 0u64;
    let mut draws = 0usize;
    let max_draws = resamples * 8;
    let mut idx = vec![0usize; n];
    while values.len() < resamples && draws < max_draws {
        for slot in idx.iter_mut() {
            counter += 1;
            *slot = (crate::innovations::mix64(seed ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15))
                % n as u64) as usize;
        }
        draws += 1;
        if let Some(v) = stat(&idx) {
            values.push(v);
        }
    }
    if values.len() < resamples / 2 {
        return None;
    }
    values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let alpha = 0.5 * (1.0 - level);
    let lo = ((values.len() as f64 - 1.0) * alpha).round() as usize;
    let hi = ((values.len() as f64 - 1.0) * (1.0 - alpha)).round() as usize;
    Some((values[lo], values[hi]))
}
