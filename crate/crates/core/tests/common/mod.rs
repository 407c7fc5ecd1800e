//! Reference computations used as oracles. Nothing here calls the library's
//! own statistics.
#![allow(dead_code)]

pub mod protocol;

use statrs::function::gamma::ln_gamma;

/// Paired t from the textbook sum-of-squares formula on `post - pre`.
pub fn brute_paired_t(pre: &[f64], post: &[f64]) -> f64 {
    let n = pre.len() as f64;
    let d: Vec<f64> = pre.iter().zip(post).map(|(a, b)| b - a).collect();
    let sum: f64 = d.iter().sum();
    let sum_sq: f64 = d.iter().map(|x| x * x).sum();
    let var = (sum_sq - sum * sum / n) / (n - 1.0);
    (sum / n) / (var / n).sqrt()
}

/// Pooled two-sample t on `mean(a) - mean(b)`.
pub fn brute_independent_t(a: &[f64], b: &[f64]) -> f64 {
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let sum: f64 = v.iter().sum();
        let sum_sq: f64 = v.iter().map(|x| x * x).sum();
        (n, sum / n, (sum_sq - sum * sum / n) / (n - 1.0))
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    (ma - mb) / (pooled * (1.0 / na + 1.0 / nb)).sqrt()
}

/// Student's t density.
pub fn t_density(x: f64, df: f64) -> f64 {
    let ln_norm = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_norm - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp()
}

/// `P(T > t)` by composite Simpson integration of the density over [0, |t|].
pub fn integrated_upper_tail(t: f64, df: f64) -> f64 {
    let a = t.abs();
    if a == 0.0 {
        return 0.5;
    }
    let n = 20_000usize;
    let h = a / n as f64;
    let mut s = t_density(0.0, df) + t_density(a, df);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * t_density(i as f64 * h, df);
    }
    let area = s * h / 3.0;
    if t > 0.0 {
        0.5 - area
    } else {
        0.5 + area
    }
}

/// Sample standard deviation, n - 1 denominator.
pub fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
}
