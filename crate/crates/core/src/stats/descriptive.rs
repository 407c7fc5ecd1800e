use serde::Serialize;

use super::StatsError;

/// Count, mean and sample standard deviation (n - 1 denominator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    /// Only one observation: `sd` is reported as 0 but is undefined.
    pub sd_undefined: bool,
}

pub fn mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

pub fn descriptive(values: &[f64]) -> Result<DescriptiveStats, StatsError> {
    let m = mean(values)?;
    let n = values.len();
    if n == 1 {
        return Ok(DescriptiveStats { n, mean: m, sd: 0.0, sd_undefined: true });
    }
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    Ok(DescriptiveStats { n, mean: m, sd: (ss / (n - 1) as f64).sqrt(), sd_undefined: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expert_rating_rows() {
        let a = descriptive(&[5.0, 5.0, 5.0, 5.0, 4.0]).unwrap();
        assert!((a.mean - 4.8).abs() < 1e-12);
        assert!((a.sd - 0.2f64.sqrt()).abs() < 1e-12);
        let b = descriptive(&[5.0, 5.0, 5.0, 4.0, 4.0]).unwrap();
        assert!((b.mean - 4.6).abs() < 1e-12);
        assert!((b.sd - 0.3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_input() {
        let d = descriptive(&[2.5; 7]).unwrap();
        assert_eq!((d.mean, d.sd), (2.5, 0.0));
    }

    #[test]
    fn single_value_is_flagged() {
        let d = descriptive(&[3.0]).unwrap();
        assert_eq!(d.sd, 0.0);
        assert!(d.sd_undefined);
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(descriptive(&[]), Err(StatsError::EmptyInput));
    }
}
