//! Least-squares line fits and observed convergence orders.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares `y ≈ slope · x + intercept`. Needs two distinct
/// abscissae.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LineFit { slope, intercept, r_squared, points: n })
}

/// Fit `log y = slope · log x + c`. Non-positive entries are skipped.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    linear_fit(&lx, &ly)
}

/// Observed orders `log(e_i / e_{i+1}) / log(r)` between successive
/// refinements by the factor `ratio`.
pub fn observed_orders(errors: &[f64], ratio: f64) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).ln() / ratio.ln()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_lines() {
        let f = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-15);
        assert_eq!(f.r_squared, 1.0);
        assert_eq!(f.points, 3);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_none());
        assert!(linear_fit(&[1.0, 2.0], &[1.0]).is_none());
    }

    #[test]
    fn power_laws() {
        let xs = [0.16_f64, 0.08, 0.04, 0.02];
        let ys: Vec<f64> = xs.iter().map(|x| 2.37 * x.powf(-2.0)).collect();
        let f = log_log_fit(&xs, &ys).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
        assert!((f.intercept - 2.37_f64.ln()).abs() < 1e-12);
        let g = log_log_fit(&[1.0, 2.0, 0.0, 4.0], &[1.0, 4.0, 5.0, -1.0]).unwrap();
        assert_eq!(g.points, 2);
    }

    #[test]
    fn orders() {
        let o = observed_orders(&[1.0, 1.0 / 16.0, 1.0 / 256.0], 2.0);
        assert_eq!(o.len(), 2);
        assert!(o.iter().all(|v| (v - 4.0).abs() < 1e-12));
    }
}
