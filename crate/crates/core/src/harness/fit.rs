use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{QslError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// 95% confidence interval of the slope; needs at least 3 points.
    pub slope_ci95: Option<[f64; 2]>,
    pub points: usize,
    /// Pairs dropped because the value was not positive.
    pub excluded: Vec<(f64, f64)>,
}

/// Least squares on `(ln ε, ln value)`.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    let (kept, excluded): (Vec<_>, Vec<_>) = pairs
        .iter()
        .copied()
        .partition(|&(e, v)| e > 0.0 && v > 0.0 && e.is_finite() && v.is_finite());
    let n = kept.len();
    if n < 2 {
        return Err(QslError::InvalidInput(format!(
            "need at least 2 positive points to fit a rate, got {n}"
        )));
    }
    let xs: Vec<f64> = kept.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(QslError::InvalidInput("all eps values are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    let slope_ci95 = (n >= 3).then(|| {
        let dof = nf - 2.0;
        let se = (ss_res / dof / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, dof).expect("dof > 0").inverse_cdf(0.975);
        [slope - t * se, slope + t * se]
    });
    Ok(RateFit {
        slope,
        intercept,
        r2,
        slope_ci95,
        points: n,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let f = fit_rate(&[(0.1, 0.1), (0.05, 0.05)]).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        let f = fit_rate(&[(0.1, 0.01), (0.05, 0.0025)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        let eps = [0.08, 0.06, 0.04, 0.03];
        let f = fit_rate(&eps.map(|e| (e, 2.0 * e))).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12 && (f.intercept - 2f64.ln()).abs() < 1e-12);
        let ci = f.slope_ci95.unwrap();
        assert!((ci[0] - 1.0).abs() < 1e-9 && (ci[1] - 1.0).abs() < 1e-9);
        let f = fit_rate(&eps.map(|e| (e, e * e))).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_slope_one() {
        // Fixed ±5% perturbations.
        let noise = [0.05, -0.04, 0.03, -0.05, 0.02, -0.01, 0.04, -0.03];
        let pts: Vec<_> = noise
            .iter()
            .enumerate()
            .map(|(k, n)| {
                let e = 0.1 * 0.8f64.powi(k as i32);
                (e, e * (1.0 + n))
            })
            .collect();
        let f = fit_rate(&pts).unwrap();
        assert!((0.9..=1.1).contains(&f.slope) && f.r2 > 0.95, "{f:?}");
        let ci = f.slope_ci95.unwrap();
        assert!(ci[0] < f.slope && f.slope < ci[1]);
    }

    #[test]
    fn nonpositive_values_are_excluded() {
        let f = fit_rate(&[(0.1, 0.1), (0.07, -1.0), (0.05, 0.05)]).unwrap();
        assert_eq!(f.points, 2);
        assert_eq!(f.excluded, vec![(0.07, -1.0)]);
        assert!(f.slope_ci95.is_none());
        assert!(fit_rate(&[(0.1, 0.0), (0.05, 0.05)]).is_err());
    }
}
