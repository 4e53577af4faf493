//! Log-linear fits of empirical tail probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponential fit `log P(X >= n) ~ intercept - lambda_hat * n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Site-occupation probability of the underlying percolation.
    pub p: f64,
    pub trials: usize,
    pub sizes: Vec<usize>,
    pub estimates: Vec<f64>,
    /// `ln(estimate)`; `-inf` where the estimate is 0.
    pub log_tail: Vec<f64>,
    /// Delta-method standard error of `log_tail`.
    pub log_stderr: Vec<f64>,
    /// Points with estimate strictly inside (0, 1), the ones fitted.
    pub fitted: Vec<bool>,
    pub lambda_hat: f64,
    pub intercept: f64,
}

impl TailFit {
    /// Builds the fit from exceedance counts `counts[i] = #{trials: X >= sizes[i]}`.
    pub fn from_counts(p: f64, sizes: &[usize], counts: &[usize], trials: usize) -> Result<Self> {
        assert_eq!(sizes.len(), counts.len());
        let t = trials as f64;
        let estimates: Vec<f64> = counts.iter().map(|&c| c as f64 / t).collect();
        let fitted: Vec<bool> = estimates.iter().map(|&e| e > 0.0 && e < 1.0).collect();
        let log_tail = estimates.iter().map(|e| e.ln()).collect();
        let log_stderr = estimates
            .iter()
            .map(|&e| if e > 0.0 { ((1.0 - e) / (e * t)).sqrt() } else { f64::INFINITY })
            .collect();

        let pts: Vec<(f64, f64)> = sizes
            .iter()
            .zip(&estimates)
            .zip(&fitted)
            .filter(|(_, &f)| f)
            .map(|((&n, &e), _)| (n as f64, e.ln()))
            .collect();
        if pts.len() < 2 {
            return Err(Error::DegenerateFit(format!(
                "{} of {} tail estimates lie strictly between 0 and 1; need at least 2",
                pts.len(),
                sizes.len()
            )));
        }
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::DegenerateFit("all fitted sizes coincide".into()));
        }
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        Ok(TailFit {
            p,
            trials,
            sizes: sizes.to_vec(),
            estimates,
            log_tail,
            log_stderr,
            fitted,
            lambda_hat: -slope,
            intercept: my - slope * mx,
        })
    }

    pub fn predicted_log_tail(&self, n: usize) -> f64 {
        self.intercept - self.lambda_hat * n as f64
    }

    /// Largest `|log_tail - line| / log_stderr` over the fitted points.
    pub fn max_standardized_residual(&self) -> f64 {
        (0..self.sizes.len())
            .filter(|&i| self.fitted[i])
            .map(|i| (self.log_tail[i] - self.predicted_log_tail(self.sizes[i])).abs() / self.log_stderr[i])
            .fold(0.0, f64::max)
    }
}

/// `counts[i] = #{x in samples: x >= sizes[i]}`.
pub(crate) fn exceedance_counts(samples: &[usize], sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .map(|&n| samples.iter().filter(|&&x| x >= n).count())
        .collect()
}
