//! Replication statistics: mean and Student-t 95% confidence interval.

use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub replications: usize,
}

impl Estimate {
    /// Mean of `samples` with a two-sided 95% interval on `n − 1` degrees of
    /// freedom. A single sample gives a degenerate interval.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: 0.0,
                ci95_lo: 0.0,
                ci95_hi: 0.0,
                replications: 0,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let half = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            t_quantile_975(n - 1) * (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            ci95_lo: mean - half,
            ci95_hi: mean + half,
            replications: n,
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.ci95_hi - self.ci95_lo) / 2.0
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci95_lo <= value && value <= self.ci95_hi
    }

    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.ci95_lo <= other.ci95_hi && other.ci95_lo <= self.ci95_hi
    }

    /// `self` lies entirely below `other`.
    pub fn strictly_below(&self, other: &Estimate) -> bool {
        self.ci95_hi < other.ci95_lo
    }
}

pub fn t_quantile_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}
