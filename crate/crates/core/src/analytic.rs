//! Closed-form M/M/1/N and M/M/c/N solutions, used to check the simulator
//! when every SCV is 1.

use crate::error::{invalid, Result};
use crate::node::{ClassMetrics, NodeMetrics};

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovQueueResult {
    /// `p[n]`, n = 0..=N
    pub probabilities: Vec<f64>,
    pub blocking: f64,
    pub mean_in_system: f64,
    pub throughput: f64,
    pub mean_response: f64,
}

impl MarkovQueueResult {
    fn from_probabilities(probabilities: Vec<f64>, lambda: f64) -> Self {
        let blocking = *probabilities.last().expect("at least one state");
        let mean_in_system = neumaier_sum(probabilities.iter().enumerate().map(|(n, p)| n as f64 * p));
        let throughput = lambda * (1.0 - blocking);
        Self {
            blocking,
            mean_in_system,
            throughput,
            mean_response: mean_in_system / throughput,
            probabilities,
        }
    }
}

fn check_rates(lambda: f64, mu: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid(format!("arrival rate must be > 0, got {lambda}")));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(invalid(format!("service rate must be > 0, got {mu}")));
    }
    Ok(())
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `ln|e^x − 1|` for `x ≠ 0`, without overflow for large `x`.
fn ln_abs_expm1(x: f64) -> f64 {
    if x > 0.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        (-x.exp_m1()).ln()
    }
}

/// Single-server queue with total capacity `capacity`:
/// `p[n] = ρⁿ (1 − ρ) / (1 − ρ^(N+1))`, or `1/(N+1)` when `ρ = 1`.
pub fn mm1n_solve(lambda: f64, mu: f64, capacity: usize) -> Result<MarkovQueueResult> {
    check_rates(lambda, mu)?;
    if capacity == 0 {
        return Err(invalid("capacity must be at least 1"));
    }
    let states = capacity + 1;
    let ln_rho = ((lambda - mu) / mu).ln_1p();
    let probabilities = if ln_rho == 0.0 {
        vec![1.0 / states as f64; states]
    } else {
        // ln p0 = ln|1 − ρ| − ln|1 − ρ^(N+1)|
        let ln_p0 = ln_abs_expm1(ln_rho) - ln_abs_expm1(states as f64 * ln_rho);
        (0..states).map(|n| (n as f64 * ln_rho + ln_p0).exp()).collect()
    };
    Ok(MarkovQueueResult::from_probabilities(probabilities, lambda))
}

/// Birth–death solution for `servers` servers and total capacity `capacity`:
/// `pₙ ∝ aⁿ/n!` for `n ≤ c` and `aⁿ/(c!·c^(n−c))` above, with `a = λ/μ`.
/// Weights are kept in log space.
pub fn mmcn_solve(lambda: f64, mu: f64, servers: usize, capacity: usize) -> Result<MarkovQueueResult> {
    check_rates(lambda, mu)?;
    if servers == 0 || servers > capacity {
        return Err(invalid(format!(
            "need 1 <= servers <= capacity, got c={servers}, N={capacity}"
        )));
    }
    let ln_a = (lambda / mu).ln();
    let ln_c = (servers as f64).ln();
    let mut ln_weights = Vec::with_capacity(capacity + 1);
    let mut ln_fact = 0.0f64;
    for n in 0..=capacity {
        if n >= 1 && n <= servers {
            ln_fact += (n as f64).ln();
        }
        let w = if n <= servers {
            n as f64 * ln_a - ln_fact
        } else {
            n as f64 * ln_a - ln_fact - (n - servers) as f64 * ln_c
        };
        ln_weights.push(w);
    }
    let max = ln_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = ln_weights.iter().map(|w| (w - max).exp()).collect();
    let norm = neumaier_sum(scaled.iter().copied());
    let probabilities = scaled.into_iter().map(|w| w / norm).collect();
    Ok(MarkovQueueResult::from_probabilities(probabilities, lambda))
}

/// Erlang-B blocking via `B(k) = a·B(k−1) / (k + a·B(k−1))`.
pub fn erlang_b(servers: usize, offered_load: f64) -> f64 {
    (1..=servers).fold(1.0, |b, k| offered_load * b / (k as f64 + offered_load * b))
}

/// Relative Little's-law residual `|L − λ_eff·W| / L` of one class.
pub fn littles_residual(metrics: &ClassMetrics, window: f64) -> f64 {
    let l = metrics.mean_in_system;
    let lw = metrics.effective_rate(window) * metrics.mean_response;
    if l == 0.0 && lw == 0.0 {
        return 0.0;
    }
    (l - lw).abs() / l.max(f64::EPSILON)
}

/// Little's-law residual on the class aggregate of a node.
pub fn littles_check(report: &NodeMetrics) -> f64 {
    littles_residual(&report.total, report.window)
}
