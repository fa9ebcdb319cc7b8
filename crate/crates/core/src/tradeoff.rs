//! Trade-off between processor width and computation length.
//!
//! Scaling the word widths by `δ` multiplies the table size by `δ·Γ_δ` and
//! divides the step count by `δ`. All quantities are plain `f64`; `Γ_δ` is
//! formed from its base-2 logarithm so that wide machines do not overflow
//! before the ratio is taken.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TradeoffError {
    #[error("{0} must be positive and finite")]
    NotPositive(&'static str),
    #[error("no root of the stationarity condition in (0, {0}]")]
    NoRoot(f64),
}

fn positive(x: f64, name: &'static str) -> Result<(), TradeoffError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(TradeoffError::NotPositive(name))
    }
}

/// `log2 Γ_δ = (m+n)(δ−1)`.
pub fn log2_gamma_delta(delta: f64, m: f64, n: f64) -> f64 {
    (m + n) * (delta - 1.0)
}

/// `Γ_δ ≈ 2^{(m+n)(δ−1)}`.
pub fn gamma_delta(delta: f64, m: f64, n: f64) -> f64 {
    log2_gamma_delta(delta, m, n).exp2()
}

/// `Γ = M^{δ₁−1}·N^{δ₂−1}` for explicit state and symbol counts.
pub fn gamma_exact(states: f64, symbols: f64, delta1: f64, delta2: f64) -> f64 {
    ((delta1 - 1.0) * states.log2() + (delta2 - 1.0) * symbols.log2()).exp2()
}

/// Lower bound on `C′/C` after scaling by `δ`:
/// `(δ·Γ_δ·S + I) / (δ·(S + I))`.
pub fn cost_ratio(delta: f64, s: f64, i_eff: f64, m: f64, n: f64) -> f64 {
    if delta == 1.0 {
        return 1.0;
    }
    // Divide through by δ so that Γ_δ·S is the only large term.
    (gamma_delta(delta, m, n) * s + i_eff / delta) / (s + i_eff)
}

/// Memory-to-table ratio `ω = I/S` at which `δ` is stationary, in the
/// published form `δ²·Γ_δ·(m+n)/ln 2`.
pub fn stationarity_omega(delta: f64, m: f64, n: f64) -> f64 {
    delta * delta * gamma_delta(delta, m, n) * (m + n) / std::f64::consts::LN_2
}

/// The condition obtained by differentiating [`cost_ratio`] directly:
/// `ω = δ²·Γ_δ·(m+n)·ln 2`.
pub fn exact_stationarity_omega(delta: f64, m: f64, n: f64) -> f64 {
    delta * delta * gamma_delta(delta, m, n) * (m + n) * std::f64::consts::LN_2
}

/// Solves `omega_of(δ) = ω` for an increasing `omega_of` by bisection.
fn invert(omega: f64, omega_of: impl Fn(f64) -> f64) -> Result<f64, TradeoffError> {
    positive(omega, "omega")?;
    let mut hi = 1.0;
    while omega_of(hi) < omega {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(TradeoffError::NoRoot(hi));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if omega_of(mid) < omega {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Root of the published stationarity condition.
pub fn optimal_delta(omega: f64, m: f64, n: f64) -> Result<f64, TradeoffError> {
    positive(m + n, "m + n")?;
    invert(omega, |d| stationarity_omega(d, m, n))
}

/// Root of the condition derived from [`cost_ratio`].
pub fn exact_optimal_delta(omega: f64, m: f64, n: f64) -> Result<f64, TradeoffError> {
    positive(m + n, "m + n")?;
    invert(omega, |d| exact_stationarity_omega(d, m, n))
}

/// Minimizer of [`cost_ratio`] over `δ` by golden-section search.
pub fn argmin_delta(s: f64, i_eff: f64, m: f64, n: f64) -> Result<f64, TradeoffError> {
    positive(s, "S")?;
    positive(i_eff, "I_eff")?;
    positive(m + n, "m + n")?;
    // Same minimizer as cost_ratio, without the common denominator.
    let f = |d: f64| gamma_delta(d, m, n) * s + i_eff / d;
    let (mut lo, mut hi) = (1e-6, 1.0);
    while f(hi * 2.0) < f(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(TradeoffError::NoRoot(hi));
        }
    }
    hi *= 2.0;
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > 1e-10 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = f(b);
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Table size at which unscaled widths are optimal, in the published form
/// `S = ln 2 · I / (m+n)`.
pub fn optimal_fsm_size(i_eff: f64, m: f64, n: f64) -> f64 {
    std::f64::consts::LN_2 * i_eff / (m + n)
}

/// Table size at which `δ = 1` minimizes [`cost_ratio`]: `S = I / ((m+n) ln 2)`.
pub fn exact_optimal_fsm_size(i_eff: f64, m: f64, n: f64) -> f64 {
    i_eff / ((m + n) * std::f64::consts::LN_2)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub delta: f64,
    pub gamma: f64,
    pub cost_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TradeoffReport {
    pub m: f64,
    pub n: f64,
    pub omega: f64,
    pub optimal_delta: f64,
    pub exact_optimal_delta: f64,
    pub rows: Vec<TradeoffRow>,
}

/// Sweeps `δ` over `deltas` at `ω = I/S` (with `S = 1`).
pub fn report(omega: f64, m: f64, n: f64, deltas: &[f64]) -> Result<TradeoffReport, TradeoffError> {
    let rows = deltas
        .iter()
        .map(|&d| {
            positive(d, "delta")?;
            Ok(TradeoffRow {
                delta: d,
                gamma: gamma_delta(d, m, n),
                cost_ratio: cost_ratio(d, 1.0, omega, m, n),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TradeoffReport {
        m,
        n,
        omega,
        optimal_delta: optimal_delta(omega, m, n)?,
        exact_optimal_delta: exact_optimal_delta(omega, m, n)?,
        rows,
    })
}

impl TradeoffReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta,gamma,cost_ratio\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.delta, r.gamma, r.cost_ratio));
        }
        out
    }
}

/// `count` values of `δ` spaced evenly on `[lo, hi]`.
pub fn delta_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
