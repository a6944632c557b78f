//! Closed-form sufficient conditions for reconstruction and privacy.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::collector::NoiseModel;
use crate::error::{invalid, Result};

/// Largest `M` accepted by the evaluators; `2^(M+1)` stays finite in `f64`.
pub const MAX_BOUND_LEVELS: usize = 1000;

/// A minimal base depth. Values above `2^63` are kept as floating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MinDepth {
    Exact(u64),
    Approx(f64),
}

impl MinDepth {
    /// Ceiling of a value given by its natural log.
    fn from_ln(ln_value: f64) -> Self {
        if ln_value < 63.0 * std::f64::consts::LN_2 {
            MinDepth::Exact(ln_value.exp().ceil().max(1.0) as u64)
        } else {
            MinDepth::Approx(ln_value.exp())
        }
    }

    fn from_value(value: f64) -> Self {
        if value < 2f64.powi(63) {
            MinDepth::Exact(value.ceil().max(1.0) as u64)
        } else {
            MinDepth::Approx(value)
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            MinDepth::Exact(v) => v as f64,
            MinDepth::Approx(v) => v,
        }
    }

    pub fn exact(self) -> Option<u64> {
        match self {
            MinDepth::Exact(v) => Some(v),
            MinDepth::Approx(_) => None,
        }
    }
}

impl fmt::Display for MinDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MinDepth::Exact(v) => write!(f, "{v}"),
            MinDepth::Approx(v) => write!(f, "{v:.4e}"),
        }
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(invalid("eta", format!("{eta} is not in (0, 0.5)")));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("{eps} is not in (0, 1)")));
    }
    Ok(())
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 || m > MAX_BOUND_LEVELS {
        return Err(invalid("M", format!("{m} is not in [1, {MAX_BOUND_LEVELS}]")));
    }
    Ok(())
}

/// `ln(2^(M+1) - 2)` without forming `2^(M+1)`.
fn ln_depth_weight(m: usize) -> f64 {
    (m as f64 + 1.0) * std::f64::consts::LN_2 + (-(0.5f64).powi(m as i32)).ln_1p()
}

/// `eta (1 - eta) / (1 - 2 eta)^2`.
fn read_noise_ratio(eta: f64) -> f64 {
    eta * (1.0 - eta) / (1.0 - 2.0 * eta).powi(2)
}

/// Smallest `M` with `1/M <= beta`.
pub fn min_m(beta: f64) -> Result<u64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid("beta", format!("{beta} is not in (0, 1)")));
    }
    // 1/beta may land a few ulps above an integer
    Ok((1.0 / beta - 1e-9).ceil() as u64)
}

/// `ln` of `(2^(M+1) - 2) * 8 eta (1 - eta) / (1 - 2 eta)^2 * ln(1/eps)`.
fn ln_constant_bound(m: usize, eta: f64, eps: f64) -> f64 {
    ln_depth_weight(m) + (8.0 * read_noise_ratio(eta)).ln() + (1.0 / eps).ln().ln()
}

/// Minimal integer `alpha0` for reconstruction under constant depths.
pub fn min_alpha0_constant(m: usize, eta: f64, eps: f64) -> Result<MinDepth> {
    check_m(m)?;
    check_eta(eta)?;
    check_eps(eps)?;
    Ok(MinDepth::from_ln(ln_constant_bound(m, eta, eps)))
}

/// The two depth requirements under random coverage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomDepthTerms {
    /// Read-noise requirement.
    pub e1: f64,
    /// Depth-fluctuation requirement.
    pub e2: f64,
}

pub fn random_depth_terms(m: usize, eta: f64, eps: f64, sigma_alpha: f64) -> Result<RandomDepthTerms> {
    check_m(m)?;
    check_eta(eta)?;
    check_eps(eps)?;
    if !(sigma_alpha >= 0.0 && sigma_alpha.is_finite()) {
        return Err(invalid("sigma_alpha", format!("{sigma_alpha} is not >= 0")));
    }
    let ln_w = ln_depth_weight(m);
    let ln_ln = (1.0 / eps).ln().ln();
    let e1 = (ln_w + (16.0 * read_noise_ratio(eta)).ln() + ln_ln).exp();
    let e2 = if sigma_alpha == 0.0 {
        0.0
    } else {
        let ratio = 1.0 + eta * eta / (1.0 - 2.0 * eta).powi(2);
        let ln_inner = (16.0 * sigma_alpha * sigma_alpha * ratio).ln() + ln_w + ln_ln;
        (0.5 * ln_inner).exp()
    };
    Ok(RandomDepthTerms { e1, e2 })
}

/// Minimal integer `alpha0` for reconstruction under random depths.
pub fn min_alpha0_random(m: usize, eta: f64, eps: f64, sigma_alpha: f64) -> Result<MinDepth> {
    let t = random_depth_terms(m, eta, eps, sigma_alpha)?;
    Ok(MinDepth::from_value(t.e1.max(t.e2)))
}

/// Chernoff-style per-SNP error bound `min(1, exp(-1 / (8 var)))`.
pub fn predict_error_bound(noise: &NoiseModel) -> f64 {
    if noise.total_var <= 0.0 {
        return 0.0;
    }
    (-1.0 / (8.0 * noise.total_var)).exp().min(1.0)
}

/// Inputs to [`bounds_report`]. `m` overrides the level count implied by
/// `beta`; at least one of them must be set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsInput {
    pub eta: f64,
    pub eps: f64,
    pub beta: Option<f64>,
    pub m: Option<usize>,
    pub sigma_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub input: BoundsInput,
    pub m_min: Option<u64>,
    /// Level count the depth requirements were evaluated at.
    pub m: usize,
    pub alpha0_min_constant: MinDepth,
    pub e1: f64,
    pub e2: f64,
    pub alpha0_min_random: MinDepth,
    /// False when a depth exceeds `2^63` and is reported as floating point.
    pub alpha0_exact: bool,
}

pub fn bounds_report(input: BoundsInput) -> Result<BoundsReport> {
    let m_min = input.beta.map(min_m).transpose()?;
    let m = match (input.m, m_min) {
        (Some(m), _) => m,
        (None, Some(m)) => usize::try_from(m).map_err(|_| invalid("beta", "too small"))?,
        (None, None) => return Err(invalid("M", "either M or beta is required")),
    };
    let alpha0_min_constant = min_alpha0_constant(m, input.eta, input.eps)?;
    let terms = random_depth_terms(m, input.eta, input.eps, input.sigma_alpha)?;
    let alpha0_min_random = MinDepth::from_value(terms.e1.max(terms.e2));
    Ok(BoundsReport {
        input,
        m_min,
        m,
        alpha0_min_constant,
        e1: terms.e1,
        e2: terms.e2,
        alpha0_min_random,
        alpha0_exact: alpha0_min_constant.exact().is_some() && alpha0_min_random.exact().is_some(),
    })
}

impl fmt::Display for BoundsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |f: &mut fmt::Formatter<'_>, k: &str, v: String| writeln!(f, "{k:<22}{v}");
        row(f, "eta", self.input.eta.to_string())?;
        row(f, "eps", self.input.eps.to_string())?;
        if let Some(beta) = self.input.beta {
            row(f, "beta", beta.to_string())?;
        }
        row(f, "sigma_alpha", self.input.sigma_alpha.to_string())?;
        if let Some(m_min) = self.m_min {
            row(f, "M_min", m_min.to_string())?;
        }
        row(f, "M", self.m.to_string())?;
        row(f, "alpha0 (constant)", self.alpha0_min_constant.to_string())?;
        row(f, "e1", fmt_real(self.e1))?;
        row(f, "e2", fmt_real(self.e2))?;
        row(f, "alpha0 (random)", self.alpha0_min_random.to_string())
    }
}

fn fmt_real(v: f64) -> String {
    if v.abs() >= 1e9 {
        format!("{v:.4e}")
    } else {
        format!("{v:.4}")
    }
}
