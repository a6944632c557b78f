//! The trusted data collector.
//!
//! Turns pooled tallies into the scaled observation
//! `G_n = sum_m 2^m X_{m,n} + noise` by removing the known individuals'
//! contribution, then decodes each column on the integer lattice
//! `{0, ..., 2^M - 1}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::GenotypeMatrix;
use crate::pool::{check_shapes, DepthPolicy, PooledCounts, SchemeParams};

/// Largest `M` for which the exhaustive decoder is run.
pub const EXHAUSTIVE_MAX_LEVELS: usize = 20;

/// Variances of the Gaussian observation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Read-noise variance of `G_n`.
    pub sigma2: f64,
    /// Relative depth variance `sigma_alpha^2 / alpha0^2`.
    pub sigma1_2: f64,
    /// Total variance seen by the decoder.
    pub total_var: f64,
}

pub fn noise_model(params: &SchemeParams) -> NoiseModel {
    let eta = params.eta();
    let a0 = params.alpha0() as f64;
    let w = params.depth_weight();
    let scale = (1.0 - 2.0 * eta).powi(2);
    match params.depth() {
        DepthPolicy::Constant => {
            let sigma2 = w / a0 * eta * (1.0 - eta) / scale;
            NoiseModel {
                sigma2,
                sigma1_2: 0.0,
                total_var: sigma2,
            }
        }
        DepthPolicy::Random { sigma_alpha } => {
            let sigma1_2 = sigma_alpha * sigma_alpha / (a0 * a0);
            let sigma2 = w / scale * (eta * (1.0 - eta) / a0 + eta * eta * sigma1_2);
            NoiseModel {
                sigma2,
                sigma1_2,
                total_var: w * sigma1_2 + sigma2,
            }
        }
    }
}

/// Scaled, known-corrected observations, one per SNP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    g: Vec<f64>,
    params: SchemeParams,
}

impl Observation {
    pub fn new(g: Vec<f64>, params: SchemeParams) -> Result<Self> {
        if let Some(n) = g.iter().position(|v| !v.is_finite()) {
            return Err(invalid("g", format!("non-finite observation at SNP {n}")));
        }
        Ok(Observation { g, params })
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }
}

/// `G_n = c_n / (alpha0 (1 - 2 eta)) - sum_k 2^k y_{k,n} - (2^(M+1) - 2) eta / (1 - 2 eta)`.
pub fn aggregate(
    counts: &PooledCounts,
    known: &GenotypeMatrix,
    params: &SchemeParams,
) -> Result<Observation> {
    if known.rows() != params.m() {
        return Err(Error::DimensionMismatch(format!(
            "known matrix has {} rows, M = {}",
            known.rows(),
            params.m()
        )));
    }
    if known.cols() != counts.num_snps() {
        return Err(Error::DimensionMismatch(format!(
            "known matrix has {} SNPs, counts have {}",
            known.cols(),
            counts.num_snps()
        )));
    }
    let eta = params.eta();
    let gain = params.alpha0() as f64 * (1.0 - 2.0 * eta);
    let offset = params.depth_weight() * eta / (1.0 - 2.0 * eta);
    let g = counts
        .ones_count()
        .iter()
        .enumerate()
        .map(|(n, &c)| c as f64 / gain - known.column_value(n) as f64 - offset)
        .collect();
    Observation::new(g, *params)
}

/// Nearest lattice point: round half away from zero, then clamp to
/// `[0, 2^M - 1]`.
#[inline]
pub fn round_to_lattice(g: f64, m: usize) -> u64 {
    let top = ((1u64 << m) - 1) as f64;
    g.round().clamp(0.0, top) as u64
}

/// Arg min over all `2^M` candidates of `|g - s|`; ties go to the larger
/// candidate when `g > 0`, matching [`round_to_lattice`].
pub fn nearest_exhaustive(g: f64, m: usize) -> u64 {
    let mut best = 0u64;
    let mut best_dist = g.abs();
    for s in 1..(1u64 << m) {
        let d = (g - s as f64).abs();
        if d < best_dist || (d == best_dist && g > 0.0) {
            best = s;
            best_dist = d;
        }
    }
    best
}

/// Decoded columns, with per-column error flags when the truth is known.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub x_hat: GenotypeMatrix,
    pub column_errors: Option<Vec<bool>>,
    pub error_rate: Option<f64>,
}

impl DecodeResult {
    fn new(x_hat: GenotypeMatrix) -> Self {
        DecodeResult {
            x_hat,
            column_errors: None,
            error_rate: None,
        }
    }

    /// Compares against the true unknown matrix and fills in the error flags.
    pub fn score(mut self, x_true: &GenotypeMatrix) -> Result<Self> {
        let errors = column_errors(&self.x_hat, x_true)?;
        let rate = errors.iter().filter(|&&e| e).count() as f64 / errors.len().max(1) as f64;
        self.column_errors = Some(errors);
        self.error_rate = Some(rate);
        Ok(self)
    }

    /// Decoded column value `s_n`.
    pub fn decoded(&self, col: usize) -> u64 {
        self.x_hat.column_value(col)
    }

    /// Writes `n,s_decoded,error_flag`; the flag column is empty without
    /// ground truth.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,s_decoded,error_flag")?;
        for n in 0..self.x_hat.cols() {
            let flag = match &self.column_errors {
                Some(e) => u8::from(e[n]).to_string(),
                None => String::new(),
            };
            writeln!(out, "{n},{},{flag}", self.decoded(n))?;
        }
        Ok(())
    }
}

fn decode_with(obs: &Observation, rule: impl Fn(f64, usize) -> u64 + Sync) -> GenotypeMatrix {
    let m = obs.params.m();
    let values: Vec<u64> = obs.g.par_iter().map(|&g| rule(g, m)).collect();
    let mut x_hat = GenotypeMatrix::zeros(m, values.len());
    for (n, s) in values.into_iter().enumerate() {
        x_hat.set_column_value(n, s);
    }
    x_hat
}

/// Nearest-integer lattice decoding of every column.
pub fn decode_constant(obs: &Observation) -> DecodeResult {
    DecodeResult::new(decode_with(obs, round_to_lattice))
}

/// ML decoding under random depths: arg min over candidate columns of
/// `|G_n - s|`.
///
/// `aggregate` already removed the known contribution and the offset, so
/// the rule reduces to rounding. For small `M` the exhaustive search runs
/// alongside in debug builds and must agree.
pub fn decode_random(
    obs: &Observation,
    known: &GenotypeMatrix,
    params: &SchemeParams,
) -> Result<DecodeResult> {
    check_shapes(known, known, params)?;
    if known.cols() != obs.g.len() {
        return Err(Error::DimensionMismatch(format!(
            "known matrix has {} SNPs, observation has {}",
            known.cols(),
            obs.g.len()
        )));
    }
    let check = cfg!(debug_assertions) && params.m() <= 8;
    Ok(DecodeResult::new(decode_with(obs, |g, m| {
        let s = round_to_lattice(g, m);
        if check {
            assert_eq!(s, nearest_exhaustive(g, m), "decoders disagree at g = {g}");
        }
        s
    })))
}

/// Exhaustive arg min decoding, without the rounding shortcut.
pub fn decode_exhaustive(obs: &Observation) -> Result<DecodeResult> {
    let m = obs.params.m();
    if m > EXHAUSTIVE_MAX_LEVELS {
        return Err(Error::TooManyLevels {
            m,
            max: EXHAUSTIVE_MAX_LEVELS,
        });
    }
    Ok(DecodeResult::new(decode_with(obs, nearest_exhaustive)))
}

/// Decodes with the rule matching the observation's depth policy.
pub fn decode(obs: &Observation, known: &GenotypeMatrix) -> Result<DecodeResult> {
    match obs.params.depth() {
        DepthPolicy::Constant => Ok(decode_constant(obs)),
        DepthPolicy::Random { .. } => decode_random(obs, known, &obs.params),
    }
}

fn column_errors(x_hat: &GenotypeMatrix, x_true: &GenotypeMatrix) -> Result<Vec<bool>> {
    if x_hat.rows() != x_true.rows() || x_hat.cols() != x_true.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} estimate vs {}x{} truth",
            x_hat.rows(),
            x_hat.cols(),
            x_true.rows(),
            x_true.cols()
        )));
    }
    Ok((0..x_hat.cols())
        .map(|n| x_hat.column(n).ne(x_true.column(n)))
        .collect())
}

/// Fraction of columns where any bit differs.
pub fn column_error_rate(x_hat: &GenotypeMatrix, x_true: &GenotypeMatrix) -> Result<f64> {
    let errors = column_errors(x_hat, x_true)?;
    if errors.is_empty() {
        return Ok(0.0);
    }
    Ok(errors.iter().filter(|&&e| e).count() as f64 / errors.len() as f64)
}
