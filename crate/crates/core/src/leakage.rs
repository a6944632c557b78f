//! Exact information leakage to the sequencer.
//!
//! The sequencer's noiseless view of SNP `n` is the integer
//! `Z_n = sum_m 2^m (X_{m,n} + Y_{m,n})` with fair-coin `Y`. Since `Y` is
//! uniform, `H(Z_n | x_n) = M` bits and `I(x_n; Z_n) = H(Z_n) - M`. The
//! reported value upper-bounds the leakage through the noisy observation.
//!
//! Two routes compute it: convolving the per-level pmfs of
//! `2^m (X_m + Y_m)`, and a forward pass over the binary adder's carry
//! states giving `H(B_M | b_{M-1} ... b_0)` directly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, invalid, Error, Result};

/// Largest `M` accepted by the convolution route.
pub const MAX_PMF_LEVELS: usize = 24;
/// Largest `M` accepted by the carry-state route and the curve.
pub const MAX_CARRY_LEVELS: usize = 20;

/// Exact distribution of `Z_n` on `{0, ..., 2^(M+1) - 2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerSumPmf {
    m: usize,
    pmf: Vec<f64>,
}

impl IntegerSumPmf {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.pmf
    }

    /// Shannon entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        entropy_bits(&self.pmf)
    }
}

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| q * q.log2())
        .sum::<f64>()
}

fn binary_entropy(p: f64) -> f64 {
    entropy_bits(&[p, 1.0 - p])
}

fn check_freqs(freqs: &[f64], max: usize) -> Result<()> {
    let m = freqs.len();
    if m == 0 {
        return Err(invalid("M", "must be at least 1"));
    }
    if m > max {
        return Err(Error::TooManyLevels { m, max });
    }
    for &f in freqs {
        check_probability("freq", f)?;
    }
    Ok(())
}

/// Exact pmf of `Z_n`; `freqs[m]` is `P(X_m = 1)`.
pub fn integer_sum_pmf(freqs: &[f64]) -> Result<IntegerSumPmf> {
    check_freqs(freqs, MAX_PMF_LEVELS)?;
    let m = freqs.len();
    let mut pmf = vec![1.0];
    for (level, &f) in freqs.iter().enumerate() {
        let step = 1usize << level;
        // 2^m (X + Y) takes 0, 2^m, 2^(m+1)
        let weights = [(1.0 - f) / 2.0, 0.5, f / 2.0];
        let mut next = vec![0.0; pmf.len() + 2 * step];
        for (z, &p) in pmf.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (k, &w) in weights.iter().enumerate() {
                next[z + k * step] += p * w;
            }
        }
        pmf = next;
    }
    debug_assert_eq!(pmf.len(), (1usize << (m + 1)) - 1);
    Ok(IntegerSumPmf { m, pmf })
}

/// `I(x_n; Z_n) = H(Z_n) - M` in bits, via the convolution route.
pub fn exact_leakage(freqs: &[f64]) -> Result<f64> {
    let pmf = integer_sum_pmf(freqs)?;
    Ok((pmf.entropy_bits() - pmf.m as f64).max(0.0))
}

/// `H(B_M | b_{M-1} ... b_0)` in bits, via the carry-state recursion.
///
/// State after `i` levels is `(low bits b_{i-1}..b_0, carry B_i)`. Each
/// level emits `b_i = X_i xor Y_i xor B_i` and carries
/// `B_{i+1} = (X_i + Y_i + B_i) >> 1`.
pub fn carry_bit_entropy(freqs: &[f64]) -> Result<f64> {
    check_freqs(freqs, MAX_CARRY_LEVELS)?;
    let m = freqs.len();
    // index = (low << 1) | carry
    let mut state = vec![1.0f64, 0.0];
    for (level, &f) in freqs.iter().enumerate() {
        let mut next = vec![0.0; state.len() * 2];
        let px = [1.0 - f, f];
        for (idx, &p) in state.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let low = idx >> 1;
            let carry = idx & 1;
            for (x, &pxv) in px.iter().enumerate() {
                for y in 0..2 {
                    let sum = x + y + carry;
                    let bit = sum & 1;
                    let low_next = low | (bit << level);
                    next[(low_next << 1) | (sum >> 1)] += p * pxv * 0.5;
                }
            }
        }
        state = next;
    }
    debug_assert_eq!(state.len(), 1usize << (m + 1));
    Ok(state
        .chunks_exact(2)
        .map(|pair| {
            let mass = pair[0] + pair[1];
            if mass > 0.0 {
                mass * binary_entropy(pair[1] / mass)
            } else {
                0.0
            }
        })
        .sum())
}

/// Per-level priors used by the leakage curve.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    /// Every unknown individual carries allele `1` with this probability.
    Constant(f64),
    /// Explicit per-level priors; level `m` uses entry `m`.
    PerLevel(Vec<f64>),
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::Constant(0.5)
    }
}

impl PriorSpec {
    fn levels(&self, m: usize) -> Result<Vec<f64>> {
        match self {
            PriorSpec::Constant(p) => Ok(vec![*p; m]),
            PriorSpec::PerLevel(v) if v.len() >= m => Ok(v[..m].to_vec()),
            PriorSpec::PerLevel(v) => Err(Error::DimensionMismatch(format!(
                "{} priors supplied, {m} levels needed",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakagePoint {
    pub m: usize,
    /// Upper bound on `I(x_n; q_n)` in bits.
    pub i_bits: f64,
    pub per_bit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub points: Vec<LeakagePoint>,
    /// Every `I <= 1 + 1e-12`.
    pub bound_ok: bool,
    /// `I` nondecreasing in `M`.
    pub monotone_ok: bool,
}

impl LeakageReport {
    /// Writes `M,I_bits,per_bit` rows with a header.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "M,I_bits,per_bit")?;
        for p in &self.points {
            writeln!(out, "{},{},{}", p.m, p.i_bits, p.per_bit)?;
        }
        Ok(())
    }
}

/// Slack allowed on the one-bit bound and on monotonicity.
pub const LEAKAGE_TOLERANCE: f64 = 1e-12;

/// Exact leakage for `M = 1..=m_max`.
pub fn leakage_curve(m_max: usize, priors: &PriorSpec) -> Result<LeakageReport> {
    if m_max == 0 {
        return Err(invalid("m_max", "must be at least 1"));
    }
    if m_max > MAX_CARRY_LEVELS {
        return Err(Error::TooManyLevels {
            m: m_max,
            max: MAX_CARRY_LEVELS,
        });
    }
    let points = (1..=m_max)
        .into_par_iter()
        .map(|m| {
            let i_bits = exact_leakage(&priors.levels(m)?)?;
            Ok(LeakagePoint {
                m,
                i_bits,
                per_bit: i_bits / m as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(points))
}

/// Builds a report from precomputed points, filling in the flags.
pub fn summarize(points: Vec<LeakagePoint>) -> LeakageReport {
    let bound_ok = points
        .iter()
        .all(|p| p.i_bits <= 1.0 + LEAKAGE_TOLERANCE);
    let monotone_ok = points
        .windows(2)
        .all(|w| w[1].i_bits + LEAKAGE_TOLERANCE >= w[0].i_bits);
    LeakageReport {
        points,
        bound_ok,
        monotone_ok,
    }
}
