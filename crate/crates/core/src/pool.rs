//! Pooled sequencing simulation: depth assignment, the read-error channel
//! and aggregation of unlabeled reads into per-SNP tallies.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::GenotypeMatrix;
use crate::rng::{substream, DOMAIN_POOL};

/// Largest `M` for which `2^M` depth multipliers fit comfortably in `u64`.
pub const MAX_LEVELS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum DepthPolicy {
    Constant,
    Random { sigma_alpha: f64 },
}

/// Parameters of the structured scheme: `M` unknowns paired with `M`
/// knowns, level `m` read at depth `2^m * alpha0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    m: usize,
    alpha0: u64,
    eta: f64,
    depth: DepthPolicy,
}

impl SchemeParams {
    pub fn new(m: usize, alpha0: u64, eta: f64, depth: DepthPolicy) -> Result<Self> {
        if m == 0 {
            return Err(invalid("M", "must be at least 1"));
        }
        if m > MAX_LEVELS {
            return Err(Error::TooManyLevels { m, max: MAX_LEVELS });
        }
        if alpha0 == 0 {
            return Err(invalid("alpha0", "must be at least 1"));
        }
        if !(eta > 0.0 && eta < 0.5) {
            return Err(invalid("eta", format!("{eta} is not in (0, 0.5)")));
        }
        if let DepthPolicy::Random { sigma_alpha } = depth {
            if !(sigma_alpha >= 0.0 && sigma_alpha.is_finite()) {
                return Err(invalid("sigma_alpha", format!("{sigma_alpha} is not >= 0")));
            }
        }
        Ok(SchemeParams {
            m,
            alpha0,
            eta,
            depth,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alpha0(&self) -> u64 {
        self.alpha0
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn depth(&self) -> DepthPolicy {
        self.depth
    }

    pub fn sigma_alpha(&self) -> f64 {
        match self.depth {
            DepthPolicy::Constant => 0.0,
            DepthPolicy::Random { sigma_alpha } => sigma_alpha,
        }
    }

    /// `2^(M+1) - 2`: the sum of all level multipliers over both groups.
    pub fn depth_weight(&self) -> f64 {
        depth_weight(self.m)
    }

    /// Number of reads per SNP under constant depths.
    pub fn constant_total_reads(&self) -> u64 {
        ((1u64 << (self.m + 1)) - 2) * self.alpha0
    }
}

pub(crate) fn depth_weight(m: usize) -> f64 {
    2f64.powi(m as i32 + 1) - 2.0
}

/// Simulation switches that do not change the model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolOptions {
    /// Draw random depths from a moment-matched binomial instead of a
    /// rounded normal.
    pub binomial_depths: bool,
    /// Push every read through the channel instead of drawing binomial
    /// counts. Slow; for cross-checking on small runs.
    pub per_read: bool,
}

/// Unlabeled per-SNP tallies, the only thing the sequencer reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledCounts {
    total_reads: Vec<u64>,
    ones_count: Vec<u64>,
    /// Realized depths under the random policy, `2M` per SNP (unknown
    /// levels then known levels). Diagnostics only.
    realized_depths: Option<Vec<u64>>,
}

impl PooledCounts {
    pub fn new(total_reads: Vec<u64>, ones_count: Vec<u64>) -> Result<Self> {
        if total_reads.len() != ones_count.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} totals vs {} ones counts",
                total_reads.len(),
                ones_count.len()
            )));
        }
        if let Some(n) = (0..total_reads.len()).find(|&n| ones_count[n] > total_reads[n]) {
            return Err(invalid("ones_count", format!("exceeds total reads at SNP {n}")));
        }
        Ok(PooledCounts {
            total_reads,
            ones_count,
            realized_depths: None,
        })
    }

    pub fn num_snps(&self) -> usize {
        self.total_reads.len()
    }

    pub fn total_reads(&self) -> &[u64] {
        &self.total_reads
    }

    pub fn ones_count(&self) -> &[u64] {
        &self.ones_count
    }

    pub fn realized_depths(&self) -> Option<&[u64]> {
        self.realized_depths.as_deref()
    }

    /// Writes `n,t_n,c_n` rows with a header.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,total_reads,ones_count")?;
        for (n, (t, c)) in self.total_reads.iter().zip(&self.ones_count).enumerate() {
            writeln!(out, "{n},{t},{c}")?;
        }
        Ok(())
    }
}

/// Draws the coverage depth of one individual at `level`.
pub fn draw_depth<R: Rng + ?Sized>(
    params: &SchemeParams,
    level: usize,
    binomial_depths: bool,
    rng: &mut R,
) -> Result<u64> {
    if level >= params.m {
        return Err(invalid("level", format!("{level} >= M = {}", params.m)));
    }
    let scale = 1u64 << level;
    let mean = scale * params.alpha0;
    let sigma_alpha = match params.depth {
        DepthPolicy::Random { sigma_alpha } if sigma_alpha > 0.0 => sigma_alpha,
        _ => return Ok(mean),
    };
    let var = scale as f64 * sigma_alpha * sigma_alpha;
    if binomial_depths {
        let mean_f = mean as f64;
        if var >= mean_f {
            return Err(invalid(
                "sigma_alpha",
                format!("binomial depths need variance {var} below the mean {mean_f}"),
            ));
        }
        let p = 1.0 - var / mean_f;
        let trials = (mean_f / p).round() as u64;
        let dist = Binomial::new(trials, p).map_err(|e| invalid("sigma_alpha", e.to_string()))?;
        Ok(dist.sample(rng))
    } else {
        let dist =
            Normal::new(mean as f64, var.sqrt()).map_err(|e| invalid("sigma_alpha", e.to_string()))?;
        Ok(dist.sample(rng).round().max(0.0) as u64)
    }
}

/// Binary symmetric read channel: flips `bit` with probability `eta`.
#[inline]
pub fn read_channel<R: Rng + ?Sized>(bit: u8, eta: f64, rng: &mut R) -> u8 {
    if rng.random_bool(eta) {
        1 - bit
    } else {
        bit
    }
}

fn reads_of_one<R: Rng + ?Sized>(bit: u8, depth: u64, eta: f64, per_read: bool, rng: &mut R) -> u64 {
    if per_read {
        (0..depth).map(|_| u64::from(read_channel(bit, eta, rng))).sum()
    } else {
        let p = if bit == 1 { 1.0 - eta } else { eta };
        Binomial::new(depth, p)
            .expect("eta validated in (0, 0.5)")
            .sample(rng)
    }
}

/// Simulates the pooled sequencing run and returns only the per-SNP tallies.
///
/// Column `n` draws from its own sub-stream of `seed`, so the result is
/// independent of the rayon thread count.
pub fn sequence_pool(
    unknown: &GenotypeMatrix,
    known: &GenotypeMatrix,
    params: &SchemeParams,
    options: PoolOptions,
    seed: u64,
) -> Result<PooledCounts> {
    check_shapes(unknown, known, params)?;
    let m = params.m;
    let random = matches!(params.depth, DepthPolicy::Random { .. });

    let columns: Vec<(u64, u64, Vec<u64>)> = (0..unknown.cols())
        .into_par_iter()
        .map(|n| {
            let mut rng = substream(seed, DOMAIN_POOL, n as u64);
            let mut depths = vec![0u64; 2 * m];
            let mut total = 0u64;
            let mut ones = 0u64;
            for level in 0..m {
                for (slot, matrix) in [(level, unknown), (m + level, known)] {
                    let depth = draw_depth(params, level, options.binomial_depths, &mut rng)?;
                    let bit = matrix.get(level, n);
                    ones += reads_of_one(bit, depth, params.eta, options.per_read, &mut rng);
                    total += depth;
                    depths[slot] = depth;
                }
            }
            Ok((total, ones, depths))
        })
        .collect::<Result<_>>()?;

    let mut total_reads = Vec::with_capacity(columns.len());
    let mut ones_count = Vec::with_capacity(columns.len());
    let mut realized = random.then(|| Vec::with_capacity(columns.len() * 2 * m));
    for (t, c, d) in columns {
        total_reads.push(t);
        ones_count.push(c);
        if let Some(r) = realized.as_mut() {
            r.extend(d);
        }
    }
    Ok(PooledCounts {
        total_reads,
        ones_count,
        realized_depths: realized,
    })
}

pub(crate) fn check_shapes(
    unknown: &GenotypeMatrix,
    known: &GenotypeMatrix,
    params: &SchemeParams,
) -> Result<()> {
    if unknown.rows() != params.m || known.rows() != params.m {
        return Err(Error::DimensionMismatch(format!(
            "expected {} unknown and {} known rows, got {} and {}",
            params.m,
            params.m,
            unknown.rows(),
            known.rows()
        )));
    }
    if unknown.cols() != known.cols() {
        return Err(Error::DimensionMismatch(format!(
            "unknown matrix has {} SNPs, known matrix has {}",
            unknown.cols(),
            known.cols()
        )));
    }
    Ok(())
}

/// Mean of `c_n` under constant depths.
pub fn expected_ones(
    unknown: &GenotypeMatrix,
    known: &GenotypeMatrix,
    params: &SchemeParams,
    col: usize,
) -> f64 {
    let eta = params.eta;
    let a0 = params.alpha0 as f64;
    (0..params.m)
        .map(|level| {
            let depth = 2f64.powi(level as i32) * a0;
            let mean_of = |b: u8| (1.0 - 2.0 * eta) * f64::from(b) + eta;
            depth * (mean_of(unknown.get(level, col)) + mean_of(known.get(level, col)))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: usize, alpha0: u64, eta: f64, depth: DepthPolicy) -> SchemeParams {
        SchemeParams::new(m, alpha0, eta, depth).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SchemeParams::new(0, 1, 0.1, DepthPolicy::Constant).is_err());
        assert!(SchemeParams::new(1, 0, 0.1, DepthPolicy::Constant).is_err());
        assert!(SchemeParams::new(1, 1, 0.0, DepthPolicy::Constant).is_err());
        assert!(SchemeParams::new(1, 1, 0.5, DepthPolicy::Constant).is_err());
        assert!(SchemeParams::new(1, 1, 0.1, DepthPolicy::Random { sigma_alpha: -1.0 }).is_err());
        assert!(SchemeParams::new(41, 1, 0.1, DepthPolicy::Constant).is_err());
    }

    #[test]
    fn constant_depth_is_exact() {
        let p = params(4, 5, 0.1, DepthPolicy::Constant);
        let mut rng = substream(0, 0, 0);
        assert_eq!(draw_depth(&p, 3, false, &mut rng).unwrap(), 40);
        let p = params(4, 5, 0.1, DepthPolicy::Random { sigma_alpha: 0.0 });
        assert_eq!(draw_depth(&p, 3, false, &mut rng).unwrap(), 40);
        assert!(draw_depth(&p, 4, false, &mut rng).is_err());
    }

    fn depth_moments(binomial: bool) -> (f64, f64) {
        let p = params(1, 100, 0.1, DepthPolicy::Random { sigma_alpha: 10.0 });
        let mut rng = substream(21, 0, 0);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| draw_depth(&p, 0, binomial, &mut rng).unwrap() as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        (mean, var.sqrt())
    }

    #[test]
    fn random_depth_moments() {
        let (mean, std) = depth_moments(false);
        assert!((mean - 100.0).abs() <= 0.2, "mean {mean}");
        assert!((std - 10.0).abs() <= 0.5, "std {std}");
    }

    #[test]
    fn binomial_depth_moments() {
        // sigma^2 = 100 is not below the mean 100: infeasible
        let p = params(1, 100, 0.1, DepthPolicy::Random { sigma_alpha: 10.0 });
        assert!(draw_depth(&p, 0, true, &mut substream(0, 0, 0)).is_err());

        let p = params(1, 200, 0.1, DepthPolicy::Random { sigma_alpha: 10.0 });
        let mut rng = substream(22, 0, 0);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| draw_depth(&p, 0, true, &mut rng).unwrap() as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((mean - 200.0).abs() <= 0.2, "mean {mean}");
        assert!((var.sqrt() - 10.0).abs() <= 0.5, "std {}", var.sqrt());
    }

    #[test]
    fn read_channel_flip_rates() {
        let mut rng = substream(1, 0, 0);
        let flips = (0..1_000_000).filter(|_| read_channel(1, 1e-6, &mut rng) == 0).count();
        assert!(flips <= 10, "{flips} flips at eta=1e-6");
        for bit in [0u8, 1] {
            let flips = (0..1_000_000)
                .filter(|_| read_channel(bit, 0.1, &mut rng) != bit)
                .count();
            let frac = flips as f64 / 1e6;
            assert!((frac - 0.1).abs() <= 0.001, "bit {bit}: {frac}");
        }
    }

    #[test]
    fn noiseless_count_identity() {
        let p = params(2, 1, 1e-9, DepthPolicy::Constant);
        let x = GenotypeMatrix::from_rows(2, 1, vec![1, 0]).unwrap();
        let y = GenotypeMatrix::from_rows(2, 1, vec![1, 1]).unwrap();
        let counts = sequence_pool(&x, &y, &p, PoolOptions::default(), 4).unwrap();
        assert_eq!(counts.total_reads(), &[6]);
        assert_eq!(counts.ones_count(), &[4]);
    }

    #[test]
    fn all_zero_pool_reads_ones_only_by_error() {
        let p = params(1, 10_000, 0.1, DepthPolicy::Constant);
        let x = GenotypeMatrix::zeros(1, 1);
        let y = GenotypeMatrix::zeros(1, 1);
        let counts = sequence_pool(&x, &y, &p, PoolOptions::default(), 8).unwrap();
        let frac = counts.ones_count()[0] as f64 / counts.total_reads()[0] as f64;
        assert!((frac - 0.1).abs() <= 0.01, "{frac}");
    }

    #[test]
    fn constant_policy_total_reads() {
        let p = params(5, 3, 0.2, DepthPolicy::Constant);
        let x = GenotypeMatrix::zeros(5, 30).complement();
        let y = GenotypeMatrix::zeros(5, 30);
        let counts = sequence_pool(&x, &y, &p, PoolOptions::default(), 1).unwrap();
        assert!(counts.total_reads().iter().all(|&t| t == 62 * 3));
        assert!(counts.realized_depths().is_none());
        assert!(counts
            .ones_count()
            .iter()
            .zip(counts.total_reads())
            .all(|(c, t)| c <= t));
    }

    #[test]
    fn random_policy_keeps_depths() {
        let p = params(3, 50, 0.1, DepthPolicy::Random { sigma_alpha: 5.0 });
        let x = GenotypeMatrix::zeros(3, 10);
        let counts = sequence_pool(&x, &x, &p, PoolOptions::default(), 2).unwrap();
        let depths = counts.realized_depths().unwrap();
        assert_eq!(depths.len(), 10 * 6);
        for n in 0..10 {
            let sum: u64 = depths[n * 6..(n + 1) * 6].iter().sum();
            assert_eq!(sum, counts.total_reads()[n]);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let p = params(2, 1, 0.1, DepthPolicy::Constant);
        let x = GenotypeMatrix::zeros(2, 3);
        let y = GenotypeMatrix::zeros(2, 4);
        assert!(sequence_pool(&x, &y, &p, PoolOptions::default(), 0).is_err());
        let y = GenotypeMatrix::zeros(3, 3);
        assert!(sequence_pool(&x, &y, &p, PoolOptions::default(), 0).is_err());
    }

    #[test]
    fn counts_constructor_checks_bounds() {
        assert!(PooledCounts::new(vec![3], vec![4]).is_err());
        assert!(PooledCounts::new(vec![3, 1], vec![1]).is_err());
        assert!(PooledCounts::new(vec![3], vec![3]).is_ok());
    }

    #[test]
    fn counts_csv_layout() {
        let c = PooledCounts::new(vec![6, 6], vec![4, 0]).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,total_reads,ones_count\n0,6,4\n1,6,0\n");
    }
}
