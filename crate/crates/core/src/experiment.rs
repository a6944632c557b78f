//! One seeded end-to-end run: sample, pool, aggregate, decode, score.

use serde::{Deserialize, Serialize};

use crate::bounds::predict_error_bound;
use crate::collector::{aggregate, decode, noise_model, DecodeResult, NoiseModel, Observation};
use crate::error::Result;
use crate::model::{sample_known, sample_unknown, GenotypeMatrix, PopulationModel};
use crate::pool::{sequence_pool, PoolOptions, PooledCounts, SchemeParams};
use crate::rng::{substream, DOMAIN_KNOWN, DOMAIN_UNKNOWN};

#[derive(Debug, Clone)]
pub struct Simulation {
    pub unknown: GenotypeMatrix,
    pub known: GenotypeMatrix,
    pub counts: PooledCounts,
    pub observation: Observation,
    pub decoded: DecodeResult,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub num_snps: usize,
    pub error_rate: f64,
    /// Binomial standard error of `error_rate`.
    pub std_error: f64,
    pub error_bound: f64,
    pub noise: NoiseModel,
}

/// Runs the full pipeline. Identical inputs give identical outputs
/// regardless of the rayon thread count.
pub fn simulate(
    pop: &PopulationModel,
    params: &SchemeParams,
    options: PoolOptions,
    seed: u64,
) -> Result<Simulation> {
    let m = params.m();
    let unknown = sample_unknown(pop, m, &mut substream(seed, DOMAIN_UNKNOWN, 0))?;
    let known = sample_known(pop.num_snps(), m, &mut substream(seed, DOMAIN_KNOWN, 0))?;
    simulate_with(unknown, known, params, options, seed)
}

/// Runs the pipeline on given genotype matrices.
pub fn simulate_with(
    unknown: GenotypeMatrix,
    known: GenotypeMatrix,
    params: &SchemeParams,
    options: PoolOptions,
    seed: u64,
) -> Result<Simulation> {
    let counts = sequence_pool(&unknown, &known, params, options, seed)?;
    let observation = aggregate(&counts, &known, params)?;
    let decoded = decode(&observation, &known)?.score(&unknown)?;
    let noise = noise_model(params);
    let error_rate = decoded.error_rate.unwrap_or(0.0);
    let n = unknown.cols() as f64;
    let summary = RunSummary {
        num_snps: unknown.cols(),
        error_rate,
        std_error: (error_rate * (1.0 - error_rate) / n).sqrt(),
        error_bound: predict_error_bound(&noise),
        noise,
    };
    Ok(Simulation {
        unknown,
        known,
        counts,
        observation,
        decoded,
        summary,
    })
}

impl Simulation {
    /// Per-SNP CSV: `n,total_reads,ones_count,g,s_true,s_decoded,error_flag`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,total_reads,ones_count,g,s_true,s_decoded,error_flag")?;
        let errors = self.decoded.column_errors.as_deref().unwrap_or(&[]);
        for n in 0..self.unknown.cols() {
            writeln!(
                out,
                "{n},{},{},{},{},{},{}",
                self.counts.total_reads()[n],
                self.counts.ones_count()[n],
                self.observation.g()[n],
                self.unknown.column_value(n),
                self.decoded.decoded(n),
                u8::from(errors.get(n).copied().unwrap_or(false)),
            )?;
        }
        Ok(())
    }
}
