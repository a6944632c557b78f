//! Simulation and analysis of structured private pooled DNA sequencing.
//!
//! `M` unknown individuals are pooled with `M` known ones; level `m` of
//! each group is read at coverage `2^m * alpha0`. The sequencer sees only
//! per-SNP allele tallies, while the trusted collector subtracts the known
//! contribution and decodes the unknown column as an integer in
//! `[0, 2^M)`.
//!
//! - [`model`]: priors and genotype sampling
//! - [`pool`]: depths, read errors, unlabeled tallies
//! - [`collector`]: observation model and lattice decoding
//! - [`leakage`]: exact mutual information leaked to the sequencer
//! - [`bounds`]: sufficient depth and level-count conditions
//! - [`experiment`]: seeded end-to-end runs

pub mod bounds;
pub mod collector;
pub mod error;
pub mod experiment;
pub mod leakage;
pub mod model;
pub mod pool;
pub mod rng;

pub use bounds::{
    bounds_report, min_alpha0_constant, min_alpha0_random, min_m, predict_error_bound,
    BoundsInput, BoundsReport, MinDepth,
};
pub use collector::{
    aggregate, column_error_rate, decode, decode_constant, decode_random, noise_model,
    DecodeResult, NoiseModel, Observation,
};
pub use error::{Error, Result};
pub use experiment::{simulate, simulate_with, RunSummary, Simulation};
pub use leakage::{
    carry_bit_entropy, exact_leakage, integer_sum_pmf, leakage_curve, IntegerSumPmf,
    LeakageReport, PriorSpec,
};
pub use model::{build_population, sample_known, sample_unknown, FreqSpec, GenotypeMatrix, PopulationModel};
pub use pool::{draw_depth, read_channel, sequence_pool, DepthPolicy, PoolOptions, PooledCounts, SchemeParams};
