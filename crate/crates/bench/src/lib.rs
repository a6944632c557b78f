//! Shared fixtures for the criterion benches.

use privseq_core::{build_population, DepthPolicy, FreqSpec, PopulationModel, SchemeParams};

pub fn population(num_snps: usize) -> PopulationModel {
    build_population(num_snps, &FreqSpec::Uniform(0.5)).expect("valid population")
}

pub fn constant_params(m: usize, alpha0: u64) -> SchemeParams {
    SchemeParams::new(m, alpha0, 0.1, DepthPolicy::Constant).expect("valid params")
}

pub fn random_params(m: usize, alpha0: u64, sigma_alpha: f64) -> SchemeParams {
    SchemeParams::new(m, alpha0, 0.1, DepthPolicy::Random { sigma_alpha }).expect("valid params")
}
