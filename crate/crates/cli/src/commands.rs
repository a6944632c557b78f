use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use privseq_core::bounds::random_depth_terms;
use privseq_core::leakage::{summarize, LeakagePoint, MAX_CARRY_LEVELS};
use privseq_core::model::parse_frequency_list;
use privseq_core::{
    bounds_report, build_population, exact_leakage, leakage_curve, min_alpha0_constant,
    min_alpha0_random, noise_model, predict_error_bound, simulate, BoundsInput, DepthPolicy,
    FreqSpec, LeakageReport, MinDepth, PoolOptions, PriorSpec, SchemeParams,
};

use crate::args::{Alpha0Arg, BoundsArgs, Depth, Format, LeakageArgs, SimulateArgs, SweepArgs};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest number of cells a sweep may evaluate.
pub const MAX_SWEEP_CELLS: usize = 10_000;

/// Text produced by a command: the artifact (written to `--out` or
/// stdout) and an optional run summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub artifact: String,
    pub summary: Option<String>,
}

fn effective_m(m: usize, diploid: bool) -> usize {
    if diploid {
        2 * m
    } else {
        m
    }
}

/// Sorted-key JSON, so summaries diff cleanly.
fn stable_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

/// `# privseq <version>` and `# config <json>` lines that head every CSV.
fn csv_preamble<T: Serialize>(config: &T) -> Result<String> {
    let v = serde_json::to_value(config)?;
    Ok(format!("# privseq {VERSION}\n# config {}\n", serde_json::to_string(&v)?))
}

pub fn bounds(args: &BoundsArgs) -> Result<Rendered> {
    let m = args.m.map(|m| effective_m(m, args.diploid));
    if m.is_none() && args.beta.is_none() {
        bail!("either --m or --beta is required");
    }
    let mut report = bounds_report(BoundsInput {
        eta: args.eta,
        eps: args.eps,
        beta: args.beta,
        m,
        sigma_alpha: args.sigma_alpha,
    })?;
    if args.diploid && args.m.is_none() {
        // M_min counts haplotypes; a diploid individual carries two
        let haplotypes = report.m_min.unwrap_or(1) as usize;
        let m = haplotypes.div_ceil(2) * 2;
        report = bounds_report(BoundsInput {
            m: Some(m),
            ..report.input
        })?;
    }
    let artifact = match args.format {
        Format::Json => stable_json(&json!({
            "version": VERSION,
            "diploid": args.diploid,
            "m_user": args.m,
            "report": report,
        }))?,
        Format::Table | Format::Csv => {
            let mut s = report.to_string();
            if args.diploid {
                writeln!(s, "{:<22}yes (M counts haplotypes)", "diploid")?;
            }
            s
        }
    };
    Ok(Rendered {
        artifact,
        summary: None,
    })
}

#[derive(Debug, Serialize)]
struct SimulateConfig {
    version: &'static str,
    seed: u64,
    m: usize,
    m_effective: usize,
    diploid: bool,
    alpha0: u64,
    alpha0_auto: bool,
    eta: f64,
    eps: f64,
    depth: Depth,
    sigma_alpha: f64,
    snps: usize,
    prior: Option<f64>,
    freq_file: Option<String>,
    binomial_depths: bool,
    per_read: bool,
}

fn resolve_policy(depth: Depth, sigma_alpha: f64) -> Result<DepthPolicy> {
    match depth {
        Depth::Constant if sigma_alpha > 0.0 => {
            bail!("--sigma-alpha needs --depth random")
        }
        Depth::Constant => Ok(DepthPolicy::Constant),
        Depth::Random => Ok(DepthPolicy::Random { sigma_alpha }),
    }
}

fn exact_alpha0(depth: MinDepth) -> Result<u64> {
    depth
        .exact()
        .with_context(|| format!("required alpha0 {depth} is too large to simulate"))
}

/// The bounds-derived base depth for a policy.
pub fn auto_alpha0(m: usize, eta: f64, eps: f64, policy: DepthPolicy) -> Result<MinDepth> {
    Ok(match policy {
        DepthPolicy::Constant => min_alpha0_constant(m, eta, eps)?,
        DepthPolicy::Random { sigma_alpha } => min_alpha0_random(m, eta, eps, sigma_alpha)?,
    })
}

fn read_freq_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading frequency file {}", path.display()))?;
    Ok(parse_frequency_list(&text)?)
}

pub fn simulate_cmd(args: &SimulateArgs) -> Result<Rendered> {
    let m = effective_m(args.m, args.diploid);
    let policy = resolve_policy(args.depth, args.sigma_alpha)?;
    let alpha0 = match args.alpha0 {
        Alpha0Arg::Fixed(v) => v,
        Alpha0Arg::Auto => exact_alpha0(auto_alpha0(m, args.eta, args.eps, policy)?)?,
    };
    let params = SchemeParams::new(m, alpha0, args.eta, policy)?;

    let pop_args = &args.population;
    let (pop, prior) = match &pop_args.freq_file {
        Some(path) => {
            let freqs = read_freq_file(path)?;
            (build_population(freqs.len(), &FreqSpec::PerSnp(freqs))?, None)
        }
        None => (
            build_population(pop_args.snps, &FreqSpec::Uniform(pop_args.prior))?,
            Some(pop_args.prior),
        ),
    };
    let options = PoolOptions {
        binomial_depths: pop_args.binomial_depths,
        per_read: args.per_read,
    };
    let config = SimulateConfig {
        version: VERSION,
        seed: pop_args.seed,
        m: args.m,
        m_effective: m,
        diploid: args.diploid,
        alpha0,
        alpha0_auto: matches!(args.alpha0, Alpha0Arg::Auto),
        eta: args.eta,
        eps: args.eps,
        depth: args.depth,
        sigma_alpha: args.sigma_alpha,
        snps: pop.num_snps(),
        prior,
        freq_file: pop_args.freq_file.as_ref().map(|p| p.display().to_string()),
        binomial_depths: options.binomial_depths,
        per_read: options.per_read,
    };

    let sim = simulate(&pop, &params, options, pop_args.seed)?;
    let mut csv = csv_preamble(&config)?.into_bytes();
    sim.write_csv(&mut csv)?;

    let s = &sim.summary;
    let summary = match args.format {
        Format::Json | Format::Csv => stable_json(&json!({
            "config": config,
            "num_snps": s.num_snps,
            "error_rate": s.error_rate,
            "std_error": s.std_error,
            "error_bound": s.error_bound,
            "meets_eps": s.error_rate <= args.eps,
            "noise": s.noise,
        }))?,
        Format::Table => {
            let mut t = String::new();
            writeln!(t, "{:<14}{}", "seed", pop_args.seed)?;
            writeln!(t, "{:<14}{} (effective {m})", "M", args.m)?;
            writeln!(t, "{:<14}{alpha0}", "alpha0")?;
            writeln!(t, "{:<14}{}", "snps", s.num_snps)?;
            writeln!(t, "{:<14}{:.6} (se {:.6})", "error rate", s.error_rate, s.std_error)?;
            writeln!(t, "{:<14}{:.6}", "bound", s.error_bound)?;
            writeln!(t, "{:<14}{}", "eps", args.eps)?;
            t
        }
    };
    Ok(Rendered {
        artifact: String::from_utf8(csv)?,
        summary: Some(summary),
    })
}

/// Leakage averaged over SNPs with the given frequencies; each distinct
/// frequency is evaluated once.
pub fn averaged_leakage_curve(m_max: usize, freqs: &[f64]) -> Result<LeakageReport> {
    if m_max == 0 || m_max > MAX_CARRY_LEVELS {
        bail!("--m-max must be in [1, {MAX_CARRY_LEVELS}], got {m_max}");
    }
    let mut weights: BTreeMap<u64, usize> = BTreeMap::new();
    for f in freqs {
        *weights.entry(f.to_bits()).or_default() += 1;
    }
    let total = freqs.len() as f64;
    let mut points = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let mut i_bits = 0.0;
        for (&bits, &count) in &weights {
            i_bits += count as f64 / total * exact_leakage(&vec![f64::from_bits(bits); m])?;
        }
        points.push(LeakagePoint {
            m,
            i_bits,
            per_bit: i_bits / m as f64,
        });
    }
    Ok(summarize(points))
}

pub fn leakage(args: &LeakageArgs) -> Result<Rendered> {
    if args.m_max == 0 || args.m_max > MAX_CARRY_LEVELS {
        bail!("--m-max must be in [1, {MAX_CARRY_LEVELS}], got {}", args.m_max);
    }
    let report = match &args.freq_file {
        Some(path) => averaged_leakage_curve(args.m_max, &read_freq_file(path)?)?,
        None => leakage_curve(args.m_max, &PriorSpec::Constant(args.prior))?,
    };
    let config = json!({
        "version": VERSION,
        "m_max": args.m_max,
        "prior": args.freq_file.is_none().then_some(args.prior),
        "freq_file": args.freq_file.as_ref().map(|p| p.display().to_string()),
    });
    let artifact = match args.format {
        Format::Csv => {
            let mut out = csv_preamble(&config)?;
            writeln!(out, "# bound_ok {} monotone_ok {}", report.bound_ok, report.monotone_ok)?;
            let mut body = Vec::new();
            report.write_csv(&mut body)?;
            out + &String::from_utf8(body)?
        }
        Format::Json => stable_json(&json!({ "config": config, "report": report }))?,
        Format::Table => {
            let mut t = format!("{:>4} {:>12} {:>12}\n", "M", "I (bits)", "I/M");
            for p in &report.points {
                writeln!(t, "{:>4} {:>12.8} {:>12.8}", p.m, p.i_bits, p.per_bit)?;
            }
            writeln!(t, "bound_ok={} monotone_ok={}", report.bound_ok, report.monotone_ok)?;
            t
        }
    };
    Ok(Rendered {
        artifact,
        summary: None,
    })
}

/// One grid cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub m: usize,
    pub eta: f64,
    pub eps: f64,
    pub sigma_alpha: f64,
}

/// Cartesian product in `m`, `eta`, `eps`, `sigma_alpha` order.
pub fn sweep_grid(m: &[usize], eta: &[f64], eps: &[f64], sigma: &[f64]) -> Result<Vec<SweepCell>> {
    let size = m.len() * eta.len() * eps.len() * sigma.len();
    if size == 0 {
        bail!("the sweep grid is empty");
    }
    if size > MAX_SWEEP_CELLS {
        bail!("the sweep grid has {size} cells, more than {MAX_SWEEP_CELLS}");
    }
    let mut cells = Vec::with_capacity(size);
    for &m in m {
        for &eta in eta {
            for &eps in eps {
                for &sigma_alpha in sigma {
                    cells.push(SweepCell {
                        m,
                        eta,
                        eps,
                        sigma_alpha,
                    });
                }
            }
        }
    }
    Ok(cells)
}

pub fn sweep(args: &SweepArgs) -> Result<Rendered> {
    let cells = sweep_grid(&args.m, &args.eta, &args.eps, &args.sigma_alpha)?;
    let config = json!({
        "version": VERSION,
        "seed": args.seed,
        "m": args.m,
        "eta": args.eta,
        "eps": args.eps,
        "sigma_alpha": args.sigma_alpha,
        "depth": args.depth,
        "diploid": args.diploid,
        "mc_trials": args.mc_trials,
        "binomial_depths": args.binomial_depths,
    });
    let mc = args.mc_trials > 0;
    let mut out = csv_preamble(&config)?;
    out.push_str(
        "m,m_effective,eta,eps,sigma_alpha,alpha0_constant,e1,e2,alpha0_random,alpha0,noise_var,error_bound",
    );
    out.push_str(if mc { ",mc_snps,mc_error,mc_std_error\n" } else { "\n" });

    for (idx, cell) in cells.iter().enumerate() {
        let m = effective_m(cell.m, args.diploid);
        let constant = min_alpha0_constant(m, cell.eta, cell.eps)?;
        let terms = random_depth_terms(m, cell.eta, cell.eps, cell.sigma_alpha)?;
        let random = min_alpha0_random(m, cell.eta, cell.eps, cell.sigma_alpha)?;
        let policy = match args.depth {
            Depth::Constant => DepthPolicy::Constant,
            Depth::Random => DepthPolicy::Random {
                sigma_alpha: cell.sigma_alpha,
            },
        };
        let alpha0 = match policy {
            DepthPolicy::Constant => constant,
            DepthPolicy::Random { .. } => random,
        };
        let params = alpha0
            .exact()
            .map(|a0| SchemeParams::new(m, a0, cell.eta, policy))
            .transpose()?;
        let (noise_var, bound) = match &params {
            Some(p) => {
                let nm = noise_model(p);
                (nm.total_var.to_string(), predict_error_bound(&nm).to_string())
            }
            None => (String::new(), String::new()),
        };
        write!(
            out,
            "{},{m},{},{},{},{constant},{},{},{random},{alpha0},{noise_var},{bound}",
            cell.m, cell.eta, cell.eps, cell.sigma_alpha, terms.e1, terms.e2
        )?;
        if mc {
            match &params {
                Some(p) => {
                    let pop = build_population(args.mc_trials, &FreqSpec::Uniform(0.5))?;
                    let options = PoolOptions {
                        binomial_depths: args.binomial_depths,
                        per_read: false,
                    };
                    let sim = simulate(&pop, p, options, args.seed.wrapping_add(idx as u64))?;
                    let s = sim.summary;
                    write!(out, ",{},{},{}", s.num_snps, s.error_rate, s.std_error)?;
                }
                None => out.push_str(",,,"),
            }
        }
        out.push('\n');
    }
    Ok(Rendered {
        artifact: out,
        summary: None,
    })
}
