//! Population priors and genotype sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, invalid, Error, Result};

/// Per-SNP prior that an unknown individual carries allele `1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationModel {
    major_freq: Vec<f64>,
}

/// How the per-SNP frequencies are supplied.
#[derive(Debug, Clone, PartialEq)]
pub enum FreqSpec {
    /// One probability broadcast to every SNP.
    Uniform(f64),
    /// One probability per SNP.
    PerSnp(Vec<f64>),
}

impl Default for FreqSpec {
    fn default() -> Self {
        FreqSpec::Uniform(0.5)
    }
}

impl PopulationModel {
    pub fn num_snps(&self) -> usize {
        self.major_freq.len()
    }

    pub fn major_freq(&self) -> &[f64] {
        &self.major_freq
    }
}

pub fn build_population(num_snps: usize, spec: &FreqSpec) -> Result<PopulationModel> {
    if num_snps == 0 {
        return Err(invalid("num_snps", "must be at least 1"));
    }
    let major_freq = match spec {
        FreqSpec::Uniform(p) => {
            check_probability("freq", *p)?;
            vec![*p; num_snps]
        }
        FreqSpec::PerSnp(freqs) => {
            if freqs.len() != num_snps {
                return Err(Error::DimensionMismatch(format!(
                    "{} frequencies supplied for {num_snps} SNPs",
                    freqs.len()
                )));
            }
            for &p in freqs {
                check_probability("freq", p)?;
            }
            freqs.clone()
        }
    };
    Ok(PopulationModel { major_freq })
}

/// Parses a frequency list: one decimal probability per line.
///
/// Blank lines are skipped. Line numbers in errors are 1-based.
pub fn parse_frequency_list(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let p: f64 = line.parse().map_err(|_| Error::FrequencyFile {
            line: i + 1,
            reason: format!("`{line}` is not a number"),
        })?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::FrequencyFile {
                line: i + 1,
                reason: format!("{p} is outside [0, 1]"),
            });
        }
        out.push(p);
    }
    if out.is_empty() {
        return Err(Error::FrequencyFile {
            line: 0,
            reason: "no frequencies found".into(),
        });
    }
    Ok(out)
}

/// Dense binary matrix, rows are individuals and columns are SNPs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenotypeMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl GenotypeMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        GenotypeMatrix {
            rows,
            cols,
            bits: vec![0; rows * cols],
        }
    }

    /// Builds a matrix from row-major bits.
    pub fn from_rows(rows: usize, cols: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} bits for a {rows}x{cols} matrix",
                bits.len()
            )));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(invalid("bits", format!("entry {b} is not binary")));
        }
        Ok(GenotypeMatrix { rows, cols, bits })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.bits[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, bit: u8) {
        debug_assert!(bit <= 1);
        self.bits[row * self.cols + col] = bit;
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = u8> + '_ {
        (0..self.rows).map(move |r| self.get(r, col))
    }

    /// Column read as a binary number with row `m` as bit `m`.
    pub fn column_value(&self, col: usize) -> u64 {
        self.column(col)
            .enumerate()
            .fold(0u64, |acc, (m, b)| acc | (u64::from(b) << m))
    }

    /// Writes the binary digits of `value` into column `col`.
    pub fn set_column_value(&mut self, col: usize, value: u64) {
        for m in 0..self.rows {
            self.set(m, col, ((value >> m) & 1) as u8);
        }
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.bits[row * self.cols..(row + 1) * self.cols]
    }

    /// Bitwise complement.
    pub fn complement(&self) -> Self {
        GenotypeMatrix {
            rows: self.rows,
            cols: self.cols,
            bits: self.bits.iter().map(|b| 1 - b).collect(),
        }
    }
}

/// Samples the `M x N` unknown matrix with independent Bernoulli(f_n) entries.
pub fn sample_unknown<R: Rng + ?Sized>(
    pop: &PopulationModel,
    m: usize,
    rng: &mut R,
) -> Result<GenotypeMatrix> {
    if m == 0 {
        return Err(invalid("M", "must be at least 1"));
    }
    let n = pop.num_snps();
    let mut bits = Vec::with_capacity(m * n);
    for _ in 0..m {
        bits.extend(pop.major_freq.iter().map(|&f| u8::from(rng.random_bool(f))));
    }
    Ok(GenotypeMatrix { rows: m, cols: n, bits })
}

/// Samples the `K x N` known matrix with fair-coin entries.
pub fn sample_known<R: Rng + ?Sized>(
    num_snps: usize,
    k: usize,
    rng: &mut R,
) -> Result<GenotypeMatrix> {
    if num_snps == 0 {
        return Err(invalid("num_snps", "must be at least 1"));
    }
    if k == 0 {
        return Err(invalid("K", "must be at least 1"));
    }
    let bits = (0..k * num_snps).map(|_| u8::from(rng.random::<bool>())).collect();
    Ok(GenotypeMatrix {
        rows: k,
        cols: num_snps,
        bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn uniform_prior_broadcasts() {
        let pop = build_population(4, &FreqSpec::Uniform(0.5)).unwrap();
        assert_eq!(pop.major_freq(), &[0.5; 4]);
    }

    #[test]
    fn explicit_prior_passes_through() {
        let pop = build_population(2, &FreqSpec::PerSnp(vec![0.9, 0.7])).unwrap();
        assert_eq!(pop.major_freq(), &[0.9, 0.7]);
    }

    #[test]
    fn rejects_bad_population() {
        assert!(build_population(3, &FreqSpec::Uniform(1.2)).is_err());
        assert!(build_population(0, &FreqSpec::Uniform(0.5)).is_err());
        assert!(build_population(2, &FreqSpec::PerSnp(vec![0.1, -0.1])).is_err());
        assert!(matches!(
            build_population(3, &FreqSpec::PerSnp(vec![0.1])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn degenerate_priors() {
        let mut rng = substream(11, 0, 0);
        let ones = build_population(5, &FreqSpec::Uniform(1.0)).unwrap();
        let x = sample_unknown(&ones, 3, &mut rng).unwrap();
        assert!(x.bits.iter().all(|&b| b == 1));
        let zeros = build_population(5, &FreqSpec::Uniform(0.0)).unwrap();
        let x = sample_unknown(&zeros, 3, &mut rng).unwrap();
        assert!(x.bits.iter().all(|&b| b == 0));
    }

    #[test]
    fn unknown_rows_have_the_prior_mean() {
        let n = 100_000;
        let pop = build_population(n, &FreqSpec::Uniform(0.5)).unwrap();
        let x = sample_unknown(&pop, 2, &mut substream(3, 0, 0)).unwrap();
        for r in 0..2 {
            let mean = x.row(r).iter().map(|&b| f64::from(b)).sum::<f64>() / n as f64;
            assert!((mean - 0.5).abs() <= 0.01, "row {r} mean {mean}");
        }
    }

    #[test]
    fn unknown_rows_are_uncorrelated() {
        let n = 100_000;
        let pop = build_population(n, &FreqSpec::Uniform(0.5)).unwrap();
        let x = sample_unknown(&pop, 3, &mut substream(5, 0, 0)).unwrap();
        for a in 0..3 {
            for b in (a + 1)..3 {
                let corr = pearson(x.row(a), x.row(b));
                assert!(corr.abs() <= 0.02, "rows {a},{b}: {corr}");
            }
        }
    }

    fn pearson(a: &[u8], b: &[u8]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        let mb = b.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (&x, &y) in a.iter().zip(b) {
            let (dx, dy) = (f64::from(x) - ma, f64::from(y) - mb);
            sab += dx * dy;
            saa += dx * dx;
            sbb += dy * dy;
        }
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn known_matrix_is_fair_and_reproducible() {
        let y = sample_known(100_000, 1, &mut substream(9, 0, 0)).unwrap();
        let mean = y.row(0).iter().map(|&b| f64::from(b)).sum::<f64>() / 1e5;
        assert!((mean - 0.5).abs() <= 0.01);

        let small = sample_known(1, 4, &mut substream(9, 0, 1)).unwrap();
        assert_eq!((small.rows(), small.cols()), (4, 1));
        assert!(small.bits.iter().all(|&b| b <= 1));

        let again = sample_known(100_000, 1, &mut substream(9, 0, 0)).unwrap();
        assert_eq!(y, again);
    }

    #[test]
    fn column_value_round_trips() {
        let mut g = GenotypeMatrix::zeros(4, 2);
        g.set_column_value(1, 0b1011);
        assert_eq!(g.column(1).collect::<Vec<_>>(), vec![1, 1, 0, 1]);
        assert_eq!(g.column_value(1), 11);
        assert_eq!(g.column_value(0), 0);
    }

    #[test]
    fn frequency_list_parsing() {
        assert_eq!(parse_frequency_list("0.9\n0.7\n\n").unwrap(), vec![0.9, 0.7]);
        assert!(matches!(
            parse_frequency_list("0.2\nabc\n"),
            Err(Error::FrequencyFile { line: 2, .. })
        ));
        assert!(parse_frequency_list("1.5").is_err());
        assert!(parse_frequency_list("").is_err());
    }
}
