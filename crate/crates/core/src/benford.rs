//! Benford probabilities and the sample statistics measured against them.

use serde::{Deserialize, Serialize};

use crate::digits::{DigitCounts, DigitSystem};
use crate::error::{Error, Result};

/// Benford probabilities `b_i = log10(1 + 1/d_i)` for each digit label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenfordProbs {
    pub system: DigitSystem,
    pub b: Vec<f64>,
}

impl BenfordProbs {
    pub fn k(&self) -> usize {
        self.b.len()
    }

    pub fn min(&self) -> f64 {
        // Strictly decreasing, so the last cell is the smallest.
        *self.b.last().expect("nonempty probability vector")
    }
}

/// Observed digit proportions `p_i = count_i / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proportions {
    pub system: DigitSystem,
    pub p: Vec<f64>,
    pub n: u64,
}

impl Proportions {
    /// Deviations `e_i = p_i - b_i`.
    pub fn deviations(&self, b: &BenfordProbs) -> Result<Vec<f64>> {
        check_dims(self.p.len(), b)?;
        Ok(self.p.iter().zip(&b.b).map(|(p, b)| p - b).collect())
    }
}

pub fn benford_probs(system: DigitSystem) -> BenfordProbs {
    let b = system.labels().map(|d| (1.0 + 1.0 / d as f64).log10()).collect();
    BenfordProbs { system, b }
}

pub fn proportions(counts: &DigitCounts) -> Result<Proportions> {
    if counts.n == 0 {
        return Err(Error::EmptySample);
    }
    let n = counts.n as f64;
    Ok(Proportions {
        system: counts.system,
        p: counts.counts.iter().map(|&c| c as f64 / n).collect(),
        n: counts.n,
    })
}

fn check_dims(len: usize, b: &BenfordProbs) -> Result<()> {
    if len != b.k() {
        return Err(Error::DimensionMismatch { expected: b.k(), found: len });
    }
    Ok(())
}

/// Nigrini's mean absolute deviation `(1/k) Σ |p_i - b_i|`.
pub fn mad(p: &Proportions, b: &BenfordProbs) -> Result<f64> {
    let e = p.deviations(b)?;
    Ok(e.iter().map(|e| e.abs()).sum::<f64>() / b.k() as f64)
}

/// Pearson distance `n Σ (p_i - b_i)² / b_i`.
///
/// Evaluated at the sample this is both Pearson's chi-square statistic and
/// the chi-square noncentrality `ψ`.
pub fn psi(p: &Proportions, b: &BenfordProbs, n: u64) -> Result<f64> {
    let e = p.deviations(b)?;
    let sum: f64 = e.iter().zip(&b.b).map(|(e, b)| e * e / b).sum();
    Ok(n as f64 * sum)
}

/// Pearson's chi-square goodness-of-fit statistic for `counts`.
pub fn chi_square_stat(counts: &DigitCounts, b: &BenfordProbs) -> Result<f64> {
    check_dims(counts.counts.len(), b)?;
    let p = proportions(counts)?;
    psi(&p, b, counts.n)
}
