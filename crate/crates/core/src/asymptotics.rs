//! Null-distribution constants of the MAD.
//!
//! Under conformity, `√n D⁻¹|e|` converges to a normal vector with mean
//! `√(2/π)·1` and correlation-type matrix `R`, where
//! `D = diag(√(b_j(1 - b_j)))` and
//!
//! ```text
//! r_ij = (2/π)(ρ_ij·asin(ρ_ij) + √(1 - ρ_ij²)) - 2/π
//! ρ_ij = -√(b_i b_j / ((1 - b_i)(1 - b_j)))      (i ≠ j)
//! ```
//!
//! Hence `√n·MAD` is asymptotically normal with mean `√(2/(πk²))·1′D1` and
//! variance `1′DRD1 / k²`. The diagonal uses `ρ_ii = 1`, which makes
//! `r_ii = 1 - 2/π`, the variance of a folded standard normal.

use std::f64::consts::{FRAC_2_PI, PI};
use std::io::Write;
use std::sync::OnceLock;

use serde::Serialize;

use crate::benford::{benford_probs, BenfordProbs};
use crate::digits::DigitSystem;
use crate::error::{domain, Result};

/// Slack allowed on `|ρ| ≤ 1` before [`r_entry`] reports a domain error.
const RHO_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticConstants {
    pub system: DigitSystem,
    /// Diagonal of `D`.
    pub d_vec: Vec<f64>,
    /// `R`, dense and row-major.
    r: Vec<f64>,
    /// `1′D1`
    pub sum_d: f64,
    /// `1′DRD1`
    pub quad_form: f64,
}

impl AsymptoticConstants {
    pub fn k(&self) -> usize {
        self.d_vec.len()
    }

    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.k() + j]
    }

    pub fn r_row(&self, i: usize) -> &[f64] {
        let k = self.k();
        &self.r[i * k..(i + 1) * k]
    }

    /// Writes `D` (as one column) and `R` as CSV, for inspection.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["digit".to_string(), "d".to_string()];
        header.extend(self.system.labels().map(|l| format!("r_{l}")));
        w.write_record(&header)?;
        for i in 0..self.k() {
            let mut row = vec![self.system.label_at(i).to_string(), self.d_vec[i].to_string()];
            row.extend(self.r_row(i).iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Asymptotic correlation of `e_i` and `e_j`; exactly 1 on the diagonal.
pub fn rho(b: &BenfordProbs, i: usize, j: usize) -> Result<f64> {
    let k = b.k();
    if i >= k || j >= k {
        return domain(format!("digit index ({i}, {j}) out of range for k = {k}"));
    }
    if i == j {
        return Ok(1.0);
    }
    let (bi, bj) = (b.b[i], b.b[j]);
    Ok(-(bi * bj / ((1.0 - bi) * (1.0 - bj))).sqrt())
}

/// Correlation of `|Z_i|` and `|Z_j|` for standard normals with correlation
/// `rho`, scaled by the folded-normal variance convention used in `R`.
pub fn r_entry(rho: f64) -> Result<f64> {
    if !(rho.abs() <= 1.0 + RHO_SLACK) {
        return domain(format!("correlation {rho} outside [-1, 1]"));
    }
    let rho = rho.clamp(-1.0, 1.0);
    Ok(FRAC_2_PI * (rho * rho.asin() + (1.0 - rho * rho).sqrt()) - FRAC_2_PI)
}

pub fn build_constants(system: DigitSystem) -> AsymptoticConstants {
    let b = benford_probs(system);
    let k = b.k();
    let d_vec: Vec<f64> = b.b.iter().map(|b| (b * (1.0 - b)).sqrt()).collect();

    let mut r = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let rij = rho(&b, i, j).and_then(r_entry).expect("indices and correlations in range");
            r[i * k + j] = rij;
            r[j * k + i] = rij;
        }
    }

    let sum_d = d_vec.iter().sum();
    let mut quad_form = 0.0;
    for i in 0..k {
        for j in 0..k {
            quad_form += d_vec[i] * r[i * k + j] * d_vec[j];
        }
    }

    AsymptoticConstants { system, d_vec, r, sum_d, quad_form }
}

/// Cached constants for `system`.
pub fn constants(system: DigitSystem) -> &'static AsymptoticConstants {
    static FIRST: OnceLock<AsymptoticConstants> = OnceLock::new();
    static FIRST_TWO: OnceLock<AsymptoticConstants> = OnceLock::new();
    let cell = match system {
        DigitSystem::FirstDigit => &FIRST,
        DigitSystem::FirstTwoDigits => &FIRST_TWO,
    };
    cell.get_or_init(|| build_constants(system))
}

/// Approximate null mean and standard deviation of the MAD at sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MadMoments {
    pub mean: f64,
    pub sd: f64,
}

pub fn mad_moments(system: DigitSystem, n: u64) -> MadMoments {
    let c = constants(system);
    let k = system.k() as f64;
    let n = n as f64;
    MadMoments {
        mean: (2.0 / (PI * n * k * k)).sqrt() * c.sum_d,
        sd: (c.quad_form / (n * k * k)).sqrt(),
    }
}
