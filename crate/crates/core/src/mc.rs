//! Monte Carlo checks of the asymptotic null distribution.
//!
//! Each replication draws one multinomial sample of size `n` from the
//! exact Benford probabilities and records the MAD, the standardized
//! excess `δ̃`, and the per-digit folded deviations `√n|e_i| / d_i`.
//!
//! Replication `r` always uses the ChaCha8 stream `r` of the generator
//! seeded with `seed`, so results do not depend on how replications are
//! spread over threads.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{constants, mad_moments};
use crate::benford::{benford_probs, mad, proportions};
use crate::digits::{DigitCounts, DigitSystem};
use crate::error::{Error, Result};
use crate::severity::standardize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub system: DigitSystem,
    pub n: u64,
    pub reps: u64,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.reps == 0 {
            return Err(Error::Config(format!(
                "simulation needs n >= 1 and reps >= 1, got n = {}, reps = {}",
                self.n, self.reps
            )));
        }
        Ok(())
    }
}

/// Statistics from one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationStats {
    pub mad: f64,
    pub tilde_delta: f64,
    /// `√n |p_i - b_i| / d_i` per digit cell.
    pub folded: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub spec: SimulationSpec,
    pub empirical_mad_mean: f64,
    pub empirical_mad_sd: f64,
    /// Standard error of `empirical_mad_mean`.
    pub mad_mean_se: f64,
    /// Approximate standard error of `empirical_mad_sd`.
    pub mad_sd_se: f64,
    pub theoretical_mad_mean: f64,
    pub theoretical_mad_sd: f64,
    pub tilde_delta_mean: f64,
    pub tilde_delta_sd: f64,
    pub tilde_delta_mean_se: f64,
    pub folded_means: Vec<f64>,
    pub folded_mean_se: Vec<f64>,
    /// Limit of every folded mean, `√(2/π)`.
    pub folded_target: f64,
}

impl SimulationReport {
    pub fn mad_mean_ratio(&self) -> f64 {
        self.empirical_mad_mean / self.theoretical_mad_mean
    }

    pub fn mad_sd_ratio(&self) -> f64 {
        self.empirical_mad_sd / self.theoretical_mad_sd
    }
}

/// The generator for replication `rep` under `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// One multinomial(n, probs) draw by sequential binomial splits.
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining_n = n;
    let mut remaining_p = 1.0;
    let last = probs.len() - 1;
    for (i, &p) in probs.iter().enumerate() {
        if remaining_n == 0 {
            break;
        }
        if i == last {
            counts[i] = remaining_n;
            break;
        }
        let share = (p / remaining_p).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining_n, share).expect("share within [0, 1]").sample(rng);
        counts[i] = draw;
        remaining_n -= draw;
        remaining_p -= p;
    }
    counts
}

/// One sample of `n` records from exact Benford probabilities.
pub fn sample_benford_counts<R: Rng + ?Sized>(system: DigitSystem, n: u64, rng: &mut R) -> DigitCounts {
    let b = benford_probs(system);
    DigitCounts::from_counts(system, sample_counts(&b.b, n, rng)).expect("k cells")
}

/// Runs replication `rep` of `spec`.
pub fn replicate(spec: &SimulationSpec, rep: u64) -> ReplicationStats {
    let mut rng = replication_rng(spec.seed, rep);
    let counts = sample_benford_counts(spec.system, spec.n, &mut rng);
    let b = benford_probs(spec.system);
    let p = proportions(&counts).expect("n >= 1");
    let mad = mad(&p, &b).expect("matching dimensions");
    let excess = mad - mad_moments(spec.system, spec.n).mean;
    let root_n = (spec.n as f64).sqrt();
    let folded = p
        .p
        .iter()
        .zip(&b.b)
        .zip(&constants(spec.system).d_vec)
        .map(|((p, b), d)| root_n * (p - b).abs() / d)
        .collect();
    ReplicationStats { mad, tilde_delta: standardize(spec.system, spec.n, excess), folded }
}

/// Runs all replications in parallel and aggregates them in index order.
pub fn simulate(spec: &SimulationSpec) -> Result<SimulationReport> {
    spec.validate()?;
    let stats: Vec<ReplicationStats> = (0..spec.reps).into_par_iter().map(|r| replicate(spec, r)).collect();
    Ok(aggregate(spec, &stats))
}

struct Moments {
    mean: f64,
    sd: f64,
}

fn moments(values: impl Iterator<Item = f64> + Clone) -> Moments {
    let count = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / count;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    let sd = if count > 1.0 { (ss / (count - 1.0)).sqrt() } else { 0.0 };
    Moments { mean, sd }
}

/// Aggregates replication statistics into a report.
pub fn aggregate(spec: &SimulationSpec, stats: &[ReplicationStats]) -> SimulationReport {
    let reps = stats.len() as f64;
    let theory = mad_moments(spec.system, spec.n);
    let m = moments(stats.iter().map(|s| s.mad));
    let t = moments(stats.iter().map(|s| s.tilde_delta));
    let k = spec.system.k();
    let (folded_means, folded_mean_se) = (0..k)
        .map(|i| {
            let f = moments(stats.iter().map(|s| s.folded[i]));
            (f.mean, f.sd / reps.sqrt())
        })
        .unzip();
    SimulationReport {
        spec: *spec,
        empirical_mad_mean: m.mean,
        empirical_mad_sd: m.sd,
        mad_mean_se: m.sd / reps.sqrt(),
        mad_sd_se: m.sd / (2.0 * (reps - 1.0).max(1.0)).sqrt(),
        theoretical_mad_mean: theory.mean,
        theoretical_mad_sd: theory.sd,
        tilde_delta_mean: t.mean,
        tilde_delta_sd: t.sd,
        tilde_delta_mean_se: t.sd / reps.sqrt(),
        folded_means,
        folded_mean_se,
        folded_target: std::f64::consts::FRAC_2_PI.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIRST: DigitSystem = DigitSystem::FirstDigit;
    const TWO: DigitSystem = DigitSystem::FirstTwoDigits;

    #[test]
    fn single_record_lands_in_one_cell() {
        let mut rng = replication_rng(7, 0);
        for system in DigitSystem::ALL {
            for _ in 0..200 {
                let c = sample_benford_counts(system, 1, &mut rng);
                assert_eq!(c.n, 1);
                assert_eq!(c.counts.iter().filter(|&&x| x == 1).count(), 1);
            }
        }
    }

    #[test]
    fn expected_counts_match_law_of_large_numbers() {
        let n = 1000;
        let reps = 4000;
        let b = benford_probs(TWO);
        let mut sums = vec![0.0; 90];
        let mut rng = replication_rng(11, 3);
        for _ in 0..reps {
            let c = sample_benford_counts(TWO, n, &mut rng);
            assert_eq!(c.counts.iter().sum::<u64>(), n);
            for (s, &x) in sums.iter_mut().zip(&c.counts) {
                *s += x as f64;
            }
        }
        for (i, s) in sums.iter().enumerate() {
            let mean = s / reps as f64;
            let expect = n as f64 * b.b[i];
            let se = (n as f64 * b.b[i] * (1.0 - b.b[i]) / reps as f64).sqrt();
            // 90 simultaneous checks at 4.5 SE keeps the family-wise false alarm small.
            assert!((mean - expect).abs() < 4.5 * se, "cell {i}: {mean} vs {expect}");
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let a = sample_benford_counts(FIRST, 5000, &mut replication_rng(42, 9));
        let b = sample_benford_counts(FIRST, 5000, &mut replication_rng(42, 9));
        assert_eq!(a, b);
        let c = sample_benford_counts(FIRST, 5000, &mut replication_rng(42, 10));
        assert_ne!(a, c);
    }

    #[test]
    fn parallel_matches_serial() {
        let spec = SimulationSpec { system: TWO, n: 3000, reps: 64, seed: 5 };
        let serial: Vec<_> = (0..spec.reps).map(|r| replicate(&spec, r)).collect();
        let parallel = simulate(&spec).unwrap();
        assert_eq!(parallel, aggregate(&spec, &serial));
        assert_eq!(simulate(&spec).unwrap(), parallel);
    }

    #[test]
    fn rejects_empty_specs() {
        assert!(simulate(&SimulationSpec { system: FIRST, n: 0, reps: 10, seed: 1 }).is_err());
        assert!(simulate(&SimulationSpec { system: FIRST, n: 10, reps: 0, seed: 1 }).is_err());
    }
}
