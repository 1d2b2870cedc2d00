//! Simulation campaigns: many independent trials of matrix construction and
//! diagonalization, pooled and compared with a theoretical CDF.

use crate::eig::{distribution_distance, eigenvalues_symmetric, DistanceReport, EmpiricalSpectrum};
use crate::error::{Error, Result};
use crate::matrices::{
    build_band_matrix, build_covariance_matrix, EnsembleSpec, Matrix, SigmaProfile, Truncation,
};
use crate::sampling::{normalizer_a_n, sample_entry, RngStreamSpec, StableTailLaw};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Modulus below which an eigenvalue counts as an exact zero: the usual
/// numerical-rank tolerance `N ε λ_max`.
pub fn zero_threshold(n: usize, largest: f64) -> f64 {
    n as f64 * f64::EPSILON * largest.abs()
}

/// Largest tolerated fraction of aborted trials.
pub const MAX_ABORT_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ensemble {
    /// Band (or Wigner) matrices; trial `k` uses stream `seed.stream_id + k`.
    Band(EnsembleSpec),
    /// `X X^t / a_{N+M}^2` with `X` of size `N × M`.
    Covariance {
        law: StableTailLaw,
        n: usize,
        m: usize,
        seed: RngStreamSpec,
    },
    /// Symmetric `±1/√N` entries, whose spectrum tends to the semicircle.
    Bernoulli { n: usize, seed: RngStreamSpec },
}

impl Ensemble {
    pub fn tag(&self) -> &'static str {
        match self {
            Ensemble::Band(_) => "band",
            Ensemble::Covariance { .. } => "covariance",
            Ensemble::Bernoulli { .. } => "bernoulli",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Ensemble::Band(spec) => spec.validate(),
            Ensemble::Covariance { law, n, m, .. } => {
                law.validate()?;
                if *m == 0 || m > n {
                    return Err(Error::invalid("M", format!("need 1 ≤ M ≤ N, got M = {m}, N = {n}")));
                }
                Ok(())
            }
            Ensemble::Bernoulli { n, .. } => {
                if *n == 0 {
                    return Err(Error::invalid("n", "must be positive"));
                }
                Ok(())
            }
        }
    }

    fn base_seed(&self) -> RngStreamSpec {
        match self {
            Ensemble::Band(spec) => spec.seed,
            Ensemble::Covariance { seed, .. } | Ensemble::Bernoulli { seed, .. } => *seed,
        }
    }

    /// Seed of trial `k`.
    pub fn trial_seed(&self, k: u64) -> RngStreamSpec {
        let base = self.base_seed();
        base.substream(base.stream_id.wrapping_add(k))
    }

    /// Matrix of trial `k`.
    pub fn build(&self, k: u64) -> Result<Matrix> {
        let seed = self.trial_seed(k);
        match self {
            Ensemble::Band(spec) => build_band_matrix(&EnsembleSpec {
                seed,
                ..spec.clone()
            }),
            Ensemble::Covariance { law, n, m, .. } => build_covariance_matrix(law, *n, *m, seed),
            Ensemble::Bernoulli { n, .. } => Ok(bernoulli_matrix(*n, seed)),
        }
    }
}

pub fn bernoulli_matrix(n: usize, seed: RngStreamSpec) -> Matrix {
    let mut rng = seed.rng();
    let s = 1.0 / (n as f64).sqrt();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = if rng.gen::<bool>() { s } else { -s };
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub window: (f64, f64),
    pub excluded0: f64,
    /// Compare only eigenvalues above `zero_threshold`, against the theory
    /// conditioned on `(0, ∞)`.
    pub positive_part: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub ensemble: Ensemble,
    pub trials: usize,
    pub comparison: Option<Comparison>,
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if let Some(c) = &self.comparison {
            if !(c.window.1 > c.window.0) {
                return Err(Error::invalid("window", "empty window"));
            }
        }
        self.ensemble.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub spec: CampaignSpec,
    pub per_trial_ks: Vec<f64>,
    pub pooled: Option<DistanceReport>,
    /// Fraction of eigenvalues within `zero_threshold` of zero.
    pub near_zero_fraction: f64,
    pub aborted_trials: usize,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOutcome {
    pub pooled: EmpiricalSpectrum,
    pub trials: Vec<EmpiricalSpectrum>,
    pub report: CampaignReport,
}

/// Count of numerically zero eigenvalues, and the spectrum restricted to the
/// eigenvalues above `zero_threshold`.
pub fn positive_part(s: &EmpiricalSpectrum) -> (usize, EmpiricalSpectrum) {
    let top = s
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, &b| a.max(b.abs()));
    let cut = zero_threshold(s.n, top);
    let positive: Vec<f64> = s.eigenvalues.iter().copied().filter(|&v| v > cut).collect();
    let small = s.eigenvalues.iter().filter(|v| v.abs() <= cut).count();
    (small, EmpiricalSpectrum::new(positive, s.trial_id, s.ensemble_tag.clone()))
}

/// Runs every trial, pools the spectra in trial order and, if a theory CDF
/// is given, reports distances to it. For a positive-part comparison the
/// CDF is conditioned on `(0, ∞)` using `atom`.
pub fn run_campaign<F>(spec: &CampaignSpec, theory: Option<F>, atom: f64) -> Result<CampaignOutcome>
where
    F: Fn(f64) -> f64 + Sync,
{
    spec.validate()?;
    let start = Instant::now();
    let results: Vec<Result<EmpiricalSpectrum>> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|k| {
            let m = spec.ensemble.build(k)?;
            let ev = eigenvalues_symmetric(&m)?;
            Ok(EmpiricalSpectrum::new(ev, k, spec.ensemble.tag()))
        })
        .collect();
    let mut spectra = Vec::with_capacity(results.len());
    let mut aborted = 0;
    for r in results {
        match r {
            Ok(s) => spectra.push(s),
            Err(Error::EigenNoConvergence { .. }) => aborted += 1,
            Err(e) => return Err(e),
        }
    }
    if aborted as f64 > MAX_ABORT_FRACTION * spec.trials as f64 {
        return Err(Error::EigenNoConvergence { index: aborted });
    }
    let tag = spec.ensemble.tag();
    let pooled = EmpiricalSpectrum::pooled(&spectra, tag);

    let mut small = 0;
    let mut total = 0;
    let mut per_trial_ks = Vec::new();
    let mut pooled_report = None;
    let positive = spec.comparison.map_or(false, |c| c.positive_part);
    let compared: Vec<EmpiricalSpectrum> = spectra
        .iter()
        .map(|s| {
            let (k, p) = positive_part(s);
            small += k;
            total += s.n;
            if positive {
                p
            } else {
                s.clone()
            }
        })
        .collect();
    if let (Some(c), Some(f)) = (spec.comparison, theory.as_ref()) {
        let g = |t: f64| {
            if positive {
                ((f(t) - atom) / (1.0 - atom)).clamp(0.0, 1.0)
            } else {
                f(t)
            }
        };
        for s in &compared {
            per_trial_ks.push(distribution_distance(s, g, c.window, c.excluded0)?.ks);
        }
        let pooled_cmp = EmpiricalSpectrum::pooled(&compared, tag);
        pooled_report = Some(distribution_distance(&pooled_cmp, g, c.window, c.excluded0)?);
    }
    let report = CampaignReport {
        spec: spec.clone(),
        per_trial_ks,
        pooled: pooled_report,
        near_zero_fraction: if total > 0 { small as f64 / total as f64 } else { 0.0 },
        aborted_trials: aborted,
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(CampaignOutcome {
        pooled,
        trials: spectra,
        report,
    })
}

/// `(1/N) tr((A_N^B)^2)` for one trial, drawing entries in the same order as
/// the matrix builder without storing the matrix.
pub fn truncated_moment_trial(
    law: &StableTailLaw,
    profile: &SigmaProfile,
    b: f64,
    n: usize,
    seed: RngStreamSpec,
) -> Result<f64> {
    let spec = EnsembleSpec {
        n,
        law: *law,
        profile: profile.clone(),
        truncation: Truncation::FixedB { b },
        diagonal: None,
        seed,
    };
    spec.validate()?;
    let a_n = normalizer_a_n(law, n)?;
    let cutoff = spec.cutoff(a_n);
    let nf = n as f64;
    let mut rng = seed.rng();
    let mut sum = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in i..n {
            let x = sample_entry(law, &mut rng);
            if x.abs() < cutoff {
                let v = profile.eval((i + 1) as f64 / nf, (j + 1) as f64 / nf) * x / a_n;
                row += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        sum += row;
    }
    Ok(sum / nf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedMomentReport {
    pub mean: f64,
    pub per_trial: Vec<f64>,
    /// `α/(2-α) B^{2-α} ∬σ²`.
    pub limit: f64,
}

/// `α/(2-α) B^{2-α} ∬σ²`, the large-`N` value of the truncated second moment.
pub fn truncated_moment_limit(alpha: f64, b: f64, profile: &SigmaProfile) -> f64 {
    alpha / (2.0 - alpha) * b.powf(2.0 - alpha) * profile.alpha_integral(2.0)
}

pub fn truncated_moment_experiment(
    law: &StableTailLaw,
    profile: &SigmaProfile,
    b: f64,
    n: usize,
    trials: usize,
    seed: RngStreamSpec,
) -> Result<TruncatedMomentReport> {
    if !(b > 1.0) {
        return Err(Error::invalid("B", "must exceed 1"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let per_trial: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|k| truncated_moment_trial(law, profile, b, n, seed.substream(seed.stream_id.wrapping_add(k))))
        .collect::<Result<_>>()?;
    Ok(TruncatedMomentReport {
        mean: per_trial.iter().sum::<f64>() / trials as f64,
        per_trial,
        limit: truncated_moment_limit(law.alpha, b, profile),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::TailFamily;

    fn spec(n: usize, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            n,
            law: StableTailLaw::new(1.0, TailFamily::SymmetricPareto, 1.0).unwrap(),
            profile: SigmaProfile::constant(1.0),
            truncation: Truncation::FixedB { b: 2.0 },
            diagonal: None,
            seed: RngStreamSpec::new(seed, 0),
        }
    }

    #[test]
    fn streaming_moment_matches_matrix() {
        let s = spec(40, 9);
        let m = build_band_matrix(&s).unwrap();
        let direct = m.frobenius_sq() / 40.0;
        let streamed =
            truncated_moment_trial(&s.law, &s.profile, 2.0, 40, s.seed).unwrap();
        assert!((direct - streamed).abs() < 1e-12 * direct.max(1.0));
    }

    #[test]
    fn zero_trials_rejected() {
        let c = CampaignSpec {
            ensemble: Ensemble::Band(spec(4, 1)),
            trials: 0,
            comparison: None,
        };
        assert!(c.validate().is_err());
    }
}
