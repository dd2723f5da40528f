//! Monte-Carlo sampling of the canonical phase measurement.
//!
//! Samples are drawn by inverse-CDF lookup on a 2¹⁶-point cumulative table of
//! the canonical density with linear interpolation. The generator is ChaCha8,
//! seeded; sampling is partitioned into fixed-size chunks whose sub-streams
//! depend only on the master seed and chunk index, so the batch is identical
//! no matter how the work is laid out.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fock::FockVector;
use crate::{PhaseError, Result};

const CDF_POINTS: usize = 1 << 16;
const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub thetas: Vec<f64>,
    pub seed: u64,
    /// Provenance: generator name and the state the batch was drawn from.
    pub state_id: String,
}

/// Draw `count` i.i.d. samples from the canonical phase distribution of
/// `state`; reproducible for a fixed seed.
pub fn sample_canonical(state: &FockVector, count: usize, seed: u64) -> Result<SampleBatch> {
    if count < 1 {
        return Err(PhaseError::InvalidArgument("sample count must be ≥ 1".into()));
    }
    // cumulative table over the uniform grid θ_i = i·2π/M
    let h = TAU / CDF_POINTS as f64;
    let mut cdf = Vec::with_capacity(CDF_POINTS + 1);
    let mut acc = 0.0;
    cdf.push(0.0);
    for i in 0..CDF_POINTS {
        acc += state.canonical_density(i as f64 * h) * h;
        cdf.push(acc);
    }
    let total = *cdf.last().unwrap();
    for v in &mut cdf {
        *v /= total;
    }

    let mut thetas = Vec::with_capacity(count);
    let chunks = (count as u64).div_ceil(CHUNK);
    for chunk in 0..chunks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk + 1);
        let n_here = CHUNK.min(count as u64 - chunk * CHUNK);
        for _ in 0..n_here {
            let u: f64 = rng.gen();
            thetas.push(invert_cdf(&cdf, u, h));
        }
    }
    Ok(SampleBatch {
        thetas,
        seed,
        state_id: format!("chacha8 dim={}", state.trunc_dim()),
    })
}

fn invert_cdf(cdf: &[f64], u: f64, h: f64) -> f64 {
    // first index with cdf[idx] >= u, then linear interpolation in the cell
    let idx = cdf.partition_point(|&v| v < u).max(1);
    let (lo, hi) = (cdf[idx - 1], cdf[idx]);
    let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.5 };
    let theta = ((idx - 1) as f64 + frac) * h;
    theta.rem_euclid(TAU)
}

/// μ̂ = |mean of e^{iθ}| with a delta-method standard error.
pub fn estimate_mu(batch: &SampleBatch) -> Result<(f64, f64)> {
    let n = batch.thetas.len();
    if n == 0 {
        return Err(PhaseError::InvalidArgument("empty batch".into()));
    }
    let nf = n as f64;
    let (mut sc, mut ss, mut sc2, mut ss2, mut scs) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &t in &batch.thetas {
        let (s, c) = t.sin_cos();
        sc += c;
        ss += s;
        sc2 += c * c;
        ss2 += s * s;
        scs += c * s;
    }
    let (mc, ms) = (sc / nf, ss / nf);
    let r = (mc * mc + ms * ms).sqrt();
    if r == 0.0 {
        return Ok((0.0, (1.0 / nf).sqrt()));
    }
    // var(μ̂) ≈ (mc²·var(c̄) + ms²·var(s̄) + 2·mc·ms·cov) / r²
    let var_c = (sc2 / nf - mc * mc) / nf;
    let var_s = (ss2 / nf - ms * ms) / nf;
    let cov = (scs / nf - mc * ms) / nf;
    let var_r = ((mc * mc * var_c + ms * ms * var_s + 2.0 * mc * ms * cov) / (r * r)).max(0.0);
    Ok((r, var_r.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn samples_in_range_and_deterministic() {
        let s = FockVector::coherent(0.5, 1e-12).unwrap();
        let b1 = sample_canonical(&s, 10_000, 42).unwrap();
        let b2 = sample_canonical(&s, 10_000, 42).unwrap();
        assert_eq!(b1.thetas, b2.thetas);
        assert!(b1.thetas.iter().all(|&t| (0.0..TAU).contains(&t)));
        let b3 = sample_canonical(&s, 10_000, 43).unwrap();
        assert_ne!(b1.thetas, b3.thetas);
    }

    #[test]
    fn batch_independent_of_chunk_layout() {
        // prefix of a longer batch equals the shorter batch
        let s = FockVector::coherent(0.5, 1e-12).unwrap();
        let short = sample_canonical(&s, 70_000, 7).unwrap();
        let long = sample_canonical(&s, 140_000, 7).unwrap();
        assert_eq!(&long.thetas[..70_000], &short.thetas[..]);
    }

    #[test]
    fn vacuum_is_uniform() {
        let vac = FockVector::new(vec![1.0], 0.0).unwrap();
        let batch = sample_canonical(&vac, 100_000, 1).unwrap();
        // Kolmogorov–Smirnov against uniform[0, 2π) at significance 0.01
        let mut sorted = batch.thetas.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len() as f64;
        let d = sorted
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let emp_hi = (i + 1) as f64 / n;
                let emp_lo = i as f64 / n;
                let model = t / TAU;
                (emp_hi - model).abs().max((model - emp_lo).abs())
            })
            .fold(0.0, f64::max);
        let critical = 1.63 / n.sqrt();
        assert!(d < critical, "KS statistic {d} exceeds {critical}");
    }

    #[test]
    fn two_level_mean_cosine() {
        let s = FockVector::new(vec![1.0, 1.0], 0.0).unwrap();
        let batch = sample_canonical(&s, 1_000_000, 3).unwrap();
        let mean_cos: f64 = batch.thetas.iter().map(|t| t.cos()).sum::<f64>()
            / batch.thetas.len() as f64;
        // density (1 + cosθ)/2π has ⟨cosθ⟩ = 1/2, sd of cosθ = 1/√2 per sample
        let se = (0.5_f64).sqrt() / (batch.thetas.len() as f64).sqrt();
        assert!((mean_cos - 0.5).abs() < 5.0 * se);
    }

    #[test]
    fn estimator_degenerate_cases() {
        let b = SampleBatch { thetas: vec![0.0; 100], seed: 0, state_id: String::new() };
        let (mu, se) = estimate_mu(&b).unwrap();
        assert_abs_diff_eq!(mu, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(se, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn estimator_consistent_with_exact_mu() {
        let s = FockVector::coherent(0.5, 1e-12).unwrap();
        let batch = sample_canonical(&s, 200_000, 11).unwrap();
        let (mu_hat, se) = estimate_mu(&batch).unwrap();
        assert!((mu_hat - s.mu()).abs() < 5.0 * se, "{mu_hat} vs {}", s.mu());
    }
}
