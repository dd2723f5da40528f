//! Independent brute-force maximizers used to validate the analytic solvers.
//!
//! Nothing here shares code with `optimal_state` or `filter_design`: the
//! unconstrained maximizer is plain power iteration on the path-graph
//! adjacency matrix, the constrained one is projected gradient ascent on the
//! probability ellipsoid intersected with the unit box. Agreement between the
//! two routes is evidence, not tautology.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fock::FockVector;
use crate::{PhaseError, Result};

/// Seed for restart randomization; fixed so audit runs reproduce.
pub const ORACLE_SEED: u64 = 0x5eed_0ca1;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best_vector: Vec<f64>,
    pub best_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// RNG algorithm and seed used for restarts, if any.
    pub rng_provenance: Option<String>,
}

/// Maximize Σ c_n c_{n+1} over the unit sphere in ℝ^{N+1} with c_n ≥ 0, by
/// power iteration on A + 2I where A is the (N+1)-node path-graph adjacency
/// matrix. The maximum equals half the top adjacency eigenvalue.
pub fn maximize_mu_unconstrained(n: usize) -> Result<OracleResult> {
    if n < 1 {
        return Err(PhaseError::InvalidArgument("need N ≥ 1".into()));
    }
    let dim = n + 1;
    let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut value = mu_of(&v);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < 200_000 {
        iterations += 1;
        // w = (A + 2I)v, spectral shift keeps the iteration positive
        let mut w = vec![0.0; dim];
        for i in 0..dim {
            w[i] = 2.0 * v[i];
            if i > 0 {
                w[i] += v[i - 1];
            }
            if i + 1 < dim {
                w[i] += v[i + 1];
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut w {
            *x /= norm;
        }
        let new_value = mu_of(&w);
        v = w;
        if (new_value - value).abs() < 1e-12 {
            value = new_value;
            converged = true;
            break;
        }
        value = new_value;
    }
    Ok(OracleResult {
        best_vector: v,
        best_value: value,
        iterations,
        converged,
        rng_provenance: None,
    })
}

fn mu_of(c: &[f64]) -> f64 {
    c.windows(2).map(|w| w[0] * w[1]).sum()
}

/// Maximize μ_f(f) = Σ f_n f_{n+1} a_n / P over f ∈ [0,1]^dim subject to
/// Σ x_n f_n² = P, where a_n = c_n c_{n+1} and x_n = c_n² come from the
/// state truncated (and renormalized) to `dim` levels.
///
/// Projected gradient ascent from the all-ones start plus `restarts` random
/// starts; step halving; stop when the projected gradient norm drops below
/// 1e−10.
pub fn maximize_mu_constrained(state: &FockVector, p: f64, dim: usize) -> Result<OracleResult> {
    maximize_mu_constrained_with(state, p, dim, 64)
}

pub fn maximize_mu_constrained_with(
    state: &FockVector,
    p: f64,
    dim: usize,
    restarts: usize,
) -> Result<OracleResult> {
    if !(p > 0.0 && p <= 1.0 + 1e-12) {
        return Err(PhaseError::InfeasibleProbability { prob: p, n_max: dim });
    }
    let p = p.min(1.0);
    let (a, x) = truncated_products(state, dim)?;

    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut total_iters = 0;
    let mut converged = false;

    for restart in 0..=restarts {
        let start: Vec<f64> = if restart == 0 {
            vec![1.0; dim]
        } else {
            (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect()
        };
        let Some(f0) = project_feasible(&start, &x, p) else { continue };
        let (f, iters, ok) = ascend(f0, &a, &x, p);
        total_iters += iters;
        converged |= ok;
        let value = mu_of_filter(&f, &a) / p;
        match &best {
            Some((bf, bv)) => {
                if value > *bv + 1e-12
                    || ((value - *bv).abs() <= 1e-12 && lex_less(&f, bf))
                {
                    best = Some((f, value));
                }
            }
            None => best = Some((f, value)),
        }
    }

    let (best_vector, best_value) = best
        .ok_or_else(|| PhaseError::InfeasibleProbability { prob: p, n_max: dim })?;
    Ok(OracleResult {
        best_vector,
        best_value,
        iterations: total_iters,
        converged,
        rng_provenance: Some(format!("chacha8 seed={ORACLE_SEED:#x}")),
    })
}

/// Exhaustive grid scan for dim ≤ 4: all but one coordinate run over a
/// uniform grid and the remaining one is solved from the probability
/// constraint. The solved coordinate is the one with the largest weight x_n,
/// which keeps its value insensitive to the grid step.
pub fn maximize_mu_constrained_grid(
    state: &FockVector,
    p: f64,
    dim: usize,
    points_per_axis: usize,
) -> Result<OracleResult> {
    if dim > 4 {
        return Err(PhaseError::InvalidArgument("grid scan limited to dim ≤ 4".into()));
    }
    let (a, x) = truncated_products(state, dim)?;
    let pivot = x
        .iter()
        .enumerate()
        .max_by(|(_, u), (_, v)| u.partial_cmp(v).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let free: Vec<usize> = (0..dim).filter(|&i| i != pivot).collect();
    let m = points_per_axis;
    let mut best_value = f64::NEG_INFINITY;
    let mut best_vector = vec![];
    let mut idx = vec![0usize; dim - 1];
    let mut count = 0usize;
    loop {
        let mut f = vec![0.0; dim];
        for (k, &axis) in free.iter().enumerate() {
            f[axis] = idx[k] as f64 / (m - 1) as f64;
        }
        let partial: f64 = free.iter().map(|&i| f[i] * f[i] * x[i]).sum();
        let solved2 = (p - partial) / x[pivot];
        if (-1e-12..=1.0 + 1e-12).contains(&solved2) {
            f[pivot] = solved2.max(0.0).sqrt().min(1.0);
            let value = mu_of_filter(&f, &a) / p;
            if value > best_value {
                best_value = value;
                best_vector = f.clone();
            }
        }
        count += 1;
        // odometer over the grid
        let mut k = 0;
        loop {
            if k == idx.len() {
                return if best_vector.is_empty() {
                    Err(PhaseError::InfeasibleProbability { prob: p, n_max: dim })
                } else {
                    Ok(OracleResult {
                        best_vector,
                        best_value,
                        iterations: count,
                        converged: true,
                        rng_provenance: None,
                    })
                };
            }
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn truncated_products(state: &FockVector, dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if dim < 2 {
        return Err(PhaseError::InvalidArgument("need dim ≥ 2".into()));
    }
    let coeffs = state.coeffs();
    let take = dim.min(coeffs.len());
    let mut c: Vec<f64> = coeffs[..take].to_vec();
    c.resize(dim, 0.0);
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut c {
        *v /= norm;
    }
    let a: Vec<f64> = c.windows(2).map(|w| w[0] * w[1]).collect();
    let x: Vec<f64> = c.iter().map(|v| v * v).collect();
    Ok((a, x))
}

fn mu_of_filter(f: &[f64], a: &[f64]) -> f64 {
    f.windows(2).zip(a).map(|(w, an)| w[0] * w[1] * an).sum()
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Project y onto {f ∈ [0,1]^dim : Σ x_n f_n² = p} by scaling: the map
/// s ↦ Σ x_n clip(s·y_n)² is continuous and monotone, so a bisection on the
/// scale factor lands on the constraint whenever p ≤ Σ x_n.
fn project_feasible(y: &[f64], x: &[f64], p: f64) -> Option<Vec<f64>> {
    let clipped_mass = |s: f64| -> f64 {
        y.iter()
            .zip(x)
            .map(|(&yi, &xi)| {
                let f = (s * yi).clamp(0.0, 1.0);
                xi * f * f
            })
            .sum()
    };
    if y.iter().all(|&v| v <= 0.0) {
        return None;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while clipped_mass(hi) < p {
        hi *= 2.0;
        if hi > 1e12 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if clipped_mass(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    Some(y.iter().map(|&yi| (s * yi).clamp(0.0, 1.0)).collect())
}

fn ascend(mut f: Vec<f64>, a: &[f64], x: &[f64], p: f64) -> (Vec<f64>, usize, bool) {
    let dim = f.len();
    let mut iters = 0;
    for _ in 0..20_000 {
        iters += 1;
        // gradient of Σ f_n f_{n+1} a_n
        let mut grad = vec![0.0; dim];
        for n in 0..dim {
            if n > 0 {
                grad[n] += f[n - 1] * a[n - 1];
            }
            if n + 1 < dim {
                grad[n] += f[n + 1] * a[n];
            }
        }
        // project out the constraint normal and active box directions
        let normal: Vec<f64> = f.iter().zip(x).map(|(fi, xi)| 2.0 * xi * fi).collect();
        let mut d = grad.clone();
        for _ in 0..2 {
            let nn: f64 = normal.iter().map(|v| v * v).sum();
            if nn > 0.0 {
                let dot: f64 = d.iter().zip(&normal).map(|(di, ni)| di * ni).sum();
                for (di, ni) in d.iter_mut().zip(&normal) {
                    *di -= dot / nn * ni;
                }
            }
            for n in 0..dim {
                if (f[n] >= 1.0 - 1e-14 && d[n] > 0.0) || (f[n] <= 1e-14 && d[n] < 0.0) {
                    d[n] = 0.0;
                }
            }
        }
        let dnorm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if dnorm < 1e-10 {
            return (f, iters, true);
        }
        let current = mu_of_filter(&f, a);
        let mut step = 1.0;
        let mut moved = false;
        while step > 1e-14 {
            let trial: Vec<f64> = f.iter().zip(&d).map(|(fi, di)| fi + step * di).collect();
            if let Some(proj) = project_feasible(&trial, x, p) {
                if mu_of_filter(&proj, a) > current + 1e-16 {
                    f = proj;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            return (f, iters, true);
        }
    }
    (f, iters, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn unconstrained_known_values() {
        assert_abs_diff_eq!(maximize_mu_unconstrained(1).unwrap().best_value, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(
            maximize_mu_unconstrained(2).unwrap().best_value,
            2.0_f64.sqrt() / 2.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            maximize_mu_unconstrained(6).unwrap().best_value,
            (PI / 8.0).cos(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn unconstrained_converges() {
        for n in 1..=8 {
            let r = maximize_mu_unconstrained(n).unwrap();
            assert!(r.converged, "N = {n}");
            assert_abs_diff_eq!(r.best_value, (PI / (n as f64 + 2.0)).cos(), epsilon = 1e-9);
        }
    }

    #[test]
    fn constrained_p1_is_deterministic_mu() {
        let s = FockVector::coherent(0.5, 1e-10).unwrap();
        let dim = s.trunc_dim();
        let r = maximize_mu_constrained(&s, 1.0, dim).unwrap();
        // only feasible point is the all-ones corner
        assert_abs_diff_eq!(r.best_value, s.mu(), epsilon = 1e-9);
        for v in &r.best_vector {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn constrained_two_level_closed_form() {
        // state [1/√2, 1/√2], P = 0.5: the feasible set is f_0² + f_1² = 1
        // (after the x_n = 1/2 weights), and f_0 = f_1 maximizes f_0 f_1,
        // giving μ_f = (1/2 · 1/2)/0.5 = 0.5
        let s = FockVector::new(vec![1.0, 1.0], 0.0).unwrap();
        let r = maximize_mu_constrained(&s, 0.5, 2).unwrap();
        assert_abs_diff_eq!(r.best_value, 0.5, epsilon = 1e-7);
        assert_abs_diff_eq!(r.best_vector[0], r.best_vector[1], epsilon = 1e-5);
    }

    #[test]
    fn constraint_satisfied_at_optimum() {
        let s = FockVector::coherent(0.5, 1e-8).unwrap();
        let dim = s.trunc_dim();
        for p in [0.9, 0.6, 0.3] {
            let r = maximize_mu_constrained(&s, p, dim).unwrap();
            let (_, x) = truncated_products(&s, dim).unwrap();
            let mass: f64 = r.best_vector.iter().zip(&x).map(|(f, xi)| f * f * xi).sum();
            assert_abs_diff_eq!(mass, p, epsilon = 1e-8);
        }
    }

    #[test]
    fn ascent_agrees_with_grid_scan() {
        let s = FockVector::coherent(0.5, 1e-3).unwrap();
        let dim = 3.min(s.trunc_dim());
        for p in [0.8, 0.5] {
            let ascent = maximize_mu_constrained(&s, p, dim).unwrap();
            let grid = maximize_mu_constrained_grid(&s, p, dim, 200).unwrap();
            assert_abs_diff_eq!(ascent.best_value, grid.best_value, epsilon = 1e-3);
            assert!(ascent.best_value >= grid.best_value - 1e-3);
        }
    }

    #[test]
    fn restart_doubling_is_stable() {
        let s = FockVector::coherent(0.5, 1e-8).unwrap();
        let dim = s.trunc_dim();
        let r64 = maximize_mu_constrained_with(&s, 0.5, dim, 64).unwrap();
        let r128 = maximize_mu_constrained_with(&s, 0.5, dim, 128).unwrap();
        assert!((r64.best_value - r128.best_value).abs() < 1e-6);
    }

    #[test]
    fn infeasible_probability_rejected() {
        let s = FockVector::coherent(0.5, 1e-8).unwrap();
        assert!(maximize_mu_constrained(&s, 1.5, s.trunc_dim()).is_err());
        assert!(maximize_mu_constrained(&s, 0.0, s.trunc_dim()).is_err());
    }
}
