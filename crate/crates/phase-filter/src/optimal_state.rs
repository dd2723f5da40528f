//! Optimal phase-encoding states in an (N+1)-dimensional Fock space.
//!
//! Maximizing μ = Σ c_n c_{n+1} on the unit sphere with c_n ≥ 0 leads to the
//! three-term recursion c_{n+1} = λc_n − c_{n−1} (c_{−1} = 0), so every
//! coefficient is a polynomial in the Lagrange multiplier: c_n = 𝒫_n(λ)c_0
//! with 𝒫_0 = 1, 𝒫_1 = λ. The boundary symmetry c_N = c_0 picks λ as a root
//! of 𝒫_N(λ) = 1, and normalization fixes c_0.

use crate::fock::FockVector;
use crate::polyroot::RealPolynomial;
use crate::{PhaseError, Result};


#[derive(Debug, Clone)]
pub struct OptimalStateSolution {
    pub state: FockVector,
    pub lambda: f64,
    pub mu: f64,
}

/// The recursion polynomials 𝒫_0..𝒫_N with 𝒫_{n+1} = λ𝒫_n − 𝒫_{n−1}.
///
/// These are Chebyshev polynomials of the second kind in disguise:
/// 𝒫_n(2cos t) = sin((n+1)t)/sin t.
pub fn state_recursion_polys(n_max: usize) -> Vec<RealPolynomial> {
    let mut polys = Vec::with_capacity(n_max + 1);
    polys.push(RealPolynomial::constant(1.0));
    if n_max >= 1 {
        polys.push(RealPolynomial::x());
    }
    for n in 1..n_max {
        let next = RealPolynomial::x().mul(&polys[n]).sub(&polys[n - 1]);
        polys.push(next);
    }
    polys
}

/// 𝒫_0..𝒫_N evaluated at λ through the recursion itself; numerically stable
/// where Horner on the expanded coefficients cancels catastrophically for
/// large N.
fn recursion_values(n: usize, lambda: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(n + 1);
    v.push(1.0);
    if n >= 1 {
        v.push(lambda);
    }
    for k in 1..n {
        let next = lambda * v[k] - v[k - 1];
        v.push(next);
    }
    v
}

/// Optimal state in the (N+1)-dimensional Fock space, with its Lagrange
/// multiplier λ (largest positive root of 𝒫_N(λ) = 1 in (0, 2)) and μ = λ/2.
pub fn optimal_state(n: usize) -> Result<OptimalStateSolution> {
    if n < 1 {
        return Err(PhaseError::InvalidArgument(
            "optimal state needs dimension N ≥ 1".into(),
        ));
    }
    // Scan h(λ) = 𝒫_N(λ) − 1 on a grid fine enough to separate all roots
    // (they sit at spacing Ω(1/N²) inside the path-graph spectral window
    // (0, 2)), then bisect each sign change down to machine resolution.
    let h = |lambda: f64| recursion_values(n, lambda)[n] - 1.0;
    let cells = 8 * (n + 2) * (n + 2);
    let mut roots = Vec::new();
    let mut prev_x = 1e-9;
    let mut prev_s = h(prev_x);
    for i in 1..=cells {
        let x = 2.0 * i as f64 / cells as f64;
        let s = h(x);
        if prev_s == 0.0 {
            roots.push(prev_x);
        } else if prev_s.signum() != s.signum() {
            let (mut a, mut b) = (prev_x, x);
            let mut fa = prev_s;
            loop {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                let fm = h(mid);
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev_x = x;
        prev_s = s;
    }
    if roots.is_empty() {
        return Err(PhaseError::Internal(format!(
            "no positive root of P_{n}(lambda) = 1 found"
        )));
    }

    // Among all positive roots, pick the one maximizing μ of the resulting
    // state by direct comparison.
    let mut best: Option<OptimalStateSolution> = None;
    for &lambda in &roots {
        debug_assert!(lambda > 0.0 && lambda < 2.0 + 1e-6);
        let raw = recursion_values(n, lambda);
        if raw.iter().any(|&c| c < -1e-9) {
            continue; // coefficients must stay non-negative
        }
        let state = FockVector::new(raw.iter().map(|&c| c.max(0.0)).collect(), 0.0)?;
        let mu = state.mu();
        if best.as_ref().map_or(true, |b| mu > b.mu) {
            best = Some(OptimalStateSolution { state, lambda, mu });
        }
    }
    best.ok_or_else(|| {
        PhaseError::Internal(format!("no root of P_{n}(lambda) = 1 yields a valid state"))
    })
}
