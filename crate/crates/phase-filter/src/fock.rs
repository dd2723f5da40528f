//! Truncated Fock-space states, coherent states, canonical phase statistics
//! and filter application.

use std::f64::consts::TAU;

use crate::{PhaseError, Result};

pub(crate) const NORM_TOL: f64 = 1e-9;
const CLIP_TOL: f64 = 1e-10;

/// Pure state with real non-negative coefficients in the photon-number basis,
/// truncated to a finite support and normalized over it.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    coeffs: Vec<f64>,
    tail_mass_bound: f64,
}

impl FockVector {
    /// Build a state from raw amplitudes, normalizing them.
    ///
    /// Amplitudes must be non-negative; `tail_mass_bound` records the
    /// probability mass discarded by whatever truncation produced `coeffs`.
    pub fn new(coeffs: Vec<f64>, tail_mass_bound: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(PhaseError::InvalidArgument("empty coefficient vector".into()));
        }
        if let Some(&c) = coeffs.iter().find(|&&c| c < 0.0 || !c.is_finite()) {
            return Err(PhaseError::InvalidArgument(format!(
                "coefficients must be finite and non-negative, got {c}"
            )));
        }
        let norm2: f64 = coeffs.iter().map(|c| c * c).sum();
        if norm2 <= 0.0 {
            return Err(PhaseError::InvalidArgument("zero state".into()));
        }
        let norm = norm2.sqrt();
        let coeffs = coeffs.into_iter().map(|c| c / norm).collect();
        Ok(Self { coeffs, tail_mass_bound })
    }

    /// Coherent state |α⟩ with c_n = e^{−α²/2} αⁿ/√(n!), truncated so the
    /// discarded mass stays below `tail_tol` and renormalized over the kept
    /// support. Amplitudes are evaluated through log-factorials so α up to
    /// about 20 stays in range.
    pub fn coherent(alpha: f64, tail_tol: f64) -> Result<Self> {
        if alpha < 0.0 || !alpha.is_finite() {
            return Err(PhaseError::InvalidArgument(format!(
                "coherent amplitude must be non-negative, got {alpha}"
            )));
        }
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(PhaseError::InvalidArgument(format!(
                "tail tolerance must lie in (0, 1), got {tail_tol}"
            )));
        }
        if alpha == 0.0 {
            return Ok(Self { coeffs: vec![1.0], tail_mass_bound: 0.0 });
        }
        // ln c_n = −α²/2 + n ln α − ln(n!)/2, accumulated incrementally.
        let mut coeffs = Vec::new();
        let mut kept = 0.0_f64;
        let mut ln_c = -alpha * alpha / 2.0;
        let mut n = 0usize;
        loop {
            let c = ln_c.exp();
            coeffs.push(c);
            kept += c * c;
            if 1.0 - kept < tail_tol {
                break;
            }
            n += 1;
            ln_c += alpha.ln() - 0.5 * (n as f64).ln();
            if n > 100_000 {
                return Err(PhaseError::Internal("coherent truncation did not converge".into()));
            }
        }
        let tail = (1.0 - kept).max(0.0);
        Self::new(coeffs, tail)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Number of kept Fock levels (M + 1 for support 0..=M).
    pub fn trunc_dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn tail_mass_bound(&self) -> f64 {
        self.tail_mass_bound
    }

    /// μ = Σ_{n} c_n c_{n+1}; lies in [0, 1).
    pub fn mu(&self) -> f64 {
        self.coeffs.windows(2).map(|w| w[0] * w[1]).sum()
    }

    pub fn phase_stats(&self) -> PhaseStats {
        PhaseStats::from_mu(self.mu())
    }

    /// Canonical phase density P(θ) = (1/2π)|Σ c_n e^{inθ}|².
    pub fn canonical_density(&self, theta: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (n, &c) in self.coeffs.iter().enumerate() {
            let (s, co) = (n as f64 * theta).sin_cos();
            re += c * co;
            im += c * s;
        }
        (re * re + im * im) / TAU
    }

    /// Apply a Fock-diagonal filter; returns the normalized conditional state
    /// and the success probability P = Σ f_n² c_n².
    pub fn apply_filter(&self, filter: &Filter) -> Result<(FockVector, f64)> {
        let prob: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, &c)| {
                let f = filter.transmission(n);
                f * f * c * c
            })
            .sum();
        if prob < 1e-30 {
            return Err(PhaseError::DegenerateFilter);
        }
        if filter.is_identity() {
            // identity is exact, bit-level
            return Ok((self.clone(), 1.0));
        }
        let sqrt_p = prob.sqrt();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, &c)| filter.transmission(n) * c / sqrt_p)
            .collect();
        Ok((
            FockVector { coeffs, tail_mass_bound: self.tail_mass_bound },
            prob,
        ))
    }

    pub fn is_normalized(&self) -> bool {
        let norm2: f64 = self.coeffs.iter().map(|c| c * c).sum();
        (norm2 - 1.0).abs() < NORM_TOL
    }
}

/// μ and the 2π-periodic phase variance V = μ⁻² − 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseStats {
    pub mu: f64,
    /// `f64::INFINITY` when μ = 0 (uniform phase).
    pub variance: f64,
}

impl PhaseStats {
    pub fn from_mu(mu: f64) -> Self {
        let variance = if mu > 0.0 { mu.powi(-2) - 1.0 } else { f64::INFINITY };
        Self { mu, variance }
    }
}

/// Fock-diagonal transmission F = diag(f₀, f₁, …) with f_n = 1 for all
/// n ≥ threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    f: Vec<f64>,
}

impl Filter {
    /// `f` holds the modified transmissions f_0..f_{N−1}; everything above is
    /// the identity. Entries within 1e−10 of [0, 1] are clipped.
    pub fn new(f: Vec<f64>) -> Result<Self> {
        let mut clipped = Vec::with_capacity(f.len());
        for &v in &f {
            if !(-CLIP_TOL..=1.0 + CLIP_TOL).contains(&v) {
                return Err(PhaseError::InvalidArgument(format!(
                    "filter transmission {v} outside [0, 1]"
                )));
            }
            clipped.push(v.clamp(0.0, 1.0));
        }
        Ok(Self { f: clipped })
    }

    pub fn identity() -> Self {
        Self { f: Vec::new() }
    }

    pub fn transmission(&self, n: usize) -> f64 {
        self.f.get(n).copied().unwrap_or(1.0)
    }

    pub fn threshold(&self) -> usize {
        self.f.len()
    }

    pub fn modified(&self) -> &[f64] {
        &self.f
    }

    pub fn is_identity(&self) -> bool {
        self.f.iter().all(|&v| v == 1.0)
    }
}
