//! Optimal Fock-diagonal probabilistic filters.
//!
//! For an input state with coefficients c_n and a target success probability
//! P, the stationarity system
//!
//! ```text
//! f_{n−1} a_{n−1} + f_{n+1} a_n = λ f_n x_n,   a_n = c_n c_{n+1}, x_n = c_n²
//! ```
//!
//! together with the constraint Σ x_n f_n² = P determines the optimal filter.
//! Above a threshold N the transmissions are pinned at one (coherent states
//! are localized in Fock space), which turns the free transmissions into
//! polynomials of the multiplier: f_n = f₀𝒫_n(λ) with f₀ = 1/𝒫_N(λ). The
//! multiplier is a root of a single polynomial obtained by substituting this
//! form into the probability constraint. Candidate roots are screened for
//! physicality (real λ, all f_n ∈ [0, 1]) and the winner is picked by direct
//! μ comparison, with an envelope search over N.

use crate::fock::{Filter, FockVector};
use crate::polyroot::RealPolynomial;
use crate::{PhaseError, Result};

const CLIP_TOL: f64 = 1e-10;
const PROB_TOL: f64 = 1e-9;
const ROOT_TOL: f64 = 1e-13;

/// A state plus target success probability, with the derived products
/// a_n = c_n c_{n+1} and x_n = c_n² recomputed from the state.
#[derive(Debug, Clone)]
pub struct FilterProblem {
    state: FockVector,
    target_prob: f64,
    a: Vec<f64>,
    x: Vec<f64>,
}

impl FilterProblem {
    pub fn new(state: FockVector, target_prob: f64) -> Result<Self> {
        if !(target_prob > 0.0 && target_prob <= 1.0) {
            return Err(PhaseError::InvalidArgument(format!(
                "target probability must lie in (0, 1], got {target_prob}"
            )));
        }
        let c = state.coeffs();
        let a = c.windows(2).map(|w| w[0] * w[1]).collect();
        let x = c.iter().map(|v| v * v).collect();
        Ok(Self { state, target_prob, a, x })
    }

    pub fn state(&self) -> &FockVector {
        &self.state
    }

    pub fn target_prob(&self) -> f64 {
        self.target_prob
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    fn dim(&self) -> usize {
        self.x.len()
    }
}

#[derive(Debug, Clone)]
pub struct FilterSolution {
    pub filter: Filter,
    pub lambda: f64,
    pub threshold: usize,
    pub achieved_prob: f64,
    pub mu_out: f64,
    pub physical: bool,
    pub global_opt: bool,
}

/// Max stationarity violation over interior transmissions (0 < f_n < 1,
/// n < threshold), with f_{−1} = 0. Diagnostic, not an error.
pub fn stationarity_residual(problem: &FilterProblem, filter: &Filter, lambda: f64) -> f64 {
    let dim = problem.dim();
    let mut worst = 0.0_f64;
    for n in 0..filter.threshold().min(dim) {
        let fn_ = filter.transmission(n);
        if fn_ <= 0.0 || fn_ >= 1.0 {
            continue;
        }
        let prev = if n == 0 { 0.0 } else { filter.transmission(n - 1) * problem.a[n - 1] };
        let next = if n + 1 < dim { filter.transmission(n + 1) * problem.a[n] } else { 0.0 };
        worst = worst.max((prev + next - lambda * fn_ * problem.x[n]).abs());
    }
    worst
}

/// The recursion polynomials 𝒫_0..𝒫_N of the filter problem:
/// 𝒫_0 = 1, 𝒫_1 = λx_0/a_0, 𝒫_{n+1} = (λx_n𝒫_n − a_{n−1}𝒫_{n−1})/a_n.
pub fn filter_recursion_polys(problem: &FilterProblem, n: usize) -> Result<Vec<RealPolynomial>> {
    check_support(problem, n)?;
    let mut polys = Vec::with_capacity(n + 1);
    polys.push(RealPolynomial::constant(1.0));
    if n >= 1 {
        polys.push(RealPolynomial::new(vec![0.0, problem.x[0] / problem.a[0]]));
    }
    for k in 1..n {
        let lam_x = RealPolynomial::new(vec![0.0, problem.x[k]]);
        let next = lam_x
            .mul(&polys[k])
            .sub(&polys[k - 1].scale(problem.a[k - 1]))
            .scale(1.0 / problem.a[k]);
        polys.push(next);
    }
    Ok(polys)
}

/// The root polynomial of the probability constraint for threshold N:
///
/// ```text
/// g(λ) = Σ_{n=0}^{N} x_n 𝒫_n(λ)² − (P − 1 + Σ_{n=0}^{N} x_n) 𝒫_N(λ)²
/// ```
///
/// which is Σ x_n f_n² = P written in terms of f_n = 𝒫_n(λ)/𝒫_N(λ) with the
/// unit tail above N folded in.
pub fn constraint_polynomial(problem: &FilterProblem, n: usize) -> Result<RealPolynomial> {
    let polys = filter_recursion_polys(problem, n)?;
    let head_mass: f64 = problem.x[..=n].iter().sum();
    let mut g = RealPolynomial::zero();
    for (k, p) in polys.iter().enumerate() {
        g = g.add(&p.mul(p).scale(problem.x[k]));
    }
    let k = problem.target_prob - 1.0 + head_mass;
    g = g.sub(&polys[n].mul(&polys[n]).scale(k));
    Ok(g)
}

/// All stationary filters for a fixed threshold N, physical or not, sorted by
/// decreasing post-filter μ. An empty result means this N is infeasible.
pub fn solve_for_threshold(problem: &FilterProblem, n: usize) -> Result<Vec<FilterSolution>> {
    if n < 1 || n >= problem.dim() {
        return Err(PhaseError::InvalidArgument(format!(
            "threshold {n} outside [1, {})",
            problem.dim()
        )));
    }
    check_support(problem, n)?;

    let mut solutions = Vec::new();

    if (problem.target_prob - 1.0).abs() <= PROB_TOL {
        // the deterministic limit: the identity filter is stationary at the
        // box corner and meets the constraint exactly
        solutions.push(identity_solution(problem));
    }

    // the candidate with all-nonnegative transmissions is the unique root of
    // the constraint gap above the largest pole of the transmission profile
    let stable = monotone_root(problem, n);
    if let Some(lambda) = stable {
        if let Some(sol) = build_solution(problem, n, lambda) {
            solutions.push(sol);
        }
    }

    // expanded-polynomial isolation picks up the remaining sign-changing
    // stationary branches while the degree stays within the solver cap
    if 2 * n + 2 <= 64 {
        let g = constraint_polynomial(problem, n)?;
        if !g.is_zero() && g.degree() >= 1 {
            let bracket = root_bracket(problem, n);
            let roots = g.real_roots_in(-bracket, bracket, ROOT_TOL)?;
            for lambda in roots {
                let lambda = refine_root(problem, n, lambda);
                if let Some(known) = stable {
                    if (lambda - known).abs() <= 1e-7 * known.abs().max(1.0) {
                        continue;
                    }
                }
                if let Some(sol) = build_solution(problem, n, lambda) {
                    solutions.push(sol);
                }
            }
        }
    }

    solutions.sort_by(|s, t| t.mu_out.partial_cmp(&s.mu_out).unwrap());
    Ok(solutions)
}

/// Envelope over thresholds 1..=n_max: the physical solution with maximal
/// post-filter μ. Ties within 1e−10 go to the smaller threshold, then the
/// smaller λ. If the winner sits at n_max the sweep is rerun once with the
/// bound doubled.
pub fn optimal_filter(problem: &FilterProblem, n_max: usize) -> Result<FilterSolution> {
    if n_max < 1 {
        return Err(PhaseError::InvalidArgument("need N_max ≥ 1".into()));
    }
    let mut best = sweep(problem, n_max)?;
    if let Some(sol) = &best {
        if sol.threshold == n_max.min(problem.dim() - 1) && n_max < problem.dim() - 1 {
            if let Some(wider) = sweep(problem, 2 * n_max)? {
                best = Some(wider);
            }
        }
    }
    let mut sol = best.ok_or(PhaseError::InfeasibleProbability {
        prob: problem.target_prob,
        n_max,
    })?;
    sol.global_opt = true;
    Ok(sol)
}

fn sweep(problem: &FilterProblem, n_max: usize) -> Result<Option<FilterSolution>> {
    let hi = n_max.min(problem.dim() - 1);
    let mut best: Option<FilterSolution> = None;
    for n in 1..=hi {
        for sol in solve_for_threshold(problem, n)? {
            if !sol.physical {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => {
                    sol.mu_out > b.mu_out + 1e-10
                        || ((sol.mu_out - b.mu_out).abs() <= 1e-10
                            && (sol.threshold < b.threshold
                                || (sol.threshold == b.threshold && sol.lambda < b.lambda)))
                }
            };
            if better {
                best = Some(sol);
            }
        }
    }
    Ok(best)
}

fn identity_solution(problem: &FilterProblem) -> FilterSolution {
    FilterSolution {
        filter: Filter::identity(),
        lambda: 0.0,
        threshold: 0,
        achieved_prob: 1.0,
        mu_out: problem.state.mu(),
        physical: true,
        global_opt: false,
    }
}

/// Head transmissions f_0..f_{N−1} = 𝒫_k(λ)/𝒫_N(λ) evaluated through the
/// recursion, with periodic rescaling so large λ never overflows: only the
/// ratios matter. Returns None when 𝒫_N vanishes or the values degenerate.
fn recursion_ratios(problem: &FilterProblem, n: usize, lambda: f64) -> Option<Vec<f64>> {
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = lambda * problem.x[0] / problem.a[0];
    }
    for k in 1..n {
        p[k + 1] = (lambda * problem.x[k] * p[k] - problem.a[k - 1] * p[k - 1]) / problem.a[k];
        if p[k + 1].abs() > 1e120 {
            for v in p[..=k + 1].iter_mut() {
                *v *= 1e-120;
            }
        }
    }
    let pn = p[n];
    if !pn.is_finite() || pn == 0.0 {
        return None;
    }
    let ratios: Vec<f64> = p[..n].iter().map(|&v| v / pn).collect();
    if ratios.iter().any(|f| !f.is_finite()) {
        return None;
    }
    Some(ratios)
}

/// Achieved-minus-target probability of the candidate filter at λ. Shares its
/// roots with the constraint polynomial (where 𝒫_N ≠ 0) but is evaluated
/// through the recursion, so it stays accurate where Horner on the expanded
/// coefficients cancels.
fn constraint_gap(problem: &FilterProblem, n: usize, lambda: f64) -> f64 {
    let Some(ratios) = recursion_ratios(problem, n, lambda) else {
        return f64::NAN;
    };
    let head: f64 = ratios
        .iter()
        .zip(&problem.x)
        .map(|(&f, &x)| x * f * f)
        .sum();
    let tail: f64 = problem.x[n..].iter().sum();
    head + tail - problem.target_prob
}

/// The unique root of the constraint gap above the largest pole of the
/// transmission profile. Substituting u_n = c_n f_n turns the stationarity
/// recursion into u_{n+1} = λu_n − u_{n−1}, so the poles are the zeros of a
/// Chebyshev-type polynomial and all lie below 2cos(π/(N+1)); above that
/// point every transmission is positive and the achieved probability falls
/// strictly from +∞ at the pole to the tail mass at λ = ∞. Any filter with
/// all-nonnegative transmissions therefore lives on this branch.
fn monotone_root(problem: &FilterProblem, n: usize) -> Option<f64> {
    let tail: f64 = problem.x[n..].iter().sum();
    if problem.target_prob <= tail {
        return None; // below the feasibility floor for this threshold
    }
    let top = 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
    let scale = top.abs().max(1.0);

    // walk in toward the pole until the gap turns positive
    let mut lo = None;
    let mut hi: Option<f64> = None;
    for eps in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12, 1e-14] {
        let x = top + eps * scale;
        let g = constraint_gap(problem, n, x);
        if !g.is_finite() {
            continue;
        }
        if g > 0.0 {
            lo = Some(x);
            break;
        }
        if g == 0.0 {
            return Some(x);
        }
        hi = Some(x);
    }
    let mut a = lo?;
    let mut b = match hi {
        Some(b) => b,
        None => {
            // expand upward until the gap goes negative (it must: the limit
            // is tail − P < 0)
            let mut step = scale;
            let mut b = a + step;
            while constraint_gap(problem, n, b) > 0.0 {
                step *= 2.0;
                b = a + step;
                if step > 1e30 {
                    return None;
                }
            }
            b
        }
    };
    let mut ga = constraint_gap(problem, n, a);
    loop {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let gm = constraint_gap(problem, n, mid);
        if !gm.is_finite() || gm == 0.0 {
            return Some(mid);
        }
        if gm.signum() == ga.signum() {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Polish a root reported by the polynomial isolator against the
/// recursion-evaluated constraint, widening the window until it brackets a
/// sign change.
fn refine_root(problem: &FilterProblem, n: usize, lambda: f64) -> f64 {
    let scale = lambda.abs().max(1.0);
    for w in [1e-9, 1e-6, 1e-3] {
        let (a, b) = (lambda - w * scale, lambda + w * scale);
        let (fa, fb) = (constraint_gap(problem, n, a), constraint_gap(problem, n, b));
        if !fa.is_finite() || !fb.is_finite() || fa.signum() == fb.signum() {
            continue;
        }
        let (mut a, mut b, mut fa) = (a, b, fa);
        loop {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let fm = constraint_gap(problem, n, mid);
            if !fm.is_finite() || fm == 0.0 {
                return mid;
            }
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        return 0.5 * (a + b);
    }
    lambda
}

/// Evaluate the recursion numerically at λ and assemble the filter.
fn build_solution(problem: &FilterProblem, n: usize, lambda: f64) -> Option<FilterSolution> {
    let dim = problem.dim();
    let raw = recursion_ratios(problem, n, lambda)?;
    let in_range = raw
        .iter()
        .all(|&f| f.is_finite() && (-CLIP_TOL..=1.0 + CLIP_TOL).contains(&f));
    let clipped: Vec<f64> = raw.iter().map(|&f| f.clamp(0.0, 1.0)).collect();

    let f_at = |k: usize| -> f64 { if k < n { clipped[k] } else { 1.0 } };
    let achieved_prob: f64 = (0..dim).map(|k| f_at(k).powi(2) * problem.x[k]).sum();
    let mu_out: f64 = (0..dim.saturating_sub(1))
        .map(|k| f_at(k) * f_at(k + 1) * problem.a[k])
        .sum::<f64>()
        / problem.target_prob;

    let filter = Filter::new(clipped).ok()?;
    let physical = in_range && (achieved_prob - problem.target_prob).abs() < PROB_TOL;
    Some(FilterSolution {
        filter,
        lambda,
        threshold: n,
        achieved_prob,
        mu_out,
        physical,
        global_opt: false,
    })
}

/// Gershgorin-style bound on the stationarity system: every meaningful λ
/// satisfies |λ| ≤ 2·max(a_{n−1}+a_n)/min_{n≤N} x_n.
fn root_bracket(problem: &FilterProblem, n: usize) -> f64 {
    let dim = problem.dim();
    let mut max_row = 0.0_f64;
    for k in 0..dim {
        let prev = if k == 0 { 0.0 } else { problem.a[k - 1] };
        let next = if k < problem.a.len() { problem.a[k] } else { 0.0 };
        max_row = max_row.max(prev + next);
    }
    let min_x = problem.x[..=n].iter().cloned().fold(f64::INFINITY, f64::min);
    (2.0 * max_row / min_x).max(4.0)
}

fn check_support(problem: &FilterProblem, n: usize) -> Result<()> {
    if n >= problem.dim() {
        return Err(PhaseError::InvalidArgument(format!(
            "threshold {n} exceeds state support {}",
            problem.dim()
        )));
    }
    for k in 0..n {
        if problem.a[k] <= 0.0 {
            return Err(PhaseError::UnsupportedState(k));
        }
    }
    Ok(())
}

/// Minimum achievable success probability at threshold N: with f_n = 1 pinned
/// for n ≥ N, the free head can at best vanish.
pub fn feasibility_floor(problem: &FilterProblem, n: usize) -> f64 {
    problem.x[n.min(problem.dim())..].iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use approx::assert_abs_diff_eq;

    fn coherent_problem(alpha: f64, p: f64) -> FilterProblem {
        let s = FockVector::coherent(alpha, 1e-12).unwrap();
        FilterProblem::new(s, p).unwrap()
    }

    #[test]
    fn recursion_poly_first_step() {
        let prob = coherent_problem(0.5, 0.9);
        let polys = filter_recursion_polys(&prob, 1).unwrap();
        let c = prob.state().coeffs();
        // 𝒫_1 = λ·x_0/a_0 = λ·c_0/c_1
        assert_eq!(polys[1].degree(), 1);
        assert_abs_diff_eq!(polys[1].coeffs()[1], c[0] / c[1], epsilon = 1e-12);
    }

    #[test]
    fn recursion_poly_second_step() {
        let prob = coherent_problem(0.5, 0.9);
        let polys = filter_recursion_polys(&prob, 2).unwrap();
        // 𝒫_2 = (λx_1𝒫_1 − a_0)/a_1, checked by direct evaluation
        let lambda = 1.7;
        let p1 = lambda * prob.x()[0] / prob.a()[0];
        let p2 = (lambda * prob.x()[1] * p1 - prob.a()[0]) / prob.a()[1];
        assert_abs_diff_eq!(polys[2].eval(lambda), p2, epsilon = 1e-9);
    }

    #[test]
    fn recursion_poly_degrees() {
        let prob = coherent_problem(0.5, 0.9);
        let polys = filter_recursion_polys(&prob, 6).unwrap();
        for (n, p) in polys.iter().enumerate() {
            assert_eq!(p.degree(), n);
        }
    }

    #[test]
    fn p_one_contains_identity() {
        let prob = coherent_problem(0.5, 1.0);
        let sols = solve_for_threshold(&prob, 2).unwrap();
        let det_mu = prob.state().mu();
        assert!(sols
            .iter()
            .any(|s| s.physical && s.filter.is_identity() && (s.mu_out - det_mu).abs() < 1e-12));
    }

    #[test]
    fn n1_improves_on_deterministic() {
        let prob = coherent_problem(0.5, 0.99);
        let sols = solve_for_threshold(&prob, 1).unwrap();
        let best = sols.iter().find(|s| s.physical).expect("physical solution");
        assert!(best.mu_out > prob.state().mu());
        assert!(stationarity_residual(&prob, &best.filter, best.lambda) < 1e-8);
        assert_abs_diff_eq!(best.achieved_prob, 0.99, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_threshold_is_empty_not_error() {
        // P far below what N = 1 can reach: only f_0 is free, so the floor is
        // 1 − x_0
        let prob = coherent_problem(0.5, 0.05);
        let sols = solve_for_threshold(&prob, 1).unwrap();
        assert!(sols.iter().all(|s| !s.physical));
    }

    #[test]
    fn feasibility_floor_scan() {
        let state = FockVector::coherent(0.5, 1e-12).unwrap();
        for n in 1..=4 {
            let floor = {
                let prob = FilterProblem::new(state.clone(), 0.5).unwrap();
                feasibility_floor(&prob, n)
            };
            // just above the floor must be solvable, just below must not
            for (p, expect) in [(floor * 1.10, true), (floor * 0.90, false)] {
                if !(0.0..=1.0).contains(&p) {
                    continue;
                }
                let prob = FilterProblem::new(state.clone(), p).unwrap();
                let any_physical = solve_for_threshold(&prob, n)
                    .unwrap()
                    .iter()
                    .any(|s| s.physical);
                assert_eq!(any_physical, expect, "N = {n}, P = {p}");
            }
        }
    }

    #[test]
    fn optimal_filter_p_one_is_identity() {
        let prob = coherent_problem(0.5, 1.0);
        let sol = optimal_filter(&prob, 10).unwrap();
        assert!(sol.filter.is_identity());
        assert_abs_diff_eq!(sol.mu_out, prob.state().mu(), epsilon = 1e-12);
    }

    #[test]
    fn optimal_filter_matches_oracle() {
        let state = FockVector::coherent(0.5, 1e-6).unwrap();
        for p in [0.9, 0.5] {
            let prob = FilterProblem::new(state.clone(), p).unwrap();
            let sol = optimal_filter(&prob, 10).unwrap();
            let orc = oracle::maximize_mu_constrained(&state, p, state.trunc_dim()).unwrap();
            assert!(
                (sol.mu_out - orc.best_value).abs() / orc.best_value < 1e-4,
                "P = {p}: solver {} vs oracle {}",
                sol.mu_out,
                orc.best_value
            );
        }
    }

    #[test]
    fn filtering_never_hurts() {
        let state = FockVector::coherent(1.0, 1e-12).unwrap();
        let det_mu = state.mu();
        for p in [1.0, 0.9, 0.7, 0.5, 0.3] {
            let prob = FilterProblem::new(state.clone(), p).unwrap();
            let sol = optimal_filter(&prob, 20).unwrap();
            assert!(sol.mu_out >= det_mu - 1e-12, "P = {p}");
        }
    }

    #[test]
    fn mu_bounded_by_finite_dimensional_optimum() {
        let state = FockVector::coherent(0.5, 1e-12).unwrap();
        let d = state.trunc_dim() - 1;
        let bound = (std::f64::consts::PI / (d as f64 + 2.0)).cos();
        for p in [0.8, 0.4, 0.2] {
            let prob = FilterProblem::new(state.clone(), p).unwrap();
            let sol = optimal_filter(&prob, 20).unwrap();
            assert!(sol.mu_out <= bound + 1e-9, "P = {p}: {} > {}", sol.mu_out, bound);
        }
    }

    #[test]
    fn tradeoff_monotone_in_probability() {
        let state = FockVector::coherent(0.5, 1e-12).unwrap();
        // μ improves (or stays) as the success probability budget shrinks
        let mut prev = 0.0;
        for i in 0..20 {
            let p = 1.0 - 0.045 * i as f64;
            let prob = FilterProblem::new(state.clone(), p).unwrap();
            let sol = optimal_filter(&prob, 20).unwrap();
            assert!(sol.mu_out >= prev - 1e-9, "P = {p}");
            prev = prev.max(sol.mu_out);
        }
    }

    #[test]
    fn zero_interior_coefficient_rejected() {
        let state = FockVector::new(vec![1.0, 0.0, 1.0], 0.0).unwrap();
        let prob = FilterProblem::new(state, 0.5).unwrap();
        assert!(matches!(
            solve_for_threshold(&prob, 2),
            Err(PhaseError::UnsupportedState(_))
        ));
    }
}
