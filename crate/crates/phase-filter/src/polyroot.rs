//! Real polynomial arithmetic and guaranteed real-root isolation on an
//! interval, via Sturm sequences and bisection.
//!
//! Coefficients are kept in double precision; the solver is intended for the
//! degree range this crate actually produces (≤ 64). Higher degrees are
//! rejected by [`RealPolynomial::real_roots_in`].

use crate::{PhaseError, Result};

const TRIM_EPS: f64 = 1e-30;
const DEGREE_CAP: usize = 64;

/// Real polynomial with coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

impl RealPolynomial {
    /// Trims trailing coefficients with magnitude ≤ 1e−30.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![] }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial x.
    pub fn x() -> Self {
        Self { coeffs: vec![0.0, 1.0] }
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(&c) if c.abs() <= TRIM_EPS) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Sign of p(x), overflow-safe for large |x|: for |x| > 1 the reversed
    /// polynomial is evaluated at 1/x, so intermediate values stay bounded by
    /// (degree + 1) · max|coeff|.
    fn sign_at(&self, x: f64) -> i8 {
        if self.is_zero() {
            return 0;
        }
        let v = if x.abs() <= 1.0 {
            self.eval(x)
        } else {
            // p(x) = x^deg · q(1/x) with q the coefficient-reversed polynomial
            let q: f64 = self.coeffs.iter().fold(0.0, |acc, &c| acc / x + c);
            let lead_sign = if x > 0.0 || self.degree() % 2 == 0 { 1.0 } else { -1.0 };
            lead_sign * q
        };
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| {
                self.coeffs.get(i).copied().unwrap_or(0.0)
                    + other.coeffs.get(i).copied().unwrap_or(0.0)
            })
            .collect();
        Self::new(coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self::new(coeffs)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * k).collect())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| (i + 1) as f64 * c)
                .collect(),
        )
    }

    fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m: f64, &c| m.max(c.abs()))
    }

    /// Euclidean remainder of self by divisor (both nonzero).
    fn rem(&self, divisor: &Self) -> Self {
        let d = divisor.degree();
        if d == 0 {
            return Self::zero();
        }
        let lead = divisor.coeffs[d];
        let mut r = self.coeffs.clone();
        while r.len() > d {
            let k = r.len() - 1;
            let factor = r[k] / lead;
            for i in 0..d {
                r[k - d + i] -= factor * divisor.coeffs[i];
            }
            r.truncate(k);
        }
        Self::new(r)
    }

    /// All real roots of the polynomial in [lo, hi], sorted ascending,
    /// each refined by bisection to an interval narrower than `tol` and
    /// deduplicated within 10·tol. Even-multiplicity roots are found through
    /// the square-free reduction feeding the Sturm chain.
    pub fn real_roots_in(&self, lo: f64, hi: f64, tol: f64) -> Result<Vec<f64>> {
        if self.is_zero() {
            return Err(PhaseError::InvalidArgument(
                "cannot isolate roots of the zero polynomial".into(),
            ));
        }
        if !(lo < hi) || !(tol > 0.0) {
            return Err(PhaseError::InvalidArgument(format!(
                "bad root bracket [{lo}, {hi}] or tolerance {tol}"
            )));
        }
        if self.degree() > DEGREE_CAP {
            return Err(PhaseError::Internal(format!(
                "degree {} exceeds root solver cap {DEGREE_CAP}",
                self.degree()
            )));
        }
        if self.degree() == 0 {
            return Ok(vec![]);
        }

        // Normalize scale; roots are unchanged and remainder arithmetic stays
        // in range even for badly scaled inputs.
        let scaled = self.scale(1.0 / self.max_abs_coeff());
        let sqf = scaled.square_free();
        let chain = sturm_chain(&sqf);

        let mut roots = Vec::new();
        let mut stack = vec![(lo, hi, sign_variations(&chain, lo), sign_variations(&chain, hi))];
        while let Some((a, b, va, vb)) = stack.pop() {
            let count = va.saturating_sub(vb);
            if count == 0 {
                continue;
            }
            if count == 1 || b - a < tol {
                if let Some(r) = bisect_root(&sqf, a, b, tol) {
                    roots.push(r);
                } else {
                    // single root with no endpoint sign change can only be an
                    // endpoint hit; take the midpoint of the tight interval
                    roots.push(0.5 * (a + b));
                }
                continue;
            }
            let mut mid = 0.5 * (a + b);
            // avoid splitting exactly on a root of the chain head
            if sqf.sign_at(mid) == 0 {
                mid += tol * 0.37;
            }
            let vm = sign_variations(&chain, mid);
            stack.push((a, mid, va, vm));
            stack.push((mid, b, vm, vb));
        }

        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots.dedup_by(|a, b| (*a - *b).abs() < 10.0 * tol);
        Ok(roots)
    }

    /// self / gcd(self, self'), computed with a relative zero threshold.
    fn square_free(&self) -> Self {
        let deriv = self.derivative();
        if deriv.is_zero() {
            return self.clone();
        }
        let mut a = self.scale(1.0 / self.max_abs_coeff());
        let mut b = deriv.scale(1.0 / deriv.max_abs_coeff());
        // Euclid on (p, p'); the last nonzero entry is the gcd
        loop {
            let mut r = a.rem(&b);
            if r.is_zero() || r.max_abs_coeff() < 1e-10 * b.max_abs_coeff().max(1.0) {
                break;
            }
            r = r.scale(1.0 / r.max_abs_coeff());
            a = b;
            b = r;
        }
        if b.degree() == 0 {
            return self.clone();
        }
        // divide out the repeated part
        let q = self.div_exact(&b);
        if q.is_zero() { self.clone() } else { q }
    }

    /// Quotient of self by divisor, ignoring the (numerically small) remainder.
    fn div_exact(&self, divisor: &Self) -> Self {
        let d = divisor.degree();
        if self.degree() < d {
            return Self::zero();
        }
        let mut r = self.coeffs.clone();
        let lead = divisor.coeffs[d];
        let mut q = vec![0.0; self.degree() - d + 1];
        for k in (d..r.len()).rev() {
            let factor = r[k] / lead;
            q[k - d] = factor;
            for i in 0..=d {
                r[k - d + i] -= factor * divisor.coeffs[i];
            }
        }
        Self::new(q)
    }
}

fn sturm_chain(p: &RealPolynomial) -> Vec<RealPolynomial> {
    let mut chain = vec![p.clone(), p.derivative()];
    loop {
        let (a, b) = (&chain[chain.len() - 2], &chain[chain.len() - 1]);
        if b.is_zero() || b.degree() == 0 {
            break;
        }
        let mut r = a.rem(b).scale(-1.0);
        if !r.is_zero() && r.max_abs_coeff() < 1e-12 * b.max_abs_coeff().max(1.0) {
            break;
        }
        if r.is_zero() {
            break;
        }
        r = r.scale(1.0 / r.max_abs_coeff());
        chain.push(r);
    }
    chain
}

fn sign_variations(chain: &[RealPolynomial], x: f64) -> usize {
    let mut count = 0;
    let mut prev = 0i8;
    for p in chain {
        let s = p.sign_at(x);
        if s == 0 {
            continue;
        }
        if prev != 0 && s != prev {
            count += 1;
        }
        prev = s;
    }
    count
}

/// Bisection on a sign change of `p` in [a, b]; returns None if the endpoint
/// signs do not bracket a root.
fn bisect_root(p: &RealPolynomial, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut sa = p.sign_at(a);
    let sb = p.sign_at(b);
    if sa == 0 {
        return Some(a);
    }
    if sb == 0 {
        return Some(b);
    }
    if sa == sb {
        return None;
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break; // interval below representable resolution
        }
        let sm = p.sign_at(mid);
        if sm == 0 {
            return Some(mid);
        }
        if sm == sa {
            a = mid;
            sa = sm;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}
