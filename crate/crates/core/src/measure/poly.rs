//! Sparse bivariate polynomials and bracketed root isolation, the boundary
//! toolkit behind every slice-measure computation.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Polynomial in `(w1, w2)` stored as sparse monomials sorted by exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly2 {
    terms: Vec<Term>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Term {
    e1: u32,
    e2: u32,
    c: f64,
}

impl Poly2 {
    pub fn zero() -> Self {
        Poly2 { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms(&[(0, 0, c)])
    }

    pub fn x1() -> Self {
        Self::from_terms(&[(1, 0, 1.0)])
    }

    pub fn x2() -> Self {
        Self::from_terms(&[(0, 1, 1.0)])
    }

    /// Affine form `a*w1 + b*w2 + c`.
    pub fn affine(a: f64, b: f64, c: f64) -> Self {
        Self::from_terms(&[(1, 0, a), (0, 1, b), (0, 0, c)])
    }

    pub fn from_terms(terms: &[(u32, u32, f64)]) -> Self {
        let mut t: Vec<Term> = terms
            .iter()
            .map(|&(e1, e2, c)| Term { e1, e2, c })
            .collect();
        t.sort_by_key(|t| (t.e1, t.e2));
        let mut merged: Vec<Term> = Vec::with_capacity(t.len());
        for term in t {
            match merged.last_mut() {
                Some(last) if last.e1 == term.e1 && last.e2 == term.e2 => last.c += term.c,
                _ => merged.push(term),
            }
        }
        merged.retain(|t| t.c != 0.0);
        Poly2 { terms: merged }
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.terms.iter().map(|t| (t.e1, t.e2, t.c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.e1 + t.e2).max().unwrap_or(0)
    }

    pub fn eval(&self, w1: f64, w2: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.c * w1.powi(t.e1 as i32) * w2.powi(t.e2 as i32))
            .sum()
    }

    pub fn scale(&self, s: f64) -> Poly2 {
        let terms: Vec<_> = self.terms.iter().map(|t| (t.e1, t.e2, t.c * s)).collect();
        Self::from_terms(&terms)
    }

    pub fn pow(&self, k: u32) -> Poly2 {
        let mut out = Poly2::constant(1.0);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Substitute `w1 -> w1/t`, dilating the zero set by `t` along the first axis.
    pub fn dilate_x1(&self, t: f64) -> Poly2 {
        assert!(t > 0.0, "dilation factor must be positive");
        let terms: Vec<_> = self
            .terms
            .iter()
            .map(|term| (term.e1, term.e2, term.c / t.powi(term.e1 as i32)))
            .collect();
        Self::from_terms(&terms)
    }

    /// Freeze `w2`, producing a univariate polynomial in `w1`.
    pub fn restrict_w2(&self, w2: f64) -> PolyU {
        let deg1 = self.terms.iter().map(|t| t.e1).max().unwrap_or(0) as usize;
        let mut coef = vec![0.0; deg1 + 1];
        for t in &self.terms {
            coef[t.e1 as usize] += t.c * w2.powi(t.e2 as i32);
        }
        PolyU::new(coef)
    }
}

impl Add for &Poly2 {
    type Output = Poly2;
    fn add(self, rhs: &Poly2) -> Poly2 {
        let mut terms: Vec<_> = self.terms().collect();
        terms.extend(rhs.terms());
        Poly2::from_terms(&terms)
    }
}

impl Sub for &Poly2 {
    type Output = Poly2;
    fn sub(self, rhs: &Poly2) -> Poly2 {
        self + &rhs.scale(-1.0)
    }
}

impl Neg for &Poly2 {
    type Output = Poly2;
    fn neg(self) -> Poly2 {
        self.scale(-1.0)
    }
}

impl Mul for &Poly2 {
    type Output = Poly2;
    fn mul(self, rhs: &Poly2) -> Poly2 {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                terms.push((a.e1 + b.e1, a.e2 + b.e2, a.c * b.c));
            }
        }
        Poly2::from_terms(&terms)
    }
}

impl fmt::Display for Poly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0 0 0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{} {} {}", t.c, t.e1, t.e2)?;
        }
        Ok(())
    }
}

/// Univariate polynomial, ascending coefficients, trailing exact zeros trimmed.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyU {
    coef: Vec<f64>,
}

impl PolyU {
    pub fn new(mut coef: Vec<f64>) -> Self {
        while coef.len() > 1 && *coef.last().unwrap() == 0.0 {
            coef.pop();
        }
        if coef.is_empty() {
            coef.push(0.0);
        }
        PolyU { coef }
    }

    pub fn degree(&self) -> usize {
        self.coef.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coef.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coef.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> PolyU {
        let coef = self
            .coef
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| i as f64 * c)
            .collect();
        PolyU::new(coef)
    }
}

/// All sign-change roots of `p` on `[lo, hi]`. Brackets combine a uniform
/// subdivision into `4 * degree` cells with the recursively isolated roots
/// of the derivative, so every monotone stretch gets its own cell even when
/// lopsided coefficients squeeze a root pair far below the cell width; each
/// sign change is then bisected to 1e-12 relative width. Exact zeros at
/// bracket points are kept as roots. Tangential even-order roots without a
/// sign change stay invisible, which never moves measure: they bound no
/// sign-consistent interval.
pub fn isolate_roots(p: &PolyU, lo: f64, hi: f64) -> Vec<f64> {
    let deg = p.degree();
    if deg == 0 || !(hi > lo) {
        return Vec::new();
    }
    let cells = 4 * deg;
    let mut brackets: Vec<f64> = (0..=cells)
        .map(|i| {
            if i == cells {
                hi
            } else {
                lo + (hi - lo) * i as f64 / cells as f64
            }
        })
        .collect();
    if deg >= 2 {
        brackets.extend(isolate_roots(&p.derivative(), lo, hi));
        brackets.sort_unstable_by(f64::total_cmp);
        brackets.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * a.abs().max(1.0));
    }
    let mut roots = Vec::new();
    let mut xa = brackets[0];
    let mut fa = p.eval(xa);
    if fa == 0.0 {
        roots.push(xa);
    }
    for &xb in &brackets[1..] {
        let fb = p.eval(xb);
        if fb == 0.0 {
            roots.push(xb);
        } else if fa != 0.0 && (fa < 0.0) != (fb < 0.0) {
            roots.push(bisect(p, xa, xb, fa));
        }
        xa = xb;
        fa = fb;
    }
    roots
}

fn bisect(p: &PolyU, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let neg_left = fa < 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = p.eval(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == neg_left {
            a = m;
        } else {
            b = m;
        }
        if b - a <= 1e-12 * m.abs().max(1.0) {
            break;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_of_binomial_expands() {
        let p = &Poly2::x1() + &Poly2::x2();
        let sq = &p * &p;
        let expected = Poly2::from_terms(&[(2, 0, 1.0), (1, 1, 2.0), (0, 2, 1.0)]);
        assert_eq!(sq, expected);
        assert_eq!(sq.degree(), 2);
    }

    #[test]
    fn eval_and_restriction_agree() {
        // w1^2 w2 + 3 w1 - w2^3
        let p = Poly2::from_terms(&[(2, 1, 1.0), (1, 0, 3.0), (0, 3, -1.0)]);
        let r = p.restrict_w2(2.0);
        assert_eq!(r.degree(), 2);
        for &x in &[-1.5, 0.0, 0.25, 3.0] {
            assert_eq!(r.eval(x), p.eval(x, 2.0));
        }
    }

    #[test]
    fn cubic_roots_recovered() {
        // (x-1)(x-2)(x+3) = x^3 - 7x + 6
        let p = PolyU::new(vec![6.0, -7.0, 0.0, 1.0]);
        let roots = isolate_roots(&p, -10.0, 10.0);
        assert_eq!(roots.len(), 3);
        let expected = [-3.0, 1.0, 2.0];
        for (r, e) in roots.iter().zip(expected) {
            assert!((r - e).abs() < 1e-10, "root {r} vs {e}");
        }
    }

    #[test]
    fn exact_zero_at_bracket_edge() {
        let p = PolyU::new(vec![-4.0, 0.0, 1.0]);
        let roots = isolate_roots(&p, 2.0, 10.0);
        assert_eq!(roots, vec![2.0]);
    }

    #[test]
    fn clustered_root_pair_is_not_skipped() {
        // 2500 (x-1)^2 - 0.36: roots 1 +- 0.012, both inside one uniform
        // cell of [-3, 3]; the derivative bracket at x = 1 separates them.
        let p = PolyU::new(vec![2500.0 - 0.36, -5000.0, 2500.0]);
        let roots = isolate_roots(&p, -3.0, 3.0);
        assert_eq!(roots.len(), 2);
        assert!((roots[0] - 0.988).abs() < 1e-10);
        assert!((roots[1] - 1.012).abs() < 1e-10);
    }

    #[test]
    fn dilation_moves_roots() {
        let p = Poly2::from_terms(&[(2, 0, 1.0), (0, 0, -1.0)]); // w1^2 - 1
        let d = p.dilate_x1(3.0);
        assert!(d.eval(3.0, 0.0).abs() < 1e-15);
        assert!(d.eval(1.0, 0.0) < 0.0);
    }
}
