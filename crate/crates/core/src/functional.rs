//! Space-time norms, ratio functionals and the quadrilinear form with its
//! region decomposition.
//!
//! The quadrilinear form evaluates
//!
//! `Q(f) = (1/(L*lambda))^3 sum_{u,v,w} W(H(v)-H(w)) R(v,w)
//!         f(u+v) f(u-v) f(u+w) f(u-w)`
//!
//! over all triples for which the four shifted points lie on the lattice.
//! Here `u, v, w` range over the half-grid: `u = (a+b)/2`, `v = (a-b)/2`
//! for lattice pairs `(a, b)`, so `v` and `w` may have half-integer indices.
//! `W` is the weight window in the symbol gap and `R` an optional region
//! filter splitting the sum by the size of `H(v,w)^2` against
//! `|H(v) H(w)|`.
//!
//! Accumulation order is part of the contract: per-`u` partial sums are
//! formed with `v` in the outer and `w` in the inner loop, pairs enumerated
//! in lattice order, and the partials are folded in `u` order. That makes
//! the value reproducible bit for bit across thread counts and lets an
//! independently coded enumeration reproduce it exactly.

use rayon::prelude::*;
use thiserror::Error;

use crate::lattice::{Lattice, LatticeError, SpectralField};
use crate::propagator::{sweep_slices, EvolutionPlan, PlanError};
use crate::symbol::Symbol;
use crate::util::least_squares;
use crate::window::smooth_weight_hat;

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("field lives on a different lattice than the plan")]
    LatticeMismatch,
    #[error("input weights must be finite and nonnegative, offending index {0}")]
    BadWeight(usize),
    #[error("support of {support} points exceeds the cubic work budget {budget}")]
    Budget { support: usize, budget: u64 },
    #[error("growth fit needs at least {need} points with positive values, got {got}")]
    DegenerateFit { need: usize, got: usize },
    #[error("ratio of a zero field is undefined")]
    ZeroField,
}

/// `L^4` norm of `e(-tH) phi` over the plan's window and box.
pub fn l4_space_time_norm(
    plan: &EvolutionPlan,
    field: &SpectralField,
) -> Result<f64, FunctionalError> {
    if field.lattice() != plan.lattice() {
        return Err(FunctionalError::LatticeMismatch);
    }
    let window = *plan.window();
    let partials = sweep_slices(plan, field.coef(), |stepper, eng, range| {
        let mut acc = 0.0;
        for (j, i) in range.enumerate() {
            if j > 0 {
                stepper.advance();
            }
            eng.synth(&stepper.cur);
            acc += window.quad_weight(i) * eng.quartic_sum();
        }
        acc
    });
    let total: f64 = partials.into_iter().sum();
    let (m1, m2) = plan.grid();
    let area = plan.lattice().box_area();
    let fourth = total / (area * area * area * (m1 * m2) as f64);
    Ok(fourth.max(0.0).powf(0.25))
}

/// `l4_space_time_norm / l2_norm`; scale-invariant by homogeneity.
pub fn strichartz_ratio(
    plan: &EvolutionPlan,
    field: &SpectralField,
) -> Result<f64, FunctionalError> {
    let l2 = field.l2_norm();
    if l2 == 0.0 {
        return Err(FunctionalError::ZeroField);
    }
    Ok(l4_space_time_norm(plan, field)? / l2)
}

/// Window profile in the symbol gap `H(v) - H(w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    /// `1_{|s| <= theta}`
    Indicator,
    /// `w_hat(s/theta)`: the B-spline bump, supported on `|s| <= theta/2`
    SmoothBump,
}

/// Sign octant: each entry is `+1` or `-1`, constraining the signs of
/// `x1`, `x2` and `H(x)` (nonnegative when `+1`, nonpositive when `-1`).
pub type Octant = [i8; 3];

pub const ALL_OCTANTS: [Octant; 8] = [
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [1, -1, -1],
    [-1, 1, 1],
    [-1, 1, -1],
    [-1, -1, 1],
    [-1, -1, -1],
];

/// Region filter on the pair `(v, w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Restriction {
    None,
    /// `H(v,w)^2 <= c_a |H(v) H(w)|`
    A1,
    /// complement of `A1`
    A2Plain,
    /// `A2Plain` with `|H(v)-H(w)| <= theta2` and both `v, w` in the octant
    A2Refined(Octant),
}

/// Full parameter set of the quadrilinear form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadWeight {
    pub kind: WeightKind,
    pub theta: f64,
    pub restriction: Restriction,
    pub c_a: f64,
    pub theta2: f64,
}

impl Default for QuadWeight {
    fn default() -> Self {
        QuadWeight {
            kind: WeightKind::Indicator,
            theta: 1.0,
            restriction: Restriction::None,
            c_a: 100.0,
            theta2: 2.0,
        }
    }
}

impl QuadWeight {
    pub fn indicator(theta: f64) -> Self {
        QuadWeight { theta, ..Default::default() }
    }

    pub fn smooth(theta: f64) -> Self {
        QuadWeight { kind: WeightKind::SmoothBump, theta, ..Default::default() }
    }

    pub fn with_restriction(mut self, r: Restriction) -> Self {
        self.restriction = r;
        self
    }

    #[inline]
    fn window_value(&self, s: f64) -> f64 {
        match self.kind {
            WeightKind::Indicator => {
                if s.abs() <= self.theta {
                    1.0
                } else {
                    0.0
                }
            }
            WeightKind::SmoothBump => smooth_weight_hat(s / self.theta),
        }
    }
}

/// One admissible `v` (or `w`) at a fixed `u`: the half-frequency
/// `v = (a-b)/2` of the pair `(a, b) = (u+v, u-v)`, its symbol value, and
/// the product `f(a) f(b)`.
#[derive(Clone, Copy)]
struct HalfEntry {
    vf: (f64, f64),
    h: f64,
    fp: f64,
}

#[inline]
fn in_octant(vf: (f64, f64), h: f64, j: Octant) -> bool {
    let s = |x: f64, sign: i8| if sign > 0 { x >= 0.0 } else { x <= 0.0 };
    s(vf.0, j[0]) && s(vf.1, j[1]) && s(h, j[2])
}

#[inline]
fn restriction_passes(r: &Restriction, symbol: Symbol, v: &HalfEntry, w: &HalfEntry, c_a: f64, theta2: f64) -> bool {
    match r {
        Restriction::None => true,
        Restriction::A1 | Restriction::A2Plain => {
            let b = symbol.bilinear(v.vf, w.vf);
            let small = b * b <= c_a * (v.h * w.h).abs();
            matches!(r, Restriction::A1) == small
        }
        Restriction::A2Refined(j) => {
            let b = symbol.bilinear(v.vf, w.vf);
            b * b > c_a * (v.h * w.h).abs()
                && (v.h - w.h).abs() <= theta2
                && in_octant(v.vf, v.h, *j)
                && in_octant(w.vf, w.h, *j)
        }
    }
}

fn validate_weights(f: &[f64]) -> Result<(), FunctionalError> {
    for (i, &x) in f.iter().enumerate() {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(FunctionalError::BadWeight(i));
        }
    }
    Ok(())
}

/// Support bounding box as inclusive index ranges, or `None` if empty.
fn support_box(lattice: &Lattice, f: &[f64]) -> Option<((i64, i64), (i64, i64))> {
    let mut lo = (i64::MAX, i64::MAX);
    let mut hi = (i64::MIN, i64::MIN);
    let mut any = false;
    for (idx, &x) in f.iter().enumerate() {
        if x > 0.0 {
            let (k1, k2) = lattice.point(idx);
            lo = (lo.0.min(k1), lo.1.min(k2));
            hi = (hi.0.max(k1), hi.1.max(k2));
            any = true;
        }
    }
    any.then_some((lo, hi))
}

/// Entries at one doubled center `s = a + b`, in lattice order of `a`.
fn entries_at(
    lattice: &Lattice,
    f: &[f64],
    support: &[(i64, i64, f64)],
    symbol: Symbol,
    s1: i64,
    s2: i64,
) -> Vec<HalfEntry> {
    let (l, lam) = (lattice.len_x1(), lattice.lambda());
    let mut out = Vec::new();
    for &(a1, a2, fa) in support {
        let (b1, b2) = (s1 - a1, s2 - a2);
        let Some(bidx) = lattice.index(b1, b2) else { continue };
        let fb = f[bidx];
        if fb == 0.0 {
            continue;
        }
        let d1 = 2 * a1 - s1;
        let d2 = 2 * a2 - s2;
        let vf = (d1 as f64 / (2.0 * l), d2 as f64 / (2.0 * lam));
        out.push(HalfEntry { vf, h: symbol.eval(vf), fp: fa * fb });
    }
    out
}

const DEFAULT_BUDGET: u64 = 1 << 34;

/// The quadrilinear form. `f` holds nonnegative weights per lattice point in
/// enumeration order; `symbol` fixes `H`.
pub fn quad_form(
    lattice: &Lattice,
    f: &[f64],
    symbol: Symbol,
    weight: &QuadWeight,
) -> Result<f64, FunctionalError> {
    quad_form_with_budget(lattice, f, symbol, weight, DEFAULT_BUDGET)
}

pub fn quad_form_with_budget(
    lattice: &Lattice,
    f: &[f64],
    symbol: Symbol,
    weight: &QuadWeight,
    budget: u64,
) -> Result<f64, FunctionalError> {
    if f.len() != lattice.len() {
        return Err(FunctionalError::Lattice(LatticeError::CoefCount {
            expected: lattice.len(),
            got: f.len(),
        }));
    }
    validate_weights(f)?;
    let support: Vec<(i64, i64, f64)> = lattice
        .points()
        .zip(f)
        .filter(|&(_, &x)| x > 0.0)
        .map(|((k1, k2), &x)| (k1, k2, x))
        .collect();
    let m = support.len() as u64;
    if m.saturating_mul(m).saturating_mul(m) > budget {
        return Err(FunctionalError::Budget { support: support.len(), budget });
    }
    let Some((lo, hi)) = support_box(lattice, f) else {
        return Ok(0.0);
    };
    // centers s = a + b live in the doubled support box, s2-major ascending
    let centers: Vec<(i64, i64)> = (2 * lo.1..=2 * hi.1)
        .flat_map(|s2| (2 * lo.0..=2 * hi.0).map(move |s1| (s1, s2)))
        .collect();
    let partials: Vec<f64> = centers
        .par_iter()
        .map(|&(s1, s2)| {
            let entries = entries_at(lattice, f, &support, symbol, s1, s2);
            let mut partial = 0.0;
            for v in &entries {
                for w in &entries {
                    let win = weight.window_value(v.h - w.h);
                    if win == 0.0 {
                        continue;
                    }
                    if restriction_passes(&weight.restriction, symbol, v, w, weight.c_a, weight.theta2) {
                        partial += win * (v.fp * w.fp);
                    }
                }
            }
            partial
        })
        .collect();
    let area = lattice.box_area();
    let scale = 1.0 / (area * area * area);
    Ok(partials.into_iter().sum::<f64>() * scale)
}

/// Both sides of the `Q(f) <= C ||f||^4` comparison.
#[derive(Debug, Clone, Copy)]
pub struct QuadBound {
    pub value: f64,
    pub bound: f64,
    pub ratio: f64,
}

pub fn quad_form_bound(
    lattice: &Lattice,
    f: &[f64],
    symbol: Symbol,
    weight: &QuadWeight,
    c: f64,
) -> Result<QuadBound, FunctionalError> {
    let value = quad_form(lattice, f, symbol, weight)?;
    let l2sq: f64 = f.iter().map(|x| x * x).sum::<f64>() / lattice.box_area();
    let bound = c * l2sq * l2sq;
    let ratio = if bound > 0.0 { value / bound } else { f64::INFINITY };
    Ok(QuadBound { value, bound, ratio })
}

/// Pigeonhole diagnostic: for each integer `k`, the form restricted to
/// `|H(v)-k| <= 1` and `|H(w)-k| <= 1`, plus the enclosing `theta = 2`
/// window value for comparison.
#[derive(Debug, Clone)]
pub struct KDecomposition {
    pub per_k: Vec<(i64, f64)>,
    pub sum: f64,
    pub theta2_value: f64,
}

pub fn quad_form_k_decomposition(
    lattice: &Lattice,
    f: &[f64],
    symbol: Symbol,
) -> Result<KDecomposition, FunctionalError> {
    validate_weights(f)?;
    let support: Vec<(i64, i64, f64)> = lattice
        .points()
        .zip(f)
        .filter(|&(_, &x)| x > 0.0)
        .map(|((k1, k2), &x)| (k1, k2, x))
        .collect();
    let Some((lo, hi)) = support_box(lattice, f) else {
        return Ok(KDecomposition { per_k: Vec::new(), sum: 0.0, theta2_value: 0.0 });
    };
    let mut acc: std::collections::BTreeMap<i64, f64> = std::collections::BTreeMap::new();
    for s2 in 2 * lo.1..=2 * hi.1 {
        for s1 in 2 * lo.0..=2 * hi.0 {
            let entries = entries_at(lattice, f, &support, symbol, s1, s2);
            for v in &entries {
                for w in &entries {
                    let klo = (v.h - 1.0).max(w.h - 1.0).ceil() as i64;
                    let khi = (v.h + 1.0).min(w.h + 1.0).floor() as i64;
                    for k in klo..=khi {
                        *acc.entry(k).or_insert(0.0) += v.fp * w.fp;
                    }
                }
            }
        }
    }
    let area = lattice.box_area();
    let scale = 1.0 / (area * area * area);
    let per_k: Vec<(i64, f64)> = acc.into_iter().map(|(k, s)| (k, s * scale)).collect();
    let sum = per_k.iter().map(|&(_, s)| s).sum();
    let theta2_value = quad_form(lattice, f, symbol, &QuadWeight::indicator(2.0))?;
    Ok(KDecomposition { per_k, sum, theta2_value })
}

/// Power-law and log-law fits of a ratio sweep.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GrowthFit {
    /// slope of `log r` against `log n`
    pub power_exponent: f64,
    pub power_intercept: f64,
    /// rms residual of the power fit, log scale
    pub power_residual: f64,
    /// slope of `r^4` against `log n`
    pub log_coefficient: f64,
    pub log_intercept: f64,
    /// rms residual of the log-law fit relative to the mean of `r^4`
    pub log_residual: f64,
}

pub fn fit_growth(points: &[(f64, f64)]) -> Result<GrowthFit, FunctionalError> {
    let clean: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(n, r)| n > 0.0 && r > 0.0)
        .collect();
    let distinct = {
        let mut ns: Vec<f64> = clean.iter().map(|p| p.0).collect();
        ns.sort_by(f64::total_cmp);
        ns.dedup();
        ns.len()
    };
    if clean.len() < 4 || distinct < 2 {
        return Err(FunctionalError::DegenerateFit { need: 4, got: clean.len().min(distinct) });
    }
    let ln_n: Vec<f64> = clean.iter().map(|p| p.0.ln()).collect();
    let ln_r: Vec<f64> = clean.iter().map(|p| p.1.ln()).collect();
    let (pe, pi, pr) = least_squares(&ln_n, &ln_r);
    let r4: Vec<f64> = clean.iter().map(|p| p.1.powi(4)).collect();
    let (lc, li, lr_abs) = least_squares(&ln_n, &r4);
    let mean_r4 = r4.iter().sum::<f64>() / r4.len() as f64;
    Ok(GrowthFit {
        power_exponent: pe,
        power_intercept: pi,
        power_residual: pr,
        log_coefficient: lc,
        log_intercept: li,
        log_residual: if mean_r4 > 0.0 { lr_abs / mean_r4 } else { lr_abs },
    })
}
