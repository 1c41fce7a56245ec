//! Semi-algebraic sets in the plane with three measures: slice length at a
//! fixed height, the lattice-weighted measure over heights in (1/lambda)Z,
//! and the Euclidean area via adaptive quadrature of slice lengths.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::poly::{isolate_roots, Poly2, PolyU};

/// Declared limit on s*D, the constraint count times the maximum degree.
pub const COMPLEXITY_BUDGET: u32 = 64;

/// Degree ceiling per boundary polynomial; root isolation is sized for this.
pub const MAX_POLY_DEGREE: u32 = 16;

/// Guaranteed absolute accuracy of `slice_length`.
pub const SLICE_TOL: f64 = 1e-10;

const EUCLID_REL: f64 = 1e-6;
const EUCLID_ABS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("complexity s*D = {sd} exceeds budget {budget}")]
    Complexity { sd: u32, budget: u32 },
    #[error("boundary polynomial degree {degree} exceeds the root-isolation bound {max}")]
    RootBudget { degree: u32, max: u32 },
    #[error("set needs at least one clause with at least one constraint")]
    Empty,
    #[error("bounding box must be finite with positive extent")]
    BadBox,
    #[error("lattice spacing parameter must be positive and finite")]
    BadLambda,
    #[error("section center is degenerate (zero symbol value or zero size)")]
    DegenerateCenter,
    #[error("no admissible sample points")]
    NoSamples,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rel {
    Eq,
    Gt,
    Ge,
}

impl Rel {
    pub fn holds(self, x: f64) -> bool {
        match self {
            Rel::Eq => x == 0.0,
            Rel::Gt => x > 0.0,
            Rel::Ge => x >= 0.0,
        }
    }

    fn token(self) -> &'static str {
        match self {
            Rel::Eq => "=0",
            Rel::Gt => ">0",
            Rel::Ge => ">=0",
        }
    }

    fn from_token(tok: &str) -> Option<Rel> {
        match tok {
            "=0" => Some(Rel::Eq),
            ">0" => Some(Rel::Gt),
            ">=0" => Some(Rel::Ge),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub poly: Poly2,
    pub rel: Rel,
}

impl Constraint {
    pub fn ge(poly: Poly2) -> Self {
        Constraint { poly, rel: Rel::Ge }
    }

    pub fn gt(poly: Poly2) -> Self {
        Constraint { poly, rel: Rel::Gt }
    }
}

/// Conjunction of constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundingBox {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
}

impl BoundingBox {
    pub fn new(x1: (f64, f64), x2: (f64, f64)) -> Self {
        BoundingBox { x1, x2 }
    }

    pub fn centered(half1: f64, half2: f64) -> Self {
        BoundingBox {
            x1: (-half1, half1),
            x2: (-half2, half2),
        }
    }

    fn valid(&self) -> bool {
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && b > a;
        ok(self.x1) && ok(self.x2)
    }

    pub fn contains(&self, w1: f64, w2: f64) -> bool {
        w1 >= self.x1.0 && w1 <= self.x1.1 && w2 >= self.x2.0 && w2 <= self.x2.1
    }

    fn scaled(&self, factor: f64) -> Self {
        let stretch = |(a, b): (f64, f64)| {
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a) * factor;
            (mid - half, mid + half)
        };
        BoundingBox {
            x1: stretch(self.x1),
            x2: stretch(self.x2),
        }
    }
}

/// Finite union of polynomial-sign clauses intersected with a bounding box.
/// The box is the truncation: membership requires it, and no clause needs to
/// repeat it, so scaling the box genuinely probes truncation sensitivity.
#[derive(Clone, Debug)]
pub struct SemiAlgebraicSet {
    name: String,
    clauses: Vec<Clause>,
    bbox: BoundingBox,
}

impl SemiAlgebraicSet {
    pub fn new(
        name: impl Into<String>,
        clauses: Vec<Clause>,
        bbox: BoundingBox,
    ) -> Result<Self, MeasureError> {
        Self::with_budget(name, clauses, bbox, COMPLEXITY_BUDGET)
    }

    pub fn with_budget(
        name: impl Into<String>,
        clauses: Vec<Clause>,
        bbox: BoundingBox,
        budget: u32,
    ) -> Result<Self, MeasureError> {
        if clauses.is_empty() || clauses.iter().any(|c| c.constraints.is_empty()) {
            return Err(MeasureError::Empty);
        }
        if !bbox.valid() {
            return Err(MeasureError::BadBox);
        }
        let mut s = 0u32;
        let mut d = 0u32;
        for clause in &clauses {
            for c in &clause.constraints {
                s += 1;
                d = d.max(c.poly.degree());
            }
        }
        if d > MAX_POLY_DEGREE {
            return Err(MeasureError::RootBudget {
                degree: d,
                max: MAX_POLY_DEGREE,
            });
        }
        let sd = s * d.max(1);
        if sd > budget {
            return Err(MeasureError::Complexity { sd, budget });
        }
        Ok(SemiAlgebraicSet {
            name: name.into(),
            clauses,
            bbox,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    /// `(s, D, s*D)`: constraint count, max degree, declared complexity.
    pub fn complexity(&self) -> (u32, u32, u32) {
        let s = self.clauses.iter().map(|c| c.constraints.len() as u32).sum();
        let d = self
            .clauses
            .iter()
            .flat_map(|c| c.constraints.iter())
            .map(|c| c.poly.degree())
            .max()
            .unwrap_or(0);
        (s, d, s * d.max(1))
    }

    pub fn contains(&self, w1: f64, w2: f64) -> bool {
        self.bbox.contains(w1, w2)
            && self.clauses.iter().any(|clause| {
                clause
                    .constraints
                    .iter()
                    .all(|c| c.rel.holds(c.poly.eval(w1, w2)))
            })
    }

    /// Same clauses, bounding box stretched by `factor` about its center.
    pub fn with_bbox_scale(&self, factor: f64) -> Self {
        SemiAlgebraicSet {
            name: self.name.clone(),
            clauses: self.clauses.clone(),
            bbox: self.bbox.scaled(factor),
        }
    }

    /// Image under `w1 -> t*w1`; measures along the first axis scale by `t`.
    pub fn dilate_x1(&self, t: f64) -> Self {
        let clauses = self
            .clauses
            .iter()
            .map(|clause| Clause {
                constraints: clause
                    .constraints
                    .iter()
                    .map(|c| Constraint {
                        poly: c.poly.dilate_x1(t),
                        rel: c.rel,
                    })
                    .collect(),
            })
            .collect();
        SemiAlgebraicSet {
            name: self.name.clone(),
            clauses,
            bbox: BoundingBox {
                x1: (self.bbox.x1.0 * t, self.bbox.x1.1 * t),
                x2: self.bbox.x2,
            },
        }
    }

    /// Disjointified union of maximal intervals of `{w1 : (w1, w2) in set}`.
    pub fn slice_intervals(&self, w2: f64) -> Vec<(f64, f64)> {
        if w2 < self.bbox.x2.0 || w2 > self.bbox.x2.1 {
            return Vec::new();
        }
        let mut all = Vec::new();
        for clause in &self.clauses {
            clause_intervals(clause, w2, self.bbox.x1, &mut all);
        }
        union_intervals(all)
    }

    /// Total length of the slice at height `w2`, accurate to `SLICE_TOL`.
    pub fn slice_length(&self, w2: f64) -> f64 {
        self.slice_intervals(w2).iter().map(|(a, b)| b - a).sum()
    }

    /// `(1/lambda) * sum` of slice lengths over heights in `(1/lambda)Z`
    /// meeting the box. Slices are evaluated in parallel and summed in
    /// lattice order.
    pub fn rz_measure(&self, lambda: f64) -> Result<f64, MeasureError> {
        let ks = self.lattice_heights(lambda)?;
        let lengths: Vec<f64> = ks
            .par_iter()
            .map(|&k| self.slice_length(k as f64 / lambda))
            .collect();
        Ok(lengths.iter().sum::<f64>() / lambda)
    }

    /// Longest lattice slice and the height achieving it (first maximum).
    pub fn max_slice(&self, lambda: f64) -> Result<MaxSlice, MeasureError> {
        let ks = self.lattice_heights(lambda)?;
        let lengths: Vec<f64> = ks
            .par_iter()
            .map(|&k| self.slice_length(k as f64 / lambda))
            .collect();
        let mut best = MaxSlice {
            xi2: 0.0,
            length: 0.0,
        };
        for (&k, &len) in ks.iter().zip(&lengths) {
            if len > best.length {
                best = MaxSlice {
                    xi2: k as f64 / lambda,
                    length: len,
                };
            }
        }
        Ok(best)
    }

    fn lattice_heights(&self, lambda: f64) -> Result<Vec<i64>, MeasureError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(MeasureError::BadLambda);
        }
        let klo = (self.bbox.x2.0 * lambda - 1e-9).ceil() as i64;
        let khi = (self.bbox.x2.1 * lambda + 1e-9).floor() as i64;
        Ok((klo..=khi).collect())
    }

    /// Euclidean area by adaptive Simpson quadrature of the slice length,
    /// refined until successive estimates differ by less than 1e-6 relative
    /// or 1e-9 absolute. Jump discontinuities stall the local test; the
    /// depth cap turns their residue into the reported error estimate.
    pub fn euclid_measure(&self) -> EuclidOutcome {
        let (a, b) = self.bbox.x2;
        let coarse = 64;
        let h = (b - a) / coarse as f64;
        let mut rough = 0.0;
        for i in 0..=coarse {
            let w = if i == 0 || i == coarse { 0.5 } else { 1.0 };
            rough += w * self.slice_length(a + h * i as f64);
        }
        rough *= h;
        let tol = (EUCLID_REL * rough.abs()).max(EUCLID_ABS);
        let fa = self.slice_length(a);
        let fb = self.slice_length(b);
        let m = 0.5 * (a + b);
        let fm = self.slice_length(m);
        let s = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        let mut err = 0.0;
        let value = self.adaptive_simpson(a, m, b, fa, fm, fb, s, tol, 48, &mut err);
        let target = (EUCLID_REL * value.abs()).max(EUCLID_ABS);
        EuclidOutcome {
            value,
            error: err,
            converged: err <= 4.0 * target,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn adaptive_simpson(
        &self,
        a: f64,
        m: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        s: f64,
        tol: f64,
        depth: u32,
        err: &mut f64,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let fl = self.slice_length(lm);
        let fr = self.slice_length(rm);
        let sl = (m - a) / 6.0 * (fa + 4.0 * fl + fm);
        let sr = (b - m) / 6.0 * (fm + 4.0 * fr + fb);
        let d = sl + sr - s;
        if depth == 0 || d.abs() <= 15.0 * tol {
            *err += d.abs() / 15.0;
            return sl + sr + d / 15.0;
        }
        self.adaptive_simpson(a, lm, m, fa, fl, fm, sl, 0.5 * tol, depth - 1, err)
            + self.adaptive_simpson(m, rm, b, fm, fr, fb, sr, 0.5 * tol, depth - 1, err)
    }

    /// Number of strict direction changes of the slice length sampled on a
    /// uniform 512-cell grid over the box height, ignoring moves below 1e-9
    /// of the peak.
    pub fn monotonicity_changes(&self) -> usize {
        let n = 512;
        let (a, b) = self.bbox.x2;
        let g: Vec<f64> = (0..=n)
            .map(|i| self.slice_length(a + (b - a) * i as f64 / n as f64))
            .collect();
        let peak = g.iter().fold(0.0f64, |p, &x| p.max(x));
        let thresh = 1e-9 * peak.max(f64::MIN_POSITIVE);
        let mut dir = 0i8;
        let mut changes = 0;
        for w in g.windows(2) {
            let d = w[1] - w[0];
            if d.abs() <= thresh {
                continue;
            }
            let s = if d > 0.0 { 1 } else { -1 };
            if dir != 0 && s != dir {
                changes += 1;
            }
            dir = s;
        }
        changes
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MaxSlice {
    pub xi2: f64,
    pub length: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EuclidOutcome {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Both sides of the covering inequality for one set: the lattice measure
/// against area plus longest-slice correction, and the constant they imply.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaRecord {
    pub lhs: f64,
    pub area: f64,
    pub area_error: f64,
    pub area_converged: bool,
    pub max_slice: f64,
    pub max_slice_at: f64,
    pub implied_c: f64,
    pub monotonicity_changes: usize,
}

pub fn lemma_check(set: &SemiAlgebraicSet, lambda: f64) -> Result<LemmaRecord, MeasureError> {
    let lhs = set.rz_measure(lambda)?;
    let area = set.euclid_measure();
    let ms = set.max_slice(lambda)?;
    let denom = area.value + ms.length / lambda;
    let implied_c = if denom > 0.0 {
        lhs / denom
    } else {
        debug_assert!(lhs <= SLICE_TOL);
        0.0
    };
    Ok(LemmaRecord {
        lhs,
        area: area.value,
        area_error: area.error,
        area_converged: area.converged,
        max_slice: ms.length,
        max_slice_at: ms.xi2,
        implied_c,
        monotonicity_changes: set.monotonicity_changes(),
    })
}

/// Lattice measure before and after doubling the bounding box, quantifying
/// how much of the set the truncation window cuts off.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoxSensitivity {
    pub base: f64,
    pub doubled: f64,
    pub rel_change: f64,
}

pub fn box_sensitivity(
    set: &SemiAlgebraicSet,
    lambda: f64,
) -> Result<BoxSensitivity, MeasureError> {
    let base = set.rz_measure(lambda)?;
    let doubled = set.with_bbox_scale(2.0).rz_measure(lambda)?;
    Ok(BoxSensitivity {
        base,
        doubled,
        rel_change: (doubled - base) / base.max(f64::MIN_POSITIVE),
    })
}

fn clause_intervals(
    clause: &Clause,
    w2: f64,
    (lo, hi): (f64, f64),
    out: &mut Vec<(f64, f64)>,
) {
    let mut boundary = vec![lo, hi];
    let mut polys: Vec<(PolyU, Rel)> = Vec::with_capacity(clause.constraints.len());
    for c in &clause.constraints {
        let p = c.poly.restrict_w2(w2);
        if p.is_zero() {
            match c.rel {
                Rel::Gt => return,
                Rel::Eq | Rel::Ge => continue,
            }
        }
        if c.rel == Rel::Eq {
            // A nontrivial equation pins w1 to finitely many points.
            return;
        }
        boundary.extend(isolate_roots(&p, lo, hi));
        polys.push((p, c.rel));
    }
    boundary.sort_unstable_by(f64::total_cmp);
    boundary.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    let mut cur: Option<(f64, f64)> = None;
    for pair in boundary.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let m = 0.5 * (a + b);
        if polys.iter().all(|(p, rel)| rel.holds(p.eval(m))) {
            cur = match cur {
                Some((s, e)) if e == a => Some((s, b)),
                Some(done) => {
                    out.push(done);
                    Some((a, b))
                }
                None => Some((a, b)),
            };
        }
    }
    if let Some(done) = cur {
        out.push(done);
    }
}

fn union_intervals(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_unstable_by(|p, q| p.0.total_cmp(&q.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 + 1e-12 * last.1.abs().max(1.0) => {
                if b > last.1 {
                    last.1 = b;
                }
            }
            _ => out.push((a, b)),
        }
    }
    out
}

/// Render a set in the line-oriented clause format. Coefficients print in
/// shortest round-trip form, so parse(format(s)) reproduces s bitwise.
pub fn format_set(set: &SemiAlgebraicSet) -> String {
    let mut out = String::new();
    out.push_str(&format!("name {}\n", set.name()));
    let b = set.bbox();
    out.push_str(&format!(
        "bbox {} {} {} {}\n",
        b.x1.0, b.x1.1, b.x2.0, b.x2.1
    ));
    for clause in set.clauses() {
        out.push_str("clause ");
        for (i, c) in clause.constraints.iter().enumerate() {
            if i > 0 {
                out.push_str(" ; ");
            }
            out.push_str(&format!("{} {}", c.poly, c.rel.token()));
        }
        out.push('\n');
    }
    out
}

/// Parse the format written by `format_set`: `name`, `bbox`, then one
/// `clause` line per clause with `;`-separated constraints, each a sparse
/// monomial list `coeff e1 e2 ...` followed by a relation token.
pub fn parse_set(text: &str) -> Result<SemiAlgebraicSet, MeasureError> {
    let mut name: Option<String> = None;
    let mut bbox: Option<BoundingBox> = None;
    let mut clauses = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| MeasureError::Parse {
            line: lineno,
            msg: msg.to_string(),
        };
        if let Some(rest) = line.strip_prefix("name ") {
            name = Some(rest.trim().to_string());
        } else if let Some(rest) = line.strip_prefix("bbox ") {
            let nums: Vec<f64> = rest
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad("bbox expects four numbers"))?;
            if nums.len() != 4 {
                return Err(bad("bbox expects four numbers"));
            }
            bbox = Some(BoundingBox::new((nums[0], nums[1]), (nums[2], nums[3])));
        } else if let Some(rest) = line.strip_prefix("clause ") {
            let mut constraints = Vec::new();
            for part in rest.split(';') {
                let toks: Vec<&str> = part.split_whitespace().collect();
                if toks.len() < 4 || (toks.len() - 1) % 3 != 0 {
                    return Err(bad("constraint needs coeff/e1/e2 triples and a relation"));
                }
                let rel = Rel::from_token(toks[toks.len() - 1])
                    .ok_or_else(|| bad("unknown relation token"))?;
                let mut terms = Vec::new();
                for t in toks[..toks.len() - 1].chunks(3) {
                    let c: f64 = t[0].parse().map_err(|_| bad("bad coefficient"))?;
                    let e1: u32 = t[1].parse().map_err(|_| bad("bad exponent"))?;
                    let e2: u32 = t[2].parse().map_err(|_| bad("bad exponent"))?;
                    terms.push((e1, e2, c));
                }
                constraints.push(Constraint {
                    poly: Poly2::from_terms(&terms),
                    rel,
                });
            }
            clauses.push(Clause { constraints });
        } else {
            return Err(bad("expected name, bbox, or clause"));
        }
    }
    let name = name.unwrap_or_else(|| "unnamed".to_string());
    let bbox = bbox.ok_or(MeasureError::Parse {
        line: 0,
        msg: "missing bbox line".to_string(),
    })?;
    SemiAlgebraicSet::new(name, clauses, bbox)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_disk() -> SemiAlgebraicSet {
        let p = Poly2::from_terms(&[(0, 0, 1.0), (2, 0, -1.0), (0, 2, -1.0)]);
        SemiAlgebraicSet::new(
            "unit-disk",
            vec![Clause {
                constraints: vec![Constraint::ge(p)],
            }],
            BoundingBox::centered(1.0, 1.0),
        )
        .unwrap()
    }

    fn disk(r: f64) -> SemiAlgebraicSet {
        let p = Poly2::from_terms(&[(0, 0, r * r), (2, 0, -1.0), (0, 2, -1.0)]);
        SemiAlgebraicSet::new(
            "disk",
            vec![Clause {
                constraints: vec![Constraint::ge(p)],
            }],
            BoundingBox::centered(r, r),
        )
        .unwrap()
    }

    #[test]
    fn disk_slices_and_area() {
        let s = unit_disk();
        assert!((s.slice_length(0.0) - 2.0).abs() < 1e-10);
        assert!((s.slice_length(0.6) - 1.6).abs() < 1e-10);
        assert_eq!(s.slice_length(1.5), 0.0);
        let area = s.euclid_measure();
        assert!(area.converged);
        assert!((area.value - PI).abs() < 1e-6 * PI);
        assert_eq!(s.monotonicity_changes(), 1);
    }

    #[test]
    fn radius_two_disk_lattice_measure() {
        let s = disk(2.0);
        let rz = s.rz_measure(1.0).unwrap();
        let expected = 4.0 + 4.0 * 3.0f64.sqrt();
        assert!((rz - expected).abs() < 1e-9, "{rz} vs {expected}");
    }

    #[test]
    fn rectangle_lemma_record() {
        let x1 = Poly2::x1();
        let x2 = Poly2::x2();
        let one = Poly2::constant(1.0);
        let clause = Clause {
            constraints: vec![
                Constraint::ge(x1.clone()),
                Constraint::ge(&one - &x1),
                Constraint::ge(x2.clone()),
                Constraint::ge(&one - &x2),
            ],
        };
        let s = SemiAlgebraicSet::new(
            "unit-square",
            vec![clause],
            BoundingBox::new((0.0, 1.0), (0.0, 1.0)),
        )
        .unwrap();
        let rec = lemma_check(&s, 1.0).unwrap();
        assert!((rec.lhs - 2.0).abs() < 1e-10);
        assert!((rec.area - 1.0).abs() < 1e-7);
        assert!((rec.max_slice - 1.0).abs() < 1e-10);
        assert!((rec.implied_c - 1.0).abs() < 1e-6);
    }

    #[test]
    fn hyperbolic_band_slice_closed_form() {
        // |w1^2 - w2^2| <= 1 sliced at w2 = 3: w1^2 in [8, 10].
        let h = Poly2::from_terms(&[(2, 0, 1.0), (0, 2, -1.0)]);
        let s = SemiAlgebraicSet::new(
            "band",
            vec![Clause {
                constraints: vec![
                    Constraint::ge(&Poly2::constant(1.0) - &h),
                    Constraint::ge(&h + &Poly2::constant(1.0)),
                ],
            }],
            BoundingBox::centered(10.0, 10.0),
        )
        .unwrap();
        let expected = 2.0 * (10.0f64.sqrt() - 8.0f64.sqrt());
        assert!((s.slice_length(3.0) - expected).abs() < 1e-10);
    }

    #[test]
    fn union_of_overlapping_strips() {
        let x1 = Poly2::x1();
        let strip = |a: f64, b: f64| Clause {
            constraints: vec![
                Constraint::ge(&x1 - &Poly2::constant(a)),
                Constraint::ge(&Poly2::constant(b) - &x1),
            ],
        };
        let s = SemiAlgebraicSet::new(
            "strips",
            vec![strip(0.0, 2.0), strip(1.0, 3.0)],
            BoundingBox::new((-5.0, 5.0), (-1.0, 1.0)),
        )
        .unwrap();
        assert!((s.slice_length(0.0) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn equation_clauses() {
        let diag = Clause {
            constraints: vec![Constraint {
                poly: &Poly2::x1() - &Poly2::x2(),
                rel: Rel::Eq,
            }],
        };
        let s = SemiAlgebraicSet::new(
            "diagonal",
            vec![diag],
            BoundingBox::centered(1.0, 1.0),
        )
        .unwrap();
        assert_eq!(s.slice_length(0.3), 0.0);
        assert!(s.contains(0.3, 0.3));

        let trivial = Clause {
            constraints: vec![Constraint {
                poly: Poly2::zero(),
                rel: Rel::Eq,
            }],
        };
        let t = SemiAlgebraicSet::new(
            "everything",
            vec![trivial],
            BoundingBox::new((0.0, 2.0), (0.0, 1.0)),
        )
        .unwrap();
        assert!((t.slice_length(0.5) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dilation_scales_lattice_measure() {
        let s = disk(2.0);
        let t = 2.5;
        let d = s.dilate_x1(t);
        let base = s.rz_measure(1.0).unwrap();
        let scaled = d.rz_measure(1.0).unwrap();
        assert!((scaled - t * base).abs() < 1e-9 * scaled);
    }

    #[test]
    fn nested_sets_have_monotone_measures() {
        let small = disk(1.5);
        let big = disk(3.0);
        assert!(small.rz_measure(2.0).unwrap() <= big.rz_measure(2.0).unwrap());
        assert!(small.euclid_measure().value <= big.euclid_measure().value);
    }

    #[test]
    fn complexity_budget_enforced() {
        let cs: Vec<Constraint> = (0..33)
            .map(|i| Constraint::ge(Poly2::from_terms(&[(2, 0, 1.0), (0, 0, i as f64)])))
            .collect();
        let err = SemiAlgebraicSet::new(
            "too-big",
            vec![Clause { constraints: cs }],
            BoundingBox::centered(1.0, 1.0),
        )
        .unwrap_err();
        assert!(matches!(err, MeasureError::Complexity { sd: 66, .. }));
    }

    #[test]
    fn text_format_round_trips() {
        let s = unit_disk();
        let text = format_set(&s);
        let back = parse_set(&text).unwrap();
        assert_eq!(back.name(), s.name());
        assert_eq!(back.bbox(), s.bbox());
        assert_eq!(back.clauses(), s.clauses());

        // Uneven coefficients survive the trip bitwise.
        let p = Poly2::from_terms(&[(3, 1, 0.1 + 0.2), (0, 0, -1.0 / 3.0)]);
        let set = SemiAlgebraicSet::new(
            "awkward coefficients",
            vec![Clause {
                constraints: vec![Constraint::gt(p)],
            }],
            BoundingBox::new((-0.3, 1.7), (0.1, 0.9)),
        )
        .unwrap();
        let back = parse_set(&format_set(&set)).unwrap();
        assert_eq!(back.clauses(), set.clauses());
        assert_eq!(back.name(), "awkward coefficients");
    }

    #[test]
    fn box_doubling_detects_truncation() {
        // The band |w1^2 - w2^2| <= 1 keeps growing with the box.
        let h = Poly2::from_terms(&[(2, 0, 1.0), (0, 2, -1.0)]);
        let s = SemiAlgebraicSet::new(
            "band",
            vec![Clause {
                constraints: vec![
                    Constraint::ge(&Poly2::constant(1.0) - &h),
                    Constraint::ge(&h + &Poly2::constant(1.0)),
                ],
            }],
            BoundingBox::centered(8.0, 8.0),
        )
        .unwrap();
        let sens = box_sensitivity(&s, 1.0).unwrap();
        assert!(sens.rel_change > 0.05, "rel change {}", sens.rel_change);

        let bounded = box_sensitivity(&disk(2.0), 1.0).unwrap();
        assert!(bounded.rel_change.abs() < 1e-12);
    }
}
