//! Named set constructors: resonance annuli, the fixed-center sections whose
//! lattice measures the covering argument bounds, the bilinear interaction
//! section, and the (alpha, beta) regions reached by change of variables.
//! Polynomials are expanded exactly from the defining inequalities; the
//! bounding boxes are derived enclosures, validated by box-doubling tests.

use crate::functional::Octant;
use crate::rng::DetRng;

use super::poly::Poly2;
use super::set::{BoundingBox, Clause, Constraint, MeasureError, SemiAlgebraicSet};

fn h_poly() -> Poly2 {
    Poly2::from_terms(&[(2, 0, 1.0), (0, 2, -1.0)])
}

/// Constraints for `|p| <= width`.
fn abs_window(p: &Poly2, width: f64) -> [Constraint; 2] {
    [
        Constraint::ge(&Poly2::constant(width) - p),
        Constraint::ge(p + &Poly2::constant(width)),
    ]
}

/// `{w : |H(w) - c0| <= 1}` truncated to the sup-norm box of side `2n`.
pub fn hyperbolic_annulus(c0: f64, n: f64) -> Result<SemiAlgebraicSet, MeasureError> {
    let shifted = &h_poly() - &Poly2::constant(c0);
    SemiAlgebraicSet::new(
        format!("hyperbolic-annulus(c0={c0},n={n})"),
        vec![Clause {
            constraints: abs_window(&shifted, 1.0).to_vec(),
        }],
        BoundingBox::centered(n, n),
    )
}

/// `{w : |w1*w2 - c0| <= 1}` truncated to the sup-norm box of side `2n`.
pub fn saddle_annulus(c0: f64, n: f64) -> Result<SemiAlgebraicSet, MeasureError> {
    let shifted = Poly2::from_terms(&[(1, 1, 1.0), (0, 0, -c0)]);
    SemiAlgebraicSet::new(
        format!("saddle-annulus(c0={c0},n={n})"),
        vec![Clause {
            constraints: abs_window(&shifted, 1.0).to_vec(),
        }],
        BoundingBox::centered(n, n),
    )
}

/// Section at fixed `v` of the comparable-frequency region:
/// `{w : |H(v) - H(w)| <= 1, H(v,w)^2 <= 100 |H(v) H(w)|}`.
/// The absolute value on the right splits into two clauses by the sign of
/// `H(w)`. Requires `H(v) != 0`.
pub fn a1_section(v: (f64, f64)) -> Result<SemiAlgebraicSet, MeasureError> {
    let hv = v.0 * v.0 - v.1 * v.1;
    if hv == 0.0 || !hv.is_finite() {
        return Err(MeasureError::DegenerateCenter);
    }
    let hw = h_poly();
    let gap = &hw - &Poly2::constant(hv);
    let window = abs_window(&gap, 1.0);
    let bvw = Poly2::affine(v.0, -v.1, 0.0);
    let bsq = &bvw * &bvw;
    let clause = |sign: f64| {
        let mut cs = window.to_vec();
        cs.push(Constraint::ge(hw.scale(sign)));
        cs.push(Constraint::ge(&hw.scale(sign * 100.0 * hv.abs()) - &bsq));
        Clause { constraints: cs }
    };
    // In unit coordinates alpha = (w1+w2)/c, beta = (w1-w2)/d the set sits in
    // |alpha beta - 1| <= 1/|cd| with (alpha+beta)^2 <= 400 |alpha beta|,
    // which confines both coordinates to 21*sqrt(1 + 1/|H(v)|) and change of
    // basis back gives the box below.
    let c = v.0 + v.1;
    let d = v.0 - v.1;
    let m = 21.0 * (1.0 + 1.0 / hv.abs()).sqrt() + 1.0;
    let half = 0.5 * m * (c.abs() + d.abs());
    SemiAlgebraicSet::new(
        format!("a1-section(v=({},{}))", v.0, v.1),
        vec![clause(1.0), clause(-1.0)],
        BoundingBox::centered(half, half),
    )
}

fn a2_section(
    v: (f64, f64),
    theta: f64,
    octant: Option<Octant>,
    label: String,
) -> Result<SemiAlgebraicSet, MeasureError> {
    let hv = v.0 * v.0 - v.1 * v.1;
    if hv == 0.0 || !hv.is_finite() {
        return Err(MeasureError::DegenerateCenter);
    }
    let plus = [Poly2::affine(1.0, 0.0, v.0), Poly2::affine(0.0, 1.0, v.1)];
    let minus = [Poly2::affine(1.0, 0.0, -v.0), Poly2::affine(0.0, 1.0, -v.1)];
    let h_of = |p: &[Poly2; 2]| &(&p[0] * &p[0]) - &(&p[1] * &p[1]);
    let hp = h_of(&plus);
    let hm = h_of(&minus);
    let g = &hp * &hm;
    let gap = &h_poly() - &Poly2::constant(hv);
    let diffsq = &gap * &gap;
    // H(u+v) - H(u-v) collapses to the linear form 4(v1 u1 - v2 u2).
    let window = abs_window(&Poly2::affine(4.0 * v.0, -4.0 * v.1, 0.0), theta);
    let clause = |sign: f64| {
        let mut cs = window.to_vec();
        cs.push(Constraint::ge(g.scale(sign)));
        cs.push(Constraint::gt(&diffsq - &g.scale(sign * 100.0)));
        if let Some(j) = octant {
            for point in [&plus, &minus] {
                let s1 = point[0].scale(j[0] as f64);
                let s2 = point[1].scale(j[1] as f64);
                if j[2] > 0 {
                    cs.push(Constraint::ge(&s1 - &s2));
                    cs.push(Constraint::ge(s2));
                } else {
                    cs.push(Constraint::ge(&s2 - &s1));
                    cs.push(Constraint::ge(s1));
                }
            }
        }
        Clause { constraints: cs }
    };
    // In unit coordinates the window is |alpha + beta| <= theta/(2|H(v)|) and
    // the dominance constraint pins |alpha| near or below 1.
    let c = v.0 + v.1;
    let d = v.0 - v.1;
    let m = 2.5 + theta / (2.0 * hv.abs());
    let half = 0.5 * m * (c.abs() + d.abs());
    SemiAlgebraicSet::new(
        label,
        vec![clause(1.0), clause(-1.0)],
        BoundingBox::centered(half, half),
    )
}

/// Section at fixed `v` of the incomparable-frequency region:
/// `{u : |H(u+v) - H(u-v)| <= 1, (H(u) - H(v))^2 > 100 |H(u+v) H(u-v)|}`.
pub fn a2_plain_section(v: (f64, f64)) -> Result<SemiAlgebraicSet, MeasureError> {
    a2_section(
        v,
        1.0,
        None,
        format!("a2-plain-section(v=({},{}))", v.0, v.1),
    )
}

/// The refined section: window widened to 2 and both `u+v` and `u-v`
/// restricted to the sign octant `j` (signs of the coordinates and of the
/// symbol). For `j = (1,1,1)` the octant condition is exactly the chain
/// `u1+v1 >= u2+v2 >= 0`, `u1-v1 >= u2-v2 >= 0`.
pub fn a2_refined_section(v: (f64, f64), j: Octant) -> Result<SemiAlgebraicSet, MeasureError> {
    a2_section(
        v,
        2.0,
        Some(j),
        format!(
            "a2-refined-section(v=({},{}),j=({},{},{}))",
            v.0, v.1, j[0], j[1], j[2]
        ),
    )
}

/// Bilinear interaction section at paired frequencies `a`, `b`:
/// `{eta : |H(eta) + H(a+b-eta) - H(a) - H(b)| <= theta_res, |eta| ~ |b|}`,
/// comparability rendered as `|b|/3 <= |eta| <= 3|b|` in Euclidean norm.
pub fn eab(a: (f64, f64), b: (f64, f64), theta_res: f64) -> Result<SemiAlgebraicSet, MeasureError> {
    let nb2 = b.0 * b.0 + b.1 * b.1;
    if nb2 == 0.0 || !nb2.is_finite() {
        return Err(MeasureError::DegenerateCenter);
    }
    let s = (a.0 + b.0, a.1 + b.1);
    let ha = a.0 * a.0 - a.1 * a.1;
    let hb = b.0 * b.0 - b.1 * b.1;
    let tail = [Poly2::affine(-1.0, 0.0, s.0), Poly2::affine(0.0, -1.0, s.1)];
    let h_tail = &(&tail[0] * &tail[0]) - &(&tail[1] * &tail[1]);
    let res = &(&h_poly() + &h_tail) - &Poly2::constant(ha + hb);
    let q = Poly2::from_terms(&[(2, 0, 1.0), (0, 2, 1.0)]);
    let mut cs = abs_window(&res, theta_res).to_vec();
    cs.push(Constraint::ge(&q - &Poly2::constant(nb2 / 9.0)));
    cs.push(Constraint::ge(&Poly2::constant(9.0 * nb2) - &q));
    let half = 3.0 * nb2.sqrt() * 1.001;
    SemiAlgebraicSet::new(
        format!("eab(a=({},{}),b=({},{}))", a.0, a.1, b.0, b.1),
        vec![Clause { constraints: cs }],
        BoundingBox::centered(half, half),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovKind {
    Est11,
    Est21,
}

/// The (alpha, beta) regions produced by substituting c = v1+v2, d = v1-v2
/// and rescaling. `sim` renders "comparable" as a ratio bound; `dominance`
/// renders "much larger" as a strict ratio.
#[derive(Clone, Copy, Debug)]
pub struct ChangeOfVarsRegion {
    pub c: f64,
    pub d: f64,
    pub kind: CovKind,
    pub sim: f64,
    pub dominance: f64,
}

impl ChangeOfVarsRegion {
    pub fn new(c: f64, d: f64, kind: CovKind) -> Self {
        ChangeOfVarsRegion {
            c,
            d,
            kind,
            sim: 3.0,
            dominance: 100.0,
        }
    }

    pub fn into_set(self) -> Result<SemiAlgebraicSet, MeasureError> {
        let cd = self.c * self.d;
        if cd == 0.0 || !cd.is_finite() {
            return Err(MeasureError::DegenerateCenter);
        }
        let r = 1.0 / cd.abs();
        match self.kind {
            CovKind::Est11 => {
                // |alpha beta - 1| <= 1/|cd|, |alpha| ~ |beta|.
                if !(self.sim > 0.0) {
                    return Err(MeasureError::DegenerateCenter);
                }
                let ab = Poly2::from_terms(&[(1, 1, 1.0), (0, 0, -1.0)]);
                let a2 = Poly2::from_terms(&[(2, 0, 1.0)]);
                let b2 = Poly2::from_terms(&[(0, 2, 1.0)]);
                let s2 = self.sim * self.sim;
                let mut cs = abs_window(&ab, r).to_vec();
                cs.push(Constraint::ge(&b2.scale(s2) - &a2));
                cs.push(Constraint::ge(&a2.scale(s2) - &b2));
                let half = (self.sim * (1.0 + r)).sqrt() * 1.01;
                SemiAlgebraicSet::new(
                    format!("est11(cd={cd})"),
                    vec![Clause { constraints: cs }],
                    BoundingBox::centered(half, half),
                )
            }
            CovKind::Est21 => {
                // |alpha + beta| <= 1/|cd|,
                // |(alpha+1)(beta-1)| >> |(alpha-1)(beta+1)|.
                if !(self.dominance > 1.0) {
                    return Err(MeasureError::DegenerateCenter);
                }
                let sum = Poly2::affine(1.0, 1.0, 0.0);
                let x = &Poly2::affine(1.0, 0.0, 1.0) * &Poly2::affine(0.0, 1.0, -1.0);
                let y = &Poly2::affine(1.0, 0.0, -1.0) * &Poly2::affine(0.0, 1.0, 1.0);
                let k2 = self.dominance * self.dominance;
                let mut cs = abs_window(&sum, r).to_vec();
                cs.push(Constraint::gt(&(&x * &x) - &(&y * &y).scale(k2)));
                let kappa = self.dominance.sqrt();
                let half = (kappa + 1.0) / (kappa - 1.0) + r + 0.5;
                SemiAlgebraicSet::new(
                    format!("est21(cd={cd})"),
                    vec![Clause { constraints: cs }],
                    BoundingBox::centered(half, half),
                )
            }
        }
    }
}

pub fn est11_set(c: f64, d: f64) -> Result<SemiAlgebraicSet, MeasureError> {
    ChangeOfVarsRegion::new(c, d, CovKind::Est11).into_set()
}

pub fn est21_set(c: f64, d: f64) -> Result<SemiAlgebraicSet, MeasureError> {
    ChangeOfVarsRegion::new(c, d, CovKind::Est21).into_set()
}

/// Random rotated ellipse, honestly bounded, for the covering-constant corpus.
pub fn random_ellipse(rng: &mut DetRng) -> SemiAlgebraicSet {
    let p = (rng.uniform_in(-4.0, 4.0), rng.uniform_in(-4.0, 4.0));
    let a = rng.uniform_in(0.3, 4.0);
    let b = rng.uniform_in(0.3, 4.0);
    let th = rng.uniform_in(0.0, std::f64::consts::PI);
    let (st, ct) = th.sin_cos();
    let u = Poly2::affine(ct, st, -ct * p.0 - st * p.1);
    let w = Poly2::affine(-st, ct, st * p.0 - ct * p.1);
    let poly = &Poly2::constant(a * a * b * b) - &(&(&u * &u).scale(b * b) + &(&w * &w).scale(a * a));
    let reach = a.max(b) * 1.01;
    SemiAlgebraicSet::new(
        format!("ellipse(p=({:.3},{:.3}),a={a:.3},b={b:.3})", p.0, p.1),
        vec![Clause {
            constraints: vec![Constraint::ge(poly)],
        }],
        BoundingBox::new(
            (p.0 - reach, p.0 + reach),
            (p.1 - reach, p.1 + reach),
        ),
    )
    .expect("ellipse parameters are always admissible")
}

/// Random circular annulus for the covering-constant corpus.
pub fn random_annulus(rng: &mut DetRng) -> SemiAlgebraicSet {
    let p = (rng.uniform_in(-4.0, 4.0), rng.uniform_in(-4.0, 4.0));
    let rin = rng.uniform_in(0.2, 3.0);
    let rout = rin + rng.uniform_in(0.3, 3.0);
    let q = Poly2::from_terms(&[
        (2, 0, 1.0),
        (0, 2, 1.0),
        (1, 0, -2.0 * p.0),
        (0, 1, -2.0 * p.1),
        (0, 0, p.0 * p.0 + p.1 * p.1),
    ]);
    let reach = rout * 1.01;
    SemiAlgebraicSet::new(
        format!("annulus(p=({:.3},{:.3}),r=[{rin:.3},{rout:.3}])", p.0, p.1),
        vec![Clause {
            constraints: vec![
                Constraint::ge(&q - &Poly2::constant(rin * rin)),
                Constraint::ge(&Poly2::constant(rout * rout) - &q),
            ],
        }],
        BoundingBox::new(
            (p.0 - reach, p.0 + reach),
            (p.1 - reach, p.1 + reach),
        ),
    )
    .expect("annulus parameters are always admissible")
}

/// Alternating ellipse/annulus corpus of the requested size.
pub fn lemma_corpus(rng: &mut DetRng, count: usize) -> Vec<SemiAlgebraicSet> {
    (0..count)
        .map(|i| {
            if i % 2 == 0 {
                random_ellipse(rng)
            } else {
                random_annulus(rng)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::set::box_sensitivity;

    #[test]
    fn centers_belong_to_their_sections() {
        let v = (5.0, 3.0);
        let s = a1_section(v).unwrap();
        assert!(s.contains(v.0, v.1));
        let (cnt, deg, sd) = s.complexity();
        assert_eq!((cnt, deg), (8, 2));
        assert!(sd <= 64);

        // u = 0 sits in neither section: the gap constraint is strict.
        let p = a2_plain_section(v).unwrap();
        assert!(!p.contains(0.0, 0.0));
    }

    #[test]
    fn refined_section_stays_within_budget() {
        let s = a2_refined_section((3.0, 2.0), [1, 1, 1]).unwrap();
        let (cnt, deg, sd) = s.complexity();
        assert_eq!((cnt, deg, sd), (16, 4, 64));
    }

    #[test]
    fn derived_boxes_do_not_clip() {
        for set in [
            a1_section((5.0, 3.0)).unwrap(),
            a1_section((2.0, 1.0)).unwrap(),
            a2_plain_section((3.0, 2.0)).unwrap(),
            a2_refined_section((3.0, 2.0), [1, 1, 1]).unwrap(),
            a2_refined_section((2.0, -1.0), [-1, 1, -1]).unwrap(),
            est11_set(2.0, 0.5).unwrap(),
            est21_set(5.0, 2.0).unwrap(),
            eab((12.0, 3.0), (2.0, 1.0), 1.0).unwrap(),
        ] {
            let sens = box_sensitivity(&set, 1.0).unwrap();
            assert!(
                sens.rel_change.abs() < 1e-9,
                "{} grew {} under box doubling",
                set.name(),
                sens.rel_change
            );
        }
    }

    #[test]
    fn eab_contains_second_frequency() {
        let a = (12.0, 3.0);
        let b = (2.0, 1.0);
        let s = eab(a, b, 1.0).unwrap();
        // eta = b zeroes the resonance expression exactly.
        assert!(s.contains(b.0, b.1));
        assert!(!s.contains(0.0, 0.0));
    }

    #[test]
    fn est_measures_scale_inversely() {
        let mut products = Vec::new();
        for cd in [1.0, 10.0, 100.0] {
            let set = est11_set(cd, 1.0).unwrap();
            let area = set.euclid_measure();
            assert!(area.converged);
            products.push(area.value * cd);
        }
        // Asymptotically the band integral gives 4 ln 3 = 4.394.
        for &p in &products {
            assert!(p > 3.5 && p < 5.2, "product {p}");
        }
        let k = products.iter().fold(0.0f64, |m, &p| m.max(p));
        let probe = est11_set(10.0, 1.0).unwrap().euclid_measure().value;
        assert!(probe <= k / 10.0 * 1.0001);
    }

    #[test]
    fn corpus_is_well_formed() {
        let mut rng = DetRng::new(7);
        let corpus = lemma_corpus(&mut rng, 10);
        assert_eq!(corpus.len(), 10);
        for set in &corpus {
            let (_, _, sd) = set.complexity();
            assert!(sd <= 64);
            assert!(set.rz_measure(1.0).unwrap().is_finite());
        }
    }
}
