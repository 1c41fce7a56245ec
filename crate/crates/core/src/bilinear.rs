//! Space-time `L^2` norms of products of two frequency-separated free
//! waves, extremizing ensembles, regime scaling fits, and the resonance
//! window measure behind the product bound.
//!
//! Two evaluation routes exist for the product norm. The quadrature route
//! reuses the dense slice sweep and integrates `|u1 u2|^2` over the plan's
//! time nodes. The exact route expands the square over mode pairs and
//! integrates each oscillation in closed form over `[0, 1]`:
//!
//! `‖u1 u2‖^2 = (L lambda)^{-3} sum_s sum_{p+q = s, p'+q' = s}
//!              a_p b_q conj(a_p' b_q') T(Omega_pq - Omega_p'q')`
//!
//! with `T(w) = ∫_0^1 e(-w t) dt` and `Omega_pq = H(p) + H(q)`. Pairs with
//! different frequency sums `s` are orthogonal over the spatial box, so
//! the cost is `sum_s g_s^2` for group sizes `g_s`, independent of the
//! lattice size. Narrow supports therefore stay affordable at cutoffs
//! where a dense spatial grid would not even fit in memory, which is what
//! the scaling grids below need.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{Geometry, Lattice, LatticeError, SpectralField, MIN_ASPECT};
use crate::measure::{catalog, MeasureError};
use crate::propagator::{sweep_slices2, EvolutionPlan, PlanError};
use crate::rng::DetRng;
use crate::symbol::Symbol;
use crate::util::{e2pi, least_squares};

/// Hard cap on mode pairs in the exact route.
pub const PAIR_BUDGET: usize = 1 << 24;

/// Lattice-point cap for materializing dense fields on the quadrature
/// route.
pub const DENSE_BUDGET: usize = 1 << 22;

/// A grid point claims a regime when its bound term exceeds the other by
/// this factor.
pub const REGIME_DOMINANCE: f64 = 4.0;

/// Switch to the series form of the unit-window phase average below this.
const TAYLOR_CUT: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum BilinearError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("fields live on different lattices")]
    LatticeMismatch,
    #[error("mode off the lattice: ({k1}, {k2})")]
    ModeOffLattice { k1: i64, k2: i64 },
    #[error("scales need n1 >= 4 n2 >= 4, got n1 = {n1}, n2 = {n2}")]
    ScaleOrder { n1: f64, n2: f64 },
    #[error("{pairs} mode pairs exceed the exact-route budget {max}")]
    PairBudget { pairs: usize, max: usize },
    #[error("{points} lattice points exceed the dense-route budget {max}")]
    DenseRoute { points: usize, max: usize },
    #[error("plan does not match the config lattice and symbol")]
    PlanMismatch,
    #[error("field is empty after the dyadic projection")]
    EmptyProjection,
    #[error("ensemble draw produced no modes")]
    EmptyDraw,
    #[error("{axis} regime holds {got} distinct abscissae, needs {need}")]
    RegimeEmpty { axis: &'static str, got: usize, need: usize },
    #[error("scaling stat must be positive and finite, got {stat}")]
    BadStat { stat: f64 },
}

/// Finitely many modes on a lattice, kept in enumeration order
/// (`k2`-major). The dense counterpart is only materialized for the
/// quadrature route, so supports can live on lattices far beyond any
/// spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseField {
    lattice: Lattice,
    modes: Vec<(i64, i64, Complex64)>,
}

impl SparseField {
    /// Collects `(k1, k2, amplitude)` triples; duplicates are summed.
    pub fn new(
        lattice: Lattice,
        modes: Vec<(i64, i64, Complex64)>,
    ) -> Result<Self, BilinearError> {
        let mut keyed: BTreeMap<(i64, i64), Complex64> = BTreeMap::new();
        for (k1, k2, a) in modes {
            if lattice.index(k1, k2).is_none() {
                return Err(BilinearError::ModeOffLattice { k1, k2 });
            }
            *keyed.entry((k2, k1)).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        let modes = keyed.into_iter().map(|((k2, k1), a)| (k1, k2, a)).collect();
        Ok(SparseField { lattice, modes })
    }

    pub fn from_dense(field: &SpectralField) -> Self {
        let modes = field.support().collect();
        SparseField { lattice: *field.lattice(), modes }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn modes(&self) -> &[(i64, i64, Complex64)] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Same normalization as the dense field: `sqrt(sum |a|^2 / (L lambda))`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.modes.iter().map(|&(_, _, a)| a.norm_sqr()).sum();
        (s / self.lattice.box_area()).sqrt()
    }

    /// Keep the dyadic shell `m/2 < |xi|_sup <= m`, matching the dense
    /// shell projection.
    pub fn restrict_shell(&self, m: f64) -> Self {
        let modes = self
            .modes
            .iter()
            .copied()
            .filter(|&(k1, k2, _)| {
                let s = self.lattice.freq_sup_norm(k1, k2);
                s > m / 2.0 + 1e-12 && s <= m + 1e-12
            })
            .collect();
        SparseField { lattice: self.lattice, modes }
    }

    /// Dense counterpart; refuses lattices beyond [`DENSE_BUDGET`].
    pub fn to_dense(&self) -> Result<SpectralField, BilinearError> {
        if self.lattice.len() > DENSE_BUDGET {
            return Err(BilinearError::DenseRoute {
                points: self.lattice.len(),
                max: DENSE_BUDGET,
            });
        }
        let mut out = SpectralField::zero(self.lattice);
        for &(k1, k2, a) in &self.modes {
            out.set(k1, k2, a).expect("mode validated at construction");
        }
        Ok(out)
    }
}

/// Distinct lattice points from a `k`-box with a keep predicate, drawn
/// deterministically: small boxes are enumerated and subsampled, large
/// ones rejection-sampled. Returns up to `want` points in enumeration
/// order.
fn draw_points(
    lattice: &Lattice,
    k1_range: (i64, i64),
    k2_range: (i64, i64),
    keep: impl Fn(i64, i64) -> bool,
    want: usize,
    rng: &mut DetRng,
) -> Vec<(i64, i64)> {
    let (a1, b1) = (k1_range.0.max(-lattice.k1max()), k1_range.1.min(lattice.k1max()));
    let (a2, b2) = (k2_range.0.max(-lattice.k2max()), k2_range.1.min(lattice.k2max()));
    if a1 > b1 || a2 > b2 || want == 0 {
        return Vec::new();
    }
    let total = (b1 - a1 + 1) as u128 * (b2 - a2 + 1) as u128;
    let mut picked: BTreeMap<(i64, i64), ()> = BTreeMap::new();
    if total <= (1 << 16) {
        let mut all = Vec::new();
        for k2 in a2..=b2 {
            for k1 in a1..=b1 {
                if keep(k1, k2) {
                    all.push((k2, k1));
                }
            }
        }
        if all.len() > want {
            for i in rng.subsample(all.len(), want) {
                picked.insert(all[i], ());
            }
        } else {
            picked.extend(all.into_iter().map(|p| (p, ())));
        }
    } else {
        let cap = 256 + 96 * want;
        let mut tries = 0;
        while picked.len() < want && tries < cap {
            tries += 1;
            let k1 = rng.int_in(a1, b1);
            let k2 = rng.int_in(a2, b2);
            if keep(k1, k2) {
                picked.insert((k2, k1), ());
            }
        }
    }
    picked.into_keys().map(|(k2, k1)| (k1, k2)).collect()
}

/// Gaussian amplitudes on up to `want` distinct points of the sup-norm
/// shell `lo < |xi|_sup <= hi`.
pub fn sparse_shell(
    lattice: &Lattice,
    lo: f64,
    hi: f64,
    want: usize,
    rng: &mut DetRng,
) -> SparseField {
    let b1 = (hi * lattice.len_x1()).floor() as i64;
    let b2 = (hi * lattice.lambda()).floor() as i64;
    let points = draw_points(
        lattice,
        (-b1, b1),
        (-b2, b2),
        |k1, k2| {
            let s = lattice.freq_sup_norm(k1, k2);
            s > lo + 1e-12 && s <= hi + 1e-12
        },
        want,
        rng,
    );
    let modes = points.into_iter().map(|(k1, k2)| (k1, k2, rng.complex_gaussian())).collect();
    SparseField { lattice: *lattice, modes }
}

/// Unit amplitudes on every lattice mode of one `xi_2` row with
/// `xi_1 in [lo, hi]`. Aligned phases keep the pair sums coherent, which
/// is what the extremizing families below rely on.
pub fn sparse_tube(lattice: &Lattice, row: i64, lo: f64, hi: f64) -> SparseField {
    let len = lattice.len_x1();
    let a = (lo * len).ceil() as i64;
    let b = (hi * len).floor() as i64;
    let mut modes = Vec::new();
    if row.abs() <= lattice.k2max() {
        for k1 in a.max(-lattice.k1max())..=b.min(lattice.k1max()) {
            modes.push((k1, row, Complex64::new(1.0, 0.0)));
        }
    }
    SparseField { lattice: *lattice, modes }
}

/// `∫_0^1 e(-w t) dt`, the unit-window average of a rotating phase.
pub fn phase_average(w: f64) -> Complex64 {
    if w.abs() < TAYLOR_CUT {
        phase_average_series(w)
    } else {
        (Complex64::new(1.0, 0.0) - e2pi(-w)) / Complex64::new(0.0, 2.0 * PI * w)
    }
}

/// Cubic series for small arguments; error below `1e-25` at the cutover.
fn phase_average_series(w: f64) -> Complex64 {
    let s = PI * w;
    Complex64::new(1.0 - s * s * (2.0 / 3.0), -s + s * s * s / 3.0)
}

/// One frequency-sum group: diagonal mass plus Hermitian-folded cross
/// terms. Unit phases `e(-Omega)` are hoisted so the inner loop is free of
/// trigonometry.
fn group_contribution(entries: &[(f64, Complex64)]) -> f64 {
    let zs: Vec<Complex64> = entries.iter().map(|&(w, _)| e2pi(-w)).collect();
    let mut acc = 0.0;
    for i in 0..entries.len() {
        let (wi, ai) = entries[i];
        acc += ai.norm_sqr();
        for j in 0..i {
            let (wj, aj) = entries[j];
            let dw = wi - wj;
            let t = if dw.abs() < TAYLOR_CUT {
                phase_average_series(dw)
            } else {
                (Complex64::new(1.0, 0.0) - zs[i] * zs[j].conj())
                    / Complex64::new(0.0, 2.0 * PI * dw)
            };
            acc += 2.0 * (ai * aj.conj() * t).re;
        }
    }
    acc
}

/// `L^2([0,1] x box)` norm of the product of the two free evolutions,
/// integrated exactly in time. Empty factors give zero.
pub fn product_norm_exact(
    f1: &SparseField,
    f2: &SparseField,
    symbol: Symbol,
) -> Result<f64, BilinearError> {
    if f1.lattice() != f2.lattice() {
        return Err(BilinearError::LatticeMismatch);
    }
    let pairs = f1.len().saturating_mul(f2.len());
    if pairs > PAIR_BUDGET {
        return Err(BilinearError::PairBudget { pairs, max: PAIR_BUDGET });
    }
    if f1.is_empty() || f2.is_empty() {
        return Ok(0.0);
    }
    let lat = *f1.lattice();
    let right: Vec<(i64, i64, Complex64, f64)> = f2
        .modes()
        .iter()
        .map(|&(k1, k2, b)| (k1, k2, b, symbol.eval(lat.freq(k1, k2))))
        .collect();
    let mut groups: BTreeMap<(i64, i64), Vec<(f64, Complex64)>> = BTreeMap::new();
    for &(p1, p2, a) in f1.modes() {
        let hp = symbol.eval(lat.freq(p1, p2));
        for &(q1, q2, b, hq) in &right {
            groups.entry((p2 + q2, p1 + q1)).or_default().push((hp + hq, a * b));
        }
    }
    let groups: Vec<Vec<(f64, Complex64)>> = groups.into_values().collect();
    let parts: Vec<f64> = groups.par_iter().map(|g| group_contribution(g)).collect();
    let total: f64 = parts.iter().sum();
    let area = lat.box_area();
    Ok((total / (area * area * area)).max(0.0).sqrt())
}

/// Same norm through the dense slice sweep and the plan's time quadrature.
/// Cross-checks the exact route at sizes where a spatial grid exists.
pub fn product_norm_sweep(
    plan: &EvolutionPlan,
    f1: &SpectralField,
    f2: &SpectralField,
) -> Result<f64, BilinearError> {
    if f1.lattice() != plan.lattice() || f2.lattice() != plan.lattice() {
        return Err(BilinearError::LatticeMismatch);
    }
    let window = *plan.window();
    let partials = sweep_slices2(plan, f1.coef(), f2.coef(), |sa, sb, eng, range| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); eng.phys().len()];
        let mut acc = 0.0;
        for (j, i) in range.enumerate() {
            if j > 0 {
                sa.advance();
                sb.advance();
            }
            eng.synth(&sa.cur);
            scratch.copy_from_slice(eng.phys());
            eng.synth(&sb.cur);
            acc += window.quad_weight(i) * crate::engine::GridEngine::product_sq_sum(&scratch, eng.phys());
        }
        acc
    });
    let total: f64 = partials.into_iter().sum();
    let (m1, m2) = plan.grid();
    let area = plan.lattice().box_area();
    Ok((total / (area * area * area * (m1 * m2) as f64)).max(0.0).sqrt())
}

/// Which extremizing families an ensemble mixes in beside the Gaussian
/// shell pairs.
///
/// A shared-row pair puts both windows on one `xi_2` row, separated in
/// `xi_1`: group velocities differ by the full scale gap, the transversal
/// interaction. A stacked-rows pair puts the windows on distant rows with
/// overlapping `xi_1`: equal velocities, the parallel interaction whose
/// product is invariant along `x_2` and feels the torus size directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FamilyMix {
    Full,
    Transverse,
    Parallel,
}

/// Scales, ensemble shape and evaluation route for product-norm studies.
#[derive(Debug, Clone)]
pub struct BilinearConfig {
    pub n1: f64,
    pub n2: f64,
    pub lambda: f64,
    pub members: usize,
    pub seed: u64,
    pub mix: FamilyMix,
    pub symbol: Symbol,
    /// Quadrature route when set; closed-form time integral when `None`.
    pub plan: Option<EvolutionPlan>,
}

impl BilinearConfig {
    pub fn new(n1: f64, n2: f64, lambda: f64) -> Result<Self, BilinearError> {
        let cfg = BilinearConfig {
            n1,
            n2,
            lambda,
            members: 6,
            seed: 7,
            mix: FamilyMix::Full,
            symbol: Symbol::Hyperbolic,
            plan: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BilinearError> {
        if !(self.n2 >= 1.0 && self.n1 >= 4.0 * self.n2) {
            return Err(BilinearError::ScaleOrder { n1: self.n1, n2: self.n2 });
        }
        if let Some(plan) = &self.plan {
            if plan.lattice() != &self.lattice()? || plan.symbol() != self.symbol {
                return Err(BilinearError::PlanMismatch);
            }
        }
        Ok(())
    }

    /// Smallest admissible box at this aspect, cutoff at the high scale.
    pub fn lattice(&self) -> Result<Lattice, BilinearError> {
        Ok(Lattice::new(
            self.lambda,
            MIN_ASPECT * self.lambda.max(1.0),
            self.n1,
            Geometry::Rt,
        )?)
    }

    /// `sqrt(1/lambda + n2/n1)`, the scale-law envelope the ratios are
    /// measured against.
    pub fn envelope(&self) -> f64 {
        (1.0 / self.lambda + self.n2 / self.n1).sqrt()
    }
}

/// Projects both fields to their dyadic shells and evaluates the product
/// norm on the config's route.
pub fn bilinear_norm(
    cfg: &BilinearConfig,
    phi1: &SparseField,
    phi2: &SparseField,
) -> Result<f64, BilinearError> {
    cfg.validate()?;
    let lat = cfg.lattice()?;
    if phi1.lattice() != &lat || phi2.lattice() != &lat {
        return Err(BilinearError::LatticeMismatch);
    }
    let p1 = phi1.restrict_shell(cfg.n1);
    let p2 = phi2.restrict_shell(cfg.n2);
    if p1.is_empty() || p2.is_empty() {
        return Err(BilinearError::EmptyProjection);
    }
    match &cfg.plan {
        None => product_norm_exact(&p1, &p2, cfg.symbol),
        Some(plan) => product_norm_sweep(plan, &p1.to_dense()?, &p2.to_dense()?),
    }
}

/// One ensemble member: the measured norm against the factor masses and
/// the scale-law envelope.
#[derive(Debug, Clone, Serialize)]
pub struct BilinearSample {
    pub member: usize,
    pub family: &'static str,
    pub norm: f64,
    pub l2_product: f64,
    pub ratio: f64,
    pub ratio_to_envelope: f64,
}

fn shell_pair(
    lat: &Lattice,
    n1: f64,
    n2: f64,
    rng: &mut DetRng,
) -> (SparseField, SparseField) {
    let f1 = sparse_shell(lat, n1 / 2.0, n1, 384, rng);
    let f2 = sparse_shell(lat, n2 / 2.0, n2, 192, rng);
    (f1, f2)
}

/// The structured families are deterministic: a coherent witness gains
/// nothing from random placement, it would only blur the scaling fits.
/// Successive members sweep the leading center instead.
fn shared_row_pair(lat: &Lattice, n1: f64, n2: f64, variant: usize) -> (SparseField, SparseField) {
    let c1 = n1 * [0.65, 0.75, 0.85][variant % 3];
    let c2 = 0.75 * n2;
    let w2 = (0.2 * n2).min(0.5);
    let f1 = sparse_tube(lat, 0, c1 - 0.5, c1 + 0.5);
    let f2 = sparse_tube(lat, 0, c2 - w2, c2 + w2);
    (f1, f2)
}

fn stacked_rows_pair(lat: &Lattice, n1: f64, n2: f64, variant: usize) -> (SparseField, SparseField) {
    let hi = (n1 * lat.lambda() * [0.7, 0.75, 0.8][variant % 3]).round() as i64;
    let c2 = 0.75 * n2;
    let w2 = (0.2 * n2).min(0.5);
    let f1 = sparse_tube(lat, hi, -0.5, 0.5);
    let f2 = sparse_tube(lat, 0, c2 - w2, c2 + w2);
    (f1, f2)
}

/// Independent members, seeded per member, cycling through the mix's
/// families; the record keeps every draw so the peak and its provenance
/// stay inspectable.
pub fn bilinear_ensemble(cfg: &BilinearConfig) -> Result<Vec<BilinearSample>, BilinearError> {
    cfg.validate()?;
    let lat = cfg.lattice()?;
    let families: &[&'static str] = match cfg.mix {
        FamilyMix::Full => &["shells", "shared-row", "stacked-rows"],
        FamilyMix::Transverse => &["shells", "shared-row"],
        FamilyMix::Parallel => &["shells", "stacked-rows"],
    };
    let samples: Vec<Result<BilinearSample, BilinearError>> = (0..cfg.members)
        .into_par_iter()
        .map(|member| {
            let mut rng = DetRng::member(cfg.seed, member as u64);
            let family = families[member % families.len()];
            let variant = member / families.len();
            let (f1, f2) = match family {
                "shells" => shell_pair(&lat, cfg.n1, cfg.n2, &mut rng),
                "shared-row" => shared_row_pair(&lat, cfg.n1, cfg.n2, variant),
                _ => stacked_rows_pair(&lat, cfg.n1, cfg.n2, variant),
            };
            if f1.is_empty() || f2.is_empty() {
                return Err(BilinearError::EmptyDraw);
            }
            let norm = bilinear_norm(cfg, &f1, &f2)?;
            let l2_product = f1.restrict_shell(cfg.n1).l2_norm() * f2.restrict_shell(cfg.n2).l2_norm();
            let ratio = norm / l2_product;
            Ok(BilinearSample {
                member,
                family,
                norm,
                l2_product,
                ratio,
                ratio_to_envelope: ratio / cfg.envelope(),
            })
        })
        .collect();
    samples.into_iter().collect()
}

/// Largest ratio in the ensemble; the scaling statistic.
pub fn peak_ratio(samples: &[BilinearSample]) -> f64 {
    samples.iter().map(|s| s.ratio).fold(0.0, f64::max)
}

/// One scaling-grid point with its measured statistic.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegimePoint {
    pub n1: f64,
    pub n2: f64,
    pub lambda: f64,
    pub stat: f64,
}

/// Per-regime power-law exponents of the scaling statistic.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalingFit {
    /// slope of `log stat` against `log(n2/n1)` where that term dominates
    pub ratio_exponent: f64,
    pub ratio_residual: f64,
    pub ratio_points: usize,
    /// slope of `log stat` against `log(1/lambda)` where that dominates
    pub lambda_exponent: f64,
    pub lambda_residual: f64,
    pub lambda_points: usize,
}

fn distinct(xs: &[f64]) -> usize {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Splits the grid by which envelope term dominates (factor
/// [`REGIME_DOMINANCE`]), then fits one log-log law per regime. Points in
/// the crossover band between the regimes are left out of both fits.
pub fn bilinear_scaling_fit(points: &[RegimePoint]) -> Result<ScalingFit, BilinearError> {
    let mut rx = Vec::new();
    let mut ry = Vec::new();
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for p in points {
        if !(p.stat > 0.0 && p.stat.is_finite()) {
            return Err(BilinearError::BadStat { stat: p.stat });
        }
        let x = p.n2 / p.n1;
        let y = 1.0 / p.lambda;
        if x >= REGIME_DOMINANCE * y {
            rx.push(x.ln());
            ry.push(p.stat.ln());
        } else if y >= REGIME_DOMINANCE * x {
            lx.push(y.ln());
            ly.push(p.stat.ln());
        }
    }
    if distinct(&rx) < 2 {
        return Err(BilinearError::RegimeEmpty { axis: "n2/n1", got: distinct(&rx), need: 2 });
    }
    if distinct(&lx) < 2 {
        return Err(BilinearError::RegimeEmpty { axis: "1/lambda", got: distinct(&lx), need: 2 });
    }
    let (rs, _, rr) = least_squares(&rx, &ry);
    let (ls, _, lr) = least_squares(&lx, &ly);
    Ok(ScalingFit {
        ratio_exponent: rs,
        ratio_residual: rr,
        ratio_points: rx.len(),
        lambda_exponent: ls,
        lambda_residual: lr,
        lambda_points: lx.len(),
    })
}

/// Scale-ratio regime: the torus term is pinned far below every `n2/n1`
/// on the grid, and the parallel family is left out so the measured peak
/// tracks the transversal interaction.
pub fn regime_ratio_grid(seed: u64) -> Vec<BilinearConfig> {
    [8.0, 16.0, 32.0, 64.0, 128.0]
        .into_iter()
        .map(|n1| {
            let mut cfg = BilinearConfig::new(n1, 2.0, 128.0).expect("static grid is valid");
            cfg.mix = FamilyMix::Transverse;
            cfg.seed = seed;
            cfg
        })
        .collect()
}

/// Torus regime: the scale ratio is pinned far below every `1/lambda`,
/// and the parallel family supplies the envelope-tracking peak.
pub fn regime_lambda_grid(seed: u64) -> Vec<BilinearConfig> {
    [1.0, 2.0, 4.0, 8.0, 16.0]
        .into_iter()
        .map(|lambda| {
            let mut cfg = BilinearConfig::new(256.0, 1.0, lambda).expect("static grid is valid");
            cfg.mix = FamilyMix::Parallel;
            cfg.seed = seed;
            cfg
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingStudy {
    pub points: Vec<RegimePoint>,
    pub fit: ScalingFit,
}

/// Runs both frozen regime grids and fits the two exponents.
pub fn run_scaling_study(seed: u64) -> Result<ScalingStudy, BilinearError> {
    let mut points = Vec::new();
    for cfg in regime_ratio_grid(seed).into_iter().chain(regime_lambda_grid(seed)) {
        let samples = bilinear_ensemble(&cfg)?;
        points.push(RegimePoint {
            n1: cfg.n1,
            n2: cfg.n2,
            lambda: cfg.lambda,
            stat: peak_ratio(&samples),
        });
    }
    let fit = bilinear_scaling_fit(&points)?;
    Ok(ScalingStudy { points, fit })
}

/// Envelope-normalized peak across a `lambda` sweep at fixed scales. The
/// statistic stays flat while the torus term dominates the envelope and
/// decays once the scale ratio takes over, with the knee near
/// `lambda = n1/n2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrossoverPoint {
    pub lambda: f64,
    pub stat: f64,
    pub stat_to_envelope: f64,
}

pub fn crossover_study(
    n1: f64,
    n2: f64,
    lambdas: &[f64],
    members: usize,
    seed: u64,
) -> Result<Vec<CrossoverPoint>, BilinearError> {
    lambdas
        .iter()
        .map(|&lambda| {
            let mut cfg = BilinearConfig::new(n1, n2, lambda)?;
            cfg.members = members;
            cfg.seed = seed;
            let stat = peak_ratio(&bilinear_ensemble(&cfg)?);
            Ok(CrossoverPoint { lambda, stat, stat_to_envelope: stat / cfg.envelope() })
        })
        .collect()
}

/// Pearson correlation of the logs, for reporting how two positive series
/// track each other.
pub fn log_correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let lx: Vec<f64> = xs.iter().map(|&x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Lattice-weighted measure of the resonance window around centers
/// `(a, b)`: the set of `eta` at the small scale where the symbol sum over
/// the split `eta, a+b-eta` stays within `theta_res` of the centers' own.
pub fn eab_measure(
    a: (f64, f64),
    b: (f64, f64),
    lambda: f64,
    theta_res: f64,
) -> Result<f64, BilinearError> {
    Ok(catalog::eab(a, b, theta_res)?.rz_measure(lambda)?)
}

/// One scale cell of the resonance-window grid: worst draw against the
/// envelope `1/lambda + n2/n1`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EabCell {
    pub n1: f64,
    pub n2: f64,
    pub lambda: f64,
    pub worst: f64,
    pub envelope: f64,
    pub quotient: f64,
}

/// Center draws for one cell: mostly `|a_1| >= n1/2` with the orthogonal
/// case covered by explicit extra draws, `b` anywhere in its dyadic shell.
/// The `xi_2` components snap to the lattice rows.
fn eab_draws(
    n1: f64,
    n2: f64,
    lambda: f64,
    draws: usize,
    rng: &mut DetRng,
) -> Vec<((f64, f64), (f64, f64))> {
    let snap = |v: f64| (v * lambda).round() / lambda;
    let horizontal = draws - (draws / 4).max(1);
    (0..draws)
        .map(|i| {
            let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
            let a = if i < horizontal {
                let a1 = sign * rng.uniform_in(n1 / 2.0, 0.999 * n1);
                let cap = (n1 * n1 - a1 * a1).max(0.0).sqrt();
                (a1, snap(rng.uniform_in(-0.99 * cap, 0.99 * cap)))
            } else {
                let a2 = snap(sign * rng.uniform_in(n1 / 2.0, 0.999 * n1));
                let cap = (n1 * n1 - a2 * a2).max(0.0).sqrt();
                (rng.uniform_in(-0.99 * cap, 0.99 * cap), a2)
            };
            let mut b = (0.75 * n2, 0.0);
            for _ in 0..16 {
                let r = rng.uniform_in(0.55 * n2, 0.95 * n2);
                let phi = rng.uniform_in(0.0, 2.0 * PI);
                let cand = (r * phi.cos(), snap(r * phi.sin()));
                let len = (cand.0 * cand.0 + cand.1 * cand.1).sqrt();
                if len > n2 / 2.0 && len <= n2 {
                    b = cand;
                    break;
                }
            }
            (a, b)
        })
        .collect()
}

pub fn eab_cell(
    n1: f64,
    n2: f64,
    lambda: f64,
    draws: usize,
    seed: u64,
) -> Result<EabCell, BilinearError> {
    if !(n2 >= 1.0 && n1 >= 4.0 * n2) {
        return Err(BilinearError::ScaleOrder { n1, n2 });
    }
    let mut rng = DetRng::member(seed, (n1 * 16.0 + n2 * 4.0 + lambda) as u64);
    let centers = eab_draws(n1, n2, lambda, draws.max(1), &mut rng);
    let measures: Vec<Result<f64, BilinearError>> = centers
        .par_iter()
        .map(|&(a, b)| eab_measure(a, b, lambda, 1.0))
        .collect();
    let mut worst = 0.0f64;
    for m in measures {
        worst = worst.max(m?);
    }
    let envelope = 1.0 / lambda + n2 / n1;
    Ok(EabCell { n1, n2, lambda, worst, envelope, quotient: worst / envelope })
}

/// Scale separation where the window bound holds with a uniform
/// constant. Below this the sampling ring `|eta| <= 3|b|` reaches the
/// critical point of the resonance function at `(a+b)/2` and the window
/// degenerates into a full hyperbola neighborhood.
pub const EAB_MIN_SEPARATION: f64 = 16.0;

/// Full cell grid over the dyadic scale sets; combinations below
/// [`EAB_MIN_SEPARATION`] are skipped.
pub fn eab_grid(
    n1s: &[f64],
    n2s: &[f64],
    lambdas: &[f64],
    draws: usize,
    seed: u64,
) -> Result<Vec<EabCell>, BilinearError> {
    let mut cells = Vec::new();
    for &n1 in n1s {
        for &n2 in n2s {
            if n1 < EAB_MIN_SEPARATION * n2 {
                continue;
            }
            for &lambda in lambdas {
                cells.push(eab_cell(n1, n2, lambda, draws, seed)?);
            }
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::l4_space_time_norm;
    use crate::window::{Bump, TimeWindow};

    fn lat16() -> Lattice {
        Lattice::new(1.0, 8.0, 16.0, Geometry::Rt).unwrap()
    }

    #[test]
    fn single_mode_pair_has_closed_form_norm() {
        let lat = lat16();
        let a = Complex64::new(2.0, 1.0);
        let b = Complex64::new(-1.0, 0.5);
        let f1 = SparseField::new(lat, vec![(96, 3, a)]).unwrap();
        let f2 = SparseField::new(lat, vec![(10, 1, b)]).unwrap();
        let got = product_norm_exact(&f1, &f2, Symbol::Hyperbolic).unwrap();
        let want = a.norm() * b.norm() / lat.box_area().powf(1.5);
        assert!((got - want).abs() <= 1e-15 * want, "got {got}, want {want}");

        let cfg = BilinearConfig::new(16.0, 2.0, 1.0).unwrap();
        let through_config = bilinear_norm(&cfg, &f1, &f2).unwrap();
        assert!((through_config - want).abs() <= 1e-15 * want);
    }

    #[test]
    fn empty_factor_gives_zero_and_projection_rejects_it() {
        let lat = lat16();
        let f1 = SparseField::new(lat, vec![(96, 3, Complex64::new(1.0, 0.0))]).unwrap();
        let empty = SparseField::new(lat, vec![]).unwrap();
        assert_eq!(product_norm_exact(&f1, &empty, Symbol::Hyperbolic).unwrap(), 0.0);

        // a low mode is wiped by the n2 shell projection
        let low = SparseField::new(lat, vec![(1, 0, Complex64::new(1.0, 0.0))]).unwrap();
        let cfg = BilinearConfig::new(16.0, 2.0, 1.0).unwrap();
        assert!(matches!(
            bilinear_norm(&cfg, &f1, &low),
            Err(BilinearError::EmptyProjection)
        ));
    }

    #[test]
    fn phase_average_matches_its_definition() {
        assert_eq!(phase_average(0.0), Complex64::new(1.0, 0.0));
        // whole rotations average to zero
        for w in [1.0, 3.0, -7.0] {
            assert!(phase_average(w).norm() < 1e-15);
        }
        // halfway: (1 - e(-1/2)) / (pi i) = 2 / (pi i)
        let half = phase_average(0.5);
        assert!((half - Complex64::new(0.0, -2.0 / PI)).norm() < 1e-15);
        for w in [0.9e-6, 1.0000001e-6, -1.1e-6] {
            let series = phase_average_series(w);
            let direct = (Complex64::new(1.0, 0.0) - e2pi(-w)) / Complex64::new(0.0, 2.0 * PI * w);
            assert!((series - direct).norm() < 1e-9);
        }
        for w in [0.3, 2.7, -15.2] {
            assert!(phase_average(w).norm() <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn product_norm_is_symmetric_in_the_factors() {
        let lat = lat16();
        let mut rng = DetRng::new(11);
        let f1 = sparse_shell(&lat, 8.0, 16.0, 30, &mut rng);
        let f2 = sparse_shell(&lat, 1.0, 2.0, 15, &mut rng);
        let ab = product_norm_exact(&f1, &f2, Symbol::Hyperbolic).unwrap();
        let ba = product_norm_exact(&f2, &f1, Symbol::Hyperbolic).unwrap();
        assert!((ab - ba).abs() <= 1e-12 * ab, "{ab} vs {ba}");
    }

    #[test]
    fn exact_route_matches_time_quadrature() {
        let lat = lat16();
        let mut rng = DetRng::new(23);
        let f1 = sparse_shell(&lat, 8.0, 16.0, 40, &mut rng);
        let f2 = sparse_shell(&lat, 1.0, 2.0, 20, &mut rng);
        let exact = product_norm_exact(&f1, &f2, Symbol::Hyperbolic).unwrap();

        let need = EvolutionPlan::required_intervals(&lat, 1.0);
        let window = TimeWindow::new(0.0, 1.0, 4 * need + 1, Bump::Sharp).unwrap();
        let plan = EvolutionPlan::new(lat, Symbol::Hyperbolic, window).unwrap();
        let swept =
            product_norm_sweep(&plan, &f1.to_dense().unwrap(), &f2.to_dense().unwrap()).unwrap();
        let rel = (exact - swept).abs() / exact;
        assert!(rel <= 2e-4, "exact {exact}, quadrature {swept}, rel {rel}");
    }

    #[test]
    fn product_norm_obeys_cauchy_schwarz_on_shared_nodes() {
        let lat = Lattice::new(1.0, 8.0, 8.0, Geometry::Rt).unwrap();
        let mut rng = DetRng::new(5);
        let f1 = sparse_shell(&lat, 4.0, 8.0, 25, &mut rng);
        let f2 = sparse_shell(&lat, 1.0, 2.0, 12, &mut rng);
        let plan = EvolutionPlan::auto(lat, Symbol::Hyperbolic, 0.0, 1.0, Bump::Sharp).unwrap();
        let d1 = f1.to_dense().unwrap();
        let d2 = f2.to_dense().unwrap();
        let prod = product_norm_sweep(&plan, &d1, &d2).unwrap();
        let l4a = l4_space_time_norm(&plan, &d1).unwrap();
        let l4b = l4_space_time_norm(&plan, &d2).unwrap();
        // same nodes, same weights: the discrete inequality is exact
        assert!(prod <= l4a * l4b * (1.0 + 1e-12), "{prod} vs {}", l4a * l4b);
    }

    #[test]
    fn draws_are_deterministic_in_region_and_feasible_on_huge_lattices() {
        let lat = Lattice::new(16.0, 128.0, 256.0, Geometry::Rt).unwrap();
        let mut rng = DetRng::new(3);
        let f = sparse_shell(&lat, 128.0, 256.0, 384, &mut rng);
        assert_eq!(f.len(), 384);
        for &(k1, k2, _) in f.modes() {
            let s = lat.freq_sup_norm(k1, k2);
            assert!(s > 128.0 && s <= 256.0 + 1e-12);
        }
        let mut rng2 = DetRng::new(3);
        let again = sparse_shell(&lat, 128.0, 256.0, 384, &mut rng2);
        assert_eq!(f, again);

        let tube = sparse_tube(&lat, 3072, -0.5, 0.5);
        assert_eq!(tube.len(), 129);
        for &(k1, k2, _) in tube.modes() {
            assert_eq!(k2, 3072);
            assert!(k1.abs() <= 64);
        }
    }

    #[test]
    fn config_rejects_inverted_scales() {
        assert!(matches!(
            BilinearConfig::new(8.0, 4.0, 1.0),
            Err(BilinearError::ScaleOrder { .. })
        ));
        assert!(BilinearConfig::new(16.0, 4.0, 1.0).is_ok());
    }

    #[test]
    fn ensemble_reports_finite_ratios_below_the_envelope_scale() {
        let mut cfg = BilinearConfig::new(16.0, 2.0, 2.0).unwrap();
        cfg.members = 6;
        cfg.seed = 41;
        let samples = bilinear_ensemble(&cfg).unwrap();
        assert_eq!(samples.len(), 6);
        let peak = peak_ratio(&samples);
        for s in &samples {
            assert!(s.ratio.is_finite() && s.ratio > 0.0);
            assert!(s.ratio <= peak);
            assert!(s.ratio_to_envelope <= 1.3, "family {} at {}", s.family, s.ratio_to_envelope);
        }
        assert!(samples.iter().any(|s| s.family == "stacked-rows"));
    }

    #[test]
    fn scaling_fit_recovers_exact_half_powers() {
        let mut points = Vec::new();
        for n1 in [8.0, 16.0, 32.0, 64.0] {
            points.push(RegimePoint {
                n1,
                n2: 2.0,
                lambda: 1e9,
                stat: (1e-9 + 2.0 / n1).sqrt(),
            });
        }
        for lambda in [1.0, 2.0, 4.0, 8.0, 16.0] {
            points.push(RegimePoint {
                n1: 1e9,
                n2: 1.0,
                lambda,
                stat: (1.0 / lambda + 1e-9).sqrt(),
            });
        }
        let fit = bilinear_scaling_fit(&points).unwrap();
        assert!((fit.ratio_exponent - 0.5).abs() < 1e-6, "{}", fit.ratio_exponent);
        assert!((fit.lambda_exponent - 0.5).abs() < 1e-6, "{}", fit.lambda_exponent);
        assert!(fit.ratio_residual < 1e-6 && fit.lambda_residual < 1e-6);

        let one_sided: Vec<RegimePoint> =
            points.iter().copied().filter(|p| p.lambda > 1e8).collect();
        assert!(matches!(
            bilinear_scaling_fit(&one_sided),
            Err(BilinearError::RegimeEmpty { axis: "1/lambda", .. })
        ));
    }

    #[test]
    fn resonance_window_slices_shrink_with_the_high_scale() {
        // fixed small-scale rows cut the window in intervals of total
        // length at most a few multiples of 1/n1
        let set = catalog::eab((16.0, 0.0), (2.0, 0.0), 1.0).unwrap();
        for eta2 in [-1.0, 0.0, 1.0] {
            let len = set.slice_length(eta2);
            assert!(len <= 8.0 / 16.0, "slice at {eta2} has length {len}");
        }
        let orthogonal = eab_measure((16.0, 0.0), (0.0, 2.0), 1.0, 1.0).unwrap();
        assert!(orthogonal <= 10.0 * (1.0 + 2.0 / 16.0), "{orthogonal}");
    }

    #[test]
    fn resonance_cells_stay_within_the_envelope_scale() {
        for (n1, n2, lambda) in [(16.0, 2.0, 1.0), (16.0, 2.0, 4.0), (64.0, 4.0, 4.0)] {
            let cell = eab_cell(n1, n2, lambda, 8, 19).unwrap();
            assert!(cell.worst > 0.0);
            assert!(
                cell.quotient <= 10.0,
                "cell ({n1},{n2},{lambda}) quotient {}",
                cell.quotient
            );
        }
    }

    #[test]
    fn envelope_normalized_peak_knees_at_the_scale_ratio() {
        let points = crossover_study(64.0, 2.0, &[1.0, 4.0, 16.0, 64.0], 6, 29).unwrap();
        let s: Vec<f64> = points.iter().map(|p| p.stat_to_envelope).collect();
        // flat while the torus term carries the envelope
        assert!(s[1] >= 0.8 * s[0], "early drop: {} -> {}", s[0], s[1]);
        // decaying once the scale ratio takes over near lambda = 32
        assert!(s[3] <= 0.8 * s[2], "late plateau: {} -> {}", s[2], s[3]);
    }

    #[test]
    fn mini_regime_grids_fit_near_half_powers() {
        let mut points = Vec::new();
        for n1 in [8.0, 16.0, 32.0] {
            let mut cfg = BilinearConfig::new(n1, 2.0, 32.0).unwrap();
            cfg.mix = FamilyMix::Transverse;
            cfg.members = 4;
            cfg.seed = 13;
            points.push(RegimePoint {
                n1,
                n2: 2.0,
                lambda: 32.0,
                stat: peak_ratio(&bilinear_ensemble(&cfg).unwrap()),
            });
        }
        for lambda in [1.0, 4.0, 16.0] {
            let mut cfg = BilinearConfig::new(64.0, 1.0, lambda).unwrap();
            cfg.mix = FamilyMix::Parallel;
            cfg.members = 4;
            cfg.seed = 13;
            points.push(RegimePoint {
                n1: 64.0,
                n2: 1.0,
                lambda,
                stat: peak_ratio(&bilinear_ensemble(&cfg).unwrap()),
            });
        }
        let fit = bilinear_scaling_fit(&points).unwrap();
        assert!(
            fit.ratio_exponent > 0.3 && fit.ratio_exponent < 0.7,
            "transversal exponent {}",
            fit.ratio_exponent
        );
        assert!(
            fit.lambda_exponent > 0.3 && fit.lambda_exponent < 0.7,
            "torus exponent {}",
            fit.lambda_exponent
        );
    }
}
