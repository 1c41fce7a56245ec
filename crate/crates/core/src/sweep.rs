//! Scenario-level ratio sweeps over the cutoff ladder, and the double-box
//! gate that checks the box is long enough before any sweep number is quoted.
//!
//! The expensive full-density quadrature is reserved for final scores; the
//! ensemble scan and the ascent iterations run on a decimated steering grid,
//! which is where essentially all the time goes at large cutoff.

use serde::Serialize;
use thiserror::Error;

use crate::extremizer::{extremize, ExtremizeOptions, ExtremizerError};
use crate::functional::{fit_growth, strichartz_ratio, FunctionalError, GrowthFit};
use crate::lattice::{Geometry, Lattice, LatticeError, Projection, SpectralField};
use crate::propagator::{EvolutionPlan, PlanError};
use crate::rng::{gaussian_field, DetRng};
use crate::symbol::Symbol;
use crate::window::{Bump, TimeWindow, WindowError};

/// Relative change at which the double-box gate rejects the box.
pub const GATE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Extremizer(#[from] ExtremizerError),
    #[error("sweep needs at least one cutoff")]
    NoCutoffs,
    #[error("ensemble must have at least one member")]
    NoMembers,
    #[error("cannot embed: target box {target} is not an integer multiple of {src}")]
    BoxRatio { src: f64, target: f64 },
    #[error("cannot embed: mode ({k1}, {k2}) falls outside the target band")]
    OutOfBand { k1: i64, k2: i64 },
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
}

/// Which row of the estimate table a sweep probes: geometry, symbol and the
/// sector the data is confined to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scenario {
    /// The headline case: hyperbolic flow on the cylinder, data mean-zero in
    /// the periodic variable. The ratio should stay bounded in the cutoff.
    RtHyperbolic,
    /// Same flow without the mean-zero constraint; the zero row behaves like
    /// a lower-dimensional flow and costs a quarter power.
    RtMixed,
    RtElliptic,
    TtHyperbolic,
    TtElliptic,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::RtHyperbolic,
        Scenario::RtMixed,
        Scenario::RtElliptic,
        Scenario::TtHyperbolic,
        Scenario::TtElliptic,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Scenario::RtHyperbolic => "rt-hyperbolic",
            Scenario::RtMixed => "rt-mixed",
            Scenario::RtElliptic => "rt-elliptic",
            Scenario::TtHyperbolic => "tt-hyperbolic",
            Scenario::TtElliptic => "tt-elliptic",
        }
    }

    pub fn geometry(self) -> Geometry {
        match self {
            Scenario::RtHyperbolic | Scenario::RtMixed | Scenario::RtElliptic => Geometry::Rt,
            Scenario::TtHyperbolic | Scenario::TtElliptic => Geometry::Tt,
        }
    }

    pub fn symbol(self) -> Symbol {
        match self {
            Scenario::RtElliptic | Scenario::TtElliptic => Symbol::Elliptic,
            _ => Symbol::Hyperbolic,
        }
    }

    pub fn projection(self) -> Option<Projection> {
        match self {
            Scenario::RtHyperbolic => Some(Projection::MeanZeroX2),
            _ => None,
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.id() == s)
            .ok_or_else(|| SweepError::UnknownScenario(s.to_string()))
    }
}

/// Time/iteration budget of one sweep point.
#[derive(Debug, Clone, Copy)]
pub struct SweepBudget {
    /// Steering grid nodes (the full density floor is only paid for finals).
    pub search_samples: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub settle: usize,
    /// Re-score the best member and the ascent output on the full-density
    /// plan. Turn off for smoke tests and interactive scans.
    pub full_final: bool,
}

impl Default for SweepBudget {
    fn default() -> Self {
        SweepBudget { search_samples: 257, max_iter: 60, tol: 1e-3, settle: 3, full_final: true }
    }
}

impl SweepBudget {
    /// Cheap steering-only settings for smoke tests.
    pub fn quick() -> Self {
        SweepBudget { search_samples: 129, max_iter: 12, tol: 1e-3, settle: 2, full_final: false }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepPoint {
    pub n: f64,
    pub ensemble_max: f64,
    pub extremized: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioSweep {
    pub scenario: Scenario,
    pub lambda: f64,
    pub len_x1: f64,
    pub ensemble: usize,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
    /// Present once the ladder has enough rungs to fit.
    pub fit: Option<GrowthFit>,
}

/// Copy a field into a target lattice with the same `lambda`: a wider band
/// keeps indices, a longer box rescales `k1` so the frequencies match.
pub fn embed(field: &SpectralField, target: Lattice) -> Result<SpectralField, SweepError> {
    let src = field.lattice();
    if (src.lambda() - target.lambda()).abs() > 1e-12 {
        return Err(SweepError::BoxRatio { src: src.lambda(), target: target.lambda() });
    }
    let r = target.len_x1() / src.len_x1();
    if !(r >= 1.0) || (r - r.round()).abs() > 1e-9 {
        return Err(SweepError::BoxRatio { src: src.len_x1(), target: target.len_x1() });
    }
    let r = r.round() as i64;
    let mut out = SpectralField::zero(target);
    for (k1, k2, c) in field.support() {
        let k1 = k1 * r;
        out.set(k1, k2, c).map_err(|_| SweepError::OutOfBand { k1, k2 })?;
    }
    Ok(out)
}

fn steering_plan(lat: Lattice, symbol: Symbol, samples: usize) -> Result<EvolutionPlan, SweepError> {
    let w = TimeWindow::sharp(0.0, 1.0, samples.max(3))?;
    Ok(EvolutionPlan::coarse(lat, symbol, w)?)
}

fn draw_member(lat: Lattice, scenario: Scenario, seed: u64, k: u64) -> Option<SpectralField> {
    let mut rng = DetRng::member(seed, k);
    let mut f = gaussian_field(lat, &mut rng);
    if let Some(p) = scenario.projection() {
        f.project(p);
    }
    f.normalize(1.0).ok().map(|()| f)
}

/// Ensemble-and-ascent survey of the Strichartz ratio along a cutoff ladder.
///
/// Per cutoff: draw `ensemble` projected Gaussian members and keep the best,
/// refine by ascent from the best member and from the previous rung's output
/// embedded into the wider band, then (optionally) re-score both headline
/// numbers on the full-density plan.
pub fn ratio_sweep(
    scenario: Scenario,
    lambda: f64,
    len_x1: f64,
    ns: &[f64],
    ensemble: usize,
    seed: u64,
    budget: &SweepBudget,
) -> Result<RatioSweep, SweepError> {
    if ns.is_empty() {
        return Err(SweepError::NoCutoffs);
    }
    if ensemble == 0 {
        return Err(SweepError::NoMembers);
    }
    let mut ns = ns.to_vec();
    ns.sort_by(f64::total_cmp);

    let mut points = Vec::with_capacity(ns.len());
    let mut warm: Option<SpectralField> = None;
    for &n in &ns {
        let lat = Lattice::new(lambda, len_x1, n, scenario.geometry())?;
        let search = steering_plan(lat, scenario.symbol(), budget.search_samples)?;

        let mut best: Option<(f64, SpectralField)> = None;
        for k in 0..ensemble {
            let Some(f) = draw_member(lat, scenario, seed, k as u64) else { continue };
            let r = strichartz_ratio(&search, &f)?;
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                best = Some((r, f));
            }
        }
        let (coarse_best, best_member) =
            best.expect("a normalized gaussian member always exists");

        let mut inits: Vec<SpectralField> = vec![best_member.clone()];
        if let Some(prev) = warm.take() {
            let mut w = embed(&prev, lat)?;
            if let Some(p) = scenario.projection() {
                w.project(p);
            }
            if w.normalize(1.0).is_ok() {
                inits.push(w);
            }
        }
        let opts = ExtremizeOptions {
            max_iter: budget.max_iter,
            tol: budget.tol,
            settle: budget.settle,
            reproject: scenario.projection(),
        };
        let mut champion: Option<(f64, SpectralField)> = None;
        for init in &inits {
            let trace = extremize(&search, n, init, opts)?;
            if champion.as_ref().is_none_or(|(b, _)| trace.ratio > *b) {
                champion = Some((trace.ratio, trace.field));
            }
        }
        let (coarse_ratio, champ_field) = champion.expect("at least one init ran");

        let (ensemble_max, extremized) = if budget.full_final {
            let full =
                EvolutionPlan::auto(lat, scenario.symbol(), 0.0, 1.0, Bump::Sharp)?;
            (strichartz_ratio(&full, &best_member)?, strichartz_ratio(&full, &champ_field)?)
        } else {
            (coarse_best, coarse_ratio)
        };
        warm = Some(champ_field);
        points.push(SweepPoint { n, ensemble_max, extremized });
    }

    let fit = fit_growth(&points.iter().map(|p| (p.n, p.extremized)).collect::<Vec<_>>()).ok();
    Ok(RatioSweep { scenario, lambda, len_x1, ensemble, seed, points, fit })
}

/// Outcome of the box-size gate.
///
/// The gate statistic is the refined (extremized) ratio, which localizes and
/// so converges in the box length; the claim sweeps quote exactly this
/// object. The single-mode control must be box-free to roundoff after the
/// `(L lambda)^{1/4}` normalization. The cramped probe feeds the comparison
/// a statistic that deliberately keeps its box normalization, on a box that
/// is deliberately too short; a healthy gate must flag it, which guards
/// against the gate degenerating into a rubber stamp.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GateReport {
    pub scenario: Scenario,
    pub n: f64,
    pub members: usize,
    pub base_stat: f64,
    pub doubled_stat: f64,
    pub rel_change: f64,
    pub pass: bool,
    /// `|ratio * (L lambda)^{1/4}|` difference across the doubling; roundoff.
    pub mode_invariance: f64,
    /// Relative change of the un-renormalized bulk ratio between boxes of
    /// length `2 lambda` and `4 lambda`; carries the full `(L lambda)^{-1/4}`
    /// box factor, so it must exceed the gate tolerance.
    pub cramped_change: f64,
    pub cramped_flagged: bool,
}

fn raw_mean_ratio(
    lat: Lattice,
    scenario: Scenario,
    members: usize,
    seed: u64,
    samples: usize,
) -> Result<f64, SweepError> {
    let plan = steering_plan(lat, scenario.symbol(), samples)?;
    let mut acc = 0.0;
    let mut count = 0usize;
    for k in 0..members {
        let Some(f) = draw_member(lat, scenario, seed, k as u64) else { continue };
        acc += strichartz_ratio(&plan, &f)?;
        count += 1;
    }
    Ok(acc / count.max(1) as f64)
}

fn extremized_stat(
    lat: Lattice,
    scenario: Scenario,
    members: usize,
    seed: u64,
    samples: usize,
) -> Result<f64, SweepError> {
    let plan = steering_plan(lat, scenario.symbol(), samples)?;
    let mut best: Option<(f64, SpectralField)> = None;
    for k in 0..members {
        let Some(f) = draw_member(lat, scenario, seed, k as u64) else { continue };
        let r = strichartz_ratio(&plan, &f)?;
        if best.as_ref().is_none_or(|(b, _)| r > *b) {
            best = Some((r, f));
        }
    }
    let (_, init) = best.expect("members >= 1 was checked");
    let opts = ExtremizeOptions {
        max_iter: 25,
        tol: 1e-3,
        settle: 3,
        reproject: scenario.projection(),
    };
    Ok(extremize(&plan, lat.cutoff(), &init, opts)?.ratio)
}

fn normalized_mode_ratio(lat: Lattice, symbol: Symbol, k1: i64, k2: i64) -> Result<f64, SweepError> {
    let f = SpectralField::unit_mode(lat, k1, k2)?;
    let plan = steering_plan(lat, symbol, 65)?;
    let area = lat.box_area();
    Ok(strichartz_ratio(&plan, &f)? * area.powf(0.25))
}

/// Rerun the headline statistic with the box doubled; pass when the relative
/// change stays under [`GATE_TOLERANCE`].
pub fn double_box_gate(
    scenario: Scenario,
    lambda: f64,
    len_x1: f64,
    n: f64,
    members: usize,
    seed: u64,
) -> Result<GateReport, SweepError> {
    if members == 0 {
        return Err(SweepError::NoMembers);
    }
    let samples = 257;
    let geom = scenario.geometry();
    let base_lat = Lattice::new(lambda, len_x1, n, geom)?;
    let doubled_lat = Lattice::new(lambda, 2.0 * len_x1, n, geom)?;
    let base_stat = extremized_stat(base_lat, scenario, members, seed, samples)?;
    let doubled_stat = extremized_stat(doubled_lat, scenario, members, seed, samples)?;
    let rel_change = (doubled_stat - base_stat).abs() / base_stat.abs().max(f64::MIN_POSITIVE);

    // off-axis mode, same physical frequency in both boxes
    let k1 = (0.5 * n * base_lat.len_x1()).round() as i64;
    let k2 = (0.5 * n * lambda).floor() as i64;
    let m_base = normalized_mode_ratio(base_lat, scenario.symbol(), k1, k2)?;
    let m_doubled = normalized_mode_ratio(doubled_lat, scenario.symbol(), 2 * k1, k2)?;
    let mode_invariance = (m_base - m_doubled).abs();

    let cramped_a = Lattice::cramped(lambda, 2.0 * lambda, n, geom)?;
    let cramped_b = Lattice::cramped(lambda, 4.0 * lambda, n, geom)?;
    let ca = raw_mean_ratio(cramped_a, scenario, members, seed, samples)?;
    let cb = raw_mean_ratio(cramped_b, scenario, members, seed, samples)?;
    let cramped_change = (cb - ca).abs() / ca.abs().max(f64::MIN_POSITIVE);

    Ok(GateReport {
        scenario,
        n,
        members,
        base_stat,
        doubled_stat,
        rel_change,
        pass: rel_change <= GATE_TOLERANCE,
        mode_invariance,
        cramped_change,
        cramped_flagged: cramped_change > GATE_TOLERANCE,
    })
}
