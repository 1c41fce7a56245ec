//! Strang split-step integrator for the cubic equation driven by the plan's
//! symbol, and the Picard iteration harness probing local solvability on a
//! window around `t = 0` for small data.
//!
//! The nonlinear flow `i u_t = sign |u|^2 u` is a pointwise phase rotation in
//! physical space, so one step is rotate-half, free flight, rotate-half. The
//! rotation is evaluated on the engine's padded grid and analyzed back onto
//! the lattice band, which truncates the (tiny) out-of-band harmonics instead
//! of letting them alias.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::engine::GridEngine;
use crate::lattice::{Lattice, LatticeError, SpectralField};
use crate::propagator::{step_phases, EvolutionPlan, PlanError};
use crate::window::{Bump, WindowError};

/// Default initial-data gate for the small-data paths (`picard_iterate` can
/// be handed a larger budget explicitly).
pub const DEFAULT_SMALLNESS: f64 = 0.1;

/// Consecutive non-contracting ratios before an iteration counts as divergent.
const DIVERGENCE_RUN: usize = 3;

/// Mass beyond this is treated as blow-up even before it reaches infinity.
const MASS_GUARD: f64 = 1e24;

#[derive(Debug, Error)]
pub enum NlsError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error("field and plan live on different lattices")]
    LatticeMismatch,
    #[error("step {0} is not positive and finite")]
    BadStep(f64),
    #[error("step {got} exceeds the splitting-accuracy cap {cap}")]
    StepTooLarge { got: f64, cap: f64 },
    #[error("stepping integrates over a sharp window, got a smooth one")]
    SmoothWindow,
    #[error("initial L2 norm {norm} exceeds the smallness gate {delta}")]
    Smallness { norm: f64, delta: f64 },
    #[error("Picard window must put t = 0 on a quadrature node")]
    OffCenterWindow,
    #[error("state became non-finite after {steps} steps")]
    Blowup { steps: usize },
}

/// Sign of the nonlinearity in `i u_t + (symbol flow) = sign |u|^2 u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Focusing,
    Defocusing,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Focusing => -1.0,
            Sign::Defocusing => 1.0,
        }
    }
}

/// Step size tying the splitting error to the fastest linear phase `2 N^2`.
pub fn default_dt(lattice: &Lattice) -> f64 {
    let n = lattice.cutoff();
    1.0 / (8.0 * n * n)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MassSample {
    pub time: f64,
    pub mass: f64,
}

/// One split-step trajectory with its conservation diagnostics.
#[derive(Debug, Clone)]
pub struct NlsRun {
    pub sign: Sign,
    pub plan: EvolutionPlan,
    pub initial: SpectralField,
    /// Actual step, rounded down from the requested cap so that `dt * steps`
    /// tiles the window exactly.
    pub dt: f64,
    pub steps: usize,
    pub scheme: &'static str,
    /// Mass at a fixed node stride (first and last valid node always kept).
    pub mass_series: Vec<MassSample>,
    /// Largest relative mass deviation seen at any node, not just sampled ones.
    pub max_drift: f64,
    /// Trapezoid `L^4` norm of the trajectory over the window; `None` when
    /// the run aborted.
    pub l4_window: Option<f64>,
    pub final_field: SpectralField,
    pub completed: usize,
    pub aborted: bool,
    pub picard: Option<PicardRecord>,
}

fn mass_of(coef: &[Complex64], area: f64) -> f64 {
    coef.iter().map(|c| c.norm_sqr()).sum::<f64>() / area
}

struct Trace {
    final_coef: Vec<Complex64>,
    completed: usize,
    aborted: bool,
    max_drift: f64,
    mass_series: Vec<MassSample>,
    l4_fourth: f64,
}

/// Core stepper. `dt` may be negative (backward integration); `stride = 0`
/// suppresses the mass series. Diagnostics are taken at every node, the
/// series just subsamples them.
fn integrate(
    plan: &EvolutionPlan,
    sign: Sign,
    start: &[Complex64],
    t0: f64,
    dt: f64,
    steps: usize,
    stride: usize,
) -> Trace {
    let lat = *plan.lattice();
    let area = lat.box_area();
    let h = plan.symbol_values();
    let lin = step_phases(&h, dt);
    let angle = -sign.factor() * 0.5 * dt / (area * area);
    let mut eng = GridEngine::for_lattice(lat);

    let mut coef = start.to_vec();
    let mut prev = coef.clone();
    let mut out = Trace {
        final_coef: Vec::new(),
        completed: 0,
        aborted: false,
        max_drift: 0.0,
        mass_series: Vec::new(),
        l4_fourth: 0.0,
    };
    let mass0 = mass_of(&coef, area);
    if !mass0.is_finite() || mass0 > MASS_GUARD {
        out.final_coef = coef;
        out.aborted = true;
        return out;
    }

    let rotate = |eng: &mut GridEngine| {
        for z in eng.phys_mut() {
            let (s, c) = (angle * z.norm_sqr()).sin_cos();
            *z *= Complex64::new(c, s);
        }
    };

    for i in 0..=steps {
        let m = mass_of(&coef, area);
        eng.synth(&coef);
        let q = eng.quartic_sum();
        if !(m.is_finite() && q.is_finite()) || m > MASS_GUARD {
            // blow-up: keep the state at the last healthy node
            coef.copy_from_slice(&prev);
            out.completed = i.saturating_sub(1);
            out.aborted = true;
            break;
        }
        out.completed = i;
        let drift = if mass0 > 0.0 { (m - mass0).abs() / mass0 } else { 0.0 };
        out.max_drift = out.max_drift.max(drift);
        let w = dt.abs() * if i == 0 || i == steps { 0.5 } else { 1.0 };
        out.l4_fourth += w * q;
        if stride > 0 && (i % stride == 0 || i == steps) {
            out.mass_series.push(MassSample { time: t0 + dt * i as f64, mass: m });
        }
        if i == steps {
            break;
        }

        prev.copy_from_slice(&coef);
        // engine still holds the node state from the diagnostics synth
        rotate(&mut eng);
        eng.analyze_into(&mut coef);
        for (c, &p) in coef.iter_mut().zip(&lin) {
            *c *= p;
        }
        eng.synth(&coef);
        rotate(&mut eng);
        eng.analyze_into(&mut coef);
    }

    out.final_coef = coef;
    out
}

fn step_count(len: f64, cap: f64) -> usize {
    ((len / cap - 1e-9).ceil() as usize).max(1)
}

/// Strang split-step solve over the plan's window.
///
/// `dt` is an upper bound on the step (default [`default_dt`]); it is rounded
/// down so an integer number of steps spans the window. A non-finite state
/// aborts the run and keeps the last valid node instead of erroring.
pub fn split_step(
    plan: &EvolutionPlan,
    sign: Sign,
    phi: &SpectralField,
    dt: Option<f64>,
    stride: Option<usize>,
) -> Result<NlsRun, NlsError> {
    if phi.lattice() != plan.lattice() {
        return Err(NlsError::LatticeMismatch);
    }
    if plan.window().bump() != Bump::Sharp {
        return Err(NlsError::SmoothWindow);
    }
    let cap = default_dt(plan.lattice());
    let req = dt.unwrap_or(cap);
    if !(req > 0.0 && req.is_finite()) {
        return Err(NlsError::BadStep(req));
    }
    if req > cap * (1.0 + 1e-9) {
        return Err(NlsError::StepTooLarge { got: req, cap });
    }
    let (t0, t1) = plan.window().domain();
    let steps = step_count(t1 - t0, req);
    let dt = (t1 - t0) / steps as f64;
    let stride = stride.unwrap_or_else(|| (steps / 64).max(1));

    let trace = integrate(plan, sign, phi.coef(), t0, dt, steps, stride);
    let area = plan.lattice().box_area();
    let (m1, m2) = plan.grid();
    let l4_window = if trace.aborted {
        None
    } else {
        let fourth = trace.l4_fourth / (area * area * area * (m1 * m2) as f64);
        Some(fourth.max(0.0).powf(0.25))
    };
    let final_field = SpectralField::from_coef(*plan.lattice(), trace.final_coef)?;
    Ok(NlsRun {
        sign,
        plan: *plan,
        initial: phi.clone(),
        dt,
        steps,
        scheme: "strang",
        mass_series: trace.mass_series,
        max_drift: trace.max_drift,
        l4_window,
        final_field,
        completed: trace.completed,
        aborted: trace.aborted,
        picard: None,
    })
}

/// Advance `phi` by `duration` (negative runs backward) without keeping
/// diagnostics. Blow-up is an error here since there is no run record to
/// park the last valid state in.
pub fn propagate_nonlinear(
    plan: &EvolutionPlan,
    sign: Sign,
    phi: &SpectralField,
    duration: f64,
    dt: Option<f64>,
) -> Result<SpectralField, NlsError> {
    if phi.lattice() != plan.lattice() {
        return Err(NlsError::LatticeMismatch);
    }
    let cap = default_dt(plan.lattice());
    let req = dt.unwrap_or(cap);
    if !(req > 0.0 && req.is_finite()) {
        return Err(NlsError::BadStep(req));
    }
    if req > cap * (1.0 + 1e-9) {
        return Err(NlsError::StepTooLarge { got: req, cap });
    }
    if !(duration.is_finite() && duration != 0.0) {
        return Err(NlsError::BadStep(duration));
    }
    let steps = step_count(duration.abs(), req);
    let dt = duration / steps as f64;
    let trace = integrate(plan, sign, phi.coef(), 0.0, dt, steps, 0);
    if trace.aborted {
        return Err(NlsError::Blowup { steps: trace.completed });
    }
    Ok(SpectralField::from_coef(*plan.lattice(), trace.final_coef)?)
}

#[derive(Debug, Clone, Copy)]
pub struct PicardOptions {
    pub max_iter: usize,
    /// Smallness gate on the initial L2 norm; raise it to probe large data.
    pub delta: f64,
    /// Co-run a split-step solve on the same grid and record the relative
    /// L4 gap to the deepest iterate.
    pub compare_split: bool,
    /// Differences below `floor_rel` times the free iterate's L4 norm count
    /// as converged to roundoff.
    pub floor_rel: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            max_iter: 8,
            delta: DEFAULT_SMALLNESS,
            compare_split: true,
            floor_rel: 1e-12,
        }
    }
}

/// Contraction diagnostics of the Duhamel iteration.
#[derive(Debug, Clone, Serialize)]
pub struct PicardRecord {
    /// Deepest iterate computed (`u_1` is the free evolution).
    pub iterates: usize,
    /// `L^4` space-time norms of `u_{j+1} - u_j` over the window.
    pub diffs: Vec<f64>,
    /// Consecutive ratios of `diffs` while above the roundoff floor.
    pub factors: Vec<f64>,
    /// `L^4` norm of the free iterate, the scale the floor is relative to.
    pub first_l4: f64,
    pub floor: f64,
    pub converged: bool,
    pub diverged: bool,
    /// Relative L4 gap between the deepest iterate and the split-step run,
    /// when the grid is fine enough to host one.
    pub split_gap: Option<f64>,
}

struct PassOut {
    diffs4: Vec<f64>,
    u1_4: f64,
    gap4: f64,
    split4: f64,
    live: usize,
}

/// One streaming tower pass: all `levels` iterates advanced node by node from
/// the center outward, Duhamel prefix per level via signed trapezoid sums.
/// Memory is one coefficient vector pair per level, never a trajectory.
fn picard_pass(
    plan: &EvolutionPlan,
    sign: Sign,
    phi: &[Complex64],
    i0: usize,
    levels: usize,
    with_split: bool,
) -> PassOut {
    let lat = *plan.lattice();
    let window = *plan.window();
    let len = phi.len();
    let area = lat.box_area();
    let inv_area2 = 1.0 / (area * area);
    let h = plan.symbol_values();
    let cf = Complex64::new(0.0, -sign.factor());
    let (m1, m2) = plan.grid();
    let grid_len = m1 * m2;
    let samples = window.samples();
    let node_dt = window.dt();

    let mut out = PassOut {
        diffs4: vec![0.0; levels.saturating_sub(1)],
        u1_4: 0.0,
        gap4: 0.0,
        split4: 0.0,
        live: levels,
    };
    let mut eng = GridEngine::for_lattice(lat);

    for dir in [1i64, -1] {
        let dt = dir as f64 * node_dt;
        let lin_step = step_phases(&h, dt);
        let mut lin = vec![Complex64::new(1.0, 0.0); len];
        let mut g_prefix = vec![vec![Complex64::new(0.0, 0.0); len]; levels.saturating_sub(1)];
        let mut last_g = vec![vec![Complex64::new(0.0, 0.0); len]; levels.saturating_sub(1)];
        let mut prev_grid = vec![Complex64::new(0.0, 0.0); grid_len];
        let mut top_grid = vec![Complex64::new(0.0, 0.0); grid_len];
        let mut cur = vec![Complex64::new(0.0, 0.0); len];
        let mut cubic = vec![Complex64::new(0.0, 0.0); len];
        let mut split_c = phi.to_vec();
        let split_angle = -sign.factor() * 0.5 * dt * inv_area2;
        let offsets = if dir > 0 { 0..(samples - i0) } else { 0..(i0 + 1) };

        for off in offsets {
            let node = (i0 as i64 + dir * off as i64) as usize;
            // t = 0 sits in both branches; count it once
            let counted = dir > 0 || off > 0;
            let w = window.quad_weight(node);
            if off > 0 {
                for (c, &p) in lin.iter_mut().zip(&lin_step) {
                    *c *= p;
                }
            }

            // free iterate
            for ((c, &f), &p) in cur.iter_mut().zip(phi).zip(&lin) {
                *c = f * p;
            }
            eng.synth(&cur);
            if counted {
                out.u1_4 += w * eng.quartic_sum();
            }
            prev_grid.copy_from_slice(eng.phys());

            for j in 0..out.live.min(levels.saturating_sub(1)) {
                // twisted Duhamel integrand of the level below, then its prefix
                for z in eng.phys_mut() {
                    *z *= z.norm_sqr();
                }
                eng.analyze_into(&mut cubic);
                if off == 0 {
                    for (g, (&c, &p)) in last_g[j].iter_mut().zip(cubic.iter().zip(&lin)) {
                        *g = p.conj() * c * inv_area2;
                    }
                } else {
                    let half = 0.5 * dt;
                    for ((acc, g), (&c, &p)) in g_prefix[j]
                        .iter_mut()
                        .zip(last_g[j].iter_mut())
                        .zip(cubic.iter().zip(&lin))
                    {
                        let cur_g = p.conj() * c * inv_area2;
                        *acc += half * (*g + cur_g);
                        *g = cur_g;
                    }
                }
                for (c, ((&f, &g), &p)) in
                    cur.iter_mut().zip(phi.iter().zip(&g_prefix[j]).zip(&lin))
                {
                    *c = (f + cf * g) * p;
                }
                eng.synth(&cur);
                if counted {
                    let mut d4 = 0.0;
                    for (&a, &b) in eng.phys().iter().zip(&prev_grid) {
                        let d = (a - b).norm_sqr();
                        d4 += d * d;
                    }
                    if !d4.is_finite() {
                        out.diffs4[j] = f64::INFINITY;
                        out.live = j + 1;
                        break;
                    }
                    out.diffs4[j] += w * d4;
                }
                prev_grid.copy_from_slice(eng.phys());
                if j + 2 == levels && with_split {
                    top_grid.copy_from_slice(eng.phys());
                }
            }

            if with_split {
                eng.synth(&split_c);
                if counted {
                    let mut g4 = 0.0;
                    for (&a, &b) in eng.phys().iter().zip(&top_grid) {
                        let d = (a - b).norm_sqr();
                        g4 += d * d;
                    }
                    out.gap4 += w * g4;
                    out.split4 += w * eng.quartic_sum();
                }
                if off + 1 < if dir > 0 { samples - i0 } else { i0 + 1 } {
                    // advance the co-running solver to the next node
                    for z in eng.phys_mut() {
                        let (s, c) = (split_angle * z.norm_sqr()).sin_cos();
                        *z *= Complex64::new(c, s);
                    }
                    eng.analyze_into(&mut split_c);
                    for (c, &p) in split_c.iter_mut().zip(&lin_step) {
                        *c *= p;
                    }
                    eng.synth(&split_c);
                    for z in eng.phys_mut() {
                        let (s, c) = (split_angle * z.norm_sqr()).sin_cos();
                        *z *= Complex64::new(c, s);
                    }
                    eng.analyze_into(&mut split_c);
                }
            }
        }
    }
    out
}

fn l4_of(raw: f64, area: f64, grid_len: usize) -> f64 {
    (raw / (area * area * area * grid_len as f64)).max(0.0).powf(0.25)
}

/// Duhamel iteration `u_{n+1} = e(-tH) phi -+ i Int_0^t e(-(t-s)H) |u_n|^2 u_n ds`
/// on the plan's window, which must be sharp and hold `t = 0` on a node.
///
/// A cheap coarse pass first finds how deep the tower needs to be, then one
/// full-grid pass produces the recorded differences. Divergence for large
/// data is reported in the record, never panicked on.
pub fn picard_iterate(
    plan: &EvolutionPlan,
    sign: Sign,
    phi: &SpectralField,
    opts: &PicardOptions,
) -> Result<PicardRecord, NlsError> {
    if phi.lattice() != plan.lattice() {
        return Err(NlsError::LatticeMismatch);
    }
    let window = *plan.window();
    if window.bump() != Bump::Sharp {
        return Err(NlsError::SmoothWindow);
    }
    let (t0, t1) = window.domain();
    if !(t0 < 0.0 && t1 > 0.0) {
        return Err(NlsError::OffCenterWindow);
    }
    let h = window.dt();
    let i0f = -t0 / h;
    let i0 = i0f.round() as usize;
    if (i0f - i0 as f64).abs() > 1e-9 {
        return Err(NlsError::OffCenterWindow);
    }
    let norm = phi.l2_norm();
    if norm > opts.delta * (1.0 + 1e-12) {
        return Err(NlsError::Smallness { norm, delta: opts.delta });
    }
    let max_iter = opts.max_iter.max(2);
    let lat = *plan.lattice();
    let area = lat.box_area();
    let (m1, m2) = plan.grid();
    let grid_len = m1 * m2;

    // steering pass on a decimated grid to size the tower
    let steer = if window.samples() > 513 {
        let frac = -t0 / (t1 - t0);
        let c0 = (frac * 512.0).round();
        if (frac * 512.0 - c0).abs() < 1e-9 {
            let w = crate::window::TimeWindow::sharp(t0, t1, 513)?;
            Some((EvolutionPlan::coarse(lat, plan.symbol(), w)?, c0 as usize))
        } else {
            None
        }
    } else {
        None
    };
    let (steer_plan, steer_i0) = steer.unwrap_or((*plan, i0));
    let pass1 = picard_pass(&steer_plan, sign, phi.coef(), steer_i0, max_iter, false);
    let (sm1, sm2) = steer_plan.grid();
    let floor1 = opts.floor_rel * l4_of(pass1.u1_4, area, sm1 * sm2) + f64::MIN_POSITIVE;
    let mut depth = max_iter;
    for (j, &d4) in pass1.diffs4.iter().enumerate() {
        if !d4.is_finite() {
            depth = (j + 2).min(max_iter);
            break;
        }
        if l4_of(d4, area, sm1 * sm2) <= floor1 {
            depth = (j + 2).min(max_iter);
            break;
        }
    }

    let with_split = opts.compare_split && h <= default_dt(&lat) * (1.0 + 1e-9);
    let pass2 = picard_pass(plan, sign, phi.coef(), i0, depth, with_split);
    let first_l4 = l4_of(pass2.u1_4, area, grid_len);
    let floor = opts.floor_rel * first_l4 + f64::MIN_POSITIVE;
    let diffs: Vec<f64> = pass2
        .diffs4
        .iter()
        .map(|&d4| if d4.is_finite() { l4_of(d4, area, grid_len) } else { f64::INFINITY })
        .collect();
    let mut factors = Vec::new();
    for pair in diffs.windows(2) {
        if !pair[0].is_finite() {
            break;
        }
        if pair[0] <= floor {
            break;
        }
        factors.push(if pair[1].is_finite() { pair[1] / pair[0] } else { f64::INFINITY });
    }
    let converged = diffs.last().is_some_and(|d| d.is_finite() && *d <= floor);
    let blown = diffs.iter().any(|d| !d.is_finite());
    let run = factors
        .iter()
        .scan(0usize, |acc, &f| {
            *acc = if f >= 1.0 - 1e-9 { *acc + 1 } else { 0 };
            Some(*acc)
        })
        .max()
        .unwrap_or(0);
    let diverged = blown || run >= DIVERGENCE_RUN;
    let split_gap = with_split.then(|| {
        let s = l4_of(pass2.split4, area, grid_len);
        let g = l4_of(pass2.gap4, area, grid_len);
        if s > f64::MIN_POSITIVE {
            g / s
        } else {
            0.0
        }
    });

    Ok(PicardRecord {
        iterates: depth,
        diffs,
        factors,
        first_l4,
        floor,
        converged,
        diverged,
        split_gap,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntervalLog {
    pub index: usize,
    pub l4: f64,
    pub mass_start: f64,
    pub mass_end: f64,
}

/// Chained small-data solve over `t_units` copies of the plan's window.
#[derive(Debug, Clone)]
pub struct GlobalRun {
    pub intervals: Vec<IntervalLog>,
    pub final_field: SpectralField,
    pub aborted: bool,
}

/// Restarted solve: each interval feeds its final state to the next. The
/// interval grid and hence the splitting error are identical across restarts,
/// so the mass trace exposes any drift the chaining introduces.
pub fn global_small_data_run(
    plan: &EvolutionPlan,
    sign: Sign,
    phi: &SpectralField,
    t_units: usize,
    dt: Option<f64>,
) -> Result<GlobalRun, NlsError> {
    let norm = phi.l2_norm();
    if norm > DEFAULT_SMALLNESS * (1.0 + 1e-12) {
        return Err(NlsError::Smallness { norm, delta: DEFAULT_SMALLNESS });
    }
    let mut state = phi.clone();
    let mut intervals = Vec::with_capacity(t_units);
    let mut aborted = false;
    for index in 0..t_units {
        let run = split_step(plan, sign, &state, dt, None)?;
        let mass_start = run.mass_series.first().map_or(0.0, |s| s.mass);
        let mass_end = run.mass_series.last().map_or(0.0, |s| s.mass);
        intervals.push(IntervalLog {
            index,
            l4: run.l4_window.unwrap_or(f64::NAN),
            mass_start,
            mass_end,
        });
        state = run.final_field;
        if run.aborted {
            aborted = true;
            break;
        }
    }
    Ok(GlobalRun { intervals, final_field: state, aborted })
}
