//! The linear flow `e(-t H(xi))` and quadrature plans for space-time
//! integrals along it.
//!
//! A plan bundles a lattice, a symbol and a time window, validates that the
//! window resolves the fastest phase the truncated symbol can produce
//! (at least 8 nodes per period of `2 N^2`, i.e. `16 N^2` intervals per unit
//! time), and fixes a physical grid large enough for exact quartic
//! integration. Scans that only steer an iteration may opt out of the time
//! density floor through [`EvolutionPlan::coarse`]; anything reported keeps
//! it.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{min_grid, GridEngine, GridError};
use crate::lattice::{Lattice, LatticeError, SpectralField};
use crate::symbol::Symbol;
use crate::util::e2pi;
use crate::window::{Bump, TimeWindow, WindowError};

/// Number of time slices a worker advances by phase multiplication before
/// the next worker re-anchors with exact trigonometry. Fixed so that results
/// do not depend on the number of threads.
pub(crate) const SLICE_CHUNK: usize = 1024;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("window supplies {got} intervals over its domain, density floor needs {need}")]
    UnderSampled { got: usize, need: usize },
    #[error("space-time tensor would need {bytes} bytes, cap is {cap}")]
    TensorTooLarge { bytes: usize, cap: usize },
}

/// Validated recipe for sampling `e(-tH) phi` in space and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionPlan {
    lattice: Lattice,
    symbol: Symbol,
    window: TimeWindow,
    grid: (usize, usize),
}

impl EvolutionPlan {
    /// Minimum interval count for a window of length `len` on this lattice:
    /// eight nodes per period of the fastest phase `2 N^2`.
    pub fn required_intervals(lattice: &Lattice, len: f64) -> usize {
        let n = lattice.cutoff();
        8 * ((2.0 * n * n * len - 1e-9).ceil().max(1.0) as usize)
    }

    pub fn new(lattice: Lattice, symbol: Symbol, window: TimeWindow) -> Result<Self, PlanError> {
        let need = Self::required_intervals(&lattice, window.domain_len());
        let got = window.samples() - 1;
        if got < need {
            return Err(PlanError::UnderSampled { got, need });
        }
        Self::coarse(lattice, symbol, window)
    }

    /// Plan without the time density floor, for steering scans. The spatial
    /// grid stays exact.
    pub fn coarse(lattice: Lattice, symbol: Symbol, window: TimeWindow) -> Result<Self, PlanError> {
        let grid = min_grid(&lattice);
        Ok(EvolutionPlan { lattice, symbol, window, grid })
    }

    /// Plan over `[t0, t1]` with the densest admissible uniform grid chosen
    /// automatically.
    pub fn auto(
        lattice: Lattice,
        symbol: Symbol,
        t0: f64,
        t1: f64,
        bump: Bump,
    ) -> Result<Self, PlanError> {
        // the smooth window integrates over its padded domain, so size the
        // node count to that length
        let probe = TimeWindow::new(t0, t1, 2, bump)?;
        let need = Self::required_intervals(&lattice, probe.domain_len());
        let window = TimeWindow::new(t0, t1, need + 1, bump)?;
        Self::new(lattice, symbol, window)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn symbol(&self) -> Symbol {
        self.symbol
    }

    pub fn window(&self) -> &TimeWindow {
        &self.window
    }

    pub fn grid(&self) -> (usize, usize) {
        self.grid
    }

    /// Same plan with a different window (revalidated).
    pub fn with_window(&self, window: TimeWindow) -> Result<Self, PlanError> {
        Self::new(self.lattice, self.symbol, window)
    }

    /// Symbol values over the lattice, enumeration order.
    pub fn symbol_values(&self) -> Vec<f64> {
        let lat = self.lattice;
        lat.points().map(|(k1, k2)| self.symbol.eval(lat.freq(k1, k2))).collect()
    }
}

/// Free evolution: multiply each coefficient by `e(-t H(xi))`.
pub fn evolve(field: &SpectralField, symbol: Symbol, t: f64) -> SpectralField {
    let lat = *field.lattice();
    let coef = lat
        .points()
        .zip(field.coef())
        .map(|((k1, k2), c)| c * e2pi(-t * symbol.eval(lat.freq(k1, k2))))
        .collect();
    SpectralField::from_coef(lat, coef).expect("same size")
}

/// Rotating coefficient vector `c_k e(-t H_k)` advanced over uniform time
/// nodes by repeated phase multiplication, re-anchored exactly on `seek`.
pub(crate) struct PhaseStepper<'a> {
    base: &'a [Complex64],
    h: &'a [f64],
    step: &'a [Complex64],
    t_of: &'a dyn Fn(usize) -> f64,
    pub cur: Vec<Complex64>,
}

impl<'a> PhaseStepper<'a> {
    pub fn new(
        base: &'a [Complex64],
        h: &'a [f64],
        step: &'a [Complex64],
        t_of: &'a dyn Fn(usize) -> f64,
    ) -> Self {
        PhaseStepper { base, h, step, t_of, cur: vec![Complex64::new(0.0, 0.0); base.len()] }
    }

    /// Exact re-anchor at node `i`.
    pub fn seek(&mut self, i: usize) {
        let t = (self.t_of)(i);
        for ((c, &b), &h) in self.cur.iter_mut().zip(self.base).zip(self.h) {
            *c = b * e2pi(-t * h);
        }
    }

    /// Advance one node by phase multiplication.
    pub fn advance(&mut self) {
        for (c, &s) in self.cur.iter_mut().zip(self.step) {
            *c *= s;
        }
    }
}

/// Per-node phase increments `e(-dt H_k)` for a plan.
pub(crate) fn step_phases(h: &[f64], dt: f64) -> Vec<Complex64> {
    h.iter().map(|&x| e2pi(-dt * x)).collect()
}

/// Deterministic chunked sweep over all window nodes of a plan.
///
/// For each chunk of at most [`SLICE_CHUNK`] consecutive nodes, `work` is
/// handed a freshly anchored stepper, a cloned grid engine and the chunk's
/// node range; partial results are combined strictly in chunk order. The
/// chunking is fixed, so the result is bit-identical for any thread count.
pub(crate) fn sweep_slices<T, F>(plan: &EvolutionPlan, coef: &[Complex64], work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut PhaseStepper, &mut GridEngine, std::ops::Range<usize>) -> T + Sync,
{
    let window = *plan.window();
    let h = plan.symbol_values();
    let step = step_phases(&h, window.dt());
    let engine = GridEngine::new(plan.lattice, plan.grid.0, plan.grid.1)
        .expect("plan grid validated at construction");
    let n = window.samples();
    let chunks: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(SLICE_CHUNK)
        .map(|s| s..(s + SLICE_CHUNK).min(n))
        .collect();
    let t_of = move |i: usize| window.node(i);
    chunks
        .into_par_iter()
        .map(|range| {
            let mut stepper = PhaseStepper::new(coef, &h, &step, &t_of);
            stepper.seek(range.start);
            let mut eng = engine.clone();
            work(&mut stepper, &mut eng, range)
        })
        .collect()
}

/// Two-field variant of [`sweep_slices`]: both coefficient vectors rotate
/// under the plan's symbol, same chunking, same ordered fold.
pub(crate) fn sweep_slices2<T, F>(
    plan: &EvolutionPlan,
    coef_a: &[Complex64],
    coef_b: &[Complex64],
    work: F,
) -> Vec<T>
where
    T: Send,
    F: Fn(&mut PhaseStepper, &mut PhaseStepper, &mut GridEngine, std::ops::Range<usize>) -> T + Sync,
{
    let window = *plan.window();
    let h = plan.symbol_values();
    let step = step_phases(&h, window.dt());
    let engine = GridEngine::new(plan.lattice, plan.grid.0, plan.grid.1)
        .expect("plan grid validated at construction");
    let n = window.samples();
    let chunks: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(SLICE_CHUNK)
        .map(|s| s..(s + SLICE_CHUNK).min(n))
        .collect();
    let t_of = move |i: usize| window.node(i);
    chunks
        .into_par_iter()
        .map(|range| {
            let mut sa = PhaseStepper::new(coef_a, &h, &step, &t_of);
            let mut sb = PhaseStepper::new(coef_b, &h, &step, &t_of);
            sa.seek(range.start);
            sb.seek(range.start);
            let mut eng = engine.clone();
            work(&mut sa, &mut sb, &mut eng, range)
        })
        .collect()
}

/// Dense sample of the evolved field on the plan's space-time grid,
/// time-major, each slice in the engine's `[i2 * m1 + i1]` layout. Values
/// are the actual function values (normalized by the box area).
pub struct SpaceTimeTensor {
    pub times: Vec<f64>,
    pub dims: (usize, usize),
    pub values: Vec<Complex64>,
}

impl SpaceTimeTensor {
    #[inline]
    pub fn at(&self, ti: usize, i1: usize, i2: usize) -> Complex64 {
        let (m1, _) = self.dims;
        self.values[ti * (self.dims.0 * self.dims.1) + i2 * m1 + i1]
    }
}

/// Materialize the full space-time sample, refusing to exceed `cap` bytes.
pub fn sample_space_time(
    plan: &EvolutionPlan,
    field: &SpectralField,
    cap: usize,
) -> Result<SpaceTimeTensor, PlanError> {
    let (m1, m2) = plan.grid();
    let n = plan.window().samples();
    let bytes = n * m1 * m2 * std::mem::size_of::<Complex64>();
    if bytes > cap {
        return Err(PlanError::TensorTooLarge { bytes, cap });
    }
    let inv_area = 1.0 / plan.lattice().box_area();
    let slices = sweep_slices(plan, field.coef(), |stepper, eng, range| {
        let mut out = Vec::with_capacity(range.len() * m1 * m2);
        for (j, _) in range.enumerate() {
            if j > 0 {
                stepper.advance();
            }
            eng.synth(&stepper.cur);
            out.extend(eng.phys().iter().map(|z| z * inv_area));
        }
        out
    });
    let values: Vec<Complex64> = slices.into_iter().flatten().collect();
    let times = (0..n).map(|i| plan.window().node(i)).collect();
    Ok(SpaceTimeTensor { times, dims: (m1, m2), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Geometry;
    use crate::rng::{gaussian_field, DetRng};

    fn lat() -> Lattice {
        Lattice::new(1.0, 8.0, 2.0, Geometry::Rt).unwrap()
    }

    #[test]
    fn density_floor_is_enforced() {
        let l = lat();
        let w = TimeWindow::sharp(0.0, 1.0, 33).unwrap();
        match EvolutionPlan::new(l, Symbol::Hyperbolic, w) {
            Err(PlanError::UnderSampled { got: 32, need: 64 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        let ok = TimeWindow::sharp(0.0, 1.0, 65).unwrap();
        EvolutionPlan::new(l, Symbol::Hyperbolic, ok).unwrap();
    }

    #[test]
    fn evolve_is_unitary_and_a_group_action() {
        let l = lat();
        let mut rng = DetRng::new(2);
        let f = gaussian_field(l, &mut rng);
        let n0 = f.l2_norm();
        let a = evolve(&f, Symbol::Hyperbolic, 0.3);
        assert!((a.l2_norm() - n0).abs() < 1e-12 * n0);
        let b = evolve(&a, Symbol::Hyperbolic, 0.45);
        let c = evolve(&f, Symbol::Hyperbolic, 0.75);
        for (x, y) in b.coef().iter().zip(c.coef()) {
            assert!((x - y).norm() < 1e-12);
        }
        // and time zero is the identity
        let z = evolve(&f, Symbol::Mixed, 0.0);
        assert_eq!(z.coef(), f.coef());
    }

    #[test]
    fn stepper_tracks_exact_phases() {
        let l = lat();
        let mut rng = DetRng::new(3);
        let f = gaussian_field(l, &mut rng);
        let plan =
            EvolutionPlan::auto(l, Symbol::Hyperbolic, 0.0, 1.0, Bump::Sharp).unwrap();
        let h = plan.symbol_values();
        let step = step_phases(&h, plan.window().dt());
        let w = *plan.window();
        let t_of = move |i: usize| w.node(i);
        let mut st = PhaseStepper::new(f.coef(), &h, &step, &t_of);
        st.seek(0);
        for i in 1..=40 {
            st.advance();
            if i % 10 == 0 {
                let exact = evolve(&f, Symbol::Hyperbolic, plan.window().node(i));
                for (a, b) in st.cur.iter().zip(exact.coef()) {
                    assert!((a - b).norm() < 1e-11, "node {i}");
                }
            }
        }
    }

    #[test]
    fn tensor_cap_is_respected_and_values_match_evolve() {
        let l = lat();
        let mut rng = DetRng::new(4);
        let f = gaussian_field(l, &mut rng);
        let w = TimeWindow::sharp(0.0, 0.125, 9).unwrap();
        let plan = EvolutionPlan::coarse(l, Symbol::Hyperbolic, w).unwrap();
        assert!(matches!(
            sample_space_time(&plan, &f, 1024),
            Err(PlanError::TensorTooLarge { .. })
        ));
        let tensor = sample_space_time(&plan, &f, 1 << 30).unwrap();
        let (m1, m2) = plan.grid();
        let ti = 5;
        let snap = evolve(&f, Symbol::Hyperbolic, tensor.times[ti]);
        let mut eng = GridEngine::new(l, m1, m2).unwrap();
        eng.synth(snap.coef());
        let inv_area = 1.0 / l.box_area();
        for i1 in [0usize, 7, m1 - 1] {
            for i2 in [0usize, 3, m2 - 1] {
                let want = eng.phys()[i2 * m1 + i1] * inv_area;
                let got = tensor.at(ti, i1, i2);
                assert!((want - got).norm() < 1e-10 * (1.0 + want.norm()));
            }
        }
    }
}
