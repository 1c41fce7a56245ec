//! Numerical workbench for space-time estimates of dispersive flows on the
//! cylinder `R x T_lambda` (the real line modeled by a long torus).
//!
//! The crate measures, rather than proves: Strichartz-type `L^4` ratios of
//! the linear flow with elliptic, hyperbolic and saddle symbols, the
//! quadrilinear form behind them, mixed continuous/lattice measures of
//! semi-algebraic frequency regions, bilinear products of
//! frequency-separated flows, near-extremizer searches, and a cubic NLS
//! solver with a Picard iteration harness. Everything is deterministic for
//! a fixed seed and thread-count independent.

pub mod bilinear;
pub mod engine;
pub mod extremizer;
pub mod fieldio;
pub mod functional;
pub mod lattice;
pub mod measure;
pub mod nls;
pub mod propagator;
pub mod rng;
pub mod sweep;
pub mod symbol;
pub mod util;
pub mod window;

pub use bilinear::{
    bilinear_ensemble, bilinear_norm, bilinear_scaling_fit, crossover_study, eab_cell, eab_grid,
    eab_measure, log_correlation, peak_ratio, phase_average, product_norm_exact,
    product_norm_sweep, run_scaling_study, sparse_shell, sparse_tube, BilinearConfig,
    BilinearError, BilinearSample, CrossoverPoint, EabCell, FamilyMix, RegimePoint, ScalingFit,
    ScalingStudy, SparseField,
};
pub use engine::GridEngine;
pub use extremizer::{
    extremize, initial_field, ExtremizeOptions, ExtremizerError, ExtremizerTrace, InitKind,
    IterateStep, StopReason, ALL_INITS,
};
pub use fieldio::{field_from_str, field_to_string, read_field, write_field, FieldIoError};
pub use functional::{
    fit_growth, l4_space_time_norm, quad_form, quad_form_bound, strichartz_ratio, FunctionalError,
    GrowthFit, QuadWeight, Restriction, WeightKind,
};
pub use lattice::{Geometry, Lattice, LatticeError, Projection, SpectralField};
pub use measure::{lemma_check, LemmaRecord, MeasureError, SemiAlgebraicSet};
pub use nls::{
    default_dt, global_small_data_run, picard_iterate, propagate_nonlinear, split_step, GlobalRun,
    IntervalLog, MassSample, NlsError, NlsRun, PicardOptions, PicardRecord, Sign,
};
pub use propagator::{evolve, sample_space_time, EvolutionPlan, PlanError, SpaceTimeTensor};
pub use rng::{DetRng, RNG_ID};
pub use sweep::{
    double_box_gate, embed, ratio_sweep, GateReport, RatioSweep, Scenario, SweepBudget,
    SweepError, SweepPoint, GATE_TOLERANCE,
};
pub use symbol::Symbol;
pub use window::{Bump, TimeWindow, WindowError};
