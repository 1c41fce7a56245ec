//! Measure laboratory: semi-algebraic sets, their slice, lattice, and
//! Euclidean measures, the catalog of sections from the covering argument,
//! and sweep drivers for the section suprema.

pub mod catalog;
pub mod poly;
pub mod props;
pub mod set;

pub use catalog::{ChangeOfVarsRegion, CovKind};
pub use poly::Poly2;
pub use props::{prop_check, saddle_max_slice, standard_v_samples, PropKind, PropReport};
pub use set::{
    box_sensitivity, format_set, lemma_check, parse_set, BoundingBox, Clause, Constraint,
    EuclidOutcome, LemmaRecord, MaxSlice, MeasureError, Rel, SemiAlgebraicSet,
};
