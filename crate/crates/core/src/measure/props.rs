//! Sweeps of the section measures over a standard grid of centers, and the
//! saddle-annulus slice extremum that separates the two symbol geometries.

use serde::Serialize;

use crate::functional::Octant;

use super::catalog::{a1_section, a2_plain_section, a2_refined_section, saddle_annulus};
use super::set::{MeasureError, SemiAlgebraicSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropKind {
    A1,
    A2Plain,
    A2Refined(Octant),
}

impl PropKind {
    fn section(self, v: (f64, f64)) -> Result<SemiAlgebraicSet, MeasureError> {
        match self {
            PropKind::A1 => a1_section(v),
            PropKind::A2Plain => a2_plain_section(v),
            PropKind::A2Refined(j) => a2_refined_section(v, j),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PropEntry {
    pub v: (f64, f64),
    pub rz: f64,
    pub max_slice: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropReport {
    pub entries: Vec<PropEntry>,
    pub sup_rz: f64,
    pub argmax_v: (f64, f64),
    pub sup_max_slice: f64,
}

/// Centers spanning |v| in [1, 1024] on dyadic radii, six bearings per
/// radius including two hugging the light cone, second coordinate snapped to
/// the (1/lambda)-lattice. Centers with H(v) = 0 are dropped.
pub fn standard_v_samples(lambda: f64) -> Vec<(f64, f64)> {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};
    let angles = [
        0.03,
        FRAC_PI_8,
        FRAC_PI_4 - 0.08,
        FRAC_PI_4 + 0.08,
        3.0 * FRAC_PI_8,
        FRAC_PI_2 - 0.03,
    ];
    let mut out = Vec::new();
    for p in 0..=10u32 {
        let r = f64::from(1u32 << p);
        for &phi in &angles {
            let v1 = r * phi.cos();
            let v2 = (r * phi.sin() * lambda).round() / lambda;
            if (v1 * v1 - v2 * v2).abs() > 1e-9 {
                out.push((v1, v2));
            }
        }
    }
    out
}

/// Lattice measure of the chosen section at every admissible center, with
/// the supremum and where it is attained. Centers with H(v) = 0 are
/// rejected; erroring out only if none survive.
pub fn prop_check(
    kind: PropKind,
    v_samples: &[(f64, f64)],
    lambda: f64,
) -> Result<PropReport, MeasureError> {
    let mut entries = Vec::with_capacity(v_samples.len());
    for &v in v_samples {
        let set = match kind.section(v) {
            Ok(s) => s,
            Err(MeasureError::DegenerateCenter) => continue,
            Err(e) => return Err(e),
        };
        let rz = set.rz_measure(lambda)?;
        let ms = set.max_slice(lambda)?;
        entries.push(PropEntry {
            v,
            rz,
            max_slice: ms.length,
        });
    }
    if entries.is_empty() {
        return Err(MeasureError::NoSamples);
    }
    let mut sup_rz = f64::NEG_INFINITY;
    let mut argmax_v = entries[0].v;
    let mut sup_ms = 0.0f64;
    for e in &entries {
        if e.rz > sup_rz {
            sup_rz = e.rz;
            argmax_v = e.v;
        }
        sup_ms = sup_ms.max(e.max_slice);
    }
    Ok(PropReport {
        entries,
        sup_rz,
        argmax_v,
        sup_max_slice: sup_ms,
    })
}

/// Longest lattice slice of the saddle annulus `|w1 w2 - c0| <= 1` over
/// heights `|xi_2| <= n`. At `|c0| <= 1` the zero row is unconstrained and
/// the value is exactly `2n`.
pub fn saddle_max_slice(c0: f64, n: f64, lambda: f64) -> Result<f64, MeasureError> {
    let set = saddle_annulus(c0, n)?;
    Ok(set.max_slice(lambda)?.length)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saddle_zero_row_spans_the_box() {
        assert_eq!(saddle_max_slice(0.0, 10.0, 1.0).unwrap(), 20.0);
        assert_eq!(saddle_max_slice(0.5, 10.0, 1.0).unwrap(), 20.0);
    }

    #[test]
    fn saddle_off_center_slices_collapse() {
        // |w1 k - 5| <= 1 has length 2/k on row k; the best row is k = 1.
        let m = saddle_max_slice(5.0, 10.0, 1.0).unwrap();
        assert!((m - 2.0).abs() < 1e-9, "{m}");
    }

    #[test]
    fn saddle_linear_growth_in_box_size() {
        for n in [4.0, 8.0, 16.0, 32.0] {
            assert_eq!(saddle_max_slice(0.0, n, 1.0).unwrap(), 2.0 * n);
        }
    }

    #[test]
    fn standard_samples_avoid_light_cone() {
        let vs = standard_v_samples(1.0);
        assert!(vs.len() >= 60);
        for (v1, v2) in vs {
            assert!((v1 * v1 - v2 * v2).abs() > 1e-9);
        }
    }

    #[test]
    fn small_center_sweep_reports_finite_sup() {
        let samples = [(2.0, 1.0), (3.0, 1.0), (4.0, 3.0)];
        let rep = prop_check(PropKind::A1, &samples, 1.0).unwrap();
        assert_eq!(rep.entries.len(), 3);
        assert!(rep.sup_rz.is_finite() && rep.sup_rz > 0.0);
        assert!(rep.sup_max_slice > 0.0);

        let refined = prop_check(PropKind::A2Refined([1, 1, 1]), &samples, 1.0).unwrap();
        assert!(refined.sup_rz.is_finite());
    }

    #[test]
    fn degenerate_centers_are_skipped() {
        let samples = [(1.0, 1.0), (2.0, 1.0)];
        let rep = prop_check(PropKind::A2Plain, &samples, 1.0).unwrap();
        assert_eq!(rep.entries.len(), 1);
        let err = prop_check(PropKind::A1, &[(1.0, 1.0)], 1.0).unwrap_err();
        assert!(matches!(err, MeasureError::NoSamples));
    }
}
