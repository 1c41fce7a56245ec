//! Shared FFT machinery: moving a coefficient field to a physical grid and
//! back.
//!
//! The grid has `m1 x m2` points over the physical box `L x lambda`, with
//! `m_i` at least twice the lattice diameter in that direction. That margin
//! makes two things exact at once: Riemann sums of quartic products of
//! band-limited fields, and analysis of cubic products back onto the
//! retained band (all aliases of a tripled band land outside it).
//!
//! Layout: scatter and analysis use a row-major buffer indexed
//! `[i1 * m2 + i2]`; the physical slice lives in a transposed buffer
//! indexed `[i2 * m1 + i1]`, which lets both FFT passes run over contiguous
//! chunks.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use thiserror::Error;

use crate::lattice::Lattice;
use crate::util::fft_friendly_size;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid dimension {got} along axis {axis} below the exactness floor {need}")]
    TooSmall { axis: usize, got: usize, need: usize },
}

/// Smallest exact grid for a lattice, rounded up to 5-smooth sizes.
pub fn min_grid(lattice: &Lattice) -> (usize, usize) {
    let need1 = 4 * lattice.k1max() as usize + 2;
    let need2 = 4 * lattice.k2max() as usize + 2;
    (fft_friendly_size(need1), fft_friendly_size(need2))
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 32;
    debug_assert_eq!(src.len(), rows * cols);
    for rb in (0..rows).step_by(B) {
        let rend = (rb + B).min(rows);
        for cb in (0..cols).step_by(B) {
            let cend = (cb + B).min(cols);
            for r in rb..rend {
                for c in cb..cend {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Reusable transform state for one lattice and grid size. Cloning shares
/// the FFT plans and gives the clone fresh scratch buffers.
#[derive(Clone)]
pub struct GridEngine {
    lattice: Lattice,
    m1: usize,
    m2: usize,
    inv1: Arc<dyn Fft<f64>>,
    inv2: Arc<dyn Fft<f64>>,
    fwd1: Arc<dyn Fft<f64>>,
    fwd2: Arc<dyn Fft<f64>>,
    row_buf: Vec<Complex64>,
    phys: Vec<Complex64>,
    scratch: Vec<Complex64>,
    /// lattice index -> row_buf index, enumeration order
    map: Vec<usize>,
}

impl GridEngine {
    pub fn new(lattice: Lattice, m1: usize, m2: usize) -> Result<Self, GridError> {
        let need1 = 4 * lattice.k1max() as usize + 2;
        let need2 = 4 * lattice.k2max() as usize + 2;
        if m1 < need1 {
            return Err(GridError::TooSmall { axis: 1, got: m1, need: need1 });
        }
        if m2 < need2 {
            return Err(GridError::TooSmall { axis: 2, got: m2, need: need2 });
        }
        let mut planner = FftPlanner::new();
        let inv1 = planner.plan_fft(m1, FftDirection::Inverse);
        let inv2 = planner.plan_fft(m2, FftDirection::Inverse);
        let fwd1 = planner.plan_fft(m1, FftDirection::Forward);
        let fwd2 = planner.plan_fft(m2, FftDirection::Forward);
        let scratch_len = inv1
            .get_inplace_scratch_len()
            .max(inv2.get_inplace_scratch_len())
            .max(fwd1.get_inplace_scratch_len())
            .max(fwd2.get_inplace_scratch_len());
        let map = lattice
            .points()
            .map(|(k1, k2)| {
                let i1 = k1.rem_euclid(m1 as i64) as usize;
                let i2 = k2.rem_euclid(m2 as i64) as usize;
                i1 * m2 + i2
            })
            .collect();
        Ok(GridEngine {
            lattice,
            m1,
            m2,
            inv1,
            inv2,
            fwd1,
            fwd2,
            row_buf: vec![Complex64::new(0.0, 0.0); m1 * m2],
            phys: vec![Complex64::new(0.0, 0.0); m1 * m2],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            map,
        })
    }

    /// Exact-minimum engine for the lattice.
    pub fn for_lattice(lattice: Lattice) -> Self {
        let (m1, m2) = min_grid(&lattice);
        Self::new(lattice, m1, m2).expect("minimum grid always admissible")
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m1, self.m2)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Physical cell area `L*lambda / (m1*m2)`.
    pub fn cell_area(&self) -> f64 {
        self.lattice.box_area() / (self.m1 * self.m2) as f64
    }

    /// Unnormalized synthesis `S(x) = sum_k c_k e(x . xi_k)` of lattice
    /// coefficients onto the grid; the represented function is `S/(L*lambda)`.
    ///
    /// The result lands in [`GridEngine::phys`], indexed `[i2 * m1 + i1]`.
    pub fn synth(&mut self, coef: &[Complex64]) {
        debug_assert_eq!(coef.len(), self.map.len());
        self.row_buf.fill(Complex64::new(0.0, 0.0));
        for (c, &pos) in coef.iter().zip(&self.map) {
            self.row_buf[pos] += *c;
        }
        self.inv2.process_with_scratch(&mut self.row_buf, &mut self.scratch);
        transpose(&self.row_buf, &mut self.phys, self.m1, self.m2);
        self.inv1.process_with_scratch(&mut self.phys, &mut self.scratch);
    }

    /// Grid values from the last `synth` (or values staged for `analyze`),
    /// layout `[i2 * m1 + i1]`.
    pub fn phys(&self) -> &[Complex64] {
        &self.phys
    }

    pub fn phys_mut(&mut self) -> &mut [Complex64] {
        &mut self.phys
    }

    /// Forward transform of the staged grid values, gathered back onto the
    /// lattice: writes `(1/(m1 m2)) sum_x phys(x) e(-x . xi_k)` into `coef`.
    ///
    /// For grid data that is a product of up to three fields synthesized on
    /// this engine, the gathered values are the exact Fourier coefficients
    /// on the retained band. Destroys the staged grid.
    pub fn analyze_into(&mut self, coef: &mut [Complex64]) {
        debug_assert_eq!(coef.len(), self.map.len());
        self.fwd1.process_with_scratch(&mut self.phys, &mut self.scratch);
        transpose(&self.phys, &mut self.row_buf, self.m2, self.m1);
        self.fwd2.process_with_scratch(&mut self.row_buf, &mut self.scratch);
        let scale = 1.0 / (self.m1 * self.m2) as f64;
        for (c, &pos) in coef.iter_mut().zip(&self.map) {
            *c = self.row_buf[pos] * scale;
        }
    }

    /// Sum of `|S(x)|^4` over the staged grid.
    pub fn quartic_sum(&self) -> f64 {
        self.phys
            .iter()
            .map(|z| {
                let q = z.norm_sqr();
                q * q
            })
            .sum()
    }

    /// Sum of `|S1(x) S2(x)|^2` over two staged grids of equal dims.
    pub fn product_sq_sum(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x.norm_sqr() * y.norm_sqr()).sum()
    }
}
