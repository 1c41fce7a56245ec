//! Truncated frequency lattice on the cylinder and coefficient fields on it.
//!
//! Physical space is a rectangle of side `L` in `x1` (a large torus standing
//! in for the real line, or a genuine torus) and `lambda` in `x2`. Dual to
//! that, frequencies live on `(1/L)Z x (1/lambda)Z`, truncated to the box
//! `|xi_i| <= N`. A lattice point is addressed by integer indices
//! `(k1, k2)` with `xi = (k1/L, k2/lambda)`, enumerated `k2`-major with both
//! coordinates ascending.
//!
//! A function with spectrum `f` on the lattice is
//! `u(x) = (1/(L*lambda)) * sum_xi f(xi) e(x . xi)`, so the counting measure
//! weighted by `1/(L*lambda)` plays the role of `d xi` and
//! `||u||_L2^2 = (1/(L*lambda)) sum |f|^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum ratio of box length to the larger of `lambda` and 1.
///
/// Keeps the `x1` torus long enough that wrap-around effects stay below the
/// tolerances used by the rest of the crate.
pub const MIN_ASPECT: f64 = 8.0;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("lambda must be at least 1, got {0}")]
    Lambda(f64),
    #[error("cutoff must be at least 1, got {0}")]
    Cutoff(f64),
    #[error("box length {len} below minimum {min} for lambda {lambda}")]
    BoxLength { len: f64, lambda: f64, min: f64 },
    #[error("operands live on different lattices")]
    Mismatch,
    #[error("coefficient count {got} does not match lattice size {expected}")]
    CoefCount { expected: usize, got: usize },
    #[error("cannot normalize a field with zero norm")]
    ZeroNorm,
}

/// Whether the `x1` direction models the real line (via a long torus) or is
/// itself compact. The arithmetic is identical; scenarios and reports carry
/// the flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    Rt,
    Tt,
}

impl std::fmt::Display for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Geometry::Rt => "rt",
            Geometry::Tt => "tt",
        })
    }
}

impl std::str::FromStr for Geometry {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rt" => Ok(Geometry::Rt),
            "tt" => Ok(Geometry::Tt),
            other => Err(format!("unknown geometry '{other}', expected rt or tt")),
        }
    }
}

/// Truncated frequency lattice; cheap to copy, compared by parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    lambda: f64,
    len_x1: f64,
    cutoff: f64,
    geometry: Geometry,
    k1max: i64,
    k2max: i64,
}

impl Lattice {
    pub fn new(lambda: f64, len_x1: f64, cutoff: f64, geometry: Geometry) -> Result<Self, LatticeError> {
        if !(lambda >= 1.0) {
            return Err(LatticeError::Lambda(lambda));
        }
        if !(cutoff >= 1.0) {
            return Err(LatticeError::Cutoff(cutoff));
        }
        let min = MIN_ASPECT * lambda.max(1.0);
        if !(len_x1 >= min) {
            return Err(LatticeError::BoxLength { len: len_x1, lambda, min });
        }
        // The tiny slack absorbs round-off when cutoff*len is an exact integer
        // only in exact arithmetic, e.g. 0.5 * 16.
        let k1max = (cutoff * len_x1 + 1e-9).floor() as i64;
        let k2max = (cutoff * lambda + 1e-9).floor() as i64;
        Ok(Lattice { lambda, len_x1, cutoff, geometry, k1max, k2max })
    }

    /// Lattice without the aspect floor, down to a square box.
    ///
    /// Quantities measured here are expected to be box-contaminated; the
    /// double-box gate builds its negative control this way.
    pub fn cramped(
        lambda: f64,
        len_x1: f64,
        cutoff: f64,
        geometry: Geometry,
    ) -> Result<Self, LatticeError> {
        if !(lambda >= 1.0) {
            return Err(LatticeError::Lambda(lambda));
        }
        if !(cutoff >= 1.0) {
            return Err(LatticeError::Cutoff(cutoff));
        }
        let min = lambda.max(1.0);
        if !(len_x1 >= min) {
            return Err(LatticeError::BoxLength { len: len_x1, lambda, min });
        }
        let k1max = (cutoff * len_x1 + 1e-9).floor() as i64;
        let k2max = (cutoff * lambda + 1e-9).floor() as i64;
        Ok(Lattice { lambda, len_x1, cutoff, geometry, k1max, k2max })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn len_x1(&self) -> f64 {
        self.len_x1
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Largest `k1` index; `xi_1` ranges over `[-k1max..k1max] / L`.
    pub fn k1max(&self) -> i64 {
        self.k1max
    }

    /// Largest `k2` index; `xi_2` ranges over `[-k2max..k2max] / lambda`.
    pub fn k2max(&self) -> i64 {
        self.k2max
    }

    /// Area of the physical box, `L * lambda`; also the inverse of the
    /// frequency-space cell weight.
    pub fn box_area(&self) -> f64 {
        self.len_x1 * self.lambda
    }

    /// Number of lattice points.
    pub fn len(&self) -> usize {
        ((2 * self.k1max + 1) * (2 * self.k2max + 1)) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of `(k1, k2)` in enumeration order: `k2`-major, both
    /// coordinates ascending.
    #[inline]
    pub fn index(&self, k1: i64, k2: i64) -> Option<usize> {
        if k1.abs() > self.k1max || k2.abs() > self.k2max {
            return None;
        }
        let row = (k2 + self.k2max) as usize;
        let col = (k1 + self.k1max) as usize;
        Some(row * (2 * self.k1max + 1) as usize + col)
    }

    /// Inverse of [`Lattice::index`].
    #[inline]
    pub fn point(&self, idx: usize) -> (i64, i64) {
        let w = (2 * self.k1max + 1) as usize;
        let k1 = (idx % w) as i64 - self.k1max;
        let k2 = (idx / w) as i64 - self.k2max;
        (k1, k2)
    }

    /// Frequency vector of integer indices `(k1, k2)`.
    #[inline]
    pub fn freq(&self, k1: i64, k2: i64) -> (f64, f64) {
        (k1 as f64 / self.len_x1, k2 as f64 / self.lambda)
    }

    /// All points in enumeration order.
    pub fn points(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let (k1max, k2max) = (self.k1max, self.k2max);
        (-k2max..=k2max).flat_map(move |k2| (-k1max..=k1max).map(move |k1| (k1, k2)))
    }

    /// Sup-norm of the frequency at `(k1, k2)`.
    #[inline]
    pub fn freq_sup_norm(&self, k1: i64, k2: i64) -> f64 {
        let (x1, x2) = self.freq(k1, k2);
        x1.abs().max(x2.abs())
    }
}

/// Frequency-side band selections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Keep `max(|xi_1|, |xi_2|) <= m`.
    LowPass(f64),
    /// Keep the dyadic shell `m/2 < max(|xi_1|, |xi_2|) <= m`.
    Shell(f64),
    /// Zero the `xi_2 = 0` row, removing the `x2`-average.
    MeanZeroX2,
}

impl Projection {
    #[inline]
    fn keeps(&self, lat: &Lattice, k1: i64, k2: i64) -> bool {
        match *self {
            Projection::LowPass(m) => lat.freq_sup_norm(k1, k2) <= m + 1e-12,
            Projection::Shell(m) => {
                let s = lat.freq_sup_norm(k1, k2);
                s > m / 2.0 + 1e-12 && s <= m + 1e-12
            }
            Projection::MeanZeroX2 => k2 != 0,
        }
    }
}

/// A coefficient field over a [`Lattice`], stored in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    lattice: Lattice,
    coef: Vec<Complex64>,
}

impl SpectralField {
    pub fn zero(lattice: Lattice) -> Self {
        let coef = vec![Complex64::new(0.0, 0.0); lattice.len()];
        SpectralField { lattice, coef }
    }

    pub fn from_coef(lattice: Lattice, coef: Vec<Complex64>) -> Result<Self, LatticeError> {
        if coef.len() != lattice.len() {
            return Err(LatticeError::CoefCount { expected: lattice.len(), got: coef.len() });
        }
        Ok(SpectralField { lattice, coef })
    }

    /// Field with a single unit coefficient at `(k1, k2)`.
    pub fn unit_mode(lattice: Lattice, k1: i64, k2: i64) -> Result<Self, LatticeError> {
        let idx = lattice.index(k1, k2).ok_or(LatticeError::CoefCount {
            expected: lattice.len(),
            got: usize::MAX,
        })?;
        let mut f = Self::zero(lattice);
        f.coef[idx] = Complex64::new(1.0, 0.0);
        Ok(f)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn coef(&self) -> &[Complex64] {
        &self.coef
    }

    pub fn coef_mut(&mut self) -> &mut [Complex64] {
        &mut self.coef
    }

    #[inline]
    pub fn get(&self, k1: i64, k2: i64) -> Option<Complex64> {
        self.lattice.index(k1, k2).map(|i| self.coef[i])
    }

    pub fn set(&mut self, k1: i64, k2: i64, v: Complex64) -> Result<(), LatticeError> {
        let idx = self
            .lattice
            .index(k1, k2)
            .ok_or(LatticeError::CoefCount { expected: self.lattice.len(), got: usize::MAX })?;
        self.coef[idx] = v;
        Ok(())
    }

    /// `L2` norm of the represented function, `sqrt((1/(L*lambda)) sum |f|^2)`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.coef.iter().map(|c| c.norm_sqr()).sum();
        (s / self.lattice.box_area()).sqrt()
    }

    /// Apply a band selection in place.
    pub fn project(&mut self, p: Projection) {
        let lat = self.lattice;
        for (idx, c) in self.coef.iter_mut().enumerate() {
            let (k1, k2) = lat.point(idx);
            if !p.keeps(&lat, k1, k2) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Copy of the field with a band selection applied.
    pub fn projected(&self, p: Projection) -> Self {
        let mut f = self.clone();
        f.project(p);
        f
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.coef {
            *c *= a;
        }
    }

    /// Rescale so `l2_norm` equals `target`.
    pub fn normalize(&mut self, target: f64) -> Result<(), LatticeError> {
        let n = self.l2_norm();
        if n == 0.0 || !n.is_finite() {
            return Err(LatticeError::ZeroNorm);
        }
        self.scale(target / n);
        Ok(())
    }

    /// Pointwise `a*self + b*other`; both fields must share a lattice.
    pub fn mix(&self, a: f64, other: &SpectralField, b: f64) -> Result<SpectralField, LatticeError> {
        if self.lattice != other.lattice {
            return Err(LatticeError::Mismatch);
        }
        let coef = self
            .coef
            .iter()
            .zip(&other.coef)
            .map(|(x, y)| x * a + y * b)
            .collect();
        Ok(SpectralField { lattice: self.lattice, coef })
    }

    /// Indices and values of the nonzero coefficients, enumeration order.
    pub fn support(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        self.coef.iter().enumerate().filter_map(move |(idx, c)| {
            if c.norm_sqr() > 0.0 {
                let (k1, k2) = self.lattice.point(idx);
                Some((k1, k2, *c))
            } else {
                None
            }
        })
    }
}
