//! Time windows for space-time integrals.
//!
//! Two weights are supported. `Sharp` is the plain indicator of `[t0, t1]`.
//! `Smooth` is a fixed even majorant built from `sinc^8`:
//!
//! `w(t) = c * sinc(pi t / 8)^8`, with `c = sinc(pi/4)^{-8}`,
//!
//! chosen so that `w >= 1` on `[-2, 2]` with equality at the endpoints, and
//! so that its Fourier transform (in the `e(t tau)` convention) is the
//! compactly supported spline `w_hat(tau) = 8 c * B8(8 tau)`, where `B8` is
//! the centered cardinal B-spline of order 8. `w_hat` vanishes outside
//! `|tau| <= 1/2` and is nonnegative, which makes quadrature of windowed
//! oscillatory integrals alias-free once the sampling rate clears the
//! spectral width.
//!
//! A smooth window over `[t0, t1]` integrates `w(t - mid)` over
//! `[mid - T, mid + T]` with `T = 24`; the discarded tails contribute below
//! `1e-7` in relative terms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Half-width of the truncated integration domain for the smooth weight.
pub const SMOOTH_TAIL_CUT: f64 = 24.0;

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("window needs t1 > t0, got [{0}, {1}]")]
    EmptyInterval(f64, f64),
    #[error("window needs at least 2 sample nodes, got {0}")]
    TooFewSamples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bump {
    Sharp,
    Smooth,
}

/// Normalized sinc, `sin(x)/x`.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn sinc8_scale() -> f64 {
    sinc(std::f64::consts::FRAC_PI_4).powi(-8)
}

/// The smooth time weight `w(t)`; even, positive, `w(+-2) = 1`.
pub fn smooth_weight(t: f64) -> f64 {
    sinc8_scale() * sinc(std::f64::consts::PI * t / 8.0).powi(8)
}

/// Centered cardinal B-spline of order 8, support `[-4, 4]`, `B8(0) = 151/315`.
///
/// Evaluated with the Cox-de Boor recursion, which only ever forms
/// nonnegative combinations and so stays accurate out to the endpoints of
/// the support.
pub fn bspline8(x: f64) -> f64 {
    const N: usize = 8;
    // level 1 holds B_1 at the points x + (N-1)/2 - j, descending
    let mut vals = [0.0f64; N];
    for (j, v) in vals.iter_mut().enumerate() {
        let y = x + (N as f64 - 1.0) / 2.0 - j as f64;
        *v = if (-0.5..0.5).contains(&y) { 1.0 } else { 0.0 };
    }
    for n in 1..N {
        let nf = n as f64;
        for j in 0..N - n {
            let y = x + (N as f64 - 1.0 - nf) / 2.0 - j as f64;
            let a = (nf + 1.0) / 2.0 + y;
            let b = (nf + 1.0) / 2.0 - y;
            vals[j] = (a * vals[j] + b * vals[j + 1]) / nf;
        }
    }
    vals[0]
}

/// Fourier transform of [`smooth_weight`]: `8 c * B8(8 tau)`, supported on
/// `|tau| <= 1/2`.
pub fn smooth_weight_hat(tau: f64) -> f64 {
    8.0 * sinc8_scale() * bspline8(8.0 * tau)
}

/// A quadrature-ready time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    t0: f64,
    t1: f64,
    samples: usize,
    bump: Bump,
}

impl TimeWindow {
    pub fn sharp(t0: f64, t1: f64, samples: usize) -> Result<Self, WindowError> {
        Self::new(t0, t1, samples, Bump::Sharp)
    }

    pub fn smooth(t0: f64, t1: f64, samples: usize) -> Result<Self, WindowError> {
        Self::new(t0, t1, samples, Bump::Smooth)
    }

    pub fn new(t0: f64, t1: f64, samples: usize, bump: Bump) -> Result<Self, WindowError> {
        if !(t1 > t0) {
            return Err(WindowError::EmptyInterval(t0, t1));
        }
        if samples < 2 {
            return Err(WindowError::TooFewSamples(samples));
        }
        Ok(TimeWindow { t0, t1, samples, bump })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn bump(&self) -> Bump {
        self.bump
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.t0 + self.t1)
    }

    /// Actual integration interval: the window itself for `Sharp`, the
    /// truncated tail-inclusive interval around the midpoint for `Smooth`.
    pub fn domain(&self) -> (f64, f64) {
        match self.bump {
            Bump::Sharp => (self.t0, self.t1),
            Bump::Smooth => (self.mid() - SMOOTH_TAIL_CUT, self.mid() + SMOOTH_TAIL_CUT),
        }
    }

    pub fn domain_len(&self) -> f64 {
        let (a, b) = self.domain();
        b - a
    }

    /// Node spacing of the uniform grid.
    pub fn dt(&self) -> f64 {
        self.domain_len() / (self.samples - 1) as f64
    }

    /// Time of node `i`, `0 <= i < samples`.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        let (a, _) = self.domain();
        a + self.dt() * i as f64
    }

    /// Trapezoid quadrature weight of node `i`, including the bump value.
    #[inline]
    pub fn quad_weight(&self, i: usize) -> f64 {
        let trap = if i == 0 || i + 1 == self.samples { 0.5 } else { 1.0 };
        let base = trap * self.dt();
        match self.bump {
            Bump::Sharp => base,
            Bump::Smooth => base * smooth_weight(self.node(i) - self.mid()),
        }
    }
}
