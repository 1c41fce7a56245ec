//! Dispersion symbols: the quadratic forms driving the linear flow.

use serde::{Deserialize, Serialize};

/// Quadratic dispersion relation `H(xi)`.
///
/// The associated symmetric bilinear form `B` satisfies `B(xi, xi) = H(xi)`
/// and the polarization identity `H(xi + eta) - H(xi - eta) = 4 B(xi, eta)`,
/// which is exact in floating point whenever the inputs are exactly
/// representable and small enough, since each branch is a short product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symbol {
    /// `xi1^2 + xi2^2`
    Elliptic,
    /// `xi1^2 - xi2^2`
    Hyperbolic,
    /// `xi1 * xi2`
    Mixed,
}

impl Symbol {
    #[inline]
    pub fn eval(self, xi: (f64, f64)) -> f64 {
        match self {
            Symbol::Elliptic => xi.0 * xi.0 + xi.1 * xi.1,
            Symbol::Hyperbolic => xi.0 * xi.0 - xi.1 * xi.1,
            Symbol::Mixed => xi.0 * xi.1,
        }
    }

    /// The symmetric bilinear form `B(xi, eta)` with `B(xi, xi) = H(xi)`.
    #[inline]
    pub fn bilinear(self, xi: (f64, f64), eta: (f64, f64)) -> f64 {
        match self {
            Symbol::Elliptic => xi.0 * eta.0 + xi.1 * eta.1,
            Symbol::Hyperbolic => xi.0 * eta.0 - xi.1 * eta.1,
            Symbol::Mixed => 0.5 * (xi.0 * eta.1 + xi.1 * eta.0),
        }
    }
}

impl std::fmt::Display for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Symbol::Elliptic => "elliptic",
            Symbol::Hyperbolic => "hyperbolic",
            Symbol::Mixed => "mixed",
        })
    }
}

impl std::str::FromStr for Symbol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "elliptic" => Ok(Symbol::Elliptic),
            "hyperbolic" => Ok(Symbol::Hyperbolic),
            "mixed" => Ok(Symbol::Mixed),
            other => Err(format!(
                "unknown symbol '{other}', expected elliptic, hyperbolic or mixed"
            )),
        }
    }
}
