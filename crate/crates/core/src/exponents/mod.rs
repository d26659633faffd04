//! Rate regions and exponent functions, all in nats.
//!
//! * [`reliability`]: the source-coding error exponent `E(R | p_X)`.
//! * [`omega`]: the function `Omega^{(mu, alpha)}`, its minimization over
//!   auxiliary channels, and the secrecy exponents `F` and `G` built on it.
//! * [`region`]: the rate region `R(p_K, W)` via supporting lines.
//! * [`delta`]: finite-blocklength penalty terms.
//! * [`tilt`]: exponential tilting and the `vartheta` / `g` pair.

pub mod delta;
pub mod omega;
pub mod optimize;
pub mod region;
pub mod reliability;
pub mod tilt;

use serde::Serialize;

pub use delta::{delta_terms, DeltaTerms};
pub use omega::{
    f_exponent, g_exponent, g_exponent_fixed, omega, ExponentSurface, GSearch, GSearchSettings, OmegaProblem,
    SurfaceSettings,
};
pub use optimize::CdSettings;
pub use region::{inner_region_test, rate_region_boundary, RegionBoundary, RegionProperties, RegionSettings, SupportPoint};
pub use reliability::{reliability_exponent, reliability_objective};
pub use tilt::{g_inv, tilt, vartheta};

/// Which side of the exact value a reported number sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundDirection {
    /// Proven lower bound, within the stated gap of the optimum.
    CertifiedLower,
    /// Value at a feasible point of a minimization.
    BestFoundUpper,
    /// Mixed: a sup over a grid of inner minima that are themselves
    /// best-found.
    Heuristic,
}

impl BoundDirection {
    pub fn name(self) -> &'static str {
        match self {
            Self::CertifiedLower => "certified_lower",
            Self::BestFoundUpper => "best_found_upper",
            Self::Heuristic => "heuristic",
        }
    }
}

/// Where the optimum was found.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// Minimizer `p_Xbar` of the reliability objective.
    Source { p_bar: Vec<f64> },
    /// `(mu, alpha)` and the auxiliary `q_U`, `q_{Z|U}` attaining the inner
    /// minimum there.
    MuAlpha {
        mu: f64,
        alpha: f64,
        q_u: Vec<f64>,
        q_z_given_u: Vec<Vec<f64>>,
    },
    /// Outer minimizer `p_KbarZbar` (row-major over `X x Z`) together with
    /// the certificate of its inner value.
    Joint {
        joint: Vec<f64>,
        divergence: f64,
        inner: Box<Certificate>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentResult {
    pub value: f64,
    pub certificate: Certificate,
    pub bound_direction: BoundDirection,
}
