//! Finite-support Heaviside/Dirac regularization and epsilon selection.
//!
//! Volume and surface integrals over an embedding replace the sharp
//! Heaviside and Dirac delta with the sine-based finite-support pair
//! `theta_eps` / `dirac_eps`. Outside `|x| <= eps` they are exactly 0/1,
//! which keeps far-field voxels out of every integral.
//!
//! How to pick `eps` depends on what the embedding values mean:
//!
//! * Signed-distance embeddings encode millimetres, so `eps` is simply
//!   half the physical shell thickness: [`epsilon_for_sdt`].
//! * Gaussian-blur embeddings are unitless. To average over a physical
//!   thickness `t` the blurred edge profile is inverted, giving
//!   `eps = erf(t / (2*sqrt(2)*sigma)) / 2`: [`epsilon_from_thickness`].
//!   For `t << sigma` this linearizes to `t / (2*sigma*sqrt(2*pi))`
//!   ([`epsilon_linearized`]).
//!
//! [`RegParams`] bundles the thickness with the resolved epsilon and
//! remembers which regime it belongs to, so the integration layer can
//! refuse to mix them.

use crate::{EmbedMethod, Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

/// Regularized Heaviside with support `[-eps, eps]`.
///
/// `1/2 [1 + x/eps + sin(pi x / eps)/pi]` inside the support, exactly 0
/// below and 1 above; continuously differentiable at the joins. The last
/// ulp of `sin` rounding at the joins is clamped so the range is exactly
/// `[0, 1]`. Panics if `eps <= 0`.
pub fn heaviside_eps(x: f64, eps: f64) -> f64 {
    assert!(eps > 0.0, "heaviside_eps requires eps > 0, got {eps}");
    if x > eps {
        1.0
    } else if x < -eps {
        0.0
    } else {
        (0.5 * (1.0 + x / eps + (PI * x / eps).sin() / PI)).clamp(0.0, 1.0)
    }
}

/// Regularized Dirac delta with support `[-eps, eps]`; the derivative of
/// [`heaviside_eps`]. Panics if `eps <= 0`.
pub fn dirac_eps(x: f64, eps: f64) -> f64 {
    assert!(eps > 0.0, "dirac_eps requires eps > 0, got {eps}");
    if x.abs() > eps {
        0.0
    } else {
        (1.0 + (PI * x / eps).cos()) / (2.0 * eps)
    }
}

/// Epsilon (embedding units) so that surface integrals over a
/// Gaussian-blur embedding average across a shell of physical thickness
/// `t_mm`: `erf(t / (2*sqrt(2)*sigma)) / 2`. Lies in (0, 0.5).
pub fn epsilon_from_thickness(t_mm: f64, sigma_mm: f64) -> Result<f64> {
    check_positive("regularization thickness", t_mm)?;
    check_positive("sigma", sigma_mm)?;
    Ok(0.5 * libm::erf(t_mm / (2.0 * std::f64::consts::SQRT_2 * sigma_mm)))
}

/// Small-thickness linearization of [`epsilon_from_thickness`]:
/// `t / (2*sigma*sqrt(2*pi))`. Close to the exact rule for `t << sigma`
/// (within 1% up to about `t = sigma/2`).
pub fn epsilon_linearized(t_mm: f64, sigma_mm: f64) -> Result<f64> {
    if t_mm == 0.0 {
        return Ok(0.0);
    }
    check_positive("regularization thickness", t_mm)?;
    check_positive("sigma", sigma_mm)?;
    Ok(t_mm / (2.0 * sigma_mm * (2.0 * PI).sqrt()))
}

/// Epsilon (mm) for a signed-distance embedding: half the shell thickness
/// sits on each side of the surface, so `eps = t/2`.
pub fn epsilon_for_sdt(t_mm: f64) -> Result<f64> {
    check_positive("regularization thickness", t_mm)?;
    Ok(0.5 * t_mm)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )));
    }
    Ok(())
}

/// Units of a resolved regularization width. Embedding-unit epsilons pair
/// with Gaussian-blur embeddings, millimetre epsilons with
/// signed-distance embeddings; the two must never be mixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "units", content = "value")]
pub enum Epsilon {
    #[serde(rename = "embedding")]
    EmbeddingUnits(f64),
    #[serde(rename = "mm")]
    Millimetres(f64),
}

impl Epsilon {
    pub fn value(self) -> f64 {
        match self {
            Epsilon::EmbeddingUnits(v) | Epsilon::Millimetres(v) => v,
        }
    }
}

/// Regularization parameter bundle for one morphometry run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegParams {
    /// Physical shell thickness the integrals average over, mm.
    pub thickness_mm: f64,
    /// Blur standard deviation (Gaussian embeddings only), mm.
    pub sigma_mm: Option<f64>,
    /// Embedding threshold T (Gaussian embeddings only). Epsilon does not
    /// depend on it.
    pub threshold: Option<f64>,
    /// Resolved regularization width in the matching units.
    pub epsilon: Epsilon,
}

impl RegParams {
    /// Resolve epsilon for `method` from a physical thickness:
    /// `epsilon_from_thickness` for Gaussian-blur embeddings,
    /// `epsilon_for_sdt` for signed-distance embeddings.
    pub fn for_method(thickness_mm: f64, method: &EmbedMethod) -> Result<Self> {
        match *method {
            EmbedMethod::GaussianBlur {
                sigma_mm,
                threshold,
            } => {
                if !(threshold.is_finite() && threshold > 0.0 && threshold < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "threshold must lie in (0,1), got {threshold}"
                    )));
                }
                Ok(RegParams {
                    thickness_mm,
                    sigma_mm: Some(sigma_mm),
                    threshold: Some(threshold),
                    epsilon: Epsilon::EmbeddingUnits(epsilon_from_thickness(
                        thickness_mm,
                        sigma_mm,
                    )?),
                })
            }
            EmbedMethod::SignedDistance => Ok(RegParams {
                thickness_mm,
                sigma_mm: None,
                threshold: None,
                epsilon: Epsilon::Millimetres(epsilon_for_sdt(thickness_mm)?),
            }),
        }
    }

    /// True when this bundle's epsilon regime matches `method`.
    pub fn matches(&self, method: &EmbedMethod) -> bool {
        matches!(
            (self.epsilon, method),
            (Epsilon::EmbeddingUnits(_), EmbedMethod::GaussianBlur { .. })
                | (Epsilon::Millimetres(_), EmbedMethod::SignedDistance)
        )
    }
}
