//! Scaling from physical shallow-water parameters to the KdV regime.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Default bound below which `α` and `β` count as small.
pub const DEFAULT_SMALLNESS: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShallowWaterError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("amplitude {a} m must be below the rest depth {h0} m")]
    AmplitudeExceedsDepth { a: f64, h0: f64 },
    #[error("{name} = {value} out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

/// Physical wave scales in SI units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Characteristic amplitude (m).
    pub a: f64,
    /// Rest depth (m).
    pub h0: f64,
    /// Characteristic wavelength (m).
    pub l: f64,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
}

impl PhysicalParams {
    pub fn new(a: f64, h0: f64, l: f64) -> Self {
        Self {
            a,
            h0,
            l,
            g: STANDARD_GRAVITY,
        }
    }

    pub fn validate(&self) -> Result<(), ShallowWaterError> {
        for (name, value) in [("a", self.a), ("h0", self.h0), ("l", self.l), ("g", self.g)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ShallowWaterError::NonPositive { name, value });
            }
        }
        if self.a >= self.h0 {
            return Err(ShallowWaterError::AmplitudeExceedsDepth {
                a: self.a,
                h0: self.h0,
            });
        }
        Ok(())
    }
}

/// Dimensionless numbers of a physical configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dimensionless {
    /// Amplitude over depth, `a / h0`.
    pub alpha: f64,
    /// Squared depth over wavelength, `h0² / l²`.
    pub beta: f64,
    /// Linear long-wave speed `√(g h0)` (m/s).
    pub c0: f64,
    /// Physical time `l / (c0 α)` (s) over which the KdV approximation applies.
    pub t_phys_scale: f64,
}

pub fn dimensionless(p: &PhysicalParams) -> Result<Dimensionless, ShallowWaterError> {
    p.validate()?;
    let alpha = p.a / p.h0;
    let c0 = (p.g * p.h0).sqrt();
    Ok(Dimensionless {
        alpha,
        beta: (p.h0 * p.h0) / (p.l * p.l),
        c0,
        t_phys_scale: p.l / (c0 * alpha),
    })
}

fn check_scaling(delta: f64, eps: f64) -> Result<(), ShallowWaterError> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(ShallowWaterError::OutOfRange {
            name: "delta",
            value: delta,
            reason: "must be nonnegative",
        });
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(ShallowWaterError::OutOfRange {
            name: "eps",
            value: eps,
            reason: "must lie in (0, 1]",
        });
    }
    Ok(())
}

/// `(α_ε, β_ε) = (δ/√ε, δ/ε²)` after amplifying the amplitude by `1/√ε` and
/// shrinking the wavelength by `ε`.
pub fn epsilon_modified(delta: f64, eps: f64) -> Result<(f64, f64), ShallowWaterError> {
    check_scaling(delta, eps)?;
    Ok((delta / eps.sqrt(), delta / (eps * eps)))
}

/// Model error `α_ε + β_ε²/α_ε = δ/√ε + δ/ε^{3.5}`.
pub fn mismatch(delta: f64, eps: f64) -> Result<f64, ShallowWaterError> {
    check_scaling(delta, eps)?;
    // β_ε²/α_ε simplified so that ε = 1 gives exactly 2δ
    Ok(delta / eps.sqrt() + delta / eps.powf(3.5))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub delta: f64,
    pub eps: f64,
    pub threshold: f64,
    pub alpha_eps: f64,
    pub beta_eps: f64,
    pub alpha_small: bool,
    pub beta_small: bool,
    /// Expected relative model error over `T = O(1)`.
    pub mismatch: f64,
}

impl RegimeReport {
    pub fn passed(&self) -> bool {
        self.alpha_small && self.beta_small
    }
}

impl std::fmt::Display for RegimeReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = |ok: bool| if ok { "small" } else { "NOT small" };
        writeln!(f, "delta      {:>12.6}", self.delta)?;
        writeln!(f, "eps        {:>12.6}", self.eps)?;
        writeln!(f, "threshold  {:>12.6}", self.threshold)?;
        writeln!(
            f,
            "alpha_eps  {:>12.6}  {}",
            self.alpha_eps,
            verdict(self.alpha_small)
        )?;
        writeln!(
            f,
            "beta_eps   {:>12.6}  {}",
            self.beta_eps,
            verdict(self.beta_small)
        )?;
        writeln!(f, "mismatch   {:>12.6}", self.mismatch)?;
        write!(
            f,
            "regime     {:>12}",
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

pub fn validate_regime(
    delta: f64,
    eps: f64,
    threshold: f64,
) -> Result<RegimeReport, ShallowWaterError> {
    let (alpha_eps, beta_eps) = epsilon_modified(delta, eps)?;
    Ok(RegimeReport {
        delta,
        eps,
        threshold,
        alpha_eps,
        beta_eps,
        alpha_small: alpha_eps < threshold,
        beta_small: beta_eps < threshold,
        mismatch: mismatch(delta, eps)?,
    })
}
