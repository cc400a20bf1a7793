//! Near-linear dynamics experiments on scaled Hermite initial data.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::{
    evolve, linear_propagator, to_interaction_picture, IntegratorError, KdvParams, TrajectoryRecord,
};
use crate::spectral::{FourierField, Grid, SpectralError, Transform};

/// Largest admissible Gaussian tail `|u(±π)|` before the periodic sampling
/// visibly aliases the profile.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// Allowed disagreement between the physical and interaction-picture
/// computations of the near-linearity error, relative to `max(1, ‖φ‖)`.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// Sweep errors below this (for unit-norm data) are rounding noise and make
/// the slope fit undefined.
pub const ERROR_FLOOR: f64 = 1e-13;

/// Time of the short-time snapshot in the return experiment.
pub const SNAPSHOT_TIME: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid {name}: {reason}")]
    InvalidInput { name: &'static str, reason: String },
    #[error("error routes disagree at t = {t}: physical {physical}, spectral {spectral}")]
    IdentityViolation {
        t: f64,
        physical: f64,
        spectral: f64,
    },
}

fn invalid(name: &'static str, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::InvalidInput {
        name,
        reason: reason.into(),
    }
}

/// `u(x) = (A/√ε)(x/ε) e^{-x²/(2ε²)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiteSpec {
    pub epsilon: f64,
    pub amplitude: f64,
}

impl HermiteSpec {
    pub fn new(epsilon: f64, amplitude: f64) -> Result<Self, ExperimentError> {
        let spec = Self { epsilon, amplitude };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(invalid(
                "epsilon",
                format!("{} not in (0, 1]", self.epsilon),
            ));
        }
        if !self.amplitude.is_finite() {
            return Err(invalid("amplitude", "must be finite"));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let s = x / self.epsilon;
        self.amplitude / self.epsilon.sqrt() * s * (-0.5 * s * s).exp()
    }

    /// `|u(π)|`, the size of the jump seen by periodic extension.
    pub fn tail(&self) -> f64 {
        self.eval(PI).abs()
    }

    /// Closed-form `∫ u² dx` over the line, `A²√π/2`.
    pub fn line_energy(&self) -> f64 {
        self.amplitude * self.amplitude * PI.sqrt() / 2.0
    }
}

/// Samples the Hermite profile on an `m`-point grid and returns its modes.
pub fn hermite_initial(spec: HermiteSpec, m: usize) -> Result<FourierField, ExperimentError> {
    spec.validate()?;
    let grid = Grid::new(m)?;
    let tail = spec.tail();
    if tail > TAIL_TOLERANCE {
        log::warn!(
            "Hermite tail {tail:.3e} at |x| = π exceeds {TAIL_TOLERANCE:e}; periodic data aliases"
        );
    }
    let samples = grid.sample(|x| spec.eval(x));
    Ok(Transform::new(grid).analyze(&samples)?)
}

/// Hermite data rescaled to unit coefficient ℓ² norm.
pub fn normalized_hermite(epsilon: f64, m: usize) -> Result<FourierField, ExperimentError> {
    let phi = hermite_initial(HermiteSpec::new(epsilon, 1.0)?, m)?;
    Ok(phi.scale(1.0 / phi.l2_norm()))
}

/// Sup norm of the physical profile on an `m`-point grid.
pub fn sup_norm(field: &FourierField, m: usize) -> Result<f64, ExperimentError> {
    let samples = Transform::new(Grid::new(m)?).synthesize(field)?;
    Ok(samples.iter().fold(0.0f64, |acc, s| acc.max(s.abs())))
}

/// Distance from the linear flow at each sample time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearLinearity {
    pub times: Vec<f64>,
    /// `‖v(t) − v(0)‖_{ℓ²}` in interaction-picture variables.
    pub errors: Vec<f64>,
    /// `‖u(t) − e^{t∂³}φ‖` from physical samples, normalized like ℓ².
    pub physical_errors: Vec<f64>,
    pub record: TrajectoryRecord,
}

impl NearLinearity {
    pub fn terminal_error(&self) -> f64 {
        self.errors.last().copied().unwrap_or(0.0)
    }

    /// Largest gap between the two error routes.
    pub fn identity_gap(&self) -> f64 {
        self.errors
            .iter()
            .zip(&self.physical_errors)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Evolves `phi` and measures its distance from the linear flow, checking
/// that the interaction-picture and physical-space routes agree.
pub fn near_linearity_error(
    phi: &FourierField,
    p: &KdvParams,
    sample_times: &[f64],
) -> Result<NearLinearity, ExperimentError> {
    let record = evolve(phi, p, sample_times)?;
    let grid = p.validate()?;
    let mut transform = Transform::new(grid);
    let phi = phi.with_cutoff(grid.cutoff());
    let scale = phi.l2_norm().max(1.0);

    let mut errors = Vec::with_capacity(record.times.len());
    let mut physical_errors = Vec::with_capacity(record.times.len());
    for (&t, u) in record.times.iter().zip(&record.snapshots) {
        // the propagator is unitary, so this equals ‖v(t) − v(0)‖
        let free = linear_propagator(&phi, t, p.a);
        let spectral = (u - &free).l2_norm();
        let evolved = transform.synthesize(u)?;
        let linear = transform.synthesize(&free)?;
        // the grid mean of squares is the coefficient ℓ² norm squared
        let mean_sq = evolved
            .iter()
            .zip(&linear)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / grid.len() as f64;
        let physical = mean_sq.sqrt();
        if (physical - spectral).abs() > IDENTITY_TOLERANCE * scale {
            return Err(ExperimentError::IdentityViolation {
                t,
                physical,
                spectral,
            });
        }
        errors.push(spectral);
        physical_errors.push(physical);
    }
    Ok(NearLinearity {
        times: record.times.clone(),
        errors,
        physical_errors,
        record,
    })
}

/// Uniform sample times `0, T/n, …, T`.
pub fn uniform_times(t_final: f64, intervals: usize) -> Vec<f64> {
    let n = intervals.max(1);
    (0..=n).map(|i| t_final * i as f64 / n as f64).collect()
}

/// Outcome of evolving for one linear period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnReport {
    pub spec: HermiteSpec,
    pub params: KdvParams,
    /// `‖u(2π) − φ‖ / ‖φ‖`.
    pub relative_return_error: f64,
    pub initial_sup: f64,
    pub snapshot_time: f64,
    pub snapshot_sup: f64,
    pub initial_energy: f64,
    pub energy_drift: f64,
    pub max_abs_momentum: f64,
    pub identity_gap: f64,
    pub near_linearity: NearLinearity,
    #[serde(skip)]
    pub initial: FourierField,
    #[serde(skip)]
    pub snapshot: FourierField,
    #[serde(skip)]
    pub evolved: FourierField,
}

/// Runs to `T = 2π` with unit dispersion, where the linear flow is periodic.
pub fn return_experiment(
    spec: HermiteSpec,
    p: &KdvParams,
) -> Result<ReturnReport, ExperimentError> {
    if p.a != 1.0 {
        return Err(invalid(
            "a",
            format!("return test needs a = 1, got {}", p.a),
        ));
    }
    let mut p = p.clone();
    p.t_final = TAU;
    let phi = hermite_initial(spec, p.m)?;
    let times = [0.0, SNAPSHOT_TIME, TAU];
    let near = near_linearity_error(&phi, &p, &times)?;
    let snapshot = near.record.snapshots[1].clone();
    let evolved = near.record.snapshots[2].clone();
    let initial_norm = phi.l2_norm();
    let relative_return_error = if initial_norm > 0.0 {
        (&evolved - &phi).l2_norm() / initial_norm
    } else {
        0.0
    };
    Ok(ReturnReport {
        spec,
        relative_return_error,
        initial_sup: sup_norm(&phi, p.m)?,
        snapshot_time: SNAPSHOT_TIME,
        snapshot_sup: sup_norm(&snapshot, p.m)?,
        initial_energy: phi.energy(),
        energy_drift: near.record.energy_drift(),
        max_abs_momentum: near.record.max_abs_momentum(),
        identity_gap: near.identity_gap(),
        near_linearity: near,
        params: p,
        initial: phi,
        snapshot,
        evolved,
    })
}

/// Nonlinear evolution pulled back by the reverse linear flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackReport {
    pub spec: HermiteSpec,
    pub params: KdvParams,
    pub t_final: f64,
    /// `‖e^{-T∂³}u(T) − φ‖ / ‖φ‖`.
    pub relative_discrepancy: f64,
    /// Sup over the grid of `|e^{-T∂³}u(T) − φ|`.
    pub physical_sup_discrepancy: f64,
    /// Physical-normalization energy `2π Σ|φ_k|²`.
    pub initial_physical_energy: f64,
    pub energy_drift: f64,
    pub max_abs_momentum: f64,
    #[serde(skip)]
    pub initial: FourierField,
    #[serde(skip)]
    pub pulled_back: FourierField,
}

pub fn pullback_comparison(
    spec: HermiteSpec,
    p: &KdvParams,
    t_final: f64,
) -> Result<PullbackReport, ExperimentError> {
    let mut p = p.clone();
    p.t_final = t_final;
    let phi = hermite_initial(spec, p.m)?;
    let record = evolve(&phi, &p, &[0.0, t_final])?;
    let evolved = record.last().expect("two samples requested");
    let pulled_back = to_interaction_picture(evolved, t_final, p.a);
    let diff = &pulled_back - &phi;
    let norm = phi.l2_norm();
    Ok(PullbackReport {
        spec,
        t_final,
        relative_discrepancy: if norm > 0.0 {
            diff.l2_norm() / norm
        } else {
            0.0
        },
        physical_sup_discrepancy: sup_norm(&diff, p.m)?,
        initial_physical_energy: TAU * phi.energy(),
        energy_drift: record.energy_drift(),
        max_abs_momentum: record.max_abs_momentum(),
        params: p,
        initial: phi,
        pulled_back,
    })
}

/// One member of an ε-sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    /// `‖φ‖_{Ḣ^{-1/2}}` of the unit-ℓ² data.
    pub negative_sobolev_norm: f64,
    pub error_at_t: f64,
    pub energy_drift: f64,
    pub max_abs_momentum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub t_final: f64,
    pub params: KdvParams,
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of `log error` against `log ‖φ‖_{Ḣ^{-1/2}}`;
    /// `None` when some error is below [`ERROR_FLOOR`] or the norms do not vary.
    pub fitted_slope: Option<f64>,
}

impl SweepResult {
    pub fn epsilons(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.epsilon).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.error_at_t).collect()
    }

    /// Whether the error shrinks strictly along with `‖φ‖_{Ḣ^{-1/2}}`.
    pub fn error_decreases_with_norm(&self) -> bool {
        let mut pts: Vec<_> = self.points.iter().collect();
        pts.sort_by(|a, b| a.negative_sobolev_norm.total_cmp(&b.negative_sobolev_norm));
        pts.windows(2).all(|w| w[0].error_at_t < w[1].error_at_t)
    }
}

/// Least-squares slope through `(ln x, ln y)`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs
        .iter()
        .chain(ys)
        .any(|v| !(v.is_finite() && *v > f64::MIN_POSITIVE))
    {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs unit-ℓ² Hermite data for each ε to time `T` and fits the error
/// against `‖φ‖_{Ḣ^{-1/2}}`. Members run concurrently; results keep the
/// input order.
pub fn epsilon_sweep(
    epsilons: &[f64],
    p: &KdvParams,
    t_final: f64,
) -> Result<SweepResult, ExperimentError> {
    if epsilons.len() < 3 {
        return Err(invalid("epsilons", "a sweep needs at least 3 values"));
    }
    let mut p = p.clone();
    p.t_final = t_final;
    let points = epsilons
        .par_iter()
        .map(|&epsilon| {
            let phi = normalized_hermite(epsilon, p.m)?;
            let near = near_linearity_error(&phi, &p, &[0.0, t_final])?;
            Ok(SweepPoint {
                epsilon,
                negative_sobolev_norm: phi.sobolev_norm(-0.5),
                error_at_t: near.terminal_error(),
                energy_drift: near.record.energy_drift(),
                max_abs_momentum: near.record.max_abs_momentum(),
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let norms: Vec<f64> = points.iter().map(|s| s.negative_sobolev_norm).collect();
    let errors: Vec<f64> = points.iter().map(|s| s.error_at_t).collect();
    let fitted_slope = if errors.iter().all(|&e| e > ERROR_FLOOR) {
        log_log_slope(&norms, &errors)
    } else {
        None
    };
    Ok(SweepResult {
        t_final,
        params: p,
        fitted_slope,
        points,
    })
}
