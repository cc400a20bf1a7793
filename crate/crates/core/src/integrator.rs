//! Time integration of `u_t = a u_xxx + b u u_x` on the 2π-torus.
//!
//! In Fourier variables the equation reads
//! `∂t u_k = -i a k³ u_k + (i k b / 2) (u*u)_k`. The linear part is
//! propagated exactly; the quadratic term is formed pseudospectrally with
//! optional 2/3-rule dealiasing. Two schemes are provided: the
//! Fornberg–Whitham leapfrog (exact sine factor on the dispersive term) and
//! classical RK4 in the interaction picture `v_k = e^{i a k³ t} u_k`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{FourierField, Grid, SpectralError, Transform};

/// Growth factor over the initial ℓ² norm treated as a numerical blow-up.
pub const BLOWUP_FACTOR: f64 = 1e6;

/// Time step of the full-fidelity reproduction profile.
pub const PAPER_DT: f64 = 1e-7;
/// Time step of the desk profile.
pub const DESK_DT: f64 = 1e-5;
/// Grid size used throughout the reproduction runs.
pub const DEFAULT_M: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParams { name: &'static str, reason: String },
    #[error("sample times must be sorted and lie in [0, {t_final}]")]
    InvalidSampleTimes { t_final: f64 },
    #[error("field cutoff {field} exceeds the grid cutoff {grid}")]
    CutoffMismatch { field: usize, grid: usize },
    #[error("numerical instability at t = {t}: ℓ² norm {norm:e} (initial {initial:e}); reduce dt")]
    Instability { t: f64, norm: f64, initial: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    FornbergWhitham,
    IntegratingFactorRk4,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::FornbergWhitham => "fornberg-whitham",
            Scheme::IntegratingFactorRk4 => "if-rk4",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fornberg-whitham" | "fw" | "leapfrog" => Ok(Scheme::FornbergWhitham),
            "if-rk4" | "rk4" => Ok(Scheme::IntegratingFactorRk4),
            other => Err(format!("unknown scheme `{other}`")),
        }
    }
}

/// Equation coefficients and discretisation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdvParams {
    /// Dispersion coefficient in front of `u_xxx`.
    pub a: f64,
    /// Nonlinear coefficient in front of `u u_x`.
    pub b: f64,
    pub dt: f64,
    pub t_final: f64,
    pub m: usize,
    pub scheme: Scheme,
    pub dealias: bool,
}

impl Default for KdvParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            dt: DESK_DT,
            t_final: 1.0,
            m: DEFAULT_M,
            scheme: Scheme::IntegratingFactorRk4,
            dealias: true,
        }
    }
}

impl KdvParams {
    /// `u_t = u_xxx + u u_x`, desk profile.
    pub fn unit(t_final: f64) -> Self {
        Self {
            t_final,
            ..Self::default()
        }
    }

    /// `u_t = (3/2) u u_x + (1/6) u_xxx`, the shallow-water normalisation.
    pub fn water_wave(t_final: f64) -> Self {
        Self {
            a: 1.0 / 6.0,
            b: 1.5,
            t_final,
            ..Self::default()
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme, dt: f64) -> Self {
        self.scheme = scheme;
        self.dt = dt;
        self
    }

    /// Fornberg–Whitham at `Δt = 10⁻⁷`.
    pub fn paper_profile(self) -> Self {
        self.with_scheme(Scheme::FornbergWhitham, PAPER_DT)
    }

    /// IF-RK4 at `Δt = 10⁻⁵`.
    pub fn desk_profile(self) -> Self {
        self.with_scheme(Scheme::IntegratingFactorRk4, DESK_DT)
    }

    pub fn validate(&self) -> Result<Grid, IntegratorError> {
        let positive = |name: &'static str, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(IntegratorError::InvalidParams {
                    name,
                    reason: format!("must be finite and > 0, got {value}"),
                })
            }
        };
        positive("dt", self.dt)?;
        positive("t_final", self.t_final)?;
        for (name, value) in [("a", self.a), ("b", self.b)] {
            if !value.is_finite() {
                return Err(IntegratorError::InvalidParams {
                    name,
                    reason: format!("must be finite, got {value}"),
                });
            }
        }
        Ok(Grid::new(self.m)?)
    }
}

/// `e^{-i a k³ t}`, with the phase reduced modulo 2π in turns so that
/// `a k³ t` that is an exact multiple of 2π yields exactly 1.
#[inline]
pub fn dispersion_factor(a: f64, k: i64, t: f64) -> Complex64 {
    let cube = (k * k * k) as f64;
    let turns = a * cube * (t / TAU);
    let frac = turns - turns.round();
    Complex64::from_polar(1.0, -TAU * frac)
}

/// Exact linear flow `e^{t a ∂x³}`.
pub fn linear_propagator(field: &FourierField, t: f64, a: f64) -> FourierField {
    field.map_modes(|k, u| u * dispersion_factor(a, k, t))
}

/// `v_k = u_k e^{i a k³ t}`.
pub fn to_interaction_picture(u: &FourierField, t: f64, a: f64) -> FourierField {
    linear_propagator(u, -t, a)
}

/// `u_k = v_k e^{-i a k³ t}`.
pub fn from_interaction_picture(v: &FourierField, t: f64, a: f64) -> FourierField {
    linear_propagator(v, t, a)
}

/// Highest mode kept by the 2/3 rule for a field of cutoff `k`.
pub fn dealias_cutoff(cutoff: usize) -> usize {
    2 * cutoff / 3
}

/// Pseudospectral evaluation of `(i k b / 2) F(u²)_k` on a fixed grid.
#[derive(Debug, Clone)]
pub struct NonlinearTerm {
    transform: Transform,
    b: f64,
    dealias: bool,
    cutoff: usize,
    samples: Vec<f64>,
    filtered: FourierField,
}

impl NonlinearTerm {
    /// Evaluator for fields of cutoff `grid.cutoff()`.
    pub fn new(grid: Grid, b: f64, dealias: bool) -> Self {
        let cutoff = grid.cutoff();
        Self {
            transform: Transform::new(grid),
            b,
            dealias,
            cutoff,
            samples: vec![0.0; grid.len()],
            filtered: FourierField::zeros(cutoff),
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Highest mode that receives a nonzero nonlinear contribution.
    pub fn active_cutoff(&self) -> usize {
        if self.dealias {
            dealias_cutoff(self.cutoff)
        } else {
            self.cutoff
        }
    }

    pub fn eval(&mut self, u: &FourierField) -> FourierField {
        let mut out = FourierField::zeros(self.cutoff);
        self.eval_into(u, &mut out);
        out
    }

    pub fn eval_into(&mut self, u: &FourierField, out: &mut FourierField) {
        debug_assert_eq!(u.cutoff(), self.cutoff);
        let active = self.active_cutoff();
        let modes = self.filtered.modes_mut();
        for (i, m) in modes.iter_mut().enumerate() {
            *m = if i < active {
                u.positive_modes()[i]
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        self.transform
            .synthesize_into(&self.filtered, &mut self.samples)
            .expect("grid sized for the evaluator cutoff");
        for s in self.samples.iter_mut() {
            *s *= *s;
        }
        let square = self
            .transform
            .analyze(&self.samples)
            .expect("sample count matches grid");
        let half_b = 0.5 * self.b;
        let out_modes = out.modes_mut();
        for (i, o) in out_modes.iter_mut().enumerate() {
            let k = (i + 1) as f64;
            *o = if i < active {
                square.positive_modes()[i] * Complex64::new(0.0, k * half_b)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    }
}

/// `(i k b / 2) F(u²)_k` for a single field. The grid is the smallest power
/// of two holding `u`'s cutoff; the result has the same cutoff as `u`.
pub fn nonlinear_term(u: &FourierField, b: f64, dealias: bool) -> FourierField {
    let m = (2 * u.cutoff() + 2).next_power_of_two().max(4);
    let grid = Grid::new(m).expect("power of two");
    // the 2/3 cutoff refers to the field's own cutoff, not the padded grid
    let keep = if dealias {
        dealias_cutoff(u.cutoff())
    } else {
        u.cutoff()
    };
    let trim = |f: &FourierField| {
        f.map_modes(|k, c| {
            if k as usize <= keep {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    };
    let mut term = NonlinearTerm::new(grid, b, false);
    trim(&term.eval(&trim(&u.with_cutoff(grid.cutoff())))).with_cutoff(u.cutoff())
}

/// Sampled trajectory of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub snapshots: Vec<FourierField>,
    /// Σ_k |u_k|² at each sample.
    pub energy_series: Vec<f64>,
    /// Spatial mean of the synthesized field at each sample.
    pub momentum_series: Vec<f64>,
    pub steps: usize,
}

impl TrajectoryRecord {
    /// max_t |E(t) - E(0)| / E(0); zero for a zero field.
    pub fn energy_drift(&self) -> f64 {
        let Some(&e0) = self.energy_series.first() else {
            return 0.0;
        };
        if e0 == 0.0 {
            return 0.0;
        }
        self.energy_series
            .iter()
            .map(|e| (e - e0).abs() / e0)
            .fold(0.0, f64::max)
    }

    pub fn max_abs_momentum(&self) -> f64 {
        self.momentum_series
            .iter()
            .map(|m| m.abs())
            .fold(0.0, f64::max)
    }

    pub fn last(&self) -> Option<&FourierField> {
        self.snapshots.last()
    }
}

/// Reusable stepper bound to one parameter set.
#[derive(Debug, Clone)]
pub struct Integrator {
    params: KdvParams,
    grid: Grid,
    nonlinear: NonlinearTerm,
    transform: Transform,
    work: FourierField,
}

impl Integrator {
    pub fn new(params: KdvParams) -> Result<Self, IntegratorError> {
        let grid = params.validate()?;
        Ok(Self {
            nonlinear: NonlinearTerm::new(grid, params.b, params.dealias),
            transform: Transform::new(grid),
            work: FourierField::zeros(grid.cutoff()),
            grid,
            params,
        })
    }

    pub fn params(&self) -> &KdvParams {
        &self.params
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn check_cutoff(&self, field: &FourierField) -> Result<(), IntegratorError> {
        if field.cutoff() != self.grid.cutoff() {
            return Err(IntegratorError::CutoffMismatch {
                field: field.cutoff(),
                grid: self.grid.cutoff(),
            });
        }
        Ok(())
    }

    /// Right-hand side of the interaction-picture system at time `t`:
    /// `e^{i a k³ t} (i k b / 2) F(u²)_k` with `u = e^{-i a k³ t} v`.
    fn interaction_rhs(&mut self, v: &FourierField, t: f64) -> FourierField {
        let a = self.params.a;
        let active = self.nonlinear.active_cutoff();
        let u = v.map_modes(|k, c| {
            if k as usize <= active {
                c * dispersion_factor(a, k, t)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        self.nonlinear.eval_into(&u, &mut self.work);
        self.work.map_modes(|k, c| {
            if k as usize <= active {
                c * dispersion_factor(a, k, -t)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// One classical RK4 step of the interaction-picture system from `t` to
    /// `t + h`; input and output are in `v` variables.
    pub fn step_interaction(&mut self, v: &FourierField, t: f64, h: f64) -> FourierField {
        if self.params.b == 0.0 {
            return v.clone();
        }
        let axpy = |base: &FourierField, dir: &FourierField, s: f64| {
            FourierField::from_fn(base.cutoff(), |k| base.get(k) + dir.get(k) * s)
        };
        let k1 = self.interaction_rhs(v, t);
        let k2 = self.interaction_rhs(&axpy(v, &k1, 0.5 * h), t + 0.5 * h);
        let k3 = self.interaction_rhs(&axpy(v, &k2, 0.5 * h), t + 0.5 * h);
        let k4 = self.interaction_rhs(&axpy(v, &k3, h), t + h);
        FourierField::from_fn(v.cutoff(), |k| {
            v.get(k) + (k1.get(k) + (k2.get(k) + k3.get(k)) * 2.0 + k4.get(k)) * (h / 6.0)
        })
    }

    /// One IF-RK4 step in physical (`u`) variables.
    pub fn step_if_rk4(
        &mut self,
        cur: &FourierField,
        t: f64,
        h: f64,
    ) -> Result<FourierField, IntegratorError> {
        self.check_cutoff(cur)?;
        let a = self.params.a;
        let v = to_interaction_picture(cur, t, a);
        let next = self.step_interaction(&v, t, h);
        Ok(from_interaction_picture(&next, t + h, a))
    }

    /// Leapfrog step
    /// `u^{n+1} = u^{n-1} - 2i sin(a k³ h) u^n + 2h (i k b/2) F((u^n)²)`.
    pub fn step_fornberg_whitham(
        &mut self,
        prev: &FourierField,
        cur: &FourierField,
        h: f64,
    ) -> Result<FourierField, IntegratorError> {
        self.check_cutoff(prev)?;
        self.check_cutoff(cur)?;
        let a = self.params.a;
        let nonlinear = if self.params.b == 0.0 {
            FourierField::zeros(cur.cutoff())
        } else {
            self.nonlinear.eval(cur)
        };
        Ok(FourierField::from_fn(cur.cutoff(), |k| {
            let sine = -dispersion_factor(a, k, h).im;
            prev.get(k) - Complex64::new(0.0, 2.0 * sine) * cur.get(k)
                + nonlinear.get(k) * (2.0 * h)
        }))
    }

    fn momentum(&mut self, field: &FourierField) -> Result<f64, IntegratorError> {
        let samples = self.transform.synthesize(field)?;
        Ok(samples.iter().sum::<f64>() / samples.len() as f64)
    }

    /// Integrates from `phi` at `t = 0`, recording snapshots at
    /// `sample_times`. Fornberg–Whitham uses a uniform step
    /// `T / ceil(T/dt)` and records each sample at the nearest step; IF-RK4
    /// lands on every sample time exactly.
    pub fn evolve(
        &mut self,
        phi: &FourierField,
        sample_times: &[f64],
    ) -> Result<TrajectoryRecord, IntegratorError> {
        let t_final = self.params.t_final;
        let sorted = sample_times.windows(2).all(|w| w[0] <= w[1]);
        let in_range = sample_times.iter().all(|&t| (0.0..=t_final).contains(&t));
        if !sorted || !in_range {
            return Err(IntegratorError::InvalidSampleTimes { t_final });
        }
        let phi = if phi.cutoff() == self.grid.cutoff() {
            phi.clone()
        } else if phi.cutoff() < self.grid.cutoff() {
            phi.with_cutoff(self.grid.cutoff())
        } else {
            return Err(IntegratorError::CutoffMismatch {
                field: phi.cutoff(),
                grid: self.grid.cutoff(),
            });
        };
        let initial_norm = phi.l2_norm();
        let mut record = TrajectoryRecord {
            times: Vec::with_capacity(sample_times.len()),
            snapshots: Vec::with_capacity(sample_times.len()),
            energy_series: Vec::with_capacity(sample_times.len()),
            momentum_series: Vec::with_capacity(sample_times.len()),
            steps: 0,
        };
        match self.params.scheme {
            Scheme::IntegratingFactorRk4 => {
                self.evolve_rk4(&phi, sample_times, initial_norm, &mut record)?
            }
            Scheme::FornbergWhitham => {
                self.evolve_leapfrog(&phi, sample_times, initial_norm, &mut record)?
            }
        }
        Ok(record)
    }

    fn push_sample(
        &mut self,
        record: &mut TrajectoryRecord,
        t: f64,
        u: FourierField,
    ) -> Result<(), IntegratorError> {
        record.times.push(t);
        record.energy_series.push(u.energy());
        let momentum = self.momentum(&u)?;
        record.momentum_series.push(momentum);
        record.snapshots.push(u);
        Ok(())
    }

    fn guard(t: f64, field: &FourierField, initial: f64) -> Result<(), IntegratorError> {
        let norm = field.l2_norm();
        let limit = BLOWUP_FACTOR * initial;
        if !norm.is_finite() || (initial > 0.0 && norm > limit) {
            return Err(IntegratorError::Instability { t, norm, initial });
        }
        Ok(())
    }

    fn evolve_rk4(
        &mut self,
        phi: &FourierField,
        sample_times: &[f64],
        initial_norm: f64,
        record: &mut TrajectoryRecord,
    ) -> Result<(), IntegratorError> {
        let a = self.params.a;
        let dt = self.params.dt;
        let mut v = phi.clone();
        let mut t = 0.0;
        for &target in sample_times {
            let span = target - t;
            if span > 0.0 {
                let n = (span / dt).ceil().max(1.0) as usize;
                let h = span / n as f64;
                for i in 0..n {
                    let t0 = t + i as f64 * h;
                    v = self.step_interaction(&v, t0, h);
                    record.steps += 1;
                    Self::guard(t0 + h, &v, initial_norm)?;
                }
                t = target;
            }
            let u = from_interaction_picture(&v, t, a);
            self.push_sample(record, t, u)?;
        }
        Ok(())
    }

    fn evolve_leapfrog(
        &mut self,
        phi: &FourierField,
        sample_times: &[f64],
        initial_norm: f64,
        record: &mut TrajectoryRecord,
    ) -> Result<(), IntegratorError> {
        let t_final = self.params.t_final;
        let n_total = (t_final / self.params.dt).ceil().max(1.0) as usize;
        let h = t_final / n_total as f64;
        let mut targets = sample_times
            .iter()
            .map(|&t| ((t / h).round() as usize).min(n_total))
            .peekable();

        let mut prev = phi.clone();
        let mut cur = phi.clone();
        let mut n = 0usize;
        loop {
            while let Some(&step) = targets.peek() {
                if step != n {
                    break;
                }
                targets.next();
                self.push_sample(record, n as f64 * h, cur.clone())?;
            }
            if targets.peek().is_none() {
                break;
            }
            let next = if n == 0 {
                self.step_if_rk4(&cur, 0.0, h)?
            } else {
                self.step_fornberg_whitham(&prev, &cur, h)?
            };
            n += 1;
            record.steps += 1;
            Self::guard(n as f64 * h, &next, initial_norm)?;
            prev = std::mem::replace(&mut cur, next);
        }
        Ok(())
    }
}

/// Convenience wrapper: builds an [`Integrator`] and runs it.
pub fn evolve(
    phi: &FourierField,
    params: &KdvParams,
    sample_times: &[f64],
) -> Result<TrajectoryRecord, IntegratorError> {
    Integrator::new(params.clone())?.evolve(phi, sample_times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::convolve_exact;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn propagator_is_periodic_for_unit_dispersion() {
        let f = FourierField::seeded_random(255, 255, 1);
        assert_eq!(linear_propagator(&f, TAU, 1.0), f);
    }

    #[test]
    fn propagator_quarter_period_on_mode_one() {
        let mut f = FourierField::zeros(3);
        f.set(1, c(1.0, 0.0));
        let g = linear_propagator(&f, PI / 2.0, 1.0);
        assert!((g.get(1) - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn propagator_composes_and_preserves_norm() {
        let f = FourierField::seeded_random(16, 16, 2);
        let (t1, t2) = (0.37, 1.91);
        let two = linear_propagator(&linear_propagator(&f, t1, 1.0), t2, 1.0);
        let one = linear_propagator(&f, t1 + t2, 1.0);
        assert!(two.max_abs_diff(&one) < 1e-12);
        assert!((one.l2_norm() - f.l2_norm()).abs() < 1e-15);
    }

    #[test]
    fn interaction_picture_round_trip() {
        let u = FourierField::seeded_random(40, 40, 3);
        assert_eq!(to_interaction_picture(&u, 0.0, 1.0), u);
        let t = 0.731;
        let back = from_interaction_picture(&to_interaction_picture(&u, t, 1.0), t, 1.0);
        assert!(back.max_abs_diff(&u) < 1e-13);

        let mut single = FourierField::zeros(4);
        single.set(2, c(0.3, -0.2));
        let v = to_interaction_picture(&single, PI, 1.0);
        assert!((v.get(2) - single.get(2)).norm() < 1e-15);
    }

    #[test]
    fn nonlinear_term_of_cosine() {
        let mut u = FourierField::zeros(7);
        u.set(1, c(0.5, 0.0));
        let n = nonlinear_term(&u, 1.0, false);
        assert!((n.get(2) - c(0.0, 0.25)).norm() < 1e-15);
        assert!((n.get(-2) - c(0.0, -0.25)).norm() < 1e-15);
        assert!(n.get(1).norm() < 1e-15 && n.get(3).norm() < 1e-15);
        assert!(nonlinear_term(&FourierField::zeros(7), 1.0, true).is_zero());
    }

    #[test]
    fn dealiased_term_matches_exact_convolution() {
        let cutoff = 63;
        let keep = dealias_cutoff(cutoff);
        let u = FourierField::seeded_random(cutoff, keep, 9);
        let b = 1.5;
        let pseudo = nonlinear_term(&u, b, true);
        let exact = convolve_exact(&u, &u);
        for k in 1..=keep as i64 {
            let expected = exact.get(k) * c(0.0, k as f64 * b / 2.0);
            assert!((pseudo.get(k) - expected).norm() < 1e-11, "mode {k}");
        }
        for k in keep as i64 + 1..=cutoff as i64 {
            assert_eq!(pseudo.get(k), c(0.0, 0.0));
        }
    }

    #[test]
    fn dealiasing_discards_modes_above_two_thirds() {
        // the top third of the input does not contribute at all
        let cutoff = 63;
        let keep = dealias_cutoff(cutoff);
        let full = FourierField::seeded_random(cutoff, cutoff, 4);
        let trimmed = full.map_modes(|k, u| if k as usize <= keep { u } else { c(0.0, 0.0) });
        let a = nonlinear_term(&full, 1.0, true);
        let b = nonlinear_term(&trimmed, 1.0, true);
        assert!(a.max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn params_validation() {
        let mut p = KdvParams::unit(1.0);
        p.dt = 0.0;
        assert!(matches!(
            p.validate(),
            Err(IntegratorError::InvalidParams { name: "dt", .. })
        ));
        let mut p = KdvParams::unit(1.0);
        p.m = 500;
        assert!(matches!(p.validate(), Err(IntegratorError::Spectral(_))));
        assert!(matches!(
            evolve(
                &FourierField::zeros(255),
                &KdvParams::unit(1.0),
                &[0.5, 0.2]
            ),
            Err(IntegratorError::InvalidSampleTimes { .. })
        ));
    }

    #[test]
    fn leapfrog_is_exact_on_linear_part() {
        let mut p = KdvParams::unit(1.0);
        p.b = 0.0;
        p.m = 64;
        let mut integ = Integrator::new(p).unwrap();
        let mut phi = FourierField::zeros(31);
        phi.set(5, c(0.4, 0.1));
        let h = 1e-3;
        let mut prev = phi.clone();
        let mut cur = integ.step_if_rk4(&phi, 0.0, h).unwrap();
        for _ in 1..200 {
            let next = integ.step_fornberg_whitham(&prev, &cur, h).unwrap();
            prev = std::mem::replace(&mut cur, next);
        }
        let exact = linear_propagator(&phi, 200.0 * h, 1.0);
        assert!(cur.max_abs_diff(&exact) < 1e-12);
    }

    #[test]
    fn zero_field_stays_zero() {
        let mut p = KdvParams::unit(0.01);
        p.m = 64;
        p.dt = 1e-3;
        for scheme in [Scheme::FornbergWhitham, Scheme::IntegratingFactorRk4] {
            p.scheme = scheme;
            let rec = evolve(&FourierField::zeros(31), &p, &[0.0, 0.01]).unwrap();
            assert!(rec.snapshots.iter().all(FourierField::is_zero));
            assert_eq!(rec.energy_drift(), 0.0);
        }
    }

    #[test]
    fn rk4_is_exact_without_nonlinearity() {
        let mut p = KdvParams::unit(0.3);
        p.b = 0.0;
        p.m = 64;
        let mut integ = Integrator::new(p).unwrap();
        let phi = FourierField::seeded_random(31, 31, 6);
        let stepped = integ.step_if_rk4(&phi, 0.1, 0.2).unwrap();
        let diff = stepped.max_abs_diff(&linear_propagator(&phi, 0.2, 1.0));
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn blowup_is_reported() {
        let mut p = KdvParams::unit(1.0);
        p.m = 64;
        p.dt = 0.5;
        p.scheme = Scheme::FornbergWhitham;
        let phi = FourierField::seeded_random(31, 31, 8).scale(50.0);
        let err = evolve(&phi, &p, &[1.0]).unwrap_err();
        assert!(
            matches!(err, IntegratorError::Instability { .. }),
            "{err:?}"
        );
    }
}
