//! Fourier representation of real, zero-mean, 2π-periodic fields.
//!
//! Coefficients follow `u_k = (1/2π) ∫_{-π}^{π} u(x) e^{-ikx} dx`, so that
//! `u(x) = Σ_k u_k e^{ikx}`. Only the modes `k = 1..=K` are stored; negative
//! modes are their conjugates and the mean mode is identically zero, which
//! makes the reality and zero-mean invariants structural.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

/// Relative tolerance on the imaginary residue of a synthesized field.
pub const SYNTHESIS_TOLERANCE: f64 = 1e-12;
/// Relative tolerance on `u_{-k} = conj(u_k)` when importing raw coefficients.
pub const REALITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0} points is not a power of two >= 4")]
    InvalidGrid(usize),
    #[error("grid of {m} points cannot resolve cutoff {cutoff} (need m >= 2K+2)")]
    GridTooSmall { m: usize, cutoff: usize },
    #[error("expected {expected} samples, got {got}")]
    SampleCount { expected: usize, got: usize },
    #[error("coefficient array of length {0} is not symmetric about k = 0")]
    BadLength(usize),
    #[error("field violates the reality condition (relative residue {residue:e})")]
    CorruptField { residue: f64 },
}

/// A real zero-mean field stored by its positive Fourier modes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FourierField {
    modes: Vec<Complex64>,
}

impl FourierField {
    pub fn zeros(cutoff: usize) -> Self {
        Self {
            modes: vec![Complex64::new(0.0, 0.0); cutoff],
        }
    }

    /// Builds a field from `u_1, ..., u_K`.
    pub fn from_positive_modes(modes: Vec<Complex64>) -> Self {
        Self { modes }
    }

    /// Builds a field by evaluating `f(k)` for `k = 1..=cutoff`.
    pub fn from_fn(cutoff: usize, mut f: impl FnMut(i64) -> Complex64) -> Self {
        Self {
            modes: (1..=cutoff as i64).map(&mut f).collect(),
        }
    }

    /// Imports a full coefficient array indexed `k = -K..=K`.
    ///
    /// The mean entry is projected out. The negative half must match the
    /// conjugate of the positive half to within [`REALITY_TOLERANCE`].
    pub fn from_symmetric(coeffs: &[Complex64]) -> Result<Self, SpectralError> {
        let spectrum = Spectrum::from_symmetric(coeffs)?;
        Ok(spectrum.field)
    }

    pub fn cutoff(&self) -> usize {
        self.modes.len()
    }

    /// Amplitude of mode `k`; zero outside the stored range and at `k = 0`.
    #[inline]
    pub fn get(&self, k: i64) -> Complex64 {
        let idx = k.unsigned_abs() as usize;
        if idx == 0 || idx > self.modes.len() {
            return Complex64::new(0.0, 0.0);
        }
        let u = self.modes[idx - 1];
        if k > 0 {
            u
        } else {
            u.conj()
        }
    }

    /// Sets `u_k` (and implicitly `u_{-k}`). Panics for `k` outside `1..=K`.
    pub fn set(&mut self, k: usize, value: Complex64) {
        assert!(k >= 1 && k <= self.modes.len(), "mode {k} out of range");
        self.modes[k - 1] = value;
    }

    pub fn positive_modes(&self) -> &[Complex64] {
        &self.modes
    }

    pub(crate) fn modes_mut(&mut self) -> &mut [Complex64] {
        &mut self.modes
    }

    /// Full coefficient array for `k = -K..=K` (index `k + K`).
    pub fn to_symmetric(&self) -> Vec<Complex64> {
        let cutoff = self.cutoff() as i64;
        (-cutoff..=cutoff).map(|k| self.get(k)).collect()
    }

    /// Largest `k` with a nonzero amplitude, 0 for the zero field.
    pub fn support_radius(&self) -> usize {
        self.modes
            .iter()
            .rposition(|u| *u != Complex64::new(0.0, 0.0))
            .map_or(0, |i| i + 1)
    }

    pub fn is_zero(&self) -> bool {
        self.support_radius() == 0
    }

    /// Returns a copy stored with a different cutoff (zero padded or truncated).
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        let mut modes = self.modes.clone();
        modes.resize(cutoff, Complex64::new(0.0, 0.0));
        Self { modes }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_modes(|_, u| u * c)
    }

    /// Applies `f(k, u_k)` to every positive mode. The negative modes follow
    /// by conjugation, so `f` must describe a reality-preserving operation.
    pub fn map_modes(&self, mut f: impl FnMut(i64, Complex64) -> Complex64) -> Self {
        Self {
            modes: self
                .modes
                .iter()
                .enumerate()
                .map(|(i, &u)| f(i as i64 + 1, u))
                .collect(),
        }
    }

    /// Σ_k |u_k|² over all nonzero k (both signs).
    pub fn energy(&self) -> f64 {
        2.0 * self.modes.iter().map(|u| u.norm_sqr()).sum::<f64>()
    }

    /// ℓ² norm of the coefficient sequence.
    pub fn l2_norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// Physical L²(-π, π) norm, `√(2π)` times the coefficient norm.
    pub fn physical_l2_norm(&self) -> f64 {
        TAU.sqrt() * self.l2_norm()
    }

    /// Homogeneous Sobolev norm `(Σ_{k≠0} |k|^{2s} |u_k|²)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let sum: f64 = self
            .modes
            .iter()
            .enumerate()
            .map(|(i, u)| ((i + 1) as f64).powf(2.0 * s) * u.norm_sqr())
            .sum();
        (2.0 * sum).sqrt()
    }

    /// Largest modal difference `max_k |u_k - w_k|`.
    pub fn max_abs_diff(&self, other: &FourierField) -> f64 {
        let cutoff = self.cutoff().max(other.cutoff()) as i64;
        (1..=cutoff)
            .map(|k| (self.get(k) - other.get(k)).norm())
            .fold(0.0, f64::max)
    }

    /// Deterministic pseudo-random field with modes `1..=support` drawn
    /// uniformly from the unit square, scaled to unit ℓ² norm.
    pub fn seeded_random(cutoff: usize, support: usize, seed: u64) -> Self {
        assert!(support <= cutoff, "support exceeds cutoff");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut field = Self::from_fn(cutoff, |k| {
            if k as usize <= support {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let norm = field.l2_norm();
        if norm > 0.0 {
            field = field.scale(1.0 / norm);
        }
        field
    }
}

fn zip_modes(
    lhs: &FourierField,
    rhs: &FourierField,
    op: impl Fn(Complex64, Complex64) -> Complex64,
) -> FourierField {
    let cutoff = lhs.cutoff().max(rhs.cutoff());
    FourierField::from_fn(cutoff, |k| op(lhs.get(k), rhs.get(k)))
}

impl Add for &FourierField {
    type Output = FourierField;
    fn add(self, rhs: &FourierField) -> FourierField {
        zip_modes(self, rhs, |a, b| a + b)
    }
}

impl Sub for &FourierField {
    type Output = FourierField;
    fn sub(self, rhs: &FourierField) -> FourierField {
        zip_modes(self, rhs, |a, b| a - b)
    }
}

impl Neg for &FourierField {
    type Output = FourierField;
    fn neg(self) -> FourierField {
        self.scale(-1.0)
    }
}

/// Real-signal coefficients whose mean mode may be nonzero.
///
/// Products and the multilinear normal-form operators generally have a
/// nonzero `k = 0` component, so they are returned as a mean plus a
/// zero-mean [`FourierField`].
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub mean: f64,
    pub field: FourierField,
}

impl Spectrum {
    pub fn zeros(cutoff: usize) -> Self {
        Self {
            mean: 0.0,
            field: FourierField::zeros(cutoff),
        }
    }

    /// Imports a coefficient array indexed `k = -K..=K`, checking reality.
    pub fn from_symmetric(coeffs: &[Complex64]) -> Result<Self, SpectralError> {
        if coeffs.len().is_multiple_of(2) {
            return Err(SpectralError::BadLength(coeffs.len()));
        }
        let residue = reality_residue(coeffs);
        if residue > REALITY_TOLERANCE {
            return Err(SpectralError::CorruptField { residue });
        }
        Ok(Self::pack(coeffs))
    }

    /// Packs a coefficient array known to be reality-respecting up to
    /// rounding (e.g. a direct sum over a symmetric index set).
    pub(crate) fn from_raw_sum(coeffs: &[Complex64]) -> Self {
        debug_assert!(coeffs.len() % 2 == 1);
        debug_assert!(
            reality_residue(coeffs) <= REALITY_TOLERANCE,
            "direct sum lost the reality symmetry"
        );
        Self::pack(coeffs)
    }

    fn pack(coeffs: &[Complex64]) -> Self {
        let cutoff = coeffs.len() / 2;
        let field = FourierField::from_fn(cutoff, |k| {
            // average the two halves so rounding asymmetry does not bias either
            let pos = coeffs[cutoff + k as usize];
            let neg = coeffs[cutoff - k as usize];
            (pos + neg.conj()) * 0.5
        });
        Self {
            mean: coeffs[cutoff].re,
            field,
        }
    }

    pub fn cutoff(&self) -> usize {
        self.field.cutoff()
    }

    #[inline]
    pub fn get(&self, k: i64) -> Complex64 {
        if k == 0 {
            Complex64::new(self.mean, 0.0)
        } else {
            self.field.get(k)
        }
    }

    pub fn to_symmetric(&self) -> Vec<Complex64> {
        let cutoff = self.cutoff() as i64;
        (-cutoff..=cutoff).map(|k| self.get(k)).collect()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            mean: self.mean * c,
            field: self.field.scale(c),
        }
    }

    /// ℓ² norm over every mode including the mean.
    pub fn l2_norm(&self) -> f64 {
        (self.mean * self.mean + self.field.energy()).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Spectrum) -> f64 {
        (self.mean - other.mean)
            .abs()
            .max(self.field.max_abs_diff(&other.field))
    }
}

/// max_k |u_{-k} - conj(u_k)| relative to the largest amplitude, including
/// the imaginary part of the mean.
pub(crate) fn reality_residue(coeffs: &[Complex64]) -> f64 {
    let cutoff = coeffs.len() / 2;
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = coeffs[cutoff].im.abs();
    for k in 1..=cutoff {
        worst = worst.max((coeffs[cutoff - k] - coeffs[cutoff + k].conj()).norm());
    }
    worst / scale
}

/// Uniform grid `x_j = -π + 2πj/M` on the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    m: usize,
}

impl Grid {
    pub fn new(m: usize) -> Result<Self, SpectralError> {
        if m < 4 || !m.is_power_of_two() {
            return Err(SpectralError::InvalidGrid(m));
        }
        Ok(Self { m })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest mode a field on this grid carries (`M/2 - 1`; Nyquist is dropped).
    pub fn cutoff(&self) -> usize {
        self.m / 2 - 1
    }

    pub fn x(&self, j: usize) -> f64 {
        -PI + TAU * j as f64 / self.m as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.x(j)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.m).map(|j| f(self.x(j))).collect()
    }
}

/// Reusable forward/inverse transform pair for one grid size.
#[derive(Clone)]
pub struct Transform {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform")
            .field("grid", &self.grid)
            .finish()
    }
}

impl Transform {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.len());
        let inverse = planner.plan_fft_inverse(grid.len());
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            grid,
            forward,
            inverse,
            buffer: vec![Complex64::new(0.0, 0.0); grid.len()],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Mean and positive modes `1..=M/2-1` of real samples.
    pub fn analyze_spectrum(&mut self, samples: &[f64]) -> Result<Spectrum, SpectralError> {
        let m = self.grid.len();
        if samples.len() != m {
            return Err(SpectralError::SampleCount {
                expected: m,
                got: samples.len(),
            });
        }
        for (b, &s) in self.buffer.iter_mut().zip(samples) {
            *b = Complex64::new(s, 0.0);
        }
        self.forward
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        // x_0 = -π contributes the factor e^{ikπ} = (-1)^k
        let inv_m = 1.0 / m as f64;
        let buffer = &self.buffer;
        let field = FourierField::from_fn(self.grid.cutoff(), |k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            buffer[k as usize] * (sign * inv_m)
        });
        Ok(Spectrum {
            mean: self.buffer[0].re * inv_m,
            field,
        })
    }

    pub fn analyze(&mut self, samples: &[f64]) -> Result<FourierField, SpectralError> {
        Ok(self.analyze_spectrum(samples)?.field)
    }

    /// Writes `Σ_k u_k e^{ikx_j}` into `out`.
    pub fn synthesize_into(
        &mut self,
        field: &FourierField,
        out: &mut [f64],
    ) -> Result<(), SpectralError> {
        let m = self.grid.len();
        if field.cutoff() > self.grid.cutoff() {
            return Err(SpectralError::GridTooSmall {
                m,
                cutoff: field.cutoff(),
            });
        }
        if out.len() != m {
            return Err(SpectralError::SampleCount {
                expected: m,
                got: out.len(),
            });
        }
        self.buffer.fill(Complex64::new(0.0, 0.0));
        for (i, &u) in field.positive_modes().iter().enumerate() {
            let k = i + 1;
            let c = if k % 2 == 0 { u } else { -u };
            self.buffer[k] = c;
            self.buffer[m - k] = c.conj();
        }
        self.inverse
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        let mut scale = 0.0f64;
        let mut residue = 0.0f64;
        for (o, b) in out.iter_mut().zip(&self.buffer) {
            *o = b.re;
            scale = scale.max(b.re.abs());
            residue = residue.max(b.im.abs());
        }
        let residue = residue / scale.max(f64::MIN_POSITIVE);
        if scale > 0.0 && residue > SYNTHESIS_TOLERANCE {
            return Err(SpectralError::CorruptField { residue });
        }
        Ok(())
    }

    pub fn synthesize(&mut self, field: &FourierField) -> Result<Vec<f64>, SpectralError> {
        let mut out = vec![0.0; self.grid.len()];
        self.synthesize_into(field, &mut out)?;
        Ok(out)
    }
}

/// Fourier coefficients of `M` equispaced samples, zero-mean projected.
pub fn analyze(samples: &[f64]) -> Result<FourierField, SpectralError> {
    let grid = Grid::new(samples.len())?;
    Transform::new(grid).analyze(samples)
}

/// Evaluates the field on the `M`-point grid.
pub fn synthesize(field: &FourierField, m: usize) -> Result<Vec<f64>, SpectralError> {
    let grid = Grid::new(m)?;
    if m < 2 * field.cutoff() + 2 {
        return Err(SpectralError::GridTooSmall {
            m,
            cutoff: field.cutoff(),
        });
    }
    Transform::new(grid).synthesize(field)
}

/// Exact discrete convolution `(f*g)_k = Σ_{k1+k2=k} f_{k1} g_{k2}` by
/// direct double loop. The result has cutoff `K_f + K_g`.
pub fn convolve_exact(f: &FourierField, g: &FourierField) -> Spectrum {
    let kf = f.cutoff() as i64;
    let kg = g.cutoff() as i64;
    let out_cutoff = kf + kg;
    let mut out = vec![Complex64::new(0.0, 0.0); (2 * out_cutoff + 1) as usize];
    for k1 in -kf..=kf {
        let a = f.get(k1);
        if k1 == 0 {
            continue;
        }
        for k2 in -kg..=kg {
            if k2 == 0 {
                continue;
            }
            out[(k1 + k2 + out_cutoff) as usize] += a * g.get(k2);
        }
    }
    Spectrum::from_raw_sum(&out)
}
