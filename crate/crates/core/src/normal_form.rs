//! Differentiation-by-parts reduction of KdV in interaction-picture variables.
//!
//! With `v_k = u_k e^{ik³t}` the equation `u_t = u_xxx + u u_x` becomes
//!
//! ```text
//! ∂t v_k = (ik/2) Σ_{k1+k2=k} e^{3ikk1k2 t} v_{k1} v_{k2}.
//! ```
//!
//! Integrating the oscillatory factor by parts twice yields
//!
//! ```text
//! ∂t (v_k - B2(v)_k/6 + B3(v)_k/18) = (i/6k) v_k |v_k|² + (i/18) B4(v)_k,   k ≠ 0,
//! ```
//!
//! where `B2`, `B3`, `B4` are the multilinear operators implemented below and
//! `-v_k|v_k|²/k` is the resonant part of the cubic term. All operators are
//! evaluated by direct summation over the support of `v` in a fixed order.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{FourierField, Spectrum};

/// Largest cutoff accepted by the direct sums; keeps `(4K)³` inside `i64`.
pub const MAX_CUTOFF: usize = 100_000;

/// Exponent offset used for the `1-` / `3+` powers in the B4 estimates.
pub const RATIO_DELTA: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalFormError {
    #[error(
        "field support {support} exceeds a quarter of its cutoff {cutoff}; sums would be truncated"
    )]
    SupportTooWide { support: usize, cutoff: usize },
    #[error("ratio undefined for the zero field")]
    UndefinedRatio,
    #[error("integer phase overflow for indices {0:?}")]
    PhaseOverflow(Vec<i64>),
}

/// Position of an index triple relative to the resonant set
/// `(k1+k2)(k3+k1) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResonanceClass {
    /// `k1 + k2 = 0` and `k3 + k1 = 0`.
    S1,
    /// `k1 + k2 = 0`, `k3 + k1 ≠ 0`.
    S2,
    /// `k3 + k1 = 0`, `k1 + k2 ≠ 0`.
    S3,
    NonResonant,
    /// A zero index or `k2 + k3 = 0`: outside the summation range.
    ExcludedZeroDenominator,
}

impl ResonanceClass {
    pub fn is_resonant(self) -> bool {
        matches!(self, Self::S1 | Self::S2 | Self::S3)
    }
}

pub fn classify_resonance(k1: i64, k2: i64, k3: i64) -> ResonanceClass {
    if k1 == 0 || k2 == 0 || k3 == 0 || k2 + k3 == 0 {
        return ResonanceClass::ExcludedZeroDenominator;
    }
    match (k1 + k2 == 0, k3 + k1 == 0) {
        (true, true) => ResonanceClass::S1,
        (true, false) => ResonanceClass::S2,
        (false, true) => ResonanceClass::S3,
        (false, false) => ResonanceClass::NonResonant,
    }
}

/// `(k1+k2)(k2+k3)(k3+k1)`, so that `e^{3itω}` is the cubic phase.
pub fn cubic_phase(k1: i64, k2: i64, k3: i64) -> Result<i64, NormalFormError> {
    let overflow = || NormalFormError::PhaseOverflow(vec![k1, k2, k3]);
    let a = k1.checked_add(k2).ok_or_else(overflow)?;
    let b = k2.checked_add(k3).ok_or_else(overflow)?;
    let c = k3.checked_add(k1).ok_or_else(overflow)?;
    a.checked_mul(b)
        .and_then(|ab| ab.checked_mul(c))
        .ok_or_else(overflow)
}

/// `ψ = (k1+k2+k3+k4)³ - k1³ - k2³ - k3³ - k4³`.
pub fn quartic_phase(k1: i64, k2: i64, k3: i64, k4: i64) -> Result<i64, NormalFormError> {
    let ks = [k1, k2, k3, k4];
    let overflow = || NormalFormError::PhaseOverflow(ks.to_vec());
    let cube = |x: i64| x.checked_pow(3).ok_or_else(overflow);
    let sum = ks
        .iter()
        .try_fold(0i64, |acc, &k| acc.checked_add(k))
        .ok_or_else(overflow)?;
    ks.iter().try_fold(cube(sum)?, |acc, &k| {
        acc.checked_sub(cube(k)?).ok_or_else(overflow)
    })
}

/// `e^{iΩt}` for integer `Ω`, reduced in turns so that `t = 0` is exact.
#[inline]
fn oscillation(omega: i64, t: f64) -> Complex64 {
    if t == 0.0 || omega == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let turns = omega as f64 * (t / TAU);
    Complex64::from_polar(1.0, TAU * (turns - turns.round()))
}

fn support_indices(v: &FourierField) -> Vec<(i64, Complex64)> {
    let radius = v.support_radius() as i64;
    (-radius..=radius)
        .filter(|&k| k != 0)
        .map(|k| (k, v.get(k)))
        .collect()
}

fn check_cutoff(v: &FourierField) {
    assert!(
        v.cutoff() <= MAX_CUTOFF,
        "cutoff {} too large for exact integer phases",
        v.cutoff()
    );
}

/// Exact right-hand side of the interaction-picture system by direct double
/// sum, truncated to the cutoff of `v`.
pub fn rhs_v(v: &FourierField, t: f64) -> FourierField {
    check_cutoff(v);
    let cutoff = v.cutoff() as i64;
    let support = support_indices(v);
    FourierField::from_fn(cutoff as usize, |k| {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(k1, a) in &support {
            let k2 = k - k1;
            if k2 == 0 || k2.abs() > cutoff {
                continue;
            }
            acc += oscillation(3 * k * k1 * k2, t) * a * v.get(k2);
        }
        acc * Complex64::new(0.0, 0.5 * k as f64)
    })
}

/// One classical RK4 step of the interaction-picture system using [`rhs_v`].
pub fn rk4_step_v(v: &FourierField, t: f64, h: f64) -> FourierField {
    let axpy = |dir: &FourierField, s: f64| {
        FourierField::from_fn(v.cutoff(), |k| v.get(k) + dir.get(k) * s)
    };
    let k1 = rhs_v(v, t);
    let k2 = rhs_v(&axpy(&k1, 0.5 * h), t + 0.5 * h);
    let k3 = rhs_v(&axpy(&k2, 0.5 * h), t + 0.5 * h);
    let k4 = rhs_v(&axpy(&k3, h), t + h);
    FourierField::from_fn(v.cutoff(), |k| {
        v.get(k) + (k1.get(k) + (k2.get(k) + k3.get(k)) * 2.0 + k4.get(k)) * (h / 6.0)
    })
}

/// `B2(v)_k = Σ_{k1+k2=k} e^{3ikk1k2t} v_{k1} v_{k2} / (k1 k2)`.
pub fn b2(v: &FourierField, t: f64) -> Spectrum {
    check_cutoff(v);
    let out_cutoff = 2 * v.cutoff() as i64;
    let support = support_indices(v);
    let mut out = vec![Complex64::new(0.0, 0.0); (2 * out_cutoff + 1) as usize];
    for &(k1, a) in &support {
        for &(k2, b) in &support {
            let k = k1 + k2;
            let weight = a * b / (k1 * k2) as f64;
            out[(k + out_cutoff) as usize] += weight * oscillation(3 * k * k1 * k2, t);
        }
    }
    Spectrum::from_raw_sum(&out)
}

/// `B3(v)_k = Σ* e^{3it(k1+k2)(k1+k3)(k2+k3)} v v v / (k1 (k1+k2)(k1+k3)(k2+k3))`,
/// skipping every triple with a vanishing denominator factor.
pub fn b3(v: &FourierField, t: f64) -> Spectrum {
    check_cutoff(v);
    let out_cutoff = 3 * v.cutoff() as i64;
    let support = support_indices(v);
    let mut out = vec![Complex64::new(0.0, 0.0); (2 * out_cutoff + 1) as usize];
    for &(k1, a) in &support {
        for &(k2, b) in &support {
            let s12 = k1 + k2;
            if s12 == 0 {
                continue;
            }
            let ab = a * b;
            for &(k3, c) in &support {
                let s13 = k1 + k3;
                let s23 = k2 + k3;
                if s13 == 0 || s23 == 0 {
                    continue;
                }
                let omega = s12 * s13 * s23;
                let denom = (k1 * omega) as f64;
                let k = s12 + k3;
                out[(k + out_cutoff) as usize] += ab * c / denom * oscillation(3 * omega, t);
            }
        }
    }
    Spectrum::from_raw_sum(&out)
}

/// Which part of the quartic operator to accumulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum QuarticPart {
    /// Terms from `∂t v_{k1}`: `1 / ((k1+k2)(k1+k3+k4)(k2+k3+k4))`.
    First,
    /// Terms from `∂t v_{k2}`, `∂t v_{k3}`: `(k3+k4) / (k1(k1+k2)(k1+k3+k4)(k2+k3+k4))`.
    Second,
    /// `First / 2 + Second`.
    Combined,
}

/// Shared quadruple sum. Every part requires `k3 + k4 ≠ 0`: those indices
/// descend from a nonzero mode of the cubic term, even where the factor
/// does not appear in a denominator.
fn quartic_sum(v: &FourierField, t: f64, part: QuarticPart) -> Spectrum {
    check_cutoff(v);
    let out_cutoff = 4 * v.cutoff() as i64;
    let len = (2 * out_cutoff + 1) as usize;
    let support = support_indices(v);

    // partitioned by k1; partial sums are reduced in index order
    let partials: Vec<Vec<Complex64>> = support
        .par_iter()
        .map(|&(k1, a)| {
            let mut acc = vec![Complex64::new(0.0, 0.0); len];
            for &(k2, b) in &support {
                let s12 = k1 + k2;
                if s12 == 0 {
                    continue;
                }
                let ab = a * b;
                for &(k3, c) in &support {
                    let abc = ab * c;
                    for &(k4, d) in &support {
                        let s34 = k3 + k4;
                        let d1 = k1 + s34;
                        let d2 = k2 + s34;
                        if s34 == 0 || d1 == 0 || d2 == 0 {
                            continue;
                        }
                        let numer = match part {
                            QuarticPart::First => k1 as f64,
                            QuarticPart::Second => s34 as f64,
                            QuarticPart::Combined => 0.5 * (k1 + 2 * s34) as f64,
                        };
                        let denom = (k1 * s12 * d1 * d2) as f64;
                        let k = s12 + s34;
                        let mut term = abc * d * (numer / denom);
                        if t != 0.0 {
                            let psi = k * k * k
                                - k1 * k1 * k1
                                - k2 * k2 * k2
                                - k3 * k3 * k3
                                - k4 * k4 * k4;
                            term *= oscillation(psi, t);
                        }
                        acc[(k + out_cutoff) as usize] += term;
                    }
                }
            }
            acc
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for partial in &partials {
        for (o, p) in out.iter_mut().zip(partial) {
            *o += p;
        }
    }
    // the weight is odd under k ↦ -k, so only i·B4 respects reality
    for o in &mut out {
        *o *= Complex64::new(0.0, 1.0);
    }
    Spectrum::from_raw_sum(&out)
}

/// Quartic operator `B4 = B4¹/2 + B4²` in its combined form
/// `(1/2) Σ* e^{iψt} (k1 + 2k3 + 2k4) v v v v / (k1 (k1+k2)(k1+k3+k4)(k2+k3+k4))`.
///
/// The quartic operators return `i·B4`: the sum itself satisfies
/// `B4_{-k} = -conj(B4_k)`, and the rotation makes it a real field with the
/// same norms.
pub fn b4(v: &FourierField, t: f64) -> Spectrum {
    quartic_sum(v, t, QuarticPart::Combined)
}

/// `B4¹`: the contribution of `∂t v_{k1}`.
pub fn b4_part1(v: &FourierField, t: f64) -> Spectrum {
    quartic_sum(v, t, QuarticPart::First)
}

/// `B4²`: the contributions of `∂t v_{k2}` and `∂t v_{k3}`.
pub fn b4_part2(v: &FourierField, t: f64) -> Spectrum {
    quartic_sum(v, t, QuarticPart::Second)
}

/// Resonant part of `Σ_{k1+k2+k3=k, k2+k3≠0} v_{k1} v_{k2} v_{k3} / k1`,
/// enumerating every triple and keeping those in `S1 ∪ S2 ∪ S3`.
pub fn resonant_sum(v: &FourierField) -> FourierField {
    let support = support_indices(v);
    FourierField::from_fn(v.cutoff(), |k| {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(k1, a) in &support {
            for &(k2, b) in &support {
                let k3 = k - k1 - k2;
                if classify_resonance(k1, k2, k3).is_resonant() {
                    acc += a * b * v.get(k3) / k1 as f64;
                }
            }
        }
        acc
    })
}

/// Closed form of the resonant cubic term, `-v_k |v_k|² / k`.
pub fn resonant_term(v: &FourierField) -> FourierField {
    v.map_modes(|k, u| -u * u.norm_sqr() / k as f64)
}

/// Residual of the reduced equation at time `t`.
///
/// `v(t ± dt)` come from one exact-RHS RK4 step in each direction; the time
/// derivative of `v - B2/6 + B3/18` is a centred difference. Returns the ℓ²
/// norm over `k ≠ 0` of the difference with `(i/6k) v|v|² + (i/18) B4`,
/// which is `O(dt²)`. Note [`b4`] already carries the factor `i`.
pub fn normal_form_residual(v: &FourierField, t: f64, dt: f64) -> Result<f64, NormalFormError> {
    let support = v.support_radius();
    if 4 * support > v.cutoff() {
        return Err(NormalFormError::SupportTooWide {
            support,
            cutoff: v.cutoff(),
        });
    }
    if support == 0 {
        return Ok(0.0);
    }
    let reduced = |w: &FourierField, time: f64| (w.clone(), b2(w, time), b3(w, time));
    let (w_plus, b2_plus, b3_plus) = reduced(&rk4_step_v(v, t, dt), t + dt);
    let (w_minus, b2_minus, b3_minus) = reduced(&rk4_step_v(v, t, -dt), t - dt);
    let q_plus = |k: i64| w_plus.get(k) - b2_plus.get(k) / 6.0 + b3_plus.get(k) / 18.0;
    let q_minus = |k: i64| w_minus.get(k) - b2_minus.get(k) / 6.0 + b3_minus.get(k) / 18.0;
    let quartic = b4(v, t);

    let cutoff = 4 * v.cutoff() as i64;
    let mut sum = 0.0;
    for k in 1..=cutoff {
        let lhs = (q_plus(k) - q_minus(k)) / (2.0 * dt);
        let u = v.get(k);
        let rhs =
            Complex64::new(0.0, 1.0 / (6.0 * k as f64)) * u * u.norm_sqr() + quartic.get(k) / 18.0;
        sum += (lhs - rhs).norm_sqr();
    }
    // negative modes mirror the positive ones
    Ok((2.0 * sum).sqrt())
}

/// Left/right ratios of the a-priori estimates, evaluated at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriRatios {
    /// `‖B2‖ / ‖v‖²_{Ḣ^{-1/2}}`
    pub r1: f64,
    /// `‖B3‖ / (‖v‖²_{Ḣ^{-1/2}} ‖v‖)`
    pub r2: f64,
    /// `‖B4‖ / (‖v‖^{1-δ}_{Ḣ^{-1/2}} ‖v‖^{3+δ})`
    pub r3: f64,
    /// `‖B4‖_{Ḣ^{-1/2}} / (‖v‖^{2-δ}_{Ḣ^{-1/2}} ‖v‖^{2+δ})`
    pub r4: f64,
    /// `‖v_k³/k‖ / (‖v‖²_{Ḣ^{-1/2}} ‖v‖)`
    pub r5: f64,
}

impl AprioriRatios {
    pub fn as_array(&self) -> [f64; 5] {
        [self.r1, self.r2, self.r3, self.r4, self.r5]
    }

    fn max(self, other: Self) -> Self {
        Self {
            r1: self.r1.max(other.r1),
            r2: self.r2.max(other.r2),
            r3: self.r3.max(other.r3),
            r4: self.r4.max(other.r4),
            r5: self.r5.max(other.r5),
        }
    }
}

/// Operator norms are taken over `k ≠ 0`, like every norm on the zero-mean class.
pub fn apriori_ratios(v: &FourierField) -> Result<AprioriRatios, NormalFormError> {
    if v.is_zero() {
        return Err(NormalFormError::UndefinedRatio);
    }
    let h = v.sobolev_norm(-0.5);
    let l = v.l2_norm();
    let quartic = b4(v, 0.0);
    let delta = RATIO_DELTA;
    Ok(AprioriRatios {
        r1: b2(v, 0.0).field.l2_norm() / (h * h),
        r2: b3(v, 0.0).field.l2_norm() / (h * h * l),
        r3: quartic.field.l2_norm() / (h.powf(1.0 - delta) * l.powf(3.0 + delta)),
        r4: quartic.field.sobolev_norm(-0.5) / (h.powf(2.0 - delta) * l.powf(2.0 + delta)),
        r5: resonant_term(v).l2_norm() / (h * h * l),
    })
}

/// Maxima of the ratios over a seeded family of random fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioCensus {
    pub fields: usize,
    pub support: usize,
    pub first_seed: u64,
    pub max: AprioriRatios,
}

/// Evaluates [`apriori_ratios`] on `fields` unit-norm random fields with
/// modes `1..=support`, seeds `first_seed..first_seed + fields`.
pub fn ratio_census(fields: usize, support: usize, first_seed: u64) -> RatioCensus {
    let max = (0..fields as u64)
        .map(|i| {
            let v = FourierField::seeded_random(support, support, first_seed + i);
            apriori_ratios(&v).expect("random fields are nonzero")
        })
        .reduce(AprioriRatios::max)
        .unwrap_or(AprioriRatios {
            r1: 0.0,
            r2: 0.0,
            r3: 0.0,
            r4: 0.0,
            r5: 0.0,
        });
    RatioCensus {
        fields,
        support,
        first_seed,
        max,
    }
}

/// Outcome of an exhaustive integer identity check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub bound: i64,
    pub cases: u64,
    pub failures: u64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

/// `(k1+k2)³ - k1³ - k2³ = 3(k1+k2)k1k2` for all `|k1|, |k2| ≤ bound`.
pub fn check_cube_identity(bound: i64) -> IdentityCheck {
    let mut check = IdentityCheck {
        name: "cube".into(),
        bound,
        cases: 0,
        failures: 0,
    };
    for k1 in -bound..=bound {
        for k2 in -bound..=bound {
            let lhs = (k1 + k2)
                .checked_pow(3)
                .and_then(|s| s.checked_sub(k1.pow(3)))
                .and_then(|s| s.checked_sub(k2.pow(3)));
            let rhs = (k1 + k2)
                .checked_mul(k1)
                .and_then(|s| s.checked_mul(k2))
                .and_then(|s| s.checked_mul(3));
            check.cases += 1;
            if lhs.is_none() || lhs != rhs {
                check.failures += 1;
            }
        }
    }
    check
}

/// `k k1 + μλ = (k1+μ)(k1+λ)` with `k = k1 + μ + λ`, for all indices
/// bounded by `bound` in absolute value.
pub fn check_factorization_identity(bound: i64) -> IdentityCheck {
    let mut check = IdentityCheck {
        name: "factorization".into(),
        bound,
        cases: 0,
        failures: 0,
    };
    for k1 in -bound..=bound {
        for mu in -bound..=bound {
            for lambda in -bound..=bound {
                let k = k1 + mu + lambda;
                check.cases += 1;
                if k * k1 + mu * lambda != (k1 + mu) * (k1 + lambda) {
                    check.failures += 1;
                }
            }
        }
    }
    check
}

/// `3(k1+k2)(k2+k3)(k3+k1) = (k1+k2+k3)³ - k1³ - k2³ - k3³`, which ties the
/// cubic phase to the dispersion relation.
pub fn check_cubic_phase_identity(bound: i64) -> IdentityCheck {
    let mut check = IdentityCheck {
        name: "cubic-phase".into(),
        bound,
        cases: 0,
        failures: 0,
    };
    for k1 in -bound..=bound {
        for k2 in -bound..=bound {
            for k3 in -bound..=bound {
                check.cases += 1;
                let sum = k1 + k2 + k3;
                let lhs = cubic_phase(k1, k2, k3).map(|w| 3 * w);
                if lhs != Ok(sum.pow(3) - k1.pow(3) - k2.pow(3) - k3.pow(3)) {
                    check.failures += 1;
                }
            }
        }
    }
    check
}

/// Residual convergence record at one evaluation time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualStudy {
    pub t: f64,
    pub support: usize,
    pub seed: u64,
    pub dts: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `log2(r(dt) / r(dt/2))` for consecutive halvings.
    pub orders: Vec<f64>,
}

/// Residuals of [`normal_form_residual`] for a seeded unit-norm field with
/// modes `1..=support`, stored with cutoff `4·support`.
pub fn residual_study(
    support: usize,
    seed: u64,
    t: f64,
    dts: &[f64],
) -> Result<ResidualStudy, NormalFormError> {
    let v = FourierField::seeded_random(4 * support, support, seed);
    let residuals = dts
        .iter()
        .map(|&dt| normal_form_residual(&v, t, dt))
        .collect::<Result<Vec<_>, _>>()?;
    let orders = residuals
        .windows(2)
        .zip(dts.windows(2))
        .map(|(r, d)| (r[0] / r[1]).ln() / (d[0] / d[1]).ln())
        .collect();
    Ok(ResidualStudy {
        t,
        support,
        seed,
        dts: dts.to_vec(),
        residuals,
        orders,
    })
}

/// JSON diagnostic bundle for the `normalform-check` run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormReport {
    pub residuals: Vec<ResidualStudy>,
    pub census: RatioCensus,
    pub identities: Vec<IdentityCheck>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::nonlinear_term;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_pair(cutoff: usize, value: Complex64) -> FourierField {
        let mut v = FourierField::zeros(cutoff);
        v.set(1, value);
        v
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_resonance(-5, 5, 5), ResonanceClass::S1);
        assert_eq!(classify_resonance(3, -3, 7), ResonanceClass::S2);
        assert_eq!(classify_resonance(3, 7, -3), ResonanceClass::S3);
        assert_eq!(classify_resonance(2, 3, 4), ResonanceClass::NonResonant);
        assert_eq!(
            classify_resonance(0, 3, 4),
            ResonanceClass::ExcludedZeroDenominator
        );
        assert_eq!(
            classify_resonance(1, 3, -3),
            ResonanceClass::ExcludedZeroDenominator
        );
    }

    #[test]
    fn classes_are_disjoint_and_cover_the_zero_set() {
        for k1 in -6i64..=6 {
            for k2 in -6i64..=6 {
                for k3 in -6i64..=6 {
                    let class = classify_resonance(k1, k2, k3);
                    if class == ResonanceClass::ExcludedZeroDenominator {
                        continue;
                    }
                    let on_zero_set = (k1 + k2) * (k3 + k1) == 0;
                    assert_eq!(class.is_resonant(), on_zero_set, "{k1} {k2} {k3}");
                }
            }
        }
    }

    #[test]
    fn phase_values() {
        assert_eq!(cubic_phase(1, 1, 1), Ok(8));
        assert_eq!(quartic_phase(1, 1, 1, 1), Ok(60));
        assert!(matches!(
            quartic_phase(i64::MAX / 2, 1, 1, 1),
            Err(NormalFormError::PhaseOverflow(_))
        ));
        assert!(cubic_phase(i64::MAX, 1, 0).is_err());
    }

    #[test]
    fn identities_hold_exhaustively() {
        assert!(check_cube_identity(20).passed());
        assert!(check_factorization_identity(20).passed());
        assert!(check_cubic_phase_identity(20).passed());
        assert_eq!(check_cube_identity(20).cases, 41 * 41);
    }

    #[test]
    fn rhs_single_pair() {
        let cval = c(0.3, -0.7);
        let v = single_pair(4, cval);
        let r = rhs_v(&v, 0.0);
        assert!((r.get(2) - c(0.0, 1.0) * cval * cval).norm() < 1e-15);
        assert_eq!(r.get(0), c(0.0, 0.0));
    }

    #[test]
    fn rhs_at_zero_matches_pseudospectral_product() {
        let v = FourierField::seeded_random(32, 16, 5);
        let exact = rhs_v(&v, 0.0);
        let pseudo = nonlinear_term(&v, 1.0, false);
        assert!(exact.max_abs_diff(&pseudo) < 1e-13);
    }

    #[test]
    fn b2_single_pair() {
        let cval = c(0.6, 0.2);
        let v = single_pair(3, cval);
        let q = b2(&v, 0.0);
        assert!((q.get(0) - c(-2.0 * cval.norm_sqr(), 0.0)).norm() < 1e-15);
        assert!((q.get(2) - cval * cval).norm() < 1e-15);
        // the k = 0 entry carries no oscillation
        assert!((b2(&v, 0.77).get(0) - q.get(0)).norm() < 1e-15);
        assert!(b2(&FourierField::zeros(3), 0.0).l2_norm() == 0.0);
    }

    #[test]
    fn b3_single_pair() {
        let cval = c(-0.4, 0.9);
        let v = single_pair(3, cval);
        let q = b3(&v, 0.0);
        assert!((q.get(3) - cval * cval * cval / 8.0).norm() < 1e-15);
        assert_eq!(q.get(1), c(0.0, 0.0));
        assert!(b3(&FourierField::zeros(3), 0.3).l2_norm() == 0.0);
    }

    #[test]
    fn b4_is_sum_of_parts() {
        for seed in 0..5 {
            let v = FourierField::seeded_random(4, 4, seed);
            for t in [0.0, 0.41] {
                let combined = b4(&v, t);
                let p1 = b4_part1(&v, t);
                let p2 = b4_part2(&v, t);
                let cutoff = combined.cutoff() as i64;
                for k in -cutoff..=cutoff {
                    let parts = p1.get(k) * 0.5 + p2.get(k);
                    assert!((combined.get(k) - parts).norm() < 1e-12, "k={k}");
                }
            }
        }
        assert!(b4(&FourierField::zeros(4), 0.0).l2_norm() == 0.0);
    }

    #[test]
    fn multilinear_scaling() {
        let v = FourierField::seeded_random(5, 5, 21);
        let s = -1.7;
        let w = v.scale(s);
        let t = 0.13;
        let tol = 1e-12;
        assert!(b2(&w, t).max_abs_diff(&b2(&v, t).scale(s.powi(2))) < tol);
        assert!(b3(&w, t).max_abs_diff(&b3(&v, t).scale(s.powi(3))) < tol);
        assert!(b4(&w, t).max_abs_diff(&b4(&v, t).scale(s.powi(4))) < tol);
        let doubled = b4(&v.scale(2.0), 0.0);
        assert!(doubled.max_abs_diff(&b4(&v, 0.0).scale(16.0)) < tol);
    }

    #[test]
    fn operators_respect_reality() {
        use crate::spectral::reality_residue;
        let v = FourierField::seeded_random(4, 4, 8);
        // from_raw_sum averages the halves, so re-derive the raw arrays here
        let raw_b3 = {
            let mut out = vec![c(0.0, 0.0); 25];
            for k1 in -4i64..=4 {
                for k2 in -4i64..=4 {
                    for k3 in -4i64..=4 {
                        if k1 * k2 * k3 == 0 {
                            continue;
                        }
                        let (s12, s13, s23) = (k1 + k2, k1 + k3, k2 + k3);
                        if s12 * s13 * s23 == 0 {
                            continue;
                        }
                        let omega = s12 * s13 * s23;
                        out[(k1 + k2 + k3 + 12) as usize] += v.get(k1) * v.get(k2) * v.get(k3)
                            / (k1 * omega) as f64
                            * oscillation(3 * omega, 0.37);
                    }
                }
            }
            out
        };
        assert!(reality_residue(&raw_b3) < 1e-13);
        let packed = b3(&v, 0.37);
        let from_raw = Spectrum::from_symmetric(&raw_b3).unwrap();
        assert!(packed.max_abs_diff(&from_raw) < 1e-14);
    }

    #[test]
    fn resonant_term_formula() {
        let cval = c(0.5, -0.25);
        let v = single_pair(2, cval);
        let r = resonant_term(&v);
        assert!((r.get(1) + cval * cval.norm_sqr()).norm() < 1e-16);
        assert!(resonant_term(&FourierField::zeros(3)).is_zero());
    }

    #[test]
    fn resonant_enumeration_matches_closed_form() {
        for seed in 0..10 {
            let v = FourierField::seeded_random(6, 6, seed);
            let diff = resonant_sum(&v).max_abs_diff(&resonant_term(&v));
            assert!(diff < 1e-14, "seed {seed}: {diff}");
        }
    }

    #[test]
    fn residual_rejects_wide_support() {
        let v = FourierField::seeded_random(8, 4, 1);
        assert_eq!(
            normal_form_residual(&v, 0.0, 1e-4),
            Err(NormalFormError::SupportTooWide {
                support: 4,
                cutoff: 8
            })
        );
        assert_eq!(
            normal_form_residual(&FourierField::zeros(16), 0.0, 1e-4),
            Ok(0.0)
        );
    }

    #[test]
    fn residual_converges_at_second_order() {
        let study = residual_study(4, 17, 0.0, &[1e-4, 5e-5]).unwrap();
        let ratio = study.residuals[0] / study.residuals[1];
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}, {study:?}");
        let small = residual_study(4, 17, 0.0, &[1e-5]).unwrap();
        assert!(small.residuals[0] < 1e-8, "{small:?}");
    }

    #[test]
    fn single_pair_ratios() {
        for n in [1usize, 3, 10] {
            let mut v = FourierField::zeros(n);
            v.set(n, c(1.0 / 2f64.sqrt(), 0.0));
            let r = apriori_ratios(&v).unwrap();
            assert!((r.r5 - 0.5).abs() < 1e-14, "n={n}: {r:?}");
        }
        assert_eq!(
            apriori_ratios(&FourierField::zeros(4)),
            Err(NormalFormError::UndefinedRatio)
        );
    }

    #[test]
    fn r1_is_scale_invariant() {
        let v = FourierField::seeded_random(6, 6, 2);
        let base = apriori_ratios(&v).unwrap().r1;
        for s in [-3.0, 0.01, 7.5] {
            let scaled = apriori_ratios(&v.scale(s)).unwrap().r1;
            assert!((scaled - base).abs() < 1e-12 * base);
        }
    }
}
