//! The rotation compiler: Euler decomposition with proved angle bounds,
//! dyadic expansion into R_Y(θ_k) sequences, and the adaptive sign-corrected
//! executor.
//!
//! An arbitrary rotation U(θ) about a unit axis decomposes as
//! R_Z(α)R_Y(β)R_X(γ) = H·S†·R_Y(γ)·S·H·R_Y(β)·S†·R_Y(α)·S with all three
//! angles bounded by 2θ for θ ≤ π/8, so every non-Clifford piece is a
//! y-rotation. Each angle expands over the dyadic grid θ_k = 2π/2^k and is
//! executed deepest-first; a −1 injection outcome leaves a deficit θ_{k−1}
//! that carries one position up, terminating in free Clifford rotations at
//! k ≤ 2.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Error;
use crate::qsim::{ry, theta_k, ComplexMatrix};
use crate::Result;

/// Euler angles of the Z–Y–X decomposition.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerAngles {
    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    /// SU(2) matrix R_Z(α)·R_Y(β)·R_X(γ).
    pub fn matrix(&self) -> ComplexMatrix {
        rz(self.alpha).mul(&ry(self.beta)).mul(&rx(self.gamma))
    }
}

fn rz(theta: f64) -> ComplexMatrix {
    let c = num_complex::Complex64::new;
    let half = theta / 2.0;
    ComplexMatrix::from_rows(&[
        vec![c(half.cos(), -half.sin()), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(half.cos(), half.sin())],
    ])
}

fn rx(theta: f64) -> ComplexMatrix {
    let c = num_complex::Complex64::new;
    let half = theta / 2.0;
    ComplexMatrix::from_rows(&[
        vec![c(half.cos(), 0.0), c(0.0, -half.sin())],
        vec![c(0.0, -half.sin()), c(half.cos(), 0.0)],
    ])
}

/// SU(2) matrix exp(−iθ(n̂·σ)/2).
pub fn axis_rotation(axis: [f64; 3], theta: f64) -> ComplexMatrix {
    let c = num_complex::Complex64::new;
    let half = theta / 2.0;
    let (s, co) = (half.sin(), half.cos());
    ComplexMatrix::from_rows(&[
        vec![c(co, -s * axis[2]), c(-s * axis[1], -s * axis[0])],
        vec![c(s * axis[1], -s * axis[0]), c(co, s * axis[2])],
    ])
}

/// Decompose a rotation about a unit axis into Z–Y–X Euler angles.
///
/// The sign of θ is absorbed into the axis orientation; after that the
/// rotation angle must not exceed π/8, which keeps every Euler angle within
/// 2θ in magnitude.
pub fn euler_decompose(axis: [f64; 3], theta: f64) -> Result<EulerAngles> {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitAxis(norm));
    }
    let mut theta = theta % TAU;
    if theta > PI {
        theta -= TAU;
    }
    if theta < -PI {
        theta += TAU;
    }
    let mut axis = axis;
    if theta < 0.0 {
        theta = -theta;
        for a in axis.iter_mut() {
            *a = -*a;
        }
    }
    if theta > PI / 8.0 + 1e-12 {
        return Err(Error::AngleOutOfRange(theta));
    }
    // SO(3) image: R = cosθ·1 + (1−cosθ)·nnᵀ − sinθ·[n]×.
    let (s, c) = theta.sin_cos();
    let omc = 1.0 - c;
    let n = axis;
    let eps = |i: usize, j: usize, k: usize| -> f64 {
        match (i, j, k) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    };
    let r = |i: usize, j: usize| -> f64 {
        let delta = if i == j { 1.0 } else { 0.0 };
        let cross: f64 = (0..3).map(|k| eps(i, j, k) * n[k]).sum();
        c * delta + omc * n[i] * n[j] - s * cross
    };
    let beta = (-r(2, 0)).asin();
    let alpha = r(1, 0).atan2(r(0, 0));
    let gamma = r(2, 1).atan2(r(2, 2));
    Ok(EulerAngles { alpha, beta, gamma })
}

/// Dyadic expansion α = ± Σ_{k=h}^{h+ℓ} bit_k·θ_k (empty and flagged when
/// the angle is zero).
#[derive(Debug, Clone, Serialize)]
pub struct DyadicExpansion {
    /// Leading index; θ_h is the largest grid angle not exceeding |α|.
    pub h: u32,
    /// Bits for positions h, h+1, …, h+ℓ.
    pub bits: Vec<bool>,
    /// The expansion reconstructs −|α| rather than +|α|.
    pub negative: bool,
    /// True when α = 0 and the expansion is empty.
    pub zero: bool,
}

impl DyadicExpansion {
    /// Signed reconstruction of the expansion.
    pub fn reconstruct(&self) -> f64 {
        let mut total = 0.0;
        for (pos, &bit) in self.bits.iter().enumerate() {
            if bit {
                total += theta_k(self.h + pos as u32);
            }
        }
        if self.negative {
            -total
        } else {
            total
        }
    }

    pub fn ell(&self) -> u32 {
        self.bits.len().saturating_sub(1) as u32
    }

    /// Set positions as k-indices.
    pub fn set_positions(&self) -> Vec<u32> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(pos, _)| self.h + pos as u32)
            .collect()
    }
}

/// Expand an angle with |α| < π/2 into ℓ+1 dyadic bits; truncation error is
/// at most 2π/2^{h+ℓ}.
pub fn dyadic_expand(alpha: f64, ell: u32) -> Result<DyadicExpansion> {
    if alpha == 0.0 {
        return Ok(DyadicExpansion {
            h: 0,
            bits: Vec::new(),
            negative: false,
            zero: true,
        });
    }
    let magnitude = alpha.abs();
    if magnitude >= PI / 2.0 {
        return Err(Error::AngleOutOfRange(alpha));
    }
    let mut h = 2u32;
    while theta_k(h) > magnitude {
        h += 1;
    }
    let mut bits = Vec::with_capacity(ell as usize + 1);
    let mut rest = magnitude;
    for k in h..=h + ell {
        let step = theta_k(k);
        // Tiny slack keeps exact dyadic values from losing their last bit.
        if step <= rest * (1.0 + 1e-12) + 1e-300 {
            bits.push(true);
            rest -= step;
        } else {
            bits.push(false);
        }
    }
    Ok(DyadicExpansion {
        h,
        bits,
        negative: alpha < 0.0,
        zero: false,
    })
}

/// Source of state-injection measurement outcomes (±1).
pub trait OutcomeSource {
    fn next_outcome(&mut self) -> i8;
}

/// Fair ±1 outcomes from a seeded generator.
pub struct SeededOutcomes(ChaCha8Rng);

impl SeededOutcomes {
    pub fn new(seed: u64) -> Self {
        use rand::SeedableRng;
        Self(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl OutcomeSource for SeededOutcomes {
    fn next_outcome(&mut self) -> i8 {
        if self.0.random_bool(0.5) {
            1
        } else {
            -1
        }
    }
}

/// Fixed outcome script for tests; panics when exhausted.
pub struct ScriptedOutcomes(VecDeque<i8>);

impl ScriptedOutcomes {
    pub fn new(outcomes: &[i8]) -> Self {
        Self(outcomes.iter().copied().collect())
    }
}

impl OutcomeSource for ScriptedOutcomes {
    fn next_outcome(&mut self) -> i8 {
        self.0.pop_front().expect("outcome script exhausted")
    }
}

/// Record of one adaptive execution.
#[derive(Debug, Clone, Serialize)]
pub struct Transcript {
    /// Magic-state injections as (level, outcome) in execution order.
    pub injections: Vec<(u32, i8)>,
    /// Free Clifford rotations applied at levels ≤ 2.
    pub clifford_levels: Vec<u32>,
    /// Number of consumed non-Clifford states (= injections).
    pub noncliffords: u32,
    /// The exactly realized rotation angle.
    pub realized_angle: f64,
}

/// Execute a dyadic expansion with the adaptive sign-correction protocol.
///
/// Positions run deepest-first; each −1 outcome adds θ_{k−1} to the pending
/// angle (binary carry toward larger angles). The realized rotation equals
/// the expansion's value exactly for every outcome sequence — adaptivity
/// changes the gate count, never the implemented rotation.
pub fn adaptive_execute(expansion: &DyadicExpansion, source: &mut dyn OutcomeSource) -> Transcript {
    if expansion.zero {
        return Transcript {
            injections: Vec::new(),
            clifford_levels: Vec::new(),
            noncliffords: 0,
            realized_angle: 0.0,
        };
    }
    let deepest = expansion.h + expansion.ell();
    assert!(deepest < 127, "dyadic grid exhausts the angle register");
    // Bit k of `pending` marks a θ_k rotation still to apply.
    let mut pending: u128 = 0;
    for k in expansion.set_positions() {
        pending |= 1u128 << k;
    }
    // Angle bookkeeping in exact integer units of θ_{deepest}.
    let unit_of = |k: u32| 1i128 << (deepest - k);
    let sign = if expansion.negative { -1.0 } else { 1.0 };
    let mut injections = Vec::new();
    let mut clifford_levels = Vec::new();
    let mut realized: i128 = 0;
    for k in (1..=deepest).rev() {
        if pending >> k & 1 == 0 {
            continue;
        }
        pending &= !(1u128 << k);
        if k >= 3 {
            let outcome = source.next_outcome();
            injections.push((k, outcome));
            if outcome == 1 {
                realized += unit_of(k);
            } else {
                realized -= unit_of(k);
                // Deficit 2θ_k = θ_{k−1}: binary carry upward.
                let mut j = k - 1;
                while pending >> j & 1 == 1 {
                    pending &= !(1u128 << j);
                    j -= 1;
                }
                pending |= 1u128 << j;
            }
        } else {
            // θ_2 and θ_1 are Clifford rotations, applied exactly.
            clifford_levels.push(k);
            realized += unit_of(k);
        }
    }
    let noncliffords = injections.len() as u32;
    let realized_angle = sign * realized as f64 * theta_k(deepest);
    Transcript {
        injections,
        clifford_levels,
        noncliffords,
        realized_angle,
    }
}

/// Expectation-form program for one Euler angle.
#[derive(Debug, Clone, Serialize)]
pub struct AngleProgram {
    pub expansion: DyadicExpansion,
    /// (level, injection probability) of the adaptive execution.
    pub profile: Vec<(u32, f64)>,
    pub expected_injections: f64,
}

/// Exact injection probabilities of the adaptive walk over a fixed bit
/// pattern: position k injects with probability p_k and a carry reaches
/// k−1 with probability p_k/2, until the Clifford cutoff.
fn injection_profile(expansion: &DyadicExpansion) -> Vec<(u32, f64)> {
    if expansion.zero {
        return Vec::new();
    }
    let deepest = expansion.h + expansion.ell();
    let set = expansion.set_positions();
    let mut profile = Vec::new();
    let mut carry = 0.0f64;
    let mut k = deepest;
    while k >= 3 {
        let bit = set.contains(&k);
        let p = if bit { 1.0 - carry } else { carry };
        if p > 0.0 {
            profile.push((k, p));
        }
        carry = p / 2.0;
        k -= 1;
    }
    profile.reverse();
    profile
}

/// Compiled rotation in expectation form.
#[derive(Debug, Clone, Serialize)]
pub struct CompiledRotation {
    pub axis: [f64; 3],
    pub theta: f64,
    pub eps_rel: f64,
    pub euler: EulerAngles,
    pub ell: u32,
    pub per_angle: Vec<AngleProgram>,
    pub expected_noncliffords: f64,
}

/// Compile an arbitrary rotation to relative accuracy ε_rel: three Euler
/// angles, each expanded to ℓ = ⌈log₂(6/ε_rel)⌉ bits (per-angle relative
/// truncation ε_rel/6), with the expected non-Clifford count of the adaptive
/// execution. Generic angles average ℓ/2 + 1 injections each.
pub fn compile_rotation(axis: [f64; 3], theta: f64, eps_rel: f64) -> Result<CompiledRotation> {
    if !(eps_rel > 0.0 && eps_rel < 1.0) {
        return Err(Error::EpsRelOutOfRange(eps_rel));
    }
    let euler = euler_decompose(axis, theta)?;
    let ell = (6.0 / eps_rel).log2().ceil() as u32;
    let mut per_angle = Vec::with_capacity(3);
    let mut expected = 0.0;
    for angle in euler.as_array() {
        let expansion = dyadic_expand(angle, ell)?;
        let profile = injection_profile(&expansion);
        let e: f64 = profile.iter().map(|(_, p)| p).sum::<f64>() + 0.0;
        expected += e;
        per_angle.push(AngleProgram {
            expansion,
            profile,
            expected_injections: e,
        });
    }
    Ok(CompiledRotation {
        axis,
        theta,
        eps_rel,
        euler,
        ell,
        per_angle,
        expected_noncliffords: expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::IDENTITY_TOL;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn euler_of_pure_y_rotation() {
        let e = euler_decompose([0.0, 1.0, 0.0], 0.1).unwrap();
        assert!(e.alpha.abs() < 1e-14);
        assert!((e.beta - 0.1).abs() < 1e-14);
        assert!(e.gamma.abs() < 1e-14);
        let zero = euler_decompose([1.0, 0.0, 0.0], 0.0).unwrap();
        assert!(zero.alpha.abs() + zero.beta.abs() + zero.gamma.abs() < 1e-14);
    }

    #[test]
    fn euler_rejects_bad_inputs() {
        assert!(matches!(
            euler_decompose([0.5, 0.0, 0.0], 0.1),
            Err(Error::NonUnitAxis(_))
        ));
        assert!(matches!(
            euler_decompose([0.0, 1.0, 0.0], 0.5),
            Err(Error::AngleOutOfRange(_))
        ));
        // Negative angles flip the axis.
        let e = euler_decompose([0.0, 1.0, 0.0], -0.1).unwrap();
        assert!((e.beta + 0.1).abs() < 1e-14);
    }

    #[test]
    fn euler_bounds_and_reconstruction_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..10_000 {
            let theta: f64 = rng.random_range(0.0..PI / 8.0);
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..TAU);
            let r = (1.0 - z * z).sqrt();
            let axis = [r * phi.cos(), r * phi.sin(), z];
            let e = euler_decompose(axis, theta).unwrap();
            assert!(e.alpha.abs() <= 2.0 * theta + 1e-12, "alpha bound");
            assert!(e.beta.abs() <= 2.0 * theta + 1e-12, "beta bound");
            assert!(e.gamma.abs() <= 2.0 * theta + 1e-12, "gamma bound");
            let diff = e
                .matrix()
                .max_abs_diff_up_to_phase(&axis_rotation(axis, theta));
            assert!(diff < 1e-10, "reconstruction {diff}");
        }
    }

    #[test]
    fn dyadic_exact_values() {
        // 3π/8 = π/4 + π/8 = θ_3 + θ_4.
        let e = dyadic_expand(3.0 * PI / 8.0, 6).unwrap();
        assert_eq!(e.h, 3);
        assert_eq!(e.set_positions(), vec![3, 4]);
        assert!((e.reconstruct() - 3.0 * PI / 8.0).abs() < 1e-15);
        // θ_7 is a single grid point.
        let e = dyadic_expand(theta_k(7), 10).unwrap();
        assert_eq!(e.set_positions(), vec![7]);
        // Zero is flagged, out-of-range errors.
        assert!(dyadic_expand(0.0, 4).unwrap().zero);
        assert!(dyadic_expand(2.0, 4).is_err());
    }

    #[test]
    fn dyadic_truncation_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let alpha: f64 = rng.random_range(-1.5..1.5);
            if alpha.abs() < 1e-6 {
                continue;
            }
            let ell = 20;
            let e = dyadic_expand(alpha, ell).unwrap();
            let err = (e.reconstruct() - alpha).abs();
            assert!(
                err <= TAU / 2f64.powi((e.h + ell) as i32),
                "alpha={alpha} err={err}"
            );
        }
    }

    #[test]
    fn adaptive_all_plus_consumes_set_bits() {
        let e = dyadic_expand(theta_k(3) + theta_k(4), 4).unwrap();
        let mut src = ScriptedOutcomes::new(&[1, 1]);
        let t = adaptive_execute(&e, &mut src);
        assert_eq!(t.noncliffords, 2);
        assert!((t.realized_angle - e.reconstruct()).abs() < 1e-15);
    }

    #[test]
    fn minus_outcome_at_three_becomes_clifford_correction() {
        let e = dyadic_expand(theta_k(3), 2).unwrap();
        let mut src = ScriptedOutcomes::new(&[-1]);
        let t = adaptive_execute(&e, &mut src);
        assert_eq!(t.noncliffords, 1);
        assert_eq!(t.clifford_levels, vec![2]);
        // −θ_3 + θ_2 = θ_3 exactly.
        assert!((t.realized_angle - theta_k(3)).abs() < 1e-15);
        let target = ry(e.reconstruct());
        assert!(ry(t.realized_angle).max_abs_diff(&target) < IDENTITY_TOL);
    }

    /// Script that reports exhaustion instead of panicking.
    struct ScriptedLimited {
        outcomes: Vec<i8>,
        cursor: usize,
        exhausted: bool,
    }

    impl ScriptedLimited {
        fn new(outcomes: &[i8]) -> Self {
            Self {
                outcomes: outcomes.to_vec(),
                cursor: 0,
                exhausted: false,
            }
        }
    }

    impl OutcomeSource for ScriptedLimited {
        fn next_outcome(&mut self) -> i8 {
            if self.cursor >= self.outcomes.len() {
                self.exhausted = true;
                return 1;
            }
            self.cursor += 1;
            self.outcomes[self.cursor - 1]
        }
    }

    #[test]
    fn every_outcome_sequence_realizes_the_expansion() {
        // Depth-first over all outcome sequences of a 4-bit expansion.
        let e = dyadic_expand(theta_k(3) + theta_k(5) + theta_k(6), 3).unwrap();
        let target = e.reconstruct();
        let mut stack = vec![Vec::<i8>::new()];
        let mut paths = 0;
        while let Some(script) = stack.pop() {
            let mut padded = ScriptedLimited::new(&script);
            let t = adaptive_execute(&e, &mut padded);
            if padded.exhausted {
                stack.push([script.clone(), vec![1]].concat());
                stack.push([script, vec![-1]].concat());
                continue;
            }
            paths += 1;
            assert!(
                (t.realized_angle - target).abs() < 1e-14,
                "script {:?}",
                t.injections
            );
        }
        assert!(paths >= 8, "covered {paths} outcome paths");
    }

    #[test]
    fn injection_count_cap_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let alpha: f64 = rng.random_range(1e-4..1.0);
            let ell = 8;
            let e = dyadic_expand(alpha, ell).unwrap();
            let mut src = SeededOutcomes::new(rng.random());
            let t = adaptive_execute(&e, &mut src);
            let minus = t
                .injections
                .iter()
                .filter(|(k, o)| *o == -1 && *k > 3)
                .count();
            assert!(t.noncliffords <= ell + 1 + minus as u32);
            assert!((t.realized_angle - e.reconstruct()).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_injections_match_half_ell_plus_one() {
        // Uniform random patterns over ℓ = 10 deep grid positions: the mean
        // non-Clifford count over bits and outcomes is ℓ/2 + 1 exactly
        // (ℓ/2 from the positions themselves plus one from the correction
        // tail above the block).
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let ell = 10u32;
        let trials = 20_000u32;
        let mut total = 0u64;
        for _ in 0..trials {
            let mut bits = vec![false; ell as usize];
            for b in bits.iter_mut() {
                *b = rng.random_bool(0.5);
            }
            let e = DyadicExpansion {
                h: 20,
                bits,
                negative: false,
                zero: false,
            };
            let mut src = SeededOutcomes::new(rng.random());
            total += adaptive_execute(&e, &mut src).noncliffords as u64;
        }
        let mean = total as f64 / trials as f64;
        assert!((mean - 6.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn compile_rotation_examples() {
        // ε_rel = 6·2^{−4}: ℓ = 4, expected count within 3ℓ/2 + 3.
        let c = compile_rotation([0.0, 1.0, 0.0], 0.1, 6.0 / 16.0).unwrap();
        assert_eq!(c.ell, 4);
        assert!(c.expected_noncliffords <= 9.0);
        // β-only case: a single nonzero Euler angle.
        assert!(c.per_angle[0].expansion.zero);
        assert!(!c.per_angle[1].expansion.zero);
        assert!(c.per_angle[2].expansion.zero);
        assert!(c.per_angle[1].expected_injections <= c.ell as f64 / 2.0 + 1.0);
        assert!(compile_rotation([0.0, 1.0, 0.0], 0.1, 0.0).is_err());
        assert!(compile_rotation([0.0, 1.0, 0.0], 0.1, 1.5).is_err());
    }

    #[test]
    fn compiled_execution_meets_absolute_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..100u64 {
            let theta: f64 = rng.random_range(1e-3..PI / 8.0);
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..TAU);
            let r = (1.0 - z * z).sqrt();
            let axis = [r * phi.cos(), r * phi.sin(), z];
            let eps_rel = 1e-3;
            let c = compile_rotation(axis, theta, eps_rel).unwrap();
            // Realized Euler angles from sampled adaptive executions.
            let mut realized = [0.0f64; 3];
            for (i, prog) in c.per_angle.iter().enumerate() {
                if prog.expansion.zero {
                    continue;
                }
                let mut src = SeededOutcomes::new(1000 + trial);
                realized[i] = adaptive_execute(&prog.expansion, &mut src).realized_angle;
            }
            let realized_u = rz(realized[0]).mul(&ry(realized[1])).mul(&rx(realized[2]));
            let target = axis_rotation(axis, theta);
            let diff = realized_u.max_abs_diff_up_to_phase(&target);
            assert!(
                diff <= eps_rel * theta,
                "trial {trial}: diff {diff} vs {}",
                eps_rel * theta
            );
        }
    }
}
