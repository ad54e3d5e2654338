//! The (ε, Δ) noise calculus: error amplitude vectors, their product, the
//! W_k cascade vector, the noisy phase-flip channel, and twirling.
//!
//! An [`ErrorVector`] v = (a, b, c, d) stands for the map
//! ρ → a·ρ + b·YρY − c·Yρ − d·ρY acting after an ideal operation; the vector
//! of a noisy resource state is (1−ε, ε, Δ, Δ*). Composition of two such maps
//! is exactly [`ErrorVector::product`], which is commutative and associative.

use num_complex::Complex64;

use crate::error::Error;
use crate::qsim::{ry, standard_gate, theta_k, ComplexMatrix, DensityMatrix, Gate};
use crate::Result;

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Slack on the positivity bound |Δ|² ≤ ε − ε².
const PHYSICALITY_SLACK: f64 = 1e-14;

/// Noise parameters (ε, Δ) of a magic state in the |Y_k⟩/|Ȳ_k⟩ basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    eps: f64,
    delta: Complex64,
}

impl NoiseParams {
    pub fn new(eps: f64, delta: Complex64) -> Result<Self> {
        let p = Self { eps, delta };
        p.validate()?;
        Ok(p)
    }

    /// The perfect magic state (0, 0).
    pub fn perfect() -> Self {
        Self {
            eps: 0.0,
            delta: C_ZERO,
        }
    }

    /// Diagonal noise (ε, 0).
    pub fn diagonal(eps: f64) -> Result<Self> {
        Self::new(eps, C_ZERO)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> Complex64 {
        self.delta
    }

    pub fn validate(&self) -> Result<()> {
        let bound = self.eps - self.eps * self.eps + PHYSICALITY_SLACK;
        if !(0.0..=0.5).contains(&self.eps)
            || !self.eps.is_finite()
            || self.delta.norm_sqr() > bound
        {
            return Err(Error::UnphysicalParams {
                eps: self.eps,
                delta_sq: self.delta.norm_sqr(),
            });
        }
        Ok(())
    }

    /// Error amplitude vector (1−ε, ε, Δ, Δ*).
    pub fn error_vector(&self) -> ErrorVector {
        ErrorVector([
            C_ONE - Complex64::new(self.eps, 0.0),
            Complex64::new(self.eps, 0.0),
            self.delta,
            self.delta.conj(),
        ])
    }

    /// Zero out Δ, keeping ε.
    pub fn zero_delta(&self) -> Self {
        Self {
            eps: self.eps,
            delta: C_ZERO,
        }
    }
}

/// W_3 = H twirl: the Clifford symmetrization that leaves only diagonal noise
/// on k = 3 resources.
pub fn twirl_diag(p: &NoiseParams) -> NoiseParams {
    p.zero_delta()
}

/// Four-component error amplitude vector closed under the injection product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorVector(pub [Complex64; 4]);

impl ErrorVector {
    pub fn identity() -> Self {
        Self([C_ONE, C_ZERO, C_ZERO, C_ZERO])
    }

    pub fn components(&self) -> &[Complex64; 4] {
        &self.0
    }

    pub fn component_sum(&self) -> Complex64 {
        self.0.iter().sum()
    }

    /// The × product:
    /// (ae+bf+cg+dh, af+be+ch+dg, ag+bh+ce+df, ah+bg+cf+de).
    pub fn product(&self, rhs: &Self) -> Self {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = rhs.0;
        Self([
            a * e + b * f + c * g + d * h,
            a * f + b * e + c * h + d * g,
            a * g + b * h + c * e + d * f,
            a * h + b * g + c * f + d * e,
        ])
    }

    /// Sign flip of the off-diagonal components: the error applied on a −1
    /// injection outcome.
    pub fn negate_offdiag(&self) -> Self {
        let [a, b, c, d] = self.0;
        Self([a, b, -c, -d])
    }

    pub fn scale(&self, w: f64) -> Self {
        let w = Complex64::new(w, 0.0);
        Self([self.0[0] * w, self.0[1] * w, self.0[2] * w, self.0[3] * w])
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
            self.0[3] + rhs.0[3],
        ])
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.0[2].norm() <= tol && self.0[3].norm() <= tol
    }
}

/// Accumulated error vector of the W_k injection cascade:
///
/// ε_{W_k} = (1/2^{k−3}) Π_{j=3}^{k−1} ε_{j−}
///         + Σ_{i=3}^{k−1} (1/2^{k−i}) (Π_{j=i+1}^{k−1} ε_{j−}) × ε_i.
///
/// `resources[0]` holds the parameters for j = 3, the last entry j = k−1;
/// the implied k is `resources.len() + 3` and must be at least 4.
pub fn wk_error_vector(resources: &[NoiseParams]) -> Result<ErrorVector> {
    if resources.is_empty() {
        return Err(Error::KOutOfRange(3));
    }
    let k = resources.len() as u32 + 3;
    for r in resources {
        r.validate()?;
    }
    // tail_minus[i] = Π_{j=i+1}^{k−1} ε_{j−}, built from the deep end.
    let n = resources.len();
    let mut tail = vec![ErrorVector::identity(); n + 1];
    for i in (0..n).rev() {
        tail[i] = tail[i + 1].product(&resources[i].error_vector().negate_offdiag());
    }
    let mut acc = tail[0].scale(1.0 / 2f64.powi(k as i32 - 3));
    for (idx, res) in resources.iter().enumerate() {
        let j = idx as u32 + 3;
        let weight = 1.0 / 2f64.powi((k - j) as i32);
        acc = acc.add(&tail[idx + 1].product(&res.error_vector()).scale(weight));
    }
    Ok(acc)
}

/// Apply the noisy phase-flip W̃_k described by an error vector to one wire:
///
/// ρ → v₁ WρW + v₂ YWρWY − v₃ YWρW − v₄ WρWY, with W = R_Y(θ_{k−1})·Z.
///
/// With the identity vector this is the exact W_k conjugation. The output is
/// generally unnormalized.
pub fn apply_noisy_wk(
    rho: &DensityMatrix,
    k: u32,
    v: &ErrorVector,
    target: usize,
) -> Result<DensityMatrix> {
    if !(3..=89).contains(&k) {
        return Err(Error::KOutOfRange(k));
    }
    let w = ry(theta_k(k - 1)).mul(&standard_gate(Gate::Z, None)?);
    let y = standard_gate(Gate::Y, None)?;
    let yw = y.mul(&w);
    let w_f = rho.embed_operator(&w, &[target])?;
    let yw_f = rho.embed_operator(&yw, &[target])?;
    let r = rho.matrix();
    let [v1, v2, v3, v4] = *v.components();
    let term = |left: &ComplexMatrix, right: &ComplexMatrix, weight: Complex64| {
        left.mul(r).mul(&right.adjoint()).scale(weight)
    };
    let mat = term(&w_f, &w_f, v1)
        .add(&term(&yw_f, &yw_f, v2))
        .add(&term(&yw_f, &w_f, -v3))
        .add(&term(&w_f, &yw_f, -v4));
    DensityMatrix::from_matrix(rho.nqubits(), mat, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{magic_state, trace_distance, MagicBasis};
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn params_validation_bounds() {
        assert!(NoiseParams::new(0.6, C_ZERO).is_err());
        assert!(NoiseParams::new(-0.1, C_ZERO).is_err());
        assert!(NoiseParams::new(0.01, c(0.2, 0.0)).is_err());
        // Saturating the positivity bound is allowed.
        let eps = 0.01f64;
        let d = (eps - eps * eps).sqrt();
        assert!(NoiseParams::new(eps, c(d, 0.0)).is_ok());
    }

    #[test]
    fn product_identity_and_cancellation() {
        let v = ErrorVector([c(0.3, 0.1), c(0.2, -0.4), c(0.05, 0.0), c(0.05, 0.0)]);
        assert_eq!(ErrorVector::identity().product(&v), v);
        let flip = ErrorVector([C_ZERO, C_ONE, C_ZERO, C_ZERO]);
        assert_eq!(flip.product(&flip), ErrorVector::identity());
    }

    #[test]
    fn product_hand_evaluated_example() {
        let a = ErrorVector([c(0.9, 0.0), c(0.1, 0.0), C_ZERO, C_ZERO]);
        let b = ErrorVector([c(0.8, 0.0), c(0.2, 0.0), C_ZERO, C_ZERO]);
        let p = a.product(&b);
        assert!((p.0[0] - c(0.74, 0.0)).norm() < 1e-15);
        assert!((p.0[1] - c(0.26, 0.0)).norm() < 1e-15);
        assert!(p.0[2].norm() < 1e-15 && p.0[3].norm() < 1e-15);
    }

    #[test]
    fn negate_offdiag_is_involution() {
        let v = ErrorVector([c(0.9, 0.0), c(0.1, 0.0), c(0.02, 0.01), c(0.02, -0.01)]);
        let m = v.negate_offdiag();
        assert_eq!(m.0[0], v.0[0]);
        assert_eq!(m.0[2], -v.0[2]);
        assert_eq!(m.negate_offdiag(), v);
        let diag = ErrorVector([c(0.9, 0.0), c(0.1, 0.0), C_ZERO, C_ZERO]);
        assert_eq!(diag.negate_offdiag(), diag);
    }

    proptest! {
        #[test]
        fn product_is_commutative_associative(
            a in proptest::array::uniform8(-1.0f64..1.0),
            b in proptest::array::uniform8(-1.0f64..1.0),
            d in proptest::array::uniform8(-1.0f64..1.0),
        ) {
            let mk = |x: [f64; 8]| ErrorVector([
                c(x[0], x[1]), c(x[2], x[3]), c(x[4], x[5]), c(x[6], x[7]),
            ]);
            let (u, v, w) = (mk(a), mk(b), mk(d));
            let uv = u.product(&v);
            let vu = v.product(&u);
            for i in 0..4 {
                prop_assert!((uv.0[i] - vu.0[i]).norm() < 1e-12);
            }
            let l = uv.product(&w);
            let r = u.product(&v.product(&w));
            for i in 0..4 {
                prop_assert!((l.0[i] - r.0[i]).norm() < 1e-12);
            }
            // Component sums multiply.
            let lhs = uv.component_sum();
            let rhs = u.component_sum() * v.component_sum();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn wk_vector_k4_diagonal() {
        // k = 4 with diagonal ε_3: ε_{W_4} = (ε_{3−} + ε_3)/2 = (1−ε, ε, 0, 0).
        let eps = 0.03;
        let v = wk_error_vector(&[NoiseParams::diagonal(eps).unwrap()]).unwrap();
        assert!((v.0[0] - c(1.0 - eps, 0.0)).norm() < 1e-15);
        assert!((v.0[1] - c(eps, 0.0)).norm() < 1e-15);
        assert!(v.is_diagonal(1e-15));
    }

    #[test]
    fn wk_vector_perfect_resources() {
        let perfect = vec![NoiseParams::perfect(); 5];
        let v = wk_error_vector(&perfect).unwrap();
        assert!((v.0[0] - C_ONE).norm() < 1e-15);
        for i in 1..4 {
            assert!(v.0[i].norm() < 1e-15);
        }
    }

    #[test]
    fn wk_vector_branch_weights_sum_to_one() {
        // With all resources set to the multiplicative identity vector the
        // result collapses to the total branch probability.
        for k in 4..12u32 {
            let n = (k - 3) as usize;
            let resources = vec![NoiseParams::perfect(); n];
            let v = wk_error_vector(&resources).unwrap();
            assert!((v.component_sum() - C_ONE).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn wk_vector_diagonal_closure() {
        let resources: Vec<NoiseParams> = [0.01, 0.003, 0.02, 0.04]
            .iter()
            .map(|&e| NoiseParams::diagonal(e).unwrap())
            .collect();
        let v = wk_error_vector(&resources).unwrap();
        assert!(v.is_diagonal(1e-15));
    }

    #[test]
    fn wk_vector_matches_monte_carlo_cascade() {
        // Stochastic oracle: sample the injection cascade branch structure of
        // the W_5 gadget and average per-branch vectors.
        let eps3 = 0.01;
        let eps4 = 0.01;
        let resources = [
            NoiseParams::diagonal(eps3).unwrap(),
            NoiseParams::diagonal(eps4).unwrap(),
        ];
        let closed = wk_error_vector(&resources).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let trials = 200_000u32;
        let mut acc = [C_ZERO; 4];
        for _ in 0..trials {
            // Walk j = k−1 down to 3; outcome −1 continues the cascade.
            let mut branch = ErrorVector::identity();
            for idx in (0..resources.len()).rev() {
                let minus = rng.random_bool(0.5);
                let v = resources[idx].error_vector();
                if minus {
                    branch = branch.product(&v.negate_offdiag());
                } else {
                    branch = branch.product(&v);
                    break;
                }
            }
            for i in 0..4 {
                acc[i] += branch.0[i];
            }
        }
        let n = trials as f64;
        for i in 0..4 {
            let mc = acc[i] / n;
            // 3σ of a bounded component estimate across 2e5 trials.
            let sigma = 3.0 * 0.5 / n.sqrt();
            assert!(
                (mc - closed.0[i]).norm() < sigma.max(1e-4),
                "component {i}: mc={mc} closed={}",
                closed.0[i]
            );
        }
    }

    #[test]
    fn noisy_wk_identity_vector_is_exact_w() {
        let params = NoiseParams::new(0.04, c(0.01, 0.02)).unwrap();
        for k in [3u32, 4, 7] {
            let rho = magic_state(k, &params).unwrap();
            let out = apply_noisy_wk(&rho, k, &ErrorVector::identity(), 0).unwrap();
            let w = MagicBasis::new(k).unwrap().w_matrix();
            let expect = rho.embed_apply(&w, &[0]).unwrap();
            assert!(out.matrix().max_abs_diff(expect.matrix()) < 1e-12, "k={k}");
        }
    }

    #[test]
    fn noisy_wk_eigenstate_cases() {
        let basis = MagicBasis::new(5).unwrap();
        let rho = basis.state(&NoiseParams::perfect()).unwrap();
        // v = (1,0,0,0): |Y_k⟩ is a W eigenstate.
        let out = apply_noisy_wk(&rho, 5, &ErrorVector::identity(), 0).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-12);
        // v = (0,1,0,0): full Y flip onto |Ȳ_k⟩⟨Ȳ_k|.
        let flip = ErrorVector([C_ZERO, C_ONE, C_ZERO, C_ZERO]);
        let out = apply_noisy_wk(&rho, 5, &flip, 0).unwrap();
        let ybar = ComplexMatrix::outer(basis.ket_ybar(), basis.ket_ybar());
        assert!(out.matrix().max_abs_diff(&ybar) < 1e-12);
    }

    #[test]
    fn noisy_wk_preserves_hermiticity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let eps: f64 = rng.random_range(0.0..0.3);
            let bound = (eps - eps * eps).max(0.0).sqrt() * 0.9;
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let delta = c(bound * phase.cos(), bound * phase.sin());
            let params = NoiseParams::new(eps, delta).unwrap();
            let rho = magic_state(6, &params).unwrap();
            // Physical vector with d = c*.
            let v = wk_error_vector(&[
                NoiseParams::new(0.01, c(0.005, 0.002)).unwrap(),
                NoiseParams::new(0.02, c(0.0, -0.01)).unwrap(),
                NoiseParams::diagonal(0.005).unwrap(),
            ])
            .unwrap();
            let out = apply_noisy_wk(&rho, 6, &v, 0).unwrap();
            assert!(out.matrix().is_hermitian(1e-12));
        }
    }

    #[test]
    fn twirl_zeroes_offdiagonal_and_matches_matrix_average() {
        let p = NoiseParams::new(0.01, c(0.003, 0.001)).unwrap();
        let t = twirl_diag(&p);
        assert_eq!(t.eps(), 0.01);
        assert_eq!(t.delta(), C_ZERO);
        let z = twirl_diag(&NoiseParams::perfect());
        assert_eq!(z.eps(), 0.0);

        // Twirled state equals ½(ρ + W_3 ρ W_3).
        let basis = MagicBasis::new(3).unwrap();
        let rho = basis.state(&p).unwrap();
        let w = basis.w_matrix();
        let avg = rho
            .matrix()
            .add(&w.mul(rho.matrix()).mul(&w))
            .scale(c(0.5, 0.0));
        let twirled = basis.state(&t).unwrap();
        assert!(twirled.matrix().max_abs_diff(&avg) < 1e-12);
        let dist = trace_distance(twirled.matrix(), &avg);
        assert!(dist < 1e-12);
    }
}
