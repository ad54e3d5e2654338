//! The exact distillation round, its full five-qubit oracle, and the
//! leading-order estimators.
//!
//! The reduced pipeline works on three wires ordered (control, data, data):
//! prepare |+⟩⟨+| ⊗ ρ_k ⊗ ρ_k, conjugate by the Fredkin gate, apply the
//! post-selected gadget map Γ, normalize against Pr¹, apply the noisy W̃_k to
//! the second data wire, repeat Fredkin + Γ for Pr², and finally project the
//! control on |+⟩ and keep one data wire. The oracle simulates the same round
//! with the gadgets expanded inside the four-qubit code on five wires.

use rand::Rng;

use crate::codes::{build_code, build_gamma, Encoder, StochasticPauliMap};
use crate::error::Error;
use crate::noise::{apply_noisy_wk, wk_error_vector, ErrorVector, NoiseParams};
use crate::qsim::{
    controlled, magic_state, ry, standard_gate, theta_k, ComplexMatrix, DensityMatrix, Gate,
    MagicBasis,
};
use crate::Result;

/// Result of one distillation round.
#[derive(Debug, Clone)]
pub struct DistillationOutcome {
    pub out_params: NoiseParams,
    pub pr1: f64,
    pub pr2: f64,
    pub pr_out: f64,
    /// Normalized single-qubit output state.
    pub state: DensityMatrix,
}

fn check_round_inputs(k: u32, input: &NoiseParams, gamma: f64) -> Result<()> {
    if !(3..=89).contains(&k) {
        return Err(Error::KOutOfRange(k));
    }
    input.validate()?;
    if !(0.0..=0.5).contains(&gamma) {
        return Err(Error::GammaOutOfRange(gamma));
    }
    Ok(())
}

/// W̃_k error vector for the round: identity at k = 3 (W_3 = H is Clifford),
/// otherwise the cascade vector over resources j = 3..k.
fn wk_vector_for(k: u32, wk_resources: &[NoiseParams]) -> Result<ErrorVector> {
    if k == 3 {
        if !wk_resources.is_empty() {
            return Err(Error::WrongResourceCount {
                k,
                got: wk_resources.len(),
            });
        }
        return Ok(ErrorVector::identity());
    }
    if wk_resources.len() != (k - 3) as usize {
        return Err(Error::WrongResourceCount {
            k,
            got: wk_resources.len(),
        });
    }
    wk_error_vector(wk_resources)
}

fn plus_projector() -> ComplexMatrix {
    DensityMatrix::plus().matrix().clone()
}

fn finish_round(
    rho: DensityMatrix,
    k: u32,
    pr1: f64,
    pr2: f64,
    output_wire: usize,
) -> Result<DistillationOutcome> {
    let (projected, _) = rho.project(&plus_projector(), &[0])?;
    let out = projected.partial_trace(&[output_wire])?;
    let pr_out = out.trace();
    if pr_out <= 0.0 {
        return Err(Error::ZeroProbability(pr_out));
    }
    let state = out.normalize()?;
    let out_params = MagicBasis::new(k)?.read_params(&state)?;
    Ok(DistillationOutcome {
        out_params,
        pr1,
        pr2,
        pr_out,
        state,
    })
}

/// Exact distillation round on the reduced three-wire register.
pub fn distill_round_exact(
    k: u32,
    input: &NoiseParams,
    gamma: f64,
    wk_resources: &[NoiseParams],
) -> Result<DistillationOutcome> {
    check_round_inputs(k, input, gamma)?;
    let v = wk_vector_for(k, wk_resources)?;
    let gadget = build_gamma(gamma, &build_code(1)?)?;
    distill_round_reduced_with(k, input, &gadget, &v)
}

/// Reduced round with a prebuilt gadget map; shared by the schedule builder.
pub(crate) fn distill_round_reduced_with(
    k: u32,
    input: &NoiseParams,
    gadget: &StochasticPauliMap,
    v: &ErrorVector,
) -> Result<DistillationOutcome> {
    let rho_k = magic_state(k, input)?;
    let cswap = standard_gate(Gate::CSwap, None)?;
    let mut rho = DensityMatrix::plus().tensor(&rho_k)?.tensor(&rho_k)?;
    rho = rho.embed_apply(&cswap, &[0, 1, 2])?;
    rho = gadget.apply(&rho)?;
    let pr1 = rho.trace();
    if pr1 <= 0.0 {
        return Err(Error::ZeroProbability(pr1));
    }
    rho = rho.normalize()?;
    rho = apply_noisy_wk(&rho, k, v, 2)?;
    rho = rho.embed_apply(&cswap, &[0, 1, 2])?;
    rho = gadget.apply(&rho)?;
    let pr2 = rho.trace();
    if pr2 <= 0.0 {
        return Err(Error::ZeroProbability(pr2));
    }
    rho = rho.normalize()?;
    finish_round(rho, k, pr1, pr2, 2)
}

/// One controlled-SWAP gadget expanded in the four-qubit code: encode, noisy
/// rotation layer, controlled Z^⊗4, noisy rotation layer, decode, and
/// post-selection of the trivial syndrome on the two ancilla wires.
fn oracle_gadget(
    rho: &DensityMatrix,
    enc_mat: &ComplexMatrix,
    gamma: f64,
    swap_sign: f64,
) -> Result<DensityMatrix> {
    let mut rho = rho.embed_apply(enc_mat, &[1, 2, 3, 4])?;
    let r3_dag = ry(-theta_k(3));
    for wire in 1..=4 {
        rho = rho.embed_apply(&r3_dag, &[wire])?;
        rho = rho.apply_y_channel(gamma, wire)?;
    }
    let z = standard_gate(Gate::Z, None)?;
    let z4 = controlled(&z.kron(&z).kron(&z).kron(&z));
    rho = rho.embed_apply(&z4, &[0, 1, 2, 3, 4])?;
    let r3 = ry(theta_k(3));
    for wire in 1..=4 {
        rho = rho.embed_apply(&r3, &[wire])?;
        rho = rho.apply_y_channel(gamma, wire)?;
    }
    rho = rho.embed_apply(&enc_mat.adjoint(), &[1, 2, 3, 4])?;
    if swap_sign < 0.0 {
        rho = rho.embed_apply(&z, &[0])?;
    }
    let one = num_complex::Complex64::new(1.0, 0.0);
    let zero_c = num_complex::Complex64::new(0.0, 0.0);
    let zero = ComplexMatrix::outer(&[one, zero_c], &[one, zero_c]);
    let (rho, _) = rho.project(&zero, &[1])?;
    let (rho, _) = rho.project(&zero, &[2])?;
    Ok(rho)
}

/// Full five-qubit oracle for the distillation round: explicit encoder, eight
/// noisy rotations per gadget, decoder, and syndrome post-selection. Same
/// contract as [`distill_round_exact`].
pub fn distill_round_oracle(
    k: u32,
    input: &NoiseParams,
    gamma: f64,
    wk_resources: &[NoiseParams],
) -> Result<DistillationOutcome> {
    check_round_inputs(k, input, gamma)?;
    let v = wk_vector_for(k, wk_resources)?;
    let enc = Encoder::new();
    let enc_mat = enc.matrix();
    let sign = enc.logical_swap_sign();
    let rho_k = magic_state(k, input)?;
    let zero = DensityMatrix::basis_state(1, 0)?;
    let mut rho = DensityMatrix::plus()
        .tensor(&zero)?
        .tensor(&zero)?
        .tensor(&rho_k)?
        .tensor(&rho_k)?;
    rho = oracle_gadget(&rho, &enc_mat, gamma, sign)?;
    let pr1 = rho.trace();
    if pr1 <= 0.0 {
        return Err(Error::ZeroProbability(pr1));
    }
    rho = rho.normalize()?;
    rho = apply_noisy_wk(&rho, k, &v, 4)?;
    rho = oracle_gadget(&rho, &enc_mat, gamma, sign)?;
    let pr2 = rho.trace();
    if pr2 <= 0.0 {
        return Err(Error::ZeroProbability(pr2));
    }
    rho = rho.normalize()?;
    finish_round(rho, k, pr1, pr2, 4)
}

/// Leading-order expansion of the round's output error.
///
/// The printed form is ε_k² + 2·C(8,2)·ε_3² + ε_{k−1} + ½ε_{k−2} + … +
/// ε_3/2^{k−4}: the gadget coefficient counts undetected fault pairs over
/// both controlled-SWAP gadgets and the cascade coefficients halve per level.
#[derive(Debug, Clone)]
pub struct LeadingOrderModel {
    k: u32,
}

impl LeadingOrderModel {
    pub fn new(k: u32) -> Result<Self> {
        if !(3..=89).contains(&k) {
            return Err(Error::KOutOfRange(k));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// (α, β) of the gadget term α·ε_3^β.
    pub fn gadget_term(&self) -> (f64, u32) {
        (56.0, 2)
    }

    /// (j, α_j) of the linear W-cascade terms α_j·ε_j for j = 3..k.
    pub fn cascade_terms(&self) -> Vec<(u32, f64)> {
        (3..self.k)
            .map(|j| (j, 1.0 / 2f64.powi((self.k - 1 - j) as i32)))
            .collect()
    }

    /// Evaluate the expansion; `eps_resource(j)` supplies the resource error
    /// for level j (used for both the gadget term and the cascade).
    pub fn estimate(&self, eps_resource: impl Fn(u32) -> f64, eps_k: f64) -> f64 {
        let (alpha, beta) = self.gadget_term();
        let mut total = eps_k * eps_k + alpha * eps_resource(3).powi(beta as i32);
        for (j, coeff) in self.cascade_terms() {
            total += coeff * eps_resource(j);
        }
        total
    }
}

/// Leading-order estimate with resources given as a slice for j = 3..k
/// (empty for k = 3; missing levels count as perfect).
pub fn leading_order_estimate(k: u32, eps_resources: &[f64], eps_k: f64) -> Result<f64> {
    let model = LeadingOrderModel::new(k)?;
    if k > 3 && eps_resources.len() != (k - 3) as usize {
        return Err(Error::WrongResourceCount {
            k,
            got: eps_resources.len(),
        });
    }
    let lookup = |j: u32| -> f64 { eps_resources.get((j - 3) as usize).copied().unwrap_or(0.0) };
    Ok(model.estimate(lookup, eps_k))
}

/// Leading-order repeat count r̄ = 1 + 16ε_3 + 2ε_k and expected resource
/// consumption N_j^k = [2^{j−k+1} + 16δ_{j,3}]·r̄ per distillation round.
pub fn expected_repeats_and_consumption(
    k: u32,
    j: u32,
    eps3: f64,
    epsk: f64,
) -> Result<(f64, f64)> {
    if !(3..k).contains(&j) {
        return Err(Error::ConsumptionIndex { j, k });
    }
    let rbar = 1.0 + 16.0 * eps3 + 2.0 * epsk;
    let base = 2f64.powi(j as i32 - k as i32 + 1) + if j == 3 { 16.0 } else { 0.0 };
    Ok((rbar, base * rbar))
}

/// Sample the first-order repeat model: every fault among the sixteen gadget
/// injections and the two inputs costs one extra repetition, so the mean is
/// r̄ exactly.
pub fn sample_repeats<R: Rng>(eps3: f64, epsk: f64, rng: &mut R) -> u32 {
    let mut repeats = 1u32;
    for _ in 0..16 {
        if rng.random_bool(eps3) {
            repeats += 1;
        }
    }
    for _ in 0..2 {
        if rng.random_bool(epsk) {
            repeats += 1;
        }
    }
    repeats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::trace_distance;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn resources_for(k: u32, p: NoiseParams) -> Vec<NoiseParams> {
        if k <= 3 {
            Vec::new()
        } else {
            vec![p; (k - 3) as usize]
        }
    }

    #[test]
    fn perfect_inputs_give_perfect_output() {
        for k in [3u32, 4, 6] {
            let out = distill_round_exact(
                k,
                &NoiseParams::perfect(),
                0.0,
                &resources_for(k, NoiseParams::perfect()),
            )
            .unwrap();
            assert!((out.pr1 - 1.0).abs() < 1e-12, "k={k}");
            assert!((out.pr2 - 1.0).abs() < 1e-12);
            assert!((out.pr_out - 1.0).abs() < 1e-12);
            assert!(out.out_params.eps() < 1e-12);
            assert!(out.out_params.delta().norm() < 1e-12);
        }
    }

    #[test]
    fn ideal_parity_projection_statistics() {
        // ε = 0.01, Δ = 0, γ = 0, perfect W: success probability 1−2ε+2ε²
        // and ε' = ε²/(1−2ε+2ε²).
        let eps = 0.01;
        let input = NoiseParams::diagonal(eps).unwrap();
        for k in [3u32, 4, 8] {
            let out =
                distill_round_exact(k, &input, 0.0, &resources_for(k, NoiseParams::perfect()))
                    .unwrap();
            let denom = 1.0 - 2.0 * eps + 2.0 * eps * eps;
            assert!((out.pr1 - 1.0).abs() < 1e-12);
            assert!((out.pr2 - 1.0).abs() < 1e-12);
            assert!((out.pr_out - denom).abs() < 1e-12, "k={k}");
            assert!((out.pr_out - 0.9802).abs() < 1e-12);
            assert!((out.out_params.eps() - eps * eps / denom).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_suppression_across_eps_range() {
        for i in 0..=10 {
            let eps = 0.01 * i as f64;
            let input = NoiseParams::diagonal(eps).unwrap();
            let out = distill_round_exact(4, &input, 0.0, &[NoiseParams::perfect()]).unwrap();
            let denom = 1.0 - 2.0 * eps + 2.0 * eps * eps;
            assert!(
                (out.out_params.eps() - eps * eps / denom).abs() < 1e-12,
                "eps={eps}"
            );
        }
    }

    #[test]
    fn monotone_improvement_region() {
        for &eps in &[1e-3, 5e-3, 1e-2] {
            for &gamma in &[0.0, 1e-4, 1e-3] {
                let input = NoiseParams::diagonal(eps).unwrap();
                let out = distill_round_exact(
                    5,
                    &input,
                    gamma,
                    &resources_for(5, NoiseParams::perfect()),
                )
                .unwrap();
                assert!(
                    out.out_params.eps() < eps,
                    "eps={eps} gamma={gamma} -> {}",
                    out.out_params.eps()
                );
            }
        }
    }

    #[test]
    fn output_is_physical_for_mixed_inputs() {
        let input = NoiseParams::new(0.05, Complex64::new(0.1, -0.05)).unwrap();
        let res = NoiseParams::new(0.01, Complex64::new(0.0, 0.03)).unwrap();
        let out = distill_round_exact(5, &input, 0.02, &resources_for(5, res)).unwrap();
        out.state.validate().unwrap();
        out.out_params.validate().unwrap();
        assert!(out.pr1 > 0.0 && out.pr1 <= 1.0 + 1e-12);
        assert!(out.pr2 > 0.0 && out.pr2 <= 1.0 + 1e-12);
        assert!(out.pr_out > 0.0 && out.pr_out <= 1.0 + 1e-12);
    }

    #[test]
    fn oracle_matches_reduced_pipeline_on_grid() {
        let gammas = [0.0, 1e-3, 1e-2];
        let epses = [0.0, 1e-3, 1e-2];
        for &gamma in &gammas {
            for &eps in &epses {
                for k in [3u32, 4, 6] {
                    let input = NoiseParams::diagonal(eps).unwrap();
                    let res = resources_for(k, NoiseParams::diagonal(eps).unwrap());
                    let exact = distill_round_exact(k, &input, gamma, &res).unwrap();
                    let oracle = distill_round_oracle(k, &input, gamma, &res).unwrap();
                    let dist = trace_distance(exact.state.matrix(), oracle.state.matrix());
                    assert!(
                        dist <= 1e-10,
                        "k={k} eps={eps} gamma={gamma}: trace distance {dist}"
                    );
                    assert!((exact.pr1 - oracle.pr1).abs() < 1e-10);
                    assert!((exact.pr2 - oracle.pr2).abs() < 1e-10);
                    assert!((exact.pr_out - oracle.pr_out).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn oracle_matches_reduced_pipeline_with_offdiagonal_noise() {
        let input = NoiseParams::new(0.02, Complex64::new(0.05, 0.03)).unwrap();
        let res = NoiseParams::new(0.01, Complex64::new(-0.02, 0.01)).unwrap();
        for k in [4u32, 5] {
            let exact = distill_round_exact(k, &input, 0.05, &resources_for(k, res)).unwrap();
            let oracle = distill_round_oracle(k, &input, 0.05, &resources_for(k, res)).unwrap();
            let dist = trace_distance(exact.state.matrix(), oracle.state.matrix());
            assert!(dist <= 1e-10, "k={k}: {dist}");
        }
    }

    #[test]
    fn gamma_sandwich_equivalence_at_high_noise() {
        // γ = 0.1 with the Clifford W_3 isolates the gadget reduction itself.
        for &gamma in &[0.0, 1e-3, 1e-2, 0.1] {
            let input = NoiseParams::diagonal(5e-3).unwrap();
            let exact = distill_round_exact(3, &input, gamma, &[]).unwrap();
            let oracle = distill_round_oracle(3, &input, gamma, &[]).unwrap();
            let dist = trace_distance(exact.state.matrix(), oracle.state.matrix());
            assert!(dist <= 1e-10, "gamma={gamma}: {dist}");
            assert!((exact.pr1 - oracle.pr1).abs() < 1e-10);
        }
    }

    #[test]
    fn gadget_noise_coefficient_is_stable() {
        // With perfect inputs and perfect W the output error is a quadratic
        // form in γ; the coefficient must converge as γ → 0 and stay within
        // the pair-counting bound 2·C(8,2) = 56.
        let mut ratios = Vec::new();
        for &gamma in &[1e-2, 1e-3, 1e-4] {
            let out =
                distill_round_exact(4, &NoiseParams::perfect(), gamma, &[NoiseParams::perfect()])
                    .unwrap();
            ratios.push(out.out_params.eps() / (gamma * gamma));
        }
        assert!((ratios[1] - ratios[2]).abs() < 0.5);
        assert!(ratios[2] > 4.0 && ratios[2] <= 56.0, "ratio {}", ratios[2]);
    }

    #[test]
    fn leading_order_estimate_examples() {
        assert_eq!(leading_order_estimate(5, &[0.0, 0.0], 0.0).unwrap(), 0.0);
        let v = leading_order_estimate(6, &[0.0, 0.0, 0.0], 0.01).unwrap();
        assert!((v - 1e-4).abs() < 1e-18);
        // k = 5 with ε_3 = ε_4 = 1e-4, ε_5 = 0.01.
        let v = leading_order_estimate(5, &[1e-4, 1e-4], 0.01).unwrap();
        let expect = 1e-4 + 56.0 * 1e-8 + 1e-4 + 0.5 * 1e-4;
        assert!((v - expect).abs() < 1e-15);
    }

    #[test]
    fn exact_pipeline_asymptotic_coefficients() {
        // Frozen from the five-qubit oracle: the exact round's expansion is
        //   ε_out = ε_k² + 16γ² + ¼·Σ_j ε_j/2^{k−1−j} + O(s³),
        // i.e. the printed counting bound (56γ², unit cascade transfer)
        // overestimates the gadget term by 3.5× and the cascade by 4×.
        for &g in &[1e-4, 1e-5] {
            let out =
                distill_round_exact(4, &NoiseParams::perfect(), g, &[NoiseParams::perfect()])
                    .unwrap();
            assert!(
                (out.out_params.eps() / (g * g) - 16.0).abs() < 40.0 * g,
                "gadget coefficient at γ={g}: {}",
                out.out_params.eps() / (g * g)
            );
        }
        for k in [4u32, 5, 6] {
            for jidx in 0..(k - 3) as usize {
                let s = 1e-5;
                let mut res = vec![NoiseParams::perfect(); (k - 3) as usize];
                res[jidx] = NoiseParams::diagonal(s).unwrap();
                let out = distill_round_exact(k, &NoiseParams::perfect(), 0.0, &res).unwrap();
                let j = jidx as u32 + 3;
                let transfer = 0.25 * 0.5f64.powi((k - 1 - j) as i32);
                assert!(
                    (out.out_params.eps() / s - transfer).abs() < 10.0 * s,
                    "cascade transfer k={k} j={j}: {}",
                    out.out_params.eps() / s
                );
            }
        }
    }

    #[test]
    fn deviation_from_true_expansion_shrinks_with_strength() {
        // Against the engine-derived coefficients the relative deviation
        // falls one decade per decade of input strength.
        let true_expansion = |s: f64| -> f64 {
            let cascade: f64 = LeadingOrderModel::new(5)
                .unwrap()
                .cascade_terms()
                .iter()
                .map(|(_, c)| 0.25 * c * s)
                .sum();
            s * s + 16.0 * s * s + cascade
        };
        let mut devs = Vec::new();
        for &s in &[1e-3, 1e-4, 1e-5] {
            let input = NoiseParams::diagonal(s).unwrap();
            let res = vec![NoiseParams::diagonal(s).unwrap(); 2];
            let out = distill_round_exact(5, &input, s, &res).unwrap();
            devs.push((out.out_params.eps() - true_expansion(s)).abs() / true_expansion(s));
        }
        assert!(devs[0] < 0.05, "dev at 1e-3: {}", devs[0]);
        assert!(devs[1] < devs[0] / 5.0);
        assert!(devs[2] < devs[1] / 5.0);
    }

    #[test]
    fn repeats_and_consumption_formulas() {
        let (rbar, n) = expected_repeats_and_consumption(4, 3, 0.0, 0.0).unwrap();
        assert_eq!(rbar, 1.0);
        assert_eq!(n, 17.0);
        let (_, n) = expected_repeats_and_consumption(6, 5, 0.0, 0.0).unwrap();
        assert_eq!(n, 1.0);
        let (rbar, n) = expected_repeats_and_consumption(4, 3, 1e-3, 1e-2).unwrap();
        assert!((rbar - 1.036).abs() < 1e-15);
        assert!((n - 17.0 * 1.036).abs() < 1e-12);
        assert!(expected_repeats_and_consumption(4, 4, 0.0, 0.0).is_err());
        assert!(expected_repeats_and_consumption(4, 2, 0.0, 0.0).is_err());
    }

    #[test]
    fn sampled_repeats_match_leading_order_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(991);
        let (eps3, epsk) = (1e-2, 1e-2);
        let trials = 100_000u32;
        let mut sum = 0u64;
        let mut sum_sq = 0f64;
        for _ in 0..trials {
            let r = sample_repeats(eps3, epsk, &mut rng) as u64;
            sum += r;
            sum_sq += (r * r) as f64;
        }
        let mean = sum as f64 / trials as f64;
        let var = sum_sq / trials as f64 - mean * mean;
        let sigma = (var / trials as f64).sqrt();
        let expect = 1.0 + 16.0 * eps3 + 2.0 * epsk;
        assert!(
            (mean - expect).abs() < 3.0 * sigma,
            "mean {mean} vs {expect} (3σ = {})",
            3.0 * sigma
        );
    }

    #[test]
    fn invalid_round_arguments() {
        assert!(distill_round_exact(2, &NoiseParams::perfect(), 0.0, &[]).is_err());
        assert!(distill_round_exact(3, &NoiseParams::perfect(), 0.7, &[]).is_err());
        assert!(matches!(
            distill_round_exact(5, &NoiseParams::perfect(), 0.0, &[]),
            Err(Error::WrongResourceCount { .. })
        ));
        assert!(matches!(
            distill_round_exact(3, &NoiseParams::perfect(), 0.0, &[NoiseParams::perfect()]),
            Err(Error::WrongResourceCount { .. })
        ));
    }
}
