//! Named identity, oracle, and invariant checks behind `ydistill verify`.

use ydistill_core::codes::{build_code, transversal_h_action, Encoder};
use ydistill_core::distill::{distill_round_exact, distill_round_oracle};
use ydistill_core::noise::{ErrorVector, NoiseParams};
use ydistill_core::qsim::{
    ry, standard_gate, theta_k, trace_distance, ComplexMatrix, Gate, MagicBasis, IDENTITY_TOL,
};
use ydistill_core::synth::{axis_rotation, euler_decompose};

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Run all checks; `inject_fault` perturbs the named check's inputs so the
/// failure path itself can be validated.
pub fn run_checks(inject_fault: Option<&str>) -> Vec<CheckResult> {
    let fault = |name: &str| inject_fault == Some(name);
    vec![
        gate_unitarity(fault("gate_unitarity")),
        wk_identity(fault("wk_identity")),
        lambda_h_identity(fault("lambda_h_identity")),
        encoded_swap(fault("encoded_swap")),
        gamma_vs_oracle(fault("gamma_vs_oracle")),
        quadratic_suppression(fault("quadratic_suppression")),
        evec_sum_multiplicativity(fault("evec_sum_multiplicativity")),
        euler_bounds(fault("euler_bounds")),
    ]
}

fn result(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed,
        detail,
    }
}

fn gate_unitarity(fault: bool) -> CheckResult {
    let mut worst: f64 = 0.0;
    for gate in [
        Gate::H,
        Gate::S,
        Gate::Z,
        Gate::X,
        Gate::Y,
        Gate::CY,
        Gate::CZ,
        Gate::CSwap,
    ] {
        let mut m = standard_gate(gate, None).unwrap();
        if fault && gate == Gate::H {
            m.set(0, 0, m.get(0, 0) + num_complex::Complex64::new(1e-6, 0.0));
        }
        let dev = m
            .adjoint()
            .mul(&m)
            .max_abs_diff(&ComplexMatrix::identity(m.dim()));
        worst = worst.max(dev);
    }
    result(
        "gate_unitarity",
        worst <= IDENTITY_TOL,
        format!("max |U†U − 1| = {worst:.3e}"),
    )
}

fn wk_identity(fault: bool) -> CheckResult {
    let z = standard_gate(Gate::Z, None).unwrap();
    let mut worst: f64 = 0.0;
    for k in 3..=30 {
        let basis = MagicBasis::new(k).unwrap();
        let angle = theta_k(k - 1) + if fault { 1e-6 } else { 0.0 };
        let dev = basis.w_matrix().max_abs_diff(&ry(angle).mul(&z));
        worst = worst.max(dev);
    }
    result(
        "wk_identity",
        worst <= IDENTITY_TOL,
        format!("max |W_k − R_Y(θ_(k−1))Z| = {worst:.3e} over k = 3..30"),
    )
}

fn lambda_h_identity(fault: bool) -> CheckResult {
    let h = standard_gate(Gate::H, None).unwrap();
    let lambda_h = ydistill_core::qsim::controlled(&h);
    let cz = standard_gate(Gate::CZ, None).unwrap();
    let angle = theta_k(3) + if fault { 1e-6 } else { 0.0 };
    let r = ry(angle);
    let rdag = ry(-theta_k(3));
    let id2 = ComplexMatrix::identity(2);
    let r_on_target = id2.kron(&r);
    let rdag_on_target = id2.kron(&rdag);
    let dev = r_on_target
        .mul(&cz)
        .mul(&rdag_on_target)
        .max_abs_diff(&lambda_h);
    result(
        "lambda_h_identity",
        dev <= IDENTITY_TOL,
        format!("|R_Y(θ_3)Λ(Z)R_Y(−θ_3) − Λ(H)| = {dev:.3e}"),
    )
}

fn encoded_swap(fault: bool) -> CheckResult {
    let enc = Encoder::new();
    let c = enc.matrix();
    let h = standard_gate(Gate::H, None).unwrap();
    let h4 = h.kron(&h).kron(&h).kron(&h);
    let d = c.adjoint().mul(&h4).mul(&c);
    let mut worst: f64 = 0.0;
    for a in 0..2usize {
        for b in 0..2usize {
            let col = (a << 1) | b;
            let row = (b << 1) | a;
            let expect = if fault && col == 1 { -1.0 } else { 1.0 };
            worst = worst.max((d.get(row, col) - num_complex::Complex64::new(expect, 0.0)).norm());
        }
    }
    let perm = transversal_h_action(&build_code(1).unwrap());
    let perm_ok = perm == vec![1, 0];
    result(
        "encoded_swap",
        worst <= IDENTITY_TOL && perm_ok,
        format!("C†H⊗4C swap deviation = {worst:.3e}, logical permutation {perm:?}"),
    )
}

fn gamma_vs_oracle(fault: bool) -> CheckResult {
    let mut worst: f64 = 0.0;
    for &(k, eps, gamma) in &[(3u32, 0.0, 1e-2), (4, 1e-2, 1e-2), (4, 1e-2, 0.0)] {
        let input = NoiseParams::diagonal(eps).unwrap();
        let res = vec![NoiseParams::diagonal(eps).unwrap(); (k - 3) as usize];
        let exact = distill_round_exact(k, &input, gamma, &res).unwrap();
        let oracle = distill_round_oracle(k, &input, gamma, &res).unwrap();
        let mut dist = trace_distance(exact.state.matrix(), oracle.state.matrix());
        if fault {
            dist += 1e-6;
        }
        worst = worst.max(dist);
    }
    result(
        "gamma_vs_oracle",
        worst <= 1e-10,
        format!("max trace distance reduced vs five-qubit = {worst:.3e}"),
    )
}

fn quadratic_suppression(fault: bool) -> CheckResult {
    let eps = 0.01;
    let input = NoiseParams::diagonal(eps).unwrap();
    let out = distill_round_exact(4, &input, 0.0, &[NoiseParams::perfect()]).unwrap();
    let denom = 1.0 - 2.0 * eps + 2.0 * eps * eps;
    let analytic = eps * eps / denom + if fault { 1e-9 } else { 0.0 };
    let dev = (out.out_params.eps() - analytic).abs();
    let prob_dev = (out.pr_out - denom).abs();
    result(
        "quadratic_suppression",
        dev <= 1e-12 && prob_dev <= 1e-12,
        format!(
            "measured ε'(0.01) = {:.6e} vs analytic {:.6e}; success probability {:.6}",
            out.out_params.eps(),
            analytic,
            out.pr_out
        ),
    )
}

fn evec_sum_multiplicativity(fault: bool) -> CheckResult {
    let a = ErrorVector([
        num_complex::Complex64::new(0.9, 0.02),
        num_complex::Complex64::new(0.1, -0.02),
        num_complex::Complex64::new(0.01, 0.03),
        num_complex::Complex64::new(0.01, -0.03),
    ]);
    let b = ErrorVector([
        num_complex::Complex64::new(0.7, 0.0),
        num_complex::Complex64::new(0.3, 0.0),
        num_complex::Complex64::new(0.0, 0.05),
        num_complex::Complex64::new(0.0, -0.05),
    ]);
    let lhs = a.product(&b).component_sum();
    let mut rhs = a.component_sum() * b.component_sum();
    if fault {
        rhs += num_complex::Complex64::new(1e-6, 0.0);
    }
    let dev = (lhs - rhs).norm();
    result(
        "evec_sum_multiplicativity",
        dev <= 1e-12,
        format!("|sum(A×B) − sum(A)sum(B)| = {dev:.3e}"),
    )
}

fn euler_bounds(fault: bool) -> CheckResult {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(424242);
    let mut worst_bound: f64 = 0.0;
    let mut worst_recon: f64 = 0.0;
    for _ in 0..10_000 {
        let theta: f64 = rng.random_range(0.0..std::f64::consts::PI / 8.0);
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = (1.0f64 - z * z).sqrt();
        let axis = [r * phi.cos(), r * phi.sin(), z];
        let e = euler_decompose(axis, theta).unwrap();
        let bound = 2.0 * theta + if fault { -1e-3 } else { 0.0 };
        for angle in e.as_array() {
            worst_bound = worst_bound.max(angle.abs() - bound);
        }
        let diff = e
            .matrix()
            .max_abs_diff_up_to_phase(&axis_rotation(axis, theta));
        worst_recon = worst_recon.max(diff);
    }
    result(
        "euler_bounds",
        worst_bound <= 1e-12 && worst_recon <= 1e-10,
        format!("max |angle| − 2θ = {worst_bound:.3e}, max reconstruction = {worst_recon:.3e}"),
    )
}
