//! Dense complex linear algebra and exact density-matrix simulation for
//! systems of at most five qubits.
//!
//! Wire 0 is the most significant bit of a basis-state index, so index
//! `0b01_0` on three wires means wire 0 in |0⟩, wire 1 in |1⟩, wire 2 in |0⟩.
//! All values are immutable after construction and all operations are pure.

use num_complex::Complex64;
use std::f64::consts::TAU;
use std::str::FromStr;

use crate::error::Error;
use crate::noise::NoiseParams;
use crate::Result;

/// Tolerance for operator identities (unitarity, Hermiticity, projectors).
pub const IDENTITY_TOL: f64 = 1e-12;
/// Eigenvalue floor below which a matrix is considered non-positive.
pub const PSD_FLOOR: f64 = -1e-12;

/// Rotation angle θ_k = 2π/2^k of the |Y_k⟩ family.
pub fn theta_k(k: u32) -> f64 {
    TAU / 2f64.powi(k as i32)
}

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense square complex matrix with row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![C_ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = C_ONE;
        }
        m
    }

    /// Build from nested rows; panics if the rows are not square.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "matrix rows must be square");
            entries.extend_from_slice(row);
        }
        Self { dim, entries }
    }

    /// Outer product |u⟩⟨v| of two equal-length vectors.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        assert_eq!(u.len(), v.len());
        let dim = u.len();
        let mut m = Self::zeros(dim);
        for (i, &ui) in u.iter().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                m.entries[i * dim + j] = ui * vj.conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix product");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == C_ZERO {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += a * rhs.entries[k * n + j];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (o, r) in out.entries.iter_mut().zip(&rhs.entries) {
            *o += r;
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (o, r) in out.entries.iter_mut().zip(&rhs.entries) {
            *o -= r;
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for o in out.entries.iter_mut() {
            *o *= factor;
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        out
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.dim, rhs.dim);
        let dim = n * m;
        let mut out = Self::zeros(dim);
        for i in 0..n {
            for j in 0..n {
                let a = self.entries[i * n + j];
                if a == C_ZERO {
                    continue;
                }
                for p in 0..m {
                    for q in 0..m {
                        out.entries[(i * m + p) * dim + (j * m + q)] = a * rhs.entries[p * m + q];
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i]).sum()
    }

    /// Largest entry-wise absolute difference to `rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!(self.dim, rhs.dim);
        self.entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry-wise difference up to a global phase: the phase is fixed
    /// on the largest entry of `self`.
    pub fn max_abs_diff_up_to_phase(&self, rhs: &Self) -> f64 {
        let (mut best, mut idx) = (0.0, 0);
        for (i, e) in self.entries.iter().enumerate() {
            if e.norm() > best {
                best = e.norm();
                idx = i;
            }
        }
        if best == 0.0 {
            return self.max_abs_diff(rhs);
        }
        let raw = rhs.entries[idx] / self.entries[idx];
        if raw.norm() == 0.0 {
            return self.max_abs_diff(rhs);
        }
        let phase = raw / raw.norm();
        self.scale(phase).max_abs_diff(rhs)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.adjoint().mul(self).max_abs_diff(&Self::identity(self.dim)) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// Eigenvalues of a Hermitian matrix via cyclic complex Jacobi rotations,
    /// sorted in descending order.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let mut a = self.entries.clone();
        let scale: f64 = self
            .entries
            .iter()
            .map(|e| e.norm())
            .fold(0.0, f64::max)
            .max(1e-300);
        for _sweep in 0..200 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(a[p * n + q].norm());
                }
            }
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    let b = apq.norm();
                    if b <= 1e-18 * scale {
                        continue;
                    }
                    let app = a[p * n + p].re;
                    let aqq = a[q * n + q].re;
                    let phase = apq / b; // e^{i beta}
                    let tau = (app - aqq) / (2.0 * b);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // U has columns p,q: [[c, -s*phase],[s*conj(phase), c]].
                    // A <- U^dagger A U applied as column then row rotation.
                    for r in 0..n {
                        let arp = a[r * n + p];
                        let arq = a[r * n + q];
                        a[r * n + p] = arp * c + arq * s * phase.conj();
                        a[r * n + q] = arq * c - arp * s * phase;
                    }
                    for r in 0..n {
                        let apr = a[p * n + r];
                        let aqr = a[q * n + r];
                        a[p * n + r] = apr * c + aqr * s * phase;
                        a[q * n + r] = aqr * c - apr * s * phase.conj();
                    }
                }
            }
        }
        let mut eigs: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
        eigs.sort_by(|x, y| y.partial_cmp(x).unwrap());
        eigs
    }
}

/// Trace distance ½‖ρ − σ‖₁ between two density operators.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    0.5 * a
        .sub(b)
        .hermitian_eigenvalues()
        .iter()
        .map(|x| x.abs())
        .sum::<f64>()
}

/// The gate set used by the protocol: Cliffords plus the R_Y family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    H,
    S,
    Z,
    X,
    Y,
    /// Controlled-Y, control on wire 0.
    CY,
    /// Controlled-Z, control on wire 0.
    CZ,
    /// Controlled-SWAP (Fredkin), control on wire 0.
    CSwap,
    /// R_Y(θ) = exp(−iθY/2); the angle is supplied separately.
    Ry,
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::H => "H",
            Gate::S => "S",
            Gate::Z => "Z",
            Gate::X => "X",
            Gate::Y => "Y",
            Gate::CY => "CY",
            Gate::CZ => "CZ",
            Gate::CSwap => "CSWAP",
            Gate::Ry => "RY",
        }
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "H" => Ok(Gate::H),
            "S" => Ok(Gate::S),
            "Z" => Ok(Gate::Z),
            "X" => Ok(Gate::X),
            "Y" => Ok(Gate::Y),
            "CY" => Ok(Gate::CY),
            "CZ" => Ok(Gate::CZ),
            "CSWAP" => Ok(Gate::CSwap),
            "RY" => Ok(Gate::Ry),
            other => Err(Error::UnknownGate(other.to_string())),
        }
    }
}

/// Exact unitary for a named gate. `theta` must be supplied iff the gate is
/// `Ry`.
pub fn standard_gate(gate: Gate, theta: Option<f64>) -> Result<ComplexMatrix> {
    if gate == Gate::Ry {
        let theta = theta.ok_or(Error::MissingTheta("RY"))?;
        return Ok(ry(theta));
    }
    if theta.is_some() {
        return Err(Error::UnexpectedTheta(gate.name()));
    }
    let c = Complex64::new;
    let m = match gate {
        Gate::H => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            ComplexMatrix::from_rows(&[vec![c(h, 0.0), c(h, 0.0)], vec![c(h, 0.0), c(-h, 0.0)]])
        }
        Gate::S => ComplexMatrix::from_rows(&[vec![C_ONE, C_ZERO], vec![C_ZERO, c(0.0, 1.0)]]),
        Gate::Z => ComplexMatrix::from_rows(&[vec![C_ONE, C_ZERO], vec![C_ZERO, c(-1.0, 0.0)]]),
        Gate::X => ComplexMatrix::from_rows(&[vec![C_ZERO, C_ONE], vec![C_ONE, C_ZERO]]),
        Gate::Y => {
            ComplexMatrix::from_rows(&[vec![C_ZERO, c(0.0, -1.0)], vec![c(0.0, 1.0), C_ZERO]])
        }
        Gate::CY => controlled(&standard_gate(Gate::Y, None)?),
        Gate::CZ => controlled(&standard_gate(Gate::Z, None)?),
        Gate::CSwap => {
            let mut swap = ComplexMatrix::zeros(4);
            swap.set(0, 0, C_ONE);
            swap.set(1, 2, C_ONE);
            swap.set(2, 1, C_ONE);
            swap.set(3, 3, C_ONE);
            controlled(&swap)
        }
        Gate::Ry => unreachable!(),
    };
    Ok(m)
}

/// R_Y(θ) = exp(−iθY/2) as a real rotation matrix.
pub fn ry(theta: f64) -> ComplexMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    ComplexMatrix::from_rows(&[
        vec![Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        vec![Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ])
}

/// Controlled version of `u` with the control as the new most significant
/// wire.
pub fn controlled(u: &ComplexMatrix) -> ComplexMatrix {
    let d = u.dim();
    let mut out = ComplexMatrix::identity(2 * d);
    for i in 0..d {
        for j in 0..d {
            out.set(d + i, d + j, u.get(i, j));
        }
    }
    for i in 0..d {
        out.set(d + i, d + i, u.get(i, i));
    }
    out
}

/// Unnormalized Hermitian positive semidefinite operator on ≤ 5 qubits.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    nqubits: usize,
    mat: ComplexMatrix,
    normalized: bool,
}

impl DensityMatrix {
    /// |ψ⟩⟨ψ| from an amplitude vector whose length is a power of two.
    pub fn from_ket(ket: &[Complex64]) -> Result<Self> {
        let dim = ket.len();
        let nqubits = dim.trailing_zeros() as usize;
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::TooFewQubits(0));
        }
        if nqubits > 5 {
            return Err(Error::TooManyQubits(nqubits));
        }
        let norm_sq: f64 = ket.iter().map(|a| a.norm_sqr()).sum();
        Ok(Self {
            nqubits,
            mat: ComplexMatrix::outer(ket, ket),
            normalized: (norm_sq - 1.0).abs() <= IDENTITY_TOL,
        })
    }

    /// Computational basis state |index⟩⟨index| on `nqubits` wires.
    pub fn basis_state(nqubits: usize, index: usize) -> Result<Self> {
        let mut ket = vec![C_ZERO; 1 << nqubits];
        ket[index] = C_ONE;
        Self::from_ket(&ket)
    }

    /// |+⟩⟨+| on a single wire.
    pub fn plus() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::from_ket(&[h, h]).unwrap()
    }

    pub fn from_matrix(nqubits: usize, mat: ComplexMatrix, normalized: bool) -> Result<Self> {
        if nqubits > 5 {
            return Err(Error::TooManyQubits(nqubits));
        }
        assert_eq!(mat.dim(), 1 << nqubits);
        Ok(Self {
            nqubits,
            mat,
            normalized,
        })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn dim(&self) -> usize {
        1 << self.nqubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let nqubits = self.nqubits + other.nqubits;
        if nqubits > 5 {
            return Err(Error::TooManyQubits(nqubits));
        }
        Ok(Self {
            nqubits,
            mat: self.mat.kron(&other.mat),
            normalized: self.normalized && other.normalized,
        })
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        let mut seen = [false; 5];
        for &t in targets {
            if t >= self.nqubits {
                return Err(Error::QubitOutOfRange {
                    index: t,
                    nqubits: self.nqubits,
                });
            }
            if seen[t] {
                return Err(Error::DuplicateTarget(t));
            }
            seen[t] = true;
        }
        Ok(())
    }

    /// Embed `op` on the listed wires (targets[0] becomes the operator's most
    /// significant wire) and return the full-register matrix.
    fn embed(&self, op: &ComplexMatrix, targets: &[usize]) -> Result<ComplexMatrix> {
        self.check_targets(targets)?;
        let t = targets.len();
        if op.dim() != 1 << t {
            return Err(Error::DimensionMismatch {
                got: op.dim(),
                targets: t,
            });
        }
        let n = self.nqubits;
        let dim = 1 << n;
        let mut full = ComplexMatrix::zeros(dim);
        // Wire w occupies bit (n-1-w) of a basis index.
        let bit_of = |wire: usize| n - 1 - wire;
        for row in 0..dim {
            // Sub-index of the target wires for this row.
            let mut urow = 0usize;
            for (pos, &w) in targets.iter().enumerate() {
                if row >> bit_of(w) & 1 == 1 {
                    urow |= 1 << (t - 1 - pos);
                }
            }
            let rest = row & !targets.iter().fold(0, |m, &w| m | (1 << bit_of(w)));
            for ucol in 0..(1 << t) {
                let v = op.get(urow, ucol);
                if v == C_ZERO {
                    continue;
                }
                let mut col = rest;
                for (pos, &w) in targets.iter().enumerate() {
                    if ucol >> (t - 1 - pos) & 1 == 1 {
                        col |= 1 << bit_of(w);
                    }
                }
                full.set(row, col, v);
            }
        }
        Ok(full)
    }

    /// Embed `op` on the listed wires and return the full-register matrix.
    pub fn embed_operator(&self, op: &ComplexMatrix, targets: &[usize]) -> Result<ComplexMatrix> {
        self.embed(op, targets)
    }

    /// (1 ⊗ U) ρ (1 ⊗ U)† with `u` placed on `targets`.
    pub fn embed_apply(&self, u: &ComplexMatrix, targets: &[usize]) -> Result<Self> {
        let full = self.embed(u, targets)?;
        Ok(Self {
            nqubits: self.nqubits,
            mat: full.mul(&self.mat).mul(&full.adjoint()),
            normalized: self.normalized,
        })
    }

    /// P ρ P for an idempotent Hermitian `p`; returns the unnormalized state
    /// and its trace.
    pub fn project(&self, p: &ComplexMatrix, targets: &[usize]) -> Result<(Self, f64)> {
        let dev = p
            .mul(p)
            .max_abs_diff(p)
            .max(p.max_abs_diff(&p.adjoint()));
        if dev > IDENTITY_TOL {
            return Err(Error::NotAProjector(dev));
        }
        let full = self.embed(p, targets)?;
        let mat = full.mul(&self.mat).mul(&full);
        let prob = mat.trace().re;
        Ok((
            Self {
                nqubits: self.nqubits,
                mat,
                normalized: false,
            },
            prob,
        ))
    }

    /// Partial trace keeping the listed wires, in the given order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyKeep);
        }
        self.check_targets(keep)?;
        let n = self.nqubits;
        let bit_of = |wire: usize| n - 1 - wire;
        let traced: Vec<usize> = (0..n).filter(|w| !keep.contains(w)).collect();
        let kd = 1 << keep.len();
        let td = 1usize << traced.len();
        let mut out = ComplexMatrix::zeros(kd);
        for i in 0..kd {
            for j in 0..kd {
                let mut acc = C_ZERO;
                for t in 0..td {
                    let mut row = 0usize;
                    let mut col = 0usize;
                    for (pos, &w) in keep.iter().enumerate() {
                        let b = 1 << bit_of(w);
                        if i >> (keep.len() - 1 - pos) & 1 == 1 {
                            row |= b;
                        }
                        if j >> (keep.len() - 1 - pos) & 1 == 1 {
                            col |= b;
                        }
                    }
                    for (pos, &w) in traced.iter().enumerate() {
                        if t >> pos & 1 == 1 {
                            let b = 1 << bit_of(w);
                            row |= b;
                            col |= b;
                        }
                    }
                    acc += self.mat.get(row, col);
                }
                out.set(i, j, acc);
            }
        }
        Ok(Self {
            nqubits: keep.len(),
            mat: out,
            normalized: self.normalized,
        })
    }

    /// Divide by the trace; errors when the trace is numerically zero.
    pub fn normalize(&self) -> Result<Self> {
        let tr = self.trace();
        if tr.abs() < 1e-300 {
            return Err(Error::ZeroProbability(tr));
        }
        Ok(Self {
            nqubits: self.nqubits,
            mat: self.mat.scale(Complex64::new(1.0 / tr, 0.0)),
            normalized: true,
        })
    }

    /// ρ → (1−γ)ρ + γ Y ρ Y on one wire.
    pub fn apply_y_channel(&self, gamma: f64, wire: usize) -> Result<Self> {
        let y = standard_gate(Gate::Y, None)?;
        let flipped = self.embed_apply(&y, &[wire])?;
        Ok(Self {
            nqubits: self.nqubits,
            mat: self
                .mat
                .scale(Complex64::new(1.0 - gamma, 0.0))
                .add(&flipped.mat.scale(Complex64::new(gamma, 0.0))),
            normalized: self.normalized,
        })
    }

    /// Check Hermiticity, the PSD eigenvalue floor, and trace bounds.
    pub fn validate(&self) -> Result<()> {
        assert!(
            self.mat.is_hermitian(IDENTITY_TOL),
            "density matrix not Hermitian"
        );
        let eigs = self.mat.hermitian_eigenvalues();
        assert!(
            eigs.iter().all(|&e| e >= PSD_FLOOR),
            "negative eigenvalue {:?}",
            eigs.last()
        );
        let tr = self.trace();
        if self.normalized {
            assert!((tr - 1.0).abs() <= 1e-12, "normalized trace = {tr}");
        } else {
            assert!((-IDENTITY_TOL..=1.0 + IDENTITY_TOL).contains(&tr));
        }
        Ok(())
    }
}

/// Orthonormal single-qubit basis {|Y_k⟩, |Ȳ_k⟩} for one member of the magic
/// family.
///
/// The phase convention keeps both kets real, so |Ȳ_k⟩ = i·Y|Y_k⟩; this makes
/// the off-diagonal noise parameter of |0⟩⟨0| real and positive.
#[derive(Debug, Clone)]
pub struct MagicBasis {
    k: u32,
    ket_y: [Complex64; 2],
    ket_ybar: [Complex64; 2],
}

impl MagicBasis {
    pub fn new(k: u32) -> Result<Self> {
        if !(3..=89).contains(&k) {
            return Err(Error::KOutOfRange(k));
        }
        let half = theta_k(k) / 2.0;
        let (s, c) = half.sin_cos();
        Ok(Self {
            k,
            ket_y: [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
            ket_ybar: [Complex64::new(s, 0.0), Complex64::new(-c, 0.0)],
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn theta(&self) -> f64 {
        theta_k(self.k)
    }

    pub fn ket_y(&self) -> &[Complex64; 2] {
        &self.ket_y
    }

    pub fn ket_ybar(&self) -> &[Complex64; 2] {
        &self.ket_ybar
    }

    /// Phase flip operator W_k = |Y_k⟩⟨Y_k| − |Ȳ_k⟩⟨Ȳ_k| = R_Y(θ_{k−1})·Z.
    pub fn w_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.ket_y, &self.ket_y)
            .sub(&ComplexMatrix::outer(&self.ket_ybar, &self.ket_ybar))
    }

    /// Even-parity projector (1 + W_k ⊗ W_k)/2 on two qubits.
    pub fn even_parity_projector(&self) -> ComplexMatrix {
        let w = self.w_matrix();
        ComplexMatrix::identity(4)
            .add(&w.kron(&w))
            .scale(Complex64::new(0.5, 0.0))
    }

    /// Noisy magic state of Eq-style form [[1−ε, Δ],[Δ*, ε]] in this basis,
    /// expressed in the computational basis.
    pub fn state(&self, params: &NoiseParams) -> Result<DensityMatrix> {
        params.validate()?;
        let eps = Complex64::new(params.eps(), 0.0);
        let delta = params.delta();
        let yy = ComplexMatrix::outer(&self.ket_y, &self.ket_y);
        let bb = ComplexMatrix::outer(&self.ket_ybar, &self.ket_ybar);
        let yb = ComplexMatrix::outer(&self.ket_y, &self.ket_ybar);
        let by = ComplexMatrix::outer(&self.ket_ybar, &self.ket_y);
        let mat = yy
            .scale(C_ONE - eps)
            .add(&bb.scale(eps))
            .add(&yb.scale(delta))
            .add(&by.scale(delta.conj()));
        DensityMatrix::from_matrix(1, mat, true)
    }

    /// Read (ε, Δ) back from a normalized single-qubit state.
    pub fn read_params(&self, rho: &DensityMatrix) -> Result<NoiseParams> {
        assert_eq!(rho.nqubits(), 1, "read_params expects a single qubit");
        let m = rho.matrix();
        let bra = |u: &[Complex64; 2], v: &[Complex64; 2]| -> Complex64 {
            let mut acc = C_ZERO;
            for i in 0..2 {
                for j in 0..2 {
                    acc += u[i].conj() * m.get(i, j) * v[j];
                }
            }
            acc
        };
        let eps = bra(&self.ket_ybar, &self.ket_ybar).re;
        let delta = bra(&self.ket_y, &self.ket_ybar);
        NoiseParams::new(eps.clamp(0.0, 0.5), delta)
    }
}

/// Convenience wrapper: noisy |Y_k⟩ state in the computational basis.
pub fn magic_state(k: u32, params: &NoiseParams) -> Result<DensityMatrix> {
    MagicBasis::new(k)?.state(params)
}
