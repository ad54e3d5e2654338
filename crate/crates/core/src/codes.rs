//! Symbolic Pauli algebra, the `[[4,2,2]]` and `[[2m+2,2m,2]]` error-detecting
//! codes, fault propagation through the controlled-SWAP gadget, and the
//! post-selected stochastic noise map Γ.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::Error;
use crate::qsim::{standard_gate, ComplexMatrix, DensityMatrix, Gate};
use crate::Result;

/// Signed n-qubit Pauli word in the symplectic bit representation.
///
/// The operator is i^phase · Π_j X_j^{x_j} Z_j^{z_j} with site j stored in
/// bit j of the masks. A site with both bits set prints as Y (= i·X·Z).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PauliString {
    nqubits: usize,
    x: u64,
    z: u64,
    phase: u8,
}

impl PauliString {
    pub fn identity(nqubits: usize) -> Self {
        Self {
            nqubits,
            x: 0,
            z: 0,
            phase: 0,
        }
    }

    pub fn from_masks(nqubits: usize, x: u64, z: u64, phase: u8) -> Self {
        debug_assert!(nqubits <= 64);
        Self {
            nqubits,
            x,
            z,
            phase: phase & 3,
        }
    }

    /// Single-letter Pauli at one site; `letter` ∈ {'I','X','Y','Z'}.
    pub fn single(nqubits: usize, site: usize, letter: char) -> Self {
        let bit = 1u64 << site;
        match letter {
            'I' => Self::identity(nqubits),
            'X' => Self::from_masks(nqubits, bit, 0, 0),
            'Z' => Self::from_masks(nqubits, 0, bit, 0),
            'Y' => Self::from_masks(nqubits, bit, bit, 1),
            other => panic!("not a Pauli letter: {other}"),
        }
    }

    /// Parse a letter word like "XZXZ"; site 0 is the leftmost letter.
    pub fn from_letters(word: &str) -> Self {
        let nqubits = word.len();
        let mut x = 0u64;
        let mut z = 0u64;
        let mut ny = 0u8;
        for (site, ch) in word.chars().enumerate() {
            match ch {
                'I' => {}
                'X' => x |= 1 << site,
                'Z' => z |= 1 << site,
                'Y' => {
                    x |= 1 << site;
                    z |= 1 << site;
                    ny = ny.wrapping_add(1);
                }
                other => panic!("not a Pauli letter: {other}"),
            }
        }
        Self::from_masks(nqubits, x, z, ny & 3)
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    /// Exponent of i in front of the X/Z word.
    pub fn phase_exponent(&self) -> u8 {
        self.phase
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn is_identity_word(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Group product with exact phase composition.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.nqubits, rhs.nqubits);
        let cross = (self.z & rhs.x).count_ones() as u8;
        Self {
            nqubits: self.nqubits,
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
            phase: (self.phase + rhs.phase + 2 * (cross & 1)) & 3,
        }
    }

    pub fn commutes_with(&self, rhs: &Self) -> bool {
        let cross = (self.x & rhs.z).count_ones() + (self.z & rhs.x).count_ones();
        cross.is_multiple_of(2)
    }

    /// Letter at a site, one of 'I', 'X', 'Y', 'Z'.
    pub fn letter(&self, site: usize) -> char {
        match ((self.x >> site) & 1, (self.z >> site) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (0, 1) => 'Z',
            (1, 1) => 'Y',
            _ => unreachable!(),
        }
    }

    /// Restrict to a slice of sites, reindexed from zero, dropping the phase.
    pub fn restricted(&self, sites: &[usize]) -> Self {
        let mut out = Self::identity(sites.len());
        for (new, &old) in sites.iter().enumerate() {
            out.x |= ((self.x >> old) & 1) << new;
            out.z |= ((self.z >> old) & 1) << new;
        }
        out
    }

    /// Dense matrix; restricted to at most five qubits.
    pub fn to_matrix(&self) -> ComplexMatrix {
        assert!(self.nqubits <= 5, "matrix form limited to 5 qubits");
        let mut m = ComplexMatrix::identity(1);
        for site in 0..self.nqubits {
            let s = match ((self.x >> site) & 1, (self.z >> site) & 1) {
                (0, 0) => ComplexMatrix::identity(2),
                (1, 0) => standard_gate(Gate::X, None).unwrap(),
                (0, 1) => standard_gate(Gate::Z, None).unwrap(),
                // X·Z, the phase lives in the word's phase exponent.
                (1, 1) => standard_gate(Gate::X, None)
                    .unwrap()
                    .mul(&standard_gate(Gate::Z, None).unwrap()),
                _ => unreachable!(),
            };
            m = m.kron(&s);
        }
        let phase = match self.phase {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        m.scale(phase)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ny = (self.x & self.z).count_ones() as u8;
        let shown = (self.phase + 4 - (ny & 3)) & 3;
        let prefix = match shown {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}")?;
        for site in 0..self.nqubits {
            write!(f, "{}", self.letter(site))?;
        }
        Ok(())
    }
}

/// An `[[2m+2, 2m, 2]]` error-detecting code with its logical operators.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    m: u32,
    stabilizers: Vec<PauliString>,
    logical_z: Vec<PauliString>,
    logical_x: Vec<PauliString>,
}

impl CodeSpec {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn nphysical(&self) -> usize {
        2 * self.m as usize + 2
    }

    pub fn nlogical(&self) -> usize {
        2 * self.m as usize
    }

    /// Distilled qubits per consumed |Y_3⟩ state, m/(4(m+1)).
    pub fn yield_rate(&self) -> f64 {
        let m = self.m as f64;
        m / (4.0 * (m + 1.0))
    }

    pub fn stabilizers(&self) -> &[PauliString] {
        &self.stabilizers
    }

    pub fn logical_z(&self) -> &[PauliString] {
        &self.logical_z
    }

    pub fn logical_x(&self) -> &[PauliString] {
        &self.logical_x
    }

    /// Check the stabilizer/logical commutation relations.
    pub fn check_relations(&self) -> bool {
        let stabs = &self.stabilizers;
        for (i, s) in stabs.iter().enumerate() {
            for t in &stabs[i + 1..] {
                if !s.commutes_with(t) {
                    return false;
                }
            }
            for l in self.logical_z.iter().chain(&self.logical_x) {
                if !s.commutes_with(l) {
                    return false;
                }
            }
        }
        for j in 0..self.nlogical() {
            for jp in 0..self.nlogical() {
                let want_anti = j == jp;
                if self.logical_x[j].commutes_with(&self.logical_z[jp]) == want_anti {
                    return false;
                }
            }
            for jp in (j + 1)..self.nlogical() {
                if !self.logical_z[j].commutes_with(&self.logical_z[jp])
                    || !self.logical_x[j].commutes_with(&self.logical_x[jp])
                {
                    return false;
                }
            }
        }
        true
    }
}

/// Build the `[[2m+2,2m,2]]` code. The m = 1 instance carries the logical
/// frame of the four-qubit encoder; larger m use the ladder form
/// Z̄_j = Z_0…Z_{2j+1}, X̄_j = X_{2j+1}X_{2j+2} and its X↔Z mirror.
pub fn build_code(m: u32) -> Result<CodeSpec> {
    if !(1..=16).contains(&m) {
        return Err(Error::MOutOfRange(m));
    }
    let n = 2 * m as usize + 2;
    let all_z = PauliString::from_masks(n, 0, (1 << n) - 1, 0);
    let all_x = PauliString::from_masks(n, (1 << n) - 1, 0, 0);
    let (logical_z, logical_x) = if m == 1 {
        (
            vec![
                PauliString::from_letters("ZIIZ"),
                PauliString::from_letters("XIIX"),
            ],
            vec![
                PauliString::from_letters("XIXI"),
                PauliString::from_letters("ZIZI"),
            ],
        )
    } else {
        let mut lz = Vec::with_capacity(2 * m as usize);
        let mut lx = Vec::with_capacity(2 * m as usize);
        for j in 0..m as usize {
            let run = (1u64 << (2 * j + 2)) - 1; // sites 0..=2j+1
            lz.push(PauliString::from_masks(n, 0, run, 0));
            let pair = (1u64 << (2 * j + 1)) | (1u64 << (2 * j + 2));
            lx.push(PauliString::from_masks(n, pair, 0, 0));
        }
        for j in 0..m as usize {
            let run = (1u64 << (2 * j + 2)) - 1;
            lz.push(PauliString::from_masks(n, run, 0, 0));
            let pair = (1u64 << (2 * j + 1)) | (1u64 << (2 * j + 2));
            lx.push(PauliString::from_masks(n, 0, pair, 0));
        }
        (lz, lx)
    };
    Ok(CodeSpec {
        m,
        stabilizers: vec![all_z, all_x],
        logical_z,
        logical_x,
    })
}

/// Logical permutation induced by the transversal Hadamard H^{⊗(2m+2)}.
///
/// Exchanging X and Z letters maps each logical operator onto the operator of
/// its partner qubit (modulo stabilizers); the returned vector sends logical
/// index j to its image.
pub fn transversal_h_action(code: &CodeSpec) -> Vec<usize> {
    let exchange = |p: &PauliString| {
        PauliString::from_masks(p.nqubits(), p.z_mask(), p.x_mask(), 0)
    };
    let stab_products: Vec<(u64, u64)> = {
        let s1 = &code.stabilizers()[0];
        let s2 = &code.stabilizers()[1];
        vec![
            (0, 0),
            (s1.x_mask(), s1.z_mask()),
            (s2.x_mask(), s2.z_mask()),
            (s1.x_mask() ^ s2.x_mask(), s1.z_mask() ^ s2.z_mask()),
        ]
    };
    let matches = |a: &PauliString, b: &PauliString| {
        stab_products
            .iter()
            .any(|(sx, sz)| a.x_mask() == b.x_mask() ^ sx && a.z_mask() == b.z_mask() ^ sz)
    };
    let mut perm = vec![usize::MAX; code.nlogical()];
    for j in 0..code.nlogical() {
        let hz = exchange(&code.logical_z()[j]);
        let hx = exchange(&code.logical_x()[j]);
        for l in 0..code.nlogical() {
            if matches(&hz, &code.logical_z()[l]) && matches(&hx, &code.logical_x()[l]) {
                perm[j] = l;
                break;
            }
        }
        assert!(perm[j] != usize::MAX, "transversal H image not found");
    }
    perm
}

/// The four-qubit encoder frame used by the controlled-SWAP gadget.
///
/// Input slots 0 and 1 are the ancillary wires (prepared in |0⟩ and measured
/// after decoding); slots 2 and 3 carry the two data qubits. The Z images of
/// slots 0 and 1 are the code stabilizers, and slots 2 and 3 carry the m = 1
/// logical frame. The ancilla X images are the unique (mod stabilizer)
/// choices compatible with conjugation.
#[derive(Debug, Clone)]
pub struct Encoder {
    z_images: [PauliString; 4],
    x_images: [PauliString; 4],
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Self {
            z_images: [
                PauliString::from_letters("ZZZZ"),
                PauliString::from_letters("XXXX"),
                PauliString::from_letters("ZIIZ"),
                PauliString::from_letters("XIIX"),
            ],
            x_images: [
                PauliString::from_letters("XIXX"),
                PauliString::from_letters("IZII"),
                PauliString::from_letters("XIXI"),
                PauliString::from_letters("ZIZI"),
            ],
        }
    }

    pub fn z_image(&self, slot: usize) -> &PauliString {
        &self.z_images[slot]
    }

    pub fn x_image(&self, slot: usize) -> &PauliString {
        &self.x_images[slot]
    }

    /// Generator list in canonical order X_0, Z_0, X_1, Z_1, …
    fn generator_images(&self) -> [&PauliString; 8] {
        [
            &self.x_images[0],
            &self.z_images[0],
            &self.x_images[1],
            &self.z_images[1],
            &self.x_images[2],
            &self.z_images[2],
            &self.x_images[3],
            &self.z_images[3],
        ]
    }

    /// Conjugate forward: C P C†.
    pub fn encode_pauli(&self, p: &PauliString) -> PauliString {
        assert_eq!(p.nqubits(), 4);
        let mut out = PauliString::identity(4);
        for slot in 0..4 {
            if (p.x_mask() >> slot) & 1 == 1 {
                out = out.mul(&self.x_images[slot]);
            }
            if (p.z_mask() >> slot) & 1 == 1 {
                out = out.mul(&self.z_images[slot]);
            }
        }
        // The input word in the same canonical order fixes the relative phase.
        let mut canon = PauliString::identity(4);
        for slot in 0..4 {
            if (p.x_mask() >> slot) & 1 == 1 {
                canon = canon.mul(&PauliString::single(4, slot, 'X'));
            }
            if (p.z_mask() >> slot) & 1 == 1 {
                canon = canon.mul(&PauliString::single(4, slot, 'Z'));
            }
        }
        let diff = (p.phase_exponent() + 4 - canon.phase_exponent()) & 3;
        PauliString::from_masks(4, out.x_mask(), out.z_mask(), out.phase_exponent() + diff)
    }

    /// Conjugate backward: C† P C.
    pub fn decode_pauli(&self, p: &PauliString) -> PauliString {
        assert_eq!(p.nqubits(), 4);
        let combo = self.solve_combination(p.x_mask(), p.z_mask());
        // Preimage word in canonical generator order.
        let mut pre = PauliString::identity(4);
        for slot in 0..4 {
            if (combo >> (2 * slot)) & 1 == 1 {
                pre = pre.mul(&PauliString::single(4, slot, 'X'));
            }
            if (combo >> (2 * slot + 1)) & 1 == 1 {
                pre = pre.mul(&PauliString::single(4, slot, 'Z'));
            }
        }
        let img = self.encode_pauli(&pre);
        debug_assert_eq!(img.x_mask(), p.x_mask());
        debug_assert_eq!(img.z_mask(), p.z_mask());
        let diff = (p.phase_exponent() + 4 - img.phase_exponent()) & 3;
        PauliString::from_masks(4, pre.x_mask(), pre.z_mask(), pre.phase_exponent() + diff)
    }

    /// Express a mask pair over the image generators; bit 2s of the result
    /// selects X_s, bit 2s+1 selects Z_s.
    fn solve_combination(&self, x: u64, z: u64) -> u8 {
        // Rows: 8-dimensional GF(2) vectors (x | z << 4) with a combo tag.
        let gens = self.generator_images();
        let mut rows: Vec<(u8, u8)> = gens
            .iter()
            .enumerate()
            .map(|(i, g)| {
                (
                    (g.x_mask() as u8 & 0xf) | ((g.z_mask() as u8 & 0xf) << 4),
                    1u8 << i,
                )
            })
            .collect();
        let mut target = (x as u8 & 0xf) | ((z as u8 & 0xf) << 4);
        let mut combo = 0u8;
        for bit in 0..8 {
            let mask = 1u8 << bit;
            let Some(pos) = rows.iter().position(|(v, _)| v & mask != 0) else {
                continue;
            };
            let (pivot_v, pivot_c) = rows.swap_remove(pos);
            rows = rows
                .into_iter()
                .map(|(v, c)| {
                    if v & mask != 0 {
                        (v ^ pivot_v, c ^ pivot_c)
                    } else {
                        (v, c)
                    }
                })
                .collect();
            if target & mask != 0 {
                target ^= pivot_v;
                combo ^= pivot_c;
            }
        }
        assert_eq!(target, 0, "images do not span the Pauli group");
        combo
    }

    /// Dense 16×16 unitary realizing the tableau, built from the stabilizer
    /// projector of the encoded |0000⟩ and the X images.
    pub fn matrix(&self) -> ComplexMatrix {
        let dim = 16;
        let mut proj = ComplexMatrix::identity(dim);
        for s in &self.z_images {
            let p = ComplexMatrix::identity(dim)
                .add(&s.to_matrix())
                .scale(Complex64::new(0.5, 0.0));
            proj = proj.mul(&p);
        }
        // Encoded |0000⟩: image of the rank-one projector, phase fixed on the
        // first significant amplitude.
        let mut psi0 = vec![Complex64::new(0.0, 0.0); dim];
        'col: for col in 0..dim {
            let mut norm = 0.0;
            for row in 0..dim {
                norm += proj.get(row, col).norm_sqr();
            }
            if norm > 1e-6 {
                for row in 0..dim {
                    psi0[row] = proj.get(row, col);
                }
                break 'col;
            }
        }
        let norm: f64 = psi0.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let anchor = psi0.iter().find(|a| a.norm() > 1e-8).copied().unwrap();
        let fix = anchor.conj() / anchor.norm();
        for a in psi0.iter_mut() {
            *a = *a * fix / norm;
        }
        let xmats: Vec<ComplexMatrix> = self.x_images.iter().map(|p| p.to_matrix()).collect();
        let mut c = ComplexMatrix::zeros(dim);
        for b in 0..dim {
            let mut psi = psi0.clone();
            // Slot s corresponds to bit (3 - s) of the basis index.
            for slot in 0..4 {
                if (b >> (3 - slot)) & 1 == 1 {
                    let m = &xmats[slot];
                    let mut next = vec![Complex64::new(0.0, 0.0); dim];
                    for (row, amp) in next.iter_mut().enumerate() {
                        for k in 0..dim {
                            *amp += m.get(row, k) * psi[k];
                        }
                    }
                    psi = next;
                }
            }
            for row in 0..dim {
                c.set(row, b, psi[row]);
            }
        }
        c
    }

    /// Sign s = ⟨0000| C† H^⊗4 C |0000⟩ of the encoded-SWAP identity; the
    /// five-qubit oracle applies a control-frame Z correction when s = −1.
    pub fn logical_swap_sign(&self) -> f64 {
        let c = self.matrix();
        let h = standard_gate(Gate::H, None).unwrap();
        let h4 = h.kron(&h).kron(&h).kron(&h);
        let d = c.adjoint().mul(&h4).mul(&c);
        d.get(0, 0).re
    }
}

/// Gadget circuit segments a fault can be pushed through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultSegment {
    /// The controlled-Hadamard Λ_0(H_site); site indexes the five-wire
    /// register, so code wires are 1..=4.
    ControlledH { site: usize },
    /// The decoding circuit C† on wires 1..=4.
    Decoder,
}

/// Push a fault operator on the five-wire register (control, code 0..3)
/// through a circuit segment.
pub fn propagate_fault(
    fault: &PauliString,
    segment: FaultSegment,
    enc: &Encoder,
) -> Result<PauliString> {
    assert_eq!(fault.nqubits(), 5);
    match segment {
        FaultSegment::ControlledH { site } => {
            if fault.is_identity_word() {
                return Ok(*fault);
            }
            let ok = (1..=4).contains(&site)
                && fault.letter(site) == 'Y'
                && fault.weight() == 1;
            if !ok {
                return Err(Error::UnsupportedFault(fault.to_string()));
            }
            // {Y_i, Λ_0(H_i)} = 0, so Y_i picks up Z on the control.
            Ok(fault.mul(&PauliString::single(5, 0, 'Z')))
        }
        FaultSegment::Decoder => {
            let code_part = fault.restricted(&[1, 2, 3, 4]);
            let code_part = PauliString::from_masks(
                4,
                code_part.x_mask(),
                code_part.z_mask(),
                fault.phase_exponent(),
            );
            let decoded = enc.decode_pauli(&code_part);
            let mut out = PauliString::from_masks(
                5,
                decoded.x_mask() << 1,
                (decoded.z_mask() << 1) | (fault.z_mask() & 1),
                decoded.phase_exponent(),
            );
            if fault.x_mask() & 1 == 1 {
                out = PauliString::from_masks(
                    5,
                    out.x_mask() | 1,
                    out.z_mask(),
                    out.phase_exponent(),
                );
            }
            Ok(out)
        }
    }
}

/// Post-selected stochastic Pauli map on the reduced (control, data, data)
/// register.
#[derive(Debug, Clone)]
pub struct StochasticPauliMap {
    terms: Vec<(PauliString, ComplexMatrix, f64)>,
    trace_preserving: bool,
}

impl StochasticPauliMap {
    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.terms.iter().map(|(p, _, w)| (p, *w))
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|(_, _, w)| w).sum()
    }

    /// Σ w·PρP† on a three-qubit state.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        assert_eq!(rho.nqubits(), 3);
        let mut acc = ComplexMatrix::zeros(8);
        for (_, m, w) in &self.terms {
            let term = m.mul(rho.matrix()).mul(&m.adjoint());
            acc = acc.add(&term.scale(Complex64::new(*w, 0.0)));
        }
        DensityMatrix::from_matrix(3, acc, false)
    }
}

/// Build the effective gadget noise map Γ(γ) by exhaustive enumeration of the
/// 2^8 independent Y-fault patterns over the eight rotation sites of one
/// controlled-SWAP gadget, keeping only patterns with trivial syndrome.
pub fn build_gamma(gamma: f64, code: &CodeSpec) -> Result<StochasticPauliMap> {
    if !(0.0..=0.5).contains(&gamma) {
        return Err(Error::GammaOutOfRange(gamma));
    }
    if code.m() != 1 {
        return Err(Error::GammaRequiresM1);
    }
    let enc = Encoder::new();
    // Decoded images of the sixteen net Y-fault supports, phases dropped.
    let mut decoded = Vec::with_capacity(16);
    for net in 0u64..16 {
        let mut word = PauliString::identity(4);
        for site in 0..4 {
            if (net >> site) & 1 == 1 {
                word = word.mul(&PauliString::single(4, site, 'Y'));
            }
        }
        decoded.push(enc.decode_pauli(&word));
    }
    let mut acc: BTreeMap<(u64, u64, u64), f64> = BTreeMap::new();
    for a in 0u64..16 {
        for b in 0u64..16 {
            let faults = (a.count_ones() + b.count_ones()) as i32;
            let weight = gamma.powi(faults) * (1.0 - gamma).powi(8 - faults);
            if weight == 0.0 {
                continue;
            }
            let q = &decoded[(a ^ b) as usize];
            // Nontrivial syndrome: an X component on a measured ancilla slot.
            if q.x_mask() & 0b0011 != 0 {
                continue;
            }
            let z0 = (a.count_ones() & 1) as u64;
            let data = q.restricted(&[2, 3]);
            let key = (z0, data.x_mask(), data.z_mask());
            *acc.entry(key).or_insert(0.0) += weight;
        }
    }
    let terms: Vec<(PauliString, ComplexMatrix, f64)> = acc
        .into_iter()
        .map(|((z0, dx, dz), w)| {
            let p = PauliString::from_masks(3, dx << 1, (dz << 1) | z0, 0);
            let m = p.to_matrix();
            (p, m, w)
        })
        .collect();
    Ok(StochasticPauliMap {
        trace_preserving: gamma == 0.0,
        terms,
    })
}
