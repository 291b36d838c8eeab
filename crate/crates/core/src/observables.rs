//! Operators and states for systems of spin-½ pairs.
//!
//! Single-particle basis: `|+⟩ ↦ 0`, `|−⟩ ↦ 1`. Multi-particle basis states
//! are ordered lexicographically with particle 1 as the most significant
//! digit, so for a pair `|++⟩, |+−⟩, |−+⟩, |−−⟩` have indices 0..=3.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{kron, kron_all, ComplexMatrix, StateVector};

/// Number of pair slots in the six-particle space.
pub const PAIR_SLOTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObservableError {
    #[error("basis state needs at least one sign")]
    EmptySigns,
    #[error("pair index {index} out of range for {slots} slots")]
    BadPairIndex { index: usize, slots: usize },
    #[error("pair operator must be 4x4, got {dim}x{dim}")]
    NotPairOperator { dim: usize },
    #[error("operator on {op_qubits} qubits does not match {targets} target qubits")]
    TargetArity { op_qubits: usize, targets: usize },
    #[error("invalid target qubits {targets:?} for a {n_qubits}-qubit register")]
    BadTargets { targets: Vec<usize>, n_qubits: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn bit(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }
}

/// The two pair observables: `A`, diagonal in the product basis, and the
/// Bell operator `B`, diagonal in the Bell basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairKind {
    A,
    B,
}

impl PairKind {
    pub fn matrix(self) -> ComplexMatrix {
        match self {
            PairKind::A => build_pair_a(),
            PairKind::B => build_pair_b(),
        }
    }
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairKind::A => "A",
            PairKind::B => "B",
        })
    }
}

impl FromStr for PairKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(PairKind::A),
            "B" | "b" => Ok(PairKind::B),
            other => Err(format!("unknown pair observable `{other}` (expected A or B)")),
        }
    }
}

/// Which pair observable sits on each of the three pair slots (1,2), (3,4), (5,6).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProductPattern(pub [PairKind; PAIR_SLOTS]);

impl ProductPattern {
    /// The four commuting product observables, in the order AAB, ABA, BAA, BBB.
    pub const GHZ_FAMILY: [ProductPattern; 4] = [
        ProductPattern([PairKind::A, PairKind::A, PairKind::B]),
        ProductPattern([PairKind::A, PairKind::B, PairKind::A]),
        ProductPattern([PairKind::B, PairKind::A, PairKind::A]),
        ProductPattern([PairKind::B, PairKind::B, PairKind::B]),
    ];

    /// `A12A34B56` style label.
    pub fn label(&self) -> String {
        const PAIRS: [&str; PAIR_SLOTS] = ["12", "34", "56"];
        self.0
            .iter()
            .zip(PAIRS)
            .map(|(k, p)| format!("{k}{p}"))
            .collect()
    }

    pub fn all() -> impl Iterator<Item = ProductPattern> {
        (0..8u8).map(|bits| {
            let kind = |slot: u8| {
                if bits >> (2 - slot) & 1 == 0 {
                    PairKind::A
                } else {
                    PairKind::B
                }
            };
            ProductPattern([kind(0), kind(1), kind(2)])
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
    ];
}

pub fn basis_state(signs: &[Sign]) -> Result<StateVector, ObservableError> {
    if signs.is_empty() {
        return Err(ObservableError::EmptySigns);
    }
    let index = signs.iter().fold(0, |acc, s| acc << 1 | s.bit());
    Ok(StateVector::basis(1 << signs.len(), index))
}

/// Parses a sign string such as `"+-+-"` into a basis state.
pub fn basis_state_str(signs: &str) -> Result<StateVector, ObservableError> {
    let parsed: Vec<Sign> = signs
        .chars()
        .filter_map(|ch| match ch {
            '+' => Some(Sign::Plus),
            '-' | '−' => Some(Sign::Minus),
            _ => None,
        })
        .collect();
    basis_state(&parsed)
}

pub fn bell_state(label: BellLabel) -> StateVector {
    let h = FRAC_1_SQRT_2;
    let amps = match label {
        BellLabel::PhiPlus => [h, 0.0, 0.0, h],
        BellLabel::PhiMinus => [h, 0.0, 0.0, -h],
        BellLabel::PsiPlus => [0.0, h, h, 0.0],
        BellLabel::PsiMinus => [0.0, h, -h, 0.0],
    };
    StateVector::from_real(&amps).expect("finite constants")
}

pub fn singlet() -> StateVector {
    bell_state(BellLabel::PsiMinus)
}

/// Projector onto the pair product state `|s₁⟩⊗|s₂⟩`.
pub fn alpha_projector(first: Sign, second: Sign) -> ComplexMatrix {
    ComplexMatrix::projector_onto(&basis_state(&[first, second]).expect("two signs"))
}

pub fn bell_projector(label: BellLabel) -> ComplexMatrix {
    ComplexMatrix::projector_onto(&bell_state(label))
}

fn weighted_sum(terms: &[(f64, ComplexMatrix)]) -> ComplexMatrix {
    terms
        .iter()
        .fold(ComplexMatrix::zeros(4), |acc, (w, p)| {
            acc.add(&p.scale(Complex64::new(*w, 0.0))).expect("4x4 terms")
        })
}

/// `2α̂⁺⁺ + α̂⁺⁻ − α̂⁻⁺ − 2α̂⁻⁻`, i.e. `diag(2, 1, −1, −2)`.
pub fn build_pair_a() -> ComplexMatrix {
    use Sign::{Minus, Plus};
    weighted_sum(&[
        (2.0, alpha_projector(Plus, Plus)),
        (1.0, alpha_projector(Plus, Minus)),
        (-1.0, alpha_projector(Minus, Plus)),
        (-2.0, alpha_projector(Minus, Minus)),
    ])
}

/// `2φ̂⁺ + ψ̂⁺ − ψ̂⁻ − 2φ̂⁻`. In the product basis this is antidiagonal with
/// entries `(0,3) = (3,0) = 2` and `(1,2) = (2,1) = 1`.
pub fn build_pair_b() -> ComplexMatrix {
    weighted_sum(&[
        (2.0, bell_projector(BellLabel::PhiPlus)),
        (1.0, bell_projector(BellLabel::PsiPlus)),
        (-1.0, bell_projector(BellLabel::PsiMinus)),
        (-2.0, bell_projector(BellLabel::PhiMinus)),
    ])
}

/// `op` on pair slot `pair_index`, identity on the other two slots of the 64-dim space.
pub fn embed_pair(op: &ComplexMatrix, pair_index: usize) -> Result<ComplexMatrix, ObservableError> {
    embed_pair_in(op, pair_index, PAIR_SLOTS)
}

/// Same as [`embed_pair`] for a register of `slots` pairs.
pub fn embed_pair_in(
    op: &ComplexMatrix,
    pair_index: usize,
    slots: usize,
) -> Result<ComplexMatrix, ObservableError> {
    if op.dim() != 4 {
        return Err(ObservableError::NotPairOperator { dim: op.dim() });
    }
    if pair_index >= slots {
        return Err(ObservableError::BadPairIndex {
            index: pair_index,
            slots,
        });
    }
    let id = ComplexMatrix::identity(4);
    let factors: Vec<&ComplexMatrix> = (0..slots)
        .map(|i| if i == pair_index { op } else { &id })
        .collect();
    Ok(kron_all(factors).expect("at least one slot"))
}

/// Kronecker product of arbitrary pair operators, one per slot.
pub fn build_pairs(ops: &[ComplexMatrix]) -> Option<ComplexMatrix> {
    kron_all(ops)
}

/// `K₁₂ ⊗ K₃₄ ⊗ K₅₆` for the pattern's three kinds.
pub fn build_product(pattern: ProductPattern) -> ComplexMatrix {
    let [a, b, c] = pattern.0.map(PairKind::matrix);
    kron(&kron(&a, &b), &c)
}

/// `1/(2√3)·(|+−+−⟩ − |+−−+⟩ − |−++−⟩ − 3|−+−+⟩)` on four particles.
pub fn hardy_state() -> StateVector {
    let norm = 1.0 / (2.0 * 3f64.sqrt());
    let mut amps = [0.0; 16];
    for (signs, coef) in [("+-+-", 1.0), ("+--+", -1.0), ("-++-", -1.0), ("-+-+", -3.0)] {
        amps[basis_index(signs)] = coef * norm;
    }
    StateVector::from_real(&amps).expect("finite constants")
}

fn basis_index(signs: &str) -> usize {
    signs
        .chars()
        .fold(0, |acc, ch| acc << 1 | usize::from(ch == '-'))
}

/// Lifts an operator on the qubits `targets` (in the operator's own digit
/// order) to an `n_qubits` register.
///
/// Entry `(r, c)` of the result is `op(r_t, c_t)` when `r` and `c` agree on
/// every non-target qubit and zero otherwise, where `r_t` collects the
/// target digits of `r` in the order given by `targets` (the first target
/// becomes the operator's most significant digit). Qubit 0 is the most
/// significant digit of the register index.
pub fn embed_on_qubits(
    op: &ComplexMatrix,
    targets: &[usize],
    n_qubits: usize,
) -> Result<ComplexMatrix, ObservableError> {
    let k = targets.len();
    if op.dim() != 1 << k {
        return Err(ObservableError::TargetArity {
            op_qubits: op.dim().trailing_zeros() as usize,
            targets: k,
        });
    }
    let mut seen = vec![false; n_qubits];
    for &t in targets {
        if t >= n_qubits || std::mem::replace(&mut seen[t], true) {
            return Err(ObservableError::BadTargets {
                targets: targets.to_vec(),
                n_qubits,
            });
        }
    }
    let bit = |index: usize, qubit: usize| index >> (n_qubits - 1 - qubit) & 1;
    let target_mask: usize = targets
        .iter()
        .map(|&t| 1usize << (n_qubits - 1 - t))
        .sum();
    let local = |index: usize| targets.iter().fold(0, |acc, &t| acc << 1 | bit(index, t));

    let dim = 1 << n_qubits;
    let mut out = ComplexMatrix::zeros(dim);
    for r in 0..dim {
        for c in 0..dim {
            if r & !target_mask == c & !target_mask {
                out[(r, c)] = op[(local(r), local(c))];
            }
        }
    }
    Ok(out)
}

/// Reorders the qubits of a state: qubit `order[j]` of `s` becomes qubit `j`
/// of the result.
pub fn permute_qubits(s: &StateVector, order: &[usize]) -> Result<StateVector, ObservableError> {
    let n = order.len();
    let mut seen = vec![false; n];
    if s.dim() != 1 << n || order.iter().any(|&q| q >= n || std::mem::replace(&mut seen[q], true)) {
        return Err(ObservableError::BadTargets {
            targets: order.to_vec(),
            n_qubits: s.dim().trailing_zeros() as usize,
        });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); s.dim()];
    for (old, amp) in s.amplitudes().iter().enumerate() {
        let new = order
            .iter()
            .fold(0, |acc, &q| acc << 1 | (old >> (n - 1 - q) & 1));
        amps[new] = *amp;
    }
    Ok(StateVector::new(amps).expect("permuted finite amplitudes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{commutator_norm, hermitian_eig, matmul, spectrum, DEFAULT_CLUSTER_TOL};

    #[test]
    fn basis_state_ordering() {
        use Sign::{Minus, Plus};
        assert_eq!(basis_state(&[Plus]).unwrap(), StateVector::basis(2, 0));
        assert_eq!(basis_state(&[Plus, Minus]).unwrap(), StateVector::basis(4, 1));
        assert_eq!(basis_state_str("+-+-").unwrap(), StateVector::basis(16, 5));
        assert_eq!(basis_state(&[]).unwrap_err(), ObservableError::EmptySigns);
    }

    #[test]
    fn bell_state_amplitudes() {
        let h = FRAC_1_SQRT_2;
        assert_eq!(bell_state(BellLabel::PhiPlus), StateVector::from_real(&[h, 0.0, 0.0, h]).unwrap());
        assert_eq!(singlet(), StateVector::from_real(&[0.0, h, -h, 0.0]).unwrap());
    }

    #[test]
    fn bell_basis_is_orthonormal() {
        for (i, a) in BellLabel::ALL.iter().enumerate() {
            for (j, b) in BellLabel::ALL.iter().enumerate() {
                let ip = bell_state(*a).inner(&bell_state(*b)).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip.re - want).abs() < 1e-12 && ip.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pair_a_is_diagonal() {
        let a = build_pair_a();
        assert_eq!(a, ComplexMatrix::from_diagonal(&[2.0, 1.0, -1.0, -2.0]));
        assert!(a.is_hermitian(0.0));
    }

    #[test]
    fn pair_b_matches_hand_summed_projectors() {
        // φ⁺ and φ⁻ outer products differ only on the (0,3)/(3,0) corners
        // (±½ each), ψ⁺ and ψ⁻ only on (1,2)/(2,1). The diagonals cancel:
        // 2·½ − 2·½ = 0 and ½ − ½ = 0. Off-diagonals: 2·½ − 2·(−½) = 2 and
        // ½ − (−½) = 1.
        let oracle = ComplexMatrix::from_real(
            4,
            &[
                0.0, 0.0, 0.0, 2.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                2.0, 0.0, 0.0, 0.0,
            ],
        )
        .unwrap();
        assert!(build_pair_b().max_abs_diff(&oracle).unwrap() < 1e-15);
    }

    #[test]
    fn pair_b_singlet_is_minus_one_eigenvector() {
        let eig = hermitian_eig(&build_pair_b(), 1e-12).unwrap();
        let expected = [-2.0, -1.0, 1.0, 2.0];
        for (got, want) in eig.eigenvalues.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        let overlap = eig.eigenvectors[1].inner(&singlet()).unwrap().norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_spectra_are_non_degenerate() {
        for m in [build_pair_a(), build_pair_b()] {
            let s = spectrum(&m, DEFAULT_CLUSTER_TOL).unwrap();
            assert_eq!(s.values.len(), 4);
            assert!(s.values.iter().all(|&(_, mult)| mult == 1));
            assert!(s.values.windows(2).all(|w| w[1].0 - w[0].0 >= 1.0 - 1e-12));
        }
    }

    #[test]
    fn a_and_b_do_not_commute() {
        // [A,B](0,3) = 2·2 − 2·(−2) = 8, [A,B](1,2) = 1·1 − 1·(−1) = 2
        let norm = commutator_norm(&build_pair_a(), &build_pair_b()).unwrap();
        assert!((norm - 8.0).abs() < 1e-12);
    }

    #[test]
    fn completeness_of_pair_projectors() {
        use Sign::{Minus, Plus};
        let id = ComplexMatrix::identity(4);
        let bell = BellLabel::ALL
            .iter()
            .fold(ComplexMatrix::zeros(4), |acc, l| acc.add(&bell_projector(*l)).unwrap());
        assert!(bell.max_abs_diff(&id).unwrap() < 1e-12);
        let alpha = [(Plus, Plus), (Plus, Minus), (Minus, Plus), (Minus, Minus)]
            .iter()
            .fold(ComplexMatrix::zeros(4), |acc, &(a, b)| acc.add(&alpha_projector(a, b)).unwrap());
        assert!(alpha.max_abs_diff(&id).unwrap() < 1e-12);
    }

    #[test]
    fn embed_pair_edges() {
        assert_eq!(
            embed_pair(&ComplexMatrix::identity(4), 1).unwrap(),
            ComplexMatrix::identity(64)
        );
        assert_eq!(
            embed_pair(&build_pair_a(), 3).unwrap_err(),
            ObservableError::BadPairIndex { index: 3, slots: 3 }
        );
        assert!(matches!(
            embed_pair(&ComplexMatrix::identity(2), 0),
            Err(ObservableError::NotPairOperator { dim: 2 })
        ));
        let a0 = embed_pair(&build_pair_a(), 0).unwrap();
        let b1 = embed_pair(&build_pair_b(), 1).unwrap();
        assert_eq!(commutator_norm(&a0, &b1).unwrap(), 0.0);
    }

    #[test]
    fn product_equals_embedded_factors() {
        for pattern in ProductPattern::all() {
            let [k0, k1, k2] = pattern.0;
            let e0 = embed_pair(&k0.matrix(), 0).unwrap();
            let e1 = embed_pair(&k1.matrix(), 1).unwrap();
            let e2 = embed_pair(&k2.matrix(), 2).unwrap();
            let prod = matmul(&matmul(&e0, &e1).unwrap(), &e2).unwrap();
            assert!(build_product(pattern).max_abs_diff(&prod).unwrap() <= 1e-12);
        }
        assert_eq!(ProductPattern::all().count(), 8);
        assert_eq!(ProductPattern::GHZ_FAMILY[0].label(), "A12A34B56");
    }

    #[test]
    fn hardy_state_amplitudes() {
        let eta = hardy_state();
        let k = 1.0 / (2.0 * 3f64.sqrt());
        assert!((eta[basis_index("-+-+")].re + 3.0 * k).abs() < 1e-15);
        assert!((eta[basis_index("+-+-")].re - k).abs() < 1e-15);
        assert_eq!(eta[basis_index("++++")], Complex64::new(0.0, 0.0));
        assert!((eta.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn embed_on_adjacent_qubits_matches_kron() {
        let b = build_pair_b();
        let i2 = ComplexMatrix::identity(2);
        let direct = kron(&kron(&i2, &b), &i2);
        assert_eq!(embed_on_qubits(&b, &[1, 2], 4).unwrap(), direct);
    }

    #[test]
    fn embed_on_qubits_respects_target_order() {
        // A on (q1, q0) swaps digit significance relative to A on (q0, q1).
        let a = build_pair_a();
        let swapped = embed_on_qubits(&a, &[1, 0], 2).unwrap();
        assert_eq!(swapped, ComplexMatrix::from_diagonal(&[2.0, -1.0, 1.0, -2.0]));
        assert!(embed_on_qubits(&a, &[0, 0], 2).is_err());
        assert!(embed_on_qubits(&a, &[0], 2).is_err());
    }

    #[test]
    fn permute_qubits_moves_digits() {
        let s = basis_state_str("+-++").unwrap();
        // new qubit j = old qubit order[j]
        let p = permute_qubits(&s, &[2, 3, 0, 1]).unwrap();
        assert_eq!(p, basis_state_str("+++-").unwrap());
        assert!(permute_qubits(&s, &[0, 0, 1, 2]).is_err());
    }
}
