//! Numerical and combinatorial verification of no-go arguments against
//! correlations between particle pairs being fixed in advance by the
//! initial state.
//!
//! - [`tensor`]: dense complex matrices, Kronecker products, a Jacobi
//!   Hermitian eigensolver, joint eigenspaces, projective measurement and
//!   Schmidt entropy.
//! - [`observables`]: the pair observables `A` and `B`, Bell states, the
//!   64-dim product observables and the four-particle post-selection state.
//! - [`proofs`]: the six-particle operator identities, the post-selection
//!   probabilities, and the two-singlet swapping demonstration.
//! - [`ks`]: context systems and exhaustive noncontextual value-assignment search.
//! - [`cli`]: the `precorr` command-line front end.

pub mod cli;
pub mod ks;
pub mod observables;
pub mod proofs;
pub mod report;
pub mod tensor;

pub use ks::{search, ContextSystem, SearchReport};
pub use report::{CheckResult, ProofId, VerificationReport};
pub use tensor::{ComplexMatrix, StateVector};
