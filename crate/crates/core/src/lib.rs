//! Complementarity eigenpairs of tensor pairs.
//!
//! A pair `(λ, x)` is a complementarity eigenpair of tensors `(A, B)` when
//! `0 ≤ x ⊥ (λ B x^{m-1} − A x^{m-1}) ≥ 0` with `x ≠ 0`. This crate finds all
//! of them by solving a sequence of moment relaxations of polynomial
//! optimization problems whose feasible points are the normalized
//! eigenvectors, detecting flat truncation, and extracting the atoms.
//!
//! Two drivers are provided:
//!
//! * [`solver_cop`] when `B` is strictly copositive (`B x^m = 1` normalization),
//!   listing eigenvalues in increasing order;
//! * [`solver_gen`] for arbitrary pairs (unit-sphere normalization, random
//!   direction and random sum-of-squares objective).
//!
//! [`oracle`] is an independent active-set enumerator for small instances.

pub mod error;
pub mod extract;
pub mod instances;
pub mod moment;
pub mod oracle;
pub mod par;
pub mod poly;
pub mod sdp;
pub mod solver_cop;
pub mod solver_gen;
pub mod tensor;

pub use error::{Error, Result};
pub use extract::CEigenpair;
pub use tensor::{Tensor, TensorPair};
