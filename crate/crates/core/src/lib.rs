//! Search, verification and exact certification of 2-unitary matrices,
//! perfect tensors and AME(4,d) states.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`]: bipartite operators, four-index tensors, reshuffling and partial transpose.
//! - [`designs`]: Latin squares, orthogonal Latin squares and their lifts to permutation matrices.
//! - [`metrics`]: operator entanglement, entangling power, gate typicality.
//! - [`dynmap`]: the map `U -> polar((U^R)^Γ)`, seeds, trajectories and batch search.
//! - [`canon`]: local-unitary canonicalisation exposing block structure.
//! - [`ame`]: four-party states, partial traces and AME checks.
//! - [`cyclotomic`]: exact arithmetic in the 40th cyclotomic field.
//! - [`golden`]: symbolic sparse 36x36 matrices with amplitudes `a, b, c` and phases `ω^k`.
//! - [`qecc`]: Weyl operators, the shortened three-quhex code and purity checks.
//! - [`cli`]: the command-line front end.

pub mod error;
pub mod linalg;
pub mod tensor;
pub mod designs;
pub mod metrics;
pub mod dynmap;
pub mod ame;
pub mod canon;
pub mod cyclotomic;
pub mod golden;
pub mod qecc;
pub mod cli;

pub use error::{Error, Result};
pub use linalg::CMat;
pub use tensor::{BipartiteOperator, Cut, Tensor4};
