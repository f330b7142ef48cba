//! Spectral toolkit for dilation operators `x p` on metric graphs.
//!
//! Two operator families are supported:
//!
//! * **BK**: the first-order operator `H = -i(x d/dx + 1/2)` on edges
//!   `[a_j, b_j]`, with a unitary vertex scattering matrix `S` and a
//!   secular equation `det(I - S T(k)) = 0`.
//! * **BK2**: its square, a second-order operator whose boundary data
//!   decomposes into a projector onto Dirichlet-type directions and a
//!   Hermitian "Robin" part, giving a `k`-dependent vertex matrix.
//!
//! The crate is `no_std` (it needs `alloc`). IO, configuration and the
//! command line live in the `bkgraph` crate.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod extensions;
pub mod graph;
pub mod halfline;
pub mod linalg;
pub mod quad;
pub mod special;
pub mod spectra;
pub mod traces;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Dense complex matrix used throughout.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<Complex64>;

/// Which of the two operator families a computation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum OperatorKind {
    /// First-order dilation operator.
    Bk,
    /// Second-order (squared) dilation operator.
    Bk2,
}

impl OperatorKind {
    /// Number of boundary conditions: `E` for BK, `2E` for BK2.
    pub fn boundary_rank(self, edges: usize) -> usize {
        match self {
            OperatorKind::Bk => edges,
            OperatorKind::Bk2 => 2 * edges,
        }
    }
}

pub(crate) const TAU: f64 = 2.0 * core::f64::consts::PI;
