//! Linear algebra over Z/p^e.

pub mod complex;
pub mod howell;
pub mod mat;
pub mod snf;
pub mod zpe;

pub use complex::{CochainComplex, CohomologyTable, ComplexError, Summand, Term};
pub use howell::{Howell, Reducer};
pub use mat::{Mat, SVec, SpMat};
pub use snf::{diag_matrix, elementary_divisors, snf, snf_dense, Snf, SnfDense, Want};
pub use zpe::{Factorials, Scalar, Zpe};
