//! Analysis of nondegenerate boundary-format tensors
//! `A ∈ V_0 ⊗ V_1 ⊗ ... ⊗ V_p` with `dim V_i = k_i + 1` and `k_0 = k_1 + ... + k_p`.
//!
//! The crate is generic over the scalar [`Field`]; [`Rational`] carries the
//! exact certificates and [`C64`] the numeric searches.

pub mod error;
pub mod fixtures;
pub mod io;
pub mod jumping;
pub mod linalg;
pub mod nondegeneracy;
pub mod numeric;
pub mod poly;
pub mod scalar;
pub mod sl2;
pub mod stabilizer;
pub mod tensor;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use poly::Poly;
pub use scalar::{Field, Rational, C64};
pub use tensor::{BoundaryTensor, Format, GroupElement, Recovered, Tensor};

pub type RationalMatrix = Matrix<Rational>;
pub type ComplexMatrix = Matrix<C64>;
pub type RationalTensor = BoundaryTensor<Rational>;
pub type ComplexTensor = BoundaryTensor<C64>;
pub type RationalGroupElement = GroupElement<Rational>;
pub type ComplexGroupElement = GroupElement<C64>;
