//! Certified numerics for bilateral weighted shifts on `ℓ²(ℤ)` and the doubled
//! Krein space built from them.
//!
//! * [`weights`]: weight sequences, including the oscillating family
//!   `v_n = c^{φ(|n|)} e^{ψ(|n|)}`, evaluated in the log domain.
//! * [`shift_ops`]: exact actions of `V^N`, `V^{-N}`, `V*^N`, `V*^{-N}`, norm
//!   certificates and spectral-radius brackets.
//! * [`growth`]: classification of `S(T, a)` through the orbit of `b_0`.
//! * [`krein`]: `V̂ = V ⊕ V*^{-1}` and the spans `L±`.
//! * [`findim_oracle`]: dense brute force for `S(T, c)` in small dimensions.
//!
//! Vector types are generic over [`scalar::Scalar`] (`f32`, `f64`); the aliases
//! below fix `f64`.

pub mod bigreal;
pub mod dd;
pub mod error;
pub mod findim_oracle;
pub mod growth;
pub mod krein;
pub mod scalar;
pub mod shift_ops;
pub mod weights;

pub use error::{Error, Result};
pub use shift_ops::{PowerKind, ShiftOperator};
pub use weights::{Index, WeightSequence};

pub type SparseVector = shift_ops::FinSuppVector<f64>;
pub type SparseVectorF32 = shift_ops::FinSuppVector<f32>;
pub type DoubledVector = krein::DoubledVector<f64>;
