//! Calculus of generalized-analytic functions over associative-commutative
//! poly-number systems.
//!
//! * [`algebra`]: structure constants, products, the q-tensor, basis changes.
//! * [`fields`]: vector fields with gamma-objects, Cauchy–Riemann residuals,
//!   the pair calculus and line integrals.
//! * [`geodesics`]: fixed-step RK4 integration of affine geodesics and of the
//!   quartic metric's extremal system.
//! * [`h4`]: the H4 bases, the quartic Finsler metric and the closed-form
//!   generalized-analytic family.

// `!(x > 0.0)` deliberately rejects NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod error;
pub mod fields;
pub mod geodesics;
pub mod grid;
pub mod h4;
pub mod tensor;

pub use algebra::{
    change_basis, invert, multiply, poly_eval, q_tensor, transform_constants, verify_structure, AxiomReport,
    BasisChange, BasisTag, PolyNumber, QTensor, StructureConstants,
};
pub use error::{Error, Result};
pub use fields::{ConnectionField, DiffConfig, DiffScheme, Domain, GAPair, GammaField, Path, ScalarField, VectorField};
pub use geodesics::{ExtremalState, GeodesicState, IntegratorConfig};
pub use grid::Grid;
pub use h4::{Convention, FinslerConfig, H4FamilySpec, Orientation};
pub use tensor::Tensor3;
