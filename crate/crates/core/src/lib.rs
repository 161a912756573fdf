//! Numerics for analysis in infinitely many variables.
//!
//! Every object is "eventually canonical": a finite explicit prefix followed
//! by a closed-form tail rule. Infinite products, sums and measures over such
//! objects are decided analytically on the tail and exactly on the prefix.

pub mod cylinder_measure;
pub mod fourier_analysis;
pub mod gaussian_measures;
pub mod operator_semigroups;
pub mod pde_examples;
pub mod product_engine;
pub mod quadrature;
pub mod sequence_spaces;
pub mod tensor_states;
pub mod text;

pub use num_complex::Complex64;
