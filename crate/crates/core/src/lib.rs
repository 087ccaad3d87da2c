// Negated float comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod estimates;
pub mod experiment;
pub mod fourier;
pub mod grid;
pub mod krylov;
pub mod matrix;
pub mod pde;
pub mod perturbation;
pub mod quadrature;
pub mod reflection;
pub mod rhp;
pub mod scattering;

pub use error::{Error, Result};
pub use grid::{ComplexField, Grid1D, SobolevNorms};
pub use matrix::{Mat2, Matrix2Field};
pub use reflection::ReflectionData;
