//! Tests and characterizations of collision invariants: parity
//! decomposition, the defect functional, least-squares fits, sampled
//! constraint nullspaces, and the scalar additivity (Cauchy) pipeline.
//!
//! Functions are handled as evaluatable black boxes. Borel measurability, the
//! hypothesis under which invariants are fully characterized, cannot be
//! checked from finitely many samples; every verdict here is numerical
//! evidence about the sampled behaviour only.

pub mod basis;
pub mod cauchy;
pub mod defect;
pub mod fit;
mod function;
pub mod kernel;
pub mod parity;

pub use cauchy::{
    cauchy_additivity_defect, cauchy_fit, cauchy_fit_with_tolerance, reduce_invariant_to_scalar, AdditivityDefect,
    CauchyFit, ScalarReduction,
};
pub use defect::{
    classical_defect, classical_mc_defect, defect_on_quadruple, mc_defect, sample_quadruples, DefectReport,
    QuadrupleSampler,
};
pub use fit::{fit_affine, fit_classical_poly, AffineFit, ClassicalPolyFit};
pub use function::SphericalFunction;
pub use kernel::{analyze_kernel, build_constraint_matrix, kernel_dimension, KernelConfig, KernelReport};
pub use parity::{even_part_constancy, parity_component, parity_decompose, EvenPartReport, ParityIndex};
