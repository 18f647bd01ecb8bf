//! Numerical nullspace of the sampled invariance constraint.
//!
//! Row `q`, column `b` of the constraint matrix is the defect of basis
//! function `b` on quadruple `q`; a combination of basis functions is an
//! invariant exactly when its coefficient vector is a nullvector.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{default_basis, predicted_kernel_dimension};
use super::defect::{defect_on_quadruple, sample_quadruples, QuadrupleSampler};
use super::SphericalFunction;
use crate::error::{Error, Result};
use crate::kinematics::CollisionQuadruple;

pub const DEFAULT_KERNEL_TOL: f64 = 1e-6;

/// Relative floor for keeping a direction when orthonormalizing a basis on
/// the sampled points; smaller directions are linear dependencies among the
/// basis functions restricted to the sphere.
const ORTHO_TOL: f64 = 1e-10;

/// One row per quadruple; rows are evaluated in parallel and collected in
/// order.
pub fn build_constraint_matrix(basis: &[SphericalFunction], quadruples: &[CollisionQuadruple]) -> Result<DMatrix<f64>> {
    if let Some(first) = basis.first() {
        if let Some(b) = basis
            .iter()
            .find(|b| b.dim() != first.dim() || b.radius() != first.radius())
        {
            return Err(Error::invalid(format!(
                "basis functions '{}' and '{}' live on different spheres",
                first.descriptor(),
                b.descriptor()
            )));
        }
    }
    let rows: Vec<Vec<f64>> = quadruples
        .par_iter()
        .map(|q| basis.iter().map(|b| defect_on_quadruple(b, q)).collect())
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(quadruples.len(), basis.len(), |i, j| rows[i][j]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub basis: Vec<String>,
    pub rows: usize,
    pub columns: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub kernel_dimension: usize,
    pub tolerance: f64,
    /// The singular-value scale the tolerance is relative to.
    pub reference_scale: f64,
    /// Smallest non-kernel over largest kernel singular value; absent when
    /// either set is empty.
    pub spectral_gap: Option<f64>,
    /// Smallest non-kernel singular value over the reference scale.
    pub min_nonkernel_ratio: Option<f64>,
    pub predicted_dimension: Option<usize>,
}

impl KernelReport {
    pub fn matches_prediction(&self) -> Option<bool> {
        self.predicted_dimension.map(|p| p == self.kernel_dimension)
    }
}

/// SVD-based kernel dimension: the number of singular values at or below
/// `tol * max(sigma_max, sqrt(rows))` (missing singular values of a wide
/// matrix count as zero).
///
/// The `sqrt(rows)` floor is the singular-value scale of a column whose
/// entries are of unit size. Without it a matrix whose columns are all
/// invariants, and hence pure rounding noise, would be measured against its
/// own noise and report a spurious non-kernel part.
pub fn kernel_dimension(matrix: &DMatrix<f64>, tol: f64) -> Result<KernelReport> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid(format!("tolerance {tol} must lie in (0, 1)")));
    }
    let (rows, cols) = matrix.shape();
    if rows < 2 * cols {
        return Err(Error::UnderDetermined {
            rows,
            cols,
            needed: 2 * cols,
        });
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("constraint matrix has non-finite entries"));
    }
    let mut singular_values: Vec<f64> = if cols == 0 {
        Vec::new()
    } else {
        matrix.singular_values().iter().copied().collect()
    };
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let reference_scale = sigma_max.max((rows as f64).sqrt());
    let threshold = tol * reference_scale;
    let kernel = singular_values.iter().filter(|s| **s <= threshold).count();
    let nonkernel = cols - kernel;
    let (spectral_gap, min_nonkernel_ratio) = if nonkernel > 0 {
        let smallest_live = singular_values[nonkernel - 1];
        let gap = (kernel > 0).then(|| {
            let largest_dead = singular_values[nonkernel];
            if largest_dead > 0.0 {
                smallest_live / largest_dead
            } else {
                f64::INFINITY
            }
        });
        (gap, Some(smallest_live / reference_scale))
    } else {
        (None, None)
    };
    Ok(KernelReport {
        basis: Vec::new(),
        rows,
        columns: cols,
        singular_values,
        kernel_dimension: kernel,
        tolerance: tol,
        reference_scale,
        spectral_gap,
        min_nonkernel_ratio,
        predicted_dimension: None,
    })
}

/// Replaces the basis by an orthonormal one with respect to the empirical
/// measure on all quadruple points: returns `T` such that the functions
/// `basis * T` have unit mean square and are mutually orthogonal there.
/// Directions along which the basis is degenerate on the sphere are dropped.
fn orthonormalizer(basis: &[SphericalFunction], quadruples: &[CollisionQuadruple]) -> Result<DMatrix<f64>> {
    let points: Vec<_> = quadruples.iter().flat_map(|q| q.points()).collect();
    let values: Vec<Vec<f64>> = points
        .par_iter()
        .map(|p| basis.iter().map(|b| b.eval(p)).collect())
        .collect::<Result<_>>()?;
    let n = points.len();
    let norm = (n as f64).sqrt();
    let gram_root = DMatrix::from_fn(n, basis.len(), |i, j| values[i][j] / norm);
    let svd = gram_root.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sv = svd.singular_values;
    let s_max = sv.max();
    let keep: Vec<usize> = (0..sv.len()).filter(|k| sv[*k] > ORTHO_TOL * s_max).collect();
    Ok(DMatrix::from_fn(basis.len(), keep.len(), |j, c| {
        v_t[(keep[c], j)] / sv[keep[c]]
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub dim: usize,
    pub degree: u32,
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub sampler: QuadrupleSampler,
}

impl KernelConfig {
    /// Mixed constructor/pair sampling for `d >= 3`, antipodal pairs in `d = 2`.
    pub fn new(dim: usize, degree: u32, samples: usize, seed: u64) -> Self {
        KernelConfig {
            dim,
            degree,
            radius: 1.0,
            samples,
            seed,
            tol: DEFAULT_KERNEL_TOL,
            sampler: if dim == 2 {
                QuadrupleSampler::Antipodal
            } else {
                QuadrupleSampler::Mixed
            },
        }
    }
}

/// Samples quadruples, orthonormalizes the default basis on them, and
/// reports the kernel of the constraint matrix together with the dimension
/// the characterization predicts.
pub fn analyze_kernel(config: &KernelConfig) -> Result<KernelReport> {
    if config.degree == 0 {
        return Err(Error::invalid("kernel analysis needs degree >= 1"));
    }
    let basis = default_basis(config.dim, config.degree, config.radius)?;
    if config.samples < 2 * basis.len() {
        return Err(Error::UnderDetermined {
            rows: config.samples,
            cols: basis.len(),
            needed: 2 * basis.len(),
        });
    }
    let quadruples = sample_quadruples(config.sampler, config.dim, config.radius, config.samples, config.seed)?;
    let raw = build_constraint_matrix(&basis, &quadruples)?;
    let transform = orthonormalizer(&basis, &quadruples)?;
    let mut report = kernel_dimension(&(raw * transform), config.tol)?;
    report.basis = basis.iter().map(|b| b.descriptor().to_string()).collect();
    report.predicted_dimension = Some(predicted_kernel_dimension(config.dim, config.degree));
    Ok(report)
}
