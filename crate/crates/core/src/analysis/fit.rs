//! Least-squares fits of the characterized invariant families:
//! `A + B.w` on the sphere and `A + B.v + C|v|^2` in the classical setting.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{SpherePoint, Vector};

/// Relative singular-value floor below which a design matrix is rank deficient.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineFit {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    pub rms_residual: f64,
    pub sample_count: usize,
    /// Standard errors of `(A, B_1, ..., B_d)` from the residual variance;
    /// all zero when there are no spare degrees of freedom.
    pub std_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalPolyFit {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "C")]
    pub c: f64,
    pub rms_residual: f64,
    pub sample_count: usize,
}

struct LeastSquares {
    coef: Vec<f64>,
    rms_residual: f64,
    std_errors: Vec<f64>,
}

/// SVD least squares on an equilibrated design (each column scaled to unit
/// norm), so the rank test is insensitive to the units of the features.
fn least_squares(design: DMatrix<f64>, y: DVector<f64>, what: &str) -> Result<LeastSquares> {
    let (n, p) = design.shape();
    if n < p {
        return Err(Error::RankDeficient(format!("{what}: {n} samples for {p} unknowns")));
    }
    let scales: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
    if let Some(j) = scales.iter().position(|s| *s == 0.0) {
        return Err(Error::RankDeficient(format!(
            "{what}: feature {j} vanishes on every sample"
        )));
    }
    let mut scaled = design.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(*s);
    }
    let svd = scaled.svd(true, true);
    let sv = &svd.singular_values;
    let s_max = sv.max();
    let s_min = sv.min();
    if !(s_min > RANK_TOL * s_max) {
        return Err(Error::RankDeficient(format!(
            "{what}: singular value ratio {:.3e} <= {RANK_TOL:e}",
            s_min / s_max
        )));
    }
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let uty = u.transpose() * &y;
    let mut z = DVector::zeros(p);
    for k in 0..p {
        z[k] = uty[k] / sv[k];
    }
    let scaled_coef = v_t.transpose() * z;
    let coef: Vec<f64> = (0..p).map(|j| scaled_coef[j] / scales[j]).collect();

    let residual = &y - &design * DVector::from_column_slice(&coef);
    let rss = residual.norm_squared();
    let rms_residual = (rss / n as f64).sqrt();

    // cov(coef) = s^2 (X^T X)^{-1} = s^2 D^-1 V S^-2 V^T D^-1
    let std_errors = if n > p {
        let s2 = rss / (n - p) as f64;
        (0..p)
            .map(|j| {
                let var: f64 = (0..p).map(|k| (v_t[(k, j)] / sv[k]).powi(2)).sum();
                (s2 * var).sqrt() / scales[j]
            })
            .collect()
    } else {
        vec![0.0; p]
    };
    Ok(LeastSquares {
        coef,
        rms_residual,
        std_errors,
    })
}

/// Fits `g(w) ~ A + B.w`. Samples confined to a lower-dimensional subsphere
/// make the design rank deficient.
pub fn fit_affine(samples: &[(SpherePoint, f64)]) -> Result<AffineFit> {
    let Some((first, _)) = samples.first() else {
        return Err(Error::invalid("no samples to fit"));
    };
    let dim = first.dim();
    if let Some((p, _)) = samples.iter().find(|(p, _)| p.dim() != dim) {
        return Err(Error::invalid(format!("mixed dimensions {dim} and {}", p.dim())));
    }
    let design = DMatrix::from_fn(samples.len(), dim + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            samples[i].0.as_slice()[j - 1]
        }
    });
    let y = DVector::from_iterator(samples.len(), samples.iter().map(|(_, v)| *v));
    let ls = least_squares(design, y, "affine fit")?;
    Ok(AffineFit {
        a: ls.coef[0],
        b: ls.coef[1..].to_vec(),
        rms_residual: ls.rms_residual,
        sample_count: samples.len(),
        std_errors: ls.std_errors,
    })
}

/// Fits `g(v) ~ A + B.v + C|v|^2`. On a single sphere `|v|^2` is constant
/// and confounds `A`, which is reported as rank deficiency.
pub fn fit_classical_poly(samples: &[(Vector, f64)]) -> Result<ClassicalPolyFit> {
    let Some((first, _)) = samples.first() else {
        return Err(Error::invalid("no samples to fit"));
    };
    let dim = first.dim();
    if let Some((v, _)) = samples.iter().find(|(v, _)| v.dim() != dim) {
        return Err(Error::invalid(format!("mixed dimensions {dim} and {}", v.dim())));
    }
    let design = DMatrix::from_fn(samples.len(), dim + 2, |i, j| {
        let v = &samples[i].0;
        match j {
            0 => 1.0,
            j if j <= dim => v[j - 1],
            _ => v.norm_sq(),
        }
    });
    let y = DVector::from_iterator(samples.len(), samples.iter().map(|(_, g)| *g));
    let ls = least_squares(design, y, "classical fit")?;
    Ok(ClassicalPolyFit {
        a: ls.coef[0],
        b: ls.coef[1..=dim].to_vec(),
        c: ls.coef[dim + 1],
        rms_residual: ls.rms_residual,
        sample_count: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_uniform_sphere;
    use crate::rng;

    fn sphere_samples(n: usize, seed: u64, g: impl Fn(&[f64]) -> f64) -> Vec<(SpherePoint, f64)> {
        let mut r = rng::root(seed);
        (0..n)
            .map(|_| {
                let p = sample_uniform_sphere(3, 1.0, &mut r).unwrap();
                let v = g(p.as_slice());
                (p, v)
            })
            .collect()
    }

    #[test]
    fn exact_affine_recovery() {
        let fit = fit_affine(&sphere_samples(200, 1, |w| 2.0 - w[1])).unwrap();
        assert!((fit.a - 2.0).abs() < 1e-9);
        for (b, want) in fit.b.iter().zip([0.0, -1.0, 0.0]) {
            assert!((b - want).abs() < 1e-9);
        }
        assert!(fit.rms_residual <= 1e-10);
    }

    #[test]
    fn subsphere_is_rank_deficient() {
        // Every point on the circle w3 = 0.
        let samples: Vec<_> = (0..50)
            .map(|k| {
                let t = k as f64 * 0.3;
                (SpherePoint::new(vec![t.cos(), t.sin(), 0.0], 1.0).unwrap(), 1.0)
            })
            .collect();
        assert!(matches!(fit_affine(&samples), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn classical_two_radii() {
        let mut r = rng::root(2);
        let g = |v: &Vector| 1.0 + v[0] + 0.5 * v.norm_sq();
        let mut samples = Vec::new();
        for radius in [1.0, 2.0] {
            for _ in 0..30 {
                let p = sample_uniform_sphere(3, radius, &mut r).unwrap().coords().clone();
                let val = g(&p);
                samples.push((p, val));
            }
        }
        let fit = fit_classical_poly(&samples).unwrap();
        assert!((fit.a - 1.0).abs() < 1e-9 && (fit.c - 0.5).abs() < 1e-9);
        assert!((fit.b[0] - 1.0).abs() < 1e-9 && fit.b[1].abs() < 1e-9);

        let one_sphere: Vec<_> = samples.into_iter().take(30).collect();
        assert!(matches!(fit_classical_poly(&one_sphere), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn too_few_samples() {
        let s = sphere_samples(3, 4, |w| w[0]);
        assert!(matches!(fit_affine(&s), Err(Error::RankDeficient(_))));
        assert!(fit_affine(&[]).is_err());
    }
}
