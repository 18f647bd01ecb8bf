//! Decomposition of a function into parts of definite parity in each
//! coordinate, and the planar even-part test.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::Serialize;

use super::SphericalFunction;
use crate::error::{Error, Result};
use crate::geometry::sample_uniform_sphere;

/// Largest dimension for which the `2^d`-term parity sums are allowed.
pub const MAX_PARITY_DIM: usize = 20;

/// A subset `I` of the coordinate indices (zero-based), stored as a bitmask.
/// The component `g_I` is odd in every coordinate of `I` and even in the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParityIndex {
    mask: u32,
    dim: usize,
}

impl ParityIndex {
    pub fn new(indices: &[usize], dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut mask = 0u32;
        for &i in indices {
            if i >= dim {
                return Err(Error::invalid(format!("parity index {i} out of range for d = {dim}")));
            }
            if mask & (1 << i) != 0 {
                return Err(Error::invalid(format!("parity index {i} repeated")));
            }
            mask |= 1 << i;
        }
        Ok(ParityIndex { mask, dim })
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(&[], dim)
    }

    /// All `2^d` subsets.
    pub fn all(dim: usize) -> Result<Vec<Self>> {
        check_dim(dim)?;
        Ok((0..1u32 << dim).map(|mask| ParityIndex { mask, dim }).collect())
    }

    /// Increasing zero-based indices.
    pub fn indices(&self) -> Vec<usize> {
        (0..self.dim).filter(|i| self.contains(*i)).collect()
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.dim && self.mask & (1 << i) != 0
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim > MAX_PARITY_DIM {
        return Err(Error::UnsupportedDimension {
            dim,
            reason: "parity sums need 2^d evaluations; d <= 20 supported",
        });
    }
    Ok(())
}

impl Ord for ParityIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.dim, self.len(), self.indices()).cmp(&(other.dim, other.len(), other.indices()))
    }
}

impl PartialOrd for ParityIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One-based, e.g. `{1,3}`.
impl fmt::Display for ParityIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.indices().iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// `g_I(w) = 2^-d sum_{sigma in {1,-1}^d} sigma_{i1}...sigma_{in} g(sigma_1 w_1, ..., sigma_d w_d)`.
///
/// Each evaluation of the result costs `2^d` evaluations of `g`.
pub fn parity_component(g: &SphericalFunction, index: ParityIndex) -> Result<SphericalFunction> {
    if index.dim() != g.dim() {
        return Err(Error::invalid(format!(
            "parity index is over d = {}, function over d = {}",
            index.dim(),
            g.dim()
        )));
    }
    let dim = g.dim();
    let inner = g.clone();
    let descriptor = format!("[{}]_{}", g.descriptor(), index);
    let weight = 0.5f64.powi(dim as i32);
    Ok(SphericalFunction::fallible(dim, g.radius(), descriptor, move |x| {
        let mut flipped = x.to_vec();
        let mut total = 0.0;
        for flips in 0..1u32 << dim {
            for (i, slot) in flipped.iter_mut().enumerate() {
                *slot = if flips & (1 << i) != 0 { -x[i] } else { x[i] };
            }
            let value = inner.eval_coords(&flipped)?;
            let sign = if (flips & index.mask).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            total += sign * value;
        }
        Ok(weight * total)
    }))
}

/// All `2^d` components; they sum back to `g` pointwise.
pub fn parity_decompose(g: &SphericalFunction) -> Result<BTreeMap<ParityIndex, SphericalFunction>> {
    ParityIndex::all(g.dim())?
        .into_iter()
        .map(|index| Ok((index, parity_component(g, index)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvenPartReport {
    /// Mean of `g(w) + g(-w)` over the probes.
    pub mean: f64,
    /// `max |g(w) + g(-w) - mean|`
    pub max_deviation: f64,
    pub probes: usize,
}

/// Planar test: a collision invariant in `d = 2` has `g(w) + g(-w)` constant.
pub fn even_part_constancy<R: Rng + ?Sized>(
    g: &SphericalFunction,
    probes: usize,
    rng: &mut R,
) -> Result<EvenPartReport> {
    if g.dim() != 2 {
        return Err(Error::invalid(format!(
            "the even-part test is planar (d = 2); got d = {}, use an affine fit instead",
            g.dim()
        )));
    }
    if probes == 0 {
        return Err(Error::invalid("need at least one probe"));
    }
    let mut sums = Vec::with_capacity(probes);
    for _ in 0..probes {
        let p = sample_uniform_sphere(2, g.radius(), rng)?;
        sums.push(g.eval(&p)? + g.eval(&p.antipode())?);
    }
    let mean = sums.iter().sum::<f64>() / probes as f64;
    let max_deviation = sums.iter().map(|s| (s - mean).abs()).fold(0.0, f64::max);
    Ok(EvenPartReport {
        mean,
        max_deviation,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::basis::{fourier_mode, FourierKind};
    use crate::rng;

    fn f3(desc: &str, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> SphericalFunction {
        SphericalFunction::new(3, 1.0, desc, f)
    }

    fn random_points(n: usize, seed: u64) -> Vec<crate::geometry::SpherePoint> {
        let mut r = rng::root(seed);
        (0..n).map(|_| sample_uniform_sphere(3, 1.0, &mut r).unwrap()).collect()
    }

    #[test]
    fn affine_split() {
        let g = f3("3+2w1", |w| 3.0 + 2.0 * w[0]);
        let parts = parity_decompose(&g).unwrap();
        for p in random_points(20, 1) {
            for (index, part) in &parts {
                let v = part.eval(&p).unwrap();
                let expected = match index.indices().as_slice() {
                    [] => 3.0,
                    [0] => 2.0 * p.as_slice()[0],
                    _ => 0.0,
                };
                assert!((v - expected).abs() < 1e-14, "{index}: {v} vs {expected}");
            }
        }
        let nonzero = parts
            .values()
            .filter(|part| random_points(5, 2).iter().any(|p| part.eval(p).unwrap().abs() > 1e-12))
            .count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn products() {
        let g = f3("w1w2", |w| w[0] * w[1]);
        let i12 = ParityIndex::new(&[0, 1], 3).unwrap();
        let g3 = f3("w1w2w3", |w| w[0] * w[1] * w[2]);
        let i123 = ParityIndex::new(&[0, 1, 2], 3).unwrap();
        let sq = f3("w1^2", |w| w[0] * w[0]);
        for p in random_points(20, 3) {
            let x = p.as_slice();
            for (index, part) in parity_decompose(&g).unwrap() {
                let expected = if index == i12 { x[0] * x[1] } else { 0.0 };
                assert!((part.eval(&p).unwrap() - expected).abs() < 1e-15);
            }
            for (index, part) in parity_decompose(&g3).unwrap() {
                let expected = if index == i123 { x[0] * x[1] * x[2] } else { 0.0 };
                assert!((part.eval(&p).unwrap() - expected).abs() < 1e-15);
            }
            let even = parity_component(&sq, ParityIndex::empty(3).unwrap()).unwrap();
            assert!((even.eval(&p).unwrap() - x[0] * x[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn index_validation_and_display() {
        assert!(ParityIndex::new(&[3], 3).is_err());
        assert!(ParityIndex::new(&[1, 1], 3).is_err());
        assert_eq!(ParityIndex::new(&[2, 0], 3).unwrap().to_string(), "{1,3}");
        assert_eq!(ParityIndex::all(3).unwrap().len(), 8);
        let g = f3("1", |_| 1.0);
        assert!(parity_component(&g, ParityIndex::empty(2).unwrap()).is_err());
    }

    #[test]
    fn even_part_examples() {
        let mut r = rng::root(4);
        let sin1 = fourier_mode(1, FourierKind::Sin, 1.0);
        let cos3 = fourier_mode(3, FourierKind::Cos, 1.0);
        let g = SphericalFunction::fallible(2, 1.0, "sin t + 5 cos 3t + 2", move |w| {
            Ok(sin1.eval_coords(w)? + 5.0 * cos3.eval_coords(w)? + 2.0)
        });
        let rep = even_part_constancy(&g, 1000, &mut r).unwrap();
        assert!((rep.mean - 4.0).abs() <= 1e-12);
        assert!(rep.max_deviation <= 1e-12);

        // E(w) = 2 cos 2t ranges over [-2, 2].
        let cos2 = fourier_mode(2, FourierKind::Cos, 1.0);
        let rep = even_part_constancy(&cos2, 1000, &mut r).unwrap();
        assert!(rep.max_deviation >= 1.0);

        let c = SphericalFunction::constant(2, 1.0, 1.5);
        let rep = even_part_constancy(&c, 10, &mut r).unwrap();
        assert_eq!((rep.mean, rep.max_deviation), (3.0, 0.0));

        let g3 = SphericalFunction::constant(3, 1.0, 1.0);
        assert!(even_part_constancy(&g3, 10, &mut r).is_err());
    }
}
