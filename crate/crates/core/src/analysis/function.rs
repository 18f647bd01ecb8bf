use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::SpherePoint;

type Evaluator = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;

/// A real function on the sphere of radius `R` in `R^d`.
///
/// Evaluation is deterministic; cloning shares the evaluator.
#[derive(Clone)]
pub struct SphericalFunction {
    eval: Arc<Evaluator>,
    dim: usize,
    radius: f64,
    descriptor: String,
}

impl SphericalFunction {
    pub fn new(
        dim: usize,
        radius: f64,
        descriptor: impl Into<String>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::fallible(dim, radius, descriptor, move |x| Ok(f(x)))
    }

    pub fn fallible(
        dim: usize,
        radius: f64,
        descriptor: impl Into<String>,
        f: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        SphericalFunction {
            eval: Arc::new(f),
            dim,
            radius,
            descriptor: descriptor.into(),
        }
    }

    pub fn constant(dim: usize, radius: f64, c: f64) -> Self {
        Self::new(dim, radius, format!("{c}"), move |_| c)
    }

    /// `A + B . omega`
    pub fn affine(radius: f64, a: f64, b: Vec<f64>) -> Self {
        let descriptor = format!("{a} + {b:?}.w");
        Self::new(b.len(), radius, descriptor, move |x| {
            a + b.iter().zip(x).map(|(bi, xi)| bi * xi).sum::<f64>()
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn with_descriptor(mut self, descriptor: impl Into<String>) -> Self {
        self.descriptor = descriptor.into();
        self
    }

    pub fn eval(&self, p: &SpherePoint) -> Result<f64> {
        self.eval_coords(p.as_slice())
    }

    /// Evaluates at raw coordinates, which are assumed to lie on the sphere.
    pub fn eval_coords(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "function '{}' is defined in d = {}, point has d = {}",
                self.descriptor,
                self.dim,
                x.len()
            )));
        }
        (self.eval)(x)
    }
}

impl fmt::Debug for SphericalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphericalFunction")
            .field("descriptor", &self.descriptor)
            .field("dim", &self.dim)
            .field("radius", &self.radius)
            .finish()
    }
}
