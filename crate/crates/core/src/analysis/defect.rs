//! The defect functional `g(w) + g(w_*) - g(w') - g(w_*')` and its Monte
//! Carlo statistics.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SphericalFunction;
use crate::error::{Error, Result};
use crate::geometry::{sample_uniform_sphere, SpherePoint};
use crate::kinematics::{
    construct_quadruple, is_admissible_classical, sample_classical_collision, sample_quantum_collision, sample_seed,
    ClassicalQuadruple, CollisionPair, CollisionQuadruple, MOMENTUM_EPS,
};
use crate::rng::{substream, SimRng};

/// How random admissible quadruples are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum QuadrupleSampler {
    /// Two uniform sphere points and a uniform admissible direction.
    Pairs,
    /// The explicit constructor applied to a uniform seed (d >= 3).
    Construct,
    /// A uniform antipodal pair scattered to a uniform antipodal pair.
    Antipodal,
    /// `Construct` and `Pairs` alternating by draw parity.
    Mixed,
}

impl QuadrupleSampler {
    pub fn default_for(dim: usize) -> Self {
        if dim == 2 {
            QuadrupleSampler::Antipodal
        } else {
            QuadrupleSampler::Pairs
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QuadrupleSampler::Pairs => "pairs",
            QuadrupleSampler::Construct => "construct",
            QuadrupleSampler::Antipodal => "antipodal",
            QuadrupleSampler::Mixed => "mixed",
        }
    }

    /// Draws quadruple number `index`; `Mixed` uses the index parity.
    pub fn sample<R: Rng + ?Sized>(
        self,
        dim: usize,
        radius: f64,
        index: u64,
        rng: &mut R,
    ) -> Result<CollisionQuadruple> {
        match self {
            QuadrupleSampler::Pairs => {
                let a = sample_uniform_sphere(dim, radius, rng)?;
                let b = sample_uniform_sphere(dim, radius, rng)?;
                Ok(sample_quantum_collision(&CollisionPair::new(a, b)?, rng))
            }
            QuadrupleSampler::Antipodal => {
                let a = sample_uniform_sphere(dim, radius, rng)?;
                let b = a.antipode();
                Ok(sample_quantum_collision(&CollisionPair::new(a, b)?, rng))
            }
            QuadrupleSampler::Construct => {
                if dim < 3 {
                    return Err(Error::UnsupportedDimension {
                        dim,
                        reason: "constructor sampling needs d >= 3",
                    });
                }
                let seed = sample_seed(dim, rng);
                let (q, _) = construct_quadruple(&seed)?;
                Ok(q.map_points(|p| SpherePoint::new_unchecked(p.coords().scale(radius), radius)))
            }
            QuadrupleSampler::Mixed => {
                let inner = if index.is_multiple_of(2) {
                    QuadrupleSampler::Construct
                } else {
                    QuadrupleSampler::Pairs
                };
                inner.sample(dim, radius, index, rng)
            }
        }
    }
}

impl fmt::Display for QuadrupleSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuadrupleSampler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairs" => Ok(QuadrupleSampler::Pairs),
            "construct" => Ok(QuadrupleSampler::Construct),
            "antipodal" => Ok(QuadrupleSampler::Antipodal),
            "mixed" => Ok(QuadrupleSampler::Mixed),
            other => Err(Error::invalid(format!("unknown sampler '{other}'"))),
        }
    }
}

/// `count` quadruples; draw `i` uses sub-stream `i` of `seed`, so the list is
/// the same for any number of worker threads.
pub fn sample_quadruples(
    sampler: QuadrupleSampler,
    dim: usize,
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<CollisionQuadruple>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng: SimRng = substream(seed, i);
            sampler.sample(dim, radius, i, &mut rng)
        })
        .collect()
}

/// `g(in1) + g(in2) - g(out1) - g(out2)`; the quadruple must be admissible.
pub fn defect_on_quadruple(g: &SphericalFunction, q: &CollisionQuadruple) -> Result<f64> {
    q.ensure_admissible(MOMENTUM_EPS)?;
    raw_defect(g, q)
}

fn raw_defect(g: &SphericalFunction, q: &CollisionQuadruple) -> Result<f64> {
    Ok(g.eval(&q.in1)? + g.eval(&q.in2)? - g.eval(&q.out1)? - g.eval(&q.out2)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub function: String,
    pub sampler: String,
    pub seed: u64,
    pub sample_count: usize,
    pub mean_abs_defect: f64,
    pub max_abs_defect: f64,
    pub rms_defect: f64,
    /// Root-mean-square of `g` over every sampled point; the normalization
    /// for the scale-free statistics below.
    pub function_rms: f64,
    pub normalized_mean_defect: f64,
    pub normalized_max_defect: f64,
}

impl DefectReport {
    fn from_samples(
        function: &str,
        sampler: &str,
        seed: u64,
        defects: &[f64],
        sum_sq_values: f64,
        value_count: usize,
    ) -> Result<Self> {
        if defects.is_empty() {
            return Err(Error::invalid("need at least one sample"));
        }
        let n = defects.len() as f64;
        let mean_abs_defect = defects.iter().map(|d| d.abs()).sum::<f64>() / n;
        let max_abs_defect = defects.iter().map(|d| d.abs()).fold(0.0, f64::max);
        let rms_defect = (defects.iter().map(|d| d * d).sum::<f64>() / n).sqrt();
        let function_rms = (sum_sq_values / value_count as f64).sqrt();
        let normalize = |x: f64| if function_rms > 0.0 { x / function_rms } else { 0.0 };
        Ok(DefectReport {
            function: function.to_string(),
            sampler: sampler.to_string(),
            seed,
            sample_count: defects.len(),
            mean_abs_defect,
            max_abs_defect,
            rms_defect,
            function_rms,
            normalized_mean_defect: normalize(mean_abs_defect),
            normalized_max_defect: normalize(max_abs_defect),
        })
    }
}

/// Defect statistics of `g` over `count` sampled quadruples.
pub fn mc_defect(g: &SphericalFunction, count: usize, sampler: QuadrupleSampler, seed: u64) -> Result<DefectReport> {
    if count == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let rows: Vec<(f64, f64)> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng: SimRng = substream(seed, i);
            let q = sampler.sample(g.dim(), g.radius(), i, &mut rng)?;
            q.ensure_admissible(MOMENTUM_EPS)?;
            let values = [g.eval(&q.in1)?, g.eval(&q.in2)?, g.eval(&q.out1)?, g.eval(&q.out2)?];
            let defect = values[0] + values[1] - values[2] - values[3];
            Ok((defect, values.iter().map(|v| v * v).sum()))
        })
        .collect::<Result<_>>()?;
    let defects: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let sum_sq: f64 = rows.iter().map(|r| r.1).sum();
    DefectReport::from_samples(g.descriptor(), sampler.as_str(), seed, &defects, sum_sq, 4 * count)
}

/// Classical defect of a function on `R^d`; the quadruple must conserve
/// momentum and energy.
pub fn classical_defect<F>(g: &F, q: &ClassicalQuadruple) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    let report = is_admissible_classical(q, MOMENTUM_EPS);
    if !report.admissible {
        return Err(Error::invalid(format!(
            "inadmissible classical quadruple: momentum residual {:e}, energy residual {:e}",
            report.momentum_residual, report.energy_residual
        )));
    }
    Ok(g(q.in1.as_slice())? + g(q.in2.as_slice())? - g(q.out1.as_slice())? - g(q.out2.as_slice())?)
}

/// Defect statistics over `count` classical collisions of Gaussian
/// velocities with standard deviation `scale` per coordinate.
pub fn classical_mc_defect<F>(
    g: &F,
    descriptor: &str,
    dim: usize,
    scale: f64,
    count: usize,
    seed: u64,
) -> Result<DefectReport>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + ?Sized,
{
    if count == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    if dim < 2 {
        return Err(Error::UnsupportedDimension {
            dim,
            reason: "classical collisions need d >= 2",
        });
    }
    let rows: Vec<(f64, f64)> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng: SimRng = substream(seed, i);
            let q = sample_classical_collision(dim, scale, &mut rng);
            let defect = classical_defect(g, &q)?;
            let sum_sq = q
                .points()
                .iter()
                .map(|p| g(p.as_slice()).map(|v| v * v))
                .sum::<Result<f64>>()?;
            Ok((defect, sum_sq))
        })
        .collect::<Result<_>>()?;
    let defects: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let sum_sq: f64 = rows.iter().map(|r| r.1).sum();
    DefectReport::from_samples(descriptor, "classical", seed, &defects, sum_sq, 4 * count)
}
