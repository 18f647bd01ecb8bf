//! A DSMC-style particle ensemble on the sphere: one random quantized
//! collision per step, with moment tracking.
//!
//! The dynamics (uniform pair selection, no time variable, no cross-section)
//! is one consistent way to realize collisions that obey the conservation
//! law; conservation and relaxation statements do not depend on the rate.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::SphericalFunction;
use crate::error::{Error, Result};
use crate::geometry::{gaussian_vector, sample_uniform_sphere, SpherePoint, Vector};
use crate::kinematics::{sample_quantum_collision, CollisionPair};
use crate::rng::{substream, SimRng};

/// Initial particle law. Axes are zero-based here and one-based in the
/// textual form (`cap:1,0.785`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum InitDistribution {
    Uniform,
    /// Uniform on `{w : angle(w, e_axis) <= angle}`.
    Cap {
        axis: usize,
        angle: f64,
    },
    /// `N/2` cap particles, each followed by its antipode. In `d = 2` the
    /// pairing is kept as ensemble state.
    AntipodalPairedCap {
        axis: usize,
        angle: f64,
    },
}

impl InitDistribution {
    pub fn is_paired(&self) -> bool {
        matches!(self, InitDistribution::AntipodalPairedCap { .. })
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            InitDistribution::Uniform => Ok(()),
            InitDistribution::Cap { axis, angle } | InitDistribution::AntipodalPairedCap { axis, angle } => {
                if axis >= dim {
                    return Err(Error::invalid(format!(
                        "cap axis {} out of range for d = {dim}",
                        axis + 1
                    )));
                }
                if !(angle > 0.0 && angle <= PI) {
                    return Err(Error::invalid(format!("cap angle {angle} must lie in (0, pi]")));
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for InitDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitDistribution::Uniform => f.write_str("uniform"),
            InitDistribution::Cap { axis, angle } => write!(f, "cap:{},{angle}", axis + 1),
            InitDistribution::AntipodalPairedCap { axis, angle } => {
                write!(f, "antipodal-paired-cap:{},{angle}", axis + 1)
            }
        }
    }
}

impl FromStr for InitDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "uniform" {
            return Ok(InitDistribution::Uniform);
        }
        let (kind, args) = s.split_once(':').ok_or_else(|| {
            Error::invalid(format!(
                "unknown init '{s}'; expected uniform, cap:AXIS,ANGLE or antipodal-paired-cap:AXIS,ANGLE"
            ))
        })?;
        let (axis, angle) = args
            .split_once(',')
            .ok_or_else(|| Error::invalid(format!("'{s}': expected AXIS,ANGLE")))?;
        let axis: usize = axis
            .trim()
            .parse()
            .ok()
            .filter(|a| *a >= 1)
            .ok_or_else(|| Error::invalid(format!("'{s}': axis must be an integer >= 1")))?;
        let angle: f64 = angle
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("'{s}': bad angle")))?;
        let axis = axis - 1;
        match kind {
            "cap" => Ok(InitDistribution::Cap { axis, angle }),
            "antipodal-paired-cap" => Ok(InitDistribution::AntipodalPairedCap { axis, angle }),
            _ => Err(Error::invalid(format!("unknown init kind '{kind}'"))),
        }
    }
}

impl From<InitDistribution> for String {
    fn from(d: InitDistribution) -> String {
        d.to_string()
    }
}

impl TryFrom<String> for InitDistribution {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Uniform on the cap of half-angle `angle` around `e_axis`.
///
/// For `d >= 3` the axial coordinate `z = cos(theta)` has density
/// proportional to `(1 - z^2)^((d-3)/2)`, drawn by rejection; the remaining
/// coordinates are a uniform direction of radius `sqrt(1 - z^2)`. In `d = 2`
/// the polar angle is uniform in `[-angle, angle]`.
pub fn sample_cap<R: Rng + ?Sized>(
    dim: usize,
    radius: f64,
    axis: usize,
    angle: f64,
    rng: &mut R,
) -> Result<SpherePoint> {
    InitDistribution::Cap { axis, angle }.validate(dim)?;
    let mut coords = vec![0.0; dim];
    if dim == 2 {
        let theta = rng.random_range(-angle..=angle);
        coords[axis] = radius * theta.cos();
        coords[1 - axis] = radius * theta.sin();
        return SpherePoint::project(coords, radius);
    }
    let z_min = angle.cos();
    let exponent = (dim as f64 - 3.0) / 2.0;
    let envelope = if z_min >= 0.0 {
        (1.0 - z_min * z_min).powf(exponent)
    } else {
        1.0
    };
    let z = loop {
        let z: f64 = rng.random_range(z_min..=1.0);
        if exponent == 0.0 || rng.random::<f64>() * envelope <= (1.0 - z * z).max(0.0).powf(exponent) {
            break z;
        }
    };
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let tilde = loop {
        let v = gaussian_vector(dim - 1, rng);
        let n = v.norm();
        if n > 0.0 {
            break v.scale(rho / n);
        }
    };
    let mut t = tilde.as_slice().iter();
    for (j, c) in coords.iter_mut().enumerate() {
        *c = radius
            * if j == axis {
                z
            } else {
                *t.next().expect("d - 1 tilde coordinates")
            };
    }
    SpherePoint::project(coords, radius)
}

/// `N` particles on the sphere of radius `R` in `R^d`.
#[derive(Debug, Clone)]
pub struct Ensemble {
    particles: Vec<SpherePoint>,
    dim: usize,
    radius: f64,
    steps: u64,
    rng: SimRng,
    partners: Option<Vec<usize>>,
}

/// Draws the initial ensemble from sub-stream 0 of `seed`; the dynamics use
/// sub-stream 1.
pub fn init_ensemble(
    dim: usize,
    radius: f64,
    particles: usize,
    distribution: InitDistribution,
    seed: u64,
) -> Result<Ensemble> {
    if dim < 2 {
        return Err(Error::UnsupportedDimension {
            dim,
            reason: "spheres need d >= 2",
        });
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    if particles < 2 {
        return Err(Error::invalid("an ensemble needs at least 2 particles"));
    }
    distribution.validate(dim)?;
    let mut rng = substream(seed, 0);
    let mut points = Vec::with_capacity(particles);
    let mut partners = None;
    match distribution {
        InitDistribution::Uniform => {
            for _ in 0..particles {
                points.push(sample_uniform_sphere(dim, radius, &mut rng)?);
            }
        }
        InitDistribution::Cap { axis, angle } => {
            for _ in 0..particles {
                points.push(sample_cap(dim, radius, axis, angle, &mut rng)?);
            }
        }
        InitDistribution::AntipodalPairedCap { axis, angle } => {
            if !particles.is_multiple_of(2) {
                return Err(Error::invalid(format!(
                    "antipodal pairing needs an even particle count, got {particles}"
                )));
            }
            for _ in 0..particles / 2 {
                let p = sample_cap(dim, radius, axis, angle, &mut rng)?;
                let q = p.antipode();
                points.push(p);
                points.push(q);
            }
            if dim == 2 {
                partners = Some((0..particles).map(|i| i ^ 1).collect());
            }
        }
    }
    Ok(Ensemble {
        particles: points,
        dim,
        radius,
        steps: 0,
        rng: substream(seed, 1),
        partners,
    })
}

impl Ensemble {
    /// Same particles, collision stream taken from `seed` instead: a replica
    /// that shares every conserved quantity but follows an independent
    /// trajectory.
    pub fn with_dynamics_seed(mut self, seed: u64) -> Self {
        self.rng = substream(seed, 1);
        self
    }

    pub fn particles(&self) -> &[SpherePoint] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Antipodal partner of each particle (`d = 2` paired ensembles only).
    pub fn partners(&self) -> Option<&[usize]> {
        self.partners.as_deref()
    }

    pub fn total_momentum(&self) -> Vector {
        let mut total = vec![0.0; self.dim];
        for p in &self.particles {
            for (t, x) in total.iter_mut().zip(p.as_slice()) {
                *t += x;
            }
        }
        Vector::new(total)
    }

    /// `(1/N) sum_k g(w_k)` and the population standard deviation of
    /// `g(w_k)`. Values are evaluated in parallel and summed in particle
    /// order.
    pub fn moment(&self, g: &SphericalFunction) -> Result<(f64, f64)> {
        let values: Vec<f64> = self.particles.par_iter().map(|p| g.eval(p)).collect::<Result<_>>()?;
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Ok((mean, var.sqrt()))
    }

    /// One collision. In `d >= 3` a uniformly random unordered pair collides;
    /// in `d = 2` a uniformly random antipodal pair is scattered to a
    /// uniformly random antipodal pair. Collided particles are projected back
    /// onto the sphere.
    pub fn collision_step(&mut self) -> Result<()> {
        let n = self.particles.len();
        if self.dim == 2 {
            let Some(partners) = &self.partners else {
                return Err(Error::UnsupportedConfiguration(
                    "planar collisions of non-antipodal pairs only keep or exchange velocities, \
                     so d = 2 dynamics needs an antipodal-paired ensemble"
                        .into(),
                ));
            };
            let i = self.rng.random_range(0..n);
            let j = partners[i];
            let pair = CollisionPair::new(self.particles[i].clone(), self.particles[j].clone())?;
            let q = sample_quantum_collision(&pair, &mut self.rng);
            let out = q.out1.renormalized();
            self.particles[j] = out.antipode();
            self.particles[i] = out;
        } else {
            let i = self.rng.random_range(0..n);
            let mut j = self.rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let pair = CollisionPair::new(self.particles[i].clone(), self.particles[j].clone())?;
            let q = sample_quantum_collision(&pair, &mut self.rng);
            self.particles[i] = q.out1.renormalized();
            self.particles[j] = q.out2.renormalized();
        }
        self.steps += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSeries {
    pub descriptor: String,
    pub particles: usize,
    /// `(step, mean of g over the ensemble)`
    pub values: Vec<(u64, f64)>,
    /// Population standard deviation of `g` at each record.
    pub std_devs: Vec<f64>,
}

impl MomentSeries {
    /// `std / sqrt(N)` at record `k`.
    pub fn standard_error(&self, k: usize) -> f64 {
        self.std_devs[k] / (self.particles as f64).sqrt()
    }

    pub fn initial(&self) -> Option<f64> {
        self.values.first().map(|v| v.1)
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().map(|v| v.1)
    }
}

/// Advances `steps` collisions, recording every moment at the starting step,
/// at every multiple of `record_every` steps into the run, and at the end.
pub fn run(
    ensemble: &mut Ensemble,
    steps: u64,
    record_every: u64,
    moments: &[SphericalFunction],
) -> Result<Vec<MomentSeries>> {
    if steps == 0 || record_every == 0 {
        return Err(Error::invalid("steps and record_every must be at least 1"));
    }
    if let Some(g) = moments
        .iter()
        .find(|g| g.dim() != ensemble.dim || g.radius() != ensemble.radius)
    {
        return Err(Error::invalid(format!(
            "moment '{}' is defined on a different sphere than the ensemble",
            g.descriptor()
        )));
    }
    let mut series: Vec<MomentSeries> = moments
        .iter()
        .map(|g| MomentSeries {
            descriptor: g.descriptor().to_string(),
            particles: ensemble.len(),
            values: Vec::new(),
            std_devs: Vec::new(),
        })
        .collect();
    let record = |ensemble: &Ensemble, series: &mut Vec<MomentSeries>| -> Result<()> {
        for (s, g) in series.iter_mut().zip(moments) {
            let (mean, std) = ensemble.moment(g)?;
            s.values.push((ensemble.steps, mean));
            s.std_devs.push(std);
        }
        Ok(())
    };
    record(ensemble, &mut series)?;
    for k in 1..=steps {
        ensemble.collision_step()?;
        if k % record_every == 0 || k == steps {
            record(ensemble, &mut series)?;
        }
    }
    Ok(series)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxationReport {
    pub descriptor: String,
    pub initial: f64,
    pub final_value: f64,
    /// `max_k |value_k - initial|`
    pub max_drift: f64,
    /// Strictly increasing or strictly decreasing over all records.
    pub monotone: bool,
    pub records: usize,
}

pub fn relaxation_report(series: &MomentSeries) -> Result<RelaxationReport> {
    if series.values.len() < 2 {
        return Err(Error::invalid(format!(
            "series '{}' has {} records; need at least 2",
            series.descriptor,
            series.values.len()
        )));
    }
    let values: Vec<f64> = series.values.iter().map(|v| v.1).collect();
    let initial = values[0];
    let max_drift = values.iter().map(|v| (v - initial).abs()).fold(0.0, f64::max);
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    Ok(RelaxationReport {
        descriptor: series.descriptor.clone(),
        initial,
        final_value: values[values.len() - 1],
        max_drift,
        monotone: increasing || decreasing,
        records: values.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coord(dim: usize, radius: f64, i: usize) -> SphericalFunction {
        SphericalFunction::new(dim, radius, format!("w{}", i + 1), move |w| w[i])
    }

    #[test]
    fn init_parsing() {
        assert_eq!(
            "uniform".parse::<InitDistribution>().unwrap(),
            InitDistribution::Uniform
        );
        let cap: InitDistribution = "cap:1,0.7854".parse().unwrap();
        #[allow(clippy::approx_constant)]
        let expected = InitDistribution::Cap { axis: 0, angle: 0.7854 };
        assert_eq!(cap, expected);
        assert_eq!(cap.to_string(), "cap:1,0.7854");
        assert!("cap:0,0.5".parse::<InitDistribution>().is_err());
        assert!("disk:1,0.5".parse::<InitDistribution>().is_err());
        assert!(init_ensemble(3, 1.0, 10, InitDistribution::Cap { axis: 0, angle: 4.0 }, 1).is_err());
        assert!(init_ensemble(3, 1.0, 10, InitDistribution::Cap { axis: 3, angle: 1.0 }, 1).is_err());
    }

    #[test]
    fn cap_membership() {
        for dim in [2, 3, 5] {
            let e = init_ensemble(
                dim,
                2.0,
                2000,
                InitDistribution::Cap {
                    axis: 0,
                    angle: PI / 4.0,
                },
                3,
            )
            .unwrap();
            let bound = 2.0 * (PI / 4.0).cos() - 1e-12;
            assert!(e.particles().iter().all(|p| p.as_slice()[0] >= bound));
        }
    }

    #[test]
    fn paired_init() {
        let e = init_ensemble(
            2,
            1.0,
            100,
            InitDistribution::AntipodalPairedCap { axis: 0, angle: 0.5 },
            4,
        )
        .unwrap();
        let partners = e.partners().unwrap();
        for (a, &j) in e.particles().iter().zip(partners) {
            let b = &e.particles()[j];
            assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x + y == 0.0));
        }
        assert!(init_ensemble(
            2,
            1.0,
            5,
            InitDistribution::AntipodalPairedCap { axis: 0, angle: 0.5 },
            4
        )
        .is_err());
    }

    #[test]
    fn planar_without_pairs_is_refused() {
        let mut e = init_ensemble(2, 1.0, 10, InitDistribution::Uniform, 1).unwrap();
        assert!(matches!(e.collision_step(), Err(Error::UnsupportedConfiguration(_))));
    }

    #[test]
    fn conservation_and_recording() {
        let mut e = init_ensemble(3, 1.5, 200, InitDistribution::Cap { axis: 2, angle: 1.0 }, 8).unwrap();
        let p0 = e.total_momentum();
        let moments: Vec<_> = (0..3).map(|i| coord(3, 1.5, i)).collect();
        let series = run(&mut e, 1000, 300, &moments).unwrap();
        let steps: Vec<u64> = series[0].values.iter().map(|v| v.0).collect();
        assert_eq!(steps, vec![0, 300, 600, 900, 1000]);
        let p1 = e.total_momentum();
        assert!(p0.max_abs_diff(&p1) <= 1e-10 * 1.5 * 200.0);
        assert!(e.particles().iter().all(|p| p.residual() <= 1e-9 * 2.25));
    }

    #[test]
    fn reports() {
        let mk = |v: &[f64]| MomentSeries {
            descriptor: "g".into(),
            particles: 1,
            values: v.iter().enumerate().map(|(k, x)| (k as u64, *x)).collect(),
            std_devs: vec![0.0; v.len()],
        };
        let r = relaxation_report(&mk(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!((r.max_drift, r.monotone), (0.0, false));
        assert!(relaxation_report(&mk(&[3.0, 2.0, 1.5, 1.2])).unwrap().monotone);
        let noisy = relaxation_report(&mk(&[1.0, 1.3, 0.8, 1.1])).unwrap();
        assert!(!noisy.monotone);
        assert!((noisy.max_drift - 0.3).abs() < 1e-15);
        assert!(relaxation_report(&mk(&[1.0])).is_err());
    }
}
