//! Post-collision maps on the sphere (quantized) and in `R^d` (classical),
//! admissibility checks, and the explicit admissible-quadruple constructor
//! that ties a scalar four-term relation `s + t = u + v` to a collision.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, is_degenerate, sample_orthogonal_direction, Direction, SpherePoint, Vector};

/// Momentum tolerance for the quadruple invariants.
pub const MOMENTUM_EPS: f64 = 1e-9;

/// Orthogonality tolerance for the outgoing direction, relative to `1 + R`.
pub const ORTHOGONALITY_EPS: f64 = 1e-12;

/// Tolerance on `s + t - u - v` for a [`QuadrupleSeed`].
pub const SEED_SUM_EPS: f64 = 1e-12;

/// Square-root arguments in `[-SQRT_CLAMP, 0)` are rounded up to zero.
pub const SQRT_CLAMP: f64 = 1e-15;

/// Ingoing velocities `(omega, omega_*)` on a common sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionPair {
    first: SpherePoint,
    second: SpherePoint,
}

impl CollisionPair {
    pub fn new(first: SpherePoint, second: SpherePoint) -> Result<Self> {
        if first.dim() != second.dim() {
            return Err(Error::invalid(format!(
                "pair dimension mismatch: {} vs {}",
                first.dim(),
                second.dim()
            )));
        }
        if first.radius() != second.radius() {
            return Err(Error::invalid(format!(
                "pair radius mismatch: {} vs {}",
                first.radius(),
                second.radius()
            )));
        }
        Ok(CollisionPair { first, second })
    }

    pub fn first(&self) -> &SpherePoint {
        &self.first
    }

    pub fn second(&self) -> &SpherePoint {
        &self.second
    }

    pub fn dim(&self) -> usize {
        self.first.dim()
    }

    pub fn radius(&self) -> f64 {
        self.first.radius()
    }

    /// `(omega + omega_*) / 2`
    pub fn midpoint(&self) -> Vector {
        (self.first.coords() + self.second.coords()).scale(0.5)
    }

    pub fn is_antipodal(&self) -> bool {
        is_degenerate(&self.midpoint())
    }
}

/// `(omega, omega_*, omega', omega_*')`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionQuadruple {
    pub in1: SpherePoint,
    pub in2: SpherePoint,
    pub out1: SpherePoint,
    pub out2: SpherePoint,
}

impl CollisionQuadruple {
    /// Builds a quadruple and checks admissibility at [`MOMENTUM_EPS`].
    pub fn new(in1: SpherePoint, in2: SpherePoint, out1: SpherePoint, out2: SpherePoint) -> Result<Self> {
        let q = Self::new_unchecked(in1, in2, out1, out2);
        q.ensure_admissible(MOMENTUM_EPS)?;
        Ok(q)
    }

    pub fn new_unchecked(in1: SpherePoint, in2: SpherePoint, out1: SpherePoint, out2: SpherePoint) -> Self {
        CollisionQuadruple { in1, in2, out1, out2 }
    }

    pub fn points(&self) -> [&SpherePoint; 4] {
        [&self.in1, &self.in2, &self.out1, &self.out2]
    }

    pub fn dim(&self) -> usize {
        self.in1.dim()
    }

    pub fn radius(&self) -> f64 {
        self.in1.radius()
    }

    pub fn ensure_admissible(&self, tol: f64) -> Result<()> {
        let report = is_admissible_quantum(self, tol);
        if report.admissible {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "inadmissible quadruple at tol {tol:e}: momentum residual {:e}, sphere residuals {:?}",
                report.momentum_residual, report.sphere_residuals
            )))
        }
    }

    /// Applies `f` to every point, e.g. a coordinate flip or a scaling.
    pub fn map_points(&self, f: impl Fn(&SpherePoint) -> SpherePoint) -> CollisionQuadruple {
        CollisionQuadruple {
            in1: f(&self.in1),
            in2: f(&self.in2),
            out1: f(&self.out1),
            out2: f(&self.out2),
        }
    }
}

/// `(v, v_*, v', v_*')` in `R^d`, no sphere constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalQuadruple {
    pub in1: Vector,
    pub in2: Vector,
    pub out1: Vector,
    pub out2: Vector,
}

impl ClassicalQuadruple {
    pub fn points(&self) -> [&Vector; 4] {
        [&self.in1, &self.in2, &self.out1, &self.out2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumAdmissibility {
    pub admissible: bool,
    /// `|in1 + in2 - out1 - out2|`
    pub momentum_residual: f64,
    /// `| |x|^2 - R^2 |` for in1, in2, out1, out2.
    pub sphere_residuals: [f64; 4],
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalAdmissibility {
    pub admissible: bool,
    pub momentum_residual: f64,
    /// `| |v|^2 + |v_*|^2 - |v'|^2 - |v_*'|^2 |`
    pub energy_residual: f64,
    pub tolerance: f64,
}

/// Outgoing velocities `m +/- (|omega - omega_*| / 2) n` with
/// `m = (omega + omega_*) / 2`. The direction must be orthogonal to `m`
/// (vacuous when `m = 0`).
pub fn post_collision_quantum(pair: &CollisionPair, n: &Direction) -> Result<CollisionQuadruple> {
    if n.dim() != pair.dim() {
        return Err(Error::invalid(format!(
            "direction has dimension {}, pair has {}",
            n.dim(),
            pair.dim()
        )));
    }
    let radius = pair.radius();
    let m = pair.midpoint();
    let overlap = n.as_vector().dot(&m).abs();
    if overlap > ORTHOGONALITY_EPS * (1.0 + radius) {
        return Err(Error::invalid(format!(
            "direction is not orthogonal to (omega + omega_*)/2: |n . m| = {overlap:e}"
        )));
    }
    let half_gap = 0.5 * (pair.first.coords() - pair.second.coords()).norm();
    let out1 = m.add_scaled(half_gap, n.as_vector());
    let out2 = m.add_scaled(-half_gap, n.as_vector());
    Ok(CollisionQuadruple {
        in1: pair.first.clone(),
        in2: pair.second.clone(),
        out1: SpherePoint::new_unchecked(out1, radius),
        out2: SpherePoint::new_unchecked(out2, radius),
    })
}

/// Random quantized collision: a uniform direction in the orthogonal
/// complement of `omega + omega_*` (the whole sphere for antipodal pairs).
pub fn sample_quantum_collision<R: Rng + ?Sized>(pair: &CollisionPair, rng: &mut R) -> CollisionQuadruple {
    let n = sample_orthogonal_direction(&pair.midpoint(), rng);
    post_collision_quantum(pair, &n).expect("sampled direction is orthogonal by construction")
}

/// Classical elastic collision with an arbitrary unit direction.
pub fn post_collision_classical(v: &Vector, v_star: &Vector, n: &Vector) -> Result<ClassicalQuadruple> {
    v.ensure_same_dim(v_star)?;
    v.ensure_same_dim(n)?;
    let unit = Direction::new(n.clone())?;
    let mid = (v + v_star).scale(0.5);
    let half_gap = 0.5 * (v - v_star).norm();
    Ok(ClassicalQuadruple {
        in1: v.clone(),
        in2: v_star.clone(),
        out1: mid.add_scaled(half_gap, unit.as_vector()),
        out2: mid.add_scaled(-half_gap, unit.as_vector()),
    })
}

/// Classical collision of two standard-normal velocities scaled by `scale`,
/// with a uniform direction on the unit sphere.
pub fn sample_classical_collision<R: Rng + ?Sized>(dim: usize, scale: f64, rng: &mut R) -> ClassicalQuadruple {
    let v = geometry::gaussian_vector(dim, rng).scale(scale);
    let v_star = geometry::gaussian_vector(dim, rng).scale(scale);
    let n = sample_orthogonal_direction(&Vector::zeros(dim), rng);
    post_collision_classical(&v, &v_star, n.as_vector()).expect("unit direction by construction")
}

pub fn is_admissible_quantum(q: &CollisionQuadruple, tol: f64) -> QuantumAdmissibility {
    let radius = q.radius();
    let momentum = &(q.in1.coords() + q.in2.coords()) - &(q.out1.coords() + q.out2.coords());
    let momentum_residual = momentum.norm();
    let sphere_residuals = q.points().map(|p| (p.coords().norm_sq() - radius * radius).abs());
    let same_shape = q.points().iter().all(|p| p.dim() == q.dim() && p.radius() == radius);
    let admissible =
        same_shape && momentum_residual <= tol * radius && sphere_residuals.iter().all(|r| *r <= tol * radius * radius);
    QuantumAdmissibility {
        admissible,
        momentum_residual,
        sphere_residuals,
        tolerance: tol,
    }
}

pub fn is_admissible_classical(q: &ClassicalQuadruple, tol: f64) -> ClassicalAdmissibility {
    let momentum = &(&q.in1 + &q.in2) - &(&q.out1 + &q.out2);
    let momentum_residual = momentum.norm();
    let energy_in = q.in1.norm_sq() + q.in2.norm_sq();
    let energy_out = q.out1.norm_sq() + q.out2.norm_sq();
    let energy_residual = (energy_in - energy_out).abs();
    let admissible =
        momentum_residual <= tol * (1.0 + q.in1.norm() + q.in2.norm()) && energy_residual <= tol * (1.0 + energy_in);
    ClassicalAdmissibility {
        admissible,
        momentum_residual,
        energy_residual,
        tolerance: tol,
    }
}

/// Four scalars with `s + t = u + v`, stored in canonical order
/// `s <= u <= v <= t`, plus the coordinate that carries them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadrupleSeed {
    pub s: f64,
    pub t: f64,
    pub u: f64,
    pub v: f64,
    /// Zero-based coordinate index.
    pub axis: usize,
    pub dim: usize,
}

impl QuadrupleSeed {
    /// Validates and reorders. The relation is symmetric under swapping `s`
    /// and `t`, swapping `u` and `v`, and exchanging the two pairs; since both
    /// pairs share a midpoint, the wider pair contains the narrower one and
    /// becomes `(s, t)`.
    pub fn new(s: f64, t: f64, u: f64, v: f64, axis: usize, dim: usize) -> Result<Self> {
        for (name, x) in [("s", s), ("t", t), ("u", u), ("v", v)] {
            if !(-1.0..=1.0).contains(&x) {
                return Err(Error::invalid(format!("{name} = {x} is outside [-1, 1]")));
            }
        }
        let mismatch = (s + t - u - v).abs();
        if mismatch > SEED_SUM_EPS {
            return Err(Error::invalid(format!(
                "s + t - u - v = {mismatch:e} exceeds {SEED_SUM_EPS:e}"
            )));
        }
        if axis >= dim {
            return Err(Error::invalid(format!("axis {axis} out of range for d = {dim}")));
        }
        let (a_lo, a_hi) = (s.min(t), s.max(t));
        let (b_lo, b_hi) = (u.min(v), u.max(v));
        let ((s, t), (u, v)) = if a_hi - a_lo >= b_hi - b_lo {
            ((a_lo, a_hi), (b_lo, b_hi))
        } else {
            ((b_lo, b_hi), (a_lo, a_hi))
        };
        Ok(QuadrupleSeed { s, t, u, v, axis, dim })
    }

    pub fn is_degenerate(&self) -> bool {
        self.s == self.t
    }
}

/// Intermediate vectors of the construction: `(s, sigma)`, `(t, tau)`,
/// `(u, mu)`, `(v, nu)` in `R x R^{d-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionTrace {
    pub lambda: f64,
    pub sigma: Vector,
    pub tau: Vector,
    pub mu: Vector,
    pub nu: Vector,
    /// The two square-root arguments `1 - u^2 - a^2` and `1 - v^2 - b^2`
    /// before clamping; analytically equal.
    pub sqrt_args: [f64; 2],
}

/// `lambda = (1 + (v - u)/(t - s)) / 2`, which interpolates
/// `lambda s + (1 - lambda) t = u` and `(1 - lambda) s + lambda t = v`.
pub fn lambda_parameter(seed: &QuadrupleSeed) -> Result<f64> {
    if seed.is_degenerate() {
        return Err(Error::DegenerateSeed(seed.s));
    }
    Ok(0.5 * (1.0 + (seed.v - seed.u) / (seed.t - seed.s)))
}

fn clamped_sqrt(x: f64) -> Result<f64> {
    if x >= 0.0 {
        Ok(x.sqrt())
    } else if x >= -SQRT_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::invalid(format!("negative square-root argument {x:e}")))
    }
}

/// Builds an admissible unit-sphere quadruple whose `axis` coordinates are
/// `(s, t, u, v)`. Requires `d >= 3`: the outgoing tilde-vectors need two
/// free coordinates.
pub fn construct_quadruple(seed: &QuadrupleSeed) -> Result<(CollisionQuadruple, ConstructionTrace)> {
    let dim = seed.dim;
    if dim < 3 {
        return Err(Error::UnsupportedDimension {
            dim,
            reason: "the quadruple construction needs d >= 3",
        });
    }
    let tilde_dim = dim - 1;
    let tilde = |a: f64, b: f64| {
        let mut x = Vector::zeros(tilde_dim).into_inner();
        x[0] = a;
        x[1] = b;
        Vector::new(x)
    };
    let place = |scalar: f64, rest: &Vector| {
        let mut coords = Vec::with_capacity(dim);
        coords.extend_from_slice(&rest.as_slice()[..seed.axis]);
        coords.push(scalar);
        coords.extend_from_slice(&rest.as_slice()[seed.axis..]);
        SpherePoint::new_unchecked(coords, 1.0)
    };

    let root_s = clamped_sqrt(1.0 - seed.s * seed.s)?;
    let sigma = tilde(root_s, 0.0);
    if seed.is_degenerate() {
        let p = place(seed.s, &sigma);
        let q = CollisionQuadruple::new_unchecked(p.clone(), p.clone(), p.clone(), p);
        let trace = ConstructionTrace {
            lambda: 1.0,
            sigma: sigma.clone(),
            tau: sigma.clone(),
            mu: sigma.clone(),
            nu: sigma,
            sqrt_args: [0.0, 0.0],
        };
        return Ok((q, trace));
    }

    let root_t = clamped_sqrt(1.0 - seed.t * seed.t)?;
    let tau = tilde(root_t, 0.0);
    let lambda = lambda_parameter(seed)?;
    // Concavity of z -> sqrt(1 - z^2) gives a <= sqrt(1 - u^2), b <= sqrt(1 - v^2).
    let a = lambda * root_s + (1.0 - lambda) * root_t;
    let b = (1.0 - lambda) * root_s + lambda * root_t;
    let arg_u = 1.0 - seed.u * seed.u - a * a;
    let arg_v = 1.0 - seed.v * seed.v - b * b;
    // The two arguments agree analytically; sharing their mean keeps the
    // second tilde-coordinates exact negatives, so momentum balances exactly
    // even where the square root amplifies rounding near zero.
    let height = clamped_sqrt(0.5 * (arg_u + arg_v))?;
    let mu = tilde(a, -height);
    let nu = tilde(b, height);

    let q = CollisionQuadruple::new_unchecked(
        place(seed.s, &sigma),
        place(seed.t, &tau),
        place(seed.u, &mu),
        place(seed.v, &nu),
    );
    let trace = ConstructionTrace {
        lambda,
        sigma,
        tau,
        mu,
        nu,
        sqrt_args: [arg_u, arg_v],
    };
    Ok((q, trace))
}

/// Uniform random seed: `(s, t)` uniform on `[-1, 1]^2`, `u` uniform between
/// them, `v = s + t - u`, and a uniform axis.
pub fn sample_seed<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> QuadrupleSeed {
    loop {
        let s: f64 = rng.random_range(-1.0..=1.0);
        let t: f64 = rng.random_range(-1.0..=1.0);
        let (lo, hi) = (s.min(t), s.max(t));
        let u = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let v = (s + t - u).clamp(lo, hi);
        let axis = rng.random_range(0..dim);
        if let Ok(seed) = QuadrupleSeed::new(s, t, u, v, axis, dim) {
            return seed;
        }
    }
}
