//! Additivity tests and linear fits for scalar functions `h` on `[-a, a]`,
//! and the reduction of a single-coordinate parity component `g_i` of an
//! invariant to such a scalar function.

use rand::Rng;
use serde::Serialize;

use super::SphericalFunction;
use crate::error::{Error, Result};
use crate::geometry::{gaussian_vector, SpherePoint};

pub const DEFAULT_CAUCHY_TOL: f64 = 1e-8;
/// Tilde positions probed per level in [`reduce_invariant_to_scalar`].
pub const TILDE_PROBES: usize = 8;
const REDUCTION_TOL: f64 = 1e-9;
/// Cap on synthesized triples per side of the sample grid (pairs scale as
/// its square).
const MAX_PAIR_SIDE: usize = 1500;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdditivityDefect {
    pub triples: usize,
    pub mean_defect: f64,
    pub max_defect: f64,
    /// The `(x, y)` attaining `max_defect`.
    pub worst: Option<(f64, f64)>,
}

impl AdditivityDefect {
    fn from_defects(defects: impl Iterator<Item = ((f64, f64), f64)>) -> Self {
        let mut triples = 0;
        let mut sum = 0.0;
        let mut max_defect = 0.0;
        let mut worst = None;
        for (xy, d) in defects {
            triples += 1;
            sum += d;
            if worst.is_none() || d > max_defect {
                max_defect = d;
                worst = Some(xy);
            }
        }
        AdditivityDefect {
            triples,
            mean_defect: if triples > 0 { sum / triples as f64 } else { 0.0 },
            max_defect,
            worst,
        }
    }
}

fn check_half_width(a: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!("domain half-width must be positive, got {a}")));
    }
    Ok(())
}

fn in_domain(x: f64, a: f64) -> bool {
    x.abs() <= a
}

/// `|h(x + y) - h(x) - h(y)|` over the given pairs; `x`, `y` and `x + y`
/// must all lie in `[-a, a]`.
pub fn cauchy_additivity_defect<H>(h: H, a: f64, pairs: &[(f64, f64)]) -> Result<AdditivityDefect>
where
    H: Fn(f64) -> Result<f64>,
{
    check_half_width(a)?;
    if let Some((x, y)) = pairs
        .iter()
        .find(|(x, y)| !(in_domain(*x, a) && in_domain(*y, a) && in_domain(x + y, a)))
    {
        return Err(Error::invalid(format!("pair ({x}, {y}) leaves [-{a}, {a}]")));
    }
    let defects = pairs
        .iter()
        .map(|&(x, y)| Ok(((x, y), (h(x + y)? - h(x)? - h(y)?).abs())))
        .collect::<Result<Vec<_>>>()?;
    Ok(AdditivityDefect::from_defects(defects.into_iter()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyFit {
    pub c: f64,
    pub a: f64,
    pub sample_count: usize,
    /// rms of `h(x) - c x` over the samples.
    pub rms_residual: f64,
    pub additivity: AdditivityDefect,
    pub tolerance: f64,
    /// Linear within tolerance: triples exist, and both the additivity
    /// defect and the residual are at most `tolerance * (1 + max|h|)`.
    pub reliable: bool,
}

/// [`cauchy_fit_with_tolerance`] at the default tolerance.
pub fn cauchy_fit(samples: &[(f64, f64)], a: f64) -> Result<CauchyFit> {
    cauchy_fit_with_tolerance(samples, a, DEFAULT_CAUCHY_TOL)
}

/// Slope through the origin `c = sum x h / sum x^2`, with additivity checked
/// on triples synthesized from the samples: for sample pairs `(x, y)` whose
/// sum lies inside the sampled range, `h(x + y)` is read off the samples by
/// piecewise-linear interpolation (exact when `x + y` is itself a sample, and
/// for linear `h`).
pub fn cauchy_fit_with_tolerance(samples: &[(f64, f64)], a: f64, tolerance: f64) -> Result<CauchyFit> {
    check_half_width(a)?;
    if let Some((x, _)) = samples.iter().find(|(x, _)| !in_domain(*x, a)) {
        return Err(Error::invalid(format!("sample x = {x} lies outside [-{a}, {a}]")));
    }
    if let Some((x, _)) = samples.iter().find(|(x, h)| !(x.is_finite() && h.is_finite())) {
        return Err(Error::invalid(format!("non-finite sample at x = {x}")));
    }
    let mut sorted: Vec<(f64, f64)> = samples.to_vec();
    sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
    sorted.dedup_by(|p, q| p.0 == q.0);
    let distinct_nonzero = sorted.iter().filter(|(x, _)| *x != 0.0).count();
    if distinct_nonzero < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 distinct nonzero x, got {distinct_nonzero}"
        )));
    }

    let sxx: f64 = samples.iter().map(|(x, _)| x * x).sum();
    let sxh: f64 = samples.iter().map(|(x, h)| x * h).sum();
    let c = sxh / sxx;
    let rms_residual = (samples.iter().map(|(x, h)| (h - c * x).powi(2)).sum::<f64>() / samples.len() as f64).sqrt();

    let (lo, hi) = (sorted[0].0, sorted[sorted.len() - 1].0);
    let interpolate = |s: f64| -> Option<f64> {
        if s < lo || s > hi {
            return None;
        }
        let k = sorted.partition_point(|(x, _)| *x < s);
        let (x1, h1) = sorted[k];
        if x1 == s || k == 0 {
            return Some(h1);
        }
        let (x0, h0) = sorted[k - 1];
        Some(h0 + (h1 - h0) * (s - x0) / (x1 - x0))
    };
    let stride = sorted.len().div_ceil(MAX_PAIR_SIDE);
    let picks: Vec<(f64, f64)> = sorted.iter().step_by(stride).copied().collect();
    let mut defects = Vec::new();
    for (i, &(x, hx)) in picks.iter().enumerate() {
        for &(y, hy) in &picks[i..] {
            if let Some(hs) = interpolate(x + y) {
                if in_domain(x + y, a) {
                    defects.push(((x, y), (hs - hx - hy).abs()));
                }
            }
        }
    }
    let additivity = AdditivityDefect::from_defects(defects.into_iter());
    let scale = 1.0 + sorted.iter().map(|(_, h)| h.abs()).fold(0.0, f64::max);
    let reliable =
        additivity.triples > 0 && additivity.max_defect <= tolerance * scale && rms_residual <= tolerance * scale;
    Ok(CauchyFit {
        c,
        a,
        sample_count: samples.len(),
        rms_residual,
        additivity,
        tolerance,
        reliable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarReduction {
    /// Zero-based coordinate.
    pub axis: usize,
    /// `(x, h(x))` on an evenly spaced grid of `[-R, R]`.
    pub samples: Vec<(f64, f64)>,
    /// Largest spread of `g_i` across tilde positions at a fixed level.
    pub max_tilde_spread: f64,
    /// Largest violation of odd-in-`axis`, even-elsewhere symmetry.
    pub max_parity_violation: f64,
}

/// Checks that `g_i` depends only on coordinate `axis` (probing
/// [`TILDE_PROBES`] random positions of the remaining coordinates per level)
/// and has the parity of a single-coordinate component, then tabulates
/// `h(x) = g_i(w)` for `w_axis = x` on `levels` evenly spaced values. `h(0)`
/// is set to exactly 0.
pub fn reduce_invariant_to_scalar<R: Rng + ?Sized>(
    g_i: &SphericalFunction,
    axis: usize,
    levels: usize,
    rng: &mut R,
) -> Result<ScalarReduction> {
    let dim = g_i.dim();
    let radius = g_i.radius();
    if dim < 3 {
        return Err(Error::UnsupportedDimension {
            dim,
            reason: "the scalar reduction uses the freedom of d >= 3",
        });
    }
    if axis >= dim {
        return Err(Error::invalid(format!("axis {axis} out of range for d = {dim}")));
    }
    if levels < 2 {
        return Err(Error::invalid("need at least 2 levels"));
    }
    let mut samples = Vec::with_capacity(levels);
    let mut max_tilde_spread: f64 = 0.0;
    let mut max_parity_violation: f64 = 0.0;
    for k in 0..levels {
        let x = (-radius + 2.0 * radius * k as f64 / (levels - 1) as f64).clamp(-radius, radius);
        let tilde_radius = (radius * radius - x * x).max(0.0).sqrt();
        let mut values = Vec::with_capacity(TILDE_PROBES);
        for _ in 0..TILDE_PROBES {
            let dir = loop {
                let v = gaussian_vector(dim - 1, rng);
                let n = v.norm();
                if n > 0.0 {
                    break v.scale(1.0 / n);
                }
            };
            let mut coords = Vec::with_capacity(dim);
            coords.extend_from_slice(&dir.as_slice()[..axis]);
            coords.push(x);
            coords.extend_from_slice(&dir.as_slice()[axis..]);
            for (j, c) in coords.iter_mut().enumerate() {
                if j != axis {
                    *c *= tilde_radius;
                }
            }
            let p = SpherePoint::new_unchecked(coords, radius);
            let value = g_i.eval(&p)?;
            let scale = 1.0 + value.abs();
            for j in 0..dim {
                let flipped = g_i.eval(&p.flip(j))?;
                let expected = if j == axis { -value } else { value };
                max_parity_violation = max_parity_violation.max((flipped - expected).abs() / scale);
            }
            values.push(value);
        }
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        max_tilde_spread = max_tilde_spread.max((hi - lo) / (1.0 + hi.abs().max(lo.abs())));
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        samples.push((x, if x == 0.0 { 0.0 } else { mean }));
    }
    if max_parity_violation > REDUCTION_TOL {
        return Err(Error::NotAnInvariant(format!(
            "'{}' is not odd in w{} and even elsewhere (violation {max_parity_violation:.3e})",
            g_i.descriptor(),
            axis + 1
        )));
    }
    if max_tilde_spread > REDUCTION_TOL {
        return Err(Error::NotAnInvariant(format!(
            "'{}' varies with the coordinates other than w{} (spread {max_tilde_spread:.3e})",
            g_i.descriptor(),
            axis + 1
        )));
    }
    Ok(ScalarReduction {
        axis,
        samples,
        max_tilde_spread,
        max_parity_violation,
    })
}
