//! Finite function bases used to discretize the invariance constraint:
//! Fourier modes on the circle, real spherical harmonics on the 2-sphere,
//! and monomials of bounded degree in higher dimensions.

use std::f64::consts::PI;

use super::SphericalFunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierKind {
    Cos,
    Sin,
}

/// `(x + i y)^k / R^k`, i.e. `(cos k theta, sin k theta)`.
fn unit_power(x: f64, y: f64, radius: f64, k: u32) -> (f64, f64) {
    let (ux, uy) = (x / radius, y / radius);
    let (mut re, mut im) = (1.0, 0.0);
    for _ in 0..k {
        (re, im) = (re * ux - im * uy, re * uy + im * ux);
    }
    (re, im)
}

/// `cos k theta` or `sin k theta` for `w = R (cos theta, sin theta)`.
pub fn fourier_mode(k: u32, kind: FourierKind, radius: f64) -> SphericalFunction {
    let name = match kind {
        FourierKind::Cos => format!("cos({k}t)"),
        FourierKind::Sin => format!("sin({k}t)"),
    };
    SphericalFunction::new(2, radius, name, move |w| {
        let (re, im) = unit_power(w[0], w[1], radius, k);
        match kind {
            FourierKind::Cos => re,
            FourierKind::Sin => im,
        }
    })
}

/// `{1, cos k t, sin k t : 1 <= k <= max_mode}`.
pub fn fourier_basis(max_mode: u32, radius: f64) -> Vec<SphericalFunction> {
    let mut basis = vec![SphericalFunction::constant(2, radius, 1.0)];
    for k in 1..=max_mode {
        basis.push(fourier_mode(k, FourierKind::Cos, radius));
        basis.push(fourier_mode(k, FourierKind::Sin, radius));
    }
    basis
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Orthonormal real spherical harmonic `Y_lm` (`-l <= m <= l`) on the sphere
/// of radius `R` in `R^3`, polar axis `w3`.
///
/// Evaluated as `N_lm Q_l^|m|(z) Re/Im (x + i y)^|m|`, where `Q_l^m(z)
/// sin^m(theta) = P_l^m(z)` is a polynomial, so no angles are formed.
pub fn real_spherical_harmonic(l: u32, m: i32, radius: f64) -> Result<SphericalFunction> {
    if m.unsigned_abs() > l {
        return Err(Error::invalid(format!("|m| = {} exceeds l = {l}", m.abs())));
    }
    let am = m.unsigned_abs();
    let mut norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - am) / factorial(l + am)).sqrt();
    if m != 0 {
        norm *= 2f64.sqrt();
    }
    Ok(SphericalFunction::new(3, radius, format!("Y({l},{m})"), move |w| {
        let z = w[2] / radius;
        // Q_m^m = (2m - 1)!!, then the standard three-term recurrence in l.
        let mut q_prev = 0.0;
        let mut q = (1..=am).map(|i| (2 * i - 1) as f64).product::<f64>();
        for ll in am + 1..=l {
            let next = ((2 * ll - 1) as f64 * z * q - (ll + am - 1) as f64 * q_prev) / (ll - am) as f64;
            q_prev = q;
            q = next;
        }
        let (re, im) = unit_power(w[0], w[1], radius, am);
        let angular = if m >= 0 { re } else { im };
        norm * q * angular
    }))
}

/// All `(L + 1)^2` real harmonics of degree `<= max_degree`.
pub fn spherical_harmonic_basis(max_degree: u32, radius: f64) -> Vec<SphericalFunction> {
    let mut basis = Vec::new();
    for l in 0..=max_degree {
        for m in -(l as i32)..=l as i32 {
            basis.push(real_spherical_harmonic(l, m, radius).expect("|m| <= l"));
        }
    }
    basis
}

/// `prod_i (w_i / R)^e_i`
pub fn monomial(exponents: Vec<u32>, radius: f64) -> SphericalFunction {
    let descriptor = exponents
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > 0)
        .map(|(i, e)| {
            if *e == 1 {
                format!("w{}", i + 1)
            } else {
                format!("w{}^{e}", i + 1)
            }
        })
        .collect::<Vec<_>>()
        .join("*");
    let descriptor = if descriptor.is_empty() {
        "1".to_string()
    } else {
        descriptor
    };
    SphericalFunction::new(exponents.len(), radius, descriptor, move |w| {
        exponents
            .iter()
            .zip(w)
            .map(|(e, x)| (x / radius).powi(*e as i32))
            .product()
    })
}

/// Monomials of total degree `<= max_degree` in `dim` variables, graded.
/// These are linearly dependent on the sphere (`sum w_i^2 = R^2`); callers
/// that need a basis orthonormalize on samples and drop dependent directions.
pub fn monomial_basis(dim: usize, max_degree: u32) -> Vec<Vec<u32>> {
    fn extend(prefix: &mut Vec<u32>, dim: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == dim - 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=remaining).rev() {
            prefix.push(e);
            extend(prefix, dim, remaining - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for degree in 0..=max_degree {
        extend(&mut Vec::with_capacity(dim), dim, degree, &mut out);
    }
    out
}

/// The basis the kernel analysis uses for `(dim, degree)`: Fourier modes in
/// `d = 2`, real spherical harmonics in `d = 3`, monomials above.
pub fn default_basis(dim: usize, degree: u32, radius: f64) -> Result<Vec<SphericalFunction>> {
    match dim {
        0 | 1 => Err(Error::UnsupportedDimension {
            dim,
            reason: "spheres need d >= 2",
        }),
        2 => Ok(fourier_basis(degree, radius)),
        3 => Ok(spherical_harmonic_basis(degree, radius)),
        _ => Ok(monomial_basis(dim, degree)
            .into_iter()
            .map(|e| monomial(e, radius))
            .collect()),
    }
}

/// Dimension of the invariant subspace inside the span of
/// [`default_basis`]: `d + 1` for `d >= 3` (constants and linear
/// functions); in `d = 2` the constant plus both modes of every odd `k`.
pub fn predicted_kernel_dimension(dim: usize, degree: u32) -> usize {
    match (dim, degree) {
        (2, k) => 1 + 2 * k.div_ceil(2) as usize,
        (_, 0) => 1,
        (d, _) => d + 1,
    }
}

/// Built-in named families usable wherever an expression is accepted:
/// `fourier:cos:K`, `fourier:sin:K` (d = 2) and `sh:L:M` (d = 3).
pub fn named_function(spec: &str, dim: usize, radius: f64) -> Option<Result<SphericalFunction>> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    let need_dim = |want: usize| -> Result<()> {
        if dim == want {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "'{spec}' is defined in d = {want}, not d = {dim}"
            )))
        }
    };
    match parts.as_slice() {
        ["fourier", kind, k] => Some((|| {
            need_dim(2)?;
            let k: u32 = k.parse().map_err(|_| Error::invalid(format!("bad mode in '{spec}'")))?;
            let kind = match *kind {
                "cos" => FourierKind::Cos,
                "sin" => FourierKind::Sin,
                _ => return Err(Error::invalid(format!("expected cos or sin in '{spec}'"))),
            };
            Ok(fourier_mode(k, kind, radius).with_descriptor(spec.trim()))
        })()),
        ["sh", l, m] => Some((|| {
            need_dim(3)?;
            let l: u32 = l
                .parse()
                .map_err(|_| Error::invalid(format!("bad degree in '{spec}'")))?;
            let m: i32 = m
                .parse()
                .map_err(|_| Error::invalid(format!("bad order in '{spec}'")))?;
            Ok(real_spherical_harmonic(l, m, radius)?.with_descriptor(spec.trim()))
        })()),
        _ => None,
    }
}
