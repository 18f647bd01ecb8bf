use fermi_core::analysis::basis::{fourier_mode, predicted_kernel_dimension, spherical_harmonic_basis, FourierKind};
use fermi_core::analysis::defect::{classical_defect, sample_quadruples};
use fermi_core::analysis::*;
use fermi_core::funcspec::resolve_function;
use fermi_core::geometry::{sample_uniform_sphere, SpherePoint, Vector};
use fermi_core::kinematics::{construct_quadruple, sample_classical_collision, QuadrupleSeed};
use fermi_core::rng;
use fermi_core::Error;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn points(dim: usize, radius: f64, n: usize, seed: u64) -> Vec<SpherePoint> {
    let mut r = rng::root(seed);
    (0..n)
        .map(|_| sample_uniform_sphere(dim, radius, &mut r).unwrap())
        .collect()
}

/// Random polynomial-ish expressions in `w1..w3`.
fn expression() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0u32..20).prop_map(|k| format!("{}", k as f64 / 4.0)),
        (1usize..=3).prop_map(|i| format!("w{i}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} * {b}")),
            (inner.clone(), 0u32..4).prop_map(|(a, n)| format!("({a})^{n}")),
            inner.prop_map(|a| format!("-{a}")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn parity_components_partition_and_have_parity(spec in expression(), seed in any::<u64>()) {
        let g = resolve_function(&spec, 3, 1.0).unwrap();
        let parts = parity_decompose(&g).unwrap();
        for p in points(3, 1.0, 1000, seed) {
            let value = g.eval(&p).unwrap();
            let mut total = 0.0;
            for (index, part) in &parts {
                let v = part.eval(&p).unwrap();
                total += v;
                for i in 0..3 {
                    let flipped = part.eval(&p.flip(i)).unwrap();
                    let expected = if index.contains(i) { -v } else { v };
                    prop_assert!((flipped - expected).abs() <= 1e-12 * (1.0 + v.abs()), "{} {} at {:?}", spec, index, p);
                }
            }
            prop_assert!((total - value).abs() <= 1e-12 * (1.0 + value.abs()), "{}", spec);
        }
    }

    #[test]
    fn affine_functions_are_invariant(
        d in 2usize..=5,
        a in -10.0..10.0f64,
        b in prop::collection::vec(-10.0..10.0f64, 5),
        seed in any::<u64>(),
    ) {
        let g = SphericalFunction::affine(1.0, a, b[..d].to_vec());
        let report = mc_defect(&g, 10_000, QuadrupleSampler::default_for(d), seed).unwrap();
        prop_assert!(report.max_abs_defect <= 1e-8, "{:?}", report);
    }

    #[test]
    fn affine_parity_components_vanish_beyond_one_index(
        a in -10.0..10.0f64,
        b in prop::collection::vec(-10.0..10.0f64, 3),
        seed in any::<u64>(),
    ) {
        let g = SphericalFunction::affine(1.0, a, b);
        for (index, part) in parity_decompose(&g).unwrap() {
            if index.len() < 2 {
                continue;
            }
            for p in points(3, 1.0, 1000, seed) {
                prop_assert!(part.eval(&p).unwrap().abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn cauchy_recovers_linear_coefficient(b1 in -10.0..10.0f64, seed in any::<u64>()) {
        let g = SphericalFunction::new(3, 1.0, "b1 w1", move |w| b1 * w[0]);
        let component = parity_component(&g, ParityIndex::new(&[0], 3).unwrap()).unwrap();
        let reduced = reduce_invariant_to_scalar(&component, 0, 101, &mut rng::root(seed)).unwrap();
        let fit = cauchy_fit(&reduced.samples, 1.0).unwrap();
        prop_assert!((fit.c - b1).abs() <= 1e-9, "{} vs {}", fit.c, b1);
        prop_assert!(fit.reliable);
    }
}

#[test]
fn product_component_certifies_non_invariance() {
    let g = resolve_function("w1*w2", 3, 1.0).unwrap();
    let g12 = parity_component(&g, ParityIndex::new(&[0, 1], 3).unwrap()).unwrap();
    let report = mc_defect(&g12, 100_000, QuadrupleSampler::Pairs, 1).unwrap();
    assert!(report.mean_abs_defect > 0.05, "{report:?}");
}

#[test]
fn worked_defect_and_matrix_entry() {
    let (q, _) = construct_quadruple(&QuadrupleSeed::new(-0.5, 0.5, 0.0, 0.0, 0, 3).unwrap()).unwrap();
    let sq = resolve_function("w1^2", 3, 1.0).unwrap();
    assert!((defect_on_quadruple(&sq, &q).unwrap() - 0.5).abs() <= 1e-15);
    let m = build_constraint_matrix(&[sq], &[q]).unwrap();
    assert!((m[(0, 0)] - 0.5).abs() <= 1e-15);
}

#[test]
fn square_defect_matches_brute_force() {
    // Oracle: plain arithmetic over the same seeded quadruples, frozen below.
    const FROZEN: f64 = 2.696_690_277_821_364e-1;
    let n = 100_000;
    let qs = sample_quadruples(QuadrupleSampler::Pairs, 3, 1.0, n, 0).unwrap();
    let sq = |p: &SpherePoint| p.as_slice()[0] * p.as_slice()[0];
    let oracle = qs
        .iter()
        .map(|q| (sq(&q.in1) + sq(&q.in2) - sq(&q.out1) - sq(&q.out2)).abs())
        .sum::<f64>()
        / n as f64;
    assert!((oracle - FROZEN).abs() <= 1e-12);

    let g = resolve_function("w1^2", 3, 1.0).unwrap();
    let report = mc_defect(&g, n, QuadrupleSampler::Pairs, 0).unwrap();
    assert!((report.mean_abs_defect - oracle).abs() <= 1e-12);
    assert!(report.mean_abs_defect > 0.1);
}

#[test]
fn affine_fit_residual_matches_quadrature() {
    // w1^2 = 1/3 + (w1^2 - 1/3), and the second term is orthogonal to every
    // affine function on the sphere, so the population residual is its
    // L2 norm. Midpoint rule in (theta, phi).
    let (nt, np) = (2000, 400);
    let (mut mass, mut m2, mut m4) = (0.0, 0.0, 0.0);
    for i in 0..nt {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / nt as f64;
        for j in 0..np {
            let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / np as f64;
            let w1 = theta.sin() * phi.cos();
            let dm = theta.sin();
            mass += dm;
            m2 += dm * w1 * w1;
            m4 += dm * w1.powi(4);
        }
    }
    let (m2, m4) = (m2 / mass, m4 / mass);
    let residual = (m4 - m2 * m2).sqrt();
    assert!((residual - (4.0f64 / 45.0).sqrt()).abs() < 1e-5);

    let samples: Vec<_> = points(3, 1.0, 10_000, 4)
        .into_iter()
        .map(|p| {
            let v = p.as_slice()[0].powi(2);
            (p, v)
        })
        .collect();
    let fit = fit_affine(&samples).unwrap();
    assert!(fit.rms_residual > 0.1);
    // Sampling error of an rms over 10^4 points is about 1%.
    assert!(
        (fit.rms_residual - residual).abs() / residual < 0.05,
        "{} vs {residual}",
        fit.rms_residual
    );
    assert!((fit.a - 1.0 / 3.0).abs() < 0.02);
}

#[test]
fn noisy_affine_fit_within_standard_errors() {
    let (a, b) = (1.5, [0.3, -2.0, 0.7]);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut r = rng::root(11);
    let samples: Vec<_> = points(3, 1.0, 5000, 10)
        .into_iter()
        .map(|p| {
            let v = a + b.iter().zip(p.as_slice()).map(|(x, y)| x * y).sum::<f64>() + noise.sample(&mut r);
            (p, v)
        })
        .collect();
    let fit = fit_affine(&samples).unwrap();
    let truth = [a, b[0], b[1], b[2]];
    let estimate = [fit.a, fit.b[0], fit.b[1], fit.b[2]];
    for k in 0..4 {
        assert!(fit.std_errors[k] > 0.0);
        assert!(
            (estimate[k] - truth[k]).abs() <= 5.0 * fit.std_errors[k],
            "coefficient {k}"
        );
    }
}

#[test]
fn classical_defects() {
    const FROZEN_CUBE: f64 = 1.696_139_364_216_183_3;
    let n = 100_000;
    let collisional = |v: &[f64]| Ok(1.0 + v[0] + 0.5 * v.iter().map(|x| x * x).sum::<f64>());
    let report = classical_mc_defect(&collisional, "1+v1+|v|^2/2", 3, 1.0, n, 0).unwrap();
    assert!(report.max_abs_defect <= 1e-9, "{report:?}");

    let cube = |v: &[f64]| v[0].powi(3);
    let oracle = (0..n as u64)
        .map(|i| {
            let q = sample_classical_collision(3, 1.0, &mut rng::substream(0, i));
            (cube(q.in1.as_slice()) + cube(q.in2.as_slice()) - cube(q.out1.as_slice()) - cube(q.out2.as_slice())).abs()
        })
        .sum::<f64>()
        / n as f64;
    assert!((oracle - FROZEN_CUBE).abs() <= 1e-12);
    let report = classical_mc_defect(&|v: &[f64]| Ok(cube(v)), "v1^3", 3, 1.0, n, 0).unwrap();
    assert!((report.mean_abs_defect - oracle).abs() <= 1e-12);
    assert!(report.mean_abs_defect > 0.05);

    let q = sample_classical_collision(3, 1.0, &mut rng::root(1));
    assert!(classical_defect(&collisional, &q).unwrap().abs() <= 1e-12);
}

#[test]
fn classical_fit_needs_two_radii() {
    let truth = |v: &Vector| 1.0 + 2.0 * v[0] - 0.5 * v[2] + 0.25 * v.norm_sq();
    let mut r = rng::root(3);
    let mut samples = Vec::new();
    for radius in [1.0, 2.0] {
        for _ in 0..200 {
            let v = sample_uniform_sphere(3, radius, &mut r).unwrap().coords().clone();
            let g = truth(&v);
            samples.push((v, g));
        }
    }
    let fit = fit_classical_poly(&samples).unwrap();
    assert!((fit.a - 1.0).abs() <= 1e-9);
    assert!((fit.b[0] - 2.0).abs() <= 1e-9 && fit.b[1].abs() <= 1e-9 && (fit.b[2] + 0.5).abs() <= 1e-9);
    assert!((fit.c - 0.25).abs() <= 1e-9);

    let single: Vec<_> = samples[..200].to_vec();
    assert!(matches!(fit_classical_poly(&single), Err(Error::RankDeficient(_))));
}

/// One-sided Jacobi SVD: rotates column pairs until all columns are
/// orthogonal; the column norms are then the singular values.
fn jacobi_singular_values(m: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| m[(i, j)]).collect()).collect();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = a[p].iter().map(|x| x * x).sum();
                let beta: f64 = a[q].iter().map(|x| x * x).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = a.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    (*x, *y) = (c * *x - s * *y, s * *x + c * *y);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = a.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

#[test]
fn kernel_spectrum_matches_jacobi_oracle() {
    let basis = spherical_harmonic_basis(2, 1.0);
    let qs = sample_quadruples(QuadrupleSampler::Mixed, 3, 1.0, 500, 0).unwrap();
    let m = build_constraint_matrix(&basis, &qs).unwrap();
    let report = kernel_dimension(&m, 1e-6).unwrap();
    let oracle = jacobi_singular_values(&m);
    let threshold = 1e-6 * oracle[0].max((m.nrows() as f64).sqrt());
    assert_eq!(oracle.iter().filter(|s| **s <= threshold).count(), 4);
    assert_eq!(report.kernel_dimension, 4);
    for (s, o) in report.singular_values.iter().zip(&oracle) {
        assert!((s - o).abs() <= 1e-9 * oracle[0], "{s} vs {o}");
    }
}

#[test]
fn kernel_dimensions_follow_the_characterization() {
    for (dim, degree, expected) in [(3, 2, 4), (3, 3, 4), (3, 4, 4), (4, 2, 5), (2, 3, 5), (2, 5, 7)] {
        let report = analyze_kernel(&KernelConfig::new(dim, degree, 500, 0)).unwrap();
        assert_eq!(report.kernel_dimension, expected, "d={dim} L={degree}");
        assert_eq!(predicted_kernel_dimension(dim, degree), expected);
        if let Some(gap) = report.spectral_gap {
            assert!(gap >= 1e3, "d={dim} L={degree} gap {gap}");
        }
        assert!(report.min_nonkernel_ratio.unwrap() >= 1e-3);
    }
}

#[test]
fn planar_even_part() {
    let g = resolve_function("fourier:sin:1", 2, 1.0).unwrap();
    let c3 = fourier_mode(3, FourierKind::Cos, 1.0);
    let h = SphericalFunction::fallible(2, 1.0, "sin t + 5 cos 3t + 2", move |w| {
        Ok(g.eval_coords(w)? + 5.0 * c3.eval_coords(w)? + 2.0)
    });
    let report = even_part_constancy(&h, 1000, &mut rng::root(0)).unwrap();
    assert!((report.mean - 4.0).abs() <= 1e-12);
    assert!(report.max_deviation <= 1e-12);

    let c2 = fourier_mode(2, FourierKind::Cos, 1.0);
    let report = even_part_constancy(&c2, 1000, &mut rng::root(0)).unwrap();
    assert!(report.max_deviation >= 1.0);
}

#[test]
fn additivity_examples() {
    let d = cauchy_additivity_defect(|x| Ok(x * x), 1.0, &[(0.5, 0.5)]).unwrap();
    assert!((d.max_defect - 0.5).abs() <= 1e-15);
    let d = cauchy_additivity_defect(|x: f64| Ok(x.abs()), 1.0, &[(0.5, -0.5)]).unwrap();
    assert!((d.max_defect - 1.0).abs() <= 1e-15);
    let d = cauchy_additivity_defect(|x: f64| Ok(x.powi(3)), 1.0, &[(0.5, 0.5)]).unwrap();
    assert!((d.max_defect - 0.75).abs() <= 1e-15);
}

#[test]
fn noisy_slope() {
    let mut r = rng::root(8);
    let samples: Vec<_> = (0..1000)
        .map(|_| {
            let x: f64 = r.random_range(-1.0..=1.0);
            (x, -2.5 * x + r.random_range(-1e-6..=1e-6))
        })
        .collect();
    let fit = cauchy_fit(&samples, 1.0).unwrap();
    assert!((fit.c + 2.5).abs() <= 1e-5);
}

#[test]
fn cubic_is_flagged() {
    let samples: Vec<_> = (0..=100)
        .map(|k| -1.0 + 0.02 * k as f64)
        .map(|x| (x, x * x * x))
        .collect();
    let fit = cauchy_fit(&samples, 1.0).unwrap();
    assert!(!fit.reliable);
    assert!(fit.additivity.max_defect >= 0.1);
}

#[test]
fn dependence_on_other_coordinates_is_detected() {
    let g = resolve_function("w1*w2^2", 3, 1.0).unwrap();
    let err = reduce_invariant_to_scalar(&g, 0, 51, &mut rng::root(2)).unwrap_err();
    assert!(matches!(err, Error::NotAnInvariant(_)), "{err}");
}
