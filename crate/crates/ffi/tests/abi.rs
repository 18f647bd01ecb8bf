use std::ffi::{CStr, CString};
use std::ptr;

use fermi_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(fermi_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(fermi_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn collide_conserves_momentum_and_energy() {
    let w = [1.0, 0.0, 0.0];
    let ws = [0.0, 1.0, 0.0];
    let n = [0.0, 0.0, 1.0];
    let (mut a, mut b) = ([0.0; 3], [0.0; 3]);
    let st = unsafe {
        fermi_collide(
            3,
            1.0,
            w.as_ptr(),
            ws.as_ptr(),
            n.as_ptr(),
            a.as_mut_ptr(),
            b.as_mut_ptr(),
        )
    };
    assert_eq!(st, FermiStatus::Ok, "{}", last_error());
    assert_eq!(last_error(), "");
    let h = 0.5f64.sqrt();
    assert_eq!(a, [0.5, 0.5, h]);
    assert_eq!(b, [0.5, 0.5, -h]);
}

#[test]
fn collide_reports_errors() {
    let w = [1.0, 0.0, 0.0];
    let ws = [0.0, 1.0, 0.0];
    let tilted = [1.0, 0.0, 0.0];
    let mut out = [0.0; 3];
    let mut out2 = [0.0; 3];
    let st = unsafe {
        fermi_collide(
            3,
            1.0,
            w.as_ptr(),
            ws.as_ptr(),
            tilted.as_ptr(),
            out.as_mut_ptr(),
            out2.as_mut_ptr(),
        )
    };
    assert_eq!(st, FermiStatus::InvalidArgument);
    assert!(last_error().contains("orthogonal"), "{}", last_error());

    let st = unsafe {
        fermi_collide(
            3,
            1.0,
            ptr::null(),
            ws.as_ptr(),
            tilted.as_ptr(),
            out.as_mut_ptr(),
            out2.as_mut_ptr(),
        )
    };
    assert_eq!(st, FermiStatus::NullPointer);

    let st = unsafe {
        fermi_collide(
            1,
            1.0,
            w.as_ptr(),
            ws.as_ptr(),
            tilted.as_ptr(),
            out.as_mut_ptr(),
            out2.as_mut_ptr(),
        )
    };
    assert_eq!(st, FermiStatus::InvalidArgument);
}

#[test]
fn constructed_quadruple() {
    let mut out = [0.0; 12];
    let st = unsafe { fermi_construct_quadruple(-0.5, 0.5, 0.0, 0.0, 0, 3, out.as_mut_ptr()) };
    assert_eq!(st, FermiStatus::Ok, "{}", last_error());
    let c = 0.75f64.sqrt();
    let expected = [-0.5, c, 0.0, 0.5, c, 0.0, 0.0, c, -0.5, 0.0, c, 0.5];
    for (x, y) in out.iter().zip(expected) {
        assert!((x - y).abs() < 1e-12, "{out:?}");
    }

    let st = unsafe { fermi_construct_quadruple(0.3, 0.3, 0.3, 0.3, 0, 3, out.as_mut_ptr()) };
    assert_eq!(st, FermiStatus::Ok);
    let first = [out[0], out[1], out[2]];
    assert!(
        out.chunks(3).all(|p| p == first),
        "degenerate seed repeats one point: {out:?}"
    );
    let st = unsafe { fermi_construct_quadruple(-0.5, 0.5, 0.0, 0.0, 0, 2, out.as_mut_ptr()) };
    assert_eq!(st, FermiStatus::UnsupportedDimension);
}

fn parse(spec: &str, dim: usize) -> Result<*mut FermiFunction, FermiStatus> {
    let spec = CString::new(spec).unwrap();
    let mut f = ptr::null_mut();
    match unsafe { fermi_function_parse(spec.as_ptr(), dim, 1.0, &mut f) } {
        FermiStatus::Ok => Ok(f),
        st => {
            assert!(f.is_null());
            Err(st)
        }
    }
}

#[test]
fn function_handles() {
    let f = parse("1 + 2*w1 - w3^2", 3).unwrap();
    let mut y = 0.0;
    let st = unsafe { fermi_function_eval(f, [0.6, 0.0, 0.8].as_ptr(), &mut y) };
    assert_eq!(st, FermiStatus::Ok);
    assert!((y - (1.0 + 1.2 - 0.64)).abs() < 1e-15);
    unsafe { fermi_function_free(f) };
    unsafe { fermi_function_free(ptr::null_mut()) };

    assert_eq!(parse("1 + * w1", 3), Err(FermiStatus::ParseError));
    assert!(!last_error().is_empty());
    assert_eq!(parse("w4", 3), Err(FermiStatus::EvalError));
    assert!(parse("fourier:cos:3", 2).is_ok_and(|f| {
        unsafe { fermi_function_free(f) };
        true
    }));
}

#[test]
fn defect_separates_invariants() {
    let run = |spec: &str| {
        let f = parse(spec, 3).unwrap();
        let mut stats = FermiDefectStats::default();
        let st = unsafe { fermi_mc_defect(f, 2000, 7, &mut stats) };
        unsafe { fermi_function_free(f) };
        assert_eq!(st, FermiStatus::Ok, "{}", last_error());
        stats
    };
    let affine = run("2 - w1 + 3*w3");
    assert_eq!(affine.sample_count, 2000);
    assert!(affine.normalized_max_defect < 1e-12);
    let square = run("w1^2");
    assert!(square.mean_abs_defect > 0.05);
}

#[test]
fn kernel_dimension_matches_prediction() {
    let (mut k, mut p) = (0usize, 0usize);
    let st = unsafe { fermi_kernel_dimension(3, 2, 200, 1, 1e-6, &mut k, &mut p) };
    assert_eq!(st, FermiStatus::Ok, "{}", last_error());
    assert_eq!((k, p), (4, 4));
    let st = unsafe { fermi_kernel_dimension(3, 2, 5, 1, 1e-6, &mut k, ptr::null_mut()) };
    assert_eq!(st, FermiStatus::UnderDetermined);
}

#[test]
fn ensemble_lifecycle() {
    let init = CString::new("cap:1,0.7").unwrap();
    let mut e = ptr::null_mut();
    let st = unsafe { fermi_ensemble_new(3, 1.0, 200, init.as_ptr(), 3, &mut e) };
    assert_eq!(st, FermiStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { fermi_ensemble_len(e) }, 200);

    let w1 = parse("w1", 3).unwrap();
    let (mut before, mut after, mut sd) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(fermi_ensemble_moment(e, w1, &mut before, &mut sd), FermiStatus::Ok);
        assert_eq!(fermi_ensemble_step(e, 5000), FermiStatus::Ok);
        assert_eq!(
            fermi_ensemble_moment(e, w1, &mut after, ptr::null_mut()),
            FermiStatus::Ok
        );
    }
    assert_eq!(unsafe { fermi_ensemble_steps(e) }, 5000);
    assert!((before - after).abs() < 1e-12);
    assert!(sd > 0.0);

    let mut coords = vec![0.0; 600];
    assert_eq!(
        unsafe { fermi_ensemble_particles(e, coords.as_mut_ptr(), 599) },
        FermiStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { fermi_ensemble_particles(e, coords.as_mut_ptr(), 600) },
        FermiStatus::Ok
    );
    for p in coords.chunks(3) {
        assert!((p.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
    }

    let planar = parse("w1", 2).unwrap();
    let st = unsafe { fermi_ensemble_moment(e, planar, &mut after, ptr::null_mut()) };
    assert_eq!(st, FermiStatus::InvalidArgument);
    unsafe {
        fermi_function_free(planar);
        fermi_function_free(w1);
        fermi_ensemble_free(e);
    }
}

#[test]
fn planar_ensemble_needs_pairing() {
    let mut e = ptr::null_mut();
    let uniform = CString::new("uniform").unwrap();
    let st = unsafe {
        fermi_ensemble_new(2, 1.0, 10, uniform.as_ptr(), 0, &mut e);
        fermi_ensemble_step(e, 1)
    };
    assert_eq!(st, FermiStatus::UnsupportedConfiguration);
    unsafe { fermi_ensemble_free(e) };

    let bad = CString::new("cone:1,0.5").unwrap();
    let st = unsafe { fermi_ensemble_new(2, 1.0, 10, bad.as_ptr(), 0, &mut e) };
    assert_eq!(st, FermiStatus::InvalidArgument);
    assert!(e.is_null());
}

#[test]
fn errors_are_thread_local() {
    assert_eq!(parse("(", 3), Err(FermiStatus::ParseError));
    let here = last_error();
    let there = std::thread::spawn(last_error).join().unwrap();
    assert!(!here.is_empty());
    assert_eq!(there, "");
}
