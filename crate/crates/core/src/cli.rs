//! The `fermi` command-line tool.
//!
//! Every subcommand is described by a [`RunConfig`]. With `--out DIR` the
//! outputs are written to `DIR` together with `manifest.json`, the effective
//! config; `fermi replay DIR/manifest.json` recomputes the same bytes.
//! Worker count (`--threads`) and output location are not part of the
//! manifest since neither affects results.
//!
//! Exit codes: 0 verdict pass, 1 verdict fail, 2 usage or data error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::cauchy::DEFAULT_CAUCHY_TOL;
use crate::analysis::kernel::{KernelConfig, DEFAULT_KERNEL_TOL};
use crate::analysis::{
    analyze_kernel, cauchy_fit_with_tolerance, classical_mc_defect, fit_affine, fit_classical_poly, mc_defect,
    parity_component, reduce_invariant_to_scalar, ParityIndex, QuadrupleSampler,
};
use crate::error::{Error, Result};
use crate::funcspec::{parse, resolve_function};
use crate::geometry::{Direction, SpherePoint, Vector, SPHERE_EPS};
use crate::io::{read_samples, to_json, write_series_csv, write_spectrum_csv};
use crate::kinematics::{
    construct_quadruple, is_admissible_quantum, post_collision_quantum, sample_quantum_collision, CollisionPair,
    QuadrupleSeed,
};
use crate::rng;
use crate::simulator::{init_ensemble, relaxation_report, run, InitDistribution};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Input points farther than this (relative, squared norm) from the sphere
/// are rejected; closer ones beyond `SPHERE_EPS` are renormalized.
const INPUT_SPHERE_TOL: f64 = 1e-6;
const DEFAULT_DEFECT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "fermi", version, about = "Collision invariants on the Fermi sphere")]
struct Cli {
    /// Worker threads for parallel sections (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One quantum collision: prints the quadruple and its residuals.
    Collide(CollideArgs),
    /// The explicit admissible quadruple for a seed (s, t, u, v), d >= 3.
    Quadruple(QuadrupleArgs),
    /// Monte Carlo defect of a test function; exit 0 iff it looks invariant.
    Defect(DefectArgs),
    /// Nullspace of the sampled invariance constraint on a function basis.
    Kernel(KernelArgs),
    /// Least-squares fit of A + B.w (or A + B.v + C|v|^2) to tabulated samples.
    Fit(FitArgs),
    /// Linear fit and additivity test of a scalar function h on [-a, a].
    Cauchy(CauchyArgs),
    /// Particle simulation with moment tracking.
    Simulate(SimulateArgs),
    /// Re-run the config stored in a manifest.
    Replay { manifest: PathBuf },
}

#[derive(Debug, Args)]
struct CollideArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
    omega: Vec<f64>,
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
    omega_star: Vec<f64>,
    /// Unit direction orthogonal to omega + omega_star; drawn at random when absent.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    n: Option<Vec<f64>>,
    #[arg(long, env = "FERMI_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct QuadrupleArgs {
    #[arg(long, allow_hyphen_values = true)]
    s: f64,
    #[arg(long, allow_hyphen_values = true)]
    t: f64,
    #[arg(long, allow_hyphen_values = true)]
    u: f64,
    #[arg(long, allow_hyphen_values = true)]
    v: f64,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// One-based coordinate carrying s, t, u, v.
    #[arg(long, default_value_t = 1)]
    axis: usize,
}

#[derive(Debug, Args)]
struct DefectArgs {
    /// Expression in w1..wd, or fourier:cos:K / fourier:sin:K / sh:L:M.
    #[arg(long, allow_hyphen_values = true)]
    g: String,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, env = "FERMI_SEED", default_value_t = 0)]
    seed: u64,
    /// Defaults to antipodal in d = 2 and pairs otherwise.
    #[arg(long, value_enum)]
    sampler: Option<QuadrupleSampler>,
    /// Largest normalized max defect still judged invariant.
    #[arg(long, default_value_t = DEFAULT_DEFECT_THRESHOLD)]
    threshold: f64,
    /// Classical collisions of Gaussian velocities in R^d instead.
    #[arg(long)]
    classical: bool,
    /// Velocity standard deviation for --classical.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

#[derive(Debug, Args)]
struct KernelArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    degree: u32,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, env = "FERMI_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_KERNEL_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Defaults to antipodal in d = 2 and mixed otherwise.
    #[arg(long, value_enum)]
    sampler: Option<QuadrupleSampler>,
    /// Expected kernel dimension; defaults to the characterization's prediction.
    #[arg(long)]
    expect: Option<usize>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// CSV with a header, d coordinate columns and a value column.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    classical: bool,
    /// Sphere radius of the samples (inferred from the first sample if absent).
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Debug, Args)]
struct CauchyArgs {
    /// CSV with a header and columns x, h.
    #[arg(long, conflicts_with = "g")]
    input: Option<PathBuf>,
    /// Instead of --input: reduce the {axis} parity component of g to h.
    #[arg(long, allow_hyphen_values = true, requires = "dim")]
    g: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// One-based coordinate for --g.
    #[arg(long, default_value_t = 1)]
    axis: usize,
    #[arg(long, default_value_t = 101)]
    levels: usize,
    #[arg(long, env = "FERMI_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = DEFAULT_CAUCHY_TOL)]
    tol: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 1000)]
    particles: usize,
    #[arg(long, default_value_t = 10_000)]
    steps: u64,
    #[arg(long, default_value_t = 1000)]
    record_every: u64,
    /// uniform, cap:AXIS,ANGLE or antipodal-paired-cap:AXIS,ANGLE (axis one-based).
    #[arg(long, default_value = "uniform")]
    init: String,
    /// Comma-separated moment functions.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    moments: String,
    #[arg(long, env = "FERMI_SEED", default_value_t = 0)]
    seed: u64,
}

/// The effective configuration of one run; written as the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum RunConfig {
    Collide {
        d: usize,
        #[serde(rename = "R")]
        r: f64,
        omega: Vec<f64>,
        omega_star: Vec<f64>,
        n: Option<Vec<f64>>,
        seed: u64,
    },
    Quadruple {
        d: usize,
        s: f64,
        t: f64,
        u: f64,
        v: f64,
        axis: usize,
    },
    Defect {
        d: usize,
        #[serde(rename = "R")]
        r: f64,
        g: String,
        samples: usize,
        seed: u64,
        sampler: Option<QuadrupleSampler>,
        threshold: f64,
        classical: bool,
        scale: f64,
    },
    Kernel {
        d: usize,
        #[serde(rename = "R")]
        r: f64,
        degree: u32,
        samples: usize,
        seed: u64,
        tol: f64,
        sampler: Option<QuadrupleSampler>,
        expect: Option<usize>,
    },
    Fit {
        input: PathBuf,
        classical: bool,
        #[serde(rename = "R")]
        r: Option<f64>,
    },
    Cauchy {
        input: Option<PathBuf>,
        g: Option<String>,
        d: Option<usize>,
        axis: usize,
        levels: usize,
        seed: u64,
        a: f64,
        tol: f64,
    },
    Simulate {
        d: usize,
        #[serde(rename = "R")]
        r: f64,
        #[serde(rename = "N")]
        n: usize,
        steps: u64,
        record_every: u64,
        init: String,
        moments: Vec<String>,
        seed: u64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    run: RunConfig,
}

/// What a subcommand produced: the report printed on stdout, any extra
/// files, and the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub report_name: &'static str,
    pub report: String,
    pub files: Vec<(String, Vec<u8>)>,
    pub exit: i32,
}

impl Outcome {
    fn json(name: &'static str, value: serde_json::Value, exit: i32) -> Self {
        Outcome {
            report_name: name,
            report: to_json(&value),
            files: Vec::new(),
            exit,
        }
    }
}

fn to_config(cmd: Command) -> Option<RunConfig> {
    Some(match cmd {
        Command::Collide(a) => RunConfig::Collide {
            d: a.dim,
            r: a.radius,
            omega: a.omega,
            omega_star: a.omega_star,
            n: a.n,
            seed: a.seed,
        },
        Command::Quadruple(a) => RunConfig::Quadruple {
            d: a.dim,
            s: a.s,
            t: a.t,
            u: a.u,
            v: a.v,
            axis: a.axis,
        },
        Command::Defect(a) => RunConfig::Defect {
            d: a.dim,
            r: a.radius,
            g: a.g,
            samples: a.samples,
            seed: a.seed,
            sampler: a.sampler,
            threshold: a.threshold,
            classical: a.classical,
            scale: a.scale,
        },
        Command::Kernel(a) => RunConfig::Kernel {
            d: a.dim,
            r: a.radius,
            degree: a.degree,
            samples: a.samples,
            seed: a.seed,
            tol: a.tol,
            sampler: a.sampler,
            expect: a.expect,
        },
        Command::Fit(a) => RunConfig::Fit {
            input: a.input,
            classical: a.classical,
            r: a.radius,
        },
        Command::Cauchy(a) => RunConfig::Cauchy {
            input: a.input,
            g: a.g,
            d: a.dim,
            axis: a.axis,
            levels: a.levels,
            seed: a.seed,
            a: a.a,
            tol: a.tol,
        },
        Command::Simulate(a) => RunConfig::Simulate {
            d: a.dim,
            r: a.radius,
            n: a.particles,
            steps: a.steps,
            record_every: a.record_every,
            init: a.init,
            moments: a.moments.split(',').map(|m| m.trim().to_string()).collect(),
            seed: a.seed,
        },
        Command::Replay { .. } => return None,
    })
}

fn warn(msg: impl AsRef<str>) {
    eprintln!("warning: {}", msg.as_ref());
}

/// Accepts coordinates within `INPUT_SPHERE_TOL` of the sphere,
/// renormalizing (with a warning) beyond `SPHERE_EPS`.
fn input_point(name: &str, coords: &[f64], dim: usize, radius: f64) -> Result<SpherePoint> {
    if coords.len() != dim {
        return Err(Error::invalid(format!(
            "{name} has {} coordinates, expected {dim}",
            coords.len()
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    let v = Vector::new(coords.to_vec());
    let rel = (v.norm_sq() - radius * radius).abs() / (radius * radius);
    if rel > INPUT_SPHERE_TOL {
        return Err(Error::invalid(format!(
            "{name} = {coords:?} is off the sphere of radius {radius} (relative residual {rel:.3e})"
        )));
    }
    if rel > SPHERE_EPS {
        warn(format!(
            "{name} renormalized onto the sphere (relative residual {rel:.3e})"
        ));
        return SpherePoint::project(v, radius);
    }
    SpherePoint::new(v, radius)
}

fn exec_collide(d: usize, r: f64, omega: &[f64], omega_star: &[f64], n: Option<&[f64]>, seed: u64) -> Result<Outcome> {
    let a = input_point("omega", omega, d, r)?;
    let b = input_point("omega_star", omega_star, d, r)?;
    let pair = CollisionPair::new(a.clone(), b.clone())?;
    let q = match n {
        Some(n) => {
            if n.len() != d {
                return Err(Error::invalid(format!("n has {} coordinates, expected {d}", n.len())));
            }
            let n = match Direction::new(n.to_vec()) {
                Ok(n) => n,
                Err(_) => {
                    warn("n normalized to unit length");
                    Direction::normalize(n.to_vec())?
                }
            };
            post_collision_quantum(&pair, &n)?
        }
        None => sample_quantum_collision(&pair, &mut rng::root(seed)),
    };
    let close = |p: &SpherePoint, w: &SpherePoint| p.coords().max_abs_diff(w.coords()) <= 1e-9 * r;
    let outcome = if close(&q.out1, &a) && close(&q.out2, &b) {
        "identity"
    } else if close(&q.out1, &b) && close(&q.out2, &a) {
        "exchange"
    } else {
        "scattered"
    };
    let adm = is_admissible_quantum(&q, 1e-9);
    let exit = if adm.admissible { EXIT_PASS } else { EXIT_FAIL };
    Ok(Outcome::json(
        "collide.json",
        json!({
            "omega": q.in1.as_slice(),
            "omega_star": q.in2.as_slice(),
            "omega_prime": q.out1.as_slice(),
            "omega_star_prime": q.out2.as_slice(),
            "outcome": outcome,
            "admissibility": adm,
        }),
        exit,
    ))
}

fn exec_quadruple(d: usize, s: f64, t: f64, u: f64, v: f64, axis: usize) -> Result<Outcome> {
    if d < 3 {
        return Err(Error::UnsupportedDimension {
            dim: d,
            reason: "the explicit quadruple needs d >= 3; in d = 2 every collision keeps, \
                     exchanges, or scatters an antipodal pair (see `fermi collide --dim 2` \
                     and the even-part test)",
        });
    }
    if axis == 0 || axis > d {
        return Err(Error::invalid(format!("--axis must lie in 1..={d}")));
    }
    let mismatch = (s + t - u - v).abs();
    if mismatch > 1e-9 {
        return Err(Error::invalid(format!(
            "s + t - u - v = {:e}; must vanish",
            s + t - u - v
        )));
    }
    let v = if mismatch > 0.0 {
        let fixed = s + t - u;
        if mismatch > 1e-12 {
            warn(format!("v adjusted from {v} to {fixed} so that s + t = u + v"));
        }
        fixed
    } else {
        v
    };
    let seed = QuadrupleSeed::new(s, t, u, v, axis - 1, d)?;
    let (q, trace) = construct_quadruple(&seed)?;
    let adm = is_admissible_quantum(&q, 1e-10);
    let exit = if adm.admissible { EXIT_PASS } else { EXIT_FAIL };
    Ok(Outcome::json(
        "quadruple.json",
        json!({
            "seed": seed,
            "points": [q.in1.as_slice(), q.in2.as_slice(), q.out1.as_slice(), q.out2.as_slice()],
            "trace": trace,
            "admissibility": adm,
        }),
        exit,
    ))
}

#[allow(clippy::too_many_arguments)]
fn exec_defect(
    d: usize,
    r: f64,
    g: &str,
    samples: usize,
    seed: u64,
    sampler: Option<QuadrupleSampler>,
    threshold: f64,
    classical: bool,
    scale: f64,
) -> Result<Outcome> {
    let report = if classical {
        let expr = parse(g)?;
        if expr.uses_x() || expr.max_coord() > d {
            return Err(crate::funcspec::EvalError::DimensionMismatch {
                index: expr.max_coord(),
                dim: d,
            }
            .into());
        }
        let f = move |v: &[f64]| Ok(expr.eval(v)?);
        classical_mc_defect(&f, g.trim(), d, scale, samples, seed)?
    } else {
        let f = resolve_function(g, d, r)?;
        mc_defect(&f, samples, sampler.unwrap_or(QuadrupleSampler::default_for(d)), seed)?
    };
    let invariant = report.normalized_max_defect <= threshold;
    Ok(Outcome::json(
        "defect.json",
        json!({
            "report": report,
            "threshold": threshold,
            "verdict": if invariant { "invariant" } else { "non-invariant" },
        }),
        if invariant { EXIT_PASS } else { EXIT_FAIL },
    ))
}

#[allow(clippy::too_many_arguments)]
fn exec_kernel(
    d: usize,
    r: f64,
    degree: u32,
    samples: usize,
    seed: u64,
    tol: f64,
    sampler: Option<QuadrupleSampler>,
    expect: Option<usize>,
) -> Result<Outcome> {
    let mut config = KernelConfig::new(d, degree, samples, seed);
    config.radius = r;
    config.tol = tol;
    if let Some(s) = sampler {
        config.sampler = s;
    }
    let mut report = analyze_kernel(&config)?;
    if expect.is_some() {
        report.predicted_dimension = expect;
    }
    let pass = report.matches_prediction().unwrap_or(true);
    let mut spectrum = Vec::new();
    write_spectrum_csv(&mut spectrum, &report.singular_values)?;
    eprintln!(
        "kernel dimension {} (expected {})",
        report.kernel_dimension,
        report.predicted_dimension.map_or("-".into(), |p| p.to_string())
    );
    let mut out = Outcome::json(
        "kernel.json",
        json!({
            "config": config,
            "report": report,
            "verdict": if pass { "as-predicted" } else { "unexpected-kernel" },
        }),
        if pass { EXIT_PASS } else { EXIT_FAIL },
    );
    out.files.push(("spectrum.csv".into(), spectrum));
    Ok(out)
}

fn exec_fit(input: &Path, classical: bool, radius: Option<f64>) -> Result<Outcome> {
    let rows = read_samples(fs::File::open(input)?)?;
    let dim = rows[0].0.len();
    if classical {
        let samples: Vec<(Vector, f64)> = rows.iter().map(|(c, g)| (Vector::new(c.clone()), *g)).collect();
        return match fit_classical_poly(&samples) {
            Ok(fit) => Ok(Outcome::json(
                "fit.json",
                json!({ "model": "classical", "fit": fit }),
                EXIT_PASS,
            )),
            Err(Error::RankDeficient(msg)) => {
                warn(format!(
                    "{msg}; samples on a single sphere make |v|^2 constant, so C cannot be \
                     separated from A (the quantum degeneracy); reporting the affine fit instead"
                ));
                let affine = samples_on_sphere(&rows, radius).ok().and_then(|s| fit_affine(&s).ok());
                Ok(Outcome::json(
                    "fit.json",
                    json!({ "model": "classical", "rank_deficient": true, "reason": msg, "affine_fallback": affine }),
                    EXIT_FAIL,
                ))
            }
            Err(e) => Err(e),
        };
    }
    if dim < 2 {
        return Err(Error::invalid("sphere samples need at least 2 coordinate columns"));
    }
    let fit = fit_affine(&samples_on_sphere(&rows, radius)?)?;
    Ok(Outcome::json(
        "fit.json",
        json!({ "model": "affine", "fit": fit }),
        EXIT_PASS,
    ))
}

fn samples_on_sphere(rows: &[(Vec<f64>, f64)], radius: Option<f64>) -> Result<Vec<(SpherePoint, f64)>> {
    let radius = radius.unwrap_or_else(|| Vector::new(rows[0].0.clone()).norm());
    rows.iter()
        .enumerate()
        .map(|(k, (c, g))| {
            input_point(&format!("sample {} (line {})", k + 1, k + 2), c, c.len(), radius)
                .map(|p| (p, *g))
                .map_err(|e| Error::Data {
                    line: k as u64 + 2,
                    message: e.to_string(),
                })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn exec_cauchy(
    input: Option<&Path>,
    g: Option<&str>,
    d: Option<usize>,
    axis: usize,
    levels: usize,
    seed: u64,
    a: f64,
    tol: f64,
) -> Result<Outcome> {
    let (samples, reduction) = match (input, g) {
        (Some(path), None) => {
            let rows = read_samples(fs::File::open(path)?)?;
            if rows[0].0.len() != 1 {
                return Err(Error::Data {
                    line: 1,
                    message: "expected exactly two columns: x, h".into(),
                });
            }
            (rows.into_iter().map(|(x, h)| (x[0], h)).collect::<Vec<_>>(), None)
        }
        (None, Some(g)) => {
            let d = d.ok_or_else(|| Error::invalid("--g needs --dim"))?;
            if axis == 0 || axis > d {
                return Err(Error::invalid(format!("--axis must lie in 1..={d}")));
            }
            let f = resolve_function(g, d, a)?;
            let component = parity_component(&f, ParityIndex::new(&[axis - 1], d)?)?;
            match reduce_invariant_to_scalar(&component, axis - 1, levels, &mut rng::root(seed)) {
                Ok(red) => (red.samples.clone(), Some(red)),
                Err(Error::NotAnInvariant(msg)) => {
                    return Ok(Outcome::json(
                        "cauchy.json",
                        json!({ "verdict": "not-an-invariant", "reason": msg }),
                        EXIT_FAIL,
                    ));
                }
                Err(e) => return Err(e),
            }
        }
        _ => return Err(Error::invalid("give exactly one of --input and --g")),
    };
    let fit = cauchy_fit_with_tolerance(&samples, a, tol)?;
    let pass = fit.reliable;
    Ok(Outcome::json(
        "cauchy.json",
        json!({
            "fit": fit,
            "reduction": reduction.map(|r| json!({
                "axis": r.axis + 1,
                "levels": r.samples.len(),
                "max_tilde_spread": r.max_tilde_spread,
                "max_parity_violation": r.max_parity_violation,
            })),
            "verdict": if pass { "linear" } else { "unreliable" },
        }),
        if pass { EXIT_PASS } else { EXIT_FAIL },
    ))
}

#[allow(clippy::too_many_arguments)]
fn exec_simulate(
    d: usize,
    r: f64,
    n: usize,
    steps: u64,
    record_every: u64,
    init: &str,
    moments: &[String],
    seed: u64,
) -> Result<Outcome> {
    let init: InitDistribution = init.parse()?;
    if d == 2 && !init.is_paired() {
        return Err(Error::UnsupportedConfiguration(
            "in d = 2 a collision of a non-antipodal pair can only keep or exchange the two \
             velocities, so the ensemble would be frozen; use --init antipodal-paired-cap:AXIS,ANGLE"
                .into(),
        ));
    }
    let functions = moments
        .iter()
        .map(|m| resolve_function(m, d, r))
        .collect::<Result<Vec<_>>>()?;
    let mut ensemble = init_ensemble(d, r, n, init, seed)?;
    let series = run(&mut ensemble, steps, record_every, &functions)?;
    let mut csv = Vec::new();
    write_series_csv(&mut csv, &series)?;
    let summary = series
        .iter()
        .map(|s| {
            let rep = relaxation_report(s)?;
            // Scale-free drift: moments with mean near zero are measured
            // against their spread over the particles.
            let scale = rep.initial.abs().max(s.std_devs[0]).max(f64::MIN_POSITIVE);
            let last = s.values.len() - 1;
            Ok(json!({
                "moment": rep.descriptor,
                "initial": rep.initial,
                "final": rep.final_value,
                "max_drift": rep.max_drift,
                "relative_drift": rep.max_drift / scale,
                "monotone": rep.monotone,
                "final_standard_error": s.standard_error(last),
                "drift_in_standard_errors": if s.standard_error(last) > 0.0 {
                    Some((rep.final_value - rep.initial).abs() / s.standard_error(last))
                } else {
                    None
                },
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outcome::json(
        "summary.json",
        json!({
            "init": init,
            "particles": n,
            "steps": ensemble.steps(),
            "moments": summary,
        }),
        EXIT_PASS,
    );
    out.files.push(("series.csv".into(), csv));
    Ok(out)
}

/// Runs one config; errors map to exit code 2 in [`main`].
pub fn execute(config: &RunConfig) -> Result<Outcome> {
    match config {
        RunConfig::Collide {
            d,
            r,
            omega,
            omega_star,
            n,
            seed,
        } => exec_collide(*d, *r, omega, omega_star, n.as_deref(), *seed),
        RunConfig::Quadruple { d, s, t, u, v, axis } => exec_quadruple(*d, *s, *t, *u, *v, *axis),
        RunConfig::Defect {
            d,
            r,
            g,
            samples,
            seed,
            sampler,
            threshold,
            classical,
            scale,
        } => exec_defect(*d, *r, g, *samples, *seed, *sampler, *threshold, *classical, *scale),
        RunConfig::Kernel {
            d,
            r,
            degree,
            samples,
            seed,
            tol,
            sampler,
            expect,
        } => exec_kernel(*d, *r, *degree, *samples, *seed, *tol, *sampler, *expect),
        RunConfig::Fit { input, classical, r } => exec_fit(input, *classical, *r),
        RunConfig::Cauchy {
            input,
            g,
            d,
            axis,
            levels,
            seed,
            a,
            tol,
        } => exec_cauchy(input.as_deref(), g.as_deref(), *d, *axis, *levels, *seed, *a, *tol),
        RunConfig::Simulate {
            d,
            r,
            n,
            steps,
            record_every,
            init,
            moments,
            seed,
        } => exec_simulate(*d, *r, *n, *steps, *record_every, init, moments, *seed),
    }
}

/// The manifest for `config`, as written to `manifest.json`.
pub fn manifest_json(config: &RunConfig) -> String {
    to_json(&Manifest {
        tool: "fermi".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        run: config.clone(),
    })
}

pub fn read_manifest(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Data {
        line: e.line() as u64,
        message: format!("bad manifest: {e}"),
    })?;
    Ok(manifest.run)
}

fn write_outputs(dir: &Path, config: &RunConfig, outcome: &Outcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(outcome.report_name), &outcome.report)?;
    for (name, bytes) in &outcome.files {
        fs::write(dir.join(name), bytes)?;
    }
    fs::write(dir.join("manifest.json"), manifest_json(config))?;
    Ok(())
}

/// Entry point of the `fermi` binary; returns the process exit code.
pub fn main() -> i32 {
    main_from(std::env::args_os())
}

pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        // Fails only if a pool already exists (e.g. repeated calls in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let config = match cli.command {
        Command::Replay { manifest } => match read_manifest(&manifest) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {}: {e}", manifest.display());
                return EXIT_USAGE;
            }
        },
        other => to_config(other).expect("not a replay"),
    };
    let outcome = match execute(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    print!("{}", outcome.report);
    if let Some(dir) = &cli.out {
        if let Err(e) = write_outputs(dir, &config, &outcome) {
            eprintln!("error: writing {}: {e}", dir.display());
            return EXIT_USAGE;
        }
    }
    outcome.exit
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let c = RunConfig::Simulate {
            d: 3,
            r: 1.0,
            n: 100,
            steps: 10,
            record_every: 5,
            init: "cap:1,0.5".into(),
            moments: vec!["1".into(), "w1".into()],
            seed: 7,
        };
        let text = manifest_json(&c);
        assert!(text.contains("\"subcommand\": \"simulate\"") && text.contains("\"N\": 100"));
        let m: Manifest = serde_json::from_str(&text).unwrap();
        assert_eq!(m.run, c);
    }

    #[test]
    fn off_sphere_inputs() {
        assert!(input_point("w", &[2.0, 0.0, 0.0], 3, 1.0).is_err());
        assert!(input_point("w", &[1.0 + 1e-8, 0.0, 0.0], 3, 1.0).is_ok());
        assert!(input_point("w", &[1.0, 0.0], 3, 1.0).is_err());
    }
}
