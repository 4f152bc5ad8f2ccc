//! Command-line front end: `body`, `torsion`, `verify` and `oracle` verbs.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::bodyfile::{parse_list, parse_test_function, BodySpec};
use crate::config::{Config, Format};
use crate::ellipsoid::{
    ellipsoid_t, frame_invariance, homothety_path_3d, max_identity_residual, quadrature_rigidity,
    surface_area_gauss, surface_area_parametric, verify_theorem, Ellipsoid, OracleTolerances,
};
use crate::error::{Error, Result};
use crate::geometry::{diameter, scale, translate, volume, ConvexBody2D, TestFunction};
use crate::quadrature::S2Quadrature;
use crate::report::{write_atomic, CampaignResult, Failure, RecordSet};
use crate::torsion::compute_bundle_with;
use crate::variation::{
    finite_difference, hessian_boundary_identities, second_variation_of, selfadjointness_check,
    stations,
};
use crate::verify::{
    concavity_check, verify_bm_torsion, verify_bm_volume, verify_poincare, PoincareForm,
    VerificationReport,
};

#[derive(Debug, Parser)]
#[command(
    name = "torsion-lab",
    version,
    about = "Torsional rigidity of convex bodies: solver, variations and inequality checks"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Grid spacing, e.g. 1/128
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Number of normal-angle nodes N (even)
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    /// Strictly decreasing grid spacings, e.g. 1/32,1/64,1/128
    #[arg(long, global = true)]
    pub ladder: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON table overriding check tolerances
    #[arg(long, global = true)]
    pub tol_file: Option<PathBuf>,
    /// Relative residual required of the linear solver
    #[arg(long, global = true)]
    pub solver_tol: Option<f64>,
    /// Write the report here instead of standard output
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate or describe a body file
    Body {
        #[command(subcommand)]
        action: BodyAction,
    },
    /// Torsional rigidity by all three routes, optionally over a ladder
    Torsion {
        #[arg(long)]
        body: String,
    },
    /// Inequality and identity checks
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
    /// Closed-form checks on ellipses and ellipsoids
    Oracle {
        #[command(subcommand)]
        target: OracleCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum BodyAction {
    Validate { file: String },
    Show { file: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Boundary,
    Spherical,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Brunn-Minkowski for volume and torsional rigidity along Minkowski combinations
    Bm {
        #[arg(long)]
        body_a: Option<String>,
        #[arg(long)]
        body_b: Option<String>,
        /// Pair body A with a scaled and translated copy of itself
        #[arg(long)]
        homothetic: Option<f64>,
        /// Number of random pairs drawn from --seed
        #[arg(long)]
        random_pairs: Option<usize>,
        #[arg(long, default_value_t = 11)]
        samples: usize,
    },
    /// Poincare-type inequality for torsional-mean-zero functions
    Poincare {
        #[arg(long)]
        body: String,
        #[arg(long, required = true, num_args = 1..)]
        psi: Vec<String>,
        #[arg(long, value_enum, default_value_t = FormArg::Boundary)]
        form: FormArg,
    },
    /// Concavity of T^{1/4} along h + t phi
    Concavity {
        #[arg(long)]
        body: String,
        #[arg(long)]
        phi: String,
        #[arg(long, default_value_t = 11)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        t_max: f64,
    },
    /// First or second variation against central differences
    Variation {
        #[arg(long)]
        body: String,
        #[arg(long)]
        phi: String,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        order: u8,
    },
    /// Symmetry of the shape-derivative boundary operator
    Adjoint {
        #[arg(long)]
        body: String,
        #[arg(long)]
        phi: String,
        #[arg(long)]
        phi2: String,
    },
    /// Boundary Hessian identities of the solved torsion function
    Hessian {
        #[arg(long)]
        body: String,
        #[arg(long, default_value_t = 16)]
        stations: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleCheck {
    Torsion,
    Theorem,
    Hessian,
    Homothety,
    Area,
    Frames,
    All,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    Ellipsoid {
        /// Semi-axes, two or three values
        #[arg(long)]
        axes: String,
        #[arg(long, value_enum, default_value_t = OracleCheck::All)]
        check: OracleCheck,
        /// Translation direction (defaults to the first axis)
        #[arg(long)]
        direction: Option<String>,
        /// Scale factor at the end of the homothety path
        #[arg(long, default_value_t = 2.0)]
        scale: f64,
        #[arg(long, default_value_t = 64)]
        polar: usize,
        #[arg(long, default_value_t = 128)]
        azimuthal: usize,
    },
}

/// Exit status and rendered report of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn error(e: &Error) -> Self {
        let body = json!({ "error": e.kind(), "message": e.to_string() });
        Self {
            code: 2,
            stdout: String::new(),
            stderr: serde_json::to_string_pretty(&body).unwrap_or_default() + "\n",
        }
    }
}

/// Parses `args` (without the program name) and runs the command.
pub fn run<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(
        std::iter::once("torsion-lab".to_string()).chain(args.iter().cloned()),
    ) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: 2,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let config = match build_config(&cli.global, args) {
        Ok(c) => c,
        Err(e) => return Outcome::error(&e),
    };
    let (code, text) = match execute(&cli.command, &config) {
        Ok(r) => r,
        Err(e) => return Outcome::error(&e),
    };
    match &config.out {
        Some(path) => match write_atomic(path, &text) {
            Ok(()) => Outcome {
                code,
                stdout: String::new(),
                stderr: String::new(),
            },
            Err(e) => Outcome::error(&e),
        },
        None => Outcome {
            code,
            stdout: text,
            stderr: String::new(),
        },
    }
}

fn build_config(g: &GlobalArgs, command: Vec<String>) -> Result<Config> {
    let mut c = Config {
        command,
        ..Config::default()
    };
    if let Some(grid) = &g.grid {
        let v = parse_list(grid)?;
        if v.len() != 1 {
            return Err(Error::Parse(format!(
                "--grid takes one spacing, got {grid:?}"
            )));
        }
        c.grid = v[0];
    }
    if let Some(ladder) = &g.ladder {
        c.ladder = parse_list(ladder)?;
    }
    if let Some(n) = g.nodes {
        c.nodes = n;
    }
    if let Some(seed) = g.seed {
        c.seed = seed;
    }
    if let Some(path) = &g.tol_file {
        c.tolerances = Config::load_tolerances(path)?;
    }
    if let Some(t) = g.solver_tol {
        c.solver_tolerance = t;
    }
    if let Some(f) = g.format {
        c.format = f;
    }
    c.out = g.out.clone();
    c.validate()?;
    Ok(c)
}

fn config_echo(c: &Config) -> Value {
    serde_json::to_value(c).unwrap_or(Value::Null)
}

fn execute(command: &Command, c: &Config) -> Result<(i32, String)> {
    match command {
        Command::Body { action } => cmd_body(action, c),
        Command::Torsion { body } => cmd_torsion(body, c),
        Command::Verify { check } => {
            let result = cmd_verify(check, c)?;
            Ok((result.exit_code(), result.render(c.format)?))
        }
        Command::Oracle { target } => {
            let result = cmd_oracle(target, c)?;
            Ok((result.exit_code(), result.render(c.format)?))
        }
    }
}

fn cmd_body(action: &BodyAction, c: &Config) -> Result<(i32, String)> {
    let (file, show) = match action {
        BodyAction::Validate { file } => (file, false),
        BodyAction::Show { file } => (file, true),
    };
    let spec = BodySpec::parse_arg(file, c.nodes)?;
    let (code, record) = match spec.build() {
        Ok(body) => {
            let mut r = json!({
                "body": file,
                "valid": true,
                "nodes": body.nodes(),
                "area": volume(&body),
                "diameter": diameter(&body),
                "min_w": body.min_w(),
            });
            if show {
                let s = body.support();
                let extra = json!({
                    "c0": s.c0(),
                    "cos": s.cos_coeffs(),
                    "sin": s.sin_coeffs(),
                    "max_w": body.w().iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    "min_width": body.min_width(),
                    "aspect_ratio": body.aspect_ratio(),
                    "x_range": body.x_range(),
                    "y_range": body.y_range(),
                    "perimeter": body.w().iter().sum::<f64>() * 2.0 * std::f64::consts::PI / body.nodes() as f64,
                });
                if let (Value::Object(m), Value::Object(e)) = (&mut r, extra) {
                    m.extend(e);
                }
            }
            (0, r)
        }
        Err(Error::NotConvex { theta, w }) => (
            1,
            json!({ "body": file, "valid": false, "error": "NotConvex", "theta": theta, "w": w }),
        ),
        Err(e) => return Err(e),
    };
    let set = RecordSet {
        config: config_echo(c),
        records: vec![record],
    };
    Ok((code, set.render(c.format)?))
}

fn cmd_torsion(body_arg: &str, c: &Config) -> Result<(i32, String)> {
    let spec = BodySpec::parse_arg(body_arg, c.nodes)?;
    let body = spec.build()?;
    let exact = spec.exact_rigidity();
    let options = c.bundle_options();
    let mut records = vec![];
    let mut previous: Option<(f64, [f64; 3])> = None;
    for delta in c.grids() {
        let start = Instant::now();
        let bundle = compute_bundle_with(&body, delta, &options)?;
        let values = [bundle.t_energy, bundle.t_mass, bundle.t_boundary];
        let mut record = serde_json::to_value(bundle.summary())?;
        let m = record.as_object_mut().expect("summary is an object");
        m.insert("body".into(), json!(body_arg));
        if let Some(t) = exact {
            let errors = values.map(|v| (v - t).abs());
            m.insert("exact".into(), json!(t));
            for (k, name) in ["energy", "mass", "boundary"].iter().enumerate() {
                m.insert(format!("rel_error_{name}"), json!((values[k] - t) / t));
                if let Some((d0, e0)) = previous {
                    m.insert(
                        format!("order_{name}"),
                        json!((e0[k] / errors[k]).ln() / (d0 / delta).ln()),
                    );
                }
            }
            previous = Some((delta, errors));
        }
        m.insert(
            "timing_ms".into(),
            json!(start.elapsed().as_secs_f64() * 1e3),
        );
        records.push(record);
    }
    let set = RecordSet {
        config: config_echo(c),
        records,
    };
    Ok((0, set.render(c.format)?))
}

type Outcomes = Vec<std::result::Result<VerificationReport, Failure>>;

fn with_inputs(mut report: VerificationReport, extra: Value) -> VerificationReport {
    if let (Value::Object(m), Value::Object(e)) = (&mut report.inputs, extra) {
        m.extend(e);
    }
    report
}

fn body_of(arg: &str, c: &Config) -> Result<(BodySpec, ConvexBody2D)> {
    let spec = BodySpec::parse_arg(arg, c.nodes)?;
    let body = spec.build()?;
    Ok((spec, body))
}

fn phi_of(arg: &str) -> Result<TestFunction> {
    parse_test_function(arg)
}

fn cmd_verify(check: &VerifyCommand, c: &Config) -> Result<CampaignResult> {
    let tol = &c.tolerances;
    let options = c.bundle_options();
    let delta = c.grid;
    let outcomes: Outcomes = match check {
        VerifyCommand::Bm {
            body_a,
            body_b,
            homothetic,
            random_pairs,
            samples,
        } => {
            let mut pairs: Vec<(Value, ConvexBody2D, ConvexBody2D)> = vec![];
            if let Some(k) = random_pairs {
                for i in 0..*k as u64 {
                    let (sa, sb) = (
                        BodySpec::random(c.seed + 2 * i, c.nodes),
                        BodySpec::random(c.seed + 2 * i + 1, c.nodes),
                    );
                    pairs.push((
                        json!({ "body_a": sa, "body_b": sb }),
                        sa.build()?,
                        sb.build()?,
                    ));
                }
            } else {
                let a_arg = body_a.as_deref().ok_or_else(|| {
                    Error::InvalidArgument("verify bm needs --body-a or --random-pairs".into())
                })?;
                let (sa, a) = body_of(a_arg, c)?;
                match (body_b, homothetic) {
                    (Some(b_arg), None) => {
                        let (sb, b) = body_of(b_arg, c)?;
                        pairs.push((json!({ "body_a": sa, "body_b": sb }), a, b));
                    }
                    (None, Some(s)) => {
                        let b = translate(&scale(&a, *s)?, HOMOTHETY_SHIFT)?;
                        pairs.push((
                            json!({ "body_a": sa, "homothetic": s, "shift": HOMOTHETY_SHIFT }),
                            a,
                            b,
                        ));
                    }
                    _ => {
                        return Err(Error::InvalidArgument(
                            "verify bm needs exactly one of --body-b and --homothetic".into(),
                        ))
                    }
                }
            }
            pairs
                .par_iter()
                .flat_map_iter(|(case, a, b)| {
                    let volume =
                        verify_bm_volume(a, b, *samples, tol).map(|r| with_inputs(r, case.clone()));
                    let torsion = verify_bm_torsion(a, b, *samples, delta, &options, tol)
                        .map(|r| with_inputs(r, case.clone()));
                    [volume, torsion]
                        .into_iter()
                        .map(|r| r.map_err(|e| Failure::new(case.clone(), &e)))
                        .collect::<Vec<_>>()
                })
                .collect()
        }
        VerifyCommand::Poincare { body, psi, form } => {
            let (spec, body) = body_of(body, c)?;
            let psis = psi.iter().map(|p| phi_of(p)).collect::<Result<Vec<_>>>()?;
            let bundle = compute_bundle_with(&body, delta, &options)?;
            let form = match form {
                FormArg::Boundary => PoincareForm::Boundary,
                FormArg::Spherical => PoincareForm::Spherical,
            };
            psis.par_iter()
                .zip(psi.par_iter())
                .map(|(p, text)| {
                    let case = json!({ "body": spec, "psi_spec": text });
                    verify_poincare(&bundle, p, form, &options, tol)
                        .map(|r| with_inputs(r, case.clone()))
                        .map_err(|e| Failure::new(case, &e))
                })
                .collect()
        }
        VerifyCommand::Concavity {
            body,
            phi,
            samples,
            t_max,
        } => {
            let (spec, body) = body_of(body, c)?;
            let case = json!({ "body": spec, "phi_spec": phi });
            vec![
                concavity_check(&body, &phi_of(phi)?, *samples, *t_max, delta, &options, tol)
                    .map(|r| with_inputs(r, case.clone()))
                    .map_err(|e| Failure::new(case, &e)),
            ]
        }
        VerifyCommand::Variation { body, phi, order } => {
            let (spec, body) = body_of(body, c)?;
            let case = json!({ "body": spec, "phi_spec": phi, "order": order, "delta": delta });
            vec![variation_report(&body, &phi_of(phi)?, *order, c)
                .map_err(|e| Failure::new(case.clone(), &e))
                .map(|r| with_inputs(r, case))]
        }
        VerifyCommand::Adjoint { body, phi, phi2 } => {
            let (spec, body) = body_of(body, c)?;
            let case = json!({ "body": spec, "phi_spec": phi, "phi2_spec": phi2, "delta": delta });
            let (p1, p2) = (phi_of(phi)?, phi_of(phi2)?);
            let result = compute_bundle_with(&body, delta, &options).and_then(|bundle| {
                let start = Instant::now();
                let a = selfadjointness_check(&bundle, &p1, &p2, &options)?;
                let mut r =
                    VerificationReport::residual("adjoint", case.clone(), a.gap, tol.adjoint)
                        .with("a12", a.a12)
                        .with("a21", a.a21)
                        .with("scale", a.scale);
                r.timing_ms = start.elapsed().as_secs_f64() * 1e3;
                Ok(r)
            });
            vec![result.map_err(|e| Failure::new(case, &e))]
        }
        VerifyCommand::Hessian {
            body,
            stations: count,
        } => {
            let (spec, body) = body_of(body, c)?;
            let case = json!({ "body": spec, "stations": count, "delta": delta });
            let result = compute_bundle_with(&body, delta, &options).and_then(|bundle| {
                let start = Instant::now();
                let residuals = hessian_boundary_identities(&bundle, &stations(*count))?;
                let worst = residuals.iter().map(|r| r.max_scaled()).fold(0.0, f64::max);
                let mut r =
                    VerificationReport::residual("hessian", case.clone(), worst, tol.hessian)
                        .with("stations", &residuals);
                r.timing_ms = start.elapsed().as_secs_f64() * 1e3;
                Ok(r)
            });
            vec![result.map_err(|e| Failure::new(case, &e))]
        }
    };
    Ok(CampaignResult::new(config_echo(c), outcomes))
}

/// Translation applied to the scaled copy in homothetic pairs.
const HOMOTHETY_SHIFT: [f64; 2] = [0.25, -0.1];

/// Formula against central differences. Agreement is measured relative to
/// the sum of the absolute contributions, which stays meaningful when the
/// derivative itself vanishes.
fn variation_report(
    body: &ConvexBody2D,
    phi: &TestFunction,
    order: u8,
    c: &Config,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let options = c.bundle_options();
    let bundle = compute_bundle_with(body, c.grid, &options)?;
    let steps = c.fd_steps();
    let mut report = if order == 1 {
        let formula = bundle.first_variation(phi);
        let fd = finite_difference(body, phi, c.grid, steps.first, &options)?;
        let sampled = phi.sample(body.nodes());
        let scale = bundle
            .torsional_measure_density()
            .zip_with(&sampled, |d, p| d * p.abs())
            .integrate()
            .max(formula.abs());
        VerificationReport::agreement(
            "first_variation",
            json!({}),
            formula,
            fd.first,
            c.tolerances.variation_first * scale,
        )
        .with("scale", scale)
        .with("finite_difference", fd)
    } else {
        let breakdown = second_variation_of(&bundle, phi, &options)?;
        let fd = finite_difference(body, phi, c.grid, steps.second, &options)?;
        let scale = [
            breakdown.term_curv,
            breakdown.term_udot,
            breakdown.term_four,
            breakdown.term_grad,
        ]
        .iter()
        .map(|t| t.abs())
        .sum::<f64>()
        .max(fd.second.abs());
        VerificationReport::agreement(
            "second_variation",
            json!({}),
            breakdown.total,
            fd.second,
            c.tolerances.variation_second * scale,
        )
        .with("scale", scale)
        .with("breakdown", breakdown)
        .with("finite_difference", fd)
    };
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

fn cmd_oracle(target: &OracleCommand, c: &Config) -> Result<CampaignResult> {
    let OracleCommand::Ellipsoid {
        axes,
        check,
        direction,
        scale,
        polar,
        azimuthal,
    } = target;
    let e = Ellipsoid::new(&parse_list(axes)?)?;
    let quad = S2Quadrature::new(*polar, *azimuthal)?;
    let tol = &c.tolerances;
    let n = e.dim();
    let direction = match direction {
        Some(d) => {
            let v = parse_list(d)?;
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(Error::InvalidArgument("zero translation direction".into()));
            }
            v.iter().map(|x| x / norm).collect()
        }
        None => {
            let mut v = vec![0.0; n];
            v[0] = 1.0;
            v
        }
    };
    let wanted = |k: OracleCheck| *check == k || *check == OracleCheck::All;
    let case = json!({ "axes": e.axes(), "polar": polar, "azimuthal": azimuthal });
    let mut outcomes: Outcomes = vec![];
    let mut push = |r: Result<VerificationReport>| {
        outcomes.push(
            r.map(|r| with_inputs(r, case.clone()))
                .map_err(|err| Failure::new(case.clone(), &err)),
        )
    };
    if wanted(OracleCheck::Torsion) {
        push(timed(|| {
            let exact = ellipsoid_t(&e);
            let (mass, energy) = quadrature_rigidity(&e, 8, &quad);
            Ok(VerificationReport::agreement(
                "ellipsoid_torsion",
                json!({}),
                exact,
                mass,
                tol.oracle_quadrature * exact,
            )
            .with("quadrature_energy", energy)
            .with("relative_error", (mass - exact) / exact))
        }));
    }
    if wanted(OracleCheck::Theorem) {
        let otol = OracleTolerances {
            violation: tol.oracle_violation,
            equality: tol.oracle_equality,
            constraint: tol.constraint,
        };
        push(verify_theorem(&e, &direction, &quad, &otol));
    }
    if wanted(OracleCheck::Hessian) {
        push(timed(|| {
            Ok(VerificationReport::residual(
                "ellipsoid_hessian",
                json!({}),
                max_identity_residual(&e, &quad),
                tol.hessian_exact,
            ))
        }));
    }
    if wanted(OracleCheck::Homothety) {
        push(homothety_path_3d(&e, *scale, 11, tol.homothety));
    }
    if wanted(OracleCheck::Area) {
        push(timed(|| {
            let gauss = surface_area_gauss(&e, &quad);
            let parametric = surface_area_parametric(&e, 256);
            Ok(VerificationReport::agreement(
                "surface_area",
                json!({}),
                gauss,
                parametric,
                tol.oracle_quadrature * parametric,
            ))
        }));
    }
    if wanted(OracleCheck::Frames) && n == 3 {
        push(timed(|| {
            let d = frame_invariance(&e, 100, c.seed);
            Ok(VerificationReport::residual(
                "frame_invariance",
                json!({ "seed": c.seed, "count": 100 }),
                d.exact,
                tol.frame_invariance,
            )
            .with("finite_difference", d.finite_difference))
        }));
    }
    Ok(CampaignResult::new(config_echo(c), outcomes))
}

fn timed(f: impl FnOnce() -> Result<VerificationReport>) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut r = f()?;
    r.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(r)
}
