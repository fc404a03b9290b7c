//! Command-line front end: reads body files, runs the engine and renders
//! CSV tables and short reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lacuna_core::geometry::bodyfile::parse_body;
use lacuna_core::probe::{self, DomainSpec, ProbeOptions};
use lacuna_core::tangency::{self, TangencyOptions};
use lacuna_core::volume::{self, McOptions, PointStream};
use lacuna_core::{BodyKind, BodyModel, Hyperplane, PsiSpec, TUBE_X_DIM};

const CONVENTIONS: &str = "\
Conventions:
  A plane literal 'a1,...,aN;b' denotes a1*x1 + ... + aN*xN + b = 0 (quote it
  in the shell). Vplus is the volume on the side where a.x + b > 0. For tube
  bodies the first three coefficients are alpha (x-part), the rest beta
  (y-part), and gamma = -b, so the plane reads alpha.x + beta.y = gamma.

Tube validity:
  The linear cut-volume formula for tube bodies is accepted only when
  |gamma|/|alpha| + tan(angle) * r* < 1 - eps, where angle is the angle
  between the plane normal and R^3_x and r* the radius of {psi <= eps^2}.";

/// Parsed command line.
#[derive(Debug, Clone, Parser)]
#[command(
    name = "lacuna",
    version,
    about = "Cut volumes, tangency classification and algebraicity probes for smooth bodies"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Body file (one `body ...` line).
    #[arg(long)]
    pub body: Option<PathBuf>,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores); results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StreamArg {
    Uniform,
    Kronecker,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Monte Carlo Vplus and Vminus for one plane.
    #[command(after_help = CONVENTIONS)]
    Volume {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        plane: String,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Point stream; kronecker error bars are the uniform-stream bound.
        #[arg(long, value_enum, default_value_t = StreamArg::Uniform)]
        stream: StreamArg,
    },
    /// Monte Carlo (N-1)-volume of the section by one plane.
    #[command(after_help = CONVENTIONS)]
    Section {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        plane: String,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Slab width (default 1e-3 times the bounding-box diameter).
        #[arg(long)]
        slab: Option<f64>,
    },
    /// Exact volume of a ball cap beyond signed distance t from the center.
    #[command(after_help = CONVENTIONS)]
    Cap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
    },
    /// Compare the tube closed forms with Monte Carlo and check that the
    /// values do not depend on beta.
    #[command(name = "tube-verify", after_help = CONVENTIONS)]
    TubeVerify {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.1)]
        gamma: f64,
        #[arg(long, allow_hyphen_values = true, default_value = "1,0,0")]
        alpha: String,
        /// Comma-separated beta (default zeros).
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<String>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Tangencies in one direction with inertia indices and verdicts.
    #[command(after_help = CONVENTIONS)]
    Tangency {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        direction: String,
        /// Newton multistarts.
        #[arg(long, default_value_t = 64)]
        starts: usize,
        /// Relative eigenvalue threshold of the Morse check.
        #[arg(long, default_value_t = 1e-8)]
        morse_tol: f64,
    },
    /// Index statistics over random directions.
    #[command(after_help = CONVENTIONS)]
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        directions: usize,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        #[arg(long, default_value_t = 1e-8)]
        morse_tol: f64,
    },
    /// Search for a polynomial relation between plane coefficients and
    /// Vplus near a base plane.
    #[command(after_help = CONVENTIONS)]
    Probe {
        #[command(flatten)]
        common: Common,
        /// Base plane of the sampled region.
        #[arg(long, allow_hyphen_values = true)]
        plane: String,
        /// Radius of the coefficient ball around the normalized base.
        #[arg(long, default_value_t = 0.05)]
        radius: f64,
        /// Samples per set (default: the minimum for --degree-max, plus 16).
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 8)]
        degree_max: usize,
        #[arg(long, default_value_t = 1e-9)]
        rank_tol: f64,
        /// Minimum angle (rad) between grad f and the plane normal.
        #[arg(long, default_value_t = 1e-3)]
        min_angle: f64,
        /// Monte Carlo samples per volume when no closed form applies.
        #[arg(long, default_value_t = 1_000_000)]
        mc_samples: u64,
    },
    /// Vplus and Vminus along the parallel pencil X(lambda) = X shifted by
    /// lambda along its unit normal.
    #[command(after_help = CONVENTIONS)]
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        plane: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = -0.5)]
        lambda_min: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.5)]
        lambda_max: f64,
        #[arg(long, default_value_t = 11)]
        steps: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Use closed forms where available instead of Monte Carlo.
        #[arg(long)]
        exact: bool,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Volume { common, .. }
            | Command::Section { common, .. }
            | Command::Cap { common, .. }
            | Command::TubeVerify { common, .. }
            | Command::Tangency { common, .. }
            | Command::Scan { common, .. }
            | Command::Probe { common, .. }
            | Command::Sweep { common, .. } => common,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] lacuna_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 for domain errors, 1 for I/O, parse and usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Engine(e) if e.is_domain() => 2,
            _ => 1,
        }
    }
}

/// What a command produced. `domain_failure` is set when output was
/// written but some result failed a domain check (exit code 2).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub diagnostics: Vec<String>,
    pub domain_failure: bool,
}

impl Outcome {
    fn text(output: String) -> Self {
        Self {
            output,
            ..Default::default()
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.domain_failure {
            2
        } else {
            0
        }
    }
}

/// Full-precision scientific notation (17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{what}: '{t}' is not a number")))
        })
        .collect()
}

/// Parses `a1,...,aN;b`.
pub fn parse_plane(text: &str) -> Result<Hyperplane, CliError> {
    let (normal, offset) = text
        .split_once(';')
        .ok_or_else(|| CliError::Usage(format!("plane '{text}' must look like a1,...,aN;b")))?;
    let mut coeffs = parse_list(normal, "plane")?;
    coeffs.push(
        offset
            .trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("plane: '{offset}' is not a number")))?,
    );
    Ok(Hyperplane::from_coeffs(coeffs)?)
}

pub fn read_body(path: &Path) -> Result<BodyModel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(parse_body(&text)?)
}

fn body_of(common: &Common) -> Result<BodyModel, CliError> {
    let path = common
        .body
        .as_deref()
        .ok_or_else(|| CliError::Usage("--body is required".into()))?;
    read_body(path)
}

fn check_dim(body: &BodyModel, plane: &Hyperplane) -> Result<(), CliError> {
    if body.dim() != plane.dim() {
        return Err(lacuna_core::Error::DimensionMismatch {
            expected: body.dim(),
            got: plane.dim(),
        }
        .into());
    }
    Ok(())
}

/// Runs one command and returns its rendered output.
pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    let common = config.command.common();
    let mc = McOptions {
        workers: common.workers,
        stream: PointStream::Uniform,
    };
    match &config.command {
        Command::Volume {
            plane, samples, stream, ..
        } => {
            let body = body_of(common)?;
            let h = parse_plane(plane)?;
            check_dim(&body, &h)?;
            let opts = McOptions {
                stream: match stream {
                    StreamArg::Uniform => PointStream::Uniform,
                    StreamArg::Kronecker => PointStream::Kronecker,
                },
                ..mc
            };
            let cut = volume::mc_cut_volumes(&body, &h, *samples, common.seed, &opts)?;
            let mut out = String::from("side,value,std_error,samples,seed,generator\n");
            for (name, e) in [("Vplus", &cut.plus), ("Vminus", &cut.minus)] {
                writeln!(
                    out,
                    "{name},{},{},{},{},{}",
                    num(e.value),
                    num(e.std_error),
                    e.samples,
                    e.seed,
                    e.generator
                )
                .unwrap();
            }
            Ok(Outcome::text(out))
        }
        Command::Section {
            plane, samples, slab, ..
        } => {
            let body = body_of(common)?;
            let h = parse_plane(plane)?;
            check_dim(&body, &h)?;
            let s = volume::mc_section_volume(&body, &h, *slab, *samples, common.seed, &mc)?;
            let mut out = String::from("value,std_error,slab,wide_value,wide_std_error,curvature_warning\n");
            writeln!(
                out,
                "{},{},{},{},{},{}",
                num(s.estimate.value),
                num(s.estimate.std_error),
                num(s.slab),
                num(s.wide.value),
                num(s.wide.std_error),
                s.curvature_warning
            )
            .unwrap();
            let mut outcome = Outcome::text(out);
            if s.curvature_warning {
                outcome
                    .diagnostics
                    .push("warning: slab estimates at delta and 2 delta differ by more than 3 sigma".into());
            }
            Ok(outcome)
        }
        Command::Cap { dim, radius, t, .. } => {
            let cap = volume::exact_cap_volume(*dim, *radius, *t)?;
            let rest = volume::exact_cap_volume(*dim, *radius, -*t)?;
            Ok(Outcome::text(format!(
                "dim,radius,t,cap,complement\n{dim},{},{},{},{}\n",
                num(*radius),
                num(*t),
                num(cap),
                num(rest)
            )))
        }
        Command::TubeVerify {
            gamma,
            alpha,
            beta,
            samples,
            ..
        } => tube_verify(common, *gamma, alpha, beta.as_deref(), *samples, &mc),
        Command::Tangency {
            direction,
            starts,
            morse_tol,
            ..
        } => {
            let body = body_of(common)?;
            let v = parse_list(direction, "direction")?;
            let opts = TangencyOptions {
                starts: *starts,
                morse_tol: *morse_tol,
                ..Default::default()
            };
            let s = tangency::find_tangencies(&body, &v, common.seed, &opts)?;
            let n = body.dim();
            let mut out = String::new();
            let head: Vec<String> = (1..=n)
                .map(|i| format!("dir_{i}"))
                .chain(["offset".to_string()])
                .chain((1..=n).map(|i| format!("u_{i}")))
                .chain(
                    [
                        "index_plus",
                        "index_minus",
                        "verdict_plus",
                        "verdict_minus",
                        "morse_margin",
                    ]
                    .map(String::from),
                )
                .collect();
            writeln!(out, "{}", head.join(",")).unwrap();
            for r in &s.reports {
                let mut row: Vec<String> = r.direction.iter().map(|x| num(*x)).collect();
                row.push(num(r.offset));
                row.extend(r.u.iter().map(|x| num(*x)));
                row.push(r.index_plus.to_string());
                row.push(r.index_minus.to_string());
                row.push(r.verdict_plus.to_string());
                row.push(r.verdict_minus.to_string());
                row.push(num(r.morse_margin));
                writeln!(out, "{}", row.join(",")).unwrap();
            }
            let mut outcome = Outcome::text(out);
            for p in &s.non_morse {
                outcome.diagnostics.push(format!(
                    "non-Morse tangency at offset {}: margin {:e} <= {:e}",
                    num(p.offset),
                    p.margin,
                    p.threshold
                ));
            }
            if s.non_converged + s.non_smooth > 0 {
                outcome.diagnostics.push(format!(
                    "{} starts did not converge, {} hit non-smooth points",
                    s.non_converged, s.non_smooth
                ));
            }
            outcome.domain_failure = !s.non_morse.is_empty();
            Ok(outcome)
        }
        Command::Scan {
            directions,
            starts,
            morse_tol,
            ..
        } => {
            let body = body_of(common)?;
            let opts = TangencyOptions {
                starts: *starts,
                morse_tol: *morse_tol,
                ..Default::default()
            };
            let s = tangency::integrability_scan(&body, *directions, common.seed, &opts)?;
            let mut out = String::new();
            writeln!(
                out,
                "scan of a body in R^{} over {} directions (seed {})",
                s.dim, s.directions, common.seed
            )
            .unwrap();
            writeln!(
                out,
                "tangencies: {} (non-Morse skipped: {}, failed starts: {})",
                s.tangencies, s.skipped_non_morse, s.non_converged
            )
            .unwrap();
            writeln!(out, "index_plus,index_minus,count").unwrap();
            for ((p, m), c) in &s.index_counts {
                writeln!(out, "{p},{m},{c}").unwrap();
            }
            writeln!(out, "verdict: {}", s.verdict).unwrap();
            Ok(Outcome::text(out))
        }
        Command::Probe {
            plane,
            radius,
            count,
            degree_max,
            rank_tol,
            min_angle,
            mc_samples,
            ..
        } => {
            let body = body_of(common)?;
            let base = parse_plane(plane)?;
            check_dim(&body, &base)?;
            let count = count.unwrap_or_else(|| probe::required_samples(body.dim(), *degree_max) + 16);
            let spec = DomainSpec {
                base,
                radius: *radius,
                count,
            };
            let opts = ProbeOptions {
                d_max: *degree_max,
                rank_tol: *rank_tol,
                min_angle: *min_angle,
                mc_samples: *mc_samples,
                ..Default::default()
            };
            let report = probe::probe(&body, &spec, common.seed, &opts)?;
            let mut out = String::from("degree,columns,sigma_ratio,verdict\n");
            for r in &report.records {
                let v = if r.sigma_ratio < report.rank_tol {
                    "relation"
                } else {
                    "none"
                };
                writeln!(out, "{},{},{},{v}", r.degree, r.columns, num(r.sigma_ratio)).unwrap();
            }
            let mut outcome = Outcome::text(out);
            outcome.diagnostics.push(format!("verdict: {}", report.verdict));
            if let Some(rel) = report.relation() {
                outcome.diagnostics.push(format!(
                    "residual of the relation: in-sample {:e}, held-out {:e}",
                    rel.in_sample_residual, rel.held_out_residual
                ));
            }
            Ok(outcome)
        }
        Command::Sweep {
            plane,
            lambda_min,
            lambda_max,
            steps,
            samples,
            exact,
            ..
        } => {
            let body = body_of(common)?;
            let h = parse_plane(plane)?;
            check_dim(&body, &h)?;
            if *steps == 0 {
                return Err(CliError::Usage("--steps must be at least 1".into()));
            }
            let tube = match (exact, body.kind()) {
                (true, BodyKind::Tube(_)) => Some(volume::tube_constants(&body)?),
                _ => None,
            };
            let mut out = String::from("lambda,Vplus,Vminus,stderr\n");
            let mut outside = 0;
            for i in 0..*steps {
                let lambda = if *steps == 1 {
                    *lambda_min
                } else {
                    lambda_min + (lambda_max - lambda_min) * i as f64 / (*steps - 1) as f64
                };
                let x = h.shifted(lambda);
                let (p, m, e) = if *exact {
                    if let Some(k) = &tube {
                        let cut = volume::tube_cut_volumes_with(&body, k, &x)?;
                        outside += usize::from(!cut.valid);
                        (cut.plus, cut.minus, 0.0)
                    } else if let Some((p, m)) = volume::exact_cut_volumes(&body, &x)? {
                        (p, m, 0.0)
                    } else {
                        return Err(CliError::Usage("--exact needs a ball, ellipsoid or tube body".into()));
                    }
                } else {
                    let cut = volume::mc_cut_volumes(&body, &x, *samples, common.seed, &mc)?;
                    (cut.plus.value, cut.minus.value, cut.plus.std_error)
                };
                writeln!(out, "{},{},{},{}", num(lambda), num(p), num(m), num(e)).unwrap();
            }
            let mut outcome = Outcome::text(out);
            if outside > 0 {
                outcome
                    .diagnostics
                    .push(format!("warning: {outside} planes fail the tube validity check"));
            }
            Ok(outcome)
        }
    }
}

fn default_tube() -> BodyModel {
    BodyModel::tube(PsiSpec::quadratic(vec![1.0]).expect("valid psi"), 0.3).expect("valid tube")
}

fn tube_verify(
    common: &Common,
    gamma: f64,
    alpha: &str,
    beta: Option<&str>,
    samples: u64,
    mc: &McOptions,
) -> Result<Outcome, CliError> {
    let body = match &common.body {
        Some(p) => read_body(p)?,
        None => default_tube(),
    };
    if !matches!(body.kind(), BodyKind::Tube(_)) {
        return Err(CliError::Usage("tube-verify needs a tube body".into()));
    }
    let alpha = parse_list(alpha, "alpha")?;
    if alpha.len() != TUBE_X_DIM {
        return Err(CliError::Usage(format!("alpha needs {TUBE_X_DIM} entries")));
    }
    let m = body.dim() - TUBE_X_DIM;
    let beta = match beta {
        Some(b) => parse_list(b, "beta")?,
        None => vec![0.0; m],
    };
    if beta.len() != m {
        return Err(CliError::Usage(format!("beta needs {m} entries")));
    }
    let h = Hyperplane::from_split(&alpha, &beta, gamma)?;
    let h0 = Hyperplane::from_split(&alpha, &vec![0.0; m], gamma)?;
    let k = volume::tube_constants(&body)?;
    let cut = volume::tube_cut_volumes_with(&body, &k, &h)?;
    let cut0 = volume::tube_cut_volumes_with(&body, &k, &h0)?;
    let est = volume::mc_cut_volumes(&body, &h, samples, common.seed, mc)?;
    let est0 = volume::mc_cut_volumes(&body, &h0, samples, common.seed.wrapping_add(1), mc)?;
    let section = volume::tube_section_volume_with(&body, &k, &h)?;
    let slab = volume::mc_section_volume(&body, &h, None, samples, common.seed, mc)?;

    let status = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let mut out = String::from("check,expected,observed,tolerance,status\n");
    let mut row = |name: &str, expected: f64, observed: f64, tol: f64, ok: bool| {
        writeln!(
            out,
            "{name},{},{},{},{}",
            num(expected),
            num(observed),
            num(tol),
            status(ok)
        )
        .unwrap();
    };
    row("domain_check", 1.0, f64::from(u8::from(cut.valid)), 0.0, cut.valid);
    row(
        "C",
        k.c,
        est.total.value,
        3.0 * est.total.std_error,
        (k.c - est.total.value).abs() <= 3.0 * est.total.std_error,
    );
    for (name, f, e) in [("Vplus", cut.plus, &est.plus), ("Vminus", cut.minus, &est.minus)] {
        let tol = 3.0 * e.std_error;
        row(name, f, e.value, tol, (f - e.value).abs() <= tol);
    }
    let tol = 0.02 * section;
    row(
        "section",
        section,
        slab.estimate.value,
        tol,
        (section - slab.estimate.value).abs() <= tol,
    );
    let same = cut.plus.to_bits() == cut0.plus.to_bits() && cut.minus.to_bits() == cut0.minus.to_bits();
    row("beta_formula", cut0.plus, cut.plus, 0.0, same);
    let tol = 3.0 * (est.plus.std_error.powi(2) + est0.plus.std_error.powi(2)).sqrt();
    row(
        "beta_mc",
        est0.plus.value,
        est.plus.value,
        tol,
        (est0.plus.value - est.plus.value).abs() <= tol,
    );

    let mut outcome = Outcome::text(out);
    if !cut.valid {
        outcome
            .diagnostics
            .push("warning: plane is outside the validated domain of the tube formula".into());
    }
    Ok(outcome)
}

/// Writes the output to `--out` or standard output.
pub fn emit(config: &RunConfig, outcome: &Outcome) -> Result<(), CliError> {
    use std::io::Write;
    match &config.command.common().out {
        Some(path) => std::fs::write(path, &outcome.output).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(outcome.output.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}
