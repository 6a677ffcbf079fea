//! Command-line surface over `pzk-core`: argument parsing, dispatch and file emission.

pub mod config;
pub mod export;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use pzk_core::admissible::find_admissible_set;
use pzk_core::corpus::{build_corpus, corpus_polynomial};
use pzk_core::lamination::{angles_up_to_denominator, check_invariance, check_unlinked, compute_lamination, default_universe};
use pzk_core::poly::{default_max_period, Polynomial};
use pzk_core::potential::{trace_rays, LandingOptions, RayOptions, TraceStatus};
use pzk_core::puzzle::{build_puzzle_nest, build_puzzle_nest_from_angles, check_refinement, critical_nest_diagnostics, PuzzleNest, BOUNDARY_MARGIN};
use pzk_core::render::{render, RenderMode, RenderSpec};
use pzk_core::renorm::{detect_renormalization, internal_marking, straighten, ReturnMap, MARKING_RADIUS};
use pzk_core::tuning::{tune_angle, tune_angle_exact, verify_tuning, CheckStatus, TuningSubstitution};
use pzk_core::{Angle, Error, RayPair};
use serde::Serialize;

use crate::config::Settings;
use crate::export::{csv_document, json_document, ppm_document, Meta};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "pzk", version, about = "Rays, laminations, puzzles, renormalization and tuning for polynomials")]
pub struct Cli {
    /// Numerical tolerance (env PZK_TOL).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads (env PZK_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// `key = value` settings file, lowest precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Ppm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Julia,
    Quadratic,
    CubicSlice,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Trace external rays.
    Rays {
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        #[arg(long, value_delimiter = ',', required = true)]
        angles: Vec<String>,
    },
    /// Rational lamination from co-landing rays.
    Lamination {
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        /// Universe of all angles with denominator up to this bound.
        #[arg(long)]
        max_den: Option<u64>,
        /// Otherwise: periodic angles up to this period plus first preimages.
        #[arg(long, default_value_t = 4)]
        max_period: u32,
    },
    /// Search for an admissible set.
    Admissible {
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        #[arg(long)]
        max_period: Option<u32>,
    },
    /// Puzzle nest up to a depth.
    Puzzle {
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        #[arg(long)]
        depth: usize,
        #[command(flatten)]
        z: ZArgs,
    },
    /// Renormalization test at a puzzle depth.
    Renorm {
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        m0: usize,
        #[command(flatten)]
        z: ZArgs,
    },
    /// Quadratic parameter of a degree-2 renormalization.
    Straighten {
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        #[arg(long, default_value_t = 1)]
        m0: usize,
        /// Tuning blocks; derived from the internal marking when absent.
        #[arg(long, value_delimiter = ',')]
        blocks: Option<Vec<String>>,
        /// Check renormalization on the puzzle at this depth first.
        #[arg(long)]
        depth: Option<usize>,
        #[command(flatten)]
        z: ZArgs,
    },
    /// Apply a tuning substitution to an angle.
    TuneAngle {
        #[arg(long, value_delimiter = ',', required = true)]
        blocks: Vec<String>,
        #[arg(long)]
        angle: String,
        #[arg(long, default_value_t = 2)]
        degree: u64,
    },
    /// Lamination containment and tuned co-landing for a candidate map.
    VerifyTuning {
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        /// Map whose lamination must be contained.
        #[arg(long, allow_hyphen_values = true)]
        f0: String,
        #[arg(long, value_delimiter = ',', required = true)]
        blocks: Vec<String>,
        /// Co-landing pairs of the straightened map, as `s:t`.
        #[arg(long, value_delimiter = ',')]
        pairs: Vec<String>,
        #[arg(long, default_value_t = 4)]
        max_period: u32,
        #[arg(long, default_value_t = 1e-5)]
        colanding_tol: f64,
    },
    /// Escape-time image (PPM).
    Render {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, allow_hyphen_values = true)]
        poly: Option<String>,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        center: String,
        #[arg(long, default_value_t = 4.0)]
        width: f64,
        /// `WxH`.
        #[arg(long, default_value = "512x512")]
        pixels: String,
        #[arg(long, default_value_t = 256)]
        max_iter: usize,
        #[arg(long, default_value_t = 2)]
        m0: usize,
    },
    /// Acceptance corpus with provenance.
    Corpus,
}

#[derive(clap::Args, Debug, Clone)]
pub struct ZArgs {
    /// Angles landing on Z; found by the admissible-set search when absent.
    #[arg(long, value_delimiter = ',')]
    pub angles: Option<Vec<String>>,
    /// Equipotential-only puzzle (Z empty).
    #[arg(long, conflicts_with = "angles")]
    pub empty_z: bool,
    #[arg(long)]
    pub max_period: Option<u32>,
}

/// Failure of a command, with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn domain(message: impl Into<String>) -> Self {
        Failure { code: EXIT_DOMAIN, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Uncertified { .. } | Error::Bifurcation(_) => EXIT_INCONCLUSIVE,
            _ => EXIT_DOMAIN,
        };
        Failure { code, message: e.to_string() }
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_DOMAIN } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn settings(cli: &Cli) -> Result<Settings, Failure> {
    let file = match &cli.config {
        Some(p) => config::read_config(p).map_err(Failure::domain)?,
        None => config::Layer::new(),
    };
    config::resolve(cli.tol, cli.threads, &config::env_layer(), &file).map_err(Failure::domain)
}

pub fn execute(cli: &Cli) -> CmdResult {
    let s = settings(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = s.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::domain(e.to_string()))?;
    pool.install(|| dispatch(cli, &s))
}

/// A complex number such as `-1`, `0.5+0.3i`, `2i` or `1e-3-2e-4i`.
pub fn parse_complex(s: &str) -> Result<Complex64, Failure> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Failure::domain(format!("cannot parse complex number {s:?}"));
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

/// A corpus label, or normal-form coefficients `c0,c2,...,cd` with `cd = 1`.
pub fn parse_poly(s: &str) -> Result<Polynomial, Failure> {
    if s.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) && !s.contains(',') {
        return Ok(corpus_polynomial(s)?);
    }
    let parts: Vec<Complex64> = s.split(',').map(parse_complex).collect::<Result<_, _>>()?;
    if parts.len() < 2 {
        return Err(Failure::domain("coefficient list needs c0 and a leading 1"));
    }
    let mut coeffs = Vec::with_capacity(parts.len() + 1);
    coeffs.push(parts[0]);
    coeffs.push(Complex64::new(0.0, 0.0));
    coeffs.extend_from_slice(&parts[1..]);
    Ok(Polynomial::normal_form(coeffs)?.with_label(s))
}

pub fn parse_angles(v: &[String]) -> Result<Vec<Angle>, Failure> {
    v.iter().map(|a| a.parse::<Angle>().map_err(Failure::from)).collect()
}

pub fn parse_blocks(v: &[String], d: u64) -> Result<TuningSubstitution, Failure> {
    let blocks = v
        .iter()
        .map(|b| {
            b.trim()
                .chars()
                .map(|c| c.to_digit(36).map(|x| x as u8).ok_or_else(|| Failure::domain(format!("bad block {b:?}"))))
                .collect::<Result<Vec<u8>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TuningSubstitution::new(d, 2, blocks)?)
}

fn parse_pixels(s: &str) -> Result<(u32, u32), Failure> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| Failure::domain(format!("pixels {s:?}: expected WxH")))?;
    let p = |x: &str| x.trim().parse::<u32>().map_err(|_| Failure::domain(format!("pixels {s:?}: expected WxH")));
    Ok((p(w)?, p(h)?))
}

fn base_tolerances(s: &Settings) -> BTreeMap<String, f64> {
    let lo = LandingOptions::with_tol(s.tol);
    BTreeMap::from([
        ("tol".to_string(), s.tol),
        ("cluster_radius".to_string(), 100.0 * s.tol),
        ("accept_radius".to_string(), lo.accept_radius),
        ("h0".to_string(), lo.ray.h0),
        ("terminal_potential".to_string(), lo.ray.target_potential),
    ])
}

struct Emitter<'a> {
    cli: &'a Cli,
    meta: Meta,
}

impl Emitter<'_> {
    fn new<'a>(cli: &'a Cli, s: &Settings, inputs: &[(&str, String)], extra: &[(&str, f64)]) -> Emitter<'a> {
        let inputs = inputs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        let mut tols = base_tolerances(s);
        tols.extend(extra.iter().map(|(k, v)| (k.to_string(), *v)));
        Emitter { cli, meta: Meta::new(command_name(&cli.command), inputs, tols) }
    }

    fn format(&self, allowed: &[Format]) -> Result<Format, Failure> {
        let from_ext = self.cli.out.as_deref().and_then(|p| p.extension()).and_then(|e| e.to_str()).and_then(|e| {
            match e.to_ascii_lowercase().as_str() {
                "json" => Some(Format::Json),
                "csv" => Some(Format::Csv),
                "ppm" => Some(Format::Ppm),
                _ => None,
            }
        });
        let f = self.cli.format.or(from_ext).unwrap_or(allowed[0]);
        if !allowed.contains(&f) {
            return Err(Failure::domain(format!("--format {f:?} not supported here")));
        }
        Ok(f)
    }

    fn write(&self, bytes: &[u8]) -> Result<(), Failure> {
        write_output(self.cli.out.as_deref(), bytes)
    }

    fn json<T: Serialize>(&self, value: &T) -> Result<(), Failure> {
        self.write(&json_document(&self.meta, value).map_err(|e| Failure::domain(e.to_string()))?)
    }

    fn csv(&self, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
        self.write(&csv_document(&self.meta, header, rows))
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Failure::domain(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| Failure::domain(e.to_string())),
    }
}

pub fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Rays { .. } => "rays",
        Command::Lamination { .. } => "lamination",
        Command::Admissible { .. } => "admissible",
        Command::Puzzle { .. } => "puzzle",
        Command::Renorm { .. } => "renorm",
        Command::Straighten { .. } => "straighten",
        Command::TuneAngle { .. } => "tune-angle",
        Command::VerifyTuning { .. } => "verify-tuning",
        Command::Render { .. } => "render",
        Command::Corpus => "corpus",
    }
}

fn fmt_c(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

fn coeff_string(f: &Polynomial) -> String {
    f.coeffs().iter().map(|c| fmt_c(*c)).collect::<Vec<_>>().join(",")
}

fn z_inputs(z: &ZArgs) -> String {
    match (&z.angles, z.empty_z) {
        (_, true) => "empty".into(),
        (Some(a), _) => a.join(","),
        (None, _) => format!("admissible(max_period={:?})", z.max_period),
    }
}

fn nest_for(f: &Polynomial, z: &ZArgs, depth: usize, opts: &LandingOptions) -> Result<PuzzleNest, Failure> {
    if z.empty_z {
        return Ok(build_puzzle_nest_from_angles(f, &[], depth, opts)?);
    }
    if let Some(a) = &z.angles {
        return Ok(build_puzzle_nest_from_angles(f, &parse_angles(a)?, depth, opts)?);
    }
    let p = z.max_period.unwrap_or(default_max_period(f.degree()) as u32);
    let adm = find_admissible_set(f, p, opts)?;
    Ok(build_puzzle_nest(f, &adm, depth, opts)?)
}

#[derive(Serialize)]
struct LaminationOut<'a> {
    lamination: &'a pzk_core::lamination::RationalLamination,
    invariance_violations: usize,
    link_violations: usize,
}

#[derive(Serialize)]
struct PuzzleOut<'a> {
    nest: &'a PuzzleNest,
    piece_paths: Vec<Vec<String>>,
    refinement_issues: Vec<String>,
    diagnostics: pzk_core::puzzle::NestDiagnostics,
}

#[derive(Serialize)]
struct StraightenOut {
    return_map: ReturnMap,
    result: pzk_core::renorm::StraighteningResult,
}

#[derive(Serialize)]
struct TuneOut {
    angle: Angle,
    blocks: Vec<String>,
    tuned: Option<Angle>,
    expansion: String,
}

fn dispatch(cli: &Cli, s: &Settings) -> CmdResult {
    let opts = LandingOptions::with_tol(s.tol);
    match &cli.command {
        Command::Rays { poly, angles } => {
            let f = parse_poly(poly)?;
            let ts = parse_angles(angles)?;
            let em = Emitter::new(cli, s, &[("poly", coeff_string(&f)), ("angles", angles.join(","))], &[]);
            let traces = trace_rays(&f, &ts, &RayOptions::default())?;
            match em.format(&[Format::Json, Format::Csv])? {
                Format::Csv => {
                    let mut rows = Vec::new();
                    for tr in &traces {
                        for (i, smp) in tr.samples.iter().enumerate() {
                            rows.push(vec![
                                tr.angle.to_string(),
                                i.to_string(),
                                smp.potential.to_string(),
                                smp.point.re.to_string(),
                                smp.point.im.to_string(),
                                format!("{:?}", tr.status),
                            ]);
                        }
                    }
                    em.csv(&["angle", "index", "potential", "re", "im", "status"], &rows)?;
                }
                _ => em.json(&traces)?,
            }
            let suspect = traces.iter().any(|t| t.status == TraceStatus::BifurcationSuspected);
            Ok(if suspect { EXIT_INCONCLUSIVE } else { EXIT_OK })
        }
        Command::Lamination { poly, max_den, max_period } => {
            let f = parse_poly(poly)?;
            let universe = match max_den {
                Some(q) => angles_up_to_denominator(*q),
                None => default_universe(f.degree() as u64, *max_period)?,
            };
            let uni = match max_den {
                Some(q) => format!("max_den={q}"),
                None => format!("max_period={max_period}"),
            };
            let em = Emitter::new(cli, s, &[("poly", coeff_string(&f)), ("universe", uni)], &[]);
            let lam = compute_lamination(&f, &universe, &opts)?;
            let inv = check_invariance(&lam, f.degree() as u64).len();
            let link = check_unlinked(&lam).len();
            match em.format(&[Format::Json, Format::Csv])? {
                Format::Csv => {
                    let mut rows = Vec::new();
                    for (k, class) in lam.classes.iter().enumerate() {
                        let p = lam.class_points.get(k).copied();
                        for t in class {
                            rows.push(vec![
                                k.to_string(),
                                t.to_string(),
                                p.map_or(String::new(), |p| p.re.to_string()),
                                p.map_or(String::new(), |p| p.im.to_string()),
                            ]);
                        }
                    }
                    em.csv(&["class", "angle", "re", "im"], &rows)?;
                }
                _ => em.json(&LaminationOut { lamination: &lam, invariance_violations: inv, link_violations: link })?,
            }
            if inv + link > 0 {
                return Err(Failure::domain(format!("{inv} invariance and {link} linking violations")));
            }
            Ok(if lam.exclusions.is_empty() { EXIT_OK } else { EXIT_INCONCLUSIVE })
        }
        Command::Admissible { poly, max_period } => {
            let f = parse_poly(poly)?;
            let p = max_period.unwrap_or(default_max_period(f.degree()) as u32);
            let em = Emitter::new(cli, s, &[("poly", coeff_string(&f)), ("max_period", p.to_string())], &[]);
            em.format(&[Format::Json])?;
            let adm = find_admissible_set(&f, p, &opts)?;
            em.json(&adm)?;
            Ok(EXIT_OK)
        }
        Command::Puzzle { poly, depth, z } => {
            let f = parse_poly(poly)?;
            let em = Emitter::new(
                cli,
                s,
                &[("poly", coeff_string(&f)), ("depth", depth.to_string()), ("z", z_inputs(z))],
                &[("boundary_margin", BOUNDARY_MARGIN)],
            );
            em.format(&[Format::Json])?;
            let nest = nest_for(&f, z, *depth, &opts)?;
            let out = PuzzleOut {
                piece_paths: nest.levels.iter().map(|l| l.pieces.iter().map(|p| p.svg_path()).collect()).collect(),
                refinement_issues: check_refinement(&f, &nest),
                diagnostics: critical_nest_diagnostics(&nest),
                nest: &nest,
            };
            em.json(&out)?;
            Ok(EXIT_OK)
        }
        Command::Renorm { poly, depth, m0, z } => {
            let f = parse_poly(poly)?;
            let em = Emitter::new(
                cli,
                s,
                &[("poly", coeff_string(&f)), ("depth", depth.to_string()), ("m0", m0.to_string()), ("z", z_inputs(z))],
                &[("boundary_margin", BOUNDARY_MARGIN)],
            );
            em.format(&[Format::Json])?;
            let nest = nest_for(&f, z, *depth, &opts)?;
            let cand = detect_renormalization(&f, &nest, *m0, *depth, s.tol)?;
            em.json(&cand)?;
            Ok(EXIT_OK)
        }
        Command::Straighten { poly, m0, blocks, depth, z } => {
            let f = parse_poly(poly)?;
            let d = f.degree() as u64;
            let em = Emitter::new(
                cli,
                s,
                &[
                    ("poly", coeff_string(&f)),
                    ("m0", m0.to_string()),
                    ("blocks", blocks.as_ref().map_or("marking".into(), |b| b.join(","))),
                    ("depth", depth.map_or("none".into(), |n| n.to_string())),
                    ("z", z_inputs(z)),
                ],
                &[("marking_radius", MARKING_RADIUS)],
            );
            em.format(&[Format::Json])?;
            let tuning = match blocks {
                Some(b) => parse_blocks(b, d)?,
                None if *m0 == 1 => TuningSubstitution::identity(d)?,
                None => internal_marking(&f, *m0, &opts)?.tuning(d)?,
            };
            let r = match depth {
                Some(n) => {
                    let nest = nest_for(&f, z, *n, &opts)?;
                    detect_renormalization(&f, &nest, *m0, *n, s.tol)?.return_map(tuning)
                }
                None if *m0 == 1 && blocks.is_none() => ReturnMap::identity(&f, s.tol)?,
                None => {
                    let cp = f.critical_points(s.tol)?;
                    let zero = Complex64::new(0.0, 0.0);
                    let critical_point = if f.eval_derivative(zero).norm() == 0.0 || cp.points.len() != 1 {
                        zero
                    } else {
                        cp.points[0].point
                    };
                    ReturnMap { m0: *m0, critical_point, tuning }
                }
            };
            let result = straighten(&r, &f, 2, &opts)?;
            em.json(&StraightenOut { return_map: r, result })?;
            Ok(EXIT_OK)
        }
        Command::TuneAngle { blocks, angle, degree } => {
            let t: Angle = angle.parse()?;
            let sub = parse_blocks(blocks, *degree)?;
            let exact = tune_angle_exact(&sub, t)?;
            let tuned = tune_angle(&sub, t).ok();
            let shown = tuned.map_or_else(|| exact.to_string(), |a| a.to_string());
            if cli.out.is_some() {
                let em = Emitter::new(cli, s, &[("angle", t.to_string()), ("blocks", blocks.join(",")), ("degree", degree.to_string())], &[]);
                em.format(&[Format::Json])?;
                em.json(&TuneOut { angle: t, blocks: sub.block_strings(), tuned, expansion: exact.to_string() })?;
            } else {
                println!("{shown}");
            }
            Ok(EXIT_OK)
        }
        Command::VerifyTuning { poly, f0, blocks, pairs, max_period, colanding_tol } => {
            let f = parse_poly(poly)?;
            let g0 = parse_poly(f0)?;
            let sub = parse_blocks(blocks, f.degree() as u64)?;
            let g_pairs = pairs
                .iter()
                .map(|p| {
                    let (a, b) = p.split_once(':').ok_or_else(|| Failure::domain(format!("pair {p:?}: expected s:t")))?;
                    Ok(RayPair::new(a.parse()?, b.parse()?)?)
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            let em = Emitter::new(
                cli,
                s,
                &[
                    ("poly", coeff_string(&f)),
                    ("f0", coeff_string(&g0)),
                    ("blocks", blocks.join(",")),
                    ("pairs", pairs.join(",")),
                    ("max_period", max_period.to_string()),
                ],
                &[("colanding_tol", *colanding_tol)],
            );
            em.format(&[Format::Json])?;
            let universe = default_universe(g0.degree() as u64, *max_period)?;
            let lam0 = compute_lamination(&g0, &universe, &opts)?;
            let report = verify_tuning(&f, &lam0, &sub, &g_pairs, *colanding_tol, &opts)?;
            em.json(&report)?;
            let statuses = std::iter::once(&report.containment_status).chain(report.pairs.iter().map(|p| &p.status));
            let mut code = EXIT_OK;
            for st in statuses {
                match st {
                    CheckStatus::Fail => return Ok(EXIT_DOMAIN),
                    CheckStatus::Inconclusive => code = EXIT_INCONCLUSIVE,
                    CheckStatus::Pass => {}
                }
            }
            Ok(code)
        }
        Command::Render { mode, poly, center, width, pixels, max_iter, m0 } => {
            let mode = match mode {
                Mode::Julia => {
                    let p = poly.as_deref().ok_or_else(|| Failure::domain("julia mode needs --poly"))?;
                    RenderMode::Julia { polynomial: parse_poly(p)? }
                }
                Mode::Quadratic => RenderMode::ParameterQuadratic,
                Mode::CubicSlice => RenderMode::ParameterCubicSlice { m0: *m0 },
            };
            let spec = RenderSpec {
                center: parse_complex(center)?,
                width: *width,
                pixels: parse_pixels(pixels)?,
                max_iterations: *max_iter,
                mode,
            };
            let em = Emitter::new(
                cli,
                s,
                &[("spec", serde_json::to_string(&spec).map_err(|e| Failure::domain(e.to_string()))?)],
                &[],
            );
            em.format(&[Format::Ppm])?;
            let (img, report) = render(&spec)?;
            em.write(&ppm_document(&em.meta, &img))?;
            eprintln!("interior {} escaped {} sentinel {}", report.interior, report.escaped, report.sentinel);
            Ok(if report.sentinel > 0 { EXIT_INCONCLUSIVE } else { EXIT_OK })
        }
        Command::Corpus => {
            let em = Emitter::new(cli, s, &[], &[("verify_tol", pzk_core::corpus::VERIFY_TOL)]);
            let corpus = build_corpus()?;
            match em.format(&[Format::Json, Format::Csv])? {
                Format::Csv => {
                    let rows: Vec<Vec<String>> = corpus
                        .iter()
                        .map(|e| {
                            vec![
                                e.label.clone(),
                                e.polynomial.degree().to_string(),
                                coeff_string(&e.polynomial),
                                serde_json::to_string(&e.provenance).unwrap_or_default(),
                                format!("{:e}", e.residual),
                            ]
                        })
                        .collect();
                    em.csv(&["label", "degree", "coefficients", "provenance", "residual"], &rows)?;
                }
                _ => em.json(&corpus)?,
            }
            Ok(EXIT_OK)
        }
    }
}
