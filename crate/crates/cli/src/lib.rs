//! Command-line front end for `yamabe-lab`.
//!
//! Every subcommand produces either CSV (one header line, then data rows,
//! reals printed with 17 significant digits) or a single JSON document.
//! Exit codes: 0 success, 1 verify-suite failure, 2 invalid input,
//! 3 numerical non-convergence.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use yamabe_lab::census::{self, DerdzinskiCensus, SolutionBranch};
use yamabe_lab::curvature::{self, CurvatureReport, ReferenceConstants};
use yamabe_lab::efcore::{self, structural_constants, PhaseState, StructuralConstants};
use yamabe_lab::ellip::{self, ClosedForm, EstimateBounds};
use yamabe_lab::period::{self, PERIOD_TOLERANCE};
use yamabe_lab::verify::{self, VerifyReport};
use yamabe_lab::{Dimension, Error, SystemKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "yamabe-lab",
    version,
    about = "Constant scalar curvature metrics on S^1(T) x S^(n-1)"
)]
pub struct CommandRequest {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, value_enum, global = true, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Number of metrics (including the product metric) for circle length T.
    #[command(allow_negative_numbers = true)]
    Count {
        #[arg(long)]
        n: i64,
        #[arg(long = "T")]
        t: f64,
    },
    /// All solution branches for circle length T.
    #[command(allow_negative_numbers = true)]
    Branches {
        #[arg(long)]
        n: i64,
        #[arg(long = "T")]
        t: f64,
    },
    /// Period T(c) and T'(c) in raw time, at one energy or on a grid.
    #[command(allow_negative_numbers = true)]
    Period {
        #[arg(long)]
        n: i64,
        #[arg(long, required_unless_present = "grid", conflicts_with = "grid")]
        c: Option<f64>,
        /// Number of interior grid points on (0, c_max).
        #[arg(long)]
        grid: Option<usize>,
        /// Relative quadrature tolerance (single energy only).
        #[arg(long, conflicts_with = "grid")]
        tol: Option<f64>,
    },
    /// Warped-product census on (0, T) x S^(n-1).
    #[command(allow_negative_numbers = true)]
    Derdzinski {
        #[arg(long)]
        n: i64,
        #[arg(long = "C")]
        c_const: f64,
        #[arg(long = "R")]
        r: f64,
        #[arg(long = "T")]
        t: f64,
    },
    /// Closed-form profile (n = 3, 4, 6) sampled over one period.
    #[command(allow_negative_numbers = true)]
    ClosedForm {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        c: f64,
        /// Number of intervals over the period.
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Curvature report and non-parallelism witness of census branch j.
    #[command(allow_negative_numbers = true)]
    Curvature {
        #[arg(long)]
        n: i64,
        #[arg(long = "T")]
        t: f64,
        #[arg(long)]
        j: u32,
        /// Samples per fundamental period.
        #[arg(long, default_value_t = 512)]
        grid: usize,
    },
    /// Dilational Pohozaev invariant at energy c.
    #[command(allow_negative_numbers = true)]
    Pohozaev {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        c: f64,
    },
    /// Structural and reference constants (T defaults to T_1).
    #[command(allow_negative_numbers = true)]
    Constants {
        #[arg(long)]
        n: i64,
        #[arg(long = "T")]
        t: Option<f64>,
    },
    /// Bounds of the singular solution at energy c.
    #[command(allow_negative_numbers = true)]
    Bounds {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        c: f64,
    },
    /// Run the self-check suite, optionally restricted to some modules.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(verify::MODULES))]
        modules: Vec<String>,
    },
}

/// A rendered result: CSV table plus JSON document, and the exit code.
struct Rendered {
    header: &'static str,
    rows: Vec<Vec<Cell>>,
    json: serde_json::Value,
    code: i32,
}

enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Real(v) => write!(f, "{v:.16e}"),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                write!(f, "\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => f.write_str(s),
        }
    }
}

fn real(v: f64) -> Cell {
    // fold -0.0 into 0.0
    Cell::Real(v + 0.0)
}

fn int(v: impl Into<i64>) -> Cell {
    Cell::Int(v.into())
}

#[derive(Serialize)]
struct Meta {
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

impl Meta {
    fn tol(tolerance: f64) -> Self {
        Meta {
            tolerance: Some(tolerance),
            notes: Vec::new(),
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("output types serialize")
}

fn finite(name: &'static str, v: f64) -> Result<f64, Error> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(name, v, "finite reals"))
    }
}

fn dim(n: i64) -> Result<Dimension, Error> {
    Dimension::new(n)
}

fn render(command: &Command) -> Result<Rendered, Error> {
    match *command {
        Command::Count { n, t } => {
            let d = dim(n)?;
            let t = finite("T", t)?;
            let k = census::count_metrics(d, t)?;
            #[derive(Serialize)]
            struct Out {
                n: Dimension,
                #[serde(rename = "T")]
                t: f64,
                k: u32,
            }
            Ok(Rendered {
                header: "n,T,k",
                rows: vec![vec![int(d.get()), real(t), int(k)]],
                json: to_json(&Out { n: d, t, k }),
                code: EXIT_OK,
            })
        }
        Command::Branches { n, t } => {
            let d = dim(n)?;
            let t = finite("T", t)?;
            let branches = census::solve_branches(d, t)?;
            #[derive(Serialize)]
            struct Row {
                j: u32,
                c: f64,
                deficit: f64,
                fundamental_period: f64,
            }
            #[derive(Serialize)]
            struct Out {
                n: Dimension,
                #[serde(rename = "T")]
                t: f64,
                k: usize,
                branches: Vec<Row>,
                meta: Meta,
            }
            let rows = branches
                .iter()
                .map(|b: &SolutionBranch| {
                    vec![
                        int(b.j),
                        real(b.c),
                        real(b.deficit),
                        real(b.fundamental_period),
                    ]
                })
                .collect();
            let out = Out {
                n: d,
                t,
                k: branches.len(),
                branches: branches
                    .iter()
                    .map(|b| Row {
                        j: b.j,
                        c: b.c,
                        deficit: b.deficit,
                        fundamental_period: b.fundamental_period,
                    })
                    .collect(),
                meta: Meta::tol(census::CENSUS_PERIOD_TOLERANCE),
            };
            Ok(Rendered {
                header: "j,c,deficit,fundamental_period",
                rows,
                json: to_json(&out),
                code: EXIT_OK,
            })
        }
        Command::Period { n, c, grid, tol } => {
            let d = dim(n)?;
            let kind = SystemKind::emden_fowler(d);
            let beta = structural_constants(kind).beta;
            #[derive(Serialize)]
            struct Row {
                c: f64,
                #[serde(rename = "T")]
                t: f64,
                #[serde(rename = "Tprime")]
                t_prime: f64,
            }
            let samples: Vec<Row>;
            let mut extra = serde_json::Map::new();
            let tolerance;
            if let Some(size) = grid {
                let report = period::monotonicity_report(kind, size)?;
                samples = report
                    .grid
                    .iter()
                    .map(|s| Row {
                        c: s.c,
                        t: s.t / beta,
                        t_prime: s.t_prime / beta,
                    })
                    .collect();
                extra.insert(
                    "strictly_increasing".into(),
                    report.strictly_increasing.into(),
                );
                extra.insert("min_Tprime".into(), (report.min_t_prime / beta).into());
                tolerance = PERIOD_TOLERANCE;
            } else {
                let c = finite("c", c.expect("clap requires c or grid"))?;
                tolerance = match tol {
                    Some(t) if !(1e-14..=1e-2).contains(&t) => {
                        return Err(Error::range("tol", t, "[1e-14, 1e-2]"))
                    }
                    Some(t) => t,
                    None => PERIOD_TOLERANCE,
                };
                let t = period::period_with_tolerance(kind, c, tolerance)?;
                let tp = period::period_derivative_with_tolerance(kind, c, tolerance)?;
                samples = vec![Row {
                    c,
                    t: t / beta,
                    t_prime: tp / beta,
                }];
            }
            let rows = samples
                .iter()
                .map(|s| vec![real(s.c), real(s.t), real(s.t_prime)])
                .collect();
            let json = if grid.is_some() {
                let mut m = serde_json::Map::new();
                m.insert("n".into(), to_json(&d));
                m.insert("rows".into(), to_json(&samples));
                m.extend(extra);
                m.insert("meta".into(), to_json(&Meta::tol(tolerance)));
                serde_json::Value::Object(m)
            } else {
                let s = &samples[0];
                let mut m = serde_json::Map::new();
                m.insert("n".into(), to_json(&d));
                m.insert("c".into(), s.c.into());
                m.insert("T".into(), s.t.into());
                m.insert("Tprime".into(), s.t_prime.into());
                m.insert("meta".into(), to_json(&Meta::tol(tolerance)));
                serde_json::Value::Object(m)
            };
            Ok(Rendered {
                header: "c,T,Tprime",
                rows,
                json,
                code: EXIT_OK,
            })
        }
        Command::Derdzinski { n, c_const, r, t } => {
            let d = dim(n)?;
            let report = census::derdzinski_census(
                d,
                finite("C", c_const)?,
                finite("R", r)?,
                finite("T", t)?,
            )?;
            #[derive(Serialize)]
            struct Out<'a> {
                n: Dimension,
                #[serde(rename = "T")]
                t: f64,
                #[serde(flatten)]
                census: &'a DerdzinskiCensus,
                threshold: f64,
                meta: Meta,
            }
            let rows = report
                .branches
                .iter()
                .map(|b| {
                    vec![
                        int(b.branch.j),
                        real(b.branch.c),
                        real(b.branch.deficit),
                        real(b.branch.fundamental_period),
                        real(b.h_min),
                        real(b.h_max),
                    ]
                })
                .collect();
            let mut meta = Meta::tol(census::CENSUS_PERIOD_TOLERANCE);
            if !report.unattainable.is_empty() {
                meta.notes.push(format!(
                    "winding indices {:?} lie in the counting bracket but their periods are outside the range of the period function",
                    report.unattainable
                ));
            }
            Ok(Rendered {
                header: "j,c,deficit,fundamental_period,h_min,h_max",
                rows,
                json: to_json(&Out {
                    n: d,
                    t,
                    census: &report,
                    threshold: report.norm.threshold(),
                    meta,
                }),
                code: EXIT_OK,
            })
        }
        Command::ClosedForm { n, c, grid } => {
            let d = dim(n)?;
            let c = finite("c", c)?;
            if grid < 2 {
                return Err(Error::range("grid", grid as f64, "[2, inf)"));
            }
            let form = ellip::closed_form(d, c)?;
            let p = ellip::closed_form_period(&form)?;
            let kind = SystemKind::emden_fowler(d);
            #[derive(Serialize)]
            struct Row {
                t: f64,
                u: f64,
                uprime: f64,
                energy: f64,
            }
            let samples = (0..=grid)
                .map(|i| {
                    let t = p * i as f64 / grid as f64;
                    let (u, up, _) = ellip::evaluate_closed_form_jet(&form, t, false)?;
                    let w = efcore::normalize_state(d, PhaseState { t, w: u, wp: up });
                    Ok(Row {
                        t,
                        u,
                        uprime: up,
                        energy: efcore::energy(kind, w),
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            #[derive(Serialize)]
            struct Out<'a> {
                #[serde(flatten)]
                form: &'a ClosedForm,
                curve: ellip::CurveClass,
                period: f64,
                rows: &'a [Row],
            }
            Ok(Rendered {
                header: "t,u,uprime,energy",
                rows: samples
                    .iter()
                    .map(|s| vec![real(s.t), real(s.u), real(s.uprime), real(s.energy)])
                    .collect(),
                json: to_json(&Out {
                    form: &form,
                    curve: ellip::curve_class(d),
                    period: p,
                    rows: &samples,
                }),
                code: EXIT_OK,
            })
        }
        Command::Curvature { n, t, j, grid } => {
            let d = dim(n)?;
            let t = finite("T", t)?;
            let branches = census::solve_branches(d, t)?;
            let Some(branch) = branches.iter().find(|b| b.j == j) else {
                return Err(Error::range(
                    "j",
                    j as f64,
                    format!("[0, {}]", branches.len() - 1),
                ));
            };
            let steps = grid.max(efcore::MIN_STEPS_PER_PERIOD);
            let report = curvature::nonparallel_witness(d, &census::branch_orbit(branch, steps)?)?;
            #[derive(Serialize)]
            struct Out<'a> {
                #[serde(rename = "T")]
                t: f64,
                j: u32,
                #[serde(flatten)]
                report: &'a CurvatureReport,
            }
            Ok(Rendered {
                header: "t,D0R00",
                rows: report
                    .witness_profile
                    .iter()
                    .map(|s| vec![real(s.t), real(s.d0r00)])
                    .collect(),
                json: to_json(&Out {
                    t,
                    j,
                    report: &report,
                }),
                code: EXIT_OK,
            })
        }
        Command::Pohozaev { n, c } => {
            let d = dim(n)?;
            let c = finite("c", c)?;
            let value = curvature::pohozaev(d, c)?;
            #[derive(Serialize)]
            struct Out {
                n: Dimension,
                c: f64,
                pohozaev: f64,
            }
            Ok(Rendered {
                header: "n,c,pohozaev",
                rows: vec![vec![int(d.get()), real(c), real(value)]],
                json: to_json(&Out {
                    n: d,
                    c,
                    pohozaev: value,
                }),
                code: EXIT_OK,
            })
        }
        Command::Constants { n, t } => {
            let d = dim(n)?;
            let sc = structural_constants(SystemKind::emden_fowler(d));
            let t = finite("T", t.unwrap_or(sc.t1))?;
            let rc = curvature::reference_constants(d, t)?;
            #[derive(Serialize)]
            struct Out {
                n: Dimension,
                #[serde(rename = "T")]
                t: f64,
                #[serde(flatten)]
                structural: StructuralConstants,
                #[serde(flatten)]
                reference: ReferenceConstants,
            }
            let out = Out {
                n: d,
                t,
                structural: sc,
                reference: rc,
            };
            Ok(Rendered {
                header: "n,T,alpha,beta,b0,c_max,t1,center,linear_frequency_sq,omega_nm1,omega_n,J_trivial,mu_sphere,K2,hv_bound",
                rows: vec![vec![
                    int(d.get()),
                    real(t),
                    real(sc.alpha),
                    real(sc.beta),
                    real(sc.b0),
                    real(sc.c_max),
                    real(sc.t1),
                    real(sc.center),
                    real(sc.linear_frequency_sq),
                    real(rc.omega_nm1),
                    real(rc.omega_n),
                    real(rc.j_trivial),
                    real(rc.mu_sphere),
                    real(rc.k2),
                    real(rc.hv_bound),
                ]],
                json: to_json(&out),
                code: EXIT_OK,
            })
        }
        Command::Bounds { n, c } => {
            let d = dim(n)?;
            let b: EstimateBounds = ellip::estimate_bounds(d, finite("c", c)?)?;
            Ok(Rendered {
                header: "n,c,C_n,C_n_prime,T",
                rows: vec![vec![
                    int(d.get()),
                    real(b.c),
                    real(b.c_n),
                    real(b.c_n_prime),
                    real(b.period),
                ]],
                json: to_json(&b),
                code: EXIT_OK,
            })
        }
        Command::Verify { ref modules } => {
            let report: VerifyReport = verify::verify_suite(modules);
            let rows = report
                .checks
                .iter()
                .map(|c| {
                    vec![
                        Cell::Text(c.module.clone()),
                        Cell::Text(c.name.clone()),
                        Cell::Text(if c.passed { "PASS" } else { "FAIL" }.into()),
                        real(c.measured),
                        real(c.tolerance),
                        Cell::Text(c.error.clone().unwrap_or_default()),
                    ]
                })
                .collect();
            Ok(Rendered {
                header: "module,name,status,measured,tolerance,error",
                rows,
                json: to_json(&report),
                code: if report.passed {
                    EXIT_OK
                } else {
                    EXIT_VERIFY_FAILED
                },
            })
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_non_convergence() {
        EXIT_NON_CONVERGENCE
    } else {
        EXIT_INVALID
    }
}

fn write_rendered(r: &Rendered, format: Format, sink: &mut dyn Write) -> io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(sink, "{}", r.header)?;
            for row in &r.rows {
                let line: Vec<String> = row.iter().map(ToString::to_string).collect();
                writeln!(sink, "{}", line.join(","))?;
            }
        }
        Format::Json => {
            serde_json::to_writer(&mut *sink, &r.json)?;
            writeln!(sink)?;
        }
    }
    sink.flush()
}

/// Runs a parsed request, writing the result to `sink` (or to `--out` when
/// given) and diagnostics to `diag`. Returns the process exit code.
pub fn execute(request: &CommandRequest, sink: &mut dyn Write, diag: &mut dyn Write) -> i32 {
    let rendered = match render(&request.command) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(diag, "error: {e}");
            return exit_code(&e);
        }
    };
    let written = match &request.out {
        Some(path) => File::create(path)
            .and_then(|f| write_rendered(&rendered, request.format, &mut BufWriter::new(f))),
        None => write_rendered(&rendered, request.format, sink),
    };
    if let Err(e) = written {
        let _ = writeln!(diag, "error: cannot write output: {e}");
        return EXIT_INVALID;
    }
    rendered.code
}

/// Parses `args` (including the program name) and executes them.
pub fn run<I, S>(args: I, sink: &mut dyn Write, diag: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    match CommandRequest::try_parse_from(args) {
        Ok(request) => execute(&request, sink, diag),
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                diag.write_all(text.as_bytes())
            } else {
                sink.write_all(text.as_bytes())
            };
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(
            exit_code(&Error::NonConvergence("quadrature".into())),
            EXIT_NON_CONVERGENCE
        );
        assert_eq!(exit_code(&Error::InvalidDimension(2)), EXIT_INVALID);
        assert_eq!(
            exit_code(&Error::range("c", -0.1, "[0, 0.25)")),
            EXIT_INVALID
        );
    }

    #[test]
    fn csv_cells() {
        assert_eq!(real(-0.0).to_string(), "0.0000000000000000e0");
        assert_eq!(real(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(Cell::Text("a, b".into()).to_string(), "\"a, b\"");
    }
}
