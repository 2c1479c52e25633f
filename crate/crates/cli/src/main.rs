//! Command-line surface of the toolkit: load a measure-spec file, run one
//! operation, emit a deterministic JSON or CSV report.
//!
//! Exit codes: 0 success, 1 invalid spec or arguments, 2 numeric failure,
//! 3 requested-finite quantity is divergent.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use otelbaev_core::measure::Violation;
use otelbaev_core::oracle::{self, BoundaryCondition};
use otelbaev_core::otelbaev;
use otelbaev_core::{bounds, validate_spec, ExtReal, SignedMeasureSpec, ValidationReport};

use output::{cell, emit, CliError, Format, Provenance, Table};

#[derive(Parser)]
#[command(
    name = "otelbaev",
    version,
    about = "Certified spectral estimates for -d2/dx2 + mu from a measure-spec file",
    after_help = "Spec files are JSON: {\"positive\": [components], \"negative\": [components], \
                  \"constants\": {\"beta\": \"auto\"|number, \"alpha\": number, \"l\": number}}.\n\
                  Set OTELBAEV_THREADS to cap worker threads."
)]
struct Cli {
    /// Path to the JSON measure spec
    #[arg(long, global = true)]
    spec: Option<PathBuf>,

    /// Output path (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format; csv is available for table-shaped reports only
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Relative tolerance for width bisection and quadrature
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a spec against its class constants and report violations
    Validate,
    /// The width field q* of the positive part
    #[command(subcommand)]
    Qstar(QstarCmd),
    /// Lebesgue measure of the sublevel set {q* <= lambda} and M(lambda)
    Sublevel {
        #[arg(long)]
        lambda: f64,
    },
    /// Certified spectral bounds
    #[command(subcommand)]
    Bounds(BoundsCmd),
    /// Discreteness verdict for the spectrum
    Classify,
    /// Finite-element cross-validation backend
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Raw measure sweeps (figure data)
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Cross-checks of certified bounds against the oracle
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Subcommand)]
enum QstarCmd {
    /// Evaluate q* at one point
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
    },
    /// Sample q* over a window with consistency refinement
    Profile {
        /// Window as "a,b"
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: (f64, f64),
        /// Number of base samples
        #[arg(long, default_value_t = 257)]
        samples: usize,
    },
}

#[derive(Subcommand)]
enum BoundsCmd {
    /// Eigenvalue-counting bounds at one level or over a lambda grid
    Count {
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        /// Grid as "start:stop:step"
        #[arg(long = "lambda-grid", value_parser = parse_grid, allow_hyphen_values = true)]
        lambda_grid: Option<LambdaGrid>,
    },
    /// Bracket for the lowest eigenvalue
    Lambda1,
    /// Bracket for the infimum of the essential spectrum
    Essential,
    /// Schatten-class membership and inverse-eigenvalue sum brackets
    Schatten {
        /// Comma-separated exponents, each > 1/2
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
    },
    /// Certified brackets for individual eigenvalues
    EigenN {
        /// Comma-separated 1-based indices
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
    },
    /// Multiplicity bound at a candidate eigenvalue
    Mult {
        #[arg(long, allow_hyphen_values = true)]
        nu: f64,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Assemble the truncated pencil and export its bands
    Assemble {
        #[arg(long = "R")]
        radius: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Bc::Neumann)]
        bc: Bc,
    },
    /// Count oracle eigenvalues below lambda
    Count {
        #[arg(long = "R")]
        radius: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Bc::Neumann)]
        bc: Bc,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
    },
    /// The k lowest oracle eigenvalues
    Eigs {
        #[arg(long = "R")]
        radius: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Bc::Neumann)]
        bc: Bc,
        #[arg(long, default_value_t = 8)]
        k: usize,
    },
    /// Count stability across truncation radii and grid sizes
    Study {
        /// Comma-separated truncation radii
        #[arg(long = "R", value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        /// Comma-separated element counts
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Bc::Neumann)]
        bc: Bc,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
    },
}

#[derive(Subcommand)]
enum MeasureCmd {
    /// Signed cumulative distribution sweep, F(x) = mu((-inf side), x]
    Cdf {
        /// Window as "a,b"
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: (f64, f64),
        #[arg(long, default_value_t = 1025)]
        samples: usize,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Sweep a lambda grid comparing certified bounds against oracle counts
    Sandwich {
        /// Grid as "start:stop:step"
        #[arg(long = "lambda-grid", value_parser = parse_grid, allow_hyphen_values = true)]
        lambda_grid: LambdaGrid,
        #[arg(long = "R", default_value_t = 12.0)]
        radius: f64,
        #[arg(long, default_value_t = 2400)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Bc::Neumann)]
        bc: Bc,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum Bc {
    Neumann,
    Dirichlet,
}

impl From<Bc> for BoundaryCondition {
    fn from(bc: Bc) -> Self {
        match bc {
            Bc::Neumann => BoundaryCondition::Neumann,
            Bc::Dirichlet => BoundaryCondition::Dirichlet,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct LambdaGrid {
    start: f64,
    stop: f64,
    step: f64,
}

impl LambdaGrid {
    fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0u64;
        loop {
            let v = self.start + self.step * k as f64;
            if v > self.stop + 1e-9 * self.step {
                break;
            }
            out.push(v);
            k += 1;
        }
        out
    }
}

fn parse_grid(s: &str) -> Result<LambdaGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected start:stop:step".into());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|e| format!("bad number {p:?}: {e}"))
        })
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(start.is_finite() && stop.is_finite() && step > 0.0 && step.is_finite()) {
        return Err("grid needs finite endpoints and a positive step".into());
    }
    if stop < start {
        return Err("grid stop must not precede start".into());
    }
    if (stop - start) / step > 100_000.0 {
        return Err("grid has more than 100000 points".into());
    }
    Ok(LambdaGrid { start, stop, step })
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected a,b".into());
    }
    let a = parts[0].parse::<f64>().map_err(|e| e.to_string())?;
    let b = parts[1].parse::<f64>().map_err(|e| e.to_string())?;
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err("window needs finite endpoints with b > a".into());
    }
    Ok((a, b))
}

struct LoadedSpec {
    spec: SignedMeasureSpec,
    sha256: String,
}

fn load_spec(path: &Option<PathBuf>) -> Result<LoadedSpec, CliError> {
    let Some(path) = path else {
        return Err(CliError::new(1, "missing --spec <path>"));
    };
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::new(1, format!("cannot read {}: {e}", path.display())))?;
    let spec: SignedMeasureSpec = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::new(1, format!("invalid spec file {}: {e}", path.display())))?;
    let digest = Sha256::digest(&bytes);
    let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(LoadedSpec { spec, sha256 })
}

/// Structural gate for operations that bypass the class-constant checks:
/// every component must at least be a well-formed measure.
fn structurally_checked(
    loaded: &LoadedSpec,
) -> Result<(&SignedMeasureSpec, ValidationReport), CliError> {
    let report = validate_spec(&loaded.spec);
    if !report.admissibility.oracle {
        let msgs: Vec<String> = report
            .violations
            .iter()
            .filter(|v| matches!(v, Violation::InvalidComponent { .. }))
            .map(|v| v.to_string())
            .collect();
        return Err(CliError::new(
            1,
            format!("spec is structurally invalid: {}", msgs.join("; ")),
        ));
    }
    Ok((&loaded.spec, report))
}

#[derive(Serialize)]
struct QstarPoint {
    x: f64,
    q_star: f64,
    /// the window width d with q* = 1/d^2
    d: f64,
}

#[derive(Serialize)]
struct SublevelReport {
    lambda: f64,
    sublevel: otelbaev::SublevelResult,
    m: otelbaev::MEval,
}

#[derive(Serialize)]
struct OracleRun<T: Serialize> {
    radius: f64,
    n: usize,
    bc: BoundaryCondition,
    warnings: Vec<String>,
    dropped_mass: ExtReal,
    result: T,
}

#[derive(Clone, Serialize)]
struct SandwichRow {
    lambda: f64,
    lower: ExtReal,
    upper: ExtReal,
    oracle_count: usize,
    ok: bool,
}

#[derive(Serialize)]
struct SandwichReport {
    radius: f64,
    n: usize,
    bc: BoundaryCondition,
    rows: Vec<SandwichRow>,
    /// rows where the oracle count escapes the certified bracket; empty on
    /// success
    violations: Vec<SandwichRow>,
}

fn setup_threads() {
    if let Ok(v) = std::env::var("OTELBAEV_THREADS") {
        match v.parse::<usize>() {
            Ok(t) if t >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring OTELBAEV_THREADS={v:?} (want a positive integer)"),
        }
    }
}

fn main() -> ExitCode {
    setup_threads();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                0
            } else {
                1
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let format = cli.format.unwrap_or(Format::Json);
    let tol = cli.tol.unwrap_or(otelbaev::DEFAULT_TOL);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::new(1, "tolerance must be positive and finite"));
    }
    let loaded = load_spec(&cli.spec)?;
    let prov = |command: &'static str| Provenance {
        tool: "otelbaev",
        version: env!("CARGO_PKG_VERSION"),
        command,
        spec_sha256: Some(loaded.sha256.clone()),
        tol,
    };

    match cli.command {
        Command::Validate => {
            let report = validate_spec(&loaded.spec);
            let ok = report.ok;
            emit(format, &cli.out, &prov("validate"), &report, None)?;
            Ok(if ok { 0 } else { 1 })
        }

        Command::Qstar(QstarCmd::Eval { x }) => {
            let (spec, _) = structurally_checked(&loaded)?;
            let q = otelbaev::q_star(&spec.positive, x, tol)?;
            let report = QstarPoint {
                x,
                q_star: q,
                d: q.powf(-0.5),
            };
            emit(format, &cli.out, &prov("qstar eval"), &report, None)?;
            Ok(0)
        }

        Command::Qstar(QstarCmd::Profile { window, samples }) => {
            let (spec, _) = structurally_checked(&loaded)?;
            let p = otelbaev::profile(&spec.positive, [window.0, window.1], samples, tol)?;
            let rows = p
                .samples
                .iter()
                .zip(&p.q_star)
                .zip(&p.tol)
                .map(|((x, q), t)| vec![cell(*x), cell(*q), cell(*t)])
                .collect();
            let table = Table {
                header: "x,q_star,tol",
                rows,
            };
            emit(format, &cli.out, &prov("qstar profile"), &p, Some(table))?;
            Ok(0)
        }

        Command::Sublevel { lambda } => {
            let (spec, _) = structurally_checked(&loaded)?;
            let sublevel = otelbaev::sublevel_measure(&spec.positive, lambda, tol)?;
            let m = otelbaev::m_of(&spec.positive, lambda, tol)?;
            let report = SublevelReport {
                lambda,
                sublevel,
                m,
            };
            emit(format, &cli.out, &prov("sublevel"), &report, None)?;
            Ok(0)
        }

        Command::Bounds(BoundsCmd::Count {
            lambda,
            lambda_grid,
        }) => match (lambda, lambda_grid) {
            (Some(l), None) => {
                let report = bounds::counting_bounds(&loaded.spec, l, tol)?;
                emit(format, &cli.out, &prov("bounds count"), &report, None)?;
                Ok(0)
            }
            (None, Some(grid)) => {
                let reports: Vec<bounds::BoundReport> = grid
                    .values()
                    .into_iter()
                    .map(|l| bounds::counting_bounds(&loaded.spec, l, tol))
                    .collect::<Result<_, _>>()?;
                let rows = reports
                    .iter()
                    .map(|b| vec![cell(b.lambda), cell(b.lower_count.0), cell(b.upper_count.0)])
                    .collect();
                let table = Table {
                    header: "lambda,lower,upper",
                    rows,
                };
                emit(
                    format,
                    &cli.out,
                    &prov("bounds count"),
                    &reports,
                    Some(table),
                )?;
                Ok(0)
            }
            _ => Err(CliError::new(
                1,
                "give exactly one of --lambda or --lambda-grid",
            )),
        },

        Command::Bounds(BoundsCmd::Lambda1) => {
            let report = bounds::lambda1_bounds(&loaded.spec, tol)?;
            emit(format, &cli.out, &prov("bounds lambda1"), &report, None)?;
            Ok(0)
        }

        Command::Bounds(BoundsCmd::Essential) => {
            let report = bounds::essential_inf_bounds(&loaded.spec, tol)?;
            emit(format, &cli.out, &prov("bounds essential"), &report, None)?;
            Ok(0)
        }

        Command::Bounds(BoundsCmd::Schatten { p }) => {
            let reports: Vec<bounds::SchattenReport> = p
                .iter()
                .map(|&p| bounds::schatten(&loaded.spec, p, tol))
                .collect::<Result<_, _>>()?;
            emit(format, &cli.out, &prov("bounds schatten"), &reports, None)?;
            Ok(0)
        }

        Command::Bounds(BoundsCmd::EigenN { n }) => {
            let reports: Vec<bounds::EigenvalueBracket> = n
                .iter()
                .map(|&n| bounds::eigenvalue_bracket(&loaded.spec, n, tol))
                .collect::<Result<_, _>>()?;
            let rows = reports
                .iter()
                .map(|b| vec![b.n.to_string(), cell(b.lo), cell(b.hi), cell(b.f_n)])
                .collect();
            let table = Table {
                header: "n,lower,upper,f_n",
                rows,
            };
            emit(
                format,
                &cli.out,
                &prov("bounds eigen-n"),
                &reports,
                Some(table),
            )?;
            Ok(0)
        }

        Command::Bounds(BoundsCmd::Mult { nu }) => {
            let report = bounds::multiplicity_bound(&loaded.spec, nu, tol)?;
            emit(format, &cli.out, &prov("bounds mult"), &report, None)?;
            Ok(0)
        }

        Command::Classify => {
            let report = bounds::classify_discreteness(&loaded.spec)?;
            emit(format, &cli.out, &prov("classify"), &report, None)?;
            Ok(0)
        }

        Command::Oracle(OracleCmd::Assemble { radius, n, bc }) => {
            let asm = oracle::assemble(&loaded.spec, radius, n, bc.into())?;
            emit(format, &cli.out, &prov("oracle assemble"), &asm, None)?;
            Ok(0)
        }

        Command::Oracle(OracleCmd::Count {
            radius,
            n,
            bc,
            lambda,
        }) => {
            let asm = oracle::assemble(&loaded.spec, radius, n, bc.into())?;
            let count = oracle::count_below(&asm.pencil, lambda)?;
            let report = OracleRun {
                radius,
                n,
                bc: bc.into(),
                warnings: asm.warnings,
                dropped_mass: asm.dropped_mass,
                result: count,
            };
            emit(format, &cli.out, &prov("oracle count"), &report, None)?;
            Ok(0)
        }

        Command::Oracle(OracleCmd::Eigs { radius, n, bc, k }) => {
            let asm = oracle::assemble(&loaded.spec, radius, n, bc.into())?;
            let eigs = oracle::lowest_eigenvalues(&asm.pencil, k)?;
            let rows = eigs
                .iter()
                .map(|e| vec![e.index.to_string(), cell(e.value), cell(e.width)])
                .collect();
            let table = Table {
                header: "index,value,bracket_width",
                rows,
            };
            let report = OracleRun {
                radius,
                n,
                bc: bc.into(),
                warnings: asm.warnings,
                dropped_mass: asm.dropped_mass,
                result: eigs,
            };
            emit(format, &cli.out, &prov("oracle eigs"), &report, Some(table))?;
            Ok(0)
        }

        Command::Oracle(OracleCmd::Study {
            radii,
            n,
            bc,
            lambda,
        }) => {
            let report = oracle::convergence_study(&loaded.spec, lambda, &radii, &n, bc.into())?;
            emit(format, &cli.out, &prov("oracle study"), &report, None)?;
            Ok(0)
        }

        Command::Measure(MeasureCmd::Cdf { window, samples }) => {
            let (spec, _) = structurally_checked(&loaded)?;
            if samples < 2 {
                return Err(CliError::new(1, "cdf sweep needs at least two samples"));
            }
            let (a, b) = window;
            let xs: Vec<f64> = (0..samples)
                .map(|i| a + (b - a) * i as f64 / (samples - 1) as f64)
                .collect();
            let cdf: Vec<f64> = xs
                .iter()
                .map(|&x| spec.positive.cdf(x) - spec.negative.cdf(x))
                .collect();
            #[derive(Serialize)]
            struct CdfReport {
                window: [f64; 2],
                samples: usize,
                x: Vec<f64>,
                cdf: Vec<f64>,
            }
            let rows = xs
                .iter()
                .zip(&cdf)
                .map(|(x, f)| vec![cell(*x), cell(*f)])
                .collect();
            let report = CdfReport {
                window: [a, b],
                samples,
                x: xs,
                cdf,
            };
            let table = Table {
                header: "x,cdf",
                rows,
            };
            emit(format, &cli.out, &prov("measure cdf"), &report, Some(table))?;
            Ok(0)
        }

        Command::Verify(VerifyCmd::Sandwich {
            lambda_grid,
            radius,
            n,
            bc,
        }) => {
            let asm = oracle::assemble(&loaded.spec, radius, n, bc.into())?;
            let mut rows = Vec::new();
            for lambda in lambda_grid.values() {
                let b = bounds::counting_bounds(&loaded.spec, lambda, tol)?;
                let c = oracle::count_below(&asm.pencil, lambda)?.count;
                let ok = b.lower_count.0 <= c as f64 && (c as f64) <= b.upper_count.0;
                rows.push(SandwichRow {
                    lambda,
                    lower: b.lower_count,
                    upper: b.upper_count,
                    oracle_count: c,
                    ok,
                });
            }
            let violations: Vec<SandwichRow> = rows.iter().filter(|r| !r.ok).cloned().collect();
            let clean = violations.is_empty();
            let table_rows = rows
                .iter()
                .map(|r| {
                    vec![
                        cell(r.lambda),
                        cell(r.lower.0),
                        cell(r.upper.0),
                        r.oracle_count.to_string(),
                        r.ok.to_string(),
                    ]
                })
                .collect();
            let table = Table {
                header: "lambda,lower,upper,oracle_count,ok",
                rows: table_rows,
            };
            let report = SandwichReport {
                radius,
                n,
                bc: bc.into(),
                rows,
                violations,
            };
            emit(
                format,
                &cli.out,
                &prov("verify sandwich"),
                &report,
                Some(table),
            )?;
            Ok(if clean { 0 } else { 2 })
        }
    }
}
