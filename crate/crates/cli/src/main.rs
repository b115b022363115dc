//! `flagmeas` — evaluate SO(n)-covariant flag area measures, generate bodies,
//! print closed-form constants, and run the verification suite.
//!
//! Exit codes: 0 on success (and all checks passed), 1 when a verification
//! check fails, 2 on usage errors (unknown flags, malformed JSON, invalid
//! measure specs).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flagmeas_core::bodies::{standard_body, Ellipsoid, Polytope, StandardBody};
use flagmeas_core::exec::ExecMode;
use flagmeas_core::grassmann::{ball_constants, measure_constant, MeasureSpec, RngStream, Variant};
use flagmeas_core::measures::{eval_polytope, eval_smooth, EvalResult, McConfig, TestFunction};
use flagmeas_core::verify::default_suite;

/// Default seed, so that default runs are reproducible.
const DEFAULT_SEED: u64 = 0xF1A6;

#[derive(Parser)]
#[command(name = "flagmeas", version, about = "flag area measures on convex bodies")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print c_{n,k,p,i} for every valid (k,p,i), plus κ_n and ω_n.
    Constants {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Generate a body and write its JSON representation.
    Bodies {
        /// cube | simplex | cross | ball | ellipsoid | random-hull
        #[arg(long)]
        body: String,
        #[arg(long)]
        n: usize,
        /// Point count for random-hull (default n+7).
        #[arg(long)]
        points: Option<usize>,
        /// Comma-separated semi-axes for ellipsoid (default 1,1.5,2,…).
        #[arg(long)]
        axes: Option<String>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate a flag area measure against a test function.
    Eval {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        p: usize,
        /// σ-variant index; mutually exclusive with --exceptional.
        #[arg(long)]
        i: Option<usize>,
        /// Evaluate the exceptional measure S̃ (odd n, p = k = (n−1)/2).
        #[arg(long, default_value_t = false)]
        exceptional: bool,
        /// Built-in body name (cube|simplex|cross|ball|ellipsoid|random-hull).
        #[arg(long)]
        body: Option<String>,
        /// Body JSON file ({"vertices": …} or {"shape": …, "center": …}).
        #[arg(long)]
        body_file: Option<PathBuf>,
        /// Test function: inline JSON, a path to JSON, or the shorthand `const`.
        #[arg(long, default_value = "const")]
        f: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        axes: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the verification suite; exit 0 iff every check passed.
    Verify {
        #[arg(long, default_value = "default")]
        suite: String,
        #[arg(long, default_value_t = 4)]
        n_max: usize,
        /// Per-check Monte Carlo budget.
        #[arg(long, default_value_t = 40_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.cmd {
        Cmd::Constants { n, output } => {
            if output.format == Format::Csv {
                return Err("csv output is defined only for eval results".into());
            }
            let (kappa, omega) = ball_constants(n).map_err(|e| e.to_string())?;
            let mut rows = Vec::new();
            for k in 0..n {
                for p in 0..n {
                    let base = MeasureSpec::sigma(n, k, p, 0).map_err(|e| e.to_string())?;
                    for i in 0..=base.m() {
                        let spec = MeasureSpec::sigma(n, k, p, i).map_err(|e| e.to_string())?;
                        rows.push(serde_json::json!({
                            "k": k, "p": p, "i": i,
                            "c": measure_constant(&spec).map_err(|e| e.to_string())?,
                        }));
                    }
                }
            }
            let doc = serde_json::json!({
                "n": n,
                "kappa_n": kappa,
                "omega_n": omega,
                "constants": rows,
            });
            write_output(&output, &serde_json::to_string_pretty(&doc).unwrap())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Bodies {
            body,
            n,
            points,
            axes,
            seed,
            output,
        } => {
            if output.format == Format::Csv {
                return Err("csv output is defined only for eval results".into());
            }
            let text = match make_body(&body, n, points, axes.as_deref(), seed)? {
                Body::Polytope(p) => p.to_json(),
                Body::Ellipsoid(e) => e.to_json(),
            };
            write_output(&output, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Eval {
            n,
            k,
            p,
            i,
            exceptional,
            body,
            body_file,
            f,
            samples,
            seed,
            threads,
            points,
            axes,
            output,
        } => {
            let spec = match (i, exceptional) {
                (Some(_), true) => {
                    return Err("--i and --exceptional are mutually exclusive".into())
                }
                (Some(i), false) => MeasureSpec::sigma(n, k, p, i).map_err(|e| e.to_string())?,
                (None, true) => {
                    let spec = MeasureSpec::exceptional(n).map_err(|e| e.to_string())?;
                    if spec.k != k || spec.p != p {
                        return Err(format!(
                            "the exceptional measure for n={n} has k=p={}, got k={k}, p={p}",
                            spec.k
                        ));
                    }
                    spec
                }
                (None, false) => return Err("one of --i or --exceptional is required".into()),
            };
            let body = load_body(body.as_deref(), body_file.as_deref(), n, points, axes.as_deref(), seed)?;
            let tf = parse_test_function(&f)?;
            let mc = McConfig {
                samples,
                block: flagmeas_core::exec::DEFAULT_BLOCK,
                mode: if threads > 1 {
                    ExecMode::Parallel
                } else {
                    ExecMode::Sequential
                },
            };
            let stream = RngStream::new(seed);
            let result = with_pool(threads, || -> Result<EvalResult, String> {
                match &body {
                    Body::Polytope(poly) => {
                        eval_polytope(&spec, poly, &tf, &mc, stream).map_err(|e| e.to_string())
                    }
                    Body::Ellipsoid(ell) => {
                        eval_smooth(&spec, ell, &tf, &mc, stream).map_err(|e| e.to_string())
                    }
                }
            })?;
            let text = match output.format {
                Format::Json => serde_json::to_string_pretty(&result).unwrap(),
                Format::Csv => eval_csv(&result),
            };
            write_output(&output, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify {
            suite,
            n_max,
            samples,
            seed,
            threads,
            output,
        } => {
            if suite != "default" {
                return Err(format!("unknown suite `{suite}` (available: default)"));
            }
            if output.format == Format::Csv {
                return Err("csv output is defined only for eval results".into());
            }
            let reports = with_pool(threads, || {
                default_suite(n_max, samples, RngStream::new(seed)).map_err(|e| e.to_string())
            })?;
            let all_passed = reports.iter().all(|r| r.passed);
            write_output(&output, &serde_json::to_string_pretty(&reports).unwrap())?;
            for r in reports.iter().filter(|r| !r.passed) {
                eprintln!("FAILED: {} {}", r.check_id, r.params);
            }
            Ok(if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

enum Body {
    Polytope(Polytope),
    Ellipsoid(Ellipsoid),
}

fn default_axes(n: usize) -> Vec<f64> {
    (0..n).map(|j| 1.0 + 0.5 * j as f64).collect()
}

fn make_body(
    name: &str,
    n: usize,
    points: Option<usize>,
    axes: Option<&str>,
    seed: u64,
) -> Result<Body, String> {
    let stream = RngStream::new(seed).substream(0xB0D7);
    match name {
        "cube" => Ok(Body::Polytope(
            standard_body(StandardBody::Cube, n, None).map_err(|e| e.to_string())?,
        )),
        "simplex" => Ok(Body::Polytope(
            standard_body(StandardBody::Simplex, n, None).map_err(|e| e.to_string())?,
        )),
        "cross" => Ok(Body::Polytope(
            standard_body(StandardBody::Cross, n, None).map_err(|e| e.to_string())?,
        )),
        "random-hull" => {
            let pts = points.unwrap_or(n + 7);
            Ok(Body::Polytope(
                standard_body(
                    StandardBody::RandomHull { points: pts },
                    n,
                    Some(&mut stream.rng()),
                )
                .map_err(|e| e.to_string())?,
            ))
        }
        "ball" => Ok(Body::Ellipsoid(
            Ellipsoid::unit_ball(n).map_err(|e| e.to_string())?,
        )),
        "ellipsoid" => {
            let axes = match axes {
                Some(s) => s
                    .split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string()))
                    .collect::<Result<Vec<_>, _>>()?,
                None => default_axes(n),
            };
            if axes.len() != n {
                return Err(format!("expected {n} semi-axes, got {}", axes.len()));
            }
            Ok(Body::Ellipsoid(
                Ellipsoid::with_axes(&axes).map_err(|e| e.to_string())?,
            ))
        }
        other => Err(format!(
            "unknown body `{other}` (available: cube|simplex|cross|ball|ellipsoid|random-hull)"
        )),
    }
}

fn load_body(
    name: Option<&str>,
    file: Option<&std::path::Path>,
    n: usize,
    points: Option<usize>,
    axes: Option<&str>,
    seed: u64,
) -> Result<Body, String> {
    match (name, file) {
        (Some(_), Some(_)) => Err("--body and --body-file are mutually exclusive".into()),
        (Some(name), None) => make_body(name, n, points, axes, seed),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| format!("malformed body JSON: {e}"))?;
            let body = if value.get("vertices").is_some() {
                Body::Polytope(Polytope::from_json(&text).map_err(|e| e.to_string())?)
            } else if value.get("shape").is_some() {
                Body::Ellipsoid(Ellipsoid::from_json(&text).map_err(|e| e.to_string())?)
            } else {
                return Err("body JSON needs either a `vertices` or a `shape` field".into());
            };
            let dim = match &body {
                Body::Polytope(p) => p.dim(),
                Body::Ellipsoid(e) => e.dim(),
            };
            if dim != n {
                return Err(format!("body file has dimension {dim}, --n is {n}"));
            }
            Ok(body)
        }
        (None, None) => Err("one of --body or --body-file is required".into()),
    }
}

fn parse_test_function(input: &str) -> Result<TestFunction, String> {
    if input == "const" {
        return Ok(TestFunction::one());
    }
    if input.trim_start().starts_with('{') {
        return TestFunction::from_json(input).map_err(|e| e.to_string());
    }
    let text = fs::read_to_string(input).map_err(|e| format!("{input}: {e}"))?;
    TestFunction::from_json(&text).map_err(|e| e.to_string())
}

fn with_pool<T>(threads: usize, f: impl FnOnce() -> Result<T, String> + Send) -> Result<T, String>
where
    T: Send,
{
    if threads <= 1 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(f)
}

fn eval_csv(r: &EvalResult) -> String {
    let variant = match r.spec.variant {
        Variant::Sigma { i } => i.to_string(),
        Variant::Exceptional => "exceptional".to_string(),
    };
    let mut s = String::from("n,k,p,i,body,engine,estimate,std_error,samples,seed\n");
    s.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        r.spec.n,
        r.spec.k,
        r.spec.p,
        variant,
        r.body,
        r.engine,
        r.estimate,
        r.std_error,
        r.samples,
        r.seed
    ));
    s
}

fn write_output(out: &OutputArgs, text: &str) -> Result<(), String> {
    match &out.out {
        Some(path) => fs::write(path, text.as_bytes()).map_err(|e| e.to_string()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}
