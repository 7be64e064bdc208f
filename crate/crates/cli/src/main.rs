//! `sobolev-bounds`: certified brackets for Sobolev product constants.

mod record;
mod render;

use std::io::{self, Write};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use sobolev_core::bounds::{best_bounds, upper_bound, BoundOptions, BoundQuery};
use sobolev_core::numerics::{DEFAULT_MAX_TOL, DEFAULT_QUAD_TOL};
use sobolev_core::oracle::{self, Grid, RATIO_SLACK};
use sobolev_core::{Error, Execution};

use record::{
    GridInfo, OracleMode, OracleRecord, OutputRecord, Settings, EXIT_NUMERIC, EXIT_OK, EXIT_REGIME,
};
use render::{BoundWriter, Format};

#[derive(Parser, Debug)]
#[command(
    name = "sobolev-bounds",
    version,
    about = "Bounds for the sharp constants in Sobolev product inequalities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format; `json` writes one record per line.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    /// Relative tolerance of the adaptive quadratures.
    #[arg(long, default_value_t = DEFAULT_QUAD_TOL, global = true)]
    rel_tol: f64,

    /// Relative tolerance of the scalar maximizer.
    #[arg(long, default_value_t = DEFAULT_MAX_TOL, global = true)]
    max_tol: f64,

    /// Run single-threaded.
    #[arg(long, global = true)]
    sequential: bool,

    /// Record wall-clock time (makes output run-dependent).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bracket a single constant K(n, a, d).
    Bound {
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        methods: MethodArgs,
    },
    /// Reproduce a preset table of brackets.
    Table {
        #[arg(long, value_enum)]
        preset: Preset,
        #[command(flatten)]
        methods: MethodArgs,
    },
    /// Evaluate bounds over a range of n for fixed a and d.
    Sweep {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        d: u32,
        /// First n (inclusive).
        #[arg(long, default_value_t = 0.0)]
        n_from: f64,
        /// Last n (inclusive).
        #[arg(long)]
        n_to: f64,
        #[arg(long, default_value_t = 1.0)]
        n_step: f64,
        /// Drop rows outside both regimes instead of reporting them.
        #[arg(long)]
        skip_invalid: bool,
        #[command(flatten)]
        methods: MethodArgs,
    },
    /// Cross-check the analytic formulas on a discrete grid.
    Oracle {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, value_enum, default_value_t = OracleMode::Validate)]
        mode: OracleMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Ratio evaluations for `--mode search`.
        #[arg(long, default_value_t = 200)]
        budget: usize,
        /// Points per axis (power of two).
        #[arg(long)]
        grid_n: Option<usize>,
        /// Half-width of the box.
        #[arg(long)]
        grid_l: Option<f64>,
    },
}

#[derive(Args, Debug, Clone, Copy)]
struct QueryArgs {
    #[arg(long)]
    n: f64,
    #[arg(long)]
    a: f64,
    #[arg(long)]
    d: u32,
}

#[derive(Args, Debug, Clone, Copy)]
struct MethodArgs {
    /// Skip the Bessel-kernel lower bound.
    #[arg(long)]
    no_bessel: bool,
    /// Skip the Gaussian-character lower bound.
    #[arg(long)]
    no_fourier: bool,
    /// Also scan Gaussian parameters around the closed-form choice.
    #[arg(long)]
    fourier_scan: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Paper,
}

/// `(d, a, n)` rows of the reference table.
const PAPER_ROWS: [(u32, f64, f64); 8] = [
    (1, 1.0, 0.0),
    (1, 1.0, 1.0),
    (2, 2.0, 0.0),
    (2, 2.0, 1.0),
    (2, 2.0, 2.0),
    (3, 2.0, 0.0),
    (3, 2.0, 1.0),
    (3, 2.0, 2.0),
];

fn usage_error(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ValueValidation, msg).exit()
}

fn finite_positive(name: &str, x: f64) {
    if !(x.is_finite() && x > 0.0) {
        usage_error(format!(
            "--{name} must be a positive finite number, got {x}"
        ));
    }
}

fn check_query(n: f64, a: f64, d: u32) {
    if !(n.is_finite() && n >= 0.0) {
        usage_error(format!("--n must be a non-negative finite number, got {n}"));
    }
    finite_positive("a", a);
    if d == 0 {
        usage_error("--d must be a positive integer");
    }
}

struct Ctx {
    format: Format,
    settings: Settings,
    timing: bool,
}

impl Ctx {
    fn options(&self, m: MethodArgs, exec: Execution) -> BoundOptions {
        BoundOptions {
            bessel: !m.no_bessel,
            fourier: !m.no_fourier,
            fourier_scan: m.fourier_scan,
            quad_tol: self.settings.quad_tol,
            max_tol: self.settings.max_tol,
            exec,
        }
    }

    fn compute(&self, command: &str, n: f64, a: f64, d: u32, opts: &BoundOptions) -> OutputRecord {
        let start = Instant::now();
        let settings = Settings {
            fourier_scan: opts.fourier_scan,
            ..self.settings
        };
        let mut rec = match BoundQuery::new(n, a, d).and_then(|q| best_bounds(&q, opts)) {
            Ok(r) => OutputRecord::from_report(command, &r, settings),
            Err(e) => OutputRecord::from_error(command, n, a, d, &e, settings),
        };
        if self.timing {
            rec.wall_time_s = Some(start.elapsed().as_secs_f64());
        }
        rec
    }
}

fn record_exit(rec: &OutputRecord) -> i32 {
    rec.error.as_ref().map_or(EXIT_OK, |e| e.exit_code)
}

fn report_error(rec: &OutputRecord) {
    if let Some(e) = &rec.error {
        eprintln!("error: n={} a={} d={}: {}", rec.n, rec.a, rec.d, e.message);
    }
}

fn run(cli: Cli) -> io::Result<i32> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    finite_positive("rel-tol", cli.rel_tol);
    finite_positive("max-tol", cli.max_tol);
    let ctx = Ctx {
        format: cli.format,
        settings: Settings {
            quad_tol: cli.rel_tol,
            max_tol: cli.max_tol,
            execution: exec,
            fourier_scan: false,
        },
        timing: cli.timing,
    };
    let stdout = io::stdout().lock();

    match cli.command {
        Command::Bound { query, methods } => {
            check_query(query.n, query.a, query.d);
            let rec = ctx.compute(
                "bound",
                query.n,
                query.a,
                query.d,
                &ctx.options(methods, exec),
            );
            report_error(&rec);
            let mut w = BoundWriter::new(ctx.format, stdout, false)?;
            w.write(&rec)?;
            Ok(record_exit(&rec))
        }
        Command::Table { preset, methods } => {
            let rows: &[(u32, f64, f64)] = match preset {
                Preset::Paper => &PAPER_ROWS,
            };
            let opts = ctx.options(methods, exec);
            let mut w = BoundWriter::new(ctx.format, stdout, false)?;
            let mut code = EXIT_OK;
            for &(d, a, n) in rows {
                let rec = ctx.compute("table", n, a, d, &opts).with_rounding();
                report_error(&rec);
                code = code.max(record_exit(&rec));
                w.write(&rec)?;
            }
            Ok(code)
        }
        Command::Sweep {
            a,
            d,
            n_from,
            n_to,
            n_step,
            skip_invalid,
            methods,
        } => {
            finite_positive("a", a);
            finite_positive("n-step", n_step);
            if !(n_from.is_finite() && n_from >= 0.0 && n_to.is_finite()) {
                usage_error("--n-from must be non-negative and --n-to finite");
            }
            if d == 0 {
                usage_error("--d must be a positive integer");
            }
            let count = if n_to < n_from {
                0
            } else {
                ((n_to - n_from) / n_step + 1e-9).floor() as usize + 1
            };
            let ns: Vec<f64> = (0..count).map(|i| n_from + i as f64 * n_step).collect();
            // rows in parallel, each row sequential; output keeps input order
            let opts = ctx.options(methods, Execution::Sequential);
            let recs = exec.map(&ns, |&n| ctx.compute("sweep", n, a, d, &opts));
            let mut w = BoundWriter::new(ctx.format, stdout, true)?;
            let (mut regime_err, mut numeric_err) = (false, false);
            for rec in &recs {
                match record_exit(rec) {
                    EXIT_OK => {}
                    EXIT_REGIME if skip_invalid => continue,
                    EXIT_REGIME => regime_err = true,
                    _ => numeric_err = true,
                }
                report_error(rec);
                w.write(rec)?;
            }
            w.finish()?;
            Ok(if numeric_err {
                EXIT_NUMERIC
            } else if regime_err {
                EXIT_REGIME
            } else {
                EXIT_OK
            })
        }
        Command::Oracle {
            query,
            mode,
            seed,
            budget,
            grid_n,
            grid_l,
        } => {
            check_query(query.n, query.a, query.d);
            if budget == 0 {
                usage_error("--budget must be at least 1");
            }
            if let Some(l) = grid_l {
                finite_positive("grid-l", l);
            }
            let rec = run_oracle(&ctx, query, mode, seed, budget, grid_n, grid_l, exec);
            if let Some(e) = &rec.error {
                eprintln!("error: {}", e.message);
            }
            render::write_oracle(ctx.format, stdout, &rec)?;
            Ok(match &rec.error {
                Some(e) => e.exit_code,
                None if rec.passed => EXIT_OK,
                None => EXIT_NUMERIC,
            })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_oracle(
    ctx: &Ctx,
    q: QueryArgs,
    mode: OracleMode,
    seed: u64,
    budget: usize,
    grid_n: Option<usize>,
    grid_l: Option<f64>,
    exec: Execution,
) -> OracleRecord {
    let start = Instant::now();
    let mut rec = OracleRecord {
        command: "oracle".into(),
        mode,
        n: q.n,
        a: q.a,
        d: q.d,
        grid: None,
        seed: (mode == OracleMode::Search).then_some(seed),
        budget: (mode == OracleMode::Search).then_some(budget),
        checks: Vec::new(),
        search: None,
        upper: None,
        passed: false,
        warnings: Vec::new(),
        error: None,
        wall_time_s: None,
    };
    let result = (|| -> Result<(), Error> {
        let (l0, n0) = oracle::default_size(q.d)?;
        let (grid, warn) = Grid::new_capped(q.d, grid_l.unwrap_or(l0), grid_n.unwrap_or(n0))?;
        let grid = grid.with_execution(exec);
        rec.warnings.extend(warn);
        rec.grid = Some(GridInfo {
            d: grid.d(),
            half_width: grid.half_width(),
            points: grid.points(),
        });
        let upper = upper_bound(q.n, q.a, q.d)?;
        rec.upper = Some(upper);
        match mode {
            OracleMode::Validate => {
                rec.checks = oracle::validate(q.n, q.a, &grid)?;
                rec.passed = !rec.checks.is_empty() && rec.checks.iter().all(|c| c.passed);
            }
            OracleMode::Search => {
                let s = oracle::random_search_lower(q.n, q.a, budget, seed, &grid)?;
                rec.passed = s.best_ratio <= upper * (1.0 + RATIO_SLACK);
                rec.search = Some(s);
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        rec.error = Some((&e).into());
        rec.passed = false;
    }
    if ctx.timing {
        rec.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    rec
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::FAILURE
        }
    }
}
