mod problem;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cusp_core::cusp::{
    localize, newton_refine, shrink_scan, CuspError, GcpCandidate, GcpStatus, Hypothesis, LocalizeOptions,
    NewtonOptions, ShrinkOptions,
};
use cusp_core::flow::{integrate_loop, monodromy, phase_by_quadrature, FlowError, FlowOptions, MonodromyOptions};
use cusp_core::model::Point;

use problem::{InputError, Problem};
use report::{GcpReport, MonodromyReport, Report, ShrinkReport};

#[derive(Parser)]
#[command(name = "cusp", version, about = "Eigenvalue monodromy and coalescence points of 2-parameter matrix functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Continue the eigendecomposition around the problem's loop and report the monodromy.
    AnalyzeLoop {
        #[command(flatten)]
        common: Common,
        /// Write the path samples as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        periods: Option<usize>,
    },
    /// Search the problem's domain for coalescence points.
    Localize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        root_tol: Option<f64>,
    },
    /// Shrink the problem's loop toward an anchor and fit the phase asymptotics.
    ShrinkScan {
        #[command(flatten)]
        common: Common,
        /// Anchor point as `x,y`.
        #[arg(long, value_parser = parse_point)]
        at: Point,
    },
    /// Refine a seed by Newton's method and test the coalescence conditions.
    CheckGcp {
        #[command(flatten)]
        common: Common,
        /// Seed point as `x,y`.
        #[arg(long, value_parser = parse_point)]
        at: Point,
        #[arg(long)]
        root_tol: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RK4 steps per period.
    #[arg(long)]
    steps: Option<usize>,
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let x: f64 = x.trim().parse().map_err(|e| format!("bad x: {e}"))?;
    let y: f64 = y.trim().parse().map_err(|e| format!("bad y: {e}"))?;
    if !(x.is_finite() && y.is_finite()) {
        return Err("coordinates must be finite".into());
    }
    Ok(Point::new(x, y))
}

enum Failure {
    Input(String),
    Numerical(String),
    /// The report is still written.
    Check(Report, String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e.0)
    }
}

impl From<FlowError> for Failure {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::InvalidOptions(m) => Failure::Input(m),
            FlowError::NotTwoByTwo { .. } => Failure::Input(e.to_string()),
            e => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<CuspError> for Failure {
    fn from(e: CuspError) -> Self {
        match e {
            CuspError::Flow(f) => f.into(),
            CuspError::NotTwoByTwo { .. } | CuspError::InvalidRect(_) | CuspError::InvalidScales(_) => {
                Failure::Input(e.to_string())
            }
            e => Failure::Numerical(e.to_string()),
        }
    }
}

fn flow_options(p: &Problem, steps: Option<usize>) -> FlowOptions {
    let o = &p.options;
    let d = FlowOptions::default();
    FlowOptions {
        steps_per_period: steps.or(o.steps).unwrap_or(d.steps_per_period),
        correction_interval: o.correction_interval.or(d.correction_interval),
        eig_tol: o.eig_tol.unwrap_or(d.eig_tol),
        path_tol: o.path_tol.unwrap_or(d.path_tol),
        norm_tol: o.norm_tol.unwrap_or(d.norm_tol),
        ..d
    }
}

fn newton_options(p: &Problem, root_tol: Option<f64>) -> NewtonOptions {
    let d = NewtonOptions::default();
    NewtonOptions {
        root_tol: root_tol.or(p.options.root_tol).unwrap_or(d.root_tol),
        cond_max: p.options.cond_max.unwrap_or(d.cond_max),
        ..d
    }
}

fn gcp_report(c: &GcpCandidate) -> GcpReport {
    GcpReport {
        location: [c.location.x, c.location.y],
        status: c.status.as_str(),
        source: c.source.as_str(),
        f_residual: c.f_residual,
        df: c.df,
        df_condition: c.df_condition,
        iterations: c.iterations,
    }
}

fn analyze_loop(p: &Problem, steps: Option<usize>, periods: Option<usize>, csv: Option<&Path>) -> Result<Report, Failure> {
    let gamma = p.gamma.as_ref().ok_or_else(|| Failure::Input("analyze-loop needs a \"loop\"".into()))?;
    let opts = flow_options(p, steps);
    let periods = periods.or(p.options.periods).unwrap_or(1);
    let path = integrate_loop(&p.f, gamma, 0.0, periods, &opts)?;
    let m = monodromy(&path, &MonodromyOptions::default())?;
    if let Some(csv) = csv {
        std::fs::write(csv, path.to_csv()).map_err(|e| Failure::Input(format!("cannot write {}: {e}", csv.display())))?;
    }

    let mut r = Report::new("analyze-loop");
    r.monodromy = Some(MonodromyReport {
        permutation: m.permutation.clone(),
        cycles: m.cycles().into_iter().filter(|c| c.len() > 1).collect(),
        phases: m.phases.clone(),
        phase_sum_mod_pi: m.phase_sum_mod_pi(),
        phase_sum_mod_2pi: m.phase_sum_mod_2pi(),
        pattern_residual: m.pattern_residual,
        det_drift: m.det_drift,
    });
    let start = path.first();
    r.diag("eigenvalues_start", start.values.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
    r.diag("periods", periods);
    r.diag("steps_per_period", opts.steps_per_period);
    r.diag("max_norm_drift", path.max_norm_drift());
    r.diag("max_residual", path.max_residual());
    r.diag("max_imag_diag_p", path.max_imag_diag_p());
    r.diag("refined_steps", path.refined_steps);
    r.diag("corrections", path.corrections);
    let closure: Vec<f64> = (1..=periods)
        .filter_map(|k| path.at_period(k).map(|s| s.vectors.distance(&start.vectors)))
        .collect();
    r.diag("period_closure", closure);
    if p.f.dim() == 2 {
        match phase_by_quadrature(&p.f, gamma, 2 * opts.steps_per_period) {
            Ok(q) => r.diag("quadrature_phases", q),
            Err(e) => r.diag("quadrature_phases", e.to_string()),
        }
    }
    Ok(r)
}

fn run_localize(p: &Problem, steps: Option<usize>, max_depth: Option<usize>, root_tol: Option<f64>) -> Result<Report, Failure> {
    let d = LocalizeOptions::default();
    let opts = LocalizeOptions {
        max_depth: max_depth.or(p.options.max_depth).unwrap_or(d.max_depth),
        newton: newton_options(p, root_tol),
        flow: FlowOptions {
            steps_per_period: steps.unwrap_or(d.flow.steps_per_period),
            ..flow_options(p, None)
        },
        ..d
    };
    let rep = localize(&p.f, p.domain, &opts)?;
    let mut r = Report::new("localize");
    r.gcps = Some(rep.candidates.iter().map(gcp_report).collect());
    r.diag("cells_examined", rep.cells_examined);
    r.diag("failed_seeds", rep.failed_seeds);
    r.diag("seed_threshold", rep.seed_threshold);
    r.diag("rejected", rep.rejected.iter().map(gcp_report).collect::<Vec<_>>());
    let rect = |c: &cusp_core::cusp::Rect| serde_json::json!({"x": [c.lo.x, c.hi.x], "y": [c.lo.y, c.hi.y]});
    r.diag(
        "indicated_cells",
        rep.indicated_cells
            .iter()
            .map(|c| {
                let mut v = rect(&c.rect);
                v["permutation"] = serde_json::json!(c.permutation);
                v["cycles"] = serde_json::json!(c.cycles);
                v
            })
            .collect::<Vec<_>>(),
    );
    r.diag("unresolved_cells", rep.unresolved_cells.iter().map(rect).collect::<Vec<_>>());
    Ok(r)
}

fn run_shrink(p: &Problem, steps: Option<usize>, at: Point) -> Result<Report, Failure> {
    if !p.domain.contains(at) {
        return Err(Failure::Input(format!("anchor ({}, {}) lies outside the domain", at.x, at.y)));
    }
    let base = p.gamma.as_ref().ok_or_else(|| Failure::Input("shrink-scan needs a \"loop\"".into()))?;
    let d = ShrinkOptions::default();
    let opts = ShrinkOptions {
        scales: p.options.scales.clone().unwrap_or(d.scales),
        fit_points: p.options.fit_points.unwrap_or(d.fit_points),
        flow: flow_options(p, steps),
        ..d
    };
    let scan = shrink_scan(&p.f, at, base, &opts)?;
    let mut r = Report::new("shrink-scan");
    r.shrink = Some(ShrinkReport {
        anchor: [at.x, at.y],
        scales: scan.scales,
        phases: scan.phases,
        deviations: scan.deviations,
        exponent: scan.exponents,
        hypothesis: match scan.hypothesis {
            Hypothesis::Gcp => "gcp",
            Hypothesis::Regular => "regular",
        },
        exact: scan.exact,
        class: scan.class.as_str(),
    });
    r.diag("permutations", scan.permutations);
    r.diag("fit_points", opts.fit_points);
    Ok(r)
}

fn run_check(p: &Problem, at: Point, root_tol: Option<f64>) -> Result<Report, Failure> {
    let opts = newton_options(p, root_tol);
    let mut r = Report::new("check-gcp");
    r.diag("seed", [at.x, at.y]);
    r.diag("root_tol", opts.root_tol);
    r.diag("cond_max", opts.cond_max);
    match newton_refine(&p.f, at, &opts) {
        Ok(c) => {
            let verified = c.status == GcpStatus::Verified;
            let status = c.status.as_str();
            r.gcps = Some(vec![gcp_report(&c)]);
            if verified {
                Ok(r)
            } else {
                Err(Failure::Check(r, format!("candidate is {status}")))
            }
        }
        Err(CuspError::NoConvergence { iterations, residual }) => {
            r.gcps = Some(Vec::new());
            r.diag("error", "no convergence");
            r.diag("iterations", iterations);
            r.diag("residual", residual);
            Err(Failure::Check(r, format!("no convergence after {iterations} iterations")))
        }
        Err(e) => Err(e.into()),
    }
}

fn emit(report: &Report, out: Option<&Path>) -> Result<(), String> {
    let text = report::to_json(report);
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, result) = match &cli.command {
        Command::AnalyzeLoop { common, csv, periods } => (
            common,
            problem::load(&common.problem)
                .map_err(Failure::from)
                .and_then(|p| analyze_loop(&p, common.steps, *periods, csv.as_deref())),
        ),
        Command::Localize { common, max_depth, root_tol } => (
            common,
            problem::load(&common.problem)
                .map_err(Failure::from)
                .and_then(|p| run_localize(&p, common.steps, *max_depth, *root_tol)),
        ),
        Command::ShrinkScan { common, at } => (
            common,
            problem::load(&common.problem)
                .map_err(Failure::from)
                .and_then(|p| run_shrink(&p, common.steps, *at)),
        ),
        Command::CheckGcp { common, at, root_tol } => (
            common,
            problem::load(&common.problem)
                .map_err(Failure::from)
                .and_then(|p| run_check(&p, *at, *root_tol)),
        ),
    };
    let out = common.out.as_deref();
    match result {
        Ok(report) => match emit(&report, out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Check(report, msg)) => {
            if let Err(e) = emit(&report, out) {
                eprintln!("error: {e}");
            }
            eprintln!("check failed: {msg}");
            ExitCode::from(4)
        }
    }
}
