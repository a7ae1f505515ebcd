//! The five subcommands. Each writes its artifacts into an output directory.

use std::path::{Path, PathBuf};

use tvnet::design::pairs;
use tvnet::fit::{fit, fit_sample};
use tvnet::metrics::{auc, estimation_error};
use tvnet::select::{default_grids, grid_fits};
use tvnet::simulate::{replicate, SimulationTruth};
use tvnet::Method;

use crate::config::Overrides;
use crate::error::{CliError, CliResult};
use crate::panel::Panel;
use crate::report::{pair_counts, FitReport, MethodName};

pub const PANEL_FILE: &str = "panel.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const SCENARIO_FILE: &str = "scenario.json";
pub const FIT_FILE: &str = "fit.json";
pub const SURFACE_FILE: &str = "surface.csv";
pub const BEST_FILE: &str = "best.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const TRAJECTORY_FILE: &str = "trajectories.csv";
pub const PAIR_COUNTS_FILE: &str = "pair_counts.csv";
pub const HEAT_FILE: &str = "heat.csv";

fn prepare_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

/// CSV writer into memory; rows are only ever strings, so writes cannot fail.
struct Table(csv::Writer<Vec<u8>>);

impl Table {
    fn new<I: IntoIterator<Item = S>, S: AsRef<[u8]>>(header: I) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        Self(w)
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        self.0.write_record(fields).expect("in-memory write");
    }

    fn save(self, path: &Path) -> CliResult<()> {
        let bytes = self.0.into_inner().map_err(|e| CliError::input(format!("csv buffer: {e}")))?;
        std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
    }
}

pub struct SimulateArgs {
    pub scenario: u8,
    pub n: usize,
    pub seed: u64,
    pub out: PathBuf,
}

/// Writes the panel, its truth and the scenario structure.
pub fn simulate(args: &SimulateArgs) -> CliResult<Vec<PathBuf>> {
    let (spec, dataset, truth) = replicate(args.scenario, args.n, args.seed)?;
    prepare_dir(&args.out)?;
    let files = [PANEL_FILE, TRUTH_FILE, SCENARIO_FILE].map(|f| args.out.join(f));
    Panel::from_dataset(&dataset).write_path(&files[0])?;
    write_text(&files[1], &to_json(&truth))?;
    write_text(&files[2], &to_json(&spec))?;
    Ok(files.to_vec())
}

pub struct FitArgs {
    pub panel: PathBuf,
    pub method: MethodName,
    pub lambda1: f64,
    pub lambda2: f64,
    pub out: PathBuf,
}

fn check_lambdas(method: MethodName, lambda1: f64, lambda2: f64) -> CliResult<()> {
    if !(lambda1 >= 0.0 && lambda1.is_finite()) || !(lambda2 >= 0.0 && lambda2.is_finite()) {
        return Err(CliError::input("penalties must be finite and non-negative"));
    }
    if method == MethodName::Lasso && lambda2 != 0.0 {
        return Err(CliError::input("lasso has no fusion penalty; lambda2 must be 0"));
    }
    Ok(())
}

/// Single fit at fixed penalties.
pub fn fit_report(panel: &Panel, method: MethodName, lambda1: f64, lambda2: f64, overrides: &Overrides) -> CliResult<FitReport> {
    let dataset = panel.to_dataset()?;
    let result = match method.penalized() {
        Some(m) => {
            check_lambdas(method, lambda1, lambda2)?;
            fit(&dataset, lambda1, lambda2, &overrides.fit_config(m)?)?
        }
        None => fit_sample(&dataset)?,
    };
    if !result.converged {
        log::warn!("fit did not converge after {} outer iterations", result.outer_iters);
    }
    Ok(FitReport::from_fit(&result, &panel.variables, dataset.time_grid(), overrides.active_tol()))
}

pub fn fit_cmd(args: &FitArgs, overrides: &Overrides) -> CliResult<PathBuf> {
    let panel = Panel::read_path(&args.panel)?;
    let report = fit_report(&panel, args.method, args.lambda1, args.lambda2, overrides)?;
    prepare_dir(&args.out)?;
    let path = args.out.join(FIT_FILE);
    write_text(&path, &report.to_json())?;
    Ok(path)
}

pub struct TuneArgs {
    pub panel: PathBuf,
    pub method: MethodName,
    pub grid1: Option<Grid>,
    pub grid2: Option<Grid>,
    pub out: PathBuf,
}

/// Explicit penalty grid given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

/// Comma-separated list of non-negative penalties.
pub fn parse_grid(text: &str) -> Result<Grid, String> {
    let values: Vec<f64> =
        text.split(',').map(|s| s.trim().parse::<f64>().map_err(|e| format!("`{}`: {e}", s.trim()))).collect::<Result<_, _>>()?;
    if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err("grid values must be finite and non-negative".into());
    }
    Ok(Grid(values))
}

/// Grid search; writes the BIC surface and the selected report.
pub fn tune_cmd(args: &TuneArgs, overrides: &Overrides) -> CliResult<(PathBuf, PathBuf)> {
    let Some(method) = args.method.penalized() else {
        return Err(CliError::input("the sample estimator has no penalties to tune"));
    };
    let panel = Panel::read_path(&args.panel)?;
    let dataset = panel.to_dataset()?;
    let (d1, d2) = default_grids(&dataset, method, overrides.grid_size()?)?;
    let g1 = args.grid1.clone().map_or(d1, |g| g.0);
    let g2 = args.grid2.clone().map_or(d2, |g| g.0);
    if g1.is_empty() || g2.is_empty() {
        return Err(CliError::input("grids must be nonempty"));
    }
    if method == Method::Lasso && g2.iter().any(|v| *v != 0.0) {
        return Err(CliError::input("lasso has no fusion penalty; grid2 must be 0"));
    }
    let (fits, surface) = grid_fits(&dataset, &g1, &g2, &overrides.fit_config(method)?)?;
    let best = fits.into_iter().nth(surface.best).flatten().ok_or(CliError::Numerical("selected cell has no fit".into()))?;
    if !best.converged {
        log::warn!("selected cell ({}, {}) did not converge", best.lambda1, best.lambda2);
    }

    prepare_dir(&args.out)?;
    let mut table = Table::new(["lambda1", "lambda2", "bic", "df", "converged"]);
    for c in &surface.cells {
        table.row([c.lambda1.to_string(), c.lambda2.to_string(), c.bic.to_string(), c.df.to_string(), c.converged.to_string()]);
    }
    let surface_path = args.out.join(SURFACE_FILE);
    table.save(&surface_path)?;
    let report = FitReport::from_fit(&best, &panel.variables, dataset.time_grid(), overrides.active_tol());
    let best_path = args.out.join(BEST_FILE);
    write_text(&best_path, &report.to_json())?;
    Ok((surface_path, best_path))
}

pub struct EvaluateArgs {
    pub fit: PathBuf,
    pub truth: PathBuf,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Metrics {
    pub method: MethodName,
    pub lambda1: f64,
    pub lambda2: f64,
    pub estimation_error: f64,
    /// `null` when the truth has no edges or no non-edges.
    pub auc: Option<f64>,
}

pub fn read_truth(path: &Path) -> CliResult<SimulationTruth> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: invalid truth file: {e}", path.display())))
}

pub fn evaluate(report: &FitReport, truth: &SimulationTruth) -> CliResult<Metrics> {
    let estimate = report.field()?;
    let truth_field = truth.field()?;
    let estimation_error = estimation_error(&estimate, &truth_field)?;
    if truth.support.len() != truth_field.num_times() {
        return Err(CliError::input("truth support has the wrong number of time points"));
    }
    let auc = match auc(&estimate, &truth.support) {
        Ok(v) => Some(v),
        Err(tvnet::Error::DegenerateMask) => {
            log::warn!("truth support is all edges or all non-edges; AUC undefined");
            None
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Metrics { method: report.method, lambda1: report.lambda1, lambda2: report.lambda2, estimation_error, auc })
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> CliResult<(PathBuf, PathBuf)> {
    let report = FitReport::read_path(&args.fit)?;
    let truth = read_truth(&args.truth)?;
    let metrics = evaluate(&report, &truth)?;
    prepare_dir(&args.out)?;
    let metrics_path = args.out.join(METRICS_FILE);
    write_text(&metrics_path, &to_json(&metrics))?;

    let mut table = Table::new(["time_index", "time", "pair", "i", "j", "estimate", "truth"]);
    let idx = pairs(report.p());
    for (c, label) in report.pairs.iter().enumerate() {
        for k in 0..report.num_times() {
            table.row([
                (k + 1).to_string(),
                report.time_grid[k].to_string(),
                label.clone(),
                (idx[c].0 + 1).to_string(),
                (idx[c].1 + 1).to_string(),
                report.theta[k][c].to_string(),
                truth.theta[k][c].to_string(),
            ]);
        }
    }
    let traj_path = args.out.join(TRAJECTORY_FILE);
    table.save(&traj_path)?;
    Ok((metrics_path, traj_path))
}

pub struct ReportArgs {
    pub fit: PathBuf,
    pub out: PathBuf,
}

/// Pair occurrence counts (with halves) and the per-time heat table.
pub fn report_cmd(args: &ReportArgs) -> CliResult<(PathBuf, PathBuf)> {
    let report = FitReport::read_path(&args.fit)?;
    prepare_dir(&args.out)?;

    let mut counts = Table::new(["pair", "i", "j", "count", "first_half", "second_half"]);
    for c in pair_counts(&report) {
        counts.row([c.label, c.i.to_string(), c.j.to_string(), c.total.to_string(), c.first_half.to_string(), c.second_half.to_string()]);
    }
    let counts_path = args.out.join(PAIR_COUNTS_FILE);
    counts.save(&counts_path)?;

    let header = ["time_index".to_owned(), "time".to_owned()].into_iter().chain(report.pairs.iter().cloned());
    let mut heat = Table::new(header);
    let tol = report.active_tol;
    for (k, row) in report.theta.iter().enumerate() {
        let cells = row.iter().map(|v| if v.abs() > tol { v.to_string() } else { "0".to_owned() });
        heat.row([(k + 1).to_string(), report.time_grid[k].to_string()].into_iter().chain(cells));
    }
    let heat_path = args.out.join(HEAT_FILE);
    heat.save(&heat_path)?;
    Ok((counts_path, heat_path))
}
