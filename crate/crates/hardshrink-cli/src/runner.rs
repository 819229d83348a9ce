//! Sweep orchestration: trial planning, per-cell step-size estimation,
//! parallel execution with canonical result ordering, summaries, and
//! CSV/JSON emission.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use hardshrink::baselines::{default_lasso_lambda, foba, ista_lasso, FobaConfig, LassoConfig};
use hardshrink::objectives::{estimate_rsc_rss, Objective, QuadraticObjective};
use hardshrink::solvers::{
    iht_solve, matrix_iht_solve, pht_solve, step_from_smoothness, two_stage_solve, SolverConfig,
    StepFamily,
};
use hardshrink::statgen::{
    make_matrix_instance, rho_for_condition_target, sample_size, support_error, synth_linear,
    CovarianceSpec, MatrixProblemInstance, ProblemInstance,
};
use hardshrink::{Error, Result, RngStream, Vector};

use crate::config::{Algorithm, ExperimentConfig, Scenario};

/// One benchmark measurement: a `(grid cell, algorithm, trial)` triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub algorithm: String,
    pub grid_param: String,
    pub grid_value: f64,
    pub trial: usize,
    pub undiscovered: usize,
    pub support_err_frac: f64,
    pub l2_err: f64,
    pub f_final: f64,
    pub iters: usize,
    pub wall_time_s: f64,
    pub seed: u64,
}

/// A failed run; sweeps never abort on individual failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub scenario: String,
    pub algorithm: String,
    pub grid_param: String,
    pub grid_value: f64,
    pub trial: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub rows: Vec<ResultRow>,
    pub errors: Vec<ErrorRow>,
}

/// Fully resolved parameters of one grid cell.
#[derive(Debug, Clone)]
struct CellPlan {
    index: usize,
    grid_value: f64,
    p: usize,
    s_star: usize,
    sigma: f64,
    n: usize,
    /// Projection size handed to solvers (differs from `s_star` only in
    /// the condition sweep).
    solver_s: usize,
    covariance: CovarianceSpec,
    matrix: bool,
}

fn plan_cell(cfg: &ExperimentConfig, index: usize) -> Result<CellPlan> {
    let g = cfg.grid[index];
    let base = &cfg.base;
    let mut p = base.p;
    let mut s_star = base.s_star;
    let mut sigma = base.sigma;
    let mut f_o = base.f_o;
    let mut n_override = None;
    let mut solver_s = None;
    let mut matrix = false;
    match cfg.scenario {
        Scenario::NoiseSweep => sigma = g,
        Scenario::DimensionSweep => p = g as usize,
        Scenario::SparsitySweep => s_star = g as usize,
        Scenario::OversamplingSweep => f_o = g,
        Scenario::ConditionSweep => solver_s = Some(g as usize),
        Scenario::SampleSizeSweep => n_override = Some(g as usize),
        Scenario::MatrixRecovery => {
            sigma = g;
            matrix = true;
        }
    }
    if s_star > p {
        return Err(Error::invalid_argument(format!(
            "cell {index}: s* = {s_star} exceeds p = {p}"
        )));
    }
    let n = if matrix {
        // Gaussian sensing budget: f_o · 3 · r* · (p₁ + p₂).
        (f_o * 3.0 * s_star as f64 * (2 * p) as f64).ceil() as usize
    } else {
        n_override.unwrap_or_else(|| sample_size(f_o, s_star, p))
    };
    let solver_s = solver_s.unwrap_or(s_star);
    if solver_s == 0 || (!matrix && solver_s > p) {
        return Err(Error::invalid_argument(format!(
            "cell {index}: projection size {solver_s} outside 1..={p}"
        )));
    }
    let covariance = match cfg.scenario {
        Scenario::ConditionSweep => CovarianceSpec::planted(
            p,
            s_star,
            rho_for_condition_target(base.kappa_target),
        ),
        _ => CovarianceSpec::identity(p),
    };
    Ok(CellPlan {
        index,
        grid_value: g,
        p,
        s_star,
        sigma,
        n,
        solver_s,
        covariance,
        matrix,
    })
}

/// Step sizes shared by every trial in a cell, estimated once from the
/// cell's first instance (40 sampled supports).
#[derive(Debug, Clone, Copy, Default)]
struct CellSteps {
    iht: Option<f64>,
    pht: Option<f64>,
    grades: Option<f64>,
}

const CELL_STEP_TRIALS: usize = 40;
const STEP_SUBSTREAM: u64 = u64::MAX;

fn needs_steps(algorithms: &[Algorithm]) -> bool {
    algorithms.iter().any(|a| {
        matches!(
            a,
            Algorithm::Iht | Algorithm::Htp | Algorithm::Grades | Algorithm::Ompr | Algorithm::Pht { .. }
        )
    })
}

fn estimate_cell_steps(
    cfg: &ExperimentConfig,
    plan: &CellPlan,
    root: RngStream,
) -> Result<CellSteps> {
    if plan.matrix || !needs_steps(&cfg.algorithms) {
        return Ok(CellSteps::default());
    }
    let stream = root.substream(plan.index as u64).substream(0);
    let inst = generate_instance(plan, stream)?;
    let obj = inst.objective()?;
    let level = (2 * plan.solver_s + plan.s_star).min(plan.p);
    let est = estimate_rsc_rss(
        &obj,
        level,
        CELL_STEP_TRIALS,
        root.substream(plan.index as u64).substream(STEP_SUBSTREAM),
        None,
    )?;
    Ok(CellSteps {
        iht: Some(step_from_smoothness(est.l_hat, StepFamily::IhtFamily)?),
        pht: Some(step_from_smoothness(est.l_hat, StepFamily::Pht)?),
        grades: Some(1.0 / est.l_hat),
    })
}

fn generate_instance(plan: &CellPlan, stream: RngStream) -> Result<ProblemInstance> {
    synth_linear(
        plan.p,
        plan.s_star,
        plan.n,
        plan.sigma,
        &plan.covariance,
        stream,
    )
}

struct RunMetrics {
    undiscovered: usize,
    support_err_frac: f64,
    l2_err: f64,
    f_final: f64,
    iters: usize,
    wall_time_s: f64,
}

fn missing_step(name: &str) -> Error {
    Error::numerical(format!("{name}: cell step size unavailable"), None)
}

/// Runs one algorithm on a generated instance; wall time covers only the
/// solve call.
fn run_on_instance(
    alg: &Algorithm,
    inst: &ProblemInstance,
    obj: &QuadraticObjective,
    plan: &CellPlan,
    steps: &CellSteps,
    max_iters: usize,
) -> Result<RunMetrics> {
    let s = plan.solver_s;
    let started = Instant::now();
    let (theta, iters): (Vector, usize) = match alg {
        Algorithm::Iht => {
            let cfg = SolverConfig::iht(s)
                .with_step_size(steps.iht.ok_or_else(|| missing_step("iht"))?)
                .with_max_iters(max_iters);
            let (t, tr) = iht_solve(obj, &cfg)?;
            (t.values, tr.iterations)
        }
        Algorithm::Htp => {
            let cfg = SolverConfig::htp(s)
                .with_step_size(steps.iht.ok_or_else(|| missing_step("htp"))?)
                .with_max_iters(max_iters);
            let (t, tr) = iht_solve(obj, &cfg)?;
            (t.values, tr.iterations)
        }
        Algorithm::Grades => {
            let cfg = SolverConfig::iht(s)
                .with_step_size(steps.grades.ok_or_else(|| missing_step("grades"))?)
                .with_max_iters(max_iters);
            let (t, tr) = iht_solve(obj, &cfg)?;
            (t.values, tr.iterations)
        }
        Algorithm::Cosamp => {
            let cfg = SolverConfig::cosamp(s).with_max_iters(max_iters);
            let (t, tr) = two_stage_solve(obj, &cfg)?;
            (t.values, tr.iterations)
        }
        Algorithm::Sp => {
            let cfg = SolverConfig::sp(s).with_max_iters(max_iters);
            let (t, tr) = two_stage_solve(obj, &cfg)?;
            (t.values, tr.iterations)
        }
        Algorithm::Ompr => {
            let cfg = SolverConfig::ompr(s)
                .with_step_size(steps.pht.ok_or_else(|| missing_step("ompr"))?)
                .with_max_iters(max_iters);
            let (t, tr) = pht_solve(obj, &cfg)?;
            (t.values, tr.iterations)
        }
        Algorithm::Pht { level } => {
            if *level > s {
                return Err(Error::invalid_argument(format!(
                    "pht({level}): level exceeds projection size {s}"
                )));
            }
            let cfg = SolverConfig::pht(s, *level)
                .with_step_size(steps.pht.ok_or_else(|| missing_step("pht"))?)
                .with_max_iters(max_iters);
            let (t, tr) = pht_solve(obj, &cfg)?;
            (t.values, tr.iterations)
        }
        Algorithm::IstaLasso => {
            let lambda = default_lasso_lambda(plan.sigma, plan.p, plan.n);
            let cfg = LassoConfig::new(lambda).with_max_iters(max_iters.max(1000));
            let (t, tr) = ista_lasso(obj, &cfg)?;
            (t.values, tr.iterations)
        }
        Algorithm::Foba => {
            let mut cfg = FobaConfig::new(s);
            cfg.max_iters = max_iters.max(4 * s);
            let (t, tr) = foba(obj, &cfg)?;
            (t.values, tr.iterations)
        }
    };
    let wall_time_s = started.elapsed().as_secs_f64();
    let (undiscovered, support_err_frac) = support_error(&theta, &inst.theta_bar, plan.s_star)?;
    let l2_err = (&theta - &inst.theta_bar).norm();
    let f_final = obj.value(&theta);
    Ok(RunMetrics {
        undiscovered,
        support_err_frac,
        l2_err,
        f_final,
        iters,
        wall_time_s,
    })
}

fn run_matrix_cell(
    plan: &CellPlan,
    stream: RngStream,
    max_iters: usize,
) -> Result<(MatrixProblemInstance, RunMetrics)> {
    let inst = make_matrix_instance(plan.p, plan.p, plan.s_star, plan.n, plan.sigma, stream)?;
    let obj = inst.objective()?;
    let started = Instant::now();
    let cfg = SolverConfig::new(plan.s_star).with_max_iters(max_iters);
    let (w, trace) = matrix_iht_solve(&obj, &cfg)?;
    let wall_time_s = started.elapsed().as_secs_f64();
    use hardshrink::objectives::MatrixObjective;
    let metrics = RunMetrics {
        undiscovered: 0,
        support_err_frac: 0.0,
        l2_err: (&w - &inst.w_bar).norm(),
        f_final: obj.value(&w),
        iters: trace.iterations,
        wall_time_s,
    };
    Ok((inst, metrics))
}

/// Runs the full sweep: every grid cell × algorithm × trial, in parallel
/// over trials, with rows sorted canonically afterwards. Individual run
/// failures become error rows and never abort the sweep.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let root = RngStream::new(cfg.seed, 0);
    let plans: Vec<CellPlan> = (0..cfg.grid.len())
        .map(|i| plan_cell(cfg, i))
        .collect::<Result<_>>()?;
    let steps: Vec<Result<CellSteps>> = plans
        .iter()
        .map(|plan| estimate_cell_steps(cfg, plan, root))
        .collect();

    let tasks: Vec<(usize, usize)> = (0..plans.len())
        .flat_map(|c| (0..cfg.trials_per_cell).map(move |t| (c, t)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::numerical(format!("thread pool: {e}"), None))?;

    let per_task: Vec<(Vec<ResultRow>, Vec<ErrorRow>)> = pool.install(|| {
        use rayon::prelude::*;
        tasks
            .par_iter()
            .map(|&(cell, trial)| run_task(cfg, &plans[cell], &steps[cell], root, trial))
            .collect()
    });

    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (mut r, mut e) in per_task {
        rows.append(&mut r);
        errors.append(&mut e);
    }
    // Canonical order: algorithm, then grid cell, then trial.
    rows.sort_by(|a, b| {
        (&a.algorithm, a.grid_value.total_cmp(&b.grid_value), a.trial).partial_cmp(&(
            &b.algorithm,
            std::cmp::Ordering::Equal,
            b.trial,
        ))
        .unwrap_or(std::cmp::Ordering::Equal)
    });
    errors.sort_by(|a, b| {
        (&a.algorithm, a.grid_value.total_cmp(&b.grid_value), a.trial).partial_cmp(&(
            &b.algorithm,
            std::cmp::Ordering::Equal,
            b.trial,
        ))
        .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(ExperimentOutcome { rows, errors })
}

fn run_task(
    cfg: &ExperimentConfig,
    plan: &CellPlan,
    steps: &Result<CellSteps>,
    root: RngStream,
    trial: usize,
) -> (Vec<ResultRow>, Vec<ErrorRow>) {
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let stream = root.substream(plan.index as u64).substream(trial as u64);
    let error_all = |reason: String, errors: &mut Vec<ErrorRow>| {
        for alg in &cfg.algorithms {
            errors.push(ErrorRow {
                scenario: cfg.scenario.name().into(),
                algorithm: alg.name(),
                grid_param: cfg.scenario.grid_param().into(),
                grid_value: plan.grid_value,
                trial,
                reason: reason.clone(),
            });
        }
    };

    if plan.matrix {
        match run_matrix_cell(plan, stream, cfg.max_iters) {
            Ok((_, m)) => rows.push(to_row(cfg, plan, trial, stream, &m, &Algorithm::Iht)),
            Err(e) => error_all(e.to_string(), &mut errors),
        }
        return (rows, errors);
    }

    let steps = match steps {
        Ok(s) => *s,
        Err(e) => {
            error_all(format!("step estimation failed: {e}"), &mut errors);
            return (rows, errors);
        }
    };
    let inst = match generate_instance(plan, stream) {
        Ok(inst) => inst,
        Err(e) => {
            error_all(format!("instance generation failed: {e}"), &mut errors);
            return (rows, errors);
        }
    };
    let obj = match inst.objective() {
        Ok(obj) => obj,
        Err(e) => {
            error_all(format!("objective construction failed: {e}"), &mut errors);
            return (rows, errors);
        }
    };
    for alg in &cfg.algorithms {
        match run_on_instance(alg, &inst, &obj, plan, &steps, cfg.max_iters) {
            Ok(m) => rows.push(to_row(cfg, plan, trial, stream, &m, alg)),
            Err(e) => errors.push(ErrorRow {
                scenario: cfg.scenario.name().into(),
                algorithm: alg.name(),
                grid_param: cfg.scenario.grid_param().into(),
                grid_value: plan.grid_value,
                trial,
                reason: e.to_string(),
            }),
        }
    }
    (rows, errors)
}

fn to_row(
    cfg: &ExperimentConfig,
    plan: &CellPlan,
    trial: usize,
    stream: RngStream,
    m: &RunMetrics,
    alg: &Algorithm,
) -> ResultRow {
    ResultRow {
        scenario: cfg.scenario.name().into(),
        algorithm: alg.name(),
        grid_param: cfg.scenario.grid_param().into(),
        grid_value: plan.grid_value,
        trial,
        undiscovered: m.undiscovered,
        support_err_frac: m.support_err_frac,
        l2_err: m.l2_err,
        f_final: m.f_final,
        iters: m.iters,
        wall_time_s: m.wall_time_s,
        seed: stream.stream,
    }
}

// ---------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------

/// Median and interquartile range of every metric over the trials of one
/// `(cell, algorithm)` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub algorithm: String,
    pub grid_param: String,
    pub grid_value: f64,
    pub trials: usize,
    pub undiscovered_median: f64,
    pub undiscovered_iqr: f64,
    pub support_err_frac_median: f64,
    pub support_err_frac_iqr: f64,
    pub l2_err_median: f64,
    pub l2_err_iqr: f64,
    pub f_final_median: f64,
    pub f_final_iqr: f64,
    pub iters_median: f64,
    pub iters_iqr: f64,
    pub wall_time_s_median: f64,
    pub wall_time_s_iqr: f64,
}

/// Middle order statistic (mean of the two middles for even counts).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Interquartile range from Tukey hinges (medians of the lower and upper
/// halves, excluding the middle element for odd counts).
pub fn iqr(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n < 2 {
        return 0.0;
    }
    let half = n / 2;
    let lower = &sorted[..half];
    let upper = &sorted[n - half..];
    median(upper) - median(lower)
}

/// Aggregates raw rows per `(grid cell, algorithm)`, preserving first-seen
/// order of the groups.
pub fn sweep_summary(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut order: Vec<(String, u64)> = Vec::new();
    let mut groups: std::collections::HashMap<(String, u64), Vec<&ResultRow>> =
        std::collections::HashMap::new();
    for row in rows {
        let key = (row.algorithm.clone(), row.grid_value.to_bits());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(row);
    }
    let mut out = Vec::with_capacity(order.len());
    for key in order {
        let members = &groups[&key];
        let first = members[0];
        let collect = |f: &dyn Fn(&ResultRow) -> f64| -> Vec<f64> {
            members.iter().map(|r| f(r)).collect()
        };
        let und = collect(&|r| r.undiscovered as f64);
        let sef = collect(&|r| r.support_err_frac);
        let l2 = collect(&|r| r.l2_err);
        let ff = collect(&|r| r.f_final);
        let it = collect(&|r| r.iters as f64);
        let wt = collect(&|r| r.wall_time_s);
        out.push(SummaryRow {
            scenario: first.scenario.clone(),
            algorithm: first.algorithm.clone(),
            grid_param: first.grid_param.clone(),
            grid_value: first.grid_value,
            trials: members.len(),
            undiscovered_median: median(&und),
            undiscovered_iqr: iqr(&und),
            support_err_frac_median: median(&sef),
            support_err_frac_iqr: iqr(&sef),
            l2_err_median: median(&l2),
            l2_err_iqr: iqr(&l2),
            f_final_median: median(&ff),
            f_final_iqr: iqr(&ff),
            iters_median: median(&it),
            iters_iqr: iqr(&it),
            wall_time_s_median: median(&wt),
            wall_time_s_iqr: iqr(&wt),
        });
    }
    out
}

// ---------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------

pub const CSV_HEADER: &str = "scenario,algorithm,grid_param,grid_value,trial,undiscovered,\
support_err_frac,l2_err,f_final,iters,wall_time_s,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders rows as CSV with the fixed 12-column header; floating-point
/// fields carry 17 significant digits.
pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.algorithm,
            r.grid_param,
            fmt_f64(r.grid_value),
            r.trial,
            r.undiscovered,
            fmt_f64(r.support_err_frac),
            fmt_f64(r.l2_err),
            fmt_f64(r.f_final),
            r.iters,
            fmt_f64(r.wall_time_s),
            r.seed,
        ));
    }
    out
}

pub fn rows_to_json(rows: &[ResultRow]) -> Result<String> {
    serde_json::to_string_pretty(rows)
        .map_err(|e| Error::numerical(format!("json encode: {e}"), None))
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "scenario,algorithm,grid_param,grid_value,trials,\
undiscovered_median,undiscovered_iqr,support_err_frac_median,support_err_frac_iqr,\
l2_err_median,l2_err_iqr,f_final_median,f_final_iqr,iters_median,iters_iqr,\
wall_time_s_median,wall_time_s_iqr",
    );
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.algorithm,
            r.grid_param,
            fmt_f64(r.grid_value),
            r.trials,
            fmt_f64(r.undiscovered_median),
            fmt_f64(r.undiscovered_iqr),
            fmt_f64(r.support_err_frac_median),
            fmt_f64(r.support_err_frac_iqr),
            fmt_f64(r.l2_err_median),
            fmt_f64(r.l2_err_iqr),
            fmt_f64(r.f_final_median),
            fmt_f64(r.f_final_iqr),
            fmt_f64(r.iters_median),
            fmt_f64(r.iters_iqr),
            fmt_f64(r.wall_time_s_median),
            fmt_f64(r.wall_time_s_iqr),
        ));
    }
    out
}

pub fn errors_to_csv(rows: &[ErrorRow]) -> String {
    let mut out = String::from("scenario,algorithm,grid_param,grid_value,trial,reason");
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},\"{}\"\n",
            r.scenario,
            r.algorithm,
            r.grid_param,
            fmt_f64(r.grid_value),
            r.trial,
            r.reason.replace('"', "'"),
        ));
    }
    out
}

/// Writes rows to `path` in the requested format.
pub fn emit(rows: &[ResultRow], format: EmitFormat, path: &Path) -> Result<()> {
    let text = match format {
        EmitFormat::Csv => rows_to_csv(rows),
        EmitFormat::Json => rows_to_json(rows)?,
    };
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Materializes every `(cell, trial)` instance of a sweep under `out`
/// (the `gen` subcommand). Matrix-recovery configs are rejected: only
/// vector regression instances have an on-disk format.
pub fn generate_cells(cfg: &ExperimentConfig, out: &Path) -> Result<usize> {
    cfg.validate()?;
    if cfg.scenario == Scenario::MatrixRecovery {
        return Err(Error::invalid_argument(
            "gen: matrix_recovery instances have no directory format",
        ));
    }
    let root = RngStream::new(cfg.seed, 0);
    let mut count = 0usize;
    for index in 0..cfg.grid.len() {
        let plan = plan_cell(cfg, index)?;
        for trial in 0..cfg.trials_per_cell {
            let stream = root.substream(index as u64).substream(trial as u64);
            let inst = generate_instance(&plan, stream)?;
            let dir = out.join(format!("cell{index:02}_trial{trial:03}"));
            hardshrink::statgen::save_instance(&inst, &dir)?;
            count += 1;
        }
    }
    Ok(count)
}

/// Runs one named algorithm against a stored instance (the `solve`
/// subcommand). Corrupted instances are solved through their corrected
/// objective.
pub fn solve_single(
    inst: &ProblemInstance,
    alg: &Algorithm,
    s: Option<usize>,
    level: Option<usize>,
    eta: Option<f64>,
    max_iters: usize,
) -> Result<ResultRow> {
    let s_star = inst.s_star();
    let solver_s = s.unwrap_or(s_star.max(1));
    let obj = inst.objective()?;
    let plan = CellPlan {
        index: 0,
        grid_value: 0.0,
        p: inst.p(),
        s_star,
        sigma: inst.noise_sigma,
        n: inst.n(),
        solver_s,
        covariance: inst.covariance.clone(),
        matrix: false,
    };
    // Honor an explicit η; otherwise fall back to the solver default rule.
    let alg = match (alg, level) {
        (Algorithm::Pht { .. }, Some(l)) => Algorithm::Pht { level: l },
        _ => alg.clone(),
    };
    let steps = match eta {
        Some(eta) => CellSteps {
            iht: Some(eta),
            pht: Some(eta),
            grades: Some(eta),
        },
        None => {
            let levelk = (2 * solver_s + s_star.max(1)).min(inst.p());
            let est = estimate_rsc_rss(
                &obj,
                levelk,
                CELL_STEP_TRIALS,
                inst.stream.substream(STEP_SUBSTREAM),
                None,
            )?;
            CellSteps {
                iht: Some(step_from_smoothness(est.l_hat, StepFamily::IhtFamily)?),
                pht: Some(step_from_smoothness(est.l_hat, StepFamily::Pht)?),
                grades: Some(1.0 / est.l_hat),
            }
        }
    };
    let m = run_on_instance(&alg, inst, &obj, &plan, &steps, max_iters)?;
    let mut row = to_row(
        &ExperimentConfig {
            scenario: Scenario::NoiseSweep,
            algorithms: vec![alg.clone()],
            grid: vec![inst.noise_sigma],
            trials_per_cell: 1,
            base: crate::config::BaseConfig::default(),
            seed: inst.stream.seed,
            max_iters,
        },
        &plan,
        0,
        inst.stream,
        &m,
        &alg,
    );
    row.scenario = "solve".into();
    row.grid_param = "sigma".into();
    row.grid_value = inst.noise_sigma;
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_matches_sort_oracle() {
        // Deterministic pseudo-random values from a small LCG.
        let mut state = 0x2545F491_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 10.0
        };
        for len in 1..20usize {
            let vals: Vec<f64> = (0..len).map(|_| next()).collect();
            let got = median(&vals);
            let mut sorted = vals.clone();
            sorted.sort_by(f64::total_cmp);
            let want = if len % 2 == 1 {
                sorted[len / 2]
            } else {
                0.5 * (sorted[len / 2 - 1] + sorted[len / 2])
            };
            assert_eq!(got, want);
        }
    }

    #[test]
    fn median_of_single_row_is_the_row() {
        assert_eq!(median(&[3.5]), 3.5);
        assert_eq!(iqr(&[3.5]), 0.0);
    }

    #[test]
    fn odd_count_median_is_middle_statistic() {
        assert_eq!(median(&[5.0, 1.0, 9.0]), 5.0);
    }
}
