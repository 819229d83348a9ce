//! Gradient solvers over sparsity- and rank-constrained sets: plain and
//! fully-corrective hard-thresholding descent, two-stage expansion methods
//! (the CoSaMP/subspace-pursuit family), partial hard thresholding (OMPR
//! for level 1), and the low-rank matrix variant.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::numkit::{Matrix, RngStream, Vector};
use crate::objectives::{estimate_rsc_rss, MatrixObjective, Objective};
use crate::projections::{self, PartialProjectionSpec};

/// Indices of the nonzero entries of `v`, ascending.
pub fn support_of(v: &Vector) -> Vec<usize> {
    (0..v.len()).filter(|&i| v[i] != 0.0).collect()
}

/// Dense parameter vector with support queries; the iterate every vector
/// solver returns.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub values: Vector,
}

impl ParamVector {
    pub fn new(values: Vector) -> Self {
        ParamVector { values }
    }

    pub fn support(&self) -> Vec<usize> {
        support_of(&self.values)
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }
}

/// Which quantity the stopping test watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// Objective decrease ≤ `epsilon·(1+|f|)` for 3 consecutive iterations.
    FDecrease,
    /// Gradient norm on the active support ≤ `epsilon·(1+‖θ‖)`.
    GradSupportNorm,
    /// Iterate movement ≤ `epsilon·(1+‖θ‖)` for 3 consecutive iterations.
    IterateChange,
}

/// Why a solver run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged(StopRule),
    MaxIters,
    /// Greedy selection reached its target support size.
    TargetSparsityReached,
    /// Lasso KKT conditions hold within tolerance.
    KktSatisfied,
}

/// Algorithm parameters shared by all solvers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Projected sparsity level (or target rank for the matrix solver).
    pub sparsity: usize,
    /// Expansion level for two-stage solvers, partial level for PHT.
    pub expansion: usize,
    /// Step size η; `None` selects the default rule from estimated
    /// restricted smoothness (200 sampled supports).
    pub step_size: Option<f64>,
    /// Tolerance driving the stop rule.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Follow each projection with an exact minimization on the projected
    /// support (turns plain hard-thresholding descent into HTP).
    pub fully_corrective: bool,
    pub stop_rule: StopRule,
    /// Optional warm start; solvers begin from zero by default.
    pub warm_start: Option<Vector>,
}

impl SolverConfig {
    pub fn new(sparsity: usize) -> Self {
        SolverConfig {
            sparsity,
            expansion: 1,
            step_size: None,
            epsilon: 1e-12,
            max_iters: 1000,
            fully_corrective: false,
            stop_rule: StopRule::FDecrease,
            warm_start: None,
        }
    }

    /// Plain hard-thresholding gradient descent.
    pub fn iht(sparsity: usize) -> Self {
        SolverConfig::new(sparsity)
    }

    /// Fully corrective hard thresholding (HTP).
    pub fn htp(sparsity: usize) -> Self {
        SolverConfig {
            fully_corrective: true,
            ..SolverConfig::new(sparsity)
        }
    }

    /// Two-stage preset with expansion 2s (CoSaMP).
    pub fn cosamp(sparsity: usize) -> Self {
        SolverConfig {
            expansion: 2 * sparsity,
            ..SolverConfig::new(sparsity)
        }
    }

    /// Two-stage preset with expansion s (subspace pursuit).
    pub fn sp(sparsity: usize) -> Self {
        SolverConfig {
            expansion: sparsity,
            ..SolverConfig::new(sparsity)
        }
    }

    /// Partial hard thresholding at level ℓ.
    pub fn pht(sparsity: usize, level: usize) -> Self {
        SolverConfig {
            expansion: level,
            ..SolverConfig::new(sparsity)
        }
    }

    /// Orthogonal matching pursuit with replacement: PHT at level 1.
    pub fn ompr(sparsity: usize) -> Self {
        SolverConfig::pht(sparsity, 1)
    }

    pub fn with_step_size(mut self, eta: f64) -> Self {
        self.step_size = Some(eta);
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.sparsity == 0 {
            return Err(Error::invalid_argument("solver: sparsity must be ≥ 1"));
        }
        if self.sparsity > dim {
            return Err(Error::invalid_argument(format!(
                "solver: sparsity {} exceeds dimension {dim}",
                self.sparsity
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid_argument("solver: max_iters must be ≥ 1"));
        }
        if self.epsilon < 0.0 {
            return Err(Error::invalid_argument("solver: epsilon must be ≥ 0"));
        }
        if let Some(eta) = self.step_size {
            if !(eta.is_finite() && eta > 0.0) {
                return Err(Error::invalid_argument(format!(
                    "solver: step size {eta} must be positive and finite"
                )));
            }
        }
        Ok(())
    }
}

/// Support stored per iteration record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SupportRecord {
    Indices(Vec<usize>),
    Rank(usize),
}

/// One iteration of a solver run.
#[derive(Debug, Clone)]
pub struct IterRecord {
    /// 1-based iteration counter.
    pub t: usize,
    /// Objective value at the end of the iteration.
    pub f_value: f64,
    pub support: SupportRecord,
    /// Number of support elements added this iteration (rank delta for the
    /// matrix solver).
    pub support_change_count: usize,
    pub wall_time_s: f64,
}

/// Full per-iteration history of a solver run.
#[derive(Debug, Clone)]
pub struct IterTrace {
    pub records: Vec<IterRecord>,
    pub iterations: usize,
    pub stop: StopReason,
    pub total_time_s: f64,
}

impl IterTrace {
    pub fn final_f(&self) -> f64 {
        self.records.last().map(|r| r.f_value).unwrap_or(f64::NAN)
    }
}

/// Tracks the configured stop rule across iterations.
struct StopTracker {
    rule: StopRule,
    epsilon: f64,
    consecutive: usize,
}

impl StopTracker {
    fn new(cfg: &SolverConfig) -> Self {
        StopTracker {
            rule: cfg.stop_rule,
            epsilon: cfg.epsilon,
            consecutive: 0,
        }
    }

    fn should_stop(
        &mut self,
        f_prev: f64,
        f_new: f64,
        step_norm: f64,
        theta_norm: f64,
        grad_support_norm: f64,
    ) -> bool {
        match self.rule {
            StopRule::FDecrease => {
                if f_prev - f_new <= self.epsilon * (1.0 + f_new.abs()) {
                    self.consecutive += 1;
                } else {
                    self.consecutive = 0;
                }
                self.consecutive >= 3
            }
            StopRule::IterateChange => {
                if step_norm <= self.epsilon * (1.0 + theta_norm) {
                    self.consecutive += 1;
                } else {
                    self.consecutive = 0;
                }
                self.consecutive >= 3
            }
            StopRule::GradSupportNorm => {
                grad_support_norm <= self.epsilon.max(1e-15) * (1.0 + theta_norm)
            }
        }
    }
}

/// Which default step-size formula applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepFamily {
    /// Hard-thresholding descent family: η = 2/(3·L̂).
    IhtFamily,
    /// Partial hard thresholding: η = 1/(2·L̂).
    Pht,
}

/// Sampling trials used by the default step-size rule.
const STEP_TRIALS: usize = 200;
/// Fixed stream for step estimation; keeps solver runs deterministic.
const STEP_SEED: u64 = 0x5EED_57E9;

/// Default step size from the estimated restricted smoothness constant at
/// level `min(2s + s_star_hint, p)`; the hint defaults to `s`.
pub fn default_step_size<O: Objective + ?Sized>(
    obj: &O,
    s: usize,
    family: StepFamily,
    s_star_hint: Option<usize>,
) -> Result<f64> {
    let p = obj.dim();
    let level = (2 * s + s_star_hint.unwrap_or(s)).min(p);
    let est = estimate_rsc_rss(obj, level, STEP_TRIALS, RngStream::new(STEP_SEED, 0), None)?;
    step_from_smoothness(est.l_hat, family)
}

/// Applies the per-family step formula to a smoothness estimate.
pub fn step_from_smoothness(l_hat: f64, family: StepFamily) -> Result<f64> {
    if !(l_hat.is_finite() && l_hat > 0.0) {
        return Err(Error::numerical(
            format!("step size rule needs positive smoothness, got L̂ = {l_hat}"),
            None,
        ));
    }
    Ok(match family {
        StepFamily::IhtFamily => 2.0 / (3.0 * l_hat),
        StepFamily::Pht => 1.0 / (2.0 * l_hat),
    })
}

fn new_elements(current: &[usize], previous: &[usize]) -> usize {
    current.iter().filter(|i| !previous.contains(i)).count()
}

fn grad_norm_on(g: &Vector, support: &[usize]) -> f64 {
    support.iter().map(|&i| g[i] * g[i]).sum::<f64>().sqrt()
}

fn initial_iterate(cfg: &SolverConfig, dim: usize) -> Result<Vector> {
    match &cfg.warm_start {
        None => Ok(Vector::zeros(dim)),
        Some(w) => {
            if w.len() != dim {
                return Err(Error::invalid_argument(format!(
                    "solver: warm start has length {} but objective dimension is {dim}",
                    w.len()
                )));
            }
            let proj = projections::hard_threshold(w, cfg.sparsity)?;
            Ok(proj.values)
        }
    }
}

fn check_finite(f: f64, iteration: usize) -> Result<f64> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::Divergence { iteration })
    }
}

/// Runs the shared per-iteration bookkeeping loop for vector solvers.
/// `update` maps (current iterate, gradient, current support) to the next
/// iterate.
fn run_vector_solver<O, F>(
    obj: &O,
    cfg: &SolverConfig,
    mut update: F,
) -> Result<(ParamVector, IterTrace)>
where
    O: Objective + ?Sized,
    F: FnMut(&Vector, &Vector, &[usize]) -> Result<Vector>,
{
    let started = Instant::now();
    let mut theta = initial_iterate(cfg, obj.dim())?;
    let mut support = support_of(&theta);
    let (mut f_cur, mut g_cur) = obj.value_and_gradient(&theta);
    check_finite(f_cur, 0)?;

    let mut records = Vec::new();
    let mut tracker = StopTracker::new(cfg);
    let mut stop = StopReason::MaxIters;

    for t in 1..=cfg.max_iters {
        let tick = Instant::now();
        let next = update(&theta, &g_cur, &support)?;
        let (f_next, g_next) = obj.value_and_gradient(&next);
        check_finite(f_next, t)?;

        let next_support = support_of(&next);
        let added = new_elements(&next_support, &support);
        let step_norm = (&next - &theta).norm();
        let gs = grad_norm_on(&g_next, &next_support);
        records.push(IterRecord {
            t,
            f_value: f_next,
            support: SupportRecord::Indices(next_support.clone()),
            support_change_count: added,
            wall_time_s: tick.elapsed().as_secs_f64(),
        });

        let done = tracker.should_stop(f_cur, f_next, step_norm, next.norm(), gs);
        theta = next;
        support = next_support;
        f_cur = f_next;
        g_cur = g_next;
        if done {
            stop = StopReason::Converged(cfg.stop_rule);
            break;
        }
    }

    let trace = IterTrace {
        iterations: records.len(),
        records,
        stop,
        total_time_s: started.elapsed().as_secs_f64(),
    };
    Ok((ParamVector::new(theta), trace))
}

/// Hard-thresholding gradient descent: `θ ← P_s(θ − η∇f(θ))`, optionally
/// followed by an exact minimization on the projected support (HTP).
pub fn iht_solve<O: Objective + ?Sized>(
    obj: &O,
    cfg: &SolverConfig,
) -> Result<(ParamVector, IterTrace)> {
    cfg.validate(obj.dim())?;
    let eta = match cfg.step_size {
        Some(eta) => eta,
        None => default_step_size(obj, cfg.sparsity, StepFamily::IhtFamily, None)?,
    };
    run_vector_solver(obj, cfg, |theta, g, _| {
        let z = theta - g * eta;
        let proj = projections::hard_threshold(&z, cfg.sparsity)?;
        if cfg.fully_corrective {
            obj.restricted_minimize(&proj.support)
        } else {
            Ok(proj.values)
        }
    })
}

/// Two-stage hard thresholding: expand the support with the `expansion`
/// largest off-support gradient entries, fully correct, project back to
/// `s`, and fully correct again. CoSaMP and subspace pursuit are the
/// presets with expansion `2s` and `s`.
pub fn two_stage_solve<O: Objective + ?Sized>(
    obj: &O,
    cfg: &SolverConfig,
) -> Result<(ParamVector, IterTrace)> {
    cfg.validate(obj.dim())?;
    if cfg.expansion == 0 {
        return Err(Error::invalid_argument(
            "two-stage solver: expansion level must be ≥ 1",
        ));
    }
    let p = obj.dim();
    run_vector_solver(obj, cfg, |_, g, support| {
        let mut member = vec![false; p];
        for &i in support {
            member[i] = true;
        }
        let mut candidates: Vec<usize> = (0..p).filter(|&i| !member[i]).collect();
        candidates.sort_by(|&i, &j| g[j].abs().total_cmp(&g[i].abs()).then(i.cmp(&j)));
        candidates.truncate(cfg.expansion);
        let mut working: Vec<usize> = support.to_vec();
        working.extend_from_slice(&candidates);
        working.sort_unstable();

        let expanded = obj.restricted_minimize(&working)?;
        let proj = projections::hard_threshold(&expanded, cfg.sparsity)?;
        obj.restricted_minimize(&proj.support)
    })
}

/// Partial hard thresholding: a gradient step projected onto s-sparse
/// vectors that admit at most `expansion` support entries from outside the
/// current support, followed by a fully corrective step. Level 1 is OMPR.
pub fn pht_solve<O: Objective + ?Sized>(
    obj: &O,
    cfg: &SolverConfig,
) -> Result<(ParamVector, IterTrace)> {
    cfg.validate(obj.dim())?;
    if cfg.expansion == 0 || cfg.expansion > cfg.sparsity {
        return Err(Error::invalid_argument(format!(
            "pht solver: level {} outside 1..=s (s = {})",
            cfg.expansion, cfg.sparsity
        )));
    }
    let eta = match cfg.step_size {
        Some(eta) => eta,
        None => default_step_size(obj, cfg.sparsity, StepFamily::Pht, None)?,
    };
    run_vector_solver(obj, cfg, |theta, g, support| {
        let z = theta - g * eta;
        let spec = PartialProjectionSpec::new(cfg.sparsity, cfg.expansion, support.to_vec())?;
        let v = projections::partial_hard_threshold(&z, &spec)?;
        obj.restricted_minimize(&v.support)
    })
}

/// Hard-thresholding descent for rank-constrained matrix problems:
/// `W ← PM_s(W − η∇f(W))` with `PM_s` the best rank-s approximation.
pub fn matrix_iht_solve<M: MatrixObjective + ?Sized>(
    mobj: &M,
    cfg: &SolverConfig,
) -> Result<(Matrix, IterTrace)> {
    let (rows, cols) = mobj.shape();
    let max_rank = rows.min(cols);
    if cfg.sparsity == 0 || cfg.sparsity > max_rank {
        return Err(Error::invalid_argument(format!(
            "matrix solver: rank {} outside 1..={max_rank}",
            cfg.sparsity
        )));
    }
    if cfg.max_iters == 0 {
        return Err(Error::invalid_argument("solver: max_iters must be ≥ 1"));
    }
    let eta = match cfg.step_size {
        Some(eta) if eta > 0.0 && eta.is_finite() => eta,
        Some(eta) => {
            return Err(Error::invalid_argument(format!(
                "solver: step size {eta} must be positive and finite"
            )))
        }
        None => {
            let l = mobj.curvature_upper_bound().ok_or_else(|| {
                Error::invalid_argument(
                    "matrix solver: objective exposes no curvature bound; supply a step size",
                )
            })?;
            step_from_smoothness(l, StepFamily::IhtFamily)?
        }
    };

    let started = Instant::now();
    let mut w = Matrix::zeros(rows, cols);
    let (mut f_cur, mut g_cur) = mobj.value_and_gradient(&w);
    check_finite(f_cur, 0)?;
    let mut rank_prev = 0usize;

    let mut records = Vec::new();
    let mut tracker = StopTracker::new(cfg);
    let mut stop = StopReason::MaxIters;

    for t in 1..=cfg.max_iters {
        let tick = Instant::now();
        let z = &w - &g_cur * eta;
        let next = projections::rank_project(&z, cfg.sparsity)?;
        let (f_next, g_next) = mobj.value_and_gradient(&next);
        check_finite(f_next, t)?;

        let rank_next = numerical_rank(&next);
        let step_norm = (&next - &w).norm();
        records.push(IterRecord {
            t,
            f_value: f_next,
            support: SupportRecord::Rank(rank_next),
            support_change_count: rank_next.abs_diff(rank_prev),
            wall_time_s: tick.elapsed().as_secs_f64(),
        });

        let done = tracker.should_stop(f_cur, f_next, step_norm, next.norm(), f64::INFINITY);
        w = next;
        f_cur = f_next;
        g_cur = g_next;
        rank_prev = rank_next;
        if done {
            stop = StopReason::Converged(cfg.stop_rule);
            break;
        }
    }

    let trace = IterTrace {
        iterations: records.len(),
        records,
        stop,
        total_time_s: started.elapsed().as_secs_f64(),
    };
    Ok((w, trace))
}

/// Numerical rank at the relative threshold `σ_i > 1e-10·σ₁`.
pub fn numerical_rank(w: &Matrix) -> usize {
    let svals = match crate::numkit::svd(w) {
        Ok(f) => f.singular_values,
        Err(_) => return 0,
    };
    let top = svals[0];
    if top <= 0.0 {
        return 0;
    }
    svals.iter().filter(|&&s| s > 1e-10 * top).count()
}
