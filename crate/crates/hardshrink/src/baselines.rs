//! Baseline competitors for runtime and recovery comparisons: a
//! proximal-gradient lasso solver (ISTA with soft thresholding) and a
//! forward-backward greedy selector.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::numkit::Vector;
use crate::objectives::{Objective, QuadraticObjective};
use crate::solvers::{
    support_of, IterRecord, IterTrace, ParamVector, StopReason, SupportRecord,
};

/// Proximal-gradient lasso parameters.
#[derive(Debug, Clone)]
pub struct LassoConfig {
    /// L1 regularization weight (≥ 0).
    pub lambda: f64,
    pub max_iters: usize,
    /// KKT residual at which the run stops.
    pub tolerance: f64,
}

impl LassoConfig {
    pub fn new(lambda: f64) -> Self {
        LassoConfig {
            lambda,
            max_iters: 5000,
            tolerance: 1e-6,
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }
}

/// Theory-driven default weight `4σ√(ln p / n)`: twice the high-probability
/// bound on the gradient sup-norm of the least-squares loss at the target.
pub fn default_lasso_lambda(sigma: f64, p: usize, n: usize) -> f64 {
    4.0 * sigma * ((p as f64).ln() / n as f64).sqrt()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Largest KKT violation of the lasso optimality conditions at `theta`.
fn kkt_residual(g: &Vector, theta: &Vector, lambda: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..theta.len() {
        let v = if theta[i] > 0.0 {
            (g[i] + lambda).abs()
        } else if theta[i] < 0.0 {
            (g[i] - lambda).abs()
        } else {
            (g[i].abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Proximal gradient descent for `f(θ) + λ‖θ‖₁` with step `1/λ_max(A)`.
/// Requires a convex quadratic (corrected, possibly indefinite losses are
/// rejected). Trace values are the composite objective.
pub fn ista_lasso(
    obj: &QuadraticObjective,
    cfg: &LassoConfig,
) -> Result<(ParamVector, IterTrace)> {
    if cfg.lambda < 0.0 {
        return Err(Error::invalid_argument("lasso: λ must be ≥ 0"));
    }
    if cfg.max_iters == 0 {
        return Err(Error::invalid_argument("lasso: max_iters must be ≥ 1"));
    }
    if obj.possibly_indefinite() {
        return Err(Error::invalid_argument(
            "lasso: objective is flagged possibly indefinite; least-squares losses only",
        ));
    }
    let lambda_max = obj.estimate_lambda_max();
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(Error::numerical(
            format!("lasso: curvature estimate λ_max = {lambda_max} unusable"),
            None,
        ));
    }
    // Small margin keeps the step below 1/L despite estimation error.
    let step = 1.0 / (lambda_max * 1.01);

    let started = Instant::now();
    let p = obj.dim();
    let mut theta = Vector::zeros(p);
    let (mut f_val, mut g) = obj.value_and_gradient(&theta);
    let mut records = Vec::new();
    let mut stop = StopReason::MaxIters;

    for t in 1..=cfg.max_iters {
        let tick = Instant::now();
        if kkt_residual(&g, &theta, cfg.lambda) <= cfg.tolerance {
            stop = StopReason::KktSatisfied;
            break;
        }
        let mut next = &theta - &g * step;
        let shrink = cfg.lambda * step;
        for i in 0..p {
            next[i] = soft_threshold(next[i], shrink);
        }
        let (f_next, g_next) = obj.value_and_gradient(&next);
        if !f_next.is_finite() {
            return Err(Error::Divergence { iteration: t });
        }
        let composite = f_next + cfg.lambda * next.iter().map(|v| v.abs()).sum::<f64>();
        records.push(IterRecord {
            t,
            f_value: composite,
            support: SupportRecord::Indices(support_of(&next)),
            support_change_count: 0,
            wall_time_s: tick.elapsed().as_secs_f64(),
        });
        theta = next;
        f_val = f_next;
        g = g_next;
    }
    let _ = f_val;

    let trace = IterTrace {
        iterations: records.len(),
        records,
        stop,
        total_time_s: started.elapsed().as_secs_f64(),
    };
    Ok((ParamVector::new(theta), trace))
}

/// Forward-backward greedy selection parameters.
#[derive(Debug, Clone)]
pub struct FobaConfig {
    /// Stop growing once this many coordinates are active.
    pub target_sparsity: usize,
    /// Minimum objective gain a forward step must achieve.
    pub forward_threshold: f64,
    /// A coordinate is dropped when removing it costs less than this
    /// fraction of the last forward gain.
    pub backward_ratio: f64,
    pub max_iters: usize,
}

impl FobaConfig {
    pub fn new(target_sparsity: usize) -> Self {
        FobaConfig {
            target_sparsity,
            forward_threshold: 1e-10,
            backward_ratio: 0.5,
            max_iters: 1000,
        }
    }
}

/// Forward-backward greedy selection: each forward step adds the
/// coordinate with the largest gradient magnitude and fully corrects;
/// backward steps drop coordinates whose removal costs less than
/// `backward_ratio` times the last forward gain. Support changes by
/// exactly one element per recorded iteration.
pub fn foba<O: Objective + ?Sized>(
    obj: &O,
    cfg: &FobaConfig,
) -> Result<(ParamVector, IterTrace)> {
    if cfg.target_sparsity == 0 || cfg.target_sparsity > obj.dim() {
        return Err(Error::invalid_argument(format!(
            "foba: target sparsity {} outside 1..={}",
            cfg.target_sparsity,
            obj.dim()
        )));
    }
    if cfg.forward_threshold <= 0.0 || cfg.backward_ratio <= 0.0 {
        return Err(Error::invalid_argument(
            "foba: thresholds must be positive",
        ));
    }
    if cfg.max_iters == 0 {
        return Err(Error::invalid_argument("foba: max_iters must be ≥ 1"));
    }

    let started = Instant::now();
    let p = obj.dim();
    let mut support: Vec<usize> = Vec::new();
    let mut theta = Vector::zeros(p);
    let mut f_cur = obj.value(&theta);
    let mut last_gain;
    let mut records = Vec::new();
    let mut stop = StopReason::MaxIters;
    let mut steps = 0usize;

    'outer: while steps < cfg.max_iters {
        // Forward: best off-support coordinate by gradient magnitude.
        let g = obj.gradient(&theta);
        let mut member = vec![false; p];
        for &i in &support {
            member[i] = true;
        }
        let mut best: Option<usize> = None;
        for i in 0..p {
            if member[i] {
                continue;
            }
            match best {
                None => best = Some(i),
                Some(b) if g[i].abs() > g[b].abs() => best = Some(i),
                _ => {}
            }
        }
        let Some(pick) = best else {
            stop = StopReason::TargetSparsityReached;
            break;
        };
        let mut grown = support.clone();
        grown.push(pick);
        grown.sort_unstable();
        let theta_next = obj.restricted_minimize(&grown)?;
        let f_next = obj.value(&theta_next);
        let gain = f_cur - f_next;
        if !f_next.is_finite() {
            return Err(Error::Divergence { iteration: steps + 1 });
        }
        if gain < cfg.forward_threshold {
            stop = StopReason::Converged(crate::solvers::StopRule::FDecrease);
            break;
        }
        steps += 1;
        records.push(IterRecord {
            t: steps,
            f_value: f_next,
            support: SupportRecord::Indices(grown.clone()),
            support_change_count: 1,
            wall_time_s: 0.0,
        });
        support = grown;
        theta = theta_next;
        f_cur = f_next;
        last_gain = gain;

        // Backward: drop coordinates that cost almost nothing to remove.
        while support.len() > 1 && steps < cfg.max_iters {
            let removal = cheapest_removal(obj, &theta, &support);
            let Some((j, cost)) = removal else { break };
            if cost >= cfg.backward_ratio * last_gain {
                break;
            }
            let shrunk: Vec<usize> = support.iter().copied().filter(|&i| i != j).collect();
            let theta_next = obj.restricted_minimize(&shrunk)?;
            let f_next = obj.value(&theta_next);
            steps += 1;
            records.push(IterRecord {
                t: steps,
                f_value: f_next,
                support: SupportRecord::Indices(shrunk.clone()),
                support_change_count: 0,
                wall_time_s: 0.0,
            });
            support = shrunk;
            theta = theta_next;
            f_cur = f_next;
        }

        if support.len() >= cfg.target_sparsity {
            stop = StopReason::TargetSparsityReached;
            break 'outer;
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

/// Cost of zeroing one active coordinate of a fully-corrected iterate.
/// With a zero restricted gradient this is `½·A_jj·θ_j²` for quadratics;
/// objectives without curvature blocks are evaluated directly.
fn cheapest_removal<O: Objective + ?Sized>(
    obj: &O,
    theta: &Vector,
    support: &[usize],
) -> Option<(usize, f64)> {
    let f_base = obj.value(theta);
    let mut best: Option<(usize, f64)> = None;
    for &j in support {
        let cost = match obj.hessian_block(&[j]) {
            Some(block) => 0.5 * block[(0, 0)] * theta[j] * theta[j],
            None => {
                let mut probe = theta.clone();
                probe[j] = 0.0;
                obj.value(&probe) - f_base
            }
        };
        match best {
            None => best = Some((j, cost)),
            Some((_, c)) if cost < c => best = Some((j, cost)),
            _ => {}
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{Matrix, RngStream};
    use crate::objectives::make_least_squares;
    use rand::Rng;

    #[test]
    fn lasso_without_penalty_recovers_targets() {
        let p = 5;
        let y = Vector::from_vec(vec![1.0, -2.0, 0.5, 3.0, 0.0]);
        let obj = make_least_squares(Matrix::identity(p, p), y.clone()).unwrap();
        let cfg = LassoConfig::new(0.0).with_max_iters(20000);
        let (theta, _) = ista_lasso(&obj, &cfg).unwrap();
        assert!((theta.values - y).norm() < 1e-5);
    }

    #[test]
    fn lasso_kill_condition_returns_zero() {
        let mut rng = RngStream::new(61, 0).rng();
        let (n, p) = (20, 6);
        let x = Matrix::from_fn(n, p, |_, _| rng.random::<f64>() - 0.5);
        let y = Vector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
        let obj = make_least_squares(x.clone(), y.clone()).unwrap();
        let grad_at_zero = x.transpose() * &y * (2.0 / n as f64);
        let lambda = grad_at_zero.amax() * 1.001;
        let (theta, trace) = ista_lasso(&obj, &LassoConfig::new(lambda)).unwrap();
        assert!(theta.values.iter().all(|&v| v == 0.0));
        assert_eq!(trace.stop, StopReason::KktSatisfied);
    }

    #[test]
    fn lasso_satisfies_kkt_and_decreases_monotonically() {
        let mut rng = RngStream::new(62, 0).rng();
        let (n, p) = (40, 12);
        let x = Matrix::from_fn(n, p, |_, _| rng.random::<f64>() - 0.5);
        let y = Vector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
        let obj = make_least_squares(x, y).unwrap();
        let cfg = LassoConfig::new(0.05).with_max_iters(20000);
        let (theta, trace) = ista_lasso(&obj, &cfg).unwrap();
        let g = obj.gradient(&theta.values);
        assert!(
            kkt_residual(&g, &theta.values, cfg.lambda) <= 1e-6,
            "kkt residual too large"
        );
        for pair in trace.records.windows(2) {
            assert!(pair[1].f_value <= pair[0].f_value + 1e-12);
        }
    }

    #[test]
    fn lasso_rejects_indefinite_objectives() {
        let mut rng = RngStream::new(63, 0).rng();
        let (n, p) = (5, 12);
        let x = Matrix::from_fn(n, p, |_, _| rng.random::<f64>() - 0.5);
        let y = Vector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
        let corrected =
            crate::objectives::make_corrected_additive(x, &y, &(Matrix::identity(p, p) * 0.1))
                .unwrap();
        assert!(ista_lasso(&corrected, &LassoConfig::new(0.1)).is_err());
    }

    #[test]
    fn foba_adds_true_coordinates_on_orthonormal_design() {
        let p = 12;
        let mut truth = Vector::zeros(p);
        truth[2] = 1.5;
        truth[5] = -1.0;
        truth[9] = 0.75;
        let obj = make_least_squares(Matrix::identity(p, p), truth.clone()).unwrap();
        let (theta, trace) = foba(&obj, &FobaConfig::new(3)).unwrap();
        assert_eq!(crate::solvers::support_of(&theta.values), vec![2, 5, 9]);
        assert_eq!(trace.iterations, 3);
        assert!((theta.values - truth).norm() < 1e-10);
    }

    #[test]
    fn foba_iteration_count_at_least_target() {
        let mut rng = RngStream::new(64, 0).rng();
        let (n, p, s) = (60, 20, 6);
        let x = Matrix::from_fn(n, p, |_, _| rng.random::<f64>() - 0.5);
        let y = Vector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
        let obj = make_least_squares(x, y).unwrap();
        let (theta, trace) = foba(&obj, &FobaConfig::new(s)).unwrap();
        assert!(trace.iterations >= s);
        assert!(theta.nnz() <= s);
        // Forward steps decrease f strictly; support moves by one per step.
        let mut last_len = 0usize;
        for r in &trace.records {
            let len = match &r.support {
                SupportRecord::Indices(idx) => idx.len(),
                _ => unreachable!(),
            };
            assert_eq!(len.abs_diff(last_len), 1);
            last_len = len;
        }
    }
}
