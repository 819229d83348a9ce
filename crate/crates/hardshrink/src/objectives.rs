//! Differentiable objectives over sparse parameter vectors: the abstract
//! contract the solvers consume, quadratic objectives for clean and
//! corrupted regression data, restricted-curvature diagnostics, and the
//! statistical error-bound calculator.

use crate::error::{Error, Result};
use crate::numkit::{self, Matrix, RngStream, Vector};

/// Observed-entry mask for missing-data designs (1 = observed).
pub type Mask = nalgebra::DMatrix<u8>;

/// A differentiable function of a dense parameter vector.
///
/// `restricted_minimize` must return a vector supported inside `support`
/// whose restricted gradient is (numerically) zero; quadratic objectives
/// solve this exactly, other implementations fall back to projected
/// gradient descent on the fixed support.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, theta: &Vector) -> f64;
    fn gradient(&self, theta: &Vector) -> Vector;

    /// Value and gradient sharing intermediate products where possible.
    fn value_and_gradient(&self, theta: &Vector) -> (f64, Vector) {
        (self.value(theta), self.gradient(theta))
    }

    /// Principal submatrix of the curvature (Hessian) on `support`, when
    /// the objective can provide it exactly.
    fn hessian_block(&self, _support: &[usize]) -> Option<Matrix> {
        None
    }

    /// Minimizes the objective over vectors supported inside `support`.
    fn restricted_minimize(&self, support: &[usize]) -> Result<Vector> {
        pgd_restricted_minimize(&|t| self.value_and_gradient(t), self.dim(), support)
    }
}

/// Restricted-gradient tolerance for fully-corrective steps.
pub const RESTRICTED_GRAD_TOL: f64 = 1e-8;

/// Projected gradient descent on a fixed support, the generic
/// fully-corrective fallback: runs until the restricted gradient norm is
/// below `1e-8 · (1 + ‖x‖₂)`, capped at `10·p` iterations.
fn pgd_restricted_minimize(
    f: &dyn Fn(&Vector) -> (f64, Vector),
    dim: usize,
    support: &[usize],
) -> Result<Vector> {
    let mut x = Vector::zeros(dim);
    if support.is_empty() {
        return Ok(x);
    }
    if let Some(&bad) = support.iter().find(|&&i| i >= dim) {
        return Err(Error::invalid_argument(format!(
            "restricted_minimize: index {bad} out of range for dimension {dim}"
        )));
    }
    let mut step = 1.0f64;
    let (mut fx, mut g) = f(&x);
    for _ in 0..(10 * dim.max(1)) {
        let gs_norm: f64 = support.iter().map(|&i| g[i] * g[i]).sum::<f64>().sqrt();
        if gs_norm <= RESTRICTED_GRAD_TOL * (1.0 + x.norm()) {
            return Ok(x);
        }
        // Backtracking Armijo step along the restricted negative gradient.
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand = x.clone();
            for &i in support {
                cand[i] -= step * g[i];
            }
            let (fc, gc) = f(&cand);
            if fc.is_finite() && fc <= fx - 1e-4 * step * gs_norm * gs_norm {
                x = cand;
                fx = fc;
                g = gc;
                step *= 2.0;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(x)
}

/// How the quadratic term of a [`QuadraticObjective`] is stored.
///
/// The factored `Gram` layout keeps gradients at `O(np)` for regression
/// objectives instead of materializing the `p×p` matrix.
#[derive(Debug, Clone)]
enum QuadForm {
    Dense {
        a: Matrix,
    },
    /// `A = scale·XᵀX + diag_shift·I + Diag(diag_extra)`.
    Gram {
        x: Matrix,
        xt: Matrix,
        scale: f64,
        diag_shift: f64,
        diag_extra: Option<Vector>,
    },
}

/// `f(θ) = ½ θᵀAθ − bᵀθ + c` with symmetric (not necessarily positive
/// semidefinite) `A`.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    form: QuadForm,
    b: Vector,
    c: f64,
    possibly_indefinite: bool,
}

impl QuadraticObjective {
    /// Builds the objective from an explicit symmetric matrix.
    pub fn from_dense(a: Matrix, b: Vector, c: f64, possibly_indefinite: bool) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() != b.len() {
            return Err(Error::invalid_argument(format!(
                "quadratic objective: A is {}x{}, b has length {}",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        Ok(QuadraticObjective {
            form: QuadForm::Dense { a },
            b,
            c,
            possibly_indefinite,
        })
    }

    fn from_gram(
        x: Matrix,
        scale: f64,
        diag_shift: f64,
        diag_extra: Option<Vector>,
        b: Vector,
        c: f64,
        possibly_indefinite: bool,
    ) -> Self {
        let xt = x.transpose();
        QuadraticObjective {
            form: QuadForm::Gram {
                x,
                xt,
                scale,
                diag_shift,
                diag_extra,
            },
            b,
            c,
            possibly_indefinite,
        }
    }

    pub fn linear_term(&self) -> &Vector {
        &self.b
    }

    pub fn constant_term(&self) -> f64 {
        self.c
    }

    /// True for corrected objectives whose quadratic term may have negative
    /// eigenvalues (feature noise or missing data with `n < p`).
    pub fn possibly_indefinite(&self) -> bool {
        self.possibly_indefinite
    }

    /// Materializes the full quadratic matrix. Costs `O(p²n)` for factored
    /// forms; intended for diagnostics and small problems.
    pub fn hessian(&self) -> Matrix {
        match &self.form {
            QuadForm::Dense { a } => a.clone(),
            QuadForm::Gram {
                x,
                xt,
                scale,
                diag_shift,
                diag_extra,
            } => {
                let mut a = xt * x;
                a *= *scale;
                let p = a.nrows();
                for i in 0..p {
                    a[(i, i)] += diag_shift;
                    if let Some(extra) = diag_extra {
                        a[(i, i)] += extra[i];
                    }
                }
                // Clean up floating-point asymmetry from the product.
                for i in 0..p {
                    for j in (i + 1)..p {
                        let s = 0.5 * (a[(i, j)] + a[(j, i)]);
                        a[(i, j)] = s;
                        a[(j, i)] = s;
                    }
                }
                a
            }
        }
    }

    /// `A·v` without materializing `A`.
    pub fn hessian_vec(&self, v: &Vector) -> Vector {
        match &self.form {
            QuadForm::Dense { a } => a * v,
            QuadForm::Gram {
                x,
                xt,
                scale,
                diag_shift,
                diag_extra,
            } => {
                let mut out = xt * (x * v);
                out *= *scale;
                if *diag_shift != 0.0 {
                    out.axpy(*diag_shift, v, 1.0);
                }
                if let Some(extra) = diag_extra {
                    for i in 0..out.len() {
                        out[i] += extra[i] * v[i];
                    }
                }
                out
            }
        }
    }

    /// Rayleigh-quotient estimate of the largest-magnitude eigenvalue of
    /// `A`, by power iteration from a fixed seed (deterministic).
    pub fn estimate_lambda_max(&self) -> f64 {
        let p = self.dim();
        let mut rng = RngStream::new(0x007A_11EE, 0).rng();
        let mut v = Vector::from_fn(p, |_, _| rand::Rng::random::<f64>(&mut rng) - 0.5);
        let n = v.norm();
        if n == 0.0 {
            return 0.0;
        }
        v /= n;
        let mut lambda = 0.0f64;
        for _ in 0..500 {
            let w = self.hessian_vec(&v);
            let next = v.dot(&w);
            let wn = w.norm();
            if wn == 0.0 {
                return 0.0;
            }
            let done = (next - lambda).abs() <= 1e-12 * next.abs().max(1.0);
            lambda = next;
            v = w / wn;
            if done {
                break;
            }
        }
        lambda
    }
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, theta: &Vector) -> f64 {
        self.value_and_gradient(theta).0
    }

    fn gradient(&self, theta: &Vector) -> Vector {
        self.hessian_vec(theta) - &self.b
    }

    fn value_and_gradient(&self, theta: &Vector) -> (f64, Vector) {
        let a_theta = self.hessian_vec(theta);
        let value = 0.5 * theta.dot(&a_theta) - self.b.dot(theta) + self.c;
        (value, a_theta - &self.b)
    }

    fn hessian_block(&self, support: &[usize]) -> Option<Matrix> {
        let k = support.len();
        let mut block = match &self.form {
            QuadForm::Dense { a } => {
                let mut block = Matrix::zeros(k, k);
                for (r, &i) in support.iter().enumerate() {
                    for (c, &j) in support.iter().enumerate() {
                        block[(r, c)] = a[(i, j)];
                    }
                }
                block
            }
            QuadForm::Gram { x, scale, .. } => {
                let n = x.nrows();
                let mut x_s = Matrix::zeros(n, k);
                for (c, &j) in support.iter().enumerate() {
                    x_s.column_mut(c).copy_from(&x.column(j));
                }
                let mut block = x_s.transpose() * x_s;
                block *= *scale;
                block
            }
        };
        if let QuadForm::Gram {
            diag_shift,
            diag_extra,
            ..
        } = &self.form
        {
            for (r, &i) in support.iter().enumerate() {
                block[(r, r)] += diag_shift;
                if let Some(extra) = diag_extra {
                    block[(r, r)] += extra[i];
                }
            }
        }
        for r in 0..k {
            for c in (r + 1)..k {
                let s = 0.5 * (block[(r, c)] + block[(c, r)]);
                block[(r, c)] = s;
                block[(c, r)] = s;
            }
        }
        Some(block)
    }

    fn restricted_minimize(&self, support: &[usize]) -> Result<Vector> {
        let p = self.dim();
        if let Some(&bad) = support.iter().find(|&&i| i >= p) {
            return Err(Error::invalid_argument(format!(
                "restricted_minimize: index {bad} out of range for dimension {p}"
            )));
        }
        let mut idx: Vec<usize> = support.to_vec();
        idx.sort_unstable();
        idx.dedup();
        let mut out = Vector::zeros(p);
        if idx.is_empty() {
            return Ok(out);
        }
        let block = self
            .hessian_block(&idx)
            .expect("quadratic objectives always expose curvature blocks");
        let b_s = Vector::from_iterator(idx.len(), idx.iter().map(|&i| self.b[i]));
        let x_s = numkit::solve_with_ridge(&block, &b_s)?;
        for (r, &i) in idx.iter().enumerate() {
            out[i] = x_s[r];
        }
        Ok(out)
    }
}

/// Least-squares objective `f(θ) = (1/n)·‖y − Xθ‖₂²` in quadratic form
/// (`A = (2/n)XᵀX`, `b = (2/n)Xᵀy`, `c = ‖y‖²/n`).
pub fn make_least_squares(x: Matrix, y: Vector) -> Result<QuadraticObjective> {
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::invalid_argument(format!(
            "least squares: X has {} rows but y has length {}",
            n,
            y.len()
        )));
    }
    if n == 0 {
        return Err(Error::invalid_argument("least squares: empty sample"));
    }
    let scale = 2.0 / n as f64;
    let b = x.transpose() * &y * scale;
    let c = y.norm_squared() / n as f64;
    Ok(QuadraticObjective::from_gram(
        x, scale, 0.0, None, b, c, false,
    ))
}

/// Corrected quadratic objective for additive feature noise
/// (`f(θ) = ½θᵀΓ̂θ − γ̂ᵀθ`, `Γ̂ = X̃ᵀX̃/n − Σ_W`, `γ̂ = X̃ᵀy/n`).
/// The result is flagged possibly non-convex: `Γ̂` is indefinite whenever
/// `n < p` and `Σ_W ≻ 0`.
pub fn make_corrected_additive(
    x_noisy: Matrix,
    y: &Vector,
    sigma_w: &Matrix,
) -> Result<QuadraticObjective> {
    let (n, p) = (x_noisy.nrows(), x_noisy.ncols());
    if n != y.len() {
        return Err(Error::invalid_argument(format!(
            "corrected additive: X has {n} rows but y has length {}",
            y.len()
        )));
    }
    if sigma_w.nrows() != p || sigma_w.ncols() != p {
        return Err(Error::invalid_argument(format!(
            "corrected additive: Σ_W is {}x{}, expected {p}x{p}",
            sigma_w.nrows(),
            sigma_w.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::invalid_argument("corrected additive: empty sample"));
    }
    let inv_n = 1.0 / n as f64;
    let b = x_noisy.transpose() * y * inv_n;

    // Scalar noise covariance keeps the factored layout; general Σ_W is
    // materialized.
    if let Some(w) = scalar_multiple_of_identity(sigma_w) {
        return Ok(QuadraticObjective::from_gram(
            x_noisy, inv_n, -w, None, b, 0.0, true,
        ));
    }
    let mut a = x_noisy.transpose() * &x_noisy;
    a *= inv_n;
    a -= sigma_w;
    QuadraticObjective::from_dense(a, b, 0.0, true)
}

fn scalar_multiple_of_identity(m: &Matrix) -> Option<f64> {
    let p = m.nrows();
    if p == 0 {
        return Some(0.0);
    }
    let w = m[(0, 0)];
    for i in 0..p {
        for j in 0..p {
            let want = if i == j { w } else { 0.0 };
            if m[(i, j)] != want {
                return None;
            }
        }
    }
    Some(w)
}

/// Corrected quadratic objective for Bernoulli missing data observed with
/// probability `1 − ν`: off-diagonal second moments are rescaled by
/// `1/(1−ν)²`, diagonals by `1/(1−ν)`, and `γ̂ = X̃ᵀy/(n(1−ν))`.
pub fn make_corrected_missing(
    x_obs: Matrix,
    mask: &Mask,
    y: &Vector,
    nu: f64,
) -> Result<QuadraticObjective> {
    let (n, p) = (x_obs.nrows(), x_obs.ncols());
    if !(0.0..1.0).contains(&nu) {
        return Err(Error::invalid_argument(format!(
            "corrected missing: ν = {nu} outside [0, 1)"
        )));
    }
    if mask.nrows() != n || mask.ncols() != p || y.len() != n {
        return Err(Error::invalid_argument(
            "corrected missing: dimension mismatch between X, mask and y",
        ));
    }
    if n == 0 {
        return Err(Error::invalid_argument("corrected missing: empty sample"));
    }
    let mut x_filled = x_obs;
    for j in 0..p {
        for i in 0..n {
            if mask[(i, j)] == 0 {
                x_filled[(i, j)] = 0.0;
            }
        }
    }
    let observed = 1.0 - nu;
    let c1 = 1.0 / observed;
    let c2 = 1.0 / (observed * observed);
    let inv_n = 1.0 / n as f64;
    let b = x_filled.transpose() * y * (inv_n * c1);
    let diag_extra =
        Vector::from_fn(p, |j, _| (c1 - c2) * x_filled.column(j).norm_squared() * inv_n);
    Ok(QuadraticObjective::from_gram(
        x_filled,
        c2 * inv_n,
        0.0,
        Some(diag_extra),
        b,
        0.0,
        true,
    ))
}

/// Empirical restricted strong convexity/smoothness constants at sparsity
/// level `k`.
///
/// `alpha_hat` upper-bounds the true restricted convexity constant and
/// `l_hat` lower-bounds the smoothness constant, since sampling supports
/// only shrinks the feasible set. Exhaustive enumeration is used when the
/// number of supports is small.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RscRssEstimate {
    pub k: usize,
    pub alpha_hat: f64,
    pub l_hat: f64,
    pub trials: usize,
    /// Set when a sampled restricted block had a non-positive minimum
    /// eigenvalue (nonconvex corrected losses).
    pub alpha_nonpositive: bool,
}

impl RscRssEstimate {
    /// Restricted condition number `L̂/α̂`; infinite when `α̂ ≤ 0`.
    pub fn condition_number(&self) -> f64 {
        if self.alpha_hat > 0.0 {
            self.l_hat / self.alpha_hat
        } else {
            f64::INFINITY
        }
    }
}

/// Support counts below this bound are enumerated exhaustively.
const EXHAUSTIVE_SUPPORT_LIMIT: u128 = 5000;

/// Estimates restricted curvature constants of `obj` at sparsity level `k`
/// by extreme eigenvalues of sampled `k×k` curvature blocks.
///
/// Sampling draws one random permutation per trial and uses its length-`k`
/// prefix, so estimates at increasing `k` under the same stream come from
/// nested supports (monotone in `k`). `anchor`, when given, contributes one
/// deterministic support built from it.
pub fn estimate_rsc_rss<O: Objective + ?Sized>(
    obj: &O,
    k: usize,
    trials: usize,
    stream: RngStream,
    anchor: Option<&[usize]>,
) -> Result<RscRssEstimate> {
    let p = obj.dim();
    if k == 0 || k > p {
        return Err(Error::invalid_argument(format!(
            "estimate_rsc_rss: level {k} outside 1..={p}"
        )));
    }
    if trials == 0 {
        return Err(Error::invalid_argument(
            "estimate_rsc_rss: trials must be ≥ 1",
        ));
    }

    let mut alpha = f64::INFINITY;
    let mut l = f64::NEG_INFINITY;
    let mut used = 0usize;
    let mut visit = |support: &[usize]| -> Result<()> {
        let block = obj.hessian_block(support).ok_or_else(|| {
            Error::invalid_argument("estimate_rsc_rss: objective does not expose curvature blocks")
        })?;
        let (lo, hi) = numkit::sym_eig_extremes(&block)?;
        alpha = alpha.min(lo);
        l = l.max(hi);
        used += 1;
        Ok(())
    };

    if binomial_at_most(p, k, EXHAUSTIVE_SUPPORT_LIMIT) {
        let mut support: Vec<usize> = (0..k).collect();
        loop {
            visit(&support)?;
            if !next_combination(&mut support, p) {
                break;
            }
        }
    } else {
        if let Some(anchor) = anchor {
            let support = anchored_support(anchor, k, p)?;
            visit(&support)?;
        }
        let mut scratch: Vec<usize> = (0..p).collect();
        for t in 0..trials {
            let mut rng = stream.substream(t as u64).rng();
            // Partial Fisher-Yates: the first k entries of a fresh
            // permutation, with identical prefixes across different k.
            for (i, slot) in scratch.iter_mut().enumerate() {
                *slot = i;
            }
            for i in 0..k {
                let j = i + rand::Rng::random_range(&mut rng, 0..(p - i));
                scratch.swap(i, j);
            }
            let mut support = scratch[..k].to_vec();
            support.sort_unstable();
            visit(&support)?;
        }
    }

    Ok(RscRssEstimate {
        k,
        alpha_hat: alpha,
        l_hat: l,
        trials: used,
        alpha_nonpositive: alpha <= 0.0,
    })
}

/// Advances `support` to the lexicographically next k-combination of
/// `0..p`; false once the last combination has been visited.
fn next_combination(support: &mut [usize], p: usize) -> bool {
    let k = support.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if support[i] != i + p - k {
            support[i] += 1;
            for j in (i + 1)..k {
                support[j] = support[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn anchored_support(anchor: &[usize], k: usize, p: usize) -> Result<Vec<usize>> {
    if let Some(&bad) = anchor.iter().find(|&&i| i >= p) {
        return Err(Error::invalid_argument(format!(
            "estimate_rsc_rss: anchor index {bad} out of range"
        )));
    }
    let mut support: Vec<usize> = anchor.to_vec();
    support.sort_unstable();
    support.dedup();
    support.truncate(k);
    let mut member = vec![false; p];
    for &i in &support {
        member[i] = true;
    }
    let mut next = 0usize;
    while support.len() < k {
        if !member[next] {
            support.push(next);
            member[next] = true;
        }
        next += 1;
    }
    support.sort_unstable();
    Ok(support)
}

fn binomial_at_most(p: usize, k: usize, limit: u128) -> bool {
    let k = k.min(p - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((p - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return false,
        };
        if acc > limit {
            return false;
        }
    }
    acc <= limit
}

/// Parameter-error bound for a sparse estimate in terms of the gradient
/// sup-norm at the target, the restricted convexity constant, and the
/// optimization suboptimality:
/// `2·√(s+s*)·‖∇L(θ̄)‖∞/α + √(2ε/α)`.
pub fn sparse_recovery_error_bound(
    grad_inf_norm: f64,
    alpha: f64,
    s: usize,
    s_star: usize,
    epsilon: f64,
) -> Result<f64> {
    if alpha <= 0.0 {
        return Err(Error::invalid_argument(format!(
            "error bound: restricted convexity constant α = {alpha} is not positive"
        )));
    }
    if epsilon < 0.0 {
        return Err(Error::invalid_argument(format!(
            "error bound: suboptimality ε = {epsilon} is negative"
        )));
    }
    let level = (s + s_star) as f64;
    Ok(2.0 * level.sqrt() * grad_inf_norm / alpha + (2.0 * epsilon / alpha).sqrt())
}

/// A differentiable function of a dense matrix parameter.
pub trait MatrixObjective {
    fn shape(&self) -> (usize, usize);
    fn value(&self, w: &Matrix) -> f64;
    fn gradient(&self, w: &Matrix) -> Matrix;

    fn value_and_gradient(&self, w: &Matrix) -> (f64, Matrix) {
        (self.value(w), self.gradient(w))
    }

    /// Upper bound on the curvature along any direction, for step-size
    /// selection. `None` when the objective cannot provide one.
    fn curvature_upper_bound(&self) -> Option<f64> {
        None
    }
}

/// Matrix-sensing least squares `f(W) = (1/n)·Σᵢ (⟨Xᵢ, W⟩_F − yᵢ)²`, stored
/// with vectorized measurement matrices for fast products.
#[derive(Debug, Clone)]
pub struct MatrixLeastSquares {
    /// `n × (p₁·p₂)`; row i is vec(Xᵢ) in column-major order.
    sensing: Matrix,
    sensing_t: Matrix,
    y: Vector,
    rows: usize,
    cols: usize,
}

/// Builds the matrix least-squares objective from sensing matrices `xs`
/// and responses `y`.
pub fn make_matrix_least_squares(xs: &[Matrix], y: Vector) -> Result<MatrixLeastSquares> {
    if xs.is_empty() {
        return Err(Error::invalid_argument(
            "matrix least squares: empty sample",
        ));
    }
    if xs.len() != y.len() {
        return Err(Error::invalid_argument(format!(
            "matrix least squares: {} sensing matrices but {} responses",
            xs.len(),
            y.len()
        )));
    }
    let (rows, cols) = (xs[0].nrows(), xs[0].ncols());
    if xs.iter().any(|x| x.nrows() != rows || x.ncols() != cols) {
        return Err(Error::invalid_argument(
            "matrix least squares: sensing matrices have mismatched shapes",
        ));
    }
    let q = rows * cols;
    let mut sensing = Matrix::zeros(xs.len(), q);
    for (i, x) in xs.iter().enumerate() {
        for (j, &v) in x.as_slice().iter().enumerate() {
            sensing[(i, j)] = v;
        }
    }
    let sensing_t = sensing.transpose();
    Ok(MatrixLeastSquares {
        sensing,
        sensing_t,
        y,
        rows,
        cols,
    })
}

impl MatrixLeastSquares {
    fn residual(&self, w: &Matrix) -> Vector {
        let wv = Vector::from_column_slice(w.as_slice());
        &self.sensing * wv - &self.y
    }
}

impl MatrixObjective for MatrixLeastSquares {
    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn value(&self, w: &Matrix) -> f64 {
        self.residual(w).norm_squared() / self.y.len() as f64
    }

    fn gradient(&self, w: &Matrix) -> Matrix {
        self.value_and_gradient(w).1
    }

    fn value_and_gradient(&self, w: &Matrix) -> (f64, Matrix) {
        let n = self.y.len() as f64;
        let r = self.residual(w);
        let value = r.norm_squared() / n;
        let g_flat = &self.sensing_t * r * (2.0 / n);
        let grad = Matrix::from_column_slice(self.rows, self.cols, g_flat.as_slice());
        (value, grad)
    }

    fn curvature_upper_bound(&self) -> Option<f64> {
        // Power iteration on (2/n)·AᵀA over vectorized matrices, slightly
        // inflated so the step size errs small.
        let n = self.y.len() as f64;
        let q = self.rows * self.cols;
        let mut rng = RngStream::new(0x007A_11EE, 1).rng();
        let mut v = Vector::from_fn(q, |_, _| rand::Rng::random::<f64>(&mut rng) - 0.5);
        let norm = v.norm();
        if norm == 0.0 {
            return Some(0.0);
        }
        v /= norm;
        let mut lambda = 0.0f64;
        for _ in 0..300 {
            let w = &self.sensing_t * (&self.sensing * &v) * (2.0 / n);
            let next = v.dot(&w);
            let wn = w.norm();
            if wn == 0.0 {
                return Some(0.0);
            }
            let done = (next - lambda).abs() <= 1e-11 * next.abs().max(1.0);
            lambda = next;
            v = w / wn;
            if done {
                break;
            }
        }
        Some(lambda * 1.02)
    }
}
