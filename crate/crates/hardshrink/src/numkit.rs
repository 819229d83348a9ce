//! Dense linear-algebra kernels shared by the solvers: magnitude top-k
//! selection, thin SVD, restricted symmetric solves, extreme eigenvalues,
//! and reproducible RNG streams.

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense column vector of f64 entries.
pub type Vector = DVector<f64>;
/// Dense matrix of f64 entries.
pub type Matrix = DMatrix<f64>;

/// Indices of the `k` largest entries of `v` by magnitude, in selection
/// order (magnitude descending, ties broken by the lower index).
pub fn top_k_indices(v: &Vector, k: usize) -> Result<Vec<usize>> {
    if k > v.len() {
        return Err(Error::invalid_argument(format!(
            "top_k_indices: k = {} exceeds vector length {}",
            k,
            v.len()
        )));
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| {
        v[j].abs()
            .total_cmp(&v[i].abs())
            .then_with(|| i.cmp(&j))
    });
    order.truncate(k);
    Ok(order)
}

/// Thin singular value decomposition `M = U diag(σ) Vᵀ`.
///
/// Singular values are non-increasing; `u` has orthonormal columns of shape
/// `rows × k` and `v` of shape `cols × k`, with `k = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub singular_values: Vector,
    pub v: Matrix,
}

impl SvdFactors {
    /// Reconstructs `U diag(σ) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let mut scaled = self.u.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.singular_values[j];
        }
        scaled * self.v.transpose()
    }
}

/// Full thin SVD of a finite dense matrix, by one-sided Jacobi
/// orthogonalization. Chosen for accuracy at the small sizes this library
/// works with; in particular it factors exactly rank-deficient inputs
/// correctly.
pub fn svd(m: &Matrix) -> Result<SvdFactors> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid_argument(
            "svd: input contains non-finite entries",
        ));
    }
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::invalid_argument("svd: empty matrix"));
    }
    if m.nrows() >= m.ncols() {
        jacobi_svd_tall(m)
    } else {
        // mᵀ = V Σ Uᵀ: factor the transpose and swap the factors.
        let f = jacobi_svd_tall(&m.transpose())?;
        Ok(SvdFactors {
            u: f.v,
            singular_values: f.singular_values,
            v: f.u,
        })
    }
}

/// One-sided Jacobi sweeps on the columns of a tall matrix: rotate column
/// pairs until mutually orthogonal, then read off σ and the factors.
fn jacobi_svd_tall(m: &Matrix) -> Result<SvdFactors> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut a = m.clone();
    let mut v = Matrix::identity(cols, cols);
    const PAIR_TOL: f64 = 1e-28; // on cos² of the column angle
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut alpha = 0.0f64;
                let mut beta = 0.0f64;
                let mut gamma = 0.0f64;
                for i in 0..rows {
                    let ap = a[(i, p)];
                    let aq = a[(i, q)];
                    alpha += ap * ap;
                    beta += aq * aq;
                    gamma += ap * aq;
                }
                if gamma == 0.0 || gamma * gamma <= PAIR_TOL * alpha * beta {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let ap = a[(i, p)];
                    let aq = a[(i, q)];
                    a[(i, p)] = c * ap - s * aq;
                    a[(i, q)] = s * ap + c * aq;
                }
                for i in 0..cols {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigmas: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| sigmas[j].total_cmp(&sigmas[i]).then(i.cmp(&j)));
    let top = sigmas[order[0]];

    let mut u = Matrix::zeros(rows, cols);
    let mut v_sorted = Matrix::zeros(cols, cols);
    let mut out_sigma = Vector::zeros(cols);
    let mut placed = 0usize;
    for (slot, &j) in order.iter().enumerate() {
        out_sigma[slot] = sigmas[j];
        v_sorted.column_mut(slot).copy_from(&v.column(j));
        // Columns with negligible mass get a completed basis vector below.
        if sigmas[j] > top * 1e-280 && sigmas[j] > 0.0 {
            let scaled = a.column(j) / sigmas[j];
            u.column_mut(slot).copy_from(&scaled);
            placed = slot + 1;
        }
    }
    sigmas.clear();
    complete_orthonormal_columns(&mut u, placed);
    Ok(SvdFactors {
        u,
        singular_values: out_sigma,
        v: v_sorted,
    })
}

/// Fills columns `from..` with unit vectors orthogonal to all previous
/// columns (deterministic Gram-Schmidt over the standard basis).
fn complete_orthonormal_columns(u: &mut Matrix, from: usize) {
    let (rows, cols) = (u.nrows(), u.ncols());
    let mut next_basis = 0usize;
    for slot in from..cols {
        let mut filled = false;
        while next_basis < rows && !filled {
            let mut cand = Vector::zeros(rows);
            cand[next_basis] = 1.0;
            next_basis += 1;
            for j in 0..slot {
                let proj = u.column(j).dot(&cand);
                for i in 0..rows {
                    cand[i] -= proj * u[(i, j)];
                }
            }
            let norm = cand.norm();
            if norm > 1e-8 {
                cand /= norm;
                u.column_mut(slot).copy_from(&cand);
                filled = true;
            }
        }
        // rows ≥ cols guarantees enough basis candidates.
        debug_assert!(filled, "orthonormal completion ran out of candidates");
    }
}

/// Ridge scale applied when a restricted system is numerically singular.
const RESTRICTED_RIDGE_SCALE: f64 = 1e-12;
/// Relative residual accepted from a restricted solve.
const RESTRICTED_RESIDUAL_TOL: f64 = 1e-10;

/// Solves `A_SS x_S = b_S` for the coordinates in `support`, returning a
/// full-length vector that is exactly zero off the support.
///
/// When the restricted block is numerically singular a small ridge
/// (`1e-12 · trace(A_SS)/|S|`) is added before giving up.
pub fn solve_restricted(a: &Matrix, b: &Vector, support: &[usize]) -> Result<Vector> {
    let p = a.nrows();
    if a.ncols() != p || b.len() != p {
        return Err(Error::invalid_argument(format!(
            "solve_restricted: dimension mismatch ({}x{} vs rhs {})",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if let Some(&bad) = support.iter().find(|&&i| i >= p) {
        return Err(Error::invalid_argument(format!(
            "solve_restricted: support index {bad} out of range for dimension {p}"
        )));
    }
    let mut idx: Vec<usize> = support.to_vec();
    idx.sort_unstable();
    idx.dedup();
    let k = idx.len();
    let mut x = Vector::zeros(p);
    if k == 0 {
        return Ok(x);
    }

    let mut a_ss = Matrix::zeros(k, k);
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            a_ss[(r, c)] = a[(i, j)];
        }
    }
    // Exact symmetry keeps the eigensolver-based diagnostics consistent.
    for r in 0..k {
        for c in (r + 1)..k {
            let s = 0.5 * (a_ss[(r, c)] + a_ss[(c, r)]);
            a_ss[(r, c)] = s;
            a_ss[(c, r)] = s;
        }
    }
    let b_s = Vector::from_iterator(k, idx.iter().map(|&i| b[i]));
    let x_s = solve_with_ridge(&a_ss, &b_s)?;
    for (r, &i) in idx.iter().enumerate() {
        x[i] = x_s[r];
    }
    Ok(x)
}

/// Restricted-block solver shared with the quadratic objectives.
pub(crate) fn solve_with_ridge(a_ss: &Matrix, b_s: &Vector) -> Result<Vector> {
    let k = a_ss.nrows();
    let b_norm = b_s.norm();
    let residual_of = |x: &Vector| (a_ss * x - b_s).norm();
    let tol = RESTRICTED_RESIDUAL_TOL * b_norm.max(f64::MIN_POSITIVE);

    let lu = a_ss.clone().lu();
    if let Some(mut x) = lu.solve(b_s) {
        if x.iter().all(|v| v.is_finite()) {
            // One step of iterative refinement tightens ill-conditioned solves.
            if residual_of(&x) > tol {
                if let Some(dx) = lu.solve(&(b_s - a_ss * &x)) {
                    if dx.iter().all(|v| v.is_finite()) {
                        x += dx;
                    }
                }
            }
            if residual_of(&x) <= tol {
                return Ok(x);
            }
        }
    }

    // Ridge fallback: handles numerically singular blocks whose right-hand
    // side is still in range; inconsistent systems are reported as errors.
    let trace: f64 = (0..k).map(|i| a_ss[(i, i)]).sum();
    let ridge = RESTRICTED_RIDGE_SCALE * (trace.abs() / k as f64).max(1.0);
    let mut regularized = a_ss.clone();
    for i in 0..k {
        regularized[(i, i)] += ridge;
    }
    let lu = regularized.clone().lu();
    let cond = lu_condition_estimate(&lu);
    match lu.solve(b_s) {
        Some(x) if x.iter().all(|v| v.is_finite())
            && residual_of(&x) <= 1e-8 * b_norm.max(1.0) =>
        {
            Ok(x)
        }
        _ => Err(Error::numerical(
            "restricted system singular beyond ridge floor",
            Some(cond),
        )),
    }
}

fn lu_condition_estimate(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let u = lu.u();
    let k = u.nrows().min(u.ncols());
    let mut max_d = 0.0f64;
    let mut min_d = f64::INFINITY;
    for i in 0..k {
        let d = u[(i, i)].abs();
        max_d = max_d.max(d);
        min_d = min_d.min(d);
    }
    if min_d == 0.0 {
        f64::INFINITY
    } else {
        max_d / min_d
    }
}

/// Relative asymmetry tolerated before a matrix is rejected as non-symmetric.
const SYMMETRY_TOL: f64 = 1e-8;

/// Extreme eigenvalues `(λ_min, λ_max)` of a symmetric matrix.
pub fn sym_eig_extremes(a: &Matrix) -> Result<(f64, f64)> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid_argument(format!(
            "sym_eig_extremes: matrix is {}x{}, not square",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid_argument(
            "sym_eig_extremes: input contains non-finite entries",
        ));
    }
    let scale = a.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1.0);
    let mut asym = 0.0f64;
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::invalid_argument(format!(
            "sym_eig_extremes: asymmetry {asym:.3e} exceeds tolerance"
        )));
    }
    if a.nrows() == 0 {
        return Err(Error::invalid_argument("sym_eig_extremes: empty matrix"));
    }
    let sym = 0.5 * (a + a.transpose());
    let eig = sym.symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &ev in eig.eigenvalues.iter() {
        lo = lo.min(ev);
        hi = hi.max(ev);
    }
    Ok((lo, hi))
}

/// A reproducible random stream keyed by `(seed, stream)`.
///
/// Streams are ChaCha12 counters: identical keys replay identical draws on
/// every platform, and distinct stream ids are statistically independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    /// Instantiates the generator positioned at the start of the stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Derives a child stream; children with distinct indices are
    /// independent of each other and of the parent.
    pub fn substream(&self, index: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(index.wrapping_add(1))),
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
