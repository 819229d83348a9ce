//! Shared helpers for the integration suites: an independent Jacobi
//! eigenvalue oracle, step-size estimation shortcuts, and small statistics
//! utilities.

#![allow(dead_code)]

use hardshrink::numkit::{Matrix, RngStream, Vector};
use hardshrink::objectives::{estimate_rsc_rss, Objective};
use hardshrink::solvers::{step_from_smoothness, StepFamily};

/// Cyclic Jacobi eigenvalue iteration for symmetric matrices. Independent
/// of the library's eigensolver on purpose: it serves as the oracle side
/// of dual-route checks.
pub fn jacobi_eigenvalues(a: &Matrix) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "jacobi oracle needs a square matrix");
    let mut m = a.clone();
    for _ in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() < 1e-13 * (1.0 + m.norm()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[(i, i)]).collect()
}

/// Standard-normal matrix from a dedicated stream.
pub fn gaussian_matrix(stream: RngStream, rows: usize, cols: usize) -> Matrix {
    let mut rng = stream.rng();
    Matrix::from_fn(rows, cols, |_, _| {
        rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)
    })
}

pub fn gaussian_vector(stream: RngStream, len: usize) -> Vector {
    let mut rng = stream.rng();
    Vector::from_fn(len, |_, _| {
        rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)
    })
}

/// Step sizes for the hard-thresholding and partial families from one
/// 40-trial curvature estimate at level `min(2s + s*, p)`.
pub fn estimate_steps<O: Objective + ?Sized>(
    obj: &O,
    s: usize,
    s_star: usize,
    stream: RngStream,
) -> (f64, f64, f64) {
    let level = (2 * s + s_star).min(obj.dim());
    let est = estimate_rsc_rss(obj, level, 40, stream, None).expect("step estimation");
    (
        step_from_smoothness(est.l_hat, StepFamily::IhtFamily).expect("iht step"),
        step_from_smoothness(est.l_hat, StepFamily::Pht).expect("pht step"),
        est.l_hat,
    )
}

pub fn median_f64(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn median_usize(values: &[usize]) -> f64 {
    let as_f: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    median_f64(&as_f)
}

/// Slope of the least-squares line through `(i, ys[i])`.
pub fn ls_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    assert!(ys.len() >= 2);
    let xbar = (n - 1.0) / 2.0;
    let ybar = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        let dx = i as f64 - xbar;
        num += dx * (y - ybar);
        den += dx * dx;
    }
    num / den
}

/// Sup-norm of a vector.
pub fn inf_norm(v: &Vector) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}
