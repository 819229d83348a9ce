//! The three projection operators the solver family is built on: vector
//! hard thresholding, partial hard thresholding onto a support-constrained
//! sparse set, and best rank-r matrix approximation.

use crate::error::{Error, Result};
use crate::numkit::{self, Matrix, Vector};

/// Result of projecting a vector onto a sparsity-constrained set.
///
/// `values` has the same length as the input, entries off `support` are
/// exactly zero, and retained entries equal the corresponding input entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseProjection {
    pub values: Vector,
    /// Indices of the nonzero retained entries, ascending.
    pub support: Vec<usize>,
    /// Sparsity level the projection was asked for (`|support| ≤ s`).
    pub s: usize,
}

fn gather(z: &Vector, selected: &[usize], s: usize) -> SparseProjection {
    let mut values = Vector::zeros(z.len());
    let mut support: Vec<usize> = Vec::with_capacity(selected.len());
    for &i in selected {
        if z[i] != 0.0 {
            values[i] = z[i];
            support.push(i);
        }
    }
    support.sort_unstable();
    SparseProjection { values, support, s }
}

/// Keeps the `s` largest-magnitude entries of `z` and zeroes the rest;
/// the Euclidean projection onto s-sparse vectors. Ties break toward the
/// lower index. If `z` has at most `s` nonzeros it is returned unchanged
/// with its actual support.
pub fn hard_threshold(z: &Vector, s: usize) -> Result<SparseProjection> {
    let selected = numkit::top_k_indices(z, s)?;
    Ok(gather(z, &selected, s))
}

/// Parameters of the partial hard-thresholding operator: target sparsity
/// `s`, how many entries may enter from outside the current support
/// (`level`, the paper-family's ℓ), and the current support itself.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialProjectionSpec {
    pub s: usize,
    pub level: usize,
    pub support: Vec<usize>,
}

impl PartialProjectionSpec {
    pub fn new(s: usize, level: usize, support: Vec<usize>) -> Result<Self> {
        if level > s {
            return Err(Error::invalid_argument(format!(
                "partial projection: level {level} exceeds sparsity {s}"
            )));
        }
        if support.len() > s {
            return Err(Error::invalid_argument(format!(
                "partial projection: current support size {} exceeds sparsity {s}",
                support.len()
            )));
        }
        Ok(PartialProjectionSpec { s, level, support })
    }
}

/// Projects `z` onto the set of s-sparse vectors whose support contains at
/// most `level` indices outside `spec.support`.
///
/// Greedy selection in magnitude order (ties toward the lower index) is the
/// exact Euclidean projection here: an index is admitted while the total
/// budget `s` is open, and off-support indices additionally consume one of
/// the `level` slots.
pub fn partial_hard_threshold(z: &Vector, spec: &PartialProjectionSpec) -> Result<SparseProjection> {
    if spec.level > spec.s || spec.support.len() > spec.s {
        return Err(Error::invalid_argument(
            "partial projection: spec violates level ≤ s and |support| ≤ s",
        ));
    }
    if z.len() < spec.s {
        return Err(Error::invalid_argument(format!(
            "partial projection: sparsity {} exceeds vector length {}",
            spec.s,
            z.len()
        )));
    }
    if let Some(&bad) = spec.support.iter().find(|&&i| i >= z.len()) {
        return Err(Error::invalid_argument(format!(
            "partial projection: support index {bad} out of range"
        )));
    }
    let mut in_support = vec![false; z.len()];
    for &i in &spec.support {
        in_support[i] = true;
    }
    let order = numkit::top_k_indices(z, z.len())?;
    let mut selected = Vec::with_capacity(spec.s);
    let mut fresh = 0usize;
    for i in order {
        if selected.len() == spec.s {
            break;
        }
        if in_support[i] {
            selected.push(i);
        } else if fresh < spec.level {
            selected.push(i);
            fresh += 1;
        }
    }
    Ok(gather(z, &selected, spec.s))
}

/// Best rank-`r` approximation of `w` in Frobenius norm, via truncated SVD.
/// Singular-value ties at the cut keep the first `r` in returned order.
pub fn rank_project(w: &Matrix, r: usize) -> Result<Matrix> {
    let k = w.nrows().min(w.ncols());
    if r > k {
        return Err(Error::invalid_argument(format!(
            "rank_project: rank {r} exceeds min dimension {k}"
        )));
    }
    if r == k {
        return Ok(w.clone());
    }
    let factors = numkit::svd(w)?;
    let u_r = factors.u.columns(0, r).into_owned();
    let v_r = factors.v.columns(0, r).into_owned();
    let mut scaled = u_r;
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= factors.singular_values[j];
    }
    Ok(scaled * v_r.transpose())
}
