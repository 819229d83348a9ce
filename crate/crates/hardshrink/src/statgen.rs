//! Synthetic problem-instance generation: sparse ±1 signals, Gaussian
//! designs under structured covariances (identity, paired ε-correlation
//! blocks, planted heavy correlations straddling the signal support),
//! label noise, feature corruption (additive noise, missing entries),
//! recovery metrics, and on-disk instance serialization.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{self, Matrix, RngStream, Vector};
use crate::objectives::{
    make_corrected_additive, make_corrected_missing, make_least_squares, Mask, QuadraticObjective,
};

/// Covariance families available to the generators. All produce symmetric
/// positive-definite matrices with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    Identity,
    /// Disjoint 2×2 blocks `[[1, 1−ε], [1−ε, 1]]` across the whole
    /// dimension.
    TwoBlock { epsilon: f64 },
    /// `s*/2` signal-support coordinates paired with `s*/2` off-support
    /// coordinates, each pair correlated at `rho`.
    Planted { s_star: usize, rho: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub kind: CovarianceKind,
    pub p: usize,
}

impl CovarianceSpec {
    pub fn identity(p: usize) -> Self {
        CovarianceSpec {
            kind: CovarianceKind::Identity,
            p,
        }
    }

    pub fn two_block(p: usize, epsilon: f64) -> Self {
        CovarianceSpec {
            kind: CovarianceKind::TwoBlock { epsilon },
            p,
        }
    }

    pub fn planted(p: usize, s_star: usize, rho: f64) -> Self {
        CovarianceSpec {
            kind: CovarianceKind::Planted { s_star, rho },
            p,
        }
    }
}

/// Pairwise correlation that gives a 2×2 block condition number of
/// `kappa`: solves `(1+ρ)/(1−ρ) = κ`.
pub fn rho_for_condition_target(kappa: f64) -> f64 {
    (kappa - 1.0) / (kappa + 1.0)
}

/// Exact description of a generated covariance: identity plus a set of
/// correlated coordinate pairs. Serializable, so instances on disk can
/// rebuild their covariance bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovStructure {
    pub rho: f64,
    /// Correlated coordinate pairs; empty for identity covariance.
    pub pairs: Vec<(usize, usize)>,
}

impl CovStructure {
    pub fn identity() -> Self {
        CovStructure {
            rho: 0.0,
            pairs: Vec::new(),
        }
    }

    pub fn to_matrix(&self, p: usize) -> Matrix {
        let mut sigma = Matrix::identity(p, p);
        for &(a, b) in &self.pairs {
            sigma[(a, b)] = self.rho;
            sigma[(b, a)] = self.rho;
        }
        sigma
    }

    /// Samples one row of `N(0, Σ)` from iid standard normals using the
    /// closed-form Cholesky factor of the pair structure.
    fn sample_row(&self, rng: &mut ChaCha12Rng, row: &mut [f64]) {
        for slot in row.iter_mut() {
            *slot = StandardNormal.sample(rng);
        }
        let mix = (1.0 - self.rho * self.rho).sqrt();
        for &(a, b) in &self.pairs {
            row[b] = self.rho * row[a] + mix * row[b];
        }
    }
}

fn build_structure(
    spec: &CovarianceSpec,
    support: Option<&[usize]>,
    rng: &mut ChaCha12Rng,
) -> Result<CovStructure> {
    match &spec.kind {
        CovarianceKind::Identity => Ok(CovStructure::identity()),
        CovarianceKind::TwoBlock { epsilon } => {
            if !spec.p.is_multiple_of(2) {
                return Err(Error::invalid_argument(format!(
                    "two-block covariance needs even dimension, got p = {}",
                    spec.p
                )));
            }
            if !(0.0 < *epsilon && *epsilon <= 1.0) {
                return Err(Error::invalid_argument(format!(
                    "two-block covariance: ε = {epsilon} outside (0, 1]"
                )));
            }
            Ok(CovStructure {
                rho: 1.0 - epsilon,
                pairs: (0..spec.p / 2).map(|i| (2 * i, 2 * i + 1)).collect(),
            })
        }
        CovarianceKind::Planted { s_star, rho } => {
            if !(0.0 < *rho && *rho < 1.0) {
                return Err(Error::invalid_argument(format!(
                    "planted covariance: ρ = {rho} outside (0, 1)"
                )));
            }
            if !s_star.is_multiple_of(2) {
                return Err(Error::invalid_argument(format!(
                    "planted covariance pairs s*/2 coordinates; s* = {s_star} is odd"
                )));
            }
            let support = support.ok_or_else(|| {
                Error::invalid_argument(
                    "planted covariance requires the signal support to pair against",
                )
            })?;
            let half = *s_star / 2;
            if support.len() < *s_star {
                return Err(Error::invalid_argument(format!(
                    "planted covariance: support has {} elements, needs ≥ {s_star}",
                    support.len()
                )));
            }
            if spec.p < support.len() + half {
                return Err(Error::invalid_argument(
                    "planted covariance: not enough off-support coordinates to pair",
                ));
            }
            let mut on: Vec<usize> = support.to_vec();
            partial_shuffle(&mut on, half, rng);
            on.truncate(half);
            let in_support = {
                let mut flags = vec![false; spec.p];
                for &i in support {
                    flags[i] = true;
                }
                flags
            };
            let mut off: Vec<usize> = (0..spec.p).filter(|&i| !in_support[i]).collect();
            partial_shuffle(&mut off, half, rng);
            off.truncate(half);
            Ok(CovStructure {
                rho: *rho,
                pairs: on.into_iter().zip(off).collect(),
            })
        }
    }
}

/// Fisher-Yates on the first `k` slots.
fn partial_shuffle(items: &mut [usize], k: usize, rng: &mut ChaCha12Rng) {
    let n = items.len();
    for i in 0..k.min(n.saturating_sub(1)) {
        let j = i + rng.random_range(0..(n - i));
        items.swap(i, j);
    }
}

/// Dense covariance for `spec`. Planted covariances pair coordinates
/// against the supplied signal support and draw the pairing from `rng`.
pub fn make_covariance(
    spec: &CovarianceSpec,
    support: Option<&[usize]>,
    rng: &mut ChaCha12Rng,
) -> Result<Matrix> {
    Ok(build_structure(spec, support, rng)?.to_matrix(spec.p))
}

/// Exactly `s_star` nonzeros at uniformly chosen coordinates with
/// equiprobable ±1 values.
pub fn make_sparse_signal(p: usize, s_star: usize, rng: &mut ChaCha12Rng) -> Result<Vector> {
    if s_star > p {
        return Err(Error::invalid_argument(format!(
            "sparse signal: s* = {s_star} exceeds dimension {p}"
        )));
    }
    let mut coords: Vec<usize> = (0..p).collect();
    partial_shuffle(&mut coords, s_star, rng);
    let mut theta = Vector::zeros(p);
    for &i in coords.iter().take(s_star) {
        theta[i] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    Ok(theta)
}

/// How the design matrix of an instance was corrupted, if at all.
#[derive(Debug, Clone, PartialEq)]
pub enum Corruption {
    None,
    Additive { sigma_w: Matrix },
    Missing { nu: f64 },
}

/// A generated sparse linear-regression instance, with enough provenance
/// to regenerate or serialize it exactly.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub x: Matrix,
    pub y: Vector,
    pub theta_bar: Vector,
    pub covariance: CovarianceSpec,
    pub structure: CovStructure,
    pub noise_sigma: f64,
    pub corruption: Corruption,
    pub x_corrupted: Option<Matrix>,
    pub mask: Option<Mask>,
    pub stream: RngStream,
}

impl ProblemInstance {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn support(&self) -> Vec<usize> {
        crate::solvers::support_of(&self.theta_bar)
    }

    pub fn s_star(&self) -> usize {
        self.support().len()
    }

    /// Dense covariance actually used for this instance.
    pub fn sigma_matrix(&self) -> Matrix {
        self.structure.to_matrix(self.p())
    }

    /// Least-squares objective on the clean design.
    pub fn clean_objective(&self) -> Result<QuadraticObjective> {
        make_least_squares(self.x.clone(), self.y.clone())
    }

    /// The objective a solver should minimize for this instance: plain
    /// least squares for clean data, the corrected quadratic otherwise.
    pub fn objective(&self) -> Result<QuadraticObjective> {
        match &self.corruption {
            Corruption::None => self.clean_objective(),
            Corruption::Additive { sigma_w } => {
                let xc = self.x_corrupted.as_ref().ok_or_else(|| {
                    Error::invalid_argument("instance tagged additive but has no corrupted design")
                })?;
                make_corrected_additive(xc.clone(), &self.y, sigma_w)
            }
            Corruption::Missing { nu } => {
                let xc = self.x_corrupted.as_ref().ok_or_else(|| {
                    Error::invalid_argument("instance tagged missing but has no corrupted design")
                })?;
                let mask = self.mask.as_ref().ok_or_else(|| {
                    Error::invalid_argument("instance tagged missing but has no mask")
                })?;
                make_corrected_missing(xc.clone(), mask, &self.y, *nu)
            }
        }
    }
}

/// Sample size `n = ⌈f_o · s* · ln p⌉` from the oversampling factor.
pub fn sample_size(f_o: f64, s_star: usize, p: usize) -> usize {
    (f_o * s_star as f64 * (p as f64).ln()).ceil() as usize
}

/// Generates `y = X·θ̄ + ξ` with `X` rows iid `N(0, Σ)` and
/// `ξ ~ N(0, σ²)`.
pub fn synth_linear(
    p: usize,
    s_star: usize,
    n: usize,
    sigma: f64,
    cov: &CovarianceSpec,
    stream: RngStream,
) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(Error::invalid_argument("synth_linear: n must be ≥ 1"));
    }
    if sigma < 0.0 {
        return Err(Error::invalid_argument("synth_linear: σ must be ≥ 0"));
    }
    if cov.p != p {
        return Err(Error::invalid_argument(format!(
            "synth_linear: covariance dimension {} does not match p = {p}",
            cov.p
        )));
    }
    let mut rng = stream.rng();
    let theta_bar = make_sparse_signal(p, s_star, &mut rng)?;
    let support = crate::solvers::support_of(&theta_bar);
    let structure = build_structure(cov, Some(&support), &mut rng)?;

    let mut x = Matrix::zeros(n, p);
    let mut row = vec![0.0f64; p];
    for i in 0..n {
        structure.sample_row(&mut rng, &mut row);
        for j in 0..p {
            x[(i, j)] = row[j];
        }
    }
    let mut y = &x * &theta_bar;
    if sigma > 0.0 {
        for i in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            y[i] += sigma * z;
        }
    }
    Ok(ProblemInstance {
        x,
        y,
        theta_bar,
        covariance: cov.clone(),
        structure,
        noise_sigma: sigma,
        corruption: Corruption::None,
        x_corrupted: None,
        mask: None,
        stream,
    })
}

/// Adds iid `N(0, Σ_W)` noise to the design; the clean design is retained
/// for oracle evaluation.
pub fn corrupt_additive(
    inst: &ProblemInstance,
    sigma_w: &Matrix,
    stream: RngStream,
) -> Result<ProblemInstance> {
    let (n, p) = (inst.n(), inst.p());
    if sigma_w.nrows() != p || sigma_w.ncols() != p {
        return Err(Error::invalid_argument(format!(
            "corrupt_additive: Σ_W is {}x{}, expected {p}x{p}",
            sigma_w.nrows(),
            sigma_w.ncols()
        )));
    }
    let mut rng = stream.rng();
    let noise = sample_noise_rows(n, sigma_w, &mut rng)?;
    let mut out = inst.clone();
    out.x_corrupted = Some(&inst.x + noise);
    out.corruption = Corruption::Additive {
        sigma_w: sigma_w.clone(),
    };
    out.mask = None;
    Ok(out)
}

fn sample_noise_rows(n: usize, sigma_w: &Matrix, rng: &mut ChaCha12Rng) -> Result<Matrix> {
    let p = sigma_w.nrows();
    if sigma_w.iter().all(|&v| v == 0.0) {
        return Ok(Matrix::zeros(n, p));
    }
    let mut z = Matrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            z[(i, j)] = StandardNormal.sample(rng);
        }
    }
    // Scalar covariance avoids the Cholesky entirely.
    let off_diag_zero = (0..p).all(|i| (0..p).all(|j| i == j || sigma_w[(i, j)] == 0.0));
    let first = sigma_w[(0, 0)];
    if off_diag_zero && (0..p).all(|i| sigma_w[(i, i)] == first) {
        if first < 0.0 {
            return Err(Error::invalid_argument(
                "corrupt_additive: Σ_W has a negative diagonal",
            ));
        }
        return Ok(z * first.sqrt());
    }
    let chol = nalgebra::Cholesky::new(sigma_w.clone()).ok_or_else(|| {
        Error::invalid_argument("corrupt_additive: Σ_W is not positive definite")
    })?;
    Ok(z * chol.l().transpose())
}

/// Independently hides each design entry with probability `ν`; hidden
/// entries are zero-filled in the corrupted copy.
pub fn corrupt_missing(inst: &ProblemInstance, nu: f64, stream: RngStream) -> Result<ProblemInstance> {
    if !(0.0..1.0).contains(&nu) {
        return Err(Error::invalid_argument(format!(
            "corrupt_missing: ν = {nu} outside [0, 1)"
        )));
    }
    let (n, p) = (inst.n(), inst.p());
    let mut rng = stream.rng();
    let mut mask = Mask::from_element(n, p, 1u8);
    let mut xc = inst.x.clone();
    for i in 0..n {
        for j in 0..p {
            if rng.random::<f64>() < nu {
                mask[(i, j)] = 0;
                xc[(i, j)] = 0.0;
            }
        }
    }
    let mut out = inst.clone();
    out.x_corrupted = Some(xc);
    out.mask = Some(mask);
    out.corruption = Corruption::Missing { nu };
    Ok(out)
}

/// Recovery metric: how many true-support coordinates are absent from the
/// `s_star` largest entries of the estimate, and the missing fraction.
pub fn support_error(
    theta_hat: &Vector,
    theta_bar: &Vector,
    s_star: usize,
) -> Result<(usize, f64)> {
    if theta_hat.len() != theta_bar.len() {
        return Err(Error::invalid_argument(format!(
            "support_error: lengths differ ({} vs {})",
            theta_hat.len(),
            theta_bar.len()
        )));
    }
    if s_star == 0 {
        return Ok((0, 0.0));
    }
    let top = numkit::top_k_indices(theta_hat, s_star.min(theta_hat.len()))?;
    let mut in_top = vec![false; theta_hat.len()];
    for &i in &top {
        // Zero entries of the estimate discover nothing.
        if theta_hat[i] != 0.0 {
            in_top[i] = true;
        }
    }
    let undiscovered = (0..theta_bar.len())
        .filter(|&i| theta_bar[i] != 0.0 && !in_top[i])
        .count();
    Ok((undiscovered, undiscovered as f64 / s_star as f64))
}

/// A generated low-rank matrix-sensing instance.
#[derive(Debug, Clone)]
pub struct MatrixProblemInstance {
    pub sensing: Vec<Matrix>,
    pub y: Vector,
    pub w_bar: Matrix,
    pub noise_sigma: f64,
    pub stream: RngStream,
}

impl MatrixProblemInstance {
    pub fn objective(&self) -> Result<crate::objectives::MatrixLeastSquares> {
        crate::objectives::make_matrix_least_squares(&self.sensing, self.y.clone())
    }
}

/// Rank-`r_star` target `W̄ = U₀V₀ᵀ` with factor entries of variance
/// `1/√r*`, sensed by iid standard Gaussian matrices:
/// `yᵢ = ⟨Xᵢ, W̄⟩_F + ξᵢ`.
pub fn make_matrix_instance(
    p1: usize,
    p2: usize,
    r_star: usize,
    n: usize,
    sigma: f64,
    stream: RngStream,
) -> Result<MatrixProblemInstance> {
    if r_star == 0 || r_star > p1.min(p2) {
        return Err(Error::invalid_argument(format!(
            "matrix instance: rank {r_star} outside 1..={}",
            p1.min(p2)
        )));
    }
    if n == 0 {
        return Err(Error::invalid_argument("matrix instance: n must be ≥ 1"));
    }
    if sigma < 0.0 {
        return Err(Error::invalid_argument("matrix instance: σ must be ≥ 0"));
    }
    let mut rng = stream.rng();
    let factor_std = (1.0 / (r_star as f64).sqrt()).sqrt();
    let u = Matrix::from_fn(p1, r_star, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * factor_std
    });
    let v = Matrix::from_fn(p2, r_star, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * factor_std
    });
    let w_bar = u * v.transpose();
    let mut sensing = Vec::with_capacity(n);
    let mut y = Vector::zeros(n);
    for i in 0..n {
        let xi = Matrix::from_fn(p1, p2, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z
        });
        y[i] = xi.dot(&w_bar);
        if sigma > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            y[i] += sigma * z;
        }
        sensing.push(xi);
    }
    Ok(MatrixProblemInstance {
        sensing,
        y,
        w_bar,
        noise_sigma: sigma,
        stream,
    })
}

// ---------------------------------------------------------------------
// Instance serialization: a directory with meta.json plus CSV payloads
// (plain decimal, 17 significant digits, row-major).
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct InstanceMeta {
    p: usize,
    n: usize,
    s_star: usize,
    noise_sigma: f64,
    covariance: CovarianceSpec,
    structure: CovStructure,
    seed: RngStream,
    corruption: CorruptionMeta,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CorruptionMeta {
    None,
    /// Scalar Σ_W is stored inline; a general matrix lives in
    /// `sigma_w.csv`.
    Additive { scalar: Option<f64> },
    Missing { nu: f64 },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_value(m[(i, j)]));
        }
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| io_err(path, e))
}

fn write_vector_csv(path: &Path, v: &Vector) -> Result<()> {
    let mut out = String::new();
    for i in 0..v.len() {
        out.push_str(&format_value(v[i]));
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| io_err(path, e))
}

fn write_mask_csv(path: &Path, m: &Mask) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(if m[(i, j)] != 0 { "1" } else { "0" });
        }
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| io_err(path, e))
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|e| io_err(path, format!("line {}: {e}", lineno + 1)))?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let rows = read_rows(path)?;
    if rows.is_empty() {
        return Err(io_err(path, "empty matrix file"));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(io_err(path, "ragged rows"));
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn read_vector_csv(path: &Path) -> Result<Vector> {
    let rows = read_rows(path)?;
    let mut values = Vec::with_capacity(rows.len());
    for row in rows {
        if row.len() != 1 {
            return Err(io_err(path, "expected one value per line"));
        }
        values.push(row[0]);
    }
    Ok(Vector::from_vec(values))
}

fn read_mask_csv(path: &Path) -> Result<Mask> {
    let m = read_matrix_csv(path)?;
    Ok(Mask::from_fn(m.nrows(), m.ncols(), |i, j| {
        if m[(i, j)] != 0.0 {
            1u8
        } else {
            0u8
        }
    }))
}

/// Serializes an instance to `dir` as `meta.json`, `X.csv`, `y.csv` and
/// `theta_bar.csv` (plus corrupted-design artifacts when present).
pub fn save_instance(inst: &ProblemInstance, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let corruption = match &inst.corruption {
        Corruption::None => CorruptionMeta::None,
        Corruption::Additive { sigma_w } => {
            let scalar = scalar_identity_scale(sigma_w);
            if scalar.is_none() {
                write_matrix_csv(&dir.join("sigma_w.csv"), sigma_w)?;
            }
            CorruptionMeta::Additive { scalar }
        }
        Corruption::Missing { nu } => CorruptionMeta::Missing { nu: *nu },
    };
    let meta = InstanceMeta {
        p: inst.p(),
        n: inst.n(),
        s_star: inst.s_star(),
        noise_sigma: inst.noise_sigma,
        covariance: inst.covariance.clone(),
        structure: inst.structure.clone(),
        seed: inst.stream,
        corruption,
    };
    let meta_path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).map_err(|e| io_err(&meta_path, e))?;
    fs::write(&meta_path, text).map_err(|e| io_err(&meta_path, e))?;
    write_matrix_csv(&dir.join("X.csv"), &inst.x)?;
    write_vector_csv(&dir.join("y.csv"), &inst.y)?;
    write_vector_csv(&dir.join("theta_bar.csv"), &inst.theta_bar)?;
    if let Some(xc) = &inst.x_corrupted {
        write_matrix_csv(&dir.join("x_corrupted.csv"), xc)?;
    }
    if let Some(mask) = &inst.mask {
        write_mask_csv(&dir.join("mask.csv"), mask)?;
    }
    Ok(())
}

fn scalar_identity_scale(m: &Matrix) -> Option<f64> {
    let p = m.nrows();
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

/// Loads an instance directory produced by [`save_instance`].
pub fn load_instance(dir: &Path) -> Result<ProblemInstance> {
    let meta_path = dir.join("meta.json");
    let text = fs::read_to_string(&meta_path).map_err(|e| io_err(&meta_path, e))?;
    let meta: InstanceMeta = serde_json::from_str(&text).map_err(|e| io_err(&meta_path, e))?;
    let x = read_matrix_csv(&dir.join("X.csv"))?;
    let y = read_vector_csv(&dir.join("y.csv"))?;
    let theta_bar = read_vector_csv(&dir.join("theta_bar.csv"))?;
    if x.nrows() != meta.n || x.ncols() != meta.p || y.len() != meta.n {
        return Err(io_err(dir, "payload dimensions disagree with meta.json"));
    }
    let (corruption, x_corrupted, mask) = match meta.corruption {
        CorruptionMeta::None => (Corruption::None, None, None),
        CorruptionMeta::Additive { scalar } => {
            let sigma_w = match scalar {
                Some(w) => Matrix::identity(meta.p, meta.p) * w,
                None => read_matrix_csv(&dir.join("sigma_w.csv"))?,
            };
            let xc = read_matrix_csv(&dir.join("x_corrupted.csv"))?;
            (Corruption::Additive { sigma_w }, Some(xc), None)
        }
        CorruptionMeta::Missing { nu } => {
            let xc = read_matrix_csv(&dir.join("x_corrupted.csv"))?;
            let mask = read_mask_csv(&dir.join("mask.csv"))?;
            (Corruption::Missing { nu }, Some(xc), Some(mask))
        }
    };
    Ok(ProblemInstance {
        x,
        y,
        theta_bar,
        covariance: meta.covariance,
        structure: meta.structure,
        noise_sigma: meta.noise_sigma,
        corruption,
        x_corrupted,
        mask,
        stream: meta.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_covariance() {
        let spec = CovarianceSpec::identity(4);
        let mut rng = RngStream::new(1, 0).rng();
        let sigma = make_covariance(&spec, None, &mut rng).unwrap();
        assert_eq!(sigma, Matrix::identity(4, 4));
    }

    #[test]
    fn two_block_eigenvalues() {
        let spec = CovarianceSpec::two_block(2, 0.1);
        let mut rng = RngStream::new(1, 0).rng();
        let sigma = make_covariance(&spec, None, &mut rng).unwrap();
        let (lo, hi) = numkit::sym_eig_extremes(&sigma).unwrap();
        assert!((lo - 0.1).abs() < 1e-12);
        assert!((hi - 1.9).abs() < 1e-12);
        assert!((hi / lo - 19.0).abs() < 1e-9);
    }

    #[test]
    fn two_block_rejects_odd_dimension() {
        let spec = CovarianceSpec::two_block(5, 0.1);
        let mut rng = RngStream::new(1, 0).rng();
        assert!(make_covariance(&spec, None, &mut rng).is_err());
    }

    #[test]
    fn planted_covariance_hits_condition_target() {
        let p = 400;
        let s_star = 20;
        let rho = rho_for_condition_target(50.0);
        let spec = CovarianceSpec::planted(p, s_star, rho);
        let support: Vec<usize> = (0..s_star).map(|i| i * 3).collect();
        let mut rng = RngStream::new(9, 0).rng();
        let sigma = make_covariance(&spec, Some(&support), &mut rng).unwrap();
        let (lo, hi) = numkit::sym_eig_extremes(&sigma).unwrap();
        let kappa = hi / lo;
        assert!(
            (40.0..=60.0).contains(&kappa),
            "measured condition number {kappa}"
        );
    }

    #[test]
    fn planted_pairs_straddle_support() {
        let p = 60;
        let s_star = 10;
        let spec = CovarianceSpec::planted(p, s_star, 0.9);
        let support: Vec<usize> = (0..s_star).map(|i| i * 2).collect();
        let mut rng = RngStream::new(10, 0).rng();
        let structure = build_structure(&spec, Some(&support), &mut rng).unwrap();
        assert_eq!(structure.pairs.len(), s_star / 2);
        for &(a, b) in &structure.pairs {
            assert!(support.contains(&a), "pair start {a} not in support");
            assert!(!support.contains(&b), "pair end {b} inside support");
        }
    }

    #[test]
    fn sparse_signal_edge_cases() {
        let mut rng = RngStream::new(2, 0).rng();
        let zero = make_sparse_signal(5, 0, &mut rng).unwrap();
        assert_eq!(zero.iter().filter(|&&v| v != 0.0).count(), 0);
        let full = make_sparse_signal(5, 5, &mut rng).unwrap();
        assert!(full.iter().all(|&v| v == 1.0 || v == -1.0));
    }

    #[test]
    fn sparse_signal_counts_and_signs_balance() {
        let p = 40;
        let s_star = 8;
        let mut positives = 0usize;
        let mut total = 0usize;
        for t in 0..1000 {
            let mut rng = RngStream::new(3, t).rng();
            let theta = make_sparse_signal(p, s_star, &mut rng).unwrap();
            let nz: Vec<f64> = theta.iter().cloned().filter(|&v| v != 0.0).collect();
            assert_eq!(nz.len(), s_star);
            positives += nz.iter().filter(|&&v| v > 0.0).count();
            total += s_star;
        }
        // Binomial(8000, ½): 3σ band is ±134.
        let half = total as f64 / 2.0;
        let band = 3.0 * (total as f64 * 0.25).sqrt();
        assert!(
            (positives as f64 - half).abs() <= band,
            "sign imbalance: {positives}/{total}"
        );
    }

    #[test]
    fn synth_linear_noiseless_residual_is_zero() {
        let spec = CovarianceSpec::identity(20);
        let inst = synth_linear(20, 4, 30, 0.0, &spec, RngStream::new(4, 0)).unwrap();
        let residual = &inst.y - &inst.x * &inst.theta_bar;
        assert!(residual.norm() == 0.0);
        assert_eq!(inst.s_star(), 4);
    }

    #[test]
    fn desk_scale_sample_size() {
        assert_eq!(sample_size(2.0, 20, 2000), 305);
    }

    #[test]
    fn synth_linear_matches_covariance_empirically() {
        // Empirical covariance of generated rows approaches Σ entrywise.
        let p = 6;
        let rho = 0.8;
        let spec = CovarianceSpec::two_block(p, 1.0 - rho);
        let n = 5000;
        let inst = synth_linear(p, 2, n, 0.0, &spec, RngStream::new(5, 0)).unwrap();
        let sigma = inst.sigma_matrix();
        let emp = inst.x.transpose() * &inst.x / n as f64;
        for i in 0..p {
            for j in 0..p {
                // Entry variance of products of standard normals is O(1);
                // 3·SE with n = 5000 is about 0.06.
                assert!(
                    (emp[(i, j)] - sigma[(i, j)]).abs() <= 0.07,
                    "empirical covariance off at ({i},{j}): {} vs {}",
                    emp[(i, j)],
                    sigma[(i, j)]
                );
            }
        }
    }

    #[test]
    fn instances_are_reproducible() {
        let spec = CovarianceSpec::planted(40, 4, 0.9);
        let a = synth_linear(40, 4, 25, 0.1, &spec, RngStream::new(6, 7)).unwrap();
        let b = synth_linear(40, 4, 25, 0.1, &spec, RngStream::new(6, 7)).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert_eq!(a.theta_bar, b.theta_bar);
        assert_eq!(a.structure, b.structure);
    }

    #[test]
    fn corrupt_additive_zero_noise_is_identity() {
        let spec = CovarianceSpec::identity(8);
        let inst = synth_linear(8, 2, 10, 0.0, &spec, RngStream::new(7, 0)).unwrap();
        let out = corrupt_additive(&inst, &Matrix::zeros(8, 8), RngStream::new(7, 1)).unwrap();
        assert_eq!(out.x_corrupted.as_ref().unwrap(), &inst.x);
    }

    #[test]
    fn corrupt_additive_variance_inflation() {
        let p = 4;
        let spec = CovarianceSpec::identity(p);
        let inst = synth_linear(p, 1, 4000, 0.0, &spec, RngStream::new(8, 0)).unwrap();
        let w = 0.2;
        let out =
            corrupt_additive(&inst, &(Matrix::identity(p, p) * w), RngStream::new(8, 1)).unwrap();
        let diff = out.x_corrupted.as_ref().unwrap() - &inst.x;
        let var = diff.iter().map(|&v| v * v).sum::<f64>() / (diff.len() as f64);
        // 3·SE of a variance estimate from 16000 squared normals.
        let se = (2.0 * w * w / diff.len() as f64).sqrt();
        assert!(
            (var - w).abs() <= 3.5 * se,
            "per-entry variance {var} vs {w}"
        );
    }

    #[test]
    fn corrupt_missing_observed_fraction() {
        let p = 10;
        let spec = CovarianceSpec::identity(p);
        let inst = synth_linear(p, 2, 400, 0.0, &spec, RngStream::new(9, 0)).unwrap();
        let nu = 0.3;
        let out = corrupt_missing(&inst, nu, RngStream::new(9, 1)).unwrap();
        let mask = out.mask.as_ref().unwrap();
        let observed: usize = mask.iter().map(|&b| b as usize).sum();
        let total = (mask.nrows() * mask.ncols()) as f64;
        let frac = observed as f64 / total;
        let se = (nu * (1.0 - nu) / total).sqrt();
        assert!(
            (frac - 0.7).abs() <= 3.5 * se,
            "observed fraction {frac} vs 0.7"
        );
        // Zero-filled where missing.
        let xc = out.x_corrupted.as_ref().unwrap();
        for i in 0..mask.nrows() {
            for j in 0..mask.ncols() {
                if mask[(i, j)] == 0 {
                    assert_eq!(xc[(i, j)], 0.0);
                }
            }
        }
        let zero = corrupt_missing(&inst, 0.0, RngStream::new(9, 2)).unwrap();
        assert!(zero.mask.as_ref().unwrap().iter().all(|&b| b == 1));
    }

    #[test]
    fn support_error_cases() {
        let theta_bar = Vector::from_vec(vec![1.0, 0.0, -1.0, 0.0]);
        let (u, f) = support_error(&theta_bar, &theta_bar, 2).unwrap();
        assert_eq!((u, f), (0, 0.0));
        let zero = Vector::zeros(4);
        let (u, f) = support_error(&zero, &theta_bar, 2).unwrap();
        assert_eq!(u, 2);
        assert_eq!(f, 1.0);
        let disjoint = Vector::from_vec(vec![0.0, 5.0, 0.0, 5.0]);
        let (u, f) = support_error(&disjoint, &theta_bar, 2).unwrap();
        assert_eq!(u, 2);
        assert_eq!(f, 1.0);
        let (u, f) = support_error(&zero, &zero, 0).unwrap();
        assert_eq!((u, f), (0, 0.0));
    }

    #[test]
    fn matrix_instance_construction() {
        let inst = make_matrix_instance(6, 5, 2, 40, 0.0, RngStream::new(11, 0)).unwrap();
        // Noiseless: residuals vanish at the target.
        let obj = inst.objective().unwrap();
        use crate::objectives::MatrixObjective;
        assert!(obj.value(&inst.w_bar) < 1e-24);
        // Rank is exactly r* numerically.
        assert_eq!(crate::solvers::numerical_rank(&inst.w_bar), 2);
        // Measurements match a direct entrywise sum.
        for (i, xi) in inst.sensing.iter().enumerate().take(5) {
            let mut dot = 0.0;
            for r in 0..6 {
                for c in 0..5 {
                    dot += xi[(r, c)] * inst.w_bar[(r, c)];
                }
            }
            assert!((dot - inst.y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn instance_roundtrip_through_directory() {
        let dir = std::env::temp_dir().join(format!("hardshrink_test_{}", std::process::id()));
        let spec = CovarianceSpec::planted(30, 4, 0.9);
        let inst = synth_linear(30, 4, 12, 0.1, &spec, RngStream::new(12, 3)).unwrap();
        let inst = corrupt_missing(&inst, 0.25, RngStream::new(12, 4)).unwrap();
        save_instance(&inst, &dir).unwrap();
        let loaded = load_instance(&dir).unwrap();
        assert_eq!(loaded.x, inst.x);
        assert_eq!(loaded.y, inst.y);
        assert_eq!(loaded.theta_bar, inst.theta_bar);
        assert_eq!(loaded.structure, inst.structure);
        assert_eq!(loaded.mask, inst.mask);
        assert_eq!(loaded.x_corrupted, inst.x_corrupted);
        assert_eq!(loaded.stream, inst.stream);
        match (&loaded.corruption, &inst.corruption) {
            (Corruption::Missing { nu: a }, Corruption::Missing { nu: b }) => assert_eq!(a, b),
            other => panic!("corruption mismatch: {other:?}"),
        }
        fs::remove_dir_all(&dir).ok();
    }
}
