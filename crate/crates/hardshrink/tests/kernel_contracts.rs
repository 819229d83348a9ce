//! Dual-route checks of the numeric kernels against independent oracles:
//! the SVD against a Jacobi eigensolve of the Gram matrix, restricted
//! solves against dense inversion, and the eigenvalue extremes against the
//! Jacobi oracle.

mod common;

use common::{gaussian_matrix, gaussian_vector, jacobi_eigenvalues};
use hardshrink::numkit::{solve_restricted, svd, sym_eig_extremes, Matrix, RngStream};

#[test]
fn svd_invariants_on_random_matrices() {
    // Orthonormal factors, ordered singular values, and reconstruction,
    // across 1000 random shapes up to 20×20.
    let mut rng = RngStream::new(100, 0).rng();
    for trial in 0..1000u64 {
        let rows = 1 + (rand::Rng::random_range(&mut rng, 0..20usize));
        let cols = 1 + (rand::Rng::random_range(&mut rng, 0..20usize));
        let m = gaussian_matrix(RngStream::new(101, trial), rows, cols);
        let f = svd(&m).unwrap();
        let k = rows.min(cols);
        assert_eq!(f.singular_values.len(), k);
        for i in 1..k {
            assert!(f.singular_values[i - 1] >= f.singular_values[i]);
        }
        assert!(f.singular_values.iter().all(|&s| s >= 0.0));
        let tol_orth = 1e-10 * rows.max(cols) as f64;
        let utu = f.u.transpose() * &f.u;
        let vtv = f.v.transpose() * &f.v;
        for i in 0..k {
            for j in 0..k {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((utu[(i, j)] - want).abs() <= tol_orth);
                assert!((vtv[(i, j)] - want).abs() <= tol_orth);
            }
        }
        let recon = f.reconstruct();
        assert!((recon - &m).norm() <= 1e-8 * m.norm().max(1e-30));
    }
}

#[test]
fn singular_values_match_gram_eigenvalue_oracle() {
    // σ(M) must equal the square roots of the Jacobi eigenvalues of MᵀM.
    for trial in 0..25u64 {
        let m = gaussian_matrix(RngStream::new(102, trial), 8, 6);
        let f = svd(&m).unwrap();
        let gram = m.transpose() * &m;
        let mut eigs = jacobi_eigenvalues(&gram);
        eigs.sort_by(|a, b| b.total_cmp(a));
        for (i, &lambda) in eigs.iter().enumerate() {
            let oracle = lambda.max(0.0).sqrt();
            assert!(
                (f.singular_values[i] - oracle).abs() <= 1e-9 * (1.0 + oracle),
                "σ_{i}: {} vs oracle {oracle}",
                f.singular_values[i]
            );
        }
    }
}

#[test]
fn eig_extremes_match_jacobi_oracle() {
    for trial in 0..50u64 {
        let raw = gaussian_matrix(RngStream::new(103, trial), 12, 12);
        let a = 0.5 * (&raw + raw.transpose());
        let (lo, hi) = sym_eig_extremes(&a).unwrap();
        let eigs = jacobi_eigenvalues(&a);
        let oracle_lo = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        let oracle_hi = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scale = oracle_hi.abs().max(oracle_lo.abs()).max(1.0);
        assert!((lo - oracle_lo).abs() <= 1e-8 * scale);
        assert!((hi - oracle_hi).abs() <= 1e-8 * scale);
    }
}

#[test]
fn eig_extremes_on_singular_gram_matches_oracle() {
    // Rank-deficient Gram blocks appear when working sets exceed the
    // sample size; extremes must still be accurate (λ_min = 0 exactly).
    for trial in 0..20u64 {
        let x = gaussian_matrix(RngStream::new(106, trial), 4, 9);
        let gram = x.transpose() * &x;
        let sym = 0.5 * (&gram + gram.transpose());
        let (lo, hi) = sym_eig_extremes(&sym).unwrap();
        let eigs = jacobi_eigenvalues(&sym);
        let oracle_hi = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo.abs() <= 1e-10 * oracle_hi.max(1.0), "λ_min = {lo}");
        assert!((hi - oracle_hi).abs() <= 1e-8 * oracle_hi.max(1.0));
    }
}

#[test]
fn restricted_solve_agrees_with_dense_oracle() {
    for trial in 0..50u64 {
        let p = 6;
        let raw = gaussian_matrix(RngStream::new(104, trial), p, p);
        let a = &raw * raw.transpose() + Matrix::identity(p, p) * 0.3;
        let b = gaussian_vector(RngStream::new(105, trial), p);
        let support = [0usize, 2, 5];
        let x = solve_restricted(&a, &b, &support).unwrap();
        // Dense oracle: invert the full 3×3 block directly.
        let mut block = Matrix::zeros(3, 3);
        for (r, &i) in support.iter().enumerate() {
            for (c, &j) in support.iter().enumerate() {
                block[(r, c)] = a[(i, j)];
            }
        }
        let rhs = nalgebra::DVector::from_vec(support.iter().map(|&i| b[i]).collect());
        let oracle = block.try_inverse().unwrap() * rhs;
        for (r, &i) in support.iter().enumerate() {
            assert!((x[i] - oracle[r]).abs() <= 1e-9 * (1.0 + oracle[r].abs()));
        }
        for i in 0..p {
            if !support.contains(&i) {
                assert_eq!(x[i], 0.0, "off-support entries must be exactly zero");
            }
        }
        let residual_s: f64 = {
            let ax = &a * &x;
            support
                .iter()
                .map(|&i| (ax[i] - b[i]).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let b_s: f64 = support.iter().map(|&i| b[i] * b[i]).sum::<f64>().sqrt();
        assert!(residual_s <= 1e-10 * b_s.max(1e-30));
    }
}
