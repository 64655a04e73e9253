//! Property and oracle tests: invariants of the truncation function, the
//! eigendecomposition, the robust estimators, and independent brute-force
//! oracles for the geometric median and the proximal soft-thresholding step.

use heavycov::matcore::{
    effective_rank, fro_norm, matrix_function, nuclear_norm, op_norm, psi, sym_eigen, trace,
    SymMat,
};
use heavycov::robust_cov::{
    lepski_estimate, pca_projector, soft_threshold, subspace_dist, truncated_cov,
    truncation_ratio, LepskiConfig,
};
use heavycov::robust_mean::{geometric_median, median_of_means, mom_block_count};
use heavycov::samples::Samples;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_sym(d: usize, rng: &mut ChaCha8Rng) -> SymMat {
    let m = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    SymMat::new((&m + m.transpose()) * 0.5).unwrap()
}

fn random_psd(d: usize, rng: &mut ChaCha8Rng) -> SymMat {
    let m = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    SymMat::new(&m * m.transpose()).unwrap()
}

fn random_vec(d: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn random_samples(m: usize, d: usize, rng: &mut ChaCha8Rng) -> Samples {
    Samples::new(DMatrix::from_fn(m, d, |_, _| {
        rng.sample::<f64, _>(StandardNormal)
    }))
    .unwrap()
}

proptest! {
    #[test]
    fn psi_is_odd_lipschitz_bounded(x in -100.0f64..100.0, y in -100.0f64..100.0) {
        let px = psi(x).unwrap();
        prop_assert!((psi(-x).unwrap() + px).abs() < 1e-15);
        prop_assert!(px.abs() <= 1.0);
        prop_assert!((px - psi(y).unwrap()).abs() <= (x - y).abs() + 1e-15);
        if x.abs() <= 1.0 {
            prop_assert_eq!(px, x);
        }
    }

    #[test]
    fn norm_ordering(seed in 0u64..1000, d in 1usize..9) {
        let a = random_sym(d, &mut rng(seed));
        let op = op_norm(&a).unwrap();
        let fro = fro_norm(&a);
        let nuc = nuclear_norm(&a).unwrap();
        prop_assert!(op <= fro + 1e-12);
        prop_assert!(fro <= nuc + 1e-12);
    }

    #[test]
    fn soft_threshold_is_nonexpansive(seed in 0u64..500, tau in 0.0f64..5.0) {
        let mut r = rng(seed);
        let a = random_sym(6, &mut r);
        let b = random_sym(6, &mut r);
        let sa = soft_threshold(&a, tau).unwrap();
        let sb = soft_threshold(&b, tau).unwrap();
        prop_assert!(fro_norm(&(&sa - &sb)) <= fro_norm(&(&a - &b)) + 1e-10);
    }

    #[test]
    fn mom_block_count_formula(beta in 1.0001f64..50.0) {
        prop_assert_eq!(mom_block_count(beta), (3.5 * beta).floor() as usize + 1);
    }
}

#[test]
fn psi_on_dense_grid() {
    let mut x = -3.0;
    while x <= 3.0 {
        let p = psi(x).unwrap();
        assert!(p.abs() <= 1.0);
        if x.abs() <= 1.0 {
            assert_eq!(p, x);
        } else {
            assert_eq!(p, x.signum());
        }
        x += 1e-3;
    }
}

#[test]
fn eigen_invariants_on_random_matrices() {
    let mut r = rng(11);
    for i in 0..500 {
        let d = 1 + (i % 64);
        let a = random_sym(d, &mut r);
        let e = sym_eigen(&a).unwrap();
        // Sorted descending.
        assert!(e.values().windows(2).all(|w| w[0] >= w[1]));
        // Orthonormality within 1e-10 entrywise.
        let gram = e.vectors().transpose() * e.vectors();
        assert!((gram - DMatrix::identity(d, d)).amax() < 1e-10);
        // Reconstruction within 1e-10 relative Frobenius error.
        let lam = DMatrix::from_diagonal(&DVector::from_row_slice(e.values()));
        let recon = e.vectors() * lam * e.vectors().transpose();
        let rel = (recon - a.matrix()).norm() / a.matrix().norm();
        assert!(rel < 1e-10, "d={d}, rel={rel}");
    }
}

#[test]
fn matrix_function_identity_on_random_matrices() {
    let mut r = rng(13);
    for _ in 0..50 {
        let a = random_sym(8, &mut r);
        let b = matrix_function(|x| x, &a).unwrap();
        assert!(a.max_entry_diff(&b) < 1e-10);
    }
}

#[test]
fn rank_one_truncation_equivalence() {
    // matrix_function(x -> psi(theta x)/theta, zz^T) must equal the closed
    // form zz^T psi(theta ||z||^2) / (theta ||z||^2).
    let mut r = rng(17);
    for _ in 0..500 {
        let d = 2 + r.gen_range(0..6);
        let z = random_vec(d, &mut r) * 10f64.powf(r.gen_range(-2.0..2.0));
        let theta = 10f64.powf(r.gen_range(-3.0..3.0));
        let zz = SymMat::new(&z * z.transpose()).unwrap();
        let via_eigen = matrix_function(|x| psi(theta * x).unwrap() / theta, &zz).unwrap();
        let n2 = z.norm_squared();
        let closed = &zz * (psi(theta * n2).unwrap() / (theta * n2));
        assert!(
            via_eigen.max_entry_diff(&closed) <= 1e-10 * (1.0 + closed.matrix().amax()),
            "max entry diff {}",
            via_eigen.max_entry_diff(&closed)
        );
    }
}

#[test]
fn norms_match_singular_value_oracle() {
    // For symmetric A the singular values are the square roots of the
    // eigenvalues of A^T A.
    let mut r = rng(19);
    for _ in 0..20 {
        let a = random_sym(6, &mut r);
        let ata = SymMat::new(a.matrix().transpose() * a.matrix()).unwrap();
        let sv: Vec<f64> = sym_eigen(&ata)
            .unwrap()
            .values()
            .iter()
            .map(|l| l.max(0.0).sqrt())
            .collect();
        let op_oracle = sv[0];
        let nuc_oracle: f64 = sv.iter().sum();
        let fro_oracle: f64 = sv.iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!((op_norm(&a).unwrap() - op_oracle).abs() < 1e-10);
        assert!((nuclear_norm(&a).unwrap() - nuc_oracle).abs() < 1e-10);
        assert!((fro_norm(&a) - fro_oracle).abs() < 1e-10);
    }
}

#[test]
fn effective_rank_is_between_one_and_d() {
    let mut r = rng(23);
    for _ in 0..50 {
        let d = 2 + r.gen_range(0..10);
        let a = random_psd(d, &mut r);
        let er = effective_rank(&a).unwrap();
        assert!((1.0 - 1e-10..=d as f64 + 1e-10).contains(&er), "er={er}");
    }
}

// ---------------------------------------------------------------------------
// Geometric median
// ---------------------------------------------------------------------------

fn gm_objective(points: &DMatrix<f64>, z: &DVector<f64>) -> f64 {
    (0..points.nrows())
        .map(|i| (points.row(i).transpose() - z).norm())
        .sum()
}

/// Independent oracle: multi-level grid search over the bounding box,
/// refined down to step 1e-4.
fn grid_search_median(points: &DMatrix<f64>) -> DVector<f64> {
    let (mut lo_x, mut hi_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..points.nrows() {
        lo_x = lo_x.min(points[(i, 0)]);
        hi_x = hi_x.max(points[(i, 0)]);
        lo_y = lo_y.min(points[(i, 1)]);
        hi_y = hi_y.max(points[(i, 1)]);
    }
    let mut center = DVector::from_vec(vec![(lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0]);
    let mut half = ((hi_x - lo_x).max(hi_y - lo_y)) / 2.0 + 1e-9;
    let mut best = center.clone();
    let mut best_obj = gm_objective(points, &best);
    while half > 5e-5 {
        let step = half / 10.0;
        for ix in -10..=10i32 {
            for iy in -10..=10i32 {
                let cand = DVector::from_vec(vec![
                    center[0] + ix as f64 * step,
                    center[1] + iy as f64 * step,
                ]);
                let obj = gm_objective(points, &cand);
                if obj < best_obj {
                    best_obj = obj;
                    best = cand;
                }
            }
        }
        center = best.clone();
        half = step * 2.0;
    }
    best
}

#[test]
fn weiszfeld_matches_grid_search_oracle() {
    let mut r = rng(29);
    let points = DMatrix::from_fn(50, 2, |_, _| r.sample::<f64, _>(StandardNormal));
    let z = geometric_median(&points, 1e-10, 2000).unwrap();
    let oracle = grid_search_median(&points);
    assert!(
        (z.clone() - &oracle).norm() < 1e-2,
        "weiszfeld {:?} vs oracle {:?}",
        z.as_slice(),
        oracle.as_slice()
    );
}

#[test]
fn geometric_median_equivariance_and_optimality() {
    let mut r = rng(31);
    let tol = 1e-10;
    for _ in 0..20 {
        let n = 3 + r.gen_range(0..20);
        let d = 1 + r.gen_range(0..5);
        let points = DMatrix::from_fn(n, d, |_, _| r.sample::<f64, _>(StandardNormal));
        let z = geometric_median(&points, tol, 2000).unwrap();
        let obj = gm_objective(&points, &z);
        let scale = obj.max(1.0);

        // Translation equivariance.
        let c = random_vec(d, &mut r);
        let mut shifted = points.clone();
        for i in 0..n {
            shifted.set_row(i, &(points.row(i) + c.transpose()));
        }
        let zs = geometric_median(&shifted, tol, 2000).unwrap();
        assert!((zs - &z - &c).norm() < 1e-5 * scale);

        // Permutation invariance (reverse row order).
        let mut rev = points.clone();
        for i in 0..n {
            rev.set_row(i, &points.row(n - 1 - i));
        }
        let zr = geometric_median(&rev, tol, 2000).unwrap();
        assert!((zr - &z).norm() < 1e-5 * scale);

        // Objective no worse than at any input point or the mean.
        for i in 0..n {
            assert!(obj <= gm_objective(&points, &points.row(i).transpose()) + 1e-7 * scale);
        }
        assert!(obj <= gm_objective(&points, &points.row_mean().transpose()) + 1e-7 * scale);
    }
}

#[test]
fn mom_result_invariants() {
    let mut r = rng(37);
    for _ in 0..20 {
        let d = 2 + r.gen_range(0..4);
        let m = 200 + r.gen_range(0..100);
        let beta = 1.5 + r.gen::<f64>() * 5.0;
        let samples = random_samples(m, d, &mut r);
        let res = median_of_means(&samples, beta).unwrap();
        assert_eq!(res.k, (3.5 * beta).floor() as usize + 1);
        assert_eq!(res.block_means.nrows(), res.k);
        // The median lies in the bounding box of the block means.
        for j in 0..d {
            let col: Vec<f64> = (0..res.k).map(|i| res.block_means[(i, j)]).collect();
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(res.mu_hat[j] >= lo - 1e-8 && res.mu_hat[j] <= hi + 1e-8);
        }
    }
}

#[test]
fn mom_identical_block_means_returns_common_mean() {
    // Rows form blocks whose means all equal (1, 2).
    let mut rows = Vec::new();
    for _ in 0..20 {
        rows.push(vec![0.0, 1.0]);
        rows.push(vec![2.0, 3.0]);
    }
    let s = Samples::from_rows(&rows).unwrap();
    let res = median_of_means(&s, 2.0).unwrap();
    assert!((res.mu_hat[0] - 1.0).abs() < 1e-8);
    assert!((res.mu_hat[1] - 2.0).abs() < 1e-8);
}

// ---------------------------------------------------------------------------
// Truncated covariance
// ---------------------------------------------------------------------------

#[test]
fn truncated_cov_operator_norm_is_capped() {
    let mut r = rng(41);
    for _ in 0..20 {
        let samples = random_samples(30, 4, &mut r);
        let mu = random_vec(4, &mut r);
        let theta = 10f64.powf(r.gen_range(-2.0..2.0));
        let c = truncated_cov(&samples, &mu, theta).unwrap();
        assert!(op_norm(&c).unwrap() <= 1.0 / theta + 1e-10);
    }
}

#[test]
fn truncated_cov_falls_back_to_sample_covariance() {
    let mut r = rng(43);
    let samples = random_samples(40, 3, &mut r);
    let mu: DVector<f64> = samples.matrix().row_mean().transpose();
    let max_n2 = (0..40)
        .map(|i| (samples.matrix().row(i).transpose() - &mu).norm_squared())
        .fold(0.0f64, f64::max);
    let theta = 0.9 / max_n2;
    let c = truncated_cov(&samples, &mu, theta).unwrap();
    let mut acc = DMatrix::zeros(3, 3);
    for i in 0..40 {
        let z = samples.matrix().row(i).transpose() - &mu;
        acc += &z * z.transpose();
    }
    let scov = SymMat::new(acc / 40.0).unwrap();
    assert!(c.max_entry_diff(&scov) <= 1e-12);
}

#[test]
fn truncated_cov_matches_matrix_function_path() {
    // Oracle: evaluate psi(theta z z^T)/theta per summand by
    // eigendecomposition and average.
    let mut r = rng(47);
    let samples = random_samples(50, 6, &mut r);
    let mu = random_vec(6, &mut r);
    let theta = 0.7;
    let fast = truncated_cov(&samples, &mu, theta).unwrap();
    let mut acc = SymMat::zeros(6);
    for i in 0..50 {
        let z = samples.matrix().row(i).transpose() - &mu;
        let zz = SymMat::new(&z * z.transpose()).unwrap();
        let term = matrix_function(|x| psi(theta * x).unwrap() / theta, &zz).unwrap();
        acc = &acc + &term;
    }
    let oracle = &acc * (1.0 / 50.0);
    assert!(fast.max_entry_diff(&oracle) < 1e-10);
}

#[test]
fn outlier_damping_is_bounded() {
    let mut r = rng(53);
    let samples = random_samples(25, 3, &mut r);
    let mu = DVector::zeros(3);
    let theta = 0.5;
    let base = truncated_cov(&samples, &mu, theta).unwrap();
    for c in [1e2, 1e4, 1e8] {
        let mut data = samples.matrix().clone();
        let scaled = data.row(0) * c;
        data.set_row(0, &scaled);
        let corrupted = truncated_cov(&Samples::new(data).unwrap(), &mu, theta).unwrap();
        let change = op_norm(&(&corrupted - &base)).unwrap();
        assert!(
            change <= 2.0 / (25.0 * theta) + 1e-10,
            "c={c}, change={change}"
        );
    }
}

#[test]
fn truncated_cov_is_rotation_equivariant() {
    let mut r = rng(59);
    let d = 5;
    let samples = random_samples(30, d, &mut r);
    let mu = random_vec(d, &mut r);
    let theta = 0.8;
    // Random orthogonal Q from QR of a Gaussian matrix.
    let g = DMatrix::from_fn(d, d, |_, _| r.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let rotated = Samples::new(samples.matrix() * q.transpose()).unwrap();
    let lhs = truncated_cov(&rotated, &(&q * &mu), theta).unwrap();
    let rhs = &q * truncated_cov(&samples, &mu, theta).unwrap().matrix() * q.transpose();
    assert!((lhs.matrix() - rhs).amax() < 1e-10);
}

#[test]
fn lepski_selection_condition_holds_at_j_star() {
    let mut r = rng(61);
    for trial in 0..10 {
        let samples = random_samples(120, 4, &mut r);
        let cfg = LepskiConfig {
            sigma_min: 0.2,
            sigma_max: 12.0,
            beta: 2.0 + trial as f64 * 0.3,
        };
        let rep = lepski_estimate(&samples, &cfg).unwrap();
        let n = rep.sigmas.len();
        assert!(rep.j_star < n);
        let rate = (rep.beta / rep.m as f64).sqrt();
        for k in (rep.j_star + 1)..n {
            let dist = op_norm(&(&rep.estimates[k] - rep.selected())).unwrap();
            assert!(dist <= 6.0 * rep.sigmas[k] * rate + 1e-12);
        }
        // Grid invariants.
        assert!(n as f64 <= 1.0 + (2.0 * cfg.sigma_max / cfg.sigma_min).log2() + 1e-9);
        for w in rep.sigmas.windows(2) {
            assert_eq!(w[1], 2.0 * w[0]);
        }
    }
}

// ---------------------------------------------------------------------------
// Soft thresholding and PCA
// ---------------------------------------------------------------------------

#[test]
fn soft_threshold_rank_is_monotone_in_tau() {
    let mut r = rng(67);
    for _ in 0..10 {
        let a = random_sym(8, &mut r);
        let mut prev_rank = usize::MAX;
        for tau in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let s = soft_threshold(&a, tau).unwrap();
            let rank = sym_eigen(&s)
                .unwrap()
                .values()
                .iter()
                .filter(|&&l| l > 1e-12)
                .count();
            assert!(rank <= prev_rank);
            prev_rank = rank;
        }
    }
}

#[test]
fn pca_projector_fixes_top_eigenvectors() {
    let mut r = rng(71);
    for _ in 0..10 {
        // PSD with a forced gap after the third eigenvalue.
        let base = random_psd(6, &mut r);
        let e = sym_eigen(&base).unwrap();
        let shifted = e
            .recompose(|l| if l >= e.values()[2] { l + 5.0 } else { l })
            .unwrap();
        let p = pca_projector(&shifted, 3).unwrap();
        let es = sym_eigen(&shifted).unwrap();
        for i in 0..3 {
            let v = es.vectors().column(i).clone_owned();
            assert!((p.matrix() * &v - &v).norm() < 1e-9);
        }
        let pp = SymMat::new(p.matrix() * p.matrix()).unwrap();
        assert!(fro_norm(&(&pp - &p)) <= 1e-10);
        assert!((trace(&p) - 3.0).abs() <= 1e-10);
    }
}

#[test]
fn subspace_dist_matches_rotation_oracle() {
    // Rotating a line projector by phi moves it by exactly sin(phi).
    let p1 = SymMat::from_diagonal(&[1.0, 0.0]);
    let mut r = rng(73);
    for _ in 0..20 {
        let phi: f64 = r.gen::<f64>() * std::f64::consts::FRAC_PI_2;
        let rot = DMatrix::from_row_slice(2, 2, &[phi.cos(), -phi.sin(), phi.sin(), phi.cos()]);
        let p2 = SymMat::new(&rot * p1.matrix() * rot.transpose()).unwrap();
        let dist = subspace_dist(&p1, &p2).unwrap();
        assert!((dist - phi.sin()).abs() < 1e-8, "phi={phi}, dist={dist}");
    }
}

#[test]
fn projector_perturbation_respects_davis_kahan_bound() {
    let mut r = rng(79);
    for _ in 0..20 {
        let k = 2;
        let sigma0 = SymMat::from_diagonal(&[5.0, 4.0, 1.0, 0.5, 0.25]);
        let gap = 3.0; // lambda_2 - lambda_3
        let mut e = random_sym(5, &mut r);
        let scale = 0.4 / op_norm(&e).unwrap();
        e = &e * scale;
        let perturbed = &sigma0 + &e;
        let p0 = pca_projector(&sigma0, k).unwrap();
        let p1 = pca_projector(&perturbed, k).unwrap();
        let dist = subspace_dist(&p0, &p1).unwrap();
        assert!(dist <= 2.0 * op_norm(&e).unwrap() / gap + 1e-12);
    }
}

#[test]
fn truncation_ratio_bounds() {
    // Case 1: both norms below the truncation cap gives exactly 1; in
    // general the ratio stays in [1 - 2B√θ - B²θ, 1 + 2B√θ + B²θ] whenever
    // ||mu|| <= B.
    let mut r = rng(83);
    for _ in 0..2000 {
        let d = 1 + r.gen_range(0..5);
        let z = random_vec(d, &mut r) * 10f64.powf(r.gen_range(-1.0..2.0));
        let b: f64 = 10f64.powf(r.gen_range(-2.0..1.0));
        let mut mu = random_vec(d, &mut r);
        mu *= b * r.gen::<f64>() / mu.norm();
        let theta = 10f64.powf(r.gen_range(-3.0..1.0));
        if z.norm_squared() == 0.0 || (&z - &mu).norm_squared() == 0.0 {
            continue;
        }
        let h = truncation_ratio(&z, &mu, theta).unwrap();
        let slack = 2.0 * b * theta.sqrt() + b * b * theta;
        assert!(
            h >= 1.0 - slack - 1e-12 && h <= 1.0 + slack + 1e-12,
            "h={h}, slack={slack}"
        );
    }
}
