//! Robust mean estimation: geometric median via Weiszfeld iteration and the
//! median-of-means estimator.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::samples::Samples;

/// Default relative objective-change tolerance for the Weiszfeld iteration.
pub const GM_TOL: f64 = 1e-8;

/// Default iteration cap for the Weiszfeld iteration.
pub const GM_MAX_ITER: usize = 1000;

/// Distance below which an iterate is considered to sit on a data point.
const SINGULARITY_EPS: f64 = 1e-12;

fn objective(points: &DMatrix<f64>, z: &DVector<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..points.nrows() {
        s += (points.row(i).transpose() - z).norm();
    }
    s
}

/// Geometric median of the rows of `points`: the minimizer of the summed
/// Euclidean distances.
///
/// Weiszfeld fixed-point iteration started at the coordinate-wise mean, with
/// the Vardi-Zhang step when the iterate lands on a data point. Terminates
/// when the relative change of the objective falls below `tol`.
pub fn geometric_median(
    points: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>> {
    let n = points.nrows();
    let d = points.ncols();
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument(
            "geometric_median: empty point set".into(),
        ));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "geometric_median: tol must be positive, got {tol}"
        )));
    }
    if n == 1 {
        return Ok(points.row(0).transpose());
    }

    let mut z: DVector<f64> = points.row_mean().transpose();
    let mut obj = objective(points, &z);
    let mut gap = f64::INFINITY;

    for _ in 0..max_iter {
        // Weighted mean over points away from z, subgradient over the rest.
        let mut wsum = 0.0;
        let mut t = DVector::zeros(d);
        let mut subgrad = DVector::zeros(d);
        let mut multiplicity = 0usize;
        for i in 0..n {
            let x = points.row(i).transpose();
            let diff = &x - &z;
            let dist = diff.norm();
            if dist <= SINGULARITY_EPS {
                multiplicity += 1;
            } else {
                let w = 1.0 / dist;
                wsum += w;
                t += x * w;
                subgrad += diff * w;
            }
        }
        if wsum == 0.0 {
            // Every point coincides with the iterate.
            return Ok(z);
        }
        let t = t / wsum;
        let z_next = if multiplicity == 0 {
            t
        } else {
            let r = subgrad.norm();
            if r <= multiplicity as f64 {
                // The data point satisfies the optimality condition.
                return Ok(z);
            }
            let gamma = (multiplicity as f64 / r).min(1.0);
            t * (1.0 - gamma) + &z * gamma
        };

        let obj_next = objective(points, &z_next);
        gap = (obj - obj_next).abs();
        let scale = obj.max(f64::MIN_POSITIVE);
        z = z_next;
        obj = obj_next;
        if gap <= tol * scale {
            return Ok(z);
        }
    }

    Err(Error::Convergence {
        iterations: max_iter,
        gap,
        last_iterate: z.iter().copied().collect(),
    })
}

/// Number of median-of-means blocks for a confidence parameter `beta`:
/// `k = floor(3.5 beta) + 1`.
pub fn mom_block_count(beta: f64) -> usize {
    (3.5 * beta).floor() as usize + 1
}

/// Smallest sample size for which median-of-means is feasible at `beta`.
pub fn mom_min_samples(beta: f64) -> usize {
    2 * mom_block_count(beta)
}

/// Result of the median-of-means estimator.
#[derive(Clone, Debug)]
pub struct MoMResult {
    /// Geometric median of the block means.
    pub mu_hat: DVector<f64>,
    /// Number of blocks, `floor(3.5 beta) + 1`.
    pub k: usize,
    /// The `k x d` matrix of block means.
    pub block_means: DMatrix<f64>,
    /// Confidence parameter.
    pub beta: f64,
}

/// Median-of-means mean estimator: the first `k * floor(m/k)` rows are split
/// into `k` contiguous blocks, each block is averaged, and the geometric
/// median of the block means is returned. Leftover rows are discarded.
pub fn median_of_means(samples: &Samples, beta: f64) -> Result<MoMResult> {
    if !beta.is_finite() || beta <= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "median_of_means: beta must satisfy beta > 1, got {beta}"
        )));
    }
    let m = samples.m();
    let d = samples.dim();
    let k = mom_block_count(beta);
    if 2 * k > m {
        return Err(Error::SampleSize {
            required: 2 * k,
            actual: m,
            beta,
        });
    }
    let block = m / k;
    let mut block_means = DMatrix::zeros(k, d);
    for j in 0..k {
        let mut sum = DVector::zeros(d);
        // Fixed left-to-right summation order for determinism.
        for i in (j * block)..((j + 1) * block) {
            sum += samples.matrix().row(i).transpose();
        }
        block_means.set_row(j, &(sum / block as f64).transpose());
    }
    let mu_hat = geometric_median(&block_means, GM_TOL, GM_MAX_ITER)?;
    Ok(MoMResult {
        mu_hat,
        k,
        block_means,
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_is_returned_exactly() {
        let p = DMatrix::from_row_slice(1, 2, &[3.0, -1.0]);
        let z = geometric_median(&p, 1e-8, 100).unwrap();
        assert_eq!(z, DVector::from_vec(vec![3.0, -1.0]));
    }

    #[test]
    fn unit_square_center() {
        let p = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0]);
        let z = geometric_median(&p, 1e-10, 1000).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-7);
        assert!((z[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn iterate_on_data_point_is_handled() {
        // Collinear points; the middle one is the median, and the mean
        // initialization lands exactly on it.
        let p = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let z = geometric_median(&p, 1e-10, 1000).unwrap();
        assert!(z.norm() < 1e-9);
    }

    #[test]
    fn block_count_rule() {
        assert_eq!(mom_block_count(2.0), 8);
        assert_eq!(mom_block_count(1.5), 6);
    }

    #[test]
    fn identical_rows_give_exact_mean() {
        let rows: Vec<Vec<f64>> = (0..40).map(|_| vec![1.5, -2.0, 0.25]).collect();
        let s = Samples::from_rows(&rows).unwrap();
        let r = median_of_means(&s, 2.0).unwrap();
        assert_eq!(r.k, 8);
        assert_eq!(r.mu_hat, DVector::from_vec(vec![1.5, -2.0, 0.25]));
    }

    #[test]
    fn beta_and_sample_size_validation() {
        let s = Samples::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(matches!(
            median_of_means(&s, 1.0),
            Err(Error::InvalidArgument(_))
        ));
        match median_of_means(&s, 2.0) {
            Err(Error::SampleSize { required, .. }) => assert_eq!(required, 16),
            other => panic!("expected SampleSize error, got {other:?}"),
        }
    }
}
