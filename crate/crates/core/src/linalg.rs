//! Leading singular triplets of a sparse matrix, for NNDSVD initialization.
//!
//! Block subspace iteration on `VᵀV` followed by a Rayleigh-Ritz step solved
//! with cyclic Jacobi. Only the top few triplets are ever needed, so the
//! dense work stays at `n_cols × block`.

use ndarray::{Array1, Array2, Axis};

use crate::rng::SeededRng;
use crate::sparse::CsrMatrix;

const OVERSAMPLE: usize = 10;
const MAX_SWEEPS: usize = 200;
const RITZ_TOL: f64 = 1e-12;
const START_SEED: u64 = 0x5eed_5eed;

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order with eigenvectors as columns.
pub fn symmetric_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut a = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();

    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[[p, q]] * a[[p, q]])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].total_cmp(&a[[i, i]]).then(i.cmp(&j)));
    let values = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let vectors = v.select(Axis(1), &order);
    (values, vectors)
}

/// Orthonormalizes columns in place (modified Gram-Schmidt, two passes).
/// Columns that collapse are replaced by fresh random directions.
fn orthonormalize(q: &mut Array2<f64>, rng: &mut SeededRng) {
    let (rows, cols) = q.dim();
    for j in 0..cols {
        let mut attempts = 0;
        loop {
            let before = q.column(j).dot(&q.column(j)).sqrt();
            for _ in 0..2 {
                for i in 0..j {
                    let proj = q.column(i).dot(&q.column(j));
                    let qi = q.column(i).to_owned();
                    q.column_mut(j).scaled_add(-proj, &qi);
                }
            }
            let norm = q.column(j).dot(&q.column(j)).sqrt();
            if norm > 1e-10 * before.max(f64::MIN_POSITIVE) && norm > 0.0 {
                q.column_mut(j).mapv_inplace(|x| x / norm);
                break;
            }
            attempts += 1;
            assert!(attempts < 32, "cannot complete orthonormal basis");
            for i in 0..rows {
                q[[i, j]] = rng.unit() - 0.5;
            }
        }
    }
}

/// Top `k` singular triplets `(U, S, Vᵀ)` of `v`, with `U` of shape
/// `n_rows × k`, `S` descending and `Vᵀ` of shape `k × n_cols`.
/// Requires `k ≤ min(n_rows, n_cols)`.
pub fn truncated_svd(v: &CsrMatrix, k: usize) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
    let (n, m) = (v.n_rows(), v.n_cols());
    assert!(k >= 1 && k <= n.min(m));
    let block = (k + OVERSAMPLE).min(n).min(m);
    let mut rng = SeededRng::new(START_SEED);
    let gram_apply = |x: &Array2<f64>| v.t_mul_dense(&v.mul_dense(x));

    let q = if block == m {
        Array2::eye(m)
    } else {
        let mut q = Array2::from_shape_fn((m, block), |_| rng.unit() - 0.5);
        orthonormalize(&mut q, &mut rng);
        let mut prev_ritz: Option<Array1<f64>> = None;
        for _ in 0..MAX_SWEEPS {
            let z = gram_apply(&q);
            let t = q.t().dot(&z);
            let (ritz, _) = symmetric_eigen(&t);
            q = z;
            orthonormalize(&mut q, &mut rng);
            if let Some(prev) = &prev_ritz {
                let top = ritz[0].abs().max(f64::MIN_POSITIVE);
                let delta = (0..k).map(|i| (ritz[i] - prev[i]).abs()).fold(0.0, f64::max);
                if delta <= RITZ_TOL * top {
                    break;
                }
            }
            prev_ritz = Some(ritz);
        }
        q
    };

    let z = gram_apply(&q);
    let t = q.t().dot(&z);
    let t = (&t + &t.t()) * 0.5;
    let (evals, evecs) = symmetric_eigen(&t);
    let right = q.dot(&evecs.slice(ndarray::s![.., ..k]));
    let sigma = Array1::from_iter(evals.iter().take(k).map(|l| l.max(0.0).sqrt()));

    let vu = v.mul_dense(&right);
    let mut u = Array2::zeros((n, k));
    for j in 0..k {
        if sigma[j] > 0.0 {
            let col = vu.column(j).mapv(|x| x / sigma[j]);
            u.column_mut(j).assign(&col);
        }
    }
    (u, sigma, right.t().to_owned())
}
