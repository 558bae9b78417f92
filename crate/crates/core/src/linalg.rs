//! Small dense linear-algebra and sample-summary helpers.

use nalgebra::{DMatrix, DVector};

/// Inverse of a symmetric positive-definite matrix, or `None` if the
/// Cholesky factorisation fails.
pub fn inverse_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = m.clone().cholesky()?.inverse();
    Some(symmetrize(&inv))
}

/// Solves `m x = b` for symmetric positive-definite `m`.
pub fn solve_spd(m: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    Some(m.clone().cholesky()?.solve(b))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    symmetrize(m).symmetric_eigen().eigenvalues.min()
}

/// Row-major `rows x dim` sample matrix view helpers.
pub fn row(flat: &[f64], dim: usize, r: usize) -> &[f64] {
    &flat[r * dim..(r + 1) * dim]
}

/// Mean vector and covariance (divisor `n`) of weighted rows. Weights need
/// not be normalised.
pub fn weighted_moments(flat: &[f64], dim: usize, weights: Option<&[f64]>) -> (DVector<f64>, DMatrix<f64>) {
    let n = flat.len().checked_div(dim).unwrap_or(0);
    let total: f64 = match weights {
        Some(w) => w.iter().sum(),
        None => n as f64,
    };
    let mut mean = DVector::zeros(dim);
    for r in 0..n {
        let w = weights.map_or(1.0, |w| w[r]);
        for (m, v) in mean.iter_mut().zip(row(flat, dim, r)) {
            *m += w * v;
        }
    }
    mean /= total;
    let mut cov = DMatrix::zeros(dim, dim);
    let mut d = vec![0.0; dim];
    for r in 0..n {
        let w = weights.map_or(1.0, |w| w[r]);
        for (j, v) in row(flat, dim, r).iter().enumerate() {
            d[j] = v - mean[j];
        }
        for a in 0..dim {
            let wa = w * d[a];
            for b in a..dim {
                cov[(a, b)] += wa * d[b];
            }
        }
    }
    for a in 0..dim {
        for b in a..dim {
            cov[(a, b)] /= total;
            cov[(b, a)] = cov[(a, b)];
        }
    }
    (mean, cov)
}

/// Effective sample size of a scalar series via Geyer's initial positive
/// sequence estimator of the integrated autocorrelation time.
pub fn effective_sample_size(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 4 {
        return n as f64;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return n as f64;
    }
    let acf = |lag: usize| -> f64 {
        let mut s = 0.0;
        for t in 0..n - lag {
            s += (series[t] - mean) * (series[t + lag] - mean);
        }
        s / (n as f64 * var)
    };
    let mut tau = -1.0;
    let mut lag = 0;
    let max_lag = n / 2;
    while lag + 1 < max_lag {
        let pair = acf(lag) + acf(lag + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    let tau = tau.max(1.0);
    (n as f64 / tau).min(n as f64)
}
