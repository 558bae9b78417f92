//! Convex-hull membership as a linear feasibility problem.
//!
//! `target ∈ conv{x_1..x_M}` iff there are weights `w >= 0` with
//! `sum w = 1` and `sum w (x_m - target) = 0`. Phase one of the simplex
//! method (artificial variables, Bland's rule) decides feasibility exactly
//! up to a tolerance.

const TOL: f64 = 1e-9;

/// Whether `target` lies in the convex hull of the row-major `points`.
pub fn in_convex_hull(points: &[f64], dim: usize, target: &[f64]) -> bool {
    assert_eq!(target.len(), dim);
    if dim == 0 {
        return true;
    }
    let m = points.len() / dim;
    if m == 0 {
        return false;
    }
    // Per-coordinate scaling keeps tolerances meaningful across statistics.
    let mut scale = vec![0.0f64; dim];
    for r in 0..m {
        for j in 0..dim {
            scale[j] = scale[j].max((points[r * dim + j] - target[j]).abs());
        }
    }
    for s in scale.iter_mut() {
        if *s == 0.0 {
            *s = 1.0;
        }
    }

    let rows = dim + 1;
    let cols = m + rows;
    // Tableau rows: constraints, each `[coeffs (cols) | rhs]`.
    let width = cols + 1;
    let mut t = vec![0.0f64; rows * width];
    for r in 0..m {
        for j in 0..dim {
            t[j * width + r] = (points[r * dim + j] - target[j]) / scale[j];
        }
        t[dim * width + r] = 1.0;
    }
    for a in 0..rows {
        t[a * width + m + a] = 1.0;
    }
    t[dim * width + cols] = 1.0;
    let mut basis: Vec<usize> = (m..m + rows).collect();

    // Objective: minimise the sum of artificials. Reduced costs of the
    // structural columns are minus the column sums.
    let mut cost = vec![0.0f64; width];
    for a in 0..rows {
        for c in 0..width {
            cost[c] -= t[a * width + c];
        }
    }
    for a in 0..rows {
        cost[m + a] = 0.0;
    }

    let max_iter = 50 * cols + 1000;
    for _ in 0..max_iter {
        // Bland: first improving column.
        let Some(enter) = (0..cols).find(|&c| cost[c] < -TOL) else { break };
        let mut leave = None;
        let mut best = f64::INFINITY;
        for r in 0..rows {
            let a = t[r * width + enter];
            if a > TOL {
                let ratio = t[r * width + cols] / a;
                if ratio < best - TOL
                    || (ratio < best + TOL && leave.is_some_and(|l: usize| basis[r] < basis[l]))
                {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(lr) = leave else { break };
        let piv = t[lr * width + enter];
        for c in 0..width {
            t[lr * width + c] /= piv;
        }
        for r in 0..rows {
            if r != lr {
                let f = t[r * width + enter];
                if f != 0.0 {
                    for c in 0..width {
                        t[r * width + c] -= f * t[lr * width + c];
                    }
                }
            }
        }
        let f = cost[enter];
        for c in 0..width {
            cost[c] -= f * t[lr * width + c];
        }
        basis[lr] = enter;
    }
    // Remaining infeasibility is minus the objective value.
    let infeasibility = -cost[cols];
    infeasibility <= 1e-7
}

/// Checks that `target` is interior to the hull by testing the points
/// `target ± eps * range_j * e_j` for every coordinate `j`. Returns the
/// first failing signed axis (`+1`/`-1` in coordinate `j`) otherwise.
pub fn interior_or_axis(points: &[f64], dim: usize, target: &[f64], eps: f64) -> Result<(), Vec<f64>> {
    let m = points.len().checked_div(dim).unwrap_or(0);
    for j in 0..dim {
        let (lo, hi) = (0..m)
            .map(|r| points[r * dim + j])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let range = if hi > lo { hi - lo } else { 1.0 };
        for sign in [1.0, -1.0] {
            let mut t = target.to_vec();
            t[j] += sign * eps * range;
            if !in_convex_hull(points, dim, &t) {
                let mut axis = vec![0.0; dim];
                axis[j] = sign;
                return Err(axis);
            }
        }
    }
    Ok(())
}
