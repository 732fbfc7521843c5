//! Dense singular value decomposition by one-sided Jacobi rotations.
//!
//! One-sided Jacobi computes small singular values to high relative accuracy,
//! so rank-deficient inputs produce near-zero values on the order of machine
//! epsilon times the largest one rather than its square root.

/// Thin SVD of an `rows x cols` matrix: `A = U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Singular values, descending.
    pub values: Vec<f64>,
    /// Right singular vectors; `right[s]` has length `cols`.
    pub right: Vec<Vec<f64>>,
    /// `A v_s` for every axis, i.e. left singular vectors scaled by `sigma_s`.
    pub scaled_left: Vec<Vec<f64>>,
}

const MAX_SWEEPS: usize = 80;

/// Decomposes a row-major matrix.
///
/// Vector signs are fixed so that the largest-magnitude component of every
/// right singular vector is positive (first such component on ties).
pub fn svd(a: &[f64], rows: usize, cols: usize) -> Svd {
    assert_eq!(a.len(), rows * cols, "matrix buffer size");
    // column-major working copies
    let mut u: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| a[i * cols + j]).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = dot(&u[p], &u[p]);
                let beta = dot(&u[q], &u[q]);
                let gamma = dot(&u[p], &u[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut u, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = u.iter().map(|col| dot(col, col).sqrt()).zip(0..).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut values = Vec::with_capacity(cols);
    let mut right = Vec::with_capacity(cols);
    let mut scaled_left = Vec::with_capacity(cols);
    for (sigma, j) in order {
        let mut vj = std::mem::take(&mut v[j]);
        let mut uj = std::mem::take(&mut u[j]);
        let pivot = vj.iter().enumerate().fold((0, 0.0f64), |best, (i, &x)| {
            if x.abs() > best.1.abs() {
                (i, x)
            } else {
                best
            }
        });
        if pivot.1 < 0.0 {
            vj.iter_mut().for_each(|x| *x = -*x);
            uj.iter_mut().for_each(|x| *x = -*x);
        }
        values.push(sigma);
        right.push(vj);
        scaled_left.push(uj);
    }
    Svd {
        values,
        right,
        scaled_left,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let (cp, cq) = (&mut head[p], &mut tail[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}
