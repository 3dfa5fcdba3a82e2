//! Small dense numeric kernels: K×K SPD solves and Euclidean projection onto
//! the probability simplex.

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Adds `scale * x xᵀ` into the row-major `k×k` matrix `a`.
pub fn add_outer(a: &mut [f64], x: &[f64], scale: f64) {
    let k = x.len();
    for i in 0..k {
        let xi = scale * x[i];
        for j in 0..k {
            a[i * k + j] += xi * x[j];
        }
    }
}

/// Row-major `k×k` matrix with `diag` on the diagonal.
pub fn scaled_identity(k: usize, diag: f64) -> Vec<f64> {
    let mut a = vec![0.0; k * k];
    for i in 0..k {
        a[i * k + i] = diag;
    }
    a
}

pub fn mat_vec(a: &[f64], x: &[f64]) -> Vec<f64> {
    let k = x.len();
    (0..k).map(|i| dot(&a[i * k..(i + 1) * k], x)).collect()
}

/// Solves `A x = rhs` for a symmetric positive-definite row-major `A` using a
/// Cholesky factorization. `context` names the caller in error messages.
pub fn solve_spd_in(a: &[f64], rhs: &[f64], context: &str) -> Result<Vec<f64>> {
    let k = rhs.len();
    if a.len() != k * k {
        return Err(Error::InvalidArgument(format!(
            "{context}: matrix has {} entries, expected {}",
            a.len(),
            k * k
        )));
    }
    if a.iter().chain(rhs).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("solve_spd"));
    }
    for i in 0..k {
        for j in 0..i {
            let (x, y) = (a[i * k + j], a[j * k + i]);
            if (x - y).abs() > 1e-10 * (1.0 + x.abs().max(y.abs())) {
                return Err(Error::NotSymmetric {
                    update: context.to_string(),
                });
            }
        }
    }

    // lower-triangular factor, row-major
    let mut l = vec![0.0; k * k];
    for j in 0..k {
        let mut d = a[j * k + j];
        for p in 0..j {
            d -= l[j * k + p] * l[j * k + p];
        }
        if !(d > 0.0) {
            return Err(Error::SingularSystem {
                update: context.to_string(),
            });
        }
        let d = d.sqrt();
        l[j * k + j] = d;
        for i in (j + 1)..k {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p];
            }
            l[i * k + j] = s / d;
        }
    }

    let mut y = vec![0.0; k];
    for i in 0..k {
        let mut s = rhs[i];
        for p in 0..i {
            s -= l[i * k + p] * y[p];
        }
        y[i] = s / l[i * k + i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = y[i];
        for p in (i + 1)..k {
            s -= l[p * k + i] * x[p];
        }
        x[i] = s / l[i * k + i];
    }
    Ok(x)
}

pub fn solve_spd(a: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    solve_spd_in(a, rhs, "solve_spd")
}

/// Euclidean projection onto `{x : x ≥ 0, Σx = 1}` by sort-and-threshold.
pub fn project_to_simplex(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::EmptyInput("project_to_simplex"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("project_to_simplex"));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if s - t > 0.0 {
            tau = t;
        }
    }
    let mut out: Vec<f64> = x.iter().map(|&v| (v - tau).max(0.0)).collect();
    // absorb rounding drift so the sum is 1 to machine precision
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        for v in &mut out {
            *v /= total;
        }
    }
    Ok(out)
}
