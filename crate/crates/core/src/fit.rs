//! Small dense least-squares utilities: Gaussian elimination and Levenberg–Marquardt.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Solves the `n × n` row-major system `a x = b` in place; `None` if singular.
pub fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        let piv =
            (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col] == 0.0 || !a[piv * n + col].is_finite() {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let m = a[row * n + col] / d;
            if m == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= m * a[col * n + k];
            }
            b[row] -= m * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col * n + k] * b[k];
        }
        b[col] = s / a[col * n + col];
    }
    b.iter().all(|v| v.is_finite()).then_some(b)
}

/// Ordinary least squares for `rows · x ≈ y` via column-scaled normal equations.
pub fn lstsq(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let n = rows.first()?.len();
    let mut norm = vec![0.0; n];
    for r in rows {
        for (k, v) in r.iter().enumerate() {
            norm[k] += v * v;
        }
    }
    let norm: Vec<f64> = norm
        .iter()
        .map(|v| if *v > 0.0 { libm::sqrt(*v) } else { 1.0 })
        .collect();
    let mut ata = vec![0.0; n * n];
    let mut aty = vec![0.0; n];
    for (r, yi) in rows.iter().zip(y) {
        for i in 0..n {
            let ri = r[i] / norm[i];
            aty[i] += ri * yi;
            for j in 0..n {
                ata[i * n + j] += ri * r[j] / norm[j];
            }
        }
    }
    let x = solve(ata, aty)?;
    Some(x.iter().zip(&norm).map(|(v, s)| v / s).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when the relative cost decrease of an accepted step falls below this.
    pub ftol: f64,
    /// Stop when every parameter step is below `xtol` times its finite-difference step.
    pub xtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            ftol: 1e-15,
            xtol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub residuals: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Levenberg–Marquardt with a central-difference Jacobian.
///
/// `steps[j]` is the finite-difference step of parameter `j`; it doubles as the
/// natural scale of that parameter.
pub fn levenberg_marquardt<F>(
    mut residuals: F,
    p0: &[f64],
    steps: &[f64],
    opts: LmOptions,
) -> Result<LmResult>
where
    F: FnMut(&[f64], &mut Vec<f64>) -> Result<()>,
{
    let n = p0.len();
    if steps.len() != n || n == 0 {
        return Err(Error::invalid(
            "steps",
            "one finite-difference step per parameter",
        ));
    }
    let mut p = p0.to_vec();
    let mut r = Vec::new();
    residuals(&p, &mut r)?;
    let m = r.len();
    if m < n {
        return Err(Error::InsufficientData { needed: n, got: m });
    }
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let mut cost = sq(&r);
    if !cost.is_finite() {
        return Err(Error::NonFinite("levenberg_marquardt"));
    }
    let mut lambda = 1e-3;
    let mut jac = vec![0.0; m * n];
    let (mut rp, mut rm, mut trial) = (Vec::new(), Vec::new(), Vec::new());
    let mut converged = false;
    let mut iterations = 0;
    'outer: while iterations < opts.max_iter {
        iterations += 1;
        for j in 0..n {
            let h = steps[j];
            let mut q = p.clone();
            q[j] = p[j] + h;
            residuals(&q, &mut rp)?;
            q[j] = p[j] - h;
            residuals(&q, &mut rm)?;
            for i in 0..m {
                jac[i * n + j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let mut jtj = vec![0.0; n * n];
        let mut jtr = vec![0.0; n];
        for i in 0..m {
            let row = &jac[i * n..(i + 1) * n];
            for a in 0..n {
                jtr[a] -= row[a] * r[i];
                for b in a..n {
                    jtj[a * n + b] += row[a] * row[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                jtj[a * n + b] = jtj[b * n + a];
            }
        }
        loop {
            let mut lhs = jtj.clone();
            for a in 0..n {
                let d = jtj[a * n + a];
                lhs[a * n + a] += lambda * if d > 0.0 { d } else { 1.0 };
            }
            let Some(delta) = solve(lhs, jtr.clone()) else {
                lambda *= 10.0;
                if lambda > 1e16 {
                    break 'outer;
                }
                continue;
            };
            let cand: Vec<f64> = p.iter().zip(&delta).map(|(a, b)| a + b).collect();
            residuals(&cand, &mut trial)?;
            let c = sq(&trial);
            if c.is_finite() && c <= cost {
                let small = delta
                    .iter()
                    .zip(steps)
                    .all(|(d, s)| d.abs() <= opts.xtol * s.abs());
                let rel = if cost > 0.0 { (cost - c) / cost } else { 0.0 };
                p = cand;
                core::mem::swap(&mut r, &mut trial);
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                if small || rel < opts.ftol || cost == 0.0 {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // no downhill direction left at machine precision
                converged = true;
                break 'outer;
            }
        }
    }
    Ok(LmResult {
        params: p,
        cost,
        residuals: m,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let x = solve(vec![2.0, 1.0, 1.0, 3.0], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        assert!(solve(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn lstsq_recovers_line() {
        let rows: Vec<Vec<f64>> = (0..10).map(|k| vec![1.0, k as f64]).collect();
        let y: Vec<f64> = (0..10).map(|k| 3.0 - 0.5 * k as f64).collect();
        let x = lstsq(&rows, &y).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-12 && (x[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn lm_fits_exponential() {
        let ts: Vec<f64> = (0..40).map(|k| k as f64 * 0.1).collect();
        let data: Vec<f64> = ts.iter().map(|t| 2.5 * libm::exp(-1.3 * t)).collect();
        let res = levenberg_marquardt(
            |p, out| {
                out.clear();
                out.extend(
                    ts.iter()
                        .zip(&data)
                        .map(|(t, y)| p[0] * libm::exp(-p[1] * t) - y),
                );
                Ok(())
            },
            &[1.0, 0.5],
            &[1e-6, 1e-6],
            LmOptions::default(),
        )
        .unwrap();
        assert!(res.converged);
        assert!((res.params[0] - 2.5).abs() < 1e-8 && (res.params[1] - 1.3).abs() < 1e-8);
    }
}
