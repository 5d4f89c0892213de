//! Restarted GMRES for `(I - L) x = b` and its transpose.

use super::operator::TransferMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative residual `‖b - (I - L) x‖ / ‖b‖` to reach.
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-12,
            restart: 60,
            max_iterations: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Direct,
    Transpose,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `out = x - L x` (or `x - Lᵀ x`).
fn apply_shifted(l: &TransferMatrix, side: Side, x: &[f64], out: &mut [f64]) {
    match side {
        Side::Direct => l.apply(x, out),
        Side::Transpose => l.apply_transpose(x, out),
    }
    for (o, xi) in out.iter_mut().zip(x) {
        *o = xi - *o;
    }
}

fn gmres(
    l: &TransferMatrix,
    side: Side,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = l.dim;
    assert_eq!(b.len(), n, "right-hand side has the wrong length");
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let m = cfg.restart.max(1);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut iterations = 0;

    loop {
        apply_shifted(l, side, &x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        let residual = beta / b_norm;
        if residual <= cfg.tolerance {
            return Ok((
                x,
                SolveStats {
                    iterations,
                    residual,
                },
            ));
        }
        if iterations >= cfg.max_iterations || !residual.is_finite() {
            return Err(Error::NoConvergence {
                iterations,
                residual,
                spectral_radius: spectral_radius(l, 200),
            });
        }

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..m {
            apply_shifted(l, side, &basis[k], &mut w);
            // Modified Gram-Schmidt, repeated once for stability.
            for _ in 0..2 {
                for (j, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    h[j][k] += c;
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                }
            }
            let h_next = norm(&w);
            h[k + 1][k] = h_next;

            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let rho = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / rho;
            sn[k] = h[k + 1][k] / rho;
            h[k][k] = rho;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];

            iterations += 1;
            k_used = k + 1;
            // Aim a little below the target; the restart checks the true residual.
            if g[k + 1].abs() / b_norm <= 0.1 * cfg.tolerance
                || h_next == 0.0
                || iterations >= cfg.max_iterations
            {
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }

        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut()
                .zip(&basis[j])
                .for_each(|(xi, vi)| *xi += yj * vi);
        }
    }
}

/// Solves `(I - L) x = b`.
pub fn solve_with(
    l: &TransferMatrix,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveStats)> {
    gmres(l, Side::Direct, b, cfg)
}

/// Solves `(I - L)ᵀ x = b`.
pub fn solve_transpose_with(
    l: &TransferMatrix,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveStats)> {
    gmres(l, Side::Transpose, b, cfg)
}

/// Power-iteration estimate of the spectral radius of a non-negative `L`.
pub fn spectral_radius(l: &TransferMatrix, iterations: usize) -> f64 {
    let n = l.dim;
    if n == 0 {
        return 0.0;
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut y = vec![0.0; n];
    let mut ratio = 0.0;
    for _ in 0..iterations.max(1) {
        l.apply(&x, &mut y);
        let s: f64 = y.iter().map(|v| v.abs()).sum();
        let prev: f64 = x.iter().map(|v| v.abs()).sum();
        ratio = s / prev;
        if s == 0.0 {
            return 0.0;
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / s;
        }
    }
    ratio
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TransferMatrix {
        TransferMatrix::from_triplets(
            3,
            &[
                (1, 0, 0.5),
                (2, 0, 0.3),
                (0, 1, 0.9),
                (2, 1, 0.05),
                (0, 2, 0.2),
                (1, 2, 0.6),
            ],
        )
    }

    fn dense_solve(l: &TransferMatrix, b: &[f64], transpose: bool) -> Vec<f64> {
        let n = l.dim;
        let mut a = nalgebra::DMatrix::<f64>::identity(n, n);
        for c in 0..n {
            for (r, v) in l.column(c) {
                if transpose {
                    a[(c, r)] -= v;
                } else {
                    a[(r, c)] -= v;
                }
            }
        }
        a.lu()
            .solve(&nalgebra::DVector::from_column_slice(b))
            .unwrap()
            .iter()
            .copied()
            .collect()
    }

    #[test]
    fn matches_dense_solution() {
        let l = small();
        let b = [1.0, 0.25, -0.5];
        let cfg = SolverConfig {
            restart: 2,
            ..SolverConfig::default()
        };
        let (x, stats) = solve_with(&l, &b, &cfg).unwrap();
        let (xt, _) = solve_transpose_with(&l, &b, &cfg).unwrap();
        assert!(stats.residual <= 1e-12);
        for (got, want) in x.iter().zip(dense_solve(&l, &b, false)) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        for (got, want) in xt.iter().zip(dense_solve(&l, &b, true)) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn zero_operator_is_identity() {
        let l = TransferMatrix::zero(4);
        let b = [0.1, 0.2, 0.3, 0.4];
        let (x, _) = solve_with(&l, &b, &SolverConfig::default()).unwrap();
        for (xi, bi) in x.iter().zip(b) {
            assert!((xi - bi).abs() < 1e-15);
        }
    }

    #[test]
    fn spectral_radius_of_scaled_permutation() {
        let l = TransferMatrix::from_triplets(3, &[(1, 0, 0.8), (2, 1, 0.8), (0, 2, 0.8)]);
        assert!((spectral_radius(&l, 300) - 0.8).abs() < 1e-9);
    }

    #[test]
    fn non_contracting_operator_reports_radius() {
        let l = TransferMatrix::from_triplets(2, &[(1, 0, 1.0), (0, 1, 1.0)]);
        let cfg = SolverConfig {
            max_iterations: 50,
            ..SolverConfig::default()
        };
        match solve_with(&l, &[1.0, 0.0], &cfg) {
            Err(Error::NoConvergence {
                spectral_radius, ..
            }) => assert!((spectral_radius - 1.0).abs() < 1e-9),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}
