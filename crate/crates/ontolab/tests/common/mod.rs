//! Independent numerical oracles for the integration suites.
//!
//! Nothing here shares code with the library's solver paths: the
//! eigendecomposition is a cyclic Jacobi iteration on dense matrices, and the
//! exponential is a scaling-and-squaring Taylor sum, both written directly
//! against `Vec<Vec<Complex64>>`.

use num_complex::Complex64;

pub type Dense = Vec<Vec<Complex64>>;

pub fn dense_from_entries(dim: usize, entries: &[(usize, usize, Complex64)]) -> Dense {
    let mut m = vec![vec![Complex64::ZERO; dim]; dim];
    for &(r, c, v) in entries {
        m[r][c] += v;
    }
    m
}

/// Cyclic Jacobi eigensolver for Hermitian matrices. Returns eigenvalues in
/// ascending order with matching eigenvectors, and self-checks the eigenpair
/// residuals against the input matrix.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_hermitian(a: &Dense) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let n = a.len();
    let mut m = a.clone();
    let mut v: Dense = (0..n)
        .map(|i| {
            let mut row = vec![Complex64::ZERO; n];
            row[i] = Complex64::ONE;
            row
        })
        .collect();
    let scale: f64 = a
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(1.0);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[p][q].norm());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                let r = apq.norm();
                if r <= 1e-16 * scale {
                    continue;
                }
                let phi = apq.arg();
                let tau = (m[q][q].re - m[p][p].re) / (2.0 * r);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    -tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let e_pos = Complex64::from_polar(1.0, phi);
                let e_neg = e_pos.conj();
                // columns: col_p' = c col_p + s e^{-i phi} col_q,
                //          col_q' = -s e^{i phi} col_p + c col_q
                for i in 0..n {
                    let (mp, mq) = (m[i][p], m[i][q]);
                    m[i][p] = mp * c + mq * s * e_neg;
                    m[i][q] = -mp * s * e_pos + mq * c;
                    let (vp, vq) = (v[i][p], v[i][q]);
                    v[i][p] = vp * c + vq * s * e_neg;
                    v[i][q] = -vp * s * e_pos + vq * c;
                }
                // rows: row_p' = c row_p + s e^{i phi} row_q,
                //       row_q' = -s e^{-i phi} row_p + c row_q
                for j in 0..n {
                    let (mp, mq) = (m[p][j], m[q][j]);
                    m[p][j] = mp * c + mq * s * e_pos;
                    m[q][j] = -mp * s * e_neg + mq * c;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].re.partial_cmp(&m[j][j].re).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&k| m[k][k].re).collect();
    let eigenvectors: Vec<Vec<Complex64>> = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i][k]).collect())
        .collect();
    for (lambda, vec) in eigenvalues.iter().zip(&eigenvectors) {
        let mut residual = 0.0f64;
        for i in 0..n {
            let mut av = Complex64::ZERO;
            for j in 0..n {
                av += a[i][j] * vec[j];
            }
            residual += (av - vec[i] * *lambda).norm_sqr();
        }
        assert!(
            residual.sqrt() <= 1e-8 * scale,
            "jacobi oracle failed to converge: residual {}",
            residual.sqrt()
        );
    }
    (eigenvalues, eigenvectors)
}

/// `exp(-i t A) v` by scaling-and-squaring Taylor summation on the dense
/// matrix.
#[allow(dead_code)]
pub fn series_expm_apply(a: &Dense, v: &[Complex64], t: f64) -> Vec<Complex64> {
    let n = a.len();
    let norm: f64 = a
        .iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let steps = ((t.abs() * norm / 0.25).ceil() as usize).max(1);
    let dt = t / steps as f64;
    let mut out = v.to_vec();
    for _ in 0..steps {
        let mut term = out.clone();
        let mut acc = out.clone();
        for k in 1..=80u32 {
            let mut next = vec![Complex64::ZERO; n];
            for i in 0..n {
                let mut s = Complex64::ZERO;
                for j in 0..n {
                    s += a[i][j] * term[j];
                }
                next[i] = s * Complex64::new(0.0, -dt) / k as f64;
            }
            let mut magnitude = 0.0;
            for i in 0..n {
                acc[i] += next[i];
                magnitude += next[i].norm_sqr();
            }
            term = next;
            if magnitude.sqrt() < 1e-18 {
                break;
            }
        }
        out = acc;
    }
    out
}

#[allow(dead_code)]
pub fn max_amp_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
