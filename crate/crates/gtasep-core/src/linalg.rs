//! Dense matrices, log-scaled LU determinants and diagonal balancing.
//!
//! Kernel matrices arrive with entries spanning hundreds of orders of
//! magnitude, so determinants are computed as `(sign, log|det|)` and the raw
//! entries are kept as `(sign, log|entry|)` until a diagonal similarity has
//! tamed them.

/// Row-major dense matrix.
#[derive(Debug, Clone)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }
}

/// `det(M)` via LU with partial pivoting, accumulated as sign and log of the
/// absolute value so that badly scaled determinants neither overflow nor
/// flush to zero.  Returns `(sign, log_abs)`; a singular matrix reports
/// `(0.0, -inf)`.
pub fn logdet(mut a: Mat) -> (f64, f64) {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut sign = 1.0f64;
    let mut log_abs = 0.0f64;
    for k in 0..n {
        let mut piv = k;
        let mut best = a.get(k, k).abs();
        for i in k + 1..n {
            let v = a.get(i, k).abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        if piv != k {
            for j in 0..n {
                let t = a.get(k, j);
                a.set(k, j, a.get(piv, j));
                a.set(piv, j, t);
            }
            sign = -sign;
        }
        let d = a.get(k, k);
        sign *= d.signum();
        log_abs += d.abs().ln();
        let inv = 1.0 / d;
        for i in k + 1..n {
            let f = a.get(i, k) * inv;
            if f == 0.0 {
                continue;
            }
            a.set(i, k, 0.0);
            for j in k + 1..n {
                let v = a.get(i, j) - f * a.get(k, j);
                a.set(i, j, v);
            }
        }
    }
    (sign, log_abs)
}

/// `det(I - A)` evaluated as a plain float; well defined because gap
/// probabilities are O(1) even when `A`'s entries are not.
pub fn det_i_minus(a: &Mat) -> f64 {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let e = if i == j { 1.0 } else { 0.0 };
            m.set(i, j, e - a.get(i, j));
        }
    }
    let (sign, log_abs) = logdet(m);
    if sign == 0.0 {
        0.0
    } else {
        sign * log_abs.exp()
    }
}

/// Log-magnitude matrix with separate signs; entries may be exact zeros
/// (`log_abs == -inf`).
#[derive(Debug, Clone)]
pub struct LogMat {
    pub n: usize,
    pub log_abs: Vec<f64>,
    pub sign: Vec<f64>,
}

impl LogMat {
    pub fn zeros(n: usize) -> Self {
        LogMat {
            n,
            log_abs: vec![f64::NEG_INFINITY; n * n],
            sign: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, log_abs: f64, sign: f64) {
        self.log_abs[i * self.n + j] = log_abs;
        self.sign[i * self.n + j] = sign;
    }

    /// Accumulate `value = sign * exp(log_abs)` onto entry `(i,j)` in scaled
    /// arithmetic.
    pub fn add(&mut self, i: usize, j: usize, log_abs: f64, sign: f64) {
        let idx = i * self.n + j;
        let (la, sa) = (self.log_abs[idx], self.sign[idx]);
        if sa == 0.0 || la == f64::NEG_INFINITY {
            self.log_abs[idx] = log_abs;
            self.sign[idx] = sign;
            return;
        }
        if sign == 0.0 || log_abs == f64::NEG_INFINITY {
            return;
        }
        let top = la.max(log_abs);
        let sum = sa * (la - top).exp() + sign * (log_abs - top).exp();
        if sum == 0.0 {
            self.log_abs[idx] = f64::NEG_INFINITY;
            self.sign[idx] = 0.0;
        } else {
            self.log_abs[idx] = top + sum.abs().ln();
            self.sign[idx] = sum.signum();
        }
    }

    /// Diagonal balancing exponents `d` such that `A' = D A D^{-1}` with
    /// `D = diag(e^{d_i})` has row and column maxima of comparable size.
    /// A diagonal similarity leaves `det(I - A)` unchanged, so this is free
    /// conditioning.  `seed` can pre-load exponents (e.g. the `z_c^x`
    /// conjugation of the saddle-point analysis); balancing then only mops up
    /// the remainder.
    pub fn balance(&self, seed: Option<&[f64]>) -> Vec<f64> {
        let n = self.n;
        let mut d = match seed {
            Some(s) => s.to_vec(),
            None => vec![0.0; n],
        };
        for _ in 0..60 {
            let mut worst = 0.0f64;
            for i in 0..n {
                let mut row_max = f64::NEG_INFINITY;
                let mut col_max = f64::NEG_INFINITY;
                for j in 0..n {
                    let r = self.log_abs[i * n + j];
                    if r > f64::NEG_INFINITY {
                        row_max = row_max.max(r + d[i] - d[j]);
                    }
                    let c = self.log_abs[j * n + i];
                    if c > f64::NEG_INFINITY {
                        col_max = col_max.max(c + d[j] - d[i]);
                    }
                }
                if row_max == f64::NEG_INFINITY || col_max == f64::NEG_INFINITY {
                    continue;
                }
                let step = (row_max - col_max) / 2.0;
                d[i] -= step;
                worst = worst.max(step.abs());
            }
            if worst < 0.05 {
                break;
            }
        }
        d
    }

    /// Exponentiate into a plain matrix after applying balancing exponents.
    /// Returns `None` if some balanced entry would still overflow, which
    /// signals genuinely untamable conditioning rather than a recoverable
    /// state.
    pub fn to_mat(&self, d: &[f64]) -> Option<Mat> {
        let n = self.n;
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let idx = i * n + j;
                let l = self.log_abs[idx] + d[i] - d[j];
                if l > 690.0 {
                    return None;
                }
                m.data[idx] = self.sign[idx] * l.exp();
            }
        }
        Some(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logdet_matches_direct() {
        let mut a = Mat::zeros(3, 3);
        let vals = [[2.0, 1.0, 0.5], [0.1, -3.0, 1.0], [4.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                a.set(i, j, vals[i][j]);
            }
        }
        // direct cofactor expansion
        let det = 2.0 * (-3.0 * 1.0 - 1.0 * 0.0) - 1.0 * (0.1 * 1.0 - 1.0 * 4.0)
            + 0.5 * (0.1 * 0.0 + 3.0 * 4.0);
        let (s, l) = logdet(a);
        assert!((s * l.exp() - det).abs() < 1e-12);
    }

    #[test]
    fn det_i_minus_rank_one() {
        // A = u v^T  =>  det(I - A) = 1 - v^T u
        let u = [0.3, -1.2, 0.7];
        let v = [2.0, 0.25, -0.5];
        let mut a = Mat::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                a.set(i, j, u[i] * v[j]);
            }
        }
        let dot: f64 = u.iter().zip(v.iter()).map(|(x, y)| x * y).sum();
        assert!((det_i_minus(&a) - (1.0 - dot)).abs() < 1e-12);
    }

    #[test]
    fn balancing_preserves_determinant() {
        // Entries with a strong rank-one log profile, like conjugated kernels.
        let n = 5;
        let mut lm = LogMat::zeros(n);
        let mut plain = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = 0.3 / (1.0 + (i as f64 - j as f64).powi(2));
                let scale = 20.0 * (i as f64 - j as f64);
                lm.set(i, j, v.ln() + scale, 1.0);
                plain.set(i, j, v); // the d_i = -20 i similarity of the scaled matrix
            }
        }
        let d = lm.balance(None);
        let m = lm.to_mat(&d).unwrap();
        let got = det_i_minus(&m);
        let want = det_i_minus(&plain);
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}
