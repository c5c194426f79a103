//! Dense kernels for rendered truncations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const POWER_ITERATIONS: usize = 200;
pub const POWER_TOL: f64 = 1e-9;
/// Default cap on rendered window sizes.
pub const DEFAULT_WINDOW_CAP: usize = 4096;

/// Certified `[lo, hi]` bracket for a norm or seminorm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormInterval {
    pub lo: f64,
    pub hi: f64,
}

impl NormInterval {
    pub fn new(lo: f64, hi: f64) -> NormInterval {
        NormInterval { lo: lo.max(0.0), hi: hi.max(lo.max(0.0)) }
    }

    pub fn exact(v: f64) -> NormInterval {
        NormInterval::new(v, v)
    }

    pub fn zero() -> NormInterval {
        NormInterval::exact(0.0)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Intersection of two certified brackets for the same quantity.
    pub fn meet(&self, other: &NormInterval) -> NormInterval {
        let lo = self.lo.max(other.lo);
        NormInterval::new(lo, self.hi.min(other.hi).max(lo))
    }
}

/// Index window `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Window> {
        if lo > hi {
            return Err(Error::Config(format!("window [{lo},{hi}] is empty")));
        }
        Ok(Window { lo, hi })
    }

    pub fn size(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn check(&self, cap: usize) -> Result<()> {
        if self.size() > cap {
            return Err(Error::WindowTooLarge { size: self.size(), cap });
        }
        Ok(())
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Certified operator norm bracket of a finite matrix.
///
/// Power iteration on `MᵀM` from the normalized all-ones vector. The lower end
/// is `‖Mx‖/‖x‖` for the final iterate. The upper end comes from a dense SVD
/// for moderate sizes, otherwise from the converged value inflated by the
/// residual, and never exceeds the Frobenius norm.
pub fn op_norm(m: &DMatrix<f64>) -> NormInterval {
    let fro = frobenius(m);
    if fro == 0.0 {
        return NormInterval::zero();
    }
    let n = m.ncols();
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_ITERATIONS {
        let y = m * &x;
        let z = m.transpose() * &y;
        let zn = z.norm();
        if zn == 0.0 {
            // start vector in the kernel; restart on a basis vector of the largest column
            let (col, _) = (0..n)
                .map(|j| (j, m.column(j).norm()))
                .fold((0, 0.0), |b, c| if c.1 > b.1 { c } else { b });
            x = DVector::zeros(n);
            x[col] = 1.0;
            continue;
        }
        let next = y.norm_squared();
        residual = (&z - &x * next).norm() / next.max(f64::MIN_POSITIVE);
        x = z / zn;
        let rel = (next - lambda).abs() / next.max(f64::MIN_POSITIVE);
        lambda = next;
        if rel < POWER_TOL {
            converged = true;
            break;
        }
    }
    let lo = (m * &x).norm() / x.norm();
    let mut hi = if converged { lo * (1.0 + POWER_TOL.max(residual.min(1.0))) } else { fro };
    if m.nrows().max(m.ncols()) <= 600 {
        // a dense SVD pins the top singular value to machine precision
        let top = singular_values(m, 1)[0];
        hi = (lo * (1.0 + POWER_TOL)).max(top * (1.0 + 1e-12));
    }
    NormInterval::new(lo, hi.min(fro).max(lo))
}

/// Top-`k` singular values, nonincreasing, zero-padded when `k` exceeds the rank.
pub fn singular_values(m: &DMatrix<f64>, k: usize) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![0.0; k];
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.resize(k.max(s.len()), 0.0);
    s.truncate(k);
    s
}

/// Top right singular vectors (as columns) with their singular values.
pub fn top_singular_vectors(m: &DMatrix<f64>, k: usize) -> Vec<(f64, DVector<f64>)> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let mut pairs: Vec<(f64, DVector<f64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, vt.row(i).transpose()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.truncate(k);
    pairs
}

/// Largest deviation of a Gram matrix from the identity.
pub fn gram_deviation(vectors: &[DVector<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, u) in vectors.iter().enumerate() {
        for (b, v) in vectors.iter().enumerate() {
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((u.dot(v) - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_norm_examples() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5, 1.0 / 3.0]));
        let n = op_norm(&d);
        assert!(n.lo >= 1.0 - 1e-9 && n.hi <= 1.0 + 1e-9 && n.contains(1.0), "{n:?}");
        assert_eq!(op_norm(&DMatrix::zeros(3, 3)), NormInterval::zero());
        let e12 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let n = op_norm(&e12);
        assert!(n.lo >= 1.0 - 1e-9 && n.hi <= 1.0 + 1e-9 && n.contains(1.0), "{n:?}");
    }

    #[test]
    fn singular_value_examples() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0]));
        assert_eq!(singular_values(&d, 2), vec![3.0, 2.0]);
        let e = DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let f = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let r = &f * e.transpose();
        let s = singular_values(&r, 2);
        assert!((s[0] - 1.0).abs() < 1e-12 && s[1].abs() < 1e-12);
        let h = DMatrix::from_diagonal(&DVector::from_fn(100, |i, _| 1.0 / (i + 1) as f64));
        let s = singular_values(&h, 3);
        for (got, want) in s.iter().zip([1.0, 0.5, 1.0 / 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn op_norm_brackets_known_norms() {
        // rank-one f eᵀ has norm ‖e‖‖f‖
        let e = DVector::from_vec(vec![1.0, 2.0, -2.0, 0.5]);
        let f = DVector::from_vec(vec![3.0, 0.0, 4.0, 0.0]);
        let m = &f * e.transpose();
        let want = e.norm() * f.norm();
        let n = op_norm(&m);
        assert!(n.contains(want) || (n.lo - want).abs() < 1e-9 * want, "{n:?} {want}");
        let t = op_norm(&m.transpose());
        assert!((t.lo - n.lo).abs() < 1e-9 * want);
    }

    #[test]
    fn window_cap() {
        let w = Window::new(1, 10).unwrap();
        assert_eq!(w.size(), 10);
        assert!(matches!(w.check(5), Err(Error::WindowTooLarge { size: 10, cap: 5 })));
        assert!(Window::new(3, 1).is_err());
    }
}
