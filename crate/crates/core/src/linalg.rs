//! Dense helpers for the small nonnegative matrices produced by block graphs.

use crate::error::{Error, Result};

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Square {
    n: usize,
    data: Vec<f64>,
}

impl Square {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    fn apply(&self, x: &[f64], shift: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + shift * x[i];
        }
    }

    fn apply_transpose(&self, x: &[f64], shift: f64, out: &mut [f64]) {
        out.iter_mut().zip(x).for_each(|(o, xi)| *o = shift * xi);
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
    }
}

/// Perron root and positive eigenvectors of an irreducible nonnegative matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Perron {
    pub value: f64,
    /// Right eigenvector, normalized to unit sum.
    pub right: Vec<f64>,
    /// Left eigenvector, normalized so that `left · right = 1`.
    pub left: Vec<f64>,
}

pub const PERRON_TOLERANCE: f64 = 1e-13;
pub const PERRON_MAX_ITERATIONS: usize = 100_000;

/// Power iteration from the all-ones vector. Imprimitive matrices make the
/// plain iteration oscillate; those are retried on `M + I`, which has the same
/// eigenvectors and is primitive whenever `M` is irreducible.
pub fn perron(matrix: &Square) -> Result<Perron> {
    let (value, right) = match power_iterate(matrix, 0.0, false) {
        Some(found) => found,
        None => power_iterate(matrix, 1.0, false)
            .ok_or(Error::EigenNotConverged { iterations: 2 * PERRON_MAX_ITERATIONS })?,
    };
    let (_, mut left) = match power_iterate(matrix, 0.0, true) {
        Some(found) => found,
        None => power_iterate(matrix, 1.0, true)
            .ok_or(Error::EigenNotConverged { iterations: 2 * PERRON_MAX_ITERATIONS })?,
    };
    let dot: f64 = left.iter().zip(&right).map(|(l, r)| l * r).sum();
    left.iter_mut().for_each(|l| *l /= dot);
    Ok(Perron { value, right, left })
}

fn power_iterate(matrix: &Square, shift: f64, transpose: bool) -> Option<(f64, Vec<f64>)> {
    let n = matrix.dim();
    let mut x = vec![1.0 / n as f64; n];
    let mut y = vec![0.0; n];
    for _ in 0..PERRON_MAX_ITERATIONS {
        if transpose {
            matrix.apply_transpose(&x, shift, &mut y);
        } else {
            matrix.apply(&x, shift, &mut y);
        }
        let total: f64 = y.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return None;
        }
        y.iter_mut().for_each(|v| *v /= total);
        let scale = y.iter().cloned().fold(0.0, f64::max);
        let change = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut y);
        if change <= PERRON_TOLERANCE * scale {
            // x sums to one, so the eigenvalue is the sum of M x.
            if transpose {
                matrix.apply_transpose(&x, shift, &mut y);
            } else {
                matrix.apply(&x, shift, &mut y);
            }
            let value = y.iter().sum::<f64>() - shift;
            if x.iter().all(|&v| v > 0.0) {
                return Some((value, x));
            }
            return None;
        }
    }
    None
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Square, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.dim();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a.get(i, col).abs().total_cmp(&a.get(j, col).abs()))?;
        if a.get(pivot, col).abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                let tmp = a.get(col, k);
                a.set(col, k, a.get(pivot, k));
                a.set(pivot, k, tmp);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let factor = a.get(row, col) / a.get(col, col);
            if factor != 0.0 {
                for k in col..n {
                    a.set(row, k, a.get(row, k) - factor * a.get(col, k));
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a.get(row, k) * x[k]).sum();
        x[row] = (b[row] - tail) / a.get(row, row);
    }
    Some(x)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}
