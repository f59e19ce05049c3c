//! Dense row-major matrices with just enough algebra for trace moments.

use matrixmultiply::{dgemm, zgemm, CGemmOption};
use num::complex::Complex64;

/// Scalars with a fast matrix product.
pub trait Entry: Copy + Default + std::ops::Add<Output = Self> + std::ops::Mul<Output = Self> + PartialEq {
    /// `c = a · b` for row-major `a` (m×k) and `b` (k×n).
    fn gemm(m: usize, k: usize, n: usize, a: &[Self], b: &[Self], c: &mut [Self]);
    fn re(self) -> f64;
}

impl Entry for f64 {
    fn gemm(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
        // SAFETY: slices hold m*k, k*n and m*n elements in row-major order.
        unsafe {
            dgemm(m, k, n, 1.0, a.as_ptr(), k as isize, 1, b.as_ptr(), n as isize, 1, 0.0, c.as_mut_ptr(), n as isize, 1);
        }
    }

    fn re(self) -> f64 {
        self
    }
}

impl Entry for Complex64 {
    fn gemm(m: usize, k: usize, n: usize, a: &[Complex64], b: &[Complex64], c: &mut [Complex64]) {
        // SAFETY: Complex64 is repr(C) with layout [f64; 2]; sizes as above.
        unsafe {
            zgemm(
                CGemmOption::Standard,
                CGemmOption::Standard,
                m,
                k,
                n,
                [1.0, 0.0],
                a.as_ptr() as *const [f64; 2],
                k as isize,
                1,
                b.as_ptr() as *const [f64; 2],
                n as isize,
                1,
                [0.0, 0.0],
                c.as_mut_ptr() as *mut [f64; 2],
                n as isize,
                1,
            );
        }
    }

    fn re(self) -> f64 {
        self.re
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

pub type RMatrix = Matrix<f64>;
pub type CMatrix = Matrix<Complex64>;

impl<T: Entry> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::default(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = v;
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        T::gemm(self.rows, self.cols, other.cols, &self.data, &other.data, &mut out.data);
        out
    }

    /// `diag(d) · self`.
    pub fn scale_rows(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.rows);
        let mut out = self.clone();
        for (i, row) in out.data.chunks_mut(self.cols).enumerate() {
            row.iter_mut().for_each(|v| *v = d[i] * *v);
        }
        out
    }

    /// `self · diag(d)`.
    pub fn scale_cols(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.cols);
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.cols) {
            row.iter_mut().zip(d).for_each(|(v, &s)| *v = *v * s);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect() }
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::default(), |acc, i| acc + self.get(i, i))
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> T {
        assert_eq!((self.cols, self.rows), (other.rows, other.cols));
        let mut acc = T::default();
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc = acc + self.get(i, j) * other.get(j, i);
            }
        }
        acc
    }

    /// Normalized traces `tr(X^n)/dim` for `n = 1..=k`, using
    /// `tr(X^{a+b}) = tr(X^a X^b)` to keep the number of products at `⌈k/2⌉ - 1`.
    pub fn normalized_power_traces(&self, k: usize) -> Vec<f64> {
        assert_eq!(self.rows, self.cols, "power traces need a square matrix");
        let dim = self.rows as f64;
        let half = k.div_ceil(2).max(1);
        let mut powers = vec![self.clone()];
        while powers.len() < half {
            let next = powers.last().unwrap().matmul(self);
            powers.push(next);
        }
        (1..=k)
            .map(|n| {
                let t = if n == 1 {
                    self.trace()
                } else {
                    let (a, b) = (n.div_ceil(2), n / 2);
                    powers[a - 1].trace_product(&powers[b - 1])
                };
                t.re() / dim
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_traces_match_direct_products() {
        let m = RMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let t = m.normalized_power_traces(6);
        let mut p = m.clone();
        for n in 1..=6 {
            assert!((p.trace() / 5.0 - t[n - 1]).abs() < 1e-9 * p.trace().abs().max(1.0));
            p = p.matmul(&m);
        }
    }

    #[test]
    fn complex_product() {
        let i = Complex64::new(0.0, 1.0);
        let a = CMatrix::from_fn(2, 3, |r, c| Complex64::new(r as f64, c as f64));
        let b = CMatrix::from_fn(3, 2, |r, c| if r == c { i } else { Complex64::new(1.0, 0.0) });
        let p = a.matmul(&b);
        for r in 0..2 {
            for c in 0..2 {
                let want: Complex64 = (0..3).map(|k| a.get(r, k) * b.get(k, c)).sum();
                assert!((p.get(r, c) - want).norm() < 1e-12);
            }
        }
    }
}
