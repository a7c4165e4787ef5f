//! Bounds-checked strided views over `matrixmultiply::dgemm`.

#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    rs: usize,
    cs: usize,
}

impl<'a> View<'a> {
    pub fn new(data: &'a [f64], rows: usize, cols: usize) -> Self {
        Self { data, rows, cols, rs: cols, cs: 1 }
    }

    pub fn t(self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
            ..self
        }
    }

    /// Columns `start..start+len` of a row-major matrix.
    pub fn cols(self, start: usize, len: usize) -> Self {
        assert!(self.cs == 1 && start + len <= self.cols);
        Self {
            data: &self.data[start..],
            cols: len,
            ..self
        }
    }

    fn check(&self) {
        if self.rows > 0 && self.cols > 0 {
            assert!((self.rows - 1) * self.rs + (self.cols - 1) * self.cs < self.data.len());
        }
    }
}

pub(crate) struct ViewMut<'a> {
    data: &'a mut [f64],
    rows: usize,
    cols: usize,
    rs: usize,
}

impl<'a> ViewMut<'a> {
    pub fn new(data: &'a mut [f64], rows: usize, cols: usize) -> Self {
        Self { data, rows, cols, rs: cols }
    }

    /// Columns `start..start+len` of a row-major `rows x total_cols` matrix.
    pub fn cols(data: &'a mut [f64], rows: usize, total_cols: usize, start: usize, len: usize) -> Self {
        assert!(start + len <= total_cols);
        Self {
            data: &mut data[start..],
            rows,
            cols: len,
            rs: total_cols,
        }
    }
}

/// `c = alpha * a * b + beta * c`.
pub(crate) fn gemm(alpha: f64, a: View, b: View, beta: f64, c: ViewMut) {
    assert_eq!(a.cols, b.rows);
    assert_eq!((a.rows, b.cols), (c.rows, c.cols));
    a.check();
    b.check();
    if c.rows > 0 && c.cols > 0 {
        assert!((c.rows - 1) * c.rs + c.cols - 1 < c.data.len());
    }
    if c.rows == 0 || c.cols == 0 {
        return;
    }
    // SAFETY: every index reachable through the strides was bounds-checked above,
    // and `c` is uniquely borrowed.
    unsafe {
        matrixmultiply::dgemm(
            a.rows,
            a.cols,
            b.cols,
            alpha,
            a.data.as_ptr(),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr(),
            b.rs as isize,
            b.cs as isize,
            beta,
            c.data.as_mut_ptr(),
            c.rs as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                c[i * n + j] = (0..k).map(|p| a[i * k + p] * b[p * n + j]).sum();
            }
        }
        c
    }

    #[test]
    fn matches_naive_with_transposes_and_column_blocks() {
        let a: Vec<f64> = (0..12).map(|v| v as f64 - 3.5).collect();
        let b: Vec<f64> = (0..20).map(|v| (v as f64).sin()).collect();
        let mut c = vec![0.0; 15];
        gemm(1.0, View::new(&a, 3, 4), View::new(&b, 4, 5), 0.0, ViewMut::new(&mut c, 3, 5));
        let want = naive(&a, &b, 3, 4, 5);
        for (x, y) in c.iter().zip(&want) {
            assert!((x - y).abs() < 1e-12);
        }
        // a^T stored as 4x3.
        let at: Vec<f64> = (0..12).map(|i| a[(i % 3) * 4 + i / 3]).collect();
        let mut c2 = vec![0.0; 15];
        gemm(1.0, View::new(&at, 4, 3).t(), View::new(&b, 4, 5), 0.0, ViewMut::new(&mut c2, 3, 5));
        assert_eq!(c, c2);
        // Column block 1..3 of b.
        let mut c3 = vec![0.0; 6];
        gemm(1.0, View::new(&a, 3, 4), View::new(&b, 4, 5).cols(1, 2), 0.0, ViewMut::new(&mut c3, 3, 2));
        for i in 0..3 {
            for j in 0..2 {
                assert!((c3[i * 2 + j] - want[i * 5 + j + 1]).abs() < 1e-12);
            }
        }
    }
}
