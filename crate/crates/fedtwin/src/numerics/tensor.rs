//! Dense 2-D tensor of `f64`, the universal numeric carrier.

use crate::error::{Error, Result};

/// A dense row-major matrix of 64-bit floats.
///
/// `data.len() == rows * cols` always holds; constructors enforce it and no
/// operation can break it.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    /// Creates a tensor from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape(format!(
                "tensor dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "data length {} does not match shape {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Tensor { rows, cols, data })
    }

    /// All-zero tensor of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "tensor dimensions must be positive");
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix of size `n`.
    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// One row as a slice.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// Elementwise sum; shapes must match.
    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape() != other.shape() {
            return Err(Error::shape(format!(
                "add: shapes {}x{} and {}x{} differ",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Tensor {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Adds `scale * other` into `self`; shapes must match.
    pub fn add_scaled(&mut self, other: &Tensor, scale: f64) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(format!(
                "add_scaled: shapes {}x{} and {}x{} differ",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
        Ok(())
    }

    /// Multiplies every element in place.
    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Standard matrix product. Requires `a.cols == b.rows`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.cols != b.rows {
        return Err(Error::shape(format!(
            "matmul: {}x{} incompatible with {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Tensor::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b.data[k * b.cols..(k + 1) * b.cols];
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    Ok(out)
}

/// Elementwise logistic sigmoid, same shape.
pub fn sigmoid(x: &Tensor) -> Tensor {
    let data = x.data.iter().map(|&v| sigmoid_scalar(v)).collect();
    Tensor {
        rows: x.rows,
        cols: x.cols,
        data,
    }
}

/// Elementwise hyperbolic tangent, same shape.
pub fn tanh_act(x: &Tensor) -> Tensor {
    let data = x.data.iter().map(|&v| v.tanh()).collect();
    Tensor {
        rows: x.rows,
        cols: x.cols,
        data,
    }
}

#[inline]
pub fn sigmoid_scalar(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

// Vector helpers used by the recurrent layers. Shapes are validated by the
// callers once per sequence, so these assert rather than return errors.

/// `out = m * v` where `v` is a column vector given as a slice.
pub fn matvec(m: &Tensor, v: &[f64]) -> Vec<f64> {
    assert_eq!(m.cols, v.len(), "matvec: {}x{} with vec {}", m.rows, m.cols, v.len());
    let mut out = vec![0.0; m.rows];
    for (i, o) in out.iter_mut().enumerate() {
        let row = &m.data[i * m.cols..(i + 1) * m.cols];
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(v) {
            acc += a * b;
        }
        *o = acc;
    }
    out
}

/// `out += m^T * v`.
pub fn matvec_transpose_acc(m: &Tensor, v: &[f64], out: &mut [f64]) {
    assert_eq!(m.rows, v.len(), "matvec_transpose: {}x{} with vec {}", m.rows, m.cols, v.len());
    assert_eq!(m.cols, out.len());
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0.0 {
            continue;
        }
        let row = &m.data[i * m.cols..(i + 1) * m.cols];
        for (o, a) in out.iter_mut().zip(row) {
            *o += a * vi;
        }
    }
}

/// Rank-one update `m += a * b^T` (outer product accumulate).
pub fn outer_acc(m: &mut Tensor, a: &[f64], b: &[f64]) {
    assert_eq!(m.rows, a.len(), "outer_acc rows");
    assert_eq!(m.cols, b.len(), "outer_acc cols");
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        let row = &mut m.data[i * m.cols..(i + 1) * m.cols];
        for (o, &bv) in row.iter_mut().zip(b) {
            *o += ai * bv;
        }
    }
}

/// Accumulates a vector into the first column of a column tensor (biases).
pub fn col_acc(m: &mut Tensor, v: &[f64]) {
    assert_eq!(m.rows, v.len(), "col_acc rows");
    assert_eq!(m.cols, 1, "col_acc expects a column tensor");
    for (o, &x) in m.data.iter_mut().zip(v) {
        *o += x;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent naive triple-loop product used as the oracle.
    fn matmul_oracle(a: &Tensor, b: &Tensor) -> Tensor {
        let mut out = Tensor::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for k in 0..a.cols() {
                    acc += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    #[test]
    fn matmul_identity() {
        let b = Tensor::from_vec(2, 2, vec![5.0, 6.0, 7.0, 8.0]).unwrap();
        let out = matmul(&Tensor::identity(2), &b).unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn matmul_zeros() {
        let a = Tensor::zeros(2, 3);
        let b = Tensor::from_vec(3, 4, (0..12).map(|v| v as f64).collect()).unwrap();
        let out = matmul(&a, &b).unwrap();
        assert_eq!(out, Tensor::zeros(2, 4));
    }

    #[test]
    fn matmul_two_by_two() {
        let a = Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::from_vec(2, 2, vec![5.0, 6.0, 7.0, 8.0]).unwrap();
        let out = matmul(&a, &b).unwrap();
        // Frozen from the triple-loop oracle.
        assert_eq!(out.data(), &[19.0, 22.0, 43.0, 50.0]);
        assert_eq!(out, matmul_oracle(&a, &b));
    }

    #[test]
    fn matmul_dimension_mismatch_names_both_shapes() {
        let a = Tensor::zeros(2, 3);
        let b = Tensor::zeros(4, 2);
        let err = matmul(&a, &b).unwrap_err().to_string();
        assert!(err.contains("2x3") && err.contains("4x2"), "{err}");
    }

    #[test]
    fn sigmoid_at_zero_and_symmetry() {
        let x = Tensor::from_vec(1, 1, vec![0.0]).unwrap();
        assert_eq!(sigmoid(&x).data()[0], 0.5);

        let x = Tensor::from_vec(1, 1, vec![1.7]).unwrap();
        let neg = Tensor::from_vec(1, 1, vec![-1.7]).unwrap();
        let lhs = sigmoid(&neg).data()[0];
        let rhs = 1.0 - sigmoid(&x).data()[0];
        assert!((lhs - rhs).abs() < 1e-15);
    }

    #[test]
    fn tanh_at_zero() {
        let x = Tensor::from_vec(1, 2, vec![0.0, 0.0]).unwrap();
        assert_eq!(tanh_act(&x).data(), &[0.0, 0.0]);
    }

    #[test]
    fn from_vec_rejects_bad_length() {
        assert!(Tensor::from_vec(2, 2, vec![1.0]).is_err());
        assert!(Tensor::from_vec(0, 2, vec![]).is_err());
    }

    #[test]
    fn matvec_matches_matmul() {
        let m = Tensor::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let v = [1.0, -1.0, 2.0];
        let col = Tensor::from_vec(3, 1, v.to_vec()).unwrap();
        let via_matmul = matmul(&m, &col).unwrap();
        assert_eq!(matvec(&m, &v), via_matmul.data());
    }
}
