//! Dense helpers for the small (m <= 4) matrices and 3-tensors in this crate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Dense `m x m x m` tensor stored in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Tensor3 {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    t.set(i, j, k, f(i, j, k));
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.dim + j) * self.dim + k] = v;
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Trilinear form `t(u, v, w)`.
    pub fn contract(&self, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                let uv = u[i] * v[j];
                for k in 0..d {
                    acc += self.get(i, j, k) * uv * w[k];
                }
            }
        }
        acc
    }

    /// Average over the six index permutations.
    pub fn symmetrized(&self) -> Self {
        Tensor3::from_fn(self.dim, |i, j, k| {
            (self.get(i, j, k)
                + self.get(i, k, j)
                + self.get(j, i, k)
                + self.get(j, k, i)
                + self.get(k, i, j)
                + self.get(k, j, i))
                / 6.0
        })
    }

    /// Largest deviation from permutation symmetry relative to the largest entry.
    pub fn relative_asymmetry(&self) -> f64 {
        let scale = self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let sym = self.symmetrized();
        self.data
            .iter()
            .zip(&sym.data)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
            / scale
    }

    /// Change of basis `T'_{abc} = sum T_{ijk} R_{ia} R_{jb} R_{kc}`.
    pub fn rotated(&self, r: &Matrix) -> Self {
        let d = self.dim;
        Tensor3::from_fn(d, |a, b, c| {
            let mut acc = 0.0;
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        acc += self.get(i, j, k) * r[(i, a)] * r[(j, b)] * r[(k, c)];
                    }
                }
            }
            acc
        })
    }

    /// Drop one index value along every mode.
    pub fn without_axis(&self, axis: usize) -> Self {
        let keep: Vec<usize> = (0..self.dim).filter(|&i| i != axis).collect();
        Tensor3::from_fn(keep.len(), |i, j, k| self.get(keep[i], keep[j], keep[k]))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Tensor3 {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Tensor3) -> Self {
        assert_eq!(self.dim, other.dim);
        Tensor3 {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }
}

pub(crate) fn relative_asymmetry(h: &Matrix) -> f64 {
    let scale = h.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    (h - h.transpose()).amax() / scale
}

pub(crate) fn check_symmetric(h: &Matrix, tol: f64) -> Result<()> {
    if !h.is_square() {
        return Err(Error::Symmetry(f64::INFINITY));
    }
    let asym = relative_asymmetry(h);
    if asym > tol {
        return Err(Error::Symmetry(asym));
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix in ascending order. An empty matrix has none.
pub fn symmetric_eigenvalues(h: &Matrix) -> Vec<f64> {
    if h.nrows() == 0 {
        return Vec::new();
    }
    let sym = (h + h.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Determinant; the empty matrix has determinant one.
pub fn determinant(h: &Matrix) -> f64 {
    if h.nrows() == 0 {
        1.0
    } else {
        h.determinant()
    }
}

/// Submatrix with row and column `axis` removed.
pub fn without_axis(h: &Matrix, axis: usize) -> Matrix {
    h.clone().remove_row(axis).remove_column(axis)
}

pub fn without_axis_vec(v: &Vector, axis: usize) -> Vector {
    v.clone().remove_row(axis)
}

/// Inverse of a symmetric negative-definite matrix's negation, `(-h)^{-1}`.
pub fn negated_inverse(h: &Matrix) -> Result<Matrix> {
    if h.nrows() == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let neg = -h;
    neg.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Definiteness(Vec::new()))
}

/// Max-abs deviation of `r^T r` from the identity.
pub fn orthogonality_defect(r: &Matrix) -> f64 {
    let n = r.nrows();
    (r.transpose() * r - Matrix::identity(n, n)).amax()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_preserves_frobenius_norm() {
        let t = Tensor3::from_fn(2, |i, j, k| (i + 2 * j + 3 * k) as f64);
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let r = Matrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let t2 = t.rotated(&r);
        assert!((t.frobenius_norm() - t2.frobenius_norm()).abs() < 1e-12);
    }

    #[test]
    fn empty_matrix_conventions() {
        let e = Matrix::zeros(0, 0);
        assert_eq!(determinant(&e), 1.0);
        assert!(symmetric_eigenvalues(&e).is_empty());
    }

    #[test]
    fn without_axis_drops_row_and_column() {
        let h = Matrix::from_row_slice(3, 3, &[1., 2., 3., 2., 5., 6., 3., 6., 9.]);
        let r = without_axis(&h, 1);
        assert_eq!(r, Matrix::from_row_slice(2, 2, &[1., 3., 3., 9.]));
    }
}
