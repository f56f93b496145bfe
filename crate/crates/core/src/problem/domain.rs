use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{orthogonality_defect, Matrix, Vector};

/// Axis-aligned box `[lower, upper]` in local coordinates `u`, placed in
/// the world by one global rotation: `x = R u`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    rotation: Matrix,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidProblem(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::InvalidProblem(format!("box axis {i}: need lower < upper, got [{l}, {u}]")));
            }
        }
        let m = lower.len();
        Ok(BoxDomain {
            lower,
            upper,
            rotation: Matrix::identity(m, m),
        })
    }

    /// Shorthand for the cube `[lo, hi]^m`.
    pub fn cube(m: usize, lo: f64, hi: f64) -> Result<Self> {
        BoxDomain::new(vec![lo; m], vec![hi; m])
    }

    pub fn with_rotation(mut self, rotation: Matrix) -> Result<Self> {
        let m = self.dim();
        if rotation.nrows() != m || rotation.ncols() != m {
            return Err(Error::InvalidProblem(format!("rotation must be {m}x{m}")));
        }
        let defect = orthogonality_defect(&rotation);
        if defect > 1e-12 {
            return Err(Error::InvalidProblem(format!("rotation is not orthogonal (defect {defect:e})")));
        }
        self.rotation = rotation;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn rotation(&self) -> &Matrix {
        &self.rotation
    }

    pub fn is_rotated(&self) -> bool {
        self.rotation != Matrix::identity(self.dim(), self.dim())
    }

    pub fn edge(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn min_edge(&self) -> f64 {
        (0..self.dim()).map(|i| self.edge(i)).fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.edge(i)).product()
    }

    /// Membership in local coordinates (closed box, with relative slack `tol`).
    pub fn contains_local(&self, u: &[f64], tol: f64) -> bool {
        u.iter().enumerate().all(|(i, &v)| {
            let s = tol * self.edge(i);
            v >= self.lower[i] - s && v <= self.upper[i] + s
        })
    }

    /// Whether `other` (same local frame) lies inside this box.
    pub fn contains_box(&self, other: &BoxDomain, tol: f64) -> bool {
        other.dim() == self.dim()
            && (0..self.dim()).all(|i| {
                let s = tol * self.edge(i);
                other.lower[i] >= self.lower[i] - s && other.upper[i] <= self.upper[i] + s
            })
    }

    pub fn clamp_local(&self, u: &mut [f64]) {
        for (i, v) in u.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }

    pub fn to_world(&self, u: &[f64]) -> Vec<f64> {
        (&self.rotation * Vector::from_column_slice(u)).iter().copied().collect()
    }

    pub fn to_local(&self, x: &[f64]) -> Vec<f64> {
        (self.rotation.transpose() * Vector::from_column_slice(x)).iter().copied().collect()
    }

    /// Same bounds, identity rotation: the box as seen in its own frame.
    pub fn local_frame(&self) -> BoxDomain {
        BoxDomain::new(self.lower.clone(), self.upper.clone()).expect("bounds already validated")
    }

    /// Euclidean distance from `u` to the box (zero inside).
    pub fn distance_to(&self, u: &[f64]) -> f64 {
        u.iter()
            .enumerate()
            .map(|(i, &v)| {
                let d = (self.lower[i] - v).max(v - self.upper[i]).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Nested grid with `res` intervals per axis (`res + 1` points), visited in
    /// lexicographic order.
    pub fn grid_points(&self, res: usize) -> GridIter<'_> {
        GridIter::new(self, res)
    }

    pub(crate) fn serde_repr(&self) -> BoxRepr {
        let m = self.dim();
        BoxRepr {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            rotation: self.is_rotated().then(|| {
                (0..m).map(|i| (0..m).map(|j| self.rotation[(i, j)]).collect()).collect()
            }),
        }
    }
}

/// Serialized form of a box; also the config-file syntax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRepr {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Row-major rotation; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<f64>>>,
}

impl BoxRepr {
    pub fn to_domain(&self) -> Result<BoxDomain> {
        let b = BoxDomain::new(self.lower.clone(), self.upper.clone())?;
        match &self.rotation {
            None => Ok(b),
            Some(rows) => {
                let m = b.dim();
                if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                    return Err(Error::InvalidProblem(format!("rotation must be {m}x{m}")));
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                b.with_rotation(Matrix::from_row_slice(m, m, &flat))
            }
        }
    }
}

impl Serialize for BoxDomain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.serde_repr().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoxDomain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        BoxRepr::deserialize(d)?.to_domain().map_err(serde::de::Error::custom)
    }
}

pub struct GridIter<'a> {
    domain: &'a BoxDomain,
    res: usize,
    index: Vec<usize>,
    done: bool,
}

impl<'a> GridIter<'a> {
    fn new(domain: &'a BoxDomain, res: usize) -> Self {
        GridIter {
            domain,
            res: res.max(1),
            index: vec![0; domain.dim()],
            done: false,
        }
    }
}

impl Iterator for GridIter<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.done {
            return None;
        }
        let d = self.domain;
        let point = self
            .index
            .iter()
            .enumerate()
            .map(|(i, &k)| grid_coord(d.lower[i], d.upper[i], k, self.res))
            .collect();
        let mut axis = self.index.len();
        loop {
            if axis == 0 {
                self.done = true;
                break;
            }
            axis -= 1;
            self.index[axis] += 1;
            if self.index[axis] <= self.res {
                break;
            }
            self.index[axis] = 0;
        }
        Some(point)
    }
}

/// Grid node `k` of `res` intervals on `[lo, hi]`, exact at both ends.
pub(crate) fn grid_coord(lo: f64, hi: f64, k: usize, res: usize) -> f64 {
    if k == res {
        hi
    } else {
        lo + (hi - lo) * (k as f64 / res as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inverted_bounds() {
        assert!(BoxDomain::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn rejects_non_orthogonal_rotation() {
        let b = BoxDomain::cube(2, 0.0, 1.0).unwrap();
        assert!(b.with_rotation(Matrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0])).is_err());
    }

    #[test]
    fn grid_is_nested_under_doubling() {
        let b = BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 3.0]).unwrap();
        let coarse: Vec<_> = b.grid_points(4).collect();
        let fine: Vec<_> = b.grid_points(8).collect();
        assert_eq!(coarse.len(), 25);
        assert_eq!(fine.len(), 81);
        for p in &coarse {
            assert!(fine.iter().any(|q| q == p), "{p:?} missing from refined grid");
        }
    }

    #[test]
    fn world_local_round_trip() {
        let (c, s) = (0.7f64.cos(), 0.7f64.sin());
        let b = BoxDomain::cube(2, 0.0, 1.0)
            .unwrap()
            .with_rotation(Matrix::from_row_slice(2, 2, &[c, -s, s, c]))
            .unwrap();
        let u = [0.3, 0.9];
        let back = b.to_local(&b.to_world(&u));
        assert!((back[0] - u[0]).abs() < 1e-15 && (back[1] - u[1]).abs() < 1e-15);
    }

    #[test]
    fn serde_round_trip_keeps_rotation() {
        let r = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let b = BoxDomain::cube(2, 0.0, 1.0).unwrap().with_rotation(r).unwrap();
        let json = serde_json::to_string(&b).unwrap();
        let back: BoxDomain = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
    }
}
