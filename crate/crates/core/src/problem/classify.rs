//! Grid search plus projected Newton refinement deciding whether the maximum
//! is interior or sits on exactly one face.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derivatives::Differentiator;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, without_axis};
use crate::problem::optimize::maximize_in_box;
use crate::problem::{BoxDomain, ScalarField};

/// Gradient magnitude treated as zero.
pub const CRITICAL_TOL: f64 = 1e-8;

/// Two grid values this close count as a tie.
pub const TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaximumKind {
    InteriorA,
    BoundaryB,
}

impl MaximumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MaximumKind::InteriorA => "interior_a",
            MaximumKind::BoundaryB => "boundary_b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySide {
    Lower,
    Upper,
}

/// The binding face of a boundary maximum, in local coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryFace {
    pub axis: usize,
    pub side: BoundarySide,
}

impl BoundaryFace {
    /// `+1` when the inward normal is `+e_axis`, `-1` otherwise.
    pub fn inward_sign(&self) -> f64 {
        match self.side {
            BoundarySide::Lower => 1.0,
            BoundarySide::Upper => -1.0,
        }
    }

    pub fn coordinate(&self, domain: &BoxDomain) -> f64 {
        match self.side {
            BoundarySide::Lower => domain.lower()[self.axis],
            BoundarySide::Upper => domain.upper()[self.axis],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub kind: MaximumKind,
    pub x_star: Vec<f64>,
    pub value: f64,
    pub boundary: Option<BoundaryFace>,
    /// Inward directional derivative (negative) in the boundary case.
    pub inward_derivative: Option<f64>,
    /// Faces touched by the maximizer on which the derivative vanishes.
    pub tangential_contacts: Vec<usize>,
}

/// Evaluates `f` on the nested grid of `domain`, in lexicographic order.
pub(crate) fn grid_values(f: &ScalarField, domain: &BoxDomain, res: usize) -> Vec<(Vec<f64>, f64)> {
    let points: Vec<Vec<f64>> = domain.grid_points(res).collect();
    points.into_par_iter().map(|p| {
        let v = f.eval(&p);
        (p, v)
    }).collect()
}

/// Classifies the maximum of `f` over `domain`; both in the box's local frame.
pub fn classify_field(f: &ScalarField, domain: &BoxDomain, grid_res: usize) -> Result<Classification> {
    if grid_res < 8 {
        return Err(Error::Precondition(format!("grid_res {grid_res} < 8")));
    }
    let m = domain.dim();
    let values = grid_values(f, domain, grid_res);
    if let Some((p, _)) = values.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Evaluation(p.clone()));
    }
    let (best, best_val) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, (_, v))| if *v > bv { (i, *v) } else { (bi, bv) });
    let side = grid_res + 1;
    let index_of = |flat: usize| -> Vec<usize> {
        let mut idx = vec![0; m];
        let mut r = flat;
        for a in (0..m).rev() {
            idx[a] = r % side;
            r /= side;
        }
        idx
    };
    let best_idx = index_of(best);
    for (i, (p, v)) in values.iter().enumerate() {
        if i != best && *v >= best_val - TIE_TOL {
            let idx = index_of(i);
            let adjacent = idx.iter().zip(&best_idx).all(|(a, b)| a.abs_diff(*b) <= 1);
            if !adjacent {
                return Err(Error::NonUniqueMaximum(format!(
                    "grid values at {:?} and {:?} agree within {TIE_TOL:e}",
                    values[best].0, p
                )));
            }
        }
    }

    let start = values[best].0.clone();
    let refined = maximize_in_box(f, domain, &start, &[])?;
    let x = refined.point;
    let diff = Differentiator::for_region(f, domain);
    let g = diff.gradient(&x)?;
    let h = diff.hessian(&x)?;

    let mut binding = Vec::new();
    let mut contacts = Vec::new();
    for a in 0..m {
        let at_lo = x[a] <= domain.lower()[a];
        let at_hi = x[a] >= domain.upper()[a];
        if !(at_lo || at_hi) {
            continue;
        }
        let outward = if at_lo { -g[a] } else { g[a] };
        if outward > CRITICAL_TOL {
            let side = if at_lo { BoundarySide::Lower } else { BoundarySide::Upper };
            binding.push(BoundaryFace { axis: a, side });
        } else if outward.abs() <= CRITICAL_TOL {
            contacts.push(a);
        } else {
            return Err(Error::AmbiguousClassification(format!(
                "refinement stopped on face {a} at {x:?} with inward-pointing ascent"
            )));
        }
    }

    match binding.len() {
        0 => {
            if !contacts.is_empty() {
                return Err(Error::AmbiguousClassification(format!(
                    "maximizer {x:?} touches faces {contacts:?} with vanishing normal derivative"
                )));
            }
            if g.amax() > CRITICAL_TOL {
                return Err(Error::AmbiguousClassification(format!(
                    "interior candidate {x:?} has gradient norm {:e}",
                    g.norm()
                )));
            }
            let eig = symmetric_eigenvalues(&h);
            if eig.iter().any(|&e| e >= 0.0) {
                return Err(Error::Definiteness(eig));
            }
            Ok(Classification {
                kind: MaximumKind::InteriorA,
                x_star: x,
                value: refined.value,
                boundary: None,
                inward_derivative: None,
                tangential_contacts: contacts,
            })
        }
        1 => {
            let face = binding[0];
            let tangent_grad = (0..m).filter(|&a| a != face.axis).map(|a| g[a].abs()).fold(0.0, f64::max);
            if tangent_grad > CRITICAL_TOL {
                return Err(Error::AmbiguousClassification(format!(
                    "tangential gradient {tangent_grad:e} on face {} at {x:?}",
                    face.axis
                )));
            }
            let eig = symmetric_eigenvalues(&without_axis(&h, face.axis));
            if eig.iter().any(|&e| e >= 0.0) {
                return Err(Error::Definiteness(eig));
            }
            Ok(Classification {
                kind: MaximumKind::BoundaryB,
                inward_derivative: Some(face.inward_sign() * g[face.axis]),
                x_star: x,
                value: refined.value,
                boundary: Some(face),
                tangential_contacts: contacts,
            })
        }
        k => Err(Error::AmbiguousClassification(format!(
            "maximizer {x:?} lies on {k} binding faces; at most one is supported"
        ))),
    }
}
