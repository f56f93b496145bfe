//! Declarative problem definitions (TOML/JSON).
//!
//! A problem is either a catalog name or an inline table:
//!
//! ```toml
//! [problem]
//! name = "tilted"
//! lower = [0.0, -1.0]
//! upper = [1.0, 1.0]
//! f = { kind = "poly", terms = [{ coef = -1.0, powers = [1, 0] }, { coef = -0.5, powers = [0, 2] }] }
//! g = { kind = "exp_poly", scale = 1.0, terms = [{ coef = 0.1, powers = [0, 1] }] }
//! sigma = { kind = "poly", terms = [{ coef = 1.0, powers = [0, 1] }] }
//! epsilon = { kind = "power", coef = 1.0, exponent = 0.75 }
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{catalog, BoxRepr, EpsilonExpr, EpsilonSchedule, FieldExpr, ProblemBuilder, ProblemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemDef {
    Named(String),
    Inline(Box<InlineProblem>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineProblem {
    #[serde(default = "inline_name")]
    pub name: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<f64>>>,
    pub f: FieldExpr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<FieldExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<FieldExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonExpr>,
    /// `Ω′` in the box's local frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighborhood: Option<BoxRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_zero: Option<u64>,
}

fn inline_name() -> String {
    "inline".to_string()
}

impl ProblemDef {
    pub fn resolve(&self) -> Result<ProblemSpec> {
        match self {
            ProblemDef::Named(name) => catalog::by_name(name),
            ProblemDef::Inline(p) => p.build(),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            ProblemDef::Named(n) => n,
            ProblemDef::Inline(p) => &p.name,
        }
    }
}

impl InlineProblem {
    pub fn build(&self) -> Result<ProblemSpec> {
        let domain = BoxRepr {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            rotation: self.rotation.clone(),
        }
        .to_domain()?;
        let m = domain.dim();
        let mut b = ProblemBuilder::new(self.name.clone(), domain, self.f.to_field(m)?).description("inline definition");
        if let Some(g) = &self.g {
            b = b.weight(g.to_field(m)?);
        }
        match (&self.sigma, &self.epsilon) {
            (Some(s), Some(e)) => b = b.perturbation(s.to_field(m)?, EpsilonSchedule::from_expr(e)?),
            (None, None) | (None, Some(EpsilonExpr::Zero)) => {}
            (Some(_), None) => return Err(Error::Config("sigma given without epsilon".into())),
            (None, Some(_)) => return Err(Error::Config("epsilon given without sigma".into())),
        }
        if let Some(nb) = &self.neighborhood {
            b = b.neighborhood(nb.to_domain()?);
        }
        if let Some(n0) = self.n_zero {
            b = b.n_zero(n0);
        }
        b.build()
    }
}
