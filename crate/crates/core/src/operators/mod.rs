//! Operators acting on grid functions.
//!
//! Identifiers: `identity`, `maximal`, `hilbert`, `hilbert_max`, `riesz1`,
//! `riesz2`, `carleson`, `multiplier:<name>` and `commutator:<b>:<T>`.

pub mod bmo;
pub mod carleson;
pub mod kernel;
pub mod maximal;
pub mod multiplier;

use std::fmt;
use std::str::FromStr;

pub use bmo::{bmo_seminorm, commutator, symbol_function};
pub use carleson::{carleson_maximal, default_xi_grid};
pub use kernel::{cz_apply, cz_maximal_truncation, default_eps_list, CZKernel, KernelCheck};
pub use maximal::{maximal, maximal_dense_1d};
pub use multiplier::{apply_multiplier, apply_multiplier_real, hm_check, marcinkiewicz_check, Multiplier, MultiplierClass};

use crate::cube::{enumerate_cubes, finest_scale, CubeFamily};
use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operator {
    Identity,
    Maximal,
    Hilbert,
    HilbertMax,
    Riesz(usize),
    Carleson,
    Multiplier(String),
    Commutator { symbol: String, inner: Box<Operator> },
}

impl FromStr for Operator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "identity" => Operator::Identity,
            "maximal" => Operator::Maximal,
            "hilbert" => Operator::Hilbert,
            "hilbert_max" => Operator::HilbertMax,
            "riesz1" => Operator::Riesz(1),
            "riesz2" => Operator::Riesz(2),
            "carleson" => Operator::Carleson,
            _ => {
                if let Some(name) = s.strip_prefix("multiplier:") {
                    if name.is_empty() {
                        return Err(Error::UnknownIdentifier(s.into()));
                    }
                    Operator::Multiplier(name.into())
                } else if let Some(rest) = s.strip_prefix("commutator:") {
                    let (b, t) = rest.split_once(':').ok_or_else(|| Error::UnknownIdentifier(s.into()))?;
                    Operator::Commutator { symbol: b.into(), inner: Box::new(t.parse()?) }
                } else {
                    return Err(Error::UnknownIdentifier(s.into()));
                }
            }
        })
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operator::Identity => write!(f, "identity"),
            Operator::Maximal => write!(f, "maximal"),
            Operator::Hilbert => write!(f, "hilbert"),
            Operator::HilbertMax => write!(f, "hilbert_max"),
            Operator::Riesz(j) => write!(f, "riesz{j}"),
            Operator::Carleson => write!(f, "carleson"),
            Operator::Multiplier(m) => write!(f, "multiplier:{m}"),
            Operator::Commutator { symbol, inner } => write!(f, "commutator:{symbol}:{inner}"),
        }
    }
}

impl Operator {
    pub fn is_linear(&self) -> bool {
        !matches!(self, Operator::Maximal | Operator::HilbertMax | Operator::Carleson)
    }

    /// Dimension the operator is defined in, if restricted.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            Operator::Hilbert | Operator::HilbertMax | Operator::Carleson => Some(1),
            Operator::Riesz(_) => Some(2),
            Operator::Commutator { inner, .. } => inner.dimension(),
            _ => None,
        }
    }
}

/// Discretization parameters shared by all operators on one grid.
#[derive(Debug, Clone)]
pub struct OperatorContext {
    pub family: CubeFamily,
    pub eps: f64,
    pub eps_list: Vec<f64>,
    pub xi_grid: Vec<f64>,
}

impl OperatorContext {
    /// Family of all closed dyadic cubes from side `2L` down to the finest
    /// scale, `ε = 4h`, doubling truncations from `4h` and 64 frequencies.
    pub fn new(d: &Domain) -> Result<Self> {
        let j_min = 1 - (2.0 * d.half_width()).log2().ceil() as i32;
        Ok(Self {
            family: enumerate_cubes(d, j_min, finest_scale(d))?,
            eps: 4.0 * d.spacing(),
            eps_list: default_eps_list(d),
            xi_grid: default_xi_grid(d),
        })
    }

    pub fn domain(&self) -> &Domain {
        self.family.domain()
    }
}

pub fn apply(op: &Operator, f: &GridFunction, ctx: &OperatorContext) -> Result<GridFunction> {
    let d = f.domain();
    if d != ctx.domain() {
        return Err(Error::InvalidDomain("operator context belongs to another grid".into()));
    }
    if let Some(n) = op.dimension() {
        d.check_dim(n)?;
    }
    match op {
        Operator::Identity => Ok(f.clone()),
        Operator::Maximal => maximal(f, &ctx.family),
        Operator::Hilbert => cz_apply(&CZKernel::hilbert(), f, ctx.eps),
        Operator::HilbertMax => cz_maximal_truncation(&CZKernel::hilbert(), f, &ctx.eps_list),
        Operator::Riesz(j) => cz_apply(&CZKernel::riesz(*j)?, f, ctx.eps),
        Operator::Carleson => carleson_maximal(f, &ctx.eps_list, &ctx.xi_grid),
        Operator::Multiplier(name) => apply_multiplier_real(&Multiplier::named(name, d.n())?, f),
        Operator::Commutator { symbol, inner } => {
            let b = symbol_function(symbol, d)?;
            commutator(&b, |g| apply(inner, g, ctx), inner.is_linear(), &inner.to_string(), f)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers_roundtrip() {
        for id in ["identity", "maximal", "hilbert", "hilbert_max", "riesz1", "riesz2", "carleson", "multiplier:block:2", "commutator:log:hilbert", "commutator:const=1.5:multiplier:hilbert"] {
            let op: Operator = id.parse().unwrap();
            assert_eq!(op.to_string(), id);
        }
        assert!("riesz3".parse::<Operator>().is_err());
        assert!("commutator:log".parse::<Operator>().is_err());
        assert!("multiplier:".parse::<Operator>().is_err());
    }

    #[test]
    fn dispatch_checks_dimension_and_linearity() {
        let d = Domain::new(2, 2.0, 32).unwrap();
        let ctx = OperatorContext::new(&d).unwrap();
        let f = GridFunction::from_fn(d, |x| x[0] * x[1]).unwrap();
        assert!(matches!(apply(&Operator::Hilbert, &f, &ctx), Err(Error::Dimension { .. })));
        assert!(apply(&Operator::Riesz(1), &f, &ctx).is_ok());
        let d1 = Domain::new(1, 4.0, 128).unwrap();
        let ctx1 = OperatorContext::new(&d1).unwrap();
        let g = GridFunction::from_fn(d1, |x| (-x[0] * x[0]).exp()).unwrap();
        let op: Operator = "commutator:x:maximal".parse().unwrap();
        assert_eq!(apply(&op, &g, &ctx1).unwrap_err(), Error::NonLinearOperator("maximal".into()));
        assert!(apply(&"commutator:log:hilbert".parse().unwrap(), &g, &ctx1).is_ok());
        assert_eq!(ctx1.family.j_min(), -2);
    }
}
