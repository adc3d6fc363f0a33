//! Stratified-set data model and the built-in catalog.
//!
//! Base strata are affine (the catalog always uses the x-axis); higher
//! strata are graphs of expressions over a parameter box, plus one region
//! kind used only by the density module (`0 <= y <= h(x,z)`, `z >= 0`).

use crate::expr::{parse, EvalError, Expr};
use crate::geom::GraphLayout;
use crate::numscale::Scalar;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrataError {
    #[error("unknown catalog name `{0}`")]
    UnknownCatalog(String),
    #[error("stratum `{0}` not found")]
    UnknownStratum(String),
    #[error("invalid pair ({y},{x}): {reason}")]
    InvalidPair { y: String, x: String, reason: String },
    #[error("basepoint not on stratum `{0}`")]
    BasepointOffStratum(String),
    #[error("empty fiber for stratum `{0}`")]
    EmptyFiber(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One-dimensional face of a parameter box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi, lo_open: false, hi_open: false }
    }

    pub fn open_below(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi, lo_open: true, hi_open: true }
    }

    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lo_open { v > self.lo } else { v >= self.lo };
        let below = if self.hi_open { v < self.hi } else { v <= self.hi };
        above && below
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub intervals: Vec<Interval>,
}

impl DomainBox {
    pub fn contains(&self, params: &[f64]) -> bool {
        self.intervals.len() == params.len()
            && self.intervals.iter().zip(params).all(|(i, &p)| i.contains(p))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StratumKind {
    Affine {
        /// Orthonormal basis vectors of the linear part.
        basis: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    Graph {
        expr: Expr,
        params: Vec<String>,
        domain: DomainBox,
        layout: GraphLayout,
    },
    /// Density-only region { z >= 0, 0 <= y(value_axis) <= bound(params) }.
    Region {
        bound: Expr,
        params: Vec<String>,
        domain: DomainBox,
        layout: GraphLayout,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    pub name: String,
    pub kind: StratumKind,
    pub dim: usize,
}

impl Stratum {
    /// Graph value at a parameter point, in the chosen scalar system.
    pub fn graph_value<S: Scalar>(&self, params: &[S]) -> Result<S, StrataError> {
        match &self.kind {
            StratumKind::Graph { expr, params: names, .. }
            | StratumKind::Region { bound: expr, params: names, .. } => {
                let bind: Vec<(&str, S)> =
                    names.iter().map(|n| n.as_str()).zip(params.iter().copied()).collect();
                Ok(expr.eval_value(&bind)?)
            }
            StratumKind::Affine { .. } => {
                panic!("graph_value on affine stratum `{}`", self.name)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedSet {
    pub name: String,
    pub ambient_dim: usize,
    pub strata: Vec<Stratum>,
    /// Adjacent pairs (Y, X) with X ⊂ cl(Y), by stratum index.
    pub pairs: Vec<(usize, usize)>,
}

impl StratifiedSet {
    pub fn stratum(&self, name: &str) -> Result<&Stratum, StrataError> {
        self.strata
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| StrataError::UnknownStratum(name.to_string()))
    }

    pub fn stratum_index(&self, name: &str) -> Result<usize, StrataError> {
        self.strata
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| StrataError::UnknownStratum(name.to_string()))
    }

    pub fn validate(&self) -> Result<(), StrataError> {
        for &(y, x) in &self.pairs {
            let (sy, sx) = (&self.strata[y], &self.strata[x]);
            if sx.dim >= sy.dim {
                return Err(StrataError::InvalidPair {
                    y: sy.name.clone(),
                    x: sx.name.clone(),
                    reason: format!("dim X = {} not below dim Y = {}", sx.dim, sy.dim),
                });
            }
            if !matches!(sx.kind, StratumKind::Affine { .. }) {
                return Err(StrataError::InvalidPair {
                    y: sy.name.clone(),
                    x: sx.name.clone(),
                    reason: "base stratum must be affine".into(),
                });
            }
        }
        Ok(())
    }
}

/// Orthogonal retraction onto an affine base stratum.
#[derive(Debug, Clone)]
pub struct Retraction {
    pub basis: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl Retraction {
    pub fn onto(stratum: &Stratum) -> Retraction {
        match &stratum.kind {
            StratumKind::Affine { basis, offset } => {
                Retraction { basis: basis.clone(), offset: offset.clone() }
            }
            _ => panic!("retraction targets must be affine"),
        }
    }

    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        let mut out = self.offset.clone();
        for b in &self.basis {
            let c: f64 =
                p.iter().zip(&self.offset).zip(b).map(|((pi, oi), bi)| (pi - oi) * bi).sum();
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    }

    /// Projection in the curve's scalar system (basis entries are exact
    /// axis coordinates in the catalog, so this stays precise).
    pub fn project_s<S: Scalar>(&self, p: &[S]) -> Vec<S> {
        let mut out: Vec<S> = self.offset.iter().map(|&o| S::from_f64(o)).collect();
        for b in &self.basis {
            let mut c = S::zero();
            for ((pi, oi), bi) in p.iter().zip(&self.offset).zip(b) {
                if *bi != 0.0 {
                    c = c.add(pi.sub(S::from_f64(*oi)).mul(S::from_f64(*bi)));
                }
            }
            for (o, bi) in out.iter_mut().zip(b) {
                if *bi != 0.0 {
                    *o = o.add(c.mul(S::from_f64(*bi)));
                }
            }
        }
        out
    }
}

fn xyz_layout() -> GraphLayout {
    GraphLayout { ambient: 3, param_axes: vec![0, 2], value_axis: 1 }
}

fn x_axis(ambient: usize) -> Stratum {
    let mut e = vec![0.0; ambient];
    e[0] = 1.0;
    Stratum {
        name: "X".into(),
        kind: StratumKind::Affine { basis: vec![e], offset: vec![0.0; ambient] },
        dim: 1,
    }
}

fn graph_stratum(name: &str, expr_text: &str, domain: DomainBox) -> Stratum {
    let expr = parse(expr_text).expect("catalog expression parses");
    Stratum {
        name: name.into(),
        kind: StratumKind::Graph {
            expr,
            params: vec!["x".into(), "z".into()],
            domain,
            layout: xyz_layout(),
        },
        dim: 2,
    }
}

pub const EXPR_G: &str = "exp((x^2+1)*ln(z))";
pub const EXPR_F: &str = "z - z/ln(z) * ln(x + sqrt(x^2 + z^2))";

/// Built-in sets: Sf, Sg, Kg, halfplane, plane_graph_zero, cusp_demo,
/// sine_curve_demo.
pub fn catalog(name: &str) -> Result<StratifiedSet, StrataError> {
    let small_box = DomainBox {
        intervals: vec![Interval::closed(-0.5, 0.5), Interval::open_below(0.0, 0.5)],
    };
    let wide_halfplane = DomainBox {
        intervals: vec![Interval::closed(-2.0, 2.0), Interval::open_below(0.0, 2.0)],
    };
    let set = match name {
        "Sg" => StratifiedSet {
            name: "Sg".into(),
            ambient_dim: 3,
            strata: vec![graph_stratum("W", EXPR_G, small_box), x_axis(3)],
            pairs: vec![(0, 1)],
        },
        "Sf" => StratifiedSet {
            name: "Sf".into(),
            ambient_dim: 3,
            strata: vec![graph_stratum("Y", EXPR_F, small_box), x_axis(3)],
            pairs: vec![(0, 1)],
        },
        "Kg" => {
            let region = Stratum {
                name: "R".into(),
                kind: StratumKind::Region {
                    bound: parse(EXPR_G).unwrap(),
                    params: vec!["x".into(), "z".into()],
                    domain: small_box.clone(),
                    layout: xyz_layout(),
                },
                dim: 3,
            };
            StratifiedSet {
                name: "Kg".into(),
                ambient_dim: 3,
                strata: vec![
                    region,
                    graph_stratum("W", EXPR_G, small_box.clone()),
                    graph_stratum("H", "0*x + 0*z", small_box),
                    x_axis(3),
                ],
                // condition pairs; the region enters densities only
                pairs: vec![(1, 3), (2, 3)],
            }
        }
        "halfplane" => StratifiedSet {
            name: "halfplane".into(),
            ambient_dim: 3,
            strata: vec![graph_stratum("H", "0*x + 0*z", wide_halfplane), x_axis(3)],
            pairs: vec![(0, 1)],
        },
        "plane_graph_zero" => {
            let full = DomainBox {
                intervals: vec![Interval::closed(-2.0, 2.0), Interval::closed(-2.0, 2.0)],
            };
            StratifiedSet {
                name: "plane_graph_zero".into(),
                ambient_dim: 3,
                strata: vec![graph_stratum("P", "0*x + 0*z", full), x_axis(3)],
                pairs: vec![(0, 1)],
            }
        }
        "cusp_demo" => StratifiedSet {
            name: "cusp_demo".into(),
            ambient_dim: 3,
            strata: vec![
                graph_stratum(
                    "C",
                    "z^3 + 0*x",
                    DomainBox {
                        intervals: vec![
                            Interval::closed(-0.5, 0.5),
                            Interval::open_below(0.0, 0.5),
                        ],
                    },
                ),
                x_axis(3),
            ],
            pairs: vec![(0, 1)],
        },
        // Topologist's sine curve in the plane; catalog-only demo, excluded
        // from verdict guarantees (not definable).
        "sine_curve_demo" => {
            let curve = Stratum {
                name: "S".into(),
                kind: StratumKind::Graph {
                    expr: parse("sin(1/x)").unwrap(),
                    params: vec!["x".into()],
                    domain: DomainBox { intervals: vec![Interval::open_below(0.0, 0.5)] },
                    layout: GraphLayout { ambient: 2, param_axes: vec![0], value_axis: 1 },
                },
                dim: 1,
            };
            let seg = Stratum {
                name: "X".into(),
                kind: StratumKind::Affine {
                    basis: vec![vec![0.0, 1.0]],
                    offset: vec![0.0, 0.0],
                },
                dim: 1,
            };
            StratifiedSet {
                name: "sine_curve_demo".into(),
                ambient_dim: 2,
                strata: vec![curve, seg],
                pairs: vec![],
            }
        }
        other => return Err(StrataError::UnknownCatalog(other.to_string())),
    };
    set.validate().expect("catalog sets validate");
    Ok(set)
}

/// Log-spaced fiber sample of a graph stratum over `x0`: parameter distance
/// from `radius` down to `radius * 2^-40`. Stays in standard scalars; the
/// deeper extended-range fibers used by `r_profile` are sampled there.
pub fn sample_fiber(
    set: &StratifiedSet,
    stratum_name: &str,
    x0: &[f64],
    radius: f64,
) -> Result<Vec<Vec<f64>>, StrataError> {
    let stratum = set.stratum(stratum_name)?;
    let (expr, names, domain, layout) = match &stratum.kind {
        StratumKind::Graph { expr, params, domain, layout } => (expr, params, domain, layout),
        _ => {
            return Err(StrataError::InvalidPair {
                y: stratum.name.clone(),
                x: "-".into(),
                reason: "fiber sampling needs a graph stratum".into(),
            })
        }
    };
    // catalog graphs: params (x, z) with the fiber parameterized by z
    let mut out = Vec::new();
    for k in 0..=40u32 {
        let z = radius * (0.5f64).powi(k as i32);
        let params = [x0[layout.param_axes[0]], z];
        if !domain.contains(&params) {
            continue;
        }
        let bind: Vec<(&str, f64)> =
            names.iter().map(|n| n.as_str()).zip(params.iter().copied()).collect();
        // points where the defining formula cancels below f64 resolution
        // are skipped (a measure-negligible sliver near z = 0)
        let y = match expr.eval_value(&bind) {
            Ok(y) => y,
            Err(EvalError::Domain { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        out.push(layout.embed(&params, y));
    }
    if out.is_empty() {
        return Err(StrataError::EmptyFiber(stratum.name.clone()));
    }
    Ok(out)
}
