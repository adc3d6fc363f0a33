//! Scenario file schema (JSON) and its translation into core structures.
//!
//! A scenario names a stratified set (catalog name or inline strata),
//! the pairs and base points to check, the conditions, probe-family and
//! tolerance overrides, the density configuration, and optional expected
//! outcomes per check.

use serde::Deserialize;
use stratcheck_core::expr::parse;
use stratcheck_core::geom::GraphLayout;
use stratcheck_core::probes::{FamilyConfig, LimitConfig};
use stratcheck_core::regularity::{Condition, ConditionTolerances};
use stratcheck_core::strata::{
    catalog, DomainBox, Interval, StratifiedSet, Stratum, StratumKind,
};

#[derive(Debug)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "scenario error at `{}`: {}", self.path, self.message)
    }
}

impl std::error::Error for SchemaError {}

fn err(path: &str, message: impl Into<String>) -> SchemaError {
    SchemaError { path: path.to_string(), message: message.into() }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub set: SetSpec,
    #[serde(default)]
    pub pairs: Vec<(String, String)>,
    #[serde(default)]
    pub basepoints: Vec<Vec<f64>>,
    #[serde(default)]
    pub conditions: Vec<String>,
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub tolerances: Option<ToleranceSpec>,
    #[serde(default)]
    pub density: Option<DensitySpec>,
    #[serde(default)]
    pub expect: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SetSpec {
    Catalog(String),
    Inline(InlineSet),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSet {
    pub name: String,
    pub ambient_dim: usize,
    pub strata: Vec<InlineStratum>,
    pub pairs: Vec<(String, String)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineStratum {
    pub name: String,
    pub kind: String,
    #[serde(default)]
    pub expr: Option<String>,
    #[serde(default)]
    pub params: Option<Vec<String>>,
    #[serde(default)]
    pub domain: Option<Vec<IntervalSpec>>,
    /// Ambient axes of the parameters followed by the value axis, e.g.
    /// [0, 2, 1] for a graph y = h(x, z) in (x, y, z) order.
    #[serde(default)]
    pub layout: Option<Vec<usize>>,
    #[serde(default)]
    pub basis: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub offset: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSpec {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub lo_open: bool,
    #[serde(default)]
    pub hi_open: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default)]
    pub rays: Option<Vec<f64>>,
    #[serde(default)]
    pub powers: Option<Vec<f64>>,
    #[serde(default)]
    pub flats: Option<FlatSpec>,
    #[serde(default)]
    pub sigmas: Option<Vec<f64>>,
    #[serde(default)]
    pub mirror: Option<bool>,
    #[serde(default)]
    pub t0: Option<f64>,
    #[serde(default)]
    pub ratio: Option<f64>,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub logmag_floor: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatSpec {
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default)]
    pub converge_tol: Option<f64>,
    #[serde(default)]
    pub bounded_cap: Option<f64>,
    #[serde(default)]
    pub diverge_threshold: Option<f64>,
    #[serde(default)]
    pub zero_tol: Option<f64>,
    #[serde(default)]
    pub rint_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    /// Stratum carrying the measure; defaults to the Y of the first pair.
    #[serde(default)]
    pub stratum: Option<String>,
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default, rename = "N")]
    pub samples: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Fully resolved scenario, ready to execute.
#[derive(Debug)]
pub struct Scenario {
    pub set: StratifiedSet,
    pub pairs: Vec<(String, String)>,
    pub basepoints: Vec<Vec<f64>>,
    pub conditions: Vec<CheckKind>,
    pub family: FamilyConfig,
    pub tolerances: ConditionTolerances,
    pub density_stratum: Option<String>,
    pub density_grid: Vec<f64>,
    pub density_samples: u64,
    pub density_seed: u64,
    pub expect: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckKind {
    Condition(Condition),
    N,
    Npf,
    C1,
    Density,
}

impl CheckKind {
    pub fn parse_name(s: &str) -> Option<CheckKind> {
        match s {
            "n" => Some(CheckKind::N),
            "npf" => Some(CheckKind::Npf),
            "c1" => Some(CheckKind::C1),
            "density" => Some(CheckKind::Density),
            other => Condition::parse_name(other).map(CheckKind::Condition),
        }
    }

    pub fn name(&self) -> String {
        match self {
            CheckKind::Condition(c) => c.to_string(),
            CheckKind::N => "n".into(),
            CheckKind::Npf => "npf".into(),
            CheckKind::C1 => "c1".into(),
            CheckKind::Density => "density".into(),
        }
    }
}

fn build_inline(spec: &InlineSet) -> Result<StratifiedSet, SchemaError> {
    let mut strata = Vec::new();
    for (i, s) in spec.strata.iter().enumerate() {
        let path = format!("set.strata[{i}]");
        let stratum = match s.kind.as_str() {
            "graph" | "region" => {
                let text = s.expr.as_ref().ok_or_else(|| err(&path, "missing `expr`"))?;
                let expr = parse(text).map_err(|e| err(&path, format!("expr: {e}")))?;
                let params = s
                    .params
                    .clone()
                    .ok_or_else(|| err(&path, "missing `params`"))?;
                let domain_spec =
                    s.domain.as_ref().ok_or_else(|| err(&path, "missing `domain`"))?;
                if domain_spec.len() != params.len() {
                    return Err(err(&path, "domain/params length mismatch"));
                }
                let domain = DomainBox {
                    intervals: domain_spec
                        .iter()
                        .map(|iv| Interval {
                            lo: iv.lo,
                            hi: iv.hi,
                            lo_open: iv.lo_open,
                            hi_open: iv.hi_open,
                        })
                        .collect(),
                };
                let layout_spec =
                    s.layout.as_ref().ok_or_else(|| err(&path, "missing `layout`"))?;
                if layout_spec.len() != params.len() + 1 {
                    return Err(err(&path, "layout must list param axes then the value axis"));
                }
                let layout = GraphLayout {
                    ambient: spec.ambient_dim,
                    param_axes: layout_spec[..params.len()].to_vec(),
                    value_axis: layout_spec[params.len()],
                };
                let dim = params.len() + if s.kind == "region" { 1 } else { 0 };
                let kind = if s.kind == "region" {
                    StratumKind::Region { bound: expr, params, domain, layout }
                } else {
                    StratumKind::Graph { expr, params, domain, layout }
                };
                Stratum { name: s.name.clone(), kind, dim }
            }
            "affine" => {
                let basis = s.basis.clone().ok_or_else(|| err(&path, "missing `basis`"))?;
                let offset = s
                    .offset
                    .clone()
                    .unwrap_or_else(|| vec![0.0; spec.ambient_dim]);
                let dim = basis.len();
                Stratum {
                    name: s.name.clone(),
                    kind: StratumKind::Affine { basis, offset },
                    dim,
                }
            }
            other => return Err(err(&path, format!("unknown kind `{other}`"))),
        };
        strata.push(stratum);
    }
    let mut set = StratifiedSet {
        name: spec.name.clone(),
        ambient_dim: spec.ambient_dim,
        strata,
        pairs: vec![],
    };
    for (j, (y, x)) in spec.pairs.iter().enumerate() {
        let yi = set
            .stratum_index(y)
            .map_err(|e| err(&format!("set.pairs[{j}]"), e.to_string()))?;
        let xi = set
            .stratum_index(x)
            .map_err(|e| err(&format!("set.pairs[{j}]"), e.to_string()))?;
        set.pairs.push((yi, xi));
    }
    set.validate().map_err(|e| err("set", e.to_string()))?;
    Ok(set)
}

pub fn resolve(file: ScenarioFile) -> Result<Scenario, SchemaError> {
    let set = match &file.set {
        SetSpec::Catalog(name) => catalog(name).map_err(|e| err("set", e.to_string()))?,
        SetSpec::Inline(inline) => build_inline(inline)?,
    };

    // pairs default to the set's declared pairs
    let pairs: Vec<(String, String)> = if file.pairs.is_empty() {
        set.pairs
            .iter()
            .map(|&(y, x)| (set.strata[y].name.clone(), set.strata[x].name.clone()))
            .collect()
    } else {
        for (j, (y, x)) in file.pairs.iter().enumerate() {
            let yi = set
                .stratum_index(y)
                .map_err(|e| err(&format!("pairs[{j}]"), e.to_string()))?;
            let xi = set
                .stratum_index(x)
                .map_err(|e| err(&format!("pairs[{j}]"), e.to_string()))?;
            if !set.pairs.contains(&(yi, xi)) {
                return Err(err(&format!("pairs[{j}]"), "pair not declared in the set"));
            }
        }
        file.pairs.clone()
    };

    let basepoints = if file.basepoints.is_empty() {
        vec![vec![0.0; set.ambient_dim]]
    } else {
        for (j, b) in file.basepoints.iter().enumerate() {
            if b.len() != set.ambient_dim {
                return Err(err(
                    &format!("basepoints[{j}]"),
                    format!("expected {} coordinates", set.ambient_dim),
                ));
            }
        }
        file.basepoints.clone()
    };

    let mut conditions = Vec::new();
    for (j, c) in file.conditions.iter().enumerate() {
        match CheckKind::parse_name(c) {
            Some(k) => conditions.push(k),
            None => {
                return Err(err(&format!("conditions[{j}]"), format!("unknown check `{c}`")))
            }
        }
    }
    if conditions.is_empty() {
        conditions = vec![
            CheckKind::Condition(Condition::A),
            CheckKind::Condition(Condition::B),
            CheckKind::Condition(Condition::R),
            CheckKind::N,
            CheckKind::Npf,
        ];
    }

    let mut family = FamilyConfig::default();
    if let Some(f) = &file.family {
        if let Some(v) = &f.rays {
            family.rays = v.clone();
        }
        if let Some(v) = &f.powers {
            family.powers = v.clone();
        }
        if let Some(fl) = &f.flats {
            family.flat_c = fl.c.clone();
            family.flat_q = fl.q.clone();
        }
        if let Some(v) = &f.sigmas {
            family.sigmas = v.clone();
        }
        if let Some(v) = f.mirror {
            family.mirror = v;
        }
        if let Some(v) = f.t0 {
            family.t0 = v;
        }
        if let Some(v) = f.ratio {
            if !(0.0 < v && v < 1.0) {
                return Err(err("family.ratio", "must lie in (0,1)"));
            }
            family.ratio = v;
        }
        if let Some(v) = f.count {
            family.count = v.min(60);
        }
        if let Some(v) = f.logmag_floor {
            family.logmag_floor = v;
        }
    }

    let mut tolerances = ConditionTolerances::default();
    if let Some(t) = &file.tolerances {
        let mut limit = LimitConfig::default();
        if let Some(v) = t.converge_tol {
            limit.converge_tol = v;
        }
        if let Some(v) = t.bounded_cap {
            limit.bounded_cap = v;
        }
        if let Some(v) = t.diverge_threshold {
            limit.diverge_threshold = v;
        }
        tolerances.limit = limit;
        if let Some(v) = t.zero_tol {
            tolerances.zero_tol = v;
        }
        if let Some(v) = t.rint_tol {
            tolerances.rint_tol = v;
        }
    }

    let density = file.density.as_ref();
    let density_grid = density
        .and_then(|d| d.grid.clone())
        .unwrap_or_else(stratcheck_core::density::default_u_grid);
    if density_grid.len() < 5 {
        return Err(err("density.grid", "needs at least 5 u values"));
    }
    let density_samples = density.and_then(|d| d.samples).unwrap_or(1_000_000);
    let density_seed = density.and_then(|d| d.seed).unwrap_or(51966);
    let density_stratum = density.and_then(|d| d.stratum.clone());
    if let Some(name) = &density_stratum {
        set.stratum(name).map_err(|e| err("density.stratum", e.to_string()))?;
    }

    // expectations must reference defined checks
    for name in file.expect.keys() {
        let base = name.split('[').next().unwrap_or(name);
        if CheckKind::parse_name(base).is_none() {
            return Err(err(&format!("expect.{name}"), "unknown check name"));
        }
    }

    Ok(Scenario {
        set,
        pairs,
        basepoints,
        conditions,
        family,
        tolerances,
        density_stratum,
        density_grid,
        density_samples,
        density_seed,
        expect: file.expect,
    })
}

pub fn load(path: &std::path::Path) -> Result<Scenario, SchemaError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| err(&path.display().to_string(), e.to_string()))?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| {
        // serde points at line/col; surface the missing-field name when given
        err("(document)", e.to_string())
    })?;
    resolve(file)
}
