//! Pointwise regularity quantities of adjacent strata pairs and their
//! aggregation into per-condition verdicts.
//!
//! For a graph stratum Y over parameters (x, z) with value axis y, the
//! tangent plane at a point has unit normal n ∝ (h_x, -1, h_z) (in layout
//! order), and with an affine base X every quantity reduces to closed
//! forms in n and the secant y - π(y). Those forms are evaluated in the
//! curve's scalar system, so ratios of sub-underflow magnitudes (flat
//! curves) come out at their true O(1) scale before any conversion to f64.
//!
//! Verdict semantics: a condition FAILS when some probe curve yields a
//! conclusive non-conforming limit; otherwise it HOLDS-ON-FAMILY, which is
//! evidence over the chosen family, not a proof over all definable arcs.

use crate::expr::{EvalError, Expr};
use crate::geom::{self, GraphLayout, Subspace};
use crate::numscale::{dot, vector_norm, NumError, Scalar, XScalar};
use crate::probes::{
    classify_limit, sample_geometric, FamilyConfig, LimitClass, LimitConfig, LimitEstimate,
    ProbeCurve, ScalarSystem,
};
use crate::strata::{DomainBox, Retraction, StrataError, StratifiedSet, StratumKind};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegularityError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Strata(#[from] StrataError),
    #[error(transparent)]
    Probe(#[from] crate::probes::ProbeError),
    #[error("point coincides with its retraction (y = π(y))")]
    DegenerateSecant,
    #[error("no root of the slice equation in the bracket at x = {x}")]
    SliceNoRoot { x: f64 },
    #[error("empty probe family")]
    EmptyFamily,
    #[error("empty fiber sample for r(t)")]
    EmptyProfileFiber,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Condition {
    A,
    BPi,
    B,
    R,
    W,
    Re(f64),
    RInt,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::A => write!(f, "a"),
            Condition::BPi => write!(f, "bpi"),
            Condition::B => write!(f, "b"),
            Condition::R => write!(f, "r"),
            Condition::W => write!(f, "w"),
            Condition::Re(e) => write!(f, "re({e})"),
            Condition::RInt => write!(f, "rint"),
        }
    }
}

impl Condition {
    pub fn parse_name(s: &str) -> Option<Condition> {
        match s {
            "a" => Some(Condition::A),
            "bpi" => Some(Condition::BPi),
            "b" => Some(Condition::B),
            "r" => Some(Condition::R),
            "w" => Some(Condition::W),
            "rint" => Some(Condition::RInt),
            _ => {
                let inner = s.strip_prefix("re(")?.strip_suffix(')')?;
                inner.parse::<f64>().ok().map(Condition::Re)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    HoldsOnFamily,
    Fails { witness: String, limit: f64 },
    Inconclusive,
}

impl Outcome {
    pub fn short(&self) -> &'static str {
        match self {
            Outcome::HoldsOnFamily => "HOLDS_ON_FAMILY",
            Outcome::Fails { .. } => "FAILS",
            Outcome::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Per-curve limit record inside a verdict.
#[derive(Debug, Clone)]
pub struct CurveLimit {
    pub label: String,
    pub estimate: LimitEstimate,
    /// Some(true) conforming, Some(false) witness, None inconclusive.
    pub conforming: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub condition: Condition,
    pub outcome: Outcome,
    pub per_curve: Vec<CurveLimit>,
}

/// Tolerances for verdicts; all overridable per scenario.
#[derive(Debug, Clone, Copy)]
pub struct ConditionTolerances {
    pub limit: LimitConfig,
    /// A Converged limit with |L| at or below this counts as zero for the
    /// limit-must-vanish conditions (a), (bπ), (r).
    pub zero_tol: f64,
    /// Cauchy tolerance on (r_∫) partial integrals.
    pub rint_tol: f64,
}

impl Default for ConditionTolerances {
    fn default() -> Self {
        ConditionTolerances { limit: LimitConfig::default(), zero_tol: 0.05, rint_tol: 1e-3 }
    }
}

/// Which scalar quantity to trace along a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantityKind {
    Alpha,
    Beta,
    Kuo,
    /// Verdier quotient with x = π(y).
    WRetraction,
    /// Verdier quotient with x = the base point.
    WBasepoint,
    Re(f64),
}

/// An adjacent pair (Y, X) anchored at a base point of X.
#[derive(Debug, Clone)]
pub struct PairAtPoint<'a> {
    set: &'a StratifiedSet,
    y: usize,
    x: usize,
    basepoint: Vec<f64>,
}

impl<'a> PairAtPoint<'a> {
    pub fn new(
        set: &'a StratifiedSet,
        y_name: &str,
        x_name: &str,
        basepoint: Vec<f64>,
    ) -> Result<Self, RegularityError> {
        let y = set.stratum_index(y_name)?;
        let x = set.stratum_index(x_name)?;
        if !set.pairs.contains(&(y, x)) {
            return Err(StrataError::InvalidPair {
                y: y_name.into(),
                x: x_name.into(),
                reason: "pair not declared adjacent".into(),
            }
            .into());
        }
        let retraction = Retraction::onto(&set.strata[x]);
        let proj = retraction.project(&basepoint);
        let off2: f64 = basepoint.iter().zip(&proj).map(|(a, b)| (a - b) * (a - b)).sum();
        if off2.sqrt() > 1e-10 {
            return Err(StrataError::BasepointOffStratum(x_name.into()).into());
        }
        Ok(PairAtPoint { set, y, x, basepoint })
    }

    pub fn set(&self) -> &StratifiedSet {
        self.set
    }

    pub fn y_name(&self) -> &str {
        &self.set.strata[self.y].name
    }

    pub fn x_name(&self) -> &str {
        &self.set.strata[self.x].name
    }

    pub fn basepoint(&self) -> &[f64] {
        &self.basepoint
    }

    pub fn retraction(&self) -> Retraction {
        Retraction::onto(&self.set.strata[self.x])
    }

    pub fn graph(&self) -> (&Expr, &[String], &DomainBox, &GraphLayout) {
        match &self.set.strata[self.y].kind {
            StratumKind::Graph { expr, params, domain, layout } => {
                (expr, params, domain, layout)
            }
            _ => panic!("pair quantities need a graph stratum"),
        }
    }

    fn x_basis(&self) -> &[Vec<f64>] {
        match &self.set.strata[self.x].kind {
            StratumKind::Affine { basis, .. } => basis,
            _ => unreachable!("validated: base strata are affine"),
        }
    }

    /// x-parameter of the base point in the graph's parameter plane.
    pub fn base_param(&self) -> f64 {
        let (_, _, _, layout) = self.graph();
        self.basepoint[layout.param_axes[0]]
    }

    pub fn family(&self, config: &FamilyConfig) -> Vec<ProbeCurve> {
        let (_, _, domain, _) = self.graph();
        crate::probes::standard_family(domain, self.base_param(), config)
    }

    /// All pointwise quantities at a parameter point, in scalar system S.
    fn sample<S: Scalar>(&self, xp: S, zp: S) -> Result<PointQuantities, RegularityError> {
        let (expr, names, _, layout) = self.graph();
        let bind: Vec<(&str, S)> = vec![(names[0].as_str(), xp), (names[1].as_str(), zp)];
        let jet = expr.eval_jet(&bind)?;

        // normal of the tangent plane: grad on param axes, -1 on value axis
        let mut normal = vec![S::zero(); layout.ambient];
        for (i, &ax) in layout.param_axes.iter().enumerate() {
            normal[ax] = jet.gradient[i];
        }
        normal[layout.value_axis] = S::from_f64(-1.0);
        let n_norm = vector_norm(&normal);

        // alpha = || P_X n^ ||
        let mut comps: Vec<S> = Vec::new();
        for b in self.x_basis() {
            let mut c = S::zero();
            for (bi, ni) in b.iter().zip(&normal) {
                if *bi != 0.0 {
                    c = c.add(ni.mul(S::from_f64(*bi)));
                }
            }
            comps.push(c);
        }
        let alpha = vector_norm(&comps).div(n_norm)?;

        // ambient point and secant to the retraction
        let point = layout.embed(&[xp, zp], jet.value);
        let retraction = self.retraction();
        let pi_p = retraction.project_s(&point);
        let diff: Vec<S> = point.iter().zip(&pi_p).map(|(a, b)| a.sub(*b)).collect();
        let diff_norm = vector_norm(&diff);
        if diff_norm.is_zero() {
            return Err(RegularityError::DegenerateSecant);
        }

        // beta = |<diff, n>| / (||diff|| ||n||)
        let mut dn = S::zero();
        for (d, nc) in diff.iter().zip(&normal) {
            dn = dn.add(d.mul(*nc));
        }
        let beta = dn.abs().div(diff_norm.mul(n_norm))?;

        // distances to the base point
        let base: Vec<S> = self.basepoint.iter().map(|&b| S::from_f64(b)).collect();
        let to_base: Vec<S> = point.iter().zip(&base).map(|(a, b)| a.sub(*b)).collect();
        let to_base_norm = vector_norm(&to_base);
        let pi_to_base: Vec<S> = pi_p.iter().zip(&base).map(|(a, b)| a.sub(*b)).collect();
        let pi_to_base_norm = vector_norm(&pi_to_base);

        // ln of a nonnegative scalar, carried as f64 so (r^e) can be formed
        // for any exponent without re-evaluating the jet
        let log_of = |v: S| -> Option<f64> {
            if v.is_zero() {
                None
            } else {
                v.abs().ln().ok().map(|l| l.to_f64())
            }
        };
        let w_pi = alpha.div(diff_norm)?;
        Ok(PointQuantities {
            alpha: alpha.to_f64(),
            beta: beta.to_f64(),
            kuo: to_base_norm.mul(alpha).div(diff_norm)?.to_f64(),
            w_retraction: w_pi.to_f64(),
            w_basepoint: if to_base_norm.is_zero() {
                f64::INFINITY
            } else {
                alpha.div(to_base_norm)?.to_f64()
            },
            re_parts: FrozenReParts {
                pi_dist_log: log_of(pi_to_base_norm),
                alpha_over_diff_log: log_of(w_pi),
            },
        })
    }

    /// Quantity sequence along a probe curve, dispatched on its scalar
    /// system. Values are converted to f64 after all ratios are formed.
    /// The series truncates at the first domain error: past that point the
    /// defining formula is no longer evaluable at float resolution (e.g.
    /// catastrophic cancellation in ln(x + sqrt(x²+z²)) for x < 0), and
    /// the valid prefix carries the evidence.
    pub fn quantity_series(
        &self,
        curve: &ProbeCurve,
        kind: QuantityKind,
    ) -> Result<Vec<f64>, RegularityError> {
        let mut out = Vec::with_capacity(curve.ts.len());
        for &t in &curve.ts {
            let q = match curve.system {
                ScalarSystem::Standard => {
                    let (x, z) = curve.param_at::<f64>(t);
                    self.sample::<f64>(x, z)
                }
                ScalarSystem::Extended => {
                    let (x, z) = curve.param_at::<XScalar>(t);
                    self.sample::<XScalar>(x, z)
                }
            };
            match q {
                Ok(q) => out.push(q.get(kind)),
                Err(RegularityError::Eval(EvalError::Domain { .. })) => break,
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// α at a parameter point (standard scalars).
    pub fn alpha_at(&self, xp: f64, zp: f64) -> Result<f64, RegularityError> {
        Ok(self.sample::<f64>(xp, zp)?.alpha)
    }

    pub fn beta_at(&self, xp: f64, zp: f64) -> Result<f64, RegularityError> {
        Ok(self.sample::<f64>(xp, zp)?.beta)
    }

    pub fn kuo_ratio_at(&self, xp: f64, zp: f64) -> Result<f64, RegularityError> {
        Ok(self.sample::<f64>(xp, zp)?.kuo)
    }

    pub fn verdier_at(&self, xp: f64, zp: f64) -> Result<f64, RegularityError> {
        Ok(self.sample::<f64>(xp, zp)?.w_retraction)
    }

    /// Verdier quotient d(T_xX, T_yY)/||y - x|| against an explicit base
    /// point x on X (the tangent of an affine X is position-independent,
    /// so only the distance changes).
    pub fn verdier_quotient_at(
        &self,
        xp: f64,
        zp: f64,
        x: &[f64],
    ) -> Result<f64, RegularityError> {
        let q = self.sample::<f64>(xp, zp)?;
        let alpha = q.alpha;
        let (expr, names, _, layout) = self.graph();
        let bind: Vec<(&str, f64)> = vec![(names[0].as_str(), xp), (names[1].as_str(), zp)];
        let y = expr.eval_value(&bind)?;
        let point = layout.embed(&[xp, zp], y);
        let d2: f64 = point.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 == 0.0 {
            return Err(RegularityError::DegenerateSecant);
        }
        Ok(alpha / d2.sqrt())
    }

    pub fn re_at(&self, e: f64, xp: f64, zp: f64) -> Result<f64, RegularityError> {
        Ok(self.sample::<f64>(xp, zp)?.get(QuantityKind::Re(e)))
    }

    /// α via the general frame machinery (Gram–Schmidt + Jacobi δ); the
    /// independent route cross-checked against the closed form.
    pub fn alpha_via_frames(&self, xp: f64, zp: f64) -> Result<f64, RegularityError> {
        let (expr, names, _, layout) = self.graph();
        let bind: Vec<(&str, f64)> = vec![(names[0].as_str(), xp), (names[1].as_str(), zp)];
        let tangent = geom::tangent_of_graph(expr, &bind, layout)
            .map_err(|e| RegularityError::Eval(match e {
                geom::GeomError::Eval(ev) => ev,
                other => panic!("unexpected frame failure: {other}"),
            }))?;
        let x_plane = Subspace::from_orthonormal(
            layout.ambient,
            self.x_basis().to_vec(),
        );
        Ok(geom::delta(&x_plane, &tangent).expect("same ambient"))
    }

    /// β via η on the f64 frame route.
    pub fn beta_via_frames(&self, xp: f64, zp: f64) -> Result<f64, RegularityError> {
        let (expr, names, _, layout) = self.graph();
        let bind: Vec<(&str, f64)> = vec![(names[0].as_str(), xp), (names[1].as_str(), zp)];
        let tangent = geom::tangent_of_graph(expr, &bind, layout)
            .map_err(|e| RegularityError::Eval(match e {
                geom::GeomError::Eval(ev) => ev,
                other => panic!("unexpected frame failure: {other}"),
            }))?;
        let jet = expr.eval_jet(&bind)?;
        let point = layout.embed(&[xp, zp], jet.value);
        let pi_p = self.retraction().project(&point);
        let diff: Vec<f64> = point.iter().zip(&pi_p).map(|(a, b)| a - b).collect();
        let nd = dot(&diff, &diff).sqrt();
        if nd == 0.0 {
            return Err(RegularityError::DegenerateSecant);
        }
        let unit: Vec<f64> = diff.iter().map(|d| d / nd).collect();
        Ok(geom::eta(&unit, &tangent).expect("same ambient"))
    }
}

/// Log magnitudes of the (r^e) ingredients (both nonnegative).
#[derive(Debug, Clone, Copy)]
struct FrozenReParts {
    pi_dist_log: Option<f64>,
    alpha_over_diff_log: Option<f64>,
}

/// Pointwise quantities, already in f64 (ratios formed in the source
/// scalar system first).
#[derive(Debug, Clone, Copy)]
pub struct PointQuantities {
    pub alpha: f64,
    pub beta: f64,
    pub kuo: f64,
    pub w_retraction: f64,
    pub w_basepoint: f64,
    re_parts: FrozenReParts,
}

impl PointQuantities {
    pub fn get(&self, kind: QuantityKind) -> f64 {
        match kind {
            QuantityKind::Alpha => self.alpha,
            QuantityKind::Beta => self.beta,
            QuantityKind::Kuo => self.kuo,
            QuantityKind::WRetraction => self.w_retraction,
            QuantityKind::WBasepoint => self.w_basepoint,
            QuantityKind::Re(e) => {
                match (self.re_parts.pi_dist_log, self.re_parts.alpha_over_diff_log) {
                    (Some(lp), Some(la)) => {
                        let lm = e * lp + la;
                        if lm < -700.0 {
                            0.0
                        } else if lm > 709.0 {
                            f64::MAX
                        } else {
                            lm.exp()
                        }
                    }
                    _ => 0.0,
                }
            }
        }
    }
}

/// Classify a possibly truncated series: full tolerance when the curve has
/// its nominal length, a relaxed four-sample floor otherwise, and None for
/// series too short to say anything.
pub fn classify_on_prefix(values: &[f64], cfg: &LimitConfig) -> Option<LimitEstimate> {
    if values.len() >= cfg.min_samples.max(4) {
        return classify_limit(values, cfg).ok();
    }
    if values.len() >= 4 {
        let relaxed = LimitConfig { min_samples: 4, ..*cfg };
        return classify_limit(values, &relaxed).ok();
    }
    None
}

/// Whether the condition demands a vanishing limit or mere boundedness.
fn condition_mode(c: Condition) -> Mode {
    match c {
        Condition::A | Condition::BPi | Condition::R => Mode::LimitZero,
        Condition::W | Condition::Re(_) => Mode::Bounded,
        Condition::B | Condition::RInt => unreachable!("handled separately"),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    LimitZero,
    Bounded,
}

fn quantity_for(c: Condition) -> Vec<(QuantityKind, &'static str)> {
    match c {
        Condition::A => vec![(QuantityKind::Alpha, "")],
        Condition::BPi => vec![(QuantityKind::Beta, "")],
        Condition::R => vec![(QuantityKind::Kuo, "")],
        Condition::W => vec![
            (QuantityKind::WRetraction, " [x=pi(y)]"),
            (QuantityKind::WBasepoint, " [x=x0]"),
        ],
        Condition::Re(e) => vec![(QuantityKind::Re(e), "")],
        Condition::B | Condition::RInt => unreachable!(),
    }
}

/// Evaluate a condition over a probe family and aggregate the verdict.
pub fn check_condition(
    pair: &PairAtPoint,
    condition: Condition,
    family: &[ProbeCurve],
    tols: &ConditionTolerances,
) -> Result<Verdict, RegularityError> {
    if family.is_empty() {
        return Err(RegularityError::EmptyFamily);
    }
    match condition {
        Condition::B => {
            let a = check_condition(pair, Condition::A, family, tols)?;
            let bpi = check_condition(pair, Condition::BPi, family, tols)?;
            let outcome = match (&a.outcome, &bpi.outcome) {
                (Outcome::Fails { witness, limit }, _) => Outcome::Fails {
                    witness: format!("(a): {witness}"),
                    limit: *limit,
                },
                (_, Outcome::Fails { witness, limit }) => Outcome::Fails {
                    witness: format!("(bpi): {witness}"),
                    limit: *limit,
                },
                (Outcome::HoldsOnFamily, Outcome::HoldsOnFamily) => Outcome::HoldsOnFamily,
                _ => Outcome::Inconclusive,
            };
            let mut per_curve = a.per_curve;
            per_curve.extend(bpi.per_curve);
            return Ok(Verdict { condition, outcome, per_curve });
        }
        Condition::RInt => {
            let report = rint_check(pair, &default_eps_grid(), tols)?;
            let outcome = match report.class {
                RIntClass::Converging(v) => {
                    let _ = v;
                    Outcome::HoldsOnFamily
                }
                RIntClass::Diverging => Outcome::Fails {
                    witness: "r(t) partial integrals are non-Cauchy".into(),
                    limit: report.partials.last().map(|p| p.1).unwrap_or(f64::NAN),
                },
            };
            return Ok(Verdict { condition, outcome, per_curve: vec![] });
        }
        _ => {}
    }

    let mode = condition_mode(condition);
    let mut per_curve = Vec::new();
    let mut witness: Option<(String, f64)> = None;
    let mut any_inconclusive = false;

    for curve in family {
        for (kind, suffix) in quantity_for(condition) {
            let values = pair.quantity_series(curve, kind)?;
            // curves truncated by the log floor or by formula breakdown are
            // classified on their valid prefix, down to 4 samples
            let estimate = match classify_on_prefix(&values, &tols.limit) {
                Some(e) => e,
                None => {
                    any_inconclusive = true;
                    continue;
                }
            };
            let conforming = match (&estimate.class, mode) {
                (LimitClass::Converged(l), Mode::LimitZero) => Some(l.abs() <= tols.zero_tol),
                (LimitClass::Diverging, Mode::LimitZero) => Some(false),
                // a slow magnitude decay whose Aitken extrapolation lands at
                // zero still conforms; anything else stays open
                (LimitClass::Bounded(_), Mode::LimitZero) => {
                    let half = &values[values.len() / 2..];
                    let decaying = half.windows(2).all(|w| w[1].abs() <= w[0].abs());
                    match (decaying, crate::probes::aitken_tail(&values)) {
                        (true, Some(a)) if a.abs() <= tols.zero_tol => Some(true),
                        _ => None,
                    }
                }
                (LimitClass::Converged(_), Mode::Bounded) => Some(true),
                (LimitClass::Bounded(_), Mode::Bounded) => Some(true),
                (LimitClass::Diverging, Mode::Bounded) => Some(false),
                (LimitClass::Inconclusive, _) => None,
            };
            let label = format!("{}{}", curve.label, suffix);
            if conforming == Some(false) && witness.is_none() {
                let lim = match estimate.class {
                    LimitClass::Converged(l) => l,
                    _ => estimate.last,
                };
                witness = Some((label.clone(), lim));
            }
            if conforming.is_none() {
                any_inconclusive = true;
            }
            per_curve.push(CurveLimit { label, estimate, conforming });
        }
    }

    let outcome = match witness {
        Some((witness, limit)) => Outcome::Fails { witness, limit },
        None if any_inconclusive => Outcome::Inconclusive,
        None => Outcome::HoldsOnFamily,
    };
    Ok(Verdict { condition, outcome, per_curve })
}

// ---------------------------------------------------------------------------
// r(t) profile and the (r_∫) check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct RProfilePoint {
    pub t: f64,
    pub sup: f64,
    /// log z attaining the sup, and the sign of the x-fiber side.
    pub witness_log_z: f64,
    pub witness_side: i8,
}

/// r(t) = sup over the fiber |π(y)| = t of δ(X, T_yY)/|y − π(y)|, estimated
/// on a log-spaced z grid down to log z = -1e4, both fiber sides.
pub fn r_profile(pair: &PairAtPoint, t: f64) -> Result<RProfilePoint, RegularityError> {
    let (_, _, domain, _) = pair.graph();
    let z_top = {
        let zi = domain.intervals[1];
        (zi.hi * 0.5).min(0.25)
    };
    let log_top = z_top.ln();
    let log_floor = -1e4;
    let n = 400;
    let x0 = pair.base_param();
    let mut best: Option<RProfilePoint> = None;
    for side in [1i8, -1i8] {
        let x = x0 + side as f64 * t;
        if !domain.intervals[0].contains(x) {
            continue;
        }
        for j in 0..n {
            let lz = log_top + (log_floor - log_top) * j as f64 / (n - 1) as f64;
            let xp = XScalar::from_float(x);
            let zp = XScalar::from_log(1, lz);
            let q = match pair.sample::<XScalar>(xp, zp) {
                Ok(q) => q,
                Err(RegularityError::Eval(_)) => continue,
                Err(e) => return Err(e),
            };
            let val = q.w_retraction; // δ(X,T_yY)/|y-π(y)| with x = π(y)
            if best.map(|b| val > b.sup).unwrap_or(true) {
                best = Some(RProfilePoint { t, sup: val, witness_log_z: lz, witness_side: side });
            }
        }
    }
    best.ok_or(RegularityError::EmptyProfileFiber)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RIntClass {
    Converging(f64),
    Diverging,
}

#[derive(Debug, Clone)]
pub struct RIntReport {
    /// (ε_k, ∫_{ε_k}^{ε_0} r dt) with the trapezoid rule, plus witnesses.
    pub partials: Vec<(f64, f64)>,
    pub profile: Vec<RProfilePoint>,
    pub class: RIntClass,
}

pub fn default_eps_grid() -> Vec<f64> {
    sample_geometric(0.1, 0.7, 12)
}

/// Classify ∫_0^ε r(t) dt by the Cauchy behaviour of partial integrals on a
/// shrinking geometric grid.
pub fn rint_check(
    pair: &PairAtPoint,
    eps_grid: &[f64],
    tols: &ConditionTolerances,
) -> Result<RIntReport, RegularityError> {
    assert!(eps_grid.len() >= 12, "eps grid needs at least 12 points");
    let mut profile = Vec::with_capacity(eps_grid.len());
    for &t in eps_grid {
        profile.push(r_profile(pair, t)?);
    }
    let pairs: Vec<(f64, f64)> = profile.iter().map(|p| (p.t, p.sup)).collect();
    let (partials, class) = rint_classify_from_profile(&pairs, tols.rint_tol);
    Ok(RIntReport { partials, profile, class })
}

/// The partial-integral Cauchy test on its own, so synthetic profiles can
/// exercise the classification.
pub fn rint_classify_from_profile(
    profile: &[(f64, f64)],
    tol: f64,
) -> (Vec<(f64, f64)>, RIntClass) {
    let mut partials = Vec::with_capacity(profile.len());
    let mut acc = 0.0;
    partials.push((profile[0].0, 0.0));
    for w in profile.windows(2) {
        let (t_hi, r_hi) = w[0];
        let (t_lo, r_lo) = w[1];
        acc += 0.5 * (r_hi + r_lo) * (t_hi - t_lo);
        partials.push((t_lo, acc));
    }
    let n = partials.len();
    let tail = &partials[n - 4..];
    let scale = tail.iter().fold(1.0f64, |m, p| m.max(p.1.abs()));
    let cauchy = tail
        .iter()
        .flat_map(|a| tail.iter().map(move |b| (a.1 - b.1).abs()))
        .all(|d| d <= tol * scale);
    let class = if cauchy {
        RIntClass::Converging(partials[n - 1].1)
    } else {
        RIntClass::Diverging
    };
    (partials, class)
}

// ---------------------------------------------------------------------------
// Codimension-one slices (E_{cod 1})
// ---------------------------------------------------------------------------

/// Y ∩ {y = a z} represented by solved samples z(x) (bisection in log z).
#[derive(Debug, Clone)]
pub struct SlicedPair {
    pub a: f64,
    /// (x, log z) samples, both signs of x where solvable.
    pub samples: Vec<(f64, f64)>,
    /// per-x errors (no root in bracket)
    pub failures: Vec<f64>,
}

/// Solve g(x,z) = a·z on the bracket log z ∈ [-1e4, -1e-2] for geometric
/// x samples, both signs. The x grid stays above 0.03: the root's log
/// magnitude scales like 1/x² and the bisection's attainable accuracy
/// degrades like |log z|·ε/x², so deeper samples could not meet the 1e-9
/// log-magnitude tolerance the solved curve is held to.
pub fn slice_pair(pair: &PairAtPoint, a: f64) -> Result<SlicedPair, RegularityError> {
    assert!(a > 0.0 && a < 1.0, "slice slope must lie in (0,1)");
    let (expr, names, _, _) = pair.graph();
    let x0 = pair.base_param();
    let xs_abs = sample_geometric(0.1, 0.88, 10);
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for &side in &[1.0f64, -1.0] {
        for &dx in &xs_abs {
            let x = x0 + side * dx;
            let eval = |lz: f64| -> Result<std::cmp::Ordering, RegularityError> {
                let z = XScalar::from_log(1, lz);
                let bind: Vec<(&str, XScalar)> = vec![
                    (names[0].as_str(), XScalar::from_float(x)),
                    (names[1].as_str(), z),
                ];
                let g = expr.eval_value(&bind)?;
                let az = z.mul(XScalar::from_float(a));
                Ok(g.cmp_total(az))
            };
            let (mut lo, mut hi) = (-1e4f64, -1e-2f64);
            let s_lo = eval(lo)?;
            let s_hi = eval(hi)?;
            if s_lo == s_hi {
                failures.push(x);
                continue;
            }
            // g - az < 0 at lo (z flat-small: g = z·z^{x²} << az), > 0 at hi
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let s = eval(mid)?;
                if s == s_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-12 {
                    break;
                }
            }
            samples.push((x, 0.5 * (lo + hi)));
        }
    }
    if samples.is_empty() {
        return Err(RegularityError::SliceNoRoot { x: x0 + 0.1 });
    }
    Ok(SlicedPair { a, samples, failures })
}

/// (a), (bπ) and (b) verdicts along the sliced curve. The slice of a graph
/// pair by {y = a z} is one-dimensional; its tangent line is spanned by
/// (1, a z', z') with z' = -g_x/(g_z - a).
pub fn check_slice_condition(
    pair: &PairAtPoint,
    slice: &SlicedPair,
    condition: Condition,
    tols: &ConditionTolerances,
) -> Result<Verdict, RegularityError> {
    if let Condition::B = condition {
        let a = check_slice_condition(pair, slice, Condition::A, tols)?;
        let bpi = check_slice_condition(pair, slice, Condition::BPi, tols)?;
        let outcome = match (&a.outcome, &bpi.outcome) {
            (Outcome::Fails { witness, limit }, _) => {
                Outcome::Fails { witness: format!("(a): {witness}"), limit: *limit }
            }
            (_, Outcome::Fails { witness, limit }) => {
                Outcome::Fails { witness: format!("(bpi): {witness}"), limit: *limit }
            }
            (Outcome::HoldsOnFamily, Outcome::HoldsOnFamily) => Outcome::HoldsOnFamily,
            _ => Outcome::Inconclusive,
        };
        let mut per_curve = a.per_curve;
        per_curve.extend(bpi.per_curve);
        return Ok(Verdict { condition, outcome, per_curve });
    }
    let (expr, names, _, _) = pair.graph();
    let a_s = XScalar::from_float(slice.a);
    let mut by_side: [Vec<f64>; 2] = [vec![], vec![]];
    let x0 = pair.base_param();
    for &(x, lz) in &slice.samples {
        let z = XScalar::from_log(1, lz);
        let bind: Vec<(&str, XScalar)> =
            vec![(names[0].as_str(), XScalar::from_float(x)), (names[1].as_str(), z)];
        let jet = expr.eval_jet(&bind)?;
        let gx = jet.gradient[0];
        let gz = jet.gradient[1];
        let zprime = gx.neg().div(gz.sub(a_s))?;
        // ||v||^2 = 1 + z'^2 (1 + a^2)
        let zp2 = zprime.mul(zprime);
        let one_plus = XScalar::ONE.add(zp2.mul(XScalar::from_float(1.0 + slice.a * slice.a)));
        let v_norm = one_plus.sqrt()?;
        let value = match condition {
            // α = |z'| sqrt(1+a²) / ||v||
            Condition::A => zprime
                .abs()
                .mul(XScalar::from_float((1.0 + slice.a * slice.a).sqrt()))
                .div(v_norm)?
                .to_float(),
            // β = 1 / ||v||  (derived from η(ŝ, span v))
            Condition::BPi => XScalar::ONE.div(v_norm)?.to_float(),
            _ => panic!("slice checks cover (a), (bπ), (b)"),
        };
        // samples arrive ordered by decreasing |x - x0| within each side
        let side = if x >= x0 { 0 } else { 1 };
        by_side[side].push(value);
    }
    let mut per_curve = Vec::new();
    let mut witness: Option<(String, f64)> = None;
    let mut any_inconclusive = false;
    for (i, values) in by_side.iter().enumerate() {
        if values.len() < 8 {
            if !values.is_empty() {
                any_inconclusive = true;
            }
            continue;
        }
        let estimate = classify_limit(values, &tols.limit).expect("length checked");
        let conforming = match estimate.class {
            LimitClass::Converged(l) => Some(l.abs() <= tols.zero_tol),
            LimitClass::Diverging => Some(false),
            _ => None,
        };
        let label = format!("slice a={} side {}", slice.a, if i == 0 { "+" } else { "-" });
        if conforming == Some(false) && witness.is_none() {
            let lim = match estimate.class {
                LimitClass::Converged(l) => l,
                _ => estimate.last,
            };
            witness = Some((label.clone(), lim));
        }
        if conforming.is_none() {
            any_inconclusive = true;
        }
        per_curve.push(CurveLimit { label, estimate, conforming });
    }
    let outcome = match witness {
        Some((witness, limit)) => Outcome::Fails { witness, limit },
        None if any_inconclusive || per_curve.is_empty() => Outcome::Inconclusive,
        None => Outcome::HoldsOnFamily,
    };
    Ok(Verdict { condition, outcome, per_curve })
}
