//! Normal-cone fibers from secant directions, tangent cones of set fibers,
//! and the (n), (npf) and C¹-boundary evidence checks.
//!
//! Directions live in the plane orthogonal to the one-dimensional base
//! stratum; each is recorded by its angle there, so limits of directions
//! reduce to limits of scalar angles. The (npf) check tests lower
//! semicontinuity of the fiber across a base grid, a necessary condition
//! for openness of the cone projection; reports label it as such.

use crate::numscale::{vector_norm, Scalar, XScalar};
use crate::probes::{classify_limit, FamilyConfig, LimitClass, LimitEstimate, ProbeCurve, ScalarSystem};
use crate::regularity::{PairAtPoint, RegularityError};
use crate::strata::{sample_fiber, StratifiedSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConesError {
    #[error(transparent)]
    Regularity(#[from] RegularityError),
    #[error("no conclusive directions at base parameter {0}")]
    NoConclusiveDirections(f64),
    #[error("cone checks need a one-dimensional base stratum in ambient 3")]
    UnsupportedGeometry,
}

/// Angular threshold under which a direction set counts as a single point.
pub const DIMENSION_SPREAD_THRESHOLD: f64 = 0.05;
/// One-sided Hausdorff threshold for the (n) comparison.
pub const N_ANGLE_THRESHOLD: f64 = 0.02;
/// Adjacent-fiber Hausdorff threshold for the (npf) grid check.
pub const NPF_ANGLE_THRESHOLD: f64 = 0.1;
/// Tangent-plane spread threshold for C¹ evidence.
pub const C1_SPREAD_THRESHOLD: f64 = 0.02;

/// Limit direction of secants along one probe curve.
#[derive(Debug, Clone)]
pub struct FiberDirection {
    pub label: String,
    pub angle: LimitEstimate,
    /// Unit direction in the normal plane (value-axis, fiber-axis), when
    /// the angle limit is conclusive.
    pub direction: Option<[f64; 2]>,
}

/// Normal-cone fiber over one base point, sampled across a probe family.
#[derive(Debug, Clone)]
pub struct ConeFiber {
    pub base_param: f64,
    pub entries: Vec<FiberDirection>,
    /// Conclusive limit angles, sorted.
    pub angles: Vec<f64>,
    /// Angular clusters (center, count) at the dimension threshold.
    pub clusters: Vec<(f64, usize)>,
    /// 0 when all conclusive directions agree within the spread threshold,
    /// 1 otherwise; None when nothing is conclusive.
    pub dimension: Option<u8>,
    pub spread: f64,
    pub inconclusive: usize,
}

/// Tangent cone of the set fiber S ∩ π⁻¹(x0) at the base point.
#[derive(Debug, Clone)]
pub struct FiberTangentCone {
    pub base_param: f64,
    pub angle: LimitEstimate,
    pub direction: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckOutcome {
    HoldsOnFamily,
    Fails(String),
}

impl CheckOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, CheckOutcome::HoldsOnFamily)
    }
    pub fn short(&self) -> &'static str {
        match self {
            CheckOutcome::HoldsOnFamily => "HOLDS_ON_FAMILY",
            CheckOutcome::Fails(_) => "FAILS",
        }
    }
}

/// The two ambient axes orthogonal to the (axis-aligned, 1-dimensional)
/// base stratum: (value axis, fiber axis).
fn normal_plane_axes(pair: &PairAtPoint) -> Result<(usize, usize), ConesError> {
    let (_, _, _, layout) = pair.graph();
    if layout.ambient != 3 || layout.param_axes.len() != 2 {
        return Err(ConesError::UnsupportedGeometry);
    }
    Ok((layout.value_axis, layout.param_axes[1]))
}

/// Unit secant direction (y - π(y)) / ||y - π(y)||, normalized in the
/// curve's scalar system before conversion.
pub fn secant_direction<S: Scalar>(
    pair: &PairAtPoint,
    xp: S,
    zp: S,
) -> Result<Vec<f64>, RegularityError> {
    let (expr, names, _, layout) = pair.graph();
    let bind: Vec<(&str, S)> = vec![(names[0].as_str(), xp), (names[1].as_str(), zp)];
    let y = expr.eval_value(&bind)?;
    let point = layout.embed(&[xp, zp], y);
    let pi_p = pair.retraction().project_s(&point);
    let diff: Vec<S> = point.iter().zip(&pi_p).map(|(a, b)| a.sub(*b)).collect();
    let norm = vector_norm(&diff);
    if norm.is_zero() {
        return Err(RegularityError::DegenerateSecant);
    }
    diff.iter()
        .map(|d| d.div(norm).map(|r| r.to_f64()).map_err(RegularityError::from))
        .collect()
}

/// Secant angle sequence along a probe curve, in the normal plane; stops
/// at the first point where the defining formula is not evaluable.
fn secant_angles(pair: &PairAtPoint, curve: &ProbeCurve) -> Result<Vec<f64>, RegularityError> {
    let (va, fa) = normal_plane_axes(pair).map_err(|_| RegularityError::EmptyFamily)?;
    let mut out = Vec::with_capacity(curve.ts.len());
    for &t in &curve.ts {
        let dir = match curve.system {
            ScalarSystem::Standard => {
                let (x, z) = curve.param_at::<f64>(t);
                secant_direction::<f64>(pair, x, z)
            }
            ScalarSystem::Extended => {
                let (x, z) = curve.param_at::<XScalar>(t);
                secant_direction::<XScalar>(pair, x, z)
            }
        };
        match dir {
            Ok(dir) => out.push(dir[va].atan2(dir[fa])),
            Err(RegularityError::Eval(crate::expr::EvalError::Domain { .. })) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn cluster_angles(sorted: &[f64], linkage: f64) -> Vec<(f64, usize)> {
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > linkage {
            let group = &sorted[start..i];
            let center = group.iter().sum::<f64>() / group.len() as f64;
            clusters.push((center, group.len()));
            start = i;
        }
    }
    clusters
}

/// Limit secant directions over one base point across the family.
pub fn cone_fiber(
    pair: &PairAtPoint,
    family: &[ProbeCurve],
    limit_cfg: &crate::probes::LimitConfig,
) -> Result<ConeFiber, ConesError> {
    let mut entries = Vec::new();
    let mut angles = Vec::new();
    let mut inconclusive = 0usize;
    for curve in family {
        let seq = secant_angles(pair, curve)?;
        let est = match crate::regularity::classify_on_prefix(&seq, limit_cfg) {
            Some(e) => e,
            None => {
                inconclusive += 1;
                continue;
            }
        };
        let direction = match est.class {
            LimitClass::Converged(phi) => {
                angles.push(phi);
                Some([phi.sin(), phi.cos()])
            }
            _ => {
                inconclusive += 1;
                None
            }
        };
        entries.push(FiberDirection { label: curve.label.clone(), angle: est, direction });
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let spread = if angles.is_empty() { 0.0 } else { angles[angles.len() - 1] - angles[0] };
    let dimension = if angles.is_empty() {
        None
    } else if spread <= DIMENSION_SPREAD_THRESHOLD {
        Some(0)
    } else {
        Some(1)
    };
    let clusters = cluster_angles(&angles, DIMENSION_SPREAD_THRESHOLD);
    Ok(ConeFiber {
        base_param: pair.base_param(),
        entries,
        angles,
        clusters,
        dimension,
        spread,
        inconclusive,
    })
}

/// Tangent cone of the fiber S_{x0}: limit of secants from the base point
/// to log-spaced fiber samples.
pub fn fiber_tangent_cone(
    pair: &PairAtPoint,
    limit_cfg: &crate::probes::LimitConfig,
) -> Result<FiberTangentCone, ConesError> {
    let (va, fa) = normal_plane_axes(pair)?;
    let set = pair.set();
    let points = sample_fiber(set, pair.y_name(), pair.basepoint(), 0.1)
        .map_err(RegularityError::from)?;
    let base = pair.basepoint();
    let mut seq = Vec::with_capacity(points.len());
    for p in &points {
        let diff: Vec<f64> = p.iter().zip(base).map(|(a, b)| a - b).collect();
        let n = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
        if n == 0.0 {
            continue;
        }
        seq.push((diff[va] / n).atan2(diff[fa] / n));
    }
    let est = classify_limit(&seq, limit_cfg)
        .map_err(RegularityError::from)
        .map_err(ConesError::from)?;
    let direction = match est.class {
        LimitClass::Converged(phi) => Some([phi.sin(), phi.cos()]),
        _ => None,
    };
    Ok(FiberTangentCone { base_param: pair.base_param(), angle: est, direction })
}

fn one_sided_hausdorff(from: &[f64], to: &[f64]) -> f64 {
    from.iter()
        .map(|a| {
            to.iter().map(|b| (a - b).abs()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct NReport {
    pub outcome: CheckOutcome,
    pub fiber: ConeFiber,
    pub tangent_cone: FiberTangentCone,
    pub hausdorff_cone_to_fiber: f64,
    pub hausdorff_fiber_to_cone: f64,
}

/// Condition (n): the normal-cone fiber equals the tangent cone of the set
/// fiber, compared through one-sided Hausdorff angular distances.
pub fn check_n(
    pair: &PairAtPoint,
    family: &[ProbeCurve],
    limit_cfg: &crate::probes::LimitConfig,
) -> Result<NReport, ConesError> {
    let fiber = cone_fiber(pair, family, limit_cfg)?;
    let tangent_cone = fiber_tangent_cone(pair, limit_cfg)?;
    if fiber.angles.is_empty() || tangent_cone.direction.is_none() {
        return Err(ConesError::NoConclusiveDirections(pair.base_param()));
    }
    let cone_angles = vec![match tangent_cone.angle.class {
        LimitClass::Converged(phi) => phi,
        _ => unreachable!(),
    }];
    let c2f = one_sided_hausdorff(&cone_angles, &fiber.angles);
    let f2c = one_sided_hausdorff(&fiber.angles, &cone_angles);
    let outcome = if c2f <= N_ANGLE_THRESHOLD && f2c <= N_ANGLE_THRESHOLD {
        CheckOutcome::HoldsOnFamily
    } else {
        CheckOutcome::Fails(format!(
            "normal-cone fiber vs fiber tangent cone: angular gaps {:.4}/{:.4} rad",
            f2c, c2f
        ))
    };
    Ok(NReport { outcome, fiber, tangent_cone, hausdorff_cone_to_fiber: c2f, hausdorff_fiber_to_cone: f2c })
}

#[derive(Debug, Clone)]
pub struct NpfReport {
    pub outcome: CheckOutcome,
    pub fibers: Vec<ConeFiber>,
}

/// Base point of the affine stratum at parameter value `s` along its first
/// basis vector.
pub fn basepoint_at(set: &StratifiedSet, x_name: &str, s: f64) -> Result<Vec<f64>, RegularityError> {
    let x = set.stratum(x_name).map_err(RegularityError::from)?;
    match &x.kind {
        crate::strata::StratumKind::Affine { basis, offset } => Ok(offset
            .iter()
            .zip(&basis[0])
            .map(|(o, b)| o + s * b)
            .collect()),
        _ => Err(RegularityError::Strata(crate::strata::StrataError::InvalidPair {
            y: "-".into(),
            x: x_name.into(),
            reason: "base stratum must be affine".into(),
        })),
    }
}

/// Normal pseudo-flatness, tested as lower semicontinuity of the cone
/// fiber across a base grid: a dimension jump or an adjacent-fiber
/// Hausdorff gap above threshold is a FAILS witness.
pub fn check_npf(
    set: &StratifiedSet,
    y_name: &str,
    x_name: &str,
    grid: &[f64],
    family_cfg: &FamilyConfig,
    limit_cfg: &crate::probes::LimitConfig,
) -> Result<NpfReport, ConesError> {
    let mut fibers = Vec::new();
    for &x0 in grid {
        let basepoint = basepoint_at(set, x_name, x0)?;
        let pair = PairAtPoint::new(set, y_name, x_name, basepoint)?;
        let family = pair.family(family_cfg);
        fibers.push(cone_fiber(&pair, &family, limit_cfg)?);
    }
    let outcome = npf_outcome(&fibers);
    Ok(NpfReport { outcome, fibers })
}

/// Grid aggregation of the (npf) surrogate, separated for callers that
/// build fibers themselves.
pub fn npf_outcome(fibers: &[ConeFiber]) -> CheckOutcome {
    for w in fibers.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        match (a.dimension, b.dimension) {
            (Some(da), Some(db)) if da != db => {
                return CheckOutcome::Fails(format!(
                    "fiber dimension jumps {} -> {} between x0 = {} and {}",
                    da, db, a.base_param, b.base_param
                ));
            }
            _ => {}
        }
        if !a.angles.is_empty() && !b.angles.is_empty() {
            let h = one_sided_hausdorff(&a.angles, &b.angles)
                .max(one_sided_hausdorff(&b.angles, &a.angles));
            if h > NPF_ANGLE_THRESHOLD {
                return CheckOutcome::Fails(format!(
                    "fiber direction set moves {:.3} rad between x0 = {} and {}",
                    h, a.base_param, b.base_param
                ));
            }
        }
    }
    CheckOutcome::HoldsOnFamily
}

#[derive(Debug, Clone)]
pub struct C1Point {
    pub base_param: f64,
    /// Conclusive limit normal-angles per curve.
    pub plane_angles: Vec<f64>,
    pub spread: f64,
    /// None when no curve produced a conclusive plane limit.
    pub unique: Option<bool>,
    pub mean_angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum C1Outcome {
    EvidenceFor,
    EvidenceAgainst(String),
}

impl C1Outcome {
    pub fn short(&self) -> &'static str {
        match self {
            C1Outcome::EvidenceFor => "EVIDENCE_FOR",
            C1Outcome::EvidenceAgainst(_) => "EVIDENCE_AGAINST",
        }
    }
}

#[derive(Debug, Clone)]
pub struct C1Report {
    pub outcome: C1Outcome,
    pub per_point: Vec<C1Point>,
}

/// Tangent-plane angle sequence along one curve: the graph normal is
/// n ∝ (h_x, -1, h_z); its angle in the normal plane (canonicalized to
/// negative value-axis component) determines the limiting plane.
fn plane_angles(pair: &PairAtPoint, curve: &ProbeCurve) -> Result<Vec<f64>, RegularityError> {
    let (expr, names, _, _) = pair.graph();
    let mut out = Vec::with_capacity(curve.ts.len());
    for &t in &curve.ts {
        let gz = match curve.system {
            ScalarSystem::Standard => {
                let (x, z) = curve.param_at::<f64>(t);
                let bind: Vec<(&str, f64)> = vec![(names[0].as_str(), x), (names[1].as_str(), z)];
                expr.eval_jet(&bind).map(|j| j.gradient[1])
            }
            ScalarSystem::Extended => {
                let (x, z) = curve.param_at::<XScalar>(t);
                let bind: Vec<(&str, XScalar)> =
                    vec![(names[0].as_str(), x), (names[1].as_str(), z)];
                expr.eval_jet(&bind).map(|j| j.gradient[1].to_float())
            }
        };
        match gz {
            // angle of the plane {y = g_z · z} the tangent tends to
            Ok(gz) => out.push(gz.atan()),
            Err(crate::expr::EvalError::Domain { .. }) => break,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

/// C¹-manifold-with-boundary evidence for a pair with dim Y = dim X + 1:
/// per grid point, uniqueness of the limiting tangent plane across the
/// family, plus continuity of that plane along the grid.
pub fn c1_boundary_evidence<'a>(
    pairs: &[PairAtPoint<'a>],
    family_cfg: &FamilyConfig,
    limit_cfg: &crate::probes::LimitConfig,
) -> Result<C1Report, ConesError> {
    let mut per_point = Vec::new();
    for pair in pairs {
        let family = pair.family(family_cfg);
        let mut angles = Vec::new();
        for curve in &family {
            let seq = plane_angles(pair, curve)?;
            let est = match crate::regularity::classify_on_prefix(&seq, limit_cfg) {
                Some(e) => e,
                None => continue,
            };
            if let LimitClass::Converged(phi) = est.class {
                angles.push(phi);
            }
        }
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let spread = if angles.is_empty() { 0.0 } else { angles[angles.len() - 1] - angles[0] };
        let unique = if angles.is_empty() {
            None
        } else {
            Some(spread <= C1_SPREAD_THRESHOLD)
        };
        let mean_angle = if angles.is_empty() {
            None
        } else {
            Some(angles.iter().sum::<f64>() / angles.len() as f64)
        };
        per_point.push(C1Point {
            base_param: pair.base_param(),
            plane_angles: angles,
            spread,
            unique,
            mean_angle,
        });
    }
    // grid points with nothing conclusive are reported but do not decide
    let mut outcome = C1Outcome::EvidenceFor;
    if per_point.iter().all(|p| p.unique.is_none()) {
        outcome = C1Outcome::EvidenceAgainst(
            "no conclusive tangent-plane limits on any grid point".into(),
        );
    }
    for p in &per_point {
        if p.unique == Some(false) {
            outcome = C1Outcome::EvidenceAgainst(format!(
                "limit tangent planes spread {:.3} rad at x0 = {}",
                p.spread, p.base_param
            ));
            break;
        }
    }
    if matches!(outcome, C1Outcome::EvidenceFor) {
        for w in per_point.windows(2) {
            if let (Some(a), Some(b)) = (w[0].mean_angle, w[1].mean_angle) {
                if (a - b).abs() > NPF_ANGLE_THRESHOLD {
                    outcome = C1Outcome::EvidenceAgainst(format!(
                        "limit plane moves {:.3} rad between x0 = {} and {}",
                        (a - b).abs(),
                        w[0].base_param,
                        w[1].base_param
                    ));
                    break;
                }
            }
        }
    }
    Ok(C1Report { outcome, per_point })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probes::LimitConfig;
    use crate::regularity::PairAtPoint;
    use crate::strata::catalog;

    fn pair_at<'a>(
        set: &'a crate::strata::StratifiedSet,
        y: &str,
        x0: f64,
    ) -> PairAtPoint<'a> {
        let base = basepoint_at(set, "X", x0).unwrap();
        PairAtPoint::new(set, y, "X", base).unwrap()
    }

    #[test]
    fn secant_directions_on_sg_diagonal_fiber() {
        // on the fiber over the origin, g(0,z) = z: direction (0,1,1)/sqrt2
        let sg = catalog("Sg").unwrap();
        let pair = pair_at(&sg, "W", 0.0);
        for &z in &[0.1, 0.01, 1e-5] {
            let d = secant_direction::<f64>(&pair, 0.0, z).unwrap();
            let s = std::f64::consts::FRAC_1_SQRT_2;
            assert!((d[0]).abs() < 1e-15);
            assert!((d[1] - s).abs() < 1e-12, "{d:?}");
            assert!((d[2] - s).abs() < 1e-12);
        }
    }

    #[test]
    fn secant_direction_on_sigma_curve() {
        // slope y/z = σ exactly on-curve: direction (0, σ, 1)/sqrt(1+σ²)
        let sg = catalog("Sg").unwrap();
        let pair = pair_at(&sg, "W", 0.0);
        let curve = crate::probes::ProbeCurve {
            label: "sigma 0.5".into(),
            kind: crate::probes::CurveKind::Sigma { sigma: 0.5 },
            system: ScalarSystem::Extended,
            x0: 0.0,
            mirrored: false,
            ts: vec![0.02],
        };
        let (x, z) = curve.param_at::<XScalar>(0.02);
        let d = secant_direction::<XScalar>(&pair, x, z).unwrap();
        let n = (1.0f64 + 0.25).sqrt();
        assert!((d[1] - 0.5 / n).abs() < 1e-10, "{d:?}");
        assert!((d[2] - 1.0 / n).abs() < 1e-10);
    }

    #[test]
    fn halfplane_secants_point_up_z() {
        let hp = catalog("halfplane").unwrap();
        let pair = pair_at(&hp, "H", 0.2);
        let d = secant_direction::<f64>(&pair, 0.2, 0.05).unwrap();
        assert_eq!(d, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn sg_cone_fiber_at_origin_realizes_sigma_slopes() {
        let sg = catalog("Sg").unwrap();
        let pair = pair_at(&sg, "W", 0.0);
        let cfg = FamilyConfig {
            // σ-sweep for fiber-arc detection
            sigmas: (1..=19).map(|k| 0.05 * k as f64).collect(),
            ..Default::default()
        };
        let family = pair.family(&cfg);
        let fiber = cone_fiber(&pair, &family, &LimitConfig::default()).unwrap();
        assert_eq!(fiber.dimension, Some(1), "spread {}", fiber.spread);
        // realized slopes match the σ labels within 1e-3
        for &sigma in &[0.25, 0.5, 0.75] {
            let hit = fiber.angles.iter().any(|phi| (phi.tan() - sigma).abs() < 1e-3);
            assert!(hit, "sigma {sigma} not realized; angles {:?}", fiber.angles);
        }
        // slope 1 (vertical fiber/rays) and slope ~0 (q=3 flats) both occur
        assert!(fiber.angles.iter().any(|phi| (phi.tan() - 1.0).abs() < 1e-3));
        assert!(fiber.angles.iter().any(|phi| phi.tan() < 1e-3));
        // directions are unit
        for e in &fiber.entries {
            if let Some(d) = e.direction {
                assert!(((d[0] * d[0] + d[1] * d[1]).sqrt() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sg_cone_fiber_collapses_off_origin() {
        let sg = catalog("Sg").unwrap();
        let pair = pair_at(&sg, "W", 0.5);
        let family = pair.family(&FamilyConfig::default());
        let fiber = cone_fiber(&pair, &family, &LimitConfig::default()).unwrap();
        assert_eq!(fiber.dimension, Some(0), "spread {}", fiber.spread);
        // slope collapses to 0 within 1e-3
        for phi in &fiber.angles {
            assert!(phi.tan().abs() < 1e-3, "slope {}", phi.tan());
        }
    }

    #[test]
    fn sg_fiber_tangent_cone_slopes() {
        let sg = catalog("Sg").unwrap();
        // at the origin the limiting secant of the fiber is y = z (slope 1)
        let pair = pair_at(&sg, "W", 0.0);
        let cone = fiber_tangent_cone(&pair, &LimitConfig::default()).unwrap();
        let phi = match cone.angle.class {
            LimitClass::Converged(p) => p,
            other => panic!("{other:?}"),
        };
        assert!((phi.tan() - 1.0).abs() < 1e-9);
        // at x0 = 0.5 the fiber slope y/z = z^{1/4} vanishes
        let pair = pair_at(&sg, "W", 0.5);
        let cone = fiber_tangent_cone(&pair, &LimitConfig::default()).unwrap();
        let phi = match cone.angle.class {
            LimitClass::Converged(p) => p,
            other => panic!("{other:?}"),
        };
        assert!(phi.tan().abs() < 2e-3, "slope {}", phi.tan());
    }

    #[test]
    fn check_n_fails_on_sg_and_sf_holds_on_halfplane() {
        let limit_cfg = LimitConfig::default();
        let sg = catalog("Sg").unwrap();
        let pair = pair_at(&sg, "W", 0.0);
        let family = pair.family(&FamilyConfig::default());
        let report = check_n(&pair, &family, &limit_cfg).unwrap();
        assert!(!report.outcome.holds(), "{:?}", report.outcome);
        assert!(report.hausdorff_fiber_to_cone > 0.5);

        let sf = catalog("Sf").unwrap();
        let pair = pair_at(&sf, "Y", 0.0);
        let family = pair.family(&FamilyConfig { mirror: false, ..Default::default() });
        let report = check_n(&pair, &family, &limit_cfg).unwrap();
        assert!(!report.outcome.holds(), "{:?}", report.outcome);

        let hp = catalog("halfplane").unwrap();
        let pair = pair_at(&hp, "H", 0.0);
        let family = pair.family(&FamilyConfig::default());
        let report = check_n(&pair, &family, &limit_cfg).unwrap();
        assert!(report.outcome.holds(), "{:?}", report.outcome);
    }

    #[test]
    fn check_npf_grid_verdicts() {
        let limit_cfg = LimitConfig::default();
        let family_cfg = FamilyConfig::default();
        let grid = [0.0, 0.1, 0.3];
        let sg = catalog("Sg").unwrap();
        let report = check_npf(&sg, "W", "X", &grid, &family_cfg, &limit_cfg).unwrap();
        match &report.outcome {
            CheckOutcome::Fails(msg) => assert!(msg.contains("dimension"), "{msg}"),
            other => panic!("{other:?}"),
        }
        // dimension vector (1, 0, 0) over the grid
        let dims: Vec<_> = report.fibers.iter().map(|f| f.dimension).collect();
        assert_eq!(dims, vec![Some(1), Some(0), Some(0)]);

        let hp = catalog("halfplane").unwrap();
        let report = check_npf(&hp, "H", "X", &grid, &family_cfg, &limit_cfg).unwrap();
        assert!(report.outcome.holds(), "{:?}", report.outcome);

        let cusp = catalog("cusp_demo").unwrap();
        let report = check_npf(&cusp, "C", "X", &grid, &family_cfg, &limit_cfg).unwrap();
        assert!(report.outcome.holds(), "{:?}", report.outcome);
    }

    #[test]
    fn sf_npf_fails_with_one_sided_family() {
        let limit_cfg = LimitConfig::default();
        let family_cfg = FamilyConfig { mirror: false, ..Default::default() };
        let sf = catalog("Sf").unwrap();
        let report =
            check_npf(&sf, "Y", "X", &[0.0, 0.1, 0.3], &family_cfg, &limit_cfg).unwrap();
        assert!(!report.outcome.holds(), "{:?}", report.outcome);
    }

    #[test]
    fn observed_fiber_dimension_bound() {
        // dim (C_X S)_x <= dim S - dim X - 1 on catalog examples
        let limit_cfg = LimitConfig::default();
        for (name, y) in [("Sg", "W"), ("halfplane", "H"), ("cusp_demo", "C")] {
            let set = catalog(name).unwrap();
            for &x0 in &[0.0, 0.2] {
                let pair = pair_at(&set, y, x0);
                let family = pair.family(&FamilyConfig::default());
                let fiber = cone_fiber(&pair, &family, &limit_cfg).unwrap();
                if let Some(d) = fiber.dimension {
                    let cap = set.stratum(y).unwrap().dim - 1; // dim S - dim X - 1 with dim X = 1, dim S = dim Y
                    assert!(
                        (d as usize) <= cap,
                        "{name} at {x0}: dim {d} exceeds {cap}"
                    );
                }
            }
        }
    }

    #[test]
    fn c1_evidence_verdicts() {
        let limit_cfg = LimitConfig::default();
        let family_cfg = FamilyConfig::default();
        let grid = [0.0, 0.1, 0.3];

        let sg = catalog("Sg").unwrap();
        let pairs: Vec<_> = grid.iter().map(|&x0| pair_at(&sg, "W", x0)).collect();
        let report = c1_boundary_evidence(&pairs, &family_cfg, &limit_cfg).unwrap();
        match &report.outcome {
            C1Outcome::EvidenceAgainst(msg) => {
                assert!(msg.contains("x0 = 0"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        // the origin is the witness: non-unique limiting planes
        assert_eq!(report.per_point[0].unique, Some(false));
        assert!(report.per_point[0].spread > 0.5);

        let hp = catalog("halfplane").unwrap();
        let pairs: Vec<_> = grid.iter().map(|&x0| pair_at(&hp, "H", x0)).collect();
        let report = c1_boundary_evidence(&pairs, &family_cfg, &limit_cfg).unwrap();
        assert_eq!(report.outcome, C1Outcome::EvidenceFor);

        let cusp = catalog("cusp_demo").unwrap();
        let pairs: Vec<_> = grid.iter().map(|&x0| pair_at(&cusp, "C", x0)).collect();
        let report = c1_boundary_evidence(&pairs, &family_cfg, &limit_cfg).unwrap();
        assert_eq!(report.outcome, C1Outcome::EvidenceFor);
    }
}
