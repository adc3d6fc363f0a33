//! Probe-curve families approaching a base point, and limit classification
//! for scalar sequences sampled along them.
//!
//! A verdict built on these curves is evidence, not proof: a condition
//! FAILS when some curve is a conclusive witness, and otherwise only
//! HOLDS-ON-FAMILY. Flat curves construct z = exp(-C/t^q) directly in the
//! log domain, so they remain evaluable long after f64 underflow; their
//! sampling is truncated where log z would pass the configured floor.

use crate::numscale::Scalar;
use crate::strata::{DomainBox, StratumKind};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("too few samples: {got} < {need}")]
    TooFewSamples { got: usize, need: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarSystem {
    Standard,
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    /// z = c·t, x = x0 ± t
    Ray { c: f64 },
    /// x = x0 fixed, z = t
    Vertical,
    /// z = t^p, x = x0 ± t
    Power { p: f64 },
    /// z = exp(-C/t^q), x = x0 ± t
    Flat { c: f64, q: f64 },
    /// z = exp(ln σ / t^2), x = x0 ± t
    Sigma { sigma: f64 },
}

/// One test arc t ↦ (x(t), z(t)) in the parameter plane of a graph stratum.
#[derive(Debug, Clone)]
pub struct ProbeCurve {
    pub label: String,
    pub kind: CurveKind,
    pub system: ScalarSystem,
    /// x-parameter of the base point (catalog bases sit on the x-axis).
    pub x0: f64,
    /// Mirrored copies approach from x < x0.
    pub mirrored: bool,
    pub ts: Vec<f64>,
}

impl ProbeCurve {
    /// Parameter-plane point at curve parameter t, in the scalar system S.
    pub fn param_at<S: Scalar>(&self, t: f64) -> (S, S) {
        let dir = if self.mirrored { -1.0 } else { 1.0 };
        match self.kind {
            CurveKind::Ray { c } => (S::from_f64(self.x0 + dir * t), S::from_f64(c * t)),
            CurveKind::Vertical => (S::from_f64(self.x0), S::from_f64(t)),
            CurveKind::Power { p } => {
                (S::from_f64(self.x0 + dir * t), S::from_f64(t.powf(p)))
            }
            CurveKind::Flat { c, q } => {
                let logz = -c / t.powf(q);
                (S::from_f64(self.x0 + dir * t), S::from_log_parts(1, logz))
            }
            CurveKind::Sigma { sigma } => {
                let logz = sigma.ln() / (t * t);
                (S::from_f64(self.x0 + dir * t), S::from_log_parts(1, logz))
            }
        }
    }

    /// log z at parameter t (used for the sampling floor).
    fn log_z(&self, t: f64) -> f64 {
        match self.kind {
            CurveKind::Ray { c } => (c * t).ln(),
            CurveKind::Vertical => t.ln(),
            CurveKind::Power { p } => p * t.ln(),
            CurveKind::Flat { c, q } => -c / t.powf(q),
            CurveKind::Sigma { sigma } => sigma.ln() / (t * t),
        }
    }
}

/// Family configuration; the defaults mirror the standard family.
#[derive(Debug, Clone)]
pub struct FamilyConfig {
    pub rays: Vec<f64>,
    pub powers: Vec<f64>,
    pub flat_c: Vec<f64>,
    pub flat_q: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub mirror: bool,
    pub t0: f64,
    pub ratio: f64,
    pub count: usize,
    /// Samples where log z would fall below this are dropped.
    pub logmag_floor: f64,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig {
            rays: vec![0.2, 1.0, 5.0],
            powers: vec![2.0, 3.0, 5.0, 8.0],
            flat_c: vec![0.5, 1.0, 2.0],
            flat_q: vec![1.0, 2.0, 3.0],
            sigmas: vec![0.25, 0.5, 0.75],
            mirror: true,
            t0: 0.1,
            ratio: 0.5,
            count: 40,
            logmag_floor: -1e7,
        }
    }
}

/// Geometric parameter grid t_k = t0 · ratio^k.
pub fn sample_geometric(t0: f64, ratio: f64, count: usize) -> Vec<f64> {
    assert!(ratio > 0.0 && ratio < 1.0, "ratio must lie in (0,1)");
    let mut out = Vec::with_capacity(count);
    let mut t = t0;
    for _ in 0..count {
        out.push(t);
        t *= ratio;
    }
    out
}

/// The standard probe family about a base point of a graph pair: rays, the
/// vertical fiber, power curves, flat curves (extended range), σ-curves
/// (extended range), plus mirrored x < x0 copies.
pub fn standard_family(domain: &DomainBox, x0: f64, config: &FamilyConfig) -> Vec<ProbeCurve> {
    let ts_all = sample_geometric(config.t0, config.ratio, config.count);
    let mut curves = Vec::new();
    let mut push = |kind: CurveKind, system: ScalarSystem, label: String, mirrored: bool| {
        let ts: Vec<f64> = ts_all
            .iter()
            .copied()
            .filter(|&t| {
                let dir = if mirrored { -1.0 } else { 1.0 };
                let x = x0 + dir * t;
                let probe = ProbeCurve {
                    label: String::new(),
                    kind,
                    system,
                    x0,
                    mirrored,
                    ts: vec![],
                };
                let logz = probe.log_z(t);
                if logz < config.logmag_floor {
                    return false;
                }
                // domain check in (x, z); extended z compares via log
                let z_for_domain = if logz < -700.0 { 0.0 } else { logz.exp() };
                let zi = domain.intervals[1];
                let z_ok = if z_for_domain == 0.0 {
                    // below underflow: inside any interval open at 0 with hi > 0
                    zi.lo <= 0.0 && zi.hi > 0.0
                } else {
                    zi.contains(z_for_domain)
                };
                domain.intervals[0].contains(x) && z_ok
            })
            .collect();
        if !ts.is_empty() {
            curves.push(ProbeCurve { label, kind, system, x0, mirrored, ts });
        }
    };

    let sides: &[bool] = if config.mirror { &[false, true] } else { &[false] };
    for &m in sides {
        let tag = if m { "-" } else { "+" };
        for &c in &config.rays {
            push(CurveKind::Ray { c }, ScalarSystem::Standard, format!("ray{tag} c={c}"), m);
        }
        push(CurveKind::Vertical, ScalarSystem::Standard, "vertical".into(), m);
        for &p in &config.powers {
            push(CurveKind::Power { p }, ScalarSystem::Standard, format!("power{tag} p={p}"), m);
        }
        for &c in &config.flat_c {
            for &q in &config.flat_q {
                push(
                    CurveKind::Flat { c, q },
                    ScalarSystem::Extended,
                    format!("flat{tag} C={c} q={q}"),
                    m,
                );
            }
        }
        for &s in &config.sigmas {
            push(
                CurveKind::Sigma { sigma: s },
                ScalarSystem::Extended,
                format!("sigma{tag} s={s}"),
                m,
            );
        }
        if !config.mirror {
            break;
        }
    }
    // the vertical fiber does not depend on the side; drop the duplicate
    let mut seen_vertical = false;
    curves.retain(|c| {
        if matches!(c.kind, CurveKind::Vertical) {
            if seen_vertical {
                return false;
            }
            seen_vertical = true;
        }
        true
    });
    curves
}

/// Convenience: the standard family for a declared pair (extracts the graph
/// stratum's domain).
pub fn standard_family_for(
    kind: &StratumKind,
    x0: f64,
    config: &FamilyConfig,
) -> Vec<ProbeCurve> {
    match kind {
        StratumKind::Graph { domain, .. } | StratumKind::Region { domain, .. } => {
            standard_family(domain, x0, config)
        }
        StratumKind::Affine { .. } => panic!("probe families need a graph stratum"),
    }
}

// ---------------------------------------------------------------------------
// Limit classification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitClass {
    Converged(f64),
    Bounded(f64),
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, Copy)]
pub struct LimitConfig {
    /// Cauchy-tail tolerance; differences are measured relative to
    /// max(|v_i|, |v_j|, 1), i.e. absolutely for values of modest size.
    pub converge_tol: f64,
    pub bounded_cap: f64,
    pub diverge_threshold: f64,
    pub min_samples: usize,
}

impl Default for LimitConfig {
    fn default() -> Self {
        LimitConfig {
            converge_tol: 1e-3,
            bounded_cap: 1e3,
            diverge_threshold: 1e6,
            min_samples: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LimitEstimate {
    pub class: LimitClass,
    pub samples_used: usize,
    pub tol: f64,
    pub last: f64,
    /// Aitken-accelerated tail value, when the acceleration was stable.
    pub aitken: Option<f64>,
}

/// Aitken Δ² on the last three values, rejected when the denominator is
/// negligible or the extrapolation leaves the sequence's range wildly.
pub fn aitken_tail(values: &[f64]) -> Option<f64> {
    if values.len() < 3 {
        return None;
    }
    let v1 = values[values.len() - 3];
    let v2 = values[values.len() - 2];
    let v3 = values[values.len() - 1];
    let denom = v3 - 2.0 * v2 + v1;
    let scale = v1.abs().max(v2.abs()).max(v3.abs()).max(1e-300);
    if denom.abs() <= 1e-12 * scale {
        return None;
    }
    let a = v3 - (v3 - v2) * (v3 - v2) / denom;
    let vmax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !a.is_finite() || a.abs() > 2.0 * vmax + 1.0 {
        return None;
    }
    Some(a)
}

/// Classify a scalar sequence sampled along a shrinking parameter.
///
/// Diverging: the trailing half grows monotonically in magnitude, the last
/// value passes the threshold and exceeds 1.5× the mid-sequence value
/// (sustained growth, not a plateau). Converged: the last four samples sit
/// mutually within tolerance, or — for a monotone tail, where oscillation
/// cannot hide — their consecutive differences do; the limit is the last
/// value, Aitken-sharpened when the acceleration is stable. Differences
/// compare against max(|v_i|, |v_j|, 1), so the tolerance acts absolutely
/// for small values and relatively for large ones. Bounded: capped without
/// a settled tail. Otherwise Inconclusive.
pub fn classify_limit(values: &[f64], cfg: &LimitConfig) -> Result<LimitEstimate, ProbeError> {
    if values.len() < cfg.min_samples.max(4) {
        return Err(ProbeError::TooFewSamples {
            got: values.len(),
            need: cfg.min_samples.max(4),
        });
    }
    let n = values.len();
    let last = values[n - 1];
    let mk = |class: LimitClass, aitken: Option<f64>| LimitEstimate {
        class,
        samples_used: n,
        tol: cfg.converge_tol,
        last,
        aitken,
    };

    let half = &values[n / 2..];
    let monotone_growing = half.windows(2).all(|w| w[1].abs() >= w[0].abs());
    if monotone_growing
        && last.abs() > cfg.diverge_threshold
        && last.abs() >= 1.5 * values[n / 2].abs()
    {
        return Ok(mk(LimitClass::Diverging, None));
    }

    let tail = &values[n - 4..];
    let within = |a: f64, b: f64| (a - b).abs() <= cfg.converge_tol * a.abs().max(b.abs()).max(1.0);
    let pairwise = (0..4).all(|i| ((i + 1)..4).all(|j| within(tail[i], tail[j])));
    let monotone_tail = half.windows(2).all(|w| w[1].abs() <= w[0].abs())
        || half.windows(2).all(|w| w[1] >= w[0]);
    let consecutive = tail.windows(2).all(|w| within(w[0], w[1]));
    if pairwise || (monotone_tail && consecutive) {
        let aitken = aitken_tail(values);
        let limit = aitken.unwrap_or(last);
        return Ok(mk(LimitClass::Converged(limit), aitken));
    }

    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs <= cfg.bounded_cap {
        return Ok(mk(LimitClass::Bounded(max_abs), None));
    }
    Ok(mk(LimitClass::Inconclusive, None))
}
