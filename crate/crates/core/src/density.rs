//! Hausdorff-measure truncations ψ(A;u), densities θ (Lelong numbers), and
//! density profiles along a base stratum.
//!
//! Graph strata integrate the area form sqrt(1 + ||∇h||²) over the
//! parameter region cut out by the ambient ball (stratified Monte Carlo in
//! parameter space, exact Jacobian from jets). Region strata estimate
//! volume by Monte Carlo over a bounding box with a membership test.
//! Everything is seeded: identical seed, identical estimate, bit for bit,
//! independent of thread count (per-batch derived seeds, fixed merge
//! order).
//!
//! θ is extrapolated from the per-u normalized values. Besides the
//! Cauchy/Aitken path, a sequence whose successive ratios stay below one
//! and keep decreasing is geometrically dominated, which certifies a zero
//! limit; that rule is what resolves the slowly-decaying off-axis fibers
//! of the subgraph region. θ is clamped to be nonnegative.

use crate::probes::aitken_tail;
use crate::strata::{Stratum, StratumKind};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("density needs a graph or region stratum, got `{0}`")]
    UnsupportedStratum(String),
    #[error("u grid needs at least {need} points, got {got}")]
    GridTooShort { need: usize, got: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { samples: 1_000_000, seed: 51966 }
    }
}

pub fn default_u_grid() -> Vec<f64> {
    (4..=9).map(|k| (2.0f64).powi(-k)).collect()
}

/// Volume of the unit ball in R^k (μ_0 = 1, μ_1 = 2, μ_k = 2π μ_{k-2} / k).
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI * unit_ball_volume(k - 2) / k as f64,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PsiEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Samples skipped because the integrand hit a domain error (happens
    /// on measure-negligible slivers, e.g. cancellation at tiny z).
    pub warnings: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct PerU {
    pub u: f64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaMethod {
    CauchyTail,
    AitkenExtrapolated,
    GeometricDecay,
    Inconclusive,
}

impl ThetaMethod {
    pub fn label(&self) -> &'static str {
        match self {
            ThetaMethod::CauchyTail => "cauchy-tail",
            ThetaMethod::AitkenExtrapolated => "aitken",
            ThetaMethod::GeometricDecay => "geometric-decay",
            ThetaMethod::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub theta: Option<f64>,
    pub stderr: f64,
    pub method: ThetaMethod,
    pub per_u: Vec<PerU>,
    pub warnings: u64,
}

#[derive(Debug, Clone)]
pub struct DensityProfile {
    pub points: Vec<(f64, DensityEstimate)>,
    /// Indices (i, i+1) of adjacent grid points whose θ differ by more
    /// than 3× the combined standard error.
    pub jumps: Vec<(usize, usize)>,
}

fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 over a keyed combination
    let mut x = seed ^ a.wrapping_mul(0x9E3779B97F4A7C15) ^ b.wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

struct CellSum {
    sum: f64,
    sumsq: f64,
    n: u64,
    warnings: u64,
}

/// ψ(A;u) for a graph stratum: stratified Monte Carlo over the parameter
/// box with the ball indicator and exact area Jacobian.
fn psi_graph(stratum: &Stratum, center: &[f64], u: f64, mc: &McConfig) -> Result<PsiEstimate, DensityError> {
    let (expr, domain, layout) = match &stratum.kind {
        StratumKind::Graph { expr, domain, layout, .. } => (expr, domain, layout),
        _ => return Err(DensityError::UnsupportedStratum(stratum.name.clone())),
    };
    let nparams = layout.param_axes.len();
    // bounding box in parameter space: ball shadow intersected with domain
    let mut lo = vec![0.0; nparams];
    let mut hi = vec![0.0; nparams];
    for (i, &ax) in layout.param_axes.iter().enumerate() {
        lo[i] = (center[ax] - u).max(domain.intervals[i].lo);
        hi[i] = (center[ax] + u).min(domain.intervals[i].hi);
        if lo[i] >= hi[i] {
            return Ok(PsiEstimate { value: 0.0, stderr: 0.0, warnings: 0 });
        }
    }
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    // stratify into G cells per axis
    let g: usize = 16;
    let cells: Vec<usize> = (0..g.pow(nparams as u32)).collect();
    let per_cell = (mc.samples / cells.len() as u64).max(16);
    let u2 = u * u;
    let compiled = expr.compile();

    let sums: Vec<CellSum> = cells
        .par_iter()
        .map(|&cell| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(mc.seed, cell as u64, u.to_bits()));
            let mut idx = cell;
            let mut clo = vec![0.0; nparams];
            let mut chi = vec![0.0; nparams];
            for i in 0..nparams {
                let j = idx % g;
                idx /= g;
                let w = (hi[i] - lo[i]) / g as f64;
                clo[i] = lo[i] + j as f64 * w;
                chi[i] = clo[i] + w;
            }
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            let mut warnings = 0u64;
            let mut params = [0.0f64; 2];
            for _ in 0..per_cell {
                for i in 0..nparams {
                    params[i] = clo[i] + (chi[i] - clo[i]) * rng.gen::<f64>();
                }
                if !domain.contains(&params[..nparams]) {
                    continue; // outside (e.g. open face at z = 0): contributes 0
                }
                let (value, grad) = match compiled.jet2(&params) {
                    Ok(j) => j,
                    Err(_) => {
                        warnings += 1;
                        continue;
                    }
                };
                // ambient distance to center
                let mut d2 = 0.0;
                for (i, &ax) in layout.param_axes.iter().enumerate() {
                    let d = params[i] - center[ax];
                    d2 += d * d;
                }
                let dv = value - center[layout.value_axis];
                d2 += dv * dv;
                if d2 <= u2 {
                    let grad2: f64 = grad.iter().map(|g| g * g).sum();
                    let jac = (1.0 + grad2).sqrt();
                    sum += jac;
                    sumsq += jac * jac;
                }
            }
            CellSum { sum, sumsq, n: per_cell, warnings }
        })
        .collect();

    // fixed-order merge: estimate = box_vol * Σ cell_mean / n_cells
    let n_cells = sums.len() as f64;
    let cell_vol = box_vol / n_cells;
    let mut value = 0.0;
    let mut var = 0.0;
    let mut warnings = 0;
    for s in &sums {
        let n = s.n as f64;
        let mean = s.sum / n;
        value += mean * cell_vol;
        let v = (s.sumsq / n - mean * mean).max(0.0) / n;
        var += v * cell_vol * cell_vol;
        warnings += s.warnings;
    }
    Ok(PsiEstimate { value, stderr: var.sqrt(), warnings })
}

/// ψ(A;u) for a region stratum { 0 <= y <= bound(x,z), z >= 0 }: plain
/// Monte Carlo over a bounding box with membership test. The y extent of
/// the box adapts to a coarse upper estimate of the bound.
fn psi_region(stratum: &Stratum, center: &[f64], u: f64, mc: &McConfig) -> Result<PsiEstimate, DensityError> {
    let (bound, domain, layout) = match &stratum.kind {
        StratumKind::Region { bound, domain, layout, .. } => (bound, domain, layout),
        _ => return Err(DensityError::UnsupportedStratum(stratum.name.clone())),
    };
    let compiled = bound.compile();
    // parameter shadow of the ball
    let mut lo = [0.0f64; 2];
    let mut hi = [0.0f64; 2];
    for (i, &ax) in layout.param_axes.iter().enumerate() {
        lo[i] = (center[ax] - u).max(domain.intervals[i].lo);
        hi[i] = (center[ax] + u).min(domain.intervals[i].hi);
        if lo[i] >= hi[i] {
            return Ok(PsiEstimate { value: 0.0, stderr: 0.0, warnings: 0 });
        }
    }
    // coarse bound maximum over the shadow for a tight y box
    let mut y_cap: f64 = 0.0;
    let grid_n = 17;
    for i in 0..grid_n {
        for j in 0..grid_n {
            let x = lo[0] + (hi[0] - lo[0]) * i as f64 / (grid_n - 1) as f64;
            let z = lo[1] + (hi[1] - lo[1]) * j as f64 / (grid_n - 1) as f64;
            if z <= 0.0 {
                continue;
            }
            if let Ok(v) = compiled.value(&[x, z]) {
                y_cap = y_cap.max(v);
            }
        }
    }
    let y_hi = (y_cap * 1.5).min(u).max(1e-12);
    let box_vol = (hi[0] - lo[0]) * (hi[1] - lo[1]) * y_hi;
    let u2 = u * u;
    let batch: u64 = 1 << 16;
    let n_batches = mc.samples.div_ceil(batch);

    let sums: Vec<CellSum> = (0..n_batches)
        .into_par_iter()
        .map(|bi| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(mc.seed, bi ^ 0xD1CE, u.to_bits()));
            let n = batch.min(mc.samples - bi * batch);
            let mut hits = 0u64;
            let mut warnings = 0u64;
            for _ in 0..n {
                let x = lo[0] + (hi[0] - lo[0]) * rng.gen::<f64>();
                let z = lo[1] + (hi[1] - lo[1]) * rng.gen::<f64>();
                let y = y_hi * rng.gen::<f64>();
                if z <= 0.0 || !domain.contains(&[x, z]) {
                    continue;
                }
                // ambient ball test
                let mut d2 = 0.0;
                for (i, &ax) in layout.param_axes.iter().enumerate() {
                    let d = [x, z][i] - center[ax];
                    d2 += d * d;
                }
                let dy = y - center[layout.value_axis];
                d2 += dy * dy;
                if d2 > u2 {
                    continue;
                }
                match compiled.value(&[x, z]) {
                    Ok(b) => {
                        if y <= b {
                            hits += 1;
                        }
                    }
                    Err(_) => warnings += 1,
                }
            }
            CellSum { sum: hits as f64, sumsq: hits as f64, n, warnings }
        })
        .collect();

    let mut hits = 0.0;
    let mut total = 0.0;
    let mut warnings = 0;
    for s in &sums {
        hits += s.sum;
        total += s.n as f64;
        warnings += s.warnings;
    }
    let p = hits / total;
    let value = p * box_vol;
    let stderr = (p * (1.0 - p) / total).sqrt() * box_vol;
    Ok(PsiEstimate { value, stderr, warnings })
}

/// ψ(A;u) = H^k(A ∩ B(center; u)) by seeded Monte Carlo.
pub fn psi(stratum: &Stratum, center: &[f64], u: f64, mc: &McConfig) -> Result<PsiEstimate, DensityError> {
    match &stratum.kind {
        StratumKind::Graph { .. } => psi_graph(stratum, center, u, mc),
        StratumKind::Region { .. } => psi_region(stratum, center, u, mc),
        StratumKind::Affine { .. } => Err(DensityError::UnsupportedStratum(stratum.name.clone())),
    }
}

/// Tolerances of the θ extrapolation.
#[derive(Debug, Clone, Copy)]
pub struct ThetaConfig {
    /// Cauchy tolerance on the per-u tail (widened automatically to 5× the
    /// Monte Carlo noise when that is larger).
    pub tail_tol: f64,
    /// Hard ratio ceiling for the geometric-domination rule; ratios must
    /// also sit below 1 by at least 5× their own noise.
    pub ratio_max: f64,
}

impl Default for ThetaConfig {
    fn default() -> Self {
        ThetaConfig { tail_tol: 2e-3, ratio_max: 0.995 }
    }
}

/// θ(A) at `center`: per-u normalized values and the extrapolated limit.
///
/// The geometric-domination rule runs first: when the tail ratios
/// v_{k+1}/v_k are positive, significantly below one, and non-increasing
/// within noise, the sequence is dominated by a geometric decay and the
/// limit is zero (v_{k+m} ≤ v_k r^m). Otherwise a noise-aware Cauchy tail
/// yields θ directly (Aitken-sharpened when the second difference is
/// resolved against the noise), with the unresolved tail drift folded into
/// the standard error. θ is clamped nonnegative. Anything else is reported
/// inconclusive, with no θ asserted.
pub fn theta(
    stratum: &Stratum,
    center: &[f64],
    u_grid: &[f64],
    mc: &McConfig,
    cfg: &ThetaConfig,
) -> Result<DensityEstimate, DensityError> {
    if u_grid.len() < 5 {
        return Err(DensityError::GridTooShort { need: 5, got: u_grid.len() });
    }
    let k = stratum.dim;
    let mu = unit_ball_volume(k);
    let mut per_u = Vec::with_capacity(u_grid.len());
    let mut warnings = 0;
    for &u in u_grid {
        let est = psi(stratum, center, u, mc)?;
        let norm = mu * u.powi(k as i32);
        per_u.push(PerU { u, value: est.value / norm, stderr: est.stderr / norm });
        warnings += est.warnings;
    }
    let values: Vec<f64> = per_u.iter().map(|p| p.value).collect();
    let sigmas: Vec<f64> = per_u.iter().map(|p| p.stderr).collect();
    let n = values.len();
    let last_sigma = *sigmas.last().unwrap();

    if geometric_decay(&values, &sigmas, cfg.ratio_max) {
        return Ok(DensityEstimate {
            theta: Some(0.0),
            stderr: last_sigma,
            method: ThetaMethod::GeometricDecay,
            per_u,
            warnings,
        });
    }

    // pairwise Cauchy over the last four values (tolerance never below the
    // Monte Carlo noise floor), or a monotone tail whose consecutive steps
    // are within tolerance: then the remaining travel is estimated from
    // the drift and folded into the standard error
    let allow = |i: usize, j: usize| {
        let a = cfg
            .tail_tol
            .max(5.0 * (sigmas[i] * sigmas[i] + sigmas[j] * sigmas[j]).sqrt());
        a * values[i].abs().max(values[j].abs()).max(1.0)
    };
    let pairwise =
        (n - 4..n).all(|i| ((i + 1)..n).all(|j| (values[i] - values[j]).abs() <= allow(i, j)));
    let monotone = values[n / 2..].windows(2).all(|w| w[1] <= w[0])
        || values[n / 2..].windows(2).all(|w| w[1] >= w[0]);
    let consecutive = (n - 4..n - 1).all(|i| (values[i] - values[i + 1]).abs() <= allow(i, i + 1));
    if pairwise || (monotone && consecutive) {
        let drift = (values[n - 1] - values[n - 2]).abs();
        // remaining-travel bound from the drift contraction rate
        let prev_drift = (values[n - 2] - values[n - 3]).abs();
        let rate = if prev_drift > 0.0 { (drift / prev_drift).clamp(0.0, 0.9) } else { 0.0 };
        let travel = drift * rate / (1.0 - rate) + drift;
        let (theta_raw, method, extra) = match aitken_tail(&values) {
            Some(a) if aitken_significant(&values, &sigmas) => {
                let spread = aitken_spread(&values).unwrap_or(0.0);
                (a, ThetaMethod::AitkenExtrapolated, spread)
            }
            _ => (values[n - 1], ThetaMethod::CauchyTail, travel),
        };
        return Ok(DensityEstimate {
            theta: Some(theta_raw.max(0.0)),
            stderr: (last_sigma * last_sigma + extra * extra).sqrt(),
            method,
            per_u,
            warnings,
        });
    }

    Ok(DensityEstimate {
        theta: None,
        stderr: last_sigma,
        method: ThetaMethod::Inconclusive,
        per_u,
        warnings,
    })
}

fn aitken_significant(values: &[f64], sigmas: &[f64]) -> bool {
    let n = values.len();
    if n < 3 {
        return false;
    }
    let d2 = values[n - 1] - 2.0 * values[n - 2] + values[n - 3];
    let noise: f64 = sigmas[n - 3..].iter().map(|s| s * s).sum::<f64>().sqrt() * 2.0;
    d2.abs() > 4.0 * noise.max(1e-300)
}

fn aitken_spread(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 4 {
        return None;
    }
    let a1 = aitken_tail(&values[..n - 1])?;
    let a2 = aitken_tail(values)?;
    Some((a1 - a2).abs())
}

/// Geometric-domination certificate for a zero limit: positive values,
/// every tail ratio at most `ratio_max` and below 1 by 5× its noise, and
/// the ratios non-increasing within 2.5× noise.
fn geometric_decay(values: &[f64], sigmas: &[f64], ratio_max: f64) -> bool {
    let n = values.len();
    let window = 5.min(n - 1);
    if window < 3 {
        return false;
    }
    let mut ratios = Vec::new();
    let mut ratio_sigmas = Vec::new();
    for i in (n - window)..n {
        let (v0, v1) = (values[i - 1], values[i]);
        if v0 <= 0.0 || v1 <= 0.0 {
            return false;
        }
        let r = v1 / v0;
        let s = r * ((sigmas[i - 1] / v0).powi(2) + (sigmas[i] / v1).powi(2)).sqrt();
        ratios.push(r);
        ratio_sigmas.push(s);
    }
    for (&r, &s) in ratios.iter().zip(&ratio_sigmas) {
        if r > ratio_max || r > 1.0 - 5.0 * s {
            return false;
        }
    }
    // non-increasing within 2.5 sigma
    for w in 0..ratios.len() - 1 {
        let allowance = 2.5 * (ratio_sigmas[w].powi(2) + ratio_sigmas[w + 1].powi(2)).sqrt();
        if ratios[w + 1] > ratios[w] + allowance {
            return false;
        }
    }
    true
}

/// θ along a grid of base points, flagging jumps between adjacent
/// estimates that differ by more than 3× the combined standard error.
pub fn density_profile(
    stratum: &Stratum,
    centers: &[Vec<f64>],
    u_grid: &[f64],
    mc: &McConfig,
    cfg: &ThetaConfig,
) -> Result<DensityProfile, DensityError> {
    let mut points = Vec::with_capacity(centers.len());
    for (i, c) in centers.iter().enumerate() {
        // derive a per-point seed so profile points are independent streams
        let mc_i = McConfig { samples: mc.samples, seed: mix_seed(mc.seed, i as u64, 0xA11CE) };
        let first = c.first().copied().unwrap_or(0.0);
        points.push((first, theta(stratum, c, u_grid, &mc_i, cfg)?));
    }
    let mut jumps = Vec::new();
    for i in 0..points.len().saturating_sub(1) {
        let (a, b) = (&points[i].1, &points[i + 1].1);
        if let (Some(ta), Some(tb)) = (a.theta, b.theta) {
            let combined = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
            if (ta - tb).abs() > 3.0 * combined {
                jumps.push((i, i + 1));
            }
        }
    }
    Ok(DensityProfile { points, jumps })
}
