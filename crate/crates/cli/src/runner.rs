//! Scenario execution: runs the requested checks against the resolved set
//! and collects rows for the report writers. Evaluation failures become
//! ERROR rows rather than aborting the run.

use crate::scenario::{CheckKind, Scenario};
use stratcheck_core::cones::{
    basepoint_at, c1_boundary_evidence, check_n, check_npf, cone_fiber, C1Outcome,
};
use stratcheck_core::density::{density_profile, DensityEstimate, McConfig, ThetaConfig};
use stratcheck_core::probes::LimitClass;
use stratcheck_core::regularity::{check_condition, Condition, Outcome, PairAtPoint};

#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: String,
    pub outcome: String,
    pub detail: String,
    pub expected: Option<String>,
    pub matched: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct CurveRow {
    pub pair: String,
    pub condition: String,
    pub curve: String,
    pub classification: String,
    pub limit: f64,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct ConeRow {
    pub pair: String,
    pub base_param: f64,
    pub curve: String,
    pub dir_value_axis: f64,
    pub dir_fiber_axis: f64,
    pub classification: String,
}

#[derive(Debug, Clone)]
pub struct DensityRow {
    pub stratum: String,
    pub base_param: f64,
    pub theta: Option<f64>,
    pub stderr: f64,
    pub method: String,
    pub per_u: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub set_name: String,
    pub checks: Vec<CheckRow>,
    pub curve_rows: Vec<CurveRow>,
    pub cone_rows: Vec<ConeRow>,
    pub density_rows: Vec<DensityRow>,
    pub notes: Vec<String>,
    pub expected_total: usize,
    pub expected_matched: usize,
}

impl Report {
    pub fn all_expectations_met(&self) -> bool {
        self.expected_matched == self.expected_total
    }
    pub fn has_errors(&self) -> bool {
        self.checks.iter().any(|c| c.outcome == "ERROR")
    }
}

fn classification_label(class: &LimitClass) -> String {
    match class {
        LimitClass::Converged(l) => format!("Converged({l:.6e})"),
        LimitClass::Bounded(m) => format!("Bounded({m:.6e})"),
        LimitClass::Diverging => "Diverging".into(),
        LimitClass::Inconclusive => "Inconclusive".into(),
    }
}

fn outcome_label(o: &Outcome) -> String {
    o.short().to_string()
}

fn normalize_expectation(s: &str) -> String {
    let up = s.trim().to_uppercase().replace(['-', ' '], "_");
    match up.as_str() {
        "HOLDS" => "HOLDS_ON_FAMILY".into(),
        "FOR" => "EVIDENCE_FOR".into(),
        "AGAINST" => "EVIDENCE_AGAINST".into(),
        other => other.to_string(),
    }
}

/// Execute every check in the scenario. Conditions run at the first base
/// point; the cone and density checks use the whole base-point grid.
pub fn run(scenario: &Scenario) -> Report {
    let mut report = Report {
        set_name: scenario.set.name.clone(),
        notes: vec![
            "HOLDS_ON_FAMILY is evidence over the probe family, not a proof over all arcs."
                .into(),
        ],
        ..Default::default()
    };
    if scenario.set.name == "Kg" {
        report.notes.push(
            "Kg uses the subgraph model {z >= 0, 0 <= y <= g(x,z)} of the convex hull."
                .into(),
        );
    }
    report.notes.push(
        "(npf) is tested as lower semicontinuity of cone fibers across the base grid, \
         a necessary condition for openness of the cone projection."
            .into(),
    );

    // conditions and (n) anchor at the first base point; the grid checks
    // ((npf), c1, density profiles) sweep all base points in spatial order
    let mut grid: Vec<f64> = scenario.basepoints.iter().map(|b| b[0]).collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let multi_pair = scenario.pairs.len() > 1;

    for (y_name, x_name) in &scenario.pairs {
        let tag = if multi_pair { format!("[{y_name},{x_name}]") } else { String::new() };
        let pair = match PairAtPoint::new(
            &scenario.set,
            y_name,
            x_name,
            scenario.basepoints[0].clone(),
        ) {
            Ok(p) => p,
            Err(e) => {
                report.checks.push(CheckRow {
                    name: format!("pair{tag}"),
                    outcome: "ERROR".into(),
                    detail: e.to_string(),
                    expected: None,
                    matched: None,
                });
                continue;
            }
        };
        let family = pair.family(&scenario.family);

        for check in &scenario.conditions {
            let name = format!("{}{}", check.name(), tag);
            match check {
                CheckKind::Condition(cond) => {
                    match check_condition(&pair, *cond, &family, &scenario.tolerances) {
                        Ok(verdict) => {
                            let detail = match &verdict.outcome {
                                Outcome::Fails { witness, limit } => {
                                    format!("witness: {witness}, limit {limit:.6e}")
                                }
                                Outcome::HoldsOnFamily => {
                                    format!("{} curves conforming", verdict.per_curve.len())
                                }
                                Outcome::Inconclusive => {
                                    let open = verdict
                                        .per_curve
                                        .iter()
                                        .filter(|c| c.conforming.is_none())
                                        .count();
                                    format!("{open} curve(s) unresolved at current caps")
                                }
                            };
                            for c in &verdict.per_curve {
                                report.curve_rows.push(CurveRow {
                                    pair: format!("{y_name},{x_name}"),
                                    condition: cond.to_string(),
                                    curve: c.label.clone(),
                                    classification: classification_label(&c.estimate.class),
                                    limit: match c.estimate.class {
                                        LimitClass::Converged(l) => l,
                                        _ => c.estimate.last,
                                    },
                                    samples: c.estimate.samples_used,
                                });
                            }
                            push_row(&mut report, scenario, name, outcome_label(&verdict.outcome), detail);
                        }
                        Err(e) => push_row(&mut report, scenario, name, "ERROR".into(), e.to_string()),
                    }
                }
                CheckKind::N => match check_n(&pair, &family, &scenario.tolerances.limit) {
                    Ok(r) => {
                        let detail = format!(
                            "fiber dirs {} (dim {:?}), gaps {:.4}/{:.4} rad",
                            r.fiber.angles.len(),
                            r.fiber.dimension,
                            r.hausdorff_fiber_to_cone,
                            r.hausdorff_cone_to_fiber
                        );
                        push_row(&mut report, scenario, name, r.outcome.short().into(), detail);
                    }
                    Err(e) => push_row(&mut report, scenario, name, "ERROR".into(), e.to_string()),
                },
                CheckKind::Npf => {
                    match check_npf(
                        &scenario.set,
                        y_name,
                        x_name,
                        &grid,
                        &scenario.family,
                        &scenario.tolerances.limit,
                    ) {
                        Ok(r) => {
                            let dims: Vec<String> = r
                                .fibers
                                .iter()
                                .map(|f| match f.dimension {
                                    Some(d) => d.to_string(),
                                    None => "?".into(),
                                })
                                .collect();
                            for f in &r.fibers {
                                for e in &f.entries {
                                    if let Some(d) = e.direction {
                                        report.cone_rows.push(ConeRow {
                                            pair: format!("{y_name},{x_name}"),
                                            base_param: f.base_param,
                                            curve: e.label.clone(),
                                            dir_value_axis: d[0],
                                            dir_fiber_axis: d[1],
                                            classification: classification_label(&e.angle.class),
                                        });
                                    }
                                }
                            }
                            let detail = match &r.outcome {
                                stratcheck_core::cones::CheckOutcome::Fails(msg) => {
                                    format!("dims ({}); {}", dims.join(","), msg)
                                }
                                _ => format!("dims ({})", dims.join(",")),
                            };
                            push_row(&mut report, scenario, name, r.outcome.short().into(), detail);
                        }
                        Err(e) => push_row(&mut report, scenario, name, "ERROR".into(), e.to_string()),
                    }
                }
                CheckKind::C1 => {
                    let pairs: Result<Vec<_>, _> = grid
                        .iter()
                        .map(|&x0| {
                            basepoint_at(&scenario.set, x_name, x0).and_then(|b| {
                                PairAtPoint::new(&scenario.set, y_name, x_name, b)
                            })
                        })
                        .collect();
                    match pairs.map_err(stratcheck_core::cones::ConesError::from).and_then(|ps| {
                        c1_boundary_evidence(&ps, &scenario.family, &scenario.tolerances.limit)
                    }) {
                        Ok(r) => {
                            let detail = match &r.outcome {
                                C1Outcome::EvidenceAgainst(msg) => msg.clone(),
                                C1Outcome::EvidenceFor => {
                                    format!("{} grid points, unique limit planes", r.per_point.len())
                                }
                            };
                            push_row(&mut report, scenario, name, r.outcome.short().into(), detail);
                        }
                        Err(e) => push_row(&mut report, scenario, name, "ERROR".into(), e.to_string()),
                    }
                }
                CheckKind::Density => {} // handled once below
            }
        }
    }

    if scenario.conditions.iter().any(|c| matches!(c, CheckKind::Density)) {
        run_density(scenario, &mut report);
    }

    report.expected_total = scenario.expect.len();
    report
}

fn run_density(scenario: &Scenario, report: &mut Report) {
    let stratum_name = match scenario
        .density_stratum
        .clone()
        .or_else(|| scenario.pairs.first().map(|p| p.0.clone()))
    {
        Some(s) => s,
        None => {
            push_row(
                report,
                scenario,
                "density".into(),
                "ERROR".into(),
                "no density stratum: the set declares no pairs and none was named".into(),
            );
            return;
        }
    };
    let stratum = match scenario.set.stratum(&stratum_name) {
        Ok(s) => s,
        Err(e) => {
            push_row(report, scenario, "density".into(), "ERROR".into(), e.to_string());
            return;
        }
    };
    let mc = McConfig { samples: scenario.density_samples, seed: scenario.density_seed };
    let cfg = ThetaConfig::default();
    let mut centers = scenario.basepoints.clone();
    centers.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
    match density_profile(stratum, &centers, &scenario.density_grid, &mc, &cfg) {
        Ok(profile) => {
            let mut all_conclusive = true;
            for (x0, est) in &profile.points {
                push_density_row(report, &stratum_name, *x0, est);
                if est.theta.is_none() {
                    all_conclusive = false;
                }
            }
            let outcome = if !profile.jumps.is_empty() {
                "JUMP"
            } else if all_conclusive {
                "CONSTANT"
            } else {
                "INCONCLUSIVE"
            };
            let thetas: Vec<String> = profile
                .points
                .iter()
                .map(|(x, e)| match e.theta {
                    Some(t) => format!("theta({x}) = {t:.4} ± {:.4}", e.stderr),
                    None => format!("theta({x}) inconclusive"),
                })
                .collect();
            let detail = format!(
                "{}{}",
                thetas.join("; "),
                if profile.jumps.is_empty() {
                    String::new()
                } else {
                    format!(
                        "; jump between grid indices {:?}",
                        profile.jumps
                    )
                }
            );
            push_row(report, scenario, "density".into(), outcome.into(), detail);
        }
        Err(e) => push_row(report, scenario, "density".into(), "ERROR".into(), e.to_string()),
    }
}

fn push_density_row(report: &mut Report, stratum: &str, x0: f64, est: &DensityEstimate) {
    report.density_rows.push(DensityRow {
        stratum: stratum.to_string(),
        base_param: x0,
        theta: est.theta,
        stderr: est.stderr,
        method: est.method.label().to_string(),
        per_u: est.per_u.iter().map(|p| (p.u, p.value)).collect(),
    });
}

fn push_row(report: &mut Report, scenario: &Scenario, name: String, outcome: String, detail: String) {
    let expected = scenario.expect.get(&name).cloned();
    let matched = expected
        .as_ref()
        .map(|e| normalize_expectation(e) == normalize_expectation(&outcome));
    if matched == Some(true) {
        report.expected_matched += 1;
    }
    report.checks.push(CheckRow { name, outcome, detail, expected, matched });
}

/// Direct fiber run for the `cone` subcommand: dimension per grid point.
pub fn cone_dimensions(scenario: &Scenario, grid: &[f64]) -> Result<Vec<(f64, Option<u8>)>, String> {
    let (y_name, x_name) = scenario.pairs.first().ok_or("no pairs declared")?.clone();
    let mut out = Vec::new();
    for &x0 in grid {
        let base = basepoint_at(&scenario.set, &x_name, x0).map_err(|e| e.to_string())?;
        let pair = PairAtPoint::new(&scenario.set, &y_name, &x_name, base)
            .map_err(|e| e.to_string())?;
        let family = pair.family(&scenario.family);
        let fiber = cone_fiber(&pair, &family, &scenario.tolerances.limit)
            .map_err(|e| e.to_string())?;
        out.push((x0, fiber.dimension));
    }
    Ok(out)
}

/// Slice run for the `slice` subcommand.
pub fn slice_check(scenario: &Scenario, a: f64) -> Result<(String, String), String> {
    let (y_name, x_name) = scenario.pairs.first().ok_or("no pairs declared")?.clone();
    let pair = PairAtPoint::new(
        &scenario.set,
        &y_name,
        &x_name,
        scenario.basepoints[0].clone(),
    )
    .map_err(|e| e.to_string())?;
    let slice = stratcheck_core::regularity::slice_pair(&pair, a).map_err(|e| e.to_string())?;
    let verdict = stratcheck_core::regularity::check_slice_condition(
        &pair,
        &slice,
        Condition::B,
        &scenario.tolerances,
    )
    .map_err(|e| e.to_string())?;
    let detail = match &verdict.outcome {
        Outcome::Fails { witness, limit } => format!("witness: {witness}, limit {limit:.6e}"),
        _ => format!("{} solved samples", slice.samples.len()),
    };
    Ok((verdict.outcome.short().to_string(), detail))
}

