//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (visible with `--nocapture`). Tolerances are pinned in the
//! assertions. Criterion 3a is expected to fail and documents why: the
//! pinned constants C·e^-C describe the flat-curve Kuo-ratio limit only up
//! to bounded factors; the exact limit of the defining ratio is
//! 2C·e^-C/(1+e^-2C), covered by the companion check 3x.

use stratcheck_cli::runner;
use stratcheck_cli::scenario::{self, CheckKind};
use stratcheck_core::cones::{
    basepoint_at, c1_boundary_evidence, check_n, check_npf, cone_fiber, fiber_tangent_cone,
    C1Outcome,
};
use stratcheck_core::density::{
    default_u_grid, density_profile, theta, McConfig, ThetaConfig,
};
use stratcheck_core::expr::parse;
use stratcheck_core::geom::{delta, orthonormalize, Subspace};
use stratcheck_core::numscale::XScalar;
use stratcheck_core::probes::{
    classify_limit, sample_geometric, CurveKind, FamilyConfig, LimitClass, LimitConfig,
    ProbeCurve, ScalarSystem,
};
use stratcheck_core::regularity::{
    check_condition, check_slice_condition, default_eps_grid, rint_check, slice_pair, Condition,
    ConditionTolerances, Outcome, PairAtPoint, QuantityKind, RIntClass,
};
use stratcheck_core::strata::catalog;

fn line(id: &str, pass: bool, detail: &str) {
    println!("ACCEPTANCE {id}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
}

fn origin_pair<'a>(
    set: &'a stratcheck_core::strata::StratifiedSet,
    y: &str,
) -> PairAtPoint<'a> {
    PairAtPoint::new(set, y, "X", vec![0.0; set.ambient_dim]).unwrap()
}

fn pair_at<'a>(
    set: &'a stratcheck_core::strata::StratifiedSet,
    y: &str,
    x0: f64,
) -> PairAtPoint<'a> {
    let base = basepoint_at(set, "X", x0).unwrap();
    PairAtPoint::new(set, y, "X", base).unwrap()
}

fn seeded_frame(dim: usize, k: usize, seed: u64) -> Subspace {
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
    let mut rnd = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    loop {
        let vecs: Vec<Vec<f64>> = (0..k).map(|_| (0..dim).map(|_| rnd()).collect()).collect();
        if let Ok(s) = orthonormalize(&vecs) {
            return s;
        }
    }
}

#[test]
fn criterion_01_grassmann_core() {
    // delta(E,E) = 0
    let e = seeded_frame(3, 2, 42);
    let d_self = delta(&e, &e).unwrap();
    assert!(d_self < 1e-12, "delta(E,E) = {d_self}");

    // delta(span{(1,1)/sqrt2}, span{e1}) = 0.7071... within 1e-9
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let diag = orthonormalize(&[vec![s, s]]).unwrap();
    let e1 = Subspace::span_axes(2, &[0]);
    let d = delta(&diag, &e1).unwrap();
    assert!((d - s).abs() <= 1e-9, "delta = {d}");

    // symmetry for equal dimensions on 100 random pairs
    let mut n = 0;
    let mut worst: f64 = 0.0;
    for dim in [3usize, 4] {
        for k in 1..dim {
            for seed in 0..25u64 {
                let a = seeded_frame(dim, k, 2 * seed + 7 + dim as u64 * 999);
                let b = seeded_frame(dim, k, 2 * seed + 8 + dim as u64 * 999);
                let gap = (delta(&a, &b).unwrap() - delta(&b, &a).unwrap()).abs();
                worst = worst.max(gap);
                n += 1;
            }
        }
    }
    assert!(n >= 100 && worst < 1e-10, "{n} pairs, worst asymmetry {worst:.2e}");
    line("01 grassmann-core", true, &format!("delta diag {d:.12}, worst asymmetry {worst:.2e}"));
}

#[test]
fn criterion_02_sg_cone_fibers_and_n_npf() {
    let sg = catalog("Sg").unwrap();
    let limit_cfg = LimitConfig::default();
    let family_cfg = FamilyConfig {
        sigmas: (1..=19).map(|k| 0.05 * k as f64).collect(),
        ..Default::default()
    };

    // cone fiber at the origin realizes sigma slopes within 1e-3
    let pair = origin_pair(&sg, "W");
    let family = pair.family(&family_cfg);
    let fiber = cone_fiber(&pair, &family, &limit_cfg).unwrap();
    for target in [0.25, 0.5, 0.75] {
        let best = fiber
            .angles
            .iter()
            .map(|a| (a.tan() - target).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(best <= 1e-3, "slope {target}: nearest realized gap {best:.2e}");
    }
    assert_eq!(fiber.dimension, Some(1));

    // fiber at x0 = 0.5 collapses to slope 0
    let pair_half = pair_at(&sg, "W", 0.5);
    let family_half = pair_half.family(&FamilyConfig::default());
    let fiber_half = cone_fiber(&pair_half, &family_half, &limit_cfg).unwrap();
    assert_eq!(fiber_half.dimension, Some(0));
    let max_slope = fiber_half.angles.iter().map(|a| a.tan().abs()).fold(0.0, f64::max);
    assert!(max_slope <= 1e-3, "max slope at 0.5: {max_slope:.2e}");

    // (n) and (npf) fail
    let n_report = check_n(&pair, &family, &limit_cfg).unwrap();
    assert!(!n_report.outcome.holds());
    let npf = check_npf(&sg, "W", "X", &[0.0, 0.1, 0.3], &FamilyConfig::default(), &limit_cfg)
        .unwrap();
    assert!(!npf.outcome.holds());
    line(
        "02 sg-property-1",
        true,
        &format!(
            "sigma slopes realized, collapse at 0.5 (max slope {max_slope:.1e}), (n) FAILS, (npf) FAILS"
        ),
    );
}

fn kuo_limit_on_flat(c: f64) -> f64 {
    let sg = catalog("Sg").unwrap();
    let pair = origin_pair(&sg, "W");
    let curve = ProbeCurve {
        label: format!("flat C={c} q=2"),
        kind: CurveKind::Flat { c, q: 2.0 },
        system: ScalarSystem::Extended,
        x0: 0.0,
        mirrored: false,
        ts: sample_geometric(0.1, 0.5, 40)
            .into_iter()
            .filter(|t| c / (t * t) <= 1e7)
            .collect(),
    };
    let values = pair.quantity_series(&curve, QuantityKind::Kuo).unwrap();
    match classify_limit(&values, &LimitConfig::default()).unwrap().class {
        LimitClass::Converged(l) => l,
        other => panic!("flat C={c}: {other:?}"),
    }
}

/// Criterion 3, value clause as stated: limits pinned to C·e^-C within 5%.
/// This is expected to FAIL: those constants describe the limit only up to
/// bounded factors. The defining ratio ||y||·delta(T_pi X, T_y Y)/||y-pi(y)||
/// converges to 2C·e^-C/(1+e^-2C) instead (criterion_03x freezes that
/// exact value); the factor-2 comes from d g/dx = 2x·ln z·g and the two
/// norm factors from ||(g_x,-1,g_z)|| and ||(y,z)|| = z·sqrt(1+e^-2C).
#[test]
fn criterion_03a_kuo_flat_limit_pinned_value() {
    let pinned = [(0.5, 0.3033), (1.0, 0.3679), (2.0, 0.2707)];
    let mut pass = true;
    let mut details = Vec::new();
    for (c, expect) in pinned {
        let measured = kuo_limit_on_flat(c);
        let exact = 2.0 * c * (-c).exp() / (1.0 + (-2.0 * c).exp());
        let ok = (measured - expect).abs() <= 0.05 * expect;
        pass &= ok;
        details.push(format!(
            "C={c}: measured {measured:.6}, pinned {expect} (exact limit of the defining ratio: {exact:.6})"
        ));
    }
    line("03a kuo-flat-limit-pinned-value", pass, &details.join("; "));
    assert!(
        pass,
        "pinned values C·e^-C are not the limit of the defining ratio: {}",
        details.join("; ")
    );
}

/// Companion to 3a: the same measured limits against the exact constants
/// derived from the on-curve algebra, at 5% (they agree to ~1e-4).
#[test]
fn criterion_03x_kuo_flat_limit_exact_oracle() {
    let mut details = Vec::new();
    for c in [0.5, 1.0, 2.0] {
        let measured = kuo_limit_on_flat(c);
        let exact = 2.0 * c * (-c).exp() / (1.0 + (-2.0 * c).exp());
        assert!(
            (measured - exact).abs() <= 0.05 * exact,
            "C={c}: {measured} vs {exact}"
        );
        details.push(format!("C={c}: {measured:.6} vs {exact:.6}"));
    }
    line("03x kuo-flat-limit-exact-oracle", true, &details.join("; "));
}

#[test]
fn criterion_03b_r_fails_with_flat_witness() {
    let sg = catalog("Sg").unwrap();
    let pair = origin_pair(&sg, "W");
    let family = pair.family(&FamilyConfig::default());
    let verdict =
        check_condition(&pair, Condition::R, &family, &ConditionTolerances::default()).unwrap();
    match &verdict.outcome {
        Outcome::Fails { witness, limit } => {
            assert!(witness.contains("flat"), "witness {witness}");
            line(
                "03b r-fails-flat-witness",
                true,
                &format!("witness {witness}, limit {limit:.6}"),
            );
        }
        other => panic!("(r) on Sg: {other:?}"),
    }
}

#[test]
fn criterion_03c_extended_range_below_0037() {
    let sg = catalog("Sg").unwrap();
    let pair = origin_pair(&sg, "W");
    let ts = vec![0.05, 0.04, 0.037, 0.03, 0.02];
    let mk = |system| ProbeCurve {
        label: "flat C=1 q=2".into(),
        kind: CurveKind::Flat { c: 1.0, q: 2.0 },
        system,
        x0: 0.0,
        mirrored: false,
        ts: ts.clone(),
    };
    let std_vals = pair.quantity_series(&mk(ScalarSystem::Standard), QuantityKind::Kuo).unwrap();
    let ext_vals = pair.quantity_series(&mk(ScalarSystem::Extended), QuantityKind::Kuo).unwrap();
    assert!(std_vals.len() < ts.len(), "standard scalars must die below x ~ 0.037");
    assert_eq!(ext_vals.len(), ts.len(), "extended scalars must survive");
    line(
        "03c extended-range-required",
        true,
        &format!("standard dies after {} of {} samples", std_vals.len(), ts.len()),
    );
}

#[test]
fn criterion_04_sg_property_3() {
    let sg = catalog("Sg").unwrap();
    let pair = origin_pair(&sg, "W");
    let family = pair.family(&FamilyConfig::default());
    let tols = ConditionTolerances::default();
    let a = check_condition(&pair, Condition::A, &family, &tols).unwrap();
    let bpi = check_condition(&pair, Condition::BPi, &family, &tols).unwrap();
    assert_eq!(a.outcome, Outcome::HoldsOnFamily);
    assert_eq!(bpi.outcome, Outcome::HoldsOnFamily);

    // closed-form Q vs eta-based beta at 100 sample points, 1e-8
    let g = parse(stratcheck_core::strata::EXPR_G).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            let x = 0.02 + 0.045 * i as f64;
            let z = 0.4 * (10.0f64).powf(-6.0 + 5.0 * j as f64 / 9.0);
            let jet = g.eval_jet(&[("x", x), ("z", z)]).unwrap();
            let (y, gx, gz) = (jet.value, jet.gradient[0], jet.gradient[1]);
            let q = (-y + z * gz).abs()
                / ((y * y + z * z).sqrt() * (gx * gx + 1.0 + gz * gz).sqrt());
            let beta = pair.beta_via_frames(x, z).unwrap();
            worst = worst.max((q - beta).abs());
        }
    }
    assert!(worst <= 1e-8, "worst |Q - beta| = {worst:.2e}");
    line(
        "04 sg-property-3",
        true,
        &format!("(a), (bpi) HOLDS_ON_FAMILY; worst |Q - beta| = {worst:.2e}"),
    );
}

#[test]
fn criterion_05_sg_property_4_slice() {
    let sg = catalog("Sg").unwrap();
    let pair = origin_pair(&sg, "W");
    let slice = slice_pair(&pair, 0.5).unwrap();
    let mut worst: f64 = 0.0;
    for &(x, lz) in &slice.samples {
        worst = worst.max((lz - 0.5f64.ln() / (x * x)).abs());
    }
    assert!(worst <= 1e-9, "worst log-z gap {worst:.2e}");
    let b = check_slice_condition(&pair, &slice, Condition::B, &ConditionTolerances::default())
        .unwrap();
    assert!(matches!(b.outcome, Outcome::Fails { .. }), "{:?}", b.outcome);
    line(
        "05 sg-property-4-slice",
        true,
        &format!("solved curve within {worst:.2e} of exp(ln a/x²); sliced (b) FAILS"),
    );
}

#[test]
fn criterion_06_density_sg_kg() {
    let cfg = ThetaConfig::default();

    // S_g: theta = 0.5 ± 0.02 across {0, ±0.1, ±0.3}, no jump
    let sg = catalog("Sg").unwrap();
    let w = sg.stratum("W").unwrap();
    let centers: Vec<Vec<f64>> =
        [-0.3, -0.1, 0.0, 0.1, 0.3].iter().map(|&x| vec![x, 0.0, 0.0]).collect();
    let mc = McConfig { samples: 1_000_000, seed: 51966 };
    let prof = density_profile(w, &centers, &default_u_grid(), &mc, &cfg).unwrap();
    let mut sg_details = Vec::new();
    for (x0, est) in &prof.points {
        let t = est.theta.unwrap_or_else(|| panic!("Sg theta inconclusive at {x0}"));
        assert!((t - 0.5).abs() <= 0.02, "Sg theta({x0}) = {t}");
        sg_details.push(format!("{t:.4}"));
    }
    assert!(prof.jumps.is_empty(), "Sg profile flagged jumps {:?}", prof.jumps);

    // K_g: 0.125 ± 0.01 at 0, <= 0.01 at ±0.3, jump flagged (grid and
    // sample count match the bundled kg_density scenario)
    let kg = catalog("Kg").unwrap();
    let r = kg.stratum("R").unwrap();
    let kg_grid: Vec<f64> = (4..=12).map(|k| (2.0f64).powi(-k)).collect();
    let centers: Vec<Vec<f64>> = [-0.3, 0.0, 0.3].iter().map(|&x| vec![x, 0.0, 0.0]).collect();
    let mc_kg = McConfig { samples: 20_000_000, seed: 51966 };
    let prof_kg = density_profile(r, &centers, &kg_grid, &mc_kg, &cfg).unwrap();
    let t_left = prof_kg.points[0].1.theta.expect("Kg(-0.3)");
    let t_mid = prof_kg.points[1].1.theta.expect("Kg(0)");
    let t_right = prof_kg.points[2].1.theta.expect("Kg(0.3)");
    assert!((t_mid - 0.125).abs() <= 0.01, "Kg theta(0) = {t_mid}");
    assert!(t_left <= 0.01 && t_right <= 0.01, "Kg off-axis {t_left}, {t_right}");
    assert!(!prof_kg.jumps.is_empty(), "Kg jump not flagged");
    line(
        "06 density-sg-kg",
        true,
        &format!(
            "Sg thetas [{}] no jump; Kg {t_left:.4}/{t_mid:.4}/{t_right:.4} jump flagged",
            sg_details.join(", ")
        ),
    );
}

#[test]
fn criterion_07_sf_suite() {
    let sf = catalog("Sf").unwrap();
    let pair = origin_pair(&sf, "Y");
    let tols = ConditionTolerances::default();
    // one-sided family: the defining formula is odd in x and cancels
    // catastrophically for x < 0 at extended range
    let family_cfg = FamilyConfig { mirror: false, ..Default::default() };
    let family = pair.family(&family_cfg);
    let r = check_condition(&pair, Condition::R, &family, &tols).unwrap();
    assert_eq!(r.outcome, Outcome::HoldsOnFamily, "(r): {:?}", r.outcome);
    let b = check_condition(&pair, Condition::B, &family, &tols).unwrap();
    assert_eq!(b.outcome, Outcome::HoldsOnFamily, "(b): {:?}", b.outcome);

    let n_report = check_n(&pair, &family, &tols.limit).unwrap();
    assert!(!n_report.outcome.holds(), "(n) should fail");
    let npf = check_npf(&sf, "Y", "X", &[0.0, 0.1, 0.3], &family_cfg, &tols.limit).unwrap();
    assert!(!npf.outcome.holds(), "(npf) should fail");

    // density profile constant 0.5 ± 0.02 over {0, ±0.1}
    let y = sf.stratum("Y").unwrap();
    let centers: Vec<Vec<f64>> = [-0.1, 0.0, 0.1].iter().map(|&x| vec![x, 0.0, 0.0]).collect();
    let mc = McConfig { samples: 1_000_000, seed: 51966 };
    let prof = density_profile(y, &centers, &default_u_grid(), &mc, &ThetaConfig::default())
        .unwrap();
    let mut thetas = Vec::new();
    for (x0, est) in &prof.points {
        let t = est.theta.unwrap_or_else(|| panic!("Sf theta inconclusive at {x0}"));
        assert!((t - 0.5).abs() <= 0.02, "Sf theta({x0}) = {t}");
        thetas.push(format!("{t:.4}"));
    }
    assert!(prof.jumps.is_empty(), "Sf profile flagged jumps");
    line(
        "07 sf-suite",
        true,
        &format!("(r), (b) HOLD; (n), (npf) FAIL; thetas [{}]", thetas.join(", ")),
    );
}

#[test]
fn criterion_08_rint_consistency() {
    let tols = ConditionTolerances::default();
    let grid = default_eps_grid();

    let sg = catalog("Sg").unwrap();
    let sg_pair = origin_pair(&sg, "W");
    assert_eq!(rint_check(&sg_pair, &grid, &tols).unwrap().class, RIntClass::Diverging);

    let sf = catalog("Sf").unwrap();
    let sf_pair = origin_pair(&sf, "Y");
    assert_eq!(rint_check(&sf_pair, &grid, &tols).unwrap().class, RIntClass::Diverging);

    // z³ control: converging, with (n), (npf) and C¹ evidence all passing
    let cusp = catalog("cusp_demo").unwrap();
    let cusp_pair = origin_pair(&cusp, "C");
    let rint = rint_check(&cusp_pair, &grid, &tols).unwrap();
    assert!(matches!(rint.class, RIntClass::Converging(_)), "{:?}", rint.class);

    let limit_cfg = LimitConfig::default();
    let family_cfg = FamilyConfig::default();
    let family = cusp_pair.family(&family_cfg);
    assert!(check_n(&cusp_pair, &family, &limit_cfg).unwrap().outcome.holds());
    assert!(check_npf(&cusp, "C", "X", &[0.0, 0.1, 0.3], &family_cfg, &limit_cfg)
        .unwrap()
        .outcome
        .holds());
    let pairs: Vec<_> = [0.0, 0.1, 0.3].iter().map(|&x| pair_at(&cusp, "C", x)).collect();
    let c1 = c1_boundary_evidence(&pairs, &family_cfg, &limit_cfg).unwrap();
    assert_eq!(c1.outcome, C1Outcome::EvidenceFor);
    line(
        "08 rint-consistency",
        true,
        "Sg, Sf diverging; z³ control converging with (n)/(npf)/C¹ passing",
    );
}

#[test]
fn criterion_09_implication_harness() {
    let tols = ConditionTolerances::default();
    // three polynomially bounded examples where (b) holds: (r) must hold
    let poly_bounded = [("halfplane", "H"), ("plane_graph_zero", "P"), ("cusp_demo", "C")];
    let mut rows = Vec::new();
    for (set_name, y) in poly_bounded {
        let set = catalog(set_name).unwrap();
        let pair = origin_pair(&set, y);
        let family = pair.family(&FamilyConfig::default());
        let b = check_condition(&pair, Condition::B, &family, &tols).unwrap();
        let r = check_condition(&pair, Condition::R, &family, &tols).unwrap();
        assert_eq!(b.outcome, Outcome::HoldsOnFamily, "{set_name} (b)");
        assert_eq!(r.outcome, Outcome::HoldsOnFamily, "{set_name} (r)");
        rows.push((set_name, "b+r hold"));
    }
    // wherever (r) holds on the family, (b) holds on the family
    let all = [
        ("Sg", "W", true),
        ("Sf", "Y", false), // one-sided family (odd function)
        ("halfplane", "H", true),
        ("plane_graph_zero", "P", true),
        ("cusp_demo", "C", true),
    ];
    for (set_name, y, mirror) in all {
        let set = catalog(set_name).unwrap();
        let pair = origin_pair(&set, y);
        let family = pair.family(&FamilyConfig { mirror, ..Default::default() });
        let r = check_condition(&pair, Condition::R, &family, &tols).unwrap();
        if r.outcome == Outcome::HoldsOnFamily {
            let b = check_condition(&pair, Condition::B, &family, &tols).unwrap();
            assert_eq!(
                b.outcome,
                Outcome::HoldsOnFamily,
                "{set_name}: (r) holds but (b) does not"
            );
        }
    }
    line(
        "09 implication-harness",
        true,
        "(b)->(r) on 3 polynomially bounded examples; (r)->(b) on every example",
    );
}

#[test]
fn criterion_10_numeric_substrate() {
    // AD vs central finite differences, relative 1e-6 at smooth points
    let mut worst: f64 = 0.0;
    for text in [stratcheck_core::strata::EXPR_G, stratcheck_core::strata::EXPR_F] {
        let e = parse(text).unwrap();
        for &(x, z) in &[(0.1, 0.2), (0.3, 0.05), (-0.25, 0.4), (0.45, 0.01)] {
            let pt: &[(&str, f64)] = &[("x", x), ("z", z)];
            let jet = e.eval_jet(pt).unwrap();
            for i in 0..2 {
                let h = 1e-6;
                let mut up = pt.to_vec();
                let mut dn = pt.to_vec();
                up[i].1 += h;
                dn[i].1 -= h;
                let fd = (e.eval_value::<f64>(&up).unwrap() - e.eval_value::<f64>(&dn).unwrap())
                    / (2.0 * h);
                let rel = (jet.gradient[i] - fd).abs() / fd.abs().max(1e-6);
                worst = worst.max(rel);
            }
        }
    }
    assert!(worst < 1e-6, "AD vs FD worst relative error {worst:.2e}");

    // extended-range algebra spot suite
    let q = XScalar::from_log(1, -1000.0).div(XScalar::from_log(1, -999.0)).unwrap();
    assert!((q.to_float() - (-1.0f64).exp()).abs() < 1e-12);
    let s = XScalar::from_log(1, -5000.0).add(XScalar::from_log(1, -5000.0));
    assert!((s.logmag().unwrap() - (-5000.0 + 2.0f64.ln())).abs() < 1e-12);
    let x2lnz = XScalar::from_float(0.01)
        .powi(2)
        .unwrap()
        .mul(XScalar::from_log(1, -10000.0).ln().unwrap());
    assert!((x2lnz.to_float() + 1.0).abs() < 1e-14);

    // limit classifier recovers L on synthetic geometric sequences
    for &(l, c, rho) in &[(0.0, 10.0, 0.8), (2.5, -7.0, 0.5), (-1.0, 0.3, 0.3)] {
        let seq: Vec<f64> = (0..50).map(|k| l + c * f64::powi(rho, k)).collect();
        match classify_limit(&seq, &LimitConfig::default()).unwrap().class {
            LimitClass::Converged(est) => assert!((est - l).abs() < 1e-3),
            other => panic!("{other:?}"),
        }
    }

    // fixed-seed bit-reproducibility of CSV outputs
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join("sg_properties.json");
    let mut sc = scenario::load(&path).unwrap();
    sc.conditions = vec![CheckKind::Condition(Condition::A), CheckKind::Density];
    sc.density_samples = 100_000;
    let csv_a = stratcheck_cli::report::render_density_csv(&runner::run(&sc));
    let csv_b = stratcheck_cli::report::render_density_csv(&runner::run(&sc));
    assert_eq!(csv_a.as_bytes(), csv_b.as_bytes(), "CSV not byte-reproducible");

    line(
        "10 numeric-substrate",
        true,
        &format!("AD/FD worst {worst:.2e}; log-domain identities; classifier; CSV bit-stable"),
    );
}

/// Full bundled scenarios end to end through the runner: every expectation
/// in the shipped files must be met (criterion 3's pinned-value question
/// does not arise here because scenario expectations are outcomes, not
/// numeric limits).
#[test]
fn bundled_scenarios_meet_expectations() {
    for name in ["sg_properties.json", "sf_properties.json", "kg_density.json"] {
        let path =
            std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
        let sc = scenario::load(&path).unwrap();
        let report = runner::run(&sc);
        assert!(
            !report.has_errors(),
            "{name}: errors in report: {:?}",
            report
                .checks
                .iter()
                .filter(|c| c.outcome == "ERROR")
                .map(|c| format!("{}: {}", c.name, c.detail))
                .collect::<Vec<_>>()
        );
        assert!(
            report.all_expectations_met(),
            "{name}: {}/{} expectations met: {:?}",
            report.expected_matched,
            report.expected_total,
            report
                .checks
                .iter()
                .filter(|c| c.matched == Some(false))
                .map(|c| format!("{} = {} (expected {:?})", c.name, c.outcome, c.expected))
                .collect::<Vec<_>>()
        );
        println!(
            "ACCEPTANCE bundled {name}: PASS — {}/{} expectations",
            report.expected_matched, report.expected_total
        );
    }
}
