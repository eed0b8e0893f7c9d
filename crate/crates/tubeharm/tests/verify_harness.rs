//! Experiment registry, acceptance rules, fitted constants and reports.

use tubeharm::cone::PolyhedralCone;
use tubeharm::harness::{
    bump_family, default_bump, find, run, write_csv, Check, ExperimentConfig, Family,
    FittedConstant, Relation, CSV_HEADER, FAMILY_SIZE, FIT_SLACK, REGISTRY,
};
use tubeharm::Error;

#[test]
fn registry_ids_are_unique_and_resolvable() {
    assert_eq!(REGISTRY.len(), 13);
    for (i, e) in REGISTRY.iter().enumerate() {
        assert!(e.id.starts_with("exp_"));
        assert!(REGISTRY[i + 1..].iter().all(|o| o.id != e.id));
        assert_eq!(find(e.id).unwrap().id, e.id);
    }
    assert!(matches!(find("exp_missing"), Err(Error::ConfigInvalid(_))));
    let cfg = ExperimentConfig::with_cone(PolyhedralCone::axis(2));
    assert!(matches!(
        run("exp_missing", &cfg),
        Err(Error::ConfigInvalid(_))
    ));
}

#[test]
fn check_relations() {
    assert!(Check::below("q", 0.5, 1.0).pass);
    assert!(!Check::below("q", 1.0, 1.0).pass);
    assert!(Check::at_most("q", 1.0, 1.0).pass);
    assert!(Check::at_least("q", 1.0, 1.0).pass);
    assert!(!Check::at_least("q", 0.9, 1.0).pass);
    let w = Check::within("q", 1.05, 1.0, 0.1);
    assert!(w.pass && w.relation == Relation::Within && w.target == Some(1.0));
    assert!(!Check::within("q", 1.2, 1.0, 0.1).pass);
    // Non-finite measurements never pass.
    assert!(!Check::at_most("q", f64::NAN, 1.0).pass);
    assert!(!Check::at_least("q", f64::INFINITY, 1.0).pass);
}

#[test]
fn fitted_constants_use_family_maxima_and_slack() {
    let ok = FittedConstant::fit("c", &[1.0, 2.0, 1.5], &[2.1, 0.3]);
    assert_eq!(
        (ok.calibrated, ok.held_out, ok.slack),
        (2.0, 2.1, FIT_SLACK)
    );
    assert!(ok.pass);
    assert!(!FittedConstant::fit("c", &[1.0], &[1.2]).pass);
    assert!(!FittedConstant::fit("c", &[1.0, f64::NAN], &[0.5]).pass);
}

#[test]
fn bump_families_are_seeded_and_inside_the_dual_cone() {
    let cone = PolyhedralCone::cone_b();
    let dual = cone.dual().unwrap();
    let a = bump_family(&cone, 7, Family::Calibration, FAMILY_SIZE, 2.0).unwrap();
    assert_eq!(
        a,
        bump_family(&cone, 7, Family::Calibration, FAMILY_SIZE, 2.0).unwrap()
    );
    let b = bump_family(&cone, 7, Family::HeldOut, FAMILY_SIZE, 2.0).unwrap();
    assert_ne!(a, b);
    for p in a.iter().chain(&b) {
        // The closed ball must clear every generator constraint e_j·ξ > 0.
        for e in &cone.generators {
            let c: f64 = e.iter().zip(&p.center).map(|(x, y)| x * y).sum();
            assert!(c - p.radius > 0.0);
        }
        assert!(p.build(&dual).is_ok());
    }
}

#[test]
fn default_bump_sits_on_the_mean_dual_ray() {
    for cone in [PolyhedralCone::cone_b(), PolyhedralCone::axis(2)] {
        let p = default_bump(&cone, 2.0 * 2f64.sqrt()).unwrap();
        assert!((p.center[0] - 2.0).abs() < 1e-12 && (p.center[1] - 2.0).abs() < 1e-12);
        assert!((p.radius - 1.5).abs() < 1e-12);
    }
}

#[test]
fn harmonicity_verdict_passes_and_reports() {
    let cfg = ExperimentConfig::with_cone(PolyhedralCone::cone_b());
    let v = run("exp_harmonicity", &cfg).unwrap();
    assert!(v.pass);
    assert_eq!(v.seed, cfg.seed);
    assert!(!v.checks.is_empty() && v.checks.iter().all(|c| c.pass));
    let json: serde_json::Value = serde_json::from_str(&v.to_json_line().unwrap()).unwrap();
    assert_eq!(json["id"], "exp_harmonicity");
    assert_eq!(json["checks"].as_array().unwrap().len(), v.checks.len());

    let mut buf = Vec::new();
    write_csv(&mut buf, std::slice::from_ref(&v)).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), v.checks.len());
    assert!(rows
        .iter()
        .all(|r| r.starts_with("exp_harmonicity,") && r.split(',').count() == 5));
}

#[test]
fn overrides_are_validated() {
    let mut cfg = ExperimentConfig::with_cone(PolyhedralCone::axis(2));
    cfg.grid_size = Some(48);
    assert!(run("exp_harmonicity", &cfg).is_err());
}
