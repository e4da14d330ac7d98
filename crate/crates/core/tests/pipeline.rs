use biconserve_core::meancurv::ModelParams;
use biconserve_core::surface::{biconservativity_residual, point_geometry, sphere_immersion, structure_residuals};
use biconserve_core::verify::{frame_dependent_checks, Pipeline, Tolerances, VerifyGrid};
use biconserve_core::Error;

const SMALL: VerifyGrid = VerifyGrid { n_s: 12, n_t: 6 };

#[test]
fn flagship_report_passes() {
    let pipe = Pipeline::new(&ModelParams::default(), 0.0).unwrap();
    let outcomes = pipe.evaluate_grid(SMALL);
    let report = pipe.summarize(&outcomes, &Tolerances::default().strict()).unwrap();
    assert!(report.pass, "{}", report.table());
    assert_eq!(report.total_points, 72);
    assert!(report.check("planarity").is_none());
}

#[test]
fn perturbation_breaks_only_non_structural_checks() {
    let pipe = Pipeline::new(&ModelParams::default(), 0.01).unwrap();
    let outcomes = pipe.evaluate_grid(SMALL);
    let report = pipe.summarize(&outcomes, &Tolerances::default()).unwrap();
    assert!(!report.pass);
    for name in ["biconservativity", "mean_curvature_identity", "pnmcv"] {
        assert!(!report.check(name).unwrap().pass, "{name} should detect the perturbation");
    }
    for name in ["codazzi", "gauss_equation", "ricci", "q_drift", "profile_congruence"] {
        assert!(report.check(name).unwrap().pass, "{name} should not detect the perturbation");
    }
}

#[test]
fn planar_branch_adds_planarity_checks() {
    let params = ModelParams { c: 0.0, ..ModelParams::default() };
    let pipe = Pipeline::new(&params, 0.0).unwrap();
    let report = pipe.summarize(&pipe.evaluate_grid(SMALL), &Tolerances::default()).unwrap();
    assert!(report.pass, "{}", report.table());
    assert!(report.check("planarity").unwrap().max_residual.unwrap() < 1e-8);
    assert!(report.check("torsion_vanishes").unwrap().max_residual.unwrap() < 1e-10);
}

#[test]
fn strict_halves_every_tolerance() {
    let base = Tolerances::default();
    let strict = base.strict();
    for ((name, a), (_, b)) in base.iter().zip(strict.iter()) {
        assert_eq!(b, 0.5 * a, "{name}");
    }
}

#[test]
fn unknown_tolerance_is_rejected() {
    let mut tol = Tolerances::default();
    assert!(matches!(tol.set("no_such_check", 1.0), Err(Error::UnknownTolerance(_))));
    tol.set("codazzi", 1e-3).unwrap();
    assert_eq!(tol.get("codazzi"), Some(1e-3));
}

#[test]
fn turning_band_points_skip_frame_checks() {
    let pipe = Pipeline::new(&ModelParams::default(), 0.0).unwrap();
    let outcome = pipe.evaluate_point(pipe.solution.s_turn(), 0.2);
    assert!(outcome.skip_reason.is_some());
    for name in frame_dependent_checks() {
        assert_eq!(outcome.residual(name), None, "{name}");
    }
    assert!(outcome.residual("mean_curvature_identity").unwrap() < 1e-8);
}

#[test]
fn round_sphere_is_trivially_biconservative() {
    let r = 1.7;
    let sphere = sphere_immersion(r);
    for &(s, t) in &[(0.3, 0.1), (-0.8, 2.0), (1.2, 4.0)] {
        let pg = point_geometry(&sphere, s, t).unwrap();
        assert!((pg.f - 1.0 / r).abs() < 1e-12);
        assert!((pg.k_intrinsic - 1.0 / (r * r)).abs() < 1e-9);
        assert!(biconservativity_residual(&pg) < 1e-12);
        let st = structure_residuals(&pg, None);
        assert!(st.codazzi < 1e-10 && st.gauss < 1e-10);
    }
}

#[test]
fn errors_classify_parameters() {
    let bad = ModelParams { c2: 1.0, ..ModelParams::default() };
    let err = Pipeline::new(&bad, 0.0).unwrap_err();
    assert!(err.is_parameter_error(), "{err}");
}
