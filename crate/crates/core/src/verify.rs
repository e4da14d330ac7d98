//! End-to-end pipeline (solve, profile, build) and the residual checks run
//! over a verification grid.
//!
//! Point evaluation is a pure function of the pipeline and `(s, t)`, so
//! callers may evaluate grid points in any order or in parallel; the summary
//! depends only on the outcomes in grid order.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::Error;
use crate::linalg4::{rigid_align, RigidMotion, Sym2};
use crate::meancurv::{solve_f, MeanCurvatureSolution, ModelParams};
use crate::profile::{
    closed_form_profile, frame_components_check, frenet_profile, tau_from_radicand, tau_of, ClosedFormProfile,
    ProfileCurve,
};
use crate::surface::{
    biconservativity_residual, build_perturbed_surface, frame_rotation_check, pnmcv_residual, point_geometry,
    structure_residuals, ImmersionJet, PointGeometry,
};

/// Default tolerance of every check, in report order.
pub const TOLERANCE_TABLE: &[(&str, f64)] = &[
    ("q_drift", 1e-9),
    ("second_order_consistency", 1e-9),
    ("unit_speed", 1e-9),
    ("profile_congruence", 1e-7),
    ("frame_components", 1e-8),
    ("torsion_consistency", 1e-10),
    ("frenet_frame_drift", 1e-10),
    ("planarity", 1e-8),
    ("torsion_vanishes", 1e-10),
    ("metric", 1e-8),
    ("frame_orthonormality", 1e-10),
    ("mean_curvature_identity", 1e-8),
    ("shape_operator_a3", 1e-6),
    ("shape_operator_a4", 1e-6),
    ("shape_operator_frame", 1e-6),
    ("pnmcv", 1e-6),
    ("frenet_lift_connection", 1e-6),
    ("biconservativity", 1e-6),
    ("gaussian_curvature_law", 1e-6),
    ("gauss_equation", 1e-7),
    ("codazzi", 1e-6),
    ("ricci", 1e-6),
    ("connection", 1e-6),
    ("e2_f", 1e-8),
    ("e1_f_ode", 1e-8),
    ("frame_rotation", 1e-6),
    ("grid_coverage", 0.05),
];

/// Checks that only apply to the planar branch `c = 0`.
const PLANAR_ONLY: &[&str] = &["planarity", "torsion_vanishes"];

/// Per-point checks that need `e₁` along `grad f`.
const FRAME_DEPENDENT: &[&str] =
    &["shape_operator_frame", "frenet_lift_connection", "connection", "e2_f", "e1_f_ode", "frame_rotation"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    values: Vec<(String, f64)>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { values: TOLERANCE_TABLE.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), Error> {
        match self.values.iter_mut().find(|(k, _)| k == name) {
            Some(slot) => {
                slot.1 = value;
                Ok(())
            }
            None => Err(Error::UnknownTolerance(name.to_string())),
        }
    }

    /// Every tolerance halved.
    pub fn strict(&self) -> Self {
        Self { values: self.values.iter().map(|(k, v)| (k.clone(), v * 0.5)).collect() }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// `n_s × n_t` cell-centred grid in `s`, one full `t`-period in `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VerifyGrid {
    pub n_s: usize,
    pub n_t: usize,
}

impl Default for VerifyGrid {
    fn default() -> Self {
        Self { n_s: 64, n_t: 64 }
    }
}

/// Everything built from one parameter set.
#[derive(Debug)]
pub struct Pipeline {
    pub params: ModelParams,
    pub solution: Arc<MeanCurvatureSolution>,
    pub profile: Arc<ClosedFormProfile>,
    pub closed_curve: ProfileCurve,
    pub frenet_curve: ProfileCurve,
    /// Frenet curve aligned onto the closed-form curve.
    pub congruence: RigidMotion,
    pub surface: ImmersionJet,
    /// `α₂` is scaled by `1 + perturbation`.
    pub perturbation: f64,
}

/// RK4 steps per solution-grid interval in the Frenet integration.
pub const FRENET_SUBSTEPS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointOutcome {
    pub s: f64,
    pub t: f64,
    /// Why some checks were not evaluated here.
    pub skip_reason: Option<String>,
    /// Residual per check name; `None` where the check was skipped.
    pub residuals: BTreeMap<&'static str, Option<f64>>,
    pub geometry: Option<PointGeometry>,
}

impl PointOutcome {
    pub fn residual(&self, check: &str) -> Option<f64> {
        self.residuals.get(check).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub check: String,
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub evaluated: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckSummary>,
    pub total_points: usize,
    pub skipped_points: usize,
    pub skip_reasons: BTreeMap<String, usize>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.check == name)
    }

    /// Fixed-width table for terminals.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<26} {:>13} {:>10} {:>6} {:>9} {:>7}\n",
            "check", "max_residual", "tolerance", "pass", "evaluated", "skipped"
        );
        for c in &self.checks {
            let r = c.max_residual.map_or("n/a".to_string(), |v| format!("{v:.3e}"));
            out += &format!(
                "{:<26} {:>13} {:>10.1e} {:>6} {:>9} {:>7}\n",
                c.check,
                r,
                c.tolerance,
                if c.pass { "ok" } else { "FAIL" },
                c.evaluated,
                c.skipped
            );
        }
        out += &format!("overall: {}\n", if self.pass { "PASS" } else { "FAIL" });
        out
    }
}

fn max_with_nan(acc: Option<f64>, v: f64) -> Option<f64> {
    match acc {
        _ if v.is_nan() => Some(f64::NAN),
        Some(a) if a.is_nan() => Some(a),
        Some(a) => Some(a.max(v)),
        None => Some(v),
    }
}

fn sym_dist(x: &Sym2, y: &Sym2) -> f64 {
    (x.xx - y.xx).abs().max((x.xy - y.xy).abs()).max((x.yy - y.yy).abs())
}

impl Pipeline {
    pub fn new(params: &ModelParams, perturbation: f64) -> Result<Self, Error> {
        let solution = Arc::new(solve_f(params)?);
        let profile = Arc::new(ClosedFormProfile::new(solution.clone())?);
        let closed_curve = closed_form_profile(&profile)?;
        let frenet_curve = frenet_profile(&solution, FRENET_SUBSTEPS)?;
        let congruence = rigid_align(&frenet_curve.positions(), &closed_curve.positions())?;
        let surface = build_perturbed_surface(profile.clone(), 1.0 + perturbation);
        Ok(Self {
            params: params.clone(),
            solution,
            profile,
            closed_curve,
            frenet_curve,
            congruence,
            surface,
            perturbation,
        })
    }

    fn planar(&self) -> bool {
        self.params.c == 0.0
    }

    /// Check names in report order for this parameter set.
    pub fn check_names(&self) -> Vec<&'static str> {
        TOLERANCE_TABLE.iter().map(|(k, _)| *k).filter(|k| self.planar() || !PLANAR_ONLY.contains(k)).collect()
    }

    /// Cell-centred `s` over the solved span, `t` over `[0, 2π/c₂)`.
    pub fn grid_points(&self, grid: VerifyGrid) -> Vec<(f64, f64)> {
        let (a, b) = self.solution.span();
        let period = self.surface.t_period().unwrap_or(2.0 * std::f64::consts::PI);
        let mut out = Vec::with_capacity(grid.n_s * grid.n_t);
        for i in 0..grid.n_s {
            let s = a + (b - a) * (i as f64 + 0.5) / grid.n_s as f64;
            for j in 0..grid.n_t {
                out.push((s, period * j as f64 / grid.n_t as f64));
            }
        }
        out
    }

    /// Residuals computed once per run, with the number of samples behind each.
    pub fn global_residuals(&self) -> Result<Vec<(&'static str, f64, usize)>, Error> {
        let sol = &self.solution;
        let n = sol.samples().len();
        let c = self.params.c;
        let closed = &self.closed_curve;
        let frenet = &self.frenet_curve;
        let components = frame_components_check(closed, sol)?.max().max(frame_components_check(frenet, sol)?.max());
        let mut torsion: f64 = 0.0;
        let mut torsion_n = 0;
        for p in &closed.samples {
            if sol.in_exclusion_band(p.s) {
                continue;
            }
            let (f, fp) = sol.evaluate(p.s)?;
            let a = tau_of(f, fp, c)?;
            let b = tau_from_radicand(f, &self.params, sol.branch_at(p.s))?;
            torsion = torsion.max((a - b).abs() / (1.0 + a.abs()));
            torsion_n += 1;
        }
        let mut out = vec![
            ("q_drift", sol.q_drift(), n),
            ("second_order_consistency", sol.second_order_residual(), n),
            ("unit_speed", closed.max_speed_deviation(), n),
            ("profile_congruence", self.congruence.rmsd, n),
            ("frame_components", components, 2 * n),
            ("torsion_consistency", torsion, torsion_n),
            (
                "frenet_frame_drift",
                frenet.max_frame_defect().max(closed.max_frame_defect()).max(frenet.max_projection_correction),
                2 * n,
            ),
        ];
        if self.planar() {
            out.push(("planarity", closed.planarity().max(frenet.planarity()), 2 * n));
            let tau_max = closed.samples.iter().chain(&frenet.samples).map(|p| p.tau.abs()).fold(0.0, f64::max);
            out.push(("torsion_vanishes", tau_max, 2 * n));
        }
        Ok(out)
    }

    /// All per-point residuals at `(s, t)`.
    pub fn evaluate_point(&self, s: f64, t: f64) -> PointOutcome {
        let mut residuals: BTreeMap<&'static str, Option<f64>> = BTreeMap::new();
        let pg = match point_geometry(&self.surface, s, t) {
            Ok(pg) => pg,
            Err(err) => {
                return PointOutcome { s, t, skip_reason: Some(err.to_string()), residuals, geometry: None };
            }
        };
        let (f_sol, fp_sol) = match self.solution.evaluate(s) {
            Ok(v) => v,
            Err(err) => {
                return PointOutcome { s, t, skip_reason: Some(err.to_string()), residuals, geometry: Some(pg) };
            }
        };
        let c = self.params.c;
        let f = f_sol;
        let frame_ok = pg.frame_aligned && !pg.excluded;

        let g_target = f.powf(-1.5);
        residuals.insert(
            "metric",
            Some((pg.g.xx - 1.0).abs().max(pg.g.xy.abs() / g_target.sqrt()).max((pg.g.yy / g_target - 1.0).abs())),
        );
        let frame = [pg.e1, pg.e2, pg.e3, pg.e4];
        let mut ortho: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                ortho = ortho.max((frame[i].dot(&frame[j]) - target).abs());
            }
        }
        residuals.insert("frame_orthonormality", Some(ortho));
        residuals.insert("mean_curvature_identity", Some((pg.f - f).abs() / f));

        let e3 = pg.a3.eig().values;
        residuals.insert("shape_operator_a3", Some((e3[0] + f).abs().max((e3[1] - 3.0 * f).abs()) / (1.0 + f)));
        let lambda = c.abs() * f.powf(1.5);
        let e4 = pg.a4.eig().values;
        residuals
            .insert("shape_operator_a4", Some((e4[0] + lambda).abs().max((e4[1] - lambda).abs()) / (1.0 + lambda)));
        residuals
            .insert("shape_operator_frame", frame_ok.then(|| sym_dist(&pg.a3, &Sym2::diag(-f, 3.0 * f)) / (1.0 + f)));

        residuals.insert("pnmcv", Some(pnmcv_residual(&pg)));
        let tau = tau_of(f, fp_sol, c).unwrap_or(f64::NAN).abs();
        residuals.insert(
            "frenet_lift_connection",
            pg.frenet_lift
                .filter(|_| frame_ok)
                .map(|l| (l.normal_derivative_e3_hat[0] - tau).abs().max(l.normal_derivative_e3_hat[1])),
        );
        residuals.insert("biconservativity", Some(biconservativity_residual(&pg)));

        let st = structure_residuals(&pg, Some(c));
        residuals.insert("gaussian_curvature_law", st.curvature_law);
        residuals.insert("gauss_equation", Some(st.gauss));
        residuals.insert("codazzi", Some(st.codazzi));
        residuals.insert("ricci", st.ricci);
        residuals.insert("connection", st.connection.filter(|_| frame_ok));
        let grad_norm = pg.grad_f[0].hypot(pg.grad_f[1]);
        residuals.insert("e2_f", frame_ok.then(|| pg.grad_f[1].abs() / (1.0 + grad_norm)));
        residuals
            .insert("e1_f_ode", frame_ok.then(|| (pg.grad_f[0] - pg.e1_sign * fp_sol).abs() / (1.0 + fp_sol.abs())));
        residuals.insert(
            "frame_rotation",
            frame_rotation_check(&pg, c)
                .filter(|_| frame_ok)
                .map(|r| r.rotation.max(r.conjugation / (1.0 + f)).max(r.diagonal / (1.0 + f))),
        );

        let skip_reason = if pg.excluded {
            Some("turning-point exclusion band".to_string())
        } else if !pg.frame_aligned {
            Some("grad f below threshold".to_string())
        } else if residuals.values().any(Option::is_none) {
            Some("check unavailable at point".to_string())
        } else {
            None
        };
        PointOutcome { s, t, skip_reason, residuals, geometry: Some(pg) }
    }

    /// Evaluates every grid point in order on the current thread.
    pub fn evaluate_grid(&self, grid: VerifyGrid) -> Vec<PointOutcome> {
        self.grid_points(grid).into_iter().map(|(s, t)| self.evaluate_point(s, t)).collect()
    }

    pub fn summarize(&self, outcomes: &[PointOutcome], tolerances: &Tolerances) -> Result<VerificationReport, Error> {
        let globals = self.global_residuals()?;
        let total = outcomes.len();
        let skipped_points = outcomes.iter().filter(|o| o.skip_reason.is_some()).count();
        let mut skip_reasons = BTreeMap::new();
        for o in outcomes {
            if let Some(r) = &o.skip_reason {
                *skip_reasons.entry(r.clone()).or_insert(0) += 1;
            }
        }
        let mut checks = Vec::new();
        for name in self.check_names() {
            let tolerance = tolerances.get(name).ok_or_else(|| Error::UnknownTolerance(name.to_string()))?;
            let (max_residual, evaluated, skipped) =
                if let Some((_, r, n)) = globals.iter().find(|(k, _, _)| *k == name) {
                    (Some(*r), *n, 0)
                } else if name == "grid_coverage" {
                    let fraction = if total == 0 { 1.0 } else { skipped_points as f64 / total as f64 };
                    (Some(fraction), total, skipped_points)
                } else {
                    let mut worst = None;
                    let (mut evaluated, mut skipped) = (0, 0);
                    for o in outcomes {
                        match o.residuals.get(name).copied().flatten() {
                            Some(r) => {
                                worst = max_with_nan(worst, r);
                                evaluated += 1;
                            }
                            None => skipped += 1,
                        }
                    }
                    (worst, evaluated, skipped)
                };
            let pass = match max_residual {
                Some(r) => r <= tolerance,
                None => false,
            };
            checks.push(CheckSummary { check: name.to_string(), max_residual, tolerance, pass, evaluated, skipped });
        }
        let pass = checks.iter().all(|c| c.pass);
        Ok(VerificationReport { checks, total_points: total, skipped_points, skip_reasons, pass })
    }
}

/// Names of checks that need an aligned frame.
pub fn frame_dependent_checks() -> &'static [&'static str] {
    FRAME_DEPENDENT
}
