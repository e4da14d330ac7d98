//! The profile curve in E³: curvature `κ = f sqrt(1 + c² f)`, torsion
//! `τ = c f' / (2 sqrt(f) (1 + c² f))`, built either in closed form from the
//! solution `f` or by integrating the Frenet equations.

use std::io::{self, Write};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::jet::{BasePoint, Jet3, JetError};
use crate::jetvec;
use crate::linalg4::{centered_singular_values, Vec3};
use crate::meancurv::{Branch, MeanCurvatureError, MeanCurvatureSolution, ModelParams};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("mean curvature must be positive, got f = {f}")]
    Domain { f: f64 },
    #[error("curvature must stay positive, got κ = {kappa} at s = {s}")]
    InvalidCurvature { s: f64, kappa: f64 },
    #[error("initial frame components are inconsistent: {0}")]
    InitialFrame(&'static str),
    #[error("frenet grid needs at least two increasing arc lengths")]
    Grid,
    #[error(transparent)]
    Solution(#[from] MeanCurvatureError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

type Result<T> = std::result::Result<T, ProfileError>;

pub fn kappa_of(f: f64, c: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(ProfileError::Domain { f });
    }
    Ok(f * (1.0 + c * c * f).sqrt())
}

pub fn tau_of(f: f64, fprime: f64, c: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(ProfileError::Domain { f });
    }
    Ok(c * fprime / (2.0 * f.sqrt() * (1.0 + c * c * f)))
}

/// Torsion written through the radicand: `2 c ε sqrt(R/f) / (3 (c² f + 1))`.
pub fn tau_from_radicand(f: f64, params: &ModelParams, eps: Branch) -> Result<f64> {
    let radicand = params.radicand(f)?.max(0.0);
    let c = params.c;
    Ok(2.0 * c * eps.sign() * (radicand / f).sqrt() / (3.0 * (c * c * f + 1.0)))
}

/// `θ' = 2 c c₂ f^{5/4} / (c² f + 9)`.
pub fn theta_rate(f: f64, c: f64, c2: f64) -> f64 {
    2.0 * c * c2 * f.powf(1.25) / (c * c * f + 9.0)
}

/// `f^{1/4} sqrt(c² f + 9)`, the common factor of `α₂'` and `α₃'`.
fn planar_speed(f: f64, c: f64) -> f64 {
    f.powf(0.25) * (c * c * f + 9.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrenetFrame {
    pub t: Vec3,
    pub n: Vec3,
    pub b: Vec3,
}

impl FrenetFrame {
    /// `‖GᵀG − I‖_F` for `G = [T N B]`.
    pub fn orthonormality_defect(&self) -> f64 {
        let v = [self.t, self.n, self.b];
        let mut sum = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                sum += (v[i].dot(&v[j]) - target).powi(2);
            }
        }
        sum.sqrt()
    }

    /// Frame at the start of the profile from the first components of `T`,
    /// `N` and `B`: `T = (t1, sqrt(1 − t1²), 0)`, `N ⟂ T` with first component
    /// `n1`, and `N₃ = b1 / T₂` so that `B₁ = b1`.
    pub fn from_first_components(t1: f64, n1: f64, b1: f64) -> Result<Self> {
        if !(t1.abs() < 1.0) {
            return Err(ProfileError::InitialFrame("|t1| must be below 1"));
        }
        let t2 = (1.0 - t1 * t1).sqrt();
        let n2 = -t1 * n1 / t2;
        let n3 = b1 / t2;
        let n = Vec3::new(n1, n2, n3);
        if (n.norm_squared() - 1.0).abs() > 1e-8 {
            return Err(ProfileError::InitialFrame("first components do not give a unit normal"));
        }
        let t = Vec3::new(t1, t2, 0.0);
        let n = n.normalize();
        let b = t.cross(&n);
        Ok(Self { t, n, b })
    }
}

/// First components of `T`, `N`, `B` predicted from `f` and `f'`.
pub fn frame_first_components(f: f64, fprime: f64, c: f64, c2: f64) -> [f64; 3] {
    let root = (c * c * f + 1.0).sqrt();
    let t1 = -0.75 * fprime / (c2 * f.powf(1.75));
    let n1 = f.powf(0.25) * (c * c * f + 3.0) / (c2 * root);
    let b1 = -2.0 * c * f.powf(0.75) / (c2 * root);
    [t1, n1, b1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProfileMethod {
    ClosedForm,
    Frenet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub s: f64,
    pub position: Vec3,
    pub frame: FrenetFrame,
    pub kappa: f64,
    pub tau: f64,
    /// `|α'(s)|`.
    pub speed: f64,
}

#[derive(Debug, Clone)]
pub struct ProfileCurve {
    pub method: ProfileMethod,
    pub samples: Vec<CurveSample>,
    /// Largest orthonormality defect removed by re-projection during integration.
    pub max_projection_correction: f64,
}

impl ProfileCurve {
    pub fn positions(&self) -> Vec<Vec3> {
        self.samples.iter().map(|p| p.position).collect()
    }

    pub fn max_speed_deviation(&self) -> f64 {
        self.samples.iter().map(|p| (p.speed - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn max_frame_defect(&self) -> f64 {
        self.samples.iter().map(|p| p.frame.orthonormality_defect()).fold(0.0, f64::max)
    }

    /// Smallest singular value of the centered point cloud, normalized by `1/sqrt(n)`.
    pub fn planarity(&self) -> f64 {
        centered_singular_values(&self.positions())[2]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "s,x,y,z,T1,T2,T3,kappa,tau")?;
        for p in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                p.s, p.position.x, p.position.y, p.position.z, p.frame.t.x, p.frame.t.y, p.frame.t.z, p.kappa, p.tau
            )?;
        }
        Ok(())
    }
}

/// Angle and the two in-plane coordinates at one arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PlanarState {
    theta: f64,
    alpha2: f64,
    alpha3: f64,
}

/// Jets of the profile at one base point (functions of `s` only).
#[derive(Debug, Clone, Copy)]
pub struct ProfileJets {
    pub f: Jet3,
    pub theta: Jet3,
    /// `(α₁, α₂, α₃)`.
    pub alpha: [Jet3; 3],
}

/// The closed-form profile
/// `α = (1/(c₂ f^{3/4}), (1/c₂)∫cos θ · w, −(1/c₂)∫sin θ · w)` with
/// `w = f^{1/4} sqrt(c² f + 9)`, evaluable with jets at any `s` in the span.
#[derive(Debug, Clone)]
pub struct ClosedFormProfile {
    sol: Arc<MeanCurvatureSolution>,
    rule: GaussLegendre,
    knots: Vec<f64>,
    /// Sub-intervals per knot interval.
    pieces: usize,
    states: Vec<PlanarState>,
    refinement_delta: f64,
}

impl ClosedFormProfile {
    pub fn new(sol: Arc<MeanCurvatureSolution>) -> Result<Self> {
        let knots: Vec<f64> = sol.samples().iter().map(|r| r.s).collect();
        let mut profile =
            Self { sol, rule: GaussLegendre::new(16), knots, pieces: 1, states: Vec::new(), refinement_delta: 0.0 };
        loop {
            let mut state = PlanarState { theta: 0.0, alpha2: 0.0, alpha3: 0.0 };
            let mut refined = state;
            let mut states = vec![state];
            for w in profile.knots.windows(2) {
                state = profile.advance_in(w[0], state, w[1], profile.pieces)?;
                refined = profile.advance_in(w[0], refined, w[1], 2 * profile.pieces)?;
                states.push(state);
            }
            profile.states = states;
            profile.refinement_delta = (state.alpha2 - refined.alpha2)
                .abs()
                .max((state.alpha3 - refined.alpha3).abs())
                .max((state.theta - refined.theta).abs());
            if profile.refinement_delta < 1e-10 || profile.pieces >= 64 {
                return Ok(profile);
            }
            profile.pieces *= 2;
        }
    }

    pub fn solution(&self) -> &Arc<MeanCurvatureSolution> {
        &self.sol
    }

    pub fn params(&self) -> &ModelParams {
        self.sol.params()
    }

    /// End-of-span change in `θ, α₂, α₃` when the quadrature is refined once more.
    pub fn refinement_delta(&self) -> f64 {
        self.refinement_delta
    }

    fn advance(&self, a: f64, from: PlanarState, b: f64) -> Result<PlanarState> {
        self.advance_in(a, from, b, self.pieces)
    }

    fn advance_in(&self, a: f64, from: PlanarState, b: f64, pieces: usize) -> Result<PlanarState> {
        let mut state = from;
        for k in 0..pieces {
            let lo = a + (b - a) * k as f64 / pieces as f64;
            let hi = if k + 1 == pieces { b } else { a + (b - a) * (k + 1) as f64 / pieces as f64 };
            state = self.advance_once(lo, state, hi)?;
        }
        Ok(state)
    }

    /// Integrates `θ'`, `α₂'`, `α₃'` from `a` to `b` with a spectral rule.
    fn advance_once(&self, a: f64, from: PlanarState, b: f64) -> Result<PlanarState> {
        if a == b {
            return Ok(from);
        }
        let p = self.sol.params();
        let (c, c2) = (p.c, p.c2);
        let fs = self
            .rule
            .mapped_nodes(a, b)
            .map(|s| self.sol.evaluate(s).map(|(f, _)| f))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let rates: Vec<f64> = fs.iter().map(|&f| theta_rate(f, c, c2)).collect();
        let thetas: Vec<f64> = self.rule.cumulative(a, b, &rates).iter().map(|v| from.theta + v).collect();
        let half = 0.5 * (b - a);
        let (mut d_theta, mut d2, mut d3) = (0.0, 0.0, 0.0);
        for (k, w) in self.rule.weights().iter().enumerate() {
            let speed = planar_speed(fs[k], c) / c2;
            d_theta += w * rates[k];
            d2 += w * thetas[k].cos() * speed;
            d3 -= w * thetas[k].sin() * speed;
        }
        Ok(PlanarState {
            theta: from.theta + half * d_theta,
            alpha2: from.alpha2 + half * d2,
            alpha3: from.alpha3 + half * d3,
        })
    }

    fn state_at(&self, s: f64) -> Result<PlanarState> {
        let (a, b) = self.sol.span();
        if !(s >= a && s <= b) {
            return Err(MeanCurvatureError::OutOfSpan { s, start: a, end: b }.into());
        }
        let k = self.knots.partition_point(|x| *x <= s).saturating_sub(1);
        if self.knots[k] == s {
            return Ok(self.states[k]);
        }
        self.advance(self.knots[k], self.states[k], s)
    }

    /// `θ(s)`, with `θ(s₀) = 0`.
    pub fn theta(&self, s: f64) -> Result<f64> {
        Ok(self.state_at(s)?.theta)
    }

    pub fn position(&self, s: f64) -> Result<Vec3> {
        let st = self.state_at(s)?;
        let (f, _) = self.sol.evaluate(s)?;
        Ok(Vec3::new(1.0 / (self.params().c2 * f.powf(0.75)), st.alpha2, st.alpha3))
    }

    /// Jets of `f`, `θ` and `α` at `base` (only `base.s` matters).
    pub fn jets(&self, base: BasePoint) -> Result<ProfileJets> {
        let p = self.sol.params();
        let (c, c2) = (p.c, p.c2);
        let st = self.state_at(base.s)?;
        let f = self.sol.lift_f_jets_unchecked(base)?;
        let c_sq = c * c;
        let theta_prime = 2.0 * c * c2 * f.pow_rational(5, 4)? * (c_sq * f + 9.0).recip()?;
        let theta = Jet3::primitive_s(st.theta, &theta_prime.truncate::<2>());
        let w = f.pow_rational(1, 4)? * (c_sq * f + 9.0).sqrt()? / c2;
        let a2_prime = theta.cos() * w;
        let a3_prime = -(theta.sin() * w);
        let alpha = [
            f.pow_rational(-3, 4)? / c2,
            Jet3::primitive_s(st.alpha2, &a2_prime.truncate::<2>()),
            Jet3::primitive_s(st.alpha3, &a3_prime.truncate::<2>()),
        ];
        Ok(ProfileJets { f, theta, alpha })
    }

    /// Frenet frame of the closed-form curve at `s`, from its jets.
    pub fn frame(&self, s: f64) -> Result<(ProfileJets, FrenetFrame, f64)> {
        let jets = self.jets(BasePoint::new(s, 0.0))?;
        let velocity = jetvec::diff_s::<3, 2, 3>(&jets.alpha);
        let accel = jetvec::diff_s::<2, 1, 3>(&velocity);
        let t = jetvec::value(&velocity);
        let speed = t.norm();
        let a = jetvec::value(&accel);
        let n = a.normalize();
        let b = t.cross(&n);
        Ok((jets, FrenetFrame { t, n, b }, speed))
    }
}

/// Samples the closed-form profile on the solution grid.
pub fn closed_form_profile(profile: &ClosedFormProfile) -> Result<ProfileCurve> {
    let c = profile.params().c;
    let samples = profile
        .knots
        .iter()
        .map(|&s| {
            let (jets, frame, speed) = profile.frame(s)?;
            let f = jets.f.value();
            let fp = jets.f.partial(1, 0)?;
            Ok(CurveSample {
                s,
                position: jetvec::value(&jets.alpha),
                frame,
                kappa: kappa_of(f, c)?,
                tau: tau_of(f, fp, c)?,
                speed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProfileCurve { method: ProfileMethod::ClosedForm, samples, max_projection_correction: 0.0 })
}

#[derive(Debug, Clone, Copy)]
struct FrenetState {
    p: Vec3,
    t: Vec3,
    n: Vec3,
    b: Vec3,
}

impl FrenetState {
    fn rate(&self, kappa: f64, tau: f64) -> Self {
        Self { p: self.t, t: self.n * kappa, n: -self.t * kappa + self.b * tau, b: -self.n * tau }
    }

    fn axpy(&self, h: f64, d: &Self) -> Self {
        Self { p: self.p + d.p * h, t: self.t + d.t * h, n: self.n + d.n * h, b: self.b + d.b * h }
    }

    /// Gram–Schmidt back onto SO(3); returns the defect that was removed.
    fn project(&mut self) -> f64 {
        let defect = FrenetFrame { t: self.t, n: self.n, b: self.b }.orthonormality_defect();
        self.t = self.t.normalize();
        self.n = (self.n - self.t * self.t.dot(&self.n)).normalize();
        self.b = self.t.cross(&self.n);
        defect
    }
}

/// Integrates `T' = κN, N' = −κT + τB, B' = −τN, α' = T` with classical RK4,
/// `substeps` steps per grid interval, re-orthonormalizing after each step.
pub fn frenet_integrate(
    kappa: impl Fn(f64) -> Result<f64>,
    tau: impl Fn(f64) -> Result<f64>,
    start: Vec3,
    frame: FrenetFrame,
    grid: &[f64],
    substeps: usize,
) -> Result<ProfileCurve> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) || substeps == 0 {
        return Err(ProfileError::Grid);
    }
    let curvature = |s: f64| -> Result<(f64, f64)> {
        let k = kappa(s)?;
        if !(k > 0.0) {
            return Err(ProfileError::InvalidCurvature { s, kappa: k });
        }
        Ok((k, tau(s)?))
    };
    let sample = |s: f64, st: &FrenetState| -> Result<CurveSample> {
        let (k, t) = curvature(s)?;
        Ok(CurveSample {
            s,
            position: st.p,
            frame: FrenetFrame { t: st.t, n: st.n, b: st.b },
            kappa: k,
            tau: t,
            speed: st.t.norm(),
        })
    };
    let mut state = FrenetState { p: start, t: frame.t, n: frame.n, b: frame.b };
    let mut samples = vec![sample(grid[0], &state)?];
    let mut correction: f64 = 0.0;
    for w in grid.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        for j in 0..substeps {
            let s = w[0] + h * j as f64;
            let (k1, t1) = curvature(s)?;
            let (km, tm) = curvature(s + 0.5 * h)?;
            let (k4, t4) = curvature(if j + 1 == substeps { w[1] } else { s + h })?;
            let d1 = state.rate(k1, t1);
            let d2 = state.axpy(0.5 * h, &d1).rate(km, tm);
            let d3 = state.axpy(0.5 * h, &d2).rate(km, tm);
            let d4 = state.axpy(h, &d3).rate(k4, t4);
            state = FrenetState {
                p: state.p + (d1.p + (d2.p + d3.p) * 2.0 + d4.p) * (h / 6.0),
                t: state.t + (d1.t + (d2.t + d3.t) * 2.0 + d4.t) * (h / 6.0),
                n: state.n + (d1.n + (d2.n + d3.n) * 2.0 + d4.n) * (h / 6.0),
                b: state.b + (d1.b + (d2.b + d3.b) * 2.0 + d4.b) * (h / 6.0),
            };
            correction = correction.max(state.project());
        }
        samples.push(sample(w[1], &state)?);
    }
    Ok(ProfileCurve { method: ProfileMethod::Frenet, samples, max_projection_correction: correction })
}

/// Frenet integration driven by the solution: `κ(f(s))`, `τ(f(s), f'(s))`,
/// the predicted initial frame, and `α(s₀) = (1/(c₂ f₀^{3/4}), 0, 0)`.
pub fn frenet_profile(sol: &MeanCurvatureSolution, substeps: usize) -> Result<ProfileCurve> {
    let p = sol.params();
    let (c, c2) = (p.c, p.c2);
    let grid: Vec<f64> = sol.samples().iter().map(|r| r.s).collect();
    let (f0, fp0) = sol.evaluate(grid[0])?;
    let [t1, n1, b1] = frame_first_components(f0, fp0, c, c2);
    let frame = FrenetFrame::from_first_components(t1, n1, b1)?;
    let start = Vec3::new(1.0 / (c2 * f0.powf(0.75)), 0.0, 0.0);
    frenet_integrate(
        |s| kappa_of(sol.evaluate(s)?.0, c),
        |s| {
            let (f, fp) = sol.evaluate(s)?;
            tau_of(f, fp, c)
        },
        start,
        frame,
        &grid,
        substeps,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameComponentResiduals {
    pub t1: f64,
    pub n1: f64,
    pub b1: f64,
}

impl FrameComponentResiduals {
    pub fn max(&self) -> f64 {
        self.t1.max(self.n1).max(self.b1)
    }
}

/// Largest deviation of the sampled frame's first components from the predicted ones.
pub fn frame_components_check(curve: &ProfileCurve, sol: &MeanCurvatureSolution) -> Result<FrameComponentResiduals> {
    let p = sol.params();
    let mut out = FrameComponentResiduals { t1: 0.0, n1: 0.0, b1: 0.0 };
    for sample in &curve.samples {
        let (f, fp) = sol.evaluate(sample.s)?;
        let [t1, n1, b1] = frame_first_components(f, fp, p.c, p.c2);
        out.t1 = out.t1.max((sample.frame.t.x - t1).abs());
        out.n1 = out.n1.max((sample.frame.n.x - n1).abs());
        out.b1 = out.b1.max((sample.frame.b.x - b1).abs());
    }
    Ok(out)
}
