//! Rotational surfaces in E⁴ and their pointwise geometry, computed from the
//! immersion jets alone.
//!
//! The frame construction runs in degree-1 jet arithmetic on top of the
//! degree-3 immersion jets, so frames, `H` and `f` come with their first
//! derivatives and the connection forms need no finite differencing.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::jet::{BasePoint, Jet1, Jet2, Jet3, JetError, Var};
use crate::jetvec::{self, JetVec};
use crate::linalg4::{det4, Sym2, Vec4};
use crate::meancurv::MeanCurvatureError;
use crate::profile::{ClosedFormProfile, ProfileError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point ({s}, {t}) lies outside the chart")]
    OutOfChart { s: f64, t: f64 },
    #[error("mean curvature {f:e} is below the floor")]
    VanishingMeanCurvature { f: f64 },
    #[error("degenerate immersion: {0}")]
    Degenerate(&'static str),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Solution(#[from] MeanCurvatureError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

type Result<T> = std::result::Result<T, GeometryError>;

/// Parameter ranges of an immersion. `t` is unrestricted when `t_range` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chart {
    pub s_range: (f64, f64),
    pub t_range: Option<(f64, f64)>,
    /// Open `s`-intervals where frame-dependent fields are unavailable.
    pub exclusion: Vec<(f64, f64)>,
}

impl Chart {
    pub fn contains(&self, s: f64, t: f64) -> bool {
        let (a, b) = self.s_range;
        let t_ok = self.t_range.is_none_or(|(c, d)| t >= c && t <= d);
        s >= a && s <= b && t_ok && t.is_finite()
    }

    pub fn excluded(&self, s: f64) -> bool {
        self.exclusion.iter().any(|&(a, b)| s > a && s < b)
    }
}

type JetFn = dyn Fn(BasePoint) -> Result<[Jet3; 4]> + Send + Sync;

#[derive(Clone)]
enum Source {
    Rotational { profile: Arc<ClosedFormProfile>, alpha2_scale: f64 },
    Custom(Arc<JetFn>),
}

/// Deterministic evaluator of the Cartesian immersion jets `x(s, t)`.
#[derive(Clone)]
pub struct ImmersionJet {
    source: Source,
    chart: Chart,
}

impl std::fmt::Debug for ImmersionJet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.source {
            Source::Rotational { alpha2_scale, .. } => format!("rotational (alpha2 x {alpha2_scale})"),
            Source::Custom(_) => "custom".to_string(),
        };
        f.debug_struct("ImmersionJet").field("source", &kind).field("chart", &self.chart).finish()
    }
}

/// `x(s, t) = (α₁ cos(c₂ t), α₁ sin(c₂ t), α₂, α₃)`; the metric is
/// `ds² + f^{−3/2} dt²` and the `t`-period is `2π/c₂`.
pub fn build_rotational_surface(profile: Arc<ClosedFormProfile>) -> ImmersionJet {
    build_perturbed_surface(profile, 1.0)
}

/// The rotational surface with `α₂` replaced by `alpha2_scale · α₂`.
pub fn build_perturbed_surface(profile: Arc<ClosedFormProfile>, alpha2_scale: f64) -> ImmersionJet {
    let sol = profile.solution();
    let half = sol.exclusion_half_width();
    let chart = Chart {
        s_range: sol.span(),
        t_range: None,
        exclusion: sol.branch_marks().iter().map(|m| (m - half, m + half)).collect(),
    };
    ImmersionJet { source: Source::Rotational { profile, alpha2_scale }, chart }
}

/// Round sphere of radius `r` in `E³ ⊂ E⁴`,
/// `x = r (cos s cos t, cos s sin t, sin s, 0)` for `|s| < π/2`.
pub fn sphere_immersion(r: f64) -> ImmersionJet {
    let chart = Chart { s_range: (-0.5 * PI + 1e-3, 0.5 * PI - 1e-3), t_range: None, exclusion: Vec::new() };
    ImmersionJet::from_fn(chart, move |base| {
        let s = Jet3::variable(Var::S, base);
        let t = Jet3::variable(Var::T, base);
        let cs = s.cos();
        Ok([cs * t.cos() * r, cs * t.sin() * r, s.sin() * r, Jet3::constant(0.0, base)])
    })
}

impl ImmersionJet {
    pub fn from_fn(chart: Chart, eval: impl Fn(BasePoint) -> Result<[Jet3; 4]> + Send + Sync + 'static) -> Self {
        Self { source: Source::Custom(Arc::new(eval)), chart }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// The generating profile of a rotational surface.
    pub fn profile(&self) -> Option<&Arc<ClosedFormProfile>> {
        match &self.source {
            Source::Rotational { profile, .. } => Some(profile),
            Source::Custom(_) => None,
        }
    }

    /// `t`-period of a rotational surface.
    pub fn t_period(&self) -> Option<f64> {
        self.profile().map(|p| 2.0 * PI / p.params().c2)
    }

    pub fn jets(&self, s: f64, t: f64) -> Result<[Jet3; 4]> {
        if !self.chart.contains(s, t) {
            return Err(GeometryError::OutOfChart { s, t });
        }
        let base = BasePoint::new(s, t);
        match &self.source {
            Source::Rotational { profile, alpha2_scale } => {
                let pj = profile.jets(base)?;
                let angle = Jet3::variable(Var::T, base) * profile.params().c2;
                let [a1, a2, a3] = pj.alpha;
                Ok([a1 * angle.cos(), a1 * angle.sin(), a2 * *alpha2_scale, a3])
            }
            Source::Custom(eval) => eval(base),
        }
    }

    pub fn position(&self, s: f64, t: f64) -> Result<Vec4> {
        Ok(jetvec::value(&self.jets(s, t)?))
    }

    /// Rotated Frenet normal and binormal of the profile, `(ê₃, ê₄)`, as
    /// degree-1 jets. Only rotational surfaces carry them.
    fn frenet_lift(&self, s: f64, t: f64) -> Result<Option<[JetVec<1, 4>; 2]>> {
        let Source::Rotational { profile, .. } = &self.source else {
            return Ok(None);
        };
        let base = BasePoint::new(s, t);
        let pj = profile.jets(base)?;
        let velocity = jetvec::diff_s::<3, 2, 3>(&pj.alpha);
        let accel = jetvec::diff_s::<2, 1, 3>(&velocity);
        let tangent = jetvec::truncate::<2, 1, 3>(&velocity);
        let n = jetvec::normalize(&accel)?;
        let b = [
            tangent[1] * n[2] - tangent[2] * n[1],
            tangent[2] * n[0] - tangent[0] * n[2],
            tangent[0] * n[1] - tangent[1] * n[0],
        ];
        let angle = Jet1::variable(Var::T, base) * profile.params().c2;
        let (cos, sin) = (angle.cos(), angle.sin());
        let lift = |v: &JetVec<1, 3>| [v[0] * cos, v[0] * sin, v[1], v[2]];
        Ok(Some([lift(&n), lift(&b)]))
    }

    /// Writes `s,t,x1,x2,x3,x4` over an open `n_s × n_t` grid (seam duplicated).
    pub fn write_csv<W: Write>(&self, grid: &MeshGrid, mut out: W) -> io::Result<()> {
        writeln!(out, "s,t,x1,x2,x3,x4")?;
        for (s, t) in grid.points() {
            let x = self.position(s, t).map_err(io::Error::other)?;
            writeln!(out, "{},{},{},{},{},{}", s, t, x[0], x[1], x[2], x[3])?;
        }
        Ok(())
    }

    /// Wavefront OBJ of the projection onto the ambient axes `axes`
    /// (zero-based), quads split into triangles.
    pub fn write_obj<W: Write>(&self, grid: &MeshGrid, axes: [usize; 3], mut out: W) -> io::Result<()> {
        writeln!(out, "# projection onto x{} x{} x{}", axes[0] + 1, axes[1] + 1, axes[2] + 1)?;
        for (s, t) in grid.points() {
            let x = self.position(s, t).map_err(io::Error::other)?;
            writeln!(out, "v {} {} {}", x[axes[0]], x[axes[1]], x[axes[2]])?;
        }
        for i in 0..grid.n_s.saturating_sub(1) {
            for j in 0..grid.n_t.saturating_sub(1) {
                let v = |a: usize, b: usize| a * grid.n_t + b + 1;
                writeln!(out, "f {} {} {}", v(i, j), v(i + 1, j), v(i + 1, j + 1))?;
                writeln!(out, "f {} {} {}", v(i, j), v(i + 1, j + 1), v(i, j + 1))?;
            }
        }
        Ok(())
    }
}

/// Vertex grid for mesh export: endpoints included in both directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshGrid {
    pub s_range: (f64, f64),
    pub t_range: (f64, f64),
    pub n_s: usize,
    pub n_t: usize,
}

impl MeshGrid {
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let lerp = |(a, b): (f64, f64), k: usize, n: usize| {
            if n < 2 {
                a
            } else if k + 1 == n {
                b
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        };
        (0..self.n_s).flat_map(move |i| {
            (0..self.n_t).map(move |j| (lerp(self.s_range, i, self.n_s), lerp(self.t_range, j, self.n_t)))
        })
    }
}

/// Frame data as degree-1 jets at one point.
struct FrameJets {
    /// Chart components `(a^s, a^t)` of `e₁` and `e₂`.
    coords: [[Jet1; 2]; 2],
    /// `e₁, e₂, e₃, e₄`.
    e: [JetVec<1, 4>; 4],
    /// Normal parts of `x_ss, x_st, x_tt`.
    h: [JetVec<1, 4>; 3],
    f: Jet1,
    h_vec: JetVec<1, 4>,
    sigma: f64,
    aligned: bool,
    grad_coords: [f64; 2],
}

fn cross4(a: &JetVec<1, 4>, b: &JetVec<1, 4>, c: &JetVec<1, 4>) -> JetVec<1, 4> {
    // e_l = Σ ε_{ijkl} a_i b_j c_k, so that det(a, b, c, e) = |e|²
    let base = a[0].base();
    let mut out: JetVec<1, 4> = std::array::from_fn(|_| Jet1::constant(0.0, base));
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let p = [i, j, k, l];
                    if (0..4).any(|m| (m + 1..4).any(|n| p[m] == p[n])) {
                        continue;
                    }
                    let inversions =
                        (0..4).flat_map(|m| (m + 1..4).map(move |n| (m, n))).filter(|&(m, n)| p[m] > p[n]).count();
                    let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
                    out[l] += a[i] * b[j] * c[k] * sign;
                }
            }
        }
    }
    out
}

/// Threshold below which `|grad f|` counts as vanishing.
fn grad_floor(f: f64) -> f64 {
    1e-9 * (1.0 + f * f)
}

/// Mean curvature below this value is treated as vanishing.
pub const F_FLOOR: f64 = 1e-12;

fn frame_jets(x: &[Jet3; 4], sigma: Option<f64>) -> Result<FrameJets> {
    let xs2 = jetvec::diff_s::<3, 2, 4>(x);
    let xt2 = jetvec::diff_t::<3, 2, 4>(x);
    let xs = jetvec::truncate::<2, 1, 4>(&xs2);
    let xt = jetvec::truncate::<2, 1, 4>(&xt2);
    let xss = jetvec::diff_s::<2, 1, 4>(&xs2);
    let xst = jetvec::diff_t::<2, 1, 4>(&xs2);
    let xtt = jetvec::diff_t::<2, 1, 4>(&xt2);

    let e = jetvec::dot(&xs, &xs);
    let f_ = jetvec::dot(&xs, &xt);
    let g = jetvec::dot(&xt, &xt);
    let det = e * g - f_ * f_;
    if !(det.value() > 0.0) {
        return Err(GeometryError::Degenerate("metric is not positive definite"));
    }
    let inv_root_e = e.pow_rational(-1, 2)?;
    let u1 = jetvec::scale(&xs, &inv_root_e);
    let v = jetvec::reject(&xt, &u1);
    let inv_nv = jetvec::norm(&v)?.recip()?;
    let u2 = jetvec::scale(&v, &inv_nv);

    let project = |w: &JetVec<1, 4>| jetvec::reject(&jetvec::reject(w, &u1), &u2);
    let h = [project(&xss), project(&xst), project(&xtt)];

    let inv_det = det.recip()?;
    let (gss, gst, gtt) = (g * inv_det, -(f_ * inv_det), e * inv_det);
    let h_vec: JetVec<1, 4> = std::array::from_fn(|i| (gss * h[0][i] + 2.0 * gst * h[1][i] + gtt * h[2][i]) * 0.5);
    let f = jetvec::norm(&h_vec)?;
    if !(f.value() > F_FLOOR) {
        return Err(GeometryError::VanishingMeanCurvature { f: f.value() });
    }
    let e3 = jetvec::scale(&h_vec, &f.recip()?);

    let a_u1 = [inv_root_e, Jet1::constant(0.0, inv_root_e.base())];
    let a_u2 = [-(f_ * e.recip()? * inv_nv), inv_nv];
    let [df_s, df_t] = f.gradient();
    let u1f = df_s * a_u1[0].value();
    let u2f = df_s * a_u2[0].value() + df_t * a_u2[1].value();
    let grad_norm = u1f.hypot(u2f);
    let sigma = sigma.unwrap_or(if grad_norm > grad_floor(f.value()) && u1f < 0.0 { -1.0 } else { 1.0 });
    let aligned = grad_norm > grad_floor(f.value());

    let e1 = jetvec::scale(&u1, &Jet1::constant(sigma, inv_root_e.base()));
    let e4 = cross4(&e1, &u2, &e3);
    let coords = [[a_u1[0] * sigma, a_u1[1] * sigma], a_u2];
    Ok(FrameJets { coords, e: [e1, u2, e3, e4], h, f, h_vec, sigma, aligned, grad_coords: [df_s, df_t] })
}

/// First- and second-order invariants at one surface point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointGeometry {
    pub s: f64,
    pub t: f64,
    /// First fundamental form in chart coordinates.
    pub g: Sym2,
    pub e1: Vec4,
    pub e2: Vec4,
    pub e3: Vec4,
    pub e4: Vec4,
    /// Sign of `e₁` relative to `∂s`.
    pub e1_sign: f64,
    /// `|grad f|` is above the floor and `e₁` is taken along it.
    pub frame_aligned: bool,
    /// Inside an exclusion band of the chart.
    pub excluded: bool,
    /// `h(e₁,e₁), h(e₁,e₂), h(e₂,e₂)`.
    pub h: [Vec4; 3],
    pub a3: Sym2,
    pub a4: Sym2,
    pub mean_curvature_vector: Vec4,
    pub f: f64,
    /// `(e₁(f), e₂(f))`.
    pub grad_f: [f64; 2],
    /// `K` from the metric alone.
    pub k_intrinsic: f64,
    /// `det A₃ + det A₄`.
    pub k_extrinsic: f64,
    /// `ω₁₂(e₁), ω₁₂(e₂)` with `ω₁₂(X) = ⟨∇_X e₁, e₂⟩`.
    pub omega12: [f64; 2],
    /// `⟨∇⊥_{e_i} e₃, e₄⟩` for `i = 1, 2`.
    pub normal_connection: [f64; 2],
    pub codazzi_residual: f64,
    /// `dν(e₁, e₂)` by Richardson-extrapolated differences of the jet values of `ν`.
    pub normal_curvature: Option<f64>,
    /// `⟨[A₃, A₄] e₁, e₂⟩`.
    pub commutator: f64,
    pub frenet_lift: Option<FrenetLiftData>,
}

/// Rotated profile normal and binormal at a point, with the normal
/// connection of `ê₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrenetLiftData {
    pub e3_hat: Vec4,
    pub e4_hat: Vec4,
    /// `‖(∇_{e_i} ê₃)^⊥‖` for `i = 1, 2`.
    pub normal_derivative_e3_hat: [f64; 2],
    /// `A_{ê₃}`, `A_{ê₄}` in the `(e₁, e₂)` frame.
    pub a_e3_hat: Sym2,
    pub a_e4_hat: Sym2,
}

fn brioschi(e: &Jet2, f: &Jet2, g: &Jet2) -> Result<f64> {
    let p = |j: &Jet2, a: usize, b: usize| j.partial(a, b);
    let (ev, fv, gv) = (e.value(), f.value(), g.value());
    let (e_s, e_t, e_tt) = (p(e, 1, 0)?, p(e, 0, 1)?, p(e, 0, 2)?);
    let (f_s, f_t, f_st) = (p(f, 1, 0)?, p(f, 0, 1)?, p(f, 1, 1)?);
    let (g_s, g_t, g_ss) = (p(g, 1, 0)?, p(g, 0, 1)?, p(g, 2, 0)?);
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let m1 =
        [[-0.5 * e_tt + f_st - 0.5 * g_ss, 0.5 * e_s, f_s - 0.5 * e_t], [f_t - 0.5 * g_s, ev, fv], [0.5 * g_t, fv, gv]];
    let m2 = [[0.0, 0.5 * e_t, 0.5 * g_s], [0.5 * e_t, ev, fv], [0.5 * g_s, fv, gv]];
    let w = ev * gv - fv * fv;
    Ok((det3(m1) - det3(m2)) / (w * w))
}

/// `K = −(1/(2W)) [(E_t/W)_t + (G_s/W)_s]`, `W = sqrt(EG)`, for orthogonal charts.
fn orthogonal_chart_curvature(e: &Jet2, g: &Jet2) -> Result<f64> {
    let w = (*e * *g).sqrt()?;
    let w1 = w.truncate::<1>();
    let term_t = e.diff_t::<1>().try_div(&w1)?.partial(0, 1)?;
    let term_s = g.diff_s::<1>().try_div(&w1)?.partial(1, 0)?;
    Ok(-(term_t + term_s) / (2.0 * w.value()))
}

fn shape_operator(h: &[Vec4; 3], xi: &Vec4) -> Sym2 {
    Sym2::new(h[0].dot(xi), h[1].dot(xi), h[2].dot(xi))
}

/// `⟨∇⊥_X e₃, e₄⟩` for `X = ∂s, ∂t`.
fn normal_connection_coords(surf: &ImmersionJet, s: f64, t: f64, sigma: f64) -> Result<[f64; 2]> {
    let fr = frame_jets(&surf.jets(s, t)?, Some(sigma))?;
    let e4 = jetvec::value(&fr.e[3]);
    Ok([jetvec::directional(&fr.e[2], 1.0, 0.0).dot(&e4), jetvec::directional(&fr.e[2], 0.0, 1.0).dot(&e4)])
}

/// Step of the finite-difference curl of `ν`.
pub const CURL_STEP: f64 = 2e-3;

fn normal_connection_curl(surf: &ImmersionJet, s: f64, t: f64, sigma: f64) -> Result<Option<f64>> {
    let h = CURL_STEP;
    for (ds, dt) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
        if !surf.chart.contains(s + ds, t + dt) {
            return Ok(None);
        }
    }
    let central = |h: f64, axis: usize| -> Result<f64> {
        let (ds, dt, comp) = if axis == 0 { (h, 0.0, 1) } else { (0.0, h, 0) };
        let plus = normal_connection_coords(surf, s + ds, t + dt, sigma)?[comp];
        let minus = normal_connection_coords(surf, s - ds, t - dt, sigma)?[comp];
        Ok((plus - minus) / (2.0 * h))
    };
    let richardson = |axis: usize| -> Result<f64> { Ok((4.0 * central(0.5 * h, axis)? - central(h, axis)?) / 3.0) };
    // ∂s ν_t − ∂t ν_s
    Ok(Some(richardson(0)? - richardson(1)?))
}

/// All first/second-order invariants at `(s, t)`.
pub fn point_geometry(surf: &ImmersionJet, s: f64, t: f64) -> Result<PointGeometry> {
    let x = surf.jets(s, t)?;
    let xs2 = jetvec::diff_s::<3, 2, 4>(&x);
    let xt2 = jetvec::diff_t::<3, 2, 4>(&x);
    let (e2j, f2j, g2j) = (jetvec::dot(&xs2, &xs2), jetvec::dot(&xs2, &xt2), jetvec::dot(&xt2, &xt2));
    let g = Sym2::new(e2j.value(), f2j.value(), g2j.value());
    let k_intrinsic = if f2j.value().abs() <= 1e-14 * (g.xx * g.yy).sqrt() {
        orthogonal_chart_curvature(&e2j, &g2j)?
    } else {
        brioschi(&e2j, &f2j, &g2j)?
    };

    let fr = frame_jets(&x, None)?;
    let ev: [Vec4; 4] = std::array::from_fn(|i| jetvec::value(&fr.e[i]));
    let a: [[f64; 2]; 2] = std::array::from_fn(|i| [fr.coords[i][0].value(), fr.coords[i][1].value()]);
    let hv: [Vec4; 3] = std::array::from_fn(|k| jetvec::value(&fr.h[k]));
    // h(e_i, e_j) from the chart components
    let h_frame = |i: usize, j: usize| {
        hv[0] * (a[i][0] * a[j][0]) + hv[1] * (a[i][0] * a[j][1] + a[i][1] * a[j][0]) + hv[2] * (a[i][1] * a[j][1])
    };
    let h = [h_frame(0, 0), h_frame(0, 1), h_frame(1, 1)];
    let a3 = shape_operator(&h, &ev[2]);
    let a4 = shape_operator(&h, &ev[3]);
    let f = fr.f.value();
    let [df_s, df_t] = fr.grad_coords;
    let grad_f = [df_s * a[0][0] + df_t * a[0][1], df_s * a[1][0] + df_t * a[1][1]];

    // X(e_b) for X = e_i
    let d = |i: usize, b: usize| jetvec::directional(&fr.e[b], a[i][0], a[i][1]);
    let omega12 = [d(0, 0).dot(&ev[1]), d(1, 0).dot(&ev[1])];
    let normal_connection = [d(0, 2).dot(&ev[3]), d(1, 2).dot(&ev[3])];

    let codazzi_residual = codazzi(&fr, &a)?;

    let normal_curvature = normal_connection_curl(surf, s, t, fr.sigma)?.map(|curl| {
        let area = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        curl * area
    });
    let commutator = {
        let m3 = [[a3.xx, a3.xy], [a3.xy, a3.yy]];
        let m4 = [[a4.xx, a4.xy], [a4.xy, a4.yy]];
        (0..2).map(|k| m3[0][k] * m4[k][1] - m4[0][k] * m3[k][1]).sum()
    };

    let frenet_lift = surf.frenet_lift(s, t)?.map(|[e3h, e4h]| {
        let e3_hat = jetvec::value(&e3h);
        let e4_hat = jetvec::value(&e4h);
        let normal_part = |i: usize| {
            let dx = jetvec::directional(&e3h, a[i][0], a[i][1]);
            dx.dot(&ev[2]).hypot(dx.dot(&ev[3]))
        };
        FrenetLiftData {
            e3_hat,
            e4_hat,
            normal_derivative_e3_hat: [normal_part(0), normal_part(1)],
            a_e3_hat: shape_operator(&h, &e3_hat),
            a_e4_hat: shape_operator(&h, &e4_hat),
        }
    });

    Ok(PointGeometry {
        s,
        t,
        g,
        e1: ev[0],
        e2: ev[1],
        e3: ev[2],
        e4: ev[3],
        e1_sign: fr.sigma,
        frame_aligned: fr.aligned,
        excluded: surf.chart.excluded(s),
        h,
        a3,
        a4,
        mean_curvature_vector: jetvec::value(&fr.h_vec),
        f,
        grad_f,
        k_intrinsic,
        k_extrinsic: a3.det() + a4.det(),
        omega12,
        normal_connection,
        codazzi_residual,
        normal_curvature,
        commutator,
        frenet_lift,
    })
}

/// Largest Codazzi defect `(∇̄_{e₁}h)(e₂,e₂) − (∇̄_{e₂}h)(e₁,e₂)` and
/// `(∇̄_{e₂}h)(e₁,e₁) − (∇̄_{e₁}h)(e₂,e₁)` over both normal directions,
/// relative to the size of the terms.
fn codazzi(fr: &FrameJets, a: &[[f64; 2]; 2]) -> Result<f64> {
    // h^α_{ij} as jets, α = 0, 1 for e₃, e₄
    let comp = |i: usize, j: usize, alpha: usize| -> Jet1 {
        let (ai, aj) = (&fr.coords[i], &fr.coords[j]);
        let hij: JetVec<1, 4> = std::array::from_fn(|m| {
            ai[0] * aj[0] * fr.h[0][m] + (ai[0] * aj[1] + ai[1] * aj[0]) * fr.h[1][m] + ai[1] * aj[1] * fr.h[2][m]
        });
        jetvec::dot(&hij, &fr.e[2 + alpha])
    };
    let hc: [[[Jet1; 2]; 2]; 2] =
        std::array::from_fn(|al| std::array::from_fn(|i| std::array::from_fn(|j| comp(i, j, al))));
    let ev: [Vec4; 4] = std::array::from_fn(|i| jetvec::value(&fr.e[i]));
    // conn[k][b][c] = ⟨e_k(e_b), e_c⟩
    let conn = |k: usize, b: usize, c: usize| jetvec::directional(&fr.e[b], a[k][0], a[k][1]).dot(&ev[c]);
    let nabla_h = |k: usize, i: usize, j: usize, al: usize| -> f64 {
        let mut v = hc[al][i][j].directional(a[k][0], a[k][1]);
        for be in 0..2 {
            v += hc[be][i][j].value() * conn(k, 2 + be, 2 + al);
        }
        for l in 0..2 {
            v -= conn(k, i, l) * hc[al][l][j].value();
            v -= conn(k, j, l) * hc[al][i][l].value();
        }
        v
    };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for al in 0..2 {
        let (p, q) = (nabla_h(0, 1, 1, al), nabla_h(1, 0, 1, al));
        let (r, u) = (nabla_h(1, 0, 0, al), nabla_h(0, 1, 0, al));
        worst = worst.max((p - q).abs()).max((r - u).abs());
        scale = scale.max(p.abs()).max(q.abs()).max(r.abs()).max(u.abs());
    }
    Ok(worst / (1.0 + scale))
}

/// `‖A₃(grad f) + f grad f‖ / (1 + f ‖grad f‖)`; independent of the tangent frame.
pub fn biconservativity_residual(pg: &PointGeometry) -> f64 {
    let [x, y] = pg.grad_f;
    let v = pg.a3.apply(crate::linalg4::Vec2::new(x, y));
    let r = (v.x + pg.f * x).hypot(v.y + pg.f * y);
    r / (1.0 + pg.f * x.hypot(y))
}

/// `max_i ‖∇⊥_{e_i} e₃‖`.
pub fn pnmcv_residual(pg: &PointGeometry) -> f64 {
    pg.normal_connection[0].abs().max(pg.normal_connection[1].abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureResiduals {
    pub codazzi: f64,
    /// `|dν(e₁,e₂) + ⟨[A₃,A₄]e₁,e₂⟩| / (1 + |⟨[A₃,A₄]e₁,e₂⟩|)`.
    pub ricci: Option<f64>,
    /// `|K_intrinsic − K_extrinsic| / (1 + |K|)`.
    pub gauss: f64,
    /// `|ω₁₂(e₁)| + |ω₁₂(e₂) + 3 e₁(f)/(4f)|`, on aligned frames only.
    pub connection: Option<f64>,
    /// `|K + 3f² + c² f³| / (1 + |K|)`, when a shape constant is supplied.
    pub curvature_law: Option<f64>,
}

pub fn structure_residuals(pg: &PointGeometry, c: Option<f64>) -> StructureResiduals {
    let k = pg.k_intrinsic;
    let f = pg.f;
    StructureResiduals {
        codazzi: pg.codazzi_residual,
        ricci: pg.normal_curvature.map(|dnu| (dnu + pg.commutator).abs() / (1.0 + pg.commutator.abs())),
        gauss: (k - pg.k_extrinsic).abs() / (1.0 + k.abs()),
        connection: pg
            .frame_aligned
            .then(|| pg.omega12[0].abs() + (pg.omega12[1] + 3.0 * pg.grad_f[0] / (4.0 * f)).abs()),
        curvature_law: c.map(|c| (k + 3.0 * f * f + c * c * f * f * f).abs() / (1.0 + k.abs())),
    }
}

/// `−3f² − c² f³`.
pub fn gaussian_curvature_law(f: f64, c: f64) -> f64 {
    -3.0 * f * f - c * c * f * f * f
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameRotation {
    /// `‖e₃ − e₃_rot‖ + ‖e₄ ∓ e₄_rot‖`.
    pub rotation: f64,
    /// `max |−A_{ê₃}/r + (c sqrt f / r) A_{ê₄} − A₃|` with `r = sqrt(c² f + 1)`.
    pub conjugation: f64,
    /// `max |A₃ − diag(−f, 3f)|` entrywise, using the conjugated operator.
    pub diagonal: f64,
}

/// Compares `e₃` with `−ê₃/r + (c sqrt f/r) ê₄` and `e₄` with
/// `±((c sqrt f/r) ê₃ + ê₄/r)`, `r = sqrt(c² f + 1)`.
pub fn frame_rotation_check(pg: &PointGeometry, c: f64) -> Option<FrameRotation> {
    let lift = pg.frenet_lift?;
    let f = pg.f;
    let r = (c * c * f + 1.0).sqrt();
    let k = c * f.sqrt() / r;
    let e3_rot = -lift.e3_hat / r + lift.e4_hat * k;
    let e4_rot = lift.e3_hat * k + lift.e4_hat / r;
    let sign = if det4(&pg.e1, &pg.e2, &pg.e3, &e4_rot) < 0.0 { -1.0 } else { 1.0 };
    let rotation = (pg.e3 - e3_rot).norm() + (pg.e4 - e4_rot * sign).norm();
    let conj = lift.a_e3_hat.scale(-1.0 / r).add(&lift.a_e4_hat.scale(k));
    let diff = |x: &Sym2, y: &Sym2| (x.xx - y.xx).abs().max((x.xy - y.xy).abs()).max((x.yy - y.yy).abs());
    Some(FrameRotation { rotation, conjugation: diff(&conj, &pg.a3), diagonal: diff(&conj, &Sym2::diag(-f, 3.0 * f)) })
}
