//! The mean-curvature ODE `9f'²/(16 f^{7/2}) + c² f^{3/2} + 9 f^{1/2} = c₂²`
//! and its solution by quadrature in `f`.
//!
//! With `u = sqrt(f_max − f)` the arc length measured from the turning point is
//! `d(u) = ∫₀ᵘ 3 / (2 f^{7/4} sqrt(D(f))) du`, where
//! `D(f) = (φ(f_max) − φ(f)) / (f_max − f)` and `φ(f) = c² f^{3/2} + 9 f^{1/2}`.
//! `D` is evaluated in factored form, so the integrand is smooth and
//! cancellation-free through the turning point; `f(s) = f_max − u(|s − s_turn|)²`.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::jet::{BasePoint, Jet3};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeanCurvatureError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("mean curvature must be positive, got f = {f}")]
    Domain { f: f64 },
    #[error("f = {f} lies outside the admissible domain (radicand {radicand:e})")]
    OutsideAdmissible { f: f64, radicand: f64 },
    #[error("no admissible branch: f0 = {f0} is not below the turning value {f_turning}")]
    NoAdmissibleBranch { f0: f64, f_turning: f64 },
    #[error("s = {s} lies within the turning-point exclusion band around {s_turn}")]
    NearTurningPoint { s: f64, s_turn: f64 },
    #[error("s = {s} lies outside the solved span [{start}, {end}]")]
    OutOfSpan { s: f64, start: f64, end: f64 },
}

type Result<T> = std::result::Result<T, MeanCurvatureError>;

/// Branch sign `ε` of `f' = (4/3) ε sqrt(radicand)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `ε = +1`: `f` initially increasing.
    Rising,
    /// `ε = −1`: `f` initially decreasing.
    Falling,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Rising => 1.0,
            Branch::Falling => -1.0,
        }
    }

    pub fn from_sign(value: f64) -> Option<Self> {
        if value == 1.0 {
            Some(Branch::Rising)
        } else if value == -1.0 {
            Some(Branch::Falling)
        } else {
            None
        }
    }
}

/// Shape constant, integration constant, initial data and numerics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams {
    /// `λ = c f^{3/2}`.
    pub c: f64,
    /// Positive root of the conserved quantity `c₂²`.
    pub c2: f64,
    /// `f(s₀)` with `s₀ = s_span.0`.
    pub f0: f64,
    pub eps0: Branch,
    pub s_span: (f64, f64),
    pub tol_ode: f64,
    pub grid_n: usize,
    /// The solved span is cut where `f` falls below this value.
    pub f_floor: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            c2: 4.0,
            f0: 1.0,
            eps0: Branch::Rising,
            s_span: (0.0, 1.5),
            tol_ode: 1e-10,
            grid_n: 2048,
            f_floor: 1e-6,
        }
    }
}

/// `φ(f) = c² f^{3/2} + 9 f^{1/2}`, strictly increasing on `f > 0`.
fn phi(f: f64, c: f64) -> f64 {
    let r = f.sqrt();
    c * c * f * r + 9.0 * r
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(MeanCurvatureError::InvalidParams(m.to_string()));
        if !self.c.is_finite() {
            return bad("c must be finite");
        }
        if !(self.c2 > 0.0) || !self.c2.is_finite() {
            return bad("c2 must be positive");
        }
        if !(self.f0 > 0.0) || !self.f0.is_finite() {
            return bad("f0 must be positive");
        }
        let (a, b) = self.s_span;
        if !(a.is_finite() && b.is_finite() && b > a) {
            return bad("span must be a finite interval A:B with B > A");
        }
        if !(self.tol_ode > 0.0) {
            return bad("tol_ode must be positive");
        }
        if self.grid_n < 2 {
            return bad("grid_n must be at least 2");
        }
        if !(self.f_floor > 0.0) || self.f_floor >= self.f0 {
            return bad("f_floor must be positive and below f0");
        }
        let f_turning = self.f_turning();
        if self.f0 >= f_turning || self.radicand(self.f0)? <= 0.0 {
            return Err(MeanCurvatureError::NoAdmissibleBranch { f0: self.f0, f_turning });
        }
        Ok(())
    }

    /// `c₂² f^{7/2} − c² f⁵ − 9 f⁴`.
    pub fn radicand(&self, f: f64) -> Result<f64> {
        if !(f > 0.0) {
            return Err(MeanCurvatureError::Domain { f });
        }
        let f2 = f * f;
        let f4 = f2 * f2;
        Ok(self.c2 * self.c2 * f4 / f.sqrt() - self.c * self.c * f4 * f - 9.0 * f4)
    }

    /// `f' = (4/3) ε sqrt(radicand(f))`.
    pub fn fprime_rhs(&self, f: f64, eps: Branch) -> Result<f64> {
        let radicand = self.radicand(f)?;
        if radicand < 0.0 {
            return Err(MeanCurvatureError::OutsideAdmissible { f, radicand });
        }
        Ok(4.0 / 3.0 * eps.sign() * radicand.sqrt())
    }

    /// Largest admissible mean curvature: the root of `φ(f) = c₂²`.
    ///
    /// Since `φ(f) >= 9 sqrt(f)`, the root lies in `(0, (c₂²/9)²]`; bisection
    /// runs until the bracket stops shrinking.
    pub fn f_turning(&self) -> f64 {
        let target = self.c2 * self.c2;
        let upper = (target / 9.0).powi(2);
        if self.c == 0.0 {
            return upper;
        }
        let (mut lo, mut hi) = (0.0f64, upper);
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if phi(mid, self.c) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // take whichever end is closer to the root
        if (phi(lo, self.c) - target).abs() <= (phi(hi, self.c) - target).abs() {
            lo
        } else {
            hi
        }
    }

    /// `f'' = (7 f'²)/(4 f) − 4 f³ − (4/3) c² f⁴`.
    pub fn second_derivative(&self, f: f64, fp: f64) -> f64 {
        let c2 = self.c * self.c;
        7.0 * fp * fp / (4.0 * f) - 4.0 * f * f * f - 4.0 / 3.0 * c2 * f.powi(4)
    }

    /// `f'''`, differentiating the `f''` expression along the solution.
    pub fn third_derivative(&self, f: f64, fp: f64, fpp: f64) -> f64 {
        let c2 = self.c * self.c;
        7.0 / 4.0 * (2.0 * fp * fpp / f - fp.powi(3) / (f * f)) - 12.0 * f * f * fp - 16.0 / 3.0 * c2 * f.powi(3) * fp
    }
}

/// `Q = 9 f'²/(16 f^{7/2}) + c² f^{3/2} + 9 f^{1/2}`; equals `c₂²` on solutions.
pub fn conserved_quantity(f: f64, fprime: f64, c: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(MeanCurvatureError::Domain { f });
    }
    Ok(9.0 * fprime * fprime / (16.0 * f.powi(3) * f.sqrt()) + phi(f, c))
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    x0: f64,
    x1: f64,
    /// Arc length from the turning point to `x0`.
    d0: f64,
}

/// Coordinate along one piece of the chart; arc length grows with it.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Coord {
    /// `u = sqrt(f_max − f)`, used for `f >= f_max / 2`.
    Root,
    /// `x = −ln f`, used below `f_max / 2`.
    NegLog,
}

#[derive(Debug, Clone)]
struct Piece {
    coord: Coord,
    panels: Vec<Panel>,
    d_end: f64,
}

/// Arc length from the turning point as a function of `f`, tabulated as
/// adaptive Gauss–Legendre panels.
#[derive(Debug, Clone)]
struct TurningChart {
    f_max: f64,
    c: f64,
    c2sq: f64,
    pieces: [Piece; 2],
    rule: GaussLegendre,
}

impl TurningChart {
    fn new(f_max: f64, c: f64, c2: f64, f_floor: f64) -> Self {
        let empty = |coord| Piece { coord, panels: Vec::new(), d_end: 0.0 };
        let mut chart = Self {
            f_max,
            c,
            c2sq: c2 * c2,
            pieces: [empty(Coord::Root), empty(Coord::NegLog)],
            rule: GaussLegendre::new(12),
        };
        let f_mid = 0.5 * f_max;
        let root_end = (f_max - f_mid).sqrt();
        let d_mid = chart.tabulate(0, 0.0, root_end, 0.0);
        let d_end = if f_floor < f_mid { chart.tabulate(1, -f_mid.ln(), -f_floor.ln(), d_mid) } else { d_mid };
        chart.pieces[1].d_end = d_end;
        chart
    }

    fn d_end(&self) -> f64 {
        self.pieces[1].d_end
    }

    fn tabulate(&mut self, k: usize, a: f64, b: f64, d0: f64) -> f64 {
        let coord = self.pieces[k].coord;
        let coarse = 16;
        let mut d = d0;
        let mut panels = Vec::new();
        for j in 0..coarse {
            let lo = a + (b - a) * j as f64 / coarse as f64;
            let hi = if j + 1 == coarse { b } else { a + (b - a) * (j + 1) as f64 / coarse as f64 };
            let whole = self.panel_integral(coord, lo, hi);
            d = self.collect_panels(coord, lo, hi, whole, d, 0, &mut panels);
        }
        self.pieces[k].panels = panels;
        self.pieces[k].d_end = d;
        d
    }

    fn f_of(&self, coord: Coord, x: f64) -> f64 {
        match coord {
            Coord::Root => self.f_max - x * x,
            Coord::NegLog => (-x).exp(),
        }
    }

    /// `(φ(f_max) − φ(f)) / (f_max − f)` without forming the difference.
    fn divided_difference(&self, f: f64) -> f64 {
        let (rm, rf) = (self.f_max.sqrt(), f.sqrt());
        (self.c * self.c * (self.f_max + rm * rf + f) + 9.0) / (rm + rf)
    }

    /// `|f'| = (4/3) sqrt(radicand)` at a chart point.
    fn speed(&self, coord: Coord, x: f64, f: f64) -> f64 {
        match coord {
            Coord::Root => 4.0 / 3.0 * f.powf(1.75) * x * self.divided_difference(f).sqrt(),
            Coord::NegLog => 4.0 / 3.0 * f.powf(1.75) * (self.c2sq - phi(f, self.c)).sqrt(),
        }
    }

    /// `dd/dx`.
    fn integrand(&self, coord: Coord, x: f64) -> f64 {
        let f = self.f_of(coord, x);
        match coord {
            Coord::Root => 1.5 / (f.powf(1.75) * self.divided_difference(f).sqrt()),
            Coord::NegLog => 0.75 / (f.powf(0.75) * (self.c2sq - phi(f, self.c)).sqrt()),
        }
    }

    fn panel_integral(&self, coord: Coord, a: f64, b: f64) -> f64 {
        self.rule.integrate(a, b, |x| self.integrand(coord, x))
    }

    #[allow(clippy::too_many_arguments)]
    fn collect_panels(
        &self,
        coord: Coord,
        a: f64,
        b: f64,
        whole: f64,
        d0: f64,
        depth: u32,
        out: &mut Vec<Panel>,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = self.panel_integral(coord, a, m);
        let right = self.panel_integral(coord, m, b);
        if (left + right - whole).abs() <= 1e-13 * (left + right) || depth >= 40 {
            out.push(Panel { x0: a, x1: m, d0 });
            out.push(Panel { x0: m, x1: b, d0: d0 + left });
            return d0 + left + right;
        }
        let mid = self.collect_panels(coord, a, m, left, d0, depth + 1, out);
        self.collect_panels(coord, m, b, right, mid, depth + 1, out)
    }

    /// Distance from the turning point to `f`.
    fn distance(&self, f: f64) -> f64 {
        let (k, x) = if f >= 0.5 * self.f_max { (0, (self.f_max - f).sqrt()) } else { (1, -f.ln()) };
        let piece = &self.pieces[k];
        let j = piece.panels.partition_point(|p| p.x1 < x).min(piece.panels.len() - 1);
        let p = piece.panels[j];
        p.d0 + self.panel_integral(piece.coord, p.x0, x)
    }

    /// `(f, |f'|)` at arc length `d >= 0` from the turning point.
    fn invert(&self, d: f64) -> Option<(f64, f64)> {
        if d > self.d_end() {
            return None;
        }
        if d == 0.0 {
            return Some((self.f_max, 0.0));
        }
        let piece = if d <= self.pieces[0].d_end { &self.pieces[0] } else { &self.pieces[1] };
        let coord = piece.coord;
        let j = piece.panels.partition_point(|p| p.d0 <= d).saturating_sub(1);
        let p = piece.panels[j];
        let span_d = piece.panels.get(j + 1).map_or(piece.d_end, |q| q.d0) - p.d0;
        let (mut lo, mut hi) = (p.x0, p.x1);
        let mut x = p.x0 + (p.x1 - p.x0) * ((d - p.d0) / span_d).clamp(0.0, 1.0);
        for _ in 0..80 {
            let r = p.d0 + self.panel_integral(coord, p.x0, x) - d;
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - r / self.integrand(coord, x);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let done = (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE);
            x = next;
            if done {
                break;
            }
        }
        let f = self.f_of(coord, x);
        Some((f, self.speed(coord, x, f)))
    }
}

/// One row of the solution table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FSample {
    pub s: f64,
    pub f: f64,
    pub fprime: f64,
}

/// Record of a span cut short because `f` fell below the floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub requested_end: f64,
    pub actual_end: f64,
    pub f_floor: f64,
}

/// Tabulated solution of the mean-curvature ODE on a uniform `s` grid.
#[derive(Debug, Clone)]
pub struct MeanCurvatureSolution {
    params: ModelParams,
    f_turning: f64,
    s_turn: f64,
    span: (f64, f64),
    samples: Vec<FSample>,
    branch_marks: Vec<f64>,
    q_drift: f64,
    second_order_residual: f64,
    truncation: Option<Truncation>,
    chart: TurningChart,
}

/// Fraction of the span excluded on either side of a turning point.
pub const TURNING_BAND_FRACTION: f64 = 1e-4;

pub fn solve_f(params: &ModelParams) -> Result<MeanCurvatureSolution> {
    params.validate()?;
    let f_turning = params.f_turning();
    let chart = TurningChart::new(f_turning, params.c, params.c2, params.f_floor);
    let (start, requested_end) = params.s_span;

    let d0 = chart.distance(params.f0);
    let s_turn = start + params.eps0.sign() * d0;

    let mut end = requested_end;
    let mut truncation = None;
    if end - s_turn > chart.d_end() {
        end = s_turn + chart.d_end();
        truncation = Some(Truncation { requested_end, actual_end: end, f_floor: params.f_floor });
    }
    if !(end > start) {
        return Err(MeanCurvatureError::InvalidParams("span collapses after truncation at f_floor".to_string()));
    }

    let mut sol = MeanCurvatureSolution {
        params: params.clone(),
        f_turning,
        s_turn,
        span: (start, end),
        samples: Vec::with_capacity(params.grid_n),
        branch_marks: Vec::new(),
        q_drift: 0.0,
        second_order_residual: 0.0,
        truncation,
        chart,
    };
    let n = params.grid_n;
    for k in 0..n {
        let s = if k + 1 == n { end } else { start + (end - start) * k as f64 / (n - 1) as f64 };
        let (f, fprime) = sol.evaluate(s)?;
        sol.samples.push(FSample { s, f, fprime });
    }
    if s_turn > start && s_turn < end {
        sol.branch_marks.push(s_turn);
    }

    let c2sq = params.c2 * params.c2;
    for row in &sol.samples {
        let q = conserved_quantity(row.f, row.fprime, params.c)?;
        sol.q_drift = sol.q_drift.max((q - c2sq).abs() / c2sq);

        let (f, fp) = (row.f, row.fprime);
        let c2 = params.c * params.c;
        let lhs = f * sol.ode_second_derivative(f);
        let rhs = 1.75 * fp * fp - 4.0 * f.powi(4) - 4.0 / 3.0 * c2 * f.powi(5);
        let scale = 1.0 + 1.75 * fp * fp + 4.0 * f.powi(4) + 4.0 / 3.0 * c2 * f.powi(5);
        sol.second_order_residual = sol.second_order_residual.max((lhs - rhs).abs() / scale);
    }
    Ok(sol)
}

impl MeanCurvatureSolution {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn samples(&self) -> &[FSample] {
        &self.samples
    }

    /// Arc lengths of turning points (`f' = 0`) inside the solved span.
    pub fn branch_marks(&self) -> &[f64] {
        &self.branch_marks
    }

    /// Max relative deviation of `Q` from `c₂²` over the samples.
    pub fn q_drift(&self) -> f64 {
        self.q_drift
    }

    /// Max scaled residual of `f f'' = (7/4) f'² − 4 f⁴ − (4/3) c² f⁵`, with
    /// `f''` taken from the first-order ODE.
    pub fn second_order_residual(&self) -> f64 {
        self.second_order_residual
    }

    pub fn truncation(&self) -> Option<Truncation> {
        self.truncation
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    pub fn f_turning(&self) -> f64 {
        self.f_turning
    }

    /// Arc length at which `f = f_max` (may lie outside the span).
    pub fn s_turn(&self) -> f64 {
        self.s_turn
    }

    /// Half-width of the exclusion band around each turning point.
    pub fn exclusion_half_width(&self) -> f64 {
        TURNING_BAND_FRACTION * (self.span.1 - self.span.0)
    }

    pub fn in_exclusion_band(&self, s: f64) -> bool {
        self.branch_marks.iter().any(|m| (s - m).abs() < self.exclusion_half_width())
    }

    /// Branch sign at `s`: `+1` before the turning point, `−1` after.
    pub fn branch_at(&self, s: f64) -> Branch {
        if s < self.s_turn {
            Branch::Rising
        } else {
            Branch::Falling
        }
    }

    /// `f'' = (8/9) dR/df`, valid through the turning point.
    fn ode_second_derivative(&self, f: f64) -> f64 {
        let p = &self.params;
        let dr = 3.5 * p.c2 * p.c2 * f * f * f.sqrt() - 5.0 * p.c * p.c * f.powi(4) - 36.0 * f.powi(3);
        8.0 / 9.0 * dr
    }

    /// `(f, f')` at any `s` where `f` stays above the floor, straight from the
    /// quadrature (no interpolation).
    pub fn evaluate(&self, s: f64) -> Result<(f64, f64)> {
        let d = s - self.s_turn;
        let (f, speed) = self.chart.invert(d.abs()).ok_or(MeanCurvatureError::OutOfSpan {
            s,
            start: self.s_turn - self.chart.d_end(),
            end: self.s_turn + self.chart.d_end(),
        })?;
        Ok((f, if d < 0.0 { speed } else { -speed }))
    }

    /// Cubic Hermite interpolation of `f` over the sample table.
    pub fn interpolate(&self, s: f64) -> Result<f64> {
        let (a, b) = self.span;
        if !(s >= a && s <= b) {
            return Err(MeanCurvatureError::OutOfSpan { s, start: a, end: b });
        }
        let n = self.samples.len();
        let h = (b - a) / (n - 1) as f64;
        let k = (((s - a) / h).floor() as usize).min(n - 2);
        let (p, q) = (self.samples[k], self.samples[k + 1]);
        let width = q.s - p.s;
        let x = (s - p.s) / width;
        let x2 = x * x;
        let x3 = x2 * x;
        Ok((2.0 * x3 - 3.0 * x2 + 1.0) * p.f
            + (x3 - 2.0 * x2 + x) * width * p.fprime
            + (-2.0 * x3 + 3.0 * x2) * q.f
            + (x3 - x2) * width * q.fprime)
    }

    /// Degree-3 jet of `f(s)` at `base`, refusing points inside turning bands.
    pub fn lift_f_jets(&self, base: BasePoint) -> Result<Jet3> {
        if let Some(&mark) = self.branch_marks.iter().find(|m| (base.s - **m).abs() < self.exclusion_half_width()) {
            return Err(MeanCurvatureError::NearTurningPoint { s: base.s, s_turn: mark });
        }
        self.lift_f_jets_unchecked(base)
    }

    /// As [`lift_f_jets`](Self::lift_f_jets) but also inside exclusion bands
    /// (used to build the surface across a turning point).
    ///
    /// `f` and `f'` come from the quadrature; the higher derivatives follow
    /// from the ODE.
    pub fn lift_f_jets_unchecked(&self, base: BasePoint) -> Result<Jet3> {
        let (a, b) = self.span;
        if !(base.s >= a && base.s <= b) {
            return Err(MeanCurvatureError::OutOfSpan { s: base.s, start: a, end: b });
        }
        let (f, fp) = self.evaluate(base.s)?;
        let fpp = self.ode_second_derivative(f);
        let fppp = self.params.third_derivative(f, fp, fpp);
        Ok(Jet3::from_s_derivatives(base, &[f, fp, fpp, fppp]))
    }

    /// Writes `s,f,fprime,Q` with shortest round-trip decimal formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "s,f,fprime,Q")?;
        for row in &self.samples {
            let q = conserved_quantity(row.f, row.fprime, self.params.c).unwrap_or(f64::NAN);
            writeln!(out, "{},{},{},{}", row.s, row.f, row.fprime, q)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(c: f64, c2: f64, f0: f64) -> ModelParams {
        ModelParams { c, c2, f0, ..ModelParams::default() }
    }

    #[test]
    fn radicand_examples() {
        assert_eq!(params(0.0, 3.0, 0.5).radicand(1.0).unwrap(), 0.0);
        assert_eq!(params(0.0, 5.0, 0.5).radicand(1.0).unwrap(), 16.0);
        assert_eq!(params(1.0, 5.0, 0.5).radicand(1.0).unwrap(), 15.0);
        assert_eq!(params(1.0, 5.0, 0.5).radicand(0.0), Err(MeanCurvatureError::Domain { f: 0.0 }));
    }

    #[test]
    fn rhs_examples() {
        let p = params(0.0, 5.0, 0.5);
        assert!((p.fprime_rhs(1.0, Branch::Rising).unwrap() - 16.0 / 3.0).abs() < 1e-14);
        assert_eq!(params(0.0, 3.0, 0.5).fprime_rhs(1.0, Branch::Rising).unwrap(), 0.0);
        let v = params(1.0, 5.0, 0.5).fprime_rhs(1.0, Branch::Falling).unwrap();
        assert!((v + 4.0 / 3.0 * 15f64.sqrt()).abs() < 1e-14);
        let err = params(0.0, 3.0, 0.5).fprime_rhs(2.0, Branch::Rising).unwrap_err();
        assert!(matches!(err, MeanCurvatureError::OutsideAdmissible { .. }));
    }

    #[test]
    fn conserved_quantity_examples() {
        assert_eq!(conserved_quantity(1.0, 0.0, 2.0).unwrap(), 13.0);
        assert_eq!(conserved_quantity(16.0, 0.0, 0.0).unwrap(), 36.0);
        assert!((conserved_quantity(1.0, 16.0 / 3.0, 0.0).unwrap() - 25.0).abs() < 1e-13);
        assert!(conserved_quantity(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn turning_value_examples() {
        assert_eq!(params(0.0, 3.0, 0.5).f_turning(), 1.0);
        assert!((params(0.0, 4.0, 0.5).f_turning() - 256.0 / 81.0).abs() < 1e-15);
        let f = params(1.0, 4.0, 0.5).f_turning();
        assert!(f > 2.0 && f < 2.25);
        assert!((phi(f, 1.0) - 16.0).abs() < 1e-13);
    }

    #[test]
    fn parameter_validation() {
        let err = params(1.0, -1.0, 1.0).validate().unwrap_err();
        assert_eq!(err, MeanCurvatureError::InvalidParams("c2 must be positive".into()));
        // f0 equal to the turning root is the excluded constant-f case
        assert!(matches!(params(0.0, 3.0, 1.0).validate(), Err(MeanCurvatureError::NoAdmissibleBranch { .. })));
        assert!(params(1.0, 4.0, 1.0).validate().is_ok());
    }

    #[test]
    fn rising_branch_has_one_turning_point() {
        let sol = solve_f(&params(1.0, 4.0, 1.0)).unwrap();
        assert_eq!(sol.branch_marks().len(), 1);
        let s_turn = sol.branch_marks()[0];
        for w in sol.samples().windows(2) {
            assert!(w[1].s > w[0].s);
            if w[1].s < s_turn {
                assert!(w[1].f > w[0].f);
            } else if w[0].s > s_turn {
                assert!(w[1].f < w[0].f);
            }
        }
        assert!(sol.q_drift() < 1e-9);
        assert!(sol.second_order_residual() < 1e-12);
        assert!((sol.samples()[0].f - 1.0).abs() < 1e-14);
    }

    #[test]
    fn samples_stay_admissible() {
        let sol = solve_f(&params(0.5, 5.0, 1.0)).unwrap();
        let f_max = sol.f_turning();
        for row in sol.samples() {
            assert!(row.f > 0.0 && row.f <= f_max);
            // f'² = rhs(f)², compared in squared form
            let radicand = sol.params().radicand(row.f).unwrap();
            assert!((9.0 / 16.0 * row.fprime * row.fprime - radicand).abs() <= 1e-10 * 25.0 * row.f.powf(3.5));
            let eps = sol.branch_at(row.s).sign();
            assert!(row.fprime * eps >= 0.0);
        }
    }

    #[test]
    fn falling_branch_decays_without_crossing_zero() {
        let p = ModelParams {
            c: 0.0,
            c2: 4.0,
            f0: 256.0 / 81.0 - 1e-3,
            eps0: Branch::Falling,
            s_span: (0.0, 5.0),
            ..ModelParams::default()
        };
        let sol = solve_f(&p).unwrap();
        assert!(sol.branch_marks().is_empty());
        for w in sol.samples().windows(2) {
            assert!(w[1].f < w[0].f && w[1].f > 0.0);
        }
    }

    #[test]
    fn span_truncated_at_floor() {
        let p = ModelParams { f_floor: 0.05, s_span: (0.0, 10.0), ..params(1.0, 4.0, 1.0) };
        let sol = solve_f(&p).unwrap();
        let cut = sol.truncation().expect("span should be truncated");
        assert_eq!(cut.requested_end, 10.0);
        assert!(cut.actual_end < 10.0);
        let last = sol.samples().last().unwrap();
        assert!((last.f - 0.05).abs() < 1e-9);
    }

    #[test]
    fn hermite_matches_direct_evaluation() {
        let sol = solve_f(&params(1.0, 4.0, 1.0)).unwrap();
        for k in 0..200 {
            let s = 0.003 + 1.49 * k as f64 / 200.0;
            let (f, _) = sol.evaluate(s).unwrap();
            assert!((sol.interpolate(s).unwrap() - f).abs() < 1e-11 * f);
        }
    }

    #[test]
    fn lifted_jet_at_unit_f() {
        let p = ModelParams { s_span: (0.0, 0.1), ..params(0.0, 5.0, 1.0) };
        let sol = solve_f(&p).unwrap();
        let jet = sol.lift_f_jets(BasePoint::new(0.0, 0.0)).unwrap();
        assert!((jet.partial(0, 0).unwrap() - 1.0).abs() < 1e-13);
        assert!((jet.partial(1, 0).unwrap() - 16.0 / 3.0).abs() < 1e-12);
        assert!((jet.partial(2, 0).unwrap() - (448.0 / 9.0 - 4.0)).abs() < 1e-11);
    }

    #[test]
    fn lift_refuses_turning_band() {
        let sol = solve_f(&params(1.0, 4.0, 1.0)).unwrap();
        let s_turn = sol.branch_marks()[0];
        let err = sol.lift_f_jets(BasePoint::new(s_turn + 1e-6, 0.0)).unwrap_err();
        assert!(matches!(err, MeanCurvatureError::NearTurningPoint { .. }));
        // across the turning point f' flips sign and f'' stays continuous
        let h = 2.0 * sol.exclusion_half_width();
        let before = sol.lift_f_jets(BasePoint::new(s_turn - h, 0.0)).unwrap();
        let after = sol.lift_f_jets(BasePoint::new(s_turn + h, 0.0)).unwrap();
        assert!(before.partial(1, 0).unwrap() > 0.0 && after.partial(1, 0).unwrap() < 0.0);
        let (a, b) = (before.partial(2, 0).unwrap(), after.partial(2, 0).unwrap());
        assert!((a - b).abs() < 1e-3 * a.abs());
    }

    #[test]
    fn lifted_second_derivative_matches_finite_differences() {
        let sol = solve_f(&params(1.0, 4.0, 1.0)).unwrap();
        let h = 1e-3;
        for &s in &[0.1, 0.6, 1.2] {
            let jet = sol.lift_f_jets(BasePoint::new(s, 0.0)).unwrap();
            let f = |x: f64| sol.evaluate(x).unwrap().0;
            let d = |h: f64| (f(s + h) - 2.0 * f(s) + f(s - h)) / (h * h);
            let richardson = (4.0 * d(h / 2.0) - d(h)) / 3.0;
            let fpp = jet.partial(2, 0).unwrap();
            assert!((richardson - fpp).abs() < 1e-6 * fpp.abs(), "s={s}: {richardson} vs {fpp}");
        }
    }

    #[test]
    fn branch_reflection_symmetry() {
        let rising = solve_f(&params(1.0, 4.0, 1.0)).unwrap();
        let falling = solve_f(&ModelParams { eps0: Branch::Falling, ..params(1.0, 4.0, 1.0) }).unwrap();
        for row in falling.samples().iter().step_by(37) {
            let (f_reflected, _) = rising.evaluate(-row.s).unwrap();
            assert!((row.f - f_reflected).abs() < 1e-10 * row.f);
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let p = ModelParams { grid_n: 3, ..params(1.0, 4.0, 1.0) };
        let sol = solve_f(&p).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "s,f,fprime,Q");
        assert_eq!(lines.len(), 4);
        let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first[0], 0.0);
        assert_eq!(first[1], sol.samples()[0].f);
    }
}
