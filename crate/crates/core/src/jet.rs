//! Truncated bivariate Taylor jets in the chart variables `(s, t)`.
//!
//! A [`Jet<D>`] carries the raw partial derivatives `∂^{i+j} u / ∂s^i ∂t^j`
//! of a scalar quantity `u` at a fixed base point, for every multi-index with
//! `i + j <= D`. Coefficients are *not* divided by `i! j!`; what is stored is
//! exactly what geometry code reads back.
//!
//! Degree 3 ([`Jet3`]) is the carrier for immersions. Lower degrees appear
//! when a jet is differentiated ([`Jet::diff_s`], [`Jet::diff_t`]), e.g. the
//! frame construction runs in [`Jet1`] arithmetic on top of second
//! derivatives of a degree-3 immersion jet.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use thiserror::Error;

/// Highest supported total degree.
pub const MAX_ORDER: usize = 3;

/// Storage size: number of multi-indices with `i + j <= 3`.
pub const N_COEFFS: usize = 10;

pub type Jet1 = Jet<1>;
pub type Jet2 = Jet<2>;
pub type Jet3 = Jet<3>;

/// Chart point `(s, t)` at which a jet is expanded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasePoint {
    pub s: f64,
    pub t: f64,
}

impl BasePoint {
    pub const fn new(s: f64, t: f64) -> Self {
        Self { s, t }
    }
}

impl fmt::Display for BasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.s, self.t)
    }
}

/// Chart variable selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    S,
    T,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jets expanded at different base points {left} and {right}")]
    BasePointMismatch { left: BasePoint, right: BasePoint },
    #[error("division by a jet whose value is zero")]
    Singular,
    #[error("{func} is undefined for base value {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("partial derivative of order {order} requested from a degree-{max} jet")]
    OrderOverflow { order: usize, max: usize },
}

/// Position of multi-index `(i, j)` in the coefficient array.
///
/// Coefficients are grouped by total degree: `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...`.
#[inline]
pub const fn coeff_index(i: usize, j: usize) -> usize {
    let n = i + j;
    n * (n + 1) / 2 + j
}

const BINOM: [[f64; 4]; 4] = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]];

const FACTORIAL: [f64; 4] = [1.0, 1.0, 2.0, 6.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const D: usize> {
    coeffs: [f64; N_COEFFS],
    base: BasePoint,
}

impl<const D: usize> Jet<D> {
    const DEGREE_OK: () = assert!(D <= MAX_ORDER, "jet degree above 3 is not supported");

    /// Iterates `(i, j)` over every multi-index of total degree `<= D`.
    fn indices() -> impl Iterator<Item = (usize, usize)> {
        (0..=D).flat_map(|n| (0..=n).map(move |j| (n - j, j)))
    }

    pub fn constant(value: f64, base: BasePoint) -> Self {
        let () = Self::DEGREE_OK;
        let mut coeffs = [0.0; N_COEFFS];
        coeffs[0] = value;
        Self { coeffs, base }
    }

    /// Coordinate jet of `s` or `t`; the value is read from `base`.
    pub fn variable(which: Var, base: BasePoint) -> Self {
        let () = Self::DEGREE_OK;
        let mut coeffs = [0.0; N_COEFFS];
        match which {
            Var::S => {
                coeffs[0] = base.s;
                if D >= 1 {
                    coeffs[coeff_index(1, 0)] = 1.0;
                }
            }
            Var::T => {
                coeffs[0] = base.t;
                if D >= 1 {
                    coeffs[coeff_index(0, 1)] = 1.0;
                }
            }
        }
        Self { coeffs, base }
    }

    /// Jet of a function of `s` alone from its derivatives `[u, u', u'', ...]`.
    /// Entries beyond degree `D` are ignored; missing ones are zero.
    pub fn from_s_derivatives(base: BasePoint, derivs: &[f64]) -> Self {
        let mut jet = Self::constant(0.0, base);
        for (i, &d) in derivs.iter().enumerate().take(D + 1) {
            jet.coeffs[coeff_index(i, 0)] = d;
        }
        jet
    }

    /// Jet of a function of `t` alone from its derivatives.
    pub fn from_t_derivatives(base: BasePoint, derivs: &[f64]) -> Self {
        let mut jet = Self::constant(0.0, base);
        for (j, &d) in derivs.iter().enumerate().take(D + 1) {
            jet.coeffs[coeff_index(0, j)] = d;
        }
        jet
    }

    /// Builds a jet from raw partials `(i, j) -> ∂^{i+j}`; indices above `D` are dropped.
    pub fn from_fn(base: BasePoint, mut partial: impl FnMut(usize, usize) -> f64) -> Self {
        let mut jet = Self::constant(0.0, base);
        for (i, j) in Self::indices() {
            jet.coeffs[coeff_index(i, j)] = partial(i, j);
        }
        jet
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    #[inline]
    pub fn base(&self) -> BasePoint {
        self.base
    }

    /// Raw partial derivative `∂^{i+j}/∂s^i∂t^j`.
    pub fn partial(&self, i: usize, j: usize) -> Result<f64, JetError> {
        if i + j > D {
            return Err(JetError::OrderOverflow { order: i + j, max: D });
        }
        Ok(self.coeffs[coeff_index(i, j)])
    }

    /// `∂/∂s` and `∂/∂t` of the value; zero for a degree-0 jet.
    pub fn gradient(&self) -> [f64; 2] {
        if D == 0 {
            [0.0, 0.0]
        } else {
            [self.coeffs[1], self.coeffs[2]]
        }
    }

    /// All stored coefficients in storage order (degree-major).
    pub fn coefficients(&self) -> &[f64; N_COEFFS] {
        &self.coeffs
    }

    fn check_base(&self, other: &Self) -> Result<(), JetError> {
        if self.base == other.base {
            Ok(())
        } else {
            Err(JetError::BasePointMismatch { left: self.base, right: other.base })
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, JetError> {
        self.check_base(other)?;
        let mut out = *self;
        for (a, b) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += b;
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, JetError> {
        self.check_base(other)?;
        let mut out = *self;
        for (a, b) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a -= b;
        }
        Ok(out)
    }

    /// Leibniz product truncated at degree `D`.
    pub fn try_mul(&self, other: &Self) -> Result<Self, JetError> {
        self.check_base(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn try_div(&self, other: &Self) -> Result<Self, JetError> {
        self.check_base(other)?;
        Ok(self.mul_unchecked(&other.recip()?))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::constant(0.0, self.base);
        for (i, j) in Self::indices() {
            let mut acc = 0.0;
            for k in 0..=i {
                for l in 0..=j {
                    acc += BINOM[i][k]
                        * BINOM[j][l]
                        * self.coeffs[coeff_index(k, l)]
                        * other.coeffs[coeff_index(i - k, j - l)];
                }
            }
            out.coeffs[coeff_index(i, j)] = acc;
        }
        out
    }

    /// Composes a univariate function with this jet, given the function's
    /// derivatives `g(a0), g'(a0), g''(a0), g'''(a0)` at the jet value `a0`.
    ///
    /// Uses `g(a) = Σ g⁽ⁿ⁾(a0)/n! · (a − a0)ⁿ`; since `a − a0` has no constant
    /// term, its `n`-th power starts at degree `n` and truncation is exact.
    pub fn compose(&self, derivs: [f64; 4]) -> Self {
        let mut delta = *self;
        delta.coeffs[0] = 0.0;
        let mut out = Self::constant(derivs[0], self.base);
        let mut power = Self::constant(1.0, self.base);
        for (n, &dn) in derivs.iter().enumerate().take(D + 1).skip(1) {
            power = power.mul_unchecked(&delta);
            let scale = dn / FACTORIAL[n];
            for (o, p) in out.coeffs.iter_mut().zip(power.coeffs.iter()) {
                *o += scale * p;
            }
        }
        out
    }

    pub fn recip(&self) -> Result<Self, JetError> {
        let x = self.value();
        if x == 0.0 {
            return Err(JetError::Singular);
        }
        let r = 1.0 / x;
        Ok(self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r]))
    }

    pub fn sqrt(&self) -> Result<Self, JetError> {
        self.pow_rational(1, 2)
    }

    /// `self^(p/q)`. Non-integer exponents need a strictly positive value;
    /// negative integer exponents need a non-zero value.
    pub fn pow_rational(&self, p: i32, q: u32) -> Result<Self, JetError> {
        assert!(q > 0, "rational exponent needs a positive denominator");
        let x = self.value();
        let integer = p % q as i32 == 0;
        if !integer && x <= 0.0 {
            return Err(JetError::Domain { func: "fractional power", value: x });
        }
        let r = f64::from(p) / f64::from(q);
        if integer {
            let n = p / q as i32;
            if n < 0 && x == 0.0 {
                return Err(JetError::Singular);
            }
            // integer powers by repeated falling factorial on powi
            let mut derivs = [0.0; 4];
            let mut coef = 1.0;
            for (k, d) in derivs.iter_mut().enumerate() {
                let e = n - k as i32;
                *d = if coef == 0.0 { 0.0 } else { coef * x.powi(e) };
                coef *= f64::from(n - k as i32);
            }
            return Ok(self.compose(derivs));
        }
        let xr = (r * x.ln()).exp();
        let mut derivs = [0.0; 4];
        let mut coef = 1.0;
        let mut xpow = xr;
        for (k, d) in derivs.iter_mut().enumerate() {
            *d = coef * xpow;
            coef *= r - k as f64;
            xpow /= x;
        }
        Ok(self.compose(derivs))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }

    /// Drops all coefficients above degree `E`.
    pub fn truncate<const E: usize>(&self) -> Jet<E> {
        const { assert!(E <= D, "truncation cannot raise the degree") };
        Jet::<E>::from_fn(self.base, |i, j| self.coeffs[coeff_index(i, j)])
    }

    /// `∂/∂s` of the underlying function, as a jet of degree `E < D`.
    pub fn diff_s<const E: usize>(&self) -> Jet<E> {
        const { assert!(E < D, "differentiation lowers the degree by one") };
        Jet::<E>::from_fn(self.base, |i, j| self.coeffs[coeff_index(i + 1, j)])
    }

    /// `∂/∂t` of the underlying function, as a jet of degree `E < D`.
    pub fn diff_t<const E: usize>(&self) -> Jet<E> {
        const { assert!(E < D, "differentiation lowers the degree by one") };
        Jet::<E>::from_fn(self.base, |i, j| self.coeffs[coeff_index(i, j + 1)])
    }

    /// Primitive in `s` of a function of `s` alone: value `value` at the base
    /// point and `∂s = derivative`. Any `t`-dependence of `derivative` is ignored.
    pub fn primitive_s<const E: usize>(value: f64, derivative: &Jet<E>) -> Self {
        const { assert!(D <= E + 1, "primitive gains at most one degree") };
        let mut out = Self::constant(value, derivative.base);
        for i in 1..=D {
            out.coeffs[coeff_index(i, 0)] = derivative.coeffs[coeff_index(i - 1, 0)];
        }
        out
    }

    /// Directional derivative `a ∂s + b ∂t` of the value.
    pub fn directional(&self, a: f64, b: f64) -> f64 {
        let [ds, dt] = self.gradient();
        a * ds + b * dt
    }
}

fn assert_same_base(a: BasePoint, b: BasePoint) {
    assert!(a == b, "jet arithmetic across base points {a} and {b}");
}

impl<const D: usize> Add for Jet<D> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<const D: usize> AddAssign for Jet<D> {
    fn add_assign(&mut self, rhs: Self) {
        assert_same_base(self.base, rhs.base);
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *a += b;
        }
    }
}

impl<const D: usize> Sub for Jet<D> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl<const D: usize> SubAssign for Jet<D> {
    fn sub_assign(&mut self, rhs: Self) {
        assert_same_base(self.base, rhs.base);
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *a -= b;
        }
    }
}

impl<const D: usize> Mul for Jet<D> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        assert_same_base(self.base, rhs.base);
        self.mul_unchecked(&rhs)
    }
}

impl<const D: usize> MulAssign for Jet<D> {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<const D: usize> Neg for Jet<D> {
    type Output = Self;
    fn neg(mut self) -> Self {
        for a in self.coeffs.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl<const D: usize> Add<f64> for Jet<D> {
    type Output = Self;
    fn add(mut self, rhs: f64) -> Self {
        self.coeffs[0] += rhs;
        self
    }
}

impl<const D: usize> Sub<f64> for Jet<D> {
    type Output = Self;
    fn sub(mut self, rhs: f64) -> Self {
        self.coeffs[0] -= rhs;
        self
    }
}

impl<const D: usize> Mul<f64> for Jet<D> {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for a in self.coeffs.iter_mut() {
            *a *= rhs;
        }
        self
    }
}

impl<const D: usize> Mul<Jet<D>> for f64 {
    type Output = Jet<D>;
    fn mul(self, rhs: Jet<D>) -> Jet<D> {
        rhs * self
    }
}

impl<const D: usize> Add<Jet<D>> for f64 {
    type Output = Jet<D>;
    fn add(self, rhs: Jet<D>) -> Jet<D> {
        rhs + self
    }
}

impl<const D: usize> Sub<Jet<D>> for f64 {
    type Output = Jet<D>;
    fn sub(self, rhs: Jet<D>) -> Jet<D> {
        -rhs + self
    }
}

impl<const D: usize> Div<f64> for Jet<D> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self * (1.0 / rhs)
    }
}
