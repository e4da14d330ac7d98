//! Independent oracles: an adaptive Dormand–Prince integrator and
//! Richardson-extrapolated central differences.

#![allow(dead_code)]

use biconserve_core::linalg4::Vec4;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Adaptive Dormand–Prince 5(4) from `t0` to `t1`, returning `y(t1)`.
pub fn dormand_prince<const N: usize>(
    rhs: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t1: f64,
    rtol: f64,
) -> [f64; N] {
    let mut t = t0;
    let mut y = y0;
    let mut h = (t1 - t0) * 1e-3;
    let dir = (t1 - t0).signum();
    let mut steps = 0;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        assert!(steps < 10_000_000, "oracle integrator stalled at t = {t}");
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let mut k = [[0.0; N]; 7];
        for stage in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                for i in 0..N {
                    ys[i] += h * A[stage][j] * kj[i];
                }
            }
            k[stage] = rhs(t + C[stage] * h, &ys);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for i in 0..N {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][i];
                d4 += B4[s] * k[s][i];
            }
            y5[i] += h * d5;
            let scale = rtol * (1e-300 + y[i].abs().max(y5[i].abs()));
            err = err.max((h * (d5 - d4)).abs() / scale);
        }
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    y
}

/// First derivative by central differences with one Richardson step.
pub fn richardson_d1(g: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (g(x + h) - g(x - h)) / (2.0 * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

/// Second derivative by central differences with one Richardson step.
pub fn richardson_d2(g: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

/// Mixed second derivative `∂²/∂s∂t` of a function of two variables.
pub fn richardson_mixed(g: impl Fn(f64, f64) -> f64, s: f64, t: f64, h: f64) -> f64 {
    let d = |h: f64| (g(s + h, t + h) - g(s + h, t - h) - g(s - h, t + h) + g(s - h, t - h)) / (4.0 * h * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

/// Componentwise Richardson derivatives of a vector-valued map.
pub fn vec_d1(g: impl Fn(f64) -> Vec4, x: f64, h: f64) -> Vec4 {
    Vec4::from_fn(|i, _| richardson_d1(|y| g(y)[i], x, h))
}

pub fn vec_d2(g: impl Fn(f64) -> Vec4, x: f64, h: f64) -> Vec4 {
    Vec4::from_fn(|i, _| richardson_d2(|y| g(y)[i], x, h))
}

pub fn vec_mixed(g: impl Fn(f64, f64) -> Vec4, s: f64, t: f64, h: f64) -> Vec4 {
    Vec4::from_fn(|i, _| richardson_mixed(|a, b| g(a, b)[i], s, t, h))
}

/// `f(s)` by direct integration of `f' = (4/3) ε sqrt(R(f))` from `(s0, f0)`.
pub fn oracle_f(c: f64, c2: f64, f0: f64, eps: f64, s0: f64, s1: f64) -> f64 {
    let rhs = |_s: f64, y: &[f64; 1]| {
        let f = y[0];
        let r = c2 * c2 * f.powf(3.5) - c * c * f.powi(5) - 9.0 * f.powi(4);
        [4.0 / 3.0 * eps * r.max(0.0).sqrt()]
    };
    dormand_prince(rhs, s0, [f0], s1, 1e-13)[0]
}

/// `(f, f')` by integrating the second-order form `f'' = (8/9) dR/df`,
/// which stays regular through turning points.
pub fn oracle_f_second_order(c: f64, c2: f64, f0: f64, fp0: f64, s0: f64, s1: f64) -> [f64; 2] {
    let rhs = |_s: f64, y: &[f64; 2]| {
        let f = y[0];
        let dr = 3.5 * c2 * c2 * f.powf(2.5) - 5.0 * c * c * f.powi(4) - 36.0 * f.powi(3);
        [y[1], 8.0 / 9.0 * dr]
    };
    dormand_prince(rhs, s0, [f0, fp0], s1, 1e-13)
}
