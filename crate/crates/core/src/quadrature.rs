//! Gauss–Legendre rules and the matching spectral integration matrix.

use std::f64::consts::PI;

/// `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `cumulative[i][j] = ∫_{-1}^{x_i} ℓ_j(x) dx` for the Lagrange basis on the nodes.
    cumulative: Vec<Vec<f64>>,
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "need at least two nodes");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Tricomi initial guess, then Newton
            let mut x = -((PI * (i as f64 + 0.75)) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        let mut rule = Self { nodes, weights, cumulative: Vec::new() };
        rule.cumulative = rule.build_cumulative();
        rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn lagrange(&self, j: usize, x: f64) -> f64 {
        self.nodes.iter().enumerate().filter(|(m, _)| *m != j).map(|(_, xm)| (x - xm) / (self.nodes[j] - xm)).product()
    }

    fn build_cumulative(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let b = self.nodes[i];
                let half = 0.5 * (b + 1.0);
                (0..n)
                    .map(|j| {
                        // degree n-1 integrand: the n-point rule is exact
                        self.nodes
                            .iter()
                            .zip(&self.weights)
                            .map(|(y, w)| w * half * self.lagrange(j, -1.0 + half * (y + 1.0)))
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// Maps the nodes onto `[a, b]`.
    pub fn mapped_nodes(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes.iter().map(move |x| mid + half * x)
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        half * self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
    }

    /// Given integrand samples at the mapped nodes of `[a, b]`, returns the
    /// integrals `∫_a^{x_i}` of the interpolating polynomial at every node.
    pub fn cumulative(&self, a: f64, b: f64, samples: &[f64]) -> Vec<f64> {
        let half = 0.5 * (b - a);
        self.cumulative.iter().map(|row| half * row.iter().zip(samples).map(|(w, v)| w * v).sum::<f64>()).collect()
    }

    /// Recursive adaptive integration: accepts a panel once the whole-panel
    /// estimate and the two-half estimate agree to `rel_tol`.
    pub fn integrate_adaptive(&self, a: f64, b: f64, rel_tol: f64, f: &mut impl FnMut(f64) -> f64) -> f64 {
        let whole = self.integrate(a, b, &mut *f);
        self.refine(a, b, whole, rel_tol, 0, f)
    }

    fn refine(&self, a: f64, b: f64, whole: f64, rel_tol: f64, depth: u32, f: &mut impl FnMut(f64) -> f64) -> f64 {
        let m = 0.5 * (a + b);
        let left = self.integrate(a, m, &mut *f);
        let right = self.integrate(m, b, &mut *f);
        let halves = left + right;
        if (halves - whole).abs() <= rel_tol * halves.abs() || depth >= 60 {
            return halves;
        }
        self.refine(a, m, left, rel_tol, depth + 1, f) + self.refine(m, b, right, rel_tol, depth + 1, f)
    }
}
