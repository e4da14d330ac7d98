//! Small fixed-size linear algebra for frames in E³ and E⁴.

use nalgebra::{DMatrix, Matrix3, Matrix4, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Vec4 = nalgebra::Vector4<f64>;

/// Unit vectors are checked against this at construction.
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("vectors are nearly dependent (Gram condition estimate {condition:e})")]
    DegenerateSpan { condition: f64 },
    #[error("rigid alignment is ill-posed: {0}")]
    AlignmentIllPosed(&'static str),
    #[error("vector is not unit length (|v| = {norm})")]
    NotUnit { norm: f64 },
}

/// Normalizes `v`, refusing anything that is not already unit to [`UNIT_TOL`].
pub fn checked_unit(v: Vec4) -> Result<Vec4, LinalgError> {
    let norm = v.norm();
    if (norm - 1.0).abs() < UNIT_TOL {
        Ok(v)
    } else {
        Err(LinalgError::NotUnit { norm })
    }
}

/// Symmetric 2×2 matrix stored by its three independent entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

/// Ascending eigenvalues with matching unit eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    pub values: [f64; 2],
    pub vectors: [Vec2; 2],
}

impl Sym2 {
    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Self { xx: a, xy: 0.0, yy: b }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.xx * self.xx + 2.0 * self.xy * self.xy + self.yy * self.yy).sqrt()
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(k * self.xx, k * self.xy, k * self.yy)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.xx + other.xx, self.xy + other.xy, self.yy + other.yy)
    }

    /// Closed-form eigen-decomposition.
    ///
    /// The larger-magnitude root is formed without cancellation and the other
    /// one recovered from the determinant.
    pub fn eig(&self) -> Eigen2 {
        let half_trace = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let disc = half_diff.hypot(self.xy);
        let (lo, hi) = if half_trace >= 0.0 {
            let hi = half_trace + disc;
            let lo = if hi != 0.0 { self.det() / hi } else { half_trace - disc };
            (lo, hi)
        } else {
            let lo = half_trace - disc;
            let hi = if lo != 0.0 { self.det() / lo } else { half_trace + disc };
            (lo, hi)
        };
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };

        // eigenvector of the larger eigenvalue from the better-conditioned row
        let v_hi = if disc == 0.0 {
            Vec2::new(1.0, 0.0)
        } else {
            let row_a = Vec2::new(self.xy, hi - self.xx);
            let row_b = Vec2::new(hi - self.yy, self.xy);
            let v = if row_a.norm_squared() >= row_b.norm_squared() { row_a } else { row_b };
            v.normalize()
        };
        let v_lo = Vec2::new(-v_hi.y, v_hi.x);
        Eigen2 { values: [lo, hi], vectors: [v_lo, v_hi] }
    }
}

/// Gram–Schmidt with one re-orthogonalization pass.
///
/// Rejects inputs whose Gram matrix has smallest/largest eigenvalue ratio below 1e-10.
pub fn gram_schmidt(vectors: &[Vec4]) -> Result<Vec<Vec4>, LinalgError> {
    let n = vectors.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let gram = DMatrix::from_fn(n, n, |i, j| vectors[i].dot(&vectors[j]));
    let eig = SymmetricEigen::new(gram);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= 1e-10 * max {
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        return Err(LinalgError::DegenerateSpan { condition });
    }
    let mut out: Vec<Vec4> = Vec::with_capacity(n);
    for v in vectors {
        let mut w = *v;
        for _ in 0..2 {
            for q in &out {
                w -= q * q.dot(&w);
            }
        }
        out.push(w.normalize());
    }
    Ok(out)
}

pub fn det4(a: &Vec4, b: &Vec4, c: &Vec4, d: &Vec4) -> f64 {
    Matrix4::from_columns(&[*a, *b, *c, *d]).determinant()
}

/// Orthonormal basis `(n1, n2)` of the orthogonal complement of the
/// orthonormal pair `(e1, e2)`, ordered so that `det(e1, e2, n1, n2) = +1`.
///
/// Candidates are the coordinate axes ranked by the length of their normal
/// projection; ties go to the lower axis index.
pub fn normal_complement(e1: &Vec4, e2: &Vec4) -> (Vec4, Vec4) {
    let project = |v: Vec4, basis: &[Vec4]| {
        let mut w = v;
        for _ in 0..2 {
            for q in basis {
                w -= q * q.dot(&w);
            }
        }
        w
    };
    let pick = |basis: &[Vec4]| {
        let mut best = Vec4::zeros();
        let mut best_norm = -1.0;
        for k in 0..4 {
            let w = project(Vec4::ith(k, 1.0), basis);
            let norm = w.norm();
            if norm > best_norm + 1e-12 {
                best = w;
                best_norm = norm;
            }
        }
        best / best_norm
    };
    let n1 = pick(&[*e1, *e2]);
    let mut n2 = pick(&[*e1, *e2, n1]);
    if det4(e1, e2, &n1, &n2) < 0.0 {
        n2 = -n2;
    }
    (n1, n2)
}

/// Proper (or, optionally, improper) rigid motion `b ≈ R a + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidMotion {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
    pub rmsd: f64,
}

impl RigidMotion {
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AlignOptions {
    /// Permit `det R = -1` when it lowers the deviation.
    pub allow_reflection: bool,
}

fn centroid(cloud: &[Vec3]) -> Vec3 {
    cloud.iter().fold(Vec3::zeros(), |acc, p| acc + p) / cloud.len() as f64
}

/// Singular values (descending) of the centered cloud, scaled by `1/sqrt(n)`.
pub fn centered_singular_values(cloud: &[Vec3]) -> [f64; 3] {
    let c = centroid(cloud);
    let scale = 1.0 / (cloud.len() as f64).sqrt();
    let data = DMatrix::from_fn(cloud.len(), 3, |i, j| (cloud[i][j] - c[j]) * scale);
    let mut sv: Vec<f64> = data.singular_values().iter().copied().collect();
    sv.resize(3, 0.0);
    sv.sort_by(|a, b| b.total_cmp(a));
    [sv[0], sv[1], sv[2]]
}

/// Orthogonal-Procrustes (Kabsch) alignment of `cloud_a` onto `cloud_b`.
pub fn rigid_align(cloud_a: &[Vec3], cloud_b: &[Vec3]) -> Result<RigidMotion, LinalgError> {
    rigid_align_with(cloud_a, cloud_b, AlignOptions::default())
}

pub fn rigid_align_with(cloud_a: &[Vec3], cloud_b: &[Vec3], options: AlignOptions) -> Result<RigidMotion, LinalgError> {
    if cloud_a.len() != cloud_b.len() {
        return Err(LinalgError::AlignmentIllPosed("clouds differ in size"));
    }
    if cloud_a.len() < 3 {
        return Err(LinalgError::AlignmentIllPosed("fewer than three points"));
    }
    for cloud in [cloud_a, cloud_b] {
        let sv = centered_singular_values(cloud);
        if !(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0] {
            return Err(LinalgError::AlignmentIllPosed("cloud is collinear"));
        }
    }
    let ca = centroid(cloud_a);
    let cb = centroid(cloud_b);
    let mut cov = Matrix3::zeros();
    for (a, b) in cloud_a.iter().zip(cloud_b) {
        cov += (b - cb) * (a - ca).transpose();
    }
    let svd = cov.svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let d = (u * v_t).determinant();
    let correction = if d < 0.0 && !options.allow_reflection { -1.0 } else { 1.0 };
    let rotation = u * Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, correction)) * v_t;
    let translation = cb - rotation * ca;
    let sum_sq: f64 = cloud_a.iter().zip(cloud_b).map(|(a, b)| (rotation * a + translation - b).norm_squared()).sum();
    Ok(RigidMotion { rotation, translation, rmsd: (sum_sq / cloud_a.len() as f64).sqrt() })
}
