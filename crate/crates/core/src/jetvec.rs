//! Fixed-size vectors of jets sharing one base point.

use nalgebra::SVector;

use crate::jet::{Jet, JetError};

pub type JetVec<const D: usize, const N: usize> = [Jet<D>; N];

pub fn dot<const D: usize, const N: usize>(a: &JetVec<D, N>, b: &JetVec<D, N>) -> Jet<D> {
    let mut out = a[0] * b[0];
    for k in 1..N {
        out += a[k] * b[k];
    }
    out
}

pub fn scale<const D: usize, const N: usize>(a: &JetVec<D, N>, k: &Jet<D>) -> JetVec<D, N> {
    std::array::from_fn(|i| a[i] * *k)
}

pub fn add<const D: usize, const N: usize>(a: &JetVec<D, N>, b: &JetVec<D, N>) -> JetVec<D, N> {
    std::array::from_fn(|i| a[i] + b[i])
}

pub fn sub<const D: usize, const N: usize>(a: &JetVec<D, N>, b: &JetVec<D, N>) -> JetVec<D, N> {
    std::array::from_fn(|i| a[i] - b[i])
}

/// `a − ⟨a, u⟩ u`.
pub fn reject<const D: usize, const N: usize>(a: &JetVec<D, N>, u: &JetVec<D, N>) -> JetVec<D, N> {
    sub(a, &scale(u, &dot(a, u)))
}

pub fn norm<const D: usize, const N: usize>(a: &JetVec<D, N>) -> Result<Jet<D>, JetError> {
    dot(a, a).sqrt()
}

pub fn normalize<const D: usize, const N: usize>(a: &JetVec<D, N>) -> Result<JetVec<D, N>, JetError> {
    let inv = norm(a)?.recip()?;
    Ok(scale(a, &inv))
}

pub fn value<const D: usize, const N: usize>(a: &JetVec<D, N>) -> SVector<f64, N> {
    SVector::from_fn(|i, _| a[i].value())
}

/// Derivative of the vector along `a_s ∂s + a_t ∂t`.
pub fn directional<const D: usize, const N: usize>(a: &JetVec<D, N>, a_s: f64, a_t: f64) -> SVector<f64, N> {
    SVector::from_fn(|i, _| a[i].directional(a_s, a_t))
}

pub fn truncate<const D: usize, const E: usize, const N: usize>(a: &JetVec<D, N>) -> JetVec<E, N> {
    std::array::from_fn(|i| a[i].truncate::<E>())
}

pub fn diff_s<const D: usize, const E: usize, const N: usize>(a: &JetVec<D, N>) -> JetVec<E, N> {
    std::array::from_fn(|i| a[i].diff_s::<E>())
}

pub fn diff_t<const D: usize, const E: usize, const N: usize>(a: &JetVec<D, N>) -> JetVec<E, N> {
    std::array::from_fn(|i| a[i].diff_t::<E>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{BasePoint, Jet2, Var};

    #[test]
    fn normalized_vector_has_unit_jet_norm() {
        let base = BasePoint::new(0.4, -0.2);
        let s = Jet2::variable(Var::S, base);
        let t = Jet2::variable(Var::T, base);
        let v = [s * s + 1.0, s * t, t - 3.0];
        let u = normalize(&v).unwrap();
        let n = dot(&u, &u);
        assert!((n.value() - 1.0).abs() < 1e-15);
        for (i, j) in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
            assert!(n.partial(i, j).unwrap().abs() < 1e-13);
        }
        let r = reject(&v, &u);
        assert!(dot(&r, &u).value().abs() < 1e-14);
    }
}
