//! Landmark forms of the Lie-algebra operators.
//!
//! Landmarks `q = (q_a)` are acted on by evaluation, `u q = (u(q_a))`, and
//! tangent vectors at `q` by the tangent lift `u ω = (∇u(q_a) ω_a)`.

use crate::algebra::kernel::{PlaneField, PointMomenta};
use crate::linear::{dot2, matvec, matvec_t, Point};

pub fn act(u: &PlaneField, q: &[Point]) -> Vec<Point> {
    q.iter().map(|x| u.value(*x)).collect()
}

pub fn act_tangent(u: &PlaneField, q: &[Point], omega: &[Point]) -> Vec<Point> {
    q.iter()
        .zip(omega)
        .map(|(x, w)| matvec(&u.jacobian(*x), *w))
        .collect()
}

/// `(u ⋆ σ)_a = ∇u(q_a)ᵀ σ_a`.
pub fn star(u: &PlaneField, q: &[Point], sigma: &[Point]) -> Vec<Point> {
    q.iter()
        .zip(sigma)
        .map(|(x, s)| matvec_t(&u.jacobian(*x), *s))
        .collect()
}

/// `p ⋄ q = -Σ_a p_a δ_{q_a}`.
pub fn diamond(p: &[Point], q: &[Point]) -> PointMomenta {
    PointMomenta::new(q.to_vec(), p.iter().map(|v| [-v[0], -v[1]]).collect())
}

/// `⟨m, ad_u v⟩` for a point cloud, with `ad_u v = (∇u) v - (∇v) u`.
pub fn pair_ad(m: &PointMomenta, u: &PlaneField, v: &PlaneField) -> f64 {
    m.positions
        .iter()
        .zip(&m.weights)
        .map(|(x, p)| {
            let (uu, vv) = (u.value(*x), v.value(*x));
            let a = matvec(&u.jacobian(*x), vv);
            let b = matvec(&v.jacobian(*x), uu);
            dot2(*p, [a[0] - b[0], a[1] - b[1]])
        })
        .sum()
}

pub fn pair_vectors(a: &[Point], b: &[Point]) -> f64 {
    a.iter().zip(b).map(|(x, y)| dot2(*x, *y)).sum()
}
