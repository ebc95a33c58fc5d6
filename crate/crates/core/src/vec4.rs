//! Small fixed-size vector helpers. Points of Sⁿ (n ≤ 3) live in ℝ⁴ with
//! unused trailing coordinates set to zero.

#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

pub type V4 = [f64; 4];

pub const ZERO: V4 = [0.0; 4];

#[inline]
pub fn dot(a: &V4, b: &V4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[inline]
pub fn norm(a: &V4) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn add(a: &V4, b: &V4) -> V4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

#[inline]
pub fn sub(a: &V4, b: &V4) -> V4 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

#[inline]
pub fn scale(a: &V4, s: f64) -> V4 {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

/// `a·s + b·t`
#[inline]
pub fn lin2(a: &V4, s: f64, b: &V4, t: f64) -> V4 {
    [
        a[0] * s + b[0] * t,
        a[1] * s + b[1] * t,
        a[2] * s + b[2] * t,
        a[3] * s + b[3] * t,
    ]
}

/// `a + s·b`
#[inline]
pub fn axpy(a: &V4, s: f64, b: &V4) -> V4 {
    lin2(a, 1.0, b, s)
}

#[inline]
pub fn neg(a: &V4) -> V4 {
    [-a[0], -a[1], -a[2], -a[3]]
}

pub fn normalize(a: &V4) -> V4 {
    let r = norm(a);
    scale(a, 1.0 / r)
}

/// Removes the component of `a` along the unit vector `u`.
#[inline]
pub fn reject(a: &V4, u: &V4) -> V4 {
    axpy(a, -dot(a, u), u)
}

pub fn cross3(a: &V4, b: &V4) -> V4 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
        0.0,
    ]
}

pub fn basis(i: usize) -> V4 {
    let mut e = ZERO;
    e[i] = 1.0;
    e
}

pub fn max_abs_diff(a: &V4, b: &V4) -> f64 {
    let mut m = 0.0f64;
    for i in 0..4 {
        m = m.max((a[i] - b[i]).abs());
    }
    m
}

/// Length of the component of `a` orthogonal to the unit vector `b`.
/// For unit `a` this is the sine of the angle between them, computed
/// without the cancellation of `sqrt(1 - <a,b>^2)`.
pub fn sin_angle(a: &V4, b: &V4) -> f64 {
    norm(&reject(a, b))
}

/// Symmetric 4×4 matrices in row-major order.
pub type M4 = [[f64; 4]; 4];

pub fn mat_vec(m: &M4, v: &V4) -> V4 {
    let mut r = ZERO;
    for i in 0..4 {
        r[i] = dot(&m[i], v);
    }
    r
}

pub fn quad_form(m: &M4, a: &V4, b: &V4) -> f64 {
    dot(a, &mat_vec(m, b))
}
