//! One-dimensional quadrature rules.

#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[n - 1 - i] = z;
        x[i] = -z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Chebyshev rule of the second kind: exact for
/// `∫_{-1}^{1} sqrt(1-t²) p(t) dt` with `deg p ≤ 2n-1`. Nodes ascending.
pub fn gauss_chebyshev2(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in (1..=n).rev() {
        let th = i as f64 * PI / (n as f64 + 1.0);
        let s = th.sin();
        x.push(if 2 * i == n + 1 { 0.0 } else { th.cos() });
        w.push(PI / (n as f64 + 1.0) * s * s);
    }
    (x, w)
}

/// Volume of the unit sphere Sᵈ.
pub fn sphere_volume(d: usize) -> f64 {
    match d {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 1.0) * sphere_volume(d - 2),
    }
}
