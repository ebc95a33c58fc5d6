//! Equators Σ_v, their orthonormal frames, quadrature nodes, and
//! band-limited functions on them.
//!
//! Frames are built by Gram–Schmidt against the coordinate axes, always
//! taking the axis with the largest remaining component. They are **not**
//! continuous in `v` (no continuous choice exists globally). Nothing in the
//! crate depends on continuity: every quantity that couples different
//! equators is formed from fields on Sⁿ or from frame-independent integrals.

#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::harmonics::{basis_len, HarmonicBasis};
use super::quadrature::gauss_legendre;
use crate::error::{Error, Result};
use crate::jet::{Jet1, Jet2, Lift};
use crate::vec4::{self, dot, normalize, reject, V4};

/// Orthonormal basis of `v^⊥ ⊂ ℝⁿ⁺¹`.
pub fn equator_frame(n: usize, v: &V4) -> Vec<V4> {
    let mut frame: Vec<V4> = Vec::with_capacity(n);
    let mut used = [false; 4];
    for _ in 0..n {
        let mut best = (0usize, -1.0f64, vec4::ZERO);
        for (i, u) in used.iter().enumerate().take(n + 1) {
            if *u {
                continue;
            }
            let mut r = reject(&vec4::basis(i), v);
            for f in &frame {
                r = reject(&r, f);
            }
            let len = vec4::norm(&r);
            if len > best.1 + 1e-12 {
                best = (i, len, r);
            }
        }
        used[best.0] = true;
        frame.push(normalize(&best.2));
    }
    frame
}

/// Quadrature nodes on the model sphere S^{n-1} ⊂ ℝⁿ together with
/// basis tables of the equator harmonics, shared by every chart.
#[derive(Clone, Debug)]
pub struct ChartTemplate {
    pub n: usize,
    pub lmax: usize,
    pub q: usize,
    pub coords: Vec<V4>,
    pub weights: Vec<f64>,
    /// Orthonormal tangent basis (model coordinates) at each node.
    pub tangents: Vec<[V4; 2]>,
    pub basis: HarmonicBasis,
    m: usize,
    val: Vec<f64>,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

impl ChartTemplate {
    /// `q` is the number of circle nodes (n=2) or longitudes (n=3, with
    /// `q/2` Gauss–Legendre latitudes).
    pub fn new(n: usize, lmax: usize, q: usize) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::UnsupportedDimension(n));
        }
        if q < 4 * lmax + 2 {
            return Err(Error::ChartTooCoarse { q, l: lmax });
        }
        let (coords, weights) = if n == 2 {
            let dt = 2.0 * PI / q as f64;
            let c: Vec<V4> = (0..q)
                .map(|k| {
                    let (s, c) = (k as f64 * dt).sin_cos();
                    [c, s, 0.0, 0.0]
                })
                .collect();
            (c, vec![dt; q])
        } else {
            let (z, wz) = gauss_legendre(q / 2);
            let dphi = 2.0 * PI / q as f64;
            let mut c = Vec::new();
            let mut w = Vec::new();
            for (zi, wi) in z.iter().zip(&wz) {
                let s = (1.0 - zi * zi).sqrt();
                for k in 0..q {
                    let (sn, cs) = (k as f64 * dphi).sin_cos();
                    c.push([s * cs, s * sn, *zi, 0.0]);
                    w.push(wi * dphi);
                }
            }
            (c, w)
        };
        let d = n - 1;
        let tangents: Vec<[V4; 2]> = coords
            .iter()
            .map(|y| {
                if n == 2 {
                    [[-y[1], y[0], 0.0, 0.0], vec4::ZERO]
                } else {
                    let axis = if y[2].abs() < 0.9 { vec4::basis(2) } else { vec4::basis(0) };
                    let t1 = normalize(&reject(&axis, y));
                    let t2 = vec4::cross3(y, &t1);
                    [t1, t2]
                }
            })
            .collect();
        let basis = HarmonicBasis::new(d, lmax);
        let m = basis.len();
        let nn = coords.len();
        let mut val = vec![0.0; nn * m];
        let mut grad = vec![0.0; nn * m * d];
        let mut hess = vec![0.0; nn * m * d * d];
        for (k, y) in coords.iter().enumerate() {
            let jets = basis.eval::<Jet2>(&Jet2::lift(y));
            for (i, jt) in jets.iter().enumerate() {
                val[k * m + i] = jt.v;
                let radial = dot(&jt.g, y);
                for a in 0..d {
                    let ta = &tangents[k][a];
                    grad[(k * m + i) * d + a] = dot(&jt.g, ta);
                    for b in 0..d {
                        let tb = &tangents[k][b];
                        let mut h = vec4::quad_form(&jt.h, ta, tb);
                        if a == b {
                            h -= radial;
                        }
                        hess[((k * m + i) * d + a) * d + b] = h;
                    }
                }
            }
        }
        Ok(ChartTemplate {
            n,
            lmax,
            q,
            coords,
            weights,
            tangents,
            basis,
            m,
            val,
            grad,
            hess,
        })
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn mode_count(&self) -> usize {
        self.m
    }

    /// Tangent dimension of the equator.
    pub fn d(&self) -> usize {
        self.n - 1
    }

    #[inline]
    pub fn basis_value(&self, node: usize, mode: usize) -> f64 {
        self.val[node * self.m + mode]
    }

    #[inline]
    pub fn basis_grad(&self, node: usize, mode: usize, a: usize) -> f64 {
        self.grad[(node * self.m + mode) * self.d() + a]
    }

    #[inline]
    pub fn basis_hess(&self, node: usize, mode: usize, a: usize, b: usize) -> f64 {
        let d = self.d();
        self.hess[((node * self.m + mode) * d + a) * d + b]
    }

    /// Modes of degree one.
    pub fn linear_modes(&self) -> core::ops::Range<usize> {
        1..basis_len(self.n - 1, 1)
    }

    /// Node values of a mode vector.
    pub fn synthesize(&self, modes: &[f64]) -> Vec<f64> {
        (0..self.node_count())
            .map(|k| {
                let row = &self.val[k * self.m..(k + 1) * self.m];
                row.iter().zip(modes).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Quadrature projection of node values onto the modes.
    pub fn analyze(&self, values: &[f64]) -> Vec<f64> {
        let mut modes = vec![0.0; self.m];
        for (k, (f, w)) in values.iter().zip(&self.weights).enumerate() {
            let row = &self.val[k * self.m..(k + 1) * self.m];
            for (c, b) in modes.iter_mut().zip(row) {
                *c += w * f * b;
            }
        }
        modes
    }

    /// Value, tangent-gradient coefficients and intrinsic Hessian at a node.
    pub fn node_jet(&self, modes: &[f64], node: usize) -> NodeJet {
        let d = self.d();
        let mut j = NodeJet::default();
        for (i, c) in modes.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            j.value += c * self.basis_value(node, i);
            for a in 0..d {
                j.grad[a] += c * self.basis_grad(node, i, a);
                for b in 0..d {
                    j.hess[a][b] += c * self.basis_hess(node, i, a, b);
                }
            }
        }
        j
    }
}

/// Intrinsic data of an equator function at one node, in the node's
/// tangent basis.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NodeJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

/// An equator Σ_v with its frame.
#[derive(Clone, Debug, PartialEq)]
pub struct EquatorChart {
    pub v: V4,
    pub frame: Vec<V4>,
}

impl EquatorChart {
    pub fn new(n: usize, v: &V4) -> Self {
        EquatorChart {
            v: *v,
            frame: equator_frame(n, v),
        }
    }

    /// Ambient point of model coordinates `y`.
    pub fn embed(&self, y: &V4) -> V4 {
        let mut x = vec4::ZERO;
        for (i, e) in self.frame.iter().enumerate() {
            x = vec4::axpy(&x, y[i], e);
        }
        x
    }

    /// Model coordinates of an ambient vector.
    pub fn coords(&self, x: &V4) -> V4 {
        let mut y = vec4::ZERO;
        for (i, e) in self.frame.iter().enumerate() {
            y[i] = dot(x, e);
        }
        y
    }

    pub fn node(&self, t: &ChartTemplate, k: usize) -> V4 {
        self.embed(&t.coords[k])
    }

    pub fn tangent(&self, t: &ChartTemplate, k: usize, a: usize) -> V4 {
        self.embed(&t.tangents[k][a])
    }

    /// Quadrature of node values over Σ_v.
    pub fn integrate(&self, t: &ChartTemplate, values: &[f64]) -> f64 {
        values.iter().zip(&t.weights).map(|(a, b)| a * b).sum()
    }
}

/// Band-limited function on an equator, stored as modes in the frame of
/// the owning chart.
#[derive(Clone, Debug, PartialEq)]
pub struct EquatorFunction {
    pub modes: Vec<f64>,
}

impl EquatorFunction {
    pub fn zero(t: &ChartTemplate) -> Self {
        EquatorFunction {
            modes: vec![0.0; t.mode_count()],
        }
    }

    /// Value and ambient tangential gradient at an arbitrary `x ∈ Σ_v`.
    pub fn jet(&self, basis: &HarmonicBasis, chart: &EquatorChart, x: &V4) -> (f64, V4) {
        let y = chart.coords(x);
        let jets = basis.eval::<Jet1>(&Jet1::lift(&y));
        let mut v = 0.0;
        let mut gy = vec4::ZERO;
        for (j, c) in jets.iter().zip(&self.modes) {
            v += c * j.v;
            gy = vec4::axpy(&gy, *c, &j.g);
        }
        let g = reject(&chart.embed(&gy), x);
        (v, g)
    }

    pub fn value(&self, basis: &HarmonicBasis, chart: &EquatorChart, x: &V4) -> f64 {
        let y = chart.coords(x);
        let vals = basis.eval::<f64>(&y);
        vals.iter().zip(&self.modes).map(|(a, b)| a * b).sum()
    }

    /// Largest modulus of a degree-one mode.
    pub fn linear_part(&self, t: &ChartTemplate) -> f64 {
        t.linear_modes()
            .map(|i| self.modes[i].abs())
            .fold(0.0, f64::max)
    }
}
