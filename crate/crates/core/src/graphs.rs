//! Graphical perturbations of equators.
//!
//! A graph field assigns to each direction `v` a function `Φ_v` on the
//! equator Σ_v, odd in `v`. Its graph is
//! `Σ_v(Φ) = { cos Φ_v(x)·x + sin Φ_v(x)·v : x ∈ Σ_v }`.
//!
//! Two storage forms exist. [`TangentGraphField`] keeps chart modes at the
//! grid representatives only; [`SmoothGraphField`] is a band-limited
//! function of `(x, v)` and can be queried at any direction, which the
//! Gauss-map inverse and kernel quadrature need.

#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;
use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::jet::{Jet1, Lift};
use crate::setup::Setup;
use crate::sphere::harmonics::basis_len;
use crate::sphere::quadrature::sphere_volume;
use crate::sphere::{equator_frame, EquatorChart, HarmonicBasis, HarmonicField};
use crate::vec4::{self, dot, normalize, reject, V4};

/// C¹ size above which graphs are rejected.
pub const GRAPH_SMALLNESS: f64 = 0.3;

/// `cos(u)·x + sin(u)·v`.
pub fn graph_point(v: &V4, x: &V4, u: f64) -> V4 {
    let (s, c) = u.sin_cos();
    vec4::lin2(x, c, v, s)
}

/// Image of the tangent vector `a ∈ T_xΣ_v` under the differential of the
/// graph map; `grad` is the tangential gradient of `Φ_v` at `x`.
pub fn graph_tangent(v: &V4, x: &V4, u: f64, grad: &V4, a: &V4) -> V4 {
    let (s, c) = u.sin_cos();
    let up = vec4::lin2(x, -s, v, c);
    vec4::lin2(a, c, &up, dot(grad, a))
}

/// Unit normal of the graph at `graph_point(v, x, u)`, on the side of `v`.
pub fn graph_normal(v: &V4, x: &V4, u: f64, grad: &V4) -> V4 {
    let (s, c) = u.sin_cos();
    let up = vec4::lin2(x, -s, v, c);
    let w = (c * c + dot(grad, grad)).sqrt();
    vec4::scale(&vec4::lin2(&up, c, grad, -1.0), 1.0 / w)
}

/// Area density of the graph map relative to Σ_v.
pub fn graph_jacobian(n: usize, u: f64, grad_sq: f64) -> f64 {
    let c = u.cos();
    c.powi(n as i32 - 2) * (c * c + grad_sq).sqrt()
}

/// `Φ_v` for one fixed direction.
pub trait EquatorGraph {
    fn direction(&self) -> V4;
    /// Value and tangential gradient (ambient vector in `T_xΣ_v`) at `x ∈ Σ_v`.
    fn jet(&self, x: &V4) -> (f64, V4);
    fn value(&self, x: &V4) -> f64 {
        self.jet(x).0
    }
}

/// A graph field that can be restricted to equators.
pub trait GraphSource: Sync {
    fn dim(&self) -> usize;
    fn equator(&self, v: &V4) -> Result<Box<dyn EquatorGraph + '_>>;
    /// Rigorous upper bound for `|Φ|`.
    fn sup_bound(&self) -> f64;
}

/// Graph-coordinate level function `sin(t − Φ_v(x))` where
/// `p = cos(t)·x + sin(t)·v`.
pub fn level_value(eq: &dyn EquatorGraph, p: &V4) -> Result<f64> {
    let v = eq.direction();
    let (t, x) = graph_coordinates(&v, p)?;
    Ok((t - eq.value(&x)).sin())
}

/// `(t, x)` with `p = cos(t)·x + sin(t)·v`, `|t| < π/2`.
pub fn graph_coordinates(v: &V4, p: &V4) -> Result<(f64, V4)> {
    let h = dot(p, v);
    let r = reject(p, v);
    let rn = vec4::norm(&r);
    if rn < 1e-8 {
        return Err(Error::NearPole);
    }
    Ok((h.atan2(rn), vec4::scale(&r, 1.0 / rn)))
}

/// The zero graph field.
#[derive(Clone, Copy, Debug)]
pub struct ZeroGraph {
    pub n: usize,
}

struct ZeroEquator(V4);

impl EquatorGraph for ZeroEquator {
    fn direction(&self) -> V4 {
        self.0
    }
    fn jet(&self, _x: &V4) -> (f64, V4) {
        (0.0, vec4::ZERO)
    }
}

impl GraphSource for ZeroGraph {
    fn dim(&self) -> usize {
        self.n
    }
    fn equator(&self, v: &V4) -> Result<Box<dyn EquatorGraph + '_>> {
        Ok(Box::new(ZeroEquator(*v)))
    }
    fn sup_bound(&self) -> f64 {
        0.0
    }
}

/// Which odd subspace a graph field lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subspace {
    /// Any odd field.
    StarOdd,
    /// Odd, with no degree-one part on any equator.
    ZeroOdd,
}

/// Graph field stored as chart modes at the direction-grid representatives.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentGraphField {
    pub n: usize,
    pub lmax: usize,
    pub subspace: Subspace,
    modes: Vec<Vec<f64>>,
}

impl TangentGraphField {
    pub fn zero(setup: &Setup) -> Self {
        TangentGraphField {
            n: setup.n,
            lmax: setup.lmax,
            subspace: Subspace::ZeroOdd,
            modes: vec![vec![0.0; setup.template.mode_count()]; setup.reps()],
        }
    }

    /// Builds a field from per-representative modes; the subspace is
    /// detected from the degree-one parts.
    pub fn from_modes(setup: &Setup, modes: Vec<Vec<f64>>) -> Result<Self> {
        let m = setup.template.mode_count();
        if modes.len() != setup.reps() || modes.iter().any(|r| r.len() != m) {
            return Err(Error::Mismatch("graph field modes do not match the setup"));
        }
        let mut f = TangentGraphField {
            n: setup.n,
            lmax: setup.lmax,
            subspace: Subspace::StarOdd,
            modes,
        };
        f.subspace = f.detect_subspace(setup);
        Ok(f)
    }

    /// Builds a field from a flat buffer of `reps × modes` values.
    pub fn from_flat(setup: &Setup, flat: &[f64]) -> Result<Self> {
        let m = setup.template.mode_count();
        if flat.len() != m * setup.reps() {
            return Err(Error::Mismatch("flat graph buffer has the wrong length"));
        }
        Self::from_modes(setup, flat.chunks(m).map(|c| c.to_vec()).collect())
    }

    fn detect_subspace(&self, setup: &Setup) -> Subspace {
        let lin = setup.template.linear_modes();
        let zero = self
            .modes
            .iter()
            .all(|r| r[lin.clone()].iter().all(|c| c.abs() <= 1e-12));
        if zero {
            Subspace::ZeroOdd
        } else {
            Subspace::StarOdd
        }
    }

    pub fn modes(&self, rep: usize) -> &[f64] {
        &self.modes[rep]
    }

    pub fn all_modes(&self) -> &[Vec<f64>] {
        &self.modes
    }

    pub fn flat(&self) -> Vec<f64> {
        self.modes.concat()
    }

    pub fn reps(&self) -> usize {
        self.modes.len()
    }

    /// Removes degree-one modes everywhere.
    pub fn project_zero_odd(&self, setup: &Setup) -> Self {
        let lin = setup.template.linear_modes();
        let mut out = self.clone();
        for r in &mut out.modes {
            for c in &mut r[lin.clone()] {
                *c = 0.0;
            }
        }
        out.subspace = Subspace::ZeroOdd;
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for r in &mut out.modes {
            for c in r.iter_mut() {
                *c *= s;
            }
        }
        out
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        if self.modes.len() != other.modes.len() || self.lmax != other.lmax {
            return Err(Error::Mismatch("graph fields live on different setups"));
        }
        let mut out = self.clone();
        for (a, b) in out.modes.iter_mut().zip(&other.modes) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
        out.subspace = if self.subspace == Subspace::ZeroOdd && other.subspace == Subspace::ZeroOdd {
            Subspace::ZeroOdd
        } else {
            Subspace::StarOdd
        };
        Ok(out)
    }

    pub fn max_abs_mode(&self) -> f64 {
        self.modes
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Largest degree-one mode.
    pub fn linear_part(&self, setup: &Setup) -> f64 {
        let lin = setup.template.linear_modes();
        self.modes
            .iter()
            .flat_map(|r| r[lin.clone()].iter())
            .fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Largest value or gradient component over all chart nodes.
    pub fn c1_norm(&self, setup: &Setup) -> f64 {
        let t = &setup.template;
        let mut m = 0.0f64;
        for r in &self.modes {
            for k in 0..t.node_count() {
                let j = t.node_jet(r, k);
                let g = (j.grad[0] * j.grad[0] + j.grad[1] * j.grad[1]).sqrt();
                m = m.max(j.value.abs()).max(g);
            }
        }
        m
    }

    pub fn check_small(&self, setup: &Setup) -> Result<()> {
        let c1 = self.c1_norm(setup);
        if c1 > GRAPH_SMALLNESS {
            Err(Error::GraphTooLarge(c1))
        } else {
            Ok(())
        }
    }

    /// Graph source backed by this field and `setup`.
    pub fn on<'a>(&'a self, setup: &'a Setup) -> GridGraph<'a> {
        GridGraph { setup, field: self }
    }
}

/// Bound `|f| ≤ ‖c‖·sqrt(M/ω)` from the addition theorem.
fn modes_sup_bound(dim: usize, modes: &[f64]) -> f64 {
    let l2: f64 = modes.iter().map(|c| c * c).sum::<f64>().sqrt();
    l2 * (modes.len() as f64 / sphere_volume(dim)).sqrt()
}

/// [`TangentGraphField`] paired with its setup; answers only at grid
/// directions.
pub struct GridGraph<'a> {
    pub setup: &'a Setup,
    pub field: &'a TangentGraphField,
}

struct ModesEquator<'a> {
    v: V4,
    sign: f64,
    chart: &'a EquatorChart,
    basis: &'a HarmonicBasis,
    modes: &'a [f64],
}

impl EquatorGraph for ModesEquator<'_> {
    fn direction(&self) -> V4 {
        self.v
    }
    fn jet(&self, x: &V4) -> (f64, V4) {
        let y = self.chart.coords(x);
        let jets = self.basis.eval::<Jet1>(&Jet1::lift(&y));
        let mut val = 0.0;
        let mut gy = vec4::ZERO;
        for (j, c) in jets.iter().zip(self.modes) {
            val += c * j.v;
            gy = vec4::axpy(&gy, *c, &j.g);
        }
        let g = reject(&self.chart.embed(&gy), x);
        (self.sign * val, vec4::scale(&g, self.sign))
    }
}

impl GraphSource for GridGraph<'_> {
    fn dim(&self) -> usize {
        self.setup.n
    }
    fn equator(&self, v: &V4) -> Result<Box<dyn EquatorGraph + '_>> {
        let (i, sign) = self.setup.grid.locate(v).ok_or(Error::NotOnGrid)?;
        Ok(Box::new(ModesEquator {
            v: *v,
            sign,
            chart: &self.setup.charts[i],
            basis: &self.setup.template.basis,
            modes: &self.field.modes[i],
        }))
    }
    fn sup_bound(&self) -> f64 {
        let d = self.setup.n - 1;
        self.field
            .modes
            .iter()
            .map(|r| modes_sup_bound(d, r))
            .fold(0.0, f64::max)
    }
}

/// Graph field `Φ(x, v) = Σ C_{km} Y_k(x) Y_m(v)` with odd-degree `Y_m`.
#[derive(Clone, Debug)]
pub struct SmoothGraphField {
    pub n: usize,
    lx: usize,
    lv: usize,
    bx: HarmonicBasis,
    bv: HarmonicBasis,
    // row k (x harmonic), column m (v harmonic)
    coef: Vec<f64>,
}

impl SmoothGraphField {
    pub fn zero(n: usize, lx: usize, lv: usize) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::UnsupportedDimension(n));
        }
        let bx = HarmonicBasis::new(n, lx);
        let bv = HarmonicBasis::new(n, lv);
        let coef = vec![0.0; bx.len() * bv.len()];
        Ok(SmoothGraphField {
            n,
            lx,
            lv,
            bx,
            bv,
            coef,
        })
    }

    /// `Σ_j F_j(x)·G_j(v)`; every `G_j` must be odd.
    pub fn from_terms(n: usize, terms: &[(HarmonicField, HarmonicField)]) -> Result<Self> {
        let lx = terms.iter().map(|t| t.0.lmax()).max().unwrap_or(0);
        let lv = terms.iter().map(|t| t.1.lmax()).max().unwrap_or(1);
        let mut out = Self::zero(n, lx, lv)?;
        let nv = out.bv.len();
        for (f, g) in terms {
            if f.n() != n || g.n() != n {
                return Err(Error::Mismatch("graph terms live on different spheres"));
            }
            let gd = g.basis();
            for (m, gm) in g.coeffs().iter().enumerate() {
                if *gm != 0.0 && gd.degrees()[m] % 2 == 0 {
                    return Err(Error::InvalidParameter("direction factor of a graph field must be odd"));
                }
            }
            for (k, fk) in f.coeffs().iter().enumerate() {
                for (m, gm) in g.coeffs().iter().enumerate() {
                    out.coef[k * nv + m] += fk * gm;
                }
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coef {
            *c *= s;
        }
        out
    }

    /// True if every `x` factor has even degree, so no equator restriction
    /// has a degree-one part.
    pub fn is_zero_odd(&self) -> bool {
        let nv = self.bv.len();
        self.bx
            .degrees()
            .iter()
            .enumerate()
            .all(|(k, d)| d % 2 == 0 || self.coef[k * nv..(k + 1) * nv].iter().all(|c| *c == 0.0))
    }

    /// Coefficients on Sⁿ of `Φ(·, v)`.
    fn x_coeffs(&self, v: &V4) -> Vec<f64> {
        let yv = self.bv.eval::<f64>(v);
        let nv = yv.len();
        (0..self.bx.len())
            .map(|k| {
                self.coef[k * nv..(k + 1) * nv]
                    .iter()
                    .zip(&yv)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn value(&self, x: &V4, v: &V4) -> f64 {
        let c = self.x_coeffs(v);
        let yx = self.bx.eval::<f64>(x);
        c.iter().zip(&yx).map(|(a, b)| a * b).sum()
    }

    /// Value and ambient gradients in `x` and in `v` of the polynomial
    /// extension.
    pub fn jet_xv(&self, x: &V4, v: &V4) -> (f64, V4, V4) {
        let jx = self.bx.eval::<Jet1>(&Jet1::lift(x));
        let jv = self.bv.eval::<Jet1>(&Jet1::lift(v));
        let nv = jv.len();
        let mut val = 0.0;
        let mut gx = vec4::ZERO;
        let mut gv = vec4::ZERO;
        for (k, a) in jx.iter().enumerate() {
            for (m, b) in jv.iter().enumerate() {
                let c = self.coef[k * nv + m];
                if c == 0.0 {
                    continue;
                }
                val += c * a.v * b.v;
                gx = vec4::axpy(&gx, c * b.v, &a.g);
                gv = vec4::axpy(&gv, c * a.v, &b.g);
            }
        }
        (val, gx, gv)
    }

    /// Restriction to the chart nodes of `setup`.
    pub fn restrict(&self, setup: &Setup) -> Result<TangentGraphField> {
        let t = &setup.template;
        let m = t.mode_count();
        let job = |i: usize, out: &mut [f64]| {
            let chart = &setup.charts[i];
            let c = self.x_coeffs(&chart.v);
            let vals: Vec<f64> = (0..t.node_count())
                .map(|k| {
                    let yx = self.bx.eval::<f64>(&chart.node(t, k));
                    c.iter().zip(&yx).map(|(a, b)| a * b).sum()
                })
                .collect();
            out.copy_from_slice(&t.analyze(&vals));
        };
        let flat = setup.per_rep(m, &job);
        let mut f = TangentGraphField::from_flat(setup, &flat)?;
        if self.is_zero_odd() {
            f = f.project_zero_odd(setup);
        }
        Ok(f)
    }

    pub fn lmax_x(&self) -> usize {
        self.lx
    }

    pub fn lmax_v(&self) -> usize {
        self.lv
    }
}

struct SmoothEquator<'a> {
    v: V4,
    basis: &'a HarmonicBasis,
    coeffs: Vec<f64>,
}

impl EquatorGraph for SmoothEquator<'_> {
    fn direction(&self) -> V4 {
        self.v
    }
    fn jet(&self, x: &V4) -> (f64, V4) {
        let jx = self.basis.eval::<Jet1>(&Jet1::lift(x));
        let mut val = 0.0;
        let mut g = vec4::ZERO;
        for (a, c) in jx.iter().zip(&self.coeffs) {
            val += c * a.v;
            g = vec4::axpy(&g, *c, &a.g);
        }
        (val, reject(&reject(&g, x), &self.v))
    }
    fn value(&self, x: &V4) -> f64 {
        let y = self.basis.eval::<f64>(x);
        y.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }
}

impl GraphSource for SmoothGraphField {
    fn dim(&self) -> usize {
        self.n
    }
    fn equator(&self, v: &V4) -> Result<Box<dyn EquatorGraph + '_>> {
        Ok(Box::new(SmoothEquator {
            v: *v,
            basis: &self.bx,
            coeffs: self.x_coeffs(v),
        }))
    }
    fn sup_bound(&self) -> f64 {
        let l2: f64 = self.coef.iter().map(|c| c * c).sum::<f64>().sqrt();
        let kx = (basis_len(self.n, self.lx) as f64 / sphere_volume(self.n)).sqrt();
        let kv = (basis_len(self.n, self.lv) as f64 / sphere_volume(self.n)).sqrt();
        l2 * kx * kv
    }
}

/// Orthonormal basis of the complement of `span(vecs)` in ℝⁿ⁺¹, built by
/// Gram–Schmidt over the coordinate axes (largest residual first).
pub fn orthogonal_complement(n: usize, vecs: &[V4]) -> Vec<V4> {
    let mut span: Vec<V4> = Vec::new();
    for v in vecs {
        let mut r = *v;
        for s in &span {
            r = reject(&r, s);
        }
        let rn = vec4::norm(&r);
        if rn > 1e-12 {
            span.push(vec4::scale(&r, 1.0 / rn));
        }
    }
    let want = n + 1 - span.len();
    let mut out = Vec::with_capacity(want);
    let mut used = [false; 4];
    for _ in 0..want {
        let mut best = (0usize, -1.0f64, vec4::ZERO);
        for i in 0..=n {
            if used[i] {
                continue;
            }
            let mut r = vec4::basis(i);
            for s in span.iter().chain(out.iter()) {
                r = reject(&r, s);
            }
            let len = vec4::norm(&r);
            if len > best.1 + 1e-12 {
                best = (i, len, r);
            }
        }
        used[best.0] = true;
        out.push(normalize(&best.2));
    }
    out
}

/// Graph point and unit normal at `(x, v)`.
pub fn gauss_map(src: &dyn GraphSource, x: &V4, v: &V4) -> Result<(V4, V4)> {
    let eq = src.equator(v)?;
    let (u, g) = eq.jet(x);
    Ok((graph_point(v, x, u), graph_normal(v, x, u, &g)))
}

fn gauss_defect(src: &dyn GraphSource, x: &V4, v: &V4, q: &V4, w: &V4) -> Result<[f64; 8]> {
    let (y, nrm) = gauss_map(src, x, v)?;
    let mut r = [0.0; 8];
    for i in 0..4 {
        r[i] = y[i] - q[i];
        r[4 + i] = nrm[i] - w[i];
    }
    Ok(r)
}

fn retract(x: &V4, v: &V4, dx: &V4, dv: &V4) -> (V4, V4) {
    let x1 = normalize(&vec4::add(x, dx));
    let v1 = normalize(&reject(&vec4::add(v, dv), &x1));
    (x1, v1)
}

/// Tangent directions of the unit tangent bundle at `(x, v)`.
fn bundle_directions(n: usize, x: &V4, v: &V4) -> Vec<(V4, V4)> {
    let e = orthogonal_complement(n, &[*x, *v]);
    let mut dirs = Vec::with_capacity(2 * n - 1);
    for a in &e {
        dirs.push((*a, vec4::ZERO));
    }
    for a in &e {
        dirs.push((vec4::ZERO, *a));
    }
    dirs.push((*v, vec4::neg(x)));
    dirs
}

/// Solves `gauss_map(x, v) = (q, w)` by Gauss–Newton from `start`
/// (default `(q, w)`).
pub fn gauss_map_inverse(
    src: &dyn GraphSource,
    q: &V4,
    w: &V4,
    start: Option<(V4, V4)>,
) -> Result<(V4, V4)> {
    let n = src.dim();
    if dot(q, w).abs() > 1e-10 {
        return Err(Error::InvalidParameter("gauss map target must be a unit tangent vector"));
    }
    let (mut x, mut v) = start.unwrap_or((*q, *w));
    let h = 1e-6;
    let mut r = gauss_defect(src, &x, &v, q, w)?;
    let mut res = r.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    for _ in 0..50 {
        if res < 1e-13 {
            return Ok((x, v));
        }
        let dirs = bundle_directions(n, &x, &v);
        let k = dirs.len();
        let mut jac = DMatrix::<f64>::zeros(8, k);
        for (j, (dx, dv)) in dirs.iter().enumerate() {
            let (xp, vp) = retract(&x, &v, &vec4::scale(dx, h), &vec4::scale(dv, h));
            let (xm, vm) = retract(&x, &v, &vec4::scale(dx, -h), &vec4::scale(dv, -h));
            let rp = gauss_defect(src, &xp, &vp, q, w)?;
            let rm = gauss_defect(src, &xm, &vm, q, w)?;
            for i in 0..8 {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rv = DVector::from_column_slice(&r);
        let jt = jac.transpose();
        let step = (&jt * &jac)
            .lu()
            .solve(&(-(&jt * rv)))
            .ok_or(Error::Singular(0.0))?;
        let mut dx = vec4::ZERO;
        let mut dv = vec4::ZERO;
        for (j, (a, b)) in dirs.iter().enumerate() {
            dx = vec4::axpy(&dx, step[j], a);
            dv = vec4::axpy(&dv, step[j], b);
        }
        let (x1, v1) = retract(&x, &v, &dx, &dv);
        x = x1;
        v = v1;
        r = gauss_defect(src, &x, &v, q, w)?;
        let new_res = r.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if !new_res.is_finite() || new_res > 1e3 * res.max(1e-12) {
            return Err(Error::NoConvergence { residual: new_res });
        }
        res = new_res;
    }
    if res < 1e-12 {
        Ok((x, v))
    } else {
        Err(Error::NoConvergence { residual: res })
    }
}

/// Gauss-inverse data over `(q, w)`: the preimage `(x, Ξ_q(w))`, the unit
/// normal to `w ↦ Ξ_q(w)` with positive `q` component, and the Jacobian of
/// that map restricted to Σ_q.
#[derive(Clone, Copy, Debug)]
pub struct DualFrame {
    pub x: V4,
    pub v: V4,
    pub normal: V4,
    pub jacobian: f64,
}

/// Unit normal along `w ↦ Ξ_q(w)` (the direction component of the Gauss
/// inverse over Σ_q), chosen with positive `q` component.
pub fn dual_normal(src: &dyn GraphSource, q: &V4, w: &V4) -> Result<V4> {
    Ok(dual_frame(src, q, w)?.normal)
}

/// [`DualFrame`] with tangents of Ξ_q from fourth-order central differences.
pub fn dual_frame(src: &dyn GraphSource, q: &V4, w: &V4) -> Result<DualFrame> {
    let n = src.dim();
    let (x0, xi) = gauss_map_inverse(src, q, w, None)?;
    let us = orthogonal_complement(n, &[*q, *w]);
    let h = 1e-3;
    let mut tangents = Vec::with_capacity(us.len());
    for u in &us {
        let at = |s: f64| -> Result<V4> {
            let (sn, cs) = s.sin_cos();
            let ws = vec4::lin2(w, cs, u, sn);
            Ok(gauss_map_inverse(src, q, &ws, Some((x0, xi)))?.1)
        };
        let p1 = at(h)?;
        let m1 = at(-h)?;
        let p2 = at(2.0 * h)?;
        let m2 = at(-2.0 * h)?;
        let mut d = vec4::ZERO;
        for i in 0..4 {
            d[i] = (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * h);
        }
        tangents.push(d);
    }
    let (normal, jacobian) = dual_normal_from_tangents(q, &xi, &tangents)?;
    Ok(DualFrame {
        x: x0,
        v: xi,
        normal,
        jacobian,
    })
}

/// Normal and Jacobian from `Ξ_q(w)` and its tangents along an orthonormal
/// basis of `T_wΣ_q`.
pub fn dual_normal_from_tangents(q: &V4, xi: &V4, tangents: &[V4]) -> Result<(V4, f64)> {
    let mut basis: Vec<V4> = vec![normalize(xi)];
    // Gram determinant of the tangents is the product of the Gram–Schmidt
    // residual lengths.
    let mut jac = 1.0;
    for s in tangents {
        let mut b = *s;
        for e in &basis {
            b = reject(&b, e);
        }
        let bn = vec4::norm(&b);
        if bn < 1e-6 {
            return Err(Error::DegenerateTangent);
        }
        jac *= bn;
        basis.push(vec4::scale(&b, 1.0 / bn));
    }
    let mut r = *q;
    for e in &basis {
        r = reject(&r, e);
    }
    let rn = vec4::norm(&r);
    if rn < 1e-3 {
        return Err(Error::DegenerateTangent);
    }
    Ok((vec4::scale(&r, 1.0 / rn), jac))
}

/// Points where two graphs meet. For n=2 there are exactly two with unit
/// weights; for n=3 they are quadrature nodes on a closed curve with
/// arclength weights.
#[derive(Clone, Debug)]
pub struct Intersection {
    pub points: Vec<V4>,
    pub weights: Vec<f64>,
}

/// Regula falsi (Illinois variant) on a sign-changing bracket.
pub(crate) fn bracket_root(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut side = 0i32;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c)?;
        if fc == 0.0 || (b - a).abs() < 1e-15 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if fc.abs() < 1e-15 {
            return Ok(c);
        }
    }
    Ok(0.5 * (a + b))
}

/// Samples of the graph over σ (n=2) kept for repeated intersection with
/// other graphs.
pub struct GraphCurve<'a> {
    sigma: V4,
    frame: Vec<V4>,
    eq: Box<dyn EquatorGraph + 'a>,
    bound: f64,
    step: f64,
    samples: Vec<V4>,
}

impl<'a> GraphCurve<'a> {
    pub fn new(src: &'a dyn GraphSource, sigma: &V4, samples: usize) -> Result<Self> {
        if src.dim() != 2 {
            return Err(Error::NotImplementedForDimension(src.dim()));
        }
        let eq = src.equator(sigma)?;
        let frame = equator_frame(2, sigma);
        let m = samples.max(8);
        let step = 2.0 * PI / m as f64;
        let pts = (0..m)
            .map(|k| {
                let x = Self::base(&frame, k as f64 * step);
                graph_point(sigma, &x, eq.value(&x))
            })
            .collect();
        Ok(GraphCurve {
            sigma: *sigma,
            frame,
            eq,
            bound: src.sup_bound(),
            step,
            samples: pts,
        })
    }

    fn base(frame: &[V4], th: f64) -> V4 {
        let (s, c) = th.sin_cos();
        vec4::lin2(&frame[0], c, &frame[1], s)
    }

    pub fn sigma(&self) -> &V4 {
        &self.sigma
    }

    pub fn equator(&self) -> &dyn EquatorGraph {
        &*self.eq
    }

    /// The two points where this graph meets the graph over τ.
    pub fn intersect(&self, src: &dyn GraphSource, tau: &V4) -> Result<Intersection> {
        if vec4::sin_angle(&self.sigma, tau) < 1e-8 {
            return Err(Error::CoincidentDirections);
        }
        let et = src.equator(tau)?;
        let bound = self.bound;
        let level = |p: &V4, exact: bool| -> Result<f64> {
            let h = dot(p, tau);
            if vec4::sin_angle(p, tau) < 1e-8 {
                return Ok(h.signum());
            }
            let (t, xt) = graph_coordinates(tau, p)?;
            if !exact && t.abs() > bound + 1e-9 {
                return Ok(t.signum());
            }
            Ok((t - et.value(&xt)).sin())
        };
        let at = |th: f64| {
            let x = Self::base(&self.frame, th);
            graph_point(&self.sigma, &x, self.eq.value(&x))
        };
        let fexact = |th: f64| level(&at(th), true);
        let m = self.samples.len();
        let vals: Vec<f64> = self.samples.iter().map(|p| level(p, false)).collect::<Result<_>>()?;
        let mut points = Vec::with_capacity(2);
        for k in 0..m {
            let (f0, f1) = (vals[k], vals[(k + 1) % m]);
            if f0 == 0.0 || f0 * f1 < 0.0 {
                let (a, b) = (k as f64 * self.step, (k + 1) as f64 * self.step);
                let th = bracket_root(&fexact, a, b, fexact(a)?, fexact(b)?)?;
                points.push(at(th));
            }
        }
        if points.len() != 2 {
            return Err(Error::IntersectionCount {
                expected: 2,
                found: points.len(),
            });
        }
        Ok(Intersection {
            weights: vec![1.0; 2],
            points,
        })
    }
}

/// Level function of graph τ evaluated at the graph of σ over `x`.
fn cross_level(eq_s: &dyn EquatorGraph, eq_t: &dyn EquatorGraph, x: &V4) -> Result<f64> {
    let p = graph_point(&eq_s.direction(), x, eq_s.value(x));
    let tau = eq_t.direction();
    if vec4::sin_angle(&p, &tau) < 1e-8 {
        return Ok(dot(&p, &tau).signum());
    }
    let (t, xt) = graph_coordinates(&tau, &p)?;
    Ok((t - eq_t.value(&xt)).sin())
}

/// Intersection of the graphs over σ and τ. `samples` is the number of
/// bracketing samples along the σ graph (n=2) or the number of curve
/// nodes (n=3).
pub fn intersect_graphs(src: &dyn GraphSource, sigma: &V4, tau: &V4, samples: usize) -> Result<Intersection> {
    let n = src.dim();
    if vec4::sin_angle(sigma, tau) < 1e-8 {
        return Err(Error::CoincidentDirections);
    }
    if n == 2 {
        return GraphCurve::new(src, sigma, samples)?.intersect(src, tau);
    }
    let es = src.equator(sigma)?;
    let et = src.equator(tau)?;
    // n = 3: the curve lies over the great circle Σ_σ ∩ Σ_τ; march along it
    // and solve for the offset toward τ inside Σ_σ.
    let plane = orthogonal_complement(3, &[*sigma, *tau]);
    let toward = normalize(&reject(tau, sigma));
    let m = samples.max(8);
    let mut points = Vec::with_capacity(m);
    let scan = 64usize;
    let smax = 0.5 * PI - 1e-3;
    for k in 0..m {
        let th = 2.0 * PI * k as f64 / m as f64;
        let (s, c) = th.sin_cos();
        let e = vec4::lin2(&plane[0], c, &plane[1], s);
        let xs = |u: f64| {
            let (su, cu) = u.sin_cos();
            vec4::lin2(&e, cu, &toward, su)
        };
        let f = |u: f64| cross_level(&*es, &*et, &xs(u));
        let mut best: Option<(f64, f64)> = None;
        let ds = 2.0 * smax / scan as f64;
        let mut prev = (-smax, f(-smax)?);
        for i in 1..=scan {
            let u = -smax + i as f64 * ds;
            let fu = f(u)?;
            if prev.1 == 0.0 || prev.1 * fu < 0.0 {
                let mid = 0.5 * (prev.0 + u);
                if best.map_or(true, |b| mid.abs() < (0.5 * (b.0 + b.1)).abs()) {
                    best = Some((prev.0, u));
                }
            }
            prev = (u, fu);
        }
        let (a, b) = best.ok_or(Error::IntersectionCount { expected: 1, found: 0 })?;
        let u = bracket_root(&f, a, b, f(a)?, f(b)?)?;
        let x = xs(u);
        points.push(graph_point(sigma, &x, es.value(&x)));
    }
    let weights = closed_curve_weights(&points);
    Ok(Intersection { points, weights })
}

/// Derivatives `d/dθ` of a closed smooth curve sampled at `θ_k = 2πk/m`,
/// from the trigonometric interpolant.
pub fn closed_curve_derivatives(points: &[V4]) -> Vec<V4> {
    let m = points.len();
    let h = 2.0 * PI / m as f64;
    (0..m)
        .map(|k| {
            let mut d = vec4::ZERO;
            for j in 0..m {
                if j == k {
                    continue;
                }
                let diff = k as i64 - j as i64;
                let half = 0.5 * diff as f64 * h;
                let sign = if diff.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let coef = if m % 2 == 0 {
                    0.5 * sign / half.tan()
                } else {
                    0.5 * sign / half.sin()
                };
                d = vec4::axpy(&d, coef, &points[j]);
            }
            d
        })
        .collect()
}

/// Arclength weights of equispaced nodes on a closed smooth curve, from
/// the trigonometric-interpolant derivative.
pub fn closed_curve_weights(points: &[V4]) -> Vec<f64> {
    let h = 2.0 * PI / points.len() as f64;
    closed_curve_derivatives(points).iter().map(|d| vec4::norm(d) * h).collect()
}
