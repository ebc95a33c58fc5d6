//! Area of graphs in a conformal metric `e^{2ρ}·can`, the Euler–Lagrange
//! operator ℋ, its linearisations in ρ and Φ, the projected Jacobi solve,
//! and the center and constraint maps.
//!
//! ℋ is evaluated pointwise at chart nodes in divergence form from the
//! node jet of Φ_v (value, gradient, Hessian) and one derivative of ρ.
//! The Jacobi matrix comes from the same pointwise formula run on dual
//! numbers.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;
use nalgebra::DMatrix;
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::graphs::{graph_normal, graph_point, orthogonal_complement, SmoothGraphField, TangentGraphField};
use crate::jet::{self, Dual};
use crate::setup::Setup;
use crate::sphere::quadrature::sphere_volume;
use crate::sphere::{ChartTemplate, EquatorChart, FieldEval, HarmonicField};
use crate::vec4::{self, dot, V4};

/// Conformal factor ρ prepared for repeated evaluation; the zero field
/// short-circuits.
pub struct Conformal<'a> {
    pub n: usize,
    eval: Option<FieldEval<'a>>,
}

impl<'a> Conformal<'a> {
    pub fn new(rho: &'a HarmonicField) -> Self {
        let eval = if rho.max_abs_coeff() == 0.0 {
            None
        } else {
            Some(rho.evaluator())
        };
        Conformal { n: rho.n(), eval }
    }

    pub fn zero(n: usize) -> Self {
        Conformal { n, eval: None }
    }

    /// Value and ambient gradient of the polynomial extension.
    pub fn jet1(&self, p: &V4) -> (f64, V4) {
        match &self.eval {
            Some(e) => e.jet1(p),
            None => (0.0, vec4::ZERO),
        }
    }

    /// Value, ambient gradient and ambient Hessian.
    pub fn jet2(&self, p: &V4) -> (f64, V4, vec4::M4) {
        match &self.eval {
            Some(e) => {
                let j = e.jet2(p);
                (j.value, j.grad, j.hess)
            }
            None => (0.0, vec4::ZERO, [[0.0; 4]; 4]),
        }
    }
}

fn powi<T: jet::Real>(x: T, k: usize) -> T {
    let mut r = T::cst(1.0);
    for _ in 0..k {
        r = r * x;
    }
    r
}

/// Pointwise Euler–Lagrange integrand in divergence form.
///
/// `u, g, h`: value, gradient and Hessian of Φ_v at a node (tangent basis);
/// `e = e^{(n−1)ρ(c)}`, `ru = ⟨∇ρ(c), ∂_U c⟩`, `ra = ⟨∇ρ(c), t_a⟩` where
/// `c` is the graph point.
#[allow(clippy::too_many_arguments)]
pub fn el_point<T: jet::Real>(n: usize, u: T, g: [T; 2], h: [[T; 2]; 2], e: T, ru: T, ra: [T; 2]) -> T {
    let d = n - 1;
    let nm1 = (n - 1) as f64;
    let s = u.sin();
    let c = u.cos();
    let mut gg = T::cst(0.0);
    for a in 0..d {
        gg = gg + g[a] * g[a];
    }
    let w2 = c * c + gg;
    let w = w2.sqrt();
    let cn2 = powi(c, n - 2);
    let b = e * cn2 / w;
    let mut div = T::cst(0.0);
    for a in 0..d {
        div = div + h[a][a];
    }
    div = b * div;
    for a in 0..d {
        let mut hg = T::cst(0.0);
        for bb in 0..d {
            hg = hg + h[a][bb] * g[bb];
        }
        let mut lnb = (c * ra[a] + ru * g[a]).scale(nm1) + (c * s * g[a] - hg) / w2;
        if n > 2 {
            lnb = lnb - (s / c * g[a]).scale((n - 2) as f64);
        }
        div = div + b * lnb * g[a];
    }
    let mut d2a = (ru * cn2 * w).scale(nm1) - cn2 * c * s / w;
    if n > 2 {
        d2a = d2a - (powi(c, n - 3) * s * w).scale((n - 2) as f64);
    }
    e * d2a - div
}

/// Geometry of the graph over one chart node.
struct NodeGeom {
    x: V4,
    t: [V4; 2],
    u: f64,
    g: [f64; 2],
    h: [[f64; 2]; 2],
    c: V4,
    cu: V4,
}

fn node_geom(t: &ChartTemplate, chart: &EquatorChart, modes: &[f64], k: usize) -> NodeGeom {
    let d = t.d();
    let j = t.node_jet(modes, k);
    let x = chart.node(t, k);
    let mut tan = [vec4::ZERO; 2];
    for (a, ta) in tan.iter_mut().enumerate().take(d) {
        *ta = chart.tangent(t, k, a);
    }
    let (s, c) = j.value.sin_cos();
    NodeGeom {
        x,
        t: tan,
        u: j.value,
        g: j.grad,
        h: j.hess,
        c: graph_point(&chart.v, &x, j.value),
        cu: vec4::lin2(&x, -s, &chart.v, c),
    }
}

impl NodeGeom {
    fn ambient_grad(&self, d: usize) -> V4 {
        let mut g = vec4::ZERO;
        for a in 0..d {
            g = vec4::axpy(&g, self.g[a], &self.t[a]);
        }
        g
    }
}

/// ℋ at every chart node of one equator.
pub fn el_nodes(t: &ChartTemplate, chart: &EquatorChart, rho: &Conformal, modes: &[f64]) -> Vec<f64> {
    let n = t.n;
    let nm1 = (n - 1) as f64;
    (0..t.node_count())
        .map(|k| {
            let ng = node_geom(t, chart, modes, k);
            let (r, gr) = rho.jet1(&ng.c);
            let e = (nm1 * r).exp();
            let ra = [dot(&gr, &ng.t[0]), dot(&gr, &ng.t[1])];
            el_point::<f64>(n, ng.u, ng.g, ng.h, e, dot(&gr, &ng.cu), ra)
        })
        .collect()
}

/// Area of the graph over one equator.
pub fn area(t: &ChartTemplate, chart: &EquatorChart, rho: &Conformal, modes: &[f64]) -> f64 {
    let n = t.n;
    let nm1 = (n - 1) as f64;
    let d = t.d();
    let vals: Vec<f64> = (0..t.node_count())
        .map(|k| {
            let ng = node_geom(t, chart, modes, k);
            let (r, _) = rho.jet1(&ng.c);
            let gg: f64 = ng.g[..d].iter().map(|a| a * a).sum();
            let c = ng.u.cos();
            (nm1 * r).exp() * c.powi(n as i32 - 2) * (c * c + gg).sqrt()
        })
        .collect();
    chart.integrate(t, &vals)
}

/// Areas of all graphs, one per representative.
#[derive(Clone, Debug, PartialEq)]
pub struct AreaProfile {
    pub values: Vec<f64>,
    pub mean: f64,
    pub spread: f64,
}

impl AreaProfile {
    pub fn from_values(setup: &Setup, values: Vec<f64>) -> Self {
        let mean = setup.grid.mean(&values);
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        AreaProfile {
            values,
            mean,
            spread: hi - lo,
        }
    }
}

pub fn area_profile(setup: &Setup, rho: &HarmonicField, phi: &TangentGraphField) -> AreaProfile {
    let r = Conformal::new(rho);
    let t = &setup.template;
    let vals = setup.per_rep(1, &|i, out| {
        out[0] = area(t, &setup.charts[i], &r, phi.modes(i));
    });
    AreaProfile::from_values(setup, vals)
}

/// Node values of ℋ for every representative (reps × nodes, flat).
pub fn el_operator_nodes(setup: &Setup, rho: &HarmonicField, phi: &TangentGraphField) -> Vec<f64> {
    let r = Conformal::new(rho);
    let t = &setup.template;
    setup.per_rep(t.node_count(), &|i, out| {
        out.copy_from_slice(&el_nodes(t, &setup.charts[i], &r, phi.modes(i)));
    })
}

/// ℋ(ρ, Φ) projected to the chart modes.
pub fn el_operator(setup: &Setup, rho: &HarmonicField, phi: &TangentGraphField) -> Result<TangentGraphField> {
    let r = Conformal::new(rho);
    let t = &setup.template;
    let flat = setup.per_rep(t.mode_count(), &|i, out| {
        out.copy_from_slice(&t.analyze(&el_nodes(t, &setup.charts[i], &r, phi.modes(i))));
    });
    TangentGraphField::from_flat(setup, &flat)
}

/// Node values of `D₁ℋ(ρ,Φ)·f` on one equator.
pub fn d1h_nodes(
    t: &ChartTemplate,
    chart: &EquatorChart,
    rho: &Conformal,
    modes: &[f64],
    f: &FieldEval,
) -> Vec<f64> {
    let n = t.n;
    let nm1 = (n - 1) as f64;
    let d = t.d();
    let hs = el_nodes(t, chart, rho, modes);
    (0..t.node_count())
        .map(|k| {
            let ng = node_geom(t, chart, modes, k);
            let (r, _) = rho.jet1(&ng.c);
            let e = (nm1 * r).exp();
            let (fv, fg) = f.jet1(&ng.c);
            let nrm = graph_normal(&chart.v, &ng.x, ng.u, &ng.ambient_grad(d));
            nm1 * fv * hs[k] + nm1 * ng.u.cos().powi(n as i32 - 1) * dot(&fg, &nrm) * e
        })
        .collect()
}

/// `D₁ℋ(ρ,Φ)·f` projected to the chart modes.
pub fn d1h(setup: &Setup, rho: &HarmonicField, phi: &TangentGraphField, f: &HarmonicField) -> Result<TangentGraphField> {
    let r = Conformal::new(rho);
    let fe = f.evaluator();
    let t = &setup.template;
    let flat = setup.per_rep(t.mode_count(), &|i, out| {
        out.copy_from_slice(&t.analyze(&d1h_nodes(t, &setup.charts[i], &r, phi.modes(i), &fe)));
    });
    TangentGraphField::from_flat(setup, &flat)
}

/// Jacobi matrix `J_{ji} = ∫ φ_j · DℋΦ·φ_i` on the chart modes.
pub fn jacobi_assemble(t: &ChartTemplate, chart: &EquatorChart, rho: &Conformal, modes: &[f64]) -> DMatrix<f64> {
    let n = t.n;
    let nm1 = (n - 1) as f64;
    let d = t.d();
    let m = t.mode_count();
    let q = t.node_count();
    let mut dh = DMatrix::<f64>::zeros(q, m);
    let mut wphi = DMatrix::<f64>::zeros(q, m);
    for k in 0..q {
        let ng = node_geom(t, chart, modes, k);
        let (r, gr, hr) = rho.jet2(&ng.c);
        let e = (nm1 * r).exp();
        let ru = dot(&gr, &ng.cu);
        let ruu = vec4::quad_form(&hr, &ng.cu, &ng.cu) - dot(&gr, &ng.c);
        let mut ra = [0.0; 2];
        let mut rau = [0.0; 2];
        for a in 0..d {
            ra[a] = dot(&gr, &ng.t[a]);
            rau[a] = vec4::quad_form(&hr, &ng.t[a], &ng.cu);
        }
        for i in 0..m {
            let p = t.basis_value(k, i);
            wphi[(k, i)] = t.weights[k] * p;
            let mut g = [Dual::default(); 2];
            let mut h = [[Dual::default(); 2]; 2];
            let mut ra_d = [Dual::default(); 2];
            for a in 0..d {
                g[a] = Dual::new(ng.g[a], t.basis_grad(k, i, a));
                ra_d[a] = Dual::new(ra[a], p * rau[a]);
                for b in 0..d {
                    h[a][b] = Dual::new(ng.h[a][b], t.basis_hess(k, i, a, b));
                }
            }
            let val = el_point(
                n,
                Dual::new(ng.u, p),
                g,
                h,
                Dual::new(e, nm1 * e * ru * p),
                Dual::new(ru, p * ruu),
                ra_d,
            );
            dh[(k, i)] = val.du;
        }
    }
    wphi.transpose() * dh
}

/// Indices of the chart modes other than degree one.
pub fn nonlinear_modes(t: &ChartTemplate) -> Vec<usize> {
    let lin = t.linear_modes();
    (0..t.mode_count()).filter(|i| !lin.contains(i)).collect()
}

/// Smallest singular value below which the projected Jacobi operator is
/// treated as singular.
pub const JACOBI_SINGULAR: f64 = 1e-8;

/// Solves the projected Jacobi equation `P_v J P_v* φ = ψ` on one equator.
pub fn solve_projected(j: &DMatrix<f64>, t: &ChartTemplate, psi: &[f64]) -> Result<Vec<f64>> {
    let idx = nonlinear_modes(t);
    let k = idx.len();
    let p = DMatrix::from_fn(k, k, |a, b| j[(idx[a], idx[b])]);
    let smin = p.singular_values().iter().cloned().fold(f64::INFINITY, f64::min);
    if smin < JACOBI_SINGULAR {
        return Err(Error::Singular(smin));
    }
    let rhs = nalgebra::DVector::from_iterator(k, idx.iter().map(|&i| psi[i]));
    let sol = p.full_piv_lu().solve(&rhs).ok_or(Error::Singular(smin))?;
    let mut out = vec![0.0; t.mode_count()];
    for (a, &i) in idx.iter().enumerate() {
        out[i] = sol[a];
    }
    Ok(out)
}

/// Projected Jacobi operator applied to one equator's modes.
pub fn apply_projected(j: &DMatrix<f64>, t: &ChartTemplate, phi: &[f64]) -> Vec<f64> {
    let v = nalgebra::DVector::from_column_slice(phi);
    let mut out: Vec<f64> = (j * v).iter().cloned().collect();
    for i in t.linear_modes() {
        out[i] = 0.0;
    }
    out
}

/// Solution map: inverts the projected Jacobi operator on every equator.
pub fn solution_map(
    setup: &Setup,
    rho: &HarmonicField,
    phi: &TangentGraphField,
    psi: &TangentGraphField,
) -> Result<TangentGraphField> {
    if psi.subspace != crate::graphs::Subspace::ZeroOdd {
        return Err(Error::NotCentered);
    }
    let r = Conformal::new(rho);
    let t = &setup.template;
    let m = t.mode_count();
    // Failures are reported through a NaN marker in the output slot.
    let flat = setup.per_rep(m + 1, &|i, out| {
        let j = jacobi_assemble(t, &setup.charts[i], &r, phi.modes(i));
        match solve_projected(&j, t, psi.modes(i)) {
            Ok(s) => {
                out[..m].copy_from_slice(&s);
                out[m] = 0.0;
            }
            Err(Error::Singular(s)) => {
                out[m] = f64::NAN;
                out[0] = s;
            }
            Err(_) => out[m] = f64::NAN,
        }
    });
    let mut modes = Vec::with_capacity(setup.reps());
    for chunk in flat.chunks(m + 1) {
        if chunk[m].is_nan() {
            return Err(Error::Singular(chunk[0]));
        }
        modes.push(chunk[..m].to_vec());
    }
    Ok(TangentGraphField::from_modes(setup, modes)?.project_zero_odd(setup))
}

/// Smallest singular value of the projected Jacobi operator over all reps.
pub fn jacobi_min_singular(setup: &Setup, rho: &HarmonicField, phi: &TangentGraphField) -> f64 {
    let r = Conformal::new(rho);
    let t = &setup.template;
    let idx = nonlinear_modes(t);
    let vals = setup.per_rep(1, &|i, out| {
        let j = jacobi_assemble(t, &setup.charts[i], &r, phi.modes(i));
        let k = idx.len();
        let p = DMatrix::from_fn(k, k, |a, b| j[(idx[a], idx[b])]);
        out[0] = p.singular_values().iter().cloned().fold(f64::INFINITY, f64::min);
    });
    vals.into_iter().fold(f64::INFINITY, f64::min)
}

/// Even one-form, stored as its dual vector `X(v) ⊥ v` at each
/// representative; `X(−v) = −X(v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvenOneForm {
    pub vectors: Vec<V4>,
}

impl EvenOneForm {
    pub fn zero(setup: &Setup) -> Self {
        EvenOneForm {
            vectors: vec![vec4::ZERO; setup.reps()],
        }
    }

    /// Checks tangency within `1e−12` and removes the residual normal part.
    pub fn new(setup: &Setup, vectors: Vec<V4>) -> Result<Self> {
        if vectors.len() != setup.reps() {
            return Err(Error::Mismatch("one-form length does not match the grid"));
        }
        let mut out = Vec::with_capacity(vectors.len());
        for (x, v) in vectors.iter().zip(&setup.grid.reps) {
            if dot(x, v).abs() > 1e-12 * (1.0 + vec4::norm(x)) {
                return Err(Error::InvalidParameter("one-form vector is not tangent"));
            }
            out.push(vec4::reject(x, v));
        }
        Ok(EvenOneForm { vectors: out })
    }

    /// Value on `u ∈ T_vSⁿ` at any `v = ±rep`.
    pub fn apply(&self, rep: usize, sign: f64, u: &V4) -> f64 {
        sign * dot(&self.vectors[rep], u)
    }

    pub fn max_norm(&self) -> f64 {
        self.vectors.iter().map(vec4::norm).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.vectors
            .iter()
            .zip(&other.vectors)
            .map(|(a, b)| vec4::norm(&vec4::sub(a, b)))
            .fold(0.0, f64::max)
    }
}

/// `α_n = n / ω_{n−1}`.
pub fn alpha(n: usize) -> f64 {
    n as f64 / sphere_volume(n - 1)
}

/// Center map `X(v) = ∫_{Σ_v} Ψ(x, v)·x`.
pub fn center_map(setup: &Setup, psi: &TangentGraphField) -> EvenOneForm {
    let t = &setup.template;
    let flat = setup.per_rep(4, &|i, out| {
        let chart = &setup.charts[i];
        let vals = t.synthesize(psi.modes(i));
        let mut x = vec4::ZERO;
        for (k, f) in vals.iter().enumerate() {
            x = vec4::axpy(&x, t.weights[k] * f, &chart.node(t, k));
        }
        out.copy_from_slice(&x);
    });
    EvenOneForm {
        vectors: flat.chunks(4).map(|c| [c[0], c[1], c[2], c[3]]).collect(),
    }
}

/// Right inverse of the center map: `(jω)(x, v) = α_n·⟨X(v), x⟩`.
pub fn j_embed(setup: &Setup, omega: &EvenOneForm) -> Result<TangentGraphField> {
    let t = &setup.template;
    let a = alpha(setup.n);
    let flat = setup.per_rep(t.mode_count(), &|i, out| {
        let chart = &setup.charts[i];
        let vals: Vec<f64> = (0..t.node_count())
            .map(|k| a * dot(&omega.vectors[i], &chart.node(t, k)))
            .collect();
        out.copy_from_slice(&t.analyze(&vals));
    });
    TangentGraphField::from_flat(setup, &flat)
}

/// `η(Φ)(x, v, u) = −⟨x,u⟩ + DΦ·(−⟨x,u⟩v, u) − tan Φ·⟨∇Φ_v, u⟩`.
pub fn eta(phi: &SmoothGraphField, x: &V4, v: &V4, u: &V4) -> Result<f64> {
    let (val, gx, gv) = phi.jet_xv(x, v);
    if val.abs() >= FRAC_PI_2 {
        return Err(Error::GraphTooLarge(val.abs()));
    }
    let xu = dot(x, u);
    let dphi = -xu * dot(&gx, v) + dot(&gv, u);
    let grad = vec4::reject(&vec4::reject(&gx, x), v);
    Ok(-xu + dphi - val.tan() * dot(&grad, u))
}

/// `𝒦(Φ, Ψ)` with Ψ given by node values on every chart (reps × nodes).
pub fn constraint_from_nodes(setup: &Setup, phi: &SmoothGraphField, psi_nodes: &[f64]) -> Result<EvenOneForm> {
    let t = &setup.template;
    let q = t.node_count();
    let n = setup.n;
    let flat = setup.per_rep(5, &|i, out| {
        let chart = &setup.charts[i];
        let us = orthogonal_complement(n, &[chart.v]);
        let mut x = vec4::ZERO;
        for u in &us {
            let mut s = 0.0;
            for k in 0..q {
                match eta(phi, &chart.node(t, k), &chart.v, u) {
                    Ok(e) => s += t.weights[k] * psi_nodes[i * q + k] * e,
                    Err(_) => {
                        out[4] = f64::NAN;
                        return;
                    }
                }
            }
            x = vec4::axpy(&x, s, u);
        }
        out[..4].copy_from_slice(&x);
        out[4] = 0.0;
    });
    if flat.chunks(5).any(|c| c[4].is_nan()) {
        return Err(Error::GraphTooLarge(phi_sup(phi)));
    }
    Ok(EvenOneForm {
        vectors: flat.chunks(5).map(|c| [c[0], c[1], c[2], c[3]]).collect(),
    })
}

fn phi_sup(phi: &SmoothGraphField) -> f64 {
    use crate::graphs::GraphSource;
    phi.sup_bound()
}

/// Constraint map `𝒦(Φ, Ψ)_v(u) = ∫_{Σ_v} Ψ·η(Φ)(·, v, u)`.
pub fn constraint_map(setup: &Setup, phi: &SmoothGraphField, psi: &TangentGraphField) -> Result<EvenOneForm> {
    let t = &setup.template;
    let mut nodes = Vec::with_capacity(setup.reps() * t.node_count());
    for i in 0..setup.reps() {
        nodes.extend(t.synthesize(psi.modes(i)));
    }
    constraint_from_nodes(setup, phi, &nodes)
}

/// Differential of an even function given by its values at the
/// representatives, through its even-harmonic expansion on the grid.
pub fn area_differential(setup: &Setup, values: &[f64]) -> Result<EvenOneForm> {
    let field = HarmonicField::project_even(&setup.grid, values, setup.grid.band_limit)?;
    let ev = field.evaluator();
    Ok(EvenOneForm {
        vectors: setup.grid.reps.iter().map(|v| ev.gradient(v)).collect(),
    })
}

/// Result of checking `𝒦(Φ, ℋ(ρ,Φ)) = d𝒜(ρ,Φ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintCheck {
    /// Sup over reps and unit directions of the difference.
    pub residual: f64,
    /// Sup norm of `d𝒜`.
    pub area_differential: f64,
}

pub fn verify_constraint(setup: &Setup, rho: &HarmonicField, phi: &SmoothGraphField) -> Result<ConstraintCheck> {
    let tf = phi.restrict(setup)?;
    tf.check_small(setup)?;
    let h = el_operator_nodes(setup, rho, &tf);
    let k = constraint_from_nodes(setup, phi, &h)?;
    let prof = area_profile(setup, rho, &tf);
    let da = area_differential(setup, &prof.values)?;
    Ok(ConstraintCheck {
        residual: k.max_diff(&da),
        area_differential: da.max_norm(),
    })
}
