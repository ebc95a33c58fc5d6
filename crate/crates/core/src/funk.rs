//! Generalised Funk transform over a family of graphs, its dual, the
//! singular kernel of `ℱ∘ℱ*`, the kernel operator on even harmonics and
//! the right inverse `ℛ = ℱ*∘(ℱ∘ℱ*)⁻¹`.
//!
//! Even fields on ℝPⁿ are stored as [`HarmonicField`]s on Sⁿ with only
//! even degrees; operators act on their orthonormal coefficients.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::graphs::{
    closed_curve_derivatives, dual_frame, dual_normal_from_tangents, gauss_map_inverse, graph_coordinates,
    graph_jacobian, graph_normal, graph_point, intersect_graphs, orthogonal_complement, EquatorGraph, GraphCurve,
    GraphSource, Intersection, SmoothGraphField, TangentGraphField,
};
use crate::setup::Setup;
use crate::sphere::harmonics::basis_len;
use crate::sphere::quadrature::{gauss_legendre, sphere_volume};
use crate::sphere::{equator_frame, ChartTemplate, EquatorChart, HarmonicBasis, HarmonicField, Parity};
use crate::variational::{area_profile, eta, Conformal};
use crate::vec4::{self, dot, mat_vec, reject, M4, V4};

/// Bracketing samples along a graph (n=2) or nodes on an intersection
/// curve (n=3) used for kernel evaluation.
pub const KERNEL_SAMPLES: usize = 64;

/// Largest condition number accepted for the kernel operator.
pub const MAX_CONDITION: f64 = 1e8;

/// Points of the graph over one equator with weights of `e^{(n−1)ρ}·dA`.
pub fn graph_measure(t: &ChartTemplate, chart: &EquatorChart, rho: &Conformal, modes: &[f64]) -> (Vec<V4>, Vec<f64>) {
    let n = t.n;
    let nm1 = (n - 1) as f64;
    let d = t.d();
    let mut pts = Vec::with_capacity(t.node_count());
    let mut wts = Vec::with_capacity(t.node_count());
    for k in 0..t.node_count() {
        let j = t.node_jet(modes, k);
        let x = chart.node(t, k);
        let gg: f64 = j.grad[..d].iter().map(|a| a * a).sum();
        let c = graph_point(&chart.v, &x, j.value);
        let (r, _) = rho.jet1(&c);
        wts.push(t.weights[k] * (nm1 * r).exp() * graph_jacobian(n, j.value, gg));
        pts.push(c);
    }
    (pts, wts)
}

/// `ℱ(ρ,Φ)(f)` at every representative.
pub fn funk_forward(setup: &Setup, rho: &HarmonicField, phi: &TangentGraphField, f: &HarmonicField) -> Vec<f64> {
    let r = Conformal::new(rho);
    let fe = f.evaluator();
    let t = &setup.template;
    setup.per_rep(1, &|i, out| {
        let (pts, wts) = graph_measure(t, &setup.charts[i], &r, phi.modes(i));
        out[0] = pts.iter().zip(&wts).map(|(p, w)| w * fe.value(p)).sum();
    })
}

/// Indices of the even-degree harmonics of degree ≤ `band`.
pub fn even_modes(n: usize, band: usize) -> Vec<usize> {
    HarmonicBasis::new(n, band)
        .degrees()
        .iter()
        .enumerate()
        .filter(|(_, l)| *l % 2 == 0)
        .map(|(i, _)| i)
        .collect()
}

/// Even coefficients of `g` at band `band`; odd content is an error.
fn even_coeffs(g: &HarmonicField, band: usize) -> Result<Vec<f64>> {
    let g = g.resized(band);
    let degs = g.basis().degrees().to_vec();
    let mut out = Vec::new();
    for (c, l) in g.coeffs().iter().zip(&degs) {
        if l % 2 == 0 {
            out.push(*c);
        } else if c.abs() > 1e-12 {
            return Err(Error::InvalidParameter("field on projective space must be even"));
        }
    }
    Ok(out)
}

fn even_field(n: usize, band: usize, values: &[f64]) -> Result<HarmonicField> {
    let mut c = vec![0.0; basis_len(n, band)];
    for (i, v) in even_modes(n, band).into_iter().zip(values) {
        c[i] = *v;
    }
    HarmonicField::from_coeffs(n, band, Parity::Even, c)
}

/// `ℱ(Y_k)(σ_i)` for all harmonics of degree ≤ `band` (reps × modes).
#[derive(Clone, Debug)]
pub struct ForwardMatrix {
    pub n: usize,
    pub band: usize,
    pub matrix: DMatrix<f64>,
}

pub fn forward_matrix(setup: &Setup, rho: &HarmonicField, phi: &TangentGraphField, band: usize) -> Result<ForwardMatrix> {
    let t = &setup.template;
    if band > setup.grid.band_limit {
        return Err(Error::Aliasing {
            resolution: 2 * setup.grid.band_limit + 1,
            l: band,
        });
    }
    if t.q < 2 * band + 2 {
        return Err(Error::ChartTooCoarse { q: t.q, l: band });
    }
    let n = setup.n;
    let basis = HarmonicBasis::new(n, band);
    let nb = basis.len();
    let r = Conformal::new(rho);
    let flat = setup.per_rep(nb, &|i, out| {
        let (pts, wts) = graph_measure(t, &setup.charts[i], &r, phi.modes(i));
        let mut y = vec![0.0; nb];
        for (p, w) in pts.iter().zip(&wts) {
            basis.eval_into(p, &mut y);
            for (o, yi) in out.iter_mut().zip(&y) {
                *o += w * yi;
            }
        }
    });
    Ok(ForwardMatrix {
        n,
        band,
        matrix: DMatrix::from_row_slice(setup.reps(), nb, &flat),
    })
}

impl ForwardMatrix {
    pub fn apply(&self, f: &HarmonicField) -> Vec<f64> {
        let c = DVector::from_column_slice(f.resized(self.band).coeffs());
        (&self.matrix * c).iter().copied().collect()
    }

    /// Adjoint against the grid weights: the field whose coefficients are
    /// `∫_{ℝPⁿ} ℱ(Y_k)·g`.
    pub fn adjoint(&self, setup: &Setup, g: &[f64]) -> Result<HarmonicField> {
        if g.len() != setup.reps() {
            return Err(Error::Mismatch("sample count does not match grid"));
        }
        let wg = DVector::from_iterator(g.len(), g.iter().zip(&setup.grid.weights).map(|(a, w)| a * w));
        let c = self.matrix.transpose() * wg;
        Ok(HarmonicField::from_coeffs(self.n, self.band, Parity::Any, c.iter().copied().collect())?.detect_parity())
    }

    /// `P∘ℱ` from all harmonics of degree ≤ band to even harmonics of
    /// degree ≤ band, `P` being the grid projection.
    pub fn coefficient_map(&self, setup: &Setup) -> DMatrix<f64> {
        let evens = even_modes(self.n, self.band);
        let basis = HarmonicBasis::new(self.n, self.band);
        let mut proj = DMatrix::<f64>::zeros(evens.len(), setup.reps());
        let mut y = vec![0.0; basis.len()];
        for (i, (s, w)) in setup.grid.reps.iter().zip(&setup.grid.weights).enumerate() {
            basis.eval_into(s, &mut y);
            for (a, &k) in evens.iter().enumerate() {
                proj[(a, i)] = 2.0 * w * y[k];
            }
        }
        proj * &self.matrix
    }
}

/// `ℱ*(ρ,Φ)(g)` by transposing the discrete forward map, as a field of
/// degree ≤ `band`.
pub fn funk_dual_adjoint(
    setup: &Setup,
    rho: &HarmonicField,
    phi: &TangentGraphField,
    g: &HarmonicField,
    band: usize,
) -> Result<HarmonicField> {
    let fm = forward_matrix(setup, rho, phi, band)?;
    fm.adjoint(setup, &g.sample(&setup.grid.reps))
}

/// Both sides of `ℱ(ρ,Φ)(f) = (1/(n−1))·d/dt 𝒜(ρ+tf, Φ)|₀`.
#[derive(Clone, Debug)]
pub struct AreaDerivativeCheck {
    pub forward: Vec<f64>,
    pub derivative: Vec<f64>,
    /// Largest difference relative to `max|ℱ(f)|`.
    pub relative: f64,
}

/// Central difference of the area profile with step `h`.
pub fn funk_is_d1area(
    setup: &Setup,
    rho: &HarmonicField,
    phi: &TangentGraphField,
    f: &HarmonicField,
    h: f64,
) -> Result<AreaDerivativeCheck> {
    let nm1 = (setup.n - 1) as f64;
    let forward = funk_forward(setup, rho, phi, f);
    let ap = area_profile(setup, &rho.axpy(h, f)?, phi);
    let am = area_profile(setup, &rho.axpy(-h, f)?, phi);
    let derivative: Vec<f64> = ap
        .values
        .iter()
        .zip(&am.values)
        .map(|(a, b)| (a - b) / (2.0 * h * nm1))
        .collect();
    let scale = forward.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(1e-300);
    let relative = forward
        .iter()
        .zip(&derivative)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale;
    Ok(AreaDerivativeCheck {
        forward,
        derivative,
        relative,
    })
}

/// Nodes on Σ*_p with weights such that `ℱ*(g)(p) = Σ w_k·g(τ_k)`.
#[derive(Clone, Debug)]
pub struct DualQuadrature {
    pub nodes: Vec<V4>,
    pub weights: Vec<f64>,
}

impl DualQuadrature {
    pub fn apply(&self, g: &HarmonicField) -> f64 {
        let ge = g.evaluator();
        self.nodes.iter().zip(&self.weights).map(|(v, w)| w * ge.value(v)).sum()
    }
}

/// Density `U(Φ)` at `p = Σ_v(Φ)(x)` given the dual normal.
pub fn dual_density(phi: &SmoothGraphField, x: &V4, v: &V4, dual_normal: &V4) -> Result<f64> {
    let eq = phi.equator(v)?;
    let (u, g) = eq.jet(x);
    let c = u.cos();
    let e = eta(phi, x, v, dual_normal)?;
    if e.abs() < 1e-8 {
        return Err(Error::DegenerateTangent);
    }
    Ok((c * c + dot(&g, &g)).sqrt() / (e.abs() * c))
}

/// Geometric quadrature of `ℱ*(ρ,Φ)` at `p`: the dual hypersurface Σ*_p
/// is parametrised by `w ↦ Ξ_p(w)` over the chart nodes of Σ_p. For n=2
/// tangents of Ξ_p come from the trigonometric interpolant of the nodes;
/// for n=3 from central differences.
pub fn dual_quadrature(rho: &Conformal, phi: &SmoothGraphField, p: &V4, t: &ChartTemplate) -> Result<DualQuadrature> {
    let n = phi.n;
    if t.n != n {
        return Err(Error::Mismatch("chart template dimension"));
    }
    let nm1 = (n - 1) as f64;
    let chart = EquatorChart::new(n, p);
    let m = t.node_count();
    let ws: Vec<V4> = (0..m).map(|k| chart.node(t, k)).collect();
    let (r, _) = rho.jet1(p);
    // Σ_p covers Σ*_p twice.
    let scale = 0.5 * (nm1 * r).exp();
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    if n == 2 {
        let pre: Vec<(V4, V4)> = ws.iter().map(|w| gauss_map_inverse(phi, p, w, None)).collect::<Result<_>>()?;
        let vs: Vec<V4> = pre.iter().map(|a| a.1).collect();
        let dv = closed_curve_derivatives(&vs);
        for k in 0..m {
            let (nstar, jac) = dual_normal_from_tangents(p, &vs[k], &dv[k..k + 1])?;
            let u = dual_density(phi, &pre[k].0, &vs[k], &nstar)?;
            nodes.push(vs[k]);
            weights.push(scale * t.weights[k] * u * jac);
        }
    } else {
        for (k, w) in ws.iter().enumerate() {
            let fr = dual_frame(phi, p, w)?;
            let u = dual_density(phi, &fr.x, &fr.v, &fr.normal)?;
            nodes.push(fr.v);
            weights.push(scale * t.weights[k] * u * fr.jacobian);
        }
    }
    Ok(DualQuadrature { nodes, weights })
}

/// `ℱ*(ρ,Φ)(g)` at each of `points` by the geometric route.
pub fn funk_dual_geometric(
    rho: &HarmonicField,
    phi: &SmoothGraphField,
    g: &HarmonicField,
    points: &[V4],
    t: &ChartTemplate,
) -> Result<Vec<f64>> {
    let r = Conformal::new(rho);
    points
        .iter()
        .map(|p| Ok(dual_quadrature(&r, phi, p, t)?.apply(g)))
        .collect()
}

fn equator_normal(eq: &dyn EquatorGraph, y: &V4) -> Result<V4> {
    let v = eq.direction();
    let (_, x) = graph_coordinates(&v, y)?;
    let (u, g) = eq.jet(&x);
    Ok(graph_normal(&v, &x, u, &g))
}

fn kernel_sum(
    rho: &Conformal,
    es: &dyn EquatorGraph,
    et: &dyn EquatorGraph,
    inter: &Intersection,
) -> Result<f64> {
    let nm1 = (rho.n - 1) as f64;
    let mut s = 0.0;
    for (y, w) in inter.points.iter().zip(&inter.weights) {
        let ns = equator_normal(es, y)?;
        let nt = equator_normal(et, y)?;
        // |N_σ ∧ N_τ| without the cancellation in 1 − ⟨N_σ,N_τ⟩².
        let wedge = vec4::norm(&reject(&nt, &ns));
        if wedge < 1e-14 {
            return Err(Error::CoincidentDirections);
        }
        let (r, _) = rho.jet1(y);
        s += w * (2.0 * nm1 * r).exp() / wedge;
    }
    Ok(s)
}

/// `K(ρ,Φ)(σ, τ)`: integral over the intersection of the two graphs of
/// `e^{2(n−1)ρ}/|N_σ ∧ N_τ|`.
pub fn kernel_value(rho: &Conformal, src: &dyn GraphSource, sigma: &V4, tau: &V4, samples: usize) -> Result<f64> {
    let inter = intersect_graphs(src, sigma, tau, samples)?;
    let es = src.equator(sigma)?;
    let et = src.equator(tau)?;
    kernel_sum(rho, &*es, &*et, &inter)
}

/// Unit vector at distance `r` from σ along the unit tangent `e`.
fn offset(sigma: &V4, e: &V4, r: f64) -> V4 {
    let (s, c) = r.sin_cos();
    vec4::lin2(sigma, c, e, s)
}

/// Polynomial through `(x_j, y_j)` evaluated at 0 (Neville).
fn extrapolate_to_zero(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let m = x.len();
    for k in 1..m {
        for j in 0..m - k {
            p[j] = (x[j + k] * p[j] - x[j] * p[j + 1]) / (x[j + k] - x[j]);
        }
    }
    p[0]
}

/// `lim_{t→0} sin t·K(σ, exp_σ(t·e))` for a unit tangent `e`. The limit
/// depends on the direction of approach (it lives on the blow-up of the
/// diagonal) but not on its sign; the average of `±e` is even in `t` and
/// is extrapolated in `t²` from four shrinking distances.
pub fn kernel_diagonal(rho: &Conformal, src: &dyn GraphSource, sigma: &V4, e: &V4, samples: usize) -> Result<f64> {
    let me = vec4::neg(e);
    let mut xs = Vec::with_capacity(4);
    let mut ys = Vec::with_capacity(4);
    for j in 0..4 {
        let r = 0.08 / (1u32 << j) as f64;
        let a = kernel_value(rho, src, sigma, &offset(sigma, e, r), samples)?;
        let b = kernel_value(rho, src, sigma, &offset(sigma, &me, r), samples)?;
        xs.push(r * r);
        ys.push(0.5 * r.sin() * (a + b));
    }
    Ok(extrapolate_to_zero(&xs, &ys))
}

/// Directional diagonal limits averaged over the half circle of tangent
/// directions (n=2).
pub fn kernel_diagonal_mean(rho: &Conformal, src: &dyn GraphSource, sigma: &V4, samples: usize) -> Result<f64> {
    let frame = equator_frame(2, sigma);
    let m = 8;
    let mut s = 0.0;
    for k in 0..m {
        let (sn, cs) = (PI * k as f64 / m as f64).sin_cos();
        s += kernel_diagonal(rho, src, sigma, &vec4::lin2(&frame[0], cs, &frame[1], sn), samples)?;
    }
    Ok(s / m as f64)
}

/// Discretised `L(k) = ℱ∘ℱ*` for n=2.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub n: usize,
    pub band: usize,
    /// `K(σ_i, σ_j)` over grid representatives, row-major; diagonal slots
    /// are zero.
    pub entries: Vec<f64>,
    /// Per row, the coefficient of the `1/d` singularity on the diagonal
    /// (`lim sin d·K`, averaged over directions), which the polar
    /// quadrature absorbs.
    pub singular_coefficient: Vec<f64>,
    /// The operator on orthonormal coefficients of even harmonics of
    /// degree ≤ `band`.
    pub operator: DMatrix<f64>,
}

/// Polar nodes `(r, θ)` around a row direction and their weights; the
/// measure `K·dτ = k·sin^{n−2}r dr dθ` with `k = sin d·K` is smooth.
fn polar_rule(band: usize) -> (Vec<f64>, Vec<f64>, usize) {
    let (z, wz) = gauss_legendre(band + 12);
    let r: Vec<f64> = z.iter().map(|t| FRAC_PI_2 * 0.5 * (t + 1.0)).collect();
    let w: Vec<f64> = wz.iter().map(|a| FRAC_PI_2 * 0.5 * a).collect();
    (r, w, 2 * band + 2)
}

/// Assembles the kernel operator by polar quadrature around each grid
/// representative (n=2 only).
pub fn assemble_l(setup: &Setup, rho: &HarmonicField, src: &dyn GraphSource, band: usize) -> Result<KernelMatrix> {
    let n = setup.n;
    if n != 2 || src.dim() != 2 {
        return Err(Error::NotImplementedForDimension(n));
    }
    if band > setup.grid.band_limit {
        return Err(Error::Aliasing {
            resolution: 2 * setup.grid.band_limit + 1,
            l: band,
        });
    }
    let basis = HarmonicBasis::new(n, band);
    let evens = even_modes(n, band);
    let ne = evens.len();
    let reps = setup.reps();
    let r = Conformal::new(rho);
    let (radii, rw, nth) = polar_rule(band);
    let dth = 2.0 * PI / nth as f64;
    let width = ne + reps + 2;
    let row = |i: usize, out: &mut [f64]| -> Result<()> {
        let sigma = setup.grid.reps[i];
        let curve = GraphCurve::new(src, &sigma, KERNEL_SAMPLES)?;
        let es = curve.equator();
        let frame = equator_frame(2, &sigma);
        let mut y = vec![0.0; basis.len()];
        for (ra, wa) in radii.iter().zip(&rw) {
            for b in 0..nth {
                let (s, c) = (b as f64 * dth).sin_cos();
                let e = vec4::lin2(&frame[0], c, &frame[1], s);
                let tau = offset(&sigma, &e, *ra);
                let inter = curve.intersect(src, &tau)?;
                let et = src.equator(&tau)?;
                let k = ra.sin() * kernel_sum(&r, es, &*et, &inter)?;
                basis.eval_into(&tau, &mut y);
                let w = wa * dth * k;
                for (o, &m) in out[..ne].iter_mut().zip(&evens) {
                    *o += w * y[m];
                }
            }
        }
        for (j, tau) in setup.grid.reps.iter().enumerate() {
            if j == i {
                continue;
            }
            let inter = curve.intersect(src, tau)?;
            let et = src.equator(tau)?;
            out[ne + j] = kernel_sum(&r, es, &*et, &inter)?;
        }
        out[ne + reps] = kernel_diagonal_mean(&r, src, &sigma, KERNEL_SAMPLES)?;
        Ok(())
    };
    let flat = setup.per_rep(width, &|i, out| {
        if row(i, out).is_err() {
            out[ne + reps + 1] = 1.0;
        }
    });
    if let Some(i) = flat.chunks(width).position(|c| c[ne + reps + 1] != 0.0) {
        // Rerun the failing row here to report its error.
        row(i, &mut vec![0.0; width])?;
        return Err(Error::Mismatch("kernel row failed nondeterministically"));
    }
    let mut entries = vec![0.0; reps * reps];
    let mut singular_coefficient = vec![0.0; reps];
    let mut rows = DMatrix::<f64>::zeros(reps, ne);
    for (i, row) in flat.chunks(width).enumerate() {
        for a in 0..ne {
            rows[(i, a)] = row[a];
        }
        entries[i * reps..(i + 1) * reps].copy_from_slice(&row[ne..ne + reps]);
        singular_coefficient[i] = row[ne + reps];
    }
    let mut proj = DMatrix::<f64>::zeros(ne, reps);
    let mut y = vec![0.0; basis.len()];
    for (i, (s, w)) in setup.grid.reps.iter().zip(&setup.grid.weights).enumerate() {
        basis.eval_into(s, &mut y);
        for (a, &m) in evens.iter().enumerate() {
            proj[(a, i)] = 2.0 * w * y[m];
        }
    }
    Ok(KernelMatrix {
        n,
        band,
        entries,
        singular_coefficient,
        operator: proj * rows,
    })
}

impl KernelMatrix {
    pub fn reps(&self) -> usize {
        self.singular_coefficient.len()
    }

    /// `K(σ_i, σ_j)`; zero on the diagonal.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.reps() + j]
    }

    pub fn apply(&self, f: &HarmonicField) -> Result<HarmonicField> {
        let c = DVector::from_vec(even_coeffs(f, self.band)?);
        let out = &self.operator * c;
        even_field(self.n, self.band, out.as_slice())
    }

    pub fn condition_number(&self) -> f64 {
        condition(&self.operator)
    }

    /// Solves `L·f = b` by dense LU.
    pub fn invert(&self, b: &HarmonicField) -> Result<HarmonicField> {
        let c = self.solve(&even_coeffs(b, self.band)?)?;
        even_field(self.n, self.band, &c)
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        dense_solve(&self.operator, b)
    }
}

fn condition(m: &DMatrix<f64>) -> f64 {
    let s = m.clone().singular_values();
    let hi = s.iter().cloned().fold(0.0f64, f64::max);
    let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// LU solve with conditioning and residual checks.
fn dense_solve(m: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let cond = condition(m);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let rhs = DVector::from_column_slice(b);
    let x = m.clone().full_piv_lu().solve(&rhs).ok_or(Error::Singular(0.0))?;
    let res = (m * &x - &rhs).amax();
    if res > 1e-9 * rhs.amax().max(1.0) {
        return Err(Error::NoConvergence { residual: res });
    }
    Ok(x.iter().copied().collect())
}

/// Eigenvalues of the round Funk transform on degree-`l` harmonics,
/// `l ≤ lmax`, from quadrature of the zonal harmonic over the equator of
/// its axis.
pub fn round_funk_spectrum(n: usize, lmax: usize) -> Result<Vec<f64>> {
    if n != 2 && n != 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let t = ChartTemplate::new(n, 0, 4 * lmax + 6)?;
    let axis = vec4::basis(n);
    let chart = EquatorChart::new(n, &axis);
    let zero = Conformal::zero(n);
    let (pts, wts) = graph_measure(&t, &chart, &zero, &vec![0.0; t.mode_count()]);
    Ok((0..=lmax)
        .map(|l| {
            let f: f64 = pts.iter().zip(&wts).map(|(p, w)| w * zonal(n, l, dot(p, &axis))).sum();
            f / zonal(n, l, 1.0)
        })
        .collect())
}

/// Zonal polynomial of degree `l`: Legendre (n=2) or Chebyshev of the
/// second kind (n=3).
fn zonal(n: usize, l: usize, z: f64) -> f64 {
    let (mut a, mut b) = (1.0, if n == 2 { z } else { 2.0 * z });
    if l == 0 {
        return a;
    }
    for k in 1..l {
        let kf = k as f64;
        let c = if n == 2 {
            ((2.0 * kf + 1.0) * z * b - kf * a) / (kf + 1.0)
        } else {
            2.0 * z * b - a
        };
        a = b;
        b = c;
    }
    b
}

/// How [`right_inverse`] solves the Gram system `ℱℱ*·g = b`.
#[derive(Clone, Copy, Debug)]
pub enum InverseRoute<'a> {
    /// Direct LU on the discrete `ℱ∘ℱ*`.
    Gram,
    /// Defect correction preconditioned by the kernel operator.
    Kernel(&'a KernelMatrix),
}

/// `ℛ(ρ,Φ)(b) = ℱ*(ℱℱ*)⁻¹ b` within harmonics of degree ≤ band of `b`,
/// so that the grid projection of `ℱ(ℛ b)` reproduces `b`.
pub fn right_inverse(
    setup: &Setup,
    rho: &HarmonicField,
    phi: &TangentGraphField,
    b: &HarmonicField,
    route: InverseRoute,
) -> Result<HarmonicField> {
    let band = b.lmax();
    let bv = even_coeffs(b, band)?;
    let n = setup.n;
    if bv.iter().all(|c| *c == 0.0) {
        return Ok(HarmonicField::zero(n, band));
    }
    let fm = forward_matrix(setup, rho, phi, band)?;
    let a = fm.coefficient_map(setup);
    let gram = (&a * a.transpose()) * 0.5;
    let g = match route {
        InverseRoute::Gram => dense_solve(&gram, &bv)?,
        InverseRoute::Kernel(km) => {
            if km.band != band || km.n != n {
                return Err(Error::Mismatch("kernel operator band differs from right-hand side"));
            }
            let rhs = DVector::from_column_slice(&bv);
            let scale = rhs.amax();
            let mut g = DVector::<f64>::zeros(bv.len());
            let mut res = f64::INFINITY;
            for _ in 0..100 {
                let r = &rhs - &gram * &g;
                res = r.amax();
                if res <= 1e-13 * scale {
                    break;
                }
                g += DVector::from_vec(km.solve(r.as_slice())?);
            }
            if res > 1e-13 * scale {
                return Err(Error::NoConvergence { residual: res / scale });
            }
            g.iter().copied().collect()
        }
    };
    let f = a.transpose() * DVector::from_vec(g) * 0.5;
    Ok(HarmonicField::from_coeffs(n, band, Parity::Any, f.iter().copied().collect())?.detect_parity())
}

/// `½∫_{Σ_σ} tr_{Σ_σ} h dA` at every representative, for the round metric
/// and the round equators. `h(p)` is an ambient symmetric matrix whose
/// restriction to `T_pSⁿ` is the tensor.
pub fn tensor_funk(setup: &Setup, h: &(dyn Fn(&V4) -> M4 + Sync)) -> Vec<f64> {
    let n = setup.n;
    let t = &setup.template;
    setup.per_rep(1, &|i, out| {
        let chart = &setup.charts[i];
        let mut s = 0.0;
        for k in 0..t.node_count() {
            let x = chart.node(t, k);
            let m = h(&x);
            let tr: f64 = orthogonal_complement(n, &[x, chart.v])
                .iter()
                .map(|e| dot(e, &mat_vec(&m, e)))
                .sum();
            s += t.weights[k] * tr;
        }
        out[0] = 0.5 * s;
    })
}

/// Measure of Σ*_p in ℝPⁿ, `ω_{n−1}/2`.
pub fn dual_equator_measure(n: usize) -> f64 {
    0.5 * sphere_volume(n - 1)
}
