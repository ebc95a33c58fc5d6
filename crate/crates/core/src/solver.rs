//! Newton corrector for Zoll families of minimal graphs in conformal
//! metrics `e^{2ρ}can`.
//!
//! The unknowns are a band-limited conformal factor ρ and a centered graph
//! field Φ. The residual map is `Λ = (Λ₁, Λ₂)` with `Λ₁` the band-limited
//! area profile minus its mean and `Λ₂ = ℋ − jC(ℋ)`. Corrections come from
//! the approximate right inverse `V`, built from the right inverse of the
//! Funk transform and the per-equator Jacobi solution map; band truncation
//! at `L` acts as the smoothing step.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::funk::{right_inverse, InverseRoute, KERNEL_SAMPLES};
use crate::graphs::{
    graph_coordinates, graph_normal, intersect_graphs, EquatorGraph, GraphSource, Subspace, TangentGraphField,
};
use crate::setup::Setup;
use crate::sphere::harmonics::laplace_eigenvalue;
use crate::sphere::quadrature::sphere_volume;
use crate::sphere::HarmonicField;
use crate::variational::{area_profile, center_map, d1h, el_operator, el_operator_nodes, j_embed, solution_map};
use crate::vec4::{self, dot, reject, V4};

/// Continuation step in `t` for [`deform`].
pub const CONTINUATION_STEP: f64 = 0.05;

/// Residual sizes and area statistics of a state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub lambda1_inf: f64,
    pub lambda2_inf: f64,
    pub area_mean: f64,
    pub area_spread: f64,
    pub iterations: usize,
}

impl Diagnostics {
    pub fn residual(&self) -> f64 {
        self.lambda1_inf + self.lambda2_inf
    }
}

/// `(ρ, Φ)` with Φ centered; diagnostics are recomputed on construction.
#[derive(Clone, Debug)]
pub struct ZollState {
    rho: HarmonicField,
    phi: TangentGraphField,
    diagnostics: Diagnostics,
}

impl ZollState {
    pub fn new(setup: &Setup, rho: HarmonicField, phi: TangentGraphField) -> Result<Self> {
        if rho.n() != setup.n || phi.n != setup.n {
            return Err(Error::Mismatch("state lives on a different sphere"));
        }
        if rho.lmax() > setup.lmax {
            return Err(Error::Mismatch("conformal factor exceeds the band limit"));
        }
        if phi.subspace != Subspace::ZeroOdd {
            return Err(Error::NotCentered);
        }
        let rho = rho.resized(setup.lmax);
        let lam = lambda_map(setup, &rho, &phi)?;
        let prof = area_profile(setup, &rho, &phi);
        let diagnostics = Diagnostics {
            lambda1_inf: lam.area_sup(setup),
            lambda2_inf: lam.el_sup(setup),
            area_mean: prof.mean,
            area_spread: prof.spread,
            iterations: 0,
        };
        Ok(ZollState { rho, phi, diagnostics })
    }

    pub fn round(setup: &Setup) -> Self {
        let prof = area_profile(setup, &HarmonicField::zero(setup.n, setup.lmax), &TangentGraphField::zero(setup));
        ZollState {
            rho: HarmonicField::zero(setup.n, setup.lmax),
            phi: TangentGraphField::zero(setup),
            diagnostics: Diagnostics {
                area_mean: prof.mean,
                area_spread: prof.spread,
                ..Diagnostics::default()
            },
        }
    }

    pub fn rho(&self) -> &HarmonicField {
        &self.rho
    }

    pub fn phi(&self) -> &TangentGraphField {
        &self.phi
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    fn with_iterations(mut self, k: usize) -> Self {
        self.diagnostics.iterations = k;
        self
    }
}

/// Value of the residual map.
#[derive(Clone, Debug)]
pub struct Lambda {
    /// Even field of degree ≤ L without constant term.
    pub area: HarmonicField,
    /// Centered graph field.
    pub el: TangentGraphField,
}

impl Lambda {
    /// Sup of `Λ₁` over the grid representatives.
    pub fn area_sup(&self, setup: &Setup) -> f64 {
        sup(&self.area.sample(&setup.grid.reps))
    }

    /// Sup of `Λ₂` over all chart nodes.
    pub fn el_sup(&self, setup: &Setup) -> f64 {
        graph_sup(setup, &self.el)
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn graph_sup(setup: &Setup, f: &TangentGraphField) -> f64 {
    let t = &setup.template;
    f.all_modes().iter().map(|m| sup(&t.synthesize(m))).fold(0.0, f64::max)
}

/// `Ψ − jC(Ψ)`, flagged centered.
pub fn remove_center(setup: &Setup, psi: &TangentGraphField) -> Result<TangentGraphField> {
    let c = j_embed(setup, &center_map(setup, psi))?;
    Ok(psi.axpy(-1.0, &c)?.project_zero_odd(setup))
}

/// `Λ(ρ, Φ) = (P_L𝒜 − mean, ℋ − jC(ℋ))`.
pub fn lambda_map(setup: &Setup, rho: &HarmonicField, phi: &TangentGraphField) -> Result<Lambda> {
    phi.check_small(setup)?;
    let prof = area_profile(setup, rho, phi);
    let area = HarmonicField::project_even(&setup.grid, &prof.values, setup.lmax)?.without_degree(0);
    let el = remove_center(setup, &el_operator(setup, rho, phi)?)?;
    Ok(Lambda { area, el })
}

/// `V(ρ,Φ)(b, ψ) = (ℛ(b)/(n−1), 𝒮(ψ − (D₁ℋ·f − jC(D₁ℋ·f))))`.
pub fn approx_right_inverse(
    setup: &Setup,
    rho: &HarmonicField,
    phi: &TangentGraphField,
    b: &HarmonicField,
    psi: &TangentGraphField,
) -> Result<(HarmonicField, TangentGraphField)> {
    if psi.subspace != Subspace::ZeroOdd {
        return Err(Error::NotCentered);
    }
    if b.lmax() > setup.lmax && b.max_abs_coeff() > 0.0 {
        let tail = b.axpy(-1.0, &b.resized(setup.lmax))?.max_abs_coeff();
        if tail > 0.0 {
            return Err(Error::Mismatch("right-hand side exceeds the band limit"));
        }
    }
    let b = b.resized(setup.lmax);
    if b.coeffs()[0].abs() > 1e-10 * b.max_abs_coeff().max(1.0) {
        return Err(Error::InvalidParameter("area right-hand side must have zero mean"));
    }
    let nm1 = (setup.n - 1) as f64;
    let f = right_inverse(setup, rho, phi, &b, InverseRoute::Gram)?
        .resized(setup.lmax)
        .scaled(1.0 / nm1);
    let coupled = remove_center(setup, &d1h(setup, rho, phi, &f)?)?;
    let rhs = psi.axpy(-1.0, &coupled)?.project_zero_odd(setup);
    let phi_corr = solution_map(setup, rho, phi, &rhs)?;
    Ok((f, phi_corr))
}

/// First component of the quadratic error
/// `Q(ψ̃; b, ψ)_v = ∫_{Σ_v} ψ̃·V₂(b, ψ)`, band-limited and without mean.
/// The second component vanishes identically and the first does not
/// depend on the area part of the first argument.
pub fn quadratic_error(
    setup: &Setup,
    rho: &HarmonicField,
    phi: &TangentGraphField,
    psi_tilde: &TangentGraphField,
    b: &HarmonicField,
    psi: &TangentGraphField,
) -> Result<HarmonicField> {
    let (_, v2) = approx_right_inverse(setup, rho, phi, b, psi)?;
    Ok(equator_pairing(setup, psi_tilde, &v2)?.without_degree(0))
}

/// `σ ↦ ∫_{Σ_σ} a·b` over the round equators, projected to even degree ≤ L.
pub fn equator_pairing(setup: &Setup, a: &TangentGraphField, b: &TangentGraphField) -> Result<HarmonicField> {
    let t = &setup.template;
    let vals = setup.per_rep(1, &|i, out| {
        let fa = t.synthesize(a.modes(i));
        let fb = t.synthesize(b.modes(i));
        out[0] = fa.iter().zip(&fb).zip(&t.weights).map(|((x, y), w)| w * x * y).sum();
    });
    HarmonicField::project_even(&setup.grid, &vals, setup.lmax)
}

/// Kernel element of `DΛ(0,0)` over `f` (odd plus a constant): solves
/// `Δφ_v + (n−1)φ_v = (n−1)⟨∇f, v⟩` on every equator.
pub fn kernel_seed(setup: &Setup, f: &HarmonicField) -> Result<TangentGraphField> {
    let n = setup.n;
    let scale = f.max_abs_coeff().max(1.0);
    for (c, &l) in f.coeffs().iter().zip(f.basis().degrees()) {
        if l > 0 && l % 2 == 0 && c.abs() > 1e-12 * scale {
            return Err(Error::InvalidParameter("kernel seed needs an odd field plus a constant"));
        }
    }
    let nm1 = (n - 1) as f64;
    let t = &setup.template;
    let m = t.mode_count();
    let lin = t.linear_modes();
    let degs = t.basis.degrees().to_vec();
    let fe = f.evaluator();
    let flat = setup.per_rep(m + 1, &|i, out| {
        let chart = &setup.charts[i];
        let vals: Vec<f64> = (0..t.node_count())
            .map(|k| nm1 * dot(&fe.gradient(&chart.node(t, k)), &chart.v))
            .collect();
        let rhs = t.analyze(&vals);
        out[m] = sup(&rhs[lin.clone()]);
        for (j, r) in rhs.iter().enumerate() {
            out[j] = if lin.contains(&j) {
                0.0
            } else {
                r / (laplace_eigenvalue(n - 1, degs[j]) + nm1)
            };
        }
    });
    let worst = flat.chunks(m + 1).map(|c| c[m]).fold(0.0, f64::max);
    if worst > 1e-8 {
        return Err(Error::Resonance {
            degree: 1,
            magnitude: worst,
        });
    }
    let modes: Vec<Vec<f64>> = flat.chunks(m + 1).map(|c| c[..m].to_vec()).collect();
    Ok(TangentGraphField::from_modes(setup, modes)?.project_zero_odd(setup))
}

/// One line of the corrector trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    /// Continuation stage (1-based).
    pub stage: usize,
    /// Corrector step within the stage; 0 is the predicted state.
    pub iter: usize,
    pub t: f64,
    pub lambda1_inf: f64,
    pub lambda2_inf: f64,
    pub area_mean: f64,
    pub area_spread: f64,
}

/// Result of [`deform`].
#[derive(Clone, Debug)]
pub struct Deformation {
    pub state: ZollState,
    pub trace: Vec<IterationRecord>,
    /// Ratios of successive residuals within each stage.
    pub contraction: Vec<f64>,
}

/// Solves `Λ(ρ, Φ) = 0` along `t ↦ (t·ρ̇, t·kernel_seed(ρ̇))`, with
/// continuation steps of at most [`CONTINUATION_STEP`] and at most
/// `max_iter` corrector steps per stage.
pub fn deform(setup: &Setup, rho_dot: &HarmonicField, t: f64, tol: f64, max_iter: usize) -> Result<Deformation> {
    if !(t.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter("deformation needs finite t and positive tolerance"));
    }
    if rho_dot.n() != setup.n {
        return Err(Error::Mismatch("deformation direction lives on a different sphere"));
    }
    let scale = rho_dot.max_abs_coeff().max(1.0);
    for (c, &l) in rho_dot.coeffs().iter().zip(rho_dot.basis().degrees()) {
        if l % 2 == 0 && c.abs() > 1e-12 * scale {
            return Err(Error::InvalidParameter("deformation direction must be odd"));
        }
        if l > setup.lmax && c.abs() > 0.0 {
            return Err(Error::Mismatch("deformation direction exceeds the band limit"));
        }
    }
    let rho_dot = rho_dot.resized(setup.lmax);
    if t == 0.0 || rho_dot.max_abs_coeff() == 0.0 {
        let state = ZollState::round(setup);
        let d = state.diagnostics;
        return Ok(Deformation {
            state,
            trace: vec![IterationRecord {
                stage: 1,
                iter: 0,
                t,
                lambda1_inf: 0.0,
                lambda2_inf: 0.0,
                area_mean: d.area_mean,
                area_spread: d.area_spread,
            }],
            contraction: Vec::new(),
        });
    }
    let seed = kernel_seed(setup, &rho_dot)?;
    let stages = ((t.abs() / CONTINUATION_STEP) - 1e-9).ceil().max(1.0) as usize;
    let dt = t / stages as f64;
    let mut rho = HarmonicField::zero(setup.n, setup.lmax);
    let mut phi = TangentGraphField::zero(setup);
    let mut trace = Vec::new();
    let mut contraction = Vec::new();
    let mut total = 0;
    for stage in 1..=stages {
        let ts = dt * stage as f64;
        rho = rho.axpy(dt, &rho_dot)?;
        phi = phi.axpy(dt, &seed)?.project_zero_odd(setup);
        let mut prev = f64::INFINITY;
        let mut first = f64::NAN;
        for iter in 0..=max_iter {
            phi.check_small(setup).map_err(|_| Error::Diverged(total))?;
            let lam = lambda_map(setup, &rho, &phi)?;
            let prof = area_profile(setup, &rho, &phi);
            let rec = IterationRecord {
                stage,
                iter,
                t: ts,
                lambda1_inf: lam.area_sup(setup),
                lambda2_inf: lam.el_sup(setup),
                area_mean: prof.mean,
                area_spread: prof.spread,
            };
            trace.push(rec);
            let res = rec.lambda1_inf + rec.lambda2_inf;
            if !res.is_finite() {
                return Err(Error::Diverged(total));
            }
            if iter == 0 {
                first = res;
            } else {
                contraction.push(res / prev);
            }
            if res < tol {
                break;
            }
            if iter == max_iter {
                return Err(Error::NoConvergence { residual: res });
            }
            if res > 1e3 * first.max(tol) {
                return Err(Error::Diverged(total));
            }
            prev = res;
            let (f, p) = approx_right_inverse(setup, &rho, &phi, &lam.area, &lam.el)?;
            rho = rho.axpy(-1.0, &f)?.resized(setup.lmax);
            phi = phi.axpy(-1.0, &p)?.project_zero_odd(setup);
            total += 1;
        }
    }
    let state = ZollState::new(setup, rho, phi)?.with_iterations(total);
    Ok(Deformation {
        state,
        trace,
        contraction,
    })
}

/// Rescales ρ by a constant so that the mean area is `ω_{n−1}`.
pub fn normalize_zprime(setup: &Setup, state: &ZollState) -> Result<ZollState> {
    let n = setup.n;
    let mean = area_profile(setup, &state.rho, &state.phi).mean;
    if !(mean > 0.0) {
        return Err(Error::InvalidParameter("area profile must be positive"));
    }
    let c = (sphere_volume(n - 1) / mean).ln() / (n - 1) as f64;
    let rho = state.rho.add_constant(c);
    let iters = state.diagnostics.iterations;
    Ok(ZollState::new(setup, rho, state.phi.clone())?.with_iterations(iters))
}

/// Odd solution in the complement of degree one of
/// `Δf + n·f = −r/(2(n−1))`.
pub fn isometry_breaking_seed(r: &HarmonicField) -> Result<HarmonicField> {
    let n = r.n();
    let scale = r.max_abs_coeff().max(1.0);
    for (c, &l) in r.coeffs().iter().zip(r.basis().degrees()) {
        if l % 2 == 0 && c.abs() > 1e-12 * scale {
            return Err(Error::InvalidParameter("source must be odd"));
        }
    }
    let rhs = r.scaled(-0.5 / (n - 1) as f64);
    Ok(rhs
        .helmholtz_solve(n as f64, false, 1e-12 * scale)?
        .detect_parity())
}

/// A posteriori check of a state, meant for a setup with refined charts
/// (see [`Setup::with_chart_nodes`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZollReport {
    /// Sup of `|ℋ|` over all chart nodes.
    pub el_residual: f64,
    pub area_mean: f64,
    pub area_spread: f64,
    /// Sup of the center map of ℋ.
    pub center_norm: f64,
    /// Smallest `|N_σ ∧ N_τ| / sin∠(σ,τ)` over sampled intersections; 1
    /// for the round family, 0 when two members touch.
    pub transversality: f64,
    pub pairs_checked: usize,
    pub pairs_failed: usize,
}

impl ZollReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.el_residual < tol && self.area_spread < tol && self.pairs_failed == 0
    }
}

/// Pairs of representatives used for the transversality sample.
pub const TRANSVERSALITY_PAIRS: usize = 16;

pub fn verify_zoll(setup: &Setup, state: &ZollState) -> Result<ZollReport> {
    let rho = &state.rho;
    let phi = &state.phi;
    if phi.reps() != setup.reps() || rho.n() != setup.n {
        return Err(Error::Mismatch("state does not match the verification setup"));
    }
    let h = el_operator_nodes(setup, rho, phi);
    let prof = area_profile(setup, rho, phi);
    let center = center_map(setup, &el_operator(setup, rho, phi)?).max_norm();
    let src = phi.on(setup);
    let reps = &setup.grid.reps;
    let r = reps.len();
    let mut checked = 0;
    let mut failed = 0;
    let mut worst = f64::INFINITY;
    for k in 0..TRANSVERSALITY_PAIRS {
        let i = k * r / TRANSVERSALITY_PAIRS;
        let j = (i + r / 2 + 3 * k + 1) % r;
        let s = vec4::sin_angle(&reps[i], &reps[j]);
        if i == j || s < 1e-3 {
            continue;
        }
        checked += 1;
        match transversality(&src, &reps[i], &reps[j]) {
            Ok(w) if w > 0.1 => worst = worst.min(w / s),
            Ok(w) => {
                worst = worst.min(w / s);
                failed += 1;
            }
            Err(_) => failed += 1,
        }
    }
    Ok(ZollReport {
        el_residual: sup(&h),
        area_mean: prof.mean,
        area_spread: prof.spread,
        center_norm: center,
        transversality: if worst.is_finite() { worst } else { 0.0 },
        pairs_checked: checked,
        pairs_failed: failed,
    })
}

fn unit_normal(eq: &dyn EquatorGraph, y: &V4) -> Result<V4> {
    let v = eq.direction();
    let (_, x) = graph_coordinates(&v, y)?;
    let (u, g) = eq.jet(&x);
    Ok(graph_normal(&v, &x, u, &g))
}

/// Smallest `|N_σ ∧ N_τ|` over the intersection of two graphs.
fn transversality(src: &dyn GraphSource, sigma: &V4, tau: &V4) -> Result<f64> {
    let inter = intersect_graphs(src, sigma, tau, KERNEL_SAMPLES)?;
    let es = src.equator(sigma)?;
    let et = src.equator(tau)?;
    let mut m = f64::INFINITY;
    for y in &inter.points {
        let ns = unit_normal(&*es, y)?;
        let nt = unit_normal(&*et, y)?;
        m = m.min(vec4::norm(&reject(&nt, &ns)));
    }
    Ok(m)
}

/// Sup of `|Λ|` for an arbitrary `(ρ, Φ)`, or `None` outside the
/// admissible set.
pub fn residual_norm(setup: &Setup, rho: &HarmonicField, phi: &TangentGraphField) -> Option<f64> {
    let lam = lambda_map(setup, rho, phi).ok()?;
    Some(lam.area_sup(setup) + lam.el_sup(setup))
}
