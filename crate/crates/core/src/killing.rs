//! Killing symmetric two-tensors of the round sphere, the metrics with
//! minimal equators they induce (`g_k = k/D_k`), the equator-minimality
//! residual and the linearised `GL(n+1)` action on tensors of S³.
//!
//! Killing fields are skew matrices `A` acting by `p ↦ Ap`. A tensor field
//! is an ambient symmetric matrix `M(p)`; only its restriction to `T_pSⁿ`
//! matters.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::graphs::orthogonal_complement;
use crate::sphere::{HarmonicField, SphereGrid};
use crate::vec4::{self, dot, mat_vec, M4, V4};

/// Symmetric two-tensor field on Sⁿ given by an ambient matrix.
pub trait AmbientTensor: Sync {
    fn dim(&self) -> usize;
    fn value(&self, p: &V4) -> M4;
    /// Directional derivative `D_z M(p)` of the ambient matrix.
    fn derivative(&self, p: &V4, z: &V4) -> M4;

    fn eval(&self, p: &V4, u: &V4, w: &V4) -> f64 {
        dot(u, &mat_vec(&self.value(p), w))
    }

    /// `(∇^{can}_z k)(x, y)` for tangent `x, y, z` at `p`.
    fn covariant(&self, p: &V4, z: &V4, x: &V4, y: &V4) -> f64 {
        let m = self.value(p);
        let dm = self.derivative(p, z);
        dot(x, &mat_vec(&dm, y)) - dot(z, x) * dot(p, &mat_vec(&m, y)) - dot(z, y) * dot(x, &mat_vec(&m, p))
    }
}

fn outer_sym(a: &V4, b: &V4) -> M4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = a[i] * b[j] + b[i] * a[j];
        }
    }
    m
}

fn madd(a: &mut M4, s: f64, b: &M4) {
    for i in 0..4 {
        for j in 0..4 {
            a[i][j] += s * b[i][j];
        }
    }
}

fn matmul(a: &M4, b: &M4) -> M4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

fn transpose(a: &M4) -> M4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = a[j][i];
        }
    }
    m
}

fn trace(a: &M4) -> f64 {
    (0..4).map(|i| a[i][i]).sum()
}

fn quaternion_product(a: &V4, b: &V4) -> V4 {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

/// `(X_i, X_j, X_k, Y_i, Y_j, Y_k)` with `X_q(p) = p·q`, `Y_q(p) = q·p`.
pub fn quaternion_frame() -> [M4; 6] {
    let mut out = [[[0.0; 4]; 4]; 6];
    for q in 0..3 {
        let unit = vec4::basis(q + 1);
        for c in 0..4 {
            let e = vec4::basis(c);
            let right = quaternion_product(&e, &unit);
            let left = quaternion_product(&unit, &e);
            for r in 0..4 {
                out[q][r][c] = right[r];
                out[3 + q][r][c] = left[r];
            }
        }
    }
    out
}

/// `e_a e_bᵀ − e_b e_aᵀ` for `a < b ≤ n`.
pub fn rotation_generators(n: usize) -> Vec<M4> {
    let mut out = Vec::new();
    for a in 0..=n {
        for b in a + 1..=n {
            let mut m = [[0.0; 4]; 4];
            m[a][b] = 1.0;
            m[b][a] = -1.0;
            out.push(m);
        }
    }
    out
}

/// Number of products `W_p ⊙ W_q` with `p ≤ q`.
pub const QUATERNION_COEFFS: usize = 21;

/// Index of `(p, q)`, `p ≤ q < 6`, in the 21-coefficient layout.
pub fn pair_index(p: usize, q: usize) -> usize {
    let (p, q) = if p <= q { (p, q) } else { (q, p) };
    6 * p - p * p.saturating_sub(1) / 2 + q - p
}

fn pairs() -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(QUATERNION_COEFFS);
    for p in 0..6 {
        for q in p..6 {
            v.push((p, q));
        }
    }
    v
}

/// `Σ c·(K_a ⊙ K_b)` with Killing fields given as skew matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct KillingTwoTensor {
    pub n: usize,
    pub terms: Vec<(f64, M4, M4)>,
    /// Coefficients over `{W_p ⊙ W_q : p ≤ q}` when built from the
    /// quaternion frame (n=3).
    pub quaternion: Option<Vec<f64>>,
}

fn is_skew(a: &M4, n: usize) -> bool {
    (0..4).all(|i| {
        (0..4).all(|j| {
            let outside = i > n || j > n;
            (a[i][j] + a[j][i]).abs() < 1e-14 && (!outside || a[i][j] == 0.0)
        })
    })
}

impl KillingTwoTensor {
    pub fn new(n: usize, terms: Vec<(f64, M4, M4)>) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::UnsupportedDimension(n));
        }
        if terms.iter().any(|(_, a, b)| !is_skew(a, n) || !is_skew(b, n)) {
            return Err(Error::InvalidParameter("Killing fields must be skew matrices on the ambient space"));
        }
        Ok(KillingTwoTensor {
            n,
            terms,
            quaternion: None,
        })
    }

    /// `Σ_{p≤q} c_{pq} W_p ⊙ W_q` on S³.
    pub fn from_quaternion(coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != QUATERNION_COEFFS {
            return Err(Error::Mismatch("expected 21 quaternion-frame coefficients"));
        }
        let w = quaternion_frame();
        let terms = pairs()
            .into_iter()
            .zip(coeffs)
            .filter(|(_, c)| **c != 0.0)
            .map(|((p, q), c)| (*c, w[p], w[q]))
            .collect();
        Ok(KillingTwoTensor {
            n: 3,
            terms,
            quaternion: Some(coeffs.to_vec()),
        })
    }

    /// The round metric, `½ Σ_{a<b} E_ab ⊙ E_ab`.
    pub fn canonical(n: usize) -> Result<Self> {
        let terms = rotation_generators(n).into_iter().map(|a| (0.5, a, a)).collect();
        Self::new(n, terms)
    }

    pub fn scaled(&self, s: f64) -> Self {
        KillingTwoTensor {
            n: self.n,
            terms: self.terms.iter().map(|(c, a, b)| (s * c, *a, *b)).collect(),
            quaternion: self.quaternion.as_ref().map(|q| q.iter().map(|c| s * c).collect()),
        }
    }

    /// `self + s·other`.
    pub fn add(&self, s: f64, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Mismatch("tensors live on different spheres"));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|(c, a, b)| (s * c, *a, *b)));
        let quaternion = match (&self.quaternion, &other.quaternion) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x + s * y).collect()),
            _ => None,
        };
        Ok(KillingTwoTensor {
            n: self.n,
            terms,
            quaternion,
        })
    }
}

impl AmbientTensor for KillingTwoTensor {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, p: &V4) -> M4 {
        let mut m = [[0.0; 4]; 4];
        for (c, a, b) in &self.terms {
            madd(&mut m, *c, &outer_sym(&mat_vec(a, p), &mat_vec(b, p)));
        }
        m
    }

    fn derivative(&self, p: &V4, z: &V4) -> M4 {
        let mut m = [[0.0; 4]; 4];
        for (c, a, b) in &self.terms {
            let (ap, bp) = (mat_vec(a, p), mat_vec(b, p));
            madd(&mut m, *c, &outer_sym(&mat_vec(a, z), &bp));
            madd(&mut m, *c, &outer_sym(&ap, &mat_vec(b, z)));
        }
        m
    }
}

/// `f·k` for a scalar field `f`; not Killing unless `f` is constant.
pub struct ScaledTensor<'a, K: AmbientTensor> {
    pub weight: &'a HarmonicField,
    pub base: &'a K,
}

impl<K: AmbientTensor> AmbientTensor for ScaledTensor<'_, K> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, p: &V4) -> M4 {
        let mut m = [[0.0; 4]; 4];
        madd(&mut m, self.weight.eval(p), &self.base.value(p));
        m
    }

    fn derivative(&self, p: &V4, z: &V4) -> M4 {
        let df = dot(&self.weight.gradient(p), z);
        let mut m = [[0.0; 4]; 4];
        madd(&mut m, df, &self.base.value(p));
        madd(&mut m, self.weight.eval(p), &self.base.derivative(p, z));
        m
    }
}

/// `k̄ = ½Σα_i X_i⊙X_i + ½Σβ_i Y_i⊙Y_i` with
/// `α₁ > α₂ > α₃ > β₁ > β₂ > β₃ > 0`, checked positive definite on a
/// sample grid.
pub fn diag_tensor(alpha: [f64; 3], beta: [f64; 3]) -> Result<KillingTwoTensor> {
    let w = [alpha[0], alpha[1], alpha[2], beta[0], beta[1], beta[2]];
    if !(w.windows(2).all(|p| p[0] > p[1]) && w[5] > 0.0) {
        return Err(Error::InvalidParameter("weights must satisfy α₁>α₂>α₃>β₁>β₂>β₃>0"));
    }
    let mut c = vec![0.0; QUATERNION_COEFFS];
    for (p, wp) in w.iter().enumerate() {
        c[pair_index(p, p)] = 0.5 * wp;
    }
    let k = KillingTwoTensor::from_quaternion(&c)?;
    let lo = min_eigenvalue(&k, &sample_points(3));
    if lo <= 0.0 {
        return Err(Error::NotPositiveDefinite(lo));
    }
    Ok(k)
}

/// Deterministic sample points (a product Gauss grid).
pub fn sample_points(n: usize) -> Vec<V4> {
    SphereGrid::new(n, 6).map(|g| g.points).unwrap_or_default()
}

/// Components `[k(e_a, e_b)]` in the can-orthonormal frame at `p`.
fn frame_matrix(k: &dyn AmbientTensor, p: &V4, frame: &[V4]) -> DMatrix<f64> {
    let m = k.value(p);
    DMatrix::from_fn(frame.len(), frame.len(), |a, b| dot(&frame[a], &mat_vec(&m, &frame[b])))
}

/// `[(∇_z k)(e_a, e_b)]`.
fn frame_derivative(k: &dyn AmbientTensor, p: &V4, z: &V4, frame: &[V4]) -> DMatrix<f64> {
    DMatrix::from_fn(frame.len(), frame.len(), |a, b| k.covariant(p, z, &frame[a], &frame[b]))
}

/// Smallest eigenvalue of `k` over the tangent spaces at `points`.
pub fn min_eigenvalue(k: &dyn AmbientTensor, points: &[V4]) -> f64 {
    let n = k.dim();
    points
        .iter()
        .map(|p| {
            let fr = orthogonal_complement(n, &[*p]);
            frame_matrix(k, p, &fr).symmetric_eigenvalues().min()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Sup over sample points of the frame components of `(∇^{can}k)^S`.
pub fn killing_defect(k: &dyn AmbientTensor, points: &[V4]) -> f64 {
    let n = k.dim();
    let mut worst = 0.0f64;
    for p in points {
        let fr = orthogonal_complement(n, &[*p]);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let (x, y, z) = (&fr[a], &fr[b], &fr[c]);
                    let s = k.covariant(p, z, x, y) + k.covariant(p, x, y, z) + k.covariant(p, y, z, x);
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

/// Metric `g_k = k/D_k` with `dV_k = D_k^{(n−1)/4} dV_can`, i.e.
/// `D_k = det(k)^{2/(n−1)}` in a can-orthonormal frame.
pub struct MetricField<K: AmbientTensor> {
    pub k: K,
}

impl<K: AmbientTensor> MetricField<K> {
    pub fn new(k: K) -> Result<Self> {
        let lo = min_eigenvalue(&k, &sample_points(k.dim()));
        if !(lo > 0.0) {
            return Err(Error::NotPositiveDefinite(lo));
        }
        Ok(MetricField { k })
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    fn frame(&self, p: &V4) -> Vec<V4> {
        orthogonal_complement(self.dim(), &[*p])
    }

    /// `D_k(p)`.
    pub fn conformal_divisor(&self, p: &V4) -> f64 {
        let n = self.dim();
        frame_matrix(&self.k, p, &self.frame(p)).determinant().powf(2.0 / (n - 1) as f64)
    }

    /// Ambient matrix of `g` at `p` (restrict to `T_pSⁿ`).
    pub fn metric(&self, p: &V4) -> M4 {
        let d = self.conformal_divisor(p);
        let mut m = [[0.0; 4]; 4];
        madd(&mut m, 1.0 / d, &self.k.value(p));
        m
    }

    /// `dV_g / dV_can`.
    pub fn volume_density(&self, p: &V4) -> f64 {
        let g = self.metric(p);
        let fr = self.frame(p);
        DMatrix::from_fn(fr.len(), fr.len(), |a, b| dot(&fr[a], &mat_vec(&g, &fr[b])))
            .determinant()
            .sqrt()
    }

    /// `F_g` with `dV_g = F_g^{(n+1)/4} dV_can`.
    pub fn volume_factor(&self, p: &V4) -> f64 {
        let n = self.dim() as f64;
        self.volume_density(p).powf(4.0 / (n + 1.0))
    }

    /// `k_g = g/F_g`, which reproduces `k`.
    pub fn killing_of_metric(&self, p: &V4) -> M4 {
        let mut m = [[0.0; 4]; 4];
        madd(&mut m, 1.0 / self.volume_factor(p), &self.metric(p));
        m
    }
}

/// Sup over sample points of the frame components of
/// `(∇^{can}g − 4/(n+1)·d log ψ ⊗ g)^S`, `ψ = dV_g/dV_can`, with `∇g`
/// in closed form from `∇k`.
pub fn equator_residual<K: AmbientTensor>(g: &MetricField<K>, points: &[V4]) -> f64 {
    let n = g.dim();
    let nf = n as f64;
    let mut worst = 0.0f64;
    for p in points {
        let fr = orthogonal_complement(n, &[*p]);
        let km = frame_matrix(&g.k, p, &fr);
        let kinv = match km.clone().try_inverse() {
            Some(m) => m,
            None => return f64::INFINITY,
        };
        let d = km.determinant().powf(2.0 / (n - 1) as f64);
        let gm = &km / d;
        // ∇_{e_c} g and d log ψ(e_c) in the frame.
        let mut dg = Vec::with_capacity(n);
        let mut dpsi = Vec::with_capacity(n);
        for z in &fr {
            let dk = frame_derivative(&g.k, p, z, &fr);
            let tr = (&kinv * &dk).trace();
            let dlog_d = 2.0 / (n - 1) as f64 * tr;
            dg.push((&dk - &km * dlog_d) / d);
            dpsi.push(0.5 * (tr - nf * dlog_d));
        }
        let c = 4.0 / (nf + 1.0);
        let t = |a: usize, b: usize, z: usize| dg[z][(a, b)] - c * dpsi[z] * gm[(a, b)];
        for a in 0..n {
            for b in 0..n {
                for z in 0..n {
                    let s = t(a, b, z) + t(b, z, a) + t(z, a, b);
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

/// `tr_can h` and `div_can h` at `p` for a tensor field `h`.
pub fn trace_and_divergence(h: &dyn AmbientTensor, p: &V4) -> (f64, V4) {
    let n = h.dim();
    let fr = orthogonal_complement(n, &[*p]);
    let m = h.value(p);
    let tr = fr.iter().map(|e| dot(e, &mat_vec(&m, e))).sum();
    let mut div = vec4::ZERO;
    for y in &fr {
        let s: f64 = fr.iter().map(|e| h.covariant(p, e, e, y)).sum();
        div = vec4::axpy(&div, s, y);
    }
    (tr, div)
}

/// Basis of trace-free 4×4 matrices: off-diagonal units, then
/// `E_aa − E_{a+1,a+1}`.
pub fn traceless_basis() -> Vec<M4> {
    let mut out = Vec::with_capacity(15);
    for a in 0..4 {
        for b in 0..4 {
            if a != b {
                let mut m = [[0.0; 4]; 4];
                m[a][b] = 1.0;
                out.push(m);
            }
        }
    }
    for a in 0..3 {
        let mut m = [[0.0; 4]; 4];
        m[a][a] = 1.0;
        m[a + 1][a + 1] = -1.0;
        out.push(m);
    }
    out
}

/// Linearised action `𝔱 ↦ k·𝔱` on trace-free `𝔱`, in coefficients over
/// `{W_p ⊙ W_q : p ≤ q}` modulo the relation `ΣX⊙X = ΣY⊙Y`.
#[derive(Clone, Debug)]
pub struct RigidityMap {
    /// 21 × 15, columns indexed by [`traceless_basis`].
    pub matrix: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub kernel_dim: usize,
}

/// Singular values below this count toward the kernel.
pub const RIGIDITY_THRESHOLD: f64 = 1e-10;

/// `(k·𝔱)` coefficients for one `𝔱`, using `W·𝔱 = 𝔱ᵀW + W𝔱 =
/// ¼Σ_r tr((W·𝔱)ᵀW_r) W_r`.
pub fn act_linear(coeffs: &[f64], t: &M4) -> Vec<f64> {
    let w = quaternion_frame();
    let mut out = vec![0.0; QUATERNION_COEFFS];
    for (idx, (p, q)) in pairs().into_iter().enumerate() {
        let c = coeffs[idx];
        if c == 0.0 {
            continue;
        }
        // (W_p ⊙ W_q)·𝔱 = (W_p·𝔱) ⊙ W_q + W_p ⊙ (W_q·𝔱)
        for (moved, fixed) in [(p, q), (q, p)] {
            let wt = {
                let mut m = matmul(&transpose(t), &w[moved]);
                madd(&mut m, 1.0, &matmul(&w[moved], t));
                m
            };
            for (r, wr) in w.iter().enumerate() {
                let a = 0.25 * trace(&matmul(&transpose(&wt), wr));
                if a != 0.0 {
                    out[pair_index(r, fixed)] += c * a;
                }
            }
        }
    }
    out
}

/// Coefficient vector of the relation `ΣX_i⊙X_i − ΣY_i⊙Y_i = 0`.
pub fn frame_relation() -> Vec<f64> {
    let mut r = vec![0.0; QUATERNION_COEFFS];
    for p in 0..3 {
        r[pair_index(p, p)] = 1.0;
        r[pair_index(p + 3, p + 3)] = -1.0;
    }
    r
}

pub fn rigidity_map(k: &KillingTwoTensor) -> Result<RigidityMap> {
    let coeffs = k
        .quaternion
        .as_ref()
        .ok_or(Error::InvalidParameter("rigidity map needs quaternion-frame coefficients"))?;
    let basis = traceless_basis();
    let rel = DVector::from_vec(frame_relation());
    let rel = &rel / rel.norm();
    let mut m = DMatrix::<f64>::zeros(QUATERNION_COEFFS, basis.len());
    for (j, t) in basis.iter().enumerate() {
        let col = DVector::from_vec(act_linear(coeffs, t));
        let col = &col - &rel * rel.dot(&col);
        m.set_column(j, &col);
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    let kernel_dim = sv.iter().filter(|s| **s < RIGIDITY_THRESHOLD).count();
    Ok(RigidityMap {
        matrix: m,
        singular_values: sv,
        kernel_dim,
    })
}

/// Evaluates a 21-coefficient combination as a tensor at `(p; u, w)`.
pub fn quaternion_tensor_eval(coeffs: &[f64], p: &V4, u: &V4, w: &V4) -> f64 {
    let fr = quaternion_frame();
    pairs()
        .into_iter()
        .zip(coeffs)
        .map(|((a, b), c)| {
            let (ap, bp) = (mat_vec(&fr[a], p), mat_vec(&fr[b], p));
            c * (dot(&ap, u) * dot(&bp, w) + dot(&bp, u) * dot(&ap, w))
        })
        .sum()
}
