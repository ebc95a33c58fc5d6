//! Real orthonormal spherical harmonics on S¹, S² and S³.
//!
//! Every basis function is evaluated as a polynomial in the ambient
//! coordinates, so the same code produces values, gradients and Hessians
//! when fed [`Jet1`](crate::jet::Jet1) or [`Jet2`](crate::jet::Jet2)
//! inputs. No Condon–Shortley phase is used.
//!
//! Ordering:
//! * S¹: degree 0 is the constant; degree `k ≥ 1` contributes
//!   `sin kθ` (m = −k) then `cos kθ` (m = +k).
//! * S²: `(l, m)` row-major, `m = −l..=l`; negative `m` are the sine
//!   harmonics.
//! * S³: `(l, j, m)` with `j = 0..=l` and `m = −j..=j`; the function is a
//!   Gegenbauer polynomial in the last coordinate times the S² solid
//!   harmonic `(j, m)` of the first three.

#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::jet::Scalar;

#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    dim: usize,
    lmax: usize,
    degrees: Vec<usize>,
    // S² normalisation N_{l m} for m ≥ 0 (sqrt(2) folded in for m > 0).
    norm2: Vec<Vec<f64>>,
    // S³ Gegenbauer normalisation M_{l j}.
    norm3: Vec<Vec<f64>>,
}

/// Number of harmonics of degree ≤ `lmax` on Sᵈ.
pub fn basis_len(dim: usize, lmax: usize) -> usize {
    match dim {
        1 => 2 * lmax + 1,
        2 => (lmax + 1) * (lmax + 1),
        3 => (lmax + 1) * (lmax + 2) * (2 * lmax + 3) / 6,
        _ => 0,
    }
}

/// Dimension of the degree-`l` eigenspace on Sᵈ.
pub fn degree_len(dim: usize, l: usize) -> usize {
    match dim {
        1 => {
            if l == 0 {
                1
            } else {
                2
            }
        }
        2 => 2 * l + 1,
        3 => (l + 1) * (l + 1),
        _ => 0,
    }
}

/// Index of the first harmonic of degree `l`.
pub fn degree_offset(dim: usize, l: usize) -> usize {
    if l == 0 {
        0
    } else {
        basis_len(dim, l - 1)
    }
}

/// Index of `(l, m)` on S².
pub fn lm_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, b| a * b as f64)
}

impl HarmonicBasis {
    pub fn new(dim: usize, lmax: usize) -> Self {
        assert!((1..=3).contains(&dim), "harmonic basis dimension must be 1..=3");
        let mut degrees = Vec::with_capacity(basis_len(dim, lmax));
        for l in 0..=lmax {
            for _ in 0..degree_len(dim, l) {
                degrees.push(l);
            }
        }
        let mut norm2 = Vec::new();
        for l in 0..=lmax {
            let mut row = Vec::new();
            for m in 0..=l {
                let base = (2 * l + 1) as f64 / (4.0 * PI) * factorial(l - m) / factorial(l + m);
                row.push(if m == 0 { base.sqrt() } else { (2.0 * base).sqrt() });
            }
            norm2.push(row);
        }
        let mut norm3 = Vec::new();
        if dim == 3 {
            for l in 0..=lmax {
                let mut row = Vec::new();
                for j in 0..=l {
                    let k = l - j;
                    let jf = j as f64;
                    let inv = PI * 2f64.powf(-(2.0 * jf + 1.0)) * factorial(k + 2 * j + 1)
                        / (factorial(k) * (k + j + 1) as f64 * factorial(j) * factorial(j));
                    row.push(1.0 / inv.sqrt());
                }
                norm3.push(row);
            }
        }
        HarmonicBasis {
            dim,
            lmax,
            degrees,
            norm2,
            norm3,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    /// Degree of each basis function.
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Evaluates all basis functions at ambient point `x` (coordinates
    /// beyond `dim + 1` are ignored).
    pub fn eval<T: Scalar>(&self, x: &[T; 4]) -> Vec<T> {
        let mut out = vec![T::cst(0.0); self.len()];
        self.eval_into(x, &mut out);
        out
    }

    pub fn eval_into<T: Scalar>(&self, x: &[T; 4], out: &mut [T]) {
        match self.dim {
            1 => self.eval_s1(x, out),
            2 => {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                self.solid2(self.lmax, x[0], x[1], x[2], r2, out)
            }
            _ => self.eval_s3(x, out),
        }
    }

    fn eval_s1<T: Scalar>(&self, x: &[T; 4], out: &mut [T]) {
        let (c, s) = trig_powers(self.lmax, x[0], x[1]);
        out[0] = T::cst(1.0 / (2.0 * PI).sqrt());
        let k = 1.0 / PI.sqrt();
        for m in 1..=self.lmax {
            out[2 * m - 1] = s[m].scale(k);
            out[2 * m] = c[m].scale(k);
        }
    }

    /// Homogeneous solid harmonics of degree ≤ `lmax` in `(a, b, c)`,
    /// normalised to be orthonormal on the unit sphere.
    fn solid2<T: Scalar>(&self, lmax: usize, a: T, b: T, c: T, r2: T, out: &mut [T]) {
        let (cm, sm) = trig_powers(lmax, a, b);
        let mut q = vec![T::cst(0.0); lmax + 1];
        let mut dfact = 1.0;
        for m in 0..=lmax {
            if m > 0 {
                dfact *= (2 * m - 1) as f64;
            }
            q[m] = T::cst(dfact);
            if m < lmax {
                q[m + 1] = c.scale((2 * m + 1) as f64 * dfact);
            }
            for l in (m + 2)..=lmax {
                let t1 = (c * q[l - 1]).scale((2 * l - 1) as f64);
                let t2 = (r2 * q[l - 2]).scale((l + m - 1) as f64);
                q[l] = (t1 - t2).scale(1.0 / (l - m) as f64);
            }
            for l in m..=lmax {
                let nlm = self.norm2[l][m];
                let base = l * l + l;
                if m == 0 {
                    out[base] = q[l].scale(nlm);
                } else {
                    let qn = q[l].scale(nlm);
                    out[base + m] = qn * cm[m];
                    out[base - m] = qn * sm[m];
                }
            }
        }
    }

    fn eval_s3<T: Scalar>(&self, x: &[T; 4], out: &mut [T]) {
        let lmax = self.lmax;
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let mut solid = vec![T::cst(0.0); (lmax + 1) * (lmax + 1)];
        self.solid2(lmax, x[0], x[1], x[2], r2, &mut solid);
        let t = x[3];
        let mut g = vec![T::cst(0.0); lmax + 1];
        for j in 0..=lmax {
            let lam = (j + 1) as f64;
            let kmax = lmax - j;
            g[0] = T::cst(1.0);
            if kmax >= 1 {
                g[1] = t.scale(2.0 * lam);
            }
            for k in 2..=kmax {
                let kf = k as f64;
                let t1 = (t * g[k - 1]).scale(2.0 * (kf + lam - 1.0));
                let t2 = g[k - 2].scale(kf + 2.0 * lam - 2.0);
                g[k] = (t1 - t2).scale(1.0 / kf);
            }
            for k in 0..=kmax {
                let l = j + k;
                let off = degree_offset(3, l) + j * j + j;
                let gk = g[k].scale(self.norm3[l][j]);
                for m in -(j as i64)..=(j as i64) {
                    let sidx = (j * j + j) as i64 + m;
                    out[(off as i64 + m) as usize] = gk * solid[sidx as usize];
                }
            }
        }
    }
}

/// `(Re (a+ib)^m, Im (a+ib)^m)` for `m = 0..=lmax`.
fn trig_powers<T: Scalar>(lmax: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    let mut c = Vec::with_capacity(lmax + 1);
    let mut s = Vec::with_capacity(lmax + 1);
    c.push(T::cst(1.0));
    s.push(T::cst(0.0));
    for m in 1..=lmax {
        let cn = a * c[m - 1] - b * s[m - 1];
        let sn = a * s[m - 1] + b * c[m - 1];
        c.push(cn);
        s.push(sn);
    }
    (c, s)
}

/// Eigenvalue of the Laplace–Beltrami operator on degree-`l` harmonics of Sᵈ.
pub fn laplace_eigenvalue(dim: usize, l: usize) -> f64 {
    -((l * (l + dim - 1)) as f64)
}
