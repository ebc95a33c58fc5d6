//! Band-limited scalar fields on Sⁿ.

#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use super::grid::{DirectionGrid, SphereGrid};
use super::harmonics::{basis_len, laplace_eigenvalue, HarmonicBasis};
use crate::error::{Error, Result};
use crate::jet::{Jet1, Jet2, Lift};
use crate::vec4::{dot, reject, M4, V4};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Any,
    Even,
    Odd,
}

impl Parity {
    pub fn admits(self, l: usize) -> bool {
        match self {
            Parity::Any => true,
            Parity::Even => l % 2 == 0,
            Parity::Odd => l % 2 == 1,
        }
    }
}

/// Spherical-harmonic expansion of degree ≤ `lmax` on Sⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicField {
    n: usize,
    lmax: usize,
    parity: Parity,
    coeffs: Vec<f64>,
}

/// Threshold below which a parity block counts as absent.
const PARITY_TOL: f64 = 1e-10;

impl HarmonicField {
    pub fn zero(n: usize, lmax: usize) -> Self {
        HarmonicField {
            n,
            lmax,
            parity: Parity::Any,
            coeffs: vec![0.0; basis_len(n, lmax)],
        }
    }

    /// Builds a field; coefficients violating `parity` must be zero.
    pub fn from_coeffs(n: usize, lmax: usize, parity: Parity, coeffs: Vec<f64>) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::UnsupportedDimension(n));
        }
        if coeffs.len() != basis_len(n, lmax) {
            return Err(Error::Mismatch("coefficient count does not match band limit"));
        }
        let basis = HarmonicBasis::new(n, lmax);
        for (c, &l) in coeffs.iter().zip(basis.degrees()) {
            if !parity.admits(l) && *c != 0.0 {
                return Err(Error::InvalidParameter("coefficient violates declared parity"));
            }
        }
        Ok(HarmonicField {
            n,
            lmax,
            parity,
            coeffs,
        })
    }

    /// Builds a field and zeroes the coefficients excluded by `parity`.
    pub fn with_parity(n: usize, lmax: usize, parity: Parity, mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis_len(n, lmax) {
            return Err(Error::Mismatch("coefficient count does not match band limit"));
        }
        let basis = HarmonicBasis::new(n, lmax);
        for (c, &l) in coeffs.iter_mut().zip(basis.degrees()) {
            if !parity.admits(l) {
                *c = 0.0;
            }
        }
        Self::from_coeffs(n, lmax, parity, coeffs)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn lmax(&self) -> usize {
        self.lmax
    }
    pub fn parity(&self) -> Parity {
        self.parity
    }
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis(&self) -> HarmonicBasis {
        HarmonicBasis::new(self.n, self.lmax)
    }

    /// Coefficients of degree `l`.
    pub fn degree_block(&self, l: usize) -> &[f64] {
        let a = if l == 0 { 0 } else { basis_len(self.n, l - 1) };
        &self.coeffs[a..basis_len(self.n, l)]
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// L² norm on Sⁿ.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut r = self.clone();
        r.coeffs.iter_mut().for_each(|c| *c *= s);
        r
    }

    /// `self + s·other`; band limits are padded to the larger one.
    pub fn axpy(&self, s: f64, other: &HarmonicField) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Mismatch("fields live on different spheres"));
        }
        let lmax = self.lmax.max(other.lmax);
        let mut a = self.resized(lmax);
        let b = other.resized(lmax);
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x += s * y;
        }
        a.parity = if self.parity == other.parity {
            self.parity
        } else {
            Parity::Any
        };
        Ok(a)
    }

    /// Truncates or zero-pads to band limit `lmax`.
    pub fn resized(&self, lmax: usize) -> Self {
        let len = basis_len(self.n, lmax);
        let mut coeffs = vec![0.0; len];
        let m = len.min(self.coeffs.len());
        coeffs[..m].copy_from_slice(&self.coeffs[..m]);
        HarmonicField {
            n: self.n,
            lmax,
            parity: self.parity,
            coeffs,
        }
    }

    /// Adds `c` to the field (as a function).
    pub fn add_constant(&self, c: f64) -> Self {
        let mut r = self.clone();
        r.coeffs[0] += c * super::quadrature::sphere_volume(self.n).sqrt();
        if r.parity == Parity::Odd && c != 0.0 {
            r.parity = Parity::Any;
        }
        r
    }

    /// Inspects the coefficients and tightens the parity flag.
    pub fn detect_parity(mut self) -> Self {
        let basis = self.basis();
        let scale = self.max_abs_coeff().max(1e-300);
        let mut even = 0.0f64;
        let mut odd = 0.0f64;
        for (c, &l) in self.coeffs.iter().zip(basis.degrees()) {
            if l % 2 == 0 {
                even = even.max(c.abs());
            } else {
                odd = odd.max(c.abs());
            }
        }
        self.parity = if odd <= PARITY_TOL * scale.max(1.0) && even > 0.0 {
            Parity::Even
        } else if even <= PARITY_TOL * scale.max(1.0) && odd > 0.0 {
            Parity::Odd
        } else {
            Parity::Any
        };
        self
    }

    pub fn evaluator(&self) -> FieldEval<'_> {
        FieldEval {
            field: self,
            basis: self.basis(),
        }
    }

    pub fn eval(&self, p: &V4) -> f64 {
        self.evaluator().value(p)
    }

    /// Tangential gradient at `p ∈ Sⁿ`.
    pub fn gradient(&self, p: &V4) -> V4 {
        self.evaluator().gradient(p)
    }

    /// Samples on a full sphere grid projected to degree ≤ `lmax`.
    pub fn project(grid: &SphereGrid, samples: &[f64], lmax: usize) -> Result<Self> {
        if grid.band < lmax {
            return Err(Error::Aliasing {
                resolution: 2 * grid.band + 1,
                l: lmax,
            });
        }
        if samples.len() != grid.points.len() {
            return Err(Error::Mismatch("sample count does not match grid"));
        }
        let basis = HarmonicBasis::new(grid.n, lmax);
        let mut coeffs = vec![0.0; basis.len()];
        let mut y = vec![0.0; basis.len()];
        for ((p, w), f) in grid.points.iter().zip(&grid.weights).zip(samples) {
            basis.eval_into(p, &mut y);
            for (c, yi) in coeffs.iter_mut().zip(&y) {
                *c += w * f * yi;
            }
        }
        Ok(HarmonicField {
            n: grid.n,
            lmax,
            parity: Parity::Any,
            coeffs,
        }
        .detect_parity())
    }

    /// Samples at direction-grid representatives, read as an even function,
    /// projected to even degrees ≤ `lmax`.
    pub fn project_even(grid: &DirectionGrid, samples: &[f64], lmax: usize) -> Result<Self> {
        if grid.band_limit < lmax {
            return Err(Error::Aliasing {
                resolution: 2 * grid.band_limit + 1,
                l: lmax,
            });
        }
        if samples.len() != grid.len() {
            return Err(Error::Mismatch("sample count does not match grid"));
        }
        let basis = HarmonicBasis::new(grid.n, lmax);
        let mut coeffs = vec![0.0; basis.len()];
        let mut y = vec![0.0; basis.len()];
        for ((p, w), f) in grid.reps.iter().zip(&grid.weights).zip(samples) {
            basis.eval_into(p, &mut y);
            for ((c, yi), &l) in coeffs.iter_mut().zip(&y).zip(basis.degrees()) {
                if l % 2 == 0 {
                    *c += 2.0 * w * f * yi;
                }
            }
        }
        Ok(HarmonicField {
            n: grid.n,
            lmax,
            parity: Parity::Even,
            coeffs,
        })
    }

    /// Values at the representatives of a direction grid.
    pub fn sample(&self, points: &[V4]) -> Vec<f64> {
        let ev = self.evaluator();
        points.iter().map(|p| ev.value(p)).collect()
    }

    /// Solves `Δf + c·f = g` degree by degree. Resonant degrees are set to
    /// zero when `project_resonant` is true; otherwise a resonant component
    /// larger than `tol` is an error.
    pub fn helmholtz_solve(&self, c: f64, project_resonant: bool, tol: f64) -> Result<Self> {
        let basis = self.basis();
        let mut out = self.clone();
        for l in 0..=self.lmax {
            let lam = laplace_eigenvalue(self.n, l) + c;
            let a = if l == 0 { 0 } else { basis_len(self.n, l - 1) };
            let b = basis_len(self.n, l);
            let block = &mut out.coeffs[a..b];
            if lam.abs() < 1e-12 {
                let mag = block.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if !project_resonant && mag > tol {
                    return Err(Error::Resonance { degree: l, magnitude: mag });
                }
                block.iter_mut().for_each(|x| *x = 0.0);
            } else {
                block.iter_mut().for_each(|x| *x /= lam);
            }
        }
        let _ = basis;
        Ok(out)
    }

    /// Applies `Δ + c` degree by degree.
    pub fn helmholtz_apply(&self, c: f64) -> Self {
        let mut out = self.clone();
        for l in 0..=self.lmax {
            let lam = laplace_eigenvalue(self.n, l) + c;
            let a = if l == 0 { 0 } else { basis_len(self.n, l - 1) };
            let b = basis_len(self.n, l);
            out.coeffs[a..b].iter_mut().for_each(|x| *x *= lam);
        }
        out
    }

    /// Zeroes the degree-1 block.
    pub fn without_degree(&self, l: usize) -> Self {
        let mut out = self.clone();
        let a = if l == 0 { 0 } else { basis_len(self.n, l - 1) };
        let b = basis_len(self.n, l);
        if l <= self.lmax {
            out.coeffs[a..b].iter_mut().for_each(|x| *x = 0.0);
        }
        out
    }
}

/// Evaluation helper that owns a prepared basis.
pub struct FieldEval<'a> {
    field: &'a HarmonicField,
    basis: HarmonicBasis,
}

/// Value, ambient gradient and ambient Hessian of the polynomial extension.
#[derive(Clone, Copy, Debug)]
pub struct Jet2Value {
    pub value: f64,
    pub grad: V4,
    pub hess: M4,
}

impl FieldEval<'_> {
    pub fn value(&self, p: &V4) -> f64 {
        let y = self.basis.eval::<f64>(p);
        y.iter().zip(&self.field.coeffs).map(|(a, b)| a * b).sum()
    }

    /// Value and ambient gradient of the polynomial extension.
    pub fn jet1(&self, p: &V4) -> (f64, V4) {
        let y = self.basis.eval::<Jet1>(&Jet1::lift(p));
        let mut v = 0.0;
        let mut g = [0.0; 4];
        for (yi, c) in y.iter().zip(&self.field.coeffs) {
            v += c * yi.v;
            for k in 0..4 {
                g[k] += c * yi.g[k];
            }
        }
        (v, g)
    }

    pub fn jet2(&self, p: &V4) -> Jet2Value {
        let y = self.basis.eval::<Jet2>(&Jet2::lift(p));
        let mut out = Jet2Value {
            value: 0.0,
            grad: [0.0; 4],
            hess: [[0.0; 4]; 4],
        };
        for (yi, c) in y.iter().zip(&self.field.coeffs) {
            out.value += c * yi.v;
            for k in 0..4 {
                out.grad[k] += c * yi.g[k];
                for m in 0..4 {
                    out.hess[k][m] += c * yi.h[k][m];
                }
            }
        }
        out
    }

    pub fn gradient(&self, p: &V4) -> V4 {
        let (_, g) = self.jet1(p);
        reject(&g, p)
    }

    /// Intrinsic Hessian `Hess f(a, b)` for tangent vectors `a, b` at `p`.
    pub fn hessian_form(&self, p: &V4, a: &V4, b: &V4) -> f64 {
        let j = self.jet2(p);
        crate::vec4::quad_form(&j.hess, a, b) - dot(&j.grad, p) * dot(a, b)
    }
}
