//! Product quadrature grids on Sⁿ and their antipodal folding to ℝPⁿ.

#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::quadrature::{gauss_chebyshev2, gauss_legendre};
use crate::error::{Error, Result};
use crate::vec4::V4;

/// Full-sphere product grid, exact for polynomials of degree ≤ `2·band + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereGrid {
    pub n: usize,
    pub band: usize,
    pub points: Vec<V4>,
    pub weights: Vec<f64>,
}

impl SphereGrid {
    pub fn new(n: usize, band: usize) -> Result<Self> {
        let (points, weights) = match n {
            2 => s2_grid(band),
            3 => {
                let (t, wt) = gauss_chebyshev2(band + 1);
                let (om, wo) = s2_grid(band);
                let mut p = Vec::with_capacity(t.len() * om.len());
                let mut w = Vec::with_capacity(t.len() * om.len());
                for (ti, wti) in t.iter().zip(&wt) {
                    let s = (1.0 - ti * ti).max(0.0).sqrt();
                    for (o, woi) in om.iter().zip(&wo) {
                        p.push([s * o[0], s * o[1], s * o[2], *ti]);
                        w.push(wti * woi);
                    }
                }
                (p, w)
            }
            _ => return Err(Error::UnsupportedDimension(n)),
        };
        Ok(SphereGrid {
            n,
            band,
            points,
            weights,
        })
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(a, b)| a * b).sum()
    }
}

fn s2_grid(band: usize) -> (Vec<V4>, Vec<f64>) {
    let (z, wz) = gauss_legendre(band + 1);
    let nlon = 2 * band + 2;
    let dphi = 2.0 * PI / nlon as f64;
    let mut p = Vec::with_capacity(z.len() * nlon);
    let mut w = Vec::with_capacity(z.len() * nlon);
    for (zi, wzi) in z.iter().zip(&wz) {
        let s = (1.0 - zi * zi).max(0.0).sqrt();
        for k in 0..nlon {
            let (sn, cs) = (k as f64 * dphi).sin_cos();
            p.push([s * cs, s * sn, *zi, 0.0]);
            w.push(wzi * dphi);
        }
    }
    (p, w)
}

/// One representative per antipodal pair of a [`SphereGrid`]; weights are
/// the halved sum of the pair, so sums approximate integrals over ℝPⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionGrid {
    pub n: usize,
    pub band_limit: usize,
    pub reps: Vec<V4>,
    pub weights: Vec<f64>,
}

/// True if `p` is the chosen member of `{p, -p}`: the last coordinate
/// that is not numerically zero is positive.
pub fn is_representative(p: &V4) -> bool {
    for i in (0..4).rev() {
        if p[i].abs() > 1e-12 {
            return p[i] > 0.0;
        }
    }
    false
}

impl DirectionGrid {
    pub fn new(n: usize, band_limit: usize) -> Result<Self> {
        if band_limit < 4 {
            return Err(Error::InvalidParameter("direction grid band limit must be at least 4"));
        }
        let full = SphereGrid::new(n, band_limit)?;
        let mut reps = Vec::new();
        let mut weights = Vec::new();
        for (p, w) in full.points.iter().zip(&full.weights) {
            if is_representative(p) {
                reps.push(*p);
                weights.push(*w);
            }
        }
        Ok(DirectionGrid {
            n,
            band_limit,
            reps,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Weighted sum over representatives.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(a, b)| a * b).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted mean over ℝPⁿ.
    pub fn mean(&self, values: &[f64]) -> f64 {
        self.integrate(values) / self.total_weight()
    }

    /// Index of the representative equal to `v` or `-v`, with the sign.
    pub fn locate(&self, v: &V4) -> Option<(usize, f64)> {
        for (i, r) in self.reps.iter().enumerate() {
            let d = crate::vec4::dot(r, v);
            if (d - 1.0).abs() < 1e-12 {
                return Some((i, 1.0));
            }
            if (d + 1.0).abs() < 1e-12 {
                return Some((i, -1.0));
            }
        }
        None
    }
}
