//! Grids, quadrature, real spherical harmonics and equator charts on Sⁿ
//! for n ∈ {2, 3}.

pub mod chart;
pub mod field;
pub mod grid;
pub mod harmonics;
pub mod quadrature;

pub use chart::{equator_frame, ChartTemplate, EquatorChart, EquatorFunction, NodeJet};
pub use field::{FieldEval, HarmonicField, Parity};
pub use grid::{DirectionGrid, SphereGrid};
pub use harmonics::HarmonicBasis;

use crate::error::{Error, Result};
use crate::vec4::{self, V4};

/// Point of Sⁿ ⊂ ℝⁿ⁺¹ stored in four coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVector(V4);

impl UnitVector {
    /// Normalises `coords` (length 3 or 4).
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.len() < 3 || coords.len() > 4 {
            return Err(Error::InvalidParameter("unit vector needs 3 or 4 coordinates"));
        }
        let mut v = vec4::ZERO;
        v[..coords.len()].copy_from_slice(coords);
        let r = vec4::norm(&v);
        if r < 1e-300 {
            return Err(Error::ZeroVector);
        }
        Ok(UnitVector(vec4::scale(&v, 1.0 / r)))
    }

    pub fn axis(i: usize) -> Self {
        UnitVector(vec4::basis(i))
    }

    pub fn coords(&self) -> &V4 {
        &self.0
    }
}

impl From<UnitVector> for V4 {
    fn from(u: UnitVector) -> V4 {
        u.0
    }
}

/// Direction grid for ℝPⁿ with band limit `lg`.
pub fn make_direction_grid(n: usize, lg: usize) -> Result<DirectionGrid> {
    DirectionGrid::new(n, lg)
}

/// Equator chart of `v` with its node template.
pub fn equator_chart(n: usize, v: &UnitVector, lmax: usize, q: usize) -> Result<(EquatorChart, ChartTemplate)> {
    let t = ChartTemplate::new(n, lmax, q)?;
    Ok((EquatorChart::new(n, v.coords()), t))
}
