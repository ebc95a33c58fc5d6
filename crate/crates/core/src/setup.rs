//! Shared discretisation: dimension, band limits, direction grid, equator
//! charts at every representative, and the executor for per-equator work.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::sphere::{ChartTemplate, DirectionGrid, EquatorChart};

pub struct Setup {
    pub n: usize,
    /// Band limit of fields on Sⁿ and on equators.
    pub lmax: usize,
    pub grid: DirectionGrid,
    pub template: ChartTemplate,
    pub charts: Vec<EquatorChart>,
    exec: Box<dyn Executor>,
}

/// Default resolutions `(L, L_g, Q)` for each dimension.
pub fn defaults(n: usize) -> Result<(usize, usize, usize)> {
    match n {
        2 => Ok((8, 12, 64)),
        3 => Ok((6, 10, 32)),
        _ => Err(Error::UnsupportedDimension(n)),
    }
}

impl Setup {
    pub fn new(n: usize, lmax: usize, lg: usize, q: usize) -> Result<Self> {
        if lg < lmax {
            return Err(Error::InvalidParameter("grid band limit must be at least the field band limit"));
        }
        let grid = DirectionGrid::new(n, lg)?;
        let template = ChartTemplate::new(n, lmax, q)?;
        let charts = grid.reps.iter().map(|v| EquatorChart::new(n, v)).collect();
        Ok(Setup {
            n,
            lmax,
            grid,
            template,
            charts,
            exec: Box::new(Sequential),
        })
    }

    pub fn with_defaults(n: usize) -> Result<Self> {
        let (l, lg, q) = defaults(n)?;
        Self::new(n, l, lg, q)
    }

    pub fn with_executor(mut self, exec: Box<dyn Executor>) -> Self {
        self.exec = exec;
        self
    }

    pub fn exec(&self) -> &dyn Executor {
        &*self.exec
    }

    /// Same grid and band limit, different chart resolution.
    pub fn with_chart_nodes(&self, q: usize, exec: Box<dyn Executor>) -> Result<Self> {
        Ok(Setup {
            n: self.n,
            lmax: self.lmax,
            grid: self.grid.clone(),
            template: ChartTemplate::new(self.n, self.lmax, q)?,
            charts: self.charts.clone(),
            exec,
        })
    }

    pub fn reps(&self) -> usize {
        self.grid.len()
    }

    /// Runs `job` once per representative, collecting `width` values each.
    pub fn per_rep(&self, width: usize, job: &(dyn Fn(usize, &mut [f64]) + Sync)) -> Vec<f64> {
        let mut out = alloc::vec![0.0; width * self.reps()];
        self.exec.run(width, &mut out, job);
        out
    }
}
