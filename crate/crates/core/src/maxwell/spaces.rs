//! Staggered collocation grids.
//!
//! Higher-degree directions use `N + 1` Lobatto points and lower-degree
//! directions use `N` Gauss points. `E_i` is lower-degree along axis `i`;
//! `B_i` is lower-degree along the two other spatial axes. Time is always
//! Lobatto and every component shares the same time grid.

use std::sync::Arc;

use super::{Component, SpaceTimeBox};
use crate::chebyshev::{make_grid, Grid, GridSpec, NodeKind};
use crate::error::{Error, Result};
use crate::tensor::Shape4;

#[derive(Debug, Clone)]
pub struct StaggeredSpaces {
    n: usize,
    domain: SpaceTimeBox,
    lobatto: [Arc<Grid>; 4],
    gauss: [Arc<Grid>; 3],
}

pub fn build_staggered_spaces(n: usize, domain: SpaceTimeBox) -> Result<StaggeredSpaces> {
    if n < 3 {
        return Err(Error::InvalidGrid(format!("resolution N = {n} is below the minimum 3")));
    }
    domain.validate()?;
    let iv = domain.intervals;
    let l = |k: usize| make_grid(GridSpec::new(NodeKind::Lobatto, n + 1, iv[k])).map(Arc::new);
    let g = |k: usize| make_grid(GridSpec::new(NodeKind::Gauss, n, iv[k])).map(Arc::new);
    Ok(StaggeredSpaces { n, domain, lobatto: [l(0)?, l(1)?, l(2)?, l(3)?], gauss: [g(1)?, g(2)?, g(3)?] })
}

impl StaggeredSpaces {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &SpaceTimeBox {
        &self.domain
    }

    pub fn t_grid(&self) -> &Arc<Grid> {
        &self.lobatto[0]
    }

    /// Lobatto grid of axis `axis` (0 = t).
    pub fn lobatto(&self, axis: usize) -> &Arc<Grid> {
        &self.lobatto[axis]
    }

    /// Gauss grid of spatial axis `axis` (1..=3).
    pub fn gauss(&self, axis: usize) -> &Arc<Grid> {
        &self.gauss[axis - 1]
    }

    /// All-Lobatto grids on which the wave systems are solved.
    pub fn wave_grids(&self) -> [Arc<Grid>; 4] {
        self.lobatto.clone()
    }

    pub fn e_grids(&self, c: Component) -> [Arc<Grid>; 4] {
        let mut g = self.lobatto.clone();
        g[c.axis()] = self.gauss(c.axis()).clone();
        g
    }

    pub fn b_grids(&self, c: Component) -> [Arc<Grid>; 4] {
        let mut g = self.lobatto.clone();
        for a in 1..4 {
            if a != c.axis() {
                g[a] = self.gauss(a).clone();
            }
        }
        g
    }

    pub fn e_shape(&self, c: Component) -> Shape4 {
        self.e_grids(c).map(|g| g.len())
    }

    pub fn b_shape(&self, c: Component) -> Shape4 {
        self.b_grids(c).map(|g| g.len())
    }
}

/// Node coordinates of multi-index `idx` on `grids`.
pub fn point(grids: &[Arc<Grid>; 4], idx: Shape4) -> [f64; 4] {
    [0, 1, 2, 3].map(|a| grids[a].nodes()[idx[a]])
}
