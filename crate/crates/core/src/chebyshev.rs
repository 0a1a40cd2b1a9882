//! One-dimensional Chebyshev collocation kernel.
//!
//! Two node families are supported on an arbitrary interval `[a, b]`:
//!
//! - Gauss–Lobatto (`Lobatto`): `n` points including both endpoints,
//!   reference nodes `cos(πj/(n-1))`;
//! - Gauss (`Gauss`): `n` strictly interior points, reference nodes
//!   `cos(π(2j+1)/(2n))`.
//!
//! Nodes are stored in ascending physical order. Quadrature weights are the
//! Chebyshev weights for `w(ξ) = 1/√(1-ξ²)` scaled by `(b-a)/2`, so they sum
//! to `π(b-a)/2`. Differentiation and interpolation use barycentric weights,
//! which are known in closed form for both families.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum NodeKind {
    /// Chebyshev–Gauss–Lobatto (endpoints included).
    Lobatto,
    /// Chebyshev–Gauss (interior only).
    Gauss,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub kind: NodeKind,
    pub n_points: usize,
    pub interval: (f64, f64),
}

impl GridSpec {
    pub fn new(kind: NodeKind, n_points: usize, interval: (f64, f64)) -> Self {
        Self { kind, n_points, interval }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.interval;
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::InvalidGrid(format!("interval ({a}, {b}) must satisfy a < b")));
        }
        let min = match self.kind {
            NodeKind::Lobatto => 2,
            NodeKind::Gauss => 1,
        };
        if self.n_points < min {
            return Err(Error::InvalidGrid(format!(
                "{:?} grid needs at least {min} points, got {}",
                self.kind, self.n_points
            )));
        }
        Ok(())
    }
}

/// A collocation grid: nodes, quadrature weights and barycentric weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: GridSpec,
    nodes: Vec<f64>,
    quad_weights: Vec<f64>,
    bary_weights: Vec<f64>,
}

impl Grid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn kind(&self) -> NodeKind {
        self.spec.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.spec.interval
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn bary_weights(&self) -> &[f64] {
        &self.bary_weights
    }

    /// Indices of nodes that are not interval endpoints.
    pub fn interior_indices(&self) -> Vec<usize> {
        match self.spec.kind {
            NodeKind::Lobatto => (1..self.len() - 1).collect(),
            NodeKind::Gauss => (0..self.len()).collect(),
        }
    }
}

pub fn make_grid(spec: GridSpec) -> Result<Grid> {
    spec.validate()?;
    let n = spec.n_points;
    let (a, b) = spec.interval;
    let half = 0.5 * (b - a);

    // sin forms of -cos(...) keep the reference nodes exactly symmetric
    let (reference, quad, bary): (Vec<f64>, Vec<f64>, Vec<f64>) = match spec.kind {
        NodeKind::Lobatto => {
            let m = (n - 1) as f64;
            let xi = (0..n).map(|j| (PI * (2.0 * j as f64 - m) / (2.0 * m)).sin()).collect();
            let q = (0..n).map(|j| if j == 0 || j == n - 1 { PI / (2.0 * m) } else { PI / m }).collect();
            let w = (0..n)
                .map(|j| {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    let delta = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                    sign * delta
                })
                .collect();
            (xi, q, w)
        }
        NodeKind::Gauss => {
            let nf = n as f64;
            let xi = (0..n).map(|j| (PI * (2.0 * j as f64 + 1.0 - nf) / (2.0 * nf)).sin()).collect();
            let q = vec![PI / nf; n];
            let w = (0..n)
                .map(|j| {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    sign * (PI * (2.0 * j as f64 + 1.0) / (2.0 * nf)).sin()
                })
                .collect();
            (xi, q, w)
        }
    };

    let mut nodes: Vec<f64> = reference.iter().map(|&xi| a + half * (xi + 1.0)).collect();
    if spec.kind == NodeKind::Lobatto {
        nodes[0] = a;
        nodes[n - 1] = b;
    }
    let quad_weights = quad.into_iter().map(|w| w * half).collect();
    Ok(Grid { spec, nodes, quad_weights, bary_weights: bary })
}

/// Spectral first-derivative matrix on a grid, in physical coordinates.
#[derive(Debug, Clone)]
pub struct DiffMatrix {
    grid: Grid,
    entries: DMatrix<f64>,
}

impl DiffMatrix {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }
}

pub fn diff_matrix(grid: &Grid) -> Result<DiffMatrix> {
    let n = grid.len();
    if n < 2 {
        return Err(Error::InvalidGrid("differentiation needs at least 2 nodes".into()));
    }
    let x = grid.nodes();
    let w = grid.bary_weights();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / (x[i] - x[j]);
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        // negative-sum trick
        d[(i, i)] = -row_sum;
    }
    Ok(DiffMatrix { grid: grid.clone(), entries: d })
}

pub fn second_diff(d: &DiffMatrix) -> DMatrix<f64> {
    &d.entries * &d.entries
}

/// Lagrange evaluation matrix from one grid's nodes to another's.
#[derive(Debug, Clone)]
pub struct InterpMatrix {
    source: Grid,
    target: Grid,
    entries: DMatrix<f64>,
}

impl InterpMatrix {
    pub fn source(&self) -> &Grid {
        &self.source
    }

    pub fn target(&self) -> &Grid {
        &self.target
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }
}

fn same_interval(a: (f64, f64), b: (f64, f64)) -> bool {
    let scale = (a.1 - a.0).abs().max(1.0);
    (a.0 - b.0).abs() <= 1e-14 * scale && (a.1 - b.1).abs() <= 1e-14 * scale
}

pub fn interp_matrix(source: &Grid, target: &Grid) -> Result<InterpMatrix> {
    if source.is_empty() {
        return Err(Error::InvalidGrid("interpolation source has no nodes".into()));
    }
    if !same_interval(source.interval(), target.interval()) {
        return Err(Error::InvalidGrid(format!(
            "interpolation between different intervals {:?} and {:?}",
            source.interval(),
            target.interval()
        )));
    }
    let xs = source.nodes();
    let w = source.bary_weights();
    let (a, b) = source.interval();
    let snap = 1e-14 * (b - a);
    let mut m = DMatrix::zeros(target.len(), source.len());
    for (i, &xt) in target.nodes().iter().enumerate() {
        if let Some(j) = xs.iter().position(|&xj| (xt - xj).abs() <= snap) {
            m[(i, j)] = 1.0;
            continue;
        }
        let mut denom = 0.0;
        for j in 0..xs.len() {
            let q = w[j] / (xt - xs[j]);
            m[(i, j)] = q;
            denom += q;
        }
        for j in 0..xs.len() {
            m[(i, j)] /= denom;
        }
    }
    Ok(InterpMatrix { source: source.clone(), target: target.clone(), entries: m })
}

/// Derivative on `source`, evaluated at the nodes of `target`.
pub fn derivative_to(source: &Grid, target: &Grid) -> Result<DMatrix<f64>> {
    let d = diff_matrix(source)?;
    if source == target {
        return Ok(d.into_entries());
    }
    let p = interp_matrix(source, target)?;
    Ok(p.entries() * d.entries())
}

/// Submatrix with the given rows and columns kept, in the given order.
pub fn restrict(m: &DMatrix<f64>, row_keep: &[usize], col_keep: &[usize]) -> Result<DMatrix<f64>> {
    if row_keep.is_empty() || col_keep.is_empty() {
        return Err(Error::EmptySelection("restriction keeps no rows or no columns".into()));
    }
    if let Some(&r) = row_keep.iter().find(|&&r| r >= m.nrows()) {
        return Err(Error::ShapeMismatch(format!("row {r} out of bounds for {} rows", m.nrows())));
    }
    if let Some(&c) = col_keep.iter().find(|&&c| c >= m.ncols()) {
        return Err(Error::ShapeMismatch(format!("column {c} out of bounds for {} columns", m.ncols())));
    }
    Ok(DMatrix::from_fn(row_keep.len(), col_keep.len(), |i, j| m[(row_keep[i], col_keep[j])]))
}

/// Time convention: drop the initial node only (indices `1..n`).
pub fn time_interior(n_points: usize) -> Vec<usize> {
    (1..n_points).collect()
}

/// Space convention: drop both walls (indices `1..n-1`).
pub fn space_interior(n_points: usize) -> Vec<usize> {
    (1..n_points.saturating_sub(1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lobatto(n: usize, a: f64, b: f64) -> Grid {
        make_grid(GridSpec::new(NodeKind::Lobatto, n, (a, b))).unwrap()
    }

    fn gauss(n: usize, a: f64, b: f64) -> Grid {
        make_grid(GridSpec::new(NodeKind::Gauss, n, (a, b))).unwrap()
    }

    #[test]
    fn three_point_lobatto_nodes() {
        let g = lobatto(3, -1.0, 1.0);
        assert_eq!(g.nodes(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn single_gauss_node_is_midpoint() {
        let g = gauss(1, -1.0, 1.0);
        assert_eq!(g.len(), 1);
        assert!(g.nodes()[0].abs() < 1e-16);
    }

    #[test]
    fn quadrature_weights_sum_to_pi() {
        let g = lobatto(9, -1.0, 1.0);
        let s: f64 = g.quad_weights().iter().sum();
        assert!((s - PI).abs() < 1e-13);
        let g = gauss(7, 0.0, 3.0);
        let s: f64 = g.quad_weights().iter().sum();
        assert!((s - 1.5 * PI).abs() < 1e-13);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(make_grid(GridSpec::new(NodeKind::Lobatto, 1, (0.0, 1.0))).is_err());
        assert!(make_grid(GridSpec::new(NodeKind::Gauss, 0, (0.0, 1.0))).is_err());
        assert!(make_grid(GridSpec::new(NodeKind::Gauss, 3, (1.0, 1.0))).is_err());
        assert!(make_grid(GridSpec::new(NodeKind::Gauss, 3, (2.0, 1.0))).is_err());
    }

    #[test]
    fn endpoints_only_on_lobatto() {
        let l = lobatto(6, 0.0, 2.0);
        assert_eq!(l.nodes()[0], 0.0);
        assert_eq!(l.nodes()[5], 2.0);
        let g = gauss(6, 0.0, 2.0);
        assert!(g.nodes().iter().all(|&x| x > 0.0 && x < 2.0));
        for w in g.nodes().windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn diff_kills_constants_and_differentiates_polynomials() {
        let g = lobatto(9, -1.0, 1.0);
        let d = diff_matrix(&g).unwrap();
        let ones = nalgebra::DVector::from_element(9, 1.0);
        assert!((d.entries() * &ones).amax() <= 1e-13);
        let x = nalgebra::DVector::from_column_slice(g.nodes());
        let dx = d.entries() * &x;
        assert!((dx - &ones).amax() <= 1e-12);
        let cube = x.map(|v| v * v * v);
        let want = x.map(|v| 3.0 * v * v);
        assert!((d.entries() * cube - want).amax() <= 1e-11);
    }

    #[test]
    fn second_derivative_examples() {
        let g = lobatto(9, -1.0, 1.0);
        let d2 = second_diff(&diff_matrix(&g).unwrap());
        let x = nalgebra::DVector::from_column_slice(g.nodes());
        let ones = nalgebra::DVector::from_element(9, 1.0);
        assert!((&d2 * &ones).amax() <= 1e-10);
        assert!((&d2 * x.map(|v| v * v) - ones.scale(2.0)).amax() <= 1e-10);
        assert!((&d2 * &x).amax() <= 1e-11);
    }

    #[test]
    fn single_node_diff_errors() {
        let g = gauss(1, 0.0, 1.0);
        assert!(diff_matrix(&g).is_err());
    }

    #[test]
    fn interp_identity_and_exactness() {
        let s = lobatto(9, 0.0, 1.0);
        let p = interp_matrix(&s, &s).unwrap();
        assert!((p.entries() - DMatrix::identity(9, 9)).amax() == 0.0);

        let t = gauss(8, 0.0, 1.0);
        let p = interp_matrix(&s, &t).unwrap();
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(4) - 3.0 * x.powi(7);
        let v = nalgebra::DVector::from_iterator(9, s.nodes().iter().map(|&x| f(x)));
        let out = p.entries() * v;
        for (i, &x) in t.nodes().iter().enumerate() {
            assert!((out[i] - f(x)).abs() <= 1e-12);
        }
        for i in 0..t.len() {
            let rs: f64 = p.entries().row(i).iter().sum();
            assert!((rs - 1.0).abs() <= 1e-13);
        }
    }

    #[test]
    fn interp_rejects_mismatched_intervals() {
        let s = lobatto(5, 0.0, 1.0);
        let t = lobatto(5, 0.0, 2.0);
        assert!(interp_matrix(&s, &t).is_err());
    }

    #[test]
    fn restriction_conventions() {
        let i3 = DMatrix::<f64>::identity(3, 3);
        let r = restrict(&i3, &[1], &[1]).unwrap();
        assert_eq!(r, DMatrix::from_element(1, 1, 1.0));

        let n = 6;
        let m = DMatrix::from_fn(n + 1, n + 1, |i, j| (i * 10 + j) as f64);
        let t = time_interior(n + 1);
        let rt = restrict(&m, &t, &t).unwrap();
        assert_eq!(rt.shape(), (n, n));
        assert_eq!(rt[(0, 0)], 11.0);
        let s = space_interior(n + 1);
        let rs = restrict(&m, &s, &s).unwrap();
        assert_eq!(rs.shape(), (n - 1, n - 1));
        assert!(restrict(&m, &[], &s).is_err());
        assert!(restrict(&m, &[n + 1], &s).is_err());
    }

    #[test]
    fn derivative_to_gauss_is_exact_for_lobatto_polynomials() {
        let s = lobatto(7, -1.0, 2.0);
        let t = gauss(6, -1.0, 2.0);
        let m = derivative_to(&s, &t).unwrap();
        let v = nalgebra::DVector::from_iterator(7, s.nodes().iter().map(|&x| x.powi(6) - x));
        let out = m * v;
        for (i, &x) in t.nodes().iter().enumerate() {
            assert!((out[i] - (6.0 * x.powi(5) - 1.0)).abs() <= 1e-10);
        }
    }
}
