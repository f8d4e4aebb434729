//! Frameworks `(G, p)` and the geometric primitives evaluated on them.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::graph::{AngleTriple, Edge, Graph};

/// Relative collocation tolerance: points closer than
/// `COLLOCATION_TOL * (1 + max |coordinate|)` are treated as the same point.
pub const COLLOCATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Framework {
    graph: Graph,
    dim: usize,
    positions: Vec<f64>,
}

impl Framework {
    /// `positions` holds one point per vertex, each of length `dim`.
    pub fn new(graph: Graph, dim: usize, positions: &[Vec<f64>]) -> Result<Self> {
        if positions.len() != graph.n() {
            return Err(Error::PositionCountMismatch {
                positions: positions.len(),
                n: graph.n(),
            });
        }
        let mut flat = Vec::with_capacity(dim * positions.len());
        for (i, p) in positions.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Parse(format!(
                    "position {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            flat.extend_from_slice(p);
        }
        Framework::from_flat(graph, dim, flat)
    }

    /// Same as [`Framework::new`] with the configuration already stacked as
    /// `p = [p_0, p_1, ...]`.
    pub fn from_flat(graph: Graph, dim: usize, positions: Vec<f64>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if positions.len() != dim * graph.n() {
            return Err(Error::PositionCountMismatch {
                positions: positions.len() / dim,
                n: graph.n(),
            });
        }
        let f = Framework {
            graph,
            dim,
            positions,
        };
        f.check_finite()?;
        f.check_collocation()?;
        Ok(f)
    }

    fn check_finite(&self) -> Result<()> {
        for i in 0..self.n() {
            if self.point(i).iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteCoordinate(i));
            }
        }
        Ok(())
    }

    fn check_collocation(&self) -> Result<()> {
        if let Some((i, j)) = find_collocated(&self.positions, self.dim) {
            return Err(Error::CollocatedPoints(i, j));
        }
        Ok(())
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Stacked configuration `p`.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn configuration(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.positions)
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.point(i).to_vec()).collect()
    }

    /// Same graph, new configuration (validated).
    pub fn with_positions(&self, positions: Vec<f64>) -> Result<Self> {
        Framework::from_flat(self.graph.clone(), self.dim, positions)
    }

    /// Same configuration, new graph on the same vertex set.
    pub fn with_graph(&self, graph: Graph) -> Result<Self> {
        if graph.n() != self.n() {
            return Err(Error::PositionCountMismatch {
                positions: self.n(),
                n: graph.n(),
            });
        }
        Ok(Framework {
            graph,
            dim: self.dim,
            positions: self.positions.clone(),
        })
    }

    /// Applies `map` to every point.
    pub fn map_points(&self, mut map: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut flat = Vec::with_capacity(self.positions.len());
        for i in 0..self.n() {
            let q = map(self.point(i));
            if q.len() != self.dim {
                return Err(Error::InvalidParameter(
                    "point map changed the dimension".into(),
                ));
            }
            flat.extend(q);
        }
        self.with_positions(flat)
    }

    /// `cos θ^k_ij` by the law of cosines, clamped to `[-1, 1]`.
    pub fn cosine_of_angle(&self, triple: AngleTriple) -> Result<f64> {
        cosine_at(&self.positions, self.dim, triple)
    }

    /// Relative position vectors `z_u = p_tail - p_head` for `edges`, in
    /// order.
    pub fn edge_vectors(&self, edges: &[Edge]) -> EdgeVectorSet {
        let mut vectors = Vec::with_capacity(edges.len() * self.dim);
        for e in edges {
            let (a, b) = (self.point(e.tail()), self.point(e.head()));
            vectors.extend(a.iter().zip(b).map(|(x, y)| x - y));
        }
        EdgeVectorSet {
            edges: edges.to_vec(),
            dim: self.dim,
            vectors,
        }
    }

    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        squared_distance(self.point(i), self.point(j))
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                d = d.max(self.squared_distance(i, j));
            }
        }
        d.sqrt()
    }
}

/// Stacked edge vectors `z' = [z'_1, ..., z'_l]` with the edge order they
/// were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeVectorSet {
    pub edges: Vec<Edge>,
    pub dim: usize,
    vectors: Vec<f64>,
}

impl EdgeVectorSet {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn get(&self, u: usize) -> &[f64] {
        &self.vectors[u * self.dim..(u + 1) * self.dim]
    }

    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.vectors)
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn collocation_threshold(positions: &[f64]) -> f64 {
    let scale = positions.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    COLLOCATION_TOL * (1.0 + scale)
}

pub(crate) fn find_collocated(positions: &[f64], dim: usize) -> Option<(usize, usize)> {
    let n = positions.len() / dim;
    let tol = collocation_threshold(positions);
    let tol2 = tol * tol;
    for i in 0..n {
        for j in i + 1..n {
            let d2 = squared_distance(
                &positions[i * dim..(i + 1) * dim],
                &positions[j * dim..(j + 1) * dim],
            );
            if d2 < tol2 {
                return Some((i, j));
            }
        }
    }
    None
}

pub(crate) fn cosine_at(positions: &[f64], dim: usize, t: AngleTriple) -> Result<f64> {
    let pt = |v: usize| &positions[v * dim..(v + 1) * dim];
    let (pk, pi, pj) = (pt(t.apex), pt(t.i), pt(t.j));
    let tol = collocation_threshold(positions);
    let tol2 = tol * tol;
    let dik = squared_distance(pi, pk);
    let djk = squared_distance(pj, pk);
    let dij = squared_distance(pi, pj);
    if dik < tol2 {
        return Err(Error::CollocatedPoints(t.i.min(t.apex), t.i.max(t.apex)));
    }
    if djk < tol2 {
        return Err(Error::CollocatedPoints(t.j.min(t.apex), t.j.max(t.apex)));
    }
    if dij < tol2 {
        return Err(Error::CollocatedPoints(t.i, t.j));
    }
    let c = (dik + djk - dij) / (2.0 * (dik * djk).sqrt());
    Ok(c.clamp(-1.0, 1.0))
}
