//! Constraint graphs `(V, E, A)`: vertices, undirected distance edges and
//! subtended-angle triples, plus the two induced graphs used by the rank
//! tests and the oriented incidence matrix.
//!
//! Vertices are `0..n`. Edges are stored with the smaller index first and
//! angle triples `(k, i, j)` with `i < j`; `k` is the apex.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected edge, normalized so that `tail() < head()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "[usize; 2]", from = "[usize; 2]")]
pub struct Edge(usize, usize);

impl Edge {
    /// Normalizes the pair. Does not reject `a == b`; see [`Graph::new`].
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    /// Smaller endpoint; the edge leaves this vertex.
    pub fn tail(&self) -> usize {
        self.0
    }

    /// Larger endpoint; the edge sinks at this vertex.
    pub fn head(&self) -> usize {
        self.1
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0 == v || self.1 == v
    }
}

impl From<[usize; 2]> for Edge {
    fn from(v: [usize; 2]) -> Self {
        Edge::new(v[0], v[1])
    }
}

impl From<Edge> for [usize; 2] {
    fn from(e: Edge) -> Self {
        [e.0, e.1]
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

/// Angle at `apex` subtended by the rays toward `i` and `j`, normalized so
/// that `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "[usize; 3]", from = "[usize; 3]")]
pub struct AngleTriple {
    pub apex: usize,
    pub i: usize,
    pub j: usize,
}

impl AngleTriple {
    pub fn new(apex: usize, i: usize, j: usize) -> Self {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        AngleTriple { apex, i, j }
    }

    /// The three edges of the supporting triangle: `(k,i)`, `(k,j)`, `(i,j)`.
    pub fn support_edges(&self) -> [Edge; 3] {
        [
            Edge::new(self.apex, self.i),
            Edge::new(self.apex, self.j),
            Edge::new(self.i, self.j),
        ]
    }

    pub fn vertices(&self) -> [usize; 3] {
        [self.apex, self.i, self.j]
    }
}

impl From<[usize; 3]> for AngleTriple {
    fn from(v: [usize; 3]) -> Self {
        AngleTriple::new(v[0], v[1], v[2])
    }
}

impl From<AngleTriple> for [usize; 3] {
    fn from(a: AngleTriple) -> Self {
        [a.apex, a.i, a.j]
    }
}

impl fmt::Display for AngleTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}; {}, {})", self.apex, self.i, self.j)
    }
}

/// A single distance or angle constraint. Also used as a row label of the
/// weak rigidity matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    Distance(Edge),
    Angle(AngleTriple),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Distance(e) => write!(f, "distance {e}"),
            Constraint::Angle(a) => write!(f, "angle {a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    angles: Vec<AngleTriple>,
}

impl Graph {
    /// Validates and normalizes a constraint graph.
    pub fn new(
        n: usize,
        edges: &[(usize, usize)],
        angles: &[(usize, usize, usize)],
    ) -> Result<Self> {
        let mut seen_edges = BTreeSet::new();
        let mut norm_edges = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            check_index(a, n)?;
            check_index(b, n)?;
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let e = Edge::new(a, b);
            if !seen_edges.insert(e) {
                return Err(Error::DuplicateConstraint(format!("edge {e}")));
            }
            norm_edges.push(e);
        }

        let mut seen_angles = BTreeSet::new();
        let mut norm_angles = Vec::with_capacity(angles.len());
        for &(k, i, j) in angles {
            check_index(k, n)?;
            check_index(i, n)?;
            check_index(j, n)?;
            if k == i || k == j || i == j {
                return Err(Error::DegenerateAngleTriple(k, i, j));
            }
            let t = AngleTriple::new(k, i, j);
            if !seen_angles.insert(t) {
                return Err(Error::DuplicateConstraint(format!("angle {t}")));
            }
            norm_angles.push(t);
        }

        Ok(Graph {
            n,
            edges: norm_edges,
            angles: norm_angles,
        })
    }

    pub(crate) fn from_parts(n: usize, edges: Vec<Edge>, angles: Vec<AngleTriple>) -> Result<Self> {
        let e: Vec<_> = edges.iter().map(|e| (e.tail(), e.head())).collect();
        let a: Vec<_> = angles.iter().map(|a| (a.apex, a.i, a.j)).collect();
        Graph::new(n, &e, &a)
    }

    /// Complete graph on `n` vertices, edges in lexicographic order, no angles.
    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push(Edge(i, j));
            }
        }
        Graph {
            n,
            edges,
            angles: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn angles(&self) -> &[AngleTriple] {
        &self.angles
    }

    /// `m = |E|`
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// `q = |A|`
    pub fn q(&self) -> usize {
        self.angles.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.m() + self.q()
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        self.edges.contains(&e)
    }

    pub fn has_angle(&self, a: AngleTriple) -> bool {
        self.angles.contains(&a)
    }

    /// Distance constraints first, then angles; the row order of the weak
    /// rigidity matrix.
    pub fn constraints(&self) -> Vec<Constraint> {
        self.edges
            .iter()
            .copied()
            .map(Constraint::Distance)
            .chain(self.angles.iter().copied().map(Constraint::Angle))
            .collect()
    }

    /// Copy of the graph with one constraint dropped.
    pub fn without(&self, c: Constraint) -> Result<Self> {
        let mut g = self.clone();
        match c {
            Constraint::Distance(e) => {
                let pos = g
                    .edges
                    .iter()
                    .position(|x| *x == e)
                    .ok_or(Error::EdgeNotFound(e))?;
                g.edges.remove(pos);
            }
            Constraint::Angle(a) => {
                let pos = g
                    .angles
                    .iter()
                    .position(|x| *x == a)
                    .ok_or(Error::AngleNotFound(a))?;
                g.angles.remove(pos);
            }
        }
        Ok(g)
    }

    /// Copy of the graph with one extra constraint appended.
    pub fn with(&self, c: Constraint) -> Result<Self> {
        let mut edges = self.edges.clone();
        let mut angles = self.angles.clone();
        match c {
            Constraint::Distance(e) => edges.push(e),
            Constraint::Angle(a) => angles.push(a),
        }
        Graph::from_parts(self.n, edges, angles)
    }

    /// `G'`: same vertices and angles, edges augmented with every support
    /// edge of every angle triple. Original edges keep their positions, new
    /// edges follow in sorted order.
    ///
    /// With `E = ∅` the result's edge set is exactly the angle supports.
    pub fn induced_angle_support(&self) -> Graph {
        Graph {
            n: self.n,
            edges: self.edges_with_supports(),
            angles: self.angles.clone(),
        }
    }

    /// `Ḡ`: every angle replaced by its three support edges; no angles left.
    pub fn induced_distance_closure(&self) -> Graph {
        Graph {
            n: self.n,
            edges: self.edges_with_supports(),
            angles: Vec::new(),
        }
    }

    fn edges_with_supports(&self) -> Vec<Edge> {
        let existing: BTreeSet<Edge> = self.edges.iter().copied().collect();
        let added: BTreeSet<Edge> = self
            .angles
            .iter()
            .flat_map(|a| a.support_edges())
            .filter(|e| !existing.contains(e))
            .collect();
        self.edges.iter().copied().chain(added).collect()
    }

    /// Oriented incidence matrix `H ∈ R^{l×n}`: row `u` has `-1` at the tail
    /// (smaller index) and `+1` at the head of edge `u`.
    pub fn incidence_matrix(&self) -> Result<DMatrix<f64>> {
        if self.edges.is_empty() {
            return Err(Error::EmptyEdgeSet);
        }
        let mut h = DMatrix::zeros(self.edges.len(), self.n);
        for (u, e) in self.edges.iter().enumerate() {
            h[(u, e.tail())] = -1.0;
            h[(u, e.head())] = 1.0;
        }
        Ok(h)
    }

    /// `H ⊗ I_dim`.
    pub fn lifted_incidence_matrix(&self, dim: usize) -> Result<DMatrix<f64>> {
        let h = self.incidence_matrix()?;
        Ok(h.kronecker(&DMatrix::<f64>::identity(dim, dim)))
    }

    /// Number of connected components of `(V, E)`; angles are ignored.
    pub fn edge_components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.n;
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.tail()), find(&mut parent, e.head()));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components
    }
}

fn check_index(index: usize, n: usize) -> Result<()> {
    if index >= n {
        Err(Error::IndexOutOfRange { index, n })
    } else {
        Ok(())
    }
}

/// Shorthand used throughout the crate and its tests.
pub fn build_graph(
    n: usize,
    edges: &[(usize, usize)],
    angles: &[(usize, usize, usize)],
) -> Result<Graph> {
    Graph::new(n, edges, angles)
}
