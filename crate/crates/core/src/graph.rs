//! Unweighted directed graphs and the reciprocity structure the walk
//! recurrences are built from.
//!
//! A graph is stored as compressed out-adjacency rows (`a_ij = 1` iff `j` is in
//! row `i`). Undirected graphs are stored with both orientations of every
//! edge, so `A = Aᵀ` holds exactly.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    duplicates: usize,
}

impl Graph {
    /// Builds a directed graph on `n` nodes from 0-based ordered pairs.
    ///
    /// Duplicate pairs are collapsed (see [`Graph::duplicates_collapsed`]);
    /// self-loops and out-of-range endpoints are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::Validation("a graph needs at least one node".into()));
        }
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Validation(format!(
                    "edge ({i}, {j}) has an endpoint outside [0, {n})"
                )));
            }
            if i == j {
                return Err(Error::Validation(format!("self-loop at node {i}")));
            }
            pairs.push((i, j));
        }
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        let duplicates = before - pairs.len();

        let mut offsets = vec![0; n + 1];
        for &(i, _) in &pairs {
            offsets[i + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = pairs.into_iter().map(|(_, j)| j).collect();
        Ok(Self {
            n,
            offsets,
            targets,
            duplicates,
        })
    }

    /// Builds an undirected graph: every pair is stored in both orientations.
    ///
    /// A pair listed in both orientations is a single undirected edge and is
    /// not counted as a duplicate.
    pub fn from_undirected_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut seen = Vec::new();
        for (i, j) in edges {
            seen.push((i.min(j), i.max(j)));
        }
        seen.sort_unstable();
        let before = seen.len();
        seen.dedup();
        let duplicates = before - seen.len();
        let mut g = Self::from_edges(n, seen.iter().flat_map(|&(i, j)| [(i, j), (j, i)]))?;
        g.duplicates = duplicates;
        Ok(g)
    }

    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Result<Self> {
        Self::from_edges(n, std::iter::empty())
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of directed edges (an undirected edge counts twice).
    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    /// Number of input pairs dropped because they repeated an existing edge.
    pub fn duplicates_collapsed(&self) -> usize {
        self.duplicates
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.out_degree(i)).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.out_neighbors(i).binary_search(&j).is_ok()
    }

    /// All directed edges in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.out_neighbors(i).iter().map(move |&j| (i, j)))
    }

    pub fn transpose(&self) -> Self {
        let mut g = Self::from_edges(self.n, self.edges().map(|(i, j)| (j, i)))
            .expect("transpose of a valid graph is valid");
        g.duplicates = self.duplicates;
        g
    }

    /// `true` when every edge is reciprocated, i.e. `A = Aᵀ`.
    pub fn is_symmetric(&self) -> bool {
        self.edges().all(|(i, j)| self.has_edge(j, i))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (i, j) in self.edges() {
            a[(i, j)] = 1.0;
        }
        a
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.out_neighbors(i).iter().map(|&j| x[j]).sum();
        }
    }

    /// `y = A x` into a fresh vector.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        y
    }

    /// Reciprocity structure `D` and `S` (plus `A − S`), computed in O(edges).
    pub fn derived(&self) -> DerivedMatrices {
        let mut recip = Vec::new();
        let mut one_way = Vec::new();
        for (i, j) in self.edges() {
            if self.has_edge(j, i) {
                recip.push((i, j));
            } else {
                one_way.push((i, j));
            }
        }
        let s = Self::from_edges(self.n, recip).expect("subgraph of a valid graph");
        let a_minus_s = Self::from_edges(self.n, one_way).expect("subgraph of a valid graph");
        let d = (0..self.n).map(|i| s.out_degree(i) as f64).collect();
        DerivedMatrices { d, s, a_minus_s }
    }
}

/// The diagonal `D` with `d_ii = (A²)_ii` and the reciprocity matrix `S` with
/// `s_ij = a_ij a_ji`.
///
/// `S` and `A − S` have 0/1 entries and no diagonal, so both are stored as
/// [`Graph`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedMatrices {
    /// Number of reciprocated out-edges at each node.
    pub d: Vec<f64>,
    pub s: Graph,
    /// Edges whose reverse is absent.
    pub a_minus_s: Graph,
}

impl DerivedMatrices {
    pub fn d_dense(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.d))
    }

    /// `true` when no edge is reciprocated (then `D = 0` and `S = 0`).
    pub fn is_trivial(&self) -> bool {
        self.s.edge_count() == 0
    }
}

/// The test graphs used throughout the analysis.
///
/// Node numbering in the documentation is 1-based; the built graphs are
/// 0-based like every other [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedGraph {
    /// Star `S_{1,m}`: hub 1 joined to leaves 2..=m+1.
    Star { m: usize },
    /// Undirected circulant where node i is joined to i±1, …, i±d/2 (mod n).
    RegularCirculant { n: usize, d: usize },
    /// Undirected cycle on n nodes.
    Cycle { n: usize },
    /// Directed cycle 1→2→…→n→1.
    DirectedCycle { n: usize },
    /// Undirected path 1-2-…-n.
    Path { n: usize },
    /// Five-node directed graph with edges 1→2, 2→3, 3→4, 4→5, 2→5, 5→2, 3→2.
    Figure1,
    /// Eleven-node undirected graph: a four-leaf tree hanging off node 1,
    /// attached through node 6 to a ring closing on the triangle 8, 10, 11.
    Squid,
}

const FIGURE1_EDGES: [(usize, usize); 7] = [(1, 2), (2, 3), (3, 4), (4, 5), (2, 5), (5, 2), (3, 2)];

const SQUID_EDGES: [(usize, usize); 12] = [
    (1, 2),
    (1, 3),
    (1, 4),
    (1, 5),
    (1, 6),
    (6, 7),
    (6, 9),
    (7, 8),
    (9, 10),
    (8, 10),
    (8, 11),
    (10, 11),
];

impl NamedGraph {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            Self::Star { m } if m < 1 => bad("star needs m >= 1 leaves".into()),
            Self::RegularCirculant { n, d } if d < 2 || d % 2 != 0 || d >= n => bad(format!(
                "circulant needs even d with 2 <= d < n, got n={n}, d={d}"
            )),
            Self::Cycle { n } | Self::DirectedCycle { n } if n < 3 => {
                bad(format!("cycle needs n >= 3, got {n}"))
            }
            Self::Path { n } if n < 2 => bad(format!("path needs n >= 2, got {n}")),
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Graph> {
        self.validate()?;
        match *self {
            Self::Star { m } => Graph::from_undirected_edges(m + 1, (1..=m).map(|leaf| (0, leaf))),
            Self::RegularCirculant { n, d } => Graph::from_undirected_edges(
                n,
                (0..n).flat_map(|i| (1..=d / 2).map(move |o| (i, (i + o) % n))),
            ),
            Self::Cycle { n } => Graph::from_undirected_edges(n, (0..n).map(|i| (i, (i + 1) % n))),
            Self::DirectedCycle { n } => Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))),
            Self::Path { n } => Graph::from_undirected_edges(n, (0..n - 1).map(|i| (i, i + 1))),
            Self::Figure1 => {
                Graph::from_edges(5, FIGURE1_EDGES.iter().map(|&(i, j)| (i - 1, j - 1)))
            }
            Self::Squid => {
                Graph::from_undirected_edges(11, SQUID_EDGES.iter().map(|&(i, j)| (i - 1, j - 1)))
            }
        }
    }
}

impl FromStr for NamedGraph {
    type Err = Error;

    /// Parses `star:M`, `regular:N:D`, `cycle:N`, `dcycle:N`, `path:N`,
    /// `figure1` or `squid`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let kind = parts.next().unwrap_or_default().to_ascii_lowercase();
        let nums: Vec<usize> = parts
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad number {p:?} in {s:?}")))
            })
            .collect::<Result<_>>()?;
        let arity = |k: usize| -> Result<()> {
            if nums.len() == k {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{kind} takes {k} parameter(s), got {}",
                    nums.len()
                )))
            }
        };
        let g = match kind.as_str() {
            "star" => {
                arity(1)?;
                Self::Star { m: nums[0] }
            }
            "regular" | "circulant" => {
                arity(2)?;
                Self::RegularCirculant {
                    n: nums[0],
                    d: nums[1],
                }
            }
            "cycle" => {
                arity(1)?;
                Self::Cycle { n: nums[0] }
            }
            "dcycle" => {
                arity(1)?;
                Self::DirectedCycle { n: nums[0] }
            }
            "path" => {
                arity(1)?;
                Self::Path { n: nums[0] }
            }
            "figure1" => {
                arity(0)?;
                Self::Figure1
            }
            "squid" => {
                arity(0)?;
                Self::Squid
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown graph kind {other:?}"
                )))
            }
        };
        g.validate()?;
        Ok(g)
    }
}

impl fmt::Display for NamedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Star { m } => write!(f, "star:{m}"),
            Self::RegularCirculant { n, d } => write!(f, "regular:{n}:{d}"),
            Self::Cycle { n } => write!(f, "cycle:{n}"),
            Self::DirectedCycle { n } => write!(f, "dcycle:{n}"),
            Self::Path { n } => write!(f, "path:{n}"),
            Self::Figure1 => f.write_str("figure1"),
            Self::Squid => f.write_str("squid"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_loops_and_out_of_range() {
        assert!(matches!(
            Graph::from_edges(3, [(0, 0)]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            Graph::from_edges(3, [(0, 3)]),
            Err(Error::Validation(_))
        ));
        assert!(Graph::from_edges(0, []).is_err());
    }

    #[test]
    fn duplicates_are_collapsed_and_counted() {
        let g = Graph::from_edges(3, [(0, 1), (0, 1), (1, 2), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.duplicates_collapsed(), 2);
    }

    #[test]
    fn star_degrees() {
        let g = NamedGraph::Star { m: 3 }.build().unwrap();
        assert_eq!(g.out_degrees(), vec![3, 1, 1, 1]);
        assert!(g.is_symmetric());
    }

    #[test]
    fn squid_degree_sequence() {
        let g = NamedGraph::Squid.build().unwrap();
        assert_eq!(g.out_degrees(), vec![5, 1, 1, 1, 1, 3, 2, 3, 2, 3, 2]);
        assert_eq!(g.edge_count(), 24);
    }

    #[test]
    fn figure1_reciprocity() {
        let g = NamedGraph::Figure1.build().unwrap();
        let dm = g.derived();
        assert_eq!(dm.d, vec![0.0, 2.0, 1.0, 0.0, 1.0]);
        let s: Vec<_> = dm.s.edges().collect();
        assert_eq!(s, vec![(1, 2), (1, 4), (2, 1), (4, 1)]);
        // cross-check against the dense diagonal of A²
        let a = g.to_dense();
        let a2 = &a * &a;
        for i in 0..5 {
            assert_eq!(a2[(i, i)], dm.d[i]);
        }
    }

    #[test]
    fn undirected_graph_has_s_equal_a() {
        let g = NamedGraph::Squid.build().unwrap();
        let dm = g.derived();
        assert_eq!(dm.s, g);
        assert_eq!(dm.a_minus_s.edge_count(), 0);
        let deg: Vec<f64> = g.out_degrees().into_iter().map(|d| d as f64).collect();
        assert_eq!(dm.d, deg);
    }

    #[test]
    fn directed_three_cycle_has_no_reciprocity() {
        let g = NamedGraph::DirectedCycle { n: 3 }.build().unwrap();
        let dm = g.derived();
        assert!(dm.is_trivial());
        assert_eq!(dm.d, vec![0.0; 3]);
        assert_eq!(dm.a_minus_s, g);
    }

    #[test]
    fn circulant_is_regular() {
        let g = NamedGraph::RegularCirculant { n: 20, d: 4 }
            .build()
            .unwrap();
        assert!(g.out_degrees().iter().all(|&d| d == 4));
        assert!(g.is_symmetric());
    }

    #[test]
    fn named_parsing_round_trips() {
        for s in [
            "star:10",
            "regular:20:4",
            "cycle:5",
            "dcycle:3",
            "path:3",
            "figure1",
            "squid",
        ] {
            let g: NamedGraph = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        assert!("star:0".parse::<NamedGraph>().is_err());
        assert!("regular:6:3".parse::<NamedGraph>().is_err());
        assert!("regular:4:4".parse::<NamedGraph>().is_err());
        assert!("path:1".parse::<NamedGraph>().is_err());
        assert!("blob".parse::<NamedGraph>().is_err());
    }

    #[test]
    fn transpose_reverses_edges() {
        let g = NamedGraph::Figure1.build().unwrap();
        let t = g.transpose();
        for (i, j) in g.edges() {
            assert!(t.has_edge(j, i));
        }
        assert_eq!(t.edge_count(), g.edge_count());
        assert_eq!(t.derived().s, g.derived().s);
    }
}
