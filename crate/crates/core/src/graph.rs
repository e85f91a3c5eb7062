//! Undirected simple graphs, (total) domination checks and exhaustive
//! minimum-set oracles.
//!
//! Vertex sets passed across the public API are slices of vertex indices.
//! The brute-force oracles work on `u64` bitmasks internally, bit `i` set
//! meaning vertex `i` is in the set.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Largest vertex count accepted by the exhaustive oracles.
pub const MAX_BRUTEFORCE_VERTICES: usize = 24;

#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n_vertices", &self.n_vertices)
            .field("edges", &self.edges)
            .finish()
    }
}

impl Graph {
    /// Builds a graph from an edge list. Edges are stored as `(min, max)`;
    /// self-loops, duplicates and out-of-range endpoints are rejected.
    pub fn new(n_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut stored = Vec::new();
        let mut adjacency = vec![Vec::new(); n_vertices];
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n_vertices {
                    return Err(Error::VertexOutOfRange { vertex: w, n_vertices });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge(key.0, key.1));
            }
            stored.push(key);
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph {
            n_vertices,
            edges: stored,
            adjacency,
        })
    }

    /// The 6-vertex, 7-edge instance used throughout the experiments.
    pub fn six_vertex_example() -> Self {
        Graph::new(6, [(0, 1), (0, 5), (1, 2), (2, 3), (3, 4), (4, 5), (2, 4)])
            .expect("builtin instance is a simple graph")
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Open neighborhood N(v), sorted ascending.
    pub fn neighbors(&self, v: usize) -> Result<&[usize]> {
        self.check_vertex(v)?;
        Ok(&self.adjacency[v])
    }

    pub fn degree(&self, v: usize) -> Result<usize> {
        self.neighbors(v).map(<[usize]>::len)
    }

    pub(crate) fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    /// First vertex with an empty neighborhood, if any.
    pub fn isolated_vertex(&self) -> Option<usize> {
        self.adjacency.iter().position(Vec::is_empty)
    }

    /// Fails with [`Error::Infeasible`] when some vertex is isolated.
    pub fn require_tds_feasible(&self) -> Result<()> {
        match self.isolated_vertex() {
            Some(vertex) => Err(Error::Infeasible { vertex }),
            None => Ok(()),
        }
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n_vertices {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: v,
                n_vertices: self.n_vertices,
            })
        }
    }

    fn membership(&self, d: &[usize]) -> Result<Vec<bool>> {
        let mut member = vec![false; self.n_vertices];
        for &v in d {
            self.check_vertex(v)?;
            member[v] = true;
        }
        Ok(member)
    }

    /// Every vertex, members of `d` included, has a neighbor in `d`.
    pub fn is_total_dominating_set(&self, d: &[usize]) -> Result<bool> {
        let member = self.membership(d)?;
        Ok(self
            .adjacency
            .iter()
            .all(|nbrs| nbrs.iter().any(|&u| member[u])))
    }

    /// Every vertex outside `d` has a neighbor in `d`.
    pub fn is_dominating_set(&self, d: &[usize]) -> Result<bool> {
        let member = self.membership(d)?;
        Ok(self
            .adjacency
            .iter()
            .enumerate()
            .all(|(v, nbrs)| member[v] || nbrs.iter().any(|&u| member[u])))
    }

    pub fn degree_partition(&self) -> DegreePartition {
        let mut part = DegreePartition::default();
        for (v, nbrs) in self.adjacency.iter().enumerate() {
            match nbrs.len() {
                0 => part.v0.push(v),
                1 => part.v1.push(v),
                2 => part.v2.push(v),
                _ => part.v_ge3.push(v),
            }
        }
        part
    }

    /// Neighborhood bitmasks for the mask-based checks below.
    pub(crate) fn neighbor_masks(&self) -> Vec<u64> {
        self.adjacency
            .iter()
            .map(|nbrs| nbrs.iter().fold(0u64, |m, &u| m | (1 << u)))
            .collect()
    }

    pub fn minimum_tds_bruteforce(&self) -> Result<MinimumSets> {
        self.require_tds_feasible()?;
        self.bruteforce(tds_mask)
    }

    pub fn minimum_ds_bruteforce(&self) -> Result<MinimumSets> {
        self.bruteforce(ds_mask)
    }

    fn bruteforce(&self, accept: impl Fn(&[u64], u64) -> bool) -> Result<MinimumSets> {
        let n = self.n_vertices;
        if n > MAX_BRUTEFORCE_VERTICES {
            return Err(Error::Resource(format!(
                "exhaustive search limited to {MAX_BRUTEFORCE_VERTICES} vertices, got {n}"
            )));
        }
        let masks = self.neighbor_masks();
        for k in 0..=n {
            let sets: Vec<u64> = subsets_of_size(n, k).filter(|&d| accept(&masks, d)).collect();
            if !sets.is_empty() {
                return Ok(MinimumSets {
                    size: k,
                    sets: sets.into_iter().map(mask_to_vertices).collect(),
                });
            }
        }
        // The full vertex set always dominates, and totally dominates once
        // isolated vertices have been ruled out; only n == 0 lands here.
        Ok(MinimumSets {
            size: 0,
            sets: vec![Vec::new()],
        })
    }
}

pub(crate) fn tds_mask(neighbor_masks: &[u64], d: u64) -> bool {
    neighbor_masks.iter().all(|&nm| nm & d != 0)
}

pub(crate) fn ds_mask(neighbor_masks: &[u64], d: u64) -> bool {
    neighbor_masks
        .iter()
        .enumerate()
        .all(|(v, &nm)| d & (1 << v) != 0 || nm & d != 0)
}

pub(crate) fn mask_to_vertices(mask: u64) -> Vec<usize> {
    (0..64).filter(|&i| mask & (1 << i) != 0).collect()
}

/// All `k`-subsets of `0..n` as bitmasks, in increasing numeric order
/// (Gosper's hack).
fn subsets_of_size(n: usize, k: usize) -> impl Iterator<Item = u64> {
    let limit = 1u64 << n;
    let first = if k == 0 { 0 } else { (1u64 << k) - 1 };
    let mut next = Some(first).filter(|&m| k <= n && (m < limit || n == 0 && m == 0));
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let succ = (((r ^ cur) >> 2) / c) | r;
            Some(succ).filter(|&s| s < limit)
        };
        Some(cur)
    })
}

/// Vertices grouped by degree: 0, 1, 2 and 3-or-more.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DegreePartition {
    pub v0: Vec<usize>,
    pub v1: Vec<usize>,
    pub v2: Vec<usize>,
    pub v_ge3: Vec<usize>,
}

/// Result of an exhaustive minimum search: the optimal cardinality and every
/// set attaining it, each sorted ascending, listed in bitmask order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimumSets {
    pub size: usize,
    pub sets: Vec<Vec<usize>>,
}

impl MinimumSets {
    pub fn contains(&self, set: &[usize]) -> bool {
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        self.sets.contains(&sorted)
    }
}
