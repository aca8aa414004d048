//! Moral graphs, variable orderings and induced width.

use std::collections::BTreeSet;

use super::BeliefNetwork;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    adjacency: Vec<BTreeSet<usize>>,
}

impl UndirectedGraph {
    pub fn new(n: usize) -> Self {
        UndirectedGraph {
            adjacency: vec![BTreeSet::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Adds `a - b`. Self-loops are ignored.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adjacency[a].insert(b);
            self.adjacency[b].insert(a);
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].contains(&b)
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.range(a + 1..).map(move |&b| (a, b)))
            .collect()
    }
}

/// Connects every parent to its child and every pair of co-parents.
pub fn moral_graph(net: &BeliefNetwork) -> UndirectedGraph {
    let mut g = UndirectedGraph::new(net.len());
    for child in 0..net.len() {
        let ps = net.parents(child);
        for (i, &p) in ps.iter().enumerate() {
            g.add_edge(p, child);
            for &q in &ps[i + 1..] {
                g.add_edge(p, q);
            }
        }
    }
    g
}

/// A permutation of the nodes with its width and induced width.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ordering {
    sequence: Vec<usize>,
    width: usize,
    induced_width: usize,
}

impl Ordering {
    /// Measures `sequence` on `g`.
    pub fn new(g: &UndirectedGraph, sequence: Vec<usize>) -> Result<Self> {
        let (width, induced_width) = width_along(g, &sequence)?;
        Ok(Ordering {
            sequence,
            width,
            induced_width,
        })
    }

    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn induced_width(&self) -> usize {
        self.induced_width
    }
}

impl AsRef<[usize]> for Ordering {
    fn as_ref(&self) -> &[usize] {
        &self.sequence
    }
}

/// Position of each node in `sequence`, or `OrderingMismatch` if it is not a
/// permutation of `0..n`.
pub(crate) fn positions(n: usize, sequence: &[usize]) -> Result<Vec<usize>> {
    if sequence.len() != n {
        return Err(Error::OrderingMismatch);
    }
    let mut pos = vec![usize::MAX; n];
    for (i, &v) in sequence.iter().enumerate() {
        if v >= n || pos[v] != usize::MAX {
            return Err(Error::OrderingMismatch);
        }
        pos[v] = i;
    }
    Ok(pos)
}

/// Width and induced width of `sequence`. The induced graph is built by
/// walking from the last node to the first and connecting the earlier
/// neighbors of each node.
pub fn width_along(g: &UndirectedGraph, sequence: &[usize]) -> Result<(usize, usize)> {
    let pos = positions(g.len(), sequence)?;
    let width = sequence
        .iter()
        .map(|&v| g.neighbors(v).iter().filter(|&&w| pos[w] < pos[v]).count())
        .max()
        .unwrap_or(0);
    let mut induced = g.adjacency.clone();
    let mut induced_width = 0;
    for &v in sequence.iter().rev() {
        let earlier: Vec<usize> = induced[v]
            .iter()
            .copied()
            .filter(|&w| pos[w] < pos[v])
            .collect();
        induced_width = induced_width.max(earlier.len());
        for (i, &a) in earlier.iter().enumerate() {
            for &b in &earlier[i + 1..] {
                induced[a].insert(b);
                induced[b].insert(a);
            }
        }
    }
    Ok((width, induced_width))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Heuristic {
    MinDegree,
    MinFill,
    Given(Vec<usize>),
}

/// Greedy elimination on a working copy of `g`; the node eliminated first is
/// placed last in the returned ordering. Ties go to the smallest id.
pub fn find_ordering(g: &UndirectedGraph, heuristic: Heuristic) -> Result<Ordering> {
    let sequence = match heuristic {
        Heuristic::Given(seq) => seq,
        Heuristic::MinDegree => greedy_elimination(g, |work, v| work[v].len()),
        Heuristic::MinFill => greedy_elimination(g, fill_in),
    };
    Ordering::new(g, sequence)
}

fn fill_in(work: &[BTreeSet<usize>], v: usize) -> usize {
    let ns: Vec<usize> = work[v].iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in ns.iter().enumerate() {
        for &b in &ns[i + 1..] {
            if !work[a].contains(&b) {
                missing += 1;
            }
        }
    }
    missing
}

fn greedy_elimination(
    g: &UndirectedGraph,
    cost: impl Fn(&[BTreeSet<usize>], usize) -> usize,
) -> Vec<usize> {
    let n = g.len();
    let mut work = g.adjacency.clone();
    let mut alive = vec![true; n];
    let mut eliminated = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (cost(&work, v), v))
            .expect("a live node remains");
        let ns: Vec<usize> = work[v].iter().copied().collect();
        for (i, &a) in ns.iter().enumerate() {
            work[a].remove(&v);
            for &b in &ns[i + 1..] {
                work[a].insert(b);
                work[b].insert(a);
            }
        }
        work[v].clear();
        alive[v] = false;
        eliminated.push(v);
    }
    eliminated.reverse();
    eliminated
}
