//! Simple undirected graphs on labeled vertices, seeded G(n,p) sampling,
//! star counting, and greedy star packing — the substrate every other
//! module builds on.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::combin::binomial;
use crate::{Error, Result};

/// Simple undirected graph on vertices `0..n`.
///
/// Immutable in practice: peeling and edge removal return new graphs, so a
/// `Graph` can be shared read-only across workers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<BTreeSet<u32>>,
    m: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            adj: vec![BTreeSet::new(); n],
            m: 0,
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut g = Graph::empty(n);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                g.add_edge(u, v).unwrap();
            }
        }
        g
    }

    /// Complete bipartite graph with parts `0..y` and `y..y+z`.
    pub fn complete_bipartite(y: usize, z: usize) -> Self {
        let mut g = Graph::empty(y + z);
        for u in 0..y as u32 {
            for v in y as u32..(y + z) as u32 {
                g.add_edge(u, v).unwrap();
            }
        }
        g
    }

    /// Star `K_{1,arms}` with hub 0 and leaves `1..=arms`.
    pub fn star(arms: usize) -> Self {
        let mut g = Graph::empty(arms + 1);
        for v in 1..=arms as u32 {
            g.add_edge(0, v).unwrap();
        }
        g
    }

    /// Inserts an edge; rejects self-loops and out-of-range endpoints,
    /// ignores duplicates (returns false).
    pub fn add_edge(&mut self, u: u32, v: u32) -> Result<bool> {
        if u == v || u as usize >= self.n || v as usize >= self.n {
            return Err(Error::InvalidParameter(format!(
                "edge ({u}, {v}) invalid on {} vertices",
                self.n
            )));
        }
        if self.adj[u as usize].insert(v) {
            self.adj[v as usize].insert(u);
            self.m += 1;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.m
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        (u as usize) < self.n && self.adj[u as usize].contains(&v)
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(|s| s.len()).max().unwrap_or(0)
    }

    pub fn neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.adj[v as usize].iter().copied()
    }

    /// Edges as (min, max) pairs in ascending lexicographic order.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.m);
        for u in 0..self.n as u32 {
            for &v in &self.adj[u as usize] {
                if v > u {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Number of (center, r-leaf-subset) copies of `K_{1,r}`, computed as
    /// `Σ_v C(deg(v), r)`.
    pub fn count_stars(&self, r: u64) -> u64 {
        assert!(r >= 1, "count_stars: r must be >= 1");
        let total: u128 = self.adj.iter().map(|s| binomial(s.len() as u64, r)).sum();
        u64::try_from(total).expect("star count exceeds u64")
    }

    /// Plain-text edge list: first line `n m`, then `u v` per edge with
    /// `u < v`, ascending lexicographic. Bit-exact for golden-file tests.
    pub fn to_edge_list_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n, self.m);
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    pub fn from_edge_list_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let mut it = header.split_whitespace();
        let n: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse("bad header".into()))?;
        let m: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse("bad header".into()))?;
        let mut g = Graph::empty(n);
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let u: u32 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad edge line {line:?}")))?;
            let v: u32 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad edge line {line:?}")))?;
            g.add_edge(u, v)?;
        }
        if g.m != m {
            return Err(Error::Parse(format!(
                "edge count mismatch: header {m}, got {}",
                g.m
            )));
        }
        Ok(g)
    }
}

/// An edge-disjoint collection of stars `K_{1,k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarPacking {
    pub k: u64,
    /// (center, leaf set) pairs; each leaf set has exactly `k` elements.
    pub stars: Vec<(u32, BTreeSet<u32>)>,
}

impl StarPacking {
    pub fn size(&self) -> usize {
        self.stars.len()
    }

    /// All (min, max) edges used by the packing, in listing order.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for (c, leaves) in &self.stars {
            for &l in leaves {
                out.push((*c.min(&l), *c.max(&l)));
            }
        }
        out
    }

    /// Checks that every star has k leaves, every edge exists in `host`,
    /// and no edge is used twice.
    pub fn validate_in(&self, host: &Graph) -> Result<()> {
        let mut used: HashSet<(u32, u32)> = HashSet::new();
        for (c, leaves) in &self.stars {
            if leaves.len() as u64 != self.k {
                return Err(Error::InvalidParameter(format!(
                    "star at {c} has {} leaves, expected {}",
                    leaves.len(),
                    self.k
                )));
            }
            for &l in leaves {
                if !host.has_edge(*c, l) {
                    return Err(Error::ForeignPacking);
                }
                if !used.insert((*c.min(&l), *c.max(&l))) {
                    return Err(Error::InvalidParameter(format!(
                        "edge ({c}, {l}) used by two stars"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Samples `G(n,p)` with a counter-based generator: the full edge sequence
/// is a pure function of `(n, p, seed)` on every platform. `p ∈ {0, 1}` is
/// deterministic regardless of seed.
pub fn sample_gnp(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if p == 0.0 {
        return Ok(Graph::empty(n));
    }
    if p == 1.0 {
        return Ok(Graph::complete(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::empty(n);
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            // 53 uniform bits, the canonical [0,1) double
            let x = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if x < p {
                g.add_edge(u, v)?;
            }
        }
    }
    Ok(g)
}

/// Maximal edge-disjoint collection of `K_{1,k}`, built deterministically:
/// centers are scanned in ascending vertex order and each center repeatedly
/// takes its `k` lowest-indexed unused incident edges while at least `k`
/// remain.
pub fn greedy_star_packing(g: &Graph, k: u64) -> StarPacking {
    assert!(k >= 1, "greedy_star_packing: k must be >= 1");
    let mut used: HashSet<(u32, u32)> = HashSet::new();
    let mut stars = Vec::new();
    for c in 0..g.n() as u32 {
        loop {
            let free: Vec<u32> = g
                .neighbors(c)
                .filter(|&w| !used.contains(&(c.min(w), c.max(w))))
                .collect();
            if (free.len() as u64) < k {
                break;
            }
            let leaves: BTreeSet<u32> = free.into_iter().take(k as usize).collect();
            for &l in &leaves {
                used.insert((c.min(l), c.max(l)));
            }
            stars.push((c, leaves));
        }
    }
    StarPacking { k, stars }
}

/// `Σ_v ⌊deg(v)/k⌋` — every packing maps each star to its center, and stars
/// sharing a center use disjoint k-sets of its incident edges, so this
/// always dominates the maximum edge-disjoint packing size.
pub fn packing_upper_bound(g: &Graph, k: u64) -> u64 {
    assert!(k >= 1);
    (0..g.n() as u32).map(|v| g.degree(v) as u64 / k).sum()
}

/// Removes every edge incident to a center vertex of the packing; the
/// vertex set is unchanged. Rejects packings using edges absent from `g`.
pub fn remove_center_incident_edges(g: &Graph, packing: &StarPacking) -> Result<Graph> {
    packing.validate_in(g)?;
    let centers: HashSet<u32> = packing.stars.iter().map(|(c, _)| *c).collect();
    let mut out = Graph::empty(g.n());
    for (u, v) in g.edges() {
        if !centers.contains(&u) && !centers.contains(&v) {
            out.add_edge(u, v)?;
        }
    }
    Ok(out)
}
