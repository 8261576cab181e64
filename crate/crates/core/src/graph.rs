//! Sampling of the torus-coupled random graph and its text serialization.
//!
//! Short (torus) edges are never materialized; a `Graph` stores only the
//! long edges plus a per-vertex long-adjacency list, and neighborhood
//! iteration fuses the four implicit torus neighbors with that list.
//!
//! Sampling works per distance class: within class d every one of the
//! M_d = N²|Λ_d|/2 pairs carries an independent Bernoulli(p_d) edge, so the
//! class edge count is Binomial(M_d, p_d) and, given the count, the chosen
//! pairs are uniform without replacement. Drawing the count and then
//! rejection-sampling distinct pairs reproduces the product law exactly
//! while touching only O(|E_ℓ|) pairs instead of all O(N⁴).

use crate::error::{Error, ParseError, Result};
use crate::torus::{distance_classes, torus_distance, TorusParams, Vertex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use std::collections::HashSet;

/// Seed plus stream id. The same (seed, stream) always reproduces the same
/// draws; distinct streams give independent generators for the same seed
/// (replicas, sweep cells). Backed by ChaCha8, which is stable across
/// platforms and releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// An instance of the random graph: torus parameters, the seed it was built
/// from, and the explicit long edges (canonically ordered).
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    params: TorusParams,
    seed: u64,
    long_edges: Vec<(Vertex, Vertex)>,
    adj: Vec<Vec<u32>>,
}

impl Graph {
    /// Assemble a graph from an explicit long-edge list, validating the
    /// structural invariants (distance ≥ 2, no duplicates).
    pub fn from_long_edges(
        params: TorusParams,
        seed: u64,
        edges: impl IntoIterator<Item = (Vertex, Vertex)>,
    ) -> Result<Self> {
        let n = params.n();
        let mut canonical: Vec<(Vertex, Vertex)> = Vec::new();
        let mut seen = HashSet::new();
        for (u, v) in edges {
            if u.x >= n || u.y >= n || v.x >= n || v.y >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge endpoint out of range for N={n}: ({},{})-({},{})",
                    u.x, u.y, v.x, v.y
                )));
            }
            if torus_distance(u, v, n) < 2 {
                return Err(Error::InvalidParameter(format!(
                    "long edge requires distance ≥ 2: ({},{})-({},{})",
                    u.x, u.y, v.x, v.y
                )));
            }
            let e = canonical_edge(u, v);
            if !seen.insert(e) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate long edge ({},{})-({},{})",
                    u.x, u.y, v.x, v.y
                )));
            }
            canonical.push(e);
        }
        canonical.sort_unstable();
        Ok(Self::assemble(params, seed, canonical))
    }

    fn assemble(params: TorusParams, seed: u64, sorted_edges: Vec<(Vertex, Vertex)>) -> Self {
        let n = params.n();
        let mut adj = vec![Vec::new(); params.num_vertices()];
        for &(u, v) in &sorted_edges {
            adj[u.index(n)].push(v.index(n) as u32);
            adj[v.index(n)].push(u.index(n) as u32);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Self {
            params,
            seed,
            long_edges: sorted_edges,
            adj,
        }
    }

    pub fn params(&self) -> &TorusParams {
        &self.params
    }

    pub fn n(&self) -> u32 {
        self.params.n()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_vertices(&self) -> usize {
        self.params.num_vertices()
    }

    pub fn num_long_edges(&self) -> usize {
        self.long_edges.len()
    }

    pub fn long_edges(&self) -> &[(Vertex, Vertex)] {
        &self.long_edges
    }

    /// Long-edge degree of a vertex.
    pub fn long_degree(&self, v: Vertex) -> usize {
        self.adj[v.index(self.n())].len()
    }

    /// Indices of the long-edge neighbors of vertex `idx`.
    pub fn long_neighbor_indices(&self, idx: usize) -> &[u32] {
        &self.adj[idx]
    }

    /// The four torus neighbors of vertex `idx`, as indices.
    pub fn short_neighbor_indices(&self, idx: usize) -> [u32; 4] {
        let n = self.n() as usize;
        let (x, y) = (idx % n, idx / n);
        let left = y * n + (x + n - 1) % n;
        let right = y * n + (x + 1) % n;
        let up = ((y + n - 1) % n) * n + x;
        let down = ((y + 1) % n) * n + x;
        [left as u32, right as u32, up as u32, down as u32]
    }

    pub fn short_neighbors(&self, v: Vertex) -> [Vertex; 4] {
        let n = self.n();
        self.short_neighbor_indices(v.index(n))
            .map(|i| Vertex::from_index(i as usize, n))
    }

    /// Fused closed-neighborhood iteration: short then long neighbors.
    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        let n = self.n();
        let idx = v.index(n);
        self.short_neighbor_indices(idx)
            .into_iter()
            .chain(self.adj[idx].iter().copied())
            .map(move |i| Vertex::from_index(i as usize, n))
    }

    /// Text serialization: header `N c seed`, then one `x1 y1 x2 y2` line
    /// per long edge in sorted canonical order. UTF-8, LF line endings.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} {} {}\n", self.n(), self.params.c(), self.seed));
        for &(u, v) in &self.long_edges {
            out.push_str(&format!("{} {} {} {}\n", u.x, u.y, v.x, v.y));
        }
        out
    }
}

fn canonical_edge(u: Vertex, v: Vertex) -> (Vertex, Vertex) {
    if (u.x, u.y) <= (v.x, v.y) {
        (u, v)
    } else {
        (v, u)
    }
}

/// Expected number of long edges, the exact finite-N sum
/// Σ_{d=2}^{N} (N²|Λ_d|/2)·p_d. Asymptotically 2c·ln2·N² + O(N).
pub fn expected_long_edge_count(params: &TorusParams) -> f64 {
    let n = params.n();
    let n2 = (n as u64) * (n as u64);
    (2..=n)
        .map(|d| {
            let pairs = n2 * crate::torus::lambda_size(n, d).unwrap() / 2;
            pairs as f64 * params.long_edge_prob(d).unwrap()
        })
        .sum()
}

/// Sample the long-edge set. Identical in distribution to independent
/// per-pair Bernoulli(p_d) over all pairs at distance d ≥ 2.
pub fn sample_long_edges(params: &TorusParams, seed: RngSeed) -> Vec<(Vertex, Vertex)> {
    let n = params.n();
    let n2 = (n as u64) * (n as u64);
    let mut rng = seed.rng();
    let classes = distance_classes(n);
    let mut picked: HashSet<(u32, u32)> = HashSet::new();

    for d in 2..=n {
        let class = &classes[d as usize];
        if class.is_empty() {
            continue;
        }
        let pairs = n2 * class.len() as u64 / 2;
        let p = params.long_edge_prob(d).unwrap();
        if p == 0.0 {
            continue;
        }
        let count = Binomial::new(pairs, p).unwrap().sample(&mut rng);
        let mut taken = 0u64;
        while taken < count {
            // a uniform (vertex, offset) choice hits each unordered pair of
            // the class exactly twice, hence uniformly
            let u = rng.random_range(0..n2 as usize);
            let (dx, dy) = class[rng.random_range(0..class.len())];
            let uv = Vertex::from_index(u, n);
            let vv = uv.offset(dx, dy, n);
            let (a, b) = (
                (uv.index(n) as u32).min(vv.index(n) as u32),
                (uv.index(n) as u32).max(vv.index(n) as u32),
            );
            if picked.insert((a, b)) {
                taken += 1;
            }
        }
    }

    let mut edges: Vec<(Vertex, Vertex)> = picked
        .into_iter()
        .map(|(a, b)| {
            canonical_edge(
                Vertex::from_index(a as usize, n),
                Vertex::from_index(b as usize, n),
            )
        })
        .collect();
    edges.sort_unstable();
    edges
}

/// Sample a full graph instance.
pub fn build_graph(params: &TorusParams, seed: RngSeed) -> Graph {
    let edges = sample_long_edges(params, seed);
    Graph::assemble(*params, seed.seed, edges)
}

/// Parse the text format written by [`Graph::serialize`].
pub fn parse(input: &str) -> std::result::Result<Graph, ParseError> {
    let mut lines = input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());

    let (_, header) = lines
        .next()
        .ok_or_else(|| ParseError::MalformedHeader("empty input".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(ParseError::MalformedHeader(format!(
            "expected 3 fields, got {}",
            fields.len()
        )));
    }
    let n: u32 = fields[0]
        .parse()
        .map_err(|_| ParseError::MalformedHeader(format!("bad N: {:?}", fields[0])))?;
    let c: f64 = fields[1]
        .parse()
        .map_err(|_| ParseError::MalformedHeader(format!("bad c: {:?}", fields[1])))?;
    let seed: u64 = fields[2]
        .parse()
        .map_err(|_| ParseError::MalformedHeader(format!("bad seed: {:?}", fields[2])))?;
    let params = TorusParams::new(n, c).map_err(|e| ParseError::InvalidParams(e.to_string()))?;

    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in lines {
        let line_1 = lineno + 1;
        let coords: Vec<u32> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| ParseError::MalformedEdge { line: line_1 })?;
        if coords.len() != 4 {
            return Err(ParseError::MalformedEdge { line: line_1 });
        }
        if coords.iter().any(|&c| c >= n) {
            return Err(ParseError::CoordinateOutOfRange { line: line_1 });
        }
        let u = Vertex::new(coords[0], coords[1]);
        let v = Vertex::new(coords[2], coords[3]);
        if torus_distance(u, v, n) < 2 {
            return Err(ParseError::EdgeTooShort { line: line_1 });
        }
        let e = canonical_edge(u, v);
        if !seen.insert(e) {
            return Err(ParseError::DuplicateEdge { line: line_1 });
        }
        edges.push(e);
    }
    edges.sort_unstable();
    Ok(Graph::assemble(params, seed, edges))
}
