//! Structural statistics: long-edge degree laws (empirical, exact by
//! convolution, Poisson), total-variation distance, and diameter.
//!
//! The exact long-degree law is the convolution of the independent
//! Binomial(|Λ_d|, p_d) class counts over d = 2..N. This is tractable and
//! serves as the oracle for the Poisson approximation: the long degree W
//! approaches Po(λ) with λ = 4c·ln 2 at total-variation rate O(1/N).

use crate::error::{Error, Result};
use crate::graph::{Graph, RngSeed};
use crate::torus::{lambda_size, TorusParams, Vertex};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Mass allowed beyond the truncation point of an exact or Poisson PMF.
pub const TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Empirical,
    ExactConvolution,
    Poisson,
}

/// A finite PMF over long-edge degrees 0..=k_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    pmf: Vec<f64>,
    kind: DistributionKind,
    lambda_param: Option<f64>,
}

impl DegreeDistribution {
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn lambda_param(&self) -> Option<f64> {
        self.lambda_param
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.pmf.iter().sum()
    }

    /// CSV emission, columns `degree,probability`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("degree,probability\n");
        for (k, p) in self.pmf.iter().enumerate() {
            out.push_str(&format!("{k},{p}\n"));
        }
        out
    }
}

/// Normalized histogram of long-edge degrees over all N² vertices.
pub fn long_degree_histogram(graph: &Graph) -> DegreeDistribution {
    let nv = graph.num_vertices();
    let max_deg = (0..nv)
        .map(|i| graph.long_neighbor_indices(i).len())
        .max()
        .unwrap_or(0);
    let mut counts = vec![0u64; max_deg + 1];
    for i in 0..nv {
        counts[graph.long_neighbor_indices(i).len()] += 1;
    }
    DegreeDistribution {
        pmf: counts.iter().map(|&c| c as f64 / nv as f64).collect(),
        kind: DistributionKind::Empirical,
        lambda_param: None,
    }
}

/// Binomial(m, p) PMF by the stable upward recurrence.
fn binomial_pmf(m: u64, p: f64) -> Vec<f64> {
    if p == 0.0 {
        return vec![1.0];
    }
    let m_us = m as usize;
    let mut out = Vec::with_capacity(m_us + 1);
    let q = 1.0 - p;
    if q == 0.0 {
        let mut v = vec![0.0; m_us + 1];
        v[m_us] = 1.0;
        return v;
    }
    let ratio = p / q;
    let mut term = q.powi(m as i32);
    for j in 0..=m_us {
        out.push(term);
        term *= (m - j as u64) as f64 / (j as f64 + 1.0) * ratio;
    }
    out
}

/// Exact PMF of the long degree W = Σ_d Binomial(|Λ_d|, p_d), truncated at
/// `k_max`. Rejects `k_max` values that leave more than [`TAIL_TOL`] mass
/// beyond the truncation point.
pub fn exact_long_degree_distribution(
    params: &TorusParams,
    k_max: usize,
) -> Result<DegreeDistribution> {
    let n = params.n();
    let mut pmf = vec![1.0];
    for d in 2..=n {
        let m = lambda_size(n, d).unwrap();
        let p = params.long_edge_prob(d).unwrap();
        if p == 0.0 {
            continue;
        }
        let b = binomial_pmf(m, p);
        // entries beyond k_max cannot influence the kept bins
        let blen = b.len().min(k_max + 1);
        let mut next = vec![0.0; (pmf.len() + blen - 1).min(k_max + 1)];
        for (i, &pi) in pmf.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            for (j, &bj) in b[..blen].iter().enumerate() {
                if i + j > k_max {
                    break;
                }
                next[i + j] += pi * bj;
            }
        }
        pmf = next;
    }
    let tail = 1.0 - pmf.iter().sum::<f64>();
    if tail > TAIL_TOL {
        return Err(Error::TruncationTooSmall {
            k_max,
            tail,
            bound: TAIL_TOL,
        });
    }
    Ok(DegreeDistribution {
        pmf,
        kind: DistributionKind::ExactConvolution,
        lambda_param: None,
    })
}

/// [`exact_long_degree_distribution`] with `k_max` grown adaptively until
/// the tail bound holds.
pub fn exact_long_degree_distribution_auto(params: &TorusParams) -> DegreeDistribution {
    let mut k_max = (4.0 * params.lambda()).ceil() as usize + 20;
    loop {
        match exact_long_degree_distribution(params, k_max) {
            Ok(d) => return d,
            Err(_) => k_max *= 2,
        }
    }
}

/// Po(λ) PMF truncated at `k_max`, computed by the upward recurrence.
pub fn poisson_pmf(lambda: f64, k_max: usize) -> Result<DegreeDistribution> {
    if !lambda.is_finite() || lambda <= 0.0 || lambda > 700.0 {
        return Err(Error::InvalidParameter(format!(
            "Poisson rate must lie in (0, 700] (got {lambda})"
        )));
    }
    let mut pmf = Vec::with_capacity(k_max + 1);
    let mut term = (-lambda).exp();
    for k in 0..=k_max {
        pmf.push(term);
        term *= lambda / (k as f64 + 1.0);
    }
    Ok(DegreeDistribution {
        pmf,
        kind: DistributionKind::Poisson,
        lambda_param: Some(lambda),
    })
}

/// Total variation distance ½·Σ_k |a_k − b_k|, padding the shorter support
/// with zeros.
pub fn tv_distance(a: &DegreeDistribution, b: &DegreeDistribution) -> f64 {
    let len = a.pmf.len().max(b.pmf.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len)
        .map(|i| (get(&a.pmf, i) - get(&b.pmf, i)).abs())
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiameterMethod {
    AllPairs,
    DoubleSweep,
}

/// Diameter value with the method that produced it. `AllPairs` is exact;
/// `DoubleSweep` is a lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiameterReport {
    pub value: u32,
    pub method: DiameterMethod,
    pub sources_used: u32,
}

/// Largest side for which all-pairs BFS is allowed (Θ(N⁴) work).
pub const ALL_PAIRS_MAX_SIDE: u32 = 64;

fn bfs_distances(graph: &Graph, source: usize, dist: &mut [u32], queue: &mut VecDeque<u32>) {
    dist.fill(u32::MAX);
    queue.clear();
    dist[source] = 0;
    queue.push_back(source as u32);
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize];
        for v in graph.short_neighbor_indices(u as usize) {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = du + 1;
                queue.push_back(v);
            }
        }
        for &v in graph.long_neighbor_indices(u as usize) {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = du + 1;
                queue.push_back(v);
            }
        }
    }
}

fn eccentricity_of(graph: &Graph, source: usize) -> (u32, usize) {
    let mut dist = vec![u32::MAX; graph.num_vertices()];
    let mut queue = VecDeque::new();
    bfs_distances(graph, source, &mut dist, &mut queue);
    let (far, &ecc) = dist
        .iter()
        .enumerate()
        .max_by_key(|&(_, &d)| d)
        .expect("nonempty graph");
    (ecc, far)
}

/// Eccentricity of `v` in the full graph (short + long edges, unit weights).
/// The torus edges keep the graph connected, so this is always finite.
pub fn bfs_eccentricity(graph: &Graph, v: Vertex) -> u32 {
    eccentricity_of(graph, v.index(graph.n())).0
}

/// Exact diameter by all-pairs BFS, parallel over sources. Restricted to
/// N ≤ [`ALL_PAIRS_MAX_SIDE`]; use [`estimate_diameter`] beyond that.
pub fn exact_diameter(graph: &Graph) -> Result<DiameterReport> {
    if graph.n() > ALL_PAIRS_MAX_SIDE {
        return Err(Error::InvalidParameter(format!(
            "all-pairs BFS is restricted to N ≤ {ALL_PAIRS_MAX_SIDE} (got N={}); use estimate_diameter",
            graph.n()
        )));
    }
    let nv = graph.num_vertices();
    let value = (0..nv)
        .into_par_iter()
        .map(|s| eccentricity_of(graph, s).0)
        .max()
        .unwrap_or(0);
    Ok(DiameterReport {
        value,
        method: DiameterMethod::AllPairs,
        sources_used: nv as u32,
    })
}

/// Double-sweep lower bound on the diameter: BFS from a random source, then
/// BFS from the farthest vertex found, repeated `num_sources` times. For a
/// fixed seed the result is nondecreasing in `num_sources`.
pub fn estimate_diameter(graph: &Graph, num_sources: u32, seed: RngSeed) -> Result<DiameterReport> {
    if num_sources < 1 {
        return Err(Error::InvalidParameter(
            "estimate_diameter requires num_sources ≥ 1".into(),
        ));
    }
    let mut rng = seed.rng();
    let nv = graph.num_vertices();
    let mut best = 0;
    for _ in 0..num_sources {
        let s = rng.random_range(0..nv);
        let (ecc, far) = eccentricity_of(graph, s);
        best = best.max(ecc);
        let (ecc2, _) = eccentricity_of(graph, far);
        best = best.max(ecc2);
    }
    Ok(DiameterReport {
        value: best,
        method: DiameterMethod::DoubleSweep,
        sources_used: num_sources,
    })
}
