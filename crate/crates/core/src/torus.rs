//! Geometry of the discrete torus (ℤ/Nℤ)²: wrapped L1 distance, distance
//! classes Λ_d and their sizes, and the long-edge probability law
//! p_d = c/(N·d).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Smallest admissible torus side. Below 3 the four short neighbors of a
/// vertex are no longer distinct.
pub const MIN_SIDE: u32 = 3;

/// Largest admissible torus side; the sampler's distance-class table holds
/// all N²−1 offsets, so this caps it at ~134 MB.
pub const MAX_SIDE: u32 = 1 << 12;

/// Parameters of the torus-coupled random graph: side length `N`, edge
/// density constant `c`, and the distance exponent `alpha` (fixed to 1).
///
/// A distance-d pair (d ≥ 2) carries an independent long edge with
/// probability p_d = c/(N·d); construction requires c/(2N) < 1 so that
/// every p_d < 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusParams {
    n: u32,
    c: f64,
    alpha: f64,
}

impl TorusParams {
    /// New parameters with `alpha = 1`. `c = 0` is allowed and yields the
    /// bare torus (no long edges), useful as a control case.
    pub fn new(n: u32, c: f64) -> Result<Self> {
        Self::with_alpha(n, c, 1.0)
    }

    /// Only `alpha = 1` is supported; anything else is rejected here so the
    /// parameter can never silently drift.
    pub fn with_alpha(n: u32, c: f64, alpha: f64) -> Result<Self> {
        if alpha != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha is fixed to 1 (got {alpha})"
            )));
        }
        if n < MIN_SIDE {
            return Err(Error::InvalidParameter(format!(
                "side length must satisfy N ≥ 3 (got {n})"
            )));
        }
        if n > MAX_SIDE {
            return Err(Error::InvalidParameter(format!(
                "side length must satisfy N ≤ {MAX_SIDE} (got {n})"
            )));
        }
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "edge density c must be finite and ≥ 0 (got {c})"
            )));
        }
        if c / (2.0 * n as f64) >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "c/(2N) must be < 1 so that every p_d < 1 (c={c}, N={n})"
            )));
        }
        Ok(Self { n, c, alpha })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn num_vertices(&self) -> usize {
        (self.n as usize) * (self.n as usize)
    }

    /// Poisson rate of the long-edge degree law, λ = 4c·ln 2.
    pub fn lambda(&self) -> f64 {
        4.0 * self.c * std::f64::consts::LN_2
    }

    /// Probability p_d = c/(N·d) of a long edge between a fixed pair at
    /// distance d. Distance-1 pairs carry only the fixed short edge, so
    /// d < 2 is rejected.
    pub fn long_edge_prob(&self, d: u32) -> Result<f64> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!(
                "long edges require distance d ≥ 2 (got {d})"
            )));
        }
        Ok(self.c / (self.n as f64 * d as f64))
    }
}

/// A vertex of the torus, coordinates already reduced mod N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub x: u32,
    pub y: u32,
}

impl Vertex {
    pub fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    /// Reduce arbitrary integer coordinates mod N.
    pub fn wrapped(x: i64, y: i64, n: u32) -> Self {
        let n = n as i64;
        Self {
            x: x.rem_euclid(n) as u32,
            y: y.rem_euclid(n) as u32,
        }
    }

    /// Row-major linear index: `y * N + x`.
    pub fn index(&self, n: u32) -> usize {
        self.y as usize * n as usize + self.x as usize
    }

    pub fn from_index(idx: usize, n: u32) -> Self {
        Self {
            x: (idx % n as usize) as u32,
            y: (idx / n as usize) as u32,
        }
    }

    /// Translate by an offset, wrapping around the torus.
    pub fn offset(&self, dx: u32, dy: u32, n: u32) -> Self {
        Self {
            x: (self.x + dx) % n,
            y: (self.y + dy) % n,
        }
    }
}

/// Graph distance on the bare torus grid: the wrapped L1 (Manhattan)
/// distance, min(|Δx|, N−|Δx|) + min(|Δy|, N−|Δy|).
pub fn torus_distance(u: Vertex, v: Vertex, n: u32) -> u32 {
    let dx = u.x.abs_diff(v.x);
    let dy = u.y.abs_diff(v.y);
    dx.min(n - dx) + dy.min(n - dy)
}

/// |Λ_d|: the number of vertices at distance exactly d from a fixed vertex.
///
/// For N odd: 4d up to ⌊N/2⌋, then 4(N−d). For N even: 4d below N/2,
/// 4d−2 at N/2, 4(N−d) above, and a single antipode at d = N.
pub fn lambda_size(n: u32, d: u32) -> Result<u64> {
    if d < 1 || d > n {
        return Err(Error::InvalidParameter(format!(
            "distance must lie in [1, N] (got d={d}, N={n})"
        )));
    }
    let (n64, d64) = (n as u64, d as u64);
    let size = if n % 2 == 1 {
        if d64 <= n64 / 2 {
            4 * d64
        } else {
            4 * (n64 - d64)
        }
    } else if d64 < n64 / 2 {
        4 * d64
    } else if d64 == n64 / 2 {
        4 * d64 - 2
    } else if d64 < n64 {
        4 * (n64 - d64)
    } else {
        1
    };
    Ok(size)
}

/// All offsets (Δx, Δy) ∈ [0,N)² at wrapped L1 distance exactly d from the
/// origin. Exactly `lambda_size(n, d)` of them.
pub fn offsets_at_distance(n: u32, d: u32) -> Result<Vec<(u32, u32)>> {
    // reuse lambda_size's range validation
    lambda_size(n, d)?;
    let origin = Vertex::new(0, 0);
    let mut out = Vec::new();
    for dy in 0..n {
        for dx in 0..n {
            if torus_distance(origin, Vertex::new(dx, dy), n) == d {
                out.push((dx, dy));
            }
        }
    }
    Ok(out)
}

/// Offsets for every distance class in one pass; entry `d` holds the class
/// Λ_d (entry 0 is empty). Used by the edge sampler.
pub(crate) fn distance_classes(n: u32) -> Vec<Vec<(u32, u32)>> {
    let mut classes = vec![Vec::new(); n as usize + 1];
    let origin = Vertex::new(0, 0);
    for dy in 0..n {
        for dx in 0..n {
            if dx == 0 && dy == 0 {
                continue;
            }
            let d = torus_distance(origin, Vertex::new(dx, dy), n);
            classes[d as usize].push((dx, dy));
        }
    }
    classes
}
