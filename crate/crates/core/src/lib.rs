//! Torus-coupled long-range random graphs and their activation dynamics.
//!
//! The model lives on the N×N torus (ℤ/Nℤ)². All torus grid edges are
//! present ("short" edges); in addition, every vertex pair at graph
//! distance d ≥ 2 independently carries a "long" edge with probability
//! p_d = c/(N·d). On such a graph, a synchronous threshold process runs:
//! a vertex is active at the next step when its closed neighborhood holds
//! at least k active vertices, with excitatory/inhibitory types weighting
//! the count when both are present.
//!
//! The crate provides:
//!
//! - [`torus`]: torus geometry, distance classes, and the edge law
//! - [`graph`]: exact-in-distribution sampling and a text serialization
//! - [`analysis`]: degree laws (empirical / exact convolution / Poisson),
//!   total-variation distance, exact and estimated diameters
//! - [`dynamics`]: the activation process and the mean-field density chain
//! - [`meanfield`]: transition maps, the Poissonized maps f̄_k, fixed
//!   points, and the critical probability p_c(λ)
//!
//! ```
//! use torusboot::{build_graph, long_degree_histogram, p_c, RngSeed, TorusParams};
//!
//! let params = TorusParams::new(64, 1.0)?;
//! let graph = build_graph(&params, RngSeed::new(7));
//! let mean_degree = long_degree_histogram(&graph).mean();
//! assert!((mean_degree - params.lambda()).abs() < 0.5);
//!
//! // critical density of the k=2 rule at this edge density
//! let pc = p_c(params.lambda(), 2)?;
//! assert!(pc > 0.0 && pc < 0.132);
//! # Ok::<(), torusboot::Error>(())
//! ```

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod meanfield;
pub mod torus;

pub use analysis::{
    exact_long_degree_distribution, long_degree_histogram, poisson_pmf, tv_distance,
    DegreeDistribution, DiameterMethod, DiameterReport, DistributionKind,
};
pub use dynamics::{
    mf_chain_run, mf_chain_step, run, step, ActivationConfig, ActivationState, NodeType,
    RunOutcome, RunStatus,
};
pub use error::{Error, ParseError};
pub use graph::{build_graph, expected_long_edge_count, parse, Graph, RngSeed};
pub use meanfield::{
    dpc_dlambda, f_mean, f_minus, f_plus, fbar_closed, fbar_generic, find_fixed_points, g_var, p_c,
    pc_curve, FixedPoint, GeneralizedRule, MeanFieldModel, Stability,
};
pub use torus::{lambda_size, offsets_at_distance, torus_distance, TorusParams, Vertex};
