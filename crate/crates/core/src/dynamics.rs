//! The threshold activation process on a concrete graph, and the mean-field
//! Markov chain on densities.
//!
//! Updates are strictly synchronous: every vertex reads the time-t state.
//! The closed neighborhood (the vertex itself, its 4 torus neighbors, and
//! its long neighbors) feeds the rule. An excitatory vertex activates when
//! (active E members) − (active I members) ≥ k; an inhibitory vertex when
//! the total active count ≥ k. Active vertices can deactivate, so the
//! process is not monotone in time and can cycle.

use crate::error::{Error, Result};
use crate::graph::{Graph, RngSeed};
use crate::meanfield::{f_minus, f_plus, MeanFieldModel};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// How many recent states the cycle detector remembers.
const CYCLE_WINDOW: usize = 1024;

/// Population size above which binomial draws switch to the normal
/// approximation (with continuity correction).
pub const BINOMIAL_EXACT_MAX: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeType {
    Excitatory,
    Inhibitory,
}

/// Threshold k, initial activation probability, excitatory fraction, and
/// the step budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationConfig {
    pub k: u32,
    pub p_init: f64,
    pub excitatory_fraction: f64,
    pub max_steps: u64,
}

impl ActivationConfig {
    pub fn new(k: u32, p_init: f64) -> Self {
        Self {
            k,
            p_init,
            excitatory_fraction: 1.0,
            max_steps: 10_000,
        }
    }

    pub fn with_excitatory_fraction(mut self, f: f64) -> Self {
        self.excitatory_fraction = f;
        self
    }

    pub fn with_max_steps(mut self, steps: u64) -> Self {
        self.max_steps = steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_init", self.p_init),
            ("excitatory_fraction", self.excitatory_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0,1] (got {p})"
                )));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Per-vertex activity bits and immutable types at one time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationState {
    active: Vec<bool>,
    types: Vec<NodeType>,
    t: u64,
    active_count: usize,
}

impl ActivationState {
    pub fn from_parts(active: Vec<bool>, types: Vec<NodeType>) -> Result<Self> {
        if active.len() != types.len() {
            return Err(Error::InvalidParameter(format!(
                "state length mismatch: {} activity bits vs {} types",
                active.len(),
                types.len()
            )));
        }
        let active_count = active.iter().filter(|&&a| a).count();
        Ok(Self {
            active,
            types,
            t: 0,
            active_count,
        })
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.active[idx]
    }

    pub fn node_type(&self, idx: usize) -> NodeType {
        self.types[idx]
    }

    pub fn active_count(&self) -> usize {
        self.active_count
    }

    /// Density of active vertices, exactly active_count/N².
    pub fn rho(&self) -> f64 {
        self.active_count as f64 / self.active.len() as f64
    }

    /// Activity bits packed into words, for fingerprinting and comparison.
    fn packed(&self) -> Vec<u64> {
        let mut words = vec![0u64; self.active.len().div_ceil(64)];
        for (i, &a) in self.active.iter().enumerate() {
            if a {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        words
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    AllActive,
    AllInactive,
    CycleDetected,
    BudgetExhausted,
}

/// Run result: terminal status, step count, the density trajectory
/// (ρ_0..ρ_T), and the cycle length when one was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub steps_taken: u64,
    pub trajectory: Vec<f64>,
    pub cycle_length: Option<u64>,
}

/// Independent Bernoulli(p_init) activity and Bernoulli(excitatory_fraction)
/// type per vertex.
pub fn init_state(
    graph: &Graph,
    config: &ActivationConfig,
    seed: RngSeed,
) -> Result<ActivationState> {
    config.validate()?;
    let mut rng = seed.rng();
    let nv = graph.num_vertices();
    let active: Vec<bool> = (0..nv)
        .map(|_| rng.random::<f64>() < config.p_init)
        .collect();
    let types: Vec<NodeType> = (0..nv)
        .map(|_| {
            if rng.random::<f64>() < config.excitatory_fraction {
                NodeType::Excitatory
            } else {
                NodeType::Inhibitory
            }
        })
        .collect();
    ActivationState::from_parts(active, types)
}

/// One synchronous update of every vertex. Deterministic: the successor is
/// a pure function of (graph, state).
pub fn step(graph: &Graph, state: &ActivationState, k: u32) -> ActivationState {
    let nv = state.len();
    debug_assert_eq!(nv, graph.num_vertices());
    let next: Vec<bool> = (0..nv)
        .map(|idx| {
            let mut excitatory = 0i64;
            let mut inhibitory = 0i64;
            let mut tally = |j: usize| {
                if state.active[j] {
                    match state.types[j] {
                        NodeType::Excitatory => excitatory += 1,
                        NodeType::Inhibitory => inhibitory += 1,
                    }
                }
            };
            tally(idx);
            for j in graph.short_neighbor_indices(idx) {
                tally(j as usize);
            }
            for &j in graph.long_neighbor_indices(idx) {
                tally(j as usize);
            }
            match state.types[idx] {
                NodeType::Excitatory => excitatory - inhibitory >= k as i64,
                NodeType::Inhibitory => excitatory + inhibitory >= k as i64,
            }
        })
        .collect();
    let count = next.iter().filter(|&&b| b).count();
    ActivationState {
        active: next,
        types: state.types.clone(),
        t: state.t + 1,
        active_count: count,
    }
}

fn fingerprint(words: &[u64]) -> u128 {
    // two FNV-1a passes with distinct offsets; packed words are compared in
    // full on a match, so collisions only cost a comparison
    let mut h1: u64 = 0xcbf2_9ce4_8422_2325;
    let mut h2: u64 = 0x6c62_272e_07bb_0142;
    for &w in words {
        for b in w.to_le_bytes() {
            h1 = (h1 ^ b as u64).wrapping_mul(0x1000_0000_01b3);
            h2 = (h2 ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    ((h1 as u128) << 64) | h2 as u128
}

/// Iterate [`step`] until all-active, all-inactive, a state repeats, or the
/// budget runs out. Cycle detection keeps a sliding window of recent state
/// fingerprints with full-state confirmation on fingerprint match.
pub fn run(graph: &Graph, config: &ActivationConfig, seed: RngSeed) -> Result<RunOutcome> {
    let state = init_state(graph, config, seed)?;
    Ok(run_from(graph, state, config.k, config.max_steps))
}

/// [`run`] from an explicit initial state.
pub fn run_from(graph: &Graph, state: ActivationState, k: u32, max_steps: u64) -> RunOutcome {
    let mut state = state;
    let mut trajectory = vec![state.rho()];
    let mut window: VecDeque<(u128, Vec<u64>, u64)> = VecDeque::with_capacity(CYCLE_WINDOW);
    let mut steps = 0u64;
    loop {
        if state.active_count == state.len() {
            return RunOutcome {
                status: RunStatus::AllActive,
                steps_taken: steps,
                trajectory,
                cycle_length: None,
            };
        }
        if state.active_count == 0 {
            return RunOutcome {
                status: RunStatus::AllInactive,
                steps_taken: steps,
                trajectory,
                cycle_length: None,
            };
        }
        let packed = state.packed();
        let fp = fingerprint(&packed);
        if let Some(&(_, _, t_prev)) = window.iter().find(|(h, w, _)| *h == fp && *w == packed) {
            return RunOutcome {
                status: RunStatus::CycleDetected,
                steps_taken: steps,
                trajectory,
                cycle_length: Some(state.t - t_prev),
            };
        }
        if window.len() == CYCLE_WINDOW {
            window.pop_front();
        }
        window.push_back((fp, packed, state.t));

        if steps >= max_steps {
            return RunOutcome {
                status: RunStatus::BudgetExhausted,
                steps_taken: steps,
                trajectory,
                cycle_length: None,
            };
        }
        state = step(graph, &state, k);
        steps += 1;
        trajectory.push(state.rho());
    }
}

/// Binomial(n, p) draw: exact sampling up to [`BINOMIAL_EXACT_MAX`] trials,
/// normal approximation with continuity correction beyond.
pub fn sample_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if n <= BINOMIAL_EXACT_MAX {
        Binomial::new(n, p)
            .expect("validated parameters")
            .sample(rng)
    } else {
        let mean = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        let z: f64 = rand_distr::StandardNormal.sample(rng);
        let x = (mean + z * sd + 0.5).floor();
        x.clamp(0.0, n as f64) as u64
    }
}

/// One mean-field chain transition:
/// N²ρ' = Bin(N²ρ, f⁺(ρ)) + Bin(N²(1−ρ), f⁻(ρ)).
/// `rho` must be a multiple of 1/N².
pub fn mf_chain_step<R: Rng + ?Sized>(
    n: u32,
    rho: f64,
    model: &MeanFieldModel,
    rng: &mut R,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!(
            "rho must lie in [0,1] (got {rho})"
        )));
    }
    let n2 = n as u64 * n as u64;
    let scaled = rho * n2 as f64;
    let active = scaled.round();
    if (scaled - active).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "N² rho must be integral (got {scaled})"
        )));
    }
    let active = active as u64;
    let up = sample_binomial(active, f_plus(rho, model), rng);
    let down = sample_binomial(n2 - active, f_minus(rho, model), rng);
    Ok((up + down) as f64 / n2 as f64)
}

/// Iterate [`mf_chain_step`] from ρ₀ = round(N²·p)/N² until absorption at
/// 0 or 1 or until the budget runs out.
pub fn mf_chain_run(
    n: u32,
    config: &ActivationConfig,
    model: &MeanFieldModel,
    seed: RngSeed,
) -> Result<RunOutcome> {
    config.validate()?;
    if config.k != model.k() {
        return Err(Error::InvalidParameter(format!(
            "config threshold k={} does not match model k={}",
            config.k,
            model.k()
        )));
    }
    let n2 = n as u64 * n as u64;
    let mut rng = seed.rng();
    let mut rho = (config.p_init * n2 as f64).round() / n2 as f64;
    let mut trajectory = vec![rho];
    let mut steps = 0u64;
    loop {
        if rho == 0.0 {
            return Ok(RunOutcome {
                status: RunStatus::AllInactive,
                steps_taken: steps,
                trajectory,
                cycle_length: None,
            });
        }
        if rho == 1.0 {
            return Ok(RunOutcome {
                status: RunStatus::AllActive,
                steps_taken: steps,
                trajectory,
                cycle_length: None,
            });
        }
        if steps >= config.max_steps {
            return Ok(RunOutcome {
                status: RunStatus::BudgetExhausted,
                steps_taken: steps,
                trajectory,
                cycle_length: None,
            });
        }
        rho = mf_chain_step(n, rho, model, &mut rng)?;
        steps += 1;
        trajectory.push(rho);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::torus::TorusParams;

    fn params(n: u32, c: f64) -> TorusParams {
        TorusParams::new(n, c).unwrap()
    }

    fn all_e_state(active_idx: &[usize], nv: usize) -> ActivationState {
        let mut active = vec![false; nv];
        for &i in active_idx {
            active[i] = true;
        }
        ActivationState::from_parts(active, vec![NodeType::Excitatory; nv]).unwrap()
    }

    #[test]
    fn init_state_degenerate_probabilities() {
        let g = build_graph(&params(8, 0.0), RngSeed::new(0));
        let cfg = ActivationConfig::new(2, 0.0);
        let s = init_state(&g, &cfg, RngSeed::new(1)).unwrap();
        assert_eq!(s.active_count(), 0);
        let cfg = ActivationConfig::new(2, 1.0);
        let s = init_state(&g, &cfg, RngSeed::new(1)).unwrap();
        assert_eq!(s.active_count(), s.len());
        assert_eq!(s.rho(), 1.0);
    }

    #[test]
    fn init_state_density_concentrates() {
        let g = build_graph(&params(128, 0.0), RngSeed::new(0));
        let cfg = ActivationConfig::new(2, 0.3);
        let s = init_state(&g, &cfg, RngSeed::new(42)).unwrap();
        let sigma = (0.3f64 * 0.7).sqrt() / 128.0;
        assert!((s.rho() - 0.3).abs() < 4.0 * sigma, "rho={}", s.rho());
    }

    #[test]
    fn init_state_rejects_bad_config() {
        let g = build_graph(&params(8, 0.0), RngSeed::new(0));
        let cfg = ActivationConfig::new(2, 1.5);
        assert!(init_state(&g, &cfg, RngSeed::new(1)).is_err());
        let cfg = ActivationConfig::new(2, 0.5).with_max_steps(0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn k0_activates_everything_in_one_step() {
        let g = build_graph(&params(6, 1.0), RngSeed::new(3));
        let s = all_e_state(&[], g.num_vertices());
        let s1 = step(&g, &s, 0);
        assert_eq!(s1.active_count(), s1.len());
    }

    #[test]
    fn two_by_two_block_is_fixed_under_majority_rule() {
        // bare torus, all-E, k=3: each block vertex sees exactly 3 active in
        // its closed neighborhood, every outside vertex at most 2
        let g = build_graph(&params(4, 0.0), RngSeed::new(0));
        let block: Vec<usize> = [(0u32, 0u32), (1, 0), (0, 1), (1, 1)]
            .iter()
            .map(|&(x, y)| crate::torus::Vertex::new(x, y).index(4))
            .collect();
        let s0 = all_e_state(&block, 16);
        let mut s = s0.clone();
        for _ in 0..100 {
            s = step(&g, &s, 3);
            assert_eq!(s.active, s0.active);
        }
        let outcome = run_from(&g, s0, 3, 1000);
        assert_eq!(outcome.status, RunStatus::CycleDetected);
        assert_eq!(outcome.cycle_length, Some(1));
    }

    #[test]
    fn all_active_is_absorbing_for_small_k() {
        let g = build_graph(&params(5, 1.0), RngSeed::new(9));
        let s = all_e_state(&(0..25).collect::<Vec<_>>(), 25);
        for k in 0..=3 {
            let s1 = step(&g, &s, k);
            assert_eq!(s1.active_count(), 25, "k={k}");
        }
    }

    #[test]
    fn step_is_deterministic() {
        let g = build_graph(&params(8, 1.0), RngSeed::new(17));
        let cfg = ActivationConfig::new(2, 0.4);
        let s = init_state(&g, &cfg, RngSeed::new(5)).unwrap();
        assert_eq!(step(&g, &s, 2), step(&g, &s, 2));
    }

    #[test]
    fn all_e_step_is_monotone_in_the_state_order() {
        let g = build_graph(&params(6, 1.0), RngSeed::new(2));
        let nv = g.num_vertices();
        let mut rng = RngSeed::new(8).rng();
        for _ in 0..50 {
            let smaller: Vec<bool> = (0..nv).map(|_| rng.random::<f64>() < 0.3).collect();
            let larger: Vec<bool> = smaller
                .iter()
                .map(|&a| a || rng.random::<f64>() < 0.2)
                .collect();
            let k = rng.random_range(0..=5);
            let sa = ActivationState::from_parts(smaller, vec![NodeType::Excitatory; nv]).unwrap();
            let sb = ActivationState::from_parts(larger, vec![NodeType::Excitatory; nv]).unwrap();
            let na = step(&g, &sa, k);
            let nb = step(&g, &sb, k);
            for i in 0..nv {
                assert!(!na.active[i] || nb.active[i]);
            }
        }
    }

    #[test]
    fn k5_extinction_on_the_bare_torus() {
        // k ≥ 5 deactivates anything an inactive vertex can reach
        let g = build_graph(&params(8, 0.0), RngSeed::new(0));
        let cfg = ActivationConfig::new(5, 0.7).with_max_steps(100);
        for seed in 0..10 {
            let outcome = run(&g, &cfg, RngSeed::new(seed)).unwrap();
            assert_eq!(outcome.status, RunStatus::AllInactive);
            assert!(outcome.steps_taken <= 8, "took {}", outcome.steps_taken);
        }
    }

    #[test]
    fn k5_long_edges_can_sustain_activity_at_high_density() {
        // the k ≥ 5 extinction argument rests on closed neighborhoods of
        // exactly 5 vertices; long edges break it. At c=1 a dense initial
        // state can freeze into a self-sustaining set: every active vertex
        // keeps ≥ 5 active closed-neighbors, every inactive stays below 5.
        let g = build_graph(&params(8, 1.0), RngSeed::new(0x00AC_CE97 ^ 0x8a));
        let cfg = ActivationConfig::new(5, 0.7).with_max_steps(1000);
        let seed = RngSeed::with_stream(0x00AC_CE97 ^ 0x8b, 0);
        let out = run(&g, &cfg, seed).unwrap();
        assert_eq!(out.status, RunStatus::CycleDetected);
        assert_eq!(out.cycle_length, Some(1));
        // audit the frozen state against the rule, independent of step()
        let mut s = init_state(&g, &cfg, seed).unwrap();
        for _ in 0..out.steps_taken {
            s = step(&g, &s, 5);
        }
        assert!(s.active_count() > 0);
        for idx in 0..s.len() {
            let mut active_nb = usize::from(s.is_active(idx));
            for j in g.short_neighbor_indices(idx) {
                active_nb += usize::from(s.is_active(j as usize));
            }
            for &j in g.long_neighbor_indices(idx) {
                active_nb += usize::from(s.is_active(j as usize));
            }
            assert_eq!(s.is_active(idx), active_nb >= 5, "vertex {idx}");
        }
    }

    #[test]
    fn supercritical_k1_reaches_all_active() {
        let g = build_graph(&params(64, 1.0), RngSeed::new(31));
        let cfg = ActivationConfig::new(1, 0.2).with_max_steps(200);
        let mut wins = 0;
        for seed in 0..20 {
            let outcome = run(&g, &cfg, RngSeed::new(seed)).unwrap();
            if outcome.status == RunStatus::AllActive {
                wins += 1;
            }
        }
        assert!(wins >= 18, "only {wins}/20 reached all-active");
    }

    #[test]
    fn inhibitory_row_blinker_has_period_two() {
        // bare 4x4 torus; row y=1 inhibitory, two of its cells active. With
        // k=2 the two active cells trade places with the other two each step.
        let n = 4u32;
        let g = build_graph(&params(n, 0.0), RngSeed::new(0));
        let nv = 16;
        let mut types = vec![NodeType::Excitatory; nv];
        let mut active = vec![false; nv];
        for x in 0..4u32 {
            types[crate::torus::Vertex::new(x, 1).index(n)] = NodeType::Inhibitory;
        }
        for x in [0u32, 2] {
            active[crate::torus::Vertex::new(x, 1).index(n)] = true;
        }
        let s = ActivationState::from_parts(active, types).unwrap();
        let outcome = run_from(&g, s, 2, 100);
        assert_eq!(outcome.status, RunStatus::CycleDetected);
        assert_eq!(outcome.cycle_length, Some(2));
    }

    #[test]
    fn mf_chain_absorbing_endpoints() {
        let model = MeanFieldModel::poisson(2, 2.0).unwrap();
        let mut rng = RngSeed::new(1).rng();
        assert_eq!(mf_chain_step(10, 0.0, &model, &mut rng).unwrap(), 0.0);
        assert_eq!(mf_chain_step(10, 1.0, &model, &mut rng).unwrap(), 1.0);
        let model1 = MeanFieldModel::poisson(1, 2.0).unwrap();
        assert_eq!(mf_chain_step(10, 0.0, &model1, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn mf_chain_step_preserves_integrality() {
        let model = MeanFieldModel::poisson(2, 2.0).unwrap();
        let mut rng = RngSeed::new(2).rng();
        let n = 30u32;
        let n2 = (n * n) as f64;
        let mut rho = 270.0 / n2;
        for _ in 0..50 {
            rho = mf_chain_step(n, rho, &model, &mut rng).unwrap();
            let scaled = rho * n2;
            assert!((scaled - scaled.round()).abs() < 1e-9);
            assert!((0.0..=1.0).contains(&rho));
        }
        assert!(mf_chain_step(n, 0.33333, &model, &mut rng).is_err());
    }

    #[test]
    fn mf_chain_k0_absorbs_in_one_step() {
        let model = MeanFieldModel::poisson(0, 2.0).unwrap();
        let cfg = ActivationConfig::new(0, 0.01);
        let outcome = mf_chain_run(50, &cfg, &model, RngSeed::new(3)).unwrap();
        assert_eq!(outcome.status, RunStatus::AllActive);
        assert_eq!(outcome.steps_taken, 1);
    }

    #[test]
    fn mf_chain_rejects_mismatched_threshold() {
        let model = MeanFieldModel::poisson(2, 2.0).unwrap();
        let cfg = ActivationConfig::new(3, 0.1);
        assert!(mf_chain_run(50, &cfg, &model, RngSeed::new(3)).is_err());
    }

    #[test]
    fn normal_approximation_matches_exact_at_the_boundary() {
        // compare moments of the two samplers on either side of the switch
        let p = 0.37;
        let n_exact = BINOMIAL_EXACT_MAX;
        let n_approx = BINOMIAL_EXACT_MAX + 1;
        let mut rng = RngSeed::new(77).rng();
        let reps = 4000;
        let stats = |draws: Vec<f64>| {
            let m = draws.iter().sum::<f64>() / draws.len() as f64;
            let v = draws.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (draws.len() - 1) as f64;
            (m, v)
        };
        let exact: Vec<f64> = (0..reps)
            .map(|_| sample_binomial(n_exact, p, &mut rng) as f64)
            .collect();
        let approx: Vec<f64> = (0..reps)
            .map(|_| sample_binomial(n_approx, p, &mut rng) as f64)
            .collect();
        let (me, ve) = stats(exact);
        let (ma, va) = stats(approx);
        let mean = n_exact as f64 * p;
        let var = n_exact as f64 * p * (1.0 - p);
        let mean_se = (var / reps as f64).sqrt();
        assert!(
            (me - mean).abs() < 4.0 * mean_se,
            "exact mean {me} vs {mean}"
        );
        assert!(
            (ma - mean).abs() < 4.0 * mean_se + 1.0,
            "approx mean {ma} vs {mean}"
        );
        // variances within 10% of each other at this sample size
        assert!(
            (ve / va - 1.0).abs() < 0.1,
            "exact var {ve} vs approx var {va}"
        );
    }
}
