//! Metropolis dynamics: single attempted updates, first hitting times, and
//! a rejection-free accelerator with the identical law.
//!
//! One unit of time is one attempted update: a uniform draw of (vertex,
//! spin) from the q|V| candidates, accepted with probability e^{-beta
//! [dH]^+}. Rejected and void draws advance the clock without changing the
//! state, so hitting times from both simulation methods are directly
//! comparable and match the discrete-time chain the exact module
//! diagonalizes.
//!
//! Randomness comes from a counter-based generator: sample i of a batch
//! uses the stream derived from (seed, i), so batches are reproducible and
//! independent of worker count.

use crate::config::Configuration;
use crate::lattice::{GridSpec, NeighborTable};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Default safety cap on attempted steps per sample.
pub const DEFAULT_MAX_STEPS: u64 = 10_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    RejectionFree,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::RejectionFree => "rejection_free",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Method::Direct),
            "rejection_free" | "rejection-free" | "rf" => Ok(Method::RejectionFree),
            other => Err(Error::Parse(format!("unknown method '{other}'"))),
        }
    }
}

/// Everything a trajectory needs besides its start configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub spec: GridSpec,
    pub beta: f64,
    pub seed: u64,
    /// Trajectories longer than this are cut and flagged, never dropped.
    pub max_steps: u64,
}

impl ChainParams {
    pub fn new(spec: GridSpec, beta: f64, seed: u64) -> Result<Self> {
        let p = ChainParams { spec, beta, seed, max_steps: DEFAULT_MAX_STEPS };
        p.validate()?;
        Ok(p)
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Result<Self> {
        self.max_steps = max_steps;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::Input(format!(
                "beta must be a finite nonnegative number, got {}",
                self.beta
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Input("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// The RNG for sample `stream` of a batch seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Hitting targets. `contains` decides membership; enumerable variants also
/// validate against the grid.
#[derive(Clone, Debug)]
pub enum Target {
    /// Any stable configuration.
    Stables,
    /// Any stable configuration except the given color.
    StablesExcept(u8),
    /// An explicit list.
    Explicit(Vec<Configuration>),
    /// Everything except the given configuration.
    NotEqual(Configuration),
}

impl Target {
    pub fn contains(&self, cfg: &Configuration) -> bool {
        match self {
            Target::Stables => cfg.is_stable(),
            Target::StablesExcept(c) => cfg.stable_color().is_some_and(|k| k != *c),
            Target::Explicit(list) => list.iter().any(|t| t == cfg),
            Target::NotEqual(x) => cfg != x,
        }
    }

    pub fn validate(&self, spec: GridSpec) -> Result<()> {
        match self {
            Target::Stables => Ok(()),
            Target::StablesExcept(c) => {
                spec.check_spin(*c)?;
                if spec.q < 2 {
                    return Err(Error::Input("no other stable state exists".into()));
                }
                Ok(())
            }
            Target::Explicit(list) => {
                if list.is_empty() {
                    return Err(Error::Input("explicit target set is empty".into()));
                }
                for t in list {
                    if t.spec() != spec {
                        return Err(Error::Input(
                            "target configuration built for a different grid".into(),
                        ));
                    }
                }
                Ok(())
            }
            Target::NotEqual(x) => {
                if x.spec() != spec {
                    return Err(Error::Input(
                        "target configuration built for a different grid".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// One first-hitting observation.
#[derive(Clone, Debug, PartialEq)]
pub struct HittingSample {
    /// Attempted steps until the first visit to the target (t > 0), or
    /// max_steps when censored.
    pub steps: u64,
    /// The configuration that ended the run: a target member, or the
    /// current state at truncation when censored.
    pub exit: Configuration,
    pub method: Method,
    pub seed: u64,
    pub stream: u64,
    pub censored: bool,
}

impl HittingSample {
    /// Stable color of the exit configuration, when it is stable.
    pub fn exit_spin(&self) -> Option<u8> {
        self.exit.stable_color()
    }

    pub fn record(&self) -> SampleRecord {
        SampleRecord {
            steps: self.steps,
            exit_spin: self.exit_spin(),
            method: self.method,
            seed: self.seed,
            stream: self.stream,
            censored: self.censored,
        }
    }
}

/// Flat export row; field order is the documented order for JSONL and CSV.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub steps: u64,
    pub exit_spin: Option<u8>,
    pub method: Method,
    pub seed: u64,
    pub stream: u64,
    pub censored: bool,
}

/// One tunneling observation between stable configurations, with the count
/// of renewal legs: a leg ends whenever the trajectory reaches a stable
/// configuration of a new color.
#[derive(Clone, Debug, PartialEq)]
pub struct TunnelSample {
    pub steps: u64,
    /// Number of stable configurations visited with a color differing from
    /// the one before; 1 means the first stable state reached was the goal.
    pub legs: u32,
    pub method: Method,
    pub seed: u64,
    pub stream: u64,
    pub censored: bool,
}

/// One attempted Metropolis update in place: draw (vertex, spin) uniformly,
/// accept downhill and level moves always, uphill moves with probability
/// e^{-beta dH}. The uniform acceptance variate is drawn only for uphill
/// proposals. Standalone counterpart of the loop inside `hit`.
pub fn metropolis_step(cfg: &mut Configuration, beta: f64, rng: &mut impl Rng) {
    let spec = cfg.spec();
    let index = rng.gen_range(0..spec.num_vertices());
    let k = rng.gen_range(1..=spec.q);
    step_at(cfg, beta, rng, index, k);
}

fn step_at(cfg: &mut Configuration, beta: f64, rng: &mut impl Rng, index: usize, k: u8) {
    if cfg.spin_at(index) == k {
        return;
    }
    let dh = cfg.delta_by_index(index, k);
    if dh <= 0 || rng.gen::<f64>() < (-beta * dh as f64).exp() {
        cfg.apply_by_index(index, k);
    }
}

/// Acceptance weights e^{-beta [dH]^+} of all q|V| proposals in draw order
/// (vertex-major, then spin 1..=q; void proposals weigh 0), and their sum.
/// Dividing by q|V| gives exactly the off-diagonal kernel row.
fn move_weights(
    cfg: &Configuration,
    beta: f64,
    table: &NeighborTable,
    weights: &mut Vec<f64>,
) -> f64 {
    let spec = cfg.spec();
    weights.clear();
    let mut total = 0.0;
    for index in 0..spec.num_vertices() {
        let current = cfg.spin_at(index);
        for k in 1..=spec.q {
            let w = if k == current {
                0.0
            } else {
                let dh = cfg.delta_by_table(index, k, table);
                (-beta * dh.max(0) as f64).exp()
            };
            weights.push(w);
            total += w;
        }
    }
    total
}

/// Geometric holding time on {1, 2, ...} with success probability p,
/// inverted from one uniform variate; saturates instead of overflowing.
fn geometric(p: f64, u: f64) -> u64 {
    debug_assert!((0.0..1.0).contains(&u));
    if p >= 1.0 {
        return 1;
    }
    let t = 1.0 + ((1.0 - u).ln() / (-p).ln_1p()).floor();
    if t >= u64::MAX as f64 {
        u64::MAX
    } else {
        t as u64
    }
}

fn check_run_inputs(start: &Configuration, target: &Target, params: &ChainParams) -> Result<()> {
    params.validate()?;
    if start.spec() != params.spec {
        return Err(Error::Input("start configuration built for a different grid".into()));
    }
    target.validate(params.spec)
}

/// First hitting time by direct simulation: attempted steps are counted one
/// by one and the state is tested after each, so a run that starts inside
/// the target still needs its first step (which may hold) to register a
/// hit at t = 1.
pub fn hit(
    start: &Configuration,
    target: &Target,
    params: &ChainParams,
    stream: u64,
) -> Result<HittingSample> {
    check_run_inputs(start, target, params)?;
    let table = params.spec.neighbor_table();
    let mut rng = stream_rng(params.seed, stream);
    let mut cfg = start.clone();
    let mut steps = 0u64;
    loop {
        steps += 1;
        let index = rng.gen_range(0..params.spec.num_vertices());
        let k = rng.gen_range(1..=params.spec.q);
        if cfg.spin_at(index) != k {
            let dh = cfg.delta_by_table(index, k, &table);
            if dh <= 0 || rng.gen::<f64>() < (-params.beta * dh as f64).exp() {
                cfg.apply_by_index(index, k);
            }
        }
        if target.contains(&cfg) {
            return Ok(sample(steps, cfg, Method::Direct, params, stream, false));
        }
        if steps >= params.max_steps {
            return Ok(sample(steps, cfg, Method::Direct, params, stream, true));
        }
    }
}

/// First hitting time by the rejection-free method: at each visited state
/// the total escape probability p over all q|V| proposals is computed, the
/// holding time is drawn geometrically with success p, and the jump picks a
/// move proportionally to its acceptance weight. The law of (steps, exit)
/// is identical to `hit`; each jump consumes exactly two uniforms.
pub fn hit_rejection_free(
    start: &Configuration,
    target: &Target,
    params: &ChainParams,
    stream: u64,
) -> Result<HittingSample> {
    check_run_inputs(start, target, params)?;
    let table = params.spec.neighbor_table();
    let q_v = (params.spec.q as usize * params.spec.num_vertices()) as f64;
    let mut rng = stream_rng(params.seed, stream);
    let mut cfg = start.clone();
    let mut steps = 0u64;
    let mut weights = Vec::new();
    let inside_from_start = target.contains(&cfg);
    loop {
        let total = move_weights(&cfg, params.beta, &table, &mut weights);
        let p = total / q_v;
        if !(p > 0.0) {
            return Err(Error::Stuck);
        }
        let hold = geometric(p, rng.gen::<f64>());
        // while holding, the state is revisited; if it is a target member
        // (possible only for the start state) the first step already hits
        if hold > 1 && steps == 0 && inside_from_start {
            return Ok(sample(1, cfg, Method::RejectionFree, params, stream, false));
        }
        if hold > params.max_steps - steps {
            return Ok(sample(
                params.max_steps,
                cfg,
                Method::RejectionFree,
                params,
                stream,
                true,
            ));
        }
        steps += hold;
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = weights.len() - 1;
        for (i, &w) in weights.iter().enumerate() {
            pick -= w;
            if pick < 0.0 {
                chosen = i;
                break;
            }
        }
        let index = chosen / params.spec.q as usize;
        let k = (chosen % params.spec.q as usize) as u8 + 1;
        debug_assert_ne!(cfg.spin_at(index), k, "void proposals carry zero weight");
        cfg.apply_by_index(index, k);
        if target.contains(&cfg) {
            return Ok(sample(steps, cfg, Method::RejectionFree, params, stream, false));
        }
        if steps >= params.max_steps {
            return Ok(sample(steps, cfg, Method::RejectionFree, params, stream, true));
        }
    }
}

fn sample(
    steps: u64,
    exit: Configuration,
    method: Method,
    params: &ChainParams,
    stream: u64,
    censored: bool,
) -> HittingSample {
    HittingSample { steps, exit, method, seed: params.seed, stream, censored }
}

/// Dispatch on method.
pub fn hit_with(
    method: Method,
    start: &Configuration,
    target: &Target,
    params: &ChainParams,
    stream: u64,
) -> Result<HittingSample> {
    match method {
        Method::Direct => hit(start, target, params, stream),
        Method::RejectionFree => hit_rejection_free(start, target, params, stream),
    }
}

/// `n` independent samples on streams 0..n, computed on a pool of `workers`
/// threads. Stream indices, not scheduling, determine the randomness, so
/// the result is identical for every worker count.
pub fn batch_hits(
    start: &Configuration,
    target: &Target,
    params: &ChainParams,
    n: usize,
    workers: usize,
    method: Method,
) -> Result<Vec<HittingSample>> {
    if n == 0 {
        return Err(Error::Input("sample count must be at least 1".into()));
    }
    check_run_inputs(start, target, params)?;
    run_pool(workers, n, |stream| hit_with(method, start, target, params, stream as u64))
}

/// Tunneling run between stable colors: from the stable configuration of
/// `c` until the first visit to the stable configuration of `d`, counting
/// renewal legs (arrivals at a stable configuration of a new color).
pub fn tunnel(
    c: u8,
    d: u8,
    params: &ChainParams,
    stream: u64,
    method: Method,
) -> Result<TunnelSample> {
    params.spec.check_spin(c)?;
    params.spec.check_spin(d)?;
    if c == d {
        return Err(Error::EqualColors);
    }
    let start = Configuration::stable(params.spec, c)?;
    let goal = Configuration::stable(params.spec, d)?;
    let target = Target::Explicit(vec![goal]);
    let mut legs = 0u32;
    let mut base = c;
    let mut total_steps = 0u64;
    let mut from = start;
    // run leg by leg: each inner hit targets every stable state of a color
    // other than the current base, continuing the clock across legs
    let mut leg_stream_params = *params;
    loop {
        let leg_target = Target::StablesExcept(base);
        let remaining = params.max_steps - total_steps;
        if remaining == 0 {
            return Ok(TunnelSample {
                steps: total_steps,
                legs,
                method,
                seed: params.seed,
                stream,
                censored: true,
            });
        }
        leg_stream_params.max_steps = remaining;
        // derive a fresh substream per leg so the trajectory continues with
        // independent randomness while staying reproducible
        let leg_rng_stream = stream
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(legs as u64);
        let s = hit_with(method, &from, &leg_target, &leg_stream_params, leg_rng_stream)?;
        total_steps += s.steps;
        if s.censored {
            return Ok(TunnelSample {
                steps: total_steps,
                legs,
                method,
                seed: params.seed,
                stream,
                censored: true,
            });
        }
        legs += 1;
        let color = s.exit.stable_color().expect("leg targets are stable");
        if target.contains(&s.exit) {
            return Ok(TunnelSample {
                steps: total_steps,
                legs,
                method,
                seed: params.seed,
                stream,
                censored: false,
            });
        }
        base = color;
        from = s.exit;
    }
}

/// `n` tunneling runs on streams 0..n; deterministic like `batch_hits`.
pub fn batch_tunnels(
    c: u8,
    d: u8,
    params: &ChainParams,
    n: usize,
    workers: usize,
    method: Method,
) -> Result<Vec<TunnelSample>> {
    if n == 0 {
        return Err(Error::Input("sample count must be at least 1".into()));
    }
    params.validate()?;
    run_pool(workers, n, |stream| tunnel(c, d, params, stream as u64, method))
}

fn run_pool<T: Send>(
    workers: usize,
    n: usize,
    job: impl Fn(usize) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    if workers == 0 {
        return Err(Error::Input("worker count must be at least 1".into()));
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(|i| job(i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::LandscapeIndex;
    use crate::lattice::Boundary;

    fn spec_open_2x3(q: u8) -> GridSpec {
        GridSpec::new(2, 3, q, Boundary::Open).unwrap()
    }

    #[test]
    fn single_step_matches_table_driven_step() {
        // two code paths (plain neighbor scan vs table) must produce
        // identical trajectories from identical randomness
        let spec = GridSpec::new(3, 3, 3, Boundary::Periodic).unwrap();
        let table = spec.neighbor_table();
        let mut a = Configuration::stable(spec, 1).unwrap();
        let mut b = a.clone();
        let mut rng_a = stream_rng(5, 0);
        let mut rng_b = stream_rng(5, 0);
        for _ in 0..20_000 {
            metropolis_step(&mut a, 0.8, &mut rng_a);
            let index = rng_b.gen_range(0..spec.num_vertices());
            let k = rng_b.gen_range(1..=spec.q);
            if b.spin_at(index) != k {
                let dh = b.delta_by_table(index, k, &table);
                if dh <= 0 || rng_b.gen::<f64>() < (-0.8 * dh as f64).exp() {
                    b.apply_by_index(index, k);
                }
            }
        }
        assert_eq!(a, b);
    }

    #[test]
    fn empirical_one_step_distribution_matches_kernel_row() {
        // 2e5 draws from a fixed non-stable state vs the exact row, each
        // reached state within 3 sigma of its multinomial expectation
        let spec = spec_open_2x3(2);
        let ix = LandscapeIndex::new(spec).unwrap();
        let beta = 1.0;
        let p = ix.transition_matrix(beta).unwrap();
        let from = Configuration::parse(spec, "1 2 1\n1 1 2\n").unwrap();
        let row = ix.encode(&from).unwrap() as usize;
        let n = 200_000usize;
        let mut counts = vec![0u32; ix.num_states() as usize];
        let mut rng = stream_rng(42, 0);
        for _ in 0..n {
            let mut cfg = from.clone();
            metropolis_step(&mut cfg, beta, &mut rng);
            counts[ix.encode(&cfg).unwrap() as usize] += 1;
        }
        for s in 0..ix.num_states() as usize {
            let expect = p[(row, s)] * n as f64;
            let sigma = (n as f64 * p[(row, s)] * (1.0 - p[(row, s)])).sqrt();
            let diff = (counts[s] as f64 - expect).abs();
            assert!(
                diff <= 3.0 * sigma.max(1e-9) || (p[(row, s)] == 0.0 && counts[s] == 0),
                "state {s}: count {} expect {expect:.1} sigma {sigma:.1}",
                counts[s]
            );
        }
    }

    #[test]
    fn stable_escape_weights_match_kernel_row() {
        let spec = spec_open_2x3(2);
        let ix = LandscapeIndex::new(spec).unwrap();
        let beta = 1.5;
        let p = ix.transition_matrix(beta).unwrap();
        let stable = Configuration::stable(spec, 1).unwrap();
        let row = ix.encode(&stable).unwrap() as usize;
        let table = spec.neighbor_table();
        let mut weights = Vec::new();
        let total = move_weights(&stable, beta, &table, &mut weights);
        let q_v = (spec.q as usize * spec.num_vertices()) as f64;
        // every proposal's weight over q|V| equals the kernel entry
        for (i, &w) in weights.iter().enumerate() {
            let index = i / spec.q as usize;
            let k = (i % spec.q as usize) as u8 + 1;
            if k == stable.spin_at(index) {
                assert_eq!(w, 0.0);
                continue;
            }
            let mut to = stable.clone();
            to.apply_by_index(index, k);
            let kernel = p[(row, ix.encode(&to).unwrap() as usize)];
            assert!((w / q_v - kernel).abs() <= 1e-15 * kernel.abs().max(1.0));
        }
        // dH from a stable state is the vertex degree; escape probability
        // for the 2x3 open grid at this beta is analytic
        let analytic: f64 = (0..spec.num_vertices())
            .map(|i| (-beta * table.degree(i) as f64).exp())
            .sum();
        assert!((total - analytic).abs() < 1e-12);
    }

    #[test]
    fn leave_probability_from_stable_matches_kernel() {
        // at beta = 0 every non-void proposal is accepted, so the one-step
        // leave probability from any state is (q-1)/q = 1/2
        let spec = spec_open_2x3(2);
        let stable = Configuration::stable(spec, 1).unwrap();
        let params = ChainParams::new(spec, 0.0, 900).unwrap();
        let target = Target::NotEqual(stable.clone());
        let n = 4000;
        let samples = batch_hits(&stable, &target, &params, n, 1, Method::Direct).unwrap();
        let leave_now = samples.iter().filter(|s| s.steps == 1).count() as f64 / n as f64;
        let sigma = (0.5 * 0.5 / n as f64).sqrt();
        assert!((leave_now - 0.5).abs() <= 3.0 * sigma, "leave fraction {leave_now}");
        // rejection-free holding times share the same geometric law
        let rf = batch_hits(&stable, &target, &params, n, 1, Method::RejectionFree).unwrap();
        let mean = rf.iter().map(|s| s.steps as f64).sum::<f64>() / n as f64;
        let sd_mean = (0.5f64 / 0.25 / n as f64).sqrt();
        assert!((mean - 2.0).abs() <= 3.0 * sd_mean, "rf mean holding {mean}");
    }

    #[test]
    fn start_inside_target_hits_at_step_one_when_holding() {
        let spec = spec_open_2x3(2);
        let stable = Configuration::stable(spec, 1).unwrap();
        let params = ChainParams::new(spec, 0.0, 31).unwrap();
        let target = Target::Explicit(vec![stable.clone()]);
        for method in [Method::Direct, Method::RejectionFree] {
            let n = 3000;
            let ones = (0..n)
                .map(|i| hit_with(method, &stable, &target, &params, i).unwrap())
                .filter(|s| s.steps == 1)
                .count() as f64
                / n as f64;
            // P(hold at step 1) = 1/2 at beta = 0
            let sigma = (0.25f64 / n as f64).sqrt();
            assert!((ones - 0.5).abs() <= 3.0 * sigma, "{method}: P(steps=1) = {ones}");
        }
    }

    #[test]
    fn censoring_flags_and_caps() {
        let spec = spec_open_2x3(2);
        let start = Configuration::stable(spec, 1).unwrap();
        let goal = Configuration::stable(spec, 2).unwrap();
        let params =
            ChainParams::new(spec, 6.0, 7).unwrap().with_max_steps(50).unwrap();
        let target = Target::Explicit(vec![goal]);
        for method in [Method::Direct, Method::RejectionFree] {
            let s = hit_with(method, &start, &target, &params, 0).unwrap();
            assert!(s.censored, "{method} sample not censored");
            assert_eq!(s.steps, 50);
            assert_ne!(s.exit.stable_color(), Some(2));
        }
    }

    #[test]
    fn batch_is_deterministic_across_worker_counts() {
        let spec = spec_open_2x3(3);
        let start = Configuration::stable(spec, 1).unwrap();
        let params = ChainParams::new(spec, 1.2, 77).unwrap();
        let target = Target::StablesExcept(1);
        let one = batch_hits(&start, &target, &params, 60, 1, Method::RejectionFree).unwrap();
        let four = batch_hits(&start, &target, &params, 60, 4, Method::RejectionFree).unwrap();
        let eight = batch_hits(&start, &target, &params, 60, 8, Method::RejectionFree).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, eight);
        // n = 1 reduces to a single hit on stream 0
        let single = batch_hits(&start, &target, &params, 1, 4, Method::Direct).unwrap();
        assert_eq!(single[0], hit(&start, &target, &params, 0).unwrap());
    }

    #[test]
    fn direct_and_rejection_free_share_the_hitting_law() {
        // two-sample KS on tunneling times at several temperatures
        let spec = spec_open_2x3(2);
        let start = Configuration::stable(spec, 1).unwrap();
        let goal = Configuration::stable(spec, 2).unwrap();
        for (beta, n, seed) in [(0.5, 1500, 1u64), (1.0, 1500, 2), (2.0, 1200, 3)] {
            let params = ChainParams::new(spec, beta, seed).unwrap();
            let target = Target::Explicit(vec![goal.clone()]);
            let a = batch_hits(&start, &target, &params, n, 4, Method::Direct).unwrap();
            let b = batch_hits(&start, &target, &params, n, 4, Method::RejectionFree).unwrap();
            let xs: Vec<f64> = a.iter().map(|s| s.steps as f64).collect();
            let ys: Vec<f64> = b.iter().map(|s| s.steps as f64).collect();
            let p = crate::stats::ks_two_sample_p(&xs, &ys);
            assert!(p > 0.01, "beta {beta}: KS p = {p}");
        }
    }

    #[test]
    fn rejection_free_is_much_faster_at_low_temperature() {
        let spec = spec_open_2x3(2);
        let start = Configuration::stable(spec, 1).unwrap();
        let goal = Configuration::stable(spec, 2).unwrap();
        let params = ChainParams::new(spec, 3.5, 11).unwrap();
        let target = Target::Explicit(vec![goal]);
        let t0 = std::time::Instant::now();
        let direct = batch_hits(&start, &target, &params, 12, 1, Method::Direct).unwrap();
        let direct_time = t0.elapsed();
        let t1 = std::time::Instant::now();
        let rf = batch_hits(&start, &target, &params, 12, 1, Method::RejectionFree).unwrap();
        let rf_time = t1.elapsed();
        // same clock, so mean steps agree in order of magnitude
        let mean_d: f64 = direct.iter().map(|s| s.steps as f64).sum::<f64>() / 12.0;
        let mean_r: f64 = rf.iter().map(|s| s.steps as f64).sum::<f64>() / 12.0;
        assert!(mean_d > 1000.0 && mean_r > 1000.0);
        assert!(
            rf_time.as_secs_f64() * 10.0 < direct_time.as_secs_f64(),
            "rf {rf_time:?} vs direct {direct_time:?}"
        );
    }

    #[test]
    fn tunnel_counts_renewal_legs_geometrically() {
        // the first stable state reached from c is uniform over the other
        // q-1 colors, so P(legs = 1) = 1/(q-1); q = 3 gives 1/2
        let spec = spec_open_2x3(3);
        let params = ChainParams::new(spec, 1.0, 99).unwrap();
        let n = 1500;
        let samples = batch_tunnels(1, 3, &params, n, 4, Method::RejectionFree).unwrap();
        assert!(samples.iter().all(|s| !s.censored && s.legs >= 1));
        let one_leg = samples.iter().filter(|s| s.legs == 1).count() as f64 / n as f64;
        let sigma = (0.25f64 / n as f64).sqrt();
        assert!((one_leg - 0.5).abs() <= 3.0 * sigma, "P(legs=1) = {one_leg}");
        // every run ends at the goal within the budget at this temperature
        let direct = tunnel(1, 3, &params, 0, Method::Direct).unwrap();
        assert!(direct.steps >= 1 && direct.legs >= 1);
    }

    #[test]
    fn input_validation() {
        let spec = spec_open_2x3(2);
        let other = GridSpec::new(3, 3, 2, Boundary::Periodic).unwrap();
        let start = Configuration::stable(other, 1).unwrap();
        let params = ChainParams::new(spec, 1.0, 0).unwrap();
        assert!(hit(&start, &Target::Stables, &params, 0).is_err());
        let good = Configuration::stable(spec, 1).unwrap();
        assert!(batch_hits(&good, &Target::Stables, &params, 0, 1, Method::Direct).is_err());
        assert!(batch_hits(&good, &Target::Stables, &params, 5, 0, Method::Direct).is_err());
        assert!(Target::Explicit(vec![]).validate(spec).is_err());
        assert!(ChainParams::new(spec, -1.0, 0).is_err());
        assert!(ChainParams::new(spec, 1.0, 0).unwrap().with_max_steps(0).is_err());
        assert!(tunnel(1, 1, &params, 0, Method::Direct).is_err());
        assert!("nope".parse::<Method>().is_err());
        assert_eq!("rf".parse::<Method>().unwrap(), Method::RejectionFree);
    }
}
