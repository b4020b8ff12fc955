//! Exhaustive configuration-space analysis on tiny grids.
//!
//! Everything here enumerates all q^{KL} configurations, so it is the
//! ground-truth oracle for the constructive and sampling layers:
//! communication energies by exact minimax search, the deep-well audit,
//! the Gibbs measure, the Metropolis transition matrix, its spectral gap,
//! and total-variation mixing times.
//!
//! Two loud caps keep this honest: landscape operations refuse above 2^20
//! states, dense matrix operations above 2^10. Inverse temperatures where
//! e^{-beta*Gamma} falls below 1e-12 are refused for spectral and mixing
//! work because the quantity of interest is then smaller than what double
//! precision resolves.

use crate::config::Configuration;
use crate::lattice::{Boundary, GridSpec};
use crate::{Error, Result};
use nalgebra::DMatrix;
use serde::Serialize;

/// Maximum number of states for landscape (minimax, Gibbs) operations.
pub const LANDSCAPE_CAP: u64 = 1 << 20;
/// Maximum number of states for dense matrix operations.
pub const MATRIX_CAP: u64 = 1 << 10;
/// Largest beta*Gamma for which e^{-beta*Gamma} stays above 1e-12.
pub const PRECISION_LIMIT: f64 = 27.631_021_115_928_547;

/// The full configuration space of one instance, states encoded as
/// mixed-radix integers: state = sum over vertices of (spin - 1) * q^index.
///
/// Energies are computed per state by a full edge scan at construction,
/// independently of the incremental delta bookkeeping in `config`, so the
/// two routes check each other.
pub struct LandscapeIndex {
    spec: GridSpec,
    pow: Vec<u64>,
    energies: Vec<i64>,
}

impl LandscapeIndex {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let n_vertices = spec.num_vertices();
        let states = (spec.q as u128).pow(n_vertices as u32);
        if states > LANDSCAPE_CAP as u128 {
            return Err(Error::CapExceeded { states, cap: LANDSCAPE_CAP });
        }
        let n = states as usize;
        let mut pow = Vec::with_capacity(n_vertices);
        let mut p = 1u64;
        for _ in 0..n_vertices {
            pow.push(p);
            p *= spec.q as u64;
        }
        let mut idx = LandscapeIndex { spec, pow, energies: Vec::new() };
        idx.energies = (0..n as u32).map(|s| idx.decode(s).energy()).collect();
        Ok(idx)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn num_states(&self) -> u32 {
        self.energies.len() as u32
    }

    pub fn energy(&self, state: u32) -> i64 {
        self.energies[state as usize]
    }

    pub fn check_state(&self, state: u32) -> Result<()> {
        if (state as usize) < self.energies.len() {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "state {state} out of range ({} states)",
                self.energies.len()
            )))
        }
    }

    pub fn encode(&self, cfg: &Configuration) -> Result<u32> {
        if cfg.spec() != self.spec {
            return Err(Error::Input("configuration built for a different grid".into()));
        }
        let mut state = 0u64;
        for (i, &s) in cfg.spins().iter().enumerate() {
            state += (s as u64 - 1) * self.pow[i];
        }
        Ok(state as u32)
    }

    pub fn decode(&self, state: u32) -> Configuration {
        let q = self.spec.q as u64;
        let spins: Vec<u8> = (0..self.spec.num_vertices())
            .map(|i| ((state as u64 / self.pow[i]) % q) as u8 + 1)
            .collect();
        Configuration::from_spins(self.spec, spins).expect("decoded digits are valid spins")
    }

    /// Stable states in color order 1..=q.
    pub fn stable_states(&self) -> Vec<u32> {
        (1..=self.spec.q)
            .map(|c| {
                let cfg = Configuration::stable(self.spec, c).expect("valid color");
                self.encode(&cfg).expect("own spec")
            })
            .collect()
    }

    fn digit(&self, state: u32, vertex: usize) -> u8 {
        ((state as u64 / self.pow[vertex]) % self.spec.q as u64) as u8
    }

    /// Visit every non-void single-spin neighbor of `state`.
    fn for_each_neighbor(&self, state: u32, mut f: impl FnMut(u32)) {
        let q = self.spec.q as u64;
        for vertex in 0..self.spec.num_vertices() {
            let d = self.digit(state, vertex) as u64;
            let base = state as u64 - d * self.pow[vertex];
            for nd in 0..q {
                if nd != d {
                    f((base + nd * self.pow[vertex]) as u32);
                }
            }
        }
    }

    /// Undirected move-graph edges, each pair once with the smaller state
    /// first (generated from the smaller digit at the differing vertex).
    fn undirected_edges(&self) -> Vec<(u32, u32)> {
        let n = self.num_states();
        let q = self.spec.q as u64;
        let mut edges =
            Vec::with_capacity(n as usize * self.spec.num_vertices() * (q as usize - 1) / 2);
        for state in 0..n {
            for vertex in 0..self.spec.num_vertices() {
                let d = self.digit(state, vertex) as u64;
                for nd in (d + 1)..q {
                    edges.push((state, (state as u64 + (nd - d) * self.pow[vertex]) as u32));
                }
            }
        }
        edges
    }

    /// Edges sorted by bottleneck weight max(H(a), H(b)); for any two
    /// distinct states the minimax path height equals the weight at which
    /// an ascending union-find sweep first connects them.
    fn sorted_edges(&self) -> Vec<(u32, u32)> {
        let mut edges = self.undirected_edges();
        edges.sort_unstable_by_key(|&(a, b)| {
            self.energies[a as usize].max(self.energies[b as usize])
        });
        edges
    }

    fn edge_weight(&self, e: (u32, u32)) -> i64 {
        self.energies[e.0 as usize].max(self.energies[e.1 as usize])
    }

    /// Minimax path height between two distinct states: the least possible
    /// value of the maximum energy along a single-spin-update path.
    pub fn communication_energy(&self, a: u32, b: u32) -> Result<i64> {
        self.check_state(a)?;
        self.check_state(b)?;
        if a == b {
            return Err(Error::Input("communication energy needs two distinct states".into()));
        }
        let mut dsu = Dsu::new(self.num_states() as usize);
        for e in self.sorted_edges() {
            dsu.union(e.0, e.1);
            if dsu.find(a) == dsu.find(b) {
                return Ok(self.edge_weight(e));
            }
        }
        Err(Error::Numerical("move graph is not connected".into()))
    }

    /// Minimax path height from `a` to the nearest state in `targets`.
    pub fn communication_energy_to_set(&self, a: u32, targets: &[u32]) -> Result<i64> {
        self.check_state(a)?;
        if targets.is_empty() {
            return Err(Error::Input("target set is empty".into()));
        }
        let mut in_set = vec![false; self.num_states() as usize];
        for &t in targets {
            self.check_state(t)?;
            in_set[t as usize] = true;
        }
        if in_set[a as usize] {
            return Err(Error::Input("start state lies inside the target set".into()));
        }
        let mut dsu = Dsu::new(self.num_states() as usize);
        let mut count: Vec<u32> = in_set.iter().map(|&b| b as u32).collect();
        for e in self.sorted_edges() {
            let (rx, ry) = (dsu.find(e.0), dsu.find(e.1));
            if rx == ry {
                continue;
            }
            let (root, absorbed) = dsu.union_roots(rx, ry);
            count[root as usize] += count[absorbed as usize];
            if count[dsu.find(a) as usize] > 0 {
                return Ok(self.edge_weight(e));
            }
        }
        Err(Error::Numerical("move graph is not connected".into()))
    }

    /// One ascending union-find sweep computing, together: the minimax
    /// value between every pair of stable states, and for every state the
    /// minimax value to the stable set (recorded the moment its component
    /// first absorbs a stable state).
    pub fn landscape_analysis(&self) -> LandscapeAnalysis {
        const NONE: u32 = u32::MAX;
        let n = self.num_states() as usize;
        let q = self.spec.q as usize;
        let stables = self.stable_states();
        let mut stable_rank = vec![usize::MAX; n];
        for (i, &s) in stables.iter().enumerate() {
            stable_rank[s as usize] = i;
        }

        let mut dsu = Dsu::new(n);
        // per-root bitmask of stable colors present in the component
        let mut mask: Vec<u32> = (0..n)
            .map(|s| if stable_rank[s] != usize::MAX { 1 << stable_rank[s] } else { 0 })
            .collect();
        // intrusive member lists for components not yet containing a stable
        let mut head: Vec<u32> = (0..n as u32)
            .map(|s| if stable_rank[s as usize] == usize::MAX { s } else { NONE })
            .collect();
        let mut tail = head.clone();
        let mut next = vec![NONE; n];

        let mut phi_to_set: Vec<i64> =
            (0..n).map(|s| if stable_rank[s] != usize::MAX { self.energies[s] } else { i64::MIN }).collect();
        let mut pair_phi = vec![vec![i64::MIN; q]; q];
        for (i, &s) in stables.iter().enumerate() {
            pair_phi[i][i] = self.energies[s as usize];
        }

        for e in self.sorted_edges() {
            let (rx, ry) = (dsu.find(e.0), dsu.find(e.1));
            if rx == ry {
                continue;
            }
            let w = self.edge_weight(e);
            let (mx, my) = (mask[rx as usize], mask[ry as usize]);
            if mx != 0 && my != 0 {
                for i in 0..q {
                    if mx & (1 << i) == 0 {
                        continue;
                    }
                    for j in 0..q {
                        if my & (1 << j) != 0 {
                            pair_phi[i][j] = w;
                            pair_phi[j][i] = w;
                        }
                    }
                }
            }
            // a stable-free component joining a stable one resolves all its members
            for (r_plain, m_other) in [(rx, my), (ry, mx)] {
                if mask[r_plain as usize] == 0 && m_other != 0 {
                    let mut s = head[r_plain as usize];
                    while s != NONE {
                        phi_to_set[s as usize] = w;
                        s = next[s as usize];
                    }
                    head[r_plain as usize] = NONE;
                    tail[r_plain as usize] = NONE;
                }
            }
            let (root, absorbed) = dsu.union_roots(rx, ry);
            mask[root as usize] = mx | my;
            if head[absorbed as usize] != NONE {
                if head[root as usize] == NONE {
                    head[root as usize] = head[absorbed as usize];
                    tail[root as usize] = tail[absorbed as usize];
                } else {
                    next[tail[root as usize] as usize] = head[absorbed as usize];
                    tail[root as usize] = tail[absorbed as usize];
                }
                head[absorbed as usize] = NONE;
                tail[absorbed as usize] = NONE;
            }
        }

        debug_assert!(phi_to_set.iter().all(|&v| v != i64::MIN), "move graph connected");
        let mut max_slack = i64::MIN;
        let mut argmax = Vec::new();
        for s in 0..n {
            if stable_rank[s] != usize::MAX {
                continue;
            }
            let slack = phi_to_set[s] - self.energies[s];
            if slack > max_slack {
                max_slack = slack;
                argmax.clear();
            }
            if slack == max_slack {
                argmax.push(s as u32);
            }
        }
        LandscapeAnalysis { stable_states: stables, pair_phi, phi_to_set, max_slack, argmax }
    }

    /// Deep-well audit: the worst slack Phi(sigma, S) - H(sigma) over
    /// non-stable states. The landscape has no deep wells when it stays
    /// strictly below Gamma.
    pub fn deep_well_audit(&self) -> DeepWellReport {
        let analysis = self.landscape_analysis();
        let gamma = self.spec.gamma();
        DeepWellReport {
            max_slack: analysis.max_slack,
            argmax: analysis.argmax.clone(),
            gamma: gamma.value,
            holds: analysis.max_slack < gamma.value,
        }
    }

    /// Gibbs distribution at inverse temperature beta, normalized after
    /// shifting energies by their minimum so no exponent is positive.
    pub fn gibbs(&self, beta: f64) -> Result<Vec<f64>> {
        check_beta(beta)?;
        let h_min = *self.energies.iter().min().expect("non-empty");
        let mut weights: Vec<f64> =
            self.energies.iter().map(|&h| (-beta * (h - h_min) as f64).exp()).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(weights)
    }

    fn check_matrix_cap(&self) -> Result<usize> {
        let n = self.num_states() as u64;
        if n > MATRIX_CAP {
            return Err(Error::CapExceeded { states: n as u128, cap: MATRIX_CAP });
        }
        Ok(n as usize)
    }

    fn check_precision(&self, beta: f64) -> Result<()> {
        let gamma = self.spec.gamma().value as f64;
        if beta * gamma > PRECISION_LIMIT {
            return Err(Error::PrecisionRefused { beta, scale: (-beta * gamma).exp() });
        }
        Ok(())
    }

    /// Metropolis transition matrix: a uniform draw of (vertex, spin) in
    /// 1/(q|V|), accepted with probability e^{-beta*[dH]^+}; the diagonal
    /// collects rejections and the |V| void proposals.
    pub fn transition_matrix(&self, beta: f64) -> Result<DMatrix<f64>> {
        check_beta(beta)?;
        let n = self.check_matrix_cap()?;
        let draw = 1.0 / (self.spec.q as f64 * self.spec.num_vertices() as f64);
        let mut p = DMatrix::zeros(n, n);
        for a in 0..n as u32 {
            let mut off = 0.0;
            self.for_each_neighbor(a, |b| {
                let dh = self.energies[b as usize] - self.energies[a as usize];
                let acc = draw * (-beta * dh.max(0) as f64).exp();
                p[(a as usize, b as usize)] = acc;
                off += acc;
            });
            p[(a as usize, a as usize)] = 1.0 - off;
        }
        Ok(p)
    }

    /// Spectral gap rho = 1 - lambda_2 of the Metropolis chain, computed on
    /// the reversible symmetrization: S_ab = (1/(q|V|)) e^{-beta|dH|/2} off
    /// the diagonal, which shares the spectrum of P and is symmetric by
    /// construction, so a symmetric eigensolver applies.
    pub fn spectral_gap(&self, beta: f64) -> Result<Spectrum> {
        check_beta(beta)?;
        let n = self.check_matrix_cap()?;
        self.check_precision(beta)?;
        let draw = 1.0 / (self.spec.q as f64 * self.spec.num_vertices() as f64);
        let mut s = DMatrix::zeros(n, n);
        for a in 0..n as u32 {
            let mut off = 0.0;
            self.for_each_neighbor(a, |b| {
                let dh = self.energies[b as usize] - self.energies[a as usize];
                off += draw * (-beta * dh.max(0) as f64).exp();
                if b > a {
                    let sym = draw * (-beta * dh.abs() as f64 / 2.0).exp();
                    s[(a as usize, b as usize)] = sym;
                    s[(b as usize, a as usize)] = sym;
                }
            });
            s[(a as usize, a as usize)] = 1.0 - off;
        }
        let eigen = nalgebra::SymmetricEigen::try_new(s, 1.0e-13, 100_000)
            .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
        let mut ev: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
        ev.sort_unstable_by(|x, y| y.partial_cmp(x).expect("real eigenvalues"));
        Ok(Spectrum { lambda1: ev[0], lambda2: ev[1], rho: 1.0 - ev[1] })
    }

    /// Smallest n >= 1 with max over start states of TV(P^n(x, .), mu) <=
    /// eps. Repeated squaring brackets n, then binary search pins it using
    /// products of the stored squares; the worst-case TV distance is
    /// non-increasing in n, which both stages rely on.
    pub fn mixing_time(&self, beta: f64, eps: f64) -> Result<MixingOutcome> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Input(format!("eps must lie in (0, 1), got {eps}")));
        }
        check_beta(beta)?;
        self.check_precision(beta)?;
        let n = self.check_matrix_cap()?;
        let p = self.transition_matrix(beta)?;
        let mu = self.gibbs(beta)?;
        let worst = |m: &DMatrix<f64>| -> f64 {
            (0..n)
                .map(|i| 0.5 * (0..n).map(|j| (m[(i, j)] - mu[j]).abs()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        if worst(&p) <= eps {
            return Ok(MixingOutcome { t_mix: 1, converged: true });
        }
        const STEP_CAP: u64 = 1 << 50;
        let mut squares = vec![p]; // squares[k] = P^(2^k)
        let mut steps = 1u64;
        loop {
            if steps >= STEP_CAP {
                return Ok(MixingOutcome { t_mix: steps, converged: false });
            }
            let last = squares.last().expect("non-empty");
            let doubled = last * last;
            steps *= 2;
            let done = worst(&doubled) <= eps;
            squares.push(doubled);
            if done {
                break;
            }
        }
        // d(steps) <= eps < d(steps/2): binary search the half-open bracket
        let power = |m: u64| -> DMatrix<f64> {
            let mut acc = DMatrix::identity(n, n);
            for (k, sq) in squares.iter().enumerate() {
                if m & (1 << k) != 0 {
                    acc *= sq;
                }
            }
            acc
        };
        let (mut lo, mut hi) = (steps / 2 + 1, steps);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if worst(&power(mid)) <= eps {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(MixingOutcome { t_mix: lo, converged: true })
    }

    /// Landscape report with the stable field names consumed downstream.
    pub fn report(&self, analysis: &LandscapeAnalysis) -> Report {
        let gamma = self.spec.gamma();
        let h_stable = -(self.spec.num_edges() as i64);
        let q = self.spec.q;
        let mut phi_stable_pairs = Vec::new();
        let mut pairs_match = true;
        for c in 0..q {
            for d in (c + 1)..q {
                let phi = analysis.pair_phi[c as usize][d as usize];
                let slack = phi - h_stable;
                pairs_match &= slack == gamma.value;
                phi_stable_pairs.push(PhiPairEntry { c: c + 1, d: d + 1, phi, slack });
            }
        }
        let wells_ok = analysis.max_slack < gamma.value;
        let argmax_total = analysis.argmax.len();
        let deep_well_argmax: Vec<String> = analysis
            .argmax
            .iter()
            .take(8)
            .map(|&s| self.decode(s).literal().trim_end().replace('\n', " / "))
            .collect();
        Report {
            instance: InstanceInfo {
                k: self.spec.k,
                l: self.spec.l,
                q: self.spec.q,
                boundary: self.spec.boundary,
                num_vertices: self.spec.num_vertices(),
                num_edges: self.spec.num_edges(),
                num_states: self.num_states() as u64,
            },
            gamma_formula: gamma,
            phi_stable_pairs,
            deep_well_max_slack: analysis.max_slack,
            deep_well_argmax,
            deep_well_argmax_count: argmax_total,
            hypothesis_holds: pairs_match && wells_ok,
            spectral: Vec::new(),
            mixing: Vec::new(),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("beta must be a finite nonnegative number, got {beta}")))
    }
}

/// Total variation distance, one half of the L1 distance.
pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Output of the single-sweep landscape analysis.
pub struct LandscapeAnalysis {
    /// Stable states in color order 1..=q.
    pub stable_states: Vec<u32>,
    /// Minimax value between stable pairs, indexed by color - 1; the
    /// diagonal holds the stable energy itself.
    pub pair_phi: Vec<Vec<i64>>,
    /// Minimax value from each state to the stable set; for a stable state
    /// this is its own energy.
    pub phi_to_set: Vec<i64>,
    /// Worst slack phi_to_set - H over non-stable states.
    pub max_slack: i64,
    /// All non-stable states attaining the worst slack.
    pub argmax: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct DeepWellReport {
    pub max_slack: i64,
    pub argmax: Vec<u32>,
    pub gamma: i64,
    pub holds: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct Spectrum {
    pub lambda1: f64,
    pub lambda2: f64,
    pub rho: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MixingOutcome {
    /// Mixing time when converged; otherwise a lower bound at the step cap.
    pub t_mix: u64,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct InstanceInfo {
    pub k: usize,
    pub l: usize,
    pub q: u8,
    pub boundary: Boundary,
    pub num_vertices: usize,
    pub num_edges: usize,
    pub num_states: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiPairEntry {
    pub c: u8,
    pub d: u8,
    pub phi: i64,
    pub slack: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralPoint {
    pub beta: f64,
    pub rho: f64,
    /// rho * e^{beta*Gamma}; recorded, no bound asserted.
    pub prefactor: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingPoint {
    pub beta: f64,
    pub eps: f64,
    pub t_mix: u64,
    pub converged: bool,
}

/// JSON report; field names are stable for downstream golden tests.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub instance: InstanceInfo,
    pub gamma_formula: crate::lattice::Gamma,
    pub phi_stable_pairs: Vec<PhiPairEntry>,
    pub deep_well_max_slack: i64,
    pub deep_well_argmax: Vec<String>,
    pub deep_well_argmax_count: usize,
    /// Stable-pair slacks all equal the formula and no deep well reaches it.
    pub hypothesis_holds: bool,
    pub spectral: Vec<SpectralPoint>,
    pub mixing: Vec<MixingPoint>,
}

/// Union-find with path halving and union by rank.
struct Dsu {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n as u32).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Union by value; a no-op returning (root, root) when already joined.
    fn union(&mut self, a: u32, b: u32) -> (u32, u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            (ra, ra)
        } else {
            self.union_roots(ra, rb)
        }
    }

    /// Union two distinct roots; returns (surviving root, absorbed root).
    fn union_roots(&mut self, ra: u32, rb: u32) -> (u32, u32) {
        debug_assert_ne!(ra, rb);
        let (root, absorbed) = if self.rank[ra as usize] >= self.rank[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[absorbed as usize] = root;
        if self.rank[ra as usize] == self.rank[rb as usize] {
            self.rank[root as usize] += 1;
        }
        (root, absorbed)
    }
}
