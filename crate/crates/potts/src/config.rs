//! Spin configurations with exact integer energies.
//!
//! The Hamiltonian is H(sigma) = -(number of agreeing edges), i.e. ferro-
//! magnetic coupling 1 and no external field. We track the energy gap
//! DH(sigma) = H(sigma) + |E| = number of disagreeing edges as a cached
//! integer, updated incrementally on every single-spin flip; `energy()` is
//! gap - |E|. Stable configurations are exactly the q constant ones, the
//! states of gap 0.
//!
//! Spins are 1-based (values 1..=q) everywhere, including the textual
//! literal.

use serde::{Deserialize, Serialize};

use crate::lattice::{GridSpec, NeighborTable, Vertex};
use crate::{Error, Result};

/// A spin assignment on a grid, with its energy gap cached.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    spec: GridSpec,
    spins: Vec<u8>,
    gap: u32,
}

impl Configuration {
    /// The constant configuration s_color.
    pub fn stable(spec: GridSpec, color: u8) -> Result<Self> {
        spec.check_spin(color)?;
        Ok(Configuration {
            spec,
            spins: vec![color; spec.num_vertices()],
            gap: 0,
        })
    }

    /// All q stable configurations, in color order.
    pub fn stable_set(spec: GridSpec) -> Vec<Self> {
        (1..=spec.q)
            .map(|k| Configuration::stable(spec, k).expect("color in range"))
            .collect()
    }

    /// Configuration from a column-major spin vector (index c*K + r).
    pub fn from_spins(spec: GridSpec, spins: Vec<u8>) -> Result<Self> {
        if spins.len() != spec.num_vertices() {
            return Err(Error::SpinCount {
                got: spins.len(),
                want: spec.num_vertices(),
            });
        }
        for &s in &spins {
            spec.check_spin(s)?;
        }
        let mut cfg = Configuration { spec, spins, gap: 0 };
        cfg.gap = cfg.count_disagreeing_edges();
        Ok(cfg)
    }

    /// Parse the textual literal: K non-empty lines of L whitespace-
    /// separated integers, the first line being the top row (row K-1), the
    /// last line row 0. Inverse of [`Configuration::literal`].
    pub fn parse(spec: GridSpec, text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if lines.len() != spec.k {
            return Err(Error::Parse(format!(
                "expected {} rows, found {}",
                spec.k,
                lines.len()
            )));
        }
        let mut spins = vec![0u8; spec.num_vertices()];
        for (i, line) in lines.iter().enumerate() {
            let r = spec.k - 1 - i;
            let values: Vec<&str> = line.split_whitespace().collect();
            if values.len() != spec.l {
                return Err(Error::Parse(format!(
                    "row {r}: expected {} values, found {}",
                    spec.l,
                    values.len()
                )));
            }
            for (c, tok) in values.iter().enumerate() {
                let s: u8 = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {r}: `{tok}` is not a spin value")))?;
                spins[spec.index((c, r))] = s;
            }
        }
        Configuration::from_spins(spec, spins)
    }

    /// Textual literal: rows printed top row (K-1) first down to row 0, so
    /// the printout reads like a figure in which the row index grows upward.
    pub fn literal(&self) -> String {
        let mut out = String::new();
        for r in (0..self.spec.k).rev() {
            for c in 0..self.spec.l {
                if c > 0 {
                    out.push(' ');
                }
                out.push_str(&self.spins[self.spec.index((c, r))].to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn spins(&self) -> &[u8] {
        &self.spins
    }

    pub fn spin(&self, v: Vertex) -> Result<u8> {
        self.spec.check_vertex(v)?;
        Ok(self.spins[self.spec.index(v)])
    }

    pub fn spin_at(&self, index: usize) -> u8 {
        self.spins[index]
    }

    /// H(sigma) as an exact integer: gap - |E|.
    pub fn energy(&self) -> i64 {
        self.gap as i64 - self.spec.num_edges() as i64
    }

    /// Number of disagreeing edges, DH(sigma) = H(sigma) + |E|.
    pub fn gap(&self) -> u32 {
        self.gap
    }

    /// H(sigma) recomputed from the definition by scanning every edge.
    /// Deliberately ignores the cached gap; tests and the exact oracle use
    /// this as the independent route.
    pub fn recompute_energy(&self) -> i64 {
        self.count_disagreeing_edges() as i64 - self.spec.num_edges() as i64
    }

    fn count_disagreeing_edges(&self) -> u32 {
        let spec = self.spec;
        let mut gap = 0u32;
        let hwrap = spec.boundary.wraps_rows();
        let vwrap = spec.boundary.wraps_cols();
        for c in 0..spec.l {
            for r in 0..spec.k {
                let s = self.spins[spec.index((c, r))];
                if hwrap || c + 1 < spec.l {
                    let right = self.spins[spec.index(((c + 1) % spec.l, r))];
                    gap += u32::from(s != right);
                }
                if vwrap || r + 1 < spec.k {
                    let up = self.spins[spec.index((c, (r + 1) % spec.k))];
                    gap += u32::from(s != up);
                }
            }
        }
        gap
    }

    /// True iff all spins are equal (the grid is connected, so this is
    /// gap == 0 and costs O(1)).
    pub fn is_stable(&self) -> bool {
        self.gap == 0
    }

    /// The common color if stable, else None.
    pub fn stable_color(&self) -> Option<u8> {
        if self.gap == 0 {
            Some(self.spins[0])
        } else {
            None
        }
    }

    /// H(sigma^{v,k}) - H(sigma): sum over the neighbor multiset of v of
    /// 1{sigma(w) = sigma(v)} - 1{sigma(w) = k}. Zero when k = sigma(v).
    pub fn delta_energy(&self, v: Vertex, k: u8) -> Result<i64> {
        self.spec.check_vertex(v)?;
        self.spec.check_spin(k)?;
        Ok(self.delta_by_index(self.spec.index(v), k))
    }

    /// Unchecked fast path used by the dynamics kernels; `index` must be a
    /// valid linear index and `k` a valid spin.
    pub(crate) fn delta_by_index(&self, index: usize, k: u8) -> i64 {
        let s = self.spins[index];
        if s == k {
            return 0;
        }
        let v = self.spec.vertex(index);
        let mut d = 0i64;
        for w in self.spec.neighbors(v) {
            let sw = self.spins[self.spec.index(w)];
            d += i64::from(sw == s) - i64::from(sw == k);
        }
        d
    }

    /// Same as [`Configuration::delta_by_index`] but through a precomputed
    /// neighbor table (the rejection-free scan calls this q|V| times per
    /// jump).
    pub(crate) fn delta_by_table(&self, index: usize, k: u8, table: &NeighborTable) -> i64 {
        let s = self.spins[index];
        if s == k {
            return 0;
        }
        let mut d = 0i64;
        for &w in table.neighbors(index) {
            let sw = self.spins[w as usize];
            d += i64::from(sw == s) - i64::from(sw == k);
        }
        d
    }

    /// Set sigma(v) = k in place, maintaining the cached gap; returns the
    /// realized energy change.
    pub fn apply_update(&mut self, v: Vertex, k: u8) -> Result<i64> {
        self.spec.check_vertex(v)?;
        self.spec.check_spin(k)?;
        Ok(self.apply_by_index(self.spec.index(v), k))
    }

    pub(crate) fn apply_by_index(&mut self, index: usize, k: u8) -> i64 {
        let d = self.delta_by_index(index, k);
        self.spins[index] = k;
        self.gap = (self.gap as i64 + d) as u32;
        d
    }

    /// The configuration sigma^{v,k}, leaving self untouched.
    pub fn updated(&self, v: Vertex, k: u8) -> Result<Self> {
        let mut next = self.clone();
        next.apply_update(v, k)?;
        Ok(next)
    }

    /// Apply the color-swap automorphism exchanging k and l. Preserves the
    /// energy exactly (agreement of any edge is untouched).
    pub fn swap_colors(&self, k: u8, l: u8) -> Result<Self> {
        self.spec.check_spin(k)?;
        self.spec.check_spin(l)?;
        if k == l {
            return Err(Error::EqualColors);
        }
        let spins = self
            .spins
            .iter()
            .map(|&s| {
                if s == k {
                    l
                } else if s == l {
                    k
                } else {
                    s
                }
            })
            .collect();
        Ok(Configuration {
            spec: self.spec,
            spins,
            gap: self.gap,
        })
    }

    /// Number of vertices at which self and other differ.
    pub fn hamming(&self, other: &Configuration) -> usize {
        debug_assert_eq!(self.spec, other.spec);
        self.spins
            .iter()
            .zip(&other.spins)
            .filter(|(a, b)| a != b)
            .count()
    }
}

impl std::fmt::Display for Configuration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.literal())
    }
}
