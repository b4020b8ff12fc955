//! K x L grid graphs with periodic, open, or semi-periodic boundaries.
//!
//! A vertex is a `(column, row)` pair with column in `0..L` and row in
//! `0..K`; the row index increases upward. The linear index is column-major:
//! `(c, r) -> c*K + r`. Neighbor order is fixed as right, up, left, down
//! (absent directions omitted on open boundaries) so every scan over moves is
//! deterministic.
//!
//! Wrapped directions of length 2 produce a double bond: the direct and the
//! wrap edge join the same two vertices and both count, in the edge list as
//! in the energy. This keeps `|E| = 2KL` on the torus and the barrier
//! formulas valid down to K = 2 or L = 2.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Boundary condition.
///
/// `SemiPeriodic` wraps rows (each row is an L-cycle) and leaves columns
/// open, matching the convention "periodic horizontally, open vertically".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Open,
    SemiPeriodic,
}

impl Boundary {
    /// Rows wrap (horizontal direction is a cycle).
    pub fn wraps_rows(self) -> bool {
        matches!(self, Boundary::Periodic | Boundary::SemiPeriodic)
    }

    /// Columns wrap (vertical direction is a cycle).
    pub fn wraps_cols(self) -> bool {
        matches!(self, Boundary::Periodic)
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Open => "open",
            Boundary::SemiPeriodic => "semi_periodic",
        })
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "open" => Ok(Boundary::Open),
            "semi_periodic" | "semi-periodic" | "semi" => Ok(Boundary::SemiPeriodic),
            other => Err(Error::Parse(format!(
                "unknown boundary `{other}` (expected periodic | open | semi_periodic)"
            ))),
        }
    }
}

/// `(column, row)` pair.
pub type Vertex = (usize, usize);

/// Grid instance: K rows, L columns, q spin values, boundary condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    /// Number of rows (height of a column).
    pub k: usize,
    /// Number of columns (length of a row).
    pub l: usize,
    /// Number of spin values; spins take values 1..=q.
    pub q: u8,
    pub boundary: Boundary,
}

/// Energy barrier of an instance, from the closed formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gamma {
    pub value: i64,
    /// Whether max{K, L} >= 3 holds, the hypothesis under which the
    /// tunneling results are proved. Below it the value is still reported.
    pub hypothesis_met: bool,
    /// True on semi-periodic instances: there the value is a literature
    /// remark checked against the exact oracle on small grids, not a proved
    /// formula.
    pub conjectured: bool,
}

impl GridSpec {
    pub fn new(k: usize, l: usize, q: u8, boundary: Boundary) -> Result<Self> {
        if k < 2 || l < 2 || q < 2 {
            return Err(Error::BadSpec { k, l, q });
        }
        Ok(GridSpec { k, l, q, boundary })
    }

    pub fn num_vertices(&self) -> usize {
        self.k * self.l
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.0 < self.l && v.1 < self.k
    }

    /// Column-major linear index.
    pub fn index(&self, v: Vertex) -> usize {
        debug_assert!(self.contains(v));
        v.0 * self.k + v.1
    }

    pub fn vertex(&self, index: usize) -> Vertex {
        debug_assert!(index < self.num_vertices());
        (index / self.k, index % self.k)
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::OutOfBounds(v.0, v.1, self.l, self.k))
        }
    }

    pub fn check_spin(&self, spin: u8) -> Result<()> {
        if (1..=self.q).contains(&spin) {
            Ok(())
        } else {
            Err(Error::SpinRange { spin, q: self.q })
        }
    }

    /// Neighbors of `v` in right, up, left, down order, with absent
    /// directions omitted. On a wrapped direction of length 2 the same
    /// neighbor appears twice (double bond).
    pub fn neighbors(&self, v: Vertex) -> Neighbors {
        let (c, r) = v;
        let mut buf = [(0usize, 0usize); 4];
        let mut len = 0;
        let mut push = |w: Vertex| {
            buf[len] = w;
            len += 1;
        };
        // right
        if self.boundary.wraps_rows() {
            push(((c + 1) % self.l, r));
        } else if c + 1 < self.l {
            push((c + 1, r));
        }
        // up
        if self.boundary.wraps_cols() {
            push((c, (r + 1) % self.k));
        } else if r + 1 < self.k {
            push((c, r + 1));
        }
        // left
        if self.boundary.wraps_rows() {
            push(((c + self.l - 1) % self.l, r));
        } else if c > 0 {
            push((c - 1, r));
        }
        // down
        if self.boundary.wraps_cols() {
            push((c, (r + self.k - 1) % self.k));
        } else if r > 0 {
            push((c, r - 1));
        }
        Neighbors { buf, len, next: 0 }
    }

    /// Precomputed linear-index neighbor lists for hot loops.
    pub fn neighbor_table(&self) -> NeighborTable {
        let n = self.num_vertices();
        let mut nbrs = vec![[0u32; 4]; n];
        let mut deg = vec![0u8; n];
        for idx in 0..n {
            let v = self.vertex(idx);
            for (j, w) in self.neighbors(v).enumerate() {
                nbrs[idx][j] = self.index(w) as u32;
                deg[idx] = (j + 1) as u8;
            }
        }
        NeighborTable { nbrs, deg }
    }

    /// All edges, horizontal first then vertical, in generation order: for
    /// each row the edges (c, r)-(c+1, r), then for each column the edges
    /// (c, r)-(c, r+1), wrapping where the boundary says so.
    pub fn edges(&self) -> EdgeList {
        let mut horizontal = Vec::new();
        let mut vertical = Vec::new();
        let hspan = if self.boundary.wraps_rows() { self.l } else { self.l - 1 };
        let vspan = if self.boundary.wraps_cols() { self.k } else { self.k - 1 };
        for r in 0..self.k {
            for c in 0..hspan {
                horizontal.push(((c, r), ((c + 1) % self.l, r)));
            }
        }
        for c in 0..self.l {
            for r in 0..vspan {
                vertical.push(((c, r), (c, (r + 1) % self.k)));
            }
        }
        EdgeList { horizontal, vertical }
    }

    /// Edge count by closed formula; agrees with `edges()` by construction.
    pub fn num_edges(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => 2 * self.k * self.l,
            Boundary::Open => self.k * (self.l - 1) + self.l * (self.k - 1),
            Boundary::SemiPeriodic => self.k * self.l + self.l * (self.k - 1),
        }
    }

    /// Energy barrier between stable configurations.
    ///
    /// Periodic: 2*min{K,L} + 2. Open: min{K,L} + 1. Semi-periodic:
    /// min{K+2, 2L+1}, flagged `conjectured`. Never obtained by search; the
    /// exact module cross-checks it on enumerable instances.
    pub fn gamma(&self) -> Gamma {
        let (k, l) = (self.k as i64, self.l as i64);
        let value = match self.boundary {
            Boundary::Periodic => 2 * k.min(l) + 2,
            Boundary::Open => k.min(l) + 1,
            Boundary::SemiPeriodic => (k + 2).min(2 * l + 1),
        };
        Gamma {
            value,
            hypothesis_met: self.k.max(self.l) >= 3,
            conjectured: self.boundary == Boundary::SemiPeriodic,
        }
    }
}

/// Iterator over the (at most four) neighbors of a vertex.
#[derive(Clone, Debug)]
pub struct Neighbors {
    buf: [Vertex; 4],
    len: usize,
    next: usize,
}

impl Iterator for Neighbors {
    type Item = Vertex;

    fn next(&mut self) -> Option<Vertex> {
        if self.next < self.len {
            let v = self.buf[self.next];
            self.next += 1;
            Some(v)
        } else {
            None
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rem = self.len - self.next;
        (rem, Some(rem))
    }
}

impl ExactSizeIterator for Neighbors {}

/// Flat neighbor lists addressed by linear vertex index.
#[derive(Clone, Debug)]
pub struct NeighborTable {
    nbrs: Vec<[u32; 4]>,
    deg: Vec<u8>,
}

impl NeighborTable {
    pub fn degree(&self, index: usize) -> usize {
        self.deg[index] as usize
    }

    pub fn neighbors(&self, index: usize) -> &[u32] {
        &self.nbrs[index][..self.deg[index] as usize]
    }
}

/// Edges grouped by orientation.
#[derive(Clone, Debug)]
pub struct EdgeList {
    pub horizontal: Vec<(Vertex, Vertex)>,
    pub vertical: Vec<(Vertex, Vertex)>,
}

impl EdgeList {
    pub fn len(&self) -> usize {
        self.horizontal.len() + self.vertical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Vertex, Vertex)> {
        self.horizontal.iter().chain(self.vertical.iter())
    }
}
