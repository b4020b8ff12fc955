//! Row/column energy decomposition and bridge structure.
//!
//! The energy gap splits over lines: DH(sigma) = sum_i DH_{r_i} + sum_j
//! DH_{c_j}, where a line's gap counts the disagreeing edges inside it
//! (wrap edges included on wrapped directions). A *bridge* is a
//! monochromatic full row or column; a color with bridges in both
//! orientations has a *cross*. On a wrapped line, zero gap forces
//! monochromaticity and a non-bridge line has gap >= 2 (a non-constant
//! coloring of a cycle has at least two boundaries); on an open line the
//! floor is 1.

use crate::config::Configuration;
use crate::{Error, Result};

/// Disagreement count over the horizontal edges of row `r`.
pub fn row_gap(cfg: &Configuration, r: usize) -> Result<u32> {
    let spec = cfg.spec();
    if r >= spec.k {
        return Err(Error::LineRange { index: r, len: spec.k });
    }
    let span = if spec.boundary.wraps_rows() { spec.l } else { spec.l - 1 };
    let mut gap = 0;
    for c in 0..span {
        let a = cfg.spin_at(spec.index((c, r)));
        let b = cfg.spin_at(spec.index(((c + 1) % spec.l, r)));
        gap += u32::from(a != b);
    }
    Ok(gap)
}

/// Disagreement count over the vertical edges of column `c`.
pub fn col_gap(cfg: &Configuration, c: usize) -> Result<u32> {
    let spec = cfg.spec();
    if c >= spec.l {
        return Err(Error::LineRange { index: c, len: spec.l });
    }
    let span = if spec.boundary.wraps_cols() { spec.k } else { spec.k - 1 };
    let mut gap = 0;
    for r in 0..span {
        let a = cfg.spin_at(spec.index((c, r)));
        let b = cfg.spin_at(spec.index((c, (r + 1) % spec.k)));
        gap += u32::from(a != b);
    }
    Ok(gap)
}

/// Orientation of a line or bridge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Vertical,
    Horizontal,
}

impl std::fmt::Display for Orientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Orientation::Vertical => "vertical",
            Orientation::Horizontal => "horizontal",
        })
    }
}

impl std::str::FromStr for Orientation {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "vertical" => Ok(Orientation::Vertical),
            "horizontal" => Ok(Orientation::Horizontal),
            other => Err(crate::Error::Parse(format!("unknown orientation '{other}'"))),
        }
    }
}

/// All bridges of a configuration: (line index, color) per orientation,
/// sorted by line index. A line is monochromatic in at most one color, so
/// each index appears at most once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bridges {
    pub horizontal: Vec<(usize, u8)>,
    pub vertical: Vec<(usize, u8)>,
}

impl Bridges {
    pub fn is_empty(&self) -> bool {
        self.horizontal.is_empty() && self.vertical.is_empty()
    }

    /// B_k: number of bridges of color k, both orientations together.
    pub fn count(&self, k: u8) -> usize {
        self.horizontal.iter().filter(|&&(_, c)| c == k).count()
            + self.vertical.iter().filter(|&&(_, c)| c == k).count()
    }

    /// True iff color k has a bridge in both orientations.
    pub fn has_cross(&self, k: u8) -> bool {
        self.horizontal.iter().any(|&(_, c)| c == k)
            && self.vertical.iter().any(|&(_, c)| c == k)
    }
}

fn row_color(cfg: &Configuration, r: usize) -> Option<u8> {
    let spec = cfg.spec();
    let first = cfg.spin_at(spec.index((0, r)));
    (1..spec.l)
        .all(|c| cfg.spin_at(spec.index((c, r))) == first)
        .then_some(first)
}

fn col_color(cfg: &Configuration, c: usize) -> Option<u8> {
    let spec = cfg.spec();
    let first = cfg.spin_at(spec.index((c, 0)));
    (1..spec.k)
        .all(|r| cfg.spin_at(spec.index((c, r))) == first)
        .then_some(first)
}

/// Scan all rows and columns for bridges.
pub fn bridges(cfg: &Configuration) -> Bridges {
    let spec = cfg.spec();
    let horizontal = (0..spec.k)
        .filter_map(|r| row_color(cfg, r).map(|k| (r, k)))
        .collect();
    let vertical = (0..spec.l)
        .filter_map(|c| col_color(cfg, c).map(|k| (c, k)))
        .collect();
    Bridges { horizontal, vertical }
}

/// True iff sigma has both a horizontal and a vertical k-bridge.
pub fn has_cross(cfg: &Configuration, k: u8) -> bool {
    bridges(cfg).has_cross(k)
}

/// Outcome of checking the bridge-count lemma on one single-spin update.
#[derive(Clone, Debug)]
pub struct BridgeDeltaReport {
    /// (color, B_color(after) - B_color(before)) for every color.
    pub deltas: Vec<(u8, i64)>,
    /// Violated conditions, empty when the lemma holds on this update:
    /// every |delta| <= 2, an increase only for the new color k, and
    /// delta = +2 for k only when the update completes a k-cross at v.
    pub violations: Vec<String>,
}

impl BridgeDeltaReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Test-support check of how bridge counts move under sigma -> sigma^{v,k}.
pub fn bridge_delta_check(cfg: &Configuration, v: (usize, usize), k: u8) -> Result<BridgeDeltaReport> {
    let spec = cfg.spec();
    spec.check_vertex(v)?;
    spec.check_spin(k)?;
    let before = bridges(cfg);
    let after_cfg = cfg.updated(v, k)?;
    let after = bridges(&after_cfg);

    let mut deltas = Vec::with_capacity(spec.q as usize);
    let mut violations = Vec::new();
    let old = cfg.spin_at(spec.index(v));
    for color in 1..=spec.q {
        let d = after.count(color) as i64 - before.count(color) as i64;
        deltas.push((color, d));
        if d.abs() > 2 {
            violations.push(format!("color {color}: |delta B| = {} > 2", d.abs()));
        }
        if d > 0 && color != k {
            violations.push(format!("color {color}: B grew without the update writing it"));
        }
        if d < 0 && color != old && old != k {
            violations.push(format!("color {color}: B shrank without the update erasing it"));
        }
        if d == 2 {
            // only possible by completing both the row and the column
            // through v, i.e. a new k-cross at v
            let row_is = after.horizontal.iter().any(|&(r, c)| r == v.1 && c == color);
            let col_is = after.vertical.iter().any(|&(cc, c)| cc == v.0 && c == color);
            if !(row_is && col_is && after.has_cross(color)) {
                violations.push(format!("color {color}: delta B = +2 without a new cross at v"));
            }
        }
    }
    Ok(BridgeDeltaReport { deltas, violations })
}
