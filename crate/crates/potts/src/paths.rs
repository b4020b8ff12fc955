//! Constructive single-spin-flip paths across the energy landscape.
//!
//! Three constructions, all returning explicit [`Path`] values whose heights
//! can be checked step by step:
//!
//! * [`expansion_path`]: from a configuration with a monochromatic bridge to
//!   the stable configuration of the bridge color, filling one line at a
//!   time outward from the bridge. Its height exceeds the starting energy by
//!   at most 2 (periodic, semi-periodic) or 1 (open).
//! * [`reference_path`]: between two stable configurations c -> d, first
//!   painting one line of d through the sea of c and then expanding. Its
//!   height exceeds H(c) by exactly Gamma on periodic and open grids.
//! * [`reduction_path`]: from an arbitrary configuration to some stable one,
//!   with height strictly below H(sigma) + Gamma; certifies the absence of
//!   deep wells state by state.

use crate::config::Configuration;
use crate::geometry::{self, Orientation};
use crate::lattice::{Boundary, GridSpec, Vertex};
use crate::{Error, Result};

/// A bridge named by orientation, line index, and color.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BridgeSpec {
    pub orientation: Orientation,
    pub index: usize,
    pub color: u8,
}

/// A sequence of configurations in which consecutive entries differ at
/// exactly one vertex. Void updates are skipped at construction time, so the
/// invariant is strict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    steps: Vec<Configuration>,
}

impl Path {
    pub fn new(start: Configuration) -> Self {
        Path { steps: vec![start] }
    }

    /// Validate an explicit step sequence.
    pub fn from_steps(steps: Vec<Configuration>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::EmptyPath);
        }
        for (i, pair) in steps.windows(2).enumerate() {
            let differing = pair[0].hamming(&pair[1]);
            if differing != 1 {
                return Err(Error::NotSingleUpdate { step: i + 1, differing });
            }
        }
        Ok(Path { steps })
    }

    /// Apply sigma -> sigma^{v,k} and record the result; a void update
    /// (k already at v) is skipped and the path is unchanged.
    pub fn push_update(&mut self, v: Vertex, k: u8) -> Result<()> {
        let last = self.steps.last().expect("path never empty");
        if last.spin(v)? == k {
            return Ok(());
        }
        let next = last.updated(v, k)?;
        self.steps.push(next);
        Ok(())
    }

    pub fn steps(&self) -> &[Configuration] {
        &self.steps
    }

    pub fn first(&self) -> &Configuration {
        &self.steps[0]
    }

    pub fn last(&self) -> &Configuration {
        self.steps.last().expect("path never empty")
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a path always holds at least its starting configuration
    }

    /// Max energy along the path.
    pub fn height(&self) -> i64 {
        self.steps.iter().map(Configuration::energy).max().expect("non-empty")
    }

    /// Height above the starting energy.
    pub fn slack(&self) -> i64 {
        self.height() - self.steps[0].energy()
    }

    /// Textual dump: per step a `step <t> energy <H>` header followed by the
    /// configuration literal and a blank line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (t, cfg) in self.steps.iter().enumerate() {
            out.push_str(&format!("step {t} energy {}\n", cfg.energy()));
            out.push_str(&cfg.literal());
            out.push('\n');
        }
        out
    }
}

/// Upper bound on expansion slack for the boundary type.
pub fn expansion_bound(boundary: Boundary) -> i64 {
    match boundary {
        Boundary::Open => 1,
        Boundary::Periodic | Boundary::SemiPeriodic => 2,
    }
}

/// Orders in which lines are visited when expanding outward from `start`:
/// wrapped direction walks forward cyclically; open direction goes right/up
/// to the boundary, then mirrors left/down.
fn line_order(start: usize, n: usize, wraps: bool) -> Vec<usize> {
    if wraps {
        (1..n).map(|d| (start + d) % n).collect()
    } else {
        ((start + 1)..n).chain((0..start).rev()).collect()
    }
}

/// Vertices of a line in fill order (lowest index first).
fn line_vertices(orientation: Orientation, line: usize, spec: GridSpec) -> Vec<Vertex> {
    match orientation {
        Orientation::Vertical => (0..spec.k).map(|r| (line, r)).collect(),
        Orientation::Horizontal => (0..spec.l).map(|c| (c, line)).collect(),
    }
}

fn push_expansion(path: &mut Path, bridge: BridgeSpec) -> Result<()> {
    let spec = path.last().spec();
    let (n_lines, line_wraps) = match bridge.orientation {
        // a vertical bridge expands across columns, i.e. the horizontal direction
        Orientation::Vertical => (spec.l, spec.boundary.wraps_rows()),
        Orientation::Horizontal => (spec.k, spec.boundary.wraps_cols()),
    };
    for line in line_order(bridge.index, n_lines, line_wraps) {
        for v in line_vertices(bridge.orientation, line, spec) {
            path.push_update(v, bridge.color)?;
        }
    }
    Ok(())
}

/// Path from `cfg` (which must carry the named bridge) to the stable
/// configuration of the bridge color, filling one line at a time away from
/// the bridge, each line from index 0 upward. Already-matching vertices are
/// void steps and are skipped. Slack is at most [`expansion_bound`].
pub fn expansion_path(cfg: &Configuration, bridge: BridgeSpec) -> Result<Path> {
    let spec = cfg.spec();
    spec.check_spin(bridge.color)?;
    let found = geometry::bridges(cfg);
    let present = match bridge.orientation {
        Orientation::Vertical => found.vertical.iter().any(|&b| b == (bridge.index, bridge.color)),
        Orientation::Horizontal => found.horizontal.iter().any(|&b| b == (bridge.index, bridge.color)),
    };
    if !present {
        return Err(Error::MissingBridge(format!(
            "{} bridge of color {} at index {}",
            bridge.orientation, bridge.color, bridge.index
        )));
    }
    let mut path = Path::new(cfg.clone());
    push_expansion(&mut path, bridge)?;
    debug_assert!(path.last().is_stable());
    Ok(path)
}

/// Reference path between distinct stable configurations s_c -> s_d: paint
/// the line of d (column 0 when K <= L, else row 0), then expand. On
/// periodic and open grids its slack equals Gamma exactly.
pub fn reference_path(spec: GridSpec, c: u8, d: u8) -> Result<Path> {
    spec.check_spin(c)?;
    spec.check_spin(d)?;
    if c == d {
        return Err(Error::EqualColors);
    }
    let orientation = if spec.k <= spec.l {
        Orientation::Vertical
    } else {
        Orientation::Horizontal
    };
    let mut path = Path::new(Configuration::stable(spec, c)?);
    for v in line_vertices(orientation, 0, spec) {
        path.push_update(v, d)?;
    }
    push_expansion(&mut path, BridgeSpec { orientation, index: 0, color: d })?;
    debug_assert_eq!(path.last().stable_color(), Some(d));
    Ok(path)
}

/// Pick the line to complete in the bridge-less case: over all lines of the
/// given orientation and all colors, maximize the number of vertices already
/// of that color; ties break to the smallest line index, then the smallest
/// color.
fn best_line(cfg: &Configuration, orientation: Orientation) -> BridgeSpec {
    let spec = cfg.spec();
    let n_lines = match orientation {
        Orientation::Vertical => spec.l,
        Orientation::Horizontal => spec.k,
    };
    let mut best: Option<(usize, usize, u8)> = None; // (count, line, color)
    for line in 0..n_lines {
        for color in 1..=spec.q {
            let count = line_vertices(orientation, line, spec)
                .into_iter()
                .filter(|&v| cfg.spin_at(spec.index(v)) == color)
                .count();
            let better = match best {
                None => true,
                Some((bc, bl, bk)) => count > bc || (count == bc && (line, color) < (bl, bk)),
            };
            if better {
                best = Some((count, line, color));
            }
        }
    }
    let (_, line, color) = best.expect("grid has at least one line");
    BridgeSpec { orientation, index: line, color }
}

/// Complete the chosen line to a bridge: seed at the lowest-index vertex
/// already of the color, then repeatedly flip the lowest-index uncolored
/// vertex adjacent (within the line, wrapping if the direction wraps) to an
/// already-colored one. Every flip has a same-color neighbor inside the
/// line, which caps its cost.
fn push_line_completion(path: &mut Path, target: BridgeSpec) -> Result<()> {
    let spec = path.last().spec();
    let verts = line_vertices(target.orientation, target.index, spec);
    let n = verts.len();
    let wraps = match target.orientation {
        Orientation::Vertical => spec.boundary.wraps_cols(),
        Orientation::Horizontal => spec.boundary.wraps_rows(),
    };
    let mut colored: Vec<bool> = verts
        .iter()
        .map(|&v| path.last().spin_at(spec.index(v)) == target.color)
        .collect();
    debug_assert!(colored.iter().any(|&b| b), "line must contain the color");
    while let Some(next) = (0..n)
        .filter(|&i| !colored[i])
        .find(|&i| {
            let before = if i > 0 { Some(i - 1) } else if wraps { Some(n - 1) } else { None };
            let after = if i + 1 < n { Some(i + 1) } else if wraps { Some(0) } else { None };
            before.is_some_and(|j| colored[j]) || after.is_some_and(|j| colored[j])
        })
    {
        path.push_update(verts[next], target.color)?;
        colored[next] = true;
    }
    debug_assert!(colored.iter().all(|&b| b));
    Ok(())
}

fn reduce_along(cfg: &Configuration, orientation: Orientation) -> Result<Path> {
    let target = best_line(cfg, orientation);
    let mut path = Path::new(cfg.clone());
    push_line_completion(&mut path, target)?;
    push_expansion(&mut path, target)?;
    Ok(path)
}

/// Path from an arbitrary configuration to some stable configuration whose
/// slack stays strictly below Gamma. Stable input gives the trivial path; a
/// bridge (vertical preferred, then smallest index) is expanded directly;
/// otherwise the line with the highest same-color count is completed first.
/// Lines run along the short grid side; on semi-periodic grids both
/// orientations are tried and the lower path kept.
///
/// Returns the path and the color of the stable configuration reached.
pub fn reduction_path(cfg: &Configuration) -> Result<(Path, u8)> {
    if let Some(color) = cfg.stable_color() {
        return Ok((Path::new(cfg.clone()), color));
    }
    let spec = cfg.spec();
    let found = geometry::bridges(cfg);
    let chosen = found
        .vertical
        .first()
        .map(|&(index, color)| BridgeSpec { orientation: Orientation::Vertical, index, color })
        .or_else(|| {
            found
                .horizontal
                .first()
                .map(|&(index, color)| BridgeSpec { orientation: Orientation::Horizontal, index, color })
        });
    if let Some(bridge) = chosen {
        let path = expansion_path(cfg, bridge)?;
        return Ok((path, bridge.color));
    }
    let primary = if spec.k <= spec.l {
        Orientation::Vertical
    } else {
        Orientation::Horizontal
    };
    let mut path = reduce_along(cfg, primary)?;
    if spec.boundary == Boundary::SemiPeriodic {
        let other = match primary {
            Orientation::Vertical => Orientation::Horizontal,
            Orientation::Horizontal => Orientation::Vertical,
        };
        let alt = reduce_along(cfg, other)?;
        if alt.height() < path.height() {
            path = alt;
        }
    }
    let color = path.last().stable_color().expect("reduction ends stable");
    Ok((path, color))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, GridSpec};

    fn spec(k: usize, l: usize, q: u8, b: Boundary) -> GridSpec {
        GridSpec::new(k, l, q, b).unwrap()
    }

    #[test]
    fn reference_path_energies_open_2x3() {
        // hand-computed profile: fill column 0 (+2, 0), then expand
        // (+1, -1, 0, -2); the peak sits one unit above H(c) + K
        let s = spec(2, 3, 2, Boundary::Open);
        let p = reference_path(s, 1, 2).unwrap();
        let energies: Vec<i64> = p.steps().iter().map(Configuration::energy).collect();
        assert_eq!(energies, vec![-7, -5, -5, -4, -5, -5, -7]);
        assert_eq!(p.slack(), s.gamma().value);
        assert_eq!(p.last().stable_color(), Some(2));
    }

    #[test]
    fn reference_path_leg_increments_periodic_3x3() {
        let s = spec(3, 3, 2, Boundary::Periodic);
        let p = reference_path(s, 1, 2).unwrap();
        let e: Vec<i64> = p.steps().iter().map(Configuration::energy).collect();
        // first-line increments +4, +2, 0 land on H(c) + 2K
        assert_eq!(&e[..4], &[-18, -14, -12, -12]);
        assert_eq!(p.slack(), 8);
        assert_eq!(p.height(), -18 + 8);
    }

    #[test]
    fn reference_path_is_strictly_single_flip() {
        let s = spec(3, 4, 3, Boundary::Periodic);
        let p = reference_path(s, 2, 3).unwrap();
        Path::from_steps(p.steps().to_vec()).unwrap();
        assert_eq!(p.len(), 1 + s.num_vertices());
        assert!(reference_path(s, 2, 2).is_err());
    }

    #[test]
    fn transposed_reference_fills_a_row() {
        // K > L: the first painted line is row 0
        let s = spec(4, 2, 2, Boundary::Open);
        let p = reference_path(s, 1, 2).unwrap();
        assert_eq!(p.slack(), s.gamma().value);
        let after_leg1 = &p.steps()[s.l];
        assert_eq!(after_leg1.spin((0, 0)).unwrap(), 2);
        assert_eq!(after_leg1.spin((1, 0)).unwrap(), 2);
    }

    #[test]
    fn expansion_requires_the_named_bridge() {
        let s = spec(2, 3, 2, Boundary::Open);
        let cfg = Configuration::parse(s, "2 1 1\n2 1 1\n").unwrap();
        let good = BridgeSpec { orientation: Orientation::Vertical, index: 0, color: 2 };
        let p = expansion_path(&cfg, good).unwrap();
        assert_eq!(p.last().stable_color(), Some(2));
        assert!(p.slack() <= expansion_bound(s.boundary));
        let bad = BridgeSpec { orientation: Orientation::Vertical, index: 1, color: 2 };
        assert!(expansion_path(&cfg, bad).is_err());
    }

    #[test]
    fn expansion_from_stable_is_trivial() {
        let s = spec(3, 3, 2, Boundary::Periodic);
        let cfg = Configuration::stable(s, 1).unwrap();
        let b = BridgeSpec { orientation: Orientation::Horizontal, index: 2, color: 1 };
        let p = expansion_path(&cfg, b).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.slack(), 0);
    }

    #[test]
    fn open_expansion_mirrors_around_interior_bridge() {
        let s = spec(2, 4, 2, Boundary::Open);
        let cfg = Configuration::parse(s, "1 1 2 1\n1 1 2 1\n").unwrap();
        let b = BridgeSpec { orientation: Orientation::Vertical, index: 2, color: 2 };
        let p = expansion_path(&cfg, b).unwrap();
        assert!(p.slack() <= 1, "open expansion slack {} > 1", p.slack());
        assert_eq!(p.last().stable_color(), Some(2));
        // first move extends rightward to the boundary (column 3, row 0)
        assert_eq!(p.steps()[1].spin((3, 0)).unwrap(), 2);
    }

    #[test]
    fn reduction_on_stable_is_trivial() {
        let s = spec(3, 3, 3, Boundary::Open);
        let cfg = Configuration::stable(s, 3).unwrap();
        let (p, color) = reduction_path(&cfg).unwrap();
        assert_eq!((p.len(), color), (1, 3));
    }

    #[test]
    fn reduction_prefers_vertical_bridge() {
        let s = spec(3, 3, 2, Boundary::Open);
        let cfg = Configuration::parse(s, "1 2 1\n1 2 1\n1 2 1\n").unwrap();
        let (p, color) = reduction_path(&cfg).unwrap();
        // vertical bridges at columns 0 (color 1), 1 (color 2), 2 (color 1);
        // smallest index wins
        assert_eq!(color, 1);
        assert!(p.slack() < s.gamma().value);
    }

    #[test]
    fn reduction_bridge_less_stays_below_gamma() {
        let s = spec(2, 3, 3, Boundary::Open);
        let cfg = Configuration::parse(s, "2 3 1\n1 2 3\n").unwrap();
        assert!(geometry::bridges(&cfg).is_empty());
        let (p, color) = reduction_path(&cfg).unwrap();
        assert!(p.slack() < s.gamma().value, "slack {}", p.slack());
        assert_eq!(p.last().stable_color(), Some(color));
    }

    #[test]
    fn dump_round_trips_through_parse() {
        let s = spec(2, 3, 2, Boundary::Open);
        let p = reference_path(s, 1, 2).unwrap();
        let dump = p.dump();
        assert!(dump.starts_with("step 0 energy -7\n1 1 1\n1 1 1\n\n"));
        // each literal block parses back to the step configuration
        let blocks: Vec<&str> = dump.split("\n\n").filter(|b| !b.trim().is_empty()).collect();
        assert_eq!(blocks.len(), p.len());
        for (block, step) in blocks.iter().zip(p.steps()) {
            let body: String = block
                .lines()
                .filter(|l| !l.starts_with("step "))
                .map(|l| format!("{l}\n"))
                .collect();
            assert_eq!(&Configuration::parse(s, &body).unwrap(), step);
        }
    }
}
