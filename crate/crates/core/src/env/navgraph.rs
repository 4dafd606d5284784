//! Free-space graph and geodesic oracles.
//!
//! Nodes are free cells; axial edges weigh 0.25 m, diagonal edges
//! 0.25·√2 m, and a diagonal is passable only when both adjacent axial
//! cells are free (no corner cutting). Distances are tracked as
//! (axial, diagonal) step counts and materialized with one shared
//! expression, so independently computed shortest paths agree bit for bit:
//! the irrationality of √2 makes the optimal count pair unique.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::env::house::{cell_center, House, ObjectClass, CELL};
use crate::error::{Error, Result};

/// Materialize a count pair as meters. The single authoritative expression.
pub fn exact_dist(axial: u32, diagonal: u32) -> f64 {
    axial as f64 * CELL + diagonal as f64 * (CELL * std::f64::consts::SQRT_2)
}

pub fn euclid(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Distance from a point to the closed 0.25 m square of a cell.
pub fn point_cell_distance(px: f64, py: f64, ix: usize, iy: usize) -> f64 {
    let x0 = ix as f64 * CELL;
    let y0 = iy as f64 * CELL;
    let dx = (x0 - px).max(px - (x0 + CELL)).max(0.0);
    let dy = (y0 - py).max(py - (y0 + CELL)).max(0.0);
    (dx * dx + dy * dy).sqrt()
}

/// Neighbor cells reachable in one graph step: (nx, ny, is_diagonal).
pub fn neighbors(house: &House, ix: usize, iy: usize) -> Vec<(usize, usize, bool)> {
    let mut out = Vec::with_capacity(8);
    let (x, y) = (ix as i64, iy as i64);
    for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
        if house.is_free(x + dx, y + dy) {
            out.push(((x + dx) as usize, (y + dy) as usize, false));
        }
    }
    for (dx, dy) in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
        if house.is_free(x + dx, y + dy) && house.is_free(x + dx, y) && house.is_free(x, y + dy) {
            out.push(((x + dx) as usize, (y + dy) as usize, true));
        }
    }
    out
}

/// Per-cell shortest-path step counts from a source set.
pub struct DistanceField {
    width: usize,
    counts: Vec<Option<(u32, u32)>>,
}

impl DistanceField {
    pub fn counts_at(&self, ix: usize, iy: usize) -> Option<(u32, u32)> {
        self.counts[iy * self.width + ix]
    }

    pub fn distance(&self, ix: usize, iy: usize) -> Option<f64> {
        self.counts_at(ix, iy).map(|(na, nd)| exact_dist(na, nd))
    }
}

struct HeapEntry {
    dist: f64,
    counts: (u32, u32),
    cell: (usize, usize),
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.cell == other.cell
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // min-heap by distance; cell index breaks ties deterministically
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .expect("finite distances")
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

/// Multi-source Dijkstra over the free-space graph.
pub fn distance_field(house: &House, sources: &[(usize, usize)]) -> DistanceField {
    let width = house.width();
    let mut counts: Vec<Option<(u32, u32)>> = vec![None; width * house.height()];
    let mut heap = BinaryHeap::new();
    for &(ix, iy) in sources {
        if house.is_free(ix as i64, iy as i64) && counts[iy * width + ix].is_none() {
            counts[iy * width + ix] = Some((0, 0));
            heap.push(HeapEntry { dist: 0.0, counts: (0, 0), cell: (ix, iy) });
        }
    }
    while let Some(HeapEntry { dist, counts: c, cell: (ix, iy) }) = heap.pop() {
        match counts[iy * width + ix] {
            Some(best) if exact_dist(best.0, best.1) < dist => continue,
            _ => {}
        }
        for (nx, ny, diag) in neighbors(house, ix, iy) {
            let nc = if diag { (c.0, c.1 + 1) } else { (c.0 + 1, c.1) };
            let nd = exact_dist(nc.0, nc.1);
            let better = match counts[ny * width + nx] {
                None => true,
                Some(cur) => nd < exact_dist(cur.0, cur.1),
            };
            if better {
                counts[ny * width + nx] = Some(nc);
                heap.push(HeapEntry { dist: nd, counts: nc, cell: (nx, ny) });
            }
        }
    }
    DistanceField { width, counts }
}

/// Geodesic between two continuous points: graph distance between their
/// cells plus the straight-line snap from each point to its cell center.
/// Same-cell pairs use the euclidean distance directly. `None` when the
/// cells are disconnected.
pub fn geodesic_distance(house: &House, a: (f64, f64), b: (f64, f64)) -> Result<Option<f64>> {
    let ca = house
        .cell_of_point(a.0, a.1)
        .filter(|&(ix, iy)| house.is_free(ix as i64, iy as i64))
        .ok_or_else(|| Error::Contract(format!("geodesic endpoint {a:?} is not in free space")))?;
    let cb = house
        .cell_of_point(b.0, b.1)
        .filter(|&(ix, iy)| house.is_free(ix as i64, iy as i64))
        .ok_or_else(|| Error::Contract(format!("geodesic endpoint {b:?} is not in free space")))?;
    if ca == cb {
        return Ok(Some(euclid(a, b)));
    }
    let field = distance_field(house, &[ca]);
    Ok(field.distance(cb.0, cb.1).map(|d| {
        d + euclid(a, cell_center(ca.0, ca.1)) + euclid(b, cell_center(cb.0, cb.1))
    }))
}

/// Distance oracle to the nearest goal-class object, built once per
/// (house, class).
pub struct GoalField {
    pub class: ObjectClass,
    footprint: Vec<(usize, usize)>,
    in_footprint: Vec<bool>,
    field: DistanceField,
    width: usize,
}

impl GoalField {
    pub fn new(house: &House, class: ObjectClass) -> Result<GoalField> {
        let mut footprint = Vec::new();
        for obj in house.objects_of(class) {
            for c in &obj.footprint {
                footprint.push((c[0], c[1]));
            }
        }
        if footprint.is_empty() {
            return Err(Error::Contract(format!("house has no {class} instance")));
        }
        let width = house.width();
        let mut in_footprint = vec![false; width * house.height()];
        for &(ix, iy) in &footprint {
            in_footprint[iy * width + ix] = true;
        }
        let field = distance_field(house, &footprint);
        Ok(GoalField { class, footprint, in_footprint, field, width })
    }

    /// Euclidean distance from a point to the goal region (union of
    /// footprint squares); zero inside.
    pub fn euclid_to_region(&self, x: f64, y: f64) -> f64 {
        self.footprint
            .iter()
            .map(|&(ix, iy)| point_cell_distance(x, y, ix, iy))
            .fold(f64::INFINITY, f64::min)
    }

    /// Success test: strictly closer than `threshold` to the region.
    pub fn within(&self, x: f64, y: f64, threshold: f64) -> bool {
        self.euclid_to_region(x, y) < threshold
    }

    /// Geodesic to the goal region. Under one cell of separation this is
    /// the euclidean region distance (which makes success imply a zero
    /// DTS); farther away it is the cell-graph distance to the nearest
    /// footprint cell plus the center snap.
    pub fn geodesic(&self, house: &House, x: f64, y: f64) -> Option<f64> {
        let (ix, iy) = house.cell_of_point(x, y)?;
        if self.in_footprint[iy * self.width + ix] {
            return Some(0.0);
        }
        let e = self.euclid_to_region(x, y);
        if e < CELL {
            // attainable only via a same-or-adjacent footprint cell
            return Some(e);
        }
        self.field
            .distance(ix, iy)
            .map(|d| d + euclid((x, y), cell_center(ix, iy)))
    }
}
