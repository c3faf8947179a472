//! Grid search over a world's free cells.
//!
//! Moves are 8-connected; a diagonal move is only allowed when both cells it
//! cuts past are free, so paths never squeeze between touching obstacles.
//! Straight moves cost one cell length, diagonals `sqrt(2)`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{Error, Result};
use crate::simulator::WorldModel;

const NEIGHBOURS: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

fn moves(world: &WorldModel, col: usize, row: usize) -> impl Iterator<Item = (usize, usize, bool)> + '_ {
    NEIGHBOURS.iter().filter_map(move |&(dc, dr)| {
        let (c, r) = (col as isize + dc, row as isize + dr);
        if c < 0 || r < 0 || c as usize >= world.width() || r as usize >= world.height() {
            return None;
        }
        let (c, r) = (c as usize, r as usize);
        if world.is_blocked(c, r) {
            return None;
        }
        let diagonal = dc != 0 && dr != 0;
        if diagonal && (world.is_blocked(c, row) || world.is_blocked(col, r)) {
            return None;
        }
        Some((c, r, diagonal))
    })
}

#[derive(Copy, Clone, PartialEq)]
struct Entry {
    cost: f64,
    cell: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest free-space path length (meters) from one source cell to every
/// cell; `INFINITY` where unreachable or impassable.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    width: usize,
    dist: Vec<f64>,
}

impl DistanceField {
    pub fn from_cell(world: &WorldModel, source: (usize, usize)) -> Self {
        let w = world.width();
        let mut dist = vec![f64::INFINITY; w * world.height()];
        let cs = world.cell_size();
        if !world.is_blocked(source.0, source.1) {
            let mut heap = BinaryHeap::new();
            dist[source.1 * w + source.0] = 0.0;
            heap.push(Entry { cost: 0.0, cell: source.1 * w + source.0 });
            while let Some(Entry { cost, cell }) = heap.pop() {
                if cost > dist[cell] {
                    continue;
                }
                let (col, row) = (cell % w, cell / w);
                for (c, r, diag) in moves(world, col, row) {
                    let next = cost + if diag { std::f64::consts::SQRT_2 * cs } else { cs };
                    let i = r * w + c;
                    if next < dist[i] {
                        dist[i] = next;
                        heap.push(Entry { cost: next, cell: i });
                    }
                }
            }
        }
        Self { width: w, dist }
    }

    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.dist[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.dist
    }

    /// Path length from a continuous position: the best over its own and the
    /// neighbouring free cells of `field + straight distance to that cell
    /// center`. `INFINITY` outside the world or when nothing nearby is reachable.
    pub fn remaining(&self, world: &WorldModel, x: f64, y: f64) -> f64 {
        let Some((col, row)) = world.cell_of(x, y) else { return f64::INFINITY };
        let mut best = f64::INFINITY;
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                let (c, r) = (col as isize + dc, row as isize + dr);
                if c < 0 || r < 0 || c as usize >= world.width() || r as usize >= world.height() {
                    continue;
                }
                let d = self.at(c as usize, r as usize);
                if d.is_finite() {
                    let [cx, cy] = world.cell_center(c as usize, r as usize);
                    best = best.min(d + (cx - x).hypot(cy - y));
                }
            }
        }
        best
    }
}

/// Breadth-first move counts from `source`; `None` where unreachable.
pub fn bfs_hops(world: &WorldModel, source: (usize, usize)) -> Vec<Option<u32>> {
    let w = world.width();
    let mut hops = vec![None; w * world.height()];
    if world.is_blocked(source.0, source.1) {
        return hops;
    }
    let mut queue = VecDeque::new();
    hops[source.1 * w + source.0] = Some(0);
    queue.push_back(source);
    while let Some((col, row)) = queue.pop_front() {
        let h = hops[row * w + col].expect("queued cells are labelled");
        for (c, r, _) in moves(world, col, row) {
            if hops[r * w + c].is_none() {
                hops[r * w + c] = Some(h + 1);
                queue.push_back((c, r));
            }
        }
    }
    hops
}

/// Free-space shortest path between the cells containing `from` and `to`,
/// expressed in control steps of `speed * dt` meters. `Ok(None)` when `to`
/// cannot be reached.
pub fn oracle_temporal_distance(
    world: &WorldModel,
    from: [f64; 2],
    to: [f64; 2],
    speed: f64,
    dt: f64,
) -> Result<Option<f64>> {
    let start = world.cell_of(from[0], from[1]).ok_or(Error::OutsideWorld { x: from[0], y: from[1] })?;
    let goal = world.cell_of(to[0], to[1]).ok_or(Error::OutsideWorld { x: to[0], y: to[1] })?;
    if world.is_blocked(start.0, start.1) {
        return Err(Error::Impassable { x: from[0], y: from[1] });
    }
    let field = DistanceField::from_cell(world, start);
    let d = field.at(goal.0, goal.1);
    Ok(d.is_finite().then(|| d / (speed * dt)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_in_empty_world() {
        let w = WorldModel::empty(40, 40, 0.5).unwrap();
        let steps = oracle_temporal_distance(&w, [2.25, 10.25], [9.75, 10.25], 1.5, 0.5).unwrap().unwrap();
        assert!((steps - 10.0).abs() < 1e-12, "{steps}");
    }

    #[test]
    fn diagonal_costs_sqrt_two() {
        let w = WorldModel::empty(10, 10, 1.0).unwrap();
        let f = DistanceField::from_cell(&w, (0, 0));
        assert!((f.at(3, 3) - 3.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((f.at(5, 2) - (3.0 + 2.0 * std::f64::consts::SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn sealed_room_is_unreachable() {
        let mut w = WorldModel::empty(20, 20, 1.0).unwrap();
        for i in 10..=16 {
            w.set_blocked(i, 10, true);
            w.set_blocked(i, 16, true);
            w.set_blocked(10, i, true);
            w.set_blocked(16, i, true);
        }
        assert_eq!(oracle_temporal_distance(&w, [2.5, 2.5], [13.5, 13.5], 1.5, 0.5).unwrap(), None);
        assert!(bfs_hops(&w, (2, 2))[13 * 20 + 13].is_none());
    }

    #[test]
    fn no_corner_cutting() {
        let mut w = WorldModel::empty(3, 3, 1.0).unwrap();
        w.set_blocked(1, 0, true);
        w.set_blocked(0, 1, true);
        let f = DistanceField::from_cell(&w, (0, 0));
        assert!(f.at(1, 1).is_infinite());
    }

    #[test]
    fn errors_for_blocked_start_and_outside() {
        let mut w = WorldModel::empty(5, 5, 1.0).unwrap();
        w.set_blocked(0, 0, true);
        assert!(matches!(
            oracle_temporal_distance(&w, [0.5, 0.5], [3.5, 3.5], 1.0, 1.0),
            Err(Error::Impassable { .. })
        ));
        assert!(matches!(
            oracle_temporal_distance(&w, [9.0, 0.5], [3.5, 3.5], 1.0, 1.0),
            Err(Error::OutsideWorld { .. })
        ));
    }

    #[test]
    fn remaining_interpolates_within_cell() {
        let w = WorldModel::empty(10, 1, 1.0).unwrap();
        let f = DistanceField::from_cell(&w, (0, 0));
        assert!((f.remaining(&w, 4.9, 0.5) - 4.4).abs() < 1e-12);
        assert!(f.remaining(&w, 11.0, 0.5).is_infinite());
    }
}
