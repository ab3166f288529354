//! Space-time A* for one robot against a [`ReservationTable`].

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::grid::UNREACHABLE;
use crate::model::{Direction, Objective};

use super::reservation::ReservationTable;

/// Search limits and goal data for one robot.
pub(crate) struct SingleQuery<'a> {
    pub robot: usize,
    pub start: u32,
    pub target: u32,
    /// Distances to `target` ignoring robots.
    pub heuristic: &'a [u32],
    pub horizon: u32,
    pub objective: Objective,
}

struct Node {
    cell: u32,
    t: u32,
    parent: u32,
}

/// Minimum-cost path as a cell sequence indexed by time, trailing waits on
/// the target removed. `None` if no path exists within the horizon.
///
/// Cost is arrival time then move count for MAX, move count then arrival
/// time for SUM. A move into a cell occupied at the current time is allowed
/// only when the occupant leaves in the same direction; likewise a robot
/// entering the current cell forces the planned robot to move along.
pub(crate) fn plan(table: &ReservationTable<'_>, q: &SingleQuery<'_>) -> Option<Vec<u32>> {
    let window = table.window();
    let h0 = q.heuristic[q.start as usize];
    if h0 == UNREACHABLE || h0 > q.horizon {
        return None;
    }
    // The robot parks on its target forever, so it may only stop there
    // after every committed visit.
    let earliest_rest = table.latest_visit(q.target).map_or(0, |t| t + 1);
    let me = q.robot as u32;
    let cells = window.len() as u64;
    let layers = q.horizon as u64 + 1;
    let mut closed = vec![0u64; (cells * layers).div_ceil(64) as usize];

    let mut nodes: Vec<Node> = Vec::with_capacity(1024);
    // (primary f, secondary f, Reverse(t) favours deeper nodes, node id)
    let mut open: BinaryHeap<Reverse<(u32, u32, Reverse<u32>, u32)>> = BinaryHeap::new();
    let key = |g_time: u32, g_moves: u32, h: u32| match q.objective {
        Objective::Max => (g_time + h, g_moves + h),
        Objective::Sum => (g_moves + h, g_time + h),
    };

    if table.occupant(q.start, 0, Some(q.start)).is_some_and(|o| o.robot != me) {
        return None;
    }
    nodes.push(Node {
        cell: q.start,
        t: 0,
        parent: u32::MAX,
    });
    let (f1, f2) = key(0, 0, h0);
    open.push(Reverse((f1, f2, Reverse(0), 0)));
    let mut moves_of: Vec<u32> = vec![0];

    while let Some(Reverse((_, _, _, id))) = open.pop() {
        let (cell, t) = (nodes[id as usize].cell, nodes[id as usize].t);
        let bit = t as u64 * cells + cell as u64;
        let (word, mask) = ((bit / 64) as usize, 1u64 << (bit % 64));
        if closed[word] & mask != 0 {
            continue;
        }
        closed[word] |= mask;

        if cell == q.target && t >= earliest_rest {
            return Some(reconstruct(&nodes, id, q.target));
        }
        if t >= q.horizon {
            continue;
        }
        let g_moves = moves_of[id as usize];
        // Someone entering our cell at t+1 dictates our move.
        let forced = table
            .occupant(cell, t + 1, Some(q.target))
            .filter(|o| o.robot != me)
            .map(|o| table.leaving(o.robot, t));

        for d in Direction::ALL {
            if let Some(f) = forced {
                if f != d || d.is_wait() {
                    continue;
                }
            }
            let Some(next) = window.step(cell, d) else { continue };
            if window.is_blocked(next) {
                continue;
            }
            let nb = (t as u64 + 1) * cells + next as u64;
            if closed[(nb / 64) as usize] & (1u64 << (nb % 64)) != 0 {
                continue;
            }
            let h = q.heuristic[next as usize];
            if h == UNREACHABLE || t + 1 + h > q.horizon {
                continue;
            }
            if table.occupant(next, t + 1, Some(q.target)).is_some_and(|o| o.robot != me) {
                continue;
            }
            if !d.is_wait() {
                if let Some(o) = table.occupant(next, t, Some(q.target)) {
                    if o.robot != me && o.leaving != d {
                        continue;
                    }
                }
            }
            let moves = g_moves + u32::from(!d.is_wait());
            let (f1, f2) = key(t + 1, moves, h);
            let nid = nodes.len() as u32;
            nodes.push(Node {
                cell: next,
                t: t + 1,
                parent: id,
            });
            moves_of.push(moves);
            open.push(Reverse((f1, f2, Reverse(t + 1), nid)));
        }
    }
    None
}

fn reconstruct(nodes: &[Node], mut id: u32, target: u32) -> Vec<u32> {
    let mut path = Vec::with_capacity(nodes[id as usize].t as usize + 1);
    while id != u32::MAX {
        path.push(nodes[id as usize].cell);
        id = nodes[id as usize].parent;
    }
    path.reverse();
    while path.len() > 1 && path[path.len() - 1] == target && path[path.len() - 2] == target {
        path.pop();
    }
    path
}
