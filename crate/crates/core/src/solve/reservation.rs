use rustc_hash::FxHashMap;

use crate::grid::GridWindow;
use crate::model::{Direction, Pixel};

/// Space-time bookkeeping of committed paths.
///
/// A committed path reserves `(cell, t)` for each of its positions; once it
/// ends, the robot is parked on its last cell for every later time. Robots
/// that have not been planned yet can be pinned to their start cell for all
/// times, so that earlier-planned robots route around them.
#[derive(Debug, Clone)]
pub struct ReservationTable<'w> {
    window: &'w GridWindow,
    vertex: FxHashMap<u64, u32>,
    parked: FxHashMap<u32, (u32, u32)>,
    pinned: FxHashMap<u32, u32>,
    visits: FxHashMap<u32, Vec<(u32, u32)>>,
    paths: Vec<Option<Vec<u32>>>,
    dirs: Vec<Vec<Direction>>,
}

#[inline]
fn key(cell: u32, t: u32) -> u64 {
    (t as u64) << 32 | cell as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Occupant {
    pub robot: u32,
    /// Move the occupant makes from `t` to `t + 1`.
    pub leaving: Direction,
}

impl<'w> ReservationTable<'w> {
    pub fn new(window: &'w GridWindow, robot_count: usize) -> Self {
        ReservationTable {
            window,
            vertex: FxHashMap::default(),
            parked: FxHashMap::default(),
            pinned: FxHashMap::default(),
            visits: FxHashMap::default(),
            paths: vec![None; robot_count],
            dirs: vec![Vec::new(); robot_count],
        }
    }

    pub fn window(&self) -> &'w GridWindow {
        self.window
    }

    pub fn robot_count(&self) -> usize {
        self.paths.len()
    }

    pub fn path(&self, robot: usize) -> Option<&[u32]> {
        self.paths[robot].as_deref()
    }

    pub fn path_pixels(&self, robot: usize) -> Option<Vec<Pixel>> {
        self.paths[robot]
            .as_ref()
            .map(|p| p.iter().map(|&c| self.window.pixel(c)).collect())
    }

    /// Commits a cell sequence (`path[t]` is the position at time `t`).
    /// Panics if the robot already holds a path.
    pub fn commit(&mut self, robot: usize, path: Vec<u32>) {
        assert!(self.paths[robot].is_none(), "robot {robot} already committed");
        assert!(!path.is_empty());
        let r = robot as u32;
        for (t, &c) in path.iter().enumerate() {
            self.vertex.insert(key(c, t as u32), r);
            self.visits.entry(c).or_default().push((t as u32, r));
        }
        let arrival = (path.len() - 1) as u32;
        self.parked.insert(*path.last().unwrap(), (r, arrival));
        self.dirs[robot] = path
            .windows(2)
            .map(|w| self.direction_between(w[0], w[1]))
            .collect();
        self.paths[robot] = Some(path);
    }

    /// Removes and returns the robot's committed path.
    pub fn remove(&mut self, robot: usize) -> Option<Vec<u32>> {
        let path = self.paths[robot].take()?;
        let r = robot as u32;
        for (t, &c) in path.iter().enumerate() {
            self.vertex.remove(&key(c, t as u32));
            if let Some(v) = self.visits.get_mut(&c) {
                v.retain(|&(_, o)| o != r);
                if v.is_empty() {
                    self.visits.remove(&c);
                }
            }
        }
        self.parked.remove(path.last().unwrap());
        self.dirs[robot].clear();
        Some(path)
    }

    pub fn pin(&mut self, robot: usize, cell: u32) {
        self.pinned.insert(cell, robot as u32);
    }

    pub fn unpin(&mut self, cell: u32) {
        self.pinned.remove(&cell);
    }

    pub fn is_pinned(&self, cell: u32) -> bool {
        self.pinned.contains_key(&cell)
    }

    /// Robot pinned on `cell`, if any.
    pub fn pinned_robot(&self, cell: u32) -> Option<usize> {
        self.pinned.get(&cell).map(|&r| r as usize)
    }

    /// Robot that ends its committed path on `cell`, if any.
    pub fn parked_robot(&self, cell: u32) -> Option<usize> {
        self.parked.get(&cell).map(|&(r, _)| r as usize)
    }

    pub fn is_vertex_reserved(&self, p: Pixel, t: u32) -> bool {
        self.window
            .index(p)
            .is_some_and(|c| self.occupant(c, t, None).is_some())
    }

    /// Latest time any committed path (parking excluded) stands on `cell`.
    pub(crate) fn latest_visit(&self, cell: u32) -> Option<u32> {
        self.visits.get(&cell).and_then(|v| v.iter().map(|&(t, _)| t).max())
    }

    pub(crate) fn leaving(&self, robot: u32, t: u32) -> Direction {
        self.dirs[robot as usize]
            .get(t as usize)
            .copied()
            .unwrap_or(Direction::Wait)
    }

    /// Who stands on `cell` at time `t`. Pins on `ignore_pin_at` are skipped.
    #[inline]
    pub(crate) fn occupant(&self, cell: u32, t: u32, ignore_pin_at: Option<u32>) -> Option<Occupant> {
        if let Some(&robot) = self.vertex.get(&key(cell, t)) {
            return Some(Occupant {
                robot,
                leaving: self.leaving(robot, t),
            });
        }
        if let Some(&(robot, arrival)) = self.parked.get(&cell) {
            if arrival <= t {
                return Some(Occupant {
                    robot,
                    leaving: Direction::Wait,
                });
            }
        }
        if ignore_pin_at != Some(cell) {
            if let Some(&robot) = self.pinned.get(&cell) {
                return Some(Occupant {
                    robot,
                    leaving: Direction::Wait,
                });
            }
        }
        None
    }

    fn direction_between(&self, a: u32, b: u32) -> Direction {
        Direction::ALL
            .into_iter()
            .find(|&d| self.window.step(a, d) == Some(b))
            .expect("consecutive path cells must be adjacent")
    }
}
