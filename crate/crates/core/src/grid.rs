//! Dense rectangular windows over the unbounded grid.
//!
//! Search procedures work on a finite window cut out of the integer grid.
//! Cells are addressed by `u32` row-major indices.

use std::collections::VecDeque;

use crate::model::{Direction, Instance, Pixel, Rect};

pub const UNREACHABLE: u32 = u32::MAX;

/// Margin by which the instance bounding box is inflated for shortest-path
/// and space-time searches.
///
/// Any single-robot path can be clamped coordinate-wise into the bounding box
/// inflated by one pixel: clamping is 1-Lipschitz in each coordinate, so
/// consecutive pixels stay equal or adjacent, pixels inside the box are
/// unchanged, and pixels that do change land on the ring outside the box,
/// which holds no obstacle. A shortest detour therefore never needs more than
/// a margin of 1; the returned value is never smaller than 2.
pub fn search_margin(bbox: &Rect, obstacle_count: usize) -> u32 {
    let span = bbox.width() + bbox.height();
    let cap = (2 * obstacle_count as u64 + 2).min(u32::MAX as u64) as u32;
    span.min(cap).max(2)
}

pub fn search_window(instance: &Instance) -> Rect {
    let bbox = instance.bounding_box();
    bbox.inflate(search_margin(&bbox, instance.obstacles().len()))
}

#[derive(Debug, Clone)]
pub struct GridWindow {
    rect: Rect,
    width: u32,
    blocked: Vec<bool>,
}

impl GridWindow {
    pub fn new<'a>(rect: Rect, obstacles: impl IntoIterator<Item = &'a Pixel>) -> Self {
        let width = rect.width();
        let mut blocked = vec![false; rect.area() as usize];
        let mut w = GridWindow {
            rect,
            width,
            blocked: Vec::new(),
        };
        for &p in obstacles {
            if let Some(i) = w.index(p) {
                blocked[i as usize] = true;
            }
        }
        w.blocked = blocked;
        w
    }

    pub fn for_instance(instance: &Instance) -> Self {
        GridWindow::new(search_window(instance), instance.obstacles())
    }

    pub fn with_margin(instance: &Instance, margin: u32) -> Self {
        GridWindow::new(instance.bounding_box().inflate(margin), instance.obstacles())
    }

    #[inline]
    pub fn rect(&self) -> Rect {
        self.rect
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.blocked.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.blocked.is_empty()
    }

    #[inline]
    pub fn index(&self, p: Pixel) -> Option<u32> {
        if self.rect.contains(p) {
            let dx = (p.x - self.rect.min_x) as u32;
            let dy = (p.y - self.rect.min_y) as u32;
            Some(dy * self.width + dx)
        } else {
            None
        }
    }

    #[inline]
    pub fn pixel(&self, idx: u32) -> Pixel {
        Pixel::new(
            self.rect.min_x + (idx % self.width) as i32,
            self.rect.min_y + (idx / self.width) as i32,
        )
    }

    #[inline]
    pub fn is_blocked(&self, idx: u32) -> bool {
        self.blocked[idx as usize]
    }

    pub fn set_blocked(&mut self, idx: u32, blocked: bool) {
        self.blocked[idx as usize] = blocked;
    }

    /// Cell reached from `idx` by moving in `d`, if it stays in the window.
    #[inline]
    pub fn step(&self, idx: u32, d: Direction) -> Option<u32> {
        let w = self.width;
        let x = idx % w;
        match d {
            Direction::Wait => Some(idx),
            Direction::East => (x + 1 < w).then_some(idx + 1),
            Direction::West => (x > 0).then(|| idx - 1),
            Direction::North => {
                let n = idx + w;
                ((n as usize) < self.blocked.len()).then_some(n)
            }
            Direction::South => (idx >= w).then(|| idx - w),
        }
    }

    /// 4-neighbor breadth-first distances from `source` through free cells.
    /// Unreached cells hold [`UNREACHABLE`].
    pub fn bfs_distances(&self, source: u32) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.len()];
        if self.is_blocked(source) {
            return dist;
        }
        let mut queue = VecDeque::new();
        dist[source as usize] = 0;
        queue.push_back(source);
        while let Some(c) = queue.pop_front() {
            let next = dist[c as usize] + 1;
            for d in Direction::MOVES {
                if let Some(n) = self.step(c, d) {
                    if !self.is_blocked(n) && dist[n as usize] == UNREACHABLE {
                        dist[n as usize] = next;
                        queue.push_back(n);
                    }
                }
            }
        }
        dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let w = GridWindow::new(Rect::new(-3, -2, 4, 5), []);
        for p in w.rect().pixels() {
            let i = w.index(p).unwrap();
            assert_eq!(w.pixel(i), p);
        }
        assert!(w.index(Pixel::new(5, 0)).is_none());
    }

    #[test]
    fn steps_stay_inside() {
        let w = GridWindow::new(Rect::new(0, 0, 2, 2), []);
        let corner = w.index(Pixel::new(0, 0)).unwrap();
        assert!(w.step(corner, Direction::West).is_none());
        assert!(w.step(corner, Direction::South).is_none());
        assert_eq!(w.pixel(w.step(corner, Direction::North).unwrap()), Pixel::new(0, 1));
        let top = w.index(Pixel::new(2, 2)).unwrap();
        assert!(w.step(top, Direction::North).is_none());
        assert!(w.step(top, Direction::East).is_none());
    }

    #[test]
    fn margin_never_below_two() {
        assert_eq!(search_margin(&Rect::new(0, 0, 0, 0), 0), 2);
        assert_eq!(search_margin(&Rect::new(0, 0, 9, 9), 0), 2);
        assert_eq!(search_margin(&Rect::new(0, 0, 9, 9), 3), 8);
        assert_eq!(search_margin(&Rect::new(0, 0, 9, 9), 100), 20);
    }
}
