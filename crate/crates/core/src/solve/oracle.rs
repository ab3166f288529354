//! Exhaustive joint-state breadth-first search. Exact but exponential; only
//! usable on desk-scale instances.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use crate::grid::GridWindow;
use crate::model::{Configuration, Direction, Instance, Rect, Schedule, Step};
use crate::validate::check_step;

use super::SolveError;

pub const ORACLE_MAX_ROBOTS: usize = 4;
pub const ORACLE_MAX_AREA: u64 = 36;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleSolution {
    pub makespan: u64,
    pub schedule: Schedule,
}

/// Optimal-makespan schedule with all robots confined to `window`.
pub fn joint_bfs_oracle(instance: &Instance, window: Rect) -> Result<OracleSolution, SolveError> {
    let n = instance.robot_count();
    if n > ORACLE_MAX_ROBOTS || window.area() > ORACLE_MAX_AREA {
        return Err(SolveError::OracleGuard {
            robots: n,
            area: window.area(),
        });
    }
    let grid = GridWindow::new(window, instance.obstacles());
    let encode = |cells: &[u32]| cells.iter().fold(0u32, |acc, &c| acc << 6 | c);
    let to_cells = |config: &Configuration| -> Option<Vec<u32>> {
        config.positions.iter().map(|&p| grid.index(p)).collect()
    };
    let (Some(start), Some(goal)) = (
        to_cells(&instance.start_configuration()),
        to_cells(&instance.target_configuration()),
    ) else {
        return Err(SolveError::OutsideWindow);
    };
    let goal_key = encode(&goal);
    let start_key = encode(&start);

    let joint_moves: Vec<Vec<Direction>> = (0..5usize.pow(n as u32))
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let d = Direction::ALL[code % 5];
                    code /= 5;
                    d
                })
                .collect()
        })
        .collect();

    // state -> (parent state, joint move index)
    let mut parent: FxHashMap<u32, (u32, u32)> = FxHashMap::default();
    parent.insert(start_key, (u32::MAX, 0));
    let mut queue = VecDeque::from([start]);
    let mut found = start_key == goal_key;
    let mut next_cells = vec![0u32; n];
    while !found {
        let Some(cells) = queue.pop_front() else { break };
        let key = encode(&cells);
        let config = Configuration::new(cells.iter().map(|&c| grid.pixel(c)).collect());
        'moves: for (mi, moves) in joint_moves.iter().enumerate() {
            // Cheap pruning before the full rule check.
            for (i, (&c, &d)) in cells.iter().zip(moves).enumerate() {
                match grid.step(c, d) {
                    Some(nc) if !grid.is_blocked(nc) => next_cells[i] = nc,
                    _ => continue 'moves,
                }
            }
            for i in 0..n {
                for j in i + 1..n {
                    if next_cells[i] == next_cells[j] {
                        continue 'moves;
                    }
                }
            }
            let nkey = encode(&next_cells);
            if parent.contains_key(&nkey) {
                continue;
            }
            let step = Step::new(moves.clone());
            if !check_step(instance, &config, &step)?.is_legal() {
                continue;
            }
            parent.insert(nkey, (key, mi as u32));
            if nkey == goal_key {
                found = true;
                break;
            }
            queue.push_back(next_cells.clone());
        }
    }
    if !found {
        return Err(SolveError::NoFeasibleSchedule);
    }
    let mut steps = Vec::new();
    let mut k = goal_key;
    while k != start_key {
        let (p, mi) = parent[&k];
        steps.push(Step::new(joint_moves[mi as usize].clone()));
        k = p;
    }
    steps.reverse();
    let schedule = Schedule::new(instance.name(), steps);
    Ok(OracleSolution {
        makespan: schedule.objectives().makespan,
        schedule,
    })
}
