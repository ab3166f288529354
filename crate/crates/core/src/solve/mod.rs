//! Heuristic solvers for MAX and SUM.
//!
//! Initial solutions come from prioritized planning: robots are planned one
//! at a time with space-time A* against the paths committed before them.
//! Robots not yet planned are pinned to their start pixels. A restart whose
//! order fails moves the failing robot to the front and tries again.
//!
//! The best initial solution is improved by annealed k-replanning: erase a
//! few robots' paths, replan them in random order and accept the result by
//! the Metropolis criterion.

mod astar;
mod oracle;
mod reservation;

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridWindow;
use crate::model::{Direction, Instance, Objective, Pixel, Schedule};
use crate::seed;
use crate::validate::{lower_bounds, validate_schedule, ValidateError, ValidationReport};

pub use oracle::{joint_bfs_oracle, OracleSolution, ORACLE_MAX_AREA, ORACLE_MAX_ROBOTS};
pub use reservation::ReservationTable;

use astar::SingleQuery;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("no feasible schedule found within the limits")]
    NoFeasibleSchedule,
    #[error("robot {robot} has no path within horizon {horizon}")]
    NoPath { robot: usize, horizon: u32 },
    #[error("joint search limited to {max_robots} robots and area {max_area}; got {robots} robots, area {area}", max_robots = ORACLE_MAX_ROBOTS, max_area = ORACLE_MAX_AREA)]
    OracleGuard { robots: usize, area: u64 },
    #[error("a start or target lies outside the search window")]
    OutsideWindow,
    #[error("order is not a permutation of the robots")]
    BadOrder,
    #[error("solver produced an invalid schedule: {0}")]
    Internal(String),
    #[error(transparent)]
    Validate(#[from] ValidateError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealConfig {
    /// `None` means 10% of the initial objective value.
    pub initial_temperature: Option<f64>,
    /// Temperature factor applied after every accepted move.
    pub cooling: f64,
    pub iterations: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            initial_temperature: None,
            cooling: 0.995,
            iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub objective: Objective,
    /// Wall-clock budget in seconds; `None` runs until the iteration caps.
    pub time_limit: Option<f64>,
    pub restarts: u32,
    /// Initial horizon is `max(horizon_factor × lb, lb + n)`.
    pub horizon_factor: f64,
    pub anneal: AnnealConfig,
    pub k_replan: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            objective: Objective::Max,
            time_limit: Some(30.0),
            restarts: 8,
            horizon_factor: 2.0,
            anneal: AnnealConfig::default(),
            k_replan: 3,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn for_objective(objective: Objective) -> Self {
        SolverConfig {
            objective,
            ..SolverConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.horizon_factor >= 1.0) {
            return Err(SolveError::Config("horizon_factor must be at least 1".into()));
        }
        if self.k_replan == 0 {
            return Err(SolveError::Config("k_replan must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(SolveError::Config("restarts must be at least 1".into()));
        }
        if !(self.anneal.cooling > 0.0 && self.anneal.cooling <= 1.0) {
            return Err(SolveError::Config("cooling must lie in (0, 1]".into()));
        }
        if self.anneal.initial_temperature.is_some_and(|t| !(t >= 0.0)) {
            return Err(SolveError::Config("initial temperature must be non-negative".into()));
        }
        if self.time_limit.is_some_and(|t| !(t >= 0.0)) {
            return Err(SolveError::Config("time limit must be non-negative".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, SolveError> {
        let config: SolverConfig = toml::from_str(text).map_err(|e| SolveError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "phase", content = "index")]
pub enum Phase {
    Restart(u32),
    Anneal(u64),
}

/// One improvement of the best-so-far solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Snapshot {
    pub elapsed: f64,
    pub objective: u64,
    #[serde(flatten)]
    pub phase: Phase,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Telemetry {
    pub snapshots: Vec<Snapshot>,
    pub restarts_succeeded: u32,
    pub iterations: u64,
    pub accepted: u64,
    pub replan_failures: u64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub schedule: Schedule,
    pub report: ValidationReport,
    pub telemetry: Telemetry,
}

/// Shared, read-only data for all planning calls on one instance.
struct Context<'a> {
    instance: &'a Instance,
    window: GridWindow,
    starts: Vec<u32>,
    targets: Vec<u32>,
    heuristics: Vec<Vec<u32>>,
    lb: Vec<u32>,
    lb_makespan: u32,
}

impl<'a> Context<'a> {
    fn new(instance: &'a Instance) -> Result<Self, SolveError> {
        let window = GridWindow::for_instance(instance);
        let bounds = lower_bounds(instance)?;
        let cells = |ps: &[Pixel]| -> Result<Vec<u32>, SolveError> {
            ps.iter()
                .map(|&p| window.index(p).ok_or(SolveError::OutsideWindow))
                .collect()
        };
        let starts = cells(instance.starts())?;
        let targets = cells(instance.targets())?;
        let heuristics: Vec<Vec<u32>> = targets.par_iter().map(|&t| window.bfs_distances(t)).collect();
        Ok(Context {
            instance,
            starts,
            targets,
            heuristics,
            lb_makespan: bounds.makespan as u32,
            lb: bounds.per_robot,
            window,
        })
    }

    fn n(&self) -> usize {
        self.starts.len()
    }

    fn initial_horizon(&self, factor: f64) -> u32 {
        let lb = self.lb_makespan as f64;
        ((factor * lb).ceil() as u32).max(self.lb_makespan + self.n() as u32)
    }

    fn horizon_cap(&self) -> u32 {
        10 * self.lb_makespan + self.n() as u32
    }

    fn query(&self, robot: usize, horizon: u32, objective: Objective) -> SingleQuery<'_> {
        SingleQuery {
            robot,
            start: self.starts[robot],
            target: self.targets[robot],
            heuristic: &self.heuristics[robot],
            horizon,
            objective,
        }
    }

    fn table(&self) -> ReservationTable<'_> {
        ReservationTable::new(&self.window, self.n())
    }

    fn schedule(&self, table: &ReservationTable<'_>) -> Schedule {
        let paths: Vec<Vec<Pixel>> = (0..self.n())
            .map(|r| table.path_pixels(r).expect("all robots planned"))
            .collect();
        Schedule::from_paths(self.instance.name(), &paths).expect("paths are 4-connected")
    }
}

/// Robot `robot`'s space-time shortest path against `reservations`, as
/// moves from time 0 to its arrival.
pub fn plan_single(
    instance: &Instance,
    robot: usize,
    reservations: &ReservationTable<'_>,
    objective: Objective,
    horizon: u32,
) -> Result<Vec<Direction>, SolveError> {
    let window = reservations.window();
    let (Some(start), Some(target)) = (
        window.index(instance.starts()[robot]),
        window.index(instance.targets()[robot]),
    ) else {
        return Err(SolveError::OutsideWindow);
    };
    let heuristic = window.bfs_distances(target);
    let q = SingleQuery {
        robot,
        start,
        target,
        heuristic: &heuristic,
        horizon,
        objective,
    };
    let path = astar::plan(reservations, &q).ok_or(SolveError::NoPath { robot, horizon })?;
    Ok(path
        .windows(2)
        .map(|w| window.pixel(w[0]).direction_to(window.pixel(w[1])).unwrap())
        .collect())
}

/// Search window used by the solvers for `instance`.
pub fn planning_window(instance: &Instance) -> GridWindow {
    GridWindow::for_instance(instance)
}

const RESTART_SHARE: f64 = 0.25;

struct PlanFailure {
    robot: usize,
    /// Unplanned robots whose pinned starts wall the robot in.
    ahead: Vec<usize>,
    /// Planned robots whose parked targets wall the robot in.
    behind: Vec<usize>,
}

/// Flood fill from the robot's start with pins and parked robots as walls.
/// Returns the robots on the wall if the target lies outside the region.
fn walled_in(ctx: &Context<'_>, table: &ReservationTable<'_>, robot: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    let (start, target) = (ctx.starts[robot], ctx.targets[robot]);
    let window = &ctx.window;
    let mut seen = vec![false; window.len()];
    seen[start as usize] = true;
    let mut queue = std::collections::VecDeque::from([start]);
    let (mut ahead, mut behind) = (Vec::new(), Vec::new());
    while let Some(c) = queue.pop_front() {
        if c == target {
            return None;
        }
        for d in Direction::MOVES {
            let Some(next) = window.step(c, d) else { continue };
            if window.is_blocked(next) || std::mem::replace(&mut seen[next as usize], true) {
                continue;
            }
            if next != target {
                if let Some(p) = table.pinned_robot(next) {
                    ahead.push(p);
                    continue;
                }
                if let Some(p) = table.parked_robot(next) {
                    behind.push(p);
                    continue;
                }
            }
            queue.push_back(next);
        }
    }
    Some((ahead, behind))
}

/// Plans robots in `order`, growing the horizon on failure up to its cap.
/// Unplanned robots are pinned to their starts unless marked `soft`; earlier
/// robots may then pass through, and the soft robot has to get out of the
/// way when it is planned.
fn plan_in_order<'c>(
    ctx: &'c Context<'_>,
    order: &[usize],
    soft: &[bool],
    objective: Objective,
    horizon: &mut u32,
) -> Result<ReservationTable<'c>, PlanFailure> {
    let mut table = ctx.table();
    for &r in order {
        if !soft[r] {
            table.pin(r, ctx.starts[r]);
        }
    }
    let cap = ctx.horizon_cap().max(*horizon);
    for &r in order {
        table.unpin(ctx.starts[r]);
        loop {
            if let Some(path) = astar::plan(&table, &ctx.query(r, *horizon, objective)) {
                table.commit(r, path);
                break;
            }
            // A longer horizon cannot open a wall of waiting robots.
            if let Some((ahead, behind)) = walled_in(ctx, &table, r) {
                return Err(PlanFailure { robot: r, ahead, behind });
            }
            if *horizon >= cap {
                return Err(PlanFailure {
                    robot: r,
                    ahead: Vec::new(),
                    behind: Vec::new(),
                });
            }
            *horizon = ((*horizon as f64 * 1.5).ceil() as u32).min(cap);
        }
    }
    Ok(table)
}

/// New priority order after a failure: robots walling the failed one in by
/// their starts go right before it, robots walling it in by their targets
/// right after it. Without such robots the failed one moves to the front.
fn reorder(order: &mut Vec<usize>, failure: &PlanFailure) {
    let pos = order.iter().position(|&x| x == failure.robot).unwrap();
    if failure.ahead.is_empty() && failure.behind.is_empty() {
        order[..=pos].rotate_right(1);
        return;
    }
    let ahead: Vec<usize> = order[pos + 1..].iter().copied().filter(|r| failure.ahead.contains(r)).collect();
    let behind: Vec<usize> = order[..pos].iter().copied().filter(|r| failure.behind.contains(r)).collect();
    let mut next = Vec::with_capacity(order.len());
    for &r in &order[..pos] {
        if !behind.contains(&r) {
            next.push(r);
        }
    }
    next.extend(&ahead);
    next.push(failure.robot);
    next.extend(&behind);
    for &r in &order[pos + 1..] {
        if !ahead.contains(&r) {
            next.push(r);
        }
    }
    *order = next;
}

fn check_order(n: usize, order: &[usize]) -> Result<(), SolveError> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(SolveError::BadOrder);
    }
    for &r in order {
        if r >= n || std::mem::replace(&mut seen[r], true) {
            return Err(SolveError::BadOrder);
        }
    }
    Ok(())
}

/// Plans all robots in the given priority order. The resulting schedule
/// always passes [`validate_schedule`].
pub fn prioritized_plan(instance: &Instance, order: &[usize], config: &SolverConfig) -> Result<Schedule, SolveError> {
    config.validate()?;
    check_order(instance.robot_count(), order)?;
    let ctx = Context::new(instance)?;
    let mut horizon = ctx.initial_horizon(config.horizon_factor);
    let table = plan_in_order(&ctx, order, &vec![false; ctx.n()], config.objective, &mut horizon).map_err(|f| SolveError::NoPath {
        robot: f.robot,
        horizon,
    })?;
    let schedule = ctx.schedule(&table);
    ensure_feasible(instance, &schedule)?;
    Ok(schedule)
}

fn ensure_feasible(instance: &Instance, schedule: &Schedule) -> Result<ValidationReport, SolveError> {
    let report = validate_schedule(instance, schedule)?;
    match &report.first_violation {
        None => Ok(report),
        Some(v) => Err(SolveError::Internal(v.to_string())),
    }
}

/// Per-robot arrival and move counts of a planned solution.
#[derive(Debug, Clone)]
struct Score {
    arrival: Vec<u32>,
    moves: Vec<u32>,
}

impl Score {
    fn of(table: &ReservationTable<'_>) -> Score {
        let n = table.robot_count();
        let mut s = Score {
            arrival: vec![0; n],
            moves: vec![0; n],
        };
        for r in 0..n {
            s.set(r, table.path(r).unwrap());
        }
        s
    }

    fn set(&mut self, robot: usize, path: &[u32]) {
        self.arrival[robot] = (path.len() - 1) as u32;
        self.moves[robot] = path.windows(2).filter(|w| w[0] != w[1]).count() as u32;
    }

    fn makespan(&self) -> u32 {
        self.arrival.iter().copied().max().unwrap_or(0)
    }

    fn primary(&self, objective: Objective) -> u64 {
        match objective {
            Objective::Max => self.makespan() as u64,
            Objective::Sum => self.moves.iter().map(|&m| m as u64).sum(),
        }
    }

    /// Objective value plus a tie-breaker in `[0, 1)` that rewards earlier
    /// arrivals.
    fn energy(&self, objective: Objective) -> f64 {
        let n = self.arrival.len() as f64;
        let arrivals: f64 = self.arrival.iter().map(|&a| a as f64).sum();
        let bound = n * self.makespan() as f64 + 1.0;
        self.primary(objective) as f64 + arrivals / bound
    }
}

/// Prioritized planning followed by annealed k-replanning. Returns the best
/// schedule found; it is validated before being returned.
pub fn solve(instance: &Instance, config: &SolverConfig) -> Result<SolveOutcome, SolveError> {
    solve_with_observer(instance, config, |_| {})
}

pub fn solve_with_observer(
    instance: &Instance,
    config: &SolverConfig,
    mut observer: impl FnMut(&Snapshot),
) -> Result<SolveOutcome, SolveError> {
    config.validate()?;
    let started = Instant::now();
    let deadline = config.time_limit.map(|s| started + Duration::from_secs_f64(s));
    let expired = || deadline.is_some_and(|d| Instant::now() >= d);
    // Restarts after the first may use a quarter of the budget; the rest is
    // left to local search.
    let restart_deadline = config
        .time_limit
        .map(|s| started + Duration::from_secs_f64(RESTART_SHARE * s));
    let restarts_expired = || restart_deadline.is_some_and(|d| Instant::now() >= d);
    let ctx = Context::new(instance)?;
    let n = ctx.n();
    let objective = config.objective;
    let mut telemetry = Telemetry::default();

    if ctx.lb_makespan == 0 {
        let schedule = Schedule::empty(instance.name());
        let report = ensure_feasible(instance, &schedule)?;
        let snap = Snapshot {
            elapsed: started.elapsed().as_secs_f64(),
            objective: 0,
            phase: Phase::Restart(0),
        };
        observer(&snap);
        telemetry.snapshots.push(snap);
        telemetry.restarts_succeeded = 1;
        return Ok(SolveOutcome {
            schedule,
            report,
            telemetry,
        });
    }

    let h0 = ctx.initial_horizon(config.horizon_factor);
    let bump_limit = (4 * n).clamp(16, 1024);
    let attempts: Vec<Option<(u32, ReservationTable<'_>)>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut order: Vec<usize> = (0..n).collect();
            if r == 0 {
                order.sort_by_key(|&i| std::cmp::Reverse(ctx.lb[i]));
            } else {
                order.shuffle(&mut seed::stream(config.seed, r as u64));
            }
            let mut soft = vec![false; n];
            let mut walled = vec![0u32; n];
            for _ in 0..bump_limit {
                if r > 0 && restarts_expired() {
                    return None;
                }
                let mut horizon = h0;
                match plan_in_order(&ctx, &order, &soft, objective, &mut horizon) {
                    Ok(table) => return Some((r, table)),
                    Err(failure) => {
                        // Robots that wall each other in cannot be ordered
                        // apart; let the repeat offender push through.
                        if !failure.ahead.is_empty() {
                            walled[failure.robot] += 1;
                            if walled[failure.robot] >= 2 {
                                for &b in &failure.ahead {
                                    soft[b] = true;
                                }
                            }
                        }
                        reorder(&mut order, &failure);
                    }
                }
            }
            None
        })
        .collect();

    let mut best: Option<(f64, ReservationTable<'_>, Score)> = None;
    for (r, table) in attempts.into_iter().flatten() {
        telemetry.restarts_succeeded += 1;
        let score = Score::of(&table);
        let e = score.energy(objective);
        if best.as_ref().is_none_or(|(be, _, _)| e < *be) {
            let snap = Snapshot {
                elapsed: started.elapsed().as_secs_f64(),
                objective: score.primary(objective),
                phase: Phase::Restart(r),
            };
            if telemetry.snapshots.last().is_none_or(|s| s.objective > snap.objective) {
                observer(&snap);
                telemetry.snapshots.push(snap);
            }
            best = Some((e, table, score));
        }
    }
    let Some((_, mut table, mut score)) = best else {
        return Err(SolveError::NoFeasibleSchedule);
    };

    anneal(&ctx, config, &mut table, &mut score, &mut telemetry, &expired, started, &mut observer);

    let schedule = ctx.schedule(&table);
    let report = ensure_feasible(instance, &schedule)?;
    Ok(SolveOutcome {
        schedule,
        report,
        telemetry,
    })
}

#[allow(clippy::too_many_arguments)]
fn anneal<'c>(
    ctx: &'c Context<'_>,
    config: &SolverConfig,
    table: &mut ReservationTable<'c>,
    score: &mut Score,
    telemetry: &mut Telemetry,
    expired: &dyn Fn() -> bool,
    started: Instant,
    observer: &mut dyn FnMut(&Snapshot),
) {
    let n = ctx.n();
    let objective = config.objective;
    let mut rng: ChaCha8Rng = seed::stream(config.seed, u64::MAX);
    let k = config.k_replan.min(n);
    let mut temperature = config
        .anneal
        .initial_temperature
        .unwrap_or(0.1 * score.primary(objective) as f64);
    let h0 = ctx.initial_horizon(config.horizon_factor);
    let cap = ctx.horizon_cap().max(h0);

    let mut current = score.energy(objective);
    let mut best_energy = current;
    let mut best_paths: Vec<Vec<u32>> = (0..n).map(|r| table.path(r).unwrap().to_vec()).collect();
    let mut best_score = score.clone();

    // Reaching the lower bound proves optimality for the objective.
    let floor = match objective {
        Objective::Max => ctx.lb_makespan as u64,
        Objective::Sum => ctx.lb.iter().map(|&d| d as u64).sum(),
    };
    for it in 0..config.anneal.iterations {
        if expired() || best_score.primary(objective) <= floor {
            break;
        }
        telemetry.iterations += 1;
        let chosen = pick_robots(ctx, score, objective, k, &mut rng);
        let horizon = (score.makespan() + 8).max(h0).min(cap);

        let old: Vec<(usize, Vec<u32>)> = chosen.iter().map(|&r| (r, table.remove(r).unwrap())).collect();
        for &r in &chosen {
            table.pin(r, ctx.starts[r]);
        }
        let mut order = chosen.clone();
        order.shuffle(&mut rng);
        let mut ok = true;
        for &r in &order {
            table.unpin(ctx.starts[r]);
            match astar::plan(table, &ctx.query(r, horizon, objective)) {
                Some(path) => table.commit(r, path),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            telemetry.replan_failures += 1;
            restore(ctx, table, &chosen, &old);
            continue;
        }

        let mut candidate = score.clone();
        for &r in &chosen {
            candidate.set(r, table.path(r).unwrap());
        }
        let e = candidate.energy(objective);
        let delta = e - current;
        let accept = delta <= 0.0 || (temperature > 0.0 && rng.random::<f64>() < (-delta / temperature).exp());
        if !accept {
            restore(ctx, table, &chosen, &old);
            continue;
        }
        telemetry.accepted += 1;
        temperature *= config.anneal.cooling;
        current = e;
        *score = candidate;
        if e < best_energy {
            best_energy = e;
            for (r, best) in best_paths.iter_mut().enumerate() {
                let path = table.path(r).unwrap();
                if best.as_slice() != path {
                    *best = path.to_vec();
                }
            }
            best_score = score.clone();
            let value = score.primary(objective);
            if telemetry.snapshots.last().is_none_or(|s| value < s.objective) {
                let snap = Snapshot {
                    elapsed: started.elapsed().as_secs_f64(),
                    objective: value,
                    phase: Phase::Anneal(it),
                };
                observer(&snap);
                telemetry.snapshots.push(snap);
            }
        }
    }

    // Reinstate the best solution seen.
    for r in 0..n {
        if table.path(r).unwrap() != best_paths[r].as_slice() {
            table.remove(r);
        }
    }
    for (r, path) in best_paths.into_iter().enumerate() {
        if table.path(r).is_none() {
            table.commit(r, path);
        }
    }
    *score = best_score;
}

fn restore<'c>(ctx: &'c Context<'_>, table: &mut ReservationTable<'c>, chosen: &[usize], old: &[(usize, Vec<u32>)]) {
    for &r in chosen {
        table.remove(r);
        table.unpin(ctx.starts[r]);
    }
    for (r, path) in old {
        table.commit(*r, path.clone());
    }
}

/// Weighted sample of `k` distinct robots. For MAX, robots arriving at the
/// makespan weigh 4; for SUM, weight grows with the robot's detour.
fn pick_robots(ctx: &Context<'_>, score: &Score, objective: Objective, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = ctx.n();
    let makespan = score.makespan();
    let mut weights: Vec<f64> = (0..n)
        .map(|r| match objective {
            Objective::Max => {
                if score.arrival[r] == makespan {
                    4.0
                } else {
                    1.0
                }
            }
            Objective::Sum => 1.0 + score.moves[r].saturating_sub(ctx.lb[r]) as f64,
        })
        .collect();
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = weights.iter().sum();
        let mut x = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (r, &w) in weights.iter().enumerate() {
            if w > 0.0 && x < w {
                pick = r;
                break;
            }
            x -= w;
        }
        while weights[pick] == 0.0 {
            pick -= 1;
        }
        weights[pick] = 0.0;
        chosen.push(pick);
    }
    chosen
}
