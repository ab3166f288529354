//! Feasibility checking of steps and schedules, objective evaluation, lower
//! bounds and stretch factors.
//!
//! A step is legal iff
//!
//! * **R1** no robot ends on an obstacle,
//! * **R2** no two robots end on the same pixel,
//! * **R3** a robot entering a pixel that is occupied at the start of the
//!   step does so only while the occupant leaves in the same direction.
//!
//! R2 and R3 together rule out swaps and perpendicular follow-ins, which is
//! exactly what keeps moving unit squares interior-disjoint. Robots sliding
//! along each other in contact, such as an eastbound train, are legal.

use std::fmt;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::grid::{GridWindow, UNREACHABLE};
use crate::model::{apply_step, Configuration, Instance, ModelError, Objectives, Schedule, Step};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValidateError {
    #[error("configuration holds {got} robots, instance has {expected}")]
    ConfigWidth { expected: usize, got: usize },
    #[error("step {step} holds {got} moves, instance has {expected} robots")]
    StepWidth {
        step: usize,
        expected: usize,
        got: usize,
    },
    #[error("configuration places robot {robot} on an obstacle")]
    ConfigOnObstacle { robot: usize },
    #[error("configuration places robot {robot} on an occupied pixel")]
    ConfigCollision { robot: usize },
    #[error("target of robot {robot} is unreachable from its start")]
    Unreachable { robot: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Motion rules, ordered by diagnostic priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    /// R1: destination is an obstacle.
    Obstacle,
    /// R2: two robots share a destination.
    Collision,
    /// R3: entering an occupied pixel whose occupant does not move along.
    FollowIn,
    /// All steps legal, but some robot is not on its target at the end.
    NotAtTarget,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::Obstacle => "R1",
            Rule::Collision => "R2",
            Rule::FollowIn => "R3",
            Rule::NotAtTarget => "TARGET",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Rule::Obstacle => "robot moves onto an obstacle",
            Rule::Collision => "robots end on the same pixel",
            Rule::FollowIn => "robot enters a pixel whose occupant does not leave in the same direction",
            Rule::NotAtTarget => "robot is not on its target after the last step",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// 0-based step index; equals the step count for [`Rule::NotAtTarget`].
    pub step: usize,
    pub rule: Rule,
    /// Involved robots, ascending.
    pub robots: Vec<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step {}: {} ({}) robots {:?}",
            self.step,
            self.rule.id(),
            self.rule.description(),
            self.robots
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepVerdict {
    Legal,
    Violation { rule: Rule, robots: Vec<usize> },
}

impl StepVerdict {
    pub fn is_legal(&self) -> bool {
        matches!(self, StepVerdict::Legal)
    }
}

/// Checks one simultaneous step. When several rules are broken, the verdict
/// names the violation with the lowest involved robot index, then the
/// lowest rule.
pub fn check_step(
    instance: &Instance,
    config: &Configuration,
    step: &Step,
) -> Result<StepVerdict, ValidateError> {
    let n = instance.robot_count();
    if config.len() != n {
        return Err(ValidateError::ConfigWidth {
            expected: n,
            got: config.len(),
        });
    }
    if step.moves.len() != n {
        return Err(ValidateError::StepWidth {
            step: 0,
            expected: n,
            got: step.moves.len(),
        });
    }
    let mut occupant = FxHashMap::with_capacity_and_hasher(n, Default::default());
    for (i, &p) in config.positions.iter().enumerate() {
        if instance.is_obstacle(p) {
            return Err(ValidateError::ConfigOnObstacle { robot: i });
        }
        if occupant.insert(p, i).is_some() {
            return Err(ValidateError::ConfigCollision { robot: i });
        }
    }
    Ok(check_step_unchecked(instance, config, step, &occupant))
}

fn check_step_unchecked(
    instance: &Instance,
    config: &Configuration,
    step: &Step,
    occupant: &FxHashMap<crate::model::Pixel, usize>,
) -> StepVerdict {
    let n = config.len();
    let mut arrivals: FxHashMap<crate::model::Pixel, Vec<usize>> =
        FxHashMap::with_capacity_and_hasher(n, Default::default());
    let destinations: Vec<_> = config
        .positions
        .iter()
        .zip(&step.moves)
        .enumerate()
        .map(|(i, (&p, &d))| {
            let q = p + d;
            arrivals.entry(q).or_default().push(i);
            q
        })
        .collect();

    let mut best: Option<(usize, Rule, Vec<usize>)> = None;
    let mut offer = |rule: Rule, mut robots: Vec<usize>| {
        robots.sort_unstable();
        let key = (robots[0], rule);
        if best.as_ref().is_none_or(|(r0, r, _)| key < (*r0, *r)) {
            best = Some((robots[0], rule, robots));
        }
    };

    for (i, (&q, &d)) in destinations.iter().zip(&step.moves).enumerate() {
        if instance.is_obstacle(q) {
            offer(Rule::Obstacle, vec![i]);
        }
        let sharing = &arrivals[&q];
        if sharing.len() > 1 {
            let other = sharing.iter().copied().find(|&j| j != i).unwrap();
            offer(Rule::Collision, vec![i, other]);
        }
        if !d.is_wait() {
            if let Some(&j) = occupant.get(&q) {
                if step.moves[j] != d {
                    offer(Rule::FollowIn, vec![i, j]);
                }
            }
        }
    }
    match best {
        None => StepVerdict::Legal,
        Some((_, rule, robots)) => StepVerdict::Violation { rule, robots },
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBounds {
    /// Largest single-robot shortest-path distance.
    pub makespan: u64,
    /// Sum of single-robot shortest-path distances.
    pub total: u64,
    pub per_robot: Vec<u32>,
}

/// Single-robot shortest obstacle-avoiding path lengths, ignoring all other
/// robots, searched inside [`search_window`](crate::grid::search_window).
pub fn lower_bounds(instance: &Instance) -> Result<LowerBounds, ValidateError> {
    lower_bounds_in(instance, &GridWindow::for_instance(instance))
}

/// [`lower_bounds`] on an explicit window. Used to cross-check the margin.
pub fn lower_bounds_in(instance: &Instance, window: &GridWindow) -> Result<LowerBounds, ValidateError> {
    let mut per_robot = Vec::with_capacity(instance.robot_count());
    for (i, (&s, &t)) in instance.starts().iter().zip(instance.targets()).enumerate() {
        if s == t {
            per_robot.push(0);
            continue;
        }
        let (Some(si), Some(ti)) = (window.index(s), window.index(t)) else {
            return Err(ValidateError::Unreachable { robot: i });
        };
        let dist = window.bfs_distances(ti);
        match dist[si as usize] {
            UNREACHABLE => return Err(ValidateError::Unreachable { robot: i }),
            d => per_robot.push(d),
        }
    }
    Ok(LowerBounds {
        makespan: per_robot.iter().copied().max().unwrap_or(0) as u64,
        total: per_robot.iter().map(|&d| d as u64).sum(),
        per_robot,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub feasible: bool,
    pub first_violation: Option<Violation>,
    pub makespan: u64,
    pub total_distance: u64,
    pub lb_makespan: u64,
    pub lb_total: u64,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn objectives(&self) -> Objectives {
        Objectives {
            makespan: self.makespan,
            total_distance: self.total_distance,
        }
    }

    /// `makespan / lb_makespan`, defined when the bound is positive.
    pub fn stretch_max(&self) -> Option<f64> {
        (self.lb_makespan > 0).then(|| self.makespan as f64 / self.lb_makespan as f64)
    }

    /// `total_distance / lb_total`, defined when the bound is positive.
    pub fn stretch_sum(&self) -> Option<f64> {
        (self.lb_total > 0).then(|| self.total_distance as f64 / self.lb_total as f64)
    }
}

/// Replays `schedule` from the start configuration. Feasible iff every step
/// is legal and the robots end on their targets. Objectives are reported for
/// infeasible schedules as well.
pub fn validate_schedule(instance: &Instance, schedule: &Schedule) -> Result<ValidationReport, ValidateError> {
    let n = instance.robot_count();
    if let Some((step, s)) = schedule.steps.iter().enumerate().find(|(_, s)| s.moves.len() != n) {
        return Err(ValidateError::StepWidth {
            step,
            expected: n,
            got: s.moves.len(),
        });
    }
    let bounds = lower_bounds(instance)?;
    let mut warnings = Vec::new();
    if schedule.instance_name != instance.name() {
        let msg = format!(
            "schedule names instance `{}` but is validated against `{}`",
            schedule.instance_name,
            instance.name()
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mut config = instance.start_configuration();
    let mut first_violation = None;
    let mut occupant = FxHashMap::with_capacity_and_hasher(n, Default::default());
    for (k, step) in schedule.steps.iter().enumerate() {
        occupant.clear();
        occupant.extend(config.positions.iter().enumerate().map(|(i, &p)| (p, i)));
        if let StepVerdict::Violation { rule, robots } =
            check_step_unchecked(instance, &config, step, &occupant)
        {
            first_violation = Some(Violation { step: k, rule, robots });
            break;
        }
        config = apply_step(&config, step)?;
    }
    if first_violation.is_none() {
        let off: Vec<usize> = config
            .positions
            .iter()
            .zip(instance.targets())
            .enumerate()
            .filter(|(_, (p, t))| p != t)
            .map(|(i, _)| i)
            .collect();
        if !off.is_empty() {
            first_violation = Some(Violation {
                step: schedule.steps.len(),
                rule: Rule::NotAtTarget,
                robots: off,
            });
        }
    }

    let objectives = schedule.objectives();
    Ok(ValidationReport {
        feasible: first_violation.is_none(),
        first_violation,
        makespan: objectives.makespan,
        total_distance: objectives.total_distance,
        lb_makespan: bounds.makespan,
        lb_total: bounds.total,
        warnings,
    })
}
