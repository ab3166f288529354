//! Core domain types: pixels, directions, instances, configurations and
//! schedules.
//!
//! The workspace is the whole integer grid minus the obstacle pixels of an
//! instance. Robots are labeled: robot `i` starts on `starts[i]` and has to
//! end on `targets[i]`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("instance has no robots")]
    NoRobots,
    #[error("{starts} starts but {targets} targets")]
    LengthMismatch { starts: usize, targets: usize },
    #[error("robots {first} and {second} share the start pixel {pixel}")]
    DuplicateStart {
        first: usize,
        second: usize,
        pixel: Pixel,
    },
    #[error("robots {first} and {second} share the target pixel {pixel}")]
    DuplicateTarget {
        first: usize,
        second: usize,
        pixel: Pixel,
    },
    #[error("start of robot {robot} lies on obstacle {pixel}")]
    StartOnObstacle { robot: usize, pixel: Pixel },
    #[error("target of robot {robot} lies on obstacle {pixel}")]
    TargetOnObstacle { robot: usize, pixel: Pixel },
    #[error("step has {moves} moves for {robots} robots")]
    StepWidth { moves: usize, robots: usize },
    #[error("unknown direction `{0}`")]
    UnknownDirection(String),
    #[error("unknown objective `{0}`")]
    UnknownObjective(String),
}

/// A unit square of the integer grid, identified by its lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pixel {
    pub x: i32,
    pub y: i32,
}

impl Pixel {
    #[inline]
    pub const fn new(x: i32, y: i32) -> Self {
        Pixel { x, y }
    }

    #[inline]
    pub fn manhattan(self, other: Pixel) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    /// The direction leading from `self` to the 4-neighbor (or identical)
    /// pixel `to`, if there is one.
    pub fn direction_to(self, to: Pixel) -> Option<Direction> {
        Direction::ALL
            .into_iter()
            .find(|d| self + *d == to)
    }
}

impl From<(i32, i32)> for Pixel {
    fn from((x, y): (i32, i32)) -> Self {
        Pixel { x, y }
    }
}

impl fmt::Display for Pixel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl Add<Direction> for Pixel {
    type Output = Pixel;

    #[inline]
    fn add(self, d: Direction) -> Pixel {
        let (dx, dy) = d.delta();
        Pixel::new(self.x + dx, self.y + dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Direction {
    North,
    South,
    East,
    West,
    #[default]
    Wait,
}

impl Direction {
    pub const ALL: [Direction; 5] = [
        Direction::North,
        Direction::South,
        Direction::East,
        Direction::West,
        Direction::Wait,
    ];

    pub const MOVES: [Direction; 4] = [
        Direction::North,
        Direction::South,
        Direction::East,
        Direction::West,
    ];

    #[inline]
    pub const fn delta(self) -> (i32, i32) {
        match self {
            Direction::North => (0, 1),
            Direction::South => (0, -1),
            Direction::East => (1, 0),
            Direction::West => (-1, 0),
            Direction::Wait => (0, 0),
        }
    }

    #[inline]
    pub const fn opposite(self) -> Direction {
        match self {
            Direction::North => Direction::South,
            Direction::South => Direction::North,
            Direction::East => Direction::West,
            Direction::West => Direction::East,
            Direction::Wait => Direction::Wait,
        }
    }

    #[inline]
    pub const fn is_wait(self) -> bool {
        matches!(self, Direction::Wait)
    }

    /// Single-letter code used by the wire format. `Wait` has no letter there
    /// (it is encoded by omission) but prints as `-` for diagnostics.
    pub const fn letter(self) -> char {
        match self {
            Direction::North => 'N',
            Direction::South => 'S',
            Direction::East => 'E',
            Direction::West => 'W',
            Direction::Wait => '-',
        }
    }

    pub fn from_letter(c: char) -> Option<Direction> {
        match c {
            'N' => Some(Direction::North),
            'S' => Some(Direction::South),
            'E' => Some(Direction::East),
            'W' => Some(Direction::West),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Direction {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => {
                Direction::from_letter(c).ok_or_else(|| ModelError::UnknownDirection(s.to_string()))
            }
            _ => Err(ModelError::UnknownDirection(s.to_string())),
        }
    }
}

/// The two contest objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Makespan.
    #[default]
    Max,
    /// Total distance.
    Sum,
}

impl Objective {
    pub fn value(self, objectives: Objectives) -> u64 {
        match self {
            Objective::Max => objectives.makespan,
            Objective::Sum => objectives.total_distance,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::Max => "max",
            Objective::Sum => "sum",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "max" | "makespan" => Ok(Objective::Max),
            "sum" | "distance" => Ok(Objective::Sum),
            _ => Err(ModelError::UnknownObjective(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    name: String,
    starts: Vec<Pixel>,
    targets: Vec<Pixel>,
    obstacles: BTreeSet<Pixel>,
}

impl Instance {
    pub fn new(
        name: impl Into<String>,
        starts: Vec<Pixel>,
        targets: Vec<Pixel>,
        obstacles: impl IntoIterator<Item = Pixel>,
    ) -> Result<Self, ModelError> {
        let obstacles: BTreeSet<Pixel> = obstacles.into_iter().collect();
        if starts.len() != targets.len() {
            return Err(ModelError::LengthMismatch {
                starts: starts.len(),
                targets: targets.len(),
            });
        }
        if starts.is_empty() {
            return Err(ModelError::NoRobots);
        }
        check_distinct(&starts).map_err(|(first, second, pixel)| ModelError::DuplicateStart {
            first,
            second,
            pixel,
        })?;
        check_distinct(&targets).map_err(|(first, second, pixel)| {
            ModelError::DuplicateTarget {
                first,
                second,
                pixel,
            }
        })?;
        if let Some((robot, &pixel)) = starts.iter().enumerate().find(|(_, p)| obstacles.contains(p)) {
            return Err(ModelError::StartOnObstacle { robot, pixel });
        }
        if let Some((robot, &pixel)) = targets.iter().enumerate().find(|(_, p)| obstacles.contains(p)) {
            return Err(ModelError::TargetOnObstacle { robot, pixel });
        }
        Ok(Instance {
            name: name.into(),
            starts,
            targets,
            obstacles,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    #[inline]
    pub fn robot_count(&self) -> usize {
        self.starts.len()
    }

    pub fn starts(&self) -> &[Pixel] {
        &self.starts
    }

    pub fn targets(&self) -> &[Pixel] {
        &self.targets
    }

    pub fn obstacles(&self) -> &BTreeSet<Pixel> {
        &self.obstacles
    }

    #[inline]
    pub fn is_obstacle(&self, p: Pixel) -> bool {
        self.obstacles.contains(&p)
    }

    pub fn start_configuration(&self) -> Configuration {
        Configuration::new(self.starts.clone())
    }

    pub fn target_configuration(&self) -> Configuration {
        Configuration::new(self.targets.clone())
    }

    /// The same instance with the roles of starts and targets exchanged.
    pub fn reversed(&self) -> Instance {
        Instance {
            name: self.name.clone(),
            starts: self.targets.clone(),
            targets: self.starts.clone(),
            obstacles: self.obstacles.clone(),
        }
    }

    /// Smallest rectangle containing every start, target and obstacle.
    pub fn bounding_box(&self) -> Rect {
        Rect::enclosing(
            self.starts
                .iter()
                .chain(self.targets.iter())
                .chain(self.obstacles.iter())
                .copied(),
        )
        .expect("instance has at least one robot")
    }
}

fn check_distinct(pixels: &[Pixel]) -> Result<(), (usize, usize, Pixel)> {
    let mut seen = rustc_hash::FxHashMap::default();
    for (i, &p) in pixels.iter().enumerate() {
        if let Some(&first) = seen.get(&p) {
            return Err((first, i, p));
        }
        seen.insert(p, i);
    }
    Ok(())
}

/// Inclusive axis-aligned rectangle of pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub min_x: i32,
    pub min_y: i32,
    pub max_x: i32,
    pub max_y: i32,
}

impl Rect {
    pub const fn new(min_x: i32, min_y: i32, max_x: i32, max_y: i32) -> Self {
        Rect {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    /// `width × height` rectangle with its lower-left pixel at the origin.
    pub const fn with_size(width: u32, height: u32) -> Self {
        Rect::new(0, 0, width as i32 - 1, height as i32 - 1)
    }

    pub fn enclosing(pixels: impl IntoIterator<Item = Pixel>) -> Option<Rect> {
        let mut iter = pixels.into_iter();
        let first = iter.next()?;
        let mut r = Rect::new(first.x, first.y, first.x, first.y);
        for p in iter {
            r.min_x = r.min_x.min(p.x);
            r.min_y = r.min_y.min(p.y);
            r.max_x = r.max_x.max(p.x);
            r.max_y = r.max_y.max(p.y);
        }
        Some(r)
    }

    #[inline]
    pub fn width(&self) -> u32 {
        (self.max_x - self.min_x + 1).max(0) as u32
    }

    #[inline]
    pub fn height(&self) -> u32 {
        (self.max_y - self.min_y + 1).max(0) as u32
    }

    #[inline]
    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    #[inline]
    pub fn contains(&self, p: Pixel) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn inflate(&self, margin: u32) -> Rect {
        let m = margin as i32;
        Rect::new(self.min_x - m, self.min_y - m, self.max_x + m, self.max_y + m)
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let r = Rect::new(
            self.min_x.max(other.min_x),
            self.min_y.max(other.min_y),
            self.max_x.min(other.max_x),
            self.max_y.min(other.max_y),
        );
        (r.min_x <= r.max_x && r.min_y <= r.max_y).then_some(r)
    }

    /// Row-major iteration, bottom row first.
    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        (self.min_y..=self.max_y)
            .flat_map(move |y| (self.min_x..=self.max_x).map(move |x| Pixel::new(x, y)))
    }
}

/// Robot positions at an integer time; index `i` is robot `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub positions: Vec<Pixel>,
}

impl Configuration {
    pub fn new(positions: Vec<Pixel>) -> Self {
        Configuration { positions }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Index of the first robot sharing a pixel with an earlier one.
    pub fn first_duplicate(&self) -> Option<usize> {
        let mut seen = HashSet::with_capacity(self.positions.len());
        self.positions.iter().position(|p| !seen.insert(*p))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub moves: Vec<Direction>,
}

impl Step {
    pub fn new(moves: Vec<Direction>) -> Self {
        Step { moves }
    }

    pub fn wait(n: usize) -> Self {
        Step {
            moves: vec![Direction::Wait; n],
        }
    }

    pub fn is_all_wait(&self) -> bool {
        self.moves.iter().all(|d| d.is_wait())
    }

    pub fn move_count(&self) -> usize {
        self.moves.iter().filter(|d| !d.is_wait()).count()
    }

    pub fn reversed(&self) -> Step {
        Step {
            moves: self.moves.iter().map(|d| d.opposite()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Objectives {
    pub makespan: u64,
    pub total_distance: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schedule {
    pub instance_name: String,
    pub steps: Vec<Step>,
}

impl Schedule {
    pub fn new(instance_name: impl Into<String>, steps: Vec<Step>) -> Self {
        Schedule {
            instance_name: instance_name.into(),
            steps,
        }
    }

    pub fn empty(instance_name: impl Into<String>) -> Self {
        Schedule::new(instance_name, Vec::new())
    }

    /// Builds a schedule from per-robot position sequences. A sequence may
    /// end early; the robot waits at its last pixel afterwards. Consecutive
    /// positions must be equal or 4-adjacent.
    pub fn from_paths(instance_name: impl Into<String>, paths: &[Vec<Pixel>]) -> Option<Self> {
        let len = paths.iter().map(|p| p.len().saturating_sub(1)).max().unwrap_or(0);
        let mut steps = Vec::with_capacity(len);
        for t in 0..len {
            let mut moves = Vec::with_capacity(paths.len());
            for path in paths {
                let d = if t + 1 < path.len() {
                    path[t].direction_to(path[t + 1])?
                } else {
                    Direction::Wait
                };
                moves.push(d);
            }
            steps.push(Step { moves });
        }
        let mut schedule = Schedule::new(instance_name, steps);
        schedule.trim();
        Some(schedule)
    }

    /// Drops trailing all-WAIT steps.
    pub fn trim(&mut self) {
        while self.steps.last().is_some_and(Step::is_all_wait) {
            self.steps.pop();
        }
    }

    /// Reverses step order and negates every move; together with
    /// [`Instance::reversed`] this maps a feasible schedule to a feasible one.
    pub fn reversed(&self) -> Schedule {
        Schedule {
            instance_name: self.instance_name.clone(),
            steps: self.steps.iter().rev().map(Step::reversed).collect(),
        }
    }

    pub fn objectives(&self) -> Objectives {
        schedule_objectives(self)
    }
}

/// Translates each robot by its move. No legality checking happens here.
pub fn apply_step(config: &Configuration, step: &Step) -> Result<Configuration, ModelError> {
    if config.len() != step.moves.len() {
        return Err(ModelError::StepWidth {
            moves: step.moves.len(),
            robots: config.len(),
        });
    }
    Ok(Configuration::new(
        config
            .positions
            .iter()
            .zip(&step.moves)
            .map(|(&p, &d)| p + d)
            .collect(),
    ))
}

/// Makespan is the 1-based index of the last step with any motion; total
/// distance counts non-WAIT moves.
pub fn schedule_objectives(schedule: &Schedule) -> Objectives {
    let makespan = schedule
        .steps
        .iter()
        .rposition(|s| !s.is_all_wait())
        .map_or(0, |i| i as u64 + 1);
    let total_distance = schedule.steps.iter().map(|s| s.move_count() as u64).sum();
    Objectives {
        makespan,
        total_distance,
    }
}
