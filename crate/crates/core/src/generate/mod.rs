//! Randomized benchmark instances.
//!
//! The pipeline for one instance:
//!
//! 1. place `obstacle_count` rectangles with truncated-normal side lengths,
//! 2. turn every map pixel cut off from the exterior into an obstacle,
//! 3. place robot clusters (a start window and a target window per cluster),
//! 4. fill up to `round(density × free_area)` robots from the start and
//!    target distributions.
//!
//! Because the free space is connected and unbounded after step 2, every
//! generated instance is solvable.

mod batch;
mod select;
mod weights;

use std::collections::{BTreeSet, VecDeque};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::model::{Instance, ModelError, Pixel, Rect};
use crate::seed;

pub use batch::{generate_batch, GridConfig};
pub use select::{feature_vector, normalized_points, select_diverse, select_diverse_weighted, FEATURE_NAMES};
pub use weights::WeightMap;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("requested {requested} positions but only {available} are available")]
    SupportExhausted { requested: usize, available: usize },
    #[error("could not place a cluster of {size} robots")]
    ClusterPlacement { size: usize },
    #[error("map leaves room for no robot at this density")]
    NoRobots,
    #[error("generation failed for seed {seed} after {attempts} attempts: {last}")]
    GenerationFailed {
        seed: u64,
        attempts: u32,
        last: Box<GenerateError>,
    },
    #[error("cannot select {k} of {available} candidates")]
    SelectTooMany { k: usize, available: usize },
    #[error("no candidates to select from")]
    NoCandidates,
    #[error("weight map: {0}")]
    WeightMap(String),
    #[error("generator config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Where robot positions are drawn from.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Uniform,
    Weighted(WeightMap),
}

impl Distribution {
    #[inline]
    fn weight(&self, bounds: &Rect, p: Pixel) -> f64 {
        match self {
            Distribution::Uniform => 1.0,
            Distribution::Weighted(map) => map.weight_at(bounds, p),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Distribution::Uniform => "uniform".into(),
            Distribution::Weighted(m) => format!("weights:{}", m.source.as_deref().unwrap_or("inline")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub map_width: u32,
    pub map_height: u32,
    /// Fraction of free map pixels occupied by robots, in `(0, 1]`.
    pub density: f64,
    pub start_distribution: Distribution,
    pub target_distribution: Distribution,
    pub obstacle_count: u32,
    /// Per-axis side length, truncated to `[1, map dimension]`.
    pub obstacle_size_mean: f64,
    pub obstacle_size_stddev: f64,
    pub cluster_count: u32,
    /// Robots per cluster, truncated to `[1, n]`.
    pub cluster_size_mean: f64,
    pub cluster_size_stddev: f64,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            map_width: 20,
            map_height: 20,
            density: 0.1,
            start_distribution: Distribution::Uniform,
            target_distribution: Distribution::Uniform,
            obstacle_count: 0,
            obstacle_size_mean: 3.0,
            obstacle_size_stddev: 1.0,
            cluster_count: 0,
            cluster_size_mean: 4.0,
            cluster_size_stddev: 1.0,
            seed: 0,
        }
    }
}

impl GeneratorParams {
    pub fn map(&self) -> Rect {
        Rect::with_size(self.map_width, self.map_height)
    }

    pub fn validate(&self) -> Result<(), GenerateError> {
        let bad = |m: &str| Err(GenerateError::InvalidParams(m.to_string()));
        if self.map_width == 0 || self.map_height == 0 {
            return bad("map dimensions must be positive");
        }
        if self.map_width > 1 << 15 || self.map_height > 1 << 15 {
            return bad("map dimensions are limited to 32768");
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return bad("density must lie in (0, 1]");
        }
        for (name, v) in [
            ("obstacle_size_mean", self.obstacle_size_mean),
            ("cluster_size_mean", self.cluster_size_mean),
        ] {
            if !v.is_finite() {
                return Err(GenerateError::InvalidParams(format!("{name} must be finite")));
            }
        }
        for (name, v) in [
            ("obstacle_size_stddev", self.obstacle_size_stddev),
            ("cluster_size_stddev", self.cluster_size_stddev),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(GenerateError::InvalidParams(format!("{name} must be non-negative")));
            }
        }
        Ok(())
    }
}

/// Generator bookkeeping kept alongside an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub map: Rect,
    pub n_clusters: u32,
    pub n_clustered_robots: u32,
    /// Window growths over all clusters.
    pub cluster_retries: u32,
    /// 0 when the first random stream succeeded.
    pub reseeds: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub instance: Instance,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceFeatures {
    pub n_robots: u32,
    pub density: f64,
    pub n_clusters: u32,
    pub n_clustered_robots: u32,
    pub volume: u64,
    pub free_area: u64,
    /// Cluster fields are unknown (reported as 0) for instances that did not
    /// come from this generator.
    pub external: bool,
}

/// Draws from `N(mean, stddev)` until the value lies in `[lo, hi]`; after 64
/// misses the last draw is clamped.
pub fn truncated_normal(rng: &mut impl Rng, mean: f64, stddev: f64, lo: f64, hi: f64) -> f64 {
    if stddev == 0.0 {
        return mean.clamp(lo, hi);
    }
    let normal = Normal::new(mean, stddev).expect("stddev validated");
    let mut x = mean;
    for _ in 0..64 {
        x = normal.sample(rng);
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
    x.clamp(lo, hi)
}

fn truncated_normal_int(rng: &mut impl Rng, mean: f64, stddev: f64, lo: u32, hi: u32) -> u32 {
    let x = truncated_normal(rng, mean, stddev, lo as f64, hi as f64);
    (x.round() as u32).clamp(lo, hi)
}

/// Pixels of the `width × height` rectangle with lower-left pixel `anchor`,
/// clipped to `map`.
pub fn rectangle_pixels(anchor: Pixel, width: u32, height: u32, map: &Rect) -> Vec<Pixel> {
    let r = Rect::new(
        anchor.x,
        anchor.y,
        anchor.x + width as i32 - 1,
        anchor.y + height as i32 - 1,
    );
    r.intersect(map).map(|c| c.pixels().collect()).unwrap_or_default()
}

/// Random rectangles followed by [`fill_enclosed`].
pub fn place_obstacles(params: &GeneratorParams, rng: &mut impl Rng) -> BTreeSet<Pixel> {
    fill_enclosed(&place_rectangles(params, rng), &params.map())
}

/// Union of `obstacle_count` random rectangles, clipped to the map.
pub fn place_rectangles(params: &GeneratorParams, rng: &mut impl Rng) -> BTreeSet<Pixel> {
    let map = params.map();
    let mut obstacles = BTreeSet::new();
    for _ in 0..params.obstacle_count {
        let w = truncated_normal_int(rng, params.obstacle_size_mean, params.obstacle_size_stddev, 1, params.map_width);
        let h = truncated_normal_int(rng, params.obstacle_size_mean, params.obstacle_size_stddev, 1, params.map_height);
        let x = rng.random_range(0..params.map_width) as i32;
        let y = rng.random_range(0..params.map_height) as i32;
        obstacles.extend(rectangle_pixels(Pixel::new(x, y), w, h, &map));
    }
    obstacles
}

/// Converts every free map pixel that cannot reach the map exterior through
/// free pixels into an obstacle.
pub fn fill_enclosed(obstacles: &BTreeSet<Pixel>, map: &Rect) -> BTreeSet<Pixel> {
    let region = Rect::enclosing(obstacles.iter().copied().chain([
        Pixel::new(map.min_x, map.min_y),
        Pixel::new(map.max_x, map.max_y),
    ]))
    .unwrap()
    .inflate(1);
    let grid = crate::grid::GridWindow::new(region, obstacles.iter());
    let corner = grid.index(Pixel::new(region.min_x, region.min_y)).unwrap();
    let mut seen = vec![false; grid.len()];
    let mut queue = VecDeque::from([corner]);
    seen[corner as usize] = true;
    while let Some(c) = queue.pop_front() {
        for d in crate::model::Direction::MOVES {
            if let Some(nc) = grid.step(c, d) {
                if !grid.is_blocked(nc) && !seen[nc as usize] {
                    seen[nc as usize] = true;
                    queue.push_back(nc);
                }
            }
        }
    }
    let mut filled = obstacles.clone();
    for p in map.pixels() {
        let i = grid.index(p).unwrap();
        if !grid.is_blocked(i) && !seen[i as usize] {
            filled.insert(p);
        }
    }
    filled
}

/// `count` distinct pixels of `bounds` outside `forbidden`, drawn
/// proportionally to the distribution's weights (zero weights excluded).
///
/// Duplicates are rejected; after `16 × count + 64` rejections the drawn
/// pixels are removed from the support and sampling continues exactly.
pub fn sample_positions(
    count: usize,
    distribution: &Distribution,
    forbidden: &FxHashSet<Pixel>,
    bounds: &Rect,
    rng: &mut impl Rng,
) -> Result<Vec<Pixel>, GenerateError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let (support, weights): (Vec<Pixel>, Vec<f64>) = bounds
        .pixels()
        .filter(|p| !forbidden.contains(p))
        .map(|p| (p, distribution.weight(bounds, p)))
        .filter(|&(_, w)| w > 0.0)
        .unzip();
    if support.len() < count {
        return Err(GenerateError::SupportExhausted {
            requested: count,
            available: support.len(),
        });
    }
    let mut index = WeightedIndex::new(&weights).map_err(|e| GenerateError::WeightMap(e.to_string()))?;
    let mut taken = vec![false; support.len()];
    let mut picked = Vec::with_capacity(count);
    let mut rejections = 0usize;
    let cap = 16 * count + 64;
    let mut exact = false;
    while picked.len() < count {
        let i = index.sample(rng);
        if taken[i] {
            rejections += 1;
            if rejections >= cap && !exact {
                let zeros: Vec<(usize, &f64)> = picked_indices(&taken).map(|j| (j, &0.0)).collect();
                index
                    .update_weights(&zeros)
                    .map_err(|e| GenerateError::WeightMap(e.to_string()))?;
                exact = true;
            }
            continue;
        }
        taken[i] = true;
        picked.push(support[i]);
        if exact && picked.len() < count {
            index
                .update_weights(&[(i, &0.0)])
                .map_err(|e| GenerateError::WeightMap(e.to_string()))?;
        }
    }
    Ok(picked)
}

fn picked_indices(taken: &[bool]) -> impl Iterator<Item = usize> + '_ {
    taken.iter().enumerate().filter(|(_, &t)| t).map(|(j, _)| j)
}

/// Obstacles and robots placed so far.
#[derive(Debug, Clone, Default)]
pub struct PartialInstance {
    pub map: Option<Rect>,
    pub obstacles: BTreeSet<Pixel>,
    pub starts: Vec<Pixel>,
    pub targets: Vec<Pixel>,
}

impl PartialInstance {
    fn forbidden_starts(&self) -> FxHashSet<Pixel> {
        self.obstacles.iter().chain(&self.starts).copied().collect()
    }

    fn forbidden_targets(&self) -> FxHashSet<Pixel> {
        self.obstacles.iter().chain(&self.targets).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterRecord {
    pub size: usize,
    pub start_anchor: Pixel,
    pub target_anchor: Pixel,
    pub retries: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterPlacement {
    pub starts: Vec<Pixel>,
    pub targets: Vec<Pixel>,
    pub clusters: Vec<ClusterRecord>,
}

const WINDOW_RETRIES: u32 = 6;
const ANCHOR_RESAMPLES: u32 = 8;

/// Square window of side `side` centred on `anchor`; even sides extend one
/// pixel further towards negative coordinates.
pub fn cluster_window(anchor: Pixel, side: u32) -> Rect {
    let lo = (side / 2) as i32;
    let hi = (side as i32 - 1) - lo;
    Rect::new(anchor.x - lo, anchor.y - lo, anchor.x + hi, anchor.y + hi)
}

pub fn initial_window_side(size: usize) -> u32 {
    ((2.0 * size as f64).sqrt().ceil() as u32).max(1)
}

/// Places `size` starts around `start_anchor` and as many targets around
/// `target_anchor`, doubling the window side on failure. Returns the index-
/// aligned pairs and the number of window growths.
pub fn place_cluster_at(
    partial: &PartialInstance,
    map: &Rect,
    start_anchor: Pixel,
    target_anchor: Pixel,
    size: usize,
    rng: &mut impl Rng,
) -> Result<(Vec<Pixel>, Vec<Pixel>, u32), GenerateError> {
    let forbidden_s = partial.forbidden_starts();
    let forbidden_t = partial.forbidden_targets();
    let mut side = initial_window_side(size);
    for retry in 0..=WINDOW_RETRIES {
        let ws = cluster_window(start_anchor, side).intersect(map);
        let wt = cluster_window(target_anchor, side).intersect(map);
        if let (Some(ws), Some(wt)) = (ws, wt) {
            let starts = sample_positions(size, &Distribution::Uniform, &forbidden_s, &ws, rng);
            let targets = sample_positions(size, &Distribution::Uniform, &forbidden_t, &wt, rng);
            if let (Ok(s), Ok(t)) = (starts, targets) {
                return Ok((s, t, retry));
            }
        }
        side = side.saturating_mul(2);
    }
    Err(GenerateError::ClusterPlacement { size })
}

/// Adds up to `cluster_count` clusters, never exceeding `budget` robots.
pub fn place_clusters(
    params: &GeneratorParams,
    partial: &PartialInstance,
    budget: usize,
    rng: &mut impl Rng,
) -> Result<ClusterPlacement, GenerateError> {
    let map = params.map();
    let mut work = partial.clone();
    let mut out = ClusterPlacement::default();
    for _ in 0..params.cluster_count {
        let remaining = budget - out.starts.len();
        if remaining == 0 {
            break;
        }
        let size = (truncated_normal_int(
            rng,
            params.cluster_size_mean,
            params.cluster_size_stddev,
            1,
            budget.max(1) as u32,
        ) as usize)
            .min(remaining);
        let mut placed = None;
        let mut retries = 0;
        for _ in 0..ANCHOR_RESAMPLES {
            let sa = sample_positions(1, &params.start_distribution, &work.forbidden_starts(), &map, rng)?[0];
            let ta = sample_positions(1, &params.target_distribution, &work.forbidden_targets(), &map, rng)?[0];
            match place_cluster_at(&work, &map, sa, ta, size, rng) {
                Ok((s, t, r)) => {
                    placed = Some((sa, ta, s, t));
                    retries += r;
                    break;
                }
                Err(_) => retries += WINDOW_RETRIES + 1,
            }
        }
        let Some((sa, ta, s, t)) = placed else {
            return Err(GenerateError::ClusterPlacement { size });
        };
        work.starts.extend(&s);
        work.targets.extend(&t);
        out.starts.extend(s);
        out.targets.extend(t);
        out.clusters.push(ClusterRecord {
            size,
            start_anchor: sa,
            target_anchor: ta,
            retries,
        });
    }
    Ok(out)
}

const MAX_ATTEMPTS: u32 = 8;

/// Robot count for a given free area: `round(density × free_area)`.
pub fn robot_count(density: f64, free_area: u64) -> usize {
    (density * free_area as f64).round() as usize
}

/// Full pipeline. Deterministic in `params` (including the seed); failing
/// random streams are replaced by derived ones up to a fixed budget.
pub fn generate_instance(params: &GeneratorParams) -> Result<GeneratedInstance, GenerateError> {
    params.validate()?;
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = seed::stream(params.seed, attempt as u64);
        match try_generate(params, &mut rng) {
            Ok(mut g) => {
                g.provenance.reseeds = attempt;
                return Ok(g);
            }
            Err(e) => last = Some(e),
        }
    }
    Err(GenerateError::GenerationFailed {
        seed: params.seed,
        attempts: MAX_ATTEMPTS,
        last: Box::new(last.expect("at least one attempt")),
    })
}

fn try_generate(params: &GeneratorParams, rng: &mut ChaCha8Rng) -> Result<GeneratedInstance, GenerateError> {
    let map = params.map();
    let obstacles = place_obstacles(params, rng);
    let free_area = map.area() - obstacles.iter().filter(|p| map.contains(**p)).count() as u64;
    let n = robot_count(params.density, free_area);
    if n == 0 {
        return Err(GenerateError::NoRobots);
    }
    let mut partial = PartialInstance {
        map: Some(map),
        obstacles,
        ..Default::default()
    };
    let clusters = if params.cluster_count > 0 {
        place_clusters(params, &partial, n, rng)?
    } else {
        ClusterPlacement::default()
    };
    let clustered = clusters.starts.len();
    partial.starts = clusters.starts;
    partial.targets = clusters.targets;

    let rest = n - clustered;
    let more_starts = sample_positions(rest, &params.start_distribution, &partial.forbidden_starts(), &map, rng)?;
    let more_targets = sample_positions(rest, &params.target_distribution, &partial.forbidden_targets(), &map, rng)?;
    partial.starts.extend(more_starts);
    partial.targets.extend(more_targets);

    let instance = Instance::new(
        format!("gen_{:016x}", params.seed),
        partial.starts,
        partial.targets,
        partial.obstacles,
    )?;
    Ok(GeneratedInstance {
        instance,
        provenance: Provenance {
            map,
            n_clusters: clusters.clusters.len() as u32,
            n_clustered_robots: clustered as u32,
            cluster_retries: clusters.clusters.iter().map(|c| c.retries).sum(),
            reseeds: 0,
        },
    })
}

/// Instance properties used for diversity selection. Without provenance the
/// map is taken to be the instance's bounding box and the cluster fields are
/// zero.
pub fn extract_features(instance: &Instance, provenance: Option<&Provenance>) -> InstanceFeatures {
    let map = provenance.map_or_else(|| instance.bounding_box(), |p| p.map);
    let volume = map.area();
    let blocked = instance.obstacles().iter().filter(|p| map.contains(**p)).count() as u64;
    let free_area = volume - blocked;
    let n = instance.robot_count() as u32;
    InstanceFeatures {
        n_robots: n,
        density: if free_area > 0 { n as f64 / free_area as f64 } else { 0.0 },
        n_clusters: provenance.map_or(0, |p| p.n_clusters),
        n_clustered_robots: provenance.map_or(0, |p| p.n_clustered_robots),
        volume,
        free_area,
        external: provenance.is_none(),
    }
}

#[cfg(test)]
mod tests;
