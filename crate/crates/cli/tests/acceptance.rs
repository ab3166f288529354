//! Acceptance checks. Prints one `PASS` or `FAIL` line per criterion and
//! exits with status 1 if any criterion fails.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use gridmotion::evaluate::score_suites;
use gridmotion::generate::{
    extract_features, generate_batch, normalized_points, select_diverse, GeneratorParams, GridConfig,
    InstanceFeatures,
};
use gridmotion::grid::{search_margin, GridWindow};
use gridmotion::seed;
use gridmotion::solve::{joint_bfs_oracle, solve, SolverConfig};
use gridmotion::validate::{check_step, lower_bounds_in, Rule, StepVerdict};
use gridmotion::{
    lower_bounds, validate_schedule, Configuration, Direction, Instance, Objective, Pixel, Rect, Schedule, Step,
    ValidationReport,
};
use gridmotion_cli::formats::emit_instance;
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;

/// Every validation report produced anywhere in the suite.
static REPORTS: Mutex<Vec<(String, ValidationReport)>> = Mutex::new(Vec::new());

fn record(label: impl Into<String>, report: &ValidationReport) {
    REPORTS.lock().unwrap().push((label.into(), report.clone()));
}

fn validated(label: &str, instance: &Instance, schedule: &Schedule) -> ValidationReport {
    let report = validate_schedule(instance, schedule).expect("schedule has the instance's width");
    record(label, &report);
    report
}

fn px(x: i32, y: i32) -> Pixel {
    Pixel::new(x, y)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, elapsed: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || format!("{what} took {elapsed:.2?}, limit {limit:?}"))
}

// ---------------------------------------------------------------------------
// Continuous-motion oracle.
//
// Every square moves at unit speed from its pixel to the destination during
// t in [0, 1]. A step is illegal iff two robot squares, or a robot square and
// an obstacle square, have overlapping interiors at some t in (0, 1]. Relative
// offsets are linear in t with integer slopes in [-2, 2], so the overlap
// set is a union of open intervals with endpoints at multiples of 1/2 (plus
// the closed end t = 1). Sampling t in {1/4, 1/2, 3/4, 1} is therefore exact.
// ---------------------------------------------------------------------------

fn position_at(p: Pixel, d: Direction, t: f64) -> (f64, f64) {
    let (dx, dy) = d.delta();
    (p.x as f64 + dx as f64 * t, p.y as f64 + dy as f64 * t)
}

fn interiors_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.0 - b.0).abs() < 1.0 && (a.1 - b.1).abs() < 1.0
}

fn continuous_legal(config: &[Pixel], moves: &[Direction], obstacles: &BTreeSet<Pixel>) -> bool {
    for t in [0.25, 0.5, 0.75, 1.0] {
        let at: Vec<(f64, f64)> = config.iter().zip(moves).map(|(&p, &d)| position_at(p, d, t)).collect();
        for i in 0..at.len() {
            for j in i + 1..at.len() {
                if interiors_overlap(at[i], at[j]) {
                    return false;
                }
            }
            for o in obstacles {
                if interiors_overlap(at[i], (o.x as f64, o.y as f64)) {
                    return false;
                }
            }
        }
    }
    true
}

fn validator_oracle() -> Outcome {
    let clock = Instant::now();
    let mut rng = seed::stream(0xacce_0001, 0);
    let cells: Vec<Pixel> = Rect::new(0, 0, 5, 5).pixels().collect();
    let (mut legal, mut illegal) = (0usize, 0usize);
    let pairs = 10_000;
    for k in 0..pairs {
        let w = rng.random_range(1..=6);
        let h = rng.random_range(1..=6);
        let mut pool: Vec<Pixel> = cells.iter().copied().filter(|p| p.x < w && p.y < h).collect();
        pool.shuffle(&mut rng);
        let n = rng.random_range(1..=6.min(pool.len()));
        let robots: Vec<Pixel> = pool[..n].to_vec();
        let n_obstacles = rng.random_range(0..=(pool.len() - n).min(4));
        let obstacles: BTreeSet<Pixel> = pool[n..n + n_obstacles].iter().copied().collect();
        let moves: Vec<Direction> = (0..n).map(|_| Direction::ALL[rng.random_range(0..5)]).collect();

        let instance = Instance::new("pair", robots.clone(), robots.clone(), obstacles.iter().copied())
            .map_err(|e| format!("pair {k}: {e}"))?;
        let verdict = check_step(&instance, &Configuration::new(robots.clone()), &Step::new(moves.clone()))
            .map_err(|e| format!("pair {k}: {e}"))?;
        let expected = continuous_legal(&robots, &moves, &obstacles);
        ensure(verdict.is_legal() == expected, || {
            format!("pair {k}: robots {robots:?} moves {moves:?} obstacles {obstacles:?}: validator {verdict:?}, continuous legal = {expected}")
        })?;
        if expected {
            legal += 1;
        } else {
            illegal += 1;
        }
    }
    within(Duration::from_secs(10), clock.elapsed(), "oracle comparison")?;
    ensure(legal > 1000 && illegal > 1000, || format!("unbalanced sample: {legal} legal, {illegal} illegal"))?;
    Ok(format!(
        "{pairs} pairs, 0 disagreements ({legal} legal, {illegal} illegal) in {:.2?}",
        clock.elapsed()
    ))
}

fn motion_fixtures() -> Outcome {
    use Direction::*;
    let verdict = |robots: Vec<Pixel>, moves: Vec<Direction>, obstacles: Vec<Pixel>| {
        let inst = Instance::new("fixture", robots.clone(), robots.clone(), obstacles).unwrap();
        check_step(&inst, &Configuration::new(robots), &Step::new(moves)).unwrap()
    };
    let chain = verdict(vec![px(0, 0), px(1, 0), px(2, 0)], vec![East, East, East], vec![]);
    ensure(chain == StepVerdict::Legal, || format!("east-east chain: {chain:?}"))?;
    let follow = verdict(vec![px(0, 0), px(1, 0)], vec![East, North], vec![]);
    ensure(
        follow == StepVerdict::Violation { rule: Rule::FollowIn, robots: vec![0, 1] },
        || format!("east-north follow-in: {follow:?}"),
    )?;
    let swap = verdict(vec![px(0, 0), px(1, 0)], vec![East, West], vec![]);
    ensure(
        swap == StepVerdict::Violation { rule: Rule::FollowIn, robots: vec![0, 1] },
        || format!("swap: {swap:?}"),
    )?;
    let wall = verdict(vec![px(0, 0)], vec![East], vec![px(1, 0)]);
    ensure(
        wall == StepVerdict::Violation { rule: Rule::Obstacle, robots: vec![0] },
        || format!("obstacle: {wall:?}"),
    )?;
    Ok("chain legal; follow-in, swap and obstacle illegal".into())
}

fn ring(room: Rect) -> BTreeSet<Pixel> {
    room.inflate(1).pixels().filter(|p| !room.contains(*p)).collect()
}

/// Walled 5×5 room with up to three robots and a few inner obstacles.
fn room_instance(rng: &mut impl Rng, name: String) -> Option<Instance> {
    let room = Rect::new(0, 0, 4, 4);
    let mut free: Vec<Pixel> = room.pixels().collect();
    free.shuffle(rng);
    let extra = rng.random_range(0..=3);
    let mut obstacles = ring(room);
    obstacles.extend(free.drain(..extra));
    let n = rng.random_range(1..=3);
    let starts = free[..n].to_vec();
    let mut targets = free.clone();
    targets.shuffle(rng);
    targets.truncate(n);
    let inst = Instance::new(name, starts, targets, obstacles).ok()?;
    lower_bounds(&inst).ok()?;
    Some(inst)
}

fn oracle_suite() -> Outcome {
    let clock = Instant::now();
    let mut rng = seed::stream(0xacce_0003, 0);
    let mut instances = Vec::new();
    while instances.len() < 20 {
        if let Some(inst) = room_instance(&mut rng, format!("room_{}", instances.len())) {
            instances.push(inst);
        }
    }
    let mut config = SolverConfig::for_objective(Objective::Max);
    config.time_limit = Some(2.0);
    config.anneal.iterations = 2000;
    let mut close = 0;
    let mut ratios = Vec::new();
    for (k, inst) in instances.iter().enumerate() {
        let optimum = joint_bfs_oracle(inst, Rect::new(0, 0, 4, 4))
            .map_err(|e| format!("{}: oracle failed: {e}", inst.name()))?
            .makespan;
        config.seed = k as u64;
        let outcome = solve(inst, &config).map_err(|e| format!("{}: solve failed: {e}", inst.name()))?;
        let report = validated(inst.name(), inst, &outcome.schedule);
        ensure(report.feasible, || format!("{}: emitted schedule invalid: {:?}", inst.name(), report.first_violation))?;
        ensure(report.makespan >= optimum, || {
            format!("{}: makespan {} below optimum {optimum}", inst.name(), report.makespan)
        })?;
        if report.makespan as f64 <= 1.5 * optimum as f64 {
            close += 1;
        }
        ratios.push(if optimum == 0 { 1.0 } else { report.makespan as f64 / optimum as f64 });
    }
    within(Duration::from_secs(60), clock.elapsed(), "oracle suite")?;
    ensure(close >= 18, || format!("only {close}/20 within 1.5x of optimum, ratios {ratios:?}"))?;
    let worst = ratios.iter().copied().fold(1.0, f64::max);
    Ok(format!("{close}/20 within 1.5x, worst ratio {worst:.3}, {:.2?}", clock.elapsed()))
}

/// Two robots in a row. The front one turns north after four steps east
/// while the back one follows it into the vacated pixels.
fn train_instance() -> Instance {
    Instance::new("train", vec![px(0, 0), px(1, 0)], vec![px(4, 2), px(5, 0)], []).unwrap()
}

fn train_fixture() -> Outcome {
    use Direction::*;
    let inst = train_instance();
    let mut steps = vec![Step::new(vec![East, East]); 4];
    steps.push(Step::new(vec![North, Wait]));
    steps.push(Step::new(vec![North, Wait]));
    let hand = validated("train hand schedule", &inst, &Schedule::new("train", steps));
    ensure(hand.feasible, || format!("hand schedule invalid: {:?}", hand.first_violation))?;
    ensure(
        hand.makespan == hand.lb_makespan && hand.total_distance == hand.lb_total,
        || format!("hand schedule {}/{} vs bounds {}/{}", hand.makespan, hand.total_distance, hand.lb_makespan, hand.lb_total),
    )?;
    let mut found = Vec::new();
    for objective in [Objective::Max, Objective::Sum] {
        let outcome = solve(&inst, &SolverConfig::for_objective(objective)).map_err(|e| e.to_string())?;
        let r = validated("train solve", &inst, &outcome.schedule);
        ensure(r.feasible, || format!("{objective}: solver schedule invalid"))?;
        let (got, bound) = match objective {
            Objective::Max => (r.makespan, r.lb_makespan),
            Objective::Sum => (r.total_distance, r.lb_total),
        };
        ensure(got == bound, || format!("{objective}: solver reached {got}, bound {bound}"))?;
        found.push(format!("{objective} {got}"));
    }
    Ok(format!(
        "hand schedule makespan {} = lb, total {} = lb; solver {}",
        hand.makespan,
        hand.total_distance,
        found.join(", ")
    ))
}

/// Free map pixels not reachable from the outside of the map.
fn enclosed(instance: &Instance, map: &Rect) -> usize {
    let outer = map.inflate(1);
    let blocked: HashSet<Pixel> = instance.obstacles().iter().copied().collect();
    let mut seen: HashSet<Pixel> = outer.pixels().filter(|p| !map.contains(*p)).collect();
    let mut queue: VecDeque<Pixel> = seen.iter().copied().collect();
    while let Some(p) = queue.pop_front() {
        for d in Direction::MOVES {
            let (dx, dy) = d.delta();
            let q = px(p.x + dx, p.y + dy);
            if outer.contains(q) && !blocked.contains(&q) && seen.insert(q) {
                queue.push_back(q);
            }
        }
    }
    map.pixels().filter(|p| !blocked.contains(p) && !seen.contains(p)).count()
}

const GENERATOR_GRID: &str = "
base_seed = 2024
seeds_per_combination = 2
map_width = [6, 10, 14, 18, 24]
map_height = 12
density = [0.05, 0.1, 0.2, 0.35, 0.5]
obstacle_count = [0, 4]
obstacle_size_mean = 3.0
cluster_count = 2
cluster_size_mean = 3.0
";

fn generator_feasibility() -> Outcome {
    let grid = GridConfig::from_toml(GENERATOR_GRID, std::path::Path::new(".")).map_err(|e| e.to_string())?;
    let params = grid.expand().map_err(|e| e.to_string())?;
    ensure(params.len() == 100, || format!("grid expands to {} parameter sets", params.len()))?;
    let first = generate_batch(&params);
    let second = generate_batch(&params);
    let mut robots = 0;
    for ((p, a), b) in params.iter().zip(&first).zip(&second) {
        let a = a.as_ref().map_err(|e| format!("seed {:016x}: {e}", p.seed))?;
        let b = b.as_ref().map_err(|e| format!("seed {:016x}: {e}", p.seed))?;
        let inst = &a.instance;
        let map = p.map();
        let name = inst.name();
        // Instance invariants: recheck through the constructor.
        Instance::new(name, inst.starts().to_vec(), inst.targets().to_vec(), inst.obstacles().iter().copied())
            .map_err(|e| format!("{name}: {e}"))?;
        ensure(
            inst.starts().iter().chain(inst.targets()).all(|q| map.contains(*q)),
            || format!("{name}: robot outside the map"),
        )?;
        ensure(inst.obstacles().iter().all(|q| map.contains(*q)), || format!("{name}: obstacle outside the map"))?;
        let holes = enclosed(inst, &map);
        ensure(holes == 0, || format!("{name}: {holes} enclosed free pixels"))?;
        let free_area = map.area() - inst.obstacles().len() as u64;
        let expected = (p.density * free_area as f64).round() as usize;
        ensure(inst.robot_count() == expected, || {
            format!("{name}: {} robots, expected round({} x {free_area}) = {expected}", inst.robot_count(), p.density)
        })?;
        lower_bounds(inst).map_err(|e| format!("{name}: {e}"))?;
        ensure(
            emit_instance(inst, Some(&a.provenance)) == emit_instance(&b.instance, Some(&b.provenance)),
            || format!("{name}: regeneration differs"),
        )?;
        robots += inst.robot_count();
    }
    Ok(format!("100 instances ({robots} robots) valid, hole-free, exact counts, byte-identical on regeneration"))
}

fn min_pairwise(points: &[Vec<f64>], subset: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for (a, &i) in subset.iter().enumerate() {
        for &j in &subset[a + 1..] {
            let d: f64 = points[i].iter().zip(&points[j]).map(|(x, y)| (x - y) * (x - y)).sum();
            best = best.min(d.sqrt());
        }
    }
    best
}

fn dispersion() -> Outcome {
    let runs = 10;
    let mut margins = Vec::new();
    for run in 0..runs {
        let mut rng = seed::stream(0xacce_0006, run);
        let candidates: Vec<InstanceFeatures> = (0..200)
            .map(|_| {
                let volume = rng.random_range(25..=2500u64);
                let free_area = rng.random_range(volume / 2..=volume);
                let n_robots = rng.random_range(1..=free_area as u32);
                let n_clusters = rng.random_range(0..=5u32);
                InstanceFeatures {
                    n_robots,
                    density: n_robots as f64 / free_area as f64,
                    n_clusters,
                    n_clustered_robots: if n_clusters == 0 { 0 } else { rng.random_range(0..=n_robots) },
                    volume,
                    free_area,
                    external: false,
                }
            })
            .collect();
        let points = normalized_points(&candidates);
        let picked = select_diverse(&candidates, 20).map_err(|e| e.to_string())?;
        let chosen = min_pairwise(&points, &picked);
        let mut random: Vec<f64> = (0..100)
            .map(|_| {
                let mut idx: Vec<usize> = (0..200).collect();
                idx.shuffle(&mut rng);
                min_pairwise(&points, &idx[..20])
            })
            .collect();
        random.sort_by(f64::total_cmp);
        let median = (random[49] + random[50]) / 2.0;
        ensure(chosen >= median, || format!("run {run}: selected min distance {chosen:.4} < random median {median:.4}"))?;
        margins.push(chosen / median);
    }
    let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!("{runs} runs, selected/median min distance >= {worst:.2}"))
}

fn line(name: &str, d: i32) -> Instance {
    Instance::new(name, vec![px(0, 0)], vec![px(d, 0)], []).unwrap()
}

/// Walks east `d` pixels after `detours` north-south round trips.
fn walk(name: &str, d: usize, detours: usize) -> Schedule {
    use Direction::*;
    let mut steps = Vec::new();
    for _ in 0..detours {
        steps.push(Step::new(vec![North]));
        steps.push(Step::new(vec![South]));
    }
    steps.extend((0..d).map(|_| Step::new(vec![East])));
    Schedule::new(name, steps)
}

fn scoring() -> Outcome {
    let instances = vec![line("a", 10)];
    let suites: BTreeMap<String, Vec<Schedule>> = [
        ("best".to_string(), vec![walk("a", 10, 0)]),
        ("double".to_string(), vec![walk("a", 10, 5)]),
        ("invalid".to_string(), vec![walk("a", 9, 0)]),
    ]
    .into();
    let report = score_suites(&instances, &suites, Objective::Max).map_err(|e| e.to_string())?;
    for (team, expected) in [("best", 1.0), ("double", 0.5), ("invalid", 0.0)] {
        let got = report.score(team, "a").unwrap();
        ensure(got == expected, || format!("{team}: score {got}, expected {expected}"))?;
    }

    // Random suites: totals bounded, best team scores exactly 1.
    let mut rng = seed::stream(0xacce_0007, 0);
    let instances: Vec<Instance> = (0..6).map(|i| line(&format!("i{i}"), rng.random_range(0..8))).collect();
    for trial in 0..50 {
        let mut suites: BTreeMap<String, Vec<Schedule>> = BTreeMap::new();
        for t in 0..4 {
            let mut schedules = Vec::new();
            for inst in &instances {
                let d = inst.targets()[0].x as usize;
                for _ in 0..rng.random_range(0..3) {
                    let short = rng.random_bool(0.2) && d > 0;
                    schedules.push(walk(inst.name(), if short { d - 1 } else { d }, rng.random_range(0..4)));
                }
            }
            suites.insert(format!("team{t}"), schedules);
        }
        for objective in [Objective::Max, Objective::Sum] {
            let report = score_suites(&instances, &suites, objective).map_err(|e| e.to_string())?;
            for t in &report.totals {
                ensure(t.total >= 0.0 && t.total <= instances.len() as f64, || {
                    format!("trial {trial}: total {} for {}", t.total, t.team)
                })?;
            }
            for inst in &report.instances {
                let scores: Vec<&gridmotion::evaluate::ScoreEntry> =
                    report.entries.iter().filter(|e| &e.instance == inst).collect();
                let any_valid = scores.iter().any(|e| e.v.is_some());
                let top = scores.iter().map(|e| e.score).fold(0.0, f64::max);
                ensure(top == if any_valid { 1.0 } else { 0.0 }, || format!("trial {trial}: best score {top} on {inst}"))?;
                ensure(scores.iter().all(|e| (0.0..=1.0).contains(&e.score)), || format!("trial {trial}: score out of range"))?;
            }
        }
    }
    Ok("hand cases 1 / 0.5 / 0 exact; 100 random reports bounded with best = 1".into())
}

fn scale() -> Outcome {
    let mut params = GeneratorParams {
        map_width: 20,
        map_height: 20,
        density: 0.3,
        obstacle_count: 6,
        obstacle_size_mean: 3.0,
        seed: 0xacce_0008,
        ..GeneratorParams::default()
    };
    // Obstacles are placed before robots, so fixing the density to
    // 100 / free_area reproduces the same map with exactly 100 robots.
    let mut generated = None;
    for _ in 0..5 {
        let g = gridmotion::generate::generate_instance(&params).map_err(|e| e.to_string())?;
        if g.instance.robot_count() == 100 {
            generated = Some(g);
            break;
        }
        let free_area = extract_features(&g.instance, Some(&g.provenance)).free_area;
        params.density = 100.0 / free_area as f64;
    }
    let g = generated.ok_or("could not reach 100 robots")?;
    let inst = &g.instance;
    ensure(!inst.obstacles().is_empty(), || "instance has no obstacles".into())?;
    let clock = Instant::now();
    let mut config = SolverConfig::for_objective(Objective::Max);
    config.time_limit = Some(20.0);
    let outcome = solve(inst, &config).map_err(|e| e.to_string())?;
    let elapsed = clock.elapsed();
    let r = validated("scale", inst, &outcome.schedule);
    within(Duration::from_secs(60), elapsed, "solve")?;
    ensure(r.feasible, || format!("infeasible: {:?}", r.first_violation))?;
    let stretch = r.stretch_max().unwrap_or(1.0);
    ensure(stretch <= 4.0, || format!("stretch_max {stretch:.3}"))?;
    Ok(format!(
        "100 robots, {} obstacle pixels: makespan {} (lb {}), stretch_max {stretch:.3}, {elapsed:.2?}",
        inst.obstacles().len(),
        r.makespan,
        r.lb_makespan
    ))
}

fn margin_cross_check() -> Outcome {
    let mut rng = seed::stream(0xacce_000a, 0);
    let mut instances: Vec<Instance> = (0..40).filter_map(|k| room_instance(&mut rng, format!("m{k}"))).collect();
    let params: Vec<GeneratorParams> = (0..20)
        .map(|k| GeneratorParams {
            map_width: 12,
            map_height: 10,
            density: 0.1,
            obstacle_count: 8,
            seed: seed::derive(0xacce_000a, k),
            ..GeneratorParams::default()
        })
        .collect();
    for g in generate_batch(&params) {
        instances.push(g.map_err(|e| e.to_string())?.instance);
    }
    // Obstacle walls forcing long detours.
    let mut wall: BTreeSet<Pixel> = (-6..=6).map(|y| px(3, y)).collect();
    wall.extend((0..=3).map(|x| px(x, 6)));
    instances.push(Instance::new("wall", vec![px(0, 0)], vec![px(6, 0)], wall).unwrap());
    for inst in &instances {
        let base = lower_bounds(inst).map_err(|e| format!("{}: {e}", inst.name()))?;
        let margin = search_margin(&inst.bounding_box(), inst.obstacles().len());
        let wide = lower_bounds_in(inst, &GridWindow::with_margin(inst, 2 * margin))
            .map_err(|e| format!("{}: {e}", inst.name()))?;
        ensure(base == wide, || format!("{}: bounds differ with doubled margin", inst.name()))?;
    }
    Ok(format!("{} instances agree with a doubled margin", instances.len()))
}

fn stretch_sanity() -> Outcome {
    let reports = REPORTS.lock().unwrap();
    let mut feasible = 0;
    for (label, r) in reports.iter().filter(|(_, r)| r.feasible) {
        for (name, s) in [("stretch_max", r.stretch_max()), ("stretch_sum", r.stretch_sum())] {
            if let Some(s) = s {
                ensure(s >= 1.0, || format!("{label}: {name} = {s}"))?;
            }
        }
        feasible += 1;
    }
    ensure(feasible > 0, || "no feasible schedules recorded".into())?;
    Ok(format!("{feasible} feasible schedules, all stretches >= 1"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("validator matches continuous-motion oracle", validator_oracle),
        ("motion-rule fixtures", motion_fixtures),
        ("joint-state BFS oracle suite", oracle_suite),
        ("two-robot train reaches both lower bounds", train_fixture),
        ("generator feasibility", generator_feasibility),
        ("dispersion quality", dispersion),
        ("scoring exactness", scoring),
        ("scale: 100 robots on 20x20", scale),
        ("lower-bound search margin", margin_cross_check),
        ("stretch sanity", stretch_sanity),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let clock = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{:.1?}]", clock.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{:.1?}]", clock.elapsed());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
