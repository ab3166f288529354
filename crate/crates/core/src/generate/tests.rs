use std::collections::{BTreeSet, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;

use super::*;

fn px(x: i32, y: i32) -> Pixel {
    Pixel::new(x, y)
}

/// Free map pixels that cannot reach the outside of `map`, found by a plain
/// hash-set flood fill from the ring just outside the map.
fn enclosed_pixels(obstacles: &BTreeSet<Pixel>, map: &Rect) -> BTreeSet<Pixel> {
    let outer = map.inflate(1);
    let mut seen: HashSet<Pixel> = HashSet::new();
    let mut queue: VecDeque<Pixel> = outer.pixels().filter(|p| !map.contains(*p)).collect();
    seen.extend(queue.iter().copied());
    while let Some(p) = queue.pop_front() {
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let q = px(p.x + dx, p.y + dy);
            if outer.contains(q) && !obstacles.contains(&q) && seen.insert(q) {
                queue.push_back(q);
            }
        }
    }
    map.pixels()
        .filter(|p| !obstacles.contains(p) && !seen.contains(p))
        .collect()
}

#[test]
fn no_rectangles_no_obstacles() {
    let params = GeneratorParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!(place_obstacles(&params, &mut rng).is_empty());
}

#[test]
fn rectangle_rasterization() {
    let map = Rect::with_size(10, 10);
    let pixels: BTreeSet<Pixel> = rectangle_pixels(px(4, 4), 2, 3, &map).into_iter().collect();
    let expected: BTreeSet<Pixel> = [(4, 4), (5, 4), (4, 5), (5, 5), (4, 6), (5, 6)]
        .into_iter()
        .map(Pixel::from)
        .collect();
    assert_eq!(pixels, expected);
    // Clipped at the border.
    assert_eq!(rectangle_pixels(px(9, 9), 3, 3, &map), vec![px(9, 9)]);
}

#[test]
fn fill_enclosed_examples() {
    let map = Rect::with_size(10, 10);
    assert!(fill_enclosed(&BTreeSet::new(), &map).is_empty());

    let ring: BTreeSet<Pixel> = Rect::new(4, 4, 6, 6).pixels().filter(|&p| p != px(5, 5)).collect();
    let filled = fill_enclosed(&ring, &map);
    assert_eq!(filled.len(), 9);
    assert!(filled.contains(&px(5, 5)));
}

#[test]
fn hole_filling_on_random_rectangles() {
    // Search a seed whose raw rectangles enclose a free pixel, then check the
    // generator turns it into an obstacle.
    let mut found = 0;
    for s in 0..400u64 {
        let params = GeneratorParams {
            map_width: 12,
            map_height: 12,
            obstacle_count: 10,
            obstacle_size_mean: 4.0,
            obstacle_size_stddev: 2.0,
            seed: s,
            ..Default::default()
        };
        let raw = place_rectangles(&params, &mut ChaCha8Rng::seed_from_u64(s));
        let holes = enclosed_pixels(&raw, &params.map());
        let filled = place_obstacles(&params, &mut ChaCha8Rng::seed_from_u64(s));
        assert!(holes.iter().all(|h| filled.contains(h)));
        assert_eq!(filled.len(), raw.len() + holes.len());
        if !holes.is_empty() {
            found += 1;
        }
    }
    assert!(found > 0, "no seed produced an enclosed pocket");
}

#[test]
fn filled_maps_are_connected() {
    for s in 0..100u64 {
        let params = GeneratorParams {
            map_width: 16,
            map_height: 14,
            obstacle_count: 12,
            obstacle_size_mean: 3.0,
            obstacle_size_stddev: 2.0,
            ..Default::default()
        };
        let obstacles = place_obstacles(&params, &mut ChaCha8Rng::seed_from_u64(s));
        assert!(enclosed_pixels(&obstacles, &params.map()).is_empty(), "seed {s}");
    }
}

#[test]
fn sample_positions_trivial_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let none = FxHashSet::default();
    let map = Rect::with_size(2, 1);
    assert!(sample_positions(0, &Distribution::Uniform, &none, &map, &mut rng).unwrap().is_empty());
    let mut both = sample_positions(2, &Distribution::Uniform, &none, &map, &mut rng).unwrap();
    both.sort();
    assert_eq!(both, vec![px(0, 0), px(1, 0)]);
    assert!(matches!(
        sample_positions(3, &Distribution::Uniform, &none, &map, &mut rng),
        Err(GenerateError::SupportExhausted { requested: 3, available: 2 })
    ));
    let forbidden: FxHashSet<Pixel> = [px(0, 0)].into_iter().collect();
    assert_eq!(
        sample_positions(1, &Distribution::Uniform, &forbidden, &map, &mut rng).unwrap(),
        vec![px(1, 0)]
    );
}

#[test]
fn sample_positions_exhausts_support_exactly() {
    // Every pixel requested: the rejection cap must hand over to exact
    // sampling rather than fail.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let map = Rect::with_size(30, 30);
    let mut all = sample_positions(900, &Distribution::Uniform, &FxHashSet::default(), &map, &mut rng).unwrap();
    all.sort();
    all.dedup();
    assert_eq!(all.len(), 900);
}

#[test]
fn weight_map_row_and_frequencies() {
    // 4×3 raster, only the middle raster row carries weight 1:2:3:4.
    let weights = vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 0.0, 0.0, 0.0, 0.0];
    let dist = Distribution::Weighted(WeightMap::new(4, 3, weights).unwrap());
    let map = Rect::with_size(4, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let none = FxHashSet::default();

    let row = sample_positions(4, &dist, &none, &map, &mut rng).unwrap();
    assert!(row.iter().all(|p| p.y == 1));

    let draws = 10_000usize;
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        let p = sample_positions(1, &dist, &none, &map, &mut rng).unwrap()[0];
        assert_eq!(p.y, 1);
        counts[p.x as usize] += 1;
    }
    let mut chi2 = 0.0;
    for (x, &c) in counts.iter().enumerate() {
        let prob = (x + 1) as f64 / 10.0;
        let expected = draws as f64 * prob;
        let sigma = (draws as f64 * prob * (1.0 - prob)).sqrt();
        assert!((c as f64 - expected).abs() <= 3.0 * sigma, "cell {x}: {c} vs {expected}");
        chi2 += (c as f64 - expected).powi(2) / expected;
    }
    // 3 degrees of freedom, 99.9% quantile.
    assert!(chi2 < 16.27, "chi2 = {chi2}");
}

#[test]
fn truncated_normal_respects_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let x = truncated_normal(&mut rng, 3.0, 10.0, 1.0, 6.0);
        assert!((1.0..=6.0).contains(&x));
    }
    // Far-away mean: falls back to clamping.
    assert_eq!(truncated_normal(&mut rng, 1000.0, 0.001, 1.0, 6.0), 6.0);
    assert_eq!(truncated_normal(&mut rng, 2.5, 0.0, 1.0, 6.0), 2.5);
}

#[test]
fn cluster_window_geometry() {
    assert_eq!(initial_window_side(1), 2);
    assert_eq!(initial_window_side(4), 3);
    assert_eq!(cluster_window(px(5, 5), 3), Rect::new(4, 4, 6, 6));
    assert_eq!(cluster_window(px(5, 5), 2), Rect::new(4, 4, 5, 5));
    assert_eq!(cluster_window(px(5, 5), 1), Rect::new(5, 5, 5, 5));
}

#[test]
fn single_robot_cluster() {
    let map = Rect::with_size(10, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (s, t, retries) = place_cluster_at(&PartialInstance::default(), &map, px(3, 3), px(7, 7), 1, &mut rng).unwrap();
    assert_eq!((s.len(), t.len(), retries), (1, 1, 0));
    assert!(cluster_window(px(3, 3), 2).contains(s[0]));
    assert!(cluster_window(px(7, 7), 2).contains(t[0]));
}

#[test]
fn cluster_of_four_stays_in_three_by_three() {
    let map = Rect::with_size(10, 10);
    for s in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let (starts, targets, retries) =
            place_cluster_at(&PartialInstance::default(), &map, px(5, 5), px(2, 7), 4, &mut rng).unwrap();
        assert_eq!(retries, 0);
        assert_eq!(starts.len(), 4);
        for p in &starts {
            assert!((p.x - 5).abs().max((p.y - 5).abs()) <= 1);
        }
        for p in &targets {
            assert!((p.x - 2).abs().max((p.y - 7).abs()) <= 1);
        }
    }
}

#[test]
fn walled_anchor_grows_window() {
    let map = Rect::with_size(12, 12);
    // U-shaped wall around (5,5): only (5,5) and (5,6) stay free in the
    // initial 3×3 window.
    let walls: BTreeSet<Pixel> = [(4, 4), (5, 4), (6, 4), (4, 5), (6, 5), (4, 6), (6, 6)]
        .into_iter()
        .map(Pixel::from)
        .collect();
    let partial = PartialInstance {
        map: Some(map),
        obstacles: walls.clone(),
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (starts, _, retries) = place_cluster_at(&partial, &map, px(5, 5), px(9, 9), 4, &mut rng).unwrap();
    assert!(retries > 0);
    assert!(starts.iter().all(|p| !walls.contains(p)));
}

#[test]
fn clusters_pair_starts_and_targets() {
    let params = GeneratorParams {
        map_width: 16,
        map_height: 16,
        density: 0.2,
        cluster_count: 3,
        cluster_size_mean: 5.0,
        cluster_size_stddev: 1.0,
        seed: 77,
        ..Default::default()
    };
    let g = generate_instance(&params).unwrap();
    let n = g.instance.robot_count();
    assert_eq!(n, robot_count(0.2, 256));
    assert_eq!(g.provenance.n_clusters, 3);
    assert!(g.provenance.n_clustered_robots as usize <= n);
    assert!(g.provenance.n_clustered_robots >= 3);
}

#[test]
fn one_robot_instance() {
    let params = GeneratorParams {
        map_width: 10,
        map_height: 10,
        density: 0.01,
        seed: 5,
        ..Default::default()
    };
    let g = generate_instance(&params).unwrap();
    assert_eq!(g.instance.robot_count(), 1);
    assert!(params.map().contains(g.instance.starts()[0]));
    assert!(params.map().contains(g.instance.targets()[0]));
}

#[test]
fn half_density_gives_fifty() {
    let params = GeneratorParams {
        map_width: 10,
        map_height: 10,
        density: 0.5,
        seed: 1,
        ..Default::default()
    };
    assert_eq!(generate_instance(&params).unwrap().instance.robot_count(), 50);
}

#[test]
fn full_density_fills_every_free_pixel() {
    let params = GeneratorParams {
        map_width: 8,
        map_height: 8,
        density: 1.0,
        obstacle_count: 3,
        seed: 3,
        ..Default::default()
    };
    let g = generate_instance(&params).unwrap();
    let f = extract_features(&g.instance, Some(&g.provenance));
    assert_eq!(f.n_robots as u64, f.free_area);
}

#[test]
fn random_parameter_draws_yield_valid_connected_instances() {
    let mut meta = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..100u64 {
        let w = meta.random_range(4..24);
        let h = meta.random_range(4..24);
        let params = GeneratorParams {
            map_width: w,
            map_height: h,
            density: meta.random_range(0.05..0.6),
            obstacle_count: meta.random_range(0..10),
            obstacle_size_mean: meta.random_range(1.0..5.0),
            obstacle_size_stddev: meta.random_range(0.0..2.0),
            cluster_count: meta.random_range(0..4),
            cluster_size_mean: meta.random_range(1.0..8.0),
            cluster_size_stddev: meta.random_range(0.0..3.0),
            seed: i,
            ..Default::default()
        };
        let g = match generate_instance(&params) {
            Ok(g) => g,
            Err(GenerateError::GenerationFailed { last, .. }) if matches!(*last, GenerateError::NoRobots) => continue,
            Err(e) => panic!("draw {i}: {e}"),
        };
        let inst = &g.instance;
        let map = params.map();
        assert!(enclosed_pixels(inst.obstacles(), &map).is_empty());
        assert!(inst.starts().iter().chain(inst.targets()).all(|p| map.contains(*p)));
        let f = extract_features(inst, Some(&g.provenance));
        assert_eq!(f.n_robots as usize, robot_count(params.density, f.free_area));
        // Instance::new enforced the remaining invariants; rebuild to be sure.
        assert!(Instance::new("x", inst.starts().to_vec(), inst.targets().to_vec(), inst.obstacles().clone()).is_ok());
        assert_eq!(generate_instance(&params).unwrap(), g);
    }
}

#[test]
fn features_examples() {
    let one = Instance::new("a", vec![px(0, 0)], vec![px(9, 9)], []).unwrap();
    let prov = Provenance {
        map: Rect::with_size(10, 10),
        n_clusters: 0,
        n_clustered_robots: 0,
        cluster_retries: 0,
        reseeds: 0,
    };
    let f = extract_features(&one, Some(&prov));
    assert_eq!((f.n_robots, f.volume, f.free_area), (1, 100, 100));
    assert_eq!(f.density, 0.01);
    assert!(!f.external);

    let blocked = Instance::new("b", vec![px(0, 0)], vec![px(9, 9)], rectangle_pixels(px(4, 4), 2, 3, &prov.map)).unwrap();
    assert_eq!(extract_features(&blocked, Some(&prov)).free_area, 94);

    let ext = extract_features(&blocked, None);
    assert!(ext.external);
    assert_eq!((ext.n_clusters, ext.n_clustered_robots, ext.volume), (0, 0, 100));
}

#[test]
fn invalid_params_rejected() {
    for p in [
        GeneratorParams {
            map_width: 0,
            ..Default::default()
        },
        GeneratorParams {
            density: 0.0,
            ..Default::default()
        },
        GeneratorParams {
            density: 1.5,
            ..Default::default()
        },
        GeneratorParams {
            obstacle_size_stddev: -1.0,
            ..Default::default()
        },
    ] {
        assert!(matches!(generate_instance(&p), Err(GenerateError::InvalidParams(_))));
    }
}
