//! Library results checked against slow, obviously-correct reimplementations.

use rand::Rng;

use dualbev::global_map::{score_path, synth_hint_map};
use dualbev::local_planner::search::{bfs_hops, oracle_temporal_distance, DistanceField};
use dualbev::losses::{focal_loss, focal_loss_batched, FocalParams};
use dualbev::raster::{read_pgm, write_pgm, Georef, ProbabilityMap, Raster};
use dualbev::rng::seeded;
use dualbev::simulator::{gen_world, WorldKind, WorldModel};

fn random_world(seed: u64, w: usize, h: usize, density: f64) -> WorldModel {
    let mut rng = seeded(seed);
    let blocked = (0..w * h).map(|_| rng.gen_bool(density)).collect();
    WorldModel::new(w, h, 0.5, blocked).unwrap()
}

fn free_cells(world: &WorldModel) -> Vec<(usize, usize)> {
    (0..world.height())
        .flat_map(|r| (0..world.width()).map(move |c| (c, r)))
        .filter(|&(c, r)| !world.is_blocked(c, r))
        .collect()
}

/// Array-scan Dijkstra with the same move rules: 8-connected, no corner cutting.
fn quadratic_dijkstra(world: &WorldModel, source: (usize, usize)) -> Vec<f64> {
    let (w, h) = (world.width(), world.height());
    let mut dist = vec![f64::INFINITY; w * h];
    let mut done = vec![false; w * h];
    dist[source.1 * w + source.0] = 0.0;
    loop {
        let next = (0..w * h).filter(|&i| !done[i] && dist[i].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b]));
        let Some(u) = next else { break };
        done[u] = true;
        let (c, r) = ((u % w) as i64, (u / w) as i64);
        for dr in -1..=1i64 {
            for dc in -1..=1i64 {
                let (nc, nr) = (c + dc, r + dr);
                if (dc, dr) == (0, 0) || nc < 0 || nr < 0 || nc >= w as i64 || nr >= h as i64 {
                    continue;
                }
                let blocked = |cc: i64, rr: i64| world.is_blocked(cc as usize, rr as usize);
                if blocked(nc, nr) || (dc != 0 && dr != 0 && (blocked(nc, r) || blocked(c, nr))) {
                    continue;
                }
                let step = if dc != 0 && dr != 0 { 2f64.sqrt() } else { 1.0 } * world.cell_size();
                let v = nr as usize * w + nc as usize;
                dist[v] = dist[v].min(dist[u] + step);
            }
        }
    }
    dist
}

#[test]
fn distance_field_matches_quadratic_dijkstra() {
    for seed in 0..30 {
        let world = random_world(seed, 18, 14, 0.25);
        let free = free_cells(&world);
        let source = free[seed as usize % free.len()];
        let fast = DistanceField::from_cell(&world, source);
        let slow = quadratic_dijkstra(&world, source);
        for (a, b) in fast.values().iter().zip(&slow) {
            assert!(a == b || (a - b).abs() < 1e-9, "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn empty_world_distances_are_octile_and_hops_are_chebyshev() {
    let world = WorldModel::empty(25, 17, 0.5).unwrap();
    let src = (7, 4);
    let field = DistanceField::from_cell(&world, src);
    let hops = bfs_hops(&world, src);
    for r in 0..17 {
        for c in 0..25 {
            let (dx, dy) = ((c as f64 - 7.0).abs(), (r as f64 - 4.0).abs());
            let octile = (dx.max(dy) - dx.min(dy) + 2f64.sqrt() * dx.min(dy)) * 0.5;
            assert!((field.at(c, r) - octile).abs() < 1e-9);
            assert_eq!(hops[r * 25 + c], Some(dx.max(dy) as u32));
        }
    }
}

#[test]
fn reachability_agrees_between_bfs_and_dijkstra() {
    for seed in 0..20 {
        let world = random_world(100 + seed, 30, 30, 0.35);
        let free = free_cells(&world);
        let src = free[0];
        let field = DistanceField::from_cell(&world, src);
        let hops = bfs_hops(&world, src);
        for (d, h) in field.values().iter().zip(&hops) {
            assert_eq!(d.is_finite(), h.is_some());
            if let Some(h) = h {
                // every move costs between one cell and one diagonal
                assert!(*d >= *h as f64 * 0.5 - 1e-9 && *d <= *h as f64 * 0.5 * 2f64.sqrt() + 1e-9);
            }
        }
    }
}

#[test]
fn shortest_paths_are_symmetric_and_obey_the_triangle_inequality() {
    let world = gen_world(WorldKind::Scatter, 3, (40, 40), 0.5).unwrap();
    let free = free_cells(&world);
    let mut rng = seeded(8);
    let fields: Vec<((usize, usize), DistanceField)> = (0..8)
        .map(|_| {
            let s = free[rng.gen_range(0..free.len())];
            (s, DistanceField::from_cell(&world, s))
        })
        .collect();
    for (a, fa) in &fields {
        for (b, fb) in &fields {
            assert!((fa.at(b.0, b.1) - fb.at(a.0, a.1)).abs() < 1e-9 || fa.at(b.0, b.1) == fb.at(a.0, a.1));
            for (c, _) in &fields {
                assert!(fa.at(c.0, c.1) <= fa.at(b.0, b.1) + fb.at(c.0, c.1) + 1e-9);
            }
        }
    }
}

#[test]
fn temporal_distance_is_path_length_over_step() {
    let world = gen_world(WorldKind::Rooms, 2, (40, 40), 0.5).unwrap();
    let free = free_cells(&world);
    let (a, b) = (free[3], free[free.len() - 5]);
    let pa = world.cell_center(a.0, a.1);
    let pb = world.cell_center(b.0, b.1);
    let steps = oracle_temporal_distance(&world, pa, pb, 1.5, 0.5).unwrap().unwrap();
    let len = quadratic_dijkstra(&world, a)[b.1 * world.width() + b.0];
    assert!((steps - len / 0.75).abs() < 1e-9);
}

#[test]
fn hint_map_matches_brute_force_distances() {
    let world = random_world(77, 20, 15, 0.08);
    let mask = world.obstacle_mask();
    let map = synth_hint_map(&mask, 2.0).unwrap();
    let obstacles: Vec<(usize, usize)> =
        (0..15).flat_map(|r| (0..20).map(move |c| (c, r))).filter(|&(c, r)| world.is_blocked(c, r)).collect();
    for r in 0..15 {
        for c in 0..20 {
            let d = obstacles
                .iter()
                .map(|&(oc, or)| (oc as f64 - c as f64).hypot(or as f64 - r as f64))
                .fold(f64::INFINITY, f64::min)
                * 0.5;
            assert!((map.raster().get(c, r) - (-d / 2.0).exp()).abs() < 1e-12);
        }
    }
}

#[test]
fn path_score_on_a_linear_map_averages_the_samples() {
    let georef = Georef::new(0.0, 0.0, 1.0).unwrap();
    let cells = (0..50).flat_map(|_r| (0..50).map(|c| 0.01 * c as f64 + 0.1)).collect();
    let map = ProbabilityMap::new(Raster::from_cells(50, 50, georef, cells).unwrap()).unwrap();
    // pixel centers sit at c + 0.5 so the field is 0.01 * (x - 0.5) + 0.1 inside
    let path = [[5.0, 10.0], [25.0, 30.0], [45.0, 20.0]];
    let s = score_path(&map, &path);
    let xs = dualbev::global_map::resample_polyline(
        &path,
        dualbev::global_map::score_sample_count(dualbev::global_map::polyline_length(&path)),
    );
    let expect = xs.iter().map(|p| 0.01 * (p[0] - 0.5) + 0.1).sum::<f64>() / xs.len() as f64;
    assert!((s - expect).abs() < 1e-12, "{s} vs {expect}");
}

#[test]
fn batched_focal_is_the_mean_of_pointwise_terms() {
    let mut rng = seeded(12);
    let params = FocalParams { alpha: 0.25, gamma: 2.0 };
    let probs: Vec<f64> = (0..200).map(|_| rng.gen_range(0.01..0.99)).collect();
    let labels: Vec<bool> = (0..200).map(|_| rng.gen()).collect();
    let manual: f64 = probs
        .iter()
        .zip(&labels)
        .map(|(p, y)| {
            let pt = if *y { *p } else { 1.0 - p };
            focal_loss(pt, params.alpha, params.gamma).unwrap()
        })
        .sum::<f64>()
        / 200.0;
    let batched = focal_loss_batched(&probs, &labels, params).unwrap();
    assert!((manual - batched).abs() < 1e-12, "{manual} vs {batched}");
}

#[test]
fn pgm_round_trip_is_within_quantization() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.pgm");
    let mut rng = seeded(5);
    let georef = Georef::new(-3.5, 2.25, 0.25).unwrap();
    let r = Raster::from_cells(13, 9, georef, (0..117).map(|_| rng.gen::<f64>()).collect()).unwrap();
    write_pgm(&r, &path).unwrap();
    let back = read_pgm(&path).unwrap();
    assert_eq!(back.georef(), georef);
    assert_eq!((back.width(), back.height()), (13, 9));
    for (a, b) in r.cells().iter().zip(back.cells()) {
        assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
    }
}
