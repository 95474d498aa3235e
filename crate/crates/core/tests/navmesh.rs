mod common;

use std::collections::VecDeque;

use common::fixture;
use csgo_wpa::model::{BombSite, Vec3};
use csgo_wpa::navmesh::{
    build_graph, distance_to_site, graph_distance, locate_area, Footprint, NavArea, NavError, NavGraph, NavMesh,
    Weighting,
};
use petgraph::graph::DiGraph;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn load(name: &str, weighting: Weighting) -> NavGraph {
    build_graph(&NavMesh::load(fixture(name)).unwrap(), weighting).unwrap()
}

fn area(id: u32, c: Vec3, tags: &[&str]) -> NavArea {
    NavArea {
        area_id: id,
        name: None,
        centroid: c,
        footprint: Footprint {
            min_x: c.x - 10.0,
            min_y: c.y - 10.0,
            max_x: c.x + 10.0,
            max_y: c.y + 10.0,
        },
        corner_z: [c.z; 4],
        tags: tags.iter().map(|t| t.to_string()).collect(),
    }
}

fn random_mesh(rng: &mut ChaCha8Rng, max_nodes: usize) -> NavMesh {
    let n = rng.gen_range(2..=max_nodes);
    let density = rng.gen_range(0.03..0.25);
    let areas = (0..n as u32)
        .map(|i| {
            let c = Vec3::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0), rng.gen_range(0.0..200.0));
            area(i + 100, c, &[])
        })
        .collect();
    let mut connections = Vec::new();
    for a in 0..n as u32 {
        for b in 0..n as u32 {
            if a != b && rng.gen_bool(density) {
                connections.push((a + 100, b + 100));
            }
        }
    }
    NavMesh {
        map_name: "random".into(),
        areas,
        connections,
    }
}

fn bfs_oracle(mesh: &NavMesh, from: u32) -> Vec<f64> {
    let idx = |id: u32| mesh.areas.iter().position(|a| a.area_id == id).unwrap();
    let mut dist = vec![f64::INFINITY; mesh.areas.len()];
    let mut queue = VecDeque::from([idx(from)]);
    dist[idx(from)] = 0.0;
    while let Some(u) = queue.pop_front() {
        for &(a, b) in &mesh.connections {
            if idx(a) == u && dist[idx(b)].is_infinite() {
                dist[idx(b)] = dist[u] + 1.0;
                queue.push_back(idx(b));
            }
        }
    }
    dist
}

fn dijkstra_oracle(mesh: &NavMesh, from: u32) -> Vec<f64> {
    let mut g = DiGraph::<(), f64>::new();
    let nodes: Vec<_> = mesh.areas.iter().map(|_| g.add_node(())).collect();
    let idx = |id: u32| mesh.areas.iter().position(|a| a.area_id == id).unwrap();
    for &(a, b) in &mesh.connections {
        let w = mesh.areas[idx(a)].centroid.distance(&mesh.areas[idx(b)].centroid);
        g.add_edge(nodes[idx(a)], nodes[idx(b)], w);
    }
    let d = petgraph::algo::dijkstra(&g, nodes[idx(from)], None, |e| *e.weight());
    nodes.iter().map(|n| d.get(n).copied().unwrap_or(f64::INFINITY)).collect()
}

fn close(a: f64, b: f64) -> bool {
    (a.is_infinite() && b.is_infinite()) || (a - b).abs() <= 1e-9 * a.abs().max(1.0)
}

#[test]
fn ledge_drop_is_asymmetric() {
    let g = load("ledge.json", Weighting::Unit);
    let (b, c) = (g.resolve("B").unwrap(), g.resolve("C").unwrap());
    let bc = graph_distance(&g, b, c).unwrap();
    let cb = graph_distance(&g, c, b).unwrap();
    assert!(bc.is_reachable());
    assert!(bc.distance < cb.distance, "d(B,C) = {} vs d(C,B) = {}", bc.distance, cb.distance);
    assert_eq!(bc.path, vec![b, c]);
    assert_eq!(*cb.path.first().unwrap(), c);
    assert_eq!(*cb.path.last().unwrap(), b);
    assert_eq!(cb.distance, (cb.path.len() - 1) as f64);
}

#[test]
fn forty_area_fixture_counts() {
    let mesh = NavMesh::load(fixture("mesh40.json")).unwrap();
    let g = build_graph(&mesh, Weighting::Unit).unwrap();
    assert_eq!(g.node_count(), 40);
    assert_eq!(g.edge_count(), 130);
}

#[test]
fn site_distance_is_minimum_over_tagged_areas() {
    let mesh = NavMesh::load(fixture("mesh40.json")).unwrap();
    for weighting in [Weighting::Unit, Weighting::Euclidean] {
        let g = build_graph(&mesh, weighting).unwrap();
        for site in [BombSite::A, BombSite::B] {
            let tag = csgo_wpa::navmesh::site_tag(site);
            for from in [17, 1, 40] {
                let oracle = mesh
                    .areas
                    .iter()
                    .filter(|a| a.has_tag(tag))
                    .map(|a| graph_distance(&g, from, a.area_id).unwrap().distance)
                    .fold(f64::INFINITY, f64::min);
                assert!(close(distance_to_site(&g, from, site).unwrap(), oracle), "{from} -> {site} under {weighting:?}");
            }
        }
    }
    let g = build_graph(&mesh, Weighting::Unit).unwrap();
    // area 17 (row 2, column 0) reaches site B area 25 straight down
    assert_eq!(distance_to_site(&g, 17, BombSite::B).unwrap(), 1.0);
    assert_eq!(distance_to_site(&g, 7, BombSite::A).unwrap(), 0.0);
}

#[test]
fn unreachable_site_is_infinite() {
    let mesh = NavMesh {
        map_name: "split".into(),
        areas: vec![
            area(1, Vec3::new(0.0, 0.0, 0.0), &["bombsite_A"]),
            area(2, Vec3::new(100.0, 0.0, 0.0), &[]),
            area(3, Vec3::new(500.0, 0.0, 0.0), &["bombsite_B"]),
        ],
        connections: vec![(1, 2), (2, 1)],
    };
    let g = build_graph(&mesh, Weighting::Unit).unwrap();
    assert_eq!(distance_to_site(&g, 2, BombSite::B).unwrap(), f64::INFINITY);
    assert!(graph_distance(&g, 1, 3).unwrap().path.is_empty());
    assert_eq!(distance_to_site(&g, 2, BombSite::A).unwrap(), 1.0);
}

#[test]
fn untagged_site_is_an_error() {
    let g = load("ledge.json", Weighting::Unit);
    assert!(distance_to_site(&g, 1, BombSite::A).is_ok());
    let mesh = NavMesh {
        map_name: "bare".into(),
        areas: vec![area(1, Vec3::default(), &[])],
        connections: vec![],
    };
    let g = build_graph(&mesh, Weighting::Unit).unwrap();
    assert!(matches!(distance_to_site(&g, 1, BombSite::B), Err(NavError::UntaggedSite(BombSite::B))));
}

#[test]
fn stacked_areas_resolve_by_height() {
    // a bridge at z = 200 over a tunnel at z = 0 sharing a footprint
    let mut bridge = area(1, Vec3::new(0.0, 0.0, 200.0), &[]);
    let tunnel = area(2, Vec3::new(0.0, 0.0, 0.0), &[]);
    bridge.footprint = tunnel.footprint;
    let mesh = NavMesh {
        map_name: "stack".into(),
        areas: vec![bridge, tunnel],
        connections: vec![],
    };
    assert_eq!(locate_area(&mesh, &Vec3::new(1.0, 1.0, 20.0)), Some(2));
    assert_eq!(locate_area(&mesh, &Vec3::new(1.0, 1.0, 180.0)), Some(1));
    assert_eq!(locate_area(&mesh, &Vec3::new(0.0, 0.0, 200.0)), Some(1));
    assert_eq!(locate_area(&mesh, &Vec3::new(50.0, 50.0, 0.0)), None);
}

#[test]
fn random_graphs_match_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = 0;
    for _ in 0..50 {
        let mesh = random_mesh(&mut rng, 30);
        let unit = build_graph(&mesh, Weighting::Unit).unwrap();
        let eucl = build_graph(&mesh, Weighting::Euclidean).unwrap();
        for (i, a) in mesh.areas.iter().enumerate() {
            let bfs = bfs_oracle(&mesh, a.area_id);
            let dij = dijkstra_oracle(&mesh, a.area_id);
            for (j, b) in mesh.areas.iter().enumerate() {
                let u = graph_distance(&unit, a.area_id, b.area_id).unwrap().distance;
                let e = graph_distance(&eucl, a.area_id, b.area_id).unwrap();
                mismatches += !close(u, bfs[j]) as usize + !close(e.distance, dij[j]) as usize;
                // euclidean heuristic admissibility: straight line never exceeds the path
                if e.is_reachable() {
                    assert!(a.centroid.distance(&b.centroid) <= e.distance + 1e-9, "{i} -> {j}");
                }
            }
        }
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn symmetric_meshes_have_symmetric_distances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let mut mesh = random_mesh(&mut rng, 20);
        let reversed: Vec<_> = mesh.connections.iter().map(|&(a, b)| (b, a)).collect();
        mesh.connections.extend(reversed);
        mesh.connections.sort_unstable();
        mesh.connections.dedup();
        let g = build_graph(&mesh, Weighting::Euclidean).unwrap();
        for a in &mesh.areas {
            for b in &mesh.areas {
                let ab = graph_distance(&g, a.area_id, b.area_id).unwrap().distance;
                let ba = graph_distance(&g, b.area_id, a.area_id).unwrap().distance;
                assert!(close(ab, ba));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn triangle_inequality(seed in any::<u64>(), euclidean in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = random_mesh(&mut rng, 12);
        let g = build_graph(&mesh, if euclidean { Weighting::Euclidean } else { Weighting::Unit }).unwrap();
        let ids: Vec<u32> = mesh.areas.iter().map(|a| a.area_id).collect();
        let d = |a: u32, b: u32| graph_distance(&g, a, b).unwrap().distance;
        for &a in &ids {
            prop_assert_eq!(d(a, a), 0.0);
            for &b in &ids {
                for &c in &ids {
                    prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-9);
                }
            }
        }
    }
}
