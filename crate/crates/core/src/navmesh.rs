//! Navigation meshes as directed graphs, and graph distance over them.
//!
//! Each traversable area of a map is a node; a connection `a -> b` says a
//! player standing on `a` can move onto `b`. Connections are one-way, so
//! distance is not symmetric (dropping off a ledge is one edge, climbing back
//! up may take a long detour).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BombSite, Vec3};

pub const TAG_BOMBSITE_A: &str = "bombsite_A";
pub const TAG_BOMBSITE_B: &str = "bombsite_B";

#[derive(Debug, Error)]
pub enum NavError {
    #[error("connection {from} -> {to} references missing area {missing}")]
    DanglingConnection { from: u32, to: u32, missing: u32 },
    #[error("area id {0} is defined more than once")]
    DuplicateArea(u32),
    #[error("unknown area {0}")]
    UnknownArea(u32),
    #[error("unknown area name {0:?}")]
    UnknownAreaName(String),
    #[error("no area is tagged as bombsite {0}")]
    UntaggedSite(BombSite),
    #[error("reading navmesh: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing navmesh JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Footprint {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavArea {
    pub area_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub centroid: Vec3,
    pub footprint: Footprint,
    /// Surface height at the footprint corners, in the order
    /// (min_x,min_y), (max_x,min_y), (max_x,max_y), (min_x,max_y).
    pub corner_z: [f64; 4],
    #[serde(default)]
    pub tags: Vec<String>,
}

impl NavArea {
    /// Bilinear interpolation of the corner heights at `(x, y)`.
    pub fn surface_z(&self, x: f64, y: f64) -> f64 {
        let fp = &self.footprint;
        let w = fp.max_x - fp.min_x;
        let h = fp.max_y - fp.min_y;
        let u = if w > 0.0 { ((x - fp.min_x) / w).clamp(0.0, 1.0) } else { 0.0 };
        let v = if h > 0.0 { ((y - fp.min_y) / h).clamp(0.0, 1.0) } else { 0.0 };
        let [z00, z10, z11, z01] = self.corner_z;
        z00 * (1.0 - u) * (1.0 - v) + z10 * u * (1.0 - v) + z11 * u * v + z01 * (1.0 - u) * v
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavMesh {
    pub map_name: String,
    pub areas: Vec<NavArea>,
    pub connections: Vec<(u32, u32)>,
}

pub fn site_tag(site: BombSite) -> &'static str {
    match site {
        BombSite::A => TAG_BOMBSITE_A,
        BombSite::B => TAG_BOMBSITE_B,
    }
}

impl NavMesh {
    pub fn from_json(bytes: &[u8]) -> Result<Self, NavError> {
        Ok(serde_json::from_slice(bytes)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NavError> {
        Self::from_json(&fs::read(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("navmesh serializes")
    }

    pub fn has_site(&self, site: BombSite) -> bool {
        self.areas.iter().any(|a| a.has_tag(site_tag(site)))
    }
}

/// Finds the area under `position`: among areas whose footprint contains
/// `(x, y)`, the one whose surface is vertically closest. Ties go to the
/// lower area id.
pub fn locate_area(mesh: &NavMesh, position: &Vec3) -> Option<u32> {
    locate_in(&mesh.areas, position).map(|i| mesh.areas[i].area_id)
}

fn locate_in(areas: &[NavArea], position: &Vec3) -> Option<usize> {
    let mut best: Option<(f64, u32, usize)> = None;
    for (i, a) in areas.iter().enumerate() {
        if !a.footprint.contains(position.x, position.y) {
            continue;
        }
        let dz = (position.z - a.surface_z(position.x, position.y)).abs();
        let better = match best {
            None => true,
            Some((bz, bid, _)) => dz < bz || (dz == bz && a.area_id < bid),
        };
        if better {
            best = Some((dz, a.area_id, i));
        }
    }
    best.map(|(_, _, i)| i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Every edge costs 1; distances count traversed areas.
    #[default]
    Unit,
    /// Edge cost is the 3D distance between area centroids.
    Euclidean,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    to: usize,
    weight: f64,
}

/// Immutable directed graph over the areas of a [`NavMesh`].
#[derive(Debug, Clone)]
pub struct NavGraph {
    areas: Vec<NavArea>,
    index: HashMap<u32, usize>,
    out_edges: Vec<Vec<Edge>>,
    weighting: Weighting,
    edge_count: usize,
    site_tables: [Option<Vec<f64>>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphPath {
    /// Total path weight; `f64::INFINITY` when the target is unreachable.
    pub distance: f64,
    /// Area ids from source to target inclusive; empty when unreachable.
    pub path: Vec<u32>,
}

impl GraphPath {
    pub fn is_reachable(&self) -> bool {
        self.distance.is_finite()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    priority: f64,
    cost: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    // Min-heap on priority, then on node index for deterministic expansion.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn build_graph(mesh: &NavMesh, weighting: Weighting) -> Result<NavGraph, NavError> {
    let mut index = HashMap::with_capacity(mesh.areas.len());
    for (i, a) in mesh.areas.iter().enumerate() {
        if index.insert(a.area_id, i).is_some() {
            return Err(NavError::DuplicateArea(a.area_id));
        }
    }
    let mut out_edges = vec![Vec::new(); mesh.areas.len()];
    for &(from, to) in &mesh.connections {
        let lookup = |id: u32| {
            index
                .get(&id)
                .copied()
                .ok_or(NavError::DanglingConnection { from, to, missing: id })
        };
        let (a, b) = (lookup(from)?, lookup(to)?);
        let weight = match weighting {
            Weighting::Unit => 1.0,
            Weighting::Euclidean => mesh.areas[a].centroid.distance(&mesh.areas[b].centroid),
        };
        out_edges[a].push(Edge { to: b, weight });
    }
    let mut graph = NavGraph {
        areas: mesh.areas.clone(),
        index,
        out_edges,
        weighting,
        edge_count: mesh.connections.len(),
        site_tables: [None, None],
    };
    graph.site_tables = [
        graph.build_site_table(BombSite::A),
        graph.build_site_table(BombSite::B),
    ];
    Ok(graph)
}

impl NavGraph {
    pub fn node_count(&self) -> usize {
        self.areas.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn areas(&self) -> &[NavArea] {
        &self.areas
    }

    pub fn contains_area(&self, area_id: u32) -> bool {
        self.index.contains_key(&area_id)
    }

    pub fn area(&self, area_id: u32) -> Option<&NavArea> {
        self.index.get(&area_id).map(|&i| &self.areas[i])
    }

    /// Resolves an area by numeric id or by its `name` label.
    pub fn resolve(&self, key: &str) -> Result<u32, NavError> {
        if let Some(a) = self.areas.iter().find(|a| a.name.as_deref() == Some(key)) {
            return Ok(a.area_id);
        }
        match key.parse::<u32>() {
            Ok(id) if self.contains_area(id) => Ok(id),
            Ok(id) => Err(NavError::UnknownArea(id)),
            Err(_) => Err(NavError::UnknownAreaName(key.to_string())),
        }
    }

    pub fn locate(&self, position: &Vec3) -> Option<u32> {
        locate_in(&self.areas, position).map(|i| self.areas[i].area_id)
    }

    /// Out-neighbours of an area with their edge weights.
    pub fn neighbours(&self, area_id: u32) -> Result<Vec<(u32, f64)>, NavError> {
        let i = self.node(area_id)?;
        Ok(self.out_edges[i]
            .iter()
            .map(|e| (self.areas[e.to].area_id, e.weight))
            .collect())
    }

    fn node(&self, area_id: u32) -> Result<usize, NavError> {
        self.index.get(&area_id).copied().ok_or(NavError::UnknownArea(area_id))
    }

    fn heuristic(&self, node: usize, goal: usize) -> f64 {
        match self.weighting {
            Weighting::Unit => 0.0,
            Weighting::Euclidean => self.areas[node].centroid.distance(&self.areas[goal].centroid),
        }
    }

    /// Shortest directed path by A*. The straight-line centroid distance is
    /// an admissible (and consistent) heuristic under euclidean weighting; unit
    /// weighting uses the zero heuristic.
    pub fn graph_distance(&self, from: u32, to: u32) -> Result<GraphPath, NavError> {
        let start = self.node(from)?;
        let goal = self.node(to)?;
        let n = self.areas.len();
        let mut best = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut heap = BinaryHeap::new();
        best[start] = 0.0;
        heap.push(Frontier {
            priority: self.heuristic(start, goal),
            cost: 0.0,
            node: start,
        });
        while let Some(Frontier { cost, node, .. }) = heap.pop() {
            if closed[node] {
                continue;
            }
            if node == goal {
                let mut path = vec![self.areas[goal].area_id];
                let mut cur = goal;
                while cur != start {
                    cur = parent[cur];
                    path.push(self.areas[cur].area_id);
                }
                path.reverse();
                return Ok(GraphPath { distance: cost, path });
            }
            closed[node] = true;
            for e in &self.out_edges[node] {
                let next = cost + e.weight;
                if next < best[e.to] {
                    best[e.to] = next;
                    parent[e.to] = node;
                    heap.push(Frontier {
                        priority: next + self.heuristic(e.to, goal),
                        cost: next,
                        node: e.to,
                    });
                }
            }
        }
        Ok(GraphPath {
            distance: f64::INFINITY,
            path: Vec::new(),
        })
    }

    /// Distance from every area to the nearest area tagged with `site`,
    /// via a multi-source search over reversed edges.
    fn build_site_table(&self, site: BombSite) -> Option<Vec<f64>> {
        let tag = site_tag(site);
        let n = self.areas.len();
        let mut reverse: Vec<Vec<Edge>> = vec![Vec::new(); n];
        for (from, edges) in self.out_edges.iter().enumerate() {
            for e in edges {
                reverse[e.to].push(Edge { to: from, weight: e.weight });
            }
        }
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        for (i, a) in self.areas.iter().enumerate() {
            if a.has_tag(tag) {
                dist[i] = 0.0;
                heap.push(Frontier {
                    priority: 0.0,
                    cost: 0.0,
                    node: i,
                });
            }
        }
        if heap.is_empty() {
            return None;
        }
        while let Some(Frontier { cost, node, .. }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for e in &reverse[node] {
                let next = cost + e.weight;
                if next < dist[e.to] {
                    dist[e.to] = next;
                    heap.push(Frontier {
                        priority: next,
                        cost: next,
                        node: e.to,
                    });
                }
            }
        }
        Some(dist)
    }

    fn site_table(&self, site: BombSite) -> Option<&Vec<f64>> {
        self.site_tables[match site {
            BombSite::A => 0,
            BombSite::B => 1,
        }]
        .as_ref()
    }

    /// Minimum graph distance from `from` to any area tagged with `site`.
    pub fn distance_to_site(&self, from: u32, site: BombSite) -> Result<f64, NavError> {
        let i = self.node(from)?;
        let table = self.site_table(site).ok_or(NavError::UntaggedSite(site))?;
        Ok(table[i])
    }

    /// Infallible lookup used during replay: unknown areas and untagged sites
    /// read as unreachable.
    pub(crate) fn site_distance(&self, area_id: u32, site: BombSite) -> f64 {
        match (self.index.get(&area_id), self.site_table(site)) {
            (Some(&i), Some(t)) => t[i],
            _ => f64::INFINITY,
        }
    }
}

pub fn graph_distance(graph: &NavGraph, from: u32, to: u32) -> Result<GraphPath, NavError> {
    graph.graph_distance(from, to)
}

pub fn distance_to_site(graph: &NavGraph, from: u32, site: BombSite) -> Result<f64, NavError> {
    graph.distance_to_site(from, site)
}
