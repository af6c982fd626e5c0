//! Cell layout, CPE placement, incumbent stations and the neighbour graph.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::rng::{SeedTree, Stream};
use super::{CellId, ChannelId, ModelError};
use crate::config::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: CellId,
    pub center: Point,
    pub radius: f64,
    pub cpes: Vec<Point>,
    /// Shadowing group of every sensor slot (BS first, then CPEs).
    pub shadow_groups: Vec<usize>,
}

impl Cell {
    /// The base station sits at the cell center.
    pub fn bs_position(&self) -> Point {
        self.center
    }

    /// Position of sensor slot `slot` (0 = BS).
    pub fn sensor_position(&self, slot: usize) -> Point {
        if slot == 0 {
            self.center
        } else {
            self.cpes[slot - 1]
        }
    }

    pub fn num_shadow_groups(&self) -> usize {
        self.shadow_groups.iter().max().map_or(0, |g| g + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncumbentStation {
    pub position: Point,
    pub channel: ChannelId,
    pub coverage_radius: f64,
    /// Watts; `None` means "use the configured transmit SNR".
    pub tx_power: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub cells: Vec<Cell>,
    /// Sorted neighbour list of every cell.
    pub neighbors: Vec<Vec<CellId>>,
    pub incumbents: Vec<IncumbentStation>,
}

impl Topology {
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn are_neighbors(&self, a: CellId, b: CellId) -> bool {
        self.neighbors[a.0].binary_search(&b).is_ok()
    }

    /// Whether the station's footprint intersects the cell's disk.
    pub fn covers(&self, station: &IncumbentStation, cell: CellId) -> bool {
        let c = &self.cells[cell.0];
        station.position.dist(c.center) <= station.coverage_radius + c.radius
    }
}

/// Deterministic packed layout: rows of `ceil(sqrt(n))` touching disks, odd
/// rows shifted by one radius.
pub fn hex_centers(num_cells: usize, radius: f64) -> Vec<Point> {
    let cols = (num_cells as f64).sqrt().ceil().max(1.0) as usize;
    let h = 3f64.sqrt() * radius;
    (0..num_cells)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let shift = if r % 2 == 1 { radius } else { 0.0 };
            Point::new(2.0 * radius * c as f64 + shift, h * r as f64)
        })
        .collect()
}

/// Cells whose disks overlap or touch.
pub fn neighbor_graph(centers: &[Point], radius: f64) -> Vec<Vec<CellId>> {
    let reach = 2.0 * radius * (1.0 + 1e-9);
    (0..centers.len())
        .map(|a| {
            (0..centers.len())
                .filter(|&b| b != a && centers[a].dist(centers[b]) <= reach)
                .map(CellId)
                .collect()
        })
        .collect()
}

/// Greedy grouping: each point joins the first earlier group whose leader lies
/// within `corr_distance`, otherwise it starts a new group.
pub fn correlation_groups(points: &[Point], corr_distance: f64) -> Vec<usize> {
    let mut leaders: Vec<Point> = Vec::new();
    points
        .iter()
        .map(|&p| match leaders.iter().position(|&l| l.dist(p) <= corr_distance) {
            Some(g) => g,
            None => {
                leaders.push(p);
                leaders.len() - 1
            }
        })
        .collect()
}

fn uniform_in_disk(rng: &mut ChaCha8Rng, center: Point, radius: f64) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    Point::new(center.x + r * theta.cos(), center.y + r * theta.sin())
}

pub fn build_topology(cfg: &ScenarioConfig, seeds: &SeedTree) -> Result<Topology, ModelError> {
    let radius = cfg.topology.cell_radius;
    if !(radius > 0.0) {
        return Err(ModelError::NonPositiveRadius(radius));
    }
    if cfg.topology.cpes_per_cell == 0 {
        return Err(ModelError::NoCpes);
    }
    let centers = hex_centers(cfg.num_cells, radius);
    let neighbors = neighbor_graph(&centers, radius);

    let cells = centers
        .iter()
        .enumerate()
        .map(|(j, &center)| {
            let mut rng = seeds.keyed(Stream::Topology, &[1, j as u64]);
            let cpes: Vec<Point> = (0..cfg.topology.cpes_per_cell)
                .map(|_| uniform_in_disk(&mut rng, center, radius))
                .collect();
            let mut sensors = Vec::with_capacity(cpes.len() + 1);
            sensors.push(center);
            sensors.extend_from_slice(&cpes);
            let shadow_groups = correlation_groups(&sensors, cfg.radio.shadowing_corr_distance);
            Cell {
                id: CellId(j),
                center,
                radius,
                cpes,
                shadow_groups,
            }
        })
        .collect();

    let incumbents = if cfg.incumbents.stations.is_empty() {
        random_incumbents(cfg, &centers, radius, seeds)
    } else {
        let mut out = Vec::with_capacity(cfg.incumbents.stations.len());
        for (index, s) in cfg.incumbents.stations.iter().enumerate() {
            if s.channel.0 == 0 || usize::from(s.channel.0) > cfg.num_channels {
                return Err(ModelError::ChannelOutOfRange {
                    index,
                    channel: s.channel,
                    num_channels: cfg.num_channels,
                });
            }
            out.push(IncumbentStation {
                position: Point::new(s.x, s.y),
                channel: s.channel,
                coverage_radius: s.coverage_radius,
                tx_power: s.tx_power,
            });
        }
        out
    };

    Ok(Topology {
        cells,
        neighbors,
        incumbents,
    })
}

fn random_incumbents(
    cfg: &ScenarioConfig,
    centers: &[Point],
    radius: f64,
    seeds: &SeedTree,
) -> Vec<IncumbentStation> {
    let inc = &cfg.incumbents;
    let pad = radius + inc.placement_margin;
    let min_x = centers.iter().map(|c| c.x).fold(f64::INFINITY, f64::min) - pad;
    let max_x = centers.iter().map(|c| c.x).fold(f64::NEG_INFINITY, f64::max) + pad;
    let min_y = centers.iter().map(|c| c.y).fold(f64::INFINITY, f64::min) - pad;
    let max_y = centers.iter().map(|c| c.y).fold(f64::NEG_INFINITY, f64::max) + pad;
    let mut rng = seeds.keyed(Stream::Topology, &[2]);
    // Every channel gets a station before any channel gets a second one.
    let mut channels: Vec<u16> = (0..inc.count).map(|i| (i % cfg.num_channels) as u16 + 1).collect();
    channels.shuffle(&mut rng);
    channels
        .into_iter()
        .map(|channel| {
            let x = rng.random_range(min_x..=max_x);
            let y = rng.random_range(min_y..=max_y);
            let channel = ChannelId(channel);
            let coverage_radius = if inc.coverage_radius_max > inc.coverage_radius_min {
                rng.random_range(inc.coverage_radius_min..inc.coverage_radius_max)
            } else {
                inc.coverage_radius_min
            };
            IncumbentStation {
                position: Point::new(x, y),
                channel,
                coverage_radius,
                tx_power: None,
            }
        })
        .collect()
}
