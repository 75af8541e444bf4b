//! Network entities: co-located BS/cloudlet sites, the delay matrix, and the
//! dense assignment/association encodings.

use serde::{Deserialize, Serialize};

/// A point in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A cloudlet co-located with a base station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub index: usize,
    pub position: Position,
    /// Number of avatars the cloudlet can host.
    pub capacity: usize,
}

/// One-way delays in ms, indexed `[cloudlet][bs]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayMatrix {
    cloudlets: usize,
    stations: usize,
    values: Vec<f64>,
}

impl DelayMatrix {
    /// Builds a matrix from rows indexed by cloudlet.
    ///
    /// Panics if the rows are ragged or any entry is negative or not finite.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let cloudlets = rows.len();
        let stations = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(cloudlets * stations);
        for row in rows {
            assert_eq!(row.len(), stations, "ragged delay matrix");
            for v in row {
                assert!(v.is_finite() && v >= 0.0, "delay must be finite and >= 0, got {v}");
                values.push(v);
            }
        }
        Self {
            cloudlets,
            stations,
            values,
        }
    }

    #[inline]
    pub fn get(&self, cloudlet: usize, bs: usize) -> f64 {
        self.values[cloudlet * self.stations + bs]
    }

    pub fn num_cloudlets(&self) -> usize {
        self.cloudlets
    }

    pub fn num_stations(&self) -> usize {
        self.stations
    }

    pub fn row(&self, cloudlet: usize) -> &[f64] {
        &self.values[cloudlet * self.stations..(cloudlet + 1) * self.stations]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Grid layout, kept so association can use the cell-containment rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridShape {
    pub rows: usize,
    pub cols: usize,
    pub cell_size_m: f64,
}

/// Sites plus the precomputed pairwise delay matrix. Immutable after
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    sites: Vec<Site>,
    bounds: (f64, f64),
    epsilon_ms_per_m: f64,
    delays: DelayMatrix,
    grid: Option<GridShape>,
}

impl Topology {
    /// `rows × cols` co-located sites at the centers of square cells.
    pub fn grid(rows: usize, cols: usize, cell_size_m: f64, epsilon_ms_per_m: f64, capacity: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "grid needs at least one cell");
        assert!(cell_size_m > 0.0, "cell size must be positive");
        let sites = (0..rows * cols)
            .map(|index| {
                let (r, c) = (index / cols, index % cols);
                Site {
                    index,
                    position: Position::new((c as f64 + 0.5) * cell_size_m, (r as f64 + 0.5) * cell_size_m),
                    capacity,
                }
            })
            .collect();
        let bounds = (cols as f64 * cell_size_m, rows as f64 * cell_size_m);
        let mut topo = Self::from_sites(sites, bounds, epsilon_ms_per_m);
        topo.grid = Some(GridShape {
            rows,
            cols,
            cell_size_m,
        });
        topo
    }

    /// Arbitrary co-located sites; association falls back to nearest site.
    pub fn from_sites(sites: Vec<Site>, bounds: (f64, f64), epsilon_ms_per_m: f64) -> Self {
        assert!(!sites.is_empty(), "topology needs at least one site");
        assert!(bounds.0 > 0.0 && bounds.1 > 0.0, "bounds must be positive");
        assert!(epsilon_ms_per_m >= 0.0, "epsilon must be >= 0");
        let rows = sites
            .iter()
            .map(|j| {
                sites
                    .iter()
                    .map(|k| epsilon_ms_per_m * j.position.distance(&k.position))
                    .collect()
            })
            .collect();
        Self {
            sites,
            bounds,
            epsilon_ms_per_m,
            delays: DelayMatrix::from_rows(rows),
            grid: None,
        }
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn epsilon_ms_per_m(&self) -> f64 {
        self.epsilon_ms_per_m
    }

    pub fn delays(&self) -> &DelayMatrix {
        &self.delays
    }

    pub fn delay(&self, cloudlet: usize, bs: usize) -> f64 {
        self.delays.get(cloudlet, bs)
    }

    pub fn grid_shape(&self) -> Option<GridShape> {
        self.grid
    }

    pub fn capacities(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.capacity).collect()
    }

    pub fn total_capacity(&self) -> usize {
        self.sites.iter().map(|s| s.capacity).sum()
    }
}

/// Cloudlet index per avatar.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Assignment(pub Vec<usize>);

impl Assignment {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn cloudlet(&self, avatar: usize) -> usize {
        self.0[avatar]
    }

    pub fn occupancy(&self, num_cloudlets: usize) -> Vec<usize> {
        let mut occ = vec![0; num_cloudlets];
        for &j in &self.0 {
            occ[j] += 1;
        }
        occ
    }

    /// One-hot and within every cloudlet's capacity.
    pub fn is_feasible(&self, capacities: &[usize]) -> bool {
        if self.0.iter().any(|&j| j >= capacities.len()) {
            return false;
        }
        self.occupancy(capacities.len())
            .iter()
            .zip(capacities)
            .all(|(occ, cap)| occ <= cap)
    }

    pub fn migrations_from(&self, previous: &Assignment) -> usize {
        self.0.iter().zip(&previous.0).filter(|(a, b)| a != b).count()
    }
}

/// BS index per UE.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Association(pub Vec<usize>);

impl Association {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bs(&self, ue: usize) -> usize {
        self.0[ue]
    }
}

/// One-way delay between UE `i`'s BS and the cloudlet hosting its avatar.
pub fn core_delay(assignment: &Assignment, association: &Association, delays: &DelayMatrix, i: usize) -> f64 {
    delays.get(assignment.cloudlet(i), association.bs(i))
}
