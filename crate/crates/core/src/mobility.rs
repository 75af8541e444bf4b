//! Random waypoint movement and per-slot BS association.

use rand::Rng;

use crate::domain::{Association, Position, Topology};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeState {
    pub position: Position,
    pub waypoint: Position,
    /// Speed on the current leg, in (0, v_max].
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityConfig {
    pub v_max: f64,
    pub slot_seconds: f64,
}

fn uniform_point<R: Rng + ?Sized>(rng: &mut R, bounds: (f64, f64)) -> Position {
    Position::new(rng.random_range(0.0..=bounds.0), rng.random_range(0.0..=bounds.1))
}

/// Uniform in (0, v_max]. Zero is excluded so that a leg always ends.
fn leg_speed<R: Rng + ?Sized>(rng: &mut R, v_max: f64) -> f64 {
    v_max * (1.0 - rng.random::<f64>())
}

pub fn init_ue<R: Rng + ?Sized>(rng: &mut R, bounds: (f64, f64), v_max: f64) -> UeState {
    let position = uniform_point(rng, bounds);
    let waypoint = uniform_point(rng, bounds);
    UeState {
        position,
        waypoint,
        speed: leg_speed(rng, v_max),
    }
}

/// Advances one UE for a whole slot. Arriving at a waypoint draws a new
/// waypoint and speed and spends the rest of the slot on the new leg. No
/// pause time.
pub fn step_waypoint<R: Rng + ?Sized>(
    state: &UeState,
    rng: &mut R,
    bounds: (f64, f64),
    config: &MobilityConfig,
) -> UeState {
    let mut s = *state;
    let mut remaining = config.slot_seconds;
    while remaining > 0.0 {
        let dist = s.position.distance(&s.waypoint);
        let reach = s.speed * remaining;
        if dist <= reach {
            s.position = s.waypoint;
            remaining -= dist / s.speed;
            s.waypoint = uniform_point(rng, bounds);
            s.speed = leg_speed(rng, config.v_max);
        } else {
            let f = reach / dist;
            s.position.x += (s.waypoint.x - s.position.x) * f;
            s.position.y += (s.waypoint.y - s.position.y) * f;
            remaining = 0.0;
        }
    }
    s.position.x = s.position.x.clamp(0.0, bounds.0);
    s.position.y = s.position.y.clamp(0.0, bounds.1);
    s
}

/// Cell index along one axis. A point on a shared edge goes to the lower cell.
fn cell_along(coord: f64, cell: f64, count: usize) -> usize {
    let scaled = coord / cell;
    let mut idx = scaled.floor() as isize;
    if idx > 0 && scaled == scaled.floor() {
        idx -= 1;
    }
    idx.clamp(0, count as isize - 1) as usize
}

/// BS serving `position`: the containing grid cell, or the nearest site
/// (lowest index on ties) for non-grid topologies.
pub fn associate(position: &Position, topology: &Topology) -> usize {
    if let Some(g) = topology.grid_shape() {
        let col = cell_along(position.x, g.cell_size_m, g.cols);
        let row = cell_along(position.y, g.cell_size_m, g.rows);
        return row * g.cols + col;
    }
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for site in topology.sites() {
        let d = site.position.distance(position);
        if d < best_d {
            best = site.index;
            best_d = d;
        }
    }
    best
}

pub fn associate_all(ues: &[UeState], topology: &Topology) -> Association {
    Association(ues.iter().map(|u| associate(&u.position, topology)).collect())
}
