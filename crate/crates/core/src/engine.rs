//! Time-slotted simulation loop.
//!
//! Mobility and workload draw from two private RNG streams derived from the
//! seed, and neither depends on placement decisions. Runs that share a seed
//! therefore see the same UE trajectories and workloads whatever the
//! strategy or α, which is what [`run_matrix`] relies on.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ConfigError, MigrationMemory, SimConfig};
use crate::domain::{core_delay, Assignment, Association, Position, Site, Topology};
use crate::migration::{cost_coefficient, migration_time, ImpactWeights, MigrationError, MigrationParams};
use crate::mobility::{associate_all, init_ue, step_waypoint, MobilityConfig};
use crate::placement::{self, initial_placement, PlacementError, PlacementInstance, Strategy};
use crate::workload::{dirty_rate_bits_per_s, load_trace, Trace, TraceError, WorkloadGenerator};

const MOBILITY_STREAM: u64 = 1;
const WORKLOAD_STREAM: u64 = 2;

/// Slack for the PRIMAL-vs-FAR dominance check, covering the solver's
/// cost quantization.
const DOMINANCE_SLACK: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error("avatar {avatar}: {source}")]
    Migration { avatar: usize, source: MigrationError },
    #[error("loading trace: {0}")]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotMetrics {
    pub slot: usize,
    pub total_gain_ms: f64,
    pub total_cost: f64,
    pub total_profit: f64,
    pub num_migrations: usize,
    pub sum_migration_time_s: f64,
    pub mean_rtt_ms: f64,
    /// Σ one-way core delay after applying the plan.
    pub total_delay_ms: f64,
    /// Profit FAR would have scored on the same instance (PRIMAL runs only).
    pub shadow_far_profit: Option<f64>,
    /// Migrations whose duration exceeded the slot length.
    pub overlong_migrations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub avg_profit_per_slot: f64,
    pub avg_rtt_ms: f64,
    pub avg_migrations_per_slot: f64,
    pub avg_migration_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub strategy: Strategy,
    pub alpha: f64,
    pub slots: Vec<SlotMetrics>,
    pub summary: Summary,
    /// Slots where PRIMAL scored below zero or below FAR's shadow profit.
    pub dominance_violations: usize,
}

impl MetricsReport {
    fn new(strategy: Strategy, alpha: f64, slots: Vec<SlotMetrics>, dominance_violations: usize) -> Self {
        let n = slots.len().max(1) as f64;
        let migrations: usize = slots.iter().map(|s| s.num_migrations).sum();
        let time: f64 = slots.iter().map(|s| s.sum_migration_time_s).sum();
        let summary = Summary {
            avg_profit_per_slot: slots.iter().map(|s| s.total_profit).sum::<f64>() / n,
            avg_rtt_ms: slots.iter().map(|s| s.mean_rtt_ms).sum::<f64>() / n,
            avg_migrations_per_slot: migrations as f64 / n,
            avg_migration_time_s: if migrations == 0 { 0.0 } else { time / migrations as f64 },
        };
        Self {
            strategy,
            alpha,
            slots,
            summary,
            dominance_violations,
        }
    }

    /// Mean of (profit − FAR's shadow profit) over slots, when every slot
    /// carries a shadow value.
    pub fn avg_margin_over_far(&self) -> Option<f64> {
        let mut sum = 0.0;
        for s in &self.slots {
            sum += s.total_profit - s.shadow_far_profit?;
        }
        (!self.slots.is_empty()).then(|| sum / self.slots.len() as f64)
    }

    pub fn overlong_migrations(&self) -> usize {
        self.slots.iter().map(|s| s.overlong_migrations).sum()
    }
}

/// Validated configuration plus the immutable pieces shared by every run.
#[derive(Debug, Clone)]
pub struct Scenario {
    config: SimConfig,
    topology: Arc<Topology>,
    trace: Option<Arc<Trace>>,
}

pub fn build_topology(config: &SimConfig) -> Topology {
    let t = &config.topology;
    if t.sites.is_empty() {
        Topology::grid(t.rows, t.cols, t.cell_size_m, t.epsilon_ms_per_m, t.capacity)
    } else {
        let sites = t
            .sites
            .iter()
            .enumerate()
            .map(|(index, s)| Site {
                index,
                position: Position::new(s.x, s.y),
                capacity: s.capacity,
            })
            .collect();
        Topology::from_sites(sites, (t.width_m, t.height_m), t.epsilon_ms_per_m)
    }
}

impl Scenario {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let topology = Arc::new(build_topology(&config));
        let trace = if config.workload.trace_path.is_empty() {
            None
        } else {
            Some(Arc::new(load_trace(config.workload.trace_path.as_ref())?))
        };
        Ok(Self {
            config,
            topology,
            trace,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// One full simulation. Deterministic in (config, strategy, alpha).
    pub fn run(&self, strategy: Strategy, alpha: f64) -> Result<MetricsReport, SimError> {
        self.run_observed(strategy, alpha, |_, _, _| {})
    }

    /// Like [`Scenario::run`], also handing `observe` each slot's applied
    /// assignment and the association it was scored against.
    pub fn run_observed<F>(&self, strategy: Strategy, alpha: f64, mut observe: F) -> Result<MetricsReport, SimError>
    where
        F: FnMut(usize, &Assignment, &Association),
    {
        let cfg = &self.config;
        let topo = &*self.topology;
        let sim = &cfg.simulation;
        let n = sim.num_ues;
        let bounds = topo.bounds();
        let capacities = topo.capacities();
        let delays = topo.delays();
        let mobility = MobilityConfig {
            v_max: cfg.mobility.v_max_mps,
            slot_seconds: sim.slot_seconds,
        };
        let weights = ImpactWeights {
            w_net: cfg.migration.w_net,
            w_mem: cfg.migration.w_mem,
            w_disk: cfg.migration.w_disk,
            w_cpu: cfg.migration.w_cpu,
            alpha,
        };
        let spec = cfg.avatar_spec();

        let mut mob_rng = ChaCha8Rng::seed_from_u64(sim.seed);
        mob_rng.set_stream(MOBILITY_STREAM);
        let mut wl_rng = ChaCha8Rng::seed_from_u64(sim.seed);
        wl_rng.set_stream(WORKLOAD_STREAM);

        let mut ues: Vec<_> = (0..n).map(|_| init_ue(&mut mob_rng, bounds, mobility.v_max)).collect();
        let mut workloads = WorkloadGenerator::new(wl_rng, n, cfg.synthesis(), spec, self.trace.as_deref().cloned());
        let mut current: Assignment = initial_placement(&associate_all(&ues, topo), delays, &capacities)?;

        let mut kappa = vec![0.0; n];
        let mut mig_time = vec![0.0; n];
        let mut slots = Vec::with_capacity(sim.num_slots);
        let mut violations = 0;

        for slot in 0..sim.num_slots {
            for ue in ues.iter_mut() {
                *ue = step_waypoint(ue, &mut mob_rng, bounds, &mobility);
            }
            let next_assoc = associate_all(&ues, topo);

            for (i, w) in workloads.sample_slot(slot).iter().enumerate() {
                kappa[i] = cost_coefficient(w, &weights);
                let memory = match cfg.avatar.migration_memory {
                    MigrationMemory::Used => (w.u_mem * spec.mem_capacity_bits).max(spec.page_size_bits),
                    MigrationMemory::Full => spec.mem_capacity_bits,
                };
                let params = MigrationParams {
                    memory_bits: memory,
                    dirty_bits_per_s: dirty_rate_bits_per_s(
                        w.dirty_pages_per_slot,
                        spec.page_size_bits,
                        sim.slot_seconds,
                    ),
                    rate_bits_per_s: cfg.rate_bits_per_s(),
                    threshold_bits: cfg.migration.m_th_bits,
                };
                mig_time[i] = migration_time(&params).map_err(|source| SimError::Migration { avatar: i, source })?;
            }

            let instance = PlacementInstance {
                current: &current,
                next_association: &next_assoc,
                delays,
                kappa: &kappa,
                migration_time_s: &mig_time,
                capacities: &capacities,
            };
            let plan = placement::plan(strategy, &instance)?;
            debug_assert!(plan.next.is_feasible(&capacities));

            let shadow_far_profit = if strategy == Strategy::Primal {
                let far = placement::plan_far(&instance)?;
                let slack = DOMINANCE_SLACK * (1.0 + far.total_profit.abs());
                if plan.total_profit < -DOMINANCE_SLACK || plan.total_profit < far.total_profit - slack {
                    violations += 1;
                }
                Some(far.total_profit)
            } else {
                None
            };

            let overlong = plan
                .breakdowns
                .iter()
                .filter(|b| b.moved && b.migration_time_s > sim.slot_seconds)
                .count();
            let total_delay_ms: f64 = (0..n).map(|i| core_delay(&plan.next, &next_assoc, delays, i)).sum();
            slots.push(SlotMetrics {
                slot,
                total_gain_ms: plan.total_gain(),
                total_cost: plan.total_cost(),
                total_profit: plan.total_profit,
                num_migrations: plan.num_migrations(),
                sum_migration_time_s: plan.total_migration_time(),
                mean_rtt_ms: sim.rtt_factor * total_delay_ms / n as f64,
                total_delay_ms,
                shadow_far_profit,
                overlong_migrations: overlong,
            });
            observe(slot, &plan.next, &next_assoc);
            current = plan.next;
        }
        Ok(MetricsReport::new(strategy, alpha, slots, violations))
    }
}

/// Runs the configured strategy at the configured α.
pub fn run(config: &SimConfig) -> Result<MetricsReport, SimError> {
    let scenario = Scenario::new(config.clone())?;
    scenario.run(config.simulation.strategy, config.migration.alpha)
}

/// One run per (strategy, α) pair on a shared realization, in the order
/// strategies-major, alphas-minor. Runs execute in parallel.
pub fn run_matrix(base: &SimConfig, strategies: &[Strategy], alphas: &[f64]) -> Result<Vec<MetricsReport>, SimError> {
    if strategies.is_empty() || alphas.is_empty() {
        return Err(ConfigError::Invalid(vec!["strategy and alpha lists must be non-empty".into()]).into());
    }
    let scenario = Scenario::new(base.clone())?;
    let pairs: Vec<(Strategy, f64)> = strategies
        .iter()
        .flat_map(|&s| alphas.iter().map(move |&a| (s, a)))
        .collect();
    pairs.par_iter().map(|&(s, a)| scenario.run(s, a)).collect()
}
