//! Per-slot placement strategies.
//!
//! * [`plan_primal`]: exact profit maximization under capacity constraints.
//!   With binary placement variables the quadratic terms collapse
//!   (x² = x), so the objective is linear in the next assignment and the
//!   feasible set is a transportation polytope; [`exchange`] solves it
//!   exactly by minimum-cost flow.
//! * [`plan_far`]: greedy minimum-delay re-placement, blind to migration cost.
//! * [`plan_static`]: never migrate.
//! * [`plan_bruteforce`]: enumeration oracle for small instances.

pub mod exchange;
pub mod io;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{Assignment, Association, DelayMatrix};
use crate::migration::ProfitBreakdown;

pub use exchange::ValueMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlacementError {
    #[error("insufficient capacity: {avatars} avatars but only {capacity} slots")]
    InsufficientCapacity { avatars: usize, capacity: usize },
    #[error("instance too large for enumeration: {avatars} avatars × {cloudlets} cloudlets (limit 8 × 4)")]
    InstanceTooLarge { avatars: usize, cloudlets: usize },
    #[error("current assignment violates capacity or index range")]
    InfeasibleCurrent,
    #[error("instance vectors disagree in length")]
    ShapeMismatch,
    #[error("placement value {0} cannot be represented")]
    ValueOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Primal,
    Far,
    Static,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Primal, Strategy::Far, Strategy::Static];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Primal => "primal",
            Strategy::Far => "far",
            Strategy::Static => "static",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "primal" => Ok(Strategy::Primal),
            "far" => Ok(Strategy::Far),
            "static" => Ok(Strategy::Static),
            other => Err(format!("unknown strategy `{other}` (expected primal, far or static)")),
        }
    }
}

/// Everything a planner needs for one slot.
#[derive(Debug, Clone, Copy)]
pub struct PlacementInstance<'a> {
    /// x^t
    pub current: &'a Assignment,
    /// y^{t+1}
    pub next_association: &'a Association,
    pub delays: &'a DelayMatrix,
    pub kappa: &'a [f64],
    pub migration_time_s: &'a [f64],
    pub capacities: &'a [usize],
}

impl PlacementInstance<'_> {
    pub fn num_avatars(&self) -> usize {
        self.current.len()
    }

    pub fn num_cloudlets(&self) -> usize {
        self.capacities.len()
    }

    /// κ_i · T_i^mig, the cost avatar `i` pays for any move.
    pub fn kappa_t(&self, i: usize) -> f64 {
        self.kappa[i] * self.migration_time_s[i]
    }

    fn check(&self) -> Result<(), PlacementError> {
        let n = self.num_avatars();
        if self.next_association.len() != n
            || self.kappa.len() != n
            || self.migration_time_s.len() != n
            || self.delays.num_cloudlets() != self.num_cloudlets()
        {
            return Err(PlacementError::ShapeMismatch);
        }
        let capacity: usize = self.capacities.iter().sum();
        if capacity < n {
            return Err(PlacementError::InsufficientCapacity { avatars: n, capacity });
        }
        if !self.current.is_feasible(self.capacities) {
            return Err(PlacementError::InfeasibleCurrent);
        }
        Ok(())
    }

    pub fn values(&self) -> ValueMatrix {
        ValueMatrix::from_fn(self.num_avatars(), self.num_cloudlets(), |i, j| {
            per_avatar_value(self, i, j)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementPlan {
    /// x^{t+1}
    pub next: Assignment,
    pub breakdowns: Vec<ProfitBreakdown>,
    pub total_profit: f64,
}

impl PlacementPlan {
    pub fn num_migrations(&self) -> usize {
        self.breakdowns.iter().filter(|b| b.moved).count()
    }

    pub fn total_gain(&self) -> f64 {
        self.breakdowns.iter().map(|b| b.gain_ms).sum()
    }

    pub fn total_cost(&self) -> f64 {
        self.breakdowns.iter().map(|b| b.cost).sum()
    }

    pub fn total_migration_time(&self) -> f64 {
        self.breakdowns.iter().map(|b| b.migration_time_s).sum()
    }
}

/// Avatar `i`'s profit at cloudlet `j`, up to a constant that does not
/// depend on `j`: −d(j, k(i)) − κ_i·T_i·[j ≠ current(i)].
pub fn per_avatar_value(instance: &PlacementInstance<'_>, i: usize, j: usize) -> f64 {
    let delay = instance.delays.get(j, instance.next_association.bs(i));
    if j == instance.current.cloudlet(i) {
        -delay
    } else {
        -delay - instance.kappa_t(i)
    }
}

/// Gain, cost and profit of moving from x^t to `next`, scored at y^{t+1}.
pub fn score(instance: &PlacementInstance<'_>, next: Assignment) -> PlacementPlan {
    let breakdowns: Vec<ProfitBreakdown> = (0..instance.num_avatars())
        .map(|i| {
            ProfitBreakdown::evaluate(
                instance.current.cloudlet(i),
                next.cloudlet(i),
                instance.next_association.bs(i),
                instance.delays,
                instance.kappa[i],
                instance.migration_time_s[i],
            )
        })
        .collect();
    let mut plan = PlacementPlan {
        next,
        breakdowns,
        total_profit: 0.0,
    };
    // Defined from the two sums so that profit = gain − cost holds exactly
    // at the plan level too.
    plan.total_profit = plan.total_gain() - plan.total_cost();
    plan
}

pub fn plan(strategy: Strategy, instance: &PlacementInstance<'_>) -> Result<PlacementPlan, PlacementError> {
    match strategy {
        Strategy::Primal => plan_primal(instance),
        Strategy::Far => plan_far(instance),
        Strategy::Static => plan_static(instance),
    }
}

pub fn plan_primal(instance: &PlacementInstance<'_>) -> Result<PlacementPlan, PlacementError> {
    instance.check()?;
    let next = exchange::maximize(&instance.values(), &instance.current.0, instance.capacities)?;
    Ok(score(instance, Assignment(next)))
}

/// Greedy nearest-available placement in ascending avatar order. Ties go to
/// `preferred[i]` when given, then to the lowest cloudlet index.
fn greedy_nearest(
    stations: &Association,
    delays: &DelayMatrix,
    capacities: &[usize],
    preferred: Option<&Assignment>,
) -> Result<Assignment, PlacementError> {
    let n = stations.len();
    let capacity: usize = capacities.iter().sum();
    if capacity < n {
        return Err(PlacementError::InsufficientCapacity { avatars: n, capacity });
    }
    let mut room = capacities.to_vec();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let k = stations.bs(i);
        let mut best: Option<usize> = preferred.map(|p| p.cloudlet(i)).filter(|&j| room[j] > 0);
        for (j, &free) in room.iter().enumerate() {
            if free == 0 {
                continue;
            }
            match best {
                Some(b) if delays.get(j, k) >= delays.get(b, k) => {}
                _ => best = Some(j),
            }
        }
        let j = best.expect("capacity checked above");
        room[j] -= 1;
        out.push(j);
    }
    Ok(Assignment(out))
}

pub fn plan_far(instance: &PlacementInstance<'_>) -> Result<PlacementPlan, PlacementError> {
    instance.check()?;
    let next = greedy_nearest(
        instance.next_association,
        instance.delays,
        instance.capacities,
        Some(instance.current),
    )?;
    Ok(score(instance, next))
}

pub fn plan_static(instance: &PlacementInstance<'_>) -> Result<PlacementPlan, PlacementError> {
    instance.check()?;
    Ok(score(instance, instance.current.clone()))
}

/// Nearest cloudlet with room, avatars in ascending index.
pub fn initial_placement(
    association: &Association,
    delays: &DelayMatrix,
    capacities: &[usize],
) -> Result<Assignment, PlacementError> {
    greedy_nearest(association, delays, capacities, None)
}

/// Tie preference key for avatar `i` at cloudlet `j`: staying first, then
/// ascending cloudlet index.
fn preference(current: usize, j: usize) -> usize {
    if j == current {
        0
    } else {
        j + 1
    }
}

/// Enumerates every capacity-feasible assignment. Limited to 8 avatars and
/// 4 cloudlets.
pub fn plan_bruteforce(instance: &PlacementInstance<'_>) -> Result<PlacementPlan, PlacementError> {
    let (n, m) = (instance.num_avatars(), instance.num_cloudlets());
    if n > 8 || m > 4 {
        return Err(PlacementError::InstanceTooLarge {
            avatars: n,
            cloudlets: m,
        });
    }
    instance.check()?;
    let mut x = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    'outer: loop {
        let occupancy = Assignment(x.clone()).occupancy(m);
        if occupancy.iter().zip(instance.capacities).all(|(o, c)| o <= c) {
            let total = score(instance, Assignment(x.clone())).total_profit;
            let key: Vec<usize> = (0..n).map(|i| preference(instance.current.cloudlet(i), x[i])).collect();
            let better = match &best {
                None => true,
                Some((bt, _, bk)) => total > *bt || (total == *bt && key < *bk),
            };
            if better {
                best = Some((total, x.clone(), key));
            }
        }
        for slot in x.iter_mut() {
            *slot += 1;
            if *slot < m {
                continue 'outer;
            }
            *slot = 0;
        }
        break;
    }
    let (_, next, _) = best.expect("capacity checked, at least one feasible plan");
    Ok(score(instance, Assignment(next)))
}
