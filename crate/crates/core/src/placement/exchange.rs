//! Exact capacitated assignment by minimum-cost flow.
//!
//! Avatars are unit supplies, cloudlet `j` absorbs at most `s_j`, and placing
//! avatar `i` on `j` is worth `v[i][j]`. The flow starts from the current
//! (feasible) assignment and cancels negative cycles until none remain.
//!
//! Cycles are searched on a compressed residual graph with one node per
//! cloudlet plus a slack node `S`:
//!
//! * `a → b` moves the cheapest-to-move avatar out of `a` into `b`, weighted
//!   by `min_{i ∈ a} (c[i][b] − c[i][a])` with `c = −v`;
//! * `b → S` exists while `b` has spare capacity;
//! * `S → a` exists while `a` is non-empty.
//!
//! Every residual cycle of the bipartite network maps onto a cycle of no
//! greater weight here, so the absence of negative cycles certifies
//! optimality. Costs are quantized to integers, which makes the stopping test
//! exact and guarantees termination. Zero-weight cycles are never cancelled,
//! so an avatar only leaves its cloudlet for a strict improvement.

use super::PlacementError;

/// Resolution of the integer costs, in value units.
pub const QUANTUM: f64 = 1e-9;

/// Row-major `avatars × cloudlets` table of placement values.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueMatrix {
    avatars: usize,
    cloudlets: usize,
    values: Vec<f64>,
}

impl ValueMatrix {
    pub fn new(avatars: usize, cloudlets: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), avatars * cloudlets, "value matrix shape mismatch");
        Self {
            avatars,
            cloudlets,
            values,
        }
    }

    pub fn from_fn(avatars: usize, cloudlets: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(avatars * cloudlets);
        for i in 0..avatars {
            for j in 0..cloudlets {
                values.push(f(i, j));
            }
        }
        Self::new(avatars, cloudlets, values)
    }

    #[inline]
    pub fn get(&self, avatar: usize, cloudlet: usize) -> f64 {
        self.values[avatar * self.cloudlets + cloudlet]
    }

    pub fn num_avatars(&self) -> usize {
        self.avatars
    }

    pub fn num_cloudlets(&self) -> usize {
        self.cloudlets
    }

    pub fn row(&self, avatar: usize) -> &[f64] {
        &self.values[avatar * self.cloudlets..(avatar + 1) * self.cloudlets]
    }

    /// Σ `v[i][assignment[i]]`, summed in avatar order.
    pub fn objective(&self, assignment: &[usize]) -> f64 {
        assignment.iter().enumerate().map(|(i, &j)| self.get(i, j)).sum()
    }
}

const NONE: usize = usize::MAX;

struct Solver<'a> {
    cloudlets: usize,
    cost: Vec<i128>,
    assign: Vec<usize>,
    members: Vec<Vec<usize>>,
    spare: Vec<usize>,
    capacities: &'a [usize],
    /// `best[a * cloudlets + b]`: (weight, avatar) of the cheapest move a → b.
    best: Vec<(i128, usize)>,
}

impl Solver<'_> {
    #[inline]
    fn c(&self, i: usize, j: usize) -> i128 {
        self.cost[i * self.cloudlets + j]
    }

    fn refresh_row(&mut self, a: usize) {
        let m = self.cloudlets;
        for b in 0..m {
            self.best[a * m + b] = (i128::MAX, NONE);
        }
        for &i in &self.members[a] {
            let base = self.c(i, a);
            for b in 0..m {
                if b == a {
                    continue;
                }
                let w = self.c(i, b) - base;
                let slot = &mut self.best[a * m + b];
                if w < slot.0 || (w == slot.0 && i < slot.1) {
                    *slot = (w, i);
                }
            }
        }
    }

    /// Bellman-Ford from an implicit zero-distance source; returns a negative
    /// cycle as a node list (node `cloudlets` is the slack node).
    fn find_negative_cycle(&self) -> Option<Vec<usize>> {
        let m = self.cloudlets;
        let slack = m;
        let nodes = m + 1;
        let mut dist = vec![0i128; nodes];
        let mut parent = vec![NONE; nodes];
        for _ in 0..nodes {
            let mut changed = false;
            for a in 0..m {
                if self.members[a].is_empty() {
                    continue;
                }
                let da = dist[a];
                for b in 0..m {
                    if b == a {
                        continue;
                    }
                    let (w, via) = self.best[a * m + b];
                    if via != NONE && da + w < dist[b] {
                        dist[b] = da + w;
                        parent[b] = a;
                        changed = true;
                    }
                }
                // S → a
                if dist[slack] < dist[a] {
                    dist[a] = dist[slack];
                    parent[a] = slack;
                    changed = true;
                }
            }
            for b in 0..m {
                if self.spare[b] > 0 && dist[b] < dist[slack] {
                    dist[slack] = dist[b];
                    parent[slack] = b;
                    changed = true;
                }
            }
            if !changed {
                return None;
            }
            if let Some(cycle) = parent_cycle(&parent) {
                if self.cycle_weight(&cycle) < 0 {
                    return Some(cycle);
                }
            }
        }
        let cycle = parent_cycle(&parent)?;
        (self.cycle_weight(&cycle) < 0).then_some(cycle)
    }

    fn edge_weight(&self, from: usize, to: usize) -> i128 {
        let m = self.cloudlets;
        if from == m || to == m {
            0
        } else {
            self.best[from * m + to].0
        }
    }

    fn cycle_weight(&self, cycle: &[usize]) -> i128 {
        (0..cycle.len())
            .map(|k| self.edge_weight(cycle[k], cycle[(k + 1) % cycle.len()]))
            .sum()
    }

    fn cancel(&mut self, cycle: &[usize]) {
        let m = self.cloudlets;
        let moves: Vec<(usize, usize, usize)> = (0..cycle.len())
            .filter_map(|k| {
                let (a, b) = (cycle[k], cycle[(k + 1) % cycle.len()]);
                (a != m && b != m).then(|| (self.best[a * m + b].1, a, b))
            })
            .collect();
        // Detach first: a cloudlet on the cycle may be full until its own
        // avatar leaves.
        for &(i, a, _) in &moves {
            self.detach(i, a);
        }
        for &(i, _, b) in &moves {
            self.attach(i, b);
        }
        let mut touched: Vec<usize> = moves.iter().flat_map(|&(_, a, b)| [a, b]).collect();
        touched.sort_unstable();
        touched.dedup();
        for a in touched {
            self.refresh_row(a);
        }
    }

    fn detach(&mut self, i: usize, from: usize) {
        let pos = self.members[from]
            .iter()
            .position(|&x| x == i)
            .expect("avatar not in cloudlet");
        self.members[from].swap_remove(pos);
        self.spare[from] += 1;
    }

    fn attach(&mut self, i: usize, to: usize) {
        self.members[to].push(i);
        self.spare[to] -= 1;
        self.assign[i] = to;
    }

    fn move_avatar(&mut self, i: usize, from: usize, to: usize) {
        self.detach(i, from);
        self.attach(i, to);
    }

    /// Among equal-cost cloudlets with room, keep moved avatars at their
    /// original cloudlet, else the lowest index.
    fn settle_ties(&mut self, original: &[usize]) {
        for (i, &home) in original.iter().enumerate() {
            let at = self.assign[i];
            if at == home {
                continue;
            }
            let here = self.c(i, at);
            let candidates = std::iter::once(home).chain(0..at);
            for j in candidates {
                if j != at && self.spare[j] > 0 && self.c(i, j) == here {
                    self.move_avatar(i, at, j);
                    break;
                }
            }
        }
    }
}

/// First cycle reachable by following parent pointers.
fn parent_cycle(parent: &[usize]) -> Option<Vec<usize>> {
    let n = parent.len();
    // 0 = unvisited, otherwise 1 + id of the walk that reached the node.
    let mut mark = vec![0usize; n];
    for start in 0..n {
        if mark[start] != 0 {
            continue;
        }
        let mut v = start;
        while v != NONE && mark[v] == 0 {
            mark[v] = start + 1;
            v = parent[v];
        }
        if v != NONE && mark[v] == start + 1 {
            let mut cycle = vec![v];
            let mut u = parent[v];
            while u != v {
                cycle.push(u);
                u = parent[u];
            }
            // Parent pointers run backwards along edges.
            cycle.reverse();
            return Some(cycle);
        }
    }
    None
}

fn quantize(value: f64) -> Result<i128, PlacementError> {
    let q = (-value / QUANTUM).round();
    if !q.is_finite() || q.abs() > 1e36 {
        return Err(PlacementError::ValueOutOfRange(value));
    }
    Ok(q as i128)
}

/// Maximizes Σ `v[i][x(i)]` subject to the capacities, starting from
/// `current`, which must already be feasible.
pub fn maximize(values: &ValueMatrix, current: &[usize], capacities: &[usize]) -> Result<Vec<usize>, PlacementError> {
    let n = values.num_avatars();
    let m = values.num_cloudlets();
    if current.len() != n || capacities.len() != m {
        return Err(PlacementError::ShapeMismatch);
    }
    let total: usize = capacities.iter().sum();
    if total < n {
        return Err(PlacementError::InsufficientCapacity {
            avatars: n,
            capacity: total,
        });
    }
    let mut members = vec![Vec::new(); m];
    for (i, &j) in current.iter().enumerate() {
        if j >= m {
            return Err(PlacementError::InfeasibleCurrent);
        }
        members[j].push(i);
    }
    let mut spare = Vec::with_capacity(m);
    for (j, list) in members.iter().enumerate() {
        spare.push(
            capacities[j]
                .checked_sub(list.len())
                .ok_or(PlacementError::InfeasibleCurrent)?,
        );
    }
    let cost = values
        .values
        .iter()
        .map(|&v| quantize(v))
        .collect::<Result<Vec<_>, _>>()?;
    let mut solver = Solver {
        cloudlets: m,
        cost,
        assign: current.to_vec(),
        members,
        spare,
        capacities,
        best: vec![(i128::MAX, NONE); m * m],
    };
    for a in 0..m {
        solver.refresh_row(a);
    }
    while let Some(cycle) = solver.find_negative_cycle() {
        solver.cancel(&cycle);
    }
    solver.settle_ties(current);
    debug_assert!(solver.members.iter().zip(solver.capacities).all(|(l, &c)| l.len() <= c));
    Ok(solver.assign)
}
