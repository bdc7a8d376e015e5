//! Depth-first branch-and-bound over the bundle DAG.
//!
//! Passenger groups are visited in order of their time point. At each level
//! the search picks one bundle of the group and the vehicle that services it;
//! because every time-feasible arc moves strictly forward in time, appending
//! to the vehicle's chain in this order enumerates every chain cover exactly
//! once. Children are visited in `(vehicle, bundle)` order and an incumbent
//! is only replaced by a strictly better one, so among equal-profit optima
//! the lexicographically smallest assignment vector is returned.

use std::time::Instant;

use crate::bundles::BundleGraph;

/// Two profits closer than this are considered equal by the search.
pub(crate) const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
pub(crate) struct SearchLimits {
    pub deadline: Option<Instant>,
    pub node_limit: Option<u64>,
    /// Stop as soon as any complete cover is found.
    pub first_feasible: bool,
    /// Only passenger-only bundles may be selected.
    pub passengers_only: bool,
}

/// `(vehicle, bundle)` chosen for one passenger group.
pub(crate) type Assignment = (usize, usize);

#[derive(Debug, Clone)]
pub(crate) struct SearchOutcome {
    /// Best value and the assignment per group, listed in visiting order.
    pub best: Option<(f64, Vec<Assignment>)>,
    pub nodes: u64,
    /// The whole tree was explored (or pruned).
    pub complete: bool,
    /// Upper bound on the value of everything left unexplored.
    pub open_bound: f64,
    pub root_bound: f64,
}

impl SearchOutcome {
    /// Chains of bundle ids per vehicle, in service order.
    pub fn chains(&self, kappa: usize) -> Option<Vec<Vec<usize>>> {
        self.best.as_ref().map(|(_, assignment)| {
            let mut chains = vec![Vec::new(); kappa];
            for &(k, b) in assignment {
                chains[k].push(b);
            }
            chains
        })
    }
}

/// Passenger ids sorted by time point, ties by id.
pub(crate) fn group_order(graph: &BundleGraph) -> Vec<usize> {
    let mut order: Vec<usize> = (0..graph.groups.len()).collect();
    order.sort_by(|&a, &b| {
        let ea = graph.bundles[a].e_bar;
        let eb = graph.bundles[b].e_bar;
        ea.total_cmp(&eb).then(a.cmp(&b))
    });
    order
}

struct Search<'a> {
    graph: &'a BundleGraph,
    limits: &'a SearchLimits,
    kappa: usize,
    n_bundles: usize,
    groups: Vec<Vec<usize>>,
    /// Per group, bundle ids by decreasing optimistic gain.
    by_gain: Vec<Vec<usize>>,
    gain_ub: Vec<f64>,
    origin_cost: Vec<f64>,
    origin_time: Vec<f64>,
    arc_cost: Vec<f64>,

    last: Vec<Option<usize>>,
    departure: Vec<f64>,
    parcel_used: Vec<bool>,
    path: Vec<Assignment>,
    profit: f64,

    floor: f64,
    best: Option<(f64, Vec<Assignment>)>,
    nodes: u64,
    stopped: bool,
    open_bound: f64,
}

/// Runs the search. Only leaves worth at least `floor` are accepted, which
/// lets a known feasible value prune the tree before the first incumbent.
pub(crate) fn run(graph: &BundleGraph, floor: f64, limits: &SearchLimits) -> SearchOutcome {
    let kappa = graph.kappa();
    let nb = graph.len();
    let allowed = |b: usize| !limits.passengers_only || graph.bundles[b].kind.parcel().is_none();

    let mut origin_cost = vec![f64::NAN; kappa * nb];
    let mut origin_time = vec![f64::NAN; kappa * nb];
    for (k, arcs) in graph.origin_arcs.iter().enumerate() {
        for a in arcs {
            origin_cost[k * nb + a.to] = a.cost;
            origin_time[k * nb + a.to] = a.time;
        }
    }
    let mut arc_cost = vec![f64::NAN; nb * nb];
    for (i, arcs) in graph.successors.iter().enumerate() {
        for a in arcs {
            arc_cost[i * nb + a.to] = a.cost;
        }
    }

    // Every selected bundle is entered by exactly one arc, so beta minus the
    // cheapest possible entering arc bounds its contribution from above.
    let mut min_in = vec![f64::INFINITY; nb];
    for b in 0..nb {
        for k in 0..kappa {
            let c = origin_cost[k * nb + b];
            if !c.is_nan() {
                min_in[b] = min_in[b].min(c);
            }
        }
    }
    for i in (0..nb).filter(|&i| allowed(i)) {
        for a in &graph.successors[i] {
            min_in[a.to] = min_in[a.to].min(a.cost);
        }
    }
    let gain_ub: Vec<f64> = (0..nb)
        .map(|b| {
            if allowed(b) && min_in[b].is_finite() {
                graph.bundles[b].beta - min_in[b]
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();

    let order = group_order(graph);
    let groups: Vec<Vec<usize>> = order
        .iter()
        .map(|&u| graph.groups[u].iter().copied().filter(|&b| allowed(b)).collect())
        .collect();
    let by_gain = groups
        .iter()
        .map(|g| {
            let mut v: Vec<usize> = g.iter().copied().filter(|&b| gain_ub[b].is_finite()).collect();
            v.sort_by(|&a, &b| gain_ub[b].total_cmp(&gain_ub[a]).then(a.cmp(&b)));
            v
        })
        .collect();

    let mut s = Search {
        graph,
        limits,
        kappa,
        n_bundles: nb,
        groups,
        by_gain,
        gain_ub,
        origin_cost,
        origin_time,
        arc_cost,
        last: vec![None; kappa],
        departure: vec![0.0; kappa],
        parcel_used: vec![false; graph.parcel_index.len()],
        path: Vec::with_capacity(order.len()),
        profit: 0.0,
        floor,
        best: None,
        nodes: 0,
        stopped: false,
        open_bound: f64::NEG_INFINITY,
    };
    let root_bound = s.remaining_bound(0);
    s.dfs(0);
    SearchOutcome {
        complete: !s.stopped || (limits.first_feasible && s.best.is_some()),
        best: s.best,
        nodes: s.nodes,
        open_bound: s.open_bound,
        root_bound,
    }
}

impl Search<'_> {
    fn remaining_bound(&self, depth: usize) -> f64 {
        let mut total = 0.0;
        for group in &self.by_gain[depth..] {
            let best = group.iter().find(|&&b| {
                self.graph.bundles[b]
                    .kind
                    .parcel()
                    .is_none_or(|v| !self.parcel_used[v])
            });
            match best {
                Some(&b) => total += self.gain_ub[b],
                None => return f64::NEG_INFINITY,
            }
        }
        total
    }

    fn pruned(&self, bound: f64) -> bool {
        match &self.best {
            Some((value, _)) => bound <= value + TIE_EPS,
            None => bound < self.floor - TIE_EPS,
        }
    }

    fn out_of_budget(&mut self) -> bool {
        if self.stopped {
            return true;
        }
        if let Some(limit) = self.limits.node_limit {
            if self.nodes >= limit {
                self.stopped = true;
            }
        }
        if self.nodes.is_multiple_of(512) {
            if let Some(deadline) = self.limits.deadline {
                if Instant::now() >= deadline {
                    self.stopped = true;
                }
            }
        }
        self.stopped
    }

    /// Gain and departure for servicing bundle `b` next with vehicle `k`,
    /// or `None` when that is infeasible.
    fn child(&self, k: usize, b: usize) -> Option<(f64, f64)> {
        let bundle = &self.graph.bundles[b];
        if let Some(v) = bundle.kind.parcel() {
            if self.parcel_used[v] {
                return None;
            }
        }
        let nb = self.n_bundles;
        let (cost, departure) = match self.last[k] {
            None => {
                let c = self.origin_cost[k * nb + b];
                if c.is_nan() {
                    return None;
                }
                (c, bundle.e_bar - self.origin_time[k * nb + b])
            }
            Some(i) => {
                let c = self.arc_cost[i * nb + b];
                if c.is_nan() {
                    return None;
                }
                (c, self.departure[k])
            }
        };
        if bundle.finish() - departure > self.graph.max_driving_time[k] {
            return None;
        }
        Some((bundle.beta - cost, departure))
    }

    fn dfs(&mut self, depth: usize) {
        self.nodes += 1;
        if depth == self.groups.len() {
            let accept = match &self.best {
                Some((value, _)) => self.profit > value + TIE_EPS,
                None => self.profit >= self.floor - TIE_EPS,
            };
            if accept {
                self.best = Some((self.profit, self.path.clone()));
                if self.limits.first_feasible {
                    self.stopped = true;
                }
            }
            return;
        }
        let bound = self.profit + self.remaining_bound(depth);
        if self.pruned(bound) {
            return;
        }

        let mut exhausted = self.out_of_budget();
        for k in 0..self.kappa {
            for idx in 0..self.groups[depth].len() {
                let b = self.groups[depth][idx];
                let Some((gain, departure)) = self.child(k, b) else {
                    continue;
                };
                let parcel = self.graph.bundles[b].kind.parcel();
                if let Some(v) = parcel {
                    self.parcel_used[v] = true;
                }
                if exhausted {
                    // record what is left unexplored at this level
                    let child_bound = self.profit + gain + self.remaining_bound(depth + 1);
                    if !self.pruned(child_bound) {
                        self.open_bound = self.open_bound.max(child_bound);
                    }
                } else {
                    let (prev_last, prev_dep, prev_profit) = (self.last[k], self.departure[k], self.profit);
                    self.last[k] = Some(b);
                    self.departure[k] = departure;
                    self.path.push((k, b));
                    self.profit += gain;

                    self.dfs(depth + 1);

                    self.profit = prev_profit;
                    self.path.pop();
                    self.last[k] = prev_last;
                    self.departure[k] = prev_dep;
                    exhausted = self.out_of_budget();
                }
                if let Some(v) = parcel {
                    self.parcel_used[v] = false;
                }
            }
        }
    }
}
