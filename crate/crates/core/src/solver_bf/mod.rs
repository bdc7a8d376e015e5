//! Exact solver for the bundle formulation.
//!
//! Every passenger group contributes exactly one bundle, every vehicle runs
//! one open chain from its origin, each parcel is used at most once and the
//! span between leaving the origin and finishing the last bundle stays within
//! the vehicle's maximum driving time.

mod mps;
pub(crate) mod search;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use mps::{check_milp_solution, export_milp, milp_row_count, write_milp, MilpCheckReport, MpsError};

use crate::bundles::{BundleGraph, Node};
use crate::model::{Instance, Route, ServiceUnit, Solution, Visit};
use search::{SearchLimits, TIE_EPS};

#[derive(Debug, Clone)]
pub struct BfConfig {
    pub time_limit: Duration,
    pub node_limit: Option<u64>,
    /// Only write the model, do not solve it.
    pub export_only: bool,
}

impl Default for BfConfig {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(7200),
            node_limit: None,
            export_only: false,
        }
    }
}

impl BfConfig {
    pub fn with_time_limit(time_limit: Duration) -> Self {
        Self {
            time_limit,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfStats {
    pub nodes_explored: u64,
    pub best_bound: f64,
    pub incumbent_profit: f64,
    pub wall_time: Duration,
    pub proven_optimal: bool,
    /// Relative optimality gap, `(bound - incumbent) / |incumbent|`.
    pub gap: f64,
}

#[derive(Debug, Error)]
pub enum BfError {
    #[error("no assignment of passengers to vehicles respects the time points and driving limits")]
    Infeasible,
    #[error("time limit reached before any feasible solution was found")]
    TimeLimit { stats: BfStats },
    #[error("instance too large for exhaustive enumeration (n = {n}, m = {m}, vehicles = {kappa})")]
    SizeLimit { n: usize, m: usize, kappa: usize },
}

/// Builds a solution from per-vehicle chains of bundle ids.
pub fn solution_from_chains(graph: &BundleGraph, chains: &[Vec<usize>]) -> Solution {
    let mut profit = 0.0;
    let mut serviced = BTreeSet::new();
    let routes = chains
        .iter()
        .enumerate()
        .map(|(k, chain)| {
            let Some(&first) = chain.first() else {
                return Route::idle(k);
            };
            let (origin_cost, origin_time) = graph.transition(Node::Origin(k), Node::Bundle(first));
            let departure = graph.bundles[first].e_bar - origin_time;
            profit -= origin_cost;
            let mut prev: Option<usize> = None;
            let visits = chain
                .iter()
                .map(|&b| {
                    let bundle = &graph.bundles[b];
                    let arrival = match prev {
                        None => bundle.e_bar,
                        Some(i) => {
                            let (cost, time) = graph.transition(Node::Bundle(i), Node::Bundle(b));
                            profit -= cost;
                            graph.bundles[i].finish() + time
                        }
                    };
                    profit += bundle.beta;
                    if let Some(v) = bundle.kind.parcel() {
                        serviced.insert(v);
                    }
                    prev = Some(b);
                    Visit {
                        unit: ServiceUnit::Bundle {
                            id: b,
                            passenger: bundle.kind.passenger(),
                            parcel: bundle.kind.parcel(),
                        },
                        arrival,
                        start: bundle.e_bar,
                        finish: bundle.finish(),
                    }
                })
                .collect();
            Route {
                vehicle: k,
                departure,
                visits,
            }
        })
        .collect();
    Solution {
        routes,
        profit,
        serviced_parcels: serviced,
    }
}

/// Extracts the bundle chain of every route of a bundle-formulation solution.
/// Units that are not bundles are skipped.
pub fn chains_of(solution: &Solution) -> Vec<Vec<usize>> {
    solution
        .routes
        .iter()
        .map(|r| {
            r.visits
                .iter()
                .filter_map(|v| match v.unit {
                    ServiceUnit::Bundle { id, .. } => Some(id),
                    _ => None,
                })
                .collect()
        })
        .collect()
}

/// Maximum-profit passenger-only cover of the graph, if any exists.
pub(crate) fn passenger_only_chains(
    graph: &BundleGraph,
    deadline: Option<Instant>,
) -> Result<(f64, Vec<Vec<usize>>), BfError> {
    let limits = SearchLimits {
        deadline,
        passengers_only: true,
        ..SearchLimits::default()
    };
    let outcome = search::run(graph, f64::NEG_INFINITY, &limits);
    match (outcome.best.clone(), outcome.complete) {
        (Some((value, _)), _) => Ok((value, outcome.chains(graph.kappa()).unwrap_or_default())),
        (None, true) => Err(BfError::Infeasible),
        (None, false) => Err(BfError::TimeLimit {
            stats: BfStats {
                nodes_explored: outcome.nodes,
                best_bound: outcome.root_bound,
                incumbent_profit: f64::NEG_INFINITY,
                wall_time: Duration::ZERO,
                proven_optimal: false,
                gap: f64::INFINITY,
            },
        }),
    }
}

/// Whether any passenger-only chain cover exists.
pub(crate) fn passenger_cover_exists(graph: &BundleGraph) -> bool {
    let limits = SearchLimits {
        first_feasible: true,
        passengers_only: true,
        ..SearchLimits::default()
    };
    search::run(graph, f64::NEG_INFINITY, &limits).best.is_some()
}

/// Solves the bundle formulation to optimality, or returns the incumbent with
/// `proven_optimal == false` when the time or node limit stops the search.
pub fn solve_bf(graph: &BundleGraph, inst: &Instance, cfg: &BfConfig) -> Result<(Solution, BfStats), BfError> {
    debug_assert_eq!(graph.kappa(), inst.kappa());
    let started = Instant::now();
    let deadline = started.checked_add(cfg.time_limit);

    // The passenger-only optimum is feasible for the bundle formulation and
    // seeds the search with a lower bound.
    let (floor, seed_chains) = match passenger_only_chains(graph, deadline) {
        Ok(seed) => seed,
        Err(BfError::TimeLimit { mut stats }) => {
            stats.wall_time = started.elapsed();
            return Err(BfError::TimeLimit { stats });
        }
        Err(e) => return Err(e),
    };

    let limits = SearchLimits {
        deadline,
        node_limit: cfg.node_limit,
        ..SearchLimits::default()
    };
    let outcome = search::run(graph, floor, &limits);
    let (chains, incumbent) = match outcome.chains(graph.kappa()) {
        Some(chains) => (chains, outcome.best.as_ref().map_or(floor, |b| b.0)),
        None => (seed_chains, floor),
    };
    let solution = solution_from_chains(graph, &chains);
    let proven_optimal = outcome.complete;
    let best_bound = if proven_optimal {
        incumbent
    } else {
        outcome.open_bound.max(incumbent).min(outcome.root_bound.max(incumbent))
    };
    let gap = if proven_optimal {
        0.0
    } else {
        (best_bound - incumbent) / incumbent.abs().max(TIE_EPS)
    };
    let stats = BfStats {
        nodes_explored: outcome.nodes,
        best_bound,
        incumbent_profit: solution.profit,
        wall_time: started.elapsed(),
        proven_optimal,
        gap,
    };
    Ok((solution, stats))
}

/// Limits of the exhaustive oracle.
pub const BRUTE_FORCE_MAX_N: usize = 4;
pub const BRUTE_FORCE_MAX_M: usize = 4;
pub const BRUTE_FORCE_MAX_KAPPA: usize = 2;

/// Result of the exhaustive enumeration with its bookkeeping.
#[derive(Debug, Clone)]
pub struct BruteForceReport {
    pub solution: Option<Solution>,
    /// Bundle selections considered (one bundle per group).
    pub selections: usize,
    /// Selections without a repeated parcel.
    pub valid_selections: usize,
}

/// Exhaustive oracle: every selection of one bundle per passenger group with
/// distinct parcels, and every split of the selection across vehicles.
/// Timing is recomputed from the bundle attributes and raw coordinates, not
/// from the arc lists of the graph.
pub fn brute_force_bf(graph: &BundleGraph, inst: &Instance) -> Result<Solution, BfError> {
    brute_force_bf_report(graph, inst)?.solution.ok_or(BfError::Infeasible)
}

pub fn brute_force_bf_report(graph: &BundleGraph, inst: &Instance) -> Result<BruteForceReport, BfError> {
    let (n, m, kappa) = (inst.n(), inst.m(), inst.kappa());
    if n > BRUTE_FORCE_MAX_N || m > BRUTE_FORCE_MAX_M || kappa > BRUTE_FORCE_MAX_KAPPA {
        return Err(BfError::SizeLimit { n, m, kappa });
    }
    let params = &inst.params;
    let bundles = &graph.bundles;
    let groups: Vec<&Vec<usize>> = graph.groups.iter().collect();

    let mut report = BruteForceReport {
        solution: None,
        selections: 0,
        valid_selections: 0,
    };
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;

    let mut choice = vec![0usize; n];
    'selections: loop {
        report.selections += 1;
        let selection: Vec<usize> = (0..n).map(|u| groups[u][choice[u]]).collect();
        let mut parcels: Vec<usize> = selection.iter().filter_map(|&b| bundles[b].kind.parcel()).collect();
        let count = parcels.len();
        parcels.sort_unstable();
        parcels.dedup();
        if parcels.len() == count {
            report.valid_selections += 1;
            let total = kappa.pow(n as u32);
            for code in 0..total {
                let mut chains = vec![Vec::new(); kappa];
                let mut c = code;
                for &b in &selection {
                    chains[c % kappa].push(b);
                    c /= kappa;
                }
                for chain in &mut chains {
                    chain.sort_by(|&a, &b| bundles[a].e_bar.total_cmp(&bundles[b].e_bar).then(a.cmp(&b)));
                }
                let mut value = 0.0;
                let mut feasible = true;
                for (k, chain) in chains.iter().enumerate() {
                    let Some(&first) = chain.first() else { continue };
                    let origin = inst.vehicles[k].origin;
                    let d0 = origin.distance(&bundles[first].entry);
                    let departure = bundles[first].e_bar - d0 / params.nu;
                    if departure < 0.0 {
                        feasible = false;
                        break;
                    }
                    value -= params.mu3 * d0;
                    for pair in chain.windows(2) {
                        let (a, b) = (&bundles[pair[0]], &bundles[pair[1]]);
                        let d = a.exit.distance(&b.entry);
                        if a.e_bar + a.delta + d / params.nu > b.e_bar {
                            feasible = false;
                            break;
                        }
                        value -= params.mu3 * d;
                    }
                    let last = &bundles[*chain.last().unwrap()];
                    if !feasible || last.e_bar + last.delta - departure > inst.vehicles[k].max_driving_time {
                        feasible = false;
                        break;
                    }
                    value += chain.iter().map(|&b| bundles[b].beta).sum::<f64>();
                }
                if feasible && best.as_ref().is_none_or(|(v, _)| value > v + TIE_EPS) {
                    best = Some((value, chains));
                }
            }
        }
        // next selection (odometer)
        for u in 0..n {
            choice[u] += 1;
            if choice[u] < groups[u].len() {
                continue 'selections;
            }
            choice[u] = 0;
        }
        break;
    }
    report.solution = best.map(|(_, chains)| solution_from_chains(graph, &chains));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundles::build_graph;
    use crate::model::{CostParams, ParcelRequest, PassengerRequest, Point, Vehicle, PARCEL_DEMAND, PASSENGER_DEMAND};
    use approx::assert_abs_diff_eq;

    fn pax(id: usize, e: f64, pickup: Point, dropoff: Point) -> PassengerRequest {
        PassengerRequest {
            id,
            pickup,
            dropoff,
            service_time_pickup: 0.0333,
            service_time_dropoff: 0.0333,
            pickup_time: e,
            demand: PASSENGER_DEMAND,
        }
    }

    fn parcel(id: usize, pickup: Point, delivery: Point) -> ParcelRequest {
        ParcelRequest {
            id,
            pickup,
            delivery,
            service_time_pickup: 0.05,
            service_time_delivery: 0.05,
            demand: PARCEL_DEMAND,
        }
    }

    fn inst(passengers: Vec<PassengerRequest>, parcels: Vec<ParcelRequest>, kappa: usize) -> Instance {
        Instance {
            params: CostParams::default(),
            horizon_h: 24.0,
            passengers,
            parcels,
            vehicles: (0..kappa)
                .map(|id| Vehicle {
                    id,
                    origin: Point::new(0.0, 0.0),
                    max_driving_time: 8.0,
                })
                .collect(),
        }
    }

    #[test]
    fn profitable_triple_is_selected() {
        // parcel lies along the passenger's way: tiny detour
        let i = inst(
            vec![pax(0, 5.0, Point::new(1.0, 0.0), Point::new(11.0, 0.0))],
            vec![parcel(0, Point::new(0.5, 0.0), Point::new(11.5, 0.0))],
            1,
        );
        let g = build_graph(&i);
        assert_eq!(g.len(), 2);
        let (sol, stats) = solve_bf(&g, &i, &BfConfig::default()).unwrap();
        assert!(stats.proven_optimal);
        assert_eq!(sol.serviced_parcels.len(), 1);
        let oracle = brute_force_bf(&g, &i).unwrap();
        assert_abs_diff_eq!(sol.profit, oracle.profit, epsilon = 1e-9);
        // by hand: the two candidate profits
        let with_parcel = g.bundles[1].beta - g.transition(Node::Origin(0), Node::Bundle(1)).0;
        let without = g.bundles[0].beta - g.transition(Node::Origin(0), Node::Bundle(0)).0;
        assert!(with_parcel > without);
        assert_abs_diff_eq!(sol.profit, with_parcel, epsilon = 1e-9);
    }

    #[test]
    fn costly_detour_is_rejected() {
        // 1 km parcel that requires a 20 km detour on each side
        let i = inst(
            vec![pax(0, 5.0, Point::new(1.0, 0.0), Point::new(11.0, 0.0))],
            vec![parcel(0, Point::new(1.0, 20.0), Point::new(11.0, 20.0))],
            1,
        );
        let g = build_graph(&i);
        let (sol, _) = solve_bf(&g, &i, &BfConfig::default()).unwrap();
        assert!(sol.serviced_parcels.is_empty());
        let expected = g.bundles[0].beta - g.transition(Node::Origin(0), Node::Bundle(0)).0;
        assert_abs_diff_eq!(sol.profit, expected, epsilon = 1e-12);
        let oracle = brute_force_bf(&g, &i).unwrap();
        assert_abs_diff_eq!(sol.profit, oracle.profit, epsilon = 1e-9);
    }

    #[test]
    fn single_passenger_profit() {
        let i = inst(vec![pax(0, 2.0, Point::new(3.0, 4.0), Point::new(13.0, 4.0))], vec![], 1);
        let g = build_graph(&i);
        let sol = brute_force_bf(&g, &i).unwrap();
        // beta = 3.24 + 10.3 - 4.6; origin arc 5 km
        assert_abs_diff_eq!(sol.profit, 8.94 - 0.46 * 5.0, epsilon = 1e-9);
        let (bf, _) = solve_bf(&g, &i, &BfConfig::default()).unwrap();
        assert_abs_diff_eq!(bf.profit, sol.profit, epsilon = 1e-12);
        assert_abs_diff_eq!(bf.routes[0].departure, 2.0 - 5.0 / 40.943, epsilon = 1e-12);
    }

    #[test]
    fn brute_force_selection_count() {
        // the parcel fits after either passenger: two groups of two bundles
        let i = inst(
            vec![
                pax(0, 2.0, Point::new(1.0, 0.0), Point::new(5.0, 0.0)),
                pax(1, 6.0, Point::new(6.0, 0.0), Point::new(9.0, 0.0)),
            ],
            vec![parcel(0, Point::new(0.5, 0.5), Point::new(5.5, 0.5))],
            1,
        );
        let g = build_graph(&i);
        assert_eq!(g.groups.iter().map(Vec::len).collect::<Vec<_>>(), vec![2, 2]);
        let report = brute_force_bf_report(&g, &i).unwrap();
        assert_eq!(report.selections, 4);
        assert_eq!(report.valid_selections, 3);
    }

    #[test]
    fn infeasible_when_time_points_collide() {
        let i = inst(
            vec![
                pax(0, 5.0, Point::new(1.0, 0.0), Point::new(5.0, 0.0)),
                pax(1, 5.0, Point::new(25.0, 0.0), Point::new(29.0, 0.0)),
            ],
            vec![],
            1,
        );
        let g = build_graph(&i);
        assert!(matches!(solve_bf(&g, &i, &BfConfig::default()), Err(BfError::Infeasible)));
        assert!(matches!(brute_force_bf(&g, &i), Err(BfError::Infeasible)));
    }

    #[test]
    fn oracle_size_limit() {
        let passengers = (0..5).map(|u| pax(u, 1.0 + u as f64, Point::new(0.0, 0.0), Point::new(1.0, 0.0))).collect();
        let i = inst(passengers, vec![], 1);
        let g = build_graph(&i);
        assert!(matches!(brute_force_bf(&g, &i), Err(BfError::SizeLimit { n: 5, .. })));
    }

    #[test]
    fn driving_time_limit_splits_routes() {
        // two passengers 9 h apart cannot share a vehicle with T = 8
        let i = inst(
            vec![
                pax(0, 1.0, Point::new(1.0, 0.0), Point::new(2.0, 0.0)),
                pax(1, 10.0, Point::new(2.0, 0.0), Point::new(3.0, 0.0)),
            ],
            vec![],
            2,
        );
        let g = build_graph(&i);
        let (sol, _) = solve_bf(&g, &i, &BfConfig::default()).unwrap();
        assert_eq!(sol.routes[0].visits.len(), 1);
        assert_eq!(sol.routes[1].visits.len(), 1);
        let one = inst(i.passengers.clone(), vec![], 1);
        assert!(matches!(solve_bf(&build_graph(&one), &one, &BfConfig::default()), Err(BfError::Infeasible)));
    }

    #[test]
    fn node_limit_returns_incumbent() {
        let passengers = (0..4)
            .map(|u| pax(u, 1.0 + 1.5 * u as f64, Point::new(u as f64, 0.0), Point::new(u as f64, 3.0)))
            .collect();
        let parcels = (0..3).map(|v| parcel(v, Point::new(0.0, v as f64), Point::new(3.0, v as f64))).collect();
        let i = inst(passengers, parcels, 2);
        let g = build_graph(&i);
        let cfg = BfConfig {
            node_limit: Some(3),
            ..BfConfig::default()
        };
        let (sol, stats) = solve_bf(&g, &i, &cfg).unwrap();
        assert!(!stats.proven_optimal);
        assert!(stats.incumbent_profit <= stats.best_bound + 1e-6);
        let (opt, full) = solve_bf(&g, &i, &BfConfig::default()).unwrap();
        assert!(full.proven_optimal);
        assert!(opt.profit + 1e-9 >= sol.profit);
        assert!(stats.best_bound + 1e-6 >= opt.profit);
    }
}
