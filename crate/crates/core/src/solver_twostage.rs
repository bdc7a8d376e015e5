//! Two-stage baseline: optimal passenger-only routes first, then parcels are
//! inserted into the fixed routes without moving any passenger.
//!
//! A route serving `p` passengers offers `p + 1` insertion gaps: `g_0` between
//! the origin and the first pickup, `g_1..g_{p-1}` between consecutive
//! passengers and `g_p` after the last dropoff. Each gap hosts at most one
//! parcel node, and a parcel's pickup gap precedes its delivery gap on the
//! same vehicle. A vehicle without passengers has the two gaps `g_0` and
//! `g_p`, which lets it carry one parcel on its own.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundles::build_graph;
use crate::model::{Instance, Point, Route, ServiceUnit, Solution, Visit};
use crate::solver_bf::{passenger_cover_exists, passenger_only_chains, BfError};

#[derive(Debug, Error)]
pub enum TwoStageError {
    #[error("no assignment of passengers to vehicles respects the time points and driving limits")]
    Infeasible,
    #[error("time limit reached while routing passengers")]
    TimeLimit,
    #[error("too large for exhaustive enumeration ({gaps} gaps, {parcels} parcels)")]
    SizeLimit { gaps: usize, parcels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FipMode {
    /// At most one parcel onboard at any time.
    Sg,
    /// No limit on the number of parcels onboard.
    Mt,
}

impl FipMode {
    pub fn label(&self) -> &'static str {
        match self {
            FipMode::Sg => "fip-sg",
            FipMode::Mt => "fip-mt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapKind {
    /// Between the origin and the first pickup.
    Start,
    /// Between two consecutive passengers.
    Interior,
    /// After the last dropoff.
    End,
}

/// An insertion position. A node `x` fits when
/// `earliest + t(from, x) + r_x + t(x, to) <= latest`, where the `to` leg is
/// absent for end gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct Gap {
    pub kind: GapKind,
    pub from: Point,
    pub to: Option<Point>,
    pub earliest: f64,
    pub latest: f64,
    /// Idle time available in the gap.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassengerRoute {
    pub vehicle: usize,
    pub origin: Point,
    pub max_driving_time: f64,
    /// Passenger ids in service order.
    pub passengers: Vec<usize>,
    pub departure: f64,
    pub finish: f64,
    pub gaps: Vec<Gap>,
}

impl PassengerRoute {
    pub fn is_idle(&self) -> bool {
        self.passengers.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassengerRoutes {
    pub routes: Vec<PassengerRoute>,
    pub total_profit: f64,
}

impl PassengerRoutes {
    pub fn total_gaps(&self) -> usize {
        self.routes.iter().map(|r| r.gaps.len()).sum()
    }

    /// The routes as a solution without parcels.
    pub fn to_solution(&self, inst: &Instance) -> Solution {
        let routes = self
            .routes
            .iter()
            .map(|r| {
                let mut visits = Vec::with_capacity(r.passengers.len());
                let mut time = r.departure;
                let mut at = r.origin;
                for &u in &r.passengers {
                    let p = &inst.passengers[u];
                    visits.push(Visit {
                        unit: ServiceUnit::Passenger { passenger: u },
                        arrival: time + inst.params.travel_time(&at, &p.pickup),
                        start: p.pickup_time,
                        finish: p.completion_time(&inst.params),
                    });
                    time = p.completion_time(&inst.params);
                    at = p.dropoff;
                }
                Route {
                    vehicle: r.vehicle,
                    departure: if r.is_idle() { 0.0 } else { r.departure },
                    visits,
                }
            })
            .collect();
        Solution {
            routes,
            profit: self.total_profit,
            serviced_parcels: BTreeSet::new(),
        }
    }
}

fn routes_from_chains(inst: &Instance, chains: &[Vec<usize>]) -> PassengerRoutes {
    let params = &inst.params;
    let mut total = 0.0;
    let routes = chains
        .iter()
        .enumerate()
        .map(|(k, chain)| {
            let veh = &inst.vehicles[k];
            let passengers = chain.clone();
            if passengers.is_empty() {
                return PassengerRoute {
                    vehicle: k,
                    origin: veh.origin,
                    max_driving_time: veh.max_driving_time,
                    passengers,
                    departure: 0.0,
                    finish: 0.0,
                    gaps: vec![
                        Gap {
                            kind: GapKind::Start,
                            from: veh.origin,
                            to: None,
                            earliest: 0.0,
                            latest: inst.horizon_h,
                            slack: inst.horizon_h,
                        },
                        Gap {
                            kind: GapKind::End,
                            from: veh.origin,
                            to: None,
                            earliest: 0.0,
                            latest: inst.horizon_h,
                            slack: inst.horizon_h,
                        },
                    ],
                };
            }
            let first = &inst.passengers[passengers[0]];
            let departure = first.pickup_time - params.travel_time(&veh.origin, &first.pickup);
            total -= params.arc_cost(veh.origin.distance(&first.pickup));
            let mut gaps = vec![Gap {
                kind: GapKind::Start,
                from: veh.origin,
                to: Some(first.pickup),
                earliest: 0.0,
                latest: first.pickup_time,
                slack: departure,
            }];
            for pair in passengers.windows(2) {
                let (a, b) = (&inst.passengers[pair[0]], &inst.passengers[pair[1]]);
                let free = a.completion_time(params);
                total -= params.arc_cost(a.dropoff.distance(&b.pickup));
                gaps.push(Gap {
                    kind: GapKind::Interior,
                    from: a.dropoff,
                    to: Some(b.pickup),
                    earliest: free,
                    latest: b.pickup_time,
                    slack: b.pickup_time - free - params.travel_time(&a.dropoff, &b.pickup),
                });
            }
            for &u in &passengers {
                let p = &inst.passengers[u];
                total += p.revenue(params) - params.arc_cost(p.trip_distance());
            }
            let last = &inst.passengers[*passengers.last().unwrap()];
            let finish = last.completion_time(params);
            gaps.push(Gap {
                kind: GapKind::End,
                from: last.dropoff,
                to: None,
                earliest: finish,
                latest: inst.horizon_h,
                slack: inst.horizon_h - finish,
            });
            PassengerRoute {
                vehicle: k,
                origin: veh.origin,
                max_driving_time: veh.max_driving_time,
                passengers,
                departure,
                finish,
                gaps,
            }
        })
        .collect();
    PassengerRoutes {
        routes,
        total_profit: total,
    }
}

/// Optimal passenger-only routing. Since every passenger must be carried the
/// revenue is fixed and the solver minimises the distance driven.
pub fn solve_passenger_only(inst: &Instance) -> Result<PassengerRoutes, TwoStageError> {
    solve_passenger_only_until(inst, None)
}

pub fn solve_passenger_only_until(inst: &Instance, deadline: Option<Instant>) -> Result<PassengerRoutes, TwoStageError> {
    let graph = build_graph(&inst.without_parcels());
    match passenger_only_chains(&graph, deadline) {
        Ok((_, chains)) => {
            let chains: Vec<Vec<usize>> = chains
                .iter()
                .map(|c| c.iter().map(|&b| graph.bundles[b].kind.passenger()).collect())
                .collect();
            Ok(routes_from_chains(inst, &chains))
        }
        Err(BfError::Infeasible) => Err(TwoStageError::Infeasible),
        Err(_) => Err(TwoStageError::TimeLimit),
    }
}

/// Whether all passengers can be covered by the fleet.
pub fn passengers_feasible(inst: &Instance) -> bool {
    passenger_cover_exists(&build_graph(&inst.without_parcels()))
}

/// One way of serving a parcel: pickup in gap `pickup_gap` and delivery in
/// gap `delivery_gap` of route `route`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct InsertOption {
    parcel: usize,
    route: usize,
    pickup_gap: usize,
    delivery_gap: usize,
    margin: f64,
    /// Departure from the origin if the option changes it.
    departure: Option<f64>,
    /// Route finish if the option changes it.
    finish: Option<f64>,
}

/// Time and extra distance of placing a node at `at` (service `r`) in `gap`.
fn gap_insertion(gap: &Gap, at: &Point, r: f64, nu: f64) -> Option<(f64, f64)> {
    let to_node = gap.from.distance(at);
    let (after, base) = match gap.to {
        Some(to) => (at.distance(&to), gap.from.distance(&to)),
        None => (0.0, 0.0),
    };
    let needed = (to_node + after) / nu + r;
    (gap.earliest + needed <= gap.latest).then_some((needed, to_node + after - base))
}

fn insertion_options(routes: &PassengerRoutes, inst: &Instance) -> Vec<Vec<InsertOption>> {
    let params = &inst.params;
    let nu = params.nu;
    inst.parcels
        .iter()
        .map(|c| {
            let theta = c.revenue(params);
            let mut options = Vec::new();
            for (ri, route) in routes.routes.iter().enumerate() {
                if route.is_idle() {
                    let d = route.origin.distance(&c.pickup) + c.trip_distance();
                    let duration = d / nu + c.service_time_pickup + c.service_time_delivery;
                    let margin = theta - params.arc_cost(d);
                    if duration <= route.max_driving_time && duration <= inst.horizon_h && margin > 0.0 {
                        options.push(InsertOption {
                            parcel: c.id,
                            route: ri,
                            pickup_gap: 0,
                            delivery_gap: 1,
                            margin,
                            departure: Some(0.0),
                            finish: Some(duration),
                        });
                    }
                    continue;
                }
                let last = route.gaps.len() - 1;
                let pickups: Vec<Option<(f64, f64)>> = route
                    .gaps
                    .iter()
                    .map(|g| gap_insertion(g, &c.pickup, c.service_time_pickup, nu))
                    .collect();
                let deliveries: Vec<Option<(f64, f64)>> = route
                    .gaps
                    .iter()
                    .map(|g| gap_insertion(g, &c.delivery, c.service_time_delivery, nu))
                    .collect();
                for (a, pickup) in pickups.iter().enumerate().take(last) {
                    let Some((need_a, extra_a)) = *pickup else { continue };
                    for (b, delivery) in deliveries.iter().enumerate().take(last + 1).skip(a + 1) {
                        let Some((need_b, extra_b)) = *delivery else { continue };
                        let margin = theta - params.arc_cost(extra_a + extra_b);
                        if margin <= 0.0 {
                            continue;
                        }
                        let departure = (a == 0).then(|| route.gaps[0].latest - need_a);
                        let finish = (b == last).then_some(route.finish + need_b);
                        let span = finish.unwrap_or(route.finish) - departure.unwrap_or(route.departure);
                        if span > route.max_driving_time {
                            continue;
                        }
                        options.push(InsertOption {
                            parcel: c.id,
                            route: ri,
                            pickup_gap: a,
                            delivery_gap: b,
                            margin,
                            departure,
                            finish,
                        });
                    }
                }
            }
            options.sort_by(|x, y| {
                y.margin
                    .total_cmp(&x.margin)
                    .then((x.route, x.pickup_gap, x.delivery_gap).cmp(&(y.route, y.pickup_gap, y.delivery_gap)))
            });
            options
        })
        .collect()
}

struct FipSearch<'a> {
    routes: &'a PassengerRoutes,
    mode: FipMode,
    order: Vec<usize>,
    options: Vec<Vec<InsertOption>>,
    used: Vec<Vec<bool>>,
    intervals: Vec<Vec<(usize, usize)>>,
    departure: Vec<f64>,
    finish: Vec<f64>,
    chosen: Vec<Option<InsertOption>>,
    value: f64,
    best_value: f64,
    best: Vec<Option<InsertOption>>,
}

impl FipSearch<'_> {
    fn fits(&self, o: &InsertOption) -> bool {
        let used = &self.used[o.route];
        if used[o.pickup_gap] || used[o.delivery_gap] {
            return false;
        }
        if self.mode == FipMode::Sg
            && self.intervals[o.route]
                .iter()
                .any(|&(a, b)| !(o.delivery_gap < a || b < o.pickup_gap))
        {
            return false;
        }
        let route = &self.routes.routes[o.route];
        if route.is_idle() {
            return true;
        }
        let departure = o.departure.unwrap_or(self.departure[o.route]);
        let finish = o.finish.unwrap_or(self.finish[o.route]);
        finish - departure <= route.max_driving_time
    }

    fn bound(&self, depth: usize) -> f64 {
        self.order[depth..]
            .iter()
            .map(|&v| {
                self.options[v]
                    .iter()
                    .find(|o| !self.used[o.route][o.pickup_gap] && !self.used[o.route][o.delivery_gap])
                    .map_or(0.0, |o| o.margin)
            })
            .sum()
    }

    fn dfs(&mut self, depth: usize) {
        if depth == self.order.len() {
            if self.value > self.best_value + 1e-9 {
                self.best_value = self.value;
                self.best = self.chosen.clone();
            }
            return;
        }
        if self.value + self.bound(depth) <= self.best_value + 1e-9 {
            return;
        }
        let v = self.order[depth];
        for idx in 0..self.options[v].len() {
            let o = self.options[v][idx];
            if !self.fits(&o) {
                continue;
            }
            let r = o.route;
            let saved = (self.departure[r], self.finish[r], self.value);
            self.used[r][o.pickup_gap] = true;
            self.used[r][o.delivery_gap] = true;
            self.intervals[r].push((o.pickup_gap, o.delivery_gap));
            if let Some(d) = o.departure {
                self.departure[r] = d;
            }
            if let Some(f) = o.finish {
                self.finish[r] = f;
            }
            self.value += o.margin;
            self.chosen[v] = Some(o);

            self.dfs(depth + 1);

            self.chosen[v] = None;
            (self.departure[r], self.finish[r], self.value) = saved;
            self.intervals[r].pop();
            self.used[r][o.pickup_gap] = false;
            self.used[r][o.delivery_gap] = false;
        }
        // reject the parcel
        self.dfs(depth + 1);
    }
}

/// Per route, the parcel node (if any) hosted by each gap.
type GapPlan = Vec<Vec<Option<ServiceUnit>>>;

fn plan_from_choices(routes: &PassengerRoutes, choices: &[(usize, usize, usize, usize)]) -> GapPlan {
    let mut plan: GapPlan = routes.routes.iter().map(|r| vec![None; r.gaps.len()]).collect();
    for &(parcel, route, a, b) in choices {
        plan[route][a] = Some(ServiceUnit::ParcelPickup { parcel });
        plan[route][b] = Some(ServiceUnit::ParcelDelivery { parcel });
    }
    plan
}

fn parcel_location(inst: &Instance, unit: ServiceUnit) -> (Point, f64) {
    match unit {
        ServiceUnit::ParcelPickup { parcel } => {
            let c = &inst.parcels[parcel];
            (c.pickup, c.service_time_pickup)
        }
        ServiceUnit::ParcelDelivery { parcel } => {
            let c = &inst.parcels[parcel];
            (c.delivery, c.service_time_delivery)
        }
        _ => unreachable!("gaps only host parcel nodes"),
    }
}

/// Builds the merged schedule of passengers and inserted parcel nodes.
fn solution_from_plan(routes: &PassengerRoutes, inst: &Instance, plan: &GapPlan, profit: f64) -> Solution {
    let params = &inst.params;
    let mut serviced = BTreeSet::new();
    let out_routes = routes
        .routes
        .iter()
        .zip(plan)
        .map(|(route, gaps)| {
            let mut visits = Vec::new();
            if route.is_idle() {
                let (Some(pick), Some(del)) = (gaps[0], gaps[1]) else {
                    return Route::idle(route.vehicle);
                };
                let (p_at, p_r) = parcel_location(inst, pick);
                let (d_at, d_r) = parcel_location(inst, del);
                let t1 = params.travel_time(&route.origin, &p_at);
                visits.push(Visit {
                    unit: pick,
                    arrival: t1,
                    start: t1,
                    finish: t1 + p_r,
                });
                let t2 = t1 + p_r + params.travel_time(&p_at, &d_at);
                visits.push(Visit {
                    unit: del,
                    arrival: t2,
                    start: t2,
                    finish: t2 + d_r,
                });
                if let ServiceUnit::ParcelPickup { parcel } = pick {
                    serviced.insert(parcel);
                }
                return Route {
                    vehicle: route.vehicle,
                    departure: 0.0,
                    visits,
                };
            }
            let first = &inst.passengers[route.passengers[0]];
            let departure = match gaps[0] {
                Some(unit) => {
                    let (at, r) = parcel_location(inst, unit);
                    first.pickup_time
                        - params.travel_time(&at, &first.pickup)
                        - r
                        - params.travel_time(&route.origin, &at)
                }
                None => route.departure,
            };
            let mut time = departure;
            let mut here = route.origin;
            for (g, slot) in gaps.iter().enumerate() {
                if let Some(unit) = *slot {
                    let (at, r) = parcel_location(inst, unit);
                    let arrival = time + params.travel_time(&here, &at);
                    visits.push(Visit {
                        unit,
                        arrival,
                        start: arrival,
                        finish: arrival + r,
                    });
                    if let ServiceUnit::ParcelDelivery { parcel } = unit {
                        serviced.insert(parcel);
                    }
                    time = arrival + r;
                    here = at;
                }
                if let Some(&u) = route.passengers.get(g) {
                    let p = &inst.passengers[u];
                    visits.push(Visit {
                        unit: ServiceUnit::Passenger { passenger: u },
                        arrival: time + params.travel_time(&here, &p.pickup),
                        start: p.pickup_time,
                        finish: p.completion_time(params),
                    });
                    time = p.completion_time(params);
                    here = p.dropoff;
                }
            }
            Route {
                vehicle: route.vehicle,
                departure,
                visits,
            }
        })
        .collect();
    Solution {
        routes: out_routes,
        profit,
        serviced_parcels: serviced,
    }
}

/// Optimal insertion of parcels into fixed passenger routes.
pub fn solve_fip(routes: &PassengerRoutes, inst: &Instance, mode: FipMode) -> Solution {
    let options = insertion_options(routes, inst);
    let mut order: Vec<usize> = (0..inst.m()).filter(|&v| !options[v].is_empty()).collect();
    order.sort_by(|&a, &b| options[b][0].margin.total_cmp(&options[a][0].margin).then(a.cmp(&b)));
    let mut search = FipSearch {
        routes,
        mode,
        order,
        options,
        used: routes.routes.iter().map(|r| vec![false; r.gaps.len()]).collect(),
        intervals: vec![Vec::new(); routes.routes.len()],
        departure: routes.routes.iter().map(|r| r.departure).collect(),
        finish: routes.routes.iter().map(|r| r.finish).collect(),
        chosen: vec![None; inst.m()],
        value: 0.0,
        best_value: 0.0,
        best: vec![None; inst.m()],
    };
    search.dfs(0);
    let choices: Vec<_> = search
        .best
        .iter()
        .flatten()
        .map(|o| (o.parcel, o.route, o.pickup_gap, o.delivery_gap))
        .collect();
    let plan = plan_from_choices(routes, &choices);
    // recompute the profit from the merged routes
    let mut profit = routes.total_profit;
    for o in search.best.iter().flatten() {
        profit += o.margin;
    }
    solution_from_plan(routes, inst, &plan, profit)
}

pub const BRUTE_FORCE_MAX_GAPS: usize = 10;
pub const BRUTE_FORCE_MAX_PARCELS: usize = 4;

#[derive(Debug, Clone)]
pub struct FipBruteForceReport {
    pub solution: Solution,
    /// Number of complete assignments enumerated.
    pub assignments: usize,
}

pub fn brute_force_fip(routes: &PassengerRoutes, inst: &Instance, mode: FipMode) -> Result<Solution, TwoStageError> {
    brute_force_fip_report(routes, inst, mode).map(|r| r.solution)
}

/// Exhaustive oracle over every assignment of each parcel to an ordered gap
/// pair on one route (or to rejection). Each candidate is re-simulated from
/// the raw node sequence: schedule, driving span, horizon and onboard load.
pub fn brute_force_fip_report(
    routes: &PassengerRoutes,
    inst: &Instance,
    mode: FipMode,
) -> Result<FipBruteForceReport, TwoStageError> {
    let gaps = routes.total_gaps();
    if gaps > BRUTE_FORCE_MAX_GAPS || inst.m() > BRUTE_FORCE_MAX_PARCELS {
        return Err(TwoStageError::SizeLimit {
            gaps,
            parcels: inst.m(),
        });
    }
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (ri, r) in routes.routes.iter().enumerate() {
        for a in 0..r.gaps.len() {
            for b in a + 1..r.gaps.len() {
                pairs.push((ri, a, b));
            }
        }
    }
    let choices_per_parcel = pairs.len() + 1;
    let total = choices_per_parcel.pow(inst.m() as u32);
    let mut best_value = f64::NEG_INFINITY;
    let mut best_choice: Vec<(usize, usize, usize, usize)> = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut choice = Vec::new();
        for v in 0..inst.m() {
            let pick = c % choices_per_parcel;
            c /= choices_per_parcel;
            if pick > 0 {
                let (r, a, b) = pairs[pick - 1];
                choice.push((v, r, a, b));
            }
        }
        if let Some(value) = simulate_plan(routes, inst, mode, &choice) {
            if value > best_value + 1e-9 {
                best_value = value;
                best_choice = choice;
            }
        }
    }
    let plan = plan_from_choices(routes, &best_choice);
    Ok(FipBruteForceReport {
        solution: solution_from_plan(routes, inst, &plan, best_value),
        assignments: total,
    })
}

/// Profit of the routes with the given insertions, or `None` if infeasible.
fn simulate_plan(
    routes: &PassengerRoutes,
    inst: &Instance,
    mode: FipMode,
    choice: &[(usize, usize, usize, usize)],
) -> Option<f64> {
    let params = &inst.params;
    let mut slots: Vec<Vec<Option<(Point, f64, i32)>>> = routes.routes.iter().map(|r| vec![None; r.gaps.len()]).collect();
    let mut revenue = 0.0;
    for &(v, r, a, b) in choice {
        let c = &inst.parcels[v];
        if slots[r][a].is_some() || slots[r][b].is_some() {
            return None;
        }
        slots[r][a] = Some((c.pickup, c.service_time_pickup, 1));
        slots[r][b] = Some((c.delivery, c.service_time_delivery, -1));
        revenue += c.revenue(params);
    }
    let mut distance = 0.0;
    for (route, route_slots) in routes.routes.iter().zip(&slots) {
        // raw node sequence: (location, service time, fixed time point, load change)
        let mut nodes: Vec<(Point, f64, Option<f64>, i32)> = Vec::new();
        for (g, slot) in route_slots.iter().enumerate() {
            if let Some((at, r, dl)) = *slot {
                nodes.push((at, r, None, dl));
            }
            if let Some(&u) = route.passengers.get(g) {
                let p = &inst.passengers[u];
                nodes.push((p.pickup, p.service_time_pickup, Some(p.pickup_time), 0));
                nodes.push((p.dropoff, p.service_time_dropoff, Some(p.dropoff_time(params)), 0));
                revenue += p.revenue(params);
            }
        }
        if nodes.is_empty() {
            continue;
        }
        // latest departure: fixed by the first time point, or 0 without passengers
        let mut lead = 0.0;
        let mut here = route.origin;
        let mut departure = 0.0;
        for &(at, r, fixed, _) in &nodes {
            lead += params.travel_time(&here, &at);
            if let Some(t) = fixed {
                departure = t - lead;
                break;
            }
            lead += r;
            here = at;
        }
        if departure < 0.0 {
            return None;
        }
        let mut time = departure;
        let mut here = route.origin;
        let mut load = 0;
        for &(at, r, fixed, dl) in &nodes {
            distance += here.distance(&at);
            time += params.travel_time(&here, &at);
            if let Some(t) = fixed {
                if time > t + 1e-9 {
                    return None;
                }
                time = t;
            }
            time += r;
            load += dl;
            if mode == FipMode::Sg && load > 1 {
                return None;
            }
            here = at;
        }
        if time > inst.horizon_h || time - departure > route.max_driving_time {
            return None;
        }
    }
    Some(revenue - params.arc_cost(distance))
}
