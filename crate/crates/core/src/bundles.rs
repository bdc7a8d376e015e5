//! Service bundles and the bundle graph.
//!
//! A bundle is either a single passenger trip `u` or the contiguous
//! sequence parcel pickup `v`, passenger trip `u`, parcel delivery `v+m`.
//! Every bundle is serviced at a fixed time point `e_bar`, derived from the
//! passenger's own time point. Bundles containing the same passenger form
//! a group, and exactly one bundle per group is selected by a solution.

use std::fmt::Write as _;

use crate::model::{CostParams, Instance, ParcelRequest, PassengerRequest, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BundleKind {
    Passenger { passenger: usize },
    Triple { parcel: usize, passenger: usize },
}

impl BundleKind {
    pub fn passenger(&self) -> usize {
        match *self {
            BundleKind::Passenger { passenger } | BundleKind::Triple { passenger, .. } => passenger,
        }
    }

    pub fn parcel(&self) -> Option<usize> {
        match *self {
            BundleKind::Passenger { .. } => None,
            BundleKind::Triple { parcel, .. } => Some(parcel),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub id: usize,
    pub kind: BundleKind,
    /// Revenue of the bundled requests minus the driving cost inside the bundle.
    pub beta: f64,
    /// Service time plus internal travel time.
    pub delta: f64,
    /// Time point at which the bundle's first service starts.
    pub e_bar: f64,
    pub internal_distance: f64,
    /// First service location.
    pub entry: Point,
    /// Last service location.
    pub exit: Point,
}

impl Bundle {
    pub fn finish(&self) -> f64 {
        self.e_bar + self.delta
    }
}

/// Revenue of a bundle: request revenues minus the cost of every leg driven
/// inside the bundle, including the passenger's own trip.
pub fn compute_beta(
    passenger: &PassengerRequest,
    parcel: Option<&ParcelRequest>,
    params: &CostParams,
) -> f64 {
    let revenue = passenger.revenue(params) + parcel.map_or(0.0, |c| c.revenue(params));
    revenue - params.arc_cost(internal_distance(passenger, parcel))
}

pub fn compute_delta(
    passenger: &PassengerRequest,
    parcel: Option<&ParcelRequest>,
    params: &CostParams,
) -> f64 {
    let trip = passenger.service_time_pickup
        + params.travel_time(&passenger.pickup, &passenger.dropoff)
        + passenger.service_time_dropoff;
    match parcel {
        None => trip,
        Some(c) => {
            c.service_time_pickup
                + params.travel_time(&c.pickup, &passenger.pickup)
                + trip
                + params.travel_time(&passenger.dropoff, &c.delivery)
                + c.service_time_delivery
        }
    }
}

/// Start time point of a bundle.
pub fn compute_e_bar(
    passenger: &PassengerRequest,
    parcel: Option<&ParcelRequest>,
    params: &CostParams,
) -> f64 {
    match parcel {
        None => passenger.pickup_time,
        Some(c) => {
            passenger.pickup_time - params.travel_time(&c.pickup, &passenger.pickup) - c.service_time_pickup
        }
    }
}

fn internal_distance(passenger: &PassengerRequest, parcel: Option<&ParcelRequest>) -> f64 {
    let trip = passenger.trip_distance();
    match parcel {
        None => trip,
        Some(c) => c.pickup.distance(&passenger.pickup) + trip + passenger.dropoff.distance(&c.delivery),
    }
}

fn make_bundle(
    id: usize,
    passenger: &PassengerRequest,
    parcel: Option<&ParcelRequest>,
    params: &CostParams,
) -> Bundle {
    let kind = match parcel {
        None => BundleKind::Passenger {
            passenger: passenger.id,
        },
        Some(c) => BundleKind::Triple {
            parcel: c.id,
            passenger: passenger.id,
        },
    };
    Bundle {
        id,
        kind,
        beta: compute_beta(passenger, parcel, params),
        delta: compute_delta(passenger, parcel, params),
        e_bar: compute_e_bar(passenger, parcel, params),
        internal_distance: internal_distance(passenger, parcel),
        entry: parcel.map_or(passenger.pickup, |c| c.pickup),
        exit: parcel.map_or(passenger.dropoff, |c| c.delivery),
    }
}

/// Enumerates the retained bundles: one passenger-only bundle per passenger
/// (ids `0..n`), then every triple `(u, v)` that starts at or after time 0
/// and finishes within the horizon, in `(u, v)` lexicographic order.
pub fn build_bundles(inst: &Instance) -> Vec<Bundle> {
    let params = &inst.params;
    let mut bundles: Vec<Bundle> = inst
        .passengers
        .iter()
        .enumerate()
        .map(|(id, p)| make_bundle(id, p, None, params))
        .collect();
    for p in &inst.passengers {
        for c in &inst.parcels {
            let b = make_bundle(bundles.len(), p, Some(c), params);
            if b.e_bar >= 0.0 && b.finish() <= inst.horizon_h {
                bundles.push(b);
            }
        }
    }
    bundles
}

/// Node of the bundle graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Bundle(usize),
    Origin(usize),
    Depot(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub to: usize,
    /// Driving cost from the tail's exit point to the head's entry point.
    pub cost: f64,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct BundleGraph {
    pub bundles: Vec<Bundle>,
    /// For each passenger, the ids of the bundles containing it.
    pub groups: Vec<Vec<usize>>,
    /// For each parcel, the ids of the bundles containing it.
    pub parcel_index: Vec<Vec<usize>>,
    /// Time-feasible bundle-to-bundle arcs, by tail bundle.
    pub successors: Vec<Vec<Arc>>,
    /// Time-feasible origin-to-bundle arcs, by vehicle.
    pub origin_arcs: Vec<Vec<Arc>>,
    /// Vehicle origins; vehicle `k` ends at the zero-cost dummy depot `Depot(k)`.
    pub origins: Vec<Point>,
    pub max_driving_time: Vec<f64>,
    pub params: CostParams,
    pub horizon: f64,
}

impl BundleGraph {
    pub fn build(inst: &Instance) -> Self {
        build_graph(inst)
    }

    pub fn kappa(&self) -> usize {
        self.origins.len()
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }

    /// Cost and time of driving from `from` into bundle `to`, whether or not
    /// the arc is time-feasible. Arcs into a dummy depot are free.
    pub fn transition(&self, from: Node, to: Node) -> (f64, f64) {
        let start = match from {
            Node::Bundle(i) => self.bundles[i].exit,
            Node::Origin(k) => self.origins[k],
            Node::Depot(_) => return (0.0, 0.0),
        };
        let end = match to {
            Node::Bundle(j) => self.bundles[j].entry,
            Node::Depot(_) => return (0.0, 0.0),
            Node::Origin(k) => self.origins[k],
        };
        let d = start.distance(&end);
        (self.params.arc_cost(d), d / self.params.nu)
    }

    pub fn arc(&self, from: Node, to: usize) -> Option<&Arc> {
        let list = match from {
            Node::Bundle(i) => &self.successors[i],
            Node::Origin(k) => &self.origin_arcs[k],
            Node::Depot(_) => return None,
        };
        list.iter().find(|a| a.to == to)
    }

    pub fn arc_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum::<usize>()
            + self.origin_arcs.iter().map(Vec::len).sum::<usize>()
            + self.bundles.len() * self.kappa()
    }

    /// Graphviz rendering; nodes are labelled with id, `e_bar` and `beta`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph bundles {\n  rankdir=LR;\n");
        for (k, o) in self.origins.iter().enumerate() {
            let _ = writeln!(out, "  s{k} [shape=box,label=\"s{k}\\n({:.2},{:.2})\"];", o.x, o.y);
            let _ = writeln!(out, "  f{k} [shape=box,label=\"f{k}\"];");
        }
        for b in &self.bundles {
            let content = match b.kind {
                BundleKind::Passenger { passenger } => format!("u{passenger}"),
                BundleKind::Triple { parcel, passenger } => format!("v{parcel},u{passenger}"),
            };
            let _ = writeln!(
                out,
                "  b{} [label=\"{} [{}]\\ne={:.4} beta={:.4}\"];",
                b.id, b.id, content, b.e_bar, b.beta
            );
        }
        for (k, arcs) in self.origin_arcs.iter().enumerate() {
            for a in arcs {
                let _ = writeln!(out, "  s{k} -> b{} [label=\"{:.2}\"];", a.to, a.cost);
            }
        }
        for (i, arcs) in self.successors.iter().enumerate() {
            for a in arcs {
                let _ = writeln!(out, "  b{i} -> b{} [label=\"{:.2}\"];", a.to, a.cost);
            }
        }
        for b in &self.bundles {
            for k in 0..self.kappa() {
                let _ = writeln!(out, "  b{} -> f{k} [style=dashed];", b.id);
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the bundle graph with all time-feasible arcs.
///
/// A bundle-to-bundle arc `(i, j)` exists when the bundles hold different
/// passengers and `e_bar_i + delta_i + t_ij <= e_bar_j` (waiting before a
/// bundle is allowed). An origin arc `(s_k, j)` exists when the vehicle can
/// leave its origin at or after time 0 and still reach `j` on time.
pub fn build_graph(inst: &Instance) -> BundleGraph {
    let bundles = build_bundles(inst);
    let params = inst.params;
    let mut groups = vec![Vec::new(); inst.n()];
    let mut parcel_index = vec![Vec::new(); inst.m()];
    for b in &bundles {
        groups[b.kind.passenger()].push(b.id);
        if let Some(v) = b.kind.parcel() {
            parcel_index[v].push(b.id);
        }
    }

    let successors = bundles
        .iter()
        .map(|from| {
            bundles
                .iter()
                .filter(|to| to.kind.passenger() != from.kind.passenger())
                .filter_map(|to| {
                    let d = from.exit.distance(&to.entry);
                    let time = d / params.nu;
                    (from.finish() + time <= to.e_bar).then(|| Arc {
                        to: to.id,
                        cost: params.arc_cost(d),
                        time,
                    })
                })
                .collect()
        })
        .collect();

    let origin_arcs = inst
        .vehicles
        .iter()
        .map(|veh| {
            bundles
                .iter()
                .filter_map(|to| {
                    let d = veh.origin.distance(&to.entry);
                    let time = d / params.nu;
                    (to.e_bar - time >= 0.0).then(|| Arc {
                        to: to.id,
                        cost: params.arc_cost(d),
                        time,
                    })
                })
                .collect()
        })
        .collect();

    BundleGraph {
        bundles,
        groups,
        parcel_index,
        successors,
        origin_arcs,
        origins: inst.vehicles.iter().map(|v| v.origin).collect(),
        max_driving_time: inst.vehicles.iter().map(|v| v.max_driving_time).collect(),
        params,
        horizon: inst.horizon_h,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Vehicle, PARCEL_DEMAND, PASSENGER_DEMAND};
    use approx::assert_abs_diff_eq;

    fn pax(id: usize, e: f64, pickup: Point, dropoff: Point, r: f64) -> PassengerRequest {
        PassengerRequest {
            id,
            pickup,
            dropoff,
            service_time_pickup: r,
            service_time_dropoff: r,
            pickup_time: e,
            demand: PASSENGER_DEMAND,
        }
    }

    fn parcel(id: usize, pickup: Point, delivery: Point, r: f64) -> ParcelRequest {
        ParcelRequest {
            id,
            pickup,
            delivery,
            service_time_pickup: r,
            service_time_delivery: r,
            demand: PARCEL_DEMAND,
        }
    }

    fn instance(passengers: Vec<PassengerRequest>, parcels: Vec<ParcelRequest>) -> Instance {
        Instance {
            params: CostParams::default(),
            horizon_h: 24.0,
            passengers,
            parcels,
            vehicles: vec![Vehicle {
                id: 0,
                origin: Point::new(0.0, 0.0),
                max_driving_time: 8.0,
            }],
        }
    }

    #[test]
    fn beta_examples() {
        let p = CostParams::default();
        let u = pax(0, 5.0, Point::new(0.0, 0.0), Point::new(10.0, 0.0), 0.0333);
        assert_abs_diff_eq!(compute_beta(&u, None, &p), 8.94, epsilon = 1e-9);

        let o = Point::new(3.0, 4.0);
        let u = pax(0, 5.0, o, o, 0.0333);
        let c = parcel(0, o, o, 0.05);
        assert_abs_diff_eq!(compute_beta(&u, Some(&c), &p), 5.98, epsilon = 1e-9);

    }

    #[test]
    fn beta_triple_hand_arithmetic() {
        // pickup of the parcel 2 km before the passenger pickup, passenger
        // trip 10 km, delivery 3 km after the dropoff; parcel direct 10 km.
        let p = CostParams::default();
        let u_pick = Point::new(0.0, 0.0);
        let u_drop = Point::new(10.0, 0.0);
        let v_pick = Point::new(0.0, 2.0);
        // delivery at distance 3 from u_drop and 10 from v_pick:
        // (x-10)^2 + y^2 = 9, x^2 + (y-2)^2 = 100  ->  solve numerically below
        let v_del = solve_delivery(v_pick, u_drop);
        assert_abs_diff_eq!(v_del.distance(&u_drop), 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v_del.distance(&v_pick), 10.0, epsilon = 1e-9);
        let u = pax(0, 5.0, u_pick, u_drop, 0.0333);
        let c = parcel(0, v_pick, v_del, 0.05);
        assert_abs_diff_eq!(compute_beta(&u, Some(&c), &p), 17.68, epsilon = 1e-9);
    }

    // Intersection of the circle of radius 3 around `u_drop` with the circle
    // of radius 10 around `v_pick` (bisection along the first circle).
    fn solve_delivery(v_pick: Point, u_drop: Point) -> Point {
        let f = |a: f64| {
            let q = Point::new(u_drop.x + 3.0 * a.cos(), u_drop.y + 3.0 * a.sin());
            (q.distance(&v_pick) - 10.0, q)
        };
        let (mut lo, mut hi) = (std::f64::consts::PI, 2.0 * std::f64::consts::PI);
        assert!(f(lo).0 * f(hi).0 < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo).0 * f(mid).0 <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        f(0.5 * (lo + hi)).1
    }

    #[test]
    fn delta_examples() {
        let p = CostParams::default();
        let o = Point::new(1.0, 1.0);
        let u = pax(0, 5.0, o, o, 0.0);
        let c = parcel(0, o, o, 0.0);
        assert_eq!(compute_delta(&u, Some(&c), &p), 0.0);
        assert_eq!(compute_delta(&u, None, &p), 0.0);

        let u = pax(0, 5.0, Point::new(0.0, 0.0), Point::new(0.25 * p.nu, 0.0), 0.0333);
        assert_abs_diff_eq!(compute_delta(&u, None, &p), 0.3166, epsilon = 1e-12);

        // legs 0.05 h, 0.25 h, 0.075 h
        let u_pick = Point::new(0.0, 0.0);
        let u_drop = Point::new(0.25 * p.nu, 0.0);
        let v_pick = Point::new(-0.05 * p.nu, 0.0);
        let v_del = Point::new(u_drop.x, 0.075 * p.nu);
        let u = pax(0, 5.0, u_pick, u_drop, 0.0333);
        let c = parcel(0, v_pick, v_del, 0.05);
        assert_abs_diff_eq!(compute_delta(&u, Some(&c), &p), 0.5416, epsilon = 1e-12);
    }

    #[test]
    fn bundle_enumeration() {
        // n = m = 5, every triple fits comfortably inside the horizon
        let passengers = (0..5)
            .map(|i| pax(i, 4.0 + 3.0 * i as f64, Point::new(i as f64, 0.0), Point::new(i as f64, 5.0), 0.0333))
            .collect();
        let parcels = (0..5)
            .map(|i| parcel(i, Point::new(0.0, i as f64), Point::new(5.0, i as f64), 0.05))
            .collect();
        let inst = instance(passengers, parcels);
        let bundles = build_bundles(&inst);
        assert_eq!(bundles.len(), 30);
        for (i, b) in bundles.iter().enumerate() {
            assert_eq!(b.id, i);
        }
        assert!(bundles[..5].iter().all(|b| b.kind.parcel().is_none()));
        assert_eq!(bundles[5].kind, BundleKind::Triple { parcel: 0, passenger: 0 });
        assert_eq!(bundles[6].kind, BundleKind::Triple { parcel: 1, passenger: 0 });
        assert_eq!(bundles[29].kind, BundleKind::Triple { parcel: 4, passenger: 4 });

        let single = instance(vec![pax(0, 1.0, Point::new(0.0, 0.0), Point::new(1.0, 0.0), 0.03)], vec![]);
        assert_eq!(build_bundles(&single).len(), 1);
    }

    #[test]
    fn negative_start_triple_is_pruned() {
        let p = CostParams::default();
        // t_vu = 0.2 h, r_v = 0.05, e_u = 0.1 -> e_bar = -0.15
        let u = pax(0, 0.1, Point::new(0.0, 0.0), Point::new(1.0, 0.0), 0.0333);
        let c = parcel(0, Point::new(0.0, 0.2 * p.nu), Point::new(1.0, 1.0), 0.05);
        assert_abs_diff_eq!(compute_e_bar(&u, Some(&c), &p), -0.15, epsilon = 1e-12);
        let inst = instance(vec![u], vec![c]);
        assert_eq!(build_bundles(&inst).len(), 1);
    }

    #[test]
    fn late_triple_is_pruned() {
        let p = CostParams::default();
        let u = pax(0, 23.0, Point::new(0.0, 0.0), Point::new(10.0, 0.0), 0.0333);
        // delivery 30 km away from the dropoff: finishes after 24 h
        let c = parcel(0, Point::new(0.0, 1.0), Point::new(40.0, 0.0), 0.05);
        let b = make_bundle(1, &u, Some(&c), &p);
        assert!(b.finish() > 24.0);
        assert_eq!(build_bundles(&instance(vec![u], vec![c])).len(), 1);
    }

    fn spaced_pair(gap_h: f64, first_duration_h: f64) -> Instance {
        // two passenger bundles: e_bar 9.0 and 10.0, exit of the first 0.3 h
        // away from the entry of the second, delta_1 = first_duration_h
        let p = CostParams::default();
        let r = 0.05;
        let trip = (first_duration_h - 2.0 * r) * p.nu;
        let a = pax(0, 9.0, Point::new(0.0, 0.0), Point::new(trip, 0.0), r);
        let b_pick = Point::new(trip + gap_h * p.nu, 0.0);
        let b = pax(1, 10.0, b_pick, Point::new(b_pick.x + 1.0, 0.0), r);
        instance(vec![a, b], vec![])
    }

    #[test]
    fn arc_feasibility_by_time() {
        let g = build_graph(&spaced_pair(0.3, 0.3));
        assert_abs_diff_eq!(g.bundles[0].delta, 0.3, epsilon = 1e-12);
        let arc = g.arc(Node::Bundle(0), 1).expect("9.0 + 0.3 + 0.3 <= 10.0");
        assert_abs_diff_eq!(arc.time, 0.3, epsilon = 1e-12);
        assert!(g.arc(Node::Bundle(1), 0).is_none());

        let g = build_graph(&spaced_pair(0.3, 0.8));
        assert!(g.arc(Node::Bundle(0), 1).is_none(), "9.0 + 0.8 + 0.3 > 10.0");
    }

    #[test]
    fn no_arc_within_a_group() {
        let passengers = vec![
            pax(0, 2.0, Point::new(0.0, 0.0), Point::new(1.0, 0.0), 0.03),
            pax(1, 9.0, Point::new(5.0, 0.0), Point::new(6.0, 0.0), 0.03),
        ];
        let parcels = vec![
            parcel(0, Point::new(0.0, 1.0), Point::new(1.0, 1.0), 0.05),
            parcel(1, Point::new(2.0, 1.0), Point::new(3.0, 1.0), 0.05),
        ];
        let g = build_graph(&instance(passengers, parcels));
        assert_eq!(g.len(), 6);
        for group in &g.groups {
            for &i in group {
                for &j in group {
                    assert!(g.arc(Node::Bundle(i), j).is_none());
                }
            }
        }
        // groups partition the bundle ids
        let mut all: Vec<usize> = g.groups.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..g.len()).collect::<Vec<_>>());
        assert_eq!(g.parcel_index[0].len(), 2);
    }

    #[test]
    fn dot_dump_lists_nodes() {
        let g = build_graph(&spaced_pair(0.3, 0.3));
        let dot = g.to_dot();
        assert!(dot.starts_with("digraph bundles"));
        assert!(dot.contains("b0 -> b1"));
        assert!(dot.contains("s0 -> b0"));
        assert!(dot.contains("b1 -> f0"));
    }
}
