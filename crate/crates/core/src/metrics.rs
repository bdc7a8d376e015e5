//! Independent re-validation of solutions and the evaluation measures.
//!
//! Nothing reported by a solver is trusted: every route is expanded into its
//! raw node sequence and simulated from the vehicle origin. Passenger pickups
//! wait for their time point, every other node starts on arrival, and the
//! vehicle leaves its origin as late as the first passenger time point allows.

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::model::{Instance, Point, Solution, ServiceUnit, EPS};

/// Result of re-simulating a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub profit: f64,
    pub revenue: f64,
    pub distance: f64,
    /// Distance driven with nothing onboard.
    pub empty_distance: f64,
    /// Largest number of parcels onboard at once on any vehicle.
    pub max_parcel_load: usize,
    pub serviced_parcels: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.violations.join("; "))
    }
}

impl std::error::Error for ValidationReport {}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NodeKind {
    PassengerPickup(usize),
    PassengerDropoff(usize),
    ParcelPickup(usize),
    ParcelDelivery(usize),
}

fn expand(unit: ServiceUnit, out: &mut Vec<NodeKind>) {
    match unit {
        ServiceUnit::Bundle { passenger, parcel, .. } => {
            if let Some(v) = parcel {
                out.push(NodeKind::ParcelPickup(v));
            }
            out.push(NodeKind::PassengerPickup(passenger));
            out.push(NodeKind::PassengerDropoff(passenger));
            if let Some(v) = parcel {
                out.push(NodeKind::ParcelDelivery(v));
            }
        }
        ServiceUnit::Passenger { passenger } => {
            out.push(NodeKind::PassengerPickup(passenger));
            out.push(NodeKind::PassengerDropoff(passenger));
        }
        ServiceUnit::ParcelPickup { parcel } => out.push(NodeKind::ParcelPickup(parcel)),
        ServiceUnit::ParcelDelivery { parcel } => out.push(NodeKind::ParcelDelivery(parcel)),
    }
}

/// Re-simulates the solution and checks every feasibility rule. Passengers
/// must all be served and the reported profit must match.
pub fn evaluate_solution(sol: &Solution, inst: &Instance) -> Result<f64, ValidationReport> {
    evaluate_detailed(sol, inst, true).map(|e| e.profit)
}

/// Like [`evaluate_solution`] with full details; `require_cover` toggles the
/// check that every passenger is served.
pub fn evaluate_detailed(sol: &Solution, inst: &Instance, require_cover: bool) -> Result<Evaluation, ValidationReport> {
    let params = &inst.params;
    let mut bad = Vec::new();
    let mut passenger_seen = vec![0usize; inst.n()];
    let mut pickup_seen = vec![0usize; inst.m()];
    let mut delivery_seen = vec![0usize; inst.m()];
    let mut vehicle_seen = vec![false; inst.kappa()];
    let mut revenue = 0.0;
    let mut distance = 0.0;
    let mut empty_distance = 0.0;
    let mut max_parcel_load = 0;

    for (ri, route) in sol.routes.iter().enumerate() {
        let Some(vehicle) = inst.vehicles.get(route.vehicle) else {
            bad.push(format!("route {ri}: unknown vehicle {}", route.vehicle));
            continue;
        };
        if std::mem::replace(&mut vehicle_seen[route.vehicle], true) {
            bad.push(format!("vehicle {} has more than one route", route.vehicle));
        }
        let mut nodes = Vec::new();
        for visit in &route.visits {
            expand(visit.unit, &mut nodes);
        }
        if nodes.is_empty() {
            continue;
        }
        let mut ok = true;
        for &node in &nodes {
            let (idx, len) = match node {
                NodeKind::PassengerPickup(u) | NodeKind::PassengerDropoff(u) => (u, inst.n()),
                NodeKind::ParcelPickup(v) | NodeKind::ParcelDelivery(v) => (v, inst.m()),
            };
            if idx >= len {
                bad.push(format!("vehicle {}: unknown request in {node:?}", route.vehicle));
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        let location = |node: NodeKind| -> (Point, f64) {
            match node {
                NodeKind::PassengerPickup(u) => (inst.passengers[u].pickup, inst.passengers[u].service_time_pickup),
                NodeKind::PassengerDropoff(u) => (inst.passengers[u].dropoff, inst.passengers[u].service_time_dropoff),
                NodeKind::ParcelPickup(v) => (inst.parcels[v].pickup, inst.parcels[v].service_time_pickup),
                NodeKind::ParcelDelivery(v) => (inst.parcels[v].delivery, inst.parcels[v].service_time_delivery),
            }
        };

        // latest departure that still reaches the first passenger on time
        let mut departure = 0.0;
        let mut lead = 0.0;
        let mut here = vehicle.origin;
        for &node in &nodes {
            let (at, r) = location(node);
            lead += params.travel_time(&here, &at);
            if let NodeKind::PassengerPickup(u) = node {
                departure = inst.passengers[u].pickup_time - lead;
                break;
            }
            lead += r;
            here = at;
        }
        if departure < -EPS {
            bad.push(format!("vehicle {}: must leave before the horizon starts", route.vehicle));
        }

        let mut time = departure;
        let mut here = vehicle.origin;
        let mut onboard_passenger: Option<usize> = None;
        let mut onboard_parcels: Vec<usize> = Vec::new();
        for (pos, &node) in nodes.iter().enumerate() {
            let (at, r) = location(node);
            let leg = here.distance(&at);
            distance += leg;
            if onboard_passenger.is_none() && onboard_parcels.is_empty() {
                empty_distance += leg;
            }
            time += leg / params.nu;
            match node {
                NodeKind::PassengerPickup(u) => {
                    let p = &inst.passengers[u];
                    if time > p.pickup_time + EPS {
                        bad.push(format!("passenger {u}: reached at {time:.6} after time point {:.6}", p.pickup_time));
                    }
                    time = time.max(p.pickup_time);
                    if nodes.get(pos + 1) != Some(&NodeKind::PassengerDropoff(u)) {
                        bad.push(format!("passenger {u}: dropoff does not follow pickup directly"));
                    }
                    passenger_seen[u] += 1;
                    revenue += p.revenue(params);
                    onboard_passenger = Some(u);
                }
                NodeKind::PassengerDropoff(u) => {
                    if onboard_passenger != Some(u) {
                        bad.push(format!("passenger {u}: dropoff without pickup"));
                    }
                    onboard_passenger = None;
                }
                NodeKind::ParcelPickup(v) => {
                    pickup_seen[v] += 1;
                    onboard_parcels.push(v);
                    max_parcel_load = max_parcel_load.max(onboard_parcels.len());
                }
                NodeKind::ParcelDelivery(v) => {
                    delivery_seen[v] += 1;
                    match onboard_parcels.iter().position(|&x| x == v) {
                        Some(i) => {
                            onboard_parcels.remove(i);
                            revenue += inst.parcels[v].revenue(params);
                        }
                        None => bad.push(format!("parcel {v}: delivered before pickup or by another vehicle")),
                    }
                }
            }
            time += r;
            here = at;
        }
        if !onboard_parcels.is_empty() {
            bad.push(format!("vehicle {}: parcels {onboard_parcels:?} never delivered", route.vehicle));
        }
        if time > inst.horizon_h + EPS {
            bad.push(format!("vehicle {}: finishes at {time:.6} after the horizon", route.vehicle));
        }
        if time - departure > vehicle.max_driving_time + EPS {
            bad.push(format!(
                "vehicle {}: span {:.6} exceeds maximum driving time {}",
                route.vehicle,
                time - departure,
                vehicle.max_driving_time
            ));
        }
    }

    for (u, &count) in passenger_seen.iter().enumerate() {
        if count > 1 || (require_cover && count == 0) {
            bad.push(format!("passenger {u}: served {count} times"));
        }
    }
    let mut serviced = 0;
    for v in 0..inst.m() {
        if pickup_seen[v] > 1 || delivery_seen[v] > 1 {
            bad.push(format!("parcel {v}: served more than once"));
        }
        let delivered = delivery_seen[v] > 0;
        serviced += usize::from(delivered);
        if delivered != sol.serviced_parcels.contains(&v) {
            bad.push(format!("parcel {v}: serviced set disagrees with the routes"));
        }
    }
    if let Some(&v) = sol.serviced_parcels.iter().find(|&&v| v >= inst.m()) {
        bad.push(format!("parcel {v}: unknown parcel in serviced set"));
    }

    let profit = revenue - params.arc_cost(distance);
    if (profit - sol.profit).abs() > EPS {
        bad.push(format!("reported profit {} differs from recomputed {profit}", sol.profit));
    }
    if bad.is_empty() {
        Ok(Evaluation {
            profit,
            revenue,
            distance,
            empty_distance,
            max_parcel_load,
            serviced_parcels: serviced,
        })
    } else {
        Err(ValidationReport { violations: bad })
    }
}

/// Percentage of parcel requests served; `None` without parcels.
pub fn serviced_fraction(sol: &Solution, inst: &Instance) -> Option<f64> {
    (inst.m() > 0).then(|| 100.0 * sol.serviced_parcels.len() as f64 / inst.m() as f64)
}

/// Relative profit gain over the passenger-only baseline in percent;
/// `None` when the baseline is not positive.
pub fn revenue_increase(sol_profit: f64, pax_only_profit: f64) -> Option<f64> {
    (pax_only_profit > 0.0).then(|| 100.0 * (sol_profit - pax_only_profit) / pax_only_profit)
}

/// Fraction of the driven distance with neither a passenger nor a parcel
/// onboard. Legs into dummy depots are free and not driven. `None` when
/// nothing is driven.
pub fn deadheading(sol: &Solution, inst: &Instance) -> Option<f64> {
    let (empty, total) = driven_distances(sol, inst);
    (total > 0.0).then(|| empty / total)
}

fn driven_distances(sol: &Solution, inst: &Instance) -> (f64, f64) {
    let mut empty = 0.0;
    let mut total = 0.0;
    for route in &sol.routes {
        let Some(vehicle) = inst.vehicles.get(route.vehicle) else { continue };
        let mut nodes = Vec::new();
        for visit in &route.visits {
            expand(visit.unit, &mut nodes);
        }
        let mut here = vehicle.origin;
        let mut passenger = false;
        let mut parcels = 0usize;
        for node in nodes {
            let at = match node {
                NodeKind::PassengerPickup(u) => inst.passengers[u].pickup,
                NodeKind::PassengerDropoff(u) => inst.passengers[u].dropoff,
                NodeKind::ParcelPickup(v) => inst.parcels[v].pickup,
                NodeKind::ParcelDelivery(v) => inst.parcels[v].delivery,
            };
            let leg = here.distance(&at);
            total += leg;
            if !passenger && parcels == 0 {
                empty += leg;
            }
            match node {
                NodeKind::PassengerPickup(_) => passenger = true,
                NodeKind::PassengerDropoff(_) => passenger = false,
                NodeKind::ParcelPickup(_) => parcels += 1,
                NodeKind::ParcelDelivery(_) => parcels = parcels.saturating_sub(1),
            }
            here = at;
        }
    }
    (empty, total)
}

/// Relative reduction of the deadheading fraction in percent; negative when
/// the method drives empty more often. `None` when the baseline is zero.
pub fn deadheading_reduction(method_frac: f64, pax_frac: f64) -> Option<f64> {
    (pax_frac > 0.0).then(|| 100.0 * (pax_frac - method_frac) / pax_frac)
}

/// One evaluated `(instance, method)` run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub instance: String,
    pub method: String,
    pub status: String,
    pub n: usize,
    pub m: usize,
    pub kappa: usize,
    pub profit: Option<f64>,
    pub pax_only_profit: Option<f64>,
    pub serviced_parcels: Option<usize>,
    pub serviced_parcels_pct: Option<f64>,
    pub revenue_increase_pct: Option<f64>,
    pub deadheading_fraction: Option<f64>,
    pub pax_deadheading_fraction: Option<f64>,
    pub deadheading_reduction_pct: Option<f64>,
    pub optimal: Option<bool>,
    pub gap_pct: Option<f64>,
    /// Wall time in seconds; kept out of the deterministic columns.
    pub solve_time: Option<f64>,
}

/// Column order of the metrics CSV.
pub const METRICS_COLUMNS: [&str; 17] = [
    "instance",
    "method",
    "status",
    "n",
    "m",
    "kappa",
    "profit",
    "pax_only_profit",
    "serviced_parcels",
    "serviced_parcels_pct",
    "revenue_increase_pct",
    "deadheading_fraction",
    "pax_deadheading_fraction",
    "deadheading_reduction_pct",
    "optimal",
    "gap_pct",
    "solve_time_s",
];

/// Placeholder written for measures that do not apply.
pub const NOT_APPLICABLE: &str = "NA";

pub fn format_value(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.6}"),
        Some(_) | None => NOT_APPLICABLE.to_string(),
    }
}

impl MetricsReport {
    /// A report for a solution that passed validation.
    pub fn for_solution(
        instance: &str,
        method: &str,
        sol: &Solution,
        inst: &Instance,
        pax_only: Option<(&Solution, f64)>,
    ) -> Self {
        let frac = deadheading(sol, inst);
        let pax_frac = pax_only.and_then(|(s, _)| deadheading(s, inst));
        let pax_profit = pax_only.map(|(_, p)| p);
        Self {
            instance: instance.to_string(),
            method: method.to_string(),
            status: "ok".to_string(),
            n: inst.n(),
            m: inst.m(),
            kappa: inst.kappa(),
            profit: Some(sol.profit),
            pax_only_profit: pax_profit,
            serviced_parcels: Some(sol.serviced_parcels.len()),
            serviced_parcels_pct: serviced_fraction(sol, inst),
            revenue_increase_pct: pax_profit.and_then(|p| revenue_increase(sol.profit, p)),
            deadheading_fraction: frac,
            pax_deadheading_fraction: pax_frac,
            deadheading_reduction_pct: match (frac, pax_frac) {
                (Some(f), Some(p)) => deadheading_reduction(f, p),
                _ => None,
            },
            optimal: None,
            gap_pct: None,
            solve_time: None,
        }
    }

    /// A report for a run that produced no solution.
    pub fn failed(instance: &str, method: &str, status: &str, inst: &Instance) -> Self {
        Self {
            instance: instance.to_string(),
            method: method.to_string(),
            status: status.to_string(),
            n: inst.n(),
            m: inst.m(),
            kappa: inst.kappa(),
            profit: None,
            pax_only_profit: None,
            serviced_parcels: None,
            serviced_parcels_pct: None,
            revenue_increase_pct: None,
            deadheading_fraction: None,
            pax_deadheading_fraction: None,
            deadheading_reduction_pct: None,
            optimal: None,
            gap_pct: None,
            solve_time: None,
        }
    }

    /// CSV fields in [`METRICS_COLUMNS`] order, without the trailing time
    /// column when `with_time` is false.
    pub fn record(&self, with_time: bool) -> Vec<String> {
        let mut row = vec![
            self.instance.clone(),
            self.method.clone(),
            self.status.clone(),
            self.n.to_string(),
            self.m.to_string(),
            self.kappa.to_string(),
            format_value(self.profit),
            format_value(self.pax_only_profit),
            self.serviced_parcels.map_or(NOT_APPLICABLE.to_string(), |c| c.to_string()),
            format_value(self.serviced_parcels_pct),
            format_value(self.revenue_increase_pct),
            format_value(self.deadheading_fraction),
            format_value(self.pax_deadheading_fraction),
            format_value(self.deadheading_reduction_pct),
            self.optimal.map_or(NOT_APPLICABLE.to_string(), |o| o.to_string()),
            format_value(self.gap_pct),
        ];
        if with_time {
            row.push(format_value(self.solve_time));
        }
        row
    }
}

/// Writes reports as CSV with the fixed column order.
pub fn write_metrics_csv<W: Write>(out: W, reports: &[MetricsReport], with_time: bool) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let columns = if with_time { &METRICS_COLUMNS[..] } else { &METRICS_COLUMNS[..16] };
    writer.write_record(columns)?;
    for r in reports {
        writer.write_record(r.record(with_time))?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostParams, ParcelRequest, PassengerRequest, Route, Vehicle, Visit};
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeSet;

    fn one_passenger(origin: Point) -> Instance {
        Instance {
            params: CostParams::default(),
            horizon_h: 24.0,
            passengers: vec![PassengerRequest {
                id: 0,
                pickup: Point::new(5.0, 0.0),
                dropoff: Point::new(15.0, 0.0),
                service_time_pickup: 0.0333,
                service_time_dropoff: 0.0333,
                pickup_time: 2.0,
                demand: 3,
            }],
            parcels: vec![ParcelRequest {
                id: 0,
                pickup: Point::new(3.0, 0.0),
                delivery: Point::new(18.0, 0.0),
                service_time_pickup: 0.05,
                service_time_delivery: 0.05,
                demand: 1,
            }],
            vehicles: vec![Vehicle {
                id: 0,
                origin,
                max_driving_time: 8.0,
            }],
        }
    }

    fn visit(unit: ServiceUnit) -> Visit {
        Visit {
            unit,
            arrival: 0.0,
            start: 0.0,
            finish: 0.0,
        }
    }

    fn solution(units: Vec<ServiceUnit>, profit: f64) -> Solution {
        let serviced: BTreeSet<usize> = units
            .iter()
            .filter_map(|u| match u {
                ServiceUnit::ParcelDelivery { parcel } => Some(*parcel),
                ServiceUnit::Bundle { parcel, .. } => *parcel,
                _ => None,
            })
            .collect();
        Solution {
            routes: vec![Route {
                vehicle: 0,
                departure: 0.0,
                visits: units.into_iter().map(visit).collect(),
            }],
            profit,
            serviced_parcels: serviced,
        }
    }

    #[test]
    fn empty_routes_without_cover_check() {
        let inst = one_passenger(Point::new(0.0, 0.0));
        let e = evaluate_detailed(&Solution::empty(1), &inst, false).unwrap();
        assert_eq!(e.profit, 0.0);
        assert!(evaluate_solution(&Solution::empty(1), &inst).is_err());
    }

    #[test]
    fn passenger_only_profit_by_hand() {
        let inst = one_passenger(Point::new(0.0, 0.0));
        // revenue 3.24 + 1.03 * 10 = 13.54, distance 5 + 10
        let expected = 13.54 - 0.46 * 15.0;
        let sol = solution(vec![ServiceUnit::Passenger { passenger: 0 }], expected);
        assert_abs_diff_eq!(evaluate_solution(&sol, &inst).unwrap(), expected, epsilon = 1e-9);
        assert_abs_diff_eq!(deadheading(&sol, &inst).unwrap(), 5.0 / 15.0, epsilon = 1e-12);
    }

    #[test]
    fn origin_at_pickup_has_no_deadheading() {
        let inst = one_passenger(Point::new(5.0, 0.0));
        let sol = solution(vec![ServiceUnit::Passenger { passenger: 0 }], 0.0);
        assert_eq!(deadheading(&sol, &inst), Some(0.0));
    }

    #[test]
    fn triple_bundle_deadheading() {
        // origin 5 km before the parcel pickup, legs 2 / 10 / 3 km
        let inst = one_passenger(Point::new(-2.0, 0.0));
        let unit = ServiceUnit::Bundle {
            id: 1,
            passenger: 0,
            parcel: Some(0),
        };
        let revenue = 13.54 + 2.74 + 0.83 * 15.0;
        let sol = solution(vec![unit], revenue - 0.46 * 20.0);
        let e = evaluate_detailed(&sol, &inst, true).unwrap();
        assert_abs_diff_eq!(e.distance, 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(deadheading(&sol, &inst).unwrap(), 0.25, epsilon = 1e-12);
        assert_eq!(e.max_parcel_load, 1);
    }

    #[test]
    fn duplicated_parcel_is_a_violation() {
        let inst = one_passenger(Point::new(0.0, 0.0));
        let units = vec![
            ServiceUnit::ParcelPickup { parcel: 0 },
            ServiceUnit::ParcelDelivery { parcel: 0 },
            ServiceUnit::Passenger { passenger: 0 },
            ServiceUnit::ParcelPickup { parcel: 0 },
            ServiceUnit::ParcelDelivery { parcel: 0 },
        ];
        let err = evaluate_solution(&solution(units, 0.0), &inst).unwrap_err();
        assert!(err.violations.iter().any(|v| v.contains("more than once")), "{err}");
    }

    #[test]
    fn late_arrival_and_wrong_profit_are_violations() {
        let mut inst = one_passenger(Point::new(0.0, 0.0));
        let sol = solution(vec![ServiceUnit::Passenger { passenger: 0 }], 1.0);
        let err = evaluate_solution(&sol, &inst).unwrap_err();
        assert!(err.violations.iter().any(|v| v.contains("profit")));
        // the origin leg takes longer than the time point allows
        inst.passengers[0].pickup_time = 0.01;
        let err = evaluate_solution(&sol, &inst).unwrap_err();
        assert!(err.violations.iter().any(|v| v.contains("before the horizon")), "{err}");
    }

    #[test]
    fn measures() {
        assert_eq!(revenue_increase(150.0, 100.0), Some(50.0));
        assert_eq!(revenue_increase(100.0, 100.0), Some(0.0));
        assert_eq!(revenue_increase(5.0, 0.0), None);
        assert_abs_diff_eq!(deadheading_reduction(0.25, 1.0 / 3.0).unwrap(), 25.0, epsilon = 1e-9);
        assert_eq!(deadheading_reduction(0.3, 0.3), Some(0.0));
        assert!(deadheading_reduction(0.5, 0.25).unwrap() < 0.0);
        assert_eq!(deadheading_reduction(0.1, 0.0), None);
    }

    #[test]
    fn serviced_percentages() {
        let mut inst = one_passenger(Point::new(0.0, 0.0));
        inst.parcels = (0..5)
            .map(|id| ParcelRequest {
                id,
                ..inst.parcels[0].clone()
            })
            .collect();
        let mut sol = Solution::empty(1);
        assert_eq!(serviced_fraction(&sol, &inst), Some(0.0));
        sol.serviced_parcels = [0, 2, 4].into_iter().collect();
        assert_eq!(serviced_fraction(&sol, &inst), Some(60.0));
        assert_eq!(serviced_fraction(&sol, &inst.without_parcels()), None);
    }

    #[test]
    fn csv_uses_fixed_columns_and_na() {
        let inst = one_passenger(Point::new(0.0, 0.0));
        let r = MetricsReport::failed("x", "bf", "infeasible", &inst);
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &[r], false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), METRICS_COLUMNS[..16].join(","));
        assert_eq!(lines.next().unwrap(), "x,bf,infeasible,1,1,1,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA");
    }
}
