//! Domain types shared by every solver: requests, vehicles, the cost
//! parameters and the elementary revenue, cost and travel-time formulas.
//!
//! Coordinates are planar kilometres, times are hours measured from the
//! start of the planning horizon, money is US$.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Absolute tolerance used for every money and time comparison.
pub const EPS: f64 = 1e-6;

/// Passenger board/alight time (2 min).
pub const DEFAULT_PASSENGER_SERVICE_H: f64 = 0.0333;
/// Parcel load/unload time (3 min).
pub const DEFAULT_PARCEL_SERVICE_H: f64 = 0.05;
/// Maximum driving time of a vehicle.
pub const DEFAULT_MAX_DRIVING_H: f64 = 8.0;
/// Planning horizon.
pub const DEFAULT_HORIZON_H: f64 = 24.0;

pub const PASSENGER_DEMAND: i32 = 3;
pub const PARCEL_DEMAND: i32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Fare and cost parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostParams {
    /// Initial passenger fare.
    pub gamma1: f64,
    /// Passenger fare per km.
    pub mu1: f64,
    /// Initial parcel fare.
    pub gamma2: f64,
    /// Parcel fare per km.
    pub mu2: f64,
    /// Driving cost per km.
    pub mu3: f64,
    /// Average speed in km/h.
    pub nu: f64,
}

impl Default for CostParams {
    /// Averages calibrated from ride-hailing price estimates, driving cost
    /// databases and observed city speeds.
    fn default() -> Self {
        Self {
            gamma1: 3.24,
            mu1: 1.03,
            gamma2: 2.74,
            mu2: 0.83,
            mu3: 0.46,
            nu: 40.943,
        }
    }
}

impl CostParams {
    /// Driving time between two points.
    #[inline]
    pub fn travel_time(&self, a: &Point, b: &Point) -> f64 {
        a.distance(b) / self.nu
    }

    #[inline]
    pub fn arc_cost(&self, d: f64) -> f64 {
        self.mu3 * d
    }

    #[inline]
    pub fn passenger_revenue(&self, d: f64) -> f64 {
        self.gamma1 + self.mu1 * d
    }

    #[inline]
    pub fn parcel_revenue(&self, d: f64) -> f64 {
        self.gamma2 + self.mu2 * d
    }

    fn violations(&self, out: &mut Vec<Violation>) {
        let strictly_positive = [
            ("params.mu1", self.mu1),
            ("params.mu2", self.mu2),
            ("params.mu3", self.mu3),
            ("params.nu", self.nu),
        ];
        for (field, value) in strictly_positive {
            if !(value > 0.0 && value.is_finite()) {
                out.push(Violation::new(field, "must be strictly positive"));
            }
        }
        for (field, value) in [("params.gamma1", self.gamma1), ("params.gamma2", self.gamma2)] {
            if !(value >= 0.0 && value.is_finite()) {
                out.push(Violation::new(field, "must be non-negative"));
            }
        }
        if self.mu2 <= self.mu3 {
            out.push(Violation::new(
                "params.mu2",
                "parcel fare per km must exceed driving cost per km",
            ));
        }
    }
}

/// A passenger request, serviced at a fixed time point and carried without detours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassengerRequest {
    pub id: usize,
    pub pickup: Point,
    pub dropoff: Point,
    pub service_time_pickup: f64,
    pub service_time_dropoff: f64,
    /// The time point at which boarding starts.
    pub pickup_time: f64,
    #[serde(default = "default_passenger_demand")]
    pub demand: i32,
}

fn default_passenger_demand() -> i32 {
    PASSENGER_DEMAND
}

fn default_parcel_demand() -> i32 {
    PARCEL_DEMAND
}

impl PassengerRequest {
    pub fn trip_distance(&self) -> f64 {
        self.pickup.distance(&self.dropoff)
    }

    /// Arrival at the dropoff location, `e_i + r_i + t(pickup, dropoff)`.
    pub fn dropoff_time(&self, params: &CostParams) -> f64 {
        self.pickup_time + self.service_time_pickup + params.travel_time(&self.pickup, &self.dropoff)
    }

    /// Time the vehicle is free again after the passenger alighted.
    pub fn completion_time(&self, params: &CostParams) -> f64 {
        self.dropoff_time(params) + self.service_time_dropoff
    }

    pub fn revenue(&self, params: &CostParams) -> f64 {
        params.passenger_revenue(self.trip_distance())
    }
}

/// Free function form of [`PassengerRequest::dropoff_time`].
pub fn passenger_dropoff_time(p: &PassengerRequest, params: &CostParams) -> f64 {
    p.dropoff_time(params)
}

/// A parcel request; its time window is the whole horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParcelRequest {
    pub id: usize,
    pub pickup: Point,
    pub delivery: Point,
    pub service_time_pickup: f64,
    pub service_time_delivery: f64,
    #[serde(default = "default_parcel_demand")]
    pub demand: i32,
}

impl ParcelRequest {
    pub fn trip_distance(&self) -> f64 {
        self.pickup.distance(&self.delivery)
    }

    pub fn revenue(&self, params: &CostParams) -> f64 {
        params.parcel_revenue(self.trip_distance())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vehicle {
    pub id: usize,
    pub origin: Point,
    pub max_driving_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub params: CostParams,
    pub horizon_h: f64,
    pub passengers: Vec<PassengerRequest>,
    pub parcels: Vec<ParcelRequest>,
    pub vehicles: Vec<Vehicle>,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.passengers.len()
    }

    pub fn m(&self) -> usize {
        self.parcels.len()
    }

    pub fn kappa(&self) -> usize {
        self.vehicles.len()
    }

    /// The same instance with every parcel request removed.
    pub fn without_parcels(&self) -> Instance {
        Instance {
            parcels: Vec::new(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_instance(self)
    }
}

/// One violated instance invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn finite_point(p: &Point) -> bool {
    p.x.is_finite() && p.y.is_finite()
}

/// Lists every violated instance invariant; an empty list means the
/// instance is valid. Never aborts.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    inst.params.violations(&mut out);
    let tau = inst.horizon_h;
    if !(tau > 0.0 && tau.is_finite()) {
        out.push(Violation::new("horizon_h", "must be strictly positive"));
    }
    if inst.passengers.is_empty() {
        out.push(Violation::new("passengers", "at least one passenger is required"));
    }
    if inst.vehicles.is_empty() {
        out.push(Violation::new("vehicles", "at least one vehicle is required"));
    }

    for (i, p) in inst.passengers.iter().enumerate() {
        let field = |name: &str| format!("passengers[{i}].{name}");
        if p.id != i {
            out.push(Violation::new(field("id"), format!("expected id {i}, found {}", p.id)));
        }
        if !finite_point(&p.pickup) || !finite_point(&p.dropoff) {
            out.push(Violation::new(field("pickup"), "coordinates must be finite"));
        }
        if !(p.service_time_pickup > 0.0) {
            out.push(Violation::new(field("service_time_pickup"), "must be strictly positive"));
        }
        if !(p.service_time_dropoff > 0.0) {
            out.push(Violation::new(field("service_time_dropoff"), "must be strictly positive"));
        }
        if p.demand != PASSENGER_DEMAND {
            out.push(Violation::new(field("demand"), format!("must be {PASSENGER_DEMAND}")));
        }
        if !p.pickup_time.is_finite() {
            out.push(Violation::new(field("pickup_time"), "must be finite"));
        } else if p.pickup_time < 0.0 {
            out.push(Violation::new(field("pickup_time"), "pickup before horizon start"));
        } else if inst.params.nu > 0.0 && p.completion_time(&inst.params) > tau + EPS {
            out.push(Violation::new(field("pickup_time"), "trip exceeds horizon"));
        }
    }

    for (i, c) in inst.parcels.iter().enumerate() {
        let field = |name: &str| format!("parcels[{i}].{name}");
        if c.id != i {
            out.push(Violation::new(field("id"), format!("expected id {i}, found {}", c.id)));
        }
        if !finite_point(&c.pickup) || !finite_point(&c.delivery) {
            out.push(Violation::new(field("pickup"), "coordinates must be finite"));
        }
        if !(c.service_time_pickup > 0.0) {
            out.push(Violation::new(field("service_time_pickup"), "must be strictly positive"));
        }
        if !(c.service_time_delivery > 0.0) {
            out.push(Violation::new(field("service_time_delivery"), "must be strictly positive"));
        }
        if c.demand != PARCEL_DEMAND {
            out.push(Violation::new(field("demand"), format!("must be {PARCEL_DEMAND}")));
        }
    }

    for (i, v) in inst.vehicles.iter().enumerate() {
        let field = |name: &str| format!("vehicles[{i}].{name}");
        if v.id != i {
            out.push(Violation::new(field("id"), format!("expected id {i}, found {}", v.id)));
        }
        if !finite_point(&v.origin) {
            out.push(Violation::new(field("origin"), "coordinates must be finite"));
        }
        if !(v.max_driving_time > 0.0) {
            out.push(Violation::new(field("max_driving_time"), "must be strictly positive"));
        }
    }
    out
}

/// A visited service unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServiceUnit {
    /// A node of the bundle graph: a passenger trip, optionally wrapped by a
    /// parcel pickup before and its delivery right after.
    Bundle {
        id: usize,
        passenger: usize,
        parcel: Option<usize>,
    },
    /// A passenger trip (pickup immediately followed by dropoff).
    Passenger { passenger: usize },
    ParcelPickup { parcel: usize },
    ParcelDelivery { parcel: usize },
}

/// A service unit with its schedule. `start` is the time the first service
/// of the unit begins, `finish` when the last one ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub unit: ServiceUnit,
    pub arrival: f64,
    pub start: f64,
    pub finish: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub vehicle: usize,
    /// Time the vehicle leaves its origin; unused vehicles report 0.
    pub departure: f64,
    pub visits: Vec<Visit>,
}

impl Route {
    pub fn idle(vehicle: usize) -> Self {
        Self {
            vehicle,
            departure: 0.0,
            visits: Vec::new(),
        }
    }

    pub fn is_idle(&self) -> bool {
        self.visits.is_empty()
    }

    pub fn finish(&self) -> f64 {
        self.visits.last().map_or(self.departure, |v| v.finish)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// One route per vehicle, indexed by vehicle id.
    pub routes: Vec<Route>,
    pub profit: f64,
    pub serviced_parcels: BTreeSet<usize>,
}

impl Solution {
    pub fn empty(kappa: usize) -> Self {
        Self {
            routes: (0..kappa).map(Route::idle).collect(),
            profit: 0.0,
            serviced_parcels: BTreeSet::new(),
        }
    }
}
