//! Synthetic multi-depot instances on a square grid, and the instance file
//! format.
//!
//! Each request is drawn by sampling its first point uniformly on the grid,
//! then a direction and a length inside the trip-distance range; endpoints
//! that leave the grid are resampled. Passenger time points are uniform over
//! the part of the horizon in which the whole trip fits, and are redrawn
//! until the fleet can cover every passenger.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    CostParams, Instance, ParcelRequest, PassengerRequest, Point, Vehicle, Violation, DEFAULT_HORIZON_H,
    DEFAULT_MAX_DRIVING_H, DEFAULT_PARCEL_SERVICE_H, DEFAULT_PASSENGER_SERVICE_H, PARCEL_DEMAND, PASSENGER_DEMAND,
};
use crate::solver_twostage::passengers_feasible;

/// Calibrated trip-distance range in km.
pub const DEFAULT_TRIP_DIST_MIN: f64 = 15.314;
pub const DEFAULT_TRIP_DIST_MAX: f64 = 17.376;
pub const DEFAULT_GRID_SIDE: f64 = 30.0;

const ENDPOINT_TRIES: usize = 100;
const TIME_POINT_ROUNDS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub m: usize,
    pub kappa: usize,
    pub seed: u64,
    pub grid_side: f64,
    pub trip_dist_min: f64,
    pub trip_dist_max: f64,
    pub horizon: f64,
    pub max_driving_time: f64,
    pub passenger_service_time: f64,
    pub parcel_service_time: f64,
}

impl GenConfig {
    /// Defaults for `n` passengers and `m` parcels, with one vehicle per two
    /// passengers (rounded up).
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            kappa: default_fleet_size(n),
            seed,
            grid_side: DEFAULT_GRID_SIDE,
            trip_dist_min: DEFAULT_TRIP_DIST_MIN,
            trip_dist_max: DEFAULT_TRIP_DIST_MAX,
            horizon: DEFAULT_HORIZON_H,
            max_driving_time: DEFAULT_MAX_DRIVING_H,
            passenger_service_time: DEFAULT_PASSENGER_SERVICE_H,
            parcel_service_time: DEFAULT_PARCEL_SERVICE_H,
        }
    }

    pub fn with_kappa(mut self, kappa: usize) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |msg: &str| Err(GenError::Config(msg.to_string()));
        if self.n == 0 {
            return bad("at least one passenger is required");
        }
        if self.kappa == 0 {
            return bad("at least one vehicle is required");
        }
        if !(self.grid_side > 0.0) {
            return bad("grid side must be positive");
        }
        if !(self.trip_dist_min > 0.0 && self.trip_dist_min < self.trip_dist_max) {
            return bad("trip distance range must satisfy 0 < min < max");
        }
        if self.trip_dist_max > self.grid_side * std::f64::consts::SQRT_2 {
            return Err(GenError::RangeUnattainable {
                max: self.trip_dist_max,
                diagonal: self.grid_side * std::f64::consts::SQRT_2,
            });
        }
        if !(self.horizon > 0.0 && self.max_driving_time > 0.0) {
            return bad("horizon and driving time must be positive");
        }
        if !(self.passenger_service_time > 0.0 && self.parcel_service_time > 0.0) {
            return bad("service times must be positive");
        }
        Ok(())
    }
}

pub fn default_fleet_size(n: usize) -> usize {
    n.div_ceil(2).max(1)
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("trip distance {max} km cannot fit on a grid with diagonal {diagonal:.3} km")]
    RangeUnattainable { max: f64, diagonal: f64 },
    #[error("no endpoint within the distance range after {0} tries")]
    EndpointRetries(usize),
    #[error("no passenger-feasible time points after {0} rounds")]
    PassengerInfeasible(usize),
    #[error("point {0} has no admissible partner")]
    NoPartner(usize),
    #[error("odd number of points ({0})")]
    OddPointCount(usize),
}

fn uniform_point(rng: &mut ChaCha8Rng, side: f64) -> Point {
    Point::new(rng.gen_range(0.0..=side), rng.gen_range(0.0..=side))
}

/// A pickup and a second point at distance within `[lo, hi]`, both on the grid.
fn sample_trip(rng: &mut ChaCha8Rng, side: f64, lo: f64, hi: f64) -> Result<(Point, Point), GenError> {
    for _ in 0..ENDPOINT_TRIES {
        let a = uniform_point(rng, side);
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let radius = rng.gen_range(lo..=hi);
        let b = Point::new(
            (a.x + radius * angle.cos()).clamp(0.0, side),
            (a.y + radius * angle.sin()).clamp(0.0, side),
        );
        let d = a.distance(&b);
        if (lo..=hi).contains(&d) {
            return Ok((a, b));
        }
    }
    Err(GenError::EndpointRetries(ENDPOINT_TRIES))
}

pub fn generate_instance(cfg: &GenConfig, params: &CostParams) -> Result<Instance, GenError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let side = cfg.grid_side;
    let (lo, hi) = (cfg.trip_dist_min, cfg.trip_dist_max);
    let r_pax = cfg.passenger_service_time;
    let r_parcel = cfg.parcel_service_time;

    let mut passengers = Vec::with_capacity(cfg.n);
    for id in 0..cfg.n {
        let (pickup, dropoff) = sample_trip(&mut rng, side, lo, hi)?;
        passengers.push(PassengerRequest {
            id,
            pickup,
            dropoff,
            service_time_pickup: r_pax,
            service_time_dropoff: r_pax,
            pickup_time: 0.0,
            demand: PASSENGER_DEMAND,
        });
    }
    let mut parcels = Vec::with_capacity(cfg.m);
    for id in 0..cfg.m {
        let (pickup, delivery) = sample_trip(&mut rng, side, lo, hi)?;
        parcels.push(ParcelRequest {
            id,
            pickup,
            delivery,
            service_time_pickup: r_parcel,
            service_time_delivery: r_parcel,
            demand: PARCEL_DEMAND,
        });
    }
    let vehicles = (0..cfg.kappa)
        .map(|id| Vehicle {
            id,
            origin: uniform_point(&mut rng, side),
            max_driving_time: cfg.max_driving_time,
        })
        .collect();
    let mut inst = Instance {
        params: *params,
        horizon_h: cfg.horizon,
        passengers,
        parcels,
        vehicles,
    };

    for _ in 0..TIME_POINT_ROUNDS {
        for p in &mut inst.passengers {
            let duration = p.service_time_pickup + p.pickup.distance(&p.dropoff) / params.nu + p.service_time_dropoff;
            let latest = (cfg.horizon - duration).max(0.0);
            p.pickup_time = rng.gen_range(0.0..=latest);
        }
        if passengers_feasible(&inst) {
            debug_assert!(inst.validate().is_empty());
            return Ok(inst);
        }
    }
    Err(GenError::PassengerInfeasible(TIME_POINT_ROUNDS))
}

/// Pairs the points into pickup/destination pairs whose distance lies in
/// `range`. Partners are tried in a seeded random order with backtracking, so
/// a pairing is found whenever one exists.
pub fn pair_points(points: &[Point], range: (f64, f64), seed: u64) -> Result<Vec<(Point, Point)>, GenError> {
    if points.len() % 2 == 1 {
        return Err(GenError::OddPointCount(points.len()));
    }
    let n = points.len();
    let admissible = |i: usize, j: usize| {
        let d = points[i].distance(&points[j]);
        d >= range.0 && d <= range.1
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && admissible(i, j)).collect())
        .collect();
    for c in &mut candidates {
        c.shuffle(&mut rng);
    }
    if let Some(i) = candidates.iter().position(Vec::is_empty) {
        return Err(GenError::NoPartner(i));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    fn solve(order: &[usize], candidates: &[Vec<usize>], mate: &mut [Option<usize>]) -> bool {
        let Some(&i) = order.iter().find(|&&i| mate[i].is_none()) else {
            return true;
        };
        for &j in &candidates[i] {
            if mate[j].is_some() {
                continue;
            }
            mate[i] = Some(j);
            mate[j] = Some(i);
            if solve(order, candidates, mate) {
                return true;
            }
            mate[i] = None;
            mate[j] = None;
        }
        false
    }

    let mut mate = vec![None; n];
    if !solve(&order, &candidates, &mut mate) {
        return Err(GenError::NoPartner(order[0]));
    }
    let mut pairs = Vec::with_capacity(n / 2);
    for &i in &order {
        if let Some(j) = mate[i] {
            if !pairs.iter().any(|&(a, _): &(usize, usize)| a == j) {
                pairs.push((i, j));
            }
        }
    }
    Ok(pairs.into_iter().map(|(i, j)| (points[i], points[j])).collect())
}

#[derive(Debug, Error)]
pub enum InstanceIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: invalid instance: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid { path: String, violations: Vec<Violation> },
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceIoError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| InstanceIoError::Io {
        path: shown.clone(),
        source,
    })?;
    let inst: Instance = serde_json::from_str(&text).map_err(|source| InstanceIoError::Parse {
        path: shown.clone(),
        source,
    })?;
    let violations = inst.validate();
    if !violations.is_empty() {
        return Err(InstanceIoError::Invalid { path: shown, violations });
    }
    Ok(inst)
}

pub fn write_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceIoError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(inst).expect("instances always serialize");
    text.push('\n');
    fs::write(path, text).map_err(|source| InstanceIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// `(n, m)` cells of the small class: 5 to 10 requests of each type, 10 to
/// 15 in total.
pub fn class1_cells() -> Vec<(usize, usize)> {
    let mut cells = Vec::new();
    for n in 5..=10 {
        for m in 5..=10 {
            if n + m <= 15 {
                cells.push((n, m));
            }
        }
    }
    cells
}

/// `(n, m)` cells of the large class.
pub fn class2_cells() -> Vec<(usize, usize)> {
    let sizes = [5, 10, 15, 20, 30];
    let mut cells = Vec::new();
    for n in sizes {
        for m in sizes.into_iter().filter(|&m| m != 5) {
            cells.push((n, m));
        }
    }
    cells
}

/// Seed of the `index`-th instance of cell `(n, m)` derived from a base seed.
pub fn instance_seed(base: u64, n: usize, m: usize, index: usize) -> u64 {
    let mut z = base ^ ((n as u64) << 40) ^ ((m as u64) << 20) ^ index as u64;
    // splitmix64 finaliser
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// File stem used for generated instances.
pub fn instance_name(n: usize, m: usize, index: usize) -> String {
    format!("md_n{n:02}_m{m:02}_{index:02}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn in_range(d: f64, cfg: &GenConfig) -> bool {
        d >= cfg.trip_dist_min && d <= cfg.trip_dist_max
    }

    #[test]
    fn five_by_five_instance() {
        let cfg = GenConfig::new(5, 5, 42).with_kappa(2);
        let inst = generate_instance(&cfg, &CostParams::default()).unwrap();
        assert_eq!((inst.n(), inst.m(), inst.kappa()), (5, 5, 2));
        assert!(inst.validate().is_empty());
        for p in &inst.passengers {
            assert!(in_range(p.trip_distance(), &cfg));
        }
        for c in &inst.parcels {
            assert!(in_range(c.trip_distance(), &cfg));
        }
        assert!(passengers_feasible(&inst));
    }

    #[test]
    fn single_passenger() {
        let cfg = GenConfig::new(1, 0, 3).with_kappa(1);
        let inst = generate_instance(&cfg, &CostParams::default()).unwrap();
        assert_eq!((inst.n(), inst.m(), inst.kappa()), (1, 0, 1));
        assert!(passengers_feasible(&inst));
    }

    #[test]
    fn same_seed_same_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = GenConfig::new(6, 7, 11);
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        write_instance(&generate_instance(&cfg, &CostParams::default()).unwrap(), &a).unwrap();
        write_instance(&generate_instance(&cfg, &CostParams::default()).unwrap(), &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn unattainable_range_rejected() {
        let mut cfg = GenConfig::new(5, 5, 1);
        cfg.grid_side = 10.0;
        assert!(matches!(
            generate_instance(&cfg, &CostParams::default()),
            Err(GenError::RangeUnattainable { .. })
        ));
    }

    #[test]
    fn zero_passengers_rejected() {
        let cfg = GenConfig::new(0, 5, 1);
        assert!(matches!(generate_instance(&cfg, &CostParams::default()), Err(GenError::Config(_))));
    }

    #[test]
    fn pairing_in_range_points() {
        let pts = [Point::new(0.0, 0.0), Point::new(16.0, 0.0)];
        let pairs = pair_points(&pts, (15.3, 17.4), 0).unwrap();
        assert_eq!(pairs.len(), 1);
    }

    #[test]
    fn pairing_out_of_range_points() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        assert!(matches!(pair_points(&pts, (15.3, 17.4), 0), Err(GenError::NoPartner(_))));
    }

    #[test]
    fn pairing_generated_points() {
        let mut cfg = GenConfig::new(5, 0, 9);
        cfg.grid_side = 25.0;
        let inst = generate_instance(&cfg, &CostParams::default()).unwrap();
        let mut pts: Vec<Point> = inst.passengers.iter().flat_map(|p| [p.pickup, p.dropoff]).collect();
        pts.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
        let pairs = pair_points(&pts, (cfg.trip_dist_min, cfg.trip_dist_max), 5).unwrap();
        assert_eq!(pairs.len(), 5);
        for (a, b) in &pairs {
            assert!(in_range(a.distance(b), &cfg));
        }
        let mut used: Vec<Point> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        used.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        assert_eq!(used, pts);
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let inst = generate_instance(&GenConfig::new(5, 6, 8), &CostParams::default()).unwrap();
        let path = dir.path().join("i.json");
        write_instance(&inst, &path).unwrap();
        assert_eq!(read_instance(&path).unwrap(), inst);
    }

    #[test]
    fn missing_vehicles_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let inst = generate_instance(&GenConfig::new(5, 5, 8), &CostParams::default()).unwrap();
        let mut value = serde_json::to_value(&inst).unwrap();
        value.as_object_mut().unwrap().remove("vehicles");
        let path = dir.path().join("i.json");
        fs::write(&path, value.to_string()).unwrap();
        let err = read_instance(&path).unwrap_err();
        assert!(matches!(err, InstanceIoError::Parse { .. }));
        assert!(err.to_string().contains("vehicles"), "{err}");
    }

    #[test]
    fn negative_time_point_is_an_invariant_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut inst = generate_instance(&GenConfig::new(5, 5, 8), &CostParams::default()).unwrap();
        inst.passengers[2].pickup_time = -1.0;
        let path = dir.path().join("i.json");
        write_instance(&inst, &path).unwrap();
        match read_instance(&path) {
            Err(InstanceIoError::Invalid { violations, .. }) => {
                assert!(violations.iter().any(|v| v.field == "passengers[2].pickup_time"));
            }
            other => panic!("expected invariant error, got {other:?}"),
        }
    }

    #[test]
    fn class_grids() {
        let c1 = class1_cells();
        assert_eq!(c1.len(), 21);
        assert!(c1.iter().all(|&(n, m)| (5..=10).contains(&n) && (5..=10).contains(&m) && n + m <= 15));
        assert_eq!(class2_cells().len(), 20);
        assert_ne!(instance_seed(7, 5, 6, 0), instance_seed(7, 6, 5, 0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn generated_requests_respect_range(seed in any::<u64>(), n in 1usize..7, m in 0usize..7) {
            let cfg = GenConfig::new(n, m, seed);
            let inst = generate_instance(&cfg, &CostParams::default()).unwrap();
            prop_assert!(inst.validate().is_empty());
            for p in &inst.passengers {
                prop_assert!(in_range(p.trip_distance(), &cfg));
            }
            for c in &inst.parcels {
                prop_assert!(in_range(c.trip_distance(), &cfg));
            }
            prop_assert_eq!(&generate_instance(&cfg, &CostParams::default()).unwrap(), &inst);
        }
    }
}
