//! Free-format MPS export of the bundle formulation and a checker that maps a
//! solution back onto the exported variables.
//!
//! Nodes are numbered like the bundle graph: bundles `0..|B|`, vehicle
//! origins `|B|..|B|+K`, dummy depots `|B|+K..|B|+2K`. Variable `Z_i_j_k` is
//! one when vehicle `k` drives from node `i` to node `j`. Each vehicle also
//! gets an idle arc `Z_{s_k}_{f_k}_k` so that unused vehicles satisfy the
//! origin and depot rows.
//!
//! Row families:
//! - `GOUT_u`, `GIN_u`: one arc leaves and one enters the group of passenger `u`
//! - `ORIG_k`, `DEPOT_k`: each vehicle leaves its origin and reaches its depot once
//! - `PARCEL_v`: parcel `v` is serviced at most once
//! - `FLOW_i_k`: flow conservation at bundle `i` for vehicle `k`
//! - `DUR_k`: finish of the last bundle minus departure from the origin is at most `T_k`

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::bundles::{BundleGraph, Node};
use crate::model::{Instance, Solution, EPS};

const OBJ_ROW: &str = "PROFIT";

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Closed-form row count: `2n + 2K + m + |B|K + K`.
pub fn milp_row_count(graph: &BundleGraph) -> usize {
    let (n, m, k) = (graph.groups.len(), graph.parcel_index.len(), graph.kappa());
    2 * n + 2 * k + m + graph.len() * k + k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sense {
    E,
    L,
}

struct Column {
    name: String,
    entries: Vec<(String, f64)>,
}

fn var_name(from: usize, to: usize, k: usize) -> String {
    format!("Z_{from}_{to}_{k}")
}

fn node_number(graph: &BundleGraph, node: Node) -> usize {
    let (nb, kappa) = (graph.len(), graph.kappa());
    match node {
        Node::Bundle(i) => i,
        Node::Origin(k) => nb + k,
        Node::Depot(k) => nb + kappa + k,
    }
}

/// Renders the model as a free-format MPS document.
pub fn write_milp(graph: &BundleGraph, inst: &Instance) -> String {
    let kappa = graph.kappa();
    let n = graph.groups.len();
    let m = graph.parcel_index.len();
    let nb = graph.len();
    let group_of = |b: usize| graph.bundles[b].kind.passenger();
    let parcel_of = |b: usize| graph.bundles[b].kind.parcel();

    let mut rows: Vec<(String, Sense, f64)> = Vec::with_capacity(milp_row_count(graph));
    for u in 0..n {
        rows.push((format!("GOUT_{u}"), Sense::E, 1.0));
        rows.push((format!("GIN_{u}"), Sense::E, 1.0));
    }
    for k in 0..kappa {
        rows.push((format!("ORIG_{k}"), Sense::E, 1.0));
        rows.push((format!("DEPOT_{k}"), Sense::E, 1.0));
    }
    for v in 0..m {
        rows.push((format!("PARCEL_{v}"), Sense::L, 1.0));
    }
    for i in 0..nb {
        for k in 0..kappa {
            rows.push((format!("FLOW_{i}_{k}"), Sense::E, 0.0));
        }
    }
    for k in 0..kappa {
        rows.push((format!("DUR_{k}"), Sense::L, inst.vehicles[k].max_driving_time));
    }

    let mut columns: Vec<Column> = Vec::new();
    for k in 0..kappa {
        let s = node_number(graph, Node::Origin(k));
        let f = node_number(graph, Node::Depot(k));
        // origin -> bundle
        for a in &graph.origin_arcs[k] {
            let j = a.to;
            let mut entries = vec![(OBJ_ROW.to_string(), -a.cost)];
            entries.push((format!("GIN_{}", group_of(j)), 1.0));
            entries.push((format!("ORIG_{k}"), 1.0));
            entries.push((format!("FLOW_{j}_{k}"), -1.0));
            entries.push((format!("DUR_{k}"), -(graph.bundles[j].e_bar - a.time)));
            columns.push(Column {
                name: var_name(s, j, k),
                entries,
            });
        }
        // bundle -> bundle
        for (i, arcs) in graph.successors.iter().enumerate() {
            for a in arcs {
                let j = a.to;
                let mut entries = vec![(OBJ_ROW.to_string(), graph.bundles[i].beta - a.cost)];
                entries.push((format!("GOUT_{}", group_of(i)), 1.0));
                entries.push((format!("GIN_{}", group_of(j)), 1.0));
                if let Some(v) = parcel_of(i) {
                    entries.push((format!("PARCEL_{v}"), 1.0));
                }
                entries.push((format!("FLOW_{i}_{k}"), 1.0));
                entries.push((format!("FLOW_{j}_{k}"), -1.0));
                columns.push(Column {
                    name: var_name(i, j, k),
                    entries,
                });
            }
        }
        // bundle -> depot
        for i in 0..nb {
            let mut entries = vec![(OBJ_ROW.to_string(), graph.bundles[i].beta)];
            entries.push((format!("GOUT_{}", group_of(i)), 1.0));
            entries.push((format!("DEPOT_{k}"), 1.0));
            if let Some(v) = parcel_of(i) {
                entries.push((format!("PARCEL_{v}"), 1.0));
            }
            entries.push((format!("FLOW_{i}_{k}"), 1.0));
            entries.push((format!("DUR_{k}"), graph.bundles[i].finish()));
            columns.push(Column {
                name: var_name(i, f, k),
                entries,
            });
        }
        // idle vehicle
        columns.push(Column {
            name: var_name(s, f, k),
            entries: vec![(format!("ORIG_{k}"), 1.0), (format!("DEPOT_{k}"), 1.0)],
        });
    }

    let mut out = String::new();
    let _ = writeln!(out, "NAME SARP_BF");
    let _ = writeln!(
        out,
        "* bundles {nb} passengers {n} parcels {m} vehicles {kappa} rows {}",
        rows.len()
    );
    out.push_str("OBJSENSE\n    MAX\n");
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N {OBJ_ROW}");
    for (name, sense, _) in &rows {
        let tag = match sense {
            Sense::E => "E",
            Sense::L => "L",
        };
        let _ = writeln!(out, " {tag} {name}");
    }
    out.push_str("COLUMNS\n");
    out.push_str("    MARKER 'MARKER' 'INTORG'\n");
    for col in &columns {
        for (row, value) in &col.entries {
            let _ = writeln!(out, "    {} {} {}", col.name, row, value);
        }
    }
    out.push_str("    MARKER 'MARKER' 'INTEND'\n");
    out.push_str("RHS\n");
    for (name, _, rhs) in &rows {
        if *rhs != 0.0 {
            let _ = writeln!(out, "    RHS {name} {rhs}");
        }
    }
    out.push_str("BOUNDS\n");
    for col in &columns {
        let _ = writeln!(out, " BV BND {}", col.name);
    }
    out.push_str("ENDATA\n");
    out
}

/// Writes the model to `path`.
pub fn export_milp(graph: &BundleGraph, inst: &Instance, path: impl AsRef<Path>) -> Result<(), MpsError> {
    let path = path.as_ref();
    fs::write(path, write_milp(graph, inst)).map_err(|source| MpsError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Objective,
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Default)]
struct ParsedMps {
    objective: Option<String>,
    maximize: bool,
    rows: Vec<(String, RowKind)>,
    /// column -> (row -> coefficient)
    columns: HashMap<String, Vec<(String, f64)>>,
    rhs: HashMap<String, f64>,
}

fn parse_mps(text: &str) -> Result<ParsedMps, MpsError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        ObjSense,
        Rows,
        Columns,
        Rhs,
        Bounds,
        End,
    }
    let mut parsed = ParsedMps::default();
    let mut section = Section::None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let err = |message: String| MpsError::Parse { line, message };
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match tokens[0] {
                "NAME" => Section::None,
                "OBJSENSE" => {
                    if let Some(sense) = tokens.get(1) {
                        parsed.maximize = sense.eq_ignore_ascii_case("MAX");
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(err(format!("unknown section {other}"))),
            };
            continue;
        }
        match section {
            Section::ObjSense => parsed.maximize = tokens[0].eq_ignore_ascii_case("MAX"),
            Section::Rows => {
                if tokens.len() != 2 {
                    return Err(err("row line needs a type and a name".into()));
                }
                let kind = match tokens[0] {
                    "N" => RowKind::Objective,
                    "E" => RowKind::Eq,
                    "L" => RowKind::Le,
                    "G" => RowKind::Ge,
                    other => return Err(err(format!("unknown row type {other}"))),
                };
                if kind == RowKind::Objective {
                    if parsed.objective.is_none() {
                        parsed.objective = Some(tokens[1].to_string());
                    }
                } else {
                    parsed.rows.push((tokens[1].to_string(), kind));
                }
            }
            Section::Columns => {
                if tokens.get(1) == Some(&"'MARKER'") {
                    continue;
                }
                if tokens.len() < 3 || tokens.len().is_multiple_of(2) {
                    return Err(err("column line needs a name and row/value pairs".into()));
                }
                let entries = parsed.columns.entry(tokens[0].to_string()).or_default();
                for pair in tokens[1..].chunks(2) {
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|_| err(format!("bad coefficient {}", pair[1])))?;
                    entries.push((pair[0].to_string(), value));
                }
            }
            Section::Rhs => {
                if tokens.len() < 3 || tokens.len().is_multiple_of(2) {
                    return Err(err("rhs line needs a set name and row/value pairs".into()));
                }
                for pair in tokens[1..].chunks(2) {
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|_| err(format!("bad right-hand side {}", pair[1])))?;
                    parsed.rhs.insert(pair[0].to_string(), value);
                }
            }
            Section::Bounds => {}
            Section::None | Section::End => return Err(err("data line outside of a section".into())),
        }
    }
    if parsed.objective.is_none() {
        return Err(MpsError::Parse {
            line: 0,
            message: "no objective row".into(),
        });
    }
    Ok(parsed)
}

/// Outcome of checking a solution against an exported model.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpCheckReport {
    /// Names of rows whose activity violates the row sense.
    pub violated_rows: Vec<String>,
    /// Variables implied by the solution that the model does not define.
    pub unknown_variables: Vec<String>,
    pub objective: f64,
    pub expected_objective: f64,
    pub rows_checked: usize,
    /// Whether the model declares a maximisation objective.
    pub maximize: bool,
}

impl MilpCheckReport {
    pub fn objective_matches(&self) -> bool {
        (self.objective - self.expected_objective).abs() <= EPS
    }

    pub fn is_ok(&self) -> bool {
        self.maximize && self.violated_rows.is_empty() && self.unknown_variables.is_empty() && self.objective_matches()
    }
}

/// Maps a bundle-formulation solution onto the `Z_i_j_k` variables of the
/// model stored at `mps_path` and evaluates every row and the objective.
pub fn check_milp_solution(mps_path: impl AsRef<Path>, solution: &Solution) -> Result<MilpCheckReport, MpsError> {
    let path = mps_path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| MpsError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let model = parse_mps(&text)?;

    let kappa = model.rows.iter().filter(|(name, _)| name.starts_with("ORIG_")).count();
    let n_bundles = model
        .rows
        .iter()
        .filter_map(|(name, _)| name.strip_prefix("FLOW_"))
        .filter_map(|rest| rest.split('_').next()?.parse::<usize>().ok())
        .max()
        .map_or(0, |i| i + 1);
    let origin = |k: usize| n_bundles + k;
    let depot = |k: usize| n_bundles + kappa + k;

    let mut ones: Vec<String> = Vec::new();
    for (k, chain) in super::chains_of(solution).iter().enumerate() {
        if k >= kappa {
            ones.push(format!("vehicle {k} is not in the model"));
            continue;
        }
        match (chain.first(), chain.last()) {
            (Some(&first), Some(&last)) => {
                ones.push(var_name(origin(k), first, k));
                for pair in chain.windows(2) {
                    ones.push(var_name(pair[0], pair[1], k));
                }
                ones.push(var_name(last, depot(k), k));
            }
            _ => ones.push(var_name(origin(k), depot(k), k)),
        }
    }
    // vehicles without a route in the solution stay idle
    for k in solution.routes.len()..kappa {
        ones.push(var_name(origin(k), depot(k), k));
    }

    let objective_row = model.objective.clone().unwrap_or_default();
    let mut activity: BTreeMap<&str, f64> = BTreeMap::new();
    let mut unknown = Vec::new();
    for var in &ones {
        match model.columns.get(var) {
            Some(entries) => {
                for (row, value) in entries {
                    *activity.entry(row.as_str()).or_insert(0.0) += value;
                }
            }
            None => unknown.push(var.clone()),
        }
    }

    let mut violated = Vec::new();
    for (name, kind) in &model.rows {
        let lhs = activity.get(name.as_str()).copied().unwrap_or(0.0);
        let rhs = model.rhs.get(name).copied().unwrap_or(0.0);
        let ok = match kind {
            RowKind::Eq => (lhs - rhs).abs() <= EPS,
            RowKind::Le => lhs <= rhs + EPS,
            RowKind::Ge => lhs >= rhs - EPS,
            RowKind::Objective => true,
        };
        if !ok {
            violated.push(name.clone());
        }
    }
    let objective = activity.get(objective_row.as_str()).copied().unwrap_or(0.0);
    Ok(MilpCheckReport {
        violated_rows: violated,
        unknown_variables: unknown,
        objective,
        expected_objective: solution.profit,
        rows_checked: model.rows.len(),
        maximize: model.maximize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundles::build_graph;
    use crate::model::{CostParams, ParcelRequest, PassengerRequest, Point, Vehicle, PARCEL_DEMAND, PASSENGER_DEMAND};
    use crate::solver_bf::{solution_from_chains, solve_bf, BfConfig};

    fn two_by_one() -> Instance {
        let pax = |id: usize, e: f64, x: f64| PassengerRequest {
            id,
            pickup: Point::new(x, 0.0),
            dropoff: Point::new(x + 4.0, 0.0),
            service_time_pickup: 0.0333,
            service_time_dropoff: 0.0333,
            pickup_time: e,
            demand: PASSENGER_DEMAND,
        };
        Instance {
            params: CostParams::default(),
            horizon_h: 24.0,
            passengers: vec![pax(0, 2.0, 1.0), pax(1, 6.0, 6.0)],
            parcels: vec![ParcelRequest {
                id: 0,
                pickup: Point::new(0.5, 0.5),
                delivery: Point::new(5.5, 0.5),
                service_time_pickup: 0.05,
                service_time_delivery: 0.05,
                demand: PARCEL_DEMAND,
            }],
            vehicles: vec![Vehicle {
                id: 0,
                origin: Point::new(0.0, 0.0),
                max_driving_time: 8.0,
            }],
        }
    }

    #[test]
    fn row_count_matches_formula() {
        let inst = two_by_one();
        let g = build_graph(&inst);
        assert_eq!(g.len(), 4);
        assert_eq!(milp_row_count(&g), 12);
        let text = write_milp(&g, &inst);
        let model = parse_mps(&text).unwrap();
        assert_eq!(model.rows.len(), 12);
        assert!(model.maximize);

        let no_parcels = inst.without_parcels();
        let g = build_graph(&no_parcels);
        let model = parse_mps(&write_milp(&g, &no_parcels)).unwrap();
        assert!(!model.rows.iter().any(|(name, _)| name.starts_with("PARCEL_")));
        assert_eq!(model.rows.len(), milp_row_count(&g));
    }

    #[test]
    fn optimum_satisfies_exported_model() {
        let inst = two_by_one();
        let g = build_graph(&inst);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.mps");
        export_milp(&g, &inst, &path).unwrap();
        let (sol, _) = solve_bf(&g, &inst, &BfConfig::default()).unwrap();
        let report = check_milp_solution(&path, &sol).unwrap();
        assert!(report.is_ok(), "{report:?}");
        assert_eq!(report.rows_checked, 12);
    }

    #[test]
    fn tampered_solutions_violate_rows() {
        let inst = two_by_one();
        let g = build_graph(&inst);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.mps");
        export_milp(&g, &inst, &path).unwrap();

        // both triples carry parcel 0
        let triples: Vec<usize> = g.parcel_index[0].clone();
        assert_eq!(triples.len(), 2);
        let twice = solution_from_chains(&g, &[triples]);
        let report = check_milp_solution(&path, &twice).unwrap();
        assert!(report.violated_rows.contains(&"PARCEL_0".to_string()), "{report:?}");

        let empty = Solution::empty(1);
        let report = check_milp_solution(&path, &empty).unwrap();
        assert!(report.violated_rows.iter().any(|r| r.starts_with("GOUT_")));
        assert!(report.violated_rows.iter().any(|r| r.starts_with("GIN_")));
        assert!(!report.violated_rows.iter().any(|r| r.starts_with("ORIG_")));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_mps("NAME X\nROWS\n Q BAD\n").unwrap_err();
        assert!(matches!(err, MpsError::Parse { line: 3, .. }));
        let err = parse_mps("NAME X\nROWS\n N OBJ\nCOLUMNS\n    X OBJ abc\n").unwrap_err();
        assert!(matches!(err, MpsError::Parse { line: 5, .. }));
    }
}
