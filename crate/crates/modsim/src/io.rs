//! CSV loaders for networks and demand, and report writers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use modsim_core::equilibrium::Traveler;
use modsim_core::netgraph::{EdgeSpec, LineSpec, LineStopSpec, NodeSpec, RoadGraph, StationSpec, TransitGraph};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(file);
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let row: T = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Parse { path: path.to_path_buf(), line, reason: e.to_string() }
        })?;
        out.push(row);
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct NodeRow {
    node_id: u64,
    lat: f64,
    lon: f64,
}

#[derive(Debug, Deserialize)]
struct EdgeRow {
    from: u64,
    to: u64,
    travel_time_s: f64,
    length_m: f64,
}

/// `nodes.csv` (`node_id,lat,lon`) and `edges.csv`
/// (`from,to,travel_time_s,length_m`).
pub fn load_road(nodes: &Path, edges: &Path) -> Result<RoadGraph, CliError> {
    let nodes: Vec<NodeSpec> =
        read_rows::<NodeRow>(nodes)?.into_iter().map(|r| NodeSpec { id: r.node_id, lat: r.lat, lon: r.lon }).collect();
    let edges: Vec<EdgeSpec> = read_rows::<EdgeRow>(edges)?
        .into_iter()
        .map(|r| EdgeSpec { from: r.from, to: r.to, travel_time: r.travel_time_s, length: r.length_m })
        .collect();
    Ok(RoadGraph::new(nodes, &edges)?)
}

#[derive(Debug, Deserialize)]
struct StationRow {
    station_id: u64,
    lat: f64,
    lon: f64,
}

#[derive(Debug, Deserialize)]
struct LineRow {
    line_id: u64,
    headway_s: f64,
    fare: f64,
}

#[derive(Debug, Deserialize)]
struct LineStopRow {
    line_id: u64,
    seq: u32,
    station_id: u64,
    time_from_prev_s: f64,
}

/// Stations (`station_id,lat,lon`), lines (`line_id,headway_s,fare`) and
/// line stops (`line_id,seq,station_id,time_from_prev_s`).
pub fn load_transit(stations: &Path, lines: &Path, line_stops: &Path) -> Result<TransitGraph, CliError> {
    let stations: Vec<StationSpec> = read_rows::<StationRow>(stations)?
        .into_iter()
        .map(|r| StationSpec { id: r.station_id, lat: r.lat, lon: r.lon })
        .collect();
    let mut stops: BTreeMap<u64, Vec<LineStopRow>> = BTreeMap::new();
    for r in read_rows::<LineStopRow>(line_stops)? {
        stops.entry(r.line_id).or_default().push(r);
    }
    let mut out = Vec::new();
    for l in read_rows::<LineRow>(lines)? {
        let mut seq = stops.remove(&l.line_id).unwrap_or_default();
        seq.sort_by_key(|s| s.seq);
        if seq.windows(2).any(|w| w[0].seq == w[1].seq) {
            return Err(CliError::Validation(format!("line {} repeats a stop sequence number", l.line_id)));
        }
        let stops = seq.iter().map(|s| LineStopSpec { station: s.station_id, time_from_prev: s.time_from_prev_s }).collect();
        out.push(LineSpec { id: l.line_id, headway: l.headway_s, fare: l.fare, stops });
    }
    if let Some(id) = stops.keys().next() {
        return Err(CliError::Validation(format!("line stops reference unknown line {id}")));
    }
    Ok(TransitGraph::new(stations, out)?)
}

#[derive(Debug, Deserialize)]
struct DemandRow {
    request_id: u64,
    origin_node: u64,
    dest_node: u64,
    request_time_s: f64,
}

/// `request_id,origin_node,dest_node,request_time_s`, node ids resolved
/// against `road`. Rows are returned sorted by request time, then id.
pub fn load_demand(path: &Path, road: &RoadGraph) -> Result<Vec<Traveler>, CliError> {
    let mut out = Vec::new();
    for r in read_rows::<DemandRow>(path)? {
        let origin = road.index_of(r.origin_node)?;
        let destination = road.index_of(r.dest_node)?;
        if origin == destination {
            return Err(CliError::Validation(format!("request {} starts and ends at node {}", r.request_id, r.origin_node)));
        }
        if !(r.request_time_s >= 0.0 && r.request_time_s.is_finite()) {
            return Err(CliError::Validation(format!("request {} has an invalid time", r.request_id)));
        }
        out.push(Traveler { id: r.request_id, origin, destination, request_time: r.request_time_s });
    }
    out.sort_by(|a, b| a.request_time.total_cmp(&b.request_time).then(a.id.cmp(&b.id)));
    Ok(out)
}

/// Writes report files into one directory. Every file starts with the
/// provenance line `# config_hash=<sha256> seed=<n> version=<v>`.
#[derive(Debug, Clone)]
pub struct Reporter {
    pub dir: PathBuf,
    pub provenance: String,
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
struct JsonEnvelope<'a, T: Serialize> {
    config_hash: &'a str,
    seed: u64,
    version: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

impl Reporter {
    pub fn new(dir: &Path, config_hash: &str, seed: u64) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            provenance: format!("# config_hash={config_hash} seed={seed} version={}\n", env!("CARGO_PKG_VERSION")),
            config_hash: config_hash.to_string(),
            seed,
        })
    }

    fn create(&self, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok((path, BufWriter::new(file)))
    }

    /// `rows` are already formatted fields.
    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let (path, mut w) = self.create(name)?;
        let io = |e: std::io::Error| CliError::io(self.dir.join(name), e);
        w.write_all(self.provenance.as_bytes()).map_err(io)?;
        let mut writer = csv::Writer::from_writer(w);
        let err = |e: csv::Error| CliError::io(self.dir.join(name), std::io::Error::other(e));
        writer.write_record(header).map_err(err)?;
        for r in rows {
            writer.write_record(r).map_err(err)?;
        }
        writer.flush().map_err(io)?;
        Ok(path)
    }

    /// A JSON object with the provenance fields merged in.
    pub fn json<T: Serialize>(&self, name: &str, body: &T) -> Result<PathBuf, CliError> {
        let (path, mut w) = self.create(name)?;
        let env = JsonEnvelope { config_hash: &self.config_hash, seed: self.seed, version: env!("CARGO_PKG_VERSION"), body };
        let text = serde_json::to_string_pretty(&env).map_err(|e| CliError::Config(e.to_string()))?;
        let io = |e| CliError::io(&path, e);
        w.write_all(text.as_bytes()).map_err(io)?;
        w.write_all(b"\n").map_err(io)?;
        w.flush().map_err(io)?;
        Ok(path)
    }

    pub fn text(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let (path, mut w) = self.create(name)?;
        let io = |e| CliError::io(&path, e);
        w.write_all(self.provenance.as_bytes()).map_err(io)?;
        w.write_all(body.as_bytes()).map_err(io)?;
        w.flush().map_err(io)?;
        Ok(path)
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_small_network_and_demand() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write(dir.path(), "nodes.csv", "node_id,lat,lon\n10,40.0,-73.0\n20,40.001,-73.0\n30,40.002,-73.0\n");
        let edges = write(
            dir.path(),
            "edges.csv",
            "from,to,travel_time_s,length_m\n10,20,30,111\n20,10,30,111\n20,30,30,111\n30,20,30,111\n",
        );
        let road = load_road(&nodes, &edges).unwrap();
        assert_eq!(road.node_count(), 3);
        let demand = write(dir.path(), "demand.csv", "request_id,origin_node,dest_node,request_time_s\n2,30,10,50\n1,10,30,5\n");
        let d = load_demand(&demand, &road).unwrap();
        assert_eq!(d.iter().map(|t| t.id).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!((d[0].origin, d[0].destination), (0, 2));
        let stations = write(dir.path(), "stations.csv", "station_id,lat,lon\n1,40.0,-73.0\n2,40.002,-73.0\n");
        let lines = write(dir.path(), "lines.csv", "line_id,headway_s,fare\n7,300,2.75\n");
        let stops = write(dir.path(), "line_stops.csv", "line_id,seq,station_id,time_from_prev_s\n7,2,2,40\n7,1,1,0\n");
        let t = load_transit(&stations, &lines, &stops).unwrap();
        assert_eq!(t.lines()[0].stops[0].station, 1);
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write(dir.path(), "nodes.csv", "node_id,lat,lon\n1,40.0,-73.0\nx,40.0,-73.0\n");
        let edges = write(dir.path(), "edges.csv", "from,to,travel_time_s,length_m\n");
        match load_road(&nodes, &edges) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dangling_edges_and_unknown_demand_nodes_fail() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write(dir.path(), "nodes.csv", "node_id,lat,lon\n1,40.0,-73.0\n2,40.001,-73.0\n");
        let edges = write(dir.path(), "edges.csv", "from,to,travel_time_s,length_m\n1,9,30,100\n");
        assert!(matches!(load_road(&nodes, &edges), Err(CliError::Validation(_))));
        let edges = write(dir.path(), "edges.csv", "from,to,travel_time_s,length_m\n1,2,30,100\n");
        let road = load_road(&nodes, &edges).unwrap();
        let demand = write(dir.path(), "demand.csv", "request_id,origin_node,dest_node,request_time_s\n1,1,5,0\n");
        assert!(matches!(load_demand(&demand, &road), Err(CliError::Validation(_))));
    }
}
