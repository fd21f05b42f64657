//! TOML documents read and written by the command-line tool.

use serde::{Deserialize, Serialize};

use crate::analytic::VertexParams;
use crate::error::{EdcError, Result};
use crate::graph::{metric_closure, PatrolGraph, TspMode};
use crate::offline::{OfflineInstance, TimeWindow, TsptwInstance};
use crate::sim::Event;

/// `[graph]` table: vertex ids and `[u, v, weight]` edge triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: Vec<usize>,
    #[serde(default)]
    pub edges: Vec<(usize, usize, f64)>,
}

impl GraphSpec {
    pub fn build(&self) -> Result<PatrolGraph> {
        metric_closure(&self.vertices, &self.edges)
    }

    pub fn from_graph(g: &PatrolGraph) -> Self {
        GraphSpec {
            vertices: g.ids().to_vec(),
            edges: g
                .edges()
                .iter()
                .map(|e| (g.id(e.u), g.id(e.v), e.weight))
                .collect(),
        }
    }
}

/// Per-vertex rate override in a `[[vertex]]` array entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexSpec {
    pub id: usize,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TspChoice {
    /// Exact up to the exact solver's cap, heuristic above.
    #[default]
    Auto,
    Exact,
    Heuristic,
}

impl TspChoice {
    pub fn mode(self, n_vertices: usize) -> TspMode {
        match self {
            TspChoice::Exact => TspMode::Exact,
            TspChoice::Heuristic => TspMode::Heuristic,
            TspChoice::Auto if n_vertices <= crate::graph::EXACT_TSP_CAP => TspMode::Exact,
            TspChoice::Auto => TspMode::Heuristic,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub tau_from: Option<f64>,
    pub tau_to: Option<f64>,
    pub tau_steps: Option<usize>,
    pub lag_steps: Option<usize>,
}

/// Run configuration shared by all analysis and simulation subcommands.
/// Every field is optional in the file; flags fill or override them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub critical_time: Option<f64>,
    /// Default departure rate for every vertex.
    pub mu: Option<f64>,
    /// Default arrival rate for every vertex.
    pub lambda: Option<f64>,
    pub robots: Option<usize>,
    pub max_speed: Option<f64>,
    /// Speed clock units per model time unit (60 for m/s speeds with
    /// minute-valued times).
    pub speed_time_scale: Option<f64>,
    /// Skip the TSP and use this tour length.
    pub tsp_length: Option<f64>,
    #[serde(default)]
    pub tsp: TspChoice,
    /// Patrol period; overrides the one derived from tour and speed.
    pub tau: Option<f64>,
    pub lag: Option<f64>,
    /// Robot offsets behind robot 0 for `simulate`.
    pub lags: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub replications: Option<u64>,
    pub horizon: Option<f64>,
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub vertex: Vec<VertexSpec>,
    #[serde(default)]
    pub sweep: SweepSpec,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| EdcError::validation(format!("config: {}", one_line(&e.to_string()))))
    }

    /// Per-vertex rates indexed by dense vertex index of `g`.
    pub fn vertex_params(&self, g: &PatrolGraph) -> Result<Vec<VertexParams>> {
        let mut lambda = vec![self.lambda; g.len()];
        let mut mu = vec![self.mu; g.len()];
        for v in &self.vertex {
            let i = g
                .index_of(v.id)
                .ok_or_else(|| EdcError::validation(format!("[[vertex]] id {} is not in the graph", v.id)))?;
            if v.lambda.is_some() {
                lambda[i] = v.lambda;
            }
            if v.mu.is_some() {
                mu[i] = v.mu;
            }
        }
        (0..g.len())
            .map(|i| {
                let l = lambda[i].ok_or_else(|| missing_rate("lambda", g.id(i)))?;
                let m = mu[i].ok_or_else(|| missing_rate("mu", g.id(i)))?;
                VertexParams::new(l, m)
            })
            .collect()
    }
}

fn missing_rate(name: &str, id: usize) -> EdcError {
    EdcError::validation(format!("no {name} for vertex {id}"))
}

pub(crate) fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Offline instance file. Event triples are `[vertex_id, t_s, t_f]`; event
/// ids are positions in the list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub critical_time: f64,
    #[serde(default = "unit_speed")]
    pub speed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_vertex: Option<usize>,
    pub events: Vec<(usize, f64, f64)>,
    pub graph: GraphSpec,
}

fn unit_speed() -> f64 {
    1.0
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| EdcError::validation(format!("instance: {}", one_line(&e.to_string()))))
    }

    pub fn build(&self) -> Result<OfflineInstance> {
        let g = self.graph.build()?;
        let index = |id: usize| {
            g.index_of(id)
                .ok_or_else(|| EdcError::validation(format!("vertex {id} is not in the graph")))
        };
        let events = self
            .events
            .iter()
            .enumerate()
            .map(|(i, &(v, t_s, t_f))| {
                Ok(Event {
                    id: i as u64,
                    vertex: index(v)?,
                    t_s,
                    t_f,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let start = self.start_vertex.map(index).transpose()?;
        OfflineInstance::new(g, self.critical_time, events, self.speed, start)
    }

    pub fn from_instance(inst: &OfflineInstance) -> Self {
        let g = &inst.graph;
        InstanceFile {
            critical_time: inst.critical_time,
            speed: inst.speed,
            start_vertex: inst.start_vertex.map(|s| g.id(s)),
            events: inst.events.iter().map(|e| (g.id(e.vertex), e.t_s, e.t_f)).collect(),
            graph: GraphSpec::from_graph(g),
        }
    }
}

/// TSPTW file: graph plus `[vertex_id, earliest, latest]` triples, one per
/// vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TsptwFile {
    pub windows: Vec<(usize, f64, f64)>,
    pub graph: GraphSpec,
}

impl TsptwFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| EdcError::validation(format!("tsptw: {}", one_line(&e.to_string()))))
    }

    pub fn build(&self) -> Result<TsptwInstance> {
        let g = self.graph.build()?;
        let mut windows: Vec<Option<TimeWindow>> = vec![None; g.len()];
        for &(id, earliest, latest) in &self.windows {
            let i = g
                .index_of(id)
                .ok_or_else(|| EdcError::validation(format!("window for unknown vertex {id}")))?;
            if windows[i].replace(TimeWindow { earliest, latest }).is_some() {
                return Err(EdcError::validation(format!("two windows for vertex {id}")));
            }
        }
        let windows = windows
            .into_iter()
            .enumerate()
            .map(|(i, w)| w.ok_or_else(|| EdcError::validation(format!("no window for vertex {}", g.id(i)))))
            .collect::<Result<Vec<_>>>()?;
        TsptwInstance::new(g, windows)
    }
}
