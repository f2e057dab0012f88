use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SfvError};
use crate::gas_model::PipeSpec;
use crate::scalar::Scalar;

/// Time and parameter dependent boundary datum `f(t, y)`.
pub type Profile<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// Profile that ignores both arguments.
pub fn constant_profile<T: Scalar>(value: T) -> Profile<T> {
    Arc::new(move |_, _| value)
}

/// Direction of an edge as seen from one of its end nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// The edge ends at the node (the node sits at the pipe outlet).
    Incoming,
    /// The edge starts at the node (the node sits at the pipe inlet).
    Outgoing,
}

#[derive(Clone)]
pub enum NodeRole<T> {
    /// Prescribed pressure `σ(t, y)` in Pa.
    Slack { pressure: Profile<T> },
    /// Prescribed withdrawal `d(t, y)` in kg/s; negative values inject gas.
    Withdrawal { mass_rate: Profile<T> },
}

impl<T> fmt::Debug for NodeRole<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRole::Slack { .. } => f.write_str("Slack"),
            NodeRole::Withdrawal { .. } => f.write_str("Withdrawal"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Node<T> {
    pub name: String,
    pub role: NodeRole<T>,
}

impl<T> Node<T> {
    pub fn slack(name: impl Into<String>, pressure: Profile<T>) -> Self {
        Self {
            name: name.into(),
            role: NodeRole::Slack { pressure },
        }
    }

    pub fn withdrawal(name: impl Into<String>, mass_rate: Profile<T>) -> Self {
        Self {
            name: name.into(),
            role: NodeRole::Withdrawal { mass_rate },
        }
    }

    pub fn is_slack(&self) -> bool {
        matches!(self.role, NodeRole::Slack { .. })
    }
}

/// Pipe running from node `from` (its inlet, x = 0) to node `to` (x = L).
#[derive(Debug, Clone)]
pub struct Edge<T> {
    pub name: String,
    pub from: usize,
    pub to: usize,
    pub pipe: PipeSpec<T>,
}

/// Boost `ρ_inlet = c(t) ρ_node` applied where `edge` leaves `node`.
#[derive(Clone)]
pub struct Compressor<T> {
    pub name: String,
    pub node: usize,
    pub edge: usize,
    pub ratio: Profile<T>,
}

impl<T> fmt::Debug for Compressor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Compressor")
            .field("name", &self.name)
            .field("node", &self.node)
            .field("edge", &self.edge)
            .finish_non_exhaustive()
    }
}

/// Validated directed pipe graph with node roles and compressors.
#[derive(Debug, Clone)]
pub struct NetworkTopology<T> {
    nodes: Vec<Node<T>>,
    edges: Vec<Edge<T>>,
    compressors: Vec<Compressor<T>>,
    incidence: Vec<Vec<(usize, Orientation)>>,
    edge_compressor: Vec<Option<usize>>,
}

impl<T: Scalar> NetworkTopology<T> {
    pub fn new(nodes: Vec<Node<T>>, edges: Vec<Edge<T>>, compressors: Vec<Compressor<T>>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(SfvError::Config("network has no nodes".into()));
        }
        if edges.is_empty() {
            return Err(SfvError::Config("network has no pipes".into()));
        }
        let n = nodes.len();
        let mut incidence = vec![Vec::new(); n];
        for (e, edge) in edges.iter().enumerate() {
            for end in [edge.from, edge.to] {
                if end >= n {
                    return Err(SfvError::Config(format!(
                        "pipe '{}' references node index {end}, but only {n} nodes exist",
                        edge.name
                    )));
                }
            }
            if edge.from == edge.to {
                return Err(SfvError::Config(format!("pipe '{}' is a self-loop", edge.name)));
            }
            incidence[edge.from].push((e, Orientation::Outgoing));
            incidence[edge.to].push((e, Orientation::Incoming));
        }

        let mut edge_compressor = vec![None; edges.len()];
        for (c, comp) in compressors.iter().enumerate() {
            let Some(edge) = edges.get(comp.edge) else {
                return Err(SfvError::Config(format!(
                    "compressor '{}' references pipe index {}, which does not exist",
                    comp.name, comp.edge
                )));
            };
            if comp.node >= n {
                return Err(SfvError::Config(format!(
                    "compressor '{}' references node index {}, which does not exist",
                    comp.name, comp.node
                )));
            }
            if edge.from != comp.node {
                return Err(SfvError::Config(format!(
                    "compressor '{}' sits at node '{}' but pipe '{}' does not leave that node",
                    comp.name, nodes[comp.node].name, edge.name
                )));
            }
            if let Some(other) = edge_compressor[comp.edge].replace(c) {
                return Err(SfvError::Config(format!(
                    "pipe '{}' has two compressors ('{}' and '{}')",
                    edge.name, compressors[other].name, comp.name
                )));
            }
        }

        let topology = Self {
            nodes,
            edges,
            compressors,
            incidence,
            edge_compressor,
        };
        topology.check_slack_per_component()?;
        Ok(topology)
    }

    fn check_slack_per_component(&self) -> Result<()> {
        let n = self.nodes.len();
        let mut component = vec![usize::MAX; n];
        let mut stack = Vec::new();
        for start in 0..n {
            if component[start] != usize::MAX {
                continue;
            }
            component[start] = start;
            stack.push(start);
            let mut has_slack = false;
            while let Some(v) = stack.pop() {
                has_slack |= self.nodes[v].is_slack();
                for &(e, _) in &self.incidence[v] {
                    let edge = &self.edges[e];
                    for w in [edge.from, edge.to] {
                        if component[w] == usize::MAX {
                            component[w] = start;
                            stack.push(w);
                        }
                    }
                }
            }
            if !has_slack {
                return Err(SfvError::Config(format!(
                    "the part of the network containing node '{}' has no slack node",
                    self.nodes[start].name
                )));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn compressors(&self) -> &[Compressor<T>] {
        &self.compressors
    }

    /// Edges touching `node` with their orientation relative to it.
    pub fn incident(&self, node: usize) -> &[(usize, Orientation)] {
        &self.incidence[node]
    }

    /// Compressor acting on `edge`, if any.
    pub fn compressor_on(&self, edge: usize) -> Option<&Compressor<T>> {
        self.edge_compressor[edge].map(|c| &self.compressors[c])
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn edge_index(&self, name: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.name == name)
    }
}
