//! Regular networks with equal-length edges and Poisson points on each edge.

mod estimate;
mod heuristic;
pub mod topology;

pub use estimate::{
    d2_layer_probabilities, d2_tail_mass, excess_moments, network_estimate, ExcessMoments,
    NetworkEstimateParts, DEFAULT_KAPPA,
};
pub use heuristic::{heuristic_network_match, HeuristicMatch};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::assignment::{solve_assignment, CostMatrix};
use crate::error::{ensure, Error, Result};
use crate::types::MatchResult;

/// A connected `degree`-regular graph whose edges all have length `length`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    degree: usize,
    node_count: usize,
    length: f64,
    edges: Vec<(usize, usize)>,
    /// Row-major all-pairs shortest path lengths between nodes.
    node_distance: Vec<f64>,
}

/// Wire form of a network: `{"degree": D, "nodes": N, "edges": [[a, b, L], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDescription {
    pub degree: usize,
    pub nodes: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

/// Builds a periodic lattice of the given degree (3, 4 or 6) with
/// `edge_count` edges of length `length`.
pub fn build_regular_network(degree: usize, edge_count: usize, length: f64) -> Result<NetworkModel> {
    let (a, b, edges) = topology::lattice_edges(degree, edge_count)?;
    NetworkModel::new(a * b, degree, edges, length)
}

impl NetworkModel {
    pub fn new(node_count: usize, degree: usize, edges: Vec<(usize, usize)>, length: f64) -> Result<Self> {
        ensure!(
            length.is_finite() && length > 0.0,
            InvalidInput,
            "edge length must be positive, got {length}"
        );
        topology::validate_regular(node_count, degree, &edges)?;
        let node_distance = floyd_warshall(node_count, &edges, length);
        Ok(NetworkModel {
            degree,
            node_count,
            length,
            edges,
            node_distance,
        })
    }

    pub fn from_description(desc: &NetworkDescription) -> Result<Self> {
        let length = desc.edges.first().map_or(1.0, |e| e.2);
        ensure!(
            desc.edges.iter().all(|e| e.2 == length),
            InvalidInput,
            "all edges must have the same length"
        );
        let edges = desc.edges.iter().map(|&(a, b, _)| (a, b)).collect();
        NetworkModel::new(desc.nodes, desc.degree, edges, length)
    }

    pub fn description(&self) -> NetworkDescription {
        NetworkDescription {
            degree: self.degree,
            nodes: self.node_count,
            edges: self.edges.iter().map(|&(a, b)| (a, b, self.length)).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn node_distance(&self, u: usize, v: usize) -> f64 {
        self.node_distance[u * self.node_count + v]
    }
}

fn floyd_warshall(n: usize, edges: &[(usize, usize)], length: f64) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; n * n];
    for i in 0..n {
        d[i * n + i] = 0.0;
    }
    for &(u, v) in edges {
        d[u * n + v] = length;
        d[v * n + u] = length;
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if dik == f64::INFINITY {
                continue;
            }
            for j in 0..n {
                let via = dik + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
    d
}

/// A location on the network: `offset` is measured from the edge's first
/// node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgePoint {
    pub edge: usize,
    pub offset: f64,
}

/// Shortest network distance between two locations.
pub fn point_distance(net: &NetworkModel, a: EdgePoint, b: EdgePoint) -> f64 {
    let l = net.length;
    let (a0, a1) = net.edges[a.edge];
    let (b0, b1) = net.edges[b.edge];
    let ends_a = [(a0, a.offset), (a1, l - a.offset)];
    let ends_b = [(b0, b.offset), (b1, l - b.offset)];
    let mut best = if a.edge == b.edge {
        (a.offset - b.offset).abs()
    } else {
        f64::INFINITY
    };
    for &(na, ca) in &ends_a {
        for &(nb, cb) in &ends_b {
            best = best.min(ca + net.node_distance(na, nb) + cb);
        }
    }
    best
}

/// Demand and supply offsets per edge, each list sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkInstance {
    pub per_edge_demand: Vec<Vec<f64>>,
    pub per_edge_supply: Vec<Vec<f64>>,
}

fn flatten(lists: &[Vec<f64>]) -> Vec<EdgePoint> {
    lists
        .iter()
        .enumerate()
        .flat_map(|(edge, offs)| offs.iter().map(move |&offset| EdgePoint { edge, offset }))
        .collect()
}

impl NetworkInstance {
    pub fn total_demand(&self) -> usize {
        self.per_edge_demand.iter().map(Vec::len).sum()
    }

    pub fn total_supply(&self) -> usize {
        self.per_edge_supply.iter().map(Vec::len).sum()
    }

    /// Demand points edge by edge; matching indices refer to this order.
    pub fn demand_points(&self) -> Vec<EdgePoint> {
        flatten(&self.per_edge_demand)
    }

    /// Supply points edge by edge; matching indices refer to this order.
    pub fn supply_points(&self) -> Vec<EdgePoint> {
        flatten(&self.per_edge_supply)
    }
}

fn poisson_points<R: Rng + ?Sized>(rate: f64, length: f64, rng: &mut R) -> Vec<f64> {
    let count = if rate > 0.0 {
        Poisson::new(rate).expect("positive finite rate").sample(rng) as usize
    } else {
        0
    };
    let mut offs: Vec<f64> = (0..count).map(|_| rng.random::<f64>() * length).collect();
    offs.sort_by(f64::total_cmp);
    offs
}

/// Draws Poisson(`mu L`) demand and Poisson(`lambda L`) supply points on
/// every edge, uniformly placed.
pub fn sample_instance<R: Rng + ?Sized>(
    net: &NetworkModel,
    mu: f64,
    lambda: f64,
    rng: &mut R,
) -> Result<NetworkInstance> {
    ensure!(
        mu.is_finite() && mu > 0.0,
        InvalidInput,
        "demand density must be positive, got {mu}"
    );
    ensure!(
        lambda.is_finite() && lambda >= 0.0,
        InvalidInput,
        "supply density must be nonnegative, got {lambda}"
    );
    let l = net.length;
    let mut per_edge_demand = Vec::with_capacity(net.edge_count());
    let mut per_edge_supply = Vec::with_capacity(net.edge_count());
    for _ in 0..net.edge_count() {
        per_edge_demand.push(poisson_points(mu * l, l, rng));
        per_edge_supply.push(poisson_points(lambda * l, l, rng));
    }
    Ok(NetworkInstance {
        per_edge_demand,
        per_edge_supply,
    })
}

pub(crate) fn check_feasible(inst: &NetworkInstance) -> Result<()> {
    let (m, n) = (inst.total_demand(), inst.total_supply());
    if m > n {
        return Err(Error::Infeasible(format!(
            "{m} demand points but only {n} supply points"
        )));
    }
    Ok(())
}

/// Optimal matching under the network metric.
pub fn exact_network_match(net: &NetworkModel, inst: &NetworkInstance) -> Result<MatchResult> {
    check_feasible(inst)?;
    let demand = inst.demand_points();
    let supply = inst.supply_points();
    let costs = CostMatrix::from_fn(demand.len(), supply.len(), |i, j| {
        point_distance(net, demand[i], supply[j])
    })?;
    Ok(solve_assignment(&costs))
}
