//! Local-first matching on a network: match within each edge, then send the
//! leftover demand outwards layer by layer.

use serde::{Deserialize, Serialize};

use super::{check_feasible, point_distance, EdgePoint, NetworkInstance, NetworkModel};
use crate::error::Result;
use crate::exact::optimal_match_1d;
use crate::types::{Instance1D, MatchResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicMatch {
    /// Pairs index the instance's flattened demand and supply lists.
    pub matching: MatchResult,
    /// Demand points matched on their own edge.
    pub local_count: usize,
    /// Demand points matched on another edge.
    pub global_count: usize,
}

impl HeuristicMatch {
    /// Share of demand matched off its own edge.
    pub fn global_fraction(&self) -> f64 {
        let total = self.local_count + self.global_count;
        if total == 0 {
            0.0
        } else {
            self.global_count as f64 / total as f64
        }
    }
}

/// Matches each edge on its own first. When an edge has fewer supply than
/// demand points, the demand points nearest the middle of the edge are served
/// locally. Every leftover demand point then searches outward from the nearer
/// end of its edge and takes the closest free supply point in the first layer
/// of edges that has any; layer `k` is the set of edges whose nearer node is
/// `k` hops from that end.
pub fn heuristic_network_match(net: &NetworkModel, inst: &NetworkInstance) -> Result<HeuristicMatch> {
    check_feasible(inst)?;
    let l = net.length();
    let edges = net.edge_count();

    let mut demand_base = Vec::with_capacity(edges);
    let mut supply_base = Vec::with_capacity(edges);
    let (mut nd, mut ns) = (0, 0);
    for e in 0..edges {
        demand_base.push(nd);
        supply_base.push(ns);
        nd += inst.per_edge_demand[e].len();
        ns += inst.per_edge_supply[e].len();
    }

    let mut pairs = Vec::with_capacity(nd);
    let mut total = 0.0;
    let mut supply_free = vec![true; ns];
    let mut leftover = Vec::new();

    for e in 0..edges {
        let dem = &inst.per_edge_demand[e];
        let sup = &inst.per_edge_supply[e];
        // Local demand indices served on this edge, in offset order.
        let served: Vec<usize> = if sup.len() >= dem.len() {
            (0..dem.len()).collect()
        } else {
            let mut by_centre: Vec<usize> = (0..dem.len()).collect();
            by_centre.sort_by(|&a, &b| {
                (dem[a] - 0.5 * l)
                    .abs()
                    .total_cmp(&(dem[b] - 0.5 * l).abs())
                    .then(a.cmp(&b))
            });
            let mut keep = by_centre[..sup.len()].to_vec();
            keep.sort_unstable();
            leftover.extend(by_centre[sup.len()..].iter().map(|&i| demand_base[e] + i));
            keep
        };
        let seg = Instance1D::new(served.iter().map(|&i| dem[i]).collect(), sup.clone(), l)?;
        let local = optimal_match_1d(&seg);
        for &(i, j) in &local.pairs {
            pairs.push((demand_base[e] + served[i], supply_base[e] + j));
            supply_free[supply_base[e] + j] = false;
        }
        total += local.total_distance;
    }
    let local_count = pairs.len();
    leftover.sort_unstable();

    let demand_pts = inst.demand_points();
    let supply_pts = inst.supply_points();
    for &u in &leftover {
        let p = demand_pts[u];
        let (a, b) = net.edges()[p.edge];
        let origin = if p.offset <= 0.5 * l { a } else { b };
        let mut best: Option<(usize, f64, usize)> = None;
        for (v, q) in supply_pts.iter().enumerate() {
            if !supply_free[v] {
                continue;
            }
            let layer = layer_of(net, origin, *q);
            let dist = point_distance(net, p, *q);
            let better = match best {
                None => true,
                Some((bl, bd, _)) => layer < bl || (layer == bl && dist < bd),
            };
            if better {
                best = Some((layer, dist, v));
            }
        }
        let (_, dist, v) = best.expect("feasibility checked above");
        supply_free[v] = false;
        pairs.push((u, v));
        total += dist;
    }

    Ok(HeuristicMatch {
        matching: MatchResult::new(pairs, total),
        local_count,
        global_count: leftover.len(),
    })
}

fn layer_of(net: &NetworkModel, origin: usize, q: EdgePoint) -> usize {
    let (a, b) = net.edges()[q.edge];
    let hops = net.node_distance(origin, a).min(net.node_distance(origin, b)) / net.length();
    hops.round() as usize
}
