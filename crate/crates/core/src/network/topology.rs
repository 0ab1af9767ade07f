//! Periodic regular lattices used as network topologies.

use crate::error::{ensure, Result};

/// Torus dimensions `(a, b)` and edge list for a `degree`-regular lattice with
/// `edge_count` edges.
///
/// * 3: brick-wall honeycomb, `a` even columns per row ring, `b` even rows
/// * 4: square torus
/// * 6: triangular torus (square torus plus one diagonal)
///
/// Of the admissible factorisations the most square one is used.
pub fn lattice_edges(degree: usize, edge_count: usize) -> Result<(usize, usize, Vec<(usize, usize)>)> {
    ensure!(
        matches!(degree, 3 | 4 | 6),
        InvalidInput,
        "supported degrees are 3, 4 and 6, got {degree}"
    );
    ensure!(
        (2 * edge_count) % degree == 0,
        InvalidInput,
        "{edge_count} edges cannot form a {degree}-regular graph: 2E/D is not an integer"
    );
    let nodes = 2 * edge_count / degree;
    let admissible = |a: usize, b: usize| match degree {
        3 => a >= 4 && a % 2 == 0 && b >= 2 && b % 2 == 0,
        _ => a >= 3 && b >= 3,
    };
    let (a, b) = (1..=nodes)
        .filter(|a| nodes % a == 0)
        .map(|a| (a, nodes / a))
        .filter(|&(a, b)| admissible(a, b))
        .min_by_key(|&(a, b)| (a.abs_diff(b), a))
        .ok_or_else(|| {
            crate::Error::InvalidInput(format!(
                "no {degree}-regular torus with {edge_count} edges ({nodes} nodes) is available"
            ))
        })?;

    let id = |i: usize, j: usize| (j % b) * a + (i % a);
    let mut edges = Vec::with_capacity(edge_count);
    for j in 0..b {
        for i in 0..a {
            match degree {
                3 => {
                    edges.push((id(i, j), id(i + 1, j)));
                    if (i + j) % 2 == 0 {
                        edges.push((id(i, j), id(i, j + 1)));
                    }
                }
                4 => {
                    edges.push((id(i, j), id(i + 1, j)));
                    edges.push((id(i, j), id(i, j + 1)));
                }
                _ => {
                    edges.push((id(i, j), id(i + 1, j)));
                    edges.push((id(i, j), id(i, j + 1)));
                    edges.push((id(i, j), id(i + 1, j + 1)));
                }
            }
        }
    }
    Ok((a, b, edges))
}

/// Checks that `edges` form a simple, connected, `degree`-regular graph on
/// `nodes` nodes.
pub fn validate_regular(nodes: usize, degree: usize, edges: &[(usize, usize)]) -> Result<()> {
    ensure!(nodes > 0, InvalidInput, "network has no nodes");
    ensure!(
        2 * edges.len() == degree * nodes,
        InvalidInput,
        "handshake fails: 2 x {} edges != {degree} x {nodes}",
        edges.len()
    );
    let mut adj = vec![Vec::with_capacity(degree); nodes];
    for &(u, v) in edges {
        ensure!(u < nodes && v < nodes, InvalidInput, "edge ({u}, {v}) names a missing node");
        ensure!(u != v, InvalidInput, "self-loop at node {u}");
        ensure!(!adj[u].contains(&v), InvalidInput, "repeated edge ({u}, {v})");
        adj[u].push(v);
        adj[v].push(u);
    }
    if let Some(bad) = adj.iter().position(|n| n.len() != degree) {
        return Err(crate::Error::InvalidInput(format!(
            "node {bad} has degree {}, expected {degree}",
            adj[bad].len()
        )));
    }
    let mut seen = vec![false; nodes];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    ensure!(seen.iter().all(|&s| s), InvalidInput, "network is not connected");
    Ok(())
}
