//! Parameter sweeps behind the published figures.

use crate::error::{Error, Result};
use crate::montecarlo::{ExperimentConfig, ExperimentKind, GridPoint};

pub const PRESET_NAMES: [&str; 6] = ["fig4a", "fig4b", "fig4c", "fig4d", "fig5", "fig6"];

fn unbalanced_sweep(m: u64) -> Vec<GridPoint> {
    ((m + 1)..=(2 * m + 100))
        .map(|n| GridPoint::Segment { m, n, length: 1.0 })
        .collect()
}

/// Grid of the named preset.
pub fn preset_grid(name: &str) -> Result<(ExperimentKind, Vec<GridPoint>)> {
    let grid = match name {
        "fig4a" => (1..=200)
            .map(|n| GridPoint::Segment { m: n, n, length: 1.0 })
            .collect(),
        "fig4b" => unbalanced_sweep(50),
        "fig4c" => unbalanced_sweep(100),
        "fig4d" => unbalanced_sweep(200),
        "fig5" => {
            let mu = 10.0;
            let mut g = Vec::new();
            for ratio in [1.0, 1.1, 1.5, 3.0] {
                for length in [1.0, 3.0, 5.0, 7.0, 9.0] {
                    g.push(GridPoint::Edge { mu, lambda: mu * ratio, length });
                }
            }
            g
        }
        "fig6" => {
            let mut g = Vec::new();
            for degree in [3, 4, 6] {
                for lambda in [5.0, 10.0, 15.0, 20.0, 25.0] {
                    g.push(GridPoint::Network {
                        degree,
                        edge_count: 36,
                        mu: 5.0,
                        lambda,
                        length: 1.0,
                    });
                }
            }
            g
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown preset '{other}' (expected one of {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    let kind = match name {
        "fig5" => ExperimentKind::Edge,
        "fig6" => ExperimentKind::Network,
        _ => ExperimentKind::Segment,
    };
    Ok((kind, grid))
}

pub fn preset(name: &str, replications: usize, master_seed: u64) -> Result<ExperimentConfig> {
    let (kind, grid) = preset_grid(name)?;
    Ok(ExperimentConfig::new(kind, grid, replications, master_seed))
}
