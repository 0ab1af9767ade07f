//! Plain domain values shared by the estimators, the exact solvers and the
//! simulation harness.
//!
//! Everything here is immutable once built. Derived structures such as the
//! [`SupplyCurve`] are recomputed from an [`Instance1D`] on demand.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// One realised matching problem on the segment `[0, length]`.
///
/// `demand` has `m` points and `supply` has `n >= m` points; both are kept
/// sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Instance1D {
    demand: Vec<f64>,
    supply: Vec<f64>,
    length: f64,
}

/// Wire form of [`Instance1D`]: `{"length": L, "demand": [...], "supply": [...]}`.
#[derive(Serialize, Deserialize)]
struct RawInstance {
    length: f64,
    demand: Vec<f64>,
    supply: Vec<f64>,
}

impl TryFrom<RawInstance> for Instance1D {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        Instance1D::new(raw.demand, raw.supply, raw.length)
    }
}

impl From<Instance1D> for RawInstance {
    fn from(inst: Instance1D) -> Self {
        RawInstance {
            length: inst.length,
            demand: inst.demand,
            supply: inst.supply,
        }
    }
}

impl Instance1D {
    /// Validates and sorts the coordinates.
    pub fn new(mut demand: Vec<f64>, mut supply: Vec<f64>, length: f64) -> Result<Self> {
        ensure!(
            length.is_finite() && length > 0.0,
            InvalidInput,
            "segment length must be positive and finite, got {length}"
        );
        ensure!(
            supply.len() >= demand.len(),
            InvalidInput,
            "need at least as many supply points as demand points (n = {} < m = {})",
            supply.len(),
            demand.len()
        );
        for &x in demand.iter().chain(supply.iter()) {
            ensure!(
                x.is_finite() && (0.0..=length).contains(&x),
                InvalidInput,
                "coordinate {x} lies outside [0, {length}]"
            );
        }
        demand.sort_by(f64::total_cmp);
        supply.sort_by(f64::total_cmp);
        Ok(Instance1D {
            demand,
            supply,
            length,
        })
    }

    /// Draws `m` demand and `n` supply points independently and uniformly.
    pub fn random<R: Rng + ?Sized>(m: usize, n: usize, length: f64, rng: &mut R) -> Result<Self> {
        ensure!(n >= m, InvalidInput, "need n >= m, got m = {m}, n = {n}");
        ensure!(
            length.is_finite() && length > 0.0,
            InvalidInput,
            "segment length must be positive and finite, got {length}"
        );
        let demand = (0..m).map(|_| rng.random::<f64>() * length).collect();
        let supply = (0..n).map(|_| rng.random::<f64>() * length).collect();
        Instance1D::new(demand, supply, length)
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }

    pub fn supply(&self) -> &[f64] {
        &self.supply
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of demand points, `m`.
    pub fn m(&self) -> usize {
        self.demand.len()
    }

    /// Number of supply points, `n`.
    pub fn n(&self) -> usize {
        self.supply.len()
    }

    pub fn is_balanced(&self) -> bool {
        self.demand.len() == self.supply.len()
    }

    /// The instance induced by deleting the given supply indices.
    ///
    /// The result may violate `n >= m` only if too many indices are given,
    /// which is reported as an error.
    pub fn without_supply(&self, removed: &[usize]) -> Result<Self> {
        let mut drop = vec![false; self.supply.len()];
        for &idx in removed {
            ensure!(
                idx < self.supply.len(),
                InvalidInput,
                "supply index {idx} out of range (n = {})",
                self.supply.len()
            );
            ensure!(!drop[idx], InvalidInput, "supply index {idx} removed twice");
            drop[idx] = true;
        }
        let supply = self
            .supply
            .iter()
            .zip(&drop)
            .filter(|(_, &d)| !d)
            .map(|(&x, _)| x)
            .collect();
        Instance1D::new(self.demand.clone(), supply, self.length)
    }

    pub fn supply_curve(&self) -> SupplyCurve {
        SupplyCurve::from_instance(self)
    }
}

/// Which list a curve event came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointSide {
    Demand,
    Supply,
}

/// One step of the net supply curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveEvent {
    pub coordinate: f64,
    /// `+1` for a supply point, `-1` for a demand point.
    pub supply_value: i64,
    pub side: PointSide,
    /// Index into the instance's demand or supply list.
    pub index: usize,
}

impl CurveEvent {
    pub fn is_supply(&self) -> bool {
        self.side == PointSide::Supply
    }
}

/// The cumulative net supply step function of an instance.
///
/// `prefix[i]` is the running sum of supply values through event `i`, and
/// `gaps[i]` is the distance from event `i` to event `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyCurve {
    pub events: Vec<CurveEvent>,
    pub prefix: Vec<i64>,
    pub gaps: Vec<f64>,
}

impl SupplyCurve {
    /// Merges both point lists by coordinate. Supply sorts before demand at
    /// identical coordinates.
    pub fn from_instance(inst: &Instance1D) -> Self {
        let (demand, supply) = (inst.demand(), inst.supply());
        let mut events = Vec::with_capacity(demand.len() + supply.len());
        let (mut i, mut j) = (0, 0);
        while i < demand.len() || j < supply.len() {
            let take_supply = match (demand.get(i), supply.get(j)) {
                (Some(&d), Some(&s)) => s <= d,
                (None, Some(_)) => true,
                _ => false,
            };
            if take_supply {
                events.push(CurveEvent {
                    coordinate: supply[j],
                    supply_value: 1,
                    side: PointSide::Supply,
                    index: j,
                });
                j += 1;
            } else {
                events.push(CurveEvent {
                    coordinate: demand[i],
                    supply_value: -1,
                    side: PointSide::Demand,
                    index: i,
                });
                i += 1;
            }
        }

        let prefix = events
            .iter()
            .scan(0i64, |acc, e| {
                *acc += e.supply_value;
                Some(*acc)
            })
            .collect();
        let gaps = events
            .windows(2)
            .map(|w| w[1].coordinate - w[0].coordinate)
            .collect();
        SupplyCurve {
            events,
            prefix,
            gaps,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Net supply at the right end of the curve (`n - m`).
    pub fn final_value(&self) -> i64 {
        self.prefix.last().copied().unwrap_or(0)
    }

    /// Absolute area between the curve and the axis, summed over every step
    /// whose left end lies at or before `x`.
    pub fn absolute_area(&self, x: f64) -> f64 {
        self.gaps
            .iter()
            .zip(&self.prefix)
            .zip(&self.events)
            .take_while(|(_, e)| e.coordinate <= x)
            .map(|((gap, s), _)| gap * s.unsigned_abs() as f64)
            .sum()
    }

    /// Absolute area over the whole curve.
    pub fn total_area(&self) -> f64 {
        self.gaps
            .iter()
            .zip(&self.prefix)
            .map(|(gap, s)| gap * s.unsigned_abs() as f64)
            .sum()
    }
}

/// A matching of every demand point to a distinct supply point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// `(demand_index, supply_index)`, ordered by demand index.
    pub pairs: Vec<(usize, usize)>,
    pub total_distance: f64,
    /// `total_distance / m`, or zero for an empty matching.
    pub mean_distance: f64,
}

impl MatchResult {
    pub fn new(mut pairs: Vec<(usize, usize)>, total_distance: f64) -> Self {
        pairs.sort_unstable();
        let mean_distance = if pairs.is_empty() {
            0.0
        } else {
            total_distance / pairs.len() as f64
        };
        MatchResult {
            pairs,
            total_distance,
            mean_distance,
        }
    }

    pub fn empty() -> Self {
        MatchResult::new(Vec::new(), 0.0)
    }
}

/// Point densities on one edge of length `length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeParams {
    /// Demand density per unit length.
    pub mu: f64,
    /// Supply density per unit length.
    pub lambda: f64,
    pub length: f64,
}

impl EdgeParams {
    pub fn new(mu: f64, lambda: f64, length: f64) -> Result<Self> {
        ensure!(
            mu.is_finite() && mu > 0.0,
            InvalidInput,
            "demand density must be positive, got {mu}"
        );
        ensure!(
            lambda.is_finite() && lambda >= mu,
            InvalidInput,
            "supply density must be at least the demand density (mu = {mu}, lambda = {lambda})"
        );
        ensure!(
            length.is_finite() && length > 0.0,
            InvalidInput,
            "edge length must be positive, got {length}"
        );
        Ok(EdgeParams { mu, lambda, length })
    }

    /// `lambda / mu`.
    pub fn ratio(&self) -> f64 {
        self.lambda / self.mu
    }
}
