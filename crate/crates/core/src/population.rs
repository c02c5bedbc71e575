//! M/M/∞ node churn: Poisson arrivals at rate N/T, exponential lifetimes
//! with mean T, so the population fluctuates around N.

use std::collections::BinaryHeap;
use std::io::Write;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::ParamError;

/// Identifier assigned at arrival; never reused within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Arrival,
    Departure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationEvent {
    pub time: f64,
    pub kind: EventKind,
    pub node: NodeId,
}

/// One realization of the churn process over a finite horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTrajectory {
    pub initial_count: u64,
    pub horizon: f64,
    pub events: Vec<PopulationEvent>,
}

/// Exponential inter-arrival time with mean T/N.
pub fn sample_interarrival<R: Rng + ?Sized>(rng: &mut R, expected_nodes: f64, lifetime: f64) -> f64 {
    Exp::new(expected_nodes / lifetime).unwrap().sample(rng)
}

/// Exponential sojourn time with mean T.
pub fn sample_lifetime<R: Rng + ?Sized>(rng: &mut R, lifetime: f64) -> f64 {
    Exp::new(1.0 / lifetime).unwrap().sample(rng)
}

/// Initial population drawn from the stationary law: Poisson(N) nodes, each
/// with an Exp(T) residual lifetime (memorylessness).
pub fn sample_initial_count<R: Rng + ?Sized>(rng: &mut R, expected_nodes: f64) -> u64 {
    Poisson::new(expected_nodes).unwrap().sample(rng) as u64
}

/// Generates an event trace of the M/M/∞ process over `[0, horizon]`.
///
/// The process starts in stationarity, so no warm-up period is needed.
/// Identical `(expected_nodes, lifetime, horizon, seed)` yield an identical
/// trajectory.
pub fn generate_trajectory(
    expected_nodes: f64,
    lifetime: f64,
    horizon: f64,
    seed: u64,
) -> Result<PopulationTrajectory, ParamError> {
    if !expected_nodes.is_finite() || expected_nodes <= 0.0 {
        return Err(ParamError::domain("N", expected_nodes, "must be finite and > 0"));
    }
    if !lifetime.is_finite() || lifetime <= 0.0 {
        return Err(ParamError::domain("T", lifetime, "must be finite and > 0"));
    }
    if !horizon.is_finite() || horizon < 0.0 {
        return Err(ParamError::domain("horizon", horizon, "must be finite and >= 0"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial_count = sample_initial_count(&mut rng, expected_nodes);

    // departure times, min-heap via Reverse ordering on bits
    let mut departures: BinaryHeap<std::cmp::Reverse<(u64, NodeId)>> = BinaryHeap::new();
    let mut next_id = 0u64;
    for _ in 0..initial_count {
        let t = sample_lifetime(&mut rng, lifetime);
        departures.push(std::cmp::Reverse((t.to_bits(), NodeId(next_id))));
        next_id += 1;
    }

    let mut events = Vec::new();
    let mut next_arrival = sample_interarrival(&mut rng, expected_nodes, lifetime);
    loop {
        let next_departure = departures.peek().map(|r| f64::from_bits(r.0 .0));
        let (t, is_arrival) = match next_departure {
            Some(td) if td <= next_arrival => (td, false),
            _ => (next_arrival, true),
        };
        if t > horizon {
            break;
        }
        if is_arrival {
            let node = NodeId(next_id);
            next_id += 1;
            events.push(PopulationEvent {
                time: t,
                kind: EventKind::Arrival,
                node,
            });
            let life = sample_lifetime(&mut rng, lifetime);
            departures.push(std::cmp::Reverse(((t + life).to_bits(), node)));
            next_arrival = t + sample_interarrival(&mut rng, expected_nodes, lifetime);
        } else {
            let std::cmp::Reverse((_, node)) = departures.pop().unwrap();
            events.push(PopulationEvent {
                time: t,
                kind: EventKind::Departure,
                node,
            });
        }
    }

    Ok(PopulationTrajectory {
        initial_count,
        horizon,
        events,
    })
}

impl PopulationTrajectory {
    /// Time-weighted mean of the population count over the horizon.
    pub fn time_averaged_count(&self) -> f64 {
        if self.horizon == 0.0 {
            return self.initial_count as f64;
        }
        let mut integral = 0.0;
        let mut count = self.initial_count as i64;
        let mut last = 0.0;
        for ev in &self.events {
            integral += count as f64 * (ev.time - last);
            last = ev.time;
            match ev.kind {
                EventKind::Arrival => count += 1,
                EventKind::Departure => count -= 1,
            }
        }
        integral += count as f64 * (self.horizon - last);
        integral / self.horizon
    }

    /// Time-weighted occupancy of each population count, normalized to a
    /// probability distribution over the horizon.
    pub fn occupancy_distribution(&self) -> Vec<(u64, f64)> {
        let mut occ: std::collections::BTreeMap<i64, f64> = std::collections::BTreeMap::new();
        let mut count = self.initial_count as i64;
        let mut last = 0.0;
        for ev in &self.events {
            *occ.entry(count).or_insert(0.0) += ev.time - last;
            last = ev.time;
            match ev.kind {
                EventKind::Arrival => count += 1,
                EventKind::Departure => count -= 1,
            }
        }
        *occ.entry(count).or_insert(0.0) += self.horizon - last;
        occ.into_iter()
            .map(|(c, t)| (c as u64, t / self.horizon))
            .collect()
    }

    pub fn arrival_count(&self) -> u64 {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Arrival)
            .count() as u64
    }

    pub fn departure_count(&self) -> u64 {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Departure)
            .count() as u64
    }

    /// Dumps the trace as CSV with columns `time,event,node_id,count_after`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,event,node_id,count_after")?;
        let mut count = self.initial_count as i64;
        for ev in &self.events {
            let kind = match ev.kind {
                EventKind::Arrival => {
                    count += 1;
                    "arrival"
                }
                EventKind::Departure => {
                    count -= 1;
                    "departure"
                }
            };
            writeln!(out, "{},{},{},{}", ev.time, kind, ev.node.0, count)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interarrival_mean_and_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 1_000_000;
        let (n, t) = (100.0, 10.0);
        let samples: Vec<f64> = (0..draws)
            .map(|_| sample_interarrival(&mut rng, n, t))
            .collect();
        let mean = samples.iter().sum::<f64>() / draws as f64;
        let expected = t / n; // 0.1
        // 3σ/√draws band for an exponential: σ = mean
        assert!((mean - expected).abs() < 3.0 * expected / (draws as f64).sqrt());
        let var =
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (draws as f64 - 1.0);
        assert!((var - expected * expected).abs() / (expected * expected) < 0.02);
    }

    #[test]
    fn lifetime_mean_and_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 1_000_000;
        let t = 10.0;
        let samples: Vec<f64> = (0..draws).map(|_| sample_lifetime(&mut rng, t)).collect();
        let mean = samples.iter().sum::<f64>() / draws as f64;
        assert!((mean - t).abs() < 3.0 * t / (draws as f64).sqrt());
        let tail = samples.iter().filter(|&&x| x > t).count() as f64 / draws as f64;
        assert!((tail - (-1.0f64).exp()).abs() < 0.002);
    }

    #[test]
    fn sampling_is_reproducible() {
        let a: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..100).map(|_| sample_lifetime(&mut rng, 3.0)).collect()
        };
        let b: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..100).map(|_| sample_lifetime(&mut rng, 3.0)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn zero_horizon_has_only_initial_seeding() {
        let traj = generate_trajectory(1.0, 1.0, 0.0, 5).unwrap();
        assert!(traj.events.is_empty());
        assert_eq!(traj.time_averaged_count(), traj.initial_count as f64);
    }

    #[test]
    fn trajectory_count_never_negative_and_departures_are_of_live_nodes() {
        let traj = generate_trajectory(10.0, 1.0, 200.0, 3).unwrap();
        let mut live: std::collections::HashSet<NodeId> =
            (0..traj.initial_count).map(NodeId).collect();
        let mut last = 0.0;
        for ev in &traj.events {
            assert!(ev.time >= last);
            last = ev.time;
            match ev.kind {
                EventKind::Arrival => assert!(live.insert(ev.node)),
                EventKind::Departure => assert!(live.remove(&ev.node)),
            }
        }
    }

    #[test]
    fn flow_balance_over_long_horizon() {
        let traj = generate_trajectory(100.0, 1.0, 2000.0, 9).unwrap();
        let arr = traj.arrival_count() as i64;
        let dep = traj.departure_count() as i64;
        // imbalance is bounded by the population fluctuation, o(#arrivals)
        assert!(arr > 100_000);
        assert!((arr - dep).abs() < arr / 100);
    }

    #[test]
    fn time_average_tracks_n() {
        let traj = generate_trajectory(100.0, 10.0, 2000.0 * 10.0, 1).unwrap();
        let avg = traj.time_averaged_count();
        assert!((avg - 100.0).abs() / 100.0 < 0.02, "avg = {avg}");
    }

    #[test]
    fn identical_seed_identical_trajectory() {
        let a = generate_trajectory(50.0, 2.0, 100.0, 77).unwrap();
        let b = generate_trajectory(50.0, 2.0, 100.0, 77).unwrap();
        assert_eq!(a, b);
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        a.write_csv(&mut csv_a).unwrap();
        b.write_csv(&mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(generate_trajectory(0.0, 1.0, 1.0, 0).is_err());
        assert!(generate_trajectory(1.0, 0.0, 1.0, 0).is_err());
        assert!(generate_trajectory(1.0, 1.0, -1.0, 0).is_err());
    }
}
