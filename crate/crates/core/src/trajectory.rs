use crate::functionals::DiagnosticsRecord;
use crate::grid::ScalarField;
use crate::state::{SpeciesState, SystemState};

/// Positivity clip bookkeeping for one run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClipEvents {
    /// Number of grid values raised to the floor.
    pub count: u64,
    /// Largest amount a value was raised by.
    pub worst: f64,
}

impl ClipEvents {
    pub fn merge(&mut self, other: ClipEvents) {
        self.count += other.count;
        self.worst = self.worst.max(other.worst);
    }
}

/// Raise every density below `floor` to `floor`.
pub fn clip_densities(rhos: &mut [ScalarField], floor: f64) -> ClipEvents {
    let mut ev = ClipEvents::default();
    for rho in rhos {
        for v in rho.values_mut() {
            if *v < floor {
                ev.count += 1;
                ev.worst = ev.worst.max(floor - *v);
                *v = floor;
            }
        }
    }
    ev
}

/// Time-ordered states and diagnostics of one run.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub states: Vec<SystemState>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub clip_events: ClipEvents,
}

impl Trajectory {
    /// A run with any clip event is degraded and excluded from acceptance
    /// statistics.
    pub fn is_degraded(&self) -> bool {
        self.clip_events.count > 0
    }

    pub fn final_state(&self) -> Option<&SystemState> {
        self.states.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    /// Stored state linearly interpolated in time; `None` outside the stored
    /// range.
    pub fn state_at(&self, t: f64) -> Option<SystemState> {
        let first = self.states.first()?;
        let last = self.states.last()?;
        let tol = 1e-12 * (1.0 + t.abs());
        if t < first.time - tol || t > last.time + tol {
            return None;
        }
        let pos = self.states.partition_point(|s| s.time < t - tol);
        let hi = &self.states[pos.min(self.states.len() - 1)];
        if (hi.time - t).abs() <= tol || pos == 0 {
            return Some(hi.clone());
        }
        let lo = &self.states[pos - 1];
        let w = (t - lo.time) / (hi.time - lo.time);
        let blend = |a: &ScalarField, b: &ScalarField| a.zip_map(b, |x, y| (1.0 - w) * x + w * y);
        let species = lo
            .species
            .iter()
            .zip(&hi.species)
            .map(|(a, b)| SpeciesState {
                rho: blend(&a.rho, &b.rho),
                u: a.u.zip_components(&b.u, blend),
            })
            .collect();
        Some(SystemState { time: t, species })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn clipping_counts_and_worst() {
        let g = make_grid(1, 8).unwrap();
        let mut r = vec![ScalarField::from_values(
            g,
            vec![1.0, -0.5, 0.2, 0.0, 1.0, 1.0, 1.0, -0.1],
        )
        .unwrap()];
        let ev = clip_densities(&mut r, 1e-10);
        assert_eq!(ev.count, 3);
        assert!((ev.worst - 0.5).abs() < 1e-9);
        assert!(r[0].min() >= 1e-10);
    }

    #[test]
    fn interpolation_between_states() {
        let g = make_grid(1, 8).unwrap();
        let mk = |t: f64, v: f64| SystemState {
            time: t,
            species: vec![SpeciesState::at_rest(ScalarField::constant(g, v))],
        };
        let traj = Trajectory {
            states: vec![mk(0.0, 1.0), mk(1.0, 3.0)],
            ..Default::default()
        };
        let mid = traj.state_at(0.25).unwrap();
        assert!((mid.species[0].rho.values()[0] - 1.5).abs() < 1e-15);
        assert_eq!(traj.state_at(1.0).unwrap().species[0].rho.values()[0], 3.0);
        assert!(traj.state_at(1.5).is_none());
    }
}
