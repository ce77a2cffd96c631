use serde::{Deserialize, Serialize};

use crate::error::{Result, SvieError};

/// Uniform partition `0 = t_0 < t_1 < ... < t_n = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(SvieError::Config(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(SvieError::Config("grid needs at least one step".into()));
        }
        Ok(Self {
            horizon,
            steps,
            dt: horizon / steps as f64,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Step width, computed once at construction.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of grid points, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Time of grid point `i`. The last point is pinned to the horizon.
    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.dt
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// Index of the grid point strictly before `tau`, for `tau` in `(0, T]`.
    ///
    /// A jump in `(t_j, t_{j+1}]` maps to `j`, so its state argument is the
    /// left limit and the scheme stays lower-triangular.
    pub fn step_before(&self, tau: f64) -> usize {
        let raw = (tau / self.dt).ceil() as usize;
        let mut j = raw.saturating_sub(1).min(self.steps - 1);
        // ceil can land one cell off when tau/dt sits next to an integer
        while j > 0 && self.time(j) >= tau {
            j -= 1;
        }
        while j + 1 < self.steps && self.time(j + 1) < tau {
            j += 1;
        }
        j
    }
}

/// Convenience wrapper around [`TimeGrid::new`].
pub fn build_grid(horizon: f64, steps: usize) -> Result<TimeGrid> {
    TimeGrid::new(horizon, steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_step_unit_grid() {
        let g = build_grid(1.0, 4).unwrap();
        assert_eq!(g.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.dt(), 0.25);
    }

    #[test]
    fn single_step_grid() {
        assert_eq!(build_grid(2.0, 1).unwrap().points(), vec![0.0, 2.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(build_grid(1.0, 0), Err(SvieError::Config(_))));
        assert!(matches!(build_grid(0.0, 3), Err(SvieError::Config(_))));
        assert!(matches!(build_grid(-1.0, 3), Err(SvieError::Config(_))));
        assert!(matches!(build_grid(f64::NAN, 3), Err(SvieError::Config(_))));
    }

    #[test]
    fn points_strictly_increasing_and_span_horizon() {
        let g = build_grid(0.3, 7).unwrap();
        let p = g.points();
        assert!(p.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(p[0], 0.0);
        assert_eq!(*p.last().unwrap(), 0.3);
    }

    #[test]
    fn step_before_uses_left_point() {
        let g = build_grid(1.0, 4).unwrap();
        assert_eq!(g.step_before(0.1), 0);
        assert_eq!(g.step_before(0.25), 0);
        assert_eq!(g.step_before(0.2500001), 1);
        assert_eq!(g.step_before(1.0), 3);
        assert_eq!(g.step_before(0.74), 2);
    }
}
