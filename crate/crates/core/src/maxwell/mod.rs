//! Maxwell problem assembly and solution.
//!
//! Each electric component satisfies a scalar wave equation that is solved as
//! one space-time collocation system on all-Lobatto grids. The result is
//! interpolated onto the component's staggered grid. The magnetic field is
//! then recovered from a discrete Faraday law integrated in time.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod magnetic;
pub mod solution;
pub mod spaces;
pub mod wave;

pub use magnetic::{recover_magnetic, MagneticRecovery};
pub use solution::{solve_fields, ExportFormat, Field, FieldSolution, MaxwellData, SolutionMeta, SolveOptions};
pub use spaces::{build_staggered_spaces, StaggeredSpaces};
pub use wave::{
    assemble_wave_system, embed_boundary, recover_time_derivative, solve_full, solve_tt, DiscreteWaveSystem, FullSolve,
    SpaceTimeSolver, TtSolve, WaveMode, WaveProblem,
};

/// Field component index; also names the spatial axis it is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    X,
    Y,
    Z,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::X, Component::Y, Component::Z];

    /// Position of the component's own axis in `(t, x, y, z)`.
    pub fn axis(self) -> usize {
        match self {
            Component::X => 1,
            Component::Y => 2,
            Component::Z => 3,
        }
    }

    pub fn index(self) -> usize {
        self.axis() - 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::X => "x",
            Component::Y => "y",
            Component::Z => "z",
        }
    }
}

/// A scalar function of `[t, x, y, z]`.
pub type ScalarField = Arc<dyn Fn([f64; 4]) -> f64 + Send + Sync>;

pub fn scalar_field(f: impl Fn([f64; 4]) -> f64 + Send + Sync + 'static) -> ScalarField {
    Arc::new(f)
}

pub fn zero_field() -> ScalarField {
    Arc::new(|_| 0.0)
}

/// Evaluates `f`, turning non-finite values into [`Error::Oracle`].
pub fn eval_checked(f: &ScalarField, p: [f64; 4], what: &str) -> Result<f64> {
    let v = f(p);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Oracle { coords: p, reason: format!("{what} returned {v}") })
    }
}

/// Space-time box `[t0,t1] × [x0,x1] × [y0,y1] × [z0,z1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeBox {
    pub intervals: [(f64, f64); 4],
}

impl SpaceTimeBox {
    pub fn new(t: (f64, f64), x: (f64, f64), y: (f64, f64), z: (f64, f64)) -> Self {
        Self { intervals: [t, x, y, z] }
    }

    pub fn unit() -> Self {
        Self { intervals: [(0.0, 1.0); 4] }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, &(a, b)) in self.intervals.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::InvalidGrid(format!("axis {k} has invalid interval [{a}, {b}]")));
            }
        }
        Ok(())
    }
}
