//! Reference qubit backend.
//!
//! The circuit elements act on a qubit as
//!
//! ```text
//! beam splitter   B(xi)      = [[i cos(xi/2), sin(xi/2)], [sin(xi/2), i cos(xi/2)]]
//! phase plate     P0(omega)  = diag(e^{i omega}, 1)
//! phase plate     P1(omega)  = diag(1, e^{i omega})
//! detector        projective measurement in the path basis
//! ```
//!
//! The primary representation is the Bloch vector, which quotients away the
//! global phase; [`matrix_apply`] evolves raw amplitudes with the 2x2
//! matrices above as an independent cross-check.

use num_complex::Complex64;
use thiserror::Error;

use crate::gates::GateSpec;
use crate::geometry::{rotate_x_components, rotate_z_components, UnitVec3, VEC_TOL};
use crate::ontic::Path;

#[derive(Debug, Error, PartialEq)]
pub enum BackendError {
    #[error("detector gates are measurements; use the measurement operations")]
    DetectorIsNotUnitary,
    #[error("a Bloch vector must lie in the unit ball, got norm {0}")]
    OutsideBall(f64),
    #[error("amplitudes must be normalized, got squared norm {0}")]
    NotNormalized(f64),
}

/// A qubit state as a vector in the Bloch ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    x: f64,
    y: f64,
    z: f64,
}

impl BlochState {
    pub fn new(x: f64, y: f64, z: f64) -> Result<BlochState, BackendError> {
        let norm = (x * x + y * y + z * z).sqrt();
        if norm > 1.0 + 1e-9 {
            return Err(BackendError::OutsideBall(norm));
        }
        Ok(BlochState { x, y, z })
    }

    /// The pure state along the path-basis pole for `path`.
    pub fn basis(path: Path) -> BlochState {
        BlochState { x: 0.0, y: 0.0, z: path.sign() }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn approx_eq(&self, other: &BlochState) -> bool {
        (self.x - other.x).abs() <= VEC_TOL
            && (self.y - other.y).abs() <= VEC_TOL
            && (self.z - other.z).abs() <= VEC_TOL
    }
}

impl From<UnitVec3> for BlochState {
    fn from(v: UnitVec3) -> BlochState {
        let [x, y, z] = v.components();
        BlochState { x, y, z }
    }
}

/// Evolve a Bloch vector through a unitary gate.
///
/// The beam splitter rotates by `xi` about x; a phase plate in path 0
/// rotates by `-omega` about z and in path 1 by `+omega`.
pub fn bloch_apply(state: &BlochState, gate: &GateSpec) -> Result<BlochState, BackendError> {
    let c = state.components();
    let rotated = match gate {
        GateSpec::BeamSplitter { xi } => rotate_x_components(c, *xi),
        GateSpec::PhaseShifter { path: Path::P0, omega } => rotate_z_components(c, -omega),
        GateSpec::PhaseShifter { path: Path::P1, omega } => rotate_z_components(c, *omega),
        GateSpec::Detector { .. } | GateSpec::DetectorPair => {
            return Err(BackendError::DetectorIsNotUnitary)
        }
    };
    Ok(BlochState { x: rotated[0], y: rotated[1], z: rotated[2] })
}

/// Born probability of finding the particle in `path`.
pub fn measure_probability(state: &BlochState, path: Path) -> f64 {
    (1.0 + path.sign() * state.z) / 2.0
}

/// The post-measurement state for a recorded outcome.
pub fn collapse(path: Path) -> BlochState {
    BlochState::basis(path)
}

/// The post-measurement state when the outcome is discarded.
pub fn nonselective_update(state: &BlochState) -> BlochState {
    BlochState { x: 0.0, y: 0.0, z: state.z }
}

/// A pure qubit state as raw amplitudes over the two paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitudes {
    pub a0: Complex64,
    pub a1: Complex64,
}

impl Amplitudes {
    pub fn new(a0: Complex64, a1: Complex64) -> Result<Amplitudes, BackendError> {
        let squared = a0.norm_sqr() + a1.norm_sqr();
        if (squared - 1.0).abs() > 1e-9 {
            return Err(BackendError::NotNormalized(squared));
        }
        Ok(Amplitudes { a0, a1 })
    }

    pub fn basis(path: Path) -> Amplitudes {
        match path {
            Path::P0 => Amplitudes { a0: Complex64::ONE, a1: Complex64::ZERO },
            Path::P1 => Amplitudes { a0: Complex64::ZERO, a1: Complex64::ONE },
        }
    }

    pub fn probability(&self, path: Path) -> f64 {
        match path {
            Path::P0 => self.a0.norm_sqr(),
            Path::P1 => self.a1.norm_sqr(),
        }
    }

    /// The Bloch vector of the state, which forgets the global phase.
    pub fn bloch(&self) -> BlochState {
        let cross = self.a0.conj() * self.a1;
        BlochState {
            x: 2.0 * cross.re,
            y: 2.0 * cross.im,
            z: self.a0.norm_sqr() - self.a1.norm_sqr(),
        }
    }
}

/// Evolve amplitudes through a unitary gate with its 2x2 matrix.
pub fn matrix_apply(state: &Amplitudes, gate: &GateSpec) -> Result<Amplitudes, BackendError> {
    let (a0, a1) = (state.a0, state.a1);
    let next = match gate {
        GateSpec::BeamSplitter { xi } => {
            let half = xi / 2.0;
            let diag = Complex64::new(0.0, half.cos());
            let off = Complex64::new(half.sin(), 0.0);
            Amplitudes { a0: diag * a0 + off * a1, a1: off * a0 + diag * a1 }
        }
        GateSpec::PhaseShifter { path: Path::P0, omega } => {
            Amplitudes { a0: Complex64::from_polar(1.0, *omega) * a0, a1 }
        }
        GateSpec::PhaseShifter { path: Path::P1, omega } => {
            Amplitudes { a0, a1: Complex64::from_polar(1.0, *omega) * a1 }
        }
        GateSpec::Detector { .. } | GateSpec::DetectorPair => {
            return Err(BackendError::DetectorIsNotUnitary)
        }
    };
    Ok(next)
}
