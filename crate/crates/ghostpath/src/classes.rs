//! Equivalence classes of ensembles and the closed-form calculus on them.
//!
//! Among all ensembles over the hidden-state space, a particular family is
//! reachable by circuits: for each direction `N` on the sphere there is a
//! class `[N]` of two-point ensembles (plus one-point forms at the poles)
//! whose members are operationally indistinguishable. Gates act on the
//! labels by plain rotations, detectors by the Born rule, and convex
//! mixtures are summarized losslessly by a single vector in the unit ball,
//! the *epistemic vector*. This module implements the class constructions,
//! recognition of class members, the label transforms, and that vector.

use thiserror::Error;

use crate::gates::GateSpec;
use crate::geometry::{rotate_x_components, rotate_z_components, Spherical, UnitVec3, VEC_TOL};
use crate::ontic::{Companion, OnticState, Path, WeightedStates};

/// Tolerance for recognizing class-member weights.
pub const WEIGHT_TOL: f64 = 1e-7;

/// Labels closer to a pole than this (in sin theta) use the pole forms.
pub const POLE_SIN_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ClassParamsError {
    #[error("generic class parameters require a label away from the poles")]
    GenericAtPole,
    #[error("pole class parameters require the label +z or -z")]
    ParamsOffPole,
    #[error("the empty form excludes a real vector at -z")]
    EmptyAtSouthPole,
}

/// The label `N` of a class `[N]`: a direction on the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassLabel(UnitVec3);

impl ClassLabel {
    pub fn new(vec: UnitVec3) -> ClassLabel {
        ClassLabel(vec)
    }

    pub fn from_spherical(theta: f64, phi: f64) -> ClassLabel {
        ClassLabel(UnitVec3::from_spherical(Spherical::new(theta, phi)))
    }

    pub fn vec(&self) -> UnitVec3 {
        self.0
    }

    pub fn approx_eq(&self, other: &ClassLabel) -> bool {
        self.0.approx_eq(&other.0)
    }
}

/// Which pole a vector sits at, if it is within the pole band.
fn pole_of(v: &UnitVec3) -> Option<Path> {
    let sin_theta = (v.x() * v.x() + v.y() * v.y()).sqrt();
    if sin_theta < POLE_SIN_TOL {
        // +z labels pair with path 0, -z labels with path 1.
        Some(if v.z() > 0.0 { Path::P0 } else { Path::P1 })
    } else {
        None
    }
}

/// Parameters selecting one member of a class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassMemberParams {
    /// Two-point member of a class away from the poles, with free ghost
    /// phases `alpha` (path-0 point) and `beta` (path-1 point).
    Generic { alpha: f64, beta: f64 },
    /// One-point pole member whose companion is a ghost with phase `gamma`.
    PoleGhost { gamma: f64 },
    /// One-point pole member with no companion; the real vector `vec` is
    /// free, except that -z is excluded.
    PoleEmpty { vec: UnitVec3 },
}

/// A recognized class member: its label and which member it is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMembership {
    pub label: ClassLabel,
    pub params: ClassMemberParams,
}

/// Construct the member of `[label]` selected by `params`.
///
/// For a label `N = (theta, phi)` away from the poles the member is the
/// two-point ensemble
///
/// ```text
/// cos^2(theta/2) : (path 0,  rotate_z(N, alpha), ghost alpha)
/// sin^2(theta/2) : (path 1, -rotate_z(N, beta),  ghost beta)
/// ```
///
/// At the poles the classes degenerate to one-point forms: a real particle
/// at +z with a ghost of any phase, or a real particle with a free vector
/// and no companion.
pub fn class_member(
    label: &ClassLabel,
    params: &ClassMemberParams,
) -> Result<WeightedStates, ClassParamsError> {
    let n = label.vec();
    match (params, pole_of(&n)) {
        (ClassMemberParams::Generic { alpha, beta }, None) => {
            let p0 = (1.0 + n.z()) / 2.0;
            let p1 = (1.0 - n.z()) / 2.0;
            let upper = OnticState::new(Path::P0, n.rotate_z(*alpha), Companion::ghost(*alpha));
            let lower = OnticState::new(Path::P1, -n.rotate_z(*beta), Companion::ghost(*beta));
            Ok(WeightedStates::from_entries(vec![(p0, upper), (p1, lower)])
                .expect("pole exclusion keeps both weights positive"))
        }
        (ClassMemberParams::Generic { .. }, Some(_)) => Err(ClassParamsError::GenericAtPole),
        (ClassMemberParams::PoleGhost { gamma }, Some(pole)) => Ok(WeightedStates::delta(
            // The real vector is +z at both poles: the -z label puts the
            // particle in path 1 instead of tilting the vector.
            OnticState::new(pole, UnitVec3::Z, Companion::ghost(*gamma)),
        )),
        (ClassMemberParams::PoleEmpty { vec }, Some(pole)) => {
            if vec.approx_eq(&-UnitVec3::Z) {
                Err(ClassParamsError::EmptyAtSouthPole)
            } else {
                Ok(WeightedStates::delta(OnticState::new(pole, *vec, Companion::Empty)))
            }
        }
        (ClassMemberParams::PoleGhost { .. } | ClassMemberParams::PoleEmpty { .. }, None) => {
            Err(ClassParamsError::ParamsOffPole)
        }
    }
}

/// Recognize an ensemble as a class member, recovering label and parameters.
///
/// Returns `None` for ensembles that belong to no class; that is a regular
/// answer, not an error. Recognition uses [`WEIGHT_TOL`] on weights,
/// [`VEC_TOL`] on vectors, and defers to the pole forms inside the
/// [`POLE_SIN_TOL`] band, where the two-point weights lose precision.
pub fn identify_class(dist: &WeightedStates) -> Option<ClassMembership> {
    match dist.entries() {
        [(_, state)] => identify_single(state),
        [(w0, s0), (w1, s1)] => {
            // Canonical order puts the path-0 point first; require one
            // point per path.
            if s0.path != Path::P0 || s1.path != Path::P1 {
                return None;
            }
            let (Companion::Ghost(alpha), Companion::Ghost(beta)) = (s0.companion, s1.companion)
            else {
                return None;
            };
            let n = s0.real_vec.rotate_z(-alpha);
            if pole_of(&n).is_some() {
                return None;
            }
            if !s1.real_vec.approx_eq(&-n.rotate_z(beta)) {
                return None;
            }
            let expected = (1.0 + n.z()) / 2.0;
            if (w0 - expected).abs() > WEIGHT_TOL || (w1 - (1.0 - expected)).abs() > WEIGHT_TOL {
                return None;
            }
            Some(ClassMembership {
                label: ClassLabel(n),
                params: ClassMemberParams::Generic { alpha, beta },
            })
        }
        _ => None,
    }
}

fn identify_single(state: &OnticState) -> Option<ClassMembership> {
    let label = match state.path {
        Path::P0 => ClassLabel(UnitVec3::Z),
        Path::P1 => ClassLabel(-UnitVec3::Z),
    };
    match state.companion {
        Companion::Ghost(gamma) => {
            if state.real_vec.approx_eq(&UnitVec3::Z) {
                Some(ClassMembership { label, params: ClassMemberParams::PoleGhost { gamma } })
            } else {
                None
            }
        }
        Companion::Empty => {
            if state.real_vec.approx_eq(&-UnitVec3::Z) {
                None
            } else {
                Some(ClassMembership {
                    label,
                    params: ClassMemberParams::PoleEmpty { vec: state.real_vec },
                })
            }
        }
    }
}

/// A vector in the closed unit ball, the state space of the class calculus
/// and the summary of arbitrary accessible mixtures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallVec {
    x: f64,
    y: f64,
    z: f64,
}

impl BallVec {
    pub const ZERO: BallVec = BallVec { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Result<BallVec, ClassParamsError> {
        let v = BallVec { x, y, z };
        if v.norm() > 1.0 + 1e-9 {
            // Reuse the params error space for the one geometric precondition.
            return Err(ClassParamsError::ParamsOffPole);
        }
        Ok(v)
    }

    fn from_components(c: [f64; 3]) -> BallVec {
        debug_assert!((c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt() <= 1.0 + 1e-9);
        BallVec { x: c[0], y: c[1], z: c[2] }
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

    pub fn rotate_x(&self, angle: f64) -> BallVec {
        BallVec::from_components(rotate_x_components(self.components(), angle))
    }

    pub fn rotate_z(&self, angle: f64) -> BallVec {
        BallVec::from_components(rotate_z_components(self.components(), angle))
    }

    pub fn approx_eq(&self, other: &BallVec) -> bool {
        (self.x - other.x).abs() <= VEC_TOL
            && (self.y - other.y).abs() <= VEC_TOL
            && (self.z - other.z).abs() <= VEC_TOL
    }
}

impl From<UnitVec3> for BallVec {
    fn from(v: UnitVec3) -> BallVec {
        let [x, y, z] = v.components();
        BallVec { x, y, z }
    }
}

impl From<ClassLabel> for BallVec {
    fn from(label: ClassLabel) -> BallVec {
        label.vec().into()
    }
}

/// How a unitary gate moves vectors of the calculus: a phase plate in path 0
/// rotates by `-omega` about z, in path 1 by `+omega`; a splitter rotates by
/// `xi` about x. Detector gates return `None`.
pub fn gate_rotation(v: &BallVec, gate: &GateSpec) -> Option<BallVec> {
    match gate {
        GateSpec::PhaseShifter { path: Path::P0, omega } => Some(v.rotate_z(-omega)),
        GateSpec::PhaseShifter { path: Path::P1, omega } => Some(v.rotate_z(*omega)),
        GateSpec::BeamSplitter { xi } => Some(v.rotate_x(*xi)),
        GateSpec::Detector { .. } | GateSpec::DetectorPair => None,
    }
}

/// Probability that the detectors find the real particle in path `i`, given
/// the class (or mixture) vector `n`.
pub fn born_probability(n: &BallVec, i: Path) -> f64 {
    (1.0 + i.sign() * n.z()) / 2.0
}

/// The calculus vector after a detection: collapsed to a pole for a recorded
/// outcome, projected onto the z axis when the outcome is ignored.
pub fn measurement_update(n: &BallVec, outcome: Option<Path>) -> BallVec {
    match outcome {
        Some(Path::P0) => UnitVec3::Z.into(),
        Some(Path::P1) => (-UnitVec3::Z).into(),
        None => BallVec { x: 0.0, y: 0.0, z: n.z },
    }
}

/// How one gate acts on a class label.
#[derive(Debug, Clone, Copy)]
pub enum ClassTransform {
    /// Unitary gates rotate the label.
    Rotated(ClassLabel),
    /// Detector gates branch: the particle is found in a path with its Born
    /// probability and the label collapses to the matching pole.
    Measured([MeasuredClass; 2]),
}

/// One branch of a measured class transform.
#[derive(Debug, Clone, Copy)]
pub struct MeasuredClass {
    pub real_path: Path,
    pub probability: f64,
    pub label: ClassLabel,
}

/// Transform a class label under one gate.
pub fn class_transform(label: &ClassLabel, gate: &GateSpec) -> ClassTransform {
    let ball: BallVec = (*label).into();
    match gate_rotation(&ball, gate) {
        Some(rotated) => {
            let [x, y, z] = rotated.components();
            ClassTransform::Rotated(ClassLabel(
                UnitVec3::new(x, y, z).expect("rotations preserve the unit norm"),
            ))
        }
        None => ClassTransform::Measured(Path::BOTH.map(|path| MeasuredClass {
            real_path: path,
            probability: born_probability(&ball, path),
            label: match path {
                Path::P0 => ClassLabel(UnitVec3::Z),
                Path::P1 => ClassLabel(-UnitVec3::Z),
            },
        })),
    }
}

/// The epistemic vector of an ensemble: the single ball vector that fixes
/// all of its observable statistics.
///
/// Each support point contributes its own direction,
///
/// * a real particle in path 0 with vector `v` and ghost phase `phi`
///   contributes `rotate_z(v, -phi)`,
/// * the same in path 1 contributes `-rotate_z(v, -phi)`,
/// * a state with no companion contributes plus or minus z by path,
///
/// and the contributions add with the ensemble weights. On mixtures of class
/// members this sum is decomposition-independent. Outside that accessible
/// family the function still returns the weighted sum, but no operational
/// meaning is claimed for it.
pub fn epistemic_vector(dist: &WeightedStates) -> BallVec {
    let mut acc = [0.0f64; 3];
    for (w, state) in dist.iter() {
        let contribution = match state.companion {
            Companion::Ghost(phase) => {
                let unwound = state.real_vec.rotate_z(-phase);
                match state.path {
                    Path::P0 => unwound,
                    Path::P1 => -unwound,
                }
            }
            Companion::Empty => match state.path {
                Path::P0 => UnitVec3::Z,
                Path::P1 => -UnitVec3::Z,
            },
        };
        let [x, y, z] = contribution.components();
        acc[0] += w * x;
        acc[1] += w * y;
        acc[2] += w * z;
    }
    BallVec::from_components(acc)
}

/// Small ensembles used throughout the tests and demos, generated from the
/// class constructions rather than written out by hand.
pub mod fixtures {
    use super::*;

    /// A member of `[+y]` with ghost phases `(alpha, beta)`.
    pub fn plus_y_member(alpha: f64, beta: f64) -> WeightedStates {
        class_member(&ClassLabel::new(UnitVec3::Y), &ClassMemberParams::Generic { alpha, beta })
            .expect("+y is not a pole")
    }

    /// A member of `[-y]` with ghost phases `(alpha, beta)`.
    pub fn minus_y_member(alpha: f64, beta: f64) -> WeightedStates {
        class_member(&ClassLabel::new(-UnitVec3::Y), &ClassMemberParams::Generic { alpha, beta })
            .expect("-y is not a pole")
    }

    /// The ghost-form pole member of `[+z]` or `[-z]`.
    pub fn pole_ghost_member(label_sign: Path, gamma: f64) -> WeightedStates {
        let label = match label_sign {
            Path::P0 => ClassLabel::new(UnitVec3::Z),
            Path::P1 => ClassLabel::new(-UnitVec3::Z),
        };
        class_member(&label, &ClassMemberParams::PoleGhost { gamma }).expect("pole label")
    }
}
