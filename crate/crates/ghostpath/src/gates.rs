//! Gate semantics on hidden states: phase shifters, beam splitters,
//! detectors, and the two-detector arrangement.
//!
//! Phase shifters and detectors are local: they read and write a single
//! path, leaving the content of the other path untouched. The beam splitter
//! is the one non-local, stochastic element; it reads both paths and
//! re-dispatches the real particle. Detectors are blind to ghosts, which is
//! what makes the model's statistics reproduce the Born rule.
//!
//! [`push_forward`] lifts the single-state semantics to whole ensembles,
//! and [`sample_gate`] draws one trajectory step with a caller-supplied RNG.

use rand::Rng;

use crate::geometry::UnitVec3;
use crate::ontic::{Companion, OnticState, Path, WeightedStates};

/// One gate placement, as it appears in a circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateSpec {
    /// Phase plate in path `path` with plate angle `omega`.
    PhaseShifter { path: Path, omega: f64 },
    /// Beam splitter coupling both paths with mixing angle `xi`.
    BeamSplitter { xi: f64 },
    /// Non-demolition detector watching path `path`.
    Detector { path: Path },
    /// Detectors on both paths, read out together.
    DetectorPair,
}

impl GateSpec {
    /// Whether the gate reads a detector (and therefore branches on an
    /// outcome rather than evolving deterministically in distribution).
    pub fn is_detector(&self) -> bool {
        matches!(self, GateSpec::Detector { .. } | GateSpec::DetectorPair)
    }
}

impl std::fmt::Display for GateSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GateSpec::PhaseShifter { path, omega } => write!(f, "PS {path} {omega:.6}"),
            GateSpec::BeamSplitter { xi } => write!(f, "BS {xi:.6}"),
            GateSpec::Detector { path } => write!(f, "DET {path}"),
            GateSpec::DetectorPair => write!(f, "MEASURE"),
        }
    }
}

/// Whether a detector fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Detection {
    Click,
    NoClick,
}

impl std::fmt::Display for Detection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Detection::Click => write!(f, "CLICK"),
            Detection::NoClick => write!(f, "NOCLICK"),
        }
    }
}

/// The reading of one detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub detector: Path,
    pub detection: Detection,
}

/// Phase plate in path `j`, angle `omega`.
///
/// The two paths twist in opposite senses: in path 0 the plate rotates a
/// real particle by `-omega` about z and advances a ghost phase by `+omega`;
/// in path 1 the signs swap. A plate over an empty path does nothing.
pub fn apply_phase_shifter(state: &OnticState, j: Path, omega: f64) -> OnticState {
    // sigma = -1 for path 0, +1 for path 1.
    let sigma = -j.sign();
    match state.content(j) {
        crate::ontic::PathContent::Real(vec) => OnticState::new(
            state.path,
            vec.rotate_z(sigma * omega),
            state.companion,
        ),
        crate::ontic::PathContent::Ghost(phase) => OnticState::new(
            state.path,
            state.real_vec,
            Companion::ghost(phase - sigma * omega),
        ),
        crate::ontic::PathContent::Nothing => *state,
    }
}

/// The two branches of a beam splitter acting on one state: `(stay, swap)`,
/// each as `(weight, state)`. Weights sum to one; either may be zero.
pub fn beam_splitter_branches(
    state: &OnticState,
    xi: f64,
) -> ((f64, OnticState), (f64, OnticState)) {
    // The splitter erases the incoming phase and redraws the real particle:
    // with a ghost present the ghost phase is unwound from the real vector
    // first; with no companion the incoming vector is discarded outright.
    let outgoing = match state.companion {
        Companion::Ghost(phase) => state.real_vec.rotate_z(-phase).rotate_x(xi),
        Companion::Empty => UnitVec3::Z.rotate_x(xi),
    };
    // cos^2(theta'/2) and sin^2(theta'/2) of the outgoing polar angle,
    // computed from the z component to stay exact near the poles.
    let p_stay = ((1.0 + outgoing.z()) / 2.0).clamp(0.0, 1.0);
    let p_swap = ((1.0 - outgoing.z()) / 2.0).clamp(0.0, 1.0);
    let stay = OnticState::new(state.path, outgoing, Companion::ghost(0.0));
    let swap = OnticState::new(state.path.other(), -outgoing, Companion::ghost(0.0));
    ((p_stay, stay), (p_swap, swap))
}

/// Beam splitter with mixing angle `xi`, acting in distribution.
pub fn apply_beam_splitter(state: &OnticState, xi: f64) -> WeightedStates {
    let ((p_stay, stay), (p_swap, swap)) = beam_splitter_branches(state, xi);
    WeightedStates::from_entries(vec![(p_stay, stay), (p_swap, swap)])
        .expect("branch weights sum to one")
}

/// Detector in path `j`. Clicks exactly when the real particle is there.
///
/// A click pins the particle's vector back to +z and leaves the companion
/// path alone; a miss means the detector saw either the ghost, which it
/// absorbs, or nothing. Repeating the detector reproduces the same reading.
pub fn apply_detector(state: &OnticState, j: Path) -> (Outcome, OnticState) {
    if state.path == j {
        let outcome = Outcome { detector: j, detection: Detection::Click };
        (outcome, OnticState::new(state.path, UnitVec3::Z, state.companion))
    } else {
        let outcome = Outcome { detector: j, detection: Detection::NoClick };
        (outcome, OnticState::new(state.path, state.real_vec, Companion::Empty))
    }
}

/// Detectors on both paths. Exactly one clicks: the real particle's path.
pub fn apply_detector_pair(state: &OnticState) -> ([Outcome; 2], OnticState) {
    let (first, after_first) = apply_detector(state, Path::P0);
    let (second, after_both) = apply_detector(&after_first, Path::P1);
    let outcomes = [first, second];
    debug_assert!(outcomes.iter().filter(|o| o.detection == Detection::Click).count() == 1);
    (outcomes, after_both)
}

/// One conditional branch of a measurement: the detectors found the real
/// particle in `real_path`.
#[derive(Debug, Clone)]
pub struct MeasurementBranch {
    pub real_path: Path,
    pub probability: f64,
    pub conditional: WeightedStates,
}

/// Result of pushing an ensemble through one gate.
#[derive(Debug, Clone)]
pub enum PushForward {
    /// Phase shifters and beam splitters evolve the ensemble in place.
    Evolved(WeightedStates),
    /// Detector gates partition it by outcome. Branches with zero
    /// probability are omitted.
    Measured(Vec<MeasurementBranch>),
}

impl PushForward {
    pub fn into_evolved(self) -> Option<WeightedStates> {
        match self {
            PushForward::Evolved(dist) => Some(dist),
            PushForward::Measured(_) => None,
        }
    }

    /// The ensemble ignoring any outcome record: conditional branches mixed
    /// back together with their probabilities.
    pub fn unconditioned(&self) -> WeightedStates {
        match self {
            PushForward::Evolved(dist) => dist.clone(),
            PushForward::Measured(branches) => {
                let parts: Vec<_> = branches
                    .iter()
                    .map(|b| (b.probability, b.conditional.clone()))
                    .collect();
                WeightedStates::mix(&parts).expect("branch probabilities sum to one")
            }
        }
    }
}

/// Push a whole ensemble through one gate.
pub fn push_forward(dist: &WeightedStates, gate: &GateSpec) -> PushForward {
    match gate {
        GateSpec::PhaseShifter { path, omega } => {
            let entries = dist
                .iter()
                .map(|(w, s)| (*w, apply_phase_shifter(s, *path, *omega)))
                .collect();
            PushForward::Evolved(
                WeightedStates::from_entries(entries).expect("phase shifter preserves weight"),
            )
        }
        GateSpec::BeamSplitter { xi } => {
            let mut entries = Vec::with_capacity(dist.support_len() * 2);
            for (w, s) in dist.iter() {
                let ((p_stay, stay), (p_swap, swap)) = beam_splitter_branches(s, *xi);
                entries.push((w * p_stay, stay));
                entries.push((w * p_swap, swap));
            }
            PushForward::Evolved(
                WeightedStates::from_entries(entries).expect("splitter branches preserve weight"),
            )
        }
        GateSpec::Detector { path } => measure(dist, |s| apply_detector(s, *path).1),
        GateSpec::DetectorPair => measure(dist, |s| apply_detector_pair(s).1),
    }
}

fn measure(dist: &WeightedStates, update: impl Fn(&OnticState) -> OnticState) -> PushForward {
    let mut branches = Vec::new();
    for outcome_path in Path::BOTH {
        let entries: Vec<_> = dist
            .iter()
            .filter(|(_, s)| s.path == outcome_path)
            .map(|(w, s)| (*w, update(s)))
            .collect();
        let probability: f64 = entries.iter().map(|(w, _)| w).sum();
        if probability > 0.0 {
            let conditional = WeightedStates::from_conditional(entries, probability)
                .expect("non-empty measurement branch");
            branches.push(MeasurementBranch { real_path: outcome_path, probability, conditional });
        }
    }
    PushForward::Measured(branches)
}

/// Advance one sampled trajectory through one gate.
///
/// Returns the path the detectors revealed, if the gate was a detector gate,
/// together with the post-gate state. Only the beam splitter consumes
/// randomness.
pub fn sample_gate<R: Rng + ?Sized>(
    state: &OnticState,
    gate: &GateSpec,
    rng: &mut R,
) -> (Option<Path>, OnticState) {
    match gate {
        GateSpec::PhaseShifter { path, omega } => {
            (None, apply_phase_shifter(state, *path, *omega))
        }
        GateSpec::BeamSplitter { xi } => {
            let ((p_stay, stay), (_, swap)) = beam_splitter_branches(state, *xi);
            let next = if rng.random::<f64>() < p_stay { stay } else { swap };
            (None, next)
        }
        GateSpec::Detector { path } => {
            let (_, next) = apply_detector(state, *path);
            (Some(state.path), next)
        }
        GateSpec::DetectorPair => {
            let (_, next) = apply_detector_pair(state);
            (Some(state.path), next)
        }
    }
}
