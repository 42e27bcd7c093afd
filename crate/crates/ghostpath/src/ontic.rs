//! The hidden-state space of the model and finitely supported probability
//! distributions over it.
//!
//! A state places one *real* particle, carrying a unit vector, in one of the
//! two paths of the interferometer. The other path holds the particle's
//! companion: either a *ghost* carrying only a phase, or nothing at all.
//! Several states with weights form a [`WeightedStates`] ensemble, the object
//! the exact backend pushes through gates.

use serde::ser::{Serialize, SerializeSeq, SerializeStruct, Serializer};
use thiserror::Error;

use crate::geometry::{angle_distance, normalize_angle, UnitVec3};

/// Tolerance on the total weight of a distribution.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Tolerance for comparing ghost phases (modulo a full turn).
pub const PHASE_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DistributionError {
    #[error("weights must sum to 1, got {0}")]
    WeightSum(f64),
    #[error("weights must be non-negative, got {0}")]
    NegativeWeight(f64),
    #[error("a distribution needs at least one state with positive weight")]
    EmptySupport,
}

/// One of the two interferometer paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Path {
    P0,
    P1,
}

impl Path {
    pub const BOTH: [Path; 2] = [Path::P0, Path::P1];

    pub fn from_index(index: u8) -> Option<Path> {
        match index {
            0 => Some(Path::P0),
            1 => Some(Path::P1),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Path::P0 => 0,
            Path::P1 => 1,
        }
    }

    /// The other path.
    pub fn other(self) -> Path {
        match self {
            Path::P0 => Path::P1,
            Path::P1 => Path::P0,
        }
    }

    /// `(-1)^i` for path `i`.
    pub fn sign(self) -> f64 {
        match self {
            Path::P0 => 1.0,
            Path::P1 => -1.0,
        }
    }
}

impl std::fmt::Display for Path {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// What occupies the path opposite the real particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Companion {
    /// A ghost particle carrying a phase in `[0, 2*pi)`.
    Ghost(f64),
    /// Nothing; the companion was absorbed by a detector.
    Empty,
}

impl Companion {
    /// Ghost companion with the phase reduced into `[0, 2*pi)`.
    pub fn ghost(phase: f64) -> Companion {
        Companion::Ghost(normalize_angle(phase))
    }

    pub fn is_ghost(&self) -> bool {
        matches!(self, Companion::Ghost(_))
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Companion::Empty)
    }

    /// Equality with ghost phases compared modulo a full turn.
    pub fn approx_eq(&self, other: &Companion) -> bool {
        match (self, other) {
            (Companion::Ghost(a), Companion::Ghost(b)) => angle_distance(*a, *b) <= PHASE_TOL,
            (Companion::Empty, Companion::Empty) => true,
            _ => false,
        }
    }
}

/// A complete configuration of the two paths: where the real particle is,
/// its unit vector, and the companion in the other path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnticState {
    pub path: Path,
    pub real_vec: UnitVec3,
    pub companion: Companion,
}

impl OnticState {
    pub fn new(path: Path, real_vec: UnitVec3, companion: Companion) -> OnticState {
        let companion = match companion {
            Companion::Ghost(phase) => Companion::ghost(phase),
            Companion::Empty => Companion::Empty,
        };
        OnticState { path, real_vec, companion }
    }

    /// What sits in path `j`: the real particle, the ghost, or nothing.
    pub fn content(&self, j: Path) -> PathContent {
        if self.path == j {
            PathContent::Real(self.real_vec)
        } else {
            match self.companion {
                Companion::Ghost(phase) => PathContent::Ghost(phase),
                Companion::Empty => PathContent::Nothing,
            }
        }
    }

    pub fn approx_eq(&self, other: &OnticState) -> bool {
        self.path == other.path
            && self.real_vec.approx_eq(&other.real_vec)
            && self.companion.approx_eq(&other.companion)
    }
}

/// Local content of a single path, used to state and test locality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathContent {
    Real(UnitVec3),
    Ghost(f64),
    Nothing,
}

impl PathContent {
    pub fn approx_eq(&self, other: &PathContent) -> bool {
        match (self, other) {
            (PathContent::Real(a), PathContent::Real(b)) => a.approx_eq(b),
            (PathContent::Ghost(a), PathContent::Ghost(b)) => angle_distance(*a, *b) <= PHASE_TOL,
            (PathContent::Nothing, PathContent::Nothing) => true,
            _ => false,
        }
    }
}

/// A finitely supported probability distribution over [`OnticState`].
///
/// The representation is canonical: weights are strictly positive and sum to
/// one, states equal within tolerance are merged, and entries are sorted so
/// that equal distributions compare structurally.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedStates {
    entries: Vec<(f64, OnticState)>,
}

impl WeightedStates {
    /// The distribution concentrated on a single state.
    pub fn delta(state: OnticState) -> WeightedStates {
        WeightedStates { entries: vec![(1.0, state)] }
    }

    /// Build a distribution from weighted states, canonicalizing as needed.
    ///
    /// Zero weights are dropped, duplicates within tolerance are merged, and
    /// the total weight must already be 1 within [`WEIGHT_SUM_TOL`]; the
    /// stored weights are rescaled so they sum to 1 exactly.
    pub fn from_entries(
        entries: Vec<(f64, OnticState)>,
    ) -> Result<WeightedStates, DistributionError> {
        let mut total = 0.0;
        for &(w, _) in &entries {
            if w < 0.0 {
                return Err(DistributionError::NegativeWeight(w));
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(DistributionError::WeightSum(total));
        }
        Self::from_conditional(entries, total)
    }

    /// Normalize `entries` by `total`, which must be their sum. This is the
    /// path used for conditioning on a measurement outcome.
    pub(crate) fn from_conditional(
        entries: Vec<(f64, OnticState)>,
        total: f64,
    ) -> Result<WeightedStates, DistributionError> {
        let mut merged: Vec<(f64, OnticState)> = Vec::with_capacity(entries.len());
        for (w, state) in entries {
            if w <= 0.0 {
                continue;
            }
            match merged.iter_mut().find(|(_, s)| s.approx_eq(&state)) {
                Some((mw, _)) => *mw += w,
                None => merged.push((w, state)),
            }
        }
        if merged.is_empty() {
            return Err(DistributionError::EmptySupport);
        }
        for (w, _) in &mut merged {
            *w /= total;
        }
        merged.sort_by(|(_, a), (_, b)| state_order(a, b));
        Ok(WeightedStates { entries: merged })
    }

    /// Mix component distributions with the given probabilities.
    pub fn mix(parts: &[(f64, WeightedStates)]) -> Result<WeightedStates, DistributionError> {
        let mut entries = Vec::new();
        for (p, dist) in parts {
            if *p < 0.0 {
                return Err(DistributionError::NegativeWeight(*p));
            }
            for (w, state) in &dist.entries {
                entries.push((p * w, *state));
            }
        }
        Self::from_entries(entries)
    }

    pub fn entries(&self) -> &[(f64, OnticState)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &(f64, OnticState)> {
        self.entries.iter()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|(w, _)| w).sum()
    }

    /// Distribution equality: same support within state tolerance, with
    /// weights matching within `weight_tol`.
    pub fn approx_eq(&self, other: &WeightedStates, weight_tol: f64) -> bool {
        if self.entries.len() != other.entries.len() {
            return false;
        }
        let mut matched = vec![false; other.entries.len()];
        'outer: for (w, state) in &self.entries {
            for (slot, (ow, ostate)) in other.entries.iter().enumerate() {
                if !matched[slot] && state.approx_eq(ostate) && (w - ow).abs() <= weight_tol {
                    matched[slot] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }
}

fn state_order(a: &OnticState, b: &OnticState) -> std::cmp::Ordering {
    let key = |s: &OnticState| {
        let [x, y, z] = s.real_vec.components();
        let (kind, phase) = match s.companion {
            Companion::Ghost(p) => (0u8, p),
            Companion::Empty => (1u8, 0.0),
        };
        (s.path.index(), kind, [x, y, z], phase)
    };
    let (ap, ak, av, aph) = key(a);
    let (bp, bk, bv, bph) = key(b);
    ap.cmp(&bp)
        .then(ak.cmp(&bk))
        .then_with(|| {
            av.iter()
                .zip(bv.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .then(aph.total_cmp(&bph))
}

/// The reference input: a real particle in `path` pointing at +z, nothing in
/// the other path.
pub fn initial_state(path: Path) -> WeightedStates {
    WeightedStates::delta(OnticState::new(path, UnitVec3::Z, Companion::Empty))
}

impl Serialize for WeightedStates {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct Entry<'a>(&'a f64, &'a OnticState);

        impl Serialize for Entry<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let mut record = serializer.serialize_struct("WeightedState", 4)?;
                record.serialize_field("weight", self.0)?;
                record.serialize_field("path", &self.1.path.index())?;
                record.serialize_field("vec", &self.1.real_vec.components())?;
                let ghost = match self.1.companion {
                    Companion::Ghost(phase) => Some(phase),
                    Companion::Empty => None,
                };
                record.serialize_field("ghost", &ghost)?;
                record.end()
            }
        }

        let mut seq = serializer.serialize_seq(Some(self.entries.len()))?;
        for (w, state) in &self.entries {
            seq.serialize_element(&Entry(w, state))?;
        }
        seq.end()
    }
}
