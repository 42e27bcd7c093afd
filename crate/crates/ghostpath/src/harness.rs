//! Exact runner, Monte Carlo sampler, and three-backend comparison.
//!
//! Every backend walks the same circuit. Detector steps split the run into
//! branches keyed by the outcome history; `SELECT` prunes branches and the
//! final probabilities are conditioned on the retained total. The three
//! backends are:
//!
//! * ontic: exact push-forward of the weighted ensemble,
//! * class: the label calculus on ball vectors,
//! * quantum: the Bloch-vector qubit model.
//!
//! For circuits starting from a fresh path (or any mixture of class
//! members) the three agree history by history; [`compare`] checks that and
//! optionally holds a Monte Carlo run against the exact probabilities.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Init, Step};
use crate::classes::{
    born_probability, epistemic_vector, gate_rotation, identify_class, measurement_update,
    BallVec, ClassMemberParams, ClassMembership,
};
use crate::gates::{push_forward, sample_gate, Detection, GateSpec, PushForward};
use crate::geometry::UnitVec3;
use crate::ontic::{Companion, OnticState, Path, WeightedStates};
use crate::quantum::{bloch_apply, collapse, measure_probability, BlochState};

/// Width of the Monte Carlo acceptance band in standard deviations.
pub const SIGMA_BAND: f64 = 5.0;

/// Default tolerance for backend agreement on exact probabilities.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum HarnessError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("post-selection removed every branch")]
    NothingSelected,
}

/// One recorded detection event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutcomeEvent {
    /// A single detector watched one path.
    Detector { detector: Path, detection: Detection },
    /// Paired detectors covered both paths; exactly one clicked.
    Pair { clicked: Path },
}

impl OutcomeEvent {
    fn for_gate(gate: &GateSpec, particle_path: Path) -> OutcomeEvent {
        match gate {
            GateSpec::Detector { path } => OutcomeEvent::Detector {
                detector: *path,
                detection: if particle_path == *path {
                    Detection::Click
                } else {
                    Detection::NoClick
                },
            },
            GateSpec::DetectorPair => OutcomeEvent::Pair { clicked: particle_path },
            other => unreachable!("{other} records no outcome"),
        }
    }

    /// Whether this event satisfies `SELECT path required`.
    pub fn matches_selection(&self, path: Path, required: Detection) -> bool {
        match self {
            OutcomeEvent::Detector { detector, detection } => {
                *detector == path && *detection == required
            }
            OutcomeEvent::Pair { clicked } => match required {
                Detection::Click => *clicked == path,
                Detection::NoClick => *clicked == path.other(),
            },
        }
    }
}

impl fmt::Display for OutcomeEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeEvent::Detector { detector, detection } => {
                write!(f, "D{detector}={detection}")
            }
            OutcomeEvent::Pair { clicked } => write!(f, "M=D{clicked}"),
        }
    }
}

/// The ordered record of detection events along one run.
pub type History = Vec<OutcomeEvent>;

/// Render a history as a single token sequence, `-` when no detector fired.
pub fn history_label(history: &History) -> String {
    if history.is_empty() {
        return "-".to_string();
    }
    history.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ")
}

/// How each backend carries a state through the circuit.
trait Backend {
    type State: Clone;

    fn start(init: &Init) -> Self::State;
    fn evolve(state: &Self::State, gate: &GateSpec) -> Self::State;
    /// Branches of a detector step, keyed by where the particle was found.
    /// Zero-probability branches may be omitted.
    fn branch(state: &Self::State, gate: &GateSpec) -> Vec<(Path, f64, Self::State)>;
}

struct OnticBackend;

impl Backend for OnticBackend {
    type State = WeightedStates;

    fn start(init: &Init) -> WeightedStates {
        match init {
            Init::Path(path) => crate::ontic::initial_state(*path),
            Init::Distribution(dist) => dist.clone(),
        }
    }

    fn evolve(state: &WeightedStates, gate: &GateSpec) -> WeightedStates {
        push_forward(state, gate).into_evolved().expect("gate evolves the ensemble")
    }

    fn branch(state: &WeightedStates, gate: &GateSpec) -> Vec<(Path, f64, WeightedStates)> {
        match push_forward(state, gate) {
            PushForward::Measured(branches) => branches
                .into_iter()
                .map(|b| (b.real_path, b.probability, b.conditional))
                .collect(),
            PushForward::Evolved(_) => unreachable!("detector gates always measure"),
        }
    }
}

struct ClassBackend;

impl Backend for ClassBackend {
    type State = BallVec;

    fn start(init: &Init) -> BallVec {
        match init {
            Init::Path(Path::P0) => UnitVec3::Z.into(),
            Init::Path(Path::P1) => (-UnitVec3::Z).into(),
            Init::Distribution(dist) => epistemic_vector(dist),
        }
    }

    fn evolve(state: &BallVec, gate: &GateSpec) -> BallVec {
        gate_rotation(state, gate).expect("gate rotates the label")
    }

    fn branch(state: &BallVec, _gate: &GateSpec) -> Vec<(Path, f64, BallVec)> {
        Path::BOTH
            .into_iter()
            .map(|path| {
                (path, born_probability(state, path), measurement_update(state, Some(path)))
            })
            .collect()
    }
}

struct QuantumBackend;

impl Backend for QuantumBackend {
    type State = BlochState;

    fn start(init: &Init) -> BlochState {
        match init {
            Init::Path(path) => BlochState::basis(*path),
            Init::Distribution(dist) => {
                let [x, y, z] = epistemic_vector(dist).components();
                BlochState::new(x, y, z).expect("epistemic vector lies in the unit ball")
            }
        }
    }

    fn evolve(state: &BlochState, gate: &GateSpec) -> BlochState {
        bloch_apply(state, gate).expect("gate is unitary")
    }

    fn branch(state: &BlochState, _gate: &GateSpec) -> Vec<(Path, f64, BlochState)> {
        Path::BOTH
            .into_iter()
            .map(|path| (path, measure_probability(state, path), collapse(path)))
            .collect()
    }
}

struct Leaf<S> {
    history: History,
    probability: f64,
    state: S,
}

/// Conditioned leaves plus the probability of surviving every selection.
type Walked<S> = (Vec<Leaf<S>>, f64);

fn split<B: Backend>(leaves: &mut Vec<Leaf<B::State>>, gate: &GateSpec) {
    let mut next = Vec::with_capacity(leaves.len() * 2);
    for leaf in leaves.drain(..) {
        for (particle_path, probability, state) in B::branch(&leaf.state, gate) {
            if probability <= 0.0 {
                continue;
            }
            let mut history = leaf.history.clone();
            history.push(OutcomeEvent::for_gate(gate, particle_path));
            next.push(Leaf { history, probability: leaf.probability * probability, state });
        }
    }
    *leaves = next;
}

/// Walk the circuit, calling `observe` with the leaves after every step.
/// Leaf probabilities stay joint during the walk; the returned leaves are
/// conditioned on the retained total, which is returned alongside.
fn walk_with<B: Backend>(
    circuit: &Circuit,
    mut observe: impl FnMut(&Step, &[Leaf<B::State>]),
) -> Result<Walked<B::State>, HarnessError> {
    circuit.validate()?;
    let mut leaves = vec![Leaf {
        history: History::new(),
        probability: 1.0,
        state: B::start(&circuit.init),
    }];
    for step in &circuit.steps {
        match step {
            Step::Gate(gate) if !gate.is_detector() => {
                for leaf in &mut leaves {
                    leaf.state = B::evolve(&leaf.state, gate);
                }
            }
            Step::Gate(gate) => split::<B>(&mut leaves, gate),
            Step::Measure => split::<B>(&mut leaves, &GateSpec::DetectorPair),
            Step::Select { path, required } => {
                leaves.retain(|leaf| {
                    matches!(leaf.history.last(),
                        Some(event) if event.matches_selection(*path, *required))
                });
            }
        }
        observe(step, &leaves);
    }
    let retained: f64 = leaves.iter().map(|l| l.probability).sum();
    if retained <= 0.0 {
        return Err(HarnessError::NothingSelected);
    }
    for leaf in &mut leaves {
        leaf.probability /= retained;
    }
    Ok((leaves, retained))
}

fn walk<B: Backend>(circuit: &Circuit) -> Result<Walked<B::State>, HarnessError> {
    walk_with::<B>(circuit, |_, _| {})
}

fn history_table<B: Backend>(
    circuit: &Circuit,
) -> Result<(BTreeMap<History, f64>, f64), HarnessError> {
    let (leaves, retained) = walk::<B>(circuit)?;
    let mut table = BTreeMap::new();
    for leaf in leaves {
        *table.entry(leaf.history).or_insert(0.0) += leaf.probability;
    }
    Ok((table, retained))
}

/// Exact per-history probabilities of the class-calculus backend, plus the
/// selection probability.
pub fn class_histories(circuit: &Circuit) -> Result<(BTreeMap<History, f64>, f64), HarnessError> {
    history_table::<ClassBackend>(circuit)
}

/// Exact per-history probabilities of the Bloch-vector backend, plus the
/// selection probability.
pub fn quantum_histories(
    circuit: &Circuit,
) -> Result<(BTreeMap<History, f64>, f64), HarnessError> {
    history_table::<QuantumBackend>(circuit)
}

/// One leaf of the exact run.
#[derive(Debug, Clone)]
pub struct Branch {
    pub history: History,
    /// Probability of this history, conditioned on post-selection.
    pub probability: f64,
    pub final_state: WeightedStates,
    /// The class the final ensemble belongs to, when it is a class member.
    pub class: Option<ClassMembership>,
    /// The ball vector summarizing the final ensemble.
    pub epistemic: BallVec,
}

/// Exhaustive push-forward of a circuit, one branch per outcome history.
#[derive(Debug, Clone)]
pub struct BranchTree {
    pub branches: Vec<Branch>,
    /// Probability that a run survives every `SELECT`.
    pub selection_probability: f64,
}

impl BranchTree {
    pub fn probability_of(&self, history: &History) -> f64 {
        self.branches
            .iter()
            .filter(|b| &b.history == history)
            .map(|b| b.probability)
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("branch tree serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "history,probability,class,label_x,label_y,label_z,epistemic_x,epistemic_y,epistemic_z\n",
        );
        for branch in &self.branches {
            let (kind, label) = match &branch.class {
                Some(membership) => {
                    let [x, y, z] = membership.label.vec().components();
                    (class_kind(&membership.params), format!("{x:.16e},{y:.16e},{z:.16e}"))
                }
                None => ("", String::from(",,")),
            };
            let [ex, ey, ez] = branch.epistemic.components();
            out.push_str(&format!(
                "{},{:.16e},{},{},{:.16e},{:.16e},{:.16e}\n",
                history_label(&branch.history),
                branch.probability,
                kind,
                label,
                ex,
                ey,
                ez,
            ));
        }
        out
    }
}

fn class_kind(params: &ClassMemberParams) -> &'static str {
    match params {
        ClassMemberParams::Generic { .. } => "generic",
        ClassMemberParams::PoleGhost { .. } => "pole-ghost",
        ClassMemberParams::PoleEmpty { .. } => "pole-empty",
    }
}

impl Serialize for Branch {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct ClassView {
            label: [f64; 3],
            kind: &'static str,
            #[serde(skip_serializing_if = "Option::is_none")]
            alpha: Option<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            beta: Option<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            gamma: Option<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            vec: Option<[f64; 3]>,
        }

        let class = self.class.as_ref().map(|membership| {
            let mut view = ClassView {
                label: membership.label.vec().components(),
                kind: class_kind(&membership.params),
                alpha: None,
                beta: None,
                gamma: None,
                vec: None,
            };
            match membership.params {
                ClassMemberParams::Generic { alpha, beta } => {
                    view.alpha = Some(alpha);
                    view.beta = Some(beta);
                }
                ClassMemberParams::PoleGhost { gamma } => view.gamma = Some(gamma),
                ClassMemberParams::PoleEmpty { vec } => view.vec = Some(vec.components()),
            }
            view
        });

        let mut record = serializer.serialize_struct("Branch", 5)?;
        record.serialize_field("history", &history_label(&self.history))?;
        record.serialize_field("probability", &self.probability)?;
        record.serialize_field("final_state", &self.final_state)?;
        record.serialize_field("class", &class)?;
        record.serialize_field("epistemic", &self.epistemic.components())?;
        record.end()
    }
}

impl Serialize for BranchTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut record = serializer.serialize_struct("BranchTree", 2)?;
        record.serialize_field("branches", &self.branches)?;
        record.serialize_field("selection_probability", &self.selection_probability)?;
        record.end()
    }
}

/// Run the exact ontic push-forward over every outcome branch.
pub fn run_exact(circuit: &Circuit) -> Result<BranchTree, HarnessError> {
    let (leaves, selection_probability) = walk::<OnticBackend>(circuit)?;
    let branches = leaves
        .into_iter()
        .map(|leaf| {
            let class = identify_class(&leaf.state);
            let epistemic = epistemic_vector(&leaf.state);
            Branch {
                history: leaf.history,
                probability: leaf.probability,
                final_state: leaf.state,
                class,
                epistemic,
            }
        })
        .collect();
    Ok(BranchTree { branches, selection_probability })
}

/// Tallied Monte Carlo counts for one circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleReport {
    /// Retained shots per outcome history.
    pub counts: BTreeMap<History, u64>,
    pub shots: u64,
    /// Shots thrown away by a failed `SELECT`.
    pub discarded: u64,
    pub seed: u64,
}

impl SampleReport {
    pub fn retained(&self) -> u64 {
        self.shots - self.discarded
    }

    pub fn count_of(&self, history: &History) -> u64 {
        self.counts.get(history).copied().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sample report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("history,count\n");
        for (history, count) in &self.counts {
            out.push_str(&format!("{},{count}\n", history_label(history)));
        }
        out.push_str(&format!("(discarded),{}\n", self.discarded));
        out
    }
}

impl Serialize for SampleReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let counts: BTreeMap<String, u64> =
            self.counts.iter().map(|(h, n)| (history_label(h), *n)).collect();
        let mut record = serializer.serialize_struct("SampleReport", 4)?;
        record.serialize_field("shots", &self.shots)?;
        record.serialize_field("discarded", &self.discarded)?;
        record.serialize_field("seed", &self.seed)?;
        record.serialize_field("counts", &counts)?;
        record.end()
    }
}

fn draw_initial<R: Rng + ?Sized>(init: &Init, rng: &mut R) -> OnticState {
    match init {
        Init::Path(path) => OnticState::new(*path, UnitVec3::Z, Companion::Empty),
        Init::Distribution(dist) => {
            let mut remaining = rng.random::<f64>() * dist.total_weight();
            for (weight, state) in dist.iter() {
                remaining -= weight;
                if remaining <= 0.0 {
                    return *state;
                }
            }
            dist.entries().last().expect("distribution has support").1
        }
    }
}

/// Simulate one shot; `None` means a `SELECT` discarded it.
fn sample_shot<R: Rng + ?Sized>(circuit: &Circuit, rng: &mut R) -> Option<History> {
    let mut state = draw_initial(&circuit.init, rng);
    let mut history = History::new();
    for step in &circuit.steps {
        match step {
            Step::Gate(gate) => {
                let (located, next) = sample_gate(&state, gate, rng);
                state = next;
                if let Some(path) = located {
                    history.push(OutcomeEvent::for_gate(gate, path));
                }
            }
            Step::Measure => {
                let gate = GateSpec::DetectorPair;
                let (located, next) = sample_gate(&state, &gate, rng);
                state = next;
                let path = located.expect("paired detectors locate the particle");
                history.push(OutcomeEvent::for_gate(&gate, path));
            }
            Step::Select { path, required } => {
                let keep = matches!(history.last(),
                    Some(event) if event.matches_selection(*path, *required));
                if !keep {
                    return None;
                }
            }
        }
    }
    Some(history)
}

fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

type Tally = (BTreeMap<History, u64>, u64);

fn merge_tallies(mut left: Tally, right: Tally) -> Tally {
    for (history, count) in right.0 {
        *left.0.entry(history).or_insert(0) += count;
    }
    left.1 += right.1;
    left
}

fn tally_shot(mut tally: Tally, outcome: Option<History>) -> Tally {
    match outcome {
        Some(history) => *tally.0.entry(history).or_insert(0) += 1,
        None => tally.1 += 1,
    }
    tally
}

/// Sample the circuit `shots` times, fanning shots out across threads. Each
/// shot draws from its own RNG stream derived from `(seed, shot index)`, so
/// the counts match [`run_sample_serial`] exactly.
pub fn run_sample(circuit: &Circuit, shots: u64, seed: u64) -> Result<SampleReport, HarnessError> {
    circuit.validate()?;
    let (counts, discarded) = (0..shots)
        .into_par_iter()
        .map(|shot| sample_shot(circuit, &mut shot_rng(seed, shot)))
        .fold(|| (BTreeMap::new(), 0), tally_shot)
        .reduce(|| (BTreeMap::new(), 0), merge_tallies);
    Ok(SampleReport { counts, shots, discarded, seed })
}

/// Single-threaded variant of [`run_sample`] with identical output.
pub fn run_sample_serial(
    circuit: &Circuit,
    shots: u64,
    seed: u64,
) -> Result<SampleReport, HarnessError> {
    circuit.validate()?;
    let (counts, discarded) = (0..shots)
        .map(|shot| sample_shot(circuit, &mut shot_rng(seed, shot)))
        .fold((BTreeMap::new(), 0), tally_shot);
    Ok(SampleReport { counts, shots, discarded, seed })
}

/// Options for [`compare`].
#[derive(Debug, Clone, Copy)]
pub struct CompareOptions {
    /// Monte Carlo shots; `None` skips sampling.
    pub shots: Option<u64>,
    pub seed: u64,
    /// Agreement tolerance on exact probabilities.
    pub tol: f64,
}

impl Default for CompareOptions {
    fn default() -> CompareOptions {
        CompareOptions { shots: None, seed: 0, tol: DEFAULT_TOL }
    }
}

/// One history row of a comparison report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub history: String,
    pub exact_p: f64,
    pub class_p: f64,
    pub quantum_p: f64,
    pub counts: Option<u64>,
    pub sigma: Option<f64>,
    pub verdict: String,
}

/// Comparison of the three exact backends, optionally against Monte Carlo.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
    pub passed: bool,
    /// The first divergent history and what diverged, when `passed` is false.
    pub failure: Option<String>,
    pub selection_probability: f64,
    pub shots: Option<u64>,
    pub retained: Option<u64>,
    pub discarded: Option<u64>,
    pub seed: Option<u64>,
    pub tol: f64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("history,exact_p,class_p,quantum_p,counts,sigma,verdict\n");
        for row in &self.rows {
            let counts = row.counts.map(|c| c.to_string()).unwrap_or_default();
            let sigma = row.sigma.map(|s| format!("{s:.16e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{counts},{sigma},{}\n",
                row.history, row.exact_p, row.class_p, row.quantum_p, row.verdict,
            ));
        }
        out
    }

    pub fn row(&self, history: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|row| row.history == history)
    }
}

fn build_report(
    exact: &BTreeMap<History, f64>,
    class: &BTreeMap<History, f64>,
    quantum: &BTreeMap<History, f64>,
    selection_probability: f64,
    sample: Option<&SampleReport>,
    tol: f64,
) -> RunReport {
    let mut histories: BTreeSet<&History> = BTreeSet::new();
    histories.extend(exact.keys());
    histories.extend(class.keys());
    histories.extend(quantum.keys());
    if let Some(sample) = sample {
        histories.extend(sample.counts.keys());
    }

    let retained_shots = sample.map(SampleReport::retained);
    let mut rows = Vec::with_capacity(histories.len());
    let mut failure: Option<String> = None;

    for history in histories {
        let label = history_label(history);
        let exact_p = exact.get(history).copied().unwrap_or(0.0);
        let class_p = class.get(history).copied().unwrap_or(0.0);
        let quantum_p = quantum.get(history).copied().unwrap_or(0.0);

        let mut problem: Option<String> = None;
        if (exact_p - class_p).abs() > tol {
            problem = Some(format!(
                "class backend deviates by {:.3e}",
                (exact_p - class_p).abs()
            ));
        } else if (exact_p - quantum_p).abs() > tol {
            problem = Some(format!(
                "quantum backend deviates by {:.3e}",
                (exact_p - quantum_p).abs()
            ));
        }

        let mut counts = None;
        let mut sigma = None;
        if let (Some(sample), Some(retained)) = (sample, retained_shots) {
            let observed = sample.count_of(history);
            let expected = exact_p * retained as f64;
            let band = (retained as f64 * exact_p * (1.0 - exact_p)).sqrt();
            counts = Some(observed);
            sigma = Some(band);
            if problem.is_none() && (observed as f64 - expected).abs() > SIGMA_BAND * band {
                problem = Some(format!(
                    "count {observed} outside {SIGMA_BAND} sigma of expected {expected:.3}"
                ));
            }
        }

        let verdict = if problem.is_none() { "PASS" } else { "FAIL" };
        if let Some(message) = problem {
            if failure.is_none() {
                failure = Some(format!("history {label}: {message}"));
            }
        }
        rows.push(ReportRow {
            history: label,
            exact_p,
            class_p,
            quantum_p,
            counts,
            sigma,
            verdict: verdict.to_string(),
        });
    }

    RunReport {
        rows,
        passed: failure.is_none(),
        failure,
        selection_probability,
        shots: sample.map(|s| s.shots),
        retained: retained_shots,
        discarded: sample.map(|s| s.discarded),
        seed: sample.map(|s| s.seed),
        tol,
    }
}

/// Run all three exact backends (and Monte Carlo when `shots` is set) and
/// check they agree on every history.
pub fn compare(circuit: &Circuit, options: &CompareOptions) -> Result<RunReport, HarnessError> {
    let tree = run_exact(circuit)?;
    let mut exact = BTreeMap::new();
    for branch in &tree.branches {
        *exact.entry(branch.history.clone()).or_insert(0.0) += branch.probability;
    }
    let (class, _) = class_histories(circuit)?;
    let (quantum, _) = quantum_histories(circuit)?;
    let sample = match options.shots {
        Some(shots) => Some(run_sample(circuit, shots, options.seed)?),
        None => None,
    };
    Ok(build_report(
        &exact,
        &class,
        &quantum,
        tree.selection_probability,
        sample.as_ref(),
        options.tol,
    ))
}

/// One branch row of a class-calculus trace snapshot.
#[derive(Debug, Clone, Serialize)]
pub struct TraceBranch {
    pub history: String,
    pub probability: f64,
    pub vector: [f64; 3],
}

/// The calculus state after one circuit step.
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub label: String,
    pub branches: Vec<TraceBranch>,
}

fn step_label(step: &Step) -> String {
    match step {
        Step::Gate(GateSpec::PhaseShifter { path, omega }) => format!("PS {path} {omega:.6}"),
        Step::Gate(GateSpec::BeamSplitter { xi }) => format!("BS {xi:.6}"),
        Step::Gate(GateSpec::Detector { path }) => format!("DET {path}"),
        Step::Gate(GateSpec::DetectorPair) | Step::Measure => "MEASURE".to_string(),
        Step::Select { path, required } => format!("SELECT {path} {required}"),
    }
}

/// Step-by-step evolution of the class label through the circuit. Branch
/// probabilities are conditioned on the selections seen so far.
pub fn class_trace(circuit: &Circuit) -> Result<Vec<TraceStep>, HarnessError> {
    let mut trace = Vec::with_capacity(circuit.steps.len() + 1);
    let snapshot = |label: String, leaves: &[Leaf<BallVec>], trace: &mut Vec<TraceStep>| {
        let total: f64 = leaves.iter().map(|l| l.probability).sum();
        let scale = if total > 0.0 { 1.0 / total } else { 0.0 };
        let branches = leaves
            .iter()
            .map(|leaf| TraceBranch {
                history: history_label(&leaf.history),
                probability: leaf.probability * scale,
                vector: leaf.state.components(),
            })
            .collect();
        trace.push(TraceStep { label, branches });
    };

    let start = Leaf {
        history: History::new(),
        probability: 1.0,
        state: ClassBackend::start(&circuit.init),
    };
    let init_label = match &circuit.init {
        Init::Path(path) => format!("INIT {path}"),
        Init::Distribution(_) => "INIT (ensemble)".to_string(),
    };
    snapshot(init_label, std::slice::from_ref(&start), &mut trace);
    walk_with::<ClassBackend>(circuit, |step, leaves| {
        snapshot(step_label(step), leaves, &mut trace);
    })?;
    Ok(trace)
}

/// Generate a random circuit: uniform angles, up to `max_gates` gates of
/// which at most `max_mid_detectors` are mid-circuit detectors, ending in a
/// paired measurement.
pub fn random_circuit<R: Rng + ?Sized>(
    rng: &mut R,
    max_gates: usize,
    max_mid_detectors: usize,
) -> Circuit {
    use std::f64::consts::TAU;

    let detectors = rng.random_range(0..=max_mid_detectors);
    let unitaries = rng.random_range(0..=max_gates.saturating_sub(detectors));
    let mut steps: Vec<Step> = Vec::with_capacity(unitaries + detectors + 1);
    for _ in 0..unitaries {
        if rng.random_bool(0.5) {
            steps.push(Step::Gate(GateSpec::BeamSplitter { xi: rng.random_range(0.0..TAU) }));
        } else {
            steps.push(Step::Gate(GateSpec::PhaseShifter {
                path: random_path(rng),
                omega: rng.random_range(0.0..TAU),
            }));
        }
    }
    for _ in 0..detectors {
        let position = rng.random_range(0..=steps.len());
        steps.insert(position, Step::Gate(GateSpec::Detector { path: random_path(rng) }));
    }
    steps.push(Step::Measure);
    Circuit { init: Init::Path(random_path(rng)), steps }
}

fn random_path<R: Rng + ?Sized>(rng: &mut R) -> Path {
    if rng.random_bool(0.5) {
        Path::P0
    } else {
        Path::P1
    }
}

/// The bundled demonstration circuits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Demo {
    /// Balanced interferometer: two half-turn splitters route the particle
    /// to detector 1 with certainty.
    Mz,
    /// The same interferometer with a half-turn phase plate in path 0,
    /// routing the particle to detector 0 instead.
    MzPhase,
    /// A detector between the splitters erases the interference, giving
    /// four equally likely outcome histories.
    MzDetector,
}

impl Demo {
    pub const ALL: [Demo; 3] = [Demo::Mz, Demo::MzPhase, Demo::MzDetector];

    pub fn name(self) -> &'static str {
        match self {
            Demo::Mz => "mz",
            Demo::MzPhase => "mz-phase",
            Demo::MzDetector => "mz-detector",
        }
    }

    pub fn from_name(name: &str) -> Option<Demo> {
        Demo::ALL.into_iter().find(|demo| demo.name() == name)
    }

    pub fn circuit(self) -> Circuit {
        use std::f64::consts::{FRAC_PI_2, PI};

        let splitter = Step::Gate(GateSpec::BeamSplitter { xi: FRAC_PI_2 });
        let steps = match self {
            Demo::Mz => vec![splitter.clone(), splitter, Step::Measure],
            Demo::MzPhase => vec![
                splitter.clone(),
                Step::Gate(GateSpec::PhaseShifter { path: Path::P0, omega: PI }),
                splitter,
                Step::Measure,
            ],
            Demo::MzDetector => vec![
                splitter.clone(),
                Step::Gate(GateSpec::Detector { path: Path::P0 }),
                splitter,
                Step::Measure,
            ],
        };
        Circuit { init: Init::Path(Path::P0), steps }
    }
}
