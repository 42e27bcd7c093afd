//! Acceptance suite. Each test checks one numbered criterion end to end and
//! prints a single PASS line (visible with `--nocapture`).

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ghostpath::circuit::{prepare_empty, prepare_protocol, Circuit, Init, Step};
use ghostpath::classes::{
    class_member, class_transform, epistemic_vector, BallVec, ClassLabel, ClassMemberParams,
    ClassTransform,
};
use ghostpath::gates::{
    apply_detector, apply_detector_pair, apply_phase_shifter, push_forward, Detection, GateSpec,
    PushForward,
};
use ghostpath::geometry::{normalize_angle, Spherical, UnitVec3};
use ghostpath::harness::{
    class_histories, compare, quantum_histories, run_exact, run_sample, run_sample_serial,
    CompareOptions, Demo, History, OutcomeEvent, SIGMA_BAND,
};
use ghostpath::ontic::{Companion, OnticState, Path, WeightedStates};

fn pair_history(clicked: Path) -> History {
    vec![OutcomeEvent::Pair { clicked }]
}

fn exact_table(circuit: &Circuit) -> BTreeMap<History, f64> {
    let tree = run_exact(circuit).expect("circuit runs");
    let mut table = BTreeMap::new();
    for branch in &tree.branches {
        *table.entry(branch.history.clone()).or_insert(0.0) += branch.probability;
    }
    table
}

/// A unit vector drawn uniformly, rejecting the polar band where generic
/// class members are undefined.
fn random_label<R: Rng + ?Sized>(rng: &mut R) -> UnitVec3 {
    loop {
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..TAU);
        if z.abs() < 0.999 {
            let s = (1.0 - z * z).sqrt();
            return UnitVec3::new(s * phi.cos(), s * phi.sin(), z).unwrap();
        }
    }
}

#[test]
fn criterion_1_balanced_interferometer() {
    let started = Instant::now();
    let circuit = Demo::Mz.circuit();
    let wanted = pair_history(Path::P1);

    let exact = exact_table(&circuit);
    assert!((exact[&wanted] - 1.0).abs() < 1e-12, "ontic backend off: {exact:?}");
    let (class, _) = class_histories(&circuit).unwrap();
    assert!((class[&wanted] - 1.0).abs() < 1e-12, "class backend off: {class:?}");
    let (quantum, _) = quantum_histories(&circuit).unwrap();
    assert!((quantum[&wanted] - 1.0).abs() < 1e-12, "quantum backend off: {quantum:?}");

    let shots = 100_000;
    let report = run_sample(&circuit, shots, 1).unwrap();
    assert_eq!(report.count_of(&wanted), shots, "a shot missed detector 1");
    assert_eq!(report.discarded, 0);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "criterion 1 PASS: balanced interferometer puts every run on detector 1 \
         (exact on 3 backends within 1e-12, {shots} shots all D1, {elapsed:?})"
    );
}

#[test]
fn criterion_2_phase_shifted_interferometer() {
    let circuit = Demo::MzPhase.circuit();
    let wanted = pair_history(Path::P0);

    let exact = exact_table(&circuit);
    assert!((exact[&wanted] - 1.0).abs() < 1e-12, "ontic backend off: {exact:?}");
    let (class, _) = class_histories(&circuit).unwrap();
    assert!((class[&wanted] - 1.0).abs() < 1e-12, "class backend off: {class:?}");
    let (quantum, _) = quantum_histories(&circuit).unwrap();
    assert!((quantum[&wanted] - 1.0).abs() < 1e-12, "quantum backend off: {quantum:?}");

    println!(
        "criterion 2 PASS: half-turn phase plate reroutes every run to detector 0 \
         (exact on 3 backends within 1e-12)"
    );
}

#[test]
fn criterion_3_mid_circuit_detector() {
    let circuit = Demo::MzDetector.circuit();
    let tree = run_exact(&circuit).unwrap();
    assert_eq!(tree.branches.len(), 4, "expected four outcome histories");
    for branch in &tree.branches {
        assert!(
            (branch.probability - 0.25).abs() < 1e-12,
            "history {:?} has probability {}",
            branch.history,
            branch.probability
        );
    }
    let marginal: f64 = tree
        .branches
        .iter()
        .filter(|b| b.history.last() == Some(&OutcomeEvent::Pair { clicked: Path::P0 }))
        .map(|b| b.probability)
        .sum();
    assert!((marginal - 0.5).abs() < 1e-12, "final-detector marginal {marginal}");

    let shots = 100_000u64;
    let report = run_sample(&circuit, shots, 2).unwrap();
    for branch in &tree.branches {
        let observed = report.count_of(&branch.history) as f64;
        let expected = branch.probability * shots as f64;
        let sigma = (shots as f64 * branch.probability * (1.0 - branch.probability)).sqrt();
        assert!(
            (observed - expected).abs() <= SIGMA_BAND * sigma,
            "history {:?}: {observed} vs {expected} (sigma {sigma})",
            branch.history
        );
    }

    println!(
        "criterion 3 PASS: mid-circuit detector yields four histories at 1/4 each, \
         marginal 1/2, and {shots} shots inside 5 sigma"
    );
}

#[test]
fn criterion_4_randomized_equivalence() {
    let started = Instant::now();
    let circuits = 100;
    let shots = 100_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_818);
    for index in 0..circuits {
        let circuit = ghostpath::harness::random_circuit(&mut rng, 10, 2);
        let options =
            CompareOptions { shots: Some(shots), seed: 1_000 + index, tol: 1e-9 };
        let report = compare(&circuit, &options).unwrap();
        assert!(
            report.passed,
            "circuit {index} diverged: {:?}\n{}",
            report.failure,
            circuit.serialize().unwrap_or_default()
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "criterion 4 PASS: {circuits} random circuits agree across 3 backends within 1e-9 \
         and {shots}-shot Monte Carlo stays inside 5 sigma ({elapsed:?})"
    );
}

/// Closed-form image of a generic class member under each gate, derived by
/// hand from the local gate actions.
fn predicted_unitary(
    label: &UnitVec3,
    alpha: f64,
    beta: f64,
    gate: &GateSpec,
) -> (UnitVec3, ClassMemberParams) {
    match gate {
        GateSpec::PhaseShifter { path: Path::P0, omega } => (
            label.rotate_z(-omega),
            ClassMemberParams::Generic { alpha, beta: normalize_angle(beta + omega) },
        ),
        GateSpec::PhaseShifter { path: Path::P1, omega } => (
            label.rotate_z(*omega),
            ClassMemberParams::Generic { alpha: normalize_angle(alpha - omega), beta },
        ),
        GateSpec::BeamSplitter { xi } => (
            label.rotate_x(*xi),
            ClassMemberParams::Generic { alpha: 0.0, beta: 0.0 },
        ),
        other => unreachable!("{other} is not unitary"),
    }
}

#[test]
fn criterion_5_gate_action_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let members = 1_000;
    for _ in 0..members {
        let label = random_label(&mut rng);
        let alpha = rng.random_range(0.0..TAU);
        let beta = rng.random_range(0.0..TAU);
        let class_label = ClassLabel::new(label);
        let member =
            class_member(&class_label, &ClassMemberParams::Generic { alpha, beta }).unwrap();

        let unitaries = [
            GateSpec::PhaseShifter { path: Path::P0, omega: rng.random_range(0.0..TAU) },
            GateSpec::PhaseShifter { path: Path::P1, omega: rng.random_range(0.0..TAU) },
            GateSpec::BeamSplitter { xi: rng.random_range(0.0..TAU) },
        ];
        for gate in &unitaries {
            let (new_label, params) = predicted_unitary(&label, alpha, beta, gate);
            if new_label.z().abs() > 0.999 {
                continue;
            }
            let expected = class_member(&ClassLabel::new(new_label), &params).unwrap();
            let evolved = push_forward(&member, gate).into_evolved().unwrap();
            assert!(
                evolved.approx_eq(&expected, 1e-9),
                "{gate}: evolved {evolved:?}\nexpected {expected:?}"
            );
            match class_transform(&class_label, gate) {
                ClassTransform::Rotated(rotated) => {
                    assert!(rotated.vec().approx_eq(&new_label), "{gate} label mismatch")
                }
                ClassTransform::Measured(_) => unreachable!(),
            }
        }

        let p_zero = (1.0 + label.z()) / 2.0;
        let detections = [
            (
                GateSpec::Detector { path: Path::P0 },
                OnticState::new(Path::P0, UnitVec3::Z, Companion::Ghost(alpha)),
                OnticState::new(
                    Path::P1,
                    -label.rotate_z(beta),
                    Companion::Empty,
                ),
            ),
            (
                GateSpec::Detector { path: Path::P1 },
                OnticState::new(Path::P0, label.rotate_z(alpha), Companion::Empty),
                OnticState::new(Path::P1, UnitVec3::Z, Companion::Ghost(beta)),
            ),
            (
                GateSpec::DetectorPair,
                OnticState::new(Path::P0, UnitVec3::Z, Companion::Empty),
                OnticState::new(Path::P1, UnitVec3::Z, Companion::Empty),
            ),
        ];
        for (gate, found_in_zero, found_in_one) in &detections {
            let PushForward::Measured(branches) = push_forward(&member, gate) else {
                unreachable!()
            };
            assert_eq!(branches.len(), 2);
            for branch in &branches {
                let (expected_p, expected_state) = match branch.real_path {
                    Path::P0 => (p_zero, found_in_zero),
                    Path::P1 => (1.0 - p_zero, found_in_one),
                };
                assert!(
                    (branch.probability - expected_p).abs() < 1e-9,
                    "{gate}: branch probability {} vs {expected_p}",
                    branch.probability
                );
                let expected = WeightedStates::delta(*expected_state);
                assert!(
                    branch.conditional.approx_eq(&expected, 1e-9),
                    "{gate}: conditional {:?}\nexpected {expected:?}",
                    branch.conditional
                );
            }
            let ClassTransform::Measured(measured) = class_transform(&class_label, gate) else {
                unreachable!()
            };
            for outcome in measured {
                let expected_p = match outcome.real_path {
                    Path::P0 => p_zero,
                    Path::P1 => 1.0 - p_zero,
                };
                assert!((outcome.probability - expected_p).abs() < 1e-9);
            }
        }
    }
    println!(
        "criterion 5 PASS: {members} random class members match the closed-form gate \
         actions within 1e-9 for phase shifters, splitters, and detectors"
    );
}

#[test]
fn criterion_6_preparation_completeness() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let targets = 500;
    for _ in 0..targets {
        let label = ClassLabel::new(random_label(&mut rng));
        let alpha = rng.random_range(0.0..TAU);
        let beta = rng.random_range(0.0..TAU);
        let circuit = prepare_protocol(&label, alpha, beta);
        let tree = run_exact(&circuit).unwrap();
        assert_eq!(tree.branches.len(), 1);
        let expected =
            class_member(&label, &ClassMemberParams::Generic { alpha, beta }).unwrap();
        assert!(
            tree.branches[0].final_state.approx_eq(&expected, 1e-9),
            "prepared {:?}\nexpected {expected:?}",
            tree.branches[0].final_state
        );
    }

    let empties = 200;
    for index in 0..empties {
        let path = if index % 2 == 0 { Path::P0 } else { Path::P1 };
        let theta = rng.random_range(0.0..PI - 0.01);
        let phi = rng.random_range(0.0..TAU);
        let target = UnitVec3::from_spherical(Spherical::new(theta, phi));
        let circuit = prepare_empty(path, &target).unwrap();
        let tree = run_exact(&circuit).unwrap();
        let success = (1.0 + target.z()) / 2.0;
        assert!(
            (tree.selection_probability - success).abs() < 1e-9,
            "success probability {} vs {success}",
            tree.selection_probability
        );
        assert_eq!(tree.branches.len(), 1);
        let expected =
            WeightedStates::delta(OnticState::new(path, target, Companion::Empty));
        assert!(
            tree.branches[0].final_state.approx_eq(&expected, 1e-9),
            "prepared {:?}\nexpected {expected:?}",
            tree.branches[0].final_state
        );
    }

    println!(
        "criterion 6 PASS: {targets} class-member preparations and {empties} empty-path \
         preparations land on their targets within 1e-9 with the predicted success rates"
    );
}

#[test]
fn criterion_7_decomposition_independence() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mixtures = 200;
    for _ in 0..mixtures {
        let axis = random_label(&mut rng);
        let radius: f64 = rng.random_range(0.0..1.0);
        let ball = BallVec::new(
            radius * axis.x(),
            radius * axis.y(),
            radius * axis.z(),
        )
        .unwrap();

        // First decomposition: antipodal pair along the axis, each class
        // split again over two ghost-phase choices.
        let up = ClassLabel::new(axis);
        let down = ClassLabel::new(-axis);
        let w_up = (1.0 + radius) / 2.0;
        let split: f64 = rng.random_range(0.1..0.9);
        let generic = |rng: &mut ChaCha8Rng| ClassMemberParams::Generic {
            alpha: rng.random_range(0.0..TAU),
            beta: rng.random_range(0.0..TAU),
        };
        let first = WeightedStates::mix(&[
            (w_up * split, class_member(&up, &generic(&mut rng)).unwrap()),
            (w_up * (1.0 - split), class_member(&up, &generic(&mut rng)).unwrap()),
            ((1.0 - w_up) * split, class_member(&down, &generic(&mut rng)).unwrap()),
            ((1.0 - w_up) * (1.0 - split), class_member(&down, &generic(&mut rng)).unwrap()),
        ])
        .unwrap();

        // Second decomposition: a random chord of the unit sphere through
        // the same ball vector.
        let (end_a, end_b, weight_a) = loop {
            let direction = random_label(&mut rng);
            let along = ball.x() * direction.x()
                + ball.y() * direction.y()
                + ball.z() * direction.z();
            let reach = (along * along + 1.0 - radius * radius).sqrt();
            let t_plus = -along + reach;
            let t_minus = -along - reach;
            let end = |t: f64| {
                UnitVec3::new(
                    ball.x() + t * direction.x(),
                    ball.y() + t * direction.y(),
                    ball.z() + t * direction.z(),
                )
                .unwrap()
            };
            let a = end(t_plus);
            let b = end(t_minus);
            if a.z().abs() < 0.999 && b.z().abs() < 0.999 {
                break (a, b, t_minus / (t_minus - t_plus));
            }
        };
        let second = WeightedStates::mix(&[
            (
                weight_a,
                class_member(&ClassLabel::new(end_a), &generic(&mut rng)).unwrap(),
            ),
            (
                1.0 - weight_a,
                class_member(&ClassLabel::new(end_b), &generic(&mut rng)).unwrap(),
            ),
        ])
        .unwrap();

        let from_first = epistemic_vector(&first);
        let from_second = epistemic_vector(&second);
        assert!(
            from_first.approx_eq(&ball) && from_second.approx_eq(&ball),
            "decompositions of {ball:?} yield {from_first:?} and {from_second:?}"
        );
        for (a, b) in from_first.components().iter().zip(from_second.components()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
    println!(
        "criterion 7 PASS: {mixtures} mixtures assembled two ways yield identical \
         epistemic vectors within 1e-9"
    );
}

#[test]
fn criterion_8_locality_suite() {
    let mut directions = Vec::new();
    for x in -1i8..=1 {
        for y in -1i8..=1 {
            for z in -1i8..=1 {
                if (x, y, z) != (0, 0, 0) {
                    directions
                        .push(UnitVec3::new(f64::from(x), f64::from(y), f64::from(z)).unwrap());
                }
            }
        }
    }
    assert_eq!(directions.len(), 26);
    let phases: Vec<f64> = (0..8).map(|k| f64::from(k) * PI / 4.0).collect();
    let omegas = [0.3, FRAC_PI_2, PI, 4.0, 5.9];

    let mut companions: Vec<Companion> =
        phases.iter().map(|p| Companion::Ghost(*p)).collect();
    companions.push(Companion::Empty);

    let mut states = Vec::new();
    for path in Path::BOTH {
        for vec in &directions {
            for companion in &companions {
                states.push(OnticState::new(path, *vec, *companion));
            }
        }
    }

    let mut checks = 0u64;
    let mut violations = 0u64;
    for state in &states {
        for acting_on in Path::BOTH {
            let untouched = acting_on.other();
            let before = state.content(untouched);

            for omega in omegas {
                let after = apply_phase_shifter(state, acting_on, omega);
                checks += 1;
                if !before.approx_eq(&after.content(untouched)) {
                    violations += 1;
                }
            }

            let (_, after) = apply_detector(state, acting_on);
            checks += 1;
            if !before.approx_eq(&after.content(untouched)) {
                violations += 1;
            }
        }

        // Repeatability: a second look gives the same outcome and state.
        for watched in Path::BOTH {
            let (first, once) = apply_detector(state, watched);
            let (second, twice) = apply_detector(&once, watched);
            checks += 1;
            if first.detection != second.detection || !once.approx_eq(&twice) {
                violations += 1;
            }
        }

        // Paired detectors are anti-correlated: exactly one click.
        let (outcomes, _) = apply_detector_pair(state);
        checks += 1;
        if outcomes.iter().filter(|o| o.detection == Detection::Click).count() != 1 {
            violations += 1;
        }
    }

    assert_eq!(violations, 0, "{violations} of {checks} locality checks failed");
    println!(
        "criterion 8 PASS: {checks} locality, repeatability, and anti-correlation checks \
         across the state grid with zero violations"
    );
}

#[test]
fn criterion_9_seed_determinism() {
    let mut circuit =
        prepare_empty(Path::P1, &UnitVec3::from_spherical(Spherical::new(1.9, 0.7))).unwrap();
    circuit.steps.push(Step::Gate(GateSpec::BeamSplitter { xi: 1.1 }));
    circuit.steps.push(Step::Measure);
    assert!(matches!(circuit.init, Init::Path(_)));

    let shots = 50_000u64;
    let seed = 99;
    let parallel = run_sample(&circuit, shots, seed).unwrap();
    let serial = run_sample_serial(&circuit, shots, seed).unwrap();
    assert_eq!(parallel, serial, "parallel and serial counts differ");

    let options = CompareOptions { shots: Some(shots), seed, ..Default::default() };
    let first = compare(&circuit, &options).unwrap();
    let second = compare(&circuit, &options).unwrap();
    assert_eq!(first.to_json(), second.to_json(), "repeated reports differ");
    assert!(first.passed, "{:?}", first.failure);

    println!(
        "criterion 9 PASS: identical reports for the same circuit, shots, and seed across \
         serial and parallel execution"
    );
}
