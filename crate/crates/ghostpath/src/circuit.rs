//! Circuit IR, the text format, and state preparation protocols.
//!
//! Circuits are line-oriented programs over the gate set:
//!
//! ```text
//! # comment (also allowed after a directive)
//! INIT 0              # send the particle into path 0 or 1; must come first
//! PS <path> <angle>   # phase shifter
//! BS <angle>          # beam splitter
//! DET <path>          # single detector, outcome recorded
//! SELECT <path> <CLICK|NOCLICK>   # post-select on the previous detector
//! MEASURE             # paired detectors on both paths
//! ```
//!
//! Keywords are case-insensitive. Angles are radians, written either as
//! literals (`1.5707`, `-2e-3`) or as multiples of pi (`PI`, `-PI/2`,
//! `3PI/4`, `0.5PI`). `SELECT` must immediately follow a `DET` on the same
//! path or a `MEASURE`.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::classes::ClassLabel;
use crate::gates::{apply_detector_pair, Detection, GateSpec};
use crate::geometry::{normalize_angle, UnitVec3};
use crate::ontic::{Path, WeightedStates};

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: SELECT must immediately follow a detector step on its path")]
    MisplacedSelect { line: usize },
    #[error("step {index}: SELECT must immediately follow a detector step on its path")]
    InvalidSelect { index: usize },
    #[error("the circuit never declares INIT")]
    MissingInit,
    #[error("cannot prepare an empty path with the target vector at -z")]
    SouthPoleTarget,
    #[error("a circuit starting from an explicit ensemble has no text form")]
    UnserializableInit,
}

fn syntax(line: usize, message: impl Into<String>) -> CircuitError {
    CircuitError::Syntax { line, message: message.into() }
}

/// One circuit step.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Gate(GateSpec),
    /// Keep only the runs where the previous detector step read `required`
    /// at `path`.
    Select { path: Path, required: Detection },
    /// Paired detectors on both paths.
    Measure,
}

/// Where the run starts.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// A fresh particle sent into the given path.
    Path(Path),
    /// An externally prepared ensemble.
    Distribution(WeightedStates),
}

/// A parsed or programmatically built circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub init: Init,
    pub steps: Vec<Step>,
}

impl Circuit {
    /// Build a circuit, checking that every `SELECT` is legally placed.
    pub fn new(init: Init, steps: Vec<Step>) -> Result<Circuit, CircuitError> {
        let circuit = Circuit { init, steps };
        circuit.validate()?;
        Ok(circuit)
    }

    pub fn from_path(path: Path, steps: Vec<Step>) -> Result<Circuit, CircuitError> {
        Circuit::new(Init::Path(path), steps)
    }

    /// Check the `SELECT` placement rule on an already built circuit.
    pub fn validate(&self) -> Result<(), CircuitError> {
        for (index, step) in self.steps.iter().enumerate() {
            if let Step::Select { path, .. } = step {
                let previous = index.checked_sub(1).map(|i| &self.steps[i]);
                let legal = match previous {
                    Some(Step::Gate(GateSpec::Detector { path: watched })) => watched == path,
                    Some(Step::Measure) => true,
                    _ => false,
                };
                if !legal {
                    return Err(CircuitError::InvalidSelect { index });
                }
            }
        }
        Ok(())
    }

    /// Render the circuit in the text format. Angles are written with 17
    /// significant digits so that parsing the output reproduces the circuit
    /// exactly.
    pub fn serialize(&self) -> Result<String, CircuitError> {
        let path = match &self.init {
            Init::Path(path) => path,
            Init::Distribution(_) => return Err(CircuitError::UnserializableInit),
        };
        let mut out = format!("INIT {path}\n");
        for step in &self.steps {
            match step {
                Step::Gate(GateSpec::PhaseShifter { path, omega }) => {
                    out.push_str(&format!("PS {path} {}\n", format_angle(*omega)));
                }
                Step::Gate(GateSpec::BeamSplitter { xi }) => {
                    out.push_str(&format!("BS {}\n", format_angle(*xi)));
                }
                Step::Gate(GateSpec::Detector { path }) => {
                    out.push_str(&format!("DET {path}\n"));
                }
                Step::Gate(GateSpec::DetectorPair) | Step::Measure => {
                    out.push_str("MEASURE\n");
                }
                Step::Select { path, required } => {
                    out.push_str(&format!("SELECT {path} {required}\n"));
                }
            }
        }
        Ok(out)
    }
}

fn format_angle(angle: f64) -> String {
    format!("{angle:.16e}")
}

/// Parse the text format into a [`Circuit`].
pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
    let mut init: Option<Path> = None;
    let mut steps: Vec<Step> = Vec::new();

    for (number, raw_line) in text.lines().enumerate() {
        let line = number + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let keyword = tokens.next().expect("non-empty line").to_ascii_uppercase();
        let mut args: Vec<&str> = tokens.collect();

        if init.is_none() && keyword != "INIT" {
            return Err(syntax(line, "the first directive must be INIT"));
        }

        match keyword.as_str() {
            "INIT" => {
                if init.is_some() {
                    return Err(syntax(line, "INIT may appear only once"));
                }
                init = Some(parse_path(&mut args, line)?);
            }
            "PS" => {
                let path = parse_path(&mut args, line)?;
                let omega = parse_angle_arg(&mut args, line)?;
                steps.push(Step::Gate(GateSpec::PhaseShifter { path, omega }));
            }
            "BS" => {
                let xi = parse_angle_arg(&mut args, line)?;
                steps.push(Step::Gate(GateSpec::BeamSplitter { xi }));
            }
            "DET" => {
                let path = parse_path(&mut args, line)?;
                steps.push(Step::Gate(GateSpec::Detector { path }));
            }
            "SELECT" => {
                let path = parse_path(&mut args, line)?;
                let required = match args.first().map(|t| t.to_ascii_uppercase()) {
                    Some(ref t) if t == "CLICK" => Detection::Click,
                    Some(ref t) if t == "NOCLICK" => Detection::NoClick,
                    Some(other) => {
                        return Err(syntax(line, format!("expected CLICK or NOCLICK, got '{other}'")))
                    }
                    None => return Err(syntax(line, "SELECT needs a path and CLICK or NOCLICK")),
                };
                args.remove(0);
                let legal = match steps.last() {
                    Some(Step::Gate(GateSpec::Detector { path: watched })) => *watched == path,
                    Some(Step::Measure) => true,
                    _ => false,
                };
                if !legal {
                    return Err(CircuitError::MisplacedSelect { line });
                }
                steps.push(Step::Select { path, required });
            }
            "MEASURE" => steps.push(Step::Measure),
            other => return Err(syntax(line, format!("unknown directive '{other}'"))),
        }

        if let Some(extra) = args.first() {
            return Err(syntax(line, format!("unexpected token '{extra}'")));
        }
    }

    let init = init.ok_or(CircuitError::MissingInit)?;
    Ok(Circuit { init: Init::Path(init), steps })
}

fn parse_path(args: &mut Vec<&str>, line: usize) -> Result<Path, CircuitError> {
    if args.is_empty() {
        return Err(syntax(line, "expected a path (0 or 1)"));
    }
    let token = args.remove(0);
    match token {
        "0" => Ok(Path::P0),
        "1" => Ok(Path::P1),
        other => Err(syntax(line, format!("expected a path (0 or 1), got '{other}'"))),
    }
}

fn parse_angle_arg(args: &mut Vec<&str>, line: usize) -> Result<f64, CircuitError> {
    if args.is_empty() {
        return Err(syntax(line, "expected an angle"));
    }
    let token = args.remove(0);
    parse_angle(token).ok_or_else(|| syntax(line, format!("expected an angle, got '{token}'")))
}

/// Parse an angle literal: a float in radians, or a multiple of pi such as
/// `PI`, `-PI/2`, `3PI/4`, `0.5PI`.
pub fn parse_angle(token: &str) -> Option<f64> {
    if let Ok(value) = token.parse::<f64>() {
        return value.is_finite().then_some(value);
    }
    let upper = token.to_ascii_uppercase();
    let (sign, rest) = match upper.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, upper.strip_prefix('+').unwrap_or(&upper)),
    };
    let (pi_part, divisor) = match rest.split_once('/') {
        Some((head, tail)) => {
            let divisor = tail.parse::<f64>().ok()?;
            if divisor == 0.0 || !divisor.is_finite() {
                return None;
            }
            (head, divisor)
        }
        None => (rest, 1.0),
    };
    let coefficient = match pi_part.strip_suffix("PI")? {
        "" => 1.0,
        number => number.parse::<f64>().ok()?,
    };
    if !coefficient.is_finite() {
        return None;
    }
    Some(sign * coefficient * PI / divisor)
}

/// Emit a circuit that drives the fresh path-0 input onto the class member
/// with label `target` and ghost phases `(alpha, beta)`.
///
/// The label is reached by tilting the pole down and swinging it around:
/// with `N' = rotate_z(target, alpha + beta) = (theta', phi')`, the gates
/// `BS(theta')`, `PS 1 (phi' + pi/2)` build the class `[N']`, a transparent
/// `BS(0)` resets both ghost phases to zero, and two final phase plates
/// rotate the label back while dialing in `alpha` and `beta`. Pole targets
/// come out as the corresponding one-point pole members.
pub fn prepare_protocol(target: &ClassLabel, alpha: f64, beta: f64) -> Circuit {
    let aimed = target.vec().rotate_z(alpha + beta).to_spherical();
    let steps = vec![
        Step::Gate(GateSpec::BeamSplitter { xi: aimed.theta }),
        Step::Gate(GateSpec::PhaseShifter {
            path: Path::P1,
            omega: normalize_angle(aimed.phi + FRAC_PI_2),
        }),
        Step::Gate(GateSpec::BeamSplitter { xi: 0.0 }),
        Step::Gate(GateSpec::PhaseShifter { path: Path::P0, omega: normalize_angle(beta) }),
        Step::Gate(GateSpec::PhaseShifter { path: Path::P1, omega: normalize_angle(-alpha) }),
    ];
    Circuit { init: Init::Path(Path::P0), steps }
}

/// Emit a circuit that prepares the one-point state with a real particle in
/// `path` carrying `vec` and nothing in the other path, by post-selecting on
/// a silent detector.
///
/// The success probability is `(1 + vec.z) / 2` either way; the target -z is
/// unreachable and rejected. The splitter tilts the pole to the target's
/// polar angle; a phase plate *on the kept path* swings the kept point's
/// vector to the target azimuth; the detector on the other path then absorbs
/// the ghost from the kept point, and the selection drops the rest.
pub fn prepare_empty(path: Path, vec: &UnitVec3) -> Result<Circuit, CircuitError> {
    if vec.approx_eq(&-UnitVec3::Z) {
        return Err(CircuitError::SouthPoleTarget);
    }
    let spherical = vec.to_spherical();
    let steps = match path {
        Path::P0 => vec![
            Step::Gate(GateSpec::BeamSplitter { xi: spherical.theta }),
            Step::Gate(GateSpec::PhaseShifter {
                path: Path::P0,
                omega: normalize_angle(-(spherical.phi + FRAC_PI_2)),
            }),
            Step::Gate(GateSpec::Detector { path: Path::P1 }),
            Step::Select { path: Path::P1, required: Detection::NoClick },
        ],
        Path::P1 => vec![
            Step::Gate(GateSpec::BeamSplitter { xi: PI - spherical.theta }),
            Step::Gate(GateSpec::PhaseShifter {
                path: Path::P1,
                omega: normalize_angle(spherical.phi - FRAC_PI_2),
            }),
            Step::Gate(GateSpec::Detector { path: Path::P0 }),
            Step::Select { path: Path::P0, required: Detection::NoClick },
        ],
    };
    Ok(Circuit { init: Init::Path(Path::P0), steps })
}

/// One branch of the initialization filter.
#[derive(Debug, Clone)]
pub struct FilteredInit {
    pub clicked: Path,
    pub probability: f64,
    pub conditional: WeightedStates,
}

/// Read an unknown source with paired detectors. Whatever the source, the
/// branch where detector `i` clicked is exactly the fresh input state for
/// path `i`, so this turns any source into a known initializer.
pub fn init_filter(source: &WeightedStates) -> Vec<FilteredInit> {
    let mut branches = Vec::new();
    for outcome_path in Path::BOTH {
        let entries: Vec<_> = source
            .iter()
            .filter(|(_, s)| s.path == outcome_path)
            .map(|(w, s)| (*w, apply_detector_pair(s).1))
            .collect();
        let probability: f64 = entries.iter().map(|(w, _)| w).sum();
        if probability > 0.0 {
            let conditional = WeightedStates::from_conditional(entries, probability)
                .expect("non-empty filter branch");
            branches.push(FilteredInit { clicked: outcome_path, probability, conditional });
        }
    }
    branches
}
