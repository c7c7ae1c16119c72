//! Two-party execution engine with explicit classical messages.
//!
//! Every quantum operation is checked against the acting party's held wires,
//! so any script whose gates or corrections would touch the other party's
//! qudits fails loudly instead of silently simulating nonlocal physics.
//! Corrections are table-driven and fire only after the digits they need
//! have arrived; dropping a message therefore degrades the output state
//! rather than producing an error.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gates::Gate;
use crate::measure::{self, Postselection};
use crate::protocol::{CorrectionRule, OutcomeLabel, ProtocolScript, Step};
use crate::state::{fidelity, StateVector};

/// The two protocol participants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PartyName {
    Alice,
    Bob,
}

impl PartyName {
    pub fn other(self) -> PartyName {
        match self {
            PartyName::Alice => PartyName::Bob,
            PartyName::Bob => PartyName::Alice,
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            PartyName::Alice => 0,
            PartyName::Bob => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PartyName::Alice => "alice",
            PartyName::Bob => "bob",
        }
    }
}

impl std::fmt::Display for PartyName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Step ordering for an execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Order {
    /// Steps run exactly as scripted.
    #[default]
    ScriptOrder,
    /// All of Alice's gates and measurements run before Bob's.
    AliceFirst,
    /// All of Bob's gates and measurements run before Alice's.
    BobFirst,
}

/// One entry of a classical message: a labelled measured digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PayloadEntry {
    pub label: OutcomeLabel,
    pub value: usize,
}

/// A timeline entry in an execution transcript.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Gate {
        party: PartyName,
        gate: Gate,
    },
    Measurement {
        party: PartyName,
        wire: usize,
        label: OutcomeLabel,
        outcome: usize,
        probability: f64,
    },
    Message {
        from: PartyName,
        to: PartyName,
        step_id: usize,
        payload: Vec<PayloadEntry>,
    },
    Correction {
        party: PartyName,
        gates: Vec<Gate>,
    },
}

/// Real and imaginary parts of a unit-modulus phase, for serialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseParts {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for PhaseParts {
    fn from(z: Complex64) -> Self {
        PhaseParts { re: z.re, im: z.im }
    }
}

/// The two measured digits of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Outcomes {
    pub m: usize,
    pub n: usize,
}

/// Gates applied by one party, split by arity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PartyGateCounts {
    pub single_qudit: usize,
    pub two_qudit: usize,
}

/// Gate counts for both parties, corrections included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct GateCounts {
    pub alice: PartyGateCounts,
    pub bob: PartyGateCounts,
}

/// Full record of one protocol execution.
#[derive(Debug, Clone, Serialize)]
pub struct Transcript {
    pub protocol: String,
    pub d: usize,
    pub seed: u64,
    pub events: Vec<Event>,
    pub outcomes: Outcomes,
    pub branch_phase: PhaseParts,
    pub fidelity: f64,
    pub gate_counts: GateCounts,
}

/// One measurement branch executed by postselection.
#[derive(Debug, Clone, Serialize)]
pub struct BranchRun {
    pub m: usize,
    pub n: usize,
    pub probability: f64,
    pub branch_phase: PhaseParts,
    pub fidelity: f64,
    pub gate_counts: GateCounts,
    /// Residual register after corrections and contraction of the measured
    /// wires.
    pub corrected: StateVector,
    /// Residual register before corrections.
    #[serde(skip)]
    pub residual: StateVector,
    #[serde(skip)]
    pub events: Vec<Event>,
    /// Branch phase as a complex number, for numeric consumers.
    #[serde(skip)]
    pub branch_phase_value: Complex64,
}

/// Every measurement branch of a protocol on one input.
#[derive(Debug, Clone, Serialize)]
pub struct Enumeration {
    pub protocol: String,
    pub d: usize,
    pub branches: Vec<BranchRun>,
}

/// Execution switches.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub order: Order,
    /// Drop the classical message sent by this party; corrections needing
    /// its digits are then skipped.
    pub drop_message_from: Option<PartyName>,
}

enum OutcomeSource<'a> {
    Sample(&'a mut ChaCha8Rng),
    Forced { m: usize, n: usize },
}

struct Execution {
    m: usize,
    n: usize,
    probability: f64,
    events: Vec<Event>,
    corrected: StateVector,
    residual: StateVector,
    rule: CorrectionRule,
}

fn check_input(script: &ProtocolScript, input: &StateVector) -> Result<()> {
    if input.d() != script.d || input.wires() != script.input_wires {
        return Err(Error::DimensionMismatch {
            left_d: script.d,
            left_wires: script.input_wires,
            right_d: input.d(),
            right_wires: input.wires(),
        });
    }
    Ok(())
}

/// Tensors the input with the shared pair and applies the script's register
/// reordering.
fn prepare(script: &ProtocolScript, input: &StateVector) -> Result<StateVector> {
    let pair = StateVector::max_entangled(script.d)?;
    let full = input.tensor(&pair)?;
    match &script.prepare_reorder {
        Some(order) => full.reorder_wires(order),
        None => Ok(full),
    }
}

fn ordered_steps(script: &ProtocolScript, order: Order) -> Vec<Step> {
    let first = match order {
        Order::ScriptOrder => return script.steps.clone(),
        Order::AliceFirst => PartyName::Alice,
        Order::BobFirst => PartyName::Bob,
    };
    let gates_of = |who: PartyName| -> Vec<Step> {
        script
            .steps
            .iter()
            .filter(|s| matches!(s, Step::Gate { party, .. } if *party == who))
            .cloned()
            .collect()
    };
    let measures_of = |who: PartyName| -> Vec<Step> {
        script
            .steps
            .iter()
            .filter(|s| matches!(s, Step::Measure { party, .. } if *party == who))
            .cloned()
            .collect()
    };
    let mut steps = gates_of(first);
    steps.extend(gates_of(first.other()));
    steps.extend(measures_of(first));
    steps.extend(measures_of(first.other()));
    steps.extend(
        script
            .steps
            .iter()
            .filter(|s| matches!(s, Step::Exchange { .. } | Step::Correct { .. }))
            .cloned(),
    );
    steps
}

fn guard_locality(script: &ProtocolScript, party: PartyName, gate: &Gate) -> Result<()> {
    let holder = script.party(party);
    for wire in gate.wires() {
        if !holder.holds(wire) {
            return Err(Error::LocalityViolation {
                party: party.as_str(),
                wire,
            });
        }
    }
    Ok(())
}

fn execute(
    script: &ProtocolScript,
    input: &StateVector,
    mut source: OutcomeSource<'_>,
    opts: RunOptions,
) -> Result<Execution> {
    check_input(script, input)?;
    let mut full = prepare(script, input)?;
    let steps = ordered_steps(script, opts.order);

    // known[party][label]: digits available to each party so far.
    let mut known: [[Option<usize>; 2]; 2] = [[None; 2]; 2];
    let mut outcome_m: Option<usize> = None;
    let mut outcome_n: Option<usize> = None;
    let mut probability = 1.0;
    let mut events: Vec<Event> = Vec::new();
    let mut residual_snapshot: Option<StateVector> = None;

    for step in &steps {
        match step {
            Step::Gate { party, gate } => {
                guard_locality(script, *party, gate)?;
                full.apply_gate(gate)?;
                events.push(Event::Gate {
                    party: *party,
                    gate: *gate,
                });
            }
            Step::Measure { party, wire, label } => {
                if !script.party(*party).holds(*wire) {
                    return Err(Error::LocalityViolation {
                        party: party.as_str(),
                        wire: *wire,
                    });
                }
                let (outcome, prob) = match &mut source {
                    OutcomeSource::Sample(rng) => {
                        let record = measure::measure(&full, *wire, rng)?;
                        let (outcome, prob) = (record.outcome, record.probability);
                        full = record.post_state;
                        (outcome, prob)
                    }
                    OutcomeSource::Forced { m, n } => {
                        let digit = match label {
                            OutcomeLabel::M => *m,
                            OutcomeLabel::N => *n,
                        };
                        let Postselection {
                            probability: prob,
                            post_state,
                        } = measure::postselect(&full, *wire, digit)?;
                        match post_state {
                            Some(state) => full = state,
                            None => return Err(Error::DegenerateState),
                        }
                        (digit, prob)
                    }
                };
                known[party.index()][label.index()] = Some(outcome);
                match label {
                    OutcomeLabel::M => outcome_m = Some(outcome),
                    OutcomeLabel::N => outcome_n = Some(outcome),
                }
                probability *= prob;
                events.push(Event::Measurement {
                    party: *party,
                    wire: *wire,
                    label: *label,
                    outcome,
                    probability: prob,
                });
            }
            Step::Exchange { from, carries } => {
                if opts.drop_message_from == Some(*from) {
                    continue;
                }
                let mut payload = Vec::with_capacity(carries.len());
                for label in carries {
                    let value = known[from.index()][label.index()].ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "message from {from} announces a digit it never measured"
                        ))
                    })?;
                    payload.push(PayloadEntry {
                        label: *label,
                        value,
                    });
                }
                let to = from.other();
                for entry in &payload {
                    known[to.index()][entry.label.index()] = Some(entry.value);
                }
                events.push(Event::Message {
                    from: *from,
                    to,
                    step_id: events.len(),
                    payload,
                });
            }
            Step::Correct { party, needs } => {
                if residual_snapshot.is_none() {
                    residual_snapshot = Some(full.clone());
                }
                if needs
                    .iter()
                    .any(|label| known[party.index()][label.index()].is_none())
                {
                    continue;
                }
                let m = outcome_m.ok_or(Error::DegenerateState)?;
                let n = outcome_n.ok_or(Error::DegenerateState)?;
                let rule = script.correction_rule(m, n)?;
                let ops = match party {
                    PartyName::Alice => &rule.alice_ops,
                    PartyName::Bob => &rule.bob_ops,
                };
                for gate in ops {
                    guard_locality(script, *party, gate)?;
                    full.apply_gate(gate)?;
                }
                events.push(Event::Correction {
                    party: *party,
                    gates: ops.clone(),
                });
            }
        }
    }

    let m = outcome_m.ok_or(Error::DegenerateState)?;
    let n = outcome_n.ok_or(Error::DegenerateState)?;
    let rule = script.correction_rule(m, n)?;
    let residual_full = residual_snapshot.unwrap_or_else(|| full.clone());

    let contract = |mut state: StateVector| -> Result<StateVector> {
        for wire in script.measured_wires_descending() {
            let digit = if wire == script.m_wire { m } else { n };
            state = state.contract_wire(wire, digit)?;
        }
        Ok(state)
    };
    let corrected = contract(full)?;
    let residual = contract(residual_full)?;

    Ok(Execution {
        m,
        n,
        probability,
        events,
        corrected,
        residual,
        rule,
    })
}

fn count_gates(events: &[Event]) -> GateCounts {
    let mut counts = GateCounts::default();
    let mut add = |party: PartyName, gate: &Gate| {
        let slot = match party {
            PartyName::Alice => &mut counts.alice,
            PartyName::Bob => &mut counts.bob,
        };
        if gate.is_two_qudit() {
            slot.two_qudit += 1;
        } else {
            slot.single_qudit += 1;
        }
    };
    for event in events {
        match event {
            Event::Gate { party, gate } => add(*party, gate),
            Event::Correction { party, gates } => {
                for gate in gates {
                    add(*party, gate);
                }
            }
            _ => {}
        }
    }
    counts
}

fn transcript_from(script: &ProtocolScript, input: &StateVector, seed: u64, ex: Execution) -> Result<Transcript> {
    let target = script.target_state(input)?;
    let gate_counts = count_gates(&ex.events);
    Ok(Transcript {
        protocol: script.kind.name().to_string(),
        d: script.d,
        seed,
        events: ex.events,
        outcomes: Outcomes { m: ex.m, n: ex.n },
        branch_phase: ex.rule.branch_phase.into(),
        fidelity: fidelity(&target, &ex.corrected)?,
        gate_counts,
    })
}

/// Samples one run of the script: gates, measurements, messages, and
/// corrections in script order, with measurement outcomes drawn from the
/// Born distribution seeded by `seed`.
pub fn run(script: &ProtocolScript, input: &StateVector, seed: u64) -> Result<Transcript> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ex = execute(
        script,
        input,
        OutcomeSource::Sample(&mut rng),
        RunOptions::default(),
    )?;
    transcript_from(script, input, seed, ex)
}

/// Samples one run with the parties' quantum halves executed in the given
/// order.  The branch is drawn from the joint outcome distribution first, so
/// the same seed selects the same branch under every ordering.
pub fn run_interleaved(
    script: &ProtocolScript,
    input: &StateVector,
    seed: u64,
    order: Order,
) -> Result<Transcript> {
    let (m, n) = draw_branch(script, input, seed)?;
    let ex = execute(
        script,
        input,
        OutcomeSource::Forced { m, n },
        RunOptions {
            order,
            ..RunOptions::default()
        },
    )?;
    transcript_from(script, input, seed, ex)
}

/// Draws a measurement branch `(m, n)` from the joint Born distribution with
/// a single uniform variate, walking branches in m-major order.
fn draw_branch(script: &ProtocolScript, input: &StateVector, seed: u64) -> Result<(usize, usize)> {
    check_input(script, input)?;
    let mut full = prepare(script, input)?;
    for step in &script.steps {
        if let Step::Gate { party, gate } = step {
            guard_locality(script, *party, gate)?;
            full.apply_gate(gate)?;
        }
    }
    let d = script.d;
    let mut joint = Vec::with_capacity(d * d);
    for m in 0..d {
        let after_m = measure::postselect(&full, script.m_wire, m)?;
        for n in 0..d {
            let p = match &after_m.post_state {
                Some(state) => {
                    after_m.probability * measure::postselect(state, script.n_wire, n)?.probability
                }
                None => 0.0,
            };
            joint.push(p);
        }
    }
    let total: f64 = joint.iter().sum();
    if total < measure::PROBABILITY_FLOOR {
        return Err(Error::DegenerateState);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw: f64 = rng.gen::<f64>() * total;
    let mut cumulative = 0.0;
    let mut picked = joint.len() - 1;
    for (index, p) in joint.iter().enumerate() {
        cumulative += p;
        if draw < cumulative {
            picked = index;
            break;
        }
    }
    // A draw landing on a zero-probability branch through float roundoff at
    // the tail falls back to the likeliest branch.
    if joint[picked] < measure::PROBABILITY_FLOOR {
        picked = joint
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(index, _)| index)
            .unwrap_or(0);
    }
    Ok((picked / d, picked % d))
}

/// Executes the branch with measured digits `(m, n)` by postselection.
pub fn run_postselected(
    script: &ProtocolScript,
    input: &StateVector,
    m: usize,
    n: usize,
    order: Order,
) -> Result<BranchRun> {
    run_postselected_opts(
        script,
        input,
        m,
        n,
        RunOptions {
            order,
            ..RunOptions::default()
        },
    )
}

/// Executes one postselected branch with full execution switches.
pub fn run_postselected_opts(
    script: &ProtocolScript,
    input: &StateVector,
    m: usize,
    n: usize,
    opts: RunOptions,
) -> Result<BranchRun> {
    let ex = execute(script, input, OutcomeSource::Forced { m, n }, opts)?;
    let target = script.target_state(input)?;
    let gate_counts = count_gates(&ex.events);
    Ok(BranchRun {
        m: ex.m,
        n: ex.n,
        probability: ex.probability,
        branch_phase: ex.rule.branch_phase.into(),
        fidelity: fidelity(&target, &ex.corrected)?,
        gate_counts,
        corrected: ex.corrected,
        residual: ex.residual,
        events: ex.events,
        branch_phase_value: ex.rule.branch_phase,
    })
}

/// Executes every `(m, n)` branch by postselection, in m-major order.
pub fn enumerate(script: &ProtocolScript, input: &StateVector) -> Result<Enumeration> {
    enumerate_opts(script, input, RunOptions::default())
}

/// Branch enumeration with full execution switches.
pub fn enumerate_opts(
    script: &ProtocolScript,
    input: &StateVector,
    opts: RunOptions,
) -> Result<Enumeration> {
    let d = script.d;
    let mut branches = Vec::with_capacity(d * d);
    for m in 0..d {
        for n in 0..d {
            branches.push(run_postselected_opts(script, input, m, n, opts)?);
        }
    }
    Ok(Enumeration {
        protocol: script.kind.name().to_string(),
        d,
        branches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{self, ProtocolKind};
    use crate::state::max_amplitude_deviation;

    fn teleport(d: usize) -> crate::protocol::ProtocolScript {
        protocol::script(ProtocolKind::TeleportA, d).unwrap()
    }

    fn remote(d: usize) -> crate::protocol::ProtocolScript {
        protocol::script(ProtocolKind::RemoteCnot, d).unwrap()
    }

    #[test]
    fn transcript_events_follow_the_script_order() {
        let input = StateVector::random_state(3, 1, 2).unwrap();
        let transcript = run(&teleport(3), &input, 9).unwrap();
        let shape: Vec<&str> = transcript
            .events
            .iter()
            .map(|e| match e {
                Event::Gate { .. } => "gate",
                Event::Measurement { .. } => "measurement",
                Event::Message { .. } => "message",
                Event::Correction { .. } => "correction",
            })
            .collect();
        assert_eq!(
            shape,
            vec![
                "gate",
                "gate",
                "measurement",
                "measurement",
                "message",
                "correction"
            ]
        );
        match &transcript.events[4] {
            Event::Message { from, to, payload, .. } => {
                assert_eq!(*from, PartyName::Alice);
                assert_eq!(*to, PartyName::Bob);
                assert_eq!(payload.len(), 2);
            }
            other => panic!("expected a message event, got {other:?}"),
        }
    }

    #[test]
    fn messages_always_precede_corrections() {
        for kind in ProtocolKind::all() {
            let script = protocol::script(kind, 3).unwrap();
            let input = StateVector::random_state(3, kind.input_wires(), 3).unwrap();
            for seed in 0..5 {
                let transcript = run(&script, &input, seed).unwrap();
                let first_correction = transcript
                    .events
                    .iter()
                    .position(|e| matches!(e, Event::Correction { .. }));
                let first_message = transcript
                    .events
                    .iter()
                    .position(|e| matches!(e, Event::Message { .. }));
                if let Some(c) = first_correction {
                    assert!(first_message.unwrap() < c, "{kind:?} seed={seed}");
                }
            }
        }
    }

    #[test]
    fn identical_seeds_produce_identical_transcripts() {
        let input = StateVector::random_state(4, 2, 17).unwrap();
        let a = run(&remote(4), &input, 1234).unwrap();
        let b = run(&remote(4), &input, 1234).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn seeds_reach_different_branches() {
        let input = StateVector::random_state(3, 1, 5).unwrap();
        let script = teleport(3);
        let mut seen = std::collections::HashSet::new();
        for seed in 0..40 {
            let t = run(&script, &input, seed).unwrap();
            seen.insert((t.outcomes.m, t.outcomes.n));
        }
        assert!(seen.len() > 4, "only saw {seen:?}");
    }

    #[test]
    fn sampled_branch_frequencies_are_roughly_uniform() {
        let d = 2;
        let input = StateVector::random_state(d, 1, 6).unwrap();
        let script = teleport(d);
        let mut counts = [[0usize; 2]; 2];
        let trials = 2000;
        for seed in 0..trials {
            let t = run(&script, &input, seed).unwrap();
            counts[t.outcomes.m][t.outcomes.n] += 1;
        }
        for row in counts {
            for count in row {
                let frequency = count as f64 / trials as f64;
                assert!((frequency - 0.25).abs() < 0.05, "{counts:?}");
            }
        }
    }

    #[test]
    fn postselection_returns_the_requested_branch() {
        let input = StateVector::random_state(4, 2, 21).unwrap();
        let branch = run_postselected(&remote(4), &input, 2, 3, Order::ScriptOrder).unwrap();
        assert_eq!((branch.m, branch.n), (2, 3));
        assert!((branch.probability - 1.0 / 16.0).abs() < 1e-12);
        assert!(branch.fidelity > 1.0 - 1e-10);
    }

    #[test]
    fn party_orderings_agree_branch_by_branch() {
        for kind in [ProtocolKind::RemoteCnot, ProtocolKind::RemoteCnotDagger] {
            let d = 3;
            let script = protocol::script(kind, d).unwrap();
            let input = StateVector::random_state(d, 2, 29).unwrap();
            for m in 0..d {
                for n in 0..d {
                    let alice_first =
                        run_postselected(&script, &input, m, n, Order::AliceFirst).unwrap();
                    let bob_first =
                        run_postselected(&script, &input, m, n, Order::BobFirst).unwrap();
                    let scripted =
                        run_postselected(&script, &input, m, n, Order::ScriptOrder).unwrap();
                    assert!(
                        max_amplitude_deviation(&alice_first.corrected, &bob_first.corrected)
                            .unwrap()
                            < 1e-12
                    );
                    assert!(
                        max_amplitude_deviation(&alice_first.corrected, &scripted.corrected)
                            .unwrap()
                            < 1e-12
                    );
                    assert!((alice_first.probability - bob_first.probability).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn interleaved_sampling_selects_the_same_branch_under_both_orders() {
        let d = 3;
        let script = remote(d);
        let input = StateVector::random_state(d, 2, 33).unwrap();
        for seed in 0..10 {
            let a = run_interleaved(&script, &input, seed, Order::AliceFirst).unwrap();
            let b = run_interleaved(&script, &input, seed, Order::BobFirst).unwrap();
            assert_eq!(a.outcomes, b.outcomes, "seed={seed}");
            assert!(a.fidelity > 1.0 - 1e-10);
            assert!(b.fidelity > 1.0 - 1e-10);
        }
    }

    #[test]
    fn dropping_the_only_message_skips_all_corrections() {
        let d = 3;
        let script = teleport(d);
        let input = StateVector::random_state(d, 1, 41).unwrap();
        let opts = RunOptions {
            order: Order::ScriptOrder,
            drop_message_from: Some(PartyName::Alice),
        };
        let enumeration = enumerate_opts(&script, &input, opts).unwrap();
        let mut average = 0.0;
        for branch in &enumeration.branches {
            assert!(
                !branch
                    .events
                    .iter()
                    .any(|e| matches!(e, Event::Message { .. } | Event::Correction { .. })),
                "({}, {})",
                branch.m,
                branch.n
            );
            average += branch.probability * branch.fidelity;
        }
        // Without corrections only the (0, 0) branch survives intact.
        let zero_branch = &enumeration.branches[0];
        assert!(zero_branch.fidelity > 1.0 - 1e-10);
        assert!(average < 0.9, "average fidelity {average}");
    }

    #[test]
    fn dropping_one_remote_message_skips_only_the_dependent_correction() {
        let d = 3;
        let script = remote(d);
        let input = StateVector::random_state(d, 2, 43).unwrap();
        let opts = RunOptions {
            order: Order::ScriptOrder,
            drop_message_from: Some(PartyName::Bob),
        };
        let enumeration = enumerate_opts(&script, &input, opts).unwrap();
        let mut average = 0.0;
        for branch in &enumeration.branches {
            // Alice never learns n, so her clock correction is skipped; Bob
            // still receives m and applies his shift correction.
            assert!(!branch.events.iter().any(|e| matches!(
                e,
                Event::Correction {
                    party: PartyName::Alice,
                    ..
                }
            )));
            assert!(branch.events.iter().any(|e| matches!(
                e,
                Event::Correction {
                    party: PartyName::Bob,
                    ..
                }
            )));
            average += branch.probability * branch.fidelity;
        }
        assert!(average < 1.0 - 1e-3, "average fidelity {average}");
    }

    #[test]
    fn locality_guard_rejects_cross_party_gates() {
        let mut script = teleport(3);
        script.steps.insert(
            0,
            crate::protocol::Step::Gate {
                party: PartyName::Bob,
                gate: Gate::X { wire: 0, power: 1 },
            },
        );
        let input = StateVector::random_state(3, 1, 8).unwrap();
        match run(&script, &input, 0) {
            Err(Error::LocalityViolation { party, wire }) => {
                assert_eq!(party, "bob");
                assert_eq!(wire, 0);
            }
            other => panic!("expected a locality violation, got {other:?}"),
        }
    }

    #[test]
    fn locality_guard_rejects_cross_party_measurements() {
        let mut script = teleport(3);
        for step in &mut script.steps {
            if let crate::protocol::Step::Measure { party, .. } = step {
                *party = PartyName::Bob;
            }
        }
        let input = StateVector::random_state(3, 1, 8).unwrap();
        assert!(matches!(
            run(&script, &input, 0),
            Err(Error::LocalityViolation { party: "bob", .. })
        ));
    }

    #[test]
    fn input_shape_is_validated() {
        let script = teleport(3);
        let wrong_wires = StateVector::random_state(3, 2, 1).unwrap();
        assert!(matches!(
            run(&script, &wrong_wires, 0),
            Err(Error::DimensionMismatch { .. })
        ));
        let wrong_d = StateVector::random_state(4, 1, 1).unwrap();
        assert!(matches!(
            run(&script, &wrong_d, 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gate_counts_include_corrections() {
        let d = 3;
        let script = protocol::script(ProtocolKind::RemoteCnotDagger, d).unwrap();
        let input = StateVector::random_state(d, 2, 51).unwrap();
        let branch = run_postselected(&script, &input, 1, 1, Order::ScriptOrder).unwrap();
        // Alice: one controlled shift plus one clock correction.
        assert_eq!(branch.gate_counts.alice.two_qudit, 1);
        assert_eq!(branch.gate_counts.alice.single_qudit, 1);
        // Bob: one controlled shift, one Fourier gate, one shift correction.
        assert_eq!(branch.gate_counts.bob.two_qudit, 1);
        assert_eq!(branch.gate_counts.bob.single_qudit, 2);
    }

    #[test]
    fn recorded_branch_phase_matches_the_table() {
        let d = 3;
        let script = remote(d);
        let input = StateVector::random_state(d, 2, 57).unwrap();
        let branch = run_postselected(&script, &input, 2, 2, Order::ScriptOrder).unwrap();
        let expected = crate::gates::root_of_unity_pow(d, -4);
        assert!((branch.branch_phase_value - expected).norm() < 1e-15);
    }
}
