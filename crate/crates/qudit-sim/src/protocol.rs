//! Two-party protocol definitions: teleportation of a single qudit and the
//! entanglement-assisted remote controlled-NOT, plus the swap-chain
//! realization used for gate-cost comparisons.
//!
//! Wire conventions.  Teleportation registers are `(0, 1, 2)`: wire 0 holds
//! the input, wires 1 and 2 hold the shared maximally entangled pair, Alice
//! holds `{0, 1}` and Bob holds `{2}`.  Measuring wire 0 yields the digit
//! labelled `n`, wire 1 the digit labelled `m`.  Remote-CNOT registers are
//! `(i, i', j', j) = (0, 1, 2, 3)`: the two-wire input sits on `(i, j)`, the
//! shared pair on `(i', j')`, Alice holds `{i, i'}` and Bob holds `{j', j}`.
//! Alice measures `i'` (label `m`), Bob measures `j'` (label `n`).
//!
//! Branch structure.  With `w = exp(2 pi i / d)`, applying Alice's gate pair
//! `C(0->1)^dag, H(0)` in variant A leaves Bob holding `X^m Z^n |phi>` on the
//! `(n, m)` branch; variant B uses `C(1->0)^dag, H(1)` and leaves
//! `Z^m X^-n |phi>`.  The dagger remote CNOT applies Bob's `C(j'->j), H(j')`
//! and Alice's `C(i->i')`, leaving `w^(nm) Z_i^-n X_j^m Cdag |psi>`; the
//! plain remote CNOT conjugates Bob's pair (`C(j'->j)^dag, H(j')^dag`) and
//! leaves `w^(-nm) Z_i^n X_j^-m C |psi>`.  The correction tables below undo
//! the displacement operators exactly; the residual branch phase `w^(+-nm)`
//! is recorded, never corrected.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gates::{root_of_unity_pow, Gate};
use crate::locc::{self, Enumeration, PartyName, Transcript};
use crate::state::{max_amplitude_deviation, StateVector};

/// The four protocols this crate implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    TeleportA,
    TeleportB,
    RemoteCnot,
    RemoteCnotDagger,
}

impl ProtocolKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::TeleportA => "teleport-a",
            ProtocolKind::TeleportB => "teleport-b",
            ProtocolKind::RemoteCnot => "remote-cnot",
            ProtocolKind::RemoteCnotDagger => "remote-cnot-dagger",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "teleport-a" => Ok(ProtocolKind::TeleportA),
            "teleport-b" => Ok(ProtocolKind::TeleportB),
            "remote-cnot" => Ok(ProtocolKind::RemoteCnot),
            "remote-cnot-dagger" => Ok(ProtocolKind::RemoteCnotDagger),
            _ => Err(Error::InvalidProtocol {
                name: name.to_string(),
            }),
        }
    }

    pub fn all() -> [ProtocolKind; 4] {
        [
            ProtocolKind::TeleportA,
            ProtocolKind::TeleportB,
            ProtocolKind::RemoteCnot,
            ProtocolKind::RemoteCnotDagger,
        ]
    }

    /// Number of wires the protocol input occupies.
    pub fn input_wires(&self) -> usize {
        match self {
            ProtocolKind::TeleportA | ProtocolKind::TeleportB => 1,
            ProtocolKind::RemoteCnot | ProtocolKind::RemoteCnotDagger => 2,
        }
    }

    pub fn is_remote(&self) -> bool {
        matches!(self, ProtocolKind::RemoteCnot | ProtocolKind::RemoteCnotDagger)
    }
}

/// A named party and the register wires it may act on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Party {
    pub name: PartyName,
    pub held_wires: Vec<usize>,
}

impl Party {
    pub fn holds(&self, wire: usize) -> bool {
        self.held_wires.contains(&wire)
    }
}

/// Outcome labels carried by measurements and classical messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeLabel {
    M,
    N,
}

impl OutcomeLabel {
    pub(crate) fn index(self) -> usize {
        match self {
            OutcomeLabel::M => 0,
            OutcomeLabel::N => 1,
        }
    }
}

/// One step of a protocol script, in execution order.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Gate {
        party: PartyName,
        gate: Gate,
    },
    Measure {
        party: PartyName,
        wire: usize,
        label: OutcomeLabel,
    },
    /// Classical message announcing the sender's measured digits.
    Exchange {
        from: PartyName,
        carries: Vec<OutcomeLabel>,
    },
    /// Table-driven local correction; skipped if a needed digit never arrived.
    Correct {
        party: PartyName,
        needs: Vec<OutcomeLabel>,
    },
}

/// Wires the correction table targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionWires {
    /// Teleportation: all corrections land on Bob's output wire.
    Bob { wire: usize },
    /// Remote CNOT: Alice corrects the control wire `i`, Bob the target `j`.
    AliceBob { i: usize, j: usize },
}

/// What the residual register should equal after corrections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetOp {
    /// Teleportation: the residual equals the input state.
    Identity,
    /// Remote CNOT: the residual equals the input with one controlled shift
    /// applied, expressed in residual-register wire numbers.
    Cnot {
        control: usize,
        target: usize,
        adjoint: bool,
    },
}

/// A complete two-party protocol over one shared entangled pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolScript {
    pub kind: ProtocolKind,
    pub d: usize,
    pub input_wires: usize,
    pub total_wires: usize,
    pub alice: Party,
    pub bob: Party,
    /// Register permutation applied after `input (x) pair`, as
    /// `order[new_wire] = old_wire`; `None` keeps the tensor order.
    pub prepare_reorder: Option<Vec<usize>>,
    pub steps: Vec<Step>,
    /// Wires measured for the digits labelled `m` and `n`.
    pub m_wire: usize,
    pub n_wire: usize,
    pub correction_wires: CorrectionWires,
    pub target: TargetOp,
}

/// Local corrections and residual phase for one measurement branch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionRule {
    pub outcome_m: usize,
    pub outcome_n: usize,
    /// Gates each party applies, in application order; identity gates are
    /// omitted, so both lists are empty on the `(0, 0)` branch.
    pub alice_ops: Vec<Gate>,
    pub bob_ops: Vec<Gate>,
    /// Global phase left on the corrected state, always of unit modulus.
    #[serde(serialize_with = "serialize_phase")]
    pub branch_phase: Complex64,
}

fn serialize_phase<S: serde::Serializer>(
    phase: &Complex64,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Parts {
        re: f64,
        im: f64,
    }
    Parts {
        re: phase.re,
        im: phase.im,
    }
    .serialize(serializer)
}

fn check_dimension(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension { d });
    }
    Ok(())
}

/// Builds the canonical script for `kind` at dimension `d`.
pub fn script(kind: ProtocolKind, d: usize) -> Result<ProtocolScript> {
    check_dimension(d)?;
    let script = match kind {
        ProtocolKind::TeleportA => teleport_script(kind, d, true),
        ProtocolKind::TeleportB => teleport_script(kind, d, false),
        ProtocolKind::RemoteCnot | ProtocolKind::RemoteCnotDagger => {
            remote_script(kind, d, 2, 0, 1, true)?
        }
    };
    Ok(script)
}

fn teleport_script(kind: ProtocolKind, d: usize, variant_a: bool) -> ProtocolScript {
    use PartyName::{Alice, Bob};
    // Variant A: C(0->1)^dag then H(0).  Variant B exchanges the roles of the
    // input wire and Alice's pair wire: C(1->0)^dag then H(1).
    let (control, target, h_wire) = if variant_a { (0, 1, 0) } else { (1, 0, 1) };
    let steps = vec![
        Step::Gate {
            party: Alice,
            gate: Gate::Cnot {
                control,
                target,
                adjoint: true,
            },
        },
        Step::Gate {
            party: Alice,
            gate: Gate::H {
                wire: h_wire,
                adjoint: false,
            },
        },
        Step::Measure {
            party: Alice,
            wire: 0,
            label: OutcomeLabel::N,
        },
        Step::Measure {
            party: Alice,
            wire: 1,
            label: OutcomeLabel::M,
        },
        Step::Exchange {
            from: Alice,
            carries: vec![OutcomeLabel::N, OutcomeLabel::M],
        },
        Step::Correct {
            party: Bob,
            needs: vec![OutcomeLabel::M, OutcomeLabel::N],
        },
    ];
    ProtocolScript {
        kind,
        d,
        input_wires: 1,
        total_wires: 3,
        alice: Party {
            name: Alice,
            held_wires: vec![0, 1],
        },
        bob: Party {
            name: Bob,
            held_wires: vec![2],
        },
        prepare_reorder: None,
        steps,
        m_wire: 1,
        n_wire: 0,
        correction_wires: CorrectionWires::Bob { wire: 2 },
        target: TargetOp::Identity,
    }
}

/// Builds a remote-CNOT script acting on wires `i` (control) and `j`
/// (target) of an `input_wires`-wide register, with the entangled pair
/// appended as wires `input_wires` (Alice's `i'`) and `input_wires + 1`
/// (Bob's `j'`).  Spectator wires are assigned to Bob.
pub fn remote_script_embedded(
    kind: ProtocolKind,
    d: usize,
    input_wires: usize,
    i: usize,
    j: usize,
) -> Result<ProtocolScript> {
    check_dimension(d)?;
    if !kind.is_remote() {
        return Err(Error::InvalidProtocol {
            name: kind.name().to_string(),
        });
    }
    if i == j {
        return Err(Error::SameWire { wire: i });
    }
    if i >= input_wires || j >= input_wires {
        return Err(Error::InvalidWire {
            wire: i.max(j),
            wires: input_wires,
        });
    }
    remote_script(kind, d, input_wires, i, j, false)
}

fn remote_script(
    kind: ProtocolKind,
    d: usize,
    input_wires: usize,
    i: usize,
    j: usize,
    canonical: bool,
) -> Result<ProtocolScript> {
    use PartyName::{Alice, Bob};
    let conjugated = kind == ProtocolKind::RemoteCnot;
    let i_prime = input_wires;
    let j_prime = input_wires + 1;
    let steps = vec![
        // Bob's teleportation-style pair; the plain remote CNOT uses the
        // conjugate forms, the dagger variant the plain forms.
        Step::Gate {
            party: Bob,
            gate: Gate::Cnot {
                control: j_prime,
                target: j,
                adjoint: conjugated,
            },
        },
        Step::Gate {
            party: Bob,
            gate: Gate::H {
                wire: j_prime,
                adjoint: conjugated,
            },
        },
        Step::Gate {
            party: Alice,
            gate: Gate::Cnot {
                control: i,
                target: i_prime,
                adjoint: false,
            },
        },
        Step::Measure {
            party: Alice,
            wire: i_prime,
            label: OutcomeLabel::M,
        },
        Step::Measure {
            party: Bob,
            wire: j_prime,
            label: OutcomeLabel::N,
        },
        Step::Exchange {
            from: Alice,
            carries: vec![OutcomeLabel::M],
        },
        Step::Exchange {
            from: Bob,
            carries: vec![OutcomeLabel::N],
        },
        Step::Correct {
            party: Alice,
            needs: vec![OutcomeLabel::N],
        },
        Step::Correct {
            party: Bob,
            needs: vec![OutcomeLabel::M],
        },
    ];
    // The canonical four-wire register is ordered (i, i', j', j) = (0, 1, 2,
    // 3); the input tensor product arrives as (i, j, i', j'), so the
    // canonical script reorders after preparation.  Embedded scripts keep the
    // tensor layout (pair wires appended after the input) and skip the
    // reorder.
    // (i, i', j', j) positions in the prepared register.
    let (wi, wip, wjp, wj) = if canonical {
        (0, 1, 2, 3)
    } else {
        (i, i_prime, j_prime, j)
    };
    // Contracting the measured wires leaves the input register in its
    // original wire order in both layouts, so the target is named in input
    // wire numbers.
    Ok(ProtocolScript {
        kind,
        d,
        input_wires,
        total_wires: input_wires + 2,
        alice: Party {
            name: Alice,
            held_wires: if canonical {
                vec![0, 1]
            } else {
                vec![i, i_prime]
            },
        },
        bob: Party {
            name: Bob,
            held_wires: if canonical {
                vec![2, 3]
            } else {
                (0..input_wires + 2)
                    .filter(|w| *w != i && *w != i_prime)
                    .collect()
            },
        },
        prepare_reorder: if canonical {
            Some(vec![0, 2, 3, 1])
        } else {
            None
        },
        steps: if canonical {
            renumber_steps(&steps, &[(i, wi), (i_prime, wip), (j_prime, wjp), (j, wj)])
        } else {
            steps
        },
        m_wire: wip,
        n_wire: wjp,
        correction_wires: CorrectionWires::AliceBob { i: wi, j: wj },
        target: TargetOp::Cnot {
            control: i,
            target: j,
            adjoint: kind == ProtocolKind::RemoteCnotDagger,
        },
    })
}

fn renumber_steps(steps: &[Step], map: &[(usize, usize)]) -> Vec<Step> {
    let translate = |wire: usize| -> usize {
        map.iter()
            .find(|(old, _)| *old == wire)
            .map(|(_, new)| *new)
            .unwrap_or(wire)
    };
    steps
        .iter()
        .map(|step| match step {
            Step::Gate { party, gate } => Step::Gate {
                party: *party,
                gate: match *gate {
                    Gate::Cnot {
                        control,
                        target,
                        adjoint,
                    } => Gate::Cnot {
                        control: translate(control),
                        target: translate(target),
                        adjoint,
                    },
                    Gate::H { wire, adjoint } => Gate::H {
                        wire: translate(wire),
                        adjoint,
                    },
                    Gate::X { wire, power } => Gate::X {
                        wire: translate(wire),
                        power,
                    },
                    Gate::Z { wire, power } => Gate::Z {
                        wire: translate(wire),
                        power,
                    },
                    Gate::Swap { a, b } => Gate::Swap {
                        a: translate(a),
                        b: translate(b),
                    },
                    Gate::U { wire, m, n } => Gate::U {
                        wire: translate(wire),
                        m,
                        n,
                    },
                },
            },
            Step::Measure { party, wire, label } => Step::Measure {
                party: *party,
                wire: translate(*wire),
                label: *label,
            },
            other => other.clone(),
        })
        .collect()
}

impl ProtocolScript {
    pub fn party(&self, name: PartyName) -> &Party {
        match name {
            PartyName::Alice => &self.alice,
            PartyName::Bob => &self.bob,
        }
    }

    /// Wires measured during the protocol, in descending order.
    pub fn measured_wires_descending(&self) -> [usize; 2] {
        if self.m_wire > self.n_wire {
            [self.m_wire, self.n_wire]
        } else {
            [self.n_wire, self.m_wire]
        }
    }

    /// Correction rule for the branch with measured digits `(m, n)`.
    pub fn correction_rule(&self, m: usize, n: usize) -> Result<CorrectionRule> {
        let d = self.d;
        if m >= d {
            return Err(Error::InvalidDigit { digit: m, d });
        }
        if n >= d {
            return Err(Error::InvalidDigit { digit: n, d });
        }
        let nonzero = |gate: Gate| -> Option<Gate> {
            match gate {
                Gate::X { power: 0, .. } | Gate::Z { power: 0, .. } => None,
                g => Some(g),
            }
        };
        let neg = |k: usize| ((d - k) % d) as i64;
        let rule = match (self.kind, self.correction_wires) {
            (ProtocolKind::TeleportA, CorrectionWires::Bob { wire }) => CorrectionRule {
                outcome_m: m,
                outcome_n: n,
                alice_ops: vec![],
                // Undo X^m Z^n: apply X^-m, then Z^-n.
                bob_ops: [
                    Gate::X {
                        wire,
                        power: neg(m),
                    },
                    Gate::Z {
                        wire,
                        power: neg(n),
                    },
                ]
                .into_iter()
                .filter_map(nonzero)
                .collect(),
                branch_phase: Complex64::new(1.0, 0.0),
            },
            (ProtocolKind::TeleportB, CorrectionWires::Bob { wire }) => CorrectionRule {
                outcome_m: m,
                outcome_n: n,
                alice_ops: vec![],
                // Undo Z^m X^-n: apply Z^-m, then X^n.
                bob_ops: [
                    Gate::Z {
                        wire,
                        power: neg(m),
                    },
                    Gate::X {
                        wire,
                        power: n as i64,
                    },
                ]
                .into_iter()
                .filter_map(nonzero)
                .collect(),
                branch_phase: Complex64::new(1.0, 0.0),
            },
            (ProtocolKind::RemoteCnotDagger, CorrectionWires::AliceBob { i, j }) => {
                CorrectionRule {
                    outcome_m: m,
                    outcome_n: n,
                    // Undo Z_i^-n and X_j^m; the phase w^(nm) stays.
                    alice_ops: [Gate::Z {
                        wire: i,
                        power: n as i64,
                    }]
                    .into_iter()
                    .filter_map(nonzero)
                    .collect(),
                    bob_ops: [Gate::X {
                        wire: j,
                        power: neg(m),
                    }]
                    .into_iter()
                    .filter_map(nonzero)
                    .collect(),
                    branch_phase: root_of_unity_pow(self.d, (n * m) as i64),
                }
            }
            (ProtocolKind::RemoteCnot, CorrectionWires::AliceBob { i, j }) => CorrectionRule {
                outcome_m: m,
                outcome_n: n,
                // Undo Z_i^n and X_j^-m; the phase w^(-nm) stays.
                alice_ops: [Gate::Z {
                    wire: i,
                    power: neg(n),
                }]
                .into_iter()
                .filter_map(nonzero)
                .collect(),
                bob_ops: [Gate::X {
                    wire: j,
                    power: m as i64,
                }]
                .into_iter()
                .filter_map(nonzero)
                .collect(),
                branch_phase: root_of_unity_pow(self.d, -((n * m) as i64)),
            },
            _ => unreachable!("correction wires always match the protocol kind"),
        };
        Ok(rule)
    }

    /// Expected residual state for a given protocol input.
    pub fn target_state(&self, input: &StateVector) -> Result<StateVector> {
        match self.target {
            TargetOp::Identity => Ok(input.clone()),
            TargetOp::Cnot {
                control,
                target,
                adjoint,
            } => {
                let mut out = input.clone();
                out.apply_cnot(control, target, adjoint)?;
                Ok(out)
            }
        }
    }
}

/// Complete correction table for a protocol, indexed m-major: the entry for
/// branch `(m, n)` sits at `m * d + n`.
pub fn correction_table(kind: ProtocolKind, d: usize) -> Result<Vec<CorrectionRule>> {
    let script = script(kind, d)?;
    let mut rules = Vec::with_capacity(d * d);
    for m in 0..d {
        for n in 0..d {
            rules.push(script.correction_rule(m, n)?);
        }
    }
    Ok(rules)
}

/// Samples one run of the protocol with a fresh transcript.
pub fn run(kind: ProtocolKind, input: &StateVector, seed: u64) -> Result<Transcript> {
    let script = script(kind, input.d())?;
    locc::run(&script, input, seed)
}

/// Executes every measurement branch by postselection.
pub fn enumerate(kind: ProtocolKind, input: &StateVector) -> Result<Enumeration> {
    let script = script(kind, input.d())?;
    locc::enumerate(&script, input)
}

/// Applies a controlled shift between two distant wires using nearest
/// neighbour swaps, returning the new state and the number of two-qudit
/// gates used: `2 * (|control - target| - 1) + 1`.
pub fn swap_chain_cnot(
    state: &StateVector,
    control: usize,
    target: usize,
) -> Result<(StateVector, usize)> {
    if control == target {
        return Err(Error::SameWire { wire: control });
    }
    let mut out = state.clone();
    // Validate both wires up front.
    out.stride(control)?;
    out.stride(target)?;
    let mut gate_count = 0;
    if target > control {
        for p in ((control + 1)..target).rev() {
            out.apply_swap(p, p + 1)?;
            gate_count += 1;
        }
        out.apply_cnot(control, control + 1, false)?;
        gate_count += 1;
        for p in (control + 1)..target {
            out.apply_swap(p, p + 1)?;
            gate_count += 1;
        }
    } else {
        for p in target..(control - 1) {
            out.apply_swap(p, p + 1)?;
            gate_count += 1;
        }
        out.apply_cnot(control, control - 1, false)?;
        gate_count += 1;
        for p in (target..(control - 1)).rev() {
            out.apply_swap(p, p + 1)?;
            gate_count += 1;
        }
    }
    Ok((out, gate_count))
}

/// Gate-cost comparison between realizing a distant controlled shift with a
/// swap chain and with the remote protocol.
#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub d: usize,
    pub chain_length: usize,
    pub swap_chain_two_qudit: usize,
    pub remote_two_qudit: usize,
    /// Worst-case single-qudit count across branches (Fourier gate plus the
    /// applied corrections).
    pub remote_single_qudit: usize,
    pub remote_entangled_pairs: usize,
    pub max_deviation_swap_chain: f64,
    pub max_deviation_remote: f64,
    pub states_agree: bool,
}

/// Runs both realizations of a controlled shift between the ends of a chain
/// of `chain_length` wires on a seeded random state and compares each against
/// the direct gate.
pub fn compare_chain_vs_remote(d: usize, chain_length: usize, seed: u64) -> Result<CompareReport> {
    if chain_length < 2 {
        return Err(Error::InvalidInput(format!(
            "chain length must be at least 2, got {chain_length}"
        )));
    }
    let control = 0;
    let target = chain_length - 1;
    let chain = StateVector::random_state(d, chain_length, seed)?;
    let mut direct = chain.clone();
    direct.apply_cnot(control, target, false)?;

    let (swapped, swap_count) = swap_chain_cnot(&chain, control, target)?;
    let dev_swap = max_amplitude_deviation(&swapped, &direct)?;

    let script = remote_script_embedded(ProtocolKind::RemoteCnot, d, chain_length, control, target)?;
    let enumeration = locc::enumerate(&script, &chain)?;
    let mut dev_remote: f64 = 0.0;
    let mut remote_two_qudit = 0;
    let mut remote_single_qudit = 0;
    for branch in &enumeration.branches {
        let aligned = StateVector::from_raw_parts(
            d,
            chain_length,
            branch
                .corrected
                .amplitudes()
                .iter()
                .map(|a| a * branch.branch_phase_value.conj())
                .collect(),
        );
        dev_remote = dev_remote.max(max_amplitude_deviation(&aligned, &direct)?);
        remote_two_qudit = remote_two_qudit.max(
            branch.gate_counts.alice.two_qudit + branch.gate_counts.bob.two_qudit,
        );
        remote_single_qudit = remote_single_qudit.max(
            branch.gate_counts.alice.single_qudit + branch.gate_counts.bob.single_qudit,
        );
    }
    Ok(CompareReport {
        d,
        chain_length,
        swap_chain_two_qudit: swap_count,
        remote_two_qudit,
        remote_single_qudit,
        remote_entangled_pairs: 1,
        max_deviation_swap_chain: dev_swap,
        max_deviation_remote: dev_remote,
        states_agree: dev_swap < 1e-12 && dev_remote < 1e-12,
    })
}
