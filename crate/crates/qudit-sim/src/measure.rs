//! Computational-basis measurement of single wires.
//!
//! `outcome_distribution` exposes the Born probabilities, `measure` samples
//! one outcome from a caller-supplied RNG and collapses the state, and
//! `postselect` projects onto a chosen outcome deterministically.  Outcome
//! probabilities below [`PROBABILITY_FLOOR`] are treated as exactly zero.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::state::StateVector;

/// Probabilities below this are treated as exactly zero.
pub const PROBABILITY_FLOOR: f64 = 1e-14;

/// One sampled measurement: the wire, the observed digit, its Born
/// probability, and the collapsed (renormalized) state with the register
/// shape unchanged.
#[derive(Debug, Clone)]
pub struct MeasurementRecord {
    pub wire: usize,
    pub outcome: usize,
    pub probability: f64,
    pub post_state: StateVector,
}

/// Projection onto one outcome.  `post_state` is absent when the outcome
/// probability is below [`PROBABILITY_FLOOR`].
#[derive(Debug, Clone)]
pub struct Postselection {
    pub probability: f64,
    pub post_state: Option<StateVector>,
}

/// Born probabilities of each digit on `wire`.
pub fn outcome_distribution(state: &StateVector, wire: usize) -> Result<Vec<f64>> {
    let d = state.d();
    let stride = state.stride(wire)?;
    let mut probs = vec![0.0; d];
    for (index, amp) in state.amplitudes().iter().enumerate() {
        probs[index / stride % d] += amp.norm_sqr();
    }
    Ok(probs)
}

/// Samples one digit of `wire` from the Born distribution and collapses the
/// state.  Consumes exactly one uniform draw from `rng`, so a seeded RNG
/// reproduces the same outcome sequence.
pub fn measure<R: Rng>(
    state: &StateVector,
    wire: usize,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    let probs = outcome_distribution(state, wire)?;
    let total: f64 = probs.iter().sum();
    if total < PROBABILITY_FLOOR {
        return Err(Error::DegenerateState);
    }
    let draw: f64 = rng.gen::<f64>() * total;
    let mut cumulative = 0.0;
    let mut outcome = probs.len() - 1;
    for (digit, &p) in probs.iter().enumerate() {
        cumulative += p;
        if draw < cumulative {
            outcome = digit;
            break;
        }
    }
    // A draw can land on a below-floor outcome only through float pathology
    // at the distribution tail; fall back to the most likely digit.
    if probs[outcome] < PROBABILITY_FLOOR {
        outcome = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(digit, _)| digit)
            .unwrap_or(0);
    }
    let post_state = project(state, wire, outcome, probs[outcome]);
    Ok(MeasurementRecord {
        wire,
        outcome,
        probability: probs[outcome],
        post_state,
    })
}

/// Projects `wire` onto `outcome`, reporting the Born probability.  The
/// renormalized post-state is returned unless the probability sits below
/// [`PROBABILITY_FLOOR`].
pub fn postselect(state: &StateVector, wire: usize, outcome: usize) -> Result<Postselection> {
    if outcome >= state.d() {
        return Err(Error::InvalidDigit {
            digit: outcome,
            d: state.d(),
        });
    }
    let probs = outcome_distribution(state, wire)?;
    let probability = probs[outcome];
    if probability < PROBABILITY_FLOOR {
        return Ok(Postselection {
            probability: 0.0,
            post_state: None,
        });
    }
    Ok(Postselection {
        probability,
        post_state: Some(project(state, wire, outcome, probability)),
    })
}

fn project(state: &StateVector, wire: usize, outcome: usize, probability: f64) -> StateVector {
    let d = state.d();
    let stride = state.stride(wire).expect("wire validated by caller");
    let scale = 1.0 / probability.sqrt();
    let amps: Vec<Complex64> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(index, amp)| {
            if index / stride % d == outcome {
                amp * scale
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let mut post = state.clone();
    post.replace_amplitudes(amps);
    post
}
