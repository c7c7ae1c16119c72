//! Dense state vectors for registers of `wires` qudits of dimension `d`.
//!
//! Amplitudes are stored in computational-basis order with wire 0 as the most
//! significant digit: basis index `x = sum_w x_w * d^(wires - 1 - w)`.  All
//! public constructors produce normalized states; unitary operations in
//! [`crate::gates`] preserve that invariant.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Size guard applied by every constructor.  `max_amplitudes` bounds the
/// dense vector length `d^wires`; `max_dim` bounds the qudit dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLimits {
    pub max_dim: usize,
    pub max_amplitudes: usize,
}

impl Default for RegisterLimits {
    fn default() -> Self {
        RegisterLimits {
            max_dim: 16,
            max_amplitudes: 1 << 24,
        }
    }
}

/// Checks a register shape against `limits` and returns the vector length.
pub fn register_size(d: usize, wires: usize, limits: &RegisterLimits) -> Result<usize> {
    if d < 2 || d > limits.max_dim {
        return Err(Error::InvalidDimension { d });
    }
    if wires == 0 {
        return Err(Error::InvalidWireCount { wires });
    }
    let mut len: usize = 1;
    for _ in 0..wires {
        len = len
            .checked_mul(d)
            .filter(|&l| l <= limits.max_amplitudes)
            .ok_or(Error::RegisterTooLarge {
                d,
                wires,
                max_amplitudes: limits.max_amplitudes,
            })?;
    }
    Ok(len)
}

/// Packs per-wire digits into a basis index (wire 0 most significant).
pub fn encode_digits(d: usize, digits: &[usize]) -> Result<usize> {
    let mut index = 0;
    for &digit in digits {
        if digit >= d {
            return Err(Error::InvalidDigit { digit, d });
        }
        index = index * d + digit;
    }
    Ok(index)
}

/// Unpacks a basis index into per-wire digits (wire 0 most significant).
pub fn decode_index(d: usize, wires: usize, mut index: usize) -> Vec<usize> {
    let mut digits = vec![0; wires];
    for w in (0..wires).rev() {
        digits[w] = index % d;
        index /= d;
    }
    digits
}

/// Normalized pure state of a qudit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    d: usize,
    wires: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Builds a computational basis state `|digits>`.
    pub fn basis_state(d: usize, digits: &[usize]) -> Result<Self> {
        let len = register_size(d, digits.len(), &RegisterLimits::default())?;
        let index = encode_digits(d, digits)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            d,
            wires: digits.len(),
            amps,
        })
    }

    /// Builds the two-wire maximally entangled state `(1/sqrt d) sum_j |jj>`.
    pub fn max_entangled(d: usize) -> Result<Self> {
        let len = register_size(d, 2, &RegisterLimits::default())?;
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        let w = 1.0 / (d as f64).sqrt();
        for j in 0..d {
            amps[j * d + j] = Complex64::new(w, 0.0);
        }
        Ok(StateVector { d, wires: 2, amps })
    }

    /// Draws a Haar-like random state: i.i.d. complex Gaussian amplitudes,
    /// normalized.  The same seed always produces the same state.
    pub fn random_state(d: usize, wires: usize, seed: u64) -> Result<Self> {
        let len = register_size(d, wires, &RegisterLimits::default())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        loop {
            for a in amps.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *a = Complex64::new(re, im);
            }
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for a in amps.iter_mut() {
                    *a /= norm;
                }
                return Ok(StateVector { d, wires, amps });
            }
        }
    }

    /// Wraps caller-provided amplitudes.  Rejects vectors whose norm deviates
    /// from 1 by more than 1e-4 and renormalizes smaller drift.
    pub fn from_amplitudes(d: usize, wires: usize, amps: Vec<Complex64>) -> Result<Self> {
        let len = register_size(d, wires, &RegisterLimits::default())?;
        if amps.len() != len {
            return Err(Error::InvalidInput(format!(
                "expected {len} amplitudes for d {d} with {wires} wires, got {}",
                amps.len()
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let deviation = (norm - 1.0).abs();
        if deviation > 1e-4 {
            return Err(Error::NotNormalized { deviation });
        }
        let mut state = StateVector { d, wires, amps };
        if deviation > 1e-8 {
            for a in state.amps.iter_mut() {
                *a /= norm;
            }
        }
        Ok(state)
    }

    /// Internal constructor for amplitudes already known to be valid.
    pub(crate) fn from_raw_parts(d: usize, wires: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), d.pow(wires as u32));
        StateVector { d, wires, amps }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn wires(&self) -> usize {
        self.wires
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub(crate) fn replace_amplitudes(&mut self, amps: Vec<Complex64>) {
        debug_assert_eq!(amps.len(), self.amps.len());
        self.amps = amps;
    }

    /// Stride between adjacent digits of `wire` in the amplitude vector.
    pub fn stride(&self, wire: usize) -> Result<usize> {
        if wire >= self.wires {
            return Err(Error::InvalidWire {
                wire,
                wires: self.wires,
            });
        }
        Ok(self.d.pow((self.wires - 1 - wire) as u32))
    }

    /// Digit held by `wire` in basis index `index`.
    pub fn digit(&self, index: usize, wire: usize) -> Result<usize> {
        Ok(index / self.stride(wire)? % self.d)
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Combines two registers of equal dimension; `self`'s wires come first.
    /// Each output amplitude is the single product `self[x] * other[y]`,
    /// evaluated left to right.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                left_d: self.d,
                left_wires: self.wires,
                right_d: other.d,
                right_wires: other.wires,
            });
        }
        let wires = self.wires + other.wires;
        register_size(self.d, wires, &RegisterLimits::default())?;
        let mut amps = Vec::with_capacity(self.len() * other.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector {
            d: self.d,
            wires,
            amps,
        })
    }

    /// Rearranges wires so that new wire `w` carries what `order[w]` carried.
    /// `order` must be a permutation of `0..wires`.
    pub fn reorder_wires(&self, order: &[usize]) -> Result<StateVector> {
        if order.len() != self.wires {
            return Err(Error::InvalidInput(format!(
                "wire order must list {} wires, got {}",
                self.wires,
                order.len()
            )));
        }
        let mut seen = vec![false; self.wires];
        for &w in order {
            if w >= self.wires || seen[w] {
                return Err(Error::InvalidInput(format!(
                    "wire order {order:?} is not a permutation"
                )));
            }
            seen[w] = true;
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); self.len()];
        for (old_index, amp) in self.amps.iter().enumerate() {
            let old_digits = decode_index(self.d, self.wires, old_index);
            let mut new_index = 0;
            for &old_wire in order {
                new_index = new_index * self.d + old_digits[old_wire];
            }
            amps[new_index] = *amp;
        }
        Ok(StateVector {
            d: self.d,
            wires: self.wires,
            amps,
        })
    }

    /// Removes a wire whose digit is definitely `digit`, keeping the slice of
    /// amplitudes that agree with it.  The caller must pass a collapsed state;
    /// amplitude mass on other digits is discarded.
    pub fn contract_wire(&self, wire: usize, digit: usize) -> Result<StateVector> {
        if self.wires < 2 {
            return Err(Error::InvalidWireCount { wires: self.wires });
        }
        if digit >= self.d {
            return Err(Error::InvalidDigit { digit, d: self.d });
        }
        let stride = self.stride(wire)?;
        let block = stride * self.d;
        let mut amps = Vec::with_capacity(self.len() / self.d);
        for base in (0..self.len()).step_by(block) {
            for offset in 0..stride {
                amps.push(self.amps[base + offset + digit * stride]);
            }
        }
        Ok(StateVector {
            d: self.d,
            wires: self.wires - 1,
            amps,
        })
    }

    pub(crate) fn same_shape(&self, other: &StateVector) -> Result<()> {
        if self.d != other.d || self.wires != other.wires {
            return Err(Error::DimensionMismatch {
                left_d: self.d,
                left_wires: self.wires,
                right_d: other.d,
                right_wires: other.wires,
            });
        }
        Ok(())
    }
}

/// Inner product `<a|b>`.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    a.same_shape(b)?;
    Ok(a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Fidelity `|<a|b>|^2` between two normalized states.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(inner(a, b)?.norm_sqr())
}

/// True when the states agree up to a global phase: `|<a|b>| >= 1 - tol`.
pub fn equal_up_to_global_phase(a: &StateVector, b: &StateVector, tol: f64) -> Result<bool> {
    Ok(inner(a, b)?.norm() >= 1.0 - tol)
}

/// Largest absolute amplitude difference between two states of equal shape.
pub fn max_amplitude_deviation(a: &StateVector, b: &StateVector) -> Result<f64> {
    a.same_shape(b)?;
    Ok(a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max))
}

#[derive(Serialize, Deserialize)]
struct StateDoc {
    d: usize,
    wires: usize,
    amps: Vec<[f64; 2]>,
}

impl Serialize for StateVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut doc = serializer.serialize_seq(None)?;
        // Serialized as the bare amplitude list; the register shape travels in
        // the surrounding document.
        for a in &self.amps {
            doc.serialize_element(&[a.re, a.im])?;
        }
        doc.end()
    }
}

/// Renders a state in the on-disk document format.
pub fn to_state_json(state: &StateVector) -> String {
    let doc = StateDoc {
        d: state.d(),
        wires: state.wires(),
        amps: state.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("state document serializes")
}

/// Parses the on-disk document format: `{"d": _, "wires": _, "amps": [[re, im], ...]}`.
/// The amplitude list must be normalized to 1e-4; drift beyond 1e-8 is
/// renormalized, anything worse is rejected.
pub fn parse_state_json(text: &str) -> Result<StateVector> {
    let doc: StateDoc =
        serde_json::from_str(text).map_err(|e| Error::StateFile(e.to_string()))?;
    let amps = doc
        .amps
        .iter()
        .map(|&[re, im]| Complex64::new(re, im))
        .collect();
    match StateVector::from_amplitudes(doc.d, doc.wires, amps) {
        Ok(state) => Ok(state),
        Err(Error::NotNormalized { deviation }) => Err(Error::StateFile(format!(
            "amplitudes are not normalized: |norm - 1| = {deviation:e}"
        ))),
        Err(e) => Err(Error::StateFile(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_state_places_unit_amplitude() {
        let s = StateVector::basis_state(3, &[1, 2]).unwrap();
        assert_eq!(s.len(), 9);
        for (i, a) in s.amplitudes().iter().enumerate() {
            let expected = if i == 5 { 1.0 } else { 0.0 };
            assert_eq!(*a, c(expected, 0.0));
        }
    }

    #[test]
    fn basis_state_single_wire() {
        let s = StateVector::basis_state(2, &[0]).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn basis_state_three_wires() {
        let s = StateVector::basis_state(5, &[4, 0, 4]).unwrap();
        assert_eq!(s.len(), 125);
        assert_eq!(s.amplitudes()[104], c(1.0, 0.0));
        assert_eq!(encode_digits(5, &[4, 0, 4]).unwrap(), 104);
    }

    #[test]
    fn basis_state_rejects_digit_out_of_range() {
        assert_eq!(
            StateVector::basis_state(3, &[3]),
            Err(Error::InvalidDigit { digit: 3, d: 3 })
        );
    }

    #[test]
    fn max_entangled_qubits() {
        let s = StateVector::max_entangled(2).unwrap();
        let w = 1.0 / 2f64.sqrt();
        assert_eq!(
            s.amplitudes(),
            &[c(w, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(w, 0.0)]
        );
    }

    #[test]
    fn max_entangled_qutrits_sits_on_diagonal() {
        let s = StateVector::max_entangled(3).unwrap();
        let w = 1.0 / 3f64.sqrt();
        for (i, a) in s.amplitudes().iter().enumerate() {
            if i == 0 || i == 4 || i == 8 {
                assert!((a - c(w, 0.0)).norm() < 1e-15);
            } else {
                assert_eq!(*a, c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn max_entangled_rejects_small_dimension() {
        assert!(matches!(
            StateVector::max_entangled(1),
            Err(Error::InvalidDimension { d: 1 })
        ));
    }

    #[test]
    fn tensor_of_basis_states_concatenates_digits() {
        let a = StateVector::basis_state(3, &[1]).unwrap();
        let b = StateVector::basis_state(3, &[2]).unwrap();
        let ab = a.tensor(&b).unwrap();
        let expected = StateVector::basis_state(3, &[1, 2]).unwrap();
        assert_eq!(ab, expected);
    }

    #[test]
    fn tensor_orders_amplitudes_left_major() {
        let a = StateVector::from_amplitudes(2, 1, vec![c(0.6, 0.0), c(0.8, 0.0)]).unwrap();
        let b = StateVector::from_amplitudes(2, 1, vec![c(0.0, 0.6), c(0.8, 0.0)]).unwrap();
        let ab = a.tensor(&b).unwrap();
        let expected = [
            c(0.6, 0.0) * c(0.0, 0.6),
            c(0.6, 0.0) * c(0.8, 0.0),
            c(0.8, 0.0) * c(0.0, 0.6),
            c(0.8, 0.0) * c(0.8, 0.0),
        ];
        assert_eq!(ab.amplitudes(), &expected);
    }

    #[test]
    fn tensor_rejects_mixed_dimensions() {
        let a = StateVector::basis_state(2, &[0]).unwrap();
        let b = StateVector::basis_state(3, &[0]).unwrap();
        assert!(matches!(
            a.tensor(&b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn random_state_is_deterministic_per_seed() {
        let a = StateVector::random_state(4, 2, 42).unwrap();
        let b = StateVector::random_state(4, 2, 42).unwrap();
        let c_ = StateVector::random_state(4, 2, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c_);
        assert_eq!(a.len(), 16);
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn from_amplitudes_rejects_bad_norm_and_renormalizes_drift() {
        let bad = StateVector::from_amplitudes(2, 1, vec![c(1.0, 0.0), c(0.1, 0.0)]);
        assert!(matches!(bad, Err(Error::NotNormalized { .. })));

        let drift = 1.0 + 5e-6;
        let s =
            StateVector::from_amplitudes(2, 1, vec![c(drift, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn register_limits_bound_amplitude_budget() {
        let limits = RegisterLimits::default();
        assert!(register_size(17, 1, &limits).is_err());
        assert!(register_size(16, 6, &limits).is_ok());
        assert!(register_size(16, 7, &limits).is_err());
        assert!(register_size(2, 24, &limits).is_ok());
        assert!(register_size(2, 25, &limits).is_err());
    }

    #[test]
    fn equal_up_to_global_phase_accepts_rotated_copy() {
        let s = StateVector::random_state(3, 2, 9).unwrap();
        let phase = Complex64::from_polar(1.0, 1.234);
        let rotated = StateVector::from_raw_parts(
            3,
            2,
            s.amplitudes().iter().map(|a| a * phase).collect(),
        );
        assert!(equal_up_to_global_phase(&s, &rotated, 1e-12).unwrap());
        assert!((fidelity(&s, &rotated).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_states_have_zero_fidelity() {
        let a = StateVector::basis_state(2, &[0]).unwrap();
        let b = StateVector::basis_state(2, &[1]).unwrap();
        assert_eq!(fidelity(&a, &b).unwrap(), 0.0);
        assert!(!equal_up_to_global_phase(&a, &b, 1e-12).unwrap());
    }

    #[test]
    fn phase_pattern_is_not_a_global_phase() {
        // For the uniform single-qutrit state, multiplying amplitude j by
        // exp(2 pi i j / 3) yields an orthogonal state.
        let w = 1.0 / 3f64.sqrt();
        let uniform = StateVector::from_amplitudes(3, 1, vec![c(w, 0.0); 3]).unwrap();
        let twisted = StateVector::from_raw_parts(
            3,
            1,
            (0..3)
                .map(|j| {
                    Complex64::from_polar(w, 2.0 * std::f64::consts::PI * j as f64 / 3.0)
                })
                .collect(),
        );
        assert!(fidelity(&uniform, &twisted).unwrap() < 1e-12);
        assert!(!equal_up_to_global_phase(&uniform, &twisted, 1e-12).unwrap());
    }

    #[test]
    fn reorder_wires_swaps_digits() {
        let s = StateVector::basis_state(3, &[1, 2]).unwrap();
        let swapped = s.reorder_wires(&[1, 0]).unwrap();
        assert_eq!(swapped, StateVector::basis_state(3, &[2, 1]).unwrap());
    }

    #[test]
    fn reorder_wires_rejects_non_permutation() {
        let s = StateVector::basis_state(2, &[0, 1]).unwrap();
        assert!(s.reorder_wires(&[0, 0]).is_err());
        assert!(s.reorder_wires(&[0]).is_err());
    }

    #[test]
    fn contract_wire_drops_a_collapsed_wire() {
        let s = StateVector::basis_state(3, &[1, 2]).unwrap();
        let dropped = s.contract_wire(0, 1).unwrap();
        assert_eq!(dropped, StateVector::basis_state(3, &[2]).unwrap());
    }

    #[test]
    fn state_document_round_trips() {
        let s = StateVector::random_state(3, 2, 5).unwrap();
        let text = to_state_json(&s);
        let back = parse_state_json(&text).unwrap();
        assert!(max_amplitude_deviation(&s, &back).unwrap() < 1e-15);
    }

    #[test]
    fn state_document_rejects_bad_norm() {
        let text = r#"{"d": 2, "wires": 1, "amps": [[1.0, 0.0], [0.5, 0.0]]}"#;
        assert!(matches!(parse_state_json(text), Err(Error::StateFile(_))));
    }

    #[test]
    fn state_document_renormalizes_small_drift() {
        let text = r#"{"d": 2, "wires": 1, "amps": [[1.00001, 0.0], [0.0, 0.0]]}"#;
        let s = parse_state_json(text).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn digit_encoding_round_trips(d in 2usize..=7, wires in 1usize..=4, seed in 0u64..1024) {
            let len = d.pow(wires as u32);
            let index = (seed as usize) % len;
            let digits = decode_index(d, wires, index);
            prop_assert_eq!(encode_digits(d, &digits).unwrap(), index);
            for (w, &digit) in digits.iter().enumerate() {
                let s = StateVector::basis_state(d, &digits).unwrap();
                prop_assert_eq!(s.digit(index, w).unwrap(), digit);
            }
        }

        #[test]
        fn tensor_preserves_norm(d in 2usize..=5, seed in 0u64..256) {
            let a = StateVector::random_state(d, 1, seed).unwrap();
            let b = StateVector::random_state(d, 2, seed.wrapping_add(1)).unwrap();
            let ab = a.tensor(&b).unwrap();
            prop_assert!((ab.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn tensor_is_associative_to_rounding(d in 2usize..=4, seed in 0u64..128) {
            let a = StateVector::random_state(d, 1, seed).unwrap();
            let b = StateVector::random_state(d, 1, seed.wrapping_add(1)).unwrap();
            let c_ = StateVector::random_state(d, 1, seed.wrapping_add(2)).unwrap();
            let left = a.tensor(&b).unwrap().tensor(&c_).unwrap();
            let right = a.tensor(&b.tensor(&c_).unwrap()).unwrap();
            prop_assert!(max_amplitude_deviation(&left, &right).unwrap() < 1e-15);
        }
    }
}
