//! Gate operations on qudit registers.
//!
//! The single-wire generators are the cyclic shift `X|j> = |j+1 mod d>`, the
//! phase gate `Z|j> = w^j |j>` with `w = exp(+2 pi i / d)`, and the discrete
//! Fourier gate `H|j> = (1/sqrt d) sum_k w^(jk) |k>`.  Two-wire gates are the
//! modular-sum controlled shift `CNOT|k,l> = |k, l+k mod d>`, its adjoint
//! `|k, l-k mod d>`, and SWAP.  `U|j> = X^m Z^n |j>` applies `Z^n` first and
//! `X^m` second.  Integer powers of X and Z are reduced mod d before any
//! phase is computed, so a power of exactly `d` is the identity with no
//! rounding error.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::StateVector;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Primitive d-th root of unity `exp(+2 pi i / d)`.
pub fn omega(d: usize) -> Complex64 {
    root_of_unity_pow(d, 1)
}

/// `exp(2 pi i k / d)` with the exponent reduced mod d first.
pub fn root_of_unity_pow(d: usize, k: i64) -> Complex64 {
    let k = k.rem_euclid(d as i64) as f64;
    if k == 0.0 {
        return ONE;
    }
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k / d as f64)
}

fn power_mod(power: i64, d: usize) -> usize {
    power.rem_euclid(d as i64) as usize
}

/// A gate bound to concrete register wires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    X { wire: usize, power: i64 },
    Z { wire: usize, power: i64 },
    H { wire: usize, adjoint: bool },
    Cnot { control: usize, target: usize, adjoint: bool },
    Swap { a: usize, b: usize },
    U { wire: usize, m: i64, n: i64 },
}

impl Gate {
    /// Wires the gate touches.
    pub fn wires(&self) -> Vec<usize> {
        match *self {
            Gate::X { wire, .. } | Gate::Z { wire, .. } | Gate::H { wire, .. } => vec![wire],
            Gate::U { wire, .. } => vec![wire],
            Gate::Cnot {
                control, target, ..
            } => vec![control, target],
            Gate::Swap { a, b } => vec![a, b],
        }
    }

    pub fn is_two_qudit(&self) -> bool {
        matches!(self, Gate::Cnot { .. } | Gate::Swap { .. })
    }
}

impl StateVector {
    /// Cyclic shift of `wire` by `power` steps: `|j> -> |j + power mod d>`.
    pub fn apply_x(&mut self, wire: usize, power: i64) -> Result<&mut Self> {
        let d = self.d();
        let p = power_mod(power, d);
        let stride = self.stride(wire)?;
        if p == 0 {
            return Ok(self);
        }
        let mut out = vec![ZERO; self.len()];
        for (index, amp) in self.amplitudes().iter().enumerate() {
            let j = index / stride % d;
            let shifted = index + ((j + p) % d) * stride - j * stride;
            out[shifted] = *amp;
        }
        self.replace_amplitudes(out);
        Ok(self)
    }

    /// Diagonal phase on `wire`: `|j> -> w^(j * power) |j>`.
    pub fn apply_z(&mut self, wire: usize, power: i64) -> Result<&mut Self> {
        let d = self.d();
        let p = power_mod(power, d);
        let stride = self.stride(wire)?;
        if p == 0 {
            return Ok(self);
        }
        let table: Vec<Complex64> = (0..d)
            .map(|j| root_of_unity_pow(d, (j * p) as i64))
            .collect();
        for (index, amp) in self.amplitudes_mut().iter_mut().enumerate() {
            let j = index / stride % d;
            *amp *= table[j];
        }
        Ok(self)
    }

    /// Discrete Fourier gate on `wire`; `adjoint` conjugates the kernel.
    pub fn apply_hadamard(&mut self, wire: usize, adjoint: bool) -> Result<&mut Self> {
        let d = self.d();
        let stride = self.stride(wire)?;
        let block = stride * d;
        let scale = 1.0 / (d as f64).sqrt();
        let sign: i64 = if adjoint { -1 } else { 1 };
        let table: Vec<Complex64> = (0..d * d)
            .map(|jk| root_of_unity_pow(d, sign * (jk % d) as i64))
            .collect();
        let amps = self.amplitudes().to_vec();
        let out = self.amplitudes_mut();
        for base in (0..amps.len()).step_by(block) {
            for offset in 0..stride {
                let cell = base + offset;
                for k in 0..d {
                    let mut acc = ZERO;
                    for j in 0..d {
                        acc += table[j * k % (d * d)] * amps[cell + j * stride];
                    }
                    out[cell + k * stride] = acc * scale;
                }
            }
        }
        Ok(self)
    }

    /// Modular-sum controlled shift: target digit gains (or, for the adjoint,
    /// loses) the control digit mod d.
    pub fn apply_cnot(&mut self, control: usize, target: usize, adjoint: bool) -> Result<&mut Self> {
        if control == target {
            return Err(Error::SameWire { wire: control });
        }
        let d = self.d();
        let control_stride = self.stride(control)?;
        let target_stride = self.stride(target)?;
        let mut out = vec![ZERO; self.len()];
        for (index, amp) in self.amplitudes().iter().enumerate() {
            let k = index / control_stride % d;
            let l = index / target_stride % d;
            let shifted = if adjoint { (l + d - k) % d } else { (l + k) % d };
            let new_index = index + shifted * target_stride - l * target_stride;
            out[new_index] = *amp;
        }
        self.replace_amplitudes(out);
        Ok(self)
    }

    /// Exchanges the digits of two wires.
    pub fn apply_swap(&mut self, a: usize, b: usize) -> Result<&mut Self> {
        if a == b {
            return Err(Error::SameWire { wire: a });
        }
        let d = self.d();
        let stride_a = self.stride(a)?;
        let stride_b = self.stride(b)?;
        let mut out = vec![ZERO; self.len()];
        for (index, amp) in self.amplitudes().iter().enumerate() {
            let da = index / stride_a % d;
            let db = index / stride_b % d;
            let new_index =
                index + db * stride_a - da * stride_a + da * stride_b - db * stride_b;
            out[new_index] = *amp;
        }
        self.replace_amplitudes(out);
        Ok(self)
    }

    /// Displacement operator `X^m Z^n` on one wire: `Z^n` first, then `X^m`.
    pub fn apply_u(&mut self, wire: usize, m: i64, n: i64) -> Result<&mut Self> {
        self.apply_z(wire, n)?;
        self.apply_x(wire, m)
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<&mut Self> {
        match *gate {
            Gate::X { wire, power } => self.apply_x(wire, power),
            Gate::Z { wire, power } => self.apply_z(wire, power),
            Gate::H { wire, adjoint } => self.apply_hadamard(wire, adjoint),
            Gate::Cnot {
                control,
                target,
                adjoint,
            } => self.apply_cnot(control, target, adjoint),
            Gate::Swap { a, b } => self.apply_swap(a, b),
            Gate::U { wire, m, n } => self.apply_u(wire, m, n),
        }
    }

    /// Applies the exact inverse of `gate`.
    pub fn apply_gate_adjoint(&mut self, gate: &Gate) -> Result<&mut Self> {
        match *gate {
            Gate::X { wire, power } => self.apply_x(wire, -power),
            Gate::Z { wire, power } => self.apply_z(wire, -power),
            Gate::H { wire, adjoint } => self.apply_hadamard(wire, !adjoint),
            Gate::Cnot {
                control,
                target,
                adjoint,
            } => self.apply_cnot(control, target, !adjoint),
            Gate::Swap { a, b } => self.apply_swap(a, b),
            Gate::U { wire, m, n } => {
                self.apply_x(wire, -m)?;
                self.apply_z(wire, -n)
            }
        }
    }
}

/// Dense matrix of a gate at dimension `d`: d x d for single-wire gates,
/// d^2 x d^2 for two-wire gates with the first listed wire as the high digit.
pub fn gate_matrix(gate: &Gate, d: usize) -> Result<Array2<Complex64>> {
    if d < 2 {
        return Err(Error::InvalidDimension { d });
    }
    let m = match *gate {
        Gate::X { power, .. } => {
            let p = power_mod(power, d);
            Array2::from_shape_fn((d, d), |(r, c)| if r == (c + p) % d { ONE } else { ZERO })
        }
        Gate::Z { power, .. } => {
            let p = power_mod(power, d);
            Array2::from_shape_fn((d, d), |(r, c)| {
                if r == c {
                    root_of_unity_pow(d, (c * p) as i64)
                } else {
                    ZERO
                }
            })
        }
        Gate::H { adjoint, .. } => {
            let sign: i64 = if adjoint { -1 } else { 1 };
            let scale = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
            Array2::from_shape_fn((d, d), |(r, c)| {
                root_of_unity_pow(d, sign * (r * c) as i64) * scale
            })
        }
        Gate::U { m, n, .. } => {
            let mp = power_mod(m, d);
            let np = power_mod(n, d);
            Array2::from_shape_fn((d, d), |(r, c)| {
                if r == (c + mp) % d {
                    root_of_unity_pow(d, (c * np) as i64)
                } else {
                    ZERO
                }
            })
        }
        Gate::Cnot { adjoint, .. } => Array2::from_shape_fn((d * d, d * d), |(row, col)| {
            let (k, l) = (col / d, col % d);
            let shifted = if adjoint { (l + d - k) % d } else { (l + k) % d };
            if row == k * d + shifted {
                ONE
            } else {
                ZERO
            }
        }),
        Gate::Swap { .. } => Array2::from_shape_fn((d * d, d * d), |(row, col)| {
            let (k, l) = (col / d, col % d);
            if row == l * d + k {
                ONE
            } else {
                ZERO
            }
        }),
    };
    Ok(m)
}
