//! Maximal-length (m-)sequences from a Fibonacci LFSR.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Primitive feedback polynomials, bit `i` set for the `x^i` term.
///
/// degree : polynomial
const PRIMITIVE: [(u32, u32); 11] = [
    (2, 0x7),    // x^2 + x + 1
    (3, 0xb),    // x^3 + x + 1
    (4, 0x13),   // x^4 + x + 1
    (5, 0x25),   // x^5 + x^2 + 1
    (6, 0x43),   // x^6 + x + 1
    (7, 0x83),   // x^7 + x + 1
    (8, 0x11d),  // x^8 + x^4 + x^3 + x^2 + 1
    (9, 0x211),  // x^9 + x^4 + 1
    (10, 0x409), // x^10 + x^3 + 1
    (11, 0x805), // x^11 + x^2 + 1
    (12, 0x1053), // x^12 + x^6 + x^4 + x + 1
];

/// A known primitive polynomial for `degree`, if tabulated.
pub fn default_taps(degree: u32) -> Option<u32> {
    PRIMITIVE.iter().find(|(d, _)| *d == degree).map(|(_, t)| *t)
}

/// Generates one period of the ±1 m-sequence of the given degree.
///
/// `taps` encodes the feedback polynomial with bit `i` for `x^i`; both the
/// `x^degree` and constant terms must be present. The register is run until
/// its state repeats and the polynomial is rejected unless that takes exactly
/// `2^degree - 1` steps.
pub fn generate_pn_sequence(degree: u32, taps: u32) -> Result<Vec<f64>> {
    if !(2..=24).contains(&degree) {
        return Err(Error::Config(alloc::format!("pn degree {degree} outside 2..=24")));
    }
    let expected = (1usize << degree) - 1;
    let top = 1u32 << degree;
    if taps & top == 0 || taps & 1 == 0 || taps >> (degree + 1) != 0 {
        return Err(Error::DegeneratePolynomial {
            degree,
            taps,
            period: 0,
            expected,
        });
    }
    let feedback = taps & (top - 1);
    let msb = degree - 1;
    // state bit i holds a_{k+i}
    let init = 1u32;
    let mut state = init;
    let mut seq = Vec::with_capacity(expected);
    loop {
        let bit = state & 1;
        seq.push(if bit == 0 { 1.0 } else { -1.0 });
        let next = (state & feedback).count_ones() & 1;
        state = (state >> 1) | (next << msb);
        if state == init || seq.len() > expected {
            break;
        }
    }
    if seq.len() != expected {
        return Err(Error::DegeneratePolynomial {
            degree,
            taps,
            period: seq.len(),
            expected,
        });
    }
    Ok(seq)
}

/// Circular autocorrelation `r[k] = Σ_n s[n]·s[(n+k) mod N]`.
pub fn circular_autocorrelation(seq: &[f64]) -> Vec<f64> {
    let n = seq.len();
    (0..n)
        .map(|k| (0..n).map(|i| seq[i] * seq[(i + k) % n]).sum())
        .collect()
}
