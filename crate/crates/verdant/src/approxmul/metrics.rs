//! Exhaustive error characterization of approximate multipliers.
//!
//! All `2^(2B)` operand pairs are evaluated, 64 at a time through the
//! bit-parallel netlist simulator: operand `a` is broadcast across lanes and
//! operand `b` sweeps lane-striped patterns, so one forward pass covers 64
//! consecutive `b` values. Accumulation order is fixed (`a` ascending outer,
//! `b` ascending inner), which keeps the floating-point MRED sum bit-for-bit
//! reproducible and equal to the naive nested-loop evaluation.

use serde::{Deserialize, Serialize};

use crate::approxmul::netlist::Netlist;
use crate::error::{Error, Result};

/// Largest bitwidth characterized exhaustively (2^24 operand pairs).
pub const MAX_EXHAUSTIVE_BITWIDTH: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// Mean absolute error over all operand pairs.
    pub med: f64,
    /// Mean relative error distance; exact product 0 compares against 1.
    pub mred: f64,
    /// Fraction of operand pairs with a wrong product.
    pub er: f64,
    /// Worst-case absolute error.
    pub wce: f64,
}

impl ErrorMetrics {
    pub const ZERO: ErrorMetrics = ErrorMetrics { med: 0.0, mred: 0.0, er: 0.0, wce: 0.0 };

    pub fn is_exact(&self) -> bool {
        self.med == 0.0 && self.mred == 0.0 && self.er == 0.0 && self.wce == 0.0
    }
}

/// Lane-striped constants: bit `lane` of `LANE_PATTERNS[j]` equals bit `j`
/// of `lane`, so the 64 lanes enumerate 64 consecutive values of the low 6
/// operand bits.
const LANE_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Exhaustively characterizes `netlist` against the exact product.
pub fn error_metrics(netlist: &Netlist) -> Result<ErrorMetrics> {
    let width = netlist.bitwidth();
    if width > MAX_EXHAUSTIVE_BITWIDTH {
        return Err(Error::Unsupported(format!(
            "exhaustive characterization is limited to bitwidth <= {MAX_EXHAUSTIVE_BITWIDTH}, got {width}"
        )));
    }
    let n = 1u64 << width;
    let lanes = n.min(64) as usize;
    let lane_bits = lanes.trailing_zeros();
    let blocks = n >> lane_bits;

    let mut scratch = vec![0u64; netlist.net_buffer_len()];
    let width = width as usize;
    let mut abs_sum: u128 = 0;
    let mut rel_sum: f64 = 0.0;
    let mut wrong: u64 = 0;
    let mut worst: u64 = 0;

    for a in 0..n {
        // Operand a is identical in every lane.
        for (bit, slot) in scratch[..width].iter_mut().enumerate() {
            *slot = if (a >> bit) & 1 == 1 { !0u64 } else { 0 };
        }
        for block in 0..blocks {
            let b_base = block << lane_bits;
            for bit in 0..width {
                scratch[width + bit] = if (bit as u32) < lane_bits {
                    LANE_PATTERNS[bit]
                } else if (b_base >> bit) & 1 == 1 {
                    !0u64
                } else {
                    0
                };
            }
            netlist.eval_words(&mut scratch);
            for lane in 0..lanes {
                let b = b_base + lane as u64;
                let mut approx = 0u64;
                for (bit, &po) in netlist.outputs().iter().enumerate() {
                    approx |= ((scratch[po] >> lane) & 1) << bit;
                }
                let exact = a * b;
                let err = exact.abs_diff(approx);
                if err != 0 {
                    wrong += 1;
                    abs_sum += err as u128;
                    worst = worst.max(err);
                    rel_sum += err as f64 / exact.max(1) as f64;
                }
            }
        }
    }

    let total = (n as f64) * (n as f64);
    Ok(ErrorMetrics {
        med: abs_sum as f64 / total,
        mred: rel_sum / total,
        er: wrong as f64 / total,
        wce: worst as f64,
    })
}
