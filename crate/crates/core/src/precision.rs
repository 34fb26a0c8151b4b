//! Working-precision configuration and the escalation ladder.

use crate::error::{Error, Result};

/// Configurable-precision contract used by every bisection in the crate.
///
/// `bisection_rel_tol` is represented as a power of two, `2^-rel_tol_bits`,
/// because in proof-constants mode it can be far below the smallest `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionConfig {
    mantissa_bits: u32,
    rel_tol_bits: u32,
    escalation_factor: u32,
    max_escalations: u32,
}

impl PrecisionConfig {
    pub const DEFAULT_BITS: u32 = 256;

    /// Standard configuration: `bits` mantissa bits, bisection tolerance
    /// `2^-(bits-16)`, doubling escalation, at most `max_escalations` retries.
    pub fn new(
        mantissa_bits: u32,
        rel_tol_bits: u32,
        escalation_factor: u32,
        max_escalations: u32,
    ) -> Result<Self> {
        if mantissa_bits < 64 {
            return Err(Error::Parse(format!(
                "mantissa_bits must be at least 64, got {mantissa_bits}"
            )));
        }
        // bisection_rel_tol >= 2^(-mantissa_bits + 8)
        if rel_tol_bits + 8 > mantissa_bits {
            return Err(Error::Parse(format!(
                "rel_tol_bits {rel_tol_bits} leaves fewer than 8 guard bits of {mantissa_bits}"
            )));
        }
        if escalation_factor < 2 {
            return Err(Error::Parse(format!(
                "escalation_factor must be at least 2, got {escalation_factor}"
            )));
        }
        Ok(Self {
            mantissa_bits,
            rel_tol_bits,
            escalation_factor,
            max_escalations,
        })
    }

    pub fn with_bits(bits: u32) -> Self {
        Self::new(bits, bits.saturating_sub(16), 2, 4)
            .expect("bits >= 64 always yields a valid config")
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.mantissa_bits
    }

    /// log2 of the bisection stopping tolerance (tolerance is `2^-this`).
    pub fn rel_tol_bits(&self) -> u32 {
        self.rel_tol_bits
    }

    pub fn escalation_factor(&self) -> u32 {
        self.escalation_factor
    }

    pub fn max_escalations(&self) -> u32 {
        self.max_escalations
    }

    /// Next rung of the ladder: multiply the mantissa, keep the same
    /// number of guard bits between tolerance and mantissa.
    pub fn escalate(&self) -> Self {
        let guard = self.mantissa_bits - self.rel_tol_bits;
        let bits = self.mantissa_bits.saturating_mul(self.escalation_factor);
        Self {
            mantissa_bits: bits,
            rel_tol_bits: bits - guard,
            escalation_factor: self.escalation_factor,
            max_escalations: self.max_escalations,
        }
    }
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        Self::with_bits(Self::DEFAULT_BITS)
    }
}
