//! Classical distillation of sifted keys: QBER sampling, parity-based
//! reconciliation with leakage accounting, and Toeplitz privacy
//! amplification.

mod bits;
mod cascade;
mod qber;
mod toeplitz;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bits::{BitString, KeyMaterial, KeyStage};
pub use cascade::{block_size_for, reconcile, Reconciliation};
pub use qber::{estimate_qber, QberEstimate};
pub use toeplitz::{binary_entropy, final_key_length, privacy_amplify, security_margin, toeplitz_hash};

use crate::rng::derive_seed;

/// Default secrecy parameter, giving a 64-bit margin.
pub const DEFAULT_EPSILON: f64 = 1.0 / 4_294_967_296.0;

#[derive(Debug, Error, PartialEq)]
pub enum PostprocError {
    #[error("bit strings differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("sample is empty")]
    EmptySample,
    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("value {value} at position {position} is not a bit")]
    InvalidBit { position: usize, value: u8 },
    #[error("character {value:?} at position {position} is not a bit")]
    InvalidBitChar { position: usize, value: char },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistillConfig {
    pub epsilon: f64,
    pub passes: usize,
}

impl Default for DistillConfig {
    fn default() -> Self {
        DistillConfig {
            epsilon: DEFAULT_EPSILON,
            passes: 2,
        }
    }
}

impl DistillConfig {
    /// `epsilon = 1` is accepted and drops the margin entirely.
    pub fn validate(&self) -> Result<(), PostprocError> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(PostprocError::InvalidParameter {
                name: "epsilon",
                value: self.epsilon,
            });
        }
        if self.passes == 0 {
            return Err(PostprocError::InvalidParameter { name: "passes", value: 0.0 });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillReport {
    /// Raw key length going in.
    pub n: usize,
    pub qber: f64,
    /// `None` when reconciliation was skipped at zero QBER.
    pub block_size: Option<usize>,
    pub leaked: usize,
    pub residual_errors: usize,
    pub final_length: usize,
    pub alice: KeyMaterial,
    pub bob: KeyMaterial,
}

impl DistillReport {
    pub fn keys_agree(&self) -> bool {
        self.alice.bits == self.bob.bits
    }
}

/// Reconciles and compresses a pair of raw keys using an already measured
/// QBER. Reconciliation is skipped when `qber` is zero.
pub fn distill(
    alice: &BitString,
    bob: &BitString,
    qber: f64,
    config: &DistillConfig,
    seed: u64,
) -> Result<DistillReport, PostprocError> {
    config.validate()?;
    bits::check_lengths(alice, bob)?;
    let n = alice.len();
    let alice_raw = KeyMaterial::new(KeyStage::Sifted, alice.clone(), 0);
    let bob_raw = KeyMaterial::new(KeyStage::Sifted, bob.clone(), 0);

    let block_size = block_size_for(qber, n);
    let (bob_rec, leaked, residual_errors) = match block_size {
        Some(k) => {
            let r = reconcile(alice, bob, config.passes, k, derive_seed(seed, 0))?;
            (r.corrected, r.leaked, r.residual_errors)
        }
        None => (bob.clone(), 0, alice.hamming_distance(bob)?),
    };
    let alice_rec = alice_raw.advance(KeyStage::Reconciled, alice.clone(), leaked);
    let bob_rec = bob_raw.advance(KeyStage::Reconciled, bob_rec, leaked);

    let pa_seed = derive_seed(seed, 1);
    let alice_final = privacy_amplify(&alice_rec.bits, leaked, qber, config.epsilon, pa_seed);
    let bob_final = privacy_amplify(&bob_rec.bits, leaked, qber, config.epsilon, pa_seed);
    Ok(DistillReport {
        n,
        qber,
        block_size,
        leaked,
        residual_errors,
        final_length: alice_final.len(),
        alice: alice_rec.advance(KeyStage::Final, alice_final, 0),
        bob: bob_rec.advance(KeyStage::Final, bob_final, 0),
    })
}
