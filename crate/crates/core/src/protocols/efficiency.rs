use super::{ProtocolId, SessionTranscript};

/// Efficiency ceiling of the four-particle time-reserved EPR scheme, kept as
/// a comparison baseline.
pub const TIME_RESERVED_BASELINE: f64 = 0.125;

/// Upper bound on final key bits per prepared state.
pub fn efficiency_bound(protocol: ProtocolId) -> f64 {
    match protocol {
        ProtocolId::Ghz3 => 1.0,
        ProtocolId::Ghz1 | ProtocolId::Ghz2 | ProtocolId::Bell4 | ProtocolId::Bell5 => 0.5,
    }
}

/// Final key bits per prepared state.
pub fn measured_efficiency(transcript: &SessionTranscript) -> f64 {
    transcript.final_key_bits() as f64 / transcript.config.num_states as f64
}
