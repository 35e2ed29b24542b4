//! Simulation of key distribution through a trusted center using GHZ
//! triplets and Bell states.

pub mod adversary;
pub mod netsim;
pub mod postproc;
pub mod protocols;
pub mod qstate;
pub mod register;
pub mod rng;
