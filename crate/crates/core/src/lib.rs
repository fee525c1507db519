//! Data-aided least-squares channel estimation for an iterative (turbo)
//! OFDM receiver, with a Monte-Carlo link simulator around it.
//!
//! Pipeline per frame: [`channel`] draws a tapped-delay-line channel and
//! transmits an LDPC-coded QAM grid; [`turbo`] estimates the channel
//! ([`estimation`]), equalises, demaps, decodes ([`ldpc`]) and feeds the
//! decoder's beliefs back through the soft modulator ([`constellation`]).
//! [`harness`] runs paired Monte-Carlo sweeps and the GA calibration of the
//! soft-param constant; [`cli`] is the command-line front end.

pub mod channel;
pub mod cli;
pub mod constellation;
pub mod estimation;
pub mod harness;
pub mod ldpc;
pub mod rng;
pub mod turbo;
