//! Universal polarization for finite-state processes with memory.
//!
//! The crate is organized around the pipeline used to build a universal polar
//! code for a family of hidden-Markov channels:
//!
//! * [`contraction`] — nonnegative-matrix algebra: projective distance,
//!   subrectangularity, Birkhoff contraction coefficients.
//! * [`hmm`] — hidden Markov models, observation-matrix decomposition,
//!   forgetfulness certification and mutual-information decay bounds.
//! * [`process`] — joint (state, symbol, observation) processes, window
//!   entropies and forgetfulness reports.
//! * [`slowstage`] — the basic slow transform, its observation-truncated
//!   variant, and entropy-evolution envelopes.
//! * [`faststage`] — the Arıkan transform, Bhattacharyya-bound evolution and
//!   universal fast-polarization constants.
//! * [`codec`] — the composed encoder and successive-cancellation trellis
//!   decoder, plus exact oracles and genie-aided estimators.

pub mod codec;
pub mod contraction;
pub mod faststage;
pub mod hmm;
pub mod process;
pub mod slowstage;
pub mod util;
