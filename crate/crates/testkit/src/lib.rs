//! Independent oracles for verifying the main crate, plus synthetic data
//! generators.
//!
//! Nothing here calls the implementation path it checks: IoU is estimated by
//! Monte-Carlo point sampling against the box definition alone, AP is
//! recomputed by a direct brute-force evaluator, and gradients are probed
//! with central finite differences of the loss values.

pub mod brute;
pub mod fdiff;
pub mod mc;
pub mod synth;
