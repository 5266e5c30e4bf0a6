//! Spectral diagnostics for training telemetry.
//!
//! The crate has two halves. The measurement side ([`spectra`], [`efficiency`],
//! [`ingest`]) turns dumped activations, per-sample gradients and run manifests into
//! covariance spectra, band exponents and early-prediction statistics. The theory side
//! ([`dynamics`], [`mechanisms`]) evaluates closed-form results for a cyclic toy task
//! and checks them against independent numerical oracles ([`oracle`], [`verify`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod efficiency;
pub mod error;
pub mod ingest;
pub mod mechanisms;
pub mod numkernel;
pub mod oracle;
pub mod simulate;
pub mod spectra;
pub mod verify;

pub use error::{Error, Result};
pub use numkernel::{DenseMatrix, EigenResult, SvdResult};
pub use spectra::{RankWindow, ScaleTier, Spectrum, TailFit};
