#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN
extern crate alloc;

pub mod analytics;
pub mod channel;
pub mod error;
pub mod fft;
pub mod fingerprint;
pub mod optimize;
pub mod quad;
pub mod receiver;
pub mod rfchain;
pub mod rng;
pub mod signal;
pub mod special;
pub mod spectrum;
pub mod waveform;

pub use error::{Error, Result};
pub use signal::{ComplexSignal, Origin};
