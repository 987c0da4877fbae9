//! Heralded continuous-variable teleportation as a Gaussian channel
//! simulator.
//!
//! * [`gaussian`]: Gaussian states, beamsplitters, loss and homodyne
//!   conditioning.
//! * [`teleporter`]: analytic output moments, fidelity and `T_q`/`V_q`.
//! * [`mbnla`]: the measurement-based noiseless linear amplifier filter.
//! * [`channel`]: `(τ, ν)` channels, classification, Choi states and
//!   entanglement of formation.
//! * [`montecarlo`]: seeded, sharded simulation of the heralded protocol.
//!
//! ```
//! use teleportsim::{teleporter, TeleporterConfig};
//!
//! let cfg = TeleporterConfig::unity_gain(0.0, [1.0, 1.0]);
//! let out = teleporter::output_moments(&cfg)?;
//! assert!((out.var_x - 3.0).abs() < 1e-12);
//! # Ok::<(), teleportsim::Error>(())
//! ```

pub mod channel;
pub mod error;
pub mod gaussian;
pub mod mbnla;
pub mod montecarlo;
pub mod teleporter;

pub use channel::{ChannelClass, ChannelKind, ChannelParams};
pub use error::{Error, Result};
pub use gaussian::{EprSpec, GaussianState, Quadrature};
pub use mbnla::FilterSpec;
pub use montecarlo::{RunOptions, TrialBatch};
pub use teleporter::{OutputMoments, TeleporterConfig, TvParameters};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/gaussian-states.md")]
    mod gaussian_states {}
    #[doc = include_str!("../../../book/src/teleporter.md")]
    mod teleporter {}
    #[doc = include_str!("../../../book/src/mbnla.md")]
    mod mbnla {}
    #[doc = include_str!("../../../book/src/channels.md")]
    mod channels {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
}
