//! Antenna placement and transmit-power allocation for single-waveguide
//! pinching-antenna downlinks.
//!
//! The crate covers three transmission regimes:
//!
//! - [`oma_fairness`]: max-min rate and total-power minimization under TDMA,
//!   both solved in closed form, plus the gain over a fixed antenna.
//! - [`oma_greedy`]: two-user throughput maximization with rate floors, via a
//!   one-dimensional placement search or the high-SNR cubic-root shortcut.
//! - [`noma`]: two-user NOMA power minimization with SIC.
//!
//! [`outage`] evaluates the per-user power outage probability analytically
//! (two users) and by Monte Carlo. [`oracle`] holds the brute-force searches
//! used to certify the closed forms.
//!
//! Rates are in nats per channel use, powers in watts and lengths in meters.

pub mod channel;
pub mod cubic;
mod error;
pub mod noma;
pub mod oma_fairness;
pub mod oma_greedy;
pub mod oracle;
pub mod outage;
pub mod rng;

pub use channel::{PlacementSolution, SystemParams, User, UserLayout};
pub use error::{Error, Result};
pub use oracle::{GridSpec, Sense};
