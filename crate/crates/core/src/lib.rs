//! Link-level Monte-Carlo simulator for grant-free Massive MIMO uplink URLLC.
//!
//! The crate models a single cell in which a multi-antenna base station serves
//! single-antenna UEs that transmit without scheduling grants. Each simulated
//! trial runs the full receive chain:
//!
//! 1. draw a UE population, large-scale fading and an activity pattern
//!    ([`scenario`]),
//! 2. generate small-scale fading ([`channel`]) and the received pilot signal
//!    built from a [`pilots::PilotBook`],
//! 3. decide which UEs are active ([`detection`]),
//! 4. estimate the channels of the detected UEs ([`estimation`]),
//! 5. build MMSE combiners and score per-UE SINR and effective throughput
//!    ([`link`]),
//!
//! and [`harness`] aggregates many trials into throughput CDFs, reliability
//! quantiles and misdetection / false-alarm rates.
//!
//! Two pilot settings are supported: coherence-interval pilots (orthogonal or
//! Gold sequences occupying `tau` symbols of every subcarrier) and the
//! PRB-compliant layout in which a 24-symbol Gold sequence is spread over six
//! pilot-bearing subcarriers, four symbols each.
//!
//! ```no_run
//! use mmimo_urllc::{harness, Scenario};
//!
//! let scenario = Scenario::default();
//! let result = harness::run(&scenario, 200).unwrap();
//! println!("P_MD = {}", result.p_md());
//! ```

pub mod channel;
pub mod detection;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod linalg;
pub mod link;
pub mod pilots;
pub mod scenario;
pub mod stats;

pub use error::{Error, Result};
pub use scenario::Scenario;
