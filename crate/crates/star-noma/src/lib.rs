//! Simulator and optimization toolkit for a secure STAR-RIS assisted
//! MISO-NOMA downlink in which every surface element picks one of three
//! modes: reflection, transmission, or jamming.
//!
//! A base station with `N` antennas serves a near user on the reflection
//! side and a far user on the transmission side of the surface while an
//! eavesdropper listens on the reflection side. The toolkit
//!
//! * draws reproducible Rician/Rayleigh fading channels for every link,
//! * evaluates exact SINRs and rates for any beamformer/surface state,
//! * jointly optimizes base-station beamforming and the per-element
//!   surface configuration by alternating two convex subproblems
//!   (semidefinite relaxation plus penalty terms that drive the relaxed
//!   solution back to binary modes and rank-one matrices), and
//! * runs the Monte-Carlo sweeps behind the usual sum-rate, mode-count,
//!   and convergence figures, emitting plain-text tables.
//!
//! The crate ships its own small conic interior-point backend tailored to
//! the problem sizes that arise here (a few hundred linear rows coupling
//! Hermitian blocks of order `K+1`); see [`conic`] for the solver contract.

pub mod active;
pub mod alternating;
pub mod channel;
pub mod config;
pub mod conic;
pub mod harness;
pub mod modes;
pub mod oracle;
pub mod passive;
pub mod rate;

mod guide;

pub use config::{AlgorithmParams, ChannelParams, Geometry, ModelOptions, SystemConfig};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVec = nalgebra::DVector<C64>;
