//! Performance models for the downlink of a multi-gateway LoRa network.
//!
//! The network is a pair of independent planar Poisson point processes, one
//! for gateways and one for end devices, with Rayleigh block fading, power-law
//! path loss, per-channel duty cycling at the gateways, and min-path-loss
//! association. The crate provides:
//!
//! - `specialfn`: the special functions the closed forms need (gamma, Gauss
//!   and Kummer hypergeometrics, the interference functional, adaptive
//!   quadrature on `[0, inf)`).
//! - `model`: parameter validation and the derived quantities every formula
//!   consumes (thinned densities, noise power, SF allocations, the inter-SF
//!   rejection matrix).
//! - `analysis`: closed-form channel-activity, scheduling, SIR/SNR coverage,
//!   and area-spectral-efficiency expressions.
//! - `simulator`: a Monte-Carlo implementation of the same network, both as a
//!   full spatial model (Voronoi loads, duty cycling, scheduling) and as a
//!   thinned interferer field that mirrors the analytical approximation.

pub mod analysis;
pub mod error;
pub mod model;
pub mod simulator;
pub mod specialfn;

pub use error::Error;
