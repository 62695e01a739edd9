//! Capacity-scaling toolkit for hexagonal wireless mesh networks.
//!
//! The crate is organized around the pipeline used to measure and plan
//! per-node throughput in mesh deployments:
//!
//! * [`lattice`] — regular and randomly perturbed hexagonal lattices,
//!   ring enumeration, hop and Euclidean distances.
//! * [`radio`] — path loss, power thresholds, Shannon rates, and
//!   closed-form interference bounds for lattice geometries.
//! * [`traffic`] — source/destination pair generation, exact hop-distance
//!   distributions, and tail-bound helpers.
//! * [`single_tier`] — short-hop and long-hop transmission schemes,
//!   relay-load measurement, and throughput scaling fits.
//! * [`multi_tier`] — the tiered relay hierarchy, hop-limited tier-by-tier
//!   routing, and per-tier rates under spatial multiplexing or beamforming.
//! * [`planner`] — scalability condition checks, resource totals, and
//!   deployment parameter tables.
//!
//! Everything is deterministic for a fixed seed: lattices, traffic, and
//! routing reproduce bit-identically across runs and thread counts.

pub mod error;
pub mod lattice;
pub mod multi_tier;
pub mod planner;
pub mod radio;
pub mod single_tier;
pub mod traffic;

pub use error::{Error, Result};
