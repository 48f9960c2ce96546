//! System-level simulator for a dense-urban micro-RAN built from one LTE
//! macro cell (doubling as mesh gateway) and a field of mmWave small-cell
//! base stations with integrated access/backhaul sectors.
//!
//! The crate covers:
//! - world and traffic generation ([`scenario`]),
//! - link budgets and rate mapping for LTE and 60 GHz links ([`radio`]),
//! - the three-step ON/OFF + backhaul-path management algorithm and the
//!   two reference activation policies ([`mesh`]),
//! - sector-level power accounting ([`energy`]),
//! - a Monte-Carlo link-level module for a 2x2 dual-polarized Rician
//!   backhaul channel ([`linklevel`]),
//! - config handling and the experiment runner that emits CSV/JSON
//!   artifacts ([`config`], [`runner`]).
//!
//! Everything is deterministic per seed: all randomness flows through
//! [`seed::child_seed`] and `ChaCha8` streams, so identical configs and
//! seeds produce byte-identical artifacts.

pub mod config;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod linklevel;
pub mod mesh;
pub mod radio;
pub mod runner;
pub mod scenario;
pub mod seed;

pub use error::SimError;
