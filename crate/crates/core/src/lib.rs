//! Self-destructive site percolation on the square lattice: configuration
//! transforms, arm events, passage points, merger trees and forest fires,
//! with a reproducible Monte Carlo harness.

pub mod arms;
pub mod cluster;
pub mod error;
pub mod experiment;
pub mod fire;
mod flow;
mod grid;
pub mod harness;
pub mod lattice;
pub mod merger;
pub mod passage;
pub mod sdp;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{Coord, RandomSource, Rect, SiteConfig};
