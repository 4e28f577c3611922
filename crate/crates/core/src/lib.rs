//! Exact-arithmetic verification engine for the finite computations behind a
//! local zeta integral on GSp(4) x GL(2) at deep GL(2) level: coset
//! enumeration for a compact open subgroup between the Borel and Klingen
//! congruence subgroups, double-coset partitions under conjugated Bessel
//! subgroups, Haar-volume counts, symbolic matrix identities over the
//! quadratic torus algebra, and a Gauss-sum model of the GL(2) newform.
//!
//! Everything is computed in truncated rings with explicit precision; no
//! floating point is used anywhere.

pub mod ring;
pub mod group;
pub mod coset;
pub mod support;
pub mod double_coset;
pub mod volume;
pub mod symbolic;
pub mod cyclotomic;
pub mod whittaker;
pub mod zeta;
pub mod obstruction;
pub mod report;

pub use ring::{Case, ExtElem, ExtRing, LocalConfig, LocalRing, ResidueRing, RingError};
