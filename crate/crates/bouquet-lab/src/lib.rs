//! Numerics for the family f(z) = λ Σ_k exp(ω^k z), ω = e^{2πi/p}: plane
//! partition, zeros and critical points, inverse branches and periodic points,
//! hairs, and escape-time rendering.

pub mod cmath;
pub mod config;
pub mod critical;
pub mod error;
pub mod escape;
pub mod family;
pub mod geometry;
pub mod hair;
pub mod hp;
pub mod output;
pub mod suite;
pub mod symbolic;
pub mod tower;
