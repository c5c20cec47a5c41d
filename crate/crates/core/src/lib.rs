//! Real-time resonance-model processing steered by a 2-D control position.
//!
//! The audio signal is filtered through a bank of two-pole resonators whose
//! gains, frequencies and decay times come from a simplicial (piecewise
//! linear) map evaluated at the performer's position. Level control keeps the
//! output loudness tied to the input, a feature tracker reports pitch,
//! amplitude and spectral centroid, and a small OSC-style protocol lets
//! clients subscribe to any of these values at a chosen rate.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the type to `f64`, which is what the engine
//! uses.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod gesture;
pub mod level;
pub mod protocol;
pub mod resonance;
pub mod scalar;
pub mod simplicial;
pub mod tracker;

pub use scalar::Scalar;

pub type Resonance64 = resonance::Resonance<f64>;
pub type ResonanceModel64 = resonance::ResonanceModel<f64>;
pub type ResonatorBank64 = resonance::ResonatorBank<f64>;
pub type AmplitudeFollower64 = level::AmplitudeFollower<f64>;
pub type Normalizer64 = level::Normalizer<f64>;
pub type Tracker64 = tracker::Tracker<f64>;
pub type FeatureFrame64 = tracker::FeatureFrame<f64>;
pub type SimplicialMap64 = simplicial::SimplicialMap<f64>;
pub type PoseFrame64 = gesture::PoseFrame<f64>;

pub type Resonance32 = resonance::Resonance<f32>;
pub type ResonanceModel32 = resonance::ResonanceModel<f32>;
pub type ResonatorBank32 = resonance::ResonatorBank<f32>;
pub type SimplicialMap32 = simplicial::SimplicialMap<f32>;
