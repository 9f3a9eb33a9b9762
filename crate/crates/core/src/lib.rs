//! Adiabatic accessibility, entropy meters and chart calibration.
//!
//! [`relation`] closes a finite accessibility preorder, [`normal`] gives
//! normal systems with explicit entropy and their canonical entropy,
//! [`meter`] and [`noneq`] bound entropies of other systems from the
//! preorder, and [`atlas`] glues local measurements. [`oracle`] is a naive
//! reimplementation used to cross-check the engine.

pub mod atlas;
pub mod error;
pub mod fixtures;
pub mod meter;
pub mod noneq;
pub mod normal;
pub mod oracle;
pub mod potential;
pub mod relation;
pub mod scale;
pub mod state;

pub use atlas::{Atlas, Calibration, Chart, GlobalEntropy, LoopReport};
pub use error::{Error, Result, Side};
pub use meter::{Coverage, EntropyEstimate, MeterSetup, MeterSpec, MonotoneCandidate, Status};
pub use noneq::ExtendedSpace;
pub use normal::{CanonicalEntropy, EntropyFn, NormalSystem, ReferencePair};
pub use potential::PotentialRelation;
pub use relation::{Accessibility, AccessibilityModel, Classification, ClosedModel, ModelConfig};
pub use scale::Scale;
pub use state::{CompositeState, SpaceCatalog, StateId, StateRef};
