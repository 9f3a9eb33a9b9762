//! Shared fixture access for the criterion benches.

pub use adiabat_core::fixtures;
