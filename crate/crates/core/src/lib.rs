//! Analysis toolkit for budget-constrained multi-agent organizations:
//! majority aggregation on trees under correlated errors and lossy channels,
//! the amplification/collapse phase transition, closed-form budget
//! allocation, continuous averaging floors, monotone message-length design
//! curves, and seeded Monte Carlo validation.

pub mod budget;
pub mod continuous;
pub mod dynamics;
pub mod envelope;
pub mod error;
pub mod maps;
pub mod simulate;

pub use error::{Error, Result};
pub use maps::{BiasValue, ChannelReliability, CorrelationCoefficient, FanIn};
