//! Knowledge-base engine and data-augmentation toolkit for visualization
//! design pairs.

pub mod api;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod augment;
pub mod enumerator;
pub mod kb;
pub mod labeling;
pub mod training;

pub use error::{KbError, SpecError};
