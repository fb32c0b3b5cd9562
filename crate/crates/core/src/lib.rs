pub mod config;
pub mod engine;
pub mod error;
pub mod genus;
pub mod lattice;
pub mod lp;
pub mod nonfibre;
pub mod report;
pub mod surface;

pub use error::{Error, Result};
pub use lattice::{BlowupClass, DivisorClass};
pub use surface::{FibreKind, SurfaceType};
