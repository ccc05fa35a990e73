pub mod engine;
pub mod error;
pub mod families;
pub mod lie_ops;
pub mod linalg;
pub mod oracles;
pub mod path;
pub mod report;
pub mod simultaneous;
pub mod spec_io;
pub mod tolerances;
pub mod weyl;

pub use error::{Error, Result};
pub use families::{AVector, Family, KElement, PElement};
pub use path::{Builtin, PathKind, PathSpec};
pub use tolerances::Tolerances;
pub use weyl::{WeylElement, WeylType};
