pub mod arith;
pub mod error;
pub mod measures;
pub mod padic;

pub use error::{Error, Result};
pub use padic::{PadicValue, ZeroTest};
pub mod cyclofield;
pub mod polymod;

pub use cyclofield::{BaseRing, FiniteOrderCharacter, LocalElem, LocalRing, SeedPolicy};
pub use measures::{FractionalMeasure, IwasawaMeasure};
pub mod coleman;
pub mod report;
pub mod series;
pub mod stark;
pub use report::Check;
pub use series::PowerSeries;
pub mod characters;
pub mod hpfloat;
pub mod lfunctions;
pub mod linalg;
pub mod suites;
