//! Geometry of hyperbolic collars and cusps, holomorphic quadratic
//! differentials on collars in Laurent form, and bookkeeping for surfaces
//! degenerating by pinching closed geodesics.

pub mod collar;
pub mod cusp;
pub mod error;
pub mod io;
pub mod laurent;
mod modes;
pub mod output;
pub mod quadrature;
pub mod spaces;
pub mod sweep;
pub mod topology;

pub use collar::{CollarParams, ThinWindow};
pub use cusp::PunctureGerm;
pub use error::{Error, Result};
pub use laurent::{LaurentQD, SubCollar};
pub use output::{Row, Status, SweepReport};
pub use spaces::{MultiCollarQD, QDSpace};
pub use sweep::SweepConfig;
pub use topology::{PinchKind, PinchMove, SurfaceTopology};
