//! BFGS, splines, the sequential trajectory optimizer and protocol assembly.

mod bfgs;
mod protocol;
mod sequential;
mod spline;
mod trajectory;

pub use bfgs::{bfgs_minimize, BfgsOptions, BfgsResult, BfgsStatus};
pub use protocol::{assemble_protocol, ControlFields, Protocol, ProtocolKind};
pub use sequential::{sequential_optimize, ActionBackend, ActionEvaluator, SequentialOptions, DEFAULT_BOUNDARY_WEIGHT, DEFAULT_M_POINTS};
pub use spline::{CubicSpline, SplineBoundary};
pub use trajectory::{uniform_grid, ParamName, ParamTrajectory};
