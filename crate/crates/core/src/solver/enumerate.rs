use crate::fleetsim::{Assignment, RtvGraph};

use super::SolverError;

pub use crate::fleetsim::assign::ENUMERATION_LIMIT;

/// Exhaustive optimum of the reduced assignment formulation, used as a test
/// oracle. Fails with [`SolverError::InstanceTooLarge`] when the number of
/// vehicle choice combinations exceeds [`ENUMERATION_LIMIT`].
pub fn enumerate_assignments(rtv: &RtvGraph) -> Result<Assignment, SolverError> {
    crate::fleetsim::assign::enumerate(rtv)
}
