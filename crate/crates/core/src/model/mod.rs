//! Two-layer data model: physical topology below, lightpaths above.

mod lightpath;
mod topology;
mod vt;

pub use lightpath::{FlowId, Lightpath, LightpathId};
pub use topology::{
    load_topology, parse_topology, FiberLink, LinkEntry, LinkId, Node, NodeEntry, NodeId,
    PhysicalTopology, TopologyDocument,
};
pub use vt::VirtualTopology;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, FIBER_SPEED_KM_PER_S};

/// One-way propagation delay of `length_km` of fiber, in seconds.
///
/// Uses the usual 2x10^5 km/s group velocity in silica.
pub fn propagation_delay_s<F: Scalar>(length_km: F) -> Result<F> {
    if length_km < F::zero() {
        return Err(Error::NegativeLength(length_km.to_f64_lossy()));
    }
    Ok(length_km / F::from_f64_lossy(FIBER_SPEED_KM_PER_S))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn propagation_delay_zero() {
        assert_eq!(propagation_delay_s(0.0_f64).unwrap(), 0.0);
    }

    #[test]
    fn propagation_delay_unit() {
        assert_eq!(propagation_delay_s(200_000.0_f64).unwrap(), 1.0);
    }

    #[test]
    fn propagation_delay_1000_km() {
        // 1000 / 2e5 = 5e-3, by hand
        assert_eq!(propagation_delay_s(1000.0_f64).unwrap(), 5.0e-3);
    }

    #[test]
    fn propagation_delay_rejects_negative() {
        assert!(matches!(
            propagation_delay_s(-1.0_f64),
            Err(Error::NegativeLength(_))
        ));
    }
}
