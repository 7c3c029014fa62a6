//! Wall-plug efficiency of a pulsed driver.

use crate::error::{Error, Result};
use crate::num::Real;

/// `η = P_optical / (P_driver + P_main)`.
pub fn driver_efficiency<F: Real>(p_optical: F, p_driver: F, p_main: F) -> Result<F> {
    for (name, v) in [
        ("P_optical", p_optical),
        ("P_driver", p_driver),
        ("P_main", p_main),
    ] {
        if !(v.is_finite() && v >= F::zero()) {
            return Err(Error::InvalidParameter {
                name,
                reason: "power must be finite and >= 0".into(),
            });
        }
    }
    let total = p_driver + p_main;
    if total <= F::zero() {
        return Err(Error::ZeroPower);
    }
    Ok(p_optical / total)
}
