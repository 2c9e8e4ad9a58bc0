//! Boundary unit conversions. Internally every frequency is an angular
//! frequency in rad/μs and every rate is in μs⁻¹; files and CLI use MHz.

use std::f64::consts::TAU;

/// Ordinary frequency in MHz to angular frequency in rad/μs.
pub fn mhz_to_rad_per_us(f_mhz: f64) -> f64 {
    TAU * f_mhz
}

pub fn rad_per_us_to_mhz(omega: f64) -> f64 {
    omega / TAU
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let w = mhz_to_rad_per_us(4.0 / TAU);
        assert!((w - 4.0).abs() < 1e-15);
        assert!((rad_per_us_to_mhz(w) - 4.0 / TAU).abs() < 1e-15);
    }
}
