//! Hz / rad/s conversion. User-facing frequencies are in Hz, all internal math in rad/s.

use std::f64::consts::TAU;

pub fn hz_to_rad_s(hz: f64) -> f64 {
    hz * TAU
}

pub fn rad_s_to_hz(rad_s: f64) -> f64 {
    rad_s / TAU
}
