//! Unit conversions used at I/O boundaries. Internals run in kelvin and seconds.

pub const ZERO_CELSIUS_K: f64 = 273.15;
pub const SECONDS_PER_HOUR: f64 = 3600.0;
pub const SECONDS_PER_DAY: f64 = 86_400.0;
pub const JOULES_PER_KWH: f64 = 3.6e6;

#[inline]
pub fn c_to_k(celsius: f64) -> f64 {
    celsius + ZERO_CELSIUS_K
}

#[inline]
pub fn k_to_c(kelvin: f64) -> f64 {
    kelvin - ZERO_CELSIUS_K
}

/// Seconds since local midnight for a UTC timestamp interpreted as local clock time.
#[inline]
pub fn seconds_of_day(timestamp: i64) -> i64 {
    timestamp.rem_euclid(86_400)
}

/// Fractional hour of day in `[0, 24)`.
#[inline]
pub fn hour_of_day(timestamp: i64) -> f64 {
    seconds_of_day(timestamp) as f64 / SECONDS_PER_HOUR
}
