//! Angle helpers. Public interfaces take degrees; the math runs in radians.

/// `(cos, sin)` of an angle in degrees.
///
/// Multiples of 90° return exact zeros and ones so that pure H and V
/// messages carry exactly zero weight in the absent component.
pub fn unit_from_degrees(deg: f64) -> [f64; 2] {
    let reduced = deg.rem_euclid(360.0);
    if reduced == 0.0 {
        [1.0, 0.0]
    } else if reduced == 90.0 {
        [0.0, 1.0]
    } else if reduced == 180.0 {
        [-1.0, 0.0]
    } else if reduced == 270.0 {
        [0.0, -1.0]
    } else {
        let (s, c) = deg.to_radians().sin_cos();
        [c, s]
    }
}

/// `(cos, sin)` of an angle in radians.
pub fn unit_from_radians(rad: f64) -> [f64; 2] {
    let (s, c) = rad.sin_cos();
    [c, s]
}

/// `n` equally spaced angles in degrees covering `[0, 360)`.
pub fn uniform_phi_grid_deg(n: usize) -> Vec<f64> {
    (0..n).map(|i| 360.0 * i as f64 / n as f64).collect()
}
