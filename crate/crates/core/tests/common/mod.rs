#![allow(dead_code)]

use std::f64::consts::PI;

use bt_zeros::geometry::ChartPoint;
use bt_zeros::kernel::bergman_diag_with;
use bt_zeros::sections::Basis;
use bt_zeros::toeplitz::OperatorMatrix;
use num_complex::Complex64;

/// Exact `E[#zeros in B(w, ρ)] − k sin²ρ` for zeros of `T s`.
///
/// The expected zero density is `(k/2π)ω + (1/π)∂∂̄ log B` with `B` the twisted
/// kernel diagonal, so the excess is the flux `(1/4π)∮ ∂ₙ log B` over the chart
/// circle bounding the ball.
pub fn exact_excess(op: &OperatorMatrix, basis: &Basis, w: Complex64, rho: f64) -> f64 {
    let a = (1.0 + w.norm_sqr()) * rho.sin().powi(2);
    assert!(a < 1.0, "ball contains the point at infinity");
    let c = w / (1.0 - a);
    let r = (a * (1.0 + w.norm_sqr() - a)).sqrt() / (1.0 - a);
    let log_b = |z: Complex64| bergman_diag_with(basis, op, ChartPoint::Finite(z)).ln();
    let nt = 128;
    let h = 1e-5 * r;
    let flux: f64 = (0..nt)
        .map(|j| {
            let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / nt as f64);
            let p = c + e * r;
            (log_b(p + e * h) - log_b(p - e * h)) / (2.0 * h)
        })
        .sum::<f64>()
        * r
        * 2.0
        * PI
        / nt as f64;
    flux / (4.0 * PI)
}
