//! Uniform law on the rotated ellipse `e^{i theta/2} E_rho`, where
//! `E_rho = { z : Re(z)^2/(1+rho)^2 + Im(z)^2/(1-rho)^2 <= 1 }` and
//! `rho = rho1 (tau + p)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::quadrature::{integrate, QuadOptions};
use crate::{Error, Result};

/// Parameters of the limiting law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticLawParams {
    pub rho1: f64,
    pub theta: f64,
    pub tau: f64,
    pub p: f64,
    pub rho: f64,
}

/// `rho1 (tau + p)`, rejected when `|rho| >= 1`.
pub fn rho_effective(rho1: f64, tau: f64, p: f64) -> Result<f64> {
    let rho = rho1 * (tau + p);
    if !(rho.abs() < 1.0) {
        return Err(Error::DegenerateLaw { rho });
    }
    Ok(rho)
}

impl EllipticLawParams {
    pub fn new(rho1: f64, theta: f64, tau: f64, p: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&tau) || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(format!("tau = {tau}, p = {p} outside [-1, 1] x [0, 1]")));
        }
        let rho = rho_effective(rho1, tau, p)?;
        Ok(Self { rho1, theta, tau, p, rho })
    }

    /// Law with effective parameter `rho` directly (dense, `p = 1`, `tau = 0`
    /// for `rho >= 0`).
    pub fn with_rho(rho: f64, theta: f64) -> Result<Self> {
        if rho >= 0.0 {
            Self::new(rho, theta, 0.0, 1.0)
        } else {
            Self::new(-rho, theta, -1.0, 0.0)
        }
    }

    pub fn semi_axes(&self) -> (f64, f64) {
        (1.0 + self.rho, 1.0 - self.rho)
    }

    pub fn rotation(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta / 2.0)
    }

    /// Rotates `z` back into the frame where the ellipse is axis aligned.
    pub fn unrotate(&self, z: Complex64) -> Complex64 {
        z * self.rotation().conj()
    }

    /// The same ellipse without rotation.
    pub fn unrotated(&self) -> Self {
        Self { theta: 0.0, ..*self }
    }
}

/// `1 - q(z)` with `q` the quadratic form of the (inflated) ellipse; positive
/// inside, zero on the boundary, negative outside.
pub fn signed_margin_inflated(z: Complex64, params: &EllipticLawParams, inflation: f64) -> f64 {
    let w = params.unrotate(z);
    let (a, b) = params.semi_axes();
    let (a, b) = (a * inflation, b * inflation);
    1.0 - (w.re * w.re / (a * a) + w.im * w.im / (b * b))
}

pub fn signed_margin(z: Complex64, params: &EllipticLawParams) -> f64 {
    signed_margin_inflated(z, params, 1.0)
}

/// Boundary points count as inside.
pub fn contains(z: Complex64, params: &EllipticLawParams) -> bool {
    signed_margin(z, params) >= 0.0
}

pub fn density(z: Complex64, params: &EllipticLawParams) -> f64 {
    if contains(z, params) {
        1.0 / (PI * (1.0 - params.rho * params.rho))
    } else {
        0.0
    }
}

/// Rejection sampling from the bounding box of the unrotated ellipse.
pub fn sample_law<R: Rng + ?Sized>(params: &EllipticLawParams, rng: &mut R) -> Complex64 {
    let (a, b) = params.semi_axes();
    let flat = params.unrotated();
    loop {
        let w = Complex64::new(a * (2.0 * rng.random::<f64>() - 1.0), b * (2.0 * rng.random::<f64>() - 1.0));
        if contains(w, &flat) {
            return w * params.rotation();
        }
    }
}

/// `int z^2 d mu(z) = e^{i theta} rho`.
pub fn second_moment(params: &EllipticLawParams) -> Complex64 {
    Complex64::from_polar(params.rho, params.theta)
}

/// `num_points` samples of the boundary curve, starting on the major axis.
pub fn boundary_polyline(params: &EllipticLawParams, num_points: usize) -> Vec<Complex64> {
    let (a, b) = params.semi_axes();
    let rot = params.rotation();
    (0..num_points)
        .map(|k| {
            let t = TAU * k as f64 / num_points as f64;
            Complex64::new(a * t.cos(), b * t.sin()) * rot
        })
        .collect()
}

pub const BOUNDARY_POINTS: usize = 512;

/// Absolute error the potential must reach before it is reported.
pub const POTENTIAL_TOLERANCE: f64 = 1e-4;

/// `int_0^s r log r dr`.
fn radial_primitive(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        0.5 * s * s * s.ln() - 0.25 * s * s
    }
}

/// Roots of `|w0 + s d|` hitting the unit level of the ellipse quadratic form
/// along direction `phi`, as `(s1, s2)` with `s1 <= s2`, or `None`.
fn ray_hits(w0: Complex64, phi: f64, a: f64, b: f64) -> Option<(f64, f64)> {
    let (c, s) = (phi.cos(), phi.sin());
    let qa = c * c / (a * a) + s * s / (b * b);
    let qb = 2.0 * (w0.re * c / (a * a) + w0.im * s / (b * b));
    let qc = w0.re * w0.re / (a * a) + w0.im * w0.im / (b * b) - 1.0;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    // numerically stable pair
    let q = -0.5 * (qb + qb.signum() * root);
    let (r1, r2) = if q != 0.0 { (q / qa, qc / q) } else { (-root / (2.0 * qa), root / (2.0 * qa)) };
    Some((r1.min(r2), r1.max(r2)))
}

/// Logarithmic potential `U(z) = -int log|w - z| d mu(w)`.
///
/// Integrates in polar coordinates centred at `z`: the radial integral of
/// `r log r` is done in closed form, leaving an adaptive quadrature over the
/// ray angle. For exterior points the angle is restricted to the tangent cone
/// and reparametrized to remove the square-root endpoint behaviour.
pub fn log_potential_theoretical(z: Complex64, params: &EllipticLawParams) -> Result<f64> {
    if !(params.rho.abs() < 1.0) {
        return Err(Error::DegenerateLaw { rho: params.rho });
    }
    let (a, b) = params.semi_axes();
    let w0 = params.unrotate(z);
    let norm = 1.0 / (PI * a * b);
    let opts = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-13, max_intervals: 2000, fail_above: POTENTIAL_TOLERANCE };

    let inside = w0.re * w0.re / (a * a) + w0.im * w0.im / (b * b) <= 1.0;
    if inside {
        let r = integrate(
            |phi| match ray_hits(w0, phi, a, b) {
                Some((_, s2)) => radial_primitive(s2.max(0.0)),
                None => 0.0,
            },
            0.0,
            TAU,
            &opts,
        )?;
        return Ok(-norm * r.value);
    }

    // tangent cone: in scaled coordinates the ellipse is the unit disk
    let scaled = Complex64::new(w0.re / a, w0.im / b);
    let dist = scaled.norm();
    let centre = (-scaled).arg();
    let half_width = (1.0 / dist).asin();
    let to_phi = |psi: f64| (b * psi.sin()).atan2(a * psi.cos());
    let phi_lo = to_phi(centre - half_width);
    let mut phi_hi = to_phi(centre + half_width);
    while phi_hi <= phi_lo {
        phi_hi += TAU;
    }
    let span = phi_hi - phi_lo;
    let r = integrate(
        |t| {
            let phi = phi_lo + span * 0.5 * (1.0 - t.cos());
            let jac = span * 0.5 * t.sin();
            match ray_hits(w0, phi, a, b) {
                Some((s1, s2)) => (radial_primitive(s2.max(0.0)) - radial_primitive(s1.max(0.0))) * jac,
                None => 0.0,
            }
        },
        0.0,
        PI,
        &opts,
    )?;
    Ok(-norm * r.value)
}
