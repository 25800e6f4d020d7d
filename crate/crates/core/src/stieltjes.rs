//! The 2x2 self-consistent resolvent equation of the Hermitized shifted model.
//!
//! For `q = [[eta, z], [conj(z), eta]]` the limiting resolvent blocks satisfy
//!
//! ```text
//! [[alpha, beta], [gamma, alpha]] = -(q + [[alpha, rho*gamma], [rho*beta, alpha]])^{-1}
//! ```
//!
//! and `alpha(eta)` is the Stieltjes transform of the symmetrized singular value
//! law of `M - zI`. Writing `a = -eta - alpha`, `b = -z - rho*gamma`,
//! `c = -conj(z) - rho*beta` and `D = a^2 - bc`, the fixed point reads
//! `alpha = a/D`, `beta = -b/D`, `gamma = -c/D`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::quadrature::{integrate, QuadOptions};
use crate::{Error, Result};

/// Smoothing height used for density inversion.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Heights combined by Richardson extrapolation in [`log_integral_nu_z`].
pub const RICHARDSON_EPSILONS: [f64; 3] = [4e-3, 2e-3, 1e-3];

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QMatrix {
    z: Complex64,
    eta: Complex64,
}

impl QMatrix {
    pub fn new(z: Complex64, eta: Complex64) -> Result<Self> {
        if !(eta.im > 0.0) || !eta.re.is_finite() || !eta.im.is_finite() || !z.re.is_finite() || !z.im.is_finite()
        {
            return Err(Error::InvalidArgument(format!("eta = {eta} must lie in the open upper half-plane")));
        }
        Ok(Self { z, eta })
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn eta(&self) -> Complex64 {
        self.eta
    }

    fn with_eta(&self, eta: Complex64) -> Self {
        Self { z: self.z, eta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StieltjesState {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    /// Entrywise max residual of the matrix equation.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub damping: f64,
    pub max_iterations: usize,
    /// Fall back to continuation in `Im(eta)` when the damped iteration stalls.
    pub continuation: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOLERANCE, damping: 0.5, max_iterations: 10_000, continuation: true }
    }
}

type Triple = [Complex64; 3];

fn max_abs(v: &Triple) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn coefficients(u: &Triple, q: &QMatrix, rho: f64) -> (Complex64, Complex64, Complex64, Complex64) {
    let a = -q.eta - u[0];
    let b = -q.z - rho * u[2];
    let c = -q.z.conj() - rho * u[1];
    (a, b, c, a * a - b * c)
}

/// The right-hand side of the fixed-point equation.
fn fixed_point_map(u: &Triple, q: &QMatrix, rho: f64) -> Triple {
    let (a, b, c, d) = coefficients(u, q, rho);
    [a / d, -b / d, -c / d]
}

fn matrix_residual(u: &Triple, q: &QMatrix, rho: f64) -> f64 {
    let f = fixed_point_map(u, q, rho);
    let r = max_abs(&[u[0] - f[0], u[1] - f[1], u[2] - f[2]]);
    if r.is_finite() {
        r
    } else {
        f64::INFINITY
    }
}

fn on_branch(u: &Triple, q: &QMatrix) -> bool {
    u[0].im > 0.0 && u[0].norm() <= (1.0 + 1e-9) / q.eta.im
}

/// Gaussian elimination with partial pivoting on a 3x3 complex system.
fn solve3(mut m: [[Complex64; 3]; 3], mut r: Triple) -> Option<Triple> {
    for k in 0..3 {
        let p = (k..3).max_by(|&i, &j| m[i][k].norm().total_cmp(&m[j][k].norm()))?;
        if m[p][k].norm() == 0.0 {
            return None;
        }
        m.swap(k, p);
        r.swap(k, p);
        for i in k + 1..3 {
            let f = m[i][k] / m[k][k];
            for j in k..3 {
                let t = m[k][j];
                m[i][j] -= f * t;
            }
            let t = r[k];
            r[i] -= f * t;
        }
    }
    let mut x = [Complex64::new(0.0, 0.0); 3];
    for k in (0..3).rev() {
        let mut s = r[k];
        for j in k + 1..3 {
            s -= m[k][j] * x[j];
        }
        x[k] = s / m[k][k];
    }
    x.iter().all(|v| v.re.is_finite() && v.im.is_finite()).then_some(x)
}

/// Newton's method on the cleared form `alpha D - a = beta D + b = gamma D + c = 0`.
fn newton(mut u: Triple, q: &QMatrix, rho: f64, tol: f64, iterations: &mut usize) -> Option<Triple> {
    let one = Complex64::new(1.0, 0.0);
    for _ in 0..60 {
        *iterations += 1;
        let (a, b, c, d) = coefficients(&u, q, rho);
        let [al, be, ga] = u;
        let g = [al * d - a, be * d + b, ga * d + c];
        let (dd_a, dd_b, dd_g) = (-2.0 * a, rho * b, rho * c);
        let jac = [
            [d + al * dd_a + one, al * dd_b, al * dd_g],
            [be * dd_a, d + be * dd_b, be * dd_g - rho],
            [ga * dd_a, ga * dd_b - rho, d + ga * dd_g],
        ];
        let step = solve3(jac, [-g[0], -g[1], -g[2]])?;
        for k in 0..3 {
            u[k] += step[k];
        }
        if max_abs(&step) <= 1e-15 * (1.0 + max_abs(&u)) {
            break;
        }
    }
    (matrix_residual(&u, q, rho) <= tol).then_some(u)
}

enum Damped {
    Converged(Triple),
    Stalled { residual: f64 },
}

/// Damped fixed-point iteration. Gives up early once the observed contraction
/// rate predicts that the iteration cap would be exceeded.
fn damped_iteration(start: Triple, q: &QMatrix, rho: f64, opts: &SolverOptions, iterations: &mut usize) -> Damped {
    const WINDOW: usize = 32;
    let mut u = start;
    let mut checkpoint = f64::INFINITY;
    let mut diff = f64::INFINITY;
    for k in 0..opts.max_iterations {
        *iterations += 1;
        let f = fixed_point_map(&u, q, rho);
        diff = max_abs(&[f[0] - u[0], f[1] - u[1], f[2] - u[2]]);
        if !diff.is_finite() {
            return Damped::Stalled { residual: f64::INFINITY };
        }
        if diff <= opts.tol {
            return Damped::Converged(f);
        }
        for j in 0..3 {
            u[j] = (1.0 - opts.damping) * u[j] + opts.damping * f[j];
        }
        if k % WINDOW == WINDOW - 1 {
            if k >= 8 * WINDOW {
                let rate = (diff / checkpoint).powf(1.0 / WINDOW as f64);
                let remaining = (opts.max_iterations - k) as f64;
                if rate >= 1.0 || (opts.tol / diff).ln() / rate.ln() > remaining {
                    return Damped::Stalled { residual: diff };
                }
            }
            checkpoint = diff;
        }
    }
    Damped::Stalled { residual: diff }
}

/// Follows the branch from `Im(eta) = max(4 Im(eta), 4)` down to the target,
/// refining the step whenever Newton fails or leaves the branch.
fn continuation(q: &QMatrix, rho: f64, opts: &SolverOptions, iterations: &mut usize) -> Result<Triple> {
    let target = q.eta.im;
    let x = q.eta.re;
    let mut y = (4.0 * target).max(4.0);
    let start_q = q.with_eta(Complex64::new(x, y));
    let mut u = match damped_iteration([I, Complex64::default(), Complex64::default()], &start_q, rho, opts, iterations)
    {
        Damped::Converged(u) => u,
        Damped::Stalled { residual } => return Err(Error::NoFixedPoint { iterations: *iterations, residual }),
    };
    while y > target {
        let mut next = (0.5 * y).max(target);
        let mut refinements = 0;
        loop {
            let qn = q.with_eta(Complex64::new(x, next));
            match newton(u, &qn, rho, opts.tol, iterations) {
                Some(v) if on_branch(&v, &qn) => {
                    u = v;
                    y = next;
                    break;
                }
                _ if refinements < 40 => {
                    refinements += 1;
                    next = (y * next).sqrt();
                }
                _ => {
                    return Err(Error::NoFixedPoint { iterations: *iterations, residual: matrix_residual(&u, &qn, rho) })
                }
            }
        }
    }
    Ok(u)
}

fn finish(u: Triple, q: &QMatrix, rho: f64, iterations: usize) -> StieltjesState {
    StieltjesState { alpha: u[0], beta: u[1], gamma: u[2], residual: matrix_residual(&u, q, rho), iterations }
}

/// Solves the self-consistent equation at `q` with the default options and
/// the given tolerance.
pub fn solve_state(q: &QMatrix, rho: f64, tol: f64) -> Result<StieltjesState> {
    solve_state_with(q, rho, &SolverOptions { tol, ..SolverOptions::default() })
}

pub fn solve_state_with(q: &QMatrix, rho: f64, opts: &SolverOptions) -> Result<StieltjesState> {
    if !(rho.abs() < 1.0) {
        return Err(Error::DegenerateLaw { rho });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {} must be positive", opts.tol)));
    }
    let mut iterations = 0;
    let start = [I, Complex64::default(), Complex64::default()];
    let mut wrong_branch = None;
    let mut stalled = f64::INFINITY;

    match damped_iteration(start, q, rho, opts, &mut iterations) {
        Damped::Converged(u) => {
            let u = newton(u, q, rho, opts.tol, &mut iterations).unwrap_or(u);
            if on_branch(&u, q) {
                return Ok(finish(u, q, rho, iterations));
            }
            wrong_branch = Some(u[0]);
        }
        Damped::Stalled { residual } => stalled = residual,
    }
    if opts.continuation {
        let u = continuation(q, rho, opts, &mut iterations)?;
        return Ok(finish(u, q, rho, iterations));
    }
    match wrong_branch {
        Some(alpha) => Err(Error::WrongBranch { re: alpha.re, im: alpha.im }),
        None => Err(Error::NoFixedPoint { iterations, residual: stalled }),
    }
}

/// `|1/((alpha+eta) alpha) + 1 - Re(z)^2/(eta+(1+rho)alpha)^2 - Im(z)^2/(eta+(1-rho)alpha)^2|`.
pub fn scalar_residual(alpha: Complex64, q: &QMatrix, rho: f64) -> Result<f64> {
    let d0 = (alpha + q.eta) * alpha;
    let d1 = q.eta + (1.0 + rho) * alpha;
    let d2 = q.eta + (1.0 - rho) * alpha;
    if d0.norm() < 1e-14 || d1.norm() < 1e-14 || d2.norm() < 1e-14 {
        return Err(Error::PoleHit);
    }
    let (x, y) = (q.z.re, q.z.im);
    Ok((1.0 / d0 + 1.0 - x * x / (d1 * d1) - y * y / (d2 * d2)).norm())
}

/// Poisson-smoothed density of the symmetrized singular value law of `M - zI`
/// at height `epsilon`, i.e. `Im alpha(x + i epsilon) / pi`.
pub fn nu_z_density(x: f64, z: Complex64, rho: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be positive")));
    }
    let q = QMatrix::new(z, Complex64::new(x, epsilon))?;
    let state = solve_state(&q, rho, DEFAULT_TOLERANCE)?;
    Ok((state.alpha.im / std::f64::consts::PI).max(0.0))
}

pub fn density_table(xs: &[f64], z: Complex64, rho: f64, epsilon: f64) -> Result<Vec<(f64, f64)>> {
    xs.iter().map(|&x| Ok((x, nu_z_density(x, z, rho, epsilon)?))).collect()
}

/// Upper end of the integration range; the singular values of `M - zI`
/// concentrate below `|z| + 2`.
fn support_bound(z: Complex64) -> f64 {
    z.norm() + 3.0
}

/// Adapts a fallible integrand to the infallible quadrature interface.
struct Guarded {
    error: Option<Error>,
}

impl Guarded {
    fn eval(&mut self, f: impl FnOnce() -> Result<f64>) -> f64 {
        if self.error.is_some() {
            return 0.0;
        }
        match f() {
            Ok(v) => v,
            Err(e) => {
                self.error = Some(e);
                0.0
            }
        }
    }

    fn into_result<T>(self, value: Result<T>) -> Result<T> {
        match self.error {
            Some(e) => Err(e),
            None => value,
        }
    }
}

/// `-2 int_0^inf log(x) f_eps(x) dx` for the smoothed density `f_eps`.
fn smoothed_log_integral(z: Complex64, rho: f64, epsilon: f64) -> Result<f64> {
    let big_x = support_bound(z);
    let opts = QuadOptions { abs_tol: 1e-8, rel_tol: 1e-10, max_intervals: 4000, fail_above: 1e-5 };
    let mut guard = Guarded { error: None };

    // x = t^2 on [0, X] removes the logarithmic endpoint
    let head = integrate(
        |t| {
            if t == 0.0 {
                return 0.0;
            }
            4.0 * t * t.ln() * guard.eval(|| nu_z_density(t * t, z, rho, epsilon))
        },
        0.0,
        big_x.sqrt(),
        &opts,
    );
    let head = guard.into_result(head)?;

    // x = X/u on [X, inf); below u = 1e-6 the Cauchy tail is negligible
    let mut guard = Guarded { error: None };
    let tail = integrate(
        |u| {
            let x = big_x / u;
            x.ln() * guard.eval(|| nu_z_density(x, z, rho, epsilon)) * big_x / (u * u)
        },
        1e-6,
        1.0,
        &opts,
    );
    let tail = guard.into_result(tail)?;
    Ok(-2.0 * (head.value + tail.value))
}

/// `-int_0^inf log(s) d nu_z(s)`, the logarithmic potential of the elliptic
/// law with parameter `rho` at `z`.
///
/// The smoothed integrals at the heights in [`RICHARDSON_EPSILONS`] are
/// combined to cancel the first- and second-order smoothing bias.
pub fn log_integral_nu_z(z: Complex64, rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::DegenerateLaw { rho });
    }
    let [e4, e2, e1] = RICHARDSON_EPSILONS;
    let i4 = smoothed_log_integral(z, rho, e4)?;
    let i2 = smoothed_log_integral(z, rho, e2)?;
    let i1 = smoothed_log_integral(z, rho, e1)?;
    Ok((8.0 * i1 - 6.0 * i2 + i4) / 3.0)
}

/// Tabulated distribution function of the symmetrized law `nu_hat_z`.
#[derive(Debug, Clone)]
pub struct NuHatCdf {
    grid: Vec<f64>,
    cumulative: Vec<f64>,
}

impl NuHatCdf {
    /// Integrates the smoothed density over `cells` equal cells of `[0, |z|+3]`.
    pub fn new(z: Complex64, rho: f64, epsilon: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidArgument("cell count must be positive".into()));
        }
        let big_x = support_bound(z);
        let opts = QuadOptions { abs_tol: 1e-10, rel_tol: 1e-10, max_intervals: 200, fail_above: 1e-5 };
        let grid: Vec<f64> = (0..=cells).map(|k| big_x * k as f64 / cells as f64).collect();
        let mut cumulative = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        cumulative.push(acc);
        for w in grid.windows(2) {
            let mut guard = Guarded { error: None };
            let r = integrate(|x| guard.eval(|| nu_z_density(x, z, rho, epsilon)), w[0], w[1], &opts);
            acc += guard.into_result(r)?.value;
            cumulative.push(acc);
        }
        // put the mass smoothed out beyond the grid back onto the support
        let total = acc;
        for c in &mut cumulative {
            *c /= 2.0 * total;
        }
        Ok(Self { grid, cumulative })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0 - self.cdf(-x);
        }
        let last = *self.grid.last().unwrap_or(&0.0);
        if x >= last {
            return 1.0;
        }
        let h = self.grid[1] - self.grid[0];
        let k = ((x / h) as usize).min(self.grid.len() - 2);
        let t = (x - self.grid[k]) / h;
        0.5 + self.cumulative[k] + t * (self.cumulative[k + 1] - self.cumulative[k])
    }
}
