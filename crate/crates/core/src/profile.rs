//! Radial limiting profiles: the unique radially symmetric solutions of
//! `-Delta u = nl(u)` on the plane with prescribed mass `int nl(u) = kappa`.
//!
//! The interior problem is the radial ODE `u'' + u'/r = -nl(u)`, `u'(0) = 0`,
//! integrated by an adaptive Dormand-Prince 5(4) scheme from a series start
//! at the axis. The shooting parameter is `u(0)`; by the divergence theorem
//! the mass equals `-2 pi r0 u'(r0)` at the first zero `r0`, and it is
//! monotone in `u(0)` for the supported families, so a bracketed bisection
//! closes the problem. Outside its support the profile continues
//! harmonically as `A log(r0 / r)`, fixed by continuity of u and u'.

use std::io::Write;

use crate::error::{Error, Result};
use crate::numerics::composite_simpson;
use crate::shape::ScalarShape;

/// Number of uniform radial samples stored per profile.
pub const PROFILE_SAMPLES: usize = 4096;

/// Sampled radial profile with its exterior logarithmic branch.
#[derive(Debug, Clone)]
pub struct ScalarProfile {
    radii: Vec<f64>,
    values: Vec<f64>,
    support_radius: f64,
    mass: f64,
    center_value: f64,
    boundary_slope: f64,
}

impl ScalarProfile {
    fn new(radii: Vec<f64>, values: Vec<f64>, boundary_slope: f64, mass: f64) -> Self {
        let support_radius = *radii.last().unwrap();
        let center_value = values[0];
        ScalarProfile {
            radii,
            values,
            support_radius,
            mass,
            center_value,
            boundary_slope,
        }
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn center_value(&self) -> f64 {
        self.center_value
    }

    /// Radial derivative at the support boundary.
    pub fn boundary_slope(&self) -> f64 {
        self.boundary_slope
    }

    /// Coefficient of the exterior branch `A log(r0/r)`; equals mass / 2 pi.
    pub fn exterior_coefficient(&self) -> f64 {
        -self.support_radius * self.boundary_slope
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Profile value at radius `r >= 0`: cubic interpolation of the samples
    /// inside the support, the logarithmic branch outside.
    pub fn value(&self, r: f64) -> f64 {
        if r < 0.0 {
            return self.value(-r);
        }
        if r >= self.support_radius {
            if r == self.support_radius {
                return 0.0;
            }
            return self.exterior_coefficient() * (self.support_radius / r).ln();
        }
        let n = self.radii.len();
        let dr = self.support_radius / (n - 1) as f64;
        let s = r / dr;
        let k = (s.floor() as usize).min(n - 2);
        // 4-point Lagrange on the uniform grid, clamped at the ends.
        let k0 = k.saturating_sub(1).min(n - 4);
        let t = s - k0 as f64;
        let y = &self.values[k0..k0 + 4];
        let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
        let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
        let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
        let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
        y[0] * l0 + y[1] * l1 + y[2] * l2 + y[3] * l3
    }

    /// Two-column text export with header comments naming the nonlinearity,
    /// circulation, support radius, and the exterior matching convention.
    pub fn write_to(&self, w: &mut impl Write, nl_tag: &str, kappa: f64) -> Result<()> {
        writeln!(w, "# radial profile: nl = {nl_tag}, kappa = {kappa:.16e}")?;
        writeln!(
            w,
            "# support_radius = {:.16e}, center_value = {:.16e}",
            self.support_radius, self.center_value
        )?;
        writeln!(
            w,
            "# exterior branch: A*log(support_radius/r) with A = {:.16e} \
             (continuity of u and u' at the support boundary)",
            self.exterior_coefficient()
        )?;
        writeln!(w, "# r u")?;
        for (r, v) in self.radii.iter().zip(&self.values) {
            writeln!(w, "{r:.16e} {v:.16e}")?;
        }
        Ok(())
    }

    /// Quadrature of `2 pi int w(u(r)) r dr` over the support from the stored
    /// samples.
    pub fn integrate_radial(&self, mut w: impl FnMut(f64) -> f64) -> f64 {
        let n = self.radii.len();
        let dr = self.support_radius / (n - 1) as f64;
        let vals: Vec<f64> = self
            .radii
            .iter()
            .zip(&self.values)
            .map(|(&r, &u)| w(u) * r)
            .collect();
        2.0 * std::f64::consts::PI * composite_simpson(&vals, dr)
    }
}

/// One adaptive integration of the radial ODE from the axis to the first
/// zero of u. Returns the accepted-step trajectory (r, u, u').
struct Shot {
    steps: Vec<[f64; 3]>,
    r0: f64,
    slope_at_r0: f64,
}

impl Shot {
    fn mass(&self) -> f64 {
        -2.0 * std::f64::consts::PI * self.r0 * self.slope_at_r0
    }
}

fn rhs(nl: &ScalarShape, r: f64, y: [f64; 2]) -> [f64; 2] {
    [y[1], -y[1] / r - nl.eval(y[0])]
}

/// Dormand-Prince 5(4) step; returns (y5, error estimate).
fn dp45_step(nl: &ScalarShape, r: f64, y: [f64; 2], h: f64) -> ([f64; 2], f64) {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const E: [f64; 7] = [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ];
    let mut k = [[0.0f64; 2]; 7];
    k[0] = rhs(nl, r, y);
    for stage in 0..6 {
        let mut ys = y;
        for (j, a) in A[stage].iter().enumerate().take(stage + 1) {
            ys[0] += h * a * k[j][0];
            ys[1] += h * a * k[j][1];
        }
        k[stage + 1] = rhs(nl, r + C[stage] * h, ys);
    }
    // Stage 7 of DP45 evaluates at the 5th-order solution (FSAL); A[5] are
    // the b-coefficients.
    let mut y5 = y;
    for (j, b) in A[5].iter().enumerate() {
        y5[0] += h * b * k[j][0];
        y5[1] += h * b * k[j][1];
    }
    let mut err = 0.0f64;
    for comp in 0..2 {
        let mut e = 0.0;
        for (j, w) in E.iter().enumerate() {
            e += w * k[j][comp];
        }
        err = err.max((h * e).abs());
    }
    (y5, err)
}

/// Integrate from the axis until u crosses zero.
fn shoot(nl: &ScalarShape, a: f64, r_max: f64) -> Result<Shot> {
    let tol = 1e-12 * a.max(1.0);
    // Series start: u = a - nl(a) r^2 / 4 removes the axis singularity.
    let r_start = 1e-8;
    let na = nl.eval(a);
    let mut r = r_start;
    let mut y = [a - 0.25 * na * r_start * r_start, -0.5 * na * r_start];
    let mut h = 1e-4;
    let mut steps = vec![[r, y[0], y[1]]];
    for _ in 0..400_000 {
        if r + h > r_max {
            h = r_max - r;
        }
        let (y_new, err) = dp45_step(nl, r, y, h);
        if err > tol && h > 1e-12 {
            h = (0.9 * h * (tol / err).powf(0.2)).max(0.25 * h);
            continue;
        }
        let r_new = r + h;
        if y_new[0] <= 0.0 {
            // Locate the crossing by bisection on substeps from (r, y).
            let (r0, slope) = locate_crossing(nl, r, y, h)?;
            steps.push([r0, 0.0, slope]);
            return Ok(Shot {
                steps,
                r0,
                slope_at_r0: slope,
            });
        }
        r = r_new;
        y = y_new;
        steps.push([r, y[0], y[1]]);
        if err > 0.0 {
            h = (0.9 * h * (tol / err).powf(0.2)).min(4.0 * h).min(0.05);
        } else {
            h = (2.0 * h).min(0.05);
        }
        if r >= r_max {
            return Err(Error::Shooting(format!(
                "no zero crossing up to r = {r_max} (u(0) = {a}, u = {:.3e})",
                y[0]
            )));
        }
    }
    Err(Error::Shooting("step budget exhausted".into()))
}

/// Bisect the step [r, r+h] for the zero of u, re-taking DP45 substeps.
fn locate_crossing(nl: &ScalarShape, r: f64, y: [f64; 2], h: f64) -> Result<(f64, f64)> {
    let mut lo = 0.0f64;
    let mut hi = h;
    let mut y_lo = y;
    let mut r_lo = r;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let (y_mid, _) = dp45_step(nl, r_lo, y_lo, mid - lo);
        if y_mid[0] > 0.0 {
            lo = mid;
            y_lo = y_mid;
            r_lo = r + mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * (r + h) {
            break;
        }
    }
    Ok((r_lo, y_lo[1]))
}

/// Shooting solve of the limiting-profile problem for a given nonlinearity
/// and mass. Bisects on u(0); the scanned bracket is reported on failure.
pub fn solve_radial_profile(nl: &ScalarShape, kappa: f64) -> Result<ScalarProfile> {
    if kappa <= 0.0 || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("kappa = {kappa}")));
    }
    if nl.is_zero() {
        return Err(Error::Shooting("nonlinearity is identically zero".into()));
    }
    if nl.eval(-1.0) != 0.0 || nl.eval(1.0) < 0.0 || nl.eval(2.0) < nl.eval(1.0) {
        return Err(Error::Shooting(
            "nonlinearity must vanish on t <= 0 and be nonnegative nondecreasing".into(),
        ));
    }
    let r_max = 1e3;
    let mass_of = |a: f64| -> Result<f64> { Ok(shoot(nl, a, r_max)?.mass()) };

    // Bracket the target mass by geometric scaling of u(0).
    let mut a_lo = kappa / (2.0 * std::f64::consts::PI);
    let mut m_lo = mass_of(a_lo)?;
    let mut a_hi = a_lo;
    let mut m_hi = m_lo;
    let mut tries = 0;
    while m_lo > kappa {
        a_lo *= 0.5;
        m_lo = mass_of(a_lo)?;
        tries += 1;
        if tries > 200 {
            return Err(Error::Shooting(format!(
                "mass bracket not found: u(0) scanned down to {a_lo}, mass {m_lo}"
            )));
        }
    }
    tries = 0;
    while m_hi < kappa {
        a_hi *= 2.0;
        m_hi = mass_of(a_hi)?;
        tries += 1;
        if tries > 200 {
            return Err(Error::Shooting(format!(
                "mass bracket not found: u(0) scanned up to {a_hi}, mass {m_hi}"
            )));
        }
    }
    let mut a = 0.5 * (a_lo + a_hi);
    for _ in 0..200 {
        a = 0.5 * (a_lo + a_hi);
        let m = mass_of(a)?;
        if (m - kappa).abs() <= 1e-11 * kappa {
            break;
        }
        if m < kappa {
            a_lo = a;
        } else {
            a_hi = a;
        }
        if (a_hi - a_lo) <= 1e-15 * a_hi {
            break;
        }
    }

    let shot = shoot(nl, a, r_max)?;
    Ok(sample_shot(&shot))
}

/// Resample an accepted-step trajectory onto the fixed uniform radial grid
/// using cubic Hermite interpolation (u and u' are stored at step ends).
fn sample_shot(shot: &Shot) -> ScalarProfile {
    let n = PROFILE_SAMPLES;
    let r0 = shot.r0;
    let dr = r0 / (n - 1) as f64;
    let mut radii = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        let r = k as f64 * dr;
        radii.push(r);
        if k == 0 {
            // Extrapolate to the axis from the series start.
            let [r1, u1, w1] = shot.steps[0];
            values.push(u1 - r1 * 0.5 * w1);
            continue;
        }
        if k == n - 1 {
            values.push(0.0);
            continue;
        }
        while seg + 1 < shot.steps.len() - 1 && shot.steps[seg + 1][0] < r {
            seg += 1;
        }
        let [ra, ua, wa] = shot.steps[seg];
        let [rb, ub, wb] = shot.steps[seg + 1];
        let hseg = rb - ra;
        let t = ((r - ra) / hseg).clamp(0.0, 1.0);
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        values.push(h00 * ua + h10 * hseg * wa + h01 * ub + h11 * hseg * wb);
    }
    let mass = shot.mass();
    ScalarProfile::new(radii, values, shot.slope_at_r0, mass)
}

/// First positive zero of the Bessel function J0.
pub fn bessel_j0_first_zero() -> f64 {
    // Bisection on libm's j0 around the known bracket.
    let mut lo = 2.3f64;
    let mut hi = 2.5f64;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if libm::j0(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form limiting profile for the linear nonlinearity `nl = s_+`:
/// `A J0(r)` up to the first zero of J0, with `A = kappa / (2 pi j01 J1(j01))`.
/// Serves as the golden oracle for the shooting solver.
pub fn lamb_dipole_profile(kappa: f64) -> Result<ScalarProfile> {
    if kappa <= 0.0 || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("kappa = {kappa}")));
    }
    let j01 = bessel_j0_first_zero();
    let j1 = libm::j1(j01);
    let amp = kappa / (2.0 * std::f64::consts::PI * j01 * j1);
    let n = PROFILE_SAMPLES;
    let dr = j01 / (n - 1) as f64;
    let mut radii = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let r = k as f64 * dr;
        radii.push(r);
        values.push(if k == n - 1 { 0.0 } else { amp * libm::j0(r) });
    }
    Ok(ScalarProfile::new(radii, values, -amp * j1, kappa))
}

/// Residuals of the two Pohozaev identities at the support boundary,
/// normalized by their left-hand sides:
/// `int_{B_r0} NL(u) = (pi/2) (u'(r0))^2 r0^2` and
/// `int_{B_r0} nl(u) = 2 pi (-u'(r0)) r0`.
pub fn pohozaev_residual(p: &ScalarProfile, nl: &ScalarShape) -> Result<(f64, f64)> {
    let slope = p.boundary_slope();
    if slope.abs() < 1e-14 * p.center_value().abs().max(1e-30) {
        return Err(Error::InvalidArgument(
            "boundary derivative below noise floor".into(),
        ));
    }
    let mut prim_err: Option<Error> = None;
    let lhs1 = p.integrate_radial(|u| match nl.primitive(u) {
        Ok(v) => v,
        Err(e) => {
            prim_err = Some(e);
            0.0
        }
    });
    if let Some(e) = prim_err {
        return Err(e);
    }
    let rhs1 = 0.5 * std::f64::consts::PI * slope * slope * p.support_radius() * p.support_radius();
    let lhs2 = p.integrate_radial(|u| nl.eval(u));
    let rhs2 = 2.0 * std::f64::consts::PI * (-slope) * p.support_radius();
    Ok(((lhs1 - rhs1) / lhs1, (lhs2 - rhs2) / lhs2))
}

/// The profile constant `int NL(u) dz` together with its conjugate-form
/// cross-check `int (u nl(u) - J_NL(nl(u))) dz`; the two agree analytically
/// and their gap diagnoses the conjugate implementation.
#[derive(Debug, Clone, Copy)]
pub struct CgReport {
    pub value: f64,
    pub conjugate_form: f64,
    pub discrepancy: f64,
}

pub fn profile_constant_cg(p: &ScalarProfile, nl: &ScalarShape) -> Result<CgReport> {
    let mut err: Option<Error> = None;
    let value = p.integrate_radial(|u| match nl.primitive(u) {
        Ok(v) => v,
        Err(e) => {
            err = Some(e);
            0.0
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let conjugate_form = p.integrate_radial(|u| {
        let s = nl.eval(u);
        match nl.conjugate(s) {
            Ok(c) => u * s - c.value,
            Err(e) => {
                err = Some(e);
                0.0
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(CgReport {
        value,
        conjugate_form,
        discrepancy: (value - conjugate_form).abs() / value.abs().max(1e-300),
    })
}
