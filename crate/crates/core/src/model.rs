//! The vorticity-density nonlinearity pair (f, g), its combined profile
//! function `i(x2, t) = cf f(t) + x2 cg g(t)`, the primitive
//! `I(x2, t) = int_0^t i(x2, s) ds`, and the modified convex conjugate
//! `J(x2, s) = sup_t [s t - I(x2, t)]` (zero for s < 0).
//!
//! `J(x2, .)` and `i(x2, .)` are linked by the inverse-graph property: the
//! slope of `J` at `s = i(x2, t)` is `t`. When both nonlinearities share one
//! shape (g = alpha f), the conjugate collapses to
//! `J(x2, s) = (cf + cg x2) J_F(s / (cf + cg x2))`.

pub use crate::shape::{ConjugateEval, ScalarShape};

use crate::error::{Error, Result};
use crate::numerics::bisect_root;
use crate::shape::CONJUGATE_T_TOL;

/// The nonlinearity pair with coefficients.
///
/// `cf` scales the vorticity shape `f`, `cg` scales the density shape `g`
/// (the factor written `alpha` or `delta_lambda` depending on the regime).
#[derive(Debug, Clone)]
pub struct ModelFunctions {
    f: ScalarShape,
    g: ScalarShape,
    cf: f64,
    cg: f64,
}

impl ModelFunctions {
    pub fn new(f: ScalarShape, g: ScalarShape, cf: f64, cg: f64) -> Result<Self> {
        if !(cf.is_finite() && cg.is_finite()) || cf < 0.0 || cg < 0.0 {
            return Err(Error::InvalidModel(format!(
                "coefficients must be finite and nonnegative, got cf={cf}, cg={cg}"
            )));
        }
        let f_active = cf > 0.0 && !f.is_zero();
        let g_active = cg > 0.0 && !g.is_zero();
        if !f_active && !g_active {
            return Err(Error::InvalidModel(
                "cf*f and cg*g cannot both vanish".into(),
            ));
        }
        Ok(ModelFunctions { f, g, cf, cg })
    }

    /// `f = g = t_+^p` with `g` weighted by `alpha` (the g = alpha f regime).
    pub fn power_law_pair(p: f64, alpha: f64) -> Result<Self> {
        let shape = ScalarShape::power_law(p)?;
        ModelFunctions::new(shape.clone(), shape, 1.0, alpha)
    }

    /// Pure vorticity nonlinearity `f = t_+^p`, no density coupling.
    pub fn vorticity_only(p: f64) -> Result<Self> {
        ModelFunctions::new(ScalarShape::power_law(p)?, ScalarShape::zero(), 1.0, 0.0)
    }

    /// Pure density nonlinearity `g = t_+^p` (vanishing f coefficient).
    pub fn density_only(p: f64) -> Result<Self> {
        ModelFunctions::new(ScalarShape::zero(), ScalarShape::power_law(p)?, 0.0, 1.0)
    }

    pub fn f_shape(&self) -> &ScalarShape {
        &self.f
    }

    pub fn g_shape(&self) -> &ScalarShape {
        &self.g
    }

    pub fn cf(&self) -> f64 {
        self.cf
    }

    pub fn cg(&self) -> f64 {
        self.cg
    }

    /// Right limit of `i(x2, .)` at zero; positive when f jumps at the origin.
    pub fn i_zero_plus(&self, x2: f64) -> f64 {
        self.cf * self.f.limit_at_zero_plus() + x2 * self.cg * self.g.limit_at_zero_plus()
    }

    /// Unchecked profile function for hot loops.
    #[inline]
    pub(crate) fn eval_i_raw(&self, x2: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let mut v = 0.0;
        if self.cf > 0.0 {
            v += self.cf * self.f.eval(t);
        }
        if self.cg > 0.0 {
            v += x2 * self.cg * self.g.eval(t);
        }
        v
    }

    /// Profile function `i(x2, t) = cf f(t) + x2 cg g(t)`; zero for t <= 0.
    pub fn eval_i(&self, x2: f64, t: f64) -> Result<f64> {
        check_height(x2)?;
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("eval_i at t={t}")));
        }
        Ok(self.eval_i_raw(x2, t))
    }

    /// Primitive `I(x2, t) = cf F(t) + x2 cg G(t)`; zero for t <= 0.
    pub fn eval_big_i(&self, x2: f64, t: f64) -> Result<f64> {
        check_height(x2)?;
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("eval_I at t={t}")));
        }
        if t <= 0.0 {
            return Ok(0.0);
        }
        let mut v = 0.0;
        if self.cf > 0.0 {
            v += self.cf * self.f.primitive(t)?;
        }
        if self.cg > 0.0 {
            v += x2 * self.cg * self.g.primitive(t)?;
        }
        Ok(v)
    }

    /// The single-shape reduction `(shape, cf + cg x2)` when it applies.
    fn combined_shape(&self, x2: f64) -> Option<(&ScalarShape, f64)> {
        let f_active = self.cf > 0.0 && !self.f.is_zero();
        let g_active = self.cg > 0.0 && !self.g.is_zero();
        match (f_active, g_active) {
            (true, false) => Some((&self.f, self.cf)),
            (false, true) => Some((&self.g, self.cg * x2)),
            (true, true) => {
                if self.f.same_family(&self.g) {
                    Some((&self.f, self.cf + self.cg * x2))
                } else {
                    None
                }
            }
            (false, false) => None,
        }
    }

    /// Modified conjugate `J(x2, s)` with its slope and maximizing argument.
    ///
    /// For s >= 0 the sup is found on the optimality condition i(x2, t) = s,
    /// solved by monotone bisection; shared-shape models use the closed
    /// reduction `J(x2, s) = c J_F(s/c)` with `c = cf + cg x2`. For s below
    /// the jump `i(x2, 0+)` the sup sits at t = 0 and `J = 0`.
    pub fn conjugate_j(&self, x2: f64, s: f64) -> Result<ConjugateEval> {
        check_height(x2)?;
        if !s.is_finite() {
            return Err(Error::InvalidArgument(format!("conjugate at s={s}")));
        }
        if s <= 0.0 {
            return Ok(ConjugateEval::ZERO);
        }
        if let Some((shape, c)) = self.combined_shape(x2) {
            let inner = shape.conjugate(s / c).map_err(|e| match e {
                Error::ConjugateDivergent { .. } => Error::ConjugateDivergent { x2, s },
                other => other,
            })?;
            return Ok(ConjugateEval {
                value: c * inner.value,
                slope: inner.slope,
                argmax_t: inner.argmax_t,
            });
        }
        if s <= self.i_zero_plus(x2) {
            return Ok(ConjugateEval::ZERO);
        }
        let mut hi = 1.0f64;
        let mut grow = 0;
        while self.eval_i_raw(x2, hi) < s {
            hi *= 2.0;
            grow += 1;
            if grow > 90 {
                return Err(Error::ConjugateDivergent { x2, s });
            }
        }
        let t = bisect_root(|t| self.eval_i_raw(x2, t) - s, 0.0, hi, CONJUGATE_T_TOL)?;
        let value = s * t - self.eval_big_i(x2, t)?;
        Ok(ConjugateEval {
            value,
            slope: t,
            argmax_t: t,
        })
    }

    /// Numeric hypothesis validation over a probe grid; see the report for
    /// the exact probe ranges checked.
    pub fn validate_hypotheses(&self, d: f64, probe: &ProbeGrid) -> Result<HypothesisReport> {
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::InvalidArgument(format!("probe depth d={d}")));
        }
        if probe.x2s.is_empty() || probe.ts.is_empty() {
            return Err(Error::Hypothesis("probe grid is empty".into()));
        }
        if probe.x2s.iter().any(|&x| x <= 0.0 || x > d) {
            return Err(Error::Hypothesis(format!(
                "probe heights must lie in (0, {d}]"
            )));
        }
        if probe.ts.iter().any(|&t| t <= 0.0) || probe.ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Hypothesis(
                "probe abscissae must be positive and strictly increasing".into(),
            ));
        }

        let h1 = self.check_h1(probe);
        let h2 = self.check_h2(probe);
        let (h3, delta0, delta1) = self.check_h3(probe)?;
        let taus = [0.25, 0.5, 1.0];
        let h4 = self.check_h4(probe, &taus);

        Ok(HypothesisReport {
            h1,
            h2,
            h3,
            h4,
            h3_delta0: delta0,
            h3_delta1: delta1,
            probe_t_max: *probe.ts.last().unwrap(),
            probe_d: d,
            taus: taus.to_vec(),
        })
    }

    fn check_h1(&self, probe: &ProbeGrid) -> HypothesisCheck {
        for (label, shape, coeff) in [("f", &self.f, self.cf), ("g", &self.g, self.cg)] {
            if coeff == 0.0 || shape.is_zero() {
                continue;
            }
            if shape.eval(-1.0) != 0.0 || shape.eval(0.0) != 0.0 {
                return HypothesisCheck::fail(format!("{label} does not vanish for t <= 0"));
            }
            let mut prev = 0.0f64;
            for &t in &probe.ts {
                let v = shape.eval(t);
                if !v.is_finite() || v < 0.0 {
                    return HypothesisCheck::fail(format!("{label}({t}) = {v} is not >= 0"));
                }
                if v < prev - 1e-12 * prev.abs().max(1.0) {
                    return HypothesisCheck::fail(format!(
                        "{label} decreases near t = {t} ({prev} -> {v})"
                    ));
                }
                prev = v;
            }
        }
        HypothesisCheck::pass("f, g nonnegative and nondecreasing on the probe grid")
    }

    fn check_h2(&self, probe: &ProbeGrid) -> HypothesisCheck {
        for &x2 in &probe.x2s {
            if self.eval_i_raw(x2, -1.0) != 0.0 || self.eval_i_raw(x2, 0.0) != 0.0 {
                return HypothesisCheck::fail(format!("i({x2}, t) nonzero for t <= 0"));
            }
            let mut prev = self.eval_i_raw(x2, probe.ts[0]);
            for &t in &probe.ts[1..] {
                let v = self.eval_i_raw(x2, t);
                if v <= prev {
                    return HypothesisCheck::fail(format!(
                        "i({x2}, .) is not strictly increasing: plateau or drop at t = {t} \
                         (step-like nonlinearity rejected)"
                    ));
                }
                prev = v;
            }
        }
        HypothesisCheck::pass("i(x2, .) vanishes on t <= 0 and strictly increases on the probes")
    }

    /// Finite linear feasibility for `I <= delta0 i t + delta1 i`: constants
    /// are fitted on the lower half of the probe range and then verified on
    /// the whole of it, so bounded shapes that need `delta1 -> inf` fail.
    fn check_h3(&self, probe: &ProbeGrid) -> Result<(HypothesisCheck, Option<f64>, Option<f64>)> {
        let t_max = *probe.ts.last().unwrap();
        let mut rows = Vec::new();
        for &x2 in &probe.x2s {
            for &t in &probe.ts {
                let i = self.eval_i_raw(x2, t);
                if i <= 0.0 {
                    continue;
                }
                let big_i = self.eval_big_i(x2, t)?;
                rows.push((t, i, big_i));
            }
        }
        if rows.is_empty() {
            return Ok((
                HypothesisCheck::fail("i vanishes on the whole probe grid".into()),
                None,
                None,
            ));
        }
        let mut best: Option<(f64, f64)> = None;
        for k in 1..20 {
            let delta0 = k as f64 * 0.05;
            let mut need = 0.0f64;
            for &(t, i, big_i) in rows.iter().filter(|r| r.0 <= 0.5 * t_max) {
                need = need.max((big_i - delta0 * i * t) / i);
            }
            let delta1 = need.max(1e-9) * (1.0 + 1e-9);
            if best.map_or(true, |(_, d1)| delta1 < d1) {
                best = Some((delta0, delta1));
            }
        }
        let (delta0, delta1) = best.unwrap();
        for &(t, i, big_i) in &rows {
            let bound = delta0 * i * t + delta1 * i;
            if big_i > bound + 1e-9 * (1.0 + big_i.abs()) {
                return Ok((
                    HypothesisCheck::fail(format!(
                        "no (delta0, delta1) fitted on t <= {:.3} extends to t = {t}: \
                         I = {big_i:.6e} > {bound:.6e}",
                        0.5 * t_max
                    )),
                    None,
                    None,
                ));
            }
        }
        Ok((
            HypothesisCheck::pass(format!(
                "I <= {delta0:.2} i t + {delta1:.3e} i holds over the probe grid"
            )),
            Some(delta0),
            Some(delta1),
        ))
    }

    fn check_h4(&self, probe: &ProbeGrid, taus: &[f64]) -> HypothesisCheck {
        let t_max = *probe.ts.last().unwrap();
        let t_ref = 0.6 * t_max;
        for &x2 in &probe.x2s {
            for &tau in taus {
                let w_ref = self.eval_i_raw(x2, t_ref) * (-tau * t_ref).exp();
                let w_end = self.eval_i_raw(x2, t_max) * (-tau * t_max).exp();
                if w_end > 0.9 * w_ref + 1e-12 {
                    return HypothesisCheck::fail(format!(
                        "i(x2={x2}, t) e^(-{tau} t) does not decay on [{t_ref:.1}, {t_max:.1}]: \
                         {w_ref:.3e} -> {w_end:.3e}"
                    ));
                }
            }
        }
        HypothesisCheck::pass(format!(
            "i(x2, t) e^(-tau t) decays on the probe tail for tau in {taus:?}"
        ))
    }
}

fn check_height(x2: f64) -> Result<()> {
    if !(x2.is_finite() && x2 > 0.0) {
        return Err(Error::InvalidArgument(format!("height x2={x2} must be > 0")));
    }
    Ok(())
}

/// Tensor probe grid for hypothesis validation.
#[derive(Debug, Clone)]
pub struct ProbeGrid {
    pub x2s: Vec<f64>,
    pub ts: Vec<f64>,
}

impl ProbeGrid {
    /// Heights at fractions of `d`, abscissae log-spaced up to `t_max`.
    pub fn standard(d: f64, t_max: f64, n_t: usize) -> Self {
        let x2s = vec![0.25 * d, 0.5 * d, 0.75 * d, d];
        let lo = 1e-4f64;
        let ratio = (t_max / lo).powf(1.0 / (n_t as f64 - 1.0));
        let mut ts = Vec::with_capacity(n_t);
        let mut t = lo;
        for _ in 0..n_t {
            ts.push(t);
            t *= ratio;
        }
        *ts.last_mut().unwrap() = t_max;
        ProbeGrid { x2s, ts }
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisCheck {
    pub passed: bool,
    pub detail: String,
}

impl HypothesisCheck {
    fn pass(detail: impl Into<String>) -> Self {
        HypothesisCheck {
            passed: true,
            detail: detail.into(),
        }
    }

    fn fail(detail: String) -> Self {
        HypothesisCheck {
            passed: false,
            detail,
        }
    }
}

/// Outcome of the numeric (H1)-(H4) checks, with the probe ranges that were
/// actually exercised (the checks are finite probes, not proofs).
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub h1: HypothesisCheck,
    pub h2: HypothesisCheck,
    pub h3: HypothesisCheck,
    pub h4: HypothesisCheck,
    pub h3_delta0: Option<f64>,
    pub h3_delta1: Option<f64>,
    pub probe_t_max: f64,
    pub probe_d: f64,
    pub taus: Vec<f64>,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.h1.passed && self.h2.passed && self.h3.passed && self.h4.passed
    }

    pub fn summary(&self) -> String {
        let line = |name: &str, c: &HypothesisCheck| {
            format!(
                "{name}: {} ({})",
                if c.passed { "pass" } else { "FAIL" },
                c.detail
            )
        };
        format!(
            "{}\n{}\n{}\n{}\nprobes: x2 <= {}, t <= {}, tau in {:?}",
            line("H1", &self.h1),
            line("H2", &self.h2),
            line("H3", &self.h3),
            line("H4", &self.h4),
            self.probe_d,
            self.probe_t_max,
            self.taus
        )
    }
}
