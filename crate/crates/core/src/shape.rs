//! Scalar nonlinearity shapes: the building blocks for the vorticity and
//! density profile functions.
//!
//! A shape is a nonnegative, nondecreasing function on the real line that
//! vanishes for nonpositive arguments. Named families carry closed-form
//! primitives and convex conjugates; tabulated and user-supplied shapes fall
//! back to exact interpolant integrals or adaptive quadrature.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, bisect_root};

/// Tolerance on the abscissa for conjugate bisection.
pub const CONJUGATE_T_TOL: f64 = 1e-12;

/// One evaluation of a convex conjugate `sup_t [s t - Phi(t)]`.
///
/// `slope` is the derivative of the conjugate with respect to `s`, which
/// coincides with the maximizing argument `argmax_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateEval {
    pub value: f64,
    pub slope: f64,
    pub argmax_t: f64,
}

impl ConjugateEval {
    pub const ZERO: ConjugateEval = ConjugateEval {
        value: 0.0,
        slope: 0.0,
        argmax_t: 0.0,
    };
}

#[derive(Clone)]
enum Kind {
    Zero,
    /// s -> max(s, 0)^p. `p = 0` is the unit step on t > 0.
    PowerLaw { p: f64 },
    /// Piecewise-linear interpolant of user samples; primitive is the exact
    /// integral of the interpolant.
    Table {
        ts: Arc<[f64]>,
        vals: Arc<[f64]>,
        cum: Arc<[f64]>,
    },
    /// Arbitrary user closure (evaluated as given for t > 0, zero otherwise).
    Custom {
        name: String,
        func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        primitive: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    },
}

/// A scalar nonlinearity with its primitive and convex conjugate.
#[derive(Clone)]
pub struct ScalarShape {
    kind: Kind,
}

impl fmt::Debug for ScalarShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Zero => write!(f, "Zero"),
            Kind::PowerLaw { p } => write!(f, "PowerLaw(p={p})"),
            Kind::Table { ts, .. } => write!(f, "Table({} samples)", ts.len()),
            Kind::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl ScalarShape {
    /// The zero function.
    pub fn zero() -> Self {
        ScalarShape { kind: Kind::Zero }
    }

    /// Power law `t -> t_+^p` with real exponent `p >= 0`.
    pub fn power_law(p: f64) -> Result<Self> {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidModel(format!(
                "power-law exponent must be finite and nonnegative, got {p}"
            )));
        }
        Ok(ScalarShape {
            kind: Kind::PowerLaw { p },
        })
    }

    /// Piecewise-linear shape through `(ts[k], vals[k])`. Sample abscissae must
    /// be strictly increasing and positive; values nonnegative and
    /// nondecreasing. The shape is zero on t <= 0, linearly interpolated from
    /// (0, 0) to the first sample, and extrapolated with the last slope.
    pub fn table(ts: Vec<f64>, vals: Vec<f64>) -> Result<Self> {
        if ts.len() != vals.len() || ts.len() < 2 {
            return Err(Error::InvalidModel(
                "table shape needs at least two samples".into(),
            ));
        }
        if ts[0] <= 0.0 || ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidModel(
                "table abscissae must be positive and strictly increasing".into(),
            ));
        }
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) || vals.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidModel(
                "table values must be finite, nonnegative, nondecreasing".into(),
            ));
        }
        // Exact cumulative integral of the interpolant at each node, with the
        // leading ramp from (0, 0).
        let mut cum = Vec::with_capacity(ts.len());
        cum.push(0.5 * ts[0] * vals[0]);
        for k in 1..ts.len() {
            let seg = 0.5 * (vals[k] + vals[k - 1]) * (ts[k] - ts[k - 1]);
            let prev = cum[k - 1];
            cum.push(prev + seg);
        }
        Ok(ScalarShape {
            kind: Kind::Table {
                ts: ts.into(),
                vals: vals.into(),
                cum: cum.into(),
            },
        })
    }

    /// User-supplied closure, with an optional closed-form primitive. Without
    /// one, the primitive is computed by adaptive quadrature.
    pub fn custom(
        name: impl Into<String>,
        func: impl Fn(f64) -> f64 + Send + Sync + 'static,
        primitive: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    ) -> Self {
        ScalarShape {
            kind: Kind::Custom {
                name: name.into(),
                func: Arc::new(func),
                primitive,
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero)
    }

    /// Family label for reports and file headers.
    pub fn tag(&self) -> String {
        match &self.kind {
            Kind::Zero => "zero".into(),
            Kind::PowerLaw { p } => format!("powerlaw p={p}"),
            Kind::Table { ts, .. } => format!("table n={}", ts.len()),
            Kind::Custom { name, .. } => format!("custom {name}"),
        }
    }

    /// Evaluate the shape. Zero for t <= 0.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::PowerLaw { p } => {
                if *p == 0.0 {
                    1.0
                } else if *p == 1.0 {
                    t
                } else if *p == 2.0 {
                    t * t
                } else {
                    t.powf(*p)
                }
            }
            Kind::Table { ts, vals, .. } => table_eval(ts, vals, t),
            Kind::Custom { func, .. } => func(t),
        }
    }

    /// Right limit at zero; positive only for shapes with a jump there.
    pub fn limit_at_zero_plus(&self) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::PowerLaw { p } => {
                if *p == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Table { .. } => 0.0,
            Kind::Custom { func, .. } => func(1e-12),
        }
    }

    /// Derivative for t > 0: closed form for power laws, central difference
    /// otherwise.
    pub fn derivative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::PowerLaw { p } => {
                if *p == 0.0 {
                    0.0
                } else if *p == 1.0 {
                    1.0
                } else {
                    p * t.powf(p - 1.0)
                }
            }
            _ => {
                let dt = 1e-6 * t.max(1e-3);
                (self.eval(t + dt) - self.eval((t - dt).max(0.0))) / (dt + dt.min(t))
            }
        }
    }

    /// Primitive `Phi(t) = int_0^t phi(s) ds`; zero for t <= 0.
    pub fn primitive(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        match &self.kind {
            Kind::Zero => Ok(0.0),
            Kind::PowerLaw { p } => Ok(t.powf(p + 1.0) / (p + 1.0)),
            Kind::Table { ts, vals, cum } => Ok(table_primitive(ts, vals, cum, t)),
            Kind::Custom {
                func, primitive, ..
            } => match primitive {
                Some(prim) => Ok(prim(t)),
                None => adaptive_simpson(|s| func(s), 0.0, t, 1e-12 * (1.0 + t.abs())),
            },
        }
    }

    /// Supremum of the shape over [0, T]; the shape is nondecreasing so this is
    /// its value at T.
    fn sup_on(&self, t: f64) -> f64 {
        self.eval(t)
    }

    /// Convex conjugate of the primitive: `J(s) = sup_t [s t - Phi(t)]` for
    /// s >= 0, zero for s < 0.
    ///
    /// Power laws use the closed form; other shapes solve phi(t) = s by
    /// monotone bisection (unique root for strictly increasing phi). Requests
    /// beyond the closure of the range of phi are flagged as divergent.
    pub fn conjugate(&self, s: f64) -> Result<ConjugateEval> {
        if !s.is_finite() {
            return Err(Error::InvalidArgument(format!("conjugate at s={s}")));
        }
        if s <= 0.0 {
            return Ok(ConjugateEval::ZERO);
        }
        match &self.kind {
            Kind::Zero => Err(Error::ConjugateDivergent { x2: f64::NAN, s }),
            Kind::PowerLaw { p } => {
                if *p == 0.0 {
                    // Phi(t) = t_+, the conjugate is 0 on [0,1] and +inf beyond.
                    if s <= 1.0 {
                        Ok(ConjugateEval::ZERO)
                    } else {
                        Err(Error::ConjugateDivergent { x2: f64::NAN, s })
                    }
                } else {
                    let t = s.powf(1.0 / p);
                    Ok(ConjugateEval {
                        value: p / (p + 1.0) * s.powf((p + 1.0) / p),
                        slope: t,
                        argmax_t: t,
                    })
                }
            }
            _ => {
                if s <= self.limit_at_zero_plus() {
                    // Linear segment of the conjugate: the sup sits at t = 0.
                    return Ok(ConjugateEval::ZERO);
                }
                let mut hi = 1.0f64;
                let mut grow = 0;
                while self.sup_on(hi) < s {
                    hi *= 2.0;
                    grow += 1;
                    if grow > 90 {
                        return Err(Error::ConjugateDivergent { x2: f64::NAN, s });
                    }
                }
                let t = bisect_root(|t| self.eval(t) - s, 0.0, hi, CONJUGATE_T_TOL)?;
                let value = s * t - self.primitive(t)?;
                Ok(ConjugateEval {
                    value,
                    slope: t,
                    argmax_t: t,
                })
            }
        }
    }

    /// Structural equality for the closed-form conjugate reduction. Only
    /// named families are recognized; tabulated or custom shapes never match.
    pub(crate) fn same_family(&self, other: &ScalarShape) -> bool {
        match (&self.kind, &other.kind) {
            (Kind::PowerLaw { p: a }, Kind::PowerLaw { p: b }) => a == b,
            _ => false,
        }
    }

    /// Second derivative of the conjugate, `1 / phi'(t)` at `t = J'(s)`.
    pub fn conjugate_second(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Ok(0.0);
        }
        match &self.kind {
            Kind::PowerLaw { p } => {
                if *p == 0.0 {
                    Ok(0.0)
                } else if *p == 1.0 {
                    Ok(1.0)
                } else {
                    Ok(s.powf(1.0 / p - 1.0) / p)
                }
            }
            _ => {
                let t = self.conjugate(s)?.argmax_t;
                let d = self.derivative(t);
                if d <= 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "conjugate curvature undefined: phi'({t}) = {d}"
                    )));
                }
                Ok(1.0 / d)
            }
        }
    }
}

fn table_eval(ts: &[f64], vals: &[f64], t: f64) -> f64 {
    if t <= ts[0] {
        return vals[0] * t / ts[0];
    }
    let n = ts.len();
    if t >= ts[n - 1] {
        let slope = (vals[n - 1] - vals[n - 2]) / (ts[n - 1] - ts[n - 2]);
        return vals[n - 1] + slope * (t - ts[n - 1]);
    }
    let k = ts.partition_point(|&a| a < t);
    let w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
    vals[k - 1] + w * (vals[k] - vals[k - 1])
}

fn table_primitive(ts: &[f64], vals: &[f64], cum: &[f64], t: f64) -> f64 {
    if t <= ts[0] {
        let v = vals[0] * t / ts[0];
        return 0.5 * t * v;
    }
    let n = ts.len();
    if t >= ts[n - 1] {
        let v = table_eval(ts, vals, t);
        return cum[n - 1] + 0.5 * (v + vals[n - 1]) * (t - ts[n - 1]);
    }
    let k = ts.partition_point(|&a| a < t);
    let v = table_eval(ts, vals, t);
    cum[k - 1] + 0.5 * (v + vals[k - 1]) * (t - ts[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_eval_and_primitive() {
        let f = ScalarShape::power_law(2.0).unwrap();
        assert_eq!(f.eval(-1.0), 0.0);
        assert_eq!(f.eval(3.0), 9.0);
        assert!((f.primitive(3.0).unwrap() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn custom_primitive_uses_quadrature() {
        let f = ScalarShape::custom("square", |t| t * t, None);
        // F(3) = 9 from quadrature, matching the closed form t^3/3.
        assert!((f.primitive(3.0).unwrap() - 9.0).abs() < 1e-9);
    }

    #[test]
    fn linear_conjugate_is_half_square() {
        let f = ScalarShape::power_law(1.0).unwrap();
        let c = f.conjugate(1.0).unwrap();
        assert!((c.value - 0.5).abs() < 1e-12);
        assert!((c.slope - 1.0).abs() < 1e-12);
        assert_eq!(f.conjugate(-3.0).unwrap(), ConjugateEval::ZERO);
    }

    #[test]
    fn step_conjugate_diverges_past_the_range() {
        let f = ScalarShape::power_law(0.0).unwrap();
        assert_eq!(f.conjugate(0.5).unwrap().value, 0.0);
        assert!(matches!(
            f.conjugate(1.5),
            Err(Error::ConjugateDivergent { .. })
        ));
    }

    #[test]
    fn bisected_conjugate_matches_closed_form() {
        let closed = ScalarShape::power_law(2.0).unwrap();
        let via_bisection = ScalarShape::custom("square", |t| t * t, None);
        for s in [0.3, 1.0, 4.7] {
            let a = closed.conjugate(s).unwrap();
            let b = via_bisection.conjugate(s).unwrap();
            assert!((a.value - b.value).abs() < 1e-9, "s={s}");
            assert!((a.slope - b.slope).abs() < 1e-9, "s={s}");
        }
    }

    #[test]
    fn table_matches_linear_shape() {
        let ts: Vec<f64> = (1..=100).map(|k| k as f64 * 0.1).collect();
        let vals: Vec<f64> = ts.clone();
        let tab = ScalarShape::table(ts, vals).unwrap();
        assert!((tab.eval(3.45) - 3.45).abs() < 1e-12);
        assert!((tab.primitive(3.45).unwrap() - 3.45f64.powi(2) / 2.0).abs() < 1e-12);
        let c = tab.conjugate(2.0).unwrap();
        assert!((c.value - 2.0).abs() < 1e-9);
        assert!((c.argmax_t - 2.0).abs() < 1e-9);
    }
}
