//! The penalized kinetic-transport energy over the admissible class, and
//! Steiner symmetrization in x1.
//!
//! `E_eps(zeta) = 1/2 int zeta G zeta - W int x2 zeta
//!               - (1/eps^2) int J(x2, eps^2 zeta)`,
//! evaluated by the midpoint rule on cells. Admissible fields satisfy
//! `0 <= zeta <= Lambda/eps^2`, mass at most kappa, support inside the
//! working box D.

use crate::error::{Error, Result};
use crate::green::GreenOperator;
use crate::grid::{GridSpec, Rect, ScalarField, VorticityField};
use crate::model::ModelFunctions;

/// Solver tolerances.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Relative mass tolerance for the multiplier bisection.
    pub mass_tol: f64,
    /// Relative field-change threshold declaring the fixed point reached.
    pub fixedpoint_tol: f64,
    /// Relative tolerance for scalar bisections (roots of analytic equations).
    pub bisection_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mass_tol: 1e-10,
            fixedpoint_tol: 1e-9,
            bisection_tol: 1e-12,
        }
    }
}

/// Physical and algorithmic parameters of one solve.
#[derive(Debug, Clone)]
pub struct Params {
    /// Travel speed W > 0.
    pub speed: f64,
    /// Circulation kappa > 0.
    pub kappa: f64,
    /// Core scale eps > 0.
    pub epsilon: f64,
    /// Vorticity cap parameter Lambda > max(1, cf f(0+)).
    pub lambda: f64,
    pub model: ModelFunctions,
    /// Working box D (support constraint).
    pub domain: Rect,
    pub grid: GridSpec,
    pub tol: Tolerances,
    pub max_iterations: usize,
}

impl Params {
    /// Pointwise cap Lambda / eps^2.
    pub fn cap(&self) -> f64 {
        self.lambda / (self.epsilon * self.epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("speed", self.speed),
            ("kappa", self.kappa),
            ("epsilon", self.epsilon),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be > 0")));
            }
        }
        let floor = 1.0f64.max(self.model.cf() * self.model.f_shape().limit_at_zero_plus());
        if !(self.lambda.is_finite() && self.lambda > floor) {
            return Err(Error::InvalidArgument(format!(
                "lambda = {} must exceed max(1, cf f(0+)) = {floor}",
                self.lambda
            )));
        }
        let g = &self.grid;
        let d = &self.domain;
        if !(d.x1_min > g.x1_min()
            && d.x1_max < g.x1_max()
            && d.x2_min > g.x2_min()
            && d.x2_max < g.x2_max())
        {
            return Err(Error::Grid(
                "working box D must lie strictly inside the grid".into(),
            ));
        }
        if !g.symmetric_about_axis() {
            return Err(Error::Grid(
                "grid must be symmetric about x1 = 0 for the rearrangement steps".into(),
            ));
        }
        Ok(())
    }
}

/// The three energy terms; `total = kinetic - transport - penalty`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub kinetic: f64,
    pub transport: f64,
    pub penalty: f64,
    pub total: f64,
}

impl EnergyReport {
    pub fn summary(&self) -> String {
        format!(
            "kinetic={:.12e} transport={:.12e} penalty={:.12e} total={:.12e}",
            self.kinetic, self.transport, self.penalty, self.total
        )
    }
}

/// Check cap and support admissibility, naming offending cells.
pub fn check_admissible(zeta: &VorticityField, p: &Params) -> Result<()> {
    let g = zeta.grid();
    let cap = p.cap() * (1.0 + 1e-12);
    let mut bad = Vec::new();
    for j in 0..g.n2() {
        for i in 0..g.n1() {
            let v = zeta.field().get(i, j);
            if v > cap {
                bad.push(format!("({i},{j}): {v:.3e} above cap"));
            } else if v > 0.0 && !p.domain.contains(g.x1(i), g.x2(j)) {
                bad.push(format!("({i},{j}): support outside D"));
            }
            if bad.len() >= 4 {
                return Err(Error::Admissibility(format!(
                    "admissibility violated at cells {bad:?} ..."
                )));
            }
        }
    }
    if !bad.is_empty() {
        return Err(Error::Admissibility(format!(
            "admissibility violated at cells {bad:?}"
        )));
    }
    Ok(())
}

/// Evaluate the energy with a fresh Green-operator application.
pub fn energy_eval(op: &GreenOperator, zeta: &VorticityField, p: &Params) -> Result<EnergyReport> {
    check_admissible(zeta, p)?;
    let stream = op.apply(zeta)?;
    energy_eval_with_stream(op, zeta, &stream, p)
}

/// Energy terms given the precomputed stream field `G zeta`.
pub fn energy_eval_with_stream(
    op: &GreenOperator,
    zeta: &VorticityField,
    stream: &ScalarField,
    p: &Params,
) -> Result<EnergyReport> {
    let g = zeta.grid();
    let area = g.cell_area();
    let kinetic = op.quadratic_form_with_stream(zeta, stream);
    let eps2 = p.epsilon * p.epsilon;
    let mut transport = 0.0;
    let mut penalty = 0.0;
    for j in 0..g.n2() {
        let x2 = g.x2(j);
        for i in 0..g.n1() {
            let v = zeta.field().get(i, j);
            if v > 0.0 {
                transport += x2 * v;
                penalty += p.model.conjugate_j(x2, eps2 * v)?.value;
            }
        }
    }
    transport *= p.speed * area;
    penalty *= area / eps2;
    Ok(EnergyReport {
        kinetic,
        transport,
        penalty,
        total: kinetic - transport - penalty,
    })
}

/// Position fill order for one row: center cell first (odd width), then
/// pairs at increasing distance from the axis, right before left.
fn symmetric_order(n1: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(n1);
    if n1 % 2 == 1 {
        let mid = n1 / 2;
        order.push(mid);
        for k in 1..=n1 / 2 {
            order.push(mid + k);
            order.push(mid - k);
        }
    } else {
        for k in 0..n1 / 2 {
            order.push(n1 / 2 + k);
            order.push(n1 / 2 - 1 - k);
        }
    }
    order
}

/// Steiner symmetrization about the line x1 = 0: every grid row is replaced
/// by the symmetric-decreasing rearrangement of its values (a permutation, so
/// row sums, the value multiset, cap and mass are preserved exactly).
pub fn steiner_symmetrize(zeta: &VorticityField) -> VorticityField {
    let g = zeta.grid().clone();
    assert!(
        g.symmetric_about_axis(),
        "steiner_symmetrize needs a grid symmetric about x1 = 0"
    );
    let n1 = g.n1();
    let order = symmetric_order(n1);
    let mut out = ScalarField::zeros(g.clone());
    let mut row = vec![0.0f64; n1];
    for j in 0..g.n2() {
        for (i, r) in row.iter_mut().enumerate() {
            *r = zeta.field().get(i, j);
        }
        row.sort_unstable_by(|a, b| b.total_cmp(a));
        for (rank, &pos) in order.iter().enumerate() {
            out.set(pos, j, row[rank]);
        }
    }
    VorticityField::from_nonneg(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::model::ModelFunctions;

    fn test_params(grid: GridSpec) -> Params {
        Params {
            speed: 1.0 / (4.0 * std::f64::consts::PI),
            kappa: 1.0,
            epsilon: 0.05,
            lambda: 10.0,
            model: ModelFunctions::vorticity_only(1.0).unwrap(),
            domain: Rect::new(-1.0, 1.0, 0.5, 2.0).unwrap(),
            grid,
            tol: Tolerances::default(),
            max_iterations: 500,
        }
    }

    fn disc_field(g: &GridSpec, center: [f64; 2], radius: f64, kappa: f64) -> VorticityField {
        let f = ScalarField::from_fn(g.clone(), |x1, x2| {
            let d2 = (x1 - center[0]).powi(2) + (x2 - center[1]).powi(2);
            if d2 <= radius * radius {
                1.0
            } else {
                0.0
            }
        });
        let mut z = VorticityField::new(f).unwrap();
        z.scale_to_mass(kappa).unwrap();
        z
    }

    #[test]
    fn zero_field_has_zero_energy() {
        let d = Rect::new(-1.0, 1.0, 0.5, 2.0).unwrap();
        let g = GridSpec::covering(&d, 0.05, 2).unwrap();
        let p = test_params(g.clone());
        let op = GreenOperator::new(&g).unwrap();
        let e = energy_eval(&op, &VorticityField::zeros(g), &p).unwrap();
        assert_eq!(e.total, 0.0);
        assert_eq!(e.kinetic, 0.0);
    }

    #[test]
    fn seed_disc_energy_matches_log_scale() {
        // Uniform disc of mass 1, radius eps sqrt(kappa/pi) at (0, r1*):
        // total = (1/4pi) ln(1/eps) + O(1).
        let eps = 0.05;
        let d = Rect::new(-1.0, 1.0, 0.5, 2.0).unwrap();
        let g = GridSpec::covering(&d, eps / 6.0, 2).unwrap();
        let p = test_params(g.clone());
        let radius = eps * (1.0f64 / std::f64::consts::PI).sqrt();
        let zeta = disc_field(&g, [0.0, 1.0], radius, 1.0);
        let op = GreenOperator::new(&g).unwrap();
        let e = energy_eval(&op, &zeta, &p).unwrap();
        let log_term = (1.0 / eps).ln() / (4.0 * std::f64::consts::PI);
        assert!(
            (e.total - log_term).abs() < 1.0,
            "total {} vs leading term {log_term}",
            e.total
        );
        assert_eq!(e.total, e.kinetic - e.transport - e.penalty);

        // Direct double-sum oracle for the kinetic term over the support.
        let cells: Vec<(usize, usize, f64)> = {
            let mut v = Vec::new();
            for j in 0..g.n2() {
                for i in 0..g.n1() {
                    let z = zeta.field().get(i, j);
                    if z > 0.0 {
                        v.push((i, j, z));
                    }
                }
            }
            v
        };
        let c0 = crate::green::self_cell_constant();
        let h = g.h();
        let mut direct = 0.0;
        for &(i1, j1, z1) in &cells {
            for &(i2, j2, z2) in &cells {
                let k = if i1 == i2 && j1 == j2 {
                    ((1.0 / h).ln() + c0) / (2.0 * std::f64::consts::PI)
                } else {
                    let d1 = (i1 as f64 - i2 as f64) * h;
                    let d2 = (j1 as f64 - j2 as f64) * h;
                    -(d1 * d1 + d2 * d2).ln() / (4.0 * std::f64::consts::PI)
                };
                let d1 = (i1 as f64 - i2 as f64) * h;
                let dp = g.x2(j1) + g.x2(j2);
                let kimg = -(d1 * d1 + dp * dp).ln() / (4.0 * std::f64::consts::PI);
                direct += z1 * z2 * (k - kimg);
            }
        }
        direct *= 0.5 * h * h * h * h;
        assert!(
            (e.kinetic - direct).abs() < 1e-10 * direct.abs(),
            "fft {} vs direct {}",
            e.kinetic,
            direct
        );
    }

    #[test]
    fn kinetic_term_is_quadratic() {
        let d = Rect::new(-1.0, 1.0, 0.5, 2.0).unwrap();
        let g = GridSpec::covering(&d, 0.02, 2).unwrap();
        let mut p = test_params(g.clone());
        p.lambda = 1e9; // relax the cap so doubling stays admissible
        let zeta = disc_field(&g, [0.0, 1.0], 0.1, 1.0);
        let doubled = {
            let mut f = zeta.field().clone();
            for v in f.data_mut() {
                *v *= 2.0;
            }
            VorticityField::new(f).unwrap()
        };
        let op = GreenOperator::new(&g).unwrap();
        let e1 = energy_eval(&op, &zeta, &p).unwrap();
        let e2 = energy_eval(&op, &doubled, &p).unwrap();
        assert!((e2.kinetic - 4.0 * e1.kinetic).abs() < 1e-12 * e1.kinetic.abs());
    }

    #[test]
    fn admissibility_errors_name_cells() {
        let d = Rect::new(-1.0, 1.0, 0.5, 2.0).unwrap();
        let g = GridSpec::covering(&d, 0.05, 2).unwrap();
        let p = test_params(g.clone());
        let op = GreenOperator::new(&g).unwrap();

        let mut over_cap = ScalarField::zeros(g.clone());
        over_cap.set(20, 20, p.cap() * 2.0);
        let z = VorticityField::new(over_cap).unwrap();
        assert!(matches!(
            energy_eval(&op, &z, &p),
            Err(Error::Admissibility(_))
        ));

        let mut outside = ScalarField::zeros(g.clone());
        outside.set(1, 1, 1.0); // margin cell, outside D
        let z = VorticityField::new(outside).unwrap();
        assert!(matches!(
            energy_eval(&op, &z, &p),
            Err(Error::Admissibility(_))
        ));
    }

    #[test]
    fn steiner_matches_sort_and_interleave_oracle() {
        // Row [0,3,1,0,2] (center at index 2) from a width-5 symmetric grid.
        let g = GridSpec::new(-1.25, 0.0, 0.5, 5, 1).unwrap();
        let f = ScalarField::from_data(g, vec![0.0, 3.0, 1.0, 0.0, 2.0]).unwrap();
        let z = VorticityField::new(f).unwrap();
        let out = steiner_symmetrize(&z);
        assert_eq!(out.data(), &[0.0, 1.0, 3.0, 2.0, 0.0]);
        // Same multiset, same row sum.
        assert_eq!(out.data().iter().sum::<f64>(), 6.0);
    }

    #[test]
    fn steiner_fixes_symmetric_decreasing_rows() {
        let g = GridSpec::new(-1.0, 0.0, 0.25, 8, 2).unwrap();
        let f = ScalarField::from_data(
            g,
            vec![
                0.0, 1.0, 2.0, 5.0, 5.0, 2.0, 1.0, 0.0, //
                0.5, 1.0, 1.5, 2.0, 2.0, 1.5, 1.0, 0.5,
            ],
        )
        .unwrap();
        let z = VorticityField::new(f.clone()).unwrap();
        let out = steiner_symmetrize(&z);
        assert_eq!(out.field(), &f);
    }

    #[test]
    fn steiner_never_decreases_kinetic_energy() {
        use rand::{Rng, SeedableRng};
        let d = Rect::new(-0.9, 0.9, 0.4, 1.6) .unwrap();
        let g = GridSpec::covering(&d, 0.1, 2).unwrap();
        let op = GreenOperator::new(&g).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..8 {
            let f = ScalarField::from_fn(g.clone(), |x1, x2| {
                if d.contains(x1, x2) && rng.gen::<f64>() < 0.4 {
                    rng.gen::<f64>()
                } else {
                    0.0
                }
            });
            let z = VorticityField::new(f).unwrap();
            let zs = steiner_symmetrize(&z);
            let q0 = op.quadratic_form(&z).unwrap();
            let q1 = op.quadratic_form(&zs).unwrap();
            assert!(q1 >= q0 - 1e-9, "kinetic dropped: {q0} -> {q1}");
            assert!((zs.mass() - z.mass()).abs() <= 1e-14 * z.mass().max(1.0));
        }
    }

    #[test]
    fn full_energy_never_decreases_under_steiner() {
        use rand::{Rng, SeedableRng};
        let d = Rect::new(-0.9, 0.9, 0.5, 2.0).unwrap();
        let g = GridSpec::covering(&d, 0.05, 2).unwrap();
        let mut p = test_params(g.clone());
        p.epsilon = 0.3;
        let op = GreenOperator::new(&g).unwrap();
        let cap = p.cap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..4 {
            let f = ScalarField::from_fn(g.clone(), |x1, x2| {
                if d.contains(x1, x2) && rng.gen::<f64>() < 0.3 {
                    rng.gen::<f64>() * 0.1 * cap
                } else {
                    0.0
                }
            });
            let z = VorticityField::new(f).unwrap();
            let zs = steiner_symmetrize(&z);
            let e0 = energy_eval(&op, &z, &p).unwrap();
            let e1 = energy_eval(&op, &zs, &p).unwrap();
            // Transport and penalty are rowwise-invariant permutations.
            assert!((e1.transport - e0.transport).abs() <= 1e-12 * e0.transport.abs().max(1.0));
            assert!((e1.penalty - e0.penalty).abs() <= 1e-12 * e0.penalty.abs().max(1.0));
            assert!(e1.total >= e0.total - 1e-9);
        }
    }

    #[test]
    fn penalty_is_convex_per_cell() {
        let m = ModelFunctions::power_law_pair(2.0, 0.7).unwrap();
        for x2 in [0.6, 1.3] {
            for (a, b) in [(0.0, 0.4), (0.2, 1.1), (0.9, 3.0)] {
                let ja = m.conjugate_j(x2, a).unwrap().value;
                let jb = m.conjugate_j(x2, b).unwrap().value;
                let jm = m.conjugate_j(x2, 0.5 * (a + b)).unwrap().value;
                assert!(jm <= 0.5 * (ja + jb) + 1e-12);
            }
        }
    }
}
