//! Moment relaxations as semidefinite programs, and their solution.
//!
//! A relaxation of order `k` has the moment vector `y` (all monomials up to
//! degree `2k`) as its variable:
//!
//! ```text
//! min / max  ⟨f, y⟩
//! s.t.       y_0 = 1,  ⟨h·x^δ, y⟩ = 0  for every equality h and |δ| ≤ 2(k − ⌈deg h/2⌉),
//!            M_k(y) ⪰ 0,  L_g^{(k)}(y) ⪰ 0  for every inequality g.
//! ```

mod ipm;

pub use ipm::{assemble_schur, solve, InfeasibilityCertificate, SdpSettings};

use crate::error::{Error, Result};
use crate::moment::{basis, LocalizingOp, Tms};
use crate::poly::Polynomial;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A Lasserre relaxation in the form consumed by [`solve`].
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub n: usize,
    pub order: usize,
    pub sense: Sense,
    /// Objective coefficients over the degree-`2k` basis, in the stated sense.
    pub objective: Vec<f64>,
    /// Operators whose realizations must be PSD; the first is `M_k`.
    pub psd_blocks: Vec<LocalizingOp>,
    /// Sparse equality rows `Σ coef·y[rank] = rhs`; row 0 is the normalization.
    pub equalities: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
}

impl SdpProblem {
    pub fn nvar(&self) -> usize {
        crate::poly::monomial_count(self.n, 2 * self.order)
    }
}

/// Build the order-`k` relaxation of `opt f s.t. h = 0, g ≥ 0`.
pub fn build_relaxation(
    objective: &Polynomial,
    equalities: &[Polynomial],
    inequalities: &[Polynomial],
    k: usize,
    sense: Sense,
) -> Result<SdpProblem> {
    let n = objective.nvars();
    let max_deg = std::iter::once(objective)
        .chain(equalities)
        .chain(inequalities)
        .map(Polynomial::degree)
        .max()
        .unwrap_or(0);
    if k == 0 || max_deg > 2 * k {
        return Err(Error::OrderTooSmall { k, degree: max_deg });
    }
    for p in equalities.iter().chain(inequalities) {
        if p.nvars() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.nvars() });
        }
    }
    let full = basis(n, 2 * k);
    let objective_vec = objective.coefficients(&full)?;

    let mut psd_blocks = vec![LocalizingOp::moment(n, k)];
    for g in inequalities {
        psd_blocks.push(LocalizingOp::new(g, k)?);
    }

    let mut rows = vec![vec![(0usize, 1.0)]];
    let mut rhs = vec![1.0];
    for h in equalities {
        if h.is_zero() {
            continue;
        }
        let half = k - h.degree().div_ceil(2);
        let shifts = basis(n, 2 * half);
        for delta in shifts.monomials() {
            let row = h
                .shift(delta)
                .terms()
                .map(|(m, c)| (full.rank(m).expect("degree checked"), c))
                .collect();
            rows.push(row);
            rhs.push(0.0);
        }
    }
    Ok(SdpProblem {
        n,
        order: k,
        sense,
        objective: objective_vec,
        psd_blocks,
        equalities: rows,
        rhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// Solver verdict for one relaxation.
#[derive(Debug, Clone)]
pub struct SdpOutcome {
    pub status: SdpStatus,
    /// Objective value in the problem's sense (meaningful when optimal).
    pub value: f64,
    pub y: Tms,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    /// Set when the solver stopped at the relaxed tolerance level.
    pub reduced_accuracy: bool,
    pub certificate: Option<InfeasibilityCertificate>,
}

impl SdpOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

/// Relaxation value of `max f s.t. h = 0, g ≥ 0, f ≤ upper` at order `k`.
///
/// Returns `Ok(None)` when the relaxation is infeasible; the value is an
/// upper bound on the true maximum.
pub fn solve_value_probe(
    objective: &Polynomial,
    equalities: &[Polynomial],
    inequalities: &[Polynomial],
    upper: f64,
    k: usize,
    settings: &SdpSettings,
) -> Result<(Option<f64>, SdpOutcome)> {
    let mut ineq = inequalities.to_vec();
    ineq.push((-objective).add_constant(upper));
    let problem = build_relaxation(objective, equalities, &ineq, k, Sense::Maximize)?;
    let out = solve(&problem, settings);
    match out.status {
        SdpStatus::Optimal => Ok((Some(out.value), out)),
        SdpStatus::Infeasible => Ok((None, out)),
        SdpStatus::Unbounded => Ok((Some(f64::INFINITY), out)),
        SdpStatus::NumericalFailure => Err(Error::NumericalFailure(format!(
            "value probe at order {k} stopped after {} iterations",
            out.iterations
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moment::point_moments;
    use crate::poly::Monomial;

    fn x() -> Polynomial {
        Polynomial::var(1, 0)
    }

    fn x2_minus(c: f64) -> Polynomial {
        Polynomial::from_terms(1, [(Monomial(vec![2]), 1.0), (Monomial(vec![0]), -c)])
    }

    #[test]
    fn toy_relaxation_optimum() {
        // at order 1 the symmetric measure on {-1, 1} is still feasible
        let p = build_relaxation(&x(), &[x2_minus(1.0)], &[x()], 1, Sense::Minimize).unwrap();
        let out = solve(&p, &SdpSettings::default());
        assert_eq!(out.status, SdpStatus::Optimal);
        assert!(out.value.abs() < 1e-6, "{}", out.value);
        let p = build_relaxation(&x(), &[x2_minus(1.0)], &[x()], 2, Sense::Minimize).unwrap();
        let out = solve(&p, &SdpSettings::default());
        assert_eq!(out.status, SdpStatus::Optimal);
        assert!((out.value - 1.0).abs() < 1e-6, "{}", out.value);
        assert!((out.y.values()[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_real_variety_is_infeasible() {
        let h = Polynomial::from_terms(1, [(Monomial(vec![2]), 1.0), (Monomial(vec![0]), 1.0)]);
        for k in 1..=3 {
            let p = build_relaxation(&x(), std::slice::from_ref(&h), &[], k, Sense::Minimize).unwrap();
            let out = solve(&p, &SdpSettings::default());
            assert_eq!(out.status, SdpStatus::Infeasible, "k = {k}");
            let cert = out.certificate.expect("certificate");
            assert!(cert.verify(&p, &SdpSettings::default()).unwrap() >= 1e-10);
        }
    }

    #[test]
    fn order_too_small_is_rejected() {
        let h = x2_minus(1.0).shift(&Monomial(vec![2]));
        assert!(matches!(
            build_relaxation(&x(), &[h], &[], 1, Sense::Minimize),
            Err(Error::OrderTooSmall { .. })
        ));
    }

    #[test]
    fn dirac_points_are_feasible() {
        let p = build_relaxation(&x(), &[x2_minus(1.0)], &[x()], 2, Sense::Minimize).unwrap();
        let y = point_moments(&[1.0], 4);
        for (row, rhs) in p.equalities.iter().zip(&p.rhs) {
            let v: f64 = row.iter().map(|&(r, c)| c * y.values()[r]).sum();
            assert!((v - rhs).abs() < 1e-12);
        }
        for op in &p.psd_blocks {
            let m = op.realize(y.values());
            assert!(m.symmetric_eigen().eigenvalues.min() > -1e-12);
        }
    }

    #[test]
    fn toy_bounds_below_true_minimum() {
        // min x over {x² = c} ∩ {x ≥ 0}: the answer is sqrt(c)
        for c in [0.25, 1.0, 4.0] {
            for k in 1..=3 {
                let p = build_relaxation(&x(), &[x2_minus(c)], &[x()], k, Sense::Minimize).unwrap();
                let out = solve(&p, &SdpSettings::default());
                assert!(out.is_optimal());
                assert!(out.value <= c.sqrt() + 1e-6);
            }
        }
    }

    #[test]
    fn probe_values() {
        // feasible set {-1, 1}; objective x; bound above the max returns the max
        let (v, _) = solve_value_probe(&x(), &[x2_minus(1.0)], &[], 5.0, 2, &SdpSettings::default()).unwrap();
        assert!((v.unwrap() - 1.0).abs() < 1e-6);
        // bound below the minimum: infeasible
        let (v, _) = solve_value_probe(&x(), &[x2_minus(1.0)], &[], -2.0, 2, &SdpSettings::default()).unwrap();
        assert!(v.is_none());
    }
}
