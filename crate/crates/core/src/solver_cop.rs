//! All complementarity eigenvalues in increasing order when `B` is strictly
//! copositive.
//!
//! Eigenvectors are normalized by `B x^m = 1`, so `λ = A x^m` and the
//! eigenvalues are the critical values of `A x^m` on the feasible set of
//! `p = 0, q ≥ 0`. The smallest is a polynomial minimum; each next one is the
//! minimum after cutting off everything up to `λ_prev + δ`.

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::extract::{
    certify_pair, flat_truncation_with, flat_witness, CEigenpair, Certificate, ExtractOptions, Method,
    Normalization, RANK_TOL,
};
use crate::moment::Tms;
use crate::poly::{build_cop_system, CopSystem, Polynomial};
use crate::sdp::{build_relaxation, solve, solve_value_probe, SdpOutcome, SdpSettings, SdpStatus, Sense};
use crate::tensor::TensorPair;

/// Options for the copositive driver.
#[derive(Debug, Clone)]
pub struct CopOptions {
    pub delta0: f64,
    /// Largest relaxation order; `None` means `m + 3`.
    pub k_max: Option<usize>,
    /// Eigenvalues closer than `eig_cluster_tol · max(1, |λ|)` are merged.
    pub eig_cluster_tol: f64,
    /// A probe value within `probe_tol · max(1, |λ|)` of `λ` shows an empty window.
    pub probe_tol: f64,
    pub rank_tol: f64,
    /// Skip the entrywise positivity test on `B`.
    pub assert_copositive: bool,
    pub sdp: SdpSettings,
    pub extract: ExtractOptions,
}

impl Default for CopOptions {
    fn default() -> Self {
        CopOptions {
            delta0: 0.05,
            k_max: None,
            eig_cluster_tol: 1e-4,
            probe_tol: 1e-6,
            rank_tol: RANK_TOL,
            assert_copositive: false,
            sdp: SdpSettings::default(),
            extract: ExtractOptions::default(),
        }
    }
}

impl CopOptions {
    pub fn k_max_for(&self, m: usize) -> usize {
        self.k_max.unwrap_or(m + 3).max(m)
    }

    fn cluster(&self, lambda: f64) -> f64 {
        self.eig_cluster_tol * lambda.abs().max(1.0)
    }
}

/// An eigenvalue with the certified eigenvectors found for it.
#[derive(Debug, Clone)]
pub struct EigenLevel {
    pub lambda: f64,
    pub pairs: Vec<CEigenpair>,
    /// Relaxation value that produced the level.
    pub bound: f64,
}

fn check_input(pair: &TensorPair, opts: &CopOptions) -> Result<()> {
    if !(opts.delta0 > 0.0) {
        return Err(Error::InvalidTensor("delta0 must be positive".into()));
    }
    if !opts.assert_copositive && !pair.b.entrywise_positive() {
        return Err(Error::NotCopositive);
    }
    Ok(())
}

fn solve_or_fail(objective: &Polynomial, eqs: &[Polynomial], ineqs: &[Polynomial], k: usize, sense: Sense, opts: &CopOptions) -> Result<SdpOutcome> {
    let problem = build_relaxation(objective, eqs, ineqs, k, sense)?;
    let out = solve(&problem, &opts.sdp);
    debug!(
        "order {k}: {:?} value {:.8} after {} iterations (pres {:.1e}, dres {:.1e}, gap {:.1e})",
        out.status, out.value, out.iterations, out.primal_residual, out.dual_residual, out.gap
    );
    if out.status == SdpStatus::NumericalFailure {
        return Err(Error::NumericalFailure(format!(
            "order {k} relaxation stalled (pres {:.1e}, dres {:.1e}, gap {:.1e})",
            out.primal_residual, out.dual_residual, out.gap
        )));
    }
    Ok(out)
}

/// Certified eigenvectors carried by a flat moment vector, or `None` if it is not flat.
fn flat_pairs(pair: &TensorPair, y: &Tms, k: usize, opts: &CopOptions) -> Option<Vec<CEigenpair>> {
    let m = pair.order();
    let (t, r, witness) = flat_witness(y, k, m, opts.rank_tol, &opts.extract)?;
    let cert = Certificate { method: Method::Copositive, k, t, rank: r };
    let pairs: Vec<CEigenpair> = witness
        .atoms
        .iter()
        .filter_map(|u| certify_pair(pair, u, Normalization::BNormalized))
        .map(|mut c| {
            c.certificate = Some(cert.clone());
            c
        })
        .collect();
    (!pairs.is_empty()).then_some(pairs)
}

/// The mean point `(y_{e_1}, …, y_{e_n})` as a candidate; it is an optimizer
/// whenever the optimizer set is convex, including when it is a continuum.
fn mean_candidate(pair: &TensorPair, y: &Tms, k: usize, value: f64, opts: &CopOptions) -> Option<Vec<CEigenpair>> {
    let n = pair.dim();
    let x: Vec<f64> = (1..=n).map(|i| y.values()[i]).collect();
    let c = certify_pair(pair, &x, Normalization::BNormalized)?;
    ((c.lambda - value).abs() <= opts.cluster(value)).then(|| {
        vec![CEigenpair { certificate: Some(Certificate { method: Method::Copositive, k, t: 0, rank: 0 }), ..c }]
    })
}

/// Merge pairs whose eigenvectors coincide, keeping the first.
fn dedup_vectors(pairs: Vec<CEigenpair>) -> Vec<CEigenpair> {
    let mut out: Vec<CEigenpair> = Vec::new();
    for p in pairs {
        let dup = out
            .iter()
            .any(|q| q.x.iter().zip(&p.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) <= 1e-6);
        if !dup {
            out.push(p);
        }
    }
    out
}

fn level(pairs: Vec<CEigenpair>, bound: f64) -> EigenLevel {
    let pairs = dedup_vectors(pairs);
    let lambda = pairs.iter().map(|p| p.lambda).sum::<f64>() / pairs.len() as f64;
    EigenLevel { lambda, pairs, bound }
}

/// Minimize `A x^m` over the eigenvector set with optional extra inequalities,
/// raising the order until flat truncation. `Ok(None)` means some relaxation
/// was infeasible.
fn minimize_level(pair: &TensorPair, sys: &CopSystem, extra: &[Polynomial], opts: &CopOptions) -> Result<Option<EigenLevel>> {
    let m = pair.order();
    let k_max = opts.k_max_for(m);
    let ineqs: Vec<Polynomial> = sys.q.iter().chain(extra).cloned().collect();
    let mut last: Option<(usize, SdpOutcome)> = None;
    for k in m..=k_max {
        let out = solve_or_fail(&sys.f0, &sys.p, &ineqs, k, Sense::Minimize, opts)?;
        match out.status {
            SdpStatus::Infeasible => return Ok(None),
            SdpStatus::Unbounded => continue,
            _ => {}
        }
        if let Some(pairs) = flat_pairs(pair, &out.y, k, opts) {
            // flat atoms are global minimizers: their λ equals the relaxation value
            let tol = opts.cluster(out.value);
            let pairs: Vec<CEigenpair> = pairs.into_iter().filter(|p| (p.lambda - out.value).abs() <= tol.max(1e-6)).collect();
            if !pairs.is_empty() {
                return Ok(Some(level(pairs, out.value)));
            }
        }
        last = Some((k, out));
    }
    if let Some((k, out)) = last {
        if let Some(pairs) = mean_candidate(pair, &out.y, k, out.value, opts) {
            warn!("no flat truncation up to order {k_max}; accepted the certified mean point at λ = {:.6}", pairs[0].lambda);
            return Ok(Some(level(pairs, out.value)));
        }
    }
    Err(Error::OrderCapReached { k_max })
}

/// The smallest eigenvalue and its eigenvectors.
pub fn smallest_ceig(pair: &TensorPair, opts: &CopOptions) -> Result<EigenLevel> {
    check_input(pair, opts)?;
    let sys = build_cop_system(pair);
    minimize_level(pair, &sys, &[], opts)?
        .ok_or_else(|| Error::NumericalFailure("smallest eigenvalue relaxation reported infeasible".into()))
}

/// A shift `δ` such that no eigenvalue lies in `(λ_prev, λ_prev + δ]`.
pub fn delta_probe(pair: &TensorPair, lambda_prev: f64, opts: &CopOptions) -> Result<f64> {
    check_input(pair, opts)?;
    let sys = build_cop_system(pair);
    delta_probe_sys(pair, &sys, lambda_prev, opts)
}

fn delta_probe_sys(pair: &TensorPair, sys: &CopSystem, lambda_prev: f64, opts: &CopOptions) -> Result<f64> {
    let m = pair.order();
    let k_max = opts.k_max_for(m);
    let tol = opts.probe_tol * lambda_prev.abs().max(1.0);
    let mut delta = opts.delta0;
    // below the acceptance tolerance the probe can no longer separate levels
    while delta >= 1e-10 && delta > 2.0 * tol {
        let mut accepted = false;
        for k in m..=k_max {
            let (tau, out) = solve_value_probe(&sys.f0, &sys.p, &sys.q, lambda_prev + delta, k, &opts.sdp)?;
            debug!("probe δ = {delta:.3e}, order {k}: τ = {tau:?}");
            let Some(tau) = tau else {
                accepted = true;
                break;
            };
            if tau <= lambda_prev + tol {
                accepted = true;
                break;
            }
            // a flat probe exhibits an eigenvalue inside the window
            if out.is_optimal() && flat_truncation_with(&out.y, k, m, opts.rank_tol).is_some() {
                break;
            }
        }
        if accepted {
            return Ok(delta);
        }
        delta *= 0.5;
    }
    Err(Error::DeltaUnderflow { previous: lambda_prev })
}

/// The next eigenvalue above `λ_prev + δ`, or `None` if there is none.
pub fn next_ceig(pair: &TensorPair, lambda_prev: f64, delta: f64, opts: &CopOptions) -> Result<Option<EigenLevel>> {
    check_input(pair, opts)?;
    let sys = build_cop_system(pair);
    next_ceig_sys(pair, &sys, lambda_prev, delta, opts)
}

fn next_ceig_sys(pair: &TensorPair, sys: &CopSystem, lambda_prev: f64, delta: f64, opts: &CopOptions) -> Result<Option<EigenLevel>> {
    let cut = sys.f0.add_constant(-(lambda_prev + delta));
    minimize_level(pair, sys, &[cut], opts)
}

/// Every eigenvalue, increasing, each with its certified eigenvectors.
pub fn all_ceigs_copositive(pair: &TensorPair, opts: &CopOptions) -> Result<Vec<EigenLevel>> {
    check_input(pair, opts)?;
    let sys = build_cop_system(pair);
    let (n, m) = (pair.dim(), pair.order());
    let bound = n * m.pow(n as u32 - 1);
    let first = minimize_level(pair, &sys, &[], opts)?
        .ok_or_else(|| Error::NumericalFailure("smallest eigenvalue relaxation reported infeasible".into()))?;
    let mut levels = vec![first];
    while levels.len() <= bound {
        let prev = levels.last().expect("nonempty").lambda;
        let delta = delta_probe_sys(pair, &sys, prev, opts)?;
        match next_ceig_sys(pair, &sys, prev, delta, opts)? {
            None => break,
            Some(lv) => {
                if lv.lambda <= prev + opts.cluster(prev) {
                    return Err(Error::NumericalFailure(format!(
                        "next eigenvalue {:.8} does not exceed {:.8}",
                        lv.lambda, prev
                    )));
                }
                levels.push(lv);
            }
        }
    }
    Ok(levels)
}

/// Flatten levels into a list of eigenpairs sorted by `λ`.
pub fn flatten(levels: &[EigenLevel]) -> Vec<CEigenpair> {
    levels.iter().flat_map(|l| l.pairs.iter().cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::tensor::Tensor;

    #[test]
    fn one_dimensional_pair() {
        let pair = TensorPair::new(Tensor::new(2, 1, vec![-0.7]).unwrap(), Tensor::new(2, 1, vec![1.0]).unwrap()).unwrap();
        let levels = all_ceigs_copositive(&pair, &CopOptions::default()).unwrap();
        assert_eq!(levels.len(), 1);
        assert!((levels[0].lambda + 0.7).abs() < 1e-8);
        assert!((levels[0].pairs[0].x[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn proportional_pair_has_single_eigenvalue() {
        let b = instances::ling_2x4().b;
        let pair = TensorPair::new(b.scaled(1.7), b).unwrap();
        let levels = all_ceigs_copositive(&pair, &CopOptions::default()).unwrap();
        assert_eq!(levels.len(), 1);
        assert!((levels[0].lambda - 1.7).abs() < 1e-6);
        assert!(levels[0].pairs[0].w.iter().all(|w| w.abs() < 1e-6));
    }

    #[test]
    fn refuses_non_copositive_b() {
        let pair = instances::alternating_pair(2);
        let mut p = pair.clone();
        p.b = p.b.scaled(-1.0);
        assert_eq!(smallest_ceig(&p, &CopOptions::default()).unwrap_err(), Error::NotCopositive);
    }

    #[test]
    fn smallest_of_first_example() {
        let pair = instances::ling_2x4();
        let lv = smallest_ceig(&pair, &CopOptions::default()).unwrap();
        assert!((lv.lambda - 0.4678).abs() < 1e-3, "{}", lv.lambda);
        let x = &lv.pairs[0].x;
        assert!((x[0] / x[1] - 0.8328 / 0.0585).abs() / (0.8328 / 0.0585) < 1e-2, "{x:?}");
        assert!((pair.b.full_contract(x).unwrap() - 1.0).abs() < 1e-8);
    }
}
