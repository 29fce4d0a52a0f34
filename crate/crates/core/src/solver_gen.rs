//! All complementarity eigenpairs of an arbitrary pair via the unit-sphere
//! formulation.
//!
//! Eigenvectors `x ≥ 0, ‖x‖ = 1` are the feasible points of the minor
//! equations `a_i b_j = b_i a_j` together with a sign condition on `ξᵀb(x)`.
//! They are visited in increasing order of a random positive objective `f`,
//! separately for `ξᵀb(x) ≥ 0` (case I) and `ξᵀb(x) ≤ 0` (case II).

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::extract::{
    certify_pair_with, flat_truncation_with, flat_witness, CEigenpair, Certificate, ExtractOptions, Method,
    Normalization, RANK_TOL,
};
use crate::par::{join, Exec};
use crate::poly::{build_gen_system, random_sos_objective, GenSystem, Polynomial};
use crate::sdp::{build_relaxation, solve, solve_value_probe, SdpSettings, SdpStatus, Sense};
use crate::tensor::TensorPair;

/// Options for the general driver.
#[derive(Debug, Clone)]
pub struct GenOptions {
    /// Seed for `ξ` and for the objective.
    pub seed: u64,
    pub delta0: f64,
    /// Largest relaxation order; `None` means `m + 3`.
    pub k_max: Option<usize>,
    pub level_cap: usize,
    /// Objective values closer than `level_tol · max(1, |f|)` count as equal.
    pub level_tol: f64,
    pub rank_tol: f64,
    pub sdp: SdpSettings,
    pub extract: ExtractOptions,
    pub exec: Exec,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            seed: 1,
            delta0: 0.05,
            k_max: None,
            level_cap: 50,
            level_tol: 1e-6,
            rank_tol: RANK_TOL,
            sdp: SdpSettings::default(),
            extract: ExtractOptions::default(),
            exec: Exec::default(),
        }
    }
}

impl GenOptions {
    pub fn k_max_for(&self, m: usize) -> usize {
        self.k_max.unwrap_or(m + 3).max(m)
    }

    fn tol(&self, f: f64) -> f64 {
        self.level_tol * f.abs().max(1.0)
    }
}

/// Sign branch of `ξᵀb(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// `ξᵀb(x) ≥ 0`.
    I,
    /// `ξᵀb(x) ≤ 0`.
    II,
}

/// One objective level found by a sweep.
#[derive(Debug, Clone)]
pub struct Level {
    pub value: f64,
    pub pairs: Vec<CEigenpair>,
}

/// Result of a sweep over one case.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub levels: Vec<Level>,
    /// Order at which the final relaxation was infeasible.
    pub exhausted_at: usize,
}

/// Unit vector with independent standard-normal entries, deterministic per seed.
pub fn random_direction(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nrm > 1e-12 {
            return v.into_iter().map(|a| a / nrm).collect();
        }
    }
}

fn xi_lambda(pair: &TensorPair, xi: &[f64], x: &[f64]) -> Option<f64> {
    let a = pair.a.hadamard_contract(x).ok()?;
    let b = pair.b.hadamard_contract(x).ok()?;
    let xa: f64 = xi.iter().zip(&a).map(|(p, q)| p * q).sum();
    let xb: f64 = xi.iter().zip(&b).map(|(p, q)| p * q).sum();
    (xb.abs() > 1e-8).then(|| xa / xb)
}

/// Certify a sphere point, using the `ξ` ratio for `λ` when it is defined.
pub fn certify_general(pair: &TensorPair, xi: &[f64], x: &[f64]) -> Option<CEigenpair> {
    certify_pair_with(pair, x, Normalization::Sphere, xi_lambda(pair, xi, x))
}

fn inequalities(sys: &GenSystem, case: Case) -> &[Polynomial] {
    match case {
        Case::I => &sys.g,
        Case::II => &sys.g_tilde,
    }
}

/// Visit the eigenvectors of one case in increasing order of `f`.
pub fn case_sweep(pair: &TensorPair, xi: &[f64], f: &Polynomial, case: Case, opts: &GenOptions) -> Result<Sweep> {
    let sys = build_gen_system(pair, xi)?;
    let m = pair.order();
    let k_max = opts.k_max_for(m);
    let mut levels: Vec<Level> = Vec::new();
    let mut floor = 0.0;
    for _ in 0..opts.level_cap {
        let mut ineqs: Vec<Polynomial> = inequalities(&sys, case).to_vec();
        ineqs.push(f.add_constant(-floor));
        let mut found = None;
        for k in m..=k_max {
            let problem = build_relaxation(f, &sys.h, &ineqs, k, Sense::Minimize)?;
            let out = solve(&problem, &opts.sdp);
            debug!("case {case:?}, floor {floor:.6}, order {k}: {:?} value {:.8}", out.status, out.value);
            match out.status {
                SdpStatus::Infeasible => return Ok(Sweep { levels, exhausted_at: k }),
                SdpStatus::NumericalFailure => {
                    return Err(Error::NumericalFailure(format!(
                        "case {case:?} order {k} relaxation stalled (pres {:.1e}, dres {:.1e}, gap {:.1e})",
                        out.primal_residual, out.dual_residual, out.gap
                    )))
                }
                SdpStatus::Unbounded => continue,
                SdpStatus::Optimal => {}
            }
            let Some((t, r, witness)) = flat_witness(&out.y, k, m, opts.rank_tol, &opts.extract) else { continue };
            let cert = Certificate { method: Method::General, k, t, rank: r };
            let pairs: Vec<CEigenpair> = witness
                .atoms
                .iter()
                .filter_map(|u| certify_general(pair, xi, u))
                .filter(|c| f.evaluate(&c.x).is_ok_and(|v| (v - out.value).abs() <= 1e-4 * out.value.abs().max(1.0)))
                .map(|mut c| {
                    c.certificate = Some(cert.clone());
                    c
                })
                .collect();
            if !pairs.is_empty() {
                found = Some(Level { value: out.value, pairs });
                break;
            }
        }
        let Some(level) = found else { return Err(Error::OrderCapReached { k_max }) };
        let value = level.value;
        levels.push(level);
        floor = value + level_gap(f, &sys, case, value, opts)?;
    }
    Err(Error::LevelCapExceeded(opts.level_cap))
}

/// A shift `δ` with no eigenvector of the case having `f ∈ (value, value + δ]`.
fn level_gap(f: &Polynomial, sys: &GenSystem, case: Case, value: f64, opts: &GenOptions) -> Result<f64> {
    let m = f.degree() / 2;
    let k_max = opts.k_max_for(m);
    let tol = opts.tol(value);
    let ineqs = inequalities(sys, case);
    let mut delta = opts.delta0;
    // below the acceptance tolerance the probe can no longer separate levels
    while delta >= 1e-10 && delta > 2.0 * tol {
        let mut accepted = false;
        for k in m..=k_max {
            let (theta, out) = solve_value_probe(f, &sys.h, ineqs, value + delta, k, &opts.sdp)?;
            debug!("level probe δ = {delta:.3e}, order {k}: θ = {theta:?}");
            let Some(theta) = theta else {
                accepted = true;
                break;
            };
            if theta <= value + tol {
                accepted = true;
                break;
            }
            if out.is_optimal() && flat_truncation_with(&out.y, k, m, opts.rank_tol).is_some() {
                break;
            }
        }
        if accepted {
            return Ok(delta);
        }
        delta *= 0.5;
    }
    Err(Error::DeltaUnderflow { previous: value })
}

/// Every eigenpair, sorted by `λ`.
pub fn all_ceigs_general(pair: &TensorPair, opts: &GenOptions) -> Result<Vec<CEigenpair>> {
    let (n, m) = (pair.dim(), pair.order());
    let xi = random_direction(n, opts.seed);
    let mut f = random_sos_objective(n, m, opts.seed.wrapping_add(0x9e37_79b9));
    let mut redrawn = false;
    loop {
        let (s1, s2) = join(
            opts.exec,
            || case_sweep(pair, &xi, &f, Case::I, opts),
            || case_sweep(pair, &xi, &f, Case::II, opts),
        );
        let (s1, s2) = (s1?, s2?);
        let tiny = s1.levels.iter().chain(&s2.levels).any(|l| l.value < 1e-8);
        if tiny && !redrawn {
            warn!("objective nearly vanishes at an eigenvector; redrawing it once");
            f = random_sos_objective(n, m, opts.seed.wrapping_add(0x7f4a_7c15));
            redrawn = true;
            continue;
        }
        let mut out: Vec<CEigenpair> = Vec::new();
        for p in s1.levels.into_iter().chain(s2.levels).flat_map(|l| l.pairs) {
            let dup = out
                .iter()
                .any(|q| q.x.iter().zip(&p.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) <= 1e-6);
            if !dup {
                out.push(p);
            }
        }
        out.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        return Ok(out);
    }
}

/// Whether both case sweeps end in an infeasible relaxation without finding anything.
pub fn certified_empty(pair: &TensorPair, opts: &GenOptions) -> Result<Option<usize>> {
    let (n, m) = (pair.dim(), pair.order());
    let xi = random_direction(n, opts.seed);
    let f = random_sos_objective(n, m, opts.seed.wrapping_add(0x9e37_79b9));
    let (s1, s2) = join(
        opts.exec,
        || case_sweep(pair, &xi, &f, Case::I, opts),
        || case_sweep(pair, &xi, &f, Case::II, opts),
    );
    let (s1, s2) = (s1?, s2?);
    Ok((s1.levels.is_empty() && s2.levels.is_empty()).then(|| s1.exhausted_at.max(s2.exhausted_at)))
}
