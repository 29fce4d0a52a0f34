//! Brute-force enumeration of complementarity eigenpairs for small pairs.
//!
//! For every support set `J`, the positive eigenvectors of the principal
//! sub-pair `(A_J, B_J)` are found by multistart Newton on
//! `λ B_J y^{m-1} = A_J y^{m-1}`, `yᵀy = 1`; they are kept when the
//! complement `w` is nonnegative off `J`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::extract::{assess, CEigenpair, Normalization};
use crate::par::{map_range, Exec};
use crate::tensor::TensorPair;

/// Settings for the enumerator.
#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub newton_starts: usize,
    pub newton_iters: usize,
    pub dedup_tol: f64,
    pub feasibility_tol: f64,
    pub seed: u64,
    /// Size guard on `n`.
    pub max_dim: usize,
    /// Size guard on `m`.
    pub max_order: usize,
    pub exec: Exec,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            newton_starts: 200,
            newton_iters: 50,
            dedup_tol: 1e-7,
            feasibility_tol: 1e-8,
            seed: 17,
            max_dim: 4,
            max_order: 4,
            exec: Exec::default(),
        }
    }
}

/// Solutions on one support set.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSolutions {
    /// `(λ, y)` with `y > 0` on the support and `‖y‖ = 1`.
    pub solutions: Vec<(f64, Vec<f64>)>,
    /// More distinct solutions than the count bound allows: a continuum is likely.
    pub overflow: bool,
}

/// Output of [`enumerate_all`].
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub pairs: Vec<CEigenpair>,
    /// Supports whose solution count exceeded the bound.
    pub overflow: Vec<Vec<usize>>,
}

fn residual(pair: &TensorPair, y: &[f64], lambda: f64) -> DVector<f64> {
    let n = y.len();
    let w = pair.complement(lambda, y).expect("dimension checked");
    let mut f = DVector::zeros(n + 1);
    for i in 0..n {
        f[i] = w[i];
    }
    f[n] = 0.5 * (y.iter().map(|v| v * v).sum::<f64>() - 1.0);
    f
}

fn newton(pair: &TensorPair, mut y: Vec<f64>, mut lambda: f64, iters: usize) -> Option<(f64, Vec<f64>)> {
    let n = y.len();
    let mut f = residual(pair, &y, lambda);
    for _ in 0..iters {
        let fnorm = f.norm();
        if fnorm < 1e-13 {
            break;
        }
        let ja = pair.a.contract_jacobian(&y).ok()?;
        let jb = pair.b.contract_jacobian(&y).ok()?;
        let by = pair.b.apply_contract(&y).ok()?;
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for k in 0..n {
                jac[(i, k)] = lambda * jb[(i, k)] - ja[(i, k)];
            }
            jac[(i, n)] = by[i];
            jac[(n, i)] = y[i];
        }
        let step = jac.lu().solve(&(-&f))?;
        let mut alpha = 1.0;
        loop {
            let yt: Vec<f64> = y.iter().zip(step.iter()).map(|(a, d)| a + alpha * d).collect();
            let lt = lambda + alpha * step[n];
            let ft = residual(pair, &yt, lt);
            if ft.norm() < fnorm || alpha < 1e-4 {
                y = yt;
                lambda = lt;
                f = ft;
                break;
            }
            alpha *= 0.5;
        }
        if !lambda.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return None;
        }
    }
    (f.amax() < 1e-10).then_some((lambda, y))
}

/// Positive eigenvectors of the principal sub-pair on `subset` (zero-based, sorted).
pub fn enumerate_support(pair: &TensorPair, subset: &[usize], cfg: &OracleConfig) -> Result<SupportSolutions> {
    let sub = pair.principal(subset)?;
    let (k, m) = (subset.len(), pair.order());
    if k == 1 {
        let (a, b) = (sub.a.entries()[0], sub.b.entries()[0]);
        let solutions = if b != 0.0 { vec![(a / b, vec![1.0])] } else { Vec::new() };
        let overflow = b == 0.0 && a == 0.0;
        return Ok(SupportSolutions { solutions, overflow });
    }
    let key = subset.iter().fold(cfg.seed, |h, &i| h.wrapping_mul(0x100_0000_01b3).wrapping_add(i as u64 + 1));
    let runs = map_range(cfg.exec, cfg.newton_starts, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(key ^ (s as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut y: Vec<f64> = (0..k).map(|_| rng.random_range(0.02..1.0)).collect();
        let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= nrm);
        let bym = sub.b.full_contract(&y).ok()?;
        let lambda = if bym.abs() > 1e-12 {
            sub.a.full_contract(&y).ok()? / bym
        } else {
            rng.random_range(-1.0..1.0)
        };
        newton(&sub, y, lambda, cfg.newton_iters)
    });
    let mut solutions: Vec<(f64, Vec<f64>)> = Vec::new();
    for (lambda, y) in runs.into_iter().flatten() {
        if y.iter().any(|&v| v < cfg.feasibility_tol) {
            continue;
        }
        let dup = solutions
            .iter()
            .any(|(_, z)| z.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) <= cfg.dedup_tol.max(1e-9) * 10.0);
        if !dup {
            solutions.push((lambda, y));
        }
    }
    let bound = k * m.pow(k as u32 - 1);
    let overflow = solutions.len() > bound;
    solutions.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(SupportSolutions { solutions, overflow })
}

/// Every eigenpair of a small pair, sorted by `λ`, with unit-norm eigenvectors.
pub fn enumerate_all(pair: &TensorPair, cfg: &OracleConfig) -> Result<OracleReport> {
    let (n, m) = (pair.dim(), pair.order());
    if n > cfg.max_dim || m > cfg.max_order || n >= 16 {
        return Err(Error::OracleSizeGuard { n, m });
    }
    let per_support = map_range(cfg.exec, (1usize << n) - 1, |mask| {
        let subset: Vec<usize> = (0..n).filter(|i| (mask + 1) >> i & 1 == 1).collect();
        enumerate_support(pair, &subset, cfg).map(|s| (subset, s))
    });
    let mut pairs = Vec::new();
    let mut overflow = Vec::new();
    for item in per_support {
        let (subset, sols) = item?;
        if sols.overflow {
            overflow.push(subset.clone());
        }
        for (lambda, y) in sols.solutions {
            let mut x = vec![0.0; n];
            for (&i, &v) in subset.iter().zip(&y) {
                x[i] = v;
            }
            let w = pair.complement(lambda, &x)?;
            let off_ok = (0..n).filter(|i| !subset.contains(i)).all(|i| w[i] >= -cfg.feasibility_tol);
            if !off_ok {
                continue;
            }
            if let Some(c) = assess(pair, lambda, &x, Normalization::Sphere) {
                pairs.push(c);
            }
        }
    }
    pairs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(OracleReport { pairs, overflow })
}

/// Outcome of matching two eigenpair lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchReport {
    /// `(solver index, oracle index)`.
    pub matched: Vec<(usize, usize)>,
    /// Oracle entries without a solver counterpart.
    pub missing: Vec<f64>,
    /// Solver entries without an oracle counterpart.
    pub extra: Vec<f64>,
}

impl MatchReport {
    pub fn is_full_match(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }
}

fn direction(x: &[f64]) -> Vec<f64> {
    let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter().map(|v| v / nrm.max(1e-300)).collect()
}

/// Match eigenpairs by `λ` within `tol` and by eigenvector direction within
/// `1e-3`, so that differently normalized vectors compare equal.
pub fn compare(solver: &[CEigenpair], oracle: &[CEigenpair], tol: f64) -> MatchReport {
    let mut used = vec![false; solver.len()];
    let mut report = MatchReport::default();
    for (j, o) in oracle.iter().enumerate() {
        let od = direction(&o.x);
        let hit = solver.iter().enumerate().position(|(i, s)| {
            !used[i] && (s.lambda - o.lambda).abs() <= tol && {
                let sd = direction(&s.x);
                sd.iter().zip(&od).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) <= 1e-3
            }
        });
        match hit {
            Some(i) => {
                used[i] = true;
                report.matched.push((i, j));
            }
            None => report.missing.push(o.lambda),
        }
    }
    report.extra = solver.iter().zip(&used).filter(|(_, &u)| !u).map(|(s, _)| s.lambda).collect();
    report
}

/// Match two lists of eigenvalues as multisets within `tol`.
pub fn compare_values(solver: &[f64], oracle: &[f64], tol: f64) -> MatchReport {
    let mut used = vec![false; solver.len()];
    let mut report = MatchReport::default();
    for (j, &o) in oracle.iter().enumerate() {
        let hit = (0..solver.len())
            .filter(|&i| !used[i] && (solver[i] - o).abs() <= tol)
            .min_by(|&a, &b| (solver[a] - o).abs().total_cmp(&(solver[b] - o).abs()));
        match hit {
            Some(i) => {
                used[i] = true;
                report.matched.push((i, j));
            }
            None => report.missing.push(o),
        }
    }
    report.extra = solver.iter().zip(&used).filter(|(_, &u)| !u).map(|(s, _)| *s).collect();
    report
}

/// Distinct values of a sorted list, merging entries closer than `tol`.
pub fn distinct(values: &[f64], tol: f64) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for x in v {
        if out.last().is_none_or(|&l| (x - l).abs() > tol) {
            out.push(x);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn single_supports_of_alternating_family() {
        let pair = instances::alternating_pair(3);
        let cfg = OracleConfig::default();
        let s1 = enumerate_support(&pair, &[0], &cfg).unwrap();
        assert_eq!(s1.solutions, vec![(-3.0, vec![1.0])]);
        let s3 = enumerate_support(&pair, &[2], &cfg).unwrap();
        assert!((s3.solutions[0].0 + 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_pair_overflows() {
        let pair = TensorPair::new(crate::Tensor::identity(3, 2), crate::Tensor::identity(3, 2)).unwrap();
        let s = enumerate_support(&pair, &[0, 1], &OracleConfig::default()).unwrap();
        assert!(s.overflow);
        assert!(s.solutions.iter().all(|(l, _)| (l - 1.0).abs() < 1e-9));
    }

    #[test]
    fn first_example() {
        let pair = instances::ling_2x4();
        let rep = enumerate_all(&pair, &OracleConfig::default()).unwrap();
        let got = distinct(&rep.pairs.iter().map(|p| p.lambda).collect::<Vec<_>>(), 1e-6);
        let want = [0.4678, 0.4848, 0.4991];
        assert_eq!(got.len(), 3, "{got:?}");
        assert!(got.iter().zip(want).all(|(g, w)| (g - w).abs() < 1e-3), "{got:?}");
    }

    #[test]
    fn size_guard() {
        let pair = instances::alternating_pair(5);
        assert!(matches!(enumerate_all(&pair, &OracleConfig::default()), Err(Error::OracleSizeGuard { .. })));
    }

    #[test]
    fn comparison_reports() {
        let pair = instances::ling_2x4();
        let rep = enumerate_all(&pair, &OracleConfig::default()).unwrap();
        assert!(compare(&rep.pairs, &rep.pairs, 1e-9).is_full_match());
        let fewer = &rep.pairs[1..];
        let r = compare(fewer, &rep.pairs, 1e-9);
        assert_eq!(r.missing.len(), 1);
        assert!(r.extra.is_empty());
        // rescaled eigenvectors still match
        let scaled: Vec<CEigenpair> = rep
            .pairs
            .iter()
            .map(|p| CEigenpair { x: p.x.iter().map(|v| v * 3.5).collect(), ..p.clone() })
            .collect();
        assert!(compare(&scaled, &rep.pairs, 1e-9).is_full_match());
        assert_eq!(compare_values(&[1.0, 2.0], &[2.0, 1.0 + 1e-6], 1e-5).matched.len(), 2);
    }
}
