//! Flat truncation, atom extraction and eigenpair certification.

use nalgebra::{DMatrix, DVector, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moment::{basis, moment_matrix, point_moments, truncate, Tms};
use crate::tensor::TensorPair;

/// Default relative singular-value threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-6;
/// Acceptance threshold on complementarity residuals.
pub const ACCEPT_TOL: f64 = 1e-6;
/// Relative threshold separating the active set from zero components.
pub const ACTIVE_TOL: f64 = 1e-5;
/// How far refinement may move a candidate.
pub const REFINE_RADIUS: f64 = 1e-2;

/// How an eigenvector is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `xᵀx = 1`.
    Sphere,
    /// `B x^m = 1`.
    BNormalized,
}

/// Which procedure produced an eigenpair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Copositive,
    General,
    Oracle,
}

/// Relaxation data backing an eigenpair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub method: Method,
    /// Relaxation order at which flat truncation was observed.
    pub k: usize,
    pub t: usize,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖x ∘ w‖∞`.
    pub complementarity: f64,
    /// `|xᵀw|`.
    pub inner: f64,
    pub min_x: f64,
    pub min_w: f64,
    /// Deviation of the normalization from one.
    pub normalization: f64,
}

/// A certified complementarity eigenpair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CEigenpair {
    pub lambda: f64,
    pub x: Vec<f64>,
    /// `w = λ B x^{m-1} − A x^{m-1}`.
    pub w: Vec<f64>,
    pub residuals: Residuals,
    pub certificate: Option<Certificate>,
}

/// Atoms and weights of a flat moment sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatWitness {
    pub t: usize,
    pub rank: usize,
    pub atoms: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// `‖Σ ρ_i [u_i]_{2t} − y|_{2t}‖∞` relative to `max(1, ‖y‖∞)`.
    pub residual: f64,
}

/// Count singular values above `tol · max(σ_1, 1)`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let cut = tol * sv.max().max(1.0);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Smallest `t ∈ [d0, k]` with `rank M_{t−d0} = rank M_t`, using [`RANK_TOL`].
pub fn flat_truncation(y: &Tms, k: usize, d0: usize) -> Option<usize> {
    flat_truncation_with(y, k, d0, RANK_TOL).map(|(t, _)| t)
}

/// As [`flat_truncation`], returning `(t, rank)` under a chosen tolerance.
pub fn flat_truncation_with(y: &Tms, k: usize, d0: usize, tol: f64) -> Option<(usize, usize)> {
    if 2 * k > y.degree() {
        return None;
    }
    let ranks: Vec<usize> = (0..=k)
        .map(|t| moment_matrix(y, t).map(|m| numerical_rank(&m, tol)).unwrap_or(usize::MAX))
        .collect();
    (d0.max(1)..=k).find(|&t| ranks[t] == ranks[t - d0] && ranks[t] > 0).map(|t| (t, ranks[t]))
}

/// Flat truncation followed by extraction. If the atoms cannot be recovered,
/// the rank tolerance is loosened up to a hundredfold, since tiny weights on
/// near-optimal points blur the rank.
pub fn flat_witness(y: &Tms, k: usize, d0: usize, tol: f64, opts: &ExtractOptions) -> Option<(usize, usize, FlatWitness)> {
    let mut seen = None;
    for scale in [1.0, 10.0, 100.0] {
        let Some((t, r)) = flat_truncation_with(y, k, d0, tol * scale) else { continue };
        if seen == Some((t, r)) {
            continue;
        }
        seen = Some((t, r));
        match extract_atoms(y, t, r, opts) {
            Ok(w) => return Some((t, r, w)),
            Err(e) => log::debug!("flat at t = {t} (rank {r}) but extraction failed: {e}"),
        }
    }
    None
}

/// Extraction settings.
#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub rank_tol: f64,
    /// Largest accepted relative reconstruction residual.
    pub residual_tol: f64,
    pub seed: u64,
    pub retries: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { rank_tol: RANK_TOL, residual_tol: 1e-4, seed: 0x5eed, retries: 3 }
    }
}

/// Recover the `r` atoms of a moment sequence that is flat at order `t`.
pub fn extract_atoms(y: &Tms, t: usize, r: usize, opts: &ExtractOptions) -> Result<FlatWitness> {
    let n = y.nvars();
    if t == 0 || r == 0 || 2 * t > y.degree() {
        return Err(Error::NumericalFailure(format!("cannot extract at t = {t}, r = {r}")));
    }
    let mt = moment_matrix(y, t)?;
    let side = mt.nrows();
    let eig = mt.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..side).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    if eig.eigenvalues[order[r - 1]] <= 0.0 {
        return Err(Error::NumericalFailure("moment matrix rank below requested".into()));
    }
    let v = DMatrix::from_fn(side, r, |i, j| {
        let c = order[j];
        eig.eigenvectors[(i, c)] * eig.eigenvalues[c].sqrt()
    });

    // greedy pivoting over the rows of monomials of degree ≤ t − 1
    let low = basis(n, t - 1).len();
    let mut work: Vec<DVector<f64>> = (0..low).map(|i| v.row(i).transpose()).collect();
    let mut pivots = Vec::with_capacity(r);
    for _ in 0..r {
        let (best, nrm) = work
            .iter()
            .enumerate()
            .filter(|(i, _)| !pivots.contains(i))
            .map(|(i, w)| (i, w.norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::NumericalFailure("not enough pivot rows".into()))?;
        if nrm <= 1e-10 {
            return Err(Error::NumericalFailure("pivot rows are rank deficient".into()));
        }
        let q = &work[best] / nrm;
        for w in work.iter_mut() {
            let c = q.dot(w);
            w.axpy(-c, &q, 1.0);
        }
        pivots.push(best);
    }
    pivots.sort_unstable();
    let vp = DMatrix::from_fn(r, r, |i, j| v[(pivots[i], j)]);
    let vp_inv = vp
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("singular pivot block".into()))?;
    let u = &v * vp_inv;

    let bt = basis(n, t);
    let mult: Vec<DMatrix<f64>> = (0..n)
        .map(|i| {
            let xi = crate::poly::Monomial::var(n, i);
            DMatrix::from_fn(r, r, |j, l| {
                let row = bt.rank(&bt.monomial(pivots[j]).mul(&xi)).expect("degree ≤ t");
                u[(row, l)]
            })
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (r as u64) ^ ((t as u64) << 32));
    let scale = mult.iter().map(|m| m.amax()).fold(1.0, f64::max);
    let mut atoms = None;
    for _ in 0..=opts.retries {
        let mut coefs: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.1).collect();
        let s: f64 = coefs.iter().sum();
        coefs.iter_mut().for_each(|c| *c /= s);
        let combo = mult.iter().zip(&coefs).fold(DMatrix::zeros(r, r), |acc, (m, c)| acc + m * *c);
        let Some(schur) = Schur::try_new(combo, f64::EPSILON, 10_000) else { continue };
        let (q, tm) = schur.unpack();
        let complex = (0..r.saturating_sub(1)).any(|l| tm[(l + 1, l)].abs() > 1e-8 * scale);
        let mut diag: Vec<f64> = (0..r).map(|l| tm[(l, l)]).collect();
        diag.sort_by(f64::total_cmp);
        let separated = diag.windows(2).all(|w| w[1] - w[0] > 1e-7 * scale);
        if complex || !separated {
            continue;
        }
        atoms = Some(
            (0..r)
                .map(|l| {
                    let ql = q.column(l);
                    mult.iter().map(|m| (m * ql).dot(&ql)).collect::<Vec<f64>>()
                })
                .collect::<Vec<_>>(),
        );
        break;
    }
    let atoms = atoms.ok_or_else(|| Error::NumericalFailure("eigenvalues of the multiplication matrices are not separated".into()))?;

    // weights from the Vandermonde system on degree ≤ 2t moments
    let target = truncate(y, 2 * t)?;
    let cols: Vec<Tms> = atoms.iter().map(|a| point_moments(a, 2 * t)).collect();
    let len = target.values().len();
    let vand = DMatrix::from_fn(len, r, |i, j| cols[j].values()[i]);
    let rhs = DVector::from_column_slice(target.values());
    let svd = vand.clone().svd(true, true);
    let weights = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::NumericalFailure(format!("weight solve failed: {e}")))?;
    let recon = &vand * &weights;
    let ymax = rhs.amax().max(1.0);
    let residual = (&recon - &rhs).amax() / ymax;
    if residual > opts.residual_tol || weights.iter().any(|&w| w <= 0.0) {
        return Err(Error::NumericalFailure(format!("extraction residual {residual:.3e}")));
    }
    Ok(FlatWitness { t, rank: r, atoms, weights: weights.iter().copied().collect(), residual })
}

fn normalization_value(pair: &TensorPair, x: &[f64], norm: Normalization) -> f64 {
    match norm {
        Normalization::Sphere => x.iter().map(|v| v * v).sum(),
        Normalization::BNormalized => pair.b.full_contract(x).unwrap_or(f64::NAN),
    }
}

/// Rescale `x` so that the normalization equals one, if possible.
fn rescale(pair: &TensorPair, x: &[f64], norm: Normalization) -> Option<Vec<f64>> {
    let m = pair.order() as f64;
    let s = match norm {
        Normalization::Sphere => normalization_value(pair, x, norm).sqrt(),
        Normalization::BNormalized => {
            let v = normalization_value(pair, x, norm);
            if !(v > 0.0) {
                return None;
            }
            v.powf(1.0 / m)
        }
    };
    (s > 0.0 && s.is_finite()).then(|| x.iter().map(|v| v / s).collect())
}

/// `λ` minimizing `‖(λ B x^{m-1} − A x^{m-1})_J‖`.
fn least_squares_lambda(pair: &TensorPair, x: &[f64], active: &[usize]) -> Option<f64> {
    let ax = pair.a.apply_contract(x).ok()?;
    let bx = pair.b.apply_contract(x).ok()?;
    let (num, den) = active.iter().fold((0.0, 0.0), |(n, d), &i| (n + bx[i] * ax[i], d + bx[i] * bx[i]));
    (den > 1e-300).then(|| num / den)
}

/// Residual vector of the square system on the active set.
fn active_system(pair: &TensorPair, x: &[f64], lambda: f64, active: &[usize], norm: Normalization) -> DVector<f64> {
    let w = pair.complement(lambda, x).expect("dimension checked");
    let mut f = DVector::zeros(active.len() + 1);
    for (r, &i) in active.iter().enumerate() {
        f[r] = w[i];
    }
    f[active.len()] = normalization_value(pair, x, norm) - 1.0;
    f
}

/// Newton refinement of `(x_J, λ)` on the active complementarity system.
fn refine(pair: &TensorPair, x: &mut [f64], lambda: &mut f64, active: &[usize], norm: Normalization, steps: usize) {
    let na = active.len();
    let mut f = active_system(pair, x, *lambda, active, norm);
    for _ in 0..steps {
        let fnorm = f.amax();
        if fnorm < 1e-14 {
            break;
        }
        let ja = pair.a.contract_jacobian(x).expect("dimension checked");
        let jb = pair.b.contract_jacobian(x).expect("dimension checked");
        let bx = pair.b.apply_contract(x).expect("dimension checked");
        let grad: Vec<f64> = match norm {
            Normalization::Sphere => x.iter().map(|v| 2.0 * v).collect(),
            Normalization::BNormalized => (0..x.len())
                .map(|k| bx[k] + (0..x.len()).map(|i| x[i] * jb[(i, k)]).sum::<f64>())
                .collect(),
        };
        let mut jac = DMatrix::zeros(na + 1, na + 1);
        for (r, &i) in active.iter().enumerate() {
            for (c, &k) in active.iter().enumerate() {
                jac[(r, c)] = *lambda * jb[(i, k)] - ja[(i, k)];
            }
            jac[(r, na)] = bx[i];
        }
        for (c, &k) in active.iter().enumerate() {
            jac[(na, c)] = grad[k];
        }
        let svd = jac.svd(true, true);
        let Ok(step) = svd.solve(&(-&f), 1e-13) else { break };
        // damped update: accept the first step length that reduces the residual
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-3 {
            let mut xt = x.to_vec();
            for (c, &k) in active.iter().enumerate() {
                xt[k] += alpha * step[c];
            }
            let lt = *lambda + alpha * step[na];
            let ft = active_system(pair, &xt, lt, active, norm);
            if ft.amax() < fnorm {
                x.copy_from_slice(&xt);
                *lambda = lt;
                f = ft;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
}

/// Build the residual record and apply the acceptance test.
pub fn assess(pair: &TensorPair, lambda: f64, x: &[f64], norm: Normalization) -> Option<CEigenpair> {
    let w = pair.complement(lambda, x).ok()?;
    let complementarity = x.iter().zip(&w).map(|(a, b)| (a * b).abs()).fold(0.0, f64::max);
    let inner = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().abs();
    let min_x = x.iter().copied().fold(f64::INFINITY, f64::min);
    let min_w = w.iter().copied().fold(f64::INFINITY, f64::min);
    let normalization = (normalization_value(pair, x, norm) - 1.0).abs();
    let ok = lambda.is_finite()
        && min_x >= -ACCEPT_TOL
        && min_w >= -ACCEPT_TOL
        && complementarity <= ACCEPT_TOL
        && inner <= ACCEPT_TOL * (1.0 + lambda.abs())
        && x.iter().any(|&v| v > ACCEPT_TOL);
    ok.then(|| CEigenpair {
        lambda,
        x: x.to_vec(),
        w,
        residuals: Residuals { complementarity, inner, min_x, min_w, normalization },
        certificate: None,
    })
}

/// Certify a candidate eigenvector, refining it first; `λ` is taken from
/// `A x^m / B x^m` when that is well defined and from least squares otherwise.
pub fn certify_pair(pair: &TensorPair, x: &[f64], norm: Normalization) -> Option<CEigenpair> {
    certify_pair_with(pair, x, norm, None)
}

/// As [`certify_pair`] with an explicit starting value for `λ`.
pub fn certify_pair_with(pair: &TensorPair, x: &[f64], norm: Normalization, lambda: Option<f64>) -> Option<CEigenpair> {
    if x.len() != pair.dim() || x.iter().any(|v| !v.is_finite()) || x.iter().all(|&v| v == 0.0) {
        return None;
    }
    let x0 = rescale(pair, x, norm)?;
    let top = x0.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return None;
    }
    // small entries may be noise from a nearby atom; retry with coarser cutoffs
    let mut lam_hint = None;
    for cutoff in [ACTIVE_TOL, 1e-3, 1e-2] {
        let active: Vec<usize> = (0..x0.len()).filter(|&i| x0[i] > cutoff * top).collect();
        let Some((lam0, found)) = refine_on(pair, &x0, top, &active, norm, lambda) else { continue };
        lam_hint.get_or_insert(lam0);
        if found.is_some() {
            return found;
        }
    }
    assess(pair, lam_hint?, &x0, norm)
}

/// Newton-polish `x0` on a fixed active set; returns the starting `λ` and the
/// certified pair if the polished point stays close.
fn refine_on(
    pair: &TensorPair,
    x0: &[f64],
    top: f64,
    active: &[usize],
    norm: Normalization,
    lambda: Option<f64>,
) -> Option<(f64, Option<CEigenpair>)> {
    let xr: Vec<f64> = x0.iter().enumerate().map(|(i, &v)| if active.contains(&i) { v } else { 0.0 }).collect();
    let xr = rescale(pair, &xr, norm)?;
    let lam0 = lambda.or_else(|| {
        let bxm = pair.b.full_contract(&xr).ok()?;
        if bxm.abs() > 1e-8 {
            Some(pair.a.full_contract(&xr).ok()? / bxm)
        } else {
            least_squares_lambda(pair, &xr, active)
        }
    })?;
    let mut lam = lam0;
    let mut xn = xr;
    refine(pair, &mut xn, &mut lam, active, norm, 8);
    // refinement polishes a nearby root; it must not travel to a distant one
    let moved = xn.iter().zip(x0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let close = moved <= REFINE_RADIUS * top.max(1.0) && (lam - lam0).abs() <= REFINE_RADIUS * (1.0 + lam0.abs());
    Some((lam0, close.then(|| assess(pair, lam, &xn, norm)).flatten()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    fn mixture(atoms: &[Vec<f64>], weights: &[f64], d: usize) -> Tms {
        let n = atoms[0].len();
        let mut y = Tms::zeros(n, d);
        for (a, &w) in atoms.iter().zip(weights) {
            y = y.axpy(w, &point_moments(a, d));
        }
        y
    }

    #[test]
    fn rank_examples() {
        let y = point_moments(&[0.3, -0.2], 4);
        assert_eq!(numerical_rank(&moment_matrix(&y, 2).unwrap(), RANK_TOL), 1);
        assert_eq!(numerical_rank(&DMatrix::zeros(4, 4), RANK_TOL), 0);
        let y2 = mixture(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.5, 0.5], 2);
        assert_eq!(numerical_rank(&moment_matrix(&y2, 1).unwrap(), RANK_TOL), 2);
    }

    #[test]
    fn flat_truncation_examples() {
        let y = point_moments(&[0.4, 0.1], 8);
        assert_eq!(flat_truncation_with(&y, 4, 3, RANK_TOL), Some((3, 1)));
        let y2 = mixture(&[vec![0.6, 0.2], vec![-0.3, 0.9]], &[0.3, 0.7], 8);
        let (t, r) = flat_truncation_with(&y2, 4, 2, RANK_TOL).unwrap();
        assert_eq!(r, 2);
        let direct = moment_matrix(&y2, t).unwrap().singular_values();
        assert!(direct[2] < 1e-10 * direct[0]);
        // moments of the uniform measure on [0, 1]: y_j = 1/(j+1)
        let uniform = Tms::new(1, 8, (0..=8).map(|j| 1.0 / (j as f64 + 1.0)).collect()).unwrap();
        assert_eq!(flat_truncation(&uniform, 4, 2), None);
    }

    #[test]
    fn extract_examples() {
        let y = point_moments(&[0.3, 0.7], 8);
        let w = extract_atoms(&y, 4, 1, &ExtractOptions::default()).unwrap();
        assert!((w.atoms[0][0] - 0.3).abs() < 1e-9 && (w.atoms[0][1] - 0.7).abs() < 1e-9);
        let y2 = mixture(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.5, 0.5], 4);
        let (t, r) = flat_truncation_with(&y2, 2, 1, RANK_TOL).unwrap();
        let mut atoms = extract_atoms(&y2, t, r, &ExtractOptions::default()).unwrap().atoms;
        atoms.sort_by(|a, b| b[0].total_cmp(&a[0]));
        assert!((atoms[0][0] - 1.0).abs() < 1e-6 && atoms[0][1].abs() < 1e-6);
        assert!(atoms[1][0].abs() < 1e-6 && (atoms[1][1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn certify_reference_pair() {
        let pair = instances::ling_2x4();
        let c = certify_pair(&pair, &[0.8328, 0.0585], Normalization::BNormalized).unwrap();
        assert!((c.lambda - 0.4678).abs() < 1e-4);
        assert!((c.lambda - pair.a.full_contract(&c.x).unwrap()).abs() < 1e-8);
        assert!(c.residuals.complementarity < 1e-10);
    }

    #[test]
    fn certify_single_support() {
        let pair = instances::alternating_pair(3);
        for j in 0..3 {
            let mut x = vec![0.0; 3];
            x[j] = 1.0;
            let w = pair.complement(pair.a.get(&[j, j, j]), &x).unwrap();
            let feasible = w.iter().all(|&v| v >= -1e-12);
            let c = certify_pair(&pair, &x, Normalization::Sphere);
            assert_eq!(c.is_some(), feasible, "support {j}");
            if let Some(c) = c {
                assert!((c.lambda - pair.a.get(&[j, j, j])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_points_are_rejected() {
        let pair = instances::ling_2x4();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rejected = 0;
        for _ in 0..20 {
            let x: Vec<f64> = (0..2).map(|_| rng.random::<f64>() + 0.05).collect();
            let w = pair.complement(pair.a.full_contract(&x).unwrap() / pair.b.full_contract(&x).unwrap(), &x).unwrap();
            let far = w.iter().zip(&x).map(|(a, b)| (a * b).abs()).fold(0.0, f64::max) > 1e-2;
            if far {
                assert!(certify_pair(&pair, &x, Normalization::BNormalized).is_none());
                rejected += 1;
            }
        }
        assert!(rejected > 10);
        assert!(assess(&pair, 0.3, &[0.5, 0.5], Normalization::BNormalized).is_none());
    }
}
