//! Checks shared by the property suite and the acceptance gate. Each one
//! recomputes what it needs from raw tensor entries or moment definitions
//! instead of trusting the library routine under test.

#![allow(dead_code)]

use ceig::extract::{extract_atoms, flat_truncation, ExtractOptions};
use ceig::moment::{localizing_matrix, point_moments, Tms};
use ceig::oracle::{enumerate_all, OracleConfig};
use ceig::poly::{build_cop_system, MonomialBasis, Polynomial};
use ceig::sdp::{build_relaxation, solve, SdpSettings, SdpStatus, Sense};
use ceig::solver_cop::{all_ceigs_copositive, CopOptions};
use ceig::{CEigenpair, Tensor, TensorPair};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

/// `(T x^{m-1})_i` straight from the row-major entries.
pub fn naive_apply(t: &Tensor, x: &[f64]) -> Vec<f64> {
    let (m, n) = (t.order(), t.dim());
    let mut out = vec![0.0; n];
    for (lin, &v) in t.entries().iter().enumerate() {
        let mut rest = lin;
        let mut prod = v;
        for _ in 1..m {
            prod *= x[rest % n];
            rest /= n;
        }
        out[rest] += prod;
    }
    out
}

pub fn naive_form(t: &Tensor, x: &[f64]) -> f64 {
    naive_apply(t, x).iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Unit-norm direction, for comparing eigenvectors up to positive scaling.
pub fn direction(x: &[f64]) -> Vec<f64> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter().map(|v| v / n).collect()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// `n ≤ 4` points in `[-1, 1]^n`, pairwise at least `sep` apart.
pub fn separated_atoms(rng: &mut ChaCha8Rng, n: usize, r: usize, sep: f64) -> Vec<Vec<f64>> {
    let mut atoms: Vec<Vec<f64>> = Vec::new();
    while atoms.len() < r {
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if atoms.iter().all(|a| a.iter().zip(&u).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt() >= sep) {
            atoms.push(u);
        }
    }
    atoms
}

/// Flat truncation and extraction recover every atom of a finite mixture.
pub fn dirac_round_trip(atoms: &[Vec<f64>], weights: &[f64], tol: f64) -> Check {
    let n = atoms[0].len();
    let k = 4;
    let mut y = Tms::zeros(n, 2 * k);
    for (u, &w) in atoms.iter().zip(weights) {
        y = y.axpy(w, &point_moments(u, 2 * k));
    }
    let t = flat_truncation(&y, k, 1).ok_or("mixture not recognized as flat")?;
    let witness = extract_atoms(&y, t, atoms.len(), &ExtractOptions::default()).map_err(|e| e.to_string())?;
    if witness.atoms.len() != atoms.len() {
        return Err(format!("recovered {} atoms, expected {}", witness.atoms.len(), atoms.len()));
    }
    for u in atoms {
        let best = witness.atoms.iter().map(|v| max_diff(u, v)).fold(f64::INFINITY, f64::min);
        if best > tol {
            return Err(format!("atom {u:?} recovered only to {best:.2e}"));
        }
    }
    Ok(())
}

/// `L_q^{(k)}(y)_{αβ} = Σ_γ q_γ y_{α+β+γ}`, evaluated term by term.
pub fn localizing_identity(q: &Polynomial, y: &Tms, k: usize, tol: f64) -> Check {
    let n = y.nvars();
    let half = k - q.degree().div_ceil(2);
    let rows = MonomialBasis::new(n, half);
    let full = MonomialBasis::new(n, y.degree());
    let got = localizing_matrix(q, y, k).map_err(|e| e.to_string())?;
    let scale = y.values().iter().fold(1.0f64, |a, v| a.max(v.abs())) * q.terms().map(|(_, c)| c.abs()).sum::<f64>().max(1.0);
    for (i, a) in rows.monomials().iter().enumerate() {
        for (j, b) in rows.monomials().iter().enumerate() {
            let want: f64 = q.terms().map(|(g, c)| c * y.values()[full.rank(&a.mul(b).mul(g)).unwrap()]).sum();
            if (got[(i, j)] - want).abs() > tol * scale {
                return Err(format!("entry ({i}, {j}): {} vs {want}", got[(i, j)]));
            }
        }
    }
    Ok(())
}

/// The copositive-path relaxation values do not decrease with the order and
/// never exceed the smallest eigenvalue reported by the oracle.
pub fn hierarchy_monotone(pair: &TensorPair, extra_orders: usize) -> Check {
    let m = pair.order();
    let sys = build_cop_system(pair);
    let lambda_min = enumerate_all(pair, &OracleConfig::default())
        .map_err(|e| e.to_string())?
        .pairs
        .iter()
        .map(|p| p.lambda)
        .fold(f64::INFINITY, f64::min);
    let mut prev = f64::NEG_INFINITY;
    for k in m..=m + extra_orders {
        let problem = build_relaxation(&sys.f0, &sys.p, &sys.q, k, Sense::Minimize).map_err(|e| e.to_string())?;
        let out = solve(&problem, &SdpSettings::default());
        if out.status != SdpStatus::Optimal {
            return Err(format!("order {k}: {:?}", out.status));
        }
        if out.value < prev - 1e-6 {
            return Err(format!("order {k} value {} below previous {prev}", out.value));
        }
        if out.value > lambda_min + 1e-6 * lambda_min.abs().max(1.0) {
            return Err(format!("order {k} value {} above the minimum eigenvalue {lambda_min}", out.value));
        }
        prev = out.value;
    }
    Ok(())
}

pub fn count_bound(pair: &TensorPair, lambdas: &[f64]) -> Check {
    let (n, m) = (pair.dim(), pair.order());
    let bound = n * m.pow(n as u32 - 1);
    if lambdas.len() > bound {
        return Err(format!("{} eigenvalues exceed the bound {bound}", lambdas.len()));
    }
    Ok(())
}

/// The acceptance bounds of an eigenpair, with `w` recomputed from the tensors.
pub fn residual_bounds(pair: &TensorPair, p: &CEigenpair) -> Check {
    let ax = naive_apply(&pair.a, &p.x);
    let bx = naive_apply(&pair.b, &p.x);
    let w: Vec<f64> = bx.iter().zip(&ax).map(|(b, a)| p.lambda * b - a).collect();
    let inner: f64 = p.x.iter().zip(&w).map(|(a, b)| a * b).sum();
    if p.x.iter().any(|&v| v < -1e-6) {
        return Err(format!("x has a negative entry: {:?}", p.x));
    }
    if w.iter().any(|&v| v < -1e-6) {
        return Err(format!("w has a negative entry: {w:?}"));
    }
    if inner.abs() > 1e-6 * (1.0 + p.lambda.abs()) {
        return Err(format!("xᵀw = {inner:.2e}"));
    }
    Ok(())
}

/// For pairs scaled so that `B x^m = 1`: `λ = A x^m`.
pub fn copositive_identity(pair: &TensorPair, p: &CEigenpair) -> Check {
    let bxm = naive_form(&pair.b, &p.x);
    let axm = naive_form(&pair.a, &p.x);
    if (bxm - 1.0).abs() > 1e-8 {
        return Err(format!("B x^m = {bxm}"));
    }
    if (p.lambda - axm).abs() > 1e-8 {
        return Err(format!("λ = {} but A x^m = {axm}", p.lambda));
    }
    Ok(())
}

/// Eigenvalues of `(sA, B)` are `s·λ` and those of `(A, sB)` are `λ/s`.
pub fn scaling_equivariance(pair: &TensorPair, s: f64) -> Check {
    let opts = CopOptions::default();
    let solve_levels = |p: &TensorPair| -> Result<Vec<f64>, String> {
        all_ceigs_copositive(p, &opts).map(|l| l.iter().map(|l| l.lambda).collect()).map_err(|e| e.to_string())
    };
    let base = solve_levels(pair)?;
    let sa = solve_levels(&TensorPair::new(pair.a.scaled(s), pair.b.clone()).unwrap())?;
    let sb = solve_levels(&TensorPair::new(pair.a.clone(), pair.b.scaled(s)).unwrap())?;
    let want_a: Vec<f64> = base.iter().map(|l| s * l).collect();
    let want_b: Vec<f64> = base.iter().map(|l| l / s).collect();
    for (name, got, want) in [("sA", &sa, &want_a), ("sB", &sb, &want_b)] {
        if got.len() != want.len() || got.iter().zip(want).any(|(g, w)| (g - w).abs() > 1e-6 * w.abs().max(1.0)) {
            return Err(format!("{name}: {got:?} vs {want:?}"));
        }
    }
    Ok(())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random symmetric matrix with entries in `[-1, 1]`.
pub fn random_symmetric_matrix(rng: &mut ChaCha8Rng, s: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(s, s, |_, _| rng.random_range(-1.0..1.0));
    (&g + g.transpose()) * 0.5
}
