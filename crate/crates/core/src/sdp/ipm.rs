//! Homogeneous self-dual primal-dual interior-point method for the moment
//! relaxations built in the parent module.
//!
//! Standard form (after scaling):
//!
//! ```text
//! primal:  min cᵀx   s.t.  Q x = t,  S_j = L_j(x) ⪰ 0
//! dual:    max tᵀv   s.t.  c = Qᵀv + Σ L_j*(Z_j),  Z_j ⪰ 0
//! ```
//!
//! `Q` has orthonormal rows spanning the original equality rows. The
//! embedding adds `τ, κ ≥ 0`; `τ → 0` with `κ > 0` yields an improving ray.
//! Search directions use Nesterov–Todd scaling with a Mehrotra corrector.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{SdpOutcome, SdpProblem, SdpStatus, Sense};
use crate::error::{Error, Result};
use crate::moment::{LocalizingOp, Tms};
use crate::par::{map_slice, Exec};

/// Iterations without improvement after which a good-enough iterate is returned.
const STALL_WINDOW: usize = 15;

/// Tolerances and limits for [`solve`].
#[derive(Debug, Clone)]
pub struct SdpSettings {
    pub max_iter: usize,
    pub feas_tol: f64,
    pub gap_tol: f64,
    /// Accuracy accepted when the iteration stalls before reaching the full tolerances.
    pub reduced_tol: f64,
    /// Minimum normalized margin of an accepted infeasibility ray.
    pub cert_margin: f64,
    pub step_fraction: f64,
    pub exec: Exec,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings {
            max_iter: 200,
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            reduced_tol: 1e-6,
            cert_margin: 1e-10,
            step_fraction: 0.99,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum CertKind {
    /// The equality rows alone are inconsistent.
    InconsistentEqualities,
    /// A dual ray `(v, Z)` with `Qᵀv + L*(Z) = 0`, `Z ⪰ 0`, `tᵀv > 0`.
    DualRay { v: Vec<f64>, z: Vec<DMatrix<f64>> },
}

/// Evidence that a relaxation has no feasible point.
#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibilityCertificate {
    kind: CertKind,
    /// Normalized margin recorded by the solver.
    pub margin: f64,
}

impl InfeasibilityCertificate {
    /// Re-derive the standard form from `problem` and check the certificate
    /// against it. Returns the normalized margin.
    pub fn verify(&self, problem: &SdpProblem, settings: &SdpSettings) -> Result<f64> {
        let sf = StandardForm::new(problem);
        match &self.kind {
            CertKind::InconsistentEqualities => sf
                .inconsistency
                .filter(|&r| r >= settings.cert_margin)
                .ok_or_else(|| Error::NumericalFailure("equalities are consistent".into())),
            CertKind::DualRay { v, z } => {
                if v.len() != sf.q.nrows() || z.len() != sf.blocks.len() {
                    return Err(Error::NumericalFailure("certificate shape mismatch".into()));
                }
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt()
                    + z.iter().map(|m| m.norm()).sum::<f64>();
                if norm == 0.0 {
                    return Err(Error::NumericalFailure("zero certificate".into()));
                }
                let margin = v.iter().zip(sf.t.iter()).map(|(a, b)| a * b).sum::<f64>() / norm;
                let mut resid = sf.q.tr_mul(&DVector::from_column_slice(v));
                for (op, zj) in sf.blocks.iter().zip(z) {
                    op.adjoint_into(zj, resid.as_mut_slice());
                }
                let resid = resid.amax() / norm;
                let min_eig = z
                    .iter()
                    .map(|m| m.clone().symmetric_eigen().eigenvalues.min())
                    .fold(f64::INFINITY, f64::min)
                    / norm;
                let slack = settings.reduced_tol * margin.abs().max(settings.cert_margin);
                if margin < settings.cert_margin || resid > slack || min_eig < -slack {
                    return Err(Error::NumericalFailure(format!(
                        "certificate rejected: margin {margin:.3e}, residual {resid:.3e}, min eig {min_eig:.3e}"
                    )));
                }
                Ok(margin)
            }
        }
    }
}

/// The scaled, orthonormalized problem data the iteration works on.
struct StandardForm {
    nvar: usize,
    c: DVector<f64>,
    c_scale: f64,
    blocks: Vec<LocalizingOp>,
    q: DMatrix<f64>,
    t: DVector<f64>,
    inconsistency: Option<f64>,
}

impl StandardForm {
    fn new(problem: &SdpProblem) -> Self {
        let nvar = problem.nvar();
        let sign = if problem.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let c_raw = DVector::from_iterator(nvar, problem.objective.iter().map(|v| sign * v));
        let c_scale = if c_raw.amax() > 0.0 { c_raw.amax() } else { 1.0 };
        let c = c_raw / c_scale;
        let blocks = problem
            .psd_blocks
            .iter()
            .map(|op| {
                let s = op.max_abs_coef();
                if s > 0.0 {
                    op.scaled(1.0 / s)
                } else {
                    op.clone()
                }
            })
            .collect();

        // modified Gram–Schmidt with reorthogonalization, tracking the rhs
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        let mut inconsistency: Option<f64> = None;
        for (row, &b0) in problem.equalities.iter().zip(&problem.rhs) {
            let mut a = vec![0.0; nvar];
            for &(r, c) in row {
                a[r] += c;
            }
            let nrm = norm(&a);
            if nrm == 0.0 {
                if b0 != 0.0 {
                    inconsistency = Some(inconsistency.unwrap_or(0.0).max(b0.abs()));
                }
                continue;
            }
            a.iter_mut().for_each(|v| *v /= nrm);
            let mut b = b0 / nrm;
            for _ in 0..2 {
                for (qj, tj) in basis.iter().zip(&rhs) {
                    let c = dot(qj, &a);
                    if c != 0.0 {
                        axpy(-c, qj, &mut a);
                        b -= c * tj;
                    }
                }
            }
            let r = norm(&a);
            if r < 1e-9 {
                if b.abs() > 1e-7 {
                    inconsistency = Some(inconsistency.unwrap_or(0.0).max(b.abs()));
                }
                continue;
            }
            a.iter_mut().for_each(|v| *v /= r);
            basis.push(a);
            rhs.push(b / r);
        }
        let me = basis.len();
        let q = DMatrix::from_fn(me, nvar, |i, j| basis[i][j]);
        let t = DVector::from_vec(rhs);
        StandardForm { nvar, c, c_scale, blocks, q, t, inconsistency }
    }

    fn degree(&self) -> usize {
        self.blocks.iter().map(LocalizingOp::side).sum()
    }

    fn adjoint(&self, z: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.nvar);
        for (op, zj) in self.blocks.iter().zip(z) {
            op.adjoint_into(zj, out.as_mut_slice());
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// Nesterov–Todd scaling of one block: `W⁻¹ = rti rtiᵀ`, and the scaled
/// point `λ` (diagonal) satisfies `rtiᵀ S rti = λ = R ... ` in both spaces.
struct NtScaling {
    rti: DMatrix<f64>,
    lambda: DVector<f64>,
}

impl NtScaling {
    fn new(s: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Self> {
        let ls = Cholesky::new(s.clone())?.unpack();
        let lz = Cholesky::new(z.clone())?.unpack();
        let prod = lz.tr_mul(&ls);
        let svd = prod.svd(true, false);
        let u = svd.u?;
        let lambda = svd.singular_values;
        if lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return None;
        }
        let mut rti = lz * u;
        for (j, &l) in lambda.iter().enumerate() {
            let f = 1.0 / l.sqrt();
            rti.column_mut(j).iter_mut().for_each(|v| *v *= f);
        }
        Some(NtScaling { rti, lambda })
    }

    fn winv(&self) -> DMatrix<f64> {
        let mut w = &self.rti * self.rti.transpose();
        symmetrize(&mut w);
        w
    }
}

/// Schur complement `H = Σ_j L_j*(W_j⁻¹ L_j(·) W_j⁻¹)` as a dense matrix.
pub fn assemble_schur(blocks: &[LocalizingOp], winv: &[DMatrix<f64>], nvar: usize, exec: Exec) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(nvar, nvar);
    for (op, w) in blocks.iter().zip(winv) {
        let s = op.side();
        if s == 1 {
            let w2 = w[(0, 0)] * w[(0, 0)];
            let mut a = vec![0.0; nvar];
            for e in op.entries() {
                a[e.rank] += e.coef;
            }
            let nz: Vec<(usize, f64)> = a.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
            for &(i, ai) in &nz {
                for &(j, aj) in &nz {
                    h[(i, j)] += w2 * ai * aj;
                }
            }
            continue;
        }
        let groups: Vec<(usize, &[crate::moment::OpEntry])> = op.groups().collect();
        let cols = map_slice(exec, &groups, |&(_, group)| {
            let mut t = DMatrix::<f64>::zeros(s, s);
            for e in group {
                let (r, c) = (e.row, e.col);
                let wr = w.column(r);
                let wc = w.column(c);
                for j in 0..s {
                    let (wrj, wcj) = (wr[j], wc[j]);
                    let col = &mut t.as_mut_slice()[j * s..j * s + j + 1];
                    if r == c {
                        let f = e.coef * wrj;
                        for (i, tij) in col.iter_mut().enumerate() {
                            *tij += f * wr[i];
                        }
                    } else {
                        let (fr, fc) = (e.coef * wcj, e.coef * wrj);
                        for (i, tij) in col.iter_mut().enumerate() {
                            *tij += fr * wr[i] + fc * wc[i];
                        }
                    }
                }
            }
            let mut out: Vec<(usize, f64)> = Vec::new();
            for e in op.entries() {
                let v = if e.row == e.col { t[(e.row, e.row)] } else { 2.0 * t[(e.row, e.col)] };
                match out.last_mut() {
                    Some((r, acc)) if *r == e.rank => *acc += e.coef * v,
                    _ => out.push((e.rank, e.coef * v)),
                }
            }
            out
        });
        for (&(beta, _), col) in groups.iter().zip(cols) {
            for (alpha, v) in col {
                h[(alpha, beta)] += v;
            }
        }
    }
    symmetrize(&mut h);
    h
}

/// Factorization of the reduced KKT matrix `[H, −Qᵀ; Q, 0]`.
struct Kkt<'a> {
    h: &'a DMatrix<f64>,
    q: &'a DMatrix<f64>,
    chol_h: Cholesky<f64, Dyn>,
    chol_s: Cholesky<f64, Dyn>,
}

impl<'a> Kkt<'a> {
    fn factor(h: &'a DMatrix<f64>, q: &'a DMatrix<f64>) -> Option<Self> {
        let scale = h.diagonal().amax().max(1e-300);
        let mut reg = 1e-14 * scale;
        let chol_h = loop {
            let mut hr = h.clone();
            for i in 0..hr.nrows() {
                hr[(i, i)] += reg;
            }
            if let Some(c) = Cholesky::new(hr) {
                break c;
            }
            reg *= 100.0;
            if reg > 1e-4 * scale {
                return None;
            }
        };
        let mut y = q.transpose();
        chol_h.l_dirty().solve_lower_triangular_mut(&mut y);
        // only the lower triangle of l_dirty is meaningful; solve_lower_triangular reads just that
        let mut schur = y.tr_mul(&y);
        symmetrize(&mut schur);
        let sreg = 1e-14 * schur.diagonal().amax().max(1e-300);
        for i in 0..schur.nrows() {
            schur[(i, i)] += sreg;
        }
        let chol_s = Cholesky::new(schur)?;
        Some(Kkt { h, q, chol_h, chol_s })
    }

    fn solve_once(&self, r1: &DVector<f64>, r2: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let u = self.chol_h.solve(r1);
        let rv = r2 - self.q * &u;
        let dv = self.chol_s.solve(&rv);
        let dx = u + self.chol_h.solve(&self.q.tr_mul(&dv));
        (dx, dv)
    }

    fn solve(&self, r1: &DVector<f64>, r2: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (mut dx, mut dv) = self.solve_once(r1, r2);
        for _ in 0..2 {
            let e1 = r1 - (self.h * &dx - self.q.tr_mul(&dv));
            let e2 = r2 - self.q * &dx;
            let (cx, cv) = self.solve_once(&e1, &e2);
            dx += cx;
            dv += cv;
        }
        (dx, dv)
    }
}

struct Direction {
    dx: DVector<f64>,
    dv: DVector<f64>,
    dtau: f64,
    dkappa: f64,
    ds: Vec<DMatrix<f64>>,
    dz: Vec<DMatrix<f64>>,
    ds_scaled: Vec<DMatrix<f64>>,
    dz_scaled: Vec<DMatrix<f64>>,
}

struct Iterate {
    x: DVector<f64>,
    v: DVector<f64>,
    s: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    tau: f64,
    kappa: f64,
}

/// Largest `α` with `λ + α·d ⪰ 0`.
fn max_step(lambda: &DVector<f64>, d: &DMatrix<f64>) -> f64 {
    let n = lambda.len();
    let inv: Vec<f64> = lambda.iter().map(|l| 1.0 / l.sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |i, j| d[(i, j)] * inv[i] * inv[j]);
    let e = min_eig(&m);
    if e < 0.0 {
        -1.0 / e
    } else {
        f64::INFINITY
    }
}

/// Solve a relaxation.
pub fn solve(problem: &SdpProblem, settings: &SdpSettings) -> SdpOutcome {
    let sf = StandardForm::new(problem);
    let nvar = sf.nvar;
    let finish = |status, x: &DVector<f64>, iterations, pres, dres, gap, reduced, cert, value| SdpOutcome {
        status,
        value,
        y: Tms::new(problem.n, 2 * problem.order, x.as_slice().to_vec()).expect("variable length"),
        iterations,
        primal_residual: pres,
        dual_residual: dres,
        gap,
        reduced_accuracy: reduced,
        certificate: cert,
    };
    let sense_sign = if problem.sense == Sense::Maximize { -1.0 } else { 1.0 };

    if let Some(r) = sf.inconsistency {
        let cert = InfeasibilityCertificate { kind: CertKind::InconsistentEqualities, margin: r };
        return finish(SdpStatus::Infeasible, &DVector::zeros(nvar), 0, f64::NAN, f64::NAN, f64::NAN, false, Some(cert), f64::NAN);
    }

    let me = sf.q.nrows();
    let nu = sf.degree() as f64;
    let tnorm = sf.t.norm();
    let cnorm = sf.c.norm();
    let mut it = Iterate {
        x: DVector::zeros(nvar),
        v: DVector::zeros(me),
        s: sf.blocks.iter().map(|op| DMatrix::identity(op.side(), op.side())).collect(),
        z: sf.blocks.iter().map(|op| DMatrix::identity(op.side(), op.side())).collect(),
        tau: 1.0,
        kappa: 1.0,
    };

    let mut best: Option<(f64, DVector<f64>, f64, f64, f64, f64)> = None;
    let mut best_inf: Option<(f64, DVector<f64>, Vec<DMatrix<f64>>)> = None;
    let mut small_steps = 0;
    let mut best_iter = 0;
    let mut iter = 0;
    let mut last = (f64::NAN, f64::NAN, f64::NAN);

    while iter < settings.max_iter {
        // residuals
        let lx: Vec<DMatrix<f64>> = sf.blocks.iter().map(|op| op.realize(it.x.as_slice())).collect();
        let rs: Vec<DMatrix<f64>> = lx.iter().zip(&it.s).map(|(a, b)| a - b).collect();
        let lstar_z = sf.adjoint(&it.z);
        let qtv = sf.q.tr_mul(&it.v);
        let rd = &sf.c * it.tau - &qtv - &lstar_z;
        let qx = &sf.q * &it.x;
        let re = &qx - &sf.t * it.tau;
        let cx = sf.c.dot(&it.x);
        let tv = sf.t.dot(&it.v);
        let rg = -cx + tv - it.kappa;
        let sz: f64 = it.s.iter().zip(&it.z).map(|(a, b)| a.dot(b)).sum();
        let mu = (sz + it.tau * it.kappa) / (nu + 1.0);

        let rs_norm = rs.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
        // residuals relative to the magnitude of the terms they balance
        let lx_norm = lx.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
        let pres = re.norm().max(rs_norm) / (it.tau * (1.0 + tnorm) + qx.norm().max(lx_norm));
        let dres = rd.norm() / (it.tau * (1.0 + cnorm) + qtv.norm().max(lstar_z.norm()));
        let pcost = cx / it.tau;
        let dcost = tv / it.tau;
        let gap = (sz / (it.tau * it.tau)).min((pcost - dcost).abs()) / (1.0 + pcost.abs());
        last = (pres, dres, gap);
        let value = sense_sign * pcost * sf.c_scale;
        log::trace!(
            "it {iter:3} pres {pres:.2e} dres {dres:.2e} gap {gap:.2e} tau {:.2e} kappa {:.2e} mu {mu:.2e} pcost {pcost:.8e} dcost {dcost:.8e}",
            it.tau, it.kappa
        );

        if pres <= settings.feas_tol && dres <= settings.feas_tol && gap <= settings.gap_tol {
            let x = &it.x / it.tau;
            return finish(SdpStatus::Optimal, &x, iter, pres, dres, gap, false, None, value);
        }
        let worst = pres.max(dres).max(gap);
        if best.as_ref().is_none_or(|b| worst < b.0) {
            best = Some((worst, &it.x / it.tau, pres, dres, gap, value));
            best_iter = iter;
        } else if iter >= best_iter + STALL_WINDOW {
            let near_opt = best.as_ref().is_some_and(|b| b.0 <= settings.reduced_tol);
            let near_inf = best_inf.as_ref().is_some_and(|b| b.0 <= settings.reduced_tol);
            if near_opt || near_inf {
                break;
            }
        }

        if tv > 0.0 {
            let ray = (&qtv + &lstar_z).norm() / tv / cnorm.max(1.0);
            if ray <= settings.feas_tol {
                return infeasible(&sf, problem, &it, iter, settings, false)
                    .unwrap_or_else(|| finish(SdpStatus::NumericalFailure, &(&it.x / it.tau), iter, pres, dres, gap, false, None, value));
            }
            if best_inf.as_ref().is_none_or(|b| ray < b.0) {
                best_inf = Some((ray, it.v.clone(), it.z.clone()));
            }
        }
        if cx < 0.0 {
            let lxs: f64 = lx.iter().zip(&it.s).map(|(a, b)| (a - b).norm_squared()).sum::<f64>();
            let ray = (qx.norm_squared() + lxs).sqrt() / (-cx) / tnorm.max(1.0);
            if ray <= settings.feas_tol {
                return finish(SdpStatus::Unbounded, &it.x, iter, pres, dres, gap, false, None, sense_sign * f64::NEG_INFINITY);
            }
        }

        // scaling
        let scalings: Option<Vec<NtScaling>> = it.s.iter().zip(&it.z).map(|(s, z)| NtScaling::new(s, z)).collect();
        let Some(scalings) = scalings else { break };
        let winv: Vec<DMatrix<f64>> = scalings.iter().map(NtScaling::winv).collect();
        let h = assemble_schur(&sf.blocks, &winv, nvar, settings.exec);
        let Some(kkt) = Kkt::factor(&h, &sf.q) else { break };
        let (x1, v1) = kkt.solve(&(-&sf.c), &sf.t);
        let denom = -sf.c.dot(&x1) + sf.t.dot(&v1) + it.kappa / it.tau;

        let direction = |eta: f64, w: &[DMatrix<f64>], dkappa_target: f64| -> Direction {
            let mut r1 = &rd * (-eta);
            for (((op, sc), wj), rsj) in sf.blocks.iter().zip(&scalings).zip(w).zip(&rs) {
                let inner = &sc.rti * wj * sc.rti.transpose() - &winv_mul(&sc.rti, rsj) * eta;
                op.adjoint_into(&inner, r1.as_mut_slice());
            }
            let r2 = &re * (-eta);
            let (x2, v2) = kkt.solve(&r1, &r2);
            let dtau = (-eta * rg + dkappa_target / it.tau + sf.c.dot(&x2) - sf.t.dot(&v2)) / denom;
            let dx = x2 + &x1 * dtau;
            let dv = v2 + &v1 * dtau;
            let mut ds = Vec::with_capacity(sf.blocks.len());
            let mut dz = Vec::with_capacity(sf.blocks.len());
            let mut ds_scaled = Vec::with_capacity(sf.blocks.len());
            let mut dz_scaled = Vec::with_capacity(sf.blocks.len());
            for (((op, sc), wj), rsj) in sf.blocks.iter().zip(&scalings).zip(w).zip(&rs) {
                let mut dsj = op.realize(dx.as_slice()) + rsj * eta;
                symmetrize(&mut dsj);
                let mut dss = sc.rti.tr_mul(&dsj) * &sc.rti;
                symmetrize(&mut dss);
                let dzs = wj - &dss;
                let mut dzj = &sc.rti * &dzs * sc.rti.transpose();
                symmetrize(&mut dzj);
                ds.push(dsj);
                dz.push(dzj);
                ds_scaled.push(dss);
                dz_scaled.push(dzs);
            }
            let dkappa = (dkappa_target - it.kappa * dtau) / it.tau;
            Direction { dx, dv, dtau, dkappa, ds, dz, ds_scaled, dz_scaled }
        };
        let step_limit = |d: &Direction| -> f64 {
            let mut a = f64::INFINITY;
            for ((sc, dss), dzs) in scalings.iter().zip(&d.ds_scaled).zip(&d.dz_scaled) {
                a = a.min(max_step(&sc.lambda, dss)).min(max_step(&sc.lambda, dzs));
            }
            if d.dtau < 0.0 {
                a = a.min(-it.tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                a = a.min(-it.kappa / d.dkappa);
            }
            a
        };

        // predictor
        let w_aff: Vec<DMatrix<f64>> = scalings.iter().map(|sc| DMatrix::from_diagonal(&(-&sc.lambda))).collect();
        let aff = direction(1.0, &w_aff, -it.tau * it.kappa);
        let alpha_aff = step_limit(&aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // corrector
        let w_cc: Vec<DMatrix<f64>> = scalings
            .iter()
            .zip(aff.ds_scaled.iter().zip(&aff.dz_scaled))
            .map(|(sc, (dss, dzs))| {
                let p = dss * dzs;
                let k = sc.lambda.len();
                DMatrix::from_fn(k, k, |i, j| {
                    let cross = 0.5 * (p[(i, j)] + p[(j, i)]);
                    let mut target = -cross;
                    if i == j {
                        target += sigma * mu - sc.lambda[i] * sc.lambda[i];
                    }
                    2.0 * target / (sc.lambda[i] + sc.lambda[j])
                })
            })
            .collect();
        let dkappa_t = -it.tau * it.kappa + sigma * mu - aff.dtau * aff.dkappa;
        let dir = direction(1.0 - sigma, &w_cc, dkappa_t);
        let alpha = (settings.step_fraction * step_limit(&dir)).min(1.0);
        if !alpha.is_finite() || alpha <= 0.0 {
            break;
        }

        // update, shrinking the step if a block loses definiteness to rounding
        let mut a = alpha;
        let mut accepted = None;
        for _ in 0..8 {
            let s: Vec<DMatrix<f64>> = it.s.iter().zip(&dir.ds).map(|(s, d)| s + d * a).collect();
            let z: Vec<DMatrix<f64>> = it.z.iter().zip(&dir.dz).map(|(z, d)| z + d * a).collect();
            if s.iter().chain(&z).all(|m| Cholesky::new(m.clone()).is_some()) {
                accepted = Some((s, z));
                break;
            }
            a *= 0.5;
        }
        let Some((s, z)) = accepted else { break };
        log::trace!("    sigma {sigma:.2e} alpha_aff {alpha_aff:.2e} alpha {a:.2e}");
        it.x += &dir.dx * a;
        it.v += &dir.dv * a;
        it.s = s;
        it.z = z;
        it.tau += a * dir.dtau;
        it.kappa += a * dir.dkappa;
        iter += 1;
        small_steps = if a < 1e-6 { small_steps + 1 } else { 0 };
        // τ negligible against κ: the iterate has become a ray
        if small_steps >= 5 || it.tau <= 1e-14 * it.kappa || it.kappa <= 0.0 {
            break;
        }
        // bring the embedding back to a moderate scale
        let scale = it.tau.max(it.kappa);
        if !(1e-8..=1e8).contains(&scale) {
            let f = 1.0 / scale;
            it.x *= f;
            it.v *= f;
            it.s.iter_mut().for_each(|m| *m *= f);
            it.z.iter_mut().for_each(|m| *m *= f);
            it.tau *= f;
            it.kappa *= f;
        }
    }

    // stalled or out of iterations: accept the reduced tolerance if reached
    if let Some((ray, v, z)) = best_inf {
        if ray <= settings.reduced_tol {
            let probe = Iterate { x: it.x.clone(), v, s: it.s.clone(), z, tau: it.tau, kappa: it.kappa };
            if let Some(out) = infeasible(&sf, problem, &probe, iter, settings, true) {
                if best.as_ref().is_none_or(|b| b.0 > settings.reduced_tol) {
                    return out;
                }
            }
        }
    }
    if let Some((worst, x, pres, dres, gap, value)) = best {
        if worst <= settings.reduced_tol {
            return finish(SdpStatus::Optimal, &x, iter, pres, dres, gap, true, None, value);
        }
        return finish(SdpStatus::NumericalFailure, &x, iter, pres, dres, gap, false, None, value);
    }
    let (pres, dres, gap) = last;
    finish(SdpStatus::NumericalFailure, &it.x, iter, pres, dres, gap, false, None, f64::NAN)
}

/// `W⁻¹ M W⁻¹` with `W⁻¹ = rti rtiᵀ`.
fn winv_mul(rti: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let inner = rti.tr_mul(m) * rti;
    rti * inner * rti.transpose()
}

fn infeasible(
    sf: &StandardForm,
    problem: &SdpProblem,
    it: &Iterate,
    iter: usize,
    settings: &SdpSettings,
    reduced: bool,
) -> Option<SdpOutcome> {
    let tv = sf.t.dot(&it.v);
    let v: Vec<f64> = it.v.iter().map(|a| a / tv).collect();
    let z: Vec<DMatrix<f64>> = it.z.iter().map(|m| m / tv).collect();
    let cert = InfeasibilityCertificate { kind: CertKind::DualRay { v, z }, margin: 0.0 };
    let margin = cert.verify(problem, settings).ok()?;
    Some(SdpOutcome {
        status: SdpStatus::Infeasible,
        value: f64::NAN,
        y: Tms::zeros(problem.n, 2 * problem.order),
        iterations: iter,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        gap: f64::NAN,
        reduced_accuracy: reduced,
        certificate: Some(InfeasibilityCertificate { margin, ..cert }),
    })
}
