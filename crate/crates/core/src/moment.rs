//! Truncated moment sequences and the linear maps `y ↦ M_k(y)`,
//! `y ↦ L_q^{(k)}(y)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::poly::{Monomial, MonomialBasis, Polynomial};

type BasisCache = Mutex<HashMap<(usize, usize), Arc<MonomialBasis>>>;

/// Shared graded-lex basis for `n` variables up to degree `d`.
pub fn basis(n: usize, d: usize) -> Arc<MonomialBasis> {
    static CACHE: OnceLock<BasisCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("basis cache poisoned");
    guard.entry((n, d)).or_insert_with(|| Arc::new(MonomialBasis::new(n, d))).clone()
}

/// A truncated moment sequence `(y_α)_{|α| ≤ d}` in graded-lex order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tms {
    n: usize,
    degree: usize,
    values: Vec<f64>,
}

impl Tms {
    pub fn new(n: usize, degree: usize, values: Vec<f64>) -> Result<Self> {
        let expected = crate::poly::monomial_count(n, degree);
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: values.len() });
        }
        Ok(Tms { n, degree, values })
    }

    pub fn zeros(n: usize, degree: usize) -> Self {
        Tms { n, degree, values: vec![0.0; crate::poly::monomial_count(n, degree)] }
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn basis(&self) -> Arc<MonomialBasis> {
        basis(self.n, self.degree)
    }

    /// `⟨1, y⟩`.
    pub fn mass(&self) -> f64 {
        self.values[0]
    }

    pub fn get(&self, m: &Monomial) -> Option<f64> {
        self.basis().rank(m).map(|r| self.values[r])
    }

    /// `y + s·other`.
    pub fn axpy(&self, s: f64, other: &Tms) -> Tms {
        assert_eq!((self.n, self.degree), (other.n, other.degree));
        Tms {
            n: self.n,
            degree: self.degree,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Tms {
        Tms { n: self.n, degree: self.degree, values: self.values.iter().map(|v| v * s).collect() }
    }
}

/// Moments of the Dirac measure at `u`: `y_α = u^α` for `|α| ≤ d`.
pub fn point_moments(u: &[f64], d: usize) -> Tms {
    let b = basis(u.len(), d);
    Tms { n: u.len(), degree: d, values: b.eval(u) }
}

/// `y|_d`, the prefix of the sequence up to degree `d`.
pub fn truncate(y: &Tms, d: usize) -> Result<Tms> {
    if d > y.degree {
        return Err(Error::DegreeOverflow { degree: d, available: y.degree });
    }
    let len = crate::poly::monomial_count(y.n, d);
    Ok(Tms { n: y.n, degree: d, values: y.values[..len].to_vec() })
}

/// One structural non-zero of a localizing operator: entry `(row, col)`
/// (with `row ≤ col`) receives `coef · y[rank]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpEntry {
    pub rank: usize,
    pub row: usize,
    pub col: usize,
    pub coef: f64,
}

/// The linear map `y ↦ L_q^{(k)}(y)` precomputed as sparse index data.
///
/// Entry `(β, γ)` of the realized matrix is `Σ_α q_α y_{α+β+γ}`, with `β, γ`
/// ranging over monomials of degree at most `k − ⌈deg q / 2⌉`.
#[derive(Debug, Clone)]
pub struct LocalizingOp {
    n: usize,
    order: usize,
    side: usize,
    entries: Vec<OpEntry>,
    /// `entries[groups[i].1 .. groups[i+1].1]` share rank `groups[i].0`.
    groups: Vec<(usize, usize)>,
}

impl LocalizingOp {
    pub fn new(q: &Polynomial, order: usize) -> Result<Self> {
        let n = q.nvars();
        let dq = q.degree();
        if dq > 2 * order {
            return Err(Error::OrderTooSmall { k: order, degree: dq });
        }
        let half = order - dq.div_ceil(2);
        let small = basis(n, half);
        let full = basis(n, 2 * order);
        let side = small.len();
        let mut acc: HashMap<(usize, usize, usize), f64> = HashMap::new();
        for row in 0..side {
            for col in row..side {
                let bg = small.monomial(row).mul(small.monomial(col));
                for (alpha, c) in q.terms() {
                    let rank = full.rank(&alpha.mul(&bg)).expect("degree checked above");
                    *acc.entry((rank, row, col)).or_insert(0.0) += c;
                }
            }
        }
        let mut entries: Vec<OpEntry> = acc
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|((rank, row, col), coef)| OpEntry { rank, row, col, coef })
            .collect();
        entries.sort_by_key(|e| (e.rank, e.row, e.col));
        let mut groups = Vec::new();
        for (i, e) in entries.iter().enumerate() {
            if groups.last().is_none_or(|&(r, _)| r != e.rank) {
                groups.push((e.rank, i));
            }
        }
        Ok(LocalizingOp { n, order, side, entries, groups })
    }

    /// The moment-matrix operator `M_k`.
    pub fn moment(n: usize, order: usize) -> Self {
        Self::new(&Polynomial::constant(n, 1.0), order).expect("constant has degree zero")
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn entries(&self) -> &[OpEntry] {
        &self.entries
    }

    /// Iterate over `(rank, entries with that rank)`.
    pub fn groups(&self) -> impl Iterator<Item = (usize, &[OpEntry])> {
        let ends = self.groups.iter().skip(1).map(|&(_, s)| s).chain(std::iter::once(self.entries.len()));
        self.groups.iter().zip(ends).map(move |(&(rank, start), end)| (rank, &self.entries[start..end]))
    }

    /// Realize the symmetric matrix from moment values (length at least the
    /// number of monomials of degree `2k`).
    pub fn realize(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.side, self.side);
        for e in &self.entries {
            m[(e.row, e.col)] += e.coef * y[e.rank];
        }
        for r in 0..self.side {
            for c in r + 1..self.side {
                m[(c, r)] = m[(r, c)];
            }
        }
        m
    }

    /// Adjoint map: `⟨L(y), W⟩ = ⟨y, adjoint(W)⟩` for symmetric `W`.
    pub fn adjoint_into(&self, w: &DMatrix<f64>, out: &mut [f64]) {
        for e in &self.entries {
            let f = if e.row == e.col { 1.0 } else { 2.0 };
            out[e.rank] += f * e.coef * w[(e.row, e.col)];
        }
    }

    pub fn adjoint(&self, w: &DMatrix<f64>, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        self.adjoint_into(w, &mut out);
        out
    }

    /// Copy with every coefficient multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.coef *= s;
        }
        out
    }

    pub fn max_abs_coef(&self) -> f64 {
        self.entries.iter().fold(0.0, |a, e| a.max(e.coef.abs()))
    }

    /// Squared Frobenius norm of the image of each unit coordinate, indexed by rank.
    pub fn column_norms_sq(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (rank, group) in self.groups() {
            let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
            for e in group {
                *acc.entry((e.row, e.col)).or_insert(0.0) += e.coef;
            }
            out[rank] += acc
                .iter()
                .map(|(&(r, c), v)| if r == c { v * v } else { 2.0 * v * v })
                .sum::<f64>();
        }
        out
    }
}

/// `M_k(y)`.
pub fn moment_matrix(y: &Tms, k: usize) -> Result<DMatrix<f64>> {
    if 2 * k > y.degree {
        return Err(Error::DegreeOverflow { degree: 2 * k, available: y.degree });
    }
    Ok(LocalizingOp::moment(y.n, k).realize(&y.values))
}

/// `L_q^{(k)}(y)`.
pub fn localizing_matrix(q: &Polynomial, y: &Tms, k: usize) -> Result<DMatrix<f64>> {
    if q.nvars() != y.n {
        return Err(Error::DimensionMismatch { expected: y.n, got: q.nvars() });
    }
    if 2 * k > y.degree {
        return Err(Error::DegreeOverflow { degree: 2 * k, available: y.degree });
    }
    Ok(LocalizingOp::new(q, k)?.realize(&y.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{random_sos_objective, riesz};

    fn min_eig(m: &DMatrix<f64>) -> f64 {
        m.clone().symmetric_eigen().eigenvalues.min()
    }

    #[test]
    fn dirac_examples() {
        let y = point_moments(&[0.0, 0.0], 4);
        assert_eq!(y.mass(), 1.0);
        assert!(y.values()[1..].iter().all(|&v| v == 0.0));
        let y = point_moments(&[2.0], 4);
        assert_eq!(y.values(), &[1.0, 2.0, 4.0, 8.0, 16.0]);
        let m = moment_matrix(&point_moments(&[1.0, 1.0], 2), 1).unwrap();
        assert_eq!(m, DMatrix::from_element(3, 3, 1.0));
    }

    #[test]
    fn dirac_moment_matrix_is_rank_one() {
        let u = [0.3, -0.8, 1.2];
        let y = point_moments(&u, 6);
        let m = moment_matrix(&y, 3).unwrap();
        let v = DMatrix::from_column_slice(m.nrows(), 1, &basis(3, 3).eval(&u));
        assert!((&m - &v * v.transpose()).norm() < 1e-12);
        assert!(min_eig(&m) > -1e-10);
    }

    #[test]
    fn linearity_and_atoms() {
        let y1 = point_moments(&[0.2, 0.5], 4);
        let y2 = point_moments(&[1.0, -0.4], 4);
        let sum = y1.axpy(1.0, &y2);
        let lhs = moment_matrix(&sum, 2).unwrap();
        let rhs = moment_matrix(&y1, 2).unwrap() + moment_matrix(&y2, 2).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
        let half = y1.scale(0.5).axpy(0.5, &y2);
        let eig = moment_matrix(&half, 2).unwrap().symmetric_eigen().eigenvalues;
        assert_eq!(eig.iter().filter(|&&e| e > 1e-9).count(), 2);
    }

    #[test]
    fn localizing_examples() {
        let u = [0.7, -0.2];
        let y = point_moments(&u, 6);
        let one = Polynomial::constant(2, 1.0);
        assert_eq!(localizing_matrix(&one, &y, 3).unwrap(), moment_matrix(&y, 3).unwrap());
        let q = &Polynomial::var(2, 1) + &Polynomial::constant(2, 0.1);
        let l = localizing_matrix(&q, &y, 3).unwrap();
        let v = DMatrix::from_column_slice(l.nrows(), 1, &basis(2, 2).eval(&u));
        let expect = q.evaluate(&u).unwrap() * &v * v.transpose();
        assert!((&l - &expect).norm() < 1e-12);
        assert!(min_eig(&l) < 0.0);
        assert!(localizing_matrix(&random_sos_objective(2, 4, 1), &y, 3).is_err());
    }

    #[test]
    fn localizing_defining_identity() {
        let y = Tms::new(2, 6, (0..28).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect()).unwrap();
        let q = random_sos_objective(2, 1, 5);
        let l = localizing_matrix(&q, &y, 3).unwrap();
        let b = basis(2, 2);
        let p1 = random_sos_objective(2, 1, 11);
        let p2 = &Polynomial::var(2, 0) - &random_sos_objective(2, 1, 12);
        let v1 = DMatrix::from_column_slice(b.len(), 1, &p1.coefficients(&b).unwrap());
        let v2 = DMatrix::from_column_slice(b.len(), 1, &p2.coefficients(&b).unwrap());
        let lhs = (v1.transpose() * &l * v2)[(0, 0)];
        let rhs = riesz(&(&(&q * &p1) * &p2), &y).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn adjoint_identity() {
        let q = random_sos_objective(2, 1, 2);
        let op = LocalizingOp::new(&q, 3).unwrap();
        let y: Vec<f64> = (0..28).map(|i| (i as f64 * 0.37).sin()).collect();
        let s = op.side();
        let w = DMatrix::from_fn(s, s, |r, c| ((r * 7 + c * 7) as f64 * 0.13).cos() + (r + c) as f64);
        let lhs = op.realize(&y).component_mul(&w).sum();
        let rhs: f64 = op.adjoint(&w, 28).iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn truncation() {
        let u = [0.5, 2.0];
        let y = point_moments(&u, 6);
        assert_eq!(truncate(&y, 6).unwrap(), y);
        assert_eq!(truncate(&y, 2).unwrap(), point_moments(&u, 2));
        assert_eq!(truncate(&y, 4).unwrap().mass(), y.mass());
        assert!(truncate(&y, 8).is_err());
    }
}
