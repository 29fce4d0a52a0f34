//! Dense m-th order, n-dimensional real tensors and their contractions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An m-th order n-dimensional real tensor stored densely in row-major
/// multi-index order (the last index varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    order: usize,
    dim: usize,
    entries: Vec<f64>,
    symmetric: bool,
}

impl Tensor {
    pub fn new(order: usize, dim: usize, entries: Vec<f64>) -> Result<Self> {
        if order == 0 || dim == 0 {
            return Err(Error::InvalidTensor("order and dimension must be positive".into()));
        }
        let len = dim.checked_pow(order as u32).ok_or_else(|| {
            Error::InvalidTensor(format!("{dim}^{order} entries overflow"))
        })?;
        if entries.len() != len {
            return Err(Error::DimensionMismatch { expected: len, got: entries.len() });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTensor("non-finite entry".into()));
        }
        let mut t = Tensor { order, dim, entries, symmetric: false };
        t.symmetric = t.check_symmetric(0.0);
        Ok(t)
    }

    /// Build a tensor from a function of the zero-based multi-index.
    pub fn from_fn(order: usize, dim: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = dim.pow(order as u32);
        let mut entries = Vec::with_capacity(len);
        let mut idx = vec![0usize; order];
        for _ in 0..len {
            entries.push(f(&idx));
            advance(&mut idx, dim);
        }
        Self::new(order, dim, entries)
    }

    /// The identity tensor: ones on the diagonal `i1 = ... = im`.
    pub fn identity(order: usize, dim: usize) -> Self {
        Self::from_fn(order, dim, |idx| if idx.iter().all(|&i| i == idx[0]) { 1.0 } else { 0.0 })
            .expect("identity tensor is well-formed")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.entries[self.linear_index(idx)]
    }

    /// Multiply every entry by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Tensor {
            order: self.order,
            dim: self.dim,
            entries: self.entries.iter().map(|v| v * s).collect(),
            symmetric: self.symmetric,
        }
    }

    /// Relabel indices: the result satisfies `T'[π(i1), …, π(im)] = T[i1, …, im]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.dim);
        let mut out = vec![0.0; self.entries.len()];
        let mut idx = vec![0usize; self.order];
        let mut mapped = vec![0usize; self.order];
        for &v in &self.entries {
            for (m, &i) in mapped.iter_mut().zip(&idx) {
                *m = perm[i];
            }
            out[self.linear_index(&mapped)] = v;
            advance(&mut idx, self.dim);
        }
        Tensor { order: self.order, dim: self.dim, entries: out, symmetric: self.symmetric }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// The vector `T x^{m-1}` with components `Σ T[i, i2, …, im] x[i2] ⋯ x[im]`.
    pub fn apply_contract(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let n = self.dim;
        let mut cur = self.entries.clone();
        for _ in 1..self.order {
            cur = cur.chunks_exact(n).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
        }
        Ok(cur)
    }

    /// The form `T x^m`.
    pub fn full_contract(&self, x: &[f64]) -> Result<f64> {
        Ok(self.apply_contract(x)?.iter().zip(x).map(|(a, b)| a * b).sum())
    }

    /// `x ∘ T x^{m-1}`.
    pub fn hadamard_contract(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply_contract(x)?.iter().zip(x).map(|(a, b)| a * b).collect())
    }

    /// Jacobian of `x ↦ T x^{m-1}`; entry `(i, k)` is `∂(T x^{m-1})_i / ∂x_k`.
    pub fn contract_jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        let (n, m) = (self.dim, self.order);
        let mut jac = DMatrix::zeros(n, n);
        if m == 1 {
            return Ok(jac);
        }
        let mut idx = vec![0usize; m];
        let mut prefix = vec![1.0; m];
        let mut suffix = vec![1.0; m + 1];
        for &v in &self.entries {
            if v != 0.0 {
                // products over the trailing positions 1..m
                prefix[1] = 1.0;
                for p in 2..m {
                    prefix[p] = prefix[p - 1] * x[idx[p - 1]];
                }
                suffix[m] = 1.0;
                for p in (1..m).rev() {
                    suffix[p] = suffix[p + 1] * x[idx[p]];
                }
                for p in 1..m {
                    jac[(idx[0], idx[p])] += v * prefix[p] * suffix[p + 1];
                }
            }
            advance(&mut idx, n);
        }
        Ok(jac)
    }

    /// Principal sub-tensor on the sorted zero-based index set `J`.
    pub fn principal_subtensor(&self, subset: &[usize]) -> Result<Tensor> {
        if subset.is_empty() {
            return Err(Error::InvalidIndexSet("empty index set".into()));
        }
        if subset.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIndexSet("indices must be strictly increasing".into()));
        }
        if *subset.last().unwrap() >= self.dim {
            return Err(Error::InvalidIndexSet(format!(
                "index {} out of range for dimension {}",
                subset.last().unwrap(),
                self.dim
            )));
        }
        let mut full = vec![0usize; self.order];
        Tensor::from_fn(self.order, subset.len(), |idx| {
            for (f, &i) in full.iter_mut().zip(idx) {
                *f = subset[i];
            }
            self.get(&full)
        })
    }

    /// Every entry strictly positive: a sufficient test for strict copositivity.
    pub fn entrywise_positive(&self) -> bool {
        self.entries.iter().all(|&v| v > 0.0)
    }

    /// Whether entries agree (to `tol`) under every index permutation.
    pub fn check_symmetric(&self, tol: f64) -> bool {
        let mut idx = vec![0usize; self.order];
        let mut sorted = vec![0usize; self.order];
        for &v in &self.entries {
            sorted.copy_from_slice(&idx);
            sorted.sort_unstable();
            if (self.get(&sorted) - v).abs() > tol {
                return false;
            }
            advance(&mut idx, self.dim);
        }
        true
    }
}

/// Odometer increment of a multi-index, last position fastest.
pub(crate) fn advance(idx: &mut [usize], dim: usize) {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < dim {
            return;
        }
        *slot = 0;
    }
}

/// A pair `(A, B)` of tensors with matching order and dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorPair {
    pub a: Tensor,
    pub b: Tensor,
}

impl TensorPair {
    pub fn new(a: Tensor, b: Tensor) -> Result<Self> {
        if a.order != b.order || a.dim != b.dim {
            return Err(Error::ShapeMismatch(a.order, a.dim, b.order, b.dim));
        }
        Ok(TensorPair { a, b })
    }

    pub fn order(&self) -> usize {
        self.a.order
    }

    pub fn dim(&self) -> usize {
        self.a.dim
    }

    /// `w = λ B x^{m-1} − A x^{m-1}`.
    pub fn complement(&self, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
        let ax = self.a.apply_contract(x)?;
        let bx = self.b.apply_contract(x)?;
        Ok(bx.iter().zip(&ax).map(|(b, a)| lambda * b - a).collect())
    }

    pub fn principal(&self, subset: &[usize]) -> Result<TensorPair> {
        TensorPair::new(self.a.principal_subtensor(subset)?, self.b.principal_subtensor(subset)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_a() -> Tensor {
        crate::instances::ling_2x4().a
    }

    #[test]
    fn contract_example_tensor_at_e1() {
        let v = example_a().apply_contract(&[1.0, 0.0]).unwrap();
        assert!((v[0] - 0.8147).abs() < 1e-12 && (v[1] - 0.5164).abs() < 1e-12);
        let h = example_a().hadamard_contract(&[1.0, 0.0]).unwrap();
        assert_eq!(h, vec![0.8147, 0.0]);
    }

    #[test]
    fn identity_contractions() {
        let id = Tensor::identity(4, 2);
        assert_eq!(id.apply_contract(&[1.0, 2.0]).unwrap(), vec![1.0, 8.0]);
        assert_eq!(id.full_contract(&[1.0, 2.0]).unwrap(), 17.0);
        let id3 = Tensor::identity(5, 3);
        assert_eq!(id3.apply_contract(&[0.0, 0.0, 1.0]).unwrap(), vec![0.0, 0.0, 1.0]);
        let mat = Tensor::identity(2, 3);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(mat.get(&[i, j]), if i == j { 1.0 } else { 0.0 });
            }
        }
        assert!(!mat.entrywise_positive());
        assert!(id.is_symmetric());
    }

    #[test]
    fn full_contract_of_example_b() {
        let b = crate::instances::ling_2x4().b;
        assert!((b.full_contract(&[1.0, 0.0]).unwrap() - 1.6324).abs() < 1e-12);
        assert!(b.entrywise_positive());
    }

    #[test]
    fn zero_vector_and_errors() {
        let a = example_a();
        assert_eq!(a.apply_contract(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(a.apply_contract(&[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(Tensor::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn subtensors() {
        let a = example_a();
        assert_eq!(a.principal_subtensor(&[0, 1]).unwrap(), a);
        let s = a.principal_subtensor(&[0]).unwrap();
        assert_eq!(s.entries(), &[0.8147]);
        let alt = crate::instances::alternating_harmonic(3, 3);
        assert_eq!(alt.principal_subtensor(&[2]).unwrap().entries(), &[-1.0]);
        assert!(a.principal_subtensor(&[]).is_err());
        assert!(a.principal_subtensor(&[2]).is_err());
        assert!(a.principal_subtensor(&[1, 0]).is_err());
    }

    #[test]
    fn negative_entry_breaks_positivity() {
        let mut e = vec![1.0; 8];
        e[5] = -0.1;
        assert!(!Tensor::new(3, 2, e).unwrap().entrywise_positive());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let t = crate::instances::alternating_harmonic(3, 3);
        let x = [0.3, -0.7, 1.1];
        let jac = t.contract_jacobian(&x).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fp = t.apply_contract(&xp).unwrap();
            let fm = t.apply_contract(&xm).unwrap();
            for i in 0..3 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - jac[(i, k)]).abs() < 1e-7);
            }
        }
    }
}
