//! Sparse multivariate polynomials over the reals, graded-lex monomial
//! indexing, and the polynomial systems whose real solutions are the
//! normalized complementarity eigenvectors.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::moment::Tms;
use crate::tensor::{advance, TensorPair};

/// Coefficients below this magnitude are dropped.
pub const COEFF_DROP: f64 = 1e-14;

/// Exponent vector of a monomial `x^α`.
///
/// Ordered graded-lexicographically: lower degree first, and within a degree
/// the larger power of `x1` comes first (`1, x1, x2, x1², x1x2, x2², …`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u16>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u16] {
        &self.0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).fold(1.0, |acc, (&e, &v)| acc * v.powi(e as i32))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `C(n + d, d)`: the number of monomials in `n` variables of degree at most `d`.
pub fn monomial_count(n: usize, d: usize) -> usize {
    let mut c: u128 = 1;
    for i in 1..=d as u128 {
        c = c * (n as u128 + i) / i;
    }
    c as usize
}

/// All monomials of degree at most `d`, listed in graded-lex order, with a
/// reverse lookup table.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    n: usize,
    degree: usize,
    monomials: Vec<Monomial>,
    ranks: HashMap<Monomial, usize>,
}

impl MonomialBasis {
    pub fn new(n: usize, degree: usize) -> Self {
        let mut monomials = Vec::with_capacity(monomial_count(n, degree));
        for d in 0..=degree {
            let mut buf = vec![0u16; n];
            push_exact(&mut monomials, &mut buf, 0, d);
        }
        let ranks = monomials.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        MonomialBasis { n, degree, monomials, ranks }
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn rank(&self, m: &Monomial) -> Option<usize> {
        self.ranks.get(m).copied()
    }

    pub fn monomial(&self, rank: usize) -> &Monomial {
        &self.monomials[rank]
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// Monomial vector `[x]_d` evaluated at `x`.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.monomials.iter().map(|m| m.eval(x)).collect()
    }
}

fn push_exact(out: &mut Vec<Monomial>, buf: &mut [u16], pos: usize, remaining: usize) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining as u16;
        out.push(Monomial(buf.to_vec()));
        return;
    }
    if buf.is_empty() {
        return;
    }
    for e in (0..=remaining).rev() {
        buf[pos] = e as u16;
        push_exact(out, buf, pos + 1, remaining - e);
    }
    buf[pos] = 0;
}

/// A sparse real polynomial in `n` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::from_terms(n, [(Monomial::one(n), c)])
    }

    pub fn var(n: usize, i: usize) -> Self {
        Self::from_terms(n, [(Monomial::var(n, i), 1.0)])
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Monomial, f64)>) -> Self {
        let mut p = Polynomial::zero(n);
        for (m, c) in terms {
            assert_eq!(m.nvars(), n, "monomial arity");
            *p.terms.entry(m).or_insert(0.0) += c;
        }
        p.prune();
        p
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.abs() >= COEFF_DROP);
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok(self.terms.iter().map(|(m, c)| c * m.eval(x)).sum())
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Self::from_terms(self.n, self.terms.iter().map(|(m, &c)| (m.clone(), c * s)))
    }

    /// `self · x^mono`.
    pub fn shift(&self, mono: &Monomial) -> Polynomial {
        Self::from_terms(self.n, self.terms.iter().map(|(m, &c)| (m.mul(mono), c)))
    }

    pub fn add_constant(&self, c: f64) -> Polynomial {
        self + &Polynomial::constant(self.n, c)
    }

    /// Coefficient vector in graded-lex order over `basis`.
    pub fn coefficients(&self, basis: &MonomialBasis) -> Result<Vec<f64>> {
        let mut v = vec![0.0; basis.len()];
        for (m, c) in self.terms() {
            let r = basis.rank(m).ok_or(Error::DegreeOverflow {
                degree: m.degree(),
                available: basis.degree(),
            })?;
            v[r] = c;
        }
        Ok(v)
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n);
        Polynomial::from_terms(self.n, self.terms().chain(rhs.terms()).map(|(m, c)| (m.clone(), c)))
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n);
        Polynomial::from_terms(
            self.n,
            self.terms().map(|(m, c)| (m.clone(), c)).chain(rhs.terms().map(|(m, c)| (m.clone(), -c))),
        )
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n);
        let mut out = BTreeMap::new();
        for (ma, ca) in self.terms() {
            for (mb, cb) in rhs.terms() {
                *out.entry(ma.mul(mb)).or_insert(0.0) += ca * cb;
            }
        }
        Polynomial::from_terms(self.n, out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

/// `⟨p, y⟩ = Σ_α p_α y_α`.
pub fn riesz(p: &Polynomial, y: &Tms) -> Result<f64> {
    if p.nvars() != y.nvars() {
        return Err(Error::DimensionMismatch { expected: y.nvars(), got: p.nvars() });
    }
    let basis = y.basis();
    let mut acc = 0.0;
    for (m, c) in p.terms() {
        let r = basis.rank(m).ok_or(Error::DegreeOverflow {
            degree: m.degree(),
            available: y.degree(),
        })?;
        acc += c * y.values()[r];
    }
    Ok(acc)
}

/// Components of `T x^{m-1}` as polynomials.
pub fn contract_polys(t: &crate::tensor::Tensor) -> Vec<Polynomial> {
    let (n, m) = (t.dim(), t.order());
    let mut maps: Vec<BTreeMap<Monomial, f64>> = vec![BTreeMap::new(); n];
    let mut idx = vec![0usize; m];
    for &v in t.entries() {
        if v != 0.0 {
            let mut e = vec![0u16; n];
            for &i in &idx[1..] {
                e[i] += 1;
            }
            *maps[idx[0]].entry(Monomial(e)).or_insert(0.0) += v;
        }
        advance(&mut idx, n);
    }
    maps.into_iter().map(|t| Polynomial::from_terms(n, t)).collect()
}

/// The form `T x^m` as a polynomial.
pub fn form_poly(t: &crate::tensor::Tensor) -> Polynomial {
    let n = t.dim();
    let parts = contract_polys(t);
    let mut acc = Polynomial::zero(n);
    for (i, p) in parts.iter().enumerate() {
        acc = &acc + &p.shift(&Monomial::var(n, i));
    }
    acc
}

/// Polynomial data shared by both formulations.
struct PairPolys {
    n: usize,
    ax: Vec<Polynomial>,
    bx: Vec<Polynomial>,
    a_form: Polynomial,
    b_form: Polynomial,
    a_had: Vec<Polynomial>,
    b_had: Vec<Polynomial>,
}

impl PairPolys {
    fn new(pair: &TensorPair) -> Self {
        let n = pair.dim();
        let ax = contract_polys(&pair.a);
        let bx = contract_polys(&pair.b);
        let a_had: Vec<_> = ax.iter().enumerate().map(|(i, p)| p.shift(&Monomial::var(n, i))).collect();
        let b_had: Vec<_> = bx.iter().enumerate().map(|(i, p)| p.shift(&Monomial::var(n, i))).collect();
        let sum = |v: &[Polynomial]| v.iter().fold(Polynomial::zero(n), |acc, p| &acc + p);
        PairPolys { n, a_form: sum(&a_had), b_form: sum(&b_had), ax, bx, a_had, b_had }
    }
}

/// Polynomial system for the `B x^m = 1` normalization: minimize `f0` subject
/// to `p = 0`, `q ≥ 0`.
#[derive(Debug, Clone)]
pub struct CopSystem {
    pub f0: Polynomial,
    pub p: Vec<Polynomial>,
    pub q: Vec<Polynomial>,
}

pub fn build_cop_system(pair: &TensorPair) -> CopSystem {
    let pp = PairPolys::new(pair);
    let n = pp.n;
    let mut p = vec![pp.b_form.add_constant(-1.0)];
    for i in 0..n {
        p.push(&(&pp.a_form * &pp.b_had[i]) - &pp.a_had[i]);
    }
    let mut q: Vec<Polynomial> = (0..n).map(|i| Polynomial::var(n, i)).collect();
    for i in 0..n {
        q.push(&(&pp.a_form * &pp.bx[i]) - &pp.ax[i]);
    }
    CopSystem { f0: pp.a_form, p, q }
}

/// Polynomial system for the unit-sphere normalization with a fixed
/// direction `ξ`. `g` describes the `ξᵀb(x) ≥ 0` branch, `g_tilde` the
/// `ξᵀb(x) ≤ 0` branch.
#[derive(Debug, Clone)]
pub struct GenSystem {
    pub h: Vec<Polynomial>,
    pub g: Vec<Polynomial>,
    pub g_tilde: Vec<Polynomial>,
}

pub fn build_gen_system(pair: &TensorPair, xi: &[f64]) -> Result<GenSystem> {
    let n = pair.dim();
    if xi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: xi.len() });
    }
    let pp = PairPolys::new(pair);
    let sphere = (0..n).fold(Polynomial::constant(n, -1.0), |acc, i| {
        &acc + &Polynomial::from_terms(n, [(Monomial(unit_sq(n, i)), 1.0)])
    });
    let mut h = vec![sphere];
    for i in 0..n {
        for j in i + 1..n {
            h.push(&(&pp.a_had[i] * &pp.b_had[j]) - &(&pp.b_had[i] * &pp.a_had[j]));
        }
    }
    let dot = |v: &[Polynomial]| {
        v.iter().zip(xi).fold(Polynomial::zero(n), |acc, (p, &c)| &acc + &p.scale(c))
    };
    let xi_a = dot(&pp.a_had);
    let xi_b = dot(&pp.b_had);
    let vars: Vec<Polynomial> = (0..n).map(|i| Polynomial::var(n, i)).collect();
    let mut g = vars.clone();
    g.push(xi_b.clone());
    let mut g_tilde = vars;
    g_tilde.push(-&xi_b);
    for i in 0..n {
        let w = &(&xi_a * &pp.bx[i]) - &(&xi_b * &pp.ax[i]);
        g_tilde.push(-&w);
        g.push(w);
    }
    Ok(GenSystem { h, g, g_tilde })
}

fn unit_sq(n: usize, i: usize) -> Vec<u16> {
    let mut e = vec![0; n];
    e[i] = 2;
    e
}

/// Random sum-of-squares objective `[x]_mᵀ (RᵀR) [x]_m` with `R` square and
/// standard-normal entries drawn from a ChaCha8 stream seeded by `seed`.
pub fn random_sos_objective(n: usize, m: usize, seed: u64) -> Polynomial {
    let basis = MonomialBasis::new(n, m);
    let side = basis.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = DMatrix::<f64>::from_fn(side, side, |_, _| StandardNormal.sample(&mut rng));
    let gram = r.transpose() * r;
    let mut terms = Vec::with_capacity(side * side);
    for j in 0..side {
        for l in 0..side {
            terms.push((basis.monomial(j).mul(basis.monomial(l)), gram[(j, l)]));
        }
    }
    Polynomial::from_terms(n, terms)
}
