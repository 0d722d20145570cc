//! Exact polynomial calculus on the cube `[-1, 1]^m` under the product of
//! uniform laws.
//!
//! The diffusion generator is `L = Σ_i (1 − x_i²) ∂_ii − 2 x_i ∂_i`, whose
//! eigenfunctions are tensor products of Legendre polynomials with
//! `L J_i = −i(i + 1) J_i`. All arithmetic is in exact rationals.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde_json::Value;
use thiserror::Error;

use crate::tensor::CoefficientTensor;

pub const MAX_JACOBI_INDEX: u32 = 12;
pub const MAX_PROJECTION_DEGREE: u32 = 8;
pub const MAX_PROJECTION_VARS: usize = 4;
/// Largest exponent accepted from a literal.
pub const MAX_LITERAL_EXPONENT: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JacobiError {
    #[error("Jacobi index {0} exceeds the budget of {MAX_JACOBI_INDEX}")]
    DegreeBudget(u32),
    #[error("variable count mismatch: {0} vs {1}")]
    VarMismatch(usize, usize),
    #[error("projection needs degree <= {MAX_PROJECTION_DEGREE} and at most {MAX_PROJECTION_VARS} variables, got degree {degree} in {vars} variables")]
    BasisBudget { degree: u32, vars: usize },
    #[error("polynomial is constant")]
    ConstantInput,
    #[error("bad polynomial literal: {0}")]
    Literal(String),
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A polynomial in `num_vars` variables with exact rational coefficients.
/// Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubePolynomial {
    num_vars: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl CubePolynomial {
    pub fn zero(num_vars: usize) -> Self {
        assert!(num_vars >= 1, "a cube polynomial needs at least one variable");
        Self { num_vars, terms: BTreeMap::new() }
    }

    pub fn constant(num_vars: usize, c: BigRational) -> Self {
        Self::monomial(num_vars, vec![0; num_vars], c)
    }

    pub fn one(num_vars: usize) -> Self {
        Self::constant(num_vars, BigRational::one())
    }

    /// `x_var` (0-based).
    pub fn var(num_vars: usize, var: usize) -> Self {
        let mut e = vec![0; num_vars];
        e[var] = 1;
        Self::monomial(num_vars, e, BigRational::one())
    }

    pub fn monomial(num_vars: usize, exponents: Vec<u32>, c: BigRational) -> Self {
        assert_eq!(exponents.len(), num_vars);
        let mut p = Self::zero(num_vars);
        p.add_term(exponents, c);
        p
    }

    pub fn from_terms<I>(num_vars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, BigRational)>,
    {
        let mut p = Self::zero(num_vars);
        for (e, c) in terms {
            assert_eq!(e.len(), num_vars);
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, exponents: Vec<u32>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exponents) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &BigRational)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k == 0))
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.num_vars);
        }
        Self {
            num_vars: self.num_vars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    fn check_vars(&self, other: &Self) -> Result<(), JacobiError> {
        if self.num_vars != other.num_vars {
            return Err(JacobiError::VarMismatch(self.num_vars, other.num_vars));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, JacobiError> {
        self.check_vars(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, JacobiError> {
        self.try_add(&other.scale(&-BigRational::one()))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, JacobiError> {
        self.check_vars(other)?;
        let mut out = Self::zero(self.num_vars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        Ok(out)
    }

    /// `∂ / ∂x_var`.
    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.num_vars);
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[var] -= 1;
            out.add_term(e2, c * BigInt::from(e[var]));
        }
        out
    }

    /// Places a univariate polynomial on variable `var` of an `m`-variable
    /// cube.
    pub fn lift(&self, num_vars: usize, var: usize) -> Self {
        assert_eq!(self.num_vars, 1, "only univariate polynomials can be lifted");
        Self::from_terms(
            num_vars,
            self.terms.iter().map(|(e, c)| {
                let mut big = vec![0; num_vars];
                big[var] = e[0];
                (big, c.clone())
            }),
        )
    }

    /// `φ ∘ f` for univariate `φ`, by Horner's scheme.
    pub fn compose(phi: &Self, f: &Self) -> Result<Self, JacobiError> {
        if phi.num_vars != 1 {
            return Err(JacobiError::VarMismatch(phi.num_vars, 1));
        }
        let deg = phi.degree_in(0);
        let coeff = |k: u32| phi.terms.get(&vec![k]).cloned().unwrap_or_else(BigRational::zero);
        let mut acc = Self::constant(f.num_vars, coeff(deg));
        for k in (0..deg).rev() {
            acc = acc.try_mul(f)?;
            acc.add_term(vec![0; f.num_vars], coeff(k));
        }
        Ok(acc)
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.num_vars);
        self.terms
            .iter()
            .map(|(e, c)| {
                let m: f64 = e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product();
                c.to_f64().unwrap_or(f64::NAN) * m
            })
            .sum()
    }

    /// Exact value at a rational point.
    pub fn eval_exact(&self, x: &[BigRational]) -> BigRational {
        assert_eq!(x.len(), self.num_vars);
        let mut total = BigRational::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (&k, xi) in e.iter().zip(x) {
                m *= num_traits::pow(xi.clone(), k as usize);
            }
            total += m;
        }
        total
    }

    /// Parses `[[[e_1, …, e_m], numerator, denominator], …]`. Numerators and
    /// denominators may be JSON integers or decimal strings.
    pub fn from_literal(text: &str) -> Result<Self, JacobiError> {
        let bad = |msg: &str| JacobiError::Literal(msg.to_string());
        let value: Value = serde_json::from_str(text).map_err(|e| JacobiError::Literal(e.to_string()))?;
        let items = value.as_array().ok_or_else(|| bad("expected a list of terms"))?;
        let mut num_vars = None;
        let mut terms = Vec::with_capacity(items.len());
        for item in items {
            let triple = item.as_array().filter(|t| t.len() == 3).ok_or_else(|| bad("each term is [exponents, num, den]"))?;
            let exps = triple[0].as_array().ok_or_else(|| bad("exponents must be a list"))?;
            let e: Vec<u32> = exps
                .iter()
                .map(|v| {
                    v.as_u64()
                        .filter(|&k| k <= MAX_LITERAL_EXPONENT as u64)
                        .map(|k| k as u32)
                        .ok_or_else(|| bad("exponent must be an integer in [0, 64]"))
                })
                .collect::<Result<_, _>>()?;
            if e.is_empty() {
                return Err(bad("at least one variable is required"));
            }
            match num_vars {
                None => num_vars = Some(e.len()),
                Some(m) if m != e.len() => return Err(bad("terms disagree on the number of variables")),
                _ => {}
            }
            let num = parse_int(&triple[1]).ok_or_else(|| bad("numerator must be an integer"))?;
            let den = parse_int(&triple[2]).ok_or_else(|| bad("denominator must be an integer"))?;
            if den.is_zero() {
                return Err(bad("zero denominator"));
            }
            terms.push((e, BigRational::new(num, den)));
        }
        let m = num_vars.ok_or_else(|| bad("empty literal"))?;
        Ok(Self::from_terms(m, terms))
    }

    /// Inverse of [`from_literal`](Self::from_literal), in canonical term
    /// order with reduced fractions.
    pub fn to_literal(&self) -> String {
        let int = |b: &BigInt| match b.to_i64() {
            Some(v) => Value::from(v),
            None => Value::from(b.to_string()),
        };
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(e, c)| Value::Array(vec![Value::from(e.clone()), int(c.numer()), int(c.denom())]))
            .collect();
        Value::Array(terms).to_string()
    }
}

fn parse_int(v: &Value) -> Option<BigInt> {
    match v {
        Value::Number(n) => n.as_i64().map(BigInt::from),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

impl fmt::Display for CubePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            let sign = if c.is_negative() { "-" } else { "+" };
            if k == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let mag = c.abs();
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(i, &p)| if p == 1 { format!("x{}", i + 1) } else { format!("x{}^{p}", i + 1) })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{mag}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// `J_i(x) = (−1)^i / (2^i i!) · dⁱ/dxⁱ (1 − x²)^i`, univariate.
pub fn jacobi_poly(i: u32) -> Result<CubePolynomial, JacobiError> {
    if i > MAX_JACOBI_INDEX {
        return Err(JacobiError::DegreeBudget(i));
    }
    let base = CubePolynomial::from_terms(1, [(vec![0], rat(1, 1)), (vec![2], rat(-1, 1))]);
    let mut p = CubePolynomial::one(1);
    for _ in 0..i {
        p = p.try_mul(&base).expect("univariate");
    }
    for _ in 0..i {
        p = p.derivative(0);
    }
    let mut norm = BigInt::one();
    for k in 1..=i {
        norm *= 2 * k;
    }
    let sign = if i.is_multiple_of(2) { 1 } else { -1 };
    Ok(p.scale(&BigRational::new(BigInt::from(sign), norm)))
}

/// `L f = Σ_i (1 − x_i²) ∂_ii f − 2 x_i ∂_i f`.
pub fn apply_generator(f: &CubePolynomial) -> CubePolynomial {
    // On a monomial, variable i contributes e(e−1) x^{e−2} − e(e+1) x^e.
    let mut out = CubePolynomial::zero(f.num_vars);
    for (e, c) in &f.terms {
        for (i, &k) in e.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let k = BigInt::from(k);
            if e[i] >= 2 {
                let mut lower = e.clone();
                lower[i] -= 2;
                out.add_term(lower, c * (&k * (&k - 1)));
            }
            let weight: BigInt = &k * (&k + 1);
            out.add_term(e.clone(), -(c * weight));
        }
    }
    out
}

/// `Γ(f, g) = Σ_i (1 − x_i²) ∂_i f ∂_i g`.
pub fn carre_du_champ(f: &CubePolynomial, g: &CubePolynomial) -> Result<CubePolynomial, JacobiError> {
    let direct = carre_du_champ_direct(f, g)?;
    let via_generator = carre_du_champ_via_generator(f, g)?;
    assert_eq!(direct, via_generator, "the two carré du champ formulas disagree");
    Ok(direct)
}

pub fn carre_du_champ_direct(f: &CubePolynomial, g: &CubePolynomial) -> Result<CubePolynomial, JacobiError> {
    f.check_vars(g)?;
    let m = f.num_vars;
    let mut out = CubePolynomial::zero(m);
    for i in 0..m {
        let mut weight = CubePolynomial::one(m);
        let mut sq = vec![0; m];
        sq[i] = 2;
        weight.add_term(sq, rat(-1, 1));
        let term = weight.try_mul(&f.derivative(i))?.try_mul(&g.derivative(i))?;
        out = out.try_add(&term)?;
    }
    Ok(out)
}

/// `½ (L(fg) − f Lg − g Lf)`.
pub fn carre_du_champ_via_generator(f: &CubePolynomial, g: &CubePolynomial) -> Result<CubePolynomial, JacobiError> {
    f.check_vars(g)?;
    let fg = apply_generator(&f.try_mul(g)?);
    let f_lg = f.try_mul(&apply_generator(g))?;
    let g_lf = g.try_mul(&apply_generator(f))?;
    Ok(fg.try_sub(&f_lg)?.try_sub(&g_lf)?.scale(&rat(1, 2)))
}

/// `∫ f dμ` for `μ` the uniform law on the cube.
pub fn expect_uniform(f: &CubePolynomial) -> BigRational {
    let mut total = BigRational::zero();
    'terms: for (e, c) in &f.terms {
        let mut denom = BigInt::one();
        for &k in e {
            if k % 2 == 1 {
                continue 'terms;
            }
            denom *= k + 1;
        }
        total += c / BigRational::from_integer(denom);
    }
    total
}

/// Orthogonal decomposition into eigenspaces of `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    /// `(λ, part)` with `L part = −λ part`, `λ` strictly increasing.
    pub components: Vec<(u64, CubePolynomial)>,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self, num_vars: usize) -> CubePolynomial {
        self.components
            .iter()
            .fold(CubePolynomial::zero(num_vars), |acc, (_, p)| acc.try_add(p).expect("parts share variables"))
    }
}

/// Expands `f` in the basis `Π_k J_{i_k}(x_k)` and groups the terms by
/// eigenvalue `Σ_k i_k (i_k + 1)`.
pub fn eigen_project(f: &CubePolynomial) -> Result<SpectralDecomposition, JacobiError> {
    let m = f.num_vars;
    let degree = f.total_degree();
    if degree > MAX_PROJECTION_DEGREE || m > MAX_PROJECTION_VARS {
        return Err(JacobiError::BasisBudget { degree, vars: m });
    }
    let per_var: Vec<u32> = (0..m).map(|k| f.degree_in(k)).collect();
    let jacobi: Vec<Vec<CubePolynomial>> = (0..m)
        .map(|k| (0..=per_var[k]).map(|i| jacobi_poly(i).map(|p| p.lift(m, k))).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;

    let mut parts: BTreeMap<u64, CubePolynomial> = BTreeMap::new();
    let mut index = vec![0u32; m];
    loop {
        if index.iter().sum::<u32>() <= degree {
            let mut basis = CubePolynomial::one(m);
            // The basis is orthogonal with E[J_i²] = 1/(2i+1), so the Gram
            // matrix is diagonal.
            let mut norm = BigRational::one();
            for (k, &i) in index.iter().enumerate() {
                basis = basis.try_mul(&jacobi[k][i as usize])?;
                norm *= rat(1, 2 * i as i64 + 1);
            }
            let c = expect_uniform(&f.try_mul(&basis)?) / norm;
            if !c.is_zero() {
                let lambda: u64 = index.iter().map(|&i| i as u64 * (i as u64 + 1)).sum();
                let part = parts.entry(lambda).or_insert_with(|| CubePolynomial::zero(m));
                *part = part.try_add(&basis.scale(&c))?;
            }
        }
        // Odometer over 0..=per_var[k].
        let mut k = 0;
        loop {
            if k == m {
                let decomposition = SpectralDecomposition {
                    components: parts.into_iter().filter(|(_, p)| !p.is_zero()).collect(),
                };
                assert_eq!(decomposition.reconstruct(m), *f, "spectral reconstruction is inexact");
                return Ok(decomposition);
            }
            if index[k] < per_var[k] {
                index[k] += 1;
                break;
            }
            index[k] = 0;
            k += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareGap {
    pub variance: BigRational,
    pub energy: BigRational,
    /// `variance / energy`; at most 1/2 on the cube.
    pub ratio: BigRational,
}

pub fn poincare_gap(f: &CubePolynomial) -> Result<PoincareGap, JacobiError> {
    if f.is_constant() {
        return Err(JacobiError::ConstantInput);
    }
    let mean = expect_uniform(f);
    let variance = expect_uniform(&f.try_mul(f)?) - &mean * &mean;
    let energy = expect_uniform(&carre_du_champ(f, f)?);
    let ratio = &variance / &energy;
    Ok(PoincareGap { variance, energy, ratio })
}

/// `Γ(φ∘f, g) − φ'(f) Γ(f, g)`; zero for every diffusion.
pub fn diffusion_residual(
    phi: &CubePolynomial,
    f: &CubePolynomial,
    g: &CubePolynomial,
) -> Result<CubePolynomial, JacobiError> {
    f.check_vars(g)?;
    let phi_f = CubePolynomial::compose(phi, f)?;
    let dphi_f = CubePolynomial::compose(&phi.derivative(0), f)?;
    let lhs = carre_du_champ(&phi_f, g)?;
    let rhs = dphi_f.try_mul(&carre_du_champ(f, g)?)?;
    lhs.try_sub(&rhs)
}

/// The polynomial `d! Σ_S a_S x_S` on `[-1, 1]^N`. Coefficients are
/// converted exactly from their binary values.
pub fn tensor_to_cube(t: &CoefficientTensor) -> CubePolynomial {
    let n = t.dimension();
    let mut fact = BigRational::one();
    for k in 1..=t.degree() {
        fact *= rat(k as i64, 1);
    }
    CubePolynomial::from_terms(
        n,
        t.entries().map(|(key, v)| {
            let mut e = vec![0u32; n];
            for &i in key {
                e[i] = 1;
            }
            let c = BigRational::from_float(v).expect("tensor entries are finite");
            (e, c * &fact)
        }),
    )
}

/// Random polynomial with small rational coefficients, total degree at most
/// `max_degree` and up to `max_terms` terms.
pub fn random_polynomial<R: Rng + ?Sized>(
    rng: &mut R,
    num_vars: usize,
    max_degree: u32,
    max_terms: usize,
) -> CubePolynomial {
    let count = rng.random_range(1..=max_terms.max(1));
    let mut p = CubePolynomial::zero(num_vars);
    for _ in 0..count {
        let mut e = vec![0u32; num_vars];
        let budget = rng.random_range(0..=max_degree);
        for _ in 0..budget {
            e[rng.random_range(0..num_vars)] += 1;
        }
        let num = rng.random_range(-9i64..=9);
        let den = rng.random_range(1i64..=6);
        p.add_term(e, rat(num, den));
    }
    p
}

/// Outcome of one exact identity over a sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityCheck {
    pub name: String,
    pub holds: bool,
}

/// Checks the generator identities exactly on `cases` random polynomials
/// (degree ≤ 4, at most 3 variables; degree ≤ 3 for the diffusion rule).
pub fn identity_sweep(seed: u64, cases: usize) -> Result<Vec<IdentityCheck>, JacobiError> {
    use rand::SeedableRng;

    let eigen = (0..=MAX_JACOBI_INDEX).all(|i| {
        let j = jacobi_poly(i).expect("within budget");
        apply_generator(&j) == j.scale(&rat(-(i as i64) * (i as i64 + 1), 1))
    });
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut holds = [true; 7];
    for _ in 0..cases {
        let m = rng.random_range(1..=3);
        let f = random_polynomial(&mut rng, m, 4, 6);
        let g = random_polynomial(&mut rng, m, 4, 6);
        let phi = random_polynomial(&mut rng, 1, 3, 4);
        let small_f = random_polynomial(&mut rng, m, 3, 4);
        let small_g = random_polynomial(&mut rng, m, 3, 4);
        holds[0] &= diffusion_residual(&phi, &small_f, &small_g)?.is_zero();
        let e_f_lg = expect_uniform(&f.try_mul(&apply_generator(&g))?);
        let e_g_lf = expect_uniform(&g.try_mul(&apply_generator(&f))?);
        holds[1] &= e_f_lg == e_g_lf;
        holds[2] &= expect_uniform(&carre_du_champ(&f, &g)?) == -e_f_lg;
        holds[3] &= expect_uniform(&f.try_mul(&apply_generator(&f))?) <= BigRational::zero();
        let d = eigen_project(&f)?;
        holds[4] &= d.reconstruct(m) == f;
        for (k, (_, part)) in d.components.iter().enumerate() {
            for (_, other) in &d.components[k + 1..] {
                holds[5] &= expect_uniform(&part.try_mul(other)?).is_zero();
            }
        }
        if !f.is_constant() {
            let gap = poincare_gap(&f)?;
            holds[6] &= gap.variance <= gap.energy && gap.ratio <= rat(1, 2);
        }
    }
    let names = [
        format!("diffusion residual vanishes ({cases} cases)"),
        format!("E[f Lg] = E[g Lf] ({cases} cases)"),
        format!("E[Gamma(f,g)] = -E[f Lg] ({cases} cases)"),
        format!("E[f Lf] <= 0 ({cases} cases)"),
        format!("spectral parts reconstruct f ({cases} cases)"),
        format!("spectral parts are orthogonal ({cases} cases)"),
        format!("Var f <= E[Gamma(f)] / 2 ({cases} cases)"),
    ];
    let mut out = vec![IdentityCheck {
        name: format!("L J_i = -i(i+1) J_i for i <= {MAX_JACOBI_INDEX}"),
        holds: eigen,
    }];
    out.extend(names.into_iter().zip(holds).map(|(name, holds)| IdentityCheck { name, holds }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{family_generate, Family};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn poly(num_vars: usize, terms: &[(&[u32], i64, i64)]) -> CubePolynomial {
        CubePolynomial::from_terms(num_vars, terms.iter().map(|(e, n, d)| (e.to_vec(), rat(*n, *d))))
    }

    fn x(m: usize, i: usize) -> CubePolynomial {
        CubePolynomial::var(m, i)
    }

    fn random_pairs(count: usize, max_degree: u32, seed: u64) -> Vec<(CubePolynomial, CubePolynomial)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let m = rng.random_range(1..=3);
                (random_polynomial(&mut rng, m, max_degree, 6), random_polynomial(&mut rng, m, max_degree, 6))
            })
            .collect()
    }

    /// Legendre polynomials by Bonnet's recursion.
    fn bonnet(n: u32) -> CubePolynomial {
        let mut prev = CubePolynomial::one(1);
        let mut cur = x(1, 0);
        if n == 0 {
            return prev;
        }
        for k in 1..n as i64 {
            let next = x(1, 0)
                .try_mul(&cur)
                .unwrap()
                .scale(&rat(2 * k + 1, k + 1))
                .try_sub(&prev.scale(&rat(k, k + 1)))
                .unwrap();
            prev = cur;
            cur = next;
        }
        cur
    }

    #[test]
    fn jacobi_examples() {
        assert_eq!(jacobi_poly(0).unwrap(), CubePolynomial::one(1));
        assert_eq!(jacobi_poly(1).unwrap(), x(1, 0));
        assert_eq!(jacobi_poly(2).unwrap(), poly(1, &[(&[2], 3, 2), (&[0], -1, 2)]));
        assert_eq!(jacobi_poly(13), Err(JacobiError::DegreeBudget(13)));
        for n in 0..=MAX_JACOBI_INDEX {
            assert_eq!(jacobi_poly(n).unwrap(), bonnet(n), "J_{n}");
        }
    }

    #[test]
    fn jacobi_are_eigenfunctions() {
        for i in 0..=MAX_JACOBI_INDEX {
            let j = jacobi_poly(i).unwrap();
            let lambda = rat(-(i as i64) * (i as i64 + 1), 1);
            assert_eq!(apply_generator(&j), j.scale(&lambda), "i = {i}");
        }
    }

    #[test]
    fn generator_examples() {
        assert_eq!(apply_generator(&x(1, 0)), x(1, 0).scale(&rat(-2, 1)));
        let j2 = jacobi_poly(2).unwrap().lift(3, 0);
        assert_eq!(apply_generator(&j2), j2.scale(&rat(-6, 1)));
        assert!(apply_generator(&CubePolynomial::constant(2, rat(7, 3))).is_zero());
    }

    #[test]
    fn carre_du_champ_examples() {
        let x1 = x(2, 0);
        let x2 = x(2, 1);
        assert_eq!(carre_du_champ(&x1, &x1).unwrap(), poly(2, &[(&[0, 0], 1, 1), (&[2, 0], -1, 1)]));
        assert!(carre_du_champ(&x1, &x2).unwrap().is_zero());
        let x12 = x1.try_mul(&x2).unwrap();
        let expected = poly(2, &[(&[0, 2], 1, 1), (&[2, 2], -2, 1), (&[2, 0], 1, 1)]);
        assert_eq!(carre_du_champ(&x12, &x12).unwrap(), expected);
        assert_eq!(
            carre_du_champ(&x(1, 0), &x1),
            Err(JacobiError::VarMismatch(1, 2))
        );
    }

    #[test]
    fn expectation_examples() {
        assert_eq!(expect_uniform(&poly(1, &[(&[2], 1, 1)])), rat(1, 3));
        assert_eq!(expect_uniform(&x(1, 0)), rat(0, 1));
        assert_eq!(expect_uniform(&poly(1, &[(&[0], 1, 1), (&[2], -1, 1)])), rat(2, 3));
        assert_eq!(expect_uniform(&poly(3, &[(&[2, 4, 0], 1, 1)])), rat(1, 15));
    }

    #[test]
    fn expectation_matches_gauss_legendre_quadrature() {
        // Three-point Gauss–Legendre is exact up to degree 5 in each variable.
        let nodes = [(-0.6f64.sqrt(), 5.0 / 18.0), (0.0, 8.0 / 18.0), (0.6f64.sqrt(), 5.0 / 18.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let p = random_polynomial(&mut rng, 2, 5, 6);
            let mut quad = 0.0;
            for &(a, wa) in &nodes {
                for &(b, wb) in &nodes {
                    quad += wa * wb * p.eval_f64(&[a, b]);
                }
            }
            let exact = expect_uniform(&p).to_f64().unwrap();
            assert!((quad - exact).abs() < 1e-12, "{quad} vs {exact}");
        }
    }

    #[test]
    fn projection_examples() {
        let x12 = x(2, 0).try_mul(&x(2, 1)).unwrap();
        let d = eigen_project(&x12).unwrap();
        assert_eq!(d.components, vec![(4, x12.clone())]);

        let sq = poly(1, &[(&[2], 1, 1)]);
        let d = eigen_project(&sq).unwrap();
        assert_eq!(
            d.components,
            vec![
                (0, CubePolynomial::constant(1, rat(1, 3))),
                (6, poly(1, &[(&[2], 1, 1), (&[0], -1, 3)])),
            ]
        );

        let five = CubePolynomial::constant(3, rat(5, 1));
        assert_eq!(eigen_project(&five).unwrap().components, vec![(0, five.clone())]);

        let big = poly(5, &[(&[1, 0, 0, 0, 0], 1, 1)]);
        assert!(matches!(eigen_project(&big), Err(JacobiError::BasisBudget { .. })));
        let deep = poly(1, &[(&[9], 1, 1)]);
        assert!(matches!(eigen_project(&deep), Err(JacobiError::BasisBudget { .. })));
    }

    #[test]
    fn projection_parts_are_orthogonal_eigenvectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let m = rng.random_range(1..=3);
            let f = random_polynomial(&mut rng, m, 5, 6);
            let d = eigen_project(&f).unwrap();
            assert_eq!(d.reconstruct(m), f);
            for w in d.components.windows(2) {
                assert!(w[0].0 < w[1].0);
            }
            for (k, (lambda, part)) in d.components.iter().enumerate() {
                assert_eq!(apply_generator(part), part.scale(&rat(-(*lambda as i64), 1)));
                for (_, other) in &d.components[k + 1..] {
                    assert!(expect_uniform(&part.try_mul(other).unwrap()).is_zero());
                }
            }
        }
    }

    #[test]
    fn poincare_examples() {
        let g = poincare_gap(&x(1, 0)).unwrap();
        assert_eq!((g.variance, g.energy, g.ratio), (rat(1, 3), rat(2, 3), rat(1, 2)));
        let g = poincare_gap(&x(2, 0).try_mul(&x(2, 1)).unwrap()).unwrap();
        assert_eq!((g.variance, g.energy, g.ratio), (rat(1, 9), rat(4, 9), rat(1, 4)));
        assert_eq!(poincare_gap(&CubePolynomial::constant(2, rat(3, 1))), Err(JacobiError::ConstantInput));
    }

    #[test]
    fn poincare_ratio_is_at_most_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut tested = 0;
        while tested < 100 {
            let m = rng.random_range(1..=3);
            let f = random_polynomial(&mut rng, m, 4, 6);
            if f.is_constant() {
                continue;
            }
            let g = poincare_gap(&f).unwrap();
            assert!(g.ratio <= rat(1, 2), "{f}: {}", g.ratio);
            tested += 1;
        }
    }

    #[test]
    fn diffusion_examples() {
        let square = poly(1, &[(&[2], 1, 1)]);
        let x1 = x(1, 0);
        assert!(diffusion_residual(&square, &x1, &x1).unwrap().is_zero());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let m = rng.random_range(1..=3);
            let f = random_polynomial(&mut rng, m, 3, 5);
            let g = random_polynomial(&mut rng, m, 3, 5);
            assert!(diffusion_residual(&x1, &f, &g).unwrap().is_zero());
        }
    }

    #[test]
    fn diffusion_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let m = rng.random_range(1..=3);
            let phi = random_polynomial(&mut rng, 1, 3, 4);
            let f = random_polynomial(&mut rng, m, 3, 4);
            let g = random_polynomial(&mut rng, m, 3, 4);
            assert!(diffusion_residual(&phi, &f, &g).unwrap().is_zero());
        }
    }

    #[test]
    fn identity_sweep_holds() {
        let checks = identity_sweep(21, 20).unwrap();
        assert_eq!(checks.len(), 8);
        assert!(checks.iter().all(|c| c.holds), "{checks:?}");
    }

    #[test]
    fn reversibility_sweep() {
        for (f, g) in random_pairs(50, 4, 13) {
            let e_f_lg = expect_uniform(&f.try_mul(&apply_generator(&g)).unwrap());
            let e_g_lf = expect_uniform(&g.try_mul(&apply_generator(&f)).unwrap());
            assert_eq!(e_f_lg, e_g_lf);
            assert_eq!(expect_uniform(&carre_du_champ(&f, &g).unwrap()), -e_f_lg);
            assert!(expect_uniform(&f.try_mul(&apply_generator(&f)).unwrap()) <= BigRational::zero());
        }
    }

    #[test]
    fn gamma_of_tensor_chaos_has_double_degree() {
        for (d, n) in [(1, 3), (2, 3), (2, 4), (3, 4), (4, 4)] {
            for family in [Family::MeanField, Family::OffdiagConstant, Family::RandomSparse { seed: 3, density: 0.8 }] {
                let Ok(t) = family_generate(family, d, n) else { continue };
                let q = tensor_to_cube(&t);
                assert_eq!(q.total_degree(), d as u32);
                let gamma = carre_du_champ(&q, &q).unwrap();
                assert_eq!(gamma.total_degree(), 2 * d as u32, "{family} d={d} n={n}");
            }
        }
    }

    #[test]
    fn tensor_embedding_evaluates_like_the_tensor() {
        let t = family_generate(Family::RandomSparse { seed: 4, density: 0.6 }, 3, 4).unwrap();
        let q = tensor_to_cube(&t);
        let pt = [0.3, -0.7, 0.9, -0.1];
        assert!((q.eval_f64(&pt) - t.evaluate(&pt).unwrap()).abs() < 1e-12);
        // E[Q²] under uniforms is ‖Q‖² / 3^d.
        let second = expect_uniform(&q.try_mul(&q).unwrap()).to_f64().unwrap();
        assert!((second - t.norm_square() / 27.0).abs() < 1e-12);
    }

    #[test]
    fn literal_examples() {
        let p = CubePolynomial::from_literal("[[[2,0],3,2],[[0,0],-1,2]]").unwrap();
        assert_eq!(p, jacobi_poly(2).unwrap().lift(2, 0));
        assert_eq!(CubePolynomial::from_literal(&p.to_literal()).unwrap(), p);
        let big = CubePolynomial::from_literal(r#"[[[1],"123456789012345678901234567890","7"]]"#).unwrap();
        assert_eq!(CubePolynomial::from_literal(&big.to_literal()).unwrap(), big);
        for bad in ["[]", "{}", "[[[1],1,0]]", "[[[1],1]]", "[[[1],1,1],[[1,2],1,1]]", "[[[-1],1,1]]", "[[[100],1,1]]"] {
            assert!(CubePolynomial::from_literal(bad).is_err(), "{bad}");
        }
        assert_eq!(format!("{p}"), "3/2*x1^2 - 1/2");
    }

    proptest! {
        #[test]
        fn literal_roundtrip(seed in any::<u64>(), m in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_polynomial(&mut rng, m, 6, 8);
            prop_assume!(!p.is_zero());
            prop_assert_eq!(CubePolynomial::from_literal(&p.to_literal()).unwrap(), p);
        }

        #[test]
        fn float_and_exact_evaluation_agree(seed in any::<u64>(), a in -8i64..=8, b in -8i64..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_polynomial(&mut rng, 2, 6, 8);
            let pt = [rat(a, 8), rat(b, 8)];
            let exact = p.eval_exact(&pt).to_f64().unwrap();
            let float = p.eval_f64(&[a as f64 / 8.0, b as f64 / 8.0]);
            prop_assert!((exact - float).abs() <= 1e-9 * (1.0 + exact.abs()));
        }

        #[test]
        fn product_rule_for_gamma(seed in any::<u64>()) {
            // Γ(fh, g) = f Γ(h, g) + h Γ(f, g).
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = rng.random_range(1..=3);
            let f = random_polynomial(&mut rng, m, 3, 4);
            let h = random_polynomial(&mut rng, m, 3, 4);
            let g = random_polynomial(&mut rng, m, 3, 4);
            let lhs = carre_du_champ(&f.try_mul(&h).unwrap(), &g).unwrap();
            let rhs = f.try_mul(&carre_du_champ(&h, &g).unwrap()).unwrap()
                .try_add(&h.try_mul(&carre_du_champ(&f, &g).unwrap()).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
