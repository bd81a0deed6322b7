//! Monomial model of top cohomology `H^N(P^N, S^{ℓ1}Ω̃ ⊗ … ⊗ S^{ℓk}Ω̃ (a))`.
//!
//! With `Ω̃ ≅ ⊕ O(-1)·dZ_i`, this group is `S^{ℓ1}V ⊗ … ⊗ S^{ℓk}V ⊗ H^N(O(a - Σℓ))`, with basis
//! `dZ^{J1} ⊗ … ⊗ dZ^{Jk} / Z^I` where `|J_j| = ℓ_j`, every entry of `I` is at least one
//! and `|I| = Σℓ - a`. Basis elements are ordered by grevlex on the concatenation
//! `(J1, …, Jk, I)`, largest first, which is lexicographic over the blocks `(I, Jk, …, J1)`.
//!
//! Maps act on numerators: a product that leaves an exponent of `I` at zero or below is a
//! Čech coboundary and is dropped.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::exactalg::{SparseMatrix, SparseVec};
use crate::field::{binomial, Field};
use crate::poly::{monomials_of_degree, positive_monomials_of_degree, HomogPoly, MultiIndex, Poly};

/// Default bound on the number of basis elements a single space may enumerate.
pub const DEFAULT_CAP: u128 = 5_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CechError {
    #[error("space of dimension {dim} exceeds the basis cap {cap} (set COTCI_CAP to raise it)")]
    CapExceeded { dim: u128, cap: u128 },
    #[error("factor index {index} out of range for {count} factors")]
    BadFactor { index: usize, count: usize },
    #[error("factor {0} has degree 0 and cannot be contracted")]
    ZeroFactor(usize),
    #[error("polynomial has {got} variables, expected {expected}")]
    VarCount { expected: usize, got: usize },
    #[error("target space mismatch: expected {expected}, got {got}")]
    TargetMismatch { expected: String, got: String },
    #[error("degree bookkeeping failed: {0}")]
    Degree(String),
}

/// Basis cap, from `COTCI_CAP` when set to a positive integer.
pub fn basis_cap() -> u128 {
    std::env::var("COTCI_CAP").ok().and_then(|s| s.trim().parse::<u128>().ok()).filter(|&c| c > 0).unwrap_or(DEFAULT_CAP)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CohomSpace {
    n_ambient: usize,
    ells: Vec<u32>,
    twist: i64,
}

impl CohomSpace {
    pub fn new(n_ambient: usize, ells: Vec<u32>, twist: i64) -> Self {
        CohomSpace { n_ambient, ells, twist }
    }

    pub fn n_ambient(&self) -> usize {
        self.n_ambient
    }

    pub fn nvars(&self) -> usize {
        self.n_ambient + 1
    }

    pub fn ells(&self) -> &[u32] {
        &self.ells
    }

    pub fn twist(&self) -> i64 {
        self.twist
    }

    pub fn num_factors(&self) -> usize {
        self.ells.len()
    }

    /// `|I| = Σℓ - a`.
    pub fn denominator_degree(&self) -> i64 {
        self.ells.iter().map(|&l| l as i64).sum::<i64>() - self.twist
    }

    pub fn dim(&self) -> u128 {
        let d = self.denominator_degree();
        if d <= self.n_ambient as i64 {
            return 0;
        }
        let n = self.n_ambient as i64;
        self.ells
            .iter()
            .fold(binomial(d - 1, n), |acc, &l| acc.saturating_mul(binomial(l as i64 + n, n)))
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    fn check_factor(&self, j: usize) -> Result<(), CechError> {
        if j >= self.ells.len() {
            return Err(CechError::BadFactor { index: j, count: self.ells.len() });
        }
        Ok(())
    }

    pub fn mul_poly_target(&self, degree: u32) -> CohomSpace {
        CohomSpace { n_ambient: self.n_ambient, ells: self.ells.clone(), twist: self.twist + degree as i64 }
    }

    /// Target of `·dF` on factor `j` (0-based) for `F` of the given degree.
    pub fn mul_dpoly_target(&self, degree: u32, j: usize) -> Result<CohomSpace, CechError> {
        self.check_factor(j)?;
        let mut ells = self.ells.clone();
        ells[j] += 1;
        Ok(CohomSpace { n_ambient: self.n_ambient, ells, twist: self.twist + degree as i64 })
    }

    pub fn contraction_target(&self, j: usize) -> Result<CohomSpace, CechError> {
        self.check_factor(j)?;
        if self.ells[j] == 0 {
            return Err(CechError::ZeroFactor(j));
        }
        let mut ells = self.ells.clone();
        ells[j] -= 1;
        Ok(CohomSpace { n_ambient: self.n_ambient, ells, twist: self.twist })
    }

    pub fn basis(&self) -> Result<BasisIndex, CechError> {
        BasisIndex::new(self.clone())
    }
}

impl std::fmt::Display for CohomSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let ells: Vec<String> = self.ells.iter().map(|l| l.to_string()).collect();
        write!(f, "H^{}(P^{}, ({})-tilde({}))", self.n_ambient, self.n_ambient, ells.join(","), self.twist)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TensorBasisElement {
    pub factors: Vec<MultiIndex>,
    pub denominator: MultiIndex,
}

#[derive(Debug)]
struct FactorBasis {
    monos: Vec<MultiIndex>,
    pos: HashMap<MultiIndex, usize>,
}

impl FactorBasis {
    fn new(nvars: usize, degree: u32) -> Self {
        let monos = monomials_of_degree(nvars, degree);
        let pos = monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        FactorBasis { monos, pos }
    }
}

/// Enumerated basis of a [`CohomSpace`] with constant-time position lookup.
#[derive(Debug)]
pub struct BasisIndex {
    space: CohomSpace,
    denoms: Vec<MultiIndex>,
    denom_pos: HashMap<MultiIndex, usize>,
    factors: Vec<Arc<FactorBasis>>,
    strides: Vec<usize>,
    block: usize,
}

impl BasisIndex {
    pub fn new(space: CohomSpace) -> Result<Self, CechError> {
        let dim = space.dim();
        let cap = basis_cap();
        if dim > cap {
            return Err(CechError::CapExceeded { dim, cap });
        }
        let nvars = space.nvars();
        let d = space.denominator_degree();
        let denoms = if dim == 0 { Vec::new() } else { positive_monomials_of_degree(nvars, d as u32) };
        let denom_pos = denoms.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let mut cache: HashMap<u32, Arc<FactorBasis>> = HashMap::new();
        let factors: Vec<Arc<FactorBasis>> = space
            .ells
            .iter()
            .map(|&l| cache.entry(l).or_insert_with(|| Arc::new(FactorBasis::new(nvars, l))).clone())
            .collect();
        let mut strides = Vec::with_capacity(factors.len());
        let mut block = 1usize;
        for fb in &factors {
            strides.push(block);
            block *= fb.monos.len();
        }
        Ok(BasisIndex { space, denoms, denom_pos, factors, strides, block })
    }

    pub fn space(&self) -> &CohomSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.denoms.len() * self.block
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn factor_ranks(&self, idx: usize) -> (usize, Vec<usize>) {
        let r = idx / self.block;
        let mut rest = idx % self.block;
        let mut ranks = vec![0; self.factors.len()];
        for j in 0..self.factors.len() {
            let size = self.factors[j].monos.len();
            ranks[j] = rest % size;
            rest /= size;
        }
        (r, ranks)
    }

    pub fn element(&self, idx: usize) -> TensorBasisElement {
        let (r, ranks) = self.factor_ranks(idx);
        TensorBasisElement {
            factors: ranks.iter().zip(&self.factors).map(|(&k, fb)| fb.monos[k].clone()).collect(),
            denominator: self.denoms[r].clone(),
        }
    }

    /// Position of a basis element, or `None` when it is not one (a coboundary or a wrong shape).
    pub fn position(&self, elem: &TensorBasisElement) -> Option<usize> {
        if elem.factors.len() != self.factors.len() {
            return None;
        }
        let mut idx = *self.denom_pos.get(&elem.denominator)? * self.block;
        for (j, m) in elem.factors.iter().enumerate() {
            idx += *self.factors[j].pos.get(m)? * self.strides[j];
        }
        Some(idx)
    }

    fn locate(&self, denom: &MultiIndex, factor_monos: &[&MultiIndex]) -> Option<usize> {
        let mut idx = *self.denom_pos.get(denom)? * self.block;
        for (j, m) in factor_monos.iter().enumerate() {
            idx += *self.factors[j].pos.get(*m)? * self.strides[j];
        }
        Some(idx)
    }

    pub fn elements(&self) -> impl Iterator<Item = TensorBasisElement> + '_ {
        (0..self.len()).map(|i| self.element(i))
    }
}

enum Op<'a, F> {
    Mul(&'a Poly<F>),
    DMul(&'a [Poly<F>], usize),
    Contract(usize),
}

fn column_image<F: Field>(src: &BasisIndex, tgt: &BasisIndex, op: &Op<'_, F>, col: usize) -> Vec<(usize, F)> {
    let (r, ranks) = src.factor_ranks(col);
    let denom = &src.denoms[r];
    let monos: Vec<&MultiIndex> = ranks.iter().zip(&src.factors).map(|(&k, fb)| &fb.monos[k]).collect();
    let mut out = Vec::new();
    match op {
        Op::Mul(f) => {
            for (m, c) in f.terms() {
                if let Some(i2) = shift_down(denom, m) {
                    if let Some(row) = tgt.locate(&i2, &monos) {
                        out.push((row, c.clone()));
                    }
                }
            }
        }
        Op::DMul(grad, j) => {
            let nv = denom.nvars();
            for (i, g) in grad.iter().enumerate() {
                let raised = monos[*j].add(&MultiIndex::unit(nv, i));
                let mut new_monos = monos.clone();
                new_monos[*j] = &raised;
                for (m, c) in g.terms() {
                    if let Some(i2) = shift_down(denom, m) {
                        if let Some(row) = tgt.locate(&i2, &new_monos) {
                            out.push((row, c.clone()));
                        }
                    }
                }
            }
        }
        Op::Contract(j) => {
            let nv = denom.nvars();
            let jm = monos[*j];
            for i in 0..nv {
                let mult = jm.get(i);
                if mult == 0 || denom.get(i) <= 1 {
                    continue;
                }
                let lowered = jm.with(i, mult - 1);
                let i2 = denom.with(i, denom.get(i) - 1);
                let mut new_monos = monos.clone();
                new_monos[*j] = &lowered;
                if let Some(row) = tgt.locate(&i2, &new_monos) {
                    out.push((row, F::from_u64(mult as u64)));
                }
            }
        }
    }
    out
}

/// `I - M` when every entry stays at least one.
fn shift_down(denom: &MultiIndex, m: &MultiIndex) -> Option<MultiIndex> {
    let d = denom.exps();
    let s = m.exps();
    if d.iter().zip(s).any(|(a, b)| a <= b) {
        return None;
    }
    Some(MultiIndex::new(d.iter().zip(s).map(|(a, b)| a - b).collect()))
}

fn assemble<F: Field>(src: &BasisIndex, tgt: &BasisIndex, op: &Op<'_, F>) -> SparseMatrix<F> {
    let cols: Vec<Vec<(usize, F)>> = (0..src.len()).into_par_iter().map(|c| column_image(src, tgt, op, c)).collect();
    let mut buckets: Vec<Vec<(usize, F)>> = vec![Vec::new(); tgt.len()];
    for (c, col) in cols.into_iter().enumerate() {
        for (r, v) in col {
            buckets[r].push((c, v));
        }
    }
    SparseMatrix::from_rows(src.len(), buckets.into_iter().map(SparseVec::from_pairs).collect())
}

fn apply_op<F: Field>(src: &BasisIndex, tgt: &BasisIndex, op: &Op<'_, F>, v: &SparseVec<F>) -> SparseVec<F> {
    let mut pairs = Vec::new();
    for (c, x) in v.entries() {
        for (r, y) in column_image(src, tgt, op, *c) {
            pairs.push((r, x.mul_ref(&y)));
        }
    }
    SparseVec::from_pairs(pairs)
}

fn expect_target(tgt: &BasisIndex, expected: &CohomSpace) -> Result<(), CechError> {
    if tgt.space() != expected {
        return Err(CechError::TargetMismatch { expected: expected.to_string(), got: tgt.space().to_string() });
    }
    Ok(())
}

fn check_vars<F: Field>(src: &BasisIndex, f: &HomogPoly<F>) -> Result<(), CechError> {
    if f.nvars() != src.space().nvars() {
        return Err(CechError::VarCount { expected: src.space().nvars(), got: f.nvars() });
    }
    Ok(())
}

fn gradient_polys<F: Field>(f: &HomogPoly<F>) -> Vec<Poly<F>> {
    f.gradient().into_iter().map(HomogPoly::into_poly).collect()
}

/// Matrix of `·F` from `src` into `tgt` (which must be `src` twisted by `deg F`).
pub fn mul_poly_matrix<F: Field>(src: &BasisIndex, f: &HomogPoly<F>, tgt: &BasisIndex) -> Result<SparseMatrix<F>, CechError> {
    check_vars(src, f)?;
    expect_target(tgt, &src.space().mul_poly_target(f.degree()))?;
    Ok(assemble(src, tgt, &Op::Mul(f.as_poly())))
}

pub fn apply_mul_poly<F: Field>(src: &BasisIndex, f: &HomogPoly<F>, tgt: &BasisIndex, v: &SparseVec<F>) -> Result<SparseVec<F>, CechError> {
    check_vars(src, f)?;
    expect_target(tgt, &src.space().mul_poly_target(f.degree()))?;
    Ok(apply_op(src, tgt, &Op::Mul(f.as_poly()), v))
}

/// Matrix of `·dF = Σ_i ∂_iF·dZ_i` acting on factor `j` (0-based).
pub fn mul_dpoly_matrix<F: Field>(src: &BasisIndex, f: &HomogPoly<F>, j: usize, tgt: &BasisIndex) -> Result<SparseMatrix<F>, CechError> {
    check_vars(src, f)?;
    expect_target(tgt, &src.space().mul_dpoly_target(f.degree(), j)?)?;
    let grad = gradient_polys(f);
    Ok(assemble(src, tgt, &Op::DMul(&grad, j)))
}

pub fn apply_mul_dpoly<F: Field>(
    src: &BasisIndex,
    f: &HomogPoly<F>,
    j: usize,
    tgt: &BasisIndex,
    v: &SparseVec<F>,
) -> Result<SparseVec<F>, CechError> {
    check_vars(src, f)?;
    expect_target(tgt, &src.space().mul_dpoly_target(f.degree(), j)?)?;
    let grad = gradient_polys(f);
    Ok(apply_op(src, tgt, &Op::DMul(&grad, j), v))
}

/// Matrix of the contraction `dZ_i ↦ Z_i` on factor `j` (0-based).
pub fn euler_contraction_matrix<F: Field>(src: &BasisIndex, j: usize, tgt: &BasisIndex) -> Result<SparseMatrix<F>, CechError> {
    expect_target(tgt, &src.space().contraction_target(j)?)?;
    Ok(assemble::<F>(src, tgt, &Op::Contract(j)))
}

pub fn apply_euler_contraction<F: Field>(src: &BasisIndex, j: usize, tgt: &BasisIndex, v: &SparseVec<F>) -> Result<SparseVec<F>, CechError> {
    expect_target(tgt, &src.space().contraction_target(j)?)?;
    Ok(apply_op(src, tgt, &Op::Contract(j), v))
}

/// An element of a [`CohomSpace`], stored by coordinates in the canonical basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohomClass<F> {
    pub space: CohomSpace,
    pub coeffs: SparseVec<F>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassRow {
    pub factors: Vec<Vec<u32>>,
    pub denominator: Vec<u32>,
    pub coeff: String,
}

impl<F: Field> CohomClass<F> {
    pub fn zero(space: CohomSpace) -> Self {
        CohomClass { space, coeffs: SparseVec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_zero()
    }

    /// Expands `numerator · (factor_1 ⊗ … ⊗ factor_k) / Z^denominator`.
    ///
    /// `numerator` is a polynomial in `Z_0..Z_N`; each factor is a polynomial in
    /// `Z_0..Z_N, dZ_0..dZ_N` (in that variable order) whose `dZ`-degree is `ℓ_j`.
    /// Terms whose reduced denominator has an exponent below one vanish.
    pub fn from_fraction(index: &BasisIndex, numerator: &Poly<F>, denominator: &MultiIndex, factors: &[Poly<F>]) -> Result<Self, CechError> {
        let space = index.space();
        let nv = space.nvars();
        if numerator.nvars() != nv || denominator.nvars() != nv {
            return Err(CechError::VarCount { expected: nv, got: numerator.nvars() });
        }
        if factors.len() != space.num_factors() {
            return Err(CechError::BadFactor { index: factors.len(), count: space.num_factors() });
        }
        if let Some(f) = factors.iter().find(|f| f.nvars() != 2 * nv) {
            return Err(CechError::VarCount { expected: 2 * nv, got: f.nvars() });
        }
        // Split each factor term into (Z part, dZ part).
        let split: Vec<Vec<(MultiIndex, MultiIndex, F)>> = factors
            .iter()
            .map(|f| {
                f.terms()
                    .map(|(m, c)| {
                        let e = m.exps();
                        (MultiIndex::new(e[..nv].to_vec()), MultiIndex::new(e[nv..].to_vec()), c.clone())
                    })
                    .collect()
            })
            .collect();
        for (j, terms) in split.iter().enumerate() {
            if let Some(t) = terms.iter().find(|t| t.1.degree() != space.ells()[j]) {
                return Err(CechError::Degree(format!("factor {j} has a term of dZ-degree {} instead of {}", t.1.degree(), space.ells()[j])));
            }
        }
        let mut pairs = Vec::new();
        let mut choice = vec![0usize; split.len()];
        if split.iter().any(|t| t.is_empty()) || numerator.is_zero() {
            return Ok(Self::zero(space.clone()));
        }
        loop {
            let mut zshift = MultiIndex::zeros(nv);
            let mut coeff = F::one();
            let mut dmonos = Vec::with_capacity(split.len());
            for (j, &k) in choice.iter().enumerate() {
                let (z, dz, c) = &split[j][k];
                zshift = zshift.add(z);
                coeff = coeff.mul_ref(c);
                dmonos.push(dz);
            }
            for (m, c) in numerator.terms() {
                let shift = zshift.add(m);
                let net = denominator.degree() as i64 - shift.degree() as i64;
                if net != space.denominator_degree() {
                    return Err(CechError::Degree(format!(
                        "fraction has denominator degree {net}, the space needs {}",
                        space.denominator_degree()
                    )));
                }
                if let Some(i2) = shift_down(denominator, &shift) {
                    if let Some(pos) = index.locate(&i2, &dmonos) {
                        pairs.push((pos, coeff.mul_ref(c)));
                    }
                }
            }
            // Advance the mixed-radix counter over factor terms.
            let mut j = 0;
            loop {
                if j == choice.len() {
                    return Ok(CohomClass { space: space.clone(), coeffs: SparseVec::from_pairs(pairs) });
                }
                choice[j] += 1;
                if choice[j] < split[j].len() {
                    break;
                }
                choice[j] = 0;
                j += 1;
            }
        }
    }

    pub fn rows(&self, index: &BasisIndex) -> Vec<ClassRow> {
        self.coeffs
            .entries()
            .iter()
            .map(|(i, c)| {
                let e = index.element(*i);
                ClassRow {
                    factors: e.factors.iter().map(|m| m.exps().to_vec()).collect(),
                    denominator: e.denominator.exps().to_vec(),
                    coeff: c.to_string(),
                }
            })
            .collect()
    }

    /// One line per basis element: `J1 | … | Jk | I | coeff`.
    pub fn to_text(&self, index: &BasisIndex) -> String {
        let fmt = |v: &[u32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        self.rows(index)
            .iter()
            .map(|r| {
                let mut parts: Vec<String> = r.factors.iter().map(|f| format!("[{}]", fmt(f))).collect();
                parts.push(format!("[{}]", fmt(&r.denominator)));
                parts.push(r.coeff.clone());
                parts.join(" | ")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn to_json(&self, index: &BasisIndex) -> serde_json::Value {
        serde_json::to_value(self.rows(index)).expect("rows serialize")
    }
}
