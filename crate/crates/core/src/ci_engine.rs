//! Cohomology of twisted symmetric (tilde) cotangent bundles on complete intersections,
//! computed as intersections of kernels of explicit maps on top cohomology of `P^N`.
//!
//! For a simple setting `Σ` on `X_p = (F_1 = … = F_p = 0)` and `a < |Σ|`,
//! `H^{q(Σ)}(Ω̃^Σ(a))` embeds into `H^N(Ω̃^{Σ_lim}(a - b_Σ))` with image
//! `⋂_i ( ker ·F_i ∩ ⋂_{j ≥ i, k} ker ·dF_i^{(j,k)} )`, where `(j,k)` runs over the
//! factors of level `j`. The cotangent (non-tilde) version is cut out further by the
//! kernels of the Euler contractions on the cotangent factors.
//!
//! Smoothness of the intersection chain is assumed, never certified.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cech::{
    apply_euler_contraction, apply_mul_dpoly, apply_mul_poly, euler_contraction_matrix, mul_dpoly_matrix, mul_poly_matrix, BasisIndex, CechError,
    CohomClass, CohomSpace,
};
use crate::exactalg::{kernel_basis, rank, Echelon, SparseMatrix, SparseVec, SubspaceBasis};
use crate::field::Field;
use crate::lambda::{LambdaError, LambdaPair, LambdaSetting};
use crate::poly::{deformed_fermat_pair, fermat_system_with_degrees, vandermonde_coefficients, HomogPoly, MultiIndex, Poly, PolyError};

pub const SMOOTHNESS_DISCLAIMER: &str = "smoothness of the intersection chain near X is assumed, not certified";

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    #[error(transparent)]
    Cech(#[from] CechError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("witness is not in the kernel of {0}")]
    MembershipFailure(String),
    #[error("identity check failed: {0}")]
    Identity(String),
}

fn precondition(msg: impl Into<String>) -> EngineError {
    EngineError::Precondition(msg.into())
}

/// `X = (F_1 = … = F_c = 0) ⊂ P^N`; the order of the equations fixes the chain `X_1 ⊇ X_2 ⊇ …`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompleteIntersection<F> {
    n_ambient: usize,
    equations: Vec<HomogPoly<F>>,
}

impl<F: Field> CompleteIntersection<F> {
    pub fn new(n_ambient: usize, equations: Vec<HomogPoly<F>>) -> Result<Self, EngineError> {
        let c = equations.len();
        if c == 0 || c >= n_ambient {
            return Err(precondition(format!("codimension {c} must lie in 1..={}", n_ambient.saturating_sub(1))));
        }
        for (i, f) in equations.iter().enumerate() {
            if f.nvars() != n_ambient + 1 {
                return Err(precondition(format!("equation {i} has {} variables, expected {}", f.nvars(), n_ambient + 1)));
            }
            if f.degree() == 0 || f.is_zero() {
                return Err(precondition(format!("equation {i} must be nonzero of positive degree")));
            }
        }
        Ok(CompleteIntersection { n_ambient, equations })
    }

    /// `F_p = Σ_j (j+1)^p Z_j^{e_p}` for `p = 0..c-1` (Vandermonde coefficients).
    pub fn fermat_with_degrees(n_ambient: usize, degrees: &[u32]) -> Result<Self, EngineError> {
        let a = vandermonde_coefficients::<F>(n_ambient, degrees.len());
        Self::new(n_ambient, fermat_system_with_degrees(n_ambient, degrees, &a)?)
    }

    pub fn fermat_generic(n_ambient: usize, c: usize, e: u32) -> Result<Self, EngineError> {
        Self::fermat_with_degrees(n_ambient, &vec![e; c])
    }

    pub fn n_ambient(&self) -> usize {
        self.n_ambient
    }

    pub fn codim(&self) -> usize {
        self.equations.len()
    }

    pub fn equations(&self) -> &[HomogPoly<F>] {
        &self.equations
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.equations.iter().map(|f| f.degree()).collect()
    }

    /// Same variety with the equations reordered: `perm[i]` is the old index of new equation `i`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, EngineError> {
        Self::new(self.n_ambient, perm.iter().map(|&i| self.equations[i].clone()).collect())
    }
}

/// One of the linear maps whose kernels cut out a cohomology group. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Constraint {
    #[serde(rename = "mulF")]
    MulF { equation: usize },
    #[serde(rename = "muldF")]
    MulDF { equation: usize, factor: usize },
    #[serde(rename = "contraction")]
    Contraction { factor: usize },
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Constraint::MulF { equation } => write!(f, "·F{equation}"),
            Constraint::MulDF { equation, factor } => write!(f, "·dF{equation} on factor {factor}"),
            Constraint::Contraction { factor } => write!(f, "contraction on factor {factor}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintRecord {
    #[serde(flatten)]
    pub constraint: Constraint,
    pub source_dim: usize,
    pub target_dim: usize,
    pub rank: usize,
}

impl Constraint {
    fn target<F: Field>(&self, ci: &CompleteIntersection<F>, space: &CohomSpace) -> Result<CohomSpace, EngineError> {
        Ok(match *self {
            Constraint::MulF { equation } => space.mul_poly_target(ci.equations[equation].degree()),
            Constraint::MulDF { equation, factor } => space.mul_dpoly_target(ci.equations[equation].degree(), factor)?,
            Constraint::Contraction { factor } => space.contraction_target(factor)?,
        })
    }

    fn matrix<F: Field>(&self, ci: &CompleteIntersection<F>, src: &BasisIndex, tgt: &BasisIndex) -> Result<SparseMatrix<F>, EngineError> {
        Ok(match *self {
            Constraint::MulF { equation } => mul_poly_matrix(src, &ci.equations[equation], tgt)?,
            Constraint::MulDF { equation, factor } => mul_dpoly_matrix(src, &ci.equations[equation], factor, tgt)?,
            Constraint::Contraction { factor } => euler_contraction_matrix(src, factor, tgt)?,
        })
    }

    fn apply<F: Field>(&self, ci: &CompleteIntersection<F>, src: &BasisIndex, tgt: &BasisIndex, v: &SparseVec<F>) -> Result<SparseVec<F>, EngineError> {
        Ok(match *self {
            Constraint::MulF { equation } => apply_mul_poly(src, &ci.equations[equation], tgt, v)?,
            Constraint::MulDF { equation, factor } => apply_mul_dpoly(src, &ci.equations[equation], factor, tgt, v)?,
            Constraint::Contraction { factor } => apply_euler_contraction(src, factor, tgt, v)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CohomologyResult<F> {
    pub q: i64,
    pub ambient: CohomSpace,
    pub subspace: SubspaceBasis<F>,
    pub constraints: Vec<ConstraintRecord>,
    pub disclaimer: &'static str,
    /// Set when the answer is read off a tilde group through an identification.
    pub identification: Option<String>,
}

impl<F: Field> CohomologyResult<F> {
    pub fn dim(&self) -> usize {
        self.subspace.dim()
    }

    pub fn to_json(&self, with_basis: bool) -> Result<Value, EngineError> {
        let mut v = json!({
            "q": self.q,
            "ambient": {
                "N": self.ambient.n_ambient(),
                "ells": self.ambient.ells(),
                "twist": self.ambient.twist(),
            },
            "ambient_dim": self.subspace.ambient_dim(),
            "dim": self.dim(),
            "constraints": self.constraints,
            "disclaimer": self.disclaimer,
        });
        if let Some(id) = &self.identification {
            v["identification"] = json!(id);
        }
        if with_basis {
            let index = self.ambient.basis()?;
            let basis: Vec<Value> = self
                .subspace
                .vectors()
                .iter()
                .map(|vec| CohomClass { space: self.ambient.clone(), coeffs: vec.clone() }.to_json(&index))
                .collect();
            v["basis"] = json!(basis);
        }
        Ok(v)
    }

    /// Re-checks every basis vector against every recorded constraint with matrix-vector products.
    pub fn reverify(&self, ci: &CompleteIntersection<F>) -> Result<bool, EngineError> {
        let src = self.ambient.basis()?;
        for rec in &self.constraints {
            let tgt = rec.constraint.target(ci, &self.ambient)?.basis()?;
            for v in self.subspace.vectors() {
                if !rec.constraint.apply(ci, &src, &tgt, v)?.is_zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Common kernel of `constraints` on `ambient`, feeding the smallest targets first.
pub fn intersect_constraints<F: Field>(
    ci: &CompleteIntersection<F>,
    ambient: &CohomSpace,
    constraints: &[Constraint],
) -> Result<(SubspaceBasis<F>, Vec<ConstraintRecord>), EngineError> {
    let src = ambient.basis()?;
    let built: Vec<(Constraint, SparseMatrix<F>)> = constraints
        .par_iter()
        .map(|c| {
            let tgt = c.target(ci, ambient)?.basis()?;
            Ok((*c, c.matrix(ci, &src, &tgt)?))
        })
        .collect::<Result<_, EngineError>>()?;
    let records: Vec<ConstraintRecord> = built
        .par_iter()
        .map(|(c, m)| ConstraintRecord { constraint: *c, source_dim: m.ncols(), target_dim: m.nrows(), rank: rank(m) })
        .collect();
    let mut order: Vec<usize> = (0..built.len()).collect();
    order.sort_by_key(|&i| built[i].1.nrows());
    let mut ech = Echelon::new(src.len());
    for i in order {
        ech.insert_matrix(&built[i].1).expect("constraint shares the ambient space");
    }
    let kernel = SubspaceBasis::span(src.len(), &ech.kernel_vectors()).expect("kernel vectors lie in the ambient space");
    Ok((kernel, records))
}

/// First constraint that does not annihilate `v`, by matrix-vector products only.
pub fn first_violated<F: Field>(
    ci: &CompleteIntersection<F>,
    index: &BasisIndex,
    v: &SparseVec<F>,
    constraints: &[Constraint],
) -> Result<Option<Constraint>, EngineError> {
    for c in constraints {
        let tgt = c.target(ci, index.space())?.basis()?;
        if !c.apply(ci, index, &tgt, v)?.is_zero() {
            return Ok(Some(*c));
        }
    }
    Ok(None)
}

fn check_flag<F: Field>(ci: &CompleteIntersection<F>, sigma: &LambdaSetting) -> Result<(), EngineError> {
    if sigma.n_ambient() != ci.n_ambient() {
        return Err(precondition(format!("setting lives in P^{} but the variety in P^{}", sigma.n_ambient(), ci.n_ambient())));
    }
    let p = sigma.codim();
    if p > ci.codim() || sigma.degrees() != &ci.degrees()[..p] {
        return Err(precondition(format!("setting degrees {:?} do not match the equation degrees {:?}", sigma.degrees(), ci.degrees())));
    }
    Ok(())
}

/// `·F_i` for every `i`, and `·dF_i` on every limit factor coming from a level `j ≥ i` (1-based).
pub fn tilde_constraints(sigma: &LambdaSetting) -> Vec<Constraint> {
    let p = sigma.codim();
    let mut out = Vec::new();
    for eq in 0..p {
        out.push(Constraint::MulF { equation: eq });
        for j in eq + 1..=p {
            for k in 0..sigma.m(j) {
                out.push(Constraint::MulDF { equation: eq, factor: sigma.limit_factor_index(j, k) });
            }
        }
    }
    out
}

/// `H^N(Ω̃^{Σ_lim}(a - b_Σ))`, the space the tilde group of `Σ` embeds into.
pub fn limit_space(sigma: &LambdaSetting, a: i64) -> Result<CohomSpace, EngineError> {
    let lim = sigma.limit()?;
    Ok(CohomSpace::new(sigma.n_ambient(), lim.level(0).to_vec(), a - sigma.b()? as i64))
}

/// `H^{q(Σ)}(X_p, Ω̃^Σ(a))` as a subspace of `H^N(Ω̃^{Σ_lim}(a - b_Σ))`.
pub fn tilde_cohomology<F: Field>(ci: &CompleteIntersection<F>, sigma: &LambdaSetting, a: i64) -> Result<CohomologyResult<F>, EngineError> {
    check_flag(ci, sigma)?;
    if !sigma.is_simple() {
        return Err(LambdaError::NotSimple.into());
    }
    if a >= sigma.total() as i64 {
        return Err(precondition(format!("twist {a} must be below |Σ| = {}", sigma.total())));
    }
    if sigma.q() < 0 {
        return Err(precondition(format!("q(Σ) = {} is negative", sigma.q())));
    }
    let ambient = limit_space(sigma, a)?;
    let (subspace, constraints) = intersect_constraints(ci, &ambient, &tilde_constraints(sigma))?;
    Ok(CohomologyResult { q: sigma.q(), ambient, subspace, constraints, disclaimer: SMOOTHNESS_DISCLAIMER, identification: None })
}

/// Contractions on the limit factors of the cotangent part of a pair, inside the union's limit.
fn pair_contractions(pair: &LambdaPair, union: &LambdaSetting) -> Vec<Constraint> {
    let mut out = Vec::new();
    for j in 0..=pair.codim() {
        for (k, &l) in pair.omega.level(j).iter().enumerate() {
            if l as usize > j {
                out.push(Constraint::Contraction { factor: union.limit_factor_index(j, k) });
            }
        }
    }
    out
}

/// `H^{q}(X_p, Ω^{(Σ, Σ̃)}(a))` for a simple pair: the tilde answer for `Σ ∪ Σ̃` cut by the
/// Euler contractions on the cotangent factors.
pub fn pair_cohomology<F: Field>(ci: &CompleteIntersection<F>, pair: &LambdaPair, a: i64) -> Result<CohomologyResult<F>, EngineError> {
    check_flag(ci, &pair.omega)?;
    if !pair.is_simple() {
        return Err(LambdaError::NotSimple.into());
    }
    if a >= pair.t() {
        return Err(precondition(format!("twist {a} must be below t = {}", pair.t())));
    }
    if pair.q() < 0 {
        return Err(precondition(format!("q = {} is negative", pair.q())));
    }
    let union = pair.union();
    let ambient = limit_space(&union, a)?;
    let mut constraints = tilde_constraints(&union);
    constraints.extend(pair_contractions(pair, &union));
    let (subspace, records) = intersect_constraints(ci, &ambient, &constraints)?;
    Ok(CohomologyResult { q: pair.q(), ambient, subspace, constraints: records, disclaimer: SMOOTHNESS_DISCLAIMER, identification: None })
}

/// `H^{n - kc}(X, S^{ℓ1}Ω ⊗ … ⊗ S^{ℓk}Ω (a))` for `ℓ_i ≥ c` and `a < Σℓ - k`.
///
/// At the boundary `a = Σℓ - k` only the case `ℓ = (1)`, `a = 0` is accepted: there the
/// connecting map `H^0(O_X) → H^1(Ω_X)` is injective, so holomorphic and tilde forms agree.
pub fn omega_cohomology<F: Field>(ci: &CompleteIntersection<F>, ells: &[u32], a: i64) -> Result<CohomologyResult<F>, EngineError> {
    let c = ci.codim();
    let k = ells.len();
    if k == 0 {
        return Err(precondition("at least one symmetric power is needed"));
    }
    if let Some(l) = ells.iter().find(|&&l| (l as usize) < c) {
        return Err(precondition(format!("symmetric power {l} is below the codimension {c}")));
    }
    let sigma = LambdaSetting::top_level(ci.n_ambient(), ci.degrees(), ells.to_vec())?;
    if sigma.q() < 0 {
        return Err(precondition(format!("q = n - kc = {} is negative", sigma.q())));
    }
    let bound = ells.iter().map(|&l| l as i64).sum::<i64>() - k as i64;
    if a >= bound {
        if ells == [1] && a == 0 {
            let mut res = tilde_cohomology(ci, &sigma, a)?;
            res.identification = Some("H^0(X, Ω_X) ≅ H^0(X, Ω̃_X) because H^0(O_X) → H^1(Ω_X) is injective".into());
            return Ok(res);
        }
        return Err(precondition(format!("twist {a} must be below Σℓ - k = {bound}")));
    }
    let empty = LambdaSetting::new(ci.n_ambient(), ci.degrees(), vec![Vec::new(); c + 1])?;
    pair_cohomology(ci, &LambdaPair::new(sigma, empty)?, a)
}

/// `H^{N-c}(X, O_X(a))` as `⋂ ker ·F_i` inside `H^N(O(a - Σe))`.
///
/// Exact for every `a` when `X` has positive dimension, since the intermediate cohomology
/// of `O(m)` on each step of the chain vanishes.
pub fn structure_sheaf_cohomology<F: Field>(ci: &CompleteIntersection<F>, a: i64) -> Result<CohomologyResult<F>, EngineError> {
    let total: i64 = ci.degrees().iter().map(|&e| e as i64).sum();
    let ambient = CohomSpace::new(ci.n_ambient(), Vec::new(), a - total);
    let constraints: Vec<Constraint> = (0..ci.codim()).map(|i| Constraint::MulF { equation: i }).collect();
    let (subspace, records) = intersect_constraints(ci, &ambient, &constraints)?;
    Ok(CohomologyResult {
        q: (ci.n_ambient() - ci.codim()) as i64,
        ambient,
        subspace,
        constraints: records,
        disclaimer: SMOOTHNESS_DISCLAIMER,
        identification: None,
    })
}

fn contraction_matrices<F: Field>(space: &CohomSpace) -> Result<Vec<SparseMatrix<F>>, EngineError> {
    if let Some(j) = space.ells().iter().position(|&l| l == 0) {
        return Err(CechError::ZeroFactor(j).into());
    }
    let src = space.basis()?;
    (0..space.num_factors())
        .map(|j| {
            let tgt = space.contraction_target(j)?.basis()?;
            Ok(euler_contraction_matrix(&src, j, &tgt)?)
        })
        .collect()
}

/// Image of `H^N(⊗S^{ℓ_j}Ω(a))` in `H^N(⊗S^{ℓ_j}Ω̃(a))`: the common kernel of all contractions.
pub fn euler_image<F: Field>(space: &CohomSpace) -> Result<SubspaceBasis<F>, EngineError> {
    let mats = contraction_matrices::<F>(space)?;
    let refs: Vec<&SparseMatrix<F>> = mats.iter().collect();
    Ok(crate::exactalg::kernel_of_stack(&refs).map_err(|e| precondition(e.to_string()))?)
}

/// The same image computed one factor at a time: the kernel of the last contraction, then
/// the kernel of each earlier contraction restricted to what is left.
pub fn euler_image_chained<F: Field>(space: &CohomSpace) -> Result<SubspaceBasis<F>, EngineError> {
    let mats = contraction_matrices::<F>(space)?;
    let dim = space.basis()?.len();
    let mut current = SubspaceBasis::full(dim);
    for m in mats.iter().rev() {
        let images: Vec<SparseVec<F>> = current.vectors().iter().map(|v| m.mul_vec(v)).collect();
        let restricted = SparseMatrix::from_columns(m.nrows(), &images);
        let combos = kernel_basis(&restricted);
        let vectors: Vec<SparseVec<F>> = combos
            .vectors()
            .iter()
            .map(|c| c.entries().iter().fold(SparseVec::new(), |acc, (i, x)| acc.add_scaled(x, &current.vectors()[*i])))
            .collect();
        current = SubspaceBasis::span(dim, &vectors).map_err(|e| precondition(e.to_string()))?;
    }
    Ok(current)
}

#[derive(Debug, Clone)]
pub struct WitnessReport<F> {
    pub class: CohomClass<F>,
    pub degenerate: bool,
    pub checked: Vec<Constraint>,
    pub q: i64,
    pub p_degree: i64,
}

impl<F: Field> WitnessReport<F> {
    pub fn to_json(&self, with_class: bool) -> Result<Value, EngineError> {
        let mut v = json!({
            "q": self.q,
            "P_degree": self.p_degree,
            "ambient_dim": self.class.space.dim().to_string(),
            "nonzero": !self.class.is_zero(),
            "degenerate": self.degenerate,
            "support_size": self.class.coeffs.nnz(),
            "checked_constraints": self.checked,
            "all_in_kernel": true,
        });
        if with_class {
            v["class"] = self.class.to_json(&self.class.space.basis()?);
        }
        Ok(v)
    }
}

/// Degree the numerator of the witness must have.
pub fn witness_numerator_degree(sigma: &LambdaSetting, e: u32, a: i64) -> Result<i64, EngineError> {
    let lim = sigma.limit()?;
    Ok((sigma.q() + 1) * e as i64 + a - sigma.n_ambient() as i64 - 1 - 2 * lim.total() as i64)
}

/// `P / (Z_0⋯Z_N)^{e-1} ⊗ ⊗_{j,k} (Z_0dZ_1 - Z_1dZ_0)^{λ^j_k - j}` in `H^N(Ω̃^{Σ_lim}(a - b_Σ))`,
/// checked against every tilde constraint and every contraction on the cotangent factors.
pub fn nonvanishing_witness<F: Field>(
    ci: &CompleteIntersection<F>,
    sigma: &LambdaSetting,
    a: i64,
    p: &HomogPoly<F>,
) -> Result<WitnessReport<F>, EngineError> {
    check_flag(ci, sigma)?;
    if sigma.codim() != ci.codim() {
        return Err(precondition("the witness lives on the full intersection"));
    }
    let degrees = ci.degrees();
    let e = degrees[0];
    if degrees.iter().any(|&d| d != e) {
        return Err(precondition("all equations must share one degree"));
    }
    if !sigma.is_simple() {
        return Err(LambdaError::NotSimple.into());
    }
    if a >= sigma.t() {
        return Err(precondition(format!("twist {a} must be below t(Σ) = {}", sigma.t())));
    }
    let want = witness_numerator_degree(sigma, e, a)?;
    if want < 0 {
        return Err(precondition(format!("degree {e} is too small for this setting (numerator degree {want})")));
    }
    if p.degree() as i64 != want || p.nvars() != ci.n_ambient() + 1 {
        return Err(PolyError::DegreeMismatch(p.degree(), want as u32).into());
    }
    let ambient = limit_space(sigma, a)?;
    let index = ambient.basis()?;
    let nv = ci.n_ambient() + 1;
    let wedge = Poly::variable(2 * nv, 0).mul(&Poly::variable(2 * nv, nv + 1)).sub(&Poly::variable(2 * nv, 1).mul(&Poly::variable(2 * nv, nv)));
    let factors: Vec<Poly<F>> = ambient.ells().iter().map(|&l| wedge.pow(l)).collect();
    let class = CohomClass::from_fraction(&index, p.as_poly(), &MultiIndex::constant(nv, e - 1), &factors)?;
    let mut checks = tilde_constraints(sigma);
    let pair = LambdaPair::new(sigma.clone(), LambdaSetting::new(sigma.n_ambient(), sigma.degrees().to_vec(), vec![Vec::new(); sigma.codim() + 1])?)?;
    checks.extend(pair_contractions(&pair, &pair.union()));
    if let Some(c) = first_violated(ci, &index, &class.coeffs, &checks)? {
        return Err(EngineError::MembershipFailure(c.to_string()));
    }
    let degenerate = class.is_zero();
    Ok(WitnessReport { class, degenerate, checked: checks, q: sigma.q(), p_degree: want })
}

#[derive(Debug, Clone, Serialize)]
pub struct SimplifyReport {
    pub original: String,
    pub chain: Vec<String>,
    pub simple: String,
    pub q: i64,
    /// Dimension of the tilde group of the simple setting.
    pub tilde_dim: usize,
    /// Dimension of the cotangent group of the simple setting, which injects into the original group.
    pub lower_bound: usize,
}

/// Replaces `Σ` by a simple setting with the same `q` and bounds `h^q(Ω^Σ(a))` from below.
pub fn simplify_and_bound<F: Field>(ci: &CompleteIntersection<F>, sigma: &LambdaSetting, a: i64) -> Result<SimplifyReport, EngineError> {
    if a >= sigma.t() {
        return Err(precondition(format!("twist {a} must be below t(Σ) = {}", sigma.t())));
    }
    let q = sigma.q();
    let mut cur = sigma.strip_inert_zeros();
    let mut chain = vec![cur.to_string()];
    while !cur.is_simple() {
        cur = cur.c1()?.0;
        if cur.q() != q {
            return Err(precondition(format!("q changed along the simplification at {cur}")));
        }
        chain.push(cur.to_string());
    }
    let tilde = tilde_cohomology(ci, &cur, a)?;
    let empty = LambdaSetting::new(cur.n_ambient(), cur.degrees().to_vec(), vec![Vec::new(); cur.codim() + 1])?;
    let omega = pair_cohomology(ci, &LambdaPair::new(cur.clone(), empty)?, a)?;
    Ok(SimplifyReport { original: sigma.to_string(), chain, simple: cur.to_string(), q, tilde_dim: tilde.dim(), lower_bound: omega.dim() })
}

/// Split a polynomial in `(Z_0..Z_N, dZ_0..dZ_N)` that is linear in `dZ` into its `dZ_l` coefficients.
fn dz_coefficients<F: Field>(form: &Poly<F>, nv: usize) -> Result<Vec<Poly<F>>, EngineError> {
    let mut out = vec![Poly::zero(nv); nv];
    for (m, c) in form.terms() {
        let e = m.exps();
        let dz: Vec<usize> = (0..nv).filter(|&l| e[nv + l] > 0).collect();
        if dz.len() != 1 || e[nv + dz[0]] != 1 {
            return Err(EngineError::Identity("form is not linear in the differentials".into()));
        }
        out[dz[0]].add_term(MultiIndex::new(e[..nv].to_vec()), c.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DescentRecord<F> {
    pub degree: u32,
    /// `((i, j), k, numerator)` with `ω̃_{ij} = numerator / (F_i F_j)`, numerator `(-1)^k P Z_k / e`.
    pub pair_cochain: Vec<((usize, usize), usize, Poly<F>)>,
    /// `(i, numerator)` with `ω̃_i = numerator / F_i`, numerator `(-1)^i P (Z_j dZ_k - Z_k dZ_j) / e`.
    pub point_cochain: Vec<(usize, Poly<F>)>,
    /// Chart `Z_0 ≠ 0`: `(i, coefficient, j, f_i)` meaning `coefficient · dz_j / f_i`.
    pub chart0: Vec<(usize, Poly<F>, usize, Poly<F>)>,
    pub euler_identity: bool,
    pub multiplication_identity: bool,
    pub differential_identity: bool,
    pub chart_matches: bool,
}

impl<F: Field> DescentRecord<F> {
    pub fn all_verified(&self) -> bool {
        self.euler_identity && self.multiplication_identity && self.differential_identity && self.chart_matches
    }

    pub fn to_json(&self) -> Value {
        let zname = |i: usize| format!("Z{i}");
        let zdz = |i: usize| if i < 3 { format!("Z{i}") } else { format!("dZ{}", i - 3) };
        let affine = |i: usize| format!("z{}", i + 1);
        json!({
            "degree": self.degree,
            "genus": (self.degree - 1) * (self.degree - 2) / 2,
            "pair_cochain": self.pair_cochain.iter().map(|((i, j), k, num)| json!({
                "i": i, "j": j, "k": k,
                "numerator": num.to_text_with(&zname),
                "denominator": format!("F{i}*F{j}"),
            })).collect::<Vec<_>>(),
            "point_cochain": self.point_cochain.iter().map(|(i, num)| json!({
                "i": i,
                "numerator": num.to_text_with(&zdz),
                "denominator": format!("F{i}"),
            })).collect::<Vec<_>>(),
            "chart0": self.chart0.iter().map(|(i, coeff, j, f)| json!({
                "open_set": format!("f{i} != 0"),
                "coefficient": coeff.to_text_with(&affine),
                "differential": format!("dz{j}"),
                "denominator": f.to_text_with(&affine),
            })).collect::<Vec<_>>(),
            "checks": {
                "euler_identity": self.euler_identity,
                "multiplication_identity": self.multiplication_identity,
                "differential_identity_mod_F": self.differential_identity,
                "chart_matches": self.chart_matches,
            },
        })
    }
}

/// Closed-form Čech data of the holomorphic form attached to `P` on the plane curve `F = 0`,
/// with respect to the covering by the sets `∂F/∂Z_i ≠ 0`, and its restriction to `Z_0 ≠ 0`.
pub fn plane_curve_descent<F: Field>(f: &HomogPoly<F>, p: &HomogPoly<F>) -> Result<DescentRecord<F>, EngineError> {
    if f.nvars() != 3 || p.nvars() != 3 {
        return Err(precondition("plane curves need three homogeneous variables"));
    }
    let e = f.degree();
    if e < 3 {
        return Err(precondition(format!("degree {e} is below 3")));
    }
    if p.degree() != e - 3 {
        return Err(PolyError::DegreeMismatch(p.degree(), e - 3).into());
    }
    let inv_e = F::from_u64(e as u64).inv().ok_or_else(|| precondition("the degree vanishes in the field"))?;
    let grad: Vec<Poly<F>> = f.gradient().into_iter().map(HomogPoly::into_poly).collect();
    let pp = p.as_poly();
    let z = |i: usize| Poly::<F>::variable(3, i);
    let sign = |i: usize| if i % 2 == 0 { F::one() } else { -F::one() };

    let euler_sum = (0..3).fold(Poly::zero(3), |acc, i| acc.add(&z(i).mul(&grad[i])));
    let euler_identity = euler_sum == f.as_poly().scale(&F::from_u64(e as u64));
    // e·P·F = P·ΣZ_kF_k is the multiplication identity with denominators F_0F_1F_2 cleared.
    let multiplication_identity = pp.mul(f.as_poly()).scale(&F::from_u64(e as u64)) == pp.mul(&euler_sum);

    let pairs = [((0, 1), 2), ((0, 2), 1), ((1, 2), 0)];
    let pair_cochain: Vec<((usize, usize), usize, Poly<F>)> =
        pairs.iter().map(|&((i, j), k)| ((i, j), k, pp.mul(&z(k)).scale(&(sign(k) * inv_e.clone())))).collect();

    // Forms live in (Z0, Z1, Z2, dZ0, dZ1, dZ2).
    let lift = |q: &Poly<F>| q.rename(6, &[0, 1, 2]);
    let w = |i: usize| Poly::<F>::variable(6, i);
    let dw = |i: usize| Poly::<F>::variable(6, 3 + i);
    let minor = |j: usize, k: usize| w(j).mul(&dw(k)).sub(&w(k).mul(&dw(j)));
    let complement = |i: usize| -> (usize, usize) {
        let rest: Vec<usize> = (0..3).filter(|&x| x != i).collect();
        (rest[0], rest[1])
    };
    // Numerators of e·ω̃_i.
    let point_numer = |i: usize| {
        let (j, k) = complement(i);
        lift(pp).mul(&minor(j, k)).scale(&sign(i))
    };
    let point_cochain: Vec<(usize, Poly<F>)> = (0..3).map(|i| (i, point_numer(i).scale(&inv_e))).collect();

    let df = (0..3).fold(Poly::zero(6), |acc, l| acc.add(&lift(&grad[l]).mul(&dw(l))));
    let mut differential_identity = true;
    for &((i, j), k) in &pairs {
        // e·F_iF_j·ω̃_{ij}·dF against e·F_iF_j·(ω̃_j - ω̃_i), compared modulo F.
        let lhs = lift(pp).mul(&w(k)).scale(&sign(k)).mul(&df);
        let rhs = lift(&grad[i]).mul(&point_numer(j)).sub(&lift(&grad[j]).mul(&point_numer(i)));
        for coeff in dz_coefficients(&lhs.sub(&rhs), 3)? {
            if !coeff.is_multiple_of(f.as_poly()) {
                differential_identity = false;
            }
        }
    }

    let q = p.dehomogenize(0)?;
    let fa = f.dehomogenize(0)?;
    let mut chart0 = Vec::new();
    let mut chart_matches = true;
    for i in 1..3usize {
        let j = 3 - i;
        // Restrict to the section Z_0 = 1, so dZ_0 = 0 and dZ_l = dz_l.
        let num = &point_cochain[i].1;
        let mut restricted = Poly::zero(4);
        for (m, c) in num.terms() {
            let ex = m.exps();
            if ex[3] > 0 {
                continue;
            }
            restricted.add_term(MultiIndex::new(vec![ex[1], ex[2], ex[4], ex[5]]), c.clone());
        }
        let coeff = q.scale(&(sign(i) * inv_e.clone()));
        let expected = coeff.rename(4, &[0, 1]).mul(&Poly::variable(4, 1 + j));
        let fi = grad[i].substitute(0, &Poly::one(3));
        let fi_affine = rename_drop_first(&fi);
        chart_matches &= restricted == expected && fi_affine == fa.partial_derivative(i - 1);
        chart0.push((i, coeff, j, fi_affine));
    }
    Ok(DescentRecord { degree: e, pair_cochain, point_cochain, chart0, euler_identity, multiplication_identity, differential_identity, chart_matches })
}

/// Drops the (already specialised) first variable of a polynomial in three variables.
fn rename_drop_first<F: Field>(p: &Poly<F>) -> Poly<F> {
    Poly::from_terms(2, p.terms().map(|(m, c)| (MultiIndex::new(m.exps()[1..].to_vec()), c.clone())))
}

/// The deformation family of surfaces in `P^4` and its genericity test.
#[derive(Debug, Clone, Serialize)]
pub struct JumpPoint {
    pub alpha: [String; 2],
    pub beta: [String; 2],
    pub generic: bool,
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpReport {
    pub e: u32,
    pub avec: [i64; 5],
    pub ambient_dim: usize,
    pub dim_at_origin: usize,
    pub dims_at_random_parameters: Vec<JumpPoint>,
    pub degenerate_probe: JumpPoint,
}

/// `β₁ ≠ a₀α₁, β₁ ≠ a₁α₁, β₂ ≠ a₂α₂, β₂ ≠ a₃α₂`.
pub fn jump_parameters_generic<F: Field>(alpha: &[F; 2], beta: &[F; 2], avec: &[F; 5]) -> bool {
    let b1 = |ai: &F| beta[0] != ai.mul_ref(&alpha[0]);
    let b2 = |ai: &F| beta[1] != ai.mul_ref(&alpha[1]);
    b1(&avec[0]) && b1(&avec[1]) && b2(&avec[2]) && b2(&avec[3])
}

/// `dim ⋂_i ker(·∂F_α/∂Z_i) ∩ ker(·∂G_β/∂Z_i)` on `H^4(P^4, O(-4e))`.
pub fn jump_dimension<F: Field>(e: u32, alpha: [F; 2], beta: [F; 2], avec: &[F; 5]) -> Result<(usize, usize), EngineError> {
    let (f, g) = deformed_fermat_pair(e, alpha, beta, avec)?;
    let space = CohomSpace::new(4, Vec::new(), -4 * e as i64);
    let src = space.basis()?;
    let tgt = space.mul_poly_target(e - 1).basis()?;
    let partials: Vec<HomogPoly<F>> = (0..5).flat_map(|i| [f.partial_derivative(i), g.partial_derivative(i)]).collect();
    let mats: Vec<SparseMatrix<F>> =
        partials.par_iter().filter(|d| !d.is_zero()).map(|d| mul_poly_matrix(&src, d, &tgt)).collect::<Result<_, CechError>>()?;
    let mut ech = Echelon::new(src.len());
    for m in &mats {
        ech.insert_matrix(m).expect("shared ambient");
    }
    Ok((src.len(), src.len() - ech.rank()))
}

fn random_rational<F: Field>(rng: &mut ChaCha8Rng) -> (F, String) {
    let n: i64 = rng.gen_range(-20..=20);
    let d: i64 = rng.gen_range(1..=7);
    let v = F::from_ratio(&num_bigint::BigInt::from(n), &num_bigint::BigInt::from(d)).expect("positive denominator");
    let s = v.to_string();
    (v, s)
}

/// Dimension at the origin, at `trials` random parameters satisfying the genericity
/// inequalities, and at one parameter with `β₁ = a₀α₁` (recorded without expectation).
pub fn jump_experiment<F: Field>(e: u32, avec: [i64; 5], trials: usize, seed: u64) -> Result<JumpReport, EngineError> {
    if e < 5 {
        return Err(precondition(format!("degree {e} is below 5")));
    }
    let av: [F; 5] = avec.map(F::from_i64);
    let (ambient_dim, dim_at_origin) = jump_dimension(e, [F::zero(), F::zero()], [F::zero(), F::zero()], &av)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dims = Vec::with_capacity(trials);
    while dims.len() < trials {
        let (a1, s1) = random_rational::<F>(&mut rng);
        let (a2, s2) = random_rational::<F>(&mut rng);
        let (b1, t1) = random_rational::<F>(&mut rng);
        let (b2, t2) = random_rational::<F>(&mut rng);
        let alpha = [a1, a2];
        let beta = [b1, b2];
        if !jump_parameters_generic(&alpha, &beta, &av) {
            continue;
        }
        let (_, dim) = jump_dimension(e, alpha, beta, &av)?;
        dims.push(JumpPoint { alpha: [s1, s2], beta: [t1, t2], generic: true, dim });
    }
    let (a1, s1) = loop {
        let r = random_rational::<F>(&mut rng);
        if !r.0.is_zero() {
            break r;
        }
    };
    let (a2, s2) = random_rational::<F>(&mut rng);
    let (b2, t2) = random_rational::<F>(&mut rng);
    let b1 = av[0].mul_ref(&a1);
    let t1 = b1.to_string();
    let alpha = [a1, a2];
    let beta = [b1, b2];
    let generic = jump_parameters_generic(&alpha, &beta, &av);
    let (_, dim) = jump_dimension(e, alpha, beta, &av)?;
    Ok(JumpReport {
        e,
        avec,
        ambient_dim,
        dim_at_origin,
        dims_at_random_parameters: dims,
        degenerate_probe: JumpPoint { alpha: [s1, s2], beta: [t1, t2], generic, dim },
    })
}

/// Counts `F_p`-points of `X` where the Jacobian drops rank, over the prime field `GF(P)`.
/// Advisory only: a singular point mod `P` says nothing definite about `X` over `ℚ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SmoothnessSpotCheck {
    pub prime: u64,
    pub points_on_x: usize,
    pub singular_points: usize,
}

pub fn smoothness_spot_check<const P: u64>(ci: &CompleteIntersection<crate::Rational>) -> Option<SmoothnessSpotCheck> {
    use crate::field::Fp;
    use num_traits::{One, Zero};
    let nv = ci.n_ambient() + 1;
    let total = (P as u128).checked_pow(nv as u32)?;
    if total > 2_000_000 {
        return None;
    }
    let reduce = |f: &HomogPoly<crate::Rational>| -> Option<Poly<Fp<P>>> {
        let mut out = Poly::zero(nv);
        for (m, c) in f.terms() {
            out.add_term(m.clone(), Fp::<P>::from_ratio(c.numer(), c.denom())?);
        }
        Some(out)
    };
    let eqs: Vec<Poly<Fp<P>>> = ci.equations().iter().map(reduce).collect::<Option<_>>()?;
    let jac: Vec<Vec<Poly<Fp<P>>>> = eqs.iter().map(|f| (0..nv).map(|i| f.partial_derivative(i)).collect()).collect();
    let mut on_x = 0;
    let mut singular = 0;
    // Normalised representatives: first nonzero coordinate equal to one.
    for lead in 0..nv {
        let free = nv - lead - 1;
        let count = (P as usize).pow(free as u32);
        for idx in 0..count {
            let mut pt = vec![Fp::<P>::zero(); nv];
            pt[lead] = Fp::<P>::one();
            let mut r = idx;
            for x in pt.iter_mut().skip(lead + 1) {
                *x = Fp::<P>::new((r % P as usize) as u64);
                r /= P as usize;
            }
            if eqs.iter().all(|f| f.eval(&pt).is_zero()) {
                on_x += 1;
                let m: Vec<Vec<Fp<P>>> = jac.iter().map(|row| row.iter().map(|d| d.eval(&pt)).collect()).collect();
                if crate::exactalg::dense_rank(&m) < ci.codim() {
                    singular += 1;
                }
            }
        }
    }
    Some(SmoothnessSpotCheck { prime: P, points_on_x: on_x, singular_points: singular })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::binomial;
    use crate::poly::parse_homog;
    use crate::Rational as Q;

    fn setting(text: &str) -> LambdaSetting {
        LambdaSetting::parse(text).unwrap()
    }

    fn hp(text: &str, nvars: usize) -> HomogPoly<Q> {
        parse_homog(text, Some(nvars)).unwrap()
    }

    #[test]
    fn plane_fermat_curves_have_the_classical_genus() {
        for e in 3..=6u32 {
            let ci = CompleteIntersection::<Q>::fermat_generic(2, 1, e).unwrap();
            let sigma = setting(&format!("(N=2; e={e}; L0=; L1=1)"));
            let res = tilde_cohomology(&ci, &sigma, 0).unwrap();
            assert_eq!(res.dim() as u32, (e - 1) * (e - 2) / 2);
            assert!(res.reverify(&ci).unwrap());
            let omega = omega_cohomology(&ci, &[1], 0).unwrap();
            assert_eq!(omega.dim(), res.dim());
            assert!(omega.identification.is_some());
        }
    }

    #[test]
    fn generic_plane_quartic_has_genus_three() {
        let f = hp("Z0^4 + Z1^4 + Z2^4 + Z0*Z1^3 - 2*Z1*Z2^3 + Z0^2*Z1*Z2", 3);
        let ci = CompleteIntersection::new(2, vec![f]).unwrap();
        let res = tilde_cohomology(&ci, &setting("(N=2; e=4; L0=; L1=1)"), 0).unwrap();
        assert_eq!(res.dim(), 3);
    }

    fn ci_genus(d1: u32, d2: u32) -> i64 {
        1 + (d1 * d2) as i64 * (d1 as i64 + d2 as i64 - 4) / 2
    }

    #[test]
    fn complete_intersection_curves_structure_sheaf() {
        for (d1, d2) in [(2u32, 3u32), (2, 2), (3, 3), (2, 4)] {
            let ci = CompleteIntersection::<Q>::fermat_with_degrees(3, &[d1, d2]).unwrap();
            let res = structure_sheaf_cohomology(&ci, 0).unwrap();
            assert_eq!(res.dim() as i64, ci_genus(d1, d2), "degrees ({d1},{d2})");
        }
        let ci = CompleteIntersection::<Q>::fermat_with_degrees(3, &[2, 3]).unwrap();
        let non_simple = setting("(N=3; e=2,3; L0=; L1=; L2=1)");
        assert!(matches!(tilde_cohomology(&ci, &non_simple, 0), Err(EngineError::Lambda(LambdaError::NotSimple))));
    }

    #[test]
    fn preconditions_are_enforced() {
        let ci = CompleteIntersection::<Q>::fermat_generic(2, 1, 4).unwrap();
        assert!(tilde_cohomology(&ci, &setting("(N=2; e=4; L0=; L1=1)"), 1).is_err());
        assert!(tilde_cohomology(&ci, &setting("(N=2; e=5; L0=; L1=1)"), 0).is_err());
        assert!(omega_cohomology(&ci, &[2], 1).is_err());
        assert!(omega_cohomology(&ci, &[3], 2).is_err());
        let surf = CompleteIntersection::<Q>::fermat_generic(4, 2, 3).unwrap();
        assert!(omega_cohomology(&surf, &[1], -3).is_err());
        assert!(CompleteIntersection::<Q>::fermat_generic(2, 2, 3).is_err());
    }

    #[test]
    fn boundary_twist_runs() {
        let ci = CompleteIntersection::<Q>::fermat_generic(2, 1, 4).unwrap();
        let res = omega_cohomology(&ci, &[2], 0).unwrap();
        assert_eq!(res.q, 0);
        assert_eq!(res.subspace.ambient_dim() as u128, res.ambient.dim());
        let v = res.to_json(true).unwrap();
        assert_eq!(v["dim"], json!(res.dim()));
    }

    /// Compositions of `total` into `parts` entries between 1 and `max`.
    fn bounded_compositions(parts: usize, total: i64, max: i64) -> u64 {
        if parts == 0 {
            return u64::from(total == 0);
        }
        (1..=max.min(total)).map(|x| bounded_compositions(parts - 1, total - x, max)).sum()
    }

    #[test]
    fn jump_origin_matches_bounded_compositions() {
        let av = [1, 2, 3, 4, 5].map(Q::from_i64);
        for e in 5..=6u32 {
            let (_, dim) = jump_dimension(e, [Q::from_i64(0), Q::from_i64(0)], [Q::from_i64(0), Q::from_i64(0)], &av).unwrap();
            assert_eq!(dim as u64, bounded_compositions(5, 4 * e as i64, e as i64 - 1));
        }
    }

    #[test]
    fn jump_reduction_agrees_with_the_full_computation() {
        let av = [1, 2, 3, 4, 5].map(Q::from_i64);
        for (alpha, beta) in [([0, 0], [0, 0]), ([1, -2], [3, 1])] {
            let (f, g) = deformed_fermat_pair(5, alpha.map(Q::from_i64), beta.map(Q::from_i64), &av).unwrap();
            let ci = CompleteIntersection::new(4, vec![f, g]).unwrap();
            let full = omega_cohomology(&ci, &[2], 0).unwrap();
            let (_, reduced) = jump_dimension(5, alpha.map(Q::from_i64), beta.map(Q::from_i64), &av).unwrap();
            assert_eq!(full.dim(), reduced);
        }
    }

    #[test]
    fn genericity_inequalities() {
        let av = [1, 2, 3, 4, 5].map(Q::from_i64);
        let q = Q::from_i64;
        assert!(jump_parameters_generic(&[q(1), q(1)], &[q(7), q(9)], &av));
        assert!(!jump_parameters_generic(&[q(1), q(1)], &[q(1), q(9)], &av));
        assert!(!jump_parameters_generic(&[q(1), q(2)], &[q(7), q(8)], &av));
    }

    #[test]
    fn witness_on_a_threefold_hypersurface() {
        let ci = CompleteIntersection::<Q>::fermat_generic(3, 1, 5).unwrap();
        let sigma = setting("(N=3; e=5; L0=; L1=1,1)");
        assert_eq!(witness_numerator_degree(&sigma, 5, -1).unwrap(), 0);
        let rep = nonvanishing_witness(&ci, &sigma, -1, &HomogPoly::constant(4, Q::from_i64(1))).unwrap();
        assert!(!rep.class.is_zero());
        assert!(!rep.degenerate);
        let zero = nonvanishing_witness(&ci, &sigma, -1, &HomogPoly::zero(4, 0)).unwrap();
        assert!(zero.degenerate);
        assert!(nonvanishing_witness(&ci, &sigma, -1, &hp("Z0", 4)).is_err());
    }

    #[test]
    fn witness_lies_in_the_computed_subspace() {
        let ci = CompleteIntersection::<Q>::fermat_generic(3, 1, 5).unwrap();
        let sigma = setting("(N=3; e=5; L0=; L1=1,1)");
        let rep = nonvanishing_witness(&ci, &sigma, -1, &HomogPoly::constant(4, Q::from_i64(1))).unwrap();
        let empty = setting("(N=3; e=5; L0=; L1=)");
        let res = pair_cohomology(&ci, &LambdaPair::new(sigma, empty).unwrap(), -1).unwrap();
        assert!(res.dim() >= 1);
        assert!(res.subspace.contains(&rep.class.coeffs));
    }

    #[test]
    fn non_fermat_equation_rejects_the_witness() {
        let f = hp("Z0^5 + Z1^5 + Z2^5 + Z3^5 + Z0^4*Z1", 4);
        let ci = CompleteIntersection::new(3, vec![f]).unwrap();
        let sigma = setting("(N=3; e=5; L0=; L1=1,1)");
        let r = nonvanishing_witness(&ci, &sigma, -1, &HomogPoly::constant(4, Q::from_i64(1)));
        assert!(matches!(r, Err(EngineError::MembershipFailure(_))));
    }

    #[test]
    fn euler_image_single_factor() {
        // Ω(m) → O(m-1)^{N+1} → O(m) with H^{N-1}(O(m)) = 0.
        for n in 2..=3usize {
            for m in -5..=-1i64 {
                let space = CohomSpace::new(n, vec![1], m);
                let img = euler_image::<Q>(&space).unwrap();
                let expected = (n as u128 + 1) * binomial(-m, n as i64) - binomial(-m - 1, n as i64);
                assert_eq!(img.dim() as u128, expected, "N={n}, m={m}");
            }
        }
        assert!(euler_image::<Q>(&CohomSpace::new(3, vec![0, 1], -3)).is_err());
    }

    /// `dim H^N(Ω⊗Ω(m))` from the Euler sequences, valid when `H^{N-1}(Ω(m))` vanishes.
    fn two_factor_oracle(n: usize, m: i64) -> u128 {
        let d = |ells: Vec<u32>| CohomSpace::new(n, ells, m).dim();
        d(vec![1, 1]) + d(vec![0, 0]) - d(vec![0, 1]) - d(vec![1, 0])
    }

    #[test]
    fn euler_image_two_factors_matches_chained_and_oracle() {
        for n in 2..=3usize {
            for m in -4..=-1i64 {
                let space = CohomSpace::new(n, vec![1, 1], m);
                let direct = euler_image::<Q>(&space).unwrap();
                let chained = euler_image_chained::<Q>(&space).unwrap();
                assert!(direct.same_as(&chained));
                assert_eq!(direct.dim() as u128, two_factor_oracle(n, m));
            }
        }
    }

    #[test]
    fn order_of_equations_does_not_change_dimensions() {
        let ci = CompleteIntersection::<Q>::fermat_with_degrees(4, &[3, 4]).unwrap();
        let swapped = ci.permuted(&[1, 0]).unwrap();
        let a = omega_cohomology(&ci, &[2], -2).unwrap();
        let b = omega_cohomology(&swapped, &[2], -2).unwrap();
        assert_eq!(a.dim(), b.dim());
        let a = structure_sheaf_cohomology(&ci, 1).unwrap();
        let b = structure_sheaf_cohomology(&swapped, 1).unwrap();
        assert_eq!(a.dim(), b.dim());
    }

    #[test]
    fn adding_constraints_never_increases_dimension() {
        let ci = CompleteIntersection::<Q>::fermat_generic(4, 2, 4).unwrap();
        let sigma = setting("(N=4; e=4,4; L0=; L1=; L2=2)");
        let ambient = limit_space(&sigma, 0).unwrap();
        let all = tilde_constraints(&sigma);
        let mut last = ambient.dim() as usize;
        for k in 1..=all.len() {
            let (sub, _) = intersect_constraints(&ci, &ambient, &all[..k]).unwrap();
            assert!(sub.dim() <= last);
            last = sub.dim();
        }
    }

    #[test]
    fn simplification_of_a_low_power() {
        let ci = CompleteIntersection::<Q>::fermat_generic(4, 2, 3).unwrap();
        let sigma = setting("(N=4; e=3,3; L0=; L1=; L2=1)");
        let rep = simplify_and_bound(&ci, &sigma, -1).unwrap();
        assert_eq!(rep.q, 1);
        assert_eq!(rep.simple, "(N=4; e=3,3; L0=; L1=1; L2=)");
        assert!(rep.lower_bound <= rep.tilde_dim);
        assert!(simplify_and_bound(&ci, &sigma, 0).is_err());
        let simple = setting("(N=4; e=3,3; L0=; L1=; L2=2)");
        let rep = simplify_and_bound(&ci, &simple, 0).unwrap();
        assert_eq!(rep.chain.len(), 1);
        assert_eq!(rep.tilde_dim, tilde_cohomology(&ci, &simple, 0).unwrap().dim());
    }

    #[test]
    fn quartic_descent() {
        let f = hp("Z0^4 + Z1^4 + Z2^4", 3);
        let rec = plane_curve_descent(&f, &hp("Z0", 3)).unwrap();
        assert!(rec.all_verified());
        let v = rec.to_json();
        assert_eq!(v["chart0"][0]["coefficient"], json!("-1/4"));
        assert_eq!(v["chart0"][0]["differential"], json!("dz2"));
        assert_eq!(v["chart0"][0]["denominator"], json!("4*z1^3"));
        assert_eq!(v["chart0"][1]["coefficient"], json!("1/4"));
        assert_eq!(v["chart0"][1]["differential"], json!("dz1"));
    }

    #[test]
    fn descent_on_cubics_and_generic_curves() {
        let rec = plane_curve_descent(&hp("Z0^3 + Z1^3 + Z2^3", 3), &HomogPoly::constant(3, Q::from_i64(1))).unwrap();
        assert!(rec.all_verified());
        let f = hp("Z0^5 + 2*Z1^5 + 3*Z2^5 + Z0*Z1^2*Z2^2 - Z0^3*Z1*Z2", 3);
        let rec = plane_curve_descent(&f, &hp("Z1^2 - 3*Z0*Z2", 3)).unwrap();
        assert!(rec.all_verified());
        assert!(plane_curve_descent(&f, &hp("Z1", 3)).is_err());
    }

    #[test]
    fn smoothness_check_on_the_fermat_cubic() {
        let ci = CompleteIntersection::<Q>::fermat_generic(2, 1, 3).unwrap();
        let chk = smoothness_spot_check::<7>(&ci).unwrap();
        assert_eq!(chk.singular_points, 0);
        assert!(chk.points_on_x > 0);
        let nodal = CompleteIntersection::new(2, vec![hp("Z1^2*Z2 - Z0^3 - Z0^2*Z2", 3)]).unwrap();
        assert_eq!(smoothness_spot_check::<7>(&nodal).unwrap().singular_points, 1);
    }

    #[test]
    fn dimension_formula_for_the_structure_sheaf_of_a_plane_curve() {
        for e in 3..=6u32 {
            let ci = CompleteIntersection::<Q>::fermat_generic(2, 1, e).unwrap();
            let res = structure_sheaf_cohomology(&ci, 0).unwrap();
            assert_eq!(res.dim() as u128, binomial(e as i64 - 1, 2));
        }
    }
}
