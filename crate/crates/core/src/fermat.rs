//! Fermat-type complete intersections `F_j = Σ_i s_i^j Z_i^e` with coefficients of degree `ε`,
//! their determinantal symmetric differential forms, and the finite-field base-locus scanner.
//!
//! Forms are polynomials in `(Z_0..Z_N, dZ_0..dZ_N)` (or `(z_1..z_N, ξ_1..ξ_N)` on the chart
//! `Z_0 ≠ 0`); the degree in the differentials is the symmetric degree. Equation indices are 0-based.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cech::{CechError, CohomClass};
use crate::ci_engine::{first_violated, limit_space, tilde_constraints, CompleteIntersection, EngineError};
use crate::exactalg::{dense_rank, in_column_span, kernel_basis, SparseMatrix, SparseVec};
use crate::field::{Field, Fp};
use crate::lambda::LambdaSetting;
use crate::poly::{monomials_of_degree, subsets, HomogPoly, MultiIndex, Poly, PolyError};

pub const DEFAULT_SCAN_CAP: u128 = 10_000_000;
const XI_ENUMERATION_LIMIT: u128 = 10_000;
const XI_SAMPLES: usize = 1_000;

#[derive(Debug, thiserror::Error)]
pub enum FermatError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Cech(#[from] CechError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("numerator has degree {got}, expected {expected}")]
    Degree { got: i64, expected: i64 },
    #[error("invalid index tuple: {0}")]
    Index(String),
    #[error("scan space of size {size} exceeds the cap {cap}")]
    CapExceeded { size: u128, cap: u128 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> FermatError {
    FermatError::Invalid(msg.into())
}

/// Coefficient tuples `s^j ∈ A_ε^{N+1}` for `j = 0..c-1` and the exponent `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FermatSystem<F> {
    n_ambient: usize,
    epsilon: u32,
    e: u32,
    coeffs: Vec<Vec<HomogPoly<F>>>,
}

impl<F: Field> FermatSystem<F> {
    pub fn new(n_ambient: usize, epsilon: u32, e: u32, coeffs: Vec<Vec<HomogPoly<F>>>) -> Result<Self, FermatError> {
        let c = coeffs.len();
        if n_ambient < 2 || c == 0 || c > n_ambient {
            return Err(invalid(format!("need N ≥ 2 and 1 ≤ c ≤ N, got N={n_ambient}, c={c}")));
        }
        if e < 2 {
            return Err(invalid(format!("exponent {e} is below 2")));
        }
        for (j, row) in coeffs.iter().enumerate() {
            if row.len() != n_ambient + 1 {
                return Err(invalid(format!("coefficient row {j} has {} entries, expected {}", row.len(), n_ambient + 1)));
            }
            for s in row {
                if s.nvars() != n_ambient + 1 || (!s.is_zero() && s.degree() != epsilon) {
                    return Err(invalid(format!("coefficient {s} of row {j} is not a form of degree {epsilon} in {} variables", n_ambient + 1)));
                }
            }
        }
        Ok(FermatSystem { n_ambient, epsilon, e, coeffs })
    }

    /// Seeded random coefficients with every monomial present.
    pub fn random<R: Rng>(n_ambient: usize, c: usize, epsilon: u32, e: u32, rng: &mut R) -> Result<Self, FermatError> {
        let coeffs = (0..c).map(|_| (0..=n_ambient).map(|_| HomogPoly::random(n_ambient + 1, epsilon, rng)).collect()).collect();
        Self::new(n_ambient, epsilon, e, coeffs)
    }

    /// [`FermatSystem::random`] driven by a ChaCha8 stream seeded with `seed`.
    pub fn seeded(n_ambient: usize, c: usize, epsilon: u32, e: u32, seed: u64) -> Result<Self, FermatError> {
        Self::random(n_ambient, c, epsilon, e, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// `ε = 0` with constant coefficient matrix `a` (c×(N+1)).
    pub fn constant(n_ambient: usize, e: u32, a: &[Vec<F>]) -> Result<Self, FermatError> {
        let coeffs = a.iter().map(|row| row.iter().map(|x| HomogPoly::constant(n_ambient + 1, x.clone())).collect()).collect();
        Self::new(n_ambient, 0, e, coeffs)
    }

    pub fn n_ambient(&self) -> usize {
        self.n_ambient
    }

    pub fn nvars(&self) -> usize {
        self.n_ambient + 1
    }

    pub fn codim(&self) -> usize {
        self.coeffs.len()
    }

    /// `n = N - c`, the symmetric degree of the forms.
    pub fn form_degree(&self) -> usize {
        self.n_ambient - self.codim()
    }

    pub fn epsilon(&self) -> u32 {
        self.epsilon
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn r(&self) -> u32 {
        self.e - 1
    }

    /// Degree `e + ε` of the equations.
    pub fn e0(&self) -> u32 {
        self.e + self.epsilon
    }

    pub fn coeffs(&self) -> &[Vec<HomogPoly<F>>] {
        &self.coeffs
    }

    /// Smallest `e` allowed for the twist `-a`.
    pub fn min_exponent(n_ambient: usize, epsilon: u32, a: u32) -> u32 {
        a + n_ambient as u32 * (epsilon + 1) + 1
    }

    /// `e - a - Nε - N - 1`, the degree of the numerator `P`.
    pub fn numerator_degree(&self, a: u32) -> i64 {
        self.e as i64 - a as i64 - (self.n_ambient as i64) * (self.epsilon as i64) - self.n_ambient as i64 - 1
    }

    pub fn equation(&self, j: usize) -> HomogPoly<F> {
        let nv = self.nvars();
        let mut out = Poly::zero(nv);
        for (i, s) in self.coeffs[j].iter().enumerate() {
            out = out.add(&s.as_poly().mul_monomial(&MultiIndex::unit(nv, i).with(i, self.e), &F::one()));
        }
        HomogPoly::from_poly(out, self.e0()).expect("homogeneous by construction")
    }

    pub fn equations(&self) -> Vec<HomogPoly<F>> {
        (0..self.codim()).map(|j| self.equation(j)).collect()
    }

    /// The same system with coordinates `Z_0` and `Z_k` exchanged, so chart `k` becomes chart 0.
    pub fn chart_first(&self, k: usize) -> Result<Self, FermatError> {
        let nv = self.nvars();
        if k >= nv {
            return Err(invalid(format!("chart {k} out of range")));
        }
        let mut map: Vec<usize> = (0..nv).collect();
        map.swap(0, k);
        let coeffs = self
            .coeffs
            .iter()
            .map(|row| {
                let mut row: Vec<HomogPoly<F>> = row.iter().map(|s| HomogPoly::from_poly(s.as_poly().rename(nv, &map), self.epsilon).expect("renaming keeps the degree")).collect();
                row.swap(0, k);
                row
            })
            .collect();
        Self::new(self.n_ambient, self.epsilon, self.e, coeffs)
    }

    /// Dehomogenized coefficients `t_i^j` on the chart `Z_0 ≠ 0`, in `z_1..z_N`.
    pub fn affine_coefficients(&self) -> Result<Vec<Vec<Poly<F>>>, FermatError> {
        Ok(self.coeffs.iter().map(|row| row.iter().map(|s| s.dehomogenize(0)).collect::<Result<_, _>>()).collect::<Result<_, _>>()?)
    }
}

fn check_indices(c: usize, n: usize, indices: &[usize], distinct: bool) -> Result<(), FermatError> {
    if indices.len() != n {
        return Err(FermatError::Index(format!("expected {n} indices, got {}", indices.len())));
    }
    if let Some(i) = indices.iter().find(|&&i| i >= c) {
        return Err(FermatError::Index(format!("index {i} out of range for {c} equations")));
    }
    if distinct {
        for (k, i) in indices.iter().enumerate() {
            if indices[..k].contains(i) {
                return Err(FermatError::Index(format!("index {i} repeats")));
            }
        }
    }
    Ok(())
}

fn check_numerator<F: Field>(sys: &FermatSystem<F>, p: &HomogPoly<F>, a: u32) -> Result<(), FermatError> {
    let expected = sys.numerator_degree(a);
    if expected < 0 {
        return Err(FermatError::Degree { got: p.degree() as i64, expected });
    }
    if p.nvars() != sys.nvars() {
        return Err(PolyError::VarCount(p.nvars(), sys.nvars()).into());
    }
    if p.degree() as i64 != expected {
        return Err(FermatError::Degree { got: p.degree() as i64, expected });
    }
    Ok(())
}

/// `a_i(v) = Z_i v` and `α_i(v) = Z_i dv + e v dZ_i`, in `(Z, dZ)`.
pub fn letters<F: Field>(v: &HomogPoly<F>, i: usize, e: u32) -> (Poly<F>, Poly<F>) {
    let nv = v.nvars();
    let all: Vec<usize> = (0..nv).collect();
    let lifted = v.as_poly().rename(2 * nv, &all);
    let z = Poly::variable(2 * nv, i);
    let a = lifted.mul(&z);
    let dv = (0..nv).fold(Poly::zero(2 * nv), |acc, k| acc.add(&v.as_poly().partial_derivative(k).rename(2 * nv, &all).mul(&Poly::variable(2 * nv, nv + k))));
    let alpha = z.mul(&dv).add(&lifted.mul(&Poly::variable(2 * nv, nv + i)).scale(&F::from_u64(e as u64)));
    (a, alpha)
}

/// `b_q(u) = z_q u` and `β_q(u) = z_q du(ξ) + e u ξ_q` for `q ∈ 1..=N`, in `(z, ξ)`.
pub fn affine_letters<F: Field>(u: &Poly<F>, q: usize, e: u32) -> (Poly<F>, Poly<F>) {
    let n = u.nvars();
    let all: Vec<usize> = (0..n).collect();
    let lifted = u.rename(2 * n, &all);
    let z = Poly::variable(2 * n, q - 1);
    let b = lifted.mul(&z);
    let du = (0..n).fold(Poly::zero(2 * n), |acc, k| acc.add(&u.partial_derivative(k).rename(2 * n, &all).mul(&Poly::variable(2 * n, n + k))));
    let beta = z.mul(&du).add(&lifted.mul(&Poly::variable(2 * n, n + q - 1)).scale(&F::from_u64(e as u64)));
    (b, beta)
}

/// Determinant of a square matrix of polynomials, by row expansion with memoized minors.
pub fn poly_determinant<F: Field>(m: &[Vec<Poly<F>>], nvars: usize) -> Poly<F> {
    let n = m.len();
    assert!(n < 64 && m.iter().all(|r| r.len() == n), "square matrix of size below 64");
    fn rec<F: Field>(m: &[Vec<Poly<F>>], row: usize, cols: u64, nvars: usize, memo: &mut HashMap<u64, Poly<F>>) -> Poly<F> {
        if row == m.len() {
            return Poly::one(nvars);
        }
        if let Some(p) = memo.get(&cols) {
            return p.clone();
        }
        let mut acc = Poly::zero(nvars);
        let mut pos = 0;
        for col in 0..m.len() {
            if cols & (1 << col) == 0 {
                continue;
            }
            if !m[row][col].is_zero() {
                let minor = rec(m, row + 1, cols & !(1 << col), nvars, memo);
                let term = m[row][col].mul(&minor);
                acc = if pos % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            pos += 1;
        }
        memo.insert(cols, acc.clone());
        acc
    }
    rec(m, 0, (1u64 << n) - 1, nvars, &mut HashMap::new())
}

/// `ω̃_j = numerator / Z_j^r` on the chart `Z_j ≠ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CocycleEntry<F> {
    pub chart: usize,
    pub numerator: Poly<F>,
    pub denominator_power: u32,
}

impl<F: Field> CocycleEntry<F> {
    pub fn to_json(&self, nv: usize) -> serde_json::Value {
        let name = move |i: usize| if i < nv { format!("Z{i}") } else { format!("dZ{}", i - nv) };
        serde_json::json!({
            "chart": self.chart,
            "numerator": self.numerator.to_text_with(&name),
            "denominator": format!("Z{}^{}", self.chart, self.denominator_power),
            "terms": self.numerator.num_terms(),
        })
    }
}

/// Rows `a(s^0..s^{c-1})` then `α(s^{i_1}..s^{i_n})`, all columns.
fn letter_matrix<F: Field>(sys: &FermatSystem<F>, indices: &[usize]) -> Vec<Vec<Poly<F>>> {
    let nv = sys.nvars();
    let mut rows: Vec<Vec<Poly<F>>> = Vec::new();
    for j in 0..sys.codim() {
        rows.push((0..nv).map(|i| letters(&sys.coeffs[j][i], i, sys.e).0).collect());
    }
    for &j in indices {
        rows.push((0..nv).map(|i| letters(&sys.coeffs[j][i], i, sys.e).1).collect());
    }
    rows
}

/// `ω̃_j^{I,P} = (-1)^j P / Z_j^r · det` with column `j` deleted from the letter matrix.
pub fn tilde_cocycle<F: Field>(sys: &FermatSystem<F>, indices: &[usize], p: &HomogPoly<F>, chart: usize, a: u32) -> Result<CocycleEntry<F>, FermatError> {
    check_indices(sys.codim(), sys.form_degree(), indices, true)?;
    check_numerator(sys, p, a)?;
    if chart > sys.n_ambient {
        return Err(invalid(format!("chart {chart} out of range")));
    }
    Ok(cocycle_from_matrix(sys, &letter_matrix(sys, indices), p, chart))
}

fn cocycle_from_matrix<F: Field>(sys: &FermatSystem<F>, full: &[Vec<Poly<F>>], p: &HomogPoly<F>, chart: usize) -> CocycleEntry<F> {
    let nv = sys.nvars();
    let minor: Vec<Vec<Poly<F>>> = full.iter().map(|row| row.iter().enumerate().filter(|(i, _)| *i != chart).map(|(_, x)| x.clone()).collect()).collect();
    let det = poly_determinant(&minor, 2 * nv);
    let all: Vec<usize> = (0..nv).collect();
    let mut numerator = p.as_poly().rename(2 * nv, &all).mul(&det);
    if chart % 2 == 1 {
        numerator = numerator.neg();
    }
    CocycleEntry { chart, numerator, denominator_power: sys.r() }
}

pub fn tilde_cocycle_all<F: Field>(sys: &FermatSystem<F>, indices: &[usize], p: &HomogPoly<F>, a: u32) -> Result<Vec<CocycleEntry<F>>, FermatError> {
    check_indices(sys.codim(), sys.form_degree(), indices, true)?;
    check_numerator(sys, p, a)?;
    let full = letter_matrix(sys, indices);
    Ok((0..sys.nvars()).into_par_iter().map(|j| cocycle_from_matrix(sys, &full, p, j)).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub in_kernel: bool,
    pub ambient_dim: String,
    pub checked: Vec<String>,
    pub first_failure: Option<String>,
    pub class_nonzero: bool,
}

/// The equations reordered as `I` followed by the remaining indices, and the matching setting
/// `λ^n = (n)` on the full intersection.
fn membership_setup<F: Field>(sys: &FermatSystem<F>, equations: Vec<HomogPoly<F>>, indices: &[usize]) -> Result<(CompleteIntersection<F>, LambdaSetting), FermatError> {
    let c = sys.codim();
    let n = sys.form_degree();
    let mut order: Vec<usize> = indices.to_vec();
    order.extend((0..c).filter(|j| !indices.contains(j)));
    let ci = CompleteIntersection::new(sys.n_ambient, order.iter().map(|&j| equations[j].clone()).collect())?;
    let mut levels = vec![Vec::new(); c + 1];
    levels[n] = vec![n as u32];
    let sigma = LambdaSetting::new(sys.n_ambient, vec![sys.e0(); c], levels).map_err(EngineError::from)?;
    Ok((ci, sigma))
}

fn membership_with_equations<F: Field>(
    sys: &FermatSystem<F>,
    equations: Vec<HomogPoly<F>>,
    indices: &[usize],
    p: &HomogPoly<F>,
    a: u32,
) -> Result<MembershipReport, FermatError> {
    check_indices(sys.codim(), sys.form_degree(), indices, true)?;
    check_numerator(sys, p, a)?;
    let (ci, sigma) = membership_setup(sys, equations, indices)?;
    let ambient = limit_space(&sigma, -(a as i64))?;
    let index = ambient.basis()?;
    let nv = sys.nvars();
    let factors = vec![Poly::one(2 * nv); ambient.num_factors()];
    let class = CohomClass::from_fraction(&index, p.as_poly(), &MultiIndex::constant(nv, sys.r()), &factors)?;
    let constraints = tilde_constraints(&sigma);
    let failure = first_violated(&ci, &index, &class.coeffs, &constraints)?;
    Ok(MembershipReport {
        in_kernel: failure.is_none(),
        ambient_dim: ambient.dim().to_string(),
        checked: constraints.iter().map(|c| c.to_string()).collect(),
        first_failure: failure.map(|c| c.to_string()),
        class_nonzero: !class.is_zero(),
    })
}

/// Whether `P / (Z_0⋯Z_N)^r` lies in `⋂ ker ·F_j ∩ ⋂_{j∈I} ker ·dF_j` inside `H^N(O(-a - N e_0))`.
pub fn verify_kernel_membership<F: Field>(sys: &FermatSystem<F>, indices: &[usize], p: &HomogPoly<F>, a: u32) -> Result<MembershipReport, FermatError> {
    membership_with_equations(sys, sys.equations(), indices, p, a)
}

/// A monomial `M` of degree `e_0` with `P·M / (Z_0⋯Z_N)^r` nonzero in cohomology, if one exists.
fn balanced_monomial<F: Field>(sys: &FermatSystem<F>, p: &HomogPoly<F>) -> Option<MultiIndex> {
    let (lead, _) = p.as_poly().leading_term()?;
    let mut room: Vec<u32> = lead.exps().iter().map(|&x| (sys.r() as i64 - 1 - x as i64).max(0) as u32).collect();
    let mut left = sys.e0();
    let mut exps = vec![0u32; sys.nvars()];
    while left > 0 {
        let k = (0..room.len()).max_by_key(|&k| (room[k], usize::MAX - k))?;
        if room[k] == 0 {
            return None;
        }
        room[k] -= 1;
        exps[k] += 1;
        left -= 1;
    }
    Some(MultiIndex::new(exps))
}

/// Negative control: adds a monomial outside the Fermat family to `F_{I_1}` and reruns the check.
pub fn membership_negative_control<F: Field>(sys: &FermatSystem<F>, indices: &[usize], p: &HomogPoly<F>, a: u32) -> Result<MembershipReport, FermatError> {
    check_indices(sys.codim(), sys.form_degree(), indices, true)?;
    check_numerator(sys, p, a)?;
    let m = balanced_monomial(sys, p).ok_or_else(|| invalid("no monomial of degree e0 fits under the denominator"))?;
    let mut eqs = sys.equations();
    let j = indices.first().copied().unwrap_or(0);
    eqs[j] = eqs[j].add(&HomogPoly::monomial(m, F::one()))?;
    membership_with_equations(sys, eqs, indices, p, a)
}

/// Monomials in `(Z, dZ)` of `Z`-degree `dz` and `dZ`-degree `dd`.
fn bigraded_monomials(nv: usize, dz: i64, dd: i64) -> Vec<MultiIndex> {
    if dz < 0 || dd < 0 {
        return Vec::new();
    }
    let zs = monomials_of_degree(nv, dz as u32);
    let ds = monomials_of_degree(nv, dd as u32);
    let mut out = Vec::with_capacity(zs.len() * ds.len());
    for z in &zs {
        for d in &ds {
            let mut e = z.exps().to_vec();
            e.extend_from_slice(d.exps());
            out.push(MultiIndex::new(e));
        }
    }
    out
}

/// Whether `target = Σ_k g_k · h_k` with each `h_k` in the span of the given monomials.
pub fn ideal_membership<F: Field>(target: &Poly<F>, generators: &[(Poly<F>, Vec<MultiIndex>)]) -> bool {
    if target.is_zero() {
        return true;
    }
    let mut rows: HashMap<MultiIndex, usize> = HashMap::new();
    let index_of = |m: &MultiIndex, rows: &mut HashMap<MultiIndex, usize>| {
        let next = rows.len();
        *rows.entry(m.clone()).or_insert(next)
    };
    let to_vec = |p: &Poly<F>, rows: &mut HashMap<MultiIndex, usize>| -> SparseVec<F> {
        SparseVec::from_pairs(p.terms().map(|(m, c)| (index_of(m, rows), c.clone())).collect())
    };
    let target_vec = to_vec(target, &mut rows);
    let products: Vec<Poly<F>> =
        generators.par_iter().flat_map_iter(|(g, mults)| mults.iter().map(move |m| g.mul_monomial(m, &F::one()))).collect();
    let cols: Vec<SparseVec<F>> = products.iter().map(|p| to_vec(p, &mut rows)).collect();
    let m = SparseMatrix::from_columns(rows.len(), &cols);
    in_column_span(&m, &target_vec)
}

/// `dF_j` as a form linear in `dZ`.
fn differential<F: Field>(f: &HomogPoly<F>) -> Poly<F> {
    let nv = f.nvars();
    let all: Vec<usize> = (0..nv).collect();
    (0..nv).fold(Poly::zero(2 * nv), |acc, k| acc.add(&f.as_poly().partial_derivative(k).rename(2 * nv, &all).mul(&Poly::variable(2 * nv, nv + k))))
}

fn bidegree<F: Field>(p: &Poly<F>, nv: usize) -> Option<(i64, i64)> {
    let (m, _) = p.terms().next()?;
    let e = m.exps();
    Some((e[..nv].iter().map(|&x| x as i64).sum(), e[nv..].iter().map(|&x| x as i64).sum()))
}

/// Whether `Z_{j'}^r num_j - Z_j^r num_{j'}` lies in `Σ F_i·(…) + Σ_{m∈I} dF_m·(…)` in its bidegree.
pub fn glue_holds<F: Field>(sys: &FermatSystem<F>, indices: &[usize], first: &CocycleEntry<F>, second: &CocycleEntry<F>) -> bool {
    let nv = sys.nvars();
    let zpow = |k: usize, r: u32| Poly::monomial(MultiIndex::unit(2 * nv, k).with(k, r), F::one());
    let target = zpow(second.chart, second.denominator_power)
        .mul(&first.numerator)
        .sub(&zpow(first.chart, first.denominator_power).mul(&second.numerator));
    let Some((dz, dd)) = bidegree(&target, nv) else { return true };
    let e0 = sys.e0() as i64;
    let eqs = sys.equations();
    let all: Vec<usize> = (0..nv).collect();
    let mut gens: Vec<(Poly<F>, Vec<MultiIndex>)> = eqs.iter().map(|f| (f.as_poly().rename(2 * nv, &all), bigraded_monomials(nv, dz - e0, dd))).collect();
    for &m in indices {
        gens.push((differential(&eqs[m]), bigraded_monomials(nv, dz - e0 + 1, dd - 1)));
    }
    ideal_membership(&target, &gens)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GlueMethod {
    /// An explicit combination of the generators was checked term by term.
    Certificate,
    /// Decided by a span computation in the relevant bidegree.
    LinearAlgebra,
}

#[derive(Debug, Clone, Serialize)]
pub struct GlueResult {
    pub charts: (usize, usize),
    pub holds: bool,
    pub method: GlueMethod,
}

/// With `u = (Z_0^r, …, Z_N^r)` the letter matrix satisfies `M u = (F_0, …, F_{c-1}, dF_{i_1}, …)`,
/// so Cramer's rule gives `u_k D_j - u_j D_k = (-1)^j det(M_ĵ with column k replaced by M u)`,
/// where `D_j` is the signed maximal minor. Expanding along that column yields the cofactors.
fn glue_certificate<F: Field>(sys: &FermatSystem<F>, full: &[Vec<Poly<F>>], p: &HomogPoly<F>, first: &CocycleEntry<F>, second: &CocycleEntry<F>) -> bool {
    let nv = sys.nvars();
    let (j, k) = (first.chart, second.chart);
    let all: Vec<usize> = (0..nv).collect();
    let zpow = |i: usize| Poly::monomial(MultiIndex::unit(2 * nv, i).with(i, sys.r()), F::one());
    let w: Vec<Poly<F>> = full.iter().map(|row| row.iter().enumerate().fold(Poly::zero(2 * nv), |acc, (i, x)| acc.add(&x.mul(&zpow(i))))).collect();
    let cols: Vec<usize> = (0..nv).filter(|&i| i != j).collect();
    let pos = cols.iter().position(|&i| i == k).expect("distinct charts");
    let mut combo = Poly::zero(2 * nv);
    for (r, wr) in w.iter().enumerate() {
        let minor: Vec<Vec<Poly<F>>> = full
            .iter()
            .enumerate()
            .filter(|(rr, _)| *rr != r)
            .map(|(_, row)| cols.iter().filter(|&&i| i != k).map(|&i| row[i].clone()).collect())
            .collect();
        let term = wr.mul(&poly_determinant(&minor, 2 * nv));
        combo = if (r + pos) % 2 == 0 { combo.add(&term) } else { combo.sub(&term) };
    }
    let mut rhs = p.as_poly().rename(2 * nv, &all).mul(&combo);
    if j % 2 == 1 {
        rhs = rhs.neg();
    }
    let target = zpow(k).mul(&first.numerator).sub(&zpow(j).mul(&second.numerator));
    target == rhs
}

/// Overlap agreement for every pair of charts: the explicit certificate first, then the
/// span computation when the certificate does not match.
pub fn verify_glue<F: Field>(sys: &FermatSystem<F>, indices: &[usize], p: &HomogPoly<F>, a: u32) -> Result<Vec<GlueResult>, FermatError> {
    let entries = tilde_cocycle_all(sys, indices, p, a)?;
    glue_entries(sys, indices, p, &entries)
}

/// [`verify_glue`] on given cochain entries, for instance deliberately corrupted ones.
pub fn glue_entries<F: Field>(sys: &FermatSystem<F>, indices: &[usize], p: &HomogPoly<F>, entries: &[CocycleEntry<F>]) -> Result<Vec<GlueResult>, FermatError> {
    check_indices(sys.codim(), sys.form_degree(), indices, true)?;
    let full = letter_matrix(sys, indices);
    let pairs: Vec<(usize, usize)> = (0..entries.len()).flat_map(|j| (j + 1..entries.len()).map(move |k| (j, k))).collect();
    Ok(pairs
        .par_iter()
        .map(|&(j, k)| {
            if glue_certificate(sys, &full, p, &entries[j], &entries[k]) {
                GlueResult { charts: (j, k), holds: true, method: GlueMethod::Certificate }
            } else {
                GlueResult { charts: (j, k), holds: glue_holds(sys, indices, &entries[j], &entries[k]), method: GlueMethod::LinearAlgebra }
            }
        })
        .collect())
}

/// `Q · det[b-rows; β-rows]` on the chart `Z_0 ≠ 0`, in `(z_1..z_N, ξ_1..ξ_N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSymmetricForm<F> {
    pub degree: usize,
    pub poly: Poly<F>,
}

impl<F: Field> AffineSymmetricForm<F> {
    pub fn eval(&self, z: &[F], xi: &[F]) -> F {
        let mut pt = z.to_vec();
        pt.extend_from_slice(xi);
        self.poly.eval(&pt)
    }

    /// Whether the form is homogeneous of degree `n` in `ξ`.
    pub fn is_xi_homogeneous(&self) -> bool {
        let n = self.poly.nvars() / 2;
        self.poly.terms().all(|(m, _)| m.exps()[n..].iter().sum::<u32>() as usize == self.degree)
    }

    /// For each `i`, whether substituting `z_i = ξ_i = 0` gives the zero polynomial.
    pub fn vanishes_on_w(&self) -> Vec<bool> {
        let n = self.poly.nvars() / 2;
        let zero = Poly::zero(2 * n);
        (0..n).map(|i| self.poly.substitute(i, &zero).substitute(n + i, &zero).is_zero()).collect()
    }

    pub fn to_text(&self) -> String {
        let n = self.poly.nvars() / 2;
        self.poly.to_text_with(&|i| if i < n { format!("z{}", i + 1) } else { format!("xi{}", i - n + 1) })
    }
}

fn affine_matrix<F: Field>(sys: &FermatSystem<F>, t: &[Vec<Poly<F>>], indices: &[usize]) -> Vec<Vec<Poly<F>>> {
    let n = sys.n_ambient;
    let mut rows = Vec::new();
    for row in t.iter() {
        rows.push((1..=n).map(|q| affine_letters(&row[q], q, sys.e).0).collect());
    }
    for &j in indices {
        rows.push((1..=n).map(|q| affine_letters(&t[j][q], q, sys.e).1).collect());
    }
    rows
}

/// The affine form for the index tuple `I`; a repeated index gives the zero form.
pub fn affine_form<F: Field>(sys: &FermatSystem<F>, indices: &[usize], q: &Poly<F>, a: u32) -> Result<AffineSymmetricForm<F>, FermatError> {
    check_indices(sys.codim(), sys.form_degree(), indices, false)?;
    let n = sys.n_ambient;
    if q.nvars() != n {
        return Err(PolyError::VarCount(q.nvars(), n).into());
    }
    let want = sys.numerator_degree(a);
    let got = q.total_degree().map_or(0, |d| d as i64);
    if want < 0 || got > want {
        return Err(FermatError::Degree { got, expected: want });
    }
    let t = sys.affine_coefficients()?;
    let det = poly_determinant(&affine_matrix(sys, &t, indices), 2 * n);
    let all: Vec<usize> = (0..n).collect();
    Ok(AffineSymmetricForm { degree: sys.form_degree(), poly: q.rename(2 * n, &all).mul(&det) })
}

pub fn affine_form_from_numerator<F: Field>(sys: &FermatSystem<F>, indices: &[usize], p: &HomogPoly<F>, a: u32) -> Result<AffineSymmetricForm<F>, FermatError> {
    check_numerator(sys, p, a)?;
    affine_form(sys, indices, &p.dehomogenize(0)?, a)
}

/// `B(t, z)`: row `j`, column `q` holds `z_q t_q^j(z)`.
pub fn build_b<F: Field>(t: &[Vec<Poly<F>>], z: &[F]) -> Vec<Vec<F>> {
    t.iter().map(|row| (1..row.len()).map(|q| z[q - 1].mul_ref(&row[q].eval(z))).collect()).collect()
}

/// `B'(t, z, ξ)`: row `j`, column `q` holds `z_q dt_q^j(ξ) + e t_q^j(z) ξ_q`.
pub fn build_bprime<F: Field>(t: &[Vec<Poly<F>>], z: &[F], xi: &[F], e: u32) -> Vec<Vec<F>> {
    let ef = F::from_u64(e as u64);
    t.iter()
        .map(|row| {
            (1..row.len())
                .map(|q| {
                    let u = &row[q];
                    let du = (0..z.len()).fold(F::zero(), |acc, k| acc + u.partial_derivative(k).eval(z).mul_ref(&xi[k]));
                    z[q - 1].mul_ref(&du) + ef.mul_ref(&u.eval(z)).mul_ref(&xi[q - 1])
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JetClass {
    InW,
    RankDropB,
    CriterionZero,
    Nonzero,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ScanCounts {
    pub in_w: usize,
    pub rank_drop_b: usize,
    pub criterion_zero: usize,
    pub nonzero: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JetPoint {
    pub z: Vec<u64>,
    pub xi: Vec<u64>,
    pub class: JetClass,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub p: u64,
    #[serde(rename = "N")]
    pub n_ambient: usize,
    pub c: usize,
    pub epsilon: u32,
    pub e: u32,
    pub seed: u64,
    pub counts: ScanCounts,
    #[serde(rename = "candidate_E")]
    pub candidate_e: Vec<JetPoint>,
    pub points_on_x: usize,
    pub points_with_sampled_directions: usize,
    /// Jet points in `W` where some form evaluates to a nonzero value.
    pub w_points_with_nonzero_form: usize,
    pub nonzero_spot_checked: usize,
    pub nonzero_spot_failures: usize,
    pub warnings: Vec<String>,
}

#[derive(Default)]
struct ChunkResult {
    counts: ScanCounts,
    candidates: Vec<JetPoint>,
    on_x: usize,
    sampled: usize,
    w_bad: usize,
    spot: usize,
    spot_fail: usize,
}

/// Projective points of the span of `basis`, all of them or a seeded sample.
fn projective_points<const P: u64>(basis: &[Vec<Fp<P>>], rng: &mut ChaCha8Rng) -> (Vec<Vec<Fp<P>>>, bool) {
    let d = basis.len();
    let n = basis.first().map_or(0, |v| v.len());
    let combine = |coef: &[Fp<P>]| -> Vec<Fp<P>> {
        (0..n).map(|i| coef.iter().zip(basis).fold(Fp::<P>::new(0), |acc, (c, v)| acc + *c * v[i])).collect()
    };
    let count = ((P as u128).pow(d as u32) - 1) / (P as u128 - 1);
    if count <= XI_ENUMERATION_LIMIT {
        let mut out = Vec::with_capacity(count as usize);
        for lead in 0..d {
            let free = d - lead - 1;
            for idx in 0..(P as usize).pow(free as u32) {
                let mut coef = vec![Fp::<P>::new(0); d];
                coef[lead] = Fp::<P>::new(1);
                let mut r = idx;
                for x in coef.iter_mut().skip(lead + 1) {
                    *x = Fp::<P>::new((r % P as usize) as u64);
                    r /= P as usize;
                }
                out.push(combine(&coef));
            }
        }
        (out, false)
    } else {
        let out = (0..XI_SAMPLES)
            .map(|_| loop {
                let coef: Vec<Fp<P>> = (0..d).map(|_| Fp::<P>::new(rng.gen_range(0..P))).collect();
                if coef.iter().any(|x| x.value() != 0) {
                    break combine(&coef);
                }
            })
            .collect();
        (out, true)
    }
}

/// Enumerates `z ∈ F_p^N` on the chart `Z_0 ≠ 0` of `X`, the tangent directions `ξ` at each,
/// and classifies every jet point by the rank criterion.
pub fn base_locus_scan<const P: u64>(sys: &FermatSystem<Fp<P>>, seed: u64, cap: u128) -> Result<ScanReport, FermatError> {
    let n = sys.n_ambient;
    let c = sys.codim();
    let size = (P as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > cap {
        return Err(FermatError::CapExceeded { size, cap });
    }
    let mut warnings = Vec::new();
    let needed = (3 * n).saturating_sub(2).div_ceil(4);
    if c < needed {
        warnings.push(format!("codimension {c} is below {needed}, outside the range where the criterion is expected to isolate points"));
    }
    if (sys.e as u64) % P == 0 {
        warnings.push(format!("e = {} vanishes mod {P}", sys.e));
    }
    let t = sys.affine_coefficients()?;
    let eqs: Vec<Poly<Fp<P>>> = sys.equations().iter().map(|f| f.dehomogenize(0)).collect::<Result<_, _>>()?;
    let grads: Vec<Vec<Poly<Fp<P>>>> = eqs.iter().map(|f| (0..n).map(|k| f.partial_derivative(k)).collect()).collect();
    let forms: Vec<AffineSymmetricForm<Fp<P>>> = subsets(c, sys.form_degree())
        .iter()
        .map(|idx| {
            let det = poly_determinant(&affine_matrix(sys, &t, idx), 2 * n);
            AffineSymmetricForm { degree: sys.form_degree(), poly: det }
        })
        .collect();

    let scan_point = |idx: u128| -> ChunkResult {
        let mut res = ChunkResult::default();
        let mut r = idx;
        let z: Vec<Fp<P>> = (0..n)
            .map(|_| {
                let v = (r % P as u128) as u64;
                r /= P as u128;
                Fp::<P>::new(v)
            })
            .collect();
        if !eqs.iter().all(|f| f.eval(&z).value() == 0) {
            return res;
        }
        res.on_x = 1;
        let jac: Vec<Vec<Fp<P>>> = grads.iter().map(|row| row.iter().map(|g| g.eval(&z)).collect()).collect();
        let kernel = kernel_basis(&SparseMatrix::from_dense_rows(n, &jac));
        let basis: Vec<Vec<Fp<P>>> = kernel.vectors().iter().map(|v| v.to_dense(n)).collect();
        if basis.is_empty() {
            return res;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let (xis, sampled) = projective_points(&basis, &mut rng);
        res.sampled = usize::from(sampled);
        let bmat = build_b(&t, &z);
        let rank_b = dense_rank(&bmat);
        for xi in xis {
            let in_w = (0..n).any(|i| z[i].value() == 0 && xi[i].value() == 0);
            let class = if in_w {
                JetClass::InW
            } else if rank_b < c {
                JetClass::RankDropB
            } else {
                let mut stacked = bmat.clone();
                stacked.extend(build_bprime(&t, &z, &xi, sys.e));
                if dense_rank(&stacked) < n {
                    JetClass::CriterionZero
                } else {
                    JetClass::Nonzero
                }
            };
            match class {
                JetClass::InW => {
                    res.counts.in_w += 1;
                    if forms.iter().any(|f| f.eval(&z, &xi).value() != 0) {
                        res.w_bad += 1;
                    }
                }
                JetClass::RankDropB | JetClass::CriterionZero => {
                    if class == JetClass::RankDropB {
                        res.counts.rank_drop_b += 1;
                    } else {
                        res.counts.criterion_zero += 1;
                    }
                    res.candidates.push(JetPoint { z: z.iter().map(|x| x.value()).collect(), xi: xi.iter().map(|x| x.value()).collect(), class });
                }
                JetClass::Nonzero => {
                    res.counts.nonzero += 1;
                    res.spot += 1;
                    if forms.iter().all(|f| f.eval(&z, &xi).value() == 0) {
                        res.spot_fail += 1;
                    }
                }
            }
        }
        res
    };

    let per_point: Vec<ChunkResult> = (0..size).into_par_iter().map(scan_point).collect();
    let mut total = ChunkResult::default();
    for r in per_point {
        total.counts.in_w += r.counts.in_w;
        total.counts.rank_drop_b += r.counts.rank_drop_b;
        total.counts.criterion_zero += r.counts.criterion_zero;
        total.counts.nonzero += r.counts.nonzero;
        total.candidates.extend(r.candidates);
        total.on_x += r.on_x;
        total.sampled += r.sampled;
        total.w_bad += r.w_bad;
        total.spot += r.spot;
        total.spot_fail += r.spot_fail;
    }
    Ok(ScanReport {
        p: P,
        n_ambient: n,
        c,
        epsilon: sys.epsilon,
        e: sys.e,
        seed,
        counts: total.counts,
        candidate_e: total.candidates,
        points_on_x: total.on_x,
        points_with_sampled_directions: total.sampled,
        w_points_with_nonzero_form: total.w_bad,
        nonzero_spot_checked: total.spot,
        nonzero_spot_failures: total.spot_fail,
        warnings,
    })
}

/// Large prime used by the genericity probes.
pub type ProbeField = Fp<2147483647>;

#[derive(Debug, Clone, Serialize)]
pub struct ProbeCounts {
    pub trials: usize,
    pub degeneracies: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub field: String,
    pub seed: u64,
    /// `rk(AB) = min(q, n)` for `A` of full rank `n` (n×p) and random `B` (p×q).
    pub determinantal: ProbeCounts,
    /// Both linear functionals `b_q(·, z)`, `β_q(·, z, ξ)` on `A_ε` independent off `W`.
    pub claim_rank: ProbeCounts,
    /// `rk K_j = c` for the stacked functional matrices.
    pub k_matrices: ProbeCounts,
    /// The same checks at inputs built to degenerate; every trial should register.
    pub adversarial: AdversarialCounts,
    pub shapes: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdversarialCounts {
    pub determinantal: ProbeCounts,
    pub claim_rank: ProbeCounts,
    pub k_matrices: ProbeCounts,
}

fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Vec<Vec<ProbeField>> {
    (0..rows).map(|_| (0..cols).map(|_| ProbeField::new(rng.gen_range(0..2147483647))).collect()).collect()
}

fn mat_mul(a: &[Vec<ProbeField>], b: &[Vec<ProbeField>]) -> Vec<Vec<ProbeField>> {
    let inner = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter().map(|row| (0..cols).map(|j| (0..inner).fold(ProbeField::new(0), |acc, k| acc + row[k] * b[k][j])).collect()).collect()
}

/// Functionals `u ↦ b_q(u, z)` and `u ↦ β_q(u, z, ξ)` on `A_ε` in the monomial basis of `z^I`, `|I| ≤ ε`.
pub fn claim_functionals<F: Field>(z: &[F], xi: &[F], q: usize, epsilon: u32, e: u32) -> (Vec<F>, Vec<F>) {
    let n = z.len();
    let monos: Vec<MultiIndex> = (0..=epsilon).flat_map(|d| monomials_of_degree(n, d)).collect();
    let mut b = Vec::with_capacity(monos.len());
    let mut beta = Vec::with_capacity(monos.len());
    for m in &monos {
        let u = Poly::monomial(m.clone(), F::one());
        b.push(z[q - 1].mul_ref(&u.eval(z)));
        let du = (0..n).fold(F::zero(), |acc, k| acc + u.partial_derivative(k).eval(z).mul_ref(&xi[k]));
        beta.push(z[q - 1].mul_ref(&du) + F::from_u64(e as u64).mul_ref(&u.eval(z)).mul_ref(&xi[q - 1]));
    }
    (b, beta)
}

/// `K = diag(λ, …, λ) - (b_{kl} ℓ)`, a `c × (Mc)` matrix.
pub fn k_matrix<F: Field>(ell: &[F], lambda: &[F], b: &[Vec<F>]) -> Vec<Vec<F>> {
    let c = b.len();
    let m = ell.len();
    (0..c)
        .map(|k| {
            (0..c * m)
                .map(|col| {
                    let (l, i) = (col / m, col % m);
                    let diag = if l == k { lambda[i].clone() } else { F::zero() };
                    diag - b[k][l].mul_ref(&ell[i])
                })
                .collect()
        })
        .collect()
}

fn nonzero_vector<R: Rng>(n: usize, rng: &mut R) -> Vec<ProbeField> {
    (0..n).map(|_| ProbeField::new(rng.gen_range(1..2147483647))).collect()
}

/// Monte Carlo checks of the rank statements behind the base-locus estimate.
pub fn genericity_probes(trials: usize, seed: u64) -> ProbeReport {
    let (n, p, q) = (3usize, 4usize, 5usize);
    let (big_n, c, epsilon) = (4usize, 2usize, 1u32);
    let e = FermatSystem::<ProbeField>::min_exponent(big_n, epsilon, 0);
    let adversarial_trials = trials.clamp(1, 50);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut det_drops = 0;
    for _ in 0..trials {
        let a = loop {
            let a = random_matrix(n, p, &mut rng);
            if dense_rank(&a) == n {
                break a;
            }
        };
        let b = random_matrix(p, q, &mut rng);
        if dense_rank(&mat_mul(&a, &b)) != q.min(n) {
            det_drops += 1;
        }
    }
    let mut claim_drops = 0;
    let mut k_drops = 0;
    for _ in 0..trials {
        let z = nonzero_vector(big_n, &mut rng);
        let xi = nonzero_vector(big_n, &mut rng);
        let qi = rng.gen_range(1..=big_n);
        let (b, beta) = claim_functionals(&z, &xi, qi, epsilon, e);
        if dense_rank(&[b.clone(), beta.clone()]) != 2 {
            claim_drops += 1;
        }
        let bm = random_matrix(c, c, &mut rng);
        if dense_rank(&k_matrix(&b, &beta, &bm)) != c {
            k_drops += 1;
        }
    }

    let mut adv_det = 0;
    let mut adv_claim = 0;
    let mut adv_k = 0;
    for _ in 0..adversarial_trials {
        let mut a = random_matrix(n, p, &mut rng);
        a[n - 1] = a[0].clone();
        let b = random_matrix(p, q, &mut rng);
        if dense_rank(&mat_mul(&a, &b)) != q.min(n) {
            adv_det += 1;
        }
        let mut z = nonzero_vector(big_n, &mut rng);
        let mut xi = nonzero_vector(big_n, &mut rng);
        let qi = rng.gen_range(1..=big_n);
        z[qi - 1] = ProbeField::new(0);
        xi[qi - 1] = ProbeField::new(0);
        let (b, beta) = claim_functionals(&z, &xi, qi, epsilon, e);
        if dense_rank(&[b, beta]) != 2 {
            adv_claim += 1;
        }
        let ell = nonzero_vector(5, &mut rng);
        let ident: Vec<Vec<ProbeField>> = (0..c).map(|i| (0..c).map(|j| ProbeField::new(u64::from(i == j))).collect()).collect();
        if dense_rank(&k_matrix(&ell, &ell, &ident)) != c {
            adv_k += 1;
        }
    }
    let counts = |d| ProbeCounts { trials, degeneracies: d };
    let adv = |d| ProbeCounts { trials: adversarial_trials, degeneracies: d };
    ProbeReport {
        field: ProbeField::field_name(),
        seed,
        determinantal: counts(det_drops),
        claim_rank: counts(claim_drops),
        k_matrices: counts(k_drops),
        adversarial: AdversarialCounts { determinantal: adv(adv_det), claim_rank: adv(adv_claim), k_matrices: adv(adv_k) },
        shapes: serde_json::json!({"n": n, "p": p, "q": q, "N": big_n, "c": c, "epsilon": epsilon, "e": e}),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cech::CohomSpace;
    use crate::ci_engine::{nonvanishing_witness, plane_curve_descent, tilde_cohomology};
    use crate::poly::{parse_homog, vandermonde_coefficients};
    use crate::Rational as Q;
    use proptest::prelude::*;

    fn q(v: i64) -> Q {
        Q::from_i64(v)
    }

    fn one(nv: usize) -> HomogPoly<Q> {
        HomogPoly::constant(nv, q(1))
    }

    fn seeded(n: usize, c: usize, eps: u32, e: u32, seed: u64) -> FermatSystem<Q> {
        FermatSystem::random(n, c, eps, e, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn letter_examples() {
        let (a, alpha) = letters(&one(3), 1, 4);
        assert_eq!(a, Poly::variable(6, 1));
        assert_eq!(alpha, Poly::variable(6, 4).scale(&q(4)));
        let z0 = HomogPoly::<Q>::variable(3, 0);
        let (_, alpha) = letters(&z0, 2, 5);
        let expected = Poly::variable(6, 2).mul(&Poly::variable(6, 3)).add(&Poly::variable(6, 0).mul(&Poly::variable(6, 5)).scale(&q(5)));
        assert_eq!(alpha, expected);
        let (b, beta) = affine_letters(&Poly::<Q>::one(3), 2, 7);
        assert_eq!(b, Poly::variable(6, 1));
        assert_eq!(beta, Poly::variable(6, 4).scale(&q(7)));
    }

    #[test]
    fn equations_have_the_fermat_shape() {
        let sys = FermatSystem::<Q>::constant(2, 4, &[vec![q(1), q(1), q(1)]]).unwrap();
        assert_eq!(sys.equation(0), parse_homog("Z0^4 + Z1^4 + Z2^4", Some(3)).unwrap());
        let sys = seeded(3, 2, 1, 5, 1);
        for f in sys.equations() {
            assert_eq!(f.degree(), 6);
        }
        assert_eq!(sys.numerator_degree(0), 5 - 3 - 3 - 1);
    }

    #[test]
    fn b_matrices() {
        let sys = seeded(3, 2, 1, 6, 2);
        let t = sys.affine_coefficients().unwrap();
        let z = [q(0), q(2), q(-1)];
        let b = build_b(&t, &z);
        assert!(b.iter().all(|row| row[0] == q(0)));
        let z = [q(3), q(2), q(-1)];
        assert_eq!(dense_rank(&build_b(&t, &z)), 2);
        let bp = build_bprime(&t, &z, &[q(1), q(0), q(2)], 6);
        assert_eq!(bp.len(), 2);
    }

    #[test]
    fn tilde_cocycle_rejects_bad_input() {
        let sys = seeded(4, 2, 1, 9, 3);
        assert!(matches!(tilde_cocycle(&sys, &[0, 0], &one(5), 0, 0), Err(FermatError::Index(_))));
        assert!(matches!(tilde_cocycle(&sys, &[0], &one(5), 0, 0), Err(FermatError::Index(_))));
        assert!(matches!(tilde_cocycle(&sys, &[0, 1], &HomogPoly::variable(5, 0), 0, 0), Err(FermatError::Degree { .. })));
        let zero = tilde_cocycle(&sys, &[0, 1], &HomogPoly::zero(5, 0), 2, 0).unwrap();
        assert!(zero.numerator.is_zero());
    }

    #[test]
    fn equal_rows_give_zero_cocycle() {
        let sys = seeded(4, 2, 1, 9, 4);
        let mut coeffs = sys.coeffs().to_vec();
        coeffs[1] = coeffs[0].clone();
        let dup = FermatSystem::new(4, 1, 9, coeffs).unwrap();
        for j in 0..5 {
            assert!(tilde_cocycle(&dup, &[0, 1], &one(5), j, 0).unwrap().numerator.is_zero());
        }
    }

    #[test]
    fn plane_curve_cocycle_matches_the_descent_data() {
        let a = [q(1), q(2), q(3)];
        let sys = FermatSystem::constant(2, 4, &[a.to_vec()]).unwrap();
        let f = sys.equation(0);
        let p = HomogPoly::variable(3, 1);
        let rec = plane_curve_descent(&f, &p).unwrap();
        let e = q(4);
        let lambda = e.clone() * e.clone() * e * a[0].clone() * a[1].clone() * a[2].clone();
        for i in 0..3 {
            let ours = tilde_cocycle(&sys, &[0], &p, i, 0).unwrap();
            let grad = f.partial_derivative(i).into_poly().rename(6, &[0, 1, 2]);
            let zr = Poly::monomial(MultiIndex::unit(6, i).with(i, 3), q(1));
            // num_i / Z_i^r = λ · plane_num_i / F_i, cross-multiplied.
            assert_eq!(ours.numerator.mul(&grad), rec.point_cochain[i].1.mul(&zr).scale(&lambda));
        }
    }

    #[test]
    fn membership_for_small_instances() {
        let sys = seeded(3, 2, 1, 8, 5);
        let p = HomogPoly::variable(4, 2);
        assert_eq!(sys.numerator_degree(0), 1);
        let rep = verify_kernel_membership(&sys, &[1], &p, 0).unwrap();
        assert!(rep.in_kernel && rep.class_nonzero);
        let ctrl = membership_negative_control(&sys, &[1], &p, 0).unwrap();
        assert!(!ctrl.in_kernel);
    }

    #[test]
    fn membership_survives_in_family_perturbations() {
        let sys = seeded(3, 2, 1, 8, 6);
        let mut coeffs = sys.coeffs().to_vec();
        coeffs[0][2] = coeffs[0][2].add(&HomogPoly::variable(4, 1).scale(&q(5))).unwrap();
        let moved = FermatSystem::new(3, 1, 8, coeffs).unwrap();
        assert!(verify_kernel_membership(&moved, &[0], &HomogPoly::variable(4, 3), 0).unwrap().in_kernel);
    }

    #[test]
    fn membership_matches_the_tilde_subspace() {
        let sys = FermatSystem::constant(3, 5, &vandermonde_coefficients::<Q>(3, 2)).unwrap();
        let (ci, sigma) = membership_setup(&sys, sys.equations(), &[0]).unwrap();
        let res = tilde_cohomology(&ci, &sigma, 0).unwrap();
        assert_eq!(res.ambient, CohomSpace::new(3, vec![0], -3 * 5));
        let p = HomogPoly::variable(4, 0);
        assert!(verify_kernel_membership(&sys, &[0], &p, 0).unwrap().in_kernel);
        let index = res.ambient.basis().unwrap();
        let class = CohomClass::from_fraction(&index, p.as_poly(), &MultiIndex::constant(4, 4), &[Poly::one(8)]).unwrap();
        assert!(res.subspace.contains(&class.coeffs));
    }

    #[test]
    fn epsilon_zero_class_is_the_witness_class() {
        let sys = FermatSystem::constant(3, 6, &vandermonde_coefficients::<Q>(3, 2)).unwrap();
        let (ci, sigma) = membership_setup(&sys, sys.equations(), &[0]).unwrap();
        let p = HomogPoly::variable(4, 3);
        assert_eq!(sys.numerator_degree(1), 1);
        let w = nonvanishing_witness(&ci, &sigma, -1, &p).unwrap();
        assert!(!w.degenerate);
        let index = w.class.space.basis().unwrap();
        let ours = CohomClass::from_fraction(&index, p.as_poly(), &MultiIndex::constant(4, sys.r()), &[Poly::one(8)]).unwrap();
        assert_eq!(ours, w.class);
    }

    #[test]
    fn glue_on_small_instances() {
        let plane = FermatSystem::constant(2, 3, &[vec![q(1), q(2), q(5)]]).unwrap();
        assert!(verify_glue(&plane, &[0], &one(3), 0).unwrap().iter().all(|g| g.holds));
        let sys = FermatSystem::constant(3, 4, &vandermonde_coefficients::<Q>(3, 2)).unwrap();
        let res = verify_glue(&sys, &[1], &one(4), 0).unwrap();
        assert_eq!(res.len(), 6);
        assert!(res.iter().all(|g| g.holds));
        let twisted = seeded(3, 2, 1, 7, 8);
        assert!(verify_glue(&twisted, &[0], &one(4), 0).unwrap().iter().all(|g| g.holds));
    }

    #[test]
    fn certificate_and_span_agree() {
        for (sys, idx) in [
            (FermatSystem::constant(3, 4, &vandermonde_coefficients::<Q>(3, 2)).unwrap(), vec![1]),
            (seeded(3, 2, 1, 7, 12), vec![0]),
            (seeded(3, 2, 0, 4, 13), vec![1]),
        ] {
            let entries = tilde_cocycle_all(&sys, &idx, &one(4), 0).unwrap();
            let full = letter_matrix(&sys, &idx);
            for j in 0..4 {
                for k in j + 1..4 {
                    assert!(glue_certificate(&sys, &full, &one(4), &entries[j], &entries[k]));
                    assert!(glue_holds(&sys, &idx, &entries[j], &entries[k]));
                }
            }
        }
    }

    #[test]
    fn corrupted_entries_fall_back_and_fail() {
        let sys = FermatSystem::constant(3, 4, &vandermonde_coefficients::<Q>(3, 2)).unwrap();
        let mut entries = tilde_cocycle_all(&sys, &[1], &one(4), 0).unwrap();
        entries[2].numerator = entries[2].numerator.neg();
        let res = glue_entries(&sys, &[1], &one(4), &entries).unwrap();
        for g in &res {
            let touches = g.charts.0 == 2 || g.charts.1 == 2;
            assert_eq!(g.holds, !touches, "{g:?}");
            assert_eq!(g.method == GlueMethod::LinearAlgebra, touches);
        }
    }

    #[test]
    fn corrupted_sign_breaks_the_glue() {
        let sys = FermatSystem::constant(3, 4, &vandermonde_coefficients::<Q>(3, 2)).unwrap();
        let entries = tilde_cocycle_all(&sys, &[1], &one(4), 0).unwrap();
        let mut bad = entries[1].clone();
        bad.numerator = bad.numerator.neg();
        assert!(glue_holds(&sys, &[1], &entries[0], &entries[1]));
        assert!(!glue_holds(&sys, &[1], &entries[0], &bad));
    }

    #[test]
    fn affine_form_vanishes_on_w() {
        let sys = seeded(4, 2, 1, 9, 9);
        let form = affine_form_from_numerator(&sys, &[0, 1], &one(5), 0).unwrap();
        assert!(!form.poly.is_zero());
        assert!(form.is_xi_homogeneous());
        assert!(form.vanishes_on_w().iter().all(|&v| v));
        let zero = affine_form(&sys, &[0, 1], &Poly::zero(4), 0).unwrap();
        assert!(zero.poly.is_zero());
    }

    #[test]
    fn affine_form_is_alternating() {
        let sys = seeded(4, 2, 1, 9, 10);
        let q1 = Poly::<Q>::one(4);
        let f01 = affine_form(&sys, &[0, 1], &q1, 0).unwrap();
        let f10 = affine_form(&sys, &[1, 0], &q1, 0).unwrap();
        assert_eq!(f01.poly, f10.poly.neg());
        assert!(affine_form(&sys, &[1, 1], &q1, 0).unwrap().poly.is_zero());
    }

    #[test]
    fn affine_form_matches_the_plane_chart_form() {
        // On the curve, Q det[[b1,b2],[β1,β2]] · f1 = -e²t0t1t2 Q ξ2 modulo (f, df(ξ)).
        let a = [q(2), q(3), q(-1)];
        let sys = FermatSystem::constant(2, 5, &[a.to_vec()]).unwrap();
        let p = parse_homog::<Q>("Z0^2 - Z1*Z2", Some(3)).unwrap();
        let form = affine_form_from_numerator(&sys, &[0], &p, 0).unwrap();
        let f = sys.equation(0).dehomogenize(0).unwrap();
        let lift = |g: &Poly<Q>| g.rename(4, &[0, 1]);
        let f1 = lift(&f.partial_derivative(0));
        let df = lift(&f.partial_derivative(0)).mul(&Poly::variable(4, 2)).add(&lift(&f.partial_derivative(1)).mul(&Poly::variable(4, 3)));
        let qa = lift(&p.dehomogenize(0).unwrap());
        let e2 = q(25);
        let lhs = form.poly.mul(&f1).add(&qa.mul(&Poly::variable(4, 3)).scale(&(e2 * a[0].clone() * a[1].clone() * a[2].clone())));
        let mults = |zdeg: u32, xideg: u32| -> Vec<MultiIndex> {
            let mut out = Vec::new();
            for d in 0..=zdeg {
                for zm in monomials_of_degree(2, d) {
                    for xm in monomials_of_degree(2, xideg) {
                        let mut e = zm.exps().to_vec();
                        e.extend_from_slice(xm.exps());
                        out.push(MultiIndex::new(e));
                    }
                }
            }
            out
        };
        assert!(ideal_membership(&lhs, &[(lift(&f), mults(6, 1)), (df, mults(6, 0))]));
        assert!(!ideal_membership(&lhs.add(&Poly::variable(4, 2)), &[(lift(&f), mults(6, 1))]));
    }

    #[test]
    fn chart_swap_moves_the_chart() {
        let sys = seeded(3, 2, 1, 7, 11);
        let swapped = sys.chart_first(2).unwrap();
        let mut map: Vec<usize> = (0..4).collect();
        map.swap(0, 2);
        for j in 0..2 {
            assert_eq!(swapped.equation(j).as_poly(), &sys.equation(j).as_poly().rename(4, &map));
        }
    }

    fn scan_system<const P: u64>(seed: u64, dup: bool) -> FermatSystem<Fp<P>> {
        let mut sys = FermatSystem::<Fp<P>>::random(4, 2, 1, 9, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        if dup {
            let mut coeffs = sys.coeffs().to_vec();
            coeffs[1] = coeffs[0].clone();
            sys = FermatSystem::new(4, 1, 9, coeffs).unwrap();
        }
        sys
    }

    #[test]
    fn scan_invariants_hold() {
        let sys = scan_system::<11>(1, false);
        let rep = base_locus_scan(&sys, 1, DEFAULT_SCAN_CAP).unwrap();
        assert!(rep.points_on_x > 0);
        assert_eq!(rep.w_points_with_nonzero_form, 0);
        assert_eq!(rep.nonzero_spot_failures, 0);
        assert_eq!(rep.nonzero_spot_checked, rep.counts.nonzero);
        assert!(rep.counts.nonzero > 0);
        let again = base_locus_scan(&sys, 1, DEFAULT_SCAN_CAP).unwrap();
        assert_eq!(again.candidate_e, rep.candidate_e);
    }

    #[test]
    fn scan_negative_control_and_cap() {
        let good = base_locus_scan(&scan_system::<11>(1, false), 1, DEFAULT_SCAN_CAP).unwrap();
        let bad = base_locus_scan(&scan_system::<11>(1, true), 1, DEFAULT_SCAN_CAP).unwrap();
        assert!(bad.counts.rank_drop_b > 10 * (good.counts.rank_drop_b + 1));
        assert!(matches!(base_locus_scan(&scan_system::<11>(1, false), 1, 1000), Err(FermatError::CapExceeded { .. })));
        let low = FermatSystem::<Fp<11>>::random(4, 1, 1, 9, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(!base_locus_scan(&low, 3, DEFAULT_SCAN_CAP).unwrap().warnings.is_empty());
    }

    #[test]
    fn claim_functionals_at_the_origin_of_a_direction() {
        let z = [q(1), q(2), q(3), q(4)];
        let xi = [q(1), q(0), q(0), q(0)];
        let (b, beta) = claim_functionals(&z, &xi, 1, 1, 9);
        assert_eq!(b[0], q(1));
        assert_eq!(beta[0], q(9));
    }

    #[test]
    fn probes_record_no_degeneracy() {
        let rep = genericity_probes(200, 42);
        assert_eq!(rep.determinantal.degeneracies, 0);
        assert_eq!(rep.claim_rank.degeneracies, 0);
        assert_eq!(rep.k_matrices.degeneracies, 0);
        assert_eq!(rep.adversarial.determinantal.degeneracies, rep.adversarial.determinantal.trials);
        assert_eq!(rep.adversarial.claim_rank.degeneracies, rep.adversarial.claim_rank.trials);
        assert_eq!(rep.adversarial.k_matrices.degeneracies, rep.adversarial.k_matrices.trials);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn forms_vanish_on_w_for_random_systems(seed in any::<u64>(), eps in 0u32..=1) {
            let e = FermatSystem::<Q>::min_exponent(3, eps, 0);
            let sys = seeded(3, 2, eps, e, seed);
            let form = affine_form(&sys, &[1], &Poly::one(3), 0).unwrap();
            prop_assert!(form.vanishes_on_w().iter().all(|&v| v));
            prop_assert!(form.is_xi_homogeneous());
        }

        #[test]
        fn scan_classes_partition_jet_points(seed in 0u64..50) {
            let sys = FermatSystem::<Fp<5>>::random(3, 2, 1, 7, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let rep = base_locus_scan(&sys, seed, DEFAULT_SCAN_CAP).unwrap();
            prop_assert_eq!(rep.candidate_e.len(), rep.counts.rank_drop_b + rep.counts.criterion_zero);
            prop_assert_eq!(rep.w_points_with_nonzero_form, 0);
            prop_assert_eq!(rep.nonzero_spot_failures, 0);
        }
    }
}
