//! Settings `Σ = (X_p, λ⁰, …, λᵖ)` describing tensor products of symmetric powers of
//! (tilde) cotangent bundles restricted along a complete-intersection flag
//! `P^N = X_0 ⊃ X_1 ⊃ … ⊃ X_p`, together with the successor operations that
//! generate the exact sequences used to compute their cohomology.
//!
//! A level `λʲ` is a tuple of symmetric-power exponents for the bundle of `X_j`.
//! The empty tuple and the tuple `(0)` are kept distinct: both are "zero levels"
//! (no nonzero entry), but the latter contributes one trivial factor.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LambdaError {
    #[error("operation needs codimension at least 1")]
    ZeroCodimension,
    #[error("setting is not simple")]
    NotSimple,
    #[error("setting is already simple")]
    AlreadySimple,
    #[error("setting has a zero entry at level {0}")]
    ZeroEntry(usize),
    #[error("the cotangent part has no nonzero entry")]
    NoNonzeroEntry,
    #[error("malformed setting: {0}")]
    Malformed(String),
    #[error("settings live on different flags")]
    FlagMismatch,
}

/// Which exact sequence a successor step comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SequenceKind {
    /// Restriction from `X_{p-1}` to `X_p`; multiplication by `F_p`.
    Restriction,
    /// Conormal sequence on the cotangent factor; multiplication by `dF_{j0}`.
    Conormal,
    /// Tilde conormal sequence on the tilde-cotangent factor.
    TildeConormal,
    /// Euler sequence relating a cotangent factor to its tilde version.
    Euler,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaSetting {
    n_ambient: usize,
    degrees: Vec<u32>,
    levels: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Successor {
    pub setting: LambdaSetting,
    pub kind: SequenceKind,
}

/// Summary of the numerical invariants of a setting or a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Invariants {
    pub q: i64,
    pub i: u64,
    pub t: i64,
    pub total: u64,
    pub nz: u64,
    pub w: u64,
    pub n: u64,
}

fn nonzero(level: &[u32]) -> bool {
    level.iter().any(|&x| x != 0)
}

impl LambdaSetting {
    /// `degrees = (e_1, …, e_p)` and `levels = (λ⁰, …, λᵖ)`.
    pub fn new(n_ambient: usize, degrees: Vec<u32>, levels: Vec<Vec<u32>>) -> Result<Self, LambdaError> {
        if levels.len() != degrees.len() + 1 {
            return Err(LambdaError::Malformed(format!(
                "{} levels for codimension {}",
                levels.len(),
                degrees.len()
            )));
        }
        if degrees.len() > n_ambient {
            return Err(LambdaError::Malformed(format!("codimension {} exceeds N = {n_ambient}", degrees.len())));
        }
        if degrees.iter().any(|&e| e == 0) {
            return Err(LambdaError::Malformed("equation degrees must be positive".into()));
        }
        Ok(LambdaSetting { n_ambient, degrees, levels })
    }

    /// `(X_c, ∅, …, ∅, ℓ)`: the tuple `ℓ` at the top level `c`.
    pub fn top_level(n_ambient: usize, degrees: Vec<u32>, ell: Vec<u32>) -> Result<Self, LambdaError> {
        let c = degrees.len();
        let mut levels = vec![Vec::new(); c + 1];
        levels[c] = ell;
        Self::new(n_ambient, degrees, levels)
    }

    pub fn n_ambient(&self) -> usize {
        self.n_ambient
    }

    pub fn codim(&self) -> usize {
        self.degrees.len()
    }

    pub fn dim(&self) -> i64 {
        self.n_ambient as i64 - self.codim() as i64
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn levels(&self) -> &[Vec<u32>] {
        &self.levels
    }

    pub fn level(&self, j: usize) -> &[u32] {
        &self.levels[j]
    }

    pub fn m(&self, j: usize) -> usize {
        self.levels[j].len()
    }

    pub fn level_is_zero(&self, j: usize) -> bool {
        !nonzero(&self.levels[j])
    }

    /// `Σ_{j≥1} Σ_i min(j, λʲ_i)`.
    pub fn n_sigma(&self) -> u64 {
        self.levels.iter().enumerate().skip(1).map(|(j, l)| l.iter().map(|&x| (j as u64).min(x as u64)).sum::<u64>()).sum()
    }

    pub fn q(&self) -> i64 {
        self.dim() - self.n_sigma() as i64
    }

    /// `Σ_j j·nz(λʲ)`.
    pub fn w(&self) -> u64 {
        self.levels.iter().enumerate().map(|(j, l)| j as u64 * l.iter().filter(|&&x| x != 0).count() as u64).sum()
    }

    pub fn i_index(&self) -> u64 {
        self.codim() as u64 + self.w()
    }

    /// `|Σ|`: sum of all entries, including level 0.
    pub fn total(&self) -> u64 {
        self.levels.iter().flatten().map(|&x| x as u64).sum()
    }

    /// Number of nonzero entries over all levels, including level 0.
    pub fn nz(&self) -> u64 {
        self.levels.iter().flatten().filter(|&&x| x != 0).count() as u64
    }

    pub fn t(&self) -> i64 {
        self.total() as i64 - self.nz() as i64
    }

    pub fn invariants(&self) -> Invariants {
        Invariants { q: self.q(), i: self.i_index(), t: self.t(), total: self.total(), nz: self.nz(), w: self.w(), n: self.n_sigma() }
    }

    /// Smallest `j ≥ 1` whose level has a nonzero entry.
    fn first_nonzero_level(&self) -> Option<usize> {
        (1..self.levels.len()).find(|&j| !self.level_is_zero(j))
    }

    /// Degree of the equation involved in the successor sequence.
    pub fn deg(&self) -> Result<u32, LambdaError> {
        let p = self.codim();
        if p == 0 {
            return Err(LambdaError::ZeroCodimension);
        }
        Ok(match self.first_nonzero_level() {
            Some(j0) => self.degrees[j0 - 1],
            None => self.degrees[p - 1],
        })
    }

    fn restrict_down(&self) -> LambdaSetting {
        let p = self.codim();
        LambdaSetting { n_ambient: self.n_ambient, degrees: self.degrees[..p - 1].to_vec(), levels: self.levels[..p].to_vec() }
    }

    /// Moves the first nonzero entry of the first nonzero level `j0 ≥ 1` down to level
    /// `j0 - 1`, lowered by `drop`. Zero entries in front of it at level `j0` are dropped.
    fn move_down(&self, drop: u32) -> LambdaSetting {
        let j0 = self.first_nonzero_level().expect("caller checked a nonzero level");
        let lvl = &self.levels[j0];
        let i0 = lvl.iter().position(|&x| x != 0).expect("nonzero level");
        let mut levels = self.levels.clone();
        levels[j0 - 1].push(lvl[i0] - drop);
        levels[j0] = lvl[i0 + 1..].to_vec();
        LambdaSetting { n_ambient: self.n_ambient, degrees: self.degrees.clone(), levels }
    }

    fn successor(&self, drop: u32) -> Result<Successor, LambdaError> {
        if self.codim() == 0 {
            return Err(LambdaError::ZeroCodimension);
        }
        Ok(match self.first_nonzero_level() {
            None => Successor { setting: self.restrict_down(), kind: SequenceKind::Restriction },
            Some(_) => Successor { setting: self.move_down(drop), kind: SequenceKind::Conormal },
        })
    }

    pub fn s1(&self) -> Result<Successor, LambdaError> {
        self.successor(0)
    }

    pub fn s2(&self) -> Result<Successor, LambdaError> {
        self.successor(1)
    }

    /// Every entry at level `j ≥ 1` is at least `j`.
    pub fn is_simple(&self) -> bool {
        self.levels.iter().enumerate().skip(1).all(|(j, l)| l.iter().all(|&x| x as usize >= j))
    }

    /// `(P^N, λ⁰ ∪ (λ¹ - 1) ∪ … ∪ (λᵖ - p))`, concatenated level by level.
    pub fn limit(&self) -> Result<LambdaSetting, LambdaError> {
        if !self.is_simple() {
            return Err(LambdaError::NotSimple);
        }
        let flat: Vec<u32> = self.levels.iter().enumerate().flat_map(|(j, l)| l.iter().map(move |&x| x - j as u32)).collect();
        Ok(LambdaSetting { n_ambient: self.n_ambient, degrees: Vec::new(), levels: vec![flat] })
    }

    /// Position of factor `k` of level `j` inside the concatenated limit tuple.
    pub fn limit_factor_index(&self, j: usize, k: usize) -> usize {
        self.levels[..j].iter().map(|l| l.len()).sum::<usize>() + k
    }

    /// `b_Σ = Σ_{i=1..p} e_i (1 + Σ_{j≥i} m_j)`.
    pub fn b(&self) -> Result<u64, LambdaError> {
        if !self.is_simple() {
            return Err(LambdaError::NotSimple);
        }
        Ok(self
            .degrees
            .iter()
            .enumerate()
            .map(|(idx, &e)| {
                let i = idx + 1;
                let tail: usize = self.levels[i..].iter().map(|l| l.len()).sum();
                e as u64 * (1 + tail as u64)
            })
            .sum())
    }

    /// Iterates `s2` down to codimension 0, returning each setting with the degree of its step.
    pub fn s2_chain(&self) -> Result<Vec<(LambdaSetting, u32)>, LambdaError> {
        let mut cur = self.clone();
        let mut out = Vec::new();
        while cur.codim() > 0 {
            let d = cur.deg()?;
            cur = cur.s2()?.setting;
            out.push((cur.clone(), d));
        }
        Ok(out)
    }

    /// Drops zero entries at levels `j ≥ 1`; they only contribute trivial factors.
    pub fn strip_inert_zeros(&self) -> LambdaSetting {
        let mut levels = self.levels.clone();
        for l in levels.iter_mut().skip(1) {
            l.retain(|&x| x != 0);
        }
        LambdaSetting { n_ambient: self.n_ambient, degrees: self.degrees.clone(), levels }
    }

    fn non_simple_position(&self) -> Result<(usize, usize), LambdaError> {
        if self.is_simple() {
            return Err(LambdaError::AlreadySimple);
        }
        if let Some(j) = (1..self.levels.len()).find(|&j| self.levels[j].contains(&0)) {
            return Err(LambdaError::ZeroEntry(j));
        }
        let j0 = (1..self.levels.len()).rev().find(|&j| self.levels[j].iter().any(|&x| (x as usize) < j)).expect("not simple");
        let i0 = self.levels[j0].iter().position(|&x| (x as usize) < j0).expect("entry below level");
        Ok((j0, i0))
    }

    fn shift_entry(&self, drop: u32) -> Result<(LambdaSetting, u32), LambdaError> {
        let (j0, i0) = self.non_simple_position()?;
        let mut levels = self.levels.clone();
        let x = levels[j0].remove(i0);
        levels[j0 - 1].push(x - drop);
        Ok((LambdaSetting { n_ambient: self.n_ambient, degrees: self.degrees.clone(), levels }, self.degrees[j0 - 1]))
    }

    /// Moves the first entry below its level index, at the highest such level, down one level.
    pub fn c1(&self) -> Result<(LambdaSetting, u32), LambdaError> {
        self.shift_entry(0)
    }

    pub fn c2(&self) -> Result<(LambdaSetting, u32), LambdaError> {
        self.shift_entry(1)
    }

    /// Iterates `c1` (after dropping inert zeros) until the setting is simple.
    pub fn simplify(&self) -> Result<LambdaSetting, LambdaError> {
        let mut cur = self.strip_inert_zeros();
        while !cur.is_simple() {
            cur = cur.c1()?.0;
        }
        Ok(cur)
    }

    /// Level-wise concatenation of two settings on the same flag.
    pub fn union(&self, other: &LambdaSetting) -> Result<LambdaSetting, LambdaError> {
        if self.n_ambient != other.n_ambient || self.degrees != other.degrees {
            return Err(LambdaError::FlagMismatch);
        }
        let levels = self.levels.iter().zip(&other.levels).map(|(a, b)| a.iter().chain(b).copied().collect()).collect();
        Ok(LambdaSetting { n_ambient: self.n_ambient, degrees: self.degrees.clone(), levels })
    }

    /// Same setting with every level sorted, for comparisons that ignore factor order.
    pub fn sorted(&self) -> LambdaSetting {
        let mut s = self.clone();
        for l in s.levels.iter_mut() {
            l.sort_unstable();
        }
        s
    }

    pub fn parse(text: &str) -> Result<LambdaSetting, LambdaError> {
        let body = text.trim().trim_start_matches('(').trim_end_matches(')');
        let mut n_ambient = None;
        let mut degrees: Vec<u32> = Vec::new();
        let mut levels: Vec<(usize, Vec<u32>)> = Vec::new();
        let nums = |s: &str| -> Result<Vec<u32>, LambdaError> {
            s.split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(|x| x.parse::<u32>().map_err(|_| LambdaError::Malformed(format!("bad entry '{x}'"))))
                .collect()
        };
        for part in body.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (key, val) = part.split_once('=').ok_or_else(|| LambdaError::Malformed(format!("missing '=' in '{part}'")))?;
            let key = key.trim();
            if key == "N" {
                n_ambient = Some(val.trim().parse::<usize>().map_err(|_| LambdaError::Malformed(format!("bad N '{val}'")))?);
            } else if key == "e" {
                degrees = nums(val)?;
            } else if let Some(j) = key.strip_prefix('L') {
                let j: usize = j.parse().map_err(|_| LambdaError::Malformed(format!("bad level '{key}'")))?;
                levels.push((j, nums(val)?));
            } else {
                return Err(LambdaError::Malformed(format!("unknown key '{key}'")));
            }
        }
        let n_ambient = n_ambient.ok_or_else(|| LambdaError::Malformed("missing N".into()))?;
        let mut out = vec![Vec::new(); degrees.len() + 1];
        let mut seen = vec![false; degrees.len() + 1];
        for (j, l) in levels {
            if j > degrees.len() || seen[j] {
                return Err(LambdaError::Malformed(format!("level L{j} is repeated or beyond the codimension")));
            }
            seen[j] = true;
            out[j] = l;
        }
        LambdaSetting::new(n_ambient, degrees, out)
    }
}

impl fmt::Display for LambdaSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "(N={}; e={}", self.n_ambient, join(&self.degrees))?;
        for (j, l) in self.levels.iter().enumerate() {
            write!(f, "; L{}={}", j, join(l))?;
        }
        write!(f, ")")
    }
}

/// A cotangent setting `Σ` and a tilde-cotangent setting `Σ̃` on the same flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaPair {
    pub omega: LambdaSetting,
    pub tilde: LambdaSetting,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSuccessor {
    pub pair: LambdaPair,
    pub kind: SequenceKind,
}

impl LambdaPair {
    pub fn new(omega: LambdaSetting, tilde: LambdaSetting) -> Result<Self, LambdaError> {
        if omega.n_ambient != tilde.n_ambient || omega.degrees != tilde.degrees {
            return Err(LambdaError::FlagMismatch);
        }
        Ok(LambdaPair { omega, tilde })
    }

    pub fn codim(&self) -> usize {
        self.omega.codim()
    }

    pub fn q(&self) -> i64 {
        self.omega.dim() - (self.omega.n_sigma() + self.tilde.n_sigma()) as i64
    }

    pub fn i_index(&self) -> u64 {
        self.codim() as u64 + self.omega.w() + self.tilde.w()
    }

    pub fn total(&self) -> u64 {
        self.omega.total() + self.tilde.total()
    }

    /// `|Σ| + |Σ̃| - nz(Σ)`; only the cotangent part's nonzero count is subtracted.
    pub fn t(&self) -> i64 {
        self.total() as i64 - self.omega.nz() as i64
    }

    pub fn invariants(&self) -> Invariants {
        Invariants {
            q: self.q(),
            i: self.i_index(),
            t: self.t(),
            total: self.total(),
            nz: self.omega.nz(),
            w: self.omega.w() + self.tilde.w(),
            n: self.omega.n_sigma() + self.tilde.n_sigma(),
        }
    }

    pub fn is_simple(&self) -> bool {
        self.omega.is_simple() && self.tilde.is_simple()
    }

    fn first_nonzero_level(&self) -> Option<usize> {
        (1..=self.codim()).find(|&j| !self.omega.level_is_zero(j) || !self.tilde.level_is_zero(j))
    }

    pub fn deg(&self) -> Result<u32, LambdaError> {
        let p = self.codim();
        if p == 0 {
            return Err(LambdaError::ZeroCodimension);
        }
        Ok(match self.first_nonzero_level() {
            Some(j0) => self.omega.degrees[j0 - 1],
            None => self.omega.degrees[p - 1],
        })
    }

    fn successor(&self, drop: u32) -> Result<PairSuccessor, LambdaError> {
        if self.codim() == 0 {
            return Err(LambdaError::ZeroCodimension);
        }
        Ok(match self.first_nonzero_level() {
            None => PairSuccessor {
                pair: LambdaPair { omega: self.omega.restrict_down(), tilde: self.tilde.restrict_down() },
                kind: SequenceKind::Restriction,
            },
            Some(j0) if !self.tilde.level_is_zero(j0) => PairSuccessor {
                pair: LambdaPair { omega: self.omega.clone(), tilde: self.tilde.move_down(drop) },
                kind: SequenceKind::TildeConormal,
            },
            Some(_) => PairSuccessor {
                pair: LambdaPair { omega: self.omega.move_down(drop), tilde: self.tilde.clone() },
                kind: SequenceKind::Conormal,
            },
        })
    }

    pub fn s1(&self) -> Result<PairSuccessor, LambdaError> {
        self.successor(0)
    }

    pub fn s2(&self) -> Result<PairSuccessor, LambdaError> {
        self.successor(1)
    }

    fn euler_step(&self, drop: u32) -> Result<PairSuccessor, LambdaError> {
        if !self.is_simple() {
            return Err(LambdaError::NotSimple);
        }
        let j0 = (0..self.omega.levels.len()).find(|&j| !self.omega.level_is_zero(j)).ok_or(LambdaError::NoNonzeroEntry)?;
        let lvl = &self.omega.levels[j0];
        let i0 = lvl.iter().position(|&x| x != 0).expect("nonzero level");
        let mut omega = self.omega.clone();
        omega.levels[j0] = lvl[i0 + 1..].to_vec();
        let mut tilde = self.tilde.clone();
        tilde.levels[j0].push(lvl[i0] - drop);
        Ok(PairSuccessor { pair: LambdaPair { omega, tilde }, kind: SequenceKind::Euler })
    }

    /// Moves the first nonzero cotangent factor to the tilde side (Euler sequence).
    pub fn h1(&self) -> Result<PairSuccessor, LambdaError> {
        self.euler_step(0)
    }

    pub fn h2(&self) -> Result<PairSuccessor, LambdaError> {
        self.euler_step(1)
    }

    /// Level-wise union of both parts.
    pub fn union(&self) -> LambdaSetting {
        self.omega.union(&self.tilde).expect("same flag by construction")
    }

    /// Twist offset of the limit space: the `b` of the union of both parts.
    pub fn b(&self) -> Result<u64, LambdaError> {
        self.union().b()
    }

    /// Sufficient condition for `H^j` of the pair twisted by `a` to vanish.
    pub fn vanishing_predicate(&self, j: i64, a: i64) -> bool {
        j < self.q() && a < self.t()
    }
}

/// Seeded random setting with codimension at most 4 and entries at most 6; `simple` forces
/// every entry at level `j ≥ 1` to be at least `j`.
pub fn random_setting<R: rand::Rng>(rng: &mut R, simple: bool) -> LambdaSetting {
    let n = rng.gen_range(1..=7);
    let p = rng.gen_range(0..=n.min(4));
    let degrees: Vec<u32> = (0..p).map(|_| rng.gen_range(1..=6)).collect();
    let levels = (0..=p)
        .map(|j| {
            let m = rng.gen_range(0..=3);
            (0..m)
                .map(|_| {
                    if simple {
                        rng.gen_range(j as u32..=6)
                    } else if rng.gen_bool(0.2) {
                        0
                    } else {
                        rng.gen_range(0..=6)
                    }
                })
                .collect()
        })
        .collect();
    LambdaSetting::new(n, degrees, levels).expect("generated settings are well formed")
}

/// Seeded random pair on the flag of a random setting.
pub fn random_pair<R: rand::Rng>(rng: &mut R, simple: bool) -> LambdaPair {
    let omega = random_setting(rng, simple);
    let levels = (0..=omega.codim())
        .map(|j| {
            let m = rng.gen_range(0..=2);
            (0..m).map(|_| if simple { rng.gen_range(j as u32..=6) } else { rng.gen_range(0..=6) }).collect()
        })
        .collect();
    let tilde = LambdaSetting::new(omega.n_ambient(), omega.degrees().to_vec(), levels).expect("same flag");
    LambdaPair::new(omega, tilde).expect("same flag")
}

/// One failed property: which statement, on which input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyViolation {
    pub statement: String,
    pub subject: String,
    /// Whether every level above 0 is a zero level, where both successors drop the last equation.
    pub all_zero_branch: bool,
}

/// Outcome of the successor property checks over a batch of seeded inputs.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PropertyReport {
    pub samples: usize,
    pub seed: u64,
    pub checks: usize,
    pub violations: Vec<PropertyViolation>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn record(&mut self, ok: bool, statement: &str, subject: &dyn fmt::Display, all_zero_branch: bool) {
        self.checks += 1;
        if !ok {
            self.violations.push(PropertyViolation { statement: statement.into(), subject: subject.to_string(), all_zero_branch });
        }
    }
}

fn all_zero_above_ambient(s: &LambdaSetting) -> bool {
    s.levels.iter().skip(1).all(|l| !nonzero(l))
}

/// The six successor statements for a setting, literally: `q(s1) ≥ q`, `q(s2) = q + 1`,
/// `i(s1) < i`, `i(s2) < i`, `|s1| = |Σ|`, `|s2| = |Σ| - 1`.
pub fn check_setting_successors(s: &LambdaSetting, report: &mut PropertyReport) {
    let (Ok(a), Ok(b)) = (s.s1(), s.s2()) else { return };
    let (a, b) = (a.setting, b.setting);
    let z = all_zero_above_ambient(s);
    report.record(a.q() >= s.q(), "1: q(s1) >= q", s, z);
    report.record(b.q() == s.q() + 1, "2: q(s2) = q + 1", s, z);
    report.record(a.i_index() < s.i_index(), "3: i(s1) < i", s, z);
    report.record(b.i_index() < s.i_index(), "4: i(s2) < i", s, z);
    report.record(a.total() == s.total(), "5: |s1| = |S|", s, z);
    report.record(b.total() + 1 == s.total(), "6: |s2| = |S| - 1", s, z);
}

/// The six successor statements for a pair: the same `q` and `i` statements, `t(s1) = t` and `t(s2) ≥ t - 1`.
pub fn check_pair_successors(pair: &LambdaPair, report: &mut PropertyReport) {
    let (Ok(a), Ok(b)) = (pair.s1(), pair.s2()) else { return };
    let (a, b) = (a.pair, b.pair);
    let z = all_zero_above_ambient(&pair.omega) && all_zero_above_ambient(&pair.tilde);
    let name = format!("{} | {}", pair.omega, pair.tilde);
    report.record(a.q() >= pair.q(), "1: q(s1) >= q (pair)", &name, z);
    report.record(b.q() == pair.q() + 1, "2: q(s2) = q + 1 (pair)", &name, z);
    report.record(a.i_index() < pair.i_index(), "3: i(s1) < i (pair)", &name, z);
    report.record(b.i_index() < pair.i_index(), "4: i(s2) < i (pair)", &name, z);
    report.record(a.t() == pair.t(), "5: t(s1) = t (pair)", &name, z);
    report.record(b.t() >= pair.t() - 1, "6: t(s2) >= t - 1 (pair)", &name, z);
}

/// For a simple setting: `q(s1) = q(s2) = q + 1`, and `N - q` applications of `s2` reach the
/// limit setting with degrees summing to `b_Σ`.
pub fn check_simple_setting(s: &LambdaSetting, report: &mut PropertyReport) {
    if !s.is_simple() {
        return;
    }
    let z = all_zero_above_ambient(s);
    if let (Ok(a), Ok(b)) = (s.s1(), s.s2()) {
        report.record(a.setting.q() == s.q() + 1 && b.setting.q() == s.q() + 1, "q(s1) = q(s2) = q + 1 for simple settings", s, z);
    }
    let (Ok(chain), Ok(limit), Ok(b)) = (s.s2_chain(), s.limit(), s.b()) else {
        report.record(false, "limit and chain defined for simple settings", s, z);
        return;
    };
    let last = chain.last().map(|c| c.0.clone()).unwrap_or_else(|| s.clone());
    report.record(chain.len() as i64 == s.n_ambient() as i64 - s.q() && last.sorted() == limit.sorted(), "s2^(N-q) = limit", s, z);
    report.record(chain.iter().map(|c| c.1 as u64).sum::<u64>() == b, "degrees along the chain sum to b", s, z);
}

/// Runs every successor property on `samples` settings and `samples` pairs, alternating
/// simple and arbitrary inputs.
pub fn successor_property_suite(samples: usize, seed: u64) -> PropertyReport {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut report = PropertyReport { samples, seed, ..Default::default() };
    for k in 0..samples {
        let s = random_setting(&mut rng, k % 2 == 0);
        check_setting_successors(&s, &mut report);
        check_simple_setting(&s, &mut report);
        let pair = random_pair(&mut rng, k % 2 == 1);
        check_pair_successors(&pair, &mut report);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setting(text: &str) -> LambdaSetting {
        LambdaSetting::parse(text).unwrap()
    }

    #[test]
    fn invariants_of_a_surface_setting() {
        let s = setting("(N=4; e=5,5; L0=; L1=; L2=2)");
        let inv = s.invariants();
        assert_eq!((inv.q, inv.n, inv.i, inv.total, inv.t), (0, 2, 4, 2, 1));
    }

    #[test]
    fn top_level_setting_has_expected_q() {
        let s = LambdaSetting::top_level(7, vec![3, 3], vec![2, 2, 3]).unwrap();
        assert_eq!(s.q(), 5 - 3 * 2);
    }

    #[test]
    fn projective_space_setting() {
        let s = setting("(N=3; e=; L0=2,0,5)");
        assert_eq!((s.q(), s.i_index(), s.b().unwrap()), (3, 0, 0));
    }

    #[test]
    fn empty_and_zero_tuples_differ() {
        let a = setting("(N=2; e=4; L0=; L1=)");
        let b = setting("(N=2; e=4; L0=0; L1=)");
        assert_ne!(a, b);
        assert_eq!(a.m(0), 0);
        assert_eq!(b.m(0), 1);
        assert_eq!(b.nz(), 0);
        assert_eq!(b.to_string(), "(N=2; e=4; L0=0; L1=)");
    }

    #[test]
    fn degree_of_pair_with_only_tilde_part() {
        let omega = setting("(N=5; e=2,3,4; L0=; L1=0; L2=; L3=)");
        let tilde = setting("(N=5; e=2,3,4; L0=; L1=; L2=4; L3=)");
        assert_eq!(LambdaPair::new(omega, tilde).unwrap().deg().unwrap(), 3);
        let bare = setting("(N=5; e=2,3,4; L0=1; L1=; L2=; L3=)");
        assert_eq!(bare.deg().unwrap(), 4);
        assert_eq!(setting("(N=3; e=; L0=1)").deg(), Err(LambdaError::ZeroCodimension));
    }

    #[test]
    fn s2_splits_off_a_trivial_factor() {
        let s = setting("(N=2; e=4; L0=; L1=1)");
        let next = s.s2().unwrap();
        assert_eq!(next.setting, setting("(N=2; e=4; L0=0; L1=)"));
        assert_eq!(next.kind, SequenceKind::Conormal);
        assert_eq!((s.q(), next.setting.q()), (0, 1));
        let down = next.setting.s2().unwrap();
        assert_eq!(down.kind, SequenceKind::Restriction);
        assert_eq!(down.setting, setting("(N=2; e=; L0=0)"));
    }

    #[test]
    fn plane_curve_limit() {
        let s = setting("(N=2; e=7; L0=; L1=1)");
        assert_eq!(s.limit().unwrap(), setting("(N=2; e=; L0=0)"));
        assert_eq!(s.b().unwrap(), 14);
    }

    #[test]
    fn surface_limit_and_offset() {
        let s = setting("(N=4; e=6,6; L0=; L1=; L2=2)");
        assert_eq!(s.limit().unwrap(), setting("(N=4; e=; L0=0)"));
        assert_eq!(s.b().unwrap(), 24);
    }

    #[test]
    fn top_level_offset() {
        let s = LambdaSetting::top_level(8, vec![2, 3, 5], vec![3, 4]).unwrap();
        assert_eq!(s.b().unwrap(), 3 * 10);
    }

    #[test]
    fn euler_steps_on_a_small_pair() {
        let pair = LambdaPair::new(setting("(N=3; e=; L0=2)"), setting("(N=3; e=; L0=)")).unwrap();
        let h1 = pair.h1().unwrap().pair;
        assert_eq!(h1.omega, setting("(N=3; e=; L0=)"));
        assert_eq!(h1.tilde, setting("(N=3; e=; L0=2)"));
        let h2 = pair.h2().unwrap().pair;
        assert_eq!(h2.tilde, setting("(N=3; e=; L0=1)"));
    }

    #[test]
    fn c1_moves_a_small_entry_down() {
        let s = setting("(N=3; e=2,3; L0=; L1=; L2=1)");
        let (c1, d) = s.c1().unwrap();
        assert_eq!(c1, setting("(N=3; e=2,3; L0=; L1=1; L2=)"));
        assert_eq!(d, 3);
        assert!(c1.is_simple());
        assert_eq!(c1.q(), s.q());
        let surf = setting("(N=4; e=5,5; L0=; L1=; L2=1)");
        let simple = surf.simplify().unwrap();
        assert_eq!((simple.q(), simple.is_simple()), (1, true));
        assert_eq!(setting("(N=3; e=2,3; L0=; L1=1; L2=)").c1(), Err(LambdaError::AlreadySimple));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(LambdaSetting::parse("(N=2; e=4; L0=; L1=x)").is_err());
        assert!(LambdaSetting::parse("(N=2; e=4; L0=; L5=1)").is_err());
        assert!(LambdaSetting::parse("(e=4; L0=; L1=1)").is_err());
    }

    fn check_successors(s: &LambdaSetting) {
        if s.codim() == 0 {
            assert!(s.s1().is_err());
            return;
        }
        let a = s.s1().unwrap().setting;
        let b = s.s2().unwrap().setting;
        assert!(a.q() >= s.q());
        assert_eq!(b.q(), s.q() + 1);
        assert!(a.i_index() < s.i_index());
        assert!(b.i_index() < s.i_index());
        assert_eq!(a.total(), s.total());
        assert_eq!(a.t(), s.t());
        let first_entry_nonzero = s.levels().iter().skip(1).any(|l| l.iter().any(|&x| x != 0));
        if first_entry_nonzero {
            assert_eq!(b.total() + 1, s.total());
        } else {
            assert_eq!(b.total(), s.total());
        }
        assert!(b.t() >= s.t() - 1);
        if s.is_simple() {
            assert_eq!(a.q(), s.q() + 1);
            assert!(b.is_simple(), "s2 left the simple settings: {s} -> {b}");
            assert_eq!(s.b().unwrap(), b.b().unwrap() + s.deg().unwrap() as u64);
        }
    }

    #[test]
    fn successor_properties_on_seeded_settings() {
        let mut rng = ChaCha8Rng::seed_from_u64(500);
        for k in 0..500 {
            let s = random_setting(&mut rng, k % 2 == 0);
            check_successors(&s);
        }
    }

    #[test]
    fn suite_flags_only_the_all_zero_branch() {
        let report = successor_property_suite(500, 9);
        assert!(report.checks > 5000);
        for v in &report.violations {
            assert!(v.all_zero_branch && v.statement.starts_with("6: |s2|"), "{v:?}");
        }
        let drop = setting("(N=3; e=2,2; L0=1; L1=; L2=0)");
        let mut single = PropertyReport::default();
        check_setting_successors(&drop, &mut single);
        assert_eq!(single.violations.len(), 1);
        assert_eq!(drop.s2().unwrap().setting.total(), drop.total());
    }

    #[test]
    fn s2_chain_reaches_the_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..300 {
            let s = random_setting(&mut rng, true);
            let chain = s.s2_chain().unwrap();
            let steps = chain.len() as i64;
            assert_eq!(steps, s.n_ambient() as i64 - s.q());
            let last = chain.last().map(|c| c.0.clone()).unwrap_or_else(|| s.clone());
            assert_eq!(last.sorted(), s.limit().unwrap().sorted());
            let degree_sum: u64 = chain.iter().map(|c| c.1 as u64).sum();
            assert_eq!(degree_sum, s.b().unwrap());
        }
    }

    #[test]
    fn pair_successor_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(501);
        for k in 0..500 {
            let pair = random_pair(&mut rng, k % 2 == 0);
            if pair.codim() == 0 {
                continue;
            }
            let a = pair.s1().unwrap().pair;
            let b = pair.s2().unwrap().pair;
            assert!(a.q() >= pair.q());
            assert_eq!(b.q(), pair.q() + 1);
            assert!(a.i_index() < pair.i_index());
            assert!(b.i_index() < pair.i_index());
            assert_eq!(a.t(), pair.t());
            assert!(b.t() >= pair.t() - 1);
            if pair.is_simple() {
                assert_eq!(a.q(), pair.q() + 1);
            }
        }
    }

    #[test]
    fn euler_step_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(502);
        let mut checked = 0;
        for _ in 0..500 {
            let pair = random_pair(&mut rng, true);
            if pair.omega.nz() == 0 {
                assert_eq!(pair.h1().unwrap_err(), LambdaError::NoNonzeroEntry);
                continue;
            }
            let h1 = pair.h1().unwrap().pair;
            let h2 = pair.h2().unwrap().pair;
            assert_eq!(h1.q(), pair.q());
            assert!(h2.q() >= pair.q());
            assert!(h1.is_simple());
            assert_eq!(h1.total(), pair.total());
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn c1_iteration_preserves_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(503);
        for _ in 0..500 {
            let s = random_setting(&mut rng, false).strip_inert_zeros();
            if s.is_simple() {
                continue;
            }
            let simple = s.simplify().unwrap();
            assert!(simple.is_simple());
            assert_eq!(simple.q(), s.q());
            assert_eq!(simple.total(), s.total());
            let (c2, _) = s.c2().unwrap();
            assert_eq!(c2.total() + 1, s.total());
        }
    }

    proptest! {
        #[test]
        fn text_form_roundtrips(seed in any::<u64>(), simple in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_setting(&mut rng, simple);
            prop_assert_eq!(LambdaSetting::parse(&s.to_string()).unwrap(), s);
        }

        #[test]
        fn vanishing_predicate_matches_invariants(seed in any::<u64>(), j in -3i64..8, a in -5i64..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pair = random_pair(&mut rng, false);
            prop_assert_eq!(pair.vanishing_predicate(j, a), j < pair.q() && a < pair.t());
        }
    }
}
