//! Sparse multivariate polynomials, homogeneous polynomials, and the Fermat-type
//! equation systems used throughout the crate.
//!
//! Terms are kept in a `BTreeMap` keyed by [`MultiIndex`], whose `Ord` is graded
//! reverse lexicographic with `Z0 > Z1 > …`. Text output lists terms from the
//! largest monomial down, e.g. `3/2*Z0^2*Z1 - Z1^3`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

use crate::exactalg::determinant;
use crate::field::{parse_scalar, pow, Field};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolyError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("inhomogeneous polynomial: found terms of degree {first} and {second}")]
    Inhomogeneous { first: u32, second: u32 },
    #[error("variable count mismatch: {0} vs {1}")]
    VarCount(usize, usize),
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(u32, u32),
    #[error("variable index {index} out of range for {nvars} variables")]
    BadVariable { index: usize, nvars: usize },
    #[error("the {size}x{size} minor with rows {rows:?} and columns {cols:?} vanishes")]
    SingularMinor { size: usize, rows: Vec<usize>, cols: Vec<usize> },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Exponent vector, ordered graded reverse lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

pub fn grevlex_cmp(a: &[u32], b: &[u32]) -> Ordering {
    let da: u64 = a.iter().map(|&x| x as u64).sum();
    let db: u64 = b.iter().map(|&x| x as u64).sum();
    if da != db {
        return da.cmp(&db);
    }
    if a.len() != b.len() {
        return a.len().cmp(&b.len());
    }
    for i in (0..a.len()).rev() {
        if a[i] != b[i] {
            return b[i].cmp(&a[i]);
        }
    }
    Ordering::Equal
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        grevlex_cmp(&self.0, &other.0)
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MultiIndex {
    pub fn new(exps: Vec<u32>) -> Self {
        MultiIndex(exps)
    }

    pub fn zeros(nvars: usize) -> Self {
        MultiIndex(vec![0; nvars])
    }

    pub fn unit(nvars: usize, i: usize) -> Self {
        let mut v = vec![0; nvars];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn constant(nvars: usize, value: u32) -> Self {
        MultiIndex(vec![value; nvars])
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when non-negative in every entry.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        let mut out = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            out.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex(out))
    }

    pub fn divides(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn min_entry(&self) -> u32 {
        self.0.iter().copied().min().unwrap_or(0)
    }

    pub fn with(&self, i: usize, value: u32) -> MultiIndex {
        let mut v = self.0.clone();
        v[i] = value;
        MultiIndex(v)
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }
}

/// All exponent vectors of total degree `d` in `nvars` variables, largest first.
pub fn monomials_of_degree(nvars: usize, d: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; nvars];
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for v in (0..=left).rev() {
            cur[pos] = v;
            rec(pos + 1, left - v, cur, out);
        }
        cur[pos] = 0;
    }
    if nvars == 0 {
        if d == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return out;
    }
    rec(0, d, &mut cur, &mut out);
    out.sort_by(|a, b| b.cmp(a));
    out
}

/// Exponent vectors of degree `d` with every entry at least one, largest first.
pub fn positive_monomials_of_degree(nvars: usize, d: u32) -> Vec<MultiIndex> {
    if (d as usize) < nvars {
        return Vec::new();
    }
    let shift = MultiIndex::constant(nvars, 1);
    let mut v: Vec<MultiIndex> = monomials_of_degree(nvars, d - nvars as u32)
        .into_iter()
        .map(|m| m.add(&shift))
        .collect();
    v.sort_by(|a, b| b.cmp(a));
    v
}

/// Sparse polynomial in `nvars` variables with arbitrary (not necessarily homogeneous) terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly<F> {
    nvars: usize,
    terms: BTreeMap<MultiIndex, F>,
}

/// Polynomial on an affine chart.
pub type AffinePoly<F> = Poly<F>;

impl<F: Field> Poly<F> {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: F) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(MultiIndex::zeros(nvars), c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, F::one())
    }

    pub fn variable(nvars: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(nvars, i), F::one())
    }

    pub fn monomial(m: MultiIndex, c: F) -> Self {
        let mut p = Self::zero(m.nvars());
        p.add_term(m, c);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (MultiIndex, F)>) -> Self {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            assert_eq!(m.nvars(), nvars, "exponent vector length");
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: MultiIndex, c: F) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                let cur = std::mem::replace(v, F::zero());
                let s = cur + c;
                if s.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms from the largest monomial down.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &F)> {
        self.terms.iter().rev()
    }

    pub fn coeff(&self, m: &MultiIndex) -> F {
        self.terms.get(m).cloned().unwrap_or_else(F::zero)
    }

    pub fn leading_term(&self) -> Option<(&MultiIndex, &F)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(|m| m.degree());
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    pub fn scale(&self, s: &F) -> Self {
        if s.is_zero() {
            return Self::zero(self.nvars);
        }
        Poly { nvars: self.nvars, terms: self.terms.iter().map(|(m, c)| (m.clone(), c.mul_ref(s))).collect() }
    }

    pub fn neg(&self) -> Self {
        self.scale(&-F::one())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars, "variable count");
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars, "variable count");
        let mut out = Self::zero(self.nvars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.add(m2), c1.mul_ref(c2));
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &MultiIndex, c: &F) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.add(m), v.mul_ref(c))).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.nvars);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn partial_derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.get(i);
            if e > 0 {
                out.add_term(m.with(i, e - 1), c.mul_ref(&F::from_u64(e as u64)));
            }
        }
        out
    }

    pub fn eval(&self, point: &[F]) -> F {
        assert_eq!(point.len(), self.nvars, "point dimension");
        let mut acc = F::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(m.exps()) {
                if e > 0 {
                    t = t.mul_ref(&pow(x, e as u64));
                }
            }
            acc = acc + t;
        }
        acc
    }

    /// Replaces variable `i` by the polynomial `value` (same variable count).
    pub fn substitute(&self, i: usize, value: &Poly<F>) -> Self {
        let mut out = Self::zero(self.nvars);
        let mut powers: Vec<Poly<F>> = vec![Poly::one(self.nvars)];
        for (m, c) in &self.terms {
            let e = m.get(i) as usize;
            while powers.len() <= e {
                let next = powers.last().expect("nonempty").mul(value);
                powers.push(next);
            }
            let rest = m.with(i, 0);
            out = out.add(&powers[e].mul_monomial(&rest, c));
        }
        out
    }

    /// Renames variables: variable `i` becomes `map[i]` in a ring of `nvars` variables.
    pub fn rename(&self, nvars: usize, map: &[usize]) -> Self {
        let mut out = Self::zero(nvars);
        for (m, c) in &self.terms {
            let mut e = vec![0u32; nvars];
            for (i, &x) in m.exps().iter().enumerate() {
                e[map[i]] += x;
            }
            out.add_term(MultiIndex(e), c.clone());
        }
        out
    }

    /// Division by a single polynomial in grevlex order; the remainder vanishes iff `g` divides `self`.
    pub fn div_rem(&self, g: &Poly<F>) -> (Poly<F>, Poly<F>) {
        let (lm, lc) = match g.leading_term() {
            Some((m, c)) => (m.clone(), c.clone()),
            None => panic!("division by the zero polynomial"),
        };
        let lc_inv = lc.inv().expect("nonzero leading coefficient");
        let mut p = self.clone();
        let mut q = Self::zero(self.nvars);
        let mut r = Self::zero(self.nvars);
        while let Some((m, c)) = p.leading_term().map(|(m, c)| (m.clone(), c.clone())) {
            match m.checked_sub(&lm) {
                Some(shift) => {
                    let f = c.mul_ref(&lc_inv);
                    q.add_term(shift.clone(), f.clone());
                    p = p.sub(&g.mul_monomial(&shift, &f));
                }
                None => {
                    p.terms.remove(&m);
                    r.add_term(m, c);
                }
            }
        }
        (q, r)
    }

    pub fn is_multiple_of(&self, g: &Poly<F>) -> bool {
        self.div_rem(g).1.is_zero()
    }

    pub fn to_text_with(&self, name: &dyn Fn(usize) -> String) -> String {
        format_terms(self.terms(), name)
    }

    /// Text with variables `z1, z2, …`.
    pub fn to_text(&self) -> String {
        self.to_text_with(&|i| format!("z{}", i + 1))
    }
}

fn format_terms<'a, F: Field>(
    terms: impl Iterator<Item = (&'a MultiIndex, &'a F)>,
    name: &dyn Fn(usize) -> String,
) -> String {
    let mut out = String::new();
    for (k, (m, c)) in terms.enumerate() {
        let cs = c.to_string();
        let (neg, mag) = match cs.strip_prefix('-') {
            Some(rest) => (true, rest.to_string()),
            None => (false, cs),
        };
        if k == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mut factors: Vec<String> = Vec::new();
        for (i, &e) in m.exps().iter().enumerate() {
            match e {
                0 => {}
                1 => factors.push(name(i)),
                _ => factors.push(format!("{}^{}", name(i), e)),
            }
        }
        if factors.is_empty() {
            out.push_str(&mag);
        } else {
            if mag != "1" {
                out.push_str(&mag);
                out.push('*');
            }
            out.push_str(&factors.join("*"));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

impl<F: Field> fmt::Display for Poly<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Homogeneous polynomial in `Z0..Z{nvars-1}` of a fixed degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomogPoly<F> {
    degree: u32,
    poly: Poly<F>,
}

impl<F: Field> HomogPoly<F> {
    pub fn zero(nvars: usize, degree: u32) -> Self {
        HomogPoly { degree, poly: Poly::zero(nvars) }
    }

    pub fn from_poly(poly: Poly<F>, degree: u32) -> Result<Self, PolyError> {
        if let Some(m) = poly.terms.keys().find(|m| m.degree() != degree) {
            return Err(PolyError::Inhomogeneous { first: degree, second: m.degree() });
        }
        Ok(HomogPoly { degree, poly })
    }

    /// Infers the degree from the terms; the zero polynomial gets degree 0.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (MultiIndex, F)>) -> Result<Self, PolyError> {
        let poly = Poly::from_terms(nvars, terms);
        let degree = poly.terms.keys().next().map_or(0, |m| m.degree());
        Self::from_poly(poly, degree)
    }

    pub fn monomial(m: MultiIndex, c: F) -> Self {
        HomogPoly { degree: m.degree(), poly: Poly::monomial(m, c) }
    }

    pub fn variable(nvars: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(nvars, i), F::one())
    }

    pub fn constant(nvars: usize, c: F) -> Self {
        HomogPoly { degree: 0, poly: Poly::constant(nvars, c) }
    }

    pub fn nvars(&self) -> usize {
        self.poly.nvars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn as_poly(&self) -> &Poly<F> {
        &self.poly
    }

    pub fn into_poly(self) -> Poly<F> {
        self.poly
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    pub fn num_terms(&self) -> usize {
        self.poly.num_terms()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &F)> {
        self.poly.terms()
    }

    pub fn coeff(&self, m: &MultiIndex) -> F {
        self.poly.coeff(m)
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        if self.nvars() != other.nvars() {
            return Err(PolyError::VarCount(self.nvars(), other.nvars()));
        }
        if self.degree != other.degree {
            return Err(PolyError::DegreeMismatch(self.degree, other.degree));
        }
        Ok(HomogPoly { degree: self.degree, poly: self.poly.add(&other.poly) })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.add(&other.scale(&-F::one()))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        if self.nvars() != other.nvars() {
            return Err(PolyError::VarCount(self.nvars(), other.nvars()));
        }
        Ok(HomogPoly { degree: self.degree + other.degree, poly: self.poly.mul(&other.poly) })
    }

    pub fn scale(&self, s: &F) -> Self {
        HomogPoly { degree: self.degree, poly: self.poly.scale(s) }
    }

    /// `∂f/∂Z_i`, of degree one less (the zero polynomial of degree 0 for constants).
    pub fn partial_derivative(&self, i: usize) -> Self {
        HomogPoly { degree: self.degree.saturating_sub(1), poly: self.poly.partial_derivative(i) }
    }

    pub fn gradient(&self) -> Vec<HomogPoly<F>> {
        (0..self.nvars()).map(|i| self.partial_derivative(i)).collect()
    }

    /// Whether `Σ Z_i ∂f/∂Z_i = deg(f)·f` holds for the stored term table.
    pub fn euler_identity_check(&self) -> bool {
        let n = self.nvars();
        let mut lhs = Poly::zero(n);
        for i in 0..n {
            lhs = lhs.add(&self.poly.partial_derivative(i).mul(&Poly::variable(n, i)));
        }
        lhs == self.poly.scale(&F::from_u64(self.degree as u64))
    }

    /// Sets `Z_chart = 1` and renames the remaining variables in order.
    pub fn dehomogenize(&self, chart: usize) -> Result<Poly<F>, PolyError> {
        let n = self.nvars();
        if chart >= n {
            return Err(PolyError::BadVariable { index: chart, nvars: n });
        }
        let mut out = Poly::zero(n - 1);
        for (m, c) in self.poly.terms.iter() {
            let e: Vec<u32> = m.exps().iter().enumerate().filter(|(i, _)| *i != chart).map(|(_, &x)| x).collect();
            out.add_term(MultiIndex(e), c.clone());
        }
        Ok(out)
    }

    pub fn eval(&self, point: &[F]) -> F {
        self.poly.eval(point)
    }

    /// Seeded random polynomial with every monomial present and coefficients in `{-9..9}\{0}`.
    pub fn random<R: Rng>(nvars: usize, degree: u32, rng: &mut R) -> Self {
        let terms = monomials_of_degree(nvars, degree).into_iter().map(|m| (m, random_coefficient(rng))).collect::<Vec<_>>();
        HomogPoly { degree, poly: Poly::from_terms(nvars, terms) }
    }

    /// Seeded random polynomial with at most `nterms` monomials.
    pub fn random_sparse<R: Rng>(nvars: usize, degree: u32, nterms: usize, rng: &mut R) -> Self {
        let all = monomials_of_degree(nvars, degree);
        let mut poly = Poly::zero(nvars);
        for _ in 0..nterms {
            let m = all[rng.gen_range(0..all.len())].clone();
            poly.add_term(m, random_coefficient(rng));
        }
        HomogPoly { degree, poly }
    }

    pub fn to_text(&self) -> String {
        self.poly.to_text_with(&|i| format!("Z{i}"))
    }
}

impl<F: Field> fmt::Display for HomogPoly<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

pub fn random_coefficient<F: Field, R: Rng>(rng: &mut R) -> F {
    let mut v = 0;
    while v == 0 {
        v = rng.gen_range(-9i64..=9);
    }
    F::from_i64(v)
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor { chars: src.chars().collect(), pos: 0, _src: src }
    }

    fn line_col(&self, pos: usize) -> (usize, usize) {
        let mut line = 1;
        let mut col = 1;
        for &c in &self.chars[..pos.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        (line, col)
    }

    fn err(&self, pos: usize, message: impl Into<String>) -> PolyError {
        let (line, column) = self.line_col(pos);
        PolyError::Parse { line, column, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn number(&mut self) -> Option<String> {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos > start {
            Some(self.chars[start..self.pos].iter().collect())
        } else {
            None
        }
    }
}

/// Parses text such as `3/2*Z0^2*Z1 - Z1^3`. Variables are `{prefix}{k}`; the variable
/// index is `k - index_base`. With `nvars = None` the count is inferred.
pub fn parse_poly<F: Field>(text: &str, prefix: char, index_base: usize, nvars: Option<usize>) -> Result<Poly<F>, PolyError> {
    let mut cur = Cursor::new(text);
    let mut raw: Vec<(Vec<(usize, u32)>, F, usize)> = Vec::new();
    cur.skip_ws();
    if cur.peek().is_none() {
        return Err(cur.err(0, "empty polynomial"));
    }
    let mut first = true;
    loop {
        cur.skip_ws();
        let term_start = cur.pos;
        let mut negative = false;
        match cur.peek() {
            Some('+') if !first => cur.pos += 1,
            Some('-') => {
                negative = true;
                cur.pos += 1;
            }
            Some('+') => cur.pos += 1,
            Some(_) if first => {}
            Some(c) => return Err(cur.err(cur.pos, format!("expected '+' or '-', found '{c}'"))),
            None => break,
        }
        first = false;
        cur.skip_ws();
        let mut coeff = F::one();
        if let Some(c) = cur.peek() {
            if c.is_ascii_digit() {
                let num_pos = cur.pos;
                let n = cur.number().expect("digit present");
                let mut text = n;
                if cur.peek() == Some('/') {
                    cur.pos += 1;
                    match cur.number() {
                        Some(d) => text = format!("{text}/{d}"),
                        None => return Err(cur.err(cur.pos, "expected denominator after '/'")),
                    }
                }
                coeff = parse_scalar::<F>(&text).ok_or_else(|| cur.err(num_pos, format!("coefficient '{text}' is not defined in {}", F::field_name())))?;
                cur.skip_ws();
                if cur.peek() == Some('*') {
                    cur.pos += 1;
                    cur.skip_ws();
                } else {
                    // A bare coefficient is a constant term.
                    if negative {
                        coeff = -coeff;
                    }
                    raw.push((Vec::new(), coeff, term_start));
                    continue;
                }
            }
        }
        let mut factors = Vec::new();
        loop {
            cur.skip_ws();
            match cur.peek() {
                Some(c) if c == prefix => {
                    let var_pos = cur.pos;
                    cur.pos += 1;
                    let idx = cur.number().ok_or_else(|| cur.err(cur.pos, "expected variable index"))?;
                    let k: usize = idx.parse().map_err(|_| cur.err(var_pos, "variable index too large"))?;
                    if k < index_base {
                        return Err(cur.err(var_pos, format!("variable {prefix}{k} is below index base {index_base}")));
                    }
                    let mut e: u32 = 1;
                    if cur.peek() == Some('^') {
                        cur.pos += 1;
                        let es = cur.number().ok_or_else(|| cur.err(cur.pos, "expected exponent after '^'"))?;
                        e = es.parse().map_err(|_| cur.err(cur.pos, "exponent too large"))?;
                    }
                    factors.push((k - index_base, e));
                }
                Some(c) => return Err(cur.err(cur.pos, format!("expected variable '{prefix}', found '{c}'"))),
                None => return Err(cur.err(cur.pos, "unexpected end of input")),
            }
            cur.skip_ws();
            if cur.peek() == Some('*') {
                cur.pos += 1;
            } else {
                break;
            }
        }
        if negative {
            coeff = -coeff;
        }
        raw.push((factors, coeff, term_start));
    }
    let max_var = raw.iter().flat_map(|(f, _, _)| f.iter().map(|(i, _)| *i + 1)).max().unwrap_or(0);
    let n = nvars.unwrap_or(max_var.max(1));
    let mut poly = Poly::zero(n);
    for (factors, c, pos) in raw {
        let mut e = vec![0u32; n];
        for (i, x) in factors {
            if i >= n {
                return Err(cur.err(pos, format!("variable {prefix}{} exceeds the {n} declared variables", i + index_base)));
            }
            e[i] += x;
        }
        poly.add_term(MultiIndex(e), c);
    }
    Ok(poly)
}

/// Parses a homogeneous polynomial in `Z0, Z1, …`; inhomogeneous input names both degrees.
pub fn parse_homog<F: Field>(text: &str, nvars: Option<usize>) -> Result<HomogPoly<F>, PolyError> {
    let poly = parse_poly::<F>(text, 'Z', 0, nvars)?;
    let mut degs = poly.terms.keys().map(|m| m.degree());
    let first = degs.next().unwrap_or(0);
    if let Some(other) = degs.find(|&d| d != first) {
        return Err(PolyError::Inhomogeneous { first, second: other });
    }
    HomogPoly::from_poly(poly, first)
}

/// Parses one homogeneous polynomial per non-empty, non-comment (`#`) line.
pub fn parse_poly_file<F: Field>(text: &str, nvars: Option<usize>) -> Result<Vec<HomogPoly<F>>, PolyError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let p = parse_homog::<F>(body, nvars).map_err(|e| match e {
            PolyError::Parse { column, message, .. } => PolyError::Parse { line: lineno + 1, column, message },
            other => other,
        })?;
        out.push(p);
    }
    Ok(out)
}

/// Rows `(1, …, 1), (1, 2, …, N+1), (1, 4, …)`: a generalized Vandermonde matrix with
/// positive nodes, so every square minor is nonzero.
pub fn vandermonde_coefficients<F: Field>(n_ambient: usize, c: usize) -> Vec<Vec<F>> {
    (0..c)
        .map(|p| (0..=n_ambient).map(|j| pow(&F::from_u64(j as u64 + 1), p as u64)).collect())
        .collect()
}

/// First vanishing `p×p` minor of `a` with `p ≤ max_size`, if any.
pub fn first_singular_minor<F: Field>(a: &[Vec<F>], max_size: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    let nrows = a.len();
    let ncols = a.first().map_or(0, |r| r.len());
    for size in 1..=max_size.min(nrows).min(ncols) {
        for rows in subsets(nrows, size) {
            for cols in subsets(ncols, size) {
                let sub: Vec<Vec<F>> = rows.iter().map(|&r| cols.iter().map(|&c| a[r][c].clone()).collect()).collect();
                if determinant(&sub).is_zero() {
                    return Some((rows.clone(), cols));
                }
            }
        }
    }
    None
}

/// All increasing `k`-subsets of `0..n`, lexicographically.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// `F_p = Σ_j a_{pj} Z_j^{d_p}` for each row `p` of `a`, with `d_p = degrees[p]`.
pub fn fermat_system_with_degrees<F: Field>(n_ambient: usize, degrees: &[u32], a: &[Vec<F>]) -> Result<Vec<HomogPoly<F>>, PolyError> {
    let nvars = n_ambient + 1;
    if a.len() != degrees.len() {
        return Err(PolyError::Invalid(format!("{} coefficient rows for {} equations", a.len(), degrees.len())));
    }
    if let Some(r) = a.iter().find(|r| r.len() != nvars) {
        return Err(PolyError::Invalid(format!("coefficient row of length {} in {} variables", r.len(), nvars)));
    }
    if let Some((rows, cols)) = first_singular_minor(a, degrees.len()) {
        return Err(PolyError::SingularMinor { size: rows.len(), rows, cols });
    }
    Ok(degrees
        .iter()
        .zip(a)
        .map(|(&d, row)| {
            let poly = Poly::from_terms(nvars, (0..nvars).map(|j| (MultiIndex::unit(nvars, j).scale_exps(d), row[j].clone())));
            HomogPoly { degree: d, poly }
        })
        .collect())
}

/// `c` Fermat-type equations of degree `e` in `P^N` with coefficient matrix `a` (c×(N+1)).
pub fn fermat_generic_system<F: Field>(n_ambient: usize, c: usize, e: u32, a: &[Vec<F>]) -> Result<Vec<HomogPoly<F>>, PolyError> {
    if a.len() != c {
        return Err(PolyError::Invalid(format!("expected {c} coefficient rows, got {}", a.len())));
    }
    fermat_system_with_degrees(n_ambient, &vec![e; c], a)
}

impl MultiIndex {
    fn scale_exps(&self, k: u32) -> MultiIndex {
        MultiIndex(self.0.iter().map(|x| x * k).collect())
    }
}

/// The pair `F_α = ΣZ_i^e + α₁Z0^{e₁}Z1^{e₂} + α₂Z2^{e₁}Z3^{e₂}` and
/// `G_β = Σa_iZ_i^e + β₁Z0^{e₁}Z1^{e₂} + β₂Z2^{e₁}Z3^{e₂}` in `P^4`, with `e₁ = ⌊e/2⌋`, `e₂ = ⌈e/2⌉`.
pub fn deformed_fermat_pair<F: Field>(e: u32, alpha: [F; 2], beta: [F; 2], a: &[F; 5]) -> Result<(HomogPoly<F>, HomogPoly<F>), PolyError> {
    if e < 5 {
        return Err(PolyError::Invalid(format!("degree {e} is below 5")));
    }
    for i in 0..5 {
        for j in i + 1..5 {
            if a[i] == a[j] {
                return Err(PolyError::Invalid(format!("coefficients a{i} and a{j} coincide")));
            }
        }
    }
    let (e1, e2) = (e / 2, e - e / 2);
    let mixed = |x: usize, y: usize| {
        let mut v = vec![0u32; 5];
        v[x] = e1;
        v[y] = e2;
        MultiIndex(v)
    };
    let pure = |i: usize| MultiIndex::unit(5, i).scale_exps(e);
    let mut f = Poly::zero(5);
    let mut g = Poly::zero(5);
    for (i, ai) in a.iter().enumerate() {
        f.add_term(pure(i), F::one());
        g.add_term(pure(i), ai.clone());
    }
    let [a1, a2] = alpha;
    let [b1, b2] = beta;
    f.add_term(mixed(0, 1), a1);
    f.add_term(mixed(2, 3), a2);
    g.add_term(mixed(0, 1), b1);
    g.add_term(mixed(2, 3), b2);
    Ok((HomogPoly { degree: e, poly: f }, HomogPoly { degree: e, poly: g }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Fp;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Q = BigRational;

    fn q(v: i64) -> Q {
        Q::from_i64(v)
    }

    #[test]
    fn grevlex_orders_variables_and_degrees() {
        let m = |v: &[u32]| MultiIndex::new(v.to_vec());
        assert!(m(&[1, 0, 0]) > m(&[0, 1, 0]));
        assert!(m(&[0, 1, 0]) > m(&[0, 0, 1]));
        // Z0*Z2 < Z1^2 in grevlex
        assert!(m(&[1, 0, 1]) < m(&[0, 2, 0]));
        assert!(m(&[0, 0, 2]) > m(&[1, 0, 0]));
        let mons = monomials_of_degree(3, 2);
        assert_eq!(mons.len(), 6);
        assert_eq!(mons[0], m(&[2, 0, 0]));
        assert_eq!(mons[5], m(&[0, 0, 2]));
    }

    #[test]
    fn positive_monomial_count() {
        assert_eq!(positive_monomials_of_degree(3, 6).len(), 10);
        assert_eq!(positive_monomials_of_degree(5, 20).len(), 3876);
        assert!(positive_monomials_of_degree(3, 2).is_empty());
    }

    #[test]
    fn derivative_of_square() {
        let f: HomogPoly<Q> = parse_homog("Z0^2", Some(3)).unwrap();
        let d = f.partial_derivative(0);
        assert_eq!(d.degree(), 1);
        assert_eq!(d.to_text(), "2*Z0");
        let k: HomogPoly<Q> = HomogPoly::constant(3, q(5));
        let dk = k.partial_derivative(1);
        assert!(dk.is_zero() && dk.degree() == 0);
    }

    #[test]
    fn dehomogenize_renames_in_order() {
        let f: HomogPoly<Q> = parse_homog("Z0^3 + Z1^3 + Z2^3", None).unwrap();
        assert_eq!(f.dehomogenize(0).unwrap().to_text(), "z1^3 + z2^3 + 1");
        assert_eq!(f.dehomogenize(1).unwrap().to_text(), "z1^3 + z2^3 + 1");
    }

    #[test]
    fn text_roundtrip() {
        let f: HomogPoly<Q> = parse_homog("3/2*Z0^2*Z1 - Z1^3 + 7*Z0*Z1*Z2", None).unwrap();
        let text = f.to_text();
        let g: HomogPoly<Q> = parse_homog(&text, Some(3)).unwrap();
        assert_eq!(f, g);
        assert_eq!(text, "3/2*Z0^2*Z1 - Z1^3 + 7*Z0*Z1*Z2");
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_homog::<Q>("Z0^2 +\n  Z1^2 + Y", None).unwrap_err();
        assert_eq!(err, PolyError::Parse { line: 2, column: 10, message: "expected variable 'Z', found 'Y'".into() });
        let err = parse_homog::<Q>("Z0^2 + Z1^3", None).unwrap_err();
        assert_eq!(err, PolyError::Inhomogeneous { first: 2, second: 3 });
        let err = parse_poly_file::<Q>("Z0 + Z1\nZ0 + Z1 +", None).unwrap_err();
        assert!(matches!(err, PolyError::Parse { line: 2, .. }));
    }

    #[test]
    fn fermat_system_rejects_vanishing_minor() {
        let a = vec![vec![q(1), q(1), q(1)], vec![q(1), q(1), q(2)]];
        let err = fermat_generic_system(2, 2, 3, &a).unwrap_err();
        assert_eq!(err, PolyError::SingularMinor { size: 2, rows: vec![0, 1], cols: vec![0, 1] });
        let good = vandermonde_coefficients::<Q>(4, 2);
        let sys = fermat_generic_system(4, 2, 5, &good).unwrap();
        assert_eq!(sys[1].to_text(), "Z0^5 + 2*Z1^5 + 3*Z2^5 + 4*Z3^5 + 5*Z4^5");
    }

    #[test]
    fn deformed_pair_shape() {
        let a = [q(0), q(1), q(2), q(3), q(4)];
        let (f, g) = deformed_fermat_pair(5, [q(1), q(2)], [q(3), q(4)], &a).unwrap();
        assert_eq!(f.num_terms(), 7);
        assert_eq!(g.num_terms(), 6);
        assert_eq!(f.coeff(&MultiIndex::new(vec![2, 3, 0, 0, 0])), q(1));
        assert_eq!(g.coeff(&MultiIndex::new(vec![0, 0, 2, 3, 0])), q(4));
        assert!(deformed_fermat_pair(4, [q(0), q(0)], [q(0), q(0)], &a).is_err());
        let dup = [q(0), q(1), q(1), q(3), q(4)];
        assert!(deformed_fermat_pair(5, [q(0), q(0)], [q(0), q(0)], &dup).is_err());
    }

    #[test]
    fn corrupted_term_table_fails_euler_check() {
        let mut f: HomogPoly<Q> = parse_homog("Z0^2 + Z1*Z2", None).unwrap();
        assert!(f.euler_identity_check());
        f.poly.terms.insert(MultiIndex::new(vec![1, 0, 0]), q(1));
        assert!(!f.euler_identity_check());
    }

    #[test]
    fn euler_identity_on_seeded_random_polys() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100 {
            let n = rng.gen_range(1..=6);
            let d = rng.gen_range(0..=8);
            let f: HomogPoly<Q> = HomogPoly::random_sparse(n, d, 12, &mut rng);
            assert!(f.euler_identity_check());
        }
    }

    #[test]
    fn division_detects_multiples() {
        let f: Poly<Q> = parse_poly("z1^2 - z2^2", 'z', 1, Some(2)).unwrap();
        let g: Poly<Q> = parse_poly("z1 + z2", 'z', 1, Some(2)).unwrap();
        let (qt, r) = f.div_rem(&g);
        assert!(r.is_zero());
        assert_eq!(qt.mul(&g), f);
        let h: Poly<Q> = parse_poly("z1^2 + z2^2", 'z', 1, Some(2)).unwrap();
        assert!(!h.is_multiple_of(&g));
    }

    #[test]
    fn prime_field_coefficients() {
        let f: HomogPoly<Fp<11>> = parse_homog("1/2*Z0 + 12*Z1", None).unwrap();
        assert_eq!(f.to_text(), "6*Z0 + Z1");
    }

    proptest! {
        #[test]
        fn dehomogenize_is_multiplicative(seed in any::<u64>(), n in 2usize..5, d1 in 0u32..4, d2 in 0u32..4, chart in 0usize..2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f: HomogPoly<Q> = HomogPoly::random_sparse(n, d1, 5, &mut rng);
            let g: HomogPoly<Q> = HomogPoly::random_sparse(n, d2, 5, &mut rng);
            let fg = f.mul(&g).unwrap();
            prop_assert_eq!(fg.dehomogenize(chart).unwrap(), f.dehomogenize(chart).unwrap().mul(&g.dehomogenize(chart).unwrap()));
        }

        #[test]
        fn partial_derivatives_commute(seed in any::<u64>(), n in 2usize..6, d in 0u32..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f: HomogPoly<Q> = HomogPoly::random_sparse(n, d, 8, &mut rng);
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            prop_assert_eq!(f.partial_derivative(i).partial_derivative(j), f.partial_derivative(j).partial_derivative(i));
        }

        #[test]
        fn text_format_roundtrips(seed in any::<u64>(), n in 1usize..5, d in 0u32..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f: HomogPoly<Q> = HomogPoly::random_sparse(n, d, 6, &mut rng);
            let g: HomogPoly<Q> = parse_homog(&f.to_text(), Some(n)).unwrap();
            if f.is_zero() {
                prop_assert!(g.is_zero());
            } else {
                prop_assert_eq!(f, g);
            }
        }
    }
}
