//! Polynomials and rational functions in two chart variables with
//! coefficients in the differential ring.
//!
//! Denominators are kept factored: a monomial in the chart variables times
//! a list of polynomial factors recorded as they are introduced. Cancelling
//! is done by trial division against those factors, so no multivariate gcd
//! over the coefficient ring is ever needed.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::coeffring::{int, Bindings, CoeffElem, Mono, Rational, RingError};

/// Total degree above which substitution refuses to go on.
pub const DEGREE_CAP: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("denominator is the zero polynomial")]
    DenominatorZero,
    #[error("degree {0} exceeds the cap of {DEGREE_CAP}")]
    DegreeCap(u32),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// Display names of the two chart variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vars(Arc<(String, String)>);

impl Vars {
    pub fn new(a: &str, b: &str) -> Self {
        Vars(Arc::new((a.to_string(), b.to_string())))
    }

    pub fn get(&self, k: usize) -> &str {
        if k == 0 {
            &self.0 .0
        } else {
            &self.0 .1
        }
    }

    pub fn first(&self) -> &str {
        self.get(0)
    }

    pub fn second(&self) -> &str {
        self.get(1)
    }
}

impl Default for Vars {
    fn default() -> Self {
        Vars::new("x", "y")
    }
}

pub type Exp = (u32, u32);

fn at(e: Exp, k: usize) -> u32 {
    if k == 0 {
        e.0
    } else {
        e.1
    }
}

/// Polynomial in the two chart variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BiPoly {
    terms: BTreeMap<Exp, CoeffElem>,
    vars: Vars,
}

impl BiPoly {
    pub fn zero(vars: &Vars) -> Self {
        BiPoly { terms: BTreeMap::new(), vars: vars.clone() }
    }

    pub fn constant(c: CoeffElem, vars: &Vars) -> Self {
        Self::monomial(0, 0, c, vars)
    }

    pub fn one(vars: &Vars) -> Self {
        Self::constant(CoeffElem::one(), vars)
    }

    pub fn monomial(i: u32, j: u32, c: CoeffElem, vars: &Vars) -> Self {
        let mut p = Self::zero(vars);
        p.add_term((i, j), c);
        p
    }

    /// The chart variable with index `k` (0 or 1).
    pub fn var(k: usize, vars: &Vars) -> Self {
        let e = if k == 0 { (1, 0) } else { (0, 1) };
        Self::monomial(e.0, e.1, CoeffElem::one(), vars)
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Exp, CoeffElem)>, vars: &Vars) -> Self {
        let mut p = Self::zero(vars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn with_vars(mut self, vars: &Vars) -> Self {
        self.vars = vars.clone();
        self
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exp, &CoeffElem)> {
        self.terms.iter()
    }

    pub fn support(&self) -> Vec<Exp> {
        self.terms.keys().copied().collect()
    }

    pub fn coeff(&self, i: u32, j: u32) -> CoeffElem {
        self.terms.get(&(i, j)).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The coefficient when the polynomial has no chart variables.
    pub fn as_constant(&self) -> Option<CoeffElem> {
        match self.terms.len() {
            0 => Some(CoeffElem::zero()),
            1 => self.terms.get(&(0, 0)).cloned(),
            _ => None,
        }
    }

    pub fn as_rational(&self) -> Option<Rational> {
        self.as_constant().and_then(|c| c.as_rational())
    }

    pub fn add_term(&mut self, e: Exp, c: CoeffElem) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(v) => {
                *v += &c;
                if v.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|(i, j)| i + j).max().unwrap_or(0)
    }

    pub fn degree_in(&self, k: usize) -> u32 {
        self.terms.keys().map(|&e| at(e, k)).max().unwrap_or(0)
    }

    /// Largest power of variable `k` dividing the polynomial.
    pub fn valuation_in(&self, k: usize) -> u32 {
        self.terms.keys().map(|&e| at(e, k)).min().unwrap_or(0)
    }

    pub fn scale(&self, c: &CoeffElem) -> BiPoly {
        let mut out = Self::zero(&self.vars);
        for (e, v) in &self.terms {
            out.add_term(*e, v * c);
        }
        out
    }

    pub fn scale_rational(&self, q: &Rational) -> BiPoly {
        BiPoly {
            terms: if q.is_zero() {
                BTreeMap::new()
            } else {
                self.terms.iter().map(|(e, c)| (*e, c.scale(q))).collect()
            },
            vars: self.vars.clone(),
        }
    }

    /// Multiplies by `A^i B^j`.
    pub fn shift(&self, i: u32, j: u32) -> BiPoly {
        BiPoly {
            terms: self.terms.iter().map(|((a, b), c)| ((a + i, b + j), c.clone())).collect(),
            vars: self.vars.clone(),
        }
    }

    /// Divides by `A^i B^j`; the caller guarantees divisibility.
    fn unshift(&self, i: u32, j: u32) -> BiPoly {
        BiPoly {
            terms: self.terms.iter().map(|((a, b), c)| ((a - i, b - j), c.clone())).collect(),
            vars: self.vars.clone(),
        }
    }

    pub fn pow(&self, e: u32) -> BiPoly {
        let mut out = Self::one(&self.vars);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Formal partial derivative in variable `k`.
    pub fn partial(&self, k: usize) -> BiPoly {
        let mut out = Self::zero(&self.vars);
        for (&e, c) in &self.terms {
            let p = at(e, k);
            if p == 0 {
                continue;
            }
            let ne = if k == 0 { (e.0 - 1, e.1) } else { (e.0, e.1 - 1) };
            out.add_term(ne, c.scale(&int(p as i64)));
        }
        out
    }

    /// Coefficientwise derivative in `z`; chart variables are held fixed.
    pub fn d_dz(&self) -> BiPoly {
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            out.add_term(*e, c.d_dz());
        }
        out
    }

    pub fn substitute_coeffs(&self, b: &Bindings) -> Result<BiPoly, RingError> {
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            out.add_term(*e, c.substitute(b)?);
        }
        Ok(out)
    }

    pub fn map_coeffs(&self, f: impl Fn(&CoeffElem) -> CoeffElem) -> BiPoly {
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            out.add_term(*e, f(c));
        }
        out
    }

    /// Leading term in the block order: chart exponents lexicographically,
    /// then the coefficient ring's lexicographic order.
    fn leading(&self) -> Option<(Exp, Mono, Rational)> {
        let (e, c) = self.terms.iter().next_back()?;
        let (m, q) = c.leading_term()?;
        Some((*e, m.clone(), q.clone()))
    }

    fn sub_term_multiple(&mut self, d: &BiPoly, e: Exp, m: &Mono, q: &Rational) {
        for ((a, b), c) in &d.terms {
            self.add_term((a + e.0, b + e.1), -c.mul_term(m, q));
        }
    }

    /// Exact quotient, if `d` divides `self`.
    pub fn div_exact(&self, d: &BiPoly) -> Option<BiPoly> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.as_constant() {
            let mut out = Self::zero(&self.vars);
            for (e, v) in &self.terms {
                out.add_term(*e, v.div_exact(&c)?);
            }
            return Some(out);
        }
        if d.degree_in(0) > self.degree_in(0) || d.degree_in(1) > self.degree_in(1) {
            return if self.is_zero() { Some(self.clone()) } else { None };
        }
        let (de, dm, dq) = d.leading()?;
        let mut rem = self.clone();
        let mut quot = Self::zero(&self.vars);
        while let Some((re, rm, rq)) = rem.leading() {
            if re.0 < de.0 || re.1 < de.1 {
                return None;
            }
            let m = rm.div(&dm)?;
            let e = (re.0 - de.0, re.1 - de.1);
            let q = rq / &dq;
            rem.sub_term_multiple(d, e, &m, &q);
            quot.add_term(e, CoeffElem::from_term(m, q));
        }
        Some(quot)
    }

    /// Splits off the monomial content: `self = A^a B^b * rest`.
    pub fn monomial_content(&self) -> (Exp, BiPoly) {
        if self.is_zero() {
            return ((0, 0), self.clone());
        }
        let a = self.valuation_in(0);
        let b = self.valuation_in(1);
        ((a, b), self.unshift(a, b))
    }

    /// Rational number that makes the block-leading rational coefficient 1.
    fn leading_rational(&self) -> Rational {
        self.leading().map(|l| l.2).unwrap_or_else(Rational::one)
    }

    /// Sets variable `k` to zero and returns the result as a polynomial in
    /// the other variable.
    pub fn restrict_zero(&self, k: usize) -> UniPoly {
        let mut coeffs = Vec::new();
        for (&e, c) in &self.terms {
            if at(e, k) != 0 {
                continue;
            }
            let p = at(e, 1 - k) as usize;
            if coeffs.len() <= p {
                coeffs.resize(p + 1, CoeffElem::zero());
            }
            coeffs[p] = c.clone();
        }
        UniPoly::new(coeffs)
    }

    /// `self(imageA, imageB)`.
    pub fn compose(&self, a: &BiRat, b: &BiRat) -> Result<BiRat, PolyError> {
        let vars = a.vars().clone();
        let mut pa: Vec<BiRat> = vec![BiRat::one(&vars)];
        let mut pb: Vec<BiRat> = vec![BiRat::one(&vars)];
        let mut out = BiRat::zero(&vars);
        // Group by power of the first variable to keep the number of
        // rational additions small.
        let mut rows: BTreeMap<u32, Vec<(u32, &CoeffElem)>> = BTreeMap::new();
        for ((i, j), c) in &self.terms {
            rows.entry(*i).or_default().push((*j, c));
        }
        for (i, row) in rows {
            let mut inner = BiRat::zero(&vars);
            for (j, c) in row {
                while pb.len() <= j as usize {
                    let next = pb.last().unwrap().mul(b)?;
                    pb.push(next);
                }
                inner = inner.add(&pb[j as usize].scale(c))?;
            }
            while pa.len() <= i as usize {
                let next = pa.last().unwrap().mul(a)?;
                pa.push(next);
            }
            out = out.add(&pa[i as usize].mul(&inner)?)?;
        }
        Ok(out)
    }

    pub fn render(&self, pretty: bool) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        let mut keys: Vec<&Exp> = self.terms.keys().collect();
        keys.sort_by(|a, b| (a.0 + a.1, a.1).cmp(&(b.0 + b.1, b.1)).reverse());
        for (n, e) in keys.into_iter().enumerate() {
            let c = &self.terms[e];
            let mono = render_mono(*e, &self.vars);
            let t = if mono.is_empty() {
                c.render(pretty)
            } else if let Some(q) = c.as_rational() {
                if q.is_one() {
                    mono
                } else if (-&q).is_one() {
                    format!("-{mono}")
                } else {
                    format!("{}*{}", c.render(pretty), mono)
                }
            } else if c.is_compound() {
                format!("({})*{}", c.render(pretty), mono)
            } else {
                format!("{}*{}", c.render(pretty), mono)
            };
            if n == 0 {
                out.push_str(&t);
            } else if let Some(rest) = t.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(rest);
            } else {
                out.push_str(" + ");
                out.push_str(&t);
            }
        }
        out
    }
}

fn render_mono(e: Exp, vars: &Vars) -> String {
    let mut parts = Vec::new();
    for k in 0..2 {
        match at(e, k) {
            0 => {}
            1 => parts.push(vars.get(k).to_string()),
            p => parts.push(format!("{}^{}", vars.get(k), p)),
        }
    }
    parts.join("*")
}

impl fmt::Display for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(false))
    }
}

impl std::ops::Add for &BiPoly {
    type Output = BiPoly;
    fn add(self, o: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl std::ops::Sub for &BiPoly {
    type Output = BiPoly;
    fn sub(self, o: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(*e, -c);
        }
        out
    }
}

impl std::ops::Neg for &BiPoly {
    type Output = BiPoly;
    fn neg(self) -> BiPoly {
        self.scale_rational(&int(-1))
    }
}

impl std::ops::Mul for &BiPoly {
    type Output = BiPoly;
    fn mul(self, o: &BiPoly) -> BiPoly {
        let mut out = BiPoly::zero(&self.vars);
        for ((a, b), c) in &self.terms {
            for ((p, q), d) in &o.terms {
                out.add_term((a + p, b + q), c * d);
            }
        }
        out
    }
}

/// Factored denominator `A^a B^b * prod f_i^e_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Den {
    pub mono: Exp,
    pub factors: Vec<(BiPoly, u32)>,
}

impl Den {
    fn one() -> Self {
        Den { mono: (0, 0), factors: Vec::new() }
    }

    fn is_one(&self) -> bool {
        self.mono == (0, 0) && self.factors.is_empty()
    }

    fn exponent_of(&self, f: &BiPoly) -> u32 {
        self.factors.iter().find(|(g, _)| g == f).map(|x| x.1).unwrap_or(0)
    }

    fn push(&mut self, f: BiPoly, e: u32) {
        if e == 0 {
            return;
        }
        match self.factors.iter_mut().find(|(g, _)| *g == f) {
            Some(slot) => slot.1 += e,
            None => self.factors.push((f, e)),
        }
    }

    fn expand(&self, vars: &Vars) -> BiPoly {
        let mut p = BiPoly::one(vars).shift(self.mono.0, self.mono.1);
        for (f, e) in &self.factors {
            p = &p * &f.pow(*e);
        }
        p
    }
}

/// Rational function `num / den` with a factored denominator.
#[derive(Clone, Debug)]
pub struct BiRat {
    num: BiPoly,
    den: Den,
}

/// A denominator polynomial split into a rational scalar, a monomial and a
/// normalized factor (absent when the rest is 1).
fn split_factor(p: &BiPoly) -> Result<(Rational, Exp, Option<BiPoly>), PolyError> {
    if p.is_zero() {
        return Err(PolyError::DenominatorZero);
    }
    let (mono, rest) = p.monomial_content();
    if let Some(q) = rest.as_rational() {
        return Ok((q, mono, None));
    }
    let lead = rest.leading_rational();
    let f = rest.scale_rational(&lead.recip());
    Ok((lead, mono, Some(f)))
}

impl BiRat {
    pub fn zero(vars: &Vars) -> Self {
        BiRat { num: BiPoly::zero(vars), den: Den::one() }
    }

    pub fn one(vars: &Vars) -> Self {
        Self::from_poly(BiPoly::one(vars))
    }

    pub fn constant(c: CoeffElem, vars: &Vars) -> Self {
        Self::from_poly(BiPoly::constant(c, vars))
    }

    pub fn from_poly(p: BiPoly) -> Self {
        BiRat { num: p, den: Den::one() }
    }

    pub fn var(k: usize, vars: &Vars) -> Self {
        Self::from_poly(BiPoly::var(k, vars))
    }

    /// `A^i B^j` with possibly negative exponents.
    pub fn monomial(i: i32, j: i32, c: CoeffElem, vars: &Vars) -> Self {
        let num = BiPoly::monomial(i.max(0) as u32, j.max(0) as u32, c, vars);
        let den = Den { mono: ((-i).max(0) as u32, (-j).max(0) as u32), factors: Vec::new() };
        BiRat { num, den }.normalized()
    }

    /// `num / den` for an arbitrary nonzero polynomial denominator.
    pub fn from_parts(num: BiPoly, den: &BiPoly) -> Result<Self, PolyError> {
        let (q, mono, f) = split_factor(den)?;
        let mut d = Den { mono, factors: Vec::new() };
        if let Some(f) = f {
            d.push(f, 1);
        }
        Ok(BiRat { num: num.scale_rational(&q.recip()), den: d }.normalized())
    }

    pub fn vars(&self) -> &Vars {
        &self.num.vars
    }

    pub fn with_vars(mut self, vars: &Vars) -> Self {
        self.num.vars = vars.clone();
        for (f, _) in &mut self.den.factors {
            f.vars = vars.clone();
        }
        self
    }

    pub fn num(&self) -> &BiPoly {
        &self.num
    }

    pub fn den(&self) -> &Den {
        &self.den
    }

    pub fn den_poly(&self) -> BiPoly {
        self.den.expand(self.vars())
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn as_poly(&self) -> Option<&BiPoly> {
        self.den.is_one().then_some(&self.num)
    }

    fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// Cancels tracked factors that divide the numerator and common
    /// monomials. Idempotent.
    pub fn normalize(&mut self) {
        if self.num.is_zero() {
            self.den = Den::one();
            return;
        }
        for (f, e) in &mut self.den.factors {
            while *e > 0 {
                match self.num.div_exact(f) {
                    Some(q) => {
                        self.num = q;
                        *e -= 1;
                    }
                    None => break,
                }
            }
        }
        self.den.factors.retain(|(_, e)| *e > 0);
        let a = self.num.valuation_in(0).min(self.den.mono.0);
        let b = self.num.valuation_in(1).min(self.den.mono.1);
        if a > 0 || b > 0 {
            self.num = self.num.unshift(a, b);
            self.den.mono = (self.den.mono.0 - a, self.den.mono.1 - b);
        }
    }

    pub fn neg(&self) -> BiRat {
        BiRat { num: -&self.num, den: self.den.clone() }
    }

    pub fn scale(&self, c: &CoeffElem) -> BiRat {
        BiRat { num: self.num.scale(c), den: self.den.clone() }.normalized()
    }

    pub fn scale_rational(&self, q: &Rational) -> BiRat {
        BiRat { num: self.num.scale_rational(q), den: self.den.clone() }
    }

    pub fn add(&self, o: &BiRat) -> Result<BiRat, PolyError> {
        if o.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(o.clone());
        }
        let vars = self.vars().clone();
        let mut l = Den {
            mono: (self.den.mono.0.max(o.den.mono.0), self.den.mono.1.max(o.den.mono.1)),
            factors: Vec::new(),
        };
        for (f, e) in self.den.factors.iter().chain(&o.den.factors) {
            let have = l.exponent_of(f);
            if *e > have {
                l.push(f.clone(), e - have);
            }
        }
        let lift = |r: &BiRat| -> BiPoly {
            let mut p = r.num.shift(l.mono.0 - r.den.mono.0, l.mono.1 - r.den.mono.1);
            for (f, e) in &l.factors {
                let k = e - r.den.exponent_of(f);
                if k > 0 {
                    p = &p * &f.pow(k);
                }
            }
            p.with_vars(&vars)
        };
        let num = &lift(self) + &lift(o);
        check_cap(&num)?;
        Ok(BiRat { num, den: l }.normalized())
    }

    pub fn sub(&self, o: &BiRat) -> Result<BiRat, PolyError> {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &BiRat) -> Result<BiRat, PolyError> {
        if self.is_zero() || o.is_zero() {
            return Ok(BiRat::zero(self.vars()));
        }
        let mut num = &self.num * &o.num;
        check_cap(&num)?;
        let mut den = self.den.clone();
        den.mono = (den.mono.0 + o.den.mono.0, den.mono.1 + o.den.mono.1);
        for (f, e) in &o.den.factors {
            den.push(f.clone(), *e);
        }
        // Cancel crosswise first so that products stay small.
        num.vars = self.vars().clone();
        Ok(BiRat { num, den }.normalized())
    }

    /// Multiplicative inverse. The numerator becomes a tracked factor.
    pub fn recip(&self) -> Result<BiRat, PolyError> {
        let (q, mono, f) = split_factor(&self.num)?;
        let vars = self.vars().clone();
        let mut num = self.den.expand(&vars).scale_rational(&q.recip());
        // Old denominator monomials cancel against the new one right away.
        let mut den = Den { mono, factors: Vec::new() };
        if let Some(f) = f {
            den.push(f, 1);
        }
        num.vars = vars;
        Ok(BiRat { num, den }.normalized())
    }

    pub fn div(&self, o: &BiRat) -> Result<BiRat, PolyError> {
        self.mul(&o.recip()?)
    }

    pub fn pow(&self, e: i32) -> Result<BiRat, PolyError> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut out = BiRat::one(self.vars());
        for _ in 0..e.unsigned_abs() {
            out = out.mul(&base)?;
        }
        Ok(out)
    }

    /// Formal partial derivative in variable `k`.
    pub fn partial(&self, k: usize) -> Result<BiRat, PolyError> {
        self.derive(|p| p.partial(k), Some(k))
    }

    /// Derivative in `z` with the chart variables held fixed.
    pub fn d_dz(&self) -> Result<BiRat, PolyError> {
        self.derive(BiPoly::d_dz, None)
    }

    fn derive(&self, d: impl Fn(&BiPoly) -> BiPoly, var: Option<usize>) -> Result<BiRat, PolyError> {
        let vars = self.vars().clone();
        let mut out = BiRat { num: d(&self.num), den: self.den.clone() }.normalized();
        if let Some(k) = var {
            let a = at(self.den.mono, k);
            if a > 0 {
                let mut den = self.den.clone();
                if k == 0 {
                    den.mono.0 += 1;
                } else {
                    den.mono.1 += 1;
                }
                let t = BiRat { num: self.num.scale_rational(&int(-(a as i64))), den };
                out = out.add(&t.normalized())?;
            }
        }
        for (f, e) in &self.den.factors {
            let df = d(f);
            if df.is_zero() {
                continue;
            }
            let mut den = self.den.clone();
            den.push(f.clone(), 1);
            let num = (&self.num * &df).scale_rational(&int(-(*e as i64))).with_vars(&vars);
            out = out.add(&BiRat { num, den }.normalized())?;
        }
        Ok(out)
    }

    pub fn substitute_coeffs(&self, b: &Bindings) -> Result<BiRat, PolyError> {
        let mut out = BiRat::from_poly(self.num.substitute_coeffs(b)?);
        let vars = self.vars().clone();
        let mono = BiRat { num: BiPoly::one(&vars), den: Den { mono: self.den.mono, factors: vec![] } };
        out = out.mul(&mono)?;
        for (f, e) in &self.den.factors {
            let g = BiRat::from_poly(f.substitute_coeffs(b)?);
            out = out.mul(&g.recip()?.pow(*e as i32)?)?;
        }
        Ok(out)
    }

    /// `self(imageA, imageB)`.
    pub fn compose(&self, a: &BiRat, b: &BiRat) -> Result<BiRat, PolyError> {
        let mut out = self.num.compose(a, b)?;
        if self.den.mono.0 > 0 {
            out = out.div(&a.pow(self.den.mono.0 as i32)?)?;
        }
        if self.den.mono.1 > 0 {
            out = out.div(&b.pow(self.den.mono.1 as i32)?)?;
        }
        for (f, e) in &self.den.factors {
            let g = f.compose(a, b)?;
            out = out.div(&g.pow(*e as i32)?)?;
        }
        Ok(out)
    }

    /// Order of vanishing along `{var k = 0}`; negative for a pole.
    pub fn valuation_in(&self, k: usize) -> i64 {
        if self.num.is_zero() {
            return i64::MAX;
        }
        self.num.valuation_in(k) as i64 - at(self.den.mono, k) as i64
    }

    /// Whether the value is `c * A^i * B^j` with rational `c`, returning the
    /// triple.
    pub fn as_rational_monomial(&self) -> Option<(Rational, i64, i64)> {
        if !self.den.factors.is_empty() || self.num.len() != 1 {
            return None;
        }
        let (e, c) = self.num.terms().next()?;
        let q = c.as_rational()?;
        Some((q, e.0 as i64 - self.den.mono.0 as i64, e.1 as i64 - self.den.mono.1 as i64))
    }

    /// Exact equality of rational functions, by cross multiplication.
    pub fn equals(&self, o: &BiRat) -> bool {
        let l = &self.num * &o.den_poly();
        let r = &o.num * &self.den_poly();
        l.terms == r.terms
    }

    pub fn render(&self, pretty: bool) -> String {
        if self.den.is_one() {
            return self.num.render(pretty);
        }
        let num = self.num.render(pretty);
        let num = if self.num.len() > 1 { format!("({num})") } else { num };
        let mut parts = Vec::new();
        let mono = render_mono(self.den.mono, self.vars());
        if !mono.is_empty() {
            parts.push(mono);
        }
        for (f, e) in &self.den.factors {
            let s = format!("({})", f.render(pretty));
            parts.push(if *e == 1 { s } else { format!("{s}^{e}") });
        }
        let den = parts.join("*");
        if parts.len() > 1 {
            format!("{num}/({den})")
        } else {
            format!("{num}/{den}")
        }
    }
}

impl PartialEq for BiRat {
    fn eq(&self, o: &BiRat) -> bool {
        self.equals(o)
    }
}

impl fmt::Display for BiRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(false))
    }
}

fn check_cap(p: &BiPoly) -> Result<(), PolyError> {
    let d = p.total_degree();
    if d > DEGREE_CAP {
        return Err(PolyError::DegreeCap(d));
    }
    Ok(())
}

/// Univariate polynomial over the coefficient ring, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniPoly {
    coeffs: Vec<CoeffElem>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<CoeffElem>) -> Self {
        while coeffs.last().is_some_and(CoeffElem::is_zero) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[CoeffElem] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial at -1.
    pub fn degree(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    pub fn lc(&self) -> CoeffElem {
        self.coeffs.last().cloned().unwrap_or_default()
    }

    pub fn coeff(&self, k: usize) -> CoeffElem {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn derivative(&self) -> UniPoly {
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.scale(&int(k as i64)))
                .collect(),
        )
    }

    pub fn mul(&self, o: &UniPoly) -> UniPoly {
        if self.is_zero() || o.is_zero() {
            return UniPoly::new(vec![]);
        }
        let mut v = vec![CoeffElem::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                v[i + j] += &(a * b);
            }
        }
        UniPoly::new(v)
    }

    fn scale(&self, c: &CoeffElem) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    fn add(&self, o: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        UniPoly::new((0..n).map(|k| &self.coeff(k) + &o.coeff(k)).collect())
    }

    fn sub(&self, o: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        UniPoly::new((0..n).map(|k| &self.coeff(k) - &o.coeff(k)).collect())
    }

    fn shifted_scale(&self, k: usize, c: &CoeffElem) -> UniPoly {
        let mut v = vec![CoeffElem::zero(); k];
        v.extend(self.coeffs.iter().map(|x| x * c));
        UniPoly::new(v)
    }

    /// Number of leading zero coefficients, i.e. the power of the variable
    /// dividing the polynomial.
    pub fn valuation(&self) -> usize {
        self.coeffs.iter().take_while(|c| c.is_zero()).count()
    }

    pub fn strip_valuation(&self) -> UniPoly {
        UniPoly::new(self.coeffs[self.valuation().min(self.coeffs.len())..].to_vec())
    }

    /// Pseudo-division: `lc(d)^(deg self - deg d + 1) * self = q*d + r`.
    pub fn pseudo_divmod(&self, d: &UniPoly) -> (UniPoly, UniPoly) {
        let dd = d.degree();
        let mut r = self.clone();
        let mut q = UniPoly::new(vec![]);
        if self.degree() < dd {
            return (q, r);
        }
        let l = d.lc();
        let mut e = self.degree() - dd + 1;
        while r.degree() >= dd {
            let k = (r.degree() - dd) as usize;
            let lr = r.lc();
            let mut tv = vec![CoeffElem::zero(); k];
            tv.push(lr.clone());
            q = q.scale(&l).add(&UniPoly::new(tv));
            r = r.scale(&l).sub(&d.shifted_scale(k, &lr));
            e -= 1;
        }
        let f = l.pow(e as u32);
        (q.scale(&f), r.scale(&f))
    }

    fn div_by(&self, c: &CoeffElem) -> Option<UniPoly> {
        self.coeffs.iter().map(|x| x.div_exact(c)).collect::<Option<Vec<_>>>().map(UniPoly::new)
    }

    /// Greatest common divisor up to a factor from the coefficient ring,
    /// by the subresultant remainder sequence.
    pub fn gcd(&self, o: &UniPoly) -> UniPoly {
        let (mut a, mut b) = if self.degree() >= o.degree() {
            (self.clone(), o.clone())
        } else {
            (o.clone(), self.clone())
        };
        if b.is_zero() {
            return a;
        }
        let mut g = CoeffElem::one();
        let mut h = CoeffElem::one();
        loop {
            let delta = (a.degree() - b.degree()) as u32;
            let (_, r) = a.pseudo_divmod(&b);
            if r.is_zero() {
                return b;
            }
            if r.degree() == 0 {
                return UniPoly::new(vec![CoeffElem::one()]);
            }
            let div = &g * &h.pow(delta);
            let next = match r.div_by(&div) {
                Some(x) => x,
                None => r,
            };
            a = b;
            b = next;
            g = a.lc();
            h = if delta == 0 {
                h
            } else {
                let num = g.pow(delta);
                let den = h.pow(delta - 1);
                num.div_exact(&den).unwrap_or(num)
            };
        }
    }

    /// Square-free part up to a ring factor.
    pub fn squarefree(&self) -> UniPoly {
        if self.degree() < 2 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        if g.degree() <= 0 {
            return self.clone();
        }
        self.pseudo_divmod(&g).0
    }

    pub fn render(&self, var: &str) -> String {
        let vars = Vars::new(var, "_");
        BiPoly::from_terms(
            self.coeffs.iter().enumerate().map(|(k, c)| ((k as u32, 0), c.clone())),
            &vars,
        )
        .render(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffring::rat;

    fn xy() -> Vars {
        Vars::new("x", "y")
    }
    fn c(n: &str) -> CoeffElem {
        CoeffElem::constant(n)
    }
    fn x() -> BiPoly {
        BiPoly::var(0, &xy())
    }
    fn y() -> BiPoly {
        BiPoly::var(1, &xy())
    }
    fn k(q: i64) -> BiPoly {
        BiPoly::constant(CoeffElem::from_int(q), &xy())
    }

    #[test]
    fn square_of_sum() {
        let s = &x() + &y();
        let sq = s.pow(2);
        let expect = &(&x().pow(2) + &(&x() * &y()).scale_rational(&int(2))) + &y().pow(2);
        assert_eq!(sq, expect);
    }

    #[test]
    fn partial_of_okamoto_hamiltonian() {
        let z = BiPoly::constant(CoeffElem::z(), &xy());
        let kap = BiPoly::constant(c("kappa0"), &xy());
        let th = BiPoly::constant(c("thetainf"), &xy());
        let inner = &(&x().pow(2) + &(&z * &x()).scale_rational(&int(2))) + &kap.scale_rational(&int(2));
        let h = &(&(&(&k(2) * &x()) * &y().pow(2)) - &(&inner * &y())) + &(&th * &x());
        let hy = h.partial(1);
        let expect = &(&(&k(4) * &x()) * &y()) - &inner;
        assert_eq!(hy, expect);
        assert!(k(7).partial(0).is_zero());
    }

    #[test]
    fn inverse_substitution_of_square() {
        let v = Vars::new("X", "y");
        let a = BiRat::monomial(-1, 0, CoeffElem::one(), &v);
        let b = BiRat::var(1, &v);
        let r = x().pow(2).compose(&a, &b).unwrap();
        assert_eq!(r.num().as_rational(), Some(int(1)));
        assert_eq!(r.den().mono, (2, 0));
    }

    #[test]
    fn blowup_substitution() {
        let v = Vars::new("u", "v");
        let bc = BiPoly::constant(c("b"), &xy());
        let p = &y() - &bc;
        let a = BiRat::from_poly(&BiPoly::var(0, &v) + &BiPoly::constant(c("a"), &v));
        let b = BiRat::from_poly(&(&BiPoly::var(0, &v) * &BiPoly::var(1, &v)) + &BiPoly::constant(c("b"), &v));
        let r = p.compose(&a, &b).unwrap();
        assert_eq!(r.as_poly().unwrap(), &(&BiPoly::var(0, &v) * &BiPoly::var(1, &v)));
    }

    #[test]
    fn tracked_factor_cancels() {
        let v = xy();
        let f = &x() + &(&y() * &k(3));
        let r = BiRat::from_parts(&f * &(&x() - &y()), &f.scale_rational(&rat(2, 1))).unwrap();
        assert_eq!(r.as_poly().unwrap(), &(&x() - &y()).scale_rational(&rat(1, 2)));
        let inv = BiRat::from_poly(f.clone()).recip().unwrap();
        let one = inv.mul(&BiRat::from_poly(f)).unwrap();
        assert_eq!(one.as_poly().unwrap(), &BiPoly::one(&v));
    }

    #[test]
    fn quotient_rule() {
        let v = xy();
        let f = &x() + &y();
        let r = BiRat::from_parts(x(), &f).unwrap();
        let d = r.partial(0).unwrap();
        let expect = BiRat::from_parts(y(), &f.pow(2)).unwrap();
        assert!(d.equals(&expect));
        let g = &x() + &BiPoly::constant(CoeffElem::function("b", 0), &v);
        let r = BiRat::from_parts(BiPoly::one(&v), &g).unwrap();
        let d = r.d_dz().unwrap();
        let expect = BiRat::from_parts(BiPoly::constant(-CoeffElem::function("b", 1), &v), &g.pow(2)).unwrap();
        assert!(d.equals(&expect));
    }

    #[test]
    fn coefficientwise_z_derivative() {
        let a = &c("a1") + &(&c("a2") * &CoeffElem::z());
        let p = BiPoly::monomial(1, 0, a, &xy());
        assert_eq!(p.d_dz(), BiPoly::monomial(1, 0, c("a2"), &xy()));
        let q = BiPoly::monomial(0, 2, CoeffElem::function("beta1", 0), &xy());
        assert_eq!(q.d_dz(), BiPoly::monomial(0, 2, CoeffElem::function("beta1", 1), &xy()));
        assert!((&(&k(2) * &x()) * &y().pow(2)).d_dz().is_zero());
    }

    #[test]
    fn univariate_gcd_and_squarefree() {
        let u = |v: &[i64]| UniPoly::new(v.iter().map(|&q| CoeffElem::from_int(q)).collect());
        // (t-1)(t-2) and (t-1)(t+3)
        let g = u(&[2, -3, 1]).gcd(&u(&[-3, 2, 1]));
        assert_eq!(g.degree(), 1);
        assert!(u(&[2, -3, 1]).pseudo_divmod(&g).1.is_zero());
        // (t-1)^2 (t+1)
        let s = u(&[1, -1, -1, 1]).squarefree();
        assert_eq!(s.degree(), 2);
    }
}
