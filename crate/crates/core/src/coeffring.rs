//! Free differential polynomial ring over Q in `z`, declared constants and
//! the formal derivatives `f^(n)` of declared functions of `z`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("binding for `{0}` refers to its own symbol")]
    CyclicBinding(String),
    #[error("`{0}` is not a valid symbol name")]
    InvalidName(String),
    #[error("symbol `{0}` is declared twice")]
    DuplicateSymbol(String),
}

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Declared constants and functions, each kept in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolTable {
    constants: Vec<String>,
    functions: Vec<String>,
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    name != "z" && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(constants: &[&str], functions: &[&str]) -> Result<Self, RingError> {
        let mut t = Self::new();
        for c in constants {
            t.add_constant(c)?;
        }
        for f in functions {
            t.add_function(f)?;
        }
        Ok(t)
    }

    pub fn add_constant(&mut self, name: &str) -> Result<(), RingError> {
        self.check_new(name)?;
        self.constants.push(name.to_string());
        Ok(())
    }

    pub fn add_function(&mut self, name: &str) -> Result<(), RingError> {
        self.check_new(name)?;
        self.functions.push(name.to_string());
        Ok(())
    }

    fn check_new(&self, name: &str) -> Result<(), RingError> {
        if !valid_name(name) {
            return Err(RingError::InvalidName(name.to_string()));
        }
        if self.contains(name) {
            return Err(RingError::DuplicateSymbol(name.to_string()));
        }
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.is_constant(name) || self.is_function(name)
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.constants.iter().any(|c| c == name)
    }

    pub fn is_function(&self, name: &str) -> bool {
        self.functions.iter().any(|f| f == name)
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn functions(&self) -> &[String] {
        &self.functions
    }

    /// Position of a function in declaration order.
    pub fn function_rank(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f == name)
    }

    /// Turns a function into a constant of the same name.
    pub fn promote(&mut self, name: &str) {
        if let Some(i) = self.function_rank(name) {
            let f = self.functions.remove(i);
            self.constants.push(f);
        }
    }

    /// Registers and returns a constant name derived from `base` that does
    /// not collide with any declared symbol.
    pub fn fresh_constant(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        while self.contains(&name) || name == "z" {
            name.push('x');
        }
        self.constants.push(name.clone());
        name
    }
}

/// Ring generator. The derived order is the canonical one: `z`, then
/// constants by name, then functions by name and derivative order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gen {
    Z,
    Const(Arc<str>),
    Fun(Arc<str>, u32),
}

impl Gen {
    pub fn name(&self) -> &str {
        match self {
            Gen::Z => "z",
            Gen::Const(n) | Gen::Fun(n, _) => n,
        }
    }

    fn print_rank(&self) -> u8 {
        match self {
            Gen::Const(_) => 0,
            Gen::Fun(..) => 1,
            Gen::Z => 2,
        }
    }

    fn render(&self, pretty: bool) -> String {
        match self {
            Gen::Z => "z".to_string(),
            Gen::Const(n) => display_name(n, pretty),
            Gen::Fun(n, k) => format!("{}{}", display_name(n, pretty), "'".repeat(*k as usize)),
        }
    }
}

const GREEK: &[(&str, &str)] = &[
    ("alpha", "α"),
    ("beta", "β"),
    ("gamma", "γ"),
    ("delta", "δ"),
    ("epsilon", "ε"),
    ("theta", "θ"),
    ("kappa", "κ"),
    ("lambda", "λ"),
    ("sigma", "σ"),
    ("omega", "ω"),
    ("eta", "η"),
    ("mu", "μ"),
    ("nu", "ν"),
];

/// Symbol name as printed; with `pretty` a leading Greek letter name is
/// replaced by the letter itself.
pub fn display_name(name: &str, pretty: bool) -> String {
    if pretty {
        for (word, letter) in GREEK {
            if let Some(rest) = name.strip_prefix(word) {
                if rest.is_empty() || !rest.starts_with(|c: char| c.is_ascii_alphabetic()) {
                    return format!("{letter}{rest}");
                }
            }
        }
    }
    name.to_string()
}

/// Power product of generators, sorted by generator with positive exponents.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Mono(Vec<(Gen, u32)>);

impl Mono {
    pub fn one() -> Self {
        Mono(Vec::new())
    }

    pub fn gen(g: Gen, e: u32) -> Self {
        if e == 0 {
            Mono::one()
        } else {
            Mono(vec![(g, e)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Gen, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent(&self, g: &Gen) -> u32 {
        self.0
            .iter()
            .find(|(h, _)| h == g)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let e = self.0[i]
                        .1
                        .checked_add(other.0[j].1)
                        .expect("exponent overflow");
                    out.push((self.0[i].0.clone(), e));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Mono(out)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Mono) -> Option<Mono> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (g, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 < *g {
                return None;
            }
            if j < other.0.len() && other.0[j].0 == *g {
                let f = other.0[j].1;
                j += 1;
                match e.cmp(&f) {
                    Ordering::Less => return None,
                    Ordering::Equal => {}
                    Ordering::Greater => out.push((g.clone(), e - f)),
                }
            } else {
                out.push((g.clone(), *e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Mono(out))
    }

    /// Pure lexicographic monomial order with `z` most significant.
    pub fn lex_cmp(&self, other: &Mono) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((g, e)), Some((h, f))) => match g.cmp(h) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if e != f {
                            return e.cmp(f);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }

    fn half(&self) -> Option<Mono> {
        self.0
            .iter()
            .map(|(g, e)| (e % 2 == 0).then(|| (g.clone(), e / 2)))
            .collect::<Option<Vec<_>>>()
            .map(Mono)
    }

    fn render(&self, pretty: bool) -> String {
        let mut gens: Vec<&(Gen, u32)> = self.0.iter().collect();
        gens.sort_by(|a, b| (a.0.print_rank(), &a.0).cmp(&(b.0.print_rank(), &b.0)));
        gens.iter()
            .map(|(g, e)| {
                if *e == 1 {
                    g.render(pretty)
                } else {
                    format!("{}^{}", g.render(pretty), e)
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// A symbol that can be bound by a substitution.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Const(String),
    Fun(String),
}

impl Symbol {
    pub fn name(&self) -> &str {
        match self {
            Symbol::Const(n) | Symbol::Fun(n) => n,
        }
    }
}

pub type Bindings = BTreeMap<Symbol, CoeffElem>;

/// Element of the coefficient ring in canonical form: no zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct CoeffElem {
    terms: BTreeMap<Mono, Rational>,
}

impl CoeffElem {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(int(n))
    }

    pub fn from_rational(q: Rational) -> Self {
        Self::from_term(Mono::one(), q)
    }

    pub fn from_term(m: Mono, q: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(m, q);
        }
        CoeffElem { terms }
    }

    pub fn from_gen(g: Gen) -> Self {
        Self::from_term(Mono::gen(g, 1), Rational::one())
    }

    pub fn z() -> Self {
        Self::from_gen(Gen::Z)
    }

    pub fn constant(name: &str) -> Self {
        Self::from_gen(Gen::Const(name.into()))
    }

    pub fn function(name: &str, order: u32) -> Self {
        Self::from_gen(Gen::Fun(name.into(), order))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_rational().is_some_and(|q| q.is_one())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Rational)> {
        self.terms.iter()
    }

    /// The value when the element is a rational number.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Mono::one()).cloned(),
            _ => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        self.as_rational().is_some()
    }

    fn add_term(&mut self, m: Mono, q: Rational) {
        if q.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(c) => {
                *c += q;
                if c.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, q);
            }
        }
    }

    pub fn scale(&self, q: &Rational) -> CoeffElem {
        if q.is_zero() {
            return CoeffElem::zero();
        }
        CoeffElem {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * q)).collect(),
        }
    }

    pub fn mul_term(&self, m: &Mono, q: &Rational) -> CoeffElem {
        if q.is_zero() {
            return CoeffElem::zero();
        }
        CoeffElem {
            terms: self.terms.iter().map(|(n, c)| (n.mul(m), c * q)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> CoeffElem {
        let mut out = CoeffElem::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = &out * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        out
    }

    pub fn generators(&self) -> BTreeSet<Gen> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(g, _)| g.clone()))
            .collect()
    }

    pub fn contains_gen(&self, g: &Gen) -> bool {
        self.terms.keys().any(|m| m.exponent(g) > 0)
    }

    /// Whether a function symbol (any derivative order) or constant occurs.
    pub fn mentions(&self, s: &Symbol) -> bool {
        self.terms.keys().any(|m| {
            m.0.iter().any(|(g, _)| match (g, s) {
                (Gen::Const(n), Symbol::Const(t)) => **n == **t,
                (Gen::Fun(n, _), Symbol::Fun(t)) => **n == **t,
                _ => false,
            })
        })
    }

    /// Derivative orders of the named function that occur.
    pub fn orders_of(&self, f: &str) -> BTreeSet<u32> {
        self.generators()
            .into_iter()
            .filter_map(|g| match g {
                Gen::Fun(n, k) if &*n == f => Some(k),
                _ => None,
            })
            .collect()
    }

    /// Degree in one generator.
    pub fn degree_in(&self, g: &Gen) -> u32 {
        self.terms.keys().map(|m| m.exponent(g)).max().unwrap_or(0)
    }

    /// Coefficients of the powers of `g`: `self = sum c_k g^k`.
    pub fn coefficients_in(&self, g: &Gen) -> BTreeMap<u32, CoeffElem> {
        let mut out: BTreeMap<u32, CoeffElem> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.exponent(g);
            let rest = Mono(m.0.iter().filter(|(h, _)| h != g).cloned().collect());
            out.entry(e).or_default().add_term(rest, c.clone());
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    pub fn d_dz(&self) -> CoeffElem {
        let mut out = CoeffElem::zero();
        for (m, c) in &self.terms {
            for (idx, (g, e)) in m.0.iter().enumerate() {
                let dg = match g {
                    Gen::Z => Some(Mono::one()),
                    Gen::Const(_) => None,
                    Gen::Fun(n, k) => Some(Mono::gen(Gen::Fun(n.clone(), k + 1), 1)),
                };
                let Some(dg) = dg else { continue };
                let mut rest = m.0.clone();
                if *e == 1 {
                    rest.remove(idx);
                } else {
                    rest[idx].1 -= 1;
                }
                out.add_term(Mono(rest).mul(&dg), c * int(*e as i64));
            }
        }
        out
    }

    pub fn d_dz_n(&self, n: u32) -> CoeffElem {
        (0..n).fold(self.clone(), |a, _| a.d_dz())
    }

    /// Replaces bound symbols; a bound function's derivatives are replaced
    /// by the derivatives of its image.
    pub fn substitute(&self, bindings: &Bindings) -> Result<CoeffElem, RingError> {
        for (s, img) in bindings {
            if img.mentions(s) {
                return Err(RingError::CyclicBinding(s.name().to_string()));
            }
        }
        if bindings.is_empty() {
            return Ok(self.clone());
        }
        let mut cache: HashMap<Gen, CoeffElem> = HashMap::new();
        let mut out = CoeffElem::zero();
        for (m, c) in &self.terms {
            let mut acc = CoeffElem::from_rational(c.clone());
            let mut kept = Mono::one();
            for (g, e) in &m.0 {
                let key = match g {
                    Gen::Z => None,
                    Gen::Const(n) => Some(Symbol::Const(n.to_string())),
                    Gen::Fun(n, _) => Some(Symbol::Fun(n.to_string())),
                };
                match key.and_then(|k| bindings.get(&k)) {
                    Some(img) => {
                        let value = cache
                            .entry(g.clone())
                            .or_insert_with(|| match g {
                                Gen::Fun(_, k) => img.d_dz_n(*k),
                                _ => img.clone(),
                            })
                            .clone();
                        acc = &acc * &value.pow(*e);
                    }
                    None => kept = kept.mul(&Mono::gen(g.clone(), *e)),
                }
            }
            out += &acc.mul_term(&kept, &Rational::one());
        }
        Ok(out)
    }

    /// Leading term in the lexicographic order.
    pub fn leading_term(&self) -> Option<(&Mono, &Rational)> {
        self.terms.iter().max_by(|a, b| a.0.lex_cmp(b.0))
    }

    /// Exact quotient, if `d` divides `self` in the ring.
    pub fn div_exact(&self, d: &CoeffElem) -> Option<CoeffElem> {
        if d.is_zero() {
            return None;
        }
        if let Some(q) = d.as_rational() {
            return Some(self.scale(&q.recip()));
        }
        let (lm, lc) = d.leading_term().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut rem = self.clone();
        let mut quot = CoeffElem::zero();
        while let Some((rm, rc)) = rem.leading_term() {
            let m = rm.div(&lm)?;
            let c = rc / &lc;
            rem -= &d.mul_term(&m, &c);
            quot.add_term(m, c);
        }
        Some(quot)
    }

    /// Exact square root up to sign, if `self` is a perfect square.
    pub fn sqrt_exact(&self) -> Option<CoeffElem> {
        let Some((lm, lc)) = self.leading_term() else {
            return Some(CoeffElem::zero());
        };
        let lead_m = lm.half()?;
        let lead_c = rational_sqrt(lc)?;
        let twice = &lead_c * int(2);
        let mut root = CoeffElem::from_term(lead_m.clone(), lead_c);
        for _ in 0..=self.len() {
            let rem = self - &(&root * &root);
            let Some((rm, rc)) = rem.leading_term() else {
                return Some(root);
            };
            let m = rm.div(&lead_m)?;
            if m.lex_cmp(&lead_m) != Ordering::Less {
                return None;
            }
            root.add_term(m, rc / &twice);
        }
        None
    }

    /// Total degree of the element.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Mono::degree).max().unwrap_or(0)
    }

    pub fn render(&self, pretty: bool) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut terms: Vec<(&Mono, &Rational)> = self.terms.iter().collect();
        terms.sort_by(|a, b| (a.0.degree(), a.0).cmp(&(b.0.degree(), b.0)));
        let mut out = String::new();
        for (k, (m, c)) in terms.into_iter().enumerate() {
            let t = render_term(m, c, pretty);
            if k == 0 {
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

    /// Whether the printed form needs parentheses inside a product.
    pub fn is_compound(&self) -> bool {
        self.terms.len() > 1
    }
}

pub fn render_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn render_term(m: &Mono, c: &Rational, pretty: bool) -> String {
    if m.is_one() {
        return render_rational(c);
    }
    let body = m.render(pretty);
    if c.is_one() {
        body
    } else if (-c).is_one() {
        format!("-{body}")
    } else {
        format!("{}*{}", render_rational(c), body)
    }
}

fn rational_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    (&n * &n == *q.numer() && &d * &d == *q.denom()).then(|| BigRational::new(n, d))
}

impl fmt::Display for CoeffElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(false))
    }
}

impl From<Rational> for CoeffElem {
    fn from(q: Rational) -> Self {
        CoeffElem::from_rational(q)
    }
}

impl From<i64> for CoeffElem {
    fn from(n: i64) -> Self {
        CoeffElem::from_int(n)
    }
}

impl AddAssign<&CoeffElem> for CoeffElem {
    fn add_assign(&mut self, rhs: &CoeffElem) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl SubAssign<&CoeffElem> for CoeffElem {
    fn sub_assign(&mut self, rhs: &CoeffElem) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
}

impl Add for &CoeffElem {
    type Output = CoeffElem;
    fn add(self, rhs: &CoeffElem) -> CoeffElem {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &CoeffElem {
    type Output = CoeffElem;
    fn sub(self, rhs: &CoeffElem) -> CoeffElem {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul for &CoeffElem {
    type Output = CoeffElem;
    fn mul(self, rhs: &CoeffElem) -> CoeffElem {
        let mut out = CoeffElem::zero();
        for (m, c) in &self.terms {
            for (n, d) in &rhs.terms {
                out.add_term(m.mul(n), c * d);
            }
        }
        out
    }
}

impl Neg for &CoeffElem {
    type Output = CoeffElem;
    fn neg(self) -> CoeffElem {
        CoeffElem {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr for CoeffElem {
            type Output = CoeffElem;
            fn $f(self, rhs: CoeffElem) -> CoeffElem { (&self).$f(&rhs) }
        }
        impl $tr<&CoeffElem> for CoeffElem {
            type Output = CoeffElem;
            fn $f(self, rhs: &CoeffElem) -> CoeffElem { (&self).$f(rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Neg for CoeffElem {
    type Output = CoeffElem;
    fn neg(self) -> CoeffElem {
        -&self
    }
}

/// Exact antiderivative in `z`, when one exists inside the ring.
///
/// Works down from the highest derivative present: a term linear in
/// `f^(n)` is matched against the derivative of a polynomial in `f^(n-1)`.
/// What remains must be a polynomial in `z` and constants.
pub fn integrate_z(e: &CoeffElem) -> Option<CoeffElem> {
    let mut rest = e.clone();
    let mut acc = CoeffElem::zero();
    for _ in 0..200 {
        if rest.is_zero() {
            return Some(acc);
        }
        let top = rest
            .generators()
            .into_iter()
            .filter_map(|g| match g {
                Gen::Fun(n, k) if k >= 1 => Some((k, n)),
                _ => None,
            })
            .max();
        let Some((k, name)) = top else {
            if rest.generators().iter().any(|g| matches!(g, Gen::Fun(..))) {
                return None;
            }
            return Some(&acc + &integrate_plain(&rest));
        };
        let g = Gen::Fun(name.clone(), k);
        let coeffs = rest.coefficients_in(&g);
        if coeffs.keys().any(|&p| p > 1) {
            return None;
        }
        let a = coeffs.get(&1).cloned().unwrap_or_default();
        let w = Gen::Fun(name, k - 1);
        let mut prim = CoeffElem::zero();
        for (p, c) in a.coefficients_in(&w) {
            let lift = c.mul_term(&Mono::gen(w.clone(), p + 1), &rat(1, p as i64 + 1));
            prim += &lift;
        }
        rest -= &prim.d_dz();
        acc += &prim;
    }
    None
}

fn integrate_plain(e: &CoeffElem) -> CoeffElem {
    let mut out = CoeffElem::zero();
    for (m, c) in e.terms() {
        let p = m.exponent(&Gen::Z);
        out.add_term(m.mul(&Mono::gen(Gen::Z, 1)), c / int(p as i64 + 1));
    }
    out
}
