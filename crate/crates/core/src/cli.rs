//! Input files and reports.
//!
//! An input file declares symbols and the Hamiltonian:
//!
//! ```text
//! # comments start with '#'
//! constants: kappa0, thetainf
//! functions: beta
//! vars: x, y
//! H = 2*x*y^2 - (x^2 + 2*z*x + 2*kappa0)*y + thetainf*x
//! omega = 1, 2
//! ```
//!
//! `vars` defaults to `x, y`. `H` may continue over several lines.
//! `f'` is the derivative of a declared function. Division is by nonzero
//! rational numbers only.

use std::fmt::Write as _;
use std::path::Path;

use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::coeffring::{render_rational, CoeffElem, Rational, RingError, SymbolTable};
use crate::hamiltonian::{field_from_hamiltonian, CoeffMatrix, HamError, HamSystem};
use crate::newton::{emit_svg, polygon_of, NewtonError};
use crate::polyrat::{BiPoly, BiRat, Vars};
use crate::regularize::{
    classify_cascade, render_trail, round_json, svg_name, tree_json, Iteration, RegularisationRound,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InputError {
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: undeclared symbol `{name}`")]
    UndeclaredSymbol { line: usize, col: usize, name: String },
    #[error("{line}:{col}: division by a non-constant expression")]
    NonPolynomial { line: usize, col: usize },
    #[error("no Hamiltonian given (expected a line `H = ...`)")]
    MissingHamiltonian,
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Ham(#[from] HamError),
}

/// Parsed input file.
#[derive(Clone, Debug)]
pub struct InputSpec {
    pub symbols: SymbolTable,
    pub vars: Vars,
    pub hamiltonian: BiPoly,
    /// `(l, k)`: covering order and 2-form exponent, `omega = A^(k-1) dA^dB`.
    pub omega: Option<(u32, u32)>,
}

impl InputSpec {
    pub fn system(&self) -> Result<HamSystem, InputError> {
        let mut sys = HamSystem::from_hamiltonian(&self.hamiltonian)?;
        if let Some((_, k)) = self.omega {
            if k > 1 {
                let m = BiRat::monomial(k as i32 - 1, 0, CoeffElem::one(), &self.vars);
                sys.field = field_from_hamiltonian(&self.hamiltonian, &m)?;
                sys.omega_mult = m;
            }
        }
        Ok(sys)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Prime,
    Op(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

fn lex(text: &str, line: usize, col0: usize) -> Result<Vec<(Tok, usize, usize)>, InputError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[s..i].iter().collect();
            let n: num_bigint::BigInt = digits.parse().unwrap();
            out.push((Tok::Num(Rational::from_integer(n)), line, col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[s..i].iter().collect()), line, col));
        } else if c == '\'' {
            out.push((Tok::Prime, line, col));
            i += 1;
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), line, col));
            i += 1;
        } else {
            return Err(InputError::Parse { line, col, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

/// Parses one expression over `syms` and `vars`. `line`/`col0` locate the
/// text in its file for error messages.
pub fn parse_expr(text: &str, syms: &SymbolTable, vars: &Vars) -> Result<BiPoly, InputError> {
    parse_expr_at(text, syms, vars, 1, 1)
}

fn parse_expr_at(text: &str, syms: &SymbolTable, vars: &Vars, line: usize, col0: usize) -> Result<BiPoly, InputError> {
    let mut toks = lex(text, line, col0)?;
    let (l, c) = toks.last().map_or((line, col0), |t| (t.1, t.2 + 1));
    toks.push((Tok::End, l, c));
    let mut p = Parser { lx: Lexer { toks, pos: 0 }, syms, vars };
    let e = p.sum()?;
    match p.peek() {
        (Tok::End, _, _) => Ok(e),
        (t, line, col) => Err(InputError::Parse { line, col, msg: format!("unexpected {}", describe(&t)) }),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(n) => format!("number {n}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Prime => "`'`".into(),
        Tok::Op(c) => format!("`{c}`"),
        Tok::End => "end of expression".into(),
    }
}

struct Parser<'a> {
    lx: Lexer,
    syms: &'a SymbolTable,
    vars: &'a Vars,
}

impl Parser<'_> {
    fn peek(&self) -> (Tok, usize, usize) {
        self.lx.toks[self.lx.pos].clone()
    }

    fn bump(&mut self) -> (Tok, usize, usize) {
        let t = self.peek();
        if t.0 != Tok::End {
            self.lx.pos += 1;
        }
        t
    }

    fn sum(&mut self) -> Result<BiPoly, InputError> {
        let mut acc = self.term()?;
        loop {
            match self.peek().0 {
                Tok::Op('+') => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Tok::Op('-') => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<BiPoly, InputError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek().0 {
                Tok::Op('*') => {
                    self.bump();
                    acc = &acc * &self.unary()?;
                }
                Tok::Op('/') => {
                    let (_, line, col) = self.bump();
                    let d = self.unary()?;
                    let q = d.as_rational().ok_or(InputError::NonPolynomial { line, col })?;
                    if q.is_zero() {
                        return Err(InputError::Parse { line, col, msg: "division by zero".into() });
                    }
                    acc = acc.scale_rational(&q.recip());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<BiPoly, InputError> {
        match self.peek().0 {
            Tok::Op('-') => {
                self.bump();
                Ok(-&self.unary()?)
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<BiPoly, InputError> {
        let base = self.atom()?;
        if self.peek().0 != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let (t, line, col) = self.bump();
        let e = match t {
            Tok::Num(n) => n.to_integer().to_u32(),
            _ => None,
        };
        let e = e.ok_or(InputError::Parse { line, col, msg: "exponent must be a nonnegative integer".into() })?;
        Ok(base.pow(e))
    }

    fn atom(&mut self) -> Result<BiPoly, InputError> {
        let (t, line, col) = self.bump();
        match t {
            Tok::Num(n) => Ok(BiPoly::constant(CoeffElem::from_rational(n), self.vars)),
            Tok::Op('(') => {
                let e = self.sum()?;
                match self.bump() {
                    (Tok::Op(')'), _, _) => Ok(e),
                    (t, line, col) => Err(InputError::Parse { line, col, msg: format!("expected `)`, found {}", describe(&t)) }),
                }
            }
            Tok::Ident(name) => {
                let mut order = 0;
                while self.peek().0 == Tok::Prime {
                    self.bump();
                    order += 1;
                }
                if order > 0 && !self.syms.is_function(&name) {
                    return Err(InputError::Parse { line, col, msg: format!("`{name}` is not a declared function") });
                }
                if name == self.vars.first() {
                    Ok(BiPoly::var(0, self.vars))
                } else if name == self.vars.second() {
                    Ok(BiPoly::var(1, self.vars))
                } else if name == "z" {
                    Ok(BiPoly::constant(CoeffElem::z(), self.vars))
                } else if self.syms.is_constant(&name) {
                    Ok(BiPoly::constant(CoeffElem::constant(&name), self.vars))
                } else if self.syms.is_function(&name) {
                    Ok(BiPoly::constant(CoeffElem::function(&name, order), self.vars))
                } else {
                    Err(InputError::UndeclaredSymbol { line, col, name })
                }
            }
            t => Err(InputError::Parse { line, col, msg: format!("unexpected {}", describe(&t)) }),
        }
    }
}

fn name_list(rest: &str, line: usize, col0: usize) -> Result<Vec<String>, InputError> {
    let mut out = Vec::new();
    let mut col = col0;
    for part in rest.split(',') {
        let name = part.trim();
        if !name.is_empty() {
            out.push(name.to_string());
        } else if rest.trim().is_empty() {
            break;
        } else {
            return Err(InputError::Parse { line, col, msg: "empty name in list".into() });
        }
        col += part.len() + 1;
    }
    Ok(out)
}

/// Parses a whole input file.
pub fn parse_input(text: &str) -> Result<InputSpec, InputError> {
    let mut symbols = SymbolTable::new();
    let mut vars = Vars::default();
    let mut h: Option<(String, usize, usize)> = None;
    let mut omega = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let lead = body.len() - body.trim_start().len();
        let trimmed = body.trim_start();
        let keyed = |k: &str| -> Option<(String, usize)> {
            let rest = trimmed.strip_prefix(k)?.trim_start();
            let rest = rest.strip_prefix(':').or_else(|| rest.strip_prefix('='))?;
            let col = lead + 1 + trimmed.len() - rest.len();
            Some((rest.to_string(), col))
        };
        let ring_err = |e: RingError| InputError::Parse { line, col: lead + 1, msg: e.to_string() };
        if let Some((rest, col)) = keyed("constants") {
            for c in name_list(&rest, line, col)? {
                symbols.add_constant(&c).map_err(ring_err)?;
            }
        } else if let Some((rest, col)) = keyed("functions") {
            for f in name_list(&rest, line, col)? {
                symbols.add_function(&f).map_err(ring_err)?;
            }
        } else if let Some((rest, col)) = keyed("vars") {
            match name_list(&rest, line, col)?.as_slice() {
                [a, b] if a != b && a != "z" && b != "z" => vars = Vars::new(a, b),
                _ => return Err(InputError::Parse { line, col, msg: "expected two distinct variable names".into() }),
            }
        } else if let Some((rest, col)) = keyed("omega") {
            let nums: Vec<Option<u32>> = rest.split(',').map(|s| s.trim().parse().ok()).collect();
            match nums.as_slice() {
                [Some(l), Some(k)] if *l >= 1 && *k >= 1 => omega = Some((*l, *k)),
                _ => return Err(InputError::Parse { line, col, msg: "expected `omega = l, k` with positive integers".into() }),
            }
        } else if trimmed.starts_with('H') && trimmed[1..].trim_start().starts_with('=') {
            let rest = trimmed[1..].trim_start();
            let col = lead + 1 + trimmed.len() - rest.len() + 1;
            h = Some((rest[1..].to_string(), line, col));
        } else if let Some((expr, _, _)) = h.as_mut() {
            // continuation of the Hamiltonian
            expr.push(' ');
            expr.push_str(body);
        } else {
            return Err(InputError::Parse { line, col: lead + 1, msg: "expected a declaration or `H = ...`".into() });
        }
    }
    let (expr, line, col) = h.ok_or(InputError::MissingHamiltonian)?;
    for s in symbols.constants().iter().chain(symbols.functions()) {
        if s == vars.first() || s == vars.second() {
            return Err(InputError::Parse { line: 1, col: 1, msg: format!("`{s}` is both a symbol and a variable") });
        }
    }
    // Continuation lines are joined, so later positions refer to the first line.
    let hamiltonian = parse_expr_at(&expr, &symbols, &vars, line, col)?;
    Ok(InputSpec { symbols, vars, hamiltonian, omega })
}

/// Matrix and polygon metrics of the input Hamiltonian.
pub fn analyze_text(spec: &InputSpec, include_constant: bool, pretty: bool) -> Result<String, NewtonError> {
    let h = &spec.hamiltonian;
    let p = polygon_of(h, include_constant)?;
    let mut s = String::new();
    let _ = writeln!(s, "H = {}", h.render(pretty));
    s.push_str(&CoeffMatrix::of(h).render_text(pretty));
    let _ = writeln!(s, "{}", p.summary());
    Ok(s)
}

pub fn analyze_json(spec: &InputSpec, include_constant: bool, pretty: bool) -> Result<Value, NewtonError> {
    let h = &spec.hamiltonian;
    let p = polygon_of(h, include_constant)?;
    Ok(json!({
        "hamiltonian": h.render(pretty),
        "matrix": CoeffMatrix::of(h).to_json(pretty),
        "polygon": p.to_json(),
    }))
}

fn indent(text: &str, by: &str) -> String {
    text.lines().map(|l| format!("{by}{l}\n")).collect()
}

/// Human readable log of one round.
pub fn round_text(r: &RegularisationRound, pretty: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "round r{} on {}", r.index, r.input_label);
    for c in &r.cascades {
        let _ = writeln!(s, "  cascade {} [{}]", c.label, classify_cascade(c));
        let _ = writeln!(s, "    centers: {}", render_trail(&c.trail, pretty));
        let _ = writeln!(s, "    chart: {} ({}, {})", c.final_system.chart.name, c.final_system.vars().first(), c.final_system.vars().second());
        for k in &c.constraints {
            let _ = writeln!(s, "    constraint: {} = 0", k.expr.render(pretty));
        }
        if let Some(e) = &c.error {
            let _ = writeln!(s, "    error: {e}");
        }
        for n in &c.notes {
            let _ = writeln!(s, "    note: {n}");
        }
        if let Some(m) = &c.matrix {
            s.push_str(&indent(&m.render_text(pretty), "    "));
        }
        if let Some(p) = &c.polygon {
            let _ = writeln!(s, "    {}", p.summary());
        }
        if let Some(o) = &c.identified_with {
            let _ = writeln!(s, "    same as {o}");
        }
    }
    if !r.constraints.is_empty() {
        let _ = writeln!(s, "  constraints:");
        for k in &r.constraints {
            let solved = k
                .solved_form
                .as_ref()
                .map(|(sym, v)| format!("  =>  {} = {}", sym.name(), v.render(pretty)))
                .unwrap_or_default();
            let _ = writeln!(s, "    {} = 0{solved}", k.expr.render(pretty));
        }
    }
    let _ = writeln!(s, "  label: {}", r.label());
    for f in &r.verification_failures {
        let _ = writeln!(s, "  verification failed: {f}");
    }
    s
}

pub fn iteration_text(it: &Iteration, pretty: bool) -> String {
    let mut s = String::new();
    for r in &it.rounds {
        s.push_str(&round_text(r, pretty));
        s.push('\n');
    }
    if !it.identifications.is_empty() {
        s.push_str("identifications:\n");
        for i in &it.identifications {
            let _ = writeln!(s, "  {} \u{2261} {}", i.label, i.same_as);
        }
    }
    s.push_str("ranking (area, max total degree):\n");
    for e in &it.ranking {
        let _ = writeln!(s, "  {:<14} {:>5}  {}  genus {}", e.label, render_rational(&e.key.area), e.key.max_total_degree, e.genus);
    }
    s
}

pub fn round_report_json(r: &RegularisationRound, pretty: bool) -> Value {
    round_json(r, pretty)
}

pub fn iteration_json(it: &Iteration, pretty: bool) -> Value {
    tree_json(it, pretty)
}

/// Writes one SVG per recovered polygon (and one for the input, `H.svg`).
pub fn write_svgs(dir: &Path, input: &BiPoly, rounds: &[RegularisationRound], include_constant: bool) -> Result<usize, NewtonError> {
    std::fs::create_dir_all(dir)?;
    let mut n = 0;
    if let Ok(p) = polygon_of(input, include_constant) {
        emit_svg(&p, &dir.join("H.svg"))?;
        n += 1;
    }
    for r in rounds {
        for c in &r.cascades {
            if let Some(p) = &c.polygon {
                emit_svg(p, &dir.join(svg_name(&c.label)))?;
                n += 1;
            }
        }
    }
    Ok(n)
}

/// Whether any branch of any round failed.
pub fn has_branch_errors(rounds: &[RegularisationRound]) -> bool {
    rounds.iter().any(|r| r.cascades.iter().any(|c| c.error.is_some()) || !r.verification_failures.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    const OKAMOTO: &str = "constants: kappa0, thetainf\nH = 2*x*y^2 - (x^2 + 2*z*x + 2*kappa0)*y + thetainf*x\n";

    #[test]
    fn okamoto_input() {
        let s = parse_input(OKAMOTO).unwrap();
        assert_eq!(s.hamiltonian.to_string(), "2*x*y^2 - x^2*y - 2*z*x*y - 2*kappa0*y + thetainf*x");
    }

    #[test]
    fn rational_divisor() {
        let s = parse_input("H = y^2/2").unwrap();
        assert_eq!(s.hamiltonian.to_string(), "1/2*y^2");
    }

    #[test]
    fn division_by_variable() {
        assert!(matches!(parse_input("H = 1/x"), Err(InputError::NonPolynomial { line: 1, col: 6 })));
    }

    #[test]
    fn undeclared() {
        match parse_input("constants: a\n\nH = a*x + b*y") {
            Err(InputError::UndeclaredSymbol { line, col, name }) => assert_eq!((line, col, name.as_str()), (3, 11, "b")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn derivatives_and_continuation() {
        let s = parse_input("functions: beta\nvars: q, p\nH = beta''*q\n  + p^2").unwrap();
        assert_eq!(s.hamiltonian.to_string(), "p^2 + beta''*q");
        assert!(parse_input("constants: a\nH = a'*x").is_err());
    }

    #[test]
    fn omega_line() {
        let s = parse_input("H = x*y^2\nomega = 1, 2").unwrap();
        assert_eq!(s.omega, Some((1, 2)));
        assert_eq!(s.system().unwrap().omega_mult.to_string(), "x");
    }
}
