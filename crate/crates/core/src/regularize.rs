//! Regularisation rounds: every cascade of blow-ups run to a regular final
//! chart, resonance conditions solved and imposed as they appear, final
//! Hamiltonians recovered and ranked over repeated rounds.

use std::fmt::Write as _;

use serde_json::{json, Value};
use thiserror::Error;

use crate::blowup::{
    self, agrees_with_origin, apply_twist, blow_up, compactify, find_base_points, origin_is_base_point,
    other_side, regularity_defect, restricted_polynomial, BlowupError, LinearFactor, StepKind,
};
use crate::coeffring::{integrate_z, Bindings, CoeffElem, Gen, Mono, Rational, RingError, Symbol, SymbolTable};
use crate::hamiltonian::{hamiltonian_from_field, normalized_multiplier, CoeffMatrix, HamError, HamSystem};
use crate::newton::{polygon_of, MinimalityKey, NewtonPolygon};
use crate::polyrat::{BiPoly, PolyError, Vars};

use num_traits::{One, Signed, Zero};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegError {
    #[error(transparent)]
    Blowup(#[from] BlowupError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Ham(#[from] HamError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("constraint outside the supported normal form: {0}")]
    UnsolvedConstraint(String),
    #[error("pole along the exceptional curve with constant coefficient")]
    Irregular,
}

#[derive(Clone, Debug)]
pub struct Config {
    pub max_blowups: u32,
    pub explore_alternates: bool,
    pub include_constant: bool,
    /// Checks chart-overlap agreement and birational consistency at
    /// every step.
    pub verify: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config { max_blowups: blowup::MAX_BLOWUPS, explore_alternates: false, include_constant: false, verify: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TrailKind {
    /// First blow-up, at a point on a line at infinity of the named chart.
    Boundary(String),
    Plain,
    Twist,
    Alternate,
    /// Point at infinity of the fiber, reached through the other chart.
    Infinity,
}

#[derive(Clone, Debug)]
pub struct TrailStep {
    pub kind: TrailKind,
    pub center: (CoeffElem, CoeffElem),
}

impl TrailStep {
    fn render(&self, pretty: bool) -> String {
        let c = format!("({}, {})", self.center.0.render(pretty), self.center.1.render(pretty));
        match &self.kind {
            TrailKind::Boundary(chart) => format!("{chart}{c}"),
            TrailKind::Plain => c,
            TrailKind::Twist => format!("~{c}"),
            TrailKind::Alternate => format!("alt{c}"),
            TrailKind::Infinity => format!("inf{c}"),
        }
    }
}

pub fn render_trail(trail: &[TrailStep], pretty: bool) -> String {
    trail.iter().map(|t| t.render(pretty)).collect::<Vec<_>>().join(" > ")
}

#[derive(Clone, Debug)]
pub struct ResonanceConstraint {
    pub expr: CoeffElem,
    pub solved_form: Option<(Symbol, CoeffElem)>,
    /// Trail of the chart where the condition appeared.
    pub found_at: String,
}

#[derive(Clone, Debug)]
pub struct CascadeResult {
    pub label: String,
    /// 1-based index of the boundary point the cascade starts from.
    pub base_point: usize,
    pub trail: Vec<TrailStep>,
    pub final_system: HamSystem,
    pub hamiltonian: Option<BiPoly>,
    pub matrix: Option<CoeffMatrix>,
    pub polygon: Option<NewtonPolygon>,
    pub constraints: Vec<ResonanceConstraint>,
    /// `(k, l)`: branching order `1/k`, covering order `l`.
    pub branching: (u32, u32),
    pub error: Option<String>,
    pub notes: Vec<String>,
    pub identified_with: Option<String>,
}

impl CascadeResult {
    pub fn path(&self) -> String {
        render_trail(&self.trail, false)
    }
}

#[derive(Clone, Debug)]
pub struct RegularisationRound {
    pub index: usize,
    pub input_label: String,
    pub input: BiPoly,
    pub symbols: SymbolTable,
    pub bindings: Bindings,
    pub constraints: Vec<ResonanceConstraint>,
    pub cascades: Vec<CascadeResult>,
    /// Failed overlap or consistency checks (only with `verify`).
    pub verification_failures: Vec<String>,
}

impl RegularisationRound {
    pub fn label(&self) -> String {
        let mut ks: Vec<(u32, u32)> = self.cascades.iter().filter(|c| c.error.is_none()).map(|c| c.branching).collect();
        ks.sort_by(|a, b| b.cmp(a));
        let parts: Vec<String> = ks.iter().map(|&b| fragment(b)).collect();
        format!("({})", parts.join(","))
    }
}

fn fragment((k, l): (u32, u32)) -> String {
    if l == 1 {
        k.to_string()
    } else {
        format!("({k})_{l}")
    }
}

/// Label fragment of one cascade: `k`, or `(k)_l` with an l-fold covering.
pub fn classify_cascade(r: &CascadeResult) -> String {
    fragment(r.branching)
}

/// Solves a resonance condition for one function, returning the binding.
///
/// The condition must be linear in a single derivative `f^(n)`, `n >= 1`,
/// with a rational coefficient, `f` appearing nowhere else, and the rest
/// must integrate `n` times inside the ring.
pub fn solve_constraint(expr: &CoeffElem, symbols: &mut SymbolTable) -> Result<(Symbol, CoeffElem), RegError> {
    let mut best: Option<((bool, i64, i64), String, u32, Rational, CoeffElem)> = None;
    let names: Vec<String> = expr
        .generators()
        .into_iter()
        .filter_map(|g| match g {
            Gen::Fun(n, _) => Some(n.to_string()),
            _ => None,
        })
        .collect();
    for name in names {
        let orders = expr.orders_of(&name);
        let n = *orders.iter().max().unwrap();
        if n < 1 || orders.len() != 1 {
            continue;
        }
        let g = Gen::Fun(name.as_str().into(), n);
        let parts = expr.coefficients_in(&g);
        if parts.keys().any(|&p| p > 1) {
            continue;
        }
        let Some(c) = parts.get(&1).and_then(CoeffElem::as_rational) else {
            continue;
        };
        let rest = parts.get(&0).cloned().unwrap_or_default();
        let rank = symbols.function_rank(&name).map_or(0, |r| r as i64);
        let key = (!c.abs().is_one(), -(n as i64), -rank);
        if best.as_ref().is_none_or(|b| key < b.0) {
            best = Some((key, name, n, c, rest));
        }
    }
    let Some((_, name, n, c, rest)) = best else {
        return Err(RegError::UnsolvedConstraint(expr.to_string()));
    };
    let mut rhs = (-&rest).scale(&c.recip());
    for _ in 0..n {
        rhs = integrate_z(&rhs).ok_or_else(|| RegError::UnsolvedConstraint(expr.to_string()))?;
    }
    if rhs.is_zero() && n == 1 {
        symbols.promote(&name);
        return Ok((Symbol::Fun(name.clone()), CoeffElem::constant(&name)));
    }
    for i in 0..n {
        let fresh = symbols.fresh_constant(&format!("{name}_{i}"));
        rhs += &CoeffElem::constant(&fresh).mul_term(&Mono::gen(Gen::Z, i), &Rational::one());
    }
    Ok((Symbol::Fun(name), rhs))
}

fn compose_bindings(old: &Bindings, sym: &Symbol, img: &CoeffElem) -> Result<Bindings, RingError> {
    let new: Bindings = [(sym.clone(), img.clone())].into_iter().collect();
    let mut out = Bindings::new();
    for (k, v) in old {
        out.insert(k.clone(), v.substitute(&new)?);
    }
    out.insert(sym.clone(), img.clone());
    Ok(out)
}

type Branch = (TrailKind, (CoeffElem, CoeffElem), Result<HamSystem, BlowupError>);

struct Runner<'a> {
    cfg: &'a Config,
    symbols: SymbolTable,
    bind: Bindings,
    constraints: Vec<ResonanceConstraint>,
    results: Vec<CascadeResult>,
    original: HamSystem,
    failures: Vec<String>,
}

fn center_on_curve(cv: usize, t: CoeffElem) -> (CoeffElem, CoeffElem) {
    if cv == 0 {
        (CoeffElem::zero(), t)
    } else {
        (t, CoeffElem::zero())
    }
}

impl Runner<'_> {
    fn branches(&mut self, s: &HamSystem, check_inf: bool) -> Result<Vec<Branch>, RegError> {
        let (cv, fv) = s.chart.curve_vars().ok_or(BlowupError::NoCurve)?;
        let factors: Vec<LinearFactor> = match restricted_polynomial(s)? {
            Some(p) => blowup::linear_factors(&p)?,
            None => Vec::new(),
        };
        let mut out = Vec::new();
        for f in factors {
            let q = s.omega_mult.valuation_in(fv);
            if q <= -2 && !f.c0.is_zero() {
                let t = f.inverted_root().ok_or_else(|| BlowupError::UnresolvedCenter(format!("{f:?}")))?;
                let tw = apply_twist(s)?;
                let pt = center_on_curve(cv, t.clone());
                let next = self.step(&tw, &pt, cv == 0);
                out.push((TrailKind::Twist, pt, next));
                if self.cfg.explore_alternates {
                    let o = other_side(s)?;
                    let opt = center_on_curve(1 - cv, t);
                    let next = self.step(&o, &opt, cv != 0);
                    out.push((TrailKind::Alternate, opt, next));
                }
            } else {
                let r = f.root().ok_or_else(|| BlowupError::UnresolvedCenter(format!("{} t + {}", f.c1, f.c0)))?;
                let pt = center_on_curve(cv, r);
                let next = self.step(s, &pt, cv == 0);
                out.push((TrailKind::Plain, pt, next));
            }
        }
        if out.is_empty() && check_inf {
            let o = other_side(s)?;
            if origin_is_base_point(&o)? {
                let pt = (CoeffElem::zero(), CoeffElem::zero());
                let uv = o.chart.curve == Some(0);
                let next = self.step(&o, &pt, uv);
                out.push((TrailKind::Infinity, pt, next));
            }
        }
        Ok(out)
    }

    fn step(&mut self, s: &HamSystem, pt: &(CoeffElem, CoeffElem), uv_side: bool) -> Result<HamSystem, BlowupError> {
        let next = blow_up(s, pt, uv_side, self.cfg.max_blowups)?;
        if self.cfg.verify {
            self.check_overlap(s, pt, uv_side, &next);
        }
        Ok(next)
    }

    /// The two charts of one blow-up must agree on their overlap.
    fn check_overlap(&mut self, s: &HamSystem, pt: &(CoeffElem, CoeffElem), uv_side: bool, uv: &HamSystem) {
        let ok = (|| -> Result<bool, BlowupError> {
            let direct = blow_up(s, pt, !uv_side, u32::MAX)?;
            let moved = other_side(uv)?;
            Ok(direct.field.0.equals(&moved.field.0)
                && direct.field.1.equals(&moved.field.1)
                && direct.omega_mult.equals(&moved.omega_mult))
        })();
        if !matches!(ok, Ok(true)) {
            self.failures.push(format!("overlap at {}", uv.chart.name));
        }
    }

    fn check_origin(&mut self, s: &HamSystem, trail: &[TrailStep]) {
        let ok = self
            .original
            .substitute_coeffs(&self.bind)
            .map_err(BlowupError::from)
            .and_then(|o| agrees_with_origin(s, &o));
        if !matches!(ok, Ok(true)) {
            self.failures.push(format!("pullback at {}", render_trail(trail, false)));
        }
    }

    fn fail(&mut self, s: HamSystem, trail: Vec<TrailStep>, e: RegError) {
        self.results.push(CascadeResult {
            label: String::new(),
            base_point: 0,
            trail,
            final_system: s,
            hamiltonian: None,
            matrix: None,
            polygon: None,
            constraints: Vec::new(),
            branching: (1, 1),
            error: Some(e.to_string()),
            notes: Vec::new(),
            identified_with: None,
        });
    }

    fn cascade(&mut self, s: HamSystem, trail: Vec<TrailStep>) {
        let mut s = match s.substitute_coeffs(&self.bind) {
            Ok(s) => s,
            Err(e) => return self.fail(s, trail, e.into()),
        };
        if self.cfg.verify {
            self.check_origin(&s, &trail);
        }
        let mut branches = Vec::new();
        for _ in 0..8 {
            branches = match self.branches(&s, false) {
                Ok(b) => b,
                Err(e) => return self.fail(s, trail, e),
            };
            if !branches.is_empty() {
                break;
            }
            let defects = match regularity_defect(&s) {
                Ok(d) => d,
                Err(e) => return self.fail(s, trail, e.into()),
            };
            let open: Vec<CoeffElem> = defects.into_iter().filter(|d| !d.is_rational()).collect();
            if open.is_empty() {
                break;
            }
            let mut solved = None;
            let mut syms = self.symbols.clone();
            for e in &open {
                if let Ok(sol) = solve_constraint(e, &mut syms) {
                    solved = Some((e.clone(), sol));
                    break;
                }
            }
            let Some((expr, (sym, img))) = solved else {
                return self.fail(s, trail, RegError::UnsolvedConstraint(open[0].to_string()));
            };
            self.symbols = syms;
            self.bind = match compose_bindings(&self.bind, &sym, &img) {
                Ok(b) => b,
                Err(e) => return self.fail(s, trail, e.into()),
            };
            self.constraints.push(ResonanceConstraint {
                expr,
                solved_form: Some((sym, img)),
                found_at: render_trail(&trail, false),
            });
            s = match s.substitute_coeffs(&self.bind) {
                Ok(t) => t,
                Err(e) => return self.fail(s, trail, e.into()),
            };
        }
        if branches.is_empty() {
            branches = match self.branches(&s, true) {
                Ok(b) => b,
                Err(e) => return self.fail(s, trail, e),
            };
        }
        if branches.is_empty() {
            self.results.push(CascadeResult {
                label: String::new(),
                base_point: 0,
                trail,
                final_system: s,
                hamiltonian: None,
                matrix: None,
                polygon: None,
                constraints: Vec::new(),
                branching: (1, 1),
                error: None,
                notes: Vec::new(),
                identified_with: None,
            });
            return;
        }
        for (kind, center, next) in branches {
            let mut t = trail.clone();
            t.push(TrailStep { kind, center });
            match next {
                Ok(n) => self.cascade(n, t),
                Err(e) => self.fail(s.clone(), t, e.into()),
            }
        }
    }

    /// Imposes all constraints of the round on a final chart and recovers
    /// its Hamiltonian.
    fn finish(&self, r: &mut CascadeResult) {
        r.constraints = self
            .constraints
            .iter()
            .filter(|c| r.path().starts_with(&c.found_at))
            .cloned()
            .collect();
        if r.error.is_some() {
            return;
        }
        let s = match r.final_system.substitute_coeffs(&self.bind) {
            Ok(s) => s,
            Err(e) => {
                r.error = Some(e.to_string());
                return;
            }
        };
        match regularity_defect(&s) {
            Ok(d) if d.is_empty() => {}
            Ok(d) => {
                let shown: Vec<String> = d.iter().map(|c| c.to_string()).collect();
                r.error = Some(format!("{}: {}", RegError::Irregular, shown.join(", ")));
            }
            Err(e) => r.error = Some(e.to_string()),
        }
        let cv = s.chart.curve.unwrap_or(0);
        let (k, h) = match normalized_multiplier(&s.omega_mult) {
            Some(m) => {
                let (_, i, j) = m.as_rational_monomial().unwrap();
                let k = 1 + if cv == 0 { i } else { j }.max(0) as u32;
                match hamiltonian_from_field(&s.field.0, &s.field.1, &m) {
                    Ok(h) => (k, Some(h)),
                    Err(e) => {
                        r.notes.push(format!("no polynomial Hamiltonian: {e}"));
                        (k, None)
                    }
                }
            }
            None => {
                r.notes.push(format!("multiplier {} is not a monomial", s.omega_mult));
                (1 + s.omega_mult.valuation_in(cv).max(0) as u32, None)
            }
        };
        let l = s
            .chart
            .path
            .iter()
            .filter_map(|st| match st.kind {
                StepKind::Covering(l) => Some(l),
                _ => None,
            })
            .max()
            .unwrap_or(1);
        r.branching = (k, l);
        if let Some(h) = h {
            r.matrix = Some(CoeffMatrix::of(&h));
            match polygon_of(&h, self.cfg.include_constant) {
                Ok(p) => r.polygon = Some(p),
                Err(e) => r.notes.push(e.to_string()),
            }
            r.hamiltonian = Some(h);
        }
        r.final_system = s;
    }
}

/// Points of indeterminacy on the lines at infinity, in display order:
/// `(X,y)` chart, `(x,Y)` chart, then the corner `(X,Y) = (0,0)`.
pub fn boundary_points(charts: &[HamSystem]) -> Result<Vec<(usize, (CoeffElem, CoeffElem))>, BlowupError> {
    let mut out = Vec::new();
    for idx in [1, 2] {
        for bp in find_base_points(&charts[idx])? {
            let loc = bp.location.ok_or_else(|| BlowupError::UnresolvedCenter(format!("{:?}", bp.factor)))?;
            out.push((idx, loc));
        }
    }
    if origin_is_base_point(&charts[3])? {
        out.push((3, (CoeffElem::zero(), CoeffElem::zero())));
    }
    Ok(out)
}

/// Boundary points of `h` with the name of the chart they lie in.
pub fn boundary_points_of(h: &BiPoly) -> Result<Vec<(String, (CoeffElem, CoeffElem))>, RegError> {
    let charts = compactify(&HamSystem::from_hamiltonian(h)?)?;
    Ok(boundary_points(&charts)?.into_iter().map(|(i, p)| (charts[i].chart.name.clone(), p)).collect())
}

/// One regularisation round on a canonical system with Hamiltonian `h`.
pub fn run_round(h: &BiPoly, symbols: &SymbolTable, cfg: &Config) -> Result<RegularisationRound, RegError> {
    let sys = HamSystem::from_hamiltonian(h)?;
    let charts = compactify(&sys)?;
    let points = boundary_points(&charts)?;
    let mut run = Runner {
        cfg,
        symbols: symbols.clone(),
        bind: Bindings::new(),
        constraints: Vec::new(),
        results: Vec::new(),
        original: sys,
        failures: Vec::new(),
    };
    for (b, (idx, pt)) in points.into_iter().enumerate() {
        let first = run.results.len();
        let trail = vec![TrailStep { kind: TrailKind::Boundary(charts[idx].chart.name.clone()), center: pt.clone() }];
        let start = match charts[idx].substitute_coeffs(&run.bind) {
            Ok(c) => c,
            Err(e) => {
                run.fail(charts[idx].clone(), trail, e.into());
                continue;
            }
        };
        match blow_up(&start, &pt, true, cfg.max_blowups) {
            Ok(s) => run.cascade(s, trail),
            Err(e) => run.fail(start, trail, e.into()),
        }
        run.results[first..].iter_mut().for_each(|r| r.base_point = b + 1);
    }
    let mut results = std::mem::take(&mut run.results);
    for r in &mut results {
        run.finish(r);
    }
    Ok(RegularisationRound {
        index: 0,
        input_label: String::new(),
        input: h.clone(),
        symbols: run.symbols,
        bindings: run.bind,
        constraints: run.constraints,
        cascades: results,
        verification_failures: run.failures,
    })
}

#[derive(Clone, Debug)]
pub struct RankEntry {
    pub label: String,
    pub key: MinimalityKey,
    pub genus: u64,
}

#[derive(Clone, Debug)]
pub struct Identification {
    pub label: String,
    pub same_as: String,
}

#[derive(Clone, Debug)]
pub struct Iteration {
    pub rounds: Vec<RegularisationRound>,
    pub ranking: Vec<RankEntry>,
    pub identifications: Vec<Identification>,
}

/// Label components of a round's leaves: the base point index, with `-`
/// and `+` (or `.1`, `.2`, ... beyond two) when its cascade splits.
pub fn leaf_components(r: &RegularisationRound) -> Vec<String> {
    let count = |b: usize| r.cascades.iter().filter(|c| c.base_point == b).count();
    let mut seen = std::collections::BTreeMap::<usize, usize>::new();
    r.cascades
        .iter()
        .map(|c| {
            let n = count(c.base_point);
            let k = seen.entry(c.base_point).or_default();
            *k += 1;
            match n {
                1 => c.base_point.to_string(),
                2 => format!("{}{}", c.base_point, if *k == 1 { "-" } else { "+" }),
                _ => format!("{}.{}", c.base_point, k),
            }
        })
        .collect()
}

/// Names the leaves `H{round}^(parent..., component)`.
pub fn assign_labels(r: &mut RegularisationRound, parent: &[String]) {
    let comps = leaf_components(r);
    for (c, comp) in r.cascades.iter_mut().zip(comps) {
        let mut idx = parent.to_vec();
        idx.push(comp);
        c.label = format!("H{}^({})", r.index, idx.join(","));
    }
}

/// Runs `rounds` regularisation rounds. Round `k+1` takes every final
/// chart of round `k` that has a polynomial Hamiltonian as its input.
pub fn iterate(h: &BiPoly, symbols: &SymbolTable, rounds: usize, cfg: &Config) -> Result<Iteration, RegError> {
    let vars = h.vars().clone();
    let mut seen: Vec<(String, CoeffMatrix)> = vec![("H".into(), CoeffMatrix::of(h))];
    let mut ranking = Vec::new();
    if let Ok(p) = polygon_of(h, cfg.include_constant) {
        ranking.push(RankEntry { label: "H".into(), key: p.key(), genus: p.genus });
    }
    let mut out = Vec::new();
    let mut idents = Vec::new();
    let mut frontier: Vec<(Vec<String>, String, BiPoly, SymbolTable)> = vec![(vec![], "H".into(), h.clone(), symbols.clone())];
    for k in 0..rounds {
        let mut next = Vec::new();
        for (idx, label, input, syms) in frontier {
            let mut round = run_round(&input, &syms, cfg)?;
            round.index = k;
            round.input_label = label;
            assign_labels(&mut round, &idx);
            let comps = leaf_components(&round);
            for (c, comp) in round.cascades.iter_mut().zip(comps) {
                let clabel = c.label.clone();
                let mut cidx = idx.clone();
                cidx.push(comp);
                let Some(m) = &c.matrix else { continue };
                for (other, om) in &seen {
                    if om.substitute(&round.bindings).ok().as_ref() == Some(m) {
                        c.identified_with = Some(other.clone());
                        idents.push(Identification { label: clabel.clone(), same_as: other.clone() });
                        break;
                    }
                }
                if let Some(p) = &c.polygon {
                    ranking.push(RankEntry { label: clabel.clone(), key: p.key(), genus: p.genus });
                }
                let hh = c.hamiltonian.clone().unwrap().with_vars(&vars);
                next.push((cidx, clabel.clone(), hh, round.symbols.clone()));
            }
            for c in &round.cascades {
                if let Some(m) = &c.matrix {
                    seen.push((c.label.clone(), m.clone()));
                }
            }
            out.push(round);
        }
        frontier = next;
    }
    ranking.sort_by(|a, b| a.key.cmp(&b.key).then_with(|| a.label.cmp(&b.label)));
    Ok(Iteration { rounds: out, ranking, identifications: idents })
}

/// Constant bindings that turn `h` into `reference` coefficientwise.
///
/// Unknowns are the constants of `h` absent from `reference`. Each matrix
/// entry is split by powers of `z`; every piece must be linear in the
/// unknowns with rational coefficients.
pub fn match_to_reference(h: &BiPoly, reference: &BiPoly) -> Option<Bindings> {
    let ref_consts: std::collections::BTreeSet<Gen> = reference
        .terms()
        .flat_map(|(_, c)| c.generators())
        .filter(|g| matches!(g, Gen::Const(_)))
        .collect();
    let unknowns: Vec<Gen> = h
        .terms()
        .flat_map(|(_, c)| c.generators())
        .filter(|g| matches!(g, Gen::Const(_)) && !ref_consts.contains(g))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let h = h.clone().with_vars(reference.vars());
    if reference.terms().any(|(e, _)| h.coeff(e.0, e.1).is_zero()) {
        return None;
    }
    let diff = &h - reference;
    // Rows: coefficient vector over the unknowns, right-hand side.
    let mut rows: Vec<(Vec<Rational>, CoeffElem)> = Vec::new();
    for (_, e) in diff.terms() {
        for (_, piece) in e.coefficients_in(&Gen::Z) {
            let mut row = vec![Rational::zero(); unknowns.len()];
            let mut rhs = CoeffElem::zero();
            for (m, q) in piece.terms() {
                let hits: Vec<usize> = (0..unknowns.len()).filter(|&u| m.exponent(&unknowns[u]) > 0).collect();
                match hits.as_slice() {
                    [] => rhs -= &CoeffElem::from_term(m.clone(), q.clone()),
                    [u] if m.degree() == 1 => row[*u] += q,
                    _ => return None,
                }
            }
            rows.push((row, rhs));
        }
    }
    // Gaussian elimination over Q with ring-valued right-hand sides.
    let n = unknowns.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i].0[col].is_zero()) else { continue };
        rows.swap(r, p);
        let inv = rows[r].0[col].recip();
        rows[r].0.iter_mut().for_each(|x| *x *= &inv);
        rows[r].1 = rows[r].1.scale(&inv);
        for i in 0..rows.len() {
            if i != r && !rows[i].0[col].is_zero() {
                let f = rows[i].0[col].clone();
                let (pr, prhs) = rows[r].clone();
                for (x, y) in rows[i].0.iter_mut().zip(&pr) {
                    *x -= &f * y;
                }
                let sub = prhs.scale(&f);
                rows[i].1 -= &sub;
            }
        }
        pivots.push(col);
        r += 1;
    }
    if rows[r..].iter().any(|(_, rhs)| !rhs.is_zero()) {
        return None;
    }
    let mut out = Bindings::new();
    for (i, &col) in pivots.iter().enumerate() {
        if rows[i].0.iter().enumerate().any(|(c, x)| c != col && !x.is_zero()) {
            return None;
        }
        out.insert(Symbol::Const(unknowns[col].name().to_string()), rows[i].1.clone());
    }
    Some(out)
}

/// Renames chart variables to `(x, y)`; used to compare matrices across
/// charts.
pub fn canonical_vars(h: &BiPoly) -> BiPoly {
    h.clone().with_vars(&Vars::default())
}

fn constraint_json(c: &ResonanceConstraint, pretty: bool) -> Value {
    json!({
        "expr": c.expr.render(pretty),
        "binding": c.solved_form.as_ref().map(|(s, v)| json!({"symbol": s.name(), "value": v.render(pretty)})),
        "found_at": c.found_at,
    })
}

fn cascade_json(c: &CascadeResult, pretty: bool) -> Value {
    let s = &c.final_system;
    json!({
        "label": c.label,
        "path": render_trail(&c.trail, pretty),
        "chart": s.chart.name,
        "steps": s.chart.path.iter().map(|st| st.to_json(pretty)).collect::<Vec<_>>(),
        "omega_mult": s.omega_mult.render(pretty),
        "branching": {"k": c.branching.0, "l": c.branching.1},
        "status": c.error.clone().unwrap_or_else(|| "regular".into()),
        "notes": c.notes,
        "matrix": c.matrix.as_ref().map(|m| m.to_json(pretty)),
        "polygon": c.polygon.as_ref().map(NewtonPolygon::to_json),
        "identified_with": c.identified_with,
        "constraints": c.constraints.iter().map(|k| constraint_json(k, pretty)).collect::<Vec<_>>(),
    })
}

pub fn round_json(r: &RegularisationRound, pretty: bool) -> Value {
    json!({
        "round": r.index,
        "input": r.input_label,
        "input_matrix": CoeffMatrix::of(&r.input).to_json(pretty),
        "label": r.label(),
        "constraints": r.constraints.iter().map(|k| constraint_json(k, pretty)).collect::<Vec<_>>(),
        "cascades": r.cascades.iter().map(|c| cascade_json(c, pretty)).collect::<Vec<_>>(),
    })
}

/// The whole cascade tree as JSON.
pub fn tree_json(it: &Iteration, pretty: bool) -> Value {
    json!({
        "rounds": it.rounds.iter().map(|r| round_json(r, pretty)).collect::<Vec<_>>(),
        "identifications": it.identifications.iter().map(|i| json!({"label": i.label, "same_as": i.same_as})).collect::<Vec<_>>(),
        "ranking": it.ranking.iter().map(|e| json!({
            "label": e.label,
            "area": crate::coeffring::render_rational(&e.key.area),
            "max_total_degree": e.key.max_total_degree,
            "genus": e.genus,
        })).collect::<Vec<_>>(),
    })
}

/// File name used for the polygon drawing of a labelled Hamiltonian.
pub fn svg_name(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("{}.svg", s.trim_matches('_'))
}

/// Graphviz rendering: one node per Hamiltonian, arrows for rounds.
pub fn tree_dot(it: &Iteration) -> String {
    let mut s = String::from("digraph regularisation {\n  node [shape=box];\n");
    let mut declared = std::collections::BTreeSet::new();
    let area = |p: &Option<NewtonPolygon>| {
        p.as_ref()
            .map(|p| format!("area {}", crate::coeffring::render_rational(&p.area)))
            .unwrap_or_else(|| "no H".into())
    };
    for r in &it.rounds {
        if declared.insert(r.input_label.clone()) {
            let _ = writeln!(s, "  \"{0}\" [label=\"{0}\"];", r.input_label);
        }
        for c in &r.cascades {
            let status = match (&c.error, &c.identified_with) {
                (Some(_), _) => "error".to_string(),
                (None, Some(o)) => format!("= {o}"),
                (None, None) => area(&c.polygon),
            };
            let img = if c.polygon.is_some() { format!(", image=\"{}\"", svg_name(&c.label)) } else { String::new() };
            let _ = writeln!(s, "  \"{0}\" [label=\"{0}\\n{1}\"{img}];", c.label, status);
            declared.insert(c.label.clone());
            let _ = writeln!(s, "  \"{}\" -> \"{}\" [label=\"r{}\"];", r.input_label, c.label, r.index);
        }
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffring::rat;

    fn f(n: &str, k: u32) -> CoeffElem {
        CoeffElem::function(n, k)
    }

    #[test]
    fn first_order_zero_promotes() {
        let mut t = SymbolTable::with(&[], &["beta1"]).unwrap();
        let (s, v) = solve_constraint(&f("beta1", 1), &mut t).unwrap();
        assert_eq!(s, Symbol::Fun("beta1".into()));
        assert_eq!(v, CoeffElem::constant("beta1"));
        assert!(t.is_constant("beta1"));
    }

    #[test]
    fn second_order_with_source() {
        let mut t = SymbolTable::with(&[], &["beta", "beta2"]).unwrap();
        let e = &f("beta2", 2) - &f("beta", 2).scale(&rat(4, 1));
        let (s, v) = solve_constraint(&e, &mut t).unwrap();
        assert_eq!(s, Symbol::Fun("beta2".into()));
        assert_eq!(v.to_string(), "beta2_0 + 4*beta + beta2_1*z");
    }

    #[test]
    fn linear_second_order() {
        let mut t = SymbolTable::with(&[], &["beta"]).unwrap();
        let (_, v) = solve_constraint(&f("beta", 2), &mut t).unwrap();
        assert_eq!(v.to_string(), "beta_0 + beta_1*z");
    }

    #[test]
    fn nonlinear_rejected() {
        let mut t = SymbolTable::with(&[], &["beta"]).unwrap();
        let e = &f("beta", 1) * &f("beta", 1);
        assert!(solve_constraint(&e, &mut t).is_err());
    }
}
