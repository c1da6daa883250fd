//! Charts on P1 x P1, base points, blow-ups and the intermediate twist and
//! covering changes, with exact pullback of fields and 2-form multipliers.

use serde::Serialize;
use thiserror::Error;

use crate::coeffring::{Bindings, CoeffElem};
use crate::hamiltonian::HamSystem;
use crate::polyrat::{BiRat, PolyError, UniPoly, Vars};

/// Default cap on blow-ups along one cascade.
pub const MAX_BLOWUPS: u32 = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BlowupError {
    #[error("center does not split over the coefficient ring: {0}")]
    UnresolvedCenter(String),
    #[error("cascade exceeded {0} blow-ups")]
    CascadeOverflow(u32),
    #[error("chart has no marked curve")]
    NoCurve,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    AffineChartSwitch,
    BlowupUv,
    #[serde(rename = "blowup-UV")]
    BlowupUV,
    Twist,
    Covering(u32),
}

/// One coordinate change, old variables written in the new ones.
#[derive(Clone, Debug)]
pub struct TransformStep {
    pub kind: StepKind,
    pub center: Option<(CoeffElem, CoeffElem)>,
    pub jacobian_factor: BiRat,
    pub chart: String,
}

#[derive(Serialize)]
struct StepJson {
    kind: StepKind,
    center: Option<[String; 2]>,
    jacobian_factor: String,
    chart: String,
}

impl TransformStep {
    pub fn to_json(&self, pretty: bool) -> serde_json::Value {
        let s = StepJson {
            kind: self.kind.clone(),
            center: self.center.as_ref().map(|(a, b)| [a.render(pretty), b.render(pretty)]),
            jacobian_factor: self.jacobian_factor.render(pretty),
            chart: self.chart.clone(),
        };
        serde_json::to_value(s).unwrap_or_default()
    }
}

/// An affine chart reached from the original one.
#[derive(Clone, Debug)]
pub struct Chart {
    pub name: String,
    pub vars: Vars,
    /// The original variables written in this chart's variables.
    pub to_origin: (BiRat, BiRat),
    /// Index of the variable whose zero set is the marked curve: the
    /// boundary line or the last exceptional curve.
    pub curve: Option<usize>,
    pub depth: u32,
    pub path: Vec<TransformStep>,
}

impl Chart {
    pub fn origin(vars: &Vars) -> Self {
        Chart {
            name: format!("{},{}", vars.first(), vars.second()),
            vars: vars.clone(),
            to_origin: (BiRat::var(0, vars), BiRat::var(1, vars)),
            curve: None,
            depth: 0,
            path: Vec::new(),
        }
    }

    pub fn substitute_coeffs(&self, b: &Bindings) -> Result<Chart, PolyError> {
        let mut c = self.clone();
        c.to_origin = (self.to_origin.0.substitute_coeffs(b)?, self.to_origin.1.substitute_coeffs(b)?);
        Ok(c)
    }

    /// `(curve variable, fiber variable)`.
    pub fn curve_vars(&self) -> Option<(usize, usize)> {
        self.curve.map(|k| (k, 1 - k))
    }
}

/// Linear factor `c1*t + c0` of a polynomial in the fiber variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearFactor {
    pub c1: CoeffElem,
    pub c0: CoeffElem,
}

impl LinearFactor {
    /// The root `-c0/c1`, if it lies in the ring.
    pub fn root(&self) -> Option<CoeffElem> {
        (-&self.c0).div_exact(&self.c1)
    }

    /// The root of the factor after `t -> 1/t`, i.e. `-c1/c0`.
    pub fn inverted_root(&self) -> Option<CoeffElem> {
        if self.c0.is_zero() {
            return None;
        }
        (-&self.c1).div_exact(&self.c0)
    }

    fn render(&self) -> String {
        match self.root() {
            Some(r) => r.to_string(),
            None => format!("-({})/({})", self.c0, self.c1),
        }
    }

    fn same_root(&self, o: &LinearFactor) -> bool {
        &self.c1 * &o.c0 == &o.c1 * &self.c0
    }
}

/// A point of indeterminacy on the marked curve.
#[derive(Clone, Debug)]
pub struct BasePoint {
    pub chart: String,
    /// Location when the root lies in the coefficient ring.
    pub location: Option<(CoeffElem, CoeffElem)>,
    pub factor: LinearFactor,
    pub multiplicity_hint: u32,
}

fn swap_case(name: &str) -> String {
    let mut c = name.chars();
    match c.next() {
        Some(f) if f.is_ascii_lowercase() => f.to_ascii_uppercase().to_string() + c.as_str(),
        Some(f) => f.to_ascii_lowercase().to_string() + c.as_str(),
        None => String::new(),
    }
}

fn constant(c: &CoeffElem, vars: &Vars) -> BiRat {
    BiRat::constant(c.clone(), vars)
}

/// Pulls a system back along `old = phi(new)`:
/// `new field = J^-1 (field o phi - d phi/dz)`, `m_new = (m o phi) det J`.
pub fn pullback(
    sys: &HamSystem,
    vars: &Vars,
    phi: (BiRat, BiRat),
    kind: StepKind,
    center: Option<(CoeffElem, CoeffElem)>,
    curve: Option<usize>,
    depth: u32,
) -> Result<HamSystem, BlowupError> {
    let (pa, pb) = phi;
    let j11 = pa.partial(0)?;
    let j12 = pa.partial(1)?;
    let j21 = pb.partial(0)?;
    let j22 = pb.partial(1)?;
    let det = j11.mul(&j22)?.sub(&j12.mul(&j21)?)?;
    let r1 = sys.field.0.compose(&pa, &pb)?.sub(&pa.d_dz()?)?;
    let r2 = sys.field.1.compose(&pa, &pb)?.sub(&pb.d_dz()?)?;
    let inv = det.recip()?;
    let f = j22.mul(&r1)?.sub(&j12.mul(&r2)?)?.mul(&inv)?;
    let g = j11.mul(&r2)?.sub(&j21.mul(&r1)?)?.mul(&inv)?;
    let m = sys.omega_mult.compose(&pa, &pb)?.mul(&det)?;
    let to_origin = (
        sys.chart.to_origin.0.compose(&pa, &pb)?,
        sys.chart.to_origin.1.compose(&pa, &pb)?,
    );
    let name = format!("{},{}", vars.first(), vars.second());
    let mut path = sys.chart.path.clone();
    path.push(TransformStep { kind, center, jacobian_factor: det, chart: name.clone() });
    Ok(HamSystem {
        chart: Chart { name, vars: vars.clone(), to_origin, curve, depth, path },
        field: (f, g),
        hamiltonian: None,
        omega_mult: m,
    })
}

/// The four affine charts `(x,y)`, `(X,y)`, `(x,Y)`, `(X,Y)` with
/// `X = 1/x`, `Y = 1/y`.
pub fn compactify(sys: &HamSystem) -> Result<Vec<HamSystem>, BlowupError> {
    let v = sys.vars();
    let (a, b) = (v.first().to_string(), v.second().to_string());
    let (ua, ub) = (swap_case(&a), swap_case(&b));
    let mut out = vec![sys.clone()];
    for (na, nb, inv_a, inv_b, curve) in [
        (&ua, &b, true, false, 0),
        (&a, &ub, false, true, 1),
        (&ua, &ub, true, true, 0),
    ] {
        let nv = Vars::new(na, nb);
        let img = |k: usize, inv: bool| {
            if inv {
                BiRat::monomial(-((k == 0) as i32), -((k == 1) as i32), CoeffElem::one(), &nv)
            } else {
                BiRat::var(k, &nv)
            }
        };
        let phi = (img(0, inv_a), img(1, inv_b));
        out.push(pullback(sys, &nv, phi, StepKind::AffineChartSwitch, None, Some(curve), 0)?);
    }
    Ok(out)
}

/// Exponent of the curve variable in the weight that clears the zero of
/// the multiplier along the curve.
fn weight(sys: &HamSystem, cv: usize) -> BiRat {
    let p = sys.omega_mult.valuation_in(cv).max(0) as i32;
    let (i, j) = if cv == 0 { (p, 0) } else { (0, p) };
    BiRat::monomial(i, j, CoeffElem::one(), sys.vars())
}

/// Scaled field components with their pole orders along the curve.
fn weighted_components(sys: &HamSystem, cv: usize) -> Result<Vec<(u32, BiRat)>, PolyError> {
    let w = weight(sys, cv);
    let mut out = Vec::new();
    for e in [&sys.field.0, &sys.field.1] {
        let r = w.mul(e)?;
        let k = if cv == 0 { r.den().mono.0 } else { r.den().mono.1 };
        out.push((k, r));
    }
    Ok(out)
}

fn den_restricted(r: &BiRat, cv: usize) -> UniPoly {
    let mono = if cv == 0 { r.den().mono.1 } else { r.den().mono.0 };
    let mut v = vec![CoeffElem::zero(); mono as usize];
    v.push(CoeffElem::one());
    let mut d = UniPoly::new(v);
    for (f, e) in &r.den().factors {
        let fr = f.restrict_zero(cv);
        for _ in 0..*e {
            d = d.mul(&fr);
        }
    }
    d
}

/// Common zeros on the curve of the components with the highest pole
/// order, as a single polynomial in the fiber variable.
pub fn restricted_polynomial(sys: &HamSystem) -> Result<Option<UniPoly>, BlowupError> {
    let (cv, _) = sys.chart.curve_vars().ok_or(BlowupError::NoCurve)?;
    let comps = weighted_components(sys, cv)?;
    let top = comps.iter().map(|c| c.0).max().unwrap_or(0);
    if top == 0 {
        return Ok(None);
    }
    let mut acc: Option<UniPoly> = None;
    for (k, r) in &comps {
        if *k < top {
            continue;
        }
        let mut n0 = r.num().restrict_zero(cv);
        let d0 = den_restricted(r, cv);
        let g = n0.gcd(&d0);
        if g.degree() > 0 {
            n0 = n0.pseudo_divmod(&g).0;
        }
        acc = Some(match acc {
            None => n0,
            Some(a) => a.gcd(&n0),
        });
    }
    Ok(acc.filter(|p| p.degree() > 0))
}

/// Splits a polynomial in one variable into distinct linear factors.
pub fn linear_factors(p: &UniPoly) -> Result<Vec<LinearFactor>, BlowupError> {
    let mut out = Vec::new();
    if p.valuation() > 0 {
        out.push(LinearFactor { c1: CoeffElem::one(), c0: CoeffElem::zero() });
    }
    let q = p.strip_valuation().squarefree();
    match q.degree() {
        d if d <= 0 => {}
        1 => out.push(LinearFactor { c1: q.coeff(1), c0: q.coeff(0) }),
        2 => {
            let (a, b, c) = (q.coeff(2), q.coeff(1), q.coeff(0));
            let disc = &(&b * &b) - &(&(&a * &c) * &CoeffElem::from_int(4));
            let s = disc.sqrt_exact().ok_or_else(|| BlowupError::UnresolvedCenter(q.render("t")))?;
            let two_a = &a * &CoeffElem::from_int(2);
            out.push(LinearFactor { c1: two_a.clone(), c0: &b - &s });
            out.push(LinearFactor { c1: two_a, c0: &b + &s });
        }
        _ => return Err(BlowupError::UnresolvedCenter(q.render("t"))),
    }
    let mut uniq: Vec<LinearFactor> = Vec::new();
    for f in out {
        if !uniq.iter().any(|g| g.same_root(&f)) {
            uniq.push(f);
        }
    }
    uniq.sort_by_key(|f| f.render());
    Ok(uniq)
}

/// Base points on the marked curve of a chart.
pub fn find_base_points(sys: &HamSystem) -> Result<Vec<BasePoint>, BlowupError> {
    let Some(p) = restricted_polynomial(sys)? else {
        return Ok(Vec::new());
    };
    let (cv, _) = sys.chart.curve_vars().ok_or(BlowupError::NoCurve)?;
    let mult = p.degree() as u32;
    Ok(linear_factors(&p)?
        .into_iter()
        .map(|f| BasePoint {
            chart: sys.chart.name.clone(),
            location: f.root().map(|r| {
                if cv == 0 {
                    (CoeffElem::zero(), r)
                } else {
                    (r, CoeffElem::zero())
                }
            }),
            factor: f,
            multiplicity_hint: mult,
        })
        .collect())
}

/// Whether the chart origin is a base point on the marked curve.
pub fn origin_is_base_point(sys: &HamSystem) -> Result<bool, BlowupError> {
    Ok(restricted_polynomial(sys)?.is_some_and(|p| p.coeff(0).is_zero()))
}

/// Blow-up at `center`. The uv side writes `A = a + u, B = b + u v` with
/// exceptional curve `u = 0`; the UV side writes `A = a + U V, B = b + V`
/// with exceptional curve `V = 0`.
pub fn blow_up(
    sys: &HamSystem,
    center: &(CoeffElem, CoeffElem),
    uv_side: bool,
    max_blowups: u32,
) -> Result<HamSystem, BlowupError> {
    let d = sys.chart.depth + 1;
    if d > max_blowups {
        return Err(BlowupError::CascadeOverflow(max_blowups));
    }
    let (a, b) = center;
    if uv_side {
        let v = Vars::new(&format!("u{d}"), &format!("v{d}"));
        let u = BiRat::var(0, &v);
        let uvv = u.mul(&BiRat::var(1, &v))?;
        let phi = (constant(a, &v).add(&u)?, constant(b, &v).add(&uvv)?);
        pullback(sys, &v, phi, StepKind::BlowupUv, Some(center.clone()), Some(0), d)
    } else {
        let v = Vars::new(&format!("U{d}"), &format!("V{d}"));
        let vv = BiRat::var(1, &v);
        let uvv = BiRat::var(0, &v).mul(&vv)?;
        let phi = (constant(a, &v).add(&uvv)?, constant(b, &v).add(&vv)?);
        pullback(sys, &v, phi, StepKind::BlowupUV, Some(center.clone()), Some(1), d)
    }
}

/// Inverts the fiber variable: `v = 1/v~` on a uv chart, `U = 1/U~` on a
/// UV chart.
pub fn apply_twist(sys: &HamSystem) -> Result<HamSystem, BlowupError> {
    let (cv, fv) = sys.chart.curve_vars().ok_or(BlowupError::NoCurve)?;
    let old = sys.vars();
    let names: Vec<String> = (0..2)
        .map(|k| {
            let n = old.get(k);
            if k != fv {
                n.to_string()
            } else if let Some(s) = n.strip_suffix('t') {
                s.to_string()
            } else {
                format!("{n}t")
            }
        })
        .collect();
    let v = Vars::new(&names[0], &names[1]);
    let inv = BiRat::monomial(-((fv == 0) as i32), -((fv == 1) as i32), CoeffElem::one(), &v);
    let phi = if fv == 1 { (BiRat::var(0, &v), inv) } else { (inv, BiRat::var(1, &v)) };
    pullback(sys, &v, phi, StepKind::Twist, None, Some(cv), sys.chart.depth)
}

/// Moves to the other chart of the last blow-up: `u = U V, v = 1/U` from a
/// uv chart, `U = 1/v, V = u v` from a UV chart.
pub fn other_side(sys: &HamSystem) -> Result<HamSystem, BlowupError> {
    let (cv, _) = sys.chart.curve_vars().ok_or(BlowupError::NoCurve)?;
    let d = sys.chart.depth;
    if cv == 0 {
        let v = Vars::new(&format!("U{d}"), &format!("V{d}"));
        let phi = (
            BiRat::var(0, &v).mul(&BiRat::var(1, &v))?,
            BiRat::monomial(-1, 0, CoeffElem::one(), &v),
        );
        pullback(sys, &v, phi, StepKind::AffineChartSwitch, None, Some(1), d)
    } else {
        let v = Vars::new(&format!("u{d}"), &format!("v{d}"));
        let phi = (
            BiRat::monomial(0, -1, CoeffElem::one(), &v),
            BiRat::var(0, &v).mul(&BiRat::var(1, &v))?,
        );
        pullback(sys, &v, phi, StepKind::AffineChartSwitch, None, Some(0), d)
    }
}

/// The l-fold covering `u = u^/v^, v = v^^l` (or `U = U^^l, V = V^/U^`).
pub fn apply_covering(sys: &HamSystem, l: u32) -> Result<HamSystem, BlowupError> {
    let (cv, _) = sys.chart.curve_vars().ok_or(BlowupError::NoCurve)?;
    let old = sys.vars();
    let v = Vars::new(&format!("{}h", old.first()), &format!("{}h", old.second()));
    let a = BiRat::var(0, &v);
    let b = BiRat::var(1, &v);
    let phi = if cv == 0 {
        (a.div(&b)?, b.pow(l as i32)?)
    } else {
        (a.pow(l as i32)?, b.div(&a)?)
    };
    pullback(sys, &v, phi, StepKind::Covering(l), None, Some(cv), sys.chart.depth)
}

/// Coefficients of the weighted field that obstruct regularity along the
/// marked curve. Empty means regular there.
pub fn regularity_defect(sys: &HamSystem) -> Result<Vec<CoeffElem>, BlowupError> {
    let (cv, _) = sys.chart.curve_vars().ok_or(BlowupError::NoCurve)?;
    let mut out = Vec::new();
    for (k, r) in weighted_components(sys, cv)? {
        if k == 0 {
            continue;
        }
        for (&(i, j), c) in r.num().terms().rev() {
            let p = if cv == 0 { i } else { j };
            if p < k {
                out.push(c.clone());
            }
        }
    }
    Ok(out)
}

/// Checks that the chart's field is the pullback of the original field:
/// differentiating `to_origin` along the chart field must give the
/// original field evaluated through `to_origin`.
pub fn agrees_with_origin(sys: &HamSystem, original: &HamSystem) -> Result<bool, BlowupError> {
    let (pa, pb) = &sys.chart.to_origin;
    let (f, g) = &sys.field;
    for (t, target) in [(pa, &original.field.0), (pb, &original.field.1)] {
        let lhs = t.partial(0)?.mul(f)?.add(&t.partial(1)?.mul(g)?)?.add(&t.d_dz()?)?;
        let rhs = target.compose(pa, pb)?;
        if !lhs.equals(&rhs) {
            return Ok(false);
        }
    }
    Ok(true)
}
