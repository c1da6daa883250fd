//! Hamiltonian vector fields with a tracked 2-form multiplier.

use std::fmt;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::blowup::Chart;
use crate::coeffring::{rat, Bindings, CoeffElem};
use crate::polyrat::{BiPoly, BiRat, PolyError, Vars};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HamError {
    #[error("field is not Hamiltonian: {0}")]
    NotHamiltonian(String),
    #[error("multiplied field is not polynomial")]
    NotPolynomial,
    #[error("2-form multiplier is zero")]
    ZeroMultiplier,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// A vector field `(A' = F, B' = G)` in one chart, together with the
/// multiplier `m` in `dx ^ dy = m dA ^ dB`.
#[derive(Clone, Debug)]
pub struct HamSystem {
    pub chart: Chart,
    pub field: (BiRat, BiRat),
    pub hamiltonian: Option<BiPoly>,
    pub omega_mult: BiRat,
}

impl HamSystem {
    /// Canonical system `x' = H_y, y' = -H_x` in the original chart.
    pub fn from_hamiltonian(h: &BiPoly) -> Result<Self, HamError> {
        let vars = h.vars().clone();
        let m = BiRat::one(&vars);
        let field = field_from_hamiltonian(h, &m)?;
        Ok(HamSystem {
            chart: Chart::origin(&vars),
            field,
            hamiltonian: Some(h.clone()),
            omega_mult: m,
        })
    }

    pub fn vars(&self) -> &Vars {
        &self.chart.vars
    }

    pub fn substitute_coeffs(&self, b: &Bindings) -> Result<HamSystem, PolyError> {
        if b.is_empty() {
            return Ok(self.clone());
        }
        Ok(HamSystem {
            chart: self.chart.substitute_coeffs(b)?,
            field: (self.field.0.substitute_coeffs(b)?, self.field.1.substitute_coeffs(b)?),
            hamiltonian: self.hamiltonian.as_ref().map(|h| h.substitute_coeffs(b)).transpose()?,
            omega_mult: self.omega_mult.substitute_coeffs(b)?,
        })
    }

    /// Divergence of `m*(F, G)`; zero for Hamiltonian systems.
    pub fn divergence(&self) -> Result<BiRat, PolyError> {
        let mf = self.omega_mult.mul(&self.field.0)?;
        let mg = self.omega_mult.mul(&self.field.1)?;
        mf.partial(0)?.add(&mg.partial(1)?)
    }
}

/// `F = (1/m) dH/dB`, `G = -(1/m) dH/dA`.
pub fn field_from_hamiltonian(h: &BiPoly, m: &BiRat) -> Result<(BiRat, BiRat), HamError> {
    if m.is_zero() {
        return Err(HamError::ZeroMultiplier);
    }
    let inv = m.recip()?;
    let f = BiRat::from_poly(h.partial(1)).mul(&inv)?;
    let g = BiRat::from_poly(-&h.partial(0)).mul(&inv)?;
    Ok((f, g))
}

fn integrate(p: &BiPoly, k: usize) -> BiPoly {
    BiPoly::from_terms(
        p.terms().map(|(&(i, j), c)| {
            if k == 0 {
                ((i + 1, j), c.scale(&rat(1, i as i64 + 1)))
            } else {
                ((i, j + 1), c.scale(&rat(1, j as i64 + 1)))
            }
        }),
        p.vars(),
    )
}

/// Recovers `H` with `dH/dB = m F` and `dH/dA = -m G`, without constant
/// term. `m F` and `m G` must be polynomial.
pub fn hamiltonian_from_field(f: &BiRat, g: &BiRat, m: &BiRat) -> Result<BiPoly, HamError> {
    let mf = m.mul(f)?;
    let mg = m.mul(g)?;
    let (Some(p), Some(q)) = (mf.as_poly(), mg.as_poly()) else {
        return Err(HamError::NotPolynomial);
    };
    let div = &p.partial(0) + &q.partial(1);
    if !div.is_zero() {
        return Err(HamError::NotHamiltonian(format!("divergence {div}")));
    }
    let h1 = integrate(p, 1);
    let rest = &(-q) - &h1.partial(0);
    if rest.terms().any(|(&(_, j), _)| j > 0) {
        return Err(HamError::NotHamiltonian(format!("remainder {rest}")));
    }
    let mut h = &h1 + &integrate(&rest, 0);
    let c = h.coeff(0, 0);
    h.add_term((0, 0), -c);
    Ok(h)
}

/// Coefficients of `H`: row `i`, column `j` holds the coefficient of
/// `A^i B^j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffMatrix {
    rows: Vec<Vec<CoeffElem>>,
}

impl CoeffMatrix {
    pub fn of(h: &BiPoly) -> Self {
        if h.is_zero() {
            return CoeffMatrix { rows: Vec::new() };
        }
        let r = h.degree_in(0) as usize + 1;
        let c = h.degree_in(1) as usize + 1;
        let mut rows = vec![vec![CoeffElem::zero(); c]; r];
        for (&(i, j), v) in h.terms() {
            rows[i as usize][j as usize] = v.clone();
        }
        CoeffMatrix { rows }
    }

    pub fn rows(&self) -> &[Vec<CoeffElem>] {
        &self.rows
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.rows.first().map_or(0, Vec::len))
    }

    pub fn get(&self, i: usize, j: usize) -> CoeffElem {
        self.rows.get(i).and_then(|r| r.get(j)).cloned().unwrap_or_default()
    }

    pub fn to_poly(&self, vars: &Vars) -> BiPoly {
        BiPoly::from_terms(
            self.rows.iter().enumerate().flat_map(|(i, r)| {
                r.iter().enumerate().map(move |(j, c)| ((i as u32, j as u32), c.clone()))
            }),
            vars,
        )
    }

    pub fn from_rows(rows: Vec<Vec<CoeffElem>>) -> Self {
        let width = rows.iter().map(Vec::len).max().unwrap_or(0);
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.resize(width, CoeffElem::zero());
                r
            })
            .collect();
        CoeffMatrix::of(&CoeffMatrix { rows }.to_poly(&Vars::default()))
    }

    pub fn substitute(&self, b: &Bindings) -> Result<CoeffMatrix, crate::coeffring::RingError> {
        Ok(CoeffMatrix::of(&self.to_poly(&Vars::default()).substitute_coeffs(b)?))
    }

    pub fn rendered(&self, pretty: bool) -> Vec<Vec<String>> {
        self.rows.iter().map(|r| r.iter().map(|c| c.render(pretty)).collect()).collect()
    }

    /// Aligned plain-text rendering, one row per line.
    pub fn render_text(&self, pretty: bool) -> String {
        let cells = self.rendered(pretty);
        let (_, cols) = self.shape();
        let widths: Vec<usize> = (0..cols)
            .map(|j| cells.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in &cells {
            out.push_str("[ ");
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:>w$}", w = *w))
                .collect();
            out.push_str(&line.join("  "));
            out.push_str(" ]\n");
        }
        out
    }

    pub fn to_json(&self, pretty: bool) -> serde_json::Value {
        serde_json::to_value(MatrixJson { rows: self.rendered(pretty) }).unwrap_or_default()
    }
}

#[derive(Serialize)]
struct MatrixJson {
    rows: Vec<Vec<String>>,
}

impl fmt::Display for CoeffMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_text(false))
    }
}

pub fn coeff_matrix(h: &BiPoly) -> CoeffMatrix {
    CoeffMatrix::of(h)
}

/// `m` divided by its rational constant, when `m` is a rational multiple
/// of a monomial.
pub fn normalized_multiplier(m: &BiRat) -> Option<BiRat> {
    let (q, i, j) = m.as_rational_monomial()?;
    if q.is_zero() {
        return None;
    }
    Some(BiRat::monomial(i as i32, j as i32, CoeffElem::one(), m.vars()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffring::int;

    fn okamoto() -> BiPoly {
        let v = Vars::default();
        let x = BiPoly::var(0, &v);
        let y = BiPoly::var(1, &v);
        let k = |c: CoeffElem| BiPoly::constant(c, &v);
        let inner = &(&x.pow(2) + &(&k(CoeffElem::z().scale(&int(2))) * &x))
            + &k(CoeffElem::constant("kappa0").scale(&int(2)));
        &(&(&k(CoeffElem::from_int(2)) * &(&x * &y.pow(2))) - &(&inner * &y))
            + &(&k(CoeffElem::constant("thetainf")) * &x)
    }

    #[test]
    fn okamoto_field() {
        let h = okamoto();
        let (f, g) = field_from_hamiltonian(&h, &BiRat::one(h.vars())).unwrap();
        assert_eq!(f.to_string(), "4*x*y - x^2 - 2*z*x - 2*kappa0");
        assert_eq!(g.to_string(), "-2*y^2 + 2*x*y + 2*z*y - thetainf");
    }

    #[test]
    fn round_trip_drops_constant() {
        let h = okamoto();
        let m = BiRat::one(h.vars());
        let (f, g) = field_from_hamiltonian(&h, &m).unwrap();
        assert_eq!(hamiltonian_from_field(&f, &g, &m).unwrap(), h);
    }

    #[test]
    fn rotation_field() {
        let v = Vars::new("A", "B");
        let f = BiRat::var(1, &v);
        let g = BiRat::var(0, &v).neg();
        let h = hamiltonian_from_field(&f, &g, &BiRat::one(&v)).unwrap();
        assert_eq!(h.to_string(), "1/2*B^2 + 1/2*A^2");
    }

    #[test]
    fn non_hamiltonian_rejected() {
        let v = Vars::default();
        let f = BiRat::var(0, &v);
        let g = BiRat::zero(&v);
        assert!(matches!(
            hamiltonian_from_field(&f, &g, &BiRat::one(&v)),
            Err(HamError::NotHamiltonian(_))
        ));
    }

    #[test]
    fn okamoto_matrix() {
        let m = coeff_matrix(&okamoto());
        assert_eq!(
            m.rendered(false),
            vec![
                vec!["0", "-2*kappa0", "0"],
                vec!["thetainf", "-2*z", "2"],
                vec!["0", "-1", "0"],
            ]
        );
        assert_eq!(coeff_matrix(&BiPoly::zero(&Vars::default())).shape(), (0, 0));
    }
}
