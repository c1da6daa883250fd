//! Newton polygons of Hamiltonians: hull, area, genus and highest total
//! degree, with the minimality order used to rank Hamiltonians.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

use crate::coeffring::{rat, render_rational, Rational};
use crate::polyrat::BiPoly;

#[derive(Debug, Error)]
pub enum NewtonError {
    #[error("Hamiltonian has empty support")]
    EmptySupport,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Point = (i64, i64);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonPolygon {
    pub support: Vec<Point>,
    /// Hull vertices counterclockwise from the lowest-leftmost point,
    /// without collinear points.
    pub hull: Vec<Point>,
    pub area: Rational,
    /// Lattice points strictly inside the hull.
    pub genus: u64,
    /// Lattice points on the hull boundary.
    pub boundary_points: u64,
    pub max_total_degree: i64,
}

/// `(area, highest total degree)`, compared lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct MinimalityKey {
    pub area: Rational,
    pub max_total_degree: i64,
}

fn cross(o: Point, a: Point, b: Point) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn hull_of(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    // A collinear support collapses to its two end points.
    if lower.len() == 2 || lower.windows(3).all(|w| cross(w[0], w[1], w[2]) == 0) {
        let a = *pts.first().unwrap();
        let b = *pts.last().unwrap();
        return vec![a, b];
    }
    let start = (0..lower.len()).min_by_key(|&i| (lower[i].1, lower[i].0)).unwrap();
    lower.rotate_left(start);
    lower
}

fn twice_area(h: &[Point]) -> i64 {
    if h.len() < 3 {
        return 0;
    }
    let mut s = 0;
    for i in 0..h.len() {
        let (a, b) = (h[i], h[(i + 1) % h.len()]);
        s += a.0 * b.1 - b.0 * a.1;
    }
    s.abs()
}

/// Where a lattice point lies relative to a counterclockwise convex hull:
/// `Less` inside, `Equal` on the boundary, `Greater` outside.
fn locate(h: &[Point], p: Point) -> Ordering {
    match h.len() {
        0 => Ordering::Greater,
        1 => {
            if h[0] == p {
                Ordering::Equal
            } else {
                Ordering::Greater
            }
        }
        2 => {
            let (a, b) = (h[0], h[1]);
            let on = cross(a, b, p) == 0
                && (a.0.min(b.0)..=a.0.max(b.0)).contains(&p.0)
                && (a.1.min(b.1)..=a.1.max(b.1)).contains(&p.1);
            if on {
                Ordering::Equal
            } else {
                Ordering::Greater
            }
        }
        n => {
            let mut boundary = false;
            for i in 0..n {
                let c = cross(h[i], h[(i + 1) % n], p);
                if c < 0 {
                    return Ordering::Greater;
                }
                if c == 0 {
                    boundary = true;
                }
            }
            if boundary {
                Ordering::Equal
            } else {
                Ordering::Less
            }
        }
    }
}

fn bounding_box(h: &[Point]) -> (Point, Point) {
    let x0 = h.iter().map(|p| p.0).min().unwrap_or(0);
    let x1 = h.iter().map(|p| p.0).max().unwrap_or(0);
    let y0 = h.iter().map(|p| p.1).min().unwrap_or(0);
    let y1 = h.iter().map(|p| p.1).max().unwrap_or(0);
    ((x0, y0), (x1, y1))
}

/// Polygon of an explicit support.
pub fn polygon_of_support(points: &[Point]) -> Result<NewtonPolygon, NewtonError> {
    if points.is_empty() {
        return Err(NewtonError::EmptySupport);
    }
    let mut support = points.to_vec();
    support.sort();
    support.dedup();
    let hull = hull_of(&support);
    let ((x0, y0), (x1, y1)) = bounding_box(&hull);
    let (mut genus, mut boundary) = (0u64, 0u64);
    for i in x0..=x1 {
        for j in y0..=y1 {
            match locate(&hull, (i, j)) {
                Ordering::Less => genus += 1,
                Ordering::Equal => boundary += 1,
                Ordering::Greater => {}
            }
        }
    }
    Ok(NewtonPolygon {
        area: rat(twice_area(&hull), 2),
        max_total_degree: support.iter().map(|p| p.0 + p.1).max().unwrap_or(0),
        support,
        hull,
        genus,
        boundary_points: boundary,
    })
}

/// Newton polygon of `H`; the constant monomial is dropped unless
/// `include_constant` is set.
pub fn polygon_of(h: &BiPoly, include_constant: bool) -> Result<NewtonPolygon, NewtonError> {
    let pts: Vec<Point> = h
        .support()
        .into_iter()
        .filter(|&e| include_constant || e != (0, 0))
        .map(|(i, j)| (i as i64, j as i64))
        .collect();
    polygon_of_support(&pts)
}

impl NewtonPolygon {
    pub fn key(&self) -> MinimalityKey {
        MinimalityKey { area: self.area.clone(), max_total_degree: self.max_total_degree }
    }

    pub fn is_degenerate(&self) -> bool {
        self.hull.len() < 3
    }

    /// Number of boundary lattice points from the hull edges alone.
    pub fn boundary_from_edges(&self) -> u64 {
        match self.hull.len() {
            0 => 0,
            1 => 1,
            2 => {
                let (a, b) = (self.hull[0], self.hull[1]);
                ((b.0 - a.0).abs().gcd(&(b.1 - a.1).abs()) + 1) as u64
            }
            n => (0..n)
                .map(|i| {
                    let (a, b) = (self.hull[i], self.hull[(i + 1) % n]);
                    (b.0 - a.0).abs().gcd(&(b.1 - a.1).abs()) as u64
                })
                .sum(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(PolygonJson {
            area: render_rational(&self.area),
            genus: self.genus,
            max_total_degree: self.max_total_degree,
            hull: self.hull.iter().map(|p| [p.0, p.1]).collect(),
        })
        .unwrap_or_default()
    }

    pub fn summary(&self) -> String {
        format!(
            "area: {}, genus: {}, max_total_degree: {}",
            render_rational(&self.area),
            self.genus,
            self.max_total_degree
        )
    }
}

#[derive(Serialize)]
struct PolygonJson {
    area: String,
    genus: u64,
    max_total_degree: i64,
    hull: Vec<[i64; 2]>,
}

pub fn compare_minimality(a: &NewtonPolygon, b: &NewtonPolygon) -> Ordering {
    a.key().cmp(&b.key())
}

const CELL: i64 = 40;
const MARGIN: i64 = 30;

/// Deterministic SVG drawing: lattice grid, hull, support points in black,
/// other lattice points of the hull in orange, interior points ringed.
pub fn render_svg(p: &NewtonPolygon) -> String {
    let w = p.support.iter().map(|q| q.0).max().unwrap_or(0).max(1) + 1;
    let h = p.support.iter().map(|q| q.1).max().unwrap_or(0).max(1) + 1;
    let px = |q: Point| (MARGIN + q.0 * CELL, MARGIN + (h - q.1) * CELL);
    let (width, height) = (2 * MARGIN + w * CELL, 2 * MARGIN + h * CELL);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    s.push_str("<g class=\"grid\" stroke=\"#ddd\" stroke-width=\"1\">\n");
    for i in 0..=w {
        let (x, y0) = px((i, 0));
        let (_, y1) = px((i, h));
        let _ = writeln!(s, r#"<line x1="{x}" y1="{y0}" x2="{x}" y2="{y1}"/>"#);
    }
    for j in 0..=h {
        let (x0, y) = px((0, j));
        let (x1, _) = px((w, j));
        let _ = writeln!(s, r#"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}"/>"#);
    }
    s.push_str("</g>\n");
    let coords: Vec<String> = p
        .hull
        .iter()
        .map(|&q| {
            let (x, y) = px(q);
            format!("{x},{y}")
        })
        .collect();
    match p.hull.len() {
        0 | 1 => {}
        2 => {
            let _ = writeln!(
                s,
                r#"<polyline class="hull" points="{}" fill="none" stroke="black" stroke-width="2"/>"#,
                coords.join(" ")
            );
        }
        _ => {
            let _ = writeln!(
                s,
                r##"<path class="hull" d="M {} Z" fill="#cfe3f7" stroke="black" stroke-width="2"/>"##,
                coords.join(" L ")
            );
        }
    }
    let ((x0, y0), (x1, y1)) = bounding_box(&p.hull);
    for i in x0..=x1 {
        for j in y0..=y1 {
            let loc = locate(&p.hull, (i, j));
            if loc == Ordering::Greater {
                continue;
            }
            let (x, y) = px((i, j));
            if loc == Ordering::Less {
                let _ = writeln!(
                    s,
                    r#"<circle class="interior" cx="{x}" cy="{y}" r="9" fill="none" stroke="gray"/>"#
                );
            }
            if p.support.binary_search(&(i, j)).is_err() {
                let _ = writeln!(s, r#"<circle class="lattice" cx="{x}" cy="{y}" r="5" fill="orange"/>"#);
            }
        }
    }
    for &q in &p.support {
        let (x, y) = px(q);
        let _ = writeln!(s, r#"<circle class="support" cx="{x}" cy="{y}" r="6" fill="black"/>"#);
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_svg(p: &NewtonPolygon, path: &Path) -> Result<(), NewtonError> {
    std::fs::write(path, render_svg(p))?;
    Ok(())
}
