//! Piecewise-linear maps from a 2-D control plane to filter-parameter space.
//!
//! A set of control points in the plane, each paired with a parameter vector,
//! is triangulated. The same index triples, read against the parameter
//! vectors, form the image complex, and a point inside a triangle is sent to
//! the combination of its vertices' vectors with the same barycentric
//! weights. Points outside the hull are first moved to the nearest hull
//! point, so results never leave the convex hull of the authored vectors.

mod delaunay;

pub use delaunay::{
    check_points, in_circumcircle, incircle, orient, triangulate, AREA_TOLERANCE, DUPLICATE_TOLERANCE,
};

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

/// Slack allowed on barycentric coordinates when testing containment.
pub const BARYCENTRIC_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("need at least 3 control points, got {0}")]
    TooFewPoints(usize),
    #[error("control point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("control points {first} and {second} coincide")]
    DuplicatePoint { first: usize, second: usize },
    #[error("control points are collinear")]
    Collinear,
    #[error("pair {index}: parameter vector has {found} values, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, found: usize },
    #[error("parameter vectors are empty")]
    EmptyCodomain,
    #[error("triangle {index} is degenerate (area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },
    #[error("triangulation is not a valid complex: {0}")]
    InvalidComplex(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// One control point and the parameter vector it stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPair<T> {
    pub domain: [T; 2],
    pub codomain: Vec<T>,
}

impl<T> PointPair<T> {
    pub fn new(domain: [T; 2], codomain: Vec<T>) -> Self {
        PointPair { domain, codomain }
    }
}

/// Where a query point falls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Triangle(usize),
    Outside,
}

/// A hull edge and the triangle it bounds, directed counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HullEdge {
    pub from: usize,
    pub to: usize,
    pub triangle: usize,
}

/// Nearest hull point of an outside query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullProjection<T> {
    pub point: [T; 2],
    pub edge: HullEdge,
    /// Position along the edge: 0 at `from`, 1 at `to`.
    pub t: T,
}

/// Barycentric coordinates of `p` in triangle `(a, b, c)`.
pub fn barycentric<T: Scalar>(a: [T; 2], b: [T; 2], c: [T; 2], p: [T; 2]) -> Result<[T; 3], MapError> {
    let area = orient(a, b, c);
    if area.abs() <= T::lit(2.0 * AREA_TOLERANCE) {
        return Err(MapError::DegenerateTriangle {
            index: 0,
            area: (area / T::lit(2.0)).as_f64(),
        });
    }
    Ok([orient(p, b, c) / area, orient(a, p, c) / area, orient(a, b, p) / area])
}

/// Undirected edge to the (triangle, from, to) records that use it.
type EdgeOwners = HashMap<(usize, usize), Vec<(usize, usize, usize)>>;

/// Validated control points, their triangulation and derived hull.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialMap<T> {
    points: Vec<[T; 2]>,
    values: Vec<Vec<T>>,
    dim: usize,
    triangles: Vec<[usize; 3]>,
    hull: Vec<HullEdge>,
}

impl<T: Scalar> SimplicialMap<T> {
    /// Triangulates the pairs and checks every structural invariant.
    pub fn new(pairs: Vec<PointPair<T>>) -> Result<Self, MapError> {
        let dim = pairs.first().map_or(0, |p| p.codomain.len());
        for (index, pair) in pairs.iter().enumerate() {
            if pair.codomain.len() != dim {
                return Err(MapError::DimensionMismatch {
                    index,
                    expected: dim,
                    found: pair.codomain.len(),
                });
            }
            if pair.codomain.iter().any(|v| !v.is_finite()) {
                return Err(MapError::NonFinite { index });
            }
        }
        if !pairs.is_empty() && dim == 0 {
            return Err(MapError::EmptyCodomain);
        }
        let points: Vec<[T; 2]> = pairs.iter().map(|p| p.domain).collect();
        let triangles = triangulate(&points)?;
        let values = pairs.into_iter().map(|p| p.codomain).collect();
        let mut map = SimplicialMap {
            points,
            values,
            dim,
            triangles,
            hull: Vec::new(),
        };
        map.hull = map.check_complex()?;
        Ok(map)
    }

    fn check_complex(&self) -> Result<Vec<HullEdge>, MapError> {
        let half = T::lit(0.5);
        for (index, t) in self.triangles.iter().enumerate() {
            let area = orient(self.points[t[0]], self.points[t[1]], self.points[t[2]]) * half;
            if !(area > T::lit(AREA_TOLERANCE)) {
                return Err(MapError::DegenerateTriangle {
                    index,
                    area: area.as_f64(),
                });
            }
        }
        let mut owners: EdgeOwners = HashMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                owners.entry((a.min(b), a.max(b))).or_default().push((ti, a, b));
            }
        }
        let mut hull = Vec::new();
        for (edge, list) in &owners {
            match list.len() {
                1 => hull.push(HullEdge {
                    from: list[0].1,
                    to: list[0].2,
                    triangle: list[0].0,
                }),
                2 => {
                    if list[0].1 == list[1].1 {
                        return Err(MapError::InvalidComplex(format!(
                            "edge {edge:?} has the same orientation in both triangles"
                        )));
                    }
                }
                n => {
                    return Err(MapError::InvalidComplex(format!("edge {edge:?} shared by {n} triangles")));
                }
            }
        }
        hull.sort_by_key(|e| (e.from, e.to));
        let mut used = vec![false; self.points.len()];
        for t in &self.triangles {
            for &v in t {
                used[v] = true;
            }
        }
        if let Some(unused) = used.iter().position(|u| !u) {
            return Err(MapError::InvalidComplex(format!("point {unused} is not in any triangle")));
        }
        // the triangles must tile the hull exactly
        let tri_area = self.triangles.iter().fold(T::zero(), |acc, t| {
            acc + orient(self.points[t[0]], self.points[t[1]], self.points[t[2]]) * half
        });
        let hull_area = hull.iter().fold(T::zero(), |acc, e| {
            let (a, b) = (self.points[e.from], self.points[e.to]);
            acc + (a[0] * b[1] - b[0] * a[1]) * half
        });
        if (tri_area - hull_area).abs() > T::lit(1e-9) * hull_area.abs().max(T::one()) {
            return Err(MapError::InvalidComplex(format!(
                "triangle area {tri_area} differs from hull area {hull_area}"
            )));
        }
        Ok(hull)
    }

    /// Reads the map text format:
    ///
    /// ```text
    /// n 6
    /// # lat lon : parameters
    /// 0.0 0.0 : 1.0 440 2.0 0.5 880 1.0
    /// ```
    pub fn parse(text: &str) -> Result<Self, MapError> {
        let mut dim: Option<usize> = None;
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let parse_err = |reason: String| MapError::Parse { line, reason };
            if dim.is_none() {
                let mut it = content.split_whitespace();
                if it.next() != Some("n") {
                    return Err(parse_err("expected header `n <dim>`".into()));
                }
                let n = it
                    .next()
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|&n| n > 0)
                    .ok_or_else(|| parse_err("header dimension must be a positive integer".into()))?;
                if it.next().is_some() {
                    return Err(parse_err("trailing text after header".into()));
                }
                dim = Some(n);
                continue;
            }
            let expected = dim.unwrap();
            let (lhs, rhs) = content
                .split_once(':')
                .ok_or_else(|| parse_err("expected `lat lon : v1 ... vn`".into()))?;
            let coords = parse_numbers(lhs).map_err(parse_err)?;
            if coords.len() != 2 {
                return Err(parse_err(format!("expected 2 coordinates, found {}", coords.len())));
            }
            let values = parse_numbers(rhs).map_err(parse_err)?;
            if values.len() != expected {
                return Err(MapError::DimensionMismatch {
                    index: pairs.len(),
                    expected,
                    found: values.len(),
                });
            }
            pairs.push(PointPair {
                domain: [T::lit(coords[0]), T::lit(coords[1])],
                codomain: values.into_iter().map(T::lit).collect(),
            });
        }
        if dim.is_none() {
            return Err(MapError::Parse {
                line: 0,
                reason: "missing header `n <dim>`".into(),
            });
        }
        Self::new(pairs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[T; 2]] {
        &self.points
    }

    pub fn value(&self, i: usize) -> &[T] {
        &self.values[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn hull(&self) -> &[HullEdge] {
        &self.hull
    }

    pub fn triangle_points(&self, t: usize) -> [[T; 2]; 3] {
        let tri = self.triangles[t];
        [self.points[tri[0]], self.points[tri[1]], self.points[tri[2]]]
    }

    /// Barycentric coordinates of `p` relative to triangle `t`.
    pub fn weights(&self, t: usize, p: [T; 2]) -> [T; 3] {
        let [a, b, c] = self.triangle_points(t);
        barycentric(a, b, c, p).expect("validated triangles are non-degenerate")
    }

    /// Lowest-index triangle whose closed region contains `p`.
    pub fn locate(&self, p: [T; 2]) -> Location {
        let tol = -T::lit(BARYCENTRIC_TOLERANCE);
        (0..self.triangles.len())
            .find(|&t| self.weights(t, p).iter().all(|&w| w >= tol))
            .map_or(Location::Outside, Location::Triangle)
    }

    /// Nearest point on the hull boundary.
    pub fn project_to_hull(&self, p: [T; 2]) -> HullProjection<T> {
        let mut best: Option<(T, HullProjection<T>)> = None;
        for edge in &self.hull {
            let (a, b) = (self.points[edge.from], self.points[edge.to]);
            let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
            let len2 = ex * ex + ey * ey;
            let t = (((p[0] - a[0]) * ex + (p[1] - a[1]) * ey) / len2).max(T::zero()).min(T::one());
            let q = [a[0] + t * ex, a[1] + t * ey];
            let d2 = (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]);
            if best.as_ref().is_none_or(|(bd, _)| d2 < *bd) {
                best = Some((d2, HullProjection { point: q, edge: *edge, t }));
            }
        }
        best.expect("a valid map has a hull").1
    }

    /// Evaluates the map at `p`, clamping outside points to the hull.
    pub fn interpolate(&self, p: [T; 2]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        self.interpolate_into(p, &mut out);
        out
    }

    pub fn interpolate_into(&self, p: [T; 2], out: &mut [T]) {
        assert_eq!(out.len(), self.dim);
        match self.locate(p) {
            Location::Triangle(t) => self.interpolate_in(t, p, out),
            Location::Outside => {
                let proj = self.project_to_hull(p);
                let (qa, qb) = (&self.values[proj.edge.from], &self.values[proj.edge.to]);
                let wa = T::one() - proj.t;
                for ((o, &a), &b) in out.iter_mut().zip(qa).zip(qb) {
                    *o = wa * a + proj.t * b;
                }
            }
        }
    }

    /// Evaluates with the weights of triangle `t`, without locating.
    pub fn interpolate_in(&self, t: usize, p: [T; 2], out: &mut [T]) {
        let tri = self.triangles[t];
        let w = self.weights(t, p);
        let (qa, qb, qc) = (&self.values[tri[0]], &self.values[tri[1]], &self.values[tri[2]]);
        for (i, o) in out.iter_mut().enumerate() {
            *o = w[0] * qa[i] + w[1] * qb[i] + w[2] * qc[i];
        }
    }
}

fn parse_numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split_whitespace()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("cannot parse number {s:?}"))
        })
        .collect()
}

impl<T: Scalar> fmt::Display for SimplicialMap<T> {
    /// Writes the map file format (the triangulation is not stored).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n {}", self.dim)?;
        for (p, v) in self.points.iter().zip(&self.values) {
            write!(f, "{} {} :", p[0], p[1])?;
            for x in v {
                write!(f, " {x}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
