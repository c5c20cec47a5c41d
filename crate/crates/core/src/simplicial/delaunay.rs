//! Delaunay triangulation of a planar point set.
//!
//! Points are inserted in lexicographic order, each one outside the current
//! hull, and fanned to the hull edges it can see. Lawson edge flips then
//! remove every edge whose opposite vertex lies strictly inside the
//! neighbouring circumcircle. Edges between cocircular quadruples are legal
//! either way; among those, the diagonal with the lexicographically smaller
//! sorted index pair is kept, which makes the mesh independent of insertion
//! details.

use std::collections::HashMap;

use crate::scalar::Scalar;

use super::MapError;

/// Duplicate-point tolerance, in domain units.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;
/// Minimum triangle area, in squared domain units.
pub const AREA_TOLERANCE: f64 = 1e-12;
/// Relative tolerance of the in-circle predicate.
const INCIRCLE_TOLERANCE: f64 = 1e-12;

/// Twice the signed area of `(a, b, c)`; positive when counter-clockwise.
pub fn orient<T: Scalar>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// In-circle determinant for counter-clockwise `(a, b, c)`: positive when `d`
/// is strictly inside the circumcircle. Also returns a magnitude bound for
/// scaling tolerances.
pub fn incircle<T: Scalar>(a: [T; 2], b: [T; 2], c: [T; 2], d: [T; 2]) -> (T, T) {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let alift = adx * adx + ady * ady;
    let blift = bdx * bdx + bdy * bdy;
    let clift = cdx * cdx + cdy * cdy;
    let det = alift * (bdx * cdy - bdy * cdx) + blift * (cdx * ady - cdy * adx) + clift * (adx * bdy - ady * bdx);
    let mag = alift * (bdx * cdy).abs().max((bdy * cdx).abs())
        + blift * (cdx * ady).abs().max((cdy * adx).abs())
        + clift * (adx * bdy).abs().max((ady * bdx).abs());
    (det, mag)
}

/// True when `d` is strictly inside the circumcircle of counter-clockwise `(a, b, c)`.
pub fn in_circumcircle<T: Scalar>(a: [T; 2], b: [T; 2], c: [T; 2], d: [T; 2]) -> bool {
    let (det, mag) = incircle(a, b, c, d);
    det > mag * T::lit(INCIRCLE_TOLERANCE)
}

fn cocircular<T: Scalar>(a: [T; 2], b: [T; 2], c: [T; 2], d: [T; 2]) -> bool {
    let (det, mag) = incircle(a, b, c, d);
    det.abs() <= mag * T::lit(INCIRCLE_TOLERANCE)
}

/// Checks the preconditions shared by triangulation and map validation.
pub fn check_points<T: Scalar>(points: &[[T; 2]]) -> Result<(), MapError> {
    if points.len() < 3 {
        return Err(MapError::TooFewPoints(points.len()));
    }
    for (i, p) in points.iter().enumerate() {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(MapError::NonFinite { index: i });
        }
    }
    let tol = T::lit(DUPLICATE_TOLERANCE);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let (dx, dy) = (points[i][0] - points[j][0], points[i][1] - points[j][1]);
            if (dx * dx + dy * dy).sqrt() <= tol {
                return Err(MapError::DuplicatePoint { first: i, second: j });
            }
        }
    }
    // farthest pair from point 0, then the widest triangle on that base
    let far = (1..points.len())
        .max_by(|&i, &j| dist2(points[0], points[i]).partial_cmp(&dist2(points[0], points[j])).unwrap())
        .unwrap();
    let widest = points
        .iter()
        .map(|&p| orient(points[0], points[far], p).abs())
        .fold(T::zero(), T::max);
    if widest <= T::lit(2.0 * AREA_TOLERANCE) {
        return Err(MapError::Collinear);
    }
    Ok(())
}

fn dist2<T: Scalar>(a: [T; 2], b: [T; 2]) -> T {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    dx * dx + dy * dy
}

/// Delaunay triangulation as counter-clockwise index triples.
///
/// Output is canonical: each triple starts at its smallest index and the list
/// is sorted.
pub fn triangulate<T: Scalar>(points: &[[T; 2]]) -> Result<Vec<[usize; 3]>, MapError> {
    check_points(points)?;
    let mut tris = sweep(points)?;
    legalize(points, &mut tris);
    break_ties(points, &mut tris);
    Ok(canonical(tris))
}

fn ccw<T: Scalar>(points: &[[T; 2]], t: [usize; 3]) -> [usize; 3] {
    if orient(points[t[0]], points[t[1]], points[t[2]]) < T::zero() {
        [t[0], t[2], t[1]]
    } else {
        t
    }
}

fn sweep<T: Scalar>(points: &[[T; 2]]) -> Result<Vec<[usize; 3]>, MapError> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i][0]
            .partial_cmp(&points[j][0])
            .unwrap()
            .then(points[i][1].partial_cmp(&points[j][1]).unwrap())
            .then(i.cmp(&j))
    });
    // collinear prefix
    let (o0, o1) = (order[0], order[1]);
    let apex_pos = (2..order.len())
        .find(|&k| orient(points[o0], points[o1], points[order[k]]) != T::zero())
        .ok_or(MapError::Collinear)?;
    let apex = order[apex_pos];
    let mut tris = Vec::new();
    for w in order[..apex_pos].windows(2) {
        tris.push(ccw(points, [w[0], w[1], apex]));
    }
    let mut hull: Vec<usize> = order[..apex_pos].to_vec();
    hull.push(apex);
    if orient(points[o0], points[order[apex_pos - 1]], points[apex]) < T::zero() {
        hull.reverse();
    }

    for &p in &order[apex_pos + 1..] {
        let n = hull.len();
        let visible: Vec<bool> = (0..n)
            .map(|i| orient(points[hull[i]], points[hull[(i + 1) % n]], points[p]) < T::zero())
            .collect();
        // a point beyond the lexicographic maximum always sees some edge
        let Some(first) = (0..n).find(|&i| visible[i] && !visible[(i + n - 1) % n]) else {
            return Err(MapError::Collinear);
        };
        let mut count = 0;
        while visible[(first + count) % n] {
            let a = hull[(first + count) % n];
            let b = hull[(first + count + 1) % n];
            tris.push([b, a, p]);
            count += 1;
        }
        // keep hull[first] and hull[first + count], replace those between with p
        let mut next = Vec::with_capacity(n + 1);
        for k in 0..(n - count) {
            next.push(hull[(first + count + k) % n]);
        }
        next.push(hull[first]);
        next.push(p);
        hull = next;
    }
    Ok(tris)
}

type EdgeMap = HashMap<(usize, usize), Vec<usize>>;

fn edge_map(tris: &[[usize; 3]]) -> EdgeMap {
    let mut map: EdgeMap = HashMap::new();
    for (ti, t) in tris.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            map.entry((a.min(b), a.max(b))).or_default().push(ti);
        }
    }
    map
}

fn opposite(t: [usize; 3], a: usize, b: usize) -> usize {
    *t.iter().find(|&&v| v != a && v != b).unwrap()
}

/// Vertices of `t` rotated so the edge `(u, v)` appears as `t[0] -> t[1]`.
fn rotate_to_edge(t: [usize; 3], u: usize, v: usize) -> Option<[usize; 3]> {
    (0..3)
        .map(|r| [t[r], t[(r + 1) % 3], t[(r + 2) % 3]])
        .find(|r| (r[0] == u && r[1] == v) || (r[0] == v && r[1] == u))
}

/// Flips shared edge `(u, v)` between triangles `t1` and `t2` if the flip is
/// geometrically valid. Returns the two new triangles.
fn flip<T: Scalar>(points: &[[T; 2]], t1: [usize; 3], t2: [usize; 3], u: usize, v: usize) -> Option<[[usize; 3]; 2]> {
    let c = opposite(t1, u, v);
    let d = opposite(t2, u, v);
    let (pc, pd) = (points[c], points[d]);
    let su = orient(pc, pd, points[u]);
    let sv = orient(pc, pd, points[v]);
    // u and v must be strictly on opposite sides of cd
    if !((su > T::zero() && sv < T::zero()) || (su < T::zero() && sv > T::zero())) {
        return None;
    }
    Some([ccw(points, [c, d, u]), ccw(points, [c, d, v])])
}

fn legalize<T: Scalar>(points: &[[T; 2]], tris: &mut [[usize; 3]]) {
    loop {
        let edges = edge_map(tris);
        let mut keys: Vec<_> = edges.keys().copied().collect();
        keys.sort_unstable();
        let mut touched = vec![false; tris.len()];
        let mut flipped = false;
        for (u, v) in keys {
            let owners = &edges[&(u, v)];
            if owners.len() != 2 || touched[owners[0]] || touched[owners[1]] {
                continue;
            }
            let (i1, i2) = (owners[0], owners[1]);
            let (t1, t2) = (tris[i1], tris[i2]);
            let r = rotate_to_edge(t1, u, v).unwrap();
            let d = opposite(t2, u, v);
            if !in_circumcircle(points[r[0]], points[r[1]], points[r[2]], points[d]) {
                continue;
            }
            if let Some([n1, n2]) = flip(points, t1, t2, u, v) {
                tris[i1] = n1;
                tris[i2] = n2;
                touched[i1] = true;
                touched[i2] = true;
                flipped = true;
            }
        }
        if !flipped {
            break;
        }
    }
}

fn break_ties<T: Scalar>(points: &[[T; 2]], tris: &mut [[usize; 3]]) {
    loop {
        let edges = edge_map(tris);
        let mut keys: Vec<_> = edges.keys().copied().collect();
        keys.sort_unstable();
        let mut flipped = false;
        for (u, v) in keys {
            let owners = &edges[&(u, v)];
            if owners.len() != 2 {
                continue;
            }
            let (i1, i2) = (owners[0], owners[1]);
            let (t1, t2) = (tris[i1], tris[i2]);
            let c = opposite(t1, u, v);
            let d = opposite(t2, u, v);
            if (c.min(d), c.max(d)) >= (u, v) {
                continue;
            }
            let r = rotate_to_edge(t1, u, v).unwrap();
            if !cocircular(points[r[0]], points[r[1]], points[r[2]], points[d]) {
                continue;
            }
            if let Some([n1, n2]) = flip(points, t1, t2, u, v) {
                tris[i1] = n1;
                tris[i2] = n2;
                flipped = true;
                break;
            }
        }
        if !flipped {
            break;
        }
    }
}

fn canonical(tris: Vec<[usize; 3]>) -> Vec<[usize; 3]> {
    let mut out: Vec<[usize; 3]> = tris
        .into_iter()
        .map(|t| {
            let r = (0..3).min_by_key(|&r| t[r]).unwrap();
            [t[r], t[(r + 1) % 3], t[(r + 2) % 3]]
        })
        .collect();
    out.sort_unstable();
    out
}
