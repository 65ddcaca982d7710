//! Integer planar geometry on pixel centers: hulls, containment, segment tests.

pub(crate) type Pt = (i64, i64);

fn cross(o: Pt, a: Pt, b: Pt) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain. Counterclockwise, no collinear points; one or two
/// points for degenerate input.
pub(crate) fn convex_hull(points: &[Pt]) -> Vec<Pt> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Pt> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn on_segment(a: Pt, b: Pt, p: Pt) -> bool {
    cross(a, b, p) == 0
        && p.0 >= a.0.min(b.0)
        && p.0 <= a.0.max(b.0)
        && p.1 >= a.1.min(b.1)
        && p.1 <= a.1.max(b.1)
}

/// Closed containment in a hull produced by `convex_hull`.
pub(crate) fn in_hull(hull: &[Pt], p: Pt) -> bool {
    match hull.len() {
        0 => false,
        1 => hull[0] == p,
        2 => on_segment(hull[0], hull[1], p),
        k => (0..k).all(|i| cross(hull[i], hull[(i + 1) % k], p) >= 0),
    }
}

fn segments_intersect(a: Pt, b: Pt, c: Pt, d: Pt) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)) {
        return true;
    }
    on_segment(c, d, a) || on_segment(c, d, b) || on_segment(a, b, c) || on_segment(a, b, d)
}

fn edges(hull: &[Pt]) -> Vec<(Pt, Pt)> {
    match hull.len() {
        0 => vec![],
        1 => vec![(hull[0], hull[0])],
        k => (0..k).map(|i| (hull[i], hull[(i + 1) % k])).collect(),
    }
}

/// Whether two closed hulls share a point.
pub(crate) fn hulls_intersect(a: &[Pt], b: &[Pt]) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    if a.iter().any(|&p| in_hull(b, p)) || b.iter().any(|&p| in_hull(a, p)) {
        return true;
    }
    let (ea, eb) = (edges(a), edges(b));
    ea.iter()
        .any(|&(p, q)| eb.iter().any(|&(r, s)| segments_intersect(p, q, r, s)))
}

/// Grid points (r, c) with r < rows, c < cols inside the closed hull.
pub(crate) fn hull_grid_points(hull: &[Pt], rows: usize, cols: usize) -> Vec<Pt> {
    if hull.is_empty() {
        return vec![];
    }
    let r0 = hull.iter().map(|p| p.0).min().unwrap().max(0);
    let r1 = hull.iter().map(|p| p.0).max().unwrap().min(rows as i64 - 1);
    let c0 = hull.iter().map(|p| p.1).min().unwrap().max(0);
    let c1 = hull.iter().map(|p| p.1).max().unwrap().min(cols as i64 - 1);
    let mut out = Vec::new();
    for r in r0..=r1 {
        for c in c0..=c1 {
            if in_hull(hull, (r, c)) {
                out.push((r, c));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior() {
        let pts = [(0, 0), (0, 2), (2, 0), (2, 2), (1, 1), (0, 1)];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!(in_hull(&h, (1, 2)));
        assert!(!in_hull(&h, (3, 1)));
        assert_eq!(hull_grid_points(&h, 5, 5).len(), 9);
    }

    #[test]
    fn degenerate_hulls() {
        let seg = convex_hull(&[(0, 0), (2, 2), (1, 1)]);
        assert_eq!(seg, vec![(0, 0), (2, 2)]);
        assert!(in_hull(&seg, (1, 1)));
        assert!(!in_hull(&seg, (1, 0)));
        let crossing = convex_hull(&[(0, 2), (2, 0)]);
        assert!(hulls_intersect(&seg, &crossing));
        let apart = convex_hull(&[(0, 3), (0, 4)]);
        assert!(!hulls_intersect(&seg, &apart));
    }
}
