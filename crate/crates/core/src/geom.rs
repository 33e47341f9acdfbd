//! Small planar geometry kernel shared by the mesh, interface and FE modules.

pub type Point = [f64; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale(s: f64, a: Point) -> Point {
    [s * a[0], s * a[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn lerp(a: Point, b: Point, s: f64) -> Point {
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

/// Twice the signed area of (a, b, c); positive for counterclockwise order.
#[inline]
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

pub fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * orient(a, b, c)
}

/// Barycentric coordinates of `p` in triangle (a, b, c).
pub fn barycentric(a: Point, b: Point, c: Point, p: Point) -> [f64; 3] {
    let det = orient(a, b, c);
    let l1 = orient(p, b, c) / det;
    let l2 = orient(a, p, c) / det;
    [l1, l2, 1.0 - l1 - l2]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn of(points: &[Point]) -> Self {
        let mut b = BBox { min: [f64::INFINITY; 2], max: [f64::NEG_INFINITY; 2] };
        for p in points {
            b.min[0] = b.min[0].min(p[0]);
            b.min[1] = b.min[1].min(p[1]);
            b.max[0] = b.max[0].max(p[0]);
            b.max[1] = b.max[1].max(p[1]);
        }
        b
    }

    pub fn inflate(self, d: f64) -> Self {
        BBox { min: [self.min[0] - d, self.min[1] - d], max: [self.max[0] + d, self.max[1] + d] }
    }

    pub fn overlaps(&self, o: &BBox) -> bool {
        self.min[0] <= o.max[0] && o.min[0] <= self.max[0] && self.min[1] <= o.max[1] && o.min[1] <= self.max[1]
    }
}

fn on_segment(p: Point, q: Point, r: Point) -> bool {
    q[0] <= p[0].max(r[0]) && q[0] >= p[0].min(r[0]) && q[1] <= p[1].max(r[1]) && q[1] >= p[1].min(r[1])
}

/// Closed segment intersection test (touching counts).
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, p1, q2))
        || (d2 == 0.0 && on_segment(q1, p2, q2))
        || (d3 == 0.0 && on_segment(p1, q1, p2))
        || (d4 == 0.0 && on_segment(p1, q2, p2))
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let l2 = dot(ab, ab);
    if l2 == 0.0 {
        return dist(p, a);
    }
    let s = (dot(sub(p, a), ab) / l2).clamp(0.0, 1.0);
    dist(p, lerp(a, b, s))
}

pub fn point_in_triangle(tri: &[Point; 3], p: Point, tol: f64) -> bool {
    let l = barycentric(tri[0], tri[1], tri[2], p);
    l.iter().all(|&x| x >= -tol)
}

/// Closed segment / closed triangle intersection.
pub fn segment_intersects_triangle(a: Point, b: Point, tri: &[Point; 3]) -> bool {
    if point_in_triangle(tri, a, 0.0) || point_in_triangle(tri, b, 0.0) {
        return true;
    }
    (0..3).any(|e| segments_intersect(a, b, tri[e], tri[(e + 1) % 3]))
}

pub fn segment_triangle_distance(a: Point, b: Point, tri: &[Point; 3]) -> f64 {
    if segment_intersects_triangle(a, b, tri) {
        return 0.0;
    }
    let mut d = f64::INFINITY;
    for e in 0..3 {
        let (p, q) = (tri[e], tri[(e + 1) % 3]);
        d = d.min(point_segment_distance(p, a, b));
        d = d.min(point_segment_distance(a, p, q));
        d = d.min(point_segment_distance(b, p, q));
    }
    d
}

/// Parameter interval of the segment a + s (b - a), s in [0, 1], inside a CCW triangle.
pub fn clip_segment_to_triangle(a: Point, b: Point, tri: &[Point; 3]) -> Option<(f64, f64)> {
    let (mut s0, mut s1) = (0.0f64, 1.0f64);
    let d = sub(b, a);
    for e in 0..3 {
        let p = tri[e];
        let q = tri[(e + 1) % 3];
        // inside iff orient(p, q, x) >= 0
        let fa = orient(p, q, a);
        let fd = cross(sub(q, p), d);
        if fd == 0.0 {
            if fa < 0.0 {
                return None;
            }
            continue;
        }
        let s = -fa / fd;
        if fd > 0.0 {
            s0 = s0.max(s);
        } else {
            s1 = s1.min(s);
        }
        if s0 > s1 {
            return None;
        }
    }
    Some((s0, s1))
}

/// Winding number of a closed polygon around `p`.
pub fn winding_number(poly: &[Point], p: Point) -> i32 {
    let n = poly.len();
    let mut w = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a[1] <= p[1] {
            if b[1] > p[1] && orient(a, b, p) > 0.0 {
                w += 1;
            }
        } else if b[1] <= p[1] && orient(a, b, p) < 0.0 {
            w -= 1;
        }
    }
    w
}

pub fn point_in_polygon(poly: &[Point], p: Point) -> bool {
    winding_number(poly, p) != 0
}

pub fn polygon_signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        s += cross(poly[i], poly[(i + 1) % n]);
    }
    0.5 * s
}

/// Signed area and area-weighted centroid numerator (the centroid is m / area).
pub fn polygon_moments(poly: &[Point]) -> (f64, Point) {
    let n = poly.len();
    if n < 3 {
        return (0.0, [0.0, 0.0]);
    }
    // shift to the first vertex to limit cancellation
    let o = poly[0];
    let mut a = 0.0;
    let mut m = [0.0, 0.0];
    for i in 1..n - 1 {
        let p = sub(poly[i], o);
        let q = sub(poly[i + 1], o);
        let c = cross(p, q);
        a += c;
        m[0] += c * (p[0] + q[0]);
        m[1] += c * (p[1] + q[1]);
    }
    let area = 0.5 * a;
    let mx = m[0] / 6.0 + area * o[0];
    let my = m[1] / 6.0 + area * o[1];
    (area, [mx, my])
}

/// Sutherland-Hodgman clip of an arbitrary polygon by a CCW triangle.
pub fn clip_polygon_by_triangle(subject: &[Point], tri: &[Point; 3]) -> Vec<Point> {
    let mut out: Vec<Point> = subject.to_vec();
    for e in 0..3 {
        if out.is_empty() {
            break;
        }
        let p = tri[e];
        let q = tri[(e + 1) % 3];
        let input = std::mem::take(&mut out);
        let n = input.len();
        for i in 0..n {
            let cur = input[i];
            let prev = input[(i + n - 1) % n];
            let fc = orient(p, q, cur);
            let fp = orient(p, q, prev);
            if fc >= 0.0 {
                if fp < 0.0 {
                    out.push(lerp(prev, cur, fp / (fp - fc)));
                }
                out.push(cur);
            } else if fp >= 0.0 {
                out.push(lerp(prev, cur, fp / (fp - fc)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barycentric_quarter() {
        let l = barycentric([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.25, 0.25]);
        assert!((l[0] - 0.5).abs() < 1e-15 && (l[1] - 0.25).abs() < 1e-15 && (l[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn clip_square_by_triangle() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let tri = [[0.5, -1.0], [2.0, 0.5], [0.5, 2.0]];
        let c = clip_polygon_by_triangle(&sq, &tri);
        let (a, _) = polygon_moments(&c);
        // part of the unit square with x >= 0.5 lies inside the triangle entirely
        assert!((a - 0.5).abs() < 1e-14, "{a}");
    }

    #[test]
    fn segment_clip_interval() {
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let (s0, s1) = clip_segment_to_triangle([-1.0, 0.25], [1.0, 0.25], &tri).unwrap();
        assert!((s0 - 0.5).abs() < 1e-15 && (s1 - 0.875).abs() < 1e-15);
        assert!(clip_segment_to_triangle([2.0, 2.0], [3.0, 3.0], &tri).is_none());
    }

    #[test]
    fn winding() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(point_in_polygon(&sq, [0.5, 0.5]));
        assert!(!point_in_polygon(&sq, [1.5, 0.5]));
        assert_eq!(polygon_signed_area(&sq), 1.0);
    }
}
