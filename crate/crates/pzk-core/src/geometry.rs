//! Planar polygon utilities: winding numbers, hulls, diameters, distances, simplicity.

use num_complex::Complex64;

const CHUNK: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub min: Complex64,
    pub max: Complex64,
}

impl BBox {
    pub fn of(points: &[Complex64]) -> BBox {
        let mut b = BBox {
            min: Complex64::new(f64::INFINITY, f64::INFINITY),
            max: Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        for p in points {
            b.min.re = b.min.re.min(p.re);
            b.min.im = b.min.im.min(p.im);
            b.max.re = b.max.re.max(p.re);
            b.max.im = b.max.im.max(p.im);
        }
        b
    }

    pub fn distance(&self, other: &BBox) -> f64 {
        let dx = (other.min.re - self.max.re).max(self.min.re - other.max.re).max(0.0);
        let dy = (other.min.im - self.max.im).max(self.min.im - other.max.im).max(0.0);
        dx.hypot(dy)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.min.re && z.re <= self.max.re && z.im >= self.min.im && z.im <= self.max.im
    }
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Winding number of the closed polygon around `z`.
pub fn winding_number(poly: &[Complex64], z: Complex64) -> i32 {
    let n = poly.len();
    let mut w = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a.im <= z.im {
            if b.im > z.im && cross(b - a, z - a) > 0.0 {
                w += 1;
            }
        } else if b.im <= z.im && cross(b - a, z - a) < 0.0 {
            w -= 1;
        }
    }
    w
}

pub fn signed_area(poly: &[Complex64]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>() / 2.0
}

pub fn point_segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_sqr();
    if l2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a).re * ab.re + (z - a).im * ab.im) / l2;
    (z - (a + ab * t.clamp(0.0, 1.0))).norm()
}

fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    cross(b - a, c - a)
}

/// Proper or touching intersection of closed segments.
pub fn segments_intersect(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: Complex64, q: Complex64, r: Complex64, o: f64| {
        o == 0.0 && r.re >= p.re.min(q.re) && r.re <= p.re.max(q.re) && r.im >= p.im.min(q.im) && r.im <= p.im.max(q.im)
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

pub fn segment_distance(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Closed polygon with per-chunk bounding boxes for pruning pairwise searches.
#[derive(Clone, Debug)]
pub struct Polygon {
    pub vertices: Vec<Complex64>,
    chunks: Vec<(usize, usize, BBox)>,
    pub bbox: BBox,
}

impl Polygon {
    pub fn new(vertices: Vec<Complex64>) -> Polygon {
        let n = vertices.len();
        let mut chunks = Vec::new();
        let mut s = 0;
        while s < n {
            let e = (s + CHUNK).min(n);
            let pts: Vec<Complex64> = (s..=e).map(|i| vertices[i % n]).collect();
            chunks.push((s, e, BBox::of(&pts)));
            s = e;
        }
        let bbox = BBox::of(&vertices);
        Polygon { vertices, chunks, bbox }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn seg(&self, i: usize) -> (Complex64, Complex64) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }

    pub fn winding_number(&self, z: Complex64) -> i32 {
        if !self.bbox.contains(z) {
            return 0;
        }
        winding_number(&self.vertices, z)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.winding_number(z) != 0
    }

    /// Distance from `z` to the boundary.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        let zb = BBox { min: z, max: z };
        let mut best = f64::INFINITY;
        let mut order: Vec<&(usize, usize, BBox)> = self.chunks.iter().collect();
        order.sort_by(|a, b| a.2.distance(&zb).total_cmp(&b.2.distance(&zb)));
        for &(s, e, bb) in order {
            if bb.distance(&zb) >= best {
                break;
            }
            for i in s..e {
                let (a, b) = self.seg(i);
                best = best.min(point_segment_distance(z, a, b));
            }
        }
        best
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    pub fn diameter(&self) -> f64 {
        diameter(&self.vertices)
    }

    /// Minimum boundary-to-boundary distance; zero if the boundaries meet or one
    /// region contains the other.
    pub fn distance(&self, other: &Polygon) -> f64 {
        if self.is_empty() || other.is_empty() {
            return f64::INFINITY;
        }
        if self.contains(other.vertices[0]) || other.contains(self.vertices[0]) {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (i, a) in self.chunks.iter().enumerate() {
            for (j, b) in other.chunks.iter().enumerate() {
                pairs.push((a.2.distance(&b.2), i, j));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        for (lb, i, j) in pairs {
            if lb >= best {
                break;
            }
            let (s1, e1, _) = self.chunks[i];
            let (s2, e2, _) = other.chunks[j];
            for p in s1..e1 {
                let (a, b) = self.seg(p);
                for q in s2..e2 {
                    let (c, d) = other.seg(q);
                    best = best.min(segment_distance(a, b, c, d));
                }
            }
            if best == 0.0 {
                return 0.0;
            }
        }
        best
    }

    /// True if no two non-adjacent edges meet. Returns the first offending pair otherwise.
    pub fn simplicity_violation(&self) -> Option<(usize, usize)> {
        let n = self.vertices.len();
        if n < 4 {
            return None;
        }
        for (ci, a) in self.chunks.iter().enumerate() {
            for b in &self.chunks[ci..] {
                if a.2.distance(&b.2) > 0.0 {
                    continue;
                }
                for p in a.0..a.1 {
                    for q in b.0.max(p + 2)..b.1 {
                        if p == 0 && q == n - 1 {
                            continue;
                        }
                        let (s, t) = self.seg(p);
                        let (u, v) = self.seg(q);
                        if segments_intersect(s, t, u, v) {
                            return Some((p, q));
                        }
                    }
                }
            }
        }
        None
    }
}

/// Convex hull in anticlockwise order (monotone chain).
pub fn convex_hull(points: &[Complex64]) -> Vec<Complex64> {
    let mut pts: Vec<Complex64> = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Complex64> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Complex64> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn diameter(points: &[Complex64]) -> f64 {
    let hull = convex_hull(points);
    let mut best = 0.0f64;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            best = best.max((hull[i] - hull[j]).norm());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn square(x: f64, y: f64, s: f64) -> Vec<Complex64> {
        vec![c(x, y), c(x + s, y), c(x + s, y + s), c(x, y + s)]
    }

    #[test]
    fn winding_of_square() {
        let sq = square(0.0, 0.0, 1.0);
        assert_eq!(winding_number(&sq, c(0.5, 0.5)), 1);
        assert_eq!(winding_number(&sq, c(1.5, 0.5)), 0);
        let rev: Vec<Complex64> = sq.iter().rev().copied().collect();
        assert_eq!(winding_number(&rev, c(0.5, 0.5)), -1);
        assert!((signed_area(&sq) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distances() {
        let a = Polygon::new(square(0.0, 0.0, 1.0));
        let b = Polygon::new(square(3.0, 0.0, 1.0));
        assert!((a.distance(&b) - 2.0).abs() < 1e-15);
        let inner = Polygon::new(square(0.25, 0.25, 0.5));
        assert_eq!(a.distance(&inner), 0.0);
        assert!((a.boundary_distance(c(0.5, 0.5)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hull_and_diameter() {
        let mut pts = square(0.0, 0.0, 2.0);
        pts.push(c(1.0, 1.0));
        assert_eq!(convex_hull(&pts).len(), 4);
        assert!((diameter(&pts) - 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn simplicity() {
        let circle: Vec<Complex64> = (0..200).map(|k| Complex64::from_polar(1.0, k as f64 * 0.0314159)).collect();
        assert_eq!(Polygon::new(circle).simplicity_violation(), None);
        let bowtie = vec![c(0.0, 0.0), c(1.0, 1.0), c(1.0, 0.0), c(0.0, 1.0)];
        assert!(Polygon::new(bowtie).simplicity_violation().is_some());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn convex_polygon_contains_centroid(n in 3usize..80, r in 0.1f64..10.0, x in -5.0f64..5.0) {
                let pts: Vec<Complex64> = (0..n)
                    .map(|k| c(x, 0.0) + Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / n as f64))
                    .collect();
                let poly = Polygon::new(pts.clone());
                prop_assert_eq!(poly.winding_number(c(x, 0.0)), 1);
                prop_assert_eq!(poly.winding_number(c(x + 2.0 * r, 0.0)), 0);
                prop_assert!(poly.diameter() <= 2.0 * r + 1e-12);
                prop_assert!(poly.simplicity_violation().is_none());
            }
        }
    }
}
