//! Rational laminations: landing-class clustering, invariance and unlinkedness checks,
//! containment, geometric ray pairs and slices.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angle::{angle_orbit, cyclically_between, Angle, RayPair};
use crate::error::{Error, Result};
use crate::geometry::Polygon;
use crate::poly::Polynomial;
use crate::potential::{equipotential_arc, landing_points, trace_ray, LandingOptions, LandingPoint, RayTrace};

/// Classes larger than this trigger an over-merge diagnostic.
pub const MAX_CLASS_SIZE: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub angle: Angle,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalLamination {
    pub degree: u64,
    pub source: String,
    pub tolerance: f64,
    pub universe: Vec<Angle>,
    pub classes: Vec<Vec<Angle>>,
    /// Landing point of each class, when computed from a polynomial.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub class_points: Vec<Complex64>,
    #[serde(default)]
    pub exclusions: Vec<Exclusion>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
    #[serde(skip)]
    index: HashMap<Angle, usize>,
}

impl RationalLamination {
    /// Builds a lamination from an explicit partition of `universe`.
    pub fn from_classes(degree: u64, universe: Vec<Angle>, classes: Vec<Vec<Angle>>, source: &str) -> Result<Self> {
        let mut lam = RationalLamination {
            degree,
            source: source.to_string(),
            tolerance: 0.0,
            universe,
            classes,
            class_points: Vec::new(),
            exclusions: Vec::new(),
            diagnostics: Vec::new(),
            index: HashMap::new(),
        };
        lam.normalize();
        let covered: usize = lam.classes.iter().map(Vec::len).sum();
        if covered != lam.universe.len() || lam.index.len() != lam.universe.len() {
            return Err(Error::InvalidArgument("classes do not partition the universe".into()));
        }
        if lam.universe.iter().any(|t| !lam.index.contains_key(t)) {
            return Err(Error::InvalidArgument("classes do not partition the universe".into()));
        }
        Ok(lam)
    }

    /// Every angle in its own class.
    pub fn trivial(degree: u64, universe: Vec<Angle>) -> Self {
        let classes = universe.iter().map(|&t| vec![t]).collect();
        Self::from_classes(degree, universe, classes, "trivial").expect("singletons partition")
    }

    fn normalize(&mut self) {
        self.universe.sort();
        self.universe.dedup();
        let mut order: Vec<usize> = (0..self.classes.len()).collect();
        for c in self.classes.iter_mut() {
            c.sort();
            c.dedup();
        }
        order.sort_by_key(|&i| self.classes[i].first().copied());
        let classes: Vec<Vec<Angle>> = order.iter().map(|&i| self.classes[i].clone()).collect();
        if self.class_points.len() == self.classes.len() {
            self.class_points = order.iter().map(|&i| self.class_points[i]).collect();
        }
        self.classes = classes.into_iter().filter(|c| !c.is_empty()).collect();
        self.rebuild_index();
    }

    fn rebuild_index(&mut self) {
        self.index.clear();
        for (i, c) in self.classes.iter().enumerate() {
            for &t in c {
                self.index.insert(t, i);
            }
        }
    }

    /// Rebuilds lookup tables after deserialization.
    pub fn reindex(mut self) -> Self {
        self.rebuild_index();
        self
    }

    pub fn class_of(&self, t: Angle) -> Option<usize> {
        self.index.get(&t).copied()
    }

    pub fn class(&self, t: Angle) -> Option<&[Angle]> {
        self.class_of(t).map(|i| self.classes[i].as_slice())
    }

    pub fn equivalent(&self, a: Angle, b: Angle) -> bool {
        matches!((self.class_of(a), self.class_of(b)), (Some(x), Some(y)) if x == y)
    }

    pub fn contains_angle(&self, t: Angle) -> bool {
        self.index.contains_key(&t)
    }

    /// Non-singleton classes.
    pub fn nontrivial_classes(&self) -> impl Iterator<Item = &Vec<Angle>> {
        self.classes.iter().filter(|c| c.len() > 1)
    }

    /// Same lamination with the universe cut down to `keep`.
    pub fn restrict(&self, keep: &BTreeSet<Angle>) -> Self {
        let universe: Vec<Angle> = self.universe.iter().copied().filter(|t| keep.contains(t)).collect();
        let mut classes = Vec::new();
        let mut points = Vec::new();
        for (i, c) in self.classes.iter().enumerate() {
            let cc: Vec<Angle> = c.iter().copied().filter(|t| keep.contains(t)).collect();
            if !cc.is_empty() {
                classes.push(cc);
                if let Some(p) = self.class_points.get(i) {
                    points.push(*p);
                }
            }
        }
        let mut lam = RationalLamination {
            degree: self.degree,
            source: self.source.clone(),
            tolerance: self.tolerance,
            universe,
            classes,
            class_points: points,
            exclusions: self.exclusions.clone(),
            diagnostics: Vec::new(),
            index: HashMap::new(),
        };
        lam.normalize();
        lam
    }
}

/// All angles with denominator dividing `d^k - 1` for `k <= k_max`, plus their `d` preimages.
pub fn default_universe(d: u64, k_max: u32) -> Result<Vec<Angle>> {
    let mut set = BTreeSet::new();
    for k in 1..=k_max {
        for t in crate::angle::angles_of_period(k, d, false)? {
            set.insert(t);
            set.extend(t.preimages(d));
        }
    }
    Ok(set.into_iter().collect())
}

/// All angles `p/q` with `q <= max_den`.
pub fn angles_up_to_denominator(max_den: u64) -> Vec<Angle> {
    let mut set = BTreeSet::new();
    for q in 1..=max_den {
        for p in 0..q {
            set.insert(Angle::new(p, q).expect("q > 0"));
        }
    }
    set.into_iter().collect()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Groups points closer than `radius` (single linkage). Returns component labels.
pub fn cluster_points(points: &[Complex64], radius: f64) -> Vec<usize> {
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let cell = |z: Complex64| ((z.re / radius).floor() as i64, (z.im / radius).floor() as i64);
    for (i, &z) in points.iter().enumerate() {
        grid.entry(cell(z)).or_default().push(i);
    }
    let mut uf = UnionFind::new(points.len());
    for (i, &z) in points.iter().enumerate() {
        let (cx, cy) = cell(z);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = grid.get(&(cx + dx, cy + dy)) {
                    for &j in v {
                        if j > i && (points[j] - z).norm() <= radius {
                            uf.union(i, j);
                        }
                    }
                }
            }
        }
    }
    (0..points.len()).map(|i| uf.find(i)).collect()
}

/// Lands every ray of the universe and clusters landing points at radius `100 * tol`.
pub fn compute_lamination(f: &Polynomial, universe: &[Angle], opts: &LandingOptions) -> Result<RationalLamination> {
    let lps = landing_points(f, universe, opts);
    lamination_from_landings(f, universe, lps, opts.tol)
}

pub fn lamination_from_landings(
    f: &Polynomial,
    universe: &[Angle],
    lps: Vec<Result<LandingPoint>>,
    tol: f64,
) -> Result<RationalLamination> {
    let mut kept: Vec<(Angle, Complex64)> = Vec::new();
    let mut exclusions = Vec::new();
    for (&t, lp) in universe.iter().zip(lps) {
        match lp {
            Ok(lp) if lp.is_certified() => kept.push((t, lp.point)),
            Ok(lp) => exclusions.push(Exclusion {
                angle: t,
                reason: match lp.certificate {
                    crate::potential::Certificate::Uncertified { reason } => reason,
                    _ => unreachable!(),
                },
            }),
            Err(e) => exclusions.push(Exclusion { angle: t, reason: e.to_string() }),
        }
    }
    let points: Vec<Complex64> = kept.iter().map(|k| k.1).collect();
    let labels = cluster_points(&points, 100.0 * tol);
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.into_iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    let mut classes = Vec::new();
    let mut class_points = Vec::new();
    let mut diagnostics = Vec::new();
    for members in groups.values() {
        let class: Vec<Angle> = members.iter().map(|&i| kept[i].0).collect();
        if class.len() > MAX_CLASS_SIZE {
            diagnostics.push(format!(
                "class of size {} at {:?} exceeds {MAX_CLASS_SIZE}; clustering radius may over-merge",
                class.len(),
                kept[members[0]].1
            ));
        }
        classes.push(class);
        class_points.push(kept[members[0]].1);
    }
    let mut lam = RationalLamination {
        degree: f.degree() as u64,
        source: f.label().unwrap_or("polynomial").to_string(),
        tolerance: tol,
        universe: kept.iter().map(|k| k.0).collect(),
        classes,
        class_points,
        exclusions,
        diagnostics,
        index: HashMap::new(),
    };
    lam.normalize();
    Ok(lam)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceViolation {
    pub a: Angle,
    pub b: Angle,
    pub image_a: Angle,
    pub image_b: Angle,
}

/// Pairs `a ~ b` whose in-universe images are not equivalent.
pub fn check_invariance(lam: &RationalLamination, d: u64) -> Vec<InvarianceViolation> {
    let mut out = Vec::new();
    for class in &lam.classes {
        let imaged: Vec<(Angle, Angle)> =
            class.iter().map(|&t| (t, t.multiply_by(d))).filter(|(_, i)| lam.contains_angle(*i)).collect();
        if let Some(&(a, ia)) = imaged.first() {
            for &(b, ib) in &imaged[1..] {
                if !lam.equivalent(ia, ib) {
                    out.push(InvarianceViolation { a, b, image_a: ia, image_b: ib });
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkViolation {
    pub first: Vec<Angle>,
    pub second: Vec<Angle>,
}

/// Index of the complementary arc of the sorted class `c` containing `t`.
fn arc_index(c: &[Angle], t: Angle) -> usize {
    match c.binary_search(&t) {
        Ok(i) | Err(i) => {
            if i == 0 || i == c.len() {
                c.len() - 1
            } else {
                i - 1
            }
        }
    }
}

/// Two classes are unlinked iff each lies in one complementary arc of the other.
pub fn classes_unlinked(a: &[Angle], b: &[Angle]) -> bool {
    if a.len() < 2 || b.len() < 2 {
        return true;
    }
    let mut free = b.iter().filter(|t| a.binary_search(t).is_err());
    let Some(&first) = free.next() else { return true };
    let k = arc_index(a, first);
    free.all(|&t| arc_index(a, t) == k)
}

/// Every linked pair of classes.
pub fn check_unlinked(lam: &RationalLamination) -> Vec<LinkViolation> {
    let big: Vec<&Vec<Angle>> = lam.nontrivial_classes().collect();
    let mut out = Vec::new();
    for i in 0..big.len() {
        for j in i + 1..big.len() {
            if !classes_unlinked(big[i], big[j]) {
                out.push(LinkViolation { first: big[i].clone(), second: big[j].clone() });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    pub contained: bool,
    /// A pair equivalent in the small lamination but split in the big one.
    pub witness: Option<(Angle, Angle)>,
}

/// Whether every class of `small` lies inside a single class of `big`.
pub fn lamination_contains(big: &RationalLamination, small: &RationalLamination) -> Result<Containment> {
    if let Some(t) = small.universe.iter().find(|t| !big.contains_angle(**t)) {
        return Err(Error::UniverseMismatch(format!("{t} is not in the containing universe")));
    }
    for class in &small.classes {
        let first = class[0];
        for &t in &class[1..] {
            if !big.equivalent(first, t) {
                return Ok(Containment { contained: false, witness: Some((first, t)) });
            }
        }
    }
    Ok(Containment { contained: true, witness: None })
}

/// Pulling back: for each `t` whose image lies in the universe, the class of `t` maps
/// into the class of its image.
pub fn check_pullback(lam: &RationalLamination, d: u64) -> Vec<(Angle, Angle)> {
    let mut out = Vec::new();
    for class in &lam.classes {
        for &t in class {
            let img = t.multiply_by(d);
            if let Some(ci) = lam.class_of(img) {
                for &s in class {
                    let si = s.multiply_by(d);
                    if lam.contains_angle(si) && lam.class_of(si) != Some(ci) {
                        out.push((t, s));
                    }
                }
            }
        }
    }
    out
}

/// Two rays traced and certified to land together.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricRayPair {
    pub pair: RayPair,
    pub traces: [RayTrace; 2],
    pub landing: LandingPoint,
}

pub fn geometric_ray_pair(f: &Polynomial, pair: RayPair, opts: &LandingOptions) -> Result<GeometricRayPair> {
    let lps = landing_points(f, &[pair.a(), pair.b()], opts);
    let mut it = lps.into_iter();
    let la = it.next().unwrap()?;
    let lb = it.next().unwrap()?;
    if !la.is_certified() || !lb.is_certified() {
        return Err(Error::Uncertified { angle: if la.is_certified() { pair.b() } else { pair.a() }, reason: "landing".into() });
    }
    let gap = (la.point - lb.point).norm();
    if gap > 10.0 * opts.tol * (1.0 + la.point.norm()) {
        return Err(Error::NotARayPair(format!("{} and {} land {gap:.3e} apart", pair.a(), pair.b())));
    }
    let ta = trace_ray(f, pair.a(), &opts.ray)?;
    let tb = trace_ray(f, pair.b(), &opts.ray)?;
    Ok(GeometricRayPair { pair, traces: [ta, tb], landing: la })
}

impl GeometricRayPair {
    fn trace(&self, t: Angle) -> &RayTrace {
        if self.traces[0].angle == t {
            &self.traces[0]
        } else {
            &self.traces[1]
        }
    }
}

/// Region between two disjoint unlinked ray pairs, truncated at the top equipotential.
#[derive(Clone, Debug)]
pub struct SliceRegion {
    pub pairs: [GeometricRayPair; 2],
    /// `theta1, theta2, theta2~, theta1~` in anticlockwise order.
    pub orientation: [Angle; 4],
    pub boundary: Polygon,
}

impl SliceRegion {
    pub fn contains(&self, z: Complex64) -> bool {
        self.boundary.contains(z)
    }
}

/// Walks down ray `t` from the top, through its landing point.
pub(crate) fn ray_down(trace: &RayTrace, landing: Complex64) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = trace.samples.iter().map(|s| s.point).collect();
    v.push(landing);
    v
}

pub fn slice_between(f: &Polynomial, p1: &GeometricRayPair, p2: &GeometricRayPair) -> Result<SliceRegion> {
    let (a, b) = (p1.pair.a(), p1.pair.b());
    let (c, e) = (p2.pair.a(), p2.pair.b());
    if !crate::angle::pairs_unlinked(p1.pair, p2.pair) || [a, b].iter().any(|t| p2.pair.contains(*t)) {
        return Err(Error::InvalidArgument("ray pairs must be disjoint and unlinked".into()));
    }
    if (p1.landing.point - p2.landing.point).norm() <= 1e-9 * (1.0 + p1.landing.point.norm()) {
        return Err(Error::InvalidArgument("ray pairs share a landing point".into()));
    }
    // theta1 is the pair-1 angle followed anticlockwise by pair 2.
    let (t1, t1b) = if cyclically_between(a, c, b) { (a, b) } else { (b, a) };
    let (t2, t2b) = if cyclically_between(t1, c, e) { (c, e) } else { (e, c) };
    let orientation = [t1, t2, t2b, t1b];
    let h = p1.traces[0].samples[0].potential;
    let arc = |from: Angle, to: Angle| -> Result<Vec<Complex64>> {
        let turns = (to.to_f64() - from.to_f64()).rem_euclid(1.0);
        let n = ((turns * 256.0).ceil() as usize).max(8);
        equipotential_arc(f, h, from.to_f64(), turns, n)
    };
    let mut poly = Vec::new();
    let mut a1 = arc(t1, t2)?;
    a1.pop();
    poly.extend(a1);
    poly.extend(ray_down(p2.trace(t2), p2.landing.point));
    let mut up = ray_down(p2.trace(t2b), p2.landing.point);
    up.pop();
    up.reverse();
    up.pop();
    poly.extend(up);
    let mut a2 = arc(t2b, t1b)?;
    a2.pop();
    poly.extend(a2);
    poly.extend(ray_down(p1.trace(t1b), p1.landing.point));
    let mut up = ray_down(p1.trace(t1), p1.landing.point);
    up.pop();
    up.reverse();
    up.pop();
    poly.extend(up);
    Ok(SliceRegion { pairs: [p1.clone(), p2.clone()], orientation, boundary: Polygon::new(poly) })
}

/// Landing classes of the forward orbit of `t` restricted to the lamination.
pub fn orbit_classes(lam: &RationalLamination, t: Angle) -> Vec<Vec<Angle>> {
    angle_orbit(t, lam.degree).orbit.iter().filter_map(|&s| lam.class(s).map(|c| c.to_vec())).collect()
}
