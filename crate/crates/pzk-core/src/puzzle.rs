//! Yoccoz puzzles generated by an admissible set: depth-n ray graphs, pieces by face
//! extraction, critical nests, first-landing domains and depth-n combinatorics.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admissible::{free_critical_points, AdmissibleSet};
use crate::angle::{angle_orbit, Angle};
use crate::error::{Error, Result};
use crate::geometry::Polygon;
use crate::internal::SuperattractingCycle;
use crate::lamination::{cluster_points, compute_lamination, RationalLamination};
use crate::poly::Polynomial;
use crate::potential::{
    equipotential_arc_from, equipotential_polyline, landing_points_from_traces, ray_point, ray_point_from, trace_ray, LandingOptions,
    RayTrace,
};

/// Relative boundary margin for three-valued membership.
pub const BOUNDARY_MARGIN: f64 = 1e-6;
/// Equipotential samples per turn of the image curve.
const ARC_DENSITY: f64 = 32.0;
/// Vertices of a finer piece tested against a coarser one in nesting checks.
const NEST_PROBES: usize = 256;

/// Largest supported puzzle depth for degree `d`.
pub fn depth_cap(d: usize) -> usize {
    match d {
        2 => 12,
        3 => 8,
        4 => 6,
        _ => 5,
    }
}

/// All `t` with `d^n t` in `base`, sorted.
pub fn depth_angles(base: &[Angle], d: u64, n: usize) -> Vec<Angle> {
    let mut cur: Vec<Angle> = base.to_vec();
    for _ in 0..n {
        cur = cur.iter().flat_map(|t| t.preimages(d)).collect();
    }
    cur.sort();
    cur.dedup();
    cur
}

/// Exact midpoint of the anticlockwise arc from `a` to `b`.
pub fn mid_angle(a: Angle, b: Angle) -> Result<Angle> {
    let (p1, q1) = (a.num() as u128, a.den() as u128);
    let (p2, q2) = (b.num() as u128, b.den() as u128);
    let mut num = p1 * q2 + p2 * q1;
    let den = 2 * q1 * q2;
    if b <= a {
        num += q1 * q2;
    }
    let num = num % den;
    let g = gcd(num, den);
    let (num, den) = (num / g, den / g);
    if den > u64::MAX as u128 {
        return Err(Error::CapExceeded("mid-angle denominator overflows u64".into()));
    }
    Angle::new(num as u64, den as u64)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerCheck {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub characteristic: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PuzzleGraph {
    pub depth: usize,
    pub angles: Vec<Angle>,
    pub equipotential_height: f64,
    pub classes: Vec<Vec<Angle>>,
    pub vertex_points: Vec<Complex64>,
    pub euler: EulerCheck,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalMarks {
    /// Contains the periodic critical point.
    pub zero: bool,
    /// Contains a free critical point.
    pub free: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PuzzlePiece {
    pub depth: usize,
    /// Equipotential arcs `(from, to)` on the top boundary, in traversal order.
    pub arcs: Vec<(Angle, Angle)>,
    /// Ray pairs `(down, up)` meeting at each boundary landing point.
    pub boundary_angles: Vec<(Angle, Angle)>,
    #[serde(skip)]
    pub polygon: Polygon,
    pub interior_witness: Complex64,
    pub contains_critical: CriticalMarks,
    pub diameter: f64,
}

impl PuzzlePiece {
    pub fn is_simple(&self) -> bool {
        self.polygon.simplicity_violation().is_none()
    }

    /// Plain-text path commands for the boundary polygon.
    pub fn svg_path(&self) -> String {
        let mut s = String::new();
        for (i, z) in self.polygon.vertices.iter().enumerate() {
            s.push_str(if i == 0 { "M " } else { "L " });
            s.push_str(&format!("{:.9} {:.9} ", z.re, -z.im));
        }
        s.push('Z');
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum Membership {
    Piece(usize),
    Exterior,
    BoundaryAmbiguous,
}

/// Winding-number membership with a boundary margin of `BOUNDARY_MARGIN * diam`.
pub fn piece_containing(pieces: &[PuzzlePiece], z: Complex64) -> Membership {
    for (i, p) in pieces.iter().enumerate() {
        let margin = BOUNDARY_MARGIN * p.diameter;
        if p.polygon.bbox.contains(z) || p.polygon.bbox.distance(&crate::geometry::BBox::of(&[z])) <= margin {
            if p.polygon.boundary_distance(z) <= margin {
                return Membership::BoundaryAmbiguous;
            }
            if p.polygon.winding_number(z) != 0 {
                return Membership::Piece(i);
            }
        }
    }
    Membership::Exterior
}

#[derive(Clone, Debug, Serialize)]
pub struct PuzzleLevel {
    pub graph: PuzzleGraph,
    pub pieces: Vec<PuzzlePiece>,
    /// Index of the critical piece `Y(n)`.
    pub y: Option<usize>,
    /// Index of the piece containing the marked point of the second nest.
    pub x: Option<usize>,
}

impl PuzzleLevel {
    pub fn y_piece(&self) -> Option<&PuzzlePiece> {
        self.y.map(|i| &self.pieces[i])
    }

    pub fn x_piece(&self) -> Option<&PuzzlePiece> {
        self.x.map(|i| &self.pieces[i])
    }
}

/// Which point defines the second nest `X(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondNest {
    /// A free critical point.
    FreeCritical,
    /// The critical value, for maps without a free critical point.
    CriticalValue,
}

#[derive(Clone, Debug, Serialize)]
pub struct PuzzleNest {
    pub degree: usize,
    pub z_angles: Vec<Angle>,
    pub h0: f64,
    pub critical_point: Complex64,
    pub free_critical: Vec<Complex64>,
    pub second_nest: SecondNest,
    pub marked_point: Complex64,
    pub levels: Vec<PuzzleLevel>,
}

impl PuzzleNest {
    pub fn max_depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &PuzzleLevel {
        &self.levels[n]
    }
}

struct RayBank {
    traces: HashMap<Angle, RayTrace>,
    landing: HashMap<Angle, Complex64>,
}

fn ray_bank(f: &Polynomial, angles: &[Angle], opts: &LandingOptions) -> Result<RayBank> {
    let mut closure: BTreeSet<Angle> = BTreeSet::new();
    for &t in angles {
        closure.extend(angle_orbit(t, f.degree() as u64).orbit);
    }
    let all: Vec<Angle> = closure.into_iter().collect();
    let traced: Vec<Result<RayTrace>> = all.par_iter().map(|&t| trace_ray(f, t, &opts.ray)).collect();
    let traced: BTreeMap<Angle, Result<RayTrace>> = all.iter().copied().zip(traced).collect();
    let lps = landing_points_from_traces(f, angles, &traced, opts);
    let mut landing = HashMap::new();
    for (&t, lp) in angles.iter().zip(lps) {
        match lp {
            Ok(lp) if lp.is_certified() => {
                landing.insert(t, lp.point);
            }
            Ok(_) => return Err(Error::Uncertified { angle: t, reason: "puzzle ray landing".into() }),
            Err(Error::Bifurcation(a)) => return Err(Error::Bifurcation(a)),
            Err(e) => return Err(Error::Puzzle(format!("ray {t}: {e}"))),
        }
    }
    let mut map = HashMap::new();
    for t in angles {
        let tr = traced[t].clone()?;
        if !tr.reached() && tr.terminal_potential > crate::potential::STALL_SEED_POTENTIAL {
            return Err(Error::Bifurcation(tr.angle));
        }
        map.insert(*t, tr);
    }
    Ok(RayBank { traces: map, landing })
}

impl RayBank {
    /// Sample of ray `t` at potential `h`.
    fn at(&self, t: Angle, h: f64) -> Complex64 {
        let tr = &self.traces[&t];
        tr.samples[tr.index_at(h).unwrap_or(0)].point
    }

    /// Ray `t` from potential `h` down to its landing point.
    fn down(&self, t: Angle, h: f64) -> Vec<Complex64> {
        let tr = &self.traces[&t];
        let k = tr.index_at(h).unwrap_or(0);
        let mut v: Vec<Complex64> = tr.samples[k..].iter().map(|s| s.point).collect();
        v.push(self.landing[&t]);
        v
    }
}

fn build_level(
    f: &Polynomial,
    bank: &RayBank,
    z_angles: &[Angle],
    n: usize,
    h0: f64,
    tol: f64,
    critical: Complex64,
    free: &[Complex64],
    marked: Complex64,
) -> Result<PuzzleLevel> {
    let d = f.degree();
    let h = h0 / (d as f64).powi(n as i32);
    let angles = depth_angles(z_angles, d as u64, n);
    let big_n = angles.len();
    if big_n == 0 {
        // The critical point lies below every equipotential level built here.
        let poly = Polygon::new(equipotential_polyline(f, h, (ARC_DENSITY as usize * d.pow(n as u32)).max(64))?);
        let piece = finish_piece(f, n, vec![], vec![], poly, critical, critical, free)?;
        let graph = PuzzleGraph {
            depth: n,
            angles,
            equipotential_height: h,
            classes: vec![],
            vertex_points: vec![],
            euler: EulerCheck { vertices: 0, edges: 0, faces: 2, characteristic: 2 },
        };
        return Ok(level_from(graph, vec![piece], marked));
    }
    let points: Vec<Complex64> = angles.iter().map(|t| bank.landing[t]).collect();
    let labels = cluster_points(&points, 100.0 * tol);
    let mut groups: BTreeMap<usize, Vec<Angle>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(angles[i]);
    }
    let classes: Vec<Vec<Angle>> = groups.into_values().collect();
    let mut pred: HashMap<Angle, Angle> = HashMap::new();
    for c in &classes {
        for (j, &t) in c.iter().enumerate() {
            pred.insert(t, c[(j + c.len() - 1) % c.len()]);
        }
    }
    let pos: HashMap<Angle, usize> = angles.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let next = |i: usize| angles[(i + 1) % big_n];
    let sigma: Vec<usize> = (0..big_n).map(|i| pos[&pred[&next(i)]]).collect();
    let mut faces = Vec::new();
    let mut seen = vec![false; big_n];
    for s in 0..big_n {
        if seen[s] {
            continue;
        }
        let mut cyc = Vec::new();
        let mut i = s;
        while !seen[i] {
            seen[i] = true;
            cyc.push(i);
            i = sigma[i];
        }
        faces.push(cyc);
    }
    let c = classes.len();
    let euler = EulerCheck {
        vertices: c + big_n,
        edges: 2 * big_n,
        faces: faces.len() + 1,
        characteristic: (c + big_n) as i64 - 2 * big_n as i64 + faces.len() as i64 + 1,
    };
    if euler.characteristic != 2 {
        return Err(Error::Puzzle(format!(
            "Euler check failed at depth {n}: V - E + F = {} ({} rays, {c} vertices, {} faces)",
            euler.characteristic,
            big_n,
            faces.len()
        )));
    }
    let turns = |i: usize| -> f64 {
        if big_n == 1 {
            1.0
        } else {
            (next(i).to_f64() - angles[i].to_f64()).rem_euclid(1.0)
        }
    };
    let scale = (d as f64).powi(n as i32) * ARC_DENSITY;
    let arcs: Vec<Vec<Complex64>> = (0..big_n)
        .into_par_iter()
        .map(|i| {
            let t = turns(i);
            equipotential_arc_from(f, h, angles[i].to_f64(), bank.at(angles[i], h), t, ((t * scale / 2.0).ceil() as usize).max(2) * 2)
        })
        .collect::<Result<_>>()?;
    let pieces: Vec<PuzzlePiece> = faces
        .par_iter()
        .map(|cyc| {
            let mut poly = Vec::new();
            let mut arc_list = Vec::new();
            let mut pairs = Vec::new();
            for &i in cyc {
                let mut a = arcs[i].clone();
                a.pop();
                poly.extend(a);
                let down_angle = next(i);
                let up_angle = pred[&down_angle];
                poly.extend(bank.down(down_angle, h));
                let mut up = bank.down(up_angle, h);
                up.pop();
                up.reverse();
                up.pop();
                poly.extend(up);
                arc_list.push((angles[i], down_angle));
                pairs.push((down_angle, up_angle));
            }
            let widest = *cyc.iter().max_by(|&&a, &&b| turns(a).total_cmp(&turns(b))).unwrap();
            let witness = witness_below_arc(f, angles[widest], next(widest), h, &arcs[widest], &poly)?;
            finish_piece(f, n, arc_list, pairs, Polygon::new(poly), witness, critical, free)
        })
        .collect::<Result<_>>()?;
    let vertex_points = classes.iter().map(|c| bank.landing[&c[0]]).collect();
    let graph = PuzzleGraph { depth: n, angles, equipotential_height: h, classes, vertex_points, euler };
    Ok(level_from(graph, pieces, marked))
}

fn witness_below_arc(f: &Polynomial, a: Angle, b: Angle, h: f64, arc: &[Complex64], poly: &[Complex64]) -> Result<Complex64> {
    let mid = mid_angle(a, b)?;
    // Arcs have an even number of segments, so the middle sample sits at the mid-angle.
    let top = ray_point_from(f, mid, h, arc[arc.len() / 2], h).or_else(|_| ray_point(f, mid, h))?;
    for frac in [0.5, 0.8, 0.25, 0.95] {
        let z = ray_point_from(f, mid, h, top, h * frac)?;
        if crate::geometry::winding_number(poly, z) == 1 {
            return Ok(z);
        }
    }
    Err(Error::Puzzle(format!("no interior witness below the arc {a} -> {b}")))
}

#[allow(clippy::too_many_arguments)]
fn finish_piece(
    _f: &Polynomial,
    depth: usize,
    arcs: Vec<(Angle, Angle)>,
    boundary_angles: Vec<(Angle, Angle)>,
    polygon: Polygon,
    witness: Complex64,
    critical: Complex64,
    free: &[Complex64],
) -> Result<PuzzlePiece> {
    let marks = CriticalMarks {
        zero: polygon.winding_number(critical) != 0,
        free: free.iter().any(|&c| polygon.winding_number(c) != 0),
    };
    let diameter = polygon.diameter();
    Ok(PuzzlePiece { depth, arcs, boundary_angles, polygon, interior_witness: witness, contains_critical: marks, diameter })
}

fn level_from(graph: PuzzleGraph, pieces: Vec<PuzzlePiece>, marked: Complex64) -> PuzzleLevel {
    let y = pieces.iter().position(|p| p.contains_critical.zero);
    let x = match piece_containing(&pieces, marked) {
        Membership::Piece(i) => Some(i),
        _ => None,
    };
    PuzzleLevel { graph, pieces, y, x }
}

/// Builds all puzzle levels `0..=n_max` from one set of traced rays.
pub fn build_puzzle_nest(f: &Polynomial, z: &AdmissibleSet, n_max: usize, opts: &LandingOptions) -> Result<PuzzleNest> {
    z.recheck(f, opts.tol)?;
    build_puzzle_nest_from_angles(f, &z.angles(), n_max, opts)
}

/// Puzzle nest generated by an explicit set of Z-angles (empty for the
/// equipotential-only puzzle).
pub fn build_puzzle_nest_from_angles(f: &Polynomial, z_angles: &[Angle], n_max: usize, opts: &LandingOptions) -> Result<PuzzleNest> {
    let d = f.degree();
    if n_max > depth_cap(d) {
        return Err(Error::CapExceeded(format!("puzzle depth {n_max} exceeds the cap {} for degree {d}", depth_cap(d))));
    }
    if opts.ray.step_ratio.is_some() {
        return Err(Error::InvalidArgument("puzzle rays need the default sample spacing".into()));
    }
    let (critical_point, free) = match SuperattractingCycle::find(f, opts.tol.max(1e-12)) {
        Ok(sc) => (sc.critical_point, free_critical_points(f, &sc, opts.tol)?),
        Err(Error::NoSuperattractingCycle) => {
            // unicritical maps need no periodic critical point to mark the nest
            let cps = f.critical_points(opts.tol)?;
            if cps.points.len() != 1 {
                return Err(Error::NoSuperattractingCycle);
            }
            (cps.points[0].point, Vec::new())
        }
        Err(e) => return Err(e),
    };
    let (second_nest, marked) = match free.first() {
        Some(&c0) => (SecondNest::FreeCritical, c0),
        None => (SecondNest::CriticalValue, f.eval(critical_point)),
    };
    let all = depth_angles(z_angles, d as u64, n_max);
    let bank = ray_bank(f, &all, opts)?;
    let mut levels = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        levels.push(build_level(f, &bank, z_angles, n, opts.ray.h0, opts.tol, critical_point, &free, marked)?);
    }
    Ok(PuzzleNest {
        degree: d,
        z_angles: z_angles.to_vec(),
        h0: opts.ray.h0,
        critical_point,
        free_critical: free,
        second_nest,
        marked_point: marked,
        levels,
    })
}

/// Depth-`n` puzzle graph and pieces.
pub fn build_puzzle(f: &Polynomial, z: &AdmissibleSet, n: usize, opts: &LandingOptions) -> Result<(PuzzleGraph, Vec<PuzzlePiece>)> {
    let nest = build_puzzle_nest(f, z, n, opts)?;
    let level = nest.levels.into_iter().last().expect("level");
    Ok((level.graph, level.pieces))
}

/// True if `inner` lies in `outer`: the witness strictly inside and sampled boundary
/// vertices inside or within the margin of the boundary.
pub fn piece_nested(inner: &PuzzlePiece, outer: &PuzzlePiece) -> bool {
    if outer.polygon.winding_number(inner.interior_witness) == 0 {
        return false;
    }
    let margin = (BOUNDARY_MARGIN * outer.diameter).max(1e-12);
    let v = &inner.polygon.vertices;
    let step = (v.len() / NEST_PROBES).max(1);
    v.iter().step_by(step).all(|&z| outer.polygon.winding_number(z) != 0 || outer.polygon.boundary_distance(z) <= margin)
}

/// Refinement and Markov violations between consecutive levels.
pub fn check_refinement(f: &Polynomial, nest: &PuzzleNest) -> Vec<String> {
    let mut bad = Vec::new();
    for n in 1..nest.levels.len() {
        let coarse = &nest.levels[n - 1].pieces;
        for (i, p) in nest.levels[n].pieces.iter().enumerate() {
            let holders = coarse.iter().filter(|q| q.polygon.winding_number(p.interior_witness) != 0).count();
            if holders != 1 {
                bad.push(format!("depth {n} piece {i}: witness in {holders} depth-{} pieces", n - 1));
            }
            if !matches!(piece_containing(coarse, f.eval(p.interior_witness)), Membership::Piece(_)) {
                bad.push(format!("depth {n} piece {i}: image witness not in a depth-{} piece", n - 1));
            }
        }
    }
    bad
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestRow {
    pub depth: usize,
    pub diam_y: Option<f64>,
    pub diam_x: Option<f64>,
    pub dist_yx: Option<f64>,
    pub x_ratio: Option<f64>,
    pub y_nested: bool,
    pub x_nested: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestDiagnostics {
    pub second_nest: SecondNest,
    pub rows: Vec<NestRow>,
    pub y_monotone: bool,
    pub x_monotone: bool,
}

/// Diameters of the critical nests, their distance, nesting and monotonicity.
pub fn critical_nest_diagnostics(nest: &PuzzleNest) -> NestDiagnostics {
    let mut rows: Vec<NestRow> = Vec::new();
    let x0 = nest.levels[0].x_piece().map(|p| p.diameter);
    for (n, lvl) in nest.levels.iter().enumerate() {
        let y = lvl.y_piece();
        let x = lvl.x_piece();
        let (y_nested, x_nested) = if n == 0 {
            (true, true)
        } else {
            let prev = &nest.levels[n - 1];
            (
                matches!((y, prev.y_piece()), (Some(a), Some(b)) if piece_nested(a, b)),
                matches!((x, prev.x_piece()), (Some(a), Some(b)) if piece_nested(a, b)),
            )
        };
        let dist_yx = match (y, x) {
            (Some(a), Some(b)) => Some(if lvl.y == lvl.x { 0.0 } else { a.polygon.distance(&b.polygon) }),
            _ => None,
        };
        rows.push(NestRow {
            depth: n,
            diam_y: y.map(|p| p.diameter),
            diam_x: x.map(|p| p.diameter),
            dist_yx,
            x_ratio: match (x, x0) {
                (Some(p), Some(d0)) if d0 > 0.0 => Some(p.diameter / d0),
                _ => None,
            },
            y_nested,
            x_nested,
        });
    }
    let mono = |get: fn(&NestRow) -> Option<f64>| {
        rows.windows(2).all(|w| match (get(&w[0]), get(&w[1])) {
            (Some(a), Some(b)) => b <= a * (1.0 + 1e-9),
            _ => false,
        })
    };
    let y_monotone = mono(|r| r.diam_y);
    let x_monotone = mono(|r| r.diam_x);
    NestDiagnostics { second_nest: nest.second_nest, rows, y_monotone, x_monotone }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandingComponent {
    pub depth: usize,
    pub piece: usize,
    pub time: usize,
    pub witness: Complex64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LandingDomainReport {
    pub depth: usize,
    pub region: PuzzlePiece,
    pub landing_components: Vec<LandingComponent>,
    pub max_landing_time: usize,
    /// The nest was too shallow to examine every time up to the cap.
    pub truncated: bool,
}

/// Pieces of depth `N + k` inside `within` whose witness first enters `Y(N)` at time
/// `k`, for `k <= time_cap`.
pub fn first_landing_domains(
    f: &Polynomial,
    nest: &PuzzleNest,
    big_n: usize,
    within: &PuzzlePiece,
    time_cap: usize,
) -> Result<LandingDomainReport> {
    if big_n > nest.max_depth() {
        return Err(Error::InvalidArgument(format!("depth {big_n} not built")));
    }
    let target = &nest.levels[big_n];
    let y = target.y.ok_or_else(|| Error::Puzzle(format!("no critical piece at depth {big_n}")))?;
    let mut comps = Vec::new();
    let mut truncated = false;
    for k in 0..=time_cap {
        let depth = big_n + k;
        if depth > nest.max_depth() {
            truncated = true;
            break;
        }
        for (i, p) in nest.levels[depth].pieces.iter().enumerate() {
            if !piece_nested(p, within) {
                continue;
            }
            let mut w = p.interior_witness;
            let mut first = None;
            for j in 0..=k {
                if piece_containing(&target.pieces, w) == Membership::Piece(y) {
                    first = Some(j);
                    break;
                }
                w = f.eval(w);
            }
            if first == Some(k) {
                comps.push(LandingComponent { depth, piece: i, time: k, witness: p.interior_witness });
            }
        }
    }
    let max_landing_time = comps.iter().map(|c| c.time).max().unwrap_or(0);
    Ok(LandingDomainReport { depth: big_n, region: within.clone(), landing_components: comps, max_landing_time, truncated })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Combinatorics {
    Same,
    Different { witness: (Angle, Angle), equivalent_for_first: bool },
    Inconclusive { angle: Angle, reason: String },
}

fn partition_difference(a: &RationalLamination, b: &RationalLamination) -> Option<(Angle, Angle)> {
    for class in &a.classes {
        for &t in &class[1..] {
            if !b.equivalent(class[0], t) {
                return Some((class[0], t));
            }
        }
    }
    None
}

/// Compares the landing partitions of `f` and `g` on the depth-`n` puzzle angles.
pub fn same_combinatorics_up_to_depth(
    f: &Polynomial,
    g: &Polynomial,
    z_angles: &[Angle],
    n: usize,
    opts: &LandingOptions,
) -> Result<Combinatorics> {
    if f.degree() != g.degree() {
        return Err(Error::InvalidArgument("degrees differ".into()));
    }
    let universe = depth_angles(z_angles, f.degree() as u64, n);
    let lf = compute_lamination(f, &universe, opts)?;
    let lg = compute_lamination(g, &universe, opts)?;
    if let Some(e) = lf.exclusions.first().or(lg.exclusions.first()) {
        return Ok(Combinatorics::Inconclusive { angle: e.angle, reason: e.reason.clone() });
    }
    if let Some(w) = partition_difference(&lf, &lg) {
        return Ok(Combinatorics::Different { witness: w, equivalent_for_first: true });
    }
    if let Some(w) = partition_difference(&lg, &lf) {
        return Ok(Combinatorics::Different { witness: w, equivalent_for_first: false });
    }
    Ok(Combinatorics::Same)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissible::find_admissible_set;

    const AIRPLANE: f64 = -1.7548776662466927;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn a(p: u64, q: u64) -> Angle {
        Angle::new(p, q).unwrap()
    }

    #[test]
    fn preimage_angle_sets() {
        let v = depth_angles(&[a(1, 3), a(2, 3)], 2, 1);
        assert_eq!(v, vec![a(1, 6), a(1, 3), a(2, 3), a(5, 6)]);
        assert_eq!(depth_angles(&[a(1, 3), a(2, 3)], 2, 4).len(), 32);
    }

    #[test]
    fn mid_angles_wrap() {
        assert_eq!(mid_angle(a(1, 3), a(2, 3)).unwrap(), a(1, 2));
        assert_eq!(mid_angle(a(2, 3), a(1, 3)).unwrap(), a(0, 1));
        assert_eq!(mid_angle(a(5, 6), a(1, 6)).unwrap(), a(0, 1));
    }

    #[test]
    fn airplane_nest() {
        let f = Polynomial::quadratic(c(AIRPLANE, 0.0));
        let opts = LandingOptions::default();
        let z = find_admissible_set(&f, 2, &opts).unwrap();
        let nest = build_puzzle_nest(&f, &z, 4, &opts).unwrap();
        assert_eq!(nest.levels[0].pieces.len(), 2);
        for (n, lvl) in nest.levels.iter().enumerate() {
            let g = &lvl.graph;
            assert_eq!(g.euler.characteristic, 2);
            assert_eq!(g.angles.len(), 2 << n);
            assert!(lvl.pieces.len() <= 2 * nest.levels[n.saturating_sub(1)].pieces.len().max(1) * 2);
            for (i, p) in lvl.pieces.iter().enumerate() {
                assert_eq!(piece_containing(&lvl.pieces, p.interior_witness), Membership::Piece(i));
            }
            assert_eq!(piece_containing(&lvl.pieces, c(0.0, 0.0)), Membership::Piece(lvl.y.unwrap()));
            assert_eq!(piece_containing(&lvl.pieces, c(10.0, 0.0)), Membership::Exterior);
        }
        assert!(check_refinement(&f, &nest).is_empty(), "{:?}", check_refinement(&f, &nest));
        let diag = critical_nest_diagnostics(&nest);
        assert!(diag.y_monotone && diag.x_monotone, "{diag:?}");
        assert!(diag.rows.iter().all(|r| r.y_nested && r.x_nested), "{diag:?}");
        assert!(nest.levels[2].pieces.iter().all(|p| p.is_simple()));
    }

    #[test]
    fn first_landing_includes_the_critical_piece() {
        let f = Polynomial::quadratic(c(AIRPLANE, 0.0));
        let opts = LandingOptions::default();
        let nest = build_puzzle_nest_from_angles(&f, &[a(1, 3), a(2, 3)], 4, &opts).unwrap();
        let within = nest.levels[1].pieces[nest.levels[1].y.unwrap()].clone();
        let mut last = 0;
        for cap in 0..=3 {
            let rep = first_landing_domains(&f, &nest, 1, &within, cap).unwrap();
            assert!(rep.landing_components.iter().any(|c| c.time == 0 && c.depth == 1));
            assert!(rep.landing_components.len() >= last);
            last = rep.landing_components.len();
            for comp in &rep.landing_components {
                let mut w = comp.witness;
                for j in 0..comp.time {
                    assert_ne!(piece_containing(&nest.levels[1].pieces, w), Membership::Piece(nest.levels[1].y.unwrap()), "{j}");
                    w = f.eval(w);
                }
            }
        }
    }

    #[test]
    fn combinatorics_comparison() {
        let opts = LandingOptions::default();
        let f = Polynomial::quadratic(c(AIRPLANE, 0.0));
        let zs = [a(1, 3), a(2, 3)];
        assert_eq!(same_combinatorics_up_to_depth(&f, &f, &zs, 2, &opts).unwrap(), Combinatorics::Same);
        let rabbit = Polynomial::quadratic(c(-0.12256116687665362, 0.7448617666197442));
        match same_combinatorics_up_to_depth(&f, &rabbit, &zs, 1, &opts).unwrap() {
            Combinatorics::Different { witness, equivalent_for_first } => {
                assert!(equivalent_for_first);
                let lf = compute_lamination(&f, &depth_angles(&zs, 2, 1), &opts).unwrap();
                let lr = compute_lamination(&rabbit, &depth_angles(&zs, 2, 1), &opts).unwrap();
                assert!(lf.equivalent(witness.0, witness.1) && !lr.equivalent(witness.0, witness.1));
            }
            other => panic!("{other:?}"),
        }
        let g = Polynomial::quadratic(c(AIRPLANE + 0.002, 0.0));
        assert_eq!(same_combinatorics_up_to_depth(&f, &g, &zs, 3, &opts).unwrap(), Combinatorics::Same);
    }

    #[test]
    fn equipotential_only_puzzle() {
        let f = Polynomial::quadratic(c(-0.5, 0.0));
        let opts = LandingOptions::default();
        // no superattracting cycle, but a single critical point marks the nest
        let nest = build_puzzle_nest_from_angles(&f, &[], 1, &opts).unwrap();
        assert_eq!(nest.critical_point, c(0.0, 0.0));
        assert_eq!(nest.level(1).y, Some(0));
        let g = Polynomial::cubic(c(0.3, 0.0), c(0.1, 0.0));
        assert!(matches!(build_puzzle_nest_from_angles(&g, &[], 1, &opts), Err(Error::NoSuperattractingCycle)));
        let f = Polynomial::quadratic(c(0.0, 0.0));
        let nest = build_puzzle_nest_from_angles(&f, &[], 2, &opts).unwrap();
        for lvl in &nest.levels {
            assert_eq!(lvl.pieces.len(), 1);
            assert_eq!(lvl.y, Some(0));
        }
    }

    #[test]
    fn depth_cap_enforced() {
        let f = Polynomial::quadratic(c(AIRPLANE, 0.0));
        let r = build_puzzle_nest_from_angles(&f, &[a(1, 3), a(2, 3)], 13, &LandingOptions::default());
        assert!(matches!(r, Err(Error::CapExceeded(_))));
    }
}
