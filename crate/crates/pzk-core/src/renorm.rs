//! Renormalization: detection of the polynomial-like restriction `f^m0: Y(n) -> Y(n-m0)`,
//! internal markings, and straightening by multiplier matching.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angle::{angles_of_period, Angle};
use crate::error::{Error, Result};
use crate::internal::{SuperattractingCycle, DEFAULT_INTERNAL_TERMINAL};
use crate::lamination::{compute_lamination, lamination_contains, RationalLamination};
use crate::poly::{find_roots, Cycle, CycleClass, Polynomial};
use crate::potential::{landing_points, LandingOptions};
use crate::puzzle::{piece_containing, piece_nested, Membership, PuzzleNest, PuzzlePiece};
use crate::tuning::{tune_angle, tuning_substitution, TuningSubstitution};

type C = Complex64;

/// Landing points within this distance of the marked point count as landing there.
pub const MARKING_RADIUS: f64 = 1e-5;
/// Largest `d^m0 - 1` searched for marking angles.
pub const MAX_MARKING_ANGLES: u64 = 1 << 12;
/// Longest attracting cycle searched for by straightening.
pub const MAX_RETURN_PERIOD: usize = 64;
/// Cauchy-tail threshold for attracting-cycle detection.
pub const CAUCHY_THRESHOLD: f64 = 1e-10;
/// Return-map iterations before the attracting-cycle search gives up.
pub const ORBIT_BUDGET: usize = 200_000;
/// Largest period whose centers are enumerated (degree `2^(q-1)` center polynomial).
pub const MAX_CENTER_PERIOD: usize = 10;
/// Multipliers below this are treated as superattracting.
pub const SUPERATTRACTING_RADIUS: f64 = 1e-12;
/// `|rho|` above `1 - NEUTRAL_MARGIN` is treated as neutral.
pub const NEUTRAL_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InternalMarking {
    pub m0: usize,
    pub fixed_boundary_point: C,
    pub internal_ray_endpoint: C,
    pub theta0: Angle,
    /// All marking-period angles landing at the fixed boundary point.
    pub class: Vec<Angle>,
    /// Distance from the fixed boundary point to the landing point of `theta0`.
    pub landing_gap: f64,
}

impl InternalMarking {
    pub fn tuning(&self, d: u64) -> Result<TuningSubstitution> {
        if self.m0 == 1 {
            return TuningSubstitution::identity(d);
        }
        tuning_substitution(self.theta0, &self.class, d, 2)
    }
}

fn newton_fixed_point(f: &Polynomial, m: usize, mut z: C) -> Option<C> {
    for _ in 0..100 {
        let (w, dw) = f.iterate_with_derivative(z, m);
        let den = dw - 1.0;
        if !w.is_finite() || den.norm() == 0.0 {
            return None;
        }
        let step = (w - z) / den;
        z -= step;
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    let (w, _) = f.iterate_with_derivative(z, m);
    ((w - z).norm() < 1e-12 * (1.0 + z.norm())).then_some(z)
}

/// Internal 0-ray of the critical component, its landing point (a boundary fixed point of
/// `f^m0`) and the least period-`m0` external angle landing there.
pub fn internal_marking(f: &Polynomial, m0: usize, opts: &LandingOptions) -> Result<InternalMarking> {
    let sc = SuperattractingCycle::find(f, opts.tol.max(1e-12))?;
    if sc.period != m0 {
        return Err(Error::InvalidArgument(format!("critical point has period {}, not {m0}", sc.period)));
    }
    let ray = sc.internal_ray(f, 0.0, DEFAULT_INTERNAL_TERMINAL)?;
    let (end, _) = ray.terminal();
    let fixed = newton_fixed_point(f, m0, end)
        .filter(|z| (z - end).norm() < 1e-3)
        .ok_or_else(|| Error::InternalBoettcher(format!("no fixed point of f^{m0} near internal ray end {end}")))?;
    let d = f.degree() as u64;
    if d.checked_pow(m0 as u32).is_none_or(|x| x - 1 > MAX_MARKING_ANGLES) {
        return Err(Error::CapExceeded(format!("{d}^{m0} - 1 marking angles exceed {MAX_MARKING_ANGLES}")));
    }
    let angles = angles_of_period(m0 as u32, d, true)?;
    let lps = landing_points(f, &angles, opts);
    let mut near: Vec<(f64, Angle)> = angles
        .iter()
        .zip(&lps)
        .filter_map(|(&t, lp)| lp.as_ref().ok().filter(|l| l.is_certified()).map(|l| ((l.point - fixed).norm(), t)))
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let class: Vec<Angle> = {
        let mut c: Vec<Angle> = near.iter().filter(|(g, _)| *g <= MARKING_RADIUS).map(|&(_, t)| t).collect();
        c.sort();
        c
    };
    let Some(&theta0) = class.first() else {
        let misses: Vec<String> = near.iter().take(3).map(|(g, t)| format!("{t} at distance {g:.3e}")).collect();
        return Err(Error::NoMarking(format!("nearest: {}", misses.join(", "))));
    };
    let landing_gap = near.iter().find(|(_, t)| *t == theta0).map(|p| p.0).unwrap_or(f64::NAN);
    Ok(InternalMarking { m0, fixed_boundary_point: fixed, internal_ray_endpoint: end, theta0, class, landing_gap })
}

/// The first-return map `f^m0` near the critical point, marked by a tuning substitution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnMap {
    pub m0: usize,
    pub critical_point: C,
    pub tuning: TuningSubstitution,
}

impl ReturnMap {
    /// `f` itself, unmarked: the trivial renormalization.
    pub fn identity(f: &Polynomial, tol: f64) -> Result<Self> {
        let cps = f.critical_points(tol)?;
        if cps.points.len() != 1 {
            return Err(Error::InvalidArgument("the trivial renormalization needs a unicritical map".into()));
        }
        Ok(ReturnMap { m0: 1, critical_point: cps.points[0].point, tuning: TuningSubstitution::identity(f.degree() as u64)? })
    }

    /// Combinatorial renormalization: `lambda_f` must contain `lam_f0` on its universe.
    pub fn from_lamination(
        f: &Polynomial,
        lam_f0: &RationalLamination,
        m0: usize,
        critical_point: C,
        tuning: TuningSubstitution,
        opts: &LandingOptions,
    ) -> Result<Self> {
        let lam = compute_lamination(f, &lam_f0.universe, opts)?;
        if !lam.exclusions.is_empty() {
            return Err(Error::NotRenormalizable(format!("{} rays did not certify", lam.exclusions.len())));
        }
        let c = lamination_contains(&lam, lam_f0)?;
        if let Some((a, b)) = c.witness {
            return Err(Error::NotRenormalizable(format!("{a} and {b} are equivalent for f0 but land apart")));
        }
        Ok(ReturnMap { m0, critical_point, tuning })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitPiece {
    pub step: usize,
    pub depth: usize,
    pub piece: usize,
    pub point: C,
}

#[derive(Clone, Debug, Serialize)]
pub struct RenormalizationCandidate {
    pub m0: usize,
    pub depth: usize,
    pub critical_point: C,
    pub source_piece: PuzzlePiece,
    pub target_piece: PuzzlePiece,
    pub degree: usize,
    pub orbit_pieces: Vec<OrbitPiece>,
    /// `(i, j, distance)` between the polygons of orbit pieces `i < j`.
    pub disjointness_evidence: Vec<(usize, usize, f64)>,
    pub nested: bool,
}

impl RenormalizationCandidate {
    pub fn return_map(&self, tuning: TuningSubstitution) -> ReturnMap {
        ReturnMap { m0: self.m0, critical_point: self.critical_point, tuning }
    }
}

/// Verifies that `f^m0: Y(n) -> Y(n-m0)` is a proper map of degree 2 with
/// pairwise-disjoint orbit pieces.
pub fn detect_renormalization(f: &Polynomial, nest: &PuzzleNest, m0: usize, n: usize, tol: f64) -> Result<RenormalizationCandidate> {
    if m0 == 0 || n < m0 || n > nest.max_depth() {
        return Err(Error::InvalidArgument(format!("need 1 <= m0 <= n <= {}, got m0 = {m0}, n = {n}", nest.max_depth())));
    }
    let cp = nest.critical_point;
    let level = |k: usize| nest.level(k);
    let y = level(n).y_piece().ok_or_else(|| Error::Puzzle(format!("no critical piece at depth {n}")))?.clone();
    let target = level(n - m0).y_piece().ok_or_else(|| Error::Puzzle(format!("no critical piece at depth {}", n - m0)))?.clone();
    let mut orbit = Vec::with_capacity(m0);
    let mut z = cp;
    for j in 0..m0 {
        let depth = n - j;
        match piece_containing(&level(depth).pieces, z) {
            Membership::Piece(i) => orbit.push(OrbitPiece { step: j, depth, piece: i, point: z }),
            other => return Err(Error::NotRenormalizable(format!("f^{j}(critical point) = {z} is {other:?} at depth {depth}"))),
        }
        z = f.eval(z);
    }
    if piece_containing(&level(n - m0).pieces, z) != Membership::Piece(level(n - m0).y.expect("checked")) {
        return Err(Error::NotRenormalizable(format!("f^{m0}(critical point) = {z} is outside Y({})", n - m0)));
    }
    let piece = |o: &OrbitPiece| &level(o.depth).pieces[o.piece];
    let mut disjoint = Vec::new();
    for i in 0..m0 {
        for j in i + 1..m0 {
            let (a, b) = (piece(&orbit[i]), piece(&orbit[j]));
            let dist = a.polygon.distance(&b.polygon);
            let margin = 1e-6 * a.diameter.max(b.diameter);
            disjoint.push((i, j, dist));
            if dist <= margin {
                return Err(Error::NotRenormalizable(format!("orbit pieces {i} and {j} are not disjoint (distance {dist:.3e})")));
            }
        }
    }
    let cps = f.critical_points(tol)?;
    let mut degree = 1;
    for o in &orbit {
        let p = piece(o);
        let mut mult = 0;
        for c in &cps.points {
            match piece_containing(std::slice::from_ref(p), c.point) {
                Membership::Piece(_) => mult += c.multiplicity,
                Membership::BoundaryAmbiguous => {
                    return Err(Error::NotRenormalizable(format!("critical point {} on the boundary of orbit piece {}", c.point, o.step)))
                }
                Membership::Exterior => {}
            }
        }
        degree *= mult + 1;
    }
    if degree != 2 {
        return Err(Error::NotRenormalizable(format!("f^{m0} has degree {degree} on Y({n}): a free critical point lies in an orbit piece")));
    }
    let nested = piece_nested(&y, &target);
    if !nested {
        return Err(Error::NotRenormalizable(format!("Y({n}) is not nested in Y({})", n - m0)));
    }
    Ok(RenormalizationCandidate {
        m0,
        depth: n,
        critical_point: cp,
        source_piece: y,
        target_piece: target,
        degree,
        orbit_pieces: orbit,
        disjointness_evidence: disjoint,
        nested,
    })
}

/// Attracting cycle of the return map, found by iterating the critical point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractingCycle {
    /// Period under `f^m0`.
    pub period: usize,
    pub point: C,
    pub multiplier: C,
}

/// Iterates the critical point under `f^m0` until the Cauchy tail of some period
/// `q <= MAX_RETURN_PERIOD` drops below the threshold, then refines by Newton.
pub fn find_attracting_cycle(f: &Polynomial, r: &ReturnMap) -> Result<AttractingCycle> {
    let m0 = r.m0;
    let escape = f.escape_radius();
    let len = MAX_RETURN_PERIOD + 1;
    let mut hist = vec![C::new(0.0, 0.0); len];
    let mut z = r.critical_point;
    hist[0] = z;
    for n in 1..=ORBIT_BUDGET {
        z = f.iterate(z, m0);
        if !z.is_finite() || z.norm() > escape {
            return Err(Error::NonHyperbolic(format!("critical orbit escapes after {n} returns")));
        }
        hist[n % len] = z;
        for q in 1..=MAX_RETURN_PERIOD.min(n) {
            let prev = hist[(n - q) % len];
            if (z - prev).norm() < CAUCHY_THRESHOLD * (1.0 + z.norm()) {
                let point = newton_fixed_point(f, m0 * q, z).unwrap_or(z);
                // a tail of period q also vanishes for every multiple of the true period
                let q = (1..=q)
                    .filter(|k| q % k == 0)
                    .find(|&k| (f.iterate(point, m0 * k) - point).norm() < 1e-8 * (1.0 + point.norm()))
                    .unwrap_or(q);
                let multiplier = f.iterate_with_derivative(point, m0 * q).1;
                let a = multiplier.norm();
                if a > 1.0 + NEUTRAL_MARGIN {
                    return Err(Error::NonHyperbolic(format!("critical orbit lands on a repelling cycle, |multiplier| = {a:.6}")));
                }
                if a >= 1.0 - NEUTRAL_MARGIN {
                    return Err(Error::NeutralCycle(a));
                }
                return Ok(AttractingCycle { period: q, point, multiplier });
            }
        }
    }
    Err(Error::NonHyperbolic(format!("no attracting cycle of period <= {MAX_RETURN_PERIOD} after {ORBIT_BUDGET} returns")))
}

/// `F_c^q(0)` as a polynomial in `c`.
fn center_polynomial(q: usize) -> Vec<C> {
    let mut g = vec![C::new(0.0, 0.0), C::new(1.0, 0.0)];
    for _ in 1..q {
        let mut sq = vec![C::new(0.0, 0.0); 2 * g.len() - 1];
        for (i, a) in g.iter().enumerate() {
            for (j, b) in g.iter().enumerate() {
                sq[i + j] += a * b;
            }
        }
        sq[1] += 1.0;
        g = sq;
    }
    g
}

/// Orbit of 0 under `z^2 + c` with derivatives in `c`.
fn critical_orbit(c: C, q: usize) -> (C, C) {
    let (mut z, mut dz) = (C::new(0.0, 0.0), C::new(0.0, 0.0));
    for _ in 0..q {
        dz = 2.0 * z * dz + 1.0;
        z = z * z + c;
    }
    (z, dz)
}

/// Centers of hyperbolic components of exact period `q` of `z^2 + c`.
pub fn centers_of_period(q: usize) -> Result<Vec<C>> {
    if q == 0 || q > MAX_CENTER_PERIOD {
        return Err(Error::CapExceeded(format!("center period {q} outside 1..={MAX_CENTER_PERIOD}")));
    }
    let roots = find_roots(&center_polynomial(q), 1e-12)?;
    let mut out: Vec<C> = Vec::new();
    for mut c in roots {
        for _ in 0..50 {
            let (g, dg) = critical_orbit(c, q);
            let step = g / dg;
            c -= step;
            if step.norm() < 1e-15 {
                break;
            }
        }
        let lower = (1..q).any(|j| critical_orbit(c, j).0.norm() < 1e-8);
        if !lower && !out.iter().any(|o| (o - c).norm() < 1e-8) {
            out.push(c);
        }
    }
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

/// `(F^q(z) - z, (F^q)'(z) - rho)` for `F = z^2 + c` and its Jacobian in `(z, c)`.
fn multiplier_system(z0: C, c: C, q: usize, rho: C) -> ([C; 2], [[C; 2]; 2]) {
    let one = C::new(1.0, 0.0);
    let (mut z, mut zz, mut zc) = (z0, one, C::new(0.0, 0.0));
    let (mut m, mut mz, mut mc) = (one, C::new(0.0, 0.0), C::new(0.0, 0.0));
    for _ in 0..q {
        // m = prod 2 z_j, differentiated before z advances
        let (m1, mz1, mc1) = (m * 2.0 * z, mz * 2.0 * z + m * 2.0 * zz, mc * 2.0 * z + m * 2.0 * zc);
        m = m1;
        mz = mz1;
        mc = mc1;
        let (z1, zz1, zc1) = (z * z + c, 2.0 * z * zz, 2.0 * z * zc + one);
        z = z1;
        zz = zz1;
        zc = zc1;
    }
    ([z - z0, m - rho], [[zz - one, zc], [mz, mc]])
}

fn newton_multiplier(mut z: C, mut c: C, q: usize, rho: C, max_iter: usize) -> Option<(C, C)> {
    for _ in 0..max_iter {
        let (fv, j) = multiplier_system(z, c, q, rho);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.norm() == 0.0 || !det.is_finite() {
            return None;
        }
        let dz = (fv[0] * j[1][1] - fv[1] * j[0][1]) / det;
        let dc = (j[0][0] * fv[1] - j[1][0] * fv[0]) / det;
        z -= dz;
        c -= dc;
        if !z.is_finite() || !c.is_finite() {
            return None;
        }
        if dz.norm() + dc.norm() < 1e-15 * (1.0 + z.norm() + c.norm()) {
            return Some((z, c));
        }
    }
    let (fv, _) = multiplier_system(z, c, q, rho);
    (fv[0].norm() + fv[1].norm() < 1e-12).then_some((z, c))
}

/// Parameter `c` with a period-`q` cycle of multiplier `rho`, continued in `rho` from
/// the center `center`. Returns `(c, cycle point, residual)`.
pub fn solve_multiplier(q: usize, center: C, rho: C) -> Result<(C, C, f64)> {
    if q == 1 {
        let c = rho / 2.0 - rho * rho / 4.0;
        let z = rho / 2.0;
        let res = (z * z + c - z).norm() + (2.0 * z - rho).norm();
        return Ok((c, z, res));
    }
    let (mut z, mut c) = (C::new(0.0, 0.0), center);
    let (mut t, mut dt) = (0.0f64, 1.0 / 16.0);
    while t < 1.0 {
        let t1 = (t + dt).min(1.0);
        match newton_multiplier(z, c, q, rho * t1, 30) {
            Some((z1, c1)) if (c1 - c).norm() < 0.5 => {
                z = z1;
                c = c1;
                t = t1;
                dt = (dt * 1.5).min(0.25);
            }
            _ => {
                dt /= 2.0;
                if dt < 1e-6 {
                    return Err(Error::NoConvergence { iterations: 0, residual: f64::NAN });
                }
            }
        }
    }
    let (fv, _) = multiplier_system(z, c, q, rho);
    Ok((c, z, fv[0].norm().max(fv[1].norm())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterChoice {
    pub center: C,
    pub characteristic_pair: Option<(Angle, Angle)>,
    pub tuned_pair: Option<(Angle, Angle)>,
    pub colanding_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StraighteningResult {
    pub parameter: C,
    pub matched_cycle: Cycle,
    pub residual: f64,
    pub method: String,
    pub center: C,
    pub candidates: Vec<CenterChoice>,
}

fn arc_length(a: Angle, b: Angle) -> f64 {
    (b.to_f64() - a.to_f64()).rem_euclid(1.0)
}

/// Examines each period-`q` center: its characteristic pair, tuned through `r`, must
/// co-land for `f`.
fn choose_center(f: &Polynomial, r: &ReturnMap, q: usize, opts: &LandingOptions) -> Result<(usize, Vec<CenterChoice>)> {
    let centers = centers_of_period(q)?;
    if centers.len() == 1 {
        let only = CenterChoice { center: centers[0], characteristic_pair: None, tuned_pair: None, colanding_gap: None };
        return Ok((0, vec![only]));
    }
    let mut choices = Vec::with_capacity(centers.len());
    for &c in &centers {
        let g = Polynomial::quadratic(c);
        let marking = internal_marking(&g, q, opts)?;
        let pair = crate::tuning::characteristic_pair(&marking.class, 2)?;
        let tuned = (tune_angle(&r.tuning, pair.0)?, tune_angle(&r.tuning, pair.1)?);
        let lps = landing_points(f, &[tuned.0, tuned.1], opts);
        let gap = match (&lps[0], &lps[1]) {
            (Ok(a), Ok(b)) if a.is_certified() && b.is_certified() => Some((a.point - b.point).norm()),
            _ => None,
        };
        choices.push(CenterChoice { center: c, characteristic_pair: Some(pair), tuned_pair: Some(tuned), colanding_gap: gap });
    }
    let best = choices
        .iter()
        .enumerate()
        .filter(|(_, ch)| ch.colanding_gap.is_some_and(|g| g <= MARKING_RADIUS))
        .min_by(|(_, a), (_, b)| {
            let (ta, tb) = (a.tuned_pair.unwrap(), b.tuned_pair.unwrap());
            arc_length(ta.0, ta.1).total_cmp(&arc_length(tb.0, tb.1))
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::NoMarking(format!("no period-{q} center has a tuned characteristic pair co-landing for f")))?;
    Ok((best, choices))
}

/// Quadratic parameter hybrid-equivalent to the return map, by multiplier matching.
pub fn straighten(r: &ReturnMap, f: &Polynomial, d1: usize, opts: &LandingOptions) -> Result<StraighteningResult> {
    if d1 != 2 {
        return Err(Error::InvalidArgument("only quadratic straightening (d1 = 2) is implemented".into()));
    }
    let cyc = find_attracting_cycle(f, r)?;
    let q = cyc.period;
    let (best, candidates) = choose_center(f, r, q, opts)?;
    let center = candidates[best].center;
    let superattracting = cyc.multiplier.norm() < SUPERATTRACTING_RADIUS;
    let (parameter, residual) = if superattracting {
        (center, critical_orbit(center, q).0.norm())
    } else {
        let (c, _, res) = solve_multiplier(q, center, cyc.multiplier)?;
        (c, res)
    };
    let mut points = Vec::with_capacity(q);
    let mut z = cyc.point;
    for _ in 0..q {
        points.push(z);
        z = f.iterate(z, r.m0);
    }
    let matched_cycle = Cycle { points, period: q, multiplier: cyc.multiplier, classification: CycleClass::of(cyc.multiplier) };
    let method = if superattracting { "center-solving" } else { "multiplier-matching" };
    Ok(StraighteningResult { parameter, matched_cycle, residual, method: method.into(), center, candidates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissible::find_admissible_set;
    use crate::puzzle::build_puzzle_nest_from_angles;

    const AIRPLANE: f64 = -1.754_877_666_246_692_7;

    fn a(p: u64, q: u64) -> Angle {
        Angle::new(p, q).unwrap()
    }

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    /// `(z + b)^2 + c - b`, conjugate to `z^2 + c` by `z -> z + b`.
    fn affine_copy(cc: C, b: C) -> Polynomial {
        Polynomial::monic(vec![b * b + cc - b, 2.0 * b, c(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn center_counts_and_known_centers() {
        let counts: Vec<usize> = (1..=5).map(|q| centers_of_period(q).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 1, 3, 6, 15]);
        assert!(centers_of_period(3).unwrap().iter().any(|z| (z - c(AIRPLANE, 0.0)).norm() < 1e-12));
        assert!(centers_of_period(2).unwrap()[0].re + 1.0 < 1e-14);
    }

    #[test]
    fn multiplier_solutions_match_closed_forms() {
        for rho in [c(0.3, 0.2), c(-0.5, 0.0), c(0.0, 0.9)] {
            let (cc, _, res) = solve_multiplier(2, c(-1.0, 0.0), rho).unwrap();
            // period-2 multiplier is 4 (c + 1)
            assert!((cc - (rho / 4.0 - 1.0)).norm() < 1e-12, "{cc}");
            assert!(res < 1e-12);
            let (c1, _, _) = solve_multiplier(1, c(0.0, 0.0), rho).unwrap();
            assert!((c1 - (rho / 2.0 - rho * rho / 4.0)).norm() < 1e-15);
        }
        let (c3, z, res) = solve_multiplier(3, c(AIRPLANE, 0.0), c(0.4, 0.0)).unwrap();
        let g = Polynomial::quadratic(c3);
        let (w, dw) = g.iterate_with_derivative(z, 3);
        assert!((w - z).norm() < 1e-12 && (dw - 0.4).norm() < 1e-12 && res < 1e-12);
        assert!(c3.im.abs() < 1e-12 && (c3.re - AIRPLANE).abs() < 0.05);
    }

    #[test]
    fn internal_markings() {
        let opts = LandingOptions::default();
        let m = internal_marking(&Polynomial::power(2), 1, &opts).unwrap();
        assert_eq!(m.theta0, a(0, 1));
        assert!((m.fixed_boundary_point - 1.0).norm() < 1e-12);
        let m = internal_marking(&Polynomial::quadratic(c(-1.0, 0.0)), 2, &opts).unwrap();
        assert_eq!((m.theta0, m.class.clone()), (a(1, 3), vec![a(1, 3), a(2, 3)]));
        assert!((m.fixed_boundary_point.re - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert_eq!(m.tuning(2).unwrap().block_strings(), vec!["01", "10"]);
        let m = internal_marking(&Polynomial::quadratic(c(AIRPLANE, 0.0)), 3, &opts).unwrap();
        assert_eq!(m.class, vec![a(2, 7), a(5, 7)]);
        assert_eq!(m.tuning(2).unwrap().block_strings(), vec!["011", "100"]);
        let (w, _) = Polynomial::quadratic(c(AIRPLANE, 0.0)).iterate_with_derivative(m.fixed_boundary_point, 3);
        assert!((w - m.fixed_boundary_point).norm() < 1e-12);
    }

    #[test]
    fn straightens_affine_copies() {
        let opts = LandingOptions::default();
        let rabbit = c(-0.122_561_166_876_653_6, 0.744_861_766_619_744_2);
        for (cc, b) in [(c(-0.9, 0.1), c(0.3, -0.2)), (c(0.1, 0.2), c(-1.0, 0.5)), (rabbit + 0.01, c(0.2, 0.1))] {
            let f = affine_copy(cc, b);
            let r = ReturnMap::identity(&f, 1e-12).unwrap();
            assert!((r.critical_point + b).norm() < 1e-12);
            let s = straighten(&r, &f, 2, &opts).unwrap();
            assert!((s.parameter - cc).norm() < 1e-8, "{} vs {cc}", s.parameter);
            assert_eq!(s.method, "multiplier-matching");
        }
        let f = Polynomial::quadratic(rabbit);
        let s = straighten(&ReturnMap::identity(&f, 1e-12).unwrap(), &f, 2, &opts).unwrap();
        assert_eq!(s.method, "center-solving");
        assert!((s.parameter - rabbit).norm() < 1e-10);
        assert_eq!(s.candidates.iter().filter(|ch| ch.colanding_gap.is_some_and(|g| g <= MARKING_RADIUS)).count(), 1);
    }

    #[test]
    fn minimal_period_of_the_attracting_cycle() {
        // period-2 multiplier 4 (c + 1) = -0.7: the tail of period 2 closes before period 1
        let f = Polynomial::quadratic(c(-1.175, 0.0));
        let r = ReturnMap { m0: 2, critical_point: c(0.0, 0.0), tuning: TuningSubstitution::identity(2).unwrap() };
        let cyc = find_attracting_cycle(&f, &r).unwrap();
        assert_eq!(cyc.period, 1);
        assert!((cyc.multiplier + 0.7).norm() < 1e-12);
        let s = straighten(&r, &f, 2, &LandingOptions::default()).unwrap();
        assert!((s.parameter - c(-0.4725, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn non_hyperbolic_maps_are_refused() {
        let opts = LandingOptions::default();
        let f = Polynomial::quadratic(c(0.0, 1.0));
        assert!(matches!(straighten(&ReturnMap::identity(&f, 1e-12).unwrap(), &f, 2, &opts), Err(Error::NonHyperbolic(_))));
        let f = Polynomial::quadratic(c(0.5, 0.0));
        assert!(matches!(straighten(&ReturnMap::identity(&f, 1e-12).unwrap(), &f, 2, &opts), Err(Error::NonHyperbolic(_))));
    }

    #[test]
    fn airplane_renormalization_at_depth_three() {
        let f = Polynomial::quadratic(c(AIRPLANE, 0.0));
        let opts = LandingOptions::default();
        let z = find_admissible_set(&f, 3, &opts).unwrap();
        let nest = crate::puzzle::build_puzzle_nest(&f, &z, 3, &opts).unwrap();
        let r = detect_renormalization(&f, &nest, 3, 3, 1e-12).unwrap();
        assert_eq!(r.degree, 2);
        assert!(r.nested);
        assert_eq!(r.orbit_pieces.len(), 3);
        assert!(r.disjointness_evidence.iter().all(|e| e.2 > 0.0));
        assert_eq!(r.target_piece.polygon.vertices, nest.level(0).y_piece().unwrap().polygon.vertices);
        // m0 = 2 is not a return time of the airplane
        assert!(detect_renormalization(&f, &nest, 2, 3, 1e-12).is_err());
    }

    #[test]
    fn trivial_puzzle_renormalization() {
        let f = affine_copy(c(-0.2, 0.3), c(0.5, 0.5));
        let opts = LandingOptions::default();
        let nest = build_puzzle_nest_from_angles(&f, &[], 2, &opts).unwrap();
        let r = detect_renormalization(&f, &nest, 1, 2, 1e-12).unwrap();
        assert_eq!(r.degree, 2);
        assert!((r.critical_point + c(0.5, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn lamination_containment_gate() {
        let opts = LandingOptions::default();
        let universe = crate::lamination::default_universe(2, 4).unwrap();
        let basilica = Polynomial::quadratic(c(-1.0, 0.0));
        let lam0 = compute_lamination(&basilica, &universe, &opts).unwrap();
        let t = TuningSubstitution::new(2, 2, vec![vec![0, 1], vec![1, 0]]).unwrap();
        let inside = Polynomial::quadratic(c(-1.1, 0.05));
        assert!(ReturnMap::from_lamination(&inside, &lam0, 2, c(0.0, 0.0), t.clone(), &opts).is_ok());
        let outside = Polynomial::quadratic(c(-0.1, 0.7));
        assert!(matches!(ReturnMap::from_lamination(&outside, &lam0, 2, c(0.0, 0.0), t, &opts), Err(Error::NotRenormalizable(_))));
    }
}
