//! Admissible sets: biaccessible repelling periodic orbits that are buried and avoid
//! the free critical orbit, found by a period-by-period landing search.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angle::{angle_orbit, angles_of_period, Angle};
use crate::error::{Error, Result};
use crate::internal::{SuperattractingCycle, DEFAULT_INTERNAL_TERMINAL};
use crate::lamination::cluster_points;
use crate::poly::{CycleClass, Polynomial};
use crate::potential::{landing_points, Certificate, LandingOptions, LandingPoint};

pub const DEFAULT_EXCLUSION_RADIUS: f64 = 1e-3;
pub const DEFAULT_BURIAL_DEPTH: usize = 6;
/// Internal rays per component used to sample Fatou boundaries.
pub const BOUNDARY_RAYS: usize = 128;
/// Forward steps of a free critical point sampled for orbit avoidance.
pub const CRITICAL_ORBIT_DEPTH: usize = 256;

/// A yes/no answer with the measurement that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub value: bool,
    pub measure: f64,
    pub note: String,
}

/// Ray-period compatibility of a periodic point with the boundary of the critical
/// cycle of Fatou components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayPeriodCheck {
    /// The ray period does not divide `lcm(q, m0)`: the point cannot lie on the boundary
    /// of a component of the cycle.
    ExcludedFromBoundaries,
    /// Boundary membership is combinatorially possible; numeric evidence decides.
    Compatible,
    /// The ray period is not a multiple of the point period.
    Inconsistent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurialEvidence {
    pub buried: bool,
    pub combinatorial: RayPeriodCheck,
    pub point_period: usize,
    pub ray_period: usize,
    pub component_period: usize,
    /// Smallest distance from the orbit to sampled Fatou component boundaries.
    pub min_boundary_distance: f64,
    pub exclusion_radius: f64,
    pub depth_cap: usize,
    pub samples: usize,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Combinatorial half of the burial test.
pub fn ray_period_check(point_period: usize, ray_period: usize, component_period: usize) -> RayPeriodCheck {
    if point_period == 0 || ray_period % point_period != 0 {
        return RayPeriodCheck::Inconsistent;
    }
    let lcm = point_period / gcd(point_period, component_period) * component_period;
    if lcm % ray_period != 0 {
        RayPeriodCheck::ExcludedFromBoundaries
    } else {
        RayPeriodCheck::Compatible
    }
}

/// Burial test for the periodic landing point `p`, with its orbit sampled against the
/// boundaries of the critical Fatou cycle and their pullbacks to `depth_cap`.
pub fn burial_test(f: &Polynomial, p: &LandingPoint, depth_cap: usize, tol: f64) -> Result<BurialEvidence> {
    burial_test_with(f, p, depth_cap, tol, DEFAULT_EXCLUSION_RADIUS)
}

pub fn burial_test_with(
    f: &Polynomial,
    p: &LandingPoint,
    depth_cap: usize,
    tol: f64,
    exclusion_radius: f64,
) -> Result<BurialEvidence> {
    let Certificate::Periodic { period, .. } = p.certificate else {
        return Err(Error::InvalidArgument(format!("landing point of {} is not certified periodic", p.angle)));
    };
    let sc = SuperattractingCycle::find(f, tol.max(1e-12))?;
    let ray_period = angle_orbit(p.angle, f.degree() as u64).period;
    let combinatorial = ray_period_check(period, ray_period, sc.period);
    let levels = sc.fatou_boundary_levels(f, BOUNDARY_RAYS, DEFAULT_INTERNAL_TERMINAL, depth_cap)?;
    let orbit: Vec<Complex64> = (0..period).scan(p.point, |z, _| {
        let cur = *z;
        *z = f.eval(cur);
        Some(cur)
    }).collect();
    let mut dist = f64::INFINITY;
    let mut samples = 0;
    for level in &levels {
        samples += level.len();
        for w in level {
            for z in &orbit {
                dist = dist.min((w - z).norm());
            }
        }
    }
    let buried = combinatorial != RayPeriodCheck::Inconsistent && dist > exclusion_radius;
    Ok(BurialEvidence {
        buried,
        combinatorial,
        point_period: period,
        ray_period,
        component_period: sc.period,
        min_boundary_distance: dist,
        exclusion_radius,
        depth_cap,
        samples,
    })
}

/// Critical points outside the superattracting cycle.
pub fn free_critical_points(f: &Polynomial, sc: &SuperattractingCycle, tol: f64) -> Result<Vec<Complex64>> {
    let cps = f.critical_points(tol.max(1e-12))?;
    Ok(cps
        .points
        .iter()
        .map(|c| c.point)
        .filter(|&c| sc.points.iter().all(|&p| (p - c).norm() > 1e-6))
        .collect())
}

fn critical_orbit_distance(f: &Polynomial, free: &[Complex64], orbit: &[Complex64]) -> f64 {
    let r = f.escape_radius();
    let mut best = f64::INFINITY;
    for &c in free {
        let mut z = c;
        for _ in 0..CRITICAL_ORBIT_DEPTH {
            for p in orbit {
                best = best.min((z - p).norm());
            }
            if z.norm() > r {
                break;
            }
            z = f.eval(z);
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleSet {
    pub generator: LandingPoint,
    /// One landing point per orbit point, in forward order starting at the generator.
    pub orbit_points: Vec<LandingPoint>,
    pub landing_angles: Vec<Vec<Angle>>,
    pub multiplier: Complex64,
    pub buried: BurialEvidence,
    pub biaccessible: bool,
    pub avoids_free_critical_orbit: Evidence,
}

impl AdmissibleSet {
    /// All angles landing on the orbit, sorted.
    pub fn angles(&self) -> Vec<Angle> {
        let mut v: Vec<Angle> = self.landing_angles.iter().flatten().copied().collect();
        v.sort();
        v.dedup();
        v
    }

    /// Re-verifies invariance, repulsion and biaccessibility.
    pub fn recheck(&self, f: &Polynomial, tol: f64) -> Result<()> {
        let n = self.orbit_points.len();
        let scale = 1e3 * tol.max(1e-12);
        for i in 0..n {
            let img = f.eval(self.orbit_points[i].point);
            let next = self.orbit_points[(i + 1) % n].point;
            if (img - next).norm() > scale * (1.0 + next.norm()) {
                return Err(Error::InvalidArgument(format!("orbit point {i} does not map to the next")));
            }
        }
        if CycleClass::of(self.multiplier) != CycleClass::Repelling {
            return Err(Error::InvalidArgument("generator cycle is not repelling".into()));
        }
        if self.landing_angles.iter().any(|a| a.len() < 2) {
            return Err(Error::InvalidArgument("an orbit point has fewer than two rays".into()));
        }
        Ok(())
    }
}

/// Builds the candidate orbit generated by the landing point of `angle`, with all of
/// its evidence, from landings of the angles in `pool` (which must contain the full
/// landing classes of the orbit).
pub fn admissible_candidate(
    f: &Polynomial,
    angle: Angle,
    pool: &[Angle],
    opts: &LandingOptions,
    depth_cap: usize,
) -> Result<AdmissibleSet> {
    let lps: Vec<LandingPoint> = landing_points(f, pool, opts).into_iter().filter_map(|r| r.ok()).filter(|l| l.is_certified()).collect();
    candidate_from_landings(f, angle, &lps, opts.tol, depth_cap)
}

fn candidate_from_landings(
    f: &Polynomial,
    angle: Angle,
    lps: &[LandingPoint],
    tol: f64,
    depth_cap: usize,
) -> Result<AdmissibleSet> {
    let d = f.degree() as u64;
    let radius = 100.0 * tol;
    let gen = lps
        .iter()
        .find(|l| l.angle == angle)
        .cloned()
        .ok_or_else(|| Error::Uncertified { angle, reason: "landing not certified".into() })?;
    let Certificate::Periodic { period, multiplier } = gen.certificate else {
        return Err(Error::InvalidArgument(format!("{angle} does not land at a periodic point")));
    };
    let mut orbit_points = Vec::new();
    let mut landing_angles = Vec::new();
    let mut t = angle;
    for _ in 0..period {
        let lp = lps.iter().find(|l| l.angle == t).cloned().ok_or(Error::Uncertified { angle: t, reason: "missing".into() })?;
        let class: Vec<Angle> = lps.iter().filter(|l| (l.point - lp.point).norm() <= radius).map(|l| l.angle).collect();
        orbit_points.push(lp);
        landing_angles.push(class);
        t = t.multiply_by(d);
    }
    let sc = SuperattractingCycle::find(f, tol.max(1e-12))?;
    let free = free_critical_points(f, &sc, tol)?;
    let pts: Vec<Complex64> = orbit_points.iter().map(|l| l.point).collect();
    let cdist = critical_orbit_distance(f, &free, &pts);
    let avoids = Evidence {
        value: cdist > DEFAULT_EXCLUSION_RADIUS,
        measure: cdist,
        note: format!("{} free critical point(s), {CRITICAL_ORBIT_DEPTH} forward steps", free.len()),
    };
    let buried = burial_test(f, &gen, depth_cap, tol)?;
    let biaccessible = landing_angles.iter().all(|a| a.len() >= 2);
    Ok(AdmissibleSet { generator: gen, orbit_points, landing_angles, multiplier, buried, biaccessible, avoids_free_critical_orbit: avoids })
}

fn describe(set: &AdmissibleSet) -> String {
    let mut why = Vec::new();
    if CycleClass::of(set.multiplier) != CycleClass::Repelling {
        why.push("not repelling".to_string());
    }
    if !set.buried.buried {
        why.push(format!(
            "not buried ({:?}, boundary distance {:.3e})",
            set.buried.combinatorial, set.buried.min_boundary_distance
        ));
    }
    if !set.avoids_free_critical_orbit.value {
        why.push(format!("meets the free critical orbit (distance {:.3e})", set.avoids_free_critical_orbit.measure));
    }
    format!(
        "point {:.6} with angles {:?}: {}",
        set.generator.point,
        set.landing_angles[0].iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        why.join("; ")
    )
}

/// Searches ray periods `1..=max_period` for an admissible orbit.
pub fn find_admissible_set(f: &Polynomial, max_period: u32, opts: &LandingOptions) -> Result<AdmissibleSet> {
    let sc = SuperattractingCycle::find(f, opts.tol.max(1e-12))?;
    let zero = Complex64::new(0.0, 0.0);
    if f.is_normal_form() && (sc.critical_point - zero).norm() > 1e-9 {
        return Err(Error::NoSuperattractingCycle);
    }
    let d = f.degree() as u64;
    let mut near_misses = Vec::new();
    for ell in 1..=max_period {
        let angles = angles_of_period(ell, d, true)?;
        let lps: Vec<LandingPoint> =
            landing_points(f, &angles, opts).into_iter().filter_map(|r| r.ok()).filter(|l| l.is_certified()).collect();
        let labels = cluster_points(&lps.iter().map(|l| l.point).collect::<Vec<_>>(), 100.0 * opts.tol);
        let mut seen = BTreeSet::new();
        for (i, lp) in lps.iter().enumerate() {
            let size = labels.iter().filter(|&&l| l == labels[i]).count();
            if size < 2 || !seen.insert(labels[i]) {
                continue;
            }
            // One candidate per cycle: skip points already covered by an earlier orbit.
            let set = match candidate_from_landings(f, lp.angle, &lps, opts.tol, DEFAULT_BURIAL_DEPTH) {
                Ok(s) => s,
                Err(e) => {
                    near_misses.push(format!("period {ell}, angle {}: {e}", lp.angle));
                    continue;
                }
            };
            for q in &set.orbit_points {
                if let Some(j) = lps.iter().position(|l| l.angle == q.angle) {
                    seen.insert(labels[j]);
                }
            }
            let ok = CycleClass::of(set.multiplier) == CycleClass::Repelling
                && set.biaccessible
                && set.buried.buried
                && set.avoids_free_critical_orbit.value;
            if ok {
                return Ok(set);
            }
            near_misses.push(format!("period {ell}, {}", describe(&set)));
        }
    }
    Err(Error::NoAdmissibleSet {
        summary: format!("ray periods 1..={max_period} exhausted, {} biaccessible candidate(s) rejected", near_misses.len()),
        near_misses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn a(p: u64, q: u64) -> Angle {
        Angle::new(p, q).unwrap()
    }

    const AIRPLANE: f64 = -1.7548776662466927;

    #[test]
    fn ray_period_shorter_than_point_period_is_rejected() {
        assert_eq!(ray_period_check(2, 1, 1), RayPeriodCheck::Inconsistent);
        assert_eq!(ray_period_check(1, 2, 3), RayPeriodCheck::ExcludedFromBoundaries);
        assert_eq!(ray_period_check(1, 2, 2), RayPeriodCheck::Compatible);
    }

    #[test]
    fn z2_has_no_admissible_set() {
        let f = Polynomial::power(2);
        match find_admissible_set(&f, 6, &LandingOptions::default()) {
            Err(Error::NoAdmissibleSet { near_misses, .. }) => assert!(near_misses.is_empty()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn basilica_alpha_is_on_the_boundary() {
        let f = Polynomial::quadratic(c(-1.0, 0.0));
        match find_admissible_set(&f, 3, &LandingOptions::default()) {
            Err(Error::NoAdmissibleSet { near_misses, .. }) => {
                assert!(near_misses.iter().any(|m| m.contains("1/3") && m.contains("not buried")), "{near_misses:?}");
            }
            other => panic!("{other:?}"),
        }
        let lp = crate::potential::landing_point(&f, a(1, 3), &LandingOptions::default()).unwrap();
        let ev = burial_test(&f, &lp, 2, 1e-9).unwrap();
        assert!(!ev.buried);
        assert!(ev.min_boundary_distance < 1e-4);
    }

    #[test]
    fn airplane_alpha_is_admissible() {
        let f = Polynomial::quadratic(c(AIRPLANE, 0.0));
        let set = find_admissible_set(&f, 3, &LandingOptions::default()).unwrap();
        assert_eq!(set.angles(), vec![a(1, 3), a(2, 3)]);
        assert_eq!(set.orbit_points.len(), 1);
        assert_eq!(set.buried.combinatorial, RayPeriodCheck::ExcludedFromBoundaries);
        assert!(set.buried.min_boundary_distance > 1e-2);
        let alpha = (1.0 - (1.0 - 4.0 * AIRPLANE).sqrt()) / 2.0;
        assert!((set.generator.point - c(alpha, 0.0)).norm() < 1e-9);
        set.recheck(&f, 1e-9).unwrap();
    }
}
