//! Superattracting cycles, the internal Böttcher coordinate of the return map on the
//! critical Fatou component, internal rays and boundary sampling.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{find_roots, is_finite, Polynomial};
use crate::potential::{newton_pullback, Continuation, Phase, TraceStatus};

/// Internal potential at which rays start; the local inverse coordinate is evaluated
/// for `|w|` between `exp(-NEAR_CENTER * D)` and `exp(-NEAR_CENTER)`.
const NEAR_CENTER: f64 = 3.0;
/// Truncation order of the local series of the return map.
const SERIES_ORDER: usize = 64;
/// Internal potential where internal rays stop by default.
pub const DEFAULT_INTERNAL_TERMINAL: f64 = 1e-8;
/// Period cap for the superattracting cycle search.
pub const MAX_CYCLE_PERIOD: usize = 64;

/// A superattracting cycle through a critical point together with the leading term of
/// the return map `F = f^m0` at that critical point: `F(c + u) = c + b u^D + ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperattractingCycle {
    pub critical_point: Complex64,
    pub period: usize,
    pub points: Vec<Complex64>,
    pub local_degree: usize,
    pub leading: Complex64,
    /// `beta^(D-1) = b`; the internal coordinate is `phi(c + u) ~ beta u`.
    pub beta: Complex64,
    /// Truncated series of `F(c + u) - c` in `u`.
    series: Vec<Complex64>,
}

/// `(a o p)(u)` truncated to `order`, for `a` without constant term.
fn compose(a: &[Complex64], p: &[Complex64], order: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); order + 1];
    let mut power = p.to_vec();
    power.truncate(order + 1);
    for (k, ak) in a.iter().enumerate().skip(1) {
        if k > 1 {
            let mut next = vec![Complex64::new(0.0, 0.0); order + 1];
            for (i, x) in power.iter().enumerate() {
                if x.norm() == 0.0 {
                    continue;
                }
                for (j, y) in p.iter().enumerate() {
                    if i + j > order {
                        break;
                    }
                    next[i + j] += x * y;
                }
            }
            power = next;
        }
        for (i, x) in power.iter().enumerate() {
            out[i] += ak * x;
        }
    }
    out
}

fn eval_series(s: &[Complex64], u: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut dv = Complex64::new(0.0, 0.0);
    for a in s.iter().rev() {
        dv = dv * u + v;
        v = v * u + a;
    }
    (v, dv)
}

/// Taylor coefficients of `coeffs` at `c`, by repeated synthetic division.
pub fn taylor_at(coeffs: &[Complex64], c: Complex64) -> Vec<Complex64> {
    let mut work = coeffs.to_vec();
    let mut out = Vec::with_capacity(coeffs.len());
    while !work.is_empty() {
        let n = work.len();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut quotient = vec![Complex64::new(0.0, 0.0); n - 1];
        for k in (0..n).rev() {
            acc = acc * c + work[k];
            if k > 0 {
                quotient[k - 1] = acc;
            }
        }
        out.push(acc);
        work = quotient;
    }
    out
}

fn local_degree(coeffs: &[Complex64], c: Complex64) -> (usize, Complex64) {
    let t = taylor_at(coeffs, c);
    let scale = t.iter().map(|x| x.norm()).fold(1.0, f64::max);
    for (k, a) in t.iter().enumerate().skip(1) {
        if a.norm() > 1e-8 * scale {
            return (k, *a);
        }
    }
    (t.len() - 1, *t.last().unwrap())
}

impl SuperattractingCycle {
    /// Builds the cycle through `critical_point`, which must return to itself within
    /// `max_period` steps.
    pub fn new(f: &Polynomial, critical_point: Complex64, max_period: usize, tol: f64) -> Result<Self> {
        let c = critical_point;
        let mut z = c;
        let mut points = vec![c];
        let mut period = None;
        for k in 1..=max_period {
            z = f.eval(z);
            if !is_finite(z) {
                break;
            }
            if (z - c).norm() <= tol.max(1e-12) * (1.0 + c.norm()) {
                period = Some(k);
                break;
            }
            points.push(z);
        }
        let period = period.ok_or(Error::NoSuperattractingCycle)?;
        let (dc, ac) = local_degree(f.coeffs(), c);
        if dc < 2 {
            return Err(Error::InternalBoettcher(format!("{c} is not a critical point")));
        }
        if ac.norm() == 0.0 {
            return Err(Error::InternalBoettcher("degenerate critical point".into()));
        }
        for &p in &points[1..] {
            if f.eval_derivative(p).norm() <= 1e-8 {
                return Err(Error::InternalBoettcher(format!("cycle point {p} is critical as well")));
            }
        }
        let order = SERIES_ORDER.min(f.degree().pow(period.min(6) as u32));
        let mut series = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        for &p in &points {
            let mut t = taylor_at(f.coeffs(), p);
            t[0] = Complex64::new(0.0, 0.0);
            if p == c {
                for x in t.iter_mut().take(dc) {
                    *x = Complex64::new(0.0, 0.0);
                }
            }
            series = compose(&t, &series, order);
        }
        for x in series.iter_mut().take(dc) {
            *x = Complex64::new(0.0, 0.0);
        }
        let leading = series[dc];
        let beta = if dc == 2 { leading } else { leading.powf(1.0 / (dc as f64 - 1.0)) };
        Ok(SuperattractingCycle { critical_point: c, period, points, local_degree: dc, leading, beta, series })
    }

    /// The superattracting cycle through 0, or the first periodic critical point.
    pub fn find(f: &Polynomial, tol: f64) -> Result<Self> {
        let zero = Complex64::new(0.0, 0.0);
        if f.is_normal_form() {
            if let Ok(s) = Self::new(f, zero, MAX_CYCLE_PERIOD, tol) {
                return Ok(s);
            }
        }
        for cp in f.critical_points(tol.max(1e-12))?.points {
            if let Ok(s) = Self::new(f, cp.point, MAX_CYCLE_PERIOD, tol) {
                return Ok(s);
            }
        }
        Err(Error::NoSuperattractingCycle)
    }

    /// Internal Böttcher coordinate `phi(c + u)` and its derivative, for small `u`.
    pub fn phi(&self, u: Complex64) -> (Complex64, Complex64) {
        let d = self.local_degree;
        let b = self.leading;
        // log phi = log(beta u) + sum_k D^-(k+1) log Q(u_k), Q(u) = P(u) / (b u^D)
        let q_series: Vec<Complex64> = self.series[d..].iter().map(|x| x / b).collect();
        let mut uk = u;
        let mut duk = Complex64::new(1.0, 0.0);
        let mut log_sum = Complex64::new(0.0, 0.0);
        let mut dlog = Complex64::new(0.0, 0.0);
        let mut weight = 1.0 / d as f64;
        for _ in 0..200 {
            let (q, dq) = eval_series(&q_series, uk);
            log_sum += q.ln() * weight;
            dlog += dq / q * duk * weight;
            let (pu, dpu) = eval_series(&self.series, uk);
            if (q - 1.0).norm() * weight < 1e-18 || pu.norm() < 1e-200 {
                break;
            }
            duk *= dpu;
            uk = pu;
            weight /= d as f64;
        }
        let phi = self.beta * u * log_sum.exp();
        let dphi = phi * (1.0 / u + dlog);
        (phi, dphi)
    }

    /// Inverse of `phi` near the center: the offset `u` with `phi(c + u) = w`.
    pub fn psi(&self, w: Complex64) -> Option<Complex64> {
        let mut u = w / self.beta;
        for _ in 0..50 {
            let (p, dp) = self.phi(u);
            let step = (p - w) / dp;
            if !is_finite(step) {
                return None;
            }
            u -= step;
            if step.norm() <= 1e-15 * u.norm() {
                return Some(u);
            }
        }
        None
    }

    /// Return map `F = f^m0`.
    pub fn return_map(&self, f: &Polynomial, z: Complex64) -> Complex64 {
        f.iterate(z, self.period)
    }

    fn solve<P: Phase>(&self, f: &Polynomial, theta: &P, s: f64, seed: Complex64) -> Option<Complex64> {
        let d = self.local_degree as f64;
        let mut n = 0u32;
        let mut big = s;
        while big < NEAR_CENTER {
            big *= d;
            n += 1;
        }
        let w = Complex64::from_polar((-big).exp(), TAU * theta.at(self.local_degree, n));
        let target = self.critical_point + self.psi(w)?;
        newton_pullback(f, n * self.period as u32, target, seed)
    }

    /// Samples the internal ray of angle `theta` (turns) from the center out to internal
    /// potential `s_end`.
    pub fn internal_ray(&self, f: &Polynomial, theta: f64, s_end: f64) -> Result<InternalRay> {
        self.internal_ray_with(f, &theta, s_end).map(|(samples, status)| InternalRay { theta, samples, status })
    }

    fn internal_ray_with<P: Phase>(&self, f: &Polynomial, theta: &P, s_end: f64) -> Result<(Vec<(Complex64, f64)>, TraceStatus)> {
        if !(s_end > 0.0 && s_end < NEAR_CENTER) {
            return Err(Error::InvalidArgument(format!("internal potential {s_end} out of range")));
        }
        let w = Complex64::from_polar((-NEAR_CENTER).exp(), TAU * theta.at(self.local_degree, 0));
        let start = self.critical_point
            + self.psi(w).ok_or_else(|| Error::InternalBoettcher("local inverse coordinate diverged".into()))?;
        let ratio = (self.local_degree as f64).powf(-0.125);
        let mut walker = Continuation::new(|s, seed| self.solve(f, theta, s, seed), start, NEAR_CENTER);
        let mut samples = vec![(start, NEAR_CENTER)];
        let mut status = TraceStatus::ReachedTarget;
        while walker.h > s_end {
            let next = (walker.h * ratio).max(s_end);
            if let Err(st) = walker.step_to(next, 8) {
                status = st;
                break;
            }
            samples.push((walker.z, walker.h));
        }
        Ok((samples, status))
    }

    /// Endpoint of the internal ray of angle `theta`.
    pub fn boundary_point(&self, f: &Polynomial, theta: f64, s_end: f64) -> Result<Complex64> {
        let ray = self.internal_ray(f, theta, s_end)?;
        if ray.status != TraceStatus::ReachedTarget {
            return Err(Error::InternalBoettcher(format!("internal ray {theta} stopped at s = {:.3e}", ray.terminal().1)));
        }
        Ok(ray.terminal().0)
    }

    /// `n` points of the boundary of the critical component, from equally spaced
    /// internal angles. Rays that fail to reach `s_end` are skipped.
    pub fn boundary_samples(&self, f: &Polynomial, n: usize, s_end: f64) -> Vec<Complex64> {
        (0..n)
            .into_par_iter()
            .filter_map(|k| self.boundary_point(f, k as f64 / n as f64, s_end).ok())
            .collect()
    }

    /// Boundary samples of every component of the cycle and of all their preimages up
    /// to `depth` further pullbacks. Entry `k` holds the depth-`k` level.
    pub fn fatou_boundary_levels(&self, f: &Polynomial, n: usize, s_end: f64, depth: usize) -> Result<Vec<Vec<Complex64>>> {
        let base = self.boundary_samples(f, n, s_end);
        let mut level0 = base.clone();
        let mut cur = base;
        for _ in 1..self.period {
            cur = cur.iter().map(|&z| f.eval(z)).collect();
            level0.extend_from_slice(&cur);
        }
        let mut levels = vec![level0];
        let coeffs = f.coeffs().to_vec();
        for _ in 0..depth {
            let prev = levels.last().unwrap();
            let next: Vec<Complex64> = prev
                .par_iter()
                .map(|&w| {
                    let mut c = coeffs.clone();
                    c[0] -= w;
                    find_roots(&c, 1e-12).unwrap_or_default()
                })
                .flatten()
                .collect();
            levels.push(next);
        }
        Ok(levels)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InternalRay {
    pub theta: f64,
    /// `(point, internal potential)` pairs from the center outward.
    pub samples: Vec<(Complex64, f64)>,
    pub status: TraceStatus,
}

impl InternalRay {
    pub fn terminal(&self) -> (Complex64, f64) {
        *self.samples.last().expect("non-empty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn taylor_shift() {
        // z^2 + 1 at 1: 2 + 2u + u^2
        let t = taylor_at(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], c(1.0, 0.0));
        assert_eq!(t, vec![c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn unit_disk_for_z2() {
        let f = Polynomial::power(2);
        let s = SuperattractingCycle::find(&f, 1e-12).unwrap();
        assert_eq!((s.period, s.local_degree), (1, 2));
        for z in s.boundary_samples(&f, 16, 1e-8) {
            assert!((z.norm() - 1.0).abs() < 1e-6, "{z}");
        }
        let z = s.boundary_point(&f, 0.25, 1e-10).unwrap();
        assert!((z - c(0.0, 1.0)).norm() < 1e-8);
    }

    #[test]
    fn basilica_zero_ray_lands_at_alpha() {
        let f = Polynomial::quadratic(c(-1.0, 0.0));
        let s = SuperattractingCycle::find(&f, 1e-12).unwrap();
        assert_eq!(s.period, 2);
        assert!((s.leading - c(-2.0, 0.0)).norm() < 1e-12);
        let alpha = (1.0 - 5f64.sqrt()) / 2.0;
        let ray = s.internal_ray(&f, 0.0, 1e-8).unwrap();
        assert_eq!(ray.status, TraceStatus::ReachedTarget);
        assert!((ray.terminal().0 - c(alpha, 0.0)).norm() < 1e-3, "{}", ray.terminal().0);
    }

    #[test]
    fn internal_coordinate_conjugates_to_power() {
        let f = Polynomial::quadratic(c(-1.7548776662466927, 0.0));
        let s = SuperattractingCycle::find(&f, 1e-12).unwrap();
        assert_eq!(s.period, 3);
        for u in [c(0.01, 0.02), c(-0.03, 0.0), c(0.0, 0.05)] {
            let image = s.return_map(&f, s.critical_point + u) - s.critical_point;
            let lhs = s.phi(image).0;
            let rhs = s.phi(u).0.powu(2);
            assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm(), "{lhs} {rhs}");
            let back = s.psi(s.phi(u).0).unwrap();
            assert!((back - u).norm() < 1e-14);
        }
    }

    #[test]
    fn affine_copy_cycle() {
        // (z + 1/2)^2 - 1 - 1/2 is the basilica moved by -1/2; its critical point is -1/2.
        let f = Polynomial::monic(vec![c(-1.25, 0.0), c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let s = SuperattractingCycle::find(&f, 1e-12).unwrap();
        assert_eq!(s.period, 2);
        assert!((s.critical_point - c(-0.5, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn no_cycle_for_escaping_critical_point() {
        let f = Polynomial::quadratic(c(1.0, 0.0));
        assert!(matches!(SuperattractingCycle::find(&f, 1e-12), Err(Error::NoSuperattractingCycle)));
    }
}
