//! Polynomial arithmetic, simultaneous root finding, periodic cycles and multipliers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for root and cycle computations.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Width of the neutral band on `|rho| - 1`.
pub const NEUTRAL_BAND: f64 = 1e-9;
const ABERTH_MAX_ITER: usize = 3000;
/// Beyond this modulus the Newton ratio of an iterate is taken from its leading term.
const HUGE: f64 = 1e60;

/// Monic polynomial with coefficients indexed by power.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl Polynomial {
    /// `z^d + a_{d-1} z^{d-1} + ... + a_2 z^2 + a_0`: monic with vanishing linear term.
    pub fn normal_form(coeffs: Vec<Complex64>) -> Result<Self> {
        let p = Self::monic(coeffs)?;
        if p.coeffs[1] != Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidPolynomial("linear coefficient must be 0".into()));
        }
        Ok(p)
    }

    /// Any monic polynomial of degree at least 2. Used for affine conjugates of
    /// normal forms.
    pub fn monic(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() < 3 {
            return Err(Error::InvalidPolynomial(format!("degree {} < 2", coeffs.len().saturating_sub(1))));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidPolynomial("non-finite coefficient".into()));
        }
        if *coeffs.last().unwrap() != Complex64::new(1.0, 0.0) {
            return Err(Error::InvalidPolynomial("leading coefficient must be exactly 1".into()));
        }
        Ok(Polynomial { coeffs, label: None })
    }

    pub fn quadratic(c: Complex64) -> Self {
        Self::normal_form(vec![c, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]).expect("valid")
    }

    pub fn cubic(a2: Complex64, a0: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self::normal_form(vec![a0, zero, a2, Complex64::new(1.0, 0.0)]).expect("valid")
    }

    pub fn power(d: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); d + 1];
        coeffs[d] = Complex64::new(1.0, 0.0);
        Self::normal_form(coeffs).expect("valid")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_normal_form(&self) -> bool {
        self.coeffs[1] == Complex64::new(0.0, 0.0)
    }

    /// Coefficient `a_{d-1}`.
    pub fn subleading(&self) -> Complex64 {
        self.coeffs[self.degree() - 1]
    }

    /// Horner evaluation. Non-finite output means the orbit escaped.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z)
    }

    /// `f(z)`, or `None` when the value overflowed.
    pub fn try_eval(&self, z: Complex64) -> Option<Complex64> {
        let w = self.eval(z);
        is_finite(w).then_some(w)
    }

    /// `(f(z), f'(z))` in a single Horner pass.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn eval_derivative(&self, z: Complex64) -> Complex64 {
        self.eval_with_derivative(z).1
    }

    /// Coefficients of `f'`.
    pub fn derivative(&self) -> Vec<Complex64> {
        derivative(&self.coeffs)
    }

    pub fn iterate(&self, z: Complex64, n: usize) -> Complex64 {
        (0..n).fold(z, |w, _| self.eval(w))
    }

    /// `(f^n(z), (f^n)'(z))`.
    pub fn iterate_with_derivative(&self, z: Complex64, n: usize) -> (Complex64, Complex64) {
        let mut w = z;
        let mut dw = Complex64::new(1.0, 0.0);
        for _ in 0..n {
            let (v, dv) = self.eval_with_derivative(w);
            dw *= dv;
            w = v;
        }
        (w, dw)
    }

    /// Crude bound on the filled Julia set.
    pub fn escape_radius(&self) -> f64 {
        let s: f64 = self.coeffs[..self.degree()].iter().map(|c| c.norm()).sum();
        2.0 * (1.0 + s)
    }

    /// Critical points with multiplicities.
    pub fn critical_points(&self, tol: f64) -> Result<CriticalSet> {
        check_tol(tol)?;
        let d = self.degree();
        let dp = self.derivative();
        let (mut roots, zero_mult) = if self.is_normal_form() {
            // f' = z q(z); 0 is always critical.
            let q = dp[1..].to_vec();
            let r = if q.len() > 1 { find_roots(&q, tol)? } else { Vec::new() };
            (r, 1usize)
        } else {
            (find_roots(&dp, tol)?, 0usize)
        };
        let scale = 1.0 + self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let radius = (1e-5 * scale).max(tol.sqrt());
        let mut points: Vec<CriticalPoint> = Vec::new();
        if zero_mult > 0 {
            points.push(CriticalPoint { point: Complex64::new(0.0, 0.0), multiplicity: 1 });
        }
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let mut sums: Vec<Complex64> = points.iter().map(|p| p.point).collect();
        for r in roots {
            match points.iter().position(|p| (p.point - r).norm() <= radius) {
                Some(i) => {
                    points[i].multiplicity += 1;
                    if i > 0 || zero_mult == 0 {
                        sums[i] += r;
                        points[i].point = sums[i] / points[i].multiplicity as f64;
                    }
                }
                None => {
                    points.push(CriticalPoint { point: r, multiplicity: 1 });
                    sums.push(r);
                }
            }
        }
        debug_assert_eq!(points.iter().map(|p| p.multiplicity).sum::<usize>(), d - 1);
        Ok(CriticalSet { points })
    }

    /// Cycles of period dividing `p`, or exactly `p` when `exact_period` is set.
    pub fn periodic_cycles(&self, p: usize, tol: f64, exact_period: bool) -> Result<Vec<Cycle>> {
        check_tol(tol)?;
        let pmax = default_max_period(self.degree());
        if p == 0 || p > pmax {
            return Err(Error::InvalidArgument(format!("period {p} outside 1..={pmax}")));
        }
        let n = self.degree().pow(p as u32);
        let points = self.fixed_points_of_iterate(p, tol)?;
        debug_assert_eq!(points.len(), n);
        let mut assigned = vec![false; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            if assigned[start] {
                continue;
            }
            let mut idx = vec![start];
            let mut cur = start;
            loop {
                let img = self.eval(points[cur]);
                let next = nearest(&points, img);
                if (points[next] - img).norm() > 10.0 * tol.max(1e-6 * (1.0 + img.norm())) {
                    return Err(Error::NoConvergence { iterations: p, residual: (points[next] - img).norm() });
                }
                if next == start {
                    break;
                }
                if idx.len() >= p || idx.contains(&next) {
                    return Err(Error::DuplicateRoots(points[start], points[next]));
                }
                idx.push(next);
                cur = next;
            }
            for &i in &idx {
                assigned[i] = true;
            }
            if exact_period && idx.len() != p {
                continue;
            }
            let orbit: Vec<Complex64> = idx.iter().map(|&i| points[i]).collect();
            cycles.push(Cycle::from_points(self, orbit));
        }
        Ok(cycles)
    }

    /// All `d^p` roots of `f^p(z) - z`, polished, without expanding the iterate.
    pub fn fixed_points_of_iterate(&self, p: usize, tol: f64) -> Result<Vec<Complex64>> {
        let d = self.degree();
        let n = d.pow(p as u32);
        let ratio = |z: Complex64| iterate_newton_ratio(self, z, p);
        let radius = 0.55 * self.escape_radius();
        let mut roots = aberth(n, ratio, radius, tol)?;
        for z in roots.iter_mut() {
            for _ in 0..3 {
                let step = iterate_newton_ratio(self, *z, p);
                if !is_finite(step) || step.norm() > 1e-6 * (1.0 + z.norm()) {
                    break;
                }
                *z -= step;
            }
        }
        let mut worst = 0.0f64;
        for z in &roots {
            let (w, _) = self.iterate_with_derivative(*z, p);
            worst = worst.max((w - z).norm() / (1.0 + z.norm()));
        }
        if !(worst <= 10.0 * tol) {
            return Err(Error::NoConvergence { iterations: ABERTH_MAX_ITER, residual: worst });
        }
        for i in 0..n {
            for j in i + 1..n {
                if (roots[i] - roots[j]).norm() <= tol {
                    return Err(Error::DuplicateRoots(roots[i], roots[j]));
                }
            }
        }
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(roots)
    }

    pub fn cycle_multiplier(&self, points: &[Complex64]) -> Complex64 {
        points.iter().map(|&z| self.eval_derivative(z)).product()
    }
}

/// Newton ratio of `f^p(z) - z`, stable for large `|z|`.
fn iterate_newton_ratio(f: &Polynomial, z: Complex64, p: usize) -> Complex64 {
    let (w, dw) = f.iterate_with_derivative(z, p);
    let one = Complex64::new(1.0, 0.0);
    if is_finite(w) && is_finite(dw) && w.norm() < HUGE && dw.norm() < HUGE {
        return (w - z) / (dw - one);
    }
    // Outside the filled set f^p dominates z; r_{k+1} = r_k * f(w)/(w f'(w)).
    let d = f.degree() as f64;
    let mut r = z;
    let mut w = z;
    for _ in 0..p {
        if w.norm() < HUGE {
            let (v, dv) = f.eval_with_derivative(w);
            if w.norm() > 0.0 && is_finite(v) && is_finite(dv) && dv.norm() > 0.0 {
                r *= v / (w * dv);
            } else {
                r /= d;
            }
            w = v;
        } else {
            r /= d;
        }
    }
    r
}

pub fn default_max_period(degree: usize) -> usize {
    match degree {
        2 => 8,
        3 => 5,
        4 => 4,
        _ => 3,
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")))
    }
}

fn nearest(points: &[Complex64], z: Complex64) -> usize {
    let mut best = 0;
    let mut bd = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let dd = (p - z).norm_sqr();
        if dd < bd {
            bd = dd;
            best = i;
        }
    }
    best
}

pub(crate) fn is_finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

pub fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

pub fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    if coeffs.len() <= 1 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
}

/// All roots of `coeffs[0] + coeffs[1] z + ...` with `|p(root)| <= tol * ||p||`.
pub fn find_roots(coeffs: &[Complex64], tol: f64) -> Result<Vec<Complex64>> {
    check_tol(tol)?;
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    let lead = coeffs[n];
    if lead.norm() == 0.0 {
        return Err(Error::InvalidArgument("leading coefficient is zero".into()));
    }
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let dm = derivative(&monic);
    let ratio = |z: Complex64| {
        let p = horner(&monic, z);
        let dp = horner(&dm, z);
        if is_finite(p) && is_finite(dp) && dp.norm() > 0.0 {
            p / dp
        } else {
            z / n as f64
        }
    };
    let radius = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let roots = aberth(n, ratio, radius, tol)?;
    let norm: f64 = monic.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let worst = roots.iter().map(|&r| horner(&monic, r).norm()).fold(0.0, f64::max);
    if worst > tol * norm {
        return Err(Error::NoConvergence { iterations: ABERTH_MAX_ITER, residual: worst });
    }
    Ok(roots)
}

/// Aberth-Ehrlich simultaneous iteration driven by a Newton-ratio oracle.
fn aberth<F: Fn(Complex64) -> Complex64>(n: usize, ratio: F, radius: f64, tol: f64) -> Result<Vec<Complex64>> {
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4))
        .collect();
    let mut done = vec![false; n];
    let eps = (tol * 1e-6).max(1e-15);
    for _ in 0..ABERTH_MAX_ITER {
        let mut all = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let r = ratio(z[i]);
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    s += (z[i] - z[j]).inv();
                }
            }
            let mut w = r / (Complex64::new(1.0, 0.0) - r * s);
            if !is_finite(w) {
                w = r;
            }
            if !is_finite(w) {
                all = false;
                continue;
            }
            z[i] -= w;
            if w.norm() <= eps * (1.0 + z[i].norm()) {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            return Ok(z);
        }
    }
    // Multiple roots converge only linearly; accept if every point is small-residual.
    Ok(z)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub point: Complex64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalSet {
    pub points: Vec<CriticalPoint>,
}

impl CriticalSet {
    pub fn total_multiplicity(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleClass {
    Superattracting,
    Attracting,
    Repelling,
    Neutral,
}

impl CycleClass {
    pub fn of(multiplier: Complex64) -> Self {
        let m = multiplier.norm();
        if m <= NEUTRAL_BAND {
            CycleClass::Superattracting
        } else if m < 1.0 - NEUTRAL_BAND {
            CycleClass::Attracting
        } else if m > 1.0 + NEUTRAL_BAND {
            CycleClass::Repelling
        } else {
            CycleClass::Neutral
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub points: Vec<Complex64>,
    pub period: usize,
    pub multiplier: Complex64,
    pub classification: CycleClass,
}

impl Cycle {
    pub fn from_points(f: &Polynomial, points: Vec<Complex64>) -> Self {
        let multiplier = f.cycle_multiplier(&points);
        Cycle { period: points.len(), classification: CycleClass::of(multiplier), multiplier, points }
    }

    pub fn contains(&self, z: Complex64, radius: f64) -> bool {
        self.points.iter().any(|p| (p - z).norm() <= radius)
    }

    /// Largest `|f(z_i) - z_{i+1}|`.
    pub fn orbit_residual(&self, f: &Polynomial) -> f64 {
        let p = self.points.len();
        (0..p).map(|i| (f.eval(self.points[i]) - self.points[(i + 1) % p]).norm()).fold(0.0, f64::max)
    }
}
