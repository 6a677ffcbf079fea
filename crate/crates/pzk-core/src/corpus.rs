//! Named test polynomials, each re-derived from its defining equation at load.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{find_roots, horner, Polynomial};

/// Residual bound every entry must meet when it is rebuilt.
pub const VERIFY_TOL: f64 = 1e-10;
const ROOT_TOL: f64 = 1e-14;

/// Free parameter of the cubic entry. `a2` is solved from `f(f(0)) = 0`.
pub const CUBIC_A0: Complex64 = Complex64::new(0.707, 0.0005);

/// Closed axis-aligned box in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: Complex64,
    pub hi: Complex64,
}

impl Window {
    pub fn new(lo: Complex64, hi: Complex64) -> Self {
        Window { lo, hi }
    }

    pub fn around(center: Complex64, r: f64) -> Self {
        Window::new(center - Complex64::new(r, r), center + Complex64::new(r, r))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (self.lo.re..=self.hi.re).contains(&z.re) && (self.lo.im..=self.hi.im).contains(&z.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm { formula: String },
    SolvedEquation { equation: String, window: Window },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub label: String,
    pub polynomial: Polynomial,
    pub provenance: Provenance,
    /// Residual of the defining equation at the stored coefficients.
    pub residual: f64,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Coefficients of `F_c^n(0)` as a polynomial in `c`, lowest power first.
pub fn critical_orbit_polynomial(n: usize) -> Vec<Complex64> {
    let mut p = vec![c(0.0, 0.0), c(1.0, 0.0)];
    for _ in 1..n {
        let mut sq = vec![c(0.0, 0.0); 2 * p.len() - 1];
        for (i, a) in p.iter().enumerate() {
            for (j, b) in p.iter().enumerate() {
                sq[i + j] += a * b;
            }
        }
        sq[1] += 1.0;
        p = sq;
    }
    p
}

/// The unique root of `coeffs` inside `window`.
fn root_in_window(label: &str, coeffs: &[Complex64], window: &Window) -> Result<Complex64> {
    let roots = find_roots(coeffs, ROOT_TOL)?;
    let inside: Vec<Complex64> = roots.into_iter().filter(|z| window.contains(*z)).collect();
    match inside.as_slice() {
        [z] => Ok(*z),
        _ => Err(Error::InvalidArgument(format!("{label}: {} roots in window, expected 1", inside.len()))),
    }
}

fn checked(label: &str, polynomial: Polynomial, provenance: Provenance, residual: f64) -> Result<CorpusEntry> {
    if !(residual < VERIFY_TOL) {
        return Err(Error::CorpusVerification { label: label.into(), residual });
    }
    if let Provenance::SolvedEquation { window, .. } = &provenance {
        let p = if polynomial.degree() == 2 { polynomial.coeffs()[0] } else { polynomial.coeffs()[2] };
        if !window.contains(p) {
            return Err(Error::CorpusVerification { label: label.into(), residual: f64::INFINITY });
        }
    }
    Ok(CorpusEntry { label: label.into(), polynomial: polynomial.with_label(label), provenance, residual })
}

fn quadratic_from_equation(label: &str, equation: &str, coeffs: &[Complex64], window: Window) -> Result<CorpusEntry> {
    let mut c0 = root_in_window(label, coeffs, &window)?;
    // Real coefficients and a window straddling the real axis: the isolated root is real.
    if window.lo.im < 0.0 && window.hi.im > 0.0 && coeffs.iter().all(|a| a.im == 0.0) {
        c0.im = 0.0;
    }
    let residual = horner(coeffs, c0).norm();
    checked(
        label,
        Polynomial::quadratic(c0),
        Provenance::SolvedEquation { equation: equation.into(), window },
        residual,
    )
}

/// Cubic `z^3 + a2 z^2 + a0` with `f(f(0)) = 0`, solved for `a2` at fixed `a0`.
pub fn period_two_cubic(a0: Complex64) -> Result<Polynomial> {
    if a0 == c(0.0, 0.0) {
        return Err(Error::InvalidArgument("a0 = 0 makes 0 fixed".into()));
    }
    // f(f(0)) = a0 (a0^2 + a2 a0 + 1), linear in a2.
    Ok(Polynomial::cubic(-(a0 * a0 + 1.0) / a0, a0))
}

/// Rebuilds every entry and aborts on the first one whose equation fails.
pub fn build_corpus() -> Result<Vec<CorpusEntry>> {
    let mut out = Vec::with_capacity(6);

    let z2 = Polynomial::power(2);
    let r = z2.eval(c(0.0, 0.0)).norm();
    out.push(checked("z2", z2, Provenance::ClosedForm { formula: "z^2".into() }, r)?);

    let bas = Polynomial::quadratic(c(-1.0, 0.0));
    let r = bas.iterate(c(0.0, 0.0), 2).norm();
    out.push(checked("basilica", bas, Provenance::ClosedForm { formula: "z^2 - 1".into() }, r)?);

    let rabbit_eq = [c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)];
    out.push(quadratic_from_equation(
        "rabbit",
        "c^3 + 2c^2 + c + 1 = 0",
        &rabbit_eq,
        Window::around(c(-0.1226, 0.7449), 1e-3),
    )?);
    out.push(quadratic_from_equation(
        "airplane",
        "c^3 + 2c^2 + c + 1 = 0",
        &rabbit_eq,
        Window::new(c(-1.8, -1e-9), c(-1.7, 1e-9)),
    )?);

    out.push(quadratic_from_equation(
        "tuned-basilica",
        "F_c^4(0) = 0",
        &critical_orbit_polynomial(4),
        Window::new(c(-1.42, -1e-9), c(-1.28, 1e-9)),
    )?);

    let cubic = period_two_cubic(CUBIC_A0)?;
    let r = cubic.iterate(c(0.0, 0.0), 2).norm();
    let a2 = cubic.coeffs()[2];
    out.push(checked(
        "cubic",
        cubic,
        Provenance::SolvedEquation {
            equation: format!("f(f(0)) = 0 for z^3 + a2 z^2 + a0, a0 = {}{:+}i, solved for a2", CUBIC_A0.re, CUBIC_A0.im),
            window: Window::around(a2, 1e-6),
        },
        r,
    )?);
    Ok(out)
}

/// Looks up a corpus entry by label.
pub fn corpus_polynomial(label: &str) -> Result<Polynomial> {
    build_corpus()?
        .into_iter()
        .find(|e| e.label == label)
        .map(|e| e.polynomial)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown corpus label {label:?}")))
}
