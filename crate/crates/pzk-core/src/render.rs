//! Escape-time images of Julia sets, the quadratic parameter plane and cubic
//! slices where the critical point 0 is periodic.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{find_roots, Polynomial};

pub const MAX_PIXELS_PER_SIDE: u32 = 8192;
/// Largest `m0` for the cubic slice; the seed equation has degree `3^(m0-2)` in `a2`.
pub const MAX_SLICE_PERIOD: usize = 6;
/// Color of pixels whose continuation failed.
pub const SENTINEL: [u8; 3] = [255, 0, 255];
const CONTINUATION_STEPS: usize = 64;
const MAX_HALVINGS: u32 = 12;
const NEWTON_ITERS: usize = 30;
/// Residual of `f^{m0}(0)` above which a continuation step counts as a branch jump.
const SLICE_RESIDUAL: f64 = 1e-9;
/// Lower-period iterates closer than this to 0 mark a collapse onto a smaller period.
const PERIOD_COLLAPSE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RenderMode {
    Julia { polynomial: Polynomial },
    ParameterQuadratic,
    /// Pixel coordinate is `a0` of `z^3 + a2 z^2 + a0` (or `a2` when `m0 = 1`).
    ParameterCubicSlice { m0: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub center: Complex64,
    /// Extent of the real axis across the image.
    pub width: f64,
    pub pixels: (u32, u32),
    pub max_iterations: usize,
    pub mode: RenderMode,
}

impl RenderSpec {
    pub fn validate(&self) -> Result<()> {
        let (w, h) = self.pixels;
        if w == 0 || h == 0 || w > MAX_PIXELS_PER_SIDE || h > MAX_PIXELS_PER_SIDE {
            return Err(Error::InvalidArgument(format!("pixels {w}x{h} outside 1..={MAX_PIXELS_PER_SIDE}")));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::InvalidArgument(format!("width {} must be positive", self.width)));
        }
        if !self.center.re.is_finite() || !self.center.im.is_finite() {
            return Err(Error::InvalidArgument("center must be finite".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        if let RenderMode::ParameterCubicSlice { m0 } = self.mode {
            if m0 == 0 || m0 > MAX_SLICE_PERIOD {
                return Err(Error::InvalidArgument(format!("m0 = {m0} outside 1..={MAX_SLICE_PERIOD}")));
            }
        }
        Ok(())
    }

    /// Complex coordinate of pixel `(i, j)`; row 0 is the top.
    pub fn pixel_point(&self, i: u32, j: u32) -> Complex64 {
        let (w, h) = self.pixels;
        let step = self.width / w as f64;
        let x = (i as f64 - (w as f64 - 1.0) / 2.0) * step;
        let y = ((h as f64 - 1.0) / 2.0 - j as f64) * step;
        self.center + Complex64::new(x, y)
    }
}

/// 8-bit RGB, row-major, top to bottom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl Image {
    pub fn pixel(&self, i: u32, j: u32) -> [u8; 3] {
        let k = 3 * (j as usize * self.width as usize + i as usize);
        [self.data[k], self.data[k + 1], self.data[k + 2]]
    }

    /// Binary PPM (P6).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderReport {
    pub interior: usize,
    pub escaped: usize,
    pub sentinel: usize,
}

/// Result for a single pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PixelValue {
    Interior,
    /// 1-based index of the first orbit point outside the escape radius.
    Escaped(usize),
    Failed,
}

/// Escape time of `z`: the orbit point `f^k(z)` is the `(k+1)`-th checked.
pub fn escape_time(f: &Polynomial, z: Complex64, max_iterations: usize) -> PixelValue {
    let r = f.escape_radius();
    let mut w = z;
    for n in 1..=max_iterations {
        if !(w.norm() <= r) {
            return PixelValue::Escaped(n);
        }
        w = f.eval(w);
    }
    PixelValue::Interior
}

pub fn color(v: PixelValue) -> [u8; 3] {
    match v {
        PixelValue::Interior => [0, 0, 0],
        PixelValue::Failed => SENTINEL,
        // g = 0 forces n = 0 mod 256, which makes r = 0, so SENTINEL never appears.
        PixelValue::Escaped(n) => [(n * 11 % 256) as u8, (n * 5 % 256) as u8, (255 - n * 3 % 128) as u8],
    }
}

/// `(f^m(0), d/da2 f^m(0))` for `z^3 + a2 z^2 + a0`, plus the smallest `|f^k(0)|` for `0 < k < m`.
fn slice_orbit(a2: Complex64, a0: Complex64, m: usize) -> (Complex64, Complex64, f64) {
    let mut w = Complex64::new(0.0, 0.0);
    let mut dw = Complex64::new(0.0, 0.0);
    let mut closest = f64::INFINITY;
    for k in 1..=m {
        let ndw = (3.0 * w * w + 2.0 * a2 * w) * dw + w * w;
        w = w * w * (w + a2) + a0;
        dw = ndw;
        if k < m {
            closest = closest.min(w.norm());
        }
    }
    (w, dw, closest)
}

fn newton_a2(mut a2: Complex64, a0: Complex64, m: usize) -> Option<Complex64> {
    for _ in 0..NEWTON_ITERS {
        let (g, dg, _) = slice_orbit(a2, a0, m);
        if dg.norm() == 0.0 || !dg.norm().is_finite() {
            return None;
        }
        let step = g / dg;
        a2 -= step;
        if step.norm() <= 1e-15 * (1.0 + a2.norm()) {
            break;
        }
    }
    let (g, _, closest) = slice_orbit(a2, a0, m);
    (g.norm() < SLICE_RESIDUAL && closest > PERIOD_COLLAPSE && a2.re.is_finite()).then_some(a2)
}

/// Coefficients of `f^m(0)` as a polynomial in `a2` at fixed `a0`.
fn slice_polynomial(a0: Complex64, m: usize) -> Vec<Complex64> {
    fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }
    let mut w = vec![a0];
    for _ in 1..m {
        let w2 = mul(&w, &w);
        let mut next = mul(&w2, &w);
        let shifted: Vec<Complex64> = std::iter::once(Complex64::new(0.0, 0.0)).chain(w2.iter().copied()).collect();
        if next.len() < shifted.len() {
            next.resize(shifted.len(), Complex64::new(0.0, 0.0));
        }
        for (k, s) in shifted.into_iter().enumerate() {
            next[k] += s;
        }
        next[0] += a0;
        while next.len() > 1 && next.last().map_or(false, |c| c.norm() == 0.0) {
            next.pop();
        }
        w = next;
    }
    w
}

/// Seed `a2` at `a0` for exact period `m`: the root of least modulus (ties by real, then imaginary part).
pub fn slice_seed(a0: Complex64, m: usize) -> Result<Complex64> {
    if m < 2 {
        return Err(Error::InvalidArgument("slice seed needs m0 >= 2".into()));
    }
    let poly = slice_polynomial(a0, m);
    if poly.len() < 2 {
        return Err(Error::InvalidArgument(format!("f^{m}(0) is constant in a2 at a0 = {a0}")));
    }
    let lead = *poly.last().unwrap();
    let monic: Vec<Complex64> = poly.iter().map(|c| c / lead).collect();
    let roots = if monic.len() == 2 { vec![-monic[0]] } else { find_roots(&monic, 1e-13)? };
    let mut good: Vec<Complex64> = roots.into_iter().filter_map(|r| newton_a2(r, a0, m)).collect();
    good.sort_by(|x, y| {
        x.norm().total_cmp(&y.norm()).then(x.re.total_cmp(&y.re)).then(x.im.total_cmp(&y.im))
    });
    good.first().copied().ok_or_else(|| Error::InvalidArgument(format!("no exact period-{m} seed at a0 = {a0}")))
}

/// Continues `a2` along the segment from `(seed_a0, seed_a2)` to `a0`, halving steps on failure.
pub fn continue_slice(seed_a0: Complex64, seed_a2: Complex64, a0: Complex64, m: usize) -> Option<Complex64> {
    let mut a2 = seed_a2;
    let mut s = 0.0f64;
    let mut ds = 1.0 / CONTINUATION_STEPS as f64;
    let mut halvings = 0;
    while s < 1.0 {
        let t = (s + ds).min(1.0);
        let target = seed_a0 + (a0 - seed_a0) * t;
        match newton_a2(a2, target, m) {
            Some(next) if (next - a2).norm() <= 0.25 * (1.0 + a2.norm()) => {
                a2 = next;
                s = t;
                if halvings > 0 {
                    halvings -= 1;
                    ds *= 2.0;
                }
            }
            _ => {
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return None;
                }
                ds *= 0.5;
            }
        }
    }
    Some(a2)
}

/// Renders `spec`. Pixels are independent, so the result does not depend on the thread count.
pub fn render(spec: &RenderSpec) -> Result<(Image, RenderReport)> {
    spec.validate()?;
    let (w, h) = spec.pixels;
    let seed = match spec.mode {
        RenderMode::ParameterCubicSlice { m0 } if m0 >= 2 => Some(slice_seed(spec.center, m0)?),
        _ => None,
    };
    let values: Vec<PixelValue> = (0..w as usize * h as usize)
        .into_par_iter()
        .map(|k| {
            let p = spec.pixel_point((k % w as usize) as u32, (k / w as usize) as u32);
            pixel_value(spec, seed, p)
        })
        .collect();
    let mut report = RenderReport::default();
    let mut data = Vec::with_capacity(values.len() * 3);
    for v in values {
        match v {
            PixelValue::Interior => report.interior += 1,
            PixelValue::Escaped(_) => report.escaped += 1,
            PixelValue::Failed => report.sentinel += 1,
        }
        data.extend_from_slice(&color(v));
    }
    Ok((Image { width: w, height: h, data }, report))
}

fn pixel_value(spec: &RenderSpec, seed: Option<Complex64>, p: Complex64) -> PixelValue {
    let zero = Complex64::new(0.0, 0.0);
    match &spec.mode {
        RenderMode::Julia { polynomial } => escape_time(polynomial, p, spec.max_iterations),
        RenderMode::ParameterQuadratic => escape_time(&Polynomial::quadratic(p), zero, spec.max_iterations),
        RenderMode::ParameterCubicSlice { m0 } => {
            let (a2, a0) = if *m0 == 1 {
                (p, zero)
            } else {
                match continue_slice(spec.center, seed.expect("seeded"), p, *m0) {
                    Some(a2) => (a2, p),
                    None => return PixelValue::Failed,
                }
            };
            let f = Polynomial::cubic(a2, a0);
            escape_time(&f, -a2 * (2.0 / 3.0), spec.max_iterations)
        }
    }
}
