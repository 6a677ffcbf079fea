//! Tuning at the level of angles: block substitution on binary expansions, exact
//! eventually periodic digit strings, and tuning verification on laminations.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::angle::{angle_orbit, Angle, RayPair};
use crate::error::{Error, Result};
use crate::lamination::{compute_lamination, lamination_contains, Containment, RationalLamination};
use crate::poly::Polynomial;
use crate::potential::{landing_points, LandingOptions};

/// Longest period (in digits) an exact expansion may have.
pub const MAX_EXPANSION_DIGITS: u64 = 1 << 26;

/// Packed bit string, most significant bit first. Bits past `len` are zero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub fn with_capacity(bits: usize) -> Self {
        Bits { words: Vec::with_capacity(bits.div_ceil(64)), len: 0 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Appends the low `n <= 64` bits of `value`.
    pub fn push(&mut self, value: u64, n: usize) {
        if n == 0 {
            return;
        }
        let value = if n == 64 { value } else { value & ((1u64 << n) - 1) };
        let off = self.len % 64;
        if off == 0 {
            self.words.push(value << (64 - n));
        } else {
            let last = self.words.len() - 1;
            let free = 64 - off;
            if n <= free {
                self.words[last] |= value << (free - n);
            } else {
                self.words[last] |= value >> (n - free);
                self.words.push(value << (64 - (n - free)));
            }
        }
        self.len += n;
    }

    /// `n <= 64` bits starting at `pos`, right-aligned.
    pub fn get(&self, pos: usize, n: usize) -> u64 {
        if n == 0 {
            return 0;
        }
        let w = pos / 64;
        let off = pos % 64;
        let hi = self.words[w] << off;
        let v = if off == 0 || w + 1 >= self.words.len() { hi } else { hi | (self.words[w + 1] >> (64 - off)) };
        v >> (64 - n)
    }

    pub fn slice(&self, from: usize, to: usize) -> Bits {
        let mut out = Bits::with_capacity(to - from);
        let mut p = from;
        while p < to {
            let n = (to - p).min(64);
            out.push(self.get(p, n), n);
            p += n;
        }
        out
    }

    pub fn extend(&mut self, other: &Bits) {
        let mut p = 0;
        while p < other.len {
            let n = (other.len - p).min(64);
            self.push(other.get(p, n), n);
            p += n;
        }
    }

    pub fn rotate_left(&self, s: usize) -> Bits {
        if self.len == 0 {
            return self.clone();
        }
        let s = s % self.len;
        let mut out = self.slice(s, self.len);
        out.extend(&self.slice(0, s));
        out
    }

    /// `self[a..a+n] == other[b..b+n]`.
    fn range_eq(&self, a: usize, other: &Bits, b: usize, n: usize) -> bool {
        let mut p = 0;
        while p < n {
            let k = (n - p).min(64);
            if self.get(a + p, k) != other.get(b + p, k) {
                return false;
            }
            p += k;
        }
        true
    }

    /// `self == other[off..]`.
    fn eq_at(&self, other: &Bits, off: usize) -> bool {
        self.len + off == other.len && self.range_eq(0, other, off, self.len)
    }

    /// True if `self` equals its rotation by `s`.
    fn rotation_invariant(&self, s: usize) -> bool {
        let n = self.len;
        let mut p = 0;
        while p < n {
            let k = (n - p).min(64);
            let q = (p + s) % n;
            let k = k.min(n - q);
            if self.get(p, k) != self.get(q, k) {
                return false;
            }
            p += k;
        }
        true
    }
}

/// Appends to an empty `Bits` through a register accumulator.
struct BitWriter<'a> {
    out: &'a mut Bits,
    acc: u64,
    n: usize,
}

impl<'a> BitWriter<'a> {
    fn new(out: &'a mut Bits) -> Self {
        debug_assert!(out.len % 64 == 0);
        BitWriter { out, acc: 0, n: 0 }
    }

    /// Appends `c <= 63` low bits of `v` (which has no higher bits set).
    #[inline(always)]
    fn put(&mut self, v: u64, c: usize) {
        let free = 64 - self.n;
        if c < free {
            self.acc |= v << (free - c);
            self.n += c;
        } else {
            let spill = c - free;
            self.out.words.push(self.acc | (v >> spill));
            self.acc = if spill == 0 { 0 } else { v << (64 - spill) };
            self.n = spill;
        }
        self.out.len += c;
    }

    fn finish(self) {
        if self.n > 0 {
            self.out.words.push(self.acc);
        }
    }
}

fn digit_width(base: u64) -> usize {
    (64 - (base - 1).leading_zeros()) as usize
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Eventually periodic base-`base` digit string `0.pre (per)`. Exact for any rational
/// angle, including those whose denominator does not fit in `u64`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactAngle {
    base: u64,
    width: usize,
    pre: Bits,
    per: Bits,
}

/// Preperiod and period of the base-`d` expansion of any reduced fraction with
/// denominator `q`.
pub fn expansion_shape(q: u64, d: u64) -> Result<(u64, u64)> {
    let mut q2 = q;
    loop {
        let g = crate::angle::gcd(q2, d);
        if g == 1 {
            break;
        }
        while q2 % g == 0 {
            q2 /= g;
        }
    }
    let q1 = q / q2;
    let mut k = 0u64;
    let mut x = 1u128 % q1 as u128;
    while x != 0 {
        x = x * d as u128 % q1 as u128;
        k += 1;
    }
    let mut l = 1u64;
    let mut y = d as u128 % q2 as u128;
    while y != 1 % q2 as u128 {
        y = y * d as u128 % q2 as u128;
        l += 1;
        if l > MAX_EXPANSION_DIGITS {
            return Err(Error::CapExceeded(format!("period of 1/{q} in base {d} exceeds {MAX_EXPANSION_DIGITS} digits")));
        }
    }
    Ok((k, l))
}

impl ExactAngle {
    pub fn new(base: u64, pre: &[u8], per: &[u8]) -> Result<Self> {
        if base < 2 || per.is_empty() || pre.iter().chain(per).any(|&x| x as u64 >= base) {
            return Err(Error::InvalidArgument("bad digit string".into()));
        }
        let width = digit_width(base);
        let pack = |v: &[u8]| {
            let mut b = Bits::with_capacity(v.len() * width);
            for &x in v {
                b.push(x as u64, width);
            }
            b
        };
        Ok(ExactAngle { base, width, pre: pack(pre), per: pack(per) }.canonical())
    }

    /// Exact expansion of `t` in base `base`.
    pub fn from_angle(t: Angle, base: u64) -> Result<Self> {
        let (k, l) = expansion_shape(t.den(), base)?;
        Self::from_fraction(t.num(), t.den(), base, k, l)
    }

    /// Expansion of `num/den` with known preperiod `k` and period `l`.
    fn from_fraction(num: u64, den: u64, base: u64, k: u64, l: u64) -> Result<Self> {
        Ok(Self::from_fraction_raw(num, den, base, k, l).canonical())
    }

    /// As `from_fraction`, skipping canonicalisation: a reduced fraction with its exact
    /// shape already has minimal preperiod and period.
    fn from_fraction_raw(num: u64, den: u64, base: u64, k: u64, l: u64) -> Self {
        let width = digit_width(base);
        let mut pre = Bits::with_capacity(k as usize * width);
        let mut per = Bits::with_capacity(l as usize * width);
        let mut r = num;
        if base == 2 && den < (1 << 40) {
            // r << c stays below 2^63, so the reciprocal quotient is short by at most one
            let chunk = den.leading_zeros() as usize - 1;
            let m = u64::MAX / den;
            let fill = |bits: &mut Bits, count: u64, r: &mut u64| {
                let mut w = BitWriter::new(bits);
                let mut left = count as usize;
                while left > 0 {
                    let c = left.min(chunk);
                    let x = *r << c;
                    let q = ((x as u128 * m as u128) >> 64) as u64;
                    let rem = x - q * den;
                    let adj = (rem >= den) as u64;
                    w.put(q + adj, c);
                    *r = rem - adj * den;
                    left -= c;
                }
                w.finish();
            };
            fill(&mut pre, k, &mut r);
            fill(&mut per, l, &mut r);
        } else {
            let fill = |bits: &mut Bits, count: u64, r: &mut u64| {
                for _ in 0..count {
                    let x = *r as u128 * base as u128;
                    bits.push((x / den as u128) as u64, width);
                    *r = (x % den as u128) as u64;
                }
            };
            fill(&mut pre, k, &mut r);
            fill(&mut per, l, &mut r);
        }
        ExactAngle { base, width, pre, per }
    }

    /// Whether `self` equals `other.shift(k)`, comparing in place when the shapes line up.
    pub fn equals_shift_of(&self, other: &ExactAngle, k: usize) -> bool {
        if self.base != other.base {
            return false;
        }
        let w = self.width;
        let (pk, l) = (other.preperiod(), other.period());
        if self.period() == l {
            if k <= pk && self.preperiod() == pk - k {
                return self.pre.eq_at(&other.pre, k * w) && self.per == other.per;
            }
            if k > pk && self.preperiod() == 0 {
                let j = (k - pk) % l * w;
                let n = l * w;
                return self.per.range_eq(0, &other.per, j, n - j) && self.per.range_eq(n - j, &other.per, 0, j);
            }
        }
        *self == other.shift(k)
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn preperiod(&self) -> usize {
        self.pre.len / self.width
    }

    pub fn period(&self) -> usize {
        self.per.len / self.width
    }

    pub fn digit(&self, i: usize) -> u8 {
        let k = self.preperiod();
        if i < k {
            self.pre.get(i * self.width, self.width) as u8
        } else {
            let j = (i - k) % self.period();
            self.per.get(j * self.width, self.width) as u8
        }
    }

    /// Minimal preperiod and period; an all-`(base-1)` tail is carried into the
    /// preperiod so every value has one representation.
    pub fn canonical(mut self) -> Self {
        let w = self.width;
        let l = self.period();
        let mut l_min = l;
        loop {
            let mut reduced = false;
            for p in prime_factors(l_min as u64) {
                let cand = l_min / p as usize;
                let sub = self.per.slice(0, l_min * w);
                if sub.rotation_invariant(cand * w) {
                    l_min = cand;
                    reduced = true;
                    break;
                }
            }
            if !reduced {
                break;
            }
        }
        if l_min != l {
            self.per = self.per.slice(0, l_min * w);
        }
        let l = l_min;
        let k = self.preperiod();
        let mut m = 0;
        while m < k {
            let a = self.pre.get((k - 1 - m) * w, w);
            let b = self.per.get(((l - 1 - m % l) % l) * w, w);
            if a != b {
                break;
            }
            m += 1;
        }
        if m > 0 {
            self.pre = self.pre.slice(0, (k - m) * w);
            self.per = self.per.rotate_left((l - m % l) % l * w);
        }
        if l == 1 && self.per.get(0, w) == self.base - 1 {
            // 0.x(d-1) = 0.(x+1)(0)
            let mut digits: Vec<u64> = (0..self.preperiod()).map(|i| self.pre.get(i * w, w)).collect();
            let mut i = digits.len();
            loop {
                if i == 0 {
                    digits.clear();
                    break;
                }
                i -= 1;
                if digits[i] + 1 < self.base {
                    digits[i] += 1;
                    break;
                }
                digits[i] = 0;
            }
            let mut pre = Bits::with_capacity(digits.len() * w);
            for x in &digits {
                pre.push(*x, w);
            }
            let mut per = Bits::with_capacity(w);
            per.push(0, w);
            return ExactAngle { pre, per, ..self }.canonical_zero_tail();
        }
        self
    }

    fn canonical_zero_tail(mut self) -> Self {
        let w = self.width;
        while self.preperiod() > 0 && self.pre.get((self.preperiod() - 1) * w, w) == 0 {
            self.pre = self.pre.slice(0, (self.preperiod() - 1) * w);
        }
        self
    }

    /// `base^k * t mod 1`.
    pub fn shift(&self, k: usize) -> Self {
        let w = self.width;
        let pk = self.preperiod();
        if k <= pk {
            return ExactAngle { pre: self.pre.slice(k * w, pk * w), ..self.clone() };
        }
        let j = (k - pk) % self.period();
        ExactAngle { pre: Bits::default(), per: self.per.rotate_left(j * w), ..self.clone() }.canonical()
    }

    /// The angle as a reduced fraction, when the denominator fits in `u64`.
    pub fn to_angle(&self) -> Option<Angle> {
        let d = self.base as u128;
        let k = self.preperiod() as u32;
        let l = self.period() as u32;
        let dk = d.checked_pow(k)?;
        let dl1 = d.checked_pow(l)? - 1;
        let mut p: u128 = 0;
        for i in 0..k as usize {
            p = p * d + self.digit(i) as u128;
        }
        let mut q: u128 = 0;
        for i in 0..l as usize {
            q = q * d + self.digit(k as usize + i) as u128;
        }
        let num = p.checked_mul(dl1)?.checked_add(q)?;
        let den = dk.checked_mul(dl1)?;
        let g = crate::angle::gcd_u128(num, den).max(1);
        let (num, den) = (num / g, den / g);
        let (num, den) = if den == 1 { (0, 1) } else { (num % den, den) };
        if den > u64::MAX as u128 {
            return None;
        }
        Angle::new(num as u64, den as u64).ok()
    }
}

impl fmt::Display for ExactAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digit = |i: usize| char::from_digit(self.digit(i) as u32, 36).unwrap_or('?');
        write!(f, "0.")?;
        for i in 0..self.preperiod() {
            write!(f, "{}", digit(i))?;
        }
        write!(f, "(")?;
        for i in 0..self.period() {
            write!(f, "{}", digit(self.preperiod() + i))?;
        }
        write!(f, ")_{}", self.base)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct TuningRepr {
    d: u64,
    d1: u64,
    blocks: Vec<String>,
}

/// Substitution of base-`d1` digits by base-`d` blocks of length `p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TuningRepr", into = "TuningRepr")]
pub struct TuningSubstitution {
    d: u64,
    d1: u64,
    blocks: Vec<Vec<u8>>,
    block_length: usize,
    /// Packed output for each byte of input digits, when it fits in a word.
    table: Option<Box<[u64; 256]>>,
}

impl TryFrom<TuningRepr> for TuningSubstitution {
    type Error = Error;
    fn try_from(r: TuningRepr) -> Result<Self> {
        let blocks = r
            .blocks
            .iter()
            .map(|b| {
                b.chars()
                    .map(|c| c.to_digit(36).map(|x| x as u8).ok_or_else(|| Error::Parse(format!("bad digit in block {b}"))))
                    .collect::<Result<Vec<u8>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        TuningSubstitution::new(r.d, r.d1, blocks)
    }
}

impl From<TuningSubstitution> for TuningRepr {
    fn from(t: TuningSubstitution) -> Self {
        TuningRepr { d: t.d, d1: t.d1, blocks: t.block_strings() }
    }
}

impl TuningSubstitution {
    pub fn new(d: u64, d1: u64, blocks: Vec<Vec<u8>>) -> Result<Self> {
        if d1 != 2 {
            return Err(Error::InvalidArgument("only two-block (d1 = 2) substitutions are supported".into()));
        }
        if blocks.len() != d1 as usize {
            return Err(Error::InvalidArgument(format!("need {d1} blocks, got {}", blocks.len())));
        }
        let p = blocks[0].len();
        if p == 0 || blocks.iter().any(|b| b.len() != p) {
            return Err(Error::InvalidArgument("blocks must be non-empty and of equal length".into()));
        }
        if blocks.iter().flatten().any(|&x| x as u64 >= d) {
            return Err(Error::InvalidArgument(format!("block digit out of range for base {d}")));
        }
        if blocks[0] == blocks[1] {
            return Err(Error::InvalidArgument("blocks must be distinct".into()));
        }
        let w = digit_width(d);
        let table: Option<Box<[u64; 256]>> = (8 * p * w <= 64).then(|| {
            (0..256u64)
                .map(|byte| {
                    let mut v = 0u64;
                    for i in (0..8).rev() {
                        for &x in &blocks[((byte >> i) & 1) as usize] {
                            v = (v << w) | x as u64;
                        }
                    }
                    v
                })
                .collect::<Vec<u64>>()
                .into_boxed_slice()
                .try_into()
                .unwrap()
        });
        Ok(TuningSubstitution { d, d1, blocks, block_length: p, table })
    }

    /// `0 -> 0`, `1 -> 1`: the substitution of the trivial tuning.
    pub fn identity(d: u64) -> Result<Self> {
        Self::new(d, 2, vec![vec![0], vec![1]])
    }

    /// Blocks from the pure periodic expansions of a characteristic pair `(lo, hi)`.
    pub fn from_pair(lo: Angle, hi: Angle, d: u64) -> Result<Self> {
        let ol = angle_orbit(lo, d);
        let oh = angle_orbit(hi, d);
        if ol.preperiod != 0 || oh.preperiod != 0 || ol.period != oh.period {
            return Err(Error::InvalidArgument(format!("{lo} and {hi} are not periodic of one period")));
        }
        let p = ol.period;
        let digits = |t: Angle| crate::angle::d_ary_expansion(t, d, p).0;
        Self::new(d, 2, vec![digits(lo), digits(hi)])
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn d1(&self) -> u64 {
        self.d1
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn blocks(&self) -> &[Vec<u8>] {
        &self.blocks
    }

    pub fn block_strings(&self) -> Vec<String> {
        self.blocks.iter().map(|b| b.iter().map(|&x| char::from_digit(x as u32, 36).unwrap()).collect()).collect()
    }

    fn substitute(&self, input: &Bits) -> Bits {
        let w = digit_width(self.d);
        let pw = self.block_length * w;
        if let (Some(table), true) = (&self.table, 8 % pw == 0) {
            // every input word maps to exactly pw output words
            let words = match pw {
                1 => substitute_words::<1>(&input.words, table),
                2 => substitute_words::<2>(&input.words, table),
                4 => substitute_words::<4>(&input.words, table),
                _ => substitute_words::<8>(&input.words, table),
            };
            let mut words = words;
            let len = input.len * pw;
            words.truncate(len.div_ceil(64));
            if len % 64 != 0 {
                if let Some(last) = words.last_mut() {
                    *last &= !(u64::MAX >> (len % 64));
                }
            }
            return Bits { words, len };
        }
        let mut out = Bits::with_capacity(input.len() * pw);
        let mut i = 0;
        if let Some(table) = &self.table {
            while i + 8 <= input.len() {
                out.push(table[input.get(i, 8) as usize], 8 * pw);
                i += 8;
            }
        }
        while i < input.len() {
            for &x in &self.blocks[input.get(i, 1) as usize] {
                out.push(x as u64, w);
            }
            i += 1;
        }
        out
    }

    fn tune_raw(&self, t: &ExactAngle) -> ExactAngle {
        ExactAngle { base: self.d, width: digit_width(self.d), pre: self.substitute(&t.pre), per: self.substitute(&t.per) }
    }

    /// Tuned image of an exact binary expansion.
    pub fn tune_exact(&self, t: &ExactAngle) -> Result<ExactAngle> {
        if t.base != self.d1 {
            return Err(Error::InvalidArgument(format!("input must be base {}", self.d1)));
        }
        Ok(self.tune_raw(t).canonical())
    }
}

fn substitute_words<const PW: usize>(input: &[u64], table: &[u64; 256]) -> Vec<u64> {
    let mut out = Vec::with_capacity(input.len() * PW);
    let bytes_per_word = 8 / PW;
    for &x in input {
        let b = x.to_be_bytes();
        for i in 0..PW {
            let mut v = 0u64;
            for j in 0..bytes_per_word {
                v = if PW == 8 { 0 } else { v << (8 * PW) } | table[b[i * bytes_per_word + j] as usize];
            }
            out.push(v);
        }
    }
    out
}

/// Adjacent pair of the image class `d * class` bounding the shortest arc; ties go to the
/// least angle.
pub fn characteristic_pair(class: &[Angle], d: u64) -> Result<(Angle, Angle)> {
    let mut image: Vec<Angle> = class.iter().map(|t| t.multiply_by(d)).collect();
    image.sort();
    image.dedup();
    if image.len() < 2 {
        return Err(Error::NoMarking(format!("landing class {class:?} collapses under multiplication by {d}")));
    }
    let n = image.len();
    let arc = |i: usize| (image[(i + 1) % n].to_f64() - image[i].to_f64()).rem_euclid(1.0);
    let best = (0..n).min_by(|&a, &b| arc(a).total_cmp(&arc(b)).then(image[a].cmp(&image[b]))).expect("non-empty");
    Ok((image[best], image[(best + 1) % n]))
}

/// Characteristic-pair substitution for the marking angle `theta0` whose landing class
/// is `class`.
pub fn tuning_substitution(theta0: Angle, class: &[Angle], d: u64, d1: u64) -> Result<TuningSubstitution> {
    if d1 != 2 {
        return Err(Error::InvalidArgument("only d1 = 2 is supported".into()));
    }
    if !class.contains(&theta0) || class.len() < 2 {
        return Err(Error::NoMarking(format!("no partner angle for {theta0} in its landing class")));
    }
    let (lo, hi) = characteristic_pair(class, d)?;
    TuningSubstitution::from_pair(lo, hi, d)
}

/// Exact tuned angle of `t`.
pub fn tune_angle_exact(t_sub: &TuningSubstitution, t: Angle) -> Result<ExactAngle> {
    t_sub.tune_exact(&ExactAngle::from_angle(t, t_sub.d1)?)
}

/// Tuned angle as a fraction; `CapExceeded` if the denominator overflows `u64`.
pub fn tune_angle(t_sub: &TuningSubstitution, t: Angle) -> Result<Angle> {
    let e = tune_angle_exact(t_sub, t)?;
    e.to_angle().ok_or_else(|| Error::CapExceeded(format!("tuned angle {e} does not fit in u64")))
}

/// Checks `tune(d1 t) = d^p tune(t)` for every reduced `t` with denominator `<= max_den`.
/// Returns the number of angles checked and the first counterexample.
pub fn check_equivariance(t_sub: &TuningSubstitution, max_den: u64) -> Result<(u64, Option<Angle>)> {
    use rayon::prelude::*;
    let d1 = t_sub.d1;
    let p = t_sub.block_length;
    let results: Vec<Result<(u64, Option<Angle>)>> = (1..=max_den)
        .into_par_iter()
        .map(|q| {
            let (k, l) = expansion_shape(q, d1)?;
            // d1 t has denominator q / gcd(q, d1) for every reduced a / q
            let q2 = q / crate::angle::gcd(q, d1);
            let (k2, l2) = expansion_shape(q2, d1)?;
            let mut count = 0;
            for a in 0..q {
                if crate::angle::gcd(a, q) != 1 {
                    continue;
                }
                count += 1;
                let t = ExactAngle::from_fraction_raw(a, q, d1, k, l);
                let img = a * d1 % q / (q / q2);
                let s = ExactAngle::from_fraction_raw(img, q2, d1, k2, l2);
                let lhs = t_sub.tune_raw(&s);
                let src = t_sub.tune_raw(&t);
                if !lhs.equals_shift_of(&src, p) && lhs.canonical() != src.canonical().shift(p) {
                    return Ok((count, Some(Angle::new(a, q)?)));
                }
            }
            Ok((count, None))
        })
        .collect();
    let mut total = 0;
    for r in results {
        let (c, bad) = r?;
        total += c;
        if bad.is_some() {
            return Ok((total, bad));
        }
    }
    Ok((total, None))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunedPairCheck {
    pub pair: (Angle, Angle),
    pub tuned: Option<(Angle, Angle)>,
    pub gap: Option<f64>,
    pub status: CheckStatus,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub containment: Containment,
    pub containment_status: CheckStatus,
    pub pairs: Vec<TunedPairCheck>,
    pub passed: bool,
}

/// Lamination containment plus co-landing of tuned pairs for `candidate`.
pub fn verify_tuning(
    candidate: &Polynomial,
    lam_f0: &RationalLamination,
    t_sub: &TuningSubstitution,
    g_pairs: &[RayPair],
    colanding_tol: f64,
    opts: &LandingOptions,
) -> Result<TuningReport> {
    let lam_c = compute_lamination(candidate, &lam_f0.universe, opts)?;
    let containment = lamination_contains(&lam_c, lam_f0)?;
    let containment_status = if !lam_c.exclusions.is_empty() {
        CheckStatus::Inconclusive
    } else if containment.contained {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    let mut pairs = Vec::new();
    for pr in g_pairs {
        let pair = (pr.a(), pr.b());
        let tuned = match (tune_angle(t_sub, pair.0), tune_angle(t_sub, pair.1)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                pairs.push(TunedPairCheck { pair, tuned: None, gap: None, status: CheckStatus::Inconclusive, note: e.to_string() });
                continue;
            }
        };
        let lps = landing_points(candidate, &[tuned.0, tuned.1], opts);
        let check = match (&lps[0], &lps[1]) {
            (Ok(a), Ok(b)) if a.is_certified() && b.is_certified() => {
                let gap = (a.point - b.point).norm();
                TunedPairCheck {
                    pair,
                    tuned: Some(tuned),
                    gap: Some(gap),
                    status: if gap <= colanding_tol { CheckStatus::Pass } else { CheckStatus::Fail },
                    note: format!("landing points {:.9} and {:.9}", a.point, b.point),
                }
            }
            _ => TunedPairCheck {
                pair,
                tuned: Some(tuned),
                gap: None,
                status: CheckStatus::Inconclusive,
                note: "tuned ray landing not certified".into(),
            },
        };
        pairs.push(check);
    }
    let passed = containment_status == CheckStatus::Pass && pairs.iter().all(|p| p.status == CheckStatus::Pass);
    Ok(TuningReport { containment, containment_status, pairs, passed })
}
