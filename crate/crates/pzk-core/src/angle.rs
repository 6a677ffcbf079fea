//! Exact rational angles in Q/Z and their dynamics under t -> d*t mod 1.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest `d^p` accepted by [`angles_of_period`].
pub const PERIOD_ENUMERATION_CAP: u64 = 1 << 20;

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// A rational angle `num/den` in canonical reduced form, `0 <= num < den`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Angle {
    num: u64,
    den: u64,
}

impl Angle {
    pub const ZERO: Angle = Angle { num: 0, den: 1 };

    /// Builds `num/den mod 1`, reduced.
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidAngle(format!("{num}/0")));
        }
        Ok(Self::reduced(num % den, den))
    }

    fn reduced(num: u64, den: u64) -> Self {
        if num == 0 {
            return Self::ZERO;
        }
        let g = gcd(num, den);
        Angle { num: num / g, den: den / g }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `d*t mod 1`, exact. Uses 128-bit intermediates so no product overflows.
    pub fn multiply_by(&self, d: u64) -> Angle {
        let n = ((self.num as u128 * d as u128) % self.den as u128) as u64;
        Self::reduced(n, self.den)
    }

    /// `d^k * t mod 1`, exact.
    pub fn multiply_by_pow(&self, d: u64, k: u32) -> Angle {
        let den = self.den as u128;
        let mut factor = 1u128 % den;
        let mut base = d as u128 % den;
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                factor = factor * base % den;
            }
            base = base * base % den;
            e >>= 1;
        }
        Self::reduced((self.num as u128 * factor % den) as u64, self.den)
    }

    /// Fractional part of `d^k * t` as a float, computed exactly before rounding.
    pub fn scaled_phase(&self, d: u64, k: u32) -> f64 {
        self.multiply_by_pow(d, k).to_f64()
    }

    /// The `d` preimages of `t` under multiplication by `d`, sorted.
    pub fn preimages(&self, d: u64) -> Vec<Angle> {
        let den = self.den as u128 * d as u128;
        let mut out: Vec<Angle> = (0..d as u128)
            .map(|k| {
                let num = self.num as u128 + k * self.den as u128;
                let g = gcd_u128(num, den);
                Angle { num: (num / g) as u64, den: (den / g) as u64 }
            })
            .map(|a| if a.num == 0 { Angle::ZERO } else { a })
            .collect();
        out.sort();
        out
    }
}

pub(crate) fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    if a == 0 {
        1
    } else {
        a
    }
}

impl Ord for Angle {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for Angle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |x: &str| {
            x.trim()
                .parse::<u64>()
                .map_err(|_| Error::InvalidAngle(format!("cannot parse {s:?}")))
        };
        match s.split_once('/') {
            Some((n, d)) => Angle::new(parse(n)?, parse(d)?),
            None => Angle::new(parse(s)?, 1),
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Forward orbit of an angle: `orbit[preperiod..]` is the cycle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AngleOrbit {
    pub preperiod: usize,
    pub period: usize,
    pub orbit: Vec<Angle>,
}

impl AngleOrbit {
    pub fn cycle(&self) -> &[Angle] {
        &self.orbit[self.preperiod..]
    }
}

pub fn multiply_by_d(t: Angle, d: u64) -> Angle {
    t.multiply_by(d)
}

pub fn angle_orbit(t: Angle, d: u64) -> AngleOrbit {
    let mut seen: HashMap<Angle, usize> = HashMap::new();
    let mut orbit = Vec::new();
    let mut cur = t;
    loop {
        if let Some(&i) = seen.get(&cur) {
            let period = orbit.len() - i;
            return AngleOrbit { preperiod: i, period, orbit };
        }
        seen.insert(cur, orbit.len());
        orbit.push(cur);
        cur = cur.multiply_by(d);
    }
}

/// All `t` with `d^p t = t mod 1`, i.e. `k/(d^p - 1)`, sorted. With `exact`, only
/// angles whose exact period is `p`.
pub fn angles_of_period(p: u32, d: u64, exact: bool) -> Result<Vec<Angle>> {
    if p == 0 || d < 2 {
        return Err(Error::InvalidArgument(format!("period {p}, degree {d}")));
    }
    let dp = (d as u128).checked_pow(p).filter(|&v| v <= PERIOD_ENUMERATION_CAP as u128);
    let Some(dp) = dp else {
        return Err(Error::CapExceeded(format!("{d}^{p} exceeds {PERIOD_ENUMERATION_CAP}")));
    };
    let den = (dp - 1) as u64;
    let mut out: Vec<Angle> = (0..den).map(|k| Angle::reduced(k, den)).collect();
    if exact {
        out.retain(|a| {
            let orb = angle_orbit(*a, d);
            orb.preperiod == 0 && orb.period == p as usize
        });
    }
    out.sort();
    Ok(out)
}

/// First `n` base-`d` digits of `t` and the index where the repeating block starts.
/// Terminating expansions use the 0-tail representative.
pub fn d_ary_expansion(t: Angle, d: u64, n: usize) -> (Vec<u8>, usize) {
    let mut digits = Vec::with_capacity(n);
    let mut num = t.num() as u128;
    let den = t.den() as u128;
    for _ in 0..n {
        let v = num * d as u128;
        digits.push((v / den) as u8);
        num = v % den;
    }
    (digits, angle_orbit(t, d).preperiod)
}

/// True iff `x` lies strictly inside the anticlockwise arc from `a` to `b`.
pub fn cyclically_between(a: Angle, x: Angle, b: Angle) -> bool {
    if a < b {
        a < x && x < b
    } else {
        x > a || x < b
    }
}

/// Unordered pair of distinct angles, stored with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RayPair {
    a: Angle,
    b: Angle,
}

impl RayPair {
    pub fn new(x: Angle, y: Angle) -> Result<Self> {
        match x.cmp(&y) {
            Ordering::Less => Ok(RayPair { a: x, b: y }),
            Ordering::Greater => Ok(RayPair { a: y, b: x }),
            Ordering::Equal => Err(Error::InvalidArgument(format!("degenerate ray pair {x}"))),
        }
    }

    pub fn a(&self) -> Angle {
        self.a
    }

    pub fn b(&self) -> Angle {
        self.b
    }

    pub fn contains(&self, t: Angle) -> bool {
        self.a == t || self.b == t
    }
}

/// True iff neither pair separates the other on the circle. Shared endpoints count
/// as unlinked.
pub fn pairs_unlinked(p: RayPair, q: RayPair) -> bool {
    if p.contains(q.a) || p.contains(q.b) {
        return true;
    }
    cyclically_between(p.a, q.a, p.b) == cyclically_between(p.a, q.b, p.b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> Angle {
        s.parse().unwrap()
    }

    #[test]
    fn multiply_examples() {
        assert_eq!(multiply_by_d(a("1/3"), 2), a("2/3"));
        assert_eq!(multiply_by_d(a("2/3"), 2), a("1/3"));
        assert_eq!(multiply_by_d(a("1/7"), 3), a("3/7"));
        assert_eq!(a("5/7").multiply_by_pow(2, 3), a("5/7"));
        assert_eq!(a("1/6").multiply_by_pow(2, 5), a("1/3"));
    }

    #[test]
    fn orbit_examples() {
        let o = angle_orbit(a("1/3"), 2);
        assert_eq!((o.preperiod, o.period), (0, 2));
        let o = angle_orbit(a("1/7"), 2);
        assert_eq!((o.preperiod, o.period), (0, 3));
        let o = angle_orbit(a("1/6"), 2);
        assert_eq!((o.preperiod, o.period), (1, 2));
        assert_eq!(o.cycle(), &[a("1/3"), a("2/3")]);
    }

    #[test]
    fn period_enumeration() {
        assert_eq!(angles_of_period(1, 2, false).unwrap(), vec![Angle::ZERO]);
        assert_eq!(angles_of_period(2, 2, true).unwrap(), vec![a("1/3"), a("2/3")]);
        let p3 = angles_of_period(3, 2, true).unwrap();
        assert_eq!(p3.len(), 6);
        assert_eq!(p3[0], a("1/7"));
        assert!(matches!(angles_of_period(21, 2, false), Err(Error::CapExceeded(_))));
    }

    #[test]
    fn expansions() {
        assert_eq!(d_ary_expansion(a("1/3"), 2, 6), (vec![0, 1, 0, 1, 0, 1], 0));
        assert_eq!(d_ary_expansion(a("1/2"), 2, 4), (vec![1, 0, 0, 0], 1));
        assert_eq!(d_ary_expansion(a("1/7"), 2, 6), (vec![0, 0, 1, 0, 0, 1], 0));
    }

    #[test]
    fn betweenness() {
        assert!(cyclically_between(a("0"), a("1/4"), a("1/2")));
        assert!(!cyclically_between(a("1/2"), a("1/4"), a("0")));
        assert!(cyclically_between(a("3/4"), a("7/8"), a("1/4")));
        assert!(cyclically_between(a("3/4"), a("0"), a("1/4")));
    }

    #[test]
    fn unlinked_examples() {
        let pair = |x: &str, y: &str| RayPair::new(a(x), a(y)).unwrap();
        assert!(pairs_unlinked(pair("1/7", "2/7"), pair("9/14", "11/14")));
        assert!(!pairs_unlinked(pair("0", "1/2"), pair("1/4", "3/4")));
        assert!(pairs_unlinked(pair("1/3", "2/3"), pair("1/3", "2/3")));
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(a("2/4").to_string(), "1/2");
        assert_eq!(a("7/7"), Angle::ZERO);
        assert!("1/0".parse::<Angle>().is_err());
        let json = serde_json::to_string(&a("3/7")).unwrap();
        assert_eq!(json, "\"3/7\"");
        assert_eq!(serde_json::from_str::<Angle>(&json).unwrap(), a("3/7"));
    }

    #[test]
    fn preimages_map_back() {
        for t in ["0", "1/3", "1/6", "5/12"] {
            let t = a(t);
            let pre = t.preimages(3);
            assert_eq!(pre.len(), 3);
            assert!(pre.iter().all(|p| p.multiply_by(3) == t));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn unlinked_symmetric_and_rotation_invariant(
                den in 2u64..60, n in proptest::collection::vec(0u64..60, 4), shift in 0u64..60
            ) {
                let angs: Vec<Angle> = n.iter().map(|&k| Angle::new(k, den).unwrap()).collect();
                prop_assume!(angs[0] != angs[1] && angs[2] != angs[3]);
                let p = RayPair::new(angs[0], angs[1]).unwrap();
                let q = RayPair::new(angs[2], angs[3]).unwrap();
                prop_assert_eq!(pairs_unlinked(p, q), pairs_unlinked(q, p));
                let rot = |t: Angle| Angle::new(t.num() * (den / t.den()) + shift, den).unwrap();
                let p2 = RayPair::new(rot(angs[0]), rot(angs[1])).unwrap();
                let q2 = RayPair::new(rot(angs[2]), rot(angs[3])).unwrap();
                prop_assert_eq!(pairs_unlinked(p, q), pairs_unlinked(p2, q2));
            }

            #[test]
            fn periodic_angle_period_divides_p(p in 1u32..9, k in 0u64..1000) {
                let den = 2u64.pow(p) - 1;
                let t = Angle::new(k % den, den).unwrap();
                let orb = angle_orbit(t, 2);
                prop_assert_eq!(orb.preperiod, 0);
                prop_assert_eq!(p as usize % orb.period, 0);
            }
        }
    }

    #[test]
    fn multiplication_is_bijective_on_coprime_denominators() {
        for den in 1..=400u64 {
            for d in [2u64, 3, 4] {
                if gcd(den, d) != 1 {
                    continue;
                }
                let mut hit = vec![false; den as usize];
                for k in 0..den {
                    let img = Angle::new(k, den).unwrap().multiply_by(d);
                    let idx = (img.num() * (den / img.den())) as usize;
                    assert!(!hit[idx]);
                    hit[idx] = true;
                }
            }
        }
    }
}
