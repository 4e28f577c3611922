//! Exact arithmetic in truncated local rings o/p^k and their quadratic
//! extensions o_L/P^k, where P = p·o_L.
//!
//! The base field is Q_p at desk scale, so o = Z_p, the uniformizer is p
//! itself and the residue field has q = p elements. The quadratic algebra L
//! is determined by three parameters a, b, c with d = b^2 - 4ac != 0:
//! inert (d a non-residue unit), ramified (val(d) = 1) or split (d a unit
//! square). All values are plain machine integers reduced mod p^k; nothing
//! is ever floating point.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::hash::Hash;

/// Splitting behavior of the quadratic algebra L over the base field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    Inert,
    Ramified,
    Split,
}

impl Case {
    /// The value of the quadratic symbol attached to L: -1, 0 or +1.
    pub fn legendre(self) -> i32 {
        match self {
            Case::Inert => -1,
            Case::Ramified => 0,
            Case::Split => 1,
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Case::Inert => "inert",
            Case::Ramified => "ramified",
            Case::Split => "split",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("residue characteristic must be an odd prime, got {0}")]
    BadPrime(u64),
    #[error("parameter {name} must be a p-adic integer (denominator divisible by p)")]
    NonIntegralParam { name: &'static str },
    #[error("c must be a unit")]
    NonUnitC,
    #[error("d = b^2-4ac must be nonzero")]
    ZeroDisc,
    #[error("case {case} is inconsistent with d: val(d) = {val}, residue class {residue}")]
    CaseMismatch { case: Case, val: u32, residue: u64 },
    #[error("cannot invert non-unit (valuation of norm is {val})")]
    NonUnit { val: u32 },
    #[error("requested precision {requested} exceeds available precision {available}")]
    PrecisionLoss { requested: u32, available: u32 },
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Configuration of the local setup: odd prime p, working precision k, the
/// splitting case, and the exact rational parameters a, b, c defining the
/// symmetric matrix S and the element alpha.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalConfig {
    pub p: u64,
    pub k: u32,
    pub case: Case,
    pub a: Rational64,
    pub b: Rational64,
    pub c: Rational64,
}

impl LocalConfig {
    /// Default configuration for each case: b = 0, c = 1 and a = -d/4 with
    /// d the simplest discriminant of the right kind (smallest non-residue,
    /// p itself, or 1).
    pub fn default_for(p: u64, k: u32, case: Case) -> Result<Self, RingError> {
        if p < 3 || !is_prime(p) {
            return Err(RingError::BadPrime(p));
        }
        let d: i64 = match case {
            Case::Inert => {
                let mut r = 2i64;
                while mod_pow(r as u64 % p, (p - 1) / 2, p) == 1 {
                    r += 1;
                }
                r
            }
            Case::Ramified => p as i64,
            Case::Split => 1,
        };
        let cfg = LocalConfig {
            p,
            k,
            case,
            a: Rational64::new(-d, 4),
            b: Rational64::new(0, 1),
            c: Rational64::new(1, 1),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn d(&self) -> Rational64 {
        self.b * self.b - Rational64::new(4, 1) * self.a * self.c
    }

    pub fn validate(&self) -> Result<(), RingError> {
        if self.p < 3 || !is_prime(self.p) {
            return Err(RingError::BadPrime(self.p));
        }
        for (name, x) in [("a", self.a), ("b", self.b), ("c", self.c)] {
            if x.denom().unsigned_abs() % self.p == 0 {
                return Err(RingError::NonIntegralParam { name });
            }
        }
        let d = self.d();
        if d.numer() == &0 {
            return Err(RingError::ZeroDisc);
        }
        let base = ResidueRing::new(self.p, self.k.max(2));
        if base.val(base.from_rational(self.c)) != 0 {
            return Err(RingError::NonUnitC);
        }
        let dv = base.from_rational(d);
        let val = base.val(dv);
        let unit_part = if val < base.k { dv / base.pow_p(val) } else { 0 };
        let residue = unit_part % self.p;
        let ok = match self.case {
            Case::Inert => val == 0 && mod_pow(residue, (self.p - 1) / 2, self.p) == self.p - 1,
            Case::Ramified => val == 1,
            // A unit square mod p lifts to a square mod p^k (p odd), so the
            // mod-p test together with val(d) = 0 decides squareness at
            // every precision.
            Case::Split => val == 0 && mod_pow(residue, (self.p - 1) / 2, self.p) == 1,
        };
        if !ok {
            return Err(RingError::CaseMismatch {
                case: self.case,
                val,
                residue,
            });
        }
        Ok(())
    }

    /// Legendre symbol of L over p: -1 inert, 0 ramified, +1 split.
    pub fn legendre_symbol(&self) -> Result<i32, RingError> {
        self.validate()?;
        Ok(self.case.legendre())
    }

    pub fn base_ring(&self) -> ResidueRing {
        ResidueRing::new(self.p, self.k)
    }

    pub fn ext_ring(&self) -> ExtRing {
        ExtRing::new(*self)
    }

    /// Same configuration at a different working precision.
    pub fn at_precision(&self, k: u32) -> LocalConfig {
        LocalConfig { k, ..*self }
    }
}

/// Global precision policy: conjugation by h(l,m) shifts valuations by up to
/// 2m+l, so level-n work at parameters (l,m) needs this many exact digits.
pub fn working_precision(n: u32, m_max: u32, l_max: u32) -> u32 {
    n + 2 * m_max + l_max + 2
}

pub(crate) fn mod_pow(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = ((r as u128 * b as u128) % m as u128) as u64;
        }
        b = ((b as u128 * b as u128) % m as u128) as u64;
        e >>= 1;
    }
    r
}

/// Modular inverse by extended Euclid; `v` must be coprime to `m`.
fn mod_inv(v: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (v % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m as i128) as u64)
}

/// The truncated ring o/p^k. Elements are u64 values in [0, p^k).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidueRing {
    pub p: u64,
    pub k: u32,
    pub modulus: u64,
}

impl ResidueRing {
    pub fn new(p: u64, k: u32) -> Self {
        assert!(k >= 1, "precision must be positive");
        let modulus = p
            .checked_pow(k)
            .expect("p^k overflows u64; reduce the precision");
        ResidueRing { p, k, modulus }
    }

    pub fn with_precision(&self, k: u32) -> ResidueRing {
        ResidueRing::new(self.p, k)
    }

    #[inline]
    pub fn pow_p(&self, j: u32) -> u64 {
        self.p.pow(j.min(self.k))
    }

    #[inline]
    pub fn from_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.modulus as i64) as u64
    }

    pub fn from_rational(&self, r: Rational64) -> u64 {
        let num = self.from_i64(*r.numer());
        let den = self.from_i64(*r.denom());
        let den_inv = mod_inv(den, self.modulus).expect("denominator not a unit");
        self.mul(num, den_inv)
    }

    #[inline]
    pub fn add(&self, x: u64, y: u64) -> u64 {
        let s = x + y;
        if s >= self.modulus {
            s - self.modulus
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, x: u64, y: u64) -> u64 {
        if x >= y {
            x - y
        } else {
            x + self.modulus - y
        }
    }

    #[inline]
    pub fn neg(&self, x: u64) -> u64 {
        if x == 0 {
            0
        } else {
            self.modulus - x
        }
    }

    #[inline]
    pub fn mul(&self, x: u64, y: u64) -> u64 {
        if self.modulus < (1 << 32) {
            (x * y) % self.modulus
        } else {
            ((x as u128 * y as u128) % self.modulus as u128) as u64
        }
    }

    #[inline]
    pub fn is_unit(&self, x: u64) -> bool {
        x % self.p != 0
    }

    /// p-adic valuation, capped at the precision k (an exact zero reports k,
    /// to be read as "at least k").
    pub fn val(&self, x: u64) -> u32 {
        if x == 0 {
            return self.k;
        }
        let mut v = 0;
        let mut x = x;
        while x % self.p == 0 {
            x /= self.p;
            v += 1;
        }
        v
    }

    pub fn inv(&self, x: u64) -> Result<u64, RingError> {
        mod_inv(x, self.modulus).ok_or(RingError::NonUnit { val: self.val(x) })
    }

    /// Canonical projection to precision k2 <= k.
    pub fn reduce(&self, x: u64, k2: u32) -> Result<u64, RingError> {
        if k2 > self.k {
            return Err(RingError::PrecisionLoss {
                requested: k2,
                available: self.k,
            });
        }
        Ok(x % self.p.pow(k2))
    }

    /// Exact division by p^j; fails if the valuation is too small.
    pub fn shift_down(&self, x: u64, j: u32) -> Result<u64, RingError> {
        let pj = self.p.pow(j);
        if x % pj != 0 {
            return Err(RingError::NonUnit { val: self.val(x) });
        }
        Ok(x / pj)
    }

    /// Hensel lift of a square root of `d` (requires d a unit square).
    pub fn sqrt_unit(&self, d: u64) -> Option<u64> {
        let mut r = (0..self.p).find(|r| self.mul(*r, *r) % self.p == d % self.p)?;
        if r == 0 {
            return None;
        }
        // Newton iteration r <- r - (r^2 - d)/(2r), run to full precision.
        for _ in 0..self.k {
            let num = self.sub(self.mul(r, r), d);
            let den = self.inv(self.add(r, r)).ok()?;
            r = self.sub(r, self.mul(num, den));
        }
        if self.sub(self.mul(r, r), d) == 0 {
            Some(r)
        } else {
            None
        }
    }

    /// Smallest generator of the cyclic group (Z/p^k)^x.
    pub fn unit_group_generator(&self) -> u64 {
        let order = self.modulus / self.p * (self.p - 1);
        let mut factors = vec![];
        let mut n = order;
        let mut f = 2;
        while f * f <= n {
            if n % f == 0 {
                factors.push(f);
                while n % f == 0 {
                    n /= f;
                }
            }
            f += 1;
        }
        if n > 1 {
            factors.push(n);
        }
        'outer: for g in 2..self.modulus {
            if !self.is_unit(g) {
                continue;
            }
            for f in &factors {
                if mod_pow(g, order / f, self.modulus) == 1 {
                    continue 'outer;
                }
            }
            return g;
        }
        unreachable!("unit group of Z/p^k is cyclic for odd p");
    }
}

/// An element of o_L/P^k in coordinates. For the field cases the element is
/// c0 + c1*sqrt(d); in the split case it is the pair (c0, c1) with conjugation
/// swapping the two entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExtElem {
    pub c0: u64,
    pub c1: u64,
}

/// The truncated quadratic extension o_L/P^k together with the data of the
/// defining parameters a, b, c (as residues) and alpha.
#[derive(Debug, Clone)]
pub struct ExtRing {
    pub cfg: LocalConfig,
    pub base: ResidueRing,
    pub case: Case,
    /// d = b^2 - 4ac as a base residue.
    pub d: u64,
    /// A square root of d in the split case.
    pub sqrt_d: Option<u64>,
}

impl ExtRing {
    pub fn new(cfg: LocalConfig) -> Self {
        cfg.validate().expect("invalid local configuration");
        let base = cfg.base_ring();
        let d = base.from_rational(cfg.d());
        let sqrt_d = match cfg.case {
            Case::Split => Some(base.sqrt_unit(d).expect("split d must be a unit square")),
            _ => None,
        };
        ExtRing {
            cfg,
            base,
            case: cfg.case,
            d,
            sqrt_d,
        }
    }

    pub fn with_precision(&self, k: u32) -> ExtRing {
        ExtRing::new(self.cfg.at_precision(k))
    }

    #[inline]
    pub fn zero(&self) -> ExtElem {
        ExtElem { c0: 0, c1: 0 }
    }

    #[inline]
    pub fn one(&self) -> ExtElem {
        match self.case {
            Case::Split => ExtElem { c0: 1, c1: 1 },
            _ => ExtElem { c0: 1, c1: 0 },
        }
    }

    /// Diagonal embedding of the base ring.
    #[inline]
    pub fn embed(&self, v: u64) -> ExtElem {
        match self.case {
            Case::Split => ExtElem { c0: v, c1: v },
            _ => ExtElem { c0: v, c1: 0 },
        }
    }

    pub fn from_rational(&self, r: Rational64) -> ExtElem {
        self.embed(self.base.from_rational(r))
    }

    #[inline]
    pub fn add(&self, x: ExtElem, y: ExtElem) -> ExtElem {
        ExtElem {
            c0: self.base.add(x.c0, y.c0),
            c1: self.base.add(x.c1, y.c1),
        }
    }

    #[inline]
    pub fn sub(&self, x: ExtElem, y: ExtElem) -> ExtElem {
        ExtElem {
            c0: self.base.sub(x.c0, y.c0),
            c1: self.base.sub(x.c1, y.c1),
        }
    }

    #[inline]
    pub fn neg(&self, x: ExtElem) -> ExtElem {
        ExtElem {
            c0: self.base.neg(x.c0),
            c1: self.base.neg(x.c1),
        }
    }

    #[inline]
    pub fn mul(&self, x: ExtElem, y: ExtElem) -> ExtElem {
        let b = &self.base;
        match self.case {
            Case::Split => ExtElem {
                c0: b.mul(x.c0, y.c0),
                c1: b.mul(x.c1, y.c1),
            },
            _ => ExtElem {
                c0: b.add(b.mul(x.c0, y.c0), b.mul(self.d, b.mul(x.c1, y.c1))),
                c1: b.add(b.mul(x.c0, y.c1), b.mul(x.c1, y.c0)),
            },
        }
    }

    /// Galois conjugation: sqrt(d) -> -sqrt(d), or coordinate swap.
    #[inline]
    pub fn conj(&self, x: ExtElem) -> ExtElem {
        match self.case {
            Case::Split => ExtElem { c0: x.c1, c1: x.c0 },
            _ => ExtElem {
                c0: x.c0,
                c1: self.base.neg(x.c1),
            },
        }
    }

    /// Norm to the base ring: x * conj(x).
    pub fn norm(&self, x: ExtElem) -> u64 {
        let b = &self.base;
        match self.case {
            Case::Split => b.mul(x.c0, x.c1),
            _ => b.sub(b.mul(x.c0, x.c0), b.mul(self.d, b.mul(x.c1, x.c1))),
        }
    }

    pub fn is_unit(&self, x: ExtElem) -> bool {
        self.base.is_unit(self.norm(x))
    }

    /// P-adic valuation (largest j with x in P^j = p^j o_L), capped at k.
    /// In both coordinate systems this is the minimum of the coordinate
    /// valuations.
    #[inline]
    pub fn pval(&self, x: ExtElem) -> u32 {
        self.base.val(x.c0).min(self.base.val(x.c1))
    }

    pub fn inv(&self, x: ExtElem) -> Result<ExtElem, RingError> {
        let n = self.norm(x);
        let n_inv = self
            .base
            .inv(n)
            .map_err(|_| RingError::NonUnit { val: self.base.val(n) })?;
        let c = self.conj(x);
        Ok(ExtElem {
            c0: self.base.mul(c.c0, n_inv),
            c1: self.base.mul(c.c1, n_inv),
        })
    }

    pub fn reduce(&self, x: ExtElem, k2: u32) -> Result<ExtElem, RingError> {
        Ok(ExtElem {
            c0: self.base.reduce(x.c0, k2)?,
            c1: self.base.reduce(x.c1, k2)?,
        })
    }

    /// alpha = (b + sqrt(d))/(2c), in coordinates of the current case. It
    /// satisfies c*alpha^2 - b*alpha + a = 0 exactly, alpha + conj(alpha) =
    /// b/c and alpha*conj(alpha) = a/c.
    pub fn alpha(&self) -> ExtElem {
        let b = &self.base;
        let bb = b.from_rational(self.cfg.b);
        let cc = b.from_rational(self.cfg.c);
        let two_c_inv = b.inv(b.mul(2, cc)).expect("2c must be a unit");
        match self.case {
            Case::Split => {
                let e = self.sqrt_d.unwrap();
                ExtElem {
                    c0: b.mul(b.add(bb, e), two_c_inv),
                    c1: b.mul(b.sub(bb, e), two_c_inv),
                }
            }
            _ => ExtElem {
                c0: b.mul(bb, two_c_inv),
                c1: two_c_inv,
            },
        }
    }

    /// a, b, c as base residues.
    pub fn abc(&self) -> (u64, u64, u64) {
        (
            self.base.from_rational(self.cfg.a),
            self.base.from_rational(self.cfg.b),
            self.base.from_rational(self.cfg.c),
        )
    }
}

/// Common interface of the base and extension rings, enough for the 4x4
/// matrix layer: exact ring operations, conjugation, unit and ideal tests,
/// and a canonical form for vectors up to unit scaling.
pub trait LocalRing: Clone + Send + Sync {
    type El: Copy + Eq + Hash + fmt::Debug + Send + Sync;

    fn zero(&self) -> Self::El;
    fn one(&self) -> Self::El;
    fn add(&self, x: Self::El, y: Self::El) -> Self::El;
    fn sub(&self, x: Self::El, y: Self::El) -> Self::El;
    fn neg(&self, x: Self::El) -> Self::El;
    fn mul(&self, x: Self::El, y: Self::El) -> Self::El;
    fn inv(&self, x: Self::El) -> Result<Self::El, RingError>;
    fn conj(&self, x: Self::El) -> Self::El;
    fn is_unit(&self, x: Self::El) -> bool;
    fn is_zero(&self, x: Self::El) -> bool;
    /// True if x lies in P^j (resp. p^j). Requires j <= precision.
    fn in_ideal(&self, x: Self::El, j: u32) -> bool;
    fn precision(&self) -> u32;
    /// The same ring at a different precision.
    fn at_precision(&self, k: u32) -> Self;
    /// Uniformizer multiple: x * p^j.
    fn shift_up(&self, x: Self::El, j: u32) -> Self::El;
    /// Pack into a u64 for hashing and cache serialization.
    fn pack(&self, x: Self::El) -> u64;
    fn unpack(&self, v: u64) -> Self::El;
    /// Scale the vector by a unit so that proportional vectors get equal
    /// output. In the split case the two coordinate projections are
    /// normalized independently (units there are pairs of units).
    fn canon_scale(&self, v: &mut [Self::El]);
}

impl LocalRing for ResidueRing {
    type El = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn add(&self, x: u64, y: u64) -> u64 {
        ResidueRing::add(self, x, y)
    }
    fn sub(&self, x: u64, y: u64) -> u64 {
        ResidueRing::sub(self, x, y)
    }
    fn neg(&self, x: u64) -> u64 {
        ResidueRing::neg(self, x)
    }
    fn mul(&self, x: u64, y: u64) -> u64 {
        ResidueRing::mul(self, x, y)
    }
    fn inv(&self, x: u64) -> Result<u64, RingError> {
        ResidueRing::inv(self, x)
    }
    fn conj(&self, x: u64) -> u64 {
        x
    }
    fn is_unit(&self, x: u64) -> bool {
        ResidueRing::is_unit(self, x)
    }
    fn is_zero(&self, x: u64) -> bool {
        x == 0
    }
    fn in_ideal(&self, x: u64, j: u32) -> bool {
        debug_assert!(j <= self.k, "ideal exponent beyond precision");
        x % self.p.pow(j.min(self.k)) == 0
    }
    fn precision(&self) -> u32 {
        self.k
    }
    fn at_precision(&self, k: u32) -> Self {
        self.with_precision(k)
    }
    fn shift_up(&self, x: u64, j: u32) -> u64 {
        if j >= self.k {
            return 0;
        }
        self.mul(x, self.p.pow(j))
    }
    fn pack(&self, x: u64) -> u64 {
        x
    }
    fn unpack(&self, v: u64) -> u64 {
        v % self.modulus
    }
    fn canon_scale(&self, v: &mut [u64]) {
        if let Some(i) = v.iter().position(|x| self.is_unit(*x)) {
            let s = self.inv(v[i]).unwrap();
            for x in v.iter_mut() {
                *x = self.mul(*x, s);
            }
        }
    }
}

impl LocalRing for ExtRing {
    type El = ExtElem;

    fn zero(&self) -> ExtElem {
        ExtRing::zero(self)
    }
    fn one(&self) -> ExtElem {
        ExtRing::one(self)
    }
    fn add(&self, x: ExtElem, y: ExtElem) -> ExtElem {
        ExtRing::add(self, x, y)
    }
    fn sub(&self, x: ExtElem, y: ExtElem) -> ExtElem {
        ExtRing::sub(self, x, y)
    }
    fn neg(&self, x: ExtElem) -> ExtElem {
        ExtRing::neg(self, x)
    }
    fn mul(&self, x: ExtElem, y: ExtElem) -> ExtElem {
        ExtRing::mul(self, x, y)
    }
    fn inv(&self, x: ExtElem) -> Result<ExtElem, RingError> {
        ExtRing::inv(self, x)
    }
    fn conj(&self, x: ExtElem) -> ExtElem {
        ExtRing::conj(self, x)
    }
    fn is_unit(&self, x: ExtElem) -> bool {
        ExtRing::is_unit(self, x)
    }
    fn is_zero(&self, x: ExtElem) -> bool {
        x.c0 == 0 && x.c1 == 0
    }
    fn in_ideal(&self, x: ExtElem, j: u32) -> bool {
        debug_assert!(j <= self.base.k, "ideal exponent beyond precision");
        let pj = self.base.p.pow(j.min(self.base.k));
        x.c0 % pj == 0 && x.c1 % pj == 0
    }
    fn precision(&self) -> u32 {
        self.base.k
    }
    fn at_precision(&self, k: u32) -> Self {
        self.with_precision(k)
    }
    fn shift_up(&self, x: ExtElem, j: u32) -> ExtElem {
        if j >= self.base.k {
            return ExtRing::zero(self);
        }
        let pj = self.base.p.pow(j);
        ExtElem {
            c0: self.base.mul(x.c0, pj),
            c1: self.base.mul(x.c1, pj),
        }
    }
    fn pack(&self, x: ExtElem) -> u64 {
        debug_assert!(self.base.modulus < (1 << 32));
        x.c0 | (x.c1 << 32)
    }
    fn unpack(&self, v: u64) -> ExtElem {
        ExtElem {
            c0: (v & 0xffff_ffff) % self.base.modulus,
            c1: (v >> 32) % self.base.modulus,
        }
    }
    fn canon_scale(&self, v: &mut [ExtElem]) {
        match self.case {
            Case::Split => {
                // Units of o+o are pairs of units, so each projection is
                // scaled on its own.
                for pick in [0usize, 1] {
                    let coord = |e: &ExtElem| if pick == 0 { e.c0 } else { e.c1 };
                    if let Some(i) = v.iter().position(|x| self.base.is_unit(coord(x))) {
                        let s = self.base.inv(coord(&v[i])).unwrap();
                        for x in v.iter_mut() {
                            if pick == 0 {
                                x.c0 = self.base.mul(x.c0, s);
                            } else {
                                x.c1 = self.base.mul(x.c1, s);
                            }
                        }
                    }
                }
            }
            _ => {
                if let Some(i) = v.iter().position(|x| self.is_unit(*x)) {
                    let s = self.inv(v[i]).unwrap();
                    for x in v.iter_mut() {
                        *x = self.mul(*x, s);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfgs(k: u32) -> Vec<LocalConfig> {
        [Case::Inert, Case::Ramified, Case::Split]
            .iter()
            .flat_map(|&case| {
                [3u64, 5].iter().map(move |&p| {
                    LocalConfig::default_for(p, k, case).unwrap()
                })
            })
            .collect()
    }

    #[test]
    fn legendre_symbol_examples() {
        // 1 is a square.
        let split = LocalConfig::default_for(3, 4, Case::Split).unwrap();
        assert_eq!(split.legendre_symbol().unwrap(), 1);
        // Euler criterion: 2^((3-1)/2) = -1 mod 3.
        let inert = LocalConfig::default_for(3, 4, Case::Inert).unwrap();
        assert_eq!(inert.d(), Rational64::new(2, 1));
        assert_eq!(inert.legendre_symbol().unwrap(), -1);
        // val(d) = 1 by construction.
        let ram = LocalConfig::default_for(5, 4, Case::Ramified).unwrap();
        assert_eq!(ram.d(), Rational64::new(5, 1));
        assert_eq!(ram.legendre_symbol().unwrap(), 0);
    }

    #[test]
    fn p_equal_two_rejected() {
        assert!(matches!(
            LocalConfig::default_for(2, 4, Case::Inert),
            Err(RingError::BadPrime(2))
        ));
    }

    #[test]
    fn case_mismatch_rejected() {
        let mut cfg = LocalConfig::default_for(3, 4, Case::Split).unwrap();
        cfg.case = Case::Inert;
        assert!(matches!(cfg.validate(), Err(RingError::CaseMismatch { .. })));
    }

    #[test]
    fn alpha_satisfies_defining_relation_at_every_precision() {
        for k in 1..=12 {
            for cfg in cfgs(k) {
                let ext = cfg.ext_ring();
                let alpha = ext.alpha();
                let (a, b, c) = ext.abc();
                // c*alpha^2 - b*alpha + a = 0
                let lhs = ext.add(
                    ext.sub(
                        ext.mul(ext.embed(c), ext.mul(alpha, alpha)),
                        ext.mul(ext.embed(b), alpha),
                    ),
                    ext.embed(a),
                );
                assert!(ext.is_zero(lhs), "relation fails for {cfg:?} at k={k}");
                // alpha + conj(alpha) = b/c
                let tr = ext.add(alpha, ext.conj(alpha));
                let b_over_c = ext.embed(ext.base.mul(b, ext.base.inv(c).unwrap()));
                assert_eq!(tr, b_over_c);
                // alpha * conj(alpha) = a/c
                let nm = ext.mul(alpha, ext.conj(alpha));
                let a_over_c = ext.embed(ext.base.mul(a, ext.base.inv(c).unwrap()));
                assert_eq!(nm, a_over_c);
            }
        }
    }

    #[test]
    fn alpha_split_p3_example() {
        // b = 0, c = 1, d = 1 at p = 3: alpha = (1/2, -1/2) = (2, 1) mod 3.
        let cfg = LocalConfig {
            p: 3,
            k: 1,
            case: Case::Split,
            a: Rational64::new(-1, 4),
            b: Rational64::new(0, 1),
            c: Rational64::new(1, 1),
        };
        let ext = cfg.ext_ring();
        let alpha = ext.alpha();
        assert_eq!((alpha.c0, alpha.c1), (2, 1));
    }

    #[test]
    fn inv_is_conj_over_norm() {
        for cfg in cfgs(2) {
            let ext = cfg.ext_ring();
            // inert p=3, k=2 example: x = 1 + sqrt(d)
            let x = ext.add(ext.one(), ExtElem { c0: 0, c1: 1 });
            if ext.is_unit(x) {
                let xi = ext.inv(x).unwrap();
                assert_eq!(ext.mul(x, xi), ext.one());
            }
        }
    }

    #[test]
    fn non_unit_inversion_reports_norm_valuation() {
        let cfg = LocalConfig::default_for(3, 4, Case::Inert).unwrap();
        let ext = cfg.ext_ring();
        let x = ext.embed(3);
        match ext.inv(x) {
            Err(RingError::NonUnit { val }) => assert_eq!(val, 2),
            other => panic!("expected NonUnit, got {other:?}"),
        }
    }

    #[test]
    fn reduce_precision_laws() {
        let cfg = LocalConfig::default_for(3, 6, Case::Inert).unwrap();
        let r = cfg.base_ring();
        let x = 3u64.pow(4) * 2 + 17;
        assert_eq!(r.reduce(x, 6).unwrap(), x);
        let x1 = r.reduce(x, 4).unwrap();
        assert_eq!(r.with_precision(4).reduce(x1, 2).unwrap(), r.reduce(x, 2).unwrap());
        // p^{k'} * unit reduces to 0 at precision k'.
        assert_eq!(r.reduce(3u64.pow(4) * 2, 4).unwrap() % 3u64.pow(4), 0);
        assert!(r.reduce(0, 7).is_err());
    }

    #[test]
    fn ideal_membership_of_base_elements() {
        // An element of o (diagonally embedded when split) lies in P^n iff
        // its base valuation is at least n.
        for cfg in cfgs(6) {
            let ext = cfg.ext_ring();
            for v in [1u64, 3, 9, 15, 27, 45] {
                let x = ext.embed(v);
                for n in 0..=6u32 {
                    assert_eq!(
                        ext.in_ideal(x, n),
                        cfg.base_ring().val(v) >= n,
                        "cfg {cfg:?} v={v} n={n}"
                    );
                }
            }
        }
    }

    #[test]
    fn unit_group_generator_generates() {
        let r = ResidueRing::new(5, 2);
        let g = r.unit_group_generator();
        let mut seen = std::collections::HashSet::new();
        let mut x = 1u64;
        for _ in 0..20 {
            x = r.mul(x, g);
            seen.insert(x);
        }
        assert_eq!(seen.len(), 20);
    }

    proptest! {
        #[test]
        fn ring_laws_hold_exactly(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for cfg in cfgs(5) {
                let ext = cfg.ext_ring();
                let m = ext.base.modulus;
                let r3: Vec<ExtElem> = (0..3)
                    .map(|_| ExtElem { c0: rng.gen_range(0..m), c1: rng.gen_range(0..m) })
                    .collect();
                let (x, y, z) = (r3[0], r3[1], r3[2]);
                prop_assert_eq!(ext.mul(ext.mul(x, y), z), ext.mul(x, ext.mul(y, z)));
                prop_assert_eq!(
                    ext.mul(x, ext.add(y, z)),
                    ext.add(ext.mul(x, y), ext.mul(x, z))
                );
                // conj is an involutive ring homomorphism
                prop_assert_eq!(ext.conj(ext.conj(x)), x);
                prop_assert_eq!(ext.conj(ext.add(x, y)), ext.add(ext.conj(x), ext.conj(y)));
                prop_assert_eq!(ext.conj(ext.mul(x, y)), ext.mul(ext.conj(x), ext.conj(y)));
                // norm is multiplicative
                prop_assert_eq!(ext.norm(ext.mul(x, y)), ext.base.mul(ext.norm(x), ext.norm(y)));
                // x * 1 = x
                prop_assert_eq!(ext.mul(x, ext.one()), x);
            }
        }
    }
}
