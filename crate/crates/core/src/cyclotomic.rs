//! Exact arithmetic in Q(zeta_M) on the power basis modulo the M-th
//! cyclotomic polynomial, plus Laurent scalars over it in the formal symbols
//! chi_1(w), chi_2(w) and q^{1/2}. Zero tests are exact; nothing is ever
//! evaluated numerically.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

fn poly_trim(v: &mut Vec<BigRational>) {
    while v.last().is_some_and(Zero::is_zero) {
        v.pop();
    }
}

/// Quotient of polynomials with exact coefficients; remainder must vanish
/// when used for cyclotomic construction.
fn poly_div(num: &[BigRational], den: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut rem = num.to_vec();
    poly_trim(&mut rem);
    let mut q = vec![BigRational::zero(); rem.len().saturating_sub(den.len()) + 1];
    let dlead = den.last().expect("nonzero divisor");
    while rem.len() >= den.len() && !rem.is_empty() {
        let shift = rem.len() - den.len();
        let coef = rem.last().unwrap() / dlead;
        q[shift] = coef.clone();
        for (i, d) in den.iter().enumerate() {
            let t = &rem[shift + i] - d * &coef;
            rem[shift + i] = t;
        }
        poly_trim(&mut rem);
    }
    poly_trim(&mut q);
    (q, rem)
}

/// The M-th cyclotomic polynomial as a dense coefficient vector.
pub fn cyclotomic_poly(m: u32) -> Vec<BigRational> {
    let mut num = vec![BigRational::zero(); m as usize + 1];
    num[0] = -BigRational::one();
    num[m as usize] = BigRational::one();
    let mut den = vec![BigRational::one()];
    for d in 1..m {
        if m % d == 0 {
            let phi_d = cyclotomic_poly(d);
            den = poly_mul(&den, &phi_d);
        }
    }
    let (q, r) = poly_div(&num, &den);
    assert!(r.is_empty(), "cyclotomic division must be exact");
    q
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            let t = &out[i + j] + x * y;
            out[i + j] = t;
        }
    }
    out
}

/// The field Q(zeta_M).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycField {
    pub m: u32,
    /// Monic minimal polynomial of zeta_M, degree phi(M).
    pub min_poly: Vec<BigRational>,
    pub dim: usize,
    /// zeta^k for k in [0, M) reduced to the power basis.
    zeta_pows: Vec<Vec<BigRational>>,
}

/// An element in coordinates over the power basis 1, zeta, ..., zeta^{phi-1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cyc(pub Vec<BigRational>);

impl CycField {
    pub fn new(m: u32) -> CycField {
        let min_poly = cyclotomic_poly(m);
        let dim = min_poly.len() - 1;
        let mut field = CycField {
            m,
            min_poly,
            dim,
            zeta_pows: Vec::new(),
        };
        let mut pows = Vec::with_capacity(m as usize);
        for k in 0..m {
            let mut v = vec![BigRational::zero(); k as usize + 1];
            v[k as usize] = BigRational::one();
            pows.push(field.reduce(v));
        }
        field.zeta_pows = pows;
        field
    }

    fn reduce(&self, mut v: Vec<BigRational>) -> Vec<BigRational> {
        while v.len() > self.dim {
            let coef = v.pop().unwrap();
            if coef.is_zero() {
                continue;
            }
            // the popped term is coef * x^L with L = v.len() >= dim;
            // x^L = -x^{L-dim} (min_poly - x^dim)
            let shift = v.len() - self.dim;
            for i in 0..self.dim {
                let t = &v[shift + i] - &self.min_poly[i] * &coef;
                v[shift + i] = t;
            }
        }
        v.resize(self.dim, BigRational::zero());
        v
    }

    pub fn zero(&self) -> Cyc {
        Cyc(vec![BigRational::zero(); self.dim])
    }

    pub fn one(&self) -> Cyc {
        self.from_rational(BigRational::one())
    }

    pub fn from_rational(&self, r: BigRational) -> Cyc {
        let mut v = vec![BigRational::zero(); self.dim];
        v[0] = r;
        Cyc(v)
    }

    /// zeta_M^k.
    pub fn zeta_pow(&self, k: i64) -> Cyc {
        let k = k.rem_euclid(self.m as i64) as usize;
        Cyc(self.zeta_pows[k].clone())
    }

    /// zeta_D^k for D | M.
    pub fn root_of_unity(&self, d: u32, k: i64) -> Cyc {
        assert!(self.m % d == 0, "zeta_{d} not contained in Q(zeta_{})", self.m);
        self.zeta_pow(k * (self.m / d) as i64)
    }

    pub fn add(&self, a: &Cyc, b: &Cyc) -> Cyc {
        Cyc(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect())
    }

    pub fn sub(&self, a: &Cyc, b: &Cyc) -> Cyc {
        Cyc(a.0.iter().zip(&b.0).map(|(x, y)| x - y).collect())
    }

    pub fn neg(&self, a: &Cyc) -> Cyc {
        Cyc(a.0.iter().map(|x| -x).collect())
    }

    pub fn mul(&self, a: &Cyc, b: &Cyc) -> Cyc {
        Cyc(self.reduce(poly_mul(&a.0, &b.0)))
    }

    pub fn scale(&self, a: &Cyc, r: &BigRational) -> Cyc {
        Cyc(a.0.iter().map(|x| x * r).collect())
    }

    pub fn is_zero(&self, a: &Cyc) -> bool {
        a.0.iter().all(Zero::is_zero)
    }

    pub fn is_rational(&self, a: &Cyc) -> Option<BigRational> {
        if a.0.iter().skip(1).all(Zero::is_zero) {
            Some(a.0[0].clone())
        } else {
            None
        }
    }

    /// Field inverse by the extended Euclidean algorithm in Q[x].
    pub fn inv(&self, a: &Cyc) -> Option<Cyc> {
        if self.is_zero(a) {
            return None;
        }
        let mut r0 = self.min_poly.clone();
        let mut r1 = a.0.clone();
        poly_trim(&mut r1);
        let mut t0: Vec<BigRational> = vec![];
        let mut t1 = vec![BigRational::one()];
        while !r1.is_empty() {
            let (q, r) = poly_div(&r0, &r1);
            let qt1 = poly_mul(&q, &t1);
            let mut t2 = t0.clone();
            t2.resize(t2.len().max(qt1.len()), BigRational::zero());
            for (i, v) in qt1.iter().enumerate() {
                let t = &t2[i] - v;
                t2[i] = t;
            }
            poly_trim(&mut t2);
            r0 = r1;
            r1 = r;
            t0 = t1;
            t1 = t2;
        }
        // r0 is the gcd, a nonzero constant
        assert!(r0.len() == 1, "minimal polynomial must be coprime to a");
        let c = r0[0].recip();
        let mut out = t0;
        for v in out.iter_mut() {
            *v = &*v * &c;
        }
        out.resize(self.dim, BigRational::zero());
        Some(Cyc(out))
    }
}

// ---------------------------------------------------------------------------
// Laurent scalars over the cyclotomic field.
// ---------------------------------------------------------------------------

/// Exponent triple (chi_1(w), chi_2(w), q^{1/2}).
pub type SymExp = (i32, i32, i32);

/// Laurent polynomial in the formal symbols with cyclotomic coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WScalar {
    pub terms: BTreeMap<SymExp, Cyc>,
}

impl WScalar {
    pub fn zero() -> WScalar {
        WScalar {
            terms: BTreeMap::new(),
        }
    }

    pub fn term(e: SymExp, c: Cyc, f: &CycField) -> WScalar {
        let mut t = BTreeMap::new();
        if !f.is_zero(&c) {
            t.insert(e, c);
        }
        WScalar { terms: t }
    }

    pub fn one(f: &CycField) -> WScalar {
        WScalar::term((0, 0, 0), f.one(), f)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &WScalar, f: &CycField) -> WScalar {
        let mut out = self.terms.clone();
        for (e, c) in &o.terms {
            let v = match out.get(e) {
                Some(prev) => f.add(prev, c),
                None => c.clone(),
            };
            if f.is_zero(&v) {
                out.remove(e);
            } else {
                out.insert(*e, v);
            }
        }
        WScalar { terms: out }
    }

    pub fn neg(&self, f: &CycField) -> WScalar {
        WScalar {
            terms: self.terms.iter().map(|(e, c)| (*e, f.neg(c))).collect(),
        }
    }

    pub fn sub(&self, o: &WScalar, f: &CycField) -> WScalar {
        self.add(&o.neg(f), f)
    }

    pub fn mul(&self, o: &WScalar, f: &CycField) -> WScalar {
        let mut out = WScalar::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e = (e1.0 + e2.0, e1.1 + e2.1, e1.2 + e2.2);
                let c = f.mul(c1, c2);
                out = out.add(&WScalar::term(e, c, f), f);
            }
        }
        out
    }

    pub fn scale(&self, r: &BigRational, f: &CycField) -> WScalar {
        if r.is_zero() {
            return WScalar::zero();
        }
        WScalar {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (*e, f.scale(c, r)))
                .collect(),
        }
    }

    /// Inverse of a single-term scalar (monomial times a cyclotomic unit).
    pub fn inv_monomial(&self, f: &CycField) -> Option<WScalar> {
        if self.terms.len() != 1 {
            return None;
        }
        let (e, c) = self.terms.iter().next().unwrap();
        let ci = f.inv(c)?;
        Some(WScalar::term((-e.0, -e.1, -e.2), ci, f))
    }

    /// The rational number this scalar equals, if it is symbol-free and
    /// rational.
    pub fn as_rational(&self, f: &CycField) -> Option<BigRational> {
        if self.terms.is_empty() {
            return Some(BigRational::zero());
        }
        if self.terms.len() != 1 {
            return None;
        }
        let (e, c) = self.terms.iter().next().unwrap();
        if *e != (0, 0, 0) {
            return None;
        }
        f.is_rational(c)
    }
}

pub fn bigint(v: i64) -> BigInt {
    BigInt::from(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_polys() {
        let to_i64 = |v: &Vec<BigRational>| -> Vec<i64> {
            v.iter()
                .map(|r| {
                    assert!(r.is_integer());
                    i64::try_from(r.to_integer()).unwrap()
                })
                .collect()
        };
        assert_eq!(to_i64(&cyclotomic_poly(1)), vec![-1, 1]);
        assert_eq!(to_i64(&cyclotomic_poly(2)), vec![1, 1]);
        assert_eq!(to_i64(&cyclotomic_poly(6)), vec![1, -1, 1]);
        assert_eq!(to_i64(&cyclotomic_poly(12)), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn roots_of_unity_sum_to_zero() {
        for m in [6u32, 20, 54] {
            let f = CycField::new(m);
            for d in [2u32, 3] {
                if m % d != 0 {
                    continue;
                }
                let mut s = f.zero();
                for k in 0..d {
                    s = f.add(&s, &f.root_of_unity(d, k as i64));
                }
                assert!(f.is_zero(&s), "sum of zeta_{d} powers in Q(zeta_{m})");
            }
        }
    }

    #[test]
    fn field_inverse() {
        let f = CycField::new(20);
        let x = f.add(&f.zeta_pow(3), &f.from_rational(BigRational::new(bigint(2), bigint(1))));
        let xi = f.inv(&x).unwrap();
        assert_eq!(f.mul(&x, &xi), f.one());
    }

    #[test]
    fn quadratic_gauss_sum_squares() {
        // For the quadratic character mod 3, G^2 = chi(-1) * 3 = -3.
        let f = CycField::new(6);
        let chi = |u: i64| if u.rem_euclid(3) == 1 { 1i64 } else { -1 };
        let mut g = f.zero();
        for u in 1..3i64 {
            let term = f.scale(
                &f.root_of_unity(3, u),
                &BigRational::new(bigint(chi(u)), bigint(1)),
            );
            g = f.add(&g, &term);
        }
        let g2 = f.mul(&g, &g);
        assert_eq!(f.is_rational(&g2), Some(BigRational::new(bigint(-3), bigint(1))));
    }

    #[test]
    fn wscalar_ring() {
        let f = CycField::new(6);
        let a = WScalar::term((1, 0, 2), f.zeta_pow(1), &f);
        let b = WScalar::term((-1, 0, -2), f.zeta_pow(5), &f);
        let prod = a.mul(&b, &f);
        // zeta * zeta^5 = zeta^6 = 1
        assert_eq!(prod, WScalar::one(&f));
        assert!(a.sub(&a, &f).is_zero());
        let inv = a.inv_monomial(&f).unwrap();
        assert_eq!(a.mul(&inv, &f), WScalar::one(&f));
    }
}
