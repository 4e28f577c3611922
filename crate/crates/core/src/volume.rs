//! Haar-volume computations by exact counting in finite quotients, under the
//! normalizations vol(full integral group) = 1, vol(torus unit group) = 1 and
//! vol(U(o)) = 1. Every closed formula is reproduced from a raw count; the
//! splitting-dependent factor (1 - (L/p) q^{-1}) must emerge from the counts
//! themselves.

use crate::coset;
use crate::ring::{ExtRing, ResidueRing};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

pub fn big(n: u64) -> BigInt {
    BigInt::from(n)
}

pub fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(big(num), big(den))
}

/// q-power with a signed exponent.
pub fn q_pow(q: u64, e: i64) -> BigRational {
    let p = BigInt::from(q).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        BigRational::from(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

/// vol(K#(p^n)) = (q-1) / (q^{3(n-1)} (q+1)(q^4-1)).
pub fn vol_ksharp_formula(q: u64, n: u32) -> BigRational {
    BigRational::new(
        big(q - 1),
        big(q.pow(3 * (n - 1))) * big(q + 1) * (big(q.pow(4)) - BigInt::one()),
    )
}

/// Counted path: one over the enumerated coset index.
pub fn vol_ksharp_counted(q: u64, n: u32) -> BigRational {
    BigRational::new(BigInt::one(), big(coset::index_formula(q, n)))
}

/// The splitting factor 1 - (L/p)/q.
pub fn splitting_factor(q: u64, legendre: i32) -> BigRational {
    BigRational::one() - BigRational::new(BigInt::from(legendre), big(q))
}

/// Inverse volume of T(F) cap [[o^x, p^s], [o, o^x]] under vol(T(o)) = 1,
/// computed as the ratio of raw unit counts at precision k. Returns the
/// counted ratio; the closed form is (1 - (L/p) q^{-1}) q^s.
pub fn t_volume_inverse_counted(ext: &ExtRing, s: u32, k: u32) -> BigRational {
    assert!(k >= s + 2, "precision too low: k = {k} < s + 2");
    let r = ext.base.with_precision(k);
    let (_, b, _) = ext.abc();
    let b = b % r.modulus;
    let d = r.from_rational(ext.cfg.d());
    let half = r.inv(2).unwrap();
    let quarter = r.mul(half, half);
    // The unit conditions only involve residues mod p, so count
    // (x mod p, y mod p^k) pairs and weight each x-class by its q^{k-1}
    // lifts. The plain double loop over (x, y) mod p^k gives the same
    // totals (tested) but is infeasible at q = 5 precisions.
    let q = r.p;
    let mut restricted: u64 = 0; // y in p^s, x +- by/2 units
    let mut full: u64 = 0; // det = x^2 - d y^2/4 a unit
    for y in 0..r.modulus {
        let y_in_ps = y % q.pow(s) == 0;
        let yb2 = r.mul(y, r.mul(b, half)) % q;
        let dy2 = r.mul(d, r.mul(r.mul(y, y), quarter)) % q;
        for x0 in 0..q {
            let plus = (x0 + yb2) % q != 0;
            let minus = (x0 + q - yb2) % q != 0;
            if y_in_ps && plus && minus {
                restricted += q.pow(k - 1);
            }
            if (x0 * x0 + q * q - dy2) % q != 0 {
                full += q.pow(k - 1);
            }
        }
    }
    BigRational::new(big(full), big(restricted))
}

pub fn t_volume_inverse_formula(q: u64, legendre: i32, s: u32) -> BigRational {
    splitting_factor(q, legendre) * q_pow(q, s as i64)
}

/// Counted volume of the (e,f,g)-constraint set for the A(z) double cosets,
/// with val(z) = j: e in p^{2m+l}, g in p^{n-2-2j+l} cap p^l, and
/// w^l c y + w^{j+1} f (x + by/2) in p^{n+m+l}, normalized by vol(o^3) = 1.
/// Several admissible (x, y) samples are counted and must agree.
pub fn u_volume_counted(ext: &ExtRing, n: u32, l: u32, m: u32, j: u32) -> BigRational {
    assert!(j <= n - 1);
    let kk = n + m + l + 2;
    let r = ext.base.with_precision(kk);
    let (_, b, c) = ext.abc();
    let (b, c) = (b % r.modulus, c % r.modulus);
    let half = r.inv(2).unwrap();
    let q = r.p;
    let e_exp = (2 * m + l).min(kk);
    let g_exp = ((n as i64 - 2 - 2 * j as i64 + l as i64).max(l as i64) as u32).min(kk);
    let e_count: u64 = q.pow(kk - e_exp);
    let g_count: u64 = q.pow(kk - g_exp);
    // f-count for a sample (x, y): y in p^{m+j+1} with x +- by/2 units
    let mut f_counts = Vec::new();
    for (x, y_mult) in [(1u64, 1u64), (1, 2), (2, 1)] {
        let y = r.mul(r.pow_p((m + j + 1).min(kk)), y_mult);
        let xb = r.add(x, r.mul(y, r.mul(b, half)));
        if !r.is_unit(xb) || !r.is_unit(r.sub(x, r.mul(y, r.mul(b, half)))) {
            continue;
        }
        let lhs_const = r.mul(r.pow_p(l), r.mul(c, y));
        let coef = r.mul(r.pow_p(j + 1), xb);
        let need = (n + m + l).min(kk);
        let pn = q.pow(need);
        let mut cnt: u64 = 0;
        for f in 0..r.modulus {
            if r.add(lhs_const, r.mul(coef, f)) % pn == 0 {
                cnt += 1;
            }
        }
        f_counts.push(cnt);
    }
    assert!(!f_counts.is_empty());
    assert!(
        f_counts.windows(2).all(|w| w[0] == w[1]),
        "f-count must not depend on the (x,y) sample"
    );
    let total = BigRational::new(
        big(e_count) * big(f_counts[0]) * big(g_count),
        BigInt::from(q).pow(3 * kk),
    );
    total
}

/// Closed form of the same volume.
pub fn u_volume_formula(q: u64, n: u32, l: u32, m: u32, j: u32) -> BigRational {
    let (n, l, m, j) = (n as i64, l as i64, m as i64, j as i64);
    if j <= (n - 3).div_euclid(2) {
        q_pow(q, -2 * n - 3 * m - 3 * l + 3 * j + 3)
    } else {
        // j >= floor((n-1)/2)
        q_pow(q, -n - 3 * m - 3 * l + j + 1)
    }
}

/// Which closed formula a double-coset volume instance uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeKind {
    /// A(z) with val(z) = j <= floor((n-3)/2).
    Shallow(u32),
    /// A(z) with val(z) = j >= floor((n-1)/2); independent of j.
    Deep(u32),
    /// The long Weyl double coset, m >= n.
    Weyl,
}

/// Closed form of the double-coset volume for the given kind.
pub fn coset_volume_formula(
    q: u64,
    n: u32,
    l: u32,
    m: u32,
    legendre: i32,
    kind: VolumeKind,
) -> BigRational {
    let base = vol_ksharp_formula(q, n) * splitting_factor(q, legendre);
    let (nn, ll, mm) = (n as i64, l as i64, m as i64);
    let e = match kind {
        VolumeKind::Shallow(j) => 2 * nn + 4 * mm + 3 * ll - 2 * j as i64 - 2,
        VolumeKind::Deep(_) => nn + 4 * mm + 3 * ll,
        VolumeKind::Weyl => 4 * mm + 3 * ll + 2 * nn,
    };
    base * q_pow(q, e)
}

/// Counted assembly of the same volume: vol(K#) times the inverse of the
/// product of the torus and unipotent restriction volumes.
pub fn coset_volume_counted(
    ext: &ExtRing,
    n: u32,
    l: u32,
    m: u32,
    kind: VolumeKind,
) -> BigRational {
    let q = ext.base.p;
    let vk = vol_ksharp_counted(q, n);
    let _ = q;
    match kind {
        VolumeKind::Shallow(j) | VolumeKind::Deep(j) => {
            let s = m + j + 1;
            let t_inv = t_volume_inverse_counted(ext, s, s + 2);
            let u_vol = u_volume_counted(ext, n, l, m, j);
            vk * t_inv / u_vol
        }
        VolumeKind::Weyl => {
            assert!(m >= n, "the long Weyl coset requires m >= n");
            let t_inv = t_volume_inverse_counted(ext, m, m + 2);
            let n1_vol = n1_volume_counted(ext, n, l, m);
            vk * t_inv / n1_vol
        }
    }
}

/// Counted volume of the X-constraint for the long Weyl coset:
/// e in p^{2m+l}, f in p^{n+m+l}, g in p^{n+l}.
pub fn n1_volume_counted(ext: &ExtRing, n: u32, l: u32, m: u32) -> BigRational {
    let kk = n + 2 * m + l + 2;
    let r = ext.base.with_precision(kk);
    let q = r.p;
    let count_pow = |e: u32| -> BigRational {
        let e = e.min(kk);
        let mut cnt: u64 = 0;
        let pe = q.pow(e);
        for v in 0..r.modulus {
            if v % pe == 0 {
                cnt += 1;
            }
        }
        BigRational::new(big(cnt), big(r.modulus))
    };
    count_pow(2 * m + l) * count_pow(n + m + l) * count_pow(n + l)
}

#[derive(Debug, Clone)]
pub struct Prop51Check {
    pub q: u64,
    pub n: u32,
    pub l: u32,
    pub m: u32,
    pub kind: VolumeKind,
    pub counted: BigRational,
    pub formula: BigRational,
}

impl Prop51Check {
    pub fn pass(&self) -> bool {
        self.counted == self.formula
    }
}

/// Full consistency check of the double-coset volume at one parameter point.
pub fn verify_prop_5_1(ext: &ExtRing, n: u32, l: u32, m: u32, kind: VolumeKind) -> Prop51Check {
    let q = ext.base.p;
    let legendre = ext.case.legendre();
    Prop51Check {
        q,
        n,
        l,
        m,
        kind,
        counted: coset_volume_counted(ext, n, l, m, kind),
        formula: coset_volume_formula(q, n, l, m, legendre, kind),
    }
}

/// Admissible deep j values for (n, m): j >= floor((n-1)/2), j >= n-m-1,
/// j <= n-1 (j = n-1 stands for z = 0).
pub fn deep_j_range(n: u32, m: u32) -> Vec<u32> {
    let lo = ((n - 1) / 2).max((n as i64 - m as i64 - 1).max(0) as u32);
    (lo..=n - 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{Case, LocalConfig};

    fn ext(case: Case, p: u64, k: u32) -> ExtRing {
        LocalConfig::default_for(p, k, case).unwrap().ext_ring()
    }

    #[test]
    fn ksharp_volume_values() {
        assert_eq!(vol_ksharp_formula(3, 1), ratio(1, 160));
        assert_eq!(vol_ksharp_formula(3, 2), ratio(1, 4320));
        assert_eq!(vol_ksharp_counted(3, 2), ratio(1, 4320));
        assert_eq!(vol_ksharp_counted(5, 2), ratio(1, 117000));
    }

    #[test]
    fn t_volume_examples() {
        // (q=3, inert, s=1) -> (1+1/3)*3 = 4
        let e = ext(Case::Inert, 3, 6);
        assert_eq!(t_volume_inverse_counted(&e, 1, 4), ratio(4, 1));
        // (q=3, split, s=1) -> (1-1/3)*3 = 2
        let e = ext(Case::Split, 3, 6);
        assert_eq!(t_volume_inverse_counted(&e, 1, 4), ratio(2, 1));
        // (q=3, ramified, s=1) -> 3
        let e = ext(Case::Ramified, 3, 6);
        assert_eq!(t_volume_inverse_counted(&e, 1, 4), ratio(3, 1));
    }

    #[test]
    fn t_volume_matches_formula_everywhere() {
        for case in [Case::Inert, Case::Ramified, Case::Split] {
            for q in [3u64, 5] {
                let e = ext(case, q, 8);
                for s in 1..=4u32 {
                    let counted = t_volume_inverse_counted(&e, s, s + 2);
                    let formula = t_volume_inverse_formula(q, case.legendre(), s);
                    assert_eq!(counted, formula, "case {case} q={q} s={s}");
                }
            }
        }
    }

    #[test]
    fn t_volume_precision_stable() {
        let e = ext(Case::Inert, 3, 9);
        for s in 1..=3 {
            assert_eq!(
                t_volume_inverse_counted(&e, s, s + 2),
                t_volume_inverse_counted(&e, s, s + 3)
            );
        }
    }

    #[test]
    fn u_volume_examples() {
        // (q=3, n=2, l=0, m=1, j=0): deep branch -> 3^{-4}
        let e = ext(Case::Inert, 3, 8);
        assert_eq!(u_volume_counted(&e, 2, 0, 1, 0), q_pow(3, -4));
        assert_eq!(u_volume_formula(3, 2, 0, 1, 0), q_pow(3, -4));
        // (q=3, n=4, l=0, m=3, j=0): shallow branch -> 3^{-14}
        let e = ext(Case::Inert, 3, 11);
        assert_eq!(u_volume_counted(&e, 4, 0, 3, 0), q_pow(3, -14));
        assert_eq!(u_volume_formula(3, 4, 0, 3, 0), q_pow(3, -14));
    }

    #[test]
    fn prop51_deep_example() {
        // V^{0,0} at (q=3, n=2, inert) = (1/4320)(4/3)(9) = 1/360
        let e = ext(Case::Inert, 3, 8);
        let chk = verify_prop_5_1(&e, 2, 0, 0, VolumeKind::Deep(1));
        assert!(chk.pass(), "{chk:?}");
        assert_eq!(chk.formula, ratio(1, 360));
    }

    #[test]
    fn prop51_n1_specialization() {
        // n=1, m=0, l=0, q=3, inert: (1/160)(4/3)(3) = 1/40
        let e = ext(Case::Inert, 3, 6);
        let chk = verify_prop_5_1(&e, 1, 0, 0, VolumeKind::Deep(0));
        assert!(chk.pass(), "{chk:?}");
        assert_eq!(chk.formula, ratio(1, 40));
        // and the Weyl variant at m >= 1
        let chk = verify_prop_5_1(&e, 1, 0, 1, VolumeKind::Weyl);
        assert!(chk.pass(), "{chk:?}");
        assert_eq!(
            chk.formula,
            vol_ksharp_formula(3, 1) * ratio(4, 3) * q_pow(3, 6)
        );
    }

    #[test]
    fn prop51_weyl_counted() {
        let e = ext(Case::Split, 3, 10);
        let chk = verify_prop_5_1(&e, 2, 0, 2, VolumeKind::Weyl);
        assert!(chk.pass(), "{chk:?}");
    }

    #[test]
    fn deep_volume_is_j_independent() {
        let e = ext(Case::Inert, 3, 10);
        for (n, m) in [(2u32, 1u32), (3, 2), (4, 3)] {
            let js = deep_j_range(n, m);
            let vals: Vec<BigRational> = js
                .iter()
                .map(|j| coset_volume_counted(&e, n, 0, m, VolumeKind::Deep(*j)))
                .collect();
            assert!(vals.windows(2).all(|w| w[0] == w[1]), "n={n} m={m}");
        }
    }

    #[test]
    fn normalization_product_is_one() {
        for (q, n) in [(3u64, 1u32), (3, 2), (5, 1)] {
            let prod = vol_ksharp_counted(q, n) * ratio(coset::index_formula(q, n), 1);
            assert!(prod.is_one(), "q={q} n={n}");
        }
    }
}
