//! Support analysis: for which representatives r does eta_m r lie in
//! M(F) N(F) K#(P^n)?
//!
//! Two independent deciders are provided. `support_fast` applies the
//! case-by-case verdicts for the eight parametrized families of
//! representatives. `support_exhaustive` knows nothing about those verdicts:
//! it expands the orbit of the identity coset of K#(P^n) inside
//! GU(2,2; o_L/P^n) under generators of the integral Klingen parabolic
//! P cap K and then tests whether the coset of eta_m r was reached. Since
//! eta_m r is integral, membership in P(F) K#(P^n) is equivalent to
//! membership in (P cap K) K#(P^n), which is exactly the orbit.

use crate::coset::{CosetError, CosetSpace};
use crate::group::{self, Mat4};
use crate::ring::{ExtElem, ExtRing, LocalRing, ResidueRing};

/// A representative in one of the eight family forms of the preliminary
/// double-coset decomposition. Parameters live mod p^{n-1} except where the
/// family uses a mod p^n slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Upper (1,2)-unipotent times lower (3,2)/(4,1)/(4,2) factor.
    F1 { w: u64, y: u64, z: u64 },
    /// Lower GL2-block unipotent times lower factor, times s1.
    F2 { w: u64, y: u64, z: u64 },
    /// Lower (3,2)/(4,1) factor times mixed factor, times s2.
    F3 { w: u64, y: u64, z: u64 },
    /// Lower block times lower factor, times s1 s2.
    F4 { w: u64, y: u64, z: u64 },
    /// Upper (1,2)-unipotent times s2 s1.
    F5 { w: u64 },
    /// Lower block unipotent times s1 s2 s1.
    F6 { w: u64 },
    /// Upper (1,2)-unipotent times s2 s1 s2.
    F7 { w: u64 },
    /// Lower block unipotent times s1 s2 s1 s2.
    F8 { w: u64 },
}

impl Family {
    pub fn case_id(&self) -> u8 {
        match self {
            Family::F1 { .. } => 1,
            Family::F2 { .. } => 2,
            Family::F3 { .. } => 3,
            Family::F4 { .. } => 4,
            Family::F5 { .. } => 5,
            Family::F6 { .. } => 6,
            Family::F7 { .. } => 7,
            Family::F8 { .. } => 8,
        }
    }

    /// The representative as a matrix over any ring containing the base.
    pub fn matrix<R: LocalRing>(&self, r: &R, embed: impl Fn(u64) -> R::El) -> Mat4<R::El> {
        let s1 = group::s1(r);
        let s2 = group::s2(r);
        let lower_block = |w: u64| {
            let mut m = group::identity(r);
            m.set(1, 0, embed(w));
            m.set(2, 3, r.neg(embed(w)));
            m
        };
        let upper12 = |w: u64| {
            let mut m = group::identity(r);
            m.set(0, 1, r.shift_up(embed(w), 1));
            m.set(3, 2, r.neg(r.shift_up(embed(w), 1)));
            m
        };
        match *self {
            Family::F1 { w, y, z } => {
                let mut b = group::identity(r);
                b.set(2, 1, r.shift_up(embed(y), 1));
                b.set(3, 0, r.shift_up(embed(y), 1));
                b.set(3, 1, r.shift_up(embed(z), 1));
                group::mat_mul(r, &upper12(w), &b)
            }
            Family::F2 { w, y, z } => {
                let mut b = group::identity(r);
                b.set(2, 0, r.shift_up(embed(z), 1));
                b.set(2, 1, r.shift_up(embed(y), 1));
                b.set(3, 0, r.shift_up(embed(y), 1));
                group::mat_mul(r, &group::mat_mul(r, &lower_block(w), &b), &s1)
            }
            Family::F3 { w, y, z } => {
                let mut a = group::identity(r);
                a.set(2, 1, r.shift_up(embed(w), 1));
                a.set(3, 0, r.shift_up(embed(w), 1));
                let mut b = group::identity(r);
                b.set(0, 1, r.shift_up(embed(y), 1));
                b.set(3, 1, r.shift_up(embed(z), 1));
                b.set(3, 2, r.neg(r.shift_up(embed(y), 1)));
                group::mat_mul(r, &group::mat_mul(r, &a, &b), &s2)
            }
            Family::F4 { w, y, z } => {
                let mut b = group::identity(r);
                b.set(2, 0, r.shift_up(embed(y), 1));
                b.set(2, 1, r.shift_up(embed(z), 1));
                b.set(3, 0, r.shift_up(embed(z), 1));
                let s1s2 = group::mat_mul(r, &s1, &s2);
                group::mat_mul(r, &group::mat_mul(r, &lower_block(w), &b), &s1s2)
            }
            Family::F5 { w } => {
                let s2s1 = group::mat_mul(r, &s2, &s1);
                group::mat_mul(r, &upper12(w), &s2s1)
            }
            Family::F6 { w } => {
                group::mat_mul(r, &lower_block(w), &group::s1s2s1(r))
            }
            Family::F7 { w } => {
                let s2s1s2 = group::mat_mul(r, &group::mat_mul(r, &s2, &s1), &s2);
                group::mat_mul(r, &upper12(w), &s2s1s2)
            }
            Family::F8 { w } => {
                let s1s2s1s2 = group::mat_mul(r, &group::s1s2s1(r), &s2);
                group::mat_mul(r, &lower_block(w), &s1s2s1s2)
            }
        }
    }
}

/// All family representatives at level n (the preliminary decomposition).
pub fn enumerate_families(q: u64, n: u32) -> Vec<Family> {
    let qn1 = q.pow(n - 1);
    let qn = q.pow(n);
    let mut out = Vec::new();
    for w in 0..qn1 {
        for y in 0..qn1 {
            for z in 0..qn1 {
                out.push(Family::F1 { w, y, z });
                out.push(Family::F3 { w, y, z });
            }
        }
    }
    for w in 0..qn {
        for y in 0..qn1 {
            for z in 0..qn1 {
                out.push(Family::F2 { w, y, z });
                out.push(Family::F4 { w, y, z });
            }
        }
    }
    for w in 0..qn1 {
        out.push(Family::F5 { w });
        out.push(Family::F7 { w });
    }
    for w in 0..qn {
        out.push(Family::F6 { w });
        out.push(Family::F8 { w });
    }
    out
}

/// Case-by-case support verdict for eta_m r in M(F)N(F)K#(P^n).
///
/// Case 1 holds iff y = 0 and z has valuation at least n-m-1; case 2 iff
/// w^m alpha + w is a unit, y has valuation at least n-m-1, and z = wy;
/// case 6 iff m >= n and w = 0; the other five cases never contribute.
pub fn support_fast(ext: &ExtRing, n: u32, m: u32, fam: &Family) -> bool {
    let need = (n as i64 - m as i64 - 1).max(0) as u32;
    // parameters of the triple families live mod p^{n-1}
    let rn1 = if n >= 2 {
        Some(ext.base.with_precision(n - 1))
    } else {
        None
    };
    let val_n1 = |v: u64| match &rn1 {
        Some(r) => r.val(v % r.modulus),
        None => n - 1, // only the zero parameter exists
    };
    match *fam {
        Family::F1 { w: _, y, z } => {
            let y_zero = match &rn1 {
                Some(r) => y % r.modulus == 0,
                None => true,
            };
            y_zero && val_n1(z) >= need
        }
        Family::F2 { w, y, z } => {
            // beta = w^m alpha + w must be a unit of o_L
            let beta = ext.add(ext.shift_up(ext.alpha(), m), ext.embed(w));
            let beta_unit = ext.is_unit(beta);
            let y_ok = val_n1(y) >= need;
            let z_ok = match &rn1 {
                Some(r) => (z % r.modulus) == r.mul(w % r.modulus, y % r.modulus),
                None => true,
            };
            beta_unit && y_ok && z_ok
        }
        Family::F6 { w } => {
            let rn = ext.base.with_precision(n);
            m >= n && w % rn.modulus == 0
        }
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Exhaustive decision procedure over GU(2,2).
// ---------------------------------------------------------------------------

/// Orbit of the identity coset of K#(P^n) under the integral points of the
/// Klingen parabolic, inside GU(2,2; o_L/P^n). Deciding the support
/// condition for an integral element is a single resolve against this set.
pub struct ParabolicOrbit {
    pub ext: ExtRing,
    pub n: u32,
    space: CosetSpace<ExtRing>,
}

/// Generators of the image of P(F) cap K in GU(2,2; o_L/P^n): all Levi
/// m1/m2 scalars, GL2 elementaries with a unit-group generator, and a basis
/// of the unipotent radical. P cap K factors as (M1 cap K)(M2 cap K)(N cap K)
/// and M2 cap K = o_L^x GL2(o), so these generate the full image.
fn parabolic_generators(ext: &ExtRing) -> Vec<Mat4<ExtElem>> {
    let b = &ext.base;
    let mut gens: Vec<Mat4<ExtElem>> = Vec::new();
    // all units of o_L/P^n
    let mut units = Vec::new();
    for c0 in 0..b.modulus {
        for c1 in 0..b.modulus {
            let x = ExtElem { c0, c1 };
            if ext.is_unit(x) {
                units.push(x);
            }
        }
    }
    for &z in &units {
        gens.push(group::m1(ext, z).unwrap());
        gens.push(group::m2(ext, z, ext.zero(), ext.zero(), z));
    }
    // GL2(o) part of M2: elementary unipotents and the diagonal torus
    let one = ext.one();
    gens.push(group::m2(ext, one, one, ext.zero(), one));
    gens.push(group::m2(ext, one, ext.zero(), one, one));
    let g0 = ext.embed(b.unit_group_generator());
    gens.push(group::m2(ext, g0, ext.zero(), ext.zero(), one));
    // unipotent radical: additive basis in each slot
    let alpha = ext.alpha();
    for x in [one, alpha] {
        gens.push(group::n_unip(ext, x, ext.zero(), ext.zero()));
        gens.push(group::n_unip(ext, ext.zero(), x, ext.zero()));
    }
    gens.push(group::n_unip(ext, ext.zero(), ext.zero(), one));
    gens
}

impl ParabolicOrbit {
    /// BFS closure of the identity coset under left multiplication by the
    /// parabolic generators. `budget` bounds the number of cosets.
    pub fn build(ext: &ExtRing, n: u32, budget: usize) -> Result<Self, CosetError> {
        let ext_n = ext.with_precision(n.max(1));
        let mut space = CosetSpace::new(ext_n.clone(), n);
        let gens = parabolic_generators(&ext_n);
        let mut queue = vec![0u32];
        space.insert(group::identity(&ext_n))?;
        while let Some(id) = queue.pop() {
            let cur = *space.rep(id);
            for g in &gens {
                let next = group::mat_mul(&ext_n, g, &cur);
                let (nid, fresh) = space.insert(next)?;
                if fresh {
                    if space.len() > budget {
                        return Err(CosetError::Budget(budget));
                    }
                    queue.push(nid);
                }
            }
        }
        Ok(ParabolicOrbit {
            ext: ext_n,
            n,
            space,
        })
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// Does eta_m r lie in M(F) N(F) K#(P^n)?
    pub fn support(&self, m: u32, fam: &Family) -> bool {
        let ext = &self.ext;
        let alpha = ext.alpha();
        let eta_m = group::eta_m(ext, alpha, m.min(self.n));
        let r = fam.matrix(ext, |v| ext.embed(v));
        let g = group::mat_mul(ext, &eta_m, &r);
        self.space.resolve(&g).is_some()
    }
}

/// Convenience wrapper: exhaustive support decision for a single input.
pub fn support_exhaustive(
    orbit: &ParabolicOrbit,
    m: u32,
    fam: &Family,
) -> bool {
    orbit.support(m, fam)
}

/// The Iwahori-conjugation containment used by the volume reduction:
/// A(z) K#(p^n) A(z)^{-1} is inside K#(p^{j+1}) when val(z) = j <= n-1.
pub fn a_conj_containment_sampled(
    r: &ResidueRing,
    n: u32,
    j: u32,
    samples: usize,
    seed: u64,
) -> bool {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let z = r.pow_p(j);
    let a = group::a_z(r, z);
    let a_inv = group::group_inverse(r, &a).unwrap();
    for _ in 0..samples {
        let k = group::sampling::sample_ksharp(r, &mut rng, n, 6);
        let c = group::mat_mul(r, &a, &group::mat_mul(r, &k, &a_inv));
        if !group::is_member(r, &c, group::Pred::Ksharp(j + 1)) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{Case, LocalConfig};

    fn ext(case: Case, p: u64, k: u32) -> ExtRing {
        LocalConfig::default_for(p, k, case).unwrap().ext_ring()
    }

    #[test]
    fn fast_verdict_spot_checks() {
        let e = ext(Case::Inert, 3, 6);
        // case 1, m=0, z a unit, n=2 -> false
        assert!(!support_fast(&e, 2, 0, &Family::F1 { w: 0, y: 0, z: 1 }));
        // case 1, m=0, z=0 -> true
        assert!(support_fast(&e, 2, 0, &Family::F1 { w: 2, y: 0, z: 0 }));
        // case 6: m >= n and w = 0 -> true
        assert!(support_fast(&e, 2, 2, &Family::F6 { w: 0 }));
        assert!(!support_fast(&e, 2, 1, &Family::F6 { w: 0 }));
        // case 5 never contributes
        for w in 0..3 {
            assert!(!support_fast(&e, 2, 0, &Family::F5 { w }));
        }
    }

    #[test]
    fn case2_beta_unit_depends_on_case_at_m0() {
        // At m = 0 the unit condition on alpha + w excludes the roots of
        // c w^2 + b w + a: never for inert, one class for ramified, two for
        // split.
        for (case, excluded) in [(Case::Inert, 0usize), (Case::Ramified, 1), (Case::Split, 2)] {
            let e = ext(case, 3, 6);
            let bad = (0..3u64)
                .filter(|w| {
                    !support_fast(&e, 2, 0, &Family::F2 { w: *w, y: 0, z: 0 })
                })
                .count();
            assert_eq!(bad, excluded, "case {case}");
        }
    }

    #[test]
    fn exhaustive_orbit_matches_fast_at_q3_n2() {
        for case in [Case::Inert, Case::Ramified, Case::Split] {
            let e = ext(case, 3, 2);
            let orbit = ParabolicOrbit::build(&e, 2, 1_000_000).unwrap();
            for m in 0..=2u32 {
                for fam in enumerate_families(3, 2) {
                    let fast = support_fast(&e, 2, m, &fam);
                    let slow = orbit.support(m, &fam);
                    assert_eq!(fast, slow, "case {case} m={m} fam {fam:?}");
                }
            }
        }
    }

    #[test]
    fn identity_is_supported() {
        let e = ext(Case::Inert, 3, 2);
        let orbit = ParabolicOrbit::build(&e, 2, 1_000_000).unwrap();
        assert!(orbit.support(0, &Family::F1 { w: 0, y: 0, z: 0 }));
    }

    #[test]
    fn a_conjugation_containment() {
        let r = ResidueRing::new(3, 5);
        for n in 2..=3u32 {
            for j in 0..n {
                assert!(a_conj_containment_sampled(&r, n, j, 200, 9));
            }
        }
    }
}
