//! Enumeration of the left coset space of the level-n working compact
//! subgroup inside the full integral group, with canonical labels.
//!
//! Cosets g K#(p^n) are deduplicated through an invariant that is exactly
//! right-invariant: the second column of g up to unit scaling mod p^n
//! (K# fixes the line through e2 at level n), together with the wedge-square
//! and wedge-cube data of the leading columns mod p (K# lies in the Iwahori
//! subgroup, which scales these by units). Distinct invariants therefore
//! prove distinct cosets; equal invariants are settled by an exact
//! membership test, so no unproven separation property is ever relied on.

use crate::group::{self, Mat4, Pred};
use crate::ring::LocalRing;
use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

/// Multiply-xor hasher; the keys are already well-mixed words.
#[derive(Default)]
pub struct FxHasher(u64);

impl Hasher for FxHasher {
    fn finish(&self) -> u64 { self.0 }
    fn write(&mut self, bytes: &[u8]) { for &b in bytes { self.write_u64(b as u64); } }
    fn write_u64(&mut self, w: u64) { self.0 = (self.0.rotate_left(5) ^ w).wrapping_mul(0x517c_c1b7_2722_0a95); }
    fn write_u128(&mut self, w: u128) { self.write_u64(w as u64); self.write_u64((w >> 64) as u64); }
}

type FxMap<K, V> = HashMap<K, V, BuildHasherDefault<FxHasher>>;

/// Canonical coset label: packed second column mod p^n, wedge-2 and wedge-3
/// minors of the leading columns mod p, each normalized by unit scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CosetKey([u64; 14]);

impl CosetKey {
    pub fn from_words(words: [u64; 14]) -> Self {
        CosetKey(words)
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum CosetError {
    #[error("representative {0} and {1} describe the same coset")]
    Collision(usize, usize),
    #[error("element does not resolve to any representative")]
    Unresolved,
    #[error("coset count {got} differs from index formula value {expected}")]
    BadCount { got: u64, expected: u64 },
    #[error("node budget {0} exceeded")]
    Budget(usize),
    #[error(transparent)]
    Member(#[from] group::MemberError),
}

/// A growable set of pairwise-distinct cosets g K#(p^n) with O(1) lookup.
#[derive(Clone)]
pub struct CosetSpace<R: LocalRing> {
    pub ring: R,
    pub level: u32,
    reps: Vec<Mat4<R::El>>,
    inv_reps: Vec<Mat4<R::El>>,
    index: FxMap<CosetKey, Vec<u32>>,
}

impl<R: LocalRing> CosetSpace<R> {
    /// `ring` must carry precision exactly n (callers reduce first); level-n
    /// cosets are determined by matrices mod p^n.
    pub fn new(ring: R, level: u32) -> Self {
        assert!(ring.precision() == level.max(1));
        CosetSpace {
            ring,
            level,
            reps: Vec::new(),
            inv_reps: Vec::new(),
            index: FxMap::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn rep(&self, id: u32) -> &Mat4<R::El> {
        &self.reps[id as usize]
    }

    pub fn reps(&self) -> &[Mat4<R::El>] {
        &self.reps
    }

    pub fn key(&self, g: &Mat4<R::El>) -> CosetKey {
        let r = &self.ring;
        let mut out = [0u64; 14];
        // second column mod p^n, canonical up to unit scaling
        let mut col2 = [g.at(0, 1), g.at(1, 1), g.at(2, 1), g.at(3, 1)];
        r.canon_scale(&mut col2);
        for (i, v) in col2.iter().enumerate() {
            out[i] = r.pack(*v);
        }
        let r1 = self.ring_mod_p();
        let red = |x: R::El| r1.unpack(r.pack(x));
        let c: [[R::El; 4]; 3] = [
            [red(g.at(0, 0)), red(g.at(1, 0)), red(g.at(2, 0)), red(g.at(3, 0))],
            [red(g.at(0, 1)), red(g.at(1, 1)), red(g.at(2, 1)), red(g.at(3, 1))],
            [red(g.at(0, 2)), red(g.at(1, 2)), red(g.at(2, 2)), red(g.at(3, 2))],
        ];
        // wedge^2 of columns (1,2) mod p
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let mut w2 = [r1.zero(); 6];
        for (t, (i, j)) in pairs.iter().enumerate() {
            w2[t] = r1.sub(r1.mul(c[0][*i], c[1][*j]), r1.mul(c[0][*j], c[1][*i]));
        }
        r1.canon_scale(&mut w2);
        for (i, v) in w2.iter().enumerate() {
            out[4 + i] = r1.pack(*v);
        }
        // wedge^3 of columns (1,2,3) mod p
        let triples = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];
        let mut w3 = [r1.zero(); 4];
        for (t, (i, j, k)) in triples.iter().enumerate() {
            w3[t] = det3(&r1, &c, *i, *j, *k);
        }
        r1.canon_scale(&mut w3);
        for (i, v) in w3.iter().enumerate() {
            out[10 + i] = r1.pack(*v);
        }
        CosetKey(out)
    }

    /// Resolve assuming the invariant separates cosets in this space (every
    /// bucket has one entry). Safe once `max_bucket() == 1` has been checked
    /// on a complete table: the key is right-invariant, so an element of a
    /// tabulated coset must land in its representative's bucket.
    #[inline]
    pub fn resolve_by_key(&self, key: &CosetKey) -> Option<u32> {
        self.index.get(key).map(|b| b[0])
    }

    fn ring_mod_p(&self) -> R {
        self.ring.at_precision(1)
    }

    fn same_coset(&self, id: u32, g: &Mat4<R::El>) -> bool {
        let d = group::mat_mul(&self.ring, &self.inv_reps[id as usize], g);
        group::is_member(&self.ring, &d, Pred::Ksharp(self.level.max(1)))
    }

    /// Inserts the coset of g, returning its id and whether it was new.
    pub fn insert(&mut self, g: Mat4<R::El>) -> Result<(u32, bool), CosetError> {
        let key = self.key(&g);
        if let Some(bucket) = self.index.get(&key) {
            for &id in bucket {
                if self.same_coset(id, &g) {
                    return Ok((id, false));
                }
            }
        }
        let id = self.reps.len() as u32;
        let inv = group::group_inverse(&self.ring, &g)?;
        self.reps.push(g);
        self.inv_reps.push(inv);
        self.index.entry(key).or_default().push(id);
        Ok((id, true))
    }

    /// The unique id whose representative differs from g by K#(p^n).
    pub fn resolve(&self, g: &Mat4<R::El>) -> Option<u32> {
        let key = self.key(g);
        let bucket = self.index.get(&key)?;
        bucket.iter().copied().find(|&id| self.same_coset(id, g))
    }

    /// Largest bucket size: 1 means the invariant alone separates cosets.
    pub fn max_bucket(&self) -> usize {
        self.index.values().map(Vec::len).max().unwrap_or(0)
    }
}

fn det3<R: LocalRing>(r: &R, c: &[[R::El; 4]; 3], i: usize, j: usize, k: usize) -> R::El {
    let m = |a: usize, b: usize| c[b][[i, j, k][a]];
    let t1 = r.mul(m(0, 0), r.sub(r.mul(m(1, 1), m(2, 2)), r.mul(m(1, 2), m(2, 1))));
    let t2 = r.mul(m(0, 1), r.sub(r.mul(m(1, 0), m(2, 2)), r.mul(m(1, 2), m(2, 0))));
    let t3 = r.mul(m(0, 2), r.sub(r.mul(m(1, 0), m(2, 1)), r.mul(m(1, 1), m(2, 0))));
    r.add(r.sub(t1, t2), t3)
}

// ---------------------------------------------------------------------------
// Bruhat cells and the level refinement over the base ring.
// ---------------------------------------------------------------------------

use crate::ring::ResidueRing;

/// Index of K#(p^n) in the full integral group:
/// q^{3(n-1)} (q+1)(q^4-1)/(q-1).
pub fn index_formula(q: u64, n: u32) -> u64 {
    let level1 = q.pow(4) + 2 * q.pow(3) + 2 * q.pow(2) + 2 * q + 1;
    q.pow(3 * (n - 1)) * level1
}

/// The eight Bruhat-cell families of representatives for level 1, in cell
/// order with sizes (1, q, q, q^2, q^2, q^3, q^3, q^4).
pub fn bruhat_cells(r: &ResidueRing) -> Vec<Vec<Mat4<u64>>> {
    assert!(r.k >= 1);
    let q = r.p;
    let s1 = group::s1(r);
    let s2 = group::s2(r);
    let s1s2 = group::mat_mul(r, &s1, &s2);
    let s2s1 = group::mat_mul(r, &s2, &s1);
    let s1s2s1 = group::mat_mul(r, &s1s2, &s1);
    let s2s1s2 = group::mat_mul(r, &s2s1, &s2);
    let s1s2s1s2 = group::mat_mul(r, &s1s2s1, &s2);

    let mut cells: Vec<Vec<Mat4<u64>>> = Vec::with_capacity(8);
    cells.push(vec![group::identity(r)]);

    let lower_x = |x: u64| {
        let mut m = group::identity(r);
        m.set(1, 0, x);
        m.set(2, 3, r.neg(x));
        m
    };
    cells.push((0..q).map(|x| group::mat_mul(r, &lower_x(x), &s1)).collect());

    cells.push(
        (0..q)
            .map(|x| {
                let mut m = group::identity(r);
                m.set(0, 2, x);
                group::mat_mul(r, &m, &s2)
            })
            .collect(),
    );

    let mut c4 = Vec::new();
    for x in 0..q {
        for y in 0..q {
            let mut m = group::identity(r);
            m.set(1, 0, x);
            m.set(1, 3, y);
            m.set(2, 3, r.neg(x));
            c4.push(group::mat_mul(r, &m, &s1s2));
        }
    }
    cells.push(c4);

    let mut c5 = Vec::new();
    for x in 0..q {
        for y in 0..q {
            let mut m = group::identity(r);
            m.set(0, 2, x);
            m.set(0, 3, y);
            m.set(1, 2, y);
            c5.push(group::mat_mul(r, &m, &s2s1));
        }
    }
    cells.push(c5);

    let mut c6 = Vec::new();
    for x in 0..q {
        for y in 0..q {
            for z in 0..q {
                let mut m = group::identity(r);
                m.set(0, 3, y);
                m.set(1, 0, x);
                m.set(1, 2, y);
                m.set(1, 3, r.add(r.mul(x, y), z));
                m.set(2, 3, r.neg(x));
                c6.push(group::mat_mul(r, &m, &s1s2s1));
            }
        }
    }
    cells.push(c6);

    let mut c7 = Vec::new();
    for x in 0..q {
        for y in 0..q {
            for z in 0..q {
                let mut m = group::identity(r);
                m.set(0, 2, x);
                m.set(0, 3, y);
                m.set(1, 2, y);
                m.set(1, 3, z);
                c7.push(group::mat_mul(r, &m, &s2s1s2));
            }
        }
    }
    cells.push(c7);

    let mut c8 = Vec::new();
    for w in 0..q {
        for x in 0..q {
            for y in 0..q {
                for z in 0..q {
                    let mut m = group::identity(r);
                    m.set(0, 2, x);
                    m.set(0, 3, y);
                    m.set(1, 0, w);
                    m.set(1, 2, r.add(r.mul(w, x), y));
                    m.set(1, 3, r.add(r.mul(w, y), z));
                    m.set(2, 3, r.neg(w));
                    c8.push(group::mat_mul(r, &m, &s1s2s1s2));
                }
            }
        }
    }
    cells.push(c8);
    cells
}

/// Level-n refinement factor: the pair of unipotents parametrized by
/// (w, y, z) mod p^{n-1}.
pub fn refinement(r: &ResidueRing, w: u64, y: u64, z: u64) -> Mat4<u64> {
    let wp = r.shift_up(w, 1);
    let yp = r.shift_up(y, 1);
    let zp = r.shift_up(z, 1);
    let mut a = group::identity(r);
    a.set(0, 1, wp);
    a.set(3, 2, r.neg(wp));
    let mut b = group::identity(r);
    b.set(2, 1, yp);
    b.set(3, 0, yp);
    b.set(3, 1, zp);
    group::mat_mul(r, &a, &b)
}

/// The enumerated coset table for level n, with provenance per rep.
pub struct CosetTable {
    pub q: u64,
    pub n: u32,
    pub space: CosetSpace<ResidueRing>,
}

impl CosetTable {
    /// Builds the full table from Bruhat cells times refinements. Every
    /// insertion must be fresh (pairwise disjointness) and the final count
    /// must match the index formula.
    pub fn build(q: u64, n: u32) -> Result<CosetTable, CosetError> {
        let r = ResidueRing::new(q, n.max(1));
        let mut space = CosetSpace::new(r, n);
        let cells = bruhat_cells(&r);
        let refin = q.pow(n.saturating_sub(1));
        for cell in &cells {
            for rep in cell {
                for w in 0..refin {
                    for y in 0..refin {
                        for z in 0..refin {
                            let g = group::mat_mul(&r, rep, &refinement(&r, w, y, z));
                            let (id, fresh) = space.insert(g)?;
                            if !fresh {
                                return Err(CosetError::Collision(
                                    id as usize,
                                    space.len(),
                                ));
                            }
                        }
                    }
                }
            }
        }
        let expected = index_formula(q, n);
        if space.len() as u64 != expected {
            return Err(CosetError::BadCount {
                got: space.len() as u64,
                expected,
            });
        }
        Ok(CosetTable { q, n, space })
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn resolve(&self, g: &Mat4<u64>) -> Result<u32, CosetError> {
        self.space.resolve(g).ok_or(CosetError::Unresolved)
    }

    /// Rebuilds a table from stored representatives, revalidating pairwise
    /// freshness and the index count.
    pub fn from_reps(q: u64, n: u32, reps: Vec<Mat4<u64>>) -> Result<CosetTable, CosetError> {
        let r = ResidueRing::new(q, n.max(1));
        let mut space = CosetSpace::new(r, n);
        for g in reps {
            let (id, fresh) = space.insert(g)?;
            if !fresh {
                return Err(CosetError::Collision(id as usize, space.len()));
            }
        }
        let expected = index_formula(q, n);
        if space.len() as u64 != expected {
            return Err(CosetError::BadCount {
                got: space.len() as u64,
                expected,
            });
        }
        Ok(CosetTable { q, n, space })
    }

    /// Literal all-pairs disjointness: rep_i^{-1} rep_j in K#(p^n) iff i = j.
    pub fn check_pairwise_disjoint(&self) -> Result<(), CosetError> {
        use rayon::prelude::*;
        let r = &self.space.ring;
        let n = self.n;
        let bad = (0..self.space.len()).into_par_iter().find_map_any(|i| {
            let inv_i = group::group_inverse(r, self.space.rep(i as u32)).ok()?;
            (0..self.space.len()).find_map(|j| {
                let d = group::mat_mul(r, &inv_i, self.space.rep(j as u32));
                let same = group::is_member(r, &d, Pred::Ksharp(n.max(1)));
                if same != (i == j) {
                    Some((i, j))
                } else {
                    None
                }
            })
        });
        match bad {
            None => Ok(()),
            Some((i, j)) => Err(CosetError::Collision(i, j)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{is_member, mat_mul};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bruhat_cell_sizes() {
        for q in [3u64, 5] {
            let r = ResidueRing::new(q, 1);
            let cells = bruhat_cells(&r);
            let sizes: Vec<usize> = cells.iter().map(Vec::len).collect();
            let expect: Vec<usize> = [0u32, 1, 1, 2, 2, 3, 3, 4]
                .iter()
                .map(|e| q.pow(*e) as usize)
                .collect();
            assert_eq!(sizes, expect);
            let total: usize = sizes.iter().sum();
            assert_eq!(total as u64, index_formula(q, 1));
        }
        assert_eq!(index_formula(3, 1), 160);
        assert_eq!(index_formula(5, 1), 936);
    }

    #[test]
    fn cell_one_is_identity_coset() {
        let r = ResidueRing::new(3, 1);
        let cells = bruhat_cells(&r);
        assert_eq!(cells[0][0], group::identity(&r));
    }

    #[test]
    fn table_counts() {
        assert_eq!(CosetTable::build(3, 1).unwrap().len(), 160);
        assert_eq!(CosetTable::build(3, 2).unwrap().len(), 4320);
        assert_eq!(CosetTable::build(5, 1).unwrap().len(), 936);
    }

    #[test]
    fn invariant_alone_separates_at_q3() {
        for n in 1..=2 {
            let t = CosetTable::build(3, n).unwrap();
            assert_eq!(t.space.max_bucket(), 1, "n={n}");
        }
    }

    #[test]
    fn resolve_is_right_invariant_and_total() {
        let t = CosetTable::build(3, 2).unwrap();
        let r = t.space.ring;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..2000 {
            let i = rng.gen_range(0..t.len()) as u32;
            let k = crate::group::sampling::sample_ksharp(&r, &mut rng, 2, 5);
            let g = mat_mul(&r, t.space.rep(i), &k);
            assert_eq!(t.resolve(&g).unwrap(), i);
        }
        // totality on arbitrary integral-group samples
        for _ in 0..500 {
            let g = crate::group::sampling::sample_kh(&r, &mut rng, 8);
            assert!(is_member(&r, &g, Pred::Full));
            t.resolve(&g).unwrap();
        }
    }

    #[test]
    fn s1_resolves_to_cell2_origin() {
        let t = CosetTable::build(3, 2).unwrap();
        let r = t.space.ring;
        let id = t.resolve(&group::s1(&r)).unwrap();
        // the x = 0 representative of cell 2 with trivial refinement is s1
        assert_eq!(t.space.rep(id), &group::s1(&r));
    }
}
