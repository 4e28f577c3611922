//! Exact symbolic verification of the matrix identities behind the support
//! and disjointness analysis, as identities of rational functions in
//! a, b, c, w, x, y, z, u, delta, the uniformizer, and the torus generator.
//!
//! Internally the generator is tracked as A = c*alpha, which satisfies the
//! monic relation A^2 = b A - c a and has conjugate b - A. Multiplication
//! therefore never introduces denominators; denominators occur only where a
//! formula explicitly divides by a declared unit, and each such unit is an
//! atom in a per-identity ledger. Exponents (n, l, m, j) are instantiated
//! numerically over a grid while the coefficients stay symbolic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

pub const NVARS: usize = 10;

/// Variable order: a, b, c, w, y, z, u, delta, pi (uniformizer), A (= c*alpha).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    A = 0,
    B = 1,
    C = 2,
    W = 3,
    Y = 4,
    Z = 5,
    U = 6,
    Delta = 7,
    Pi = 8,
    Gen = 9,
}

pub type Mono = [i16; NVARS];

/// Sparse multivariate Laurent polynomial (only the uniformizer may carry
/// negative exponents, and only transiently during conjugation by h(l,m)).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Mono, BigRational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant(r: BigRational) -> Poly {
        let mut p = Poly::zero();
        if !r.is_zero() {
            p.terms.insert([0; NVARS], r);
        }
        p
    }

    pub fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    pub fn int(v: i64) -> Poly {
        Poly::constant(BigRational::from(BigInt::from(v)))
    }

    pub fn var(v: Var) -> Poly {
        let mut m = [0i16; NVARS];
        m[v as usize] = 1;
        let mut p = Poly::zero();
        p.terms.insert(m, BigRational::one());
        p
    }

    pub fn monomial(pairs: &[(Var, i16)], coef: i64) -> Poly {
        let mut m = [0i16; NVARS];
        for (v, e) in pairs {
            m[*v as usize] += e;
        }
        let mut p = Poly::zero();
        if coef != 0 {
            p.terms.insert(m, BigRational::from(BigInt::from(coef)));
        }
        p
    }

    fn insert(&mut self, m: Mono, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let s = e.get() + c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.insert(*m, c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -c.clone();
        }
        out
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    /// Raw product treating the generator as a free variable.
    fn mul_raw(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let mut m = *m1;
                for i in 0..NVARS {
                    m[i] += m2[i];
                }
                out.insert(m, c1 * c2);
            }
        }
        out
    }

    fn split_gen(&self) -> (Poly, Poly, Poly) {
        // degree 0, 1, >=2 parts in the generator
        let mut d0 = Poly::zero();
        let mut d1 = Poly::zero();
        let mut d2 = Poly::zero();
        for (m, c) in &self.terms {
            let e = m[Var::Gen as usize];
            let mut mm = *m;
            match e {
                0 => d0.insert(mm, c.clone()),
                1 => {
                    mm[Var::Gen as usize] = 0;
                    d1.insert(mm, c.clone());
                }
                _ => d2.insert(mm, c.clone()),
            }
        }
        (d0, d1, d2)
    }

    /// Product reduced by A^2 = b A - c a. Inputs of generator-degree <= 1
    /// give reduced outputs; higher intermediate degrees are rewritten
    /// recursively.
    pub fn mul(&self, o: &Poly) -> Poly {
        reduce_gen(self.mul_raw(o))
    }

    pub fn scale(&self, r: &BigRational) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.insert(*m, c * r);
        }
        out
    }

    pub fn mul_mono(&self, pairs: &[(Var, i16)]) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut mm = *m;
            for (v, e) in pairs {
                mm[*v as usize] += e;
            }
            out.insert(mm, c.clone());
        }
        out
    }

    /// Conjugation: A -> b - A (an involutive ring map fixing all other
    /// variables).
    pub fn conj(&self) -> Poly {
        let (d0, d1, d2) = self.split_gen();
        assert!(d2.is_zero(), "conj expects a reduced polynomial");
        d0.add(&d1.mul_raw(&Poly::var(Var::B).sub(&Poly::var(Var::Gen))))
    }

    /// Minimum uniformizer exponent over all terms; None for the zero
    /// polynomial (infinite valuation).
    pub fn pi_valuation(&self) -> Option<i16> {
        self.terms.keys().map(|m| m[Var::Pi as usize]).min()
    }

    /// True if every term has a nonnegative uniformizer exponent.
    pub fn is_pi_integral(&self) -> bool {
        self.pi_valuation().map_or(true, |v| v >= 0)
    }
}

fn reduce_gen(p: Poly) -> Poly {
    let (d0, d1, d2) = p.split_gen();
    if d2.is_zero() {
        return d0.add(&d1.mul_mono(&[(Var::Gen, 1)]));
    }
    // A^e = A^{e-2} (b A - c a)
    let mut lowered = Poly::zero();
    for (m, c) in &d2.terms {
        let mut base = *m;
        base[Var::Gen as usize] -= 2;
        let mut t = Poly::zero();
        t.insert(base, c.clone());
        let rel = Poly::monomial(&[(Var::B, 1), (Var::Gen, 1)], 1)
            .sub(&Poly::monomial(&[(Var::C, 1), (Var::A, 1)], 1));
        lowered = lowered.add(&t.mul_raw(&rel));
    }
    reduce_gen(d0.add(&d1.mul_mono(&[(Var::Gen, 1)])).add(&lowered))
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let names = ["a", "b", "c", "w", "y", "z", "u", "d", "pi", "A"];
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, e) in m.iter().enumerate() {
                if *e != 0 {
                    write!(f, "*{}^{}", names[i], e)?;
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Expressions with declared-unit denominators.
// ---------------------------------------------------------------------------

/// A ledger of declared units; every denominator in an identity must be one
/// of these atoms (this is the unit-denominator discipline the verifier
/// enforces structurally).
#[derive(Debug, Clone, Default)]
pub struct Ledger {
    pub atoms: Vec<(String, Poly)>,
}

impl Ledger {
    pub fn declare(&mut self, name: &str, p: Poly) -> usize {
        if let Some(i) = self.atoms.iter().position(|(_, q)| q == &p) {
            return i;
        }
        self.atoms.push((name.to_string(), p));
        self.atoms.len() - 1
    }

    pub fn poly(&self, id: usize) -> &Poly {
        &self.atoms[id].1
    }

    pub fn names(&self) -> Vec<String> {
        self.atoms.iter().map(|(n, _)| n.clone()).collect()
    }
}

type Den = BTreeMap<usize, u32>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub num: Poly,
    pub den: Den,
}

impl Expr {
    pub fn zero() -> Expr {
        Expr {
            num: Poly::zero(),
            den: Den::new(),
        }
    }

    pub fn from_poly(p: Poly) -> Expr {
        Expr {
            num: p,
            den: Den::new(),
        }
    }

    pub fn one() -> Expr {
        Expr::from_poly(Poly::one())
    }

    pub fn over_atom(p: Poly, atom: usize) -> Expr {
        let mut den = Den::new();
        den.insert(atom, 1);
        Expr { num: p, den }
    }

    fn den_expand(den: &Den, ledger: &Ledger) -> Poly {
        let mut p = Poly::one();
        for (id, mult) in den {
            for _ in 0..*mult {
                p = p.mul(ledger.poly(*id));
            }
        }
        p
    }

    pub fn add(&self, o: &Expr, ledger: &Ledger) -> Expr {
        let mut lcm = self.den.clone();
        for (id, m) in &o.den {
            let e = lcm.entry(*id).or_insert(0);
            *e = (*e).max(*m);
        }
        let diff = |d: &Den| -> Den {
            lcm.iter()
                .filter_map(|(id, m)| {
                    let have = d.get(id).copied().unwrap_or(0);
                    if *m > have {
                        Some((*id, m - have))
                    } else {
                        None
                    }
                })
                .collect()
        };
        let n1 = self.num.mul(&Expr::den_expand(&diff(&self.den), ledger));
        let n2 = o.num.mul(&Expr::den_expand(&diff(&o.den), ledger));
        Expr {
            num: n1.add(&n2),
            den: lcm,
        }
    }

    pub fn sub(&self, o: &Expr, ledger: &Ledger) -> Expr {
        self.add(&o.neg(), ledger)
    }

    pub fn neg(&self) -> Expr {
        Expr {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, o: &Expr) -> Expr {
        let mut den = self.den.clone();
        for (id, m) in &o.den {
            *den.entry(*id).or_insert(0) += m;
        }
        Expr {
            num: self.num.mul(&o.num),
            den,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Valuation lower bound in the uniformizer (denominators are units).
    pub fn pi_valuation(&self) -> Option<i16> {
        self.num.pi_valuation()
    }

    pub fn conj(&self, ledger: &mut Ledger) -> Expr {
        let mut den = Den::new();
        for (id, m) in &self.den {
            let (name, p) = ledger.atoms[*id].clone();
            let pc = p.conj();
            let cid = if pc == p {
                *id
            } else {
                ledger.declare(&format!("{name}~"), pc)
            };
            *den.entry(cid).or_insert(0) += m;
        }
        Expr {
            num: self.num.conj(),
            den,
        }
    }
}

// ---------------------------------------------------------------------------
// Expression matrices.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct EMat(pub Vec<Expr>);

impl EMat {
    pub fn zero() -> EMat {
        EMat(vec![Expr::zero(); 16])
    }

    pub fn identity() -> EMat {
        let mut m = EMat::zero();
        for i in 0..4 {
            m.0[5 * i] = Expr::one();
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> &Expr {
        &self.0[4 * i + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.0[4 * i + j] = e;
    }

    pub fn mul(&self, o: &EMat, ledger: &Ledger) -> EMat {
        let mut out = EMat::zero();
        for i in 0..4 {
            for j in 0..4 {
                let mut s = Expr::zero();
                for t in 0..4 {
                    s = s.add(&self.at(i, t).mul(o.at(t, j)), ledger);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    pub fn sub(&self, o: &EMat, ledger: &Ledger) -> EMat {
        let mut out = EMat::zero();
        for i in 0..16 {
            out.0[i] = self.0[i].sub(&o.0[i], ledger);
        }
        out
    }

    pub fn conj(&self, ledger: &mut Ledger) -> EMat {
        EMat(self.0.iter().map(|e| e.conj(ledger)).collect())
    }

    pub fn transpose(&self) -> EMat {
        let mut out = EMat::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.set(i, j, self.at(j, i).clone());
            }
        }
        out
    }

    /// Conjugation by h(l,m): entry (i,j) is scaled by pi^{e_j - e_i} with
    /// e = (2m+l, m+l, 0, m).
    pub fn conj_h(&self, l: i16, m: i16) -> EMat {
        let e = [2 * m + l, m + l, 0, m];
        let mut out = self.clone();
        for i in 0..4 {
            for j in 0..4 {
                let cur = out.at(i, j).clone();
                out.set(
                    i,
                    j,
                    Expr {
                        num: cur.num.mul_mono(&[(Var::Pi, e[j] - e[i])]),
                        den: cur.den,
                    },
                );
            }
        }
        out
    }
}

/// Product of a list of factor matrices.
pub fn product(factors: &[EMat], ledger: &Ledger) -> EMat {
    let mut acc = EMat::identity();
    for f in factors {
        acc = acc.mul(f, ledger);
    }
    acc
}

/// Symbolic similitude data: returns mu with conj(g)^t J g = mu J, or the
/// first offending entry.
pub fn similitude(g: &EMat, ledger: &mut Ledger) -> Result<Expr, (usize, usize)> {
    let gc = g.conj(ledger).transpose();
    let mut j = EMat::zero();
    j.set(0, 2, Expr::one());
    j.set(1, 3, Expr::one());
    j.set(2, 0, Expr::one().neg());
    j.set(3, 1, Expr::one().neg());
    let m = gc.mul(&j.mul(g, ledger), ledger);
    let mu = m.at(0, 2).clone();
    for r in 0..4 {
        for c in 0..4 {
            let want = mu.mul(j.at(r, c));
            if !m.at(r, c).sub(&want, ledger).is_zero() {
                return Err((r, c));
            }
        }
    }
    Ok(mu)
}

// ---------------------------------------------------------------------------
// Identity catalog.
// ---------------------------------------------------------------------------

/// One grid-instantiated identity: a product equality lhs = rhs where the
/// final rhs factor must land in the K#(P^n) congruence pattern.
pub struct Identity {
    pub name: String,
    pub params: (u32, u32, u32),
    pub lhs: Vec<EMat>,
    pub rhs: Vec<EMat>,
    /// Level of the residual pattern check (applied to the last rhs factor);
    /// None skips the pattern stage (pure commutation identities).
    pub residual_level: Option<u32>,
    pub ledger: Ledger,
    /// Variables that may appear in unit positions (beyond ledger atoms).
    pub unit_vars: Vec<Var>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityReport {
    pub name: String,
    pub params: (u32, u32, u32),
    pub equality: bool,
    pub similitude_ok: bool,
    pub pattern_ok: bool,
    pub diag_units_ok: bool,
    pub denominators: Vec<String>,
}

impl IdentityReport {
    pub fn pass(&self) -> bool {
        self.equality && self.similitude_ok && self.pattern_ok && self.diag_units_ok
    }
}

fn var(v: Var) -> Expr {
    Expr::from_poly(Poly::var(v))
}

fn mono(pairs: &[(Var, i16)], coef: i64) -> Expr {
    Expr::from_poly(Poly::monomial(pairs, coef))
}

/// alpha = A / c.
fn alpha_expr(c_atom: usize) -> Expr {
    Expr::over_atom(Poly::var(Var::Gen), c_atom)
}

/// conj(alpha) = (b - A)/c.
fn alpha_bar_expr(c_atom: usize) -> Expr {
    Expr::over_atom(Poly::var(Var::B).sub(&Poly::var(Var::Gen)), c_atom)
}

fn weyl_s1() -> EMat {
    let mut m = EMat::zero();
    m.set(0, 1, Expr::one());
    m.set(1, 0, Expr::one());
    m.set(2, 3, Expr::one());
    m.set(3, 2, Expr::one());
    m
}

fn weyl_s2() -> EMat {
    let mut m = EMat::zero();
    m.set(0, 2, Expr::one());
    m.set(1, 1, Expr::one());
    m.set(2, 0, Expr::one().neg());
    m.set(3, 3, Expr::one());
    m
}

fn weyl_s1s2s1() -> EMat {
    let mut m = EMat::zero();
    m.set(0, 0, Expr::one());
    m.set(1, 3, Expr::one());
    m.set(2, 2, Expr::one());
    m.set(3, 1, Expr::one().neg());
    m
}

/// eta_m with entries alpha pi^m and -conj(alpha) pi^m.
fn eta_m_mat(m: i16, c_atom: usize) -> EMat {
    let mut g = EMat::identity();
    let al = alpha_expr(c_atom);
    let alb = alpha_bar_expr(c_atom);
    g.set(
        1,
        0,
        Expr {
            num: al.num.mul_mono(&[(Var::Pi, m)]),
            den: al.den,
        },
    );
    g.set(
        2,
        3,
        Expr {
            num: alb.num.mul_mono(&[(Var::Pi, m)]).neg(),
            den: alb.den,
        },
    );
    g
}

/// Block embedding of t = [[t11,t12],[t21,t22]]: diag(t, det(t) (t^t)^{-1}).
fn embed_t(t: [Expr; 4], ledger: &Ledger) -> EMat {
    let _ = ledger;
    let mut g = EMat::zero();
    g.set(0, 0, t[0].clone());
    g.set(0, 1, t[1].clone());
    g.set(1, 0, t[2].clone());
    g.set(1, 1, t[3].clone());
    g.set(2, 2, t[3].clone());
    g.set(2, 3, t[2].clone().neg());
    g.set(3, 2, t[1].clone().neg());
    g.set(3, 3, t[0].clone());
    g
}

/// Upper (1,2)-unipotent with parameter expression x at (1,2), -x at (4,3).
fn upper12(x: Expr) -> EMat {
    let mut m = EMat::identity();
    m.set(0, 1, x.clone());
    m.set(3, 2, x.neg());
    m
}

/// Lower GL2-block unipotent with w at (2,1), -w at (3,4).
fn lower_block(w: Expr) -> EMat {
    let mut m = EMat::identity();
    m.set(1, 0, w.clone());
    m.set(2, 3, w.neg());
    m
}

/// A(z): z*pi at (4,2).
fn a_z_mat(z: Expr) -> EMat {
    let mut m = EMat::identity();
    m.set(
        3,
        1,
        Expr {
            num: z.num.mul_mono(&[(Var::Pi, 1)]),
            den: z.den,
        },
    );
    m
}

fn pi_pow_expr(e: &Expr, k: i16) -> Expr {
    Expr {
        num: e.num.mul_mono(&[(Var::Pi, k)]),
        den: e.den.clone(),
    }
}

/// Substituted z-parameter carrying its mandatory pi-power:
/// z pi^{max(n-m-1,0)}.
fn z_slot(n: u32, m: u32) -> Expr {
    let e = (n as i64 - m as i64 - 1).max(0) as i16;
    mono(&[(Var::Z, 1), (Var::Pi, e)], 1)
}

fn y_slot(n: u32, m: u32) -> Expr {
    let e = (n as i64 - m as i64 - 1).max(0) as i16;
    mono(&[(Var::Y, 1), (Var::Pi, e)], 1)
}

/// The commutation eta h(l,m) = h(l,m) eta_m. Verified as the equality of
/// eta_m-conjugates: conj_h applied to eta equals eta_m.
pub fn identity_eta(l: u32, m: u32) -> Identity {
    let mut ledger = Ledger::default();
    let c_atom = ledger.declare("c", Poly::var(Var::C));
    let lhs = vec![eta_m_mat(0, c_atom).conj_h(l as i16, m as i16)];
    let rhs = vec![eta_m_mat(m as i16, c_atom)];
    Identity {
        name: "eta-commutation".into(),
        params: (0, l, m),
        lhs,
        rhs,
        residual_level: None,
        ledger,
        unit_vars: vec![Var::C],
    }
}

/// Case-1 factorization: eta_m r = m~ n~ k with a = 1 + pi^{m+1} alpha w.
pub fn identity_t1(n: u32, m: u32) -> Identity {
    let mut ledger = Ledger::default();
    let c_atom = ledger.declare("c", Poly::var(Var::C));
    // a = aP / c with aP = c + pi^{m+1} w A
    let a_p = Poly::var(Var::C).add(&Poly::monomial(
        &[(Var::Pi, m as i16 + 1), (Var::W, 1), (Var::Gen, 1)],
        1,
    ));
    let a_atom = ledger.declare("a", a_p.clone());
    let ab_p = a_p.conj();
    let ab_atom = ledger.declare("a~", ab_p.clone());

    let z = z_slot(n, m);
    let r1 = upper12(mono(&[(Var::W, 1), (Var::Pi, 1)], 1));
    let mut r2 = EMat::identity();
    r2.set(3, 1, pi_pow_expr(&z, 1));
    let lhs = vec![eta_m_mat(m as i16, c_atom), r1, r2];

    let a = Expr::over_atom(a_p.clone(), c_atom);
    let a_inv = Expr::over_atom(Poly::var(Var::C), a_atom);
    let ab = Expr::over_atom(ab_p.clone(), c_atom);
    let ab_inv = Expr::over_atom(Poly::var(Var::C), ab_atom);

    let mut mt = EMat::zero();
    mt.set(0, 0, a_inv.clone());
    mt.set(1, 1, a.clone());
    mt.set(2, 2, ab.clone());
    mt.set(3, 1, pi_pow_expr(&z.mul(&ab_inv), 1));
    mt.set(3, 3, ab_inv.clone());

    // n~ carries a at (1,2) but the conjugate a~ at (4,3)
    let mut nt = EMat::identity();
    nt.set(0, 1, pi_pow_expr(&var(Var::W).mul(&a), 1));
    nt.set(3, 2, pi_pow_expr(&var(Var::W).mul(&ab), 1).neg());

    let alpha = alpha_expr(c_atom);
    let alpha_b = alpha_bar_expr(c_atom);
    let mut k = EMat::identity();
    k.set(1, 0, pi_pow_expr(&alpha.mul(&a_inv), m as i16));
    k.set(
        2,
        1,
        pi_pow_expr(&alpha_b.mul(&z).mul(&ab_inv), m as i16 + 1).neg(),
    );
    k.set(2, 3, pi_pow_expr(&alpha_b.mul(&ab_inv), m as i16).neg());
    k.set(
        3,
        0,
        pi_pow_expr(&alpha.mul(&z).mul(&a_inv), m as i16 + 1).neg(),
    );

    Identity {
        name: "case1-factorization".into(),
        params: (n, 0, m),
        lhs,
        rhs: vec![mt, nt, k],
        residual_level: Some(n),
        ledger,
        unit_vars: vec![Var::C],
    }
}

/// Case-2 factorization with beta = pi^m alpha + w.
pub fn identity_t2(n: u32, m: u32) -> Identity {
    let mut ledger = Ledger::default();
    let c_atom = ledger.declare("c", Poly::var(Var::C));
    // beta = bP / c with bP = pi^m A + c w
    let b_p = Poly::monomial(&[(Var::Pi, m as i16), (Var::Gen, 1)], 1)
        .add(&Poly::monomial(&[(Var::C, 1), (Var::W, 1)], 1));
    let b_atom = ledger.declare("beta", b_p.clone());
    let bb_p = b_p.conj();
    let bb_atom = ledger.declare("beta~", bb_p.clone());

    let y = y_slot(n, m);
    let r1 = lower_block(var(Var::W));
    let mut r2 = EMat::identity();
    r2.set(2, 0, pi_pow_expr(&var(Var::W).mul(&y), 1));
    r2.set(2, 1, pi_pow_expr(&y, 1));
    r2.set(3, 0, pi_pow_expr(&y, 1));
    let lhs = vec![eta_m_mat(m as i16, c_atom), r1, r2, weyl_s1()];

    let beta = Expr::over_atom(b_p.clone(), c_atom);
    let beta_inv = Expr::over_atom(Poly::var(Var::C), b_atom);
    let betab = Expr::over_atom(bb_p.clone(), c_atom);
    let betab_inv = Expr::over_atom(Poly::var(Var::C), bb_atom);

    let mut mt = EMat::zero();
    mt.set(0, 0, beta_inv.clone().neg());
    mt.set(1, 1, beta.clone());
    mt.set(2, 2, betab.clone().neg());
    mt.set(3, 1, pi_pow_expr(&var(Var::W).mul(&y).mul(&betab_inv), 1));
    mt.set(3, 3, betab_inv.clone());

    let mut nt = EMat::identity();
    nt.set(0, 1, beta.clone().neg());
    nt.set(3, 2, betab.clone());

    let alpha = alpha_expr(c_atom);
    let alpha_b = alpha_bar_expr(c_atom);
    let mut k = EMat::identity();
    k.set(1, 0, beta_inv.clone());
    k.set(2, 0, pi_pow_expr(&y.mul(&betab_inv), 1).neg());
    k.set(
        2,
        1,
        pi_pow_expr(&alpha_b.mul(&y).mul(&betab_inv), m as i16 + 1),
    );
    k.set(2, 3, betab_inv.clone().neg());
    k.set(3, 0, pi_pow_expr(&alpha.mul(&y).mul(&beta_inv), m as i16 + 1));

    Identity {
        name: "case2-factorization".into(),
        params: (n, 0, m),
        lhs,
        rhs: vec![mt, nt, k],
        residual_level: Some(n),
        ledger,
        unit_vars: if m > 0 { vec![Var::C, Var::W] } else { vec![Var::C] },
    }
}

/// Case-6 factorization, m >= n, w = 0.
pub fn identity_t6(n: u32, m: u32) -> Identity {
    assert!(m >= n);
    let mut ledger = Ledger::default();
    let c_atom = ledger.declare("c", Poly::var(Var::C));
    let lhs = vec![eta_m_mat(m as i16, c_atom), weyl_s1s2s1()];
    let alpha = alpha_expr(c_atom);
    let alpha_b = alpha_bar_expr(c_atom);
    let mut k = EMat::identity();
    k.set(2, 1, pi_pow_expr(&alpha_b, m as i16));
    k.set(3, 0, pi_pow_expr(&alpha, m as i16));
    Identity {
        name: "case6-factorization".into(),
        params: (n, 0, m),
        lhs,
        rhs: vec![weyl_s1s2s1(), k],
        residual_level: Some(n),
        ledger,
        unit_vars: vec![Var::C],
    }
}

/// m = 0 merge of the case-1 double cosets into the identity coset.
pub fn identity_m0a(n: u32, l: u32) -> Identity {
    let mut ledger = Ledger::default();
    let _c_atom = ledger.declare("c", Poly::var(Var::C));
    // beta = c + b pi w + a pi^2 w^2
    let beta_p = Poly::var(Var::C)
        .add(&Poly::monomial(&[(Var::B, 1), (Var::Pi, 1), (Var::W, 1)], 1))
        .add(&Poly::monomial(&[(Var::A, 1), (Var::Pi, 2), (Var::W, 2)], 1));
    let _beta = ledger.declare("beta", beta_p.clone());
    // t(x, y) with y = pi w, x = c + y b / 2
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let yb2 = Poly::monomial(&[(Var::B, 1), (Var::Pi, 1), (Var::W, 1)], 1).scale(&half);
    let x = Poly::var(Var::C).add(&yb2);
    let t11 = Expr::from_poly(x.add(&yb2));
    let t12 = Expr::from_poly(Poly::monomial(&[(Var::Pi, 1), (Var::W, 1), (Var::C, 1)], 1));
    let t21 = Expr::from_poly(Poly::monomial(&[(Var::Pi, 1), (Var::W, 1), (Var::A, 1)], 1).neg());
    let t22 = Expr::from_poly(x.sub(&yb2));
    let emb = embed_t([t11, t12, t21, t22], &ledger).conj_h(l as i16, 0);

    let rhs1 = upper12(mono(&[(Var::W, 1), (Var::Pi, 1)], 1));
    let mut k = EMat::zero();
    k.set(0, 0, Expr::from_poly(beta_p.clone()));
    k.set(1, 0, Expr::from_poly(Poly::monomial(&[(Var::A, 1), (Var::Pi, 1), (Var::W, 1)], -1)));
    k.set(1, 1, var(Var::C));
    k.set(2, 2, var(Var::C));
    k.set(2, 3, Expr::from_poly(Poly::monomial(&[(Var::A, 1), (Var::Pi, 1), (Var::W, 1)], 1)));
    k.set(3, 3, Expr::from_poly(beta_p));

    Identity {
        name: "m0-case1-merge".into(),
        params: (n, l, 0),
        lhs: vec![emb],
        rhs: vec![rhs1, k],
        residual_level: Some(n),
        ledger,
        unit_vars: vec![Var::C],
    }
}

/// m = 0 merge of the case-2 cosets, including the scalar identity
/// a + bw + cw^2 = -c (alpha + w)(alpha - (w + b/c)).
pub fn identity_m0b(n: u32, l: u32) -> Identity {
    let mut ledger = Ledger::default();
    let _c_atom = ledger.declare("c", Poly::var(Var::C));
    let beta_p = Poly::var(Var::A)
        .add(&Poly::monomial(&[(Var::B, 1), (Var::W, 1)], 1))
        .add(&Poly::monomial(&[(Var::C, 1), (Var::W, 2)], 1));
    let _beta = ledger.declare("beta", beta_p.clone());
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    // t(x, y): y = 1, x = -(cw + b/2)
    let x = Poly::monomial(&[(Var::C, 1), (Var::W, 1)], -1)
        .add(&Poly::var(Var::B).scale(&half).neg());
    let yb2 = Poly::var(Var::B).scale(&half);
    let t11 = Expr::from_poly(x.add(&yb2));
    let t12 = var(Var::C);
    let t21 = var(Var::A).neg();
    let t22 = Expr::from_poly(x.sub(&yb2));
    let emb = embed_t([t11, t12, t21, t22], &ledger).conj_h(l as i16, 0);

    let lhs = vec![emb, lower_block(var(Var::W)), weyl_s1()];
    let mut k = EMat::zero();
    let b_plus_cw = Poly::var(Var::B).add(&Poly::monomial(&[(Var::C, 1), (Var::W, 1)], 1));
    k.set(0, 0, var(Var::C));
    k.set(1, 0, Expr::from_poly(b_plus_cw.neg()));
    k.set(1, 1, Expr::from_poly(beta_p.neg()));
    k.set(2, 2, Expr::from_poly(beta_p.clone()));
    k.set(2, 3, Expr::from_poly(b_plus_cw.neg()));
    k.set(3, 3, var(Var::C).neg());

    Identity {
        name: "m0-case2-merge".into(),
        params: (n, l, 0),
        lhs,
        rhs: vec![k],
        residual_level: Some(n),
        ledger,
        unit_vars: vec![Var::C],
    }
}

/// The scalar unit identity behind the m=0 case-2 merge:
/// a + bw + cw^2 + c (alpha + w)(alpha - w - b/c) = 0.
pub fn m0b_scalar_identity_holds() -> bool {
    let mut ledger = Ledger::default();
    let c_atom = ledger.declare("c", Poly::var(Var::C));
    let alpha = alpha_expr(c_atom);
    let lhs = Expr::from_poly(
        Poly::var(Var::A)
            .add(&Poly::monomial(&[(Var::B, 1), (Var::W, 1)], 1))
            .add(&Poly::monomial(&[(Var::C, 1), (Var::W, 2)], 1)),
    );
    let f1 = alpha.add(&var(Var::W), &ledger);
    let f2 = alpha
        .sub(&var(Var::W), &ledger)
        .sub(&Expr::over_atom(Poly::var(Var::B), c_atom), &ledger);
    // lhs equals -c f1 f2, i.e. lhs + c f1 f2 = 0
    let rhs = var(Var::C).mul(&f1).mul(&f2);
    lhs.add(&rhs, &ledger).is_zero()
}

/// m > 0 merge of the case-2 cosets to w = 1 (the kappa identity).
pub fn identity_kap(n: u32, m: u32) -> Identity {
    assert!(m >= 1);
    let mut ledger = Ledger::default();
    let _c_atom = ledger.declare("c", Poly::var(Var::C));
    let w_atom = ledger.declare("w", Poly::var(Var::W));
    let mi = m as i16;
    let beta_of = |wpow: u32| -> Poly {
        // a pi^{2m} + b pi^m w^e + c w^{2e} patterns
        match wpow {
            0 => Poly::monomial(&[(Var::A, 1), (Var::Pi, 2 * mi)], 1)
                .add(&Poly::monomial(&[(Var::B, 1), (Var::Pi, mi)], 1))
                .add(&Poly::var(Var::C)),
            1 => Poly::monomial(&[(Var::A, 1), (Var::Pi, 2 * mi)], 1)
                .add(&Poly::monomial(&[(Var::B, 1), (Var::Pi, mi)], 1))
                .add(&Poly::monomial(&[(Var::C, 1), (Var::W, 1)], 1)),
            _ => Poly::monomial(&[(Var::A, 1), (Var::Pi, 2 * mi)], 1)
                .add(&Poly::monomial(&[(Var::B, 1), (Var::Pi, mi), (Var::W, 1)], 1))
                .add(&Poly::monomial(&[(Var::C, 1), (Var::W, 2)], 1)),
        }
    };
    let b1 = beta_of(0);
    let b2 = beta_of(1);
    let b3 = beta_of(2);
    let b1_atom = ledger.declare("beta1", b1.clone());
    let _ = b1_atom;
    let b3_atom = ledger.declare("beta3", b3.clone());

    // t entries: x + by/2 = beta2/beta3, y c = pi^m c (1-w)/beta3,
    // -y a = -pi^m a (1-w)/beta3, x - by/2 = (beta2 - b pi^m (1-w))/beta3.
    let one_minus_w = Poly::one().sub(&Poly::var(Var::W));
    let t11 = Expr::over_atom(b2.clone(), b3_atom);
    let t12 = Expr::over_atom(
        Poly::monomial(&[(Var::C, 1), (Var::Pi, mi)], 1).mul(&one_minus_w),
        b3_atom,
    );
    let t21 = Expr::over_atom(
        Poly::monomial(&[(Var::A, 1), (Var::Pi, mi)], 1).mul(&one_minus_w).neg(),
        b3_atom,
    );
    let t22 = Expr::over_atom(
        b2.sub(&Poly::monomial(&[(Var::B, 1), (Var::Pi, mi)], 1).mul(&one_minus_w)),
        b3_atom,
    );
    let emb = embed_t([t11, t12, t21, t22], &ledger).conj_h(0, mi);

    let z = z_slot(n, m);
    let z_over_w = Expr {
        num: z.num.clone(),
        den: {
            let mut d = Den::new();
            d.insert(w_atom, 1);
            d
        },
    };
    let mut mid = EMat::identity();
    mid.set(2, 0, pi_pow_expr(&z_over_w, 1));
    mid.set(2, 1, pi_pow_expr(&z_over_w, 1));
    mid.set(3, 0, pi_pow_expr(&z_over_w, 1));
    let lhs = vec![emb, lower_block(Expr::one()), mid, weyl_s1()];

    let mut rhs_mid = EMat::identity();
    rhs_mid.set(2, 0, pi_pow_expr(&z.mul(&var(Var::W)), 1));
    rhs_mid.set(2, 1, pi_pow_expr(&z, 1));
    rhs_mid.set(3, 0, pi_pow_expr(&z, 1));

    // kappa
    let wb3 = |p: Poly| -> Expr {
        let mut d = Den::new();
        d.insert(w_atom, 1);
        d.insert(b3_atom, 1);
        Expr { num: p, den: d }
    };
    let over_b3 = |p: Poly| Expr::over_atom(p, b3_atom);
    let w2_minus_1 = Poly::monomial(&[(Var::W, 2)], 1).sub(&Poly::one());
    let w_minus_1 = Poly::var(Var::W).sub(&Poly::one());
    let b_plus_api = Poly::var(Var::B).add(&Poly::monomial(&[(Var::A, 1), (Var::Pi, mi)], 1));
    let bw_plus_api = Poly::monomial(&[(Var::B, 1), (Var::W, 1)], 1)
        .add(&Poly::monomial(&[(Var::A, 1), (Var::Pi, mi)], 1));
    let bw_plus_api1w = Poly::monomial(&[(Var::B, 1), (Var::W, 1)], 1).add(
        &Poly::monomial(&[(Var::A, 1), (Var::Pi, mi)], 1)
            .mul(&Poly::one().add(&Poly::var(Var::W))),
    );
    let mut kappa = EMat::identity();
    kappa.set(1, 0, over_b3(Poly::var(Var::C).mul(&one_minus_w)));
    kappa.set(1, 1, over_b3(b1.clone()));
    kappa.set(
        2,
        0,
        wb3(Poly::var(Var::C).mul(&w2_minus_1).mul(&z.num).mul_mono(&[(Var::Pi, 1)])),
    );
    kappa.set(
        2,
        1,
        wb3(w_minus_1
            .mul(&b_plus_api)
            .mul(&z.num)
            .mul_mono(&[(Var::Pi, mi + 1)])
            .neg()),
    );
    kappa.set(2, 2, over_b3(b1.clone()));
    kappa.set(2, 3, over_b3(Poly::var(Var::C).mul(&w_minus_1)));
    kappa.set(
        3,
        0,
        wb3(w_minus_1
            .mul(&bw_plus_api)
            .mul(&z.num)
            .mul_mono(&[(Var::Pi, mi + 1)])
            .neg()),
    );
    kappa.set(
        3,
        1,
        wb3(w_minus_1
            .mul(&bw_plus_api1w)
            .mul(&z.num)
            .mul_mono(&[(Var::Pi, mi + 1)])
            .neg()),
    );

    Identity {
        name: "kappa-merge".into(),
        params: (n, 0, m),
        lhs,
        rhs: vec![lower_block(var(Var::W)), rhs_mid, weyl_s1(), kappa],
        residual_level: Some(n),
        ledger,
        unit_vars: vec![Var::C, Var::W],
    }
}

/// Case-1 w-absorption (the kappa_1 identity).
pub fn identity_kap1(n: u32, m: u32) -> Identity {
    let mut ledger = Ledger::default();
    let _c_atom = ledger.declare("c", Poly::var(Var::C));
    let mi = m as i16;
    // beta = c + b pi^{m+1} w + a pi^{2m+2} w^2
    let beta_p = Poly::var(Var::C)
        .add(&Poly::monomial(&[(Var::B, 1), (Var::Pi, mi + 1), (Var::W, 1)], 1))
        .add(&Poly::monomial(&[(Var::A, 1), (Var::Pi, 2 * mi + 2), (Var::W, 2)], 1));
    let b_atom = ledger.declare("beta", beta_p.clone());
    let over_b = |p: Poly| Expr::over_atom(p, b_atom);

    // t entries: x1 + b y1/2 = (c + b pi^{m+1} w)/beta, y1 c = pi^{m+1} w c/beta,
    // -y1 a, x1 - b y1/2 = c/beta.
    let t11 = over_b(
        Poly::var(Var::C).add(&Poly::monomial(&[(Var::B, 1), (Var::Pi, mi + 1), (Var::W, 1)], 1)),
    );
    let t12 = over_b(Poly::monomial(&[(Var::Pi, mi + 1), (Var::W, 1), (Var::C, 1)], 1));
    let t21 = over_b(Poly::monomial(&[(Var::Pi, mi + 1), (Var::W, 1), (Var::A, 1)], -1));
    let t22 = over_b(Poly::var(Var::C));
    let emb = embed_t([t11, t12, t21, t22], &ledger).conj_h(0, mi);

    let z = z_slot(n, m);
    let lhs = vec![emb, a_z_mat(z.clone())];
    let rhs1 = upper12(mono(&[(Var::W, 1), (Var::Pi, 1)], 1));

    let mut kappa = EMat::identity();
    kappa.set(1, 0, over_b(Poly::monomial(&[(Var::A, 1), (Var::Pi, 2 * mi + 1), (Var::W, 1)], -1)));
    kappa.set(1, 1, over_b(Poly::var(Var::C)));
    kappa.set(
        2,
        1,
        over_b(
            Poly::monomial(&[(Var::A, 1), (Var::Pi, 2 * mi + 2), (Var::W, 1)], 1).mul(&z.num),
        ),
    );
    kappa.set(2, 2, over_b(Poly::var(Var::C)));
    kappa.set(2, 3, over_b(Poly::monomial(&[(Var::A, 1), (Var::Pi, 2 * mi + 1), (Var::W, 1)], 1)));
    kappa.set(
        3,
        0,
        over_b(
            Poly::monomial(&[(Var::A, 1), (Var::Pi, 2 * mi + 2), (Var::W, 1)], 1).mul(&z.num),
        ),
    );
    kappa.set(
        3,
        1,
        over_b(
            Poly::monomial(&[(Var::Pi, mi + 2), (Var::W, 1)], 1)
                .mul(
                    &Poly::var(Var::B)
                        .add(&Poly::monomial(&[(Var::A, 1), (Var::Pi, mi + 1), (Var::W, 1)], 1)),
                )
                .mul(&z.num),
        ),
    );

    Identity {
        name: "kappa1-absorption".into(),
        params: (n, 0, m),
        lhs,
        rhs: vec![rhs1, a_z_mat(z), kappa],
        residual_level: Some(n),
        ledger,
        unit_vars: vec![Var::C],
    }
}

/// Case-2 to case-1 merge (the kappa_2 identity), m > 0.
pub fn identity_kap2(n: u32, m: u32) -> Identity {
    assert!(m >= 1);
    let mut ledger = Ledger::default();
    let _c_atom = ledger.declare("c", Poly::var(Var::C));
    let mi = m as i16;
    let b1_p = Poly::var(Var::C)
        .add(&Poly::monomial(&[(Var::B, 1), (Var::Pi, mi)], 1))
        .add(&Poly::monomial(&[(Var::A, 1), (Var::Pi, 2 * mi)], 1));
    let _b1 = ledger.declare("beta1", b1_p.clone());

    // t(x2, y2): y2 = pi^m, x2 = -(c + b pi^m / 2)
    let t11 = var(Var::C).neg();
    let t12 = mono(&[(Var::C, 1), (Var::Pi, mi)], 1);
    let t21 = mono(&[(Var::A, 1), (Var::Pi, mi)], -1);
    let t22 = Expr::from_poly(
        Poly::var(Var::C)
            .neg()
            .sub(&Poly::monomial(&[(Var::B, 1), (Var::Pi, mi)], 1)),
    );
    let emb = embed_t([t11, t12, t21, t22], &ledger).conj_h(0, mi);

    let z = z_slot(n, m);
    let mut mid = EMat::identity();
    mid.set(2, 0, pi_pow_expr(&z, 1));
    mid.set(2, 1, pi_pow_expr(&z, 1));
    mid.set(3, 0, pi_pow_expr(&z, 1));
    let lhs = vec![emb, lower_block(Expr::one()), mid, weyl_s1()];

    let c_plus_bpi = Poly::var(Var::C).add(&Poly::monomial(&[(Var::B, 1), (Var::Pi, mi)], 1));
    let mut kappa = EMat::zero();
    kappa.set(0, 0, var(Var::C));
    kappa.set(1, 0, Expr::from_poly(c_plus_bpi.neg()));
    kappa.set(1, 1, Expr::from_poly(b1_p.neg()));
    kappa.set(
        2,
        0,
        Expr::from_poly(c_plus_bpi.mul(&z.num).mul_mono(&[(Var::Pi, 1)]).neg()),
    );
    kappa.set(
        2,
        1,
        Expr::from_poly(Poly::monomial(&[(Var::A, 1), (Var::Pi, 2 * mi + 1)], 1).mul(&z.num)),
    );
    kappa.set(2, 2, Expr::from_poly(b1_p.clone()));
    kappa.set(2, 3, Expr::from_poly(c_plus_bpi.neg()));
    kappa.set(
        3,
        0,
        Expr::from_poly(Poly::monomial(&[(Var::B, 1), (Var::Pi, mi + 1)], 1).mul(&z.num)),
    );
    kappa.set(
        3,
        1,
        Expr::from_poly(
            Poly::monomial(&[(Var::Pi, mi + 1)], 1)
                .mul(&Poly::var(Var::B).add(&Poly::monomial(&[(Var::A, 1), (Var::Pi, mi)], 1)))
                .mul(&z.num),
        ),
    );
    kappa.set(3, 3, var(Var::C).neg());

    Identity {
        name: "kappa2-merge".into(),
        params: (n, 0, m),
        lhs,
        rhs: vec![a_z_mat(z), kappa],
        residual_level: Some(n),
        ledger,
        unit_vars: vec![Var::C],
    }
}

/// Sufficiency side of the u-criterion: for z_i = pi^j u_i with
/// u2 = u1 + pi^{j+1} delta, conjugating u(X) with X = diag(0, g) and
/// g = pi^l (z2 - z1)/(pi z1 z2) moves A(z2) to A(z1) times a unit
/// diagonal-plus-corner element of K#(p^n).
pub fn identity_zdisj(n: u32, l: u32, j: u32) -> Identity {
    assert!(2 * j + 1 < n - 1);
    let mut ledger = Ledger::default();
    let _c_atom = ledger.declare("c", Poly::var(Var::C));
    let u1_atom = ledger.declare("u1", Poly::var(Var::U));
    let u2_p = Poly::var(Var::U).add(&Poly::monomial(
        &[(Var::Pi, j as i16 + 1), (Var::Delta, 1)],
        1,
    ));
    let u2_atom = ledger.declare("u2", u2_p.clone());
    let ji = j as i16;
    let li = l as i16;

    let z1 = mono(&[(Var::Pi, ji), (Var::U, 1)], 1);
    let z2 = Expr::from_poly(u2_p.clone().mul_mono(&[(Var::Pi, ji)]));

    // g entry after conjugation: pi^{-l} g = delta/(u1 u2)
    let mut du = Den::new();
    du.insert(u1_atom, 1);
    du.insert(u2_atom, 1);
    let g_conj = Expr {
        num: Poly::var(Var::Delta),
        den: du.clone(),
    };
    let mut ux = EMat::identity();
    ux.set(1, 3, pi_pow_expr(&g_conj, li).mul(&mono(&[(Var::Pi, -li)], 1)));
    // (the pi^l and pi^{-l} from conj_h cancel; entry is delta/(u1 u2))

    let lhs = vec![ux, a_z_mat(z2)];

    let u_ratio21 = Expr {
        num: u2_p.clone(),
        den: {
            let mut d = Den::new();
            d.insert(u1_atom, 1);
            d
        },
    };
    let u_ratio12 = Expr {
        num: Poly::var(Var::U),
        den: {
            let mut d = Den::new();
            d.insert(u2_atom, 1);
            d
        },
    };
    let mut k = EMat::identity();
    k.set(1, 1, u_ratio21);
    k.set(
        1,
        3,
        Expr {
            num: Poly::var(Var::Delta),
            den: du,
        },
    );
    k.set(3, 3, u_ratio12);

    Identity {
        name: "u-merge-sufficiency".into(),
        params: (n, l, j),
        lhs,
        rhs: vec![a_z_mat(z1), k],
        residual_level: Some(n),
        ledger,
        unit_vars: vec![Var::C, Var::U],
    }
}

// ---------------------------------------------------------------------------
// Verification.
// ---------------------------------------------------------------------------

fn ksharp_pattern(n: u32) -> [(usize, usize, u32); 6] {
    [(0, 1, n), (2, 0, 1), (2, 1, n), (3, 0, n), (3, 1, n), (3, 2, n)]
}

/// Is the numerator recognizable as +-(rational) * (monomial in unit vars)
/// * (atom polynomial)? This covers every diagonal in the catalog.
fn is_unit_num(num: &Poly, ledger: &Ledger, unit_vars: &[Var]) -> bool {
    if num.is_zero() {
        return false;
    }
    let strip = |p: &Poly| -> Option<Poly> {
        // divide by the unit-variable monomial content and normalize sign
        let mut min_exp = [i16::MAX; NVARS];
        for m in p.terms.keys() {
            for i in 0..NVARS {
                min_exp[i] = min_exp[i].min(m[i]);
            }
        }
        let mut shift = [0i16; NVARS];
        for v in unit_vars {
            shift[*v as usize] = -min_exp[*v as usize];
        }
        let mut out = Poly::zero();
        for (m, c) in &p.terms {
            let mut mm = *m;
            for i in 0..NVARS {
                mm[i] += shift[i];
            }
            out.insert(mm, c.clone());
        }
        Some(out)
    };
    let Some(stripped) = strip(num) else {
        return false;
    };
    // constant times a unit monomial?
    if stripped.terms.len() == 1 {
        let m = stripped.terms.keys().next().unwrap();
        return m.iter().all(|e| *e == 0);
    }
    // constant times an atom?
    for (_, atom) in &ledger.atoms {
        if let Some((m0, c0)) = stripped.terms.iter().next() {
            if let Some(ca) = atom.terms.get(m0) {
                let ratio = c0 / ca;
                let scaled = atom.scale(&ratio);
                if scaled == stripped {
                    return true;
                }
            }
        }
    }
    false
}

pub fn verify_identity(id: &Identity) -> IdentityReport {
    let mut ledger = id.ledger.clone();
    let lhs = product(&id.lhs, &ledger);
    let rhs = product(&id.rhs, &ledger);
    let diff = lhs.sub(&rhs, &ledger);
    let equality = diff.0.iter().all(Expr::is_zero);

    let mu_l = similitude(&lhs, &mut ledger);
    let mu_r = similitude(&rhs, &mut ledger);
    let similitude_ok = match (mu_l, mu_r) {
        (Ok(a), Ok(b)) => a.sub(&b, &ledger).is_zero(),
        _ => false,
    };

    let (mut pattern_ok, mut diag_units_ok) = (true, true);
    if let Some(n) = id.residual_level {
        let k = id.rhs.last().unwrap();
        for (i, j, e) in ksharp_pattern(n) {
            let entry = k.at(i, j);
            let ok = entry.is_zero()
                || entry.pi_valuation().map_or(true, |v| v >= e as i16)
                    && entry.num.is_pi_integral();
            if !ok {
                pattern_ok = false;
            }
        }
        // off-pattern entries must still be integral
        for i in 0..4 {
            for j in 0..4 {
                if !k.at(i, j).num.is_pi_integral() {
                    pattern_ok = false;
                }
            }
        }
        for i in 0..4 {
            if !is_unit_num(&k.at(i, i).num, &ledger, &id.unit_vars) {
                diag_units_ok = false;
            }
        }
    }

    IdentityReport {
        name: id.name.clone(),
        params: id.params,
        equality,
        similitude_ok,
        pattern_ok,
        diag_units_ok,
        denominators: ledger.names(),
    }
}

/// The full grid of identity instances: n <= 4, l, m <= 3, each identity
/// over its admissible subgrid.
pub fn catalog_grid() -> Vec<Identity> {
    let mut out = Vec::new();
    for l in 0..=3 {
        for m in 0..=3 {
            out.push(identity_eta(l, m));
        }
    }
    for n in 1..=4u32 {
        for m in 0..=3u32 {
            out.push(identity_t1(n, m));
            out.push(identity_t2(n, m));
            if m >= n {
                out.push(identity_t6(n, m));
            }
            if m >= 1 {
                out.push(identity_kap(n, m));
                out.push(identity_kap2(n, m));
            }
            out.push(identity_kap1(n, m));
        }
        for l in 0..=3u32 {
            out.push(identity_m0a(n, l));
            out.push(identity_m0b(n, l));
            if n >= 3 {
                for j in 0..=3u32 {
                    if 2 * j + 1 < n - 1 {
                        out.push(identity_zdisj(n, l, j));
                    }
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Numeric specialization.
// ---------------------------------------------------------------------------

use crate::group::Mat4;
use crate::ring::{ExtElem, ExtRing};

fn rational_to_residue(r: &BigRational, ring: &crate::ring::ResidueRing) -> u64 {
    let m = BigInt::from(ring.modulus);
    let num = ((r.numer() % &m) + &m) % &m;
    let den = ((r.denom() % &m) + &m) % &m;
    let num: u64 = num.try_into().unwrap();
    let den: u64 = den.try_into().unwrap();
    ring.mul(num, ring.inv(den).expect("denominator must be a p-unit"))
}

/// Evaluate an expression at a variable assignment over the extension ring.
/// The generator variable evaluates to c*alpha; pi evaluates to p.
pub fn eval_expr(
    e: &Expr,
    ledger: &Ledger,
    ext: &ExtRing,
    assign: &[ExtElem; NVARS],
) -> Result<ExtElem, crate::ring::RingError> {
    let eval_poly = |p: &Poly| -> ExtElem {
        let mut acc = ext.zero();
        for (m, c) in &p.terms {
            let mut t = ext.embed(rational_to_residue(c, &ext.base));
            for (i, e) in m.iter().enumerate() {
                assert!(*e >= 0, "negative exponent at evaluation");
                for _ in 0..*e {
                    t = ext.mul(t, assign[i]);
                }
            }
            acc = ext.add(acc, t);
        }
        acc
    };
    let mut v = eval_poly(&e.num);
    for (id, mult) in &e.den {
        let dv = eval_poly(ledger.poly(*id));
        let dv_inv = ext.inv(dv)?;
        for _ in 0..*mult {
            v = ext.mul(v, dv_inv);
        }
    }
    Ok(v)
}

/// Evaluate both factor products numerically and compare; an independent
/// route around the symbolic multiplication.
pub fn specialize_identity(
    id: &Identity,
    ext: &ExtRing,
    seed: u64,
    samples: usize,
) -> Result<bool, crate::ring::RingError> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (a, b, c) = ext.abc();
    let alpha = ext.alpha();
    let gen = ext.mul(ext.embed(c), alpha);
    'outer: for _ in 0..samples {
        let mut assign = [ext.zero(); NVARS];
        assign[Var::A as usize] = ext.embed(a);
        assign[Var::B as usize] = ext.embed(b);
        assign[Var::C as usize] = ext.embed(c);
        assign[Var::Pi as usize] = ext.embed(ext.base.p % ext.base.modulus);
        assign[Var::Gen as usize] = gen;
        for v in [Var::W, Var::Y, Var::Z, Var::U, Var::Delta] {
            let mut val = ext.embed(rng.gen_range(0..ext.base.modulus));
            if id.unit_vars.contains(&v) {
                while !ext.is_unit(val) {
                    val = ext.embed(rng.gen_range(0..ext.base.modulus));
                }
            }
            assign[v as usize] = val;
        }
        // all denominators must evaluate to units; resample otherwise
        for (_, atom) in &id.ledger.atoms {
            let v = eval_expr(
                &Expr::from_poly(atom.clone()),
                &id.ledger,
                ext,
                &assign,
            )?;
            if !ext.is_unit(v) {
                continue 'outer;
            }
        }
        let eval_mat = |mats: &[EMat]| -> Result<Mat4<ExtElem>, crate::ring::RingError> {
            let mut acc = crate::group::identity(ext);
            for em in mats {
                let mut f = crate::group::identity(ext);
                for i in 0..4 {
                    for j in 0..4 {
                        f.set(i, j, eval_expr(em.at(i, j), &id.ledger, ext, &assign)?);
                    }
                }
                acc = crate::group::mat_mul(ext, &acc, &f);
            }
            Ok(acc)
        };
        let lv = eval_mat(&id.lhs)?;
        let rv = eval_mat(&id.rhs)?;
        if lv != rv {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{Case, LocalConfig};

    #[test]
    fn generator_relation() {
        // A^2 reduces to bA - ca
        let a2 = Poly::var(Var::Gen).mul(&Poly::var(Var::Gen));
        let want = Poly::monomial(&[(Var::B, 1), (Var::Gen, 1)], 1)
            .sub(&Poly::monomial(&[(Var::C, 1), (Var::A, 1)], 1));
        assert_eq!(a2, want);
        // conj is an involutive homomorphism with A * conj(A) = ca
        let n = Poly::var(Var::Gen).mul(&Poly::var(Var::Gen).conj());
        assert_eq!(n, Poly::monomial(&[(Var::C, 1), (Var::A, 1)], 1));
    }

    #[test]
    fn m0b_scalar() {
        assert!(m0b_scalar_identity_holds());
    }

    #[test]
    fn eta_identity_passes() {
        for l in 0..=2 {
            for m in 0..=2 {
                let rep = verify_identity(&identity_eta(l, m));
                assert!(rep.pass(), "{rep:?}");
            }
        }
    }

    #[test]
    fn t1_passes_and_specializes() {
        for n in 1..=3u32 {
            for m in 0..=2u32 {
                let id = identity_t1(n, m);
                let rep = verify_identity(&id);
                assert!(rep.pass(), "{rep:?}");
            }
        }
        let ext = LocalConfig::default_for(3, 12, Case::Inert).unwrap().ext_ring();
        assert!(specialize_identity(&identity_t1(2, 0), &ext, 1, 20).unwrap());
    }

    #[test]
    fn t2_t6_pass() {
        for n in 1..=3u32 {
            for m in 0..=2u32 {
                let rep = verify_identity(&identity_t2(n, m));
                assert!(rep.pass(), "t2 {rep:?}");
            }
        }
        let rep = verify_identity(&identity_t6(2, 2));
        assert!(rep.pass(), "{rep:?}");
    }

    #[test]
    fn merge_identities_pass() {
        for n in 1..=3u32 {
            let rep = verify_identity(&identity_m0a(n, 1));
            assert!(rep.pass(), "m0a {rep:?}");
            let rep = verify_identity(&identity_m0b(n, 0));
            assert!(rep.pass(), "m0b {rep:?}");
            for m in 1..=2u32 {
                let rep = verify_identity(&identity_kap(n, m));
                assert!(rep.pass(), "kap {rep:?}");
                let rep = verify_identity(&identity_kap1(n, m));
                assert!(rep.pass(), "kap1 {rep:?}");
                let rep = verify_identity(&identity_kap2(n, m));
                assert!(rep.pass(), "kap2 {rep:?}");
            }
        }
    }

    #[test]
    fn zdisj_passes() {
        for (n, j) in [(3u32, 0u32), (4, 0), (4, 1)] {
            if 2 * j + 1 < n - 1 {
                let rep = verify_identity(&identity_zdisj(n, 1, j));
                assert!(rep.pass(), "{rep:?}");
            }
        }
    }

    #[test]
    fn specializations_all_cases() {
        for case in [Case::Inert, Case::Ramified, Case::Split] {
            let ext = LocalConfig::default_for(3, 12, case).unwrap().ext_ring();
            for id in [
                identity_t2(2, 1),
                identity_kap(2, 1),
                identity_kap1(2, 1),
                identity_m0b(2, 0),
            ] {
                assert!(
                    specialize_identity(&id, &ext, 7, 10).unwrap(),
                    "case {case} {}",
                    id.name
                );
            }
        }
    }
}
