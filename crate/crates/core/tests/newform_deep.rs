//! The optional deeper-level model: chi_1 of conductor p^2, newform level
//! p^4, and the individual vanishing of lower-unipotent values at shallow
//! parameter valuation.

use zeta_core::whittaker::{diag_pi, lower, mat2_mul, rat_i64, rat_pow, NewformModel};

#[test]
fn level_four_model_vanishing() {
    let m = NewformModel::new(3, 2, 1, rat_i64(1)).unwrap();
    assert!(m.check_kirillov(-1..=3).unwrap());
    // individual values W0(diag(p^l,1) lower(p z)) vanish for val(z) = 0
    // (the 2j+2 < n regime with j = 0)
    for l in 0..=1i64 {
        for zu in [1i64, 2] {
            let g = mat2_mul(&diag_pi(3, l), &lower(rat_i64(zu) * rat_pow(3, 1)));
            let v = m.w0(&g).unwrap();
            assert!(v.is_zero(), "l={l} z-unit={zu}");
        }
    }
    // j = 1 (2j+2 = 4, not < 4) is outside the hypothesis: the value needn't
    // vanish, and indeed the level sums over it are what cancel instead
    let s = m.lemma_sum(&diag_pi(3, 0), 1).unwrap();
    assert!(s.is_zero());
}
