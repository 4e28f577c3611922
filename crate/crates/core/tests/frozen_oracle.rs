//! Regression pin: the newform oracle must reproduce the frozen value table
//! byte-for-byte (as exact symbol/coefficient data).

use zeta_core::whittaker::{frozen_table, rat_i64, wscalar_to_frozen, NewformModel};

fn check(q: u64) {
    let path = format!(
        "{}/data/newform_q{q}_n2.json",
        env!("CARGO_MANIFEST_DIR")
    );
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["oracle"]["q"], serde_json::json!(q));
    assert_eq!(doc["oracle"]["chi_index"], serde_json::json!(1));
    let model = NewformModel::new(q, 1, 1, rat_i64(1)).unwrap();
    let table = frozen_table(&model).unwrap();
    let values = doc["values"].as_array().unwrap();
    assert_eq!(values.len(), table.len());
    for ((id, v), frozen) in table.iter().zip(values) {
        assert_eq!(frozen["arg"], serde_json::json!(id));
        let got = serde_json::to_value(wscalar_to_frozen(v)).unwrap();
        assert_eq!(frozen["terms"], got, "value drift at {id}");
    }
}

#[test]
fn oracle_matches_frozen_q3() {
    check(3);
}

#[test]
fn oracle_matches_frozen_q5() {
    check(5);
}
