//! Full-grid run of the symbolic identity catalog.

use zeta_core::symbolic::{catalog_grid, verify_identity};

#[test]
fn every_catalog_instance_passes() {
    let grid = catalog_grid();
    assert!(grid.len() >= 40, "grid too small: {}", grid.len());
    for id in &grid {
        let rep = verify_identity(id);
        assert!(rep.pass(), "{rep:?}");
    }
    eprintln!("verified {} identity instances", grid.len());
}
