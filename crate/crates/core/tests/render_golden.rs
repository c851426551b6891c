use std::sync::Arc;

use sha2::{Digest, Sha256};
use xyclock::constructions::{vortex_field, VortexSpec};
use xyclock::render::render_svg;
use xyclock::vorticity::vorticity_measure;
use xyclock::{Domain, Lattice, Point, UnitVec};

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/vortex.svg");

fn fixture() -> String {
    let l = Arc::new(Lattice::new(Domain::unit_disk(), 0.125).unwrap());
    let s = VortexSpec::new(Point::new(0.05, 0.03), 1, UnitVec::ONE).unwrap();
    let u = vortex_field(&l, &s);
    let mu = vorticity_measure(&u).unwrap();
    assert_eq!(mu.atoms.len(), 1);
    assert_eq!(mu.atoms[0].d, 1);
    render_svg(&u, Some(&mu))
}

#[test]
fn vortex_svg_matches_golden_hash() {
    let svg = fixture();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(GOLDEN, &svg).unwrap();
    }
    let golden = std::fs::read(GOLDEN).expect("golden file");
    assert_eq!(Sha256::digest(svg.as_bytes()), Sha256::digest(&golden));
    assert_eq!(svg.matches("<circle").count(), 1);
    assert!(svg.contains(">+</text>"));
}
