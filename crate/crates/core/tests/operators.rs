mod common;

use proptest::prelude::*;

use bsflow::geom;
use bsflow::surface::{self, SegmentFrame};

fn segment() -> impl Strategy<Value = ([f64; 2], [f64; 2])> {
    let p = || (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y)| [x, y]);
    (p(), p()).prop_filter("segment too short", |(a, b)| geom::dist(*a, *b) > 0.05)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn xi_turns_gradient_into_half_gradient_of_square((a, b) in segment(), z1 in -2.0..2.0f64, z2 in -2.0..2.0f64) {
        let f = SegmentFrame::new(a, b);
        let lhs = surface::matvec(&f.xi_matrix(z1, z2), f.surface_gradient(z1, z2));
        let rhs = geom::scale(0.5, f.surface_gradient(z1 * z1, z2 * z2));
        let scale = ((z1 * z1 + z2 * z2) / f.length).max(1.0);
        prop_assert!(geom::dist(lhs, rhs) <= 1e-13 * scale);
    }

    #[test]
    fn deviatoric_part_vanishes_on_curves((a, b) in segment(), u in prop::array::uniform4(-1.0..1.0f64)) {
        let (_, _, dev) = SegmentFrame::new(a, b).rate_of_deformation([u[0], u[1]], [u[2], u[3]]);
        prop_assert!(dev.iter().flatten().all(|x| x.abs() <= 1e-14));
    }

    #[test]
    fn divergence_is_trace_of_deformation((a, b) in segment(), u in prop::array::uniform4(-1.0..1.0f64)) {
        let (d, div, _) = SegmentFrame::new(a, b).rate_of_deformation([u[0], u[1]], [u[2], u[3]]);
        prop_assert!((surface::trace(&d) - div).abs() <= 1e-13 * (1.0 + div.abs()));
    }
}

#[test]
fn xi_identity_on_seeded_segments() {
    assert!(common::xi_identity_error(1000, 7) <= 1e-13);
}

#[test]
fn deviatoric_part_on_seeded_segments() {
    assert!(common::deviatoric_max(1000, 8) <= 1e-14);
}

#[test]
fn psi_star_summation_by_parts() {
    let e = common::psi_star_sbp_error(300, 9);
    assert!(e <= 1e-12, "{e:e}");
}

#[test]
fn curve_summation_by_parts() {
    let e = common::jwb_error(300, 10);
    assert!(e <= 1e-12, "{e:e}");
}

#[test]
fn convection_block_is_antisymmetric() {
    let (entry, form) = common::convection_antisymmetry(10, 11);
    assert!(entry <= 1e-15, "{entry:e}");
    assert!(form <= 1e-13, "{form:e}");
}

#[test]
fn algorithms_match_direct_quadrature() {
    let e = common::algorithm_errors(40, 12);
    for (i, x) in e.iter().enumerate() {
        assert!(*x <= 1e-12, "assembly {i}: {x:e}");
    }
}
