use fracwave::criticality::{
    alpha_0, classify_q, exponent_table, growth_exponent, table_row, Case, Family, GrowthExponent,
};
use fracwave::ExtReal;

fn a0(family: Family, d: usize, s: f64) -> Option<f64> {
    table_row(family, d, s, 4.0).unwrap().alpha0
}

#[test]
fn laplacian_critical_orders() {
    assert_eq!(a0(Family::DirichletLaplacian, 1, 1.0), Some(2.0));
    assert_eq!(a0(Family::DirichletLaplacian, 2, 1.0), Some(1.5));
    assert_eq!(a0(Family::DirichletLaplacian, 3, 1.0), Some(4.0 / 3.0));
    for d in 4..8 {
        assert_eq!(a0(Family::DirichletLaplacian, d, 1.0), None, "d={d}");
    }
}

#[test]
fn fractional_laplacian_borderline() {
    assert_eq!(a0(Family::FractionalLaplacian, 2, 0.75), Some(1.5));
    // d = 2s with the default q
    assert_eq!(table_row(Family::FractionalLaplacian, 1, 0.5, 4.0).unwrap().q_a, ExtReal::Finite(4.0));
    assert_eq!(a0(Family::FractionalLaplacian, 1, 0.75), Some(2.0));
    assert_eq!(a0(Family::FractionalLaplacian, 1, 0.4), Some(1.6));
}

#[test]
fn boundary_operators() {
    assert_eq!(table_row(Family::WentzellDelta0, 3, 1.0, 4.0).unwrap().q_a, ExtReal::Finite(2.0));
    assert_eq!(a0(Family::WentzellDelta0, 3, 1.0), None);
    assert_eq!(table_row(Family::DirichletToNeumann, 4, 1.0, 4.0).unwrap().q_a, ExtReal::Finite(1.5));
    assert_eq!(a0(Family::WentzellDelta1, 3, 1.0), Some(4.0 / 3.0));
}

#[test]
fn growth_exponent_values() {
    let r = growth_exponent(1.9, ExtReal::Finite(3.0)).unwrap().r_star().unwrap();
    assert!((r - 3.352_941_176).abs() < 1e-4, "{r}");
    let r = growth_exponent(1.999, ExtReal::Finite(3.0)).unwrap().r_star().unwrap();
    assert!((r - 3.0).abs() < 1e-2, "{r}");
    assert_eq!(growth_exponent(4.0 / 3.0, ExtReal::Finite(3.0)).unwrap(), GrowthExponent::AnyFinite);
}

#[test]
fn regimes() {
    let reg = classify_q(ExtReal::Finite(3.0), 1.5).unwrap();
    assert_eq!((reg.case, reg.subcritical), (Case::I, false));
    assert!((reg.growth.r_star().unwrap() - 9.0).abs() < 1e-12);
    let reg = classify_q(ExtReal::Infinity, 1.9).unwrap();
    assert!(reg.subcritical && reg.note.is_some());
    assert_eq!(classify_q(ExtReal::Finite(1.5), 1.5).unwrap().case, Case::II);
    assert!(classify_q(ExtReal::Finite(3.0), 2.0).is_err());
    assert_eq!(alpha_0(ExtReal::Finite(2.0)).unwrap(), None);
}

#[test]
fn full_table_has_every_family() {
    let rows = exponent_table(4, &[0.25, 0.5, 0.75], 4.0).unwrap();
    assert_eq!(rows.len(), 4 * 4 + 3 * 4);
    assert!(rows.iter().all(|r| r.theta_a >= 0.5));
}
