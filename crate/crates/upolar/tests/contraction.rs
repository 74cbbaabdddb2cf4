use proptest::prelude::*;
use upolar::contraction::*;

fn vec2(v: &[f64]) -> NonnegVector {
    NonnegVector::new(v.to_vec())
}

#[test]
fn projective_distance_basics() {
    let d = projective_distance(&vec2(&[1.0, 2.0]), &vec2(&[2.0, 1.0])).unwrap();
    assert!((d - 4.0f64.ln()).abs() < 1e-12);
    // Scale invariance.
    let d2 = projective_distance(&vec2(&[10.0, 20.0]), &vec2(&[2.0, 1.0])).unwrap();
    assert!((d - d2).abs() < 1e-12);
    // Equal vectors at distance zero; zero vectors at distance zero.
    assert_eq!(projective_distance(&vec2(&[3.0, 7.0]), &vec2(&[3.0, 7.0])).unwrap(), 0.0);
    assert_eq!(projective_distance(&vec2(&[0.0, 0.0]), &vec2(&[0.0, 0.0])).unwrap(), 0.0);
    // Mismatched supports are rejected.
    assert_eq!(
        projective_distance(&vec2(&[1.0, 0.0]), &vec2(&[1.0, 1.0])),
        Err(ContractionError::SupportMismatch)
    );
}

#[test]
fn subrectangularity_cases() {
    let pos = NonnegMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
    assert!(is_subrectangular(&pos));
    // Identity has zeros inside nonzero rows/columns.
    assert!(!is_subrectangular(&NonnegMatrix::identity(2)));
    // Zero rows/columns are allowed.
    let m = NonnegMatrix::from_rows(&[vec![1.0, 0.0, 2.0], vec![0.0, 0.0, 0.0], vec![3.0, 0.0, 4.0]]);
    assert!(is_subrectangular(&m));
    assert!(is_subrectangular(&NonnegMatrix::zeros(3, 3)));
    // A single positive column is subrectangular.
    let col = NonnegMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 2.0]]);
    assert!(is_subrectangular(&col));
}

#[test]
fn phi_and_birkhoff_values() {
    let m = NonnegMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
    let p = phi(&m).unwrap();
    assert!((p - 2.0 / 3.0).abs() < 1e-12);
    let s = (2.0f64 / 3.0).sqrt();
    assert!((birkhoff(&m) - (1.0 - s) / (1.0 + s)).abs() < 1e-12);
    // Rank-one positive matrix: phi = 1, coefficient 0.
    let r1 = NonnegMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
    assert!((phi(&r1).unwrap() - 1.0).abs() < 1e-12);
    assert!(birkhoff(&r1).abs() < 1e-12);
    // Non-subrectangular: coefficient 1; zero matrix: 0.
    assert_eq!(birkhoff(&NonnegMatrix::identity(2)), 1.0);
    assert_eq!(birkhoff(&NonnegMatrix::zeros(2, 2)), 0.0);
    // Transpose invariance.
    assert!((birkhoff(&m) - birkhoff(&m.transpose())).abs() < 1e-12);
}

#[test]
fn budget_requires_subrectangular_factors() {
    let pos = NonnegMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
    assert!(contraction_budget(&[pos.clone(), NonnegMatrix::identity(2)]).is_err());
    let b = birkhoff(&pos);
    let budget = contraction_budget(&[pos.clone(), pos.clone()]).unwrap();
    assert!((budget - 4.0 * ((1.0 + b) / (1.0 - b)).ln() * b).abs() < 1e-12);
}

#[test]
fn scaled_matrix_survives_long_products() {
    let tiny = NonnegMatrix::from_rows(&[vec![1e-3, 2e-3], vec![3e-3, 1e-3]]);
    let mut acc = ScaledMatrix::identity(2);
    for _ in 0..500 {
        acc = acc.matmul(&tiny);
    }
    let lw = acc.log_weight(&vec2(&[0.5, 0.5]));
    assert!(lw.is_finite());
    assert!(lw < -1000.0); // entries around (1e-3)^500
}

fn arb_positive_matrix(n: usize) -> impl Strategy<Value = NonnegMatrix> {
    prop::collection::vec(1e-3f64..1e3, n * n)
        .prop_map(move |d| NonnegMatrix::new(n, n, d))
}

fn arb_positive_vector(n: usize) -> impl Strategy<Value = NonnegVector> {
    prop::collection::vec(1e-3f64..1e3, n).prop_map(NonnegVector::new)
}

proptest! {
    #[test]
    fn contraction_inequality(m in arb_positive_matrix(3), x in arb_positive_vector(3), y in arb_positive_vector(3)) {
        let dxy = projective_distance(&x, &y).unwrap();
        let dmx = projective_distance(&m.left_mul(&x), &m.left_mul(&y)).unwrap();
        prop_assert!(dmx <= birkhoff(&m) * dxy + 1e-12);
    }

    #[test]
    fn birkhoff_submultiplicative(t in arb_positive_matrix(3), m in arb_positive_matrix(3)) {
        prop_assert!(birkhoff(&t.matmul(&m)) <= birkhoff(&t) * birkhoff(&m) + 1e-12);
    }

    #[test]
    fn subrectangular_closed_under_products(a in arb_positive_matrix(3), b in arb_positive_matrix(3)) {
        prop_assert!(is_subrectangular(&a.matmul(&b)));
    }

    #[test]
    fn uniform_budget_bounds_distance(
        ms in prop::collection::vec(arb_positive_matrix(3), 1..4),
        x in arb_positive_vector(3),
        y in arb_positive_vector(3),
    ) {
        let mut px = x.clone();
        let mut py = y.clone();
        for m in &ms {
            px = m.left_mul(&px);
            py = m.left_mul(&py);
        }
        let d = projective_distance(&px, &py).unwrap();
        prop_assert!(d <= contraction_budget(&ms).unwrap() + 1e-9);
    }
}
