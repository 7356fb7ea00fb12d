use std::f64::consts::PI;

use ap_core::approx::{even_poly_form, vp_2d_field, CosineForm};
use ap_core::meanvalue::{mean_value, spectrum_scan, Averaging, NodeRule};
use ap_core::periods::eps_period_search;
use ap_core::trigpoly::{random_lattice_polynomial, TrigPolynomial};
use ap_core::{BoxGrid, FieldFunction, Point, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Trapezoid averages over whole periods are exact for lattice polynomials
/// of degree below the nodes per period.
fn periodic_averaging() -> Averaging {
    Averaging::new(vec![2.0 * PI, 4.0 * PI], NodeRule::PerAxis(129))
}

#[test]
fn vallee_poussin_output_lives_on_the_order_lattice() {
    let f = FieldFunction::real(2, |t| {
        (t[0].cos() + (2.0 * t[1]).sin()).exp() + (3.0 * t[0] - t[1]).cos()
    });
    let (k, m) = (3i64, 2i64);
    let v = vp_2d_field(&f, k as usize, m as usize, 64).unwrap();
    let candidates: Vec<Vec<f64>> = (-k..=k)
        .flat_map(|a| (-m..=m).map(move |b| vec![a as f64, b as f64]))
        .collect();
    let origin = Point::zeros(2);
    let avg = periodic_averaging();
    let s = spectrum_scan(&v, &candidates, 1e-300, &origin, &avg).unwrap();
    let captured: f64 = s.tested.iter().map(|c| c.magnitude * c.magnitude).sum();
    let vv = v.clone();
    let energy_field = FieldFunction::real(2, move |t| vv.eval1(t).unwrap().norm_sqr());
    let energy = mean_value(&energy_field, &origin, &avg).unwrap().value[0].re;
    assert!(energy > 0.0);
    assert!(captured / energy >= 1.0 - 1e-9, "{captured} / {energy}");
    assert!(captured / energy <= 1.0 + 1e-9);
}

#[test]
fn cosine_form_round_trip_for_random_even_polynomials() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..20 {
        let (kx, ly) = (rng.random_range(1..5usize), rng.random_range(1..5usize));
        let mut draw = || rng.random_range(-2.0..2.0);
        let form = CosineForm {
            constant: draw(),
            a: (0..kx).map(|_| (0..ly).map(|_| draw()).collect()).collect(),
            b: (0..kx).map(|_| draw()).collect(),
            c: (0..ly).map(|_| draw()).collect(),
        };
        let p = form.to_polynomial();
        let back = even_poly_form(&p).unwrap();
        let mut worst = 0.0f64;
        for i in 0..25 {
            let (x, y) = (-PI + 0.27 * i as f64, 1.9 - 0.21 * i as f64);
            worst = worst.max((back.eval(x, y) - p.eval(&[x, y]).unwrap()[0].re).abs());
        }
        assert!(worst <= 1e-10, "{worst}");
    }
}

#[test]
fn lattice_grid_sup_matches_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (dim, order, nodes) in [(1usize, 3u64, 16usize), (2, 2, 12), (3, 1, 6)] {
        let p = random_lattice_polynomial(dim, order, &mut rng).real_part();
        let grid = BoxGrid::cube(
            dim,
            0.0,
            2.0 * PI * (nodes - 1) as f64 / nodes as f64,
            nodes,
        )
        .unwrap();
        let direct = grid
            .nodes()
            .map(|t| p.eval(&t).unwrap()[0].norm())
            .fold(0.0, f64::max);
        let fast = p.sup_norm_grid(nodes).unwrap();
        assert!(
            (fast - direct).abs() <= 1e-12 * direct.max(1.0),
            "dim {dim}: {fast} vs {direct}"
        );
    }
}

#[test]
fn dense_grid_sup_never_falls_below_the_coarse_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..10 {
        let p = random_lattice_polynomial(2, 2, &mut rng).real_part();
        assert!(p.sup_norm_grid(40).unwrap() >= p.sup_norm_grid(5).unwrap() - 1e-12);
    }
}

#[test]
fn random_polynomials_have_relatively_dense_periods() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let terms: Vec<([f64; 1], C64)> = (0..3)
        .map(|_| {
            (
                [rng.random_range(-2.0..2.0)],
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
        })
        .collect();
    let p = TrigPolynomial::from_terms(1, terms).unwrap();
    let domain = BoxGrid::with_step(0.0, 100.0, 0.1).unwrap();
    let taus = BoxGrid::with_step(0.0, 400.0, 0.05).unwrap();
    let r = eps_period_search(&p.to_field(), 0.5, &domain, &taus, &[200.0]).unwrap();
    assert!(r.accepted.len() > 1);
    assert!(
        r.verdicts[0].relatively_dense,
        "covering radius {:?}",
        r.covering_radius
    );
}
