//! ε-period transfer through the operators, checked as inclusions of
//! accepted index sets on shared grids.

use std::f64::consts::PI;

use ap_core::exprlang;
use ap_core::operators::{
    convolve_causal, convolve_full, heat_field, nemytskii, pointwise_product, product_bound,
    window_average, Kernel, Support,
};
use ap_core::periods::{eps_period_search, windowed_check, EpsPeriodReport, Mask};
use ap_core::{BoxGrid, FieldFunction, ParamFieldFunction, Point};
use statrs::function::erf::erfc;

fn quasi() -> FieldFunction {
    exprlang::field("sin(t1) + sin(sqrt(2)*t1)", 1).unwrap()
}

fn search(f: &FieldFunction, eps: f64, domain: &BoxGrid, taus: &BoxGrid) -> EpsPeriodReport {
    eps_period_search(f, eps, domain, taus, &[]).unwrap()
}

fn assert_included(small: &EpsPeriodReport, large: &EpsPeriodReport) {
    assert!(!small.accepted.is_empty(), "empty input period set");
    let big = large.accepted_indices();
    for i in small.accepted_indices() {
        assert!(big.binary_search(&i).is_ok(), "shift index {i} lost");
    }
}

fn grids() -> (BoxGrid, BoxGrid) {
    (
        BoxGrid::with_step(0.0, 40.0, 0.1).unwrap(),
        BoxGrid::with_step(0.0, 80.0, 0.1).unwrap(),
    )
}

#[test]
fn full_convolution_scales_the_level_by_the_kernel_mass() {
    let (domain, taus) = grids();
    let h = FieldFunction::real(1, |y| 2.0 * (-y[0] * y[0]).exp() / PI.sqrt());
    let kernel = Kernel::new(h, Support::Full, 2.0).unwrap();
    let trunc = BoxGrid::with_step(-8.0, 8.0, 0.02).unwrap();
    let out = convolve_full(&kernel, &quasi(), &trunc, 0.999).unwrap();
    let eps = 0.4;
    assert_included(
        &search(&quasi(), eps, &domain, &taus),
        &search(&out.field, 2.0 * eps, &domain, &taus),
    );
}

#[test]
fn causal_convolution_keeps_periods() {
    let (domain, taus) = grids();
    let kernel = Kernel::exponential_orthant(1).unwrap();
    let tail = BoxGrid::with_step(0.0, 40.0, 0.01).unwrap();
    let out = convolve_causal(&kernel, &quasi(), &tail, 0.999).unwrap();
    let eps = 0.4;
    assert_included(
        &search(&quasi(), eps, &domain, &taus),
        &search(&out.field, eps, &domain, &taus),
    );
}

#[test]
fn window_average_keeps_periods_at_volume_level() {
    let (domain, taus) = grids();
    let window = BoxGrid::with_step(0.0, 1.0, 0.01).unwrap();
    let out = window_average(&quasi(), &window).unwrap();
    let eps = 0.4;
    assert_included(
        &search(&quasi(), eps, &domain, &taus),
        &search(&out.field, eps * window.volume(), &domain, &taus),
    );

    let two = BoxGrid::new(vec![0.0, 0.0], vec![2.0 * PI, 1.0], vec![401, 3]).unwrap();
    let avg = window_average(&FieldFunction::real(2, |t| t[0].sin()), &two).unwrap();
    for p in [[0.3, -1.0], [5.0, 2.0]] {
        assert!(avg.field.eval1(&p).unwrap().norm() < 1e-12);
    }
}

#[test]
fn nemytskii_transfers_pair_periods_at_lipschitz_level() {
    let (domain, taus) = grids();
    let f = quasi();
    let g =
        ParamFieldFunction::from_fn(1, 1, 1, |t, y, out| out[0] = y[0].sin() + 0.5 * t[0].cos());
    let w = nemytskii(&g, &f, 1.0, Some(&domain)).unwrap();
    assert!(w.info.warning.is_none());
    let pair = FieldFunction::stack(&[f, FieldFunction::real(1, |t| t[0].cos())]).unwrap();
    let eps = 0.3;
    assert_included(
        &search(&pair, eps, &domain, &taus),
        &search(&w.field, 2.0 * eps, &domain, &taus),
    );
}

#[test]
fn product_transfers_common_periods() {
    let (domain, taus) = grids();
    let phi = FieldFunction::real(1, |t| t[0].cos());
    let big = exprlang::field("sin(t1) + 0.5*cos(sqrt(3)*t1)", 1).unwrap();
    let reach = BoxGrid::with_step(0.0, 120.0, 0.1).unwrap();
    let m = product_bound(&phi, &big, &reach).unwrap();
    let eps = 0.5;
    let level = eps / (2.0 * m);
    let pair = FieldFunction::stack(&[phi.clone(), big.clone()]).unwrap();
    let prod = pointwise_product(&phi, &big).unwrap();
    assert_included(
        &search(&pair, level, &domain, &taus),
        &search(&prod, eps, &domain, &taus),
    );
}

/// Windowed sup of the half-line heat solution on the sector `x/2 ≤ t ≤ 2x`.
///
/// On the sector `t ≥ |p|/(2√5)` and `x ≥ |p|/√5`, so
/// `|u| ≤ e^{−t} + e^{−2t} + 2·erfc(x/(2√t))` and `x/(2√t) ≥ √x/(2√2)`.
#[test]
fn heat_solution_windowed_sup_decays_on_the_sector() {
    let u0 = quasi();
    let u = heat_field(&u0, 4001).unwrap();
    let domain = BoxGrid::new(vec![0.5, 0.5], vec![120.5, 120.5], vec![121, 121]).unwrap();
    let taus = BoxGrid::with_step(0.0, 150.0, 0.01).unwrap();
    let periods = search(
        &u0,
        0.2,
        &BoxGrid::with_step(0.0, 100.0, 0.1).unwrap(),
        &taus,
    );
    let tau_x = periods
        .accepted
        .iter()
        .find(|a| a.tau[0] > 1.0)
        .unwrap()
        .tau[0];
    let tau = Point::new(vec![tau_x, 0.0]).unwrap();
    let mask = Mask::DiagonalSector { c1: 0.5, c2: 2.0 };
    let r = windowed_check(&u, &tau, &domain, &mask, &[20.0, 40.0, 80.0], 0.2).unwrap();
    assert!(r.nonincreasing && r.pass, "{r:?}");
    let s5 = 5f64.sqrt();
    for w in &r.windows {
        let (t_min, x_min) = (w.m / (2.0 * s5), w.m / s5);
        let bound =
            (-t_min).exp() + (-2.0 * t_min).exp() + 2.0 * erfc(x_min.sqrt() / (2.0 * 2f64.sqrt()));
        assert!(
            w.value <= 2.0 * bound,
            "M={}: {} > {}",
            w.m,
            w.value,
            2.0 * bound
        );
    }
    assert!(r.windows[2].value < r.windows[0].value);
}
