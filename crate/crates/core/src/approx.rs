//! Vallée-Poussin singular integrals, the cosine form of even polynomials in
//! two variables, and the sampling-bound experiment for lattice polynomials.
//!
//! The integrals use the periodic trapezoid rule on `[−π, π)`. The kernel
//! `cos^{2k}(u/2)` is a trigonometric polynomial of degree `k`, so its mass
//! is exact as soon as the node count exceeds `k`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{check_dim, Error, Result};
use crate::field::{range_dist, BoxGrid, FieldFunction, C64};
use crate::trigpoly::{random_lattice_polynomial, TrigPolynomial};

pub const DEFAULT_VP_NODES_1D: usize = 1024;
pub const DEFAULT_VP_NODES_2D: usize = 256;
pub const DEFAULT_DENSE_FACTOR: usize = 64;

/// `ln((2k)!! / (2k−1)!!) = k·ln 4 + 2·lnΓ(k+1) − lnΓ(2k+1)`.
pub fn log_wallis_ratio(k: usize) -> f64 {
    let k = k as f64;
    k * 4f64.ln() + 2.0 * ln_gamma(k + 1.0) - ln_gamma(2.0 * k + 1.0)
}

/// Trapezoid weights `(1/2π)·((2k)!!/(2k−1)!!)·cos^{2k}((t_j − x)/2)·h`
/// on the nodes `t_j = −π + 2πj/N`.
fn kernel_weights(k: usize, x: f64, nodes: usize) -> Vec<f64> {
    let h = 2.0 * PI / nodes as f64;
    let scale = log_wallis_ratio(k).exp() * h / (2.0 * PI);
    (0..nodes)
        .map(|j| {
            let t = -PI + h * j as f64;
            let c = 0.5 * (1.0 + (t - x).cos());
            scale * c.powi(k as i32)
        })
        .collect()
}

/// Quadrature mass of the normalized kernel; 1 up to rounding when `nodes > k`.
pub fn kernel_mass(k: usize, nodes: usize) -> f64 {
    kernel_weights(k, 0.0, nodes).iter().sum()
}

fn check_order(k: usize, nodes: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "Vallée-Poussin order must be ≥ 1".into(),
        ));
    }
    if k > i32::MAX as usize {
        return Err(Error::InvalidArgument(format!("order {k} too large")));
    }
    if nodes <= k {
        return Err(Error::InvalidArgument(format!(
            "{nodes} quadrature nodes cannot resolve a kernel of degree {k}"
        )));
    }
    Ok(())
}

fn sample_periodic(f: &FieldFunction, nodes: usize, dim: usize) -> Result<Vec<C64>> {
    let h = 2.0 * PI / nodes as f64;
    let d = f.range_dim();
    let total = nodes.pow(dim as u32);
    let mut out = vec![C64::new(0.0, 0.0); total * d];
    out.par_chunks_mut(d)
        .enumerate()
        .try_for_each(|(idx, slot)| {
            let mut t = [0.0; 2];
            let mut rem = idx;
            for axis in (0..dim).rev() {
                t[axis] = -PI + h * (rem % nodes) as f64;
                rem /= nodes;
            }
            f.eval_into(&t[..dim], slot)
        })?;
    Ok(out)
}

/// `V_k f` as a field, sampling `f` once on `nodes` points of `[−π, π)`.
pub fn vp_1d_field(f: &FieldFunction, k: usize, nodes: usize) -> Result<FieldFunction> {
    check_dim(1, f.dim())?;
    check_order(k, nodes)?;
    let d = f.range_dim();
    let samples = sample_periodic(f, nodes, 1)?;
    Ok(FieldFunction::from_fn(1, d, move |x, out| {
        let w = kernel_weights(k, x[0], nodes);
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for (wj, s) in w.iter().zip(samples.chunks(d)) {
            for (o, v) in out.iter_mut().zip(s) {
                *o += v * wj;
            }
        }
    })
    .with_label(format!("V_{k} f")))
}

/// `V_{k,m} f` as a field, sampling `f` once on the `nodes × nodes` tensor
/// grid of `[−π, π)²`.
pub fn vp_2d_field(f: &FieldFunction, k: usize, m: usize, nodes: usize) -> Result<FieldFunction> {
    check_dim(2, f.dim())?;
    check_order(k, nodes)?;
    check_order(m, nodes)?;
    let d = f.range_dim();
    let samples = sample_periodic(f, nodes, 2)?;
    Ok(FieldFunction::from_fn(2, d, move |p, out| {
        let wx = kernel_weights(k, p[0], nodes);
        let wy = kernel_weights(m, p[1], nodes);
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        let mut inner = vec![C64::new(0.0, 0.0); d];
        for (i, wi) in wx.iter().enumerate() {
            inner.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            let row = &samples[i * nodes * d..(i + 1) * nodes * d];
            for (wj, s) in wy.iter().zip(row.chunks(d)) {
                for (v, x) in inner.iter_mut().zip(s) {
                    *v += x * wj;
                }
            }
            for (o, v) in out.iter_mut().zip(&inner) {
                *o += v * wi;
            }
        }
    })
    .with_label(format!("V_{{{k},{m}}} f")))
}

pub fn vp_1d(f: &FieldFunction, k: usize, x: f64, nodes: usize) -> Result<Vec<C64>> {
    vp_1d_field(f, k, nodes)?.eval(&[x])
}

pub fn vp_2d(
    f: &FieldFunction,
    k: usize,
    m: usize,
    x: f64,
    y: f64,
    nodes: usize,
) -> Result<Vec<C64>> {
    vp_2d_field(f, k, m, nodes)?.eval(&[x, y])
}

#[derive(Debug, Clone, Serialize)]
pub struct VPReport {
    pub k: usize,
    pub m: Option<usize>,
    pub nodes: usize,
    /// Product of the per-axis kernel masses.
    pub kernel_mass: f64,
    pub test_grid: BoxGrid,
    /// `max ‖V f − f‖` over the test grid.
    pub sup_error: f64,
    pub worst_point: Vec<f64>,
}

fn sup_error(v: &FieldFunction, f: &FieldFunction, test: &BoxGrid) -> Result<(f64, Vec<f64>)> {
    let (err, idx) = (0..test.len())
        .into_par_iter()
        .map(|i| {
            let t = test.node(i);
            Ok((range_dist(&v.eval(&t)?, &f.eval(&t)?), i))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0.0f64, 0usize), |a, b| if b.0 > a.0 { b } else { a });
    Ok((err, test.node(idx)))
}

pub fn vp_report_1d(f: &FieldFunction, k: usize, test: &BoxGrid, nodes: usize) -> Result<VPReport> {
    check_dim(1, test.dim())?;
    let v = vp_1d_field(f, k, nodes)?;
    let (sup_error, worst_point) = sup_error(&v, f, test)?;
    Ok(VPReport {
        k,
        m: None,
        nodes,
        kernel_mass: kernel_mass(k, nodes),
        test_grid: test.clone(),
        sup_error,
        worst_point,
    })
}

pub fn vp_report_2d(
    f: &FieldFunction,
    k: usize,
    m: usize,
    test: &BoxGrid,
    nodes: usize,
) -> Result<VPReport> {
    check_dim(2, test.dim())?;
    let v = vp_2d_field(f, k, m, nodes)?;
    let (sup_error, worst_point) = sup_error(&v, f, test)?;
    Ok(VPReport {
        k,
        m: Some(m),
        nodes,
        kernel_mass: kernel_mass(k, nodes) * kernel_mass(m, nodes),
        test_grid: test.clone(),
        sup_error,
        worst_point,
    })
}

/// `T(x, y) = A + Σ_{k,l≥1} a_kl cos kx cos ly + Σ_k b_k cos kx + Σ_l c_l cos ly`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CosineForm {
    pub constant: f64,
    /// `a[k−1][l−1]` multiplies `cos kx · cos ly`.
    pub a: Vec<Vec<f64>>,
    /// `b[k−1]` multiplies `cos kx`.
    pub b: Vec<f64>,
    /// `c[l−1]` multiplies `cos ly`.
    pub c: Vec<f64>,
}

impl CosineForm {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let cx: Vec<f64> = (1..=self.b.len()).map(|k| (k as f64 * x).cos()).collect();
        let cy: Vec<f64> = (1..=self.c.len()).map(|l| (l as f64 * y).cos()).collect();
        let mut s = self.constant;
        for (row, cxk) in self.a.iter().zip(&cx) {
            for (a, cyl) in row.iter().zip(&cy) {
                s += a * cxk * cyl;
            }
        }
        s + self.b.iter().zip(&cx).map(|(b, c)| b * c).sum::<f64>()
            + self.c.iter().zip(&cy).map(|(a, c)| a * c).sum::<f64>()
    }

    /// Exponential-basis polynomial with the same values.
    pub fn to_polynomial(&self) -> TrigPolynomial {
        let mut p = TrigPolynomial::zero(2, 1);
        let mut put = |kx: f64, ly: f64, v: f64| {
            if v != 0.0 {
                p.add_term(&[kx, ly], &[C64::new(v, 0.0)])
                    .expect("dimension 2");
            }
        };
        put(0.0, 0.0, self.constant);
        for (i, row) in self.a.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                let (k, l) = ((i + 1) as f64, (j + 1) as f64);
                for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    put(sx * k, sy * l, a / 4.0);
                }
            }
        }
        for (i, &b) in self.b.iter().enumerate() {
            let k = (i + 1) as f64;
            put(k, 0.0, b / 2.0);
            put(-k, 0.0, b / 2.0);
        }
        for (j, &c) in self.c.iter().enumerate() {
            let l = (j + 1) as f64;
            put(0.0, l, c / 2.0);
            put(0.0, -l, c / 2.0);
        }
        p
    }
}

const SYMMETRY_SAMPLES: usize = 256;
const SYMMETRY_TOL: f64 = 1e-10;

/// Cosine-basis coefficients of a real polynomial in two variables that is
/// even in each variable separately.
///
/// Realness and the three reflection symmetries are checked at seeded sample
/// points; tolerances scale with the Wiener norm of `p`.
pub fn even_poly_form(p: &TrigPolynomial) -> Result<CosineForm> {
    check_dim(2, p.dim())?;
    if p.range_dim() != 1 {
        return Err(Error::InvalidArgument(
            "expected a scalar polynomial".into(),
        ));
    }
    if p.lattice_order().is_none() {
        return Err(Error::InvalidArgument(
            "cosine form needs integer frequencies".into(),
        ));
    }
    let tol = SYMMETRY_TOL * p.wiener_norm().max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0xe7e4);
    let checks: [(&str, fn(f64, f64) -> (f64, f64)); 3] = [
        ("T(-x,y)=T(x,y)", |x, y| (-x, y)),
        ("T(x,-y)=T(x,y)", |x, y| (x, -y)),
        ("T(-x,-y)=T(x,y)", |x, y| (-x, -y)),
    ];
    for _ in 0..SYMMETRY_SAMPLES {
        let x = rand::Rng::random_range(&mut rng, -PI..PI);
        let y = rand::Rng::random_range(&mut rng, -PI..PI);
        let v = p.eval(&[x, y])?[0];
        if v.im.abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "polynomial is not real: Im T({x}, {y}) = {:e}",
                v.im
            )));
        }
        for (name, reflect) in &checks {
            let (rx, ry) = reflect(x, y);
            let w = p.eval(&[rx, ry])?[0];
            if (w - v).norm() > tol {
                return Err(Error::InvalidArgument(format!(
                    "symmetry {name} violated at (x, y) = ({x}, {y}): difference {:e}",
                    (w - v).norm()
                )));
            }
        }
    }

    let (mut kmax, mut lmax) = (0usize, 0usize);
    for (f, _) in p.terms() {
        kmax = kmax.max(f[0].abs() as usize);
        lmax = lmax.max(f[1].abs() as usize);
    }
    let coeff = |k: i64, l: i64| -> f64 {
        p.coefficient(&[k as f64, l as f64])
            .map_or(0.0, |c| c[0].re)
    };
    let mut form = CosineForm {
        constant: coeff(0, 0),
        a: vec![vec![0.0; lmax]; kmax],
        b: vec![0.0; kmax],
        c: vec![0.0; lmax],
    };
    for k in 1..=kmax as i64 {
        form.b[k as usize - 1] = coeff(k, 0) + coeff(-k, 0);
        for l in 1..=lmax as i64 {
            form.a[k as usize - 1][l as usize - 1] =
                coeff(k, l) + coeff(-k, l) + coeff(k, -l) + coeff(-k, -l);
        }
    }
    for l in 1..=lmax as i64 {
        form.c[l as usize - 1] = coeff(0, l) + coeff(0, -l);
    }
    Ok(form)
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplingExperiment {
    pub n: usize,
    pub l: u64,
    /// Grid size `N` per axis of `Θ_N`.
    pub nodes: usize,
    pub alpha: f64,
    pub trials: usize,
    pub dense_factor: usize,
    pub seed: u64,
    /// `max over the dense grid / max over Θ_Nⁿ`, one per trial. The dense
    /// maximum is a lower bound on the true supremum.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// `(1 − α)^{−n/2}`.
    pub cap: f64,
    pub exceeding_cap: usize,
}

/// Ratios of dense-grid to `Θ_N`-grid suprema for random real polynomials of
/// coordinate order `l` in `n` variables.
///
/// Trial `i` draws from a ChaCha stream `i` under `seed`, so results do not
/// depend on the thread count.
pub fn sampling_experiment(
    n: usize,
    l: u64,
    nodes: usize,
    trials: usize,
    dense_factor: usize,
    seed: u64,
) -> Result<SamplingExperiment> {
    if n == 0 || trials == 0 || nodes == 0 || dense_factor == 0 {
        return Err(Error::InvalidArgument(
            "dimension, trials, node count and dense factor must be positive".into(),
        ));
    }
    let alpha = 2.0 * l as f64 / nodes as f64;
    if alpha >= 1.0 {
        return Err(Error::Refusal(format!(
            "α = 2l/N = {alpha} ≥ 1; need N ≥ 2l+1"
        )));
    }
    let dense = nodes
        .checked_mul(dense_factor)
        .filter(|d| d.checked_pow(n as u32).is_some_and(|t| t <= 1 << 28))
        .ok_or_else(|| Error::InvalidArgument("dense grid too large".into()))?;
    let ratios = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let p = random_lattice_polynomial(n, l, &mut rng).real_part();
            let coarse = p.sup_norm_grid(nodes)?;
            let fine = p.sup_norm_grid(dense)?;
            Ok(if coarse == 0.0 && fine == 0.0 {
                1.0
            } else {
                fine / coarse
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let cap = (1.0 - alpha).powf(-(n as f64) / 2.0);
    Ok(SamplingExperiment {
        n,
        l,
        nodes,
        alpha,
        trials,
        dense_factor,
        seed,
        max_ratio: ratios.iter().copied().fold(f64::MIN, f64::max),
        min_ratio: ratios.iter().copied().fold(f64::MAX, f64::min),
        exceeding_cap: ratios.iter().filter(|&&r| r > cap).count(),
        ratios,
        cap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cos1() -> FieldFunction {
        FieldFunction::real(1, |t| t[0].cos())
    }

    /// Composite Simpson on `[−π, π]` with the product-form Wallis ratio.
    fn simpson_vp(f: impl Fn(f64) -> f64, k: usize, x: f64) -> f64 {
        let ratio: f64 = (1..=k)
            .map(|j| 2.0 * j as f64 / (2.0 * j as f64 - 1.0))
            .product();
        let n = 20_000;
        let h = 2.0 * PI / n as f64;
        let g = |t: f64| f(t) * ((t - x) / 2.0).cos().powi(2 * k as i32);
        let mut s = g(-PI) + g(PI);
        for j in 1..n {
            let w = if j % 2 == 1 { 4.0 } else { 2.0 };
            s += w * g(-PI + h * j as f64);
        }
        ratio * s * h / 3.0 / (2.0 * PI)
    }

    #[test]
    fn log_wallis_matches_product() {
        for k in [1usize, 2, 5, 17, 64, 100] {
            let prod: f64 = (1..=k)
                .map(|j| (2.0 * j as f64 / (2.0 * j as f64 - 1.0)).ln())
                .sum();
            assert!((log_wallis_ratio(k) - prod).abs() < 1e-11, "k={k}");
        }
        assert!(log_wallis_ratio(500).is_finite());
    }

    #[test]
    fn kernel_mass_is_one() {
        for k in 1..=64 {
            let m = kernel_mass(k, DEFAULT_VP_NODES_1D);
            assert!((m - 1.0).abs() < 1e-9, "k={k}: {m}");
        }
        let m = vp_1d(&FieldFunction::real(1, |_| 1.0), 7, 0.3, 64).unwrap()[0].re;
        assert!((m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_multiplier_matches_simpson_oracle() {
        let oracle = simpson_vp(f64::cos, 4, 0.0);
        assert!((oracle - 0.8).abs() < 1e-9, "oracle {oracle}");
        let v = vp_1d(&cos1(), 4, 0.0, DEFAULT_VP_NODES_1D).unwrap()[0].re;
        assert!((v - oracle).abs() < 1e-9);
        let x = 1.1;
        let v = vp_1d(&cos1(), 4, x, DEFAULT_VP_NODES_1D).unwrap()[0].re;
        assert!((v - simpson_vp(f64::cos, 4, x)).abs() < 1e-9);
    }

    #[test]
    fn sup_error_for_cosine_is_one_over_k_plus_one() {
        let test = BoxGrid::interval(-PI, PI, 101).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..=64 {
            let r = vp_report_1d(&cos1(), k, &test, 256).unwrap();
            assert!(
                (r.sup_error - 1.0 / (k as f64 + 1.0)).abs() < 1e-12,
                "k={k}"
            );
            assert!(r.sup_error < prev);
            prev = r.sup_error;
        }
    }

    #[test]
    fn two_dimensional_separable() {
        let f = FieldFunction::real(2, |t| t[0].cos() * t[1].cos());
        let (x, y) = (0.4, -1.3);
        let v = vp_2d(&f, 4, 4, x, y, 64).unwrap()[0].re;
        assert!((v - 0.64 * x.cos() * y.cos()).abs() < 1e-12);
        let one = vp_2d(&FieldFunction::real(2, |_| 1.0), 3, 9, x, y, 32).unwrap()[0].re;
        assert!((one - 1.0).abs() < 1e-12);
        let r = vp_report_2d(&f, 2, 5, &BoxGrid::cube(2, -PI, PI, 9).unwrap(), 32).unwrap();
        assert!((r.kernel_mass - 1.0).abs() < 1e-12);
        assert!((r.sup_error - (1.0 - 2.0 / 3.0 * 5.0 / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn monotone_in_k_for_smooth_function() {
        let f = FieldFunction::real(1, |t| (t[0].cos()).exp() + (2.0 * t[0]).sin());
        let test = BoxGrid::interval(-PI, PI, 129).unwrap();
        let errs: Vec<f64> = [1, 2, 4, 8, 16, 32]
            .iter()
            .map(|&k| {
                vp_report_1d(&f, k, &test, DEFAULT_VP_NODES_1D)
                    .unwrap()
                    .sup_error
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{errs:?}");
    }

    #[test]
    fn rejects_degenerate_orders() {
        assert!(vp_1d(&cos1(), 0, 0.0, 64).is_err());
        assert!(vp_1d(&cos1(), 64, 0.0, 64).is_err());
        assert!(vp_1d(&FieldFunction::real(2, |_| 0.0), 1, 0.0, 64).is_err());
    }

    #[test]
    fn cosine_form_basics() {
        let cc = CosineForm {
            constant: 0.0,
            a: vec![vec![1.0]],
            b: vec![0.0],
            c: vec![0.0],
        };
        let form = even_poly_form(&cc.to_polynomial()).unwrap();
        assert_eq!(form, cc);
        let three = TrigPolynomial::from_terms(2, [([0.0, 0.0], C64::new(3.0, 0.0))]).unwrap();
        let form = even_poly_form(&three).unwrap();
        assert_eq!(form.constant, 3.0);
        assert!(form.a.is_empty() && form.b.is_empty() && form.c.is_empty());
    }

    #[test]
    fn cosine_form_names_violated_symmetry() {
        let sx = TrigPolynomial::from_terms(
            2,
            [
                ([1.0, 0.0], C64::new(0.0, -0.5)),
                ([-1.0, 0.0], C64::new(0.0, 0.5)),
            ],
        )
        .unwrap();
        let msg = even_poly_form(&sx).unwrap_err().to_string();
        assert!(
            msg.contains("T(-x,y)=T(x,y)") && msg.contains("(x, y)"),
            "{msg}"
        );
        let complex = TrigPolynomial::from_terms(2, [([0.0, 0.0], C64::new(0.0, 1.0))]).unwrap();
        assert!(even_poly_form(&complex)
            .unwrap_err()
            .to_string()
            .contains("not real"));
    }

    #[test]
    fn sampling_constants_give_unit_ratio() {
        let e = sampling_experiment(2, 0, 5, 8, 4, 1).unwrap();
        assert!(e.ratios.iter().all(|&r| r == 1.0));
        assert_eq!(e.cap, 1.0);
    }

    #[test]
    fn sampling_one_dimensional_cap() {
        let e = sampling_experiment(1, 2, 8, 500, DEFAULT_DENSE_FACTOR, 7).unwrap();
        assert!((e.cap - 2f64.sqrt()).abs() < 1e-15);
        assert!(
            e.min_ratio >= 1.0 && e.max_ratio <= e.cap,
            "{} {}",
            e.min_ratio,
            e.max_ratio
        );
        assert_eq!(e.exceeding_cap, 0);
    }

    #[test]
    fn sampling_refuses_alpha_at_least_one() {
        assert!(matches!(
            sampling_experiment(1, 2, 4, 1, 4, 0),
            Err(Error::Refusal(_))
        ));
        assert!(sampling_experiment(1, 2, 5, 1, 4, 0).is_ok());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sampling_experiment(2, 1, 4, 16, 8, 99).unwrap();
        let b = sampling_experiment(2, 1, 4, 16, 8, 99).unwrap();
        assert_eq!(a.ratios, b.ratios);
        let c = sampling_experiment(2, 1, 4, 16, 8, 100).unwrap();
        assert_ne!(a.ratios, c.ratios);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn cosine_form_round_trip(
            coeffs in proptest::collection::vec(-3.0f64..3.0, 16),
            x in -PI..PI,
            y in -PI..PI,
        ) {
            // Build from cosine products and decompose again.
            let form = CosineForm {
                constant: coeffs[0],
                a: vec![coeffs[1..4].to_vec(), coeffs[4..7].to_vec(), coeffs[7..10].to_vec()],
                b: coeffs[10..13].to_vec(),
                c: coeffs[13..16].to_vec(),
            };
            let p = form.to_polynomial();
            let back = even_poly_form(&p).unwrap();
            let direct = form.constant
                + (1..=3).flat_map(|k| (1..=3).map(move |l| (k, l)))
                    .map(|(k, l)| form.a[k - 1][l - 1] * (k as f64 * x).cos() * (l as f64 * y).cos())
                    .sum::<f64>()
                + (1..=3).map(|k| form.b[k - 1] * (k as f64 * x).cos()).sum::<f64>()
                + (1..=3).map(|l| form.c[l - 1] * (l as f64 * y).cos()).sum::<f64>();
            prop_assert!((back.eval(x, y) - direct).abs() <= 1e-10);
            prop_assert!((p.eval(&[x, y]).unwrap()[0].re - direct).abs() <= 1e-10);
        }

        #[test]
        fn vp_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, x in -PI..PI, k in 1usize..20) {
            let f = FieldFunction::real(1, |t| (t[0]).sin().exp());
            let g = FieldFunction::real(1, |t| (3.0 * t[0]).cos() + t[0].sin());
            let h = f.combine(&g, C64::new(a, 0.0), C64::new(b, 0.0)).unwrap();
            let lhs = vp_1d(&h, k, x, 256).unwrap()[0].re;
            let rhs = a * vp_1d(&f, k, x, 256).unwrap()[0].re + b * vp_1d(&g, k, x, 256).unwrap()[0].re;
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
