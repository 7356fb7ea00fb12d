//! Convolutions, window averages, Gaussian and Poisson semigroups, the
//! half-line heat formula, Nemytskii composition and pointwise products.
//!
//! Integrals are tensor-product trapezoid sums over explicit boxes. Operator
//! outputs are [`FieldFunction`]s that re-run the quadrature at each point,
//! with a bounded per-point memo, and come with a [`QuadratureInfo`].

use std::f64::consts::PI;

use dashmap::DashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_dim, Error, EvalFault, Result};
use crate::field::{
    eval_on_grid, range_dist, BoxGrid, Field, FieldFunction, ParamFieldFunction, C64,
};

const MEMO_CAPACITY: usize = 1 << 18;
const MAX_KERNEL_NODES: usize = 20_000_000;
const SUPPORT_PROBES: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Full,
    /// `(0, ∞)ⁿ`.
    PositiveOrthant,
    CompactBox {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl Support {
    fn contains(&self, s: &[f64]) -> bool {
        match self {
            Support::Full => true,
            Support::PositiveOrthant => s.iter().all(|&x| x >= 0.0),
            Support::CompactBox { lower, upper } => s
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (a, b))| a <= x && x <= b),
        }
    }
}

/// Integrable scalar kernel with declared support and L¹ norm.
#[derive(Clone, Debug)]
pub struct Kernel {
    field: FieldFunction,
    support: Support,
    l1: f64,
    l1_grid: Option<BoxGrid>,
}

impl Kernel {
    /// Validates the declaration; the support is spot-checked at seeded
    /// random exterior points, where the kernel must vanish.
    pub fn new(field: FieldFunction, support: Support, l1: f64) -> Result<Self> {
        check_dim(1, field.range_dim())?;
        if !(l1 >= 0.0) || !l1.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "declared L1 norm {l1} must be finite and >= 0"
            )));
        }
        if let Support::CompactBox { lower, upper } = &support {
            check_dim(field.dim(), lower.len())?;
            check_dim(field.dim(), upper.len())?;
            if lower.iter().zip(upper).any(|(a, b)| !(a < b)) {
                return Err(Error::InvalidArgument(
                    "kernel support box is degenerate".into(),
                ));
            }
        }
        let kernel = Kernel {
            field,
            support,
            l1,
            l1_grid: None,
        };
        kernel.spot_check_support()?;
        Ok(kernel)
    }

    /// Declares the L¹ norm as the trapezoid sum of `|h|` over `grid`.
    pub fn with_numeric_l1(field: FieldFunction, support: Support, grid: &BoxGrid) -> Result<Self> {
        check_dim(field.dim(), grid.dim())?;
        let values = eval_on_grid(&field, grid)?;
        let l1 = grid
            .trapezoid_weights()
            .iter()
            .zip(&values.values)
            .map(|(w, v)| w * v.norm())
            .sum();
        let mut k = Kernel::new(field, support, l1)?;
        k.l1_grid = Some(grid.clone());
        Ok(k)
    }

    /// Heat kernel `(4πt₀)^{−n/2} e^{−|y|²/4t₀}`, unit mass.
    pub fn gaussian(n: usize, t0: f64) -> Result<Self> {
        positive("t0", t0)?;
        let c = (4.0 * PI * t0).powf(-(n as f64) / 2.0);
        let f = FieldFunction::real(n, move |y| {
            c * (-y.iter().map(|v| v * v).sum::<f64>() / (4.0 * t0)).exp()
        });
        Kernel::new(f, Support::Full, 1.0)
    }

    /// Poisson kernel `Γ((n+1)/2) π^{−(n+1)/2} t₀ / (t₀² + |y|²)^{(n+1)/2}`, unit mass.
    pub fn poisson(n: usize, t0: f64) -> Result<Self> {
        positive("t0", t0)?;
        let a = (n as f64 + 1.0) / 2.0;
        let c = (ln_gamma(a) - a * PI.ln()).exp() * t0;
        let f = FieldFunction::real(n, move |y| {
            c / (t0 * t0 + y.iter().map(|v| v * v).sum::<f64>()).powf(a)
        });
        Kernel::new(f, Support::Full, 1.0)
    }

    /// `e^{−(s₁+…+sₙ)}` on the closed positive orthant, unit mass.
    pub fn exponential_orthant(n: usize) -> Result<Self> {
        let f = FieldFunction::real(n, |s| {
            if s.iter().all(|&x| x >= 0.0) {
                (-s.iter().sum::<f64>()).exp()
            } else {
                0.0
            }
        });
        Kernel::new(f, Support::PositiveOrthant, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn field(&self) -> &FieldFunction {
        &self.field
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn declared_l1(&self) -> f64 {
        self.l1
    }

    pub fn l1_grid(&self) -> Option<&BoxGrid> {
        self.l1_grid.as_ref()
    }

    fn spot_check_support(&self) -> Result<()> {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x05ee_d0f5u64);
        for _ in 0..SUPPORT_PROBES {
            let mut s: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
            let axis = rng.random_range(0..n);
            match &self.support {
                Support::Full => return Ok(()),
                Support::PositiveOrthant => s[axis] = -s[axis].abs() - 1e-3,
                Support::CompactBox { upper, .. } => s[axis] = upper[axis] + s[axis].abs() + 1e-3,
            }
            debug_assert!(!self.support.contains(&s));
            let v = self.field.eval1(&s)?;
            if v != C64::new(0.0, 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "kernel is {v} at {s:?}, outside its declared support {:?}",
                    self.support
                )));
            }
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} = {v} must be > 0")))
    }
}

/// Numerical budget of an operator output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureInfo {
    pub trunc_box: BoxGrid,
    pub nodes: usize,
    /// Trapezoid sum of `|h|` over the box.
    pub box_mass: f64,
    pub declared_l1: f64,
    /// `min(1, box_mass / declared_l1)`.
    pub mass_fraction: f64,
}

/// Output of a quadrature-backed operator.
#[derive(Clone, Debug)]
pub struct Transformed {
    pub field: FieldFunction,
    pub info: QuadratureInfo,
}

/// `t ↦ Σ_j w_j f(t + o_j)` with a bounded memo keyed by the bits of `t`.
struct QuadratureField {
    f: FieldFunction,
    offsets: Vec<f64>,
    weights: Vec<C64>,
    memo: DashMap<Box<[u64]>, Box<[C64]>>,
}

impl QuadratureField {
    fn compute(&self, t: &[f64], out: &mut [C64]) -> Result<(), EvalFault> {
        let n = t.len();
        let mut s = vec![0.0; n];
        let mut v = vec![C64::new(0.0, 0.0); out.len()];
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for (off, w) in self.offsets.chunks_exact(n).zip(&self.weights) {
            for i in 0..n {
                s[i] = t[i] + off[i];
            }
            self.f.eval_into(&s, &mut v)?;
            for (o, x) in out.iter_mut().zip(&v) {
                *o += w * x;
            }
        }
        Ok(())
    }
}

impl Field for QuadratureField {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn range_dim(&self) -> usize {
        self.f.range_dim()
    }

    fn eval_into(&self, t: &[f64], out: &mut [C64]) -> Result<(), EvalFault> {
        let key: Box<[u64]> = t.iter().map(|x| x.to_bits()).collect();
        if let Some(hit) = self.memo.get(&key) {
            out.copy_from_slice(&hit);
            return Ok(());
        }
        self.compute(t, out)?;
        if self.memo.len() < MEMO_CAPACITY {
            self.memo.insert(key, out.to_vec().into_boxed_slice());
        }
        Ok(())
    }
}

fn quadrature_output(f: &FieldFunction, offsets: Vec<f64>, weights: Vec<C64>) -> FieldFunction {
    FieldFunction::new(QuadratureField {
        f: f.clone(),
        offsets,
        weights,
        memo: DashMap::new(),
    })
}

fn check_budget(grid: &BoxGrid) -> Result<()> {
    if grid.len() > MAX_KERNEL_NODES {
        return Err(Error::InvalidArgument(format!(
            "quadrature box has {} nodes (limit {MAX_KERNEL_NODES}); pass a coarser node count",
            grid.len()
        )));
    }
    Ok(())
}

fn kernel_convolution(
    h: &Kernel,
    f: &FieldFunction,
    trunc_box: &BoxGrid,
    min_mass_fraction: f64,
) -> Result<Transformed> {
    check_dim(h.dim(), f.dim())?;
    check_dim(h.dim(), trunc_box.dim())?;
    check_budget(trunc_box)?;
    let hv = eval_on_grid(&h.field, trunc_box)?;
    let weights = trunc_box.trapezoid_weights();
    let box_mass: f64 = weights
        .iter()
        .zip(&hv.values)
        .map(|(w, v)| w * v.norm())
        .sum();
    let mass_fraction = if h.l1 > 0.0 {
        (box_mass / h.l1).min(1.0)
    } else {
        1.0
    };
    if mass_fraction < min_mass_fraction {
        return Err(Error::Refusal(format!(
            "kernel mass fraction {mass_fraction:.6} in the truncation box is below the required {min_mass_fraction}"
        )));
    }
    let n = trunc_box.dim();
    let mut offsets = Vec::new();
    let mut wh = Vec::new();
    let mut sigma = vec![0.0; n];
    for (i, (w, v)) in weights.iter().zip(&hv.values).enumerate() {
        if *v == C64::new(0.0, 0.0) {
            continue;
        }
        trunc_box.node_into(i, &mut sigma);
        offsets.extend(sigma.iter().map(|s| -s));
        wh.push(v * *w);
    }
    Ok(Transformed {
        field: quadrature_output(f, offsets, wh),
        info: QuadratureInfo {
            trunc_box: trunc_box.clone(),
            nodes: trunc_box.len(),
            box_mass,
            declared_l1: h.l1,
            mass_fraction,
        },
    })
}

/// `(h∗f)(t) = ∫ h(σ) f(t−σ) dσ` truncated to `trunc_box`.
pub fn convolve_full(
    h: &Kernel,
    f: &FieldFunction,
    trunc_box: &BoxGrid,
    min_mass_fraction: f64,
) -> Result<Transformed> {
    kernel_convolution(h, f, trunc_box, min_mass_fraction)
}

/// `F(t) = ∫_{[0,∞)ⁿ} R(s) f(t−s) ds` truncated to `tail_box ⊂ [0,∞)ⁿ`.
pub fn convolve_causal(
    r: &Kernel,
    f: &FieldFunction,
    tail_box: &BoxGrid,
    min_mass_fraction: f64,
) -> Result<Transformed> {
    if r.support != Support::PositiveOrthant {
        return Err(Error::InvalidArgument(
            "causal convolution needs a kernel supported on the positive orthant".into(),
        ));
    }
    if tail_box.lower().iter().any(|&a| a < 0.0) {
        return Err(Error::InvalidGrid(
            "causal tail box must lie in the positive orthant".into(),
        ));
    }
    kernel_convolution(r, f, tail_box, min_mass_fraction)
}

/// `G(t) = ∫_K f(σ + t) dσ` with `K` discretized by `window`.
pub fn window_average(f: &FieldFunction, window: &BoxGrid) -> Result<Transformed> {
    check_dim(f.dim(), window.dim())?;
    check_budget(window)?;
    if window.volume() <= 0.0 {
        return Err(Error::InvalidGrid("window must be nondegenerate".into()));
    }
    let weights: Vec<C64> = window
        .trapezoid_weights()
        .into_iter()
        .map(|w| C64::new(w, 0.0))
        .collect();
    let offsets: Vec<f64> = window.nodes().flatten().collect();
    let vol = window.volume();
    Ok(Transformed {
        field: quadrature_output(f, offsets, weights),
        info: QuadratureInfo {
            trunc_box: window.clone(),
            nodes: window.len(),
            box_mass: vol,
            declared_l1: vol,
            mass_fraction: 1.0,
        },
    })
}

/// Quadrature controls for the semigroup actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemigroupOptions {
    /// Half-width of the truncation cube; kernel-specific default when absent.
    pub radius: Option<f64>,
    /// Nodes per axis; defaults to 20 per kernel length scale.
    pub nodes: Option<usize>,
    pub min_mass_fraction: f64,
}

impl Default for SemigroupOptions {
    fn default() -> Self {
        SemigroupOptions {
            radius: None,
            nodes: None,
            min_mass_fraction: 0.999,
        }
    }
}

fn semigroup_box(n: usize, radius: f64, scale: f64, nodes: Option<usize>) -> Result<BoxGrid> {
    let count = nodes.unwrap_or((2.0 * radius / (scale / 20.0)).ceil() as usize + 1);
    if count
        .checked_pow(n as u32)
        .is_none_or(|total| total > MAX_KERNEL_NODES)
    {
        return Err(Error::InvalidArgument(format!(
            "{count} nodes per axis in {n} dimensions exceeds the quadrature budget; pass radius/nodes explicitly"
        )));
    }
    BoxGrid::cube(n, -radius, radius, count)
}

/// Gaussian semigroup `G(t₀)f`, the heat kernel of variance `2t₀` per axis.
/// Default radius is twelve standard deviations.
pub fn gaussian_semigroup(
    f: &FieldFunction,
    t0: f64,
    opts: &SemigroupOptions,
) -> Result<Transformed> {
    let h = Kernel::gaussian(f.dim(), t0)?;
    let sd = (2.0 * t0).sqrt();
    let grid = semigroup_box(f.dim(), opts.radius.unwrap_or(12.0 * sd), sd, opts.nodes)?;
    convolve_full(&h, f, &grid, opts.min_mass_fraction)
}

/// Poisson semigroup `P(t₀)f`, Fourier multiplier `e^{−t₀|λ|}`. Default
/// radius is `1000·t₀`, which holds mass ≥ 0.999 for `n ≤ 2`.
pub fn poisson_semigroup(
    f: &FieldFunction,
    t0: f64,
    opts: &SemigroupOptions,
) -> Result<Transformed> {
    let h = Kernel::poisson(f.dim(), t0)?;
    let grid = semigroup_box(f.dim(), opts.radius.unwrap_or(1000.0 * t0), t0, opts.nodes)?;
    convolve_full(&h, f, &grid, opts.min_mass_fraction)
}

/// Gaussian factor `e^{−y²/4t}` is below `e^{−100}` beyond this many `√t`.
const HEAT_WINDOW: f64 = 20.0;

/// `u(x,t) = ½∫_{−x}^{x} (πt)^{−1/2} e^{−y²/4t} u₀(x−y) dy` by the trapezoid
/// rule with `nodes` points; the window is clipped to `|y| ≤ 20√t`.
pub fn heat_mixed_ivp(u0: &FieldFunction, x: f64, t: f64, nodes: usize) -> Result<C64> {
    check_dim(1, u0.dim())?;
    check_dim(1, u0.range_dim())?;
    positive("x", x)?;
    positive("t", t)?;
    if nodes < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 quadrature nodes".into(),
        ));
    }
    Ok(heat_value(u0, x, t, nodes)?)
}

fn heat_value(u0: &FieldFunction, x: f64, t: f64, nodes: usize) -> Result<C64, EvalFault> {
    let half = x.min(HEAT_WINDOW * t.sqrt());
    let grid = BoxGrid::interval(-half, half, nodes).expect("validated window");
    let c = 0.5 / (PI * t).sqrt();
    let mut acc = C64::new(0.0, 0.0);
    let mut v = [C64::new(0.0, 0.0)];
    for (k, w) in grid.axis_weights(0).iter().enumerate() {
        let y = grid.axis_coord(0, k);
        u0.eval_into(&[x - y], &mut v)?;
        acc += v[0] * (w * c * (-y * y / (4.0 * t)).exp());
    }
    Ok(acc)
}

/// `(x, t) ↦ u(x, t)` on `x, t > 0`; evaluation elsewhere is a fault.
pub fn heat_field(u0: &FieldFunction, nodes: usize) -> Result<FieldFunction> {
    check_dim(1, u0.dim())?;
    check_dim(1, u0.range_dim())?;
    if nodes < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 quadrature nodes".into(),
        ));
    }
    let u0 = u0.clone();
    Ok(FieldFunction::try_from_fn(2, 1, move |p, out| {
        if !(p[0] > 0.0 && p[1] > 0.0) {
            return Err(EvalFault::new(
                p,
                "heat solution is defined for x > 0, t > 0",
            ));
        }
        out[0] = heat_value(&u0, p[0], p[1], nodes)?;
        Ok(())
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NemytskiiInfo {
    pub declared_lipschitz: f64,
    /// Largest sampled quotient `‖G(t;y)−G(t;z)‖/‖y−z‖` over values of `f`.
    pub sampled_lipschitz: Option<f64>,
    pub samples: usize,
    pub warning: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Composed {
    pub field: FieldFunction,
    pub info: NemytskiiInfo,
}

const LIPSCHITZ_SAMPLES: usize = 4096;

/// `W(t) = G(t; f(t))`. With a probe grid, the Lipschitz bound is sampled on
/// pairs of values of `f` over that grid; exceeding the declared bound adds
/// a warning.
pub fn nemytskii(
    g: &ParamFieldFunction,
    f: &FieldFunction,
    lipschitz: f64,
    probe: Option<&BoxGrid>,
) -> Result<Composed> {
    check_dim(g.dim(), f.dim())?;
    check_dim(g.param_dim(), f.range_dim())?;
    if !(lipschitz >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Lipschitz bound {lipschitz} must be >= 0"
        )));
    }
    let (sampled, samples) = match probe {
        Some(grid) => {
            let (q, s) = sample_lipschitz(g, f, grid)?;
            (Some(q), s)
        }
        None => (None, 0),
    };
    let warning = sampled.filter(|&q| q > lipschitz * (1.0 + 1e-9)).map(|q| {
        format!("sampled Lipschitz quotient {q:.6} exceeds the declared bound {lipschitz}")
    });
    let (gc, fc) = (g.clone(), f.clone());
    let p = f.range_dim();
    let field = FieldFunction::try_from_fn(f.dim(), g.range_dim(), move |t, out| {
        let mut y = vec![C64::new(0.0, 0.0); p];
        fc.eval_into(t, &mut y)?;
        gc.eval_into(t, &y, out)
    });
    Ok(Composed {
        field,
        info: NemytskiiInfo {
            declared_lipschitz: lipschitz,
            sampled_lipschitz: sampled,
            samples,
            warning,
        },
    })
}

fn sample_lipschitz(
    g: &ParamFieldFunction,
    f: &FieldFunction,
    grid: &BoxGrid,
) -> Result<(f64, usize)> {
    let values = eval_on_grid(f, grid)?;
    let m = grid.len();
    if m < 2 {
        return Ok((0.0, 0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x11b5_c417);
    let pairs: Vec<(usize, usize, usize)> = (0..LIPSCHITZ_SAMPLES)
        .map(|_| {
            (
                rng.random_range(0..m),
                rng.random_range(0..m),
                rng.random_range(0..m),
            )
        })
        .collect();
    let d = g.range_dim();
    let quotients: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&(at, a, b)| {
            let (ya, yb) = (values.at(a), values.at(b));
            let den = range_dist(ya, yb);
            if den == 0.0 {
                return Ok(None);
            }
            let t = grid.node(at);
            let mut ga = vec![C64::new(0.0, 0.0); d];
            let mut gb = vec![C64::new(0.0, 0.0); d];
            g.eval_into(&t, ya, &mut ga)?;
            g.eval_into(&t, yb, &mut gb)?;
            Ok(Some(range_dist(&ga, &gb) / den))
        })
        .collect::<Result<_>>()?;
    let used = quotients.iter().flatten().count();
    Ok((quotients.into_iter().flatten().fold(0.0, f64::max), used))
}

/// `t ↦ φ(t)·F(t)` for scalar `φ`.
pub fn pointwise_product(phi: &FieldFunction, f: &FieldFunction) -> Result<FieldFunction> {
    check_dim(1, phi.range_dim())?;
    check_dim(phi.dim(), f.dim())?;
    let (a, b) = (phi.clone(), f.clone());
    Ok(FieldFunction::try_from_fn(
        f.dim(),
        f.range_dim(),
        move |t, out| {
            let mut s = [C64::new(0.0, 0.0)];
            a.eval_into(t, &mut s)?;
            b.eval_into(t, out)?;
            out.iter_mut().for_each(|o| *o *= s[0]);
            Ok(())
        },
    ))
}

/// Grid bound `max |φ| + max ‖F‖` used by the product transfer estimate.
pub fn product_bound(phi: &FieldFunction, f: &FieldFunction, grid: &BoxGrid) -> Result<f64> {
    Ok(eval_on_grid(phi, grid)?.sup_norm() + eval_on_grid(f, grid)?.sup_norm())
}
