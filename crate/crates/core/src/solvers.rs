//! Banach fixed-point solvers: the Hammerstein convolution equation
//! `y = g + k∗F(·, y)` and the delayed evolution equation in mild form
//! `u(t) = ∫_{−∞}^t U(t,s) f(s, u(s−r)) ds`.
//!
//! Both iterate on a uniform grid until the successive sup-distance drops
//! below the tolerance and return a grid interpolant with a [`SolveTrace`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, EvalFault, Result};
use crate::field::{
    eval_on_grid, range_dist, BoxGrid, Field, FieldFunction, GridValues, ParamFieldFunction, C64,
};
use crate::operators::Kernel;

/// Relative cutoff below which Toeplitz kernel entries are dropped.
const KERNEL_CUTOFF: f64 = 1e-18;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    /// `d_k = sup ‖y_k − y_{k−1}‖` over the working grid.
    pub distances: Vec<f64>,
    /// `sup ‖y − RHS(y)‖` for the returned iterate.
    pub residual: f64,
    /// Certified contraction constant.
    pub q: f64,
    pub iterations: usize,
    pub converged: bool,
    pub tol: f64,
    /// `max_k d_{k+1} / (q·d_k) − 1` over the trace (0 when undefined).
    pub observed_slack: f64,
    pub grid: BoxGrid,
    pub start: String,
}

fn observed_slack(distances: &[f64], q: f64) -> f64 {
    distances
        .windows(2)
        .filter(|w| w[0] > 0.0 && q > 0.0)
        .map(|w| w[1] / (q * w[0]) - 1.0)
        .fold(0.0, f64::max)
}

/// Multilinear interpolant of grid values; evaluation outside the box is a fault.
struct GridInterpolant {
    values: GridValues,
}

impl Field for GridInterpolant {
    fn dim(&self) -> usize {
        self.values.grid.dim()
    }

    fn range_dim(&self) -> usize {
        self.values.range_dim
    }

    fn eval_into(&self, t: &[f64], out: &mut [C64]) -> Result<(), EvalFault> {
        let grid = &self.values.grid;
        let n = grid.dim();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for a in 0..n {
            let (lo, hi, c) = (grid.lower()[a], grid.upper()[a], grid.counts()[a]);
            if c < 2 {
                if t[a] != lo {
                    return Err(EvalFault::new(t, "outside the solution grid"));
                }
                continue;
            }
            let h = grid.spacing(a);
            if t[a] < lo - 1e-9 * h || t[a] > hi + 1e-9 * h {
                return Err(EvalFault::new(t, "outside the solution grid"));
            }
            let u = ((t[a] - lo) / h).clamp(0.0, (c - 1) as f64);
            let k = (u.floor() as usize).min(c - 2);
            base[a] = k;
            frac[a] = u - k as f64;
        }
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        let mut idx = vec![0usize; n];
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            for a in 0..n {
                let up = corner >> a & 1 == 1;
                if grid.counts()[a] < 2 {
                    if up {
                        w = 0.0;
                    }
                    idx[a] = 0;
                    continue;
                }
                idx[a] = base[a] + up as usize;
                w *= if up { frac[a] } else { 1.0 - frac[a] };
            }
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.values.at(grid.flat_index(&idx))) {
                *o += v * w;
            }
        }
        Ok(())
    }
}

/// Interpolating [`FieldFunction`] over sampled grid values.
pub fn interpolant(values: GridValues) -> FieldFunction {
    FieldFunction::new(GridInterpolant { values })
}

/// Starting iterate of a fixed-point solve.
#[derive(Clone, Debug, Default)]
pub enum Start {
    /// `y₀ = g` for Hammerstein, `u₀ ≡ 0` for the delay solver.
    #[default]
    Natural,
    Zero,
    Given(FieldFunction),
}

impl Start {
    fn describe(&self, natural: &str) -> String {
        match self {
            Start::Natural => natural.into(),
            Start::Zero => "zero".into(),
            Start::Given(f) => format!("given({})", f.label().unwrap_or("unlabelled")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub field: FieldFunction,
    pub values: GridValues,
    pub trace: SolveTrace,
}

#[derive(Clone, Debug)]
pub struct HammersteinProblem {
    pub g: FieldFunction,
    pub kernel: Kernel,
    /// `F(s, y)` with parameter dimension equal to the range of `g`.
    pub nonlinearity: ParamFieldFunction,
    /// Lipschitz bound of `F` in `y`.
    pub lipschitz: f64,
    pub grid: BoxGrid,
    pub tol: f64,
    pub max_iter: usize,
    pub start: Start,
}

/// Banded Toeplitz form of `y ↦ g + Σ_j w_j k(t_i − t_j) F(t_j, y_j)`.
struct HammersteinOperator {
    grid: BoxGrid,
    g: GridValues,
    nonlinearity: ParamFieldFunction,
    weights: Vec<f64>,
    /// `(multi-offset, k(offset·h))` pairs above the cutoff.
    band: Vec<(Vec<i64>, f64)>,
}

impl HammersteinOperator {
    fn new(p: &HammersteinProblem) -> Result<Self> {
        let n = p.grid.dim();
        check_dim(n, p.g.dim())?;
        check_dim(n, p.kernel.dim())?;
        check_dim(n, p.nonlinearity.dim())?;
        check_dim(p.g.range_dim(), p.nonlinearity.param_dim())?;
        check_dim(p.g.range_dim(), p.nonlinearity.range_dim())?;
        let g = eval_on_grid(&p.g, &p.grid)?;
        let counts = p.grid.counts();
        let spans: Vec<i64> = counts.iter().map(|&c| c as i64 - 1).collect();
        let total: usize = spans.iter().map(|&s| (2 * s + 1) as usize).product();
        let mut band = Vec::new();
        let mut m = vec![0i64; n];
        let mut s = vec![0.0; n];
        let mut peak = 0.0f64;
        for flat in 0..total {
            let mut rest = flat;
            for a in (0..n).rev() {
                let width = (2 * spans[a] + 1) as usize;
                m[a] = (rest % width) as i64 - spans[a];
                rest /= width;
                s[a] = m[a] as f64 * p.grid.spacing(a);
            }
            let v = p.kernel.field().eval1(&s)?.re;
            peak = peak.max(v.abs());
            band.push((m.clone(), v));
        }
        band.retain(|(_, v)| v.abs() > KERNEL_CUTOFF * peak);
        Ok(HammersteinOperator {
            grid: p.grid.clone(),
            g,
            nonlinearity: p.nonlinearity.clone(),
            weights: p.grid.trapezoid_weights(),
            band,
        })
    }

    fn apply(&self, y: &[C64]) -> Result<Vec<C64>> {
        let d = self.g.range_dim;
        let grid = &self.grid;
        let n = grid.dim();
        let mut z = vec![C64::new(0.0, 0.0); y.len()];
        z.par_chunks_mut(d)
            .enumerate()
            .try_for_each(|(j, out)| -> Result<(), EvalFault> {
                let t = grid.node(j);
                self.nonlinearity
                    .eval_into(&t, &y[j * d..(j + 1) * d], out)?;
                out.iter_mut().for_each(|o| *o *= self.weights[j]);
                Ok(())
            })?;
        let counts: Vec<i64> = grid.counts().iter().map(|&c| c as i64).collect();
        let mut next = self.g.values.clone();
        next.par_chunks_mut(d).enumerate().for_each(|(i, out)| {
            let idx = grid.multi_index(i);
            let mut src = vec![0usize; n];
            'offsets: for (m, kv) in &self.band {
                for a in 0..n {
                    let j = idx[a] as i64 - m[a];
                    if j < 0 || j >= counts[a] {
                        continue 'offsets;
                    }
                    src[a] = j as usize;
                }
                let j = grid.flat_index(&src);
                for (o, v) in out.iter_mut().zip(&z[j * d..(j + 1) * d]) {
                    *o += v * *kv;
                }
            }
        });
        Ok(next)
    }
}

fn sup_dist(a: &[C64], b: &[C64], d: usize) -> f64 {
    a.par_chunks(d)
        .zip(b.par_chunks(d))
        .map(|(x, y)| range_dist(x, y))
        .reduce(|| 0.0, f64::max)
}

fn start_values(start: &Start, natural: &[C64], grid: &BoxGrid, d: usize) -> Result<Vec<C64>> {
    Ok(match start {
        Start::Natural => natural.to_vec(),
        Start::Zero => vec![C64::new(0.0, 0.0); grid.len() * d],
        Start::Given(f) => {
            check_dim(d, f.range_dim())?;
            eval_on_grid(f, grid)?.values
        }
    })
}

fn iterate<A>(
    apply: A,
    mut y: Vec<C64>,
    d: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<C64>, Vec<f64>, f64, bool)>
where
    A: Fn(&[C64]) -> Result<Vec<C64>>,
{
    let mut distances = Vec::new();
    for _ in 0..max_iter {
        let next = apply(&y)?;
        let dist = sup_dist(&next, &y, d);
        distances.push(dist);
        y = next;
        if dist <= tol {
            let residual = sup_dist(&apply(&y)?, &y, d);
            return Ok((y, distances, residual, true));
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last_distance: distances.last().copied().unwrap_or(f64::NAN),
    })
}

fn validate_tolerances(tol: f64, max_iter: usize) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {tol} must be > 0"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
    }
    Ok(())
}

/// Solves `y(t) = g(t) + ∫ k(t−s) F(s, y(s)) ds` by Picard iteration with a
/// trapezoid Nyström discretization on `grid`.
pub fn hammerstein_solve(p: &HammersteinProblem) -> Result<Solution> {
    validate_tolerances(p.tol, p.max_iter)?;
    let q = p.lipschitz * p.kernel.declared_l1();
    if !(q < 1.0) {
        return Err(Error::Refusal(format!(
            "contraction constant L·‖k‖₁ = {q} is not below 1"
        )));
    }
    let op = HammersteinOperator::new(p)?;
    let d = p.g.range_dim();
    let y0 = start_values(&p.start, &op.g.values, &p.grid, d)?;
    let (y, distances, residual, converged) = iterate(|y| op.apply(y), y0, d, p.tol, p.max_iter)?;
    let values = GridValues {
        grid: p.grid.clone(),
        range_dim: d,
        values: y,
    };
    Ok(Solution {
        field: interpolant(values.clone()),
        values,
        trace: SolveTrace {
            iterations: distances.len(),
            observed_slack: observed_slack(&distances, q),
            distances,
            residual,
            q,
            converged,
            tol: p.tol,
            grid: p.grid.clone(),
            start: p.start.describe("g"),
        },
    })
}

/// The map `y ↦ g + k∗F(·, y)` on grid samples, returned as interpolants;
/// intended for [`contraction_certificate`].
pub fn hammerstein_map(
    p: &HammersteinProblem,
) -> Result<impl Fn(&FieldFunction) -> Result<FieldFunction>> {
    let op = HammersteinOperator::new(p)?;
    Ok(move |y: &FieldFunction| {
        let yv = eval_on_grid(y, &op.grid)?;
        let values = GridValues {
            grid: op.grid.clone(),
            range_dim: op.g.range_dim,
            values: op.apply(&yv.values)?,
        };
        Ok(interpolant(values))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub estimate: f64,
    pub ratios: Vec<f64>,
    /// Probe indices skipped because the pair coincides on the grid.
    pub skipped: Vec<usize>,
}

/// `max sup‖op(u)−op(v)‖ / sup‖u−v‖` over probe pairs, on `grid`.
pub fn contraction_certificate<O>(
    op: O,
    probes: &[(FieldFunction, FieldFunction)],
    grid: &BoxGrid,
) -> Result<CertificateReport>
where
    O: Fn(&FieldFunction) -> Result<FieldFunction>,
{
    if probes.is_empty() {
        return Err(Error::InvalidArgument("no probe pairs".into()));
    }
    let mut ratios = Vec::new();
    let mut skipped = Vec::new();
    for (i, (u, v)) in probes.iter().enumerate() {
        let den = eval_on_grid(u, grid)?.sup_dist(&eval_on_grid(v, grid)?);
        if den == 0.0 {
            skipped.push(i);
            continue;
        }
        let num = eval_on_grid(&op(u)?, grid)?.sup_dist(&eval_on_grid(&op(v)?, grid)?);
        ratios.push(num / den);
    }
    Ok(CertificateReport {
        estimate: ratios.iter().copied().fold(0.0, f64::max),
        ratios,
        skipped,
    })
}

/// Diagonal surrogate `U(t,s) = diag_j exp(∫ₛᵗ α − ξⱼ² ∫ₛᵗ δ)` of the
/// evolution family `e^{∫α} T(∫δ)` restricted to frequencies `ξⱼ`.
#[derive(Clone, Debug)]
pub struct EvolutionFamilySpec {
    pub alpha: FieldFunction,
    pub delta: FieldFunction,
    pub frequencies: Vec<f64>,
}

/// Decay constants of the family as sampled on the working grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayConstants {
    /// `ω̃ = −max α`.
    pub omega_tilde: f64,
    /// `δ₀ = min δ`.
    pub delta0: f64,
    /// `λ = min ξⱼ²`.
    pub lambda: f64,
    /// `ω = ω̃ + λδ₀`.
    pub omega: f64,
}

#[derive(Clone, Debug)]
pub struct DelayProblem {
    pub family: EvolutionFamilySpec,
    /// `f(t, v)`, state dimension = number of frequencies.
    pub f: ParamFieldFunction,
    pub lipschitz: f64,
    pub delay: f64,
    /// Uniform 1D grid on which the solution is reported.
    pub grid: BoxGrid,
    /// History depth `Tₕ`; defaults to `40/ω`.
    pub history: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub start: Start,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayInfo {
    pub constants: DecayConstants,
    pub history_depth: f64,
    /// `e^{−ωTₕ}·sup‖f(·, u(·−r))‖/ω` for the returned iterate.
    pub truncation_bound: f64,
    pub working_grid: BoxGrid,
    pub history_init: String,
}

#[derive(Clone, Debug)]
pub struct DelaySolution {
    pub solution: Solution,
    pub info: DelayInfo,
}

struct DelayOperator {
    working: BoxGrid,
    f: ParamFieldFunction,
    delay: f64,
    d: usize,
    /// Per component, `exp(A(t_{i+1}) − A(t_i))` for each step.
    step_factors: Vec<Vec<f64>>,
}

impl DelayOperator {
    /// `t ↦ u(t − r)` by linear interpolation, zero before the working grid.
    fn delayed(&self, u: &[C64], t: f64, out: &mut [C64]) {
        let lo = self.working.lower()[0];
        let h = self.working.spacing(0);
        let c = self.working.counts()[0];
        let s = t - self.delay;
        let x = (s - lo) / h;
        if x < 0.0 {
            out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
            return;
        }
        let k = (x.floor() as usize).min(c - 1);
        let frac = x - k as f64;
        let d = self.d;
        for (j, o) in out.iter_mut().enumerate() {
            let a = u[k * d + j];
            *o = if k + 1 < c && frac > 0.0 {
                a * (1.0 - frac) + u[(k + 1) * d + j] * frac
            } else {
                a
            };
        }
    }

    fn forcing(&self, u: &[C64]) -> Result<Vec<C64>> {
        let d = self.d;
        let mut g = vec![C64::new(0.0, 0.0); u.len()];
        g.par_chunks_mut(d)
            .enumerate()
            .try_for_each(|(i, out)| -> Result<(), EvalFault> {
                let t = self.working.axis_coord(0, i);
                let mut v = vec![C64::new(0.0, 0.0); d];
                self.delayed(u, t, &mut v);
                self.f.eval_into(&[t], &v, out)
            })?;
        Ok(g)
    }

    fn apply(&self, u: &[C64]) -> Result<Vec<C64>> {
        let g = self.forcing(u)?;
        let d = self.d;
        let h = self.working.spacing(0);
        let c = self.working.counts()[0];
        let mut out = vec![C64::new(0.0, 0.0); u.len()];
        for j in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..c - 1 {
                let e = self.step_factors[j][i];
                acc = acc * e + (g[i * d + j] * e + g[(i + 1) * d + j]) * (h / 2.0);
                out[(i + 1) * d + j] = acc;
            }
        }
        Ok(out)
    }
}

/// Mild solution of `u' = A(t)u + f(t, u(t−r))` for the diagonal surrogate
/// family, by iterating `Γu(t) = ∫_{t−Tₕ}^t U(t,s) f(s, u(s−r)) ds`.
pub fn delay_evolution_solve(p: &DelayProblem) -> Result<DelaySolution> {
    validate_tolerances(p.tol, p.max_iter)?;
    check_dim(1, p.grid.dim())?;
    let fam = &p.family;
    if fam.frequencies.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one retained frequency is required".into(),
        ));
    }
    let d = fam.frequencies.len();
    for coeff in [&fam.alpha, &fam.delta] {
        check_dim(1, coeff.dim())?;
        check_dim(1, coeff.range_dim())?;
    }
    check_dim(1, p.f.dim())?;
    check_dim(d, p.f.param_dim())?;
    check_dim(d, p.f.range_dim())?;
    if !(p.delay >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delay {} must be >= 0",
            p.delay
        )));
    }
    if p.grid.counts()[0] < 2 {
        return Err(Error::InvalidGrid(
            "delay grid needs at least 2 nodes".into(),
        ));
    }
    let h = p.grid.spacing(0);
    let (a, b) = (p.grid.lower()[0], p.grid.upper()[0]);

    // constants from the report grid first, to size the history window
    let report_alpha = eval_on_grid(&fam.alpha, &p.grid)?;
    let omega_guess = -report_alpha
        .values
        .iter()
        .map(|v| v.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(omega_guess > 0.0) {
        return Err(Error::Refusal(format!(
            "alpha must satisfy alpha <= -omega_tilde < 0 (max alpha = {})",
            -omega_guess
        )));
    }
    let history = p.history.unwrap_or(40.0 / omega_guess);
    if history < p.delay {
        return Err(Error::InvalidArgument(format!(
            "history depth {history} is shorter than the delay {}",
            p.delay
        )));
    }
    let extra = (history / h - 1e-9).ceil() as usize;
    let history_depth = extra as f64 * h;
    let working = BoxGrid::new(
        vec![a - history_depth],
        vec![b],
        vec![p.grid.counts()[0] + extra],
    )?;

    let alpha = eval_on_grid(&fam.alpha, &working)?;
    let delta = eval_on_grid(&fam.delta, &working)?;
    let omega_tilde = -alpha
        .values
        .iter()
        .map(|v| v.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let delta0 = delta
        .values
        .iter()
        .map(|v| v.re)
        .fold(f64::INFINITY, f64::min);
    if !(omega_tilde > 0.0) {
        return Err(Error::Refusal(format!(
            "alpha must satisfy alpha <= -omega_tilde < 0 (max alpha = {})",
            -omega_tilde
        )));
    }
    if delta0 < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "diffusion coefficient must be >= 0 (min delta = {delta0})"
        )));
    }
    let lambda = fam
        .frequencies
        .iter()
        .map(|x| x * x)
        .fold(f64::INFINITY, f64::min);
    let omega = omega_tilde + lambda * delta0;
    let q = p.lipschitz / omega;
    if !(q < 1.0) {
        return Err(Error::Refusal(format!(
            "contraction constant L/omega = {q} is not below 1"
        )));
    }
    let c = working.counts()[0];
    let step_factors: Vec<Vec<f64>> = fam
        .frequencies
        .iter()
        .map(|xi| {
            let rate = |i: usize| alpha.values[i].re - xi * xi * delta.values[i].re;
            (0..c - 1)
                .map(|i| (h / 2.0 * (rate(i) + rate(i + 1))).exp())
                .collect()
        })
        .collect();
    let op = DelayOperator {
        working: working.clone(),
        f: p.f.clone(),
        delay: p.delay,
        d,
        step_factors,
    };
    let u0 = match &p.start {
        Start::Natural | Start::Zero => vec![C64::new(0.0, 0.0); c * d],
        Start::Given(f) => {
            check_dim(d, f.range_dim())?;
            eval_on_grid(f, &working)?.values
        }
    };
    let (u, distances, residual, converged) = iterate(|u| op.apply(u), u0, d, p.tol, p.max_iter)?;
    let forcing_sup = op
        .forcing(&u)?
        .chunks(d)
        .map(crate::field::range_norm)
        .fold(0.0, f64::max);
    let values = GridValues {
        grid: p.grid.clone(),
        range_dim: d,
        values: u[extra * d..].to_vec(),
    };
    Ok(DelaySolution {
        solution: Solution {
            field: interpolant(values.clone()),
            values,
            trace: SolveTrace {
                iterations: distances.len(),
                observed_slack: observed_slack(&distances, q),
                distances,
                residual,
                q,
                converged,
                tol: p.tol,
                grid: working.clone(),
                start: p.start.describe("zero"),
            },
        },
        info: DelayInfo {
            constants: DecayConstants {
                omega_tilde,
                delta0,
                lambda,
                omega,
            },
            history_depth,
            truncation_bound: (-omega * history_depth).exp() * forcing_sup / omega,
            working_grid: working,
            history_init: "zero".into(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::Support;

    fn sin_kernel_problem(grid: BoxGrid) -> HammersteinProblem {
        let k = FieldFunction::real(1, |s| (-s[0].abs()).exp() / 4.0);
        HammersteinProblem {
            g: FieldFunction::real(1, |t| t[0].sin()),
            kernel: Kernel::new(k, Support::Full, 0.5).unwrap(),
            nonlinearity: ParamFieldFunction::from_fn(1, 1, 1, |_, y, out| out[0] = y[0].sin()),
            lipschitz: 1.0,
            grid,
            tol: 1e-8,
            max_iter: 40,
            start: Start::Natural,
        }
    }

    #[test]
    fn interpolant_is_multilinear() {
        let grid = BoxGrid::new(vec![0.0, 0.0], vec![1.0, 2.0], vec![3, 5]).unwrap();
        let f = FieldFunction::real(2, |t| 2.0 * t[0] - 3.0 * t[1] + 1.0);
        let it = interpolant(eval_on_grid(&f, &grid).unwrap());
        for t in [[0.3, 1.7], [1.0, 2.0], [0.0, 0.0], [0.77, 0.01]] {
            assert!((it.eval1(&t).unwrap() - f.eval1(&t).unwrap()).norm() < 1e-13);
        }
        assert!(it.eval(&[1.5, 0.0]).is_err());
    }

    #[test]
    fn zero_nonlinearity_returns_forcing() {
        let mut p = sin_kernel_problem(BoxGrid::with_step(0.0, 20.0, 0.1).unwrap());
        p.nonlinearity =
            ParamFieldFunction::from_fn(1, 1, 1, |_, _, out| out[0] = C64::new(0.0, 0.0));
        let s = hammerstein_solve(&p).unwrap();
        assert_eq!(s.trace.iterations, 1);
        assert_eq!(s.trace.residual, 0.0);
        assert_eq!(s.values.values, eval_on_grid(&p.g, &p.grid).unwrap().values);
    }

    #[test]
    fn sin_kernel_converges_geometrically() {
        let p = sin_kernel_problem(BoxGrid::with_step(-40.0, 80.0, 0.05).unwrap());
        let s = hammerstein_solve(&p).unwrap();
        let t = &s.trace;
        assert_eq!(t.q, 0.5);
        assert!(t.converged && t.iterations <= 40);
        assert!(t.residual <= 1e-8);
        for w in t.distances.windows(2) {
            assert!(w[1] <= 0.5 * w[0] * 1.1);
        }
        assert!(t.observed_slack <= 0.1);

        let mut p0 = p.clone();
        p0.start = Start::Zero;
        let s0 = hammerstein_solve(&p0).unwrap();
        assert!(s.values.sup_dist(&s0.values) <= 2.0 * p.tol / (1.0 - 0.5));
    }

    #[test]
    fn fixed_point_identity_holds_off_grid() {
        // y − g = k∗sin(y): check at an interior non-node point with an
        // independent fine quadrature of the interpolated solution
        let p = sin_kernel_problem(BoxGrid::with_step(-40.0, 80.0, 0.05).unwrap());
        let s = hammerstein_solve(&p).unwrap();
        let t0 = 20.0123;
        let fine = BoxGrid::with_step(-20.0, 60.0, 0.001).unwrap();
        let w = fine.trapezoid_weights();
        let conv: f64 = fine
            .nodes()
            .zip(&w)
            .map(|(s_, wi)| {
                wi * (-(t0 - s_[0]).abs()).exp() / 4.0 * s.field.eval1(&s_).unwrap().re.sin()
            })
            .sum();
        let lhs = s.field.eval1(&[t0]).unwrap().re - t0.sin();
        assert!((lhs - conv).abs() < 5e-4, "{lhs} vs {conv}");
    }

    #[test]
    fn refuses_non_contractions() {
        let mut p = sin_kernel_problem(BoxGrid::with_step(0.0, 10.0, 0.1).unwrap());
        p.lipschitz = 2.0;
        match hammerstein_solve(&p) {
            Err(Error::Refusal(m)) => assert!(m.contains("= 1")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reports_non_convergence() {
        let mut p = sin_kernel_problem(BoxGrid::with_step(0.0, 10.0, 0.1).unwrap());
        p.max_iter = 3;
        assert!(matches!(
            hammerstein_solve(&p),
            Err(Error::NonConvergence { iterations: 3, .. })
        ));
    }

    #[test]
    fn certificates() {
        let grid = BoxGrid::with_step(0.0, 10.0, 0.1).unwrap();
        let probes = vec![
            (
                FieldFunction::real(1, |t| t[0].sin()),
                FieldFunction::real(1, |t| t[0].cos()),
            ),
            (
                FieldFunction::zero(1, 1),
                FieldFunction::real(1, |t| 0.3 * t[0]),
            ),
            (FieldFunction::zero(1, 1), FieldFunction::zero(1, 1)),
        ];
        let id = contraction_certificate(|u| Ok(u.clone()), &probes, &grid).unwrap();
        assert!((id.estimate - 1.0).abs() < 1e-15);
        assert_eq!(id.skipped, vec![2]);
        let half = contraction_certificate(
            |u| {
                let u = u.clone();
                Ok(FieldFunction::from_fn(1, 1, move |t, out| {
                    u.eval_into(t, out).unwrap();
                    out[0] *= 0.5;
                }))
            },
            &probes,
            &grid,
        )
        .unwrap();
        assert!((half.estimate - 0.5).abs() < 1e-15);
        assert!(contraction_certificate(|u| Ok(u.clone()), &[], &grid).is_err());

        let p = sin_kernel_problem(BoxGrid::with_step(-40.0, 50.0, 0.05).unwrap());
        let map = hammerstein_map(&p).unwrap();
        let cert = contraction_certificate(map, &probes[..2], &p.grid).unwrap();
        assert!(cert.estimate <= 0.5 * 1.01);
    }

    fn scalar_family() -> EvolutionFamilySpec {
        EvolutionFamilySpec {
            alpha: FieldFunction::real(1, |_| -1.0),
            delta: FieldFunction::real(1, |_| 0.0),
            frequencies: vec![0.0],
        }
    }

    fn delay_problem(f: ParamFieldFunction, lipschitz: f64, delay: f64) -> DelayProblem {
        DelayProblem {
            family: scalar_family(),
            f,
            lipschitz,
            delay,
            grid: BoxGrid::with_step(0.0, 60.0, 0.01).unwrap(),
            history: None,
            tol: 1e-8,
            max_iter: 60,
            start: Start::Natural,
        }
    }

    fn quarter_sin_cos() -> ParamFieldFunction {
        ParamFieldFunction::from_fn(1, 1, 1, |t, v, out| out[0] = 0.25 * t[0].sin() * v[0].cos())
    }

    #[test]
    fn delay_instance_converges() {
        let s = delay_evolution_solve(&delay_problem(quarter_sin_cos(), 0.25, 1.0)).unwrap();
        let t = &s.solution.trace;
        assert_eq!(t.q, 0.25);
        assert!(t.residual <= 1e-8);
        for w in t.distances.windows(2) {
            assert!(w[1] <= 0.25 * w[0] * 1.1);
        }
        assert_eq!(s.info.constants.omega, 1.0);
        assert_eq!(s.info.history_depth, 40.0);
        assert!(s.info.truncation_bound < 1e-17);
        // |u| ≤ sup|f| / ω
        assert!(s.solution.values.sup_norm() <= 0.25 + 1e-9);
    }

    #[test]
    fn delay_zero_forcing_gives_zero() {
        let zero = ParamFieldFunction::from_fn(1, 1, 1, |_, _, out| out[0] = C64::new(0.0, 0.0));
        let s = delay_evolution_solve(&delay_problem(zero, 0.0, 1.0)).unwrap();
        assert!(s
            .solution
            .values
            .values
            .iter()
            .all(|v| *v == C64::new(0.0, 0.0)));
        assert_eq!(s.solution.trace.distances, vec![0.0]);
    }

    #[test]
    fn delay_free_forcing_matches_undelayed_path_and_closed_form() {
        let f = ParamFieldFunction::from_fn(1, 1, 1, |t, _, out| {
            out[0] = C64::new(0.25 * t[0].sin(), 0.0)
        });
        let a = delay_evolution_solve(&delay_problem(f.clone(), 0.25, 1.0)).unwrap();
        let b = delay_evolution_solve(&delay_problem(f, 0.25, 0.0)).unwrap();
        assert!(a.solution.values.sup_dist(&b.solution.values) <= 1e-8);
        // u' = −u + 0.25 sin t has the bounded solution 0.125 (sin t − cos t)
        for t in [0.0, 10.0, 33.3, 60.0] {
            let u = a.solution.field.eval1(&[t]).unwrap().re;
            assert!((u - 0.125 * (t.sin() - t.cos())).abs() < 1e-5, "t={t}");
        }
    }

    #[test]
    fn diagonal_family_decay_constants() {
        let family = EvolutionFamilySpec {
            alpha: FieldFunction::real(1, |t| -1.5 + 0.5 * t[0].sin()),
            delta: FieldFunction::real(1, |t| 1.0 + 0.5 * (2f64.sqrt() * t[0]).cos()),
            frequencies: vec![0.5, 1.0, 2.0],
        };
        let f = ParamFieldFunction::from_fn(1, 3, 3, |t, v, out| {
            for j in 0..3 {
                out[j] = 0.2 * (t[0] + j as f64).cos() + 0.2 * v[j].sin();
            }
        });
        let p = DelayProblem {
            family,
            f,
            lipschitz: 0.2,
            delay: 0.5,
            grid: BoxGrid::with_step(0.0, 40.0, 0.01).unwrap(),
            history: None,
            tol: 1e-9,
            max_iter: 60,
            start: Start::Natural,
        };
        let s = delay_evolution_solve(&p).unwrap();
        let c = &s.info.constants;
        assert!((c.omega_tilde - 1.0).abs() < 1e-4);
        assert!((c.delta0 - 0.5).abs() < 1e-4);
        assert_eq!(c.lambda, 0.25);
        assert!(s.solution.trace.q < 0.2);
        assert!(s.solution.trace.residual <= 1e-9);
    }

    #[test]
    fn delay_refusals() {
        let mut p = delay_problem(quarter_sin_cos(), 1.5, 1.0);
        assert!(matches!(delay_evolution_solve(&p), Err(Error::Refusal(_))));
        p.lipschitz = 0.25;
        p.history = Some(0.5);
        assert!(matches!(
            delay_evolution_solve(&p),
            Err(Error::InvalidArgument(_))
        ));
        p.history = None;
        p.family.alpha = FieldFunction::real(1, |t| t[0].sin());
        assert!(matches!(delay_evolution_solve(&p), Err(Error::Refusal(_))));
    }
}
