//! Function model and grid machinery.
//!
//! Every analysis in this crate runs over a [`BoxGrid`]: a finite, axis-aligned
//! box with a fixed number of nodes per axis (endpoints included). Suprema and
//! averages over unbounded domains are always replaced by their values on such
//! a grid, so every result is a statement about the grid it was computed on.
//!
//! Functions are black boxes `ℝⁿ → ℂᵈ` behind the [`Field`] trait. The range
//! norm is the Euclidean norm on `ℂᵈ`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, EvalFault, Result};

pub type C64 = Complex64;

/// Nodes handled per parallel work item in grid scans.
pub(crate) const SCAN_CHUNK: usize = 512;

/// A point of ℝⁿ with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument(
                "point must have dimension >= 1".into(),
            ));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "point coordinate {bad} is not finite"
            )));
        }
        Ok(Point(coords))
    }

    pub fn zeros(n: usize) -> Self {
        Point(vec![0.0; n.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        euclid(&self.0)
    }

    pub fn neg(&self) -> Point {
        Point(self.0.iter().map(|c| -c).collect())
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Vec<f64> {
        p.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl FromStr for Point {
    type Err = Error;
    /// Comma-separated coordinates, e.g. `1,-2.5`.
    fn from_str(s: &str) -> Result<Self> {
        let coords = s
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad coordinate `{c}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Point::new(coords)
    }
}

pub(crate) fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Euclidean norm on ℂᵈ.
pub fn range_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Euclidean norm of `a - b` on ℂᵈ.
pub fn range_dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Axis-aligned box `[a₁,b₁]×…×[aₙ,bₙ]` with `counts[i]` nodes on axis `i`,
/// both endpoints included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxGrid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    counts: Vec<usize>,
}

impl BoxGrid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let n = lower.len();
        if n == 0 {
            return Err(Error::InvalidGrid(
                "grid must have at least one axis".into(),
            ));
        }
        if upper.len() != n || counts.len() != n {
            return Err(Error::InvalidGrid(format!(
                "axis count mismatch: {} lower, {} upper, {} counts",
                n,
                upper.len(),
                counts.len()
            )));
        }
        for i in 0..n {
            if !lower[i].is_finite() || !upper[i].is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "axis {i} has non-finite bounds"
                )));
            }
            if lower[i] >= upper[i] {
                return Err(Error::InvalidGrid(format!(
                    "axis {i}: lower {} must be < upper {}",
                    lower[i], upper[i]
                )));
            }
            if counts[i] == 0 {
                return Err(Error::InvalidGrid(format!("axis {i} has zero nodes")));
            }
        }
        counts
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c))
            .ok_or_else(|| Error::InvalidGrid("total node count overflows".into()))?;
        Ok(BoxGrid {
            lower,
            upper,
            counts,
        })
    }

    pub fn interval(lo: f64, hi: f64, count: usize) -> Result<Self> {
        BoxGrid::new(vec![lo], vec![hi], vec![count])
    }

    pub fn cube(n: usize, lo: f64, hi: f64, count: usize) -> Result<Self> {
        BoxGrid::new(vec![lo; n], vec![hi; n], vec![count; n])
    }

    /// Grid on `[lo, hi]` whose spacing is (at most) `step`.
    pub fn with_step(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidGrid(format!("step {step} must be positive")));
        }
        let cells = ((hi - lo) / step).round().max(1.0) as usize;
        BoxGrid::interval(lo, hi, cells + 1)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| b - a)
            .product()
    }

    /// Node spacing on `axis`; zero for single-node axes.
    pub fn spacing(&self, axis: usize) -> f64 {
        let c = self.counts[axis];
        if c < 2 {
            0.0
        } else {
            (self.upper[axis] - self.lower[axis]) / (c - 1) as f64
        }
    }

    pub fn axis_coord(&self, axis: usize, k: usize) -> f64 {
        let c = self.counts[axis];
        if c < 2 {
            return self.lower[axis];
        }
        if k + 1 == c {
            return self.upper[axis];
        }
        let (a, b) = (self.lower[axis], self.upper[axis]);
        a + (b - a) * (k as f64) / ((c - 1) as f64)
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.counts[axis])
            .map(|k| self.axis_coord(axis, k))
            .collect()
    }

    /// Multi-index of node `index`; the first axis varies slowest.
    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = index % self.counts[axis];
            index /= self.counts[axis];
        }
        idx
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.counts)
            .fold(0, |acc, (&k, &c)| acc * c + k)
    }

    pub fn node_into(&self, mut index: usize, out: &mut [f64]) {
        for axis in (0..self.dim()).rev() {
            let c = self.counts[axis];
            out[axis] = self.axis_coord(axis, index % c);
            index /= c;
        }
    }

    pub fn node(&self, index: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        self.node_into(index, &mut p);
        p
    }

    pub fn nodes(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.node(i))
    }

    /// Per-axis composite trapezoid weights.
    pub fn axis_weights(&self, axis: usize) -> Vec<f64> {
        let c = self.counts[axis];
        if c < 2 {
            return vec![1.0];
        }
        let h = self.spacing(axis);
        let mut w = vec![h; c];
        w[0] = h / 2.0;
        w[c - 1] = h / 2.0;
        w
    }

    /// Tensor-product trapezoid weights for every node, in node order.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.axis_weights(a)).collect();
        let mut out = Vec::with_capacity(self.len());
        let mut idx = vec![0usize; self.dim()];
        for _ in 0..self.len() {
            out.push(
                idx.iter()
                    .enumerate()
                    .map(|(a, &k)| per_axis[a][k])
                    .product(),
            );
            for axis in (0..self.dim()).rev() {
                idx[axis] += 1;
                if idx[axis] < self.counts[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
        out
    }

    /// The same grid translated by `by`.
    pub fn shifted(&self, by: &[f64]) -> Result<BoxGrid> {
        check_dim(self.dim(), by.len())?;
        BoxGrid::new(
            self.lower.iter().zip(by).map(|(a, s)| a + s).collect(),
            self.upper.iter().zip(by).map(|(b, s)| b + s).collect(),
            self.counts.clone(),
        )
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .enumerate()
            .all(|(i, &x)| x >= self.lower[i] && x <= self.upper[i])
    }
}

impl fmt::Display for BoxGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}:{}:{}", self.lower[i], self.upper[i], self.counts[i])?;
        }
        Ok(())
    }
}

impl FromStr for BoxGrid {
    type Err = Error;
    /// `lo:hi:count` per axis, axes joined by commas.
    fn from_str(s: &str) -> Result<Self> {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let mut counts = Vec::new();
        for axis in s.split(',') {
            let parts: Vec<&str> = axis.trim().split(':').collect();
            if parts.len() != 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis `{axis}` is not of the form lo:hi:count"
                )));
            }
            let bad = |what: &str| Error::InvalidGrid(format!("bad {what} in axis `{axis}`"));
            lower.push(
                parts[0]
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| bad("lower bound"))?,
            );
            upper.push(
                parts[1]
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| bad("upper bound"))?,
            );
            counts.push(parts[2].trim().parse::<usize>().map_err(|_| bad("count"))?);
        }
        BoxGrid::new(lower, upper, counts)
    }
}

/// A deterministic function `ℝⁿ → ℂᵈ`.
pub trait Field: Send + Sync {
    fn dim(&self) -> usize;
    fn range_dim(&self) -> usize;
    /// Writes `f(t)` into `out` (length `range_dim`).
    fn eval_into(&self, t: &[f64], out: &mut [C64]) -> Result<(), EvalFault>;
}

/// A deterministic function `ℝⁿ × ℂᵖ → ℂᵈ`.
pub trait ParamField: Send + Sync {
    fn dim(&self) -> usize;
    fn param_dim(&self) -> usize;
    fn range_dim(&self) -> usize;
    fn eval_into(&self, t: &[f64], x: &[C64], out: &mut [C64]) -> Result<(), EvalFault>;
}

struct FnField<F> {
    n: usize,
    d: usize,
    f: F,
}

impl<F> Field for FnField<F>
where
    F: Fn(&[f64], &mut [C64]) -> Result<(), EvalFault> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }
    fn range_dim(&self) -> usize {
        self.d
    }
    fn eval_into(&self, t: &[f64], out: &mut [C64]) -> Result<(), EvalFault> {
        (self.f)(t, out)
    }
}

/// Shared handle to a [`Field`] with an optional label.
#[derive(Clone)]
pub struct FieldFunction {
    inner: Arc<dyn Field>,
    label: Option<Arc<str>>,
}

impl fmt::Debug for FieldFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldFunction")
            .field("dim", &self.dim())
            .field("range_dim", &self.range_dim())
            .field("label", &self.label)
            .finish()
    }
}

impl FieldFunction {
    pub fn new<T: Field + 'static>(field: T) -> Self {
        FieldFunction {
            inner: Arc::new(field),
            label: None,
        }
    }

    pub fn from_arc(inner: Arc<dyn Field>) -> Self {
        FieldFunction { inner, label: None }
    }

    /// Fallible closure `(t, out)`.
    pub fn try_from_fn<F>(n: usize, d: usize, f: F) -> Self
    where
        F: Fn(&[f64], &mut [C64]) -> Result<(), EvalFault> + Send + Sync + 'static,
    {
        FieldFunction::new(FnField { n, d, f })
    }

    pub fn from_fn<F>(n: usize, d: usize, f: F) -> Self
    where
        F: Fn(&[f64], &mut [C64]) + Send + Sync + 'static,
    {
        FieldFunction::try_from_fn(n, d, move |t, out| {
            f(t, out);
            Ok(())
        })
    }

    pub fn scalar<F>(n: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> C64 + Send + Sync + 'static,
    {
        FieldFunction::from_fn(n, 1, move |t, out| out[0] = f(t))
    }

    pub fn real<F>(n: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        FieldFunction::from_fn(n, 1, move |t, out| out[0] = C64::new(f(t), 0.0))
    }

    pub fn constant(n: usize, value: Vec<C64>) -> Self {
        let d = value.len();
        FieldFunction::from_fn(n, d, move |_, out| out.copy_from_slice(&value))
    }

    pub fn zero(n: usize, d: usize) -> Self {
        FieldFunction::constant(n, vec![C64::new(0.0, 0.0); d])
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(Arc::from(label.into()));
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn range_dim(&self) -> usize {
        self.inner.range_dim()
    }

    #[inline]
    pub fn eval_into(&self, t: &[f64], out: &mut [C64]) -> Result<(), EvalFault> {
        self.inner.eval_into(t, out)
    }

    pub fn eval(&self, t: &[f64]) -> Result<Vec<C64>> {
        check_dim(self.dim(), t.len())?;
        let mut out = vec![C64::new(0.0, 0.0); self.range_dim()];
        self.inner.eval_into(t, &mut out)?;
        Ok(out)
    }

    /// First range component at `t`.
    pub fn eval1(&self, t: &[f64]) -> Result<C64> {
        Ok(self.eval(t)?[0])
    }

    /// `t ↦ f(t + tau)`.
    pub fn translate(&self, tau: &[f64]) -> Result<FieldFunction> {
        check_dim(self.dim(), tau.len())?;
        let inner = self.clone();
        let tau = tau.to_vec();
        let n = self.dim();
        Ok(FieldFunction::try_from_fn(
            n,
            self.range_dim(),
            move |t, out| {
                let mut s = [0.0f64; 8];
                if n <= 8 {
                    for i in 0..n {
                        s[i] = t[i] + tau[i];
                    }
                    inner.eval_into(&s[..n], out)
                } else {
                    let s: Vec<f64> = t.iter().zip(&tau).map(|(a, b)| a + b).collect();
                    inner.eval_into(&s, out)
                }
            },
        ))
    }

    /// Range-stacks several functions on the same domain: `t ↦ (f₁(t), …, f_k(t))`.
    pub fn stack(parts: &[FieldFunction]) -> Result<FieldFunction> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to stack".into()))?;
        let n = first.dim();
        for p in parts {
            check_dim(n, p.dim())?;
        }
        let d = parts.iter().map(|p| p.range_dim()).sum();
        let parts = parts.to_vec();
        Ok(FieldFunction::try_from_fn(n, d, move |t, out| {
            let mut offset = 0;
            for p in &parts {
                let k = p.range_dim();
                p.eval_into(t, &mut out[offset..offset + k])?;
                offset += k;
            }
            Ok(())
        }))
    }

    /// Pointwise `self + other`.
    pub fn add(&self, other: &FieldFunction) -> Result<FieldFunction> {
        self.combine(other, C64::new(1.0, 0.0), C64::new(1.0, 0.0))
    }

    /// Pointwise `a·self + b·other`.
    pub fn combine(&self, other: &FieldFunction, a: C64, b: C64) -> Result<FieldFunction> {
        check_dim(self.dim(), other.dim())?;
        check_dim(self.range_dim(), other.range_dim())?;
        let (f, g) = (self.clone(), other.clone());
        let d = self.range_dim();
        Ok(FieldFunction::try_from_fn(self.dim(), d, move |t, out| {
            let mut tmp = vec![C64::new(0.0, 0.0); d];
            f.eval_into(t, out)?;
            g.eval_into(t, &mut tmp)?;
            for (o, v) in out.iter_mut().zip(&tmp) {
                *o = a * *o + b * v;
            }
            Ok(())
        }))
    }
}

struct FnParamField<F> {
    n: usize,
    p: usize,
    d: usize,
    f: F,
}

impl<F> ParamField for FnParamField<F>
where
    F: Fn(&[f64], &[C64], &mut [C64]) -> Result<(), EvalFault> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }
    fn param_dim(&self) -> usize {
        self.p
    }
    fn range_dim(&self) -> usize {
        self.d
    }
    fn eval_into(&self, t: &[f64], x: &[C64], out: &mut [C64]) -> Result<(), EvalFault> {
        (self.f)(t, x, out)
    }
}

/// Shared handle to a [`ParamField`].
#[derive(Clone)]
pub struct ParamFieldFunction {
    inner: Arc<dyn ParamField>,
}

impl fmt::Debug for ParamFieldFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamFieldFunction")
            .field("dim", &self.dim())
            .field("param_dim", &self.param_dim())
            .field("range_dim", &self.range_dim())
            .finish()
    }
}

impl ParamFieldFunction {
    pub fn new<T: ParamField + 'static>(field: T) -> Self {
        ParamFieldFunction {
            inner: Arc::new(field),
        }
    }

    pub fn try_from_fn<F>(n: usize, p: usize, d: usize, f: F) -> Self
    where
        F: Fn(&[f64], &[C64], &mut [C64]) -> Result<(), EvalFault> + Send + Sync + 'static,
    {
        ParamFieldFunction::new(FnParamField { n, p, d, f })
    }

    pub fn from_fn<F>(n: usize, p: usize, d: usize, f: F) -> Self
    where
        F: Fn(&[f64], &[C64], &mut [C64]) + Send + Sync + 'static,
    {
        ParamFieldFunction::try_from_fn(n, p, d, move |t, x, out| {
            f(t, x, out);
            Ok(())
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn param_dim(&self) -> usize {
        self.inner.param_dim()
    }

    pub fn range_dim(&self) -> usize {
        self.inner.range_dim()
    }

    #[inline]
    pub fn eval_into(&self, t: &[f64], x: &[C64], out: &mut [C64]) -> Result<(), EvalFault> {
        self.inner.eval_into(t, x, out)
    }

    pub fn eval(&self, t: &[f64], x: &[C64]) -> Result<Vec<C64>> {
        check_dim(self.dim(), t.len())?;
        check_dim(self.param_dim(), x.len())?;
        let mut out = vec![C64::new(0.0, 0.0); self.range_dim()];
        self.inner.eval_into(t, x, &mut out)?;
        Ok(out)
    }
}

/// Values of a function sampled at every node of a grid.
#[derive(Clone, Debug)]
pub struct GridValues {
    pub grid: BoxGrid,
    pub range_dim: usize,
    /// Node-major: entries `[i*d, (i+1)*d)` belong to node `i`.
    pub values: Vec<C64>,
}

impl GridValues {
    pub fn at(&self, node: usize) -> &[C64] {
        &self.values[node * self.range_dim..(node + 1) * self.range_dim]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest range norm over all nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .chunks(self.range_dim)
            .map(range_norm)
            .fold(0.0, f64::max)
    }

    /// Largest node-wise distance to `other` (same grid layout).
    pub fn sup_dist(&self, other: &GridValues) -> f64 {
        self.values
            .chunks(self.range_dim)
            .zip(other.values.chunks(other.range_dim))
            .map(|(a, b)| range_dist(a, b))
            .fold(0.0, f64::max)
    }
}

/// Samples `f` at every node of `grid`.
pub fn eval_on_grid(f: &FieldFunction, grid: &BoxGrid) -> Result<GridValues> {
    check_dim(f.dim(), grid.dim())?;
    let d = f.range_dim();
    let n = grid.dim();
    let mut values = vec![C64::new(0.0, 0.0); grid.len() * d];
    values
        .par_chunks_mut(SCAN_CHUNK * d)
        .enumerate()
        .try_for_each(|(chunk, out)| -> Result<(), EvalFault> {
            let mut t = vec![0.0; n];
            for (j, slot) in out.chunks_mut(d).enumerate() {
                grid.node_into(chunk * SCAN_CHUNK + j, &mut t);
                f.eval_into(&t, slot)?;
            }
            Ok(())
        })?;
    Ok(GridValues {
        grid: grid.clone(),
        range_dim: d,
        values,
    })
}

/// `max_t ‖f(t+τ) − f(t)‖` over the nodes `t` of `grid`.
pub fn sup_diff(f: &FieldFunction, tau: &[f64], grid: &BoxGrid) -> Result<f64> {
    check_dim(f.dim(), grid.dim())?;
    check_dim(f.dim(), tau.len())?;
    let base = eval_on_grid(f, grid)?;
    sup_diff_against(f, tau, &base, None)
}

/// `sup_diff` against precomputed base values. With `cutoff = Some(c)` the
/// scan stops at the first node whose difference exceeds `c`, returning that
/// difference (a lower bound on the full supremum).
pub(crate) fn sup_diff_against(
    f: &FieldFunction,
    tau: &[f64],
    base: &GridValues,
    cutoff: Option<f64>,
) -> Result<f64> {
    let grid = &base.grid;
    let n = grid.dim();
    let d = base.range_dim;
    let mut t = vec![0.0; n];
    let mut shifted = vec![C64::new(0.0, 0.0); d];
    let mut worst = 0.0f64;
    for i in 0..grid.len() {
        grid.node_into(i, &mut t);
        for (x, s) in t.iter_mut().zip(tau) {
            *x += s;
        }
        f.eval_into(&t, &mut shifted)?;
        let diff = range_dist(&shifted, base.at(i));
        if diff > worst {
            worst = diff;
            if let Some(c) = cutoff {
                if worst > c {
                    return Ok(worst);
                }
            }
        }
    }
    Ok(worst)
}

/// `t ↦ f(t + τ)`.
pub fn translate(f: &FieldFunction, tau: &Point) -> Result<FieldFunction> {
    f.translate(tau.coords())
}
