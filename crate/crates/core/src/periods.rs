//! ε-period search, relative-density verdicts, uniform recurrence,
//! supremum formula, C₀-decay and asymptotic-decomposition checks.
//!
//! Every statement here is about explicit finite grids. A τ-candidate is
//! accepted when `max_t ‖f(t+τ) − f(t)‖ ≤ ε` over the domain nodes.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::field::{
    euclid, eval_on_grid, range_dist, range_norm, sup_diff_against, BoxGrid, FieldFunction, Point,
    C64,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptedShift {
    /// Flat node index in the τ-grid.
    pub index: usize,
    pub tau: Vec<f64>,
    pub sup_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityVerdict {
    pub l: f64,
    pub relatively_dense: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsPeriodReport {
    pub epsilon: f64,
    pub domain: BoxGrid,
    pub tau_box: BoxGrid,
    pub tau_spacing: Vec<f64>,
    pub tested: usize,
    pub accepted: Vec<AcceptedShift>,
    /// Longest empty stretch along any axis-aligned line of the τ-grid.
    pub max_gap: f64,
    pub max_gap_per_axis: Vec<f64>,
    /// Upper bound for `sup_{t₀ ∈ tau box} dist(t₀, accepted)`: the largest
    /// node-to-accepted distance plus half a cell diagonal. `None` when
    /// nothing was accepted.
    pub covering_radius: Option<f64>,
    /// `relatively_dense` ⟺ every ball `B(t₀, l)` centred in the τ box meets
    /// an accepted τ, i.e. `covering_radius < l`.
    pub verdicts: Vec<DensityVerdict>,
}

impl EpsPeriodReport {
    pub fn accepted_taus(&self) -> Vec<Vec<f64>> {
        self.accepted.iter().map(|a| a.tau.clone()).collect()
    }

    pub fn accepted_indices(&self) -> Vec<usize> {
        self.accepted.iter().map(|a| a.index).collect()
    }

    /// Density verdict for an arbitrary `l`, from the stored covering radius.
    pub fn dense_at(&self, l: f64) -> bool {
        self.covering_radius.is_some_and(|r| r < l)
    }
}

/// Scans every node τ of `tau_box` and accepts those with
/// `sup_diff(f, τ, domain) ≤ ε`; density verdicts are produced for each `l`.
pub fn eps_period_search(
    f: &FieldFunction,
    epsilon: f64,
    domain: &BoxGrid,
    tau_box: &BoxGrid,
    ls: &[f64],
) -> Result<EpsPeriodReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {epsilon} must be > 0"
        )));
    }
    if tau_box.is_empty() {
        return Err(Error::InvalidGrid("empty tau box".into()));
    }
    if let Some(l) = ls.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "covering length {l} must be > 0"
        )));
    }
    check_dim(f.dim(), domain.dim())?;
    check_dim(f.dim(), tau_box.dim())?;
    let base = eval_on_grid(f, domain)?;
    let values: Vec<Option<f64>> = (0..tau_box.len())
        .into_par_iter()
        .map(|i| {
            let v = sup_diff_against(f, &tau_box.node(i), &base, Some(epsilon))?;
            Ok((v <= epsilon).then_some(v))
        })
        .collect::<Result<_>>()?;
    let flags: Vec<bool> = values.iter().map(Option::is_some).collect();
    let accepted = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| {
            v.map(|sup_diff| AcceptedShift {
                index: i,
                tau: tau_box.node(i),
                sup_diff,
            })
        })
        .collect();
    let max_gap_per_axis: Vec<f64> = (0..tau_box.dim())
        .map(|a| sweep_gap(tau_box, &flags, a))
        .collect();
    let max_gap = max_gap_per_axis.iter().copied().fold(0.0, f64::max);
    let half_diagonal = 0.5
        * euclid(
            &(0..tau_box.dim())
                .map(|a| tau_box.spacing(a))
                .collect::<Vec<_>>(),
        );
    let covering_radius = node_covering_radius(tau_box, &flags).map(|r| r + half_diagonal);
    let verdicts = ls
        .iter()
        .map(|&l| DensityVerdict {
            l,
            relatively_dense: covering_radius.is_some_and(|r| r < l),
        })
        .collect();
    Ok(EpsPeriodReport {
        epsilon,
        domain: domain.clone(),
        tau_box: tau_box.clone(),
        tau_spacing: (0..tau_box.dim()).map(|a| tau_box.spacing(a)).collect(),
        tested: tau_box.len(),
        accepted,
        max_gap,
        max_gap_per_axis,
        covering_radius,
        verdicts,
    })
}

fn strides(grid: &BoxGrid) -> Vec<usize> {
    let c = grid.counts();
    let mut s = vec![1usize; c.len()];
    for a in (0..c.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * c[a + 1];
    }
    s
}

/// Flat indices of the first node of every grid line parallel to `axis`.
fn line_starts(grid: &BoxGrid, axis: usize) -> impl Iterator<Item = usize> + '_ {
    (0..grid.len()).filter(move |&i| grid.multi_index(i)[axis] == 0)
}

fn sweep_gap(grid: &BoxGrid, flags: &[bool], axis: usize) -> f64 {
    let count = grid.counts()[axis];
    if count < 2 {
        return 0.0;
    }
    let stride = strides(grid)[axis];
    let coords = grid.axis_coords(axis);
    let (lo, hi) = (coords[0], coords[count - 1]);
    let mut worst = 0.0f64;
    for start in line_starts(grid, axis) {
        let mut prev: Option<f64> = None;
        let mut gap = 0.0f64;
        for (k, &x) in coords.iter().enumerate() {
            if flags[start + k * stride] {
                gap = gap.max(x - prev.unwrap_or(lo));
                prev = Some(x);
            }
        }
        gap = match prev {
            Some(p) => gap.max(hi - p),
            None => hi - lo,
        };
        worst = worst.max(gap);
    }
    worst
}

/// Squared-distance transform of a sampled function on sorted positions
/// (lower envelope of parabolas). Infinite entries mark absent sites.
fn distance_transform_1d(pos: &[f64], f: &[f64], out: &mut [f64]) {
    let mut v: Vec<usize> = Vec::with_capacity(pos.len());
    let mut z: Vec<f64> = Vec::with_capacity(pos.len());
    for q in 0..pos.len() {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let Some(&p) = v.last() else {
                v.push(q);
                z.push(f64::NEG_INFINITY);
                break;
            };
            let s =
                ((f[q] + pos[q] * pos[q]) - (f[p] + pos[p] * pos[p])) / (2.0 * (pos[q] - pos[p]));
            if s <= *z.last().expect("parallel to v") {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < pos[q] {
            k += 1;
        }
        let d = pos[q] - pos[v[k]];
        *o = d * d + f[v[k]];
    }
}

/// Largest Euclidean distance from a grid node to the nearest flagged node.
fn node_covering_radius(grid: &BoxGrid, flags: &[bool]) -> Option<f64> {
    if !flags.iter().any(|&b| b) {
        return None;
    }
    let mut dist: Vec<f64> = flags
        .iter()
        .map(|&b| if b { 0.0 } else { f64::INFINITY })
        .collect();
    let st = strides(grid);
    for axis in 0..grid.dim() {
        let count = grid.counts()[axis];
        if count < 2 {
            continue;
        }
        let pos = grid.axis_coords(axis);
        let mut line = vec![0.0; count];
        let mut out = vec![0.0; count];
        for start in line_starts(grid, axis) {
            for k in 0..count {
                line[k] = dist[start + k * st[axis]];
            }
            distance_transform_1d(&pos, &line, &mut out);
            for k in 0..count {
                dist[start + k * st[axis]] = out[k];
            }
        }
    }
    Some(dist.into_iter().fold(0.0, f64::max).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub taus: Vec<Vec<f64>>,
    pub tau_norms: Vec<f64>,
    pub sup_diffs: Vec<f64>,
    /// Whether the sup-diff values are nonincreasing along the sequence.
    pub monotone_envelope: bool,
    pub last_value: f64,
    /// Least-squares slope of `ln sup_diff` against the sequence index over
    /// the positive values; `None` with fewer than two of them.
    pub log_slope: Option<f64>,
}

/// Sup-diff of `f` along a sequence of shifts with nondecreasing norms.
pub fn recurrence_check(
    f: &FieldFunction,
    taus: &[Point],
    domain: &BoxGrid,
) -> Result<RecurrenceReport> {
    if taus.is_empty() {
        return Err(Error::InvalidArgument("empty shift sequence".into()));
    }
    check_dim(f.dim(), domain.dim())?;
    for tau in taus {
        check_dim(f.dim(), tau.dim())?;
    }
    let tau_norms: Vec<f64> = taus.iter().map(Point::norm).collect();
    if tau_norms.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "shift norms must be nondecreasing".into(),
        ));
    }
    let base = eval_on_grid(f, domain)?;
    let sup_diffs: Vec<f64> = taus
        .par_iter()
        .map(|tau| sup_diff_against(f, tau.coords(), &base, None))
        .collect::<Result<_>>()?;
    let positive: Vec<(f64, f64)> = sup_diffs
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(k, v)| (k as f64, v.ln()))
        .collect();
    let log_slope = (positive.len() >= 2).then(|| {
        let m = positive.len() as f64;
        let mx = positive.iter().map(|p| p.0).sum::<f64>() / m;
        let my = positive.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = positive.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = positive.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
        sxy / sxx
    });
    Ok(RecurrenceReport {
        taus: taus.iter().map(|t| t.coords().to_vec()).collect(),
        tau_norms,
        monotone_envelope: sup_diffs.windows(2).all(|w| w[1] <= w[0]),
        last_value: *sup_diffs.last().expect("nonempty"),
        sup_diffs,
        log_slope,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupremumReport {
    pub radius: f64,
    pub full_sup: f64,
    pub truncated_sup: f64,
    pub nodes: usize,
    pub nodes_beyond: usize,
}

/// `sup ‖f‖` over all domain nodes and over the nodes with `|t| ≥ a`.
pub fn supremum_formula_check(
    f: &FieldFunction,
    a: f64,
    domain: &BoxGrid,
) -> Result<SupremumReport> {
    let values = eval_on_grid(f, domain)?;
    let (mut full, mut truncated, mut beyond) = (0.0f64, 0.0f64, 0usize);
    let mut t = vec![0.0; domain.dim()];
    for i in 0..domain.len() {
        domain.node_into(i, &mut t);
        let v = range_norm(values.at(i));
        full = full.max(v);
        if euclid(&t) >= a {
            truncated = truncated.max(v);
            beyond += 1;
        }
    }
    if beyond == 0 {
        return Err(Error::InvalidArgument(format!(
            "no domain nodes with |t| >= {a}"
        )));
    }
    Ok(SupremumReport {
        radius: a,
        full_sup: full,
        truncated_sup: truncated,
        nodes: domain.len(),
        nodes_beyond: beyond,
    })
}

/// Region `𝔻` on which decay and windowed tests are evaluated.
#[derive(Clone)]
pub enum Mask {
    Full,
    /// `tᵢ ≥ 0` for every coordinate.
    Orthant,
    /// `t₁ ≥ 0` and `c₁t₁ ≤ t₂ ≤ c₂t₁` (two variables).
    DiagonalSector {
        c1: f64,
        c2: f64,
    },
    Custom(Arc<dyn Fn(&[f64]) -> bool + Send + Sync>, String),
}

impl Mask {
    pub fn custom<F>(description: impl Into<String>, pred: F) -> Self
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        Mask::Custom(Arc::new(pred), description.into())
    }

    pub fn contains(&self, t: &[f64]) -> bool {
        match self {
            Mask::Full => true,
            Mask::Orthant => t.iter().all(|&x| x >= 0.0),
            Mask::DiagonalSector { c1, c2 } => {
                t.len() >= 2 && t[0] >= 0.0 && c1 * t[0] <= t[1] && t[1] <= c2 * t[0]
            }
            Mask::Custom(p, _) => p(t),
        }
    }
}

impl fmt::Display for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mask::Full => write!(f, "full"),
            Mask::Orthant => write!(f, "orthant"),
            Mask::DiagonalSector { c1, c2 } => write!(f, "sector({c1},{c2})"),
            Mask::Custom(_, d) => write!(f, "custom({d})"),
        }
    }
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub mask: String,
    pub radii: Vec<f64>,
    /// `max ‖q(t)‖` over masked nodes with `|t| ≥ R`, per radius.
    pub suprema: Vec<f64>,
    pub nodes_per_radius: Vec<usize>,
    pub strictly_decreasing: bool,
    pub tolerance: f64,
    pub below_tolerance: bool,
    /// Nonincreasing suprema that are strictly decreasing or end below the tolerance.
    pub verdict: bool,
}

pub fn decay_check(
    q: &FieldFunction,
    mask: &Mask,
    radii: &[f64],
    domain: &BoxGrid,
    tolerance: f64,
) -> Result<DecayReport> {
    if radii.is_empty() || radii[0] < 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "radii must be nonnegative and strictly increasing".into(),
        ));
    }
    check_dim(q.dim(), domain.dim())?;
    let d = q.range_dim();
    let samples: Vec<(f64, f64)> = (0..domain.len())
        .into_par_iter()
        .filter_map(|i| {
            let t = domain.node(i);
            if !mask.contains(&t) {
                return None;
            }
            let mut out = vec![C64::new(0.0, 0.0); d];
            Some(
                q.eval_into(&t, &mut out)
                    .map(|_| (euclid(&t), range_norm(&out))),
            )
        })
        .collect::<std::result::Result<_, _>>()?;
    let mut suprema = Vec::with_capacity(radii.len());
    let mut nodes_per_radius = Vec::with_capacity(radii.len());
    for &r in radii {
        let (count, sup) = samples
            .iter()
            .filter(|(norm, _)| *norm >= r)
            .fold((0usize, 0.0f64), |(c, s), (_, v)| (c + 1, s.max(*v)));
        if count == 0 {
            return Err(Error::InvalidArgument(format!(
                "no masked nodes with |t| >= {r} ({mask})"
            )));
        }
        suprema.push(sup);
        nodes_per_radius.push(count);
    }
    let strictly_decreasing = suprema.windows(2).all(|w| w[1] < w[0]);
    let nonincreasing = suprema.windows(2).all(|w| w[1] <= w[0]);
    let below_tolerance = *suprema.last().expect("nonempty") <= tolerance;
    Ok(DecayReport {
        mask: mask.to_string(),
        radii: radii.to_vec(),
        suprema,
        nodes_per_radius,
        strictly_decreasing,
        tolerance,
        below_tolerance,
        verdict: nonincreasing && (strictly_decreasing || below_tolerance),
    })
}

/// Inputs of [`asymptotic_split_check`] beyond the three functions.
#[derive(Clone, Debug)]
pub struct SplitCheck {
    pub domain: BoxGrid,
    pub mask: Mask,
    pub radii: Vec<f64>,
    pub epsilon: f64,
    pub decay_tolerance: f64,
    pub tau_box: BoxGrid,
    pub l: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub max_mismatch: f64,
    /// Node where `‖f − (g + q)‖` is largest.
    pub worst_node: Vec<f64>,
    pub pointwise_ok: bool,
    pub decay: DecayReport,
    pub periods: EpsPeriodReport,
    pub periods_ok: bool,
    pub pass: bool,
}

/// Checks `f = g + q` on the grid within ε, decay of `q` on the mask, and a
/// nonempty relatively dense ε-period set of `g` at the caller's `l`.
pub fn asymptotic_split_check(
    f: &FieldFunction,
    g: &FieldFunction,
    q: &FieldFunction,
    check: &SplitCheck,
) -> Result<SplitReport> {
    for h in [g, q] {
        check_dim(f.dim(), h.dim())?;
        check_dim(f.range_dim(), h.range_dim())?;
    }
    let fv = eval_on_grid(f, &check.domain)?;
    let gv = eval_on_grid(g, &check.domain)?;
    let qv = eval_on_grid(q, &check.domain)?;
    let d = f.range_dim();
    let mut worst = (0.0f64, 0usize);
    let mut sum = vec![C64::new(0.0, 0.0); d];
    for i in 0..check.domain.len() {
        for ((s, a), b) in sum.iter_mut().zip(gv.at(i)).zip(qv.at(i)) {
            *s = a + b;
        }
        let m = range_dist(fv.at(i), &sum);
        if m > worst.0 {
            worst = (m, i);
        }
    }
    let decay = decay_check(
        q,
        &check.mask,
        &check.radii,
        &check.domain,
        check.decay_tolerance,
    )?;
    let periods = eps_period_search(g, check.epsilon, &check.domain, &check.tau_box, &[check.l])?;
    let pointwise_ok = worst.0 <= check.epsilon;
    let periods_ok = !periods.accepted.is_empty() && periods.verdicts[0].relatively_dense;
    Ok(SplitReport {
        max_mismatch: worst.0,
        worst_node: check.domain.node(worst.1),
        pointwise_ok,
        pass: pointwise_ok && decay.verdict && periods_ok,
        decay,
        periods,
        periods_ok,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowedDiff {
    pub m: f64,
    /// `max ‖f(t+τ) − f(t)‖` over nodes with `t, t+τ ∈ 𝔻_M`.
    pub value: f64,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowedReport {
    pub mask: String,
    pub tau: Vec<f64>,
    pub epsilon: f64,
    pub windows: Vec<WindowedDiff>,
    pub nonincreasing: bool,
    /// Last window's value is at most ε.
    pub pass: bool,
}

/// Type-1 windowed test: the sup-diff at a fixed τ restricted to
/// `𝔻_M = {t ∈ 𝔻 : |t| ≥ M}` for each `M`.
pub fn windowed_check(
    f: &FieldFunction,
    tau: &Point,
    domain: &BoxGrid,
    mask: &Mask,
    ms: &[f64],
    epsilon: f64,
) -> Result<WindowedReport> {
    check_dim(f.dim(), domain.dim())?;
    check_dim(f.dim(), tau.dim())?;
    if ms.is_empty() || ms.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "window radii must be strictly increasing".into(),
        ));
    }
    let tau = tau.coords();
    let d = f.range_dim();
    // (min(|t|, |t+τ|), diff) over node pairs inside the mask
    let pairs: Vec<(f64, f64)> = (0..domain.len())
        .into_par_iter()
        .filter_map(|i| {
            let t = domain.node(i);
            let s: Vec<f64> = t.iter().zip(tau).map(|(a, b)| a + b).collect();
            if !(mask.contains(&t) && mask.contains(&s)) {
                return None;
            }
            let mut a = vec![C64::new(0.0, 0.0); d];
            let mut b = vec![C64::new(0.0, 0.0); d];
            Some(
                f.eval_into(&t, &mut a)
                    .and_then(|_| f.eval_into(&s, &mut b))
                    .map(|_| (euclid(&t).min(euclid(&s)), range_dist(&a, &b))),
            )
        })
        .collect::<std::result::Result<_, _>>()?;
    let mut windows = Vec::with_capacity(ms.len());
    for &m in ms {
        let (nodes, value) = pairs
            .iter()
            .filter(|(r, _)| *r >= m)
            .fold((0usize, 0.0f64), |(c, s), (_, v)| (c + 1, s.max(*v)));
        if nodes == 0 {
            return Err(Error::InvalidArgument(format!(
                "no node pairs in the window M = {m} ({mask})"
            )));
        }
        windows.push(WindowedDiff { m, value, nodes });
    }
    Ok(WindowedReport {
        mask: mask.to_string(),
        tau: tau.to_vec(),
        epsilon,
        nonincreasing: windows.windows(2).all(|w| w[1].value <= w[0].value),
        pass: windows.last().expect("nonempty").value <= epsilon,
        windows,
    })
}
