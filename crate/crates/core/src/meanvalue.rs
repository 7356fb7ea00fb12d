//! Mean values, Bohr–Fourier coefficients and candidate-driven spectrum
//! scans, estimated by averaging over the expanding cubes `s + [−T, T]ⁿ`.
//!
//! Each partial average is a tensor-product trapezoid quadrature divided by
//! `(2T)ⁿ`. Reports carry the gap between the last two partial averages as
//! Cauchy-style evidence; no convergence is asserted.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::field::{
    eval_on_grid, range_dist, range_norm, BoxGrid, FieldFunction, GridValues, Point, C64,
    SCAN_CHUNK,
};

/// How many quadrature nodes to place on each axis of `s + [−T, T]ⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRule {
    /// Fixed count per axis for every `T`.
    PerAxis(usize),
    /// `⌈2T·per_unit⌉ + 1` per axis, capped so the total stays within `budget`.
    Density { per_unit: f64, budget: usize },
}

impl Default for NodeRule {
    fn default() -> Self {
        NodeRule::Density {
            per_unit: 64.0,
            budget: 4_000_000,
        }
    }
}

impl NodeRule {
    pub fn nodes_per_axis(&self, half_width: f64, dim: usize) -> usize {
        match *self {
            NodeRule::PerAxis(k) => k,
            NodeRule::Density { per_unit, budget } => {
                let want = (2.0 * half_width * per_unit).ceil() as usize + 1;
                let cap = (budget as f64).powf(1.0 / dim as f64).floor() as usize;
                want.min(cap).max(2)
            }
        }
    }
}

/// Averaging parameters shared by every estimator in this module.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Averaging {
    pub t_seq: Vec<f64>,
    pub nodes: NodeRule,
}

impl Default for Averaging {
    fn default() -> Self {
        Averaging {
            t_seq: vec![25.0, 50.0, 100.0],
            nodes: NodeRule::default(),
        }
    }
}

impl Averaging {
    pub fn new(t_seq: Vec<f64>, nodes: NodeRule) -> Self {
        Averaging { t_seq, nodes }
    }

    fn validate(&self) -> Result<()> {
        if self.t_seq.len() < 2 {
            return Err(Error::InvalidArgument(
                "T sequence needs at least two values".into(),
            ));
        }
        if self.t_seq[0] <= 0.0 || self.t_seq.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "T sequence must be positive and strictly increasing".into(),
            ));
        }
        if let NodeRule::PerAxis(k) = self.nodes {
            if k < 2 {
                return Err(Error::InvalidArgument(
                    "need at least 2 nodes per axis".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    /// Last partial average.
    pub value: Vec<C64>,
    pub center: Vec<f64>,
    pub t_seq: Vec<f64>,
    pub nodes_per_axis: Vec<usize>,
    pub partials: Vec<Vec<C64>>,
    /// Range-norm distance between the last two partial averages.
    pub gap: f64,
}

impl MeanEstimate {
    fn from_partials(
        center: &[f64],
        avg: &Averaging,
        nodes: Vec<usize>,
        partials: Vec<Vec<C64>>,
    ) -> Self {
        let k = partials.len();
        let gap = range_dist(&partials[k - 1], &partials[k - 2]);
        MeanEstimate {
            value: partials[k - 1].clone(),
            center: center.to_vec(),
            t_seq: avg.t_seq.clone(),
            nodes_per_axis: nodes,
            partials,
            gap,
        }
    }
}

fn cube(center: &[f64], half_width: f64, count: usize) -> Result<BoxGrid> {
    BoxGrid::new(
        center.iter().map(|c| c - half_width).collect(),
        center.iter().map(|c| c + half_width).collect(),
        vec![count; center.len()],
    )
}

/// `(2T)^{-n} Σ_i w_i e^{−i⟨λ,t_i⟩} f(t_i)`, summed in a fixed chunk order.
fn weighted_average(values: &GridValues, half_width: f64, freq: Option<&[f64]>) -> Vec<C64> {
    let grid = &values.grid;
    let d = values.range_dim;
    let n = grid.dim();
    let axis_w: Vec<Vec<f64>> = (0..n).map(|a| grid.axis_weights(a)).collect();
    let axis_x: Vec<Vec<f64>> = (0..n).map(|a| grid.axis_coords(a)).collect();
    let chunks: Vec<Vec<C64>> = (0..grid.len())
        .into_par_iter()
        .step_by(SCAN_CHUNK)
        .map(|start| {
            let end = (start + SCAN_CHUNK).min(grid.len());
            let mut acc = vec![C64::new(0.0, 0.0); d];
            for i in start..end {
                let idx = grid.multi_index(i);
                let mut w = 1.0;
                let mut phase = 0.0;
                for a in 0..n {
                    w *= axis_w[a][idx[a]];
                    if let Some(l) = freq {
                        phase += l[a] * axis_x[a][idx[a]];
                    }
                }
                let factor = if freq.is_some() {
                    C64::new(phase.cos(), -phase.sin()) * w
                } else {
                    C64::new(w, 0.0)
                };
                for (a, v) in acc.iter_mut().zip(values.at(i)) {
                    *a += factor * v;
                }
            }
            acc
        })
        .collect();
    let vol = (2.0 * half_width).powi(n as i32);
    let mut total = vec![C64::new(0.0, 0.0); d];
    for c in chunks {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    total.into_iter().map(|z| z / vol).collect()
}

/// Grid values of `f` on each cube of the averaging schedule.
fn sample_cubes(
    f: &FieldFunction,
    center: &[f64],
    avg: &Averaging,
) -> Result<Vec<(f64, GridValues)>> {
    avg.validate()?;
    check_dim(f.dim(), center.len())?;
    avg.t_seq
        .iter()
        .map(|&t| {
            let count = avg.nodes.nodes_per_axis(t, f.dim());
            let grid = cube(center, t, count)?;
            Ok((t, eval_on_grid(f, &grid)?))
        })
        .collect()
}

/// Mean value `M(f)` estimated on `s + [−T, T]ⁿ` for each `T` in the schedule.
pub fn mean_value(f: &FieldFunction, center: &Point, avg: &Averaging) -> Result<MeanEstimate> {
    let samples = sample_cubes(f, center.coords(), avg)?;
    let nodes = samples.iter().map(|(_, v)| v.grid.counts()[0]).collect();
    let partials = samples
        .iter()
        .map(|(t, v)| weighted_average(v, *t, None))
        .collect();
    Ok(MeanEstimate::from_partials(
        center.coords(),
        avg,
        nodes,
        partials,
    ))
}

/// Bohr–Fourier coefficient `f_λ = M(e^{−i⟨λ,·⟩} f)`.
pub fn bohr_coefficient(
    f: &FieldFunction,
    freq: &[f64],
    center: &Point,
    avg: &Averaging,
) -> Result<MeanEstimate> {
    check_dim(f.dim(), freq.len())?;
    let samples = sample_cubes(f, center.coords(), avg)?;
    Ok(coefficient_from_samples(
        &samples,
        freq,
        center.coords(),
        avg,
    ))
}

fn coefficient_from_samples(
    samples: &[(f64, GridValues)],
    freq: &[f64],
    center: &[f64],
    avg: &Averaging,
) -> MeanEstimate {
    let nodes = samples.iter().map(|(_, v)| v.grid.counts()[0]).collect();
    let partials = samples
        .iter()
        .map(|(t, v)| weighted_average(v, *t, Some(freq)))
        .collect();
    MeanEstimate::from_partials(center, avg, nodes, partials)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateCoefficient {
    pub frequency: Vec<f64>,
    pub coefficient: Vec<C64>,
    pub magnitude: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub threshold: f64,
    pub center: Vec<f64>,
    pub t_seq: Vec<f64>,
    pub tested: Vec<CandidateCoefficient>,
    /// Candidates with `|f_λ| ≥ threshold`, in candidate order.
    pub accepted: Vec<CandidateCoefficient>,
}

/// Tests each candidate frequency and accepts those with `|f_λ| ≥ threshold`.
pub fn spectrum_scan(
    f: &FieldFunction,
    candidates: &[Vec<f64>],
    threshold: f64,
    center: &Point,
    avg: &Averaging,
) -> Result<SpectrumEstimate> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate frequencies".into()));
    }
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} must be > 0"
        )));
    }
    for c in candidates {
        check_dim(f.dim(), c.len())?;
    }
    let samples = sample_cubes(f, center.coords(), avg)?;
    let tested: Vec<CandidateCoefficient> = candidates
        .iter()
        .map(|freq| {
            let est = coefficient_from_samples(&samples, freq, center.coords(), avg);
            CandidateCoefficient {
                frequency: freq.clone(),
                magnitude: range_norm(&est.value),
                coefficient: est.value,
                gap: est.gap,
            }
        })
        .collect();
    let accepted = tested
        .iter()
        .filter(|c| c.magnitude >= threshold)
        .cloned()
        .collect();
    Ok(SpectrumEstimate {
        threshold,
        center: center.coords().to_vec(),
        t_seq: avg.t_seq.clone(),
        tested,
        accepted,
    })
}
