use std::fmt::Write as _;

use ap_core::approx::{self, sampling_experiment, vp_report_1d, vp_report_2d};
use ap_core::exprlang;
use ap_core::field::{eval_on_grid, GridValues};
use ap_core::meanvalue::{bohr_coefficient, mean_value, spectrum_scan, Averaging, NodeRule};
use ap_core::operators::{
    convolve_causal, convolve_full, gaussian_semigroup, heat_field, poisson_semigroup,
    window_average, Kernel, SemigroupOptions, Support, Transformed,
};
use ap_core::periods::{
    asymptotic_split_check, decay_check, eps_period_search, recurrence_check, Mask, SplitCheck,
};
use ap_core::solvers::{
    delay_evolution_solve, hammerstein_solve, DelayProblem, EvolutionFamilySpec,
    HammersteinProblem, Start,
};
use ap_core::{BoxGrid, Error, FieldFunction, Point};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::{Failure, Output};

type Res<T> = Result<T, Failure>;

const MAX_LATTICE_CANDIDATES: usize = 1_000_000;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn json_only(v: Value) -> Output {
    Output { json: v, csv: None }
}

fn function(spec: &FnSpec) -> Res<FieldFunction> {
    let refs: Vec<&str> = spec.f.iter().map(String::as_str).collect();
    Ok(exprlang::vector_field(&refs, spec.dim)?)
}

fn grid(s: &str) -> Res<BoxGrid> {
    Ok(s.parse::<BoxGrid>()?)
}

fn point(s: &str) -> Res<Point> {
    Ok(s.parse::<Point>()?)
}

fn points(s: &str) -> Res<Vec<Point>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(point)
        .collect()
}

fn mask(s: &str) -> Res<Mask> {
    match s.trim() {
        "full" => Ok(Mask::Full),
        "orthant" => Ok(Mask::Orthant),
        other => {
            let parts: Vec<&str> = other.split(':').collect();
            match parts.as_slice() {
                ["sector", c1, c2] => {
                    let c1 = c1
                        .parse()
                        .map_err(|_| invalid(format!("bad sector bound `{c1}`")))?;
                    let c2 = c2
                        .parse()
                        .map_err(|_| invalid(format!("bad sector bound `{c2}`")))?;
                    Ok(Mask::DiagonalSector { c1, c2 })
                }
                _ => Err(invalid(format!(
                    "unknown mask `{other}`; use full, orthant or sector:c1:c2"
                ))),
            }
        }
    }
}

fn support(s: &str) -> Res<Support> {
    match s.trim() {
        "full" => Ok(Support::Full),
        "orthant" => Ok(Support::PositiveOrthant),
        other => {
            let axes = other.strip_prefix("box:").ok_or_else(|| {
                invalid(format!(
                    "unknown support `{other}`; use full, orthant or box:lo:hi,..."
                ))
            })?;
            let mut lower = Vec::new();
            let mut upper = Vec::new();
            for axis in axes.split(',') {
                let (lo, hi) = axis
                    .split_once(':')
                    .ok_or_else(|| invalid(format!("support axis `{axis}` is not lo:hi")))?;
                lower.push(
                    lo.trim()
                        .parse()
                        .map_err(|_| invalid(format!("bad bound `{lo}`")))?,
                );
                upper.push(
                    hi.trim()
                        .parse()
                        .map_err(|_| invalid(format!("bad bound `{hi}`")))?,
                );
            }
            Ok(Support::CompactBox { lower, upper })
        }
    }
}

fn averaging(a: &AveragingArgs, dim: usize) -> Res<(Averaging, Point)> {
    let nodes = a
        .nodes_per_axis
        .map_or_else(NodeRule::default, NodeRule::PerAxis);
    let center = match &a.center {
        Some(c) => point(c)?,
        None => Point::zeros(dim),
    };
    Ok((Averaging::new(a.t_seq.clone(), nodes), center))
}

fn values_json(v: &GridValues) -> Value {
    let nodes: Vec<Vec<f64>> = v.grid.nodes().collect();
    let values: Vec<_> = (0..v.len()).map(|i| v.at(i).to_vec()).collect();
    json!({ "grid": v.grid, "range_dim": v.range_dim, "nodes": nodes, "values": values })
}

fn sampled(f: &FieldFunction, g: &BoxGrid) -> Res<Value> {
    Ok(values_json(&eval_on_grid(f, g)?))
}

fn transformed(t: &Transformed, g: &BoxGrid) -> Res<Output> {
    Ok(json_only(
        json!({ "quadrature": t.info, "output": sampled(&t.field, g)? }),
    ))
}

fn start(kind: StartKind) -> Start {
    match kind {
        StartKind::Natural => Start::Natural,
        StartKind::Zero => Start::Zero,
    }
}

fn lattice(dim: usize, order: u32) -> Res<Vec<Vec<f64>>> {
    let side = 2 * order as usize + 1;
    let total = side
        .checked_pow(dim as u32)
        .filter(|t| *t <= MAX_LATTICE_CANDIDATES)
        .ok_or_else(|| invalid("lattice candidate set too large"))?;
    Ok((0..total)
        .map(|mut idx| {
            let mut k = vec![0.0; dim];
            for slot in k.iter_mut().rev() {
                *slot = (idx % side) as f64 - order as f64;
                idx /= side;
            }
            k
        })
        .collect())
}

fn kernel(a: &ConvolveArgs, dim: usize, trunc: &BoxGrid) -> Res<Kernel> {
    if let Some(b) = &a.builtin {
        let (name, param) = match b.split_once(':') {
            Some((n, p)) => (
                n,
                Some(
                    p.parse::<f64>()
                        .map_err(|_| invalid(format!("bad parameter in `{b}`")))?,
                ),
            ),
            None => (b.as_str(), None),
        };
        let t0 =
            || param.ok_or_else(|| invalid(format!("`{name}` needs a parameter, e.g. {name}:0.5")));
        return Ok(match name {
            "gaussian" => Kernel::gaussian(dim, t0()?)?,
            "poisson" => Kernel::poisson(dim, t0()?)?,
            "exp-orthant" => Kernel::exponential_orthant(dim)?,
            _ => return Err(invalid(format!("unknown builtin kernel `{name}`"))),
        });
    }
    let src = a
        .kernel
        .as_deref()
        .ok_or_else(|| invalid("give --kernel or --builtin"))?;
    let h = exprlang::field(src, dim)?;
    let sup = support(&a.support)?;
    Ok(match a.kernel_l1 {
        Some(l1) => Kernel::new(h, sup, l1)?,
        None => Kernel::with_numeric_l1(h, sup, trunc)?,
    })
}

pub fn dispatch(cmd: &Command) -> Res<Output> {
    match cmd {
        Command::Mean(a) => {
            let f = function(&a.func)?;
            let (avg, center) = averaging(&a.avg, a.func.dim)?;
            Ok(json_only(to_json(&mean_value(&f, &center, &avg)?)))
        }
        Command::Coeff(a) => {
            let f = function(&a.func)?;
            let (avg, center) = averaging(&a.avg, a.func.dim)?;
            let freq = point(&a.freq)?;
            Ok(json_only(to_json(&bohr_coefficient(
                &f,
                freq.coords(),
                &center,
                &avg,
            )?)))
        }
        Command::Spectrum(a) => {
            let f = function(&a.func)?;
            let (avg, center) = averaging(&a.avg, a.func.dim)?;
            let candidates: Vec<Vec<f64>> = match (&a.candidates, a.lattice_order) {
                (Some(c), None) => points(c)?.into_iter().map(Vec::from).collect(),
                (None, Some(order)) => lattice(a.func.dim, order)?,
                _ => {
                    return Err(invalid(
                        "give exactly one of --candidates and --lattice-order",
                    ))
                }
            };
            Ok(json_only(to_json(&spectrum_scan(
                &f,
                &candidates,
                a.threshold,
                &center,
                &avg,
            )?)))
        }
        Command::Periods(a) => {
            let f = function(&a.func)?;
            let r = eps_period_search(&f, a.eps, &grid(&a.domain)?, &grid(&a.tau)?, &a.l)?;
            Ok(json_only(to_json(&r)))
        }
        Command::Recur(a) => {
            let f = function(&a.func)?;
            Ok(json_only(to_json(&recurrence_check(
                &f,
                &points(&a.taus)?,
                &grid(&a.domain)?,
            )?)))
        }
        Command::Decay(a) => {
            let f = function(&a.func)?;
            let r = decay_check(&f, &mask(&a.mask)?, &a.radii, &grid(&a.domain)?, a.tol)?;
            Ok(json_only(to_json(&r)))
        }
        Command::Split(a) => {
            let f = exprlang::field(&a.f, a.dim)?;
            let g = exprlang::field(&a.g, a.dim)?;
            let q = exprlang::field(&a.q, a.dim)?;
            let check = SplitCheck {
                domain: grid(&a.domain)?,
                mask: mask(&a.mask)?,
                radii: a.radii.clone(),
                epsilon: a.eps,
                decay_tolerance: a.decay_tol,
                tau_box: grid(&a.tau)?,
                l: a.l,
            };
            Ok(json_only(to_json(&asymptotic_split_check(
                &f, &g, &q, &check,
            )?)))
        }
        Command::Convolve(a) => {
            let f = function(&a.func)?;
            let trunc = grid(&a.trunc)?;
            let eval = grid(&a.eval)?;
            let t = match a.kind {
                ConvolveKind::Window => {
                    if a.kernel.is_some() || a.builtin.is_some() {
                        return Err(invalid("window averages take no kernel"));
                    }
                    window_average(&f, &trunc)?
                }
                ConvolveKind::Full => {
                    convolve_full(&kernel(a, a.func.dim, &trunc)?, &f, &trunc, a.min_mass)?
                }
                ConvolveKind::Causal => {
                    convolve_causal(&kernel(a, a.func.dim, &trunc)?, &f, &trunc, a.min_mass)?
                }
            };
            transformed(&t, &eval)
        }
        Command::Semigroup(a) => {
            let f = function(&a.func)?;
            let opts = SemigroupOptions {
                radius: a.radius,
                nodes: a.nodes,
                min_mass_fraction: a.min_mass,
            };
            let t = match a.kind {
                SemigroupKind::Gauss => gaussian_semigroup(&f, a.t0, &opts)?,
                SemigroupKind::Poisson => poisson_semigroup(&f, a.t0, &opts)?,
            };
            transformed(&t, &grid(&a.eval)?)
        }
        Command::Heat(a) => {
            let u = heat_field(&exprlang::field(&a.u0, 1)?, a.nodes)?;
            Ok(json_only(
                json!({ "nodes": a.nodes, "output": sampled(&u, &grid(&a.eval)?)? }),
            ))
        }
        Command::Hammerstein(a) => {
            let g = grid(&a.grid)?;
            let n = g.dim();
            let p = HammersteinProblem {
                g: exprlang::field(&a.g, n)?,
                kernel: Kernel::new(exprlang::field(&a.kernel, n)?, Support::Full, a.kernel_l1)?,
                nonlinearity: exprlang::param_field(&a.nonlinearity, n, 1)?,
                lipschitz: a.lipschitz,
                grid: g,
                tol: a.tol,
                max_iter: a.max_iter,
                start: start(a.start),
            };
            let s = hammerstein_solve(&p)?;
            Ok(json_only(
                json!({ "trace": s.trace, "solution": values_json(&s.values) }),
            ))
        }
        Command::Delay(a) => {
            let d = a.frequencies.len();
            if a.f.len() != d {
                return Err(invalid(format!(
                    "{} forcing sources for {d} frequencies; give one --f per frequency",
                    a.f.len()
                )));
            }
            let refs: Vec<&str> = a.f.iter().map(String::as_str).collect();
            let p = DelayProblem {
                family: EvolutionFamilySpec {
                    alpha: exprlang::field(&a.alpha, 1)?,
                    delta: exprlang::field(&a.delta, 1)?,
                    frequencies: a.frequencies.clone(),
                },
                f: exprlang::vector_param_field(&refs, 1, d)?,
                lipschitz: a.lipschitz,
                delay: a.delay,
                grid: grid(&a.grid)?,
                history: a.history,
                tol: a.tol,
                max_iter: a.max_iter,
                start: start(a.start),
            };
            let s = delay_evolution_solve(&p)?;
            Ok(json_only(json!({
                "info": s.info,
                "trace": s.solution.trace,
                "solution": values_json(&s.solution.values),
            })))
        }
        Command::Vp(a) => vp(a),
        Command::Sampling(a) => {
            let e = sampling_experiment(a.n, a.l, a.big_n, a.trials, a.dense_factor, a.seed)?;
            let mut csv = String::from("trial,ratio\n");
            for (i, r) in e.ratios.iter().enumerate() {
                writeln!(csv, "{i},{r}").expect("string write");
            }
            Ok(Output {
                json: to_json(&e),
                csv: Some(csv),
            })
        }
        Command::Run(_) => Err(invalid("nested job")),
    }
}

fn vp(a: &VpArgs) -> Res<Output> {
    let f = function(&a.func)?;
    let test = grid(&a.test)?;
    let ms: Vec<usize> = if a.m.is_empty() {
        a.k.clone()
    } else {
        a.m.clone()
    };
    if ms.len() != a.k.len() {
        return Err(invalid("--m needs one entry per --k"));
    }
    let reports = match a.func.dim {
        1 => {
            if !a.m.is_empty() {
                return Err(invalid("--m applies to two variables only"));
            }
            let nodes = a.nodes.unwrap_or(approx::DEFAULT_VP_NODES_1D);
            a.k.iter()
                .map(|&k| vp_report_1d(&f, k, &test, nodes))
                .collect::<ap_core::Result<Vec<_>>>()?
        }
        2 => {
            let nodes = a.nodes.unwrap_or(approx::DEFAULT_VP_NODES_2D);
            a.k.iter()
                .zip(&ms)
                .map(|(&k, &m)| vp_report_2d(&f, k, m, &test, nodes))
                .collect::<ap_core::Result<Vec<_>>>()?
        }
        n => {
            return Err(
                Error::Unsupported(format!("Vallée-Poussin integrals in {n} variables")).into(),
            )
        }
    };
    let mut csv = String::from("k,m,nodes,kernel_mass,sup_error\n");
    for r in &reports {
        let m = r.m.map_or(String::new(), |m| m.to_string());
        writeln!(
            csv,
            "{},{m},{},{},{}",
            r.k, r.nodes, r.kernel_mass, r.sup_error
        )
        .expect("string write");
    }
    Ok(Output {
        json: to_json(&reports),
        csv: Some(csv),
    })
}
