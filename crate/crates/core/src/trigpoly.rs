//! Multivariate trigonometric polynomials `Σ_λ c_λ e^{i⟨λ,t⟩}` with
//! arbitrary real frequency vectors `λ ∈ ℝⁿ` and coefficients in `ℂᵈ`.
//!
//! Frequencies are canonicalized on insertion: components within `1e-12` of
//! an integer snap to that integer and `-0.0` becomes `0.0`. Terms are kept
//! in lexicographic frequency order and zero coefficients are dropped, so
//! two polynomials with the same terms compare equal.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::field::{range_norm, FieldFunction, C64};

const SNAP_TOL: f64 = 1e-12;

fn snap(x: f64) -> f64 {
    let r = x.round();
    let v = if (x - r).abs() <= SNAP_TOL { r } else { x };
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// Frequency vector with a total lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct Frequency(Vec<f64>);

impl Frequency {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "frequency {coords:?} has non-finite entries"
            )));
        }
        Ok(Frequency(coords.iter().map(|&c| snap(c)).collect()))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// `Some(k)` when every component is an integer.
    pub fn as_lattice(&self) -> Option<Vec<i64>> {
        self.0
            .iter()
            .map(|&c| (c.fract() == 0.0 && c.abs() < 9.0e15).then_some(c as i64))
            .collect()
    }

    fn dot(&self, t: &[f64]) -> f64 {
        self.0.iter().zip(t).map(|(a, b)| a * b).sum()
    }
}

impl Eq for Frequency {}

impl PartialOrd for Frequency {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frequency {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

/// Order `l = max ‖k‖∞` of a polynomial whose frequencies are all integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeOrder(pub u64);

#[derive(Clone, Debug, PartialEq)]
pub struct TrigPolynomial {
    dim: usize,
    range_dim: usize,
    terms: BTreeMap<Frequency, Vec<C64>>,
}

impl TrigPolynomial {
    pub fn zero(dim: usize, range_dim: usize) -> Self {
        TrigPolynomial {
            dim,
            range_dim,
            terms: BTreeMap::new(),
        }
    }

    /// Scalar polynomial from `(frequency, coefficient)` pairs; repeated
    /// frequencies are summed.
    pub fn from_terms<I, F>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (F, C64)>,
        F: AsRef<[f64]>,
    {
        let mut p = TrigPolynomial::zero(dim, 1);
        for (freq, c) in terms {
            p.add_term(freq.as_ref(), &[c])?;
        }
        Ok(p)
    }

    pub fn add_term(&mut self, freq: &[f64], coeff: &[C64]) -> Result<()> {
        check_dim(self.dim, freq.len())?;
        check_dim(self.range_dim, coeff.len())?;
        let key = Frequency::new(freq)?;
        let slot = self
            .terms
            .entry(key.clone())
            .or_insert_with(|| vec![C64::new(0.0, 0.0); coeff.len()]);
        for (s, c) in slot.iter_mut().zip(coeff) {
            *s += c;
        }
        if slot.iter().all(|c| *c == C64::new(0.0, 0.0)) {
            self.terms.remove(&key);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range_dim(&self) -> usize {
        self.range_dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[f64], &[C64])> {
        self.terms.iter().map(|(k, v)| (k.coords(), v.as_slice()))
    }

    pub fn coefficient(&self, freq: &[f64]) -> Option<&[C64]> {
        let key = Frequency::new(freq).ok()?;
        self.terms.get(&key).map(Vec::as_slice)
    }

    /// `Σ_λ c_λ e^{i⟨λ,t⟩}`.
    pub fn eval(&self, t: &[f64]) -> Result<Vec<C64>> {
        check_dim(self.dim, t.len())?;
        let mut out = vec![C64::new(0.0, 0.0); self.range_dim];
        self.eval_into(t, &mut out);
        Ok(out)
    }

    fn eval_into(&self, t: &[f64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for (freq, coeff) in &self.terms {
            let phase = freq.dot(t);
            let e = C64::new(phase.cos(), phase.sin());
            for (o, c) in out.iter_mut().zip(coeff) {
                *o += c * e;
            }
        }
    }

    pub fn to_field(&self) -> FieldFunction {
        let p = self.clone();
        FieldFunction::from_fn(self.dim, self.range_dim, move |t, out| p.eval_into(t, out))
    }

    fn same_shape(&self, other: &TrigPolynomial) -> Result<()> {
        check_dim(self.dim, other.dim)?;
        check_dim(self.range_dim, other.range_dim)
    }

    pub fn add(&self, other: &TrigPolynomial) -> Result<TrigPolynomial> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (f, c) in &other.terms {
            out.add_term(f.coords(), c)?;
        }
        Ok(out)
    }

    pub fn scale(&self, s: C64) -> TrigPolynomial {
        let mut out = TrigPolynomial::zero(self.dim, self.range_dim);
        if s == C64::new(0.0, 0.0) {
            return out;
        }
        for (f, c) in &self.terms {
            let scaled: Vec<C64> = c.iter().map(|z| z * s).collect();
            if scaled.iter().any(|z| *z != C64::new(0.0, 0.0)) {
                out.terms.insert(f.clone(), scaled);
            }
        }
        out
    }

    pub fn sub(&self, other: &TrigPolynomial) -> Result<TrigPolynomial> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Product of scalar polynomials: frequencies add, coefficients convolve.
    pub fn multiply(&self, other: &TrigPolynomial) -> Result<TrigPolynomial> {
        check_dim(self.dim, other.dim)?;
        if self.range_dim != 1 || other.range_dim != 1 {
            return Err(Error::Unsupported(
                "products are defined for scalar polynomials only".into(),
            ));
        }
        let mut out = TrigPolynomial::zero(self.dim, 1);
        let mut freq = vec![0.0; self.dim];
        for (f, a) in &self.terms {
            for (g, b) in &other.terms {
                for ((s, x), y) in freq.iter_mut().zip(&f.0).zip(&g.0) {
                    *s = x + y;
                }
                out.add_term(&freq, &[a[0] * b[0]])?;
            }
        }
        Ok(out)
    }

    /// Projection onto real-valued polynomials: `c'_λ = (c_λ + conj(c_{−λ}))/2`,
    /// which enforces `c_{−λ} = conj(c_λ)`.
    pub fn real_part(&self) -> TrigPolynomial {
        let mut out = TrigPolynomial::zero(self.dim, self.range_dim);
        for (f, c) in &self.terms {
            let neg: Vec<f64> = f.0.iter().map(|x| -x).collect();
            let half: Vec<C64> = c.iter().map(|z| z * 0.5).collect();
            let conj: Vec<C64> = c.iter().map(|z| z.conj() * 0.5).collect();
            out.add_term(f.coords(), &half).expect("shape preserved");
            out.add_term(&neg, &conj).expect("shape preserved");
        }
        out
    }

    /// Whether `c_{−λ} = conj(c_λ)` holds within `tol` for every term.
    pub fn is_real(&self, tol: f64) -> bool {
        self.terms.iter().all(|(f, c)| {
            let neg: Vec<f64> = f.0.iter().map(|x| -x).collect();
            match self.coefficient(&neg) {
                Some(m) => c.iter().zip(m).all(|(a, b)| (a - b.conj()).norm() <= tol),
                None => false,
            }
        })
    }

    /// `Σ_λ ‖c_λ‖`.
    pub fn wiener_norm(&self) -> f64 {
        self.terms.values().map(|c| range_norm(c)).sum()
    }

    /// `max ‖k‖∞` over the stored frequencies; `None` when some frequency is
    /// not an integer vector.
    pub fn lattice_order(&self) -> Option<LatticeOrder> {
        let mut l = 0u64;
        for f in self.terms.keys() {
            let k = f.as_lattice()?;
            l = l.max(k.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0));
        }
        Some(LatticeOrder(l))
    }

    fn lattice_terms(&self) -> Result<Vec<(Vec<i64>, &[C64])>> {
        self.terms
            .iter()
            .map(|(f, c)| {
                f.as_lattice().map(|k| (k, c.as_slice())).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "frequency {:?} is not an integer vector; grid sampling needs 2π-periodicity",
                        f.coords()
                    ))
                })
            })
            .collect()
    }

    /// Values on the uniform grid `Θ_N^n = {2πk/N : 0 ≤ k < N}ⁿ`, node-major
    /// with the first axis varying slowest and `range_dim` entries per node.
    pub fn lattice_grid_values(&self, nodes: usize) -> Result<Vec<C64>> {
        if nodes == 0 {
            return Err(Error::InvalidArgument(
                "need at least one node per axis".into(),
            ));
        }
        let terms = self.lattice_terms()?;
        let roots = roots_of_unity(nodes);
        let total = nodes
            .checked_pow(self.dim as u32)
            .ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
        let d = self.range_dim;
        let mut out = vec![C64::new(0.0, 0.0); total * d];
        for comp in 0..d {
            // Contract one axis at a time: a partial sum over axes [0, m) is
            // kept per distinct frequency suffix on axes [m, n).
            let mut stage: Vec<(Vec<i64>, Vec<C64>)> = terms
                .iter()
                .map(|(k, c)| (k.clone(), vec![c[comp]]))
                .collect();
            for _axis in 0..self.dim {
                let mut groups: BTreeMap<Vec<i64>, Vec<(i64, Vec<C64>)>> = BTreeMap::new();
                for (k, vals) in stage {
                    groups
                        .entry(k[1..].to_vec())
                        .or_default()
                        .push((k[0], vals));
                }
                stage = groups
                    .into_par_iter()
                    .map(|(suffix, members)| {
                        let done = members[0].1.len();
                        let mut next = vec![C64::new(0.0, 0.0); done * nodes];
                        for (k0, vals) in &members {
                            let step = k0.rem_euclid(nodes as i64) as usize;
                            for (g, v) in vals.iter().enumerate() {
                                let row = &mut next[g * nodes..(g + 1) * nodes];
                                let mut idx = 0usize;
                                for slot in row.iter_mut() {
                                    *slot += v * roots[idx];
                                    idx += step;
                                    if idx >= nodes {
                                        idx -= nodes;
                                    }
                                }
                            }
                        }
                        (suffix, next)
                    })
                    .collect();
            }
            if let Some((_, vals)) = stage.into_iter().next() {
                for (i, v) in vals.into_iter().enumerate() {
                    out[i * d + comp] = v;
                }
            }
        }
        Ok(out)
    }

    /// `max |P|` over `Θ_N^n`; needs integer frequencies.
    pub fn sup_norm_grid(&self, nodes: usize) -> Result<f64> {
        let vals = self.lattice_grid_values(nodes)?;
        Ok(vals
            .chunks(self.range_dim)
            .map(range_norm)
            .fold(0.0, f64::max))
    }

    pub fn to_json(&self) -> TrigPolyJson {
        TrigPolyJson {
            n: self.dim,
            d: self.range_dim,
            terms: self
                .terms
                .iter()
                .map(|(f, c)| TermJson {
                    freq: f.0.clone(),
                    re: c.iter().map(|z| z.re).collect(),
                    im: c.iter().map(|z| z.im).collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &TrigPolyJson) -> Result<Self> {
        if json.n == 0 || json.d == 0 {
            return Err(Error::InvalidArgument("n and d must be positive".into()));
        }
        let mut p = TrigPolynomial::zero(json.n, json.d);
        for t in &json.terms {
            if t.re.len() != json.d || t.im.len() != json.d {
                return Err(Error::InvalidArgument(format!(
                    "term {:?}: coefficient length differs from d = {}",
                    t.freq, json.d
                )));
            }
            let c: Vec<C64> =
                t.re.iter()
                    .zip(&t.im)
                    .map(|(&r, &i)| C64::new(r, i))
                    .collect();
            p.add_term(&t.freq, &c)?;
        }
        Ok(p)
    }
}

/// `e^{2πim/N}` for `m = 0..N`; the angle is taken from the reduced fraction
/// so grids whose sizes divide each other share bit-identical values.
fn roots_of_unity(n: usize) -> Vec<C64> {
    (0..n)
        .map(|m| {
            if m == 0 {
                return C64::new(1.0, 0.0);
            }
            let g = gcd(m, n);
            let angle = 2.0 * PI * (m / g) as f64 / (n / g) as f64;
            C64::new(angle.cos(), angle.sin())
        })
        .collect()
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Wire format: `{"n": int, "d": int, "terms": [{"freq": [..], "re": [..], "im": [..]}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPolyJson {
    pub n: usize,
    pub d: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub freq: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Serialize for TrigPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrigPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = TrigPolyJson::deserialize(d)?;
        TrigPolynomial::from_json(&json).map_err(serde::de::Error::custom)
    }
}

/// Random scalar polynomial on the lattice `{‖k‖∞ ≤ order}` with i.i.d.
/// standard-normal real and imaginary coefficient parts.
pub fn random_lattice_polynomial<R: rand::Rng>(
    dim: usize,
    order: u64,
    rng: &mut R,
) -> TrigPolynomial {
    use rand_distr::{Distribution, StandardNormal};
    let side = 2 * order as i64 + 1;
    let mut p = TrigPolynomial::zero(dim, 1);
    let total = (side as usize).pow(dim as u32);
    for idx in 0..total {
        let mut rem = idx as i64;
        let mut k = vec![0.0; dim];
        for axis in (0..dim).rev() {
            k[axis] = (rem % side - order as i64) as f64;
            rem /= side;
        }
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        p.add_term(&k, &[C64::new(re, im)]).expect("shape fixed");
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::BoxGrid;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn eval_constant_and_single_term() {
        let p = TrigPolynomial::from_terms(2, [([0.0, 0.0], c(5.0))]).unwrap();
        assert_eq!(p.eval(&[1.3, -7.0]).unwrap()[0], c(5.0));
        let q = TrigPolynomial::from_terms(2, [([1.0, -1.0], c(2.0))]).unwrap();
        let v = q.eval(&[PI, 0.0]).unwrap()[0];
        assert!((v - c(-2.0)).norm() < 1e-15);
    }

    #[test]
    fn eval_matches_naive_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        use rand::Rng;
        let terms: Vec<(Vec<f64>, C64)> = (0..6)
            .map(|_| {
                (
                    vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)],
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                )
            })
            .collect();
        let p = TrigPolynomial::from_terms(2, terms.iter().map(|(f, c)| (f.clone(), *c))).unwrap();
        for _ in 0..100 {
            let t = [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
            let mut naive = C64::new(0.0, 0.0);
            for (f, c) in &terms {
                naive += c * C64::from_polar(1.0, f[0] * t[0] + f[1] * t[1]);
            }
            assert!((p.eval(&t).unwrap()[0] - naive).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_coefficients_are_dropped_and_frequencies_snap() {
        let mut p = TrigPolynomial::from_terms(1, [([1.0], c(2.0))]).unwrap();
        p.add_term(&[1.0 + 1e-13], &[c(-2.0)]).unwrap();
        assert!(p.is_zero());
        let q = TrigPolynomial::from_terms(1, [([-0.0], c(1.0)), ([0.0], c(1.0))]).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.coefficient(&[0.0]).unwrap()[0], c(2.0));
    }

    #[test]
    fn multiply_by_zero_and_cos_square_identity() {
        let p = TrigPolynomial::from_terms(1, [([1.0], c(1.0)), ([-1.0], c(1.0))]).unwrap();
        assert!(p.multiply(&TrigPolynomial::zero(1, 1)).unwrap().is_zero());
        let sq = p.multiply(&p).unwrap().scale(c(0.25));
        for t in BoxGrid::interval(-10.0, 10.0, 201).unwrap().nodes() {
            let v = sq.eval(&t).unwrap()[0];
            let expect = (1.0 + (2.0 * t[0]).cos()) / 2.0;
            assert!((v - c(expect)).norm() < 1e-12);
        }
    }

    #[test]
    fn multiply_rejects_vector_ranges() {
        let mut p = TrigPolynomial::zero(1, 2);
        p.add_term(&[1.0], &[c(1.0), c(2.0)]).unwrap();
        assert!(matches!(p.multiply(&p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn product_order_is_sum_of_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_lattice_polynomial(2, 2, &mut rng);
        let q = random_lattice_polynomial(2, 3, &mut rng);
        assert_eq!(p.lattice_order(), Some(LatticeOrder(2)));
        assert_eq!(q.lattice_order(), Some(LatticeOrder(3)));
        assert_eq!(
            p.multiply(&q).unwrap().lattice_order(),
            Some(LatticeOrder(5))
        );
    }

    #[test]
    fn lattice_order_absent_for_real_frequencies() {
        let p = TrigPolynomial::from_terms(1, [([2f64.sqrt()], c(1.0))]).unwrap();
        assert_eq!(p.lattice_order(), None);
        assert_eq!(
            TrigPolynomial::zero(3, 1).lattice_order(),
            Some(LatticeOrder(0))
        );
    }

    #[test]
    fn wiener_norm_examples() {
        assert_eq!(TrigPolynomial::zero(1, 1).wiener_norm(), 0.0);
        let p = TrigPolynomial::from_terms(1, [([1.0], c(3.0)), ([2.0], c(-4.0))]).unwrap();
        assert_eq!(p.wiener_norm(), 7.0);
    }

    #[test]
    fn sup_norm_grid_examples() {
        let p = TrigPolynomial::from_terms(2, [([0.0, 0.0], C64::new(3.0, 4.0))]).unwrap();
        for n in [1, 2, 7] {
            assert_eq!(p.sup_norm_grid(n).unwrap(), 5.0);
        }
        let e = TrigPolynomial::from_terms(1, [([1.0], c(1.0))]).unwrap();
        assert!((e.sup_norm_grid(4).unwrap() - 1.0).abs() < 1e-15);
        let bad = TrigPolynomial::from_terms(1, [([0.5], c(1.0))]).unwrap();
        assert!(bad.sup_norm_grid(8).is_err());
    }

    #[test]
    fn lattice_grid_values_match_pointwise_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_lattice_polynomial(2, 2, &mut rng);
        let n = 9;
        let vals = p.lattice_grid_values(n).unwrap();
        for i in 0..n {
            for j in 0..n {
                let t = [
                    2.0 * PI * i as f64 / n as f64,
                    2.0 * PI * j as f64 / n as f64,
                ];
                let direct = p.eval(&t).unwrap()[0];
                assert!((vals[i * n + j] - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn real_part_is_real_valued() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = random_lattice_polynomial(2, 2, &mut rng).real_part();
        assert!(p.is_real(0.0));
        for t in BoxGrid::cube(2, -3.0, 3.0, 7).unwrap().nodes() {
            assert!(p.eval(&t).unwrap()[0].im.abs() < 1e-12);
        }
    }

    #[test]
    fn json_wire_format() {
        let p = TrigPolynomial::from_terms(2, [([1.0, -1.0], C64::new(2.0, 0.5))]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(
            s,
            r#"{"n":2,"d":1,"terms":[{"freq":[1.0,-1.0],"re":[2.0],"im":[0.5]}]}"#
        );
        let back: TrigPolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"n":2,"d":1,"terms":[{"freq":[1.0],"re":[2.0],"im":[0.5]}]}"#;
        assert!(serde_json::from_str::<TrigPolynomial>(bad).is_err());
    }

    fn arb_poly(order: i64) -> impl Strategy<Value = TrigPolynomial> {
        proptest::collection::vec(
            (
                (-order..=order),
                (-order..=order),
                -2.0f64..2.0,
                -2.0f64..2.0,
            ),
            0..8,
        )
        .prop_map(|terms| {
            TrigPolynomial::from_terms(
                2,
                terms
                    .into_iter()
                    .map(|(a, b, re, im)| (vec![a as f64, b as f64], C64::new(re, im))),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn ring_homomorphism(p in arb_poly(3), q in arb_poly(3), x in -10.0f64..10.0, y in -10.0f64..10.0) {
            let t = [x, y];
            let (pv, qv) = (p.eval(&t).unwrap()[0], q.eval(&t).unwrap()[0]);
            let sum = p.add(&q).unwrap().eval(&t).unwrap()[0];
            let prod = p.multiply(&q).unwrap().eval(&t).unwrap()[0];
            prop_assert!((sum - (pv + qv)).norm() < 1e-12);
            prop_assert!((prod - pv * qv).norm() < 1e-11);
        }

        #[test]
        fn wiener_norm_is_subadditive_and_submultiplicative(p in arb_poly(3), q in arb_poly(3)) {
            let (wp, wq) = (p.wiener_norm(), q.wiener_norm());
            prop_assert!(p.add(&q).unwrap().wiener_norm() <= wp + wq + 1e-12);
            prop_assert!(p.multiply(&q).unwrap().wiener_norm() <= wp * wq + 1e-12);
        }

        #[test]
        fn order_of_product_is_at_most_sum(p in arb_poly(3), q in arb_poly(2)) {
            let (lp, lq) = (p.lattice_order().unwrap().0, q.lattice_order().unwrap().0);
            let lpq = p.multiply(&q).unwrap().lattice_order().unwrap().0;
            prop_assert!(lpq <= lp + lq);
        }
    }
}
