//! Concrete topological dynamical systems with invariant measures.
//!
//! * Torus rotations. Coordinates are stored as 64-bit fixed-point phases
//!   (`u64` counts of `2^-64`), so a rotation is a wrapping add and the
//!   circle distance is translation invariant bit for bit.
//! * Subshifts `A^G` over lattices and the Heisenberg group with Bernoulli
//!   product measures (any group) or stationary Markov measures (`Z` only).
//!   A point is a seed plus an optional explicit window; unobserved
//!   coordinates are a pure function of `(seed, coordinate)`, so reading a
//!   coordinate twice, in any order or from any thread, gives the same symbol.
//! * Finite systems: `N` atoms permuted by commuting generators, with an
//!   explicit metric and an exact rational measure.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{input, Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::{par, rng};

pub type Phases = SmallVec<[u64; 4]>;

/// `2^64` as a float.
pub const PHASE_SCALE: f64 = 18_446_744_073_709_551_616.0;

/// Maps a real number to its fixed-point phase in `[0, 1)`.
pub fn phase(x: f64) -> u64 {
    let f = x.rem_euclid(1.0);
    (f * PHASE_SCALE) as u64
}

pub fn phase_to_f64(p: u64) -> f64 {
    (p as f64 / PHASE_SCALE).min(1.0 - f64::EPSILON / 2.0)
}

/// Circle distance `min(|u - v|, 1 - |u - v|)` in units of `2^-64`.
#[inline]
pub fn circle_distance(a: u64, b: u64) -> u64 {
    a.wrapping_sub(b).min(b.wrapping_sub(a))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorusMetric {
    /// max over coordinates of the circle distance
    Max,
    /// sum over coordinates of the circle distance
    Sum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorusSystem {
    dim: usize,
    /// One phase vector per generator of `Z^k`.
    rotations: Vec<Phases>,
    metric: TorusMetric,
    group: GroupSpec,
}

impl TorusSystem {
    pub fn new(rotations: &[Vec<f64>], metric: TorusMetric) -> Result<Self> {
        if rotations.is_empty() {
            return input("torus rotation needs at least one generator");
        }
        let dim = rotations[0].len();
        if dim == 0 || rotations.iter().any(|r| r.len() != dim) {
            return input("rotation vectors must share a positive dimension");
        }
        if rotations.iter().flatten().any(|x| !x.is_finite()) {
            return input("rotation entries must be finite");
        }
        Ok(TorusSystem {
            dim,
            rotations: rotations
                .iter()
                .map(|r| r.iter().map(|&x| phase(x)).collect())
                .collect(),
            metric,
            group: GroupSpec::lattice(rotations.len()),
        })
    }

    /// Rotation of the circle by the golden mean conjugate `(sqrt 5 - 1) / 2`.
    pub fn golden() -> Self {
        Self::new(&[vec![(5f64.sqrt() - 1.0) / 2.0]], TorusMetric::Max).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> TorusMetric {
        self.metric
    }

    /// `sum_i g_i alpha_i` as a phase vector.
    #[inline]
    pub fn offset(&self, g: &[i64]) -> Phases {
        let mut off: Phases = smallvec::smallvec![0; self.dim];
        for (gi, rot) in g.iter().zip(&self.rotations) {
            for (o, &a) in off.iter_mut().zip(rot) {
                *o = o.wrapping_add(a.wrapping_mul(*gi as u64));
            }
        }
        off
    }

    /// Fixed-point distance for the given metric, in units of `2^-64`.
    #[inline]
    pub fn distance_fixed(metric: TorusMetric, x: &[u64], y: &[u64]) -> u128 {
        match metric {
            TorusMetric::Max => x
                .iter()
                .zip(y)
                .map(|(&a, &b)| circle_distance(a, b))
                .max()
                .unwrap_or(0) as u128,
            TorusMetric::Sum => x
                .iter()
                .zip(y)
                .map(|(&a, &b)| circle_distance(a, b) as u128)
                .sum(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShiftMeasure {
    /// i.i.d. symbols with the given probabilities.
    Bernoulli { probabilities: Vec<f64> },
    /// Stationary Markov chain along `Z`; `transition[a][b] = P(b | a)`.
    Markov { transition: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq)]
enum ShiftLaw {
    Bernoulli { cumulative: Vec<f64> },
    Markov {
        stationary_cum: Vec<f64>,
        forward_cum: Vec<Vec<f64>>,
        backward_cum: Vec<Vec<f64>>,
    },
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = p
        .iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = f64::INFINITY;
    }
    out
}

#[inline]
fn pick(cum: &[f64], u: f64) -> u8 {
    cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1) as u8
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return input(format!("{what} has a negative or non-finite entry"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return input(format!("{what} sums to {s}, expected 1"));
    }
    Ok(())
}

/// Stationary distribution by power iteration.
fn stationary(t: &[Vec<f64>]) -> Vec<f64> {
    let k = t.len();
    let mut pi = vec![1.0 / k as f64; k];
    for _ in 0..10_000 {
        let mut next = vec![0.0; k];
        for a in 0..k {
            for b in 0..k {
                next[b] += pi[a] * t[a][b];
            }
        }
        let diff: f64 = next.iter().zip(&pi).map(|(x, y)| (x - y).abs()).sum();
        pi = next;
        if diff < 1e-15 {
            break;
        }
    }
    pi
}

/// A point of `A^G`: symbols are read from the explicit window when present,
/// otherwise derived from `(seed, coordinate)`. `shift` records the group
/// element the point has been moved by: `x(h) = base(h * shift)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubshiftPoint {
    pub seed: u64,
    pub shift: GroupElement,
    pub window: Option<Arc<BTreeMap<GroupElement, u8>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubshiftSystem {
    group: GroupSpec,
    alphabet: u8,
    measure: ShiftMeasure,
    law: ShiftLaw,
    metric_radius: usize,
    /// `(h, 2^(W - |h|))` for every `h` with word length at most `W`.
    metric_ball: Vec<(GroupElement, u64)>,
}

pub const DEFAULT_METRIC_RADIUS: usize = 16;

impl SubshiftSystem {
    pub fn new(group: GroupSpec, measure: ShiftMeasure, metric_radius: usize) -> Result<Self> {
        group.validate()?;
        if group.is_finite() {
            return Err(Error::Unsupported(
                "subshifts are built over infinite groups".into(),
            ));
        }
        if metric_radius > 40 {
            return input("metric radius above 40 is not supported");
        }
        let (alphabet, law) = match &measure {
            ShiftMeasure::Bernoulli { probabilities } => {
                check_distribution(probabilities, "Bernoulli probabilities")?;
                (
                    probabilities.len(),
                    ShiftLaw::Bernoulli {
                        cumulative: cumulative(probabilities),
                    },
                )
            }
            ShiftMeasure::Markov { transition } => {
                if group != GroupSpec::lattice(1) {
                    return Err(Error::Unsupported(
                        "Markov measures are only supported over Z".into(),
                    ));
                }
                let k = transition.len();
                for row in transition {
                    if row.len() != k {
                        return input("transition matrix must be square");
                    }
                    check_distribution(row, "transition row")?;
                }
                let pi = stationary(transition);
                let backward: Vec<Vec<f64>> = (0..k)
                    .map(|a| {
                        (0..k)
                            .map(|b| if pi[a] > 0.0 { pi[b] * transition[b][a] / pi[a] } else { 1.0 / k as f64 })
                            .collect()
                    })
                    .collect();
                (
                    k,
                    ShiftLaw::Markov {
                        stationary_cum: cumulative(&pi),
                        forward_cum: transition.iter().map(|r| cumulative(r)).collect(),
                        backward_cum: backward.iter().map(|r| cumulative(r)).collect(),
                    },
                )
            }
        };
        if !(2..=255).contains(&alphabet) {
            return input("alphabet must have between 2 and 255 symbols");
        }
        let ball = group.word_ball(&group.standard_generators(), metric_radius, 5_000_000)?;
        let metric_ball = ball
            .into_iter()
            .map(|(h, w)| (h, 1u64 << (metric_radius - w)))
            .collect();
        Ok(SubshiftSystem {
            group,
            alphabet: alphabet as u8,
            measure,
            law,
            metric_radius,
            metric_ball,
        })
    }

    /// Bernoulli(p) full shift on `{0,1}^G` with `P(1) = p`.
    pub fn bernoulli(group: GroupSpec, p: f64) -> Result<Self> {
        let radius = match group {
            GroupSpec::Heisenberg3 => 6,
            _ => DEFAULT_METRIC_RADIUS,
        };
        Self::new(
            group,
            ShiftMeasure::Bernoulli {
                probabilities: vec![1.0 - p, p],
            },
            radius,
        )
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn measure(&self) -> &ShiftMeasure {
        &self.measure
    }

    pub fn metric_radius(&self) -> usize {
        self.metric_radius
    }

    pub fn metric_ball(&self) -> &[(GroupElement, u64)] {
        &self.metric_ball
    }

    /// Diameter of the truncated metric: `sum_{|h| <= W} 2^{-|h|}`.
    pub fn diameter(&self) -> f64 {
        let total: u64 = self.metric_ball.iter().map(|(_, w)| w).sum();
        total as f64 / (1u64 << self.metric_radius) as f64
    }

    /// Mass `sum_{|h| > W} 2^{-|h|}` dropped by truncating the metric, for
    /// lattices (`None` for the Heisenberg group).
    pub fn truncation_bound(&self) -> Option<f64> {
        let GroupSpec::Lattice { dim } = self.group else {
            return None;
        };
        // sphere sizes of the l1 ball in Z^d
        let sphere = |k: usize| -> f64 {
            if k == 0 {
                return 1.0;
            }
            // sum_j 2^j C(d, j) C(k-1, j-1)
            (1..=dim.min(k))
                .map(|j| 2f64.powi(j as i32) * binom(dim, j) * binom(k - 1, j - 1))
                .sum()
        };
        Some(
            (self.metric_radius + 1..self.metric_radius + 400)
                .map(|k| sphere(k) * 0.5f64.powi(k as i32))
                .sum(),
        )
    }

    fn base_symbol(&self, seed: u64, c: &GroupElement) -> u8 {
        match &self.law {
            ShiftLaw::Bernoulli { cumulative } => {
                pick(cumulative, rng::unit_f64(rng::hash_coords(seed, c.coords())))
            }
            ShiftLaw::Markov { .. } => self.markov_range(seed, c.0[0], c.0[0])[0],
        }
    }

    /// Markov chain symbols on `[lo, hi]`: `x(0)` from the stationary law,
    /// then forward for positive and backward for negative coordinates.
    fn markov_range(&self, seed: u64, lo: i64, hi: i64) -> Vec<u8> {
        let ShiftLaw::Markov {
            stationary_cum,
            forward_cum,
            backward_cum,
        } = &self.law
        else {
            unreachable!("only called for Markov laws")
        };
        let u = |k: i64| rng::unit_f64(rng::hash_coords(seed, &[k]));
        let x0 = pick(stationary_cum, u(0));
        let mut out = Vec::with_capacity((hi - lo + 1) as usize);
        let mut cur = x0;
        let mut neg = Vec::new();
        if lo < 0 {
            for k in (lo..0).rev() {
                cur = pick(&backward_cum[cur as usize], u(k));
                if k <= hi {
                    neg.push(cur);
                }
            }
            neg.reverse();
            out.extend(neg);
        }
        cur = x0;
        if lo <= 0 && 0 <= hi {
            out.push(x0);
        }
        for k in 1..=hi.max(0) {
            cur = pick(&forward_cum[cur as usize], u(k));
            if k >= lo {
                out.push(cur);
            }
        }
        out
    }

    /// `x(h)`.
    pub fn coordinate(&self, x: &SubshiftPoint, h: &GroupElement) -> u8 {
        let c = self.group.mul(h, &x.shift);
        if let Some(w) = &x.window {
            if let Some(&s) = w.get(&c) {
                return s;
            }
        }
        self.base_symbol(x.seed, &c)
    }

    /// Symbols of `x` at every coordinate in `coords`.
    pub fn coordinates(&self, x: &SubshiftPoint, coords: &[GroupElement]) -> Vec<u8> {
        if matches!(self.law, ShiftLaw::Markov { .. }) && x.window.is_none() && !coords.is_empty() {
            let shift = x.shift.0[0];
            let lo = coords.iter().map(|c| c.0[0]).min().unwrap() + shift;
            let hi = coords.iter().map(|c| c.0[0]).max().unwrap() + shift;
            let run = self.markov_range(x.seed, lo, hi);
            return coords
                .iter()
                .map(|c| run[(c.0[0] + shift - lo) as usize])
                .collect();
        }
        coords.iter().map(|c| self.coordinate(x, c)).collect()
    }

    /// A point with the given explicit symbols; all other coordinates come from `seed`.
    pub fn point_with_window(
        &self,
        seed: u64,
        window: impl IntoIterator<Item = (GroupElement, u8)>,
    ) -> Result<SubshiftPoint> {
        let mut map = BTreeMap::new();
        for (g, s) in window {
            self.group.check(&g)?;
            if s >= self.alphabet {
                return input(format!("symbol {s} outside alphabet of size {}", self.alphabet));
            }
            map.insert(g, s);
        }
        Ok(SubshiftPoint {
            seed,
            shift: self.group.identity(),
            window: Some(Arc::new(map)),
        })
    }

    /// A point agreeing with `x` on `keep` (coordinates of `x`), otherwise fresh from `seed`.
    pub fn twin(&self, x: &SubshiftPoint, keep: &[GroupElement], seed: u64) -> SubshiftPoint {
        let symbols = self.coordinates(x, keep);
        let map: BTreeMap<_, _> = keep.iter().cloned().zip(symbols).collect();
        SubshiftPoint {
            seed,
            shift: self.group.identity(),
            window: Some(Arc::new(map)),
        }
    }

    fn is_bernoulli(&self) -> bool {
        matches!(self.law, ShiftLaw::Bernoulli { .. })
    }
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FiniteMetric {
    /// 1 between distinct atoms
    Discrete,
    /// `min(|i - j|, N - |i - j|) / N`
    Cyclic,
    Matrix { entries: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSystem {
    group: GroupSpec,
    size: usize,
    /// Per generator, the permutation and all its powers up to its order.
    powers: Vec<Vec<Vec<u32>>>,
    metric: Vec<f64>,
    weights: Vec<Ratio<u64>>,
}

fn perm_order(p: &[usize]) -> usize {
    let mut seen = vec![false; p.len()];
    let mut order = 1usize;
    for s in 0..p.len() {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut i = s;
        while !seen[i] {
            seen[i] = true;
            i = p[i];
            len += 1;
        }
        order = num_integer::lcm(order, len);
    }
    order
}

impl FiniteSystem {
    pub fn new(
        group: GroupSpec,
        generators: Vec<Vec<usize>>,
        metric: FiniteMetric,
        weights: Option<Vec<Ratio<u64>>>,
    ) -> Result<Self> {
        group.validate()?;
        if matches!(group, GroupSpec::Heisenberg3) {
            return Err(Error::Unsupported(
                "finite systems need an abelian group".into(),
            ));
        }
        if generators.len() != group.rank() {
            return input(format!(
                "group of rank {} needs {} generator permutations, got {}",
                group.rank(),
                group.rank(),
                generators.len()
            ));
        }
        let size = generators.first().map(|p| p.len()).unwrap_or(0);
        if size == 0 {
            return input("finite system needs at least one atom");
        }
        for p in &generators {
            let mut seen = vec![false; size];
            if p.len() != size || p.iter().any(|&i| i >= size || std::mem::replace(&mut seen[i], true)) {
                return input("generator is not a permutation of the atoms");
            }
        }
        for a in &generators {
            for b in &generators {
                if (0..size).any(|i| a[b[i]] != b[a[i]]) {
                    return input("generator permutations must commute");
                }
            }
        }
        if let GroupSpec::FiniteAbelian { moduli } = &group {
            for (p, &m) in generators.iter().zip(moduli) {
                if m as usize % perm_order(p) != 0 {
                    return input(format!("generator order does not divide modulus {m}"));
                }
            }
        }
        let powers = generators
            .iter()
            .map(|p| {
                let ord = perm_order(p);
                let mut out = Vec::with_capacity(ord);
                let mut cur: Vec<u32> = (0..size as u32).collect();
                for _ in 0..ord {
                    out.push(cur.clone());
                    cur = cur.iter().map(|&i| p[i as usize] as u32).collect();
                }
                out
            })
            .collect();
        let metric: Vec<f64> = match metric {
            FiniteMetric::Discrete => (0..size * size)
                .map(|k| if k / size == k % size { 0.0 } else { 1.0 })
                .collect(),
            FiniteMetric::Cyclic => (0..size * size)
                .map(|k| {
                    let d = (k / size).abs_diff(k % size);
                    d.min(size - d) as f64 / size as f64
                })
                .collect(),
            FiniteMetric::Matrix { entries } => {
                if entries.len() != size || entries.iter().any(|r| r.len() != size) {
                    return input("metric matrix must be N x N");
                }
                entries.into_iter().flatten().collect()
            }
        };
        validate_metric(&metric, size)?;
        let weights = match weights {
            Some(w) => {
                if w.len() != size {
                    return input("measure must have one weight per atom");
                }
                if w.iter().fold(Ratio::zero(), |a: Ratio<u64>, b| a + b) != Ratio::one() {
                    return input("measure weights must sum to 1");
                }
                w
            }
            None => vec![Ratio::new(1, size as u64); size],
        };
        Ok(FiniteSystem {
            group,
            size,
            powers,
            metric,
            weights,
        })
    }

    /// `Z` acting on `N` atoms by `i -> i + 1 mod N`, cyclic metric, uniform measure.
    pub fn cyclic_shift(n: usize) -> Result<Self> {
        let p: Vec<usize> = (0..n).map(|i| (i + 1) % n.max(1)).collect();
        Self::new(GroupSpec::lattice(1), vec![p], FiniteMetric::Cyclic, None)
    }

    /// Trivial `Z` action.
    pub fn identity(n: usize, metric: FiniteMetric, weights: Option<Vec<Ratio<u64>>>) -> Result<Self> {
        Self::new(GroupSpec::lattice(1), vec![(0..n).collect()], metric, weights)
    }

    /// A finite abelian group acting on itself by translation; atoms are the
    /// group elements in lexicographic order, uniform measure.
    pub fn regular(moduli: &[u64], metric: FiniteMetric) -> Result<Self> {
        let group = GroupSpec::finite_abelian(moduli);
        group.validate()?;
        let elems = group.elements()?;
        let index = |g: &GroupElement| elems.binary_search(g).expect("closed");
        let gens = (0..moduli.len())
            .map(|i| {
                let mut c = vec![0i64; moduli.len()];
                c[i] = 1;
                let s = group.element(&c).expect("rank");
                elems.iter().map(|g| index(&group.mul(g, &s))).collect()
            })
            .collect();
        Self::new(group, gens, metric, None)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[Ratio<u64>] {
        &self.weights
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.metric[a * self.size + b]
    }

    pub fn diameter(&self) -> f64 {
        self.metric.iter().cloned().fold(0.0, f64::max)
    }

    #[inline]
    pub fn act_atom(&self, g: &[i64], x: usize) -> usize {
        let mut x = x as u32;
        for (gi, pw) in g.iter().zip(&self.powers) {
            let k = gi.rem_euclid(pw.len() as i64) as usize;
            x = pw[k][x as usize];
        }
        x as usize
    }

    /// Weights scaled to integers over a common denominator.
    pub fn integer_weights(&self) -> Result<(Vec<u128>, u128)> {
        let mut den: u128 = 1;
        for w in &self.weights {
            den = num_integer::lcm(den, *w.denom() as u128);
            if den > (1u128 << 100) {
                return Err(Error::Numerical("measure denominators too large".into()));
            }
        }
        let ints = self
            .weights
            .iter()
            .map(|w| *w.numer() as u128 * (den / *w.denom() as u128))
            .collect();
        Ok((ints, den))
    }
}

fn validate_metric(m: &[f64], n: usize) -> Result<()> {
    for i in 0..n {
        if m[i * n + i] != 0.0 {
            return input("metric must vanish on the diagonal");
        }
        for j in 0..n {
            let d = m[i * n + j];
            if !(d >= 0.0) || !d.is_finite() {
                return input("metric entries must be finite and nonnegative");
            }
            if i != j && d == 0.0 {
                return input("metric must separate distinct atoms");
            }
            if d != m[j * n + i] {
                return input("metric must be symmetric");
            }
            for k in 0..n {
                if m[i * n + k] > d + m[j * n + k] + 1e-12 {
                    return input("metric violates the triangle inequality");
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    Torus(Phases),
    Subshift(SubshiftPoint),
    Atom(usize),
}

impl Point {
    pub fn torus(coords: &[f64]) -> Point {
        Point::Torus(coords.iter().map(|&x| phase(x)).collect())
    }

    pub fn torus_f64(&self) -> Option<Vec<f64>> {
        match self {
            Point::Torus(p) => Some(p.iter().map(|&x| phase_to_f64(x)).collect()),
            _ => None,
        }
    }
}

/// How the invariant measure is accessed.
#[derive(Clone, Debug, PartialEq)]
pub enum MeasureAccess<'a> {
    /// i.i.d. draws reproducible from a seed
    Sampler,
    /// exact probabilities over the atoms of a finite system
    Exact(&'a [Ratio<u64>]),
}

#[derive(Clone, Debug, PartialEq)]
pub enum DynamicalSystem {
    Torus(TorusSystem),
    Subshift(SubshiftSystem),
    Finite(FiniteSystem),
}

impl DynamicalSystem {
    pub fn group(&self) -> &GroupSpec {
        match self {
            DynamicalSystem::Torus(t) => &t.group,
            DynamicalSystem::Subshift(s) => &s.group,
            DynamicalSystem::Finite(f) => &f.group,
        }
    }

    pub fn measure(&self) -> MeasureAccess<'_> {
        match self {
            DynamicalSystem::Finite(f) => MeasureAccess::Exact(&f.weights),
            _ => MeasureAccess::Sampler,
        }
    }

    pub fn as_finite(&self) -> Option<&FiniteSystem> {
        match self {
            DynamicalSystem::Finite(f) => Some(f),
            _ => None,
        }
    }

    /// Diameter of the base metric.
    pub fn diameter(&self) -> f64 {
        match self {
            DynamicalSystem::Torus(t) => match t.metric {
                TorusMetric::Max => 0.5,
                TorusMetric::Sum => 0.5 * t.dim as f64,
            },
            DynamicalSystem::Subshift(s) => s.diameter(),
            DynamicalSystem::Finite(f) => f.diameter(),
        }
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        match (self, x) {
            (DynamicalSystem::Torus(t), Point::Torus(p)) if p.len() == t.dim => Ok(()),
            (DynamicalSystem::Subshift(s), Point::Subshift(p)) => s.group.check(&p.shift),
            (DynamicalSystem::Finite(f), Point::Atom(a)) if *a < f.size => Ok(()),
            _ => input("point does not belong to the system's state space"),
        }
    }

    /// The group action `(g, x) -> gx`.
    pub fn act(&self, g: &GroupElement, x: &Point) -> Result<Point> {
        self.group().check(g)?;
        self.check_point(x)?;
        Ok(self.act_unchecked(g, x))
    }

    #[inline]
    pub(crate) fn act_unchecked(&self, g: &GroupElement, x: &Point) -> Point {
        match (self, x) {
            (DynamicalSystem::Torus(t), Point::Torus(p)) => {
                let off = t.offset(g.coords());
                Point::Torus(p.iter().zip(&off).map(|(a, b)| a.wrapping_add(*b)).collect())
            }
            (DynamicalSystem::Subshift(s), Point::Subshift(p)) => Point::Subshift(SubshiftPoint {
                seed: p.seed,
                shift: s.group.mul(g, &p.shift),
                window: p.window.clone(),
            }),
            (DynamicalSystem::Finite(f), Point::Atom(a)) => Point::Atom(f.act_atom(g.coords(), *a)),
            _ => unreachable!("point kind checked by caller"),
        }
    }

    /// Base metric `d(x, y)`.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(match (self, x, y) {
            (DynamicalSystem::Torus(t), Point::Torus(a), Point::Torus(b)) => {
                TorusSystem::distance_fixed(t.metric, a, b) as f64 / PHASE_SCALE
            }
            (DynamicalSystem::Subshift(s), Point::Subshift(a), Point::Subshift(b)) => {
                let total: u64 = s
                    .metric_ball
                    .iter()
                    .filter(|(h, _)| s.coordinate(a, h) != s.coordinate(b, h))
                    .map(|(_, w)| w)
                    .sum();
                total as f64 / (1u64 << s.metric_radius) as f64
            }
            (DynamicalSystem::Finite(f), Point::Atom(a), Point::Atom(b)) => f.distance(*a, *b),
            _ => unreachable!(),
        })
    }

    /// `count` i.i.d. draws from the invariant measure. Draw `i` depends only
    /// on `(seed, i)`.
    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<Point>> {
        let finite = match self {
            DynamicalSystem::Finite(f) => Some(f.integer_weights()?),
            _ => None,
        };
        Ok(par::map_indexed(count, |i| {
            let mut r = rng::rng(seed, i as u64);
            match self {
                DynamicalSystem::Torus(t) => Point::Torus((0..t.dim).map(|_| r.gen::<u64>()).collect()),
                DynamicalSystem::Subshift(s) => Point::Subshift(SubshiftPoint {
                    seed: r.gen(),
                    shift: s.group.identity(),
                    window: None,
                }),
                DynamicalSystem::Finite(_) => {
                    let (w, total) = finite.as_ref().expect("computed above");
                    let mut u = r.gen_range(0..*total);
                    let mut atom = w.len() - 1;
                    for (k, &wk) in w.iter().enumerate() {
                        if u < wk {
                            atom = k;
                            break;
                        }
                        u -= wk;
                    }
                    Point::Atom(atom)
                }
            }
        }))
    }

    /// Max over a fixed family of test functions of `|E f(gX) - E f(X)|`.
    ///
    /// Torus: indicators of the half circles `[0, 1/2)` and `[1/4, 3/4)` in
    /// every coordinate. Subshift: cylinder indicators `[x(h) = a]` for
    /// `|h| <= 2`. Both use the same samples for the two expectations.
    /// Finite systems are evaluated exactly on atom indicators.
    pub fn invariance_residual(&self, g: &GroupElement, seed: u64, count: usize) -> Result<f64> {
        self.group().check(g)?;
        if let DynamicalSystem::Finite(f) = self {
            let mut pushed = vec![Ratio::<u64>::zero(); f.size];
            for a in 0..f.size {
                let b = f.act_atom(g.coords(), a);
                pushed[b] = pushed[b] + f.weights[a];
            }
            let worst = pushed
                .iter()
                .zip(&f.weights)
                .map(|(p, w)| if p > w { p - w } else { w - p })
                .max()
                .unwrap_or_else(Ratio::zero);
            return Ok(*worst.numer() as f64 / *worst.denom() as f64);
        }
        if count == 0 {
            return input("invariance residual needs samples");
        }
        let xs = self.sample(seed, count)?;
        let tests = self.test_functions();
        let diffs: Vec<Vec<f64>> = par::map_indexed(xs.len(), |i| {
            let gx = self.act_unchecked(g, &xs[i]);
            tests.iter().map(|t| self.eval_test(t, &gx) - self.eval_test(t, &xs[i])).collect()
        });
        let n = count as f64;
        Ok((0..tests.len())
            .map(|k| (diffs.iter().map(|d| d[k]).sum::<f64>() / n).abs())
            .fold(0.0, f64::max))
    }

    fn test_functions(&self) -> Vec<TestFunction> {
        match self {
            DynamicalSystem::Torus(t) => (0..t.dim)
                .flat_map(|c| [(c, 0u64), (c, 1u64 << 62)])
                .map(|(c, lo)| TestFunction::HalfCircle { coord: c, start: lo })
                .collect(),
            DynamicalSystem::Subshift(s) => {
                let ball = s
                    .group
                    .word_ball(&s.group.standard_generators(), 2, 10_000)
                    .expect("small ball");
                ball.into_iter()
                    .flat_map(|(h, _)| (0..s.alphabet).map(move |a| TestFunction::Cylinder { at: h.clone(), symbol: a }))
                    .collect()
            }
            DynamicalSystem::Finite(_) => Vec::new(),
        }
    }

    fn eval_test(&self, t: &TestFunction, x: &Point) -> f64 {
        match (t, self, x) {
            (TestFunction::HalfCircle { coord, start }, _, Point::Torus(p)) => {
                (p[*coord].wrapping_sub(*start) < (1u64 << 63)) as u8 as f64
            }
            (TestFunction::Cylinder { at, symbol }, DynamicalSystem::Subshift(s), Point::Subshift(p)) => {
                (s.coordinate(p, at) == *symbol) as u8 as f64
            }
            _ => 0.0,
        }
    }

    pub fn is_bernoulli_shift(&self) -> bool {
        matches!(self, DynamicalSystem::Subshift(s) if s.is_bernoulli())
    }
}

enum TestFunction {
    HalfCircle { coord: usize, start: u64 },
    Cylinder { at: GroupElement, symbol: u8 },
}
