//! Precomputed orbit data for fast evaluation of a mean semimetric on many
//! pairs of sample points.
//!
//! For each sample `x` the data needed to evaluate `rho(gx, .)` for every
//! `g` in the Følner set is extracted once. Pairwise distances then reduce to
//! flat array scans whose terms and summation order are exactly those of
//! [`crate::metrics::mean_semimetric`], so both paths agree bit for bit.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{input, Result};
use crate::folner::FolnerSet;
use crate::group::GroupElement;
use crate::metrics::{fixed_mean, SemimetricSpec};
use crate::par;
use crate::systems::{DynamicalSystem, Point, TorusMetric};

#[derive(Clone, Debug)]
enum Data {
    /// `[point][coord]` phases of `x`; the orbit sum is `|F|` times the
    /// distance of the base points
    Torus { metric: TorusMetric, phases: Vec<u64> },
    /// `[point][g]` partition labels of `gx`; a mismatch contributes 2
    Labels { labels: Vec<u32> },
    /// `[point][k]` symbols of `x` on the support of the shift metric over
    /// `F`, with the integer weight of each support coordinate
    Symbols { weights: Vec<u64>, symbols: Vec<u8> },
    /// `[point][g]` atom of `gx`, distances from the metric table
    Atoms { atoms: Vec<u32>, table: Vec<f64>, size: usize },
    /// `[point][g]` values `h(gx)`
    Values { values: Vec<Complex64> },
}

#[derive(Clone, Debug)]
pub struct OrbitFeatures {
    points: usize,
    fsize: usize,
    stride: usize,
    scale: f64,
    data: Data,
}

/// Terms are checked against the threshold in blocks of this many.
const BLOCK: usize = 32;

impl OrbitFeatures {
    pub fn build(sys: &DynamicalSystem, spec: &SemimetricSpec, set: &FolnerSet, points: &[Point]) -> Result<Self> {
        Self::build_with(sys, spec, set, points, true)
    }

    /// Same as [`build`](Self::build); `parallel = false` forces a single thread.
    pub fn build_with(
        sys: &DynamicalSystem,
        spec: &SemimetricSpec,
        set: &FolnerSet,
        points: &[Point],
        parallel: bool,
    ) -> Result<Self> {
        spec.validate(sys)?;
        if set.is_empty() {
            return input("Følner set is empty");
        }
        for x in points {
            sys.check_point(x)?;
        }
        fn map<T: Send + Clone>(len: usize, parallel: bool, f: &(dyn Fn(usize) -> Result<Vec<T>> + Sync)) -> Result<Vec<T>> {
            let rows = if parallel { par::map_indexed(len, f) } else { par::map_indexed_seq(len, f) };
            Ok(rows.into_iter().collect::<Result<Vec<_>>>()?.concat())
        }
        let elems = set.elements();
        let fsize = elems.len();
        let scale = spec.fixed_scale(sys).unwrap_or(1.0);
        let (data, stride) = match (spec, sys) {
            (SemimetricSpec::Base | SemimetricSpec::Torus { .. }, DynamicalSystem::Torus(t)) => {
                let metric = match spec {
                    SemimetricSpec::Torus { metric } => *metric,
                    _ => t.metric(),
                };
                let dim = t.dim();
                // rotations preserve differences, so every orbit term equals the first
                let f = |i: usize| -> Result<Vec<u64>> {
                    let Point::Torus(p) = &points[i] else { unreachable!() };
                    Ok(p.to_vec())
                };
                let phases = map(points.len(), parallel, &f)?;
                (Data::Torus { metric, phases }, dim)
            }
            (SemimetricSpec::Base, DynamicalSystem::Subshift(s)) => {
                let group = s.group();
                let mut support: BTreeMap<GroupElement, u64> = BTreeMap::new();
                for g in elems {
                    for (h, w) in s.metric_ball() {
                        *support.entry(group.mul(h, g)).or_default() += w;
                    }
                }
                let coords: Vec<GroupElement> = support.keys().cloned().collect();
                let weights: Vec<u64> = support.into_values().collect();
                let f = |i: usize| -> Result<Vec<u8>> {
                    let Point::Subshift(p) = &points[i] else { unreachable!() };
                    Ok(s.coordinates(p, &coords))
                };
                let symbols = map(points.len(), parallel, &f)?;
                let stride = weights.len();
                (Data::Symbols { weights, symbols }, stride)
            }
            (SemimetricSpec::Base, DynamicalSystem::Finite(fs)) => {
                let f = |i: usize| -> Result<Vec<u32>> {
                    let Point::Atom(a) = &points[i] else { unreachable!() };
                    Ok(elems.iter().map(|g| fs.act_atom(g.coords(), *a) as u32).collect())
                };
                let atoms = map(points.len(), parallel, &f)?;
                let size = fs.size();
                let table = (0..size * size).map(|k| fs.distance(k / size, k % size)).collect();
                (Data::Atoms { atoms, table, size }, fsize)
            }
            (SemimetricSpec::PartitionHamming { partition }, _) => {
                let f = |i: usize| -> Result<Vec<u32>> {
                    elems
                        .iter()
                        .map(|g| Ok(partition.label(sys, &sys.act_unchecked(g, &points[i]))? as u32))
                        .collect()
                };
                (Data::Labels { labels: map(points.len(), parallel, &f)? }, fsize)
            }
            (SemimetricSpec::Observable { observable }, _) => {
                let f = |i: usize| -> Result<Vec<Complex64>> {
                    Ok(elems.iter().map(|g| observable.eval(sys, &sys.act_unchecked(g, &points[i]))).collect())
                };
                (Data::Values { values: map(points.len(), parallel, &f)? }, fsize)
            }
            _ => return input("semimetric does not apply to this system"),
        };
        Ok(OrbitFeatures {
            points: points.len(),
            fsize,
            stride,
            scale,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }

    pub fn folner_size(&self) -> usize {
        self.fsize
    }

    /// `rho_bar_F(x_i, x_j)`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.scan(i, j, f64::INFINITY).unwrap_or(f64::INFINITY)
    }

    /// Whether `rho_bar_F(x_i, x_j) < radius`, stopping as soon as the
    /// partial sum alone reaches the radius.
    pub fn within(&self, i: usize, j: usize, radius: f64) -> bool {
        matches!(self.scan(i, j, radius), Some(v) if v < radius)
    }

    /// Full mean, or `None` once a partial mean reaches `stop`.
    fn scan(&self, i: usize, j: usize, stop: f64) -> Option<f64> {
        let (a, b) = (i * self.stride, j * self.stride);
        let n = self.fsize as u128;
        match &self.data {
            Data::Torus { metric, phases } => {
                let (x, y) = (&phases[a..a + self.stride], &phases[b..b + self.stride]);
                let term = crate::systems::TorusSystem::distance_fixed(*metric, x, y);
                Some(fixed_mean(term * n, n, self.scale))
            }
            Data::Labels { labels } => {
                let (x, y) = (&labels[a..a + self.stride], &labels[b..b + self.stride]);
                let mut total = 0u128;
                for (k, (p, q)) in x.iter().zip(y).enumerate() {
                    total += 2 * (p != q) as u128;
                    if (k + 1) % BLOCK == 0 && fixed_mean(total, n, self.scale) >= stop {
                        return None;
                    }
                }
                Some(fixed_mean(total, n, self.scale))
            }
            Data::Symbols { weights, symbols } => {
                let (x, y) = (&symbols[a..a + self.stride], &symbols[b..b + self.stride]);
                let mut total = 0u128;
                for (k, ((p, q), w)) in x.iter().zip(y).zip(weights).enumerate() {
                    if p != q {
                        total += *w as u128;
                    }
                    if (k + 1) % BLOCK == 0 && fixed_mean(total, n, self.scale) >= stop {
                        return None;
                    }
                }
                Some(fixed_mean(total, n, self.scale))
            }
            Data::Atoms { atoms, table, size } => {
                let (x, y) = (&atoms[a..a + self.stride], &atoms[b..b + self.stride]);
                let mut total = 0.0;
                for (k, (p, q)) in x.iter().zip(y).enumerate() {
                    total += table[*p as usize * size + *q as usize];
                    if (k + 1) % BLOCK == 0 && total / self.fsize as f64 >= stop {
                        return None;
                    }
                }
                Some(total / self.fsize as f64)
            }
            Data::Values { values } => {
                let (x, y) = (&values[a..a + self.stride], &values[b..b + self.stride]);
                let mut total = 0.0;
                for (k, (p, q)) in x.iter().zip(y).enumerate() {
                    total += (p - q).norm();
                    if (k + 1) % BLOCK == 0 && total / self.fsize as f64 >= stop {
                        return None;
                    }
                }
                Some(total / self.fsize as f64)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::folner::{FolnerRule, FolnerSequence, SideFn};
    use crate::group::GroupSpec;
    use crate::metrics::{mean_semimetric, Observable, Partition};
    use crate::systems::{FiniteMetric, FiniteSystem, ShiftMeasure, SubshiftSystem, TorusSystem};
    use proptest::prelude::*;

    fn boxes(dim: usize) -> FolnerSequence {
        FolnerSequence::new(GroupSpec::lattice(dim), FolnerRule::Boxes { side: SideFn::Identity }).unwrap()
    }

    fn assert_agrees(sys: &DynamicalSystem, spec: &SemimetricSpec, seq: &FolnerSequence, n: usize, seed: u64) {
        let set = seq.set(n).unwrap();
        let pts = sys.sample(seed, 6).unwrap();
        let feats = OrbitFeatures::build(sys, spec, &set, &pts).unwrap();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                let slow = mean_semimetric(sys, spec, &set, &pts[i], &pts[j]).unwrap();
                let fast = feats.distance(i, j);
                assert_eq!(slow.to_bits(), fast.to_bits(), "{spec:?} n={n} ({i},{j})");
                for r in [slow, slow * 0.999, slow * 1.001 + 1e-12] {
                    assert_eq!(feats.within(i, j, r), slow < r);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn torus_features_match(seed in any::<u64>(), n in 1usize..80, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let sys = DynamicalSystem::Torus(TorusSystem::new(&[vec![a, b]], TorusMetric::Max).unwrap());
            let seq = boxes(1);
            assert_agrees(&sys, &SemimetricSpec::Base, &seq, n, seed);
            assert_agrees(&sys, &SemimetricSpec::Torus { metric: TorusMetric::Sum }, &seq, n, seed);
            assert_agrees(&sys, &SemimetricSpec::Observable { observable: Observable::AbsSin { index: 1 } }, &seq, n, seed);
            let p = Partition::torus_intervals(&[0.0, 0.3, 0.55], 2).unwrap();
            assert_agrees(&sys, &SemimetricSpec::PartitionHamming { partition: p }, &seq, n, seed);
        }

        #[test]
        fn shift_features_match(seed in any::<u64>(), n in 1usize..6, p in 0.05f64..0.95) {
            let s = SubshiftSystem::new(
                GroupSpec::lattice(2),
                ShiftMeasure::Bernoulli { probabilities: vec![1.0 - p, p] },
                5,
            ).unwrap();
            let sys = DynamicalSystem::Subshift(s);
            let seq = boxes(2);
            assert_agrees(&sys, &SemimetricSpec::Base, &seq, n, seed);
            let part = Partition::origin_cylinder(&sys).unwrap();
            assert_agrees(&sys, &SemimetricSpec::PartitionHamming { partition: part }, &seq, n, seed);
            assert_agrees(&sys, &SemimetricSpec::Observable { observable: Observable::Spin }, &seq, n, seed);
        }

        #[test]
        fn finite_features_match(seed in any::<u64>(), n in 1usize..30) {
            let sys = DynamicalSystem::Finite(FiniteSystem::cyclic_shift(9).unwrap());
            assert_agrees(&sys, &SemimetricSpec::Base, &boxes(1), n, seed);
            let values = (0..9).map(|k| (k * k % 5) as f64).collect();
            let obs = Observable::AtomValues { values };
            assert_agrees(&sys, &SemimetricSpec::Observable { observable: obs }, &boxes(1), n, seed);
        }
    }

    #[test]
    fn heisenberg_and_markov_features_match() {
        let h = DynamicalSystem::Subshift(SubshiftSystem::bernoulli(GroupSpec::Heisenberg3, 0.5).unwrap());
        let seq = FolnerSequence::default_for(&GroupSpec::Heisenberg3).unwrap();
        assert_agrees(&h, &SemimetricSpec::Base, &seq, 2, 3);
        let m = DynamicalSystem::Subshift(
            SubshiftSystem::new(
                GroupSpec::lattice(1),
                ShiftMeasure::Markov { transition: vec![vec![0.2, 0.8], vec![0.7, 0.3]] },
                10,
            )
            .unwrap(),
        );
        assert_agrees(&m, &SemimetricSpec::Base, &boxes(1), 12, 4);
        let f = DynamicalSystem::Finite(FiniteSystem::identity(4, FiniteMetric::Discrete, None).unwrap());
        assert_agrees(&f, &SemimetricSpec::Base, &boxes(1), 3, 5);
    }

    #[test]
    fn sequential_build_is_identical() {
        let sys = DynamicalSystem::Torus(TorusSystem::golden());
        let set = boxes(1).set(50).unwrap();
        let pts = sys.sample(2, 40).unwrap();
        let a = OrbitFeatures::build_with(&sys, &SemimetricSpec::Base, &set, &pts, true).unwrap();
        let b = OrbitFeatures::build_with(&sys, &SemimetricSpec::Base, &set, &pts, false).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                assert_eq!(a.distance(i, j).to_bits(), b.distance(i, j).to_bits());
            }
        }
    }
}
