//! Pointwise and Følner-averaged semimetrics.
//!
//! Integer-valued distances (torus phases, shift metrics, partition
//! mismatches) are summed exactly in `u128` and converted to `f64` once at
//! the end, so a mean over an isometric orbit equals the pointwise distance
//! bit for bit. Real-valued distances are summed in the enumeration order of
//! the Følner set.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::folner::FolnerSet;
use crate::group::GroupElement;
use crate::systems::{phase, DynamicalSystem, Point, TorusMetric, TorusSystem, PHASE_SCALE};

/// Bounded observables `h : X -> C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Observable {
    /// `x_i` as a number in `[0, 1)` (torus)
    Coordinate { index: usize },
    /// `exp(2 pi i k.x)` (torus)
    Character { frequencies: Vec<i64> },
    /// `cos(2 pi x_i)` (torus)
    Cos { index: usize },
    /// `|sin(2 pi x_i)|` (torus)
    AbsSin { index: usize },
    /// `1[x(at) = symbol]` (shift)
    Cylinder { at: GroupElement, symbol: u8 },
    /// `x(e)` as a number (shift)
    Symbol,
    /// `(-1)^{x(e)}` (shift)
    Spin,
    /// one value per atom (finite)
    AtomValues { values: Vec<f64> },
    Constant { value: f64 },
    /// `x -> inner(by . x)`
    Translated { by: GroupElement, inner: Box<Observable> },
}

impl Observable {
    pub fn translated(self, by: GroupElement) -> Observable {
        Observable::Translated {
            by,
            inner: Box::new(self),
        }
    }

    /// Checks that the observable makes sense on `sys`.
    pub fn validate(&self, sys: &DynamicalSystem) -> Result<()> {
        let ok = match (self, sys) {
            (Observable::Coordinate { index } | Observable::Cos { index } | Observable::AbsSin { index }, DynamicalSystem::Torus(t)) => *index < t.dim(),
            (Observable::Character { frequencies }, DynamicalSystem::Torus(t)) => frequencies.len() == t.dim(),
            (Observable::Cylinder { at, symbol }, DynamicalSystem::Subshift(s)) => {
                s.group().check(at)?;
                *symbol < s.alphabet()
            }
            (Observable::Symbol | Observable::Spin, DynamicalSystem::Subshift(_)) => true,
            (Observable::AtomValues { values }, DynamicalSystem::Finite(f)) => {
                values.len() == f.size() && values.iter().all(|v| v.is_finite())
            }
            (Observable::Constant { value }, _) => value.is_finite(),
            (Observable::Translated { by, inner }, _) => {
                sys.group().check(by)?;
                return inner.validate(sys);
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            input(format!("observable {self:?} does not apply to this system"))
        }
    }

    pub fn value(&self, sys: &DynamicalSystem, x: &Point) -> Result<Complex64> {
        self.validate(sys)?;
        sys.check_point(x)?;
        Ok(self.eval(sys, x))
    }

    pub(crate) fn eval(&self, sys: &DynamicalSystem, x: &Point) -> Complex64 {
        let tau = std::f64::consts::TAU;
        match (self, sys, x) {
            (Observable::Coordinate { index }, _, Point::Torus(p)) => Complex64::new(p[*index] as f64 / PHASE_SCALE, 0.0),
            (Observable::Character { frequencies }, _, Point::Torus(p)) => {
                let t = frequencies
                    .iter()
                    .zip(p)
                    .fold(0u64, |acc, (&k, &c)| acc.wrapping_add(c.wrapping_mul(k as u64)));
                Complex64::from_polar(1.0, tau * (t as f64 / PHASE_SCALE))
            }
            (Observable::Cos { index }, _, Point::Torus(p)) => Complex64::new((tau * (p[*index] as f64 / PHASE_SCALE)).cos(), 0.0),
            (Observable::AbsSin { index }, _, Point::Torus(p)) => {
                Complex64::new((tau * (p[*index] as f64 / PHASE_SCALE)).sin().abs(), 0.0)
            }
            (Observable::Cylinder { at, symbol }, DynamicalSystem::Subshift(s), Point::Subshift(p)) => {
                Complex64::new((s.coordinate(p, at) == *symbol) as u8 as f64, 0.0)
            }
            (Observable::Symbol, DynamicalSystem::Subshift(s), Point::Subshift(p)) => {
                Complex64::new(s.coordinate(p, &s.group().identity()) as f64, 0.0)
            }
            (Observable::Spin, DynamicalSystem::Subshift(s), Point::Subshift(p)) => {
                let v = if s.coordinate(p, &s.group().identity()) == 0 { 1.0 } else { -1.0 };
                Complex64::new(v, 0.0)
            }
            (Observable::AtomValues { values }, _, Point::Atom(a)) => Complex64::new(values[*a], 0.0),
            (Observable::Constant { value }, _, _) => Complex64::new(*value, 0.0),
            (Observable::Translated { by, inner }, _, _) => inner.eval(sys, &sys.act_unchecked(by, x)),
            _ => unreachable!("validated"),
        }
    }

    /// An upper bound for `sup |h|`.
    pub fn sup_bound(&self) -> f64 {
        match self {
            Observable::Coordinate { .. }
            | Observable::Character { .. }
            | Observable::Cos { .. }
            | Observable::AbsSin { .. }
            | Observable::Cylinder { .. }
            | Observable::Spin => 1.0,
            Observable::Symbol => 255.0,
            Observable::AtomValues { values } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
            Observable::Constant { value } => value.abs(),
            Observable::Translated { inner, .. } => inner.sup_bound(),
        }
    }
}

/// A cell of a partition, described by a membership predicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Cell {
    /// Product of half-open arcs `[lo, hi)`, one per torus coordinate.
    /// `hi < lo` wraps around; `hi - lo >= 1` is the whole circle.
    TorusBox { ranges: Vec<(f64, f64)> },
    /// Points whose symbols match the pattern.
    Cylinder { pattern: Vec<(GroupElement, u8)> },
    Atoms { atoms: Vec<usize> },
}

impl Cell {
    fn contains(&self, sys: &DynamicalSystem, x: &Point) -> bool {
        match (self, sys, x) {
            (Cell::TorusBox { ranges }, _, Point::Torus(p)) => ranges.iter().zip(p).all(|(&(lo, hi), &c)| {
                if hi - lo >= 1.0 {
                    return true;
                }
                let a = phase(lo);
                c.wrapping_sub(a) < phase(hi).wrapping_sub(a)
            }),
            (Cell::Cylinder { pattern }, DynamicalSystem::Subshift(s), Point::Subshift(p)) => {
                pattern.iter().all(|(h, a)| s.coordinate(p, h) == *a)
            }
            (Cell::Atoms { atoms }, _, Point::Atom(a)) => atoms.contains(a),
            _ => false,
        }
    }
}

/// A finite measurable partition. Labels run from 1 to the number of cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Partition {
    pub cells: Vec<Cell>,
}

impl Partition {
    /// Arcs `[c_i, c_{i+1})` of the circle in coordinate 0 (and the wrapping
    /// arc from the last cut back to the first).
    pub fn torus_intervals(cuts: &[f64], dim: usize) -> Result<Partition> {
        if cuts.is_empty() {
            return input("need at least one cut");
        }
        let mut c: Vec<f64> = cuts.iter().map(|x| x.rem_euclid(1.0)).collect();
        c.sort_by(f64::total_cmp);
        c.dedup();
        let full = (0.0, 1.0);
        let cells = if c.len() == 1 {
            vec![Cell::TorusBox { ranges: vec![full; dim] }]
        } else {
            (0..c.len())
                .map(|i| {
                    let mut ranges = vec![full; dim];
                    ranges[0] = (c[i], c[(i + 1) % c.len()]);
                    Cell::TorusBox { ranges }
                })
                .collect()
        };
        Ok(Partition { cells })
    }

    /// Cells `[x(e) = a]` for each symbol `a`.
    pub fn origin_cylinder(sys: &DynamicalSystem) -> Result<Partition> {
        let DynamicalSystem::Subshift(s) = sys else {
            return input("cylinder partitions need a shift system");
        };
        let e = s.group().identity();
        Ok(Partition {
            cells: (0..s.alphabet())
                .map(|a| Cell::Cylinder { pattern: vec![(e.clone(), a)] })
                .collect(),
        })
    }

    pub fn atoms(groups: Vec<Vec<usize>>) -> Partition {
        Partition {
            cells: groups.into_iter().map(|atoms| Cell::Atoms { atoms }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// The label of the unique cell containing `x`.
    pub fn label(&self, sys: &DynamicalSystem, x: &Point) -> Result<usize> {
        let mut found = None;
        for (i, c) in self.cells.iter().enumerate() {
            if c.contains(sys, x) {
                if found.is_some() {
                    return Err(Error::Partition(format!("point {x:?} lies in two cells")));
                }
                found = Some(i + 1);
            }
        }
        found.ok_or_else(|| Error::Partition(format!("point {x:?} lies in no cell")))
    }
}

/// Which pointwise semimetric to average.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SemimetricSpec {
    /// The base metric of the system.
    Base,
    /// A torus metric other than the system default.
    Torus { metric: TorusMetric },
    /// `|h(x) - h(y)|`
    Observable { observable: Observable },
    /// `(1/2) sum_i |1_{A_i}(x) - 1_{A_i}(y)|`
    PartitionHamming { partition: Partition },
}

impl SemimetricSpec {
    pub fn validate(&self, sys: &DynamicalSystem) -> Result<()> {
        match self {
            SemimetricSpec::Base => Ok(()),
            SemimetricSpec::Torus { .. } => match sys {
                DynamicalSystem::Torus(_) => Ok(()),
                _ => input("torus semimetric on a non-torus system"),
            },
            SemimetricSpec::Observable { observable } => observable.validate(sys),
            SemimetricSpec::PartitionHamming { partition } => {
                if partition.is_empty() {
                    return Err(Error::Partition("partition has no cells".into()));
                }
                Ok(())
            }
        }
    }

    /// Largest value the semimetric can take.
    pub fn diameter(&self, sys: &DynamicalSystem) -> f64 {
        match self {
            SemimetricSpec::Base => sys.diameter(),
            SemimetricSpec::Torus { metric } => match (metric, sys) {
                (TorusMetric::Sum, DynamicalSystem::Torus(t)) => 0.5 * t.dim() as f64,
                _ => 0.5,
            },
            SemimetricSpec::Observable { observable } => 2.0 * observable.sup_bound(),
            SemimetricSpec::PartitionHamming { .. } => 1.0,
        }
    }

    /// Multiplier turning integer terms into distances, or `None` for
    /// real-valued terms.
    pub(crate) fn fixed_scale(&self, sys: &DynamicalSystem) -> Option<f64> {
        match (self, sys) {
            (SemimetricSpec::Base | SemimetricSpec::Torus { .. }, DynamicalSystem::Torus(_)) => Some(1.0 / PHASE_SCALE),
            (SemimetricSpec::Base, DynamicalSystem::Subshift(s)) => Some(1.0 / (1u64 << s.metric_radius()) as f64),
            (SemimetricSpec::PartitionHamming { .. }, _) => Some(0.5),
            _ => None,
        }
    }

    /// One term of the pointwise semimetric.
    pub(crate) fn term(&self, sys: &DynamicalSystem, x: &Point, y: &Point) -> Result<Term> {
        Ok(match (self, sys, x, y) {
            (SemimetricSpec::Base, DynamicalSystem::Torus(t), Point::Torus(a), Point::Torus(b)) => {
                Term::Fixed(TorusSystem::distance_fixed(t.metric(), a, b))
            }
            (SemimetricSpec::Torus { metric }, _, Point::Torus(a), Point::Torus(b)) => {
                Term::Fixed(TorusSystem::distance_fixed(*metric, a, b))
            }
            (SemimetricSpec::Base, DynamicalSystem::Subshift(s), Point::Subshift(a), Point::Subshift(b)) => Term::Fixed(
                s.metric_ball()
                    .iter()
                    .filter(|(h, _)| s.coordinate(a, h) != s.coordinate(b, h))
                    .map(|(_, w)| *w as u128)
                    .sum(),
            ),
            (SemimetricSpec::Base, DynamicalSystem::Finite(f), Point::Atom(a), Point::Atom(b)) => Term::Float(f.distance(*a, *b)),
            (SemimetricSpec::Observable { observable }, _, _, _) => {
                Term::Float((observable.eval(sys, x) - observable.eval(sys, y)).norm())
            }
            (SemimetricSpec::PartitionHamming { partition }, _, _, _) => {
                let (a, b) = (partition.label(sys, x)?, partition.label(sys, y)?);
                Term::Fixed(if a == b { 0 } else { 2 })
            }
            _ => return input("semimetric does not apply to these points"),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Term {
    Fixed(u128),
    Float(f64),
}

/// Exact-when-possible running sum of terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Acc {
    Fixed(u128),
    Float(f64),
}

impl Acc {
    pub(crate) fn new(fixed: bool) -> Acc {
        if fixed {
            Acc::Fixed(0)
        } else {
            Acc::Float(0.0)
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, t: Term) {
        match (self, t) {
            (Acc::Fixed(s), Term::Fixed(v)) => *s += v,
            (Acc::Float(s), Term::Float(v)) => *s += v,
            _ => unreachable!("term kind matches accumulator"),
        }
    }

    /// `sum / count * scale`, rounded once when the sum is exactly representable.
    #[inline]
    pub(crate) fn mean(self, count: usize, scale: f64) -> f64 {
        match self {
            Acc::Float(s) => s / count as f64,
            Acc::Fixed(s) => fixed_mean(s, count as u128, scale),
        }
    }
}

#[inline]
pub(crate) fn fixed_mean(total: u128, count: u128, scale: f64) -> f64 {
    if total < (1u128 << 53) {
        total as f64 / count as f64 * scale
    } else {
        let (q, r) = (total / count, total % count);
        (q as f64 + r as f64 / count as f64) * scale
    }
}

/// Pointwise semimetric `rho(x, y)`.
pub fn eval_semimetric(sys: &DynamicalSystem, spec: &SemimetricSpec, x: &Point, y: &Point) -> Result<f64> {
    spec.validate(sys)?;
    sys.check_point(x)?;
    sys.check_point(y)?;
    let scale = spec.fixed_scale(sys);
    let mut acc = Acc::new(scale.is_some());
    acc.add(spec.term(sys, x, y)?);
    Ok(acc.mean(1, scale.unwrap_or(1.0)))
}

/// `rho_bar_F(x, y) = |F|^{-1} sum_{g in F} rho(gx, gy)`, summed in the
/// enumeration order of `F`.
pub fn mean_semimetric(
    sys: &DynamicalSystem,
    spec: &SemimetricSpec,
    set: &FolnerSet,
    x: &Point,
    y: &Point,
) -> Result<f64> {
    spec.validate(sys)?;
    sys.check_point(x)?;
    sys.check_point(y)?;
    if set.is_empty() {
        return input("Følner set is empty");
    }
    let scale = spec.fixed_scale(sys);
    let mut acc = Acc::new(scale.is_some());
    for g in set.elements() {
        sys.group().check(g)?;
        acc.add(spec.term(sys, &sys.act_unchecked(g, x), &sys.act_unchecked(g, y))?);
    }
    Ok(acc.mean(set.len(), scale.unwrap_or(1.0)))
}

/// The `F`-name of `x`: labels of `gx` for `g` in `F`.
pub fn alpha_name(sys: &DynamicalSystem, partition: &Partition, set: &FolnerSet, x: &Point) -> Result<Vec<usize>> {
    sys.check_point(x)?;
    set.elements()
        .iter()
        .map(|g| partition.label(sys, &sys.act_unchecked(g, x)))
        .collect()
}

/// Normalized Hamming distance between two names of equal length.
pub fn name_distance(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return input("names must be nonempty and of equal length");
    }
    let mismatches = a.iter().zip(b).filter(|(p, q)| p != q).count();
    Ok(mismatches as f64 / a.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HammingIdentityReport {
    pub pairs: usize,
    pub mismatches: usize,
    pub max_difference: f64,
}

/// Compares the averaged partition semimetric with the Hamming distance of
/// names on every pair of `points`. Equality is required bit for bit.
pub fn hamming_identity_check(
    sys: &DynamicalSystem,
    partition: &Partition,
    set: &FolnerSet,
    points: &[Point],
) -> Result<HammingIdentityReport> {
    let spec = SemimetricSpec::PartitionHamming {
        partition: partition.clone(),
    };
    let names = points
        .iter()
        .map(|x| alpha_name(sys, partition, set, x))
        .collect::<Result<Vec<_>>>()?;
    let mut report = HammingIdentityReport {
        pairs: 0,
        mismatches: 0,
        max_difference: 0.0,
    };
    for i in 0..points.len() {
        for j in i..points.len() {
            let lhs = mean_semimetric(sys, &spec, set, &points[i], &points[j])?;
            let rhs = name_distance(&names[i], &names[j])?;
            report.pairs += 1;
            if lhs.to_bits() != rhs.to_bits() {
                report.mismatches += 1;
                report.max_difference = report.max_difference.max((lhs - rhs).abs());
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::folner::{FolnerRule, FolnerSequence, SideFn};
    use crate::group::GroupSpec;
    use crate::systems::{FiniteMetric, FiniteSystem, SubshiftSystem};

    fn el(c: &[i64]) -> GroupElement {
        GroupElement::new(c)
    }

    fn z_boxes() -> FolnerSequence {
        FolnerSequence::new(GroupSpec::lattice(1), FolnerRule::Boxes { side: SideFn::Identity }).unwrap()
    }

    #[test]
    fn rotation_mean_equals_base_distance_exactly() {
        let sys = DynamicalSystem::Torus(TorusSystem::golden());
        let seq = z_boxes();
        let pts = sys.sample(1, 40).unwrap();
        for n in [1, 7, 64, 500] {
            let set = seq.set(n).unwrap();
            for w in pts.windows(2) {
                let d = sys.distance(&w[0], &w[1]).unwrap();
                let m = mean_semimetric(&sys, &SemimetricSpec::Base, &set, &w[0], &w[1]).unwrap();
                assert_eq!(m.to_bits(), d.to_bits());
            }
        }
    }

    #[test]
    fn observable_semimetric_example() {
        let sys = DynamicalSystem::Torus(TorusSystem::golden());
        let spec = SemimetricSpec::Observable {
            observable: Observable::Coordinate { index: 0 },
        };
        let v = eval_semimetric(&sys, &spec, &Point::torus(&[0.1]), &Point::torus(&[0.35])).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn partition_hamming_is_zero_or_one() {
        let sys = DynamicalSystem::Torus(TorusSystem::golden());
        let p = Partition::torus_intervals(&[0.0, 0.5], 1).unwrap();
        let spec = SemimetricSpec::PartitionHamming { partition: p };
        let same = eval_semimetric(&sys, &spec, &Point::torus(&[0.1]), &Point::torus(&[0.4])).unwrap();
        let diff = eval_semimetric(&sys, &spec, &Point::torus(&[0.1]), &Point::torus(&[0.6])).unwrap();
        assert_eq!((same, diff), (0.0, 1.0));
    }

    #[test]
    fn bernoulli_hamming_example() {
        let s = SubshiftSystem::bernoulli(GroupSpec::lattice(1), 0.5).unwrap();
        let x = s.point_with_window(1, (0..4).map(|k| (el(&[k]), [0, 1, 1, 0][k as usize]))).unwrap();
        let y = s.point_with_window(2, (0..4).map(|k| (el(&[k]), [0, 0, 1, 1][k as usize]))).unwrap();
        let sys = DynamicalSystem::Subshift(s);
        let p = Partition::origin_cylinder(&sys).unwrap();
        let set = z_boxes().set(4).unwrap();
        let spec = SemimetricSpec::PartitionHamming { partition: p.clone() };
        let (px, py) = (Point::Subshift(x), Point::Subshift(y));
        assert_eq!(mean_semimetric(&sys, &spec, &set, &px, &py).unwrap(), 0.5);
        let nx = alpha_name(&sys, &p, &set, &px).unwrap();
        assert_eq!(nx, vec![1, 2, 2, 1]);
        let ny = alpha_name(&sys, &p, &set, &py).unwrap();
        assert_eq!(name_distance(&nx, &ny).unwrap(), 0.5);
    }

    #[test]
    fn hamming_identity_on_random_points() {
        let sys = DynamicalSystem::Subshift(SubshiftSystem::bernoulli(GroupSpec::lattice(2), 0.3).unwrap());
        let p = Partition::origin_cylinder(&sys).unwrap();
        let seq = FolnerSequence::new(GroupSpec::lattice(2), FolnerRule::Boxes { side: SideFn::Identity }).unwrap();
        let pts = sys.sample(8, 12).unwrap();
        for n in [1, 3, 5] {
            let r = hamming_identity_check(&sys, &p, &seq.set(n).unwrap(), &pts).unwrap();
            assert_eq!(r.mismatches, 0);
            assert_eq!(r.pairs, 78);
        }
    }

    #[test]
    fn overlapping_or_missing_cells_are_errors() {
        let sys = DynamicalSystem::Finite(FiniteSystem::cyclic_shift(4).unwrap());
        let overlap = Partition::atoms(vec![vec![0, 1], vec![1, 2, 3]]);
        assert!(matches!(overlap.label(&sys, &Point::Atom(1)), Err(Error::Partition(_))));
        let missing = Partition::atoms(vec![vec![0, 1]]);
        assert!(matches!(missing.label(&sys, &Point::Atom(3)), Err(Error::Partition(_))));
        let spec = SemimetricSpec::PartitionHamming { partition: missing };
        assert!(eval_semimetric(&sys, &spec, &Point::Atom(0), &Point::Atom(3)).is_err());
    }

    #[test]
    fn torus_intervals_partition_the_circle() {
        let sys = DynamicalSystem::Torus(TorusSystem::golden());
        let p = Partition::torus_intervals(&[0.75, 0.1, 0.4], 1).unwrap();
        for x in sys.sample(3, 500).unwrap() {
            p.label(&sys, &x).unwrap();
        }
        assert_eq!(p.label(&sys, &Point::torus(&[0.1])).unwrap(), 1);
        assert_eq!(p.label(&sys, &Point::torus(&[0.8])).unwrap(), 3);
        assert_eq!(p.label(&sys, &Point::torus(&[0.05])).unwrap(), 3);
    }

    #[test]
    fn finite_mean_semimetric_matches_hand_count() {
        let f = FiniteSystem::identity(3, FiniteMetric::Discrete, None).unwrap();
        let sys = DynamicalSystem::Finite(f);
        let set = z_boxes().set(5).unwrap();
        assert_eq!(mean_semimetric(&sys, &SemimetricSpec::Base, &set, &Point::Atom(0), &Point::Atom(2)).unwrap(), 1.0);
        let swap = DynamicalSystem::Finite(
            FiniteSystem::new(GroupSpec::lattice(1), vec![vec![1, 0, 2]], FiniteMetric::Discrete, None).unwrap(),
        );
        let spec = SemimetricSpec::PartitionHamming { partition: Partition::atoms(vec![vec![0], vec![1, 2]]) };
        // orbit of (0, 2): (0,2),(1,2),(0,2),(1,2) -> cells differ, same, differ, same
        assert_eq!(mean_semimetric(&swap, &spec, &set, &Point::Atom(0), &Point::Atom(2)).unwrap(), 3.0 / 5.0);
    }

    #[test]
    fn observable_validation() {
        let sys = DynamicalSystem::Torus(TorusSystem::golden());
        assert!(Observable::Symbol.validate(&sys).is_err());
        assert!(Observable::Coordinate { index: 1 }.validate(&sys).is_err());
        let h = Observable::Coordinate { index: 0 }.translated(el(&[1]));
        let v = h.value(&sys, &Point::torus(&[0.0])).unwrap();
        assert!((v.re - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }
}
