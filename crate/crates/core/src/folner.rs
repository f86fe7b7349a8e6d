//! Følner sequences: construction rules, cached sets, defects and the
//! temperedness diagnostics.

use std::collections::{BTreeMap, HashSet};
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::FromPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::group::{box_elements, GroupElement, GroupSpec};

/// Default cardinality budget for set enumeration.
pub const DEFAULT_SET_BUDGET: usize = 1_000_000;

/// Side length (or radius) as a function of the index `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SideFn {
    /// `L_n = n`
    Identity,
    /// `L_n = scale * n + offset`
    Affine { scale: usize, offset: usize },
    /// `L_n = 2^n`
    PowerOfTwo,
    /// `L_n = values[n - 1]`
    Table { values: Vec<usize> },
}

impl Default for SideFn {
    fn default() -> Self {
        SideFn::Identity
    }
}

impl SideFn {
    pub fn eval(&self, n: usize) -> Result<usize> {
        match self {
            SideFn::Identity => Ok(n),
            SideFn::Affine { scale, offset } => Ok(scale * n + offset),
            SideFn::PowerOfTwo => {
                if n >= 48 {
                    return input(format!("2^{n} is too large for a side length"));
                }
                Ok(1usize << n)
            }
            SideFn::Table { values } => values
                .get(n - 1)
                .copied()
                .ok_or_else(|| Error::Input(format!("side table has no entry for n = {n}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum FolnerRule {
    /// `[0, L_n)^d` on lattices, clipped boxes on finite groups,
    /// `[0,L)^2 x [0,L^2)` on the Heisenberg group.
    Boxes {
        #[serde(default)]
        side: SideFn,
    },
    /// Word balls of radius `r_n`; `None` means the standard symmetric generators.
    WordBalls {
        #[serde(default)]
        generators: Option<Vec<GroupElement>>,
        #[serde(default)]
        radius: SideFn,
    },
    /// `F_n = G` for every `n` (finite groups only).
    FullGroup,
    /// `F_n = sets[n - 1]`.
    Explicit { sets: Vec<Vec<GroupElement>> },
}

/// A finite Følner set with its elements in lexicographic order.
#[derive(Clone, Debug)]
pub struct FolnerSet {
    elements: Vec<GroupElement>,
    members: HashSet<GroupElement>,
}

impl FolnerSet {
    pub(crate) fn from_unsorted(mut elements: Vec<GroupElement>) -> Self {
        elements.sort();
        elements.dedup();
        let members = elements.iter().cloned().collect();
        FolnerSet { elements, members }
    }

    /// Elements in the fixed (lexicographic) enumeration order.
    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.members.contains(g)
    }

    pub fn position(&self, g: &GroupElement) -> Option<usize> {
        self.elements.binary_search(g).ok()
    }
}

/// An indexed family `n -> F_n` with an append-only cache.
#[derive(Debug)]
pub struct FolnerSequence {
    group: GroupSpec,
    rule: FolnerRule,
    budget: usize,
    cache: RwLock<BTreeMap<usize, Arc<FolnerSet>>>,
}

impl Clone for FolnerSequence {
    fn clone(&self) -> Self {
        let cache = self.cache.read().map(|c| c.clone()).unwrap_or_default();
        FolnerSequence {
            group: self.group.clone(),
            rule: self.rule.clone(),
            budget: self.budget,
            cache: RwLock::new(cache),
        }
    }
}

impl FolnerSequence {
    pub fn new(group: GroupSpec, rule: FolnerRule) -> Result<Self> {
        group.validate()?;
        match (&rule, &group) {
            (FolnerRule::FullGroup, g) if !g.is_finite() => {
                return Err(Error::Unsupported(
                    "full_group rule needs a finite group".into(),
                ))
            }
            (FolnerRule::Explicit { sets }, g) => {
                for (i, s) in sets.iter().enumerate() {
                    if s.is_empty() {
                        return input(format!("explicit set {} is empty", i + 1));
                    }
                    for e in s {
                        g.check(e)?;
                    }
                }
            }
            (FolnerRule::WordBalls { generators: Some(gens), .. }, g) => {
                for e in gens {
                    g.check(e)?;
                }
            }
            _ => {}
        }
        Ok(FolnerSequence {
            group,
            rule,
            budget: DEFAULT_SET_BUDGET,
            cache: RwLock::new(BTreeMap::new()),
        })
    }

    /// Boxes on lattices, word balls on the Heisenberg group, the whole group
    /// for finite groups.
    pub fn default_for(group: &GroupSpec) -> Result<Self> {
        let rule = match group {
            GroupSpec::Lattice { .. } => FolnerRule::Boxes { side: SideFn::Identity },
            GroupSpec::Heisenberg3 => FolnerRule::WordBalls {
                generators: None,
                radius: SideFn::Identity,
            },
            GroupSpec::FiniteAbelian { .. } => FolnerRule::FullGroup,
        };
        Self::new(group.clone(), rule)
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn rule(&self) -> &FolnerRule {
        &self.rule
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// `F_n`, built on first use and cached afterwards.
    pub fn set(&self, n: usize) -> Result<Arc<FolnerSet>> {
        if n == 0 {
            return input("Følner index starts at 1");
        }
        if let Some(s) = self.cache.read().ok().and_then(|c| c.get(&n).cloned()) {
            return Ok(s);
        }
        let built = Arc::new(self.build(n)?);
        let mut cache = self
            .cache
            .write()
            .map_err(|_| Error::Setup("Følner cache poisoned".into()))?;
        Ok(cache.entry(n).or_insert(built).clone())
    }

    fn build(&self, n: usize) -> Result<FolnerSet> {
        let elements = match &self.rule {
            FolnerRule::Boxes { side } => {
                let l = side.eval(n)?;
                if l == 0 {
                    return input(format!("box side for n = {n} is zero"));
                }
                let l = l as i64;
                let sides: Vec<i64> = match &self.group {
                    GroupSpec::Lattice { dim } => vec![l; *dim],
                    GroupSpec::Heisenberg3 => vec![l, l, l * l],
                    GroupSpec::FiniteAbelian { moduli } => {
                        moduli.iter().map(|&m| l.min(m as i64)).collect()
                    }
                };
                let size = sides
                    .iter()
                    .try_fold(1u128, |acc, &s| acc.checked_mul(s as u128))
                    .unwrap_or(u128::MAX);
                if size > self.budget as u128 {
                    return Err(Error::Budget {
                        what: format!("box F_{n}"),
                        budget: self.budget as u64,
                    });
                }
                box_elements(&sides)
            }
            FolnerRule::WordBalls { generators, radius } => {
                let gens = generators
                    .clone()
                    .unwrap_or_else(|| self.group.standard_generators());
                let r = radius.eval(n)?;
                self.group
                    .word_ball(&gens, r, self.budget)?
                    .into_iter()
                    .map(|(g, _)| g)
                    .collect()
            }
            FolnerRule::FullGroup => self.group.elements()?,
            FolnerRule::Explicit { sets } => sets
                .get(n - 1)
                .cloned()
                .ok_or_else(|| Error::Input(format!("explicit sequence has no F_{n}")))?,
        };
        if elements.is_empty() {
            return input(format!("F_{n} is empty"));
        }
        Ok(FolnerSet::from_unsorted(elements))
    }

    /// Largest index available (explicit sequences only).
    pub fn max_index(&self) -> Option<usize> {
        match &self.rule {
            FolnerRule::Explicit { sets } => Some(sets.len()),
            FolnerRule::Boxes { side: SideFn::Table { values } }
            | FolnerRule::WordBalls { radius: SideFn::Table { values }, .. } => Some(values.len()),
            _ => None,
        }
    }
}

/// `|g F_n Δ F_n|` over `|F_n|`, kept as exact integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Defect {
    pub symmetric_difference: u64,
    pub size: u64,
}

impl Defect {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.symmetric_difference, self.size)
    }

    pub fn value(&self) -> f64 {
        self.symmetric_difference as f64 / self.size as f64
    }
}

pub fn folner_defect(seq: &FolnerSequence, n: usize, g: &GroupElement) -> Result<Defect> {
    seq.group.check(g)?;
    let f = seq.set(n)?;
    // |gF| = |F|, so |gF Δ F| = 2 |gF \ F|
    let outside = f
        .elements()
        .iter()
        .filter(|h| !f.contains(&seq.group.mul(g, h)))
        .count() as u64;
    Ok(Defect {
        symmetric_difference: 2 * outside,
        size: f.len() as u64,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemperedEntry {
    pub n: usize,
    /// `|∪_{k<n} F_k^{-1} F_n|`
    pub union_size: u64,
    pub folner_size: u64,
}

impl TemperedEntry {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.union_size, self.folner_size)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemperednessProfile {
    pub entries: Vec<TemperedEntry>,
}

impl TemperednessProfile {
    /// Empirical tempered constant: the largest ratio on the tested range.
    pub fn max_ratio(&self) -> Option<Ratio<u64>> {
        self.entries.iter().map(TemperedEntry::ratio).max()
    }
}

fn product_size(
    group: &GroupSpec,
    left: &HashSet<GroupElement>,
    right: &FolnerSet,
    budget: usize,
    n: usize,
) -> Result<u64> {
    if (left.len() as u128) * (right.len() as u128) > budget as u128 {
        return Err(Error::Budget {
            what: format!("product set for n = {n}"),
            budget: budget as u64,
        });
    }
    let mut product = HashSet::with_capacity(left.len() + right.len());
    for a in left {
        for b in right.elements() {
            product.insert(group.mul(a, b));
        }
    }
    Ok(product.len() as u64)
}

/// Exact ratios `|∪_{k<n} F_k^{-1} F_n| / |F_n|` for `n = 2..=n_max`.
pub fn temperedness_profile(seq: &FolnerSequence, n_max: usize) -> Result<TemperednessProfile> {
    if n_max < 2 {
        return input("temperedness profile needs n_max >= 2");
    }
    let group = &seq.group;
    let mut inverses: HashSet<GroupElement> = HashSet::new();
    let mut entries = Vec::with_capacity(n_max - 1);
    for n in 2..=n_max {
        for g in seq.set(n - 1)?.elements() {
            inverses.insert(group.inv(g));
        }
        let f = seq.set(n)?;
        let union_size = product_size(group, &inverses, &f, seq.budget, n)?;
        entries.push(TemperedEntry {
            n,
            union_size,
            folner_size: f.len() as u64,
        });
    }
    Ok(TemperednessProfile { entries })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemperedSubsequence {
    pub constant: f64,
    pub indices: Vec<usize>,
    /// Ratio of each kept index against the previously kept ones.
    pub ratios: Vec<Ratio<u64>>,
}

fn within(ratio: Ratio<u64>, c: &BigRational) -> bool {
    BigRational::new(BigInt::from(*ratio.numer()), BigInt::from(*ratio.denom())) <= *c
}

/// Greedy scan over `1..=n_max`: index `n` is kept when
/// `|(∪_{kept k<n} F_k^{-1}) F_n| <= C |F_n|`. With nothing kept yet the
/// union is taken as `{e}`, so the first ratio is 1 and `C < 1` keeps nothing.
pub fn tempered_subsequence(
    seq: &FolnerSequence,
    n_max: usize,
    constant: f64,
) -> Result<TemperedSubsequence> {
    if !(constant > 0.0) || !constant.is_finite() {
        return input("tempered constant must be positive and finite");
    }
    let c = BigRational::from_f64(constant).expect("finite");
    let group = &seq.group;
    let mut inverses: HashSet<GroupElement> = HashSet::new();
    let mut indices = Vec::new();
    let mut ratios = Vec::new();
    for n in 1..=n_max {
        let f = seq.set(n)?;
        let ratio = if indices.is_empty() {
            Ratio::new(1, 1)
        } else {
            Ratio::new(product_size(group, &inverses, &f, seq.budget, n)?, f.len() as u64)
        };
        if within(ratio, &c) {
            indices.push(n);
            ratios.push(ratio);
            for g in f.elements() {
                inverses.insert(group.inv(g));
            }
        }
    }
    let out = TemperedSubsequence {
        constant,
        indices,
        ratios,
    };
    verify_subsequence(seq, &out)?;
    Ok(out)
}

/// Recomputes every kept ratio from scratch and checks it against the constant.
pub fn verify_subsequence(seq: &FolnerSequence, sub: &TemperedSubsequence) -> Result<()> {
    let c = BigRational::from_f64(sub.constant).expect("finite");
    for (pos, &n) in sub.indices.iter().enumerate().skip(1) {
        let mut inverses = HashSet::new();
        for &k in &sub.indices[..pos] {
            for g in seq.set(k)?.elements() {
                inverses.insert(seq.group.inv(g));
            }
        }
        let f = seq.set(n)?;
        let ratio = Ratio::new(
            product_size(&seq.group, &inverses, &f, seq.budget, n)?,
            f.len() as u64,
        );
        if ratio != sub.ratios[pos] || !within(ratio, &c) {
            return Err(Error::Numerical(format!(
                "tempered subsequence check failed at n = {n}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_boxes() -> FolnerSequence {
        FolnerSequence::default_for(&GroupSpec::lattice(1)).unwrap()
    }

    fn el(c: &[i64]) -> GroupElement {
        GroupElement::new(c)
    }

    #[test]
    fn boxes_are_lexicographic() {
        let s = z_boxes();
        assert_eq!(s.set(3).unwrap().elements(), &[el(&[0]), el(&[1]), el(&[2])]);
        let z2 = FolnerSequence::default_for(&GroupSpec::lattice(2)).unwrap();
        assert_eq!(
            z2.set(2).unwrap().elements(),
            &[el(&[0, 0]), el(&[0, 1]), el(&[1, 0]), el(&[1, 1])]
        );
    }

    #[test]
    fn heisenberg_unit_word_ball() {
        let s = FolnerSequence::default_for(&GroupSpec::Heisenberg3).unwrap();
        let f = s.set(1).unwrap();
        let mut expected = vec![
            el(&[0, 0, 0]),
            el(&[1, 0, 0]),
            el(&[-1, 0, 0]),
            el(&[0, 1, 0]),
            el(&[0, -1, 0]),
        ];
        expected.sort();
        assert_eq!(f.elements(), expected.as_slice());
    }

    #[test]
    fn full_group_on_infinite_group_is_unsupported() {
        let r = FolnerSequence::new(GroupSpec::lattice(1), FolnerRule::FullGroup);
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn index_zero_is_rejected() {
        assert!(z_boxes().set(0).is_err());
    }

    #[test]
    fn shift_defect_of_interval() {
        let s = z_boxes();
        let d = folner_defect(&s, 10, &el(&[1])).unwrap();
        assert_eq!(d, Defect { symmetric_difference: 2, size: 10 });
        assert_eq!(d.value(), 0.2);
        assert_eq!(folner_defect(&s, 10, &el(&[0])).unwrap().symmetric_difference, 0);
    }

    #[test]
    fn planar_defect_matches_enumeration() {
        let s = FolnerSequence::default_for(&GroupSpec::lattice(2)).unwrap();
        let g = el(&[1, 0]);
        let f: HashSet<_> = s.set(10).unwrap().elements().iter().cloned().collect();
        let shifted: HashSet<_> = f.iter().map(|h| el(&[h.0[0] + 1, h.0[1]])).collect();
        let sym = f.symmetric_difference(&shifted).count() as u64;
        assert_eq!(sym, 20);
        let d = folner_defect(&s, 10, &g).unwrap();
        assert_eq!(d.symmetric_difference, sym);
        assert_eq!(d.ratio(), Ratio::new(20, 100));
    }

    #[test]
    fn defect_is_inverse_symmetric() {
        let s = FolnerSequence::default_for(&GroupSpec::Heisenberg3).unwrap();
        for g in s.group().standard_generators().iter().chain([el(&[2, -1, 3])].iter()) {
            let inv = s.group().inv(g);
            for n in 1..5 {
                assert_eq!(
                    folner_defect(&s, n, g).unwrap(),
                    folner_defect(&s, n, &inv).unwrap()
                );
            }
        }
    }

    #[test]
    fn heisenberg_balls_have_decreasing_defect() {
        let s = FolnerSequence::default_for(&GroupSpec::Heisenberg3).unwrap();
        let x = el(&[1, 0, 0]);
        let d: Vec<f64> = (1..=8).map(|n| folner_defect(&s, n, &x).unwrap().value()).collect();
        assert!(d.last().unwrap() < d.first().unwrap());
    }

    #[test]
    fn interval_profile_is_two_minus_two_over_n() {
        let p = temperedness_profile(&z_boxes(), 64).unwrap();
        for e in &p.entries {
            // oracle: ∪_{k<n} [0,k)^{-1} [0,n) = [-(n-2), n-1]
            let n = e.n as i64;
            let oracle: HashSet<i64> = (1..n)
                .flat_map(|k| (0..k).flat_map(move |a| (0..n).map(move |b| b - a)))
                .collect();
            assert_eq!(e.union_size, oracle.len() as u64);
            assert_eq!(e.ratio(), Ratio::new(2 * e.n as u64 - 2, e.n as u64));
            assert!(e.ratio() < Ratio::from_integer(2));
        }
    }

    #[test]
    fn full_group_profile_is_one() {
        let s = FolnerSequence::default_for(&GroupSpec::finite_abelian(&[3, 4])).unwrap();
        let p = temperedness_profile(&s, 10).unwrap();
        assert!(p.entries.iter().all(|e| e.ratio() == Ratio::from_integer(1)));
    }

    #[test]
    fn explicit_profile_single_point() {
        let s = FolnerSequence::new(
            GroupSpec::lattice(1),
            FolnerRule::Explicit {
                sets: vec![vec![el(&[0])], vec![el(&[10])]],
            },
        )
        .unwrap();
        let p = temperedness_profile(&s, 2).unwrap();
        assert_eq!(p.entries[0].ratio(), Ratio::from_integer(1));
        assert!(s.set(3).is_err());
    }

    #[test]
    fn budget_overflow_is_reported() {
        let s = z_boxes().with_budget(100);
        assert!(matches!(temperedness_profile(&s, 30), Err(Error::Budget { .. })));
    }

    #[test]
    fn tempered_subsequences() {
        let all = tempered_subsequence(&z_boxes(), 32, 2.0).unwrap();
        assert_eq!(all.indices, (1..=32).collect::<Vec<_>>());
        let none = tempered_subsequence(&z_boxes(), 32, 0.5).unwrap();
        assert!(none.indices.is_empty());
        let fin = FolnerSequence::default_for(&GroupSpec::finite_abelian(&[6])).unwrap();
        let kept = tempered_subsequence(&fin, 12, 1.0).unwrap();
        assert_eq!(kept.indices.len(), 12);
    }

    #[test]
    fn concurrent_cache_reads_agree() {
        let s = Arc::new(z_boxes());
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let s = s.clone();
                std::thread::spawn(move || (1..40).map(|n| s.set(n).unwrap().len()).sum::<usize>())
            })
            .collect();
        let sums: Vec<usize> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert!(sums.windows(2).all(|w| w[0] == w[1]));
    }
}
