//! Moduli of mean equicontinuity and equicontinuity in the mean on a
//! high-measure core of sampled points.
//!
//! For each `delta`, the modulus is the largest `max_n rho_bar_{F_n}(x, y)`
//! over core pairs with `d(x, y) < delta`. The limsup in the definition of
//! mean equicontinuity is replaced by a maximum over a tail window of `n`;
//! this is a proxy, not the limsup.

use num_bigint::BigInt;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::complexity::{boundedness_diagnostic, complexity_profile, BoundednessReport, DiagnosticConfig, ProfileConfig, Verdict};
use crate::cover::decimal_rational;
use crate::error::{input, Error, Result};
use crate::features::OrbitFeatures;
use crate::folner::{temperedness_profile, FolnerSequence, FolnerSet};
use crate::metrics::SemimetricSpec;
use crate::systems::{DynamicalSystem, MeasureAccess, Point};
use crate::{par, rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoreConfig {
    pub samples: usize,
    pub seed: u64,
    /// mass allowed outside the core
    pub tau: f64,
    /// neighbors used for the oscillation score
    pub neighbors: usize,
    /// `F_n` used for the oscillation score
    pub probe_n: usize,
}

impl Default for CoreConfig {
    fn default() -> Self {
        CoreConfig {
            samples: 1000,
            seed: 0,
            tau: 0.05,
            neighbors: 8,
            probe_n: 16,
        }
    }
}

/// Retained points with their weights. Sampled points weigh 1; atoms of a
/// finite system carry their exact integer weights.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Core {
    #[serde(skip)]
    pub points: Vec<Point>,
    /// Indices among the samples (or atoms).
    pub indices: Vec<usize>,
    pub weights: Vec<u128>,
    pub total_weight: u128,
    pub core_mass: f64,
    /// Oscillation score of every sample (or atom), before dropping.
    pub scores: Vec<f64>,
    /// The core is every atom of a finite system rather than a sample.
    pub exhaustive: bool,
    pub seed: u64,
}

impl Core {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn singleton(sys: &DynamicalSystem) -> FolnerSet {
    FolnerSet::from_unsorted(vec![sys.group().identity()])
}

/// `max_{j in kNN(i)} (rho_bar_{F_probe}(x_i, x_j) - d(x_i, x_j))`.
fn oscillation_scores(
    sys: &DynamicalSystem,
    spec: &SemimetricSpec,
    seq: &FolnerSequence,
    points: &[Point],
    neighbors: usize,
    probe_n: usize,
) -> Result<Vec<f64>> {
    let base = OrbitFeatures::build(sys, spec, &singleton(sys), points)?;
    let probe = OrbitFeatures::build(sys, spec, &*seq.set(probe_n)?, points)?;
    let n = points.len();
    let k = neighbors.min(n.saturating_sub(1));
    Ok(par::map_indexed(n, |i| {
        let mut near: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (base.distance(i, j), j)).collect();
        let k = k.min(near.len());
        if k == 0 {
            return 0.0;
        }
        near.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        near[..k].iter().map(|&(d, j)| probe.distance(i, j) - d).fold(0.0, f64::max)
    }))
}

/// Drops the samples with the worst oscillation, as many as keep the core
/// above mass `1 - tau` (ties broken by a seeded hash). On a finite system
/// with an exact measure the lowest-mass atoms are dropped first instead.
pub fn core_select(sys: &DynamicalSystem, spec: &SemimetricSpec, seq: &FolnerSequence, cfg: &CoreConfig) -> Result<Core> {
    if !(cfg.tau > 0.0 && cfg.tau < 1.0) {
        return input(format!("tau must lie in (0, 1), got {}", cfg.tau));
    }
    if cfg.probe_n == 0 {
        return input("probe index starts at 1");
    }
    spec.validate(sys)?;
    let tau = decimal_rational(cfg.tau)?;
    // dropped weight w may be removed while w < tau * total
    let below_tau = |w: u128, total: u128| BigInt::from(w) * tau.denom() < tau.numer() * BigInt::from(total);
    if let (MeasureAccess::Exact(_), Some(f)) = (sys.measure(), sys.as_finite()) {
        let (weights, total) = f.integer_weights()?;
        let points: Vec<Point> = (0..f.size()).map(Point::Atom).collect();
        let scores = oscillation_scores(sys, spec, seq, &points, cfg.neighbors, cfg.probe_n)?;
        let mut order: Vec<usize> = (0..f.size()).collect();
        order.sort_by(|&a, &b| weights[a].cmp(&weights[b]).then(b.cmp(&a)));
        let mut dropped = 0u128;
        let mut drop = vec![false; f.size()];
        for &a in &order {
            if !below_tau(dropped + weights[a], total) {
                break;
            }
            dropped += weights[a];
            drop[a] = true;
        }
        let indices: Vec<usize> = (0..f.size()).filter(|&a| !drop[a]).collect();
        return Ok(Core {
            points: indices.iter().map(|&a| Point::Atom(a)).collect(),
            weights: indices.iter().map(|&a| weights[a]).collect(),
            core_mass: (total - dropped) as f64 / total as f64,
            indices,
            total_weight: total,
            scores,
            exhaustive: true,
            seed: cfg.seed,
        });
    }
    if cfg.samples < 2 {
        return input("need at least two samples");
    }
    let points = sys.sample(cfg.seed, cfg.samples)?;
    let scores = oscillation_scores(sys, spec, seq, &points, cfg.neighbors, cfg.probe_n)?;
    let n = points.len();
    let mut m = 0;
    while m + 1 < n && below_tau(m as u128 + 1, n as u128) {
        m += 1;
    }
    let tie = |i: usize| rng::derive(cfg.seed, i as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(tie(b).cmp(&tie(a))));
    let mut drop = vec![false; n];
    for &i in &order[..m] {
        drop[i] = true;
    }
    let indices: Vec<usize> = (0..n).filter(|&i| !drop[i]).collect();
    Ok(Core {
        points: indices.iter().map(|&i| points[i].clone()).collect(),
        weights: vec![1; indices.len()],
        core_mass: indices.len() as f64 / n as f64,
        indices,
        total_weight: n as u128,
        scores,
        exhaustive: false,
        seed: cfg.seed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusMode {
    LimsupProxy,
    AllN,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulusConfig {
    pub delta_grid: Vec<f64>,
    pub n_max: usize,
    /// start of the tail window; `n_max / 4` when absent
    pub n_min: Option<usize>,
    /// all pairs among up to this many core points, else sampled pairs
    pub pair_core_limit: usize,
    /// extra close pairs `(x, x')` with `x'` agreeing with `x` near the
    /// origin (shift systems only)
    pub twins: usize,
    pub seed: u64,
}

impl Default for ModulusConfig {
    fn default() -> Self {
        ModulusConfig {
            delta_grid: vec![0.001, 0.01, 0.1],
            n_max: 64,
            n_min: None,
            pair_core_limit: 2000,
            twins: 2000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulusReport {
    pub delta_grid: Vec<f64>,
    /// `None` where no pair is closer than `delta`.
    pub modulus: Vec<Option<f64>>,
    /// Largest `d(x, y)` over the same pairs.
    pub base_modulus: Vec<Option<f64>>,
    pub pairs_used: Vec<usize>,
    pub mode: ModulusMode,
    pub core_mass: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub exhaustive: bool,
    pub seed: u64,
}

impl ModulusReport {
    /// Largest distance in ulps between `modulus` and `base_modulus`.
    pub fn max_ulp_gap(&self) -> u64 {
        self.modulus
            .iter()
            .zip(&self.base_modulus)
            .filter_map(|(a, b)| Some(ulp_gap(a.as_ref()?.to_owned(), b.as_ref()?.to_owned())))
            .max()
            .unwrap_or(0)
    }
}

fn ulp_gap(a: f64, b: f64) -> u64 {
    let key = |x: f64| {
        let bits = x.to_bits() as i64;
        if bits < 0 {
            i64::MIN - bits
        } else {
            bits
        }
    };
    key(a).abs_diff(key(b))
}

/// Candidate pairs as indices into `points` (core points followed by twins).
fn candidate_pairs(sys: &DynamicalSystem, core: &Core, cfg: &ModulusConfig) -> (Vec<Point>, Vec<(usize, usize)>) {
    let n = core.len();
    let mut points = core.points.clone();
    let mut pairs = Vec::new();
    if core.exhaustive || n <= cfg.pair_core_limit {
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i, j));
            }
        }
    } else {
        let want = cfg.pair_core_limit * (cfg.pair_core_limit - 1) / 2;
        let mut r = rng::rng(cfg.seed, 0x9a1e);
        while pairs.len() < want {
            let (i, j) = (r.gen_range(0..n), r.gen_range(0..n));
            if i != j {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    if let (DynamicalSystem::Subshift(s), false) = (sys, core.exhaustive || n == 0) {
        let w = s.metric_radius();
        for t in 0..cfg.twins {
            let i = t % n;
            let keep_radius = 1 + t % w.max(1);
            let min_weight = 1u64 << (w - keep_radius.min(w));
            let keep: Vec<_> = s.metric_ball().iter().filter(|(_, wt)| *wt >= min_weight).map(|(h, _)| h.clone()).collect();
            let Point::Subshift(x) = &core.points[i] else { continue };
            let twin = s.twin(x, &keep, rng::derive(cfg.seed, 0x7_0000_0000 + t as u64));
            points.push(Point::Subshift(twin));
            pairs.push((i, points.len() - 1));
        }
    }
    (points, pairs)
}

fn modulus(
    sys: &DynamicalSystem,
    spec: &SemimetricSpec,
    core: &Core,
    seq: &FolnerSequence,
    cfg: &ModulusConfig,
    mode: ModulusMode,
) -> Result<ModulusReport> {
    spec.validate(sys)?;
    if cfg.n_max == 0 {
        return input("n_max must be at least 1");
    }
    if cfg.delta_grid.is_empty() || cfg.delta_grid.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return input("delta grid must be nonempty and positive");
    }
    if cfg.pair_core_limit < 2 {
        return input("pair core limit must be at least 2");
    }
    let n_min = match mode {
        ModulusMode::AllN => 1,
        ModulusMode::LimsupProxy => cfg.n_min.unwrap_or(cfg.n_max / 4).max(1),
    };
    if n_min > cfg.n_max {
        return input(format!("window start {n_min} exceeds n_max {}", cfg.n_max));
    }
    let mut deltas = cfg.delta_grid.clone();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let delta_max = *deltas.last().expect("nonempty");

    let (points, pairs) = candidate_pairs(sys, core, cfg);
    let base = OrbitFeatures::build(sys, spec, &singleton(sys), &points)?;
    let base_d: Vec<f64> = par::map_indexed(pairs.len(), |k| base.distance(pairs[k].0, pairs[k].1));
    let close: Vec<usize> = (0..pairs.len()).filter(|&k| base_d[k] < delta_max).collect();

    // points touched by close pairs, renumbered
    let mut slot = vec![usize::MAX; points.len()];
    let mut used = Vec::new();
    for &k in &close {
        for p in [pairs[k].0, pairs[k].1] {
            if slot[p] == usize::MAX {
                slot[p] = used.len();
                used.push(points[p].clone());
            }
        }
    }
    let mut worst = vec![0.0f64; close.len()];
    for n in n_min..=cfg.n_max {
        let feats = OrbitFeatures::build(sys, spec, &*seq.set(n)?, &used)?;
        let vals = par::map_indexed(close.len(), |c| {
            let (i, j) = pairs[close[c]];
            feats.distance(slot[i], slot[j])
        });
        for (w, v) in worst.iter_mut().zip(vals) {
            *w = w.max(v);
        }
    }
    let mut report = ModulusReport {
        delta_grid: deltas.clone(),
        modulus: Vec::new(),
        base_modulus: Vec::new(),
        pairs_used: Vec::new(),
        mode,
        core_mass: core.core_mass,
        n_min,
        n_max: cfg.n_max,
        exhaustive: core.exhaustive,
        seed: cfg.seed,
    };
    for &delta in &deltas {
        let inside: Vec<usize> = (0..close.len()).filter(|&c| base_d[close[c]] < delta).collect();
        let max_of = |v: &mut dyn Iterator<Item = f64>| v.fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
        report.modulus.push(max_of(&mut inside.iter().map(|&c| worst[c])));
        report.base_modulus.push(max_of(&mut inside.iter().map(|&c| base_d[close[c]])));
        report.pairs_used.push(inside.len());
    }
    Ok(report)
}

/// Mode `limsup_proxy`: `max` over `n` in `[n_min, n_max]`.
pub fn mean_equicontinuity_modulus(
    sys: &DynamicalSystem,
    spec: &SemimetricSpec,
    core: &Core,
    seq: &FolnerSequence,
    cfg: &ModulusConfig,
) -> Result<ModulusReport> {
    modulus(sys, spec, core, seq, cfg, ModulusMode::LimsupProxy)
}

/// Mode `all_n`: `max` over every `n <= n_max`.
pub fn equicont_in_mean_modulus(
    sys: &DynamicalSystem,
    spec: &SemimetricSpec,
    core: &Core,
    seq: &FolnerSequence,
    cfg: &ModulusConfig,
) -> Result<ModulusReport> {
    modulus(sys, spec, core, seq, cfg, ModulusMode::AllN)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusVerdict {
    Vanishing,
    Floored,
    Inconclusive,
}

/// Vanishing when `modulus(delta_min) < ratio * modulus(delta_max)`, floored
/// otherwise. An empty entry counts as zero only when the core was
/// enumerated exhaustively.
pub fn classify_modulus(report: &ModulusReport, ratio: f64) -> ModulusVerdict {
    let value = |v: Option<&Option<f64>>| match v {
        Some(Some(x)) => Some(*x),
        _ if report.exhaustive => Some(0.0),
        _ => None,
    };
    let (Some(lo), Some(hi)) = (value(report.modulus.first()), value(report.modulus.last())) else {
        return ModulusVerdict::Inconclusive;
    };
    if lo == 0.0 || lo < ratio * hi {
        ModulusVerdict::Vanishing
    } else {
        ModulusVerdict::Floored
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquicontConfig {
    pub core: CoreConfig,
    pub modulus: ModulusConfig,
    /// vanishing-modulus ratio
    pub ratio: f64,
    pub n_grid: Vec<usize>,
    pub eps_grid: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub diagnostic: DiagnosticConfig,
}

impl Default for EquicontConfig {
    fn default() -> Self {
        EquicontConfig {
            core: CoreConfig::default(),
            modulus: ModulusConfig::default(),
            ratio: 0.1,
            n_grid: vec![4, 8, 16, 32, 64],
            eps_grid: vec![0.2, 0.4],
            samples: 600,
            seed: 0,
            diagnostic: DiagnosticConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquicontCrosscheck {
    /// Largest temperedness ratio on `n <= n_max`, when computable.
    pub tempered_constant: Option<f64>,
    pub limsup: ModulusReport,
    pub all_n: ModulusReport,
    pub limsup_verdict: ModulusVerdict,
    pub all_n_verdict: ModulusVerdict,
    pub complexity: BoundednessReport,
    pub agree: bool,
    pub falsification_candidate: bool,
    pub budget_artifact: bool,
}

/// Compares the two moduli with the complexity classification of the same
/// system: vanishing moduli should go with bounded complexity, floored
/// moduli with growing complexity.
pub fn equicontinuity_crosscheck(
    sys: &DynamicalSystem,
    spec: &SemimetricSpec,
    seq: &FolnerSequence,
    cfg: &EquicontConfig,
) -> Result<EquicontCrosscheck> {
    let tempered_constant = match temperedness_profile(seq, cfg.modulus.n_max.max(2)) {
        Ok(p) => p.max_ratio().map(|r| *r.numer() as f64 / *r.denom() as f64),
        Err(Error::Budget { .. }) => None,
        Err(e) => return Err(e),
    };
    let core = core_select(sys, spec, seq, &cfg.core)?;
    let limsup = mean_equicontinuity_modulus(sys, spec, &core, seq, &cfg.modulus)?;
    let all_n = equicont_in_mean_modulus(sys, spec, &core, seq, &cfg.modulus)?;
    let limsup_verdict = classify_modulus(&limsup, cfg.ratio);
    let all_n_verdict = classify_modulus(&all_n, cfg.ratio);
    let pcfg = ProfileConfig::new(cfg.n_grid.clone(), cfg.eps_grid.clone(), cfg.samples, cfg.seed);
    let profile = complexity_profile(sys, spec, seq, &pcfg)?;
    let complexity = boundedness_diagnostic(&profile, &cfg.diagnostic);
    let conclusive = limsup_verdict != ModulusVerdict::Inconclusive
        && all_n_verdict != ModulusVerdict::Inconclusive
        && complexity.verdict != Verdict::Inconclusive;
    let want = if complexity.verdict == Verdict::Bounded {
        ModulusVerdict::Vanishing
    } else {
        ModulusVerdict::Floored
    };
    let expect = |v: ModulusVerdict| v == want;
    let agree = conclusive && expect(limsup_verdict) && expect(all_n_verdict);
    Ok(EquicontCrosscheck {
        tempered_constant,
        limsup,
        all_n,
        limsup_verdict,
        all_n_verdict,
        complexity,
        agree,
        falsification_candidate: conclusive && !agree,
        budget_artifact: !conclusive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::systems::{FiniteMetric, FiniteSystem, SubshiftSystem, TorusSystem};
    use num_rational::Ratio;

    fn z() -> FolnerSequence {
        FolnerSequence::default_for(&GroupSpec::lattice(1)).unwrap()
    }

    fn rotation() -> DynamicalSystem {
        DynamicalSystem::Torus(TorusSystem::golden())
    }

    fn bernoulli() -> DynamicalSystem {
        DynamicalSystem::Subshift(SubshiftSystem::bernoulli(GroupSpec::lattice(1), 0.5).unwrap())
    }

    fn small_core(samples: usize, tau: f64) -> CoreConfig {
        CoreConfig {
            samples,
            seed: 4,
            tau,
            ..CoreConfig::default()
        }
    }

    #[test]
    fn rotation_core_drops_forced_fraction() {
        let core = core_select(&rotation(), &SemimetricSpec::Base, &z(), &small_core(400, 0.05)).unwrap();
        // 19/400 < 0.05 <= 20/400
        assert_eq!(core.len(), 400 - 19);
        assert!(core.scores.iter().all(|&s| s == 0.0));
        assert!(core.core_mass > 0.95);
    }

    #[test]
    fn tiny_tau_keeps_everything() {
        let core = core_select(&rotation(), &SemimetricSpec::Base, &z(), &small_core(100, 0.005)).unwrap();
        assert_eq!(core.len(), 100);
        assert_eq!(core.core_mass, 1.0);
    }

    #[test]
    fn finite_core_drops_lightest_atoms() {
        let w: Vec<Ratio<u64>> = [1u64, 2, 3, 4].iter().map(|&a| Ratio::new(a, 10)).collect();
        let f = FiniteSystem::identity(4, FiniteMetric::Discrete, Some(w)).unwrap();
        let sys = DynamicalSystem::Finite(f);
        let seq = FolnerSequence::default_for(&GroupSpec::lattice(1)).unwrap();
        // 0.1 + 0.2 < 0.35, adding 0.3 would not be
        let core = core_select(&sys, &SemimetricSpec::Base, &seq, &small_core(0, 0.35)).unwrap();
        assert_eq!(core.indices, vec![2, 3]);
        assert_eq!(core.core_mass, 0.7);
        // exactly 0.3 dropped is not below tau = 0.3
        let core = core_select(&sys, &SemimetricSpec::Base, &seq, &small_core(0, 0.3)).unwrap();
        assert_eq!(core.indices, vec![1, 2, 3]);
    }

    #[test]
    fn rotation_moduli_are_isometric() {
        let sys = rotation();
        let core = core_select(&sys, &SemimetricSpec::Base, &z(), &small_core(600, 0.05)).unwrap();
        let cfg = ModulusConfig {
            n_max: 32,
            ..ModulusConfig::default()
        };
        for rep in [
            mean_equicontinuity_modulus(&sys, &SemimetricSpec::Base, &core, &z(), &cfg).unwrap(),
            equicont_in_mean_modulus(&sys, &SemimetricSpec::Base, &core, &z(), &cfg).unwrap(),
        ] {
            assert_eq!(rep.max_ulp_gap(), 0, "{rep:?}");
            for (k, d) in rep.delta_grid.iter().enumerate() {
                let m = rep.modulus[k].unwrap();
                assert!(m < *d && m > 0.5 * d, "{rep:?}");
            }
            assert_eq!(classify_modulus(&rep, 0.1), ModulusVerdict::Vanishing);
        }
    }

    #[test]
    fn identity_action_modulus_is_base() {
        let sys = DynamicalSystem::Finite(FiniteSystem::identity(6, FiniteMetric::Cyclic, None).unwrap());
        let core = core_select(&sys, &SemimetricSpec::Base, &z(), &small_core(0, 0.01)).unwrap();
        let cfg = ModulusConfig {
            delta_grid: vec![0.2, 0.4, 0.6],
            n_max: 8,
            ..ModulusConfig::default()
        };
        let rep = equicont_in_mean_modulus(&sys, &SemimetricSpec::Base, &core, &z(), &cfg).unwrap();
        assert_eq!(rep.modulus, vec![Some(1.0 / 6.0), Some(2.0 / 6.0), Some(3.0 / 6.0)]);
        assert_eq!(rep.max_ulp_gap(), 0);
    }

    #[test]
    fn cyclic_shift_modulus_matches_exhaustive_oracle() {
        let sys = DynamicalSystem::Finite(FiniteSystem::cyclic_shift(5).unwrap());
        let f = sys.as_finite().unwrap().clone();
        let core = core_select(&sys, &SemimetricSpec::Base, &z(), &small_core(0, 0.01)).unwrap();
        let cfg = ModulusConfig {
            delta_grid: vec![0.25, 0.45],
            n_max: 6,
            ..ModulusConfig::default()
        };
        let rep = equicont_in_mean_modulus(&sys, &SemimetricSpec::Base, &core, &z(), &cfg).unwrap();
        // every atom pair, max over n of the reference mean
        let seq = z();
        for (k, &delta) in cfg.delta_grid.iter().enumerate() {
            let mut best: Option<f64> = None;
            for x in 0..5 {
                for y in x + 1..5 {
                    if f.distance(x, y) < delta {
                        let m = (1..=6)
                            .map(|n| {
                                crate::metrics::mean_semimetric(&sys, &SemimetricSpec::Base, &seq.set(n).unwrap(), &Point::Atom(x), &Point::Atom(y))
                                    .unwrap()
                            })
                            .fold(0.0, f64::max);
                        best = Some(best.map_or(m, |b: f64| b.max(m)));
                    }
                }
            }
            assert_eq!(rep.modulus[k], best);
            assert!((best.unwrap() - [0.2, 0.4][k]).abs() < 1e-15);
        }
        let empty = equicont_in_mean_modulus(
            &sys,
            &SemimetricSpec::Base,
            &core,
            &z(),
            &ModulusConfig {
                delta_grid: vec![0.001, 0.01],
                n_max: 4,
                ..ModulusConfig::default()
            },
        )
        .unwrap();
        assert_eq!(empty.modulus, vec![None, None]);
        assert_eq!(classify_modulus(&empty, 0.1), ModulusVerdict::Vanishing);
    }

    #[test]
    fn bernoulli_moduli_have_a_floor() {
        let sys = bernoulli();
        let core = core_select(&sys, &SemimetricSpec::Base, &z(), &small_core(300, 0.05)).unwrap();
        let cfg = ModulusConfig {
            n_max: 32,
            twins: 600,
            ..ModulusConfig::default()
        };
        let lim = mean_equicontinuity_modulus(&sys, &SemimetricSpec::Base, &core, &z(), &cfg).unwrap();
        let all = equicont_in_mean_modulus(&sys, &SemimetricSpec::Base, &core, &z(), &cfg).unwrap();
        for rep in [&lim, &all] {
            assert!(rep.pairs_used[0] > 0);
            assert!(rep.modulus[0].unwrap() > 0.5, "{rep:?}");
            assert_eq!(classify_modulus(rep, 0.1), ModulusVerdict::Floored);
        }
        for k in 0..cfg.delta_grid.len() {
            assert!(all.modulus[k] >= lim.modulus[k]);
        }
    }

    #[test]
    fn moduli_monotone_in_delta_and_n_max() {
        let sys = bernoulli();
        let core = core_select(&sys, &SemimetricSpec::Base, &z(), &small_core(200, 0.1)).unwrap();
        let mut prev: Option<ModulusReport> = None;
        for n_max in [4, 8, 16] {
            let cfg = ModulusConfig {
                delta_grid: vec![0.01, 0.05, 0.2, 0.8],
                n_max,
                twins: 200,
                ..ModulusConfig::default()
            };
            let rep = equicont_in_mean_modulus(&sys, &SemimetricSpec::Base, &core, &z(), &cfg).unwrap();
            for w in rep.modulus.windows(2) {
                assert!(w[0] <= w[1] || w[0].is_none());
            }
            if let Some(p) = prev {
                for (a, b) in p.modulus.iter().zip(&rep.modulus) {
                    assert!(a <= b);
                }
            }
            prev = Some(rep);
        }
    }

    #[test]
    fn crosschecks_agree() {
        let cfg = EquicontConfig {
            core: small_core(400, 0.05),
            modulus: ModulusConfig {
                n_max: 32,
                twins: 600,
                ..ModulusConfig::default()
            },
            ..EquicontConfig::default()
        };
        let r = equicontinuity_crosscheck(&rotation(), &SemimetricSpec::Base, &z(), &cfg).unwrap();
        assert!(r.agree, "{:?} {:?} {:?}", r.limsup_verdict, r.all_n_verdict, r.complexity.verdict);
        assert_eq!(r.complexity.verdict, Verdict::Bounded);
        assert!(r.tempered_constant.unwrap() < 2.0);
        let r = equicontinuity_crosscheck(&bernoulli(), &SemimetricSpec::Base, &z(), &cfg).unwrap();
        assert!(r.agree, "{:?} {:?} {:?}", r.limsup_verdict, r.all_n_verdict, r.complexity);
        let finite = DynamicalSystem::Finite(FiniteSystem::cyclic_shift(8).unwrap());
        let r = equicontinuity_crosscheck(&finite, &SemimetricSpec::Base, &z(), &cfg).unwrap();
        assert!(r.agree && r.complexity.finite_state);
    }
}
