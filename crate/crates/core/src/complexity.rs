//! The complexity function `C(rho_bar_{F_n}, eps)`: the least number of open
//! `eps/2`-balls in the mean semimetric whose union has mass above `1 - eps`.
//!
//! Sampled systems get a greedy upper estimate and a lower bound relative
//! to the empirical measure. Finite systems with an exact measure are solved
//! exactly over their atoms, and Bernoulli Hamming complexity is solved
//! exactly on the word space `{0,1}^{F_n}`.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cover::{decimal_rational, need_for, neighbor_lists, CoverInstance, DEFAULT_NODE_BUDGET};
use crate::error::{input, Error, Result};
use crate::features::OrbitFeatures;
use crate::folner::FolnerSequence;
use crate::metrics::SemimetricSpec;
use crate::systems::{DynamicalSystem, MeasureAccess, Point};

pub const DEFAULT_ATOM_BUDGET: usize = 20;
pub const DEFAULT_WORD_BUDGET: u64 = 50_000_000;
pub const MIN_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverMode {
    GreedyUpper,
    Exact,
    PackingLower,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringResult {
    #[serde(skip)]
    pub centers: Vec<Point>,
    /// Indices of the centers among the samples (or atoms).
    pub center_indices: Vec<usize>,
    pub covered_mass: f64,
    pub epsilon: f64,
    pub n: usize,
    pub mode: CoverMode,
}

impl CoveringResult {
    pub fn count(&self) -> usize {
        self.center_indices.len()
    }
}

/// Points, integer weights and orbit data for one `(system, spec, n)`.
struct Problem {
    points: Vec<Point>,
    weights: Vec<u128>,
    features: OrbitFeatures,
    n: usize,
}

impl Problem {
    fn total(&self) -> u128 {
        self.weights.iter().sum()
    }

    fn instance(&self, eps: f64) -> Result<CoverInstance> {
        let balls = neighbor_lists(&self.features, eps / 2.0, true);
        CoverInstance::new(self.weights.clone(), balls, need_for(self.total(), eps)?)
    }

    fn result(&self, centers: Vec<usize>, covered: u128, eps: f64, mode: CoverMode) -> CoveringResult {
        CoveringResult {
            centers: centers.iter().map(|&i| self.points[i].clone()).collect(),
            center_indices: centers,
            covered_mass: ratio_f64(covered, self.total()),
            epsilon: eps,
            n: self.n,
            mode,
        }
    }

    /// Max of the mass bound and the separation bound.
    ///
    /// Mass: `m` balls of mass at most `M` cover more than `1 - eps` only if
    /// `m M >= need`. Separation: no ball of radius `eps/2` holds two points
    /// at distance `>= eps`, so with a maximal `eps`-separated set `P` at least
    /// `|P| - k` balls are needed, `k` being the most points of `P` whose
    /// total mass stays below `eps`.
    fn lower(&self, inst: &CoverInstance, eps: f64) -> Result<usize> {
        let mass = inst.mass_bound();
        let mut sep: Vec<usize> = Vec::new();
        for i in 0..self.points.len() {
            if sep.iter().all(|&j| self.features.distance(i, j) >= eps) {
                sep.push(i);
            }
        }
        let mut w: Vec<u128> = sep.iter().map(|&i| self.weights[i]).collect();
        w.sort_unstable();
        let limit = decimal_rational(eps)? * BigRational::from_integer(BigInt::from(self.total()));
        let mut acc = 0u128;
        let mut k = 0;
        for x in w {
            acc += x;
            if BigRational::from_integer(BigInt::from(acc)) < limit {
                k += 1;
            } else {
                break;
            }
        }
        Ok(mass.max(sep.len() - k).max(1))
    }
}

fn ratio_f64(a: u128, b: u128) -> f64 {
    BigRational::new(BigInt::from(a), BigInt::from(b)).to_f64().unwrap_or(f64::NAN)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        input(format!("epsilon must be positive and finite, got {eps}"))
    }
}

fn sampled_problem(
    sys: &DynamicalSystem,
    spec: &SemimetricSpec,
    seq: &FolnerSequence,
    n: usize,
    points: Vec<Point>,
) -> Result<Problem> {
    let set = seq.set(n)?;
    let features = OrbitFeatures::build(sys, spec, &set, &points)?;
    Ok(Problem {
        weights: vec![1; points.len()],
        points,
        features,
        n,
    })
}

fn atom_problem(
    sys: &DynamicalSystem,
    spec: &SemimetricSpec,
    seq: &FolnerSequence,
    n: usize,
    atom_budget: usize,
) -> Result<Problem> {
    let Some(f) = sys.as_finite() else {
        return input("exact complexity needs a finite system with an exact measure");
    };
    if f.size() > atom_budget {
        return Err(Error::Budget {
            what: format!("finite system with {} atoms", f.size()),
            budget: atom_budget as u64,
        });
    }
    let (weights, _) = f.integer_weights()?;
    let points: Vec<Point> = (0..f.size()).map(Point::Atom).collect();
    let set = seq.set(n)?;
    let features = OrbitFeatures::build(sys, spec, &set, &points)?;
    Ok(Problem {
        points,
        weights,
        features,
        n,
    })
}

fn problem(
    sys: &DynamicalSystem,
    spec: &SemimetricSpec,
    seq: &FolnerSequence,
    n: usize,
    seed: u64,
    samples: usize,
) -> Result<Problem> {
    match sys.measure() {
        MeasureAccess::Exact(_) => atom_problem(sys, spec, seq, n, usize::MAX),
        MeasureAccess::Sampler => {
            if samples < MIN_SAMPLES {
                return input(format!("need at least {MIN_SAMPLES} samples, got {samples}"));
            }
            sampled_problem(sys, spec, seq, n, sys.sample(seed, samples)?)
        }
    }
}

/// Exact `C(rho_bar_{F_n}, eps)` over the atoms of a finite system.
pub fn complexity_exact(
    sys: &DynamicalSystem,
    spec: &SemimetricSpec,
    seq: &FolnerSequence,
    n: usize,
    eps: f64,
) -> Result<CoveringResult> {
    complexity_exact_with(sys, spec, seq, n, eps, DEFAULT_ATOM_BUDGET, DEFAULT_NODE_BUDGET)
}

pub fn complexity_exact_with(
    sys: &DynamicalSystem,
    spec: &SemimetricSpec,
    seq: &FolnerSequence,
    n: usize,
    eps: f64,
    atom_budget: usize,
    node_budget: u64,
) -> Result<CoveringResult> {
    check_eps(eps)?;
    let p = atom_problem(sys, spec, seq, n, atom_budget)?;
    let exact = p.instance(eps)?.exact(node_budget)?;
    Ok(p.result(exact.cover.centers, exact.cover.covered, eps, CoverMode::Exact))
}

/// Greedy cover of `samples` draws (or of the atoms, for exact measures).
pub fn complexity_greedy_upper(
    sys: &DynamicalSystem,
    spec: &SemimetricSpec,
    seq: &FolnerSequence,
    n: usize,
    eps: f64,
    seed: u64,
    samples: usize,
) -> Result<CoveringResult> {
    check_eps(eps)?;
    let p = problem(sys, spec, seq, n, seed, samples)?;
    let inst = p.instance(eps)?;
    let g = inst.greedy();
    if g.covered < inst.need() {
        return Err(Error::Numerical(format!(
            "greedy cover stalled at {} of {} required weight",
            g.covered,
            inst.need()
        )));
    }
    Ok(p.result(g.centers, g.covered, eps, CoverMode::GreedyUpper))
}

/// A lower bound for the covering count at `eps` (see the module docs of
/// the profile for what it is relative to).
pub fn packing_lower(
    sys: &DynamicalSystem,
    spec: &SemimetricSpec,
    seq: &FolnerSequence,
    n: usize,
    eps: f64,
    seed: u64,
    samples: usize,
) -> Result<usize> {
    check_eps(eps)?;
    let p = problem(sys, spec, seq, n, seed, samples)?;
    let inst = p.instance(eps)?;
    p.lower(&inst, eps)
}

/// Exact Hamming complexity of the Bernoulli(`p`) shift for the partition by
/// the symbol at the origin, computed on `{0,1}^{F_n}` with the product
/// measure. Only `|F_n|` matters.
pub fn complexity_words_exact(p: f64, seq: &FolnerSequence, n: usize, eps: f64) -> Result<usize> {
    complexity_words_exact_with(p, seq.set(n)?.len(), eps, DEFAULT_WORD_BUDGET, DEFAULT_NODE_BUDGET)
}

pub fn complexity_words_exact_with(p: f64, len: usize, eps: f64, word_budget: u64, node_budget: u64) -> Result<usize> {
    check_eps(eps)?;
    if !(p > 0.0 && p < 1.0) {
        return input("Bernoulli parameter must lie in (0, 1)");
    }
    if len == 0 || len > 22 {
        return input(format!("word length {len} outside 1..=22"));
    }
    let pr: Ratio<BigInt> = decimal_rational(p)?;
    let (num, den) = (pr.numer().clone(), pr.denom().clone());
    let (Some(num), Some(den)) = (num.to_u128(), den.to_u128()) else {
        return Err(Error::Numerical("Bernoulli parameter has a huge denominator".into()));
    };
    let pow = |b: u128, e: usize| -> Option<u128> { (0..e).try_fold(1u128, |acc, _| acc.checked_mul(b)) };
    if pow(den, len).is_none() {
        return Err(Error::Numerical("product measure weights overflow 128 bits".into()));
    }
    let kmax = (0..=len).take_while(|&k| (k as f64 / len as f64) < eps / 2.0).last();
    let Some(kmax) = kmax else {
        return input("radius is zero");
    };
    let words = 1usize << len;
    let masks: Vec<u32> = (0..words as u32).filter(|m| m.count_ones() as usize <= kmax).collect();
    if words as u64 * masks.len() as u64 > word_budget {
        return Err(Error::Budget {
            what: format!("word-space incidence for |F| = {len}"),
            budget: word_budget,
        });
    }
    let weights: Vec<u128> = (0..words as u32)
        .map(|w| {
            let ones = w.count_ones() as usize;
            pow(num, ones).unwrap() * pow(den - num, len - ones).unwrap()
        })
        .collect();
    let balls: Vec<Vec<u32>> = (0..words as u32)
        .map(|w| {
            let mut b: Vec<u32> = masks.iter().map(|m| w ^ m).collect();
            b.sort_unstable();
            b
        })
        .collect();
    let total = pow(den, len).unwrap();
    let inst = CoverInstance::new(weights, balls, need_for(total, eps)?)?;
    Ok(inst.exact(node_budget)?.cover.centers.len())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub n_grid: Vec<usize>,
    pub eps_grid: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Solve exactly where the measure is exact.
    #[serde(default = "yes")]
    pub exact: bool,
    #[serde(default = "default_nodes")]
    pub node_budget: u64,
    #[serde(default = "default_atoms")]
    pub atom_budget: usize,
    #[serde(default)]
    pub timings: bool,
}

fn yes() -> bool {
    true
}

fn default_nodes() -> u64 {
    DEFAULT_NODE_BUDGET
}

fn default_atoms() -> usize {
    DEFAULT_ATOM_BUDGET
}

impl ProfileConfig {
    pub fn new(n_grid: Vec<usize>, eps_grid: Vec<f64>, samples: usize, seed: u64) -> Self {
        ProfileConfig {
            n_grid,
            eps_grid,
            samples,
            seed,
            exact: true,
            node_budget: DEFAULT_NODE_BUDGET,
            atom_budget: DEFAULT_ATOM_BUDGET,
            timings: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.eps_grid.is_empty() {
            return input("profile grids must be nonempty");
        }
        if self.n_grid.contains(&0) {
            return input("Følner indices start at 1");
        }
        for &e in &self.eps_grid {
            check_eps(e)?;
        }
        if self.node_budget == 0 || self.atom_budget == 0 {
            return input("budgets must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub n: usize,
    pub folner_size: usize,
    pub epsilon: f64,
    pub lower: usize,
    pub upper: usize,
    pub exact: Option<usize>,
    /// `None` when the exact measure was used instead of samples.
    pub samples: Option<usize>,
    pub seed: u64,
    pub runtime_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityProfile {
    pub rows: Vec<ProfileRow>,
    /// The state space is finite, so complexity is bounded by its size.
    pub finite_state: bool,
}

impl ComplexityProfile {
    pub fn epsilons(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.rows.iter().map(|r| r.epsilon).collect();
        e.sort_by(f64::total_cmp);
        e.dedup();
        e
    }

    pub fn rows_for(&self, eps: f64) -> Vec<&ProfileRow> {
        let mut r: Vec<&ProfileRow> = self.rows.iter().filter(|r| r.epsilon == eps).collect();
        r.sort_by_key(|r| r.n);
        r
    }
}

/// Complexity over an `(n, eps)` grid, sharing one sample set.
///
/// Upper bounds are made nonincreasing in `eps` (a cover at a smaller `eps`
/// is also a cover at a larger one) and lower bounds nonincreasing likewise.
pub fn complexity_profile(
    sys: &DynamicalSystem,
    spec: &SemimetricSpec,
    seq: &FolnerSequence,
    cfg: &ProfileConfig,
) -> Result<ComplexityProfile> {
    cfg.validate()?;
    spec.validate(sys)?;
    let exact_measure = matches!(sys.measure(), MeasureAccess::Exact(_));
    let points = if exact_measure {
        None
    } else {
        if cfg.samples < MIN_SAMPLES {
            return input(format!("need at least {MIN_SAMPLES} samples, got {}", cfg.samples));
        }
        Some(sys.sample(cfg.seed, cfg.samples)?)
    };
    let mut eps = cfg.eps_grid.clone();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let start = Instant::now();
        let p = match &points {
            Some(pts) => sampled_problem(sys, spec, seq, n, pts.clone())?,
            None => atom_problem(sys, spec, seq, n, cfg.atom_budget)?,
        };
        let mut cells = Vec::new();
        for &e in &eps {
            let inst = p.instance(e)?;
            let greedy = inst.greedy();
            let exact = if exact_measure && cfg.exact {
                Some(inst.exact(cfg.node_budget)?.cover.centers.len())
            } else {
                None
            };
            cells.push((e, p.lower(&inst, e)?, greedy.centers.len(), exact));
        }
        for k in 1..cells.len() {
            cells[k].2 = cells[k].2.min(cells[k - 1].2);
        }
        for k in (0..cells.len().saturating_sub(1)).rev() {
            cells[k].1 = cells[k].1.max(cells[k + 1].1);
        }
        let ms = cfg.timings.then(|| start.elapsed().as_millis() as u64);
        for (e, lower, upper, exact) in cells {
            rows.push(ProfileRow {
                n,
                folner_size: p.features.folner_size(),
                epsilon: e,
                lower,
                upper,
                exact,
                samples: points.as_ref().map(|x| x.len()),
                seed: cfg.seed,
                runtime_ms: ms,
            });
        }
    }
    Ok(ComplexityProfile {
        rows,
        finite_state: exact_measure,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Bounded,
    Growing,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticConfig {
    /// bounded when `max / min` of the upper estimates is at most this
    pub band: f64,
    /// growing when the slope of `log C` against `log |F_n|` exceeds this
    pub slope: f64,
    pub min_points: usize,
    /// never bounded when an upper estimate exceeds this fraction of the samples
    #[serde(default = "default_saturation")]
    pub saturation: f64,
}

fn default_saturation() -> f64 {
    0.5
}

impl Default for DiagnosticConfig {
    fn default() -> Self {
        DiagnosticConfig {
            band: 1.5,
            slope: 0.2,
            min_points: 5,
            saturation: default_saturation(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonFit {
    pub epsilon: f64,
    pub points: usize,
    pub saturated: bool,
    pub ratio: f64,
    pub slope: f64,
    pub lower_slope: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundednessReport {
    pub verdict: Verdict,
    pub fits: Vec<EpsilonFit>,
    pub finite_state: bool,
    pub thresholds: DiagnosticConfig,
}

/// Least-squares slope of `y` against `x`; zero when `x` is constant.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / sxx
}

pub fn boundedness_diagnostic(profile: &ComplexityProfile, cfg: &DiagnosticConfig) -> BoundednessReport {
    let fits: Vec<EpsilonFit> = profile
        .epsilons()
        .into_iter()
        .map(|e| {
            let rows = profile.rows_for(e);
            let upper: Vec<f64> = rows.iter().map(|r| r.upper as f64).collect();
            let lower: Vec<f64> = rows.iter().map(|r| r.lower as f64).collect();
            let logf: Vec<f64> = rows.iter().map(|r| (r.folner_size as f64).ln()).collect();
            let ratio = upper.iter().cloned().fold(0.0, f64::max) / upper.iter().cloned().fold(f64::INFINITY, f64::min);
            let slope = ls_slope(&logf, &upper.iter().map(|u| u.ln()).collect::<Vec<_>>());
            let lower_slope = ls_slope(&logf, &lower.iter().map(|u| u.ln()).collect::<Vec<_>>());
            let saturated = rows
                .iter()
                .any(|r| r.samples.is_some_and(|m| r.upper as f64 > cfg.saturation * m as f64));
            // saturation flattens the profile, so it only blocks a bounded reading
            let verdict = if rows.len() < cfg.min_points {
                Verdict::Inconclusive
            } else if ratio <= cfg.band && !saturated {
                Verdict::Bounded
            } else if slope > cfg.slope && lower_slope > 0.0 {
                Verdict::Growing
            } else {
                Verdict::Inconclusive
            };
            EpsilonFit {
                epsilon: e,
                points: rows.len(),
                saturated,
                ratio,
                slope,
                lower_slope,
                verdict,
            }
        })
        .collect();
    let verdict = if profile.finite_state {
        Verdict::Bounded
    } else if fits.iter().any(|f| f.verdict == Verdict::Growing) {
        Verdict::Growing
    } else if !fits.is_empty() && fits.iter().all(|f| f.verdict == Verdict::Bounded) {
        Verdict::Bounded
    } else {
        Verdict::Inconclusive
    };
    BoundednessReport {
        verdict,
        fits,
        finite_state: profile.finite_state,
        thresholds: cfg.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellDecomposition {
    /// Atom indices of each cell.
    pub cells: Vec<Vec<usize>>,
    pub mass: f64,
    /// Largest in-cell value of `max_{n <= n_max} rho_bar_{F_n}`.
    pub max_diameter: f64,
    pub n_max: usize,
}

/// Looks for disjoint cells of total mass above `1 - eps` on which
/// `rho_bar_{F_n}(x, y) < eps` for every `n <= n_max`. Cells are extracted
/// greedily as maximum-mass cliques of the compatibility graph. `None` when
/// more than `max_cells` cells would be needed.
pub fn uniform_cell_check(
    sys: &DynamicalSystem,
    spec: &SemimetricSpec,
    seq: &FolnerSequence,
    eps: f64,
    n_max: usize,
    max_cells: Option<usize>,
) -> Result<Option<CellDecomposition>> {
    check_eps(eps)?;
    let Some(f) = sys.as_finite() else {
        return input("uniform cells are computed on finite systems");
    };
    let size = f.size();
    if size > 64 {
        return Err(Error::Budget {
            what: format!("finite system with {size} atoms"),
            budget: 64,
        });
    }
    if n_max == 0 {
        return input("n_max must be at least 1");
    }
    let points: Vec<Point> = (0..size).map(Point::Atom).collect();
    let mut worst = vec![0.0f64; size * size];
    for n in 1..=n_max {
        let feats = OrbitFeatures::build(sys, spec, &*seq.set(n)?, &points)?;
        for i in 0..size {
            for j in 0..size {
                worst[i * size + j] = worst[i * size + j].max(feats.distance(i, j));
            }
        }
    }
    let adj: Vec<u64> = (0..size)
        .map(|i| (0..size).filter(|&j| j != i && worst[i * size + j] < eps).fold(0u64, |m, j| m | 1 << j))
        .collect();
    let (weights, total) = f.integer_weights()?;
    let need = need_for(total, eps)?;
    let mut remaining: u64 = if size == 64 { u64::MAX } else { (1u64 << size) - 1 };
    let mut cells = Vec::new();
    let mut covered = 0u128;
    while covered < need {
        if max_cells.is_some_and(|m| cells.len() >= m) {
            return Ok(None);
        }
        let clique = max_weight_clique(&adj, &weights, remaining);
        if clique == 0 {
            break;
        }
        remaining &= !clique;
        let atoms: Vec<usize> = (0..size).filter(|&i| clique >> i & 1 == 1).collect();
        covered += atoms.iter().map(|&i| weights[i]).sum::<u128>();
        cells.push(atoms);
    }
    if covered < need {
        return Ok(None);
    }
    let max_diameter = cells
        .iter()
        .flat_map(|c| c.iter().flat_map(|&i| c.iter().map(move |&j| (i, j))))
        .map(|(i, j)| worst[i * size + j])
        .fold(0.0, f64::max);
    Ok(Some(CellDecomposition {
        cells,
        mass: ratio_f64(covered, total),
        max_diameter,
        n_max,
    }))
}

/// Maximum-weight clique within `allowed`, ties to the lexicographically
/// smallest vertex set found first.
fn max_weight_clique(adj: &[u64], w: &[u128], allowed: u64) -> u64 {
    fn go(adj: &[u64], w: &[u128], clique: u64, cw: u128, cand: u64, best: &mut (u128, u64)) {
        if cw > best.0 {
            *best = (cw, clique);
        }
        let bound: u128 = (0..adj.len()).filter(|&i| cand >> i & 1 == 1).map(|i| w[i]).sum();
        if cw + bound <= best.0 {
            return;
        }
        let mut c = cand;
        while c != 0 {
            let v = c.trailing_zeros() as usize;
            c &= c - 1;
            go(adj, w, clique | 1 << v, cw + w[v], c & adj[v], best);
        }
    }
    let mut best = (0u128, 0u64);
    go(adj, w, 0, 0, allowed, &mut best);
    best.1
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessEntry {
    pub spec: SemimetricSpec,
    pub eps_grid: Vec<f64>,
    pub report: BoundednessReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub entries: Vec<RobustnessEntry>,
    pub agree: bool,
    pub verdict: Verdict,
    /// Set when the classifications disagree; carries what is needed to rerun.
    pub falsification_candidate: bool,
    pub seed: u64,
    pub samples: usize,
}

/// Classifies each spec on the same samples and `n` grid. The relative `eps`
/// grid is scaled by each spec's diameter.
pub fn metric_robustness_check(
    sys: &DynamicalSystem,
    seq: &FolnerSequence,
    relative_eps: &[f64],
    n_grid: &[usize],
    samples: usize,
    seed: u64,
    specs: &[SemimetricSpec],
    diag: &DiagnosticConfig,
) -> Result<RobustnessReport> {
    if specs.len() < 2 {
        return input("robustness needs at least two semimetrics");
    }
    let mut entries = Vec::new();
    for spec in specs {
        let diam = spec.diameter(sys);
        let eps_grid: Vec<f64> = relative_eps.iter().map(|e| e * diam).collect();
        let mut cfg = ProfileConfig::new(n_grid.to_vec(), eps_grid.clone(), samples, seed);
        cfg.exact = false;
        let profile = complexity_profile(sys, spec, seq, &cfg)?;
        entries.push(RobustnessEntry {
            spec: spec.clone(),
            eps_grid,
            report: boundedness_diagnostic(&profile, diag),
        });
    }
    let first = entries[0].report.verdict;
    let agree = entries.iter().all(|e| e.report.verdict == first);
    Ok(RobustnessReport {
        agree,
        verdict: if agree { first } else { Verdict::Inconclusive },
        falsification_candidate: !agree,
        entries,
        seed,
        samples,
    })
}

/// `sum` of exact measure weights, for tests and reports.
pub fn exact_mass(sys: &DynamicalSystem, atoms: &[usize]) -> Result<Ratio<u64>> {
    let Some(f) = sys.as_finite() else {
        return input("exact mass needs a finite system");
    };
    Ok(atoms.iter().fold(Ratio::zero(), |a, &i| a + f.weights()[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::folner::{FolnerRule, SideFn};
    use crate::group::GroupSpec;
    use crate::metrics::{Observable, Partition};
    use crate::systems::{FiniteMetric, FiniteSystem, SubshiftSystem, TorusMetric, TorusSystem};

    fn z_boxes() -> FolnerSequence {
        FolnerSequence::new(GroupSpec::lattice(1), FolnerRule::Boxes { side: SideFn::Identity }).unwrap()
    }

    fn identity(n: usize) -> DynamicalSystem {
        DynamicalSystem::Finite(FiniteSystem::identity(n, FiniteMetric::Discrete, None).unwrap())
    }

    #[test]
    fn exact_examples() {
        let base = SemimetricSpec::Base;
        let seq = z_boxes();
        assert_eq!(complexity_exact(&identity(2), &base, &seq, 1, 0.5).unwrap().count(), 2);
        assert_eq!(complexity_exact(&identity(2), &base, &seq, 1, 1.2).unwrap().count(), 1);
        assert_eq!(complexity_exact(&identity(4), &base, &seq, 3, 0.3).unwrap().count(), 3);
    }

    #[test]
    fn packing_examples() {
        let base = SemimetricSpec::Base;
        let seq = z_boxes();
        assert_eq!(packing_lower(&identity(2), &base, &seq, 1, 0.5, 0, 0).unwrap(), 2);
        assert_eq!(packing_lower(&identity(1), &base, &seq, 1, 0.5, 0, 0).unwrap(), 1);
        let rot = DynamicalSystem::Torus(TorusSystem::golden());
        assert!(packing_lower(&rot, &base, &seq, 8, 0.2, 3, 2000).unwrap() >= 4);
    }

    #[test]
    fn atom_budget_is_enforced() {
        let r = complexity_exact(&identity(25), &SemimetricSpec::Base, &z_boxes(), 1, 0.5);
        assert!(matches!(r, Err(Error::Budget { .. })));
    }

    #[test]
    fn rotation_greedy_is_small_and_flat() {
        let rot = DynamicalSystem::Torus(TorusSystem::golden());
        let seq = z_boxes();
        let counts: Vec<usize> = [1, 16, 256]
            .iter()
            .map(|&n| complexity_greedy_upper(&rot, &SemimetricSpec::Base, &seq, n, 0.2, 5, 2000).unwrap().count())
            .collect();
        assert!(counts.iter().all(|&c| c == counts[0] && c <= 10), "{counts:?}");
    }

    #[test]
    fn greedy_needs_enough_samples() {
        let rot = DynamicalSystem::Torus(TorusSystem::golden());
        assert!(complexity_greedy_upper(&rot, &SemimetricSpec::Base, &z_boxes(), 1, 0.2, 5, 50).is_err());
    }

    #[test]
    fn words_examples() {
        assert_eq!(complexity_words_exact_with(0.5, 1, 0.6, DEFAULT_WORD_BUDGET, DEFAULT_NODE_BUDGET).unwrap(), 1);
        assert_eq!(complexity_words_exact_with(0.5, 5, 1.0, DEFAULT_WORD_BUDGET, DEFAULT_NODE_BUDGET).unwrap(), 1);
        assert_eq!(complexity_words_exact_with(0.5, 4, 0.4, DEFAULT_WORD_BUDGET, DEFAULT_NODE_BUDGET).unwrap(), 10);
        assert!(complexity_words_exact_with(0.5, 23, 0.4, DEFAULT_WORD_BUDGET, DEFAULT_NODE_BUDGET).is_err());
    }

    #[test]
    fn words_match_finite_system_oracle() {
        // {0,1}^L as a finite system with normalized Hamming metric
        for len in 1..=4usize {
            let size = 1 << len;
            let entries: Vec<Vec<f64>> = (0..size)
                .map(|a: usize| (0..size).map(|b: usize| (a ^ b).count_ones() as f64 / len as f64).collect())
                .collect();
            let sys = DynamicalSystem::Finite(
                FiniteSystem::identity(size, FiniteMetric::Matrix { entries }, None).unwrap(),
            );
            for eps in [0.3, 0.5, 0.8, 1.1] {
                let a = complexity_exact(&sys, &SemimetricSpec::Base, &z_boxes(), 1, eps).unwrap().count();
                let b = complexity_words_exact_with(0.5, len, eps, DEFAULT_WORD_BUDGET, DEFAULT_NODE_BUDGET).unwrap();
                assert_eq!(a, b, "len {len} eps {eps}");
            }
        }
    }

    #[test]
    fn profile_is_monotone_and_sandwiched() {
        let sys = DynamicalSystem::Finite(FiniteSystem::cyclic_shift(9).unwrap());
        let cfg = ProfileConfig::new(vec![1, 2, 5], vec![0.05, 0.2, 0.4, 0.7], 0, 1);
        let prof = complexity_profile(&sys, &SemimetricSpec::Base, &z_boxes(), &cfg).unwrap();
        for r in &prof.rows {
            let e = r.exact.unwrap();
            assert!(r.lower <= e && e <= r.upper, "{r:?}");
        }
        for n in [1, 2, 5] {
            let ups: Vec<usize> = prof.rows.iter().filter(|r| r.n == n).map(|r| r.upper).collect();
            assert!(ups.windows(2).all(|w| w[0] >= w[1]));
        }
        assert_eq!(boundedness_diagnostic(&prof, &DiagnosticConfig::default()).verdict, Verdict::Bounded);
    }

    #[test]
    fn diagnostic_rules() {
        let row = |n: usize, f: usize, u: usize, l: usize| ProfileRow {
            n,
            folner_size: f,
            epsilon: 0.2,
            lower: l,
            upper: u,
            exact: None,
            samples: Some(100),
            seed: 0,
            runtime_ms: None,
        };
        let cfg = DiagnosticConfig::default();
        let flat = ComplexityProfile {
            rows: (1..=5).map(|k| row(k, 1 << k, 9 + k % 2, 4)).collect(),
            finite_state: false,
        };
        assert_eq!(boundedness_diagnostic(&flat, &cfg).verdict, Verdict::Bounded);
        let grow = ComplexityProfile {
            rows: (1..=5).map(|k| row(k, 2 * k, 1 << k, k)).collect(),
            finite_state: false,
        };
        assert_eq!(boundedness_diagnostic(&grow, &cfg).verdict, Verdict::Growing);
        let short = ComplexityProfile {
            rows: vec![row(1, 1, 2, 1), row(2, 2, 8, 2)],
            finite_state: false,
        };
        assert_eq!(boundedness_diagnostic(&short, &cfg).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn uniform_cells() {
        let seq = z_boxes();
        let id = identity(5);
        let cells = uniform_cell_check(&id, &SemimetricSpec::Base, &seq, 0.3, 4, None).unwrap().unwrap();
        assert!(cells.cells.iter().all(|c| c.len() == 1));
        assert_eq!(cells.cells.len(), 4);

        let cyc = DynamicalSystem::Finite(FiniteSystem::cyclic_shift(20).unwrap());
        let eps = 0.25;
        let cells = uniform_cell_check(&cyc, &SemimetricSpec::Base, &seq, eps, 8, None).unwrap().unwrap();
        assert!(cells.max_diameter < eps);
        assert!(cells.mass > 1.0 - eps);
        assert!(cells.cells.len() <= (1.0 / eps).ceil() as usize, "{:?}", cells.cells);

        // a mixing permutation under the discrete partition metric
        let mix = DynamicalSystem::Finite(
            FiniteSystem::new(
                GroupSpec::lattice(1),
                vec![vec![3, 7, 0, 5, 1, 2, 4, 6]],
                FiniteMetric::Discrete,
                None,
            )
            .unwrap(),
        );
        assert_eq!(uniform_cell_check(&mix, &SemimetricSpec::Base, &seq, 0.05, 8, Some(4)).unwrap(), None);
    }

    #[test]
    fn robustness_on_rotation() {
        let sys = DynamicalSystem::Torus(TorusSystem::golden());
        let specs = vec![
            SemimetricSpec::Base,
            SemimetricSpec::Torus { metric: TorusMetric::Sum },
            SemimetricSpec::Observable { observable: Observable::AbsSin { index: 0 } },
            SemimetricSpec::PartitionHamming { partition: Partition::torus_intervals(&[0.0, 0.5], 1).unwrap() },
        ];
        let r = metric_robustness_check(
            &sys,
            &z_boxes(),
            &[0.2, 0.4],
            &[16, 32, 64, 128, 256],
            600,
            3,
            &specs,
            &DiagnosticConfig::default(),
        )
        .unwrap();
        for e in &r.entries {
            assert_eq!(e.report.verdict, Verdict::Bounded, "{:?}", e);
        }
        assert!(r.agree);
    }

    #[test]
    fn bernoulli_hamming_grows() {
        let sys = DynamicalSystem::Subshift(SubshiftSystem::bernoulli(GroupSpec::lattice(1), 0.5).unwrap());
        let spec = SemimetricSpec::PartitionHamming { partition: Partition::origin_cylinder(&sys).unwrap() };
        let cfg = ProfileConfig::new(vec![2, 4, 6, 8, 10], vec![0.4], 800, 9);
        let prof = complexity_profile(&sys, &spec, &z_boxes(), &cfg).unwrap();
        assert_eq!(boundedness_diagnostic(&prof, &DiagnosticConfig::default()).verdict, Verdict::Growing, "{prof:?}");
    }
}
