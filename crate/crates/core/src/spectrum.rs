//! Almost periodicity and discrete spectrum in `L^2(X, mu)`.
//!
//! Orbits `{h o g : g in B_r}` are evaluated on one shared sample block, so
//! every pairwise distance and every Gram entry uses the same random
//! numbers. The exact checks on finite systems use rational arithmetic and
//! `Q(sqrt 2)`.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize, Serializer};

use crate::complexity::{boundedness_diagnostic, complexity_profile, BoundednessReport, DiagnosticConfig, ProfileConfig, Verdict};
use crate::error::{input, Error, Result};
use crate::folner::FolnerSequence;
use crate::group::{box_elements, GroupElement};
use crate::metrics::{Observable, SemimetricSpec};
use crate::par;
use crate::qsqrt2::QSqrt2;
use crate::systems::{DynamicalSystem, FiniteSystem};

pub const DEFAULT_BALL_BUDGET: usize = 4096;

/// Net thresholds live on the grid `2^{j / NET_GRID}`.
const NET_GRID: f64 = 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct L2Estimate {
    pub value: f64,
    /// delta-method standard error of `value`
    pub std_error: f64,
    pub mean_square: f64,
    pub mean_square_std_error: f64,
    pub sample_count: usize,
}

/// Mean and standard error of a sample.
fn mean_se(z: &[f64]) -> (f64, f64) {
    let n = z.len() as f64;
    let m = z.iter().sum::<f64>() / n;
    if z.len() < 2 {
        return (m, 0.0);
    }
    let var = z.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Monte Carlo `||h1 - h2||_2`.
pub fn l2_distance(
    sys: &DynamicalSystem,
    h1: &Observable,
    h2: &Observable,
    seed: u64,
    sample_count: usize,
) -> Result<L2Estimate> {
    h1.validate(sys)?;
    h2.validate(sys)?;
    if sample_count == 0 {
        return input("sample count must be positive");
    }
    let pts = sys.sample(seed, sample_count)?;
    let z: Vec<f64> = par::map_indexed(pts.len(), |i| (h1.eval(sys, &pts[i]) - h2.eval(sys, &pts[i])).norm_sqr());
    let (m, se) = mean_se(&z);
    let value = m.sqrt();
    Ok(L2Estimate {
        value,
        std_error: if value > 0.0 { se / (2.0 * value) } else { 0.0 },
        mean_square: m,
        mean_square_std_error: se,
        sample_count,
    })
}

/// `B_r` for the standard generators, ordered by word length and then
/// lexicographically, so `B_r` is a prefix of `B_{r+1}`.
pub fn ordered_ball(sys: &DynamicalSystem, radius: usize, budget: usize) -> Result<Vec<GroupElement>> {
    let g = sys.group();
    let mut ball = g.word_ball(&g.standard_generators(), radius, budget)?;
    ball.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ball.into_iter().map(|(e, _)| e).collect())
}

/// `h(g x_s)` for every ball element `g` (rows) and sample `x_s` (columns).
struct OrbitBlock {
    elements: Vec<GroupElement>,
    values: Vec<Complex64>,
    samples: usize,
}

impl OrbitBlock {
    fn new(sys: &DynamicalSystem, h: &Observable, elements: Vec<GroupElement>, seed: u64, samples: usize) -> Result<Self> {
        h.validate(sys)?;
        if samples == 0 {
            return input("sample count must be positive");
        }
        let pts = sys.sample(seed, samples)?;
        let rows: Vec<Vec<Complex64>> = par::map_indexed(elements.len(), |i| {
            pts.iter().map(|x| h.eval(sys, &sys.act_unchecked(&elements[i], x))).collect()
        });
        Ok(OrbitBlock {
            elements,
            values: rows.concat(),
            samples,
        })
    }

    fn row(&self, i: usize) -> &[Complex64] {
        &self.values[i * self.samples..(i + 1) * self.samples]
    }

    /// Pairwise `L^2` distances, row-major.
    fn distances(&self) -> Vec<f64> {
        let n = self.elements.len();
        let rows: Vec<Vec<f64>> = par::map_indexed(n, |i| {
            (0..n)
                .map(|j| {
                    let s: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| (a - b).norm_sqr()).sum();
                    (s / self.samples as f64).sqrt()
                })
                .collect()
        });
        rows.concat()
    }
}

/// Greedy net over the first `len` points in order, joining a point to an
/// earlier center when their distance is below `t`.
fn greedy_net(dist: &[f64], stride: usize, len: usize, t: f64) -> usize {
    let mut centers: Vec<usize> = Vec::new();
    for i in 0..len {
        if !centers.iter().any(|&c| dist[i * stride + c] < t) {
            centers.push(i);
        }
    }
    centers.len()
}

/// Grid thresholds `t <= eps` at which the greedy nets can differ: from the
/// largest grid value not above the smallest positive distance up to `eps`.
fn net_thresholds(dist: &[f64], eps: f64) -> Vec<f64> {
    let grid = |j: i64| (j as f64 / NET_GRID).exp2();
    let mut top = (eps.log2() * NET_GRID).floor() as i64 + 1;
    while grid(top) > eps {
        top -= 1;
    }
    let dmin = dist.iter().copied().filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);
    if !dmin.is_finite() || dmin >= grid(top) {
        return vec![grid(top)];
    }
    let mut bottom = (dmin.log2() * NET_GRID).floor() as i64 + 1;
    while grid(bottom) > dmin {
        bottom -= 1;
    }
    (bottom..=top).map(grid).collect()
}

/// Net sizes of `{h o g : g in B_r}` for each radius. The size at `(r, eps)`
/// is the smallest greedy net (in ball order) at a threshold `2^{j/16} <= eps`;
/// every such net covers at distance below `eps`, and the minimum is
/// nondecreasing in `r` and nonincreasing in `eps` by construction.
fn net_sizes(block: &OrbitBlock, prefix_lens: &[usize], eps: f64) -> Vec<usize> {
    let n = block.elements.len();
    let dist = block.distances();
    let ts = net_thresholds(&dist, eps);
    prefix_lens
        .iter()
        .map(|&len| ts.iter().map(|&t| greedy_net(&dist, n, len, t)).min().unwrap_or(len))
        .collect()
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return input(format!("epsilon must be positive, got {eps}"));
    }
    Ok(())
}

pub fn orbit_net_size(
    sys: &DynamicalSystem,
    h: &Observable,
    radius: usize,
    eps: f64,
    seed: u64,
    sample_count: usize,
) -> Result<usize> {
    orbit_net_size_with(sys, h, radius, eps, seed, sample_count, DEFAULT_BALL_BUDGET)
}

pub fn orbit_net_size_with(
    sys: &DynamicalSystem,
    h: &Observable,
    radius: usize,
    eps: f64,
    seed: u64,
    sample_count: usize,
    ball_budget: usize,
) -> Result<usize> {
    check_eps(eps)?;
    let ball = ordered_ball(sys, radius, ball_budget)?;
    let len = ball.len();
    let block = OrbitBlock::new(sys, h, ball, seed, sample_count)?;
    Ok(net_sizes(&block, &[len], eps)[0])
}

fn ser_complex_matrix<S: Serializer>(m: &[Vec<Complex64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<Vec<[f64; 2]>> = m.iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect();
    pairs.serialize(s)
}

/// Monte Carlo Gram matrix of `{h o g_i}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct L2OrbitGram {
    pub elements: Vec<GroupElement>,
    /// `gram[i][j] = <h o g_i, h o g_j>`, serialized as `[re, im]`.
    #[serde(serialize_with = "ser_complex_matrix")]
    pub gram: Vec<Vec<Complex64>>,
    pub diagonal_std_error: Vec<f64>,
    pub sample_count: usize,
    pub seed: u64,
}

impl L2OrbitGram {
    /// Largest `|g_ii - g_jj| / sqrt(se_i^2 + se_j^2)` over diagonal pairs.
    pub fn diagonal_max_z(&self) -> f64 {
        let n = self.gram.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let d = (self.gram[i][i].re - self.gram[j][j].re).abs();
                let se = self.diagonal_std_error[i].hypot(self.diagonal_std_error[j]);
                let z = if se > 0.0 { d / se } else if d > 0.0 { f64::INFINITY } else { 0.0 };
                worst = worst.max(z);
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        let n = self.gram.len();
        (0..n).all(|i| (0..n).all(|j| self.gram[i][j] == self.gram[j][i].conj()))
    }
}

pub fn orbit_gram(sys: &DynamicalSystem, h: &Observable, radius: usize, seed: u64, sample_count: usize) -> Result<L2OrbitGram> {
    let ball = ordered_ball(sys, radius, DEFAULT_BALL_BUDGET)?;
    let block = OrbitBlock::new(sys, h, ball, seed, sample_count)?;
    let n = block.elements.len();
    let m = sample_count as f64;
    let upper: Vec<Vec<Complex64>> = par::map_indexed(n, |i| {
        (i..n)
            .map(|j| block.row(i).iter().zip(block.row(j)).map(|(a, b)| a * b.conj()).sum::<Complex64>() / m)
            .collect()
    });
    let mut gram = vec![vec![Complex64::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            gram[i][j] = upper[i][j - i];
            gram[j][i] = if i == j { Complex64::new(upper[i][0].re, 0.0) } else { upper[i][j - i].conj() };
        }
    }
    let diagonal_std_error = (0..n)
        .map(|i| mean_se(&block.row(i).iter().map(|z| z.norm_sqr()).collect::<Vec<_>>()).1)
        .collect();
    Ok(L2OrbitGram {
        elements: block.elements,
        gram,
        diagonal_std_error,
        sample_count,
        seed,
    })
}

/// Number of eigenvalues above `tol * max eigenvalue`.
pub fn gram_effective_rank(gram: &L2OrbitGram, tol: f64) -> Result<usize> {
    if !(tol > 0.0 && tol < 1.0) {
        return input("rank tolerance must lie in (0, 1)");
    }
    let n = gram.gram.len();
    if n == 0 {
        return Ok(0);
    }
    let m = DMatrix::from_fn(n, n, |i, j| (gram.gram[i][j] + gram.gram[j][i].conj()) * 0.5);
    let ev = m.symmetric_eigenvalues();
    let max = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        return Ok(0);
    }
    if min < -tol * max {
        return Err(Error::Numerical(format!(
            "Gram matrix is indefinite: eigenvalue {min:e} against maximum {max:e}"
        )));
    }
    Ok(ev.iter().filter(|&&l| l > tol * max).count())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum APVerdict {
    PrecompactConsistent,
    Growing,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct APReport {
    pub radii: Vec<usize>,
    pub ball_sizes: Vec<usize>,
    pub net_sizes: Vec<usize>,
    pub epsilon: f64,
    pub verdict: APVerdict,
    pub seed: u64,
    pub sample_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct APConfig {
    /// Increasing ball radii.
    pub radii: Vec<usize>,
    pub eps_grid: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// growing when the last net is at least this multiple of the one before
    pub growth: f64,
    pub ball_budget: usize,
}

impl Default for APConfig {
    fn default() -> Self {
        APConfig {
            radii: vec![32, 64, 128, 256],
            eps_grid: vec![0.2, 0.4],
            samples: 1000,
            seed: 0,
            growth: 1.5,
            ball_budget: DEFAULT_BALL_BUDGET,
        }
    }
}

/// Net sizes over growing balls for each `eps`.
///
/// Verdicts: precompact-consistent when the nets at the two largest radii
/// differ by at most one; growing when the last net is at least `growth`
/// times the previous one; otherwise inconclusive. This is a heuristic
/// reading of finite data, not a proof.
pub fn ap_test(sys: &DynamicalSystem, h: &Observable, cfg: &APConfig) -> Result<Vec<APReport>> {
    if cfg.radii.len() < 2 || cfg.radii.windows(2).any(|w| w[0] >= w[1]) {
        return input("radii must be at least two increasing values");
    }
    if cfg.eps_grid.is_empty() {
        return input("epsilon grid is empty");
    }
    for &e in &cfg.eps_grid {
        check_eps(e)?;
    }
    let big = *cfg.radii.last().expect("nonempty");
    let ball = ordered_ball(sys, big, cfg.ball_budget)?;
    let lens: Vec<usize> = {
        let g = sys.group();
        let mut v = Vec::new();
        for &r in &cfg.radii {
            v.push(g.word_ball(&g.standard_generators(), r, cfg.ball_budget)?.len());
        }
        v
    };
    let block = OrbitBlock::new(sys, h, ball, cfg.seed, cfg.samples)?;
    Ok(cfg
        .eps_grid
        .iter()
        .map(|&eps| {
            let nets = net_sizes(&block, &lens, eps);
            let (a, b) = (nets[nets.len() - 2], nets[nets.len() - 1]);
            let verdict = if b - a <= 1 {
                APVerdict::PrecompactConsistent
            } else if b as f64 >= cfg.growth * a as f64 {
                APVerdict::Growing
            } else {
                APVerdict::Inconclusive
            };
            APReport {
                radii: cfg.radii.clone(),
                ball_sizes: lens.clone(),
                net_sizes: nets,
                epsilon: eps,
                verdict,
                seed: cfg.seed,
                sample_count: cfg.samples,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct APCrosscheckConfig {
    pub ap: APConfig,
    pub n_grid: Vec<usize>,
    /// Epsilons for the complexity of `H(x, y) = |h(x) - h(y)|`.
    pub complexity_eps: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub diagnostic: DiagnosticConfig,
}

impl Default for APCrosscheckConfig {
    fn default() -> Self {
        APCrosscheckConfig {
            ap: APConfig::default(),
            n_grid: vec![16, 32, 64, 128, 256],
            complexity_eps: vec![0.2, 0.4],
            samples: 600,
            seed: 0,
            diagnostic: DiagnosticConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct APCrosscheck {
    pub observable: Observable,
    pub ap: Vec<APReport>,
    pub ap_verdict: APVerdict,
    pub complexity: BoundednessReport,
    pub agree: bool,
    /// Both sides are conclusive and they disagree.
    pub falsification_candidate: bool,
    /// One side is inconclusive at these budgets.
    pub budget_artifact: bool,
    pub ap_seed: u64,
    pub complexity_seed: u64,
}

/// Compares the almost-periodicity reading of `h` with bounded complexity of
/// `H(x, y) = |h(x) - h(y)|`.
pub fn ap_vs_complexity_crosscheck(
    sys: &DynamicalSystem,
    h: &Observable,
    seq: &FolnerSequence,
    cfg: &APCrosscheckConfig,
) -> Result<APCrosscheck> {
    let ap = ap_test(sys, h, &cfg.ap)?;
    let ap_verdict = if ap.iter().any(|r| r.verdict == APVerdict::Growing) {
        APVerdict::Growing
    } else if ap.iter().all(|r| r.verdict == APVerdict::PrecompactConsistent) {
        APVerdict::PrecompactConsistent
    } else {
        APVerdict::Inconclusive
    };
    let spec = SemimetricSpec::Observable { observable: h.clone() };
    let mut pcfg = ProfileConfig::new(cfg.n_grid.clone(), cfg.complexity_eps.clone(), cfg.samples, cfg.seed);
    pcfg.exact = false;
    let profile = complexity_profile(sys, &spec, seq, &pcfg)?;
    let complexity = boundedness_diagnostic(&profile, &cfg.diagnostic);
    let conclusive = ap_verdict != APVerdict::Inconclusive && complexity.verdict != Verdict::Inconclusive;
    let agree = conclusive && ((ap_verdict == APVerdict::PrecompactConsistent) == (complexity.verdict == Verdict::Bounded));
    Ok(APCrosscheck {
        observable: h.clone(),
        ap,
        ap_verdict,
        complexity,
        agree,
        falsification_candidate: conclusive && !agree,
        budget_artifact: !conclusive,
        ap_seed: cfg.ap.seed,
        complexity_seed: cfg.seed,
    })
}

fn ser_ratio<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub holds: bool,
    /// A hypothesis failed, so the statement holds vacuously.
    pub vacuous: bool,
    pub reason: Option<String>,
    /// `int |h| dmu`
    #[serde(serialize_with = "ser_ratio")]
    pub mean_abs: BigRational,
    /// `(2 + C)/k + C/(k - 1)`
    #[serde(serialize_with = "ser_ratio")]
    pub bound: BigRational,
    #[serde(serialize_with = "ser_ratio")]
    pub slack: BigRational,
}

fn exact_weights(f: &FiniteSystem) -> Vec<BigRational> {
    f.weights()
        .iter()
        .map(|w| BigRational::new(BigInt::from(*w.numer()), BigInt::from(*w.denom())))
        .collect()
}

/// `h - int h dmu`, exactly.
pub fn center_exact(sys: &DynamicalSystem, h: &[BigRational]) -> Result<Vec<BigRational>> {
    let f = finite(sys)?;
    if h.len() != f.size() {
        return input("one value per atom is required");
    }
    let mean: BigRational = exact_weights(f).iter().zip(h).map(|(w, v)| w * v).sum();
    Ok(h.iter().map(|v| v - &mean).collect())
}

fn finite(sys: &DynamicalSystem) -> Result<&FiniteSystem> {
    sys.as_finite()
        .ok_or_else(|| Error::Unsupported("exact checks need a finite system with an exact measure".into()))
}

/// Checks `int |h| <= (2 + C)/k + C/(k - 1)` for `|h| <= C`, `int h = 0` and
/// `int int |h(x) - h(y)| < 1/k^2`. Hypotheses are verified first; a failed
/// hypothesis gives a vacuous pass with the reason recorded.
pub fn lemma_mean_bound_check(sys: &DynamicalSystem, h: &[BigRational], c_bound: &BigRational, k: u64) -> Result<LemmaCheck> {
    let f = finite(sys)?;
    if h.len() != f.size() {
        return input("one value per atom is required");
    }
    if k < 2 {
        return input("k must be at least 2");
    }
    let w = exact_weights(f);
    let kk = BigRational::from_integer(BigInt::from(k));
    let one = BigRational::from_integer(BigInt::from(1));
    let two = BigRational::from_integer(BigInt::from(2));
    let bound = (&two + c_bound) / &kk + c_bound / (&kk - &one);
    let mean_abs: BigRational = w.iter().zip(h).map(|(wi, v)| wi * v.abs()).sum();
    let mean: BigRational = w.iter().zip(h).map(|(wi, v)| wi * v).sum();
    let double: BigRational = w
        .iter()
        .zip(h)
        .flat_map(|(wi, hi)| w.iter().zip(h).map(move |(wj, hj)| wi * wj * (hi - hj).abs()))
        .sum();
    let reason = if h.iter().any(|v| v.abs() > *c_bound) {
        Some("h exceeds the bound C on some atom".to_string())
    } else if !mean.is_zero() {
        Some(format!("h has mean {mean}, not zero"))
    } else if double >= &one / (&kk * &kk) {
        Some(format!("mean pair difference {double} is not below 1/k^2"))
    } else {
        None
    };
    let slack = &bound - &mean_abs;
    Ok(LemmaCheck {
        holds: reason.is_some() || !slack.is_negative(),
        vacuous: reason.is_some(),
        reason,
        mean_abs,
        bound,
        slack,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Re,
    Im,
}

/// `coefficient * e` where `e` is the normalized real or imaginary part of
/// the character with the given frequencies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharacterComponent {
    pub frequencies: Vec<i64>,
    pub part: Part,
    #[serde(serialize_with = "ser_ratio")]
    pub coefficient: BigRational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasisBoundReport {
    pub holds: bool,
    pub basis_size: usize,
    /// `(g, x, y)` triples checked.
    pub triples: usize,
    /// smallest `||f|| sum |e_i(x) - e_i(y)| - |f(gx) - f(gy)|`, rounded
    pub min_slack: f64,
    pub worst: Option<(Vec<i64>, usize, usize)>,
}

/// A real character basis function `e(x) = c * Re/Im chi(x)` on the atoms,
/// with `c = sqrt 2` for non-real characters so that `||e||_2 = 1` under the
/// uniform measure. Values are in `Z[sqrt 2]` when the exponent divides 8.
#[derive(Clone, Debug, PartialEq)]
struct RealCharacter {
    frequencies: Vec<i64>,
    part: Part,
    values: Vec<QSqrt2>,
}

/// `cos(2 pi t / 8)` and `sin(2 pi t / 8)` scaled by `sqrt 2`.
fn eighth_root_parts(t: i64) -> (QSqrt2, QSqrt2) {
    let (c, s) = [(2, 0), (1, 1), (0, 2), (-1, 1), (-2, 0), (-1, -1), (0, -2), (1, -1)][t.rem_euclid(8) as usize];
    // sqrt2 * (sqrt2 / 2) = 1 and sqrt2 * 1 = sqrt2
    let f = |v: i64| match v {
        2 => QSqrt2::sqrt2(),
        -2 => -QSqrt2::sqrt2(),
        v => QSqrt2::int(v),
    };
    (f(c), f(s))
}

/// Orders of the generators as permutations of the atoms.
fn generator_orders(f: &FiniteSystem) -> Vec<u64> {
    let rank = f.group().rank();
    (0..rank)
        .map(|i| {
            let mut e = vec![0i64; rank];
            (1..=f.size() as i64)
                .find(|&m| {
                    e[i] = m;
                    (0..f.size()).all(|x| f.act_atom(&e, x) == x)
                })
                .unwrap_or(1) as u64
        })
        .collect()
}

/// Identifies the atoms with elements of `Z/m_1 x ... x Z/m_k` through the
/// orbit of atom 0; the `m_i` are the generator orders.
fn regular_labels(f: &FiniteSystem) -> Result<(Vec<u64>, Vec<Vec<i64>>)> {
    if !f.group().is_abelian() {
        return Err(Error::Setup("character decomposition needs an abelian group".into()));
    }
    let moduli = generator_orders(f);
    if moduli.iter().any(|m| 8 % m != 0) {
        return Err(Error::Unsupported(
            "exact characters are implemented for generator orders dividing 8".into(),
        ));
    }
    let sides: Vec<i64> = moduli.iter().map(|&m| m as i64).collect();
    let elements = box_elements(&sides);
    if elements.len() != f.size() {
        return Err(Error::Setup("the action is not regular: group and atom counts differ".into()));
    }
    let mut label = vec![None; f.size()];
    for g in &elements {
        let x = f.act_atom(g.coords(), 0);
        if label[x].is_some() {
            return Err(Error::Setup("the action is not regular: atom 0 has a nontrivial stabilizer".into()));
        }
        label[x] = Some(g.coords().to_vec());
    }
    Ok((moduli, label.into_iter().map(|l| l.expect("bijective")).collect()))
}

fn real_character(moduli: &[u64], labels: &[Vec<i64>], frequencies: &[i64], part: Part) -> Result<RealCharacter> {
    if frequencies.len() != moduli.len() {
        return input("one frequency per group factor is required");
    }
    let phase = |x: &[i64]| -> i64 { x.iter().zip(frequencies).zip(moduli).map(|((&xi, &k), &m)| xi * k * (8 / m as i64)).sum() };
    let real = labels.iter().all(|x| phase(x).rem_euclid(4) == 0);
    let values = labels
        .iter()
        .map(|x| {
            let (c, s) = eighth_root_parts(phase(x));
            match (real, part) {
                // real characters take values +-1
                (true, Part::Re) => QSqrt2::int(if phase(x).rem_euclid(8) == 0 { 1 } else { -1 }),
                (true, Part::Im) => QSqrt2::zero(),
                (false, Part::Re) => c,
                (false, Part::Im) => s,
            }
        })
        .collect();
    Ok(RealCharacter {
        frequencies: frequencies.to_vec(),
        part,
        values,
    })
}

fn inner(w: &[BigRational], a: &[QSqrt2], b: &[QSqrt2]) -> QSqrt2 {
    w.iter().zip(a.iter().zip(b)).fold(QSqrt2::zero(), |acc, (wi, (x, y))| acc + (x * y).scale(wi))
}

/// Checks `|f(gx) - f(gy)| <= ||f||_2 sum_i |e_i(x) - e_i(y)|` for every
/// group element and atom pair, where `e_i` is an exact orthonormal real
/// character basis of the invariant subspace spanned by the components of
/// `f`. The action must be regular.
pub fn basis_bound_check(sys: &DynamicalSystem, components: &[CharacterComponent]) -> Result<BasisBoundReport> {
    let f = finite(sys)?;
    let (moduli, labels) = regular_labels(f)?;
    let w = exact_weights(f);
    let size = f.size();
    let rank = moduli.len();
    for i in 0..rank {
        let mut e = vec![0i64; rank];
        e[i] = 1;
        if (0..size).any(|x| w[f.act_atom(&e, x)] != w[x]) {
            return Err(Error::Setup("the measure is not invariant".into()));
        }
    }

    // basis: both parts of every character used, dropping zero functions
    let mut basis: Vec<RealCharacter> = Vec::new();
    for c in components {
        for part in [Part::Re, Part::Im] {
            let e = real_character(&moduli, &labels, &c.frequencies, part)?;
            let neg: Vec<QSqrt2> = e.values.iter().map(|v| -v.clone()).collect();
            if e.values.iter().all(QSqrt2::is_zero) || basis.iter().any(|b| b.values == e.values || b.values == neg) {
                continue;
            }
            basis.push(e);
        }
    }
    // orthonormality, exactly
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let ip = inner(&w, &a.values, &b.values);
            let want = QSqrt2::int((i == j) as i64);
            if ip != want {
                return Err(Error::Setup(format!(
                    "basis is not orthonormal: <e_{i}, e_{j}> = {ip} (the measure must be uniform)"
                )));
            }
        }
    }
    let mut fv = vec![QSqrt2::zero(); size];
    for c in components {
        let e = real_character(&moduli, &labels, &c.frequencies, c.part)?;
        for x in 0..size {
            fv[x] = &fv[x] + &e.values[x].scale(&c.coefficient);
        }
    }
    let sides: Vec<i64> = moduli.iter().map(|&m| m as i64).collect();
    let elements = box_elements(&sides);
    // invariance: e o g must equal its projection onto the span
    for e in &basis {
        for g in &elements {
            let moved: Vec<QSqrt2> = (0..size).map(|x| e.values[f.act_atom(g.coords(), x)].clone()).collect();
            let mut proj = vec![QSqrt2::zero(); size];
            for b in &basis {
                let c = inner(&w, &moved, &b.values);
                for x in 0..size {
                    proj[x] = &proj[x] + &(&c * &b.values[x]);
                }
            }
            if proj != moved {
                return Err(Error::Setup(format!(
                    "span is not invariant under {:?}",
                    g.coords()
                )));
            }
        }
    }
    let norm_sq = inner(&w, &fv, &fv);
    let mut report = BasisBoundReport {
        holds: true,
        basis_size: basis.len(),
        triples: 0,
        min_slack: f64::INFINITY,
        worst: None,
    };
    for g in &elements {
        for x in 0..size {
            for y in 0..size {
                let gx = f.act_atom(g.coords(), x);
                let gy = f.act_atom(g.coords(), y);
                let lhs = (&fv[gx] - &fv[gy]).abs();
                let sum = basis
                    .iter()
                    .fold(QSqrt2::zero(), |acc, e| acc + (&e.values[x] - &e.values[y]).abs());
                // lhs, sum >= 0: compare lhs^2 with ||f||^2 sum^2
                let ok = (&lhs * &lhs).cmp(&(&norm_sq * &(&sum * &sum))) != Ordering::Greater;
                let slack = norm_sq.to_f64().sqrt() * sum.to_f64() - lhs.to_f64();
                report.triples += 1;
                if !ok {
                    report.holds = false;
                }
                if slack < report.min_slack || (!ok && report.worst.is_none()) {
                    report.min_slack = report.min_slack.min(slack);
                    report.worst = Some((g.coords().to_vec(), x, y));
                }
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaSuiteReport {
    /// Instances whose hypotheses hold.
    pub checked: usize,
    /// Instances drawn and discarded because a hypothesis failed.
    pub vacuous: usize,
    pub failures: usize,
    /// Smallest slack over the checked instances.
    #[serde(serialize_with = "ser_opt_ratio")]
    pub min_slack: Option<BigRational>,
    pub seed: u64,
}

fn ser_opt_ratio<S: Serializer>(r: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

/// Draws finite systems with up to 10 atoms, random rational weights and
/// centered rational observables until `count` instances satisfy the
/// hypotheses, and checks each one.
pub fn lemma_suite(seed: u64, count: usize) -> Result<LemmaSuiteReport> {
    use rand::Rng;
    let mut rng = crate::rng::rng(seed, 0x1e44a);
    let mut rep = LemmaSuiteReport {
        checked: 0,
        vacuous: 0,
        failures: 0,
        min_slack: None,
        seed,
    };
    let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    while rep.checked < count {
        let n = rng.gen_range(2..=10usize);
        let raw: Vec<u64> = (0..n).map(|_| rng.gen_range(1..10)).collect();
        let total: u64 = raw.iter().sum();
        let weights = raw.iter().map(|&w| num_rational::Ratio::new(w, total)).collect();
        let sys = DynamicalSystem::Finite(FiniteSystem::identity(n, crate::systems::FiniteMetric::Discrete, Some(weights))?);
        let k = rng.gen_range(2..6u64);
        let scale = rng.gen_range(1..200i64);
        let h: Vec<BigRational> = (0..n).map(|_| r(rng.gen_range(-100..=100), 100 * scale * (k * k) as i64)).collect();
        let h = center_exact(&sys, &h)?;
        let c = h.iter().map(|v| v.abs()).max().expect("nonempty");
        let check = lemma_mean_bound_check(&sys, &h, &c, k)?;
        if check.vacuous {
            rep.vacuous += 1;
            if rep.vacuous > 1000 * (count + 1) {
                return Err(Error::Numerical("random instances keep failing the hypotheses".into()));
            }
            continue;
        }
        rep.checked += 1;
        if !check.holds {
            rep.failures += 1;
        }
        if rep.min_slack.as_ref().map_or(true, |m| check.slack < *m) {
            rep.min_slack = Some(check.slack);
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasisSuiteReport {
    /// Observables checked (each over every `(g, x, y)` triple).
    pub functions: usize,
    pub triples: usize,
    pub failures: usize,
    pub min_slack: f64,
    pub seed: u64,
}

/// `basis_bound_check` on the cyclic shift of `Z/8` for every single real
/// character component and `combinations` random integer combinations.
pub fn basis_suite(seed: u64, combinations: usize) -> Result<BasisSuiteReport> {
    use rand::Rng;
    let sys = DynamicalSystem::Finite(FiniteSystem::cyclic_shift(8)?);
    let mut rng = crate::rng::rng(seed, 0xba515);
    let r = |n: i64| BigRational::from_integer(BigInt::from(n));
    let comp = |freq: i64, part: Part, c: BigRational| CharacterComponent {
        frequencies: vec![freq],
        part,
        coefficient: c,
    };
    let mut fs: Vec<Vec<CharacterComponent>> = Vec::new();
    for freq in 0..8 {
        for part in [Part::Re, Part::Im] {
            // imaginary parts of real characters vanish
            if part == Part::Im && (freq == 0 || freq == 4) {
                continue;
            }
            fs.push(vec![comp(freq, part, r(1))]);
        }
    }
    for _ in 0..combinations {
        let terms = rng.gen_range(1..5);
        fs.push(
            (0..terms)
                .map(|_| {
                    let freq = rng.gen_range(0..8i64);
                    let part = if freq % 4 != 0 && rng.gen_bool(0.5) { Part::Im } else { Part::Re };
                    comp(freq, part, r(rng.gen_range(-20..=20)))
                })
                .collect(),
        );
    }
    let mut rep = BasisSuiteReport {
        functions: 0,
        triples: 0,
        failures: 0,
        min_slack: f64::INFINITY,
        seed,
    };
    for f in &fs {
        let check = basis_bound_check(&sys, f)?;
        rep.functions += 1;
        rep.triples += check.triples;
        if !check.holds {
            rep.failures += 1;
        }
        rep.min_slack = rep.min_slack.min(check.min_slack);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::systems::{SubshiftSystem, TorusSystem};
    use proptest::prelude::*;
    use rand::Rng;

    fn rotation() -> DynamicalSystem {
        DynamicalSystem::Torus(TorusSystem::golden())
    }

    fn bernoulli() -> DynamicalSystem {
        DynamicalSystem::Subshift(SubshiftSystem::bernoulli(GroupSpec::lattice(1), 0.5).unwrap())
    }

    fn indicator() -> Observable {
        Observable::Cylinder {
            at: GroupElement::new(&[0]),
            symbol: 1,
        }
    }

    fn character() -> Observable {
        Observable::Character { frequencies: vec![1] }
    }

    fn constant(v: f64) -> Observable {
        Observable::Constant { value: v }
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn l2_trivial_cases() {
        let sys = rotation();
        let d = l2_distance(&sys, &character(), &character(), 1, 100).unwrap();
        assert_eq!(d.value, 0.0);
        let d = l2_distance(&sys, &constant(1.0), &constant(0.0), 1, 100).unwrap();
        assert_eq!(d.value, 1.0);
        assert_eq!(d.std_error, 0.0);
    }

    #[test]
    fn bernoulli_shifted_indicator_distance() {
        // E|h - h o k|^2 = 2 (1/2) - 2 (1/4) = 1/2
        let sys = bernoulli();
        for k in [1i64, 2, 5] {
            let shifted = indicator().translated(GroupElement::new(&[k]));
            let d = l2_distance(&sys, &indicator(), &shifted, 7, 4000).unwrap();
            assert!((d.value - 0.5f64.sqrt()).abs() <= 3.0 * d.std_error, "{k}: {d:?}");
        }
    }

    #[test]
    fn ball_order_is_prefix() {
        let sys = rotation();
        let a = ordered_ball(&sys, 3, 100).unwrap();
        let b = ordered_ball(&sys, 5, 100).unwrap();
        assert_eq!(a[..], b[..a.len()]);
        assert_eq!(a[0], GroupElement::new(&[0]));
    }

    #[test]
    fn constant_net_is_one() {
        let sys = bernoulli();
        for r in [1, 4, 9] {
            for eps in [0.01, 0.3] {
                assert_eq!(orbit_net_size(&sys, &constant(2.5), r, eps, 3, 50).unwrap(), 1);
            }
        }
    }

    #[test]
    fn rotation_character_net_is_circle_bounded() {
        // the orbit lies on a circle of circumference 2 pi, and a net at
        // threshold t <= eps is t-separated in chord (hence arc) length
        let sys = rotation();
        for eps in [0.2, 0.5, 1.0] {
            let bound = (std::f64::consts::TAU / (eps / 2f64.powf(1.0 / NET_GRID))).ceil() as usize;
            for r in [8, 32, 128] {
                let n = orbit_net_size(&sys, &character(), r, eps, 2, 50).unwrap();
                assert!(n <= bound, "eps {eps} r {r}: {n} > {bound}");
            }
        }
    }

    #[test]
    fn bernoulli_indicator_net_is_whole_ball() {
        let sys = bernoulli();
        for r in [1, 2, 4, 8] {
            assert_eq!(orbit_net_size(&sys, &indicator(), r, 0.5, 5, 2000).unwrap(), 2 * r + 1);
        }
    }

    #[test]
    fn gram_ranks() {
        let g = orbit_gram(&rotation(), &character(), 8, 1, 200).unwrap();
        assert!(g.is_hermitian());
        assert_eq!(gram_effective_rank(&g, 1e-3).unwrap(), 1);
        let g = orbit_gram(&bernoulli(), &constant(1.0), 8, 1, 200).unwrap();
        assert_eq!(gram_effective_rank(&g, 1e-3).unwrap(), 1);
        // gram = J/4 + I/4 up to sampling error
        for r in [2, 4, 8] {
            let g = orbit_gram(&bernoulli(), &indicator(), r, 1, 3000).unwrap();
            assert_eq!(gram_effective_rank(&g, 1e-3).unwrap(), 2 * r + 1);
            assert!(g.diagonal_max_z() <= 3.0 * 2f64.sqrt() + 1.0, "{}", g.diagonal_max_z());
        }
    }

    #[test]
    fn rank_rejects_indefinite() {
        let g = L2OrbitGram {
            elements: vec![GroupElement::new(&[0]), GroupElement::new(&[1])],
            gram: vec![
                vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)],
                vec![Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)],
            ],
            diagonal_std_error: vec![0.0; 2],
            sample_count: 1,
            seed: 0,
        };
        assert!(matches!(gram_effective_rank(&g, 1e-3), Err(Error::Numerical(_))));
    }

    #[test]
    fn lemma_trivial_and_two_valued() {
        let sys = DynamicalSystem::Finite(FiniteSystem::cyclic_shift(4).unwrap());
        let zero = vec![BigRational::zero(); 4];
        let c = r(1, 1);
        let rep = lemma_mean_bound_check(&sys, &zero, &c, 3).unwrap();
        assert!(rep.holds && !rep.vacuous);
        assert_eq!(rep.slack, rep.bound);
        // +-c with int int |h - h'| = c < 1/4
        let h = vec![r(1, 10), r(-1, 10), r(1, 10), r(-1, 10)];
        let rep = lemma_mean_bound_check(&sys, &h, &r(1, 10), 2).unwrap();
        assert!(rep.holds && !rep.vacuous, "{rep:?}");
        assert_eq!(rep.bound, r(21, 10) / r(2, 1) + r(1, 10));
        // a failed hypothesis is a vacuous pass
        let h = vec![r(1, 1), r(-1, 1), r(1, 1), r(-1, 1)];
        let rep = lemma_mean_bound_check(&sys, &h, &r(1, 1), 2).unwrap();
        assert!(rep.holds && rep.vacuous);
    }

    #[test]
    fn lemma_random_instances() {
        let mut rng = crate::rng::rng(11, 0);
        let mut checked = 0;
        while checked < 100 {
            let n = rng.gen_range(2..=10usize);
            let weights: Vec<num_rational::Ratio<u64>> = {
                let raw: Vec<u64> = (0..n).map(|_| rng.gen_range(1..10)).collect();
                let total: u64 = raw.iter().sum();
                raw.iter().map(|&w| num_rational::Ratio::new(w, total)).collect()
            };
            let sys = DynamicalSystem::Finite(FiniteSystem::identity(n, crate::systems::FiniteMetric::Discrete, Some(weights)).unwrap());
            let k = rng.gen_range(2..6u64);
            let scale = rng.gen_range(1..200i64);
            let raw: Vec<BigRational> = (0..n).map(|_| r(rng.gen_range(-100..=100), 100 * scale * (k * k) as i64)).collect();
            let h = center_exact(&sys, &raw).unwrap();
            let c = h.iter().map(|v| v.abs()).max().unwrap();
            let rep = lemma_mean_bound_check(&sys, &h, &c, k).unwrap();
            if rep.vacuous {
                continue;
            }
            assert!(rep.holds, "{rep:?}");
            checked += 1;
        }
    }

    fn comp(freq: i64, part: Part, c: BigRational) -> CharacterComponent {
        CharacterComponent {
            frequencies: vec![freq],
            part,
            coefficient: c,
        }
    }

    #[test]
    fn basis_bound_on_cyclic_eight() {
        let sys = DynamicalSystem::Finite(FiniteSystem::cyclic_shift(8).unwrap());
        // a basis vector itself
        let rep = basis_bound_check(&sys, &[comp(1, Part::Re, r(1, 1))]).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.basis_size, 2);
        assert_eq!(rep.triples, 512);
        // a combination of several characters, including the real ones
        let f = [comp(0, Part::Re, r(1, 3)), comp(1, Part::Im, r(-2, 5)), comp(3, Part::Re, r(7, 4)), comp(4, Part::Re, r(1, 2))];
        let rep = basis_bound_check(&sys, &f).unwrap();
        assert!(rep.holds && rep.triples == 512 && rep.basis_size == 6, "{rep:?}");
        // f = 0
        let rep = basis_bound_check(&sys, &[comp(2, Part::Re, r(0, 1))]).unwrap();
        assert!(rep.holds);
    }

    #[test]
    fn basis_on_product_group() {
        let sys = DynamicalSystem::Finite(FiniteSystem::regular(&[2, 4], crate::systems::FiniteMetric::Discrete).unwrap());
        let f = CharacterComponent {
            frequencies: vec![1, 1],
            part: Part::Im,
            coefficient: r(3, 2),
        };
        let rep = basis_bound_check(&sys, &[f]).unwrap();
        assert!(rep.holds && rep.triples == 8 * 64 && rep.basis_size == 2, "{rep:?}");
    }

    #[test]
    fn basis_rejects_skewed_measure() {
        let w = vec![num_rational::Ratio::new(1u64, 4), num_rational::Ratio::new(3, 4)];
        let f = FiniteSystem::new(GroupSpec::lattice(1), vec![vec![1, 0]], crate::systems::FiniteMetric::Discrete, Some(w)).unwrap();
        let sys = DynamicalSystem::Finite(f);
        assert!(matches!(basis_bound_check(&sys, &[comp(1, Part::Re, r(1, 1))]), Err(Error::Setup(_))));
    }

    #[test]
    fn basis_rejects_non_regular_action() {
        let sys = DynamicalSystem::Finite(FiniteSystem::identity(3, crate::systems::FiniteMetric::Discrete, None).unwrap());
        assert!(basis_bound_check(&sys, &[comp(0, Part::Re, r(1, 1))]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn net_monotone(r1 in 1usize..12, dr in 0usize..12, e1 in 0.05f64..1.5, de in 0.0f64..1.0, seed in 0u64..50) {
            let sys = rotation();
            let h = Observable::Cos { index: 0 };
            let small = orbit_net_size(&sys, &h, r1, e1, seed, 30).unwrap();
            prop_assert!(orbit_net_size(&sys, &h, r1 + dr, e1, seed, 30).unwrap() >= small);
            prop_assert!(orbit_net_size(&sys, &h, r1, e1 + de, seed, 30).unwrap() <= small);
        }

        #[test]
        fn basis_bound_random_combinations(cs in proptest::collection::vec((0i64..8, any::<bool>(), -20i64..20), 1..5)) {
            let sys = DynamicalSystem::Finite(FiniteSystem::cyclic_shift(8).unwrap());
            let f: Vec<CharacterComponent> = cs
                .iter()
                .map(|&(k, re, c)| comp(k, if re { Part::Re } else { Part::Im }, r(c, 7)))
                .collect();
            prop_assert!(basis_bound_check(&sys, &f).unwrap().holds);
        }
    }

    #[test]
    fn suites_pass() {
        let rep = lemma_suite(3, 20).unwrap();
        assert_eq!((rep.checked, rep.failures), (20, 0));
        let rep = basis_suite(3, 5).unwrap();
        assert_eq!(rep.functions, 14 + 5);
        assert_eq!(rep.failures, 0);
        assert_eq!(rep.triples, 512 * 19);
    }
}
