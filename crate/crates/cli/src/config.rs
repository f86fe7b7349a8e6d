//! Experiment configuration: JSON schema types, loading with path-aware
//! errors, and resolution of descriptors into core objects.

use std::fmt;

use folner_core::complexity::{DiagnosticConfig, DEFAULT_ATOM_BUDGET};
use folner_core::cover::DEFAULT_NODE_BUDGET;
use folner_core::equicont::EquicontConfig;
use folner_core::metrics::{Cell, Observable, Partition, SemimetricSpec};
use folner_core::spectrum::APCrosscheckConfig;
use folner_core::systems::{FiniteMetric, ShiftMeasure, DEFAULT_METRIC_RADIUS};
use folner_core::{
    DynamicalSystem, FiniteSystem, FolnerRule, FolnerSequence, GroupElement, GroupSpec, SubshiftSystem, TorusMetric,
    TorusSystem,
};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// A configuration error located by the JSON path of the offending field.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at {}: {}", self.path, self.message)
    }
}

fn err<T>(path: impl Into<String>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        path: path.into(),
        message: message.into(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Stem of the output files.
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Root of every random stream in the run.
    pub seed: u64,
    pub task: Task,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    CheckTempered(CheckTempered),
    ProfileComplexity(ProfileComplexity),
    ApTest(ApTest),
    Equicontinuity(Equicontinuity),
    VerifyTheorem(VerifyTheorem),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckTempered {
    #[serde(default = "integers")]
    pub group: GroupSpec,
    #[serde(default)]
    pub folner: Option<FolnerRule>,
    pub n_max: usize,
    /// Elements whose defects are reported; standard generators when absent.
    #[serde(default)]
    pub elements: Option<Vec<GroupElement>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileComplexity {
    #[serde(default)]
    pub cases: Vec<Case>,
    #[serde(default)]
    pub suite: Option<Suite>,
    pub n_grid: Vec<usize>,
    pub eps_grid: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "yes")]
    pub exact: bool,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub diagnostic: DiagnosticConfig,
    /// Record wall-clock time per row (breaks byte-identical output).
    #[serde(default)]
    pub timings: bool,
    #[serde(default)]
    pub words: Option<WordsOracle>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApTest {
    pub cases: Vec<Case>,
    #[serde(default)]
    pub config: APCrosscheckConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Equicontinuity {
    pub cases: Vec<Case>,
    #[serde(default)]
    pub config: EquicontConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyTheorem {
    pub theorem: Theorem,
    #[serde(default)]
    pub cases: Vec<Case>,
    #[serde(default)]
    pub identity: Option<IdentitySettings>,
    #[serde(default)]
    pub robustness: Option<RobustnessSettings>,
    #[serde(default)]
    pub ap: APCrosscheckConfig,
    #[serde(default)]
    pub equicont: EquicontConfig,
    #[serde(default)]
    pub lemmas: Option<LemmaSettings>,
}

impl Task {
    pub fn verb(&self) -> &'static str {
        match self {
            Task::CheckTempered(_) => "check-tempered",
            Task::ProfileComplexity(_) => "profile-complexity",
            Task::ApTest(_) => "ap-test",
            Task::Equicontinuity(_) => "equicontinuity",
            Task::VerifyTheorem(_) => "verify-theorem",
        }
    }
}

fn integers() -> GroupSpec {
    GroupSpec::lattice(1)
}

fn yes() -> bool {
    true
}

fn default_samples() -> usize {
    1000
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// bounded complexity for the mean metric, for Hamming distances of a
    /// partition, and for all partitions agree
    #[serde(rename = "T1.1(2-3-4)", alias = "metric-equivalence")]
    MetricEquivalence,
    /// almost periodic observables are those with bounded complexity
    #[serde(rename = "T2.1", alias = "ap-equivalence")]
    ApEquivalence,
    /// the classification does not depend on the continuous metric
    #[serde(rename = "T3-metrics", alias = "metric-robustness")]
    MetricRobustness,
    /// bounded complexity goes with vanishing equicontinuity moduli
    #[serde(rename = "T3-equicont", alias = "equicontinuity")]
    Equicontinuity,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    #[serde(default = "default_nodes")]
    pub node_budget: u64,
    #[serde(default = "default_atoms")]
    pub atom_budget: usize,
}

fn default_nodes() -> u64 {
    DEFAULT_NODE_BUDGET
}

fn default_atoms() -> usize {
    DEFAULT_ATOM_BUDGET
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            node_budget: default_nodes(),
            atom_budget: default_atoms(),
        }
    }
}

/// Exact word-space complexity of Bernoulli names with origin-cylinder
/// Hamming distance.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordsOracle {
    pub p: f64,
    pub epsilon: f64,
    /// Følner set sizes `|F_n| = n` on `Z`.
    pub sizes: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitySettings {
    /// Random pairs per case (all pairs among enough sampled points).
    pub pairs: usize,
    /// Følner index of the averaging set.
    #[serde(default = "default_identity_n")]
    pub n: usize,
}

fn default_identity_n() -> usize {
    16
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessSettings {
    /// Epsilons relative to each semimetric's diameter.
    pub relative_eps: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub samples: usize,
    #[serde(default)]
    pub diagnostic: DiagnosticConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaSettings {
    pub instances: usize,
    /// Random character combinations on top of every single basis function.
    pub combinations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Every built-in system.
    Builtins,
    /// Finite systems with at most 12 atoms.
    FiniteSmall,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case {
    #[serde(default)]
    pub label: Option<String>,
    pub system: SystemSpec,
    #[serde(default)]
    pub folner: Option<FolnerRule>,
    /// Semimetric for profiles and moduli; the base metric when absent.
    #[serde(default)]
    pub semimetric: Option<Semimetric>,
    /// Semimetrics compared by robustness checks.
    #[serde(default)]
    pub semimetrics: Vec<Semimetric>,
    #[serde(default)]
    pub observable: Option<Observable>,
    /// Overrides the `n` grid of robustness checks for this case.
    #[serde(default)]
    pub n_grid: Option<Vec<usize>>,
}

impl Case {
    pub fn of(system: SystemSpec) -> Case {
        Case {
            label: None,
            system,
            folner: None,
            semimetric: None,
            semimetrics: Vec::new(),
            observable: None,
            n_grid: None,
        }
    }

    pub fn label(&self, index: usize) -> String {
        self.label.clone().unwrap_or_else(|| match &self.system {
            SystemSpec::Builtin { name } => name.name().to_string(),
            _ => format!("case{index}"),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    GoldenRotation,
    TorusRotation2,
    Bernoulli,
    BernoulliZ2,
    BernoulliHeisenberg,
    Markov,
    Cyclic8,
    Regular2x4,
}

impl Builtin {
    pub const ALL: [Builtin; 8] = [
        Builtin::GoldenRotation,
        Builtin::TorusRotation2,
        Builtin::Bernoulli,
        Builtin::BernoulliZ2,
        Builtin::BernoulliHeisenberg,
        Builtin::Markov,
        Builtin::Cyclic8,
        Builtin::Regular2x4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::GoldenRotation => "golden-rotation",
            Builtin::TorusRotation2 => "torus-rotation2",
            Builtin::Bernoulli => "bernoulli",
            Builtin::BernoulliZ2 => "bernoulli-z2",
            Builtin::BernoulliHeisenberg => "bernoulli-heisenberg",
            Builtin::Markov => "markov",
            Builtin::Cyclic8 => "cyclic8",
            Builtin::Regular2x4 => "regular2x4",
        }
    }

    pub fn build(self) -> folner_core::Result<DynamicalSystem> {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        Ok(match self {
            Builtin::GoldenRotation => DynamicalSystem::Torus(TorusSystem::golden()),
            Builtin::TorusRotation2 => {
                DynamicalSystem::Torus(TorusSystem::new(&[vec![golden, 2f64.sqrt() - 1.0]], TorusMetric::Max)?)
            }
            Builtin::Bernoulli => DynamicalSystem::Subshift(SubshiftSystem::bernoulli(GroupSpec::lattice(1), 0.5)?),
            Builtin::BernoulliZ2 => DynamicalSystem::Subshift(SubshiftSystem::bernoulli(GroupSpec::lattice(2), 0.5)?),
            Builtin::BernoulliHeisenberg => DynamicalSystem::Subshift(SubshiftSystem::bernoulli(GroupSpec::Heisenberg3, 0.5)?),
            Builtin::Markov => DynamicalSystem::Subshift(SubshiftSystem::new(
                GroupSpec::lattice(1),
                ShiftMeasure::Markov {
                    transition: vec![vec![0.9, 0.1], vec![0.2, 0.8]],
                },
                DEFAULT_METRIC_RADIUS,
            )?),
            Builtin::Cyclic8 => DynamicalSystem::Finite(FiniteSystem::cyclic_shift(8)?),
            Builtin::Regular2x4 => DynamicalSystem::Finite(FiniteSystem::regular(&[2, 4], FiniteMetric::Discrete)?),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Builtin {
        name: Builtin,
    },
    /// Translation of the torus, one rotation vector per generator of `Z^k`.
    Torus {
        rotations: Vec<Vec<f64>>,
        #[serde(default = "max_metric")]
        metric: TorusMetric,
    },
    Bernoulli {
        #[serde(default = "integers")]
        group: GroupSpec,
        p: f64,
    },
    Shift {
        group: GroupSpec,
        measure: ShiftMeasure,
        #[serde(default = "default_radius")]
        metric_radius: usize,
    },
    CyclicShift {
        n: usize,
    },
    Identity {
        n: usize,
        #[serde(default = "discrete")]
        metric: FiniteMetric,
        /// `[numerator, denominator]` per atom; uniform when absent.
        #[serde(default)]
        weights: Option<Vec<[u64; 2]>>,
    },
    Regular {
        moduli: Vec<u64>,
        #[serde(default = "discrete")]
        metric: FiniteMetric,
    },
    Finite {
        group: GroupSpec,
        /// One permutation of the atoms per generator.
        generators: Vec<Vec<usize>>,
        #[serde(default = "discrete")]
        metric: FiniteMetric,
        #[serde(default)]
        weights: Option<Vec<[u64; 2]>>,
    },
}

fn max_metric() -> TorusMetric {
    TorusMetric::Max
}

fn default_radius() -> usize {
    DEFAULT_METRIC_RADIUS
}

fn discrete() -> FiniteMetric {
    FiniteMetric::Discrete
}

fn ratios(w: &Option<Vec<[u64; 2]>>) -> Option<Vec<Ratio<u64>>> {
    w.as_ref().map(|w| w.iter().map(|[a, b]| Ratio::new(*a, *b)).collect())
}

impl SystemSpec {
    pub fn build(&self) -> folner_core::Result<DynamicalSystem> {
        Ok(match self {
            SystemSpec::Builtin { name } => name.build()?,
            SystemSpec::Torus { rotations, metric } => DynamicalSystem::Torus(TorusSystem::new(rotations, *metric)?),
            SystemSpec::Bernoulli { group, p } => DynamicalSystem::Subshift(SubshiftSystem::bernoulli(group.clone(), *p)?),
            SystemSpec::Shift {
                group,
                measure,
                metric_radius,
            } => DynamicalSystem::Subshift(SubshiftSystem::new(group.clone(), measure.clone(), *metric_radius)?),
            SystemSpec::CyclicShift { n } => DynamicalSystem::Finite(FiniteSystem::cyclic_shift(*n)?),
            SystemSpec::Identity { n, metric, weights } => {
                DynamicalSystem::Finite(FiniteSystem::identity(*n, metric.clone(), ratios(weights))?)
            }
            SystemSpec::Regular { moduli, metric } => DynamicalSystem::Finite(FiniteSystem::regular(moduli, metric.clone())?),
            SystemSpec::Finite {
                group,
                generators,
                metric,
                weights,
            } => DynamicalSystem::Finite(FiniteSystem::new(group.clone(), generators.clone(), metric.clone(), ratios(weights))?),
        })
    }
}

/// Semimetric descriptors. The `*_hamming` shorthands pick a standard
/// partition for the system at hand.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Semimetric {
    Base,
    Torus { metric: TorusMetric },
    Observable { observable: Observable },
    PartitionHamming { partition: Partition },
    /// Half circles in the first coordinate, the symbol at the origin, or
    /// the first and second half of the atoms.
    DefaultHamming,
    /// Cylinders of the symbols at `0, 1, ..., width - 1` (shifts on `Z`).
    WindowHamming { width: usize },
}

impl Semimetric {
    pub fn resolve(&self, sys: &DynamicalSystem) -> folner_core::Result<SemimetricSpec> {
        Ok(match self {
            Semimetric::Base => SemimetricSpec::Base,
            Semimetric::Torus { metric } => SemimetricSpec::Torus { metric: *metric },
            Semimetric::Observable { observable } => SemimetricSpec::Observable {
                observable: observable.clone(),
            },
            Semimetric::PartitionHamming { partition } => SemimetricSpec::PartitionHamming {
                partition: partition.clone(),
            },
            Semimetric::DefaultHamming => SemimetricSpec::PartitionHamming {
                partition: default_partition(sys)?,
            },
            Semimetric::WindowHamming { width } => SemimetricSpec::PartitionHamming {
                partition: window_partition(sys, *width)?,
            },
        })
    }
}

pub fn default_partition(sys: &DynamicalSystem) -> folner_core::Result<Partition> {
    match sys {
        DynamicalSystem::Torus(t) => Partition::torus_intervals(&[0.0, 0.5], t.dim()),
        DynamicalSystem::Subshift(_) => Partition::origin_cylinder(sys),
        DynamicalSystem::Finite(f) => {
            let n = f.size();
            if n < 2 {
                return Ok(Partition::atoms(vec![(0..n).collect()]));
            }
            Ok(Partition::atoms(vec![(0..n / 2).collect(), (n / 2..n).collect()]))
        }
    }
}

fn window_partition(sys: &DynamicalSystem, width: usize) -> folner_core::Result<Partition> {
    let DynamicalSystem::Subshift(s) = sys else {
        return Err(folner_core::Error::Input("window partitions need a shift system".into()));
    };
    if s.group().rank() != 1 || !matches!(s.group(), GroupSpec::Lattice { .. }) || width == 0 || width > 12 {
        return Err(folner_core::Error::Input("window partitions need a shift on Z and 1 <= width <= 12".into()));
    }
    let a = s.alphabet() as usize;
    let count = a.pow(width as u32);
    let cells = (0..count)
        .map(|mut w| {
            let pattern = (0..width)
                .map(|i| {
                    let sym = (w % a) as u8;
                    w /= a;
                    (GroupElement::new(&[i as i64]), sym)
                })
                .collect();
            Cell::Cylinder { pattern }
        })
        .collect();
    Ok(Partition { cells })
}

/// A case with its system, Følner sequence and main semimetric built.
pub struct Resolved {
    pub label: String,
    pub system: DynamicalSystem,
    pub seq: FolnerSequence,
    pub spec: SemimetricSpec,
    pub specs: Vec<SemimetricSpec>,
}

pub fn resolve_case(case: &Case, index: usize, path: &str) -> Result<Resolved, ConfigError> {
    let system = case
        .system
        .build()
        .or_else(|e| err(format!("{path}.system"), e.to_string()))?;
    let seq = match &case.folner {
        Some(rule) => FolnerSequence::new(system.group().clone(), rule.clone()),
        None => FolnerSequence::default_for(system.group()),
    }
    .or_else(|e| err(format!("{path}.folner"), e.to_string()))?;
    let spec = case
        .semimetric
        .as_ref()
        .unwrap_or(&Semimetric::Base)
        .resolve(&system)
        .and_then(|s| s.validate(&system).map(|_| s))
        .or_else(|e| err(format!("{path}.semimetric"), e.to_string()))?;
    let mut specs = Vec::new();
    for (i, s) in case.semimetrics.iter().enumerate() {
        let r = s
            .resolve(&system)
            .and_then(|s| s.validate(&system).map(|_| s))
            .or_else(|e| err(format!("{path}.semimetrics[{i}]"), e.to_string()))?;
        specs.push(r);
    }
    if let Some(h) = &case.observable {
        h.validate(&system)
            .or_else(|e| err(format!("{path}.observable"), e.to_string()))?;
    }
    Ok(Resolved {
        label: case.label(index),
        system,
        seq,
        spec,
        specs,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    #[serde(default)]
    description: String,
    seed: u64,
    task: serde_json::Map<String, serde_json::Value>,
}

fn located<T: serde::de::DeserializeOwned>(value: serde_json::Value, prefix: &str) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        ConfigError {
            path: if path.is_empty() || path == "." { prefix.to_string() } else { format!("{prefix}.{path}") },
            message: e.into_inner().to_string(),
        }
    })
}

fn body<T: serde::de::DeserializeOwned>(task: serde_json::Map<String, serde_json::Value>) -> Result<T, ConfigError> {
    located(serde_json::Value::Object(task), "$.task")
}

/// Parses a config, reporting schema errors by JSON path, then checks the
/// value constraints serde cannot express. The task body is decoded after
/// its `kind`, so paths reach inside it.
pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).or_else(|e| err("$", e.to_string()))?;
    let raw: RawConfig = located(value, "$")?;
    let mut task = raw.task;
    let kind = match task.remove("kind") {
        Some(serde_json::Value::String(k)) => k,
        Some(_) => return err("$.task.kind", "must be a string"),
        None => return err("$.task.kind", "missing field `kind`"),
    };
    let task = match kind.as_str() {
        "check_tempered" => Task::CheckTempered(body(task)?),
        "profile_complexity" => Task::ProfileComplexity(body(task)?),
        "ap_test" => Task::ApTest(body(task)?),
        "equicontinuity" => Task::Equicontinuity(body(task)?),
        "verify_theorem" => Task::VerifyTheorem(body(task)?),
        other => {
            return err(
                "$.task.kind",
                format!("unknown kind `{other}`, expected check_tempered, profile_complexity, ap_test, equicontinuity or verify_theorem"),
            )
        }
    };
    let cfg = ExperimentConfig {
        name: raw.name,
        description: raw.description,
        seed: raw.seed,
        task,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn check_eps_grid(path: &str, grid: &[f64]) -> Result<(), ConfigError> {
    if grid.is_empty() {
        return err(path, "must not be empty");
    }
    for (i, &e) in grid.iter().enumerate() {
        if !(e > 0.0 && e.is_finite()) {
            return err(format!("{path}[{i}]"), format!("epsilon must be positive and finite, got {e}"));
        }
    }
    Ok(())
}

fn check_n_grid(path: &str, grid: &[usize]) -> Result<(), ConfigError> {
    if grid.is_empty() {
        return err(path, "must not be empty");
    }
    if let Some(i) = grid.iter().position(|&n| n == 0) {
        return err(format!("{path}[{i}]"), "Følner indices start at 1");
    }
    Ok(())
}

fn positive(path: &str, v: u64) -> Result<(), ConfigError> {
    if v == 0 {
        return err(path, "budget must be positive");
    }
    Ok(())
}

fn check_diagnostic(path: &str, d: &DiagnosticConfig) -> Result<(), ConfigError> {
    if !(d.band >= 1.0 && d.band.is_finite()) {
        return err(format!("{path}.band"), "band must be at least 1");
    }
    if !(d.saturation > 0.0 && d.saturation <= 1.0) {
        return err(format!("{path}.saturation"), "saturation must be in (0, 1]");
    }
    if d.min_points < 2 {
        return err(format!("{path}.min_points"), "need at least two points");
    }
    Ok(())
}

fn check_ap(path: &str, c: &APCrosscheckConfig) -> Result<(), ConfigError> {
    check_eps_grid(&format!("{path}.ap.eps_grid"), &c.ap.eps_grid)?;
    check_eps_grid(&format!("{path}.complexity_eps"), &c.complexity_eps)?;
    check_n_grid(&format!("{path}.n_grid"), &c.n_grid)?;
    positive(&format!("{path}.ap.samples"), c.ap.samples as u64)?;
    positive(&format!("{path}.ap.ball_budget"), c.ap.ball_budget as u64)?;
    positive(&format!("{path}.samples"), c.samples as u64)?;
    check_diagnostic(&format!("{path}.diagnostic"), &c.diagnostic)
}

fn check_equicont(path: &str, c: &EquicontConfig) -> Result<(), ConfigError> {
    check_eps_grid(&format!("{path}.eps_grid"), &c.eps_grid)?;
    check_eps_grid(&format!("{path}.modulus.delta_grid"), &c.modulus.delta_grid)?;
    check_n_grid(&format!("{path}.n_grid"), &c.n_grid)?;
    positive(&format!("{path}.core.samples"), c.core.samples as u64)?;
    positive(&format!("{path}.modulus.n_max"), c.modulus.n_max as u64)?;
    positive(&format!("{path}.modulus.pair_core_limit"), c.modulus.pair_core_limit as u64)?;
    positive(&format!("{path}.samples"), c.samples as u64)?;
    if !(c.core.tau > 0.0 && c.core.tau < 1.0) {
        return err(format!("{path}.core.tau"), "tau must be in (0, 1)");
    }
    check_diagnostic(&format!("{path}.diagnostic"), &c.diagnostic)
}

fn check_cases(path: &str, cases: &[Case]) -> Result<(), ConfigError> {
    for (i, c) in cases.iter().enumerate() {
        let p = format!("{path}[{i}]");
        resolve_case(c, i, &p)?;
        if let Some(g) = &c.n_grid {
            check_n_grid(&format!("{p}.n_grid"), g)?;
        }
    }
    Ok(())
}

pub fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    if cfg.name.is_empty() || !cfg.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return err("$.name", "name must be nonempty and use only [A-Za-z0-9_-]");
    }
    let t = "$.task";
    match &cfg.task {
        Task::CheckTempered(CheckTempered { n_max, group, .. }) => {
            positive(&format!("{t}.n_max"), *n_max as u64)?;
            group.validate().or_else(|e| err(format!("{t}.group"), e.to_string()))?;
        }
        Task::ProfileComplexity(ProfileComplexity {
            cases,
            suite,
            n_grid,
            eps_grid,
            samples,
            budgets,
            diagnostic,
            words,
            ..
        }) => {
            if cases.is_empty() && suite.is_none() && words.is_none() {
                return err(format!("{t}.cases"), "give cases, a suite, or a words oracle");
            }
            check_cases(&format!("{t}.cases"), cases)?;
            check_n_grid(&format!("{t}.n_grid"), n_grid)?;
            check_eps_grid(&format!("{t}.eps_grid"), eps_grid)?;
            positive(&format!("{t}.samples"), *samples as u64)?;
            positive(&format!("{t}.budgets.node_budget"), budgets.node_budget)?;
            positive(&format!("{t}.budgets.atom_budget"), budgets.atom_budget as u64)?;
            check_diagnostic(&format!("{t}.diagnostic"), diagnostic)?;
            if let Some(w) = words {
                if !(w.p > 0.0 && w.p < 1.0) {
                    return err(format!("{t}.words.p"), "p must be in (0, 1)");
                }
                check_eps_grid(&format!("{t}.words.epsilon"), &[w.epsilon])?;
                check_n_grid(&format!("{t}.words.sizes"), &w.sizes)?;
            }
        }
        Task::ApTest(ApTest { cases, config }) => {
            if cases.is_empty() {
                return err(format!("{t}.cases"), "must not be empty");
            }
            check_cases(&format!("{t}.cases"), cases)?;
            for (i, c) in cases.iter().enumerate() {
                if c.observable.is_none() {
                    return err(format!("{t}.cases[{i}].observable"), "an observable is required");
                }
            }
            check_ap(&format!("{t}.config"), config)?;
        }
        Task::Equicontinuity(Equicontinuity { cases, config }) => {
            if cases.is_empty() {
                return err(format!("{t}.cases"), "must not be empty");
            }
            check_cases(&format!("{t}.cases"), cases)?;
            check_equicont(&format!("{t}.config"), config)?;
        }
        Task::VerifyTheorem(VerifyTheorem {
            theorem,
            cases,
            identity,
            robustness,
            ap,
            equicont,
            lemmas,
        }) => {
            check_cases(&format!("{t}.cases"), cases)?;
            match theorem {
                Theorem::MetricEquivalence => {
                    if identity.is_none() && robustness.is_none() {
                        return err(format!("{t}.identity"), "give identity or robustness settings");
                    }
                }
                Theorem::ApEquivalence => {
                    check_ap(&format!("{t}.ap"), ap)?;
                    for (i, c) in cases.iter().enumerate() {
                        if c.observable.is_none() {
                            return err(format!("{t}.cases[{i}].observable"), "an observable is required");
                        }
                    }
                    if cases.is_empty() && lemmas.is_none() {
                        return err(format!("{t}.cases"), "give cases or lemma settings");
                    }
                }
                Theorem::MetricRobustness => {
                    if robustness.is_none() {
                        return err(format!("{t}.robustness"), "robustness settings are required");
                    }
                    for (i, c) in cases.iter().enumerate() {
                        if c.semimetrics.len() < 2 {
                            return err(format!("{t}.cases[{i}].semimetrics"), "need at least two semimetrics");
                        }
                    }
                }
                Theorem::Equicontinuity => check_equicont(&format!("{t}.equicont"), equicont)?,
            }
            if !matches!(theorem, Theorem::MetricEquivalence | Theorem::MetricRobustness) && robustness.is_some() {
                return err(format!("{t}.robustness"), "only used by metric theorems");
            }
            if let Some(r) = robustness {
                check_eps_grid(&format!("{t}.robustness.relative_eps"), &r.relative_eps)?;
                check_n_grid(&format!("{t}.robustness.n_grid"), &r.n_grid)?;
                positive(&format!("{t}.robustness.samples"), r.samples as u64)?;
                check_diagnostic(&format!("{t}.robustness.diagnostic"), &r.diagnostic)?;
            }
            if let Some(i) = identity {
                positive(&format!("{t}.identity.pairs"), i.pairs as u64)?;
                positive(&format!("{t}.identity.n"), i.n as u64)?;
            }
            if let Some(l) = lemmas {
                positive(&format!("{t}.lemmas.instances"), l.instances as u64)?;
            }
            if cases.is_empty() && lemmas.is_none() && !matches!(theorem, Theorem::MetricEquivalence) {
                return err(format!("{t}.cases"), "must not be empty");
            }
        }
    }
    Ok(())
}

/// Finite systems with at most 12 atoms: cyclic shifts, trivial actions
/// with uniform and skewed weights, and regular actions of small groups.
pub fn finite_small_suite() -> Vec<Case> {
    let mut out = Vec::new();
    for n in 2..=12 {
        out.push(Case::of(SystemSpec::CyclicShift { n }));
    }
    for n in [2, 3, 5, 8, 12] {
        out.push(Case::of(SystemSpec::Identity {
            n,
            metric: FiniteMetric::Cyclic,
            weights: None,
        }));
        let raw: Vec<u64> = (1..=n as u64).collect();
        let total: u64 = raw.iter().sum();
        out.push(Case::of(SystemSpec::Identity {
            n,
            metric: FiniteMetric::Discrete,
            weights: Some(raw.iter().map(|&w| [w, total]).collect()),
        }));
    }
    for moduli in [vec![2, 2], vec![2, 3], vec![2, 4], vec![3, 3], vec![2, 6], vec![3, 4], vec![2, 2, 3]] {
        out.push(Case::of(SystemSpec::Regular {
            moduli: moduli.clone(),
            metric: FiniteMetric::Discrete,
        }));
        out.push(Case::of(SystemSpec::Regular {
            moduli,
            metric: FiniteMetric::Cyclic,
        }));
    }
    // a rotation by two steps with a hand-written metric table
    let n = 6;
    out.push(Case::of(SystemSpec::Finite {
        group: GroupSpec::lattice(1),
        generators: vec![(0..n).map(|i| (i + 2) % n).collect()],
        metric: FiniteMetric::Matrix {
            entries: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 0.25 + 0.05 * (i + j) as f64 }).collect())
                .collect(),
        },
        weights: None,
    }));
    for (i, c) in out.iter_mut().enumerate() {
        c.label = Some(format!("finite{i:02}"));
        c.folner = Some(FolnerRule::Boxes {
            side: folner_core::SideFn::Identity,
        });
    }
    let hamming: Vec<Case> = out
        .iter()
        .map(|c| {
            let mut h = c.clone();
            h.label = Some(format!("{}-hamming", c.label.as_deref().unwrap_or("finite")));
            h.semimetric = Some(Semimetric::DefaultHamming);
            h
        })
        .collect();
    out.extend(hamming);
    out
}

pub fn builtin_suite() -> Vec<Case> {
    Builtin::ALL
        .iter()
        .map(|&name| Case::of(SystemSpec::Builtin { name }))
        .collect()
}

pub fn expand(cases: &[Case], suite: Option<Suite>) -> Vec<Case> {
    let mut out = cases.to_vec();
    match suite {
        Some(Suite::Builtins) => out.extend(builtin_suite()),
        Some(Suite::FiniteSmall) => out.extend(finite_small_suite()),
        None => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_errors_carry_paths() {
        let e = parse(r#"{"name": "x", "seed": 1, "task": {"kind": "profile_complexity", "n_grid": [1], "eps_grid": [-0.1], "cases": [{"system": {"kind": "builtin", "name": "bernoulli"}}]}}"#).unwrap_err();
        assert_eq!(e.path, "$.task.eps_grid[0]");
        let e = parse(r#"{"name": "x", "task": {"kind": "check_tempered", "n_max": 4}}"#).unwrap_err();
        assert!(e.message.contains("seed"), "{e}");
        let e = parse(r#"{"name": "x", "seed": 1, "task": {"kind": "ap_test", "cases": [{"system": {"kind": "builtin", "name": "nowhere"}}]}}"#).unwrap_err();
        assert!(e.path.starts_with("$.task.cases[0].system"), "{e}");
        let e = parse(r#"{"name": "x", "seed": 1, "task": {"kind": "check_tempered", "n_max": 0}}"#).unwrap_err();
        assert_eq!(e.path, "$.task.n_max");
    }

    #[test]
    fn builtins_build() {
        for b in Builtin::ALL {
            let sys = b.build().unwrap();
            default_partition(&sys).unwrap();
        }
    }

    #[test]
    fn finite_suite_is_small() {
        let suite = finite_small_suite();
        assert!(suite.len() > 40);
        for (i, c) in suite.iter().enumerate() {
            let r = resolve_case(c, i, "$").unwrap();
            assert!(r.system.as_finite().unwrap().size() <= 12);
        }
    }

    #[test]
    fn window_partition_cells() {
        let sys = Builtin::Bernoulli.build().unwrap();
        let p = window_partition(&sys, 2).unwrap();
        assert_eq!(p.len(), 4);
        for x in sys.sample(1, 50).unwrap() {
            p.label(&sys, &x).unwrap();
        }
    }
}
