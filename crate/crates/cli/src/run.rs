//! Pipelines behind each verb. Every pipeline returns its tables and JSON
//! summary in memory; nothing here depends on timing or scheduling.

use folner_core::complexity::{
    boundedness_diagnostic, complexity_profile, complexity_words_exact, metric_robustness_check, ls_slope,
    ComplexityProfile, ProfileConfig, Verdict,
};
use folner_core::equicont::{equicontinuity_crosscheck, EquicontConfig};
use folner_core::folner::{folner_defect, temperedness_profile};
use folner_core::metrics::{hamming_identity_check, SemimetricSpec};
use folner_core::spectrum::{ap_test, ap_vs_complexity_crosscheck, basis_suite, lemma_suite, APCrosscheckConfig};
use folner_core::{FolnerRule, FolnerSequence, GroupElement, GroupSpec};
use serde_json::{json, Value};

use crate::config::{
    default_partition, expand, resolve_case, Case, ConfigError, ExperimentConfig, ProfileComplexity, RobustnessSettings,
    Semimetric, Task, Theorem, VerifyTheorem,
};
use crate::plot;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(folner_core::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => e.fmt(f),
            RunError::Core(e) => e.fmt(f),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<folner_core::Error> for RunError {
    fn from(e: folner_core::Error) -> Self {
        RunError::Core(e)
    }
}

type Result<T> = std::result::Result<T, RunError>;

/// A CSV table: file suffix, column names, rows.
pub struct Table {
    pub suffix: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

pub struct Artifacts {
    pub tables: Vec<Table>,
    pub summary: Value,
    pub svg: Option<String>,
    pub falsification: bool,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn element(g: &GroupElement) -> String {
    g.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Bounded => "bounded",
        Verdict::Growing => "growing",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn spec_kind(s: &SemimetricSpec) -> &'static str {
    match s {
        SemimetricSpec::Base => "base",
        SemimetricSpec::Torus { .. } => "torus",
        SemimetricSpec::Observable { .. } => "observable",
        SemimetricSpec::PartitionHamming { .. } => "partition_hamming",
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Artifacts> {
    match &cfg.task {
        Task::CheckTempered(t) => check_tempered(&t.group, t.folner.as_ref(), t.n_max, t.elements.as_deref()),
        Task::ProfileComplexity(t) => profile(cfg.seed, t),
        Task::ApTest(t) => ap(cfg.seed, &t.cases, &t.config),
        Task::Equicontinuity(t) => equicont(cfg.seed, &t.cases, &t.config, "$.task.cases"),
        Task::VerifyTheorem(t) => verify(cfg.seed, t),
    }
}

fn check_tempered(group: &GroupSpec, folner: Option<&FolnerRule>, n_max: usize, elements: Option<&[GroupElement]>) -> Result<Artifacts> {
    let seq = match folner {
        Some(r) => FolnerSequence::new(group.clone(), r.clone()),
        None => FolnerSequence::default_for(group),
    }
    .map_err(|e| ConfigError {
        path: "$.task.folner".into(),
        message: e.to_string(),
    })?;
    let elements = elements.map(<[_]>::to_vec).unwrap_or_else(|| group.standard_generators());
    let tempered = temperedness_profile(&seq, n_max)?;
    let mut rows = Vec::new();
    let mut defects = Vec::new();
    for n in 1..=n_max {
        let entry = tempered.entries.iter().find(|e| e.n == n);
        for g in &elements {
            let d = folner_defect(&seq, n, g)?;
            defects.push(json!({"n": n, "element": g, "defect": d.ratio().to_string()}));
            rows.push(vec![
                n.to_string(),
                d.size.to_string(),
                element(g),
                d.symmetric_difference.to_string(),
                d.ratio().to_string(),
                opt(entry.map(|e| e.union_size)),
                opt(entry.map(|e| e.ratio())),
            ]);
        }
    }
    let max = tempered.max_ratio();
    let summary = json!({
        "n_max": n_max,
        "defects": defects,
        "tempered": tempered.entries.iter().map(|e| json!({
            "n": e.n, "union_size": e.union_size, "folner_size": e.folner_size, "ratio": e.ratio().to_string()
        })).collect::<Vec<_>>(),
        "max_tempered_ratio": max.map(|r| r.to_string()),
    });
    Ok(Artifacts {
        tables: vec![Table {
            suffix: "",
            columns: &["n", "folner_size", "element", "symmetric_difference", "defect", "union_size", "tempered_ratio"],
            rows,
        }],
        summary,
        svg: None,
        falsification: false,
    })
}

fn sandwich_violations(p: &ComplexityProfile) -> usize {
    p.rows
        .iter()
        .filter(|r| r.lower > r.upper || r.exact.is_some_and(|e| r.lower > e || e > r.upper))
        .count()
}

fn profile(seed: u64, task: &ProfileComplexity) -> Result<Artifacts> {
    let ProfileComplexity {
        cases,
        suite,
        n_grid,
        eps_grid,
        samples,
        exact,
        budgets,
        diagnostic,
        timings,
        words,
    } = task;
    let cases = expand(cases, *suite);
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut curves = Vec::new();
    let mut violations = 0;
    for (i, case) in cases.iter().enumerate() {
        let r = resolve_case(case, i, &format!("$.task.cases[{i}]"))?;
        let pcfg = ProfileConfig {
            n_grid: n_grid.clone(),
            eps_grid: eps_grid.clone(),
            samples: *samples,
            seed,
            exact: *exact,
            node_budget: budgets.node_budget,
            atom_budget: budgets.atom_budget,
            timings: *timings,
        };
        let prof = complexity_profile(&r.system, &r.spec, &r.seq, &pcfg)?;
        let report = boundedness_diagnostic(&prof, diagnostic);
        let v = sandwich_violations(&prof);
        violations += v;
        for row in &prof.rows {
            rows.push(vec![
                r.label.clone(),
                row.n.to_string(),
                row.folner_size.to_string(),
                row.epsilon.to_string(),
                row.lower.to_string(),
                row.upper.to_string(),
                opt(row.exact),
                opt(row.samples),
                row.seed.to_string(),
                opt(row.runtime_ms),
            ]);
        }
        for e in prof.epsilons() {
            curves.push(plot::Curve {
                label: format!("{} eps={}", r.label, e),
                points: prof.rows_for(e).iter().map(|row| (row.n as f64, row.upper as f64)).collect(),
            });
        }
        summaries.push(json!({
            "label": r.label,
            "semimetric": r.spec,
            "verdict": verdict_name(report.verdict),
            "diagnostic": report,
            "sandwich_violations": v,
            "rows": prof.rows,
        }));
    }
    let mut tables = vec![Table {
        suffix: "",
        columns: &["case", "n", "folner_size", "epsilon", "lower", "upper", "exact", "samples", "seed", "runtime_ms"],
        rows,
    }];
    let mut words_summary = Value::Null;
    if let Some(w) = words {
        let z = FolnerSequence::new(GroupSpec::lattice(1), FolnerRule::Boxes { side: Default::default() })?;
        let mut values = Vec::new();
        let mut wrows = Vec::new();
        for &n in &w.sizes {
            let c = complexity_words_exact(w.p, &z, n, w.epsilon)?;
            wrows.push(vec![n.to_string(), w.epsilon.to_string(), w.p.to_string(), c.to_string()]);
            values.push(c);
        }
        let strictly = values.windows(2).all(|p| p[0] < p[1]);
        let k = values.len().min(3);
        let xs: Vec<f64> = w.sizes[w.sizes.len() - k..].iter().map(|&n| n as f64).collect();
        let ys: Vec<f64> = values[values.len() - k..].iter().map(|&c| (c as f64).log2()).collect();
        words_summary = json!({
            "p": w.p,
            "epsilon": w.epsilon,
            "sizes": w.sizes,
            "values": values,
            "strictly_increasing": strictly,
            "log2_slope_last3": ls_slope(&xs, &ys),
        });
        tables.push(Table {
            suffix: ".words",
            columns: &["size", "epsilon", "p", "exact"],
            rows: wrows,
        });
    }
    let verdicts: Vec<&str> = summaries.iter().filter_map(|s| s["verdict"].as_str()).collect();
    let verdict = match verdicts.first() {
        Some(v) if verdicts.iter().all(|w| w == v) => Value::from(*v),
        Some(_) => Value::from("mixed"),
        None => Value::Null,
    };
    let svg = (!curves.is_empty() && curves.len() <= 16).then(|| plot::line_plot(&curves, "n", "upper estimate of C"));
    Ok(Artifacts {
        tables,
        summary: json!({
            "verdict": verdict,
            "sandwich_violations": violations,
            "cases": summaries,
            "words": words_summary,
        }),
        svg,
        falsification: false,
    })
}

fn ap(seed: u64, cases: &[Case], config: &APCrosscheckConfig) -> Result<Artifacts> {
    let mut c = config.ap.clone();
    c.seed = seed;
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let r = resolve_case(case, i, &format!("$.task.cases[{i}]"))?;
        let h = case.observable.as_ref().expect("validated");
        let reports = ap_test(&r.system, h, &c)?;
        for rep in &reports {
            for k in 0..rep.radii.len() {
                rows.push(vec![
                    r.label.clone(),
                    rep.epsilon.to_string(),
                    rep.radii[k].to_string(),
                    rep.ball_sizes[k].to_string(),
                    rep.net_sizes[k].to_string(),
                ]);
            }
        }
        out.push(json!({"label": r.label, "observable": h, "reports": reports}));
    }
    Ok(Artifacts {
        tables: vec![Table {
            suffix: "",
            columns: &["case", "epsilon", "radius", "ball_size", "net_size"],
            rows,
        }],
        summary: json!({"cases": out}),
        svg: None,
        falsification: false,
    })
}

fn seeded_equicont(seed: u64, cfg: &EquicontConfig) -> EquicontConfig {
    let mut c = cfg.clone();
    c.seed = seed;
    c.core.seed = seed;
    c.modulus.seed = seed;
    c
}

fn equicont(seed: u64, cases: &[Case], config: &EquicontConfig, path: &str) -> Result<Artifacts> {
    let c = seeded_equicont(seed, config);
    let mut rows = Vec::new();
    let mut out = Vec::new();
    let mut falsification = false;
    let mut agree = true;
    let mut artifact = false;
    for (i, case) in cases.iter().enumerate() {
        let r = resolve_case(case, i, &format!("{path}[{i}]"))?;
        let x = equicontinuity_crosscheck(&r.system, &r.spec, &r.seq, &c)?;
        for (mode, rep) in [("limsup_proxy", &x.limsup), ("all_n", &x.all_n)] {
            for k in 0..rep.delta_grid.len() {
                rows.push(vec![
                    r.label.clone(),
                    mode.to_string(),
                    rep.delta_grid[k].to_string(),
                    opt(rep.modulus[k]),
                    opt(rep.base_modulus[k]),
                    rep.pairs_used[k].to_string(),
                ]);
            }
        }
        falsification |= x.falsification_candidate;
        agree &= x.agree;
        artifact |= x.budget_artifact;
        out.push(json!({
            "label": r.label,
            "limsup_max_ulp_gap": x.limsup.max_ulp_gap(),
            "all_n_max_ulp_gap": x.all_n.max_ulp_gap(),
            "crosscheck": x,
        }));
    }
    Ok(Artifacts {
        tables: vec![Table {
            suffix: "",
            columns: &["case", "mode", "delta", "modulus", "base_modulus", "pairs_used"],
            rows,
        }],
        summary: json!({
            "agree": agree,
            "falsification_candidate": falsification,
            "budget_artifact": artifact,
            "cases": out,
        }),
        svg: None,
        falsification,
    })
}

fn robustness_rows(
    label: &str,
    rep: &folner_core::complexity::RobustnessReport,
    rows: &mut Vec<Vec<String>>,
) {
    for (i, e) in rep.entries.iter().enumerate() {
        for f in &e.report.fits {
            rows.push(vec![
                label.to_string(),
                i.to_string(),
                spec_kind(&e.spec).to_string(),
                f.epsilon.to_string(),
                f.points.to_string(),
                f.ratio.to_string(),
                f.slope.to_string(),
                f.saturated.to_string(),
                verdict_name(f.verdict).to_string(),
            ]);
        }
    }
}

const ROBUSTNESS_COLUMNS: &[&str] = &["case", "spec_index", "spec_kind", "epsilon", "points", "ratio", "slope", "saturated", "verdict"];

fn robustness(
    seed: u64,
    cases: &[Case],
    settings: &RobustnessSettings,
    default_specs: &[Semimetric],
    rows: &mut Vec<Vec<String>>,
) -> Result<(Vec<Value>, bool)> {
    let mut out = Vec::new();
    let mut agree = true;
    for (i, case) in cases.iter().enumerate() {
        let r = resolve_case(case, i, &format!("$.task.cases[{i}]"))?;
        let specs = if r.specs.is_empty() {
            default_specs
                .iter()
                .map(|s| s.resolve(&r.system))
                .collect::<folner_core::Result<Vec<_>>>()?
        } else {
            r.specs.clone()
        };
        let n_grid = case.n_grid.as_ref().unwrap_or(&settings.n_grid);
        let rep = metric_robustness_check(
            &r.system,
            &r.seq,
            &settings.relative_eps,
            n_grid,
            settings.samples,
            seed,
            &specs,
            &settings.diagnostic,
        )?;
        robustness_rows(&r.label, &rep, rows);
        agree &= rep.agree;
        let verdicts: Vec<&str> = rep.entries.iter().map(|e| verdict_name(e.report.verdict)).collect();
        out.push(json!({
            "label": r.label,
            "agree": rep.agree,
            "verdict": verdict_name(rep.verdict),
            "verdicts": verdicts,
            "report": rep,
        }));
    }
    Ok((out, agree))
}

fn verify(seed: u64, task: &VerifyTheorem) -> Result<Artifacts> {
    let VerifyTheorem {
        theorem,
        cases,
        identity,
        robustness: rob,
        ap,
        equicont: eq,
        lemmas,
    } = task;
    let mut tables = Vec::new();
    let mut summary = serde_json::Map::new();
    let mut agree = true;
    let mut falsification = false;
    let mut artifact = false;
    match theorem {
        Theorem::MetricEquivalence => {
            if let Some(id) = identity {
                let mut rows = Vec::new();
                let mut out = Vec::new();
                // all pairs among m points, diagonal included
                let mut m = 2;
                while m * (m - 1) / 2 < id.pairs {
                    m += 1;
                }
                for (i, case) in cases.iter().enumerate() {
                    let r = resolve_case(case, i, &format!("$.task.cases[{i}]"))?;
                    let partition = match &r.spec {
                        SemimetricSpec::PartitionHamming { partition } => partition.clone(),
                        _ => default_partition(&r.system)?,
                    };
                    let set = r.seq.set(id.n)?;
                    let points = r.system.sample(seed, m)?;
                    let rep = hamming_identity_check(&r.system, &partition, &set, &points)?;
                    agree &= rep.mismatches == 0;
                    falsification |= rep.mismatches > 0;
                    rows.push(vec![
                        r.label.clone(),
                        set.len().to_string(),
                        rep.pairs.to_string(),
                        rep.mismatches.to_string(),
                        rep.max_difference.to_string(),
                    ]);
                    out.push(json!({"label": r.label, "folner_size": set.len(), "report": rep}));
                }
                tables.push(Table {
                    suffix: ".identity",
                    columns: &["case", "folner_size", "pairs", "mismatches", "max_difference"],
                    rows,
                });
                summary.insert("identity".into(), Value::from(out));
            }
            if let Some(settings) = rob {
                let mut rows = Vec::new();
                let (out, ok) = robustness(seed, cases, settings, &[Semimetric::Base, Semimetric::DefaultHamming], &mut rows)?;
                agree &= ok;
                falsification |= !ok;
                tables.push(Table {
                    suffix: ".robustness",
                    columns: ROBUSTNESS_COLUMNS,
                    rows,
                });
                summary.insert("robustness".into(), Value::from(out));
            }
        }
        Theorem::MetricRobustness => {
            let settings = rob.as_ref().expect("validated");
            let mut rows = Vec::new();
            let (out, ok) = robustness(seed, cases, settings, &[], &mut rows)?;
            agree &= ok;
            falsification |= !ok;
            tables.push(Table {
                suffix: "",
                columns: ROBUSTNESS_COLUMNS,
                rows,
            });
            summary.insert("robustness".into(), Value::from(out));
        }
        Theorem::ApEquivalence => {
            let mut c = ap.clone();
            c.seed = seed;
            c.ap.seed = seed;
            let mut rows = Vec::new();
            let mut out = Vec::new();
            for (i, case) in cases.iter().enumerate() {
                let r = resolve_case(case, i, &format!("$.task.cases[{i}]"))?;
                let h = case.observable.as_ref().expect("validated");
                let x = ap_vs_complexity_crosscheck(&r.system, h, &r.seq, &c)?;
                for rep in &x.ap {
                    for k in 0..rep.radii.len() {
                        rows.push(vec![
                            r.label.clone(),
                            rep.epsilon.to_string(),
                            rep.radii[k].to_string(),
                            rep.net_sizes[k].to_string(),
                        ]);
                    }
                }
                agree &= x.agree;
                falsification |= x.falsification_candidate;
                artifact |= x.budget_artifact;
                out.push(json!({
                    "label": r.label,
                    "ap_verdict": x.ap_verdict,
                    "complexity_verdict": verdict_name(x.complexity.verdict),
                    "crosscheck": x,
                }));
            }
            if !cases.is_empty() {
                tables.push(Table {
                    suffix: "",
                    columns: &["case", "epsilon", "radius", "net_size"],
                    rows,
                });
                summary.insert("crosschecks".into(), Value::from(out));
            }
            if let Some(l) = lemmas {
                let lem = lemma_suite(seed, l.instances)?;
                let basis = basis_suite(seed, l.combinations)?;
                let ok = lem.failures == 0 && basis.failures == 0;
                agree &= ok;
                falsification |= !ok;
                tables.push(Table {
                    suffix: ".lemmas",
                    columns: &["check", "instances", "failures", "min_slack"],
                    rows: vec![
                        vec![
                            "mean_bound".into(),
                            lem.checked.to_string(),
                            lem.failures.to_string(),
                            opt(lem.min_slack.as_ref()),
                        ],
                        vec![
                            "basis_bound".into(),
                            basis.functions.to_string(),
                            basis.failures.to_string(),
                            basis.min_slack.to_string(),
                        ],
                    ],
                });
                summary.insert("mean_bound".into(), serde_json::to_value(&lem).expect("serializable"));
                summary.insert("basis_bound".into(), serde_json::to_value(&basis).expect("serializable"));
            }
        }
        Theorem::Equicontinuity => {
            let a = equicont(seed, cases, eq, "$.task.cases")?;
            agree &= a.summary["agree"].as_bool().unwrap_or(false);
            falsification |= a.falsification;
            artifact |= a.summary["budget_artifact"].as_bool().unwrap_or(false);
            tables = a.tables;
            summary.insert("cases".into(), a.summary["cases"].clone());
        }
    }
    summary.insert("theorem".into(), serde_json::to_value(theorem).expect("serializable"));
    summary.insert("agree".into(), Value::from(agree));
    summary.insert("falsification_candidate".into(), Value::from(falsification));
    summary.insert("budget_artifact".into(), Value::from(artifact));
    Ok(Artifacts {
        tables,
        summary: Value::Object(summary),
        svg: None,
        falsification,
    })
}
