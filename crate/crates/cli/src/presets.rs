//! Configs shipped with the tool, one per acceptance check plus examples.

pub struct Preset {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! preset {
    ($name:literal) => {
        Preset {
            name: $name,
            text: include_str!(concat!("../presets/", $name, ".json")),
        }
    };
}

pub const PRESETS: &[Preset] = &[
    preset!("folner-exactness"),
    preset!("hamming-identity"),
    preset!("finite-sandwich"),
    preset!("rotation-bounded"),
    preset!("bernoulli-growth"),
    preset!("ap-crosscheck"),
    preset!("metric-robustness"),
    preset!("equicontinuity"),
    preset!("lemma-inequalities"),
    preset!("metric-equivalence-bernoulli"),
    preset!("equicont-finite"),
    preset!("ap-test-rotation"),
    preset!("invalid-epsilon"),
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_except_the_invalid_one() {
        for p in PRESETS {
            let r = crate::config::parse(p.text);
            if p.name == "invalid-epsilon" {
                assert!(r.is_err());
            } else {
                let cfg = r.unwrap_or_else(|e| panic!("{}: {e}", p.name));
                assert_eq!(cfg.name, p.name);
            }
        }
    }

    #[test]
    fn serialized_configs_match_published_schema() {
        let schema: serde_json::Value =
            serde_json::from_str(include_str!("../schema/experiment.schema.json")).unwrap();
        let v = jsonschema::validator_for(&schema).unwrap();
        let mut configs: Vec<crate::config::ExperimentConfig> =
            PRESETS.iter().filter_map(|p| crate::config::parse(p.text).ok()).collect();
        let mut suite = crate::config::parse(find("finite-sandwich").unwrap().text).unwrap();
        if let crate::config::Task::ProfileComplexity(t) = &mut suite.task {
            t.cases = crate::config::expand(&t.cases, t.suite.take());
            t.cases.extend(crate::config::builtin_suite());
        }
        configs.push(suite);
        for cfg in configs {
            let value = serde_json::to_value(&cfg).unwrap();
            let errors: Vec<String> = v
                .iter_errors(&value)
                .map(|e| format!("{e} at {}", e.instance_path()))
                .collect();
            assert!(errors.is_empty(), "{}: {errors:#?}", cfg.name);
        }
    }
}
