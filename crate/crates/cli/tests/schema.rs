use std::path::Path;

fn validator() -> jsonschema::Validator {
    let text = include_str!("../schema/experiment.schema.json");
    let schema: serde_json::Value = serde_json::from_str(text).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn presets() -> Vec<(String, serde_json::Value)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        out.push((name, value));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[test]
fn presets_conform() {
    let v = validator();
    for (name, value) in presets() {
        let errors: Vec<String> = v.iter_errors(&value).map(|e| format!("{} at {}", e, e.instance_path())).collect();
        if name == "invalid-epsilon" {
            assert!(!errors.is_empty(), "negative epsilon accepted");
        } else {
            assert!(errors.is_empty(), "{name}: {errors:#?}");
        }
    }
}

#[test]
fn rejects_unknown_keys_and_missing_seed() {
    let v = validator();
    let bad = serde_json::json!({"name": "x", "task": {"kind": "check_tempered", "n_max": 4}});
    assert!(!v.is_valid(&bad));
    let bad = serde_json::json!({"name": "x", "seed": 1, "task": {"kind": "check_tempered", "nmax": 4}});
    assert!(!v.is_valid(&bad));
    let ok = serde_json::json!({"name": "x", "seed": 1, "task": {"kind": "check_tempered", "n_max": 4}});
    assert!(v.is_valid(&ok));
}
