use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_confsub")
}

fn scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn run_report(task: &str, config: &Path, out: &Path, extra: &[&str]) -> (i32, Value) {
    let mut args = vec![task, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = run(&args);
    let report = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    (o.status.code().unwrap(), report)
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check `{name}` in {report}"))
}

#[test]
fn verify_clifford_torus() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "c.toml", "[immersion]\nname = \"clifford_torus\"\n");
    let (code, r) = run_report("verify", &cfg, &dir.path().join("r.json"), &[]);
    assert_eq!(code, 0, "{r}");
    for name in ["gauss_residual", "mean_curvature", "lo_norm2", "frame_orthonormality"] {
        assert_eq!(check(&r, name)["pass"], true, "{name}");
    }
    assert_eq!(check(&r, "lo_norm2")["values"]["expected"], 2.0);
    assert_eq!(r["library"]["name"], "confsub");
    assert_eq!(r["task"], "verify");
}

#[test]
fn renormalized_area_of_the_hyperbolic_plane() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "g.toml", "task = \"gbc\"\n[immersion]\nname = \"totally_geodesic_hyperbolic\"\nk = 2\nn = 3\n");
    let (code, r) = run_report("gbc", &cfg, &dir.path().join("r.json"), &[]);
    assert_eq!(code, 0, "{r}");
    let area = check(&r, "renormalized_area")["values"]["value"].as_f64().unwrap();
    assert!((area + 2.0 * std::f64::consts::PI).abs() < 1e-3, "{area}");
    assert_eq!(r["data"]["gbc"]["renormalized"], true);
}

#[test]
fn malformed_config_is_a_structured_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "bad.toml", "[immersion]\nname = \"equator_sphere\"\nk = \"two\"\nn = 3\n");
    let o = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("immersion.k"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_keys_and_names() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "k.toml", "[immersion]\nname = \"clifford_torus\"\nradus = 2.0\n");
    let o = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("radus"));

    let cfg = scenario(dir.path(), "n.toml", "[immersion]\nname = \"clifford_tourus\"\n");
    let o = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("did you mean `clifford_torus`"), "{err}");
}

#[test]
fn task_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "t.toml", "task = \"gbc\"\n[immersion]\nname = \"clifford_torus\"\n");
    let o = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gate_failures_become_report_entries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "s.toml", "[immersion]\nname = \"round_sphere_euclidean\"\nradius = 0.5\n");
    let (code, r) = run_report("gbc", &cfg, &dir.path().join("r.json"), &["--grid", "8"]);
    assert_eq!(code, 1);
    let c = check(&r, "gbc_identity");
    assert_eq!(c["pass"], false);
    assert!(c["message"].as_str().unwrap().contains("not minimal"));
    assert!((c["residual"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(r["passed"], false);
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "d.toml", "samples = 8\nseed = 5\n[immersion]\nname = \"generalized_clifford\"\np = 1\nq = 2\n");
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timings");
        v
    };
    let (_, a) = run_report("verify", &cfg, &dir.path().join("a.json"), &[]);
    let (_, b) = run_report("verify", &cfg, &dir.path().join("b.json"), &["--threads", "2"]);
    let (mut a, mut b) = (strip(a), strip(b));
    // The echoed output path is the only intended difference.
    a["config"]["output"] = Value::Null;
    b["config"]["output"] = Value::Null;
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn flags_override_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "o.toml", "grid = 4\nseed = 1\n[immersion]\nname = \"equator_sphere\"\nk = 2\nn = 3\n");
    let (code, r) = run_report("gbc", &cfg, &dir.path().join("r.json"), &["--grid", "12", "--seed", "9"]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["config"]["grid"], 12);
    assert_eq!(r["config"]["seed"], 9);
}

#[test]
fn renorm_writes_samples_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("samples.csv");
    let body = format!(
        "csv = {:?}\nladder = [0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125]\n[immersion]\nname = \"hyperbolic_cusp\"\n[expect]\nfinite_part = -1.0\n",
        csv.to_str().unwrap()
    );
    let cfg = scenario(dir.path(), "r.toml", &body);
    let (code, r) = run_report("renorm", &cfg, &dir.path().join("r.json"), &[]);
    assert_eq!(code, 0, "{r}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "eps,value");
    assert_eq!(lines.len(), 8);
    // Cusp area above ρ = ε is 1/ε − 1.
    let row: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
    assert!((row[1] - (1.0 / row[0] - 1.0)).abs() < 1e-8, "{row:?}");
}

#[test]
fn expand_reports_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "e.toml", "[expand]\nk = 2\nn = 3\nboundary = [\"x1^2/2\"]\n");
    let (code, r) = run_report("expand", &cfg, &dir.path().join("r.json"), &[]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(check(&r, "mean_curvature_order")["pass"], true);
    assert_eq!(r["data"]["determined"], serde_json::json!([2]));

    let cfg = scenario(dir.path(), "bad.toml", "[expand]\nk = 2\nn = 3\nboundary = [\"sin(x1)\"]\n");
    let o = run(&["expand", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("expand.boundary[0]"));
}

#[test]
fn custom_objects_from_expressions() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
[target]
name = "custom"
coords = ["x", "y", "z"]
bounds = [[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]]
diagonal = ["1", "1", "1"]

[immersion]
name = "custom"
coords = ["u", "v"]
bounds = [[-0.5, 0.5], [-0.5, 0.5]]
map = ["u", "v", "u*v"]
"#;
    let cfg = scenario(dir.path(), "c.toml", body);
    let (code, r) = run_report("verify", &cfg, &dir.path().join("r.json"), &[]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["subject"]["immersion"], "custom");
    assert!(r["data"]["max_mean_curvature"].as_f64().unwrap() > 0.0);
}

#[test]
fn chart_verification() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "h.toml", "samples = 6\n[target]\nname = \"canonical_ambient\"\nlambda = 1.0\n[target.base]\nname = \"round_sphere\"\nn = 2\n");
    let (code, r) = run_report("verify", &cfg, &dir.path().join("r.json"), &[]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(check(&r, "weyl_trace_free")["pass"], true);
}

#[test]
fn catalog_and_schema() {
    let o = run(&["catalog"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["clifford_torus", "hyperbolic_graph", "canonical_ambient", "L2sq"] {
        assert!(text.contains(name), "{name}");
    }
    let o = run(&["schema"]);
    assert_eq!(o.status.code(), Some(0));
    let schema: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(schema["properties"]["immersion"].is_object());
    assert_eq!(schema["additionalProperties"], false);
}

#[test]
fn rigidity_on_the_product() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "p.toml", "grid = 4\nsamples = 4\n[immersion]\nname = \"generalized_clifford\"\np = 2\nq = 2\n");
    let (code, r) = run_report("rigidity", &cfg, &dir.path().join("r.json"), &[]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(check(&r, "einstein_identity")["pass"], true);
    assert_eq!(r["data"]["rigidity"]["terms"].as_array().unwrap().len(), 2);
}

#[test]
fn shipped_scenarios_pass() {
    let dir = tempfile::tempdir().unwrap();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut ran = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let task = text.lines().find_map(|l| l.strip_prefix("task = ")).unwrap().trim_matches('"').to_string();
        let out = dir.path().join("report.json");
        let o = Command::new(bin())
            .current_dir(dir.path())
            .args([task.as_str(), "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
        ran += 1;
    }
    assert!(ran >= 5);
}
