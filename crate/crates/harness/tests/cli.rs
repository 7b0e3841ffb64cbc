use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn zerofid(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zerofid")).args(args).current_dir(cwd).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const RB: &str = r#"
kind = "rb"
n_qubits = 2
master_seed = 3
m_grid = [1, 2, 4, 8, 12]
sequences = 4
shots = 256

[noise]
depolarizing_1q = 0.002
depolarizing_2q = 0.02
readout = "weak"
prep_sigma_degrees = 2.0
"#;

const FOLD: &str = r#"
kind = "folding"
n_qubits = 3
master_seed = 5
m_grid = [0, 1, 2, 3]
runs = 2
shots = 128
target = "cz_layer"

[noise]
depolarizing_2q = 0.01
readout = [[0.99, 0.01], [0.02, 0.98]]
"#;

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn outputs_are_identical_across_worker_counts() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "rb.toml", RB);
    write(d, "fold.toml", FOLD);
    for cfg in ["rb.toml", "fold.toml"] {
        let mut outputs = Vec::new();
        for workers in ["1", "3", "8"] {
            let out = format!("out-{cfg}-{workers}");
            let o = zerofid(&["run", cfg, "--workers", workers, "--output-dir", &out], d);
            assert!(o.status.success(), "{}", stderr(&o));
            outputs.push((
                fs::read(d.join(&out).join("points.csv")).unwrap(),
                fs::read(d.join(&out).join("result.json")).unwrap(),
            ));
        }
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{cfg} differs across worker counts");
    }
    let csv = fs::read_to_string(d.join("out-rb.toml-1/points.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("m,mean,stderr"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    // 12 significant digits in scientific notation
    assert!(first[1].contains('e') && first[1].split('e').next().unwrap().len() == 13, "{first:?}");
    assert!(d.join("out-rb.toml-1/timing.json").exists());
}

#[test]
fn echoed_config_reruns_identically() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "circ.txt", "# two-qubit target\nqubits 2\nH 0\nCNOT 0 1\n");
    write(
        d,
        "irb.toml",
        "kind = \"irb\"\nn_qubits = 2\nmaster_seed = 1\nm_grid = [1, 2, 4, 6]\nsequences = 3\nexact = true\ntarget = \"circ.txt\"\noutput_dir = \"first\"\n[noise]\ndepolarizing_2q = 0.02\n",
    );
    let o = zerofid(&["run", "irb.toml"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(d.join("first/points_reference.csv").exists());
    let o = zerofid(&["run", "first/result.json", "--output-dir", "second"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["result.json", "points.csv", "points_reference.csv"] {
        assert_eq!(fs::read(d.join("first").join(f)).unwrap(), fs::read(d.join("second").join(f)).unwrap(), "{f}");
    }
    let result: serde_json::Value = serde_json::from_slice(&fs::read(d.join("first/result.json")).unwrap()).unwrap();
    assert!(result["config"]["target_text"].as_str().unwrap().contains("CNOT 0 1"));
    assert!(result["gate_fidelity"].as_f64().is_some());
}

#[test]
fn bad_configs_exit_with_field_diagnostics() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cases = [
        ("kind = \"rb\"\nn_qubits = 2\nmaster_seed = 1\nsequences = 2\nexact = true\n", "m_grid"),
        ("kind = \"rb\"\nn_qubits = 2\nmaster_seed = 1\nm_grid = [1]\nsequences = 2\n", "shots"),
        ("kind = \"rb\"\nn_qubits = 2\nm_grid = [1]\nsequences = 2\nexact = true\n", "master_seed"),
        ("kind = \"folding\"\nn_qubits = 3\nmaster_seed = 1\nm_grid = [0]\nruns = 1\nexact = true\ntarget = \"cz_layer\"\n[noise]\nreadout = \"medium\"\n", "noise.readout"),
        ("kind = \"irb\"\nn_qubits = 1\nmaster_seed = 1\nm_grid = [1]\nsequences = 1\nexact = true\ntarget_text = \"U3 0 0.1 0.2 0.3\"\n", "Clifford"),
        ("kind = \"rb\"\nn_qubits = 4\nmaster_seed = 1\nm_grid = [1]\nsequences = 1\nexact = true\n", "n_qubits"),
        ("kind = \"rb\"\nn_qubits = 1\nmaster_seed = 1\nm_grid = [1]\nsequences = 1\nexact = true\ncolour = 3\n", "line 7"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let name = format!("bad{i}.toml");
        write(d, &name, text);
        let o = zerofid(&["run", &name], d);
        assert_eq!(o.status.code(), Some(2), "case {i}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "case {i}: {}", stderr(&o));
    }
    let o = zerofid(&["run", "missing.toml"], d);
    assert_eq!(o.status.code(), Some(2));
    let o = zerofid(&["frobnicate"], d);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "rb.toml", RB);
    write(d, "blocker", "");
    let o = zerofid(&["run", "rb.toml", "--output-dir", "blocker/sub"], d);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn fit_recovers_synthetic_decay() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let (a0, p, b0) = (0.7, 0.95, 0.25);
    let mut csv = String::from("m,mean,stderr\n");
    for m in [1, 2, 4, 8, 16, 32, 64] {
        csv.push_str(&format!("{m},{:.11e},0\n", a0 * f64::powi(p, m) + b0));
    }
    write(d, "points.csv", &csv);
    let o = zerofid(&["fit", "points.csv", "--qubits", "2"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("p         0.950000"));
    let fit: serde_json::Value = serde_json::from_slice(&fs::read(d.join("fit.json")).unwrap()).unwrap();
    assert!((fit["p"].as_f64().unwrap() - p).abs() < 1e-6);
    assert!((fit["a0"].as_f64().unwrap() - a0).abs() < 1e-6);
    assert!((fit["b0"].as_f64().unwrap() - b0).abs() < 1e-6);
    let f_avg = p + (1.0 - p) / 4.0;
    assert!((fit["f_avg"].as_f64().unwrap() - f_avg).abs() < 1e-6);
}

#[test]
fn fit_rejects_bad_input() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "flat.csv", "m,mean,stderr\n1,0.9,0\n2,0.9,0\n3,0.9,0\n4,0.9,0\n");
    let o = zerofid(&["fit", "flat.csv", "--qubits", "1"], d);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("degenerate decay"), "{}", stderr(&o));

    write(d, "junk.csv", "m,mean,stderr\n1,0.9,0\n2,abc,0\n3,0.8,0\n");
    let o = zerofid(&["fit", "junk.csv", "--qubits", "1"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    write(d, "short.csv", "m,mean,stderr\n1,0.9,0\n2,0.8,0\n");
    assert_eq!(zerofid(&["fit", "short.csv", "--qubits", "1"], d).status.code(), Some(2));

    write(d, "noheader.csv", "1,0.9,0\n2,0.8,0\n3,0.7,0\n4,0.6,0\n");
    assert_eq!(zerofid(&["fit", "noheader.csv", "--qubits", "1"], d).status.code(), Some(2));

    write(d, "ok.csv", "m,mean,stderr\n1,0.9,0\n2,0.8,0\n3,0.75,0\n");
    let o = zerofid(&["fit", "ok.csv"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--qubits"));
}

#[test]
fn fit_reads_register_size_from_result() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "rb.toml", RB);
    assert!(zerofid(&["run", "rb.toml", "--output-dir", "out"], d).status.success());
    let o = zerofid(&["fit", "out/points.csv"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit: serde_json::Value = serde_json::from_slice(&fs::read(d.join("out/fit.json")).unwrap()).unwrap();
    assert_eq!(fit["n_qubits"].as_u64(), Some(2));
}

#[test]
fn report_tables() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    for (name, readout) in [("none", "none"), ("weak", "weak"), ("strong", "strong")] {
        let cfg = RB
            .replace("readout = \"weak\"", &format!("readout = \"{readout}\""))
            .replace("shots = 256", "exact = true");
        write(d, &format!("{name}.toml"), &cfg);
        let o = zerofid(&["run", &format!("{name}.toml"), "--output-dir", name], d);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let o = zerofid(&["report", "none", "weak", "strong"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5, "{text}");
    assert!(text.contains("SPAM-invariant (rb, n=2): yes"), "{text}");

    let o = zerofid(&["report", "none"], d);
    assert_eq!(stdout(&o).lines().count(), 2);

    let o = zerofid(&["report", "nowhere"], d);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn twirl_check_and_single_runs() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(
        d,
        "twirl.toml",
        "kind = \"twirl_check\"\nn_qubits = 2\nmaster_seed = 2\nsamples = 300\ntarget_text = \"U3 0 0.05 0.02 0.01\\nCZ 0 1\"\n[noise]\ndepolarizing_1q = 0.01\ndepolarizing_2q = 0.03\n",
    );
    let o = zerofid(&["run", "twirl.toml", "--output-dir", "t"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&fs::read(d.join("t/result.json")).unwrap()).unwrap();
    let tw = &r["twirl"];
    assert!((tw["p_empirical"].as_f64().unwrap() - tw["p_formula"].as_f64().unwrap()).abs() < 0.01);

    write(
        d,
        "single.toml",
        "kind = \"single_zero_fidelity\"\nn_qubits = 2\nmaster_seed = 2\nruns = 3\nexact = true\ntarget = \"cz_layer\"\n[noise]\ndepolarizing_2q = 0.01\n",
    );
    let o = zerofid(&["run", "single.toml", "--output-dir", "s"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(d.join("s/points.csv")).unwrap();
    let mean: f64 = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    // two CZs on a 2-qubit register depolarize with p = 0.99², F0 = p + (1 − p)/4
    let p = 0.99f64.powi(2);
    let expected = p + (1.0 - p) / 4.0;
    assert!((mean - expected).abs() < 1e-10, "{mean} vs {expected}");
}
