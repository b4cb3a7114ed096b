use std::fs;
use std::path::PathBuf;
use std::process::Command;

use retroptics::analysis::{exact_projection_records, exact_scan_records, write_csv};
use retroptics::experiments::{mixed_coherent_reference, superposition_reference, ElementMode};
use retroptics::fock::{DensityMatrix, FockVector};
use retroptics::phase::{phase_distribution, DEFAULT_GRID};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_retroptics"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("retroptics-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).env_remove("RETROPTICS_SEED").output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn design_presets_report_efficiency() {
    let (code, out, _) = run(&["design", "--preset", "optimal3"]);
    assert_eq!(code, 0);
    assert!(out.contains("P_ψ = 0.1492"), "{out}");
    let (code, out, _) = run(&["design", "--preset", "dft3"]);
    assert_eq!(code, 0);
    assert!(out.contains("-1.2591") && out.contains("-0.1551"), "{out}");
}

#[test]
fn design_json_and_files() {
    let dir = scratch("design");
    let target = dir.join("t.json");
    fs::write(&target, "[1, 1, 1]").unwrap();
    let rec = dir.join("rec.json");
    let net = dir.join("net.csv");
    let (code, out, _) = run(&[
        "--json",
        "design",
        target.to_str().unwrap(),
        "--unitary",
        "optimize",
        "--out",
        rec.to_str().unwrap(),
        "--netlist",
        net.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["status"], "ok");
    assert!((v["data"]["efficiency"].as_f64().unwrap() - 0.1492).abs() < 5e-4);
    let saved: serde_json::Value = serde_json::from_str(&fs::read_to_string(rec).unwrap()).unwrap();
    for key in ["psi", "betas", "alphas", "kappa_bar", "efficiency", "pattern", "unitary", "plan"] {
        assert!(saved.get(key).is_some(), "missing {key}");
    }
    assert!(fs::read_to_string(net).unwrap().starts_with("kind,p,q,theta,phi"));
}

#[test]
fn vacuum_target_is_informational() {
    let dir = scratch("vacuum");
    let target = dir.join("t.json");
    fs::write(&target, "[1]").unwrap();
    let (code, out, _) = run(&["design", target.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("no roots: zero-photon target"));
}

#[test]
fn user_errors_exit_two() {
    let dir = scratch("errors");
    let (code, _, err) = run(&["simulate", "--preset", "fig5_3", "--eta", "0", "--out", dir.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("efficiency"));
    assert_eq!(run(&["design", "--preset", "unknown"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["design", "/no/such/file.json"]).0, 2);
    let (code, out, _) = run(&["--json", "design", "--preset", "unknown"]);
    assert_eq!(code, 2);
    assert!(out.contains("\"status\": \"error\""));
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn unreachable_state_explains() {
    let dir = scratch("unreach");
    let target = dir.join("t.json");
    fs::write(&target, "[1, 1, 1]").unwrap();
    let u = dir.join("u.json");
    // identity: first column has zeros below the diagonal
    fs::write(&u, r#"{"dim":3,"entries":[[1,0],[0,0],[0,0],[0,0],[1,0],[0,0],[0,0],[0,0],[1,0]]}"#).unwrap();
    let (code, _, err) = run(&["design", target.to_str().unwrap(), "--unitary", u.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("unreachable"), "{err}");
}

#[test]
fn simulate_is_deterministic_and_seeded_from_env() {
    let a = scratch("sim-a");
    let b = scratch("sim-b");
    let (code, _, _) = run(&["simulate", "--preset", "fig5_3", "--trials", "40000", "--seed", "9", "--out", a.to_str().unwrap()]);
    assert_eq!(code, 0);
    let out = bin()
        .args(["simulate", "--preset", "fig5_3", "--trials", "40000", "--out", b.to_str().unwrap()])
        .env("RETROPTICS_SEED", "9")
        .output()
        .unwrap();
    assert!(out.status.success());
    for f in ["histogram.csv", "counts.csv", "analytic.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let hist = fs::read_to_string(a.join("histogram.csv")).unwrap();
    assert!(hist.starts_with("theta_bin,density,stderr"));
    assert_eq!(hist.lines().count(), 17);
}

#[test]
fn zero_trials_keep_analytic_columns() {
    let d = scratch("zero");
    assert_eq!(run(&["simulate", "--preset", "fig5_3", "--trials", "0", "--out", d.to_str().unwrap()]).0, 0);
    let hist = fs::read_to_string(d.join("histogram.csv")).unwrap();
    for line in hist.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[6], "0");
        assert!(cols[3].parse::<f64>().unwrap() > 0.0);
    }
    let counts = fs::read_to_string(d.join("counts.csv")).unwrap();
    assert!(counts.lines().skip(1).all(|l| l.split(',').nth(2) == Some("0")));
}

#[test]
fn analyze_phase_distribution_round_trip() {
    let d = scratch("pd");
    let psi = FockVector::from_real(&[1.0, 1.0, 1.0, 1.0]).normalize().to_density();
    let table = d.join("proj.csv");
    write_csv(&exact_projection_records(&psi, 3), fs::File::create(&table).unwrap()).unwrap();
    let out = d.join("pd.csv");
    let (code, _, err) = run(&["analyze", table.to_str().unwrap(), "--mode", "phase-dist", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let want = phase_distribution(&psi, DEFAULT_GRID);
    let text = fs::read_to_string(out).unwrap();
    for (line, p) in text.lines().skip(1).zip(&want.density) {
        let got: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((got - p).abs() < 1e-9);
    }
}

#[test]
fn analyze_element_of_superposition() {
    let d = scratch("dm");
    let rho = FockVector::from_real(&[1.0, 1.0]).normalize().to_density();
    let reference = mixed_coherent_reference(0.5f64.sqrt(), 1, 25).unwrap();
    let table = d.join("scan.csv");
    let mode = ElementMode::DoubleBs { bs1_theta: 0.8, n0: None };
    write_csv(&exact_scan_records(&rho, &reference, mode, 1, 0).unwrap(), fs::File::create(&table).unwrap()).unwrap();
    let (code, out, err) =
        run(&["analyze", table.to_str().unwrap(), "--mode", "dmelem", "--bs1-theta", "0.8", "--alpha", &0.5f64.sqrt().to_string()]);
    assert_eq!(code, 0, "{err}");
    let row = out.lines().nth(1).unwrap();
    let re: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((re - 0.5).abs() < 1e-9, "{out}");

    let sv_table = d.join("sv.csv");
    let r = superposition_reference(1).to_density();
    write_csv(
        &exact_scan_records(&rho, &r, ElementMode::SteuernagelVaccaro { n0: 1 }, 1, 0).unwrap(),
        fs::File::create(&sv_table).unwrap(),
    )
    .unwrap();
    let (code, out, _) = run(&["analyze", sv_table.to_str().unwrap(), "--mode", "dmelem", "--scheme", "sv"]);
    assert_eq!(code, 0);
    let re: f64 = out.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((re - 0.5).abs() < 1e-9);
}

#[test]
fn analyze_moments_of_number_state() {
    let d = scratch("mom");
    let rho = DensityMatrix::diagonal(&[0.0, 0.0, 1.0]);
    let reference = mixed_coherent_reference(0.5f64.sqrt(), 1, 25).unwrap();
    let mode = ElementMode::DoubleBs { bs1_theta: 0.8, n0: None };
    let mut rows = exact_scan_records(&rho, &reference, mode, 1, 2).unwrap();
    for r in &mut rows {
        r.count = Some((r.probability.unwrap() * 1e6).round() as u64);
        r.trials = Some(1_000_000);
    }
    let table = d.join("scan.csv");
    write_csv(&rows, fs::File::create(&table).unwrap()).unwrap();
    let (code, out, err) = run(&[
        "analyze",
        table.to_str().unwrap(),
        "--mode",
        "moments",
        "--bs1-theta",
        "0.8",
        "--coherence",
        &format!("{},0", reference.get(1, 0).re),
    ]);
    assert_eq!(code, 0, "{err}");
    let cols: Vec<f64> = out.lines().nth(1).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert!(cols[1].abs() < 3.0 * cols[3] + 1e-6 && cols[3] > 0.0, "{out}");
}

#[test]
fn analyze_lists_missing_settings() {
    let d = scratch("miss");
    let rho = FockVector::from_real(&[1.0, 1.0]).normalize().to_density();
    let reference = mixed_coherent_reference(0.7, 1, 25).unwrap();
    let mode = ElementMode::DoubleBs { bs1_theta: 0.8, n0: None };
    let rows: Vec<_> = exact_scan_records(&rho, &reference, mode, 1, 0).unwrap().into_iter().filter(|r| r.phase < 1.0).collect();
    let table = d.join("scan.csv");
    write_csv(&rows, fs::File::create(&table).unwrap()).unwrap();
    let (code, _, err) = run(&["analyze", table.to_str().unwrap(), "--mode", "dmelem", "--bs1-theta", "0.8", "--coherence", "0.1,0"]);
    assert_eq!(code, 2);
    assert!(err.contains("missing phase settings") && err.contains("π/λ") && err.contains("3π/(2λ)"), "{err}");
}
