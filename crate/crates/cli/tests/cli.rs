use std::path::Path;
use std::process::{Command, Output};

fn cpop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpop")).args(args).env_remove("CPOP_TOL").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn stats_prints_closed_forms() {
    let o = cpop(&["stats", "--n", "50", "--order", "1"]);
    assert!(o.status.success());
    let line = stdout(&o).lines().find(|l| l.starts_with("R-HSOS")).unwrap().to_string();
    let fields: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(fields, ["R-HSOS", "51", "1326"]);
}

#[test]
fn solve_example_extracts_conjugate_pair_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("unimodular.json");
    let report = dir.path().join("report.json");
    assert!(cpop(&["generate", "unimodular", "--n", "3", "-o", path(&problem)]).status.success());

    let o = cpop(&["solve", path(&problem), "--order", "1", "--extract", "--report", path(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("bound         -3.75"), "{text}");
    let atoms: Vec<&str> = text.lines().filter(|l| l.trim_start().starts_with("atom")).collect();
    assert_eq!(atoms.len(), 2, "{text}");
    let parts = |a: &str| -> Vec<f64> {
        let inner = &a[a.find("z=[").unwrap() + 3..a.len() - 1];
        inner.split(", ").flat_map(|z| {
            let z = z.trim_end_matches('i');
            let k = z.rfind(['+', '-']).unwrap();
            [z[..k].parse::<f64>().unwrap(), z[k..].parse::<f64>().unwrap()]
        }).collect()
    };
    let pair = [-0.250013, 0.968242, -0.875003, -0.484117, -0.875003, -0.484117];
    let conj: Vec<f64> = pair.iter().enumerate().map(|(k, v)| if k % 2 == 1 { -v } else { *v }).collect();
    for want in [pair.to_vec(), conj] {
        let hit = atoms.iter().any(|a| parts(a).iter().zip(&want).all(|(x, y)| (x - y).abs() <= 1e-4));
        assert!(hit, "{want:?} missing from {atoms:?}");
    }

    let o = cpop(&["verify", path(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bench_energy_reaches_half() {
    let o = cpop(&["bench", "polyphase-energy", "--n", "4", "--order", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let bound: f64 = text.lines().find_map(|l| l.strip_prefix("bound")).unwrap().trim().parse().unwrap();
    assert!((bound - 0.5).abs() <= 1e-3, "{bound}");
    // Global phase rotations leave the energy unchanged, so the optimal set is not finite and
    // the code comes from the sampler.
    let line = text.lines().find_map(|l| l.strip_prefix("sampled")).expect("a sampled code");
    let value: f64 = line.split_whitespace().next().unwrap().parse().unwrap();
    assert!((value - bound).abs() <= 1e-3, "{line}");
    let viol: f64 = line.split("viol=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!(viol <= 1e-6, "{line}");
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"name\": \"x\", \"n\": oops }").unwrap();
    assert_eq!(cpop(&["solve", path(&bad), "--order", "1"]).status.code(), Some(5));

    let unpaired = dir.path().join("unpaired.json");
    std::fs::write(&unpaired, r#"{"name":"x","n":1,"objective":[{"beta":[1],"gamma":[0],"re":0.0,"im":1.0}]}"#).unwrap();
    let o = cpop(&["solve", path(&unpaired), "--order", "1"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).contains("([1],[0])"));

    let problem = dir.path().join("energy.json");
    assert!(cpop(&["generate", "polyphase-energy", "--n", "4", "-o", path(&problem)]).status.success());
    let o = cpop(&["solve", path(&problem), "--order", "2", "--time-limit", "0"]);
    assert_eq!(o.status.code(), Some(3));

    let report = dir.path().join("report.json");
    assert!(cpop(&["solve", path(&problem), "--order", "2", "--report", path(&report)]).status.success());
    let text = std::fs::read_to_string(&report).unwrap();
    let tampered = text.replacen("\"x\": [\n    ", "\"x\": [\n    0.5, ", 1);
    assert_ne!(tampered, text);
    std::fs::write(&report, tampered).unwrap();
    assert_eq!(cpop(&["verify", path(&report)]).status.code(), Some(6));
}

#[test]
fn tolerance_comes_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_cpop"))
        .args(["bench", "unimodular", "--n", "3", "--order", "1"])
        .env("CPOP_TOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
