use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn polyrad(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyrad")).current_dir(dir).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const GENERIC: [&str; 6] = ["--M", "2", "--gamma", "5", "--s0", "0.5"];

fn solve_generic(dir: &Path) {
    let mut args = vec!["solve", "--mode", "shoot-immediate", "--out", "p.csv", "--report", "r.json"];
    args.extend(GENERIC);
    let out = polyrad(dir, &args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn minimize_identity_succeeds() {
    let dir = TempDir::new().unwrap();
    let out = polyrad(
        dir.path(),
        &["solve", "--mode", "minimize", "--M", "1", "--gamma", "1", "--s0", "1", "--n", "256", "--out", "id.csv"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("id.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "R,r,rdot,d,z");
    assert_eq!(text.lines().count(), 257);
}

#[test]
fn delayed_kernel_is_not_found() {
    let dir = TempDir::new().unwrap();
    let out = polyrad(dir.path(), &["solve", "--mode", "shoot-delayed", "--M", "2", "--rho-zero"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no delayed solution"), "{}", stderr(&out));
}

#[test]
fn missing_m_prints_usage() {
    let dir = TempDir::new().unwrap();
    let out = polyrad(dir.path(), &["solve", "--gamma", "1", "--s0", "1"]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("--M") && err.contains("Usage"), "{err}");
}

#[test]
fn bad_flag_is_usage_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&polyrad(dir.path(), &["solve", "--bogus"])), 1);
    assert_eq!(code(&polyrad(dir.path(), &["solve", "--M", "2", "--gamma", "-1", "--s0", "1"])), 1);
}

#[test]
fn verify_accepts_solver_output() {
    let dir = TempDir::new().unwrap();
    solve_generic(dir.path());
    let mut args = vec!["verify", "--in", "p.csv"];
    args.extend(GENERIC);
    let out = polyrad(dir.path(), &args);
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("consistency"));
}

#[test]
fn verify_catches_edited_column() {
    let dir = TempDir::new().unwrap();
    solve_generic(dir.path());
    let text = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut fields: Vec<String> = lines[1000].split(',').map(str::to_string).collect();
    let d: f64 = fields[3].parse().unwrap();
    fields[3] = (d * 1.01).to_string();
    lines[1000] = fields.join(",");
    fs::write(dir.path().join("bad.csv"), lines.join("\n") + "\n").unwrap();

    let mut args = vec!["verify", "--in", "bad.csv"];
    args.extend(GENERIC);
    let out = polyrad(dir.path(), &args);
    assert_eq!(code(&out), 3, "{}{}", stdout(&out), stderr(&out));
    assert!(stderr(&out).contains("consistency"), "{}", stderr(&out));
}

#[test]
fn malformed_csv_reports_line() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("m.csv"), "R,r,rdot,d,z\n0.5,0.25,1,1,1\n0.75,oops,1,1,1\n1,1,2,4,4\n").unwrap();
    let mut args = vec!["verify", "--in", "m.csv"];
    args.extend(GENERIC);
    let out = polyrad(dir.path(), &args);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn rho_table_rows() {
    let dir = TempDir::new().unwrap();
    let out = polyrad(dir.path(), &["rho-table", "--gamma", "5", "--s0", "0.5", "--samples", "50"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "s,rho,rho_prime,rho_second,f");
    assert_eq!(text.lines().count(), 52);
}

fn sweep_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn sweep_single_point_matches_solve() {
    let dir = TempDir::new().unwrap();
    let mut args = vec!["solve", "--mode", "shoot-immediate", "--report", "r.json"];
    args.extend(GENERIC);
    assert_eq!(code(&polyrad(dir.path(), &args)), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();

    let mut args = vec!["sweep", "--mode", "shoot-immediate"];
    args.extend(GENERIC);
    let out = polyrad(dir.path(), &args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = sweep_rows(&stdout(&out));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][3], "ok");
    let energy: f64 = rows[0][7].parse().unwrap();
    assert_eq!(energy, report["energy"]["total"].as_f64().unwrap());
}

#[test]
fn sweep_small_gamma_rows() {
    let dir = TempDir::new().unwrap();
    let out = polyrad(dir.path(), &["sweep", "--M", "2", "--gamma", "0.1,0.5", "--s0", "0.5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = sweep_rows(&stdout(&out));
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][1].as_str(), rows[1][1].as_str()), ("0.1", "0.5"));
    assert!(rows.iter().all(|r| r[3] == "ok"));
}

#[test]
fn sweep_energy_grows_with_gamma() {
    let dir = TempDir::new().unwrap();
    let out = polyrad(
        dir.path(),
        &["sweep", "--M", "2,3", "--gamma", "0.5,2,8", "--s0", "0.5", "--out", "s.csv"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = sweep_rows(&fs::read_to_string(dir.path().join("s.csv")).unwrap());
    assert_eq!(rows.len(), 6);
    for m in ["2", "3"] {
        let energies: Vec<f64> = rows.iter().filter(|r| r[0] == m).map(|r| r[7].parse().unwrap()).collect();
        assert_eq!(energies.len(), 3);
        assert!(energies.windows(2).all(|w| w[0] <= w[1]), "{energies:?}");
    }
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let run = |tag: &str| {
        let (p, r) = (format!("p{tag}.csv"), format!("r{tag}.json"));
        let mut args = vec!["solve", "--mode", "cross", "--n", "512", "--out", &p, "--report", &r];
        args.extend(GENERIC);
        assert_eq!(code(&polyrad(dir.path(), &args)), 0);
        let read = |name: &str| fs::read(dir.path().join(name)).unwrap();
        (read(&p), read(&format!("p{tag}-minimize.csv")), read(&r))
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.cfg"), "# generic run\nM = 2\ngamma = 0.5\ns0 = 0.5\nmode = shoot-immediate\n").unwrap();
    let sweep = |extra: &[&str]| {
        let mut args = vec!["--config", "run.cfg", "sweep"];
        args.extend(extra);
        let out = polyrad(dir.path(), &args);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        sweep_rows(&stdout(&out))
    };
    assert_eq!(sweep(&[])[0][1], "0.5");
    let rows = sweep(&["--gamma", "2"]);
    assert_eq!((rows[0][0].as_str(), rows[0][1].as_str()), ("2", "2"));

    fs::write(dir.path().join("bad.cfg"), "speed = 3\n").unwrap();
    let out = polyrad(dir.path(), &["--config", "bad.cfg", "sweep"]);
    assert_eq!(code(&out), 1);
}
