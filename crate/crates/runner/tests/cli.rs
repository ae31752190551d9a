use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mfg_core::{build_sis, fictitious_play, mean_infected_fraction, MeanFieldFlow, SolverConfig};
use mfg_runner::output::read_trace;

const LR_SMALL: &str = r#"
[game]
name = "left-right"

[solver]
algorithm = ["fpi", "fp"]
alpha = [1.0, 10.0]
max_iters = 4
dt = 0.1

[output]
record_policies = true
"#;

fn mfg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfg")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run_ok(config: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = mfg(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn run_writes_expected_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lr.toml", LR_SMALL);
    let out = tmp.path().join("out");
    run_ok(&cfg, &out, &[]);

    for name in ["fpi_alpha_1", "fpi_alpha_10", "fp_alpha_1", "fp_alpha_10"] {
        let d = out.join(name);
        let trace = fs::read_to_string(d.join("trace.csv")).unwrap();
        assert_eq!(trace.lines().count(), 5, "{name}");
        let flow = fs::read_to_string(d.join("flow.csv")).unwrap();
        assert_eq!(flow.lines().count(), 500 + 2);
        assert_eq!(flow.lines().nth(1).unwrap(), "0.0,0.4,0.6");
        let policy = fs::read_to_string(d.join("policy.csv")).unwrap();
        assert_eq!(policy.lines().count(), 1 + 500 * 2 * 2);
        assert_eq!(d.join("averaged_flow.csv").exists(), name.starts_with("fp_"));
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
    assert!(out.join("COLUMNS.txt").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lr.toml", LR_SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_ok(&cfg, &a, &[]);
    run_ok(&cfg, &b, &[]);
    let fa = files_under(&a);
    let fb = files_under(&b);
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.strip_prefix(&a).unwrap(), y.strip_prefix(&b).unwrap());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
}

#[test]
fn sweep_members_match_single_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lr.toml", LR_SMALL);
    let sweep = tmp.path().join("sweep");
    let single = tmp.path().join("single");
    run_ok(&cfg, &sweep, &[]);
    run_ok(
        &cfg,
        &single,
        &["--override", "solver.alpha=10.0", "--override", "solver.algorithm=fp"],
    );
    for file in ["trace.csv", "flow.csv", "averaged_flow.csv", "policy.csv"] {
        assert_eq!(
            fs::read(sweep.join("fp_alpha_10").join(file)).unwrap(),
            fs::read(single.join("fp_alpha_10").join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn out_dir_defaults_to_config() {
    let tmp = tempfile::tempdir().unwrap();
    let target = tmp.path().join("from_config");
    let text = format!("{LR_SMALL}dir = {:?}\n", target.to_str().unwrap());
    let cfg = write_config(
        tmp.path(),
        "lr.toml",
        &text.replace("alpha = [1.0, 10.0]", "alpha = 1.0"),
    );
    let o = mfg(&["run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(target.join("summary.csv").exists());
}

#[test]
fn trace_file_parses_back() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lr.toml", LR_SMALL);
    let out = tmp.path().join("out");
    run_ok(&cfg, &out, &[]);
    let trace = read_trace(fs::File::open(out.join("fp_alpha_1/trace.csv")).unwrap()).unwrap();
    assert_eq!(trace.len(), 4);
    assert!(trace.records().iter().enumerate().all(|(i, r)| r.k == i));
    assert!(trace.delta_j_re().all(|g| g.is_finite() && g >= -1e-6));
}

#[test]
fn gap_command_matches_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lr.toml", LR_SMALL);
    let out = tmp.path().join("out");
    run_ok(&cfg, &out, &[]);

    let policy = out.join("fp_alpha_1/policy.csv");
    let o = mfg(&[
        "gap",
        cfg.to_str().unwrap(),
        "--policy",
        policy.to_str().unwrap(),
        "--override",
        "solver.alpha=1.0",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "alpha,delta_j,delta_j_re");
    assert_eq!(lines.len(), 2);
    let gap: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let row: Vec<&str> = summary
        .lines()
        .find(|l| l.starts_with("fp,1.0,"))
        .unwrap()
        .split(',')
        .collect();
    let (dj, djre): (f64, f64) = (row[4].parse().unwrap(), row[5].parse().unwrap());
    assert_eq!(gap[0], 1.0);
    assert!((gap[1] - dj).abs() <= 1e-9 * (1.0 + dj.abs()), "{} vs {dj}", gap[1]);
    assert!(
        (gap[2] - djre).abs() <= 1e-9 * (1.0 + djre.abs()),
        "{} vs {djre}",
        gap[2]
    );
}

#[test]
fn sis_flow_column_reproduces_mean_infected_fraction() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "[game]\nname = \"sis\"\n[solver]\nalgorithm = \"fp\"\nalpha = 0.1\nmax_iters = 300\n";
    let cfg = write_config(tmp.path(), "sis.toml", text);
    let out = tmp.path().join("out");
    run_ok(&cfg, &out, &[]);

    let flow_text = fs::read_to_string(out.join("fp_alpha_0.1/flow.csv")).unwrap();
    let mut values = Vec::new();
    for line in flow_text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        values.extend_from_slice(&f[1..]);
    }
    let game = build_sis();
    let grid = game.grid(0.01).unwrap();
    let from_file = mean_infected_fraction(&MeanFieldFlow::from_values(2, values).unwrap(), &grid);

    let sol = fictitious_play(
        &game,
        &SolverConfig {
            alpha: 0.1,
            max_iters: 300,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(from_file, mean_infected_fraction(&sol.flow, &grid));

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let header: Vec<&str> = summary.lines().next().unwrap().split(',').collect();
    assert_eq!(header.last(), Some(&"mean_infected_fraction"));
    let last: f64 = summary
        .lines()
        .nth(1)
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(last, from_file);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let code = |o: Output| o.status.code().unwrap();

    let unknown = write_config(tmp.path(), "unknown.toml", &format!("{LR_SMALL}colour = \"red\"\n"));
    assert_eq!(code(mfg(&["run", unknown.to_str().unwrap(), "--out", out])), 2);

    let malformed = write_config(tmp.path(), "malformed.toml", "[game\nname = 3");
    assert_eq!(code(mfg(&["run", malformed.to_str().unwrap(), "--out", out])), 2);

    let good = write_config(tmp.path(), "lr.toml", LR_SMALL);
    let good = good.to_str().unwrap();
    assert_eq!(
        code(mfg(&["run", good, "--out", out, "--override", "solver.dt=0.03"])),
        2
    );
    assert_eq!(
        code(mfg(&["run", good, "--out", out, "--override", "solver.beta=1.0"])),
        2
    );

    let numeric = write_config(
        tmp.path(),
        "coarse.toml",
        "[game]\nname = \"sis\"\n[solver]\nalgorithm = \"fp\"\nalpha = 1.0\ndt = 2.0\n",
    );
    assert_eq!(code(mfg(&["run", numeric.to_str().unwrap(), "--out", out])), 3);

    let missing = tmp.path().join("nope.toml");
    assert_eq!(code(mfg(&["run", missing.to_str().unwrap(), "--out", out])), 1);

    let bad_policy = write_config(tmp.path(), "policy.csv", "k,x,u,prob\n0,0,0,1.0\n");
    assert_eq!(code(mfg(&["gap", good, "--policy", bad_policy.to_str().unwrap()])), 2);

    // a run that stops on max_iters still succeeds
    let o = mfg(&["run", good, "--out", out, "--override", "solver.max_iters=1"]);
    assert_eq!(code(o), 0);
}
