use std::fs;
use std::path::Path;

use clap::CommandFactory;
use pconvex_cli::args::Cli;
use pconvex_cli::run_cli;
use pconvex_cli::table::read_csv;
use pconvex_cli::ProblemFile;
use proptest::prelude::*;

const CUBE: &str = r#"{"family":"shifted-power","params":{"q":3,"a":0},"domain":[0,1]}"#;
const COIN: &str = r#"{"kind":"discrete","atoms":[0,1],"probs":[0.5,0.5]}"#;

fn run(args: &[&str]) -> i32 {
    run_cli(std::iter::once("pconvex").chain(args.iter().copied()))
}

fn out_arg(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn failing_certificate_is_a_successful_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path(), "cert.json");
    assert_eq!(
        run(&[
            "certify", "-f", CUBE, "--class", "I", "-p", "3", "-a", "0", "-b", "1", "--out", &out
        ]),
        0
    );
    let cert: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(cert["verdict"], "fail");
    assert_eq!(cert["witness"]["point"], 0.0);
}

#[test]
fn bound_with_failing_certificate_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path(), "b.csv");
    assert_eq!(
        run(&["bound", "-f", CUBE, "-d", COIN, "-p", "3", "--out", &out]),
        2
    );
    assert!(!Path::new(&out).exists());
    assert_eq!(run(&["hh", "-f", CUBE, "-p", "4", "--out", &out]), 2);
}

#[test]
fn bound_row_carries_value_oracle_and_classical() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path(), "b.csv");
    assert_eq!(
        run(&["bound", "-f", CUBE, "-d", COIN, "-p", "1", "--kind", "lower", "--out", &out]),
        0
    );
    let (header, rows) = read_csv(&fs::read_to_string(&out).unwrap()).unwrap();
    let col = |n: &str| {
        rows[0][header.iter().position(|h| h == n).unwrap()]
            .parse::<f64>()
            .unwrap()
    };
    assert!((col("value") - 2f64.powf(-1.5)).abs() < 1e-15);
    assert_eq!(col("oracle"), 0.5);
    assert_eq!(col("classical"), 0.125);
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        "{\n  \"version\": 1,\n  \"task\": \"mgf\",\n  \"params\": {\"s\": \"one\"}\n}\n",
    )
    .unwrap();
    let msg = ProblemFile::from_json(&fs::read_to_string(&bad).unwrap())
        .unwrap_err()
        .to_string();
    assert!(msg.contains("params.s") && msg.contains("line 4"), "{msg}");
    assert_eq!(run(&["run", bad.to_str().unwrap()]), 1);
    assert_eq!(run(&["certify", "-f", "{\"family\": 3}"]), 1);
    assert_eq!(
        run(&[
            "certify",
            "-f",
            dir.path().join("missing.json").to_str().unwrap()
        ]),
        1
    );
    assert_eq!(run(&["no-such-command"]), 1);
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "p,lower_gap,upper_gap\n").unwrap();
    assert_eq!(
        run(&[
            "plot",
            empty.to_str().unwrap(),
            "--out",
            &out_arg(dir.path(), "e.svg")
        ]),
        1
    );
}

#[test]
fn problem_files_run_like_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let (pf, a, b) = (
        out_arg(dir.path(), "p.json"),
        out_arg(dir.path(), "a.csv"),
        out_arg(dir.path(), "b.csv"),
    );
    let args = ["mgf", "-d", COIN, "-s", "1.5", "-p", "2"];
    assert_eq!(
        run(&[&args[..], &["--dump-canonical", "--out", &pf]].concat()),
        0
    );
    assert_eq!(run(&[&args[..], &["--out", &a]].concat()), 0);
    assert_eq!(run(&["run", &pf, "--out", &b]), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn hh_sweep_is_deterministic_and_plots_two_series() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<(String, String)> = (0..2)
        .map(|i| {
            (
                out_arg(dir.path(), &format!("g{i}.csv")),
                out_arg(dir.path(), &format!("g{i}.svg")),
            )
        })
        .collect();
    for (csv, svg) in &paths {
        assert_eq!(
            run(&["sweep", "--suite", "hh", "--out", csv, "--plot", svg]),
            0
        );
    }
    assert_eq!(
        fs::read(&paths[0].0).unwrap(),
        fs::read(&paths[1].0).unwrap()
    );
    let svg = fs::read_to_string(&paths[0].1).unwrap();
    assert_eq!(svg, fs::read_to_string(&paths[1].1).unwrap());
    assert_eq!(svg.matches("<polyline").count(), 2);
    let (_, rows) = read_csv(&fs::read_to_string(&paths[0].0).unwrap()).unwrap();
    assert_eq!(rows.len(), 6);
}

#[test]
fn em_demo_trace_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        out_arg(dir.path(), "a"),
        out_arg(dir.path(), "b"),
        out_arg(dir.path(), "c"),
    );
    assert_eq!(run(&["em-demo", "--iters", "5", "--out", &a]), 0);
    assert_eq!(
        run(&["em-demo", "--iters", "5", "--seed", "42", "--out", &b]),
        0
    );
    assert_eq!(
        run(&["em-demo", "--iters", "5", "--seed", "7", "--out", &c]),
        0
    );
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn every_subcommand_has_help() {
    let cmd = Cli::command();
    for sub in cmd.get_subcommands().filter(|s| s.get_name() != "help") {
        assert!(
            sub.get_about().is_some_and(|a| !a.to_string().is_empty()),
            "{}",
            sub.get_name()
        );
        for nested in sub.get_subcommands() {
            assert!(
                nested.get_about().is_some(),
                "{} {}",
                sub.get_name(),
                nested.get_name()
            );
        }
    }
}

fn dump(args: &[String], dir: &Path, name: &str) -> String {
    let out = out_arg(dir, name);
    let mut full: Vec<&str> = args.iter().map(String::as_str).collect();
    full.extend(["--dump-canonical", "--out", &out]);
    assert_eq!(run(&full), 0, "{full:?}");
    fs::read_to_string(out).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dump_canonical_round_trips(
        q in 1.0f64..6.0,
        a in -2.0f64..2.0,
        w in 0.1f64..5.0,
        p in 1u32..6,
        t in 0.01f64..0.99,
        seed in any::<u64>(),
        task in 0usize..4,
    ) {
        let f = format!(r#"{{"family":"shifted-power","params":{{"q":{q},"a":{a}}},"domain":[{a},{}]}}"#, a + w);
        let d = format!(r#"{{"kind":"discrete","atoms":[{a},{}],"probs":[{t},{}]}}"#, a + w, 1.0 - t);
        let (ps, ss) = (p.to_string(), seed.to_string());
        let args: Vec<String> = match task {
            0 => vec!["bound", "-f", &f, "-d", &d, "-p", &ps, "--kind", "upper", "--seed", &ss],
            1 => vec!["certify", "-f", &f, "--class", "d", "-p", &ps],
            2 => vec!["hh-fractional", "-f", &f, "-p", &ps, "--alpha", "0.75", "-b", "1e300"],
            _ => vec!["sweep", "--suite", "mgf", "--seed", &ss],
        }
        .into_iter()
        .map(String::from)
        .collect();
        let dir = tempfile::tempdir().unwrap();
        let text = dump(&args, dir.path(), "first.json");
        let parsed = ProblemFile::from_json(&text).unwrap();
        prop_assert_eq!(ProblemFile::from_json(&parsed.to_json()).unwrap(), parsed.clone());
        let path = out_arg(dir.path(), "first.json");
        let again = dump(&["run".to_string(), path], dir.path(), "second.json");
        prop_assert_eq!(again, text);
    }
}
