use std::fs;
use std::path::{Path, PathBuf};

use filtlab::cli::{main_with_args, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME};

const WALK: &str = r#"{
  "version": 1,
  "experiment": "standardness",
  "group": {"kind": "lattice", "dim": 1},
  "walk": {"n_max": 3, "samples": 40},
  "seeds": {"master": 5}
}"#;

const SCALING: &str = r#"{
  "version": 1,
  "experiment": "scaling-fit",
  "group": {"kind": "lattice", "dim": 1},
  "walk": {"samples": 30},
  "entropy": {"epsilons": [0.02, 0.05, 0.1], "ns": [2, 3, 4, 5]},
  "scaling": {"form": "power", "beta": 0.5},
  "seeds": {"master": 5}
}"#;

const BALL: &str = r#"{
  "version": 1,
  "experiment": "ball-measure",
  "group": {"kind": "free", "generators": 2},
  "walk": {"samples": 100},
  "ball": {"ns": [1, 2, 3], "epsilon": 0.3},
  "seeds": {"master": 5}
}"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("filtlab").chain(args.iter().copied()))
}

fn run_config(config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec!["run", config.to_str().unwrap(), "--out-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    fs::create_dir(&out).unwrap();
    let good = write_config(dir.path(), "walk.json", WALK);
    assert_eq!(run_config(&good, &out, &[]), EXIT_OK);

    let malformed = write_config(dir.path(), "bad.json", "{\"version\": 1,\n  \"experiment\": ");
    assert_eq!(run_config(&malformed, &out, &[]), EXIT_CONFIG);
    let unknown = write_config(dir.path(), "unknown.json", &WALK.replace("\"walk\"", "\"walks\""));
    assert_eq!(run_config(&unknown, &out, &[]), EXIT_CONFIG);
    let missing = dir.path().join("absent.json");
    assert_eq!(run_config(&missing, &out, &[]), EXIT_CONFIG);
    assert_eq!(run(&["run"]), EXIT_CONFIG);
    assert_eq!(run(&["frobnicate"]), EXIT_CONFIG);
    assert_eq!(run_config(&good, &out, &["--threads", "0"]), EXIT_CONFIG);

    // the output directory is a regular file, so writing fails at run time
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "x").unwrap();
    assert_eq!(run_config(&good, &blocker, &[]), EXIT_RUNTIME);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ball.json", BALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    fs::create_dir_all(&a).unwrap();
    fs::create_dir_all(&b).unwrap();
    assert_eq!(run_config(&cfg, &a, &["--threads", "1"]), EXIT_OK);
    assert_eq!(run_config(&cfg, &b, &["--threads", "3"]), EXIT_OK);
    for f in ["ball.csv", "ball.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.join("ball.csv")).unwrap();
    assert!(csv.starts_with("# filtlab "));
    assert!(csv.contains("# experiment: ball-measure\n"));
    assert!(csv.contains("# seed: 5\n"));
    assert!(csv.contains("\nn,epsilon,hits,samples,p,ci_low,ci_high\n"));

    // a seed override changes the header and is itself reproducible
    assert_eq!(run_config(&cfg, &b, &["--seed", "6"]), EXIT_OK);
    assert!(fs::read_to_string(b.join("ball.csv")).unwrap().contains("# seed: 6\n"));
}

#[test]
fn cache_hits_do_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fit.json", SCALING);
    let cache = dir.path().join("cache");
    let cache = cache.to_str().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for d in [&a, &b, &c] {
        fs::create_dir_all(d).unwrap();
    }
    assert_eq!(run_config(&cfg, &a, &["--cache-dir", cache]), EXIT_OK);
    assert!(fs::read_dir(cache).unwrap().count() > 0);
    assert_eq!(run_config(&cfg, &b, &["--cache-dir", cache]), EXIT_OK);
    assert_eq!(run_config(&cfg, &c, &[]), EXIT_OK);
    for f in ["fit.csv", "fit_fit.csv", "fit.json"] {
        let first = fs::read(a.join(f)).unwrap();
        assert_eq!(first, fs::read(b.join(f)).unwrap(), "{f} after a cache hit");
        assert_eq!(first, fs::read(c.join(f)).unwrap(), "{f} without a cache");
    }
}

#[test]
fn compare_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let fit = write_config(dir.path(), "fit.json", SCALING);
    let walk = write_config(dir.path(), "walk.json", WALK);
    let ball = write_config(dir.path(), "ball.json", BALL);
    for c in [&fit, &walk, &ball] {
        assert_eq!(run_config(c, out, &[]), EXIT_OK);
    }
    let report = out.join("report.csv");
    let path = |name: &str| out.join(name).to_str().unwrap().to_string();

    // a single file is compared against itself
    assert_eq!(run(&["compare", &path("walk.csv"), "--out", report.to_str().unwrap()]), EXIT_OK);
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("n,walk.csv\n"), "{text}");
    assert_eq!(text.lines().count(), 4);

    assert_eq!(
        run(&["compare", &path("fit.csv"), &path("fit.csv"), "--out", report.to_str().unwrap()]),
        EXIT_OK
    );
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("file,beta,stderr,r_squared,points,diff_vs_first,diff_stderr\n"));
    assert!(text.lines().nth(2).unwrap().contains(",0,"));

    // mismatched schemas, unknown columns and empty files are usage errors
    assert_eq!(run(&["compare", &path("walk.csv"), &path("ball.csv")]), EXIT_CONFIG);
    assert_eq!(run(&["compare", &path("fit_fit.csv")]), EXIT_CONFIG);
    let empty = out.join("empty.csv");
    fs::write(&empty, "").unwrap();
    assert_eq!(run(&["compare", empty.to_str().unwrap()]), EXIT_CONFIG);
    assert_eq!(run(&["compare"]), EXIT_CONFIG);
}
