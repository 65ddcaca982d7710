//! Runs the `ordtest` binary end to end.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn ordtest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ordtest")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ordtest-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_names_every_experiment() {
    let o = ordtest(&["list-experiments"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["mixing-equivalence", "simupiece-exact", "regularity-checkers"] {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn dist_rows() {
    let dir = scratch("dist");
    let (a, b) = (dir.join("a.txt"), dir.join("b.txt"));
    fs::write(&a, "0110\n").unwrap();
    fs::write(&b, "1010\n").unwrap();
    let o = ordtest(&["dist", "--kind", "hamming", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(stdout(&o), "kind,n,absolute,relative,witness\nhamming,4,2,1/2,\n");
    let o = ordtest(&["dist", "--kind", "earthmover", "--exact", a.to_str().unwrap(), b.to_str().unwrap()]);
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(row.starts_with("earthmover,4,1,1/6,"), "{row}");
    let p = dir.join("p.txt");
    fs::write(&p, "2 3 1\n").unwrap();
    let o = ordtest(&["dist", "--kind", "mixing", p.to_str().unwrap()]);
    assert_eq!(stdout(&o).lines().nth(1).unwrap(), "mixing,3,2,2/3,(1 3) (2 3)");
    let o = ordtest(&["dist", "--kind", "property", "--property", "monotone_string", b.to_str().unwrap()]);
    assert_eq!(stdout(&o).lines().nth(1).unwrap(), "property,4,2,1/2,");
}

#[test]
fn run_writes_reproducible_csv() {
    let dir = scratch("run");
    let cfg = dir.join("c.toml");
    fs::write(&cfg, "[[experiment]]\nname = \"qk-statistic-bound\"\nseed = 5\ncount = 4\n").unwrap();
    let out1 = dir.join("one");
    let out2 = dir.join("two");
    assert!(ordtest(&["run", "--config", cfg.to_str().unwrap(), "--out", out1.to_str().unwrap()]).status.success());
    assert!(ordtest(&["run", "--config", cfg.to_str().unwrap(), "--out", out2.to_str().unwrap()]).status.success());
    let body = |p: PathBuf| -> String {
        fs::read_to_string(p).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
    };
    let a = body(out1.join("qk-statistic-bound.csv"));
    assert!(a.starts_with("graph,n,q,k,variation,bound,ok"));
    assert_eq!(a, body(out2.join("qk-statistic-bound.csv")));
    let head = fs::read_to_string(out1.join("qk-statistic-bound.csv")).unwrap();
    assert!(head.contains("# seed: 5") && head.contains("# config_sha256: "));
}

#[test]
fn exit_codes() {
    let dir = scratch("codes");
    let empty = dir.join("empty.toml");
    fs::write(&empty, "[[experiment]]\nname = \"mixing-equivalence\"\nseed = 1\nsizes = []\n").unwrap();
    let out = dir.join("o");
    let o = ordtest(&["run", "--config", empty.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let bad = dir.join("bad.toml");
    fs::write(&bad, "[[experiment]]\nname = \"mixing-equivalence\"\n").unwrap();
    let o = ordtest(&["run", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let failing = dir.join("fail.toml");
    fs::write(&failing, "[[experiment]]\nname = \"simupiece-montecarlo\"\nseed = 1\ntrials = 50\n").unwrap();
    let o = ordtest(&["run", "--config", failing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn boundary_and_reg() {
    let dir = scratch("img");
    let img = dir.join("ring.txt");
    fs::write(&img, "00000\n01110\n01010\n01110\n00000\n").unwrap();
    let o = ordtest(&["boundary", "--img", img.to_str().unwrap(), "--report"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("shape,color,size,boundary,encircled"));
    assert!(text.contains("boundary_pixel_violations: 0"));

    let g = dir.join("g.txt");
    // 4 vertices, all pairs color 0
    fs::write(&g, "4 2\n0 0 0 0 0 0\n").unwrap();
    let r = dir.join("r.txt");
    fs::write(&r, "refinement 4 2 1\npart 1 1 1 2\npart 2 1 3 4\n").unwrap();
    let o = ordtest(&["reg", "--graph", g.to_str().unwrap(), "--refinement", r.to_str().unwrap(), "--gamma", "1/2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("refinement,true,0,1,0"));
}

#[test]
fn test_command_prints_rate() {
    let o = ordtest(&[
        "test", "--tester", "canonical", "--property", "monotone_string", "--q", "2", "--n", "40", "--trials", "50",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    // a monotone input passes a monotone 2-query table every time
    assert_eq!(row[5], "1.000000");
}
