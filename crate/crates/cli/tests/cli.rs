use std::path::Path;
use std::process::{Command, Output};

fn quadest(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadest"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = quadest(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

#[test]
fn figure_eight_truth_has_expected_rows() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["simulate", "--scenario", "figure8", "--duration", "120", "--out", "truth.csv"]);
    let r = rows(&d.path().join("truth.csv"));
    assert_eq!(r.len(), 24001);
    assert_eq!(r.last().unwrap()[0], 120.0);
}

#[test]
fn hover_truth_is_static() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("hover.txt"), "# hold level\n10.0,0,0,0\n").unwrap();
    ok(d.path(), &["simulate", "--script", "hover.txt", "--out", "truth.csv"]);
    for r in rows(&d.path().join("truth.csv")) {
        assert!(r[4..7].iter().all(|v| *v == 0.0));
    }
}

#[test]
fn invalid_script_names_file() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("broken.txt"), "1.0,0,0\n").unwrap();
    let out = quadest(d.path(), &["simulate", "--script", "broken.txt", "--out", "t.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.txt"));
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(quadest(d.path(), &["estimate", "--nonsense"]).status.code(), Some(1));
    assert_eq!(quadest(d.path(), &["simulate", "--out", "t.csv"]).status.code(), Some(1));
    assert_eq!(
        quadest(d.path(), &["estimate", "--imu", "missing.csv", "--out", "e.csv"]).status.code(),
        Some(2)
    );
    // Pitching at 2 rad/s for a second runs into the Euler singularity.
    std::fs::write(d.path().join("flip.txt"), "1.0,0,2.0,0\n").unwrap();
    let out = quadest(d.path(), &["simulate", "--script", "flip.txt", "--out", "t.csv"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(quadest(d.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn config_errors_are_data_errors() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["simulate", "--scenario", "hover", "--duration", "2", "--out", "truth.csv"]);
    ok(d.path(), &["synthesize", "--truth", "truth.csv", "--out", "imu.csv"]);
    std::fs::write(d.path().join("f.cfg"), "k1 = 0.57\nm = 0.42\nsigma_ax = -1\n").unwrap();
    let out = quadest(d.path(), &["estimate", "--imu", "imu.csv", "--config", "f.cfg", "--out", "e.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma_ax"));
}

#[test]
fn drag_on_noise_free_hover_is_near_zero() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(p, &["simulate", "--scenario", "hover", "--duration", "5", "--out", "truth.csv"]);
    std::fs::write(
        p.join("quiet.cfg"),
        "sigma_gx=0\nsigma_gy=0\nsigma_gz=0\nsigma_bgx=0\nsigma_bgy=0\nsigma_bgz=0\n\
         sigma_ax=0\nsigma_ay=0\nsigma_az=0\nbias0_x=0\nbias0_y=0\nbias0_z=0\n",
    )
    .unwrap();
    ok(p, &["synthesize", "--truth", "truth.csv", "--config", "quiet.cfg", "--out", "imu.csv"]);
    ok(p, &["estimate", "--imu", "imu.csv", "--which", "drag", "--out", "drag.csv"]);
    for r in rows(&p.join("drag.csv")) {
        assert!(r[1..7].iter().all(|v| v.abs() < 1e-12), "{r:?}");
    }
}

#[test]
fn generic_velocity_grows_on_biased_log() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(p, &["simulate", "--scenario", "hover", "--duration", "30", "--out", "truth.csv"]);
    ok(p, &["synthesize", "--truth", "truth.csv", "--seed", "4", "--out", "imu.csv"]);
    ok(p, &["estimate", "--imu", "imu.csv", "--which", "generic", "--out", "gen.csv"]);
    let r = rows(&p.join("gen.csv"));
    let speed = |row: &Vec<f64>| row[5].hypot(row[6]);
    let (early, late) = (speed(&r[200]), speed(r.last().unwrap()));
    assert!(late > 1.0 && late > 10.0 * early, "{early} -> {late}");
    assert!(r[0][7].is_nan(), "generic rows carry no covariance");
}

#[test]
fn pipeline_is_byte_identical_across_runs() {
    let run = || {
        let d = tempfile::tempdir().unwrap();
        let p = d.path();
        ok(p, &["simulate", "--scenario", "reversal", "--duration", "12", "--out", "truth.csv"]);
        ok(p, &["synthesize", "--truth", "truth.csv", "--seed", "11", "--out", "imu.csv"]);
        ok(p, &["estimate", "--imu", "imu.csv", "--which", "drag", "--out", "drag.csv"]);
        ok(p, &["estimate", "--imu", "imu.csv", "--which", "generic", "--out", "gen.csv"]);
        ok(p, &["compare", "--truth", "truth.csv", "--a", "drag.csv", "--b", "gen.csv", "--out", "cmp.txt"]);
        ["truth.csv", "imu.csv", "drag.csv", "gen.csv", "cmp.txt"]
            .map(|f| std::fs::read(p.join(f)).unwrap())
    };
    assert!(run() == run());
}

#[test]
fn compare_reports() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(p, &["simulate", "--scenario", "figure8", "--duration", "60", "--out", "truth.csv"]);
    ok(p, &["synthesize", "--truth", "truth.csv", "--seed", "2", "--out", "imu.csv"]);
    ok(p, &["estimate", "--imu", "imu.csv", "--out", "drag.csv"]);
    ok(p, &["estimate", "--imu", "imu.csv", "--which", "generic", "--out", "gen.csv"]);

    let same = ok(p, &["compare", "--truth", "truth.csv", "--a", "drag.csv", "--b", "drag.csv"]);
    let text = String::from_utf8(same.stdout).unwrap();
    for line in text.lines().filter(|l| l.contains("d_")) {
        for tok in line.split_whitespace().filter(|t| t.contains('=')) {
            assert_eq!(tok.split('=').nth(1).unwrap().parse::<f64>().unwrap(), 0.0, "{line}");
        }
    }

    let cmp = ok(p, &["compare", "--truth", "truth.csv", "--a", "drag.csv", "--b", "gen.csv"]);
    let text = String::from_utf8(cmp.stdout).unwrap();
    let value = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key}=")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(value("drag.vtotal.final_rmse") < value("generic.vtotal.final_rmse"));
    let drifts: Vec<&str> = text.lines().filter(|l| l.contains("drift:")).collect();
    assert!(drifts[0].ends_with("drift: bounded") && drifts[1].ends_with("drift: growing"), "{drifts:?}");

    let missing = quadest(p, &["compare", "--truth", "nope.csv", "--a", "drag.csv", "--b", "gen.csv"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn evaluate_and_fit() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(p, &["simulate", "--scenario", "figure8", "--duration", "60", "--out", "truth.csv"]);
    ok(p, &["synthesize", "--truth", "truth.csv", "--seed", "5", "--out", "imu.csv"]);
    ok(p, &["estimate", "--imu", "imu.csv", "--out", "drag.csv"]);
    let ev = ok(p, &["evaluate", "--truth", "truth.csv", "--est", "drag.csv", "--csv", "err.csv"]);
    assert!(String::from_utf8(ev.stdout).unwrap().contains("drag.nees.inside_fraction="));
    let err = rows(&p.join("err.csv"));
    assert_eq!(err.len(), 12001);
    assert!(err.iter().all(|r| r[6] > 0.0 && r[9] > 0.0));

    let fit = ok(p, &["fit", "--imu", "imu.csv", "--truth", "truth.csv"]);
    let k1: f64 = String::from_utf8(fit.stdout)
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix("k1="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((k1 - 0.57).abs() / 0.57 < 0.05, "{k1}");
}

#[test]
fn paper_scenario_preset() {
    let d = tempfile::tempdir().unwrap();
    let out = ok(d.path(), &["paper-scenario", "--out", "run", "--seed", "1"]);
    let run = d.path().join("run");
    for f in ["truth.csv", "imu.csv", "drag.csv", "generic.csv", "comparison.txt", "fit.txt"] {
        assert!(run.join(f).exists(), "{f}");
    }
    assert_eq!(rows(&run.join("truth.csv")).len(), 24001);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("drift: bounded") && text.contains("drift: growing"));
}
