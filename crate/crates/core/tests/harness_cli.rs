use std::fs;

use glmvi::harness::{
    resolve_config, run_cli, run_fig2, run_fig3, run_profiles, Estimator, Experiment, ExperimentConfig,
};
use glmvi::links::ScalarLink;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("glmvi").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn config(experiment: Experiment, pairs: &[(&str, &str)]) -> ExperimentConfig {
    let pairs: Vec<(String, String)> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    resolve_config(experiment, &[], &pairs).unwrap()
}

#[test]
fn profiles_csv_contract() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let (code, _, _) = run(&["profiles", "--out", path.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "link,t,h,R,modulus");
    assert_eq!(lines.count(), 5 * 60);
}

#[test]
fn profile_rows() {
    let table = run_profiles(&config(Experiment::Profiles, &[])).unwrap();
    for r in &table.rows {
        match r.link {
            ScalarLink::Linear => {
                assert!((r.h - r.t).abs() <= 1e-8 && (r.modulus - 1.0).abs() <= 1e-6);
            }
            ScalarLink::Hinge => {
                assert!((r.h - r.t / 2.0).abs() <= 1e-8 && (r.modulus - 0.5).abs() <= 1e-6);
            }
            _ => {}
        }
        assert!(r.h <= r.t + 1e-12);
    }
}

#[test]
fn usage_errors_exit_one() {
    let (code, _, err) = run(&["fig2"]);
    assert_eq!(code, 1);
    assert!(err.contains("--seed"));
    let (code, _, _) = run(&["fig2", "--seed", "1", "--bogus"]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&["nonsense"]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&["fig2", "--seed", "x"]);
    assert_eq!(code, 1);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small run\nseed=3\nn=4\nK=50,100,200\nreplications=1\nlinks=linear\nn_typo=1\n").unwrap();
    let (code, _, err) = run(&["fig2", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("n_typo"));
    fs::write(&cfg, "seed=3\nn=4\nK=50,100,200\nreplications=1\nlinks=linear\n").unwrap();
    let (code, out, _) = run(&["fig2", "--config", cfg.to_str().unwrap(), "--no-timing", "--K", "60,120,240"]);
    assert_eq!(code, 0);
    let ks: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(ks, ["60", "60", "120", "120", "240", "240"]);
}

#[test]
fn same_seed_same_bytes() {
    let args = ["fig2", "--seed", "9", "--no-timing", "--n", "5", "--K", "50,100", "--replications", "2"];
    let (c1, a, _) = run(&args);
    let (c2, b, _) = run(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let mut jobs = args.to_vec();
    jobs.extend(["--jobs", "3"]);
    assert_eq!(run(&jobs).1, a);
}

#[test]
fn replications_do_not_depend_on_each_other() {
    let base = [("seed", "5"), ("n", "5"), ("K", "50,100"), ("links", "linear,hinge"), ("timing", "false")];
    let mut two = base.to_vec();
    two.push(("replications", "2"));
    let mut three = base.to_vec();
    three.push(("replications", "3"));
    let a = run_fig2(&config(Experiment::Fig2, &two)).unwrap();
    let b = run_fig2(&config(Experiment::Fig2, &three)).unwrap();
    let kept: Vec<_> = b.rows.iter().filter(|r| r.replication < 2).cloned().collect();
    assert_eq!(a.rows, kept);
}

#[test]
fn fig2_bookkeeping_and_noiseless_accuracy() {
    let c = config(
        Experiment::Fig2,
        &[("seed", "2"), ("n", "5"), ("K", "200,2000"), ("replications", "3"), ("sigma", "0"), ("links", "linear")],
    );
    let t = run_fig2(&c).unwrap();
    let sa = t.rows.iter().filter(|r| r.estimator == Estimator::Sa).count();
    let saa = t.rows.iter().filter(|r| r.estimator == Estimator::Saa).count();
    assert_eq!((sa, saa), (6, 6));
    for r in t.rows.iter().filter(|r| r.k == 2000) {
        assert!(r.error <= 0.1, "{:?} {}", r.estimator, r.error);
    }
    assert!(t.rows.iter().all(|r| r.error >= 0.0 && r.sq_error >= 0.0));
}

#[test]
fn fig3_rows() {
    let c = config(
        Experiment::Fig3,
        &[("seed", "4"), ("n", "10"), ("K", "200,800"), ("replications", "3"), ("lambda", "0,0.1,1")],
    );
    let t = run_fig3(&c).unwrap();
    assert_eq!(t.rows.len(), 2 * 3 * 3);
    for r in &t.rows {
        let slack = 10.0 * c.tol / r.kappa;
        assert!(r.error <= r.bound.unwrap() + slack);
        if r.experiment == "fig3-lambda0" {
            assert!(r.error <= slack);
        }
    }
    for k in [200, 800] {
        let mean = |id: &str| {
            let v: Vec<f64> = t.rows.iter().filter(|r| r.k == k && r.experiment == id).map(|r| r.error).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean("fig3-lambda0.1") < mean("fig3-lambda1"));
    }
}

#[test]
fn rate_and_estimate_commands() {
    let (code, out, _) = run(&[
        "rate", "--seed", "1", "--n", "5", "--K", "100,400,1600", "--replications", "4", "--links", "linear",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().next().unwrap(), "link,estimator,slope");
    assert_eq!(out.lines().count(), 3);

    let (code, out, _) = run(&["estimate", "--seed", "1", "--n", "4", "--K", "300"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 1 + 2 * 4);

    let (code, _, err) = run(&["estimate", "--seed", "1", "--n", "4", "--K", "300", "--max-iters", "1"]);
    assert_eq!(code, 2);
    assert!(err.contains("did not converge"));
}

#[test]
fn estimate_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("obs.csv");
    let mut text = String::from("y,eta_1,eta_2\n");
    for i in 0..200 {
        let a = ((i * 37) % 17) as f64 / 8.0 - 1.0;
        let b = ((i * 11) % 13) as f64 / 6.0 - 1.0;
        let y = 0.5 * a - 0.25 * b;
        text.push_str(&format!("{y},{a},{b}\n"));
    }
    fs::write(&data, text).unwrap();
    let (code, out, _) = run(&[
        "estimate", "--seed", "1", "--links", "linear", "--sigma", "0", "--data", data.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let saa: Vec<f64> = out
        .lines()
        .filter(|l| l.starts_with("SAA"))
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!((saa[0] - 0.5).abs() < 1e-6 && (saa[1] + 0.25).abs() < 1e-6);
}
