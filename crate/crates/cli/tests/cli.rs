use std::process::{Command, Output};

fn ppvt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppvt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s}"))
}

#[test]
fn sample_ppp_is_reproducible() {
    let a = ppvt(&["sample-ppp", "--intensity", "1", "--window-radius", "5", "--seed", "7"]);
    let b = ppvt(&["sample-ppp", "--intensity", "1", "--window-radius", "5", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("x,y\n"));
    // Poisson(25 pi): mean 78.5, sd 8.9
    let n = text.lines().count() - 1;
    assert!((40..=120).contains(&n), "{n} points");
    for r in rows(&text) {
        let (x, y) = (num(&r[0]), num(&r[1]));
        assert!(x * x + y * y <= 25.0 + 1e-9);
    }
    assert!(!text.contains("\r\n"));
}

#[test]
fn sample_ppp_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pts.csv");
    let o = ppvt(&["sample-ppp", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("x,y\n"));
}

#[test]
fn invalid_values_exit_with_usage_code() {
    let o = ppvt(&["sample-ppp", "--intensity", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("intensity"));
    let o = ppvt(&["coverage", "--gamma", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gamma"));
    let o = ppvt(&["figure"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ppvt(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lemma2_equivalence_passes() {
    let o = ppvt(&["verify-identity", "--identity", "lemma2", "--n-rep", "100000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("identity,field_set,closed_form,mc_mean,mc_stderr,n_rep,pass\n"));
    let r = &rows(&text)[0];
    assert_eq!(r[0], "lemma2");
    assert_eq!(r[3], "1");
    assert_eq!(r[6], "true");
}

#[test]
fn lemma1_suite_passes() {
    let o = ppvt(&["verify-identity", "--identity", "lemma1", "--n-rep", "100000", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let r = rows(&stdout(&o));
    let sets: Vec<&str> = r.iter().map(|x| x[1].as_str()).collect();
    assert_eq!(sets, ["constant", "disk", "gaussian"]);
    assert!(r.iter().all(|x| x[6] == "true" && x[5] == "100000"));
}

#[test]
fn remark_sum_constant_reads_ratio() {
    let o = ppvt(&["verify-identity", "--identity", "remark-sum", "--n-rep", "2000"]);
    let r = rows(&stdout(&o));
    assert_eq!(r[0][0], "remark-sum");
    assert_eq!(r[0][1], "constant");
    assert_eq!(num(&r[0][2]), 10.0);
}

#[test]
fn scalar_commands() {
    let o = ppvt(&["coverage", "--gamma-db", "0", "--mode", "closed"]);
    assert!(o.status.success());
    let v = num(stdout(&o).trim());
    assert!((v - 1.0 / (1.0 + std::f64::consts::FRAC_PI_4)).abs() < 1e-11);
    assert!((v - 0.5601).abs() < 1e-4);

    let o = ppvt(&["mean-ues", "--lambda-u", "10", "--lambda-b", "1", "--mode", "closed"]);
    assert_eq!(stdout(&o), "10\n");

    let o = ppvt(&["bandwidth", "--mode", "closed", "--path-loss-exp", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("e = 4"));

    let o = ppvt(&["coverage", "--mode", "closed", "--gamma-tx", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn monte_carlo_output_is_deterministic() {
    let args = ["bandwidth", "--mode", "mc", "--seed", "3", "--n-rep", "2000"];
    let a = ppvt(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_ppvt"))
        .args(args)
        .env("PPVT_THREADS", "2")
        .output()
        .unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let parts: Vec<f64> = stdout(&a).trim().split(',').map(num).collect();
    assert_eq!(parts.len(), 2);
    assert!(parts[0] > 0.0 && parts[1] > 0.0);

    let o = Command::new(env!("CARGO_BIN_EXE_ppvt"))
        .args(["mean-ues"])
        .env("PPVT_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# scenario\nlambda_u = 20\nlambda_b = 2 # two per m^2\n").unwrap();
    let c = cfg.to_str().unwrap();
    let o = ppvt(&["mean-ues", "--config", c]);
    assert_eq!(stdout(&o), "10\n");
    let o = ppvt(&["mean-ues", "--config", c, "--lambda-u", "6"]);
    assert_eq!(stdout(&o), "3\n");
    std::fs::write(&cfg, "lambda_q = 1\n").unwrap();
    let o = ppvt(&["mean-ues", "--config", c]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lambda_q"));
}

#[test]
fn figure_one_default_grid() {
    let o = ppvt(&["figure", "--figure", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("gamma_db,rate,W_exact,W_approx\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 3 * 51);
    for rate in ["1000", "10000", "100000"] {
        let sel: Vec<&Vec<String>> = r.iter().filter(|x| x[1] == rate).collect();
        assert_eq!(sel.len(), 51);
        for w in sel.windows(2) {
            assert!(num(&w[1][0]) > num(&w[0][0]));
            for col in [2, 3] {
                assert!(num(&w[0][col]) >= 0.0);
                assert!(num(&w[1][col]) <= num(&w[0][col]));
            }
        }
    }
    // R-linearity across rate blocks
    for (lo, hi) in r[..51].iter().zip(&r[51..102]) {
        for col in [2, 3] {
            let (a, b) = (num(&lo[col]), num(&hi[col]));
            assert!((b / (10.0 * a) - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn figure_two_adds_difference() {
    let o = ppvt(&["figure", "--figure", "2", "--rates", "1e4", "--gamma-grid-db", "-20:10:30"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("gamma_db,rate,W_exact,W_approx,diff\n"));
    for r in rows(&text) {
        let d = num(&r[3]) - num(&r[2]);
        assert!((num(&r[4]) - d).abs() <= 1e-9 * d.abs().max(1.0));
    }
}

#[test]
fn figure_simulation_agrees_with_exact_curve() {
    let o = ppvt(&[
        "figure", "--figure", "1", "--rates", "1e4", "--gamma-grid-db", "-20:5:30", "--with-mc", "--n-rep",
        "20000", "--seed", "5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    let agree = r
        .iter()
        .filter(|x| (num(&x[2]) - num(&x[4])).abs() <= 3.0 * num(&x[5]))
        .count();
    let frac = agree as f64 / r.len() as f64;
    assert!(frac >= 0.95, "only {agree} of {} rows within 3 SE\n{}", r.len(), stdout(&o));
}
