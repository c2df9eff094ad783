use std::path::Path;
use std::process::{Command, Output};

fn twi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twi"))
        .args(args)
        .env_remove("TWI_OUT_DIR")
        .env_remove("TWI_THREADS")
        .output()
        .expect("run twi")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing in {text}"))
        .parse()
        .unwrap()
}

fn csv_column(text: &str, col: usize) -> Vec<f64> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

const FIG5: &str = "m_max = 9\nn_max = 7\nsensor.2.gamma = 4\n";

#[test]
fn cdf_at_support_end_is_one() {
    let o = twi(&[
        "analytic", "--dist", "comp", "--query", "cdf", "--at", "0.49",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "t_s,cdf\n0.49,1\n");
}

#[test]
fn propagation_psv_column_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "b.cfg", "v_mps = 300\nc_max_ms = 100\n");
    let o = twi(&[
        "--config",
        &cfg,
        "analytic",
        "--dist",
        "prop",
        "--query",
        "psv",
        "--grid",
        "0:0.4:0.01",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sigma = csv_column(&stdout(&o), 1);
    assert_eq!(sigma.len(), 41);
    assert_eq!(sigma[0], 1.0);
    assert!(sigma.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn malformed_key_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "bad.cfg",
        "# comment\nv_mps = 300\nd_maximum_m = 4\n",
    );
    let o = twi(&["--config", &cfg, "analytic", "--at", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn design_for_fig5_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "f5.cfg", FIG5);
    let csv = dir.path().join("design.csv");
    let o = twi(&[
        "--config",
        &cfg,
        "design-twi",
        "--target-sigma",
        "1e-3",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!((value(&text, "W_star_s") - 0.47509).abs() < 1e-5);
    assert_eq!(value(&text, "W_frame_s"), 0.48);
    assert!((value(&text, "rho2") - 7.394e-5).abs() < 1e-8);
    assert!(value(&text, "sigma_W_frame") <= 1e-3);
    let written = std::fs::read_to_string(csv).unwrap();
    assert!(
        written.starts_with("target_sigma,rho2,W_star_s,W_frame_s,sigma_W_star,sigma_W_frame\n")
    );
}

#[test]
fn infeasible_target_exits_4_with_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "f5.cfg", FIG5);
    let o = twi(&["--config", &cfg, "design-twi", "--target-sigma", "1e-5"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("rho2 = 7.39"), "{}", stderr(&o));
}

#[test]
fn lossless_unit_span_design() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "ideal.cfg",
        "c_min_s = 0\nc_max_s = 1\nsensor.2.perfect_detection = true\nsensor.2.perfect_transmission = true\n",
    );
    let o = twi(&["--config", &cfg, "design-twi", "--target-sigma", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let w = value(&stdout(&o), "W_star_s");
    assert!((w - (1.0 - 0.5f64.sqrt())).abs() < 1e-8, "{w}");
}

#[test]
fn domain_error_exits_3() {
    let o = twi(&["design-twi", "--target-sigma", "0"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn simulate_is_deterministic_and_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "f5.cfg", FIG5);
    let run = |out: &str, cfg: &str| {
        let o = twi(&[
            "--config",
            cfg,
            "simulate",
            "--replications",
            "1",
            "--seed",
            "7",
            "--w",
            "0.1,0.2",
            "--out-dir",
            out,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    run(a.to_str().unwrap(), &cfg);
    run(b.to_str().unwrap(), &cfg);
    let echoed = a.join("config_resolved.txt");
    run(c.to_str().unwrap(), echoed.to_str().unwrap());
    for name in [
        "config_resolved.txt",
        "pdv_samples.csv",
        "psv.csv",
        "latency.csv",
        "drops.csv",
        "summary.csv",
    ] {
        let x = std::fs::read(a.join(name)).unwrap();
        assert_eq!(x, std::fs::read(b.join(name)).unwrap(), "{name}");
        assert_eq!(x, std::fs::read(c.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn signal_level_and_statistical_modes_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "s.cfg",
        "m_max = 5\nn_max = 5\nsensor.2.gamma = 4\n",
    );
    let mut rates = Vec::new();
    for mode in ["statistical", "signal_level"] {
        let out = dir.path().join(mode);
        let o = twi(&[
            "--config",
            &cfg,
            "simulate",
            "--replications",
            "100000",
            "--mode",
            mode,
            "--w",
            "0.1",
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let drops = std::fs::read_to_string(out.join("drops.csv")).unwrap();
        let row: Vec<f64> = drops
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        rates.push(row);
    }
    // Columns: sr_attempts, zeta_hat and epsilon_hat at 1, 7 and 8.
    let zeta = rates[0][9];
    let eps = rates[0][10];
    for r in &rates {
        let sd_z = (zeta * (1.0 - zeta) / r[1]).sqrt();
        let sd_e = (eps * (1.0 - eps) / r[3]).sqrt();
        assert!((r[7] - zeta).abs() < 3.0 * sd_z, "zeta {} vs {zeta}", r[7]);
        assert!((r[8] - eps).abs() < 3.0 * sd_e, "eps {} vs {eps}", r[8]);
    }
}

#[test]
fn reproduce_writes_pdv_and_design_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = twi(&[
        "reproduce",
        "fig3a",
        "--replications",
        "20000",
        "--out-dir",
        out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("KS distance"));
    assert!(dir.path().join("pdv_fig3a.csv").exists());
    assert!(dir.path().join("plot_fig3a.gp").exists());

    let o = twi(&[
        "reproduce",
        "fig5a",
        "--replications",
        "20000",
        "--out-dir",
        out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let design = std::fs::read_to_string(dir.path().join("design_fig5a.csv")).unwrap();
    assert!(design.starts_with("setup_id,W_star_s,W_frame_s,mean_latency_s,std_latency_s\n"));
    assert_eq!(design.lines().count(), 6);
}

#[test]
fn unknown_figure_lists_valid_names() {
    let o = twi(&["reproduce", "fig9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fig3a, fig3b, fig4a, fig4b, fig5a, fig5b, custom"));
}

#[test]
fn unwritable_output_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = twi(&[
        "simulate",
        "--replications",
        "10",
        "--w",
        "0.1",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("file"), "{}", stderr(&o));
}

#[test]
fn missing_config_exits_5() {
    let o = twi(&[
        "--config",
        "/nonexistent/twi.cfg",
        "analytic",
        "--at",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_twi"))
        .args(["simulate", "--replications", "5", "--w", "0.1"])
        .env("TWI_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("psv.csv").exists());
}
