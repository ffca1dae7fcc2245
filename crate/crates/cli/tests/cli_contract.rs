//! End-to-end contract tests of the command-line tool: exit codes, file
//! outputs, config validation messages, echo stability, and CSV losslessness.

use std::path::Path;
use std::process::{Command, Output};

use nashseek_cli::commands::metrics_from_csv;
use nashseek_cli::report::SummaryReport;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nashseek"))
}

fn run_bin(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// A small builtin-game config with the given extra sections appended.
fn base_config(extra: &str) -> String {
    format!(
        r#"[game]
kind = "builtin_example"

[player.1]
k = 1.273
b = 0.7
omega_l = 0.9
omega_h = 0.12
omega = "2"
u_hat0 = 0.25

[player.2]
k = 0.9046
b = 0.5
omega_l = 1.5
omega_h = 0.2
omega = "3"
u_hat0 = 0.9
{extra}"#
    )
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn run_writes_csv_and_json_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(
        &cfg,
        &base_config("\n[sim]\nhorizon = 2.0\nstep = 0.001\nsample_stride = 100\n"),
    );
    let out_dir = dir.path().join("out");
    let out = run_bin(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    let csv = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x1,x2,u1,u2,uhat1,uhat2,a1,a2,n1,n2,J1,J2\n"));
    assert_eq!(csv.lines().count(), 1 + 21, "2000 steps at stride 100");

    let summary = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    let report = SummaryReport::from_json(&summary).unwrap();
    assert_eq!(report.command, "run");
    assert_eq!(report.arms.len(), 1);
    assert_eq!(report.arms[0].mode, "wsso");
    assert!(report.frequency_report.as_ref().unwrap().ok);
    assert!(report.arms[0].terminated_early.is_none());
}

#[test]
fn nonpositive_step_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    write(&cfg, &base_config("\n[sim]\nstep = 0.0\n"));
    let out = run_bin(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_of(&out).contains("sim.step"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn unknown_config_field_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.cfg");
    write(&cfg, &base_config("\n[sim]\nhorizn = 5.0\n"));
    let out = run_bin(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_of(&out).contains("horizn"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn decimal_frequency_is_rejected_with_the_exactness_rationale() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dec.cfg");
    write(&cfg, &base_config("").replace("omega = \"2\"", "omega = 2.5"));
    let out = run_bin(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_of(&out).contains("rational"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn resonant_frequencies_refuse_unless_overridden_and_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("resonant.cfg");
    write(
        &cfg,
        &base_config("\n[sim]\nhorizon = 1.0\nstep = 0.001\nsample_stride = 100\n")
            .replace("omega = \"3\"", "omega = \"4/1\""),
    );
    let out_dir = dir.path().join("out");

    let gated = run_bin(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(gated.status.code(), Some(2));
    assert!(
        stderr_of(&gated).contains("allow-frequency-violations"),
        "stderr: {}",
        stderr_of(&gated)
    );

    let forced = run_bin(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--allow-frequency-violations",
        "--quiet",
    ]);
    assert_eq!(forced.status.code(), Some(0), "stderr: {}", stderr_of(&forced));
    let report = SummaryReport::from_json(
        &std::fs::read_to_string(out_dir.join("summary.json")).unwrap(),
    )
    .unwrap();
    let freq = report.frequency_report.unwrap();
    assert!(!freq.ok);
    assert_eq!(freq.violations.len(), 1);
    assert!(report
        .warnings
        .iter()
        .any(|w| w.contains("override active")));
}

#[test]
fn rerunning_the_echoed_config_reproduces_outputs_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("first.cfg");
    let out_dir = dir.path().join("out");
    write(
        &cfg,
        &base_config(&format!(
            "\n[sim]\nhorizon = 5.0\nstep = 0.001\nsample_stride = 50\n\n\
             [outputs]\ndir = \"{}\"\n\n[metrics]\nu_star = [0.390625, 0.625]\n",
            out_dir.display()
        )),
    );
    let first = run_bin(&["run", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(first.status.code(), Some(0), "stderr: {}", stderr_of(&first));
    let csv1 = std::fs::read(out_dir.join("trajectory.csv")).unwrap();
    let summary1 = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();

    let echo = SummaryReport::from_json(&summary1)
        .unwrap()
        .config_echo
        .expect("run reports its config echo");
    let echo_cfg = dir.path().join("echo.cfg");
    write(&echo_cfg, &echo);
    let second = run_bin(&["run", "--config", echo_cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(second.status.code(), Some(0), "stderr: {}", stderr_of(&second));

    let csv2 = std::fs::read(out_dir.join("trajectory.csv")).unwrap();
    let summary2 = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    assert_eq!(csv1, csv2, "trajectory must be byte-identical");
    assert_eq!(summary1, summary2, "summary must be byte-identical");
}

#[test]
fn csv_reread_reproduces_json_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.cfg");
    let out_dir = dir.path().join("out");
    write(
        &cfg,
        &base_config(
            "\n[sim]\nhorizon = 8.0\nstep = 0.001\nsample_stride = 20\n\n\
             [metrics]\nu_star = [0.390625, 0.625]\nj_star = [0.152587890625, 0.48828125]\n",
        ),
    );
    let out = run_bin(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    let report = SummaryReport::from_json(
        &std::fs::read_to_string(out_dir.join("summary.json")).unwrap(),
    )
    .unwrap();
    let want = report.arms[0].metrics.as_ref().unwrap();

    let csv_text = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let got = metrics_from_csv(&csv_text, &want.u_star, &want.j_star, want.epsilon).unwrap();

    let tol = 1e-12;
    match (got.settling_time, want.metrics.settling_time) {
        (Some(a), Some(b)) => assert!((a - b).abs() <= tol),
        (None, None) => {}
        other => panic!("settling_time mismatch: {other:?}"),
    }
    assert!((got.final_error - want.metrics.final_error).abs() <= tol);
    assert!((got.payoff_error - want.metrics.payoff_error).abs() <= tol);
    for i in 0..2 {
        assert!(
            (got.residual_oscillation[i] - want.metrics.residual_oscillation[i]).abs() <= tol
        );
        assert!((got.final_amplitude[i] - want.metrics.final_amplitude[i]).abs() <= tol);
    }
}

#[test]
fn early_termination_exits_three_with_the_reason_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("early.cfg");
    // Player 1 starts below its admissible interval, so the run stops at the
    // first bounds check.
    write(
        &cfg,
        &base_config("\n[sim]\nhorizon = 1.0\nstep = 0.001\nsample_stride = 10\n")
            .replace("u_hat0 = 0.25", "u_hat0 = -0.5"),
    );
    let out_dir = dir.path().join("out");
    let out = run_bin(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    let report = SummaryReport::from_json(
        &std::fs::read_to_string(out_dir.join("summary.json")).unwrap(),
    )
    .unwrap();
    let term = report.arms[0].terminated_early.as_ref().unwrap();
    assert!(
        term.reason.contains("admissible interval"),
        "reason: {}",
        term.reason
    );
}

#[test]
fn epsilon_flag_without_metrics_section_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("noeps.cfg");
    write(&cfg, &base_config("\n[sim]\nhorizon = 1.0\n"));
    let out = run_bin(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--epsilon",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("[metrics]"), "stderr: {}", stderr_of(&out));
}

#[test]
fn compare_emits_both_arms_a_ratio_and_the_tail_window_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cmp.cfg");
    let out_dir = dir.path().join("out");
    // horizon 12 < 10 * (2 pi / 2): short enough to trip the tail-window
    // guard, long enough that the classical arm stays inside its bounds.
    write(
        &cfg,
        &base_config(
            "\n[sim]\nhorizon = 12.0\nstep = 0.001\nsample_stride = 20\n\n\
             [metrics]\nu_star = [0.390625, 0.625]\n",
        ),
    );
    let out = run_bin(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(out_dir.join("trajectory_wsso.csv").exists());
    assert!(out_dir.join("trajectory_classical.csv").exists());

    let report = SummaryReport::from_json(
        &std::fs::read_to_string(out_dir.join("summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report.command, "compare");
    assert_eq!(report.arms.len(), 2);
    assert_eq!(report.arms[0].mode, "wsso");
    assert_eq!(report.arms[1].mode, "classical");
    let ratio = report.oscillation_ratio.as_ref().unwrap();
    assert_eq!(ratio.len(), 2);
    assert!(ratio.iter().all(|r| r.is_some()));
    assert!(
        report
            .warnings
            .iter()
            .any(|w| w.contains("tail window shorter than one perturbation period")),
        "warnings: {:?}",
        report.warnings
    );
    // Both arms carry full metrics for the same reference point.
    for arm in &report.arms {
        let m = arm.metrics.as_ref().unwrap();
        assert_eq!(m.u_star, vec![0.390625, 0.625]);
    }
}

#[test]
fn verify_ne_exit_codes_cover_accept_reject_and_nonstationary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("v.cfg");
    write(
        &cfg,
        &base_config("\n[metrics]\nu_star = [0.390625, 0.625]\n"),
    );
    let cfg = cfg.to_str().unwrap();

    let stable = run_bin(&["verify-ne", "--config", cfg, "--quiet"]);
    assert_eq!(stable.status.code(), Some(0), "stderr: {}", stderr_of(&stable));
    let report = SummaryReport::from_json(&stdout_of(&stable)).unwrap();
    let s = report.stability.unwrap();
    assert!(s.accepted && s.stationary && s.hurwitz_by_gershgorin);

    let unstable = run_bin(&[
        "verify-ne", "--config", cfg, "--u-star", "0.015625,0.125", "--quiet",
    ]);
    assert_eq!(unstable.status.code(), Some(4));
    let s = SummaryReport::from_json(&stdout_of(&unstable))
        .unwrap()
        .stability
        .unwrap();
    assert!(s.stationary, "the second candidate is a true stationary point");
    assert_eq!(s.row_dominant, vec![true, false]);

    let origin = run_bin(&["verify-ne", "--config", cfg, "--u-star", "0,0", "--quiet"]);
    assert_eq!(origin.status.code(), Some(4));
    let s = SummaryReport::from_json(&stdout_of(&origin))
        .unwrap()
        .stability
        .unwrap();
    assert!(!s.stationary);
    assert!((s.grad_norm - 0.15625).abs() < 1e-4);

    let outside = run_bin(&[
        "verify-ne", "--config", cfg, "--u-star", "-1,0", "--quiet",
    ]);
    assert_eq!(outside.status.code(), Some(2));
    assert!(stderr_of(&outside).contains("admissible"));
}

#[test]
fn verify_ne_reports_unverifiable_when_the_plant_cannot_settle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("blowup.cfg");
    // x' = x^2 + u has no settled state for u > 0: probes near u = 1 diverge.
    write(
        &cfg,
        r#"[game]
kind = "polynomial"
state_dim = 1

[[game.dynamics]]
terms = [{ exps = [2, 0], coeff = 1.0 }, { exps = [0, 1], coeff = 1.0 }]

[[game.payoffs]]
terms = [{ exps = [1, 0], coeff = -1.0 }]

[player.1]
k = 0.5
b = 0.5
omega_l = 1.0
omega_h = 0.1
omega = "2"
u_hat0 = 1.0

[metrics]
u_star = [1.0]
"#,
    );
    let out = run_bin(&["verify-ne", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(5), "stderr: {}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("unverifiable"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn check_freqs_exit_codes() {
    let ok = run_bin(&["check-freqs", "2", "3", "11"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout_of(&ok).contains("\"ok\": true"));

    let bad = run_bin(&["check-freqs", "2", "4"]);
    assert_eq!(bad.status.code(), Some(4));
    assert!(stdout_of(&bad).contains("\"ok\": false"));

    let unparsable = run_bin(&["check-freqs", "2", "abc"]);
    assert_eq!(unparsable.status.code(), Some(2));
    assert!(stderr_of(&unparsable).contains("abc"));
}

#[test]
fn avg_integrals_exit_codes_and_table_shape() {
    let ok = run_bin(&["avg-integrals", "--freqs", "2,3"]);
    assert_eq!(ok.status.code(), Some(0));
    let text = stdout_of(&ok);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("integrand,measured,expected,abs_error"));
    assert_eq!(lines.count(), 14, "two players have 14 moment rows");

    let violation = run_bin(&[
        "avg-integrals", "--freqs", "2,4", "--phases", "0,1",
    ]);
    assert_eq!(violation.status.code(), Some(4));
    assert!(stderr_of(&violation).contains("exceeds 1e-6"));

    let invalid = run_bin(&["avg-integrals", "--freqs", "0,3"]);
    assert_eq!(invalid.status.code(), Some(2));
}

#[test]
fn classical_mode_flag_selects_the_fixed_amplitude_arm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cls.cfg");
    let out_dir = dir.path().join("out");
    write(
        &cfg,
        &base_config("\n[sim]\nhorizon = 2.0\nstep = 0.001\nsample_stride = 100\n"),
    );
    let out = run_bin(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--mode",
        "classical",
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let report = SummaryReport::from_json(
        &std::fs::read_to_string(out_dir.join("summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report.arms[0].mode, "classical");
    // The fixed-amplitude arm never moves its probing amplitude.
    assert_eq!(report.arms[0].final_amplitudes, vec![0.2, 0.2]);
}
