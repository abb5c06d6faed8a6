use std::path::Path;
use std::process::{Command, Output};

use qrev::channel::{channel_distance, generalized_depolarizing, KrausChannel, PauliLabel};
use qrev::io::{channel_from_json_slice, result_from_json_slice};
use qrev::qstate::BellWeights;
use qrev::reversal::{avg_fidelity_quadrature, optimize_reversal, Objective, OptimizeOptions};
use qrev::teleport::{all_t_operators, imperfect_scheme, induced_channel};

fn qrev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrev"))
        .args(args)
        .env_remove("QREV_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = qrev(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = qrev(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(
        err.trim_end().lines().count(),
        1,
        "diagnostic is one line: {err:?}"
    );
    err
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

fn read_channel(p: &str) -> KrausChannel {
    channel_from_json_slice(&std::fs::read(p).unwrap())
        .unwrap()
        .channel
}

#[test]
fn teleport_perfect_bell_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "e.json");
    let report = ok(&[
        "teleport",
        "--scheme",
        "bell",
        "--q",
        "1,0,0,0",
        "--outcome",
        "1",
        "--out",
        &out,
    ]);
    assert!(report.contains("mean_outcome_probability: 2.5"));
    let ch = read_channel(&out).scaled(2.0);
    assert!(channel_distance(&ch, &KrausChannel::identity()) < 1e-12);
}

#[test]
fn teleport_bell_is_generalized_depolarizing() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "e.json");
    ok(&[
        "teleport",
        "--scheme",
        "bell",
        "--q",
        "0.7,0.1,0.1,0.1",
        "--outcome",
        "1",
        "--out",
        &out,
    ]);
    let expected = generalized_depolarizing(&BellWeights::new([0.7, 0.1, 0.1, 0.1]).unwrap());
    assert!(channel_distance(&read_channel(&out).scaled(2.0), &expected) < 1e-12);
}

#[test]
fn teleport_imperfect_reports_trace_decrease() {
    let stdout = ok(&[
        "teleport",
        "--scheme",
        "imperfect",
        "--mu",
        "0.7854",
        "--outcome",
        "1",
    ]);
    let doc = channel_from_json_slice(stdout.as_bytes()).unwrap();
    assert!(stdout.contains("\"trace_preserving\": false"));
    assert!(doc.channel.trace_deviation() > 0.1);
    assert_eq!(doc.outcome, Some(1));
}

#[test]
fn reverse_examples() {
    assert_eq!(
        ok(&["reverse", "--scheme", "bell", "--q", "0.7,0.1,0.1,0.1"]),
        "0.800000000000\n"
    );
    assert_eq!(
        ok(&["reverse", "--scheme", "bell", "--q", "0.25,0.25,0.25,0.25"]),
        "0.500000000000\n"
    );
    for method in ["analytic", "grid", "multistart"] {
        let dir = tempfile::tempdir().unwrap();
        let out = path(dir.path(), "r.json");
        let f = ok(&[
            "reverse", "--scheme", "bell", "--q", "0,1,0,0", "--method", method, "--out", &out,
        ]);
        assert_eq!(f, "1.000000000000\n", "method {method}");
        let result = result_from_json_slice(&std::fs::read(&out).unwrap()).unwrap();
        assert!(channel_distance(&result.channel, &KrausChannel::pauli(PauliLabel::Z)) < 1e-8);
    }
}

#[test]
fn round_trip_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let channel = path(dir.path(), "e.json");
    let result = path(dir.path(), "r.json");
    ok(&[
        "teleport",
        "--scheme",
        "imperfect",
        "--mu",
        "1.2",
        "--out",
        &channel,
    ]);
    let printed: f64 = ok(&["reverse", "--channel", &channel, "--out", &result])
        .trim()
        .parse()
        .unwrap();

    let scheme = imperfect_scheme(1.2).unwrap();
    let direct = optimize_reversal(
        &all_t_operators(&scheme).unwrap(),
        Objective::PerOutcome(1),
        &OptimizeOptions::default(),
    )
    .unwrap();
    assert!((printed - direct.avg_fidelity).abs() < 1e-12);

    let e1 = induced_channel(&scheme, 1).unwrap();
    let w = e1.mean_outcome_probability;
    let quad = avg_fidelity_quadrature(&[e1], std::slice::from_ref(&direct.channel)).unwrap() / w;
    for oracle in ["analytic", "quadrature"] {
        let f: f64 = ok(&[
            "fidelity",
            "--channel",
            &channel,
            "--reversal",
            &result,
            "--oracle",
            oracle,
        ])
        .trim()
        .parse()
        .unwrap();
        assert!((f - quad).abs() < 1e-12, "{oracle}: {f} vs {quad}");
    }
}

#[test]
fn fidelity_identity_pair_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let id = path(dir.path(), "id.json");
    std::fs::write(&id, qrev::io::channel_to_json(&KrausChannel::identity())).unwrap();
    for oracle in ["analytic", "quadrature", "mc"] {
        let out = ok(&[
            "fidelity",
            "--channel",
            &id,
            "--reversal",
            &id,
            "--oracle",
            oracle,
            "--samples",
            "1000",
        ]);
        let value: f64 = out.split_whitespace().next().unwrap().parse().unwrap();
        assert!((value - 1.0).abs() < 1e-12, "{oracle}: {out}");
    }
}

#[test]
fn monte_carlo_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let channel = path(dir.path(), "e.json");
    let reversal = path(dir.path(), "r.json");
    ok(&[
        "teleport",
        "--scheme",
        "imperfect",
        "--mu",
        "0.9",
        "--out",
        &channel,
    ]);
    ok(&["reverse", "--channel", &channel, "--out", &reversal]);
    let args = [
        "fidelity",
        "--channel",
        &channel,
        "--reversal",
        &reversal,
        "--oracle",
        "mc",
        "--samples",
        "5000",
        "--seed",
        "42",
    ];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    assert_eq!(a.split_whitespace().count(), 2);

    let from_env = Command::new(env!("CARGO_BIN_EXE_qrev"))
        .args(&args[..9])
        .env("QREV_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(from_env.stdout).unwrap(), a);
}

#[test]
fn fidelity_over_whole_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let id = path(dir.path(), "id.json");
    std::fs::write(&id, qrev::io::channel_to_json(&KrausChannel::identity())).unwrap();
    let f: f64 = ok(&[
        "fidelity",
        "--scheme",
        "bell",
        "--q",
        "1,0,0,0",
        "--reversal",
        &id,
    ])
    .trim()
    .parse()
    .unwrap();
    // only the Φ⁺ outcome is restored by the identity
    assert!((f - 0.5).abs() < 1e-12, "{f}");
}

#[test]
fn sweep_mu_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = path(dir.path(), "sweep.csv");
    let summary = ok(&[
        "sweep-mu",
        "--from",
        "0",
        "--to",
        "1.5707963267948966",
        "--steps",
        "9",
        "--csv",
        &csv_path,
    ]);
    assert!(summary.starts_with("max_gap: "));
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(
        reader.headers().unwrap(),
        vec!["mu", "w1", "f_unitary", "f_extremal", "gap"]
    );
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));
    assert!(rows[0][4] <= 1e-9);
    assert!(rows.iter().all(|r| r[4] >= -1e-10));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let digits = text.lines().nth(1).unwrap().split(',').nth(2).unwrap();
    assert!(
        digits
            .trim_start_matches('-')
            .split('e')
            .next()
            .unwrap()
            .len()
            >= 13
    );
}

#[test]
fn channel_info_reports() {
    let out = ok(&["channel-info", "--scheme", "bell", "--q", "0.7,0.1,0.1,0.1"]);
    assert!(out.contains("completely_positive: true"));
    assert!(out.contains("trace_preserving: false"));
    assert!(out.contains("choi_eigenvalues: ["));
    assert!(out.contains("bloch_row_z: ["));
    let out = ok(&["channel-info", "--scheme", "imperfect", "--mu", "0.5"]);
    assert!(out.contains("bloch_form: none"));
}

#[test]
fn bad_invocations_fail_with_one_line() {
    assert!(fails(&["teleport", "--scheme", "bell"]).contains("--q"));
    fails(&["teleport", "--scheme", "bell", "--q", "0.5,0.5,0.5,0.5"]);
    fails(&["teleport", "--scheme", "imperfect", "--mu", "2"]);
    fails(&[
        "teleport",
        "--scheme",
        "bell",
        "--q",
        "1,0,0,0",
        "--outcome",
        "5",
    ]);
    fails(&[
        "teleport",
        "--scheme",
        "bell",
        "--q",
        "1,0,0,0",
        "--scheme-file",
        "x.json",
    ]);
    fails(&["sweep-mu", "--from", "1", "--to", "0.5"]);
    fails(&["sweep-mu", "--steps", "1"]);
    fails(&["reverse", "--channel", "/nonexistent/channel.json"]);
    fails(&[
        "reverse",
        "--scheme",
        "imperfect",
        "--mu",
        "0.5",
        "--method",
        "analytic",
    ]);
}

#[test]
fn vanishing_normalization_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let zero = path(dir.path(), "zero.json");
    let id = path(dir.path(), "id.json");
    std::fs::write(
        &zero,
        qrev::io::channel_to_json(&KrausChannel::identity().scaled(0.0)),
    )
    .unwrap();
    std::fs::write(&id, qrev::io::channel_to_json(&KrausChannel::identity())).unwrap();
    assert!(fails(&["fidelity", "--channel", &zero, "--reversal", &id]).contains("annihilates"));
}
