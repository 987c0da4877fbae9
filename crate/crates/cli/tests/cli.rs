use std::path::PathBuf;
use std::process::Command;

use teleportsim_cli::{parse_config, sweep, Axis, CliError, Mode, Phi, CSV_HEADER};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_teleportsim"));
    c.env("TELEPORTSIM_THREADS", "1");
    c
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("teleportsim-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

#[test]
fn parses_all_keys() {
    let text = "\
# comment line
squeezing_db = 3        # trailing comment
epr.by_db = 2.5
feedforward.phi = unity
feedforward.phi_y = 1.2
mbnla.gain = 1.3
mbnla.alpha_c = 5
efficiency = 0.9
input.mean_x = 2
input.mean_y = -1
input.var_x = 1.5
input.var_y = 1
mode = mc
mc.trials = 5000
seed = 17
choi.r = 1.5
sweep.axis = r_db
sweep.start = 1
sweep.stop = 5
sweep.steps = 3
output = out.csv
";
    let c = parse_config(text, "t").unwrap();
    assert_eq!(c.squeezing_db, [3.0, 3.0, 3.0, 2.5]);
    assert_eq!(c.phi_x, Phi::Unity);
    assert_eq!(c.phi_y, Phi::Value(1.2));
    assert_eq!((c.g, c.alpha_c, c.efficiency), (1.3, 5.0, 0.9));
    assert_eq!(c.input_mean, [2.0, -1.0]);
    assert_eq!(c.input_var, [1.5, 1.0]);
    assert_eq!((c.mode, c.trials, c.seed, c.r_choi), (Mode::MonteCarlo, 5000, 17, 1.5));
    let s = c.sweep.unwrap();
    assert_eq!((s.axis, s.steps), (Axis::RDb, 3));
    assert_eq!(s.values(), vec![1.0, 3.0, 5.0]);
    assert_eq!(c.output.unwrap(), PathBuf::from("out.csv"));
}

#[test]
fn parse_errors_carry_line_numbers() {
    for (text, line) in [
        ("squeezing_db = 3\nnot a pair\n", 2),
        ("\n\nbogus.key = 1\n", 3),
        ("mbnla.gain = one\n", 1),
        ("seed = 1\nseed = 2\n", 2),
        ("mode = fast\n", 1),
        ("sweep.axis = g\nsweep.start = 1\n", 1),
    ] {
        match parse_config(text, "cfg") {
            Err(e @ CliError::Parse { .. }) => {
                assert!(e.to_string().starts_with(&format!("cfg:{line}:")), "{e}");
                assert_eq!(e.exit_code(), 2);
            }
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn unity_feedforward_tracks_gain() {
    let c = parse_config("squeezing_db = 3\nfeedforward.phi = unity\nmbnla.gain = 1.4\n", "t").unwrap();
    let tc = c.teleporter().unwrap();
    let m = teleportsim::teleporter::output_moments(&tc).unwrap();
    assert!((m.mean_x - 1.0).abs() < 1e-12 && (m.mean_y - 1.0).abs() < 1e-12);
}

#[test]
fn two_step_sweep_has_two_rows() {
    let c = parse_config(
        "sweep.axis = phi\nsweep.start = 0.5\nsweep.stop = 1.5\nsweep.steps = 2\n",
        "t",
    )
    .unwrap();
    let mut out = Vec::new();
    sweep(&c, None, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], CSV_HEADER.join(","));
    assert!(lines[1].starts_with("0,5.00000000000e-1,"));
    assert!(lines[2].starts_with("1,1.50000000000e0,"));
}

#[test]
fn invalid_sweeps_are_config_errors() {
    for text in [
        "sweep.axis = g\nsweep.start = 1\nsweep.stop = 2\nsweep.steps = 1\n",
        "sweep.axis = g\nsweep.start = 0.5\nsweep.stop = 2\nsweep.steps = 3\n",
        "mode = mc\nmc.trials = 50\nsweep.axis = g\nsweep.start = 1\nsweep.stop = 2\nsweep.steps = 3\n",
        "sweep.axis = g\nsweep.start = 1\nsweep.stop = inf\nsweep.steps = 3\n",
    ] {
        let c = parse_config(text, "t").unwrap();
        let err = sweep(&c, None, Vec::new()).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{text:?}: {err}");
    }
}

#[test]
fn zero_accepted_step_leaves_empty_cells() {
    let text = "squeezing_db = 3\nmbnla.gain = 40\nmbnla.alpha_c = 6\nmode = mc\nmc.trials = 200\n\
                sweep.axis = g\nsweep.start = 40\nsweep.stop = 41\nsweep.steps = 2\n";
    let c = parse_config(text, "t").unwrap();
    let mut out = Vec::new();
    sweep(&c, Some(1), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.len(), CSV_HEADER.len());
    assert_eq!(row[13], "0");
    assert!(row[2..12].iter().all(|c| c.is_empty()), "{row:?}");
    assert!(row[16].contains("no accepted trials"));
}

#[test]
fn channel_map_examples() {
    let run = |args: &[&str]| {
        let out = bin().arg("channel-map").args(args).output().unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    assert!(run(&["--tau", "1", "--nu", "0"]).contains("class     Identity"));
    let amp = run(&["--tau", "2", "--nu", "1"]);
    assert!(amp.contains("class     PureAmplifier") && amp.contains("chi       1.000000"));
    let np = run(&["--tau", "1.5", "--nu", "0.2"]);
    assert!(np.contains("class     NonPhysical") && np.contains("physical  false"));
}

#[test]
fn exit_codes() {
    let bad = scratch("bad.cfg", "squeezing_db = 3\nfeedforward.phi = ???\n");
    let out = bin().args(["simulate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));

    let missing = bin()
        .args(["simulate", "--config", "/nonexistent/x.cfg"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let out = bin()
        .args(["channel-map", "--tau", "-1", "--nu", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let good = scratch("good.cfg", "squeezing_db = 3\n");
    let out = bin().args(["simulate", "--config"]).arg(&good).output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    let unwritable = bin()
        .args(["sweep", "--config"])
        .arg(scratch(
            "sw.cfg",
            "sweep.axis = phi\nsweep.start = 1\nsweep.stop = 2\nsweep.steps = 2\n",
        ))
        .args(["--out", "/nonexistent/dir/out.csv"])
        .output()
        .unwrap();
    assert_eq!(unwritable.status.code(), Some(3));
}

#[test]
fn simulate_reports_unity_gain_channel() {
    let cfg = scratch("unity.cfg", "squeezing_db = 3\nfeedforward.phi = unity\n");
    let out = bin().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("channel          AdditiveNoise"), "{text}");
    for field in ["fidelity", "T_q, V_q", "tau, nu", "p_success", "E_F(Choi)"] {
        assert!(text.contains(field), "{field} missing");
    }
}

#[test]
fn monte_carlo_simulate_agrees_with_analytic_at_unit_gain() {
    let c = parse_config("squeezing_db = 3\nmode = mc\nmc.trials = 400000\nseed = 5\n", "t").unwrap();
    let analytic = teleportsim_cli::run::evaluate_analytic(&c).unwrap();
    let mc = teleportsim_cli::run::evaluate_mc(&c, Some(1)).unwrap();
    let (a, m) = (analytic.channel.unwrap(), mc.channel.unwrap());
    assert!((a.tau - m.tau).abs() < 4.0 * mc.tau_err.unwrap());
    assert!((a.nu - m.nu).abs() < 4.0 * mc.nu_err.unwrap());
    assert_eq!(mc.n_accepted, Some(400_000));
}

#[test]
fn sweep_bytes_are_reproducible() {
    let cfg = scratch(
        "det.cfg",
        "squeezing_db = 3\nmode = mc\nmc.trials = 100000\nseed = 9\nsweep.axis = g\nsweep.start = 1\nsweep.stop = 1.2\nsweep.steps = 3\n",
    );
    let run = |threads: &str| {
        let out = bin()
            .env("TELEPORTSIM_THREADS", threads)
            .args(["sweep", "--config"])
            .arg(&cfg)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let a = run("1");
    assert_eq!(a, run("1"));
    assert_eq!(a, run("3"));
}
