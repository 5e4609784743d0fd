use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = "\
# small run
[task]
d = 3
n_ues = 4
samples_per_ue = 6
[algorithm]
variant = sfwfl
rounds = 30
[run]
trials = 2
g_probes = 20
l_probes = 100
";

fn sfwfl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfwfl"))
        .args(args)
        .env_remove("SFWFL_SEED")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn speedup_prints_five() {
    let out = sfwfl(&["speedup", "--M", "5", "--D", "4", "--tau-l", "0", "--tau-g", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "5.0");
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(sfwfl(&[]).status.code(), Some(1));
    assert_eq!(sfwfl(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(sfwfl(&["speedup", "--M", "x", "--D", "1"]).status.code(), Some(1));
    assert_eq!(sfwfl(&["--help"]).status.code(), Some(0));
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_alpha = write_config(dir.path(), "a.cfg", &format!("{CONFIG}[channel]\nalpha = 0.9\n"));
    let out = sfwfl(&["run", &bad_alpha]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));

    let no_latency = write_config(dir.path(), "b.cfg", &CONFIG.replace("variant = sfwfl", "variant = zero_wait"));
    assert_eq!(sfwfl(&["run", &no_latency]).status.code(), Some(2));

    let unknown = write_config(dir.path(), "c.cfg", &format!("{CONFIG}bogus = 1\n"));
    assert_eq!(sfwfl(&["run", &unknown]).status.code(), Some(2));
}

#[test]
fn run_writes_csv_to_out_or_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "r.cfg", CONFIG);
    let printed = sfwfl(&["run", &cfg]);
    assert_eq!(printed.status.code(), Some(0));
    let text = stdout(&printed);
    assert!(text.starts_with("round,wall_units,err_alpha,err_l2,loss,lemma3_lhs,lemma3_rhs,bound_value\n"));
    assert_eq!(text.lines().count(), 31);

    let out = dir.path().join("r.csv");
    assert_eq!(sfwfl(&["run", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), text);
}

#[test]
fn seed_variable_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", &format!("{CONFIG}seed = 4\n"));
    let run = |seed: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_sfwfl"));
        cmd.args(["run", &cfg]).env_remove("SFWFL_SEED");
        if let Some(s) = seed {
            cmd.env("SFWFL_SEED", s);
        }
        stdout(&cmd.output().unwrap())
    };
    assert_eq!(run(Some("4")), run(None));
    assert_ne!(run(Some("5")), run(None));
    assert_eq!(run(Some("5")), run(Some("5")));
}

#[test]
fn sweep_emits_one_csv_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "w.cfg", CONFIG);
    let base = dir.path().join("sweep.csv");
    let out = sfwfl(&["sweep", &cfg, "--vary", "channel.alpha=1.3,1.6,2.0", "--out", base.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for v in ["1.3", "1.6", "2.0"] {
        let path = dir.path().join(format!("sweep_alpha-{v}.csv"));
        assert!(path.exists(), "missing {}", path.display());
    }
    assert_eq!(sfwfl(&["sweep", &cfg, "--vary", "alpha"]).status.code(), Some(1));
}

#[test]
fn fit_reads_a_power_law() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let mut text = String::from("round,wall_units,err_alpha,err_l2,loss,lemma3_lhs,lemma3_rhs,bound_value\n");
    for k in 1..=100 {
        let e = 3.0 * (k as f64).powf(-0.75);
        text.push_str(&format!("{k},{k},{e},{e},1,,,\n"));
    }
    std::fs::write(&path, text).unwrap();
    let out = sfwfl(&["fit", path.to_str().unwrap(), "--window", "10,100"]);
    assert_eq!(out.status.code(), Some(0));
    let exponent: f64 = stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix("exponent "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((exponent + 0.75).abs() < 1e-9);
    assert_eq!(sfwfl(&["fit", path.to_str().unwrap(), "--window", "10"]).status.code(), Some(1));
    assert_eq!(sfwfl(&["fit", path.to_str().unwrap(), "--window", "10,100", "--column", "nope"]).status.code(), Some(1));
}

#[test]
fn selftest_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let first = sfwfl(&["selftest", "--out", a.to_str().unwrap()]);
    assert_eq!(first.status.code(), Some(0), "{}", stdout(&first));
    assert!(stdout(&first).lines().all(|l| l.starts_with("PASS")));
    assert_eq!(sfwfl(&["selftest", "--out", b.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
