use std::path::Path;
use std::process::{Command, Output};

use microdisk::cmt::SpectrumTrace;

const JOB: &str = r#"
[geometry]
diameter_um = 9.0
thickness_nm = 250.0
[materials]
n_disk = 2.0
[band]
min_nm = 845.0
max_nm = 860.0
[modes]
m_min = 51
m_max = 51
write_fields = true
[solver]
grid_spacing_nm = 40.0
max_refinements = 0
[qed]
m = 51
q = 3.6e6
sweep_distances_nm = [0.0, 50.0, 100.0]
[[resonator]]
label = "a"
lambda0_nm = 852.0
kappa_i_hz = 1.07e8
kappa_e_hz = 4.2e7
beta_hz = 3.2e8
[spectrum]
start_nm = 851.998
end_nm = 852.002
samples = 2001
[tuning]
current_nm = 853.1
target_nm = 852.0
"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_microdisk"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn setup(extra: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("job.toml"), format!("{JOB}{extra}")).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn spectrum_then_fit_round_trip() {
    let dir = setup("");
    let o = run(dir.path(), &["spectrum", "--config", "job.toml", "--out", "t.csv"]);
    assert!(o.status.success(), "{o:?}");
    let trace = SpectrumTrace::read_csv(std::io::BufReader::new(std::fs::File::open(dir.path().join("t.csv")).unwrap())).unwrap();
    let t = trace.transmission();
    let n = t.len();
    assert!((0..n / 2).all(|k| (t[k] - t[n - 1 - k]).abs() < 1e-9), "doublet should be symmetric");
    let meta = std::fs::read_to_string(dir.path().join("t.toml")).unwrap();
    assert_eq!(SpectrumTrace::parse_metadata(&meta).unwrap().params[0].beta_hz, 3.2e8);

    let o = run(dir.path(), &["fit", "t.csv", "--out", "fit.toml"]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("label,lambda0_nm,Qi,Qe,beta_hz,rms"));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    let qi: f64 = fields[2].parse().unwrap();
    assert!((qi / (microdisk::units::frequency_hz(852.0) / 1.07e8) - 1.0).abs() < 1e-6);
    let parsed: toml::Value = toml::from_str(&std::fs::read_to_string(dir.path().join("fit.toml")).unwrap()).unwrap();
    assert_eq!(parsed["fit"].as_array().unwrap().len(), 1);
}

#[test]
fn noise_needs_explicit_seed_and_seed_is_reproducible() {
    let dir = setup("");
    let o = run(dir.path(), &["spectrum", "--config", "job.toml", "--noise", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
    let a = run(dir.path(), &["spectrum", "--config", "job.toml", "--noise", "0.01", "--seed", "9"]);
    let b = run(dir.path(), &["spectrum", "--config", "job.toml", "--noise", "0.01", "--seed", "9"]);
    let c = run(dir.path(), &["spectrum", "--config", "job.toml"]);
    assert!(a.status.success() && c.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn tune_reports_etch_plan_and_flags_override_config() {
    let dir = setup("");
    let out = stdout(&run(dir.path(), &["tune", "--config", "job.toml"]));
    assert!(out.contains("etch_minutes,1.000000"), "{out}");
    assert!(out.contains("placement_uncertainty_nm,0.050000"));
    let out = stdout(&run(dir.path(), &["tune", "--config", "job.toml", "--target", "853.22"]));
    assert!(out.contains("temperature_offset_c,10.000000"), "{out}");
    assert_eq!(run(dir.path(), &["tune"]).status.code(), Some(1));
}

#[test]
fn exit_codes_for_config_and_io_errors() {
    let dir = setup("[extra]\nkey = 1\n");
    assert_eq!(run(dir.path(), &["spectrum", "--config", "job.toml"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["fit", "missing.csv"]).status.code(), Some(3));
    assert_eq!(run(dir.path(), &["spectrum", "--config", "absent.toml"]).status.code(), Some(3));
    assert_eq!(run(dir.path(), &["bogus"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn modes_writes_table_and_field_maps() {
    let dir = setup("");
    let o = run(dir.path(), &["modes", "--config", "job.toml", "--out-dir", "out"]);
    assert!(o.status.success(), "{o:?}");
    let table = std::fs::read_to_string(dir.path().join("out/modes.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next(),
        Some("m,p,pol,lambda0_nm,Q_rad,Veff_m3,Veff_lam_n3,Gamma_prime_per_nm")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "51");
    let lam: f64 = row[3].parse().unwrap();
    assert!((845.0..860.0).contains(&lam));
    let bin = std::fs::File::open(dir.path().join("out/field_m51_p1_te.bin")).unwrap();
    let map = microdisk::modesolver::FieldMap::read_binary(std::io::BufReader::new(bin)).unwrap();
    assert!(map.is_normalized());

    let o = run(dir.path(), &["modes", "--config", "job.toml", "--m-min", "60", "--m-max", "59"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn qed_report_and_sweep() {
    let dir = setup("");
    let o = run(dir.path(), &["qed", "--config", "job.toml", "--out", "rates.csv"]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("strong coupling"));
    let rates = std::fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert!(rates.starts_with("quantity,value_hz\ng,"));

    let o = run(dir.path(), &["qed", "--config", "job.toml", "--distance-sweep"]);
    let out = stdout(&o);
    let g: Vec<f64> = out.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(g.len(), 3);
    assert!(g.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn adsorb_fit_recovers_model() {
    let dir = setup("");
    let model = microdisk::perturb::AdsorptionModel::new(0.08, 12.0).unwrap();
    let mut csv = String::from("t_hours,delta_lambda_nm\n");
    for t in [1.0, 5.0, 20.0, 80.0, 200.0, 450.0] {
        csv.push_str(&format!("{t},{}\n", microdisk::perturb::adsorption_shift(t, &model).unwrap()));
    }
    std::fs::write(dir.path().join("a.csv"), csv).unwrap();
    let o = run(dir.path(), &["adsorb-fit", "a.csv"]);
    assert!(o.status.success(), "{o:?}");
    let v: toml::Value = toml::from_str(&stdout(&o)).unwrap();
    assert!((v["amplitude_nm"].as_float().unwrap() / 0.08 - 1.0).abs() < 1e-6);
    assert!((v["tau_hours"].as_float().unwrap() / 12.0 - 1.0).abs() < 1e-6);
    assert_eq!(run(dir.path(), &["adsorb-fit", "a.csv", "--offset", "x"]).status.code(), Some(1));
}
