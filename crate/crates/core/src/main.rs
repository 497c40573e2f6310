use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use microdisk::cmt::{array_transmission, doublet_transmission, linspace, SpectrumTrace};
use microdisk::config::JobConfig;
use microdisk::fitting::{fit_array, ArrayFitOptions, SUMMARY_HEADER};
use microdisk::geometry::{ModeId, Polarization};
use microdisk::modesolver::{oracle, solve_mode, solve_modes, RadiationQ};
use microdisk::perturb::{etch_plan, fit_adsorption, read_adsorption_csv, BaselineOffset};
use microdisk::qed::{
    coupling_rate, field_decay_rate, g_vs_distance, strong_coupling_report, write_g_curve, CqedParams,
};
use microdisk::{modesolver, Error};

#[derive(Parser, Debug)]
#[command(name = "microdisk", version, about = "Microdisk resonator modeling and spectral fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve whispering-gallery modes and tabulate their figures of merit.
    Modes {
        #[arg(long)]
        config: PathBuf,
        /// Directory for modes.csv and field maps.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        m_min: Option<u32>,
        #[arg(long)]
        m_max: Option<u32>,
        #[arg(long)]
        grid_spacing_nm: Option<f64>,
    },
    /// Simulate a transmission trace from [[resonator]] entries.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        /// Cascade every resonator behind the configured joints.
        #[arg(long)]
        array: bool,
        /// Amplitude noise σ; overrides the config and needs --seed.
        #[arg(long)]
        noise: Option<f64>,
        /// Seed for synthetic noise; without it the trace is noiseless.
        #[arg(long)]
        seed: Option<u64>,
        /// Trace CSV path; a .toml sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit resonances in a transmission trace.
    Fit {
        trace: PathBuf,
        #[arg(long, default_value_t = 1)]
        n_expected: usize,
        #[arg(long)]
        prominence: Option<f64>,
        /// Structured fit results.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cavity-QED rates for an atom near the disk.
    Qed {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        distance_nm: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        m: Option<u32>,
        /// Emit g(d) as CSV instead of the single-site report.
        #[arg(long)]
        distance_sweep: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Etch and temperature plan to move a resonance to a target.
    Tune {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        current: Option<f64>,
        #[arg(long)]
        target: Option<f64>,
    },
    /// Fit the logarithmic adsorption law to `t_hours,delta_lambda_nm` samples.
    AdsorbFit {
        samples: PathBuf,
        /// `none`, `free`, or a fixed offset in nm.
        #[arg(long, default_value = "none")]
        offset: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    NotConverged(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Io(e.to_string()),
            Error::NotConverged { .. } | Error::Numerical(_) => Failure::NotConverged(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Modes {
            config,
            out_dir,
            m_min,
            m_max,
            grid_spacing_nm,
        } => cmd_modes(&config, out_dir, m_min, m_max, grid_spacing_nm),
        Command::Spectrum {
            config,
            array,
            noise,
            seed,
            out,
        } => cmd_spectrum(&config, array, noise, seed, out),
        Command::Fit {
            trace,
            n_expected,
            prominence,
            out,
        } => cmd_fit(&trace, n_expected, prominence, out),
        Command::Qed {
            config,
            distance_nm,
            q,
            m,
            distance_sweep,
            out,
        } => cmd_qed(&config, distance_nm, q, m, distance_sweep, out),
        Command::Tune { config, current, target } => cmd_tune(config, current, target),
        Command::AdsorbFit { samples, offset, out } => cmd_adsorb_fit(&samples, &offset, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (1, m),
                Failure::NotConverged(m) => (2, m),
                Failure::Io(m) => (3, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// Writes to `path`, or to standard output when absent.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<(), Error>) -> CmdResult {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
        }
    }
    Ok(())
}

fn pol_tag(p: Polarization) -> &'static str {
    match p {
        Polarization::TeLike => "te",
        Polarization::TmLike => "tm",
    }
}

fn format_q(q: RadiationQ) -> String {
    match q {
        RadiationQ::Value(v) => format!("{v:.6e}"),
        RadiationQ::ExceedsCeiling(c) => format!(">{c:.6e}"),
    }
}

fn cmd_modes(
    config: &Path,
    out_dir: Option<PathBuf>,
    m_min: Option<u32>,
    m_max: Option<u32>,
    spacing: Option<f64>,
) -> CmdResult {
    let job = JobConfig::load(config)?;
    let geom = job.require_geometry()?;
    let mat = job.require_materials()?;
    let band = job.require_band()?;
    let modes_cfg = job.require_modes()?;
    let mut cfg = job.solver();
    if let Some(h) = spacing {
        cfg.grid_spacing_nm = h;
    }
    let out_dir = out_dir.or_else(|| job.output_dir().map(Path::to_path_buf));
    let m_lo = m_min.unwrap_or(modes_cfg.m_min).max(1);
    let m_hi = m_max.unwrap_or(modes_cfg.m_max);

    let modes = solve_modes(&geom, &mat, &band, m_lo..=m_hi, modes_cfg.p_max, modes_cfg.polarization, &cfg)?;

    let write_table = |w: &mut dyn Write| -> Result<(), Error> {
        writeln!(w, "m,p,pol,lambda0_nm,Q_rad,Veff_m3,Veff_lam_n3,Gamma_prime_per_nm")?;
        for s in &modes {
            writeln!(
                w,
                "{},{},{},{:.6},{},{:.6e},{:.6},{:.6e}",
                s.id.m,
                s.id.p,
                s.id.polarization,
                s.lambda_nm,
                format_q(s.q_rad),
                s.veff_m3,
                s.veff_cubic_wavelengths,
                s.gamma_prime_per_nm
            )?;
        }
        Ok(())
    };
    match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
            with_output(Some(&dir.join("modes.csv")), write_table)?;
            if modes_cfg.write_fields {
                for s in &modes {
                    let stem = format!("field_m{}_p{}_{}", s.id.m, s.id.p, pol_tag(s.id.polarization));
                    with_output(Some(&dir.join(format!("{stem}.csv"))), |w| s.field.write_csv(w))?;
                    with_output(Some(&dir.join(format!("{stem}.bin"))), |w| s.field.write_binary(w))?;
                }
            }
            with_output(None, write_table)
        }
        None => with_output(None, write_table),
    }
}

fn cmd_spectrum(config: &Path, array: bool, noise: Option<f64>, seed: Option<u64>, out: Option<PathBuf>) -> CmdResult {
    let job = JobConfig::load(config)?;
    let spec = job.require_spectrum()?;
    let resonators = job.require_resonators()?;
    let joints = job.joints()?;
    let sigma = noise.or(spec.noise_sigma);
    if noise.is_some() && seed.is_none() {
        return Err(Failure::Usage("--noise requires an explicit --seed".into()));
    }
    if !array && resonators.len() != 1 {
        return Err(Failure::Usage(format!(
            "single-disk spectrum needs exactly one [[resonator]], found {}; pass --array to cascade",
            resonators.len()
        )));
    }
    let grid = linspace(spec.start_nm, spec.end_nm, spec.samples);
    let mut trace = if array {
        array_transmission(resonators, &joints, &grid)?
    } else {
        doublet_transmission(&resonators[0], &grid)?
    };
    if let (Some(s), Some(seed)) = (sigma, seed) {
        trace = trace.with_noise(s, seed)?;
    }
    for w in trace.warnings() {
        eprintln!("warning: {w}");
    }
    with_output(out.as_deref(), |w| trace.write_csv(w))?;
    if let Some(p) = out {
        let meta = trace.metadata_toml()?;
        std::fs::write(p.with_extension("toml"), meta).map_err(|e| Failure::Io(e.to_string()))?;
    }
    Ok(())
}

fn cmd_fit(trace_path: &Path, n_expected: usize, prominence: Option<f64>, out: Option<PathBuf>) -> CmdResult {
    let trace = SpectrumTrace::read_csv(open(trace_path)?)?;
    let mut opts = ArrayFitOptions::default();
    if let Some(p) = prominence {
        opts.prominence = p;
    }
    let fit = fit_array(&trace, n_expected, &opts)?;
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    println!("{SUMMARY_HEADER}");
    for r in &fit.results {
        println!("{}", r.summary_line());
    }
    println!("# baseline {:.9}", fit.baseline);
    if let Some(p) = out {
        std::fs::write(&p, fit.to_toml()).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
    }
    if fit.results.len() < n_expected || fit.results.iter().any(|r| !r.converged) {
        return Err(Failure::NotConverged(format!(
            "{} of {n_expected} resonances fitted and converged",
            fit.results.iter().filter(|r| r.converged).count()
        )));
    }
    Ok(())
}

fn cmd_qed(
    config: &Path,
    distance: Option<f64>,
    q: Option<f64>,
    m: Option<u32>,
    sweep: bool,
    out: Option<PathBuf>,
) -> CmdResult {
    let job = JobConfig::load(config)?;
    let geom = job.require_geometry()?;
    let mat = job.require_materials()?;
    let qed = job.require_qed()?;
    let atom = job.atom()?;
    let cfg = job.solver();
    let q = q.unwrap_or(qed.q);
    let distance = distance.unwrap_or(qed.distance_nm);
    let pol = Polarization::TeLike;

    let (m, est) = match m.or(qed.m) {
        Some(m) => (m, oracle::resonance_estimate_nm(&geom, &mat, m, 1, pol, atom.lambda_nm())?),
        None => {
            let range = job.require_modes()?;
            (range.m_min.max(1)..=range.m_max)
                .map(|m| oracle::resonance_estimate_nm(&geom, &mat, m, 1, pol, atom.lambda_nm()).map(|l| (m, l)))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .min_by(|a, b| (a.1 - atom.lambda_nm()).abs().total_cmp(&(b.1 - atom.lambda_nm()).abs()))
                .ok_or_else(|| Failure::Usage("empty m range".into()))?
        }
    };
    let mode = solve_mode(&geom, &mat, ModeId::new(m, 1, pol)?, est, &cfg)?;

    if sweep {
        let grid = if qed.sweep_distances_nm.is_empty() {
            (0..=20).map(|k| k as f64 * 10.0).collect()
        } else {
            qed.sweep_distances_nm.clone()
        };
        let curve = g_vs_distance(&mode, &atom, &grid)?;
        return with_output(out.as_deref(), |w| write_g_curve(&curve, w));
    }
    let g = coupling_rate(&mode, &atom, modesolver::Position::OutsideRim { distance_nm: distance })?;
    let kappa = field_decay_rate(mode.lambda_nm, q)?;
    let params = CqedParams::new(g, kappa, atom.gamma_perp_hz(), distance)?;
    let report = strong_coupling_report(&params);
    eprintln!("mode {} at {:.4} nm, V_eff = {:.3} (λ/n)³", mode.id, mode.lambda_nm, mode.veff_cubic_wavelengths);
    println!("{report}");
    if let Some(p) = out {
        with_output(Some(&p), |w| report.write_csv(w))?;
    }
    Ok(())
}

fn cmd_tune(config: Option<PathBuf>, current: Option<f64>, target: Option<f64>) -> CmdResult {
    let job = match config {
        Some(p) => JobConfig::load(&p)?,
        None => JobConfig::default(),
    };
    let tuning = job.tuning;
    let current = current
        .or(tuning.map(|t| t.current_nm))
        .ok_or_else(|| Failure::Usage("current wavelength required (--current or [tuning].current_nm)".into()))?;
    let target = target
        .or(tuning.and_then(|t| t.target_nm))
        .ok_or_else(|| Failure::Usage("target wavelength required (--target or [tuning].target_nm)".into()))?;
    let etch = job.etch_model()?;
    let thermal = job.thermal_model()?;

    let delta = target - current;
    let (minutes, uncertainty) = if delta < 0.0 {
        let plan = etch_plan(current, target, &etch)?;
        (plan.minutes, plan.uncertainty_nm)
    } else {
        (0.0, 0.0)
    };
    let delta_t = if delta > 0.0 { thermal.temperature_for_shift(delta) } else { 0.0 };
    if delta_t.abs() >= 100.0 {
        return Err(Failure::Usage(format!(
            "red shift of {delta:.4} nm needs {delta_t:.1} °C, beyond the 100 °C thermal guard"
        )));
    }
    println!("quantity,value");
    println!("current_nm,{current:.6}");
    println!("target_nm,{target:.6}");
    println!("etch_minutes,{minutes:.6}");
    println!("temperature_offset_c,{delta_t:.6}");
    println!("placement_uncertainty_nm,{uncertainty:.6}");
    Ok(())
}

fn cmd_adsorb_fit(samples: &Path, offset: &str, out: Option<PathBuf>) -> CmdResult {
    let offset = match offset {
        "none" => BaselineOffset::None,
        "free" => BaselineOffset::Free,
        v => BaselineOffset::Fixed(
            v.parse()
                .map_err(|_| Failure::Usage(format!("--offset must be none, free or a number, got `{v}`")))?,
        ),
    };
    let data = read_adsorption_csv(open(samples)?)?;
    let fit = fit_adsorption(&data, offset)?;
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    let text = fit.to_toml();
    with_output(out.as_deref(), |w| Ok(w.write_all(text.as_bytes())?))?;
    if !fit.converged {
        return Err(Failure::NotConverged("adsorption fit did not converge".into()));
    }
    Ok(())
}
