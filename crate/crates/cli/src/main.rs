use anyhow::Context;
use clap::Parser;
use hallmhd::axisym::{self, AxiGrid, AxiRunConfig, AxiState, KmcConfig, KmcViscosity};
use hallmhd::hall::{self, MhdState};
use hallmhd::integrator::{self, IntegratorConfig, IntegratorError, Model, Scheme};
use hallmhd::io::{
    load_snapshot, parse_config, save_snapshot, CsvWriter, DiagRow, IoError, Mode, RunConfig,
    SnapshotState,
};
use hallmhd::maxreg::{
    self, ExplicitScheme, InitialE, MaxRegError, MaxRegRunConfig, MaxwellRegState,
};
use hallmhd::presets;
use hallmhd::scaling;
use hallmhd::spectral::{curl, inner_product, Grid3, SpectralVectorField};
use hallmhd::verify;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "hallmhd", version, about = "Hall-MHD pseudo-spectral solvers")]
struct Cli {
    /// hall3d, coupled3d, axi, kmc, maxreg, eps-sweep, scaling or verify
    mode: String,
    /// Configuration file (`key = value` lines)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overrides `out` from the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed, overrides `seed` from the config
    #[arg(long)]
    seed: Option<u64>,
    /// Start from this snapshot instead of the configured preset
    #[arg(long)]
    resume: Option<PathBuf>,
}

enum Failure {
    Config(String),
    BlowUp(String),
    Verify(String),
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::BlowUp(_) => 3,
            Failure::Verify(_) => 4,
            Failure::Other(_) => 1,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io(_) | IoError::NonMonotone { .. } => Failure::Other(e.into()),
            other => Failure::Config(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("configuration error: {m}"),
                Failure::BlowUp(m) => eprintln!("numerical blow-up: {m}"),
                Failure::Verify(m) => eprintln!("verification failed: {m}"),
                Failure::Other(e) => eprintln!("error: {e:#}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn has_mode_key(text: &str) -> bool {
    text.lines().any(|l| {
        l.split('#')
            .next()
            .and_then(|b| b.split_once('='))
            .is_some_and(|(k, _)| k.trim() == "mode")
    })
}

fn load_config(cli: &Cli, mode: Mode) -> Result<(RunConfig, Vec<String>), Failure> {
    let mut text = match &cli.config {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    if !has_mode_key(&text) {
        if !text.is_empty() && !text.ends_with('\n') {
            text.push('\n');
        }
        text.push_str(&format!("mode = {mode}\n"));
    }
    let parsed = parse_config(&text).map_err(|errs| {
        let lines: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        Failure::Config(lines.join("\n  "))
    })?;
    let mut cfg = parsed.config;
    if cfg.mode != mode {
        return Err(Failure::Config(format!(
            "command line asks for {mode} but the config says mode = {}",
            cfg.mode
        )));
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(r) = &cli.resume {
        cfg.snapshot = Some(r.clone());
    }
    if let (Some(params), Some(conf)) = (&cfg.params, &cli.config) {
        if params.is_relative() {
            if let Some(dir) = conf.parent() {
                cfg.params = Some(dir.join(params));
            }
        }
    }
    Ok((cfg, parsed.warnings))
}

fn threads() -> Result<usize, Failure> {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var("HALLMHD_THREADS") {
        Err(_) => Ok(avail),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n.min(avail.max(1)).max(1)),
            _ => Err(Failure::Config(format!(
                "HALLMHD_THREADS must be a positive integer, got {v:?}"
            ))),
        },
    }
}

struct RunLog {
    file: BufWriter<File>,
}

impl RunLog {
    fn open(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let file = File::create(dir.join("run.log")).context("creating run.log")?;
        Ok(Self {
            file: BufWriter::new(file),
        })
    }

    fn line(&mut self, msg: &str) {
        println!("{msg}");
        let _ = writeln!(self.file, "{msg}");
    }
}

fn run(cli: &Cli) -> Outcome {
    let mode = Mode::parse(&cli.mode).ok_or_else(|| {
        let names: Vec<_> = Mode::ALL.iter().map(|m| m.name()).collect();
        Failure::Config(format!(
            "unknown mode {:?}, expected one of {names:?}",
            cli.mode
        ))
    })?;
    let (cfg, warnings) = load_config(cli, mode)?;
    let mut log = RunLog::open(&cfg.out)?;
    for w in &warnings {
        log.line(&format!("warning: {w}"));
    }
    match mode {
        Mode::Hall3d | Mode::Coupled3d => run_mhd(&cfg, &mut log),
        Mode::Axi => run_axi(&cfg, &mut log),
        Mode::Kmc => run_kmc(&cfg, &mut log),
        Mode::MaxReg => run_maxreg(&cfg, &mut log),
        Mode::EpsSweep => run_sweep(&cfg, &mut log),
        Mode::Scaling => run_scaling(&cfg, &mut log),
        Mode::Verify => run_verify(&mut log),
    }
}

fn csv(out: &Path) -> anyhow::Result<CsvWriter<BufWriter<File>>> {
    let f = File::create(out.join("diagnostics.csv")).context("creating diagnostics.csv")?;
    Ok(CsvWriter::new(BufWriter::new(f))?)
}

fn grid(n: usize) -> Result<Grid3, Failure> {
    Grid3::new(n).map_err(|e| Failure::Config(e.to_string()))
}

fn initial_mhd(cfg: &RunConfig) -> Result<MhdState, Failure> {
    if let Some(p) = &cfg.snapshot {
        return Ok(match load_snapshot(p, cfg.mode)? {
            SnapshotState::Hall3d { b, t } => MhdState::hall_only(b, t),
            SnapshotState::Coupled3d(s) => s,
            _ => unreachable!("mode checked on load"),
        });
    }
    let g = grid(cfg.n)?;
    let a = cfg.amplitude;
    let random = |seed| presets::random_solenoidal(&g, seed, cfg.rms, cfg.kcut);
    Ok(match (cfg.mode, cfg.init.as_str()) {
        (Mode::Hall3d, "abc") => MhdState::hall_only(presets::abc(&g, a), 0.0),
        (Mode::Hall3d, "random") => MhdState::hall_only(random(cfg.seed), 0.0),
        (Mode::Hall3d, "helical") => MhdState::hall_only(presets::helical(&g, a), 0.0),
        (Mode::Hall3d, "guided") => MhdState::hall_only(presets::guided(&g, a), 0.0),
        (_, "abc") => MhdState::hall_only(presets::abc(&g, a), 0.0),
        (_, "random") => MhdState {
            u: random(cfg.seed),
            b: random(cfg.seed.wrapping_add(1)),
            t: 0.0,
        },
        (_, "orszag-tang") => {
            let (u, b) = presets::orszag_tang(&g, a);
            MhdState { u, b, t: 0.0 }
        }
        (_, other) => return Err(Failure::Config(format!("unknown preset {other:?}"))),
    })
}

fn run_mhd(cfg: &RunConfig, log: &mut RunLog) -> Outcome {
    let s0 = initial_mhd(cfg)?;
    let scheme = Scheme::parse(&cfg.scheme)
        .ok_or_else(|| Failure::Config(format!("unknown scheme {:?}", cfg.scheme)))?;
    let model = if cfg.mode == Mode::Hall3d {
        Model::HallOnly
    } else {
        Model::Coupled
    };
    let mut icfg = IntegratorConfig::new(cfg.dt, cfg.t_end, scheme, model);
    icfg.cfl_safety = cfg.cfl_safety;
    icfg.adapt = cfg.adapt;
    icfg.diag_every = cfg.diag_every;
    log.line(&format!(
        "{} n = {} scheme = {} dt = {:e} t = {} -> {}",
        cfg.mode,
        s0.grid().n(),
        scheme.name(),
        cfg.dt,
        s0.t,
        cfg.t_end
    ));
    let mut w = csv(&cfg.out)?;
    let mut write_err = None;
    let result = integrator::run(&s0, &icfg, &mut |r| {
        if write_err.is_none() {
            if let Err(e) = w.write(&DiagRow::from(r)) {
                write_err = Some(e);
            }
        }
    });
    w.into_inner()?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    let snap = |s: MhdState| match cfg.mode {
        Mode::Hall3d => SnapshotState::Hall3d { b: s.b, t: s.t },
        _ => SnapshotState::Coupled3d(s),
    };
    match result {
        Ok(end) => {
            let d = hall::diagnostics(&end);
            log.line(&format!(
                "done at t = {}: energy_sym = {:.16e}, div_B_max = {:e}",
                end.t, d.energy_sym, d.div_b_max
            ));
            save_snapshot(&snap(end), &cfg.out.join("final.snap"))?;
            Ok(())
        }
        Err(IntegratorError::BlowUp { t, last_good }) => {
            save_snapshot(&snap(*last_good), &cfg.out.join("last_good.snap"))?;
            Err(Failure::BlowUp(format!(
                "non-finite fields at t = {t}; last good state in last_good.snap"
            )))
        }
        Err(e @ IntegratorError::EnergyIncrease { .. }) => Err(Failure::BlowUp(e.to_string())),
        Err(e @ IntegratorError::StepRejected { .. }) => Err(Failure::Config(format!(
            "{e}; lower dt or set adapt = true"
        ))),
        Err(e @ IntegratorError::InvalidConfig(_)) => Err(Failure::Config(e.to_string())),
    }
}

fn swirl_energy(grid: &AxiGrid, s: &AxiState) -> f64 {
    let mut e = 0.0;
    for ((_, j), b) in s.b.indexed_iter() {
        e += b * b * grid.r(j);
    }
    std::f64::consts::PI * e * grid.dx() * grid.dr()
}

fn run_axi(cfg: &RunConfig, log: &mut RunLog) -> Outcome {
    let (grid, s0) = match &cfg.snapshot {
        Some(p) => match load_snapshot(p, Mode::Axi)? {
            SnapshotState::Axi { grid, state } => (grid, state),
            _ => unreachable!("mode checked on load"),
        },
        None => {
            let grid = AxiGrid::new(cfg.nx, cfg.nr, cfg.lx, cfg.r_max)
                .map_err(|e| Failure::Config(e.to_string()))?;
            let (a, w, lx) = (cfg.amplitude, cfg.ring_width, cfg.lx);
            let s0 = AxiState::swirl(&grid, |x, r| presets::swirl_ring(x, r, a, w, lx));
            (grid, s0)
        }
    };
    log.line(&format!(
        "axi {} x {} on [0, {}) x (0, {}], t = {} -> {}",
        grid.nx, grid.nr, grid.lx, grid.r_max, s0.t, cfg.t_end
    ));
    let acfg = AxiRunConfig {
        t_end: cfg.t_end,
        safety: AxiRunConfig::default().safety,
        every: cfg.diag_every,
    };
    let mut w = csv(&cfg.out)?;
    let mut write_err = None;
    let mut last = s0.clone();
    let result = axisym::run_axi(&grid, &s0, &acfg, &mut |s| {
        last = s.clone();
        if write_err.is_none() {
            let row = DiagRow {
                t: s.t,
                energy_b: Some(swirl_energy(&grid, s)),
                ..Default::default()
            };
            if let Err(e) = w.write(&row) {
                write_err = Some(e);
            }
        }
    });
    w.into_inner()?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    match result {
        Ok(end) => {
            let psi = end.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            log.line(&format!("done at t = {}: max|psi| = {psi:e}", end.t));
            save_snapshot(
                &SnapshotState::Axi { grid, state: end },
                &cfg.out.join("final.snap"),
            )?;
            Ok(())
        }
        Err(axisym::AxiError::BlowUp { t }) => {
            save_snapshot(
                &SnapshotState::Axi { grid, state: last },
                &cfg.out.join("last_good.snap"),
            )?;
            Err(Failure::BlowUp(format!(
                "non-finite fields at t = {t}; last good state in last_good.snap"
            )))
        }
        Err(e) => Err(Failure::Config(e.to_string())),
    }
}

fn run_kmc(cfg: &RunConfig, log: &mut RunLog) -> Outcome {
    let kcfg = KmcConfig {
        b_left: cfg.b_left,
        b_right: cfg.b_right,
        r0: cfg.r0,
        nx: cfg.nx,
        lx: cfg.lx,
        t_end: cfg.t_end,
        viscosity: cfg
            .nu
            .map_or(KmcViscosity::InviscidLimit, KmcViscosity::Value),
        samples: 50,
    };
    let res = match axisym::run_kmc(&kcfg) {
        Ok(r) => r,
        Err(axisym::AxiError::BlowUp { t }) => {
            return Err(Failure::BlowUp(format!("non-finite profile at t = {t}")))
        }
        Err(e) => return Err(Failure::Config(e.to_string())),
    };
    let mut f = BufWriter::new(File::create(cfg.out.join("front.csv")).context("front.csv")?);
    writeln!(f, "t,front").context("front.csv")?;
    for (t, x) in &res.front {
        writeln!(f, "{t:.16e},{x:.16e}").context("front.csv")?;
    }
    f.flush().context("front.csv")?;
    let mut p = BufWriter::new(File::create(cfg.out.join("profiles.csv")).context("profiles.csv")?);
    let head: Vec<String> = res.times.iter().map(|t| format!("b@{t:.6}")).collect();
    writeln!(p, "x,{}", head.join(",")).context("profiles.csv")?;
    for (i, x) in res.x.iter().enumerate() {
        let row: Vec<String> = res
            .profiles
            .iter()
            .map(|b| format!("{:.16e}", b[i]))
            .collect();
        writeln!(p, "{x:.16e},{}", row.join(",")).context("profiles.csv")?;
    }
    p.flush().context("profiles.csv")?;
    if let Some(w) = &res.warning {
        log.line(&format!("warning: {w}"));
    }
    let rh = kcfg.rh_speed();
    match res.speed {
        Some(s) => log.line(&format!(
            "front speed {s:.6} vs Rankine-Hugoniot {rh:.6} (relative gap {:.3e})",
            (s - rh).abs() / rh.abs().max(f64::MIN_POSITIVE)
        )),
        None => log.line(&format!(
            "front speed unavailable; Rankine-Hugoniot {rh:.6}"
        )),
    }
    Ok(())
}

fn maxreg_scheme(name: &str) -> Result<ExplicitScheme, Failure> {
    match name {
        "rk2" => Ok(ExplicitScheme::Rk2),
        "rk4" => Ok(ExplicitScheme::Rk4),
        other => Err(Failure::Config(format!("unknown scheme {other:?}"))),
    }
}

fn maxreg_field(cfg: &RunConfig) -> Result<SpectralVectorField, Failure> {
    let g = grid(cfg.n)?;
    match cfg.init.as_str() {
        "guided" => Ok(presets::guided(&g, cfg.amplitude)),
        "helical" => Ok(presets::helical(&g, cfg.amplitude)),
        other => Err(Failure::Config(format!("unknown preset {other:?}"))),
    }
}

fn maxreg_failure(e: MaxRegError) -> Failure {
    match e {
        MaxRegError::BlowUp { .. } => Failure::BlowUp(e.to_string()),
        other => Failure::Config(other.to_string()),
    }
}

fn run_maxreg(cfg: &RunConfig, log: &mut RunLog) -> Outcome {
    let s0 = match &cfg.snapshot {
        Some(p) => match load_snapshot(p, Mode::MaxReg)? {
            SnapshotState::MaxReg(s) => s,
            _ => unreachable!("mode checked on load"),
        },
        None => MaxwellRegState::new(maxreg_field(cfg)?, InitialE::WellPrepared, cfg.eps)
            .map_err(maxreg_failure)?,
    };
    let mcfg = MaxRegRunConfig {
        t_end: cfg.t_end,
        eps_cfl: cfg.eps_cfl,
        scheme: maxreg_scheme(&cfg.scheme)?,
        ..Default::default()
    };
    if s0.t > cfg.t_end {
        return Err(Failure::Config(format!(
            "snapshot time {} is past t_end = {}",
            s0.t, cfg.t_end
        )));
    }
    let whole = mcfg.steps(s0.eps, &s0.b);
    let steps =
        ((cfg.t_end - s0.t) / cfg.t_end.max(f64::MIN_POSITIVE) * whole as f64).ceil() as usize;
    log.line(&format!(
        "maxreg n = {} eps = {:e} steps = {steps} t = {} -> {}",
        s0.grid().n(),
        s0.eps,
        s0.t,
        cfg.t_end
    ));
    let mut w = csv(&cfg.out)?;
    let mut write_err = None;
    let mut last = s0.clone();
    let mut count = 0usize;
    let result = maxreg::run_maxreg(&s0, &mcfg, steps, &mut |s| {
        last = s.clone();
        let emit = count % cfg.diag_every == 0 || count == steps;
        count += 1;
        if emit && write_err.is_none() {
            let row = DiagRow {
                t: s.t,
                energy_sym: Some(s.energy()),
                energy_b: Some(0.5 * s.b.norm_sq()),
                current_helicity: inner_product(&s.b, &curl(&s.b)).ok(),
                div_b_max: Some(s.b.divergence_max()),
                ..Default::default()
            };
            if let Err(e) = w.write(&row) {
                write_err = Some(e);
            }
        }
    });
    w.into_inner()?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    match result {
        Ok(end) => {
            let scale = end.e.max_norm() * end.b.max_norm();
            log.line(&format!(
                "done at t = {}: max|E.B| = {:e} ({:e} of |E|max |B|max)",
                end.t,
                end.constraint(),
                end.constraint() / scale.max(f64::MIN_POSITIVE)
            ));
            save_snapshot(&SnapshotState::MaxReg(end), &cfg.out.join("final.snap"))?;
            Ok(())
        }
        Err(e @ MaxRegError::BlowUp { .. }) => {
            save_snapshot(
                &SnapshotState::MaxReg(last),
                &cfg.out.join("last_good.snap"),
            )?;
            Err(maxreg_failure(e))
        }
        Err(e) => Err(maxreg_failure(e)),
    }
}

fn run_sweep(cfg: &RunConfig, log: &mut RunLog) -> Outcome {
    let b0 = maxreg_field(cfg)?;
    let mcfg = MaxRegRunConfig {
        t_end: cfg.t_end,
        eps_cfl: cfg.eps_cfl,
        scheme: maxreg_scheme(&cfg.scheme)?,
        ..Default::default()
    };
    let workers = threads()?;
    log.line(&format!(
        "eps-sweep n = {} over {:?} to t = {} with {workers} workers",
        cfg.n, cfg.eps_list, cfg.t_end
    ));
    let rep = maxreg::eps_convergence_study(&b0, &cfg.eps_list, &mcfg, workers);
    let mut table = BufWriter::new(File::create(cfg.out.join("sweep.csv")).context("sweep.csv")?);
    writeln!(table, "eps,steps,deviation").context("sweep.csv")?;
    for (i, row) in rep.rows.iter().enumerate() {
        let dir = cfg.out.join(format!("eps_{i:02}"));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let summary = match &row.deviation {
            Ok(d) => format!(
                "eps = {:e}\nsteps = {}\ndeviation = {d:.16e}\n",
                row.eps, row.steps
            ),
            Err(e) => format!("eps = {:e}\nsteps = {}\nerror = {e}\n", row.eps, row.steps),
        };
        fs::write(dir.join("summary.txt"), summary).context("summary.txt")?;
        let dev = row
            .deviation
            .as_ref()
            .map_or(String::new(), |d| format!("{d:.16e}"));
        writeln!(table, "{:e},{},{dev}", row.eps, row.steps).context("sweep.csv")?;
        match &row.deviation {
            Ok(d) => log.line(&format!("eps = {:e}: deviation {d:e}", row.eps)),
            Err(e) => log.line(&format!("eps = {:e}: failed: {e}", row.eps)),
        }
    }
    table.flush().context("sweep.csv")?;
    log.line(&format!(
        "fitted order {} (monotone: {})",
        rep.order.map_or("n/a".into(), |o| format!("{o:.3}")),
        rep.monotone()
    ));
    Ok(())
}

fn run_scaling(cfg: &RunConfig, log: &mut RunLog) -> Outcome {
    let path = cfg
        .params
        .as_ref()
        .ok_or_else(|| Failure::Config("scaling needs `params = <file>`".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let p = scaling::parse_params(&text).map_err(|errs| {
        let lines: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        Failure::Config(lines.join("\n  "))
    })?;
    let g = scaling::compute_groups(&p).map_err(|e| Failure::Config(e.to_string()))?;
    let regime = scaling::classify_regime(&g, cfg.threshold);
    let report = format!(
        "eps2 = {:e}\nalpha2 = {:e}\nbeta = {:e}\ngamma = {:e}\nlambda2 = {:e}\neta_ratio = {:e}\n\
         inv_alpha2 = {:e}\nbeta_over_alpha4 = {:e}\nlorentz_coeff = {:e}\n\
         u0 = {:e} m/s\nE0 = {:e} V/m\nB0 = {:e} T\nt0 = {:e} s\nregime = {regime:?}\n",
        g.eps2,
        g.alpha2,
        g.beta,
        g.gamma,
        g.lambda2,
        g.eta_ratio,
        g.inv_alpha2,
        g.beta_over_alpha4,
        g.lorentz_coeff,
        g.u0,
        g.e0,
        g.b0,
        g.t0
    );
    for l in report.lines() {
        log.line(l);
    }
    fs::write(cfg.out.join("scaling.txt"), report).context("scaling.txt")?;
    Ok(())
}

fn run_verify(log: &mut RunLog) -> Outcome {
    let checks = verify::run_suite();
    let mut failed = Vec::new();
    for c in &checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        log.line(&format!(
            "{status} {}: {:e} (tolerance {:e})",
            c.name, c.value, c.tolerance
        ));
        if !c.passed() {
            failed.push(c.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(failed.join(", ")))
    }
}
