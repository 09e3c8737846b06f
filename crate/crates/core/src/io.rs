//! Run configuration files, binary field snapshots and diagnostic CSV output.

use crate::axisym::{AxiGrid, AxiState};
use crate::hall::{DiagnosticsRecord, MhdState};
use crate::maxreg::MaxwellRegState;
use crate::spectral::{Grid3, SpectralVectorField};
use ndarray::{Array2, Array4};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Hall3d,
    Coupled3d,
    Axi,
    Kmc,
    MaxReg,
    EpsSweep,
    Scaling,
    Verify,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::Hall3d,
        Mode::Coupled3d,
        Mode::Axi,
        Mode::Kmc,
        Mode::MaxReg,
        Mode::EpsSweep,
        Mode::Scaling,
        Mode::Verify,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Hall3d => "hall3d",
            Mode::Coupled3d => "coupled3d",
            Mode::Axi => "axi",
            Mode::Kmc => "kmc",
            Mode::MaxReg => "maxreg",
            Mode::EpsSweep => "eps-sweep",
            Mode::Scaling => "scaling",
            Mode::Verify => "verify",
        }
    }

    /// Byte stored in snapshot headers.
    pub fn tag(self) -> u8 {
        match self {
            Mode::Hall3d => 1,
            Mode::Coupled3d => 2,
            Mode::Axi => 3,
            Mode::Kmc => 4,
            Mode::MaxReg => 5,
            Mode::EpsSweep => 6,
            Mode::Scaling => 7,
            Mode::Verify => 8,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.tag() == tag)
    }

    fn uses_cube(self) -> bool {
        matches!(
            self,
            Mode::Hall3d | Mode::Coupled3d | Mode::MaxReg | Mode::EpsSweep | Mode::Verify
        )
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// ---------------------------------------------------------------------------
// configuration

/// Problem with one line of a configuration file. Line 0 means the whole file.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

/// Validated settings of one run. Which fields matter depends on `mode`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Cube resolution of the spectral modes.
    pub n: usize,
    pub t_end: f64,
    pub dt: f64,
    pub cfl_safety: f64,
    pub adapt: bool,
    /// Time-stepping scheme name, checked against the mode.
    pub scheme: String,
    pub diag_every: usize,
    pub init: String,
    pub amplitude: f64,
    pub rms: f64,
    pub kcut: f64,
    pub snapshot: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub nx: usize,
    pub nr: usize,
    pub lx: f64,
    pub r_max: f64,
    pub ring_width: f64,
    pub b_left: f64,
    pub b_right: f64,
    pub r0: f64,
    pub nu: Option<f64>,
    pub eps: f64,
    pub eps_list: Vec<f64>,
    pub eps_cfl: f64,
    pub params: Option<PathBuf>,
    pub threshold: f64,
}

impl RunConfig {
    /// Defaults for every optional key of `mode`.
    pub fn defaults(mode: Mode) -> Self {
        let axi = mode == Mode::Axi;
        let kmc = mode == Mode::Kmc;
        Self {
            mode,
            n: 16,
            t_end: if kmc { 0.5 } else { 0.1 },
            dt: 1e-3,
            cfl_safety: 1.0,
            adapt: false,
            scheme: match mode {
                Mode::MaxReg | Mode::EpsSweep => "rk2".into(),
                _ => "imex_rk2".into(),
            },
            diag_every: if axi { 100 } else { 1 },
            init: match mode {
                Mode::Hall3d => "abc".into(),
                Mode::Coupled3d => "random".into(),
                Mode::Axi => "ring".into(),
                Mode::Kmc => "riemann".into(),
                _ => "guided".into(),
            },
            amplitude: match mode {
                Mode::Axi => 3.0,
                Mode::MaxReg | Mode::EpsSweep => 0.1,
                _ => 1.0,
            },
            rms: 0.1,
            kcut: 2.5,
            snapshot: None,
            out: PathBuf::from("out"),
            seed: 0,
            nx: if kmc { 1024 } else { 128 },
            nr: 64,
            lx: if kmc { 4.0 } else { 1.0 },
            r_max: 1.0,
            ring_width: 0.5,
            b_left: 0.0,
            b_right: 0.0,
            r0: 1.0,
            nu: None,
            eps: 1e-2,
            eps_list: vec![1e-1, 1e-2, 1e-3],
            eps_cfl: 0.5,
            params: None,
            threshold: crate::scaling::DEFAULT_THRESHOLD,
        }
    }
}

/// A parsed configuration and the non-fatal remarks made while reading it.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedConfig {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

const KEYS: &[&str] = &[
    "mode",
    "n",
    "t_end",
    "dt",
    "cfl_safety",
    "adapt",
    "scheme",
    "diag_every",
    "init",
    "amplitude",
    "rms",
    "kcut",
    "snapshot",
    "out",
    "seed",
    "nx",
    "nr",
    "lx",
    "r_max",
    "ring_width",
    "b_left",
    "b_right",
    "r0",
    "nu",
    "eps",
    "eps_list",
    "eps_cfl",
    "params",
    "threshold",
];

/// Keys without a default, per mode.
fn required(mode: Mode) -> &'static [&'static str] {
    match mode {
        Mode::Hall3d | Mode::Coupled3d => &["n", "t_end"],
        Mode::Axi => &["t_end"],
        Mode::Kmc => &["b_left", "b_right", "r0"],
        Mode::MaxReg => &["n", "t_end", "eps"],
        Mode::EpsSweep => &["n", "t_end", "eps_list"],
        Mode::Scaling => &["params"],
        Mode::Verify => &[],
    }
}

/// Splits `key = value` lines, dropping `#` comments. Later duplicates win.
fn tokenize(
    text: &str,
    errors: &mut Vec<ConfigError>,
    warnings: &mut Vec<String>,
) -> BTreeMap<String, (usize, String)> {
    let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            errors.push(ConfigError {
                line,
                msg: format!("expected `key = value`, got {body:?}"),
            });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            errors.push(ConfigError {
                line,
                msg: format!("unknown key {k:?}"),
            });
            continue;
        }
        if let Some((prev, _)) = kv.get(k) {
            warnings.push(format!(
                "line {line}: duplicate key {k:?} (first set on line {prev}); the last value wins"
            ));
        }
        kv.insert(k.to_string(), (line, v.to_string()));
    }
    kv
}

struct Reader<'a> {
    kv: &'a BTreeMap<String, (usize, String)>,
    errors: Vec<ConfigError>,
}

impl Reader<'_> {
    fn value<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        let (line, v) = self.kv.get(key)?;
        match parse(v) {
            Ok(t) => Some(t),
            Err(msg) => {
                self.errors.push(ConfigError {
                    line: *line,
                    msg: format!("{key}: {msg}"),
                });
                None
            }
        }
    }

    fn set<T>(&mut self, key: &str, slot: &mut T, parse: impl Fn(&str) -> Result<T, String>) {
        if let Some(v) = self.value(key, parse) {
            *slot = v;
        }
    }

    fn check(&mut self, key: &str, ok: bool, msg: &str) {
        if !ok {
            let line = self.kv.get(key).map_or(0, |(l, _)| *l);
            self.errors.push(ConfigError {
                line,
                msg: format!("{key}: {msg}"),
            });
        }
    }
}

fn real(v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("expected a finite number, got {v:?}")),
    }
}

fn count(v: &str) -> Result<usize, String> {
    v.parse::<usize>()
        .map_err(|_| format!("expected a non-negative integer, got {v:?}"))
}

fn flag(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got {v:?}")),
    }
}

fn text(v: &str) -> Result<String, String> {
    if v.is_empty() {
        Err("empty value".into())
    } else {
        Ok(v.to_string())
    }
}

fn path(v: &str) -> Result<PathBuf, String> {
    text(v).map(PathBuf::from)
}

fn real_list(v: &str) -> Result<Vec<f64>, String> {
    v.split(',').map(|s| real(s.trim())).collect()
}

/// Parses and validates a configuration file, reporting every problem found.
pub fn parse_config(text_in: &str) -> Result<ParsedConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let kv = tokenize(text_in, &mut errors, &mut warnings);
    let mut r = Reader { kv: &kv, errors };

    let mode = match kv.get("mode") {
        None => {
            r.errors.push(ConfigError {
                line: 0,
                msg: "missing required key \"mode\"".into(),
            });
            let mut errors = r.errors;
            errors.sort_by_key(|e| e.line);
            return Err(errors);
        }
        Some((line, v)) => match Mode::parse(v) {
            Some(m) => m,
            None => {
                let names: Vec<_> = Mode::ALL.iter().map(|m| m.name()).collect();
                r.errors.push(ConfigError {
                    line: *line,
                    msg: format!("mode: unknown mode {v:?}, expected one of {names:?}"),
                });
                let mut errors = r.errors;
                errors.sort_by_key(|e| e.line);
                return Err(errors);
            }
        },
    };
    for key in required(mode) {
        if !kv.contains_key(*key) {
            r.errors.push(ConfigError {
                line: 0,
                msg: format!("missing required key {key:?} for mode {mode}"),
            });
        }
    }

    let mut c = RunConfig::defaults(mode);
    r.set("n", &mut c.n, count);
    r.set("t_end", &mut c.t_end, real);
    r.set("dt", &mut c.dt, real);
    r.set("cfl_safety", &mut c.cfl_safety, real);
    r.set("adapt", &mut c.adapt, flag);
    r.set("scheme", &mut c.scheme, text);
    r.set("diag_every", &mut c.diag_every, count);
    r.set("init", &mut c.init, text);
    r.set("amplitude", &mut c.amplitude, real);
    r.set("rms", &mut c.rms, real);
    r.set("kcut", &mut c.kcut, real);
    c.snapshot = r.value("snapshot", path);
    r.set("out", &mut c.out, path);
    r.set("seed", &mut c.seed, |v| {
        v.parse::<u64>()
            .map_err(|_| format!("expected an unsigned integer, got {v:?}"))
    });
    r.set("nx", &mut c.nx, count);
    r.set("nr", &mut c.nr, count);
    r.set("lx", &mut c.lx, real);
    r.set("r_max", &mut c.r_max, real);
    r.set("ring_width", &mut c.ring_width, real);
    r.set("b_left", &mut c.b_left, real);
    r.set("b_right", &mut c.b_right, real);
    r.set("r0", &mut c.r0, real);
    c.nu = r.value("nu", real);
    r.set("eps", &mut c.eps, real);
    r.set("eps_list", &mut c.eps_list, real_list);
    r.set("eps_cfl", &mut c.eps_cfl, real);
    c.params = r.value("params", path);
    r.set("threshold", &mut c.threshold, real);

    if mode.uses_cube() {
        r.check(
            "n",
            c.n >= 4 && c.n % 2 == 0,
            "resolution must be even and at least 4",
        );
    }
    r.check("t_end", c.t_end >= 0.0, "must be non-negative");
    r.check("dt", c.dt > 0.0, "must be positive");
    r.check(
        "cfl_safety",
        c.cfl_safety > 0.0 && c.cfl_safety <= 1.0,
        "must lie in (0, 1]",
    );
    r.check("diag_every", c.diag_every >= 1, "must be at least 1");
    r.check("rms", c.rms >= 0.0, "must be non-negative");
    r.check("kcut", c.kcut > 0.0, "must be positive");
    r.check("eps_cfl", c.eps_cfl > 0.0, "must be positive");
    r.check(
        "threshold",
        c.threshold > 0.0 && c.threshold < 1.0,
        "must lie in (0, 1)",
    );
    match mode {
        Mode::Hall3d | Mode::Coupled3d => {
            r.check(
                "scheme",
                crate::integrator::Scheme::parse(&c.scheme).is_some(),
                "expected imex_euler, imex_rk2 or integrating_factor_rk4",
            );
            let presets: &[&str] = if mode == Mode::Hall3d {
                &["abc", "random", "helical", "guided"]
            } else {
                &["abc", "random", "orszag-tang"]
            };
            r.check(
                "init",
                presets.contains(&c.init.as_str()),
                &format!("expected one of {presets:?}"),
            );
        }
        Mode::MaxReg | Mode::EpsSweep => {
            r.check(
                "scheme",
                matches!(c.scheme.as_str(), "rk2" | "rk4"),
                "expected rk2 or rk4",
            );
            r.check(
                "init",
                matches!(c.init.as_str(), "guided" | "helical"),
                "expected guided or helical",
            );
            r.check("eps", c.eps > 0.0, "must be positive");
            r.check(
                "eps_list",
                !c.eps_list.is_empty() && c.eps_list.iter().all(|&e| e > 0.0),
                "must be a non-empty list of positive values",
            );
        }
        Mode::Axi => {
            r.check("nx", c.nx >= 8, "must be at least 8");
            r.check("nr", c.nr >= 8, "must be at least 8");
            r.check("lx", c.lx > 0.0, "must be positive");
            r.check("r_max", c.r_max > 0.0, "must be positive");
            r.check("ring_width", c.ring_width > 0.0, "must be positive");
            r.check("init", c.init == "ring", "expected ring");
        }
        Mode::Kmc => {
            r.check("nx", c.nx >= 8, "must be at least 8");
            r.check("lx", c.lx > 0.0, "must be positive");
            r.check("r0", c.r0 > 0.0, "must be positive");
            if let Some(nu) = c.nu {
                r.check("nu", nu > 0.0, "must be positive");
            }
        }
        Mode::Scaling | Mode::Verify => {}
    }

    if r.errors.is_empty() {
        Ok(ParsedConfig {
            config: c,
            warnings,
        })
    } else {
        let mut errors = r.errors;
        errors.sort_by_key(|e| e.line);
        Err(errors)
    }
}

// ---------------------------------------------------------------------------
// snapshots

pub const SNAPSHOT_MAGIC: &[u8; 5] = b"HMHD1";
pub const SNAPSHOT_VERSION: u32 = 1;
/// magic, version, mode + 3 reserved, dims, time, eps, extent, payload
/// length, checksum
pub const HEADER_LEN: usize = 5 + 4 + 4 + 24 + 8 + 8 + 16 + 8 + 4;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a snapshot file (bad magic bytes)")]
    BadMagic,
    #[error("snapshot is truncated: need {needed} bytes, found {found}")]
    Truncated { needed: usize, found: usize },
    #[error("payload checksum mismatch: header says {expected:08x}, data gives {found:08x}")]
    Checksum { expected: u32, found: u32 },
    #[error(
        "snapshot format version {found} is not supported (this build reads version {supported}); \
         load it with a build that reads version {found}, write the state out again, \
         or regenerate it from the run configuration"
    )]
    Version { found: u32, supported: u32 },
    #[error("snapshot holds a {found} state, expected {expected}")]
    ModeTag { expected: String, found: String },
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
    #[error("diagnostic times must be nondecreasing: {t} follows {prev}")]
    NonMonotone { prev: f64, t: f64 },
}

/// A state that can be written to disk, tagged by the mode that produced it.
#[derive(Clone, Debug, PartialEq)]
pub enum SnapshotState {
    Hall3d { b: SpectralVectorField, t: f64 },
    Coupled3d(MhdState),
    Axi { grid: AxiGrid, state: AxiState },
    MaxReg(MaxwellRegState),
}

impl SnapshotState {
    pub fn mode(&self) -> Mode {
        match self {
            SnapshotState::Hall3d { .. } => Mode::Hall3d,
            SnapshotState::Coupled3d(_) => Mode::Coupled3d,
            SnapshotState::Axi { .. } => Mode::Axi,
            SnapshotState::MaxReg(_) => Mode::MaxReg,
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            SnapshotState::Hall3d { t, .. } => *t,
            SnapshotState::Coupled3d(s) => s.t,
            SnapshotState::Axi { state, .. } => state.t,
            SnapshotState::MaxReg(s) => s.t,
        }
    }
}

fn put_spectral(out: &mut Vec<u8>, f: &SpectralVectorField) {
    for c in f.coeffs().iter() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
}

fn put_real(out: &mut Vec<u8>, f: &Array2<f64>) {
    for v in f.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serializes a state into the snapshot byte layout.
pub fn encode_snapshot(state: &SnapshotState) -> Vec<u8> {
    let mut payload = Vec::new();
    let (dims, eps, extent): ([u64; 3], f64, [f64; 2]) = match state {
        SnapshotState::Hall3d { b, .. } => {
            put_spectral(&mut payload, b);
            ([b.grid().n() as u64; 3], 0.0, [1.0, 1.0])
        }
        SnapshotState::Coupled3d(s) => {
            put_spectral(&mut payload, &s.u);
            put_spectral(&mut payload, &s.b);
            ([s.grid().n() as u64; 3], 0.0, [1.0, 1.0])
        }
        SnapshotState::Axi { grid, state } => {
            put_real(&mut payload, &state.psi);
            put_real(&mut payload, &state.b);
            (
                [grid.nx as u64, grid.nr as u64, 1],
                0.0,
                [grid.lx, grid.r_max],
            )
        }
        SnapshotState::MaxReg(s) => {
            put_spectral(&mut payload, &s.b);
            put_spectral(&mut payload, &s.e);
            ([s.grid().n() as u64; 3], s.eps, [1.0, 1.0])
        }
    };
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&[state.mode().tag(), 0, 0, 0]);
    for d in dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.extend_from_slice(&state.time().to_le_bytes());
    out.extend_from_slice(&eps.to_le_bytes());
    for e in extent {
        out.extend_from_slice(&e.to_le_bytes());
    }
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.bytes[self.pos..self.pos + N]
            .try_into()
            .expect("length checked");
        self.pos += N;
        out
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }

    fn spectral(&mut self, grid: &Grid3) -> Result<SpectralVectorField, IoError> {
        let m = grid.modes_per_axis();
        let data: Vec<Complex64> = (0..3 * m * m * m)
            .map(|_| {
                let re = self.f64();
                Complex64::new(re, self.f64())
            })
            .collect();
        let coeffs = Array4::from_shape_vec((3, m, m, m), data)
            .map_err(|e| IoError::Corrupt(e.to_string()))?;
        SpectralVectorField::from_coeffs(grid, coeffs).map_err(|e| IoError::Corrupt(e.to_string()))
    }

    fn real(&mut self, nx: usize, nr: usize) -> Result<Array2<f64>, IoError> {
        let data: Vec<f64> = (0..nx * nr).map(|_| self.f64()).collect();
        Array2::from_shape_vec((nx, nr), data).map_err(|e| IoError::Corrupt(e.to_string()))
    }
}

/// Parses snapshot bytes, verifying magic, version, length and checksum.
pub fn decode_snapshot(bytes: &[u8]) -> Result<SnapshotState, IoError> {
    if bytes.len() < SNAPSHOT_MAGIC.len() || &bytes[..5] != SNAPSHOT_MAGIC {
        return Err(if bytes.len() < SNAPSHOT_MAGIC.len() {
            IoError::Truncated {
                needed: HEADER_LEN,
                found: bytes.len(),
            }
        } else {
            IoError::BadMagic
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(IoError::Truncated {
            needed: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let mut cur = Cursor { bytes, pos: 5 };
    let version = cur.u32();
    if version != SNAPSHOT_VERSION {
        return Err(IoError::Version {
            found: version,
            supported: SNAPSHOT_VERSION,
        });
    }
    let [tag, ..] = cur.take::<4>();
    let dims = [cur.u64(), cur.u64(), cur.u64()];
    let t = cur.f64();
    let eps = cur.f64();
    let extent = [cur.f64(), cur.f64()];
    let payload_len = cur.u64() as usize;
    let crc = cur.u32();
    let needed = HEADER_LEN.saturating_add(payload_len);
    if bytes.len() < needed {
        return Err(IoError::Truncated {
            needed,
            found: bytes.len(),
        });
    }
    if bytes.len() > needed {
        return Err(IoError::Corrupt(format!(
            "{} trailing bytes after the payload",
            bytes.len() - needed
        )));
    }
    let payload = &bytes[HEADER_LEN..];
    let found = crc32fast::hash(payload);
    if found != crc {
        return Err(IoError::Checksum {
            expected: crc,
            found,
        });
    }
    let mode = Mode::from_tag(tag).ok_or_else(|| IoError::Corrupt(format!("mode tag {tag}")))?;
    let cube = || -> Result<Grid3, IoError> {
        if dims[0] != dims[1] || dims[0] != dims[2] {
            return Err(IoError::Corrupt(format!("non-cubic dims {dims:?}")));
        }
        Grid3::new(dims[0] as usize).map_err(|e| IoError::Corrupt(e.to_string()))
    };
    let expect_len = |len: usize| -> Result<(), IoError> {
        if len == payload_len {
            Ok(())
        } else {
            Err(IoError::Corrupt(format!(
                "payload holds {payload_len} bytes, dims imply {len}"
            )))
        }
    };
    let state = match mode {
        Mode::Hall3d => {
            let g = cube()?;
            expect_len(16 * 3 * g.mode_count())?;
            SnapshotState::Hall3d {
                b: cur.spectral(&g)?,
                t,
            }
        }
        Mode::Coupled3d => {
            let g = cube()?;
            expect_len(32 * 3 * g.mode_count())?;
            let u = cur.spectral(&g)?;
            let b = cur.spectral(&g)?;
            SnapshotState::Coupled3d(MhdState { u, b, t })
        }
        Mode::Axi => {
            let grid = AxiGrid::new(dims[0] as usize, dims[1] as usize, extent[0], extent[1])
                .map_err(|e| IoError::Corrupt(e.to_string()))?;
            expect_len(16 * grid.nx * grid.nr)?;
            let psi = cur.real(grid.nx, grid.nr)?;
            let b = cur.real(grid.nx, grid.nr)?;
            SnapshotState::Axi {
                grid,
                state: AxiState { psi, b, t },
            }
        }
        Mode::MaxReg => {
            let g = cube()?;
            expect_len(32 * 3 * g.mode_count())?;
            let b = cur.spectral(&g)?;
            let e = cur.spectral(&g)?;
            SnapshotState::MaxReg(MaxwellRegState { b, e, eps, t })
        }
        other => {
            return Err(IoError::Corrupt(format!(
                "mode {other} does not produce snapshots"
            )))
        }
    };
    Ok(state)
}

pub fn save_snapshot(state: &SnapshotState, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, encode_snapshot(state))?;
    Ok(())
}

/// Loads a snapshot and checks that it was written by `expected`.
pub fn load_snapshot(path: &Path, expected: Mode) -> Result<SnapshotState, IoError> {
    let state = decode_snapshot(&std::fs::read(path)?)?;
    if state.mode() != expected {
        return Err(IoError::ModeTag {
            expected: expected.name().into(),
            found: state.mode().name().into(),
        });
    }
    Ok(state)
}

// ---------------------------------------------------------------------------
// diagnostics CSV

pub const CSV_HEADER: &str = "t,energy_paper,energy_sym,energy_u,energy_B,dissipation,hall_power,helicity,current_helicity,div_u_max,div_B_max";

/// One CSV line; columns a mode does not produce stay empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagRow {
    pub t: f64,
    pub energy_paper: Option<f64>,
    pub energy_sym: Option<f64>,
    pub energy_u: Option<f64>,
    pub energy_b: Option<f64>,
    pub dissipation: Option<f64>,
    pub hall_power: Option<f64>,
    pub helicity: Option<f64>,
    pub current_helicity: Option<f64>,
    pub div_u_max: Option<f64>,
    pub div_b_max: Option<f64>,
}

impl From<&DiagnosticsRecord> for DiagRow {
    fn from(r: &DiagnosticsRecord) -> Self {
        Self {
            t: r.t,
            energy_paper: Some(r.energy_paper),
            energy_sym: Some(r.energy_sym),
            energy_u: Some(r.energy_u),
            energy_b: Some(r.energy_b),
            dissipation: Some(r.dissipation),
            hall_power: Some(r.hall_power),
            helicity: r.helicity,
            current_helicity: Some(r.current_helicity),
            div_u_max: Some(r.div_u_max),
            div_b_max: Some(r.div_b_max),
        }
    }
}

impl DiagRow {
    fn columns(&self) -> [Option<f64>; 11] {
        [
            Some(self.t),
            self.energy_paper,
            self.energy_sym,
            self.energy_u,
            self.energy_b,
            self.dissipation,
            self.hall_power,
            self.helicity,
            self.current_helicity,
            self.div_u_max,
            self.div_b_max,
        ]
    }
}

/// Writes the fixed-header diagnostic table, 17 significant digits per value.
pub struct CsvWriter<W: Write> {
    out: W,
    last_t: Option<f64>,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W) -> Result<Self, IoError> {
        writeln!(out, "{CSV_HEADER}")?;
        Ok(Self { out, last_t: None })
    }

    pub fn write(&mut self, row: &DiagRow) -> Result<(), IoError> {
        if let Some(prev) = self.last_t {
            if !(row.t >= prev) {
                return Err(IoError::NonMonotone { prev, t: row.t });
            }
        }
        self.last_t = Some(row.t);
        let line: Vec<String> = row
            .columns()
            .iter()
            .map(|c| c.map(|v| format!("{v:.16e}")).unwrap_or_default())
            .collect();
        writeln!(self.out, "{}", line.join(","))?;
        Ok(())
    }

    pub fn into_inner(mut self) -> Result<W, IoError> {
        self.out.flush()?;
        Ok(self.out)
    }
}
