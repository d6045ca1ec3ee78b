//! CSV logs and flat `key = value` configuration files.
//!
//! Every CSV file starts with one header row of the form
//!
//! ```text
//! # t,gx,gy,gz,ax,ay,az | version=1 source=sim rate_hz=200 fingerprint=0123abcd4567ef89
//! ```
//!
//! followed by one comma-separated row per sample. Numbers are written in
//! `{:.16e}` notation, which round-trips every `f64` exactly. The readers
//! only accept what the writers produce: a field whose canonical rendering
//! differs from its text is rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::ekf::{FilterConfig, NoiseDiscretization};
use crate::error::{Error, Result};
use crate::estimate::{idx, EstimateStep, EstimateTrajectory, EstimatorKind};
use crate::eval::PairedSeries;
use crate::generic::GenericConfig;
use crate::geom::{BodyRates, EulerAttitude, Mat6, Vec3, Vec6};
use crate::sensors::{ImuLog, ImuSample, NoiseConfig};
use crate::truth::{infer_rates, ManeuverScript, Segment, ThrustMode, TruthState, TruthTrajectory, VehicleParams};

pub const FORMAT_VERSION: u32 = 1;

pub const IMU_COLUMNS: [&str; 7] = ["t", "gx", "gy", "gz", "ax", "ay", "az"];
pub const TRUTH_COLUMNS: [&str; 10] = ["t", "phi", "theta", "psi", "vx_e", "vy_e", "vz_e", "x", "y", "z"];
pub const ESTIMATE_COLUMNS: [&str; 25] = [
    "t", "phi", "theta", "bgx", "bgy", "vbx", "vby", "sd3_phi", "sd3_theta", "sd3_bgx", "sd3_bgy",
    "sd3_vbx", "sd3_vby", "p_phi_phi", "p_phi_theta", "p_phi_vbx", "p_phi_vby", "p_theta_theta",
    "p_theta_vbx", "p_theta_vby", "p_vbx_vbx", "p_vbx_vby", "p_vby_vby", "innov_ax", "innov_ay",
];
pub const EVAL_COLUMNS: [&str; 10] = [
    "t", "e_phi", "e_theta", "e_vbx", "e_vby", "e_vtotal", "sd3_phi", "sd3_theta", "sd3_vbx",
    "sd3_vby",
];

/// Indices of the compared channels inside the six-state vector.
const BLOCK: [usize; 4] = [idx::PHI, idx::THETA, idx::VBX, idx::VBY];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Sim,
    External,
}

impl Source {
    fn as_str(&self) -> &'static str {
        match self {
            Source::Sim => "sim",
            Source::External => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogHeader {
    pub version: u32,
    pub source: Source,
    pub rate_hz: f64,
    /// Short digest of the configuration that produced the file, or `none`.
    pub fingerprint: String,
    /// Extra `key=value` tags, e.g. the estimator name.
    pub tags: Vec<(String, String)>,
}

impl LogHeader {
    pub fn sim(rate_hz: f64, fingerprint: impl Into<String>) -> Self {
        Self {
            version: FORMAT_VERSION,
            source: Source::Sim,
            rate_hz,
            fingerprint: fingerprint.into(),
            tags: Vec::new(),
        }
    }

    pub fn with_tag(mut self, key: &str, value: &str) -> Self {
        self.tags.push((key.to_string(), value.to_string()));
        self
    }

    pub fn tag(&self, key: &str) -> Option<&str> {
        self.tags.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn render(&self, columns: &[&str]) -> String {
        let mut s = format!(
            "# {} | version={} source={} rate_hz={} fingerprint={}",
            columns.join(","),
            self.version,
            self.source.as_str(),
            self.rate_hz,
            self.fingerprint
        );
        for (k, v) in &self.tags {
            let _ = write!(s, " {k}={v}");
        }
        s
    }
}

impl Default for LogHeader {
    fn default() -> Self {
        Self::sim(200.0, "none")
    }
}

/// First 16 hex digits of the SHA-256 of `bytes`.
pub fn fingerprint(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .take(8)
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Sample rate implied by the first two timestamps.
pub fn rate_hint(times: &[f64]) -> f64 {
    match times {
        [a, b, ..] if b > a => ((1.0 / (b - a)) * 1e6).round() / 1e6,
        _ => 0.0,
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_table(header: &LogHeader, columns: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = header.render(columns);
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&num(*v));
        }
        out.push('\n');
    }
    out
}

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn parse_header(path: &Path, line: &str, columns: &[&str]) -> Result<LogHeader> {
    let rest = line
        .strip_prefix("# ")
        .ok_or_else(|| malformed(path, 1, "header must start with '# '"))?;
    let (cols, meta) = rest
        .split_once(" | ")
        .ok_or_else(|| malformed(path, 1, "header lacks ' | ' metadata separator"))?;
    let expected = columns.join(",");
    if cols != expected {
        return Err(malformed(path, 1, format!("columns `{cols}`, expected `{expected}`")));
    }
    let mut header = LogHeader {
        version: 0,
        source: Source::Sim,
        rate_hz: f64::NAN,
        fingerprint: String::new(),
        tags: Vec::new(),
    };
    let mut seen = [false; 4];
    for tok in meta.split(' ') {
        let (k, v) = tok
            .split_once('=')
            .filter(|(k, v)| !k.is_empty() && !v.is_empty())
            .ok_or_else(|| malformed(path, 1, format!("bad metadata token `{tok}`")))?;
        match k {
            "version" => {
                header.version = v
                    .parse()
                    .map_err(|_| malformed(path, 1, format!("bad version `{v}`")))?;
                seen[0] = true;
            }
            "source" => {
                header.source = match v {
                    "sim" => Source::Sim,
                    "external" => Source::External,
                    _ => return Err(malformed(path, 1, format!("unknown source `{v}`"))),
                };
                seen[1] = true;
            }
            "rate_hz" => {
                header.rate_hz = v
                    .parse()
                    .ok()
                    .filter(|r: &f64| r.is_finite() && *r >= 0.0 && r.to_string() == v)
                    .ok_or_else(|| malformed(path, 1, format!("bad rate_hz `{v}`")))?;
                seen[2] = true;
            }
            "fingerprint" => {
                header.fingerprint = v.to_string();
                seen[3] = true;
            }
            _ => header.tags.push((k.to_string(), v.to_string())),
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(malformed(path, 1, "header lacks version, source, rate_hz or fingerprint"));
    }
    if header.version != FORMAT_VERSION {
        return Err(malformed(path, 1, format!("unsupported version {}", header.version)));
    }
    if header.render(columns) != line {
        return Err(malformed(path, 1, "header is not in canonical form"));
    }
    Ok(header)
}

/// Parses a table, checking field count, canonical numbers and strictly
/// increasing first column.
fn read_table(path: &Path, text: &str, columns: &[&str]) -> Result<(LogHeader, Vec<Vec<f64>>)> {
    if !text.ends_with('\n') {
        return Err(malformed(path, text.lines().count().max(1), "file must end with a newline"));
    }
    let mut lines = text[..text.len() - 1].split('\n');
    let head = lines.next().unwrap_or_default();
    let header = parse_header(path, head, columns)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(malformed(
                path,
                lineno,
                format!("{} fields, expected {}", fields.len(), columns.len()),
            ));
        }
        let mut row = Vec::with_capacity(columns.len());
        for (col, f) in columns.iter().zip(&fields) {
            let v: f64 = f
                .parse()
                .map_err(|_| malformed(path, lineno, format!("column {col}: `{f}` is not a number")))?;
            if num(v) != *f {
                return Err(malformed(path, lineno, format!("column {col}: `{f}` is not canonical")));
            }
            row.push(v);
        }
        if !row[0].is_finite() {
            return Err(malformed(path, lineno, "time must be finite"));
        }
        if let Some(prev) = rows.last() {
            if !(row[0] > prev[0]) {
                return Err(Error::NonMonotonicTime {
                    index: lineno,
                    prev: prev[0],
                    next: row[0],
                });
            }
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn imu_to_csv(log: &ImuLog, header: &LogHeader) -> String {
    write_table(
        header,
        &IMU_COLUMNS,
        log.samples.iter().map(|s| {
            vec![s.t, s.gyro.x, s.gyro.y, s.gyro.z, s.accel.x, s.accel.y, s.accel.z]
        }),
    )
}

pub fn imu_from_csv(path: &Path, text: &str) -> Result<(LogHeader, ImuLog)> {
    let (header, rows) = read_table(path, text, &IMU_COLUMNS)?;
    let samples = rows
        .iter()
        .map(|r| ImuSample {
            t: r[0],
            gyro: Vec3::new(r[1], r[2], r[3]),
            accel: Vec3::new(r[4], r[5], r[6]),
        })
        .collect();
    Ok((header, ImuLog::from_samples(samples)))
}

pub fn write_imu_csv(log: &ImuLog, header: &LogHeader, path: &Path) -> Result<()> {
    write_file(path, &imu_to_csv(log, header))
}

pub fn read_imu_csv(path: &Path) -> Result<(LogHeader, ImuLog)> {
    imu_from_csv(path, &read_file(path)?)
}

pub fn truth_to_csv(traj: &TruthTrajectory, header: &LogHeader) -> String {
    write_table(
        header,
        &TRUTH_COLUMNS,
        traj.states.iter().map(|s| {
            vec![
                s.t, s.att.phi, s.att.theta, s.att.psi, s.vel_e.x, s.vel_e.y, s.vel_e.z, s.pos_e.x,
                s.pos_e.y, s.pos_e.z,
            ]
        }),
    )
}

/// Truth read back from disk. Body rates are not stored; they are
/// recovered from consecutive attitudes.
pub fn truth_from_csv(path: &Path, text: &str) -> Result<(LogHeader, TruthTrajectory)> {
    let (header, rows) = read_table(path, text, &TRUTH_COLUMNS)?;
    let states: Vec<TruthState> = rows
        .iter()
        .map(|r| TruthState {
            t: r[0],
            att: EulerAttitude {
                phi: r[1],
                theta: r[2],
                psi: r[3],
            },
            vel_e: Vec3::new(r[4], r[5], r[6]),
            pos_e: Vec3::new(r[7], r[8], r[9]),
        })
        .collect();
    let dt = match states.as_slice() {
        [a, b, ..] => b.t - a.t,
        _ => 0.0,
    };
    let rates = infer_rates(&states)?;
    Ok((header, TruthTrajectory { dt, states, rates }))
}

pub fn write_truth_csv(traj: &TruthTrajectory, header: &LogHeader, path: &Path) -> Result<()> {
    write_file(path, &truth_to_csv(traj, header))
}

pub fn read_truth_csv(path: &Path) -> Result<(LogHeader, TruthTrajectory)> {
    truth_from_csv(path, &read_file(path)?)
}

/// Estimate rows exactly as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTable {
    pub kind: EstimatorKind,
    pub rows: Vec<[f64; 25]>,
}

impl EstimateTable {
    pub fn from_trajectory(est: &EstimateTrajectory) -> Self {
        let rows = est
            .steps
            .iter()
            .map(|s| {
                let mut r = [f64::NAN; 25];
                r[0] = s.t;
                r[1..7].copy_from_slice(s.x.as_slice());
                if let Some(p) = &s.p {
                    for i in 0..6 {
                        r[7 + i] = 3.0 * p[(i, i)].max(0.0).sqrt();
                    }
                    let mut k = 13;
                    for a in 0..4 {
                        for b in a..4 {
                            r[k] = p[(BLOCK[a], BLOCK[b])];
                            k += 1;
                        }
                    }
                }
                if let Some(inn) = s.innovation {
                    r[23] = inn[0];
                    r[24] = inn[1];
                }
                r
            })
            .collect();
        Self { kind: est.kind, rows }
    }

    /// Rebuilds estimate steps. The compared block of `P` is restored exactly;
    /// bias variances come from the 3σ columns and bias cross terms are zero.
    pub fn to_trajectory(&self) -> EstimateTrajectory {
        let steps = self
            .rows
            .iter()
            .map(|r| {
                let p = (!r[13].is_nan()).then(|| {
                    let mut p = Mat6::zeros();
                    for i in [idx::BGX, idx::BGY] {
                        p[(i, i)] = (r[7 + i] / 3.0).powi(2);
                    }
                    let mut k = 13;
                    for a in 0..4 {
                        for b in a..4 {
                            p[(BLOCK[a], BLOCK[b])] = r[k];
                            p[(BLOCK[b], BLOCK[a])] = r[k];
                            k += 1;
                        }
                    }
                    p
                });
                EstimateStep {
                    t: r[0],
                    x: Vec6::from_column_slice(&r[1..7]),
                    p,
                    innovation: (!r[23].is_nan()).then_some([r[23], r[24]]),
                }
            })
            .collect();
        EstimateTrajectory {
            kind: self.kind,
            steps,
            health: None,
        }
    }
}

pub fn estimates_to_csv(table: &EstimateTable, header: &LogHeader) -> String {
    let mut header = header.clone();
    header.tags.retain(|(k, _)| k != "estimator");
    header.tags.push(("estimator".into(), table.kind.name().into()));
    write_table(&header, &ESTIMATE_COLUMNS, table.rows.iter().map(|r| r.to_vec()))
}

pub fn estimates_from_csv(path: &Path, text: &str) -> Result<(LogHeader, EstimateTable)> {
    let (header, rows) = read_table(path, text, &ESTIMATE_COLUMNS)?;
    let kind = header
        .tag("estimator")
        .ok_or_else(|| malformed(path, 1, "header lacks estimator tag"))?
        .parse::<EstimatorKind>()
        .map_err(|e| malformed(path, 1, e))?;
    let rows = rows
        .into_iter()
        .map(|r| std::array::from_fn(|i| r[i]))
        .collect();
    Ok((header, EstimateTable { kind, rows }))
}

pub fn write_estimates_csv(table: &EstimateTable, header: &LogHeader, path: &Path) -> Result<()> {
    write_file(path, &estimates_to_csv(table, header))
}

pub fn read_estimates_csv(path: &Path) -> Result<(LogHeader, EstimateTable)> {
    estimates_from_csv(path, &read_file(path)?)
}

/// Plot-ready error series: per-step channel errors and 3σ bounds.
pub fn eval_to_csv(ps: &PairedSeries, header: &LogHeader) -> String {
    let errors = ps.errors();
    let vars = ps.variances();
    write_table(
        header,
        &EVAL_COLUMNS,
        errors.iter().enumerate().map(|(i, e)| {
            let mut row = vec![ps.t[i], e[0], e[1], e[2], e[3], e[2].abs() + e[3].abs()];
            for c in 0..4 {
                row.push(vars.as_ref().map_or(f64::NAN, |v| 3.0 * v[i][c].max(0.0).sqrt()));
            }
            row
        }),
    )
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, text)
}

/// Maneuver script text: one `duration,wx,wy,wz` segment per line, in
/// seconds and rad/s. Blank lines and `#` comments are ignored.
pub fn script_from_text(path: &Path, text: &str) -> Result<ManeuverScript> {
    let mut segments = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| malformed(path, i + 1, format!("`{line}` is not a list of numbers")))?;
        let [duration, wx, wy, wz] = vals[..] else {
            return Err(malformed(
                path,
                i + 1,
                format!("{} fields, expected duration,wx,wy,wz", vals.len()),
            ));
        };
        if !(duration.is_finite() && duration > 0.0) || ![wx, wy, wz].iter().all(|v| v.is_finite()) {
            return Err(malformed(path, i + 1, "duration must be > 0 and rates finite"));
        }
        segments.push(Segment {
            duration,
            rates: BodyRates::new(wx, wy, wz),
        });
    }
    if segments.is_empty() {
        return Err(malformed(path, 1, "script has no segments"));
    }
    ManeuverScript::new(segments)
}

pub fn read_script(path: &Path) -> Result<ManeuverScript> {
    script_from_text(path, &read_file(path)?)
}

/// Parsed `key = value` file. Keys are removed as they are consumed so
/// leftovers can be reported as unknown.
#[derive(Debug, Clone, Default)]
pub struct KvMap {
    path: PathBuf,
    entries: BTreeMap<String, (String, usize)>,
}

impl KvMap {
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                .ok_or_else(|| malformed(path, i + 1, format!("expected key = value, got `{line}`")))?;
            if entries.insert(k.to_string(), (v.to_string(), i + 1)).is_some() {
                return Err(malformed(path, i + 1, format!("duplicate key `{k}`")));
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(path, &read_file(path)?)
    }

    pub fn empty(label: &str) -> Self {
        Self {
            path: PathBuf::from(label),
            entries: BTreeMap::new(),
        }
    }

    /// Applies a `key=value` override, replacing any existing entry.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .filter(|(k, v)| !k.is_empty() && !v.is_empty())
            .ok_or_else(|| Error::invalid("--set", format!("expected key=value, got `{assignment}`")))?;
        self.entries.insert(k.to_string(), (v.to_string(), 0));
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Canonical `key=value` text of the remaining entries.
    pub fn canonical(&self) -> String {
        self.entries
            .iter()
            .fold(String::new(), |mut s, (k, (v, _))| {
                let _ = writeln!(s, "{k}={v}");
                s
            })
    }

    pub fn take_str(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    pub fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        let Some((v, line)) = self.entries.remove(key) else {
            return Ok(None);
        };
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Some)
            .ok_or_else(|| malformed(&self.path, line, format!("`{key}`: `{v}` is not a finite number")))
    }

    fn bounded(&mut self, key: &str, strict: bool) -> Result<Option<f64>> {
        let Some(v) = self.take_f64(key)? else {
            return Ok(None);
        };
        if v > 0.0 || (!strict && v == 0.0) {
            Ok(Some(v))
        } else {
            Err(Error::NonPositive {
                path: self.path.clone(),
                key: key.to_string(),
                value: v,
            })
        }
    }

    pub fn take_positive(&mut self, key: &str) -> Result<Option<f64>> {
        self.bounded(key, true)
    }

    pub fn take_non_negative(&mut self, key: &str) -> Result<Option<f64>> {
        self.bounded(key, false)
    }

    pub fn require_positive(&mut self, key: &str) -> Result<f64> {
        self.take_positive(key)?.ok_or_else(|| Error::MissingKey {
            path: self.path.clone(),
            key: key.to_string(),
        })
    }

    /// Fails on the first key that was never consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, (_, line))) => Err(Error::UnknownKey {
                path: self.path,
                line,
                key,
            }),
        }
    }
}

/// Types that can be built from a flat config file.
pub trait FromKv: Sized {
    /// Consumes the keys it understands.
    fn take_from(kv: &mut KvMap) -> Result<Self>;

    /// Builds the value and rejects any key left over.
    fn from_kv(mut kv: KvMap) -> Result<Self> {
        let v = Self::take_from(&mut kv)?;
        kv.finish()?;
        Ok(v)
    }
}

const AXES2: [&str; 2] = ["x", "y"];
const AXES3: [&str; 3] = ["x", "y", "z"];

impl FromKv for FilterConfig {
    /// `k1` and `m` are required. Noise keys are standard deviations:
    /// `sigma_g*` per gyro sample, `sigma_bg*` and `sigma_v*` as densities,
    /// `sigma_a*` per accelerometer sample, `p0_*` initial spreads.
    fn take_from(kv: &mut KvMap) -> Result<Self> {
        let mut c = FilterConfig::default();
        c.k1 = kv.require_positive("k1")?;
        c.m = kv.require_positive("m")?;
        if let Some(v) = kv.take_positive("g")? {
            c.g = v;
        }
        if let Some(v) = kv.take_positive("ts")? {
            let old = c.ts;
            c.ts = v;
            // Keep the default gyro density consistent with the new step.
            c.w[0] *= v / old;
            c.w[1] *= v / old;
        }
        for (a, ax) in AXES2.iter().enumerate() {
            if let Some(v) = kv.take_positive(&format!("tau_g{ax}"))? {
                c.tau_g[a] = v;
            }
            if let Some(v) = kv.take_positive(&format!("sigma_g{ax}"))? {
                c.w[a] = v * v * c.ts;
            }
            if let Some(v) = kv.take_positive(&format!("sigma_bg{ax}"))? {
                c.w[2 + a] = v * v;
            }
            if let Some(v) = kv.take_positive(&format!("sigma_v{ax}"))? {
                c.w[4 + a] = v * v;
            }
            if let Some(v) = kv.take_positive(&format!("sigma_a{ax}"))? {
                c.r[a] = v * v;
            }
        }
        for (i, name) in ["phi", "theta", "bgx", "bgy", "vbx", "vby"].iter().enumerate() {
            if let Some(v) = kv.take_positive(&format!("p0_{name}"))? {
                c.p0[i] = v * v;
            }
            if let Some(v) = kv.take_f64(&format!("x0_{name}"))? {
                c.x0[i] = v;
            }
        }
        if let Some(v) = kv.take_positive("trace_ceiling")? {
            c.trace_ceiling = v;
        }
        if let Some((v, line)) = kv.take_str("discretization") {
            c.discretization = match v.as_str() {
                "trapezoid" => NoiseDiscretization::Trapezoid,
                "zoh" => NoiseDiscretization::ZerothOrder,
                _ => {
                    return Err(malformed(
                        kv.path(),
                        line,
                        format!("discretization `{v}` (expected trapezoid|zoh)"),
                    ))
                }
            };
        }
        c.validate()?;
        Ok(c)
    }
}

impl FromKv for GenericConfig {
    fn take_from(kv: &mut KvMap) -> Result<Self> {
        let mut c = GenericConfig::default();
        if let Some(v) = kv.take_positive("alpha")? {
            c.alpha = v;
        }
        if let Some(v) = kv.take_positive("g")? {
            c.g = v;
        }
        if let Some(v) = kv.take_positive("ts")? {
            c.ts = v;
        }
        c.validate()?;
        Ok(c)
    }
}

impl FromKv for NoiseConfig {
    /// Sigmas may be zero for noise-free synthesis.
    fn take_from(kv: &mut KvMap) -> Result<Self> {
        let mut c = NoiseConfig::default();
        for (a, ax) in AXES3.iter().enumerate() {
            if let Some(v) = kv.take_non_negative(&format!("sigma_g{ax}"))? {
                c.sigma_g[a] = v;
            }
            if let Some(v) = kv.take_non_negative(&format!("sigma_bg{ax}"))? {
                c.sigma_bg[a] = v;
            }
            if let Some(v) = kv.take_positive(&format!("tau_g{ax}"))? {
                c.tau_g[a] = v;
            }
            if let Some(v) = kv.take_non_negative(&format!("sigma_a{ax}"))? {
                c.sigma_a[a] = v;
            }
            if let Some(v) = kv.take_f64(&format!("bias0_{ax}"))? {
                c.bias0[a] = v;
            }
        }
        if let Some((v, line)) = kv.take_str("seed") {
            c.seed = v
                .parse()
                .map_err(|_| malformed(kv.path(), line, format!("seed `{v}` is not an unsigned integer")))?;
        }
        c.validate()?;
        Ok(c)
    }
}

impl FromKv for VehicleParams {
    /// `thrust` is `altitude_hold`, `tilt_trim` or a constant in newtons.
    fn take_from(kv: &mut KvMap) -> Result<Self> {
        let mut p = VehicleParams::default();
        if let Some(v) = kv.take_positive("m")? {
            p.m = v;
        }
        if let Some(v) = kv.take_positive("k1")? {
            p.k1 = v;
        }
        if let Some(v) = kv.take_positive("g")? {
            p.g = v;
        }
        if let Some((v, line)) = kv.take_str("thrust") {
            p.thrust = match v.as_str() {
                "altitude_hold" => ThrustMode::AltitudeHold,
                "tilt_trim" => ThrustMode::TiltTrim,
                n => ThrustMode::Fixed(n.parse().map_err(|_| {
                    malformed(
                        kv.path(),
                        line,
                        format!("thrust `{v}` (expected altitude_hold|tilt_trim|<newtons>)"),
                    )
                })?),
            };
        }
        p.validate()?;
        Ok(p)
    }
}
