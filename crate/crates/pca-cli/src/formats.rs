//! Bit-exact dataset serialization: a commented CSV text format and a
//! packed binary format.
//!
//! Both formats carry the same header fields and round-trip losslessly;
//! symbols are stored 1-based externally (`1..=K`) and converted at the
//! boundary. Binary packs one byte per symbol, which caps `K` at 255.
//!
//! CSV layout (trajectory kind):
//! ```text
//! # version=1
//! # kind=trajectory
//! # N=3
//! # K=2
//! # n_v=1
//! # M=2
//! # L=1
//! # seed=42
//! # T=optional-reference
//! 1,0,1,2,1
//! 1,1,2,2,1
//! 2,0,1,1,1
//! 2,1,2,1,2
//! ```
//! Data lines are `m,t,x_1,…,x_N` with `m` 1-based and `t` in `0..=L`.
//! Ensemble files replace `M`/`L` with `times` and a per-time `counts`
//! list; the first column is then the 1-based sample index within time `t`.
//!
//! Binary layout: magic `PCAD`, `u32` version, kind byte (0 trajectory,
//! 1 ensemble), `u32` N/K/n_v, `u64` seed, length-prefixed generator
//! string, shape (`u64` M and L, or `u64` time count then per-time `u64`
//! counts), then the payload of 1-based symbol bytes in row order (m-major,
//! then t, then site; ensembles time-major). All integers little-endian.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use pca_core::inference::{EnsembleDataset, TrajectoryDataset};
use pca_core::{Configuration, ModelSpec, Symbol};

use crate::data::DataError;

/// Version written by this build; the only version it reads.
pub const FORMAT_VERSION: u32 = 1;

const MAGIC: &[u8; 4] = b"PCAD";

/// On-disk encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Binary,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "binary" | "bin" => Ok(Format::Binary),
            other => Err(format!("unknown format {other:?} (expected csv or binary)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Binary => "binary",
        })
    }
}

/// Either dataset kind, as stored in a file.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Trajectory(TrajectoryDataset),
    Ensemble(EnsembleDataset),
}

impl Dataset {
    pub fn spec(&self) -> &ModelSpec {
        match self {
            Dataset::Trajectory(d) => d.spec(),
            Dataset::Ensemble(d) => d.spec(),
        }
    }
}

/// Parsed file header.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub version: u32,
    pub spec: ModelSpec,
    /// `Some((m, l))` for trajectory files; `None` for ensembles.
    pub trajectory_shape: Option<(usize, usize)>,
    /// `Some(per-time counts)` for ensemble files; `None` for trajectories.
    pub ensemble_counts: Option<Vec<usize>>,
    /// Seed recorded by the producer (provenance, not re-derivation).
    pub seed: u64,
    /// Optional reference to the generating matrix (path or hash).
    pub generator: Option<String>,
}

impl DatasetHeader {
    fn for_dataset(dataset: &Dataset, seed: u64, generator: Option<&str>) -> DatasetHeader {
        let (trajectory_shape, ensemble_counts) = match dataset {
            Dataset::Trajectory(d) => (Some((d.trajectory_count(), d.transition_count())), None),
            Dataset::Ensemble(d) => (
                None,
                Some((0..d.time_count()).map(|t| d.snapshot(t).len()).collect()),
            ),
        };
        DatasetHeader {
            version: FORMAT_VERSION,
            spec: *dataset.spec(),
            trajectory_shape,
            ensemble_counts,
            seed,
            generator: generator.map(str::to_owned),
        }
    }
}

/// Serializes `dataset` to `path` in the chosen format.
pub fn write_dataset(
    path: &Path,
    dataset: &Dataset,
    seed: u64,
    generator: Option<&str>,
    format: Format,
) -> Result<(), DataError> {
    let header = DatasetHeader::for_dataset(dataset, seed, generator);
    let bytes = match format {
        Format::Csv => to_csv(&header, dataset).into_bytes(),
        Format::Binary => to_binary(&header, dataset),
    };
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

/// Reads a dataset, auto-detecting the format from the leading bytes.
pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, Dataset), DataError> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        from_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|e| DataError::Parse {
            line: 1,
            message: format!("file is neither binary (no magic) nor UTF-8 text: {e}"),
        })?;
        from_csv(&text)
    }
}

// ---------------------------------------------------------------- CSV ----

fn to_csv(header: &DatasetHeader, dataset: &Dataset) -> String {
    let mut out = String::new();
    out.push_str(&format!("# version={}\n", header.version));
    let spec = header.spec;
    match dataset {
        Dataset::Trajectory(d) => {
            out.push_str("# kind=trajectory\n");
            out.push_str(&format!("# N={}\n", spec.node_count()));
            out.push_str(&format!("# K={}\n", spec.alphabet_size()));
            out.push_str(&format!("# n_v={}\n", spec.radius()));
            out.push_str(&format!("# M={}\n", d.trajectory_count()));
            out.push_str(&format!("# L={}\n", d.transition_count()));
            out.push_str(&format!("# seed={}\n", header.seed));
            if let Some(g) = &header.generator {
                out.push_str(&format!("# T={g}\n"));
            }
            for (m, traj) in d.trajectories().iter().enumerate() {
                for (t, x) in traj.iter().enumerate() {
                    push_row(&mut out, m + 1, t, x);
                }
            }
        }
        Dataset::Ensemble(d) => {
            out.push_str("# kind=ensemble\n");
            out.push_str(&format!("# N={}\n", spec.node_count()));
            out.push_str(&format!("# K={}\n", spec.alphabet_size()));
            out.push_str(&format!("# n_v={}\n", spec.radius()));
            out.push_str(&format!("# times={}\n", d.time_count()));
            let counts: Vec<String> =
                (0..d.time_count()).map(|t| d.snapshot(t).len().to_string()).collect();
            out.push_str(&format!("# counts={}\n", counts.join(",")));
            out.push_str(&format!("# seed={}\n", header.seed));
            if let Some(g) = &header.generator {
                out.push_str(&format!("# T={g}\n"));
            }
            for t in 0..d.time_count() {
                for (i, x) in d.snapshot(t).iter().enumerate() {
                    push_row(&mut out, i + 1, t, x);
                }
            }
        }
    }
    out
}

fn push_row(out: &mut String, index_1based: usize, t: usize, x: &Configuration) {
    out.push_str(&index_1based.to_string());
    out.push(',');
    out.push_str(&t.to_string());
    for &s in x.states() {
        out.push(',');
        out.push_str(&(s as usize + 1).to_string());
    }
    out.push('\n');
}

/// Key=value header lines, with required-key accounting.
struct HeaderMap {
    entries: Vec<(String, String, usize)>,
}

impl HeaderMap {
    fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _, _)| k == key).map(|(_, v, _)| v.as_str())
    }

    fn require(&self, key: &str) -> Result<&str, DataError> {
        self.get(key).ok_or_else(|| DataError::Parse {
            line: self.entries.last().map_or(1, |(_, _, l)| *l),
            message: format!("missing required header key {key}"),
        })
    }

    fn require_usize(&self, key: &str) -> Result<usize, DataError> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| DataError::Parse {
            line: self.line_of(key),
            message: format!("header {key}={raw} is not a nonnegative integer"),
        })
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.iter().find(|(k, _, _)| k == key).map_or(1, |(_, _, l)| *l)
    }
}

fn from_csv(text: &str) -> Result<(DatasetHeader, Dataset), DataError> {
    let mut entries = Vec::new();
    let mut data_start = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if let Some(rest) = line.strip_prefix('#') {
            if data_start.is_some() {
                return Err(DataError::Parse {
                    line: line_no,
                    message: "header line after data rows".into(),
                });
            }
            let rest = rest.trim();
            let (k, v) = rest.split_once('=').ok_or_else(|| DataError::Parse {
                line: line_no,
                message: format!("header line is not key=value: {rest:?}"),
            })?;
            entries.push((k.trim().to_owned(), v.trim().to_owned(), line_no));
        } else if !line.is_empty() {
            data_start.get_or_insert(i);
        }
    }
    let headers = HeaderMap { entries };

    let version: u32 = headers.require("version")?.parse().map_err(|_| DataError::Parse {
        line: headers.line_of("version"),
        message: "version is not an integer".into(),
    })?;
    if version != FORMAT_VERSION {
        return Err(DataError::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }

    let n = headers.require_usize("N")?;
    let k = headers.require_usize("K")?;
    let n_v = headers.require_usize("n_v")?;
    let spec = ModelSpec::new(k, n, n_v)?;
    let seed: u64 = headers.require("seed")?.parse().map_err(|_| DataError::Parse {
        line: headers.line_of("seed"),
        message: "seed is not a u64".into(),
    })?;
    let generator = headers.get("T").map(str::to_owned);

    let kind = headers.require("kind")?;
    let data_lines = || {
        text.lines()
            .enumerate()
            .skip(data_start.unwrap_or(usize::MAX))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
    };

    match kind {
        "trajectory" => {
            let m = headers.require_usize("M")?;
            let l = headers.require_usize("L")?;
            let mut rows = vec![vec![None::<Configuration>; l + 1]; m];
            for (i, line) in data_lines() {
                let line_no = i + 1;
                let (idx, t, x) = parse_row(&spec, line, line_no)?;
                if idx == 0 || idx > m {
                    return Err(DataError::Parse {
                        line: line_no,
                        message: format!("trajectory index {idx} outside 1..={m}"),
                    });
                }
                if t > l {
                    return Err(DataError::Parse {
                        line: line_no,
                        message: format!("time {t} outside 0..={l}"),
                    });
                }
                if rows[idx - 1][t].replace(x).is_some() {
                    return Err(DataError::Parse {
                        line: line_no,
                        message: format!("duplicate row for (m={idx}, t={t})"),
                    });
                }
            }
            let mut trajectories = Vec::with_capacity(m);
            for (mi, row) in rows.into_iter().enumerate() {
                let mut traj = Vec::with_capacity(l + 1);
                for (t, slot) in row.into_iter().enumerate() {
                    traj.push(slot.ok_or_else(|| DataError::Parse {
                        line: text.lines().count(),
                        message: format!("missing row for (m={}, t={t})", mi + 1),
                    })?);
                }
                trajectories.push(traj);
            }
            let data = TrajectoryDataset::new(spec, trajectories)?;
            let header = DatasetHeader {
                version,
                spec,
                trajectory_shape: Some((m, l)),
                ensemble_counts: None,
                seed,
                generator,
            };
            Ok((header, Dataset::Trajectory(data)))
        }
        "ensemble" => {
            let times = headers.require_usize("times")?;
            let counts_raw = headers.require("counts")?;
            let counts: Vec<usize> = counts_raw
                .split(',')
                .map(|c| c.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| DataError::Parse {
                    line: headers.line_of("counts"),
                    message: "counts must be comma-separated integers".into(),
                })?;
            if counts.len() != times {
                return Err(DataError::Parse {
                    line: headers.line_of("counts"),
                    message: format!("{} counts for {} times", counts.len(), times),
                });
            }
            let mut snapshots: Vec<Vec<Option<Configuration>>> =
                counts.iter().map(|&c| vec![None; c]).collect();
            for (i, line) in data_lines() {
                let line_no = i + 1;
                let (idx, t, x) = parse_row(&spec, line, line_no)?;
                if t >= times {
                    return Err(DataError::Parse {
                        line: line_no,
                        message: format!("time {t} outside 0..{times}"),
                    });
                }
                if idx == 0 || idx > counts[t] {
                    return Err(DataError::Parse {
                        line: line_no,
                        message: format!("sample index {idx} outside 1..={}", counts[t]),
                    });
                }
                if snapshots[t][idx - 1].replace(x).is_some() {
                    return Err(DataError::Parse {
                        line: line_no,
                        message: format!("duplicate row for (i={idx}, t={t})"),
                    });
                }
            }
            let mut filled = Vec::with_capacity(times);
            for (t, snap) in snapshots.into_iter().enumerate() {
                let mut v = Vec::with_capacity(snap.len());
                for (i, slot) in snap.into_iter().enumerate() {
                    v.push(slot.ok_or_else(|| DataError::Parse {
                        line: text.lines().count(),
                        message: format!("missing row for (i={}, t={t})", i + 1),
                    })?);
                }
                filled.push(v);
            }
            let data = EnsembleDataset::new(spec, filled)?;
            let header = DatasetHeader {
                version,
                spec,
                trajectory_shape: None,
                ensemble_counts: Some(counts),
                seed,
                generator,
            };
            Ok((header, Dataset::Ensemble(data)))
        }
        other => Err(DataError::Parse {
            line: headers.line_of("kind"),
            message: format!("unknown dataset kind {other:?}"),
        }),
    }
}

/// Parses one `m,t,x_1,…,x_N` data row; symbols arrive 1-based.
fn parse_row(
    spec: &ModelSpec,
    line: &str,
    line_no: usize,
) -> Result<(usize, usize, Configuration), DataError> {
    let fields: Vec<&str> = line.split(',').collect();
    let expected = 2 + spec.node_count();
    if fields.len() != expected {
        return Err(DataError::Parse {
            line: line_no,
            message: format!("expected {expected} fields, found {}", fields.len()),
        });
    }
    let parse_field = |raw: &str, what: &str| -> Result<usize, DataError> {
        raw.trim().parse().map_err(|_| DataError::Parse {
            line: line_no,
            message: format!("{what} {raw:?} is not a nonnegative integer"),
        })
    };
    let idx = parse_field(fields[0], "index")?;
    let t = parse_field(fields[1], "time")?;
    let k = spec.alphabet_size();
    let mut states = Vec::with_capacity(spec.node_count());
    for raw in &fields[2..] {
        let s = parse_field(raw, "symbol")?;
        if s == 0 || s > k {
            return Err(DataError::Parse {
                line: line_no,
                message: format!("symbol {s} outside 1..={k}"),
            });
        }
        states.push((s - 1) as Symbol);
    }
    let x = Configuration::from_symbols(spec, &states)?;
    Ok((idx, t, x))
}

// ------------------------------------------------------------- binary ----

struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn to_binary(header: &DatasetHeader, dataset: &Dataset) -> Vec<u8> {
    let spec = header.spec;
    assert!(
        spec.alphabet_size() <= 255,
        "binary format packs one byte per symbol (K ≤ 255)"
    );
    let mut w = ByteWriter { buf: Vec::new() };
    w.buf.extend_from_slice(MAGIC);
    w.u32(header.version);
    w.buf.push(match dataset {
        Dataset::Trajectory(_) => 0,
        Dataset::Ensemble(_) => 1,
    });
    w.u32(spec.node_count() as u32);
    w.u32(spec.alphabet_size() as u32);
    w.u32(spec.radius() as u32);
    w.u64(header.seed);
    let gen_bytes = header.generator.as_deref().unwrap_or("").as_bytes();
    w.u32(gen_bytes.len() as u32);
    w.buf.extend_from_slice(gen_bytes);
    match dataset {
        Dataset::Trajectory(d) => {
            w.u64(d.trajectory_count() as u64);
            w.u64(d.transition_count() as u64);
            for traj in d.trajectories() {
                for x in traj {
                    for &s in x.states() {
                        w.buf.push(s as u8 + 1);
                    }
                }
            }
        }
        Dataset::Ensemble(d) => {
            w.u64(d.time_count() as u64);
            for t in 0..d.time_count() {
                w.u64(d.snapshot(t).len() as u64);
            }
            for t in 0..d.time_count() {
                for x in d.snapshot(t) {
                    for &s in x.states() {
                        w.buf.push(s as u8 + 1);
                    }
                }
            }
        }
    }
    w.buf
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], DataError> {
        if self.pos + n > self.bytes.len() {
            return Err(DataError::Binary {
                offset: self.pos,
                message: format!("truncated while reading {what}"),
            });
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }
    fn u32(&mut self, what: &str) -> Result<u32, DataError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("length 4")))
    }
    fn u64(&mut self, what: &str) -> Result<u64, DataError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("length 8")))
    }
    fn byte(&mut self, what: &str) -> Result<u8, DataError> {
        Ok(self.take(1, what)?[0])
    }
}

fn from_binary(bytes: &[u8]) -> Result<(DatasetHeader, Dataset), DataError> {
    let mut r = ByteReader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    debug_assert_eq!(magic, MAGIC, "caller dispatched on the magic");
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(DataError::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    let kind = r.byte("kind")?;
    let n = r.u32("N")? as usize;
    let k = r.u32("K")? as usize;
    let n_v = r.u32("n_v")? as usize;
    let spec = ModelSpec::new(k, n, n_v)?;
    let seed = r.u64("seed")?;
    let gen_len = r.u32("generator length")? as usize;
    let generator = if gen_len == 0 {
        None
    } else {
        let raw = r.take(gen_len, "generator")?;
        Some(String::from_utf8(raw.to_vec()).map_err(|_| DataError::Binary {
            offset: r.pos - gen_len,
            message: "generator reference is not UTF-8".into(),
        })?)
    };

    let read_config = |r: &mut ByteReader| -> Result<Configuration, DataError> {
        let offset = r.pos;
        let raw = r.take(n, "configuration")?;
        let mut states = Vec::with_capacity(n);
        for (j, &b) in raw.iter().enumerate() {
            if b == 0 || b as usize > k {
                return Err(DataError::Binary {
                    offset: offset + j,
                    message: format!("symbol byte {b} outside 1..={k}"),
                });
            }
            states.push((b - 1) as Symbol);
        }
        Ok(Configuration::from_symbols(&spec, &states)?)
    };

    match kind {
        0 => {
            let m = r.u64("M")? as usize;
            let l = r.u64("L")? as usize;
            let mut trajectories = Vec::with_capacity(m);
            for _ in 0..m {
                let mut traj = Vec::with_capacity(l + 1);
                for _ in 0..=l {
                    traj.push(read_config(&mut r)?);
                }
                trajectories.push(traj);
            }
            expect_eof(&r)?;
            let data = TrajectoryDataset::new(spec, trajectories)?;
            let header = DatasetHeader {
                version,
                spec,
                trajectory_shape: Some((m, l)),
                ensemble_counts: None,
                seed,
                generator,
            };
            Ok((header, Dataset::Trajectory(data)))
        }
        1 => {
            let times = r.u64("time count")? as usize;
            let mut counts = Vec::with_capacity(times);
            for _ in 0..times {
                counts.push(r.u64("per-time count")? as usize);
            }
            let mut snapshots = Vec::with_capacity(times);
            for &c in &counts {
                let mut snap = Vec::with_capacity(c);
                for _ in 0..c {
                    snap.push(read_config(&mut r)?);
                }
                snapshots.push(snap);
            }
            expect_eof(&r)?;
            let data = EnsembleDataset::new(spec, snapshots)?;
            let header = DatasetHeader {
                version,
                spec,
                trajectory_shape: None,
                ensemble_counts: Some(counts),
                seed,
                generator,
            };
            Ok((header, Dataset::Ensemble(data)))
        }
        other => Err(DataError::Binary {
            offset: 8,
            message: format!("unknown dataset kind byte {other}"),
        }),
    }
}

fn expect_eof(r: &ByteReader) -> Result<(), DataError> {
    if r.pos != r.bytes.len() {
        return Err(DataError::Binary {
            offset: r.pos,
            message: format!("{} trailing bytes after payload", r.bytes.len() - r.pos),
        });
    }
    Ok(())
}
