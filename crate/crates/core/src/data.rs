//! Dataset ingestion and model persistence.
//!
//! Sparse observations arrive as tab-separated triple files
//! (`row_id<TAB>col_id<TAB>value`, `#` comment lines allowed); dense
//! attribute tables arrive as headerless CSV with one row per attribute.
//! Models persist in a small binary format with a magic string, version,
//! and a trailing checksum over the payload, so round trips are bit-exact
//! and truncation or corruption is detected rather than misread.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::Error;
use crate::matrix::DenseMatrix;
use crate::model::{ModelConfig, Normalization, TrainedModel};

const MODEL_MAGIC: &[u8; 4] = b"LLAE";
const MODEL_VERSION: u32 = 1;

/// Errors from file ingestion and model persistence.
#[derive(Debug)]
pub enum DataError {
    Io(io::Error),
    /// A line that does not parse as `row<TAB>col<TAB>value`.
    MalformedLine { line: usize, message: String },
    /// Interaction values must be non-negative.
    NegativeValue { line: usize, value: f64 },
    /// Assembly produced no users.
    NoUsers,
    /// The model file does not start with the expected magic bytes.
    BadMagic,
    /// The model file version is not supported.
    UnsupportedVersion { found: u32, supported: u32 },
    /// The file ended before the declared payload did.
    Truncated,
    /// Extra bytes follow the checksum.
    TrailingData { extra: usize },
    /// Stored and recomputed payload checksums disagree.
    ChecksumMismatch { stored: u64, computed: u64 },
    /// A matrix-level failure while densifying or rebuilding a model.
    Numeric(Error),
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::Io(e) => write!(f, "io error: {e}"),
            DataError::MalformedLine { line, message } => {
                write!(f, "malformed line {line}: {message}")
            }
            DataError::NegativeValue { line, value } => {
                write!(f, "negative value {value} on line {line}")
            }
            DataError::NoUsers => write!(f, "no users after assembly"),
            DataError::BadMagic => write!(f, "not a model file (bad magic bytes)"),
            DataError::UnsupportedVersion { found, supported } => {
                write!(f, "model file version {found} unsupported (expected {supported})")
            }
            DataError::Truncated => write!(f, "model file truncated"),
            DataError::TrailingData { extra } => {
                write!(f, "model file has {extra} trailing bytes")
            }
            DataError::ChecksumMismatch { stored, computed } => write!(
                f,
                "checksum mismatch: stored {stored:#018x}, computed {computed:#018x}"
            ),
            DataError::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for DataError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            DataError::Io(e) => Some(e),
            DataError::Numeric(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for DataError {
    fn from(e: io::Error) -> Self {
        DataError::Io(e)
    }
}

impl From<Error> for DataError {
    fn from(e: Error) -> Self {
        DataError::Numeric(e)
    }
}

/// How triple values densify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueMode {
    /// Any non-zero value clamps to 1; duplicates OR together.
    Binary,
    /// Values are taken as counts; duplicates sum.
    Count,
}

/// One parsed interaction, already interned to dense indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Parsed triple file: interned id tables plus the raw entries in file
/// order (duplicates preserved; they collapse at assembly).
#[derive(Debug, Clone, PartialEq)]
pub struct TripleList {
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub entries: Vec<Triple>,
    pub mode: ValueMode,
}

impl TripleList {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reads a tab-separated triple file, interning row and column ids to dense
/// indices in first-appearance order. Lines starting with `#` are comments;
/// blank lines are skipped. In binary mode every non-zero value clamps to 1.
pub fn load_sparse_triples(path: &Path, mode: ValueMode) -> Result<TripleList, DataError> {
    let file = File::open(path)?;
    parse_sparse_triples(BufReader::new(file), mode)
}

/// Parser behind [`load_sparse_triples`], usable on any reader.
pub fn parse_sparse_triples<R: BufRead>(
    reader: R,
    mode: ValueMode,
) -> Result<TripleList, DataError> {
    let mut row_ids = Vec::new();
    let mut col_ids = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut entries = Vec::new();

    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = line_no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (row_id, col_id, value_str) = match (fields.next(), fields.next(), fields.next()) {
            (Some(r), Some(c), Some(v)) if fields.next().is_none() => (r, c, v),
            _ => {
                return Err(DataError::MalformedLine {
                    line: line_no,
                    message: format!("expected `row<TAB>col<TAB>value`, got `{trimmed}`"),
                })
            }
        };
        let value: f64 = value_str.trim().parse().map_err(|_| DataError::MalformedLine {
            line: line_no,
            message: format!("value `{value_str}` is not a number"),
        })?;
        if !value.is_finite() {
            return Err(DataError::MalformedLine {
                line: line_no,
                message: format!("value `{value_str}` is not finite"),
            });
        }
        if value < 0.0 {
            return Err(DataError::NegativeValue {
                line: line_no,
                value,
            });
        }
        let value = match mode {
            ValueMode::Binary => {
                if value != 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ValueMode::Count => value,
        };

        let next_row = row_ids.len();
        let row = *row_index.entry(row_id.to_string()).or_insert_with(|| {
            row_ids.push(row_id.to_string());
            next_row
        });
        let next_col = col_ids.len();
        let col = *col_index.entry(col_id.to_string()).or_insert_with(|| {
            col_ids.push(col_id.to_string());
            next_col
        });
        entries.push(Triple { row, col, value });
    }

    Ok(TripleList {
        row_ids,
        col_ids,
        entries,
        mode,
    })
}

/// Writes a triple list back out in the same tab-separated format.
pub fn write_sparse_triples(path: &Path, triples: &TripleList) -> Result<(), DataError> {
    let mut out = BufWriter::new(File::create(path)?);
    for t in &triples.entries {
        writeln!(
            out,
            "{}\t{}\t{}",
            triples.row_ids[t.row], triples.col_ids[t.col], t.value
        )?;
    }
    out.flush()?;
    Ok(())
}

/// A behavior matrix, an attribute matrix and the identifier tables that
/// align their columns: column `j` of both matrices describes
/// `user_ids[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionDataset {
    /// Item-by-user behavior, `d x n`, non-negative.
    pub x: DenseMatrix,
    /// Attribute-by-user side information, `k x n`.
    pub s: DenseMatrix,
    pub user_ids: Vec<String>,
    pub item_ids: Vec<String>,
    pub attribute_ids: Vec<String>,
}

impl InteractionDataset {
    pub fn num_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn num_attributes(&self) -> usize {
        self.attribute_ids.len()
    }
}

/// Counters reported by [`assemble`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssembleReport {
    /// Users with behavior but no attributes (zero attribute column).
    pub behavior_only_users: usize,
    /// Users with attributes but no behavior (cold users).
    pub attribute_only_users: usize,
    /// Duplicate (row, col) occurrences collapsed during densification.
    pub duplicates_collapsed: usize,
}

/// Densifies behavior and attribute triples over the union of their user
/// universes. Users present in only one source get a zero column in the
/// other; the report counts them. Index assignment is deterministic:
/// behavior users first in appearance order, then attribute-only users.
pub fn assemble(
    behavior: &TripleList,
    attributes: &TripleList,
) -> Result<(InteractionDataset, AssembleReport), DataError> {
    let mut user_ids: Vec<String> = behavior.col_ids.clone();
    let mut user_index: HashMap<String, usize> = user_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i))
        .collect();
    for id in &attributes.col_ids {
        if !user_index.contains_key(id) {
            user_index.insert(id.clone(), user_ids.len());
            user_ids.push(id.clone());
        }
    }
    let n = user_ids.len();
    if n == 0 {
        return Err(DataError::NoUsers);
    }
    let d = behavior.row_ids.len();
    let k = attributes.row_ids.len();

    let mut report = AssembleReport::default();
    let mut x = DenseMatrix::zeros(d, n);
    let mut s = DenseMatrix::zeros(k, n);

    let fill = |list: &TripleList,
                matrix: &mut DenseMatrix,
                dups: &mut usize| {
        let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
        for t in &list.entries {
            let col = user_index[&list.col_ids[t.col]];
            if seen.insert((t.row, col), ()).is_some() {
                *dups += 1;
            }
            match list.mode {
                ValueMode::Binary => {
                    if t.value != 0.0 {
                        matrix[(t.row, col)] = 1.0;
                    }
                }
                ValueMode::Count => {
                    matrix[(t.row, col)] += t.value;
                }
            }
        }
    };
    let mut dups = 0;
    fill(behavior, &mut x, &mut dups);
    fill(attributes, &mut s, &mut dups);
    report.duplicates_collapsed = dups;

    let behavior_users: std::collections::HashSet<&String> = behavior.col_ids.iter().collect();
    let attribute_users: std::collections::HashSet<&String> = attributes.col_ids.iter().collect();
    report.behavior_only_users = behavior
        .col_ids
        .iter()
        .filter(|id| !attribute_users.contains(*id))
        .count();
    report.attribute_only_users = attributes
        .col_ids
        .iter()
        .filter(|id| !behavior_users.contains(*id))
        .count();

    Ok((
        InteractionDataset {
            x,
            s,
            user_ids,
            item_ids: behavior.row_ids.clone(),
            attribute_ids: attributes.row_ids.clone(),
        },
        report,
    ))
}

/// Loads a headerless CSV of reals, one matrix row per line.
pub fn load_dense_csv(path: &Path) -> Result<DenseMatrix, DataError> {
    let file = File::open(path)?;
    parse_dense_csv(BufReader::new(file))
}

/// Parser behind [`load_dense_csv`].
pub fn parse_dense_csv<R: BufRead>(reader: R) -> Result<DenseMatrix, DataError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = line_no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for field in trimmed.split(',') {
            let value: f64 = field.trim().parse().map_err(|_| DataError::MalformedLine {
                line: line_no,
                message: format!("field `{field}` is not a number"),
            })?;
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(DataError::MalformedLine {
                    line: line_no,
                    message: format!(
                        "row has {} fields, expected {}",
                        row.len(),
                        first.len()
                    ),
                });
            }
        }
        rows.push(row);
    }
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    let data: Vec<f64> = rows.into_iter().flatten().collect();
    DenseMatrix::new(r, c, data).map_err(DataError::from)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn push_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct PayloadReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PayloadReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DataError> {
        if self.pos + n > self.bytes.len() {
            return Err(DataError::Truncated);
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn f64(&mut self) -> Result<f64, DataError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, DataError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8, DataError> {
        Ok(self.take(1)?[0])
    }
}

/// Serializes a trained model. Little-endian layout: `LLAE` magic, u32
/// version, a payload of config scalars, dimensions, encoder entries and
/// the objective trace, then an FNV-1a 64 checksum of the payload.
pub fn save_model(model: &TrainedModel, path: &Path) -> Result<(), DataError> {
    let mut payload = Vec::new();
    payload.push(match model.column_normalization {
        Normalization::None => 0u8,
        Normalization::L2 => 1u8,
    });
    push_f64(&mut payload, model.config.lambda);
    push_f64(&mut payload, model.config.beta);
    push_u64(&mut payload, model.config.rank_r as u64);
    push_f64(&mut payload, model.config.corruption_rate);
    push_u64(&mut payload, model.config.max_iters as u64);
    push_f64(&mut payload, model.config.rel_tol);
    push_u64(&mut payload, model.config.seed);
    push_u64(&mut payload, model.w.rows() as u64);
    push_u64(&mut payload, model.w.cols() as u64);
    for &v in model.w.data() {
        push_f64(&mut payload, v);
    }
    push_u64(&mut payload, model.objective_trace.len() as u64);
    for &v in &model.objective_trace {
        push_f64(&mut payload, v);
    }

    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MODEL_MAGIC)?;
    out.write_all(&MODEL_VERSION.to_le_bytes())?;
    out.write_all(&payload)?;
    out.write_all(&fnv1a64(&payload).to_le_bytes())?;
    out.flush()?;
    Ok(())
}

/// Reads a model written by [`save_model`]; bit-exact inverse.
pub fn load_model(path: &Path) -> Result<TrainedModel, DataError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;

    if bytes.len() < 8 {
        return Err(if bytes.starts_with(&MODEL_MAGIC[..bytes.len().min(4)]) {
            DataError::Truncated
        } else {
            DataError::BadMagic
        });
    }
    if &bytes[0..4] != MODEL_MAGIC {
        return Err(DataError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != MODEL_VERSION {
        return Err(DataError::UnsupportedVersion {
            found: version,
            supported: MODEL_VERSION,
        });
    }
    if bytes.len() < 16 {
        return Err(DataError::Truncated);
    }
    let payload = &bytes[8..bytes.len() - 8];
    let stored =
        u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
    let computed = fnv1a64(payload);
    if stored != computed {
        return Err(DataError::ChecksumMismatch { stored, computed });
    }

    let mut r = PayloadReader {
        bytes: payload,
        pos: 0,
    };
    let normalization = match r.u8()? {
        0 => Normalization::None,
        1 => Normalization::L2,
        other => {
            return Err(DataError::MalformedLine {
                line: 0,
                message: format!("unknown normalization tag {other}"),
            })
        }
    };
    let config = ModelConfig {
        lambda: r.f64()?,
        beta: r.f64()?,
        rank_r: r.u64()? as usize,
        corruption_rate: r.f64()?,
        max_iters: r.u64()? as usize,
        rel_tol: r.f64()?,
        seed: r.u64()?,
    };
    let rows = r.u64()? as usize;
    let cols = r.u64()? as usize;
    let mut w_data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        w_data.push(r.f64()?);
    }
    let trace_len = r.u64()? as usize;
    let mut trace = Vec::with_capacity(trace_len);
    for _ in 0..trace_len {
        trace.push(r.f64()?);
    }
    if r.pos != payload.len() {
        return Err(DataError::TrailingData {
            extra: payload.len() - r.pos,
        });
    }

    let w = DenseMatrix::new(rows, cols, w_data)?;
    Ok(TrainedModel {
        w,
        config,
        objective_trace: trace,
        column_normalization: normalization,
    })
}
