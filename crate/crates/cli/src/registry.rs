//! On-disk registry: one directory per record.
//!
//! ```text
//! <root>/<name>/meta.json            claims, provenance, status
//! <root>/<name>/matrix.hex           present for listable codes
//! <root>/<name>/partitions/<p>.txt   one file per listed partition
//! <root>/<name>/verify.log           JSON lines, append only
//! <root>/.lock                       held by the single writer
//! ```

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use qmcover::code::{CodeRecord, NamedPartition, ParityCheckMatrix, Partition, Provenance, RecordMeta};
use qmcover::construct::{self, CodeNode, TableCode, TABLE_MAX_R};
use serde::Serialize;

use crate::error::CliError;

pub const ENV_ROOT: &str = "QMCOVER_REGISTRY";

pub struct Registry {
    root: PathBuf,
    nodes: HashMap<String, Arc<dyn CodeNode>>,
}

/// Exclusive write access, released on drop.
pub struct Lock {
    path: PathBuf,
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl Registry {
    pub fn open(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), nodes: HashMap::new() })
    }

    pub fn lock(&self) -> Result<Lock, CliError> {
        let path = self.root.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Lock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Locked(path)),
            Err(e) => Err(e.into()),
        }
    }

    fn dir(&self, name: &str) -> Result<PathBuf, CliError> {
        if !valid_name(name) {
            return Err(CliError::Usage(format!("invalid record name {name:?}")));
        }
        Ok(self.root.join(name))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.dir(name).is_ok_and(|d| d.join("meta.json").is_file())
    }

    pub fn names(&self) -> Result<Vec<String>, CliError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().to_string();
            if entry.path().join("meta.json").is_file() {
                out.push(name);
            }
        }
        out.sort();
        Ok(out)
    }

    /// Writes a record; an existing one of the same name must be identical
    /// in matrix and provenance unless `replace` is set.
    pub fn store(&mut self, rec: &CodeRecord, _lock: &Lock, replace: bool) -> Result<(), CliError> {
        let dir = self.dir(&rec.name)?;
        if !replace && self.contains(&rec.name) {
            let old = self.load(&rec.name)?;
            if old.matrix != rec.matrix || old.provenance != rec.provenance {
                return Err(CliError::Usage(format!("record {} exists with different contents", rec.name)));
            }
        }
        fs::create_dir_all(dir.join("partitions"))?;
        if let Some(h) = &rec.matrix {
            let text = h.emit_hex();
            if ParityCheckMatrix::parse_hex(&text)? != *h {
                return Err(CliError::Registry(format!("{}: matrix does not re-parse", rec.name)));
            }
            fs::write(dir.join("matrix.hex"), text)?;
        }
        for p in &rec.partitions {
            if !valid_name(&p.name) {
                return Err(CliError::Usage(format!("invalid partition name {:?}", p.name)));
            }
            fs::write(dir.join("partitions").join(format!("{}.txt", p.name)), p.partition.emit())?;
        }
        fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&rec.meta())? + "\n")?;
        self.nodes.remove(&rec.name);
        Ok(())
    }

    pub fn load(&self, name: &str) -> Result<CodeRecord, CliError> {
        let dir = self.dir(name)?;
        if !self.contains(name) {
            return Err(CliError::UnknownRecord(name.into()));
        }
        let meta: RecordMeta = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
        let mpath = dir.join("matrix.hex");
        let matrix = if mpath.is_file() { Some(ParityCheckMatrix::parse_hex(&fs::read_to_string(mpath)?)?) } else { None };
        let mut partitions = Vec::new();
        for summary in &meta.partitions {
            let path = dir.join("partitions").join(format!("{}.txt", summary.name));
            if path.is_file() {
                let partition = Partition::parse(&fs::read_to_string(path)?)?;
                partitions.push(NamedPartition { name: summary.name.clone(), partition });
            }
        }
        Ok(CodeRecord::from_meta(meta, matrix, partitions)?)
    }

    /// Updates status and appends one JSON line to the record's log.
    pub fn log_verification<T: Serialize>(&mut self, rec: &CodeRecord, entry: &T, _lock: &Lock) -> Result<(), CliError> {
        let dir = self.dir(&rec.name)?;
        let mut f = OpenOptions::new().create(true).append(true).open(dir.join("verify.log"))?;
        writeln!(f, "{}", serde_json::to_string(entry)?)?;
        fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&rec.meta())? + "\n")?;
        Ok(())
    }

    pub fn read_log(&self, name: &str) -> Result<Vec<String>, CliError> {
        let path = self.dir(name)?.join("verify.log");
        if !path.is_file() {
            return Ok(Vec::new());
        }
        Ok(fs::read_to_string(path)?.lines().map(str::to_string).collect())
    }

    /// A decodable node: constructions are rebuilt from their recipe, other
    /// records decode through lookup tables.
    pub fn node(&mut self, name: &str) -> Result<Arc<dyn CodeNode>, CliError> {
        if let Some(n) = self.nodes.get(name) {
            return Ok(n.clone());
        }
        let rec = self.load(name)?;
        let node: Arc<dyn CodeNode> = match &rec.provenance {
            Provenance::Constructed(spec) => {
                let start = self.node(&spec.start)?;
                let inner = match &spec.inner {
                    Some(i) => Some(self.node(i)?),
                    None => None,
                };
                Arc::new(construct::construct(name, spec, start, inner)?)
            }
            _ => {
                if rec.r > TABLE_MAX_R {
                    return Err(CliError::Registry(format!("{name}: r={} is above the table decoder limit", rec.r)));
                }
                Arc::new(TableCode::from_record(&rec).map_err(CliError::Registry)?)
            }
        };
        self.nodes.insert(name.to_string(), node.clone());
        Ok(node)
    }
}
