//! Durable single-file persistence of the entity graph.
//!
//! The store file is UTF-8 JSON lines. The first line is a header naming the
//! format; every following line is one committed transaction:
//!
//! ```text
//! {"format":"xannot-store","format_version":1}
//! {"version":1,"mutations":[{"put_resource":{...}},{"put_selector":{...}}]}
//! {"version":2,"mutations":[{"delete_link":"..."}]}
//! ```
//!
//! A commit appends its line (newline last) and syncs before returning. A line
//! without its trailing newline is a torn write and is dropped on open.
//! Compaction writes the whole graph as a single transaction to a sibling
//! temp file and renames it over the store file.

mod integrity;
pub mod interchange;

use std::fs::{self, File, OpenOptions, TryLockError};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, MutexGuard, RwLock};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Mutation};

pub use integrity::{
    check_graph, DanglingRef, DuplicateLocator, IntegrityReport, InvalidEntity, KindViolation, RefRole,
};

pub const STORE_FORMAT: &str = "xannot-store";
pub const STORE_FORMAT_VERSION: u64 = 1;

/// An ordered batch of mutations applied all-or-nothing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub mutations: Vec<Mutation>,
}

impl Transaction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, m: Mutation) -> &mut Self {
        self.mutations.push(m);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.mutations.is_empty()
    }
}

impl From<Vec<Mutation>> for Transaction {
    fn from(mutations: Vec<Mutation>) -> Self {
        Transaction { mutations }
    }
}

/// The graph as of one committed version. Immutable once published.
#[derive(Debug, Clone, Default)]
pub struct Snapshot {
    pub version: u64,
    pub graph: Graph,
}

#[derive(Debug, Clone)]
pub struct StoreOptions {
    /// fsync after each commit.
    pub sync: bool,
    /// Compact after this many appended transactions; 0 disables.
    pub compact_every: usize,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions { sync: true, compact_every: 1000 }
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    format_version: u64,
}

#[derive(Serialize, Deserialize)]
struct Record {
    version: u64,
    mutations: Vec<Mutation>,
}

struct Backing {
    path: PathBuf,
    file: File,
    len: u64,
    _lock: File,
}

struct Writer {
    backing: Option<Backing>,
    appended: usize,
}

pub struct Store {
    state: RwLock<Arc<Snapshot>>,
    writer: Mutex<Writer>,
    options: StoreOptions,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("path", &self.path()).field("version", &self.version()).finish()
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

fn sync_parent(path: &Path) -> io::Result<()> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(dir) => File::open(dir)?.sync_all(),
        None => File::open(".")?.sync_all(),
    }
}

fn header_line() -> Vec<u8> {
    let mut line = serde_json::to_vec(&Header { format: STORE_FORMAT.into(), format_version: STORE_FORMAT_VERSION })
        .expect("header serializes");
    line.push(b'\n');
    line
}

impl Store {
    /// A store that lives only in memory. Commits are validated the same way.
    pub fn in_memory() -> Self {
        Store {
            state: RwLock::new(Arc::new(Snapshot::default())),
            writer: Mutex::new(Writer { backing: None, appended: 0 }),
            options: StoreOptions { sync: false, compact_every: 0 },
        }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::open_with(path, StoreOptions::default())
    }

    pub fn open_with(path: impl AsRef<Path>, options: StoreOptions) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let lock = OpenOptions::new().create(true).truncate(false).write(true).open(sibling(&path, ".lock"))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(TryLockError::WouldBlock) => return Err(Error::StoreLocked(path)),
            Err(TryLockError::Error(e)) => return Err(e.into()),
        }

        // A leftover compaction file means a crash before its rename; the
        // store file itself is still the committed state.
        let staged = sibling(&path, ".compact");
        if staged.exists() {
            tracing::warn!(path = %staged.display(), "discarding unfinished compaction");
            fs::remove_file(&staged)?;
        }

        if !path.exists() {
            let tmp = sibling(&path, ".new");
            let mut f = File::create(&tmp)?;
            f.write_all(&header_line())?;
            f.sync_all()?;
            fs::rename(&tmp, &path)?;
            sync_parent(&path)?;
        }

        let bytes = fs::read(&path)?;
        let (snapshot, good_len) = replay(&bytes)?;
        if (good_len as usize) < bytes.len() {
            tracing::warn!(
                path = %path.display(),
                dropped = bytes.len() - good_len as usize,
                "dropping torn tail of store file"
            );
        }
        let file = OpenOptions::new().write(true).open(&path)?;
        file.set_len(good_len)?;
        file.sync_all()?;
        let file = OpenOptions::new().append(true).open(&path)?;

        Ok(Store {
            state: RwLock::new(Arc::new(snapshot)),
            writer: Mutex::new(Writer {
                backing: Some(Backing { path, file, len: good_len, _lock: lock }),
                appended: 0,
            }),
            options,
        })
    }

    pub fn path(&self) -> Option<PathBuf> {
        self.writer.lock().backing.as_ref().map(|b| b.path.clone())
    }

    /// The latest committed state. Cheap; holds no lock after returning.
    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.state.read().clone()
    }

    pub fn version(&self) -> u64 {
        self.state.read().version
    }

    /// Validates and durably applies `tx`, returning the new version.
    ///
    /// On any error the in-memory state and the store file are left exactly
    /// as they were.
    pub fn commit(&self, tx: impl Into<Transaction>) -> Result<u64> {
        let tx = tx.into();
        let mut writer = self.writer.lock();
        let base = self.snapshot();

        let mut graph = base.graph.clone();
        for m in &tx.mutations {
            graph.apply(m.clone());
        }
        let report = integrity::check_mutations(&graph, &tx.mutations)
            .with_invalid(integrity::unknown_deletes(&base.graph, &tx.mutations));
        if !report.ok {
            return Err(Error::IntegrityViolation(Box::new(report)));
        }

        let version = base.version + 1;
        if let Some(b) = writer.backing.as_mut() {
            let record = Record { version, mutations: tx.mutations };
            let mut line = serde_json::to_vec(&record).map_err(io::Error::other)?;
            line.push(b'\n');
            if let Err(e) = append(b, &line, self.options.sync) {
                // Put the file back to the last committed byte.
                let _ = b.file.set_len(b.len);
                return Err(e.into());
            }
            b.len += line.len() as u64;
        }
        writer.appended += 1;
        *self.state.write() = Arc::new(Snapshot { version, graph });

        if self.options.compact_every > 0 && writer.appended >= self.options.compact_every {
            if let Err(e) = self.compact_locked(&mut writer) {
                // The commit itself is durable; compaction will be retried.
                tracing::warn!(error = %e, "compaction failed");
            }
        }
        Ok(version)
    }

    /// Full integrity check of the latest state.
    pub fn check_integrity(&self) -> IntegrityReport {
        check_graph(&self.snapshot().graph)
    }

    /// Rewrites the store file to a single transaction holding the current
    /// graph.
    pub fn compact(&self) -> Result<()> {
        let mut writer = self.writer.lock();
        self.compact_locked(&mut writer)
    }

    /// First half of a compaction: the replacement file is written and synced
    /// but not yet renamed into place. Dropping the result abandons it.
    pub fn stage_compaction(&self) -> Result<StagedCompaction<'_>> {
        let writer = self.writer.lock();
        let Some(b) = writer.backing.as_ref() else {
            return Ok(StagedCompaction { writer, staged: None });
        };
        let staged = self.write_staged(&b.path)?;
        Ok(StagedCompaction { writer, staged: Some(staged) })
    }

    fn compact_locked(&self, writer: &mut Writer) -> Result<()> {
        let Some(b) = writer.backing.as_ref() else {
            writer.appended = 0;
            return Ok(());
        };
        let staged = self.write_staged(&b.path)?;
        finish_compaction(writer, &staged)
    }

    fn write_staged(&self, path: &Path) -> Result<PathBuf> {
        let staged = sibling(path, ".compact");
        let snap = self.snapshot();
        let record = Record { version: snap.version, mutations: snap.graph.to_mutations() };
        let mut f = File::create(&staged)?;
        f.write_all(&header_line())?;
        serde_json::to_writer(&mut f, &record).map_err(io::Error::other)?;
        f.write_all(b"\n")?;
        f.sync_all()?;
        Ok(staged)
    }
}

fn append(b: &mut Backing, line: &[u8], sync: bool) -> io::Result<()> {
    b.file.write_all(line)?;
    if sync {
        b.file.sync_data()?;
    }
    Ok(())
}

fn finish_compaction(writer: &mut Writer, staged: &Path) -> Result<()> {
    let b = writer.backing.as_mut().expect("file-backed store");
    fs::rename(staged, &b.path)?;
    sync_parent(&b.path)?;
    b.file = OpenOptions::new().append(true).open(&b.path)?;
    b.len = b.file.metadata()?.len();
    writer.appended = 0;
    Ok(())
}

pub struct StagedCompaction<'a> {
    writer: MutexGuard<'a, Writer>,
    staged: Option<PathBuf>,
}

impl StagedCompaction<'_> {
    pub fn staged_path(&self) -> Option<&Path> {
        self.staged.as_deref()
    }

    /// Renames the staged file into place.
    pub fn finish(mut self) -> Result<()> {
        match self.staged.take() {
            Some(staged) => finish_compaction(&mut self.writer, &staged),
            None => Ok(()),
        }
    }
}

/// Rebuilds the snapshot from file bytes. Returns the byte length of the
/// valid prefix (everything before a torn final line).
fn replay(bytes: &[u8]) -> Result<(Snapshot, u64)> {
    let mut snapshot = Snapshot::default();
    let mut offset = 0usize;
    let mut line_no = 0usize;
    while offset < bytes.len() {
        let Some(nl) = bytes[offset..].iter().position(|&b| b == b'\n') else {
            // No terminator: the last append never completed.
            break;
        };
        let line = &bytes[offset..offset + nl];
        line_no += 1;
        if line_no == 1 {
            let header: Header = serde_json::from_slice(line)
                .map_err(|e| Error::Corrupt { line: 1, reason: format!("bad header: {e}") })?;
            if header.format != STORE_FORMAT {
                return Err(Error::Corrupt { line: 1, reason: format!("unknown format {}", header.format) });
            }
            if header.format_version != STORE_FORMAT_VERSION {
                return Err(Error::VersionUnsupported(header.format_version));
            }
        } else if !line.iter().all(u8::is_ascii_whitespace) {
            let record: Record =
                serde_json::from_slice(line).map_err(|e| Error::Corrupt { line: line_no, reason: e.to_string() })?;
            if record.version <= snapshot.version && line_no > 2 {
                return Err(Error::Corrupt {
                    line: line_no,
                    reason: format!("version {} does not follow {}", record.version, snapshot.version),
                });
            }
            for m in record.mutations {
                snapshot.graph.apply(m);
            }
            snapshot.version = record.version;
        }
        offset += nl + 1;
    }
    if line_no == 0 {
        return Err(Error::Corrupt { line: 1, reason: "missing header".into() });
    }
    Ok((snapshot, offset as u64))
}
