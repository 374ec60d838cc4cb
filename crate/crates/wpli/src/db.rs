//! Fingerprint database files: pretty-printed JSON with a schema version.
//!
//! Field order follows the struct declarations, so a save after a load
//! reproduces the file byte for byte and diffs stay readable.

use crate::error::{CliError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;
use wpli_core::fingerprint::FingerprintDatabase;

pub const DB_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct DbOut<'a> {
    schema_version: u32,
    database: &'a FingerprintDatabase,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DbIn {
    schema_version: u32,
    database: FingerprintDatabase,
}

pub fn to_json(db: &FingerprintDatabase) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&DbOut {
        schema_version: DB_SCHEMA_VERSION,
        database: db,
    })
    .map_err(|e| CliError::Data(format!("cannot serialize database: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<FingerprintDatabase> {
    let f: DbIn = serde_json::from_str(text).map_err(|e| CliError::Data(format!("database: {e}")))?;
    if f.schema_version != DB_SCHEMA_VERSION {
        return Err(CliError::Data(format!(
            "database schema_version {} is not supported (expected {DB_SCHEMA_VERSION})",
            f.schema_version
        )));
    }
    check(&f.database)?;
    Ok(f.database)
}

/// All vectors must share one length and every device needs references.
fn check(db: &FingerprintDatabase) -> Result<()> {
    let dim = db.dimension();
    for d in &db.devices {
        if d.references.is_empty() {
            return Err(CliError::Data(format!("device {} has no references", d.id)));
        }
        if d.references.iter().any(|r| Some(r.vector.len()) != dim) {
            return Err(CliError::Data(format!("device {}: vector lengths differ", d.id)));
        }
    }
    if let (Some(p), Some(n)) = (&db.lda, dim) {
        if p.dimension() != n {
            return Err(CliError::Data(format!(
                "projection expects {} bins, vectors have {n}",
                p.dimension()
            )));
        }
    }
    Ok(())
}

pub fn save_database(db: &FingerprintDatabase, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(db)?).map_err(|e| CliError::io(path, e))
}

pub fn load_database(path: &Path) -> Result<FingerprintDatabase> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    from_json(&text).map_err(|e| match e {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}
