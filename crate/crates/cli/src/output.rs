//! Output files, metadata sidecars and the kernel-table cache.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use hardedge_core::{DropletFamily, KernelCache, KernelTable, QuadratureSpec};
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

#[derive(Serialize)]
struct Meta<'a> {
    command: &'a str,
    version: &'a str,
    config_hash: String,
    created_unix_ms: u128,
    config: &'a RunConfig,
}

/// Creates `dir/name` and its `.meta.json` sidecar, returning a writer for
/// the payload.
pub fn create(cfg: &RunConfig, command: &str, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = cfg.output_dir.join(name);
    let meta = Meta {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config_hash: cfg.hash_hex(),
        created_unix_ms: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0),
        config: cfg,
    };
    let mut side = PathBuf::from(&path).into_os_string();
    side.push(".meta.json");
    let mut w = BufWriter::new(File::create(side)?);
    serde_json::to_writer_pretty(&mut w, &meta).map_err(|e| CliError::Io(e.to_string()))?;
    w.flush()?;
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes a pretty JSON payload with its sidecar.
pub fn write_json<T: Serialize>(cfg: &RunConfig, command: &str, name: &str, value: &T) -> Result<(), CliError> {
    let mut w = create(cfg, command, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn cache_path(dir: &Path, fam: &DropletFamily, n: usize, quad: &QuadratureSpec) -> PathBuf {
    let key: String = KernelTable::cache_key(fam, n, quad)
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '-' { c } else { '_' })
        .collect();
    dir.join("cache").join(format!("{key}.json"))
}

/// Loads the table from `output_dir/cache` or builds and stores it.
pub fn kernel_table(cfg: &RunConfig, fam: &DropletFamily, n: usize) -> Result<KernelTable, CliError> {
    let path = cache_path(&cfg.output_dir, fam, n, &cfg.quadrature);
    if let Ok(text) = std::fs::read_to_string(&path) {
        match serde_json::from_str::<KernelCache>(&text)
            .map_err(|e| e.to_string())
            .and_then(|c| KernelTable::from_cache(fam, &cfg.quadrature, c).map_err(|e| e.to_string()))
        {
            Ok(t) if t.n() == n => return Ok(t),
            Ok(_) => eprintln!("hardedge: ignoring cache {} (size mismatch)", path.display()),
            Err(e) => eprintln!("hardedge: ignoring cache {}: {e}", path.display()),
        }
    }
    let tab = KernelTable::build(fam, n, &cfg.quadrature)?;
    std::fs::create_dir_all(path.parent().expect("cache path has a parent"))?;
    let json = serde_json::to_string(&tab.to_cache()).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(&path, json)?;
    Ok(tab)
}
