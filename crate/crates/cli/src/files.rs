// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use actsteer::{InputSet, LayeredModel, MapFile};
use tempfile::NamedTempFile;

use crate::commands::Failure;

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Runtime(format!("cannot open {}: {e}", path.display())))
}

fn context(path: &Path) -> impl Fn(actsteer::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

pub fn read_model(path: &Path) -> Result<LayeredModel, Failure> {
    LayeredModel::read_json(open(path)?).map_err(context(path))
}

pub fn read_inputs(path: &Path) -> Result<InputSet, Failure> {
    InputSet::read_text(open(path)?).map_err(context(path))
}

pub fn read_maps(path: &Path) -> Result<MapFile, Failure> {
    MapFile::read_json(open(path)?).map_err(context(path))
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so readers never see a partial file.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<&mut File>) -> actsteer::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err =
        |e: std::io::Error| Failure::Runtime(format!("cannot write {}: {e}", path.display()));
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w).map_err(context(path))?;
        w.flush().map_err(io_err)?;
    }
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn ensure_dir(path: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(path)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", path.display())))
}
