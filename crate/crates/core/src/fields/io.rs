use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::Field;
use crate::error::{Error, Result};

/// `snap_t<time, 6 decimals>.csv`
pub fn snapshot_file_name(time: f64) -> String {
    format!("snap_t{time:.6}.csv")
}

/// Writes `species,ix,iy,x,y,value` rows (species 1-based) into `dir`.
pub fn write_snapshot(field: &Field, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(snapshot_file_name(field.time));
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut out = BufWriter::new(file);
    let d = field.domain();
    let mut write = || -> std::io::Result<()> {
        out.write_all(b"species,ix,iy,x,y,value\n")?;
        for s in 0..field.nspecies() {
            for iy in 0..d.ny {
                for ix in 0..d.nx {
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        s + 1,
                        ix,
                        iy,
                        d.x(ix),
                        d.y(iy),
                        field.get(s, ix, iy)
                    )?;
                }
            }
        }
        out.flush()
    };
    write().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
