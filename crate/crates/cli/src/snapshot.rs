//! Versioned binary snapshot format plus a CSV mirror for 1D runs.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   4 bytes  "TEFS"
//! version u32      1
//! d       u32
//! n       u32
//! t       f64
//! nfields u32
//! per field:
//!   name_len u32, name bytes (utf-8),
//!   n^d f64 values, row-major (x fastest)
//! ```

use anyhow::{anyhow, bail, Context, Result};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use torus_euler::field::{ScalarField, VectorField};
use torus_euler::grid::TorusGrid;

pub const MAGIC: &[u8; 4] = b"TEFS";
pub const VERSION: u32 = 1;

/// One stored snapshot: named scalar fields on a common grid at time `t`.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub grid: TorusGrid,
    pub fields: Vec<(String, ScalarField)>,
}

impl Snapshot {
    pub fn from_state(t: f64, rho: &ScalarField, u: &VectorField) -> Self {
        let mut fields = vec![("rho".to_string(), rho.clone())];
        let names = ["u_x", "u_y"];
        for (i, c) in u.components().iter().enumerate() {
            fields.push((names[i].to_string(), c.clone()));
        }
        Snapshot {
            t,
            grid: rho.grid().clone(),
            fields,
        }
    }

    pub fn field(&self, name: &str) -> Option<&ScalarField> {
        self.fields
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f)
    }
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    let file = std::fs::File::create(path)
        .with_context(|| format!("creating snapshot {}", path.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(snap.grid.dim() as u32)?;
    w.write_u32::<LittleEndian>(snap.grid.n() as u32)?;
    w.write_f64::<LittleEndian>(snap.t)?;
    w.write_u32::<LittleEndian>(snap.fields.len() as u32)?;
    for (name, field) in &snap.fields {
        let bytes = name.as_bytes();
        w.write_u32::<LittleEndian>(bytes.len() as u32)?;
        w.write_all(bytes)?;
        for &v in field.values() {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening snapshot {}", path.display()))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        bail!("{}: not a snapshot file (bad magic)", path.display());
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        bail!("{}: unsupported snapshot version {version}", path.display());
    }
    let d = r.read_u32::<LittleEndian>()? as usize;
    let n = r.read_u32::<LittleEndian>()? as usize;
    let t = r.read_f64::<LittleEndian>()?;
    let nfields = r.read_u32::<LittleEndian>()? as usize;
    let grid = TorusGrid::new(d, n).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let mut fields = Vec::with_capacity(nfields);
    for _ in 0..nfields {
        let name_len = r.read_u32::<LittleEndian>()? as usize;
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|e| anyhow!("{}: field name not utf-8: {e}", path.display()))?;
        let mut values = vec![0.0f64; grid.len()];
        r.read_f64_into::<LittleEndian>(&mut values)?;
        fields.push((
            name,
            ScalarField::new(grid.clone(), values)
                .map_err(|e| anyhow!("{}: {e}", path.display()))?,
        ));
    }
    Ok(Snapshot { t, grid, fields })
}

/// CSV mirror of a 1D snapshot: `x` column followed by one column per field.
pub fn write_csv_mirror(path: &Path, snap: &Snapshot) -> Result<()> {
    if snap.grid.dim() != 1 {
        return Ok(());
    }
    let file = std::fs::File::create(path)
        .with_context(|| format!("creating csv mirror {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write!(w, "x")?;
    for (name, _) in &snap.fields {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for j in 0..snap.grid.n() {
        write!(w, "{}", snap.grid.node(j))?;
        for (_, field) in &snap.fields {
            write!(w, ",{}", field.values()[j])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
