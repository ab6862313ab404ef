//! On-disk formats: little-endian binary matrices, CSV tables, and the
//! snapshot directory layout shared by the full-order and reduced runs.

use crate::error::{Result, VivError};
use crate::mesh::Vec2;
use crate::structure::ForceResult;
use nalgebra::DMatrix;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

const MATRIX_MAGIC: &[u8; 4] = b"VIVM";
const MATRIX_VERSION: u32 = 1;

/// Binary matrix: magic, version, rows, cols (u64 LE), then column-major f64.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&MATRIX_VERSION.to_le_bytes())?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for v in m.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let err = |msg: &str| VivError::Format {
        path: path.display().to_string(),
        msg: msg.into(),
    };
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(err("bad magic"));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != MATRIX_VERSION {
        return Err(err("unsupported matrix version"));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let rows = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let cols = u64::from_le_bytes(b8) as usize;
    let mut data = vec![0.0f64; rows * cols];
    for v in &mut data {
        r.read_exact(&mut b8)?;
        *v = f64::from_le_bytes(b8);
    }
    Ok(DMatrix::from_vec(rows, cols, data))
}

/// CSV with a header row; numbers written in full-precision scientific form
/// so repeated runs are bit-identical.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a CSV written by `write_csv`; returns (header, rows).
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| VivError::Format {
            path: path.display().to_string(),
            msg: "empty csv".into(),
        })??
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| VivError::Format {
            path: path.display().to_string(),
            msg: format!("bad number: {e}"),
        })?);
    }
    Ok((header, rows))
}

/// Column of a CSV table by header name.
pub fn csv_column(header: &[String], rows: &[Vec<f64>], name: &str) -> Result<Vec<f64>> {
    let idx = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| VivError::Config(format!("csv has no column '{name}'")))?;
    Ok(rows.iter().map(|r| r[idx]).collect())
}

/// One exported flow state.
#[derive(Debug, Clone)]
pub struct SnapshotRecord {
    pub time: f64,
    /// Stacked velocity (x components then y components), length 2*n_cells.
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    /// Stacked point displacement from the reference mesh, length 2*n_points.
    pub displacement: Vec<f64>,
    pub y: f64,
    pub y_dot: f64,
    pub forces: ForceResult,
}

impl SnapshotRecord {
    pub fn displacement_vecs(&self) -> Vec<Vec2> {
        let n = self.displacement.len() / 2;
        (0..n)
            .map(|i| Vec2::new(self.displacement[i], self.displacement[n + i]))
            .collect()
    }
}

/// Write snapshots as one matrix file per field per record plus a manifest
/// carrying times, oscillator state, forces and shapes.
pub fn write_snapshots(dir: &Path, records: &[SnapshotRecord]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        let u = DMatrix::from_column_slice(rec.u.len(), 1, &rec.u);
        let p = DMatrix::from_column_slice(rec.p.len(), 1, &rec.p);
        let d = DMatrix::from_column_slice(rec.displacement.len(), 1, &rec.displacement);
        write_matrix(&dir.join(format!("u_{i:05}.bin")), &u)?;
        write_matrix(&dir.join(format!("p_{i:05}.bin")), &p)?;
        write_matrix(&dir.join(format!("d_{i:05}.bin")), &d)?;
        manifest.push(vec![
            i as f64,
            rec.time,
            rec.y,
            rec.y_dot,
            rec.forces.cl,
            rec.forces.cd,
            rec.forces.fy,
            rec.u.len() as f64,
            rec.p.len() as f64,
            rec.displacement.len() as f64,
        ]);
    }
    write_csv(
        &dir.join("manifest.csv"),
        &[
            "index", "time", "y", "y_dot", "cl", "cd", "fy", "n_u", "n_p", "n_d",
        ],
        &manifest,
    )
}

pub fn read_snapshots(dir: &Path) -> Result<Vec<SnapshotRecord>> {
    let (header, rows) = read_csv(&dir.join("manifest.csv"))?;
    let times = csv_column(&header, &rows, "time")?;
    let ys = csv_column(&header, &rows, "y")?;
    let ydots = csv_column(&header, &rows, "y_dot")?;
    let cls = csv_column(&header, &rows, "cl")?;
    let cds = csv_column(&header, &rows, "cd")?;
    let fys = csv_column(&header, &rows, "fy")?;
    let mut out = Vec::with_capacity(rows.len());
    for i in 0..rows.len() {
        let u = read_matrix(&dir.join(format!("u_{i:05}.bin")))?;
        let p = read_matrix(&dir.join(format!("p_{i:05}.bin")))?;
        let d = read_matrix(&dir.join(format!("d_{i:05}.bin")))?;
        out.push(SnapshotRecord {
            time: times[i],
            u: u.as_slice().to_vec(),
            p: p.as_slice().to_vec(),
            displacement: d.as_slice().to_vec(),
            y: ys[i],
            y_dot: ydots[i],
            forces: ForceResult {
                fx: 0.0,
                fy: fys[i],
                cl: cls[i],
                cd: cds[i],
            },
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotField {
    Velocity,
    Pressure,
    Displacement,
}

/// Stack snapshot fields into a dof x n matrix.
pub fn snapshot_matrix(records: &[SnapshotRecord], field: SnapshotField) -> DMatrix<f64> {
    let col = |r: &SnapshotRecord| -> &[f64] {
        match field {
            SnapshotField::Velocity => &r.u,
            SnapshotField::Pressure => &r.p,
            SnapshotField::Displacement => &r.displacement,
        }
    };
    let dof = records.first().map_or(0, |r| col(r).len());
    let mut m = DMatrix::<f64>::zeros(dof, records.len());
    for (j, r) in records.iter().enumerate() {
        m.column_mut(j).copy_from_slice(col(r));
    }
    m
}

/// Directory layout of a case.
pub struct CasePaths {
    pub root: PathBuf,
}

impl CasePaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
    pub fn config(&self) -> PathBuf {
        self.root.join("case.cfg")
    }
    pub fn mesh(&self) -> PathBuf {
        self.root.join("mesh.txt")
    }
    pub fn forces(&self) -> PathBuf {
        self.root.join("forces.csv")
    }
    pub fn motion(&self) -> PathBuf {
        self.root.join("motion.csv")
    }
    pub fn snapshots(&self) -> PathBuf {
        self.root.join("snapshots")
    }
    pub fn pod(&self) -> PathBuf {
        self.root.join("pod")
    }
    pub fn rom_forces(&self) -> PathBuf {
        self.root.join("rom_forces.csv")
    }
    pub fn rom_motion(&self) -> PathBuf {
        self.root.join("rom_motion.csv")
    }
    pub fn rom_coeffs(&self) -> PathBuf {
        self.root.join("rom_coeffs.csv")
    }
    pub fn rom_snapshots(&self) -> PathBuf {
        self.root.join("rom_snapshots")
    }
    pub fn report(&self) -> PathBuf {
        self.root.join("report")
    }
    pub fn resolved_config(&self) -> PathBuf {
        self.root.join("case_resolved.cfg")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = std::env::temp_dir().join("vivrom_io_matrix");
        std::fs::create_dir_all(&dir).unwrap();
        let m = DMatrix::from_fn(7, 3, |i, j| (i as f64 * 1.31).sin() * (j as f64 + 0.5));
        let path = dir.join("m.bin");
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(m, back);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join("vivrom_io_csv");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let rows = vec![vec![1.0, 2.5e-7], vec![-3.0, 4.0]];
        write_csv(&path, &["a", "b"], &rows).unwrap();
        let (header, back) = read_csv(&path).unwrap();
        assert_eq!(header, vec!["a", "b"]);
        assert_eq!(back, rows);
        assert_eq!(csv_column(&header, &back, "b").unwrap(), vec![2.5e-7, 4.0]);
        std::fs::remove_dir_all(&dir).ok();
    }
}
